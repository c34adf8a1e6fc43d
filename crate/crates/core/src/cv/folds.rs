use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

/// Splits `0..n` into `kappa` disjoint folds of near-equal size from a
/// seeded permutation. The first `n % kappa` folds hold one extra index;
/// indices inside each fold are sorted.
pub fn make_folds(n: usize, kappa: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if kappa < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {kappa}")));
    }
    if n < kappa {
        return Err(Error::invalid(format!("cannot split {n} rows into {kappa} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::rng(seed));
    let base = n / kappa;
    let extra = n % kappa;
    let mut folds = Vec::with_capacity(kappa);
    let mut start = 0;
    for f in 0..kappa {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// Every index not in `folds[held_out]`, ascending.
pub fn complement(folds: &[Vec<usize>], held_out: usize) -> Vec<usize> {
    let mut rest: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != held_out)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    rest.sort_unstable();
    rest
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_index_range() {
        let f = make_folds(10, 5, 3).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(f.iter().all(|x| x.len() == 2));
        assert_eq!(f, make_folds(10, 5, 3).unwrap());
        assert_ne!(f, make_folds(10, 5, 4).unwrap());
    }

    #[test]
    fn sizes_differ_by_at_most_one() {
        let sizes: Vec<usize> = make_folds(203, 5, 0).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, [41, 41, 41, 40, 40]);
        let f = make_folds(203, 5, 0).unwrap();
        assert_eq!(complement(&f, 0).len(), 162);
        assert!(make_folds(3, 5, 0).is_err());
        assert!(make_folds(3, 1, 0).is_err());
    }
}
