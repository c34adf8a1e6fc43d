use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::csv::{read_components, read_features, read_losses, read_prior};
use crate::controllers::{FeatureMatrix, PriorChannel};
use crate::cv::CvData;
use crate::loss::assemble_loss;
use crate::{Error, LossComponents, LossMatrix, Result, Weights};

/// Input files of one dataset. Exactly one of `losses` and `components`
/// must be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub features: PathBuf,
    pub losses: Option<PathBuf>,
    pub components: Option<PathBuf>,
    pub prior: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub features: FeatureMatrix,
    pub losses: LossMatrix,
    pub components: Option<LossComponents>,
    pub direct_correct: Option<Vec<bool>>,
    pub prior: Option<PriorChannel>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: FeatureMatrix, losses: LossMatrix) -> Result<Self> {
        let d = Self { name: name.into(), features, losses, components: None, direct_correct: None, prior: None };
        d.validate()?;
        Ok(d)
    }

    pub fn with_direct_correct(mut self, c: Vec<bool>) -> Result<Self> {
        self.direct_correct = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn with_prior(mut self, p: PriorChannel) -> Result<Self> {
        self.prior = Some(p);
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.losses.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.losses.n();
        let check = |what: &str, m: usize| {
            if m == n {
                Ok(())
            } else {
                Err(Error::Shape(format!("{what} has {m} rows but the loss matrix has {n}")))
            }
        };
        check("the feature file", self.features.n())?;
        if let Some(c) = &self.direct_correct {
            check("the correctness column", c.len())?;
        }
        if let Some(p) = &self.prior {
            check("the prior file", p.len())?;
        }
        Ok(())
    }

    pub fn cv_data(&self) -> CvData<'_> {
        CvData { features: &self.features, losses: &self.losses, prior: self.prior.as_ref() }
    }

    pub fn require_direct_correct(&self) -> Result<&[bool]> {
        self.direct_correct
            .as_deref()
            .ok_or_else(|| Error::invalid("direct correctness is unknown: supply a components file or a `c_direct` loss column"))
    }
}

pub fn load_dataset(paths: &DatasetPaths, weights: &Weights) -> Result<Dataset> {
    let features = read_features(&paths.features)?;
    let name = dataset_name(&paths.features);
    let (losses, components, direct_correct) = match (&paths.losses, &paths.components) {
        (Some(l), None) => {
            let (m, c) = read_losses(l)?;
            (m, None, c)
        }
        (None, Some(c)) => {
            let comps = read_components(c)?;
            let m = assemble_loss(&comps, weights)?;
            let dc = comps.direct_correct();
            (m, Some(comps), Some(dc))
        }
        (Some(_), Some(_)) => return Err(Error::invalid("give either a loss file or a components file, not both")),
        (None, None) => return Err(Error::invalid("a loss file or a components file is required")),
    };
    let prior = paths.prior.as_deref().map(read_prior).transpose()?;
    let d = Dataset { name, features, losses, components, direct_correct, prior };
    d.validate()?;
    Ok(d)
}

/// The feature file's stem, or its directory's name for a generic stem.
fn dataset_name(features: &std::path::Path) -> String {
    let stem = features.file_stem().map(|s| s.to_string_lossy().into_owned());
    let parent = features.parent().and_then(|p| p.file_name()).map(|s| s.to_string_lossy().into_owned());
    match (stem, parent) {
        (Some(s), Some(p)) if s == "features" => p,
        (Some(s), _) => s,
        _ => "dataset".into(),
    }
}
