//! Serializable descriptions of objectives, as they appear in config files.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::SymMatrix;
use crate::objectives::{random_quadratic, synthetic_blobs, Mlp, Objective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobsDescriptor {
    pub n_per_class: usize,
    pub dim: usize,
    pub n_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Objective description. Seeds left out are filled from the run's global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveDescriptor {
    ScalarQuadratic,
    Quadratic {
        matrix: Vec<Vec<f64>>,
    },
    RandomQuadratic {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Linear {
        c: Vec<f64>,
    },
    Mlp {
        /// Input, hidden and output widths.
        layer_widths: Vec<usize>,
        dataset: BlobsDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_seed: Option<u64>,
    },
}

impl ObjectiveDescriptor {
    /// The sweep network: 2 classes of 500 blobs in 20 dimensions, four hidden
    /// layers of width 64.
    pub fn desk_mlp() -> Self {
        ObjectiveDescriptor::Mlp {
            layer_widths: vec![20, 64, 64, 64, 64, 2],
            dataset: BlobsDescriptor { n_per_class: 500, dim: 20, n_classes: 2, seed: None },
            init_seed: None,
        }
    }

    /// Copy with every unset seed replaced by `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut d = self.clone();
        match &mut d {
            ObjectiveDescriptor::RandomQuadratic { seed: s, .. } => {
                s.get_or_insert(seed);
            }
            ObjectiveDescriptor::Mlp { dataset, init_seed, .. } => {
                dataset.seed.get_or_insert(seed);
                init_seed.get_or_insert(seed);
            }
            _ => {}
        }
        d
    }

    pub fn build(&self, seed: u64) -> Result<Objective> {
        match self.with_seed(seed) {
            ObjectiveDescriptor::ScalarQuadratic => Ok(Objective::ScalarQuadratic),
            ObjectiveDescriptor::Quadratic { matrix } => Objective::quadratic(SymMatrix::from_rows(&matrix)?),
            ObjectiveDescriptor::RandomQuadratic { dim, seed } => random_quadratic(dim, seed.unwrap_or_default()),
            ObjectiveDescriptor::Linear { c } => Objective::linear(c),
            ObjectiveDescriptor::Mlp { layer_widths, dataset, init_seed } => {
                let data = synthetic_blobs(
                    dataset.n_per_class,
                    dataset.dim,
                    dataset.n_classes,
                    dataset.seed.unwrap_or_default(),
                )?;
                Ok(Objective::Mlp(Mlp::new(layer_widths, Arc::new(data), init_seed.unwrap_or_default())?))
            }
        }
    }
}
