//! Real-valued fields over a geometry lattice.

use serde::{Deserialize, Serialize};

use crate::error::{KarlinError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Large,
    Small,
    Combined,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Large => "large",
            Component::Small => "small",
            Component::Combined => "combined",
        }
    }
}

/// Resolved run parameters and counters attached to a field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub geometry: String,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation_m: Option<u64>,
    pub aborted: u64,
    pub clamped: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    /// `E[N]·P(Λ > λ₀)` when a clamp is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamp_exceedance_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin_index: Option<usize>,
    /// Marginal small-jump error bound per grid index (`None` where `μ(A_t) = 0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_bound: Option<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    /// Row-major values.
    pub values: Vec<f64>,
    pub shape: Vec<usize>,
    pub component: Component,
    pub meta: FieldMeta,
}

impl FieldGrid {
    pub fn new(values: Vec<f64>, shape: Vec<usize>, component: Component, meta: FieldMeta) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(KarlinError::InvalidGrid(format!(
                "{} values do not fill shape {:?}",
                values.len(),
                shape
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(KarlinError::InvalidGrid(format!("non-finite value {} at index {bad}", values[bad])));
        }
        Ok(Self {
            values,
            shape,
            component,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a 2-D position; panics on 1-D fields.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        assert_eq!(self.shape.len(), 2, "2-D access on a {}-D field", self.shape.len());
        self.values[i * self.shape[1] + j]
    }
}
