//! Two-sided bound reports with replayable witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// What certifies the upper side of a bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperWitness<T> {
    None,
    /// Retained atom subset achieving the value at the stated epsilon.
    RetainedSubset { retained: Vec<usize>, epsilon: T },
    /// Transport plan cells (source, target, mass) plus retained cell indices.
    PlanAndSubset {
        plan: Vec<(usize, usize, T)>,
        retained_cells: Vec<usize>,
        epsilon: T,
    },
    /// Constructive Lipschitz-net bound: worst deviation over the net after
    /// regularization onto the opposite class through `subset`.
    LipschitzNet {
        net_size: usize,
        subset: Vec<usize>,
        max_deviation: T,
    },
}

/// What certifies the lower side of a bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerWitness<T> {
    None,
    /// Exact threshold scan: lower equals upper.
    ExactScan,
    /// Below `lower`, every admissible retained set forces removed mass
    /// above the budget (matching-based cover bound).
    CoverBudget { threshold: T, cover_lower_bound: T },
    /// Ball-volume comparison premise, evaluated quantities recorded.
    VolumeComparison {
        a: T,
        c: T,
        v_x_outer: T,
        v_y_inner: T,
        margin: T,
    },
    /// Diameter-gap certificate for diameter-homogeneous spaces.
    DiameterGap { diam_x: T, diam_y: T },
    /// Hardest net function vs. the opposite class net.
    NetSeparation { hardest_function: usize, separation: T },
}

/// A certified interval [lower, upper] for a box-distance quantity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub lower: T,
    pub upper: T,
    /// Free-form method tags, e.g. "exact-threshold-scan".
    pub methods: Vec<String>,
    pub seed: Option<u64>,
    /// Absolute tolerance under which the invariants were checked.
    pub tolerance: f64,
    pub lower_witness: LowerWitness<T>,
    pub upper_witness: UpperWitness<T>,
}

impl<T: Real> BoundReport<T> {
    pub fn new(
        lower: T,
        upper: T,
        methods: Vec<String>,
        lower_witness: LowerWitness<T>,
        upper_witness: UpperWitness<T>,
    ) -> Result<Self> {
        let report = Self {
            lower,
            upper,
            methods,
            seed: None,
            tolerance: 1e-9,
            lower_witness,
            upper_witness,
        };
        report.validate()?;
        Ok(report)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn validate(&self) -> Result<()> {
        let tol = T::of(self.tolerance);
        if !(self.lower >= T::zero()) {
            return Err(Error::InvalidSpace(format!(
                "negative lower bound {}",
                self.lower
            )));
        }
        if self.lower > self.upper + tol {
            return Err(Error::InvalidSpace(format!(
                "lower {} exceeds upper {}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Shifts both sides by the additive mass-normalization term.
    pub fn shifted(mut self, term: T, tag: &str) -> Self {
        self.lower = self.lower + term;
        self.upper = self.upper + term;
        self.methods.push(tag.to_string());
        self
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
