//! Transport plans between atomic measures: the discrete surrogate for a
//! pair of parameters in the box-distance infimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::{FiniteMMSpace, SemiMetricPair, SquareMatrix};

/// One cell of a coupling: `mass` transported from source atom to target atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanCell<T> {
    pub source: usize,
    pub target: usize,
    pub mass: T,
}

/// A coupling of two atomic measures with equal totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan<T> {
    cells: Vec<PlanCell<T>>,
}

/// Marginal tolerance for plan validation.
pub const PLAN_MARGINAL_TOL: f64 = 1e-12;

impl<T: Real> TransportPlan<T> {
    /// Builds a plan and checks margins against the two weight vectors.
    pub fn new(cells: Vec<PlanCell<T>>, x_weights: &[T], y_weights: &[T]) -> Result<Self> {
        let plan = Self { cells };
        plan.validate(x_weights, y_weights)?;
        Ok(plan)
    }

    pub fn cells(&self) -> &[PlanCell<T>] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn validate(&self, x_weights: &[T], y_weights: &[T]) -> Result<()> {
        let tol = T::of(PLAN_MARGINAL_TOL);
        let scale = T::one().max(x_weights.iter().copied().sum());
        let mut row = vec![T::zero(); x_weights.len()];
        let mut col = vec![T::zero(); y_weights.len()];
        for (k, c) in self.cells.iter().enumerate() {
            if c.source >= x_weights.len() || c.target >= y_weights.len() {
                return Err(Error::Domain(format!("cell {k} indexes out of range")));
            }
            if !(c.mass > T::zero()) {
                return Err(Error::Domain(format!("cell {k} mass {} not positive", c.mass)));
            }
            row[c.source] = row[c.source] + c.mass;
            col[c.target] = col[c.target] + c.mass;
        }
        for (i, (&have, &want)) in row.iter().zip(x_weights).enumerate() {
            if (have - want).abs() > tol * scale {
                return Err(Error::Precondition(format!(
                    "row {i} mass {have} does not match source weight {want}"
                )));
            }
        }
        for (j, (&have, &want)) in col.iter().zip(y_weights).enumerate() {
            if (have - want).abs() > tol * scale {
                return Err(Error::Precondition(format!(
                    "column {j} mass {have} does not match target weight {want}"
                )));
            }
        }
        Ok(())
    }

    /// Identity coupling of a space with itself.
    pub fn identity(space: &FiniteMMSpace<T>) -> Self {
        Self {
            cells: space
                .weights()
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > T::zero())
                .map(|(i, &w)| PlanCell {
                    source: i,
                    target: i,
                    mass: w,
                })
                .collect(),
        }
    }

    /// Uniform equal-mass bijection: atom i of X pairs with `perm[i]` of Y.
    pub fn from_bijection(perm: &[usize], mass_per_atom: T) -> Self {
        Self {
            cells: perm
                .iter()
                .enumerate()
                .map(|(i, &j)| PlanCell {
                    source: i,
                    target: j,
                    mass: mass_per_atom,
                })
                .collect(),
        }
    }

    /// Northwest-corner vertex of the transportation polytope, filling rows
    /// and columns in the given orders.
    pub fn northwest_corner(
        x_weights: &[T],
        y_weights: &[T],
        row_order: &[usize],
        col_order: &[usize],
    ) -> Self {
        let mut remaining_row: Vec<T> = x_weights.to_vec();
        let mut remaining_col: Vec<T> = y_weights.to_vec();
        let mut cells = Vec::new();
        let mut ci = 0usize;
        for &i in row_order {
            let mut need = remaining_row[i];
            while need > T::zero() && ci < col_order.len() {
                let j = col_order[ci];
                let give = need.min(remaining_col[j]);
                if give > T::zero() {
                    cells.push(PlanCell {
                        source: i,
                        target: j,
                        mass: give,
                    });
                    remaining_col[j] = remaining_col[j] - give;
                    need = need - give;
                }
                if remaining_col[j] <= T::zero() {
                    ci += 1;
                } else {
                    break;
                }
            }
            remaining_row[i] = need;
        }
        Self { cells }
    }

    /// Total transported mass.
    pub fn total_mass(&self) -> T {
        self.cells.iter().map(|c| c.mass).sum()
    }

    /// Pulls both metrics back to the plan cells: cell (i,j) against cell
    /// (k,l) compares d_X(i,k) with d_Y(j,l).
    pub fn induced_pair(
        &self,
        x: &FiniteMMSpace<T>,
        y: &FiniteMMSpace<T>,
    ) -> Result<SemiMetricPair<T>> {
        let m = self.cells.len();
        let weights: Vec<T> = self.cells.iter().map(|c| c.mass).collect();
        let d1 = SquareMatrix::from_fn(m, |a, b| {
            x.dist(self.cells[a].source, self.cells[b].source)
        })?;
        let d2 = SquareMatrix::from_fn(m, |a, b| {
            y.dist(self.cells[a].target, self.cells[b].target)
        })?;
        SemiMetricPair::new(weights, d1, d2)
    }

    pub fn as_triples(&self) -> Vec<(usize, usize, T)> {
        self.cells
            .iter()
            .map(|c| (c.source, c.target, c.mass))
            .collect()
    }
}

/// Splits both weight vectors into `cells` equal-mass unit cells when every
/// weight is an integer multiple of total/cells (within `tol` relative).
/// Returns the atom index carried by each unit cell, per side.
pub fn uniform_common_refinement<T: Real>(
    x_weights: &[T],
    y_weights: &[T],
    cells: usize,
    tol: T,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if cells == 0 {
        return None;
    }
    let total: T = x_weights.iter().copied().sum();
    let unit = total / T::of(cells as f64);
    let expand = |weights: &[T]| -> Option<Vec<usize>> {
        let mut owners = Vec::with_capacity(cells);
        for (i, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let ratio = w / unit;
            let count = ratio.round();
            if (ratio - count).abs() > tol * T::of(cells as f64) {
                return None;
            }
            let count = count.to_f64()? as usize;
            for _ in 0..count {
                owners.push(i);
            }
        }
        (owners.len() == cells).then_some(owners)
    };
    Some((expand(x_weights)?, expand(y_weights)?))
}
