//! Finite metric measure spaces and the small value types built on them.
//!
//! A [`FiniteMMSpace`] is the atomic stand-in for a metric measure space: a
//! list of weighted atoms together with a symmetric, zero-diagonal distance
//! matrix. Semimetrics (no triangle inequality) are allowed; callers that
//! need a genuine metric can check and record it with
//! [`FiniteMMSpace::check_metric`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Version tag for the on-disk JSON format.
pub const SPACE_FORMAT_VERSION: u32 = 1;

/// Dense symmetric matrix with zero diagonal, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    /// Builds from full rows, validating shape, symmetry, zero diagonal,
    /// nonnegativity, and finiteness.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch(n, row.len()));
            }
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    /// Builds an `n`-atom matrix by evaluating `f(i, j)` on pairs `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.data[i * n + i] != T::zero() {
                return Err(Error::InvalidSpace(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = self.data[i * n + j];
                if !d.is_finite() || d < T::zero() {
                    return Err(Error::InvalidSpace(format!(
                        "distance ({i},{j}) = {d} is not a finite nonnegative value"
                    )));
                }
                if self.data[i * n + j] != self.data[j * n + i] {
                    return Err(Error::InvalidSpace(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest off-diagonal entry (0 for a one-point matrix).
    pub fn max_entry(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Checks the triangle inequality on all ordered triples within `tol`.
    pub fn satisfies_triangle(&self, tol: T) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, j) > self.get(i, k) + self.get(k, j) + tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Weighted atoms plus a semimetric: the discrete form of (X, d, mu).
#[derive(Clone, Debug)]
pub struct FiniteMMSpace<T> {
    weights: Vec<T>,
    dist: SquareMatrix<T>,
    label: Option<String>,
    /// Set by [`FiniteMMSpace::check_metric`]; `None` when never checked.
    metric_checked: Option<bool>,
    provenance: Option<SampleProvenance>,
}

impl<T: Real> FiniteMMSpace<T> {
    pub fn new(weights: Vec<T>, dist: SquareMatrix<T>) -> Result<Self> {
        if weights.len() != dist.n() {
            return Err(Error::DimensionMismatch(weights.len(), dist.n()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidSpace("empty atom set".into()));
        }
        let mut total = T::zero();
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(Error::InvalidSpace(format!("weight {i} = {w} invalid")));
            }
            total = total + w;
        }
        if total <= T::zero() {
            return Err(Error::Domain("total mass must be positive".into()));
        }
        Ok(Self {
            weights,
            dist,
            label: None,
            metric_checked: None,
            provenance: None,
        })
    }

    pub fn from_rows(weights: Vec<T>, rows: &[Vec<T>]) -> Result<Self> {
        Self::new(weights, SquareMatrix::from_rows(rows)?)
    }

    /// Uniform probability space with the given distance matrix.
    pub fn uniform(dist: SquareMatrix<T>) -> Result<Self> {
        let n = dist.n();
        let w = T::one() / T::of(n as f64);
        Self::new(vec![w; n], dist)
    }

    /// One atom carrying `mass`.
    pub fn one_point(mass: T) -> Result<Self> {
        Self::new(vec![mass], SquareMatrix::from_fn(1, |_, _| T::zero())?)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_provenance(mut self, p: SampleProvenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn dist(&self, i: usize, j: usize) -> T {
        self.dist.get(i, j)
    }

    pub fn dist_matrix(&self) -> &SquareMatrix<T> {
        &self.dist
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn provenance(&self) -> Option<&SampleProvenance> {
        self.provenance.as_ref()
    }

    pub fn max_distance(&self) -> T {
        self.dist.max_entry()
    }

    pub fn is_probability(&self, tol: T) -> bool {
        (self.total_mass() - T::one()).abs() <= tol
    }

    /// Verifies the triangle inequality within `tol` and records the outcome.
    pub fn check_metric(&mut self, tol: T) -> bool {
        let ok = self.dist.satisfies_triangle(tol);
        self.metric_checked = Some(ok);
        ok
    }

    pub fn metric_checked(&self) -> Option<bool> {
        self.metric_checked
    }

    /// The 1-Lipschitz witness d(x_center, .) as a function of atoms.
    pub fn distance_function(&self, center: usize) -> RealFunction<T> {
        RealFunction(self.dist.row(center).to_vec())
    }

    /// Same space with every weight multiplied by `factor` (distances kept).
    pub fn scale_mass(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(Error::Domain(format!("scale factor {factor} must be positive")));
        }
        let mut out = self.clone();
        for w in &mut out.weights {
            *w = *w * factor;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = SpaceFile {
            version: SPACE_FORMAT_VERSION,
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
            dist: self
                .dist
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(|d| d.as_f64()).collect())
                .collect(),
            label: self.label.clone(),
            is_metric: self.metric_checked,
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&file).expect("space serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.version != SPACE_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported space format version {}",
                file.version
            )));
        }
        let weights = file.weights.into_iter().map(T::of).collect();
        let rows: Vec<Vec<T>> = file
            .dist
            .into_iter()
            .map(|r| r.into_iter().map(T::of).collect())
            .collect();
        let mut space = Self::from_rows(weights, &rows)?;
        space.label = file.label;
        space.metric_checked = file.is_metric;
        space.provenance = file.provenance;
        Ok(space)
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    version: u32,
    weights: Vec<f64>,
    dist: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    is_metric: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    provenance: Option<SampleProvenance>,
}

/// How a sampled space was generated; enough to regenerate it bit-for-bit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub kind: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric: Option<String>,
}

/// A real-valued function on the atoms of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct RealFunction<T>(pub(crate) Vec<T>);

impl<T: Real> RealFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("function values must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn constant(value: T, len: usize) -> Self {
        Self(vec![value; len])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.0[i]
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&v| -v).collect())
    }
}

/// An atomic measure on the real line with sorted support.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMeasure1D<T> {
    support: Vec<T>,
    masses: Vec<T>,
}

impl<T: Real> RealMeasure1D<T> {
    pub fn new(support: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::DimensionMismatch(support.len(), masses.len()));
        }
        if support.is_empty() {
            return Err(Error::Domain("empty measure".into()));
        }
        for w in support.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain("support must be strictly increasing".into()));
            }
        }
        if support.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("support must be finite".into()));
        }
        if masses.iter().any(|&m| !m.is_finite() || m <= T::zero()) {
            return Err(Error::Domain("masses must be positive".into()));
        }
        Ok(Self { support, masses })
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    /// Smallest support point whose cumulative mass reaches half the total.
    pub fn median(&self) -> T {
        let half = self.total_mass() / T::of(2.0);
        let mut acc = T::zero();
        for (s, &m) in self.support.iter().zip(&self.masses) {
            acc = acc + m;
            if acc >= half {
                return *s;
            }
        }
        *self.support.last().expect("nonempty measure")
    }
}

/// Image measure f_*(mu): atoms with equal values merge, support is sorted.
pub fn pushforward<T: Real>(
    space: &FiniteMMSpace<T>,
    f: &RealFunction<T>,
) -> Result<RealMeasure1D<T>> {
    if f.len() != space.n_atoms() {
        return Err(Error::DimensionMismatch(space.n_atoms(), f.len()));
    }
    let mut pairs: Vec<(T, T)> = f
        .values()
        .iter()
        .copied()
        .zip(space.weights().iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
    let mut support = Vec::new();
    let mut masses: Vec<T> = Vec::new();
    for (v, w) in pairs {
        match support.last() {
            Some(&s) if s == v => {
                let last = masses.last_mut().expect("aligned");
                *last = *last + w;
            }
            _ => {
                support.push(v);
                masses.push(w);
            }
        }
    }
    // Zero-weight atoms may leave zero-mass points behind; drop them but keep
    // at least one point so the measure stays well formed.
    let mut s2 = Vec::new();
    let mut m2 = Vec::new();
    for (s, m) in support.iter().zip(&masses) {
        if *m > T::zero() {
            s2.push(*s);
            m2.push(*m);
        }
    }
    if s2.is_empty() {
        s2.push(support[0]);
        m2.push(space.total_mass());
    }
    RealMeasure1D::new(s2, m2)
}

/// Two semimetrics over one weighted atom set.
#[derive(Clone, Debug)]
pub struct SemiMetricPair<T> {
    weights: Vec<T>,
    d1: SquareMatrix<T>,
    d2: SquareMatrix<T>,
}

impl<T: Real> SemiMetricPair<T> {
    pub fn new(weights: Vec<T>, d1: SquareMatrix<T>, d2: SquareMatrix<T>) -> Result<Self> {
        if weights.len() != d1.n() {
            return Err(Error::DimensionMismatch(weights.len(), d1.n()));
        }
        if d1.n() != d2.n() {
            return Err(Error::DimensionMismatch(d1.n(), d2.n()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidSpace("empty atom set".into()));
        }
        let mut total = T::zero();
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(Error::InvalidSpace(format!("weight {i} = {w} invalid")));
            }
            total = total + w;
        }
        if total <= T::zero() {
            return Err(Error::Domain("total mass must be positive".into()));
        }
        Ok(Self { weights, d1, d2 })
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn d1(&self) -> &SquareMatrix<T> {
        &self.d1
    }

    pub fn d2(&self) -> &SquareMatrix<T> {
        &self.d2
    }

    /// |d1(i,j) - d2(i,j)|.
    #[inline]
    pub fn discrepancy(&self, i: usize, j: usize) -> T {
        (self.d1.get(i, j) - self.d2.get(i, j)).abs()
    }
}
