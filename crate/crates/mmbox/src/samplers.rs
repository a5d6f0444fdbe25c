//! Seeded Monte Carlo generation of finite mm-spaces approximating the model
//! spaces, plus empirical ball volumes and concentration curves.
//!
//! Determinism contract: an identical [`SampleConfig`] produces a
//! byte-identical space. Every sample point draws from its own counter-keyed
//! ChaCha stream, so generation order cannot leak into the output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::funcspace::{levy_tail_mass, observable_diameter, ObservableDiameterSearch};
use crate::modelgeom::hamming_distance_masks;
use crate::scalar::Real;
use crate::space::{pushforward, FiniteMMSpace, SampleProvenance, SquareMatrix};

/// Hard cap on atoms carrying a full distance matrix.
pub const MAX_ATOMS: usize = 4096;

/// Cube dimension beyond which exhaustive vertex enumeration is refused.
pub const HAMMING_EXHAUSTIVE_LIMIT: usize = 16;

/// Metric put on sampled rotation groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoMetric {
    /// Hilbert-Schmidt distance ||A - B||_F; the certified choice.
    Frobenius,
    /// Bi-invariant Riemannian distance ||Log(A^T B)||_F. NOT the metric the
    /// diameter certificates are stated for.
    Geodesic,
}

impl SoMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            SoMetric::Frobenius => "frobenius",
            SoMetric::Geodesic => "geodesic",
        }
    }
}

/// What to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    /// Unit sphere S^n, geodesic distance in [0, pi].
    Sphere { n: usize },
    /// CP^n with Fubini-Study distance arccos |<z, w>| in [0, pi/2].
    ComplexProjective { n: usize },
    /// SO(n) under Haar measure.
    SpecialOrthogonal { n: usize, metric: SoMetric },
    /// All 2^n cube vertices with mass 2^-n (count is ignored).
    HammingExhaustive { n: usize },
    /// Uniformly sampled cube vertices.
    HammingSampled { n: usize },
}

impl SampleKind {
    pub fn kind_str(&self) -> &'static str {
        match self {
            SampleKind::Sphere { .. } => "sphere",
            SampleKind::ComplexProjective { .. } => "cp",
            SampleKind::SpecialOrthogonal { .. } => "so",
            SampleKind::HammingExhaustive { .. } => "hamming-exhaustive",
            SampleKind::HammingSampled { .. } => "hamming",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            SampleKind::Sphere { n }
            | SampleKind::ComplexProjective { n }
            | SampleKind::SpecialOrthogonal { n, .. }
            | SampleKind::HammingExhaustive { n }
            | SampleKind::HammingSampled { n } => n,
        }
    }
}

/// Deterministic sampling request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    pub kind: SampleKind,
    pub count: usize,
    pub seed: u64,
}

fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vector<T: Real>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Uniform point on S^(ambient-1) embedded in R^ambient.
pub(crate) fn unit_sphere_point<T: Real>(rng: &mut ChaCha8Rng, ambient: usize) -> Vec<T> {
    loop {
        let mut v = gaussian_vector::<T>(rng, ambient);
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::of(1e-12) {
            for x in &mut v {
                *x = *x / norm;
            }
            return v;
        }
    }
}

/// Uniform point on the unit sphere of C^ambient, as (re, im) pairs.
pub(crate) fn unit_complex_point<T: Real>(rng: &mut ChaCha8Rng, ambient: usize) -> Vec<(T, T)> {
    loop {
        let raw = gaussian_vector::<T>(rng, 2 * ambient);
        let mut v: Vec<(T, T)> = raw.chunks(2).map(|c| (c[0], c[1])).collect();
        let norm = v
            .iter()
            .map(|&(re, im)| re * re + im * im)
            .sum::<T>()
            .sqrt();
        if norm > T::of(1e-12) {
            for (re, im) in &mut v {
                *re = *re / norm;
                *im = *im / norm;
            }
            return v;
        }
    }
}

/// Geodesic distance on the sphere from unit vectors.
pub fn sphere_geodesic<T: Real>(u: &[T], v: &[T]) -> T {
    let dot: T = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    dot.max(-T::one()).min(T::one()).acos()
}

/// Fubini-Study distance arccos |<z, w>| from unit complex vectors.
pub fn cp_geodesic<T: Real>(z: &[(T, T)], w: &[(T, T)]) -> T {
    let mut re = T::zero();
    let mut im = T::zero();
    for (&(a, b), &(c, d)) in z.iter().zip(w) {
        // conj(z) * w
        re = re + a * c + b * d;
        im = im + a * d - b * c;
    }
    let modulus = (re * re + im * im).sqrt();
    modulus.min(T::one()).acos()
}

/// Haar-uniform rotation: Gram-Schmidt of a Gaussian matrix with positive
/// normalization coefficients (the unique QR convention), determinant
/// corrected to +1 by negating the last column.
pub(crate) fn haar_rotation<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<T>> {
    loop {
        let raw: Vec<Vec<T>> = (0..n).map(|_| gaussian_vector::<T>(rng, n)).collect();
        // columns of the sample matrix: raw[r][c] is row r, column c
        let mut cols: Vec<Vec<T>> = (0..n)
            .map(|c| (0..n).map(|r| raw[r][c]).collect())
            .collect();
        if !gram_schmidt(&mut cols) {
            continue;
        }
        let mut q: Vec<Vec<T>> = (0..n)
            .map(|r| (0..n).map(|c| cols[c][r]).collect())
            .collect();
        if det_sign(&q) < T::zero() {
            for row in &mut q {
                row[n - 1] = -row[n - 1];
            }
        }
        return q;
    }
}

/// Modified Gram-Schmidt in place; false when the input is numerically
/// rank-deficient.
fn gram_schmidt<T: Real>(cols: &mut [Vec<T>]) -> bool {
    let n = cols.len();
    for j in 0..n {
        for i in 0..j {
            let proj: T = cols[j]
                .iter()
                .zip(cols[i].iter())
                .map(|(&a, &b)| a * b)
                .sum();
            for (x, &e) in cols[j].iter_mut().zip(cols[i].clone().iter()) {
                *x = *x - proj * e;
            }
        }
        let norm = cols[j].iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm < T::of(1e-10) {
            return false;
        }
        for x in &mut cols[j] {
            *x = *x / norm;
        }
    }
    true
}

/// Determinant sign by Gaussian elimination with partial pivoting.
fn det_sign<T: Real>(m: &[Vec<T>]) -> T {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut sign = T::one();
    for k in 0..n {
        let mut pivot = k;
        for r in (k + 1)..n {
            if a[r][k].abs() > a[pivot][k].abs() {
                pivot = r;
            }
        }
        if a[pivot][k] == T::zero() {
            return T::zero();
        }
        if pivot != k {
            a.swap(pivot, k);
            sign = -sign;
        }
        if a[k][k] < T::zero() {
            sign = -sign;
        }
        for r in (k + 1)..n {
            let factor = a[r][k] / a[k][k];
            for c in k..n {
                a[r][c] = a[r][c] - factor * a[k][c];
            }
        }
    }
    sign
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues<T: Real>(sym: &[Vec<T>]) -> Vec<T> {
    let n = sym.len();
    let mut a: Vec<Vec<T>> = sym.to_vec();
    let tol = T::of(1e-13);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= tol / T::of(n as f64) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * a[p][q]);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Frobenius distance ||A - B||_F.
pub fn so_frobenius<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let mut acc = T::zero();
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            let d = x - y;
            acc = acc + d * d;
        }
    }
    acc.sqrt()
}

/// Bi-invariant geodesic distance ||Log(A^T B)||_F via the rotation angles
/// of the relative rotation.
pub fn so_geodesic<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let n = a.len();
    // rel = A^T B
    let mut rel = vec![vec![T::zero(); n]; n];
    for (i, rel_row) in rel.iter_mut().enumerate() {
        for (j, cell) in rel_row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in 0..n {
                acc = acc + a[k][i] * b[k][j];
            }
            *cell = acc;
        }
    }
    let mut sym = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            sym[i][j] = (rel[i][j] + rel[j][i]) / T::of(2.0);
        }
    }
    let eigs = jacobi_eigenvalues(&sym);
    let mut acc = T::zero();
    for &e in &eigs {
        let angle = e.max(-T::one()).min(T::one()).acos();
        acc = acc + angle * angle;
    }
    acc.sqrt()
}

/// Generates the configured space: uniform atoms of mass 1/N (or 2^-n for
/// the exhaustive cube) with pairwise model distances.
pub fn sample_space<T: Real>(cfg: &SampleConfig) -> Result<FiniteMMSpace<T>> {
    if cfg.count == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    match cfg.kind {
        SampleKind::HammingExhaustive { n } => {
            if n == 0 {
                return Err(Error::Domain("cube dimension must be >= 1".into()));
            }
            if n > HAMMING_EXHAUSTIVE_LIMIT {
                return Err(Error::Size(format!(
                    "exhaustive cube supported up to n = {HAMMING_EXHAUSTIVE_LIMIT}, got {n}"
                )));
            }
            let atoms = 1usize << n;
            if atoms > MAX_ATOMS {
                return Err(Error::Size(format!(
                    "exhaustive cube with 2^{n} = {atoms} atoms exceeds the full-matrix cap {MAX_ATOMS}; sample instead"
                )));
            }
            let dist =
                SquareMatrix::from_fn(atoms, |i, j| hamming_distance_masks(i as u64, j as u64, n))?;
            let w = T::of((atoms as f64).recip());
            let space = FiniteMMSpace::new(vec![w; atoms], dist)?;
            Ok(decorate(space, cfg, None))
        }
        SampleKind::HammingSampled { n } => {
            if n == 0 || n > 64 {
                return Err(Error::Domain("sampled cube supports 1 <= n <= 64".into()));
            }
            check_count(cfg.count)?;
            let masks: Vec<u64> = (0..cfg.count)
                .map(|i| {
                    let mut rng = point_rng(cfg.seed, i as u64);
                    rng.gen::<u64>() & mask_of(n)
                })
                .collect();
            let dist =
                SquareMatrix::from_fn(cfg.count, |i, j| hamming_distance_masks(masks[i], masks[j], n))?;
            let space = uniform_space(cfg.count, dist)?;
            Ok(decorate(space, cfg, None))
        }
        SampleKind::Sphere { n } => {
            if n == 0 {
                return Err(Error::Domain("sphere dimension must be >= 1".into()));
            }
            check_count(cfg.count)?;
            let pts: Vec<Vec<T>> = (0..cfg.count)
                .map(|i| unit_sphere_point(&mut point_rng(cfg.seed, i as u64), n + 1))
                .collect();
            let dist = SquareMatrix::from_fn(cfg.count, |i, j| sphere_geodesic(&pts[i], &pts[j]))?;
            let space = uniform_space(cfg.count, dist)?;
            Ok(decorate(space, cfg, None))
        }
        SampleKind::ComplexProjective { n } => {
            if n == 0 {
                return Err(Error::Domain("projective dimension must be >= 1".into()));
            }
            check_count(cfg.count)?;
            let pts: Vec<Vec<(T, T)>> = (0..cfg.count)
                .map(|i| unit_complex_point(&mut point_rng(cfg.seed, i as u64), n + 1))
                .collect();
            let dist = SquareMatrix::from_fn(cfg.count, |i, j| cp_geodesic(&pts[i], &pts[j]))?;
            let space = uniform_space(cfg.count, dist)?;
            Ok(decorate(space, cfg, None))
        }
        SampleKind::SpecialOrthogonal { n, metric } => {
            if n < 2 {
                return Err(Error::Domain("SO(n) sampling needs n >= 2".into()));
            }
            check_count(cfg.count)?;
            let mats: Vec<Vec<Vec<T>>> = (0..cfg.count)
                .map(|i| haar_rotation(&mut point_rng(cfg.seed, i as u64), n))
                .collect();
            let dist = SquareMatrix::from_fn(cfg.count, |i, j| match metric {
                SoMetric::Frobenius => so_frobenius(&mats[i], &mats[j]),
                SoMetric::Geodesic => so_geodesic(&mats[i], &mats[j]),
            })?;
            let space = uniform_space(cfg.count, dist)?;
            Ok(decorate(space, cfg, Some(metric.as_str())))
        }
    }
}

fn mask_of(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_count(count: usize) -> Result<()> {
    if count > MAX_ATOMS {
        return Err(Error::Size(format!(
            "{count} atoms exceeds the full-matrix cap {MAX_ATOMS}"
        )));
    }
    Ok(())
}

fn uniform_space<T: Real>(count: usize, dist: SquareMatrix<T>) -> Result<FiniteMMSpace<T>> {
    let w = T::one() / T::of(count as f64);
    FiniteMMSpace::new(vec![w; count], dist)
}

fn decorate<T: Real>(
    space: FiniteMMSpace<T>,
    cfg: &SampleConfig,
    metric: Option<&str>,
) -> FiniteMMSpace<T> {
    let n = cfg.kind.n();
    let count = match cfg.kind {
        SampleKind::HammingExhaustive { n } => 1usize << n,
        _ => cfg.count,
    };
    let label = format!(
        "{}(n={}, N={}, seed={})",
        cfg.kind.kind_str(),
        n,
        count,
        cfg.seed
    );
    space
        .with_label(label)
        .with_provenance(SampleProvenance {
            kind: cfg.kind.kind_str().to_string(),
            n,
            count,
            seed: cfg.seed,
            metric: metric.map(str::to_string),
        })
}

/// One sample of the empirical ball-volume curve.
#[derive(Clone, Copy, Debug)]
pub struct BallVolumePoint<T> {
    pub radius: T,
    /// Mass-weighted mean over centers of the ball mass at `radius`.
    pub mean: T,
    /// Mass-weighted variance across centers; a uniformity diagnostic.
    pub center_variance: T,
}

/// Fraction of mass within distance r, averaged over all centers.
pub fn empirical_ball_volume<T: Real>(
    space: &FiniteMMSpace<T>,
    radius: T,
) -> Result<BallVolumePoint<T>> {
    if !space.is_probability(T::of(1e-9)) {
        return Err(Error::Precondition(
            "empirical ball volumes require a probability space".into(),
        ));
    }
    if !(radius >= T::zero()) {
        return Err(Error::Domain("radius must be nonnegative".into()));
    }
    let n = space.n_atoms();
    let mut mean = T::zero();
    let mut second = T::zero();
    for i in 0..n {
        let mut ball = T::zero();
        for j in 0..n {
            if space.dist(i, j) <= radius {
                ball = ball + space.weight(j);
            }
        }
        let w = space.weight(i);
        mean = mean + w * ball;
        second = second + w * ball * ball;
    }
    Ok(BallVolumePoint {
        radius,
        mean,
        center_variance: (second - mean * mean).max(T::zero()),
    })
}

/// One row of a concentration experiment.
#[derive(Clone, Debug)]
pub struct ConcentrationRow<T> {
    pub kind: String,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub observable_diameter: T,
    /// Tail mass of the witness around the median of its pushforward at
    /// eps = kappa.
    pub witness_tail_mass: T,
}

/// Table of observable-diameter estimates across configurations, with a
/// monotone-trend diagnostic.
#[derive(Clone, Debug)]
pub struct ConcentrationCurve<T> {
    pub kappa: T,
    pub rows: Vec<ConcentrationRow<T>>,
    pub strictly_decreasing: bool,
}

pub fn concentration_curve<T: Real>(
    configs: &[SampleConfig],
    kappa: T,
    search: &ObservableDiameterSearch<T>,
) -> Result<ConcentrationCurve<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::Domain("kappa must be positive".into()));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let space = sample_space::<T>(cfg)?;
        let (value, witness) = observable_diameter(&space, kappa, search)?;
        let center = pushforward(&space, &witness)?.median();
        let tail = levy_tail_mass(&space, &witness, center, kappa)?;
        rows.push(ConcentrationRow {
            kind: cfg.kind.kind_str().to_string(),
            n: cfg.kind.n(),
            count: space.n_atoms(),
            seed: cfg.seed,
            observable_diameter: value,
            witness_tail_mass: tail,
        });
    }
    let strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].observable_diameter < w[0].observable_diameter);
    Ok(ConcentrationCurve {
        kappa,
        rows,
        strictly_decreasing,
    })
}

/// Exact tail of the normalized binomial distance profile of the cube:
/// sum of C(n,k)/2^n over k with |k/n - center| >= eps. Uses the same
/// floating-point predicate as the atom-level computation.
pub fn binomial_distance_tail<T: Real>(n: usize, center: T, eps: T) -> Result<T> {
    if n == 0 || n > 120 {
        return Err(Error::Domain("binomial tail supports 1 <= n <= 120".into()));
    }
    let mut binom: Vec<u128> = vec![1];
    for row in 1..=n {
        let mut next = vec![1u128; row + 1];
        for k in 1..row {
            next[k] = binom[k - 1] + binom[k];
        }
        binom = next;
    }
    let denom = T::of(2.0).powi(n as i32);
    let mut tail = T::zero();
    for (k, &c) in binom.iter().enumerate() {
        let value = T::of(k as f64) / T::of(n as f64);
        if (value - center).abs() >= eps {
            tail = tail + T::of(c as f64) / denom;
        }
    }
    Ok(tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn cfg(kind: SampleKind, count: usize, seed: u64) -> SampleConfig {
        SampleConfig { kind, count, seed }
    }

    #[test]
    fn determinism_byte_identical() {
        let c = cfg(SampleKind::Sphere { n: 3 }, 40, 99);
        let a: FiniteMMSpace<f64> = sample_space(&c).unwrap();
        let b: FiniteMMSpace<f64> = sample_space(&c).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c2 = cfg(SampleKind::Sphere { n: 3 }, 40, 100);
        let d: FiniteMMSpace<f64> = sample_space(&c2).unwrap();
        assert_ne!(a.to_json(), d.to_json());
    }

    #[test]
    fn one_point_space() {
        for kind in [
            SampleKind::Sphere { n: 2 },
            SampleKind::ComplexProjective { n: 2 },
            SampleKind::SpecialOrthogonal {
                n: 3,
                metric: SoMetric::Frobenius,
            },
            SampleKind::HammingSampled { n: 6 },
        ] {
            let s: FiniteMMSpace<f64> = sample_space(&cfg(kind, 1, 0)).unwrap();
            assert_eq!(s.n_atoms(), 1);
            assert!(s.is_probability(1e-12));
        }
    }

    #[test]
    fn hamming_exhaustive_small() {
        let s: FiniteMMSpace<f64> =
            sample_space(&cfg(SampleKind::HammingExhaustive { n: 2 }, 1, 0)).unwrap();
        assert_eq!(s.n_atoms(), 4);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..4 {
            for j in 0..4 {
                seen.insert((s.dist(i, j) * 2.0) as i64);
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(s.is_probability(1e-12));

        assert!(matches!(
            sample_space::<f64>(&cfg(SampleKind::HammingExhaustive { n: 17 }, 1, 0)),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            sample_space::<f64>(&cfg(SampleKind::HammingExhaustive { n: 13 }, 1, 0)),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn atom_cap_enforced() {
        assert!(matches!(
            sample_space::<f64>(&cfg(SampleKind::Sphere { n: 2 }, MAX_ATOMS + 1, 0)),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn sphere_distances_in_range_and_mean() {
        let s: FiniteMMSpace<f64> = sample_space(&cfg(SampleKind::Sphere { n: 1 }, 1500, 5)).unwrap();
        let n = s.n_atoms();
        let mut sum = 0.0;
        let mut count = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = s.dist(i, j);
                assert!((0.0..=PI).contains(&d));
                sum += d;
                count += 1.0;
            }
        }
        // uniform arcs on the circle: analytic mean pi/2; the pair-mean is a
        // degenerate U-statistic so sampling error is tiny
        assert!(
            (sum / count - PI / 2.0).abs() < 0.02 * PI / 2.0,
            "mean = {}",
            sum / count
        );
    }

    #[test]
    fn cp_distances_in_range() {
        let s: FiniteMMSpace<f64> =
            sample_space(&cfg(SampleKind::ComplexProjective { n: 2 }, 60, 3)).unwrap();
        for i in 0..s.n_atoms() {
            for j in 0..s.n_atoms() {
                assert!(s.dist(i, j) <= PI / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn haar_rotation_is_special_orthogonal() {
        for n in 2..=6 {
            let mut rng = point_rng(11, n as u64);
            let q: Vec<Vec<f64>> = haar_rotation(&mut rng, n);
            // orthonormal columns
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|r| q[r][a] * q[r][b]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10, "n={n} ({a},{b}) dot={dot}");
                }
            }
            assert!(det_sign(&q) > 0.0);
        }
    }

    #[test]
    fn so_frobenius_within_diameter() {
        use crate::modelgeom::so_diameter;
        for n in [2usize, 3, 4, 5] {
            let s: FiniteMMSpace<f64> = sample_space(&cfg(
                SampleKind::SpecialOrthogonal {
                    n,
                    metric: SoMetric::Frobenius,
                },
                120,
                7,
            ))
            .unwrap();
            let diam = so_diameter::<f64>(n).unwrap();
            assert!(s.max_distance() <= diam + 1e-9, "n={n}");
        }
    }

    #[test]
    fn so_geodesic_matches_planar_rotation() {
        // Explicit SO(2) rotations: geodesic distance is sqrt(2) * |angle|.
        let rot = |t: f64| vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]];
        let a = rot(0.3);
        let b = rot(1.1);
        let d = so_geodesic(&a, &b);
        assert!((d - 2.0_f64.sqrt() * 0.8).abs() < 1e-9, "d = {d}");
        // geodesic dominates chordal
        assert!(d >= so_frobenius(&a, &b) - 1e-12);
    }

    #[test]
    fn so3_trace_mean_matches_haar_density() {
        // With the angle density (1 - cos t)/pi on [0, pi], the Haar mean of
        // the trace 1 + 2 cos t integrates to exactly 0.
        let n = 2000;
        let mut sum = 0.0;
        for i in 0..n {
            let q: Vec<Vec<f64>> = haar_rotation(&mut point_rng(123, i), 3);
            sum += q[0][0] + q[1][1] + q[2][2];
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 0.05, "mean trace = {mean}");
    }

    #[test]
    fn empirical_ball_volume_basics() {
        let s: FiniteMMSpace<f64> = sample_space(&cfg(SampleKind::Sphere { n: 2 }, 300, 2)).unwrap();
        let max = s.max_distance();
        let full = empirical_ball_volume(&s, max).unwrap();
        assert!((full.mean - 1.0).abs() < 1e-12);
        let zero = empirical_ball_volume(&s, 0.0).unwrap();
        assert!((zero.mean - 1.0 / 300.0).abs() < 1e-12);

        let half = empirical_ball_volume(&s, PI / 2.0).unwrap();
        assert!((half.mean - 0.5).abs() < 0.05, "mean = {}", half.mean);

        let bad = FiniteMMSpace::new(
            vec![2.0, 2.0],
            SquareMatrix::from_fn(2, |_, _| 1.0).unwrap(),
        )
        .unwrap();
        assert!(empirical_ball_volume(&bad, 1.0).is_err());
    }

    #[test]
    fn binomial_tail_values() {
        // n = 10, center 1/2, eps = 0.1: mass outside k = 5 is 1 - 252/1024
        let t = binomial_distance_tail::<f64>(10, 0.5, 0.1).unwrap();
        assert_eq!(t, 1.0 - 252.0 / 1024.0);
        // n = 100: frozen exact integer tail / 2^100
        let t = binomial_distance_tail::<f64>(100, 0.5, 0.1).unwrap();
        let exact = 72114023225732984196677525200.0_f64 / 2.0_f64.powi(100);
        assert!((t - exact).abs() < 1e-15);
    }

    #[test]
    fn concentration_one_point_rows_are_zero() {
        let configs = [
            cfg(SampleKind::Sphere { n: 2 }, 1, 0),
            cfg(SampleKind::Sphere { n: 8 }, 1, 0),
        ];
        let curve = concentration_curve::<f64>(
            &configs,
            0.1,
            &ObservableDiameterSearch::distance_functions_only(),
        )
        .unwrap();
        assert!(curve.rows.iter().all(|r| r.observable_diameter == 0.0));
    }

    #[test]
    fn concentration_hamming_exhaustive_decreases() {
        let configs = [
            cfg(SampleKind::HammingExhaustive { n: 4 }, 1, 0),
            cfg(SampleKind::HammingExhaustive { n: 8 }, 1, 0),
            cfg(SampleKind::HammingExhaustive { n: 10 }, 1, 0),
        ];
        let curve = concentration_curve::<f64>(
            &configs,
            0.1,
            &ObservableDiameterSearch::distance_functions_only(),
        )
        .unwrap();
        assert!(curve.strictly_decreasing, "{:?}", curve.rows);
    }
}
