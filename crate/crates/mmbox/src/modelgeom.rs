//! Closed-form geometry of the model spaces: sphere volumes and ball
//! fractions, Bishop/Bishop-Gromov comparison bounds, the volume-comparison
//! threshold solver, diameter formulas for the rotation groups, and the
//! asymptotic constants of the dimension-gap lower bounds.
//!
//! Gamma-function ratios are always combined in log space; see
//! [`crate::special`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{integrate, ln_gamma};

/// Which model family a spec describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sphere,
    ComplexProjective,
    SpecialOrthogonal,
    Hamming,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sphere => "sphere",
            ModelKind::ComplexProjective => "cp",
            ModelKind::SpecialOrthogonal => "so",
            ModelKind::Hamming => "hamming",
        }
    }
}

/// Symbolic descriptor of a model space, carrying the closed-form attributes
/// the certificates need.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpaceSpec<T> {
    pub kind: ModelKind,
    /// Family parameter n (sphere S^n, CP^n, SO(n), {0,1}^n).
    pub n: usize,
    /// Riemannian dimension (n, 2n, n(n-1)/2; bit count for the cube).
    pub manifold_dim: usize,
    /// Ricci lower bound in the (dim-1)*kappa convention, when known.
    pub ricci_lower: Option<T>,
    pub sectional_lower: Option<T>,
    pub total_volume: Option<T>,
    /// Volume ratio vol(N) / vol(S^dim) used by the Bishop upper bound.
    pub a_n: Option<T>,
    pub diameter: T,
    /// Admits a measure-preserving self-map displacing every point by the
    /// diameter (antipodal map, complement map, group translation).
    pub diameter_homogeneous: bool,
}

impl<T: Real> ModelSpaceSpec<T> {
    pub fn sphere(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("sphere dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: ModelKind::Sphere,
            n,
            manifold_dim: n,
            ricci_lower: Some(T::of((n - 1) as f64)),
            sectional_lower: Some(T::one()),
            total_volume: Some(sphere_total_volume(n)?),
            a_n: Some(T::one()),
            diameter: T::PI(),
            diameter_homogeneous: true,
        })
    }

    pub fn complex_projective(n: usize) -> Result<Self> {
        let facts = cp_facts(n)?;
        Ok(Self {
            kind: ModelKind::ComplexProjective,
            n,
            manifold_dim: 2 * n,
            ricci_lower: Some(T::of((2 * n - 1) as f64)),
            sectional_lower: Some(facts.sectional_lower),
            total_volume: Some(facts.volume),
            a_n: Some(facts.a_ratio),
            diameter: facts.diameter,
            diameter_homogeneous: false,
        })
    }

    pub fn special_orthogonal(n: usize) -> Result<Self> {
        let diameter = so_diameter(n)?;
        let dim = n * (n - 1) / 2;
        Ok(Self {
            kind: ModelKind::SpecialOrthogonal,
            n,
            manifold_dim: dim,
            ricci_lower: Some(T::of((n - 1) as f64) / T::of(4.0)),
            sectional_lower: None,
            total_volume: None,
            a_n: None,
            diameter,
            diameter_homogeneous: true,
        })
    }

    pub fn hamming(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("cube dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: ModelKind::Hamming,
            n,
            manifold_dim: n,
            ricci_lower: None,
            sectional_lower: None,
            total_volume: None,
            a_n: None,
            diameter: T::one(),
            diameter_homogeneous: true,
        })
    }
}

/// vol(S^n) = 2 pi^((n+1)/2) / Gamma((n+1)/2), in log space.
pub fn sphere_total_volume<T: Real>(n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::Domain(format!("sphere dimension {n} must be >= 1")));
    }
    let half = T::of((n + 1) as f64) / T::of(2.0);
    let ln_vol = T::of(2.0).ln() + half * T::PI().ln() - ln_gamma(half);
    Ok(ln_vol.exp())
}

/// ln vol(S^n).
pub fn ln_sphere_total_volume<T: Real>(n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::Domain(format!("sphere dimension {n} must be >= 1")));
    }
    let half = T::of((n + 1) as f64) / T::of(2.0);
    Ok(T::of(2.0).ln() + half * T::PI().ln() - ln_gamma(half))
}

/// Normalized measure of a closed geodesic ball of radius r on S^n:
/// the ratio of sine-power integrals, so r = pi gives exactly 1.
pub fn sphere_ball_fraction<T: Real>(n: usize, r: T) -> Result<T> {
    if n < 1 {
        return Err(Error::Domain(format!("sphere dimension {n} must be >= 1")));
    }
    if !(r >= T::zero() && r <= T::PI()) {
        return Err(Error::Domain(format!("radius {r} outside [0, pi]")));
    }
    if r == T::zero() {
        return Ok(T::zero());
    }
    if r == T::PI() {
        return Ok(T::one());
    }
    let power = (n - 1) as i32;
    let f = move |t: T| t.sin().powi(power);
    let tol = T::of(1e-13);
    let numerator = integrate(&f, T::zero(), r, tol);
    let denominator = integrate(&f, T::zero(), T::PI(), tol);
    Ok((numerator / denominator).min(T::one()))
}

/// Bishop-Gromov comparison: under Ric_M >= (m-1) kappa1 > 0 the ball
/// fraction of M at radius r is at least the model value v_{S^m}(r sqrt k1).
pub fn bishop_gromov_lower<T: Real>(m: usize, kappa1: T, r: T) -> Result<T> {
    if !(kappa1 > T::zero()) {
        return Err(Error::Domain("kappa1 must be positive".into()));
    }
    if !(r >= T::zero()) {
        return Err(Error::Domain("radius must be nonnegative".into()));
    }
    let scaled = r * kappa1.sqrt();
    if scaled > T::PI() {
        return Err(Error::Domain(format!(
            "r sqrt(kappa1) = {scaled} exceeds pi"
        )));
    }
    sphere_ball_fraction(m, scaled)
}

/// Both forms of the Bishop upper bound for v_N(r).
#[derive(Clone, Copy, Debug)]
pub struct BishopUpper<T> {
    /// v_{S^n}(r sqrt k2) / (a_N k2^{n/2}); only valid while r sqrt k2 <= pi.
    pub exact: Option<T>,
    /// r^n vol(S^{n-1}) / (n a_N vol(S^n)); valid for every r.
    pub relaxed: T,
}

/// Ball-volume upper bound for an n-manifold with Ric_N >= (n-1) kappa2 > 0
/// and volume ratio a_N = vol(N)/vol(S^n).
pub fn bishop_upper<T: Real>(n: usize, kappa2: T, a_n: T, r: T) -> Result<BishopUpper<T>> {
    if !(kappa2 > T::zero()) || !(a_n > T::zero()) || !(r > T::zero()) {
        return Err(Error::Domain(
            "bishop_upper requires positive kappa2, a_N, and r".into(),
        ));
    }
    if n < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let nf = T::of(n as f64);
    let scaled = r * kappa2.sqrt();
    let exact = if scaled <= T::PI() {
        let model = sphere_ball_fraction(n, scaled)?;
        Some(model / (a_n * (kappa2.ln() * nf / T::of(2.0)).exp()))
    } else {
        None
    };
    let ln_vol_lower = if n == 1 {
        T::of(2.0).ln() // vol(S^0) = 2
    } else {
        ln_sphere_total_volume::<T>(n - 1)?
    };
    let ln_relaxed =
        nf * r.ln() + ln_vol_lower - nf.ln() - a_n.ln() - ln_sphere_total_volume::<T>(n)?;
    Ok(BishopUpper {
        exact,
        relaxed: ln_relaxed.exp(),
    })
}

/// Certified threshold from the volume-comparison route.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VolumeComparisonThreshold<T> {
    /// Largest admissible c: the box distance of the pair is at least c.
    pub c_star: T,
    /// ln of the constant K in c^(n-m) <= (1-c) K.
    pub ln_k: T,
    /// Whether the side condition c sqrt(kappa1) <= pi clipped the root.
    pub capped: bool,
}

/// ln K for the inequality c^{n-m} <= (1-c) K, with
/// K = n a_N kappa1^{m/2} Gamma((m+1)/2) Gamma(n/2)
///     / (m 2^{n+1} pi^{m-1} Gamma(m/2) Gamma((n+1)/2)).
pub fn volume_comparison_ln_k<T: Real>(m: usize, n: usize, kappa1: T, a_n: T) -> Result<T> {
    if n <= m || m < 1 {
        return Err(Error::Unsupported(format!(
            "requires n > m >= 1, got m={m}, n={n}"
        )));
    }
    if !(kappa1 > T::zero()) || !(a_n > T::zero()) {
        return Err(Error::Domain("kappa1 and a_N must be positive".into()));
    }
    let mf = T::of(m as f64);
    let nf = T::of(n as f64);
    let two = T::of(2.0);
    Ok(nf.ln() + a_n.ln() + mf / two * kappa1.ln() + ln_gamma((mf + T::one()) / two)
        + ln_gamma(nf / two)
        - mf.ln()
        - (nf + T::one()) * two.ln()
        - (mf - T::one()) * T::PI().ln()
        - ln_gamma(mf / two)
        - ln_gamma((nf + T::one()) / two))
}

/// Solves for the largest c in (0, min(1, pi/sqrt kappa1)) with
/// c^(n-m) <= (1-c) K; the box distance between the m- and n-dimensional
/// spaces is then at least c. Bisection on the monotone crossing, absolute
/// tolerance 1e-9.
pub fn volume_comparison_max_c<T: Real>(
    m: usize,
    n: usize,
    kappa1: T,
    a_n: T,
) -> Result<VolumeComparisonThreshold<T>> {
    let ln_k = volume_comparison_ln_k(m, n, kappa1, a_n)?;
    let cap = T::one().min(T::PI() / kappa1.sqrt());
    let gap = T::of((n - m) as f64);
    // g(c) = (n-m) ln c - ln(1-c) - ln K; increasing, negative near 0.
    let g = |c: T| gap * c.ln() - (T::one() - c).ln() - ln_k;
    let tol = T::of(1e-9);
    let mut lo = T::min_positive_value();
    let mut hi = T::one() - T::of(1e-16);
    for _ in 0..200 {
        if hi - lo <= tol / T::of(4.0) {
            break;
        }
        let mid = (lo + hi) / T::of(2.0);
        if g(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = lo;
    if root >= cap {
        Ok(VolumeComparisonThreshold {
            c_star: cap,
            ln_k,
            capped: true,
        })
    } else {
        Ok(VolumeComparisonThreshold {
            c_star: root,
            ln_k,
            capped: false,
        })
    }
}

/// Closed-form attributes of CP^n with the Fubini-Study convention that
/// makes the Hopf projection a Riemannian submersion (diameter pi/2).
#[derive(Clone, Copy, Debug)]
pub struct CpFacts<T> {
    pub volume: T,
    /// vol(CP^n) / vol(S^{2n}).
    pub a_ratio: T,
    pub sectional_lower: T,
    pub diameter: T,
}

/// vol(CP^n) = pi^n / n! and a = Gamma(n + 1/2) / (2 sqrt(pi) n!).
pub fn cp_facts<T: Real>(n: usize) -> Result<CpFacts<T>> {
    if n < 1 {
        return Err(Error::Domain("projective dimension must be >= 1".into()));
    }
    let nf = T::of(n as f64);
    let two = T::of(2.0);
    let ln_fact = ln_gamma(nf + T::one());
    let volume = (nf * T::PI().ln() - ln_fact).exp();
    let a_ratio = (ln_gamma(nf + T::one() / two)
        - two.ln()
        - T::PI().ln() / two
        - ln_fact)
        .exp();
    Ok(CpFacts {
        volume,
        a_ratio,
        sectional_lower: T::one(),
        diameter: T::FRAC_PI_2(),
    })
}

/// Exact diameter of SO(n) in the Frobenius (Hilbert-Schmidt) metric:
/// 2 sqrt(n) for even n (antipode -I), 2 sqrt(n-1) for odd n (trace -(n-2)).
pub fn so_diameter<T: Real>(n: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::Domain(format!("SO({n}) diameter needs n >= 2")));
    }
    let two = T::of(2.0);
    if n % 2 == 0 {
        Ok(two * T::of(n as f64).sqrt())
    } else {
        Ok(two * T::of((n - 1) as f64).sqrt())
    }
}

/// min{ 1/2, |diam SO(n) - diam SO(m)| }: certified lower bound for the
/// box distance at lambda = 1 between the two rotation groups.
pub fn so_diameter_gap_bound<T: Real>(n: usize, m: usize) -> Result<T> {
    let gap = (so_diameter::<T>(n)? - so_diameter::<T>(m)?).abs();
    Ok(T::of(0.5).min(gap))
}

/// Asymptotic constant of the volume-route lower bound:
/// min{ 2^(-C1/C3) pi^(-C2/C3), 2^(-C2/C3) pi^(-C1/C3) }.
///
/// Requires positive inputs.
pub fn volume_route_constant<T: Real>(c1: T, c2: T, c3: T) -> T {
    let ln2 = T::of(2.0).ln();
    let lnpi = T::PI().ln();
    let first = (-(c1 / c3) * ln2 - (c2 / c3) * lnpi).exp();
    let second = (-(c2 / c3) * ln2 - (c1 / c3) * lnpi).exp();
    first.min(second)
}

/// Branch constant approached by the finite-k thresholds when the first
/// bound governs the larger dimension: 2^(-C1/C3) pi^(-C2/C3).
pub fn volume_route_branch_constant<T: Real>(c1: T, c2: T, c3: T) -> T {
    (-(c1 / c3) * T::of(2.0).ln() - (c2 / c3) * T::PI().ln()).exp()
}

/// Asymptotic constant of the diameter-route lower bound:
/// min{ 1/2, C3 / (sqrt C1 + sqrt C2) }.
pub fn diameter_route_constant<T: Real>(c1: T, c2: T, c3: T) -> T {
    T::of(0.5).min(c3 / (c1.sqrt() + c2.sqrt()))
}

/// The finite-k diameter chain 2 (n_k - m_k - 1) / (sqrt(n_k - 1) + sqrt m_k)
/// and the certified bound min{1/2, max(0, chain)}.
#[derive(Clone, Copy, Debug)]
pub struct DiameterChain<T> {
    pub chain: T,
    pub bound: T,
}

pub fn diameter_route_finite_k<T: Real>(n_k: usize, m_k: usize) -> Result<DiameterChain<T>> {
    if n_k < 2 || m_k < 1 {
        return Err(Error::Domain("need n_k >= 2 and m_k >= 1".into()));
    }
    let chain = T::of(2.0) * (T::of(n_k as f64) - T::of(m_k as f64) - T::one())
        / (T::of((n_k - 1) as f64).sqrt() + T::of(m_k as f64).sqrt());
    Ok(DiameterChain {
        chain,
        bound: T::of(0.5).min(chain.max(T::zero())),
    })
}

/// Which family the finite-k threshold is evaluated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeRouteFamily {
    Sphere,
    ComplexProjective,
}

/// Inputs of the finite-k volume-route threshold.
#[derive(Clone, Copy, Debug)]
pub struct VolumeRouteFiniteK<T> {
    pub family: VolumeRouteFamily,
    pub k: usize,
    pub n_k: usize,
    pub m_k: usize,
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

/// Result of the finite-k evaluation.
#[derive(Clone, Copy, Debug)]
pub struct FiniteKThreshold<T> {
    /// Fixed point of c = RHS_k(c): every c <= threshold is certified.
    pub threshold: T,
    /// 2^(-C1/C3) pi^(-C2/C3), the k -> infinity limit of the threshold.
    pub branch_limit: T,
    /// Whether the supplied probe value is certified.
    pub probe_admissible: bool,
}

/// Evaluates the finite-k right-hand side of the volume-route proof in log
/// space and solves the fixed point c = RHS_k(c).
///
/// Sphere family:
///   RHS(c) = {(1-c) n_k G(n_k/2) / (m_k G((n_k+1)/2))}^(1/(C3 k))
///            * 2^(-C1/C3) * pi^(-C2/C3 + 1/(C3 k))
/// Complex projective family:
///   RHS(c) = {(1-c) / (2 sqrt(pi) C2 k)}^(1/(2 C3 k))
///            * 2^(-C1/C3 - 1/(2 C3 k)) * pi^(-C2/C3 + 1/(2 C3 k))
pub fn volume_route_finite_k<T: Real>(
    params: &VolumeRouteFiniteK<T>,
    c_probe: T,
) -> Result<FiniteKThreshold<T>> {
    let &VolumeRouteFiniteK {
        family,
        k,
        n_k,
        m_k,
        c1,
        c2,
        c3,
    } = params;
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if !(c1 > T::zero() && c2 > T::zero() && c3 > T::zero()) {
        return Err(Error::Domain("C1, C2, C3 must be positive".into()));
    }
    let kf = T::of(k as f64);
    let nf = T::of(n_k as f64);
    let mf = T::of(m_k as f64);
    if nf > c1 * kf {
        return Err(Error::Precondition(format!(
            "hypothesis n_k <= C1 k violated: {n_k} > {} ",
            (c1 * kf)
        )));
    }
    if mf > c2 * kf {
        return Err(Error::Precondition(format!(
            "hypothesis m_k <= C2 k violated: {m_k} > {}",
            (c2 * kf)
        )));
    }
    if nf - mf < c3 * kf {
        return Err(Error::Precondition(format!(
            "hypothesis n_k - m_k >= C3 k violated: {} < {}",
            nf - mf,
            c3 * kf
        )));
    }
    let ln2 = T::of(2.0).ln();
    let lnpi = T::PI().ln();
    let two = T::of(2.0);
    // ln RHS(c) = bracket_exponent * ln((1-c) * bracket_base) + ln tail
    let (bracket_exponent, ln_bracket_base, ln_tail) = match family {
        VolumeRouteFamily::Sphere => {
            let expo = T::one() / (c3 * kf);
            let base = nf.ln() + ln_gamma(nf / two) - mf.ln() - ln_gamma((nf + T::one()) / two);
            let tail = -(c1 / c3) * ln2 + (-(c2 / c3) + expo) * lnpi;
            (expo, base, tail)
        }
        VolumeRouteFamily::ComplexProjective => {
            let expo = T::one() / (two * c3 * kf);
            let base = -(two.ln() + lnpi / two + (c2 * kf).ln());
            let tail = (-(c1 / c3) - expo) * ln2 + (-(c2 / c3) + expo) * lnpi;
            (expo, base, tail)
        }
    };
    let rhs = |c: T| (bracket_exponent * ((T::one() - c).ln() + ln_bracket_base) + ln_tail).exp();
    // h(c) = c - RHS(c) is increasing; bisect for the unique root in (0, 1).
    let mut lo = T::zero();
    let mut hi = T::one();
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid - rhs(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = lo;
    let branch_limit = volume_route_branch_constant(c1, c2, c3);
    Ok(FiniteKThreshold {
        threshold,
        branch_limit,
        probe_admissible: c_probe <= threshold,
    })
}

/// Normalized Hamming distance between two equal-length bit vectors.
pub fn hamming_distance<T: Real>(x: &[bool], y: &[bool]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::Domain("empty bit vectors".into()));
    }
    let differing = x.iter().zip(y).filter(|(a, b)| a != b).count();
    Ok(T::of(differing as f64) / T::of(x.len() as f64))
}

/// Normalized Hamming distance between bit masks of width `n`.
pub fn hamming_distance_masks<T: Real>(a: u64, b: u64, n: usize) -> T {
    T::of(((a ^ b).count_ones()) as f64) / T::of(n as f64)
}
