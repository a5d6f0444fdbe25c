//! Function-space machinery over a finite mm-space: the me_lambda distance,
//! partial and observable diameters, tail masses, and the Lipschitz
//! regularization operator.
//!
//! me_lambda(f, g) is the smallest eps >= 0 such that the mass of
//! { |f - g| >= eps } is at most lambda * eps. For lambda = 0 it degenerates
//! to the mass-essential supremum of |f - g|. On finite atom sets the
//! infimum is computed exactly by scanning the finitely many critical
//! thresholds, using non-strict inequalities on both sides.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{sort_finite, Real};
use crate::space::{pushforward, FiniteMMSpace, RealFunction, RealMeasure1D, SquareMatrix};

/// Exact me_lambda over explicit atom weights.
pub fn me_lambda_weighted<T: Real>(
    weights: &[T],
    f: &RealFunction<T>,
    g: &RealFunction<T>,
    lambda: T,
) -> Result<T> {
    if f.len() != weights.len() {
        return Err(Error::DimensionMismatch(weights.len(), f.len()));
    }
    if g.len() != weights.len() {
        return Err(Error::DimensionMismatch(weights.len(), g.len()));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be nonnegative")));
    }
    let mut devs: Vec<(T, T)> = f
        .values()
        .iter()
        .zip(g.values())
        .zip(weights)
        .map(|((&a, &b), &w)| ((a - b).abs(), w))
        .collect();
    devs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));

    if lambda == T::zero() {
        // Mass-essential supremum: largest deviation carried by positive mass.
        let mut sup = T::zero();
        for &(d, w) in &devs {
            if w > T::zero() {
                sup = sup.max(d);
            }
        }
        return Ok(sup);
    }

    // Distinct positive thresholds v_1 < ... < v_K with suffix masses
    // S_j = mass{ |f-g| >= v_j }; on [v_{j-1}, v_j) the tail equals S_j, so
    // the smallest feasible eps in that interval is max(v_{j-1}, S_j/lambda).
    let mut thresholds: Vec<T> = Vec::new();
    let mut suffix: Vec<T> = Vec::new();
    let mut acc = T::zero();
    for &(d, w) in devs.iter().rev() {
        if d <= T::zero() {
            break;
        }
        match thresholds.last() {
            Some(&t) if t == d => {
                let s = suffix.last_mut().expect("aligned");
                acc = acc + w;
                *s = acc;
            }
            _ => {
                acc = acc + w;
                thresholds.push(d);
                suffix.push(acc);
            }
        }
    }
    thresholds.reverse();
    suffix.reverse();
    if thresholds.is_empty() {
        return Ok(T::zero());
    }
    let mut best = *thresholds.last().expect("nonempty"); // tail above v_K is empty
    let mut prev = T::zero();
    for (v, s) in thresholds.iter().zip(&suffix) {
        let candidate = prev.max(*s / lambda);
        best = best.min(candidate);
        prev = *v;
    }
    Ok(best)
}

/// Exact me_lambda between two functions on a space.
pub fn me_lambda<T: Real>(
    space: &FiniteMMSpace<T>,
    f: &RealFunction<T>,
    g: &RealFunction<T>,
    lambda: T,
) -> Result<T> {
    me_lambda_weighted(space.weights(), f, g, lambda)
}

/// mu({ x : |f(x) - center| >= eps }).
pub fn levy_tail_mass<T: Real>(
    space: &FiniteMMSpace<T>,
    f: &RealFunction<T>,
    center: T,
    eps: T,
) -> Result<T> {
    if f.len() != space.n_atoms() {
        return Err(Error::DimensionMismatch(space.n_atoms(), f.len()));
    }
    if !(eps > T::zero()) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let mut mass = T::zero();
    for (&v, &w) in f.values().iter().zip(space.weights()) {
        if (v - center).abs() >= eps {
            mass = mass + w;
        }
    }
    Ok(mass)
}

/// Smallest diameter of a subset of the line retaining mass >= total - kappa.
///
/// Optimal subsets are contiguous windows of the sorted support (taking the
/// interval hull never shrinks mass or grows diameter), so a two-pointer
/// sweep is exact. Returns 0 when kappa >= total mass.
pub fn partial_diameter<T: Real>(nu: &RealMeasure1D<T>, kappa: T) -> T {
    let kappa = kappa.max(T::zero());
    let total = nu.total_mass();
    let required = total - kappa;
    if required <= T::zero() {
        return T::zero();
    }
    let support = nu.support();
    let masses = nu.masses();
    let n = support.len();
    let mut best: Option<T> = None;
    let mut window = T::zero();
    let mut lo = 0usize;
    for hi in 0..n {
        window = window + masses[hi];
        while window - masses[lo] >= required {
            window = window - masses[lo];
            lo += 1;
        }
        if window >= required {
            let diam = support[hi] - support[lo];
            best = Some(match best {
                Some(b) => b.min(diam),
                None => diam,
            });
        }
    }
    best.unwrap_or_else(|| {
        // required > total only through rounding; fall back to full spread
        *nu.support().last().expect("nonempty") - nu.support()[0]
    })
}

/// f~(x) = min over y in `subset` of f(y) + dprime(x, y).
///
/// When `dprime` satisfies the triangle inequality the result is 1-Lipschitz
/// with respect to it, and f~ <= f holds on `subset`.
pub fn lip1_regularize<T: Real>(
    dprime: &SquareMatrix<T>,
    f: &RealFunction<T>,
    subset: &[usize],
) -> Result<RealFunction<T>> {
    if f.len() != dprime.n() {
        return Err(Error::DimensionMismatch(dprime.n(), f.len()));
    }
    if subset.is_empty() {
        return Err(Error::Domain("regularization subset must be nonempty".into()));
    }
    if let Some(&bad) = subset.iter().find(|&&y| y >= f.len()) {
        return Err(Error::Domain(format!("subset index {bad} out of range")));
    }
    let n = f.len();
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let mut m = T::infinity();
        for &y in subset {
            m = m.min(f.get(y) + dprime.get(x, y));
        }
        out.push(m);
    }
    RealFunction::new(out)
}

/// Search configuration for [`observable_diameter`].
#[derive(Clone, Debug)]
pub struct ObservableDiameterSearch<T> {
    /// Evaluate every d(x0, .) and its negation as candidate witnesses.
    pub distance_functions: bool,
    /// Number of random 1-Lipschitz starting functions (regularized noise).
    pub random_starts: usize,
    /// Coordinate-ascent iterations applied to the best witness found.
    pub ascent_iterations: usize,
    /// Ascent perturbation, as a fraction of the diameter.
    pub ascent_step: T,
    pub seed: u64,
}

impl<T: Real> Default for ObservableDiameterSearch<T> {
    fn default() -> Self {
        Self {
            distance_functions: true,
            random_starts: 2,
            ascent_iterations: 100,
            ascent_step: T::of(0.25),
            seed: 0,
        }
    }
}

impl<T: Real> ObservableDiameterSearch<T> {
    /// Distance-function candidates only; the cheapest deterministic search.
    pub fn distance_functions_only() -> Self {
        Self {
            distance_functions: true,
            random_starts: 0,
            ascent_iterations: 0,
            ascent_step: T::of(0.25),
            seed: 0,
        }
    }
}

/// Best-found lower estimate of the observable diameter, with its witness.
///
/// The supremum over all 1-Lipschitz functions is not computed; the returned
/// value is the partial diameter achieved by the best witness the search
/// visits. Deterministic for a fixed seed.
pub fn observable_diameter<T: Real>(
    space: &FiniteMMSpace<T>,
    kappa: T,
    search: &ObservableDiameterSearch<T>,
) -> Result<(T, RealFunction<T>)> {
    if !(kappa > T::zero()) {
        return Err(Error::Domain(format!("kappa = {kappa} must be positive")));
    }
    let n = space.n_atoms();
    let evaluate = |f: &RealFunction<T>| -> Result<T> {
        Ok(partial_diameter(&pushforward(space, f)?, kappa))
    };

    let mut best_f = RealFunction::constant(T::zero(), n);
    let mut best_v = evaluate(&best_f)?;

    if search.distance_functions && n > 1 {
        for i in 0..n {
            let f = space.distance_function(i);
            let v = evaluate(&f)?;
            if v > best_v {
                best_v = v;
                best_f = f.clone();
            }
            let neg = f.negated();
            let v = evaluate(&neg)?;
            if v > best_v {
                best_v = v;
                best_f = neg;
            }
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let diam = space.max_distance();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);

    for _ in 0..search.random_starts {
        let raw: Vec<T> = (0..n)
            .map(|_| T::of(rng.gen::<f64>()) * diam)
            .collect();
        let f = lip1_regularize(space.dist_matrix(), &RealFunction::new(raw)?, &all)?;
        let v = evaluate(&f)?;
        if v > best_v {
            best_v = v;
            best_f = f;
        }
    }

    if search.ascent_iterations > 0 && n > 1 {
        let step = search.ascent_step * diam;
        let mut current = best_f.clone();
        let mut current_v = best_v;
        for _ in 0..search.ascent_iterations {
            let i = rng.gen_range(0..n);
            let sign = if rng.gen::<bool>() { T::one() } else { -T::one() };
            let mut values = current.values().to_vec();
            values[i] = values[i] + sign * step;
            let candidate =
                lip1_regularize(space.dist_matrix(), &RealFunction::new(values)?, &all)?;
            let v = evaluate(&candidate)?;
            if v > current_v {
                current_v = v;
                current = candidate;
            }
        }
        if current_v > best_v {
            best_v = current_v;
            best_f = current;
        }
    }

    Ok((best_v, best_f))
}

/// All windows over the support, by brute force; test oracle for
/// [`partial_diameter`].
pub fn partial_diameter_window_oracle<T: Real>(nu: &RealMeasure1D<T>, kappa: T) -> T {
    let total = nu.total_mass();
    let required = total - kappa.max(T::zero());
    if required <= T::zero() {
        return T::zero();
    }
    let n = nu.len();
    let mut best = T::infinity();
    for i in 0..n {
        for j in i..n {
            let mass: T = nu.masses()[i..=j].iter().copied().sum();
            if mass >= required {
                best = best.min(nu.support()[j] - nu.support()[i]);
            }
        }
    }
    best
}

/// Bisection oracle for me_lambda: locates the smallest feasible eps by a
/// feasibility predicate alone, independent of the threshold-scan formula.
pub fn me_lambda_bisection_oracle<T: Real>(
    weights: &[T],
    f: &RealFunction<T>,
    g: &RealFunction<T>,
    lambda: T,
    tol: T,
) -> T {
    let tail = |eps: T| -> T {
        f.values()
            .iter()
            .zip(g.values())
            .zip(weights)
            .filter(|((&a, &b), _)| (a - b).abs() >= eps)
            .map(|(_, &w)| w)
            .sum()
    };
    let feasible = |eps: T| tail(eps) <= lambda * eps;
    let mut devs: Vec<T> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(&a, &b)| (a - b).abs())
        .collect();
    sort_finite(&mut devs);
    let mut hi = devs.last().copied().unwrap_or(T::zero()) + T::one();
    if feasible(T::zero()) {
        return T::zero();
    }
    let mut lo = T::zero();
    while hi - lo > tol {
        let mid = (lo + hi) / T::of(2.0);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_space(n: usize) -> FiniteMMSpace<f64> {
        let d = SquareMatrix::from_fn(n, |_, _| 1.0).unwrap();
        FiniteMMSpace::uniform(d).unwrap()
    }

    #[test]
    fn me_lambda_identical_functions() {
        let sp = uniform_space(5);
        let f = RealFunction::new(vec![0.3, 1.0, -2.0, 0.0, 4.0]).unwrap();
        for lambda in [0.0, 0.5, 1.0, 7.0] {
            assert_eq!(me_lambda(&sp, &f, &f, lambda).unwrap(), 0.0);
        }
    }

    #[test]
    fn me_lambda_quarter_mass_example() {
        let sp = uniform_space(4);
        let f = RealFunction::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let g = RealFunction::constant(0.0, 4);
        // tail mass at eps in (0,1] is 1/4; the line lambda*eps crosses at 1/4
        assert_eq!(me_lambda(&sp, &f, &g, 1.0).unwrap(), 0.25);
        // lambda = 0 forces a full-measure uniform bound
        assert_eq!(me_lambda(&sp, &f, &g, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn me_lambda_rejects_bad_input() {
        let sp = uniform_space(3);
        let f = RealFunction::constant(0.0, 2);
        let g = RealFunction::constant(0.0, 3);
        assert!(me_lambda(&sp, &f, &g, 1.0).is_err());
        let f = RealFunction::constant(0.0, 3);
        assert!(me_lambda(&sp, &f, &g, -0.5).is_err());
    }

    #[test]
    fn me_lambda_matches_bisection_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..10);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let f = RealFunction::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let g = RealFunction::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let lambda = rng.gen_range(0.1..3.0);
            let exact = me_lambda_weighted(&weights, &f, &g, lambda).unwrap();
            let oracle = me_lambda_bisection_oracle(&weights, &f, &g, lambda, 1e-12);
            assert!(
                (exact - oracle).abs() <= 1e-9,
                "exact={exact} oracle={oracle}"
            );
        }
    }

    #[test]
    fn me_lambda_ignores_zero_weight_atoms_at_lambda_zero() {
        let d = SquareMatrix::from_fn(3, |_, _| 1.0).unwrap();
        let sp = FiniteMMSpace::new(vec![0.5, 0.5, 0.0], d).unwrap();
        let f = RealFunction::new(vec![0.0, 0.1, 9.0]).unwrap();
        let g = RealFunction::constant(0.0, 3);
        assert_eq!(me_lambda(&sp, &f, &g, 0.0).unwrap(), 0.1);
    }

    #[test]
    fn levy_tail_examples() {
        let sp = uniform_space(2);
        let f = RealFunction::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(levy_tail_mass(&sp, &f, 0.0, 0.5).unwrap(), 0.5);
        let c = RealFunction::constant(3.0, 2);
        assert_eq!(levy_tail_mass(&sp, &c, 3.0, 0.25).unwrap(), 0.0);
        assert!(levy_tail_mass(&sp, &f, 0.0, 0.0).is_err());
    }

    #[test]
    fn partial_diameter_examples() {
        let nu = RealMeasure1D::new(
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            vec![0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        // dropping one endpoint atom is optimal
        assert!((partial_diameter(&nu, 0.25) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(partial_diameter(&nu, 1.0), 0.0);
        assert_eq!(partial_diameter(&nu, 2.0), 0.0);
        let point = RealMeasure1D::new(vec![4.0], vec![1.0]).unwrap();
        assert_eq!(partial_diameter(&point, 0.0), 0.0);
    }

    #[test]
    fn partial_diameter_matches_window_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..9);
            let mut support: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            support.sort_by(|a, b| a.partial_cmp(b).unwrap());
            support.dedup();
            let masses: Vec<f64> = support.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
            let nu = RealMeasure1D::new(support, masses).unwrap();
            let kappa = rng.gen_range(0.0..nu.total_mass() * 1.2);
            let fast = partial_diameter(&nu, kappa);
            let slow = partial_diameter_window_oracle(&nu, kappa);
            assert_eq!(fast, slow, "kappa={kappa} nu={nu:?}");
        }
    }

    #[test]
    fn lip1_regularize_examples() {
        // all-pairs distance 1 on 3 atoms
        let d = SquareMatrix::from_fn(3, |_, _| 1.0).unwrap();
        let f = RealFunction::new(vec![0.0, 5.0, 5.0]).unwrap();
        let reg = lip1_regularize(&d, &f, &[0]).unwrap();
        assert_eq!(reg.values(), &[0.0, 1.0, 1.0]);

        // already 1-Lipschitz, full subset: fixed point
        let d = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let f = RealFunction::new(vec![0.0, 1.0, 1.5]).unwrap();
        let reg = lip1_regularize(&d, &f, &[0, 1, 2]).unwrap();
        assert_eq!(reg.values(), f.values());

        // single-point subset
        let g = RealFunction::new(vec![7.0, 0.0, 3.0]).unwrap();
        let reg = lip1_regularize(&d, &g, &[1]).unwrap();
        assert_eq!(reg.values(), &[1.0, 0.0, 1.0]);

        assert!(lip1_regularize(&d, &g, &[]).is_err());
    }

    #[test]
    fn observable_diameter_two_atoms() {
        let d = SquareMatrix::from_fn(2, |_, _| 1.0).unwrap();
        let sp = FiniteMMSpace::uniform(d).unwrap();
        let search = ObservableDiameterSearch::distance_functions_only();
        let (v, witness) = observable_diameter(&sp, 0.25, &search).unwrap();
        assert_eq!(v, 1.0);
        // witness is a distance function (or its negation)
        let w = witness.values();
        assert!((w[0] - w[1]).abs() == 1.0);
        let (v, _) = observable_diameter(&sp, 0.5, &search).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn observable_diameter_one_point_and_errors() {
        let sp = FiniteMMSpace::one_point(1.0_f64).unwrap();
        let search = ObservableDiameterSearch::default();
        let (v, _) = observable_diameter(&sp, 0.1, &search).unwrap();
        assert_eq!(v, 0.0);
        assert!(observable_diameter(&sp, 0.0, &search).is_err());
    }

    #[test]
    fn observable_diameter_ascent_never_hurts() {
        let d = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ])
        .unwrap();
        let sp = FiniteMMSpace::uniform(d).unwrap();
        let plain = ObservableDiameterSearch::distance_functions_only();
        let rich = ObservableDiameterSearch {
            random_starts: 3,
            ascent_iterations: 60,
            seed: 5,
            ..ObservableDiameterSearch::default()
        };
        let (v0, _) = observable_diameter(&sp, 0.2, &plain).unwrap();
        let (v1, _) = observable_diameter(&sp, 0.2, &rich).unwrap();
        assert!(v1 >= v0);
    }
}
