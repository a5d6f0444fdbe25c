//! Box distance between two semimetrics on one weighted atom set, and the
//! Hausdorff distance between their 1-Lipschitz classes in the me_lambda
//! metric.
//!
//! box_lambda(d1, d2) is the smallest eps such that after removing atoms of
//! total mass at most lambda * eps, all remaining pairs satisfy
//! |d1 - d2| <= eps. Removal sets are resolved as minimum-weight vertex
//! covers of the conflict graph whose edges are the pairs exceeding eps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cover::{greedy_cover, matching_lower_bound, min_weight_cover_exact};
use crate::error::{Error, Result};
use crate::funcspace::{lip1_regularize, me_lambda_weighted};
use crate::report::{BoundReport, LowerWitness, UpperWitness};
use crate::scalar::Real;
use crate::space::{RealFunction, SemiMetricPair, SquareMatrix};

/// Largest atom count accepted by the exact mode.
pub const EXACT_ATOM_LIMIT: usize = 16;

/// How to evaluate the pair-level box distance.
#[derive(Clone, Copy, Debug)]
pub enum PairMode {
    /// Exact threshold scan with branch-and-bound covers (n <= 16).
    Exact,
    /// Greedy deletion upper bound and matching-based lower bound over a
    /// subsampled threshold grid.
    Heuristic { max_thresholds: usize },
}

impl Default for PairMode {
    fn default() -> Self {
        PairMode::Heuristic { max_thresholds: 64 }
    }
}

struct Discrepancies<T> {
    n: usize,
    /// (discrepancy, i, j) for i < j with discrepancy > 0, sorted descending.
    edges_desc: Vec<(T, u32, u32)>,
    max_disc: T,
}

fn collect_discrepancies<T: Real>(pair: &SemiMetricPair<T>) -> Discrepancies<T> {
    let n = pair.n_atoms();
    let mut edges = Vec::new();
    let mut max_disc = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pair.discrepancy(i, j);
            max_disc = max_disc.max(d);
            if d > T::zero() {
                edges.push((d, i as u32, j as u32));
            }
        }
    }
    edges.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite")
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    Discrepancies {
        n,
        edges_desc: edges,
        max_disc,
    }
}

/// Essential value at lambda = 0: only zero-weight atoms may be removed.
fn essential_sup<T: Real>(pair: &SemiMetricPair<T>) -> (T, Vec<usize>) {
    let n = pair.n_atoms();
    let retained: Vec<usize> = (0..n).filter(|&i| pair.weights()[i] > T::zero()).collect();
    let mut value = T::zero();
    for (a, &i) in retained.iter().enumerate() {
        for &j in &retained[(a + 1)..] {
            value = value.max(pair.discrepancy(i, j));
        }
    }
    (value, retained)
}

/// Exact or bounded evaluation of the pair-level box distance.
pub fn box_lambda_pair<T: Real>(
    pair: &SemiMetricPair<T>,
    lambda: T,
    mode: PairMode,
) -> Result<BoundReport<T>> {
    if !(lambda >= T::zero()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be nonnegative")));
    }
    match mode {
        PairMode::Exact => box_pair_exact(pair, lambda),
        PairMode::Heuristic { max_thresholds } => {
            box_pair_heuristic(pair, lambda, max_thresholds.max(2))
        }
    }
}

fn box_pair_exact<T: Real>(pair: &SemiMetricPair<T>, lambda: T) -> Result<BoundReport<T>> {
    let n = pair.n_atoms();
    if n > EXACT_ATOM_LIMIT {
        return Err(Error::Size(format!(
            "exact mode handles at most {EXACT_ATOM_LIMIT} atoms, got {n}; use heuristic mode"
        )));
    }
    let disc = collect_discrepancies(pair);
    if lambda == T::zero() {
        let (value, retained) = essential_sup(pair);
        return BoundReport::new(
            value,
            value,
            vec!["exact-threshold-scan".into(), "lambda-zero".into()],
            LowerWitness::ExactScan,
            UpperWitness::RetainedSubset {
                retained,
                epsilon: value,
            },
        );
    }

    // Ascending distinct thresholds v_1 < ... < v_K.
    let mut thresholds: Vec<T> = disc.edges_desc.iter().map(|e| e.0).collect();
    thresholds.reverse();
    thresholds.dedup();
    if thresholds.is_empty() {
        return BoundReport::new(
            T::zero(),
            T::zero(),
            vec!["exact-threshold-scan".into()],
            LowerWitness::ExactScan,
            UpperWitness::RetainedSubset {
                retained: (0..n).collect(),
                epsilon: T::zero(),
            },
        );
    }

    // For eps in [v_j, v_{j+1}) the conflict graph has edges with
    // discrepancy >= v_{j+1}; scan every interval, v_0 = 0.
    let mut best_value = T::infinity();
    let mut best_mask = 0u64;
    for j in 0..=thresholds.len() {
        let left = if j == 0 { T::zero() } else { thresholds[j - 1] };
        let mut adj = vec![0u64; n];
        if j < thresholds.len() {
            let cut = thresholds[j];
            for &(d, u, v) in &disc.edges_desc {
                if d < cut {
                    break;
                }
                adj[u as usize] |= 1 << v;
                adj[v as usize] |= 1 << u;
            }
        }
        let (cover_w, cover_mask) = min_weight_cover_exact(&adj, pair.weights());
        let candidate = left.max(cover_w / lambda);
        if candidate < best_value {
            best_value = candidate;
            best_mask = cover_mask;
        }
    }
    let retained: Vec<usize> = (0..n).filter(|&i| best_mask & (1 << i) == 0).collect();
    BoundReport::new(
        best_value,
        best_value,
        vec!["exact-threshold-scan".into(), "branch-and-bound-cover".into()],
        LowerWitness::ExactScan,
        UpperWitness::RetainedSubset {
            retained,
            epsilon: best_value,
        },
    )
}

fn box_pair_heuristic<T: Real>(
    pair: &SemiMetricPair<T>,
    lambda: T,
    max_thresholds: usize,
) -> Result<BoundReport<T>> {
    let n = pair.n_atoms();
    let disc = collect_discrepancies(pair);
    if lambda == T::zero() {
        let (value, retained) = essential_sup(pair);
        return BoundReport::new(
            value,
            value,
            vec!["essential-sup".into(), "lambda-zero".into()],
            LowerWitness::ExactScan,
            UpperWitness::RetainedSubset {
                retained,
                epsilon: value,
            },
        );
    }
    if disc.edges_desc.is_empty() {
        return BoundReport::new(
            T::zero(),
            T::zero(),
            vec!["greedy-deletion".into()],
            LowerWitness::ExactScan,
            UpperWitness::RetainedSubset {
                retained: (0..n).collect(),
                epsilon: T::zero(),
            },
        );
    }

    let mut distinct: Vec<T> = disc.edges_desc.iter().map(|e| e.0).collect();
    distinct.reverse();
    distinct.dedup();
    let grid: Vec<T> = if distinct.len() <= max_thresholds {
        distinct.clone()
    } else {
        let mut g: Vec<T> = (0..max_thresholds)
            .map(|k| distinct[k * (distinct.len() - 1) / (max_thresholds - 1)])
            .collect();
        g.dedup();
        g
    };

    // Upper bound: no-removal candidate, then greedy covers per grid point.
    let mut best_upper = disc.max_disc.max(T::zero());
    let mut best_retained: Vec<usize> = (0..n).collect();
    let mut best_eps = best_upper;
    for &cut in &grid {
        let edges: Vec<(u32, u32)> = disc
            .edges_desc
            .iter()
            .take_while(|e| e.0 >= cut)
            .map(|e| (e.1, e.2))
            .collect();
        let (cover_w, removed) = greedy_cover(n, &edges, pair.weights());
        // max discrepancy among retained pairs
        let mut retained_max = T::zero();
        for &(d, u, v) in &disc.edges_desc {
            if !removed[u as usize] && !removed[v as usize] {
                retained_max = d;
                break;
            }
        }
        let value = retained_max.max(cover_w / lambda);
        if value < best_upper {
            best_upper = value;
            best_retained = (0..n).filter(|&i| !removed[i]).collect();
            best_eps = value;
        }
    }

    // Lower bound: on [g_{j-1}, g_j) removed mass is at least the matching
    // bound of the edges at g_j.
    let mut best_lower = *grid.last().expect("nonempty grid");
    let mut lower_witness = LowerWitness::CoverBudget {
        threshold: best_lower,
        cover_lower_bound: T::zero(),
    };
    for (j, &cut) in grid.iter().enumerate() {
        let left = if j == 0 { T::zero() } else { grid[j - 1] };
        let edges: Vec<(u32, u32)> = disc
            .edges_desc
            .iter()
            .take_while(|e| e.0 >= cut)
            .map(|e| (e.1, e.2))
            .collect();
        let lb = matching_lower_bound(n, &edges, pair.weights());
        let bound = left.max(lb / lambda);
        if bound < best_lower {
            best_lower = bound;
            lower_witness = LowerWitness::CoverBudget {
                threshold: cut,
                cover_lower_bound: lb,
            };
        }
    }
    let lower = best_lower.min(best_upper);
    BoundReport::new(
        lower,
        best_upper,
        vec!["greedy-deletion".into(), "matching-cover-lower".into()],
        lower_witness,
        UpperWitness::RetainedSubset {
            retained: best_retained,
            epsilon: best_eps,
        },
    )
}

/// Brute-force reference: enumerates every atom subset. Exponential; only
/// for cross-checks on small instances.
pub fn box_lambda_pair_bruteforce<T: Real>(pair: &SemiMetricPair<T>, lambda: T) -> Result<T> {
    let n = pair.n_atoms();
    if n > 20 {
        return Err(Error::Size(format!("brute force limited to 20 atoms, got {n}")));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Domain("lambda must be nonnegative".into()));
    }
    let total = pair.total_mass();
    let mut best = T::infinity();
    for mask in 0u32..(1 << n) {
        let mut kept_mass = T::zero();
        let mut eps_needed = T::zero();
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            kept_mass = kept_mass + pair.weights()[i];
            for j in (i + 1)..n {
                if mask & (1 << j) != 0 {
                    eps_needed = eps_needed.max(pair.discrepancy(i, j));
                }
            }
        }
        let removed = total - kept_mass;
        let candidate = if lambda > T::zero() {
            eps_needed.max(removed / lambda)
        } else if removed <= T::zero() {
            eps_needed
        } else {
            continue;
        };
        best = best.min(candidate);
    }
    Ok(best)
}

/// Net configuration for [`hausdorff_lip1`].
#[derive(Clone, Debug)]
pub struct HausdorffNet {
    /// Random 1-Lipschitz functions added to each class net, on top of all
    /// +-d(x0, .) generators.
    pub random_functions: usize,
    pub seed: u64,
}

impl Default for HausdorffNet {
    fn default() -> Self {
        Self {
            random_functions: 4,
            seed: 0,
        }
    }
}

/// Hausdorff distance between the 1-Lipschitz classes of d1 and d2 in the
/// me_lambda metric: a certified-by-construction upper bound together with a
/// net-separation lower estimate.
///
/// The upper side regularizes every net function of one class onto the other
/// through the optimal retained subset of the exact box run, so it never
/// exceeds the pair box distance (up to rounding). Inputs whose d1/d2
/// violate the triangle inequality make the Lipschitz classes degenerate;
/// callers wanting the class interpretation should pass metrics.
pub fn hausdorff_lip1<T: Real>(
    pair: &SemiMetricPair<T>,
    lambda: T,
    net: &HausdorffNet,
) -> Result<BoundReport<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::Unsupported(
            "lambda = 0 degenerates to the uniform distance; rejected".into(),
        ));
    }
    let n = pair.n_atoms();
    let box_report = box_lambda_pair(pair, lambda, PairMode::Exact)?;
    let subset = match &box_report.upper_witness {
        UpperWitness::RetainedSubset { retained, .. } if !retained.is_empty() => retained.clone(),
        _ => (0..n).collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(net.seed);
    let all: Vec<usize> = (0..n).collect();
    let build_net = |rng: &mut ChaCha8Rng,
                     d: &SquareMatrix<T>|
     -> Result<Vec<RealFunction<T>>> {
        let mut fs = Vec::with_capacity(2 * n + net.random_functions);
        for i in 0..n {
            let f = RealFunction::new(d.row(i).to_vec())?;
            fs.push(f.negated());
            fs.push(f);
        }
        let scale = d.max_entry();
        for _ in 0..net.random_functions {
            let raw: Vec<T> = (0..n).map(|_| T::of(rng.gen::<f64>()) * scale).collect();
            fs.push(lip1_regularize(d, &RealFunction::new(raw)?, &all)?);
        }
        Ok(fs)
    };
    let net1 = build_net(&mut rng, pair.d1())?;
    let net2 = build_net(&mut rng, pair.d2())?;

    let weights = pair.weights();
    let mut upper = T::zero();
    let mut lower = T::zero();
    let mut hardest = 0usize;

    let mut side = |from: &[RealFunction<T>],
                    to: &[RealFunction<T>],
                    d_to: &SquareMatrix<T>,
                    offset: usize|
     -> Result<()> {
        for (idx, f) in from.iter().enumerate() {
            let projected = lip1_regularize(d_to, f, &subset)?;
            let dev = me_lambda_weighted(weights, f, &projected, lambda)?;
            upper = upper.max(dev);
            let mut nearest = dev;
            for g in to {
                if nearest <= T::zero() {
                    break;
                }
                nearest = nearest.min(me_lambda_weighted(weights, f, g, lambda)?);
            }
            if nearest > lower {
                lower = nearest;
                hardest = offset + idx;
            }
        }
        Ok(())
    };
    side(&net1, &net2, pair.d2(), 0)?;
    side(&net2, &net1, pair.d1(), net1.len())?;

    let net_size = net1.len() + net2.len();
    let mut report = BoundReport::new(
        lower.min(upper),
        upper,
        vec![
            "lipschitz-net-regularization".into(),
            "net-separation-lower".into(),
        ],
        LowerWitness::NetSeparation {
            hardest_function: hardest,
            separation: lower,
        },
        UpperWitness::LipschitzNet {
            net_size,
            subset,
            max_deviation: upper,
        },
    )?;
    report.seed = Some(net.seed);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_from(a: f64, b: f64) -> SemiMetricPair<f64> {
        let d1 = SquareMatrix::from_fn(2, |_, _| a).unwrap();
        let d2 = SquareMatrix::from_fn(2, |_, _| b).unwrap();
        SemiMetricPair::new(vec![0.5, 0.5], d1, d2).unwrap()
    }

    fn random_pair(rng: &mut impl rand::Rng, n: usize) -> SemiMetricPair<f64> {
        let d1 = SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..2.0)).unwrap();
        let d2 = SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..2.0)).unwrap();
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        SemiMetricPair::new(weights, d1, d2).unwrap()
    }

    #[test]
    fn equal_semimetrics_give_zero() {
        let d = SquareMatrix::from_fn(3, |i, j| (i + j) as f64).unwrap();
        let pair = SemiMetricPair::new(vec![0.2, 0.3, 0.5], d.clone(), d).unwrap();
        for lambda in [0.0, 0.5, 1.0] {
            let r = box_lambda_pair(&pair, lambda, PairMode::Exact).unwrap();
            assert_eq!(r.upper, 0.0);
            assert_eq!(r.lower, 0.0);
        }
    }

    #[test]
    fn two_atom_formula() {
        for (a, b) in [(1.0, 0.4), (0.3, 0.2), (1.0, 1.0), (0.9, 0.1)] {
            let pair = pair_from(a, b);
            let r = box_lambda_pair(&pair, 1.0, PairMode::Exact).unwrap();
            let expected = (a - b).abs().min(0.5);
            assert!(
                (r.upper - expected).abs() < 1e-15,
                "a={a} b={b} got {} want {expected}",
                r.upper
            );
            let brute = box_lambda_pair_bruteforce(&pair, 1.0).unwrap();
            assert!((brute - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_matches_bruteforce_on_random_instances() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..150 {
            let n = rng.gen_range(2..=8);
            let pair = random_pair(&mut rng, n);
            let lambda = *[0.5, 1.0, 2.0].get(rng.gen_range(0..3)).unwrap();
            let exact = box_lambda_pair(&pair, lambda, PairMode::Exact).unwrap();
            let brute = box_lambda_pair_bruteforce(&pair, lambda).unwrap();
            assert!(
                (exact.upper - brute).abs() < 1e-12,
                "n={n} lambda={lambda} exact={} brute={brute}",
                exact.upper
            );
        }
    }

    #[test]
    fn exact_mode_size_guard() {
        let d = SquareMatrix::from_fn(17, |_, _| 1.0).unwrap();
        let pair = SemiMetricPair::new(vec![1.0; 17], d.clone(), d).unwrap();
        assert!(matches!(
            box_lambda_pair(&pair, 1.0, PairMode::Exact),
            Err(Error::Size(_))
        ));
        assert!(box_lambda_pair(&pair, 1.0, PairMode::default()).is_ok());
    }

    #[test]
    fn heuristic_brackets_exact() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(4..=8);
            let pair = random_pair(&mut rng, n);
            let exact = box_lambda_pair(&pair, 1.0, PairMode::Exact).unwrap();
            let heur =
                box_lambda_pair(&pair, 1.0, PairMode::Heuristic { max_thresholds: 8 }).unwrap();
            assert!(heur.lower <= exact.upper + 1e-12);
            assert!(heur.upper + 1e-12 >= exact.upper);
        }
    }

    #[test]
    fn lambda_zero_ignores_zero_weight_atoms() {
        let d1 = SquareMatrix::from_fn(3, |_, _| 1.0).unwrap();
        let d2 = SquareMatrix::from_fn(3, |i, j| if i + j == 1 { 1.0 } else { 3.0 }).unwrap();
        // atom 2 is weightless; its pairs are the only disagreements
        let pair = SemiMetricPair::new(vec![0.5, 0.5, 0.0], d1, d2).unwrap();
        let r = box_lambda_pair(&pair, 0.0, PairMode::Exact).unwrap();
        assert_eq!(r.upper, 0.0);
    }

    #[test]
    fn monotone_in_lambda() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let pair = random_pair(&mut rng, 6);
            let mut prev = f64::INFINITY;
            for lambda in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let r = box_lambda_pair(&pair, lambda, PairMode::Exact).unwrap();
                assert!(r.upper <= prev + 1e-12);
                prev = r.upper;
            }
        }
    }

    fn random_metric(rng: &mut impl rand::Rng, n: usize) -> SquareMatrix<f64> {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = rng.gen_range(0.1..2.0);
                rows[i][j] = r;
                rows[j][i] = r;
            }
        }
        // shortest-path closure restores the triangle inequality
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if rows[i][k] + rows[k][j] < rows[i][j] {
                        rows[i][j] = rows[i][k] + rows[k][j];
                    }
                }
            }
        }
        SquareMatrix::from_rows(&rows).unwrap()
    }

    fn random_metric_pair(rng: &mut impl rand::Rng, n: usize) -> SemiMetricPair<f64> {
        let d1 = random_metric(rng, n);
        let d2 = random_metric(rng, n);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        SemiMetricPair::new(weights, d1, d2).unwrap()
    }

    #[test]
    fn hausdorff_equal_metrics_zero_upper() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let pair = random_metric_pair(&mut rng, 5);
        let same = SemiMetricPair::new(
            pair.weights().to_vec(),
            pair.d1().clone(),
            pair.d1().clone(),
        )
        .unwrap();
        let r = hausdorff_lip1(&same, 1.0, &HausdorffNet::default()).unwrap();
        assert!(r.upper.abs() < 1e-12);
    }

    #[test]
    fn hausdorff_bounded_by_box() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for _ in 0..40 {
            let n = rng.gen_range(4..=8);
            let pair = random_metric_pair(&mut rng, n);
            let h = hausdorff_lip1(&pair, 1.0, &HausdorffNet::default()).unwrap();
            let b = box_lambda_pair(&pair, 1.0, PairMode::Exact).unwrap();
            assert!(
                h.upper <= b.upper + 1e-9,
                "hausdorff {} vs box {}",
                h.upper,
                b.upper
            );
            assert!(h.lower <= h.upper + 1e-12);
        }
    }

    #[test]
    fn hausdorff_two_atom_upper() {
        let pair = pair_from(1.0, 0.6);
        let r = hausdorff_lip1(&pair, 1.0, &HausdorffNet::default()).unwrap();
        assert!(r.upper <= 0.4 + 1e-12, "upper = {}", r.upper);
    }

    #[test]
    fn hausdorff_rejects_lambda_zero() {
        let pair = pair_from(1.0, 0.6);
        assert!(matches!(
            hausdorff_lip1(&pair, 0.0, &HausdorffNet::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
