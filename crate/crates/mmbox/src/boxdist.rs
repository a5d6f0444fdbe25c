//! Box distance between two distinct finite mm-spaces: mass normalization,
//! upper bounds by transport-plan search, the two certified lower bounds
//! (ball-volume comparison and diameter gap), and the empirical
//! codimension-1 coupling between consecutive spheres or projective spaces.
//!
//! Plan search only ever certifies upper bounds: any coupling of the two
//! atomic measures is realizable by a parameter pair, so the pair-level box
//! value of its pulled-back semimetrics dominates the true infimum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boxpair::{box_lambda_pair, PairMode, EXACT_ATOM_LIMIT};
use crate::error::{Error, Result};
use crate::modelgeom::{sphere_ball_fraction, ModelSpaceSpec};
use crate::plan::{uniform_common_refinement, PlanCell, TransportPlan};
use crate::report::{BoundReport, LowerWitness, UpperWitness};
use crate::samplers::{
    cp_geodesic, empirical_ball_volume, sphere_geodesic, unit_complex_point, unit_sphere_point,
};
use crate::scalar::Real;
use crate::space::{FiniteMMSpace, SemiMetricPair, SquareMatrix};

/// Relative tolerance for "equal total masses".
pub const MASS_TOL: f64 = 1e-9;

/// Rescales the heavier space so both carry the mass of the lighter one.
///
/// Returns (X, Y scaled by m/m', additive term m' - m): the box distance of
/// the original pair is the box distance of the normalized pair plus the
/// additive term.
pub fn normalize_masses<T: Real>(
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
) -> Result<(FiniteMMSpace<T>, FiniteMMSpace<T>, T)> {
    let m = x.total_mass();
    let m_prime = y.total_mass();
    if !(m > T::zero()) || !(m_prime > T::zero()) {
        return Err(Error::Domain("total masses must be positive".into()));
    }
    if m > m_prime {
        return Err(Error::Precondition(
            "normalize_masses expects the lighter space first; swap the arguments".into(),
        ));
    }
    let scaled = y.scale_mass(m / m_prime)?;
    Ok((x.clone(), scaled, m_prime - m))
}

/// Plan-search strategy.
#[derive(Clone, Copy, Debug)]
pub enum PlanSearch {
    /// Enumerates every bijection of uniform equal-mass atoms (N <= 8), or
    /// every unit-cell bijection of a uniform common refinement with at most
    /// `max_refined_cells` cells.
    Exact { max_refined_cells: usize },
    /// Pivot descent on transportation-polytope vertices from the identity
    /// northwest-corner start.
    Local { max_moves: usize },
    /// Local search restarted from seeded random northwest corners.
    SeededRestart {
        restarts: usize,
        seed: u64,
        max_moves: usize,
    },
}

impl Default for PlanSearch {
    fn default() -> Self {
        PlanSearch::SeededRestart {
            restarts: 8,
            seed: 0,
            max_moves: 200,
        }
    }
}

const BIJECTION_LIMIT: usize = 8;

fn equal_masses<T: Real>(x: &FiniteMMSpace<T>, y: &FiniteMMSpace<T>) -> Result<()> {
    let m = x.total_mass();
    let m2 = y.total_mass();
    let scale = T::one().max(m.abs());
    if (m - m2).abs() > T::of(MASS_TOL) * scale {
        return Err(Error::Precondition(format!(
            "total masses differ ({m} vs {m2}); route through normalize_masses"
        )));
    }
    Ok(())
}

fn evaluate_plan<T: Real>(
    plan: &TransportPlan<T>,
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
    lambda: T,
) -> Result<(T, Vec<usize>, T)> {
    let pair = plan.induced_pair(x, y)?;
    let mode = if pair.n_atoms() <= EXACT_ATOM_LIMIT {
        PairMode::Exact
    } else {
        PairMode::Heuristic { max_thresholds: 64 }
    };
    let report = box_lambda_pair(&pair, lambda, mode)?;
    let (retained, eps) = match report.upper_witness {
        UpperWitness::RetainedSubset { retained, epsilon } => (retained, epsilon),
        _ => ((0..pair.n_atoms()).collect(), report.upper),
    };
    Ok((report.upper, retained, eps))
}

struct SearchState<T> {
    best_value: T,
    best_plan: Option<TransportPlan<T>>,
    best_retained: Vec<usize>,
    best_eps: T,
}

impl<T: Real> SearchState<T> {
    fn new() -> Self {
        Self {
            best_value: T::infinity(),
            best_plan: None,
            best_retained: Vec::new(),
            best_eps: T::zero(),
        }
    }

    fn offer(
        &mut self,
        plan: &TransportPlan<T>,
        x: &FiniteMMSpace<T>,
        y: &FiniteMMSpace<T>,
        lambda: T,
    ) -> Result<T> {
        let (value, retained, eps) = evaluate_plan(plan, x, y, lambda)?;
        if value < self.best_value {
            self.best_value = value;
            self.best_plan = Some(plan.clone());
            self.best_retained = retained;
            self.best_eps = eps;
        }
        Ok(value)
    }
}

fn uniform_equal_mass<T: Real>(x: &FiniteMMSpace<T>, y: &FiniteMMSpace<T>) -> Option<T> {
    if x.n_atoms() != y.n_atoms() {
        return None;
    }
    let w = x.weight(0);
    let tol = T::of(1e-12);
    let same = |s: &FiniteMMSpace<T>| s.weights().iter().all(|&v| (v - w).abs() <= tol);
    (w > T::zero() && same(x) && same(y)).then_some(w)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    heap_permute(&mut current, n, &mut out);
    out.sort();
    out
}

fn heap_permute(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..k {
        heap_permute(arr, k - 1, out);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

/// Upper bound on the box distance by searching transport plans.
///
/// Every returned value is an upper bound regardless of strategy; exact mode
/// is exact only over the enumerated plan family (bijections or refined unit
/// bijections), not over the whole polytope.
pub fn box_upper_plan_search<T: Real>(
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
    lambda: T,
    search: PlanSearch,
) -> Result<BoundReport<T>> {
    if !(lambda >= T::zero()) {
        return Err(Error::Domain("lambda must be nonnegative".into()));
    }
    equal_masses(x, y)?;
    let mut state = SearchState::new();
    let mut methods = Vec::new();
    let mut seed_used = None;

    match search {
        PlanSearch::Exact { max_refined_cells } => {
            methods.push("exact-plan-enumeration".into());
            exact_enumeration(x, y, lambda, max_refined_cells, &mut state)?;
        }
        PlanSearch::Local { max_moves } => {
            methods.push("vertex-pivot-descent".into());
            let row_order: Vec<usize> = (0..x.n_atoms()).collect();
            let col_order: Vec<usize> = (0..y.n_atoms()).collect();
            let start =
                TransportPlan::northwest_corner(x.weights(), y.weights(), &row_order, &col_order);
            local_search(start, x, y, lambda, max_moves, &mut state)?;
        }
        PlanSearch::SeededRestart {
            restarts,
            seed,
            max_moves,
        } => {
            methods.push("seeded-restart-pivot-descent".into());
            seed_used = Some(seed);
            let row_order: Vec<usize> = (0..x.n_atoms()).collect();
            let col_order: Vec<usize> = (0..y.n_atoms()).collect();
            let start =
                TransportPlan::northwest_corner(x.weights(), y.weights(), &row_order, &col_order);
            local_search(start, x, y, lambda, max_moves, &mut state)?;
            for r in 0..restarts {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64 + 1);
                let mut rows: Vec<usize> = (0..x.n_atoms()).collect();
                let mut cols: Vec<usize> = (0..y.n_atoms()).collect();
                rows.shuffle(&mut rng);
                cols.shuffle(&mut rng);
                let start =
                    TransportPlan::northwest_corner(x.weights(), y.weights(), &rows, &cols);
                local_search(start, x, y, lambda, max_moves, &mut state)?;
            }
            // At tiny uniform sizes the bijection family is cheap to close
            // over, which also makes restart mode dominate bijection mode.
            if let Some(w) = uniform_equal_mass(x, y) {
                if x.n_atoms() <= 6 {
                    methods.push("bijection-closure".into());
                    for perm in permutations(x.n_atoms()) {
                        let plan = TransportPlan::from_bijection(&perm, w);
                        state.offer(&plan, x, y, lambda)?;
                    }
                }
            }
        }
    }

    let plan = state
        .best_plan
        .as_ref()
        .ok_or_else(|| Error::Size("plan search produced no candidate".into()))?;
    let mut report = BoundReport::new(
        T::zero(),
        state.best_value,
        methods,
        LowerWitness::None,
        UpperWitness::PlanAndSubset {
            plan: plan.as_triples(),
            retained_cells: state.best_retained.clone(),
            epsilon: state.best_eps,
        },
    )?;
    report.seed = seed_used;
    Ok(report)
}

fn exact_enumeration<T: Real>(
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
    lambda: T,
    max_refined_cells: usize,
    state: &mut SearchState<T>,
) -> Result<()> {
    if let Some(w) = uniform_equal_mass(x, y) {
        let n = x.n_atoms();
        if n > BIJECTION_LIMIT {
            return Err(Error::Size(format!(
                "exact plan enumeration supports at most {BIJECTION_LIMIT} uniform atoms, got {n}"
            )));
        }
        for perm in permutations(n) {
            let plan = TransportPlan::from_bijection(&perm, w);
            state.offer(&plan, x, y, lambda)?;
        }
        return Ok(());
    }
    // Non-uniform weights: look for the largest uniform common refinement.
    let cap = max_refined_cells.min(BIJECTION_LIMIT).max(1);
    for cells in (1..=cap).rev() {
        let Some((owner_x, owner_y)) =
            uniform_common_refinement(x.weights(), y.weights(), cells, T::of(1e-9))
        else {
            continue;
        };
        let unit = x.total_mass() / T::of(cells as f64);
        for perm in permutations(cells) {
            // merge unit cells landing on the same atom pair
            let mut merged: std::collections::BTreeMap<(usize, usize), T> =
                std::collections::BTreeMap::new();
            for (a, &b) in perm.iter().enumerate() {
                let key = (owner_x[a], owner_y[b]);
                let slot = merged.entry(key).or_insert_with(T::zero);
                *slot = *slot + unit;
            }
            let cells_vec: Vec<PlanCell<T>> = merged
                .into_iter()
                .map(|((source, target), mass)| PlanCell {
                    source,
                    target,
                    mass,
                })
                .collect();
            let plan = TransportPlan::new(cells_vec, x.weights(), y.weights())?;
            state.offer(&plan, x, y, lambda)?;
        }
        return Ok(());
    }
    Err(Error::Size(format!(
        "weights admit no uniform common refinement with at most {cap} cells"
    )))
}

/// Best-improvement pivot descent over transportation-polytope vertices.
fn local_search<T: Real>(
    start: TransportPlan<T>,
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
    lambda: T,
    max_moves: usize,
    state: &mut SearchState<T>,
) -> Result<()> {
    let nx = x.n_atoms();
    let ny = y.n_atoms();
    let mut dense = vec![vec![T::zero(); ny]; nx];
    for c in start.cells() {
        dense[c.source][c.target] = dense[c.source][c.target] + c.mass;
    }
    let mut current_value = state.offer(&start, x, y, lambda)?;

    for _ in 0..max_moves {
        let mut best_move: Option<(usize, usize, T)> = None;
        for i in 0..nx {
            for j in 0..ny {
                if dense[i][j] > T::zero() {
                    continue;
                }
                let Some(theta) = pivot_amount(&dense, i, j) else {
                    continue;
                };
                if theta <= T::zero() {
                    continue;
                }
                let candidate_plan = pivoted_plan(&dense, i, j, theta, x, y)?;
                let (value, _, _) = evaluate_plan(&candidate_plan, x, y, lambda)?;
                if value < current_value
                    && best_move
                        .map(|(_, _, best)| {
                            value
                                < evaluate_plan(
                                    &pivoted_plan(&dense, best_move.unwrap().0, best_move.unwrap().1, best, x, y)
                                        .expect("pivot"),
                                    x,
                                    y,
                                    lambda,
                                )
                                .expect("eval")
                                .0
                        })
                        .unwrap_or(true)
                {
                    best_move = Some((i, j, theta));
                }
            }
        }
        let Some((i, j, theta)) = best_move else {
            break;
        };
        apply_pivot(&mut dense, i, j, theta);
        let plan = dense_to_plan(&dense, x, y)?;
        current_value = state.offer(&plan, x, y, lambda)?;
    }
    Ok(())
}

/// Finds the alternating cycle created by the entering cell (i, j) and
/// returns the maximal shiftable mass, or None when no cycle exists.
fn pivot_amount<T: Real>(dense: &[Vec<T>], enter_i: usize, enter_j: usize) -> Option<T> {
    let path = alternating_path(dense, enter_i, enter_j)?;
    let mut theta = T::infinity();
    for (k, &(r, c)) in path.iter().enumerate() {
        if k % 2 == 0 {
            theta = theta.min(dense[r][c]);
        }
    }
    (theta.is_finite() && theta > T::zero()).then_some(theta)
}

/// Cells along the support path from row `enter_i` to column `enter_j`,
/// ordered so that even positions lose mass and odd positions gain.
fn alternating_path<T: Real>(
    dense: &[Vec<T>],
    enter_i: usize,
    enter_j: usize,
) -> Option<Vec<(usize, usize)>> {
    let nx = dense.len();
    let ny = dense[0].len();
    // BFS over the bipartite support graph: nodes 0..nx rows, nx..nx+ny cols.
    let row_node = |r: usize| r;
    let col_node = |c: usize| nx + c;
    let mut parent: Vec<Option<(usize, (usize, usize))>> = vec![None; nx + ny];
    let mut visited = vec![false; nx + ny];
    let mut queue = std::collections::VecDeque::new();
    visited[row_node(enter_i)] = true;
    queue.push_back(row_node(enter_i));
    while let Some(node) = queue.pop_front() {
        if node == col_node(enter_j) {
            break;
        }
        if node < nx {
            let r = node;
            for c in 0..ny {
                if dense[r][c] > T::zero() && !visited[col_node(c)] {
                    visited[col_node(c)] = true;
                    parent[col_node(c)] = Some((node, (r, c)));
                    queue.push_back(col_node(c));
                }
            }
        } else {
            let c = node - nx;
            for r in 0..nx {
                if dense[r][c] > T::zero() && !visited[row_node(r)] {
                    visited[row_node(r)] = true;
                    parent[row_node(r)] = Some((node, (r, c)));
                    queue.push_back(row_node(r));
                }
            }
        }
    }
    if !visited[col_node(enter_j)] {
        return None;
    }
    let mut cells = Vec::new();
    let mut node = col_node(enter_j);
    while let Some((prev, cell)) = parent[node] {
        cells.push(cell);
        node = prev;
    }
    cells.reverse();
    Some(cells)
}

fn apply_pivot<T: Real>(dense: &mut [Vec<T>], enter_i: usize, enter_j: usize, theta: T) {
    if let Some(path) = alternating_path(dense, enter_i, enter_j) {
        dense[enter_i][enter_j] = dense[enter_i][enter_j] + theta;
        for (k, (r, c)) in path.into_iter().enumerate() {
            if k % 2 == 0 {
                dense[r][c] = (dense[r][c] - theta).max(T::zero());
            } else {
                dense[r][c] = dense[r][c] + theta;
            }
        }
    }
}

fn pivoted_plan<T: Real>(
    dense: &[Vec<T>],
    enter_i: usize,
    enter_j: usize,
    theta: T,
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
) -> Result<TransportPlan<T>> {
    let mut copy: Vec<Vec<T>> = dense.to_vec();
    apply_pivot(&mut copy, enter_i, enter_j, theta);
    dense_to_plan(&copy, x, y)
}

fn dense_to_plan<T: Real>(
    dense: &[Vec<T>],
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
) -> Result<TransportPlan<T>> {
    let mut cells = Vec::new();
    for (i, row) in dense.iter().enumerate() {
        for (j, &mass) in row.iter().enumerate() {
            if mass > T::zero() {
                cells.push(PlanCell {
                    source: i,
                    target: j,
                    mass,
                });
            }
        }
    }
    TransportPlan::new(cells, x.weights(), y.weights())
}

/// Box distance upper bound between arbitrary-mass spaces: orders the pair,
/// applies mass normalization, searches plans, and adds the additive term.
pub fn box_between<T: Real>(
    x: &FiniteMMSpace<T>,
    y: &FiniteMMSpace<T>,
    lambda: T,
    search: PlanSearch,
) -> Result<BoundReport<T>> {
    let (light, heavy_scaled, term, swapped) = if x.total_mass() <= y.total_mass() {
        let (a, b, t) = normalize_masses(x, y)?;
        (a, b, t, false)
    } else {
        let (a, b, t) = normalize_masses(y, x)?;
        (a, b, t, true)
    };
    let report = box_upper_plan_search(&light, &heavy_scaled, lambda, search)?;
    let mut out = if term > T::zero() {
        report.shifted(term, "mass-normalization-additive-term")
    } else {
        report
    };
    if swapped {
        out.methods.push("arguments-swapped".into());
    }
    Ok(out)
}

/// Ball-volume evaluator with a uniformity assertion.
#[derive(Clone, Debug)]
pub struct BallVolumeFunction<T> {
    pub source: BallVolumeSource<T>,
    /// Asserted by the caller: all balls of equal radius have equal measure.
    pub uniform: bool,
}

#[derive(Clone, Debug)]
pub enum BallVolumeSource<T> {
    /// Exact normalized ball volume of S^n.
    SphereClosedForm { n: usize },
    /// Conservative upper bound r^n vol(S^{n-1})/(n a_N vol(S^n)) for an
    /// n-manifold with positive Ricci curvature; valid on the X side of the
    /// certificate premise.
    BishopRelaxedUpper { n: usize, a_n: T },
    /// Conservative lower bound v_{S^m}(r sqrt kappa1) under
    /// Ric >= (m-1) kappa1; valid on the Y side of the premise.
    BishopGromovLower { m: usize, kappa1: T },
    /// Pooled empirical curve of a sampled probability space.
    Empirical { space: FiniteMMSpace<T> },
}

impl<T: Real> BallVolumeFunction<T> {
    pub fn sphere(n: usize) -> Self {
        Self {
            source: BallVolumeSource::SphereClosedForm { n },
            uniform: true,
        }
    }

    pub fn empirical(space: FiniteMMSpace<T>, uniform_asserted: bool) -> Self {
        Self {
            source: BallVolumeSource::Empirical { space },
            uniform: uniform_asserted,
        }
    }

    pub fn eval(&self, r: T) -> Result<T> {
        match &self.source {
            BallVolumeSource::SphereClosedForm { n } => {
                sphere_ball_fraction(*n, r.min(T::PI()).max(T::zero()))
            }
            BallVolumeSource::BishopRelaxedUpper { n, a_n } => {
                let b = crate::modelgeom::bishop_upper(*n, T::one(), *a_n, r)?;
                Ok(b.relaxed.min(T::one()))
            }
            BallVolumeSource::BishopGromovLower { m, kappa1 } => {
                let scaled = r * kappa1.sqrt();
                if scaled > T::PI() {
                    Ok(T::one())
                } else {
                    crate::modelgeom::bishop_gromov_lower(*m, *kappa1, r)
                }
            }
            BallVolumeSource::Empirical { space } => Ok(empirical_ball_volume(space, r)?.mean),
        }
    }

    pub fn provenance(&self) -> String {
        match &self.source {
            BallVolumeSource::SphereClosedForm { n } => format!("sphere-closed-form(n={n})"),
            BallVolumeSource::BishopRelaxedUpper { n, a_n } => {
                format!("bishop-relaxed-upper(n={n}, a_N={a_n})")
            }
            BallVolumeSource::BishopGromovLower { m, kappa1 } => {
                format!("bishop-gromov-lower(m={m}, kappa1={kappa1})")
            }
            BallVolumeSource::Empirical { space } => format!(
                "empirical(atoms={}, label={})",
                space.n_atoms(),
                space.label().unwrap_or("-")
            ),
        }
    }
}

/// Margin required of the premise inequality, against floating-point ties.
pub const CERTIFICATE_MARGIN: f64 = 1e-12;

/// Ball-volume comparison certificate: if v_X(a + c) <= (1 - c) v_Y(a / 2)
/// then the box distance of the probability pair at lambda = 1 is >= c.
///
/// Returns None when the premise fails; errors on domain violations.
pub fn box_lower_volume_certificate<T: Real>(
    v_x: &BallVolumeFunction<T>,
    v_y: &BallVolumeFunction<T>,
    a: T,
    c: T,
) -> Result<Option<BoundReport<T>>> {
    if !(c > T::zero() && c < T::one()) {
        return Err(Error::Domain(format!("c = {c} must lie in (0, 1)")));
    }
    if !(a > T::zero()) {
        return Err(Error::Domain(format!("a = {a} must be positive")));
    }
    if !v_x.uniform || !v_y.uniform {
        return Err(Error::Precondition(
            "volume certificate requires uniformly distributed measures on both sides".into(),
        ));
    }
    let outer = v_x.eval(a + c)?;
    let inner = v_y.eval(a / T::of(2.0))?;
    let margin = (T::one() - c) * inner - outer;
    if margin <= T::of(CERTIFICATE_MARGIN) {
        return Ok(None);
    }
    Ok(Some(BoundReport::new(
        c,
        T::one(),
        vec![
            "volume-comparison-certificate".into(),
            format!("vX: {}", v_x.provenance()),
            format!("vY: {}", v_y.provenance()),
            "probability-diameter-upper".into(),
        ],
        LowerWitness::VolumeComparison {
            a,
            c,
            v_x_outer: outer,
            v_y_inner: inner,
            margin,
        },
        UpperWitness::None,
    )?))
}

/// Diameter-gap certificate: for diameter-homogeneous probability spaces the
/// box distance at lambda = 1 is at least min{1/2, |diam X - diam Y|}.
pub fn box_lower_diameter_gap<T: Real>(
    x_spec: &ModelSpaceSpec<T>,
    y_spec: &ModelSpaceSpec<T>,
) -> Result<BoundReport<T>> {
    if !x_spec.diameter_homogeneous || !y_spec.diameter_homogeneous {
        return Err(Error::Unsupported(
            "diameter-gap certificate requires diameter-homogeneous spaces".into(),
        ));
    }
    let gap = (x_spec.diameter - y_spec.diameter).abs();
    let value = T::of(0.5).min(gap);
    BoundReport::new(
        value,
        T::one(),
        vec![
            "diameter-gap-certificate".into(),
            format!("X: {}({})", x_spec.kind.as_str(), x_spec.n),
            format!("Y: {}({})", y_spec.kind.as_str(), y_spec.n),
            "probability-diameter-upper".into(),
        ],
        LowerWitness::DiameterGap {
            diam_x: x_spec.diameter,
            diam_y: y_spec.diameter,
        },
        UpperWitness::None,
    )
}

/// Which consecutive-pair family the codimension-1 coupling runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodimFamily {
    Sphere,
    ComplexProjective,
}

/// Outcome of the empirical codimension-1 coupling.
#[derive(Clone, Debug)]
pub struct CodimCouplingReport<T> {
    pub report: BoundReport<T>,
    /// Empirical fraction of samples within eps of the equatorial subspace.
    pub fraction_projected: T,
    pub n: usize,
    pub count: usize,
    pub eps: T,
    pub seed: u64,
}

/// Samples S^n (or CP^n), couples points near the equatorial codimension-1
/// subspace to their metric projections and the rest to fresh uniform
/// samples, and evaluates the induced plan at lambda = 1.
pub fn codim1_coupling_upper<T: Real>(
    family: CodimFamily,
    n: usize,
    count: usize,
    eps: T,
    seed: u64,
) -> Result<CodimCouplingReport<T>> {
    if n < 2 {
        return Err(Error::Domain("need n >= 2 for a codimension-1 pair".into()));
    }
    if count < 100 {
        return Err(Error::Domain("need at least 100 samples".into()));
    }
    if !(eps > T::zero()) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    crate::samplers::MAX_ATOMS
        .ge(&count)
        .then_some(())
        .ok_or_else(|| {
            Error::Size(format!(
                "{count} atoms exceeds the full-matrix cap {}",
                crate::samplers::MAX_ATOMS
            ))
        })?;

    let tiny = T::of(1e-12);
    let mut projected = 0usize;
    let (d_source, d_target) = match family {
        CodimFamily::Sphere => {
            let mut sources: Vec<Vec<T>> = Vec::with_capacity(count);
            let mut targets: Vec<Vec<T>> = Vec::with_capacity(count);
            for i in 0..count {
                let mut rng = point_stream(seed, i as u64);
                // resample until the projection is defined when needed
                let (pt, tgt) = loop {
                    let pt = unit_sphere_point::<T>(&mut rng, n + 1);
                    let u_norm = pt[..n].iter().map(|&x| x * x).sum::<T>().sqrt();
                    let dist_to_equator = pt[n].abs().min(T::one()).asin();
                    if dist_to_equator <= eps {
                        if u_norm < tiny {
                            continue;
                        }
                        let tgt: Vec<T> = pt[..n].iter().map(|&x| x / u_norm).collect();
                        projected += 1;
                        break (pt, tgt);
                    }
                    let mut fresh = point_stream(seed, (count + i) as u64);
                    break (pt, unit_sphere_point::<T>(&mut fresh, n));
                };
                sources.push(pt);
                targets.push(tgt);
            }
            let d1 = SquareMatrix::from_fn(count, |i, j| sphere_geodesic(&sources[i], &sources[j]))?;
            let d2 = SquareMatrix::from_fn(count, |i, j| sphere_geodesic(&targets[i], &targets[j]))?;
            (d1, d2)
        }
        CodimFamily::ComplexProjective => {
            let mut sources: Vec<Vec<(T, T)>> = Vec::with_capacity(count);
            let mut targets: Vec<Vec<(T, T)>> = Vec::with_capacity(count);
            for i in 0..count {
                let mut rng = point_stream(seed, i as u64);
                let (pt, tgt) = loop {
                    let pt = unit_complex_point::<T>(&mut rng, n + 1);
                    let u_norm = pt[..n]
                        .iter()
                        .map(|&(re, im)| re * re + im * im)
                        .sum::<T>()
                        .sqrt();
                    let dist_to_sub = u_norm.min(T::one()).acos();
                    if dist_to_sub <= eps {
                        if u_norm < tiny {
                            continue;
                        }
                        let tgt: Vec<(T, T)> =
                            pt[..n].iter().map(|&(re, im)| (re / u_norm, im / u_norm)).collect();
                        projected += 1;
                        break (pt, tgt);
                    }
                    let mut fresh = point_stream(seed, (count + i) as u64);
                    break (pt, unit_complex_point::<T>(&mut fresh, n));
                };
                sources.push(pt);
                targets.push(tgt);
            }
            let d1 = SquareMatrix::from_fn(count, |i, j| cp_geodesic(&sources[i], &sources[j]))?;
            let d2 = SquareMatrix::from_fn(count, |i, j| cp_geodesic(&targets[i], &targets[j]))?;
            (d1, d2)
        }
    };

    let w = T::one() / T::of(count as f64);
    let pair = SemiMetricPair::new(vec![w; count], d_source, d_target)?;
    let mut report = box_lambda_pair(&pair, T::one(), PairMode::Heuristic { max_thresholds: 64 })?;
    report.seed = Some(seed);
    report.methods.push(format!(
        "codim1-coupling({}, n={n}, N={count}, eps={eps})",
        match family {
            CodimFamily::Sphere => "sphere",
            CodimFamily::ComplexProjective => "cp",
        }
    ));
    Ok(CodimCouplingReport {
        report,
        fraction_projected: T::of(projected as f64) / T::of(count as f64),
        n,
        count,
        eps,
        seed,
    })
}

/// Sphere family entry point.
pub fn sphere_codim1_coupling_upper<T: Real>(
    n: usize,
    count: usize,
    eps: T,
    seed: u64,
) -> Result<CodimCouplingReport<T>> {
    codim1_coupling_upper(CodimFamily::Sphere, n, count, eps, seed)
}

/// Complex projective family entry point.
pub fn cp_codim1_coupling_upper<T: Real>(
    n: usize,
    count: usize,
    eps: T,
    seed: u64,
) -> Result<CodimCouplingReport<T>> {
    codim1_coupling_upper(CodimFamily::ComplexProjective, n, count, eps, seed)
}

fn point_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample_space, SampleConfig, SampleKind};

    fn two_atom_space(d: f64) -> FiniteMMSpace<f64> {
        FiniteMMSpace::uniform(SquareMatrix::from_fn(2, |_, _| d).unwrap()).unwrap()
    }

    #[test]
    fn normalize_masses_examples() {
        let x = two_atom_space(1.0);
        let y = two_atom_space(0.5).scale_mass(2.0).unwrap();
        let (xs, ys, term) = normalize_masses(&x, &y).unwrap();
        assert_eq!(term, 1.0);
        assert!((ys.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(xs.total_mass(), 1.0);
        // distances untouched
        assert_eq!(ys.dist(0, 1), 0.5);

        let x2 = x.scale_mass(0.5).unwrap(); // mass 0.5
        let y2 = two_atom_space(1.0).scale_mass(0.75).unwrap(); // mass 0.75
        let (_, ys2, term2) = normalize_masses(&x2, &y2).unwrap();
        assert!((term2 - 0.25).abs() < 1e-12);
        assert!((ys2.weight(0) - 0.375 * 2.0 / 3.0).abs() < 1e-12);

        assert!(normalize_masses(&y, &x).is_err());
    }

    #[test]
    fn identity_pair_gives_zero() {
        let sp = two_atom_space(0.7);
        let r = box_upper_plan_search(
            &sp,
            &sp,
            1.0,
            PlanSearch::Exact {
                max_refined_cells: 8,
            },
        )
        .unwrap();
        assert_eq!(r.upper, 0.0);
    }

    #[test]
    fn two_atom_plan_formula() {
        for (a, b) in [(1.0, 0.4), (0.9, 0.85), (0.2, 1.0)] {
            let x = two_atom_space(a);
            let y = two_atom_space(b);
            let r = box_upper_plan_search(
                &x,
                &y,
                1.0,
                PlanSearch::Exact {
                    max_refined_cells: 8,
                },
            )
            .unwrap();
            let expected = (a - b).abs().min(0.5);
            assert!(
                (r.upper - expected).abs() < 1e-15,
                "a={a} b={b}: {} vs {expected}",
                r.upper
            );
        }
    }

    #[test]
    fn all_to_point_plan_is_forced() {
        let x = FiniteMMSpace::uniform(
            SquareMatrix::from_rows(&[
                vec![0.0, 0.3, 0.8],
                vec![0.3, 0.0, 0.5],
                vec![0.8, 0.5, 0.0],
            ])
            .unwrap(),
        )
        .unwrap();
        let y = FiniteMMSpace::one_point(1.0).unwrap();
        let r = box_upper_plan_search(
            &x,
            &y,
            1.0,
            PlanSearch::Local { max_moves: 10 },
        )
        .unwrap();
        // equals the pair-level value against the zero semimetric
        let zero = SquareMatrix::from_fn(3, |_, _| 0.0).unwrap();
        let pair = SemiMetricPair::new(
            x.weights().to_vec(),
            x.dist_matrix().clone(),
            zero,
        )
        .unwrap();
        let direct = box_lambda_pair(&pair, 1.0, PairMode::Exact).unwrap();
        assert!((r.upper - direct.upper).abs() < 1e-12);
    }

    #[test]
    fn exact_search_is_symmetric() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                FiniteMMSpace::uniform(
                    SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..2.0)).unwrap(),
                )
                .unwrap()
            };
            let x = mk(&mut rng);
            let y = mk(&mut rng);
            let search = PlanSearch::Exact {
                max_refined_cells: 8,
            };
            let xy = box_upper_plan_search(&x, &y, 1.0, search).unwrap();
            let yx = box_upper_plan_search(&y, &x, 1.0, search).unwrap();
            assert!((xy.upper - yx.upper).abs() < 1e-9);
        }
    }

    #[test]
    fn refinement_handles_non_uniform_weights() {
        // X: weights (1/3, 2/3); Y: uniform over 3 atoms -> refine to 3 cells
        let x = FiniteMMSpace::from_rows(
            vec![1.0 / 3.0, 2.0 / 3.0],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let y = FiniteMMSpace::uniform(SquareMatrix::from_fn(3, |_, _| 1.0).unwrap()).unwrap();
        let r = box_upper_plan_search(
            &x,
            &y,
            1.0,
            PlanSearch::Exact {
                max_refined_cells: 6,
            },
        )
        .unwrap();
        assert!(r.upper <= 1.0 + 1e-9);
    }

    #[test]
    fn probability_upper_at_most_one() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let m = rng.gen_range(2..=5);
            let x = FiniteMMSpace::uniform(
                SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..3.0)).unwrap(),
            )
            .unwrap();
            let y = FiniteMMSpace::uniform(
                SquareMatrix::from_fn(m, |_, _| rng.gen_range(0.0..3.0)).unwrap(),
            )
            .unwrap();
            let r = box_upper_plan_search(
                &x,
                &y,
                1.0,
                PlanSearch::SeededRestart {
                    restarts: 4,
                    seed: 1,
                    max_moves: 50,
                },
            )
            .unwrap();
            assert!(r.upper <= 1.0 + 1e-9, "upper = {}", r.upper);
        }
    }

    #[test]
    fn restart_dominates_bijections_on_tiny_uniform_instances() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.gen_range(2..=5);
            let x = FiniteMMSpace::uniform(
                SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..2.0)).unwrap(),
            )
            .unwrap();
            let y = FiniteMMSpace::uniform(
                SquareMatrix::from_fn(n, |_, _| rng.gen_range(0.0..2.0)).unwrap(),
            )
            .unwrap();
            let exact = box_upper_plan_search(
                &x,
                &y,
                1.0,
                PlanSearch::Exact {
                    max_refined_cells: 8,
                },
            )
            .unwrap();
            let restart = box_upper_plan_search(
                &x,
                &y,
                1.0,
                PlanSearch::SeededRestart {
                    restarts: 4,
                    seed: 3,
                    max_moves: 60,
                },
            )
            .unwrap();
            assert!(restart.upper <= exact.upper + 1e-9);
        }
    }

    #[test]
    fn mass_normalization_additive_identity() {
        let x = two_atom_space(1.0); // mass 1
        let y = two_atom_space(0.4).scale_mass(2.0).unwrap(); // mass 2
        let combined = box_between(
            &x,
            &y,
            1.0,
            PlanSearch::Exact {
                max_refined_cells: 8,
            },
        )
        .unwrap();
        let (xs, ys, term) = normalize_masses(&x, &y).unwrap();
        let inner = box_upper_plan_search(
            &xs,
            &ys,
            1.0,
            PlanSearch::Exact {
                max_refined_cells: 8,
            },
        )
        .unwrap();
        assert_eq!(combined.upper, inner.upper + term);
    }

    #[test]
    fn volume_certificate_examples() {
        // failing premise: identical spheres
        let v2 = BallVolumeFunction::<f64>::sphere(2);
        assert!(box_lower_volume_certificate(&v2, &v2, 0.3, 0.3)
            .unwrap()
            .is_none());
        // domain errors
        assert!(box_lower_volume_certificate(&v2, &v2, 0.3, 1.0).is_err());
        assert!(box_lower_volume_certificate(&v2, &v2, 0.3, 0.0).is_err());
        assert!(box_lower_volume_certificate(&v2, &v2, 0.0, 0.3).is_err());
        // non-uniform flag rejected
        let sp: FiniteMMSpace<f64> = sample_space(&SampleConfig {
            kind: SampleKind::Sphere { n: 2 },
            count: 50,
            seed: 0,
        })
        .unwrap();
        let emp = BallVolumeFunction::empirical(sp, false);
        assert!(box_lower_volume_certificate(&emp, &v2, 0.3, 0.3).is_err());
    }

    #[test]
    fn volume_certificate_reference_chain() {
        // S^10 against S^2 at a = c = c*(2, 10): exact ball fractions satisfy
        // the premise with real margin.
        let c = crate::modelgeom::volume_comparison_max_c::<f64>(2, 10, 1.0, 1.0)
            .unwrap()
            .c_star;
        let v10 = BallVolumeFunction::<f64>::sphere(10);
        let v2 = BallVolumeFunction::<f64>::sphere(2);
        let cert = box_lower_volume_certificate(&v10, &v2, c, c)
            .unwrap()
            .expect("certificate fires");
        assert_eq!(cert.lower, c);
        match cert.lower_witness {
            LowerWitness::VolumeComparison { margin, .. } => assert!(margin > 1e-4),
            ref w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn diameter_gap_examples() {
        let so = |n: usize| ModelSpaceSpec::<f64>::special_orthogonal(n).unwrap();
        assert_eq!(box_lower_diameter_gap(&so(4), &so(3)).unwrap().lower, 0.5);
        assert_eq!(box_lower_diameter_gap(&so(3), &so(2)).unwrap().lower, 0.0);
        assert_eq!(box_lower_diameter_gap(&so(5), &so(5)).unwrap().lower, 0.0);
        let cp = ModelSpaceSpec::<f64>::complex_projective(2).unwrap();
        assert!(box_lower_diameter_gap(&so(3), &cp).is_err());
    }

    #[test]
    fn codim1_large_eps_bounded_by_two_eps() {
        // eps = pi/2 puts every sample within the band, so every point is
        // projected and all pair discrepancies are at most 2 eps.
        let eps = std::f64::consts::FRAC_PI_2;
        let out = sphere_codim1_coupling_upper::<f64>(3, 150, eps, 4).unwrap();
        assert_eq!(out.fraction_projected, 1.0);
        assert!(out.report.upper <= 2.0 * eps + 1e-9);
    }

    #[test]
    fn codim1_rejects_bad_input() {
        assert!(sphere_codim1_coupling_upper::<f64>(1, 200, 0.3, 0).is_err());
        assert!(sphere_codim1_coupling_upper::<f64>(4, 50, 0.3, 0).is_err());
        assert!(sphere_codim1_coupling_upper::<f64>(4, 200, 0.0, 0).is_err());
    }

    #[test]
    fn codim1_cp_family_runs() {
        let out = cp_codim1_coupling_upper::<f64>(3, 120, 0.4, 2).unwrap();
        assert!(out.report.upper <= 1.0 + 1e-9);
        assert!(out.fraction_projected >= 0.0 && out.fraction_projected <= 1.0);
    }
}
