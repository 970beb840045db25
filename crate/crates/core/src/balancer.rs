//! Minimizes `f(A) = max_i lambda_1(A^T M_i A) / Tr(A^T M_i A)` over
//! symmetric positive-definite `A` with `s_1(A) = 1` and consecutive
//! singular-value ratios at most `R`.
//!
//! Each iteration perturbs `A` by a rank-one factor `A (Id + eps eta eta^T)`.
//! Away from the ratio constraint, `eta` is orthogonal to the top `k - 1`
//! eigenvectors of every active `A M_i A`, so those eigenvalues survive the
//! perturbation while every trace grows. On the constraint boundary, `eta`
//! comes from a kernel vector of the first-order quadratic form of the active
//! top eigenvalues, shifted so the binding ratios shrink to first order.
//! A backtracking line search then accepts the first step that stays in the
//! domain and strictly lowers `f`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BalanceError, Result};
use crate::perturbation::{
    canonical_null_vector, check_u_condition, eta_from_u, lemr_point, null_space, qform_build, qform_kernel,
    rank_one_update, QForm,
};
use crate::sampling::unit_vector;
use crate::spectral::{
    max_of, ratios_unchecked, singular_values_in_domain, svd, MatrixSet, SpectralProfile, Svd, SymMatrix,
};

/// First trial step of the line search.
pub const INITIAL_STEP: f64 = 0.5;
/// A step is accepted only if it lowers `f` by at least this much.
pub const MIN_DECREASE: f64 = 1e-14;
/// Starting ratio bound for [`RatioBound::Auto`].
pub const AUTO_RATIO_START: f64 = 16.0;
/// Number of times [`RatioBound::Auto`] doubles the ratio bound.
pub const AUTO_ESCALATIONS: usize = 4;
/// Random null-space directions tried before declaring a stall.
const STALL_PROBES: usize = 8;
/// Shift radii tried, in order, when the configured `c0` does not produce
/// a boundary-feasible `u` for a ratio bound below `R(c0)`.
const C0_FALLBACKS: [f64; 4] = [0.5, 0.7, 0.85, 0.95];

/// A balancing instance: the family and the target `k`.
#[derive(Debug, Clone)]
pub struct BalanceProblem {
    pub set: MatrixSet,
    pub k: usize,
    /// `d > k` and `l <= floor((d - 1) / (k - 1))`.
    pub feasible: bool,
}

impl BalanceProblem {
    pub fn new(set: MatrixSet, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(BalanceError::Config(format!("k must be at least 2, got {k}")));
        }
        let feasible = feasibility_violation(set.dim(), set.len(), k).is_none();
        Ok(BalanceProblem { set, k, feasible })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Largest family size the count bound allows for this `d` and `k`.
    pub fn max_family_size(&self) -> usize {
        (self.dim() - 1) / (self.k - 1)
    }
}

/// Describes which balancing hypothesis `(d, l, k)` violates, if any.
pub fn feasibility_violation(d: usize, l: usize, k: usize) -> Option<String> {
    if k < 2 {
        return Some(format!("k = {k} must be at least 2"));
    }
    if d <= k {
        return Some(format!("requires d > k, but d = {d} and k = {k}"));
    }
    let bound = (d - 1) / (k - 1);
    if l > bound {
        return Some(format!(
            "requires l <= floor((d-1)/(k-1)), but l = {l} > floor(({d}-1)/({k}-1)) = {bound}"
        ));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RatioBound {
    /// Start at [`AUTO_RATIO_START`] and double on stalls or exhausted
    /// budgets, [`AUTO_ESCALATIONS`] times.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancerConfig {
    pub ratio_bound: RatioBound,
    /// Stop once `f(A) < 1/k - target_margin`.
    pub target_margin: f64,
    /// Iteration budget per ratio bound.
    pub max_iterations: usize,
    /// Indices within this much of `f(A)` are active.
    pub active_tol: f64,
    pub step_shrink: f64,
    pub min_step: f64,
    /// Shift radius for boundary steps.
    pub c0: f64,
    /// Seeds the random probe directions tried before giving up at a stall.
    pub seed: u64,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig {
            ratio_bound: RatioBound::Auto,
            target_margin: 1e-6,
            max_iterations: 2000,
            active_tol: 1e-8,
            step_shrink: 0.5,
            min_step: 1e-12,
            c0: 0.25,
            seed: 0,
        }
    }
}

impl BalancerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(BalanceError::Config(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("target_margin", self.target_margin)?;
        positive("active_tol", self.active_tol)?;
        positive("min_step", self.min_step)?;
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(BalanceError::Config(format!(
                "step_shrink must lie in (0, 1), got {}",
                self.step_shrink
            )));
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return Err(BalanceError::Config(format!("c0 must lie in (0, 1), got {}", self.c0)));
        }
        if self.max_iterations == 0 {
            return Err(BalanceError::Config("max_iterations must be positive".into()));
        }
        if let RatioBound::Fixed(r) = self.ratio_bound {
            if !(r > 1.0 && r.is_finite()) {
                return Err(BalanceError::Config(format!("ratio bound R must exceed 1, got {r}")));
            }
        }
        Ok(())
    }

    fn ratio_schedule(&self) -> Vec<f64> {
        match self.ratio_bound {
            RatioBound::Fixed(r) => vec![r],
            RatioBound::Auto => (0..=AUTO_ESCALATIONS)
                .map(|n| AUTO_RATIO_START * 2f64.powi(n as i32))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub kind: StepKind,
    pub epsilon: f64,
    pub f_before: f64,
    pub f_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    IterationLimit,
    Infeasible,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::IterationLimit => "IterationLimit",
            Status::Infeasible => "Infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BalanceResult {
    /// Symmetric positive definite, `s_1 = 1`.
    pub a: DMatrix<f64>,
    pub final_score: f64,
    pub per_matrix_ratios: Vec<f64>,
    pub iterations: usize,
    pub step_log: Vec<StepRecord>,
    pub status: Status,
    /// Ratio bound in force when the run ended; `a` lies in its domain.
    pub ratio_bound: f64,
    /// Points where no direction lowered `f`, as `(iteration, R)`.
    pub stalls: Vec<(usize, f64)>,
}

/// `{i : f_i(A) >= f(A) - active_tol}` (0-based).
pub fn active_set(a: &DMatrix<f64>, set: &MatrixSet, active_tol: f64) -> Result<Vec<usize>> {
    let ratios = crate::spectral::balance_ratios(a, set)?;
    Ok(active_from_ratios(&ratios, active_tol))
}

fn active_from_ratios(ratios: &[f64], active_tol: f64) -> Vec<usize> {
    let f = max_of(ratios);
    (0..ratios.len()).filter(|&i| ratios[i] >= f - active_tol).collect()
}

/// Top `k - 1` unit eigenvectors of `A^T M_i A` for each active `i`, as rows.
fn top_eigenvector_rows(a: &DMatrix<f64>, set: &MatrixSet, active: &[usize], k: usize) -> DMatrix<f64> {
    let d = set.dim();
    let per = (k - 1).min(d);
    let mut rows = DMatrix::zeros(active.len() * per, d);
    for (n, &i) in active.iter().enumerate() {
        let eig = set.get(i).congruence(a).eig();
        for j in 0..per {
            rows.set_row(n * per + j, &eig.vectors.column(j).transpose());
        }
    }
    rows
}

/// Unit vector orthogonal to the top `k - 1` eigenvectors of every active
/// `A^T M_i A`. Among the admissible directions the one with
/// lexicographically largest leading component is returned.
pub fn interior_direction(a: &DMatrix<f64>, set: &MatrixSet, active: &[usize], k: usize) -> Result<DVector<f64>> {
    let d = set.dim();
    if active.is_empty() {
        let mut e1 = DVector::zeros(d);
        e1[0] = 1.0;
        return Ok(e1);
    }
    let rows = top_eigenvector_rows(a, set, active, k);
    let basis = null_space(&rows, d)?;
    Ok(canonical_null_vector(&basis))
}

/// Checks `A(eps)^T M A(eps) q = lambda q` to `1e-9 lambda`, where
/// `A(eps) = A (Id + eps v v^T)` and `lambda = q^T A^T M A q`.
pub fn eigenvector_preservation_check(
    a: &DMatrix<f64>,
    m: &SymMatrix,
    v: &DVector<f64>,
    q: &DVector<f64>,
    epsilon: f64,
) -> bool {
    let lambda = m.congruence(a).matrix().dot(&(q * q.transpose()));
    let moved = m.congruence(&rank_one_update(a, v, epsilon));
    let residual = (moved.matrix() * q - q * lambda).norm();
    residual <= 1e-9 * lambda.abs()
}

/// Boundary step direction in both coordinate systems.
#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    pub eta: DVector<f64>,
    /// `u_j = s_j <eta, w_j>`.
    pub u: DVector<f64>,
    /// Kernel vector of the quadratic form that `u` was shifted from.
    pub u_tilde: DVector<f64>,
    /// Shift radius actually used (0 when no tight ratio needed a shift).
    pub shift: f64,
    /// Largest step the line search starts from.
    pub epsilon_max: f64,
    pub qform: QForm,
    pub profile: SpectralProfile,
}

/// Kernel direction of the active quadratic form, shifted by
/// [`lemr_point`] so every tight ratio shrinks to first order.
pub fn boundary_direction(
    a: &DMatrix<f64>,
    set: &MatrixSet,
    active: &[usize],
    k: usize,
    r: f64,
    c0: f64,
) -> Result<PerturbationPlan> {
    let profile = SpectralProfile::with_ratio_bound(a, r)?;
    let qform = qform_build(a, set, active, k)?;
    let u_tilde = qform_kernel(&qform)?;
    let (u, shift) = if profile.tight_set.is_empty() {
        (u_tilde.clone(), 0.0)
    } else {
        std::iter::once(c0)
            .chain(C0_FALLBACKS.into_iter().filter(|&c| c > c0))
            .find_map(|c| {
                let (u, _) = lemr_point(&u_tilde, c).ok()?;
                check_u_condition(&profile, &u, r).then_some((u, c))
            })
            .ok_or_else(|| {
                BalanceError::Infeasible(format!(
                    "no shift radius in [{c0}, 1) satisfies the tight ratio conditions at R = {r}"
                ))
            })?
    };
    let eta = eta_from_u(&profile, &u);
    Ok(PerturbationPlan {
        eta,
        u,
        u_tilde,
        shift,
        epsilon_max: INITIAL_STEP,
        qform,
        profile,
    })
}

/// Accepted line-search step.
#[derive(Debug, Clone)]
pub struct Step {
    pub epsilon: f64,
    /// Symmetric positive definite with `s_1 = 1`.
    pub next: DMatrix<f64>,
    pub ratios: Vec<f64>,
    pub score: f64,
}

/// Symmetric positive-definite factor of the polar decomposition, scaled to
/// `s_1 = 1`, with its singular values.
fn polar_normalized(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let Svd {
        u: p,
        singular_values: s,
        ..
    } = svd(a);
    let top = s[0];
    let scaled: Vec<f64> = s.iter().map(|x| x / top).collect();
    let b = &p * DMatrix::from_diagonal(&DVector::from_column_slice(&scaled)) * p.transpose();
    (SymMatrix::symmetrize(&b).into_matrix(), scaled)
}

/// Backtracks from [`INITIAL_STEP`] along the unit direction of `eta` until
/// the normalized polar factor of `A (Id + eps eta eta^T)` is in the domain
/// and lowers `f` by at least [`MIN_DECREASE`]. `None` when the step falls
/// below `min_step`.
pub fn line_search(
    a: &DMatrix<f64>,
    set: &MatrixSet,
    eta: &DVector<f64>,
    r: f64,
    config: &BalancerConfig,
) -> Option<Step> {
    let norm = eta.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let dir = eta / norm;
    let f0 = max_of(&ratios_unchecked(a, set));
    let mut eps = INITIAL_STEP;
    while eps >= config.min_step {
        let (next, s) = polar_normalized(&rank_one_update(a, &dir, eps));
        if s[s.len() - 1] > 0.0 && singular_values_in_domain(&s, r) {
            let ratios = ratios_unchecked(&next, set);
            let score = max_of(&ratios);
            if score <= f0 - MIN_DECREASE {
                return Some(Step {
                    epsilon: eps,
                    next,
                    ratios,
                    score,
                });
            }
        }
        eps *= config.step_shrink;
    }
    None
}

/// Balances the family: returns `A` with every ratio below `1/k` when the
/// run converges.
pub fn balance(problem: &BalanceProblem, config: &BalancerConfig) -> Result<BalanceResult> {
    config.validate()?;
    let d = problem.dim();
    let k = problem.k;
    if let Some(violation) = feasibility_violation(d, problem.set.len(), k) {
        return Err(BalanceError::Infeasible(violation));
    }
    let set = &problem.set;
    let target = 1.0 / k as f64 - config.target_margin;

    let mut a = DMatrix::<f64>::identity(d, d);
    let mut ratios = ratios_unchecked(&a, set);
    let mut score = max_of(&ratios);
    let mut log = Vec::new();
    let mut stalls = Vec::new();
    let mut iterations = 0;
    let schedule = config.ratio_schedule();
    let mut status = Status::IterationLimit;
    let mut r_used = schedule[0];

    'stages: for &r in &schedule {
        r_used = r;
        for _ in 0..config.max_iterations {
            if score < target {
                status = Status::Converged;
                break 'stages;
            }
            iterations += 1;
            match descent_step(&a, set, k, r, &ratios, config, iterations) {
                Ok(Some((kind, step))) => {
                    log.push(StepRecord {
                        iteration: iterations,
                        kind,
                        epsilon: step.epsilon,
                        f_before: score,
                        f_after: step.score,
                    });
                    a = step.next;
                    ratios = step.ratios;
                    score = step.score;
                }
                Ok(None) => {
                    stalls.push((iterations, r));
                    continue 'stages;
                }
                Err(BalanceError::Infeasible(_)) => {
                    status = Status::Infeasible;
                    break 'stages;
                }
                Err(e) => return Err(e),
            }
        }
    }
    if score < target {
        status = Status::Converged;
    }

    Ok(BalanceResult {
        a,
        final_score: score,
        per_matrix_ratios: ratios,
        iterations,
        step_log: log,
        status,
        ratio_bound: r_used,
        stalls,
    })
}

/// One accepted step, or `None` at a stall.
fn descent_step(
    a: &DMatrix<f64>,
    set: &MatrixSet,
    k: usize,
    r: f64,
    ratios: &[f64],
    config: &BalancerConfig,
    iteration: usize,
) -> Result<Option<(StepKind, Step)>> {
    let active = active_from_ratios(ratios, config.active_tol);
    let profile = SpectralProfile::with_ratio_bound(a, r)?;

    let interior = |a: &DMatrix<f64>| -> Result<Option<Step>> {
        let v = interior_direction(a, set, &active, k)?;
        Ok(line_search(a, set, &v, r, config))
    };

    if profile.tight_set.is_empty() {
        if let Some(step) = interior(a)? {
            return Ok(Some((StepKind::Interior, step)));
        }
    } else {
        match boundary_direction(a, set, &active, k, r, config.c0) {
            Ok(plan) => {
                if let Some(step) = line_search(a, set, &plan.eta, r, config) {
                    return Ok(Some((StepKind::Boundary, step)));
                }
            }
            Err(BalanceError::AlreadyBalanced(_)) | Err(BalanceError::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
        if let Some(step) = interior(a)? {
            return Ok(Some((StepKind::Interior, step)));
        }
    }

    // Random directions orthogonal to the same eigenvectors as the interior
    // direction, drawn from a stream fixed by (seed, iteration).
    let rows = top_eigenvector_rows(a, set, &active, k);
    let basis = null_space(&rows, set.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(iteration as u64);
    for _ in 0..STALL_PROBES {
        let coeffs = unit_vector(&mut rng, basis.ncols());
        let dir = &basis * coeffs;
        let kind = if profile.tight_set.is_empty() {
            StepKind::Interior
        } else {
            StepKind::Boundary
        };
        if let Some(step) = line_search(a, set, &dir, r, config) {
            return Ok(Some((kind, step)));
        }
    }
    Ok(None)
}

/// Closed-form balancing of two 3x3 matrices: whiten `M1`, diagonalize the
/// whitened `M2 = V diag(a, b, c) V^T` with `a >= b >= c`, then scale the
/// top direction by `sqrt(b / a)`. Both ratios end up strictly below 1/2.
pub fn pair_balance(m1: &SymMatrix, m2: &SymMatrix) -> Result<DMatrix<f64>> {
    if m1.dim() != 3 || m2.dim() != 3 {
        return Err(BalanceError::Config(format!(
            "pair balancing is defined for 3x3 matrices, got {} and {}",
            m1.dim(),
            m2.dim()
        )));
    }
    m1.check_positive_definite()?;
    m2.check_positive_definite()?;
    let e1 = m1.eig();
    let inv_sqrt = e1.values.map(|x| 1.0 / x.sqrt());
    let whiten = &e1.vectors * DMatrix::from_diagonal(&inv_sqrt) * e1.vectors.transpose();
    let e2 = m2.congruence(&whiten).eig();
    let mut v = e2.vectors.clone();
    for mut col in v.column_iter_mut() {
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            col.neg_mut();
        }
    }
    let (top, mid) = (e2.values[0], e2.values[1]);
    let scale = DMatrix::from_diagonal(&DVector::from_vec(vec![(mid / top).sqrt(), 1.0, 1.0]));
    Ok(whiten * v * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{balance_ratios, in_domain};
    use approx::assert_relative_eq;

    fn set_of(ms: Vec<SymMatrix>) -> MatrixSet {
        MatrixSet::new(ms).unwrap()
    }

    fn intro_pair() -> MatrixSet {
        set_of(vec![SymMatrix::identity(3), SymMatrix::from_diagonal(&[4.0, 1.0, 0.5])])
    }

    #[test]
    fn feasibility_messages() {
        assert!(feasibility_violation(3, 2, 2).is_none());
        assert!(feasibility_violation(3, 3, 2).unwrap().contains("floor"));
        assert!(feasibility_violation(3, 1, 3).unwrap().contains("d > k"));
    }

    #[test]
    fn active_set_examples() {
        let one = set_of(vec![SymMatrix::from_diagonal(&[3.0, 1.0, 1.0])]);
        assert_eq!(active_set(&DMatrix::identity(3, 3), &one, 1e-8).unwrap(), vec![0]);
        assert_eq!(active_from_ratios(&[0.5, 0.3], 1e-6), vec![0]);
        assert_eq!(active_from_ratios(&[0.5, 0.5 - 1e-9], 1e-6), vec![0, 1]);
    }

    #[test]
    fn interior_direction_simple() {
        let set = set_of(vec![SymMatrix::from_diagonal(&[2.0, 1.0, 1.0])]);
        let v = interior_direction(&DMatrix::identity(3, 3), &set, &[0], 2).unwrap();
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-14);
        assert!(v[0].abs() < 1e-14);
        let none = interior_direction(&DMatrix::identity(3, 3), &set, &[], 2).unwrap();
        assert_eq!(none, DVector::from_vec(vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn preservation_identity_and_negative_control() {
        let m = SymMatrix::from_rows(&[vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 1.0]]).unwrap();
        let set = set_of(vec![m.clone()]);
        let a = DMatrix::identity(3, 3);
        let q = m.eig().vectors.column(0).into_owned();
        let v = interior_direction(&a, &set, &[0], 2).unwrap();
        assert!(eigenvector_preservation_check(&a, &m, &v, &q, 0.0));
        assert!(eigenvector_preservation_check(&a, &m, &v, &q, 0.1));
        let bad = (&q + &v).normalize();
        assert!(!eigenvector_preservation_check(&a, &m, &bad, &q, 0.1));
    }

    #[test]
    fn line_search_rejects_zero_direction() {
        let set = intro_pair();
        let cfg = BalancerConfig::default();
        assert!(line_search(&DMatrix::identity(3, 3), &set, &DVector::zeros(3), 16.0, &cfg).is_none());
    }

    #[test]
    fn line_search_interior_decreases_and_normalizes() {
        let set = intro_pair();
        let a = DMatrix::identity(3, 3);
        let cfg = BalancerConfig::default();
        let f0 = max_of(&ratios_unchecked(&a, &set));
        let active = active_set(&a, &set, cfg.active_tol).unwrap();
        let v = interior_direction(&a, &set, &active, 2).unwrap();
        let step = line_search(&a, &set, &v, 16.0, &cfg).unwrap();
        assert!(step.score < f0);
        let s = crate::spectral::singular_values(&step.next);
        assert!((s[0] - 1.0).abs() < 1e-9);
        assert!((&step.next - step.next.transpose()).amax() < 1e-15);
        assert!(SymMatrix::symmetrize(&step.next).check_positive_definite().is_ok());
    }

    #[test]
    fn identity_family_converges_immediately() {
        let set = set_of(vec![SymMatrix::identity(5); 2]);
        let problem = BalanceProblem::new(set, 3).unwrap();
        let res = balance(&problem, &BalancerConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert_eq!(res.iterations, 0);
        assert!(res.step_log.is_empty());
        assert_relative_eq!(res.final_score, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn intro_pair_converges() {
        let problem = BalanceProblem::new(intro_pair(), 2).unwrap();
        let res = balance(&problem, &BalancerConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(res.per_matrix_ratios.iter().all(|&x| x < 0.5 - 1e-6));
        assert!(in_domain(&res.a, res.ratio_bound).unwrap());
        for w in res.step_log.windows(2) {
            assert!(w[1].f_after < w[0].f_after);
        }
    }

    #[test]
    fn infeasible_problems_rejected() {
        let three = set_of(vec![SymMatrix::identity(3); 3]);
        let err = balance(&BalanceProblem::new(three, 2).unwrap(), &BalancerConfig::default()).unwrap_err();
        assert!(
            matches!(err, BalanceError::Infeasible(ref m) if m.contains("floor")),
            "{err}"
        );
        let k_eq_d = set_of(vec![SymMatrix::identity(3)]);
        let err = balance(&BalanceProblem::new(k_eq_d, 3).unwrap(), &BalancerConfig::default()).unwrap_err();
        assert!(
            matches!(err, BalanceError::Infeasible(ref m) if m.contains("d > k")),
            "{err}"
        );
    }

    #[test]
    fn pair_balance_intro_example() {
        let set = intro_pair();
        let a = pair_balance(set.get(0), set.get(1)).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 1.0]));
        assert!((&a - expect).amax() < 1e-15);
        let r = balance_ratios(&a, &set).unwrap();
        assert_relative_eq!(r[0], 1.0 / 2.25, epsilon = 1e-15);
        assert_relative_eq!(r[1], 1.0 / 2.5, epsilon = 1e-15);
    }

    #[test]
    fn pair_balance_identity_pair() {
        let a = pair_balance(&SymMatrix::identity(3), &SymMatrix::identity(3)).unwrap();
        assert!((&a - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn pair_balance_rejects_wrong_dimension() {
        assert!(matches!(
            pair_balance(&SymMatrix::identity(4), &SymMatrix::identity(4)),
            Err(BalanceError::Config(_))
        ));
    }
}
