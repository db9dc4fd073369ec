//! Weighted soft-margin kernel SVM.
//!
//! Solves the dual problem
//!
//! ```text
//! max_d  sum_i d_i - 1/2 sum_ij d_i d_j y_i y_j K(x_i, x_j)
//! s.t.   sum_i y_i d_i = 0,   0 <= d_i <= c * v_i
//! ```
//!
//! by two-variable working-set optimization with per-sample upper bounds.
//! The pair is the maximal violating one under the usual first-order
//! optimality measure; ties break toward the lowest index, so the solver
//! is deterministic for fixed inputs.

use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelParams};

/// Weight threshold below which a sample is excluded from the working set
/// a priori (its box collapses to a point at zero).
const WEIGHT_EXCLUSION: f64 = 1e-12;

/// Minimum curvature along a feasible direction.
const TAU: f64 = 1e-12;

/// Cap on working-set selections before the solver gives up.
const MAX_WORKING_SET: usize = 100_000;

/// A binary class label, -1 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryLabel {
    Minus,
    Plus,
}

impl BinaryLabel {
    pub fn sign(self) -> f64 {
        match self {
            BinaryLabel::Plus => 1.0,
            BinaryLabel::Minus => -1.0,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            BinaryLabel::Plus
        } else {
            BinaryLabel::Minus
        }
    }
}

/// Solution of the weighted dual problem.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// The non-negative multipliers, one per training sample.
    pub delta: Vec<f64>,
    pub bias: f64,
    /// Final dual objective value.
    pub objective: f64,
    /// Working-set selections performed.
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Solves the weighted dual; see the module docs for the problem statement.
///
/// `tol` bounds the final first-order violation (see [`kkt_violation`]).
/// Samples with `v[i] = 0` keep `delta[i] = 0` exactly.
pub fn solve_weighted_dual(
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    v: &[f64],
    c: f64,
    params: &KernelParams,
    tol: f64,
) -> Result<DualSolution> {
    let (solution, _) = solve_inner(xs, y, v, c, params, tol, false)?;
    Ok(solution)
}

/// As [`solve_weighted_dual`], additionally recording the dual objective
/// after every working-set step.
pub fn solve_weighted_dual_traced(
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    v: &[f64],
    c: f64,
    params: &KernelParams,
    tol: f64,
) -> Result<(DualSolution, Vec<f64>)> {
    let (solution, trace) = solve_inner(xs, y, v, c, params, tol, true)?;
    Ok((solution, trace))
}

fn solve_inner(
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    v: &[f64],
    c: f64,
    params: &KernelParams,
    tol: f64,
    record: bool,
) -> Result<(DualSolution, Vec<f64>)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::EmptyInput { needed: 2, got: n });
    }
    if y.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: y.len().min(v.len()),
        });
    }
    if !(c > 0.0) {
        return Err(Error::InvalidConfig(format!("c must be positive, got {c}")));
    }
    let dim = xs[0].len();
    for x in xs {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: x.len(),
            });
        }
    }
    for (pos, w) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(w) {
            return Err(Error::InvalidConfig(format!("weight v[{pos}] = {w} outside [0,1]")));
        }
    }
    for label in [BinaryLabel::Plus, BinaryLabel::Minus] {
        let total: f64 = y
            .iter()
            .zip(v.iter())
            .filter(|(l, _)| **l == label)
            .map(|(_, w)| *w)
            .sum();
        if total <= 0.0 {
            let which = match label {
                BinaryLabel::Plus => "positive",
                BinaryLabel::Minus => "negative",
            };
            return Err(Error::DegenerateProblem(which));
        }
    }

    let gram = GramMatrix::new(xs, params);
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let bounds: Vec<f64> = v.iter().map(|w| c * w).collect();
    let active: Vec<usize> = (0..n).filter(|&i| v[i] >= WEIGHT_EXCLUSION).collect();

    let mut delta = vec![0.0; n];
    // gradient of f(d) = 1/2 d'Qd - sum(d); at d = 0 it is -1 everywhere
    let mut grad = vec![-1.0; n];
    let mut objective_trace = Vec::new();
    let mut objective = 0.0;
    if record {
        objective_trace.push(objective);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_WORKING_SET {
        // maximal violating pair over the active set
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        let mut i_up = usize::MAX;
        let mut j_low = usize::MAX;
        for &t in &active {
            let score = -ys[t] * grad[t];
            let positive = ys[t] > 0.0;
            let below_upper = delta[t] < bounds[t];
            let above_lower = delta[t] > 0.0;
            let in_up = (positive && below_upper) || (!positive && above_lower);
            let in_low = (positive && above_lower) || (!positive && below_upper);
            if in_up && score > m_up {
                m_up = score;
                i_up = t;
            }
            if in_low && score < m_low {
                m_low = score;
                j_low = t;
            }
        }
        if i_up == usize::MAX || j_low == usize::MAX || m_up - m_low <= tol {
            converged = i_up == usize::MAX || j_low == usize::MAX || m_up - m_low <= tol;
            break;
        }

        let (i, j) = (i_up, j_low);
        iterations += 1;

        // curvature along the feasible direction e_i - s*e_j is always
        // K_ii + K_jj - 2 K_ij regardless of the label pattern
        let kii = gram.at(i, i);
        let kjj = gram.at(j, j);
        let kij = gram.at(i, j);
        let eta = (kii + kjj - 2.0 * kij).max(TAU);
        let s = ys[i] * ys[j];

        // unconstrained minimizer along the direction, then box clipping
        let g_dir = grad[i] - s * grad[j];
        let mut step = -g_dir / eta;
        let (lo_i, hi_i) = (-delta[i], bounds[i] - delta[i]);
        let (lo_j, hi_j) = if s > 0.0 {
            (delta[j] - bounds[j], delta[j])
        } else {
            (-delta[j], bounds[j] - delta[j])
        };
        let lo = lo_i.max(lo_j);
        let hi = hi_i.min(hi_j);
        step = step.clamp(lo, hi);
        if step == 0.0 {
            // the pair is blocked; at the maximal violating pair this only
            // happens at numerical exhaustion
            converged = true;
            break;
        }

        let di = step;
        let dj = -s * step;
        // objective gain of the quadratic model is exact for this step
        objective -= g_dir * step + 0.5 * eta * step * step;
        delta[i] = (delta[i] + di).clamp(0.0, bounds[i]);
        delta[j] = (delta[j] + dj).clamp(0.0, bounds[j]);
        for &t in &active {
            let q_ti = ys[t] * ys[i] * gram.at(t, i);
            let q_tj = ys[t] * ys[j] * gram.at(t, j);
            grad[t] += q_ti * di + q_tj * dj;
        }
        if record {
            objective_trace.push(objective);
        }
    }

    // exact objective from the final gradient: d'Qd = sum_i d_i (g_i + 1)
    let sum_delta: f64 = delta.iter().sum();
    let quad: f64 = delta.iter().zip(grad.iter()).map(|(d, g)| d * (g + 1.0)).sum();
    let objective = sum_delta - 0.5 * quad;

    let bias = compute_bias(&delta, &grad, &ys, &bounds, &active);
    Ok((
        DualSolution {
            delta,
            bias,
            objective,
            iterations,
            converged,
        },
        objective_trace,
    ))
}

/// Margin threshold for counting a multiplier as free when averaging the
/// bias.
const FREE_MARGIN: f64 = 1e-9;

fn compute_bias(delta: &[f64], grad: &[f64], ys: &[f64], bounds: &[f64], active: &[usize]) -> f64 {
    // free vectors give b = -y_t * grad_t exactly at optimality
    let mut sum = 0.0;
    let mut count = 0usize;
    for &t in active {
        if delta[t] > FREE_MARGIN && delta[t] < bounds[t] - FREE_MARGIN {
            sum += -ys[t] * grad[t];
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    // otherwise the feasible interval midpoint from the bound vectors
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &t in active {
        let b_t = -ys[t] * grad[t];
        let positive = ys[t] > 0.0;
        let at_lower = delta[t] <= FREE_MARGIN;
        // at the lower bound the constraint is y(f) >= 1, at the upper y(f) <= 1
        if at_lower == positive {
            lo = lo.max(b_t);
        } else {
            hi = hi.min(b_t);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Threshold relative to `c` above which a multiplier is kept as a
/// support vector.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// A trained binary model: support vectors, their signed coefficients,
/// and the bias.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support_features: Vec<Vec<f64>>,
    /// `delta_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub params: KernelParams,
}

impl SvmModel {
    /// Builds a model keeping samples with `delta > 1e-8 * c`.
    ///
    /// A solution with no support vectors cannot produce a decision
    /// function and is rejected.
    pub fn from_solution(
        xs: &[Vec<f64>],
        y: &[BinaryLabel],
        solution: &DualSolution,
        c: f64,
        params: &KernelParams,
    ) -> Result<Self> {
        if xs.len() != solution.delta.len() || y.len() != solution.delta.len() {
            return Err(Error::DimensionMismatch {
                left: xs.len(),
                right: solution.delta.len(),
            });
        }
        let threshold = SUPPORT_THRESHOLD * c;
        let mut support_features = Vec::new();
        let mut coefficients = Vec::new();
        for ((x, label), &d) in xs.iter().zip(y.iter()).zip(solution.delta.iter()) {
            if d > threshold {
                support_features.push(x.clone());
                coefficients.push(d * label.sign());
            }
        }
        if support_features.is_empty() {
            return Err(Error::InvalidModel);
        }
        Ok(Self {
            support_features,
            coefficients,
            bias: solution.bias,
            params: *params,
        })
    }

    pub fn sv_count(&self) -> usize {
        self.support_features.len()
    }

    /// Decision value `f(x) = sum_i coef_i K(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let dim = self.support_features[0].len();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: x.len(),
            });
        }
        let mut f = self.bias;
        for (sv, coef) in self.support_features.iter().zip(self.coefficients.iter()) {
            f += coef * crate::kernel::rbf_unchecked(sv, x, self.params.gamma);
        }
        Ok(f)
    }
}

/// Hinge losses `max(0, 1 - y_i f(x_i))` of a model over a sample set.
pub fn hinge_losses(model: &SvmModel, xs: &[Vec<f64>], y: &[BinaryLabel]) -> Result<Vec<f64>> {
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: xs.len(),
            right: y.len(),
        });
    }
    xs.iter()
        .zip(y.iter())
        .map(|(x, label)| {
            let f = model.decision(x)?;
            Ok((1.0 - label.sign() * f).max(0.0))
        })
        .collect()
}

/// Maximum first-order optimality residual of a dual solution.
///
/// Per sample, using `f_i = sum_j delta_j y_j K_ij + b`:
/// at the lower bound the residual is `max(0, 1 - y_i f_i)`, at the upper
/// bound `max(0, y_i f_i - 1)`, and in the interior `|1 - y_i f_i|`.
/// Samples whose box is a single point (`c v_i = 0`) impose nothing.
pub fn kkt_violation(
    solution: &DualSolution,
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    v: &[f64],
    c: f64,
    params: &KernelParams,
) -> Result<f64> {
    let n = xs.len();
    if y.len() != n || v.len() != n || solution.delta.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: solution.delta.len(),
        });
    }
    let gram = GramMatrix::new(xs, params);
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        let cap = c * v[i];
        if cap <= 0.0 {
            continue;
        }
        let mut u = 0.0;
        for j in 0..n {
            if solution.delta[j] != 0.0 {
                u += solution.delta[j] * ys[j] * gram.at(i, j);
            }
        }
        let margin = ys[i] * (u + solution.bias);
        let d = solution.delta[i];
        let residual = if d <= FREE_MARGIN {
            (1.0 - margin).max(0.0)
        } else if d >= cap - FREE_MARGIN {
            (margin - 1.0).max(0.0)
        } else {
            (1.0 - margin).abs()
        };
        worst = worst.max(residual);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> KernelParams {
        KernelParams::gaussian(0.5).unwrap()
    }

    fn mirror_problem() -> (Vec<Vec<f64>>, Vec<BinaryLabel>) {
        (
            vec![vec![1.0, 0.5], vec![-1.0, -0.5]],
            vec![BinaryLabel::Plus, BinaryLabel::Minus],
        )
    }

    #[test]
    fn mirror_symmetry_forces_equal_multipliers() {
        let (xs, y) = mirror_problem();
        let sol = solve_weighted_dual(&xs, &y, &[1.0, 1.0], 10.0, &params(), 1e-8).unwrap();
        assert!((sol.delta[0] - sol.delta[1]).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!(sol.converged);
    }

    #[test]
    fn mirror_decisions_are_antisymmetric() {
        let (xs, y) = mirror_problem();
        let sol = solve_weighted_dual(&xs, &y, &[1.0, 1.0], 10.0, &params(), 1e-8).unwrap();
        let model = SvmModel::from_solution(&xs, &y, &sol, 10.0, &params()).unwrap();
        let f0 = model.decision(&xs[0]).unwrap();
        let f1 = model.decision(&xs[1]).unwrap();
        assert!((f0 + f1).abs() < 1e-9);
        assert!(f0 > 0.0);
    }

    #[test]
    fn strongly_classified_support_vector() {
        let (xs, y) = mirror_problem();
        let sol = solve_weighted_dual(&xs, &y, &[1.0, 1.0], 10.0, &params(), 1e-8).unwrap();
        let model = SvmModel::from_solution(&xs, &y, &sol, 10.0, &params()).unwrap();
        let f = model.decision(&xs[0]).unwrap();
        assert!(f.abs() >= 1.0 - 1e-6);
    }

    #[test]
    fn empty_model_is_rejected() {
        let (xs, y) = mirror_problem();
        let sol = DualSolution {
            delta: vec![0.0, 0.0],
            bias: 0.0,
            objective: 0.0,
            iterations: 0,
            converged: true,
        };
        assert!(matches!(
            SvmModel::from_solution(&xs, &y, &sol, 10.0, &params()),
            Err(Error::InvalidModel)
        ));
    }

    #[test]
    fn hinge_loss_values() {
        // a synthetic model whose decision at x=[t] is exactly t
        let model = SvmModel {
            support_features: vec![vec![0.0]],
            coefficients: vec![1.0],
            bias: 0.0,
            params: KernelParams::gaussian(1.0).unwrap(),
        };
        // choose x so that y*f hits 1, 0 and -0.5
        // f([0]) = 1 (kernel at zero distance), y=+1 -> loss 0
        let loss = hinge_losses(&model, &[vec![0.0]], &[BinaryLabel::Plus]).unwrap();
        assert_eq!(loss[0], 0.0);
        // y=-1 with f=1 gives margin -1 -> loss 2; bias shifts give the rest
        let model0 = SvmModel {
            bias: -1.0,
            ..model.clone()
        };
        let loss = hinge_losses(&model0, &[vec![0.0]], &[BinaryLabel::Plus]).unwrap();
        assert_eq!(loss[0], 1.0); // y*f = 0
        let model_neg = SvmModel {
            bias: -1.5,
            ..model
        };
        let loss = hinge_losses(&model_neg, &[vec![0.0]], &[BinaryLabel::Plus]).unwrap();
        assert_eq!(loss[0], 1.5); // y*f = -0.5
    }

    #[test]
    fn zero_delta_violation_on_separable_problem() {
        let (xs, y) = mirror_problem();
        let sol = DualSolution {
            delta: vec![0.0, 0.0],
            bias: 0.0,
            objective: 0.0,
            iterations: 0,
            converged: true,
        };
        let viol = kkt_violation(&sol, &xs, &y, &[1.0, 1.0], 10.0, &params()).unwrap();
        assert!(viol >= 1.0);
    }

    #[test]
    fn perturbed_interior_multiplier_violates() {
        let (xs, y) = mirror_problem();
        let mut sol = solve_weighted_dual(&xs, &y, &[1.0, 1.0], 10.0, &params(), 1e-10).unwrap();
        let base = kkt_violation(&sol, &xs, &y, &[1.0, 1.0], 10.0, &params()).unwrap();
        assert!(base <= 1e-6);
        sol.delta[0] += 0.1;
        let viol = kkt_violation(&sol, &xs, &y, &[1.0, 1.0], 10.0, &params()).unwrap();
        assert!(viol > base);
        assert!(viol > 0.0);
    }

    #[test]
    fn box_and_equality_constraints_hold() {
        let xs: Vec<Vec<f64>> = (0..14)
            .map(|i| vec![(i as f64 * 0.77).sin() * 2.0, (i as f64 * 1.3).cos()])
            .collect();
        let y: Vec<BinaryLabel> = (0..14)
            .map(|i| if i % 2 == 0 { BinaryLabel::Plus } else { BinaryLabel::Minus })
            .collect();
        let v: Vec<f64> = (0..14).map(|i| ((i as f64 * 0.37).sin().abs()).min(1.0)).collect();
        let c = 5.0;
        let sol = solve_weighted_dual(&xs, &y, &v, c, &params(), 1e-4).unwrap();
        let mut eq = 0.0;
        for i in 0..14 {
            assert!(sol.delta[i] >= 0.0);
            assert!(sol.delta[i] <= c * v[i] + 1e-9);
            eq += y[i].sign() * sol.delta[i];
        }
        assert!(eq.abs() <= 1e-8);
        let viol = kkt_violation(&sol, &xs, &y, &v, c, &params()).unwrap();
        assert!(viol <= 1e-4 + 1e-9, "violation {viol}");
    }

    #[test]
    fn monotone_dual_objective() {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.51).sin() * 3.0, (i as f64 * 0.29).cos() * 2.0])
            .collect();
        let y: Vec<BinaryLabel> = (0..20)
            .map(|i| if i % 3 == 0 { BinaryLabel::Plus } else { BinaryLabel::Minus })
            .collect();
        let (_, trace) =
            solve_weighted_dual_traced(&xs, &y, &vec![1.0; 20], 8.0, &params(), 1e-8).unwrap();
        assert!(trace.len() > 1);
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12, "objective decreased: {pair:?}");
        }
    }

    #[test]
    fn zero_weight_sample_keeps_zero_multiplier() {
        let mut xs: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64 % 5.0 - 2.0, (i / 5) as f64 * 4.0 - 2.0])
            .collect();
        xs[3] = vec![100.0, -100.0]; // an outlier that must be ignored
        let y: Vec<BinaryLabel> = (0..10)
            .map(|i| if i < 5 { BinaryLabel::Plus } else { BinaryLabel::Minus })
            .collect();
        let mut v = vec![1.0; 10];
        v[3] = 0.0;
        let sol = solve_weighted_dual(&xs, &y, &v, 10.0, &params(), 1e-8).unwrap();
        assert_eq!(sol.delta[3], 0.0);
    }

    #[test]
    fn degenerate_class_weight_errors() {
        let (xs, y) = mirror_problem();
        assert!(matches!(
            solve_weighted_dual(&xs, &y, &[1.0, 0.0], 10.0, &params(), 1e-6),
            Err(Error::DegenerateProblem(_))
        ));
    }
}
