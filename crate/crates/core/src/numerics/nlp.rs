//! Nonlinear (nonconvex) local solver.
//!
//! Augmented-Lagrangian outer loop with first-order multiplier updates;
//! the inner bound-constrained subproblems are minimized by a damped
//! quasi-Newton method (BFGS model, trust-region step cap, projection
//! onto the box). Analytic first derivatives are required; an optional
//! derivative-check mode compares them against central finite
//! differences before solving.

use super::{SolverResult, SolverStatus};
use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlpError {
    #[error("inconsistent problem dimensions: {0}")]
    Dimension(String),
}

/// Smooth constrained problem with analytic first derivatives.
///
/// Inequalities use the `g(x) <= 0` convention. Jacobians are dense
/// row-major (`constraint_count x n`).
pub trait NlpProblem {
    fn n(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn eq_count(&self) -> usize {
        0
    }
    fn eq_constraints(&self, _x: &[f64], _out: &mut [f64]) {}
    fn eq_jacobian(&self, _x: &[f64], _jac: &mut [f64]) {}

    fn ineq_count(&self) -> usize {
        0
    }
    fn ineq_constraints(&self, _x: &[f64], _out: &mut [f64]) {}
    fn ineq_jacobian(&self, _x: &[f64], _jac: &mut [f64]) {}

    /// (lower, upper) variable bounds.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn initial_point(&self) -> Vec<f64>;
}

/// Multiplier and penalty state carried between related solves.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub lambda_eq: Vec<f64>,
    pub lambda_in: Vec<f64>,
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct NlpOptions {
    /// First-order KKT tolerance.
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Validate gradients and Jacobians against central differences at
    /// the starting point before solving.
    pub derivative_check: bool,
    pub initial_penalty: f64,
    pub warm_start: Option<WarmStart>,
}

impl Default for NlpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer: 60,
            max_inner: 400,
            derivative_check: false,
            initial_penalty: 10.0,
            warm_start: None,
        }
    }
}

pub fn solve_nlp(problem: &dyn NlpProblem, options: &NlpOptions) -> SolverResult {
    solve_nlp_full(problem, options).0
}

/// Like [`solve_nlp`] but also returns the final multiplier state for
/// warm-starting a subsequent, nearby solve.
pub fn solve_nlp_full(
    problem: &dyn NlpProblem,
    options: &NlpOptions,
) -> (SolverResult, WarmStart) {
    let n = problem.n();
    let me = problem.eq_count();
    let mi = problem.ineq_count();
    let (lo, hi) = problem.bounds();
    assert_eq!(lo.len(), n);
    assert_eq!(hi.len(), n);

    let empty_warm = |x: Vec<f64>| WarmStart {
        x,
        lambda_eq: vec![0.0; me],
        lambda_in: vec![0.0; mi],
        penalty: options.initial_penalty,
    };

    for j in 0..n {
        if lo[j] > hi[j] {
            let res = SolverResult {
                status: SolverStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                kkt_residual: f64::INFINITY,
                iterations: 0,
                message: Some(format!("variable {j} has crossing bounds")),
            };
            return (res, empty_warm(vec![0.0; n]));
        }
    }

    let mut x = options
        .warm_start
        .as_ref()
        .map(|w| w.x.clone())
        .unwrap_or_else(|| problem.initial_point());
    assert_eq!(x.len(), n);
    clamp(&mut x, &lo, &hi);

    if options.derivative_check {
        if let Some(msg) = derivative_check(problem, &x) {
            let res = SolverResult {
                status: SolverStatus::NumericalFailure,
                x,
                objective: f64::NAN,
                kkt_residual: f64::INFINITY,
                iterations: 0,
                message: Some(msg),
            };
            return (res, empty_warm(vec![0.0; n]));
        }
    }

    let mut lambda_eq = options
        .warm_start
        .as_ref()
        .map(|w| w.lambda_eq.clone())
        .unwrap_or_else(|| vec![0.0; me]);
    let mut lambda_in = options
        .warm_start
        .as_ref()
        .map(|w| w.lambda_in.clone())
        .unwrap_or_else(|| vec![0.0; mi]);
    let mut mu = options
        .warm_start
        .as_ref()
        .map(|w| w.penalty)
        .unwrap_or(options.initial_penalty);

    let mut omega = (1.0 / mu).min(1e-2);
    let mut eta = 0.1f64;
    let mut best_violation = f64::INFINITY;
    let mut stalled = 0usize;
    let mut total_inner = 0usize;

    for outer in 0..options.max_outer {
        let al = AugLag {
            problem,
            lambda_eq: &lambda_eq,
            lambda_in: &lambda_in,
            mu,
        };
        let inner_tol = omega.max(0.05 * options.tol);
        let inner = inner_minimize(&al, &mut x, &lo, &hi, inner_tol, options.max_inner);
        total_inner += inner;

        let mut ce = vec![0.0; me];
        let mut gi = vec![0.0; mi];
        problem.eq_constraints(&x, &mut ce);
        problem.ineq_constraints(&x, &mut gi);
        if ce.iter().chain(gi.iter()).any(|v| !v.is_finite()) {
            let res = SolverResult {
                status: SolverStatus::NumericalFailure,
                objective: problem.objective(&x),
                x: x.clone(),
                kkt_residual: f64::INFINITY,
                iterations: outer + 1,
                message: Some("constraint evaluation produced a non-finite value".into()),
            };
            let warm = WarmStart {
                x,
                lambda_eq,
                lambda_in,
                penalty: mu,
            };
            return (res, warm);
        }

        // First-order multiplier estimates at the current point.
        let lhat_eq: Vec<f64> = (0..me).map(|i| lambda_eq[i] + mu * ce[i]).collect();
        let lhat_in: Vec<f64> = (0..mi)
            .map(|i| (lambda_in[i] + mu * gi[i]).max(0.0))
            .collect();

        let feas = ce
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(gi.iter().fold(0.0f64, |m, v| m.max(v.max(0.0))));
        let comp = (0..mi).fold(0.0f64, |m, i| {
            m.max((lhat_in[i] * gi[i]).abs() / (1.0 + lhat_in[i].abs()))
        });
        let stat = stationarity(problem, &x, &lhat_eq, &lhat_in, &lo, &hi);
        let kkt = stat.max(feas).max(comp);

        if kkt <= options.tol {
            let res = SolverResult {
                status: SolverStatus::Optimal,
                objective: problem.objective(&x),
                x: x.clone(),
                kkt_residual: kkt,
                iterations: outer + 1,
                message: None,
            };
            let warm = WarmStart {
                x,
                lambda_eq: lhat_eq,
                lambda_in: lhat_in,
                penalty: mu,
            };
            return (res, warm);
        }

        // Shifted violation governs the multiplier-vs-penalty decision.
        let shifted = ce.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(
            (0..mi).fold(0.0f64, |m, i| m.max(gi[i].max(-lambda_in[i] / mu).abs())),
        );
        if shifted <= eta {
            lambda_eq = lhat_eq;
            lambda_in = lhat_in;
            eta = (eta * mu.powf(-0.9)).max(0.1 * options.tol);
            omega = (omega / mu).max(0.05 * options.tol);
        } else {
            mu = (mu * 10.0).min(1e12);
            eta = mu.powf(-0.1).max(0.1 * options.tol);
            omega = (1.0 / mu).max(0.05 * options.tol);
        }

        if feas < best_violation * 0.9 {
            best_violation = feas;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if mu >= 1e12 && stalled >= 4 && feas > options.tol.max(1e-7) * 1e2 {
            let res = SolverResult {
                status: SolverStatus::Infeasible,
                objective: problem.objective(&x),
                x: x.clone(),
                kkt_residual: kkt,
                iterations: outer + 1,
                message: Some(format!(
                    "constraint violation {feas:.3e} stalled at maximum penalty"
                )),
            };
            let warm = WarmStart {
                x,
                lambda_eq,
                lambda_in,
                penalty: mu,
            };
            return (res, warm);
        }
    }

    let mut ce = vec![0.0; me];
    problem.eq_constraints(&x, &mut ce);
    let res = SolverResult {
        status: SolverStatus::MaxIterations,
        objective: problem.objective(&x),
        x: x.clone(),
        kkt_residual: f64::NAN,
        iterations: options.max_outer,
        message: Some(format!("outer iteration limit ({} inner steps)", total_inner)),
    };
    let warm = WarmStart {
        x,
        lambda_eq,
        lambda_in,
        penalty: mu,
    };
    (res, warm)
}

/// Augmented Lagrangian of the problem at fixed multipliers/penalty.
struct AugLag<'a> {
    problem: &'a dyn NlpProblem,
    lambda_eq: &'a [f64],
    lambda_in: &'a [f64],
    mu: f64,
}

impl AugLag<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let me = self.problem.eq_count();
        let mi = self.problem.ineq_count();
        let mut val = self.problem.objective(x);
        if me > 0 {
            let mut ce = vec![0.0; me];
            self.problem.eq_constraints(x, &mut ce);
            for i in 0..me {
                val += self.lambda_eq[i] * ce[i] + 0.5 * self.mu * ce[i] * ce[i];
            }
        }
        if mi > 0 {
            let mut gi = vec![0.0; mi];
            self.problem.ineq_constraints(x, &mut gi);
            for i in 0..mi {
                let t = (self.lambda_in[i] + self.mu * gi[i]).max(0.0);
                val += (t * t - self.lambda_in[i] * self.lambda_in[i]) / (2.0 * self.mu);
            }
        }
        val
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let n = self.problem.n();
        let me = self.problem.eq_count();
        let mi = self.problem.ineq_count();
        self.problem.gradient(x, grad);
        if me > 0 {
            let mut ce = vec![0.0; me];
            let mut jac = vec![0.0; me * n];
            self.problem.eq_constraints(x, &mut ce);
            self.problem.eq_jacobian(x, &mut jac);
            for i in 0..me {
                let w = self.lambda_eq[i] + self.mu * ce[i];
                for j in 0..n {
                    grad[j] += w * jac[i * n + j];
                }
            }
        }
        if mi > 0 {
            let mut gi = vec![0.0; mi];
            let mut jac = vec![0.0; mi * n];
            self.problem.ineq_constraints(x, &mut gi);
            self.problem.ineq_jacobian(x, &mut jac);
            for i in 0..mi {
                let w = (self.lambda_in[i] + self.mu * gi[i]).max(0.0);
                if w > 0.0 {
                    for j in 0..n {
                        grad[j] += w * jac[i * n + j];
                    }
                }
            }
        }
    }
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for j in 0..x.len() {
        x[j] = x[j].max(lo[j]).min(hi[j]);
    }
}

/// Infinity norm of the projected gradient of the Lagrangian at the
/// first-order multiplier estimates.
fn stationarity(
    problem: &dyn NlpProblem,
    x: &[f64],
    lhat_eq: &[f64],
    lhat_in: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> f64 {
    let n = problem.n();
    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    let me = lhat_eq.len();
    let mi = lhat_in.len();
    if me > 0 {
        let mut jac = vec![0.0; me * n];
        problem.eq_jacobian(x, &mut jac);
        for i in 0..me {
            for j in 0..n {
                grad[j] += lhat_eq[i] * jac[i * n + j];
            }
        }
    }
    if mi > 0 {
        let mut jac = vec![0.0; mi * n];
        problem.ineq_jacobian(x, &mut jac);
        for i in 0..mi {
            if lhat_in[i] > 0.0 {
                for j in 0..n {
                    grad[j] += lhat_in[i] * jac[i * n + j];
                }
            }
        }
    }
    (0..n).fold(0.0f64, |m, j| {
        let stepped = (x[j] - grad[j]).max(lo[j]).min(hi[j]);
        m.max((stepped - x[j]).abs())
    })
}

/// Projected quasi-Newton minimization of the augmented Lagrangian over
/// the box. Returns the number of inner iterations used.
fn inner_minimize(
    al: &AugLag,
    x: &mut Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_inner: usize,
) -> usize {
    let n = x.len();
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut grad = vec![0.0; n];
    al.gradient(x, &mut grad);
    let mut fval = al.value(x);
    let mut radius = 1.0f64;

    for iter in 0..max_inner {
        let pg = (0..n).fold(0.0f64, |m, j| {
            let stepped = (x[j] - grad[j]).max(lo[j]).min(hi[j]);
            m.max((stepped - x[j]).abs())
        });
        if pg <= tol || !pg.is_finite() {
            return iter;
        }

        // Free set: variables not pinned at an active bound.
        let free: Vec<usize> = (0..n)
            .filter(|&j| {
                let eps = 1e-9 * (1.0 + x[j].abs());
                !((x[j] - lo[j] <= eps && grad[j] > 0.0)
                    || (hi[j] - x[j] <= eps && grad[j] < 0.0))
            })
            .collect();
        if free.is_empty() {
            return iter;
        }

        // Damped Newton direction on the free subspace from the BFGS
        // model, capped by the trust radius.
        let nf = free.len();
        let mut bff = DMatrix::zeros(nf, nf);
        for (a, &ja) in free.iter().enumerate() {
            for (c, &jc) in free.iter().enumerate() {
                bff[(a, c)] = b[(ja, jc)];
            }
        }
        let gf = DVector::from_fn(nf, |i, _| grad[free[i]]);
        let mut tau = 0.0f64;
        let dir_f = loop {
            let mut m = bff.clone();
            for i in 0..nf {
                m[(i, i)] += tau;
            }
            if let Some(chol) = Cholesky::new(m) {
                break chol.solve(&(-&gf));
            }
            tau = (tau * 10.0).max(1e-8);
            if tau > 1e12 {
                break -&gf;
            }
        };
        let mut dir = vec![0.0; n];
        for (i, &j) in free.iter().enumerate() {
            dir[j] = dir_f[i];
        }
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm > radius {
            let scale = radius / norm;
            dir.iter_mut().for_each(|d| *d *= scale);
        }

        // Backtracking projected line search (Armijo).
        let mut alpha = 1.0f64;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fval;
        for _ in 0..40 {
            for j in 0..n {
                x_new[j] = (x[j] + alpha * dir[j]).max(lo[j]).min(hi[j]);
            }
            let decrease: f64 = (0..n).map(|j| grad[j] * (x_new[j] - x[j])).sum();
            f_new = al.value(&x_new);
            if f_new.is_finite() && f_new <= fval + 1e-4 * decrease.min(0.0) && f_new < fval {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Fall back to a projected-gradient probe before giving up.
            let mut alpha_g = 1.0 / (1.0 + grad.iter().map(|g| g.abs()).fold(0.0, f64::max));
            for _ in 0..40 {
                for j in 0..n {
                    x_new[j] = (x[j] - alpha_g * grad[j]).max(lo[j]).min(hi[j]);
                }
                f_new = al.value(&x_new);
                if f_new.is_finite() && f_new < fval {
                    accepted = true;
                    break;
                }
                alpha_g *= 0.5;
            }
            if !accepted {
                return iter;
            }
            radius = (radius * 0.5).max(1e-10);
            b = DMatrix::identity(n, n);
        }

        // Trust-radius update from the model-vs-actual ratio.
        let step: Vec<f64> = (0..n).map(|j| x_new[j] - x[j]).collect();
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let mut bs = vec![0.0; n];
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += b[(r, c)] * step[c];
            }
            bs[r] = acc;
        }
        let predicted: f64 = (0..n)
            .map(|j| grad[j] * step[j] + 0.5 * step[j] * bs[j])
            .sum();
        let actual = f_new - fval;
        if predicted < 0.0 {
            let ratio = actual / predicted;
            if ratio > 0.75 && step_norm > 0.9 * radius {
                radius = (radius * 2.0).min(1e6);
            } else if ratio < 0.25 {
                radius = (radius * 0.5).max(1e-10);
            }
        }

        // Damped BFGS update.
        let mut g_new = vec![0.0; n];
        al.gradient(&x_new, &mut g_new);
        let yv: Vec<f64> = (0..n).map(|j| g_new[j] - grad[j]).collect();
        let sy: f64 = step.iter().zip(&yv).map(|(s, y)| s * y).sum();
        let sbs: f64 = step.iter().zip(&bs).map(|(s, v)| s * v).sum();
        if step_norm > 0.0 && sbs > 0.0 {
            let theta = if sy >= 0.2 * sbs {
                1.0
            } else {
                0.8 * sbs / (sbs - sy)
            };
            let yt: Vec<f64> = (0..n)
                .map(|j| theta * yv[j] + (1.0 - theta) * bs[j])
                .collect();
            let syt: f64 = step.iter().zip(&yt).map(|(s, y)| s * y).sum();
            if syt > 1e-12 {
                for r in 0..n {
                    for c in 0..n {
                        b[(r, c)] += yt[r] * yt[c] / syt - bs[r] * bs[c] / sbs;
                    }
                }
            }
        }

        *x = x_new.clone();
        grad = g_new;
        fval = f_new;
    }
    max_inner
}

/// Central-difference validation of all first derivatives at `x`.
/// Returns a diagnostic when any component mismatches beyond 1e-4
/// relative error.
fn derivative_check(problem: &dyn NlpProblem, x: &[f64]) -> Option<String> {
    let n = problem.n();
    let h = 1e-6;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);

    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = h * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        let fp = problem.objective(&xp);
        xp[j] = x[j] - step;
        let fm = problem.objective(&xp);
        xp[j] = x[j];
        let fd = (fp - fm) / (2.0 * step);
        if rel(grad[j], fd) > 1e-4 {
            return Some(format!(
                "objective gradient component {j}: analytic {:.6e}, finite difference {fd:.6e}",
                grad[j]
            ));
        }
    }

    let check_block = |what: &str,
                       count: usize,
                       eval: &dyn Fn(&[f64], &mut [f64]),
                       jac_eval: &dyn Fn(&[f64], &mut [f64])|
     -> Option<String> {
        if count == 0 {
            return None;
        }
        let mut j_analytic = vec![0.0; count * n];
        jac_eval(x, &mut j_analytic);
        let mut cp = vec![0.0; count];
        let mut cm = vec![0.0; count];
        let mut xp = x.to_vec();
        for j in 0..n {
            let step = h * (1.0 + x[j].abs());
            xp[j] = x[j] + step;
            eval(&xp, &mut cp);
            xp[j] = x[j] - step;
            eval(&xp, &mut cm);
            xp[j] = x[j];
            for i in 0..count {
                let fd = (cp[i] - cm[i]) / (2.0 * step);
                if rel(j_analytic[i * n + j], fd) > 1e-4 {
                    return Some(format!(
                        "{what} constraint {i}, variable {j}: analytic {:.6e}, finite difference {fd:.6e}",
                        j_analytic[i * n + j]
                    ));
                }
            }
        }
        None
    };

    if let Some(msg) = check_block(
        "equality",
        problem.eq_count(),
        &|x, out| problem.eq_constraints(x, out),
        &|x, out| problem.eq_jacobian(x, out),
    ) {
        return Some(msg);
    }
    check_block(
        "inequality",
        problem.ineq_count(),
        &|x, out| problem.ineq_constraints(x, out),
        &|x, out| problem.ineq_jacobian(x, out),
    )
}
