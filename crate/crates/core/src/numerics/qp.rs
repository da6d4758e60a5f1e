//! Convex QP solver: primal-dual interior point with Mehrotra
//! predictor-corrector steps.
//!
//! Problems are solved in the form
//!
//! ```text
//!     minimize   ½ xᵀHx + cᵀx
//!     subject to Aeq x = beq,  Ain x ≤ bin,  lo ≤ x ≤ hi
//! ```
//!
//! Bounds and inequalities are folded into one slack block `Gx + s = h`,
//! `s ≥ 0`. Each Newton step solves one symmetric quasi-definite KKT
//! system by sparse LDLᵀ with static regularization and iterative
//! refinement.

use super::ldl::{ldl_numeric, ldl_symbolic, CscUpper};
use super::sparse::{SparseMatrix, SparseSymMatrix};
use super::{SolverResult, SolverStatus};
use thiserror::Error;

const TOL: f64 = 1e-8;
const MAX_ITERS: usize = 100;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Convex quadratic program description.
#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Hessian of the quadratic term (½ xᵀHx), positive semidefinite.
    pub hessian: SparseSymMatrix,
    pub linear: Vec<f64>,
    pub a_eq: SparseMatrix,
    pub b_eq: Vec<f64>,
    pub a_in: SparseMatrix,
    pub b_in: Vec<f64>,
    /// Per-variable bounds; use infinities for free variables. A pair
    /// with `lower == upper` pins the variable.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpProblem {
    pub fn new(n: usize) -> Self {
        Self {
            hessian: SparseSymMatrix::new(n),
            linear: vec![0.0; n],
            a_eq: SparseMatrix::new(0, n),
            b_eq: Vec::new(),
            a_in: SparseMatrix::new(0, n),
            b_in: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; x.len()];
        self.hessian.mul_vec(x, &mut hx);
        0.5 * dot(&hx, x) + dot(&self.linear, x)
    }

    fn check(&self) -> Result<(), QpError> {
        let n = self.n();
        if self.hessian.n() != n
            || self.lower.len() != n
            || self.upper.len() != n
            || self.a_eq.cols != n
            || self.a_in.cols != n
            || self.a_eq.rows != self.b_eq.len()
            || self.a_in.rows != self.b_in.len()
        {
            return Err(QpError::Dimension(format!(
                "n={n} eq={}x{} in={}x{}",
                self.a_eq.rows,
                self.b_eq.len(),
                self.a_in.rows,
                self.b_in.len()
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve a convex QP. The outcome is carried in `SolverResult::status`;
/// `Err` is returned only for inconsistent problem dimensions.
pub fn solve_qp(problem: &QpProblem) -> Result<SolverResult, QpError> {
    problem.check()?;
    let n = problem.n();

    for j in 0..n {
        if problem.lower[j] > problem.upper[j] {
            return Ok(fail(
                SolverStatus::Infeasible,
                n,
                format!("bounds cross for variable {j}"),
            ));
        }
    }

    // Equalities: given rows plus pinned variables.
    let mut eq_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.a_eq.rows];
    for &(r, c, v) in &problem.a_eq.triplets {
        eq_rows[r].push((c, v));
    }
    let mut b_eq = problem.b_eq.clone();
    for j in 0..n {
        if problem.lower[j] == problem.upper[j] {
            eq_rows.push(vec![(j, 1.0)]);
            b_eq.push(problem.lower[j]);
        }
    }

    // Inequalities Gx ≤ h: given rows plus finite, non-pinned bounds.
    let mut in_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.a_in.rows];
    for &(r, c, v) in &problem.a_in.triplets {
        in_rows[r].push((c, v));
    }
    let mut h = problem.b_in.clone();
    for j in 0..n {
        if problem.lower[j] == problem.upper[j] {
            continue;
        }
        if problem.upper[j].is_finite() {
            in_rows.push(vec![(j, 1.0)]);
            h.push(problem.upper[j]);
        }
        if problem.lower[j].is_finite() {
            in_rows.push(vec![(j, -1.0)]);
            h.push(-problem.lower[j]);
        }
    }

    let m1 = eq_rows.len();
    let m2 = in_rows.len();
    let ipm = Ipm {
        problem,
        eq_rows: &eq_rows,
        b_eq: &b_eq,
        in_rows: &in_rows,
        h: &h,
        n,
        m1,
        m2,
    };
    Ok(ipm.run())
}

fn fail(status: SolverStatus, n: usize, message: String) -> SolverResult {
    SolverResult {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        kkt_residual: f64::INFINITY,
        iterations: 0,
        message: Some(message),
    }
}

struct Ipm<'a> {
    problem: &'a QpProblem,
    eq_rows: &'a [Vec<(usize, f64)>],
    b_eq: &'a [f64],
    in_rows: &'a [Vec<(usize, f64)>],
    h: &'a [f64],
    n: usize,
    m1: usize,
    m2: usize,
}

impl Ipm<'_> {
    fn run(&self) -> SolverResult {
        let (n, m1, m2) = (self.n, self.m1, self.m2);
        let dim = n + m1 + m2;

        // KKT pattern; the inequality diagonal slots change value each
        // iteration, everything else is constant.
        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        for &(r, c, v) in self.problem.hessian.entries() {
            trips.push((r.min(c), r.max(c), v));
        }
        let scale = self
            .problem
            .hessian
            .entries()
            .iter()
            .fold(1.0f64, |m, &(_, _, v)| m.max(v.abs()));
        let delta = 1e-9 * scale.max(1.0);
        for j in 0..n {
            trips.push((j, j, delta));
        }
        for (r, row) in self.eq_rows.iter().enumerate() {
            for &(c, v) in row {
                trips.push((c, n + r, v));
            }
            trips.push((n + r, n + r, -delta));
        }
        let ineq_diag_start = trips.len();
        for (r, row) in self.in_rows.iter().enumerate() {
            trips.push((n + m1 + r, n + m1 + r, -1.0));
            for &(c, v) in row {
                trips.push((c, n + m1 + r, v));
            }
        }
        let mut trip_vals: Vec<f64> = trips.iter().map(|t| t.2).collect();
        let (mut kkt, slots) = CscUpper::from_triplets(dim, &trips);
        let symbolic = ldl_symbolic(&kkt);

        // Starting point.
        let mut x = vec![0.0; n];
        for j in 0..n {
            let (lo, hi) = (self.problem.lower[j], self.problem.upper[j]);
            x[j] = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            };
        }
        let mut y = vec![0.0; m1];
        let gx0 = self.apply_in(&x);
        let mut s: Vec<f64> = (0..m2)
            .map(|i| (self.h[i] - gx0[i]).max(1.0))
            .collect();
        let mut z = vec![1.0; m2];

        if m2 == 0 {
            return self.equality_only(&mut kkt, &symbolic, &slots, &mut trip_vals, ineq_diag_start);
        }

        let norm_b = inf_norm(self.b_eq).max(inf_norm(self.h));
        let norm_c = inf_norm(&self.problem.linear);

        let mut iterations = 0;
        for iter in 0..MAX_ITERS {
            iterations = iter + 1;
            // Residuals.
            let rd = self.dual_residual(&x, &y, &z);
            let rp = self.eq_residual(&x);
            let gx = self.apply_in(&x);
            let rg: Vec<f64> = (0..m2).map(|i| gx[i] + s[i] - self.h[i]).collect();
            let mu = dot(&s, &z) / m2 as f64;

            let pinf = inf_norm(&rp).max(inf_norm(&rg));
            let dinf = inf_norm(&rd);
            if pinf <= TOL * (1.0 + norm_b) && dinf <= TOL * (1.0 + norm_c) && mu <= TOL {
                let kkt_residual = pinf.max(dinf).max(mu);
                return SolverResult {
                    status: SolverStatus::Optimal,
                    objective: self.problem.objective(&x),
                    x,
                    kkt_residual,
                    iterations,
                    message: None,
                };
            }

            if let Some(msg) = self.farkas_certificate(&y, &z) {
                return fail(SolverStatus::Infeasible, n, msg);
            }

            // Refresh the inequality diagonal −(s/z + δ) and factor.
            let mut pos = ineq_diag_start;
            for i in 0..m2 {
                trip_vals[pos] = -(s[i] / z[i] + delta);
                pos += 1 + self.in_rows[i].len();
            }
            kkt.refresh(&trip_vals, &slots);
            let factor = match ldl_numeric(&kkt, &symbolic) {
                Ok(f) => f,
                Err(k) => {
                    return fail(
                        SolverStatus::NumericalFailure,
                        n,
                        format!("singular KKT pivot at index {k}"),
                    )
                }
            };

            // Predictor (affine scaling) step.
            let rc_aff: Vec<f64> = (0..m2).map(|i| s[i] * z[i]).collect();
            let (_dx_a, _dy_a, dz_a) =
                self.solve_kkt(&factor, &rd, &rp, &rg, &rc_aff, &s, &z);
            let ds_a: Vec<f64> = (0..m2)
                .map(|i| -(rc_aff[i] + s[i] * dz_a[i]) / z[i])
                .collect();
            let alpha_p_aff = max_step(&s, &ds_a);
            let alpha_d_aff = max_step(&z, &dz_a);
            let mu_aff = (0..m2)
                .map(|i| (s[i] + alpha_p_aff * ds_a[i]) * (z[i] + alpha_d_aff * dz_a[i]))
                .sum::<f64>()
                / m2 as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

            // Corrector step.
            let rc: Vec<f64> = (0..m2)
                .map(|i| s[i] * z[i] - sigma * mu + ds_a[i] * dz_a[i])
                .collect();
            let (dx, dy, dz) = self.solve_kkt(&factor, &rd, &rp, &rg, &rc, &s, &z);
            let ds: Vec<f64> = (0..m2)
                .map(|i| -(rc[i] + s[i] * dz[i]) / z[i])
                .collect();

            let tau = 0.995f64.max(1.0 - 10.0 * mu);
            let alpha_p = (tau * max_step(&s, &ds)).min(1.0);
            let alpha_d = (tau * max_step(&z, &dz)).min(1.0);
            for j in 0..n {
                x[j] += alpha_p * dx[j];
            }
            for i in 0..m2 {
                s[i] += alpha_p * ds[i];
                z[i] += alpha_d * dz[i];
            }
            for r in 0..m1 {
                y[r] += alpha_d * dy[r];
            }
            if alpha_p < 1e-10 && alpha_d < 1e-10 {
                break;
            }
        }

        // Ran out of iterations: classify.
        let rp = self.eq_residual(&x);
        let gx = self.apply_in(&x);
        let viol = (0..m2).fold(inf_norm(&rp), |m, i| m.max((gx[i] - self.h[i]).max(0.0)));
        let status = if viol > 1e-6 && inf_norm(&z).max(inf_norm(&y)) > 1e7 {
            SolverStatus::Infeasible
        } else {
            SolverStatus::MaxIterations
        };
        SolverResult {
            status,
            objective: self.problem.objective(&x),
            x,
            kkt_residual: viol,
            iterations,
            message: Some("iteration limit reached".into()),
        }
    }

    /// Pure equality-constrained problem: one KKT solve.
    fn equality_only(
        &self,
        kkt: &mut CscUpper,
        symbolic: &super::ldl::LdlSymbolic,
        slots: &[usize],
        trip_vals: &mut [f64],
        _ineq_start: usize,
    ) -> SolverResult {
        let (n, m1) = (self.n, self.m1);
        kkt.refresh(trip_vals, slots);
        let factor = match ldl_numeric(kkt, symbolic) {
            Ok(f) => f,
            Err(k) => {
                return fail(
                    SolverStatus::NumericalFailure,
                    n,
                    format!("singular KKT pivot at index {k}"),
                )
            }
        };
        let mut rhs = vec![0.0; n + m1];
        for j in 0..n {
            rhs[j] = -self.problem.linear[j];
        }
        for r in 0..m1 {
            rhs[n + r] = self.b_eq[r];
        }
        let mut sol = rhs.clone();
        factor.solve(&mut sol);
        // One refinement pass against the unregularized system.
        for _ in 0..2 {
            let mut resid = rhs.clone();
            let mut hx = vec![0.0; n];
            self.problem.hessian.mul_vec(&sol[..n], &mut hx);
            for j in 0..n {
                resid[j] -= hx[j];
            }
            for (r, row) in self.eq_rows.iter().enumerate() {
                let mut ax = 0.0;
                for &(c, v) in row {
                    ax += v * sol[c];
                    resid[c] -= v * sol[n + r];
                }
                resid[n + r] -= ax;
            }
            let mut corr = resid.clone();
            factor.solve(&mut corr);
            for i in 0..n + m1 {
                sol[i] += corr[i];
            }
        }
        let x: Vec<f64> = sol[..n].to_vec();
        let rp = self.eq_residual(&x);
        let y: Vec<f64> = sol[n..].to_vec();
        let rd = self.dual_residual(&x, &y, &[]);
        let pinf = inf_norm(&rp);
        let dinf = inf_norm(&rd);
        if pinf > 1e-6 {
            return fail(
                SolverStatus::Infeasible,
                n,
                format!("inconsistent equality constraints (residual {pinf:.2e})"),
            );
        }
        SolverResult {
            status: SolverStatus::Optimal,
            objective: self.problem.objective(&x),
            x,
            kkt_residual: pinf.max(dinf),
            iterations: 1,
            message: None,
        }
    }

    /// Solve the reduced KKT system for (Δx, Δy, Δz) given residuals and
    /// the complementarity target, with two refinement passes.
    #[allow(clippy::too_many_arguments)]
    fn solve_kkt(
        &self,
        factor: &super::ldl::LdlFactor,
        rd: &[f64],
        rp: &[f64],
        rg: &[f64],
        rc: &[f64],
        s: &[f64],
        z: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (n, m1, m2) = (self.n, self.m1, self.m2);
        let dim = n + m1 + m2;
        let mut rhs = vec![0.0; dim];
        for j in 0..n {
            rhs[j] = -rd[j];
        }
        for r in 0..m1 {
            rhs[n + r] = -rp[r];
        }
        for i in 0..m2 {
            rhs[n + m1 + i] = -rg[i] + rc[i] / z[i];
        }
        let mut sol = rhs.clone();
        factor.solve(&mut sol);
        for _ in 0..2 {
            let resid = self.kkt_residual_vec(&rhs, &sol, s, z);
            let mut corr = resid.clone();
            factor.solve(&mut corr);
            for i in 0..dim {
                sol[i] += corr[i];
            }
        }
        (
            sol[..n].to_vec(),
            sol[n..n + m1].to_vec(),
            sol[n + m1..].to_vec(),
        )
    }

    /// rhs − K_true · sol for iterative refinement (no regularization).
    fn kkt_residual_vec(&self, rhs: &[f64], sol: &[f64], s: &[f64], z: &[f64]) -> Vec<f64> {
        let (n, m1) = (self.n, self.m1);
        let mut out = rhs.to_vec();
        let mut hx = vec![0.0; n];
        self.problem.hessian.mul_vec(&sol[..n], &mut hx);
        for j in 0..n {
            out[j] -= hx[j];
        }
        for (r, row) in self.eq_rows.iter().enumerate() {
            let mut ax = 0.0;
            for &(c, v) in row {
                ax += v * sol[c];
                out[c] -= v * sol[n + r];
            }
            out[n + r] -= ax;
        }
        for (i, row) in self.in_rows.iter().enumerate() {
            let mut gx = 0.0;
            for &(c, v) in row {
                gx += v * sol[c];
                out[c] -= v * sol[n + m1 + i];
            }
            out[n + m1 + i] -= gx - (s[i] / z[i]) * sol[n + m1 + i];
        }
        out
    }

    fn dual_residual(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut rd = vec![0.0; n];
        self.problem.hessian.mul_vec(x, &mut rd);
        for j in 0..n {
            rd[j] += self.problem.linear[j];
        }
        for (r, row) in self.eq_rows.iter().enumerate() {
            for &(c, v) in row {
                rd[c] += v * y[r];
            }
        }
        for (i, row) in self.in_rows.iter().enumerate() {
            if let Some(&zi) = z.get(i) {
                for &(c, v) in row {
                    rd[c] += v * zi;
                }
            }
        }
        rd
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        self.eq_rows
            .iter()
            .zip(self.b_eq)
            .map(|(row, &b)| row.iter().map(|&(c, v)| v * x[c]).sum::<f64>() - b)
            .collect()
    }

    fn apply_in(&self, x: &[f64]) -> Vec<f64> {
        self.in_rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum::<f64>())
            .collect()
    }

    /// Farkas-style certificate of primal infeasibility from diverging
    /// duals: Aᵀy + Gᵀz ≈ 0, z ≥ 0, bᵀy + hᵀz < 0.
    fn farkas_certificate(&self, y: &[f64], z: &[f64]) -> Option<String> {
        let scale = inf_norm(y).max(inf_norm(z));
        if scale < 1e5 {
            return None;
        }
        let mut ray = vec![0.0; self.n];
        for (r, row) in self.eq_rows.iter().enumerate() {
            for &(c, v) in row {
                ray[c] += v * y[r] / scale;
            }
        }
        for (i, row) in self.in_rows.iter().enumerate() {
            for &(c, v) in row {
                ray[c] += v * z[i] / scale;
            }
        }
        let val = (dot(self.b_eq, y) + dot(self.h, z)) / scale;
        if inf_norm(&ray) <= 1e-8 && val < -1e-8 {
            Some(format!(
                "primal infeasibility certificate (objective ray {val:.3e})"
            ))
        } else {
            None
        }
    }
}

/// Largest α ∈ (0, 1] with v + α dv ≥ 0.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut alpha = 1.0f64;
    for (vi, di) in v.iter().zip(dv) {
        if *di < 0.0 {
            alpha = alpha.min(-vi / di);
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn active_bound_quadratic() {
        // min x² s.t. x ≥ 1 → x = 1, objective 1.
        let mut p = QpProblem::new(1);
        p.hessian.push(0, 0, 2.0);
        p.lower[0] = 1.0;
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.objective, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn equality_constrained_by_hand() {
        // min (x−3)² + (y−1)² s.t. x + y = 2. Lagrange stationarity:
        // 2(x−3) = 2(y−1) = −ν with x+y=2 gives (x,y) = (2,0).
        let mut p = QpProblem::new(2);
        p.hessian.push(0, 0, 2.0);
        p.hessian.push(1, 1, 2.0);
        p.linear = vec![-6.0, -2.0];
        p.a_eq = SparseMatrix::new(1, 2);
        p.a_eq.push(0, 0, 1.0);
        p.a_eq.push(0, 1, 1.0);
        p.b_eq = vec![2.0];
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.x[1], 0.0, epsilon = 1e-7);
        let original = (r.x[0] - 3.0).powi(2) + (r.x[1] - 1.0).powi(2);
        assert_abs_diff_eq!(original, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn crossing_inequalities_infeasible() {
        // min 0 s.t. x ≤ 0, x ≥ 1.
        let mut p = QpProblem::new(1);
        p.hessian.push(0, 0, 1e-6);
        p.a_in = SparseMatrix::new(2, 1);
        p.a_in.push(0, 0, 1.0);
        p.a_in.push(1, 0, -1.0);
        p.b_in = vec![0.0, -1.0];
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Infeasible);
    }

    #[test]
    fn crossing_bounds_infeasible() {
        let mut p = QpProblem::new(1);
        p.lower[0] = 1.0;
        p.upper[0] = 0.0;
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Infeasible);
    }

    #[test]
    fn pinned_variable_becomes_equality() {
        // min (x−1)² + y² with x pinned to 3 → x=3, y=0.
        let mut p = QpProblem::new(2);
        p.hessian.push(0, 0, 2.0);
        p.hessian.push(1, 1, 2.0);
        p.linear = vec![-2.0, 0.0];
        p.lower[0] = 3.0;
        p.upper[0] = 3.0;
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.x[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn inequality_mix() {
        // min ½‖x‖² − x₁ s.t. x₁ + x₂ ≤ 1, x ≥ 0 → (1, 0).
        let mut p = QpProblem::new(2);
        p.hessian.push(0, 0, 1.0);
        p.hessian.push(1, 1, 1.0);
        p.linear = vec![-1.0, 0.0];
        p.a_in = SparseMatrix::new(1, 2);
        p.a_in.push(0, 0, 1.0);
        p.a_in.push(0, 1, 1.0);
        p.b_in = vec![1.0];
        p.lower = vec![0.0, 0.0];
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], 0.0, epsilon = 1e-6);
    }
}
