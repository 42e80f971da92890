//! Primal-dual interior-point solver for convex quadratic programs with a
//! diagonal Hessian:
//!
//! ```text
//! minimize    ½ Σ_j h_j x_j² + c·x
//! subject to  a_i·x = b_i   (Eq rows)
//!             a_i·x ≤ b_i   (Le rows)
//!             lo ≤ x ≤ up   (bounds may be infinite)
//! ```
//!
//! Fixed columns (`lo == up`) are substituted out, inequality rows get a
//! nonnegative slack, and the problem is Ruiz-equilibrated before running a
//! Mehrotra predictor-corrector iteration. Each Newton step solves the
//! quasi-definite augmented system with a sparse LU whose symbolic analysis is
//! computed once.
//!
//! Dual convention: the Lagrangian is `f(x) - Σ λ_i (a_i·x - b_i) - z_lo·(x - lo) - z_up·(up - x)`,
//! so multipliers of `Le` rows are nonpositive and bound multipliers are nonnegative.

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use faer::prelude::Solve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagQp {
    pub hess: Vec<f64>,
    pub lin: Vec<f64>,
    pub rows: Vec<QpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DiagQp {
    pub fn n_vars(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.hess)
            .zip(&self.lin)
            .map(|((&xj, &h), &c)| 0.5 * h * xj * xj + c * xj)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmSettings {
    /// Relative tolerance on primal residual, dual residual and complementarity
    /// of the scaled problem.
    pub tol: f64,
    pub max_iter: usize,
    /// Randomizes the starting point; `None` gives the deterministic default start.
    pub start_seed: Option<u64>,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            start_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmSolution {
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub iterations: usize,
}

const REG_PRIMAL: f64 = 1e-11;
const REG_DUAL: f64 = 1e-11;
const STEP_FRACTION: f64 = 0.995;

/// Problem after fixed-column substitution, slack introduction and scaling.
struct Standard {
    n: usize,
    /// Row-major sparse equality matrix.
    a_rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    hess: Vec<f64>,
    lin: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    /// Scaled variable = original / col_scale.
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
    obj_scale: f64,
}

pub fn solve(qp: &DiagQp, settings: &IpmSettings) -> Result<IpmSolution> {
    let n_orig = qp.n_vars();
    if qp.hess.len() != n_orig || qp.lower.len() != n_orig || qp.upper.len() != n_orig {
        return Err(Error::Dimension("QP vectors have inconsistent lengths".into()));
    }
    for j in 0..n_orig {
        if qp.hess[j] < 0.0 || !qp.hess[j].is_finite() {
            return Err(Error::Domain(format!("Hessian entry {j} is {} (must be finite and >= 0)", qp.hess[j])));
        }
        if qp.lower[j] > qp.upper[j] {
            return Err(Error::Domain(format!("variable {j} has empty bounds")));
        }
    }

    // Fixed columns.
    let mut reduced_of = vec![usize::MAX; n_orig];
    let mut kept = Vec::new();
    for j in 0..n_orig {
        if qp.lower[j] == qp.upper[j] {
            continue;
        }
        reduced_of[j] = kept.len();
        kept.push(j);
    }
    let fixed_val = |j: usize| qp.lower[j];

    // Rows in reduced coordinates, dropping rows left without free columns.
    let mut live_rows = Vec::new();
    let mut rows_red: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for (i, row) in qp.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            if a == 0.0 {
                continue;
            }
            if reduced_of[j] == usize::MAX {
                rhs -= a * fixed_val(j);
            } else {
                coeffs.push((reduced_of[j], a));
            }
        }
        coeffs.sort_by_key(|&(j, _)| j);
        coeffs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        if coeffs.is_empty() {
            let scale = 1e-9 * (1.0 + row.rhs.abs());
            let infeasible = match row.sense {
                Sense::Eq => rhs.abs() > scale,
                Sense::Le => rhs < -scale,
            };
            if infeasible {
                return Err(Error::Domain(format!("row {i} is infeasible after fixing variables")));
            }
            continue;
        }
        live_rows.push(i);
        rows_red.push((coeffs, row.sense, rhs));
    }

    let std = standardize(qp, &kept, &rows_red);
    let sol = mehrotra(&std, settings)?;

    // Unscale and map back.
    let mut x = vec![0.0; n_orig];
    let mut lower_duals = vec![0.0; n_orig];
    let mut upper_duals = vec![0.0; n_orig];
    for j in 0..n_orig {
        match reduced_of[j] {
            usize::MAX => x[j] = fixed_val(j),
            r => {
                let d = std.col_scale[r];
                x[j] = sol.x[r] * d;
                lower_duals[j] = sol.zl[r] / (std.obj_scale * d);
                upper_duals[j] = sol.zu[r] / (std.obj_scale * d);
            }
        }
    }
    let mut row_duals = vec![0.0; qp.rows.len()];
    for (k, &i) in live_rows.iter().enumerate() {
        row_duals[i] = sol.lambda[k] * std.row_scale[k] / std.obj_scale;
    }
    // Fixed columns carry whatever multiplier closes their stationarity row.
    let mut grad = vec![0.0; n_orig];
    for j in 0..n_orig {
        grad[j] = qp.hess[j] * x[j] + qp.lin[j];
    }
    for (i, row) in qp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            grad[j] -= a * row_duals[i];
        }
    }
    for j in 0..n_orig {
        if reduced_of[j] == usize::MAX {
            if grad[j] >= 0.0 {
                lower_duals[j] = grad[j];
            } else {
                upper_duals[j] = -grad[j];
            }
        }
    }

    Ok(IpmSolution {
        x,
        row_duals,
        lower_duals,
        upper_duals,
        iterations: sol.iterations,
    })
}

fn standardize(qp: &DiagQp, kept: &[usize], rows: &[(Vec<(usize, f64)>, Sense, f64)]) -> Standard {
    let n_red = kept.len();
    let n_slack = rows.iter().filter(|r| r.1 == Sense::Le).count();
    let n = n_red + n_slack;
    let m = rows.len();

    let mut a_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut hess = Vec::with_capacity(n);
    let mut lin = Vec::with_capacity(n);
    let mut lo = Vec::with_capacity(n);
    let mut up = Vec::with_capacity(n);
    for &j in kept {
        hess.push(qp.hess[j]);
        lin.push(qp.lin[j]);
        lo.push(qp.lower[j]);
        up.push(qp.upper[j]);
    }
    let mut next_slack = n_red;
    for (coeffs, sense, rhs) in rows {
        let mut r = coeffs.clone();
        if *sense == Sense::Le {
            r.push((next_slack, 1.0));
            next_slack += 1;
            hess.push(0.0);
            lin.push(0.0);
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
        a_rows.push(r);
        b.push(*rhs);
    }

    // Ruiz equilibration of the augmented matrix [H A'; A 0].
    let mut col_scale = vec![1.0; n];
    let mut row_scale = vec![1.0; m];
    for _ in 0..20 {
        let mut col_max: Vec<f64> = (0..n).map(|j| (hess[j] * col_scale[j] * col_scale[j]).abs()).collect();
        let mut row_max = vec![0.0f64; m];
        for (i, row) in a_rows.iter().enumerate() {
            for &(j, a) in row {
                let v = (a * row_scale[i] * col_scale[j]).abs();
                row_max[i] = row_max[i].max(v);
                col_max[j] = col_max[j].max(v);
            }
        }
        let mut converged = true;
        for j in 0..n {
            if col_max[j] > 0.0 {
                if (1.0 - col_max[j]).abs() > 1e-3 {
                    converged = false;
                }
                col_scale[j] /= col_max[j].sqrt();
            }
        }
        for i in 0..m {
            if row_max[i] > 0.0 {
                if (1.0 - row_max[i]).abs() > 1e-3 {
                    converged = false;
                }
                row_scale[i] /= row_max[i].sqrt();
            }
        }
        if converged {
            break;
        }
    }
    for (i, row) in a_rows.iter_mut().enumerate() {
        for (j, a) in row.iter_mut() {
            *a *= row_scale[i] * col_scale[*j];
        }
        b[i] *= row_scale[i];
    }
    for j in 0..n {
        let d = col_scale[j];
        hess[j] *= d * d;
        lin[j] *= d;
        lo[j] /= d;
        up[j] /= d;
    }
    let obj_max = hess
        .iter()
        .chain(lin.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let obj_scale = if obj_max > 0.0 { (1.0 / obj_max).clamp(1e-8, 1e8) } else { 1.0 };
    for j in 0..n {
        hess[j] *= obj_scale;
        lin[j] *= obj_scale;
    }

    Standard {
        n,
        a_rows,
        b,
        hess,
        lin,
        lo,
        up,
        col_scale,
        row_scale,
        obj_scale,
    }
}

struct RawSolution {
    x: Vec<f64>,
    lambda: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
    iterations: usize,
}

struct KktSystem {
    n: usize,
    m: usize,
    symbolic: SymbolicLu<usize>,
    /// Position of each H diagonal entry in the triplet list.
    triplets: Vec<Triplet<usize, usize, f64>>,
}

impl KktSystem {
    fn new(std: &Standard) -> Result<Self> {
        let n = std.n;
        let m = std.a_rows.len();
        let mut triplets = Vec::with_capacity(n + m + 2 * std.a_rows.iter().map(Vec::len).sum::<usize>());
        for j in 0..n {
            triplets.push(Triplet::new(j, j, 1.0));
        }
        for i in 0..m {
            triplets.push(Triplet::new(n + i, n + i, -REG_DUAL));
        }
        for (i, row) in std.a_rows.iter().enumerate() {
            for &(j, a) in row {
                triplets.push(Triplet::new(n + i, j, a));
                triplets.push(Triplet::new(j, n + i, a));
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n + m, n + m, &triplets)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let symbolic =
            SymbolicLu::try_new(mat.symbolic()).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Ok(Self { n, m, symbolic, triplets })
    }

    fn factor(&mut self, h: &[f64]) -> Result<Lu<usize, f64>> {
        for j in 0..self.n {
            self.triplets[j] = Triplet::new(j, j, h[j] + REG_PRIMAL);
        }
        let dim = self.n + self.m;
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &self.triplets)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Lu::try_new_with_symbolic(self.symbolic.clone(), mat.as_ref())
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
    }
}

/// Applies the unregularized augmented matrix.
fn kkt_apply(std: &Standard, h: &[f64], v: &[f64], out: &mut [f64]) {
    let n = std.n;
    for j in 0..n {
        out[j] = h[j] * v[j];
    }
    for (i, row) in std.a_rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(j, a) in row {
            acc += a * v[j];
            out[j] += a * v[n + i];
        }
        out[n + i] = acc;
    }
}

fn solve_refined(std: &Standard, lu: &Lu<usize, f64>, h: &[f64], rhs: &[f64]) -> Vec<f64> {
    let dim = rhs.len();
    let b = Mat::<f64>::from_fn(dim, 1, |i, _| rhs[i]);
    let sol = lu.solve(&b);
    let mut x: Vec<f64> = (0..dim).map(|i| sol[(i, 0)]).collect();
    let mut kx = vec![0.0; dim];
    for _ in 0..3 {
        kkt_apply(std, h, &x, &mut kx);
        let res: Vec<f64> = rhs.iter().zip(&kx).map(|(r, k)| r - k).collect();
        let rn = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if rn <= 1e-15 * (1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            break;
        }
        let rb = Mat::<f64>::from_fn(dim, 1, |i, _| res[i]);
        let corr = lu.solve(&rb);
        for i in 0..dim {
            x[i] += corr[(i, 0)];
        }
    }
    x
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn mehrotra(std: &Standard, settings: &IpmSettings) -> Result<RawSolution> {
    let n = std.n;
    let m = std.a_rows.len();
    let has_lo: Vec<bool> = std.lo.iter().map(|v| v.is_finite()).collect();
    let has_up: Vec<bool> = std.up.iter().map(|v| v.is_finite()).collect();
    let n_comp = has_lo.iter().filter(|&&b| b).count() + has_up.iter().filter(|&&b| b).count();

    let mut rng = settings.start_seed.map(ChaCha8Rng::seed_from_u64);
    let mut jitter = |base: f64| -> f64 {
        match rng.as_mut() {
            Some(r) => base * r.gen_range(0.5..2.0),
            None => base,
        }
    };

    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match (has_lo[j], has_up[j]) {
            (true, true) => {
                let width = std.up[j] - std.lo[j];
                std.lo[j] + width * jitter(0.5).min(0.9)
            }
            (true, false) => std.lo[j] + jitter(1.0),
            (false, true) => std.up[j] - jitter(1.0),
            (false, false) => 0.0,
        };
    }
    let mut zl: Vec<f64> = (0..n).map(|j| if has_lo[j] { jitter(1.0) } else { 0.0 }).collect();
    let mut zu: Vec<f64> = (0..n).map(|j| if has_up[j] { jitter(1.0) } else { 0.0 }).collect();
    let mut lambda = vec![0.0; m];

    let b_norm = inf_norm(&std.b);
    let c_norm = inf_norm(&std.lin);
    let mut kkt = KktSystem::new(std)?;

    let mut rd = vec![0.0; n];
    let mut rp = vec![0.0; m];
    let mut best = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..settings.max_iter {
        // Residuals.
        for j in 0..n {
            rd[j] = std.hess[j] * x[j] + std.lin[j] - zl[j] + zu[j];
        }
        for (i, row) in std.a_rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, a) in row {
                acc += a * x[j];
                rd[j] -= a * lambda[i];
            }
            rp[i] = acc - std.b[i];
        }
        let wl: Vec<f64> = (0..n).map(|j| if has_lo[j] { x[j] - std.lo[j] } else { 1.0 }).collect();
        let wu: Vec<f64> = (0..n).map(|j| if has_up[j] { std.up[j] - x[j] } else { 1.0 }).collect();
        let mut comp = 0.0;
        for j in 0..n {
            if has_lo[j] {
                comp += wl[j] * zl[j];
            }
            if has_up[j] {
                comp += wu[j] * zu[j];
            }
        }
        let mu = if n_comp > 0 { comp / n_comp as f64 } else { 0.0 };

        let p_res = inf_norm(&rp) / (1.0 + b_norm);
        let d_res = inf_norm(&rd) / (1.0 + c_norm);
        if p_res.max(d_res).max(mu) < best.0.max(best.1).max(best.2) {
            best = (p_res, d_res, mu);
        }
        if p_res <= settings.tol && d_res <= settings.tol && mu <= settings.tol {
            return Ok(RawSolution {
                x,
                lambda,
                zl,
                zu,
                iterations: iter,
            });
        }

        let h: Vec<f64> = (0..n)
            .map(|j| {
                let mut v = std.hess[j];
                if has_lo[j] {
                    v += zl[j] / wl[j];
                }
                if has_up[j] {
                    v += zu[j] / wu[j];
                }
                v
            })
            .collect();
        let lu = kkt.factor(&h)?;

        let direction = |rcl: &[f64], rcu: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
            let mut rhs = vec![0.0; n + m];
            for j in 0..n {
                let mut r = -rd[j];
                if has_lo[j] {
                    r += rcl[j] / wl[j];
                }
                if has_up[j] {
                    r -= rcu[j] / wu[j];
                }
                rhs[j] = r;
            }
            for i in 0..m {
                rhs[n + i] = -rp[i];
            }
            let sol = solve_refined(std, &lu, &h, &rhs);
            let dx = sol[..n].to_vec();
            let dlambda: Vec<f64> = sol[n..].iter().map(|v| -v).collect();
            let dzl: Vec<f64> = (0..n)
                .map(|j| if has_lo[j] { (rcl[j] - zl[j] * dx[j]) / wl[j] } else { 0.0 })
                .collect();
            let dzu: Vec<f64> = (0..n)
                .map(|j| if has_up[j] { (rcu[j] + zu[j] * dx[j]) / wu[j] } else { 0.0 })
                .collect();
            (dx, dlambda, dzl, dzu)
        };

        let max_step = |dx: &[f64], dzl: &[f64], dzu: &[f64]| -> f64 {
            let mut alpha = 1.0f64;
            for j in 0..n {
                if has_lo[j] {
                    if dx[j] < 0.0 {
                        alpha = alpha.min(-wl[j] / dx[j]);
                    }
                    if dzl[j] < 0.0 {
                        alpha = alpha.min(-zl[j] / dzl[j]);
                    }
                }
                if has_up[j] {
                    if dx[j] > 0.0 {
                        alpha = alpha.min(wu[j] / dx[j]);
                    }
                    if dzu[j] < 0.0 {
                        alpha = alpha.min(-zu[j] / dzu[j]);
                    }
                }
            }
            alpha
        };

        // Predictor.
        let rcl: Vec<f64> = (0..n).map(|j| if has_lo[j] { -wl[j] * zl[j] } else { 0.0 }).collect();
        let rcu: Vec<f64> = (0..n).map(|j| if has_up[j] { -wu[j] * zu[j] } else { 0.0 }).collect();
        let (dx_a, _, dzl_a, dzu_a) = direction(&rcl, &rcu);
        let alpha_a = max_step(&dx_a, &dzl_a, &dzu_a);
        let mut comp_a = 0.0;
        for j in 0..n {
            if has_lo[j] {
                comp_a += (wl[j] + alpha_a * dx_a[j]) * (zl[j] + alpha_a * dzl_a[j]);
            }
            if has_up[j] {
                comp_a += (wu[j] - alpha_a * dx_a[j]) * (zu[j] + alpha_a * dzu_a[j]);
            }
        }
        let mu_a = if n_comp > 0 { comp_a / n_comp as f64 } else { 0.0 };
        let sigma = if mu > 0.0 { (mu_a / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

        // Corrector.
        let rcl: Vec<f64> = (0..n)
            .map(|j| if has_lo[j] { sigma * mu - wl[j] * zl[j] - dx_a[j] * dzl_a[j] } else { 0.0 })
            .collect();
        let rcu: Vec<f64> = (0..n)
            .map(|j| if has_up[j] { sigma * mu - wu[j] * zu[j] + dx_a[j] * dzu_a[j] } else { 0.0 })
            .collect();
        let (dx, dlambda, dzl, dzu) = direction(&rcl, &rcu);
        let alpha = (STEP_FRACTION * max_step(&dx, &dzl, &dzu)).min(1.0);

        for j in 0..n {
            x[j] += alpha * dx[j];
            zl[j] += alpha * dzl[j];
            zu[j] += alpha * dzu[j];
        }
        for i in 0..m {
            lambda[i] += alpha * dlambda[i];
        }
        if x.iter().chain(lambda.iter()).any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iter,
        primal: best.0,
        dual: best.1,
        gap: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn box_constrained_quadratic() {
        // min ½(x-3)² = ½x² - 3x with 0 <= x <= 2 -> x = 2, upper dual 1.
        let qp = DiagQp {
            hess: vec![1.0],
            lin: vec![-3.0],
            rows: vec![],
            lower: vec![0.0],
            upper: vec![2.0],
        };
        let s = solve(&qp, &IpmSettings::default()).unwrap();
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.upper_duals[0], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn equality_and_inequality_rows() {
        // min ½x² + ½y² s.t. x + y = 2, x <= 0.5 -> x = 0.5, y = 1.5.
        let qp = DiagQp {
            hess: vec![1.0, 1.0],
            lin: vec![0.0, 0.0],
            rows: vec![
                QpRow {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    sense: Sense::Eq,
                    rhs: 2.0,
                },
                QpRow {
                    coeffs: vec![(0, 1.0)],
                    sense: Sense::Le,
                    rhs: 0.5,
                },
            ],
            lower: vec![f64::NEG_INFINITY; 2],
            upper: vec![f64::INFINITY; 2],
        };
        let s = solve(&qp, &IpmSettings::default()).unwrap();
        assert_abs_diff_eq!(s.x[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(s.x[1], 1.5, epsilon = 1e-8);
        // Stationarity: y - λ_eq = 0, x - λ_eq - λ_le = 0.
        assert_abs_diff_eq!(s.row_duals[0], 1.5, epsilon = 1e-7);
        assert_abs_diff_eq!(s.row_duals[1], -1.0, epsilon = 1e-7);
    }

    #[test]
    fn fixed_columns_are_substituted() {
        let qp = DiagQp {
            hess: vec![1.0, 0.0],
            lin: vec![0.0, 1.0],
            rows: vec![QpRow {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                sense: Sense::Eq,
                rhs: 3.0,
            }],
            lower: vec![f64::NEG_INFINITY, 1.0],
            upper: vec![f64::INFINITY, 1.0],
        };
        let s = solve(&qp, &IpmSettings::default()).unwrap();
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 0.0);
    }

    #[test]
    fn linear_program_with_seeded_start() {
        // min -x - y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2).
        let qp = DiagQp {
            hess: vec![0.0, 0.0],
            lin: vec![-1.0, -1.0],
            rows: vec![
                QpRow {
                    coeffs: vec![(0, 1.0), (1, 2.0)],
                    sense: Sense::Le,
                    rhs: 4.0,
                },
                QpRow {
                    coeffs: vec![(0, 3.0), (1, 1.0)],
                    sense: Sense::Le,
                    rhs: 6.0,
                },
            ],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY; 2],
        };
        for seed in [None, Some(1), Some(99)] {
            let s = solve(
                &qp,
                &IpmSettings {
                    start_seed: seed,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_abs_diff_eq!(s.x[0], 1.6, epsilon = 1e-7);
            assert_abs_diff_eq!(s.x[1], 1.2, epsilon = 1e-7);
        }
    }

    #[test]
    fn infeasible_fixed_row_is_rejected() {
        let qp = DiagQp {
            hess: vec![0.0],
            lin: vec![0.0],
            rows: vec![QpRow {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Eq,
                rhs: 1.0,
            }],
            lower: vec![0.0],
            upper: vec![0.0],
        };
        assert!(solve(&qp, &IpmSettings::default()).is_err());
    }
}
