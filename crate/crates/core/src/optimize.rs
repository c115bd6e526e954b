//! Distance minimization over the incoherent states, parameterized by the
//! probability simplex.
//!
//! Both distances are convex in the diagonal weights `delta` and both are
//! spectral functions `sum_k h(lambda_k(L(delta)))` of a Hermitian matrix
//! affine in `delta`. The solver follows the log-barrier path
//! `f(delta) - t sum_i ln delta_i` with damped Newton steps on the exact
//! Hessian. The trace norm is not smooth, so `|x|` is replaced by
//! `sqrt(x^2 + t^2)` along the same path.
//!
//! Every accepted iterate is also evaluated exactly together with a lower
//! bound on the optimum (a dual point for the trace norm, the Frank-Wolfe
//! bound for the fidelity), so the reported residual is a certified gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, eig_hermitian_part, ComplexMatrix, C64, ONE, PSD_TOL, ZERO};
use crate::state::{DensityMatrix, IncoherentState};

/// Certified gap above which the optimizer reports failure.
pub const OPT_TOL: f64 = 1e-6;
/// Gap at which the optimizer stops early.
pub const GAP_TARGET: f64 = 1e-12;
/// Objective evaluations allowed per minimization.
pub const MAX_ITERATIONS: usize = 10_000;

/// Barrier weights, largest first.
const PATH: [f64; 14] = [
    1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14,
];
/// Below this the smoothed trace norm resolves eigenvalues at the rounding
/// level and Newton steps stop being informative.
const TRACE_PATH_END: f64 = 1e-10;
const NEWTON_STEPS: usize = 50;
const ARMIJO: f64 = 0.25;
const TO_BOUNDARY: f64 = 0.99;
/// Eigenvalues of `rho` at or below this are dropped from the fidelity model.
const RANGE_TOL: f64 = 1e-14;
/// Relative level below which eigenvalues of `sqrt(rho) delta sqrt(rho)`
/// count as zero.
const KERNEL_TOL: f64 = 1e-13;
/// Bound on the off-diagonal magnitude under which a state is treated as
/// already diagonal.
const DIAGONAL_SHORTCUT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceObjective {
    /// `1 - sqrt(F(rho, delta))`
    #[serde(rename = "FIDELITY_DIST")]
    FidelityDist,
    /// `||rho - delta||_tr`
    #[serde(rename = "TRACE_DIST")]
    TraceDist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub minimizer: IncoherentState,
    pub value: f64,
    /// Certified upper bound on `value - optimum`.
    pub residual: f64,
    pub iterations: usize,
    /// Objective at the dephased state.
    pub dephased_value: f64,
}

/// Euclidean projection onto `{x >= 0, sum x = 1}`.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

const SQRT_FLOOR: f64 = 1e-200;

/// Scalar function applied to the spectrum.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// `sqrt(x^2 + mu^2)`
    SmoothAbs(f64),
    /// `-sqrt(x)`
    NegSqrt,
}

impl Kernel {
    fn h(self, x: f64) -> f64 {
        match self {
            Kernel::SmoothAbs(mu) => x.hypot(mu),
            Kernel::NegSqrt => -x.max(0.0).sqrt(),
        }
    }

    fn d1(self, x: f64) -> f64 {
        match self {
            Kernel::SmoothAbs(mu) => x / x.hypot(mu),
            Kernel::NegSqrt => -0.5 / x.max(SQRT_FLOOR).sqrt(),
        }
    }

    /// Divided difference `(h'(a) - h'(b)) / (a - b)`, arranged to avoid
    /// cancellation.
    fn dd(self, a: f64, b: f64) -> f64 {
        match self {
            Kernel::SmoothAbs(mu) => {
                let (sa, sb) = (a.hypot(mu), b.hypot(mu));
                if a == b {
                    mu * mu / (sa * sa * sa)
                } else if a * b <= 0.0 {
                    (a / sa - b / sb) / (a - b)
                } else {
                    mu * mu * (a + b) / (sa * sb * (a * sb + b * sa))
                }
            }
            Kernel::NegSqrt => {
                let (ra, rb) = (a.max(SQRT_FLOOR).sqrt(), b.max(SQRT_FLOOR).sqrt());
                0.5 / (ra * rb * (ra + rb))
            }
        }
    }
}

/// `f(delta) = offset + sum_k h(lambda_k(base + sign sum_i delta_i w_i w_i^dagger))`
struct SpectralModel {
    base: ComplexMatrix,
    vecs: Vec<Vec<C64>>,
    sign: f64,
    offset: f64,
}

struct Derivatives {
    value: f64,
    gradient: Vec<f64>,
    /// Row-major `d x d`.
    hessian: Vec<f64>,
}

impl SpectralModel {
    fn matrix(&self, delta: &[f64]) -> ComplexMatrix {
        let mut l = self.base.clone();
        let n = l.rows();
        for (w, &x) in self.vecs.iter().zip(delta) {
            let c = self.sign * x;
            for a in 0..n {
                for b in 0..n {
                    l[(a, b)] += w[a] * w[b].conj() * c;
                }
            }
        }
        l
    }

    fn value(&self, delta: &[f64], k: Kernel) -> Result<f64> {
        let spec = eig_hermitian_part(&self.matrix(delta))?;
        Ok(self.offset + spec.eigenvalues.iter().map(|&l| k.h(l)).sum::<f64>())
    }

    fn derivatives(&self, delta: &[f64], k: Kernel) -> Result<Derivatives> {
        let spec = eig_hermitian_part(&self.matrix(delta))?;
        let lambda = &spec.eigenvalues;
        let v = &spec.eigenvectors;
        let n = lambda.len();
        let d = delta.len();
        // u[i][k] = <v_k|w_i>
        let u: Vec<Vec<C64>> = self
            .vecs
            .iter()
            .map(|w| {
                (0..n)
                    .map(|kk| (0..n).map(|a| v[(a, kk)].conj() * w[a]).sum())
                    .collect()
            })
            .collect();
        let value = self.offset + lambda.iter().map(|&l| k.h(l)).sum::<f64>();
        let d1: Vec<f64> = lambda.iter().map(|&l| k.d1(l)).collect();
        let gradient: Vec<f64> = u
            .iter()
            .map(|ui| self.sign * (0..n).map(|kk| d1[kk] * ui[kk].norm_sqr()).sum::<f64>())
            .collect();
        let mut dd = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                dd[a * n + b] = k.dd(lambda[a], lambda[b]);
            }
        }
        // sign^2 = 1 drops out of the second derivative.
        let mut hessian = vec![0.0; d * d];
        let mut q = vec![ZERO; n];
        for i in 0..d {
            for j in i..d {
                for kk in 0..n {
                    q[kk] = u[i][kk] * u[j][kk].conj();
                }
                let mut s = 0.0;
                for a in 0..n {
                    let mut row = ZERO;
                    for b in 0..n {
                        row += q[b].conj() * dd[a * n + b];
                    }
                    s += (q[a] * row).re;
                }
                hessian[i * d + j] = s;
                hessian[j * d + i] = s;
            }
        }
        Ok(Derivatives {
            value,
            gradient,
            hessian,
        })
    }
}

fn cholesky(h: &[f64], n: usize, ridge: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            if i == j {
                s += ridge;
            }
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s.is_nan() || s <= 0.0 || s.is_infinite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Solves `h x = b` for each right-hand side, adding a growing ridge when
/// the factorization breaks down.
fn solve_spd(h: &[f64], rhs: &[&[f64]], n: usize) -> Option<Vec<Vec<f64>>> {
    let scale = (0..n)
        .map(|i| h[i * n + i].abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut ridge = 0.0;
    for _ in 0..8 {
        if let Some(l) = cholesky(h, n, ridge) {
            return Some(rhs.iter().map(|b| cholesky_solve(&l, b, n)).collect());
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
    }
    None
}

/// Exact objective value plus a lower bound on the global minimum.
struct Certificate {
    value: f64,
    lower_bound: f64,
}

trait Certifier {
    /// `mu` is the current smoothing level, used for dual candidates.
    fn certify(&self, delta: &[f64], mu: f64) -> Result<Certificate>;
}

struct TraceCertifier<'a> {
    rho: &'a ComplexMatrix,
}

impl Certifier for TraceCertifier<'_> {
    fn certify(&self, delta: &[f64], mu: f64) -> Result<Certificate> {
        let d = delta.len();
        let mut a = self.rho.clone();
        for (i, &x) in delta.iter().enumerate() {
            a[(i, i)] -= C64::new(x, 0.0);
        }
        let spec = eig_hermitian_part(&a)?;
        let lambda = &spec.eigenvalues;
        let v = &spec.eigenvectors;
        // w[i][k] = |<i|v_k>|^2
        let w: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|k| v[(i, k)].norm_sqr()).collect())
            .collect();
        let value: f64 = lambda.iter().map(|l| l.abs()).sum();

        // Any Hermitian S with ||S||_op <= 1 certifies
        // min_delta ||rho - delta||_tr >= tr(S rho) - max_i S_ii.
        // <v_k| rho |v_k> = lambda_k + sum_i w_ik delta_i.
        let rho_kk: Vec<f64> = (0..d)
            .map(|k| lambda[k] + (0..d).map(|i| w[i][k] * delta[i]).sum::<f64>())
            .collect();
        let dual = |s: &[f64]| -> f64 {
            let tr: f64 = (0..d).map(|k| s[k] * rho_kk[k]).sum();
            let max_diag = (0..d)
                .map(|i| (0..d).map(|k| w[i][k] * s[k]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            tr - max_diag
        };
        let smooth: Vec<f64> = lambda.iter().map(|&l| Kernel::SmoothAbs(mu).d1(l)).collect();
        let exact: Vec<f64> = lambda.iter().map(|&l| sign(l)).collect();
        let mut lower_bound = dual(&smooth).max(dual(&exact));
        if let Some(best) = best_diagonal_dual(&rho_kk, &w) {
            lower_bound = lower_bound.max(dual(&best));
        }
        Ok(Certificate { value, lower_bound })
    }
}

/// The best dual point diagonal in the current eigenbasis:
/// `max sum_k s_k rho_kk - tau` over `|s_k| <= 1` with
/// `sum_k w_ik s_k <= tau`. Near a minimizer the optimal dual is close to
/// diagonal there, and this recovers the free signs on the near-kernel of
/// `rho - delta` that the smoothed sign only approximates.
fn best_diagonal_dual(rho_kk: &[f64], w: &[Vec<f64>]) -> Option<Vec<f64>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let s: Vec<_> = rho_kk.iter().map(|&c| lp.add_var(c, (-1.0, 1.0))).collect();
    let tau = lp.add_var(-1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for row in w {
        let mut expr: Vec<_> = s.iter().zip(row).map(|(&v, &c)| (v, c)).collect();
        expr.push((tau, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
    }
    let SolveOutcome::Solution(solution) = lp.solve().ok()? else {
        return None;
    };
    // The bound is evaluated exactly by the caller, so only feasibility of
    // the clamp matters here.
    Some(s.iter().map(|&v| solution[v].clamp(-1.0, 1.0)).collect())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

struct FidelityCertifier {
    sqrt_rho: ComplexMatrix,
}

impl Certifier for FidelityCertifier {
    fn certify(&self, delta: &[f64], _mu: f64) -> Result<Certificate> {
        let d = delta.len();
        let r = &self.sqrt_rho;
        // X = sqrt(rho) delta sqrt(rho)
        let x = ComplexMatrix::from_fn(d, d, |a, b| {
            (0..d)
                .map(|i| r[(a, i)] * r[(b, i)].conj() * delta[i])
                .sum()
        });
        let spec = eig_hermitian_part(&x)?;
        let lambda: Vec<f64> = spec.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let v = &spec.eigenvectors;
        let value = 1.0 - sqrt_trace(&lambda);

        // Frank-Wolfe bound from the gradient
        // -1/2 sum_k |<x_k|r_i>|^2 / sqrt(lambda_k). Weight on the kernel of
        // X means unbounded slope, which voids the bound.
        let kernel = kernel_level(&lambda);
        let mut grad = vec![0.0; d];
        for (i, g) in grad.iter_mut().enumerate() {
            for k in 0..d {
                let c = (0..d)
                    .map(|a| v[(a, k)].conj() * r[(a, i)])
                    .sum::<C64>()
                    .norm_sqr();
                if lambda[k] <= kernel {
                    if c > 1e-12 {
                        return Ok(Certificate {
                            value,
                            lower_bound: f64::NEG_INFINITY,
                        });
                    }
                } else {
                    *g -= 0.5 * c / lambda[k].sqrt();
                }
            }
        }
        let along = dot(&grad, delta);
        let min_g = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Certificate {
            value,
            lower_bound: value - (along - min_g).max(0.0),
        })
    }
}

struct Tracker {
    best: Vec<f64>,
    best_value: f64,
    lower_bound: f64,
    evaluations: usize,
}

impl Tracker {
    fn offer(&mut self, x: &[f64], c: &Certificate) {
        self.evaluations += 1;
        if c.value < self.best_value {
            self.best_value = c.value;
            self.best.clear();
            self.best.extend_from_slice(x);
        }
        if c.lower_bound > self.lower_bound {
            self.lower_bound = c.lower_bound;
        }
    }

    fn gap(&self) -> f64 {
        (self.best_value - self.lower_bound).max(0.0)
    }

    fn done(&self) -> bool {
        self.gap() <= GAP_TARGET || self.evaluations >= MAX_ITERATIONS
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sum(x: &[f64]) -> f64 {
    x.iter().map(|v| v.ln()).sum()
}

/// Newton direction of the barrier problem on `sum dx = 0`, with the
/// squared Newton decrement.
fn newton_direction(der: &Derivatives, x: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let d = x.len();
    let g: Vec<f64> = (0..d).map(|i| der.gradient[i] - t / x[i]).collect();
    let mut h = der.hessian.clone();
    for i in 0..d {
        h[i * d + i] += t / (x[i] * x[i]);
    }
    let ones = vec![1.0; d];
    let sol = solve_spd(&h, &[&g, &ones], d)?;
    let (hg, h1) = (&sol[0], &sol[1]);
    // dx = -H^{-1}(g + nu 1) with 1^T dx = 0
    let nu = -hg.iter().sum::<f64>() / h1.iter().sum::<f64>();
    let dx: Vec<f64> = (0..d).map(|i| -(hg[i] + nu * h1[i])).collect();
    // -g.dx, with the constant part of g removed first to avoid cancellation
    let projected: Vec<f64> = g.iter().map(|gi| gi + nu).collect();
    let decrement = -dot(&projected, &dx);
    decrement.is_finite().then_some((dx, decrement))
}

fn barrier_path(
    model: &SpectralModel,
    kernel: impl Fn(f64) -> Kernel,
    certifier: &dyn Certifier,
    path: &[f64],
    mut x: Vec<f64>,
    tracker: &mut Tracker,
) -> Result<()> {
    for (level, &t) in path.iter().enumerate() {
        let last = level + 1 == path.len();
        let k = kernel(t);
        for _ in 0..NEWTON_STEPS {
            if tracker.done() {
                return Ok(());
            }
            let der = model.derivatives(&x, k)?;
            let Some((dx, decrement)) = newton_direction(&der, &x, t) else {
                break;
            };
            if decrement <= 0.0 {
                break;
            }
            let mut step = 1.0f64;
            for (xi, di) in x.iter().zip(&dx) {
                if *di < 0.0 {
                    step = step.min(-TO_BOUNDARY * xi / di);
                }
            }
            let phi = der.value - t * log_sum(&x);
            // Decreases below this are lost to rounding in phi itself.
            let noise = 64.0 * f64::EPSILON * (der.value.abs() + 1.0 + t * log_sum(&x).abs());
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + step * b).collect();
                tracker.evaluations += 1;
                let target = phi - ARMIJO * step * decrement;
                let next_phi = model.value(&trial, k)? - t * log_sum(&trial);
                if next_phi <= target || (step * decrement <= noise && next_phi <= phi + noise) {
                    accepted = Some(trial);
                    break;
                }
                step *= 0.5;
            }
            let Some(mut next) = accepted else {
                break;
            };
            let total: f64 = next.iter().sum();
            for v in &mut next {
                *v /= total;
            }
            tracker.offer(&next, &certifier.certify(&next, t)?);
            x = next;
            if !last && decrement <= 0.1 * t {
                break;
            }
        }
    }
    Ok(())
}

fn finish(tracker: Tracker, dephased_value: f64) -> Result<SimplexSolution> {
    let residual = tracker.gap();
    let value = tracker.best_value.max(0.0);
    let minimizer = IncoherentState::from_simplex_point(tracker.best);
    if residual > OPT_TOL {
        return Err(Error::OptimizerDidNotConverge {
            best: minimizer,
            value,
            residual,
            iterations: tracker.evaluations,
        });
    }
    Ok(SimplexSolution {
        minimizer,
        value,
        residual,
        iterations: tracker.evaluations,
        dephased_value: dephased_value.max(0.0),
    })
}

fn solve(
    model: &SpectralModel,
    kernel: impl Fn(f64) -> Kernel,
    certifier: &dyn Certifier,
    path: &[f64],
    pops: Vec<f64>,
) -> Result<SimplexSolution> {
    let d = pops.len() as f64;
    let dephased = certifier.certify(&pops, path[0])?;
    let mut tracker = Tracker {
        best: pops.clone(),
        best_value: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        evaluations: 0,
    };
    tracker.offer(&pops, &dephased);
    let start: Vec<f64> = pops.iter().map(|p| 0.5 * p + 0.5 / d).collect();
    barrier_path(model, kernel, certifier, path, start, &mut tracker)?;
    finish(tracker, dephased.value)
}

/// `min_{delta incoherent} D(rho, delta)` for the chosen distance.
pub fn minimize_over_incoherent(
    rho: &DensityMatrix,
    objective: DistanceObjective,
) -> Result<SimplexSolution> {
    let pops = project_onto_simplex(&rho.populations());
    if rho.dim() == 1 || rho.max_off_diagonal() <= DIAGONAL_SHORTCUT_TOL {
        let value = distance(rho, &pops, objective)?;
        return Ok(SimplexSolution {
            minimizer: IncoherentState::from_simplex_point(pops),
            value,
            residual: value,
            iterations: 0,
            dephased_value: value,
        });
    }
    let d = rho.dim();
    match objective {
        DistanceObjective::TraceDist => {
            let model = SpectralModel {
                base: rho.matrix().clone(),
                vecs: (0..d)
                    .map(|i| (0..d).map(|a| if a == i { ONE } else { ZERO }).collect())
                    .collect(),
                sign: -1.0,
                offset: 0.0,
            };
            let cert = TraceCertifier { rho: rho.matrix() };
            let end = PATH.iter().position(|&t| t <= TRACE_PATH_END).map_or(PATH.len(), |i| i + 1);
            solve(&model, Kernel::SmoothAbs, &cert, &PATH[..end], pops)
        }
        DistanceObjective::FidelityDist => {
            if let Some(solution) = pure_fidelity(rho)? {
                return Ok(solution);
            }
            // The nonzero spectrum of sqrt(rho) delta sqrt(rho) is that of
            // sum_i delta_i y_i y_i^dagger on the range of rho, with
            // y_i[k] = sqrt(sigma_k) conj(U_ik).
            let spec = rho.spectrum()?;
            let range: Vec<usize> = (0..d).filter(|&k| spec.eigenvalues[k] > RANGE_TOL).collect();
            let vecs = (0..d)
                .map(|i| {
                    range
                        .iter()
                        .map(|&k| spec.eigenvectors[(i, k)].conj() * spec.eigenvalues[k].sqrt())
                        .collect()
                })
                .collect();
            let model = SpectralModel {
                base: ComplexMatrix::zeros(range.len(), range.len()),
                vecs,
                sign: 1.0,
                offset: 1.0,
            };
            let cert = FidelityCertifier {
                sqrt_rho: spec.map(range_sqrt),
            };
            solve(&model, |_| Kernel::NegSqrt, &cert, &PATH, pops)
        }
    }
}

/// For pure `rho`, `F(rho, delta) = sum_i delta_i rho_ii` is linear and the
/// minimum of `1 - sqrt(F)` sits on the vertex with the largest population.
fn pure_fidelity(rho: &DensityMatrix) -> Result<Option<SimplexSolution>> {
    let spec = rho.spectrum()?;
    if spec.eigenvalues.len() < 2 || spec.eigenvalues[1] > 1e-13 {
        return Ok(None);
    }
    let pops = rho.populations();
    let (best, top) = pops
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) });
    let mut vertex = vec![0.0; pops.len()];
    vertex[best] = 1.0;
    let dephased: f64 = pops.iter().map(|p| p * p).sum();
    Ok(Some(SimplexSolution {
        minimizer: IncoherentState::from_simplex_point(vertex),
        value: (1.0 - top.clamp(0.0, 1.0).sqrt()).max(0.0),
        residual: 0.0,
        iterations: 0,
        dephased_value: (1.0 - dephased.clamp(0.0, 1.0).sqrt()).max(0.0),
    }))
}

/// Direct evaluation of `D(rho, diag(delta))` through the generic kernels.
pub fn distance(rho: &DensityMatrix, delta: &[f64], objective: DistanceObjective) -> Result<f64> {
    let diag = ComplexMatrix::from_diag(delta);
    match objective {
        DistanceObjective::TraceDist => crate::linalg::trace_norm(&(rho.matrix() - &diag)),
        DistanceObjective::FidelityDist => {
            let f = fidelity(rho.matrix(), &diag)?;
            Ok((1.0 - f.sqrt()).max(0.0))
        }
    }
}

/// Eigenvalues at or below this are rounding noise around zero.
fn kernel_level(lambda: &[f64]) -> f64 {
    KERNEL_TOL * lambda.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

/// `sum_k sqrt(lambda_k)` without the kernel, whose noise would contribute
/// terms of order `sqrt(eps)`.
fn sqrt_trace(lambda: &[f64]) -> f64 {
    let kernel = kernel_level(lambda);
    lambda.iter().filter(|&&l| l > kernel).map(|l| l.sqrt()).sum()
}

/// Square roots of eigenvalues at rounding level would add spurious terms
/// of order `sqrt(eps)`; they are dropped.
fn range_sqrt(l: f64) -> f64 {
    if l > RANGE_TOL {
        l.sqrt()
    } else {
        0.0
    }
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let spec = eig_hermitian(rho)?;
    if spec.min_eigenvalue() < -PSD_TOL {
        return Err(Error::NotPsd(spec.min_eigenvalue()));
    }
    let r = spec.map(range_sqrt);
    let inner = r.matmul(sigma).matmul(&r).hermitian_part();
    let spec = eig_hermitian_part(&inner)?;
    let lambda: Vec<f64> = spec.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let root = sqrt_trace(&lambda);
    Ok(root * root)
}
