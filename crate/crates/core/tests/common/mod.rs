#![allow(dead_code)]

use std::f64::consts::PI;

use coherence::linalg::{ComplexMatrix, C64};
use coherence::state::DensityMatrix;

/// Eigenvalues of a Hermitian 2x2 or 3x3 matrix in closed form.
pub fn small_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    match m.rows() {
        1 => vec![m[(0, 0)].re],
        2 => {
            let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + m[(0, 1)].norm_sqr()).sqrt();
            vec![mean + r, mean - r]
        }
        3 => {
            let a = |i: usize, j: usize| m[(i, j)];
            let p1 = a(0, 1).norm_sqr() + a(0, 2).norm_sqr() + a(1, 2).norm_sqr();
            let q = (a(0, 0).re + a(1, 1).re + a(2, 2).re) / 3.0;
            let p2 = (0..3).map(|i| (a(i, i).re - q).powi(2)).sum::<f64>() + 2.0 * p1;
            if p2 == 0.0 {
                return vec![q; 3];
            }
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| {
                let shift = if i == j { C64::new(q, 0.0) } else { C64::new(0.0, 0.0) };
                (a(i, j) - shift) / p
            };
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let phi = (0.5 * det.re).clamp(-1.0, 1.0).acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
            vec![e1, 3.0 * q - e1 - e3, e3]
        }
        n => panic!("closed form only up to 3x3, got {n}"),
    }
}

/// `||rho - diag(delta)||_tr`.
pub fn trace_oracle(rho: &ComplexMatrix) -> impl Fn(&[f64]) -> f64 + '_ {
    move |delta| {
        let m = ComplexMatrix::from_fn(rho.rows(), rho.cols(), |i, j| {
            if i == j {
                rho[(i, j)] - delta[i]
            } else {
                rho[(i, j)]
            }
        });
        small_eigenvalues(&m).iter().map(|l| l.abs()).sum()
    }
}

/// Columns of `L` with `rho = L L^dagger`, by pivoted Cholesky.
pub fn cholesky_factor(rho: &ComplexMatrix) -> Vec<Vec<C64>> {
    let d = rho.rows();
    let mut r = rho.clone();
    let scale: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
    let mut cols = Vec::new();
    loop {
        let (p, top) = (0..d)
            .map(|i| (i, r[(i, i)].re))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if top <= 1e-14 * scale || cols.len() == d {
            return cols;
        }
        let col: Vec<C64> = (0..d).map(|i| r[(i, p)] / top.sqrt()).collect();
        for i in 0..d {
            for j in 0..d {
                r[(i, j)] -= col[i] * col[j].conj();
            }
        }
        cols.push(col);
    }
}

/// `1 - sqrt(F(rho, diag(delta)))` with `sqrt(F) = tr sqrt(G)`,
/// `G = L^dagger delta L`. The symmetric functions of `G` come from
/// Cauchy-Binet as sums of nonnegative terms, and with `s = tr sqrt(G)`,
/// `(s^2 - e1)^2 = 4 e2 + 8 sqrt(e3) s` is solved by Newton from above.
pub fn fidelity_oracle(rho: &ComplexMatrix) -> impl Fn(&[f64]) -> f64 {
    let l = cholesky_factor(rho);
    let d = rho.rows();
    move |delta| {
        let r = l.len();
        let e1: f64 = (0..d)
            .map(|i| delta[i] * l.iter().map(|c| c[i].norm_sqr()).sum::<f64>())
            .sum();
        let mut e2 = 0.0;
        for a in 0..r {
            for b in a + 1..r {
                for i in 0..d {
                    for j in i + 1..d {
                        let minor = l[a][i] * l[b][j] - l[b][i] * l[a][j];
                        e2 += delta[i] * delta[j] * minor.norm_sqr();
                    }
                }
            }
        }
        let e3 = if r == 3 {
            let m = |i: usize, k: usize| l[k][i];
            let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
            delta[0] * delta[1] * delta[2] * det.norm_sqr()
        } else {
            0.0
        };
        let root = if e3 == 0.0 {
            (e1 + 2.0 * e2.sqrt()).sqrt()
        } else {
            let r3 = e3.sqrt();
            let p = |s: f64| (s * s - e1).powi(2) - 4.0 * e2 - 8.0 * r3 * s;
            let dp = |s: f64| 4.0 * s * (s * s - e1) - 8.0 * r3;
            let mut s = (3.0 * e1).sqrt();
            for _ in 0..500 {
                let slope = dp(s);
                if slope <= 0.0 {
                    break;
                }
                let next = s - p(s) / slope;
                if next >= s {
                    break;
                }
                s = next;
            }
            s
        };
        1.0 - root
    }
}

fn grid_points(d: usize, n: usize) -> Vec<Vec<f64>> {
    let step = 1.0 / n as f64;
    match d {
        2 => (0..=n).map(|i| vec![i as f64 * step, (n - i) as f64 * step]).collect(),
        3 => (0..=n)
            .flat_map(|i| {
                (0..=n - i).map(move |j| vec![i as f64 * step, j as f64 * step, (n - i - j) as f64 * step])
            })
            .collect(),
        _ => panic!("grid oracle supports d <= 3"),
    }
}

/// Golden-section search for a convex function on `[lo, hi]`.
fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-14 {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    f(lo).min(f(hi)).min(fa).min(fb)
}

/// Brute-force minimum over the simplex grid of spacing `1/n`, refined by
/// nested golden-section searches. Partial minimization keeps convexity,
/// so the refinement stays exact at the kinks of the trace norm.
pub fn grid_minimum(d: usize, f: impl Fn(&[f64]) -> f64, n: usize) -> f64 {
    let grid = grid_points(d, n)
        .into_iter()
        .map(|p| f(&p))
        .fold(f64::INFINITY, f64::min);
    let refined = match d {
        2 => golden(0.0, 1.0, |a| f(&[a, 1.0 - a])),
        3 => golden(0.0, 1.0, |a| {
            let rest = (1.0 - a).max(0.0);
            golden(0.0, rest, |b| f(&[a, b, (rest - b).max(0.0)]))
        }),
        _ => panic!("grid oracle supports d <= 3"),
    };
    grid.min(refined)
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    coherence::linalg::trace_norm(&(a.matrix() - b.matrix())).unwrap()
}
