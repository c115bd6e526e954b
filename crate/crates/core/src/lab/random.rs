//! Seeded generators for states and incoherent instruments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::channel::{validate_instrument, IncoherentInstrument};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::state::{DensityMatrix, StateVector};

/// Projected norms below this trigger a fresh row assignment.
const DEGENERATE_NORM: f64 = 1e-6;

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Uniform point of the probability simplex (flat Dirichlet).
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Haar-distributed pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<StateVector> {
    StateVector::normalized(gaussian_vector(rng, d))
}

pub fn random_density_with<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if rank == 0 || rank > d {
        return Err(Error::InvalidRank { dim: d, rank });
    }
    let states = (0..rank)
        .map(|_| random_pure_state(rng, d).map(|s| s.density()))
        .collect::<Result<Vec<_>>>()?;
    let weights = random_simplex_point(rng, rank);
    DensityMatrix::mixture(&weights, &states)
}

/// A rank-`rank` state on `d` levels, deterministic in `(d, rank, seed)`.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(&mut ChaCha8Rng::seed_from_u64(seed), d, rank)
}

/// Random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = gaussian_vector(rng, d);
        for q in &cols {
            let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(q) {
                *x -= overlap * a;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > DEGENERATE_NORM {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Each operator has one nonzero entry per column, at row `rows[n][j]` with
/// amplitude `amps[n][j]`. For such operators the completeness condition
/// reads `sum_{n : rows[n][i] = rows[n][j]} conj(a_ni) a_nj = delta_ij`, so
/// the amplitude vectors of different columns are made orthogonal on the
/// operators where their rows collide.
pub fn random_incoherent_instrument_with<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n_ops: usize,
) -> Result<IncoherentInstrument> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if n_ops == 0 {
        return Err(Error::EmptyInstrument);
    }
    let mut rows = vec![vec![0usize; d]; n_ops];
    let mut amps = vec![vec![ZERO; d]; n_ops];
    for j in 0..d {
        for r in rows.iter_mut() {
            r[j] = rng.random_range(0..d);
        }
        let a = loop {
            let candidate = gaussian_vector(rng, n_ops);
            if let Some(a) = orthogonalize(candidate, &rows, &amps, j) {
                break a;
            }
            // Collisions pin the column down completely; give it rows no
            // earlier column uses.
            for r in rows.iter_mut() {
                let free: Vec<usize> = (0..d).filter(|x| !r[..j].contains(x)).collect();
                r[j] = free[rng.random_range(0..free.len())];
            }
        };
        for n in 0..n_ops {
            amps[n][j] = a[n];
        }
    }
    let ops = (0..n_ops)
        .map(|n| {
            let mut k = ComplexMatrix::zeros(d, d);
            for j in 0..d {
                k[(rows[n][j], j)] = amps[n][j];
            }
            k
        })
        .collect();
    validate_instrument(ops)
}

/// Projects `a` off the constraint vectors of the columns before `j` and
/// normalizes; `None` if nothing is left.
fn orthogonalize(
    mut a: Vec<C64>,
    rows: &[Vec<usize>],
    amps: &[Vec<C64>],
    j: usize,
) -> Option<Vec<C64>> {
    let n_ops = a.len();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for i in 0..j {
        let mut c: Vec<C64> = (0..n_ops)
            .map(|n| if rows[n][i] == rows[n][j] { amps[n][i] } else { ZERO })
            .collect();
        for q in &basis {
            let overlap: C64 = q.iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
            for (x, y) in c.iter_mut().zip(q) {
                *x -= overlap * y;
            }
        }
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            basis.push(c.into_iter().map(|z| z / norm).collect());
        }
    }
    // Two passes keep the projection accurate to rounding.
    for _ in 0..2 {
        for q in &basis {
            let overlap: C64 = q.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
            for (x, y) in a.iter_mut().zip(q) {
                *x -= overlap * y;
            }
        }
    }
    let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (norm > DEGENERATE_NORM).then(|| a.into_iter().map(|z| z / norm).collect())
}

/// A random complete incoherent instrument on `d` levels with `n_ops`
/// square operators, deterministic in the seed.
pub fn random_incoherent_instrument(d: usize, n_ops: usize, seed: u64) -> Result<IncoherentInstrument> {
    random_incoherent_instrument_with(&mut ChaCha8Rng::seed_from_u64(seed), d, n_ops)
}
