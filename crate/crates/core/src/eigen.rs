//! Smallest non-constant eigenpairs of `L u = λ M u` for PSD `L` and
//! positive diagonal `M`.
//!
//! Shift-invert thick-restart Lanczos on `A = (L + εM)⁻¹ M`, which is
//! self-adjoint in the `M` inner product. Per-component constant vectors are
//! deflated explicitly after every operator application.

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{FaceFrame, TriangleMesh};
use crate::operators::assemble_stiffness;
use crate::sparse::{self, CsrMatrix};

/// Required `‖Lu − λMu‖₂ / (‖L‖∞ ‖u‖₂)` for every returned pair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Internal convergence target.
const TARGET: f64 = 1e-10;
pub const MAX_RESTARTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("requested {requested} modes but only {available} non-constant modes exist")]
    TooManyModes { requested: usize, available: usize },
    #[error("k must be at least 1")]
    ZeroModes,
    #[error("shifted operator is not positive definite")]
    Factorization,
    #[error("no convergence after {restarts} restarts; residuals {residuals:?}")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },
    #[error("operator dimension {operator} does not match mass length {mass}")]
    Dimension { operator: usize, mass: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `‖u‖₂ = 1`.
    #[default]
    Euclidean,
    /// `uᵀMu = 1`.
    MassOrthonormal,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub normalization: Normalization,
    pub seed: u64,
    /// Previous modes used to seed the start vector.
    pub warm_start: Option<Vec<Vec<f64>>>,
    /// Krylov basis size; `None` picks one from `k`.
    pub basis_size: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { normalization: Normalization::Euclidean, seed: 0x5eed, warm_start: None, basis_size: None }
    }
}

/// `k` eigenpairs, ascending, constant modes excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub normalization: Normalization,
    /// Relative residual of each pair.
    pub residuals: Vec<f64>,
    pub constant_mode_excluded: bool,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// 1-based access, as used by stripe parameters.
    pub fn mode(&self, index: usize) -> Option<&[f64]> {
        index.checked_sub(1).and_then(|i| self.vectors.get(i)).map(Vec::as_slice)
    }
}

/// Relative residual `‖Lu − λMu‖₂ / (‖L‖∞ ‖u‖₂)`.
pub fn relative_residual(l: &CsrMatrix, mass: &[f64], lambda: f64, u: &[f64]) -> f64 {
    let lu = l.mul_vec(u);
    let r: Vec<f64> = lu.iter().zip(mass).zip(u).map(|((a, m), x)| a - lambda * m * x).collect();
    sparse::norm(&r) / (l.inf_norm() * sparse::norm(u)).max(f64::MIN_POSITIVE)
}

struct Problem<'a> {
    mass: &'a [f64],
    constants: Vec<Vec<f64>>,
    chol: sparse::Cholesky,
}

impl Problem<'_> {
    fn mdot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(self.mass).map(|((x, y), m)| x * m * y).sum()
    }

    fn deflate(&self, x: &mut [f64]) {
        for c in &self.constants {
            let s = self.mdot(c, x);
            x.iter_mut().zip(c).for_each(|(a, b)| *a -= s * b);
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mx: Vec<f64> = x.iter().zip(self.mass).map(|(a, m)| a * m).collect();
        let mut y = self.chol.solve(&mx);
        self.deflate(&mut y);
        y
    }

    /// Orthogonalizes against `basis` twice; returns the remaining `M`-norm.
    fn orthogonalize(&self, basis: &[Vec<f64>], x: &mut [f64]) -> f64 {
        for _ in 0..2 {
            self.deflate(x);
            for v in basis {
                let s = self.mdot(v, x);
                x.iter_mut().zip(v).for_each(|(a, b)| *a -= s * b);
            }
        }
        self.mdot(x, x).sqrt()
    }
}

/// Per-component indicator vectors, `M`-normalized.
fn constant_vectors(components: &[usize], mass: &[f64]) -> Vec<Vec<f64>> {
    let count = components.iter().max().map_or(0, |m| m + 1);
    (0..count)
        .map(|c| {
            let total: f64 = components.iter().zip(mass).filter(|(&k, _)| k == c).map(|(_, m)| m).sum();
            let s = 1.0 / total.sqrt();
            components.iter().map(|&k| if k == c { s } else { 0.0 }).collect()
        })
        .collect()
}

/// Solves for the `k` smallest non-constant eigenpairs.
///
/// `components` labels each vertex with its connected component; the
/// indicator of each component spans the nullspace of `L`.
pub fn solve_modes(
    l: &CsrMatrix,
    mass: &[f64],
    components: &[usize],
    k: usize,
    options: &EigenOptions,
) -> Result<ModeSet, EigenError> {
    let n = l.dim();
    if mass.len() != n || components.len() != n {
        return Err(EigenError::Dimension { operator: n, mass: mass.len() });
    }
    if k == 0 {
        return Err(EigenError::ZeroModes);
    }
    let constants = constant_vectors(components, mass);
    let available = n - constants.len();
    if k > available {
        return Err(EigenError::TooManyModes { requested: k, available });
    }
    let trace_l: f64 = l.diagonal().iter().sum();
    let trace_m: f64 = mass.iter().sum();
    let eps = 1e-10 * trace_l / trace_m;
    let shifted = l.plus_diagonal(eps, mass);
    let chol = shifted.cholesky().map_err(|_| EigenError::Factorization)?;
    let problem = Problem { mass, constants, chol };

    let m = options.basis_size.unwrap_or_else(|| (4 * k + 20).max(40).min(30 * k.max(2))).max(k + 1).min(available);
    let keep = (k + (m - k) / 2).min(m.saturating_sub(1)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if let Some(prev) = &options.warm_start {
        let scale = prev.iter().map(|v| sparse::norm(v)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        start.iter_mut().for_each(|s| *s *= 1e-3 * scale / (n as f64).sqrt());
        for v in prev.iter().filter(|v| v.len() == n) {
            start.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let nrm = problem.orthogonalize(&basis, &mut start);
    start.iter_mut().for_each(|x| *x /= nrm);
    basis.push(start);

    let mut last_residuals = Vec::new();
    for restart in 0..=MAX_RESTARTS {
        // expand
        while basis.len() < m || images.len() < basis.len() {
            let j = images.len();
            let w = problem.apply(&basis[j]);
            images.push(w.clone());
            if basis.len() >= m {
                continue;
            }
            let mut next = w;
            let mut nrm = problem.orthogonalize(&basis, &mut next);
            let wnorm = problem.mdot(&images[j], &images[j]).sqrt();
            if !(nrm > 1e-12 * wnorm) {
                // invariant subspace: continue with a fresh random direction
                next = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let raw = problem.mdot(&next, &next).sqrt();
                nrm = problem.orthogonalize(&basis, &mut next);
                if !(nrm > 1e-8 * raw) {
                    break;
                }
            }
            next.iter_mut().for_each(|x| *x /= nrm);
            basis.push(next);
        }
        let size = images.len();
        let mut h = DMatrix::<f64>::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = 0.5 * (problem.mdot(&basis[i], &images[j]) + problem.mdot(&basis[j], &images[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let combine = |vecs: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, v) in vecs.iter().enumerate().take(size) {
                let c = eig.eigenvectors[(i, col)];
                out.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
            out
        };

        let mut pairs = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for &col in order.iter().take(k) {
            let u = combine(&basis, col);
            let mu: Vec<f64> = u.iter().zip(mass).map(|(a, b)| a * b).collect();
            let lambda = sparse::dot(&u, &l.mul_vec(&u)) / sparse::dot(&u, &mu);
            residuals.push(relative_residual(l, mass, lambda, &u));
            pairs.push((lambda, u));
        }
        let converged = residuals.iter().all(|&r| r <= TARGET);
        let exhausted = size >= available;
        if converged || (exhausted && residuals.iter().all(|&r| r <= RESIDUAL_TOLERANCE)) {
            return Ok(finish(pairs, residuals, mass, options.normalization));
        }
        if restart == MAX_RESTARTS || exhausted {
            break;
        }
        last_residuals = residuals;

        // thick restart: keep the leading Ritz vectors, continue from the residual direction
        let keep = keep.min(size - 1).max(1);
        let mut new_basis = Vec::with_capacity(m + 1);
        let mut new_images = Vec::with_capacity(m + 1);
        for &col in order.iter().take(keep) {
            new_basis.push(combine(&basis, col));
            new_images.push(combine(&images, col));
        }
        let col = order[0];
        let theta = eig.eigenvalues[col];
        let mut next: Vec<f64> = new_images[0].iter().zip(&new_basis[0]).map(|(a, b)| a - theta * b).collect();
        let mut nrm = problem.orthogonalize(&new_basis, &mut next);
        if !(nrm > 1e-14) {
            next = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            nrm = problem.orthogonalize(&new_basis, &mut next);
        }
        next.iter_mut().for_each(|x| *x /= nrm);
        new_basis.push(next);
        basis = new_basis;
        images = new_images;
    }
    Err(EigenError::NoConvergence { restarts: MAX_RESTARTS, residuals: last_residuals })
}

fn finish(mut pairs: Vec<(f64, Vec<f64>)>, residuals: Vec<f64>, mass: &[f64], normalization: Normalization) -> ModeSet {
    let mut indexed: Vec<_> = pairs.drain(..).zip(residuals).collect();
    indexed.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
    let mut out = ModeSet {
        eigenvalues: Vec::new(),
        vectors: Vec::new(),
        normalization,
        residuals: Vec::new(),
        constant_mode_excluded: true,
    };
    for ((lambda, mut u), res) in indexed {
        let nrm = match normalization {
            Normalization::Euclidean => sparse::norm(&u),
            Normalization::MassOrthonormal => u.iter().zip(mass).map(|(a, m)| a * a * m).sum::<f64>().sqrt(),
        };
        let pivot = u.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > u[best].abs() { i } else { best });
        let s = if u[pivot] < 0.0 { -1.0 / nrm } else { 1.0 / nrm };
        u.iter_mut().for_each(|x| *x *= s);
        out.eigenvalues.push(lambda);
        out.vectors.push(u);
        out.residuals.push(res);
    }
    out
}

/// Modes of the operators built from `σ′` (U) and `σ″` (W), sharing `M`.
pub fn mode_pair_pipeline(
    mesh: &TriangleMesh,
    frames: &[FaceFrame],
    major: &[Matrix2<f64>],
    minor: &[Matrix2<f64>],
    mass: &[f64],
    k: usize,
    options: &EigenOptions,
) -> Result<(ModeSet, ModeSet), EigenError> {
    let components = mesh.vertex_components();
    let (u, w) = rayon::join(
        || {
            let l = assemble_stiffness(mesh, frames, major);
            solve_modes(&l, mass, &components, k, options)
        },
        || {
            let l = assemble_stiffness(mesh, frames, minor);
            solve_modes(&l, mass, &components, k, options)
        },
    );
    Ok((u?, w?))
}
