//! Density-matrix evolution under the phase-damping master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] − (σ²(t)/2) [H, [H, ρ]]
//! ```
//!
//! In the eigenbasis of `H` the double commutator is diagonal in the matrix
//! entries, `[H,[H,ρ]]_mn = (E_m − E_n)² ρ_mn`, so every entry evolves
//! independently:
//!
//! ```text
//! ρ_mn(t) = ρ_mn(0) · exp(−i(E_m − E_n)t) · exp(−λ(t)(E_m − E_n)²/2).
//! ```
//!
//! [`evolve_exact`] applies this propagator. [`evolve_mc`] instead averages
//! `U ρ(0) U†` with `U = exp(−iH·X_t)` over samples of the random phase
//! time; because `E[e^{−iΔX_t}] = e^{−iΔt − Δ²λ/2}` the two agree in
//! expectation. Both act on entries through the energy differences only, so
//! no matrix exponential is ever formed.

pub mod io;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{map_reduce, ComplexWelford, McConfig, DEFAULT_CHUNK};
use crate::profiles::DecoherenceProfile;

/// A Hamiltonian given by its eigenvalues; states are expressed in its
/// eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    energies: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::domain("Hamiltonian needs at least one energy level"));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::domain(format!("energy {e} is not finite")));
        }
        Ok(Self { energies })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// The Hamiltonian as a dense diagonal matrix.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                Complex64::new(self.energies[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// A valid density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    /// Smallest eigenvalue tolerated; Monte Carlo averages of rank-deficient
    /// states can dip slightly negative through rounding.
    pub const POSITIVITY_TOL: f64 = -1e-10;

    /// Validates and wraps a matrix.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self { matrix };
        rho.check()?;
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for the normalized `amplitudes`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain("state vector must be non-empty with finite nonzero norm"));
        }
        let psi: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        let d = psi.len();
        Ok(Self::from_trusted(DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj())))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        let w = Complex64::new(1.0 / d as f64, 0.0);
        Ok(Self::from_trusted(DMatrix::from_diagonal_element(d, d, w)))
    }

    /// Wraps a matrix known to be valid by construction.
    pub(crate) fn from_trusted(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        hermitian
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Re-checks every invariant at the documented tolerances.
    pub fn check(&self) -> Result<()> {
        let m = &self.matrix;
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("density matrix has non-finite entries"));
        }
        let d = m.nrows();
        for i in 0..d {
            for j in i..d {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > Self::HERMITICITY_TOL {
                    return Err(Error::domain(format!(
                        "density matrix not Hermitian: |ρ[{i},{j}] − conj ρ[{j},{i}]| = {gap:e}"
                    )));
                }
            }
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(Error::domain(format!("density matrix trace is {tr}, not 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < Self::POSITIVITY_TOL {
            return Err(Error::domain(format!(
                "density matrix not positive semidefinite: eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }
}

/// `Tr ρ² = Σ_mn |ρ_mn|²` (valid for Hermitian ρ).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix.iter().map(|z| z.norm_sqr()).sum()
}

/// `1 − Tr ρ²`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - purity(rho)
}

fn check_dims(rho: &DensityMatrix, h: &Hamiltonian) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::domain(format!(
            "density matrix is {0}x{0} but the Hamiltonian has {1} levels",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(())
}

#[inline]
fn unit_phase(angle: f64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    Complex64::new(c, s)
}

/// Exact solution of the master equation at time `t`.
pub fn evolve_exact(
    rho0: &DensityMatrix,
    h: &Hamiltonian,
    t: f64,
    profile: &DecoherenceProfile,
) -> Result<DensityMatrix> {
    check_dims(rho0, h)?;
    let lambda = profile.lambda(t)?;
    Ok(evolve_exact_lambda(rho0, h, t, lambda))
}

/// The propagator with λ(t) supplied directly.
pub fn evolve_exact_lambda(rho0: &DensityMatrix, h: &Hamiltonian, t: f64, lambda: f64) -> DensityMatrix {
    let e = h.energies();
    let d = rho0.dim();
    let mut out = rho0.matrix.clone();
    for m in 0..d {
        for n in (m + 1)..d {
            let gap = e[m] - e[n];
            let factor = unit_phase(-gap * t) * (-0.5 * lambda * gap * gap).exp();
            out[(m, n)] = rho0.matrix[(m, n)] * factor;
            out[(n, m)] = out[(m, n)].conj();
        }
    }
    DensityMatrix::from_trusted(out)
}

/// Right-hand side of the master equation in the eigenbasis:
/// `−i(E_m − E_n)ρ_mn − (rate/2)(E_m − E_n)² ρ_mn`.
pub fn master_equation_rhs(h: &Hamiltonian, rho: &DMatrix<Complex64>, rate: f64) -> DMatrix<Complex64> {
    let e = h.energies();
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        let gap = e[m] - e[n];
        rho[(m, n)] * Complex64::new(-0.5 * rate * gap * gap, -gap)
    })
}

/// Entrywise Monte Carlo estimate of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub mean: DMatrix<Complex64>,
    /// Standard error of each entry, `sqrt(E|ρ_mn − mean|²) / √n_paths`.
    pub std_err: DMatrix<f64>,
    pub n_paths: u64,
}

impl MatrixEstimate {
    /// Fraction of entries with `|mean − exact| ≤ k·std_err`.
    pub fn fraction_within(&self, exact: &DensityMatrix, k: f64) -> f64 {
        let total = self.mean.len();
        let hits = self
            .mean
            .iter()
            .zip(exact.matrix().iter())
            .zip(self.std_err.iter())
            .filter(|((m, x), se)| (*m - *x).norm() <= k * **se)
            .count();
        hits as f64 / total as f64
    }

    /// The averaged matrix; valid up to rounding since it is a mean of
    /// valid states.
    pub fn mean_state(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.mean.clone())
    }
}

/// Averages `U ρ(0) U†`, `U = exp(−iH X_t)`, over `cfg.n_paths` samples of
/// the phase time.
pub fn evolve_mc(
    rho0: &DensityMatrix,
    h: &Hamiltonian,
    t: f64,
    profile: &DecoherenceProfile,
    cfg: &McConfig,
) -> Result<MatrixEstimate> {
    check_dims(rho0, h)?;
    cfg.validate()?;
    let sampler = cfg.sampler.prepare(t, profile)?;
    let d = rho0.dim();
    let e = h.energies();
    // upper triangle, row-major, with energy gaps
    let pairs: Vec<(usize, usize, f64)> = (0..d)
        .flat_map(|m| (m..d).map(move |n| (m, n, e[m] - e[n])))
        .collect();
    let entries: Vec<Complex64> = pairs.iter().map(|&(m, n, _)| rho0.get(m, n)).collect();

    let acc = map_reduce(
        cfg.n_paths,
        DEFAULT_CHUNK,
        cfg.exec,
        || ComplexWelford::new(pairs.len()),
        |acc, path| {
            let x = sampler.draw(&mut cfg.seed.path_rng(path));
            acc.push(pairs.iter().zip(&entries).map(|(&(_, _, gap), &r)| {
                if gap == 0.0 {
                    r
                } else {
                    r * unit_phase(-gap * x)
                }
            }));
        },
    );

    let mut mean = DMatrix::zeros(d, d);
    let mut std_err = DMatrix::zeros(d, d);
    let se = acc.std_err();
    for (i, &(m, n, _)) in pairs.iter().enumerate() {
        mean[(m, n)] = acc.mean()[i];
        mean[(n, m)] = acc.mean()[i].conj();
        std_err[(m, n)] = se[i];
        std_err[(n, m)] = se[i];
    }
    Ok(MatrixEstimate {
        mean,
        std_err,
        n_paths: acc.count(),
    })
}
