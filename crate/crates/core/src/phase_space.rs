//! Gaussian phase-space primitives.
//!
//! All quantities are in shot-noise units (ħ = 2): the vacuum covariance matrix
//! is the identity and `[ξ_i, ξ_j] = 2iΩ_ij`. Quadratures are interleaved as
//! `(q₁, p₁, q₂, p₂, …)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laguerre::assoc_laguerre;

/// Symplectic eigenvalues down to `1 - PHYSICAL_TOL` are accepted as physical
/// and clamped to 1 where an entropy is taken.
pub const PHYSICAL_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const SYMPLECTIC_TOL: f64 = 1e-9;

/// Vector of quadrature values `(q₁, p₁, …, qₙ, pₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadVector(DVector<f64>);

impl QuadVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.len() % 2 != 0 {
            return Err(Error::validation(format!(
                "quadrature vector needs an even, non-zero length, got {}",
                entries.len()
            )));
        }
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn zeros(modes: usize) -> Self {
        Self(DVector::zeros(2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// The symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    modes: usize,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = 2 * self.modes;
        let mut omega = DMatrix::zeros(n, n);
        for k in 0..self.modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }
}

/// Real symmetric `2n × 2n` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::validation(format!(
                "covariance matrix must be square with even dimension, got {rows}x{cols}"
            )));
        }
        let scale = m.amax().max(1.0);
        for i in 0..rows {
            for j in (i + 1)..cols {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::validation(format!(
                        "covariance matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(self)
    }

    /// Every symplectic eigenvalue is at least `1 - PHYSICAL_TOL`.
    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues()
            .iter()
            .all(|&l| l >= 1.0 - PHYSICAL_TOL)
    }
}

/// A Gaussian state: displacement vector plus covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: QuadVector,
    pub cov: CovMatrix,
}

impl GaussianState {
    pub fn new(mean: QuadVector, cov: CovMatrix) -> Result<Self> {
        if mean.modes() != cov.modes() {
            return Err(Error::validation(format!(
                "mean has {} modes but covariance has {}",
                mean.modes(),
                cov.modes()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: QuadVector::zeros(modes),
            cov: CovMatrix::identity(modes),
        }
    }

    /// Product of coherent states with the given `(q, p)` displacements.
    pub fn coherent(displacements: &[(f64, f64)]) -> Self {
        let entries = displacements.iter().flat_map(|&(q, p)| [q, p]).collect();
        Self {
            mean: QuadVector(DVector::from_vec(entries)),
            cov: CovMatrix::identity(displacements.len()),
        }
    }

    pub fn modes(&self) -> usize {
        self.cov.modes()
    }
}

fn check_transmissivity(t_s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t_s) {
        return Err(Error::domain(format!(
            "transmissivity {t_s} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Beam splitter of transmissivity `t_s` on two modes.
pub fn beam_splitter_matrix(t_s: f64) -> Result<DMatrix<f64>> {
    check_transmissivity(t_s)?;
    let t = t_s.sqrt();
    let s = (1.0 - t_s).sqrt();
    let mut b = DMatrix::zeros(4, 4);
    for i in 0..2 {
        b[(i, i)] = t;
        b[(i + 2, i + 2)] = t;
        b[(i, i + 2)] = s;
        b[(i + 2, i)] = -s;
    }
    Ok(b)
}

/// Two-mode squeezer `[[cosh r·1, sinh r·Z], [sinh r·Z, cosh r·1]]`,
/// `Z = diag(1, -1)`.
pub fn two_mode_squeezer_matrix(r: f64) -> Result<DMatrix<f64>> {
    if !r.is_finite() {
        return Err(Error::domain(format!("squeezing parameter {r} not finite")));
    }
    let (c, s) = (r.cosh(), r.sinh());
    let mut m = DMatrix::zeros(4, 4);
    for i in 0..4 {
        m[(i, i)] = c;
    }
    m[(0, 2)] = s;
    m[(1, 3)] = -s;
    m[(2, 0)] = s;
    m[(3, 1)] = -s;
    Ok(m)
}

/// `‖SΩSᵀ − Ω‖∞` (max-abs entry).
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let omega = SymplecticForm::new(s.nrows() / 2).matrix();
    (s * &omega * s.transpose() - omega).amax()
}

pub fn apply_symplectic(state: &GaussianState, s: &DMatrix<f64>) -> Result<GaussianState> {
    let n = state.cov.as_matrix().nrows();
    if s.shape() != (n, n) {
        return Err(Error::validation(format!(
            "symplectic matrix is {}x{}, state needs {n}x{n}",
            s.nrows(),
            s.ncols()
        )));
    }
    let residual = symplectic_residual(s);
    if residual > SYMPLECTIC_TOL {
        return Err(Error::validation(format!(
            "matrix is not symplectic (residual {residual:.3e})"
        )));
    }
    let mean = QuadVector(s * state.mean.as_vector());
    let cov = s * state.cov.as_matrix() * s.transpose();
    // Symmetrize away rounding before re-validating.
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState {
        mean,
        cov: CovMatrix::new(cov)?,
    })
}

/// Wigner characteristic function `exp[-½ΛᵀΩVΩᵀΛ − i(Ωξ̄)ᵀΛ]` at
/// `Λ = (τ₁, σ₁, …, τₙ, σₙ)`.
pub fn gaussian_char_fn(state: &GaussianState, lambda: &[f64]) -> Result<Complex64> {
    let n = state.cov.as_matrix().nrows();
    if lambda.len() != n {
        return Err(Error::validation(format!(
            "lambda has length {}, state needs {n}",
            lambda.len()
        )));
    }
    let l = DVector::from_column_slice(lambda);
    let omega = SymplecticForm::new(n / 2).matrix();
    let quad = (l.transpose() * &omega * state.cov.as_matrix() * omega.transpose() * &l)[(0, 0)];
    let lin = ((&omega * state.mean.as_vector()).transpose() * &l)[(0, 0)];
    Ok(Complex64::new(-0.5 * quad, -lin).exp())
}

/// Characteristic function of the Fock state `|n⟩`:
/// `exp[-(τ²+σ²)/2] · Lₙ(τ²+σ²)`.
pub fn fock_char_fn(n: i64, tau: f64, sigma: f64) -> Result<f64> {
    if n < 0 {
        return Err(Error::domain(format!("photon number {n} is negative")));
    }
    let x = tau * tau + sigma * sigma;
    Ok((-0.5 * x).exp() * assoc_laguerre(n, 0, x))
}

/// Symplectic spectrum as the moduli of the eigenvalues of `iΩV`, one per
/// mode, in descending order.
pub fn symplectic_eigenvalues(cov: &CovMatrix) -> Vec<f64> {
    let v = cov.as_matrix();
    let omega = SymplecticForm::new(cov.modes()).matrix();
    let mut moduli: Vec<f64> = (omega * v)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    // Eigenvalues come in ±iλ pairs.
    moduli.into_iter().step_by(2).collect()
}

/// Entropy function `g(λ)` (bits) of a thermal mode with symplectic
/// eigenvalue `λ`. `g(1) = 0`.
pub fn entropy_g(lambda: f64) -> Result<f64> {
    if !(lambda >= 1.0 - PHYSICAL_TOL) {
        return Err(Error::domain(format!(
            "symplectic eigenvalue {lambda} below 1 (unphysical)"
        )));
    }
    if lambda <= 1.0 {
        return Ok(0.0);
    }
    let plus = 0.5 * (lambda + 1.0);
    let minus = 0.5 * (lambda - 1.0);
    let minus_term = if minus > 0.0 {
        minus * minus.log2()
    } else {
        0.0
    };
    Ok(plus * plus.log2() - minus_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn omega2() -> DMatrix<f64> {
        SymplecticForm::new(2).matrix()
    }

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let omega = SymplecticForm::new(3).matrix();
        assert_eq!(&omega * &omega, -DMatrix::<f64>::identity(6, 6));
        assert_eq!(omega.transpose(), -omega);
    }

    #[test]
    fn beam_splitter_limits() {
        assert_eq!(beam_splitter_matrix(1.0).unwrap(), DMatrix::identity(4, 4));
        let swap = beam_splitter_matrix(0.0).unwrap();
        assert_eq!(swap[(0, 2)], 1.0);
        assert_eq!(swap[(2, 0)], -1.0);
        assert_eq!(swap[(0, 0)], 0.0);
        let half = beam_splitter_matrix(0.5).unwrap();
        assert_relative_eq!(half[(0, 0)], std::f64::consts::FRAC_1_SQRT_2);
        assert!(symplectic_residual(&half) < 1e-12);
    }

    #[test]
    fn beam_splitter_rejects_out_of_range() {
        assert!(matches!(beam_splitter_matrix(1.2), Err(Error::Domain(_))));
        assert!(matches!(beam_splitter_matrix(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn squeezer_is_symplectic() {
        assert_eq!(
            two_mode_squeezer_matrix(0.0).unwrap(),
            DMatrix::identity(4, 4)
        );
        let s = two_mode_squeezer_matrix(0.5).unwrap();
        assert!((&s * omega2() * s.transpose() - omega2()).amax() < 1e-12);
        assert!(two_mode_squeezer_matrix(f64::NAN).is_err());
    }

    #[test]
    fn squeezed_coherent_moments() {
        let (r, d) = (0.5_f64, 1.3);
        let input = GaussianState::coherent(&[(d, 0.0), (d, 0.0)]);
        let out = apply_symplectic(&input, &two_mode_squeezer_matrix(r).unwrap()).unwrap();
        let cov = out.cov.as_matrix();
        assert_relative_eq!(cov[(0, 2)], (2.0 * r).sinh(), epsilon = 1e-12);
        assert_relative_eq!(cov[(1, 3)], -(2.0 * r).sinh(), epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 0)], (2.0 * r).cosh(), epsilon = 1e-12);
        // Mean picks up e^{+r} on both q quadratures.
        let mean = out.mean.as_vector();
        assert_relative_eq!(mean[0], d * r.exp(), epsilon = 1e-12);
        assert_relative_eq!(mean[2], d * r.exp(), epsilon = 1e-12);
        assert_eq!(mean[1], 0.0);
    }

    #[test]
    fn passive_optics_leave_vacuum_alone() {
        let vac = GaussianState::vacuum(2);
        let out = apply_symplectic(&vac, &beam_splitter_matrix(0.3).unwrap()).unwrap();
        assert!((out.cov.as_matrix() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn apply_symplectic_validates() {
        let vac = GaussianState::vacuum(2);
        let mut bad = DMatrix::identity(4, 4);
        bad[(0, 0)] = 2.0;
        assert!(matches!(
            apply_symplectic(&vac, &bad),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            apply_symplectic(&vac, &DMatrix::identity(2, 2)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn char_fn_values() {
        let vac = GaussianState::vacuum(1);
        assert_eq!(
            gaussian_char_fn(&vac, &[0.0, 0.0]).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let (tau, sigma) = (0.7, -0.4);
        let z = gaussian_char_fn(&vac, &[tau, sigma]).unwrap();
        assert_relative_eq!(
            z.re,
            (-(tau * tau + sigma * sigma) / 2.0).exp(),
            epsilon = 1e-15
        );

        let (dq, dp) = (1.1, -0.6);
        let coh = GaussianState::coherent(&[(dq, dp)]);
        let z = gaussian_char_fn(&coh, &[tau, sigma]).unwrap();
        let expected =
            Complex64::new(-0.5 * (tau * tau + sigma * sigma), -(tau * dp - sigma * dq)).exp();
        assert_relative_eq!(z.re, expected.re, epsilon = 1e-14);
        assert_relative_eq!(z.im, expected.im, epsilon = 1e-14);
    }

    #[test]
    fn fock_char_fn_values() {
        assert_relative_eq!(fock_char_fn(0, 0.3, 0.4).unwrap(), (-0.125_f64).exp());
        assert_eq!(fock_char_fn(1, 0.0, 0.0).unwrap(), 1.0);
        // τ² + σ² = 2, L₂(2) = 1 - 4 + 2 = -1
        assert_relative_eq!(
            fock_char_fn(2, 1.0, 1.0).unwrap(),
            -(-1.0_f64).exp(),
            epsilon = 1e-15
        );
        assert!(matches!(fock_char_fn(-1, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn symplectic_spectra() {
        let id = CovMatrix::identity(3);
        for l in id.symplectic_eigenvalues() {
            assert_relative_eq!(l, 1.0, epsilon = 1e-12);
        }
        let sq =
            CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25]))).unwrap();
        assert_relative_eq!(sq.symplectic_eigenvalues()[0], 1.0, epsilon = 1e-12);

        let v = 7.0_f64;
        let c = (v * v - 1.0).sqrt();
        #[rustfmt::skip]
        let tmsv = DMatrix::from_row_slice(4, 4, &[
            v, 0.0, c, 0.0,
            0.0, v, 0.0, -c,
            c, 0.0, v, 0.0,
            0.0, -c, 0.0, v,
        ]);
        let eig = CovMatrix::new(tmsv).unwrap().symplectic_eigenvalues();
        assert_eq!(eig.len(), 2);
        for l in eig {
            assert_relative_eq!(l, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn thermal_spectrum_descending() {
        let cov = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            2.0, 2.0, 5.0, 5.0,
        ])))
        .unwrap();
        let eig = cov.symplectic_eigenvalues();
        assert_relative_eq!(eig[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn covariance_must_be_symmetric() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(matches!(CovMatrix::new(m), Err(Error::Validation(_))));
        assert!(CovMatrix::new(DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_g(1.0).unwrap(), 0.0);
        assert_relative_eq!(entropy_g(3.0).unwrap(), 2.0, epsilon = 1e-15);
        assert!(entropy_g(1.0 + 1e-14).unwrap().abs() < 1e-12);
        assert_eq!(entropy_g(1.0 - 5e-10).unwrap(), 0.0);
        assert!(matches!(entropy_g(0.9), Err(Error::Domain(_))));
        assert!(entropy_g(f64::NAN).is_err());
    }

    #[test]
    fn entropy_is_increasing() {
        let grid: Vec<f64> = (0..2000).map(|i| 1.0 + 0.01 * i as f64).collect();
        for w in grid.windows(2) {
            assert!(entropy_g(w[1]).unwrap() > entropy_g(w[0]).unwrap());
        }
    }

    #[test]
    fn gaussian_state_dimension_check() {
        let err = GaussianState::new(QuadVector::zeros(1), CovMatrix::identity(2));
        assert!(matches!(err, Err(Error::Validation(_))));
        assert!(QuadVector::new(vec![1.0, 2.0, 3.0]).is_err());
    }
}
