//! Equilibrium analysis: generalized modes of the energy Hessian, modal
//! decay rates, attractor classification, and the Hamiltonian capture
//! certificate for a region around a desired boundary.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::contour::{energy_gradient, total_energy, Contour, SnakeParams, StiffnessSet};
use crate::dynamics::{evolve, StopSpec, Trace};
use crate::error::{Result, SnakeError};
use crate::potential::{Region, ScalarField};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative tolerance below which Re(σ) is treated as zero.
pub const NON_HYPERBOLIC_TOL: f64 = 1e-9;

/// ‖∇E_p‖∞ at the current configuration.
pub fn equilibrium_residual(
    contour: &Contour,
    field: &ScalarField,
    stiffness: &StiffnessSet,
) -> Result<f64> {
    Ok(energy_gradient(contour, field, stiffness)?.amax())
}

/// Paired decay rates σ± of one mode, with discriminant Δ = γ² − 4μβ.
#[derive(Debug, Clone, Copy)]
pub struct ModalRate {
    pub plus: Complex<f64>,
    pub minus: Complex<f64>,
    pub delta: f64,
}

/// Generalized spectrum of (D²E_p, M0) plus the per-mode decay rates.
#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    /// Generalized eigenvalues, ascending.
    pub betas: Vec<f64>,
    /// M0-orthonormal eigenvectors, one per column.
    pub modes: DMatrix<f64>,
    /// Empty until `with_rates` is applied.
    pub sigmas: Vec<ModalRate>,
}

impl ModalSpectrum {
    pub fn with_rates(mut self, mu: f64, gamma: f64) -> Result<Self> {
        self.sigmas = modal_sigmas(&self.betas, mu, gamma)?;
        Ok(self)
    }

    /// One row per mode: β, Δ, Re σ+, Im σ+, Re σ−, Im σ−.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "beta,delta,re_sigma_plus,im_sigma_plus,re_sigma_minus,im_sigma_minus\n",
        );
        for (i, beta) in self.betas.iter().enumerate() {
            match self.sigmas.get(i) {
                Some(s) => out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    beta, s.delta, s.plus.re, s.plus.im, s.minus.re, s.minus.im
                )),
                None => out.push_str(&format!("{beta},NaN,NaN,NaN,NaN,NaN\n")),
            }
        }
        out
    }
}

/// Solve D²E_p·φ = β·M0·φ by the M0-Cholesky congruence: with M0 = LLᵀ the
/// problem reduces to the standard symmetric eigenproblem on L⁻¹·H·L⁻ᵀ.
pub fn generalized_modes(hessian: &DMatrix<f64>, m0: &DMatrix<f64>) -> Result<ModalSpectrum> {
    if !hessian.is_square() || hessian.shape() != m0.shape() {
        return Err(SnakeError::Dimension(format!(
            "hessian {:?} vs M0 {:?}",
            hessian.shape(),
            m0.shape()
        )));
    }
    let sym_err = (hessian - hessian.transpose()).amax();
    if sym_err > 1e-10 * (1.0 + hessian.amax()) {
        return Err(SnakeError::Precondition(format!(
            "hessian not symmetric (asymmetry {sym_err:e})"
        )));
    }
    let chol = m0
        .clone()
        .cholesky()
        .ok_or_else(|| SnakeError::Definiteness("M0".into()))?;
    let l = chol.l();
    // B = L⁻¹ H L⁻ᵀ, formed by two triangular solves
    let mut b = hessian.clone();
    let ok1 = l.solve_lower_triangular_mut(&mut b);
    b.transpose_mut();
    let ok2 = l.solve_lower_triangular_mut(&mut b);
    if !(ok1 && ok2) {
        return Err(SnakeError::Definiteness("M0 Cholesky factor".into()));
    }
    let b = 0.5 * (&b + b.transpose());
    let eig = b.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let betas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    // φ = L⁻ᵀ u maps orthonormal u to M0-orthonormal modes
    let mut modes = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut phi: DVector<f64> = eig.eigenvectors.column(i).into();
        if !l.transpose().solve_upper_triangular_mut(&mut phi) {
            return Err(SnakeError::Definiteness("M0 Cholesky factor".into()));
        }
        modes.set_column(col, &phi);
    }
    Ok(ModalSpectrum {
        betas,
        modes,
        sigmas: Vec::new(),
    })
}

/// σ± = (−γ ± √Δ)/(2μ), Δ = γ² − 4μβ; complex conjugate pair when Δ < 0.
pub fn modal_sigmas(betas: &[f64], mu: f64, gamma: f64) -> Result<Vec<ModalRate>> {
    if !(mu > 0.0) || !(gamma >= 0.0) {
        return Err(SnakeError::Precondition(format!(
            "modal rates need mu > 0, gamma >= 0 (got {mu}, {gamma})"
        )));
    }
    Ok(betas
        .iter()
        .map(|&beta| {
            let delta = gamma * gamma - 4.0 * mu * beta;
            let root = Complex::new(delta, 0.0).sqrt();
            let two_mu = 2.0 * mu;
            ModalRate {
                plus: (Complex::new(-gamma, 0.0) + root) / two_mu,
                minus: (Complex::new(-gamma, 0.0) - root) / two_mu,
                delta,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumLabel {
    StableNode,
    StableFocus,
    MixedStable,
    Unstable,
    NonHyperbolic,
}

impl std::fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EquilibriumLabel::StableNode => "stable-node",
            EquilibriumLabel::StableFocus => "stable-focus",
            EquilibriumLabel::MixedStable => "mixed-stable",
            EquilibriumLabel::Unstable => "saddle/unstable",
            EquilibriumLabel::NonHyperbolic => "non-hyperbolic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumClassification {
    pub label: EquilibriumLabel,
    pub min_beta: f64,
    pub max_beta: f64,
    /// max Re(σ) over all modes.
    pub spectral_abscissa: f64,
}

impl EquilibriumClassification {
    pub fn summary_kv(&self) -> String {
        format!(
            "label={}\nmin_beta={}\nmax_beta={}\nspectral_abscissa={}\n",
            self.label, self.min_beta, self.max_beta, self.spectral_abscissa
        )
    }
}

/// Label the equilibrium from the signs of Re(σ); |Re| below
/// `tolerance·(1+|σ|)` counts as zero (non-hyperbolic).
pub fn classify_equilibrium(
    spectrum: &ModalSpectrum,
    tolerance: f64,
) -> Result<EquilibriumClassification> {
    if spectrum.sigmas.is_empty() {
        return Err(SnakeError::Precondition(
            "spectrum has no modal rates; call with_rates first".into(),
        ));
    }
    let min_beta = spectrum.betas.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_beta = spectrum
        .betas
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut abscissa = f64::NEG_INFINITY;
    let mut any_zero = false;
    let mut any_pos = false;
    let mut any_real = false;
    let mut any_complex = false;
    for rate in &spectrum.sigmas {
        for sigma in [rate.plus, rate.minus] {
            abscissa = abscissa.max(sigma.re);
            if sigma.re.abs() < tolerance * (1.0 + sigma.norm()) {
                any_zero = true;
            } else if sigma.re > 0.0 {
                any_pos = true;
            }
        }
        if rate.delta >= 0.0 {
            any_real = true;
        } else {
            any_complex = true;
        }
    }
    let label = if any_pos {
        EquilibriumLabel::Unstable
    } else if any_zero {
        EquilibriumLabel::NonHyperbolic
    } else if any_real && any_complex {
        EquilibriumLabel::MixedStable
    } else if any_complex {
        EquilibriumLabel::StableFocus
    } else {
        EquilibriumLabel::StableNode
    };
    Ok(EquilibriumClassification {
        label,
        min_beta,
        max_beta,
        spectral_abscissa: abscissa,
    })
}

/// First-order Jacobian [0, I; −(1/μ)M0⁻¹H, −(γ/μ)I].
pub fn jacobian_dx(
    hessian: &DMatrix<f64>,
    m0: &DMatrix<f64>,
    mu: f64,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    if !(mu > 0.0) {
        return Err(SnakeError::Precondition(format!("mu must be > 0, got {mu}")));
    }
    let n = hessian.nrows();
    if hessian.shape() != m0.shape() || !hessian.is_square() {
        return Err(SnakeError::Dimension(format!(
            "hessian {:?} vs M0 {:?}",
            hessian.shape(),
            m0.shape()
        )));
    }
    let chol = m0
        .clone()
        .cholesky()
        .ok_or_else(|| SnakeError::Definiteness("M0".into()))?;
    let m0_inv_h = chol.solve(hessian);
    let mut dx = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        dx[(i, n + i)] = 1.0;
        dx[(n + i, n + i)] = -gamma / mu;
    }
    dx.view_mut((n, 0), (n, n)).copy_from(&(-(1.0 / mu) * m0_inv_h));
    Ok(dx)
}

/// Mechanical energy split at a phase point.
#[derive(Debug, Clone)]
pub struct HamiltonianEval {
    pub h: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// Conjugate momenta P = μ·M0·Q̇.
    pub momenta: DVector<f64>,
}

/// H = T + E_p with T = (μ/2)Q̇ᵀM0Q̇ = (1/(2μ))PᵀM0⁻¹P.
pub fn hamiltonian(
    template: &Contour,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    field: &ScalarField,
    stiffness: &StiffnessSet,
    params: &SnakeParams,
) -> Result<HamiltonianEval> {
    params.validate()?;
    let contour = template.with_free_vector(q)?;
    let potential = total_energy(&contour, field, stiffness)?;
    let m0 = stiffness.m0();
    let momenta = params.mu * (m0 * qdot);
    let kinetic = 0.5 * params.mu * qdot.dot(&(m0 * qdot));
    let chol = m0
        .clone()
        .cholesky()
        .ok_or_else(|| SnakeError::Definiteness("M0".into()))?;
    let t_momenta = momenta.dot(&chol.solve(&momenta)) / (2.0 * params.mu);
    if (kinetic - t_momenta).abs() > 1e-12 * (1.0 + kinetic.abs()) {
        return Err(SnakeError::Precondition(format!(
            "kinetic energy forms disagree: {kinetic} vs {t_momenta}"
        )));
    }
    Ok(HamiltonianEval {
        h: kinetic + potential,
        kinetic,
        potential,
        momenta,
    })
}

/// Canonical gradient: (∂H/∂Q, ∂H/∂P) = (∇E_p, (1/μ)M0⁻¹P).
pub fn grad_h_at(
    template: &Contour,
    q: &DVector<f64>,
    p: &DVector<f64>,
    field: &ScalarField,
    stiffness: &StiffnessSet,
    params: &SnakeParams,
) -> Result<(DVector<f64>, DVector<f64>)> {
    params.validate()?;
    let contour = template.with_free_vector(q)?;
    let dq = energy_gradient(&contour, field, stiffness)?;
    let chol = stiffness
        .m0()
        .clone()
        .cholesky()
        .ok_or_else(|| SnakeError::Definiteness("M0".into()))?;
    let dp = chol.solve(p) / params.mu;
    Ok((dq, dp))
}

/// Instantaneous −dH/dt along the exact flow: γ·Q̇ᵀM0Q̇.
pub fn dissipation_rate(qdot: &DVector<f64>, m0: &DMatrix<f64>, gamma: f64) -> f64 {
    gamma * qdot.dot(&(m0 * qdot))
}

/// D²H = blockdiag(D²E_p, (1/μ)M0⁻¹).
pub fn hessian_h(
    hessian_ep: &DMatrix<f64>,
    m0: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    if !(mu > 0.0) {
        return Err(SnakeError::Precondition(format!("mu must be > 0, got {mu}")));
    }
    let n = hessian_ep.nrows();
    let chol = m0
        .clone()
        .cholesky()
        .ok_or_else(|| SnakeError::Definiteness("M0".into()))?;
    let m0_inv = chol.inverse();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(hessian_ep);
    h.view_mut((n, n), (n, n)).copy_from(&(m0_inv / mu));
    Ok(h)
}

/// Result of the capture-region energy test.
#[derive(Debug, Clone, Copy)]
pub struct CaptureReport {
    pub holds: bool,
    pub h0: f64,
    /// Estimate (single-point-exit) of min E_p over boundary configurations.
    pub boundary_min: f64,
    pub margin: f64,
}

fn check_inside(contour: &Contour, region: &Region) -> Result<()> {
    for idx in contour.free_indices() {
        let p = contour.points()[idx];
        if !region.contains(p) {
            return Err(SnakeError::Precondition(format!(
                "contour point {idx} at ({}, {}) lies outside the region",
                p.x, p.y
            )));
        }
    }
    Ok(())
}

fn single_exit_energy(
    contour: &Contour,
    field: &ScalarField,
    stiffness: &StiffnessSet,
    idx: usize,
    b: crate::potential::Point,
) -> Option<f64> {
    let mut pts = contour.points().to_vec();
    pts[idx] = b;
    let moved = Contour::new(pts, contour.topology()).ok()?;
    total_energy(&moved, field, stiffness).ok()
}

/// H(Q0, P0) ≤ min E_p over the region boundary ⇒ the trajectory cannot
/// leave the region. boundary_min uses the single-point-exit relaxation:
/// the minimum over (free point, boundary sample) of E_p with that one
/// point moved to the boundary, a lower bound on the true boundary
/// minimum in configuration space.
pub fn capture_certificate(
    contour: &Contour,
    velocity: &DVector<f64>,
    field: &ScalarField,
    stiffness: &StiffnessSet,
    params: &SnakeParams,
    region: &Region,
) -> Result<CaptureReport> {
    check_inside(contour, region)?;
    let q0 = contour.free_vector();
    let eval = hamiltonian(contour, &q0, velocity, field, stiffness, params)?;
    let samples = region.boundary_points();
    let pairs: Vec<(usize, crate::potential::Point)> = contour
        .free_indices()
        .flat_map(|idx| samples.iter().map(move |&b| (idx, b)))
        .collect();
    let energy_of = |&(idx, b): &(usize, crate::potential::Point)| {
        single_exit_energy(contour, field, stiffness, idx, b)
    };
    #[cfg(feature = "parallel")]
    let energies: Vec<Option<f64>> = pairs.par_iter().map(energy_of).collect();
    #[cfg(not(feature = "parallel"))]
    let energies: Vec<Option<f64>> = pairs.iter().map(energy_of).collect();
    let boundary_min = energies
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    if !boundary_min.is_finite() {
        return Err(SnakeError::NoValidSample {
            total: pairs.len(),
        });
    }
    Ok(CaptureReport {
        holds: eval.h <= boundary_min,
        h0: eval.h,
        boundary_min,
        margin: boundary_min - eval.h,
    })
}

/// Outcome of empirically checking a capture claim by simulation.
pub struct CaptureVerification {
    pub never_exited: bool,
    pub trace: Trace,
    /// Evolution failure, if any; counted as an exit.
    pub failure: Option<SnakeError>,
}

/// Run the evolution and report whether every iterate's free points stayed
/// inside the region.
pub fn verify_capture(
    contour: &Contour,
    velocity: &DVector<f64>,
    field: &ScalarField,
    stiffness: &StiffnessSet,
    params: &SnakeParams,
    region: &Region,
    stop: &StopSpec,
) -> Result<CaptureVerification> {
    check_inside(contour, region)?;
    let (trace, failure) = match evolve(contour, velocity, field, stiffness, params, stop) {
        Ok(out) => (out.trace, None),
        Err(e) => (
            e.trace,
            Some(SnakeError::Evolution {
                iteration: e.iteration,
                source: Box::new(e.source),
            }),
        ),
    };
    let mut never_exited = failure.is_none();
    'records: for rec in &trace.records {
        let m = rec.free.len() / 2;
        for i in 0..m {
            let p = crate::potential::Point::new(rec.free[i], rec.free[m + i]);
            if !region.contains(p) {
                never_exited = false;
                break 'records;
            }
        }
    }
    Ok(CaptureVerification {
        never_exited,
        trace,
        failure,
    })
}
