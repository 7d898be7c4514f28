//! Convexity certification of the potential energy: closed-form Toeplitz
//! eigenvalue bounds, per-point field-Hessian eigenvalues, the asymptotic
//! certificate A(R') + ω1π² + ω2π⁴ > 0, and a weight advisor.

use std::f64::consts::PI;

use crate::error::{Result, SnakeError};
use crate::potential::{region_min_a, Point, Region, ScalarField};

/// λ_min(B1) = 2(1 − cos(π/N)) for the open-contour Toeplitz tridiagonal.
pub fn lambda_min_b1(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(SnakeError::Size(format!("lambda_min_b1 needs N >= 2, got {n}")));
    }
    Ok(2.0 * (1.0 - (PI / n as f64).cos()))
}

/// Companion closed form λ_max(B1) = 2(1 + cos(π/N)).
pub fn lambda_max_b1(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(SnakeError::Size(format!("lambda_max_b1 needs N >= 2, got {n}")));
    }
    Ok(2.0 * (1.0 + (PI / n as f64).cos()))
}

/// Lower bound on λ_min of the elastic Hessian:
/// 4ω1N(1−cos(π/N)) + 8ω2N³(1−cos(π/N))².
pub fn elastic_hessian_bound(n: usize, omega1: f64, omega2: f64) -> Result<f64> {
    if !(omega1 >= 0.0 && omega2 >= 0.0) {
        return Err(SnakeError::Precondition(format!(
            "weights must be nonnegative: omega1={omega1}, omega2={omega2}"
        )));
    }
    let lam = lambda_min_b1(n)?;
    let nf = n as f64;
    Ok(2.0 * omega1 * nf * lam + 2.0 * omega2 * nf.powi(3) * lam * lam)
}

/// Eigenvalues of the scaled 2x2 field-Hessian block, λ1 >= λ2.
pub fn field_block_eigenvalues(p_xx: f64, p_yy: f64, p_xy: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let trace = (p_xx + p_yy) / (2.0 * nf);
    let disc = ((p_xx - p_yy).powi(2) + 4.0 * p_xy * p_xy).sqrt() / (2.0 * nf);
    (trace + disc, trace - disc)
}

/// Outcome of the convexity certificate over a region.
#[derive(Debug, Clone)]
pub struct ConvexityReport {
    /// A(R') = min over the region of min(e1, e2).
    pub a: f64,
    pub argmin: Point,
    pub omega1: f64,
    pub omega2: f64,
    /// Right side of the elastic eigenvalue bound at `n_used`.
    pub elastic_bound: f64,
    /// A + ω1π² + ω2π⁴.
    pub condition_value: f64,
    pub holds: bool,
    pub skipped_samples: usize,
    pub n_used: usize,
    /// Finite-N cross-check: elastic bound + min sampled field-block
    /// eigenvalue, at `n_used`. Diagnostic only, not the certificate.
    pub finite_n_diagnostic: f64,
}

impl ConvexityReport {
    /// Flat key=value block.
    pub fn to_kv_block(&self) -> String {
        format!(
            "A={}\nargmin_x={}\nargmin_y={}\nomega1={}\nomega2={}\nelastic_bound={}\ncondition_value={}\nholds={}\nskipped={}\nn_used={}\nfinite_n_diagnostic={}\n",
            self.a,
            self.argmin.x,
            self.argmin.y,
            self.omega1,
            self.omega2,
            self.elastic_bound,
            self.condition_value,
            self.holds,
            self.skipped_samples,
            self.n_used,
            self.finite_n_diagnostic
        )
    }

    pub fn csv_header() -> &'static str {
        "A,argmin_x,argmin_y,omega1,omega2,condition_value,holds,skipped"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.a,
            self.argmin.x,
            self.argmin.y,
            self.omega1,
            self.omega2,
            self.condition_value,
            self.holds,
            self.skipped_samples
        )
    }
}

/// Default region sampling step: one grid spacing for grid fields,
/// otherwise the region bounding-box diagonal divided by 200.
pub fn default_grid_step(field: &ScalarField, region: &Region) -> f64 {
    match field.as_grid() {
        Some(g) => g.spacing(),
        None => {
            let (min, max) = region.bounding_box();
            (max - min).norm() / 200.0
        }
    }
}

/// Evaluate the convexity certificate over the region.
///
/// `n_diagnostic` is the segment count used for the finite-N cross-check
/// and the reported elastic bound; the certificate itself is N-free.
pub fn certify(
    field: &ScalarField,
    region: &Region,
    omega1: f64,
    omega2: f64,
    grid_step: f64,
    n_diagnostic: usize,
) -> Result<ConvexityReport> {
    if !(omega1 >= 0.0 && omega2 >= 0.0) {
        return Err(SnakeError::Precondition(format!(
            "weights must be nonnegative: omega1={omega1}, omega2={omega2}"
        )));
    }
    let scan = region_min_a(field, region, grid_step)?;
    let condition_value = scan.a + omega1 * PI * PI + omega2 * PI.powi(4);
    let elastic_bound = elastic_hessian_bound(n_diagnostic, omega1, omega2)?;

    // finite-N route (full 2x2 blocks, no polar approximation)
    let (bb_min, bb_max) = region.bounding_box();
    let nx = ((bb_max.x - bb_min.x) / grid_step).floor() as usize + 1;
    let ny = ((bb_max.y - bb_min.y) / grid_step).floor() as usize + 1;
    let mut min_block = f64::INFINITY;
    for j in 0..ny {
        for i in 0..nx {
            let p = Point::new(
                bb_min.x + i as f64 * grid_step,
                bb_min.y + j as f64 * grid_step,
            );
            if !region.contains(p) {
                continue;
            }
            if let Ok(s) = field.sample(p) {
                let (_, lam2) = field_block_eigenvalues(
                    s.hessian[(0, 0)],
                    s.hessian[(1, 1)],
                    s.hessian[(0, 1)],
                    n_diagnostic,
                );
                min_block = min_block.min(lam2);
            }
        }
    }

    Ok(ConvexityReport {
        a: scan.a,
        argmin: scan.argmin,
        omega1,
        omega2,
        elastic_bound,
        condition_value,
        holds: condition_value > 0.0,
        skipped_samples: scan.skipped,
        n_used: n_diagnostic,
        finite_n_diagnostic: elastic_bound + min_block,
    })
}

/// Smallest elasticity-only weight making the certificate hold with the
/// requested margin.
pub fn suggest_weights(a: f64, margin: f64) -> Result<(f64, f64)> {
    if !(margin > 0.0) {
        return Err(SnakeError::Precondition(format!("margin = {margin}")));
    }
    if a >= margin {
        Ok((0.0, 0.0))
    } else {
        Ok(((margin - a) / (PI * PI), 0.0))
    }
}
