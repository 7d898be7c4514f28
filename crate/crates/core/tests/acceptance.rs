//! Acceptance gate: one test per criterion, each emitting a single
//! PASS/FAIL line (visible with --nocapture).

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use snake_core::*;

fn verdict(id: u32, name: &str, pass: bool) {
    println!(
        "acceptance {id:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id:02} {name} failed");
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn dense_lambda_min(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn open_b1(n: usize) -> DMatrix<f64> {
    let m = n - 1;
    let mut b1 = DMatrix::zeros(m, m);
    for i in 0..m {
        b1[(i, i)] = 2.0;
        if i + 1 < m {
            b1[(i, i + 1)] = -1.0;
            b1[(i + 1, i)] = -1.0;
        }
    }
    b1
}

// single-point-per-coordinate bowl: 4-point open contour, omega = 0, so
// each free coordinate follows mu x'' + gamma x' + k x = 0
fn bowl(
    k: f64,
    gamma: f64,
    tau: f64,
    x0: f64,
) -> (Contour, ScalarField, StiffnessSet, SnakeParams) {
    let contour = Contour::new(
        vec![pt(-2.0, 0.0), pt(x0, 0.0), pt(-x0, 0.0), pt(2.0, 0.0)],
        Topology::OpenFixedEnds,
    )
    .unwrap();
    let field = ScalarField::quadratic(pt(0.0, 0.0), k).unwrap();
    let params = SnakeParams::new(0.0, 0.0, 1.0, gamma, tau).unwrap();
    let stiffness = StiffnessSet::build(4, Topology::OpenFixedEnds, &params).unwrap();
    (contour, field, stiffness, params)
}

fn run_bowl(k: f64, gamma: f64, tau: f64, x0: f64, max_iter: usize, epsilon: f64) -> EvolveOutcome {
    let (contour, field, stiffness, params) = bowl(k, gamma, tau, x0);
    evolve(
        &contour,
        &DVector::zeros(4),
        &field,
        &stiffness,
        &params,
        &StopSpec {
            criterion: StopCriterion::SteadyState,
            epsilon,
            max_iter,
        },
    )
    .expect("bowl run")
}

#[test]
fn criterion_01_toeplitz_eigenvalue_formula() {
    let mut pass = true;
    for n in 2..=64usize {
        let dense = dense_lambda_min(&open_b1(n));
        if (lambda_min_b1(n).unwrap() - dense).abs() > 1e-10 {
            pass = false;
        }
    }
    verdict(1, "toeplitz lambda_min formula vs dense oracle", pass);
}

#[test]
fn criterion_02_elastic_bound_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let mut pass = true;
    for _ in 0..10 {
        let n = rng.gen_range(3..24usize);
        let w1 = rng.gen_range(0.0..2.0);
        let w2 = rng.gen_range(0.0..2.0);
        let params = SnakeParams::new(w1, w2, 1.0, 0.0, 0.1).unwrap();
        let s = StiffnessSet::build(n + 1, Topology::OpenFixedEnds, &params).unwrap();
        let lam = dense_lambda_min(&(2.0 * s.k()));
        let bound = elastic_hessian_bound(n, w1, w2).unwrap();
        if bound > lam + 1e-9 || (bound - lam).abs() > 1e-9 * (1.0 + lam.abs()) {
            pass = false;
        }
    }
    verdict(2, "elastic hessian bound vs dense lambda_min(2K)", pass);
}

#[test]
fn criterion_03_certificate_soundness() {
    // inverted bowl P = -(1/2)|x|^2 rasterized; the certificate holds only
    // because omega1 pi^2 outweighs A = -0.5
    let n = 161;
    let h = 0.05;
    let values: Vec<f64> = (0..n * n)
        .map(|idx| {
            let x = (idx % n) as f64 * h - 4.0;
            let y = (idx / n) as f64 * h - 4.0;
            -0.5 * (x * x + y * y)
        })
        .collect();
    let field = ScalarField::grid(GridField::new(n, n, h, values).unwrap());
    let offset = pt(4.0, 4.0);
    let region = Region::disk(offset, 1.2, 64).unwrap();
    let w1 = 0.1;
    let report = certify(&field, &region, w1, 0.0, h, 16).unwrap();
    let mut pass = report.holds;
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let params = SnakeParams::new(w1, 0.0, 1.0, 0.0, 0.1).unwrap();
    for _ in 0..10 {
        let n_points = rng.gen_range(5..9usize);
        let pts: Vec<Point> = (0..n_points)
            .map(|_| {
                let r = rng.gen_range(0.0..1.0);
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                offset + r * pt(th.cos(), th.sin())
            })
            .collect();
        let contour = Contour::new(pts, Topology::OpenFixedEnds).unwrap();
        let stiffness = StiffnessSet::build(n_points, Topology::OpenFixedEnds, &params).unwrap();
        let hess = hessian_ep(&contour, &field, &stiffness).unwrap();
        if dense_lambda_min(&hess) <= 0.0 {
            pass = false;
        }
    }
    verdict(3, "certified region implies positive definite hessian", pass);
}

#[test]
fn criterion_04_gradient_hessian_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let field = ScalarField::gaussian(pt(0.2, -0.1), 2.0, 1.3).unwrap();
    let mut pass = true;
    for trial in 0..20 {
        let topology = if trial % 2 == 0 {
            Topology::OpenFixedEnds
        } else {
            Topology::Closed
        };
        let n_points = rng.gen_range(4..9usize);
        let pts: Vec<Point> = (0..n_points)
            .map(|_| pt(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect();
        let contour = Contour::new(pts, topology).unwrap();
        let params = SnakeParams::new(
            rng.gen_range(0.0..1.5),
            rng.gen_range(0.0..0.5),
            1.0,
            0.0,
            0.1,
        )
        .unwrap();
        let stiffness = StiffnessSet::build(n_points, topology, &params).unwrap();
        let q = contour.free_vector();
        let grad = energy_gradient(&contour, &field, &stiffness).unwrap();
        let hess = hessian_ep(&contour, &field, &stiffness).unwrap();
        let energy_at = |q: &DVector<f64>| {
            total_energy(&contour.with_free_vector(q).unwrap(), &field, &stiffness).unwrap()
        };
        let grad_at = |q: &DVector<f64>| {
            energy_gradient(&contour.with_free_vector(q).unwrap(), &field, &stiffness).unwrap()
        };
        let eps = 1e-6;
        let scale = 1.0 + grad.amax();
        for i in 0..q.len() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += eps;
            qm[i] -= eps;
            let fd = (energy_at(&qp) - energy_at(&qm)) / (2.0 * eps);
            if (fd - grad[i]).abs() > 1e-5 * scale {
                pass = false;
            }
            let col = (grad_at(&qp) - grad_at(&qm)) / (2.0 * eps);
            let hcol = hess.column(i);
            let hscale = 1.0 + hess.amax();
            for j in 0..q.len() {
                if (col[j] - hcol[j]).abs() > 1e-5 * hscale {
                    pass = false;
                }
            }
        }
    }
    verdict(4, "gradient and hessian match finite differences", pass);
}

#[test]
fn criterion_05_modal_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let mut pass = true;
    for _ in 0..10 {
        let n = rng.gen_range(2..6usize);
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = &g * g.transpose();
        let g2 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let m0 = &g2 * g2.transpose() + 0.5 * DMatrix::identity(n, n);
        let mu = rng.gen_range(0.2..3.0);
        let gamma = rng.gen_range(0.0..3.0);
        let spec = generalized_modes(&h, &m0)
            .unwrap()
            .with_rates(mu, gamma)
            .unwrap();
        for rate in &spec.sigmas {
            let beta = 0.25 * (gamma * gamma - rate.delta) / mu;
            for sigma in [rate.plus, rate.minus] {
                if (mu * sigma * sigma + gamma * sigma + beta).norm() > 1e-10 {
                    pass = false;
                }
            }
        }
        let dx = jacobian_dx(&h, &m0, mu, gamma).unwrap();
        let mut dx_eig: Vec<num_complex::Complex<f64>> =
            dx.complex_eigenvalues().iter().cloned().collect();
        for sigma in spec.sigmas.iter().flat_map(|r| [r.plus, r.minus]) {
            let (best, dist) = dx_eig
                .iter()
                .enumerate()
                .map(|(i, e)| (i, (e - sigma).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if dist > 1e-8 {
                pass = false;
            }
            dx_eig.swap_remove(best);
        }
    }
    verdict(5, "jacobian eigenvalues equal modal rates", pass);
}

#[test]
fn criterion_06_claim2_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    let mut pass = true;
    for _ in 0..20 {
        let n = rng.gen_range(2..8usize);
        let betas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..10.0)).collect();
        let mu = rng.gen_range(0.2..3.0);
        let gamma = rng.gen_range(0.05..3.0);
        let spectrum = ModalSpectrum {
            betas: betas.clone(),
            modes: DMatrix::identity(n, n),
            sigmas: modal_sigmas(&betas, mu, gamma).unwrap(),
        };
        let c = classify_equilibrium(&spectrum, NON_HYPERBOLIC_TOL).unwrap();
        if c.spectral_abscissa >= 0.0 || c.label == EquilibriumLabel::Unstable {
            pass = false;
        }
        let mut flipped = betas;
        flipped[0] = -rng.gen_range(0.01..5.0);
        let spectrum = ModalSpectrum {
            betas: flipped.clone(),
            modes: DMatrix::identity(n, n),
            sigmas: modal_sigmas(&flipped, mu, gamma).unwrap(),
        };
        let c = classify_equilibrium(&spectrum, NON_HYPERBOLIC_TOL).unwrap();
        if c.label != EquilibriumLabel::Unstable || c.spectral_abscissa <= 0.0 {
            pass = false;
        }
    }
    verdict(6, "positive betas stable, negative beta unstable", pass);
}

#[test]
fn criterion_07_dissipation_and_conservation() {
    let mut pass = true;
    // damped: H non-increasing after the first two iterations
    let out = run_bowl(1.0, 0.8, 0.01, 1.0, 2000, 0.0);
    for w in out.trace.records.windows(2).skip(2) {
        let tol = 1e-8 * (1.0 + w[0].hamiltonian.abs());
        if w[1].hamiltonian > w[0].hamiltonian + tol {
            pass = false;
        }
    }
    // conservative: drift over a fixed horizon shrinks >= 1.8x when tau halves
    let horizon = 2.0;
    let drift = |tau: f64| {
        let out = run_bowl(1.0, 0.0, tau, 1.0, (horizon / tau) as usize, 0.0);
        let h0 = out.trace.records[0].hamiltonian;
        out.trace
            .records
            .iter()
            .map(|r| (r.hamiltonian - h0).abs())
            .fold(0.0f64, f64::max)
    };
    let d1 = drift(0.01);
    let d2 = drift(0.005);
    if !(d1 / d2 >= 1.8) {
        pass = false;
    }
    verdict(7, "damped H monotone, conservative drift is O(tau)", pass);
}

#[test]
fn criterion_08_stepper_order() {
    // underdamped oscillator per coordinate: mu x'' + gamma x' + k x = 0
    let (k, gamma, mu, x0): (f64, f64, f64, f64) = (1.0, 0.5, 1.0, 1.0);
    let omega_d = (k / mu - (gamma / (2.0 * mu)).powi(2)).sqrt();
    let exact = |t: f64| {
        (-gamma * t / (2.0 * mu)).exp()
            * (x0 * (omega_d * t).cos() + (gamma * x0 / (2.0 * mu) / omega_d) * (omega_d * t).sin())
    };
    let horizon = 5.0;
    let max_err = |tau: f64| {
        let out = run_bowl(k, gamma, tau, x0, (horizon / tau) as usize, 0.0);
        out.trace
            .records
            .iter()
            .map(|r| (r.free[0] - exact(r.t)).abs())
            .fold(0.0f64, f64::max)
    };
    let e1 = max_err(0.02);
    let e2 = max_err(0.01);
    verdict(8, "trajectory error halves with tau (order >= 1)", e1 / e2 >= 1.8);
}

#[test]
fn criterion_09_critical_damping_fastest() {
    // single mode: beta = k, critical gamma = 2 sqrt(mu k)
    let k = 1.0;
    let gamma_star = 2.0 * (k as f64).sqrt();
    let settle = |gamma: f64| {
        let out = run_bowl(k, gamma, 0.01, 1.0, 100_000, 1e-8);
        assert_eq!(out.stop_reason, StopReason::Criterion);
        out.trace.records.len()
    };
    let at_star = settle(gamma_star);
    let under = settle(gamma_star / 4.0);
    let over = settle(4.0 * gamma_star);
    verdict(
        9,
        "critical damping settles fastest",
        at_star <= under && at_star <= over,
    );
}

#[test]
fn criterion_10_conditioning_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(210);
    let mut pass = true;
    for _ in 0..10 {
        let params = SnakeParams::new(
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.02..0.3),
        )
        .unwrap();
        let topology = if rng.gen_bool(0.5) {
            Topology::OpenFixedEnds
        } else {
            Topology::Closed
        };
        let n_points = rng.gen_range(4..12usize);
        let stiffness = StiffnessSet::build(n_points, topology, &params).unwrap();
        let system = assemble_system(&stiffness, &params).unwrap();
        let d = condition_diagnostics(&system, &stiffness).unwrap();
        let eig = system.a().clone().symmetric_eigen().eigenvalues;
        let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let lmax = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let kappa = lmax / lmin;
        // the bound is an equality for scaled-identity M0, so allow
        // round-off slack relative to kappa itself
        if d.kappa_bound < kappa * (1.0 - 1e-9) {
            pass = false;
        }
    }
    // bound non-increasing in beta (tau decreasing => beta increasing)
    let stiffness = {
        let p = SnakeParams::new(1.0, 0.3, 1.0, 1.0, 0.1).unwrap();
        StiffnessSet::build(8, Topology::OpenFixedEnds, &p).unwrap()
    };
    let mut last = f64::INFINITY;
    for tau in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let p = SnakeParams::new(1.0, 0.3, 1.0, 1.0, tau).unwrap();
        let system = assemble_system(&stiffness, &p).unwrap();
        let d = condition_diagnostics(&system, &stiffness).unwrap();
        if d.kappa_bound > last + 1e-12 {
            pass = false;
        }
        last = d.kappa_bound;
    }
    verdict(10, "condition bound dominates and decreases in beta", pass);
}

#[test]
fn criterion_11_capture_claim() {
    let mut rng = ChaCha8Rng::seed_from_u64(211);
    let mut pass = true;
    let mut done = 0;
    let mut attempts = 0;
    while done < 20 && attempts < 200 {
        attempts += 1;
        let annulus = done % 4 == 3;
        let cx = rng.gen_range(-2.0..2.0);
        let cy = rng.gen_range(-2.0..2.0);
        let strength = rng.gen_range(0.5..2.0);
        let (field, radius) = if annulus {
            let ring = rng.gen_range(0.5..1.0);
            (
                ScalarField::annulus(pt(cx, cy), strength, ring).unwrap(),
                ring + 0.6,
            )
        } else {
            (
                ScalarField::quadratic(pt(cx, cy), strength).unwrap(),
                rng.gen_range(1.0..2.0),
            )
        };
        let region = Region::disk(pt(cx, cy), radius, 256).unwrap();
        let step = default_grid_step(&field, &region);
        let a = certify(&field, &region, 0.0, 0.0, step, 8).unwrap().a;
        let (w1, w2) = suggest_weights(a, 0.3).unwrap();
        let report = certify(&field, &region, w1, w2, step, 8).unwrap();
        if !report.holds {
            continue;
        }
        let params = SnakeParams::new(w1, w2, 1.0, 2.0, 0.02).unwrap();
        let stiffness = StiffnessSet::build(4, Topology::OpenFixedEnds, &params).unwrap();
        let r0 = 0.3 * radius;
        let contour = Contour::new(
            vec![
                pt(cx - r0, cy),
                pt(cx + rng.gen_range(-r0..r0), cy + rng.gen_range(-r0..r0)),
                pt(cx + rng.gen_range(-r0..r0), cy + rng.gen_range(-r0..r0)),
                pt(cx + r0, cy),
            ],
            Topology::OpenFixedEnds,
        )
        .unwrap();
        let stop = StopSpec {
            criterion: StopCriterion::SteadyState,
            epsilon: 1e-13,
            max_iter: 300_000,
        };
        // settle to the in-region equilibrium, then restart from a
        // perturbed state whose certificate holds
        let eq = evolve(
            &contour,
            &DVector::zeros(4),
            &field,
            &stiffness,
            &params,
            &stop,
        )
        .expect("settling run");
        let mut q = eq.contour.free_vector();
        for v in q.iter_mut() {
            *v += rng.gen_range(-0.05..0.05) * radius;
        }
        let start = match eq.contour.with_free_vector(&q) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if start
            .free_indices()
            .any(|i| !region.contains(start.points()[i]))
        {
            continue;
        }
        let v0 = DVector::from_fn(4, |_, _| rng.gen_range(-0.05..0.05));
        let cert = capture_certificate(&start, &v0, &field, &stiffness, &params, &region).unwrap();
        if !cert.holds {
            continue;
        }
        let out = verify_capture(&start, &v0, &field, &stiffness, &params, &region, &stop).unwrap();
        let residual = {
            let m = out.trace.last().unwrap().free.clone();
            let terminal = start.with_free_vector(&m).unwrap();
            equilibrium_residual(&terminal, &field, &stiffness).unwrap()
        };
        if !out.never_exited || residual >= 1e-5 {
            pass = false;
        }
        done += 1;
    }
    if done < 20 {
        pass = false;
    }
    // over-energetic start escapes the region despite starting inside
    let field = ScalarField::quadratic(pt(0.0, 0.0), 1.0).unwrap();
    let region = Region::disk(pt(0.0, 0.0), 2.0, 128).unwrap();
    let params = SnakeParams::new(0.0, 0.0, 1.0, 1e-3, 0.01).unwrap();
    let stiffness = StiffnessSet::build(4, Topology::OpenFixedEnds, &params).unwrap();
    let contour = Contour::new(
        vec![pt(-1.0, 0.0), pt(0.5, 0.0), pt(-0.5, 0.0), pt(1.0, 0.0)],
        Topology::OpenFixedEnds,
    )
    .unwrap();
    let v0 = DVector::from_element(4, 8.0);
    let cert = capture_certificate(&contour, &v0, &field, &stiffness, &params, &region).unwrap();
    if cert.holds {
        pass = false;
    }
    let hot = verify_capture(
        &contour,
        &v0,
        &field,
        &stiffness,
        &params,
        &region,
        &StopSpec {
            criterion: StopCriterion::SteadyState,
            epsilon: 0.0,
            max_iter: 2000,
        },
    )
    .unwrap();
    if hot.never_exited {
        pass = false;
    }
    verdict(11, "capture certificate implies containment", pass);
}

#[test]
fn criterion_12_stopping_criteria() {
    let mut pass = true;
    // converging damped run: both criteria trigger
    let (contour, field, stiffness, params) = bowl(1.0, 2.0, 0.01, 1.0);
    let out = evolve(
        &contour,
        &DVector::zeros(4),
        &field,
        &stiffness,
        &params,
        &StopSpec {
            criterion: StopCriterion::Both,
            epsilon: 1e-9,
            max_iter: 100_000,
        },
    )
    .unwrap();
    if out.stop_reason != StopReason::Criterion {
        pass = false;
    }
    // undamped oscillator: neither criterion fires within the horizon.
    // |delta E1| transiently dips near the energy extrema (~1e-7 at this
    // tau), so the test epsilon sits below that floor.
    let free_run = run_bowl(1.0, 0.0, 0.01, 1.0, 3000, 0.0);
    let eps = 1e-8;
    let first_trigger = |trace: &Trace, support: bool| {
        trace.records.iter().position(|r| {
            let v = if support {
                r.delta_mean_field_energy
            } else {
                r.steady_state_delta
            };
            v < eps
        })
    };
    if first_trigger(&free_run.trace, false).is_some()
        || first_trigger(&free_run.trace, true).is_some()
    {
        pass = false;
    }
    // oscillatory damped run: record the comparative first-trigger
    // iterations (no required ordering)
    let osc = run_bowl(1.0, 0.3, 0.01, 1.0, 20_000, 0.0);
    let ss = first_trigger(&osc.trace, false);
    let sup = first_trigger(&osc.trace, true);
    println!("first trigger: steady-state {ss:?}, steady-support {sup:?}");
    if ss.is_none() || sup.is_none() {
        pass = false;
    }
    verdict(12, "stopping criteria fire only on converging runs", pass);
}
