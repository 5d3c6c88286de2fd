//! Acceptance suite. Each test prints one `[PASS]` or `[FAIL]` line and asserts on it.
//!
//! Run with `cargo test -p eup-core --test acceptance -- --nocapture --test-threads=1`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::Instant;

use eup_core::algebra::IdentityKind;
use eup_core::bell::{
    bell_diagonal, chsh_closed_form, chsh_value, classical_threshold, grid_search_chsh,
    horodecki_bound, mean_x_squared, optimize_settings, positional_factor, random_bell_weights,
    random_state, singlet, standard_settings, OptimizerConfig, PositionalFactors, StateDescriptor,
    ThresholdReport,
};
use eup_core::deformation::{
    jacobi_residual, uncertainty_gap, xp_commutator_residual, DeformationModel,
};
use eup_core::experiments::{run_scenario, Cell, Scenario, ScenarioKind};
use eup_core::spin::{
    angular_algebra_residual, magnetic_coupling_coefficient, transverse_spin_term, Gauge,
};
use eup_core::{gaussian_packet, make_grid, model_from_alpha, verify_deformed_algebra};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {id:>2} {name}: {detail}");
    assert!(passed, "criterion {id} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_tsirelson_reproduction() {
    let start = Instant::now();
    let rho = singlet();
    let trace_path = chsh_value(&rho, &standard_settings(), PositionalFactors::UNDEFORMED);
    let closed = chsh_closed_form(&StateDescriptor::Generic {
        pauli_coeffs: *rho.pauli_coeffs(),
    });
    let elapsed = start.elapsed().as_secs_f64();
    let exact = 2.0 * SQRT_2;
    let passed =
        (closed - exact).abs() <= 1e-12 && (trace_path - exact).abs() <= 1e-10 && elapsed < 1.0;
    verdict(
        1,
        "Tsirelson reproduction",
        passed,
        &format!(
            "closed form {closed:.15}, trace path {trace_path:.15}, 2√2 = {exact:.15}, {elapsed:.3} s"
        ),
    );
}

#[test]
fn criterion_02_closed_form_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let settings = standard_settings();
    let mut worst_generic: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_state(&mut rng);
        let c = rho.pauli_coeffs();
        let oracle = SQRT_2 * (c[1][1] + c[3][3]).abs();
        worst_generic = worst_generic
            .max((chsh_value(&rho, &settings, PositionalFactors::UNDEFORMED) - oracle).abs());
    }
    let mut worst_diagonal: f64 = 0.0;
    for _ in 0..100 {
        let w = random_bell_weights(&mut rng);
        let p = w.weights();
        let oracle = 2.0 * SQRT_2 * (p[2] - p[0]).abs();
        let s = chsh_value(&bell_diagonal(&w), &settings, PositionalFactors::UNDEFORMED);
        worst_diagonal = worst_diagonal.max((s - oracle).abs());
    }
    verdict(
        2,
        "closed-form equivalence",
        worst_generic <= 1e-10 && worst_diagonal <= 1e-10,
        &format!(
            "max deviation {worst_generic:.2e} (generic), {worst_diagonal:.2e} (Bell-diagonal)"
        ),
    );
}

#[test]
fn criterion_03_deformed_bound() {
    let model = model_from_alpha(-1e-4, 1.0).unwrap();
    let alpha = model.alpha();
    let grid = make_grid(1, 1024, 200.0).unwrap();
    let packets = [
        (0.0, 0.5, 5.0, 1.0),
        (2.0, 0.7, 20.0, 1.5),
        (-10.0, 1.0, 40.0, 2.0),
        (30.0, 2.0, -60.0, 3.0),
    ];
    let mut worst_product: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for (ca, wa, cb, wb) in packets {
        let psi_a = gaussian_packet(&grid, &[ca], wa).unwrap();
        let psi_b = gaussian_packet(&grid, &[cb], wb).unwrap();
        let factors = PositionalFactors::from_packets(&model, &psi_a, &psi_b);
        let s = chsh_value(&singlet(), &standard_settings(), factors);
        // Independent oracle: the mean of g is 1 + α⟨x²⟩, with ⟨x²⟩ by direct quadrature.
        let quad = |psi: &eup_core::WaveFunction| -> f64 {
            psi.amplitudes()
                .iter()
                .zip(grid.axis_coordinates())
                .map(|(a, x)| a.norm_sqr() * x * x)
                .sum::<f64>()
                * grid.volume_element()
        };
        let (xa, xb) = (quad(&psi_a), quad(&psi_b));
        let product_form = 2.0 * SQRT_2 * (1.0 + alpha * xa) * (1.0 + alpha * xb);
        worst_product = worst_product.max((s - product_form).abs());
        let linear = 2.0 * SQRT_2 * (1.0 + alpha * (xa + xb));
        let allowed = 3.0 * 2.0 * SQRT_2 * alpha * alpha * xa * xb + 1e-10;
        worst_margin = worst_margin.min(allowed - (s - linear).abs());
        assert!((positional_factor(&model, &psi_a) - (1.0 + alpha * xa)).abs() < 1e-12);
    }
    verdict(
        3,
        "deformed Tsirelson bound",
        worst_product <= 1e-12 && worst_margin >= 0.0,
        &format!("max |S - 2√2 g_A g_B| = {worst_product:.2e}, min first-order margin {worst_margin:.2e}"),
    );
}

fn sweep_scenario() -> Scenario {
    Scenario::from_json(
        r#"{
            "kind": "chsh",
            "model": {"alpha_tilde": -1e-3, "length_scale_m": 1.0},
            "grid": {"dims": 1, "points_per_axis": 512, "extent": 100.0},
            "party_a": {"center": [0.0], "width": 0.5},
            "party_b": {"center": [0.0], "width": 1.0},
            "state": {"kind": "bell", "bell": "psi_minus"},
            "sweep": [{"parameter": "distance_b", "start": 0.0, "stop": 40.0, "steps": 30}],
            "seed": 4
        }"#,
    )
    .unwrap()
}

#[test]
fn criterion_04_classicality_threshold() {
    let distance = match classical_threshold(-1e-52, 1.0).unwrap() {
        ThresholdReport::Threshold { distance_si_m, .. } => distance_si_m,
        ThresholdReport::NoThreshold => f64::NAN,
    };
    let cosmological = (distance / 5.41e25 - 1.0).abs() <= 5e-3 && distance.log10().floor() == 25.0;

    // Sweep: predicted crossing where 2√2 g_A g_B = 2, with ⟨x_B²⟩ = d² + ⟨x_B²⟩ at d = 0.
    let scenario = sweep_scenario();
    let table = run_scenario(&scenario).unwrap();
    let alpha = -1e-3;
    let grid = make_grid(1, 512, 100.0).unwrap();
    let x_a = mean_x_squared(&gaussian_packet(&grid, &[0.0], 0.5).unwrap());
    let x_b0 = mean_x_squared(&gaussian_packet(&grid, &[0.0], 1.0).unwrap());
    let g_a = 1.0 + alpha * x_a;
    let predicted = (((FRAC_1_SQRT_2 / g_a) - 1.0) / alpha - x_b0).sqrt();
    let s = table.numbers("s_value").unwrap();
    let d: Vec<f64> = table
        .column("center_b")
        .unwrap()
        .iter()
        .map(|c| match c {
            Cell::Vector(v) => v[0],
            _ => f64::NAN,
        })
        .collect();
    let step = d[1] - d[0];
    let crossing = s.windows(2).position(|w| w[0] >= 2.0 && w[1] < 2.0);
    let bracketed = crossing.is_some_and(|k| {
        d[k] <= predicted && predicted <= d[k + 1] && d[k + 1] - d[k] <= step + 1e-12
    });
    let bracket = crossing.map_or("none".to_string(), |k| {
        format!("[{:.3}, {:.3}]", d[k], d[k + 1])
    });
    verdict(
        4,
        "classicality threshold",
        cosmological && bracketed,
        &format!(
            "distance {distance:.4e} m (expected 5.41e25 ± 0.5%), sweep bracket {bracket} around predicted {predicted:.3}, step {step:.3}"
        ),
    );
}

#[test]
fn criterion_05_symbolic_algebra() {
    let start = Instant::now();
    let first = verify_deformed_algebra(1).unwrap();
    let first_ok = [
        IdentityKind::PositionMomentum,
        IdentityKind::MomentumMomentum,
        IdentityKind::Jacobi,
    ]
    .into_iter()
    .all(|kind| {
        let mut checks = first.checks_of(kind).peekable();
        checks.peek().is_some() && checks.all(|c| c.residual.is_zero())
    });
    let second = verify_deformed_algebra(2).unwrap();
    let theta = second.theta.clone();
    let closure_ok = second.checks_of(IdentityKind::ThetaClosure).count() == 3
        && second
            .checks_of(IdentityKind::ThetaClosure)
            .all(|c| c.residual.is_zero());
    let magnitude_ok = theta.as_ref().is_some_and(|t| t.magnitude == 4.0);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        5,
        "symbolic algebra",
        first_ok && closure_ok && magnitude_ok && elapsed < 5.0,
        &format!(
            "order-1 residuals zero: {first_ok}, order-2 closure zero: {closure_ok}, theta coefficient {}, {elapsed:.2} s",
            theta.map_or("none".to_string(), |t| format!("{} (|c| = {})", t.coefficient, t.magnitude))
        ),
    );
}

const ROUND_OFF: f64 = 1e-12;

struct GridResiduals {
    xp: f64,
    jacobi: f64,
    so3: f64,
}

fn grid_residuals(model: &DeformationModel, n: usize) -> GridResiduals {
    let grid = make_grid(3, n, 18.0).unwrap();
    let psi = gaussian_packet(&grid, &[1.0, 0.5, -0.5], 0.8).unwrap();
    let mut r = GridResiduals {
        xp: 0.0,
        jacobi: 0.0,
        so3: 0.0,
    };
    for i in 0..3 {
        for j in 0..3 {
            r.xp = r.xp.max(xp_commutator_residual(model, &psi, i, j).unwrap());
        }
    }
    for (i, j, k) in [(0, 1, 0), (0, 1, 2), (1, 2, 1), (0, 2, 2)] {
        r.jacobi = r.jacobi.max(jacobi_residual(model, &psi, i, j, k).unwrap());
    }
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        r.so3 = r
            .so3
            .max(angular_algebra_residual(model, &psi, i, j).unwrap());
    }
    r
}

#[test]
fn criterion_06_grid_algebra() {
    let start = Instant::now();
    let model = model_from_alpha(1e-3, 1.0).unwrap();
    let coarse = grid_residuals(&model, 16);
    let fine = grid_residuals(&model, 32);
    let elapsed = start.elapsed().as_secs_f64();
    // A residual already at round-off on the coarse grid has no discretization error left to remove.
    let drops = |c: f64, f: f64| c >= 10.0 * f || c.max(f) <= ROUND_OFF;
    let passed = fine.xp <= 1e-6
        && fine.jacobi <= 1e-5
        && fine.so3 <= 1e-5
        && drops(coarse.xp, fine.xp)
        && drops(coarse.jacobi, fine.jacobi)
        && drops(coarse.so3, fine.so3)
        && elapsed < 60.0;
    verdict(
        6,
        "grid algebra",
        passed,
        &format!(
            "N=16 -> 32: xp {:.2e} -> {:.2e}, Jacobi {:.2e} -> {:.2e}, SO(3) {:.2e} -> {:.2e}, {elapsed:.1} s",
            coarse.xp, fine.xp, coarse.jacobi, fine.jacobi, coarse.so3, fine.so3
        ),
    );
}

#[test]
fn criterion_07_deformed_uncertainty() {
    let grid = make_grid(3, 32, 19.5).unwrap();
    let family: Vec<(f64, f64)> = (0..20)
        .map(|k| {
            (
                0.75 + 0.25 * (k % 5) as f64 / 4.0,
                1.5 * (k / 5) as f64 / 3.0,
            )
        })
        .collect();
    let mut worst = [f64::INFINITY; 2];
    for (sign_index, alpha) in [1e-3, -1e-3].into_iter().enumerate() {
        let model = model_from_alpha(alpha, 1.0).unwrap();
        for &(width, distance) in &family {
            let psi = gaussian_packet(&grid, &[distance, 0.0, 0.0], width).unwrap();
            for axis in 0..3 {
                worst[sign_index] =
                    worst[sign_index].min(uncertainty_gap(&model, &psi, axis).unwrap());
            }
        }
    }
    let heisenberg = model_from_alpha(0.0, 1.0).unwrap();
    let mut saturation: f64 = 0.0;
    for &(width, distance) in &family {
        let psi = gaussian_packet(&grid, &[distance, 0.0, 0.0], width).unwrap();
        for axis in 0..3 {
            saturation = saturation.max(uncertainty_gap(&heisenberg, &psi, axis).unwrap().abs());
        }
    }
    verdict(
        7,
        "deformed uncertainty relation",
        worst[0] >= -1e-6 && worst[1] >= -1e-6 && saturation <= 1e-6,
        &format!(
            "min gap {:.3e} (alpha = +1e-3), {:.3e} (alpha = -1e-3); max |gap| at alpha = 0: {saturation:.2e}",
            worst[0], worst[1]
        ),
    );
}

#[test]
fn criterion_08_magnetic_coupling() {
    let model = model_from_alpha(1e-3, 1.0).unwrap();
    let report = magnetic_coupling_coefficient(&model, [0.0, 0.0, 1.0], Gauge::Symmetric).unwrap();
    let residual_is_transverse = (&report.spin_residual - &transverse_spin_term()).is_zero();
    verdict(
        8,
        "magnetic-coupling identity",
        report.spin_matches(),
        &format!(
            "spin residual has {} terms (equal to alpha(x^2 sigma.B - (sigma.x)(x.B)): {residual_is_transverse}), orbital residual zero: {}",
            report.spin_residual.len(),
            report.orbital_matches()
        ),
    );
}

#[test]
fn criterion_09_optimizer_vs_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let factors = PositionalFactors::new(0.95, 0.9).unwrap();
    let config = OptimizerConfig {
        seed: 9,
        ..OptimizerConfig::default()
    };
    let mut worst_horodecki: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    for _ in 0..20 {
        let rho = random_state(&mut rng);
        let value = optimize_settings(&rho, factors, &config).unwrap().value;
        // Oracle: 2√(m₁+m₂) g_A g_B from the two largest squared singular values of T.
        let t = rho.correlation_matrix();
        let mut m: Vec<f64> = (t.transpose() * t)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        m.sort_by(|a, b| b.total_cmp(a));
        let oracle = 2.0 * (m[0] + m[1]).sqrt() * factors.product();
        worst_horodecki = worst_horodecki.max((value - oracle).abs());
        assert!((horodecki_bound(&rho, factors) - oracle).abs() < 1e-12);
        worst_grid = worst_grid.max((value - grid_search_chsh(&rho, factors, 24, 3)).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        9,
        "optimizer vs oracle",
        worst_horodecki <= 1e-6 && worst_grid <= 1e-3 && elapsed < 60.0,
        &format!("max deviation {worst_horodecki:.2e} (Horodecki), {worst_grid:.2e} (grid search), {elapsed:.1} s"),
    );
}

#[test]
fn criterion_10_determinism() {
    let mut scenarios: Vec<Scenario> = [
        ScenarioKind::VerifyAlgebra,
        ScenarioKind::UncertaintySweep,
        ScenarioKind::Chsh,
        ScenarioKind::Threshold,
        ScenarioKind::Optimize,
    ]
    .into_iter()
    .map(Scenario::default_for)
    .collect();
    scenarios.push(sweep_scenario());
    scenarios.push(
        Scenario::from_json(
            r#"{"kind": "optimize", "state": {"kind": "random", "count": 5}, "seed": 77}"#,
        )
        .unwrap(),
    );
    let mut identical = 0;
    for scenario in &scenarios {
        let first = run_scenario(scenario).unwrap().to_csv().unwrap();
        let second = run_scenario(scenario).unwrap().to_csv().unwrap();
        if first == second {
            identical += 1;
        }
    }
    verdict(
        10,
        "determinism",
        identical == scenarios.len(),
        &format!(
            "{identical}/{} scenarios byte-identical across two runs",
            scenarios.len()
        ),
    );
}
