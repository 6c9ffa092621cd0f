//! Acceptance criteria, one test and one PASS/FAIL line each.

use hydrolim::elliptic::{check_kernel_bounds, KernelBoundConfig};
use hydrolim::gevrey::lemmas::{check_commutator_inequalities, check_product_inequality, CommutatorParams, Sampling};
use hydrolim::gevrey::{apply_multiplier, n_of_eps, subadditivity_defect, GevreyParams};
use hydrolim::harness::{
    eigenfunction_error, energy_identity, exactness_error, kernel_collocation_gap, lift_oracle, run, RunConfig, RunSummary,
};
use hydrolim::{Grid, GridSpec, SpectralField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

/// Written to the stdout handle directly so the line survives test output capture.
fn report(criterion: u32, passed: bool, detail: String) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    writeln!(std::io::stdout().lock(), "criterion {criterion}: {verdict} {detail}").unwrap();
}

/// The reference sweep, run once and shared by criteria 1 and 7.
fn sweep() -> &'static (RunSummary, Duration) {
    static SWEEP: OnceLock<(RunSummary, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::default();
        assert_eq!(config.numerics.nx, 32);
        assert_eq!(config.numerics.ny, 64);
        assert_eq!((config.numerics.t_end, config.numerics.dt), (0.25, 2.5e-4));
        assert_eq!((config.data.c0, config.data.a, config.data.delta0), (1.0, 0.1, 0.2));
        assert_eq!((config.gevrey.sigma, config.gevrey.tau0, config.gevrey.beta), (1.0, 0.5, 4.0));
        let start = Instant::now();
        let summary = run(&config, dir.path(), 3).unwrap();
        (summary, start.elapsed())
    })
}

#[test]
fn criterion_1_convergence_rate() {
    let (summary, elapsed) = sweep();
    assert_eq!(summary.epsilons, vec![0.2, 0.1, 0.05]);
    let fit = summary.rate_fit.as_ref().unwrap();
    let passed = fit.l2.slope >= 1.8 && fit.linf.slope >= 1.7 && elapsed.as_secs() <= 15 * 60;
    report(
        1,
        passed,
        format!("L2 slope {:.4} (>= 1.8), Linf slope {:.4} (>= 1.7), {:.0} s", fit.l2.slope, fit.linf.slope, elapsed.as_secs_f64()),
    );
    assert!(passed);
}

#[test]
fn criterion_2_exactness_oracle() {
    let worst = exactness_error(32, 64, &[0.2, 0.1, 0.05], 2.5e-4, 1000).unwrap();
    let passed = worst <= 1e-8;
    report(2, passed, format!("sup_t |u_eps - u_p| = {worst:.3e} (<= 1e-8)"));
    assert!(passed);
}

#[test]
fn criterion_3_elliptic() {
    let eig = eigenfunction_error(&[0.1, 0.01], 16, 48).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gap = kernel_collocation_gap(&[0.1, 0.01], 50, 48, &mut rng).unwrap();
    let passed = eig <= 1e-9 && gap <= 1e-8;
    report(3, passed, format!("eigenfunction {eig:.3e} (<= 1e-9), kernel vs collocation {gap:.3e} (<= 1e-8)"));
    assert!(passed);
}

#[test]
fn criterion_4_kernel_bounds() {
    let config = KernelBoundConfig::default();
    assert_eq!(config.epsilons, vec![0.2, 0.1, 0.05, 0.01]);
    assert_eq!(config.k_max, 256);
    let r = check_kernel_bounds(&config);
    let constant = r.value_constant.max(r.derivative_constant);
    let spread = r.value_spread.max(r.derivative_spread);
    let passed = constant <= 4.0 && spread <= 0.1;
    report(
        4,
        passed,
        format!(
            "constant {constant:.3} (<= 4), spread {spread:.3} (<= 0.1); values {:.3}/{:.3}, derivatives {:.3}/{:.3}",
            r.value_constant, r.value_spread, r.derivative_constant, r.derivative_spread
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_5_boundary_layer() {
    let (closed, doubling) = lift_oracle(1000).unwrap();
    let passed = closed <= 1e-6 && doubling <= 1e-8;
    report(5, passed, format!("closed form {closed:.3e} (<= 1e-6), doubling {doubling:.3e} (<= 1e-8)"));
    assert!(passed);
}

/// Sampled maxima recorded with seed 20240531, 100 trials.
const PINNED_RATIOS: [(&str, f64); 6] = [
    ("gevrey_product", 0.47688922993184196),
    ("gevrey_product_high", 0.47688946986638353),
    ("sobolev_commutator", 0.22694861583320178),
    ("cutoff_commutator", 0.047777966691473515),
    ("multiplier_commutator", 0.051182523561931675),
    ("multiplier_cutoff_commutator", 0.05120037851222341),
];

fn lemma_ratios() -> Vec<(String, f64)> {
    let sampling = Sampling::default();
    assert_eq!(sampling.trials, 100);
    let n = n_of_eps(0.5, sampling.sigma).unwrap() as f64;
    let mut reports = check_product_inequality(3.0, 1.0, n, &sampling);
    reports.extend(check_commutator_inequalities(&CommutatorParams::default(), &sampling));
    reports.into_iter().map(|r| (r.lemma, r.max_ratio)).collect()
}

#[test]
fn criterion_6_gevrey_calculus() {
    let params = GevreyParams::new(1.0, 0.5, 4.0);
    let defect = subadditivity_defect(128, &[0.0, 0.05, 0.1, 0.25], &params);
    let g = Grid::new(GridSpec::new(32, 32)).unwrap();
    let f = SpectralField::from_fn(&g, |x, y| ((2.0 * x).sin() + (5.0 * x).cos()) * y * (1.0 - y) + 0.3 * y);
    let back = apply_multiplier(&apply_multiplier(&f, 0.1, &params, 1).unwrap(), 0.1, &params, -1).unwrap();
    let round = back.max_diff(&f) / f.max_abs();
    let ratios = lemma_ratios();
    let repeat = lemma_ratios();
    let finite = ratios.iter().all(|(_, r)| r.is_finite());
    let stable = ratios == repeat
        && ratios.len() == PINNED_RATIOS.len()
        && ratios.iter().zip(PINNED_RATIOS).all(|((name, r), (pin_name, pin))| name == pin_name && (r - pin).abs() <= 1e-9 * pin.abs());
    let passed = defect <= 0.0 && round <= 1e-12 && finite && stable;
    let listing: Vec<String> = ratios.iter().map(|(n, r)| format!("{n}={r:?}")).collect();
    report(
        6,
        passed,
        format!("subadditivity defect {defect:.3e} (<= 0), round trip {round:.3e} (<= 1e-12), ratios {}", listing.join(", ")),
    );
    assert!(passed);
}

#[test]
fn criterion_7_bootstrap_band() {
    let (summary, _) = sweep();
    let ratios: Vec<f64> = summary.reports.iter().map(|r| r.bootstrap_ratio).collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let passed = lo > 0.0 && hi / lo <= 4.0;
    report(7, passed, format!("ratios {ratios:?}, band {:.4} (<= 4)", hi / lo));
    assert!(passed);
}

#[test]
fn criterion_8_energy_identity() {
    let mut worst = 0.0f64;
    let mut order = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05] {
        let (budget, o) = energy_identity(32, 32, eps, 0.1, 2e-3).unwrap();
        worst = worst.max(budget);
        order = order.min(o);
    }
    let passed = worst <= 1e-8 && order >= 1.9;
    report(8, passed, format!("budget residual {worst:.3e} per unit time (<= 1e-8), observed order {order:.4} (>= 1.9)"));
    assert!(passed);
}
