//! Acceptance gate: ten numbered end-to-end checks, one printed verdict line
//! each. The expensive two-wave constructions are shared through lazy
//! fixtures; tests are ordered so the cheap oracle checks come first.
//!
//! Two constructed states appear. The wide-gap pair (scaled separation L = 5)
//! drives the Cauchy-convergence and schedule-independence checks, where the
//! final increments must sink below 1e-5. The standard-gap state (L = 2.5)
//! drives forward validation and modulation tracking, where the deviation
//! signal has to sit well above the construction floor to be measurable.

use std::time::Instant;

use fpu_solitons::diagnostics::{
    free_decay_bound, interaction_size, linearized_evolve, Background,
};
use fpu_solitons::fit::{exponential_fit, tail, LineFit};
use fpu_solitons::integrate::integrate;
use fpu_solitons::modulation::{decompose, track, DecomposeOptions};
use fpu_solitons::ops::{pairing, row_sums};
use fpu_solitons::profile::{c_of_eps, kappa, solve_profile, GridSpec, ProfileFamily};
use fpu_solitons::shooting::{construct_limit, validate_forward, SolitonParameters};
use fpu_solitons::toda::TodaSoliton;
use fpu_solitons::weights::weighted_norm;
use fpu_solitons::weights::WeightSpec;
use fpu_solitons::{LatticeField, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::LazyLock;

const EPS: f64 = 0.15;
const C1: f64 = 1.00375; // 1 + (1 * EPS)^2 / 6
const C2: f64 = 1.015; // 1 + (2 * EPS)^2 / 6
const SIGMA_EPS2: f64 = 0.005625; // (C2 - C1) / 2

static POT: LazyLock<Potential> = LazyLock::new(Potential::toda_normalized);

static FAMILY: LazyLock<ProfileFamily> = LazyLock::new(|| {
    ProfileFamily::build(&POT, 1.0025, 1.025, 10, &GridSpec::default())
        .expect("two-wave speed family")
});

/// Wide-gap parameters: scaled separation L = 5, so the terminal-time
/// schedule reaches final Cauchy increments below 1e-5 inside a desk-scale
/// run.
static PARAMS_WIDE: LazyLock<SolitonParameters> = LazyLock::new(|| {
    SolitonParameters::with_limits(EPS, vec![1.0, 2.0], vec![0.0, 5.0 / EPS], 2.5, 0.2)
        .expect("wide-gap parameters")
});

/// Standard-gap parameters: L = 2.5, where the forward deviation and the
/// speed drift are large enough to fit cleanly.
static PARAMS_MAIN: LazyLock<SolitonParameters> = LazyLock::new(|| {
    SolitonParameters::with_limits(EPS, vec![1.0, 2.0], vec![0.0, 2.5 / EPS], 2.5, 0.2)
        .expect("standard-gap parameters")
});

static CONSTRUCT_WIDE: LazyLock<(LatticeField, fpu_solitons::shooting::CauchyReport)> =
    LazyLock::new(|| {
        construct_limit(
            &PARAMS_WIDE,
            &FAMILY,
            0.0,
            &[300.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0],
            0.0,
            2e-4,
        )
        .expect("wide-gap construction")
    });

static CONSTRUCT_ALT: LazyLock<(LatticeField, fpu_solitons::shooting::CauchyReport)> =
    LazyLock::new(|| {
        construct_limit(
            &PARAMS_WIDE,
            &FAMILY,
            0.0,
            &[450.0, 750.0, 1050.0, 1350.0],
            0.0,
            2e-4,
        )
        .expect("alternate-schedule construction")
    });

static CONSTRUCT_MAIN: LazyLock<(LatticeField, fpu_solitons::shooting::CauchyReport)> =
    LazyLock::new(|| {
        construct_limit(
            &PARAMS_MAIN,
            &FAMILY,
            0.0,
            &[250.0, 500.0, 750.0, 1000.0, 1250.0],
            0.0,
            1e-3,
        )
        .expect("standard-gap construction")
    });

/// Prints the one verdict line for a criterion and hands the flag back for
/// the assert.
fn verdict(id: u32, what: &str, pass: bool, detail: &str) -> bool {
    println!(
        "acceptance {id:02} {what}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn fit_summary(f: &LineFit) -> String {
    format!("slope {:+.4e}, R^2 {:.4}", f.slope, f.r_squared)
}

#[test]
fn a01_self_pairing_matches_row_sum_product() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.gen_range(5..40);
        let lo = rng.gen_range(-20..0);
        let r: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let p: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let u = LatticeField::from_rows(lo, r, p).expect("random field");
        let (sr, sp) = row_sums(&u);
        let got = pairing(&u, &u).expect("self pairing");
        worst = worst.max((got + sr * sp).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 1.0;
    let detail = format!("worst |<u,J^-1 u> + (sum r)(sum p)| = {worst:.3e}, {secs:.3} s");
    assert!(
        verdict(1, "self-pairing identity on 100 random fields", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a02_integrator_reproduces_exact_single_wave() {
    // kappa(1.004): an exact exponential-chain wave at c ~ 1.004.
    let kap = kappa(1.004);
    let wave = TodaSoliton::new(kap, 0.0).expect("exact wave");
    let (lo, hi) = (-140, 200);
    let u0 = wave.state(0.0, lo, hi);
    let obs = [50.0];
    let traj = integrate(&u0, &POT, 0.0, 50.0, 1e-3, &obs).expect("propagation");
    let err = traj
        .final_state()
        .sub(&wave.state(50.0, lo, hi))
        .expect("same window")
        .l2_norm();
    let drift = traj.max_drift();
    let pass = err <= 1e-6 && drift <= 1e-8;
    let detail = format!("l2 error {err:.3e} (<= 1e-6), relative energy drift {drift:.3e} (<= 1e-8)");
    assert!(
        verdict(2, "integrator vs closed-form wave to t = 50", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a03_profile_solver_accuracy() {
    let grid = GridSpec::default();
    // Residuals of the traveling-wave system at both construction speeds.
    let p1 = solve_profile(C1, &POT, &grid).expect("slow profile");
    let p2 = solve_profile(C2, &POT, &grid).expect("fast profile");
    let res = p1.residual.max(p2.residual);

    // Closed form for the exponential chain at kappa = 0.25.
    let k = 0.25f64;
    let prof = solve_profile(k.sinh() / k, &POT, &grid).expect("closed-form speed");
    let sech = |x: f64| 1.0 / x.cosh();
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut sup = 0.0f64;
    for j in 0..prof.u.a.len() {
        let x = prof.u.x0 + j as f64 * prof.u.h;
        let r_exact = 6.0 * (1.0 + (k.sinh() * sech(k * x)).powi(2)).ln();
        let p_exact = 12.0 * k.sinh() * (sigmoid(-2.0 * k * x) - sigmoid(-2.0 * k * (x - 1.0)));
        sup = sup
            .max((prof.u.a[j] - r_exact).abs())
            .max((prof.u.b[j] - p_exact).abs());
    }

    // Continuum-limit error shrinks like eps^2: the 0.1-vs-0.2 ratio sits in
    // the quadratic band.
    let e_small = solve_profile(c_of_eps(0.1), &POT, &grid)
        .expect("eps 0.1")
        .kdv_limit_error();
    let e_large = solve_profile(c_of_eps(0.2), &POT, &grid)
        .expect("eps 0.2")
        .kdv_limit_error();
    let ratio = e_small / e_large;

    let pass = res <= 1e-10 && sup <= 1e-8 && (0.15..=0.4).contains(&ratio);
    let detail = format!(
        "residual {res:.3e} (<= 1e-10), closed-form sup gap {sup:.3e} (<= 1e-8), \
         limit-error ratio {ratio:.3} (in [0.15, 0.4])"
    );
    assert!(
        verdict(3, "profile residual, closed form, limit-error ratio", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a04_profile_scaling_laws() {
    let grid = GridSpec::default();
    let norm_and_ratio = |eps: f64| {
        let prof = solve_profile(c_of_eps(eps), &POT, &grid).expect("profile");
        let half = (40.0 / (2.0 * prof.kappa)).ceil() as i64;
        let u = prof.sample(-half, half, 0.0);
        let du = prof.sample_dx(-half, half, 0.0);
        (u.l2_norm(), du.l2_norm() / u.l2_norm())
    };
    let (n_small, d_small) = norm_and_ratio(0.1);
    let (n_large, d_large) = norm_and_ratio(0.2);
    let norm_ratio = n_large / n_small;
    let target = 2.0f64.powf(1.5);
    let norm_ok = (norm_ratio / target - 1.0).abs() <= 0.15;
    let deriv_ok = (d_small / 0.1 >= 1.0 / 3.0 && d_small / 0.1 <= 3.0)
        && (d_large / 0.2 >= 1.0 / 3.0 && d_large / 0.2 <= 3.0);
    let pass = norm_ok && deriv_ok;
    let detail = format!(
        "l2 ratio {norm_ratio:.4} vs 2^1.5 = {target:.4} (within 15%), \
         derivative/norm = {d_small:.4} at eps 0.1 and {d_large:.4} at eps 0.2 \
         (each within 3x of eps)"
    );
    assert!(
        verdict(4, "wave norm and derivative scaling in eps", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a05_backward_construction_cauchy_convergence() {
    let (_, report) = &*CONSTRUCT_WIDE;
    let decreasing = report.deltas.windows(2).all(|w| w[1] < w[0]);
    let final_delta = *report.deltas.last().expect("increments");
    // Log-linear fit of the increments against terminal time.
    let abscissa = &report.ns[..report.deltas.len()];
    let f = exponential_fit(abscissa, &report.deltas).expect("increment fit");
    let target = 0.5 * EPS * SIGMA_EPS2; // claimed increment rate per unit terminal time
    let band = (0.5 * target, 1.5 * target);
    let slope_ok = f.slope < 0.0 && (-f.slope >= band.0 && -f.slope <= band.1);
    let pass = decreasing && f.slope < 0.0 && slope_ok && final_delta <= 1e-5;
    let detail = format!(
        "increments decreasing: {decreasing}; {}; measured rate {:.3e} vs claimed band \
         [{:.3e}, {:.3e}]; final increment {final_delta:.3e} (<= 1e-5)",
        fit_summary(&f),
        -f.slope,
        band.0,
        band.1
    );
    assert!(
        verdict(5, "two-wave backward construction converges", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a06_forward_deviation_decay() {
    let (limit, _) = &*CONSTRUCT_MAIN;
    let report = validate_forward(limit, &PARAMS_MAIN, &FAMILY, 0.0, 450.0, 1e-3, 30.0)
        .expect("forward validation");
    let beta = report.beta.expect("two waves fit a rate");
    let f = report.fit.as_ref().expect("fit present");
    let scaled_end = report.errors.last().unwrap() / EPS.powf(1.5);
    let pass = beta > 0.0 && f.r_squared >= 0.9 && (1e-2..=1e2).contains(&scaled_end);
    let detail = format!(
        "beta {beta:.3} (> 0), R^2 {:.4} (>= 0.9), e(T)/eps^1.5 = {scaled_end:.3} (in [1e-2, 1e2])",
        f.r_squared
    );
    assert!(
        verdict(6, "forward deviation decays exponentially", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a07_parameter_recovery_and_speed_convergence() {
    // Exact two-wave sum: parameters must come back to 1e-8 with
    // orthogonality residuals at the solver tolerance.
    let (cs, xs) = (vec![C1, C2], vec![3.2, 24.7]);
    let (lo, hi) = (-100, 160);
    let mut u = LatticeField::zeros(lo, hi);
    for (c, x) in cs.iter().zip(&xs) {
        let ip = FAMILY.interp_at(*c).expect("inside family");
        u.add_scaled(&ip.u.sample(lo, hi, *x), 1.0).expect("window");
    }
    let opts = DecomposeOptions::default();
    let state = decompose(&u, &[C1 + 2e-4, C2 - 2e-4], &[3.0, 24.9], &FAMILY, &opts)
        .expect("decomposition");
    let param_err = state
        .c
        .iter()
        .zip(&cs)
        .map(|(a, b)| (a - b).abs())
        .chain(state.x.iter().zip(&xs).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    let orth_rel = state.max_orth_residual() / u.l2_norm();
    let recovery_ok = param_err <= 1e-8 && orth_rel <= 1e-9;

    // Constructed state: tracked speeds approach the terminal speeds
    // exponentially in the separation schedule.
    let (limit, _) = &*CONSTRUCT_MAIN;
    let obs: Vec<f64> = (0..=15).map(|j| 30.0 * j as f64).collect();
    let traj = integrate(limit, &POT, 0.0, 450.0, 1e-3, &obs).expect("forward run");
    let series = track(
        &traj,
        &PARAMS_MAIN.speeds(),
        &PARAMS_MAIN.gamma,
        &FAMILY,
        &opts,
    )
    .expect("tracked decomposition");
    let d_of_t: Vec<f64> = series
        .times()
        .iter()
        .map(|t| SIGMA_EPS2 * t + 2.5 / EPS)
        .collect();
    let mut drift_ok = true;
    let mut drift_detail = String::new();
    for i in 0..2 {
        let devs: Vec<f64> = series
            .speeds(i)
            .iter()
            .map(|c| (c - PARAMS_MAIN.speed(i)).abs())
            .collect();
        let f = exponential_fit(&d_of_t, &devs).expect("speed-drift fit");
        drift_ok &= f.slope < 0.0 && f.r_squared >= 0.8;
        drift_detail.push_str(&format!(" wave {i}: {};", fit_summary(&f)));
    }
    let pass = recovery_ok && drift_ok;
    let detail = format!(
        "recovery error {param_err:.3e} (<= 1e-8), orthogonality {orth_rel:.3e} (<= 1e-9); \
         speed drift vs separation:{drift_detail}"
    );
    assert!(
        verdict(7, "modulation recovery and speed convergence", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a08_two_wave_overlap_law() {
    let grid = GridSpec::default();
    let seps = [25.0, 35.0, 45.0, 55.0];
    let fit_at = |eps: f64| -> LineFit {
        let p1 = solve_profile(1.0 + eps * eps / 6.0, &POT, &grid).expect("slow wave");
        let p2 = solve_profile(1.0 + 4.0 * eps * eps / 6.0, &POT, &grid).expect("fast wave");
        let l1s: Vec<f64> = seps
            .iter()
            .map(|&s| interaction_size(&p1.u, &p2.u, s).0)
            .collect();
        exponential_fit(&seps, &l1s).expect("overlap fit")
    };
    let f = fit_at(EPS);
    let slope_ok = (-f.slope / EPS - 1.0).abs() <= 0.2;

    // Prefactor scaling: intercepts of the same fit at eps and 2 eps should
    // differ by the cube of the scale factor.
    let f_small = fit_at(0.1);
    let f_large = fit_at(0.2);
    let prefactor_ratio = (f_large.intercept - f_small.intercept).exp();
    let prefactor_ok = (0.5..=1.5).contains(&(prefactor_ratio / 8.0));

    let pass = slope_ok && prefactor_ok;
    let detail = format!(
        "overlap rate {:.4} vs k1 eps = {EPS} (within 20%), R^2 {:.4}; \
         prefactor ratio {prefactor_ratio:.3} vs 8 (within 50%)",
        -f.slope, f.r_squared
    );
    assert!(
        verdict(8, "two-wave overlap decay law", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a09_free_weighted_decay_bound() {
    let (a, c) = (0.1, 1.01);
    let mut seed = LatticeField::zeros(-200, 1100);
    for n in -30..=30i64 {
        let i = (n + 200) as usize;
        let g = (-(n as f64) * (n as f64) / 50.0).exp();
        seed.r[i] = g;
        seed.p[i] = 0.5 * g;
    }
    let obs: Vec<f64> = (0..=40).map(|k| 20.0 * k as f64).collect();
    let run = linearized_evolve(
        &Background::Zero,
        &Potential::Quadratic,
        &seed,
        0.0,
        *obs.last().unwrap(),
        0.01,
        &obs,
        None,
    )
    .expect("free run");
    let norms: Vec<f64> = run
        .times
        .iter()
        .zip(&run.states)
        .map(|(t, s)| weighted_norm(s, &WeightSpec::x_norm(a, c * t)))
        .collect();
    let f = exponential_fit(&tail(&run.times, 20), &tail(&norms, 20)).expect("rate fit");
    let rate = -f.slope;
    let bound = free_decay_bound(c, a);
    let pass = rate <= bound + 1e-3;
    let detail =
        format!("measured rate {rate:.4e} vs floor {bound:.4e} (within +1e-3 of the floor)");
    assert!(
        verdict(9, "free weighted decay near its closed-form rate", pass, &detail),
        "{detail}"
    );
}

#[test]
fn a10_schedule_independence() {
    let (limit_a, report_a) = &*CONSTRUCT_WIDE;
    let (limit_b, report_b) = &*CONSTRUCT_ALT;
    let inc_a = *report_a.deltas.last().expect("increments");
    let inc_b = *report_b.deltas.last().expect("increments");
    // Compare on the common window.
    let lo = limit_a.lo().max(limit_b.lo());
    let hi = limit_a.hi().min(limit_b.hi());
    let diff = limit_a
        .embed(lo, hi)
        .sub(&limit_b.embed(lo, hi))
        .expect("common window")
        .l2_norm();
    let budget = 3.0 * inc_a.max(inc_b);
    let pass = diff <= budget;
    let detail = format!(
        "limits differ by {diff:.3e} vs 3 x max final increment = {budget:.3e}"
    );
    assert!(
        verdict(10, "independent schedules land on one limit", pass, &detail),
        "{detail}"
    );
}
