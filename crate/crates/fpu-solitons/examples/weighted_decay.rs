//! Exponentially weighted norms are the instruments that see radiation
//! leaving a soliton's neighborhood. Three measurements: the free lattice's
//! weighted semigroup rate against its closed-form bound, the overlap of two
//! separated waves against its tail-product law, and the virial-localized
//! energy of mass placed far from the weight center.

use fpu_solitons::diagnostics::{
    free_decay_bound, interaction_size, linearized_evolve, virial_energy, Background,
};
use fpu_solitons::fit::{exponential_fit, tail};
use fpu_solitons::profile::{c_of_eps, kappa, solve_profile, GridSpec};
use fpu_solitons::weights::{weighted_norm, WeightSpec};
use fpu_solitons::{LatticeField, Potential};

fn main() {
    // Free lattice: the weighted norm around a frame moving at c > 1 decays
    // no slower than exp(-(ca - 2 sinh(a/2)) t).
    let (a, c) = (0.1, 1.01);
    let mut seed = LatticeField::zeros(-200, 1100);
    for n in -30..=30i64 {
        let i = (n + 200) as usize;
        let y = n as f64;
        seed.r[i] = (-y * y / 50.0).exp();
        seed.p[i] = 0.5 * (-y * y / 50.0).exp();
    }
    let obs: Vec<f64> = (0..=40).map(|k| 20.0 * k as f64).collect();
    let run = free_run(&seed, &obs);
    let norms: Vec<f64> = run
        .times
        .iter()
        .zip(&run.states)
        .map(|(t, s)| weighted_norm(s, &WeightSpec::x_norm(a, c * t)))
        .collect();
    let f = exponential_fit(&tail(&run.times, 20), &tail(&norms, 20)).expect("fit");
    println!("free lattice, a = {a}, frame speed {c}:");
    println!("  measured decay rate {:.4e}", -f.slope);
    println!("  closed-form bound   {:.4e}", free_decay_bound(c, a));

    // Interaction size: the l1 overlap of two waves decays in their
    // separation like the product of facing tails, rate 2 kappa(c_1).
    let pot = Potential::toda_normalized();
    let grid = GridSpec::default();
    let w1 = solve_profile(c_of_eps(0.15), &pot, &grid).expect("profile");
    let w2 = solve_profile(c_of_eps(0.30), &pot, &grid).expect("profile");
    let seps = [25.0, 35.0, 45.0, 55.0];
    let overlaps: Vec<f64> = seps
        .iter()
        .map(|&s| interaction_size(&w1.u, &w2.u, s).0)
        .collect();
    let fit = exponential_fit(&seps.to_vec(), &overlaps).expect("fit");
    println!();
    println!("wave-pair overlap vs separation:");
    for (s, o) in seps.iter().zip(&overlaps) {
        println!("  sep {s:>4}: l1 overlap {o:.4e}");
    }
    println!(
        "  fitted rate {:.5} vs 2 kappa(c_1) = {:.5}",
        -fit.slope,
        2.0 * kappa(c_of_eps(0.15))
    );

    // Virial weight: energy localized to the right of a center barely sees
    // mass far on its left.
    let mut v = LatticeField::zeros(-100, 100);
    for i in 0..v.len() {
        let y = (v.lo() + i as i64) as f64 + 60.0;
        v.r[i] = (-y * y / 30.0).exp();
    }
    println!();
    println!("virial energy of mass at -60 under weights centered at x0:");
    for x0 in [-60.0, 0.0, 40.0] {
        println!(
            "  x0 = {x0:>5}: {:.4e}",
            virial_energy(&v, 0.2, x0)
        );
    }
}

fn free_run(
    seed: &LatticeField,
    obs: &[f64],
) -> fpu_solitons::diagnostics::LinearizedRun {
    linearized_evolve(
        &Background::Zero,
        &Potential::Quadratic,
        seed,
        0.0,
        *obs.last().unwrap(),
        0.01,
        obs,
        None,
    )
    .expect("free linearized run")
}
