use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srblab::permsample::{partition_weight, partitions, sample_partition, z_linear, z_log, PartitionSampler};
use srblab::thermo::{
    free_energy, free_energy_closed_form, mass, minimizer_p_star, rate_i, rate_j, solve_c, Regime, ThermoInput,
};
use srblab::RngSpec;

fn free5(k: usize) -> ThermoInput {
    ThermoInput::free_gas(5, 1.0, k).unwrap()
}

/// A random point of `{p >= 0, Σ k p_k <= rho}`.
fn random_feasible(rng: &mut ChaCha8Rng, k: usize, rho: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(4)).collect();
    let scale = rho * rng.random::<f64>() / mass(&raw);
    raw.iter().map(|x| x * scale).collect()
}

#[test]
fn rate_i_is_convex() {
    let input = free5(30);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let p = random_feasible(&mut rng, 30, 0.01);
        let q = random_feasible(&mut rng, 30, 0.01);
        let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a + b) / 2.0).collect();
        let lhs = rate_i(&mid, &input.gamma).unwrap();
        let rhs = (rate_i(&p, &input.gamma).unwrap() + rate_i(&q, &input.gamma).unwrap()) / 2.0;
        assert!(lhs <= rhs + 1e-12);
    }
}

#[test]
fn tilt_solves_the_defining_equation() {
    let input = free5(400);
    let rc = input.critical_density();
    let rho = rc / 2.0;
    let sol = solve_c(rho, &input, 1e-14).unwrap();
    let direct: f64 = (1..=400)
        .map(|k| (-sol.c * k as f64).exp() * (2.0 * PI * k as f64).powf(-2.5))
        .sum();
    assert!((direct - rho).abs() < 1e-13);
    assert_eq!(sol.regime, Regime::Subcritical);
    assert!(solve_c(rc, &input, 1e-14).unwrap().c.abs() < 1e-12);
}

#[test]
fn minimizer_beats_random_feasible_points() {
    let input = free5(60);
    let rc = input.critical_density();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for rho in [0.4 * rc, 1.7 * rc] {
        let (f, _) = free_energy_closed_form(rho, &input, 1e-14).unwrap();
        let (p_star, _) = minimizer_p_star(rho, &input, 1e-14).unwrap();
        let j_star = rate_j(&p_star, rho, &input, f).unwrap();
        assert!(j_star.abs() < 1e-10, "{j_star}");
        for _ in 0..1000 {
            // Multiplicative perturbations of p*, pushed back into the set.
            let mut p: Vec<f64> = p_star.iter().map(|x| x * (1.0 + 0.3 * (rng.random::<f64>() - 0.5))).collect();
            let m = mass(&p);
            if m > rho {
                p.iter_mut().for_each(|x| *x *= rho / m);
            }
            let j = rate_j(&p, rho, &input, f).unwrap();
            assert!(j >= -1e-10 && j_star <= j + 1e-10);
        }
        for _ in 0..200 {
            let p = random_feasible(&mut rng, 60, rho);
            assert!(rate_j(&p, rho, &input, f).unwrap() >= -1e-10);
        }
    }
}

#[test]
fn supercritical_minimizer_does_not_depend_on_density() {
    let input = free5(100);
    let rc = input.critical_density();
    let (a, sa) = minimizer_p_star(1.5 * rc, &input, 1e-14).unwrap();
    let (b, _) = minimizer_p_star(4.0 * rc, &input, 1e-14).unwrap();
    assert_eq!(sa.regime, Regime::Condensate);
    assert_eq!(a, b);
}

#[test]
fn supercritical_slope_is_log_lambda() {
    // Γ_k = 1.2^{-k} (2πk)^{-5/2} with λ = 1.2 keeps Σ λ^k Γ_k finite.
    let lambda = 1.2f64;
    let gamma: Vec<f64> = (1..=200)
        .map(|k| lambda.powi(-k) * (2.0 * PI * k as f64).powf(-2.5))
        .collect();
    let input = ThermoInput::new(gamma, lambda).unwrap();
    let rc = input.critical_density();
    let f = |r: f64| free_energy_closed_form(r, &input, 1e-14).unwrap().0;
    let h = 0.1 * rc;
    let slope = (f(3.0 * rc + h) - f(3.0 * rc - h)) / (2.0 * h);
    assert!((slope - lambda.ln()).abs() < 1e-9, "{slope}");
    let fe = free_energy(3.0 * rc, &input, 1e-14).unwrap();
    assert!(fe.gap < 1e-6);
}

#[test]
fn tiny_density_has_tiny_free_energy() {
    let (f, _) = free_energy_closed_form(1e-6, &free5(400), 1e-16).unwrap();
    assert!(f.abs() < 1e-4);
}

#[test]
fn unit_gamma_over_k_gives_minus_sum() {
    let g = free5(20).gamma;
    let p: Vec<f64> = g.iter().enumerate().map(|(i, x)| x / (i + 1) as f64).collect();
    let expect: f64 = -p.iter().sum::<f64>();
    assert!((rate_i(&p, &g).unwrap() - expect).abs() < 1e-15);
    assert_eq!(rate_i(&[0.0; 5], &g).unwrap(), 0.0);
}

#[test]
fn constant_weights_give_rising_factorial_by_enumeration() {
    for theta in [0.5, 1.0, 3.0] {
        let w = [theta; 8];
        let z = z_linear(&w, 8).unwrap().unwrap();
        for n in 1..=8 {
            let enumerated: f64 = partitions(n).iter().map(|p| partition_weight(&w, p)).sum();
            let rising: f64 = (0..n).map(|i| theta + i as f64).product::<f64>()
                / (1..=n).map(|i| i as f64).product::<f64>();
            assert!((enumerated - rising).abs() < 1e-12 * rising);
            assert!((z[n] - rising).abs() < 1e-12 * rising);
        }
    }
}

#[test]
fn log_recursion_matches_enumeration() {
    let theta = [2.0, 0.1, 5.0, 0.7, 1.3, 9.0, 0.2];
    let lz = z_log(&theta, 7).unwrap();
    for n in 1..=7 {
        let enumerated: f64 = partitions(n).iter().map(|p| partition_weight(&theta, p)).sum();
        assert!((lz[n] - enumerated.ln()).abs() < 1e-12);
    }
}

#[test]
fn single_element_and_exact_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(sample_partition(&[4.2], 1, &mut rng).unwrap().dense(), vec![1]);
    let theta: Vec<f64> = (1..=40).map(|k| 30.0 / k as f64).collect();
    let volume = 17.0;
    for s in PartitionSampler::new(&theta, 40).unwrap().sample_many(200, &RngSpec::new(1)) {
        let m: usize = s.dense().iter().enumerate().map(|(i, l)| (i + 1) * *l as usize).sum();
        assert_eq!(m as f64 / volume, 40.0 / volume);
    }
}

#[test]
fn first_removed_cycle_follows_its_law() {
    // P(the cycle through a fixed element has length k) = θ_k Z_{N-k} / (N Z_N)
    let theta = [1.5, 0.4, 2.0, 0.9, 1.1];
    let n = 5;
    let sampler = PartitionSampler::new(&theta, n).unwrap();
    let total: f64 = (1..=n).map(|k| sampler.removal_probability(n, k)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let z = |m: usize| -> f64 { partitions(m).iter().map(|p| partition_weight(&theta, p)).sum::<f64>() };
    for k in 1..=n {
        let zr = if k == n { 1.0 } else { z(n - k) };
        let oracle = theta[k - 1] * zr / (n as f64 * z(n));
        assert!((sampler.removal_probability(n, k) - oracle).abs() < 1e-12);
    }
}
