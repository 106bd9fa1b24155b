//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srblab::gamma::{
    estimate_gamma_point, estimate_gamma_table, estimate_lambda_c, estimate_rho_c, fit_scaling_exponent, GammaTable,
    LambdaFit,
};
use srblab::greenlab::{
    banach_norm, convolve, forward_construct, g_mu_grid, green_asymptotics, green_leading_coefficient,
    heat_kernel_grid, neumann_deconvolve, GridFn,
};
use srblab::laces::{
    self, characterization_check, compatible_set, enumerate_irreducible, enumerate_laces, satisfies_interlacing,
    Compatibility, Lace, LaceTable, DEFAULT_CAP,
};
use srblab::paths::{Model, PairPotential};
use srblab::permsample::{
    cycle_statistics, free_gas_weights, partition_weight, partitions, truncated_mass, z_linear, PartitionSampler,
};
use srblab::pi::{convolution_identity_check, estimate_u_n};
use srblab::thermo::{free_energy, free_energy_closed_form, minimizer_p_star, mass, solve_c, ThermoInput};
use srblab::RngSpec;

type Outcome = (bool, String);

fn step_model(dim: usize, alpha: f64) -> Model {
    Model::new(dim, alpha, PairPotential::step_ball(1.0, 1.0).unwrap())
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn c1_lace_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for n in 2..=6 {
        let irreducible = laces::irreducible_masks(n).unwrap();
        let table = LaceTable::new(n, DEFAULT_CAP).unwrap();
        for _ in 0..1000 {
            let mut u = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let x: f64 = rng.random();
                    u[i * n + j] = x;
                    u[j * n + i] = x;
                }
            }
            let w = laces::matrix_to_edge_weights(n, &u);
            let lhs = laces::irreducible_sum_direct(n, &w, &irreducible);
            worst = worst.max((lhs - table.resummed(&w)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-12 && secs < 10.0,
        format!("max |lhs - rhs| = {worst:.2e} over N = 2..6 x 1000 matrices, {secs:.2} s"),
    )
}

fn c2_characterization() -> Outcome {
    let start = Instant::now();
    let mut graphs = 0;
    let mut bad = 0;
    for n in 2..=6 {
        let r = characterization_check(n, DEFAULT_CAP, Compatibility::Correct).unwrap();
        graphs += r.graphs_checked;
        bad += r.counterexamples + r.unknown_laces;
    }
    let mut laces_seen = 0;
    let mut not_interlaced = 0;
    for n in 2..=8 {
        for l in enumerate_laces(n, DEFAULT_CAP).unwrap() {
            laces_seen += 1;
            if !satisfies_interlacing(&l) {
                not_interlaced += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        bad == 0 && not_interlaced == 0 && secs < 60.0,
        format!(
            "{graphs} irreducible graphs, {bad} counterexamples; {laces_seen} laces (N <= 8), {not_interlaced} violate interlacing; {secs:.2} s"
        ),
    )
}

fn c3_constants() -> Outcome {
    let irr = enumerate_irreducible(3, DEFAULT_CAP).unwrap().len();
    let n_laces = enumerate_laces(3, DEFAULT_CAP).unwrap().len();
    let c13 = compatible_set(&Lace::new(3, &[(1, 3)]).unwrap()).unwrap();
    let c12_23 = compatible_set(&Lace::new(3, &[(1, 2), (2, 3)]).unwrap()).unwrap();
    (
        irr == 5 && n_laces == 2 && c13 == vec![(1, 2), (2, 3)] && c12_23.is_empty(),
        format!("{irr} irreducible graphs, {n_laces} laces, C({{13}}) = {c13:?}, C({{12,23}}) = {c12_23:?}"),
    )
}

fn c4_convolution_identity() -> Outcome {
    let start = Instant::now();
    let model = step_model(3, 0.5);
    let check = convolution_identity_check(&model, 5, 100_000, &RngSpec::new(4)).unwrap();
    let r = &check.rows;
    let exact = r[0].residual.abs() <= 1e-12 && r[1].residual.abs() <= 1e-12;
    let z: Vec<f64> = r[2..].iter().map(|row| row.residual / row.residual_se).collect();
    let secs = start.elapsed().as_secs_f64();
    (
        exact && z.iter().all(|x| x.abs() <= 4.0) && secs < 300.0,
        format!(
            "r_1 = {:.1e}, r_2 = {:.1e}, r_N/se for N = 3,4,5: {:.2?}; {secs:.1} s",
            r[0].residual, r[1].residual, z
        ),
    )
}

fn c5_gamma_bounds(table: &GammaTable) -> Outcome {
    let mut exact = true;
    for d in [1usize, 3, 5] {
        let free = step_model(d, 0.0);
        for n in 1..=40 {
            let e = estimate_gamma_point(&free, n, &vec![0.0; d], 10, &RngSpec::new(5)).unwrap();
            exact &= e.value == (2.0 * PI * n as f64).powf(-(d as f64) / 2.0);
        }
    }
    let alpha = table.alpha;
    let strength = table.potential_strength;
    let mut worst = f64::NEG_INFINITY;
    for e in &table.entries {
        let n = e.k as f64;
        let phi = (2.0 * PI * n).powf(-(table.dim as f64) / 2.0);
        let lower = (-alpha * strength * n * (n - 1.0) / 2.0).exp() * phi;
        let sigma = e.std_error.max(f64::MIN_POSITIVE);
        worst = worst.max((lower - e.value) / sigma).max((e.value - phi) / sigma);
    }
    (
        exact && worst <= 4.0,
        format!(
            "alpha = 0 exact: {exact}; alpha = {alpha}: worst bound violation {worst:.2} sigma over N <= {}",
            table.k_max()
        ),
    )
}

fn c6_connective_constant(table: &GammaTable) -> Outcome {
    let free = estimate_lambda_c(&GammaTable::free_gas(3, 1.0, 40).unwrap(), LambdaFit::default()).unwrap();
    let free_ok = free.lower <= 1.0 && 1.0 <= free.upper && (free.point_estimate - 1.0).abs() <= 0.01;
    let b = estimate_lambda_c(table, LambdaFit::default()).unwrap();
    let e_al = (table.alpha * table.potential_strength).exp();
    let ok = 1.0 <= b.lower && b.lower <= b.upper && b.upper == e_al;
    (
        free_ok && ok,
        format!(
            "alpha = 0: [{:.6}, {:.6}] point {:.6}; alpha = {}: [{:.6}, {:.6}], e^(alpha L) = {:.6}",
            free.lower, free.upper, free.point_estimate, table.alpha, b.lower, b.upper, e_al
        ),
    )
}

fn c7_free_gas_density() -> Outcome {
    // ζ(5/2) by partial sum plus the midpoint integral tail.
    let m = 100_000usize;
    let zeta: f64 = (1..=m).map(|k| (k as f64).powf(-2.5)).sum::<f64>() + (2.0 / 3.0) * (m as f64 + 0.5).powf(-1.5);
    let oracle = zeta * (2.0 * PI).powf(-2.5);
    let s5 = estimate_rho_c(&GammaTable::free_gas(5, 1.0, 200).unwrap(), 1.0, 200).unwrap();
    let s200 = *s5.partial_sums.last().unwrap();
    let rel = (s200 - oracle).abs() / oracle;
    let s2 = estimate_rho_c(&GammaTable::free_gas(2, 1.0, 2000).unwrap(), 1.0, 2000).unwrap();
    let ks: Vec<usize> = (100..=2000).step_by(50).collect();
    let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = ks.iter().map(|&k| s2.partial_sums[k - 1]).collect();
    let sl = slope(&x, &y);
    let target = 1.0 / (2.0 * PI);
    (
        rel <= 0.01 && (sl - target).abs() <= 0.1 * target,
        format!("S_200 (d=5) = {s200:.8} vs {oracle:.8} (rel {rel:.2e}); d=2 slope {sl:.5} vs {target:.5}"),
    )
}

fn c8_thermo() -> Outcome {
    let input = ThermoInput::free_gas(5, 1.0, 2000).unwrap();
    let rc = input.critical_density();
    let tol = 1e-13;
    let mut gap = 0.0f64;
    let mut mass_err = 0.0f64;
    for frac in [0.1, 0.3, 0.6, 0.9, 0.99, 1.01, 1.5, 3.0] {
        let rho = frac * rc;
        gap = gap.max(free_energy(rho, &input, tol).unwrap().gap);
        let (p, _) = minimizer_p_star(rho, &input, tol).unwrap();
        mass_err = mass_err.max((mass(&p) - rho.min(rc)).abs());
    }
    let cs: Vec<f64> = (1..=50).map(|i| solve_c(rc * i as f64 / 51.0, &input, tol).unwrap().c).collect();
    let monotone = cs.windows(2).all(|w| w[1] < w[0]);
    let f = |rho: f64| free_energy_closed_form(rho, &input, tol).unwrap().0;
    let h = 0.02 * rc;
    let second = |rho: f64| (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / (h * h);
    let below = second(0.5 * rc);
    let above = second(2.0 * rc);
    let curvature_drops = below > 0.0 && above.abs() < 1e-6 * below;
    (
        gap <= 1e-6 && mass_err <= 1e-8 && monotone && curvature_drops,
        format!(
            "max |f_closed - f_numeric| = {gap:.1e}, mass error {mass_err:.1e}, c decreasing: {monotone}, f'' = {below:.3e} below / {above:.1e} above rho_c"
        ),
    )
}

fn c9_partition_sampler() -> Outcome {
    let theta = [2.0, 0.5, 1.5, 0.8, 3.0, 0.7];
    let n = 6;
    let parts = partitions(n);
    let weights: Vec<f64> = parts.iter().map(|p| partition_weight(&theta, p)).collect();
    let z: f64 = weights.iter().sum();
    let sampler = PartitionSampler::new(&theta, n).unwrap();
    let samples = sampler.sample_many(1_000_000, &RngSpec::new(9));
    let mut counts = vec![0usize; parts.len()];
    for s in &samples {
        let dense = s.dense();
        counts[parts.iter().position(|p| *p == dense).unwrap()] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(&weights)
            .map(|(&c, w)| (c as f64 / samples.len() as f64 - w / z).abs())
            .sum::<f64>();
    let ones = [1.0; 8];
    let mut z_ok = true;
    for m in 1..=8 {
        let exhaustive: f64 = partitions(m).iter().map(|p| partition_weight(&ones, p)).sum();
        let rec = z_linear(&ones, m).unwrap().unwrap()[m];
        z_ok &= (exhaustive - 1.0).abs() < 1e-12 && (rec - 1.0).abs() < 1e-12;
    }
    let uniform = PartitionSampler::new(&ones, 8).unwrap().sample_many(1_000_000, &RngSpec::new(90));
    let fixed = uniform.iter().map(|s| s.count(1) as f64).sum::<f64>() / uniform.len() as f64;
    (
        tv < 0.01 && z_ok && (fixed - 1.0).abs() <= 0.005,
        format!("TV = {tv:.4}, Z_N = 1 for N <= 8: {z_ok}, mean fixed points {fixed:.4}"),
    )
}

fn c10_cycle_statistics() -> Outcome {
    let n = 2000;
    let thermo = ThermoInput::free_gas(5, 1.0, n).unwrap();
    let rc = thermo.critical_density();
    let rho = rc / 2.0;
    let volume = n as f64 / rho;
    let theta = free_gas_weights(5, 1.0, n, volume).unwrap();
    let samples = PartitionSampler::new(&theta, n).unwrap().sample_many(10_000, &RngSpec::new(10));
    let stats = cycle_statistics(&samples, volume, 5);
    let (p_star, _) = minimizer_p_star(rho, &thermo, 1e-13).unwrap();
    let zs: Vec<f64> = stats.iter().map(|s| (s.mean - p_star[s.k - 1]) / s.std_error).collect();
    let sub_ok = zs.iter().all(|z| z.abs() <= 4.0);

    let rho = 2.0 * rc;
    let volume = n as f64 / rho;
    let theta = free_gas_weights(5, 1.0, n, volume).unwrap();
    let samples = PartitionSampler::new(&theta, n).unwrap().sample_many(10_000, &RngSpec::new(11));
    let plateau: Vec<f64> = [25, 50, 100, 200].iter().map(|&k| truncated_mass(&samples, volume, k).mean).collect();
    let sup_ok = plateau.iter().all(|m| (m / rc - 1.0).abs() <= 0.1);
    (
        sub_ok && sup_ok,
        format!(
            "rho_c/2: (mean - p*)/se for k = 1..5 = {zs:.2?}; 2 rho_c: truncated mass / rho_c at K = 25,50,100,200 = {:.3?}",
            plateau.iter().map(|m| m / rc).collect::<Vec<_>>()
        ),
    )
}

fn c11_deconvolution() -> Outcome {
    let like = GridFn::zeros(1, 12.0, 0.01).unwrap();
    let phi = heat_kernel_grid(&like, 1.0);
    let out = neumann_deconvolve(&phi.scale(0.5), &phi, 1e-12).unwrap();
    let exact = g_mu_grid(&like, 0.5, 1e-14).unwrap();
    let geo_err = out.s.sub(&exact).unwrap().l1();

    let a: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
    let (g_pi, g_gamma) = forward_construct(&like, &a, 0.5).unwrap();
    let round = neumann_deconvolve(&g_pi, &phi, 1e-12).unwrap();
    let round_err = round.s.sub(&g_gamma).unwrap().l1();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (dim, half, h) = if i % 2 == 0 { (1, 3.0, 0.25) } else { (2, 2.0, 0.5) };
        let mut f = GridFn::zeros(dim, half, h).unwrap();
        let mut g = f.clone();
        f.values.iter_mut().for_each(|v| *v = rng.random::<f64>());
        g.values.iter_mut().for_each(|v| *v = rng.random::<f64>().powi(3));
        let ratio = banach_norm(&convolve(&f, &g).unwrap())
            / (2f64.powi(dim as i32 + 1) * banach_norm(&f) * banach_norm(&g));
        worst = worst.max(ratio);
    }
    (
        geo_err <= 1e-6 && round.residual < 1e-6 && out.residual < 1e-6 && worst <= 1.0,
        format!(
            "|S - G_0.5|_1 = {geo_err:.2e}; round trip residual {:.2e}, |S - G^Gamma|_1 = {round_err:.2e}; max norm ratio {worst:.3}",
            round.residual
        ),
    )
}

fn c12_green_asymptotics() -> Outcome {
    let a5 = green_leading_coefficient(5).unwrap();
    let radii: Vec<f64> = (0..=12).map(|i| 5.0 + 1.25 * i as f64).collect();
    let rows = green_asymptotics(5, &radii, 1e-17).unwrap();
    // Residuals below this are indistinguishable from rounding in G.
    let floor = |g: f64| 1e-13 * g;
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.residual > floor(r.g))
        .map(|r| (r.r.ln(), r.residual.ln()))
        .unzip();
    let sl = if x.len() >= 3 { slope(&x, &y) } else { f64::NAN };
    (
        (a5 - 1.0 / (4.0 * PI * PI)).abs() < 1e-16 && sl <= -6.5,
        format!(
            "a_5 = {a5:.12}; slope of log residual over {} radii above the rounding floor: {sl:.2}",
            x.len()
        ),
    )
}

fn c13_u_decay() -> Outcome {
    let model = step_model(3, 0.5);
    let seps = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, &s) in seps.iter().enumerate() {
        let anchors = vec![vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![s, 0.0, 0.0]];
        let u = estimate_u_n(&model, &anchors, 20_000, &RngSpec::new(13).derive(i as u64)).unwrap();
        x.push(s * s);
        y.push(u.value.ln());
    }
    let sl = slope(&x, &y);
    (sl <= -0.05, format!("slope of log u_2 vs |x_4 - x_2|^2 = {sl:.3}"))
}

fn c14_scaling(table: &GammaTable) -> Outcome {
    let free = fit_scaling_exponent(&GammaTable::free_gas(5, 1.0, 40).unwrap(), 1.0, 10, 40).unwrap();
    let lambda = estimate_lambda_c(table, LambdaFit::default()).unwrap().lower;
    let fit = fit_scaling_exponent(table, lambda, 10, 40).unwrap();
    (
        (free.exponent + 2.5).abs() <= 0.05 && fit.exponent <= -1.5,
        format!(
            "alpha = 0 exponent {:.4}; alpha = {} at lambda = {lambda:.6}: exponent {:.3} +- {:.3}",
            free.exponent, table.alpha, fit.exponent, fit.std_error
        ),
    )
}

fn c15_determinism() -> Outcome {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let model = step_model(3, 0.3).with_steps(8);
            let table = estimate_gamma_table(&model, 6, 3000, 15).unwrap().to_text();
            let check = convolution_identity_check(&model, 4, 3000, &RngSpec::new(15)).unwrap().to_csv();
            let theta = free_gas_weights(3, 1.0, 50, 400.0).unwrap();
            let cycles: Vec<String> = PartitionSampler::new(&theta, 50)
                .unwrap()
                .sample_many(5000, &RngSpec::new(16))
                .iter()
                .map(|c| c.to_line())
                .collect();
            (table, check, cycles)
        })
    };
    let one = run(1);
    let many = run(4);
    (one == many, format!("1 vs 4 workers: identical outputs: {}", one == many))
}

fn main() {
    let start = Instant::now();
    let table = estimate_gamma_table(&step_model(5, 0.1), 40, 4000, 2024).unwrap();
    println!("shared alpha = 0.1, d = 5 table built in {:.1} s", start.elapsed().as_secs_f64());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("lace identity", Box::new(c1_lace_identity)),
        ("characterization and interlacing", Box::new(c2_characterization)),
        ("combinatorial constants", Box::new(c3_constants)),
        ("convolution identity", Box::new(c4_convolution_identity)),
        ("Gamma bounds", Box::new(|| c5_gamma_bounds(&table))),
        ("connective constant bracket", Box::new(|| c6_connective_constant(&table))),
        ("free-gas critical density", Box::new(c7_free_gas_density)),
        ("thermodynamic consistency", Box::new(c8_thermo)),
        ("partition sampler exactness", Box::new(c9_partition_sampler)),
        ("cycle statistics vs minimizer", Box::new(c10_cycle_statistics)),
        ("deconvolution round trip", Box::new(c11_deconvolution)),
        ("Green asymptotics", Box::new(c12_green_asymptotics)),
        ("u_n decay", Box::new(c13_u_decay)),
        ("scaling diagnostic", Box::new(|| c14_scaling(&table))),
        ("determinism", Box::new(c15_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
