//! The subcommands. Each returns its manifest and leaves writing of the
//! sidecar to the caller.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use srblab::gamma::{
    estimate_gamma_dirichlet, estimate_gamma_point, estimate_gamma_table, estimate_lambda_c, estimate_rho_c, extend_gamma_table, fit_scaling_exponent, GammaTable,
    LambdaBracket, LambdaFit,
};
use srblab::greenlab::{
    forward_construct, g_mu_grid, green_asymptotics, green_leading_coefficient, heat_kernel_grid, neumann_deconvolve,
    GridFn,
};
use srblab::laces::{
    characterization_check, irreducible_masks, irreducible_sum_direct, matrix_to_edge_weights, Compatibility, LaceTable,
    DEFAULT_CAP, MATERIALIZE_CAP,
};
use srblab::paths::{Model, PairPotential, Quadrature};
use srblab::permsample::{
    cycle_statistics, free_gas_weights, truncated_mass, weights_from_table, PartitionSampler,
};
use srblab::pi::{convolution_identity_check, empirical_pi_constant, estimate_u_n};
use srblab::stats::linear_fit;
use srblab::thermo::{free_gas_tail_bound, minimizer_p_star, phase_diagram, phase_rows_csv, ThermoInput};
use srblab::RngSpec;

use crate::config::{ExperimentConfig, LambdaChoice};
use crate::manifest::{write_output, RunManifest};
use crate::{CliError, Command};

pub struct Outcome {
    pub manifest: RunManifest,
    /// Primary output path, when there is one, for the sidecar.
    pub sidecar_for: Option<PathBuf>,
    /// Set when a verification suite failed; output has been written.
    pub failure: Option<String>,
}

pub fn dispatch(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::EstimateGamma => estimate_gamma(cfg),
        Command::EstimateRhoc => estimate_rhoc(cfg),
        Command::PhaseDiagram => phase(cfg),
        Command::SampleCycles => sample_cycles(cfg),
        Command::Verify => verify(cfg),
        Command::Deconvolve => deconvolve(cfg),
        Command::GreenAsymptotics => green(cfg),
        Command::UnDecay => un_decay(cfg),
    }
}

fn output_path(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.run.output.as_ref().map(PathBuf::from)
}

fn start(cmd: Command, cfg: &ExperimentConfig) -> RunManifest {
    let mut m = RunManifest::new(cmd.name(), cfg.resolved(), cfg.run.seed);
    if let Some(p) = &cfg.run.output {
        m.outputs.push(p.clone());
    }
    m
}

fn finish(manifest: RunManifest, path: Option<PathBuf>, body: &str) -> Result<Outcome, CliError> {
    write_output(path.as_deref(), &manifest, body)?;
    Ok(Outcome {
        manifest,
        sidecar_for: path,
        failure: None,
    })
}

fn model_from(cfg: &ExperimentConfig) -> Result<Model, CliError> {
    let m = &cfg.model;
    let potential = match m.potential.as_str() {
        "step-ball" => PairPotential::step_ball(m.strength, m.range)?,
        "smooth-bump" => PairPotential::smooth_bump(m.strength, m.range)?,
        other => return Err(CliError::Config(format!("model.potential: unknown potential {other:?}"))),
    };
    let quadrature = match m.quadrature.as_str() {
        "trapezoid" => Quadrature::Trapezoid,
        "simpson" => Quadrature::Simpson,
        other => return Err(CliError::Config(format!("model.quadrature: unknown rule {other:?}"))),
    };
    let model = Model {
        quadrature,
        ..Model::new(m.dim, m.alpha, potential).with_beta(m.beta).with_steps(m.steps_per_leg)
    };
    model.validate()?;
    Ok(model)
}

fn read_table(path: &str) -> Result<GammaTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read weights table {path}: {e}")))?;
    Ok(GammaTable::from_text(&text)?)
}

/// The weight table named by `[weights]`, or `None` when no source is set.
fn weights_table(cfg: &ExperimentConfig, k_needed: usize) -> Result<Option<(GammaTable, bool)>, CliError> {
    let w = &cfg.weights;
    match (&w.preset, &w.table) {
        (Some(_), Some(_)) => Err(CliError::Config("set either weights.preset or weights.table, not both".into())),
        (Some(p), None) if p == "free-gas" => {
            let dim = w.dim.unwrap_or(cfg.model.dim);
            let beta = w.beta.unwrap_or(cfg.model.beta);
            Ok(Some((GammaTable::free_gas(dim, beta, w.k_max.max(k_needed))?, true)))
        }
        (Some(p), None) => Err(CliError::Config(format!("weights.preset: unknown preset {p:?}"))),
        (None, Some(t)) => Ok(Some((read_table(t)?, false))),
        (None, None) => Ok(None),
    }
}

fn require_weights(cfg: &ExperimentConfig, k_needed: usize) -> Result<(GammaTable, bool), CliError> {
    weights_table(cfg, k_needed)?
        .ok_or_else(|| CliError::Config("no cycle weights: set weights.preset = \"free-gas\" or weights.table".into()))
}

/// Resolve `weights.lambda`. Free-gas weights default to 1, tables to the
/// lower end of the bracket.
fn resolve_lambda(
    cfg: &ExperimentConfig,
    table: &GammaTable,
    free: bool,
    m: &mut RunManifest,
) -> Result<f64, CliError> {
    let choice = cfg.weights.lambda.clone().unwrap_or_else(|| {
        if free {
            LambdaChoice::Value(1.0)
        } else {
            LambdaChoice::Named("lower".into())
        }
    });
    let lambda = match choice {
        LambdaChoice::Value(v) => v,
        LambdaChoice::Named(name) => {
            let b = bracket(cfg, table)?;
            if !m.results.iter().any(|(k, _)| k == "lambda_lower") {
                record_bracket(m, &b);
            }
            match name.as_str() {
                "lower" => b.lower,
                "upper" => b.upper,
                "point" => b.point_estimate,
                other => return Err(CliError::Config(format!("weights.lambda: unknown choice {other:?}"))),
            }
        }
    };
    m.result("lambda_used", lambda);
    Ok(lambda)
}

fn bracket(cfg: &ExperimentConfig, table: &GammaTable) -> Result<LambdaBracket, CliError> {
    Ok(estimate_lambda_c(
        table,
        LambdaFit {
            k_min: cfg.rhoc.fit_k_min,
            log_term: cfg.rhoc.log_term,
        },
    )?)
}

fn record_bracket(m: &mut RunManifest, b: &LambdaBracket) {
    m.result("lambda_lower", b.lower);
    m.result("lambda_upper", b.upper);
    m.result("lambda_point", b.point_estimate);
    m.result("lambda_clamped", b.clamped);
}

fn estimate_gamma(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let model = model_from(cfg)?;
    let path = output_path(cfg)
        .ok_or_else(|| CliError::Config("estimate-gamma needs an output file (--output or run.output)".into()))?;
    let mut m = start(Command::EstimateGamma, cfg);
    m.stream(format!("row k: seed {seed}, stream 1, derived by k; chunks of 1024 samples"));
    let table = if path.exists() {
        let existing = read_table(&path.to_string_lossy())?;
        if existing.seed != seed {
            return Err(CliError::Config(format!(
                "{} was built with seed {}, not {seed}",
                path.display(),
                existing.seed
            )));
        }
        let had = existing.k_max();
        let t = extend_gamma_table(existing, &model, cfg.gamma.k_max, cfg.gamma.samples)
            .map_err(|e| CliError::Config(format!("cannot extend {}: {e}", path.display())))?;
        m.result("rows_reused", had.min(t.k_max()));
        t
    } else {
        estimate_gamma_table(&model, cfg.gamma.k_max, cfg.gamma.samples, seed)?
    };
    m.result("k_max", table.k_max());
    m.result("rows_sha256", table.checksum());
    finish(m, Some(path), &table.to_text())
}

fn estimate_rhoc(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (table, free) = require_weights(cfg, 0)?;
    let mut m = start(Command::EstimateRhoc, cfg);
    if table.alpha > 0.0 || !free {
        let b = bracket(cfg, &table)?;
        record_bracket(&mut m, &b);
    }
    let lambda = resolve_lambda(cfg, &table, free, &mut m)?;
    let k_max = cfg.rhoc.k_max.unwrap_or(table.k_max());
    let sums = estimate_rho_c(&table, lambda, k_max)?;
    if let Some(d) = sums.increment_decay {
        m.result("increment_decay", d);
    }
    if let Some(last) = sums.partial_sums.last() {
        m.result("rho_c_partial", last);
    }
    if free && table.dim > 2 {
        m.result("rho_c_tail_bound", free_gas_tail_bound(table.dim, table.beta, sums.partial_sums.len()));
    }
    let hi = cfg.rhoc.scaling_k_hi.unwrap_or(table.k_max());
    match fit_scaling_exponent(&table, lambda, cfg.rhoc.scaling_k_lo, hi) {
        Ok(f) => {
            m.result("scaling_exponent", f.exponent);
            m.result("scaling_std_error", f.std_error);
            m.result("scaling_ci", format!("[{}, {}]", f.ci_low, f.ci_high));
        }
        Err(e) => m.result("scaling_exponent", format!("unavailable: {e}")),
    }
    let mut body = String::from("K,S_K,S_err,increment\n");
    for (i, s) in sums.partial_sums.iter().enumerate() {
        writeln!(body, "{},{},{},{}", i + 1, s, sums.std_errors[i], sums.increments[i]).unwrap();
    }
    finish(m, output_path(cfg), &body)
}

fn phase(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (table, free) = require_weights(cfg, 0)?;
    let mut m = start(Command::PhaseDiagram, cfg);
    let lambda = resolve_lambda(cfg, &table, free, &mut m)?;
    let input = ThermoInput::from_table(&table, lambda)?;
    let rc = input.critical_density();
    m.result("rho_c", rc);
    let mut rhos = cfg.phase.rho.clone();
    rhos.extend(cfg.phase.relative.iter().map(|r| r * rc));
    if rhos.is_empty() {
        return Err(CliError::Config("empty density grid: set phase.rho or phase.relative".into()));
    }
    let rows = phase_diagram(&rhos, &input, cfg.phase.tol)?;
    finish(m, output_path(cfg), &phase_rows_csv(&rows))
}

fn sample_cycles(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let c = &cfg.cycles;
    if c.n == 0 {
        return Err(CliError::Config("cycles.n must be >= 1".into()));
    }
    let (table, free) = require_weights(cfg, c.n)?;
    let volume = match (c.volume, c.rho) {
        (Some(v), _) => v,
        (None, Some(r)) if r > 0.0 => c.n as f64 / r,
        _ => return Err(CliError::Config("set cycles.volume or a positive cycles.rho".into())),
    };
    let theta = if free {
        free_gas_weights(table.dim, table.beta, c.n, volume)?
    } else {
        weights_from_table(&table, c.n, volume)?
    };
    let mut m = start(Command::SampleCycles, cfg);
    if let Some(s) = &c.stats_output {
        m.outputs.push(s.clone());
    }
    m.stream(format!("samples: seed {seed}, stream 3; chunks of 1024 samples"));
    let rho = c.n as f64 / volume;
    m.result("volume", volume);
    m.result("rho", rho);
    let samples = PartitionSampler::new(&theta, c.n)?.sample_many(c.samples, &RngSpec::new(seed).with_stream(3));

    let mut body = String::from("sample,cycles\n");
    for (i, s) in samples.iter().enumerate() {
        writeln!(body, "{i},{}", s.to_line()).unwrap();
    }

    // Compare with the minimizer when the weights make sense as Γ_k.
    let k_stats = c.k_stats.min(c.n);
    let p_star = resolve_lambda(cfg, &table, free, &mut m)
        .and_then(|l| Ok(ThermoInput::from_table(&table, l)?))
        .and_then(|input| {
            m.result("rho_c", input.critical_density());
            Ok(minimizer_p_star(rho, &input, 1e-13)?.0)
        });
    let p_star = match p_star {
        Ok(p) => Some(p),
        Err(e) => {
            m.result("p_star", format!("unavailable: {e}"));
            None
        }
    };
    dirichlet_gap(cfg, &table, volume, seed, &mut m)?;
    let tm = truncated_mass(&samples, volume, k_stats);
    m.result("truncated_mass", format!("{} +- {}", tm.mean, tm.std_error));
    let mut stats = String::from("k,mean,std_error,ci_low,ci_high,p_star,z\n");
    for s in cycle_statistics(&samples, volume, k_stats) {
        let (p, z) = match &p_star {
            Some(p) if s.k <= p.len() => {
                // No z-score for a degenerate sample.
                let z = if s.std_error > 0.0 { ((s.mean - p[s.k - 1]) / s.std_error).to_string() } else { String::new() };
                (p[s.k - 1].to_string(), z)
            }
            _ => (String::new(), String::new()),
        };
        writeln!(stats, "{},{},{},{},{},{p},{z}", s.k, s.mean, s.std_error, s.ci_low, s.ci_high).unwrap();
    }
    match &c.stats_output {
        Some(p) => write_output(Some(Path::new(p)), &m, &stats)?,
        None => body = format!("{body}{}", prefix_comment(&stats)),
    }
    finish(m, output_path(cfg), &body)
}

/// The sampler uses free-space weights; record how far the Dirichlet
/// weights in a box of the same volume sit below them.
fn dirichlet_gap(
    cfg: &ExperimentConfig,
    table: &GammaTable,
    volume: f64,
    seed: u64,
    m: &mut RunManifest,
) -> Result<(), CliError> {
    let c = &cfg.cycles;
    let k_max = c.dirichlet_k.min(c.n);
    if k_max == 0 {
        return Ok(());
    }
    // The model that produced the table, with the configured potential shape.
    let mut base = model_from(cfg)?;
    if table.alpha > 0.0 {
        base.potential.strength = table.potential_strength;
        base.potential.range = table.potential_range;
    }
    let model = Model {
        dim: table.dim,
        beta: table.beta,
        alpha: table.alpha,
        steps_per_leg: if table.steps_per_leg > 0 { table.steps_per_leg } else { cfg.model.steps_per_leg },
        ..base
    };
    let side = volume.powf(1.0 / table.dim as f64);
    m.stream(format!("dirichlet box, row k: seed {seed}, stream 7, derived by k"));
    m.stream(format!("free reference, row k: seed {seed}, stream 8, derived by k"));
    m.result("dirichlet_box_side", side);
    let origin = vec![0.0; table.dim];
    for k in 1..=k_max {
        let dir = estimate_gamma_dirichlet(&model, k, side, c.dirichlet_samples, &RngSpec::new(seed).with_stream(7).derive(k as u64))?;
        let free = estimate_gamma_point(&model, k, &origin, c.dirichlet_samples, &RngSpec::new(seed).with_stream(8).derive(k as u64))?;
        let ratio = dir.value / free.value;
        let se = ratio * ((dir.std_error / dir.value).powi(2) + (free.std_error / free.value).powi(2)).sqrt();
        m.result(&format!("dirichlet_over_free.{k}"), format!("{ratio} +- {se}"));
    }
    Ok(())
}

/// Stats appended to the samples stream stay out of the CSV as comments.
fn prefix_comment(text: &str) -> String {
    text.lines().map(|l| format!("# stats: {l}\n")).collect()
}

struct Suite {
    name: &'static str,
    cases: usize,
    max_discrepancy: f64,
    pass: bool,
}

fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let v = &cfg.verify;
    if v.n_max > MATERIALIZE_CAP {
        return Err(srblab::Error::ResourceLimit(format!(
            "verify.n_max = {} exceeds the exhaustive limit {MATERIALIZE_CAP}",
            v.n_max
        ))
        .into());
    }
    let seed = cfg.require_seed()?;
    let mode = match v.mutation.as_str() {
        "none" => Compatibility::Correct,
        "flip-compatible" => Compatibility::Flipped,
        other => return Err(CliError::Config(format!("verify.mutation: unknown mutation {other:?}"))),
    };
    let mut m = start(Command::Verify, cfg);
    m.stream(format!("lace matrices for n: seed {seed}, stream 4, derived by n"));
    m.stream(format!("convolution identity paths: seed {seed}, stream 5; chunks of 1024 samples"));
    let mut suites = Vec::new();

    // Direct irreducible sum against lace resummation on random matrices.
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=v.n_max {
        let masks = irreducible_masks(n)?;
        let table = LaceTable::with_mode(n, MATERIALIZE_CAP, mode)?;
        let mut rng = RngSpec::new(seed).with_stream(4).derive(n as u64).chunk_rng(0);
        for _ in 0..v.matrices {
            let mut u = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let x: f64 = rng.random();
                    u[i * n + j] = x;
                    u[j * n + i] = x;
                }
            }
            let w = matrix_to_edge_weights(n, &u);
            let d = (irreducible_sum_direct(n, &w, &masks) - table.resummed(&w)).abs();
            worst = worst.max(d);
            cases += 1;
        }
    }
    suites.push(Suite {
        name: "lace-identity",
        cases,
        max_discrepancy: worst,
        pass: worst <= 1e-12,
    });

    // Every irreducible graph against every lace.
    let mut bad = 0u64;
    let mut graphs = 0u64;
    for n in 2..=v.n_max.min(DEFAULT_CAP) {
        let r = characterization_check(n, DEFAULT_CAP, mode)?;
        bad += r.counterexamples + r.unknown_laces;
        graphs += r.graphs_checked;
    }
    suites.push(Suite {
        name: "lace-characterization",
        cases: graphs as usize,
        max_discrepancy: bad as f64,
        pass: bad == 0,
    });

    // Renewal identity on Monte Carlo paths.
    let model = Model {
        alpha: v.mc_alpha,
        ..model_from(cfg)?
    };
    let check = convolution_identity_check(&model, v.mc_n_max, v.mc_samples, &RngSpec::new(seed).with_stream(5))?;
    let mut worst_z = 0.0f64;
    let mut exact_ok = true;
    for r in &check.rows {
        if r.n <= 2 {
            exact_ok &= r.residual.abs() <= 1e-12;
        } else if r.residual_se > 0.0 {
            worst_z = worst_z.max(r.residual.abs() / r.residual_se);
        }
    }
    if model.dim >= 4 {
        m.result("pi_constant_lower_estimate", empirical_pi_constant(&check, model.alpha, 1.0, model.dim)?);
    }
    suites.push(Suite {
        name: "convolution-identity",
        cases: check.rows.len(),
        max_discrepancy: worst_z,
        pass: exact_ok && worst_z <= 4.0,
    });

    // Deconvolution round trips with known answers.
    let like = GridFn::zeros(1, v.grid_half_width, v.grid_spacing)?;
    let phi = heat_kernel_grid(&like, 1.0);
    let geo = neumann_deconvolve(&phi.scale(0.5), &phi, 1e-12)?;
    let geo_err = geo.s.sub(&g_mu_grid(&like, 0.5, 1e-14)?)?.l1();
    let a: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
    let (g_pi, g_gamma) = forward_construct(&like, &a, 0.5)?;
    let syn = neumann_deconvolve(&g_pi, &phi, 1e-12)?;
    let syn_err = syn.s.sub(&g_gamma)?.l1();
    let worst = geo_err.max(syn_err).max(geo.residual).max(syn.residual);
    suites.push(Suite {
        name: "deconvolution",
        cases: 2,
        max_discrepancy: worst,
        pass: worst <= 1e-6,
    });

    let mut body = String::from("suite,cases,max_discrepancy,verdict\n");
    for s in &suites {
        writeln!(body, "{},{},{},{}", s.name, s.cases, s.max_discrepancy, if s.pass { "pass" } else { "fail" }).unwrap();
    }
    let failed: Vec<&str> = suites.iter().filter(|s| !s.pass).map(|s| s.name).collect();
    m.result("suites_failed", failed.len());
    let path = output_path(cfg);
    write_output(path.as_deref(), &m, &body)?;
    Ok(Outcome {
        manifest: m,
        sidecar_for: path,
        failure: (!failed.is_empty()).then(|| failed.join(", ")),
    })
}

fn deconvolve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let d = &cfg.deconvolve;
    let mut m = start(Command::Deconvolve, cfg);
    let (g_pi, exact) = match &d.input {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {p}: {e}")))?;
            m.outputs.insert(0, format!("input {p}"));
            (GridFn::from_text(&text)?, None)
        }
        None => {
            let like = GridFn::zeros(d.dim, d.half_width, d.spacing)?;
            match d.preset.as_str() {
                "geometric" => {
                    let phi = heat_kernel_grid(&like, 1.0);
                    (phi.scale(d.lambda), Some(g_mu_grid(&like, d.lambda, d.tol * 1e-2)?))
                }
                "synthetic" => {
                    let a: Vec<f64> = (0..d.terms as i32).map(|n| d.q.powi(n)).collect();
                    let (g_pi, g_gamma) = forward_construct(&like, &a, d.lambda)?;
                    (g_pi, Some(g_gamma))
                }
                other => return Err(CliError::Config(format!("deconvolve.preset: unknown preset {other:?}"))),
            }
        }
    };
    let phi = heat_kernel_grid(&g_pi, 1.0);
    let out = neumann_deconvolve(&g_pi, &phi, d.tol)?;
    m.result("mu", out.mu);
    m.result("a_norm", out.a_norm);
    m.result("a_l1", out.a_l1);
    m.result("terms", out.terms);
    m.result("tail_bound", out.tail_bound);
    m.result("residual_l1", out.residual);
    if let Some(e) = exact {
        m.result("error_l1", out.s.sub(&e)?.l1());
    }
    finish(m, output_path(cfg), &out.s.to_text())
}

fn green(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let g = &cfg.green;
    if g.points == 0 || !(g.r_min > 0.0 && g.r_max >= g.r_min) {
        return Err(CliError::Config("green: need points >= 1 and 0 < r_min <= r_max".into()));
    }
    let radii: Vec<f64> = if g.points == 1 {
        vec![g.r_min]
    } else {
        (0..g.points)
            .map(|i| g.r_min + (g.r_max - g.r_min) * i as f64 / (g.points - 1) as f64)
            .collect()
    };
    let mut m = start(Command::GreenAsymptotics, cfg);
    m.result("leading_coefficient", green_leading_coefficient(g.dim)?);
    let rows = green_asymptotics(g.dim, &radii, g.tol)?;
    let mut body = String::from("r,G,leading,residual\n");
    for r in &rows {
        writeln!(body, "{},{},{},{}", r.r, r.g, r.leading, r.residual).unwrap();
    }
    finish(m, output_path(cfg), &body)
}

fn un_decay(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let model = model_from(cfg)?;
    if cfg.un.separations.is_empty() {
        return Err(CliError::Config("un.separations is empty".into()));
    }
    let mut m = start(Command::UnDecay, cfg);
    m.stream(format!("separation i: seed {seed}, stream 6, derived by i; chunks of 1024 samples"));
    let dim = model.dim;
    let mut body = String::from("s,s2,u,u_err\n");
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, &s) in cfg.un.separations.iter().enumerate() {
        let mut far = vec![0.0; dim];
        far[0] = s;
        let anchors = vec![vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], far];
        let rng = RngSpec::new(seed).with_stream(6).derive(i as u64);
        let u = estimate_u_n(&model, &anchors, cfg.un.samples, &rng)?;
        writeln!(body, "{s},{},{},{}", s * s, u.value, u.std_error).unwrap();
        if u.value > 0.0 {
            x.push(s * s);
            y.push(u.value.ln());
        }
    }
    match linear_fit(&x, &y) {
        Ok(f) => m.result("log_u_slope_vs_s2", f.slope),
        Err(e) => m.result("log_u_slope_vs_s2", format!("unavailable: {e}")),
    }
    finish(m, output_path(cfg), &body)
}
