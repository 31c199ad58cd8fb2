mod settings;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coupled_turbo::config::{to_f64, Family};
use coupled_turbo::coupling::{
    asymptotic_rate, rate_of, write_trace, ChainCode, DecodeOptions, Trace,
};
use coupled_turbo::de::evolution::default_de_chain_len;
use coupled_turbo::de::{
    awgn_sigma_from_bec, default_grid, exact_transfer, map_threshold, threshold_bisect, DeOptions,
    Schedule, Transfer,
};
use coupled_turbo::optimizer::{joint_search, SearchSpec};
use coupled_turbo::rng::{block_stream, Role};
use coupled_turbo::sim::{
    bec_transmit, chain_info, decode_with, run_ber, write_gnuplot, BerCsv, Decoder, ExperimentSpec,
};
use coupled_turbo::{build_trellis, CouplingConfig, GeneratorSpec, Rational};

use settings::Settings;

/// Density evolution, optimization and simulation of partially
/// information-coupled (PIC) and partially parity-coupled (PPC) turbo codes
/// on the binary erasure channel.
#[derive(Parser)]
#[command(name = "coupled-turbo", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "COUPLED_TURBO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BP threshold of an ensemble by density evolution.
    Threshold(Common),
    /// Best (λ, ρ) pair for a target rate.
    Optimize(Common),
    /// Monte-Carlo bit erasure rate over a list of erasure probabilities.
    Ber(Common),
    /// Table of the component transfer functions f_p and f_q.
    Transfer(Common),
    /// MAP threshold of the uncoupled turbo ensemble via the area theorem.
    MapThreshold(Common),
    /// Gaussian-channel threshold matching a BEC threshold.
    Awgn(Common),
    /// Encode, transmit and decode one chain.
    Roundtrip(Common),
}

/// Settings shared by all commands. Any key may also come from `--config`
/// or `--set`; flags override the file.
#[derive(Args, Default)]
struct Common {
    /// File of `key = value` lines; `#` starts a comment.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Sets any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `pic` or `ppc`.
    #[arg(long)]
    family: Option<String>,
    /// Coupling ratio, e.g. `1/2`.
    #[arg(long)]
    lambda: Option<String>,
    /// Coupled parity from the upper encoder (PPC).
    #[arg(long)]
    lambda_upper: Option<String>,
    /// Coupled parity from the lower encoder (PPC).
    #[arg(long)]
    lambda_lower: Option<String>,
    /// Coupling memory.
    #[arg(long)]
    m: Option<String>,
    /// Number of coupled blocks L.
    #[arg(long, short = 'L', visible_alias = "L")]
    chain_len: Option<String>,
    /// Information length K of each turbo block.
    #[arg(long, short = 'K')]
    k: Option<String>,
    /// Fraction of parity bits kept after puncturing.
    #[arg(long)]
    rho: Option<String>,
    /// Target or code rate.
    #[arg(long)]
    rate: Option<String>,
    /// Erasure probability, or a comma separated list for `ber`.
    #[arg(long)]
    eps: Option<String>,
    /// Bisection width for thresholds.
    #[arg(long)]
    tol: Option<String>,
    /// Density-evolution iteration cap.
    #[arg(long)]
    max_iter: Option<String>,
    /// `ff-fb` or `window`.
    #[arg(long)]
    decoder: Option<String>,
    /// Window size of the window decoder.
    #[arg(long)]
    window: Option<String>,
    /// Erased bits after which a BER point stops.
    #[arg(long)]
    min_errors: Option<String>,
    /// Chains after which a BER point stops.
    #[arg(long)]
    max_chains: Option<String>,
    /// Grid points per axis for `transfer`.
    #[arg(long)]
    points: Option<String>,
    /// Integration step for `map-threshold`.
    #[arg(long)]
    map_step: Option<String>,
    /// CSV output file.
    #[arg(long, short)]
    output: Option<String>,
    /// Gnuplot script written next to the CSV.
    #[arg(long)]
    plot: Option<String>,
    /// Trace file written by `roundtrip`.
    #[arg(long)]
    trace: Option<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            s.set(k, v)?;
        }
        let flags = [
            ("family", &self.family),
            ("lambda", &self.lambda),
            ("lambda_upper", &self.lambda_upper),
            ("lambda_lower", &self.lambda_lower),
            ("m", &self.m),
            ("chain_len", &self.chain_len),
            ("k", &self.k),
            ("rho", &self.rho),
            ("rate", &self.rate),
            ("eps", &self.eps),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("decoder", &self.decoder),
            ("window", &self.window),
            ("min_errors", &self.min_errors),
            ("max_chains", &self.max_chains),
            ("points", &self.points),
            ("map_step", &self.map_step),
            ("output", &self.output),
            ("plot", &self.plot),
            ("trace", &self.trace),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        if let Some(seed) = self.seed {
            s.set("seed", &seed.to_string())?;
        }
        Ok(s)
    }
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    match &cli.command {
        Command::Threshold(c) => cmd_threshold(c.settings()?),
        Command::Optimize(c) => cmd_optimize(c.settings()?),
        Command::Ber(c) => cmd_ber(c.settings()?),
        Command::Transfer(c) => cmd_transfer(c.settings()?),
        Command::MapThreshold(c) => cmd_map_threshold(c.settings()?),
        Command::Awgn(c) => cmd_awgn(c.settings()?),
        Command::Roundtrip(c) => cmd_roundtrip(c.settings()?),
    }
}

fn create(path: &str) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {path}"))?;
    Ok(BufWriter::new(f))
}

fn write_header(out: &mut impl Write, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(())
}

fn de_options(s: &Settings) -> Result<DeOptions> {
    let d = DeOptions::default();
    let schedule = match s.raw("schedule").unwrap_or("serial") {
        "serial" => Schedule::Serial,
        "parallel" => Schedule::Parallel,
        other => bail!("schedule must be serial or parallel, got {other:?}"),
    };
    Ok(DeOptions {
        max_iter: s.get_or("max_iter", d.max_iter)?,
        conv: s.get_or("conv", d.conv)?,
        stall: s.get_or("stall", d.stall)?,
        schedule,
    })
}

fn de_pairs(tol: f64, o: &DeOptions) -> Vec<(String, String)> {
    vec![
        ("tol".into(), tol.to_string()),
        ("max_iter".into(), o.max_iter.to_string()),
        ("conv".into(), o.conv.to_string()),
        ("stall".into(), o.stall.to_string()),
        (
            "schedule".into(),
            format!("{:?}", o.schedule).to_lowercase(),
        ),
    ]
}

/// Chain configuration for density evolution: `chain_len` defaults to the
/// DE chain length for the memory.
fn ensemble(s: &Settings) -> Result<CouplingConfig> {
    let mut cfg = s.coupling()?;
    if !s.has("chain_len") {
        cfg.chain_len = default_de_chain_len(cfg.m);
    }
    cfg.validate_ensemble()?;
    Ok(cfg)
}

fn cmd_threshold(s: Settings) -> Result<()> {
    let cfg = ensemble(&s)?;
    let tol = s.get_or("tol", 1e-4)?;
    let opts = de_options(&s)?;
    let t = threshold_bisect(&cfg, tol, default_grid(), &opts)?;
    let rate = to_f64(asymptotic_rate(cfg.lambda, cfg.rho));
    println!(
        "{} lambda={} m={} rho={} rate={:.4}: eps_bp = {:.4} (bracket [{:.6}, {:.6}])",
        cfg.family, cfg.lambda, cfg.m, cfg.rho, rate, t.eps, t.lower, t.upper
    );
    if let Some(path) = s.raw("output") {
        let mut out = create(path)?;
        let mut head = cfg.describe();
        head.extend(de_pairs(tol, &opts));
        write_header(&mut out, &head)?;
        let (u, l) = cfg.split();
        writeln!(
            out,
            "family,lambda,lambda_upper,lambda_lower,m,rho,rate,eps_bp,iterations"
        )?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cfg.family, cfg.lambda, u, l, cfg.m, cfg.rho, rate, t.eps, t.iterations
        )?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_optimize(s: Settings) -> Result<()> {
    let family: Family = s.get_or("family", Family::Pic)?;
    let rate = s.require_rational("rate")?;
    let m = s.get_or("m", 1usize)?;
    let mut spec = SearchSpec::new(family, rate, m);
    spec.chain_len = s.get_or("chain_len", default_de_chain_len(m))?;
    if let Some(x) = s.rational("lambda_step")? {
        spec.lambda_step = x;
    }
    if let Some(x) = s.rational("lambda_min")? {
        spec.lambda_min = x;
    }
    spec.lambda_max = s.rational("lambda_max")?;
    match s.raw("refine_step") {
        Some("none") => spec.refine_step = None,
        Some(_) => spec.refine_step = s.rational("refine_step")?,
        None => {}
    }
    spec.tol = s.get_or("tol", spec.tol)?;
    spec.de = de_options(&s)?;
    let res = joint_search(&spec, default_grid())?;
    if !res.unimodal {
        eprintln!("warning: threshold curve over λ is not unimodal");
    }
    println!(
        "{family} rate={rate} m={m}: eps_bp = {:.4} at lambda={} rho={} (ties for lambda in [{}, {}])",
        res.best.threshold.eps, res.best.lambda, res.best.rho, res.tie.0, res.tie.1
    );
    if let Some(path) = s.raw("output") {
        let mut out = create(path)?;
        write_header(&mut out, &spec.describe())?;
        writeln!(
            out,
            "kind,family,rate,m,lambda,rho,eps_bp,iterations,tie_low,tie_high"
        )?;
        for p in &res.curve {
            writeln!(
                out,
                "curve,{family},{rate},{m},{},{},{},{},,",
                p.lambda, p.rho, p.threshold.eps, p.threshold.iterations
            )?;
        }
        let b = &res.best;
        writeln!(
            out,
            "best,{family},{rate},{m},{},{},{},{},{},{}",
            b.lambda, b.rho, b.threshold.eps, b.threshold.iterations, res.tie.0, res.tie.1
        )?;
        out.flush()?;
    }
    Ok(())
}

fn decode_options(s: &Settings) -> Result<DecodeOptions> {
    let d = DecodeOptions::default();
    let inner = match s.raw("inner_iterations") {
        None | Some("stall") => None,
        Some(_) => s.get("inner_iterations")?,
    };
    Ok(DecodeOptions {
        max_sweeps: s.get_or("max_sweeps", d.max_sweeps)?,
        inner_iterations: inner,
    })
}

fn decoder(s: &Settings) -> Result<Decoder> {
    match s.raw("decoder").unwrap_or("ff-fb") {
        "ff-fb" | "fffb" => Ok(Decoder::FfFb),
        "window" => Ok(Decoder::Window(s.get_or("window", 4usize)?)),
        other => bail!("decoder must be ff-fb or window, got {other:?}"),
    }
}

/// Chain configuration for simulation; coupled bits are placed at random
/// positions unless `random_placement` is set.
fn simulated_chain(s: &mut Settings) -> Result<CouplingConfig> {
    s.set_default("random_placement", "true");
    let cfg = s.coupling()?;
    cfg.validate_code()?;
    Ok(cfg)
}

fn cmd_ber(mut s: Settings) -> Result<()> {
    let cfg = simulated_chain(&mut s)?;
    let mut spec = ExperimentSpec::new(cfg, s.f64_list("eps")?);
    spec.decoder = decoder(&s)?;
    spec.decode = decode_options(&s)?;
    spec.min_errors = s.get_or("min_errors", spec.min_errors)?;
    spec.max_chains = s.get_or("max_chains", spec.max_chains)?;
    spec.batch = s.get_or("batch", spec.batch)?;
    spec.seed = s.get_or("seed", spec.seed)?;
    spec.validate()?;
    let mut csv = match s.raw("output") {
        Some(p) => Some(BerCsv::new(create(p)?, &spec)?),
        None => None,
    };
    println!("rate = {:.4}", to_f64(rate_of(&spec.config)?));
    println!("eps,bits,errors,ber,chains,seconds");
    run_ber(&spec, |r| {
        println!(
            "{},{},{},{:e},{},{:.2}",
            r.eps, r.bits, r.errors, r.ber, r.chains, r.seconds
        );
        if let Some(w) = csv.as_mut() {
            w.write(r)?;
        }
        Ok(())
    })?;
    if let Some(script) = s.raw("plot") {
        let csv_path = s
            .raw("output")
            .ok_or_else(|| anyhow!("--plot needs --output for the data file"))?;
        let title = format!(
            "{} lambda={} m={} K={} L={}",
            spec.config.family,
            spec.config.lambda,
            spec.config.m,
            spec.config.k,
            spec.config.chain_len
        );
        write_gnuplot(Path::new(script), Path::new(csv_path), &title)?;
    }
    Ok(())
}

fn cmd_transfer(s: Settings) -> Result<()> {
    let n: usize = s.get_or("points", 11)?;
    if n < 2 {
        bail!("points must be at least 2");
    }
    let exact;
    let f: &dyn Transfer = match s.raw("transfer").unwrap_or("exact") {
        "exact" => {
            exact = exact_transfer(&build_trellis(GeneratorSpec::default())?);
            &exact
        }
        "grid" => default_grid(),
        other => bail!("transfer must be exact or grid, got {other:?}"),
    };
    let mut out: Box<dyn Write> = match s.raw("output") {
        Some(p) => {
            let mut w = create(p)?;
            write_header(
                &mut w,
                &[
                    ("generator".into(), "(1, 5/7)".into()),
                    ("points".into(), n.to_string()),
                    (
                        "transfer".into(),
                        s.raw("transfer").unwrap_or("exact").into(),
                    ),
                ],
            )?;
            Box::new(w)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "p,q,f_p,f_q")?;
    for i in 0..n {
        for j in 0..n {
            let p = i as f64 / (n - 1) as f64;
            let q = j as f64 / (n - 1) as f64;
            let (fp, fq) = f.eval(p, q);
            writeln!(out, "{p},{q},{fp:.10},{fq:.10}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_map_threshold(s: Settings) -> Result<()> {
    let rate = to_f64(s.require_rational("rate")?);
    let rho = to_f64(s.rational("rho")?.unwrap_or(Rational::from_integer(1)));
    let step = s.get_or("map_step", 1e-3)?;
    let eps = map_threshold(rate, default_grid(), rho, step)?;
    println!("rate={rate} rho={rho}: eps_map = {eps:.4}");
    Ok(())
}

fn cmd_awgn(s: Settings) -> Result<()> {
    let eps: f64 = s
        .get("eps")?
        .ok_or_else(|| anyhow!("missing required setting \"eps\""))?;
    let rate = to_f64(s.require_rational("rate")?);
    let t = awgn_sigma_from_bec(eps, rate)?;
    println!(
        "eps={eps} rate={rate}: sigma = {:.4}, Eb/N0 = {:.3} dB",
        t.sigma, t.ebn0_db
    );
    Ok(())
}

fn cmd_roundtrip(mut s: Settings) -> Result<()> {
    let cfg = simulated_chain(&mut s)?;
    let eps: f64 = s.get_or("eps", 0.0)?;
    if !(0.0..=1.0).contains(&eps) {
        bail!("eps = {eps} outside [0, 1]");
    }
    let seed = s.get_or("seed", 1u64)?;
    let chain = s.get_or("chain", 0u64)?;
    let dec = decoder(&s)?;
    let opts = decode_options(&s)?;
    let code = ChainCode::sample(&cfg, seed, chain)?;
    let info = chain_info(&code, seed, chain);
    let cw = code.encode(&info)?;
    let rx = bec_transmit(
        &code,
        &cw,
        eps,
        &mut block_stream(seed, chain, 0, Role::Channel),
    );
    let out = decode_with(&code, &rx, dec, &opts)?;
    for (i, (x, &b)) in out.info.iter().zip(&info).enumerate() {
        if x.bit().is_some_and(|d| d != b) {
            bail!("decoded bit {i} disagrees with the transmitted bit");
        }
    }
    let erased = out.erased();
    println!(
        "info bits = {}, transmitted = {}, rate = {}, erased after decoding = {}, ber = {:e}, sweeps = {}, visits = {}",
        info.len(),
        code.transmitted_len(),
        code.measured_rate(),
        erased,
        erased as f64 / info.len() as f64,
        out.sweeps,
        out.visits
    );
    if let Some(path) = s.raw("trace") {
        let trace = Trace {
            config: cfg,
            seed,
            chain,
            codeword: Some(cw),
            received: rx,
        };
        let mut w = create(path)?;
        write_trace(&mut w, &trace)?;
        w.flush()?;
    }
    Ok(())
}
