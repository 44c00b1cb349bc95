//! Command-line front end.
//!
//! Exit codes: 0 success, 2 certification failure, 3 runtime assertion
//! failure, 4 I/O, parse or configuration error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Derivation, Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::fixedpoint::{required_plaintext_modulus, EncodedController};
use crate::homcrypt::wire::serialize_key;
use crate::homcrypt::{keygen, BackendParams, LeveledParams, LweParams};
use crate::poly::{Coeff, Polynomial};
use crate::runtime::{certify, Certificate};
use crate::simloop::{self, compare, seed_bytes, sweep, write_sweep_csv, Channel, Mode, SimOptions, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "encctl", version, about = "Encrypted dynamic controller toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, env = "ENCCTL_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize, encode and certify the controller; write the artifacts.
    Convert(Common),
    /// Check the backend parameters against the encoded controller.
    Certify(Common),
    /// Generate the secret key for the configured backend.
    Keygen {
        #[command(flatten)]
        common: Common,
        /// Overwrite an existing key file.
        #[arg(long)]
        force: bool,
    },
    /// Run the closed loop and write the trace and a summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
        /// Fail as soon as the encrypted output differs from the quantized one.
        #[arg(long)]
        assert_exact: bool,
        /// Record wall-clock time per step (makes traces run-dependent).
        #[arg(long)]
        timing: bool,
        /// Replace the plaintext modulus N.
        #[arg(long)]
        plaintext_modulus: Option<u64>,
        /// Run even if certification fails.
        #[arg(long)]
        skip_certification: bool,
    },
    /// Compare one channel of two trace files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "control")]
        channel: String,
        /// Write the per-step error series here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantization sweep against the nominal loop.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing quantization steps.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        #[arg(long, default_value = "quantized")]
        mode: String,
        #[arg(long)]
        steps: Option<u64>,
    },
}

/// Map an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AtStep { .. } => EXIT_RUNTIME,
        Error::CertificationFailed(_) => EXIT_CERTIFICATION,
        Error::ExactnessViolated { .. }
        | Error::PlaintextOverflow { .. }
        | Error::SignalBoundViolated { .. }
        | Error::StaleCiphertext
        | Error::Diverged { .. } => EXIT_RUNTIME,
        _ => EXIT_IO,
    }
}

fn hint(e: &Error) -> Option<&'static str> {
    Some(match e.root() {
        Error::PlaintextOverflow { .. } => "N is too small for the encoded controller; let it be sized automatically or check `encctl certify`",
        Error::SignalBoundViolated { .. } => "the loop left |v| <= M; raise fixed_point.bound or refine r",
        Error::Diverged { .. } => "the closed loop is unstable at this quantization",
        Error::CertificationFailed(_) => "see `encctl certify` for the failing margin",
        Error::DegenerateController => "the controller polynomial has no non-constant monomial",
        Error::HistoryNotDerivable { .. } => "start the controller from a zero state",
        Error::ExpansionBudgetExceeded { .. } => "raise controller.expansion_budget",
        Error::NoObservableDynamics => "the controller output does not depend on its state",
        _ => return None,
    })
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = hint(&e) {
                eprintln!("hint: {h}");
            }
            exit_code(&e)
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, Resolved)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = Some(seed);
    }
    let res = cfg.resolve()?;
    Ok((cfg, res))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Returns the exit code for successful runs that still report a failure.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Convert(common) => {
            let (cfg, res) = load(common)?;
            let enc = res.setup.encode()?;
            let cert = certify(&enc, &res.setup.backend);
            let report = convert_report(&res, &enc, &cert);
            write(&common.out, "realization.txt", realization_file(&res).as_bytes())?;
            write(&common.out, "encoded.txt", encoded_file(&enc).as_bytes())?;
            write(&common.out, "config.normalized.toml", cfg.normalized()?.to_toml_string()?.as_bytes())?;
            let path = write(&common.out, cfg.output.report(), report.as_bytes())?;
            print!("{report}");
            println!("report written to {}", path.display());
            Ok(if cert.passed() { EXIT_OK } else { EXIT_CERTIFICATION })
        }
        Command::Certify(common) => {
            let (_, res) = load(common)?;
            let cert = certify(&res.setup.encode()?, &res.setup.backend);
            println!("{cert}");
            Ok(if cert.passed() { EXIT_OK } else { EXIT_CERTIFICATION })
        }
        Command::Keygen { common, force } => {
            let (cfg, res) = load(common)?;
            let path = common.out.join(cfg.output.key());
            if path.exists() && !force {
                return Err(Error::Io(format!("{} exists; pass --force to replace it", path.display())));
            }
            let sk = keygen(&res.setup.backend.clone().with_seed(seed_bytes(res.seed)))?;
            let path = write(&common.out, cfg.output.key(), &serialize_key(&sk))?;
            println!("secret key written to {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Simulate { common, mode, steps, assert_exact, timing, plaintext_modulus, skip_certification } => {
            let (cfg, mut res) = load(common)?;
            let mode: Mode = match mode {
                Some(m) => m.parse()?,
                None => res.mode,
            };
            if let Some(n) = plaintext_modulus {
                res.setup.backend = with_modulus(&res.setup.backend, *n)?;
            }
            let opts = SimOptions {
                steps: steps.unwrap_or(res.steps),
                seed: res.seed,
                assert_exact: *assert_exact,
                timing: *timing,
                skip_certification: *skip_certification,
            };
            let trace = simloop::simulate(&res.setup, mode, &opts)?;
            let mut csv = Vec::new();
            trace.write_csv(&mut csv)?;
            let trace_path = write(&common.out, cfg.output.trace(), &csv)?;
            let cert = (mode == Mode::Encrypted).then(|| res.setup.encode().map(|e| certify(&e, &res.setup.backend)));
            let summary = simulation_summary(mode, &opts, &trace, cert.transpose()?.as_ref());
            write(&common.out, cfg.output.report(), summary.as_bytes())?;
            print!("{summary}");
            println!("trace written to {}", trace_path.display());
            Ok(EXIT_OK)
        }
        Command::Compare { a, b, channel, out } => {
            let read = |p: &PathBuf| -> Result<Trace> {
                let f = fs::File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                Trace::read_csv(f)
            };
            let channel: Channel = channel.parse()?;
            let cmp = compare(&read(a)?, &read(b)?, channel)?;
            println!("channel      {channel}");
            println!("steps        {}", cmp.series.len());
            println!("max_abs_err  {}", cmp.max_abs_err);
            match cmp.argmax {
                Some(t) => println!("argmax       t = {t}"),
                None => println!("argmax       (empty traces)"),
            }
            if let Some(path) = out {
                let mut text = String::from("t,abs_err\n");
                for (t, e) in cmp.series.iter().enumerate() {
                    let _ = writeln!(text, "{t},{e}");
                }
                fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(EXIT_OK)
        }
        Command::Sweep { common, r, mode, steps } => {
            let (cfg, res) = load(common)?;
            let mode: Mode = mode.parse()?;
            let r_values = r.clone().unwrap_or_else(|| res.sweep_r.clone());
            let opts = SimOptions::new(steps.unwrap_or(res.steps), res.seed);
            let rows = sweep(&res.setup, &r_values, mode, &opts)?;
            let mut csv = Vec::new();
            write_sweep_csv(&rows, &mut csv)?;
            let path = write(&common.out, cfg.output.sweep(), &csv)?;
            print!("{}", String::from_utf8_lossy(&csv));
            println!("sweep written to {}", path.display());
            Ok(EXIT_OK)
        }
    }
}

fn with_modulus(backend: &BackendParams, n: u64) -> Result<BackendParams> {
    Ok(match backend {
        BackendParams::Lwe(p) => BackendParams::Lwe(LweParams::new(p.n, n, p.noise_bound, p.seed)?),
        BackendParams::Leveled(p) => BackendParams::Leveled(LeveledParams::new(n, p.depth_cap, p.seed)?),
    })
}

/// Shortest decimal that survives 12 significant digits, e.g. `1e-6` rather
/// than `1.0000000000000002e-6`.
pub fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let plain = rounded.to_string();
    let sci = format!("{rounded:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

/// One-line rendering such as `0.3 * u[1]^2 - 0.2 * u[2] + y[2]`.
pub fn inline<C: Coeff + std::fmt::Display>(p: &Polynomial<C>, coeff: impl Fn(&C) -> String) -> String {
    let mut out = String::new();
    for (i, m) in p.terms().iter().enumerate() {
        let c = coeff(&m.coeff);
        let (neg, mag) = match c.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, c),
        };
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mut factors: Vec<String> = m
            .powers
            .iter()
            .map(|(v, &e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
            .collect();
        if mag != "1" || factors.is_empty() {
            factors.insert(0, mag);
        }
        out.push_str(&factors.join(" * "));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn realization_file(res: &Resolved) -> String {
    let io = &res.setup.controller;
    let mut s = String::new();
    let _ = writeln!(s, "# memory {}, inputs {}, feedthrough {}", io.memory(), io.inputs(), io.g.feedthrough());
    let _ = writeln!(s, "{}", io.g.poly());
    let _ = writeln!(s, "# initial history, lag 1 first");
    let _ = writeln!(s, "# u {:?}", io.history.u);
    let _ = writeln!(s, "# y {:?}", io.history.y);
    s
}

fn encoded_file(enc: &EncodedController) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# scale L = {}", short(enc.scale));
    let _ = writeln!(s, "{}", enc.int_poly);
    s
}

fn convert_report(res: &Resolved, enc: &EncodedController, cert: &Certificate) -> String {
    let io = &res.setup.controller;
    let fp = &res.setup.fixed_point;
    let mut s = String::new();
    let _ = writeln!(s, "== realization");
    match &res.derivation {
        Derivation::Linear(dec) => {
            let _ = writeln!(s, "source               linear state space, order {}", dec.order);
            let _ = writeln!(s, "observable dim n'    {}", dec.observable_dim);
            if dec.dropped_modes() > 0 {
                let _ = writeln!(s, "dropped modes        {} unobservable mode(s) removed", dec.dropped_modes());
            }
            let sv: Vec<String> = dec.singular_values.iter().map(|v| short(*v)).collect();
            let _ = writeln!(s, "singular values      {}", sv.join(", "));
            let _ = writeln!(s, "condition number     {}", short(dec.condition_number));
            for w in &dec.warnings {
                let _ = writeln!(s, "warning              {w}");
            }
            for k in 1..=io.memory() {
                let _ = writeln!(s, "{:<21}{}", format!("alpha_{k}"), short(io.g.alpha(k)));
            }
            for k in 1..=io.memory() {
                for j in 0..io.inputs() {
                    let name = if io.inputs() == 1 { format!("beta_{k}") } else { format!("beta_{k},{}", j + 1) };
                    let _ = writeln!(s, "{name:<21}{}", short(io.g.beta(k, j)));
                }
            }
        }
        Derivation::Canonical(sys) => {
            let _ = writeln!(s, "source               canonical form, {} states", sys.dim());
            let _ = writeln!(s, "observable dim n'    {}", sys.dim());
        }
        Derivation::Direct => {
            let _ = writeln!(s, "source               recursion given directly");
        }
    }
    let _ = writeln!(s, "memory m             {}", io.memory());
    let _ = writeln!(s, "g                    u = {}", inline(io.g.poly(), |c| short(*c)));
    let hu: Vec<String> = io.history.u.iter().map(|v| short(*v)).collect();
    let _ = writeln!(s, "initial u history    [{}]", hu.join(", "));
    let _ = writeln!(s);
    let _ = writeln!(s, "== encoding");
    let _ = writeln!(s, "r                    {}", short(fp.r));
    let _ = writeln!(s, "s                    {}", short(fp.s));
    let _ = writeln!(s, "signal bound M       {}", short(fp.bound));
    let _ = writeln!(s, "integer box          |v| <= {}", enc.box_bound());
    let _ = writeln!(s, "L                    {}", short(enc.scale));
    let _ = writeln!(s, "integer g            u' = {}", inline(&enc.int_poly, |c| c.to_string()));
    let _ = writeln!(s, "max degree           {}", enc.max_degree);
    let _ = writeln!(s, "required_capability  {}", enc.required_capability);
    let _ = writeln!(s, "plaintext_bound      {}", enc.plaintext_bound);
    let _ = writeln!(s, "required N           {}", required_plaintext_modulus(enc));
    let _ = writeln!(s, "error bound E        {}", short(enc.error_bound));
    let _ = writeln!(s);
    let _ = writeln!(s, "== certification");
    let _ = writeln!(s, "{cert}");
    s
}

fn simulation_summary(mode: Mode, opts: &SimOptions, trace: &Trace, cert: Option<&Certificate>) -> String {
    let mut s = String::new();
    let max = |f: &dyn Fn(&simloop::TraceRow) -> Option<f64>| {
        trace.rows.iter().filter_map(f).fold(None, |a: Option<f64>, v| Some(a.map_or(v.abs(), |a| a.max(v.abs()))))
    };
    let _ = writeln!(s, "mode                 {mode}");
    let _ = writeln!(s, "steps                {}", trace.rows.len());
    let _ = writeln!(s, "seed                 {}", opts.seed);
    if let Some(v) = max(&|r| r.control()) {
        let _ = writeln!(s, "max |u|              {}", short(v));
    }
    for k in 0..trace.outputs {
        if let Some(v) = max(&|r| r.y.get(k).copied()) {
            let _ = writeln!(s, "max |y{}|             {}", k + 1, short(v));
        }
    }
    if mode == Mode::Encrypted {
        let gap = max(&|r| Some(r.u_enc? - r.u_q?)).unwrap_or(0.0);
        let mismatches =
            trace.rows.iter().filter(|r| r.u_enc.is_some() && r.u_enc != r.u_q).count();
        let _ = writeln!(s, "max |u_enc - u_q|    {}", short(gap));
        let _ = writeln!(s, "exact steps          {} of {}", trace.rows.len() - mismatches, trace.rows.len());
        let min_budget =
            trace.rows.iter().filter_map(|r| r.noise_budget_bits).fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "min noise budget     {:.2} bits", min_budget);
    }
    if opts.timing {
        let us: Vec<u64> = trace.rows.iter().filter_map(|r| r.step_us).collect();
        if !us.is_empty() {
            let mean = us.iter().sum::<u64>() as f64 / us.len() as f64;
            let _ = writeln!(s, "step time            mean {mean:.1} us, max {} us", us.iter().max().unwrap());
        }
    }
    if let Some(c) = cert {
        let _ = writeln!(s, "plaintext margin     {:.2} bits", c.plaintext_margin_bits);
        let _ = writeln!(s, "noise margin         {:.2} bits", c.noise_margin_bits);
        let _ = writeln!(s, "certified            {}", c.passed());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.001 * 0.001), "1e-6");
        assert_eq!(short(1e-12), "1e-12");
        assert_eq!(short(0.5), "0.5");
        assert_eq!(short(-2.0), "-2");
        assert_eq!(short(250250.0), "250250");
    }

    #[test]
    fn inline_rendering() {
        let p = Polynomial::<f64>::parse("0.3 * u[1]^2\n-0.2 * u[2]\ny[2]").unwrap();
        assert_eq!(inline(&p, |c| short(*c)), "0.3 * u[1]^2 - 0.2 * u[2] + y[2]");
        let q = Polynomial::<f64>::parse("-1 * y[1]\n4").unwrap();
        assert_eq!(inline(&q, |c| short(*c)), "-y[1] + 4");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::CertificationFailed("x".into())), 2);
        assert_eq!(exit_code(&Error::StaleCiphertext.at_step(3)), 3);
        assert_eq!(exit_code(&Error::Config("x".into())), 4);
    }
}
