//! The `scatport` command line: config ingestion, orchestration and CSV output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ManifestHeader, RunConfig, RunManifest};
use crate::error::Error;
use crate::experiments::{sweep_disorder, sweep_n, SweepRecord};
use crate::protocol::{average_performance, Teleporter};
use crate::scatter::{is_identity_channel, solve_scattering, verify_closure, KrausSet};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "scatport", version, about = "Teleportation between scattering centers driven by unpolarized mediators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML), or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files and manifests.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve one scattering event and print the Kraus set summary.
    Solve,
    /// Run the protocol for one state and/or a sampled average.
    Protocol,
    /// Sweep mediator counts and couplings.
    Sweep,
    /// Wavevector-disorder Monte Carlo.
    Disorder,
    /// Run the invariant suite.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Protocol => "protocol",
            Command::Sweep => "sweep",
            Command::Disorder => "disorder",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
}

/// Failure carrying the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_USAGE } else { EXIT_NUMERICAL };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(usage(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<i32, Failure> {
    if cli.command == Command::Selftest {
        return Ok(cmd_selftest());
    }
    let mut config = load_config(cli)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    match cli.command {
        Command::Solve => cmd_solve(&config),
        Command::Protocol => cmd_protocol(cli, &config),
        Command::Sweep => cmd_sweep(cli, &config),
        Command::Disorder => cmd_disorder(cli, &config),
        Command::Selftest => unreachable!("handled above"),
    }
    .map(|()| EXIT_OK)
}

fn load_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| usage(format!("`{}` needs --config", cli.command.name())))?;
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> std::result::Result<&'a T, Failure> {
    s.as_ref().ok_or_else(|| usage(format!("config has no [{name}] section")))
}

fn cmd_selftest() -> i32 {
    let checks = selftest::run_all();
    for c in &checks {
        println!("{c}");
    }
    if selftest::all_passed(&checks) {
        println!("selftest: all checks passed");
        EXIT_OK
    } else {
        println!("selftest: FAILED");
        EXIT_NUMERICAL
    }
}

fn cmd_solve(config: &RunConfig) -> std::result::Result<(), Failure> {
    let solve = section(&config.solve, "solve")?;
    let cfg = config.physics.scatter_config(solve.j_over_v)?;
    let ks = solve_scattering(&cfg)?;
    let residual = verify_closure(&ks);
    let res = cfg.check_resonance();
    println!("s = {}, kind = {}, dispersion = {}", cfg.spin, cfg.kind.name(), cfg.dispersion.name());
    println!(
        "J/v = [{}, {}, {}], k d12/pi = {}, k d23/pi = {}",
        fmt_g(solve.j_over_v[0]),
        fmt_g(solve.j_over_v[1]),
        fmt_g(solve.j_over_v[2]),
        fmt_g(config.physics.kd12_over_pi),
        fmt_g(config.physics.kd23_over_pi)
    );
    println!("resonance: {}", if res.ok { "yes" } else { "no" });
    println!("closure residual: {residual:.2e}");
    if is_identity_channel(&ks, 1e-14) {
        println!("identity channel");
    } else {
        let d = ks.centers_dim();
        let mixed = nalgebra::DMatrix::<crate::spinops::C64>::identity(d, d) / crate::spinops::C64::new(d as f64, 0.0);
        let p = crate::channel::unnormalized_map(&ks, &mixed).trace().re;
        println!("transmission probability, maximally mixed centers: {}", fmt_g(p));
    }
    if solve.dump {
        print!("{}", dump_kraus(&ks));
    }
    if residual > 1e-10 {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("closure residual {residual:.2e} exceeds 1e-10"),
        });
    }
    Ok(())
}

fn dump_kraus(ks: &KrausSet) -> String {
    let label = |i: usize| if i == 0 { "up" } else { "down" };
    let mut out = String::new();
    for (name, get) in [("T", KrausSet::t as fn(&KrausSet, usize, usize) -> &_), ("R", KrausSet::r)] {
        for i in 0..2 {
            for o in 0..2 {
                let _ = writeln!(out, "{name}[in={}, out={}]:", label(i), label(o));
                let m = get(ks, i, o);
                for r in 0..m.nrows() {
                    let row: Vec<String> = (0..m.ncols())
                        .map(|c| {
                            let z = m[(r, c)];
                            let sign = if z.im.is_sign_negative() { "" } else { "+" };
                            format!("{}{sign}{}i", fmt_g(z.re), fmt_g(z.im))
                        })
                        .collect();
                    let _ = writeln!(out, "  {}", row.join(" "));
                }
            }
        }
    }
    out
}

fn cmd_protocol(cli: &Cli, config: &RunConfig) -> std::result::Result<(), Failure> {
    let pc = section(&config.protocol, "protocol")?;
    let template = pc.template(&config.physics)?;
    let spin = template.spin;
    let teleporter = Teleporter::prepare(&template)?;
    let mut header = vec!["s", "kind", "dispersion", "jb_over_v", "jc_over_v", "n23", "n12"];
    let mut row = vec![
        fmt_g(spin.value()),
        config.physics.kind.name().to_string(),
        config.physics.dispersion.name().to_string(),
        fmt_g(pc.jb_over_v),
        fmt_g(pc.jc_over_v),
    ];
    let (mut n23, mut n12) = (pc.n23, pc.n12);
    let mut table = Vec::new();
    let mut single = Vec::new();
    if let Some(state) = &pc.state {
        let phi = state.to_state(spin)?;
        let result = if pc.converge {
            let run = teleporter.run_to_convergence(&phi)?;
            n23 = run.n23;
            n12 = run.n12;
            run.result
        } else {
            teleporter.run(&phi)?
        };
        table.push(("F", fmt_g(result.fidelity)));
        table.push(("P", fmt_g(result.success_probability)));
        table.push(("P step (b)", fmt_g(result.stage_probabilities[0])));
        table.push(("P step (c)", fmt_g(result.stage_probabilities[1])));
        header.extend(["F", "P", "P_b", "P_c"]);
        single = vec![
            fmt_g(result.fidelity),
            fmt_g(result.success_probability),
            fmt_g(result.stage_probabilities[0]),
            fmt_g(result.stage_probabilities[1]),
        ];
    }
    row.push(n23.to_string());
    row.push(n12.to_string());
    row.extend(single);
    if let Some(avg) = &pc.average {
        let st = average_performance(&template, avg.sampler, avg.samples, avg.seed)?;
        table.push(("mean F", fmt_g(st.mean_fidelity)));
        table.push(("mean P", fmt_g(st.mean_probability)));
        table.push(("stderr F", fmt_g(st.stderr_fidelity)));
        table.push(("stderr P", fmt_g(st.stderr_probability)));
        table.push(("failed samples", st.failures.to_string()));
        header.extend(["sampler", "samples", "seed", "mean_F", "mean_P", "stderr_F", "stderr_P"]);
        row.extend([
            avg.sampler.name().to_string(),
            avg.samples.to_string(),
            avg.seed.to_string(),
            fmt_g(st.mean_fidelity),
            fmt_g(st.mean_probability),
            fmt_g(st.stderr_fidelity),
            fmt_g(st.stderr_probability),
        ]);
    }
    println!("s = {spin}, n23 = {n23}, n12 = {n12}");
    for (k, v) in &table {
        println!("{k:<16} {v}");
    }
    let csv = csv_text(&header, &[row])?;
    match &cli.out {
        Some(dir) => {
            let paths = write_outputs(dir, "protocol", &csv, cli.command, config)?;
            println!("wrote {}", paths.join(", "));
        }
        None => {
            println!();
            print!("{csv}");
        }
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, config: &RunConfig) -> std::result::Result<(), Failure> {
    let dir = out_dir(cli)?;
    let spec = section(&config.sweep, "sweep")?.spec(&config.physics)?;
    let records = sweep_n(&spec)?;
    let header = [
        "s", "kind", "dispersion", "j_over_v", "n23", "n12", "mean_F", "mean_P", "stderr_F", "stderr_P", "norm_F", "norm_P",
    ];
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt_g(r.spin.value()),
                r.kind.name().to_string(),
                r.dispersion.name().to_string(),
                fmt_g(r.j_over_v),
                r.n23.to_string(),
                r.n12.to_string(),
            ];
            row.extend(stat_columns(r));
            row
        })
        .collect();
    warn_flagged(&records);
    let paths = write_outputs(dir, "sweep", &csv_text(&header, &rows)?, cli.command, config)?;
    println!("{} rows; wrote {}", rows.len(), paths.join(", "));
    Ok(())
}

fn cmd_disorder(cli: &Cli, config: &RunConfig) -> std::result::Result<(), Failure> {
    let dir = out_dir(cli)?;
    let dc = section(&config.disorder, "disorder")?;
    let base = dc.base(&config.physics)?;
    let mut records = Vec::new();
    for spec in dc.specs() {
        records.extend(sweep_disorder(&base, &spec, &dc.dk_over_k0)?);
    }
    let header = [
        "s", "kind", "dispersion", "j2_over_v", "n23", "n12", "dk_over_k0", "f3b", "f1c", "mean_F", "mean_P", "stderr_F",
        "stderr_P", "norm_F", "norm_P",
    ];
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt_g(r.spin.value()),
                r.kind.name().to_string(),
                r.dispersion.name().to_string(),
                fmt_g(r.j_over_v),
                r.n23.to_string(),
                r.n12.to_string(),
                fmt_g(r.dk_over_k0),
                fmt_g(r.f3b),
                fmt_g(r.f1c),
            ];
            row.extend(stat_columns(r));
            row
        })
        .collect();
    warn_flagged(&records);
    let paths = write_outputs(dir, "disorder", &csv_text(&header, &rows)?, cli.command, config)?;
    println!("{} rows; wrote {}", rows.len(), paths.join(", "));
    Ok(())
}

fn stat_columns(r: &SweepRecord) -> [String; 6] {
    [
        fmt_g(r.stats.mean_fidelity),
        fmt_g(r.stats.mean_probability),
        fmt_g(r.stats.stderr_fidelity),
        fmt_g(r.stats.stderr_probability),
        fmt_g(r.norm_f),
        fmt_g(r.norm_p),
    ]
}

fn warn_flagged(records: &[SweepRecord]) {
    for r in records.iter().filter(|r| r.flagged) {
        eprintln!(
            "warning: no successful trajectories at J/v = {}, n23 = {}, n12 = {}, dk/k0 = {}",
            fmt_g(r.j_over_v),
            r.n23,
            r.n12,
            fmt_g(r.dk_over_k0)
        );
    }
}

fn out_dir(cli: &Cli) -> std::result::Result<&Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| usage(format!("`{}` needs --out DIR", cli.command.name())))
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> std::result::Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| usage(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| usage(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| usage(format!("csv: {e}")))
}

/// Writes `<stem>.csv` and `<stem>.manifest.toml` into `dir` through
/// temporary files, so a failed run leaves neither behind.
fn write_outputs(
    dir: &Path,
    stem: &str,
    csv: &str,
    command: Command,
    config: &RunConfig,
) -> std::result::Result<Vec<String>, Failure> {
    let csv_name = format!("{stem}.csv");
    let manifest_name = format!("{stem}.manifest.toml");
    let seeds = config.seeds();
    let manifest = RunManifest {
        manifest: ManifestHeader {
            command: command.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            seed: if seeds.len() == 1 { seeds.first().copied() } else { None },
            outputs: vec![csv_name.clone()],
        },
        config: config.clone(),
    };
    let manifest_text = manifest.to_toml_string()?;
    fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    let files = [(dir.join(&csv_name), csv), (dir.join(&manifest_name), manifest_text.as_str())];
    let temps: Vec<PathBuf> = files.iter().map(|(p, _)| p.with_extension("partial")).collect();
    let result = (|| -> std::io::Result<()> {
        for ((_, text), tmp) in files.iter().zip(&temps) {
            fs::write(tmp, text)?;
        }
        for ((path, _), tmp) in files.iter().zip(&temps) {
            fs::rename(tmp, path)?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        for tmp in &temps {
            let _ = fs::remove_file(tmp);
        }
        return Err(usage(format!("cannot write output in {}: {e}", dir.display())));
    }
    Ok(files.iter().map(|(p, _)| p.display().to_string()).collect())
}

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form
/// outside [1e-4, 1e12).
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.125), "0.125");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1e-7), "1e-07");
        assert_eq!(fmt_g(-2.5e13), "-2.5e+13");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.0000138), "1.38e-05");
        assert_eq!(fmt_g(999999999999.5), "1e+12");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["scatport", "sweep"]), EXIT_USAGE);
        assert_eq!(run(["scatport", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["scatport", "selftest", "--threads", "0"]), EXIT_USAGE);
    }
}
