//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 on usage or input errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classify::{classify, ClassifyConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::report::{
    AnalysisRequest, FamilyEcho, FullAnalysis, Report, SchattenOracleRecord, Timings, VerifyResult,
};
use crate::scalarseq::{parse_family_document, read_table, registry, FamilyArgs, ScalarSequence};
use crate::schatten::{
    asymptotic_lemma_check, cutoff_from, decide_grid, default_shifts, jump_witness, schatten_oracle_suite,
    LemmaReport,
};
use crate::shift::SphericalShift;
use crate::spectra::{plot_rows, spectral_report, SpectraConfig};
use crate::truncation::{verify_shift, verify_suite, SuiteConfig};
use crate::verdict::Verdict;

/// Environment variable naming the directory for reports without an absolute `--out`.
pub const OUT_DIR_VAR: &str = "SPHERSHIFT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "sphershift", version, about = "Spherical multi-variable weighted shifts")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Add wall-clock timings to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the registered families.
    Families {
        #[arg(long, default_value_t = 2)]
        m: u32,
    },
    /// Spectra, Schatten verdicts, classification and oracles for one family.
    Analyze(AnalyzeArgs),
    /// Spectral radii, essential shell and point-spectrum boundary.
    Spectrum(SpectrumArgs),
    /// Schatten-class verdicts of the cross-commutators.
    Schatten(SchattenArgs),
    /// Consistency of the p > m cut-off over a grid.
    Cutoff(SchattenArgs),
    /// Structural classification.
    Classify(ClassifyArgs),
    /// Finite-section oracle suite over every registered family.
    Verify(VerifyArgs),
    /// Asymptotic lattice-sum windows.
    Lemmas(LemmaArgs),
    /// CSV of delta^2, gamma, ln bbeta and B_q diagonals.
    DumpSequence(DumpArgs),
}

#[derive(Args, Debug, Clone)]
struct FamilyOpts {
    #[arg(long)]
    family: Option<String>,
    /// Number of variables.
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Kernel parameter of the `hp` family.
    #[arg(long)]
    p: Option<String>,
    /// Constant weight of the `constant` family.
    #[arg(long)]
    c: Option<String>,
    /// Coefficients of gamma (lowest degree first) for `polynomial`.
    #[arg(long = "gamma-coeffs")]
    gamma_coeffs: Option<String>,
    /// One-column CSV of delta^2 values for `tabulated`.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Tail rule for `tabulated`: error, last, constant:V, rational:N;D.
    #[arg(long)]
    tail: Option<String>,
    /// Family document (`key = value` lines); flags override it.
    #[arg(long = "family-file")]
    family_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    family: FamilyOpts,
    #[arg(long = "K", default_value_t = 100_000)]
    k: usize,
    #[arg(long = "J", default_value_t = 60)]
    j: usize,
    #[arg(long = "N", default_value_t = 10)]
    n: usize,
    #[arg(long = "P", default_value_t = 8)]
    p_order: usize,
    #[arg(long = "Q", default_value_t = 6)]
    q_order: usize,
    /// Horizon of the exact (rational) classification checks.
    #[arg(long = "exact-K", default_value_t = 200)]
    exact_k: usize,
    #[arg(long = "p-grid", value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    family: FamilyOpts,
    #[arg(long = "K", default_value_t = 100_000)]
    k: usize,
    #[arg(long = "J", default_value_t = 60)]
    j: usize,
    /// Also write `j,outer,convergence,inner` CSV here.
    #[arg(long = "plot-data")]
    plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SchattenArgs {
    #[command(flatten)]
    family: FamilyOpts,
    #[arg(long = "K", default_value_t = 100_000)]
    k: usize,
    /// Schatten exponents (`inf` allowed).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Attach the jump witness sums for l = 1..=LEVELS.
    #[arg(long)]
    witness_levels: Option<u32>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    family: FamilyOpts,
    /// Highest subnormality order.
    #[arg(long = "P", default_value_t = 8)]
    p_order: usize,
    /// Highest q-isometry / q-expansion order.
    #[arg(long = "Q", default_value_t = 6)]
    q_order: usize,
    /// Horizon of the exact checks.
    #[arg(long = "K", default_value_t = 200)]
    k: usize,
    /// Horizon of the sampled checks.
    #[arg(long = "sample-K", default_value_t = 100_000)]
    sample_k: usize,
    /// Keep the counterexample witnesses in the report.
    #[arg(long)]
    witness: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    m: Vec<usize>,
    #[arg(long = "N", default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Relative tolerance of the Schatten-norm oracle.
    #[arg(long = "schatten-tol", default_value_t = 1e-8)]
    schatten_tol: f64,
    #[arg(long = "schatten-p", value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    schatten_p: Vec<f64>,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    p: Vec<f64>,
    #[arg(long = "k-range", default_value = "100:10000")]
    k_range: String,
    /// Largest accepted max/min ratio.
    #[arg(long, default_value_t = 5.0)]
    bound: f64,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[command(flatten)]
    family: FamilyOpts,
    #[arg(long = "K", default_value_t = 1000)]
    k: usize,
    #[arg(long = "Q", default_value_t = 6)]
    q_order: usize,
}

/// Default Schatten grid `{1, m/2 + 1/2, m - 1/2, m, m + 1/4, m + 1}`, sorted and deduplicated.
pub fn default_p_grid(m: usize) -> Vec<f64> {
    let mf = m as f64;
    normalise_grid(vec![1.0, mf / 2.0 + 0.5, mf - 0.5, mf, mf + 0.25, mf + 1.0])
}

fn normalise_grid(mut grid: Vec<f64>) -> Vec<f64> {
    grid.retain(|p| *p >= 1.0);
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    grid
}

enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<Output, Failure>;

/// What a command produced and whether its checks passed.
struct Output {
    body: String,
    extension: &'static str,
    pass: bool,
}

/// Runs the command line; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let name = command_name(&cli.command);
    match execute(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, name, &out, stdout, stderr) {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
            if out.pass {
                0
            } else {
                let _ = writeln!(stderr, "{name}: verification failed");
                1
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Families { .. } => "families",
        Command::Analyze(_) => "analyze",
        Command::Spectrum(_) => "spectrum",
        Command::Schatten(_) => "schatten",
        Command::Cutoff(_) => "cutoff",
        Command::Classify(_) => "classify",
        Command::Verify(_) => "verify",
        Command::Lemmas(_) => "lemmas",
        Command::DumpSequence(_) => "dump-sequence",
    }
}

/// `--out` resolved against the output directory variable; `None` means stdout.
fn output_path(out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from);
    match (out, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) => Some(d.join(default_name)),
        (None, None) => None,
    }
}

fn emit(cli: &Cli, name: &str, out: &Output, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match output_path(cli.out.as_deref(), &format!("{name}.{}", out.extension)) {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&path, &out.body)?;
            writeln!(stderr, "wrote {}", path.display())?;
        }
        None => stdout.write_all(out.body.as_bytes())?,
    }
    Ok(())
}

fn exec_of(cli: &Cli) -> Exec {
    if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn execute(cli: &Cli) -> CmdResult {
    let exec = exec_of(cli);
    let mut timings = Timings::new(cli.timings);
    match &cli.command {
        Command::Families { m } => families(cli, *m),
        Command::Analyze(a) => analyze(cli, a, exec, &mut timings),
        Command::Spectrum(a) => spectrum(cli, a, exec, &mut timings),
        Command::Schatten(a) => schatten(cli, a, exec, &mut timings, false),
        Command::Cutoff(a) => schatten(cli, a, exec, &mut timings, true),
        Command::Classify(a) => classify_cmd(cli, a, exec, &mut timings),
        Command::Verify(a) => verify(cli, a, exec, &mut timings),
        Command::Lemmas(a) => lemmas(cli, a, exec, &mut timings),
        Command::DumpSequence(a) => dump(a),
    }
}

fn positive(name: &str, v: usize) -> std::result::Result<(), Failure> {
    if v == 0 {
        return Err(Failure::Usage(format!("--{name} must be positive")));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> std::result::Result<(), Failure> {
    match grid.iter().find(|p| p.is_nan() || **p < 1.0) {
        Some(p) => Err(Failure::Usage(format!("Schatten exponents must be >= 1, got {p}"))),
        None => Ok(()),
    }
}

/// Builds the sequence and its echo from the family flags.
fn load_family(opts: &FamilyOpts) -> std::result::Result<(ScalarSequence, FamilyEcho), Failure> {
    if opts.m == 0 {
        return Err(Failure::Usage("--m must be positive".into()));
    }
    let mut args = match &opts.family_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            let base = path.parent().unwrap_or(Path::new("."));
            parse_family_document(&text, base)?
        }
        None => FamilyArgs {
            m: opts.m,
            ..FamilyArgs::default()
        },
    };
    match (&opts.family, args.family.is_empty()) {
        (Some(f), _) => args.family = f.clone(),
        (None, true) => return Err(Failure::Usage("--family or --family-file is required".into())),
        (None, false) => {}
    }
    if opts.family_file.is_none() || opts.m != 2 {
        args.m = opts.m;
    }
    for (slot, flag) in [(&mut args.p, &opts.p), (&mut args.c, &opts.c), (&mut args.gamma_coeffs, &opts.gamma_coeffs), (&mut args.tail, &opts.tail)] {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    if let Some(path) = &opts.table {
        let table = read_table(path).map_err(|e| Failure::Usage(format!("cannot read table {}: {e}", path.display())))?;
        args.table = Some(table);
    }
    let spec = args.build()?;
    let seq = ScalarSequence::new(spec)?;
    let echo = FamilyEcho {
        name: args.family.clone(),
        kind: seq.spec().name().to_string(),
        parameters: seq.spec().parameters(),
    };
    Ok((seq, echo))
}

fn request(echo: Option<FamilyEcho>, m: &[usize], horizons: &[(&str, usize)]) -> AnalysisRequest {
    AnalysisRequest {
        family: echo,
        m: m.to_vec(),
        horizons: horizons.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ..AnalysisRequest::default()
    }
}

fn json<R: Serialize>(command: &str, req: AnalysisRequest, result: R, timings: &mut Timings, pass: bool) -> Output {
    let mut report = Report::new(command, req, result);
    report.timings = std::mem::take(timings).finish();
    Output {
        body: report.to_json(),
        extension: "json",
        pass,
    }
}

fn csv_output<S: Serialize>(rows: &[S], pass: bool) -> std::result::Result<Output, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Output {
        body: String::from_utf8(bytes).expect("csv output is utf-8"),
        extension: "csv",
        pass,
    })
}

fn no_csv(cli: &Cli, name: &str) -> std::result::Result<(), Failure> {
    if cli.format == Format::Csv {
        return Err(Failure::Usage(format!("`{name}` has no CSV form; use --format json")));
    }
    Ok(())
}

#[derive(Serialize)]
struct FamilyRow {
    name: String,
    kind: String,
    parameters: String,
    analytic: bool,
}

fn families(cli: &Cli, m: u32) -> CmdResult {
    if m == 0 {
        return Err(Failure::Usage("--m must be positive".into()));
    }
    let rows: Vec<FamilyRow> = registry(m)
        .into_iter()
        .map(|(name, spec)| FamilyRow {
            kind: spec.name().to_string(),
            parameters: spec
                .parameters()
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";"),
            analytic: spec.asymptotics().is_some(),
            name,
        })
        .collect();
    if cli.format == Format::Csv {
        return csv_output(&rows, true);
    }
    let req = request(None, &[m as usize], &[]);
    Ok(json("families", req, rows, &mut Timings::new(false), true))
}

fn analyze(cli: &Cli, a: &AnalyzeArgs, exec: Exec, t: &mut Timings) -> CmdResult {
    no_csv(cli, "analyze")?;
    for (n, v) in [("K", a.k), ("J", a.j), ("N", a.n), ("P", a.p_order), ("Q", a.q_order), ("exact-K", a.exact_k)] {
        positive(n, v)?;
    }
    let (seq, echo) = load_family(&a.family)?;
    seq.ensure_horizon(2 * a.k + 1)?;
    let m = a.family.m as usize;
    let grid = normalise_grid(a.p_grid.clone().unwrap_or_else(|| default_p_grid(m)));
    check_grid(a.p_grid.as_deref().unwrap_or(&grid))?;
    let spectra_cfg = SpectraConfig {
        horizon: a.k,
        j_points: a.j,
        ..SpectraConfig::default()
    };
    let spectra = t.time("spectra", || spectral_report(&seq, m, &spectra_cfg, exec))?;
    let schatten = t.time("schatten", || decide_grid(&seq, m, &grid, a.k, exec))?;
    let cutoff = cutoff_from(&seq, m, &schatten);
    let cfg = ClassifyConfig {
        horizon: a.exact_k,
        sample_horizon: a.k,
        subnormal_order: a.p_order,
        max_order: a.q_order,
    };
    let classification = t.time("classify", || classify(&seq, &cfg, exec))?;
    let suite = SuiteConfig {
        arities: vec![m],
        n_max: a.n,
        tolerance: a.tol,
        ..SuiteConfig::default()
    };
    let shift = SphericalShift::new(m, seq.clone())?;
    let oracles = t.time("oracles", || verify_shift(&shift, &echo.name, &suite))?;
    let oracles_pass = oracles.iter().all(|o| o.pass);
    let mut req = request(
        Some(echo),
        &[m],
        &[("K", a.k), ("J", a.j), ("N", a.n), ("P", a.p_order), ("Q", a.q_order), ("exact_K", a.exact_k)],
    );
    req.p_grid = grid;
    req.tolerances.insert("oracle".into(), a.tol);
    let pass = oracles_pass && spectra.ordered && cutoff.consistent;
    let result = FullAnalysis {
        spectra,
        schatten,
        cutoff,
        classification,
        oracles,
        oracles_pass,
    };
    Ok(json("analyze", req, result, t, pass))
}

fn spectrum(cli: &Cli, a: &SpectrumArgs, exec: Exec, t: &mut Timings) -> CmdResult {
    no_csv(cli, "spectrum")?;
    positive("K", a.k)?;
    positive("J", a.j)?;
    let (seq, echo) = load_family(&a.family)?;
    seq.ensure_horizon(2 * a.k + 1)?;
    let m = a.family.m as usize;
    let cfg = SpectraConfig {
        horizon: a.k,
        j_points: a.j,
        ..SpectraConfig::default()
    };
    let report = t.time("spectra", || spectral_report(&seq, m, &cfg, exec))?;
    if let Some(path) = &a.plot_data {
        #[derive(Serialize)]
        struct Row {
            j: usize,
            outer: f64,
            convergence: f64,
            inner: f64,
        }
        let rows: Vec<Row> = plot_rows(&report.radii)
            .into_iter()
            .map(|(j, outer, convergence, inner)| Row {
                j,
                outer,
                convergence,
                inner,
            })
            .collect();
        let body = csv_output(&rows, true)?.body;
        let path = output_path(Some(path), "").expect("explicit path");
        std::fs::write(&path, body).map_err(Error::from)?;
    }
    let pass = report.ordered && report.radii.m_infinity.agrees;
    let req = request(Some(echo), &[m], &[("K", a.k), ("J", a.j)]);
    Ok(json("spectrum", req, report, t, pass))
}

fn schatten(cli: &Cli, a: &SchattenArgs, exec: Exec, t: &mut Timings, cutoff_only: bool) -> CmdResult {
    positive("K", a.k)?;
    let (seq, echo) = load_family(&a.family)?;
    seq.ensure_horizon(a.k + 1)?;
    let m = a.family.m as usize;
    if let Some(g) = &a.grid {
        check_grid(g)?;
    }
    let grid = normalise_grid(a.grid.clone().unwrap_or_else(|| default_p_grid(m)));
    let verdicts = t.time("schatten", || decide_grid(&seq, m, &grid, a.k, exec))?;
    let cutoff = cutoff_from(&seq, m, &verdicts);
    let name = if cutoff_only { "cutoff" } else { "schatten" };
    let mut req = request(Some(echo), &[m], &[("K", a.k)]);
    req.p_grid = grid.clone();
    if cli.format == Format::Csv {
        return csv_output(&cutoff.entries, cutoff.consistent);
    }
    let pass = cutoff.consistent;
    if cutoff_only {
        return Ok(json(name, req, cutoff, t, pass));
    }
    #[derive(Serialize)]
    struct SchattenResult {
        verdicts: Vec<crate::schatten::SchattenVerdict>,
        cutoff: crate::schatten::CutoffReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        jump_witness: Option<BTreeMap<String, Vec<crate::schatten::JumpWitness>>>,
    }
    let jump_witness = match a.witness_levels {
        Some(levels) => {
            let mut out = BTreeMap::new();
            for &p in grid.iter().filter(|p| p.is_finite()) {
                out.insert(format!("{p}"), jump_witness(&seq, m, p, 1..=levels, exec)?);
            }
            Some(out)
        }
        None => None,
    };
    Ok(json(
        name,
        req,
        SchattenResult {
            verdicts,
            cutoff,
            jump_witness,
        },
        t,
        pass,
    ))
}

fn strip(v: &mut Verdict) {
    v.witness = None;
}

fn classify_cmd(cli: &Cli, a: &ClassifyArgs, exec: Exec, t: &mut Timings) -> CmdResult {
    no_csv(cli, "classify")?;
    for (n, v) in [("P", a.p_order), ("Q", a.q_order), ("K", a.k), ("sample-K", a.sample_k)] {
        positive(n, v)?;
    }
    let (seq, echo) = load_family(&a.family)?;
    seq.ensure_horizon(a.k + a.q_order.max(a.p_order) + 1)?;
    let cfg = ClassifyConfig {
        horizon: a.k,
        sample_horizon: a.sample_k,
        subnormal_order: a.p_order,
        max_order: a.q_order,
    };
    let mut c = t.time("classify", || classify(&seq, &cfg, exec))?;
    if !a.witness {
        strip(&mut c.compact);
        strip(&mut c.essentially_normal);
        strip(&mut c.hyponormal);
        c.q_expansion.values_mut().for_each(strip);
        if let Some(s) = c.subnormal.as_mut() {
            s.witness = None;
        }
    }
    let req = request(
        Some(echo),
        &[a.family.m as usize],
        &[("K", a.k), ("P", a.p_order), ("Q", a.q_order), ("sample_K", a.sample_k)],
    );
    Ok(json("classify", req, c, t, true))
}

fn verify(cli: &Cli, a: &VerifyArgs, exec: Exec, t: &mut Timings) -> CmdResult {
    positive("N", a.n)?;
    if a.m.contains(&0) {
        return Err(Failure::Usage("--m must be positive".into()));
    }
    check_grid(&a.schatten_p)?;
    let cfg = SuiteConfig {
        arities: a.m.clone(),
        n_max: a.n,
        tolerance: a.tol,
        ..SuiteConfig::default()
    };
    let operators = t.time("operators", || verify_suite(&cfg, exec))?;
    let schatten: Vec<SchattenOracleRecord> = t
        .time("schatten", || schatten_oracle_suite(&a.m, a.n, &a.schatten_p, exec))?
        .into_iter()
        .map(|o| SchattenOracleRecord {
            pass: o.relative_deviation <= a.schatten_tol,
            oracle: o,
        })
        .collect();
    let failures = operators.iter().filter(|r| !r.pass).count() + schatten.iter().filter(|r| !r.pass).count();
    let max_deviation = operators.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let pass = failures == 0;
    if cli.format == Format::Csv {
        return csv_output(&operators, pass);
    }
    let mut req = request(None, &a.m, &[("N", a.n)]);
    req.p_grid = a.schatten_p.clone();
    req.tolerances.insert("operator".into(), a.tol);
    req.tolerances.insert("schatten_relative".into(), a.schatten_tol);
    let result = VerifyResult {
        pass,
        failures,
        max_deviation,
        operators,
        schatten,
    };
    Ok(json("verify", req, result, t, pass))
}

fn parse_k_range(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("--k-range expects `a:b` with 1 <= a <= b, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn lemmas(cli: &Cli, a: &LemmaArgs, exec: Exec, t: &mut Timings) -> CmdResult {
    let range = parse_k_range(&a.k_range)?;
    check_grid(&a.p)?;
    if a.p.iter().any(|p| !p.is_finite()) {
        return Err(Failure::Usage("lemma exponents must be finite".into()));
    }
    if a.m.iter().any(|&m| m < 2) {
        return Err(Failure::Usage("lemma windows need m >= 2".into()));
    }
    let shifts = default_shifts();
    let mut reports: Vec<LemmaReport> = Vec::new();
    for &m in &a.m {
        for &p in &a.p {
            reports.push(t.time("lemmas", || asymptotic_lemma_check(m, p, range, &shifts, exec))?);
        }
    }
    let pass = reports.iter().all(|r| r.within(a.bound));
    if cli.format == Format::Csv {
        #[derive(Serialize)]
        struct Row<'a> {
            m: usize,
            p: f64,
            lemma: &'a str,
            s: &'a str,
            min: f64,
            max: f64,
            spread: f64,
        }
        let rows: Vec<Row> = reports
            .iter()
            .flat_map(|r| {
                r.windows.iter().map(move |w| Row {
                    m: r.m,
                    p: r.p,
                    lemma: &w.lemma,
                    s: w.s.as_deref().unwrap_or(""),
                    min: w.min,
                    max: w.max,
                    spread: w.spread,
                })
            })
            .collect();
        return csv_output(&rows, pass);
    }
    let mut req = request(None, &a.m, &[("k_lo", range.0), ("k_hi", range.1)]);
    req.p_grid = a.p.clone();
    req.tolerances.insert("spread_bound".into(), a.bound);
    #[derive(Serialize)]
    struct LemmaResult {
        pass: bool,
        reports: Vec<LemmaReport>,
    }
    Ok(json("lemmas", req, LemmaResult { pass, reports }, t, pass))
}

fn dump(a: &DumpArgs) -> CmdResult {
    positive("K", a.k)?;
    let (seq, _) = load_family(&a.family)?;
    seq.ensure_horizon(a.k + a.q_order + 1)?;
    let m = a.family.m as usize;
    let shift = SphericalShift::new(m, seq.clone())?;
    let h = seq.clamp_horizon(a.k + 1) - 1;
    let logs = seq.log_bbeta_prefix(h)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string(), "delta2".into(), "gamma".into(), "log_bbeta".into()];
    header.extend((1..=a.q_order).map(|q| format!("bq_diag_{q}")));
    w.write_record(&header).map_err(Error::from)?;
    for (k, &log_b) in logs.iter().enumerate().take(h + 1) {
        let mut row = vec![
            k.to_string(),
            format!("{:e}", seq.delta2(k)?),
            format!("{:e}", (2.0 * log_b).exp()),
            format!("{:e}", log_b),
        ];
        for q in 1..=a.q_order {
            row.push(format!("{:e}", shift.bq_diag(k, q)?));
        }
        w.write_record(&row).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Output {
        body: String::from_utf8(bytes).expect("csv output is utf-8"),
        extension: "csv",
        pass: true,
    })
}
