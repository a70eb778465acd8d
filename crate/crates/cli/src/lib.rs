//! The `trrip` command line: classify profiles, generate traces, simulate,
//! compare policies, sweep parameters and measure reuse distances.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use trrip_core::analysis::{parse_size, SweepAxis, SweepSpec};
use trrip_core::experiment::{
    self, merge_compare_configs, ClassifyOptions, ExperimentConfig, Outputs, ReuseStream, TemperatureSource,
    TraceSource,
};
use trrip_core::trace::{PatternSpec, TraceFormat};
use trrip_core::{CacheGeometry, Error, OverlapMode, PolicyConfig, ThresholdParams};

/// The bundled configuration with the evaluated hierarchy and policies.
pub const REFERENCE_DEFAULTS: &str = include_str!("../configs/reference-defaults.json");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_data_error() || matches!(e, Error::UndefinedMetric(_)) {
            EXIT_DATA
        } else {
            EXIT_USAGE
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "trrip", version, about = "Temperature-aware cache replacement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify a block profile and emit a page temperature map.
    Classify(ClassifyArgs),
    /// Generate a synthetic trace and its temperature map.
    GenTrace(GenTraceArgs),
    /// Simulate one policy through the cache hierarchy.
    Simulate(SimulateArgs),
    /// Compare policies against a baseline on shared traces.
    Compare(CompareArgs),
    /// Sweep one parameter and report reductions at each point.
    Sweep(SweepArgs),
    /// Reuse-distance histograms of hot instruction lines.
    Reuse(ReuseArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => TraceFormat::Text,
            FormatArg::Binary => TraceFormat::Binary,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OverlapArg {
    Pad,
    Unmark,
}

impl From<OverlapArg> for OverlapMode {
    fn from(o: OverlapArg) -> Self {
        match o {
            OverlapArg::Pad => OverlapMode::Pad,
            OverlapArg::Unmark => OverlapMode::Unmark,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StreamArg {
    Raw,
    PostL1,
}

#[derive(Args, Debug, Default)]
pub struct OutArgs {
    /// Output directory; TRRIP_OUT is used when absent, then the config's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ClassifierArgs {
    #[arg(long)]
    pub percentile_hot: Option<f64>,
    #[arg(long)]
    pub percentile_cold: Option<f64>,
    #[arg(long, value_parser = parse_size_arg)]
    pub page_size: Option<u64>,
    #[arg(long, value_enum)]
    pub overlap: Option<OverlapArg>,
}

impl ClassifierArgs {
    fn is_empty(&self) -> bool {
        self.percentile_hot.is_none()
            && self.percentile_cold.is_none()
            && self.page_size.is_none()
            && self.overlap.is_none()
    }

    fn apply(&self, params: &mut ThresholdParams, page_size: &mut u64, overlap: &mut OverlapMode) {
        if let Some(h) = self.percentile_hot {
            params.percentile_hot = h;
            params.percentile_cold = params.percentile_cold.max(h);
        }
        if let Some(c) = self.percentile_cold {
            params.percentile_cold = c;
        }
        if let Some(p) = self.page_size {
            *page_size = p;
        }
        if let Some(o) = self.overlap {
            *overlap = o.into();
        }
    }
}

/// Flags shared by commands that run an experiment config.
#[derive(Args, Debug, Default)]
pub struct ExperimentArgs {
    /// Experiment config; the bundled defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Policy under test at L2.
    #[arg(long)]
    pub policy: Option<PolicyConfig>,
    #[arg(long)]
    pub baseline: Option<PolicyConfig>,
    /// Trace file in place of the configured source.
    #[arg(long, conflicts_with = "pattern")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub trace_format: Option<FormatArg>,
    /// Generated trace: canonical-mixed, canonical-scan, canonical-thrash or a
    /// pattern JSON file.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Temperature map file (JSON or binary).
    #[arg(long, conflicts_with_all = ["profile", "trace_profile", "no_temperature"])]
    pub map: Option<PathBuf>,
    /// Block profile of the traced code, laid out from --profile-base.
    #[arg(long, conflicts_with_all = ["trace_profile", "no_temperature"])]
    pub profile: Option<PathBuf>,
    #[arg(long, value_parser = parse_u64_arg)]
    pub profile_base: Option<u64>,
    /// Profile the trace itself to derive temperatures.
    #[arg(long, conflicts_with = "no_temperature")]
    pub trace_profile: bool,
    /// Run with an empty temperature map.
    #[arg(long)]
    pub no_temperature: bool,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long, value_parser = parse_size_arg)]
    pub l2_size: Option<u64>,
    #[arg(long)]
    pub l2_ways: Option<u32>,
    #[arg(long)]
    pub prefetch_degree: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Start address of the laid-out code.
    #[arg(long, value_parser = parse_u64_arg)]
    pub base: Option<u64>,
    #[arg(long)]
    pub alignment: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct GenTraceArgs {
    /// canonical-mixed, canonical-scan, canonical-thrash or a pattern JSON file.
    #[arg(long, default_value = "canonical-mixed")]
    pub pattern: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub sets: Option<u64>,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: FormatArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Per-policy configs sharing one trace; their baseline comes first.
    pub configs: Vec<PathBuf>,
    /// Comma-separated policies, baseline first.
    #[arg(long, value_delimiter = ',')]
    pub policies: Vec<PolicyConfig>,
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated sweep points.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct ReuseArgs {
    #[arg(long, value_enum)]
    pub stream: Option<StreamArg>,
    /// Comma-separated bin lower bounds, starting at 0.
    #[arg(long, value_delimiter = ',')]
    pub bins: Vec<u64>,
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

fn parse_size_arg(s: &str) -> Result<u64, String> {
    parse_size(s).map_err(|e| e.to_string())
}

fn parse_u64_arg(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("{s:?}: {e}"))
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} file not found: {}", path.display())))
    }
}

fn pattern_spec(name: &str, seed: Option<u64>) -> CliResult<PatternSpec> {
    let seed_or = |d| seed.unwrap_or(d);
    let mut spec = match name {
        "canonical-mixed" => PatternSpec::canonical_mixed(seed_or(1)),
        "canonical-scan" => PatternSpec::canonical_scan(seed_or(1)),
        "canonical-thrash" => PatternSpec::canonical_thrash(seed_or(1)),
        path => {
            let path = Path::new(path);
            require_file(path, "pattern")?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str::<PatternSpec>(&text)
                .map_err(|e| CliError::usage(format!("pattern {}: {e}", path.display())))?
        }
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn check_inputs(config: &ExperimentConfig) -> CliResult<()> {
    let mut sources = vec![(&config.trace, &config.temperature)];
    sources.extend(config.workloads.iter().map(|w| (&w.trace, &w.temperature)));
    for (trace, temperature) in sources {
        if let TraceSource::File { path, .. } = trace {
            require_file(path, "trace")?;
        }
        match temperature {
            TemperatureSource::MapFile { path } => require_file(path, "map")?,
            TemperatureSource::Profile { path, .. } => require_file(path, "profile")?,
            _ => {}
        }
    }
    Ok(())
}

impl ExperimentArgs {
    /// The config file (or bundled defaults) with every flag applied on top.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                require_file(path, "config")?;
                ExperimentConfig::load(path)?
            }
            None => ExperimentConfig::from_json(REFERENCE_DEFAULTS)?,
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(p) = &self.policy {
            c.policy = p.clone();
        }
        if let Some(b) = &self.baseline {
            c.baseline = b.clone();
        }
        if let Some(path) = &self.trace {
            c.trace = TraceSource::File {
                path: path.clone(),
                format: self.trace_format.map(Into::into),
            };
            if c.temperature == TemperatureSource::Generated {
                c.temperature = TemperatureSource::None;
            }
        } else if let Some(p) = &self.pattern {
            c.trace = TraceSource::Generate(pattern_spec(p, None)?);
        } else if let (Some(f), TraceSource::File { format, .. }) = (self.trace_format, &mut c.trace) {
            *format = Some(f.into());
        }
        if let Some(path) = &self.map {
            c.temperature = TemperatureSource::MapFile { path: path.clone() };
        } else if let Some(path) = &self.profile {
            c.temperature = TemperatureSource::Profile {
                path: path.clone(),
                base_vaddr: 0x1000_0000,
                params: ThresholdParams::default(),
                page_size: trrip_core::temperature::DEFAULT_PAGE_SIZE,
                overlap: OverlapMode::default(),
            };
        } else if self.trace_profile {
            c.temperature = TemperatureSource::TraceProfile {
                params: ThresholdParams::default(),
                page_size: trrip_core::temperature::DEFAULT_PAGE_SIZE,
                overlap: OverlapMode::default(),
            };
        } else if self.no_temperature {
            c.temperature = TemperatureSource::None;
        }
        match &mut c.temperature {
            TemperatureSource::Profile {
                base_vaddr,
                params,
                page_size,
                overlap,
                ..
            } => {
                if let Some(b) = self.profile_base {
                    *base_vaddr = b;
                }
                self.classifier.apply(params, page_size, overlap);
            }
            TemperatureSource::TraceProfile {
                params,
                page_size,
                overlap,
            } => self.classifier.apply(params, page_size, overlap),
            _ => {
                if !self.classifier.is_empty() {
                    return Err(CliError::usage(
                        "classifier flags need --profile or --trace-profile as the temperature source",
                    ));
                }
            }
        }
        if self.l2_size.is_some() || self.l2_ways.is_some() {
            let g = c.hierarchy.l2.geometry;
            c.hierarchy.l2.geometry = CacheGeometry::new(
                self.l2_size.unwrap_or(g.capacity_bytes),
                self.l2_ways.unwrap_or(g.associativity),
                g.line_size_bytes,
            )?;
        }
        if let Some(d) = self.prefetch_degree {
            c.hierarchy.l1i.prefetch_degree = d;
            c.hierarchy.l1d.prefetch_degree = d;
        }
        c.out_dir = out_dir(&self.out, &c.out_dir);
        c.validate()?;
        check_inputs(&c)?;
        Ok(c)
    }
}

fn out_dir(args: &OutArgs, configured: &Path) -> PathBuf {
    if let Some(o) = &args.out {
        return o.clone();
    }
    match std::env::var_os("TRRIP_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

fn write_outputs(dir: &Path, outputs: &Outputs) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("creating {}: {e}", dir.display())))?;
    for (name, bytes) in outputs {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::usage(format!("writing {}: {e}", path.display())))?;
    }
    Ok(())
}

fn finish(dir: &Path, mut outputs: Outputs, config: Option<&ExperimentConfig>, show: Option<&str>) -> CliResult<String> {
    if let Some(c) = config {
        outputs.insert("experiment.json".into(), c.to_json().into_bytes());
    }
    write_outputs(dir, &outputs)?;
    let mut report = String::new();
    if let Some(name) = show {
        report.push_str(&String::from_utf8_lossy(&outputs[name]));
    }
    for name in outputs.keys() {
        report.push_str(&format!("wrote {}\n", dir.join(name).display()));
    }
    Ok(report)
}

fn cmd_classify(args: &ClassifyArgs) -> CliResult<String> {
    require_file(&args.profile, "profile")?;
    let blocks = experiment::read_profile_file(&args.profile)?;
    let mut options = ClassifyOptions::default();
    args.classifier
        .apply(&mut options.params, &mut options.page_size, &mut options.overlap);
    if let Some(b) = args.base {
        options.base_vaddr = b;
    }
    if let Some(a) = args.alignment {
        options.alignment = a;
    }
    let mut outputs = experiment::run_classify(&blocks, &options)?;
    let persisted = serde_json::json!({ "profile": args.profile, "options": options });
    let mut text = serde_json::to_string_pretty(&persisted).expect("serialisable");
    text.push('\n');
    outputs.insert("classify.json".into(), text.into_bytes());
    let dir = out_dir(&args.out, Path::new("out"));
    finish(&dir, outputs, None, Some("layout.txt"))
}

fn cmd_gen_trace(args: &GenTraceArgs) -> CliResult<String> {
    let mut spec = pattern_spec(&args.pattern, args.seed)?;
    if let Some(i) = args.iterations {
        spec.iterations = i;
    }
    if let Some(s) = args.sets {
        spec.set_count = s;
    }
    spec.validate()?;
    let outputs = experiment::run_gen_trace(&spec, args.format.into())?;
    let dir = out_dir(&args.out, Path::new("out"));
    let mut config = ExperimentConfig::new(TraceSource::Generate(spec), TemperatureSource::Generated);
    config.out_dir = dir.clone();
    finish(&dir, outputs, Some(&config), None)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let config = args.exp.resolve()?;
    let outputs = experiment::run_simulate(&config)?;
    finish(&config.out_dir.clone(), outputs, Some(&config), Some("summary.txt"))
}

fn cmd_compare(args: &CompareArgs) -> CliResult<String> {
    let mut config = if args.configs.is_empty() {
        args.exp.resolve()?
    } else {
        let mut loaded = Vec::new();
        for path in &args.configs {
            require_file(path, "config")?;
            loaded.push(ExperimentConfig::load(path)?);
        }
        let mut merged = merge_compare_configs(&loaded)?;
        merged.out_dir = out_dir(&args.exp.out, &merged.out_dir);
        check_inputs(&merged)?;
        merged
    };
    if !args.policies.is_empty() {
        config.compare = args.policies.clone();
    }
    let outputs = experiment::run_compare(&config)?;
    finish(&config.out_dir.clone(), outputs, Some(&config), Some("compare.txt"))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let mut config = args.exp.resolve()?;
    match (args.axis, args.values.is_empty()) {
        (Some(axis), false) => {
            config.sweep = Some(SweepSpec {
                axis,
                values: args.values.clone(),
            })
        }
        (None, true) => {}
        _ => return Err(CliError::usage("--axis and --values go together")),
    }
    if config.sweep.is_none() {
        return Err(CliError::usage(format!(
            "no sweep configured; pass --axis ({}) and --values",
            SweepAxis::NAMES.join(", ")
        )));
    }
    let outputs = experiment::run_sweep(&config)?;
    finish(&config.out_dir.clone(), outputs, Some(&config), Some("sweep.csv"))
}

fn cmd_reuse(args: &ReuseArgs) -> CliResult<String> {
    let mut config = args.exp.resolve()?;
    if let Some(s) = args.stream {
        config.reuse.stream = match s {
            StreamArg::Raw => ReuseStream::Raw,
            StreamArg::PostL1 => ReuseStream::PostL1,
        };
    }
    if !args.bins.is_empty() {
        config.reuse.bins = args.bins.clone();
    }
    let outputs = experiment::run_reuse(&config)?;
    finish(&config.out_dir.clone(), outputs, Some(&config), Some("reuse.csv"))
}

pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::GenTrace(a) => cmd_gen_trace(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Reuse(a) => cmd_reuse(a),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults_match_code() {
        let bundled = ExperimentConfig::from_json(REFERENCE_DEFAULTS).unwrap();
        assert_eq!(bundled, ExperimentConfig::reference_defaults());
        assert_eq!(REFERENCE_DEFAULTS, ExperimentConfig::reference_defaults().to_json());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Config("x".into())).code, EXIT_USAGE);
        assert_eq!(CliError::from(Error::MapFormat("x".into())).code, EXIT_DATA);
        assert_eq!(CliError::from(Error::DegenerateProfile).code, EXIT_DATA);
    }

    #[test]
    fn hex_and_decimal_addresses() {
        assert_eq!(parse_u64_arg("0x100"), Ok(256));
        assert_eq!(parse_u64_arg("256"), Ok(256));
        assert!(parse_u64_arg("zz").is_err());
    }

    #[test]
    fn classifier_flags_need_a_profile_source() {
        let args = ExperimentArgs {
            classifier: ClassifierArgs {
                percentile_hot: Some(0.5),
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(args.resolve().unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn percentile_one_lifts_cold() {
        let args = ClassifierArgs {
            percentile_hot: Some(1.0),
            ..Default::default()
        };
        let mut p = ThresholdParams::default();
        let (mut page, mut overlap) = (4096, OverlapMode::Pad);
        args.apply(&mut p, &mut page, &mut overlap);
        assert_eq!((p.percentile_hot, p.percentile_cold), (1.0, 1.0));
        p.validate().unwrap();
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
