//! Declarative experiments: one JSON document names the hierarchy, policies,
//! trace and temperature sources. Every `run_*` function is pure over its
//! config and returns the files it would write, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    compare, costly_coverage, derive_layout, reuse_distances, sweep, sweep_rows_csv, CompareReport,
    CoverageFilter, ReuseMode, SweepSetup, SweepSpec, TraceInput, DEFAULT_REUSE_BINS,
};
use crate::error::{Error, Result};
use crate::hierarchy::{l2_access_stream, simulate, HierarchyConfig, SimOptions, SimResult};
use crate::model::{LineClass, MemoryAccess, Temperature};
use crate::policy::PolicyConfig;
use crate::temperature::{
    build_page_map, classify, hot_fraction, layout_sections, page_utilization, read_profile, OverlapMode,
    ProfiledBlock, Program, SectionLayout, TemperatureMap, ThresholdParams, DEFAULT_PAGE_SIZE,
};
use crate::trace::{encode, generate, read_trace_file, PatternSpec, TraceFormat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Generate(PatternSpec),
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<TraceFormat>,
    },
}

fn default_page_size() -> u64 {
    DEFAULT_PAGE_SIZE
}

fn default_code_base() -> u64 {
    0x1000_0000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureSource {
    /// No page carries a temperature.
    None,
    /// The map produced alongside a generated trace.
    Generated,
    /// A map file, JSON or binary.
    MapFile { path: PathBuf },
    /// A block profile whose blocks sit end to end from `base_vaddr` in the
    /// traced binary; it is classified, laid out and the trace relocated.
    Profile {
        path: PathBuf,
        #[serde(default = "default_code_base")]
        base_vaddr: u64,
        #[serde(default)]
        params: ThresholdParams,
        #[serde(default = "default_page_size")]
        page_size: u64,
        #[serde(default)]
        overlap: OverlapMode,
    },
    /// Profile the trace itself, one block per fetched line.
    TraceProfile {
        #[serde(default)]
        params: ThresholdParams,
        #[serde(default = "default_page_size")]
        page_size: u64,
        #[serde(default)]
        overlap: OverlapMode,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReuseStream {
    Raw,
    /// The demand stream reaching L2 after the L1s.
    #[default]
    PostL1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReuseOptions {
    #[serde(default)]
    pub stream: ReuseStream,
    #[serde(default = "default_bins")]
    pub bins: Vec<u64>,
}

fn default_bins() -> Vec<u64> {
    DEFAULT_REUSE_BINS.to_vec()
}

impl Default for ReuseOptions {
    fn default() -> Self {
        ReuseOptions {
            stream: ReuseStream::default(),
            bins: default_bins(),
        }
    }
}

/// A named trace with its temperature source, for multi-trace comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub trace: TraceSource,
    pub temperature: TemperatureSource,
}

fn default_policy() -> PolicyConfig {
    PolicyConfig::Trrip1
}

fn default_baseline() -> PolicyConfig {
    PolicyConfig::Srrip
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default = "default_policy")]
    pub policy: PolicyConfig,
    #[serde(default = "default_baseline")]
    pub baseline: PolicyConfig,
    /// Policies for `compare`; the first is the baseline. Empty means
    /// baseline then policy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<PolicyConfig>,
    pub trace: TraceSource,
    pub temperature: TemperatureSource,
    /// Further traces for `compare`; the main trace always comes first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub workloads: Vec<Workload>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub reuse: ReuseOptions,
}

impl ExperimentConfig {
    pub fn new(trace: TraceSource, temperature: TemperatureSource) -> Self {
        ExperimentConfig {
            hierarchy: HierarchyConfig::default(),
            policy: default_policy(),
            baseline: default_baseline(),
            compare: Vec::new(),
            trace,
            temperature,
            workloads: Vec::new(),
            seed: 0,
            out_dir: default_out(),
            sweep: None,
            reuse: ReuseOptions::default(),
        }
    }

    /// The evaluated configuration: the default hierarchy, TRRIP-1 against
    /// SRRIP, every mechanism in the comparison, on the canonical mixed trace.
    pub fn reference_defaults() -> Self {
        let mut c = ExperimentConfig::new(
            TraceSource::Generate(PatternSpec::canonical_mixed(1)),
            TemperatureSource::Generated,
        );
        c.seed = 1;
        c.compare = PolicyConfig::all();
        c.compare.retain(|p| *p != PolicyConfig::Srrip && !matches!(p, PolicyConfig::ClipA | PolicyConfig::ClipB));
        c.compare.insert(0, PolicyConfig::Srrip);
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.hierarchy.validate()?;
        if self.temperature == TemperatureSource::Generated && !matches!(self.trace, TraceSource::Generate(_)) {
            return Err(Error::Config("a generated temperature map needs a generated trace".into()));
        }
        if let TraceSource::Generate(spec) = &self.trace {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn compare_policies(&self) -> Vec<PolicyConfig> {
        if self.compare.is_empty() {
            vec![self.baseline.clone(), self.policy.clone()]
        } else {
            self.compare.clone()
        }
    }
}

/// Files produced by a command, keyed by file name.
pub type Outputs = BTreeMap<String, Vec<u8>>;

/// A trace ready to simulate, with its map and, when the map came from a
/// profile, what is needed to derive it again.
pub struct Inputs {
    pub trace: Vec<MemoryAccess>,
    pub map: TemperatureMap,
    pub derivation: Option<Derivation>,
}

pub struct Derivation {
    pub program: Program,
    /// The trace before relocation.
    pub original: Vec<MemoryAccess>,
    pub params: ThresholdParams,
    pub page_size: u64,
    pub overlap: OverlapMode,
    pub hot_fraction: f64,
}

pub fn read_map_file(path: &Path) -> Result<TemperatureMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading map {}", path.display()), e))?;
    if bytes.first() == Some(&b'{') {
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::MapFormat("map file is not UTF-8".into()))?;
        TemperatureMap::from_json(text)
    } else {
        TemperatureMap::from_bytes(&bytes)
    }
}

pub fn read_profile_file(path: &Path) -> Result<Vec<ProfiledBlock>> {
    let file = fs::File::open(path).map_err(|e| Error::io(format!("reading profile {}", path.display()), e))?;
    read_profile(BufReader::new(file))
}

pub fn load_trace(source: &TraceSource) -> Result<(Vec<MemoryAccess>, Option<TemperatureMap>)> {
    match source {
        TraceSource::Generate(spec) => {
            let (trace, map) = generate(spec)?;
            Ok((trace, Some(map)))
        }
        TraceSource::File { path, format } => Ok((read_trace_file(path, *format)?, None)),
    }
}

pub fn load_inputs(trace: &TraceSource, temperature: &TemperatureSource, line_size: u64) -> Result<Inputs> {
    let (trace, generated) = load_trace(trace)?;
    let derive = |program: Program, params: &ThresholdParams, page_size: u64, overlap: OverlapMode| -> Result<Inputs> {
        let d = derive_layout(&program, &trace, params, page_size, overlap)?;
        Ok(Inputs {
            trace: d.trace,
            map: d.map,
            derivation: Some(Derivation {
                program,
                original: trace.clone(),
                params: *params,
                page_size,
                overlap,
                hot_fraction: d.hot_fraction,
            }),
        })
    };
    match temperature {
        TemperatureSource::None => Ok(Inputs {
            trace,
            map: TemperatureMap::default(),
            derivation: None,
        }),
        TemperatureSource::Generated => {
            let map = generated.ok_or_else(|| Error::Config("no generated map for a trace file".into()))?;
            Ok(Inputs {
                trace,
                map,
                derivation: None,
            })
        }
        TemperatureSource::MapFile { path } => Ok(Inputs {
            map: read_map_file(path)?,
            trace,
            derivation: None,
        }),
        TemperatureSource::Profile {
            path,
            base_vaddr,
            params,
            page_size,
            overlap,
        } => {
            let program = Program::contiguous(read_profile_file(path)?, *base_vaddr);
            derive(program, params, *page_size, *overlap)
        }
        TemperatureSource::TraceProfile {
            params,
            page_size,
            overlap,
        } => {
            let program = Program::from_trace(&trace, line_size);
            derive(program, params, *page_size, *overlap)
        }
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable");
    v.push(b'\n');
    v
}

fn mpki_text(r: Result<f64>) -> String {
    r.map_or_else(|_| "n/a".into(), |v| format!("{v:.4}"))
}

pub fn result_csv(result: &SimResult) -> String {
    let mut out = String::from("level,policy,class,accesses,hits,misses,mpki\n");
    for level in result.levels() {
        for class in [LineClass::Instruction, LineClass::Data] {
            let c = level.counters.get(class);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                level.name,
                level.policy,
                match class {
                    LineClass::Instruction => "inst",
                    LineClass::Data => "data",
                },
                c.accesses,
                c.hits,
                c.misses,
                mpki_text(level.mpki(class)),
            );
        }
    }
    out
}

pub fn result_summary(result: &SimResult, map: &TemperatureMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "retired instructions: {}", result.retired_instructions);
    let _ = writeln!(
        out,
        "pages: hot {} warm {} cold {}",
        map.count(Temperature::Hot),
        map.count(Temperature::Warm),
        map.count(Temperature::Cold)
    );
    let _ = writeln!(
        out,
        "{:<6} {:<10} {:>12} {:>12} {:>10} {:>10}",
        "level", "policy", "inst miss", "data miss", "inst MPKI", "data MPKI"
    );
    for level in result.levels() {
        let _ = writeln!(
            out,
            "{:<6} {:<10} {:>12} {:>12} {:>10} {:>10}",
            level.name,
            level.policy,
            level.counters.instruction.misses,
            level.counters.data.misses,
            mpki_text(level.mpki(LineClass::Instruction)),
            mpki_text(level.mpki(LineClass::Data)),
        );
    }
    let t = &result.l2.instruction_misses_by_temperature;
    let _ = writeln!(
        out,
        "L2 instruction misses by temperature: hot {} warm {} cold {} none {}",
        t.hot, t.warm, t.cold, t.none
    );
    let s = &result.service;
    let _ = writeln!(out, "L1 misses served by: L2 {} SLC {} memory {}", s.l2, s.slc, s.memory);
    out
}

/// Simulate the configured policy: result JSON and CSV, costly-miss coverage
/// and a text summary.
pub fn run_simulate(config: &ExperimentConfig) -> Result<Outputs> {
    config.validate()?;
    let inputs = load_inputs(&config.trace, &config.temperature, config.hierarchy.line_size())?;
    let hierarchy = config.hierarchy.clone().with_l2_policy(config.policy.clone());
    let options = SimOptions {
        log_misses: true,
        ..SimOptions::default()
    };
    let result = simulate(&inputs.trace, &inputs.map, &hierarchy, config.seed, options)?;
    let mut out = Outputs::new();
    out.insert("result.json".into(), json(&result));
    out.insert("result.csv".into(), result_csv(&result).into_bytes());
    let mut coverage = String::new();
    for filter in [CoverageFilter::All, CoverageFilter::ExcludeExternal] {
        let curve = costly_coverage(&result.miss_log, &inputs.map, filter);
        let name = match filter {
            CoverageFilter::All => "all",
            CoverageFilter::ExcludeExternal => "exclude-external",
        };
        for (i, line) in curve.to_csv().lines().enumerate() {
            if i == 0 {
                if coverage.is_empty() {
                    let _ = writeln!(coverage, "filter,{line}");
                }
            } else {
                let _ = writeln!(coverage, "{name},{line}");
            }
        }
    }
    if coverage.is_empty() {
        coverage.push_str("filter,percentile,misses,hot_misses,coverage\n");
    }
    out.insert("coverage.csv".into(), coverage.into_bytes());
    out.insert("summary.txt".into(), result_summary(&result, &inputs.map).into_bytes());
    Ok(out)
}

/// Table-2-shaped comparison over the main trace and any extra workloads.
pub fn run_compare(config: &ExperimentConfig) -> Result<Outputs> {
    config.validate()?;
    let report = compare_report(config)?;
    let mut out = Outputs::new();
    out.insert("compare.json".into(), json(&report));
    out.insert("compare.csv".into(), report.to_csv().into_bytes());
    out.insert("compare.txt".into(), report.to_table().into_bytes());
    Ok(out)
}

pub fn compare_report(config: &ExperimentConfig) -> Result<CompareReport> {
    let line_size = config.hierarchy.line_size();
    let mut loaded = vec![(
        "trace".to_string(),
        load_inputs(&config.trace, &config.temperature, line_size)?,
    )];
    for w in &config.workloads {
        loaded.push((w.name.clone(), load_inputs(&w.trace, &w.temperature, line_size)?));
    }
    let inputs: Vec<TraceInput<'_>> = loaded
        .iter()
        .map(|(name, i)| TraceInput {
            name: name.clone(),
            trace: &i.trace,
            map: &i.map,
        })
        .collect();
    compare(&inputs, &config.compare_policies(), &config.hierarchy, config.seed)
}

/// Merge per-policy configs into one comparison. They must describe the same
/// experiment apart from the policy under test.
pub fn merge_compare_configs(configs: &[ExperimentConfig]) -> Result<ExperimentConfig> {
    let Some(first) = configs.first() else {
        return Err(Error::Config("no configs to compare".into()));
    };
    for c in &configs[1..] {
        if c.trace != first.trace || c.temperature != first.temperature || c.workloads != first.workloads {
            return Err(Error::Config("compared configs use different traces".into()));
        }
        if c.hierarchy != first.hierarchy || c.seed != first.seed {
            return Err(Error::Config("compared configs use different hierarchies or seeds".into()));
        }
    }
    let mut merged = first.clone();
    let mut policies = vec![first.baseline.clone()];
    for c in configs {
        if !policies.contains(&c.policy) {
            policies.push(c.policy.clone());
        }
    }
    merged.compare = policies;
    Ok(merged)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<Outputs> {
    config.validate()?;
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no sweep axis configured".into()))?;
    let inputs = load_inputs(&config.trace, &config.temperature, config.hierarchy.line_size())?;
    let d = inputs.derivation.as_ref();
    let setup = SweepSetup {
        trace: d.map_or(&inputs.trace, |d| &d.original),
        map: &inputs.map,
        program: d.map(|d| &d.program),
        params: d.map_or_else(ThresholdParams::default, |d| d.params),
        page_size: d.map_or(DEFAULT_PAGE_SIZE, |d| d.page_size),
        overlap: d.map_or_else(OverlapMode::default, |d| d.overlap),
        hierarchy: &config.hierarchy,
        policy: &config.policy,
        baseline: &config.baseline,
        seed: config.seed,
    };
    let rows = sweep(&setup, spec)?;
    let mut out = Outputs::new();
    out.insert("sweep.json".into(), json(&rows));
    out.insert("sweep.csv".into(), sweep_rows_csv(&rows).into_bytes());
    Ok(out)
}

/// Reuse-distance histograms of hot lines at L2-set granularity, both modes.
pub fn run_reuse(config: &ExperimentConfig) -> Result<Outputs> {
    config.validate()?;
    let inputs = load_inputs(&config.trace, &config.temperature, config.hierarchy.line_size())?;
    let stream = match config.reuse.stream {
        ReuseStream::Raw => inputs.trace.clone(),
        ReuseStream::PostL1 => l2_access_stream(&inputs.trace, &inputs.map, &config.hierarchy, config.seed)?,
    };
    let geometry = config.hierarchy.l2.geometry;
    let hists = [ReuseMode::Base, ReuseMode::HotOnly]
        .into_iter()
        .map(|mode| reuse_distances(&stream, &inputs.map, &geometry, mode, &config.reuse.bins))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::new();
    for (i, h) in hists.iter().enumerate() {
        let body = h.to_csv();
        let skip = if i == 0 { 0 } else { 1 };
        for line in body.lines().skip(skip) {
            csv.push_str(line);
            csv.push('\n');
        }
    }
    let mut out = Outputs::new();
    out.insert("reuse.json".into(), json(&hists));
    out.insert("reuse.csv".into(), csv.into_bytes());
    Ok(out)
}

pub fn run_gen_trace(spec: &PatternSpec, format: TraceFormat) -> Result<Outputs> {
    let (trace, map) = generate(spec)?;
    let name = match format {
        TraceFormat::Text => "trace.txt",
        TraceFormat::Binary => "trace.bin",
    };
    let mut out = Outputs::new();
    out.insert(name.into(), encode(&trace, format));
    out.insert("map.json".into(), (map.to_json()? + "\n").into_bytes());
    out.insert("pattern.json".into(), json(spec));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    #[serde(default)]
    pub params: ThresholdParams,
    #[serde(default = "default_page_size")]
    pub page_size: u64,
    #[serde(default)]
    pub overlap: OverlapMode,
    #[serde(default = "default_code_base")]
    pub base_vaddr: u64,
    /// Section alignment before any page padding.
    #[serde(default = "default_alignment")]
    pub alignment: u64,
}

fn default_alignment() -> u64 {
    64
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            params: ThresholdParams::default(),
            page_size: DEFAULT_PAGE_SIZE,
            overlap: OverlapMode::default(),
            base_vaddr: default_code_base(),
            alignment: default_alignment(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub temperatures: Vec<(String, Temperature)>,
    pub layout: SectionLayout,
    pub hot_fraction: f64,
    pub hot_pages_used: u64,
    pub warm_pages_used: u64,
}

pub fn classify_report(blocks: &[ProfiledBlock], options: &ClassifyOptions) -> Result<(ClassifyReport, TemperatureMap)> {
    if !options.page_size.is_power_of_two() {
        return Err(Error::Config(format!("page size {} is not a power of two", options.page_size)));
    }
    let temps = classify(blocks, &options.params)?;
    let layout = layout_sections(blocks, &temps, options.base_vaddr, options.alignment);
    let outcome = build_page_map(&layout, options.page_size, options.overlap);
    let (hot_pages, warm_pages) = page_utilization(&outcome.layout, options.page_size);
    let report = ClassifyReport {
        temperatures: blocks.iter().map(|b| b.id.clone()).zip(temps.iter().copied()).collect(),
        hot_fraction: hot_fraction(blocks, &temps),
        layout: outcome.layout,
        hot_pages_used: hot_pages,
        warm_pages_used: warm_pages,
    };
    Ok((report, outcome.map))
}

pub fn layout_summary(report: &ClassifyReport, map: &TemperatureMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:>12} {:>12} {:>8}", "section", "start", "bytes", "blocks");
    for s in &report.layout.sections {
        let _ = writeln!(
            out,
            "{:<8} {:>#12x} {:>12} {:>8}",
            s.temperature.name(),
            s.start_vaddr,
            s.size_bytes,
            s.blocks.len()
        );
    }
    let _ = writeln!(
        out,
        "pages used (hot/warm): {}/{}",
        report.hot_pages_used, report.warm_pages_used
    );
    let _ = writeln!(
        out,
        "tagged pages: hot {} warm {} cold {}",
        map.count(Temperature::Hot),
        map.count(Temperature::Warm),
        map.count(Temperature::Cold)
    );
    let _ = writeln!(out, "hot fraction of code bytes: {:.4}", report.hot_fraction);
    out
}

pub fn run_classify(blocks: &[ProfiledBlock], options: &ClassifyOptions) -> Result<Outputs> {
    let (report, map) = classify_report(blocks, options)?;
    let mut out = Outputs::new();
    out.insert("map.json".into(), (map.to_json()? + "\n").into_bytes());
    out.insert("map.bin".into(), map.to_bytes());
    out.insert("layout.json".into(), json(&report));
    out.insert("layout.txt".into(), layout_summary(&report, &map).into_bytes());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Pattern;

    fn small() -> ExperimentConfig {
        let spec = PatternSpec::new(
            Pattern::MixedTemperature {
                hot_lines: 4,
                warm_lines: 2,
                cold_lines: 4,
                data_lines: 4,
                warm_weight: 1,
                cold_weight: 1,
                data_weight: 1,
                target_reuse_distance: 11,
            },
            10,
            64,
            3,
        );
        let mut c = ExperimentConfig::new(TraceSource::Generate(spec), TemperatureSource::Generated);
        c.seed = 3;
        c
    }

    #[test]
    fn config_round_trip() {
        for c in [ExperimentConfig::reference_defaults(), small()] {
            let text = c.to_json();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn reference_defaults_lists_every_mechanism() {
        let c = ExperimentConfig::reference_defaults();
        let names: Vec<&str> = c.compare.iter().map(|p| p.name()).collect();
        assert_eq!(names[0], "srrip");
        for n in ["lru", "brrip", "drrip", "clip", "ship", "emissary", "trrip-1", "trrip-2"] {
            assert!(names.contains(&n), "{n}");
        }
        assert_eq!(c.hierarchy, HierarchyConfig::default());
    }

    #[test]
    fn generated_map_needs_generated_trace() {
        let c = ExperimentConfig::new(
            TraceSource::File {
                path: "t.bin".into(),
                format: None,
            },
            TemperatureSource::Generated,
        );
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn runs_are_reproducible() {
        let c = small();
        assert_eq!(run_simulate(&c).unwrap(), run_simulate(&c).unwrap());
        assert_eq!(run_reuse(&c).unwrap(), run_reuse(&c).unwrap());
        let out = run_simulate(&c).unwrap();
        for name in ["result.json", "result.csv", "coverage.csv", "summary.txt"] {
            assert!(out.contains_key(name), "{name}");
        }
    }

    #[test]
    fn merge_rejects_different_traces() {
        let a = small();
        let mut b = small();
        b.policy = PolicyConfig::Clip;
        let merged = merge_compare_configs(&[a.clone(), b]).unwrap();
        let names: Vec<&str> = merged.compare.iter().map(|p| p.name()).collect();
        assert_eq!(names, ["srrip", "trrip-1", "clip"]);
        let mut c = small();
        c.seed = 9;
        if let TraceSource::Generate(spec) = &mut c.trace {
            spec.seed = 99;
        }
        assert!(matches!(merge_compare_configs(&[a, c]), Err(Error::Config(_))));
    }

    #[test]
    fn trace_profile_sweep_reclassifies() {
        let mut c = small();
        c.temperature = TemperatureSource::TraceProfile {
            params: ThresholdParams::default(),
            page_size: 4096,
            overlap: OverlapMode::Pad,
        };
        c.sweep = Some(SweepSpec {
            axis: crate::analysis::SweepAxis::PercentileHot,
            values: vec!["0.1".into(), "0.99".into(), "1.0".into()],
        });
        let out = run_sweep(&c).unwrap();
        let rows: Vec<crate::analysis::SweepRow> = serde_json::from_slice(&out["sweep.json"]).unwrap();
        assert_eq!(rows.len(), 3);
        let fr: Vec<f64> = rows.iter().map(|r| r.hot_fraction.unwrap()).collect();
        assert!(fr.windows(2).all(|w| w[0] <= w[1]), "{fr:?}");
    }
}
