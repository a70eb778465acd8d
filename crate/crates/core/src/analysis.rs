//! Offline analyses: per-set reuse distances, costly-miss coverage, MPKI
//! reduction tables and parameter sweeps.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{simulate, HierarchyConfig, MissRecord, ServiceLevel, SimOptions, SimResult};
use crate::model::{CacheGeometry, LineClass, MemoryAccess, Temperature};
use crate::policy::PolicyConfig;
use crate::temperature::{
    build_page_map, classify, hot_fraction, layout_sections, OverlapMode, Program, SectionLayout,
    TemperatureMap, ThresholdParams,
};

// ---------------------------------------------------------------------------
// reuse distance

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReuseMode {
    /// Count every distinct intervening line.
    #[default]
    Base,
    /// Count only distinct intervening hot lines.
    HotOnly,
}

impl FromStr for ReuseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "base" => Ok(ReuseMode::Base),
            "hot-only" => Ok(ReuseMode::HotOnly),
            other => Err(format!("unknown reuse mode {other:?} (expected base or hot-only)")),
        }
    }
}

/// Lower bounds of the default bins: 0-4, 5-8, 9-12, 13-16, >16.
pub const DEFAULT_REUSE_BINS: [u64; 5] = [0, 5, 9, 13, 17];

/// One measured re-access of a hot instruction line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReuseSample {
    pub index: usize,
    pub distance: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseHistogram {
    pub mode: ReuseMode,
    /// Lower bound of each bin; the last bin is open-ended.
    pub bin_starts: Vec<u64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ReuseHistogram {
    pub fn new(mode: ReuseMode, bin_starts: &[u64]) -> Result<Self> {
        if bin_starts.first() != Some(&0) || bin_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("reuse bins must start at 0 and increase strictly".into()));
        }
        Ok(ReuseHistogram {
            mode,
            bin_starts: bin_starts.to_vec(),
            counts: vec![0; bin_starts.len()],
            total: 0,
        })
    }

    pub fn bin_of(&self, distance: u64) -> usize {
        self.bin_starts.partition_point(|&s| s <= distance) - 1
    }

    pub fn add(&mut self, distance: u64) {
        let b = self.bin_of(distance);
        self.counts[b] += 1;
        self.total += 1;
    }

    pub fn label(&self, bin: usize) -> String {
        match self.bin_starts.get(bin + 1) {
            Some(&next) => format!("{}-{}", self.bin_starts[bin], next - 1),
            None => format!(">{}", self.bin_starts[bin].saturating_sub(1)),
        }
    }

    pub fn dominant_bin(&self) -> Option<usize> {
        (self.total > 0).then(|| {
            (0..self.counts.len())
                .max_by_key(|&i| (self.counts[i], std::cmp::Reverse(i)))
                .unwrap()
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,bin,accesses,fraction\n");
        let mode = match self.mode {
            ReuseMode::Base => "base",
            ReuseMode::HotOnly => "hot-only",
        };
        for (i, &c) in self.counts.iter().enumerate() {
            let frac = if self.total == 0 { 0.0 } else { c as f64 / self.total as f64 };
            let _ = writeln!(out, "{mode},{},{c},{frac:.6}", self.label(i));
        }
        out
    }
}

/// Fenwick tree over per-set timestamps.
struct Fenwick(Vec<i64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0; n + 1])
    }

    fn add(&mut self, i: usize, v: i64) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `[0, i)`.
    fn prefix(&self, i: usize) -> i64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

fn is_hot_fetch(a: &MemoryAccess, map: &TemperatureMap) -> bool {
    a.is_fetch() && map.lookup(a.vaddr) == Temperature::Hot
}

/// Distance of every re-access to a hot instruction line, measured within its
/// cache set. A line counts as hot when it was last touched by a fetch from a
/// hot page.
pub fn reuse_samples(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    geometry: &CacheGeometry,
    mode: ReuseMode,
) -> Vec<ReuseSample> {
    let sets = geometry.set_count();
    let mut per_set_len = vec![0usize; sets];
    for a in trace {
        per_set_len[geometry.set_of_line(geometry.line_of(a.vaddr))] += 1;
    }
    let mut trees: Vec<Fenwick> = per_set_len.iter().map(|&n| Fenwick::new(n)).collect();
    let mut clock = vec![0usize; sets];
    // line -> (local timestamp, counted in tree)
    let mut last: HashMap<u64, (usize, bool)> = HashMap::new();
    let mut out = Vec::new();
    for (index, a) in trace.iter().enumerate() {
        let line = geometry.line_of(a.vaddr);
        let set = geometry.set_of_line(line);
        let now = clock[set];
        clock[set] += 1;
        let hot = is_hot_fetch(a, map);
        let tree = &mut trees[set];
        if let Some(&(prev, counted)) = last.get(&line) {
            if hot {
                let distance = tree.prefix(now) - tree.prefix(prev + 1);
                out.push(ReuseSample {
                    index,
                    distance: distance as u64,
                });
            }
            if counted {
                tree.add(prev, -1);
            }
        }
        let counted = match mode {
            ReuseMode::Base => true,
            ReuseMode::HotOnly => hot,
        };
        if counted {
            tree.add(now, 1);
        }
        last.insert(line, (now, counted));
    }
    out
}

pub fn reuse_distances(
    trace: &[MemoryAccess],
    map: &TemperatureMap,
    geometry: &CacheGeometry,
    mode: ReuseMode,
    bin_starts: &[u64],
) -> Result<ReuseHistogram> {
    let mut h = ReuseHistogram::new(mode, bin_starts)?;
    for s in reuse_samples(trace, map, geometry, mode) {
        h.add(s.distance);
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// costly-miss coverage

pub const COVERAGE_GRID: [u32; 6] = [1, 5, 10, 25, 50, 100];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageFilter {
    #[default]
    All,
    /// Drop misses on untagged pages.
    ExcludeExternal,
}

impl FromStr for CoverageFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(CoverageFilter::All),
            "exclude-external" => Ok(CoverageFilter::ExcludeExternal),
            other => Err(format!("unknown coverage filter {other:?} (expected all or exclude-external)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub percentile: u32,
    pub misses: u64,
    pub hot_misses: u64,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub filter: CoverageFilter,
    pub points: Vec<CoveragePoint>,
}

impl CoverageCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("percentile,misses,hot_misses,coverage\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{:.6}", p.percentile, p.misses, p.hot_misses, p.coverage);
        }
        out
    }
}

/// Coverage of misses already ranked costliest first, given whether each
/// lies on a hot page.
pub fn coverage_curve(ranked_hot: &[bool], grid: &[u32]) -> Vec<CoveragePoint> {
    let n = ranked_hot.len() as u64;
    if n == 0 {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(ranked_hot.len() + 1);
    prefix.push(0u64);
    for &h in ranked_hot {
        prefix.push(prefix.last().unwrap() + h as u64);
    }
    grid.iter()
        .map(|&pct| {
            let k = (n * pct as u64).div_ceil(100).clamp(1, n);
            let hot = prefix[k as usize];
            CoveragePoint {
                percentile: pct,
                misses: k,
                hot_misses: hot,
                coverage: hot as f64 / k as f64,
            }
        })
        .collect()
}

fn service_rank(level: ServiceLevel) -> u8 {
    match level {
        ServiceLevel::L2 => 0,
        ServiceLevel::Slc => 1,
        ServiceLevel::Memory => 2,
    }
}

/// Rank logged instruction misses by cost (farther service level first, ties
/// by how often the same line missed, then log order) and measure how many of
/// the top N% lie on hot pages.
pub fn costly_coverage(log: &[MissRecord], map: &TemperatureMap, filter: CoverageFilter) -> CoverageCurve {
    let kept: Vec<(&MissRecord, Temperature)> = log
        .iter()
        .map(|m| (m, map.lookup(m.vaddr)))
        .filter(|(_, t)| filter == CoverageFilter::All || *t != Temperature::None)
        .collect();
    let mut per_line: HashMap<u64, u64> = HashMap::new();
    for (m, _) in &kept {
        *per_line.entry(m.vaddr).or_default() += 1;
    }
    let mut ranked: Vec<(u8, u64, usize, bool)> = kept
        .iter()
        .enumerate()
        .map(|(i, (m, t))| (service_rank(m.served_by), per_line[&m.vaddr], i, *t == Temperature::Hot))
        .collect();
    ranked.sort_by(|a, b| (b.0, b.1).cmp(&(a.0, a.1)).then(a.2.cmp(&b.2)));
    let hot: Vec<bool> = ranked.iter().map(|r| r.3).collect();
    CoverageCurve {
        filter,
        points: coverage_curve(&hot, &COVERAGE_GRID),
    }
}

// ---------------------------------------------------------------------------
// MPKI reduction

/// `100 * (baseline - candidate) / baseline`; `None` when the baseline is 0.
pub fn percent_reduction(baseline: f64, candidate: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (baseline - candidate) / baseline)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub instruction: Option<f64>,
    pub data: Option<f64>,
}

/// Per-class L2 MPKI reduction of `candidate` relative to `baseline`.
pub fn mpki_reduction(baseline: &SimResult, candidate: &SimResult) -> Result<Reduction> {
    if baseline.retired_instructions != candidate.retired_instructions {
        return Err(Error::Config("results come from different traces".into()));
    }
    let r = |class| -> Result<Option<f64>> {
        Ok(percent_reduction(baseline.l2.mpki(class)?, candidate.l2.mpki(class)?))
    };
    Ok(Reduction {
        instruction: r(LineClass::Instruction)?,
        data: r(LineClass::Data)?,
    })
}

/// Plain geometric mean; 0 if any value is 0, `None` if empty or negative.
pub fn geomean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return None;
    }
    if values.contains(&0.0) {
        return Some(0.0);
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Aggregate percent reductions as the reduction of the geometric mean MPKI
/// ratio: each `r` is turned into `candidate / baseline = 1 - r/100`.
pub fn geomean_reduction(reductions: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> = reductions.iter().map(|r| 1.0 - r / 100.0).collect();
    geomean(&ratios).map(|g| 100.0 * (1.0 - g))
}

// ---------------------------------------------------------------------------
// compare

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMpki {
    pub policy: String,
    pub instruction_mpki: f64,
    pub data_mpki: f64,
    /// Absent for the baseline and where the baseline MPKI is zero.
    pub instruction_reduction: Option<f64>,
    pub data_reduction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub trace: String,
    pub entries: Vec<PolicyMpki>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub baseline: String,
    pub policies: Vec<String>,
    pub traces: Vec<TraceReport>,
    /// Raw MPKI geomean for the baseline, reduction geomean for the rest.
    pub geomean: Vec<PolicyMpki>,
}

pub struct TraceInput<'a> {
    pub name: String,
    pub trace: &'a [MemoryAccess],
    pub map: &'a TemperatureMap,
}

/// Run every policy on every trace. The first policy is the baseline: it is
/// reported as raw MPKI, the others as percent reductions against it.
pub fn compare(
    traces: &[TraceInput<'_>],
    policies: &[PolicyConfig],
    hierarchy: &HierarchyConfig,
    seed: u64,
) -> Result<CompareReport> {
    let Some(baseline) = policies.first() else {
        return Err(Error::Config("compare needs at least one policy".into()));
    };
    if traces.is_empty() {
        return Err(Error::Config("compare needs at least one trace".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..traces.len())
        .flat_map(|t| (0..policies.len()).map(move |p| (t, p)))
        .collect();
    let results: Vec<SimResult> = jobs
        .par_iter()
        .map(|&(t, p)| {
            let config = hierarchy.clone().with_l2_policy(policies[p].clone());
            simulate(traces[t].trace, traces[t].map, &config, seed, SimOptions::default())
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::new();
    for (t, input) in traces.iter().enumerate() {
        let base = &results[t * policies.len()];
        let mut entries = Vec::new();
        for (p, policy) in policies.iter().enumerate() {
            let r = &results[t * policies.len() + p];
            let red = if p == 0 {
                Reduction { instruction: None, data: None }
            } else {
                mpki_reduction(base, r)?
            };
            entries.push(PolicyMpki {
                policy: policy.name().to_string(),
                instruction_mpki: r.l2.mpki(LineClass::Instruction)?,
                data_mpki: r.l2.mpki(LineClass::Data)?,
                instruction_reduction: red.instruction,
                data_reduction: red.data,
            });
        }
        reports.push(TraceReport {
            trace: input.name.clone(),
            entries,
        });
    }

    let geomean = (0..policies.len())
        .map(|p| {
            let col = |f: fn(&PolicyMpki) -> f64| -> Vec<f64> {
                reports.iter().map(|r| f(&r.entries[p])).collect()
            };
            let red = |f: fn(&PolicyMpki) -> Option<f64>| -> Option<f64> {
                let v: Option<Vec<f64>> = reports.iter().map(|r| f(&r.entries[p])).collect();
                v.and_then(|v| geomean_reduction(&v))
            };
            PolicyMpki {
                policy: policies[p].name().to_string(),
                instruction_mpki: geomean(&col(|e| e.instruction_mpki)).unwrap_or(0.0),
                data_mpki: geomean(&col(|e| e.data_mpki)).unwrap_or(0.0),
                instruction_reduction: if p == 0 { None } else { red(|e| e.instruction_reduction) },
                data_reduction: if p == 0 { None } else { red(|e| e.data_reduction) },
            }
        })
        .collect();

    Ok(CompareReport {
        baseline: baseline.name().to_string(),
        policies: policies.iter().map(|p| p.name().to_string()).collect(),
        traces: reports,
        geomean,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl CompareReport {
    fn rows(&self) -> Vec<(String, String, Vec<String>)> {
        let mut rows = Vec::new();
        for (p, policy) in self.policies.iter().enumerate() {
            for class in ["inst", "data"] {
                let cell = |e: &PolicyMpki| {
                    let inst = class == "inst";
                    if p == 0 {
                        format!("{:.2}", if inst { e.instruction_mpki } else { e.data_mpki })
                    } else {
                        fmt_opt(if inst { e.instruction_reduction } else { e.data_reduction })
                    }
                };
                let mut cells: Vec<String> = self.traces.iter().map(|t| cell(&t.entries[p])).collect();
                cells.push(cell(&self.geomean[p]));
                let label = if p == 0 {
                    format!("{policy} (MPKI)")
                } else {
                    format!("{policy} (% reduction)")
                };
                rows.push((label, class.to_string(), cells));
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,class");
        for t in &self.traces {
            let _ = write!(out, ",{}", t.trace);
        }
        out.push_str(",geomean\n");
        for (label, class, cells) in self.rows() {
            let _ = writeln!(out, "{label},{class},{}", cells.join(","));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut header = vec!["policy".to_string(), "class".to_string()];
        header.extend(self.traces.iter().map(|t| t.trace.clone()));
        header.push("geomean".into());
        let body: Vec<Vec<String>> = self
            .rows()
            .into_iter()
            .map(|(l, c, cells)| [vec![l, c], cells].concat())
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| body.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap())
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&header).chain(&body) {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PercentileHot,
    L2Capacity,
    L2Associativity,
    PageSize,
    OverlapMode,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 5] = [
        "percentile_hot",
        "l2_capacity",
        "l2_associativity",
        "page_size",
        "overlap_mode",
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PercentileHot => "percentile_hot",
            SweepAxis::L2Capacity => "l2_capacity",
            SweepAxis::L2Associativity => "l2_associativity",
            SweepAxis::PageSize => "page_size",
            SweepAxis::OverlapMode => "overlap_mode",
        }
    }

    /// Axes that change the temperature map and so need a profile.
    pub fn reclassifies(self) -> bool {
        matches!(self, SweepAxis::PercentileHot | SweepAxis::PageSize | SweepAxis::OverlapMode)
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let all = [
            SweepAxis::PercentileHot,
            SweepAxis::L2Capacity,
            SweepAxis::L2Associativity,
            SweepAxis::PageSize,
            SweepAxis::OverlapMode,
        ];
        all.into_iter()
            .find(|a| a.name() == s || a.name().replace('_', "-") == s)
            .ok_or_else(|| format!("unknown sweep axis {s:?}; valid axes: {}", SweepAxis::NAMES.join(", ")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

/// Parse a byte size such as `4096`, `128k`, `512KiB` or `2M`.
pub fn parse_size(text: &str) -> Result<u64> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let (digits, mult) = [("kib", 1u64 << 10), ("kb", 1 << 10), ("k", 1 << 10), ("mib", 1 << 20), ("mb", 1 << 20), ("m", 1 << 20)]
        .iter()
        .find_map(|(suffix, m)| lower.strip_suffix(suffix).map(|d| (d.to_string(), *m)))
        .unwrap_or((lower.clone(), 1));
    digits
        .trim()
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .ok_or_else(|| Error::Config(format!("bad size {t:?}")))
}

/// Inputs shared by every point of a sweep.
#[derive(Clone)]
pub struct SweepSetup<'a> {
    pub trace: &'a [MemoryAccess],
    /// Used as-is when no program is given.
    pub map: &'a TemperatureMap,
    /// Profiled code; when present the map is derived from it at every point.
    pub program: Option<&'a Program>,
    pub params: ThresholdParams,
    pub page_size: u64,
    pub overlap: OverlapMode,
    pub hierarchy: &'a HierarchyConfig,
    pub policy: &'a PolicyConfig,
    pub baseline: &'a PolicyConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub policy: String,
    pub baseline: String,
    pub instruction_mpki: f64,
    pub data_mpki: f64,
    pub baseline_instruction_mpki: f64,
    pub baseline_data_mpki: f64,
    /// Instruction MPKI reduction against the baseline: the speedup proxy.
    pub instruction_reduction: Option<f64>,
    pub data_reduction: Option<f64>,
    pub instruction_misses: u64,
    pub hot_instruction_misses: u64,
    pub hot_fraction: Option<f64>,
    pub hot_pages: usize,
    pub warm_pages: usize,
    pub cold_pages: usize,
}

pub fn sweep_rows_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "axis,value,policy,baseline,instruction_mpki,data_mpki,baseline_instruction_mpki,baseline_data_mpki,instruction_reduction,data_reduction,instruction_misses,hot_instruction_misses,hot_fraction,hot_pages,warm_pages,cold_pages\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{},{},{},{}",
            r.axis,
            r.value,
            r.policy,
            r.baseline,
            r.instruction_mpki,
            r.data_mpki,
            r.baseline_instruction_mpki,
            r.baseline_data_mpki,
            fmt_opt(r.instruction_reduction),
            fmt_opt(r.data_reduction),
            r.instruction_misses,
            r.hot_instruction_misses,
            r.hot_fraction.map_or_else(|| "n/a".into(), |f| format!("{f:.6}")),
            r.hot_pages,
            r.warm_pages,
            r.cold_pages,
        );
    }
    out
}

/// A program classified, laid out and page-mapped, with the trace moved onto
/// the new layout.
#[derive(Clone, Debug)]
pub struct DerivedLayout {
    pub trace: Vec<MemoryAccess>,
    pub map: TemperatureMap,
    pub layout: SectionLayout,
    pub hot_fraction: f64,
}

pub fn derive_layout(
    program: &Program,
    trace: &[MemoryAccess],
    params: &ThresholdParams,
    page_size: u64,
    overlap: OverlapMode,
) -> Result<DerivedLayout> {
    if !page_size.is_power_of_two() {
        return Err(Error::Config(format!("page size {page_size} is not a power of two")));
    }
    let temps = classify(&program.blocks, params)?;
    let base = program.origins.iter().copied().min().unwrap_or(0) / page_size * page_size;
    let layout = layout_sections(&program.blocks, &temps, base, 1);
    let outcome = build_page_map(&layout, page_size, overlap);
    let trace = program.relocation(&outcome.layout).trace(trace);
    Ok(DerivedLayout {
        trace,
        map: outcome.map,
        layout: outcome.layout,
        hot_fraction: hot_fraction(&program.blocks, &temps),
    })
}

struct Point {
    hierarchy: HierarchyConfig,
    params: ThresholdParams,
    page_size: u64,
    overlap: OverlapMode,
}

fn sweep_point(setup: &SweepSetup<'_>, axis: SweepAxis, value: &str) -> Result<Point> {
    let mut p = Point {
        hierarchy: setup.hierarchy.clone(),
        params: setup.params,
        page_size: setup.page_size,
        overlap: setup.overlap,
    };
    let bad = |what: &str| Error::Config(format!("bad {what} value {value:?}"));
    match axis {
        SweepAxis::PercentileHot => {
            let v: f64 = value.trim().parse().map_err(|_| bad("percentile_hot"))?;
            p.params.percentile_hot = v;
            p.params.percentile_cold = p.params.percentile_cold.max(v);
        }
        SweepAxis::L2Capacity => {
            p.hierarchy.l2.geometry.capacity_bytes = parse_size(value)?;
        }
        SweepAxis::L2Associativity => {
            // capacity stays fixed; the set count follows
            p.hierarchy.l2.geometry.associativity = value.trim().parse().map_err(|_| bad("associativity"))?;
        }
        SweepAxis::PageSize => p.page_size = parse_size(value)?,
        SweepAxis::OverlapMode => {
            p.overlap = match value.trim() {
                "pad" => OverlapMode::Pad,
                "unmark" => OverlapMode::Unmark,
                _ => return Err(bad("overlap_mode")),
            }
        }
    }
    p.hierarchy.validate()?;
    Ok(p)
}

/// One simulation pair (policy and baseline) per value, run in parallel and
/// returned in value order.
pub fn sweep(setup: &SweepSetup<'_>, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.axis.reclassifies() && setup.program.is_none() {
        return Err(Error::Config(format!(
            "sweeping {} needs a profile to reclassify",
            spec.axis.name()
        )));
    }
    let points: Vec<Point> = spec
        .values
        .iter()
        .map(|v| sweep_point(setup, spec.axis, v))
        .collect::<Result<_>>()?;
    points
        .par_iter()
        .zip(&spec.values)
        .map(|(point, value)| run_point(setup, spec.axis, value, point))
        .collect()
}

fn run_point(setup: &SweepSetup<'_>, axis: SweepAxis, value: &str, point: &Point) -> Result<SweepRow> {
    let derived = match setup.program {
        Some(program) => Some(derive_layout(
            program,
            setup.trace,
            &point.params,
            point.page_size,
            point.overlap,
        )?),
        None => None,
    };
    let (trace, map) = match &derived {
        Some(d) => (&d.trace[..], &d.map),
        None => (setup.trace, setup.map),
    };
    let run = |policy: &PolicyConfig| {
        let config = point.hierarchy.clone().with_l2_policy(policy.clone());
        simulate(trace, map, &config, setup.seed, SimOptions::default())
    };
    let candidate = run(setup.policy)?;
    let base = run(setup.baseline)?;
    let reduction = mpki_reduction(&base, &candidate)?;
    Ok(SweepRow {
        axis: axis.name().to_string(),
        value: value.trim().to_string(),
        policy: setup.policy.name().to_string(),
        baseline: setup.baseline.name().to_string(),
        instruction_mpki: candidate.l2.mpki(LineClass::Instruction)?,
        data_mpki: candidate.l2.mpki(LineClass::Data)?,
        baseline_instruction_mpki: base.l2.mpki(LineClass::Instruction)?,
        baseline_data_mpki: base.l2.mpki(LineClass::Data)?,
        instruction_reduction: reduction.instruction,
        data_reduction: reduction.data,
        instruction_misses: candidate.l2.counters.instruction.misses,
        hot_instruction_misses: candidate.l2.instruction_misses_by_temperature.hot,
        hot_fraction: derived.as_ref().map(|d| d.hot_fraction),
        hot_pages: map.count(Temperature::Hot),
        warm_pages: map.count(Temperature::Warm),
        cold_pages: map.count(Temperature::Cold),
    })
}
