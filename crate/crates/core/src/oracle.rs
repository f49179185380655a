//! Brute-force reference simulator.
//!
//! Walks the odometer one step at a time, enumerates every MAC each PE
//! executes, and derives the words it touches from those MACs. Residency,
//! multicast and collection are applied to literal word sets. Only the
//! binding and the assignment of loop ranges to PEs are shared with the
//! analytical path.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataflow::{Dataflow, Retention};
use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::mapping::{bind, LoopDim, PeTile};
use crate::model::{LayerKind, LayerShape};
use crate::perf::{LayerAnalysis, ProfiledLayer};

/// A word of some tensor: operand tag followed by up to four indices.
type Word = [u32; 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_dim: u64,
    pub max_pes: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_dim: 16,
            max_pes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimStep {
    pub compute: u64,
    /// Words delivered for this step, indexed by `TensorKind` (output is 0).
    pub distributed: [u64; 3],
    /// Partial sums flushed at the end of this step.
    pub collected: u64,
    /// Cycles this step occupies in the pipeline.
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub total_cycles: u64,
    pub fill_cycles: u64,
    pub drain_cycles: u64,
    /// Indexed by `TensorKind`; the output entry counts collected words.
    pub traffic_words: [u64; 3],
    pub per_step: Vec<SimStep>,
    /// MACs per PE id, idle PEs omitted.
    pub per_pe_macs: BTreeMap<usize, u64>,
    pub macs: u64,
    pub utilized_pes: u64,
    pub buffer_pe_bytes: u64,
    pub buffer_global_bytes: u64,
}

/// Words one PE needs during one step, and the MACs it runs.
struct PeWork {
    pe: usize,
    macs: u64,
    sets: [HashSet<Word>; 3],
}

fn pe_work(layer: &LayerShape, tile: &PeTile, seen: &mut HashSet<[u64; 6]>) -> Result<PeWork> {
    let mut sets: [HashSet<Word>; 3] = Default::default();
    let mut macs = 0;
    let r = |d: LoopDim| tile.range(d).lo..tile.range(d).hi;
    let cw = layer.kind.is_channelwise();
    for k in r(LoopDim::K) {
        for c in r(LoopDim::C) {
            for yo in r(LoopDim::Yo) {
                for xo in r(LoopDim::Xo) {
                    for fr in r(LoopDim::R) {
                        for fs in r(LoopDim::S) {
                            if !seen.insert([k, c, yo, xo, fr, fs]) {
                                return Err(Error::OracleCap(format!(
                                    "MAC ({k},{c},{yo},{xo},{fr},{fs}) executed twice"
                                )));
                            }
                            macs += 1;
                            let y = yo * layer.stride_y + fr;
                            let x = xo * layer.stride_x + fs;
                            let w = |v: u64| v as u32;
                            sets[0].insert([0, w(c), w(y), w(x), 0]);
                            match layer.kind {
                                LayerKind::ResidualAdd => {
                                    sets[0].insert([1, w(c), w(y), w(x), 0]);
                                }
                                LayerKind::DepthwiseConv => {
                                    sets[1].insert([0, w(c), w(fr), w(fs), 0]);
                                }
                                _ => {
                                    sets[1].insert([0, w(k), w(c), w(fr), w(fs)]);
                                }
                            }
                            let lead = if cw { c } else { k };
                            sets[2].insert([0, w(lead), w(yo), w(xo), 0]);
                        }
                    }
                }
            }
        }
    }
    Ok(PeWork {
        pe: tile.pe,
        macs,
        sets,
    })
}

fn find(step: &[PeWork], pe: usize) -> Option<&PeWork> {
    step.iter().find(|w| w.pe == pe)
}

fn union<'a>(sets: impl Iterator<Item = &'a HashSet<Word>>) -> HashSet<Word> {
    let mut u = HashSet::new();
    for s in sets {
        u.extend(s.iter().copied());
    }
    u
}

pub fn simulate(layer: &LayerShape, df: &Dataflow, hw: &HardwareConfig) -> Result<SimResult> {
    simulate_with(layer, df, hw, OracleLimits::default())
}

pub fn simulate_with(
    layer: &LayerShape,
    df: &Dataflow,
    hw: &HardwareConfig,
    limits: OracleLimits,
) -> Result<SimResult> {
    hw.validate()?;
    for (name, v) in [
        ("K", layer.k),
        ("C", layer.c),
        ("Y", layer.y),
        ("X", layer.x),
        ("R", layer.r),
        ("S", layer.s),
    ] {
        if v > limits.max_dim {
            return Err(Error::OracleCap(format!(
                "{name} = {v} exceeds the simulator cap of {}",
                limits.max_dim
            )));
        }
    }
    if hw.num_pes > limits.max_pes {
        return Err(Error::OracleCap(format!(
            "{} PEs exceeds the simulator cap of {}",
            hw.num_pes, limits.max_pes
        )));
    }
    let bound = bind(df, layer)?;
    let placement = bound.place(hw.num_pes);
    let retention = bound.dataflow.retention;

    // Execute every step and record what each PE touched.
    let mut seen = HashSet::new();
    let mut steps: Vec<Vec<PeWork>> = Vec::new();
    let mut idx = placement.first();
    loop {
        let work = placement
            .pe_tiles(&idx)
            .iter()
            .map(|t| pe_work(layer, t, &mut seen))
            .collect::<Result<Vec<_>>>()?;
        steps.push(work);
        if !placement.next(&mut idx) {
            break;
        }
    }
    let macs = seen.len() as u64;

    let n = steps.len();
    let mut per_step = Vec::with_capacity(n);
    let mut per_pe_macs = BTreeMap::new();
    let mut pe_high = 0;
    let mut global_high = 0;
    for s in 0..n {
        let cur = &steps[s];
        let prev = s.checked_sub(1).map(|p| &steps[p]);
        let next = steps.get(s + 1);
        let mut distributed = [0u64; 3];
        for t in 0..2 {
            if layer.kind == LayerKind::ResidualAdd && t == 1 {
                continue;
            }
            // Per receiving PE, the words that must cross the NoC.
            let fresh: Vec<HashSet<Word>> = match (retention, prev) {
                (Retention::None, _) | (_, None) => cur.iter().map(|w| w.sets[t].clone()).collect(),
                (Retention::Stationary, Some(prev)) => cur
                    .iter()
                    .map(|w| match find(prev, w.pe) {
                        Some(old) if old.sets[t] == w.sets[t] => HashSet::new(),
                        _ => w.sets[t].clone(),
                    })
                    .collect(),
                (Retention::StationaryPlusHalo, Some(prev)) => {
                    let held = union(prev.iter().map(|w| &w.sets[t]));
                    cur.iter()
                        .map(|w| w.sets[t].difference(&held).copied().collect())
                        .collect()
                }
            };
            distributed[t] = if hw.multicast {
                union(fresh.iter()).len() as u64
            } else {
                fresh.iter().map(|f| f.len() as u64).sum()
            };
        }
        let collected: u64 = cur
            .iter()
            .filter(|w| {
                let keep = retention != Retention::None
                    && next
                        .and_then(|nx| find(nx, w.pe))
                        .is_some_and(|nw| nw.sets[2] == w.sets[2]);
                !keep
            })
            .map(|w| w.sets[2].len() as u64)
            .sum();
        for w in cur {
            *per_pe_macs.entry(w.pe).or_insert(0) += w.macs;
            let held: u64 = w.sets.iter().map(|s| s.len() as u64).sum();
            pe_high = pe_high.max(held);
        }
        let staged: u64 = (0..3)
            .map(|t| union(cur.iter().map(|w| &w.sets[t])).len() as u64)
            .sum();
        global_high = global_high.max(staged);
        per_step.push(SimStep {
            compute: cur.iter().map(|w| w.macs).max().unwrap_or(0),
            distributed,
            collected,
            ticks: 0,
        });
    }

    // Replay the double-buffered pipeline tick by tick.
    let transfer = |words: u64| -> u64 {
        let mut bytes = words * hw.element_bytes;
        let mut ticks = 0;
        while bytes > 0 {
            bytes = bytes.saturating_sub(hw.noc_bandwidth);
            ticks += 1;
        }
        ticks
    };
    let fill_cycles = transfer(per_step[0].distributed.iter().sum());
    let drain_cycles = transfer(per_step[n - 1].collected);
    let mut total = fill_cycles;
    for s in 0..n {
        let incoming: u64 = per_step
            .get(s + 1)
            .map_or(0, |x| x.distributed.iter().sum());
        let outgoing = if s > 0 { per_step[s - 1].collected } else { 0 };
        let mut compute_left = per_step[s].compute;
        let mut noc_left = transfer(incoming + outgoing);
        let mut ticks = 0;
        while compute_left > 0 || noc_left > 0 {
            compute_left = compute_left.saturating_sub(1);
            noc_left = noc_left.saturating_sub(1);
            ticks += 1;
        }
        per_step[s].ticks = ticks;
        total += ticks;
    }
    total += drain_cycles;

    let mut traffic_words = [0u64; 3];
    for st in &per_step {
        traffic_words[0] += st.distributed[0];
        traffic_words[1] += st.distributed[1];
        traffic_words[2] += st.collected;
    }
    Ok(SimResult {
        total_cycles: total,
        fill_cycles,
        drain_cycles,
        traffic_words,
        utilized_pes: per_pe_macs.len() as u64,
        per_pe_macs,
        per_step,
        macs,
        buffer_pe_bytes: 2 * hw.element_bytes * pe_high,
        buffer_global_bytes: 2 * hw.element_bytes * global_high,
    })
}

/// Where the analysis first departs from the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    First,
    Steady,
    Last,
    Totals,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub mismatches: Vec<String>,
    pub phase: Option<Divergence>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            None => write!(f, "match"),
            Some(p) => write!(f, "diverges at {p:?}: {}", self.mismatches.join("; ")),
        }
    }
}

pub fn compare(analysis: &LayerAnalysis, sim: &SimResult) -> OracleReport {
    let mut mismatches = Vec::new();
    let mut phase = None;
    let mut check = |what: &str, a: u64, s: u64, p: Divergence| {
        if a != s {
            mismatches.push(format!("{what}: analysis {a}, oracle {s}"));
            phase.get_or_insert(p);
        }
    };
    check(
        "fill cycles",
        analysis.fill_cycles,
        sim.fill_cycles,
        Divergence::First,
    );
    let sim_steady: u64 = sim.per_step.iter().map(|s| s.ticks).sum();
    check(
        "steady cycles",
        analysis.steady_cycles,
        sim_steady,
        Divergence::Steady,
    );
    let sim_compute: u64 = sim.per_step.iter().map(|s| s.compute).sum();
    check(
        "compute cycles",
        analysis.compute_delay_total,
        sim_compute,
        Divergence::Steady,
    );
    check(
        "drain cycles",
        analysis.drain_cycles,
        sim.drain_cycles,
        Divergence::Last,
    );
    check(
        "total cycles",
        analysis.total_cycles,
        sim.total_cycles,
        Divergence::Totals,
    );
    for (i, name) in ["input words", "weight words", "collected words"]
        .iter()
        .enumerate()
    {
        check(
            name,
            analysis.traffic_words[i],
            sim.traffic_words[i],
            Divergence::Totals,
        );
    }
    check(
        "steps",
        analysis.steps,
        sim.per_step.len() as u64,
        Divergence::Totals,
    );
    check(
        "utilized PEs",
        analysis.utilized_pes,
        sim.utilized_pes,
        Divergence::Totals,
    );
    check("MACs", analysis.macs, sim.macs, Divergence::Totals);
    check(
        "PE buffer bytes",
        analysis.buffer_pe_bytes,
        sim.buffer_pe_bytes,
        Divergence::Totals,
    );
    check(
        "global buffer bytes",
        analysis.buffer_global_bytes,
        sim.buffer_global_bytes,
        Divergence::Totals,
    );
    OracleReport { mismatches, phase }
}

/// A reproducible small instance for equivalence testing.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCase {
    pub layer: LayerShape,
    pub hw: HardwareConfig,
}

/// Draws a layer of any kind with every dimension at most `max_dim`, and
/// hardware with at most `max_pes` PEs.
pub fn random_case(seed: u64, max_dim: u64, max_pes: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_dim = max_dim.max(1);
    let kinds = [
        LayerKind::Conv2D,
        LayerKind::DepthwiseConv,
        LayerKind::PointwiseConv,
        LayerKind::FullyConnected,
        LayerKind::ResidualAdd,
    ];
    let kind = kinds[rng.gen_range(0..kinds.len())];
    let mut dim = |hi: u64| rng.gen_range(1..=hi.min(max_dim));
    let (mut k, c) = (dim(max_dim), dim(max_dim));
    let (mut r, mut s) = (dim(3), dim(3));
    let (mut y, mut x) = (r.max(dim(max_dim)), s.max(dim(max_dim)));
    let (mut sy, mut sx) = (dim(2), dim(2));
    match kind {
        LayerKind::Conv2D => {}
        LayerKind::DepthwiseConv => k = c,
        LayerKind::PointwiseConv => (r, s) = (1, 1),
        LayerKind::FullyConnected => (y, x, sy, sx) = (r, s, 1, 1),
        LayerKind::ResidualAdd => (k, r, s, sy, sx) = (c, 1, 1, 1, 1),
    }
    let layer = LayerShape::new(format!("case{seed}"), kind, k, c, y, x, r, s, sy, sx)
        .expect("generated shapes are valid");
    let hw = HardwareConfig {
        num_pes: rng.gen_range(1..=max_pes.max(1)),
        noc_bandwidth: rng.gen_range(1..=16),
        multicast: rng.gen_bool(0.5),
        element_bytes: rng.gen_range(1..=2),
        ..HardwareConfig::default()
    };
    RandomCase { layer, hw }
}

/// Runs both paths on one instance.
pub fn check_case(layer: &LayerShape, df: &Dataflow, hw: &HardwareConfig) -> Result<OracleReport> {
    let analysis = ProfiledLayer::new(layer, df, hw.num_pes)?.evaluate(hw);
    let sim = simulate(layer, df, hw)?;
    Ok(compare(&analysis, &sim))
}
