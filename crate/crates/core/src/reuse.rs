//! Per-step NoC traffic of a placed mapping, with temporal, spatial
//! (multicast) and spatio-temporal (halo) reuse credited.
//!
//! Semantics of one tile step `s`:
//!
//! * Each active PE needs a box of words per tensor. Its input box is
//!   `C x {yo*sy + r} x {xo*sx + s}` over its loop ranges.
//! * `Retention::None`: every needed word is sent.
//! * `Retention::Stationary`: a PE that held exactly the same words of a
//!   tensor at `s-1` keeps them; any other PE receives its whole tile.
//! * `Retention::StationaryPlusHalo`: words held anywhere in the array at
//!   `s-1` are forwarded by neighbours; only fresh words cross the NoC.
//! * With multicast a word is sent once per step however many PEs need it,
//!   otherwise once per receiving PE.
//! * A PE flushes its partial sums at the end of `s` unless it works on the
//!   same outputs at `s+1` and retention is not `None`. Every
//!   flushed word is one collected word; reduction happens at the buffer.
//!
//! Step `s` is fully determined, up to translation, by which index of each
//! odometer loop it sits at among {first, interior, penultimate, last}.
//! Steps are grouped by that signature and each group is evaluated once on a
//! representative step.

use crate::dataflow::Retention;
use crate::hardware::HardwareConfig;
use crate::mapping::{BoundMapping, LoopDim, PeTile, Placement, Span};
use crate::model::{LayerKind, LayerShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorKind {
    Input,
    Weight,
    Output,
}

impl TensorKind {
    pub const ALL: [TensorKind; 3] = [TensorKind::Input, TensorKind::Weight, TensorKind::Output];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TensorKind::Input => "input",
            TensorKind::Weight => "weight",
            TensorKind::Output => "output",
        }
    }

    /// Loop dimensions whose ranges determine this tensor's tile.
    pub fn coupled_dims(self, kind: LayerKind) -> &'static [LoopDim] {
        use LoopDim::*;
        match (self, kind.is_channelwise()) {
            (TensorKind::Input, _) => &[C, Yo, Xo, R, S],
            (TensorKind::Weight, false) => &[K, C, R, S],
            (TensorKind::Weight, true) => &[C, R, S],
            (TensorKind::Output, false) => &[K, Yo, Xo],
            (TensorKind::Output, true) => &[C, Yo, Xo],
        }
    }

    /// Words per index tuple: residual adds read two operands and have no
    /// weights.
    pub fn multiplicity(self, kind: LayerKind) -> u64 {
        match (self, kind) {
            (TensorKind::Input, LayerKind::ResidualAdd) => 2,
            (TensorKind::Weight, LayerKind::ResidualAdd) => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReuseClass {
    Temporal,
    Spatial,
    SpatioTemporal,
    None,
}

/// Sorted, disjoint, non-adjacent half-open intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
struct IntervalSet(Vec<Span>);

impl IntervalSet {
    fn span(s: Span) -> Self {
        IntervalSet(vec![s])
    }

    /// `{o * stride + f : o in outputs, f in filter}`.
    fn window(outputs: Span, filter: Span, stride: u64) -> Self {
        let mut v: Vec<Span> = Vec::new();
        for o in outputs.lo..outputs.hi {
            let s = Span {
                lo: o * stride + filter.lo,
                hi: o * stride + filter.hi,
            };
            match v.last_mut() {
                Some(last) if s.lo <= last.hi => last.hi = last.hi.max(s.hi),
                _ => v.push(s),
            }
        }
        IntervalSet(v)
    }

    fn len(&self) -> u64 {
        self.0.iter().map(Span::len).sum()
    }

    fn merged(mut all: Vec<Span>) -> IntervalSet {
        all.sort_unstable_by_key(|s| s.lo);
        let mut v: Vec<Span> = Vec::with_capacity(all.len());
        for s in all {
            match v.last_mut() {
                Some(last) if s.lo <= last.hi => last.hi = last.hi.max(s.hi),
                _ => v.push(s),
            }
        }
        IntervalSet(v)
    }

    #[cfg(test)]
    fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::merged(self.0.iter().chain(&other.0).copied().collect())
    }

    fn intersection_len(&self, other: &IntervalSet) -> u64 {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if hi > lo {
                n += hi - lo;
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        n
    }
}

/// How one axis of a tensor tile follows from the PE's loop ranges.
#[derive(Clone, Copy)]
enum Axis {
    Plain(LoopDim),
    /// Input rows or columns touched by an output range and a filter range.
    Window(LoopDim, LoopDim, u64),
}

impl Axis {
    fn covers(self, d: LoopDim) -> bool {
        match self {
            Axis::Plain(a) => a == d,
            Axis::Window(o, f, _) => o == d || f == d,
        }
    }

    fn set(self, t: &PeTile) -> IntervalSet {
        match self {
            Axis::Plain(d) => IntervalSet::span(t.range(d)),
            Axis::Window(o, f, stride) => IntervalSet::window(t.range(o), t.range(f), stride),
        }
    }
}

fn tensor_axes(layer: &LayerShape, tensor: TensorKind) -> Vec<Axis> {
    use LoopDim::*;
    match tensor {
        TensorKind::Input => vec![
            Axis::Plain(C),
            Axis::Window(Yo, R, layer.stride_y),
            Axis::Window(Xo, S, layer.stride_x),
        ],
        TensorKind::Weight => vec![
            Axis::Plain(K),
            Axis::Plain(C),
            Axis::Plain(R),
            Axis::Plain(S),
        ],
        TensorKind::Output if layer.kind.is_channelwise() => {
            vec![Axis::Plain(C), Axis::Plain(Yo), Axis::Plain(Xo)]
        }
        TensorKind::Output => vec![Axis::Plain(K), Axis::Plain(Yo), Axis::Plain(Xo)],
    }
}

/// The distinct index sets one axis takes across a step's PEs.
struct AxisTable {
    sets: Vec<IntervalSet>,
    lens: Vec<u64>,
    /// Per active PE, an index into `sets`.
    ids: Vec<usize>,
}

impl AxisTable {
    /// Two PEs can differ on this axis only through the unit coordinates of
    /// spatial directives on the axis' dimensions, so those coordinates
    /// name the distinct sets without hashing any ranges.
    fn new(axis: Axis, p: &Placement, tiles: &[PeTile], coords: &[Vec<u64>]) -> Self {
        let mut radix = 1;
        let mut weights = Vec::new();
        for (slot, &j) in p.spatial.iter().enumerate() {
            if axis.covers(p.bound.directives[j].dim) {
                weights.push((slot, radix));
                radix *= p.units[j];
            }
        }
        let mut dense = vec![usize::MAX; radix as usize];
        let mut sets = Vec::new();
        let ids = tiles
            .iter()
            .zip(coords)
            .map(|(t, c)| {
                let key = weights.iter().map(|&(slot, w)| c[slot] * w).sum::<u64>() as usize;
                if dense[key] == usize::MAX {
                    dense[key] = sets.len();
                    sets.push(axis.set(t));
                }
                dense[key]
            })
            .collect();
        let lens = sets.iter().map(IntervalSet::len).collect();
        AxisTable { sets, lens, ids }
    }

    fn union(&self, pes: &[usize]) -> IntervalSet {
        let mut used = vec![false; self.sets.len()];
        for &i in pes {
            used[self.ids[i]] = true;
        }
        let spans: Vec<Span> = self
            .sets
            .iter()
            .zip(&used)
            .filter(|(_, u)| **u)
            .flat_map(|(s, _)| s.0.iter().copied())
            .collect();
        IntervalSet::merged(spans)
    }
}

/// Words of one tensor at one step, counted both ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Words {
    pub multicast: u64,
    pub unicast: u64,
}

impl Words {
    pub fn get(&self, multicast: bool) -> u64 {
        if multicast {
            self.multicast
        } else {
            self.unicast
        }
    }
}

/// The active tiles of one step, with per-axis tensor sets precomputed.
struct StepTiles<'a> {
    layer: &'a LayerShape,
    tiles: Vec<PeTile>,
    tables: [Vec<AxisTable>; 3],
    /// Tile index per PE id, `usize::MAX` when the PE is idle.
    by_pe: Vec<usize>,
}

impl<'a> StepTiles<'a> {
    fn new(p: &'a Placement, idx: &[u64]) -> Self {
        let layer = &p.bound.layer;
        let tiles = p.pe_tiles(idx);
        let units: Vec<u64> = p.spatial.iter().map(|&j| p.units[j]).collect();
        let coords: Vec<Vec<u64>> = tiles
            .iter()
            .map(|t| {
                let mut pe = t.pe as u64;
                let mut c = vec![0; units.len()];
                for slot in (0..units.len()).rev() {
                    c[slot] = pe % units[slot];
                    pe /= units[slot];
                }
                c
            })
            .collect();
        let tables = TensorKind::ALL.map(|t| {
            tensor_axes(layer, t)
                .into_iter()
                .map(|axis| AxisTable::new(axis, p, &tiles, &coords))
                .collect()
        });
        let mut by_pe = vec![usize::MAX; units.iter().product::<u64>() as usize];
        for (i, t) in tiles.iter().enumerate() {
            by_pe[t.pe] = i;
        }
        StepTiles {
            layer,
            tiles,
            tables,
            by_pe,
        }
    }

    /// Whether the PE holding tile `i` here holds exactly the same words of
    /// `tensor` in `other`.
    fn holds_same(&self, tensor: TensorKind, i: usize, other: &StepTiles) -> bool {
        let j = match other.by_pe.get(self.tiles[i].pe) {
            Some(&j) if j != usize::MAX => j,
            _ => return false,
        };
        self.tables[tensor.index()]
            .iter()
            .zip(&other.tables[tensor.index()])
            .all(|(a, b)| a.sets[a.ids[i]] == b.sets[b.ids[j]])
    }

    fn all(&self) -> Vec<usize> {
        (0..self.tiles.len()).collect()
    }

    fn size(&self, tensor: TensorKind, i: usize) -> u64 {
        self.tables[tensor.index()]
            .iter()
            .map(|a| a.lens[a.ids[i]])
            .product::<u64>()
            * tensor.multiplicity(self.layer.kind)
    }

    /// Per-axis union over the selected PEs; empty when none are selected.
    fn image(&self, tensor: TensorKind, pes: &[usize]) -> Vec<IntervalSet> {
        self.tables[tensor.index()]
            .iter()
            .map(|a| a.union(pes))
            .collect()
    }

    fn image_len(&self, tensor: TensorKind, img: &[IntervalSet]) -> u64 {
        img.iter().map(IntervalSet::len).product::<u64>() * tensor.multiplicity(self.layer.kind)
    }

    fn compute(&self) -> u64 {
        self.tiles.iter().map(PeTile::macs).max().unwrap_or(0)
    }

    fn pe_words(&self) -> u64 {
        (0..self.tiles.len())
            .map(|i| {
                TensorKind::ALL
                    .iter()
                    .map(|&t| self.size(t, i))
                    .sum::<u64>()
            })
            .max()
            .unwrap_or(0)
    }

    fn array_words(&self) -> u64 {
        let all = self.all();
        TensorKind::ALL
            .iter()
            .map(|&t| self.image_len(t, &self.image(t, &all)))
            .sum()
    }

    /// Words of `tensor` that must cross the NoC for this step.
    fn distributed(
        &self,
        tensor: TensorKind,
        retention: Retention,
        prev: Option<&StepTiles>,
    ) -> Words {
        let n = self.tiles.len();
        let all = self.all();
        let full = || Words {
            multicast: self.image_len(tensor, &self.image(tensor, &all)),
            unicast: (0..n).map(|i| self.size(tensor, i)).sum(),
        };
        let Some(prev) = prev else {
            return full();
        };
        match retention {
            Retention::None => full(),
            Retention::Stationary => {
                let needers: Vec<usize> = (0..n)
                    .filter(|&i| !self.holds_same(tensor, i, prev))
                    .collect();
                if needers.is_empty() {
                    return Words::default();
                }
                Words {
                    multicast: self.image_len(tensor, &self.image(tensor, &needers)),
                    unicast: needers.iter().map(|&i| self.size(tensor, i)).sum(),
                }
            }
            Retention::StationaryPlusHalo => {
                if prev.tiles.is_empty() {
                    return full();
                }
                let held = prev.image(tensor, &prev.all());
                let mult = tensor.multiplicity(self.layer.kind);
                let img = self.image(tensor, &all);
                let img_overlap: u64 = img
                    .iter()
                    .zip(&held)
                    .map(|(x, h)| x.intersection_len(h))
                    .product::<u64>()
                    * mult;
                // Overlap of each distinct axis set with what the array holds.
                let tables = &self.tables[tensor.index()];
                let per_set: Vec<Vec<u64>> = tables
                    .iter()
                    .zip(&held)
                    .map(|(a, h)| a.sets.iter().map(|s| s.intersection_len(h)).collect())
                    .collect();
                let unicast = (0..n)
                    .map(|i| {
                        let overlap = tables
                            .iter()
                            .zip(&per_set)
                            .map(|(a, o)| o[a.ids[i]])
                            .product::<u64>()
                            * mult;
                        self.size(tensor, i) - overlap
                    })
                    .sum();
                Words {
                    multicast: self.image_len(tensor, &img) - img_overlap,
                    unicast,
                }
            }
        }
    }

    /// Partial sums flushed at the end of this step.
    fn collected(&self, retention: Retention, next: Option<&StepTiles>) -> u64 {
        (0..self.tiles.len())
            .filter(|&i| {
                let keep = retention != Retention::None
                    && next.is_some_and(|next| self.holds_same(TensorKind::Output, i, next));
                !keep
            })
            .map(|i| self.size(TensorKind::Output, i))
            .sum()
    }
}

/// Distribution words per tensor (output entries are always zero).
pub type TensorWords = [Words; 3];

/// A group of steps with identical cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepClass {
    pub occurrences: u64,
    /// Odometer loop that advanced into this step; `None` for the first step.
    pub advanced: Option<usize>,
    /// Cycles: the largest per-PE MAC count.
    pub compute: u64,
    pub active_pes: u64,
    /// Words distributed for this step.
    pub distributed: TensorWords,
    /// Words distributed for the next step (prefetched during this one).
    pub distributed_next: TensorWords,
    /// Partial sums flushed at the end of this step.
    pub collected: u64,
    /// Partial sums of the previous step, collected during this one.
    pub collected_prev: u64,
    pub pe_words: u64,
    pub array_words: u64,
}

impl StepClass {
    /// NoC words moved while this step computes.
    pub fn overlapped_words(&self, multicast: bool) -> u64 {
        self.distributed_next
            .iter()
            .map(|w| w.get(multicast))
            .sum::<u64>()
            + self.collected_prev
    }

    pub fn is_first(&self) -> bool {
        self.advanced.is_none()
    }
}

/// Every step of a placed mapping, grouped into classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficProfile {
    pub classes: Vec<StepClass>,
    pub steps: u64,
    /// Words distributed before the first step can start.
    pub fill: TensorWords,
    /// Partial sums left after the last step.
    pub drain: u64,
    pub utilized_pes: u64,
    pub cluster_size: u64,
    pub cluster_count: u64,
}

impl TrafficProfile {
    pub fn fill_words(&self, multicast: bool) -> u64 {
        self.fill.iter().map(|w| w.get(multicast)).sum()
    }

    pub fn total_distributed(&self, tensor: TensorKind, multicast: bool) -> u64 {
        self.classes
            .iter()
            .map(|c| c.occurrences * c.distributed[tensor.index()].get(multicast))
            .sum()
    }

    pub fn total_collected(&self) -> u64 {
        self.classes
            .iter()
            .map(|c| c.occurrences * c.collected)
            .sum()
    }

    pub fn total_words(&self, multicast: bool) -> u64 {
        TensorKind::ALL
            .iter()
            .map(|&t| self.total_distributed(t, multicast))
            .sum::<u64>()
            + self.total_collected()
    }

    pub fn total_macs_upper_bound(&self) -> u64 {
        self.classes
            .iter()
            .map(|c| c.occurrences * c.compute * c.active_pes)
            .sum()
    }

    pub fn pe_words(&self) -> u64 {
        self.classes.iter().map(|c| c.pe_words).max().unwrap_or(0)
    }

    pub fn array_words(&self) -> u64 {
        self.classes
            .iter()
            .map(|c| c.array_words)
            .max()
            .unwrap_or(0)
    }
}

/// Representative indices of a loop with `radix` iterations and how many
/// real indices each stands for.
fn categories(radix: u64) -> Vec<(u64, u64)> {
    if radix <= 4 {
        (0..radix).map(|i| (i, 1)).collect()
    } else {
        vec![(0, 1), (1, radix - 3), (radix - 2, 1), (radix - 1, 1)]
    }
}

fn evaluate_class(p: &Placement, idx: &[u64], occurrences: u64) -> StepClass {
    let retention = p.bound.dataflow.retention;
    let cur = StepTiles::new(p, idx);

    let mut prev_idx = idx.to_vec();
    let prev = p.prev(&mut prev_idx).then(|| StepTiles::new(p, &prev_idx));
    let advanced = prev.as_ref().map(|_| {
        (0..idx.len())
            .rev()
            .find(|&j| idx[j] > 0)
            .expect("a step with a predecessor has a non-zero index")
    });
    let mut next_idx = idx.to_vec();
    let next = p.next(&mut next_idx).then(|| StepTiles::new(p, &next_idx));

    let distributed = TensorKind::ALL.map(|t| cur.distributed(t, retention, prev.as_ref()));
    let distributed_next = TensorKind::ALL.map(|t| {
        next.as_ref().map_or(Words::default(), |n| {
            n.distributed(t, retention, Some(&cur))
        })
    });
    let collected = cur.collected(retention, next.as_ref());
    let collected_prev = prev
        .as_ref()
        .map_or(0, |pr| pr.collected(retention, Some(&cur)));
    let distributed = zero_output(distributed);
    let distributed_next = zero_output(distributed_next);

    StepClass {
        occurrences,
        advanced,
        compute: cur.compute(),
        active_pes: cur.tiles.len() as u64,
        distributed,
        distributed_next,
        collected,
        collected_prev,
        pe_words: cur.pe_words(),
        array_words: cur.array_words(),
    }
}

/// Outputs are produced in the array, never distributed.
fn zero_output(mut w: TensorWords) -> TensorWords {
    w[TensorKind::Output.index()] = Words::default();
    w
}

pub fn traffic_profile(p: &Placement) -> TrafficProfile {
    fn walk(
        p: &Placement,
        idx: &mut Vec<u64>,
        j: usize,
        occ: u64,
        out: &mut Vec<StepClass>,
        steps: &mut u64,
    ) {
        if j == idx.len() {
            *steps += occ;
            out.push(evaluate_class(p, idx, occ));
            return;
        }
        for (rep, count) in categories(p.radix(idx, j)) {
            idx[j] = rep;
            walk(p, idx, j + 1, occ * count, out, steps);
        }
        idx[j] = 0;
    }

    let mut classes = Vec::new();
    let mut steps = 0;
    let mut idx = p.first();
    walk(p, &mut idx, 0, 1, &mut classes, &mut steps);

    let fill = classes
        .iter()
        .find(|c| c.is_first())
        .map(|c| c.distributed)
        .expect("the first step is always a class");
    let drain = last_collection(p);
    TrafficProfile {
        classes,
        steps,
        fill,
        drain,
        utilized_pes: p.utilized_pes(),
        cluster_size: p.cluster_size,
        cluster_count: p.cluster_count,
    }
}

fn last_index(p: &Placement) -> Vec<u64> {
    let mut idx = p.first();
    for j in 0..idx.len() {
        idx[j] = p.radix(&idx, j) - 1;
    }
    idx
}

fn last_collection(p: &Placement) -> u64 {
    StepTiles::new(p, &last_index(p)).collected(p.bound.dataflow.retention, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallelism {
    pub cluster_count: u64,
    pub cluster_size: u64,
    pub utilized_pes: u64,
    /// MACs of a full (non-edge) step on one PE.
    pub per_pe_work_per_step: u64,
}

pub fn parallelism(bound: &BoundMapping, hw: &HardwareConfig) -> Parallelism {
    let p = bound.place(hw.num_pes);
    let work = p
        .pe_tiles(&p.first())
        .iter()
        .map(PeTile::macs)
        .max()
        .unwrap_or(1);
    Parallelism {
        cluster_count: p.cluster_count,
        cluster_size: p.cluster_size,
        utilized_pes: p.utilized_pes(),
        per_pe_work_per_step: work,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    First,
    /// The most frequent step entered by advancing odometer loop `n`.
    Steady(usize),
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileTraffic {
    pub phase: Phase,
    /// Indexed by `TensorKind`; output is always zero.
    pub distributed: [u64; 3],
    pub collected: u64,
}

impl TileTraffic {
    pub fn distributed_total(&self) -> u64 {
        self.distributed.iter().sum()
    }
}

/// Traffic of one representative step. `None` when no step matches the
/// phase (a loop of radix 1 never advances).
pub fn tile_traffic(
    bound: &BoundMapping,
    hw: &HardwareConfig,
    phase: Phase,
) -> Option<TileTraffic> {
    let p = bound.place(hw.num_pes);
    let retention = bound.dataflow.retention;
    let idx = match phase {
        Phase::First => p.first(),
        Phase::Last => last_index(&p),
        Phase::Steady(j) => {
            let profile = traffic_profile(&p);
            let class = profile
                .classes
                .iter()
                .filter(|c| c.advanced == Some(j))
                .max_by_key(|c| c.occurrences)?;
            return Some(TileTraffic {
                phase,
                distributed: class.distributed.map(|w| w.get(hw.multicast)),
                collected: class.collected,
            });
        }
    };
    let cur = StepTiles::new(&p, &idx);
    let mut prev_idx = idx.clone();
    let prev = p.prev(&mut prev_idx).then(|| StepTiles::new(&p, &prev_idx));
    let mut next_idx = idx.clone();
    let next = p.next(&mut next_idx).then(|| StepTiles::new(&p, &next_idx));
    let distributed =
        zero_output(TensorKind::ALL.map(|t| cur.distributed(t, retention, prev.as_ref())));
    Some(TileTraffic {
        phase,
        distributed: distributed.map(|w| w.get(hw.multicast)),
        collected: cur.collected(retention, next.as_ref()),
    })
}

/// Every reuse mechanism that lowers this tensor's traffic, in reporting
/// priority order.
pub fn reuse_mechanisms(
    bound: &BoundMapping,
    hw: &HardwareConfig,
    tensor: TensorKind,
) -> Vec<ReuseClass> {
    if tensor.multiplicity(bound.layer.kind) == 0 {
        return Vec::new();
    }
    let p = bound.place(hw.num_pes);
    let profile = traffic_profile(&p);
    let with = |retention: Retention| {
        let mut alt = p.clone();
        alt.bound.dataflow.retention = retention;
        traffic_profile(&alt)
    };
    let total = |pr: &TrafficProfile, multicast: bool| match tensor {
        TensorKind::Output => pr.total_collected(),
        t => pr.total_distributed(t, multicast),
    };
    let mut found = Vec::new();
    if tensor != TensorKind::Output {
        // Some word is wanted by several PEs in the same step.
        let first = profile.classes.iter().find(|c| c.is_first()).unwrap();
        let w = first.distributed[tensor.index()];
        if w.unicast > w.multicast {
            found.push(ReuseClass::Spatial);
        }
    }
    let retention = bound.dataflow.retention;
    if retention == Retention::StationaryPlusHalo && tensor != TensorKind::Output {
        let plain = with(Retention::Stationary);
        if total(&profile, true) < total(&plain, true) {
            found.push(ReuseClass::SpatioTemporal);
        }
    }
    if retention != Retention::None {
        let none = with(Retention::None);
        if total(&profile, true) < total(&none, true) {
            found.push(ReuseClass::Temporal);
        }
    }
    found
}

/// The dominant reuse mechanism: the first applicable of Spatial,
/// SpatioTemporal, Temporal.
pub fn reuse_class(bound: &BoundMapping, hw: &HardwareConfig, tensor: TensorKind) -> ReuseClass {
    reuse_mechanisms(bound, hw, tensor)
        .first()
        .copied()
        .unwrap_or(ReuseClass::None)
}
