//! Delays, throughput, bandwidth requirements and buffer sizing.
//!
//! Steps are double buffered: while step `s` computes, the NoC distributes
//! the operands of `s+1` and collects the partial sums of `s-1`. A layer
//! therefore costs
//!
//! ```text
//! comm(D(0)) + sum_s max(compute(s), comm(D(s+1) + C(s-1))) + comm(C(last))
//! ```
//!
//! The first and last terms are a one-time fill and drain. Throughput and
//! average bandwidth describe the pipelined steady state between them, so
//! throughput reaches the roofline exactly once the NoC keeps up with every
//! step.

use crate::dataflow::Dataflow;
use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::mapping::{bind, BoundMapping};
use crate::model::LayerShape;
use crate::reuse::{traffic_profile, TensorKind, TrafficProfile};

/// Cycles to move `words` across the NoC.
pub fn comm_delay(words: u64, hw: &HardwareConfig) -> u64 {
    (words * hw.element_bytes).div_ceil(hw.noc_bandwidth)
}

pub fn tile_delay(compute_cycles: u64, comm_cycles: u64) -> u64 {
    compute_cycles.max(comm_cycles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Compute,
    Communication,
}

impl Bound {
    pub fn as_str(self) -> &'static str {
        match self {
            Bound::Compute => "compute",
            Bound::Communication => "communication",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerAnalysis {
    pub layer: String,
    pub dataflow: String,
    pub macs: u64,
    pub steps: u64,
    pub utilized_pes: u64,
    pub cluster_size: u64,
    pub cluster_count: u64,
    /// MACs per cycle with unlimited bandwidth.
    pub roofline_throughput: f64,
    /// Steady-state MACs per cycle at the configured bandwidth.
    pub throughput: f64,
    pub compute_delay_total: u64,
    /// Cycles the NoC is busy, fill and drain included.
    pub comm_delay_total: u64,
    pub total_cycles: u64,
    /// Distribution of the first step, before any compute.
    pub fill_cycles: u64,
    /// Collection of the last step, after all compute.
    pub drain_cycles: u64,
    /// Cycles between the end of the fill and the start of the drain.
    pub steady_cycles: u64,
    /// Bytes per cycle; `None` when some step moves data without computing.
    pub peak_bandwidth: Option<u64>,
    pub avg_bandwidth: f64,
    /// NoC bytes moved while steps compute, fill and drain excluded.
    pub steady_bytes: u64,
    /// Words over the whole layer, indexed by `TensorKind`; the output entry
    /// counts collected partial sums.
    pub traffic_words: [u64; 3],
    pub buffer_global_bytes: u64,
    pub buffer_pe_bytes: u64,
    pub bound: Bound,
}

impl LayerAnalysis {
    pub fn total_traffic_bytes(&self, hw: &HardwareConfig) -> u64 {
        self.traffic_words.iter().sum::<u64>() * hw.element_bytes
    }
}

/// A bound layer with its step profile, ready to be evaluated at any
/// bandwidth.
#[derive(Debug, Clone)]
pub struct ProfiledLayer {
    pub bound: BoundMapping,
    pub profile: TrafficProfile,
}

impl ProfiledLayer {
    pub fn new(layer: &LayerShape, df: &Dataflow, num_pes: u64) -> Result<Self> {
        let bound = bind(df, layer)?;
        Ok(Self::from_bound(bound, num_pes))
    }

    pub fn from_bound(bound: BoundMapping, num_pes: u64) -> Self {
        let profile = traffic_profile(&bound.place(num_pes));
        ProfiledLayer { bound, profile }
    }

    /// `(global, per_pe)` bytes, double buffered.
    pub fn buffer_requirement(&self, hw: &HardwareConfig) -> (u64, u64) {
        (
            2 * hw.element_bytes * self.profile.array_words(),
            2 * hw.element_bytes * self.profile.pe_words(),
        )
    }

    pub fn check_buffers(&self, hw: &HardwareConfig) -> Result<()> {
        let (global, pe) = self.buffer_requirement(hw);
        if global > hw.global_buffer_bytes {
            return Err(Error::BufferOverflow {
                level: "global",
                required: global,
                available: hw.global_buffer_bytes,
            });
        }
        if pe > hw.pe_buffer_bytes {
            return Err(Error::BufferOverflow {
                level: "pe",
                required: pe,
                available: hw.pe_buffer_bytes,
            });
        }
        Ok(())
    }

    pub fn peak_bandwidth(&self, hw: &HardwareConfig) -> Option<u64> {
        let mut peak = 1;
        for c in &self.profile.classes {
            let bytes = c.overlapped_words(hw.multicast) * hw.element_bytes;
            if c.compute == 0 {
                if bytes > 0 {
                    return None;
                }
                continue;
            }
            peak = peak.max(bytes.div_ceil(c.compute));
        }
        Some(peak)
    }

    /// Evaluates at `hw.noc_bandwidth` without checking buffers.
    pub fn evaluate(&self, hw: &HardwareConfig) -> LayerAnalysis {
        let p = &self.profile;
        let mc = hw.multicast;
        let fill = comm_delay(p.fill_words(mc), hw);
        let drain = comm_delay(p.drain, hw);
        let mut steady = 0;
        let mut compute_total = 0;
        let mut comm_total = fill + drain;
        let mut steady_words = 0;
        let mut bound = Bound::Compute;
        for c in &p.classes {
            let words = c.overlapped_words(mc);
            let comm = comm_delay(words, hw);
            if comm > c.compute {
                bound = Bound::Communication;
            }
            steady += c.occurrences * tile_delay(c.compute, comm);
            compute_total += c.occurrences * c.compute;
            comm_total += c.occurrences * comm;
            steady_words += c.occurrences * words;
        }
        let macs = self.bound.layer.macs();
        let mut traffic_words = [0; 3];
        for t in [TensorKind::Input, TensorKind::Weight] {
            traffic_words[t.index()] = p.total_distributed(t, mc);
        }
        traffic_words[TensorKind::Output.index()] = p.total_collected();
        let (global, pe) = self.buffer_requirement(hw);
        LayerAnalysis {
            layer: self.bound.layer.name.clone(),
            dataflow: self.bound.dataflow.name.clone(),
            macs,
            steps: p.steps,
            utilized_pes: p.utilized_pes,
            cluster_size: p.cluster_size,
            cluster_count: p.cluster_count,
            roofline_throughput: ratio(macs, compute_total),
            throughput: ratio(macs, steady),
            compute_delay_total: compute_total,
            comm_delay_total: comm_total,
            total_cycles: fill + steady + drain,
            fill_cycles: fill,
            drain_cycles: drain,
            steady_cycles: steady,
            peak_bandwidth: self.peak_bandwidth(hw),
            avg_bandwidth: ratio(steady_words * hw.element_bytes, steady),
            steady_bytes: steady_words * hw.element_bytes,
            traffic_words,
            buffer_global_bytes: global,
            buffer_pe_bytes: pe,
            bound,
        }
    }

    pub fn analyze(&self, hw: &HardwareConfig) -> Result<LayerAnalysis> {
        hw.validate()?;
        self.check_buffers(hw)?;
        Ok(self.evaluate(hw))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn analyze_layer(
    layer: &LayerShape,
    df: &Dataflow,
    hw: &HardwareConfig,
) -> Result<LayerAnalysis> {
    hw.validate()?;
    ProfiledLayer::new(layer, df, hw.num_pes)?.analyze(hw)
}

pub fn peak_bandwidth(
    layer: &LayerShape,
    df: &Dataflow,
    hw: &HardwareConfig,
) -> Result<Option<u64>> {
    Ok(ProfiledLayer::new(layer, df, hw.num_pes)?.peak_bandwidth(hw))
}

pub fn avg_bandwidth(layer: &LayerShape, df: &Dataflow, hw: &HardwareConfig) -> Result<f64> {
    Ok(analyze_layer(layer, df, hw)?.avg_bandwidth)
}

pub fn buffer_requirement(bound: &BoundMapping, hw: &HardwareConfig) -> (u64, u64) {
    ProfiledLayer::from_bound(bound.clone(), hw.num_pes).buffer_requirement(hw)
}
