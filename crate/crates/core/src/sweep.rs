//! Bandwidth sweeps, layer-class aggregation, CSV and SVG output.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dataflow::Dataflow;
use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::model::{classify_layer, LayerClass, LayerKind, NetworkModel};
use crate::perf::{Bound, LayerAnalysis, ProfiledLayer};

pub const DEFAULT_BANDWIDTHS: [u64; 7] = [4, 8, 16, 32, 64, 128, 256];

pub const CSV_HEADER: &str = "model,layer,class,dataflow,bw_Bpc,throughput_macs_pc,roofline_macs_pc,avg_bw_Bpc,peak_bw_Bpc,utilized_pes,total_cycles,bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    PerLayer,
    /// Layer rows followed by one row per (class, dataflow, bandwidth).
    PerClass,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub models: Vec<NetworkModel>,
    pub dataflows: Vec<Dataflow>,
    pub bandwidths: Vec<u64>,
    pub hw: HardwareConfig,
    pub aggregation: Aggregation,
}

impl SweepConfig {
    pub fn new(models: Vec<NetworkModel>, dataflows: Vec<Dataflow>) -> Self {
        SweepConfig {
            models,
            dataflows,
            bandwidths: DEFAULT_BANDWIDTHS.to_vec(),
            hw: HardwareConfig::default(),
            aggregation: Aggregation::PerClass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidSweep("no models".into()));
        }
        if self.dataflows.is_empty() {
            return Err(Error::InvalidSweep("no dataflows".into()));
        }
        if self.bandwidths.is_empty() {
            return Err(Error::InvalidSweep("no bandwidths".into()));
        }
        if self.bandwidths[0] == 0 || self.bandwidths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSweep(format!(
                "bandwidths must be positive and strictly increasing, got {:?}",
                self.bandwidths
            )));
        }
        let mut names: Vec<&str> = self.dataflows.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSweep(format!(
                "dataflow `{}` listed twice",
                w[0]
            )));
        }
        self.hw.validate()
    }
}

/// Measured values of a feasible cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub throughput: f64,
    pub roofline: f64,
    pub avg_bandwidth: f64,
    /// `None` means unbounded.
    pub peak_bandwidth: Option<u64>,
    pub utilized_pes: u64,
    pub total_cycles: u64,
    pub bound: Bound,
    pub macs: u64,
    pub steady_cycles: u64,
    pub compute_cycles: u64,
    pub steady_bytes: u64,
}

impl Metrics {
    fn from_analysis(a: &LayerAnalysis) -> Self {
        Metrics {
            throughput: a.throughput,
            roofline: a.roofline_throughput,
            avg_bandwidth: a.avg_bandwidth,
            peak_bandwidth: a.peak_bandwidth,
            utilized_pes: a.utilized_pes,
            total_cycles: a.total_cycles,
            bound: a.bound,
            macs: a.macs,
            steady_cycles: a.steady_cycles,
            compute_cycles: a.compute_delay_total,
            steady_bytes: a.steady_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: String,
    /// Layer name, or `*` for a class aggregate.
    pub layer: String,
    pub class: LayerClass,
    pub dataflow: String,
    pub bandwidth: u64,
    /// `Err` holds the reason the cell is infeasible.
    pub result: std::result::Result<Metrics, String>,
}

impl SweepRow {
    pub fn is_aggregate(&self) -> bool {
        self.layer == "*"
    }

    pub fn metrics(&self) -> Option<&Metrics> {
        self.result.as_ref().ok()
    }
}

#[derive(Hash, PartialEq, Eq)]
struct ShapeKey {
    kind: LayerKind,
    dims: [u64; 8],
    dataflow: usize,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..cfg.dataflows.len()).collect();
    order.sort_by(|&a, &b| cfg.dataflows[a].name.cmp(&cfg.dataflows[b].name));

    let mut cache: HashMap<ShapeKey, std::result::Result<ProfiledLayer, String>> = HashMap::new();
    let mut rows = Vec::new();
    for model in &cfg.models {
        let mut layer_rows = Vec::new();
        for (idx, layer) in model.layers.iter().enumerate() {
            let class = classify_layer(layer, idx, model);
            for &d in &order {
                let df = &cfg.dataflows[d];
                let key = ShapeKey {
                    kind: layer.kind,
                    dims: [
                        layer.k,
                        layer.c,
                        layer.y,
                        layer.x,
                        layer.r,
                        layer.s,
                        layer.stride_y,
                        layer.stride_x,
                    ],
                    dataflow: d,
                };
                let profiled = cache.entry(key).or_insert_with(|| {
                    let pl =
                        ProfiledLayer::new(layer, df, cfg.hw.num_pes).map_err(|e| e.to_string())?;
                    pl.check_buffers(&cfg.hw).map_err(|e| e.to_string())?;
                    Ok(pl)
                });
                for &bw in &cfg.bandwidths {
                    let hw = cfg.hw.with_bandwidth(bw);
                    let result = match profiled {
                        Ok(pl) => Ok(Metrics::from_analysis(&pl.evaluate(&hw))),
                        Err(e) => Err(e.clone()),
                    };
                    layer_rows.push(SweepRow {
                        model: model.name.clone(),
                        layer: layer.name.clone(),
                        class,
                        dataflow: df.name.clone(),
                        bandwidth: bw,
                        result,
                    });
                }
            }
        }
        let aggregates = match cfg.aggregation {
            Aggregation::PerLayer => Vec::new(),
            Aggregation::PerClass => aggregate_classes(&layer_rows),
        };
        rows.extend(layer_rows);
        rows.extend(aggregates);
    }
    Ok(rows)
}

/// One row per (class, dataflow, bandwidth) present in `rows`, which must
/// come from a single model. A class cell is infeasible if any of its layers
/// is.
pub fn aggregate_classes(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut out = Vec::new();
    let mut dataflows: Vec<&str> = rows.iter().map(|r| r.dataflow.as_str()).collect();
    dataflows.sort_unstable();
    dataflows.dedup();
    let mut bandwidths: Vec<u64> = rows.iter().map(|r| r.bandwidth).collect();
    bandwidths.sort_unstable();
    bandwidths.dedup();
    for class in LayerClass::ALL {
        for &df in &dataflows {
            for &bw in &bandwidths {
                let members: Vec<&SweepRow> = rows
                    .iter()
                    .filter(|r| {
                        !r.is_aggregate()
                            && r.class == class
                            && r.dataflow == df
                            && r.bandwidth == bw
                    })
                    .collect();
                let Some(first) = members.first() else {
                    continue;
                };
                let result = combine(&members);
                out.push(SweepRow {
                    model: first.model.clone(),
                    layer: "*".into(),
                    class,
                    dataflow: df.to_string(),
                    bandwidth: bw,
                    result,
                });
            }
        }
    }
    out
}

fn combine(members: &[&SweepRow]) -> std::result::Result<Metrics, String> {
    let mut acc: Option<Metrics> = None;
    for r in members {
        let m = r.result.as_ref().map_err(|e| format!("{}: {e}", r.layer))?;
        acc = Some(match acc {
            None => m.clone(),
            Some(a) => Metrics {
                macs: a.macs + m.macs,
                steady_cycles: a.steady_cycles + m.steady_cycles,
                compute_cycles: a.compute_cycles + m.compute_cycles,
                steady_bytes: a.steady_bytes + m.steady_bytes,
                total_cycles: a.total_cycles + m.total_cycles,
                utilized_pes: a.utilized_pes.max(m.utilized_pes),
                peak_bandwidth: match (a.peak_bandwidth, m.peak_bandwidth) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                },
                bound: if a.bound == Bound::Communication || m.bound == Bound::Communication {
                    Bound::Communication
                } else {
                    Bound::Compute
                },
                ..a
            },
        });
    }
    let mut m = acc.expect("callers pass at least one member");
    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    m.throughput = ratio(m.macs, m.steady_cycles);
    m.roofline = ratio(m.macs, m.compute_cycles);
    m.avg_bandwidth = ratio(m.steady_bytes, m.steady_cycles);
    Ok(m)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_peak(p: Option<u64>) -> String {
    p.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

pub fn emit_csv(rows: &[SweepRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 96);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},",
            r.model,
            r.layer,
            r.class.as_str(),
            r.dataflow,
            r.bandwidth
        );
        match &r.result {
            Ok(m) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    fmt_f(m.throughput),
                    fmt_f(m.roofline),
                    fmt_f(m.avg_bandwidth),
                    fmt_peak(m.peak_bandwidth),
                    m.utilized_pes,
                    m.total_cycles,
                    m.bound.as_str()
                );
            }
            Err(_) => s.push_str(",,,,,,infeasible\n"),
        }
    }
    s
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

struct Panel {
    top: f64,
    height: f64,
    y_max: f64,
}

impl Panel {
    fn y(&self, v: f64) -> f64 {
        self.top + self.height * (1.0 - (v / self.y_max).min(1.0))
    }
}

const LEFT: f64 = 70.0;
const WIDTH: f64 = 520.0;

/// SVG for one class of one model: throughput step curves on top, average
/// bandwidth below, dotted verticals at each dataflow's peak requirement.
/// Returns `None` when no row matches.
pub fn emit_chart(rows: &[SweepRow], class: LayerClass, model: &str) -> Option<String> {
    let sel: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.is_aggregate() && r.class == class && r.model == model)
        .collect();
    if sel.is_empty() {
        return None;
    }
    let mut dataflows: Vec<&str> = sel.iter().map(|r| r.dataflow.as_str()).collect();
    dataflows.dedup();
    let mut bws: Vec<u64> = sel.iter().map(|r| r.bandwidth).collect();
    bws.sort_unstable();
    bws.dedup();
    let (bw_lo, bw_hi) = (bws[0] as f64, *bws.last().unwrap() as f64);
    let x = |bw: f64| {
        if bw_hi <= bw_lo {
            LEFT + WIDTH / 2.0
        } else {
            LEFT + WIDTH * (bw.log2() - bw_lo.log2()) / (bw_hi.log2() - bw_lo.log2())
        }
    };
    let nice = |v: f64| {
        let v = v.max(1e-9) * 1.1;
        let mag = 10f64.powf(v.log10().floor());
        (v / mag).ceil() * mag
    };
    let max_of = |f: &dyn Fn(&Metrics) -> f64| {
        sel.iter()
            .filter_map(|r| r.metrics())
            .map(f)
            .fold(0.0, f64::max)
    };
    let top = Panel {
        top: 50.0,
        height: 220.0,
        y_max: nice(max_of(&|m| m.throughput)),
    };
    let bottom = Panel {
        top: 330.0,
        height: 180.0,
        y_max: nice(max_of(&|m| m.avg_bandwidth)),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="760" height="580" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="760" height="580" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="15">{model}: {} layers</text>"#,
        LEFT,
        class.as_str()
    );
    for (panel, label) in [
        (&top, "throughput (MACs/cycle)"),
        (&bottom, "avg bandwidth (B/cycle)"),
    ] {
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{}" width="{WIDTH}" height="{}" fill="none" stroke="#333"/>"##,
            panel.top, panel.height
        );
        let _ = writeln!(
            s,
            r#"<text x="12" y="{:.1}" transform="rotate(-90 12 {:.1})" text-anchor="middle">{label}</text>"#,
            panel.top + panel.height / 2.0,
            panel.top + panel.height / 2.0
        );
        for i in 0..=4 {
            let v = panel.y_max * i as f64 / 4.0;
            let y = panel.y(v);
            let _ = writeln!(
                s,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                LEFT - 4.0,
                LEFT - 6.0,
                y + 4.0,
                trim(v)
            );
        }
        for &bw in &bws {
            let xx = x(bw as f64);
            let yb = panel.top + panel.height;
            let _ = writeln!(
                s,
                r##"<line x1="{xx:.1}" y1="{yb:.1}" x2="{xx:.1}" y2="{:.1}" stroke="#333"/><text x="{xx:.1}" y="{:.1}" text-anchor="middle">{bw}</text>"##,
                yb + 4.0,
                yb + 16.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="552" text-anchor="middle">NoC bandwidth (B/cycle)</text>"#,
        LEFT + WIDTH / 2.0
    );

    for (i, df) in dataflows.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(u64, Option<&Metrics>)> = bws
            .iter()
            .map(|&bw| {
                let m = sel
                    .iter()
                    .find(|r| r.dataflow == *df && r.bandwidth == bw)
                    .and_then(|r| r.metrics());
                (bw, m)
            })
            .collect();
        // Step curve: each value holds until the next sampled bandwidth.
        for segment in runs(&pts) {
            let mut d = String::new();
            for (j, (bw, m)) in segment.iter().enumerate() {
                let (xx, yy) = (x(*bw as f64), top.y(m.throughput));
                if j == 0 {
                    let _ = write!(d, "M{xx:.1},{yy:.1}");
                } else {
                    let _ = write!(d, " V{yy:.1}");
                }
                if let Some((next, _)) = segment.get(j + 1) {
                    let _ = write!(d, " H{:.1}", x(*next as f64));
                }
            }
            let _ = writeln!(
                s,
                r#"<path class="throughput" data-dataflow="{df}" d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#
            );
            let line: Vec<String> = segment
                .iter()
                .map(|(bw, m)| format!("{:.1},{:.1}", x(*bw as f64), bottom.y(m.avg_bandwidth)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="avg-bw" data-dataflow="{df}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        if let Some(m) = pts.iter().find_map(|(_, m)| *m) {
            let (peak, label) = match m.peak_bandwidth {
                Some(p) => (p as f64, p.to_string()),
                None => (bw_hi, "inf".to_string()),
            };
            let xx = x(peak.clamp(bw_lo, bw_hi));
            let _ = writeln!(
                s,
                r#"<line class="peak-bw" data-dataflow="{df}" data-peak="{label}" x1="{xx:.1}" y1="{}" x2="{xx:.1}" y2="{}" stroke="{color}" stroke-dasharray="2,4"/>"#,
                top.top,
                bottom.top + bottom.height
            );
        }
        let ly = 50.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="605" y1="{ly}" x2="630" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="636" y="{:.1}">{df}</text>"#,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Maximal runs of consecutive feasible points; infeasible cells leave gaps.
fn runs<'a>(pts: &[(u64, Option<&'a Metrics>)]) -> Vec<Vec<(u64, &'a Metrics)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (bw, m) in pts {
        match m {
            Some(m) => cur.push((*bw, *m)),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn trim(v: f64) -> String {
    if v >= 10.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
