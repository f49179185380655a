//! Analytical cost model for spatial DNN accelerators: per layer and per
//! dataflow it predicts throughput at a given NoC bandwidth, roofline
//! throughput, peak and average bandwidth requirements, PE utilization,
//! buffer requirements and latency.
//!
//! The pipeline is `model` (layers) → `dataflow` (mapping language) →
//! `mapping` (binding and odometer) → `reuse` (per-step NoC traffic) →
//! `perf` (delays and derived metrics). `oracle` is an independent
//! brute-force simulator used to check the analytical path, and `sweep`
//! drives bandwidth sweeps and emits CSV and SVG.

pub mod dataflow;
pub mod error;
pub mod hardware;
pub mod mapping;
pub mod model;
pub mod oracle;
pub mod perf;
pub mod reuse;
pub mod sweep;

pub use dataflow::{builtin_dataflow, builtin_dataflows, parse_dataflow, Dataflow, Retention};
pub use error::{Error, Result};
pub use hardware::HardwareConfig;
pub use mapping::{bind, BoundMapping, LoopDim, Placement};
pub use model::{
    builtin_model, builtin_models, classify, classify_layer, mobilenet_v2, parse_model, resnet50,
    LayerClass, LayerKind, LayerShape, NetworkModel,
};
pub use oracle::{check_case, compare, random_case, simulate, OracleReport, RandomCase, SimResult};
pub use perf::{analyze_layer, comm_delay, tile_delay, Bound, LayerAnalysis, ProfiledLayer};
pub use reuse::{
    reuse_class, tile_traffic, traffic_profile, Phase, ReuseClass, TensorKind, TileTraffic,
    TrafficProfile,
};
pub use sweep::{emit_chart, emit_csv, run_sweep, Aggregation, SweepConfig, SweepRow};
