use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use flowcost::model::parse_model_named;
use flowcost::sweep::aggregate_classes;
use flowcost::{
    analyze_layer, builtin_dataflow, builtin_dataflows, builtin_model, builtin_models, check_case,
    emit_chart, emit_csv, parse_dataflow, random_case, run_sweep, Aggregation, Dataflow,
    HardwareConfig, LayerClass, NetworkModel, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "flowcost",
    version,
    about = "NoC bandwidth and throughput model for DNN dataflows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(clap::Args)]
struct HwArgs {
    #[arg(long, default_value_t = 256)]
    pes: u64,
    /// NoC bandwidth in bytes per cycle.
    #[arg(long, default_value_t = 256)]
    bw: u64,
    #[arg(long, value_enum, default_value = "on")]
    multicast: OnOff,
    #[arg(long, default_value_t = 1)]
    elem_bytes: u64,
    #[arg(long, default_value_t = 256 * 1024)]
    global_buf: u64,
    #[arg(long, default_value_t = 1024)]
    pe_buf: u64,
}

impl HwArgs {
    fn config(&self) -> HardwareConfig {
        HardwareConfig {
            num_pes: self.pes,
            noc_bandwidth: self.bw,
            multicast: matches!(self.multicast, OnOff::On),
            global_buffer_bytes: self.global_buf,
            pe_buffer_bytes: self.pe_buf,
            element_bytes: self.elem_bytes,
            ..HardwareConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one layer under one dataflow.
    Analyze {
        /// Builtin model name or workload file.
        #[arg(long)]
        model: String,
        #[arg(long)]
        layer: String,
        /// Builtin dataflow name or dataflow file.
        #[arg(long)]
        dataflow: String,
        #[command(flatten)]
        hw: HwArgs,
    },
    /// Sweep models x dataflows x bandwidths.
    Sweep {
        /// Comma-separated builtin names or files; all builtins by default.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        dataflows: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [4u64, 8, 16, 32, 64, 128, 256])]
        bw_list: Vec<u64>,
        #[arg(long)]
        out_csv: PathBuf,
        /// Directory for one SVG chart per (model, class).
        #[arg(long)]
        out_svg: Option<PathBuf>,
        /// Append class aggregate rows to the CSV.
        #[arg(long)]
        per_class: bool,
        #[command(flatten)]
        hw: HwArgs,
    },
    /// List builtin dataflows.
    Dataflows,
    /// Compare the analytical model against the brute-force simulator.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 6)]
        max_dim: u64,
        #[arg(long, default_value_t = 8)]
        max_pes: u64,
    },
}

fn load_model(name: &str) -> anyhow::Result<NetworkModel> {
    if let Some(m) = builtin_model(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    let text = fs::read_to_string(path)
        .with_context(|| format!("`{name}` is neither a builtin model nor a readable file"))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    parse_model_named(&text, stem).with_context(|| format!("parsing {name}"))
}

fn load_dataflow(name: &str) -> anyhow::Result<Dataflow> {
    if let Some(d) = builtin_dataflow(name) {
        return Ok(d);
    }
    let text = fs::read_to_string(name)
        .with_context(|| format!("`{name}` is neither a builtin dataflow nor a readable file"))?;
    parse_dataflow(&text).with_context(|| format!("parsing {name}"))
}

fn analyze(model: &str, layer: &str, dataflow: &str, hw: HardwareConfig) -> anyhow::Result<()> {
    let model = load_model(model)?;
    let layer = model
        .layer(layer)
        .ok_or_else(|| anyhow!("model `{}` has no layer `{layer}`", model.name))?;
    let df = load_dataflow(dataflow)?;
    let a = analyze_layer(layer, &df, &hw)?;
    let peak = a.peak_bandwidth.map_or("inf".into(), |p| p.to_string());
    println!("layer               {}", a.layer);
    println!("dataflow            {}", a.dataflow);
    println!("macs                {}", a.macs);
    println!("steps               {}", a.steps);
    println!(
        "utilized_pes        {} ({} clusters x {})",
        a.utilized_pes, a.cluster_count, a.cluster_size
    );
    println!("roofline_macs_pc    {:.4}", a.roofline_throughput);
    println!("throughput_macs_pc  {:.4}", a.throughput);
    println!("total_cycles        {}", a.total_cycles);
    println!("compute_cycles      {}", a.compute_delay_total);
    println!("comm_cycles         {}", a.comm_delay_total);
    println!("peak_bw_Bpc         {peak}");
    println!("avg_bw_Bpc          {:.4}", a.avg_bandwidth);
    println!(
        "traffic_words       input {} weight {} output {}",
        a.traffic_words[0], a.traffic_words[1], a.traffic_words[2]
    );
    println!("buffer_pe_bytes     {}", a.buffer_pe_bytes);
    println!("buffer_global_bytes {}", a.buffer_global_bytes);
    println!("bound               {}", a.bound.as_str());
    Ok(())
}

struct SweepArgs {
    models: Vec<String>,
    dataflows: Vec<String>,
    bw_list: Vec<u64>,
    out_csv: PathBuf,
    out_svg: Option<PathBuf>,
    per_class: bool,
    hw: HardwareConfig,
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let models = if args.models.is_empty() {
        builtin_models()
    } else {
        args.models
            .iter()
            .map(|m| load_model(m))
            .collect::<anyhow::Result<_>>()?
    };
    let dataflows = if args.dataflows.is_empty() {
        builtin_dataflows()
    } else {
        args.dataflows
            .iter()
            .map(|d| load_dataflow(d))
            .collect::<anyhow::Result<_>>()?
    };
    let cfg = SweepConfig {
        models,
        dataflows,
        bandwidths: args.bw_list,
        hw: args.hw,
        aggregation: Aggregation::PerLayer,
    };
    let rows = run_sweep(&cfg)?;
    let mut aggregates = Vec::new();
    for m in &cfg.models {
        let own: Vec<_> = rows.iter().filter(|r| r.model == m.name).cloned().collect();
        aggregates.extend(aggregate_classes(&own));
    }
    let infeasible = rows.iter().filter(|r| r.result.is_err()).count();
    let mut out = rows.clone();
    if args.per_class {
        // Keep each model's aggregates right after its layers.
        out.clear();
        for m in &cfg.models {
            out.extend(rows.iter().filter(|r| r.model == m.name).cloned());
            out.extend(aggregates.iter().filter(|r| r.model == m.name).cloned());
        }
    }
    fs::write(&args.out_csv, emit_csv(&out))
        .with_context(|| format!("writing {}", args.out_csv.display()))?;
    eprintln!("wrote {} rows to {}", out.len(), args.out_csv.display());
    if infeasible > 0 {
        eprintln!("warning: {infeasible} infeasible cells left empty");
    }
    if let Some(dir) = args.out_svg {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for m in &cfg.models {
            for class in LayerClass::ALL {
                match emit_chart(&aggregates, class, &m.name) {
                    Some(svg) => {
                        let path = dir.join(format!("{}_{}.svg", m.name, class.as_str()));
                        fs::write(&path, svg)
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                    None => eprintln!("warning: {} has no {} layers", m.name, class.as_str()),
                }
            }
        }
    }
    Ok(())
}

fn list_dataflows() {
    let styles = [
        ("NLR", "no local reuse"),
        ("WS", "weight stationary"),
        ("ShiDiannao", "output stationary"),
        ("Eyeriss", "row stationary"),
        ("NVDLA", "weight stationary, channel parallel"),
    ];
    for df in builtin_dataflows() {
        let style = styles
            .iter()
            .find(|(n, _)| *n == df.name)
            .map_or("", |(_, s)| *s);
        println!("{} ({style})", df.name);
        println!("  loop order  {}", df.loop_order());
        println!("  retention   {}", df.retention.keyword());
        for line in df.render().lines().skip(1) {
            println!("  {line}");
        }
    }
}

/// Returns whether every case matched.
fn oracle_check(seeds: u64, max_dim: u64, max_pes: u64) -> anyhow::Result<bool> {
    if max_dim == 0 || max_pes == 0 {
        bail!("--max-dim and --max-pes must be at least 1");
    }
    let mut failures = 0;
    let mut cases = 0;
    for seed in 0..seeds {
        let case = random_case(seed, max_dim, max_pes);
        for df in builtin_dataflows() {
            cases += 1;
            let report = check_case(&case.layer, &df, &case.hw)?;
            if !report.pass() {
                failures += 1;
                println!("seed {seed} {} {}: {report}", df.name, case.layer.render());
            }
        }
    }
    println!("{} of {cases} cases match", cases - failures);
    Ok(failures == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Analyze {
            model,
            layer,
            dataflow,
            hw,
        } => analyze(&model, &layer, &dataflow, hw.config()).map(|_| true),
        Command::Sweep {
            models,
            dataflows,
            bw_list,
            out_csv,
            out_svg,
            per_class,
            hw,
        } => sweep(SweepArgs {
            models,
            dataflows,
            bw_list,
            out_csv,
            out_svg,
            per_class,
            hw: hw.config(),
        })
        .map(|_| true),
        Command::Dataflows => {
            list_dataflows();
            Ok(true)
        }
        Command::OracleCheck {
            seeds,
            max_dim,
            max_pes,
        } => oracle_check(seeds, max_dim, max_pes),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
