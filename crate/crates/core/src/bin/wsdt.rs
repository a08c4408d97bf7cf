use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use wsdt_core::alloc::{mutualcast, routing_based, wsdt, StaticOutcome, StaticScheme};
use wsdt_core::bound::wsdt_lower_bound;
use wsdt_core::dynamic::{simulate_dynamic, Join, Mode};
use wsdt_core::error::Error;
use wsdt_core::maxflow::{finish_schedule, flow_rates_of_allocation, verify_static_schedule};
use wsdt_core::model::{
    case_scenario, validate_scenario, BenchmarkCase, FlowRates, Network, RateAllocation, Scenario,
    WeightProfile,
};
use wsdt_core::sweep::{
    format_num, log_space, parse_num, round_sig, run_sweep, write_csv, SweepScheme, SweepSource,
    SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "wsdt",
    version,
    about = "Weighted sum download time allocation for P2P file distribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a static allocation and report its flow rates and WSDT.
    Allocate(AllocateArgs),
    /// Water-filling lower bound on the WSDT.
    Lowerbound(ScenarioArg),
    /// Run the dynamic scheme and print the epoch trace as CSV.
    SimulateDynamic(DynamicArgs),
    /// Check a rate allocation against a finish schedule on the time-expanded graph.
    Verify(VerifyArgs),
    /// Sweep the source uplink over a benchmark case or scenario file.
    Sweep(SweepArgs),
    /// Print a benchmark case as a scenario document.
    GenCase(GenCaseArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct AllocateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// mutualcast, extended, depth2 or routing.
    #[arg(long)]
    scheme: String,
    /// Broadcast rate for mutualcast (defaults to the largest feasible one).
    #[arg(long)]
    rate: Option<f64>,
    /// Comma-separated 1-based peer order (mutualcast relay order, routing finish order).
    #[arg(long)]
    order: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// retain or leave.
    #[arg(long, default_value = "retain")]
    mode: String,
    /// JSON list of joins: [{"time": t, "uplink": u, "downlink": d, "weight": w}].
    #[arg(long)]
    joins: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// JSON allocation: {"rates": [[...]], "depth1": [...]} (depth1 optional).
    #[arg(long)]
    allocation: PathBuf,
    /// Comma-separated 1-based finish order; defaults to descending min-cut rate.
    #[arg(long)]
    order: Option<String>,
    /// Comma-separated epoch durations; defaults to B/r_k - B/r_(k-1).
    #[arg(long)]
    durations: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Benchmark case I..VI.
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    case: Option<String>,
    /// Scenario JSON file whose source uplink is swept.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Comma-separated source uplinks.
    #[arg(long, conflicts_with = "us_range")]
    us: Option<String>,
    /// Log-spaced source uplinks as lo:hi:count.
    #[arg(long)]
    us_range: Option<String>,
    /// uniform, linear, two-class, two-class-mild or a comma-separated list.
    #[arg(long, default_value = "uniform")]
    weights: String,
    /// Comma-separated: lowerbound, mutualcast, extended, depth2, routing, dynamic-retain, dynamic-leave.
    #[arg(long, default_value = "lowerbound,extended,depth2,routing")]
    schemes: String,
    #[arg(long, default_value_t = 1.0)]
    file_size: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenCaseArgs {
    #[arg(long)]
    case: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    us: f64,
    #[arg(long, default_value = "uniform")]
    weights: String,
    #[arg(long, default_value_t = 1.0)]
    file_size: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct AllocationDoc {
    rates: Vec<Vec<f64>>,
    #[serde(default)]
    depth1: Option<Vec<f64>>,
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn load_scenario(path: &Path) -> Result<Network, Error> {
    let raw = Scenario::from_json(&read_text(path)?)?;
    Ok(validate_scenario(&raw)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        json!(format_num(x))
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn parse_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',').map(parse_num).collect()
}

fn parse_order(text: &str, n: usize) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
            _ => Err(Error::Parse(format!(
                "bad peer id {t:?} (expected 1..={n})"
            ))),
        })
        .collect()
}

fn parse_case(text: &str) -> Result<BenchmarkCase, Error> {
    text.parse()
        .map_err(|e: wsdt_core::ModelError| Error::Parse(e.to_string()))
}

fn parse_profile(text: &str) -> Result<WeightProfile, Error> {
    text.parse()
        .map_err(|e: wsdt_core::ModelError| Error::Parse(e.to_string()))
}

fn allocation_report(net: &Network, scheme: &str, out: &StaticOutcome) -> Result<Value, Error> {
    let min_cut = flow_rates_of_allocation(net, &out.allocation)?;
    let value = wsdt(&out.flow_rates, &net.weights(), net.file_size()).unwrap_or(f64::INFINITY);
    let rows: Vec<Value> = out.allocation.rows().map(nums).collect();
    let depth1: Vec<f64> = (0..net.len())
        .map(|i| out.allocation.depth1_rate(i))
        .collect();
    let mut report = json!({
        "scheme": scheme,
        "wsdt": num(value),
        "lower_bound": num(wsdt_lower_bound(net).value),
        "flow_rates": nums(out.flow_rates.as_slice()),
        "min_cut_rates": nums(min_cut.as_slice()),
        "rates": rows,
        "depth1": nums(&depth1),
    });
    if let Some(stage) = &out.stage {
        report["stage"] = json!({
            "tilde_rates": nums(&stage.tilde_rates),
            "c": num(stage.c),
            "alpha": num(stage.alpha),
            "beta": nums(&stage.beta),
            "wasted_uplink": num(stage.wasted_uplink),
            "order": stage.order.iter().map(|i| i + 1).collect::<Vec<_>>(),
        });
    }
    Ok(report)
}

fn allocate(args: &AllocateArgs) -> Result<(), Error> {
    let net = load_scenario(&args.scenario)?;
    let scheme: StaticScheme = args.scheme.parse()?;
    let order = args
        .order
        .as_deref()
        .map(|o| parse_order(o, net.len()))
        .transpose()?;
    let out = match scheme {
        StaticScheme::Mutualcast if args.rate.is_some() || order.is_some() => {
            let mut out = scheme.allocate(&net)?;
            let rate = args.rate.unwrap_or(out.flow_rates[0]);
            let order = order.unwrap_or_else(|| (0..net.len()).collect());
            out.allocation = mutualcast(&net, rate, &order)?;
            out.flow_rates = FlowRates(vec![rate; net.len()]);
            out
        }
        StaticScheme::Routing => routing_based(&net, order.as_deref())?.into(),
        _ => scheme.allocate(&net)?,
    };
    let report = allocation_report(&net, scheme.name(), &out)?;
    emit(args.output.as_deref(), &format!("{report:#}\n"))
}

fn lowerbound(args: &ScenarioArg) -> Result<(), Error> {
    let net = load_scenario(&args.scenario)?;
    let lb = wsdt_lower_bound(&net);
    let report = json!({
        "lower_bound": num(lb.value),
        "level": num(lb.level),
        "rates": nums(lb.rates.as_slice()),
    });
    emit(None, &format!("{report:#}\n"))
}

fn simulate(args: &DynamicArgs) -> Result<(), Error> {
    let net = load_scenario(&args.scenario)?;
    let mode: Mode = args.mode.parse()?;
    let joins: Vec<Join> = match &args.joins {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => Vec::new(),
    };
    let trace = simulate_dynamic(&net, mode, &joins)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    eprintln!("wsdt={}", format_num(trace.wsdt));
    Ok(())
}

/// Returns whether every peer met its deadline.
fn verify(args: &VerifyArgs) -> Result<bool, Error> {
    let net = load_scenario(&args.scenario)?;
    let doc: AllocationDoc = serde_json::from_str(&read_text(&args.allocation)?)?;
    let mut alloc = RateAllocation::from_matrix(doc.rates)?;
    if let Some(d1) = doc.depth1 {
        if d1.len() != alloc.len() {
            return Err(Error::Parse(format!(
                "depth1 has {} entries, expected {}",
                d1.len(),
                alloc.len()
            )));
        }
        for (i, d) in d1.into_iter().enumerate() {
            let total = alloc.source_rate(i);
            alloc.set(i, i, total - d);
            alloc.add_depth1(i, d);
        }
    }
    let rates = flow_rates_of_allocation(&net, &alloc)?;
    let (default_order, default_durations) = finish_schedule(&rates, net.file_size());
    let order = match &args.order {
        Some(o) => parse_order(o, net.len())?,
        None => default_order,
    };
    let durations = match &args.durations {
        Some(d) => parse_list(d)?,
        None => default_durations,
    };
    let report = verify_static_schedule(&net, &alloc, &order, &durations)?;
    let mut out = String::from("peer,epoch,finish_time,flow,feasible\n");
    for v in &report.verdicts {
        out += &format!(
            "{},{},{},{},{}\n",
            v.peer + 1,
            v.epoch + 1,
            format_num(v.finish_time),
            format_num(v.flow),
            v.feasible
        );
    }
    emit(None, &out)?;
    Ok(report.all_feasible())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let weights = parse_profile(&args.weights)?;
    let (source, default_us) = match (&args.case, &args.scenario) {
        (Some(case), _) => (
            SweepSource::Case {
                case: parse_case(case)?,
                n: args.n,
                weights,
            },
            None,
        ),
        (None, Some(path)) => {
            let scenario = Scenario::from_json(&read_text(path)?)?;
            let us = scenario.source_uplink;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            (SweepSource::Scenario { label, scenario }, Some(us))
        }
        (None, None) => return Err(Error::InvalidSweep("need --case or --scenario".into())),
    };
    let file_size = match &source {
        SweepSource::Scenario { scenario, .. } => scenario.file_size,
        SweepSource::Case { .. } => args.file_size,
    };
    let source_uplinks = match (&args.us, &args.us_range, default_us) {
        (Some(list), _, _) => parse_list(list)?,
        (None, Some(range), _) => {
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!(
                    "--us-range expects lo:hi:count, got {range:?}"
                )));
            }
            let count = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad count {:?}", parts[2])))?;
            log_space(parse_num(parts[0])?, parse_num(parts[1])?, count)
        }
        (None, None, Some(us)) => vec![us],
        (None, None, None) => {
            return Err(Error::InvalidSweep("need --us or --us-range".into()));
        }
    };
    let schemes = args
        .schemes
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<SweepScheme>, _>>()?;
    let spec = SweepSpec {
        source,
        source_uplinks,
        schemes,
        file_size,
    };
    let rows = run_sweep(&spec)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))
}

fn gen_case(args: &GenCaseArgs) -> Result<(), Error> {
    let scenario = case_scenario(
        parse_case(&args.case)?,
        args.n,
        args.us,
        &parse_profile(&args.weights)?,
        args.file_size,
    )?;
    validate_scenario(&scenario)?;
    let text = serde_json::to_string_pretty(&scenario)?;
    emit(args.output.as_deref(), &format!("{text}\n"))
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Allocate(a) => allocate(a)?,
        Command::Lowerbound(a) => lowerbound(a)?,
        Command::SimulateDynamic(a) => simulate(a)?,
        Command::Verify(a) => return verify(a),
        Command::Sweep(a) => sweep(a)?,
        Command::GenCase(a) => gen_case(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
