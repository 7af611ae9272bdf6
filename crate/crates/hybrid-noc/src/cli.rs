//! Command-line front end: `link-clear`, `explore`, `simulate`, `project` and `replay`.
//!
//! Every run writes its CSV reports plus a `manifest.toml` into the output directory.
//! Failures print a single `error kind=<kind> msg=<message>` line on stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{explore, ExploreConfig, LatencyWeighting, RowStatus};
use crate::calib::CostCalibration;
use crate::error::{Error, Result};
use crate::optproj::{electronic_projection, optical_projection, radar_compare, LossPolicy};
use crate::routing::{accumulate_loads_at, compute_routes, write_utilization_csv, RouteMetric};
use crate::simcore::{compare_latency, write_packet_dump, write_sim_report, SimConfig, DEFAULT_MAX_CYCLES};
use crate::techlib::{clear_sweep, log_lengths, ProfileSet, TechKind};
use crate::topology::{self, add_express_links, build_mesh, Topology};
use crate::traffic::{generate_synthetic, load_trace, split_messages, synthesize_with, InjectionSpread, Pattern, PatternConfig, TrafficModelConfig, FLIT_BYTES};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_TIMEOUT: i32 = 5;

const DEFAULT_OUT: &str = "out";

#[derive(Parser, Debug, Clone)]
#[command(name = "hybrid-noc", version, about = "Design-space exploration and simulation of hybrid opto-electronic NoCs")]
struct Cli {
    /// Cost calibration TOML (default: bundled).
    #[arg(long, global = true)]
    calib: Option<PathBuf>,
    /// Technology profile TOML (default: bundled).
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Link-level CLEAR sweep over length for each technology.
    LinkClear(LinkClearArgs),
    /// System CLEAR for every base/express technology and hop span.
    Explore(ExploreArgs),
    /// Cycle-level simulation of a trace or pattern on one or more topologies.
    Simulate(SimulateArgs),
    /// All-optical mesh projections against the electronic mesh.
    Project(ProjectArgs),
    /// Re-runs the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
struct LinkClearArgs {
    /// `start:end:log` or `start:end:lin`, in mm.
    #[arg(long, default_value = "0.001:10:log")]
    lengths: String,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, value_delimiter = ',')]
    tech: Vec<TechKind>,
}

#[derive(Args, Debug, Clone)]
struct ExploreArgs {
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,5,15")]
    hops: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "electronic,photonic,hyppi")]
    base_tech: Vec<TechKind>,
    #[arg(long, value_delimiter = ',', default_value = "electronic,photonic,hyppi")]
    express_tech: Vec<TechKind>,
    /// Omit the plain meshes without express links.
    #[arg(long)]
    no_plain: bool,
    /// Operating point: flits/cycle at the busiest node.
    #[arg(long, default_value_t = 0.1)]
    injection: f64,
    #[arg(long, default_value_t = 0.02)]
    p: f64,
    #[arg(long, default_value_t = 0.4)]
    sigma: f64,
    #[arg(long, default_value = "rank-profile")]
    spread: InjectionSpread,
    #[arg(long, default_value = "traffic")]
    weighting: LatencyWeighting,
    /// Also write per-link utilization for every feasible variant.
    #[arg(long)]
    dump_utilization: bool,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    /// `[base:]mesh<k>[+<tech><hops>]` or a topology file; the first is the baseline.
    #[arg(long, value_delimiter = ',', default_value = "mesh16")]
    topo: Vec<String>,
    /// Trace file of `<cycle> <src> <dst> <bytes>` lines.
    #[arg(long, conflicts_with = "pattern")]
    trace: Option<PathBuf>,
    #[arg(long)]
    pattern: Option<Pattern>,
    /// Bytes per pattern message.
    #[arg(long, default_value_t = 8)]
    volume: u64,
    #[arg(long, default_value_t = 1)]
    rounds: u32,
    /// Pattern offered load, flits/cycle per source.
    #[arg(long, default_value_t = 0.05)]
    load: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
    max_cycles: u64,
    /// Write per-packet latencies for each topology.
    #[arg(long)]
    packet_dump: bool,
}

#[derive(Args, Debug, Clone)]
struct ProjectArgs {
    #[arg(long, value_delimiter = ',', default_value = "photonic,hyppi")]
    router_profile: Vec<TechKind>,
    #[arg(long, default_value = "min")]
    policy: LossPolicy,
    #[arg(long, default_value_t = 16)]
    k: usize,
}

#[derive(Args, Debug, Clone)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Run record written next to the reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Command line without the program name.
    pub args: Vec<String>,
    pub resolved: RunConfig,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub out: String,
    pub calib: String,
    pub profiles: String,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hops: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub technologies: Vec<TechKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub express_technologies: Vec<TechKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficModelConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub topologies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_config: Option<PatternConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<LossPolicy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths_mm: Vec<f64>,
}

impl RunConfig {
    fn new(command: &str, ctx: &Context) -> Self {
        Self {
            command: command.into(),
            seed: ctx.seed,
            out: ctx.out.display().to_string(),
            calib: ctx.calib_src.clone(),
            profiles: ctx.profiles_src.clone(),
            outputs: Vec::new(),
            k: None,
            hops: Vec::new(),
            technologies: Vec::new(),
            express_technologies: Vec::new(),
            traffic: None,
            topologies: Vec::new(),
            trace: None,
            pattern: None,
            pattern_config: None,
            max_cycles: None,
            policy: None,
            lengths_mm: Vec::new(),
        }
    }
}

struct Context {
    seed: u64,
    out: PathBuf,
    calib: CostCalibration,
    profiles: ProfileSet,
    calib_src: String,
    profiles_src: String,
}

/// Maps an error to its process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Timeout { .. } | Error::Stalled { .. } => EXIT_TIMEOUT,
        Error::Invalid { .. }
        | Error::Infeasible { .. }
        | Error::Unreachable { .. }
        | Error::MissingCalibration(_)
        | Error::Parse { .. }
        | Error::Config(_) => EXIT_VALIDATION,
        Error::Csv(_) => EXIT_OTHER,
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage msg={}", one_line(first));
            return EXIT_USAGE;
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error kind={} msg={}", e.kind(), one_line(&e.to_string()));
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli, args: Vec<String>) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, cli.out.clone());
    }
    let ctx = Context {
        seed: cli.seed,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        calib: match &cli.calib {
            Some(p) => CostCalibration::load(p)?,
            None => CostCalibration::builtin(),
        },
        profiles: match &cli.profiles {
            Some(p) => ProfileSet::load(p)?,
            None => ProfileSet::builtin(),
        },
        calib_src: cli.calib.as_ref().map_or("builtin".into(), |p| p.display().to_string()),
        profiles_src: cli.profiles.as_ref().map_or("builtin".into(), |p| p.display().to_string()),
    };
    fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    let resolved = match &cli.command {
        Command::LinkClear(a) => link_clear(&ctx, a)?,
        Command::Explore(a) => run_explore(&ctx, a)?,
        Command::Simulate(a) => run_simulate(&ctx, a)?,
        Command::Project(a) => run_project(&ctx, a)?,
        Command::Replay(_) => unreachable!(),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        args,
        resolved,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    write_atomic(&ctx.out.join("manifest.toml"), text.as_bytes())
}

fn replay(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
    let mut argv = vec![manifest.tool.clone()];
    argv.extend(manifest.args.iter().cloned());
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("manifest arguments: {}", one_line(&e.to_string()))))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Config("manifest records a replay".into()));
    }
    let out = out.unwrap_or_else(|| PathBuf::from(&manifest.resolved.out));
    let mut args = manifest.args.clone();
    if let Some(i) = args.iter().position(|a| a == "--out") {
        args.drain(i..(i + 2).min(args.len()));
    }
    args.retain(|a| !a.starts_with("--out="));
    args.push("--out".into());
    args.push(out.display().to_string());
    cli.out = Some(out);
    execute(cli, args)
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn emit(ctx: &Context, resolved: &mut RunConfig, name: &str, bytes: Vec<u8>) -> Result<()> {
    write_atomic(&ctx.out.join(name), &bytes)?;
    resolved.outputs.push(name.to_string());
    Ok(())
}

/// Parses `start:end:log|lin` into `points` lengths.
pub fn parse_lengths(spec: &str, points: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid("lengths", format!("`{spec}` is not start:end:log|lin"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(Error::invalid("lengths", format!("need 0 < start <= end, got {a}:{b}")));
    }
    if points == 0 {
        return Err(Error::invalid("lengths", "zero points"));
    }
    match parts[2] {
        "log" => Ok(log_lengths(a, b, points)),
        "lin" if points == 1 => Ok(vec![a]),
        "lin" => Ok((0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect()),
        _ => Err(bad()),
    }
}

fn link_clear(ctx: &Context, a: &LinkClearArgs) -> Result<RunConfig> {
    let lengths = parse_lengths(&a.lengths, a.points)?;
    let techs = if a.tech.is_empty() { TechKind::ALL.to_vec() } else { a.tech.clone() };
    let profiles: Vec<_> = techs.iter().map(|&t| ctx.profiles.get(t).cloned()).collect::<Result<_>>()?;
    let rows = clear_sweep(&profiles, &lengths)?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        wr.serialize(r)?;
    }
    let mut resolved = RunConfig::new("link-clear", ctx);
    resolved.technologies = techs;
    resolved.lengths_mm = lengths;
    emit(ctx, &mut resolved, "link_clear.csv", csv_bytes(wr)?)?;
    Ok(resolved)
}

fn csv_bytes(wr: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    wr.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn run_explore(ctx: &Context, a: &ExploreArgs) -> Result<RunConfig> {
    let traffic = TrafficModelConfig {
        p: a.p,
        sigma: a.sigma,
        max_injection_rate: a.injection,
        seed: ctx.seed,
        spread: a.spread,
    };
    traffic.validate()?;
    let cfg = ExploreConfig {
        k: a.k,
        hops: a.hops.clone(),
        base_techs: a.base_tech.clone(),
        express_techs: a.express_tech.clone(),
        include_plain: !a.no_plain,
        traffic,
        weighting: a.weighting,
        ..ExploreConfig::default()
    };
    let rows = explore(&ctx.profiles, &ctx.calib, &cfg)?;
    let mut resolved = RunConfig::new("explore", ctx);
    let mut buf = Vec::new();
    crate::analysis::write_explore_csv(&mut buf, &rows)?;
    emit(ctx, &mut resolved, "explore_report.csv", buf)?;
    if a.dump_utilization {
        for row in rows.iter().filter(|r| r.status == RowStatus::Ok) {
            let topo = row.variant.build(cfg.k, &ctx.profiles)?;
            let routes = compute_routes(&topo, RouteMetric::Latency)?;
            let spec = generate_synthetic(&topo, &cfg.traffic)?;
            let load = accumulate_loads_at(&topo, &routes, &spec, ctx.calib.flit_bits, ctx.calib.clock_ghz);
            let mut buf = Vec::new();
            write_utilization_csv(&mut buf, &topo, &load)?;
            emit(ctx, &mut resolved, &format!("utilization_{}.csv", file_label(&row.variant.to_string())), buf)?;
        }
    }
    resolved.k = Some(cfg.k);
    resolved.hops = cfg.hops;
    resolved.technologies = cfg.base_techs;
    resolved.express_technologies = cfg.express_techs;
    resolved.traffic = Some(cfg.traffic);
    Ok(resolved)
}

fn file_label(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Builds a topology from `[base:]mesh<k>[+<tech><hops>]`, or loads it from a file.
pub fn parse_topology(spec: &str, profiles: &ProfileSet) -> Result<Topology> {
    let path = Path::new(spec);
    if path.is_file() {
        return topology::load(path);
    }
    let bad = |why: &str| Error::invalid("topology spec", format!("`{spec}`: {why}"));
    let (base, rest) = match spec.split_once(':') {
        Some((b, r)) => (b.parse::<TechKind>()?, r),
        None => (TechKind::Electronic, spec),
    };
    let (mesh, express) = match rest.split_once('+') {
        Some((m, e)) => (m, Some(e)),
        None => (rest, None),
    };
    let k: usize = mesh
        .strip_prefix("mesh")
        .ok_or_else(|| bad("expected mesh<k> or an existing file"))?
        .parse()
        .map_err(|_| bad("mesh size is not a number"))?;
    let topo = build_mesh(k, profiles.get(base)?)?;
    match express {
        None => Ok(topo),
        Some(e) => {
            let split = e.find(|c: char| c.is_ascii_digit()).ok_or_else(|| bad("express part needs a hop count"))?;
            let tech: TechKind = e[..split].parse()?;
            let hops: usize = e[split..].parse().map_err(|_| bad("hop count is not a number"))?;
            add_express_links(&topo, hops, profiles.get(tech)?)
        }
    }
}

fn run_simulate(ctx: &Context, a: &SimulateArgs) -> Result<RunConfig> {
    let topologies: Vec<(String, Topology)> = a
        .topo
        .iter()
        .map(|s| parse_topology(s, &ctx.profiles).map(|t| (s.clone(), t)))
        .collect::<Result<_>>()?;
    let base = &topologies[0].1;
    for (name, t) in &topologies[1..] {
        if t.num_nodes() != base.num_nodes() {
            return Err(Error::invalid("topology", format!("`{name}` has a different node count than the baseline")));
        }
    }
    let mut resolved = RunConfig::new("simulate", ctx);
    let messages = match (&a.trace, a.pattern) {
        (Some(path), _) => {
            resolved.trace = Some(path.display().to_string());
            load_trace(path, base.num_nodes())?
        }
        (None, Some(pattern)) => {
            let cfg = PatternConfig {
                volume_bytes: a.volume,
                rounds: a.rounds,
                load: a.load,
            };
            if a.volume == 0 || a.rounds == 0 || !(a.load > 0.0 && a.load <= 1.0) {
                return Err(Error::invalid("pattern", "volume and rounds must be positive and load in (0,1]"));
            }
            resolved.pattern = Some(pattern.name().into());
            resolved.pattern_config = Some(cfg);
            synthesize_with(pattern, base, &cfg)
        }
        (None, None) => return Err(Error::invalid("simulate", "either --trace or --pattern is required")),
    };
    let packets = split_messages(&messages, FLIT_BYTES)?;
    let config = SimConfig {
        max_cycles: a.max_cycles,
        seed: ctx.seed,
        ..SimConfig::default()
    };
    let results = compare_latency(&topologies, &packets, &ctx.calib, &config)?;
    let rows: Vec<_> = results.iter().map(|(r, _)| r.clone()).collect();
    let mut buf = Vec::new();
    write_sim_report(&mut buf, &rows)?;
    emit(ctx, &mut resolved, "sim_report.csv", buf)?;
    if a.packet_dump {
        for (i, (row, res)) in results.iter().enumerate() {
            let mut buf = Vec::new();
            write_packet_dump(&mut buf, &res.packets)?;
            emit(ctx, &mut resolved, &format!("packets_{i}_{}.csv", file_label(&row.topology)), buf)?;
        }
    }
    resolved.topologies = a.topo.clone();
    resolved.max_cycles = Some(a.max_cycles);
    Ok(resolved)
}

fn run_project(ctx: &Context, a: &ProjectArgs) -> Result<RunConfig> {
    let traffic = TrafficModelConfig {
        seed: ctx.seed,
        ..TrafficModelConfig::default()
    };
    let mut all = vec![electronic_projection(a.k, &ctx.profiles, &ctx.calib)?];
    for &kind in &a.router_profile {
        all.push(optical_projection(kind, a.k, &ctx.profiles, &ctx.calib, &traffic, a.policy)?.0);
    }
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in radar_compare(&all) {
        wr.serialize(r)?;
    }
    let mut resolved = RunConfig::new("project", ctx);
    emit(ctx, &mut resolved, "projection.csv", csv_bytes(wr)?)?;
    resolved.k = Some(a.k);
    resolved.technologies = a.router_profile.clone();
    resolved.traffic = Some(traffic);
    resolved.policy = Some(a.policy);
    Ok(resolved)
}
