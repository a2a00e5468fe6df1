use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use sublnc_core::advisor::{consequential_maxflow, rate_ratio_csv, rate_ratio_verdict, SinkAdvice};
use sublnc_core::blockcode::{lift_block, optimize_block_plan, BlockError};
use sublnc_core::field::FieldSpec;
use sublnc_core::io::{
    to_json, CodeFile, GemsFile, IoError, NetworkFile, PlanFile, PlanKind, SinkLabel,
};
use sublnc_core::linalg::{invert, Mat};
use sublnc_core::multicast::{
    build_multicast, extract_gem, extract_gem_with_rank, simulate, CodeError, LinearCode,
};
use sublnc_core::netgraph::{EdgeId, NetError, Network};
use sublnc_core::subrate::{build_precoder, build_precoder_with_spanner, GemSet, SubrateError};

#[derive(Parser)]
#[command(
    name = "sublnc",
    version,
    about = "Linear multicast and sub-rate precoding toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Max-flow from the source to one node, with edge-disjoint paths.
    Maxflow {
        /// Network description (JSON).
        network: PathBuf,
        /// Node name.
        sink: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a linear multicast for the network's designated sinks.
    Code {
        /// Network description (JSON).
        network: PathBuf,
        /// 0 tries coefficient candidates in order; other values start from seeded offsets.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design a precoder for the sub-rate sinks, from a network and code or
    /// from GEMs given directly.
    Precode {
        /// Network description; needs --code.
        network: Option<PathBuf>,
        /// Code file written by `sublnc code`.
        #[arg(long)]
        code: Option<PathBuf>,
        /// GEM file, used instead of a network and code.
        #[arg(long)]
        gems: Option<PathBuf>,
        /// Longest block to consider when single-use decoding is impossible.
        #[arg(long, default_value_t = 1)]
        block: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Push random messages through the network and check every decoder.
    Simulate {
        /// Network description (JSON).
        network: PathBuf,
        /// Code file written by `sublnc code`.
        #[arg(long)]
        code: PathBuf,
        /// Plan file written by `sublnc precode`.
        #[arg(long)]
        plan: PathBuf,
        /// Messages (or message blocks) to send.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Seed for the message generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-ratio bound per number of sinks, as CSV.
    RateRatio {
        #[arg(long, default_value_t = 50)]
        max_sinks: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sink versus consequential sub-rate sink verdict for one node.
    Advise {
        /// Network description (JSON).
        network: PathBuf,
        /// Code file written by `sublnc code`.
        #[arg(long)]
        code: PathBuf,
        /// Node name.
        node: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Infeasible(String),
    Contract(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Contract(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Infeasible(m) | Failure::Contract(m) => f.write_str(m),
        }
    }
}

/// `Variant: message`, so scripts can match on the variant name.
fn tagged<E: fmt::Debug + fmt::Display>(e: &E) -> String {
    let dbg = format!("{e:?}");
    let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
    format!("{name}: {e}")
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(tagged(&e))
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        Failure::Input(tagged(&e))
    }
}

impl From<CodeError> for Failure {
    fn from(e: CodeError) -> Self {
        let m = tagged(&e);
        match e {
            CodeError::FieldTooSmall { .. }
            | CodeError::RateExceedsSourceDegree { .. }
            | CodeError::CodeInvalidForSink(_) => Failure::Infeasible(m),
            CodeError::Malformed(_) | CodeError::Net(_) => Failure::Input(m),
            CodeError::Inconsistent(_) | CodeError::Linalg(_) => Failure::Contract(m),
        }
    }
}

impl From<SubrateError> for Failure {
    fn from(e: SubrateError) -> Self {
        let m = tagged(&e);
        match e {
            SubrateError::EmptyGemSet
            | SubrateError::InvalidGem { .. }
            | SubrateError::ZeroVector
            | SubrateError::BadVector(_) => Failure::Input(m),
            SubrateError::SearchSpaceTooLarge { .. }
            | SubrateError::NotFullyDecodable
            | SubrateError::ConstructionFailed(_) => Failure::Infeasible(m),
            SubrateError::ContractViolation(_) | SubrateError::Linalg(_) => Failure::Contract(m),
        }
    }
}

impl From<BlockError> for Failure {
    fn from(e: BlockError) -> Self {
        let m = tagged(&e);
        match e {
            BlockError::Subrate(inner) => inner.into(),
            BlockError::InfeasibleDesign(_) | BlockError::TooManySubsets { .. } => {
                Failure::Infeasible(m)
            }
            BlockError::ContractViolation(_) | BlockError::Linalg(_) => Failure::Contract(m),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_network(path: &Path) -> Result<(Network, String), Failure> {
    let text = read(path)?;
    let net = NetworkFile::parse(&text)?.to_network()?;
    Ok((net, text))
}

fn load_code(path: &Path, net: &Network) -> Result<(LinearCode, String), Failure> {
    let text = read(path)?;
    let file: CodeFile = serde_json::from_str(&text).map_err(IoError::from)?;
    Ok((file.to_code(net)?, text))
}

fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct FlowJson<'a> {
    sink: &'a str,
    value: usize,
    paths: Vec<Vec<i64>>,
}

fn cmd_maxflow(network: &Path, sink: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    let (net, _) = load_network(network)?;
    let t = net.node_index(sink)?;
    if t == net.source() {
        return Err(Failure::Input(format!("`{sink}` is the source")));
    }
    let flow = net.max_flow(t)?;
    let json = FlowJson {
        sink,
        value: flow.value,
        paths: flow
            .paths
            .iter()
            .map(|p| p.iter().map(|e| e.0).collect())
            .collect(),
    };
    emit(out, &to_json(&json))
}

fn cmd_code(network: &Path, seed: u64, out: &Option<PathBuf>) -> Result<(), Failure> {
    let (net, _) = load_network(network)?;
    let code = build_multicast(&net, net.sinks(), seed)?;
    emit(out, &to_json(&CodeFile::from_code(&net, &code)))
}

struct Gathered {
    gems: Vec<Mat>,
    labels: Vec<SinkLabel>,
    full_rate: Vec<Mat>,
}

/// Splits the network's sinks into full-rate GEMs and sub-rate GEMs.
fn gather_gems(net: &Network, code: &LinearCode) -> Result<Gathered, Failure> {
    let r = net.rate();
    let mut g = Gathered {
        gems: Vec::new(),
        labels: Vec::new(),
        full_rate: Vec::new(),
    };
    for &t in net.sinks() {
        let gem = extract_gem(code, net, t)?;
        if gem.matrix.cols() == r {
            g.full_rate.push(gem.matrix);
        } else {
            g.labels.push(SinkLabel {
                name: net.name(t).to_string(),
                edges: Some(gem.used_edges),
            });
            g.gems.push(gem.matrix);
        }
    }
    for &t in net.subrate_sinks() {
        let rank = consequential_maxflow(net, code, t);
        if rank == 0 {
            eprintln!(
                "note: `{}` receives no information and is skipped",
                net.name(t)
            );
            continue;
        }
        let gem = extract_gem_with_rank(code, net, t, rank)?;
        if rank == r {
            g.full_rate.push(gem.matrix);
        } else {
            g.labels.push(SinkLabel {
                name: net.name(t).to_string(),
                edges: Some(gem.used_edges),
            });
            g.gems.push(gem.matrix);
        }
    }
    Ok(g)
}

fn plan_for(
    field: FieldSpec,
    rate: usize,
    g: Gathered,
    spanner: Option<Vec<Vec<u32>>>,
    l_max: usize,
) -> Result<PlanFile, Failure> {
    if g.gems.is_empty() {
        // nothing to precode for: the identity serves every full-rate sink
        return Ok(PlanFile {
            kind: PlanKind::Subrate,
            p: field.modulus(),
            rate,
            l: 1,
            precoder: Mat::identity(field, rate).to_rows(),
            spanner: Vec::new(),
            i_bar: None,
            blocks: None,
            sinks: Vec::new(),
        });
    }
    let set = GemSet::new(field, rate, g.gems)?;
    if let Some(v) = spanner {
        let plan = build_precoder_with_spanner(&set, &v, &g.full_rate)?;
        return Ok(PlanFile::from_subrate(&plan, &g.labels));
    }
    match build_precoder(&set, &g.full_rate) {
        Ok(plan) => Ok(PlanFile::from_subrate(&plan, &g.labels)),
        Err(SubrateError::NotFullyDecodable) => {
            let plan = optimize_block_plan(&set, l_max, &g.full_rate)?;
            Ok(PlanFile::from_block(&plan, &g.labels))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_precode(
    network: &Option<PathBuf>,
    code: &Option<PathBuf>,
    gems: &Option<PathBuf>,
    block: usize,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    if block == 0 {
        return Err(Failure::Input("--block must be at least 1".into()));
    }
    let plan = match (network, code, gems) {
        (None, None, Some(gpath)) => {
            let file = GemsFile::parse(&read(gpath)?)?;
            let field = file.field()?;
            let g = Gathered {
                gems: file.matrices(&file.gems)?,
                labels: file
                    .gems
                    .iter()
                    .map(|m| SinkLabel {
                        name: m.sink.clone(),
                        edges: None,
                    })
                    .collect(),
                full_rate: file.matrices(&file.full_rate)?,
            };
            plan_for(field, file.rate, g, file.spanner.clone(), block)?
        }
        (Some(npath), Some(cpath), None) => {
            let (net, _) = load_network(npath)?;
            let (code, _) = load_code(cpath, &net)?;
            let g = gather_gems(&net, &code)?;
            plan_for(net.field(), net.rate(), g, None, block)?
        }
        _ => {
            return Err(Failure::Input(
                "give either a network with --code, or --gems alone".into(),
            ))
        }
    };
    emit(out, &to_json(&plan))
}

#[derive(Serialize)]
struct SinkSummary {
    sink: String,
    h_t: usize,
    role: &'static str,
    decoded_per_block: usize,
    rate: String,
    failures: usize,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs_sha256: String,
    seed: u64,
    trials: usize,
    block_length: usize,
    outputs: Vec<String>,
    sinks: Vec<SinkSummary>,
    total_failures: usize,
}

enum Decoder {
    Full { inverse: Mat },
    Planned { d: Mat, r: Mat },
    None,
}

struct Watched {
    node: usize,
    role: &'static str,
    h: usize,
    edges: Vec<EdgeId>,
    decoder: Decoder,
    decoded: usize,
    failures: usize,
}

fn cmd_simulate(
    network: &Path,
    code_path: &Path,
    plan_path: &Path,
    trials: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<bool, Failure> {
    let (net, net_text) = load_network(network)?;
    let (code, code_text) = load_code(code_path, &net)?;
    let plan_text = read(plan_path)?;
    let plan = PlanFile::parse(&plan_text)?;
    let f = net.field();
    let r = net.rate();
    if plan.p != f.modulus() || plan.rate != r || plan.l == 0 {
        return Err(Failure::Input(
            "plan field, rate or block length does not fit the network".into(),
        ));
    }
    let l = plan.l;
    let p_hat = plan.precoder()?;
    if invert(&p_hat).is_err() {
        return Err(Failure::Contract(
            "ContractViolation: precoder is singular".into(),
        ));
    }

    let mut watched: Vec<Watched> = Vec::new();
    for s in &plan.sinks {
        let node = net.node_index(&s.sink)?;
        let edges = match &s.edges {
            Some(es) => es.iter().map(|&e| EdgeId(e)).collect(),
            None => extract_gem_with_rank(&code, &net, node, s.h)?.used_edges,
        };
        if edges.len() != s.h || edges.iter().any(|e| !net.incoming(node).contains(e)) {
            return Err(Failure::Input(format!(
                "plan links for `{}` are not its inputs",
                s.sink
            )));
        }
        let (d, rm) = plan.decoder(s)?;
        watched.push(Watched {
            node,
            role: "sub-rate",
            h: net.max_flow(node)?.value,
            edges,
            decoder: Decoder::Planned { d, r: rm },
            decoded: 0,
            failures: 0,
        });
    }
    for &t in net.sinks() {
        if watched.iter().any(|w| w.node == t) {
            continue;
        }
        let h = net.max_flow(t)?.value;
        let gem = extract_gem(&code, &net, t)?;
        let decoder = if gem.matrix.cols() == r {
            let seen = p_hat
                .mul(&lift_block(&gem.matrix, l))
                .map_err(|e| Failure::Contract(tagged(&e)))?;
            match invert(&seen) {
                Ok(inverse) => Decoder::Full { inverse },
                Err(_) => {
                    return Err(Failure::Contract(format!(
                        "ContractViolation: full-rate sink `{}` cannot invert under the precoder",
                        net.name(t)
                    )))
                }
            }
        } else {
            Decoder::None
        };
        watched.push(Watched {
            node: t,
            role: if h >= r { "full-rate" } else { "sub-rate" },
            h,
            edges: gem.used_edges,
            decoder,
            decoded: 0,
            failures: 0,
        });
    }
    watched.sort_by_key(|w| w.node);

    let q = f.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let msg: Vec<u32> = (0..l * r).map(|_| rng.gen_range(0..q)).collect();
        let x = p_hat
            .left_apply(&msg)
            .map_err(|e| Failure::Contract(tagged(&e)))?;
        let mut traces = Vec::with_capacity(l);
        for i in 0..l {
            traces.push(simulate(&net, &code, None, &x[i * r..(i + 1) * r])?);
        }
        for w in watched.iter_mut() {
            let rx: Vec<u32> = traces
                .iter()
                .flat_map(|tr| w.edges.iter().map(move |e| tr.edge_symbols[e]))
                .collect();
            let ok = match &w.decoder {
                Decoder::Full { inverse } => {
                    w.decoded = l * r;
                    inverse
                        .left_apply(&rx)
                        .map_err(|e| Failure::Contract(tagged(&e)))?
                        == msg
                }
                Decoder::Planned { d, r: rm } => {
                    w.decoded = rm
                        .columns()
                        .iter()
                        .filter(|c| c.iter().any(|&v| v != 0))
                        .count();
                    let got = d
                        .left_apply(&rx)
                        .map_err(|e| Failure::Contract(tagged(&e)))?;
                    let want = rm
                        .left_apply(&msg)
                        .map_err(|e| Failure::Contract(tagged(&e)))?;
                    got == want
                }
                Decoder::None => true,
            };
            if !ok {
                w.failures += 1;
            }
        }
    }

    let sinks: Vec<SinkSummary> = watched
        .iter()
        .map(|w| SinkSummary {
            sink: net.name(w.node).to_string(),
            h_t: w.h,
            role: w.role,
            decoded_per_block: w.decoded,
            rate: sublnc_core::io::rate_string(num_rational::Ratio::new(
                w.decoded as u64,
                l as u64,
            )),
            failures: w.failures,
        })
        .collect();
    let total_failures = sinks.iter().map(|s| s.failures).sum();
    let report = RunReport {
        command: "simulate",
        inputs_sha256: digest(&[&net_text, &code_text, &plan_text]),
        seed,
        trials,
        block_length: l,
        outputs: out.iter().map(|p| p.display().to_string()).collect(),
        sinks,
        total_failures,
    };
    emit(out, &to_json(&report))?;
    Ok(total_failures == 0)
}

#[derive(Serialize)]
struct AdviceJson<'a> {
    node: &'a str,
    num_sinks: usize,
    #[serde(flatten)]
    advice: SinkAdvice,
}

fn cmd_advise(
    network: &Path,
    code: &Path,
    node: &str,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    let (net, _) = load_network(network)?;
    let (code, _) = load_code(code, &net)?;
    let t = net.node_index(node)?;
    if t == net.source() {
        return Err(Failure::Input(format!("`{node}` is the source")));
    }
    let h = net.max_flow(t)?.value;
    let rt = consequential_maxflow(&net, &code, t);
    let num_sinks = net.sinks().len().max(1);
    let json = AdviceJson {
        node,
        num_sinks,
        advice: rate_ratio_verdict(h, rt, num_sinks),
    };
    emit(out, &to_json(&json))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Maxflow { network, sink, out } => cmd_maxflow(&network, &sink, &out).map(|_| true),
        Command::Code { network, seed, out } => cmd_code(&network, seed, &out).map(|_| true),
        Command::Precode {
            network,
            code,
            gems,
            block,
            out,
        } => cmd_precode(&network, &code, &gems, block, &out).map(|_| true),
        Command::Simulate {
            network,
            code,
            plan,
            trials,
            seed,
            out,
        } => cmd_simulate(&network, &code, &plan, trials, seed, &out),
        Command::RateRatio { max_sinks, out } => {
            if max_sinks == 0 {
                return Err(Failure::Input("--max-sinks must be at least 1".into()));
            }
            emit(&out, &rate_ratio_csv(max_sinks)).map(|_| true)
        }
        Command::Advise {
            network,
            code,
            node,
            out,
        } => cmd_advise(&network, &code, &node, &out).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: decoding mismatches, see the report");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
