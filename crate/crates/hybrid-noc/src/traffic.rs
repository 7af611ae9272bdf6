//! Synthetic statistical traffic, trace ingestion and packet splitting.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

pub const FLIT_BYTES: u64 = 8;
pub const LARGE_PACKET_FLITS: u32 = 32;

/// How per-node injection weights are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionSpread {
    /// Nodes take seeded random ranks; weight is a Gaussian of the normalized rank with
    /// width σ, so σ sets the fraction of actively injecting nodes.
    #[default]
    RankProfile,
    /// Weight is |Normal(0, σ)| clamped to [0, 1].
    HalfNormal,
}

impl FromStr for InjectionSpread {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank-profile" | "rank" => Ok(Self::RankProfile),
            "half-normal" => Ok(Self::HalfNormal),
            _ => Err(Error::invalid("injection spread", format!("unknown model `{s}`"))),
        }
    }
}

impl fmt::Display for InjectionSpread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RankProfile => "rank-profile",
            Self::HalfNormal => "half-normal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficModelConfig {
    /// Hop-distribution parameter.
    pub p: f64,
    /// Injection spread.
    pub sigma: f64,
    /// Flits per cycle at the busiest node.
    pub max_injection_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub spread: InjectionSpread,
}

impl Default for TrafficModelConfig {
    fn default() -> Self {
        Self {
            p: 0.02,
            sigma: 0.4,
            max_injection_rate: 0.1,
            seed: 1,
            spread: InjectionSpread::RankProfile,
        }
    }
}

impl TrafficModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid("traffic p", format!("{} outside (0,1]", self.p)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("traffic sigma", format!("{} must be positive", self.sigma)));
        }
        if !(self.max_injection_rate > 0.0 && self.max_injection_rate <= 1.0) {
            return Err(Error::invalid(
                "max injection rate",
                format!("{} outside (0,1]", self.max_injection_rate),
            ));
        }
        Ok(())
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.max_injection_rate = r;
        self
    }
}

/// Dense N×N flit-rate matrix (flits/cycle), row = source.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficSpec {
    n: usize,
    rate: Vec<f64>,
}

impl TrafficSpec {
    pub fn zeros(n: usize) -> Self {
        Self { n, rate: vec![0.0; n * n] }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn rate(&self, s: NodeId, d: NodeId) -> f64 {
        self.rate[s * self.n + d]
    }

    pub fn set(&mut self, s: NodeId, d: NodeId, v: f64) {
        assert!(s != d || v == 0.0, "diagonal must stay zero");
        self.rate[s * self.n + d] = v;
    }

    pub fn add(&mut self, s: NodeId, d: NodeId, v: f64) {
        assert!(s != d, "diagonal must stay zero");
        self.rate[s * self.n + d] += v;
    }

    pub fn source_total(&self, s: NodeId) -> f64 {
        self.rate[s * self.n..(s + 1) * self.n].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.rate.iter().sum()
    }

    /// Nonzero entries as (src, dst, rate), row-major.
    pub fn flows(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.rate
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(i, &v)| (i / self.n, i % self.n, v))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            rate: self.rate.iter().map(|v| v * factor).collect(),
        }
    }

    /// Flit counts per (src, dst) of a packet list.
    pub fn from_packets(n: usize, packets: &[PacketDescriptor]) -> Self {
        let mut t = Self::zeros(n);
        for p in packets {
            t.add(p.src, p.dst, p.flits as f64);
        }
        t
    }

    /// Draws `count` (src, dst) pairs with probability proportional to rate.
    pub fn sample_pairs(&self, count: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>> {
        let dist = WeightedIndex::new(&self.rate).map_err(|e| Error::invalid("traffic", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                let i = dist.sample(&mut rng);
                (i / self.n, i % self.n)
            })
            .collect())
    }
}

/// Per-node injection weights with maximum exactly 1.
pub fn injection_profile(n: usize, config: &TrafficModelConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = vec![0.0; n];
    match config.spread {
        InjectionSpread::RankProfile => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (rank, &node) in order.iter().enumerate() {
                let z = rank as f64 / n as f64;
                g[node] = (-(z * z) / (2.0 * config.sigma * config.sigma)).exp();
            }
        }
        InjectionSpread::HalfNormal => {
            let normal = Normal::new(0.0, config.sigma).map_err(|e| Error::invalid("traffic sigma", e.to_string()))?;
            for v in g.iter_mut() {
                *v = normal.sample(&mut rng).abs().min(1.0);
            }
        }
    }
    let max = g.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::invalid("traffic", "all injection weights are zero"));
    }
    Ok(g.into_iter().map(|v| v / max).collect())
}

/// Unnormalized destination weights p·(1−p)^(h−1) over base-mesh distance h.
pub fn destination_weights(topo: &Topology, src: NodeId, p: f64) -> Vec<f64> {
    (0..topo.num_nodes())
        .map(|d| {
            if d == src {
                0.0
            } else {
                let h = topo.manhattan(src, d) as i32;
                p * (1.0 - p).powi(h - 1)
            }
        })
        .collect()
}

/// Mean base-mesh hop distance of the destination distribution, averaged over sources.
pub fn expected_hops(topo: &Topology, p: f64) -> f64 {
    let n = topo.num_nodes();
    let mut acc = 0.0;
    for s in 0..n {
        let w = destination_weights(topo, s, p);
        let total: f64 = w.iter().sum();
        let mean: f64 = w.iter().enumerate().map(|(d, wd)| wd * topo.manhattan(s, d) as f64).sum::<f64>() / total;
        acc += mean;
    }
    acc / n as f64
}

pub fn generate_synthetic(topo: &Topology, config: &TrafficModelConfig) -> Result<TrafficSpec> {
    let n = topo.num_nodes();
    let g = injection_profile(n, config)?;
    let mut spec = TrafficSpec::zeros(n);
    for s in 0..n {
        let w = destination_weights(topo, s, config.p);
        let total: f64 = w.iter().sum();
        let out = config.max_injection_rate * g[s];
        for (d, wd) in w.into_iter().enumerate() {
            if wd > 0.0 {
                spec.set(s, d, out * wd / total);
            }
        }
    }
    Ok(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMessage {
    pub inject_cycle: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload_bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketDescriptor {
    pub inject_cycle: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub flits: u32,
}

/// Parses `<inject_cycle> <src> <dst> <payload_bytes>` lines; `#` starts a comment.
/// The result is sorted by inject cycle (stable).
pub fn parse_trace(text: &str, origin: &str, num_nodes: usize) -> Result<Vec<TraceMessage>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let perr = |reason: String| Error::Parse {
            path: origin.to_string(),
            line: lineno,
            reason,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(perr(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut vals = [0u64; 4];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f.parse().map_err(|e| perr(format!("field {}: `{f}`: {e}", i + 1)))?;
        }
        let [cycle, src, dst, bytes] = vals;
        for (name, id) in [("src", src), ("dst", dst)] {
            if id as usize >= num_nodes {
                return Err(perr(format!("{name} {id} out of range for {num_nodes} nodes")));
            }
        }
        out.push(TraceMessage {
            inject_cycle: cycle,
            src: src as usize,
            dst: dst as usize,
            payload_bytes: bytes,
        });
    }
    out.sort_by_key(|m| m.inject_cycle);
    Ok(out)
}

pub fn load_trace(path: &Path, num_nodes: usize) -> Result<Vec<TraceMessage>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, &path.display().to_string(), num_nodes)
}

pub fn write_trace(messages: &[TraceMessage]) -> String {
    let mut s = String::from("# inject_cycle src dst payload_bytes\n");
    for m in messages {
        s.push_str(&format!("{} {} {} {}\n", m.inject_cycle, m.src, m.dst, m.payload_bytes));
    }
    s
}

/// Packet sizes (in flits) for one message of `bytes`.
pub fn packet_sizes(bytes: u64, flit_bytes: u64) -> Vec<u32> {
    let large = LARGE_PACKET_FLITS as u64 * flit_bytes;
    let mut sizes = vec![LARGE_PACKET_FLITS; (bytes / large) as usize];
    let rem = bytes % large;
    if rem > 0 {
        sizes.push(if rem > flit_bytes { LARGE_PACKET_FLITS } else { 1 });
    }
    sizes
}

/// Splits messages into 1-flit and 32-flit packets.
pub fn split_messages(messages: &[TraceMessage], flit_bytes: u64) -> Result<Vec<PacketDescriptor>> {
    if flit_bytes == 0 {
        return Err(Error::invalid("flit size", "zero bytes"));
    }
    let mut out = Vec::new();
    for (i, m) in messages.iter().enumerate() {
        if m.payload_bytes == 0 {
            return Err(Error::invalid("trace message", format!("message {i} has zero bytes")));
        }
        if m.src == m.dst {
            return Err(Error::invalid("trace message", format!("message {i} sends to itself")));
        }
        for flits in packet_sizes(m.payload_bytes, flit_bytes) {
            out.push(PacketDescriptor {
                inject_cycle: m.inject_cycle,
                src: m.src,
                dst: m.dst,
                flits,
            });
        }
    }
    out.sort_by_key(|p| p.inject_cycle);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    AllToAll,
    Neighbor1Hop,
    LongRange,
    ShortRange,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::AllToAll, Pattern::Neighbor1Hop, Pattern::LongRange, Pattern::ShortRange];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::AllToAll => "all-to-all",
            Pattern::Neighbor1Hop => "neighbor",
            Pattern::LongRange => "long-range",
            Pattern::ShortRange => "short-range",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-to-all" | "alltoall" => Ok(Pattern::AllToAll),
            "neighbor" | "neighbor1hop" | "neighbor-1hop" => Ok(Pattern::Neighbor1Hop),
            "long-range" | "longrange" => Ok(Pattern::LongRange),
            "short-range" | "shortrange" => Ok(Pattern::ShortRange),
            _ => Err(Error::invalid("pattern", format!("unknown pattern `{s}`"))),
        }
    }
}

/// Destinations of `src` under `pattern`:
/// all other nodes; the four mesh neighbours; same-row nodes at least k/2 columns away;
/// same-row nodes exactly three columns away.
pub fn pattern_destinations(pattern: Pattern, topo: &Topology, src: NodeId) -> Vec<NodeId> {
    let n = topo.num_nodes();
    let k = topo.k;
    let c = topo.coord(src);
    let mut d: Vec<NodeId> = match pattern {
        Pattern::AllToAll => (0..n).filter(|&d| d != src).collect(),
        Pattern::Neighbor1Hop => (0..n).filter(|&d| topo.manhattan(src, d) == 1).collect(),
        Pattern::LongRange => (0..k)
            .filter(|&x| x.abs_diff(c.x) >= k / 2)
            .map(|x| c.y * k + x)
            .collect(),
        Pattern::ShortRange => (0..k)
            .filter(|&x| x.abs_diff(c.x) == 3.min(k - 1))
            .map(|x| c.y * k + x)
            .collect(),
    };
    // Start each list after the source.
    if let Some(pos) = d.iter().position(|&v| v > src) {
        d.rotate_left(pos);
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternConfig {
    /// Bytes per message.
    pub volume_bytes: u64,
    /// Times each source cycles through its destination list.
    pub rounds: u32,
    /// Offered load per source, flits/cycle.
    pub load: f64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            volume_bytes: 8,
            rounds: 1,
            load: 0.05,
        }
    }
}

pub fn synthesize_benchmark_like(pattern: Pattern, topo: &Topology, volume_bytes: u64) -> Vec<TraceMessage> {
    synthesize_with(
        pattern,
        topo,
        &PatternConfig {
            volume_bytes,
            ..PatternConfig::default()
        },
    )
}

/// Paced trace: each source sends its messages back to back at the configured load.
pub fn synthesize_with(pattern: Pattern, topo: &Topology, cfg: &PatternConfig) -> Vec<TraceMessage> {
    let flits: u32 = packet_sizes(cfg.volume_bytes.max(1), FLIT_BYTES).iter().sum();
    let gap = flits as f64 / cfg.load.clamp(1e-6, 1.0);
    let mut out = Vec::new();
    for src in 0..topo.num_nodes() {
        let dests = pattern_destinations(pattern, topo, src);
        let mut m = 0u64;
        for _ in 0..cfg.rounds {
            for &dst in &dests {
                out.push(TraceMessage {
                    inject_cycle: (m as f64 * gap).floor() as u64,
                    src,
                    dst,
                    payload_bytes: cfg.volume_bytes.max(1),
                });
                m += 1;
            }
        }
    }
    out.sort_by_key(|m| (m.inject_cycle, m.src));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::techlib::{ProfileSet, TechKind};
    use crate::topology::build_mesh;

    fn mesh(k: usize) -> Topology {
        build_mesh(k, ProfileSet::builtin().get(TechKind::Electronic).unwrap()).unwrap()
    }

    #[test]
    fn split_examples() {
        let msg = |b| TraceMessage {
            inject_cycle: 0,
            src: 0,
            dst: 1,
            payload_bytes: b,
        };
        let sizes = |b| -> Vec<u32> { split_messages(&[msg(b)], 8).unwrap().iter().map(|p| p.flits).collect() };
        assert_eq!(sizes(8), vec![1]);
        assert_eq!(sizes(512), vec![32, 32]);
        assert_eq!(sizes(260), vec![32, 1]);
        assert_eq!(sizes(9), vec![32]);
        assert!(split_messages(&[msg(0)], 8).is_err());
    }

    #[test]
    fn parse_examples() {
        let m = parse_trace("100 3 12 2048\n", "t", 256).unwrap();
        assert_eq!(
            m,
            vec![TraceMessage {
                inject_cycle: 100,
                src: 3,
                dst: 12,
                payload_bytes: 2048
            }]
        );
        assert!(parse_trace("", "t", 256).unwrap().is_empty());
        let err = parse_trace("# hdr\n1 2 300 8\n", "t", 256).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let sorted = parse_trace("5 0 1 8\n1 1 0 8 # c\n", "t", 4).unwrap();
        assert_eq!(sorted[0].inject_cycle, 1);
    }

    #[test]
    fn p_one_is_nearest_neighbour() {
        let t = mesh(6);
        let cfg = TrafficModelConfig { p: 1.0, ..Default::default() };
        let spec = generate_synthetic(&t, &cfg).unwrap();
        for (s, d, _) in spec.flows() {
            assert_eq!(t.manhattan(s, d), 1);
        }
    }

    #[test]
    fn smaller_p_means_longer_hops() {
        let t = mesh(16);
        assert!(expected_hops(&t, 0.02) > expected_hops(&t, 0.5));
    }

    #[test]
    fn default_rates_peak_at_r() {
        let t = mesh(16);
        let spec = generate_synthetic(&t, &TrafficModelConfig::default()).unwrap();
        let totals: Vec<f64> = (0..256).map(|s| spec.source_total(s)).collect();
        assert!(totals.iter().all(|&v| v <= 0.1 + 1e-15));
        assert!(totals.iter().any(|&v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn half_normal_peaks_at_r() {
        let t = mesh(8);
        let cfg = TrafficModelConfig {
            spread: InjectionSpread::HalfNormal,
            ..Default::default()
        };
        let spec = generate_synthetic(&t, &cfg).unwrap();
        let max = (0..64).map(|s| spec.source_total(s)).fold(0.0, f64::max);
        assert!((max - 0.1).abs() < 1e-15);
    }

    #[test]
    fn patterns_have_named_distances() {
        let t = mesh(16);
        for s in 0..256 {
            assert!(pattern_destinations(Pattern::Neighbor1Hop, &t, s).iter().all(|&d| t.manhattan(s, d) == 1));
            assert!(pattern_destinations(Pattern::ShortRange, &t, s).iter().all(|&d| t.manhattan(s, d) <= 3));
            assert!(pattern_destinations(Pattern::LongRange, &t, s).iter().all(|&d| t.manhattan(s, d) >= 8));
            assert_eq!(pattern_destinations(Pattern::AllToAll, &t, s).len(), 255);
        }
    }

    #[test]
    fn all_to_all_equal_bytes() {
        let t = mesh(4);
        let tr = synthesize_benchmark_like(Pattern::AllToAll, &t, 64);
        assert_eq!(tr.len(), 16 * 15);
        assert!(tr.iter().all(|m| m.payload_bytes == 64));
    }
}
