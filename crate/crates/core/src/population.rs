//! Synthetic population and layered contact network generation.
//!
//! Agents live in households, may attend a school contact group (enrolled,
//! ages 5-17) or a workplace (employed, ages 18-65), and carry additional
//! random community contacts. The home, school, and work layers are unions
//! of cliques over their site memberships; the community layer realizes a
//! negative-binomial degree sequence via stub matching.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::tables::{AgeDistribution, AgeRateTable, SizeDistribution};

pub type AgentId = u32;

/// School eligibility window (inclusive).
pub const SCHOOL_AGES: (u32, u32) = (5, 17);
/// Workplace eligibility window (inclusive).
pub const WORK_AGES: (u32, u32) = (18, 65);

/// The four contact settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Home,
    School,
    Work,
    Community,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Home, Layer::School, Layer::Work, Layer::Community];

    pub fn index(self) -> usize {
        match self {
            Layer::Home => 0,
            Layer::School => 1,
            Layer::Work => 2,
            Layer::Community => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Home => "home",
            Layer::School => "school",
            Layer::Work => "work",
            Layer::Community => "community",
        }
    }

    pub fn from_name(name: &str) -> Result<Layer> {
        match name {
            "home" => Ok(Layer::Home),
            "school" => Ok(Layer::School),
            "work" => Ok(Layer::Work),
            "community" => Ok(Layer::Community),
            other => Err(Error::query(format!("unknown layer '{other}'"))),
        }
    }
}

/// One simulated person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub agent_id: AgentId,
    pub age: u32,
    pub household_id: u32,
    pub school_id: Option<u32>,
    pub workplace_id: Option<u32>,
}

/// Configuration for synthetic population generation.
#[derive(Debug, Clone)]
pub struct PopulationConfig {
    pub n_agents: u32,
    pub age_distribution: AgeDistribution,
    pub employment_rate_by_age: AgeRateTable,
    pub enrollment_rate_by_age: AgeRateTable,
    pub household_size_distribution: SizeDistribution,
    pub school_size_distribution: SizeDistribution,
    pub workplace_size_distribution: SizeDistribution,
    pub community_contact_mean: f64,
    pub community_contact_dispersion: f64,
    pub rng_seed: u64,
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::config("n_agents must be at least 2"));
        }
        if !(self.community_contact_mean.is_finite() && self.community_contact_mean >= 0.0) {
            return Err(Error::config("community_contact_mean must be >= 0"));
        }
        if !(self.community_contact_dispersion.is_finite()
            && self.community_contact_dispersion > 0.0)
        {
            return Err(Error::config("community_contact_dispersion must be > 0"));
        }
        Ok(())
    }
}

/// Four undirected edge lists over the same agent set, one per setting.
/// Edges are stored canonically: `(a, b)` with `a < b`, sorted, no
/// duplicates, no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredContactNetwork {
    n_agents: u32,
    layers: [Vec<(AgentId, AgentId)>; 4],
}

impl LayeredContactNetwork {
    /// Build from raw edge lists, canonicalizing order and validating the
    /// structural invariants.
    pub fn from_raw(n_agents: u32, mut layers: [Vec<(AgentId, AgentId)>; 4]) -> Result<Self> {
        for (idx, edges) in layers.iter_mut().enumerate() {
            for edge in edges.iter_mut() {
                if edge.0 == edge.1 {
                    return Err(Error::config(format!(
                        "self-loop at agent {} in layer {}",
                        edge.0,
                        Layer::ALL[idx].name()
                    )));
                }
                if edge.0.max(edge.1) >= n_agents {
                    return Err(Error::config(format!(
                        "edge ({}, {}) references agent outside population",
                        edge.0, edge.1
                    )));
                }
                if edge.0 > edge.1 {
                    *edge = (edge.1, edge.0);
                }
            }
            edges.sort_unstable();
            let before = edges.len();
            edges.dedup();
            if edges.len() != before {
                return Err(Error::config(format!(
                    "duplicate edges in layer {}",
                    Layer::ALL[idx].name()
                )));
            }
        }
        Ok(Self { n_agents, layers })
    }

    pub fn n_agents(&self) -> u32 {
        self.n_agents
    }

    pub fn edges(&self, layer: Layer) -> &[(AgentId, AgentId)] {
        &self.layers[layer.index()]
    }

    pub fn edge_count(&self, layer: Layer) -> usize {
        self.layers[layer.index()].len()
    }

    pub fn total_edge_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// Degree sequence of one layer over all agents (isolated agents count
    /// with degree zero).
    pub fn degrees(&self, layer: Layer) -> Vec<u32> {
        let mut degrees = vec![0u32; self.n_agents as usize];
        for &(a, b) in self.edges(layer) {
            degrees[a as usize] += 1;
            degrees[b as usize] += 1;
        }
        degrees
    }

    /// Serialize as one `layer,agent_a,agent_b` line per edge in canonical
    /// order (layer order home, school, work, community; then ascending
    /// endpoint pairs).
    pub fn write_edge_list<W: Write>(&self, mut writer: W) -> Result<()> {
        for layer in Layer::ALL {
            for &(a, b) in self.edges(layer) {
                writeln!(writer, "{},{},{}", layer.name(), a, b)?;
            }
        }
        Ok(())
    }

    pub fn read_edge_list<R: Read>(reader: R, n_agents: u32) -> Result<Self> {
        let mut layers: [Vec<(AgentId, AgentId)>; 4] = Default::default();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let (layer, a, b) = (|| {
                let layer = Layer::from_name(parts.next()?.trim()).ok()?;
                let a: AgentId = parts.next()?.trim().parse().ok()?;
                let b: AgentId = parts.next()?.trim().parse().ok()?;
                Some((layer, a, b))
            })()
            .ok_or_else(|| {
                Error::parse("edge list", format!("malformed line {}: '{line}'", lineno + 1))
            })?;
            layers[layer.index()].push((a, b));
        }
        Self::from_raw(n_agents, layers)
    }
}

/// Summary statistics of one layer's degree sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub mean: f64,
    pub variance: f64,
    pub max: u32,
}

/// Exact degree statistics for the named layer. Unknown layer names are a
/// query error.
pub fn layer_degree_summary(net: &LayeredContactNetwork, layer_name: &str) -> Result<DegreeSummary> {
    let layer = Layer::from_name(layer_name)?;
    Ok(degree_summary(net, layer))
}

pub fn degree_summary(net: &LayeredContactNetwork, layer: Layer) -> DegreeSummary {
    let degrees = net.degrees(layer);
    let n = degrees.len() as f64;
    let mean = degrees.iter().map(|&d| d as f64).sum::<f64>() / n;
    let variance = degrees
        .iter()
        .map(|&d| {
            let diff = d as f64 - mean;
            diff * diff
        })
        .sum::<f64>()
        / n;
    let max = degrees.iter().copied().max().unwrap_or(0);
    DegreeSummary { mean, variance, max }
}

/// Generate the synthetic population and its four-layer contact network.
/// A given seed always produces byte-identical output.
pub fn generate_population(
    config: &PopulationConfig,
) -> Result<(Vec<AgentRecord>, LayeredContactNetwork)> {
    config.validate()?;
    let n = config.n_agents;
    let mut rng = rng_from_seed(config.rng_seed);

    // Households: draw sizes until the population is filled, truncating the
    // last household.
    let mut agents: Vec<AgentRecord> = Vec::with_capacity(n as usize);
    let mut household_id = 0u32;
    while (agents.len() as u32) < n {
        let remaining = n - agents.len() as u32;
        let size = config.household_size_distribution.sample(&mut rng).min(remaining);
        for _ in 0..size {
            let age = config.age_distribution.sample(&mut rng);
            agents.push(AgentRecord {
                agent_id: agents.len() as AgentId,
                age,
                household_id,
                school_id: None,
                workplace_id: None,
            });
        }
        household_id += 1;
    }

    // Enrollment and employment draws, age-stratified. An agent joins at
    // most one of the two site kinds because the age windows are disjoint.
    // Schools serve age bands (primary 5-11, secondary 12-17), so school
    // groups are packed per band.
    let mut primary_students: Vec<AgentId> = Vec::new();
    let mut secondary_students: Vec<AgentId> = Vec::new();
    let mut workers: Vec<AgentId> = Vec::new();
    for agent in &agents {
        if (SCHOOL_AGES.0..=SCHOOL_AGES.1).contains(&agent.age) {
            let rate = config.enrollment_rate_by_age.rate(agent.age);
            if rate > 0.0 && rng.gen_bool(rate) {
                if agent.age <= 11 {
                    primary_students.push(agent.agent_id);
                } else {
                    secondary_students.push(agent.agent_id);
                }
            }
        } else if (WORK_AGES.0..=WORK_AGES.1).contains(&agent.age) {
            let rate = config.employment_rate_by_age.rate(agent.age);
            if rate > 0.0 && rng.gen_bool(rate) {
                workers.push(agent.agent_id);
            }
        }
    }

    let mut school_sites = pack_sites(
        &mut agents,
        primary_students,
        &config.school_size_distribution,
        &mut rng,
        |agent, site| agent.school_id = Some(site),
    );
    let secondary_offset = school_sites.len() as u32;
    school_sites.extend(pack_sites(
        &mut agents,
        secondary_students,
        &config.school_size_distribution,
        &mut rng,
        |agent, site| agent.school_id = Some(secondary_offset + site),
    ));
    let work_sites = pack_sites(
        &mut agents,
        workers,
        &config.workplace_size_distribution,
        &mut rng,
        |agent, site| agent.workplace_id = Some(site),
    );

    // Clique layers.
    let mut home_edges = Vec::new();
    let mut household_members: Vec<Vec<AgentId>> = vec![Vec::new(); household_id as usize];
    for agent in &agents {
        household_members[agent.household_id as usize].push(agent.agent_id);
    }
    for members in &household_members {
        push_clique(&mut home_edges, members);
    }
    let mut school_edges = Vec::new();
    for members in &school_sites {
        push_clique(&mut school_edges, members);
    }
    let mut work_edges = Vec::new();
    for members in &work_sites {
        push_clique(&mut work_edges, members);
    }

    let community_edges = community_layer(
        n,
        config.community_contact_mean,
        config.community_contact_dispersion,
        &mut rng,
    )?;

    let net = LayeredContactNetwork::from_raw(
        n,
        [home_edges, school_edges, work_edges, community_edges],
    )?;
    Ok((agents, net))
}

/// Shuffle the member pool and pack it into sites with sizes drawn from the
/// distribution (last site truncated). Returns the member list per site.
fn pack_sites(
    agents: &mut [AgentRecord],
    mut pool: Vec<AgentId>,
    sizes: &SizeDistribution,
    rng: &mut SimRng,
    assign: impl Fn(&mut AgentRecord, u32),
) -> Vec<Vec<AgentId>> {
    pool.shuffle(rng);
    let mut sites = Vec::new();
    let mut cursor = 0usize;
    while cursor < pool.len() {
        let size = (sizes.sample(rng) as usize).min(pool.len() - cursor);
        let site_id = sites.len() as u32;
        let members: Vec<AgentId> = pool[cursor..cursor + size].to_vec();
        for &member in &members {
            assign(&mut agents[member as usize], site_id);
        }
        sites.push(members);
        cursor += size;
    }
    sites
}

fn push_clique(edges: &mut Vec<(AgentId, AgentId)>, members: &[AgentId]) {
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            edges.push((a.min(b), a.max(b)));
        }
    }
}

/// Maximum stub-matching repair passes before residual stubs are dropped.
const STUB_MATCHING_PASSES: usize = 100;

/// Realize a negative-binomial degree sequence (parameterized by mean and
/// dispersion, sampled as a gamma-Poisson mixture) via stub matching with
/// rejection of self-loops and duplicates.
fn community_layer(
    n_agents: u32,
    mean: f64,
    dispersion: f64,
    rng: &mut SimRng,
) -> Result<Vec<(AgentId, AgentId)>> {
    if mean <= 0.0 {
        return Ok(Vec::new());
    }
    let gamma = Gamma::new(dispersion, mean / dispersion)
        .map_err(|e| Error::config(format!("invalid community contact parameters: {e}")))?;
    let mut stubs: Vec<AgentId> = Vec::new();
    for agent in 0..n_agents {
        let rate: f64 = gamma.sample(rng);
        let degree = if rate <= f64::MIN_POSITIVE {
            0
        } else {
            Poisson::new(rate)
                .map_err(|e| Error::config(format!("invalid community degree draw: {e}")))?
                .sample(rng) as u64
        };
        let degree = degree.min((n_agents - 1) as u64);
        for _ in 0..degree {
            stubs.push(agent);
        }
    }
    if stubs.len() % 2 == 1 {
        let drop = rng.gen_range(0..stubs.len());
        stubs.swap_remove(drop);
    }

    let mut edges: Vec<(AgentId, AgentId)> = Vec::with_capacity(stubs.len() / 2);
    let mut seen: HashSet<(AgentId, AgentId)> = HashSet::with_capacity(stubs.len() / 2);
    let mut pending = stubs;
    for _ in 0..STUB_MATCHING_PASSES {
        if pending.len() < 2 {
            break;
        }
        pending.shuffle(rng);
        let mut rejected = Vec::new();
        for pair in pending.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                rejected.push(pair[0]);
                rejected.push(pair[1]);
            } else {
                edges.push((a, b));
            }
        }
        if pending.len() % 2 == 1 {
            // cannot happen (even invariant), but keep the tail just in case
            rejected.push(*pending.last().unwrap());
        }
        pending = rejected;
    }
    // Residual stubs that never found a legal partner are dropped.
    Ok(edges)
}

/// Write the agent table as delimited text with a header.
pub fn write_agent_table<W: Write>(agents: &[AgentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for agent in agents {
        w.serialize(agent).map_err(|e| Error::parse("agent table", e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_agent_table<R: Read>(reader: R) -> Result<Vec<AgentRecord>> {
    let mut out = Vec::new();
    for record in csv::Reader::from_reader(reader).deserialize() {
        let agent: AgentRecord = record.map_err(|e| Error::parse("agent table", e.to_string()))?;
        out.push(agent);
    }
    Ok(out)
}

/// A distancing-filtered view of the network: per-layer adjacency lists,
/// ready for the daily transmission pass. Always a subgraph of the source
/// network.
#[derive(Debug, Clone)]
pub struct EffectiveNetwork {
    n_agents: u32,
    adjacency: [Vec<Vec<AgentId>>; 4],
    edge_counts: [usize; 4],
}

impl EffectiveNetwork {
    /// Build from per-layer edge iterators (already filtered).
    pub fn from_layer_edges<I>(n_agents: u32, layer_edges: [I; 4]) -> Self
    where
        I: IntoIterator<Item = (AgentId, AgentId)>,
    {
        let mut adjacency: [Vec<Vec<AgentId>>; 4] = Default::default();
        let mut edge_counts = [0usize; 4];
        for (idx, edges) in layer_edges.into_iter().enumerate() {
            let mut adj = vec![Vec::new(); n_agents as usize];
            for (a, b) in edges {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
                edge_counts[idx] += 1;
            }
            adjacency[idx] = adj;
        }
        Self { n_agents, adjacency, edge_counts }
    }

    /// The unfiltered view of a generated network.
    pub fn full(net: &LayeredContactNetwork) -> Self {
        Self::from_layer_edges(
            net.n_agents(),
            Layer::ALL.map(|l| net.edges(l).to_vec()),
        )
    }

    pub fn n_agents(&self) -> u32 {
        self.n_agents
    }

    pub fn neighbors(&self, layer: Layer, agent: AgentId) -> &[AgentId] {
        &self.adjacency[layer.index()][agent as usize]
    }

    pub fn edge_count(&self, layer: Layer) -> usize {
        self.edge_counts[layer.index()]
    }

    /// Canonical edge list of one layer (for subgraph checks and tests).
    pub fn edges(&self, layer: Layer) -> Vec<(AgentId, AgentId)> {
        let mut edges = Vec::with_capacity(self.edge_counts[layer.index()]);
        for (a, neighbors) in self.adjacency[layer.index()].iter().enumerate() {
            let a = a as AgentId;
            for &b in neighbors {
                if a < b {
                    edges.push((a, b));
                }
            }
        }
        edges.sort_unstable();
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{AgeBinRow, SizeRow};

    fn flat_ages() -> AgeDistribution {
        AgeDistribution::new(vec![
            AgeBinRow { age_min: 0, age_max: 17, probability: 0.25 },
            AgeBinRow { age_min: 18, age_max: 64, probability: 0.55 },
            AgeBinRow { age_min: 65, age_max: 90, probability: 0.20 },
        ])
        .unwrap()
    }

    fn config(n: u32, seed: u64) -> PopulationConfig {
        PopulationConfig {
            n_agents: n,
            age_distribution: flat_ages(),
            employment_rate_by_age: AgeRateTable::new(vec![AgeBinRow {
                age_min: 18,
                age_max: 65,
                probability: 0.7,
            }])
            .unwrap(),
            enrollment_rate_by_age: AgeRateTable::new(vec![AgeBinRow {
                age_min: 5,
                age_max: 17,
                probability: 0.95,
            }])
            .unwrap(),
            household_size_distribution: SizeDistribution::from_pairs(&[
                (1, 0.28),
                (2, 0.35),
                (3, 0.15),
                (4, 0.13),
                (5, 0.09),
            ])
            .unwrap(),
            school_size_distribution: SizeDistribution::from_pairs(&[(15, 0.5), (25, 0.5)])
                .unwrap(),
            workplace_size_distribution: SizeDistribution::from_pairs(&[
                (2, 0.3),
                (5, 0.4),
                (10, 0.3),
            ])
            .unwrap(),
            community_contact_mean: 6.0,
            community_contact_dispersion: 0.8,
            rng_seed: seed,
        }
    }

    #[test]
    fn generates_exact_population_size() {
        let (agents, net) = generate_population(&config(2_000, 1)).unwrap();
        assert_eq!(agents.len(), 2_000);
        assert_eq!(net.n_agents(), 2_000);
        for layer in Layer::ALL {
            assert!(net.edge_count(layer) > 0, "layer {} empty", layer.name());
        }
        for agent in &agents {
            assert!(
                agent.school_id.is_none() || agent.workplace_id.is_none(),
                "agent holds both a school and a workplace"
            );
        }
    }

    #[test]
    fn degenerate_two_agent_population() {
        let mut cfg = config(2, 9);
        cfg.household_size_distribution = SizeDistribution::from_pairs(&[(2, 1.0)]).unwrap();
        cfg.employment_rate_by_age = AgeRateTable::empty();
        cfg.enrollment_rate_by_age = AgeRateTable::empty();
        cfg.community_contact_mean = 0.0;
        let (agents, net) = generate_population(&cfg).unwrap();
        assert_eq!(agents.len(), 2);
        assert_eq!(net.edges(Layer::Home), &[(0, 1)]);
        assert_eq!(net.edge_count(Layer::School), 0);
        assert_eq!(net.edge_count(Layer::Work), 0);
        assert_eq!(net.edge_count(Layer::Community), 0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = config(1, 0);
        assert!(generate_population(&cfg).is_err());
        cfg = config(100, 0);
        cfg.community_contact_dispersion = 0.0;
        assert!(generate_population(&cfg).is_err());
    }

    #[test]
    fn community_degree_mean_matches_negative_binomial() {
        // Oracle: the negative binomial has mean `community_contact_mean`;
        // the empirical mean over 100 seeds must land within +-0.5 despite
        // stub-matching losses.
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..100 {
            let mut cfg = config(1_000, seed);
            cfg.community_contact_mean = 8.0;
            let (_, net) = generate_population(&cfg).unwrap();
            let degrees = net.degrees(Layer::Community);
            total += degrees.iter().map(|&d| d as f64).sum::<f64>();
            count += degrees.len();
        }
        let mean = total / count as f64;
        assert!((mean - 8.0).abs() <= 0.5, "community mean degree {mean}");
    }

    #[test]
    fn degree_summary_trivial_and_brute_force() {
        let net = LayeredContactNetwork::from_raw(
            2,
            [vec![(0, 1)], vec![], vec![], vec![]],
        )
        .unwrap();
        let home = layer_degree_summary(&net, "home").unwrap();
        assert_eq!(home.mean, 1.0);
        assert_eq!(home.max, 1);
        let school = layer_degree_summary(&net, "school").unwrap();
        assert_eq!(school.mean, 0.0);
        assert_eq!(school.variance, 0.0);
        assert_eq!(school.max, 0);
        assert!(layer_degree_summary(&net, "bus").is_err());

        // Brute-force recount oracle on a generated network.
        let (_, net) = generate_population(&config(1_000, 5)).unwrap();
        for layer in Layer::ALL {
            let summary = degree_summary(&net, layer);
            let mut degrees = vec![0u32; 1_000];
            for &(a, b) in net.edges(layer) {
                degrees[a as usize] += 1;
                degrees[b as usize] += 1;
            }
            let mean = degrees.iter().map(|&d| d as f64).sum::<f64>() / 1_000.0;
            let var = degrees
                .iter()
                .map(|&d| (d as f64 - mean).powi(2))
                .sum::<f64>()
                / 1_000.0;
            let max = *degrees.iter().max().unwrap();
            assert!((summary.mean - mean).abs() < 1e-12);
            assert!((summary.variance - var).abs() < 1e-9);
            assert_eq!(summary.max, max);
        }
    }

    #[test]
    fn household_conservation_and_clique_property() {
        let (agents, net) = generate_population(&config(2_000, 3)).unwrap();
        // Every agent appears in exactly one household.
        let mut households: Vec<Vec<AgentId>> = Vec::new();
        for agent in &agents {
            let idx = agent.household_id as usize;
            if households.len() <= idx {
                households.resize(idx + 1, Vec::new());
            }
            households[idx].push(agent.agent_id);
        }
        let total: usize = households.iter().map(|h| h.len()).sum();
        assert_eq!(total, agents.len());

        // Clique property: any two agents sharing a site are connected in
        // the corresponding layer.
        let home: HashSet<_> = net.edges(Layer::Home).iter().copied().collect();
        for members in households.iter().filter(|m| m.len() > 1) {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    assert!(home.contains(&(a.min(b), a.max(b))));
                }
            }
        }
        let school: HashSet<_> = net.edges(Layer::School).iter().copied().collect();
        for a in &agents {
            for b in &agents {
                if a.agent_id < b.agent_id
                    && a.school_id.is_some()
                    && a.school_id == b.school_id
                {
                    assert!(school.contains(&(a.agent_id, b.agent_id)));
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let (agents_a, net_a) = generate_population(&config(1_500, 42)).unwrap();
        let (agents_b, net_b) = generate_population(&config(1_500, 42)).unwrap();
        assert_eq!(agents_a, agents_b);
        assert_eq!(net_a, net_b);

        let mut bytes_a = Vec::new();
        net_a.write_edge_list(&mut bytes_a).unwrap();
        let mut bytes_b = Vec::new();
        net_b.write_edge_list(&mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);

        let (_, net_c) = generate_population(&config(1_500, 43)).unwrap();
        assert_ne!(net_a, net_c);
    }

    #[test]
    fn edge_list_round_trip() {
        let (_, net) = generate_population(&config(800, 7)).unwrap();
        let mut bytes = Vec::new();
        net.write_edge_list(&mut bytes).unwrap();
        let parsed = LayeredContactNetwork::read_edge_list(&bytes[..], 800).unwrap();
        assert_eq!(net, parsed);
    }

    #[test]
    fn agent_table_round_trip() {
        let (agents, _) = generate_population(&config(300, 7)).unwrap();
        let mut bytes = Vec::new();
        write_agent_table(&agents, &mut bytes).unwrap();
        let parsed = read_agent_table(&bytes[..]).unwrap();
        assert_eq!(agents, parsed);
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(LayeredContactNetwork::from_raw(3, [vec![(1, 1)], vec![], vec![], vec![]]).is_err());
        assert!(LayeredContactNetwork::from_raw(
            3,
            [vec![(0, 1), (1, 0)], vec![], vec![], vec![]]
        )
        .is_err());
        assert!(LayeredContactNetwork::from_raw(2, [vec![(0, 5)], vec![], vec![], vec![]]).is_err());
    }
}
