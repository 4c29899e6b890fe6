//! Synthetic pools and the batch-versus-frames experiment.
//!
//! Pools follow a blood-type and sensitization model: every patient and
//! donor draws a blood type, every patient a sensitization level with a
//! crossmatch failure probability. A donor is compatible with a patient
//! when their blood types agree and the crossmatch succeeds. Pairs that are
//! compatible with themselves are redrawn. All edges have unit weight.

use crate::clearing::{
    schedule_greedy, solve_capped_with, solve_cycle_limited, CappedHints, CappedSolution,
    ClearingError, CycleLimited,
};
use crate::frames::{total_order, Assignment, FrameDag, FrameId, Schedule};
use crate::ilp::Limits;
use crate::model::{
    from_standard, Club, DonorId, Edge, Instance, ModelError, Pair, PatientId, PoolEdge,
    StandardPool,
};
use crate::picef::{solve_picef_with, CompatGraph, PicefError};
use crate::rational::{self, Rational};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BloodType {
    O,
    A,
    B,
    AB,
}

impl BloodType {
    pub const ALL: [BloodType; 4] = [BloodType::O, BloodType::A, BloodType::B, BloodType::AB];

    /// Whether a donor of this type can give to a patient of type `patient`.
    pub fn can_donate_to(self, patient: BloodType) -> bool {
        matches!(
            (self, patient),
            (BloodType::O, _)
                | (BloodType::A, BloodType::A | BloodType::AB)
                | (BloodType::B, BloodType::B | BloodType::AB)
                | (BloodType::AB, BloodType::AB)
        )
    }
}

/// A sensitization level: how often it occurs and how often a crossmatch
/// against a blood-type compatible donor fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PraLevel {
    pub probability: f64,
    pub crossmatch_failure: f64,
}

fn default_blood_types() -> [f64; 4] {
    [0.4814, 0.3373, 0.1428, 0.0385]
}

fn default_pra() -> Vec<PraLevel> {
    vec![
        PraLevel {
            probability: 0.7019,
            crossmatch_failure: 0.05,
        },
        PraLevel {
            probability: 0.2,
            crossmatch_failure: 0.45,
        },
        PraLevel {
            probability: 0.0981,
            crossmatch_failure: 0.9,
        },
    ]
}

fn default_master_size() -> usize {
    1000
}
fn default_failure() -> f64 {
    0.7
}
fn default_altruists() -> f64 {
    0.05
}
fn default_multi_donor() -> f64 {
    0.10
}
fn default_alpha() -> Rational {
    rational::int(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    #[serde(default = "default_master_size")]
    pub master_size: usize,
    /// Frequencies of O, A, B and AB.
    #[serde(default = "default_blood_types")]
    pub blood_type_frequencies: [f64; 4],
    #[serde(default = "default_pra")]
    pub pra_distribution: Vec<PraLevel>,
    #[serde(default = "default_failure")]
    pub edge_failure_rate: f64,
    #[serde(default = "default_altruists")]
    pub altruist_fraction: f64,
    #[serde(default = "default_multi_donor")]
    pub multi_donor_fraction: f64,
    #[serde(default = "default_alpha", with = "rational::serde_pq")]
    pub multi_donor_alpha: Rational,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            master_size: default_master_size(),
            blood_type_frequencies: default_blood_types(),
            pra_distribution: default_pra(),
            edge_failure_rate: default_failure(),
            altruist_fraction: default_altruists(),
            multi_donor_fraction: default_multi_donor(),
            multi_donor_alpha: default_alpha(),
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("pool of {requested} needs {needed} {kind}, master has {available}")]
    InsufficientMaster {
        requested: usize,
        kind: &'static str,
        needed: usize,
        available: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Picef(#[from] PicefError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn probability(name: &str, p: f64) -> Result<(), GenError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GenError::InvalidConfig(format!(
            "{name} = {p} is not in [0, 1]"
        )))
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        for (t, &p) in BloodType::ALL.iter().zip(&self.blood_type_frequencies) {
            probability(&format!("blood type {t:?} frequency"), p)?;
        }
        if self.blood_type_frequencies.iter().sum::<f64>() <= 0.0 {
            return Err(GenError::InvalidConfig(
                "blood type frequencies sum to zero".into(),
            ));
        }
        if self.pra_distribution.is_empty() {
            return Err(GenError::InvalidConfig("pra_distribution is empty".into()));
        }
        for level in &self.pra_distribution {
            probability("pra probability", level.probability)?;
            probability("crossmatch failure", level.crossmatch_failure)?;
        }
        if self
            .pra_distribution
            .iter()
            .map(|l| l.probability)
            .sum::<f64>()
            <= 0.0
        {
            return Err(GenError::InvalidConfig(
                "pra probabilities sum to zero".into(),
            ));
        }
        probability("edge_failure_rate", self.edge_failure_rate)?;
        probability("altruist_fraction", self.altruist_fraction)?;
        probability("multi_donor_fraction", self.multi_donor_fraction)?;
        if self.multi_donor_alpha <= Rational::from_integer(0.into()) {
            return Err(GenError::InvalidConfig(
                "multi_donor_alpha must be positive".into(),
            ));
        }
        if self.self_incompatibility() <= 0.0 {
            return Err(GenError::InvalidConfig(
                "every drawn pair would be self-compatible".into(),
            ));
        }
        Ok(())
    }

    /// Probability that a freshly drawn pair is incompatible with itself.
    pub fn self_incompatibility(&self) -> f64 {
        let blood_total: f64 = self.blood_type_frequencies.iter().sum();
        let pra_total: f64 = self.pra_distribution.iter().map(|l| l.probability).sum();
        let mut p = 0.0;
        for (d, fd) in BloodType::ALL.iter().zip(&self.blood_type_frequencies) {
            for (t, fp) in BloodType::ALL.iter().zip(&self.blood_type_frequencies) {
                for level in &self.pra_distribution {
                    let pass = if d.can_donate_to(*t) {
                        1.0 - level.crossmatch_failure
                    } else {
                        0.0
                    };
                    p += fd * fp * level.probability * (1.0 - pass);
                }
            }
        }
        p / (blood_total * blood_total * pra_total)
    }
}

/// `ceil(fraction * n)`, tolerant of representation error in the product.
fn fraction_ceil(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Attributes a pair was drawn with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub donor_type: BloodType,
    pub patient_type: BloodType,
    pub crossmatch_failure: f64,
}

/// A master pool together with the attributes it was sampled from. Pair
/// `i` owns donor `i` and patient `i`; NDD `k` is donor `pairs + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterGraph {
    pub pool: StandardPool,
    pub pair_profiles: Vec<PairProfile>,
    pub ndd_types: Vec<BloodType>,
}

impl MasterGraph {
    /// Probability that `donor_type` passes both tests against pair `j`'s patient.
    pub fn edge_probability(&self, donor_type: BloodType, j: usize) -> f64 {
        let p = &self.pair_profiles[j];
        if donor_type.can_donate_to(p.patient_type) {
            1.0 - p.crossmatch_failure
        } else {
            0.0
        }
    }

    fn donor_type(&self, v: usize) -> BloodType {
        match self.pair_profiles.get(v) {
            Some(p) => p.donor_type,
            None => self.ndd_types[v - self.pair_profiles.len()],
        }
    }
}

struct Sampler {
    blood: WeightedIndex<f64>,
    pra: WeightedIndex<f64>,
    levels: Vec<PraLevel>,
}

impl Sampler {
    fn new(config: &GenConfig) -> Self {
        Sampler {
            blood: WeightedIndex::new(config.blood_type_frequencies)
                .expect("validated frequencies"),
            pra: WeightedIndex::new(config.pra_distribution.iter().map(|l| l.probability))
                .expect("validated pra"),
            levels: config.pra_distribution.clone(),
        }
    }

    fn blood_type(&self, rng: &mut ChaCha8Rng) -> BloodType {
        BloodType::ALL[self.blood.sample(rng)]
    }

    fn compatible(
        &self,
        rng: &mut ChaCha8Rng,
        donor: BloodType,
        patient: BloodType,
        failure: f64,
    ) -> bool {
        donor.can_donate_to(patient) && !rng.gen_bool(failure)
    }

    /// Draws pairs until one is incompatible with itself.
    fn pair(&self, rng: &mut ChaCha8Rng) -> PairProfile {
        loop {
            let patient_type = self.blood_type(rng);
            let failure = self.levels[self.pra.sample(rng)].crossmatch_failure;
            let donor_type = self.blood_type(rng);
            if !self.compatible(rng, donor_type, patient_type, failure) {
                return PairProfile {
                    donor_type,
                    patient_type,
                    crossmatch_failure: failure,
                };
            }
        }
    }
}

fn rng_for(parts: &[u64]) -> ChaCha8Rng {
    // splitmix64 over the parts keeps nearby seeds far apart
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    ChaCha8Rng::seed_from_u64(h)
}

const MASTER_STREAM: u64 = 1;
const THIN_STREAM: u64 = 2;
const SAMPLE_STREAM: u64 = 3;

/// Master pool of `config.master_size` vertices, of which
/// `ceil(altruist_fraction * master_size)` are NDDs. Reproducible from
/// `config.seed`.
pub fn gen_master_graph(config: &GenConfig) -> Result<MasterGraph, GenError> {
    config.validate()?;
    let mut rng = rng_for(&[config.seed, MASTER_STREAM]);
    let sampler = Sampler::new(config);
    let n = config.master_size;
    let ndds = fraction_ceil(config.altruist_fraction, n).min(n);
    let pairs = n - ndds;
    let pair_profiles: Vec<PairProfile> = (0..pairs).map(|_| sampler.pair(&mut rng)).collect();
    let ndd_types: Vec<BloodType> = (0..ndds).map(|_| sampler.blood_type(&mut rng)).collect();
    let mut master = MasterGraph {
        pool: StandardPool {
            pairs: (0..pairs as u32)
                .map(|i| Pair {
                    donor: DonorId(i),
                    patient: PatientId(i),
                })
                .collect(),
            ndds: (pairs as u32..n as u32).map(DonorId).collect(),
            edges: Vec::new(),
        },
        pair_profiles,
        ndd_types,
    };
    let mut edges = Vec::new();
    for u in 0..n {
        let donor_type = master.donor_type(u);
        for (j, profile) in master.pair_profiles.iter().enumerate() {
            if j != u
                && sampler.compatible(
                    &mut rng,
                    donor_type,
                    profile.patient_type,
                    profile.crossmatch_failure,
                )
            {
                edges.push(PoolEdge {
                    from: DonorId(u as u32),
                    to: PatientId(j as u32),
                    weight: 1.0,
                });
            }
        }
    }
    master.pool.edges = edges;
    Ok(master)
}

/// Keeps each edge independently with probability `1 - rate`.
pub fn thin_edges(pool: &StandardPool, rate: f64, seed: u64) -> StandardPool {
    assert!((0.0..=1.0).contains(&rate), "rate must be in [0, 1]");
    let mut rng = rng_for(&[seed, THIN_STREAM]);
    StandardPool {
        edges: pool
            .edges
            .iter()
            .copied()
            .filter(|_| !rng.gen_bool(rate))
            .collect(),
        ..pool.clone()
    }
}

/// One sampled pool: the classic single-donor view and the club instance
/// in which some pairs bring a second donor.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSample {
    pub standard: StandardPool,
    pub instance: Instance,
    /// Clubs that received a second donor.
    pub multi_donor_clubs: usize,
}

/// Samples NDDs and pairs from a master whose edges are already thinned.
/// Two-donor clubs get an extra donor with a fresh blood type whose edges
/// are drawn and thinned like the master's; their alpha is
/// `multi_donor_alpha`. An extra donor's id is `master_size + ` its pair's
/// donor id.
pub fn sample_pool_with(
    master: &MasterGraph,
    pool_size: usize,
    config: &GenConfig,
    seed: u64,
) -> Result<PoolSample, GenError> {
    config.validate()?;
    let ndd_count = fraction_ceil(config.altruist_fraction, pool_size).min(pool_size);
    let pair_count = pool_size - ndd_count;
    let available_ndds = master.pool.ndds.len();
    let available_pairs = master.pool.pairs.len();
    if ndd_count > available_ndds {
        return Err(GenError::InsufficientMaster {
            requested: pool_size,
            kind: "NDDs",
            needed: ndd_count,
            available: available_ndds,
        });
    }
    if pair_count > available_pairs {
        return Err(GenError::InsufficientMaster {
            requested: pool_size,
            kind: "pairs",
            needed: pair_count,
            available: available_pairs,
        });
    }
    let mut rng = rng_for(&[config.seed, SAMPLE_STREAM, pool_size as u64, seed]);
    let mut pair_idx = rand::seq::index::sample(&mut rng, available_pairs, pair_count).into_vec();
    pair_idx.sort_unstable();
    let mut ndd_idx = rand::seq::index::sample(&mut rng, available_ndds, ndd_count).into_vec();
    ndd_idx.sort_unstable();

    let pairs: Vec<Pair> = pair_idx.iter().map(|&i| master.pool.pairs[i]).collect();
    let ndds: Vec<DonorId> = ndd_idx.iter().map(|&k| master.pool.ndds[k]).collect();
    let donors: std::collections::HashSet<DonorId> = pairs
        .iter()
        .map(|p| p.donor)
        .chain(ndds.iter().copied())
        .collect();
    let patients: std::collections::HashSet<PatientId> = pairs.iter().map(|p| p.patient).collect();
    let edges: Vec<PoolEdge> = master
        .pool
        .edges
        .iter()
        .copied()
        .filter(|e| donors.contains(&e.from) && patients.contains(&e.to))
        .collect();
    let standard = StandardPool { pairs, ndds, edges };

    let multi =
        ((config.multi_donor_fraction * pair_count as f64).round() as usize).min(pair_count);
    let mut chosen = rand::seq::index::sample(&mut rng, pair_count, multi).into_vec();
    chosen.sort_unstable();

    let base = from_standard(&standard)?;
    let mut clubs: Vec<Club> = base.clubs().to_vec();
    let mut extra_edges: Vec<Edge> = Vec::new();
    let sampler = Sampler::new(config);
    let offset = master.pool.num_vertices() as u32;
    for &slot in &chosen {
        let pair = standard.pairs[slot];
        let extra = DonorId(offset + pair.donor.0);
        let donor_type = sampler.blood_type(&mut rng);
        for (other, &target) in pair_idx.iter().zip(&standard.pairs) {
            if target.patient == pair.patient {
                continue;
            }
            let profile = &master.pair_profiles[*other];
            let compatible = sampler.compatible(
                &mut rng,
                donor_type,
                profile.patient_type,
                profile.crossmatch_failure,
            );
            if compatible && !rng.gen_bool(config.edge_failure_rate) {
                extra_edges.push(Edge {
                    donor: extra,
                    patient: target.patient,
                    weight: 1.0,
                });
            }
        }
        let club = &mut clubs[ndd_idx.len() + slot];
        club.donors.push(extra);
        club.alpha = config.multi_donor_alpha.clone();
    }
    let mut edges = base.edges().to_vec();
    edges.extend(extra_edges);
    Ok(PoolSample {
        standard,
        instance: Instance::new(clubs, edges),
        multi_donor_clubs: chosen.len(),
    })
}

/// The club instance of [`sample_pool_with`].
pub fn sample_pool(
    master: &MasterGraph,
    pool_size: usize,
    config: &GenConfig,
    seed: u64,
) -> Result<Instance, GenError> {
    Ok(sample_pool_with(master, pool_size, config, seed)?.instance)
}

fn default_pool_sizes() -> Vec<usize> {
    vec![50, 100]
}
fn default_seeds() -> usize {
    20
}
fn default_cap() -> u32 {
    4
}
fn default_time_limit() -> f64 {
    600.0
}
fn default_node_limit() -> Option<u64> {
    Some(5000)
}

/// Experiment settings: the generator config plus the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub gen: GenConfig,
    #[serde(default = "default_pool_sizes")]
    pub pool_sizes: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds_per_size: usize,
    /// Cycle and chain cap of the batch arm; per-frame cap of the frame arms.
    #[serde(default = "default_cap")]
    pub cap: u32,
    /// Frames in the frame arms. Unset means enough frames that no optimal
    /// plan is cut short (see [`frames_needed`]).
    #[serde(default)]
    pub frames: Option<usize>,
    /// Per-solve time limit in seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit_secs: f64,
    /// Per-solve branch-and-bound node budget. Unlike the time limit it
    /// does not depend on machine speed, so it keeps reruns identical.
    #[serde(default = "default_node_limit")]
    pub node_limit: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gen: GenConfig::default(),
            pool_sizes: default_pool_sizes(),
            seeds_per_size: default_seeds(),
            cap: default_cap(),
            frames: None,
            time_limit_secs: default_time_limit(),
            node_limit: default_node_limit(),
        }
    }
}

impl ExperimentConfig {
    pub fn limits(&self) -> Limits {
        Limits {
            time: Duration::from_secs_f64(self.time_limit_secs.max(0.0)),
            nodes: self.node_limit,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        self.gen.validate()?;
        if self.cap < 2 {
            return Err(GenError::InvalidConfig("cap must be at least 2".into()));
        }
        if self.frames == Some(0) {
            return Err(GenError::InvalidConfig("frames must be positive".into()));
        }
        if !self.time_limit_secs.is_finite() || self.time_limit_secs <= 0.0 {
            return Err(GenError::InvalidConfig(
                "time_limit_secs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Frames that suffice for a total order with unit weights, equal caps and
/// no discounting, when at most `max_transplants` edges can be matched.
///
/// Two adjacent frames holding at most `cap` edges together can be merged
/// without breaking any club's safety, so some optimal plan has every
/// adjacent pair of frames holding more than `cap` edges.
pub fn frames_needed(max_transplants: usize, cap: u32) -> usize {
    2 * max_transplants / (cap as usize + 1) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub pool_size: usize,
    pub seed: u64,
    pub standard_value: f64,
    pub frames_value_1don: f64,
    pub frames_value_2don: f64,
    pub improvement_1don_pct: Option<f64>,
    pub improvement_2don_pct: Option<f64>,
    /// Some solve in this row stopped on its time limit.
    pub timed_out: bool,
}

pub const CSV_HEADER: [&str; 7] = [
    "pool_size",
    "seed",
    "standard_value",
    "frames_value_1don",
    "frames_value_2don",
    "improvement_1don_pct",
    "improvement_2don_pct",
];

fn improvement(frames: f64, standard: f64) -> Option<f64> {
    (standard > 0.0).then(|| 100.0 * (frames - standard) / standard)
}

/// Places structures into frames first-fit, each frame holding at most
/// `cap` transplants.
fn pack_structures(structures: &[Vec<(DonorId, PatientId)>], cap: usize) -> Schedule {
    let mut loads: Vec<usize> = Vec::new();
    let mut assignments = Vec::new();
    for s in structures {
        let slot = match loads.iter().position(|&l| l + s.len() <= cap) {
            Some(i) => i,
            None => {
                loads.push(0);
                loads.len() - 1
            }
        };
        loads[slot] += s.len();
        assignments.extend(s.iter().map(|&(donor, patient)| Assignment {
            donor,
            patient,
            frame: FrameId(slot as u32 + 1),
        }));
    }
    Schedule {
        objective: assignments.len() as f64,
        assignments,
    }
}

/// Rounds of cycle constraints before the bound is given up as unproven.
const MAX_CUT_ROUNDS: usize = 200;

fn max_transplants(relaxed: &CycleLimited, instance: &Instance) -> usize {
    let m = &relaxed.matching;
    if m.optimal {
        return m.edges.len();
    }
    match m.upper_bound {
        Some(b) if b.is_finite() => (b + 1e-6).floor().max(0.0) as usize,
        _ => instance.edges().len(),
    }
}

/// Best of the greedy placement of the relaxed edges and `start`. The capped
/// model is never searched: the result is optimal only when it reaches the
/// proven relaxed optimum.
fn frames_arm(
    instance: &Instance,
    relaxed: &CycleLimited,
    dag: &FrameDag,
    limits: Limits,
    start: Option<&Schedule>,
) -> Result<CappedSolution, GenError> {
    let m = &relaxed.matching;
    let greedy = schedule_greedy(instance, dag, &m.edges);
    let best = match (greedy.as_ref(), start) {
        (Some(g), Some(s)) if s.objective > g.objective => Some(s),
        (Some(g), _) => Some(g),
        (None, s) => s,
    };
    Ok(solve_capped_with(
        instance,
        dag,
        Limits {
            nodes: Some(0),
            ..limits
        },
        &CappedHints {
            start: best,
            objective_bound: m.optimal.then(|| m.exact_objective.clone()),
        },
    )?)
}

/// One row of the sweep.
pub fn run_cell(
    master: &MasterGraph,
    config: &ExperimentConfig,
    pool_size: usize,
    seed: u64,
) -> Result<ExperimentRow, GenError> {
    let limits = config.limits();
    let sample = sample_pool_with(master, pool_size, &config.gen, seed)?;
    let cap = config.cap as usize;

    let graph = CompatGraph::from_pool(&sample.standard)?;
    let batch = solve_picef_with(&graph, cap, cap, limits)?;

    let single = from_standard(&sample.standard)?;
    let batch_edges: Vec<Edge> = batch
        .structures(&graph)
        .into_iter()
        .flatten()
        .map(|(d, p)| Edge::new(d.0, p.0, 1.0))
        .collect();
    let relaxed_1 = solve_cycle_limited(&single, cap, MAX_CUT_ROUNDS, limits, Some(&batch_edges))?;
    let relaxed_2 = solve_cycle_limited(
        &sample.instance,
        cap,
        MAX_CUT_ROUNDS,
        limits,
        Some(&relaxed_1.matching.edges),
    )?;
    let frames = config.frames.unwrap_or_else(|| {
        let most =
            max_transplants(&relaxed_1, &single).max(max_transplants(&relaxed_2, &sample.instance));
        frames_needed(most, config.cap).min(pool_size.max(1))
    });
    let dag = total_order(frames, config.cap, None);

    let batch_plan = pack_structures(&batch.structures(&graph), cap);
    let fits = batch_plan
        .assignments
        .iter()
        .all(|a| (a.frame.0 as usize) <= frames);
    let one = frames_arm(
        &single,
        &relaxed_1,
        &dag,
        limits,
        fits.then_some(&batch_plan),
    )?;
    let two = frames_arm(
        &sample.instance,
        &relaxed_2,
        &dag,
        limits,
        Some(&one.schedule),
    )?;
    let timed_out = !(batch.optimal
        && relaxed_1.matching.optimal
        && relaxed_2.matching.optimal
        && one.optimal
        && two.optimal);

    let standard_value = batch.objective;
    let frames_value_1don = one.schedule.objective;
    let frames_value_2don = two.schedule.objective;
    Ok(ExperimentRow {
        pool_size,
        seed,
        standard_value,
        frames_value_1don,
        frames_value_2don,
        improvement_1don_pct: improvement(frames_value_1don, standard_value),
        improvement_2don_pct: improvement(frames_value_2don, standard_value),
        timed_out,
    })
}

/// Runs every (pool size, seed) cell on the current rayon pool. The master
/// is generated and thinned once; rows come back sorted by size, then seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>, GenError> {
    config.validate()?;
    let master = gen_master_graph(&config.gen)?;
    let thinned = MasterGraph {
        pool: thin_edges(&master.pool, config.gen.edge_failure_rate, config.gen.seed),
        ..master
    };
    let mut sizes = config.pool_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let cells: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&size| (0..config.seeds_per_size as u64).map(move |seed| (size, seed)))
        .collect();
    cells
        .par_iter()
        .map(|&(size, seed)| run_cell(&thinned, config, size, seed))
        .collect()
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn format_pct(v: Option<f64>) -> String {
    v.map(|p| format!("{p:.6}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), GenError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_io)?;
    for r in rows {
        w.write_record([
            r.pool_size.to_string(),
            r.seed.to_string(),
            format_value(r.standard_value),
            format_value(r.frames_value_1don),
            format_value(r.frames_value_2don),
            format_pct(r.improvement_1don_pct),
            format_pct(r.improvement_2don_pct),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> GenError {
    GenError::Io(std::io::Error::other(e))
}

/// Mean of the defined improvement percentages.
pub fn mean_improvement(rows: &[ExperimentRow], two_donors: bool) -> Option<f64> {
    let values: Vec<f64> = rows
        .iter()
        .filter_map(|r| {
            if two_donors {
                r.improvement_2don_pct
            } else {
                r.improvement_1don_pct
            }
        })
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Exact expected edge count of a master given its drawn attributes,
/// with the matching variance of the independent edge draws.
pub fn expected_edges(master: &MasterGraph) -> (f64, f64) {
    let mut mean = 0.0;
    let mut var = 0.0;
    for u in 0..master.pool.num_vertices() {
        let t = master.donor_type(u);
        for j in 0..master.pair_profiles.len() {
            if j != u {
                let p = master.edge_probability(t, j);
                mean += p;
                var += p * (1.0 - p);
            }
        }
    }
    (mean, var)
}
