//! Random instance generators and exhaustive oracles shared by the
//! integration tests.
#![allow(dead_code)]

use clubx_core::frames::Frame;
use clubx_core::model::{Pair, PoolEdge};
use clubx_core::picef::GraphEdge;
use clubx_core::rational::{self, int, ratio};
use clubx_core::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Small rational in [-5, 5] with denominator at most 3.
fn coeff(rng: &mut impl Rng) -> Rational {
    let den = rng.gen_range(1..=3i64);
    ratio(rng.gen_range(-5 * den..=5 * den), den)
}

/// Up to 12 binaries and 10 rows, mostly sparse.
pub fn random_model(rng: &mut impl Rng) -> IlpModel {
    let n = rng.gen_range(0..=12);
    let mut model = IlpModel::new();
    for _ in 0..n {
        model.add_binary();
    }
    let objective: Vec<Rational> = (0..n).map(|_| coeff(rng)).collect();
    model.set_objective(&objective).unwrap();
    for _ in 0..rng.gen_range(0..=10) {
        let terms: Vec<(usize, Rational)> = (0..n)
            .filter_map(|j| rng.gen_bool(0.4).then(|| (j, coeff(rng))))
            .collect();
        // shift the right-hand side so most rows are slack at zero
        let (relation, shift) = match rng.gen_range(0..10) {
            0 => (Relation::Eq, 0),
            1..=3 => (Relation::Ge, -3),
            _ => (Relation::Le, 3),
        };
        model
            .add_sparse_constraint(terms, relation, coeff(rng) + int(shift))
            .unwrap();
    }
    model
}

/// Up to 4 clubs and 8 edges with mixed multipliers, debts and weights.
pub fn random_club_instance(rng: &mut impl Rng) -> Instance {
    let clubs_n = rng.gen_range(1..=4u32);
    let mut clubs = Vec::new();
    let (mut next_d, mut next_p) = (0u32, 0u32);
    for c in 0..clubs_n {
        let donors: Vec<u32> = (0..rng.gen_range(1..=2))
            .map(|_| {
                next_d += 1;
                next_d
            })
            .collect();
        let patients: Vec<u32> = (0..rng.gen_range(0..=2))
            .map(|_| {
                next_p += 1;
                next_p
            })
            .collect();
        let alpha = [ratio(1, 2), int(1), int(1), int(2)][rng.gen_range(0..4)].clone();
        let gamma = if patients.is_empty() || rng.gen_bool(0.2) {
            int(1)
        } else {
            int(0)
        };
        clubs.push(Club::new(c, donors, patients, alpha, gamma));
    }
    let mut edges = Vec::new();
    if next_p > 0 {
        for _ in 0..rng.gen_range(0..=8) {
            let d = rng.gen_range(1..=next_d);
            let p = rng.gen_range(1..=next_p);
            if edges
                .iter()
                .any(|e: &Edge| e.donor.0 == d && e.patient.0 == p)
            {
                continue;
            }
            let w = [1.0, 1.0, 2.0, 0.5, 3.0][rng.gen_range(0..5)];
            edges.push(Edge::new(d, p, w));
        }
    }
    Instance::new(clubs, edges)
}

/// Chain of up to 3 frames with caps up to 3.
pub fn random_total_order(rng: &mut impl Rng) -> FrameDag {
    total_order(rng.gen_range(1..=3), rng.gen_range(1..=3), None)
}

/// Up to `max_frames` frames with random forward precedence pairs.
pub fn random_dag(rng: &mut impl Rng, max_frames: usize) -> FrameDag {
    let n = rng.gen_range(1..=max_frames);
    let frames = (1..=n as u32)
        .map(|i| Frame::new(i, rng.gen_range(1..=3)))
        .collect();
    let mut precedence = Vec::new();
    for u in 1..=n as u32 {
        for v in u + 1..=n as u32 {
            if rng.gen_bool(0.35) {
                precedence.push((FrameId(u), FrameId(v)));
            }
        }
    }
    build_dag(frames, precedence).unwrap()
}

pub fn schedule_value(instance: &Instance, dag: &FrameDag, schedule: &Schedule) -> Rational {
    schedule
        .assignments
        .iter()
        .map(|a| {
            let e = instance.edge_position(a.donor, a.patient).unwrap();
            let w = rational::from_f64(instance.edges()[e].weight).unwrap();
            let discount = dag.frames()[dag.position(a.frame).unwrap()].discount;
            w * rational::from_f64(discount).unwrap()
        })
        .sum()
}

/// Best value over every edge -> (frame or unmatched) map that passes
/// per-frame validation, plus one optimal schedule.
pub fn brute_force_capped(instance: &Instance, dag: &FrameDag) -> (Rational, Schedule) {
    struct Walk<'a> {
        instance: &'a Instance,
        dag: &'a FrameDag,
        load: Vec<u32>,
        used_d: Vec<DonorId>,
        used_p: Vec<PatientId>,
        current: Vec<Assignment>,
        best: (Rational, Schedule),
    }
    impl Walk<'_> {
        fn go(&mut self, e: usize) {
            if e == self.instance.edges().len() {
                let s = Schedule {
                    assignments: self.current.clone(),
                    objective: 0.0,
                };
                if validate_schedule(self.instance, self.dag, &s, ValidationMode::PerFrame)
                    .is_empty()
                {
                    let v = schedule_value(self.instance, self.dag, &s);
                    if v > self.best.0 {
                        self.best = (v, s);
                    }
                }
                return;
            }
            self.go(e + 1);
            let edge = self.instance.edges()[e];
            if self.used_d.contains(&edge.donor) || self.used_p.contains(&edge.patient) {
                return;
            }
            for (t, frame) in self.dag.frames().iter().enumerate() {
                if self.load[t] == frame.cap {
                    continue;
                }
                self.load[t] += 1;
                self.used_d.push(edge.donor);
                self.used_p.push(edge.patient);
                self.current.push(Assignment {
                    donor: edge.donor,
                    patient: edge.patient,
                    frame: frame.id,
                });
                self.go(e + 1);
                self.current.pop();
                self.used_p.pop();
                self.used_d.pop();
                self.load[t] -= 1;
            }
        }
    }
    let mut walk = Walk {
        instance,
        dag,
        load: vec![0; dag.len()],
        used_d: Vec::new(),
        used_p: Vec::new(),
        current: Vec::new(),
        best: (int(0), Schedule::default()),
    };
    walk.go(0);
    walk.best
}

/// Up to `max_vertices` pairs and altruists, no self-loops, small integer
/// weights.
pub fn random_pool(rng: &mut impl Rng, max_vertices: usize) -> StandardPool {
    let n = rng.gen_range(1..=max_vertices);
    let ndds = rng.gen_range(0..=n.min(2));
    let pairs_n = n - ndds;
    let pairs: Vec<Pair> = (1..=pairs_n as u32)
        .map(|i| Pair {
            donor: DonorId(i),
            patient: PatientId(i),
        })
        .collect();
    let ndd_ids: Vec<DonorId> = (0..ndds as u32).map(|i| DonorId(100 + i)).collect();
    let density = rng.gen_range(0.15..0.5);
    let mut edges = Vec::new();
    let donors: Vec<DonorId> = pairs
        .iter()
        .map(|p| p.donor)
        .chain(ndd_ids.iter().copied())
        .collect();
    for &d in &donors {
        for p in &pairs {
            if d.0 != p.patient.0 && rng.gen_bool(density) {
                let weight = rng.gen_range(1..=3) as f64;
                edges.push(PoolEdge {
                    from: d,
                    to: p.patient,
                    weight,
                });
            }
        }
    }
    StandardPool {
        pairs,
        ndds: ndd_ids,
        edges,
    }
}

/// Graph with pairs first, then altruists; no self-loops.
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize) -> CompatGraph {
    let n = rng.gen_range(1..=max_vertices);
    let ndds = rng.gen_range(0..=n.min(2));
    let pairs = n - ndds;
    let density = rng.gen_range(0.15..0.5);
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..pairs {
            if from != to && rng.gen_bool(density) {
                edges.push(GraphEdge {
                    from,
                    to,
                    weight: rng.gen_range(1..=3) as f64,
                });
            }
        }
    }
    CompatGraph::new(pairs, ndds, edges).unwrap()
}

/// Random assignment of a random edge subset to random frames; usually
/// invalid, sometimes not.
pub fn random_schedule(rng: &mut impl Rng, instance: &Instance, dag: &FrameDag) -> Schedule {
    let assignments = instance
        .edges()
        .iter()
        .filter_map(|e| {
            rng.gen_bool(0.5).then(|| Assignment {
                donor: e.donor,
                patient: e.patient,
                frame: dag.frames()[rng.gen_range(0..dag.len())].id,
            })
        })
        .collect();
    Schedule {
        assignments,
        objective: 0.0,
    }
}
