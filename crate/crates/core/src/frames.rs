//! Operation frames, the happens-strictly-before order, and schedule
//! validation.
//!
//! A frame is a batch of at most `cap` transplants performed together. The
//! precedence relation between frames forms a DAG; `u` happens strictly
//! before `v` when the DAG has a path from `u` to `v`.
//!
//! Club safety is checked with inclusive counting: at frame `t` a club's
//! external donations and receipts are summed over every frame strictly
//! before `t` *and* `t` itself, so give-and-receive within one frame is
//! simultaneous.

use crate::model::{DonorId, Instance, PatientId};
use crate::report::{debt_bound_holds, ValidationReport, Violation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameId(pub u32);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("precedence contains a cycle")]
    Cycle,
    #[error("precedence references unknown frame {0}")]
    DanglingFrame(FrameId),
    #[error("frame {0} declared twice")]
    DuplicateFrame(FrameId),
    #[error("frame {0} must have cap >= 1")]
    InvalidCap(FrameId),
    #[error("frame {0} must have a positive finite discount")]
    InvalidDiscount(FrameId),
    #[error("unknown frame {0}")]
    UnknownFrame(FrameId),
}

fn default_discount() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: FrameId,
    pub cap: u32,
    #[serde(default = "default_discount")]
    pub discount: f64,
}

impl Frame {
    pub fn new(id: u32, cap: u32) -> Self {
        Frame {
            id: FrameId(id),
            cap,
            discount: 1.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DagFile {
    frames: Vec<Frame>,
    #[serde(default)]
    precedence: Vec<(FrameId, FrameId)>,
}

/// Frames plus an acyclic precedence relation with its transitive closure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DagFile", into = "DagFile")]
pub struct FrameDag {
    frames: Vec<Frame>,
    precedence: Vec<(FrameId, FrameId)>,
    index: HashMap<FrameId, usize>,
    succ: Vec<Vec<usize>>,
    /// `reach[u][v]` iff u happens strictly before v.
    reach: Vec<Vec<bool>>,
    topo: Vec<usize>,
}

impl TryFrom<DagFile> for FrameDag {
    type Error = FrameError;
    fn try_from(f: DagFile) -> Result<Self, FrameError> {
        build_dag(f.frames, f.precedence)
    }
}

impl From<FrameDag> for DagFile {
    fn from(d: FrameDag) -> Self {
        DagFile {
            frames: d.frames,
            precedence: d.precedence,
        }
    }
}

/// Builds a frame DAG, rejecting cycles, dangling ids and bad parameters.
pub fn build_dag(
    frames: Vec<Frame>,
    precedence: Vec<(FrameId, FrameId)>,
) -> Result<FrameDag, FrameError> {
    let mut index = HashMap::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        if index.insert(f.id, i).is_some() {
            return Err(FrameError::DuplicateFrame(f.id));
        }
        if f.cap == 0 {
            return Err(FrameError::InvalidCap(f.id));
        }
        if !(f.discount.is_finite() && f.discount > 0.0) {
            return Err(FrameError::InvalidDiscount(f.id));
        }
    }
    let n = frames.len();
    let mut succ = vec![BTreeSet::new(); n];
    for &(u, v) in &precedence {
        let ui = *index.get(&u).ok_or(FrameError::DanglingFrame(u))?;
        let vi = *index.get(&v).ok_or(FrameError::DanglingFrame(v))?;
        if ui == vi {
            return Err(FrameError::Cycle);
        }
        succ[ui].insert(vi);
    }
    let succ: Vec<Vec<usize>> = succ.into_iter().map(|s| s.into_iter().collect()).collect();

    // Kahn's algorithm, smallest index first for a stable order
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &v in s {
            indeg[v] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(u) = ready.pop_first() {
        topo.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.insert(v);
            }
        }
    }
    if topo.len() != n {
        return Err(FrameError::Cycle);
    }

    let mut reach = vec![vec![false; n]; n];
    for &u in topo.iter().rev() {
        for &v in &succ[u] {
            reach[u][v] = true;
            let (row_u, row_v) = if u < v {
                let (a, b) = reach.split_at_mut(v);
                (&mut a[u], &b[0])
            } else {
                let (a, b) = reach.split_at_mut(u);
                (&mut b[0], &a[v])
            };
            for (x, &y) in row_u.iter_mut().zip(row_v.iter()) {
                *x |= y;
            }
        }
    }

    Ok(FrameDag {
        frames,
        precedence,
        index,
        succ,
        reach,
        topo,
    })
}

/// `n` frames with ids `1..=n` chained `1 -> 2 -> ... -> n`, all with the
/// same cap. Missing discounts default to 1.
///
/// Panics if `cap == 0`, if more discounts than frames are given, or if a
/// discount is not positive.
pub fn total_order(n: usize, cap: u32, discounts: Option<&[f64]>) -> FrameDag {
    let discounts = discounts.unwrap_or(&[]);
    assert!(discounts.len() <= n, "more discounts than frames");
    let frames = (0..n)
        .map(|i| Frame {
            id: FrameId(i as u32 + 1),
            cap,
            discount: discounts.get(i).copied().unwrap_or(1.0),
        })
        .collect();
    let precedence = (1..n)
        .map(|i| (FrameId(i as u32), FrameId(i as u32 + 1)))
        .collect();
    build_dag(frames, precedence).expect("a chain of valid frames is a DAG")
}

impl FrameDag {
    pub fn empty() -> Self {
        build_dag(Vec::new(), Vec::new()).unwrap()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn precedence(&self) -> &[(FrameId, FrameId)] {
        &self.precedence
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn position(&self, id: FrameId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Strict order on frame positions.
    pub fn before(&self, u: usize, v: usize) -> bool {
        self.reach[u][v]
    }

    /// Positions of `t` and every frame strictly before it.
    pub fn down_set(&self, t: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&u| u == t || self.reach[u][t])
            .collect()
    }

    /// Frame positions in a fixed topological order.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// True iff every pair of distinct frames is comparable.
    pub fn is_total_order(&self) -> bool {
        let n = self.len();
        (0..n).all(|u| (u + 1..n).all(|v| self.reach[u][v] || self.reach[v][u]))
    }

    pub fn strictly_before(&self, u: FrameId, v: FrameId) -> Result<bool, FrameError> {
        let ui = self.position(u).ok_or(FrameError::UnknownFrame(u))?;
        let vi = self.position(v).ok_or(FrameError::UnknownFrame(v))?;
        Ok(self.reach[ui][vi])
    }

    /// Every topological order of the frames, each exactly once, in
    /// lexicographic order of frame positions.
    pub fn linearizations(&self) -> Linearizations<'_> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        for s in &self.succ {
            for &v in s {
                indeg[v] += 1;
            }
        }
        Linearizations {
            dag: self,
            indeg,
            used: vec![false; n],
            prefix: Vec::with_capacity(n),
            cursor: vec![0; n + 1],
            finished: false,
        }
    }
}

pub fn strictly_before(dag: &FrameDag, u: FrameId, v: FrameId) -> Result<bool, FrameError> {
    dag.strictly_before(u, v)
}

pub fn linearizations(dag: &FrameDag) -> Linearizations<'_> {
    dag.linearizations()
}

/// Lazy enumeration of topological sorts.
pub struct Linearizations<'a> {
    dag: &'a FrameDag,
    indeg: Vec<usize>,
    used: Vec<bool>,
    prefix: Vec<usize>,
    cursor: Vec<usize>,
    finished: bool,
}

impl Linearizations<'_> {
    fn pop(&mut self) -> bool {
        match self.prefix.pop() {
            Some(u) => {
                self.used[u] = false;
                for &v in &self.dag.succ[u] {
                    self.indeg[v] += 1;
                }
                true
            }
            None => false,
        }
    }
}

impl Iterator for Linearizations<'_> {
    type Item = Vec<FrameId>;

    fn next(&mut self) -> Option<Vec<FrameId>> {
        let n = self.dag.len();
        while !self.finished {
            let depth = self.prefix.len();
            if depth == n {
                let order = self.prefix.iter().map(|&i| self.dag.frames[i].id).collect();
                if !self.pop() {
                    self.finished = true;
                }
                return Some(order);
            }
            let start = self.cursor[depth];
            match (start..n).find(|&v| !self.used[v] && self.indeg[v] == 0) {
                Some(v) => {
                    self.cursor[depth] = v + 1;
                    self.cursor[depth + 1] = 0;
                    self.used[v] = true;
                    for &w in &self.dag.succ[v] {
                        self.indeg[w] -= 1;
                    }
                    self.prefix.push(v);
                }
                None => {
                    if !self.pop() {
                        self.finished = true;
                    }
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub donor: DonorId,
    pub patient: PatientId,
    pub frame: FrameId,
}

/// Selected edges with the frame each is performed in. Edges not listed are
/// unmatched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignments: Vec<Assignment>,
    pub objective: f64,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Each club checked once per frame over the frame's down-set.
    PerFrame,
    /// Each club checked after every frame of every linearization.
    AllLinearizations,
}

/// Checks matching constraints, frame caps and club safety.
pub fn validate_schedule(
    instance: &Instance,
    dag: &FrameDag,
    schedule: &Schedule,
    mode: ValidationMode,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut resolved = Vec::with_capacity(schedule.len());
    let mut donors = HashSet::new();
    let mut patients = HashSet::new();
    let mut reused_donors = BTreeSet::new();
    let mut reused_patients = BTreeSet::new();
    for a in &schedule.assignments {
        if !donors.insert(a.donor) {
            reused_donors.insert(a.donor);
        }
        if !patients.insert(a.patient) {
            reused_patients.insert(a.patient);
        }
        let edge = instance.edge_position(a.donor, a.patient);
        let frame = dag.position(a.frame);
        if edge.is_none() {
            report.push(Violation::UnknownEdge(a.donor, a.patient));
        }
        if frame.is_none() {
            report.push(Violation::UnknownFrame(a.frame));
        }
        if let (Some(e), Some(t)) = (edge, frame) {
            resolved.push((e, t));
        }
    }
    report
        .violations
        .extend(reused_donors.into_iter().map(Violation::DonorReused));
    report
        .violations
        .extend(reused_patients.into_iter().map(Violation::PatientReused));

    let n = dag.len();
    let mut per_frame = vec![0usize; n];
    for &(_, t) in &resolved {
        per_frame[t] += 1;
    }
    for (t, &count) in per_frame.iter().enumerate() {
        let frame = &dag.frames()[t];
        if count > frame.cap as usize {
            report.push(Violation::FrameOverCap {
                frame: frame.id,
                assigned: count,
                cap: frame.cap,
            });
        }
    }

    // external donations / receipts per club per frame
    let clubs = instance.clubs().len();
    let mut gave = vec![vec![0usize; n]; clubs];
    let mut got = vec![vec![0usize; n]; clubs];
    for &(e, t) in &resolved {
        if !instance.edge_is_external(e) {
            continue;
        }
        let edge = &instance.edges()[e];
        if let Some(c) = instance.donor_club(edge.donor) {
            gave[c][t] += 1;
        }
        if let Some(c) = instance.patient_club(edge.patient) {
            got[c][t] += 1;
        }
    }

    match mode {
        ValidationMode::PerFrame => {
            for (c, club) in instance.clubs().iter().enumerate() {
                for t in 0..n {
                    let down = dag.down_set(t);
                    let donated: usize = down.iter().map(|&u| gave[c][u]).sum();
                    let received: usize = down.iter().map(|&u| got[c][u]).sum();
                    if !debt_bound_holds(donated, received, &club.alpha, &club.gamma) {
                        report.push(Violation::ClubUnsafe {
                            club: club.id,
                            frame: dag.frames()[t].id,
                            donated,
                            received,
                            order: None,
                        });
                    }
                }
            }
        }
        ValidationMode::AllLinearizations => {
            let mut flagged = HashSet::new();
            for order in dag.linearizations() {
                for (c, club) in instance.clubs().iter().enumerate() {
                    let (mut donated, mut received) = (0usize, 0usize);
                    for id in &order {
                        let t = dag.position(*id).expect("linearization yields known ids");
                        donated += gave[c][t];
                        received += got[c][t];
                        if !debt_bound_holds(donated, received, &club.alpha, &club.gamma)
                            && flagged.insert((c, t))
                        {
                            report.push(Violation::ClubUnsafe {
                                club: club.id,
                                frame: *id,
                                donated,
                                received,
                                order: Some(order.clone()),
                            });
                        }
                    }
                }
            }
        }
    }
    report
}
