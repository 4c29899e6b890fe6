//! Position-indexed chain-edge formulation for classic pools.
//!
//! Cycles among pairs are enumerated up to a length cap and get one
//! variable each; chain edges get one variable per admissible position, so
//! the model stays polynomial in the chain cap.

use crate::ilp::{self, IlpError, IlpModel, Limits, Relation, SolveStatus};
use crate::model::{DonorId, PatientId, StandardPool};
use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use std::collections::{HashMap, HashSet};
use std::ops::RangeInclusive;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum PicefError {
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("edge {0}->{1} enters a non-directed donor")]
    EdgeIntoNdd(usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(usize, usize),
    #[error("non-finite weight on edge {0}->{1}")]
    NonFiniteWeight(usize, usize),
    #[error("unknown edge {0}->{1}")]
    UnknownEdge(usize, usize),
    #[error("cycle cap must be at least 2, got {0}")]
    CycleCapTooSmall(usize),
    #[error("pool references unknown donor {0} or patient {1}")]
    UnknownEndpoint(DonorId, PatientId),
    #[error("pool lists donor {0} twice")]
    DuplicateDonor(DonorId),
    #[error("pool lists patient {0} twice")]
    DuplicatePatient(PatientId),
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("solver reported infeasible; the empty packing should always be feasible")]
    Infeasible,
    #[error("could not decode chains: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Directed compatibility graph. Vertices `0..num_pairs` are pairs, the
/// remaining `num_ndds` vertices are non-directed donors.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatGraph {
    num_pairs: usize,
    num_ndds: usize,
    edges: Vec<GraphEdge>,
    out: Vec<Vec<usize>>,
    index: HashMap<(usize, usize), usize>,
    donors: Vec<DonorId>,
    patients: Vec<PatientId>,
}

impl CompatGraph {
    pub fn new(
        num_pairs: usize,
        num_ndds: usize,
        edges: Vec<GraphEdge>,
    ) -> Result<Self, PicefError> {
        let n = num_pairs + num_ndds;
        let donors = (0..n).map(|v| DonorId(v as u32)).collect();
        let patients = (0..num_pairs).map(|v| PatientId(v as u32)).collect();
        Self::with_ids(num_pairs, num_ndds, edges, donors, patients)
    }

    fn with_ids(
        num_pairs: usize,
        num_ndds: usize,
        edges: Vec<GraphEdge>,
        donors: Vec<DonorId>,
        patients: Vec<PatientId>,
    ) -> Result<Self, PicefError> {
        let n = num_pairs + num_ndds;
        let mut out = vec![Vec::new(); n];
        let mut index = HashMap::new();
        for (e, edge) in edges.iter().enumerate() {
            for v in [edge.from, edge.to] {
                if v >= n {
                    return Err(PicefError::VertexOutOfRange(v));
                }
            }
            if edge.to >= num_pairs {
                return Err(PicefError::EdgeIntoNdd(edge.from, edge.to));
            }
            if edge.from == edge.to {
                return Err(PicefError::SelfLoop(edge.from));
            }
            if !edge.weight.is_finite() {
                return Err(PicefError::NonFiniteWeight(edge.from, edge.to));
            }
            if index.insert((edge.from, edge.to), e).is_some() {
                return Err(PicefError::DuplicateEdge(edge.from, edge.to));
            }
            out[edge.from].push(e);
        }
        Ok(CompatGraph {
            num_pairs,
            num_ndds,
            edges,
            out,
            index,
            donors,
            patients,
        })
    }

    /// Pairs become vertices in pool order, NDDs follow. An edge from donor
    /// `d` to patient `p` joins `d`'s vertex to the vertex of `p`'s pair.
    /// Edges from a pair's donor to its own patient are dropped.
    pub fn from_pool(pool: &StandardPool) -> Result<Self, PicefError> {
        let mut donor_vertex = HashMap::new();
        let mut patient_vertex = HashMap::new();
        let mut donors = Vec::with_capacity(pool.num_vertices());
        for (v, pair) in pool.pairs.iter().enumerate() {
            if donor_vertex.insert(pair.donor, v).is_some() {
                return Err(PicefError::DuplicateDonor(pair.donor));
            }
            if patient_vertex.insert(pair.patient, v).is_some() {
                return Err(PicefError::DuplicatePatient(pair.patient));
            }
            donors.push(pair.donor);
        }
        for (k, &d) in pool.ndds.iter().enumerate() {
            if donor_vertex.insert(d, pool.pairs.len() + k).is_some() {
                return Err(PicefError::DuplicateDonor(d));
            }
            donors.push(d);
        }
        let mut edges = Vec::with_capacity(pool.edges.len());
        for e in &pool.edges {
            let (Some(&from), Some(&to)) = (donor_vertex.get(&e.from), patient_vertex.get(&e.to))
            else {
                return Err(PicefError::UnknownEndpoint(e.from, e.to));
            };
            if from != to {
                edges.push(GraphEdge {
                    from,
                    to,
                    weight: e.weight,
                });
            }
        }
        let patients = pool.pairs.iter().map(|p| p.patient).collect();
        Self::with_ids(pool.pairs.len(), pool.ndds.len(), edges, donors, patients)
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn num_ndds(&self) -> usize {
        self.num_ndds
    }

    pub fn num_vertices(&self) -> usize {
        self.num_pairs + self.num_ndds
    }

    pub fn is_ndd(&self, v: usize) -> bool {
        v >= self.num_pairs
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        self.index.get(&(from, to)).copied()
    }

    /// Donor id behind a vertex (the vertex index itself unless built from a pool).
    pub fn donor(&self, v: usize) -> DonorId {
        self.donors[v]
    }

    /// Patient id of a pair vertex; `None` for NDDs.
    pub fn patient(&self, v: usize) -> Option<PatientId> {
        (v < self.num_pairs).then(|| self.patients[v])
    }

    fn exact_weight(&self, e: usize) -> Rational {
        rational::from_f64(self.edges[e].weight).expect("finite weight")
    }

    fn path_weight(&self, vertices: &[usize], closed: bool) -> Rational {
        let hops = if closed {
            vertices.len()
        } else {
            vertices.len().saturating_sub(1)
        };
        (0..hops)
            .map(|i| {
                let e = self.index[&(vertices[i], vertices[(i + 1) % vertices.len()])];
                self.exact_weight(e)
            })
            .fold(Rational::zero(), |acc, w| acc + w)
    }
}

/// Every simple cycle among pair vertices with at most `max_len` edges,
/// rotated so its smallest vertex comes first. Output is sorted.
pub fn enumerate_cycles(graph: &CompatGraph, max_len: usize) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; graph.num_vertices()];
    for start in 0..graph.num_pairs {
        path.push(start);
        on_path[start] = true;
        extend_cycles(graph, start, max_len, &mut path, &mut on_path, &mut cycles);
        on_path[start] = false;
        path.pop();
    }
    cycles.sort();
    cycles
}

fn extend_cycles(
    graph: &CompatGraph,
    start: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    cycles: &mut Vec<Vec<usize>>,
) {
    let v = *path.last().unwrap();
    for &e in &graph.out[v] {
        let w = graph.edges[e].to;
        if w == start {
            if path.len() >= 2 {
                cycles.push(path.clone());
            }
        } else if w > start && !on_path[w] && path.len() < max_len {
            on_path[w] = true;
            path.push(w);
            extend_cycles(graph, start, max_len, path, on_path, cycles);
            path.pop();
            on_path[w] = false;
        }
    }
}

/// Chain positions an edge may occupy: 1 from an NDD, `2..=K` from a pair.
pub fn position_index_set(
    graph: &CompatGraph,
    from: usize,
    to: usize,
    chain_cap: usize,
) -> Result<RangeInclusive<usize>, PicefError> {
    if graph.edge_index(from, to).is_none() {
        return Err(PicefError::UnknownEdge(from, to));
    }
    Ok(if graph.is_ndd(from) {
        1..=chain_cap.min(1)
    } else {
        2..=chain_cap
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PicefVar {
    /// Index into [`PicefVars::cycles`].
    Cycle(usize),
    ChainEdge {
        edge: usize,
        position: usize,
    },
}

#[derive(Debug, Clone, Default)]
pub struct PicefVars {
    keys: Vec<PicefVar>,
    pub cycles: Vec<Vec<usize>>,
}

impl PicefVars {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, var: usize) -> PicefVar {
        self.keys[var]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, PicefVar)> + '_ {
        self.keys.iter().copied().enumerate()
    }
}

fn check_caps(cycle_cap: usize) -> Result<(), PicefError> {
    if cycle_cap < 2 {
        Err(PicefError::CycleCapTooSmall(cycle_cap))
    } else {
        Ok(())
    }
}

/// Builds the formulation with cycles of at most `cycle_cap` edges and
/// chains of at most `chain_cap` edges. `chain_cap = 0` disables chains.
pub fn build_picef(
    graph: &CompatGraph,
    cycle_cap: usize,
    chain_cap: usize,
) -> Result<(IlpModel, PicefVars), PicefError> {
    check_caps(cycle_cap)?;
    let mut model = IlpModel::new();
    let mut vars = PicefVars {
        keys: Vec::new(),
        cycles: enumerate_cycles(graph, cycle_cap),
    };
    let n = graph.num_vertices();
    // (vertex, position) -> chain-edge vars
    let mut incoming: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut outgoing: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut in_cycles: Vec<Vec<usize>> = vec![Vec::new(); n];

    for (c, cycle) in vars.cycles.iter().enumerate() {
        let v = model.add_binary();
        vars.keys.push(PicefVar::Cycle(c));
        model.set_objective_coeff(v, graph.path_weight(cycle, true))?;
        for &u in cycle {
            in_cycles[u].push(v);
        }
    }
    for (e, edge) in graph.edges.iter().enumerate() {
        for k in position_index_set(graph, edge.from, edge.to, chain_cap)? {
            let v = model.add_binary();
            vars.keys.push(PicefVar::ChainEdge {
                edge: e,
                position: k,
            });
            model.set_objective_coeff(v, graph.exact_weight(e))?;
            incoming.entry((edge.to, k)).or_default().push(v);
            outgoing.entry((edge.from, k)).or_default().push(v);
        }
    }

    let one = Rational::one();
    for i in 0..graph.num_pairs {
        let mut terms: Vec<usize> = in_cycles[i].clone();
        for k in 1..=chain_cap {
            terms.extend(incoming.get(&(i, k)).into_iter().flatten());
        }
        if !terms.is_empty() {
            model.add_sparse_constraint(
                terms.into_iter().map(|v| (v, one.clone())),
                Relation::Le,
                one.clone(),
            )?;
        }
    }
    for i in graph.num_pairs..n {
        if let Some(out) = outgoing.get(&(i, 1)) {
            model.add_sparse_constraint(
                out.iter().map(|&v| (v, one.clone())),
                Relation::Le,
                one.clone(),
            )?;
        }
    }
    for i in 0..graph.num_pairs {
        for k in 1..chain_cap {
            let Some(out) = outgoing.get(&(i, k + 1)) else {
                continue;
            };
            let terms = out.iter().map(|&v| (v, one.clone())).chain(
                incoming
                    .get(&(i, k))
                    .into_iter()
                    .flatten()
                    .map(|&v| (v, -one.clone())),
            );
            model.add_sparse_constraint(terms, Relation::Le, Rational::zero())?;
        }
    }
    Ok((model, vars))
}

/// Cycles and chains as vertex sequences. A chain starts at its NDD.
#[derive(Debug, Clone, PartialEq)]
pub struct PicefSolution {
    pub cycles: Vec<Vec<usize>>,
    pub chains: Vec<Vec<usize>>,
    pub objective: f64,
    pub exact_objective: Rational,
    pub optimal: bool,
}

impl PicefSolution {
    /// Each cycle and chain as its donor-to-patient transplants.
    pub fn structures(&self, graph: &CompatGraph) -> Vec<Vec<(DonorId, PatientId)>> {
        let hop = |u: usize, v: usize| (graph.donor(u), graph.patient(v).expect("pair vertex"));
        let cycles = self.cycles.iter().map(|c| {
            (0..c.len())
                .map(|i| hop(c[i], c[(i + 1) % c.len()]))
                .collect::<Vec<_>>()
        });
        let chains = self
            .chains
            .iter()
            .map(|c| c.windows(2).map(|w| hop(w[0], w[1])).collect::<Vec<_>>());
        cycles.chain(chains).collect()
    }

    /// Number of transplants: cycle lengths plus chain edges.
    pub fn transplants(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum::<usize>()
            + self.chains.iter().map(|c| c.len() - 1).sum::<usize>()
    }
}

pub fn solve_picef(
    graph: &CompatGraph,
    cycle_cap: usize,
    chain_cap: usize,
    time_limit: Duration,
) -> Result<PicefSolution, PicefError> {
    solve_picef_with(graph, cycle_cap, chain_cap, Limits::from(time_limit))
}

pub fn solve_picef_with(
    graph: &CompatGraph,
    cycle_cap: usize,
    chain_cap: usize,
    limits: Limits,
) -> Result<PicefSolution, PicefError> {
    let (model, vars) = build_picef(graph, cycle_cap, chain_cap)?;
    let sol = ilp::solve_from(&model, limits, None);
    let optimal = match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::TimedOut => false,
        SolveStatus::Infeasible => return Err(PicefError::Infeasible),
    };
    let mut cycles = Vec::new();
    let mut next: HashMap<(usize, usize), usize> = HashMap::new();
    let mut used_edges = 0;
    for (v, key) in vars.iter() {
        if !sol.assignment[v] {
            continue;
        }
        match key {
            PicefVar::Cycle(c) => cycles.push(vars.cycles[c].clone()),
            PicefVar::ChainEdge { edge, position } => {
                let from = graph.edges[edge].from;
                if next
                    .insert((from, position), graph.edges[edge].to)
                    .is_some()
                {
                    return Err(PicefError::Decode(format!(
                        "vertex {from} has two outgoing edges at position {position}"
                    )));
                }
                used_edges += 1;
            }
        }
    }
    let mut chains = Vec::new();
    let mut walked = 0;
    for ndd in graph.num_pairs..graph.num_vertices() {
        let mut chain = vec![ndd];
        let mut at = ndd;
        let mut k = 1;
        while let Some(&to) = next.get(&(at, k)) {
            chain.push(to);
            at = to;
            k += 1;
            walked += 1;
        }
        if chain.len() > 1 {
            chains.push(chain);
        }
    }
    if walked != used_edges {
        return Err(PicefError::Decode(format!(
            "{} chain edges are not reachable from any NDD",
            used_edges - walked
        )));
    }
    let decoded = cycles
        .iter()
        .map(|c| graph.path_weight(c, true))
        .chain(chains.iter().map(|c| graph.path_weight(c, false)))
        .fold(Rational::zero(), |acc, w| acc + w);
    if decoded != sol.objective {
        return Err(PicefError::Decode(format!(
            "decoded weight {} differs from solver objective {}",
            rational::Pretty(&decoded),
            rational::Pretty(&sol.objective)
        )));
    }
    Ok(PicefSolution {
        cycles,
        chains,
        objective: rational::to_f64(&decoded),
        exact_objective: decoded,
        optimal,
    })
}

/// Value of one batch solve with cycles and chains both capped at `cap`.
pub fn standard_batch_value(
    graph: &CompatGraph,
    cap: usize,
    time_limit: Duration,
) -> Result<f64, PicefError> {
    Ok(solve_picef(graph, cap, cap, time_limit)?.objective)
}

/// Best vertex-disjoint packing of cycles (at most `cycle_cap` edges) and
/// NDD chains (at most `chain_cap` edges) by exhaustive enumeration. `None`
/// means uncapped. Meant for graphs of a dozen vertices or fewer.
pub fn brute_force_packing(
    graph: &CompatGraph,
    cycle_cap: Option<usize>,
    chain_cap: Option<usize>,
) -> Rational {
    let n = graph.num_vertices();
    assert!(n <= 20, "brute force packing supports at most 20 vertices");
    let cycle_cap = cycle_cap.unwrap_or(n);
    let chain_cap = chain_cap.unwrap_or(n);
    // (vertex mask, weight) per structure, bucketed by smallest vertex
    let mut by_min: Vec<Vec<(u32, Rational)>> = vec![Vec::new(); n];
    let mask_of = |vs: &[usize]| vs.iter().fold(0u32, |m, &v| m | (1 << v));
    if cycle_cap >= 2 {
        for c in enumerate_cycles(graph, cycle_cap) {
            by_min[c[0]].push((mask_of(&c), graph.path_weight(&c, true)));
        }
    }
    for ndd in graph.num_pairs..n {
        let mut path = vec![ndd];
        collect_chains(graph, chain_cap, &mut path, &mut |p| {
            let min = *p.iter().min().unwrap();
            by_min[min].push((mask_of(p), graph.path_weight(p, false)));
        });
    }
    let mut memo: HashMap<u32, Rational> = HashMap::new();
    best_packing(0, n, &by_min, &mut memo)
}

fn collect_chains(
    graph: &CompatGraph,
    cap: usize,
    path: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if path.len() > cap {
        return;
    }
    let v = *path.last().unwrap();
    let seen: HashSet<usize> = path.iter().copied().collect();
    for &e in &graph.out[v] {
        let w = graph.edges[e].to;
        if !seen.contains(&w) {
            path.push(w);
            emit(path);
            collect_chains(graph, cap, path, emit);
            path.pop();
        }
    }
}

fn best_packing(
    used: u32,
    n: usize,
    by_min: &[Vec<(u32, Rational)>],
    memo: &mut HashMap<u32, Rational>,
) -> Rational {
    let Some(v) = (0..n).find(|&v| used & (1 << v) == 0) else {
        return Rational::zero();
    };
    if let Some(hit) = memo.get(&used) {
        return hit.clone();
    }
    let mut best = best_packing(used | (1 << v), n, by_min, memo);
    for (mask, w) in &by_min[v] {
        if mask & used == 0 {
            let value = w + best_packing(used | mask, n, by_min, memo);
            if value > best {
                best = value;
            }
        }
    }
    memo.insert(used, best.clone());
    best
}
