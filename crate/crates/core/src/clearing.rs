//! Clearing formulations over exchange clubs.
//!
//! * the uncapped problem: every selected transplant happens at once;
//! * the capped problem: transplants are assigned to operation frames with
//!   per-frame caps and club safety on every frame's down-set;
//! * debt updates and the limited-horizon loop built on the capped solver.

use crate::frames::{total_order, Assignment, FrameDag, FrameError, FrameId, Schedule};
use crate::ilp::{self, IlpError, IlpModel, IlpSolution, Limits, Relation, SolveStatus};
use crate::model::{exact_weight, validate_instance, Club, DonorId, Edge, Instance, PatientId};
use crate::rational::{self, Rational};
use crate::report::ValidationReport;
use num_traits::{One, Zero};
use std::collections::{HashMap, HashSet};
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum ClearingError {
    #[error("invalid instance:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("formulation reported infeasible; the empty matching should always be feasible")]
    Infeasible,
}

/// Identity of one ILP variable. Edge and frame fields are positions in
/// `Instance::edges()` and `FrameDag::frames()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKey {
    Edge(usize),
    EdgeFrame { edge: usize, frame: usize },
}

/// Bijection between variable indices and their [`VarKey`]s.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    keys: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
}

impl VarMap {
    fn push(&mut self, model: &mut IlpModel, key: VarKey) -> usize {
        let var = model.add_binary();
        debug_assert_eq!(var, self.keys.len());
        self.keys.push(key);
        self.index.insert(key, var);
        var
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, var: usize) -> VarKey {
        self.keys[var]
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, VarKey)> + '_ {
        self.keys.iter().copied().enumerate()
    }
}

/// Edge positions grouped by donor, by patient, and by club direction.
struct Incidence {
    by_donor: Vec<Vec<usize>>,
    by_patient: Vec<Vec<usize>>,
    ext_out: Vec<Vec<usize>>,
    ext_in: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(instance: &Instance) -> Self {
        let mut donor_slot = HashMap::new();
        let mut patient_slot = HashMap::new();
        for club in instance.clubs() {
            for &d in &club.donors {
                let next = donor_slot.len();
                donor_slot.entry(d).or_insert(next);
            }
            for &p in &club.patients {
                let next = patient_slot.len();
                patient_slot.entry(p).or_insert(next);
            }
        }
        let clubs = instance.clubs().len();
        let mut inc = Incidence {
            by_donor: vec![Vec::new(); donor_slot.len()],
            by_patient: vec![Vec::new(); patient_slot.len()],
            ext_out: vec![Vec::new(); clubs],
            ext_in: vec![Vec::new(); clubs],
        };
        for (e, edge) in instance.edges().iter().enumerate() {
            inc.by_donor[donor_slot[&edge.donor]].push(e);
            inc.by_patient[patient_slot[&edge.patient]].push(e);
            if instance.edge_is_external(e) {
                inc.ext_out[instance.donor_club(edge.donor).unwrap()].push(e);
                inc.ext_in[instance.patient_club(edge.patient).unwrap()].push(e);
            }
        }
        inc
    }
}

fn require_valid(instance: &Instance) -> Result<(), ClearingError> {
    let report = validate_instance(instance);
    if report.is_empty() {
        Ok(())
    } else {
        Err(ClearingError::InvalidInstance(report))
    }
}

/// One variable per edge; donor and patient capacity; per club
/// `ext_out - alpha * ext_in <= gamma`. Rows that cannot bind (no incident
/// edges, or a club with no external donations) are omitted.
pub fn build_uncapped(instance: &Instance) -> Result<(IlpModel, VarMap), ClearingError> {
    require_valid(instance)?;
    let mut model = IlpModel::new();
    let mut vars = VarMap::default();
    for e in 0..instance.edges().len() {
        let v = vars.push(&mut model, VarKey::Edge(e));
        model.set_objective_coeff(v, exact_weight(instance, e))?;
    }
    let inc = Incidence::new(instance);
    let one = Rational::one();
    for group in inc.by_donor.iter().chain(&inc.by_patient) {
        if !group.is_empty() {
            model.add_sparse_constraint(
                group.iter().map(|&e| (e, one.clone())),
                Relation::Le,
                one.clone(),
            )?;
        }
    }
    for (c, club) in instance.clubs().iter().enumerate() {
        if inc.ext_out[c].is_empty() {
            continue;
        }
        let terms = inc.ext_out[c]
            .iter()
            .map(|&e| (e, one.clone()))
            .chain(inc.ext_in[c].iter().map(|&e| (e, -club.alpha.clone())));
        model.add_sparse_constraint(terms, Relation::Le, club.gamma.clone())?;
    }
    Ok((model, vars))
}

/// A set of selected edges with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub edges: Vec<Edge>,
    pub objective: f64,
    pub exact_objective: Rational,
    /// False when the solver stopped on its time limit.
    pub optimal: bool,
    pub upper_bound: Option<f64>,
}

impl Matching {
    /// Places every edge in one frame.
    pub fn to_schedule(&self, frame: FrameId) -> Schedule {
        Schedule {
            assignments: self
                .edges
                .iter()
                .map(|e| Assignment {
                    donor: e.donor,
                    patient: e.patient,
                    frame,
                })
                .collect(),
            objective: self.objective,
        }
    }
}

fn check_status(sol: &IlpSolution) -> Result<bool, ClearingError> {
    match sol.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::TimedOut => Ok(false),
        SolveStatus::Infeasible => Err(ClearingError::Infeasible),
    }
}

pub fn solve_uncapped(
    instance: &Instance,
    time_limit: Duration,
) -> Result<Matching, ClearingError> {
    solve_uncapped_with(instance, Limits::from(time_limit))
}

pub fn solve_uncapped_with(instance: &Instance, limits: Limits) -> Result<Matching, ClearingError> {
    let (model, vars) = build_uncapped(instance)?;
    let sol = ilp::solve_from(&model, limits, None);
    let optimal = check_status(&sol)?;
    let edges = vars
        .iter()
        .filter(|(v, _)| sol.assignment[*v])
        .map(|(_, key)| match key {
            VarKey::Edge(e) => instance.edges()[e],
            VarKey::EdgeFrame { .. } => unreachable!("uncapped model has edge variables only"),
        })
        .collect();
    Ok(Matching {
        edges,
        objective: rational::to_f64(&sol.objective),
        exact_objective: sol.objective,
        optimal,
        upper_bound: sol.upper_bound,
    })
}

/// One variable per (edge, frame), frame-major. Rows:
/// donor and patient capacity across all frames; per club and frame,
/// external donations minus `alpha` times external receipts over the
/// frame's inclusive down-set at most `gamma`; per frame at most `cap`
/// edges. Objective weights are scaled by each frame's discount.
pub fn build_capped(
    instance: &Instance,
    dag: &FrameDag,
) -> Result<(IlpModel, VarMap), ClearingError> {
    require_valid(instance)?;
    let mut model = IlpModel::new();
    let mut vars = VarMap::default();
    let num_edges = instance.edges().len();
    let weights: Vec<Rational> = (0..num_edges).map(|e| exact_weight(instance, e)).collect();
    for (t, frame) in dag.frames().iter().enumerate() {
        let h = rational::from_f64(frame.discount).expect("validated discount");
        for (e, w) in weights.iter().enumerate() {
            let v = vars.push(&mut model, VarKey::EdgeFrame { edge: e, frame: t });
            model.set_objective_coeff(v, &h * w)?;
        }
    }
    let frames = dag.len();
    let var = |e: usize, t: usize| t * num_edges + e;
    let inc = Incidence::new(instance);
    let one = Rational::one();

    if frames > 0 {
        for group in inc.by_donor.iter().chain(&inc.by_patient) {
            if group.is_empty() {
                continue;
            }
            let terms = group
                .iter()
                .flat_map(|&e| (0..frames).map(move |t| (var(e, t), Rational::one())));
            model.add_sparse_constraint(terms, Relation::Le, one.clone())?;
        }
    }

    for (c, club) in instance.clubs().iter().enumerate() {
        if inc.ext_out[c].is_empty() {
            continue;
        }
        for t in 0..frames {
            let down = dag.down_set(t);
            let mut terms =
                Vec::with_capacity(down.len() * (inc.ext_out[c].len() + inc.ext_in[c].len()));
            for &tau in &down {
                terms.extend(inc.ext_out[c].iter().map(|&e| (var(e, tau), one.clone())));
                terms.extend(
                    inc.ext_in[c]
                        .iter()
                        .map(|&e| (var(e, tau), -club.alpha.clone())),
                );
            }
            model.add_sparse_constraint(terms, Relation::Le, club.gamma.clone())?;
        }
    }

    if num_edges > 0 {
        for (t, frame) in dag.frames().iter().enumerate() {
            model.add_sparse_constraint(
                (0..num_edges).map(|e| (var(e, t), one.clone())),
                Relation::Le,
                rational::int(frame.cap as i64),
            )?;
        }
    }
    Ok((model, vars))
}

/// A capped solve: the schedule plus solver metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedSolution {
    pub schedule: Schedule,
    pub exact_objective: Rational,
    pub optimal: bool,
    pub upper_bound: Option<f64>,
}

pub fn solve_capped(
    instance: &Instance,
    dag: &FrameDag,
    time_limit: Duration,
) -> Result<CappedSolution, ClearingError> {
    solve_capped_with(
        instance,
        dag,
        Limits::from(time_limit),
        &CappedHints::default(),
    )
}

/// Optional information that speeds up a capped solve.
#[derive(Debug, Clone, Default)]
pub struct CappedHints<'a> {
    /// A schedule known to be feasible; ignored if it is not.
    pub start: Option<&'a Schedule>,
    /// A value no schedule can exceed, such as the uncapped optimum.
    /// Added as an objective row, so an invalid bound cuts off optima.
    pub objective_bound: Option<Rational>,
}

pub fn solve_capped_with(
    instance: &Instance,
    dag: &FrameDag,
    limits: Limits,
    hints: &CappedHints<'_>,
) -> Result<CappedSolution, ClearingError> {
    let (mut model, vars) = build_capped(instance, dag)?;
    if let Some(bound) = &hints.objective_bound {
        let terms: Vec<(usize, Rational)> = model.objective().iter().cloned().enumerate().collect();
        model.add_sparse_constraint(terms, Relation::Le, bound.clone())?;
    }
    let start = hints
        .start
        .and_then(|s| schedule_to_assignment(instance, dag, s));
    let sol = match (&start, &hints.objective_bound) {
        // a feasible start that meets the bound needs no search
        (Some(x), Some(bound)) if model.is_feasible(x) && model.evaluate(x) >= *bound => {
            IlpSolution {
                status: SolveStatus::Optimal,
                assignment: x.clone(),
                objective: model.evaluate(x),
                has_incumbent: true,
                upper_bound: Some(rational::to_f64(bound)),
                root_bound: None,
                nodes: 0,
            }
        }
        _ => ilp::solve_from(&model, limits, start.as_deref()),
    };
    let optimal = check_status(&sol)?;
    let assignments = vars
        .iter()
        .filter(|(v, _)| sol.assignment[*v])
        .map(|(_, key)| match key {
            VarKey::EdgeFrame { edge, frame } => {
                let e = &instance.edges()[edge];
                Assignment {
                    donor: e.donor,
                    patient: e.patient,
                    frame: dag.frames()[frame].id,
                }
            }
            VarKey::Edge(_) => unreachable!("capped model has edge-frame variables only"),
        })
        .collect();
    Ok(CappedSolution {
        schedule: Schedule {
            assignments,
            objective: rational::to_f64(&sol.objective),
        },
        exact_objective: sol.objective,
        optimal,
        upper_bound: sol.upper_bound,
    })
}

/// Clubs whose external donations must wait for their single patient to
/// be served: one patient and a debt below one kidney.
fn must_receive_first(club: &Club) -> bool {
    club.patients.len() == 1 && club.gamma < Rational::one()
}

/// Directed cycles of external edges among [`must_receive_first`] clubs in
/// a patient-disjoint edge set, as lists of positions into `edges`.
fn club_cycles(instance: &Instance, edges: &[Edge]) -> Vec<Vec<usize>> {
    let clubs = instance.clubs();
    // selected external edge into each waiting club
    let mut into: HashMap<usize, usize> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        let (Some(from), Some(to)) = (
            instance.donor_club(e.donor),
            instance.patient_club(e.patient),
        ) else {
            continue;
        };
        if from != to && must_receive_first(&clubs[to]) && must_receive_first(&clubs[from]) {
            into.insert(to, i);
        }
    }
    let mut state: HashMap<usize, u8> = HashMap::new(); // 1 on the current walk, 2 finished
    let mut cycles = Vec::new();
    let mut starts: Vec<usize> = into.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        let mut walk = Vec::new();
        let mut c = start;
        let mut open = true;
        while state.get(&c).is_none() {
            state.insert(c, 1);
            walk.push(c);
            match into.get(&c) {
                Some(&i) => c = instance.donor_club(edges[i].donor).unwrap(),
                None => {
                    open = false;
                    break;
                }
            }
        }
        if open && state.get(&c) == Some(&1) {
            let at = walk.iter().position(|&w| w == c).unwrap();
            let mut cycle: Vec<usize> = walk[at..].iter().map(|w| into[w]).collect();
            cycle.sort_unstable();
            cycles.push(cycle);
        }
        for w in walk {
            state.insert(w, 2);
        }
    }
    cycles.sort();
    cycles
}

/// The uncapped optimum after forbidding long simultaneous cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleLimited {
    pub matching: Matching,
    /// Cycle constraints added before the solution stopped violating any.
    pub cuts: usize,
}

/// Solves the uncapped problem, repeatedly forbidding any selected cycle
/// of external edges longer than `max_cycle` whose clubs each have one
/// patient and a debt below one. Such a cycle can only run inside a single
/// frame, so when `max_cycle` is the largest frame cap the optimum bounds
/// the capped optimum from above. Stops after `max_rounds` rounds, leaving
/// `optimal` false.
pub fn solve_cycle_limited(
    instance: &Instance,
    max_cycle: usize,
    max_rounds: usize,
    limits: Limits,
    warm: Option<&[Edge]>,
) -> Result<CycleLimited, ClearingError> {
    let (mut model, vars) = build_uncapped(instance)?;
    debug_assert!(vars.iter().all(|(v, k)| k == VarKey::Edge(v)));
    let warm = warm.map(|w| {
        let wanted: HashSet<(DonorId, PatientId)> =
            w.iter().map(|e| (e.donor, e.patient)).collect();
        instance
            .edges()
            .iter()
            .map(|e| wanted.contains(&(e.donor, e.patient)))
            .collect::<Vec<bool>>()
    });
    let mut cuts = 0;
    let mut round = 0;
    loop {
        round += 1;
        let sol = ilp::solve_from(&model, limits, warm.as_deref());
        let optimal = check_status(&sol)?;
        let chosen: Vec<usize> = (0..sol.assignment.len())
            .filter(|&v| sol.assignment[v])
            .collect();
        let edges: Vec<Edge> = chosen.iter().map(|&e| instance.edges()[e]).collect();
        let long: Vec<Vec<usize>> = club_cycles(instance, &edges)
            .into_iter()
            .filter(|c| c.len() > max_cycle)
            .collect();
        if long.is_empty() || !optimal || round >= max_rounds.max(1) {
            // out of rounds: the last solution may still hold a long cycle
            return Ok(CycleLimited {
                matching: Matching {
                    edges,
                    objective: rational::to_f64(&sol.objective),
                    exact_objective: sol.objective,
                    optimal: optimal && long.is_empty(),
                    upper_bound: sol.upper_bound,
                },
                cuts,
            });
        }
        for cycle in long {
            let len = cycle.len() as i64;
            model.add_sparse_constraint(
                cycle.iter().map(|&i| (chosen[i], Rational::one())),
                Relation::Le,
                rational::int(len - 1),
            )?;
            cuts += 1;
        }
    }
}

/// Places a jointly feasible edge set into the frames of a total order,
/// filling frames in order up to their caps. Cycles found by the same rule
/// as in [`solve_cycle_limited`] are kept inside one frame. Returns `None`
/// if the edges do not fit or the result fails validation.
pub fn schedule_greedy(instance: &Instance, dag: &FrameDag, edges: &[Edge]) -> Option<Schedule> {
    if !dag.is_total_order() {
        return None;
    }
    let mut unit_of: Vec<Option<usize>> = vec![None; edges.len()];
    let mut units: Vec<Vec<usize>> = Vec::new();
    for cycle in club_cycles(instance, edges) {
        for &i in &cycle {
            unit_of[i] = Some(units.len());
        }
        units.push(cycle);
    }
    for i in 0..edges.len() {
        if unit_of[i].is_none() {
            unit_of[i] = Some(units.len());
            units.push(vec![i]);
        }
    }
    units.sort();
    let clubs = instance.clubs();
    let mut gave = vec![0usize; clubs.len()];
    let mut got = vec![0usize; clubs.len()];
    let mut placed = vec![false; units.len()];
    let mut left = units.len();
    let mut assignments = Vec::with_capacity(edges.len());
    let mut objective = 0.0;
    let ends = |e: &Edge| -> Option<(usize, usize)> {
        let a = instance.donor_club(e.donor)?;
        let b = instance.patient_club(e.patient)?;
        (a != b).then_some((a, b))
    };
    for &t in dag.topological_order() {
        let frame = &dag.frames()[t];
        let mut room = frame.cap as usize;
        let mut progress = true;
        while progress && left > 0 {
            progress = false;
            for (u, unit) in units.iter().enumerate() {
                if placed[u] || unit.len() > room {
                    continue;
                }
                for &i in unit {
                    if let Some((a, b)) = ends(&edges[i]) {
                        gave[a] += 1;
                        got[b] += 1;
                    }
                }
                let safe = unit.iter().all(|&i| match ends(&edges[i]) {
                    Some((a, _)) => crate::report::debt_bound_holds(
                        gave[a],
                        got[a],
                        &clubs[a].alpha,
                        &clubs[a].gamma,
                    ),
                    None => true,
                });
                if safe {
                    placed[u] = true;
                    left -= 1;
                    room -= unit.len();
                    progress = true;
                    objective += unit
                        .iter()
                        .map(|&i| frame.discount * edges[i].weight)
                        .sum::<f64>();
                    assignments.extend(unit.iter().map(|&i| Assignment {
                        donor: edges[i].donor,
                        patient: edges[i].patient,
                        frame: frame.id,
                    }));
                } else {
                    for &i in unit {
                        if let Some((a, b)) = ends(&edges[i]) {
                            gave[a] -= 1;
                            got[b] -= 1;
                        }
                    }
                }
            }
        }
    }
    if left > 0 {
        return None;
    }
    let schedule = Schedule {
        assignments,
        objective,
    };
    crate::frames::validate_schedule(
        instance,
        dag,
        &schedule,
        crate::frames::ValidationMode::PerFrame,
    )
    .is_empty()
    .then_some(schedule)
}

/// Variable values for a schedule in the capped model's frame-major layout.
fn schedule_to_assignment(
    instance: &Instance,
    dag: &FrameDag,
    schedule: &Schedule,
) -> Option<Vec<bool>> {
    let num_edges = instance.edges().len();
    let mut x = vec![false; num_edges * dag.len()];
    for a in &schedule.assignments {
        let e = instance.edge_position(a.donor, a.patient)?;
        let t = dag.position(a.frame)?;
        x[t * num_edges + e] = true;
    }
    Some(x)
}

/// Returns a copy of `instance` with each club's debt moved by the
/// schedule's external edges: `gamma + alpha * received - donated`.
pub fn update_debts(instance: &Instance, schedule: &Schedule) -> Result<Instance, ClearingError> {
    let mut donors = HashSet::new();
    let mut patients = HashSet::new();
    let clubs = instance.clubs().len();
    let mut gave = vec![0i64; clubs];
    let mut got = vec![0i64; clubs];
    for a in &schedule.assignments {
        let e = instance.edge_position(a.donor, a.patient).ok_or_else(|| {
            ClearingError::InvalidSchedule(format!("unknown edge {}->{}", a.donor, a.patient))
        })?;
        if !donors.insert(a.donor) {
            return Err(ClearingError::InvalidSchedule(format!(
                "donor {} used twice",
                a.donor
            )));
        }
        if !patients.insert(a.patient) {
            return Err(ClearingError::InvalidSchedule(format!(
                "patient {} used twice",
                a.patient
            )));
        }
        if instance.edge_is_external(e) {
            if let Some(c) = instance.donor_club(a.donor) {
                gave[c] += 1;
            }
            if let Some(c) = instance.patient_club(a.patient) {
                got[c] += 1;
            }
        }
    }
    let gammas = instance
        .clubs()
        .iter()
        .enumerate()
        .map(|(c, club)| &club.gamma + &club.alpha * rational::int(got[c]) - rational::int(gave[c]))
        .collect();
    Ok(instance.with_gammas(gammas))
}

/// Cap and discount shared by every frame the horizon loop creates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTemplate {
    pub cap: u32,
    pub discount: f64,
}

impl FrameTemplate {
    pub fn new(cap: u32) -> Self {
        FrameTemplate { cap, discount: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct HorizonResult {
    /// Assignments over global frame ids `1..=frames`; round `r` (from 0)
    /// owns ids `r * horizon + 1 ..= (r + 1) * horizon`.
    pub schedule: Schedule,
    pub final_instance: Instance,
    /// Rounds solved, including the final round that matched nothing.
    pub rounds: usize,
    /// Number of global frames spanned by rounds that matched something.
    pub frames: usize,
    /// False if any round stopped on its time limit.
    pub optimal: bool,
}

impl HorizonResult {
    /// The global total order the schedule refers to.
    pub fn frame_dag(&self, template: FrameTemplate) -> FrameDag {
        let discounts = vec![template.discount; self.frames];
        total_order(self.frames, template.cap, Some(&discounts))
    }
}

/// Drops matched donors and patients with their incident edges. Clubs left
/// with neither donors nor patients disappear.
fn remove_matched(instance: &Instance, schedule: &Schedule) -> Instance {
    let used_donors: HashSet<DonorId> = schedule.assignments.iter().map(|a| a.donor).collect();
    let used_patients: HashSet<PatientId> =
        schedule.assignments.iter().map(|a| a.patient).collect();
    let clubs: Vec<Club> = instance
        .clubs()
        .iter()
        .map(|c| Club {
            donors: c
                .donors
                .iter()
                .copied()
                .filter(|d| !used_donors.contains(d))
                .collect(),
            patients: c
                .patients
                .iter()
                .copied()
                .filter(|p| !used_patients.contains(p))
                .collect(),
            ..c.clone()
        })
        .filter(|c| !(c.donors.is_empty() && c.patients.is_empty()))
        .collect();
    let edges = instance
        .edges()
        .iter()
        .filter(|e| !used_donors.contains(&e.donor) && !used_patients.contains(&e.patient))
        .copied()
        .collect();
    Instance::new(clubs, edges)
}

/// Repeatedly solves a short total-order horizon, removes what was matched
/// and carries the resulting debts forward, until a round matches nothing
/// or `max_rounds` rounds have run. `time_limit` applies to each round.
pub fn limited_horizon(
    instance: &Instance,
    template: FrameTemplate,
    horizon: usize,
    max_rounds: usize,
    time_limit: Duration,
) -> Result<HorizonResult, ClearingError> {
    assert!(horizon >= 1, "horizon must be at least one frame");
    require_valid(instance)?;
    let discounts = vec![template.discount; horizon];
    let dag = total_order(horizon, template.cap, Some(&discounts));
    let mut current = instance.clone();
    let mut assignments = Vec::new();
    let mut objective = Rational::zero();
    let mut optimal = true;
    let mut rounds = 0;
    let mut frames = 0;
    while rounds < max_rounds {
        rounds += 1;
        let round = solve_capped(&current, &dag, time_limit)?;
        optimal &= round.optimal;
        if round.schedule.is_empty() {
            break;
        }
        let offset = frames as u32;
        assignments.extend(round.schedule.assignments.iter().map(|a| Assignment {
            frame: FrameId(a.frame.0 + offset),
            ..*a
        }));
        objective += &round.exact_objective;
        frames += horizon;
        let settled = update_debts(&current, &round.schedule)?;
        current = remove_matched(&settled, &round.schedule);
    }
    Ok(HorizonResult {
        schedule: Schedule {
            assignments,
            objective: rational::to_f64(&objective),
        },
        final_instance: current,
        rounds,
        frames,
        optimal,
    })
}
