//! Exact 0/1 integer linear programming.
//!
//! Models are stored with exact rational coefficients. [`solve`] runs a
//! best-bound branch-and-bound whose node bounds come from a floating-point
//! LP relaxation; every incumbent is checked and compared exactly. Pruning
//! keeps a small safety margin and exploits the lattice spacing of the
//! objective (the rational gcd of its coefficients): a node is discarded
//! only when its relaxation cannot reach `incumbent + spacing`.

use crate::rational::{self, Rational};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::rc::Rc;
use std::time::{Duration, Instant};

/// Largest model [`brute_force_solve`] accepts.
pub const BRUTE_FORCE_MAX_VARS: usize = 25;

const INTEGRALITY_TOL: f64 = 1e-6;
const BOUND_MARGIN: f64 = 1e-9;
/// Approximate byte budget for relaxations cached on open nodes.
const LP_CACHE_BYTES: usize = 512 << 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IlpError {
    #[error("coefficient vector has length {got}, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable index {0} out of range")]
    VarOutOfRange(usize),
    #[error("model has {0} variables, brute force supports at most {BRUTE_FORCE_MAX_VARS}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

/// A linear constraint over binary variables, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[bool]) -> Rational {
        self.terms
            .iter()
            .filter(|(j, _)| x[*j])
            .fold(Rational::zero(), |acc, (_, c)| acc + c)
    }

    pub fn is_satisfied(&self, x: &[bool]) -> bool {
        self.relation.holds(&self.lhs(x), &self.rhs)
    }
}

/// Maximize `objective . x` subject to linear constraints, `x` binary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IlpModel {
    num_vars: usize,
    constraints: Vec<Constraint>,
    objective: Vec<Rational>,
}

pub fn new_model() -> IlpModel {
    IlpModel::new()
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    /// Adds a binary variable with objective coefficient 0.
    pub fn add_binary(&mut self) -> usize {
        self.objective.push(Rational::zero());
        self.num_vars += 1;
        self.num_vars - 1
    }

    /// Adds a constraint from a dense coefficient vector.
    pub fn add_constraint(
        &mut self,
        coeffs: &[Rational],
        relation: Relation,
        rhs: Rational,
    ) -> Result<(), IlpError> {
        if coeffs.len() != self.num_vars {
            return Err(IlpError::LengthMismatch {
                expected: self.num_vars,
                got: coeffs.len(),
            });
        }
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.clone()))
            .collect();
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Adds a constraint from `(variable, coefficient)` terms. Repeated
    /// variables are merged and zero coefficients dropped.
    pub fn add_sparse_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> Result<(), IlpError> {
        let mut terms: Vec<(usize, Rational)> = terms.into_iter().collect();
        if let Some(&(j, _)) = terms.iter().find(|(j, _)| *j >= self.num_vars) {
            return Err(IlpError::VarOutOfRange(j));
        }
        terms.sort_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
        for (j, c) in terms {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.constraints.push(Constraint {
            terms: merged,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn set_objective(&mut self, coeffs: &[Rational]) -> Result<(), IlpError> {
        if coeffs.len() != self.num_vars {
            return Err(IlpError::LengthMismatch {
                expected: self.num_vars,
                got: coeffs.len(),
            });
        }
        self.objective = coeffs.to_vec();
        Ok(())
    }

    pub fn set_objective_coeff(&mut self, var: usize, coeff: Rational) -> Result<(), IlpError> {
        let slot = self
            .objective
            .get_mut(var)
            .ok_or(IlpError::VarOutOfRange(var))?;
        *slot = coeff;
        Ok(())
    }

    pub fn evaluate(&self, x: &[bool]) -> Rational {
        self.objective
            .iter()
            .zip(x)
            .filter(|(_, &on)| on)
            .fold(Rational::zero(), |acc, (c, _)| acc + c)
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        x.len() == self.num_vars && self.constraints.iter().all(|c| c.is_satisfied(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The search closed: no feasible assignment beats the incumbent.
    Optimal,
    Infeasible,
    /// The time limit expired. The incumbent (if any) is feasible and
    /// `upper_bound` bounds the true optimum.
    TimedOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub status: SolveStatus,
    /// Best assignment found; all zeros when `has_incumbent` is false.
    pub assignment: Vec<bool>,
    pub objective: Rational,
    pub has_incumbent: bool,
    /// Valid bound on the optimum; `None` when the model is infeasible.
    pub upper_bound: Option<f64>,
    /// Relaxation value at the root node.
    pub root_bound: Option<f64>,
    pub nodes: u64,
}

impl IlpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn infeasible(num_vars: usize, root_bound: Option<f64>, nodes: u64) -> Self {
        IlpSolution {
            status: SolveStatus::Infeasible,
            assignment: vec![false; num_vars],
            objective: Rational::zero(),
            has_incumbent: false,
            upper_bound: None,
            root_bound,
            nodes,
        }
    }
}

/// Integer-scaled copy of a constraint; `None` rows fall back to rationals.
struct ScaledRow {
    terms: Vec<(usize, i128)>,
    rhs: i128,
}

fn scale_to_integers(terms: &[(usize, Rational)], rhs: &Rational) -> Option<ScaledRow> {
    let mut lcm = rhs.denom().clone();
    for (_, c) in terms {
        lcm = lcm.lcm(c.denom());
    }
    let scale = |c: &Rational| -> Option<i128> {
        let v: BigInt = c.numer() * (&lcm / c.denom());
        v.to_i128()
    };
    let scaled_terms = terms
        .iter()
        .map(|(j, c)| scale(c).map(|v| (*j, v)))
        .collect::<Option<Vec<_>>>()?;
    Some(ScaledRow {
        terms: scaled_terms,
        rhs: scale(rhs)?,
    })
}

/// Exact feasibility oracle with an i128 fast path.
struct ExactChecker<'a> {
    model: &'a IlpModel,
    rows: Vec<Option<ScaledRow>>,
}

impl<'a> ExactChecker<'a> {
    fn new(model: &'a IlpModel) -> Self {
        let rows = model
            .constraints
            .iter()
            .map(|c| scale_to_integers(&c.terms, &c.rhs))
            .collect();
        ExactChecker { model, rows }
    }

    fn feasible(&self, x: &[bool]) -> bool {
        self.model
            .constraints
            .iter()
            .zip(&self.rows)
            .all(|(c, row)| match row {
                Some(row) => {
                    let mut acc: i128 = 0;
                    for &(j, v) in &row.terms {
                        if x[j] {
                            match acc.checked_add(v) {
                                Some(s) => acc = s,
                                None => return c.is_satisfied(x),
                            }
                        }
                    }
                    c.relation.holds(&acc, &row.rhs)
                }
                None => c.is_satisfied(x),
            })
    }
}

/// Exhaustive search over all `2^n` assignments. Ties keep the
/// lexicographically first assignment (variable 0 as the lowest bit).
pub fn brute_force_solve(model: &IlpModel) -> Result<IlpSolution, IlpError> {
    let n = model.num_vars;
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(IlpError::TooLarge(n));
    }
    let checker = ExactChecker::new(model);
    let obj_terms: Vec<(usize, Rational)> = model
        .objective
        .iter()
        .cloned()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let scaled_obj = scale_to_integers(&obj_terms, &Rational::zero());
    let mut x = vec![false; n];
    let mut best: Option<(Vec<bool>, Rational)> = None;
    let mut best_scaled: Option<i128> = None;
    for mask in 0u64..(1u64 << n) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = mask >> j & 1 == 1;
        }
        if !checker.feasible(&x) {
            continue;
        }
        let improved = match &scaled_obj {
            Some(row) => {
                let value: Option<i128> = row
                    .terms
                    .iter()
                    .filter(|(j, _)| x[*j])
                    .try_fold(0i128, |acc, (_, v)| acc.checked_add(*v));
                match (value, best_scaled) {
                    (Some(v), Some(b)) if v <= b => false,
                    (Some(v), _) => {
                        best_scaled = Some(v);
                        true
                    }
                    (None, _) => {
                        best_scaled = None;
                        let v = model.evaluate(&x);
                        best.as_ref().is_none_or(|(_, b)| v > *b)
                    }
                }
            }
            None => {
                let v = model.evaluate(&x);
                best.as_ref().is_none_or(|(_, b)| v > *b)
            }
        };
        if improved {
            best = Some((x.clone(), model.evaluate(&x)));
        }
    }
    Ok(match best {
        Some((assignment, objective)) => {
            let bound = rational::to_f64(&objective);
            IlpSolution {
                status: SolveStatus::Optimal,
                assignment,
                objective,
                has_incumbent: true,
                upper_bound: Some(bound),
                root_bound: None,
                nodes: 1u64 << n,
            }
        }
        None => IlpSolution::infeasible(n, None, 1u64 << n),
    })
}

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    fixes: Vec<(usize, bool)>,
    parent_lp: Option<Rc<microlp::Solution>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: highest bound, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

enum LpOutcome {
    Solved(microlp::Solution),
    Infeasible,
    Interrupted,
}

fn lp_outcome(result: Result<microlp::SolveOutcome, microlp::Error>) -> LpOutcome {
    match result {
        Ok(outcome) => match outcome.into_solution() {
            Ok(sol) => LpOutcome::Solved(sol),
            Err(_) => LpOutcome::Interrupted,
        },
        Err(microlp::Error::Infeasible) => LpOutcome::Infeasible,
        // bounded binaries cannot be unbounded; treat solver failures as
        // an unusable relaxation
        Err(_) => LpOutcome::Interrupted,
    }
}

struct Search<'a> {
    model: &'a IlpModel,
    vars: Vec<Variable>,
    checker: ExactChecker<'a>,
    spacing: Option<f64>,
    incumbent: Option<(Vec<bool>, Rational, f64)>,
    deadline: Instant,
    nodes: u64,
}

impl Search<'_> {
    /// True when no assignment under `bound` can strictly beat the incumbent.
    fn dominated(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((_, _, inc)) => match self.spacing {
                None => true,
                Some(g) => bound + BOUND_MARGIN * (1.0 + bound.abs()) < inc + g,
            },
        }
    }

    fn offer(&mut self, x: Vec<bool>) {
        if !self.checker.feasible(&x) {
            return;
        }
        let value = self.model.evaluate(&x);
        if self
            .incumbent
            .as_ref()
            .is_none_or(|(_, best, _)| value > *best)
        {
            let f = rational::to_f64(&value);
            self.incumbent = Some((x, value, f));
        }
    }
}

/// Exact branch-and-bound. Never panics on timeouts: an expired limit yields
/// [`SolveStatus::TimedOut`] with the best incumbent and a valid bound.
pub fn solve(model: &IlpModel, time_limit: Duration) -> IlpSolution {
    solve_from(model, Limits::from(time_limit), None)
}

/// Work budget for [`solve_from`]. A node budget makes the outcome
/// independent of machine speed; hitting either limit yields
/// [`SolveStatus::TimedOut`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub time: Duration,
    pub nodes: Option<u64>,
}

impl From<Duration> for Limits {
    fn from(time: Duration) -> Self {
        Limits { time, nodes: None }
    }
}

/// Like [`solve`], with a node budget and an optional starting assignment.
/// An infeasible or wrongly sized start is ignored.
pub fn solve_from(model: &IlpModel, limits: Limits, warm: Option<&[bool]>) -> IlpSolution {
    let time_limit = limits.time;
    let start = Instant::now();
    let n = model.num_vars;

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = model
        .objective
        .iter()
        .map(|c| lp.add_var(rational::to_f64(c), (0.0, 1.0)))
        .collect();
    for c in &model.constraints {
        if c.terms.is_empty() {
            if !c.relation.holds(&Rational::zero(), &c.rhs) {
                return IlpSolution::infeasible(n, None, 0);
            }
            continue;
        }
        let expr: LinearExpr = c
            .terms
            .iter()
            .map(|(j, v)| (vars[*j], rational::to_f64(v)))
            .collect();
        let op = match c.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
            Relation::Eq => ComparisonOp::Eq,
        };
        lp.add_constraint(expr, op, rational::to_f64(&c.rhs));
    }
    lp.set_time_limit(time_limit.max(Duration::from_millis(1)));

    let spacing = rational::rational_gcd(model.objective.iter()).map(|g| rational::to_f64(&g));
    let mut search = Search {
        model,
        vars,
        checker: ExactChecker::new(model),
        spacing,
        incumbent: None,
        deadline: start + time_limit,
        nodes: 0,
    };
    if let Some(x) = warm.filter(|x| x.len() == n) {
        search.offer(x.to_vec());
    }

    if n == 0 {
        search.offer(Vec::new());
        return finish(search, SolveStatus::Optimal, Some(0.0), None);
    }
    if limits.nodes == Some(0) {
        return finish(search, SolveStatus::TimedOut, None, Some(f64::INFINITY));
    }

    let root = match lp_outcome(lp.solve()) {
        LpOutcome::Solved(sol) => sol,
        LpOutcome::Infeasible => return IlpSolution::infeasible(n, None, 1),
        LpOutcome::Interrupted => {
            search.offer(vec![false; n]);
            return finish(search, SolveStatus::TimedOut, None, Some(f64::INFINITY));
        }
    };
    let root_bound = root.objective();
    let root = Rc::new(root);

    let approx_lp_bytes = 64 * (n + model.constraints.len())
        + 16 * model
            .constraints
            .iter()
            .map(|c| c.terms.len())
            .sum::<usize>();
    let cache_slots = (LP_CACHE_BYTES / approx_lp_bytes.max(1)).max(8);

    let mut heap = BinaryHeap::new();
    let mut seq = 1u64;
    heap.push(Node {
        bound: root_bound,
        depth: 0,
        seq: 0,
        fixes: Vec::new(),
        parent_lp: None,
    });

    while let Some(node) = heap.pop() {
        if search.dominated(node.bound) {
            continue;
        }
        if Instant::now() >= search.deadline || limits.nodes.is_some_and(|cap| search.nodes >= cap)
        {
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::max);
            return finish(search, SolveStatus::TimedOut, Some(root_bound), Some(open));
        }
        search.nodes += 1;

        let relaxation = if node.fixes.is_empty() {
            LpOutcome::Solved((*root).clone())
        } else {
            match &node.parent_lp {
                Some(parent) => {
                    let &(var, val) = node.fixes.last().unwrap();
                    lp_outcome(
                        (**parent)
                            .clone()
                            .fix_var(search.vars[var], val as u8 as f64),
                    )
                }
                None => replay(&root, &node.fixes, &search.vars),
            }
        };
        let sol = match relaxation {
            LpOutcome::Solved(sol) => sol,
            LpOutcome::Infeasible => continue,
            LpOutcome::Interrupted => {
                let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::max);
                return finish(search, SolveStatus::TimedOut, Some(root_bound), Some(open));
            }
        };
        let bound = sol.objective();
        if search.dominated(bound) {
            continue;
        }

        let mut fixed = vec![None; n];
        for &(j, v) in &node.fixes {
            fixed[j] = Some(v);
        }
        let values: Vec<f64> = search.vars.iter().map(|&v| sol.var_value_raw(v)).collect();

        // most fractional free variable, ties to the lowest index
        let mut branch: Option<(usize, f64)> = None;
        for (j, &v) in values.iter().enumerate() {
            if fixed[j].is_some() {
                continue;
            }
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > INTEGRALITY_TOL && branch.is_none_or(|(_, best)| frac > best) {
                branch = Some((j, frac));
            }
        }
        let branch_var = match branch {
            Some((j, _)) => j,
            None => {
                let rounded: Vec<bool> = values.iter().map(|v| *v > 0.5).collect();
                if search.checker.feasible(&rounded) {
                    search.offer(rounded);
                    continue;
                }
                // relaxation looked integral but failed the exact check
                match fixed.iter().position(Option::is_none) {
                    Some(j) => j,
                    None => continue,
                }
            }
        };

        let parent = if heap.len() < cache_slots {
            Some(Rc::new(sol))
        } else {
            None
        };
        // the 1-branch gets the older sequence number and is popped first
        for (offset, val) in [(0, true), (1, false)] {
            let mut fixes = node.fixes.clone();
            fixes.push((branch_var, val));
            heap.push(Node {
                bound,
                depth: node.depth + 1,
                seq: seq + offset,
                fixes,
                parent_lp: parent.clone(),
            });
        }
        seq += 2;
    }

    finish(search, SolveStatus::Optimal, Some(root_bound), None)
}

fn replay(root: &microlp::Solution, fixes: &[(usize, bool)], vars: &[Variable]) -> LpOutcome {
    let mut sol = root.clone();
    for &(var, val) in fixes {
        match lp_outcome(sol.fix_var(vars[var], val as u8 as f64)) {
            LpOutcome::Solved(s) => sol = s,
            other => return other,
        }
    }
    LpOutcome::Solved(sol)
}

fn finish(
    search: Search<'_>,
    status: SolveStatus,
    root_bound: Option<f64>,
    open_bound: Option<f64>,
) -> IlpSolution {
    let n = search.model.num_vars;
    let nodes = search.nodes;
    match search.incumbent {
        Some((assignment, objective, value)) => {
            let upper = match (status, open_bound) {
                (SolveStatus::TimedOut, Some(open)) => open.max(value),
                _ => value,
            };
            IlpSolution {
                status,
                assignment,
                objective,
                has_incumbent: true,
                upper_bound: Some(upper),
                root_bound,
                nodes,
            }
        }
        None if status == SolveStatus::TimedOut => IlpSolution {
            status,
            assignment: vec![false; n],
            objective: Rational::zero(),
            has_incumbent: false,
            upper_bound: open_bound.or(Some(f64::INFINITY)),
            root_bound,
            nodes,
        },
        None => IlpSolution::infeasible(n, root_bound, nodes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const LIMIT: Duration = Duration::from_secs(10);

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn new_model_is_empty() {
        let m = new_model();
        assert_eq!(m.num_vars(), 0);
        assert_eq!(m.num_constraints(), 0);
    }

    #[test]
    fn add_constraint_and_length_mismatch() {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_binary();
        m.add_constraint(&ints(&[1, 1]), Relation::Le, int(1))
            .unwrap();
        assert_eq!(m.num_constraints(), 1);
        assert_eq!(
            m.add_constraint(&ints(&[1]), Relation::Le, int(1)),
            Err(IlpError::LengthMismatch {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            m.add_sparse_constraint([(5, int(1))], Relation::Le, int(1)),
            Err(IlpError::VarOutOfRange(5))
        );
    }

    #[test]
    fn sparse_terms_are_merged() {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_binary();
        m.add_sparse_constraint(
            [(1, int(2)), (0, int(1)), (1, int(-2))],
            Relation::Le,
            int(0),
        )
        .unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(0, int(1))]);
    }

    #[test]
    fn empty_objective_is_zero() {
        let mut m = IlpModel::new();
        m.set_objective(&[]).unwrap();
        assert!(m.objective().is_empty());
        let s = solve(&m, LIMIT);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, int(0));
    }

    fn pick_one() -> IlpModel {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_binary();
        m.add_constraint(&ints(&[1, 1]), Relation::Le, int(1))
            .unwrap();
        m.set_objective(&ints(&[1, 1])).unwrap();
        m
    }

    fn three_var() -> IlpModel {
        let mut m = IlpModel::new();
        for _ in 0..3 {
            m.add_binary();
        }
        m.add_constraint(&ints(&[1, 1, 0]), Relation::Le, int(1))
            .unwrap();
        m.add_constraint(&ints(&[1, 0, 1]), Relation::Le, int(1))
            .unwrap();
        m.set_objective(&ints(&[3, 2, 2])).unwrap();
        m
    }

    #[test]
    fn single_constraint_objective_one() {
        let m = pick_one();
        assert_eq!(solve(&m, LIMIT).objective, int(1));
        assert_eq!(brute_force_solve(&m).unwrap().objective, int(1));
    }

    #[test]
    fn two_small_beat_one_large() {
        // brute force over 8 assignments: {b, c} = 4 beats {a} = 3
        let m = three_var();
        let s = solve(&m, LIMIT);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, int(4));
        assert_eq!(s.assignment, vec![false, true, true]);
        let b = brute_force_solve(&m).unwrap();
        assert_eq!(b.objective, int(4));
        assert_eq!(b.assignment, vec![false, true, true]);
        assert!(s.root_bound.unwrap() >= 4.0 - 1e-9);
    }

    #[test]
    fn forced_variable_with_negative_objective() {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_constraint(&ints(&[1]), Relation::Ge, int(1)).unwrap();
        m.set_objective(&ints(&[-1])).unwrap();
        assert_eq!(brute_force_solve(&m).unwrap().objective, int(-1));
        let s = solve(&m, LIMIT);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, int(-1));
    }

    #[test]
    fn contradiction_is_infeasible() {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_constraint(&ints(&[1]), Relation::Ge, int(1)).unwrap();
        m.add_constraint(&ints(&[1]), Relation::Le, int(0)).unwrap();
        assert_eq!(
            brute_force_solve(&m).unwrap().status,
            SolveStatus::Infeasible
        );
        assert_eq!(solve(&m, LIMIT).status, SolveStatus::Infeasible);
    }

    #[test]
    fn empty_row_contradiction_is_infeasible() {
        let mut m = IlpModel::new();
        m.add_binary();
        m.add_sparse_constraint([], Relation::Ge, int(1)).unwrap();
        assert_eq!(solve(&m, LIMIT).status, SolveStatus::Infeasible);
        assert_eq!(
            brute_force_solve(&m).unwrap().status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn brute_force_rejects_large_models() {
        let mut m = IlpModel::new();
        for _ in 0..26 {
            m.add_binary();
        }
        assert_eq!(brute_force_solve(&m), Err(IlpError::TooLarge(26)));
    }

    #[test]
    fn zero_time_limit_times_out_gracefully() {
        // a model needing branching; zero budget must not panic
        let mut m = IlpModel::new();
        for _ in 0..12 {
            m.add_binary();
        }
        m.add_constraint(&ints(&[2; 12]), Relation::Le, int(11))
            .unwrap();
        m.set_objective(&ints(&[1; 12])).unwrap();
        let s = solve(&m, Duration::ZERO);
        assert!(matches!(
            s.status,
            SolveStatus::TimedOut | SolveStatus::Optimal
        ));
        if s.status == SolveStatus::TimedOut {
            assert!(s.upper_bound.unwrap() >= 5.0 - 1e-9);
        }
        assert!(m.is_feasible(&s.assignment));
    }

    #[test]
    fn parity_requires_branching() {
        // 2*sum x <= 11 relaxes to 5.5; integer optimum is 5
        let mut m = IlpModel::new();
        for _ in 0..12 {
            m.add_binary();
        }
        m.add_constraint(&ints(&[2; 12]), Relation::Le, int(11))
            .unwrap();
        m.set_objective(&ints(&[1; 12])).unwrap();
        let s = solve(&m, LIMIT);
        assert_eq!(s.objective, int(5));
        assert!((s.root_bound.unwrap() - 5.5).abs() < 1e-9);
    }
}
