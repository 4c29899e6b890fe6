//! Set-packing reduction to the uncapped clearing problem.
//!
//! Each item becomes a one-donor club with debt 1, each subset a club that
//! donates its single kidney only once all of its item patients are served,
//! feeding a patient-only club across an edge of weight `M = |U| + 1`.
//! Hence the optimum lies in `[k*M, (k*+1)M)` for the maximum number `k*`
//! of pairwise disjoint subsets.

use crate::clearing::{solve_uncapped, ClearingError};
use crate::model::{Club, Edge, Instance};
use crate::rational::{self, Rational};
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::time::Duration;

/// Largest family [`brute_force_set_packing`] accepts.
pub const BRUTE_FORCE_MAX_SUBSETS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetPackingInstance {
    pub universe: Vec<u32>,
    pub family: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("item {0} listed twice in the universe")]
    DuplicateItem(u32),
    #[error("subset {0} is empty")]
    EmptySubset(usize),
    #[error("subset {subset} contains item {item} outside the universe")]
    ForeignItem { subset: usize, item: u32 },
    #[error("subset {subset} lists item {item} twice")]
    RepeatedItem { subset: usize, item: u32 },
    #[error("family has {0} subsets, brute force supports at most {BRUTE_FORCE_MAX_SUBSETS}")]
    TooLarge(usize),
}

impl SetPackingInstance {
    pub fn new(universe: Vec<u32>, family: Vec<Vec<u32>>) -> Self {
        SetPackingInstance {
            universe,
            family,
            target: None,
        }
    }

    pub fn validate(&self) -> Result<(), GadgetError> {
        let mut items = HashSet::new();
        for &u in &self.universe {
            if !items.insert(u) {
                return Err(GadgetError::DuplicateItem(u));
            }
        }
        for (j, s) in self.family.iter().enumerate() {
            if s.is_empty() {
                return Err(GadgetError::EmptySubset(j));
            }
            let mut seen = HashSet::new();
            for &item in s {
                if !items.contains(&item) {
                    return Err(GadgetError::ForeignItem { subset: j, item });
                }
                if !seen.insert(item) {
                    return Err(GadgetError::RepeatedItem { subset: j, item });
                }
            }
        }
        Ok(())
    }

    /// Weight of each subset edge: `|U| + 1`.
    pub fn big_m(&self) -> u64 {
        self.universe.len() as u64 + 1
    }
}

/// Builds the clearing instance. Clubs, in id order: one item club per
/// universe element, then one subset club per family member, then one sink
/// club per family member. Donor and patient ids are dense from 0.
pub fn reduce_set_packing(sp: &SetPackingInstance) -> Result<Instance, GadgetError> {
    sp.validate()?;
    let m = sp.big_m() as f64;
    let items = sp.universe.len() as u32;
    let subsets = sp.family.len() as u32;
    let item_donor: HashMap<u32, u32> = sp
        .universe
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i as u32))
        .collect();

    let mut clubs = Vec::new();
    for i in 0..items {
        clubs.push(Club::ndd(i, i));
    }
    let mut edges = Vec::new();
    let mut next_patient = 0u32;
    for (j, s) in sp.family.iter().enumerate() {
        let j = j as u32;
        let donor = items + j;
        let patients: Vec<u32> = (next_patient..next_patient + s.len() as u32).collect();
        next_patient += s.len() as u32;
        for (item, &p) in s.iter().zip(&patients) {
            edges.push(Edge::new(item_donor[item], p, 1.0));
        }
        clubs.push(Club::new(
            items + j,
            [donor],
            patients,
            rational::ratio(1, s.len() as i64),
            rational::int(0),
        ));
    }
    for j in 0..subsets {
        let patient = next_patient + j;
        clubs.push(Club::new(
            items + subsets + j,
            [],
            [patient],
            rational::int(1),
            rational::int(0),
        ));
        edges.push(Edge::new(items + j, patient, m));
    }
    Ok(Instance::new(clubs, edges))
}

/// Size of the largest pairwise disjoint subfamily, by exhaustive search.
pub fn brute_force_set_packing(sp: &SetPackingInstance) -> Result<usize, GadgetError> {
    sp.validate()?;
    let n = sp.family.len();
    if n > BRUTE_FORCE_MAX_SUBSETS {
        return Err(GadgetError::TooLarge(n));
    }
    let index: HashMap<u32, usize> = sp
        .universe
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i))
        .collect();
    let masks: Vec<u128> = sp
        .family
        .iter()
        .map(|s| s.iter().fold(0u128, |m, u| m | (1u128 << (index[u] % 128))))
        .collect();
    let wide = sp.universe.len() > 128;
    let mut best = 0;
    for pick in 0u32..(1 << n) {
        let size = pick.count_ones() as usize;
        if size <= best {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|j| pick & (1 << j) != 0).collect();
        let disjoint = if wide {
            let mut seen = HashSet::new();
            chosen
                .iter()
                .all(|&j| sp.family[j].iter().all(|u| seen.insert(*u)))
        } else {
            let mut acc = 0u128;
            chosen.iter().all(|&j| {
                let ok = acc & masks[j] == 0;
                acc |= masks[j];
                ok
            })
        };
        if disjoint {
            best = size;
        }
    }
    Ok(best)
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error("solver stopped on its time limit")]
    TimedOut,
}

/// Outcome of one reduction check.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionCheck {
    pub objective: Rational,
    pub m: u64,
    /// Brute-force maximum packing size.
    pub k: usize,
    /// `floor(objective / M)`.
    pub window: u64,
}

impl ReductionCheck {
    pub fn holds(&self) -> bool {
        self.window == self.k as u64
    }
}

pub fn check_reduction(
    sp: &SetPackingInstance,
    time_limit: Duration,
) -> Result<ReductionCheck, VerifyError> {
    let instance = reduce_set_packing(sp)?;
    let k = brute_force_set_packing(sp)?;
    let matching = solve_uncapped(&instance, time_limit)?;
    if !matching.optimal {
        return Err(VerifyError::TimedOut);
    }
    let m = sp.big_m();
    let scaled = &matching.exact_objective / rational::int(m as i64);
    let window = scaled
        .numer()
        .div_floor(scaled.denom())
        .to_u64()
        .unwrap_or(u64::MAX);
    Ok(ReductionCheck {
        objective: matching.exact_objective,
        m,
        k,
        window,
    })
}

/// True iff the solved reduction lands in the window of the true packing size.
pub fn verify_reduction(
    sp: &SetPackingInstance,
    time_limit: Duration,
) -> Result<bool, VerifyError> {
    Ok(check_reduction(sp, time_limit)?.holds())
}

/// The three-subset example over seven items used in the docs and tests.
pub fn seven_item_example() -> SetPackingInstance {
    SetPackingInstance::new(
        (1..=7).collect(),
        vec![vec![1, 3, 4], vec![1, 3, 5, 7], vec![4, 6]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const LIMIT: Duration = Duration::from_secs(20);

    #[test]
    fn empty_instance() {
        let sp = SetPackingInstance::default();
        assert_eq!(reduce_set_packing(&sp).unwrap(), Instance::empty());
        assert!(verify_reduction(&sp, LIMIT).unwrap());
    }

    #[test]
    fn single_item() {
        let sp = SetPackingInstance::new(vec![1], vec![vec![1]]);
        let inst = reduce_set_packing(&sp).unwrap();
        assert_eq!(inst.clubs().len(), 3);
        let mut weights: Vec<f64> = inst.edges().iter().map(|e| e.weight).collect();
        weights.sort_by(f64::total_cmp);
        assert_eq!(weights, vec![1.0, 2.0]);
        let check = check_reduction(&sp, LIMIT).unwrap();
        assert_eq!(check.objective, int(3));
        assert!(check.holds());
    }

    #[test]
    fn seven_items_shape() {
        let inst = reduce_set_packing(&seven_item_example()).unwrap();
        assert_eq!(inst.clubs().len(), 13);
        assert_eq!(inst.edges().iter().filter(|e| e.weight == 8.0).count(), 3);
        assert_eq!(inst.edges().iter().filter(|e| e.weight == 1.0).count(), 9);
        let subset_clubs = &inst.clubs()[7..10];
        assert_eq!(subset_clubs[1].alpha, rational::ratio(1, 4));
        assert_eq!(subset_clubs[1].patients.len(), 4);
    }

    #[test]
    fn seven_items_window() {
        let sp = seven_item_example();
        assert_eq!(brute_force_set_packing(&sp).unwrap(), 2);
        let check = check_reduction(&sp, LIMIT).unwrap();
        assert_eq!((check.objective.clone(), check.m, check.k), (int(22), 8, 2));
        assert!(check.holds());
    }

    #[test]
    fn brute_force_edge_cases() {
        let disjoint = SetPackingInstance::new(vec![1, 2, 3], vec![vec![1], vec![2], vec![3]]);
        assert_eq!(brute_force_set_packing(&disjoint).unwrap(), 3);
        let same = SetPackingInstance::new(vec![1, 2], vec![vec![1, 2], vec![1, 2], vec![2, 1]]);
        assert_eq!(brute_force_set_packing(&same).unwrap(), 1);
        let big = SetPackingInstance::new(vec![1], vec![vec![1]; 21]);
        assert_eq!(
            brute_force_set_packing(&big),
            Err(GadgetError::TooLarge(21))
        );
    }

    #[test]
    fn invalid_families() {
        let foreign = SetPackingInstance::new(vec![1], vec![vec![2]]);
        assert!(matches!(
            reduce_set_packing(&foreign),
            Err(GadgetError::ForeignItem { .. })
        ));
        let empty = SetPackingInstance::new(vec![1], vec![vec![]]);
        assert_eq!(reduce_set_packing(&empty), Err(GadgetError::EmptySubset(0)));
    }

    #[test]
    fn json_shape() {
        let sp: SetPackingInstance =
            serde_json::from_str(r#"{"universe":[1,2],"family":[[1],[1,2]]}"#).unwrap();
        assert_eq!(sp.family.len(), 2);
        assert_eq!(
            serde_json::to_string(&sp).unwrap(),
            r#"{"universe":[1,2],"family":[[1],[1,2]]}"#
        );
    }
}
