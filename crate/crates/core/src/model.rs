//! Exchange clubs, compatibility edges and instances.
//!
//! A club owns a (possibly empty) set of donors and patients together with a
//! matching multiplier `alpha` and a matching debt `gamma`. A club is willing
//! to donate externally only while
//!
//! ```text
//! external donations <= gamma + alpha * external receipts
//! ```
//!
//! holds. Donations between members of the same club are unconstrained.

use crate::rational::{self, serde_pq, Rational};
use crate::report::{ValidationReport, Violation};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(DonorId, "d");
id_type!(PatientId, "p");
id_type!(ClubId, "c");

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("donor {0} appears more than once in the pool")]
    DuplicateDonor(DonorId),
    #[error("patient {0} appears more than once in the pool")]
    DuplicatePatient(PatientId),
    #[error("pool edge {0}->{1} references an unknown donor or patient")]
    UnknownEndpoint(DonorId, PatientId),
    #[error("edge {0}->{1} is not part of the instance")]
    UnknownEdge(DonorId, PatientId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Club {
    pub id: ClubId,
    pub donors: Vec<DonorId>,
    pub patients: Vec<PatientId>,
    #[serde(with = "serde_pq")]
    pub alpha: Rational,
    #[serde(with = "serde_pq")]
    pub gamma: Rational,
}

impl Club {
    pub fn new(
        id: u32,
        donors: impl IntoIterator<Item = u32>,
        patients: impl IntoIterator<Item = u32>,
        alpha: Rational,
        gamma: Rational,
    ) -> Self {
        Club {
            id: ClubId(id),
            donors: donors.into_iter().map(DonorId).collect(),
            patients: patients.into_iter().map(PatientId).collect(),
            alpha,
            gamma,
        }
    }

    /// A donor-patient pair: alpha 1, gamma 0.
    pub fn pair(id: u32, donor: u32, patient: u32) -> Self {
        Club::new(id, [donor], [patient], Rational::one(), Rational::zero())
    }

    /// A non-directed donor: no patients, gamma 1.
    pub fn ndd(id: u32, donor: u32) -> Self {
        Club::new(id, [donor], [], Rational::one(), Rational::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub donor: DonorId,
    pub patient: PatientId,
    pub weight: f64,
}

impl Edge {
    pub fn new(donor: u32, patient: u32, weight: f64) -> Self {
        Edge {
            donor: DonorId(donor),
            patient: PatientId(patient),
            weight,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    clubs: Vec<Club>,
    edges: Vec<Edge>,
}

/// Clubs plus weighted donor->patient edges, with owner indexes.
///
/// Construction never fails; use [`validate_instance`] to check the
/// disjointness and ownership invariants. When a donor or patient is listed
/// in several clubs the index records the first owner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    clubs: Vec<Club>,
    edges: Vec<Edge>,
    donor_owner: HashMap<DonorId, usize>,
    patient_owner: HashMap<PatientId, usize>,
    edge_index: HashMap<(DonorId, PatientId), usize>,
}

impl From<InstanceFile> for Instance {
    fn from(f: InstanceFile) -> Self {
        Instance::new(f.clubs, f.edges)
    }
}

impl From<Instance> for InstanceFile {
    fn from(i: Instance) -> Self {
        InstanceFile {
            clubs: i.clubs,
            edges: i.edges,
        }
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.clubs == other.clubs && self.edges == other.edges
    }
}

impl Instance {
    pub fn new(clubs: Vec<Club>, edges: Vec<Edge>) -> Self {
        let mut donor_owner = HashMap::new();
        let mut patient_owner = HashMap::new();
        for (ci, club) in clubs.iter().enumerate() {
            for &d in &club.donors {
                donor_owner.entry(d).or_insert(ci);
            }
            for &p in &club.patients {
                patient_owner.entry(p).or_insert(ci);
            }
        }
        let mut edge_index = HashMap::new();
        for (ei, e) in edges.iter().enumerate() {
            edge_index.entry((e.donor, e.patient)).or_insert(ei);
        }
        Instance {
            clubs,
            edges,
            donor_owner,
            patient_owner,
            edge_index,
        }
    }

    pub fn empty() -> Self {
        Instance::new(Vec::new(), Vec::new())
    }

    pub fn clubs(&self) -> &[Club] {
        &self.clubs
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Index of the club owning `donor`.
    pub fn donor_club(&self, donor: DonorId) -> Option<usize> {
        self.donor_owner.get(&donor).copied()
    }

    pub fn patient_club(&self, patient: PatientId) -> Option<usize> {
        self.patient_owner.get(&patient).copied()
    }

    pub fn edge_position(&self, donor: DonorId, patient: PatientId) -> Option<usize> {
        self.edge_index.get(&(donor, patient)).copied()
    }

    /// True iff edge `index` connects two different clubs. Edges with an
    /// unowned endpoint count as external.
    pub fn edge_is_external(&self, index: usize) -> bool {
        let e = &self.edges[index];
        match (self.donor_club(e.donor), self.patient_club(e.patient)) {
            (Some(a), Some(b)) => a != b,
            _ => true,
        }
    }

    /// Replaces every club's debt, keeping everything else.
    pub fn with_gammas(&self, gammas: Vec<Rational>) -> Instance {
        assert_eq!(gammas.len(), self.clubs.len());
        let clubs = self
            .clubs
            .iter()
            .zip(gammas)
            .map(|(c, gamma)| Club { gamma, ..c.clone() })
            .collect();
        Instance::new(clubs, self.edges.clone())
    }
}

/// Checks every club and instance invariant, collecting all violations.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut club_ids = HashSet::new();
    let mut seen_donors = HashSet::new();
    let mut seen_patients = HashSet::new();
    let mut shared_donors = Vec::new();
    let mut shared_patients = Vec::new();
    for club in instance.clubs() {
        if !club_ids.insert(club.id) {
            report.push(Violation::DuplicateClubId(club.id));
        }
        if !club.alpha.is_positive() {
            report.push(Violation::AlphaNotPositive(club.id));
        }
        if club.gamma.is_negative() {
            report.push(Violation::GammaNegative(club.id));
        }
        if club.donors.is_empty() && club.patients.is_empty() {
            report.push(Violation::EmptyClub(club.id));
        }
        for &d in &club.donors {
            if !seen_donors.insert(d) && !shared_donors.contains(&d) {
                shared_donors.push(d);
            }
        }
        for &p in &club.patients {
            if !seen_patients.insert(p) && !shared_patients.contains(&p) {
                shared_patients.push(p);
            }
        }
    }
    report
        .violations
        .extend(shared_donors.into_iter().map(Violation::SharedDonor));
    report
        .violations
        .extend(shared_patients.into_iter().map(Violation::SharedPatient));

    let mut seen_edges = HashSet::new();
    for e in instance.edges() {
        if !seen_edges.insert((e.donor, e.patient)) {
            report.push(Violation::DuplicateEdge(e.donor, e.patient));
        }
        if instance.donor_club(e.donor).is_none() {
            report.push(Violation::UnownedDonor(e.donor));
        }
        if instance.patient_club(e.patient).is_none() {
            report.push(Violation::UnownedPatient(e.patient));
        }
        if !e.weight.is_finite() {
            report.push(Violation::NonFiniteWeight(e.donor, e.patient));
        }
    }
    report
}

/// True iff the edge's donor and patient belong to different clubs.
pub fn is_external(instance: &Instance, edge: &Edge) -> Result<bool, ModelError> {
    let index = instance
        .edge_position(edge.donor, edge.patient)
        .ok_or(ModelError::UnknownEdge(edge.donor, edge.patient))?;
    Ok(instance.edge_is_external(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub donor: DonorId,
    pub patient: PatientId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEdge {
    pub from: DonorId,
    pub to: PatientId,
    pub weight: f64,
}

/// A classic pool of donor-patient pairs and non-directed donors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardPool {
    pub pairs: Vec<Pair>,
    pub ndds: Vec<DonorId>,
    pub edges: Vec<PoolEdge>,
}

impl StandardPool {
    pub fn num_vertices(&self) -> usize {
        self.pairs.len() + self.ndds.len()
    }
}

/// Embeds a standard pool: each NDD becomes a patient-less club with debt 1,
/// each pair a single-donor single-patient club with alpha 1 and debt 0.
/// NDD clubs come first, then pairs, with ids assigned densely from 0.
pub fn from_standard(pool: &StandardPool) -> Result<Instance, ModelError> {
    let mut donors = HashSet::new();
    let mut patients = HashSet::new();
    let mut clubs = Vec::with_capacity(pool.num_vertices());
    for &d in &pool.ndds {
        if !donors.insert(d) {
            return Err(ModelError::DuplicateDonor(d));
        }
        clubs.push(Club::ndd(clubs.len() as u32, d.0));
    }
    for pair in &pool.pairs {
        if !donors.insert(pair.donor) {
            return Err(ModelError::DuplicateDonor(pair.donor));
        }
        if !patients.insert(pair.patient) {
            return Err(ModelError::DuplicatePatient(pair.patient));
        }
        clubs.push(Club::pair(clubs.len() as u32, pair.donor.0, pair.patient.0));
    }
    let mut edges = Vec::with_capacity(pool.edges.len());
    for e in &pool.edges {
        if !donors.contains(&e.from) || !patients.contains(&e.to) {
            return Err(ModelError::UnknownEndpoint(e.from, e.to));
        }
        edges.push(Edge {
            donor: e.from,
            patient: e.to,
            weight: e.weight,
        });
    }
    Ok(Instance::new(clubs, edges))
}

/// Exact weight of edge `index`. Panics on a non-finite weight, which
/// `validate_instance` rejects.
pub(crate) fn exact_weight(instance: &Instance, index: usize) -> Rational {
    rational::from_f64(instance.edges()[index].weight).expect("finite edge weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_pairs() -> Instance {
        Instance::new(
            vec![Club::pair(0, 1, 1), Club::pair(1, 2, 2)],
            vec![Edge::new(1, 2, 1.0), Edge::new(2, 1, 1.0)],
        )
    }

    #[test]
    fn disjoint_clubs_validate() {
        assert!(validate_instance(&two_pairs()).is_empty());
    }

    #[test]
    fn shared_donor_is_reported() {
        let inst = Instance::new(
            vec![Club::pair(0, 1, 1), Club::new(1, [1], [2], int(1), int(0))],
            vec![],
        );
        let report = validate_instance(&inst);
        assert_eq!(report.violations, vec![Violation::SharedDonor(DonorId(1))]);
        assert_eq!(report.violations[0].to_string(), "shared donor d1");
    }

    #[test]
    fn negative_gamma_and_bad_alpha_are_reported() {
        let inst = Instance::new(
            vec![
                Club::new(0, [1], [1], int(1), int(-1)),
                Club::new(1, [2], [2], int(0), int(0)),
                Club::new(2, [], [], int(1), int(0)),
            ],
            vec![],
        );
        let report = validate_instance(&inst);
        assert!(report
            .violations
            .contains(&Violation::GammaNegative(ClubId(0))));
        assert!(report
            .violations
            .contains(&Violation::AlphaNotPositive(ClubId(1))));
        assert!(report.violations.contains(&Violation::EmptyClub(ClubId(2))));
        assert!(report.violations[0].to_string().contains("gamma negative"));
    }

    #[test]
    fn edge_problems_are_reported() {
        let inst = Instance::new(
            vec![Club::pair(0, 1, 1)],
            vec![
                Edge::new(1, 1, 1.0),
                Edge::new(1, 1, 2.0),
                Edge::new(9, 1, 1.0),
                Edge::new(1, 9, f64::NAN),
            ],
        );
        let v = validate_instance(&inst).violations;
        assert!(v.contains(&Violation::DuplicateEdge(DonorId(1), PatientId(1))));
        assert!(v.contains(&Violation::UnownedDonor(DonorId(9))));
        assert!(v.contains(&Violation::UnownedPatient(PatientId(9))));
        assert!(v.contains(&Violation::NonFiniteWeight(DonorId(1), PatientId(9))));
    }

    #[test]
    fn alpha_below_one_is_allowed() {
        let inst = Instance::new(vec![Club::new(0, [1], [1, 2], ratio(1, 2), int(0))], vec![]);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn empty_pool_embeds_to_empty_instance() {
        let inst = from_standard(&StandardPool::default()).unwrap();
        assert!(inst.clubs().is_empty());
        assert!(inst.edges().is_empty());
    }

    #[test]
    fn ndd_and_pair_embedding() {
        let pool = StandardPool {
            pairs: vec![Pair {
                donor: DonorId(1),
                patient: PatientId(1),
            }],
            ndds: vec![DonorId(100)],
            edges: vec![PoolEdge {
                from: DonorId(100),
                to: PatientId(1),
                weight: 1.0,
            }],
        };
        let inst = from_standard(&pool).unwrap();
        assert_eq!(inst.clubs().len(), 2);
        assert_eq!(inst.clubs()[0], Club::new(0, [100], [], int(1), int(1)));
        assert_eq!(inst.clubs()[1], Club::new(1, [1], [1], int(1), int(0)));
        assert_eq!(inst.edges().len(), 1);
        assert!(is_external(&inst, &inst.edges()[0]).unwrap());
    }

    #[test]
    fn mutual_pairs_embed_with_zero_debt() {
        let pool = StandardPool {
            pairs: vec![
                Pair {
                    donor: DonorId(1),
                    patient: PatientId(1),
                },
                Pair {
                    donor: DonorId(2),
                    patient: PatientId(2),
                },
            ],
            ndds: vec![],
            edges: vec![
                PoolEdge {
                    from: DonorId(1),
                    to: PatientId(2),
                    weight: 1.0,
                },
                PoolEdge {
                    from: DonorId(2),
                    to: PatientId(1),
                    weight: 1.0,
                },
            ],
        };
        let inst = from_standard(&pool).unwrap();
        assert_eq!(inst.clubs().len(), 2);
        assert_eq!(inst.edges().len(), 2);
        assert!(inst.clubs().iter().all(|c| c.gamma.is_zero()));
    }

    #[test]
    fn duplicate_pool_members_are_rejected() {
        let pool = StandardPool {
            pairs: vec![Pair {
                donor: DonorId(1),
                patient: PatientId(1),
            }],
            ndds: vec![DonorId(1)],
            edges: vec![],
        };
        assert_eq!(
            from_standard(&pool),
            Err(ModelError::DuplicateDonor(DonorId(1)))
        );
        let pool = StandardPool {
            pairs: vec![
                Pair {
                    donor: DonorId(1),
                    patient: PatientId(1),
                },
                Pair {
                    donor: DonorId(2),
                    patient: PatientId(1),
                },
            ],
            ..Default::default()
        };
        assert_eq!(
            from_standard(&pool),
            Err(ModelError::DuplicatePatient(PatientId(1)))
        );
    }

    #[test]
    fn intra_and_inter_club_edges() {
        let inst = Instance::new(
            vec![
                Club::new(0, [1, 2], [1], int(1), int(0)),
                Club::pair(1, 3, 3),
            ],
            vec![Edge::new(1, 1, 1.0), Edge::new(2, 3, 1.0)],
        );
        assert!(!is_external(&inst, &inst.edges()[0]).unwrap());
        assert!(is_external(&inst, &inst.edges()[1]).unwrap());
        assert_eq!(
            is_external(&inst, &Edge::new(3, 1, 1.0)),
            Err(ModelError::UnknownEdge(DonorId(3), PatientId(1)))
        );
    }

    #[test]
    fn json_round_trip_uses_pq_strings() {
        let inst = Instance::new(
            vec![Club::new(4, [1], [1, 2], ratio(1, 3), int(2))],
            vec![Edge::new(1, 2, 0.5)],
        );
        let text = serde_json::to_string(&inst).unwrap();
        assert_eq!(
            text,
            r#"{"clubs":[{"id":4,"donors":[1],"patients":[1,2],"alpha":"1/3","gamma":"2/1"}],"edges":[{"donor":1,"patient":2,"weight":0.5}]}"#
        );
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.donor_club(DonorId(1)), Some(0));
    }
}
