//! Validation findings shared by instance and schedule checks.

use crate::frames::FrameId;
use crate::model::{ClubId, DonorId, PatientId};
use crate::rational::Rational;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateClubId(ClubId),
    SharedDonor(DonorId),
    SharedPatient(PatientId),
    AlphaNotPositive(ClubId),
    GammaNegative(ClubId),
    EmptyClub(ClubId),
    DuplicateEdge(DonorId, PatientId),
    UnownedDonor(DonorId),
    UnownedPatient(PatientId),
    NonFiniteWeight(DonorId, PatientId),
    UnknownEdge(DonorId, PatientId),
    UnknownFrame(FrameId),
    DonorReused(DonorId),
    PatientReused(PatientId),
    FrameOverCap {
        frame: FrameId,
        assigned: usize,
        cap: u32,
    },
    /// Club safety broken at the end of `frame`. For prefix checks `order`
    /// carries the linearization that exposed the violation.
    ClubUnsafe {
        club: ClubId,
        frame: FrameId,
        donated: usize,
        received: usize,
        order: Option<Vec<FrameId>>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateClubId(c) => write!(f, "duplicate club id {c}"),
            Violation::SharedDonor(d) => write!(f, "shared donor {d}"),
            Violation::SharedPatient(p) => write!(f, "shared patient {p}"),
            Violation::AlphaNotPositive(c) => write!(f, "alpha not positive in club {c}"),
            Violation::GammaNegative(c) => write!(f, "gamma negative in club {c}"),
            Violation::EmptyClub(c) => write!(f, "club {c} has neither donors nor patients"),
            Violation::DuplicateEdge(d, p) => write!(f, "duplicate edge {d}->{p}"),
            Violation::UnownedDonor(d) => write!(f, "edge donor {d} belongs to no club"),
            Violation::UnownedPatient(p) => write!(f, "edge patient {p} belongs to no club"),
            Violation::NonFiniteWeight(d, p) => write!(f, "non-finite weight on edge {d}->{p}"),
            Violation::UnknownEdge(d, p) => write!(f, "schedule uses unknown edge {d}->{p}"),
            Violation::UnknownFrame(t) => write!(f, "schedule uses unknown frame {t}"),
            Violation::DonorReused(d) => write!(f, "donor {d} assigned more than once"),
            Violation::PatientReused(p) => write!(f, "patient {p} assigned more than once"),
            Violation::FrameOverCap {
                frame,
                assigned,
                cap,
            } => {
                write!(f, "frame {frame} holds {assigned} edges, cap {cap}")
            }
            Violation::ClubUnsafe {
                club,
                frame,
                donated,
                received,
                order,
            } => {
                write!(
                    f,
                    "club {club} unsafe at frame {frame}: donated {donated}, received {received}"
                )?;
                if let Some(order) = order {
                    let ids: Vec<String> = order.iter().map(|t| t.to_string()).collect();
                    write!(f, " (linearization {})", ids.join(","))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn debt_bound_holds(
    donated: usize,
    received: usize,
    alpha: &Rational,
    gamma: &Rational,
) -> bool {
    let donated = crate::rational::int(donated as i64);
    let received = crate::rational::int(received as i64);
    donated <= gamma + alpha * received
}
