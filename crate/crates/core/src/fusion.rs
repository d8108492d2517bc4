//! Linear-optic fusion gates as heralded graph rewrites.
//!
//! Success branches are modelled by their Kraus operators:
//!
//! * type I: `G_i = |0⟩⟨00| + (-1)^i |1⟩⟨11|`, keeping the first qubit;
//! * variant type II: `G_i` followed by a Y measurement (outcome `j`) of the
//!   surviving qubit;
//! * Bell type II: projection onto the `Z_a Z_b`, `X_a X_b` eigenstate;
//! * XZ type II: projection onto the `X_a Z_b`, `Z_a X_b` eigenstate.
//!
//! Failures are two single-qubit measurements (`Z Z`, or `X Z` for the XZ
//! gate). Outcome bits are explicit arguments so that every branch can be
//! checked against the oracle.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{LocalClifford, Pauli};
use crate::error::{Error, Result};
use crate::graph::{GraphState, QubitId};
use crate::redundant::RedundantGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionType {
    TypeOne,
    Variant,
    Bell,
    Xz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionKind {
    Success,
    PartialFail,
    CompleteFail,
}

/// Result of a (possibly boosted) fusion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionOutcome {
    pub kind: FusionKind,
    pub attempts_used: u32,
    /// Heralded bits of the final attempt.
    pub outcome_bits: Vec<bool>,
}

/// One line of a fusion trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionRecord {
    #[serde(rename = "type")]
    pub fusion_type: FusionType,
    pub qa: QubitId,
    pub qb: QubitId,
    pub outcome_bits: Vec<bool>,
    pub kind: FusionKind,
    pub attempts_used: u32,
}

/// Fusion rewrites shared by plain and redundant graphs.
pub trait Fuse {
    fn fuse_type1(&mut self, qa: QubitId, qb: QubitId, i: bool) -> Result<()>;
    fn fuse_type2_variant(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()>;
    fn fuse_type2_bell(&mut self, qa: QubitId, qb: QubitId, zz: bool, xx: bool) -> Result<()>;
    fn fuse_type2_xz(&mut self, qa: QubitId, qb: QubitId, xz: bool, zx: bool) -> Result<()>;
    /// Failure of type I, variant and Bell gates: `Z` on both qubits.
    fn fail_fusion(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()>;
    /// Failure of the XZ gate: `X` on `qa`, `Z` on `qb`.
    fn fail_fusion_xz(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()>;

    fn fuse(&mut self, t: FusionType, qa: QubitId, qb: QubitId, bits: (bool, bool)) -> Result<()> {
        match t {
            FusionType::TypeOne => self.fuse_type1(qa, qb, bits.0),
            FusionType::Variant => self.fuse_type2_variant(qa, qb, bits.0, bits.1),
            FusionType::Bell => self.fuse_type2_bell(qa, qb, bits.0, bits.1),
            FusionType::Xz => self.fuse_type2_xz(qa, qb, bits.0, bits.1),
        }
    }

    fn fail(&mut self, t: FusionType, qa: QubitId, qb: QubitId, bits: (bool, bool)) -> Result<()> {
        match t {
            FusionType::Xz => self.fail_fusion_xz(qa, qb, bits.0, bits.1),
            _ => self.fail_fusion(qa, qb, bits.0, bits.1),
        }
    }
}

fn zero_branch(e: Error) -> Error {
    match e {
        Error::ImpossibleOutcome { .. } => Error::ZeroProbability,
        other => other,
    }
}

impl Fuse for GraphState {
    fn fuse_type1(&mut self, qa: QubitId, qb: QubitId, i: bool) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        self.neighbors(qa)?;
        self.neighbors(qb)?;
        if self.frame(qa).is_diagonal() && self.frame(qb).is_diagonal() {
            self.merge_diagonal(qa, qb, i);
            return Ok(());
        }
        // G_0 = ⟨+|_b CZ_ab H_b
        self.apply_clifford(qb, LocalClifford::H)?;
        self.cz(qa, qb)?;
        self.measure_x(qb, false, None).map_err(zero_branch)?;
        if i {
            self.apply_pauli(qa, Pauli::Z)?;
        }
        Ok(())
    }

    fn fuse_type2_variant(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        self.fuse_type1(qa, qb, i)?;
        self.measure_y(qa, j)?;
        Ok(())
    }

    fn fuse_type2_bell(&mut self, qa: QubitId, qb: QubitId, zz: bool, xx: bool) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        self.neighbors(qa)?;
        if zz {
            self.apply_pauli(qb, Pauli::X)?;
        }
        self.fuse_type1(qa, qb, false)?;
        self.measure_x(qa, xx, None).map_err(zero_branch)?;
        Ok(())
    }

    fn fuse_type2_xz(&mut self, qa: QubitId, qb: QubitId, xz: bool, zx: bool) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        self.neighbors(qa)?;
        self.apply_clifford(qb, LocalClifford::H)?;
        self.fuse_type2_bell(qa, qb, zx, xz)
    }

    fn fail_fusion(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        self.neighbors(qb)?;
        self.measure_z(qa, i).map_err(zero_branch)?;
        self.measure_z(qb, j).map_err(zero_branch)?;
        Ok(())
    }

    fn fail_fusion_xz(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        self.neighbors(qb)?;
        self.measure_x(qa, i, None).map_err(zero_branch)?;
        self.measure_z(qb, j).map_err(zero_branch)?;
        Ok(())
    }
}

impl RedundantGraph {
    fn hadamard(&mut self, q: QubitId) -> Result<()> {
        let v = self.vertex_of(q)?;
        if self.members(v)?.len() > 1 {
            self.hadamard_push(q)?;
            Ok(())
        } else {
            self.apply_clifford(q, LocalClifford::H)
        }
    }

    fn distinct_vertices(&self, qa: QubitId, qb: QubitId) -> Result<()> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        if self.vertex_of(qa)? == self.vertex_of(qb)? {
            return Err(Error::SameVertex(qa, qb));
        }
        Ok(())
    }
}

impl Fuse for RedundantGraph {
    fn fuse_type1(&mut self, qa: QubitId, qb: QubitId, i: bool) -> Result<()> {
        self.merge(qa, qb, i)
    }

    fn fuse_type2_variant(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        self.merge(qa, qb, i)?;
        self.measure_y(qa, j)?;
        Ok(())
    }

    fn fuse_type2_bell(&mut self, qa: QubitId, qb: QubitId, zz: bool, xx: bool) -> Result<()> {
        self.distinct_vertices(qa, qb)?;
        if zz {
            self.apply_pauli(qb, Pauli::X)?;
        }
        self.merge(qa, qb, false)?;
        self.measure_x(qa, xx).map_err(zero_branch)?;
        Ok(())
    }

    fn fuse_type2_xz(&mut self, qa: QubitId, qb: QubitId, xz: bool, zx: bool) -> Result<()> {
        self.distinct_vertices(qa, qb)?;
        self.hadamard(qb)?;
        self.fuse_type2_bell(qa, qb, zx, xz)
    }

    fn fail_fusion(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        self.distinct_vertices(qa, qb)?;
        self.measure_z(qa, i).map_err(zero_branch)?;
        if self.contains(qb) {
            self.measure_z(qb, j).map_err(zero_branch)?;
        }
        Ok(())
    }

    fn fail_fusion_xz(&mut self, qa: QubitId, qb: QubitId, i: bool, j: bool) -> Result<()> {
        self.distinct_vertices(qa, qb)?;
        self.measure_x(qa, i).map_err(zero_branch)?;
        self.measure_z(qb, j).map_err(zero_branch)?;
        Ok(())
    }
}

/// Source of the random events in a fusion: photon detection, success of a
/// fusion attempt, and heralded outcome bits.
pub trait Sampler {
    fn detected(&mut self, q: QubitId) -> bool;
    fn fusion_succeeds(&mut self) -> bool;
    fn outcome_bit(&mut self) -> bool;
}

/// Draws every event from `rng`: each photon is detected with probability
/// `eta`, each attempt succeeds with probability 1/2, bits are uniform.
pub struct RngSampler<R> {
    pub rng: R,
    pub eta: f64,
}

impl<R: Rng> RngSampler<R> {
    pub fn new(rng: R, eta: f64) -> Self {
        RngSampler { rng, eta }
    }
}

impl<R: Rng> Sampler for RngSampler<R> {
    fn detected(&mut self, _q: QubitId) -> bool {
        self.eta >= 1.0 || self.rng.random::<f64>() < self.eta
    }

    fn fusion_succeeds(&mut self) -> bool {
        self.rng.random()
    }

    fn outcome_bit(&mut self) -> bool {
        self.rng.random()
    }
}

/// Replays fixed event sequences. Exhausted queues fall back to: photon
/// detected, attempt succeeds, bit 0.
#[derive(Clone, Debug, Default)]
pub struct ScriptedSampler {
    pub detections: VecDeque<bool>,
    pub successes: VecDeque<bool>,
    pub bits: VecDeque<bool>,
}

impl ScriptedSampler {
    pub fn with_successes(successes: &[bool]) -> Self {
        ScriptedSampler {
            successes: successes.iter().copied().collect(),
            ..Default::default()
        }
    }
}

impl Sampler for ScriptedSampler {
    fn detected(&mut self, _q: QubitId) -> bool {
        self.detections.pop_front().unwrap_or(true)
    }

    fn fusion_succeeds(&mut self) -> bool {
        self.successes.pop_front().unwrap_or(true)
    }

    fn outcome_bit(&mut self) -> bool {
        self.bits.pop_front().unwrap_or(false)
    }
}

fn check_allocation(rg: &RedundantGraph, photons: &[QubitId], m: usize) -> Result<()> {
    let first = photons[0];
    let v = rg.vertex_of(first)?;
    for &p in photons {
        if rg.vertex_of(p)? != v {
            return Err(Error::InvalidParameter(format!(
                "photons {first} and {p} of one boosted fusion side lie in different vertices"
            )));
        }
    }
    let available = rg.members(v)?.len();
    // one member must stay behind to carry the vertex
    if available < m + 1 {
        return Err(Error::InsufficientPhotons {
            qubit: first,
            available,
            needed: m + 1,
        });
    }
    Ok(())
}

/// Boosted type II fusion between the vertices holding `a` and `b`, using
/// the listed photons (`m = a.len()` per side) for sequential attempts.
///
/// Each attempt Hadamard-pushes one photon per side out of its vertex and
/// fuses the pair with the variant type II gate. On the first success the
/// unused allocated photons are X-measured away. A failed attempt only
/// removes the pair. A lost photon aborts with `CompleteFail`, leaving the
/// graph in an unspecified (spoiled) state.
pub fn boosted_fuse<S: Sampler>(
    rg: &mut RedundantGraph,
    a: &[QubitId],
    b: &[QubitId],
    sampler: &mut S,
) -> Result<FusionOutcome> {
    let m = a.len();
    if m == 0 || b.len() != m {
        return Err(Error::InvalidParameter(format!(
            "boosted fusion needs the same nonzero photon count per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    check_allocation(rg, a, m)?;
    check_allocation(rg, b, m)?;
    if rg.vertex_of(a[0])? == rg.vertex_of(b[0])? {
        return Err(Error::SameVertex(a[0], b[0]));
    }
    let lost = |attempts: usize| FusionOutcome {
        kind: FusionKind::CompleteFail,
        attempts_used: attempts as u32,
        outcome_bits: Vec::new(),
    };
    for l in 0..m {
        let (pa, pb) = (a[l], b[l]);
        if !sampler.detected(pa) || !sampler.detected(pb) {
            return Ok(lost(l + 1));
        }
        rg.hadamard_push(pa)?;
        rg.hadamard_push(pb)?;
        let success = sampler.fusion_succeeds();
        let (i, j) = (sampler.outcome_bit(), sampler.outcome_bit());
        if success {
            rg.fuse_type2_variant(pa, pb, i, j)?;
            for &q in a[l + 1..].iter().chain(&b[l + 1..]) {
                if !sampler.detected(q) {
                    return Ok(lost(l + 1));
                }
                let bit = sampler.outcome_bit();
                rg.measure_x(q, bit)?;
            }
            return Ok(FusionOutcome {
                kind: FusionKind::Success,
                attempts_used: l as u32 + 1,
                outcome_bits: vec![i, j],
            });
        }
        rg.fail_fusion(pa, pb, i, j)?;
        if l + 1 == m {
            return Ok(FusionOutcome {
                kind: FusionKind::PartialFail,
                attempts_used: m as u32,
                outcome_bits: vec![i, j],
            });
        }
    }
    unreachable!("loop returns on its last attempt")
}
