//! Redundantly encoded graph states.
//!
//! Each logical vertex is a set of physical qubits holding a GHZ block
//! `(|0…0⟩ + |1…1⟩)/√2`; a logical edge is a CZ between any one member of
//! each endpoint (all choices give the same state). As in
//! [`GraphState`], every physical qubit carries a local-Clifford frame
//! applied after the encoding, so the represented state is
//! `(⊗_q f_q) |G_red⟩`.
//!
//! A logical `Z` equals `Z` on any single member, and a logical `X` is `X`
//! on every member. Byproducts on a vertex are therefore recorded on its
//! representative (lowest id) member.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clifford::{LocalClifford, Pauli};
use crate::error::{Error, Result};
use crate::fusion::Fuse;
use crate::graph::{GraphState, MeasureKind, QubitId};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What a measurement on a redundant graph did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureReport {
    pub kind: MeasureKind,
    /// Every qubit that left the graph: the measured one, plus the other
    /// members of its vertex when a Z-type measurement collapsed it. The
    /// collapsed members are left in the product state `f_m |x⟩`, where `x`
    /// is `collapsed_value`.
    pub removed: Vec<QubitId>,
    pub collapsed_value: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RedundantGraph {
    vertices: BTreeMap<VertexId, BTreeSet<QubitId>>,
    owner: BTreeMap<QubitId, VertexId>,
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
    frames: BTreeMap<QubitId, LocalClifford>,
    emitter: Option<QubitId>,
    next_qubit: u32,
    next_vertex: u32,
}

impl RedundantGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// One single-member vertex per qubit of `g`, with its edges and frames.
    pub fn from_graph(g: &GraphState) -> Self {
        let mut rg = RedundantGraph::new();
        let mut vid = BTreeMap::new();
        for q in g.vertices() {
            let v = rg.add_vertex(&[q]).expect("fresh ids");
            vid.insert(q, v);
            rg.set_frame(q, g.frame(q)).expect("member");
        }
        for (a, b) in g.edges() {
            rg.toggle_edge(vid[&a], vid[&b]).expect("distinct vertices");
        }
        rg.next_qubit = rg.next_qubit.max(g.next_id().0);
        rg
    }

    /// Adds a vertex holding `members` (new qubit ids) in a GHZ block.
    pub fn add_vertex(&mut self, members: &[QubitId]) -> Result<VertexId> {
        if members.is_empty() {
            return Err(Error::InvalidParameter(
                "a vertex needs at least one member".into(),
            ));
        }
        let set: BTreeSet<_> = members.iter().copied().collect();
        if set.len() != members.len() {
            return Err(Error::DuplicateQubit(members[0]));
        }
        for &q in &set {
            if self.owner.contains_key(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let v = VertexId(self.next_vertex);
        self.next_vertex += 1;
        for &q in &set {
            self.owner.insert(q, v);
            self.next_qubit = self.next_qubit.max(q.0 + 1);
        }
        self.vertices.insert(v, set);
        self.adj.insert(v, BTreeSet::new());
        Ok(v)
    }

    /// Adds a vertex of `n` fresh photons.
    pub fn add_ghz(&mut self, n: usize) -> Result<VertexId> {
        let members: Vec<_> = (0..n)
            .map(|i| QubitId(self.next_qubit + i as u32))
            .collect();
        self.add_vertex(&members)
    }

    /// Applies a logical CZ between two vertices.
    pub fn toggle_edge(&mut self, a: VertexId, b: VertexId) -> Result<()> {
        if a == b {
            return Err(Error::InvalidParameter(format!("self-loop on vertex {a}")));
        }
        self.require_vertex(a)?;
        self.require_vertex(b)?;
        let na = self.adj.get_mut(&a).unwrap();
        if !na.remove(&b) {
            na.insert(b);
        }
        let nb = self.adj.get_mut(&b).unwrap();
        if !nb.remove(&a) {
            nb.insert(a);
        }
        Ok(())
    }

    fn require_vertex(&self, v: VertexId) -> Result<()> {
        if self.vertices.contains_key(&v) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("unknown vertex {v}")))
        }
    }

    pub fn vertex_of(&self, q: QubitId) -> Result<VertexId> {
        self.owner.get(&q).copied().ok_or(Error::UnknownQubit(q))
    }

    pub fn members(&self, v: VertexId) -> Result<&BTreeSet<QubitId>> {
        self.vertices
            .get(&v)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown vertex {v}")))
    }

    pub fn representative(&self, v: VertexId) -> Result<QubitId> {
        Ok(*self.members(v)?.iter().next().unwrap())
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &BTreeSet<QubitId>)> + '_ {
        self.vertices.iter().map(|(&v, m)| (v, m))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.owner.len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.owner.keys().copied()
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.owner.contains_key(&q)
    }

    pub fn neighbors(&self, v: VertexId) -> Result<&BTreeSet<VertexId>> {
        self.adj
            .get(&v)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown vertex {v}")))
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    /// Logical edges as `(low, high)` vertex pairs.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        self.adj
            .iter()
            .flat_map(|(&a, nb)| nb.range(a..).map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect()
    }

    pub fn frame(&self, q: QubitId) -> LocalClifford {
        self.frames.get(&q).copied().unwrap_or_default()
    }

    pub fn frames(&self) -> impl Iterator<Item = (QubitId, LocalClifford)> + '_ {
        self.frames.iter().map(|(&q, &f)| (q, f))
    }

    pub fn set_frame(&mut self, q: QubitId, f: LocalClifford) -> Result<()> {
        self.vertex_of(q)?;
        if f.is_identity() {
            self.frames.remove(&q);
        } else {
            self.frames.insert(q, f);
        }
        Ok(())
    }

    fn right_mul(&mut self, q: QubitId, k: LocalClifford) {
        let f = self.frame(q) * k;
        let _ = self.set_frame(q, f);
    }

    fn right_mul_rep(&mut self, v: VertexId, k: LocalClifford) {
        let r = self.representative(v).expect("known vertex");
        self.right_mul(r, k);
    }

    pub fn emitter(&self) -> Option<QubitId> {
        self.emitter
    }

    /// Marks an existing qubit as the emitter (or clears the marking).
    pub fn set_emitter(&mut self, q: Option<QubitId>) -> Result<()> {
        if let Some(q) = q {
            self.vertex_of(q)?;
        }
        self.emitter = q;
        Ok(())
    }

    /// Smallest qubit id never used by this graph.
    pub fn next_qubit(&self) -> QubitId {
        QubitId(self.next_qubit)
    }

    fn fresh_qubit(&mut self, requested: Option<QubitId>) -> Result<QubitId> {
        let q = requested.unwrap_or(QubitId(self.next_qubit));
        if self.owner.contains_key(&q) {
            return Err(Error::DuplicateQubit(q));
        }
        Ok(q)
    }

    /// Removes `q` from its vertex (deleting the vertex if it empties).
    fn detach(&mut self, q: QubitId) -> VertexId {
        let v = self.owner.remove(&q).expect("known qubit");
        self.frames.remove(&q);
        if self.emitter == Some(q) {
            self.emitter = None;
        }
        let m = self.vertices.get_mut(&v).unwrap();
        m.remove(&q);
        if m.is_empty() {
            self.remove_vertex(v);
        }
        v
    }

    fn remove_vertex(&mut self, v: VertexId) {
        if let Some(m) = self.vertices.remove(&v) {
            for q in m {
                self.owner.remove(&q);
                self.frames.remove(&q);
                if self.emitter == Some(q) {
                    self.emitter = None;
                }
            }
        }
        if let Some(nb) = self.adj.remove(&v) {
            for b in nb {
                self.adj.get_mut(&b).unwrap().remove(&v);
            }
        }
    }

    /// Moves `q` out of its vertex `A` into a new single-member vertex joined
    /// to `A` by one edge.
    fn split_member(&mut self, q: QubitId) -> Result<VertexId> {
        let a = self.vertex_of(q)?;
        if self.vertices[&a].len() < 2 {
            return Err(Error::SingletonVertex(q));
        }
        let f = self.frame(q);
        self.vertices.get_mut(&a).unwrap().remove(&q);
        self.owner.remove(&q);
        let v = VertexId(self.next_vertex);
        self.next_vertex += 1;
        self.vertices.insert(v, BTreeSet::from([q]));
        self.owner.insert(q, v);
        self.adj.insert(v, BTreeSet::from([a]));
        self.adj.get_mut(&a).unwrap().insert(v);
        self.set_frame(q, f)?;
        Ok(v)
    }

    /// Physical Hadamard on `q`, a member of a vertex with at least two
    /// qubits: `q` leaves as a new vertex attached to the rest.
    pub fn hadamard_push(&mut self, q: QubitId) -> Result<VertexId> {
        let v = self.split_member(q)?;
        let f = self.frame(q);
        self.set_frame(q, LocalClifford::H * f * LocalClifford::H)?;
        Ok(v)
    }

    /// Rewrites the same state with `q` as its own vertex attached to the
    /// rest of its former vertex; an `H` is absorbed into `q`'s frame.
    pub fn push_out(&mut self, q: QubitId) -> Result<VertexId> {
        let v = self.split_member(q)?;
        self.right_mul(q, LocalClifford::H);
        Ok(v)
    }

    /// Inverse of [`push_out`](Self::push_out): a single-member vertex with
    /// exactly one neighbour joins that neighbour.
    pub fn pull_in(&mut self, q: QubitId) -> Result<VertexId> {
        let v = self.vertex_of(q)?;
        let nb = &self.adj[&v];
        if self.vertices[&v].len() != 1 || nb.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "{q} must be alone in a vertex with exactly one neighbour"
            )));
        }
        let w = *nb.iter().next().unwrap();
        let f = self.frame(q) * LocalClifford::H;
        self.remove_vertex(v);
        self.vertices.get_mut(&w).unwrap().insert(q);
        self.owner.insert(q, w);
        self.set_frame(q, f)?;
        Ok(w)
    }

    fn make_singleton(&mut self, v: VertexId) -> Result<Vec<QubitId>> {
        let extra: Vec<_> = self.members(v)?.iter().skip(1).copied().collect();
        for &q in &extra {
            self.push_out(q)?;
        }
        Ok(extra)
    }

    /// Pulls split-off members back in wherever they ended up as leaves.
    fn rejoin(&mut self, split: &[QubitId]) {
        loop {
            let ready = split.iter().copied().find(|&q| {
                self.owner
                    .get(&q)
                    .is_some_and(|v| self.vertices[v].len() == 1 && self.adj[v].len() == 1)
            });
            match ready {
                Some(q) => {
                    self.pull_in(q).expect("checked leaf");
                }
                None => return,
            }
        }
    }

    /// Applies a single-qubit Clifford gate to `q`.
    pub fn apply_clifford(&mut self, q: QubitId, c: LocalClifford) -> Result<()> {
        let f = c * self.frame(q);
        self.set_frame(q, f)
    }

    /// Applies a Pauli gate to `q`, moving it through the frame and onto
    /// the encoded stabilizer so diagonal frames stay diagonal.
    pub fn apply_pauli(&mut self, q: QubitId, p: Pauli) -> Result<()> {
        let a = self.vertex_of(q)?;
        let (_, gp) = self.frame(q).conjugate(p);
        if matches!(gp, Pauli::Z | Pauli::Y) {
            self.right_mul(q, LocalClifford::Z);
        }
        if matches!(gp, Pauli::X | Pauli::Y) {
            // X_q = X_{A \ q} X_A and X_A = Z_{N(A)} on the state
            let others: Vec<_> = self.vertices[&a]
                .iter()
                .copied()
                .filter(|&m| m != q)
                .collect();
            for m in others {
                self.right_mul(m, LocalClifford::X);
            }
            let nb: Vec<_> = self.adj[&a].iter().copied().collect();
            for b in nb {
                self.right_mul_rep(b, LocalClifford::Z);
            }
        }
        Ok(())
    }

    /// State-preserving local complementation at a single-member vertex.
    pub fn local_complement(&mut self, v: VertexId) -> Result<()> {
        let members = self.members(v)?;
        if members.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "local complementation at vertex {v} needs a single member, it has {}",
                members.len()
            )));
        }
        let q = *members.iter().next().unwrap();
        let nb: Vec<_> = self.adj[&v].iter().copied().collect();
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                self.toggle_edge(nb[i], nb[j])?;
            }
        }
        self.right_mul(q, LocalClifford::lc_vertex_correction());
        for b in nb {
            self.right_mul_rep(b, LocalClifford::lc_neighbor_correction());
        }
        Ok(())
    }

    /// Creates an emitter in `|0⟩` as a vertex of its own.
    pub fn init_emitter(&mut self, id: Option<QubitId>) -> Result<QubitId> {
        if self.emitter.is_some() {
            return Err(Error::EmitterExists);
        }
        let e = self.fresh_qubit(id)?;
        self.add_vertex(&[e])?;
        self.set_frame(e, LocalClifford::H)?;
        self.emitter = Some(e);
        Ok(e)
    }

    fn require_emitter(&self) -> Result<QubitId> {
        self.emitter.ok_or(Error::NoEmitter)
    }

    fn emitter_is_fresh(&self, e: QubitId) -> bool {
        let v = self.owner[&e];
        self.vertices[&v].len() == 1 && self.adj[&v].is_empty() && self.frame(e) == LocalClifford::H
    }

    /// Emits a photon entangled with the emitter: the photon joins the
    /// emitter's vertex.
    pub fn emit_photon(&mut self, id: Option<QubitId>) -> Result<QubitId> {
        let e = self.require_emitter()?;
        let f = self.frame(e);
        let (neg, axis) = f.conjugate(Pauli::Z);
        if axis != Pauli::Z {
            return Err(Error::UnsupportedFrame {
                qubit: e,
                frame: f,
                reason: "emission needs an emitter frame that preserves the Z axis",
            });
        }
        let p = self.fresh_qubit(id)?;
        let v = self.owner[&e];
        self.vertices.get_mut(&v).unwrap().insert(p);
        self.owner.insert(p, v);
        self.next_qubit = self.next_qubit.max(p.0 + 1);
        if neg {
            self.set_frame(p, LocalClifford::X)?;
        }
        Ok(p)
    }

    /// Hadamard on the emitter. Right after initialisation this prepares
    /// `|+⟩`, opening the first vertex; otherwise the emitter is pushed out
    /// of a vertex that must hold at least one photon.
    pub fn hadamard_emitter(&mut self) -> Result<()> {
        let e = self.require_emitter()?;
        if self.emitter_is_fresh(e) {
            return self.set_frame(e, LocalClifford::IDENTITY);
        }
        let v = self.owner[&e];
        if self.vertices[&v].len() < 2 {
            return Err(Error::EmptyEmitterVertex);
        }
        self.hadamard_push(e)?;
        Ok(())
    }

    /// Measures the emitter in the X basis, leaving a purely photonic graph.
    pub fn measure_out_emitter(&mut self, outcome: bool) -> Result<MeasureReport> {
        let e = self.require_emitter()?;
        let r = self.measure_member(e, Pauli::X, outcome, None)?;
        self.emitter = None;
        Ok(r)
    }

    /// The outcome a measurement of `basis` on `q` is forced to, if any.
    pub fn forced_outcome(&self, q: QubitId, basis: Pauli) -> Result<Option<bool>> {
        let v = self.vertex_of(q)?;
        let (neg, p) = self.frame(q).conjugate(basis);
        let alone = self.vertices[&v].len() == 1 && self.adj[&v].is_empty();
        Ok((p == Pauli::X && alone).then_some(neg))
    }

    /// Projects qubit `q` onto the `(-1)^outcome` eigenstate of `basis` and
    /// removes it. A Z-type measurement collapses the whole vertex.
    /// `special` selects the neighbour vertex used when an X-type
    /// measurement hits a single-member vertex (default: the lowest-id
    /// single-member neighbour, else the lowest-id neighbour).
    pub fn measure_member(
        &mut self,
        q: QubitId,
        basis: Pauli,
        outcome: bool,
        special: Option<VertexId>,
    ) -> Result<MeasureReport> {
        let a = self.vertex_of(q)?;
        if let Some(b0) = special {
            if !self.has_edge(a, b0) {
                return Err(Error::InvalidParameter(format!(
                    "vertex {b0} is not adjacent to the vertex of {q}"
                )));
            }
        }
        let (neg, p) = self.frame(q).conjugate(basis);
        let go = outcome ^ neg;
        let size = self.vertices[&a].len();
        match p {
            Pauli::Z => {
                let nb: Vec<_> = self.adj[&a].iter().copied().collect();
                if go {
                    for b in nb {
                        self.right_mul_rep(b, LocalClifford::Z);
                    }
                }
                let mut removed: Vec<_> = self.vertices[&a].iter().copied().collect();
                removed.retain(|&m| m != q);
                removed.insert(0, q);
                self.remove_vertex(a);
                Ok(MeasureReport {
                    kind: MeasureKind::Random,
                    removed,
                    collapsed_value: (size > 1).then_some(go),
                })
            }
            Pauli::X | Pauli::Y if size > 1 => {
                self.detach(q);
                let k = match (p, go) {
                    (Pauli::X, false) => None,
                    (Pauli::X, true) => Some(LocalClifford::Z),
                    (_, false) => Some(LocalClifford::S_DAG),
                    (_, true) => Some(LocalClifford::S),
                };
                if let Some(k) = k {
                    self.right_mul_rep(a, k);
                }
                Ok(MeasureReport {
                    kind: MeasureKind::Random,
                    removed: vec![q],
                    collapsed_value: None,
                })
            }
            Pauli::Y => {
                self.local_complement(a)?;
                self.measure_member(q, basis, outcome, None)
            }
            Pauli::X => {
                if self.adj[&a].is_empty() {
                    if go {
                        return Err(Error::ImpossibleOutcome {
                            qubit: q,
                            forced: neg as u8,
                        });
                    }
                    self.remove_vertex(a);
                    return Ok(MeasureReport {
                        kind: MeasureKind::Deterministic,
                        removed: vec![q],
                        collapsed_value: None,
                    });
                }
                let nb = &self.adj[&a];
                let b0 = special
                    .or_else(|| nb.iter().copied().find(|b| self.vertices[b].len() == 1))
                    .unwrap_or_else(|| *nb.iter().next().unwrap());
                let split = self.make_singleton(b0)?;
                self.local_complement(b0)?;
                let r = self.measure_member(q, basis, outcome, None)?;
                self.local_complement(b0)?;
                self.rejoin(&split);
                Ok(r)
            }
        }
    }

    pub fn measure_z(&mut self, q: QubitId, outcome: bool) -> Result<MeasureReport> {
        self.measure_member(q, Pauli::Z, outcome, None)
    }

    pub fn measure_x(&mut self, q: QubitId, outcome: bool) -> Result<MeasureReport> {
        self.measure_member(q, Pauli::X, outcome, None)
    }

    pub fn measure_y(&mut self, q: QubitId, outcome: bool) -> Result<MeasureReport> {
        self.measure_member(q, Pauli::Y, outcome, None)
    }

    /// Tries to make the frame of `q` diagonal without changing the state,
    /// leaving the vertex `avoid` (the fusion partner) untouched where
    /// possible. Returns whether it succeeded.
    fn diagonalize(&mut self, q: QubitId, avoid: VertexId) -> Result<bool> {
        for _ in 0..4 {
            let f = self.frame(q);
            if f.is_diagonal() {
                return Ok(true);
            }
            if f.preserves_z_axis() {
                // f = D X with D diagonal; replace X_q by X_{A \ q} Z_{N(A)}
                self.right_mul(q, LocalClifford::X);
                let a = self.owner[&q];
                let others: Vec<_> = self.vertices[&a]
                    .iter()
                    .copied()
                    .filter(|&m| m != q)
                    .collect();
                for m in others {
                    self.right_mul(m, LocalClifford::X);
                }
                let nb: Vec<_> = self.adj[&a].iter().copied().collect();
                for b in nb {
                    self.right_mul_rep(b, LocalClifford::Z);
                }
                continue;
            }
            let a = self.owner[&q];
            if self.vertices[&a].len() > 1 {
                self.push_out(q)?;
                continue;
            }
            if self.adj[&a].is_empty() {
                // isolated |ψ⟩ = f|+⟩: any frame with the same stabilizer will do
                let target = f.inverse().conjugate(Pauli::X);
                let d = [
                    LocalClifford::IDENTITY,
                    LocalClifford::Z,
                    LocalClifford::S,
                    LocalClifford::S_DAG,
                ]
                .into_iter()
                .find(|d| d.inverse().conjugate(Pauli::X) == target);
                return match d {
                    Some(d) => {
                        self.set_frame(q, d)?;
                        Ok(true)
                    }
                    None => Ok(false),
                };
            }
            // the reduction needs a neighbour other than the fusion partner
            let Some(c) = self.adj[&a].iter().copied().find(|&c| c != avoid) else {
                return Ok(false);
            };
            self.make_singleton(c)?;
            for &step in self.frame(q).reduction_word() {
                match step {
                    crate::clifford::LcStep::Vertex => self.local_complement(a)?,
                    crate::clifford::LcStep::Neighbor => self.local_complement(c)?,
                }
            }
        }
        Ok(self.frame(q).is_diagonal())
    }

    fn fusion_pair(&self, qa: QubitId, qb: QubitId) -> Result<(VertexId, VertexId)> {
        if qa == qb {
            return Err(Error::SameQubit(qa));
        }
        let (a, b) = (self.vertex_of(qa)?, self.vertex_of(qb)?);
        if a == b {
            return Err(Error::SameVertex(qa, qb));
        }
        Ok((a, b))
    }

    /// Type I fusion success branch `|0⟩⟨00| + (-1)^i |1⟩⟨11|` on
    /// `(qa, qb)`: the two vertices merge into one, `qb` is consumed and
    /// `qa` survives.
    pub(crate) fn merge(&mut self, qa: QubitId, qb: QubitId, i: bool) -> Result<()> {
        self.fusion_pair(qa, qb)?;
        for _ in 0..3 {
            let ok_a = self.diagonalize(qa, self.owner[&qb])?;
            let ok_b = self.diagonalize(qb, self.owner[&qa])?;
            if ok_a && ok_b && self.frame(qa).is_diagonal() {
                break;
            }
        }
        if !self.frame(qa).is_diagonal() || !self.frame(qb).is_diagonal() {
            return self.via_physical(|g| g.fuse_type1(qa, qb, i));
        }
        let (a, b) = (self.owner[&qa], self.owner[&qb]);
        let had_edge = self.has_edge(a, b);
        if had_edge {
            self.toggle_edge(a, b)?;
        }
        let mut f = self.frame(qa) * self.frame(qb);
        if had_edge ^ i {
            f = LocalClifford::Z * f;
        }
        let nb: Vec<_> = self.adj[&b].iter().copied().collect();
        for c in nb {
            self.toggle_edge(a, c)?;
        }
        let moved: Vec<_> = self.vertices[&b]
            .iter()
            .filter(|&&m| m != qb)
            .map(|&m| (m, self.frame(m)))
            .collect();
        let emitter = self.emitter;
        self.remove_vertex(b);
        for (m, fm) in moved {
            self.owner.insert(m, a);
            self.vertices.get_mut(&a).unwrap().insert(m);
            self.set_frame(m, fm)?;
        }
        self.emitter = emitter.filter(|e| self.owner.contains_key(e));
        self.set_frame(qa, f)?;
        Ok(())
    }

    /// Runs `op` on the physical graph and reads the result back with one
    /// vertex per qubit. Exact, but forgets the GHZ grouping; used only for
    /// frame configurations the vertex-level rules cannot absorb.
    fn via_physical(&mut self, op: impl FnOnce(&mut GraphState) -> Result<()>) -> Result<()> {
        let mut g = self.to_physical();
        op(&mut g)?;
        let mut rg = RedundantGraph {
            next_qubit: self.next_qubit,
            next_vertex: self.next_vertex,
            ..Default::default()
        };
        let mut vid = BTreeMap::new();
        for q in g.vertices() {
            vid.insert(q, rg.add_vertex(&[q])?);
            rg.set_frame(q, g.frame(q))?;
        }
        for (a, b) in g.edges() {
            rg.toggle_edge(vid[&a], vid[&b])?;
        }
        rg.emitter = self.emitter.filter(|e| rg.contains(*e));
        *self = rg;
        Ok(())
    }

    /// Expands every vertex into a star: the representative keeps the
    /// logical edges and every other member hangs off it with an extra `H`
    /// in its frame.
    pub fn to_physical(&self) -> GraphState {
        let mut g = GraphState::default();
        for &q in self.owner.keys() {
            g.insert_qubit(q).expect("distinct ids");
        }
        for (v, members) in &self.vertices {
            let r = *members.iter().next().unwrap();
            for &m in members.iter().skip(1) {
                g.toggle_edge(r, m);
                g.set_frame(m, self.frame(m) * LocalClifford::H).unwrap();
            }
            g.set_frame(r, self.frame(r)).unwrap();
            for b in self.adj[v].range(*v..).filter(|&&b| b != *v) {
                let rb = *self.vertices[b].iter().next().unwrap();
                g.toggle_edge(r, rb);
            }
        }
        g
    }

    /// Same member sets and logical edges (vertex ids may differ), and the
    /// same frames unless `up_to_frames`.
    pub fn same_structure(&self, other: &RedundantGraph, up_to_frames: bool) -> bool {
        let key = |g: &RedundantGraph| {
            let mut vs: Vec<_> = g.vertices.values().cloned().collect();
            vs.sort();
            let mut es: Vec<_> = g
                .edges()
                .into_iter()
                .map(|(a, b)| {
                    let (x, y) = (g.vertices[&a].clone(), g.vertices[&b].clone());
                    if x <= y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                })
                .collect();
            es.sort();
            (vs, es)
        };
        key(self) == key(other)
            && self.emitter == other.emitter
            && (up_to_frames || self.frames == other.frames)
    }
}

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: VertexId,
    members: Vec<QubitId>,
    emitter: bool,
}

#[derive(Serialize, Deserialize)]
struct RedundantRecord {
    vertices: Vec<VertexRecord>,
    edges: Vec<[VertexId; 2]>,
    #[serde(default)]
    frames: BTreeMap<QubitId, LocalClifford>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emitter_qubit: Option<QubitId>,
}

impl Serialize for RedundantGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RedundantRecord {
            vertices: self
                .vertices
                .iter()
                .map(|(&id, m)| VertexRecord {
                    id,
                    members: m.iter().copied().collect(),
                    emitter: self.emitter.is_some_and(|e| m.contains(&e)),
                })
                .collect(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            frames: self.frames.clone(),
            emitter_qubit: self.emitter,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RedundantGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = RedundantRecord::deserialize(deserializer)?;
        let mut g = RedundantGraph::new();
        for v in &rec.vertices {
            if g.vertices.contains_key(&v.id) {
                return Err(D::Error::custom(format!("duplicate vertex {}", v.id)));
            }
            g.next_vertex = v.id.0;
            g.add_vertex(&v.members).map_err(D::Error::custom)?;
        }
        g.next_vertex = rec.vertices.iter().map(|v| v.id.0 + 1).max().unwrap_or(0);
        for [a, b] in rec.edges {
            if g.has_edge(a, b) {
                return Err(D::Error::custom(format!("duplicate edge [{a}, {b}]")));
            }
            g.toggle_edge(a, b).map_err(D::Error::custom)?;
        }
        for (q, f) in rec.frames {
            g.set_frame(q, f).map_err(D::Error::custom)?;
        }
        let flagged: Vec<_> = rec.vertices.iter().filter(|v| v.emitter).collect();
        match (rec.emitter_qubit, flagged.as_slice()) {
            (None, []) => {}
            (Some(e), [v]) if v.members.contains(&e) => g.emitter = Some(e),
            _ => return Err(D::Error::custom("inconsistent emitter marking")),
        }
        Ok(g)
    }
}
