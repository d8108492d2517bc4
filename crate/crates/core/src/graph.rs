//! Graph states with a local-Clifford frame on every qubit.
//!
//! A [`GraphState`] with graph `G` and frames `f_v` represents the state
//! `(⊗_v f_v) |G⟩`. Rewrites keep that product exact up to a global phase;
//! the oracle module checks this on small registers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clifford::{LcStep, LocalClifford, Pauli};
use crate::error::{Error, Result};

/// Label of a physical qubit. Never reused within one graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl fmt::Debug for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for QubitId {
    fn from(v: u32) -> Self {
        QubitId(v)
    }
}

/// Whether a measurement outcome was random or fixed by the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    Random,
    Deterministic,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphState {
    adj: BTreeMap<QubitId, BTreeSet<QubitId>>,
    // identity frames are not stored
    frames: BTreeMap<QubitId, LocalClifford>,
    next_id: u32,
}

impl GraphState {
    /// `n` qubits in `|+⟩`, labelled `0..n`.
    pub fn new(n: usize) -> Self {
        let mut g = GraphState::default();
        for _ in 0..n {
            g.add_qubit();
        }
        g
    }

    /// Builds `n` qubits and applies CZ on each listed pair.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = GraphState::new(n);
        for &(a, b) in edges {
            g.cz(QubitId(a), QubitId(b))?;
        }
        Ok(g)
    }

    pub fn add_qubit(&mut self) -> QubitId {
        let id = QubitId(self.next_id);
        self.next_id += 1;
        self.adj.insert(id, BTreeSet::new());
        id
    }

    pub fn insert_qubit(&mut self, id: QubitId) -> Result<()> {
        if self.adj.contains_key(&id) {
            return Err(Error::DuplicateQubit(id));
        }
        self.adj.insert(id, BTreeSet::new());
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    /// Smallest id that has never been handed out by this graph.
    pub fn next_id(&self) -> QubitId {
        QubitId(self.next_id)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.adj.contains_key(&q)
    }

    pub fn vertices(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.adj.keys().copied()
    }

    /// Edges as `(low, high)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(QubitId, QubitId)> {
        self.adj
            .iter()
            .flat_map(|(&a, nb)| nb.range(a..).map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect()
    }

    pub fn neighbors(&self, q: QubitId) -> Result<&BTreeSet<QubitId>> {
        self.adj.get(&q).ok_or(Error::UnknownQubit(q))
    }

    pub fn degree(&self, q: QubitId) -> Result<usize> {
        self.neighbors(q).map(|n| n.len())
    }

    pub fn has_edge(&self, a: QubitId, b: QubitId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn frame(&self, q: QubitId) -> LocalClifford {
        self.frames.get(&q).copied().unwrap_or_default()
    }

    pub fn frames(&self) -> impl Iterator<Item = (QubitId, LocalClifford)> + '_ {
        self.frames.iter().map(|(&q, &f)| (q, f))
    }

    pub fn set_frame(&mut self, q: QubitId, f: LocalClifford) -> Result<()> {
        self.require(q)?;
        if f.is_identity() {
            self.frames.remove(&q);
        } else {
            self.frames.insert(q, f);
        }
        Ok(())
    }

    fn require(&self, q: QubitId) -> Result<()> {
        if self.contains(q) {
            Ok(())
        } else {
            Err(Error::UnknownQubit(q))
        }
    }

    fn right_mul_frame(&mut self, q: QubitId, k: LocalClifford) {
        let f = self.frame(q) * k;
        let _ = self.set_frame(q, f);
    }

    pub(crate) fn toggle_edge(&mut self, a: QubitId, b: QubitId) {
        debug_assert!(a != b);
        let na = self.adj.get_mut(&a).expect("known qubit");
        if !na.remove(&b) {
            na.insert(b);
        }
        let nb = self.adj.get_mut(&b).expect("known qubit");
        if !nb.remove(&a) {
            nb.insert(a);
        }
    }

    fn remove_qubit(&mut self, q: QubitId) {
        if let Some(nb) = self.adj.remove(&q) {
            for b in nb {
                if let Some(n) = self.adj.get_mut(&b) {
                    n.remove(&q);
                }
            }
        }
        self.frames.remove(&q);
    }

    /// Applies the single-qubit Clifford `c` as a gate on `q`.
    pub fn apply_clifford(&mut self, q: QubitId, c: LocalClifford) -> Result<()> {
        self.require(q)?;
        let f = c * self.frame(q);
        self.set_frame(q, f)
    }

    /// Applies a Pauli gate on `q`, absorbing it into the graph's stabilizer
    /// where possible so that frames stay diagonal.
    pub fn apply_pauli(&mut self, q: QubitId, p: Pauli) -> Result<()> {
        self.require(q)?;
        let (_, graph_pauli) = self.frame(q).conjugate(p);
        let nb: Vec<_> = self.adj[&q].iter().copied().collect();
        // X_q |G⟩ = Z_{N(q)} |G⟩
        if matches!(graph_pauli, Pauli::X | Pauli::Y) {
            for b in nb {
                self.right_mul_frame(b, LocalClifford::Z);
            }
        }
        if matches!(graph_pauli, Pauli::Z | Pauli::Y) {
            self.right_mul_frame(q, LocalClifford::Z);
        }
        Ok(())
    }

    /// Complements the neighbourhood of `a`. The represented state is left
    /// unchanged: the local Clifford relating `|G⟩` and `|τ_a(G)⟩` is pushed
    /// into the frames of `a` and its neighbours.
    pub fn local_complement(&mut self, a: QubitId) -> Result<()> {
        let nb: Vec<_> = self.neighbors(a)?.iter().copied().collect();
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                self.toggle_edge(nb[i], nb[j]);
            }
        }
        self.right_mul_frame(a, LocalClifford::lc_vertex_correction());
        for b in nb {
            self.right_mul_frame(b, LocalClifford::lc_neighbor_correction());
        }
        Ok(())
    }

    fn has_other_neighbors(&self, a: QubitId, b: QubitId) -> bool {
        self.adj[&a].iter().any(|&x| x != b)
    }

    /// Rewrites the frame of `a` to the identity using local complementations
    /// at `a` and at one of its neighbours other than `avoid`.
    fn reduce_frame(&mut self, a: QubitId, avoid: QubitId) {
        let partner = *self.adj[&a]
            .iter()
            .find(|&&x| x != avoid)
            .expect("caller checked for a neighbour");
        for step in self.frame(a).reduction_word() {
            let target = match step {
                LcStep::Vertex => a,
                LcStep::Neighbor => partner,
            };
            self.local_complement(target).expect("known qubit");
        }
        debug_assert!(self.frame(a).is_identity());
    }

    /// Applies a CZ gate between `a` and `b`.
    ///
    /// When both frames are diagonal the edge is toggled. Otherwise the frames
    /// are first reduced by local complementations and any remaining
    /// two-qubit case is resolved with a precomputed lookup table.
    pub fn cz(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        if a == b {
            return Err(Error::SameQubit(a));
        }
        self.require(a)?;
        self.require(b)?;
        if self.frame(a).is_diagonal() && self.frame(b).is_diagonal() {
            self.toggle_edge(a, b);
            return Ok(());
        }
        if self.has_other_neighbors(a, b) {
            self.reduce_frame(a, b);
        }
        if self.has_other_neighbors(b, a) {
            self.reduce_frame(b, a);
        }
        if self.has_other_neighbors(a, b) {
            self.reduce_frame(a, b);
        }
        let (fa, fb) = (self.frame(a), self.frame(b));
        if fa.is_diagonal() && fb.is_diagonal() {
            self.toggle_edge(a, b);
            return Ok(());
        }
        let key = CzKey {
            edge: self.has_edge(a, b),
            fa,
            fb,
            a_pinned: self.has_other_neighbors(a, b),
            b_pinned: self.has_other_neighbors(b, a),
        };
        let (edge, na, nb) = cz_table()
            .get(&key)
            .copied()
            .ok_or_else(|| Error::Internal(format!("no CZ table entry for {key:?}")))?;
        if edge != key.edge {
            self.toggle_edge(a, b);
        }
        self.set_frame(a, na)?;
        self.set_frame(b, nb)?;
        Ok(())
    }

    /// The outcome a measurement of `basis` on `q` is forced to, if any.
    pub fn forced_outcome(&self, q: QubitId, basis: Pauli) -> Result<Option<bool>> {
        self.require(q)?;
        let (neg, p) = self.frame(q).conjugate(basis);
        Ok((p == Pauli::X && self.adj[&q].is_empty()).then_some(neg))
    }

    /// Projects `q` onto the eigenstate of `basis` with eigenvalue
    /// `(-1)^outcome` and removes it. For an X-type measurement
    /// `special_neighbor` picks the neighbour used by the three-complementation
    /// rule (default: lowest id).
    pub fn measure(
        &mut self,
        q: QubitId,
        basis: Pauli,
        outcome: bool,
        special_neighbor: Option<QubitId>,
    ) -> Result<MeasureKind> {
        self.require(q)?;
        if let Some(b0) = special_neighbor {
            self.require(b0)?;
            if !self.has_edge(q, b0) {
                return Err(Error::NotAdjacent(b0, q));
            }
        }
        let (neg, p) = self.frame(q).conjugate(basis);
        let graph_outcome = outcome ^ neg;
        match p {
            Pauli::Z => {
                let nb: Vec<_> = self.adj[&q].iter().copied().collect();
                if graph_outcome {
                    for b in nb {
                        self.right_mul_frame(b, LocalClifford::Z);
                    }
                }
                self.remove_qubit(q);
                Ok(MeasureKind::Random)
            }
            Pauli::Y => {
                self.local_complement(q)?;
                self.measure(q, basis, outcome, None)
            }
            Pauli::X => {
                if self.adj[&q].is_empty() {
                    if graph_outcome {
                        return Err(Error::ImpossibleOutcome {
                            qubit: q,
                            forced: neg as u8,
                        });
                    }
                    self.remove_qubit(q);
                    return Ok(MeasureKind::Deterministic);
                }
                let b0 = special_neighbor.unwrap_or_else(|| *self.adj[&q].iter().next().unwrap());
                self.local_complement(b0)?;
                let kind = self.measure(q, basis, outcome, None)?;
                self.local_complement(b0)?;
                Ok(kind)
            }
        }
    }

    pub fn measure_z(&mut self, q: QubitId, outcome: bool) -> Result<MeasureKind> {
        self.measure(q, Pauli::Z, outcome, None)
    }

    pub fn measure_y(&mut self, q: QubitId, outcome: bool) -> Result<MeasureKind> {
        self.measure(q, Pauli::Y, outcome, None)
    }

    pub fn measure_x(
        &mut self,
        q: QubitId,
        outcome: bool,
        special_neighbor: Option<QubitId>,
    ) -> Result<MeasureKind> {
        self.measure(q, Pauli::X, outcome, special_neighbor)
    }

    /// Same vertices and edges, and (unless `up_to_frames`) the same frames.
    pub fn canonical_equal(&self, other: &GraphState, up_to_frames: bool) -> bool {
        self.adj == other.adj && (up_to_frames || self.frames == other.frames)
    }

    /// Projects qubit `b` into `a` through `|x⟩⟨x x|`, then applies `Z^outcome`
    /// on `a`. Both frames must be diagonal.
    pub(crate) fn merge_diagonal(&mut self, a: QubitId, b: QubitId, outcome: bool) {
        let (fa, fb) = (self.frame(a), self.frame(b));
        debug_assert!(fa.is_diagonal() && fb.is_diagonal());
        let had_edge = self.has_edge(a, b);
        let nb: Vec<_> = self.adj[&b].iter().copied().filter(|&x| x != a).collect();
        self.remove_qubit(b);
        for c in nb {
            self.toggle_edge(a, c);
        }
        let mut f = fa * fb;
        if had_edge ^ outcome {
            f = LocalClifford::Z * f;
        }
        let _ = self.set_frame(a, f);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CzKey {
    edge: bool,
    fa: LocalClifford,
    fb: LocalClifford,
    // a qubit with neighbours outside the pair must keep a diagonal frame
    a_pinned: bool,
    b_pinned: bool,
}

type Vec4 = [Complex64; 4];

fn pair_state(edge: bool, fa: LocalClifford, fb: LocalClifford) -> Vec4 {
    let h = Complex64::new(0.5, 0.0);
    let mut v = [h; 4];
    if edge {
        v[3] = -v[3];
    }
    let (ma, mb) = (fa.matrix(), fb.matrix());
    let mut out = [Complex64::new(0.0, 0.0); 4];
    // index = 2 * xa + xb
    for ia in 0..2 {
        for ib in 0..2 {
            for ja in 0..2 {
                for jb in 0..2 {
                    out[2 * ia + ib] += ma[ia][ja] * mb[ib][jb] * v[2 * ja + jb];
                }
            }
        }
    }
    out
}

fn phase_key(v: &Vec4) -> [i64; 8] {
    let lead = v.iter().find(|z| z.norm() > 1e-9).copied().unwrap();
    let phase = lead / lead.norm();
    let mut key = [0i64; 8];
    for (i, z) in v.iter().enumerate() {
        let w = z / phase;
        key[2 * i] = (w.re * 1e6).round() as i64;
        key[2 * i + 1] = (w.im * 1e6).round() as i64;
    }
    key
}

fn cz_table() -> &'static HashMap<CzKey, (bool, LocalClifford, LocalClifford)> {
    static TABLE: OnceLock<HashMap<CzKey, (bool, LocalClifford, LocalClifford)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut by_state: HashMap<[i64; 8], Vec<(bool, LocalClifford, LocalClifford)>> =
            HashMap::new();
        for edge in [false, true] {
            for fa in LocalClifford::all() {
                for fb in LocalClifford::all() {
                    by_state
                        .entry(phase_key(&pair_state(edge, fa, fb)))
                        .or_default()
                        .push((edge, fa, fb));
                }
            }
        }
        let mut table = HashMap::new();
        for edge in [false, true] {
            for fa in LocalClifford::all() {
                for fb in LocalClifford::all() {
                    let mut v = pair_state(edge, fa, fb);
                    v[3] = -v[3];
                    let candidates = &by_state[&phase_key(&v)];
                    for a_pinned in [false, true] {
                        for b_pinned in [false, true] {
                            let pick = candidates.iter().find(|(_, na, nb)| {
                                (!a_pinned || na.is_diagonal()) && (!b_pinned || nb.is_diagonal())
                            });
                            if let Some(&p) = pick {
                                table.insert(
                                    CzKey {
                                        edge,
                                        fa,
                                        fb,
                                        a_pinned,
                                        b_pinned,
                                    },
                                    p,
                                );
                            }
                        }
                    }
                }
            }
        }
        table
    })
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    vertices: Vec<QubitId>,
    edges: Vec<[QubitId; 2]>,
    #[serde(default)]
    frames: BTreeMap<QubitId, LocalClifford>,
}

impl Serialize for GraphState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GraphRecord {
            vertices: self.vertices().collect(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            frames: self.frames.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GraphState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = GraphRecord::deserialize(deserializer)?;
        let mut g = GraphState::default();
        for v in rec.vertices {
            g.insert_qubit(v).map_err(D::Error::custom)?;
        }
        for [a, b] in rec.edges {
            if a == b || !g.contains(a) || !g.contains(b) || g.has_edge(a, b) {
                return Err(D::Error::custom(format!("invalid edge [{a}, {b}]")));
            }
            g.toggle_edge(a, b);
        }
        for (q, f) in rec.frames {
            g.set_frame(q, f).map_err(D::Error::custom)?;
        }
        Ok(g)
    }
}
