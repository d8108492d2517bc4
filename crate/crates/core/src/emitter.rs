//! Generation plans: instruction sequences for quantum emitters and the
//! fusions and measurements that combine their outputs.
//!
//! A plan is a flat list of [`Step`]s. Emitter instructions carry the id of
//! the stream (emitter) they act on; streams are scheduling attributes only,
//! so a plan can be timed sequentially (one emitter reused) or in parallel
//! (one emitter per stream).
//!
//! Plans are stored as JSON lines: a [`PlanHeader`] record followed by one
//! step per line.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clifford::{LocalClifford, Pauli};
use crate::error::{Error, Result};
use crate::fusion::{boosted_fuse, Fuse, FusionKind, FusionRecord, FusionType, Sampler};
use crate::graph::QubitId;
use crate::redundant::RedundantGraph;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    InitEmitter {
        emitter: QubitId,
    },
    HadamardEmitter,
    Emit {
        photon: QubitId,
    },
    MeasureXEmitter,
    HPush {
        q: QubitId,
    },
    FuseType1 {
        qa: QubitId,
        qb: QubitId,
    },
    FuseType2Variant {
        qa: QubitId,
        qb: QubitId,
    },
    /// Boosted fusion using `a[l]`, `b[l]` on attempt `l`; `m = a.len()`.
    BoostedFuse {
        a: Vec<QubitId>,
        b: Vec<QubitId>,
    },
    /// X measurement of the tracked qubit: the lab basis is the one that the
    /// qubit's frame maps onto X (likewise for Z). For consecutive
    /// measurements all bases are fixed from the frames before the first.
    MeasureX {
        q: QubitId,
    },
    MeasureZ {
        q: QubitId,
    },
}

impl Instruction {
    fn is_emitter_op(&self) -> bool {
        matches!(
            self,
            Instruction::InitEmitter { .. }
                | Instruction::HadamardEmitter
                | Instruction::Emit { .. }
                | Instruction::MeasureXEmitter
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u32>,
    #[serde(flatten)]
    pub instr: Instruction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanHeader {
    pub family: String,
    pub params: BTreeMap<String, Value>,
    pub streams: u32,
    pub photons: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub family: String,
    pub params: BTreeMap<String, Value>,
    pub steps: Vec<Step>,
}

/// Durations of the two emitter operations that take time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    pub t_emit: f64,
    pub t_h: f64,
}

impl TimeModel {
    pub fn new(t_emit: f64, t_h: f64) -> Result<Self> {
        if !(t_emit >= 0.0 && t_h >= 0.0) || !t_emit.is_finite() || !t_h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "durations must be finite and non-negative, got T_emit={t_emit}, T_h={t_h}"
            )));
        }
        Ok(TimeModel { t_emit, t_h })
    }

    fn cost(&self, i: &Instruction) -> f64 {
        match i {
            Instruction::Emit { .. } => self.t_emit,
            Instruction::HadamardEmitter => self.t_h,
            _ => 0.0,
        }
    }
}

impl GenerationPlan {
    pub fn new(family: impl Into<String>) -> Self {
        GenerationPlan {
            family: family.into(),
            params: BTreeMap::new(),
            steps: Vec::new(),
        }
    }

    pub fn header(&self) -> PlanHeader {
        PlanHeader {
            family: self.family.clone(),
            params: self.params.clone(),
            streams: self.streams().len() as u32,
            photons: self.photon_count() as u64,
        }
    }

    pub fn streams(&self) -> BTreeSet<u32> {
        self.steps.iter().filter_map(|s| s.stream).collect()
    }

    pub fn photon_count(&self) -> usize {
        self.count(|i| matches!(i, Instruction::Emit { .. }))
    }

    pub fn boosted_fusion_count(&self) -> usize {
        self.count(|i| matches!(i, Instruction::BoostedFuse { .. }))
    }

    pub fn count(&self, pred: impl Fn(&Instruction) -> bool) -> usize {
        self.steps.iter().filter(|s| pred(&s.instr)).count()
    }

    /// Appends the steps of `other`. Ids are not renumbered.
    pub fn concat(&self, other: &GenerationPlan) -> GenerationPlan {
        let mut p = self.clone();
        p.steps.extend(other.steps.iter().cloned());
        p
    }

    /// Vertex sizes produced by each stream, in emission order.
    pub fn stream_vertex_sizes(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for s in &self.steps {
            let Some(id) = s.stream else { continue };
            let sizes = out.entry(id).or_default();
            match s.instr {
                Instruction::HadamardEmitter => sizes.push(0),
                Instruction::Emit { .. } => {
                    if let Some(last) = sizes.last_mut() {
                        *last += 1;
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Checks stream structure and qubit lifetimes.
    pub fn validate(&self) -> Result<()> {
        let bad = |i: usize, msg: String| Err(Error::MalformedPlan(format!("step {i}: {msg}")));
        // stream -> (emitter, terminated)
        let mut streams: BTreeMap<u32, (QubitId, bool)> = BTreeMap::new();
        let mut defined: BTreeSet<QubitId> = BTreeSet::new();
        let mut consumed: BTreeSet<QubitId> = BTreeSet::new();
        let live = |q: &QubitId, defined: &BTreeSet<QubitId>, consumed: &BTreeSet<QubitId>| {
            defined.contains(q) && !consumed.contains(q)
        };
        for (i, step) in self.steps.iter().enumerate() {
            let instr = &step.instr;
            if instr.is_emitter_op() {
                let Some(sid) = step.stream else {
                    return bad(i, "emitter instruction without a stream id".into());
                };
                if let Instruction::InitEmitter { emitter } = instr {
                    if streams.contains_key(&sid) {
                        return bad(i, format!("stream {sid} initialised twice"));
                    }
                    if !defined.insert(*emitter) {
                        return bad(i, format!("qubit {emitter} defined twice"));
                    }
                    streams.insert(sid, (*emitter, false));
                    continue;
                }
                let Some(&(_, done)) = streams.get(&sid) else {
                    return bad(i, format!("stream {sid} used before InitEmitter"));
                };
                if done {
                    return bad(i, format!("stream {sid} used after MeasureXEmitter"));
                }
                match instr {
                    Instruction::Emit { photon } => {
                        if !defined.insert(*photon) {
                            return bad(i, format!("qubit {photon} defined twice"));
                        }
                    }
                    Instruction::MeasureXEmitter => {
                        let e = streams[&sid].0;
                        consumed.insert(e);
                        streams.insert(sid, (e, true));
                    }
                    _ => {}
                }
                continue;
            }
            let uses: Vec<QubitId> = match instr {
                Instruction::HPush { q } => vec![*q],
                Instruction::FuseType1 { qa, qb } | Instruction::FuseType2Variant { qa, qb } => {
                    vec![*qa, *qb]
                }
                Instruction::BoostedFuse { a, b } => {
                    if a.is_empty() || a.len() != b.len() {
                        return bad(i, "boosted fusion needs equal nonzero photon counts".into());
                    }
                    a.iter().chain(b).copied().collect()
                }
                Instruction::MeasureX { q } | Instruction::MeasureZ { q } => vec![*q],
                _ => unreachable!("emitter ops handled above"),
            };
            let distinct: BTreeSet<_> = uses.iter().collect();
            if distinct.len() != uses.len() {
                return bad(i, "a qubit appears twice in one instruction".into());
            }
            for q in &uses {
                if !live(q, &defined, &consumed) {
                    return bad(i, format!("qubit {q} is not available"));
                }
            }
            match instr {
                Instruction::HPush { .. } => {}
                Instruction::FuseType1 { qb, .. } => {
                    consumed.insert(*qb);
                }
                _ => consumed.extend(uses),
            }
        }
        if let Some((sid, _)) = streams.iter().find(|(_, (_, done))| !done) {
            return Err(Error::MalformedPlan(format!(
                "stream {sid} never measures out its emitter"
            )));
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header())?;
        writeln!(w)?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads a plan and checks that the header agrees with the steps.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<GenerationPlan> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let Some((_, first)) = lines.next() else {
            return Err(Error::MalformedPlan("empty plan file".into()));
        };
        let header: PlanHeader = serde_json::from_str(&first?)
            .map_err(|e| Error::MalformedPlan(format!("line 1: bad header: {e}")))?;
        let mut steps = Vec::new();
        for (n, line) in lines {
            let step: Step = serde_json::from_str(&line?)
                .map_err(|e| Error::MalformedPlan(format!("line {}: {e}", n + 1)))?;
            steps.push(step);
        }
        let plan = GenerationPlan {
            family: header.family.clone(),
            params: header.params.clone(),
            steps,
        };
        let h = plan.header();
        if h.streams != header.streams || h.photons != header.photons {
            return Err(Error::MalformedPlan(format!(
                "header declares {} streams and {} photons, steps have {} and {}",
                header.streams, header.photons, h.streams, h.photons
            )));
        }
        Ok(plan)
    }

    pub fn from_jsonl(s: &str) -> Result<GenerationPlan> {
        Self::read_jsonl(s.as_bytes())
    }
}

/// Time to run the plan with a single emitter doing every stream in turn.
pub fn plan_duration(p: &GenerationPlan, t: &TimeModel) -> f64 {
    p.steps.iter().map(|s| t.cost(&s.instr)).sum()
}

/// Time to run the plan with one emitter per stream.
pub fn parallel_duration(p: &GenerationPlan, t: &TimeModel) -> f64 {
    let mut per: BTreeMap<u32, f64> = BTreeMap::new();
    for s in &p.steps {
        if let Some(id) = s.stream {
            *per.entry(id).or_default() += t.cost(&s.instr);
        }
    }
    per.into_values().fold(0.0, f64::max)
}

/// Hands out qubit and stream ids while a plan is assembled.
#[derive(Default)]
struct Builder {
    steps: Vec<Step>,
    next_qubit: u32,
    next_stream: u32,
}

impl Builder {
    fn fresh(&mut self) -> QubitId {
        let q = QubitId(self.next_qubit);
        self.next_qubit += 1;
        q
    }

    fn push(&mut self, stream: Option<u32>, instr: Instruction) {
        self.steps.push(Step { stream, instr });
    }

    /// One emitter producing a redundantly encoded linear cluster; returns
    /// the photons of each vertex.
    fn linear(&mut self, sizes: &[usize]) -> Vec<Vec<QubitId>> {
        let s = Some(self.next_stream);
        self.next_stream += 1;
        let emitter = self.fresh();
        self.push(s, Instruction::InitEmitter { emitter });
        let mut out = Vec::with_capacity(sizes.len());
        for &n in sizes {
            self.push(s, Instruction::HadamardEmitter);
            let photons: Vec<_> = (0..n).map(|_| self.fresh()).collect();
            for &photon in &photons {
                self.push(s, Instruction::Emit { photon });
            }
            out.push(photons);
        }
        self.push(s, Instruction::MeasureXEmitter);
        out
    }

    fn boosted(&mut self, a: &[QubitId], b: &[QubitId]) {
        self.push(
            None,
            Instruction::BoostedFuse {
                a: a.to_vec(),
                b: b.to_vec(),
            },
        );
    }

    fn finish(self, family: &str, params: BTreeMap<String, Value>) -> GenerationPlan {
        GenerationPlan {
            family: family.into(),
            params,
            steps: self.steps,
        }
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

/// Redundantly encoded linear cluster with the given vertex sizes.
pub fn compile_linear(sizes: &[usize]) -> Result<GenerationPlan> {
    require(!sizes.is_empty(), || {
        "linear cluster needs at least one vertex".into()
    })?;
    require(sizes.iter().all(|&s| s >= 1), || {
        format!("vertex sizes must be >= 1, got {sizes:?}")
    })?;
    let mut b = Builder::default();
    b.linear(sizes);
    Ok(b.finish("linear", params(&[("sizes", sizes.into())])))
}

/// GHZ state of `n` photons (a one-vertex linear cluster).
pub fn compile_ghz(n: usize) -> Result<GenerationPlan> {
    let mut p = compile_linear(&[n])?;
    p.family = "ghz".into();
    p.params = params(&[("n", n.into())]);
    Ok(p)
}

fn layer_sizes(n1: usize, m: usize, links: usize) -> Vec<usize> {
    vec![1 + links * m; n1]
}

/// Photons of each vertex of one layer, split into the kept photon and the
/// blocks of `m` reserved for fusions in order.
fn split_blocks(photons: &[QubitId], m: usize) -> (QubitId, Vec<Vec<QubitId>>) {
    (
        photons[0],
        photons[1..].chunks(m).map(|c| c.to_vec()).collect(),
    )
}

fn check_2d(n1: usize, n2: usize, m: usize) -> Result<()> {
    require(n1 >= 1 && n2 >= 1, || {
        format!("cluster dimensions must be >= 1, got {n1}x{n2}")
    })?;
    require(m >= 1, || "boosted fusion needs m >= 1".into())
}

/// The `n2` layers of an `n1 x n2` cluster, each its own stream: boundary
/// layers have `m + 1` photons per vertex, interior layers `2m + 1`.
pub fn compile_2d_layers(n1: usize, n2: usize, m: usize) -> Result<Vec<GenerationPlan>> {
    check_2d(n1, n2, m)?;
    let mut b = Builder::default();
    let mut plans = Vec::with_capacity(n2);
    for l in 0..n2 {
        let links = usize::from(l > 0) + usize::from(l + 1 < n2);
        let start = b.steps.len();
        b.linear(&layer_sizes(n1, m, links));
        let mut p = GenerationPlan::new("cluster2d_layer");
        p.params = params(&[("n1", n1.into()), ("layer", l.into()), ("m", m.into())]);
        p.steps = b.steps[start..].to_vec();
        plans.push(p);
    }
    Ok(plans)
}

/// `n1 x n2` cluster: `n2` linear layers joined by `n1 (n2 - 1)` boosted
/// fusions.
pub fn compile_cluster_2d(n1: usize, n2: usize, m: usize) -> Result<GenerationPlan> {
    check_2d(n1, n2, m)?;
    let mut p = compile_cluster_nd(&[n1, n2], m)?;
    p.family = "cluster2d".into();
    p.params = params(&[("n1", n1.into()), ("n2", n2.into()), ("m", m.into())]);
    Ok(p)
}

/// Cluster of shape `dims`: one emitter stream per line along the first
/// dimension, boosted fusions along every other dimension. Each vertex gets
/// `m` extra photons per fusion it takes part in.
pub fn compile_cluster_nd(dims: &[usize], m: usize) -> Result<GenerationPlan> {
    require(!dims.is_empty(), || {
        "cluster needs at least one dimension".into()
    })?;
    require(dims.iter().all(|&d| d >= 1), || {
        format!("dimensions must be >= 1, got {dims:?}")
    })?;
    require(m >= 1, || "boosted fusion needs m >= 1".into())?;
    let n1 = dims[0];
    let rest = &dims[1..];
    let lines: usize = rest.iter().product();
    let coords = |mut idx: usize| -> Vec<usize> {
        rest.iter()
            .map(|&n| {
                let c = idx % n;
                idx /= n;
                c
            })
            .collect()
    };
    let index = |c: &[usize]| -> usize {
        c.iter()
            .zip(rest)
            .rev()
            .fold(0, |acc, (&ci, &n)| acc * n + ci)
    };
    let links_of = |c: &[usize]| -> usize {
        c.iter()
            .zip(rest)
            .map(|(&ci, &n)| usize::from(ci > 0) + usize::from(ci + 1 < n))
            .sum()
    };

    let mut b = Builder::default();
    // blocks[line][vertex] = reserved photon blocks, consumed front to back
    let mut blocks: Vec<Vec<std::collections::VecDeque<Vec<QubitId>>>> = Vec::with_capacity(lines);
    for line in 0..lines {
        let c = coords(line);
        let photons = b.linear(&layer_sizes(n1, m, links_of(&c)));
        blocks.push(
            photons
                .iter()
                .map(|v| split_blocks(v, m).1.into())
                .collect(),
        );
    }
    for line in 0..lines {
        let c = coords(line);
        for (d, &n) in rest.iter().enumerate() {
            if c[d] + 1 >= n {
                continue;
            }
            let mut up = c.clone();
            up[d] += 1;
            let other = index(&up);
            for v in 0..n1 {
                let a = blocks[line][v].pop_front().expect("block reserved");
                let bb = blocks[other][v].pop_front().expect("block reserved");
                b.boosted(&a, &bb);
            }
        }
    }
    Ok(b.finish(
        "cluster_nd",
        params(&[("dims", dims.into()), ("m", m.into())]),
    ))
}

/// Two GHZ states of `m + 1` photons, each from its own emitter, joined by
/// one boosted fusion.
pub fn compile_boosted_pair(m: usize) -> Result<GenerationPlan> {
    let mut p = compile_cluster_nd(&[1, 2], m)?;
    p.family = "boosted_pair".into();
    p.params = params(&[("m", m.into())]);
    Ok(p)
}

/// `k`-vertex ring: a linear cluster whose end vertices carry `m` extra
/// photons, closed by one boosted fusion.
pub fn compile_ring(k: usize, m: usize) -> Result<GenerationPlan> {
    require(k >= 3, || format!("a ring needs k >= 3, got {k}"))?;
    require(m >= 1, || "boosted fusion needs m >= 1".into())?;
    let mut sizes = vec![1; k];
    sizes[0] = 1 + m;
    sizes[k - 1] = 1 + m;
    let mut b = Builder::default();
    let v = b.linear(&sizes);
    b.boosted(&v[0][1..], &v[k - 1][1..]);
    Ok(b.finish("ring", params(&[("k", k.into()), ("m", m.into())])))
}

/// Photon bookkeeping of an encoded ring plan, per construction stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedRingAudit {
    pub ring_photons: usize,
    pub cluster_photons: usize,
    pub ghz_photons: usize,
    /// Photons consumed by boosted fusions (all allocated ones).
    pub fused_photons: usize,
    /// Photons removed by the final X measurements.
    pub measured_photons: usize,
    /// Photons left in the encoded ring: `k n1 n2`.
    pub remaining_photons: usize,
}

impl EncodedRingAudit {
    pub fn new(k: usize, n1: usize, n2: usize, m: usize) -> Self {
        let ring_photons = k * (m + 1) + 2 * m;
        let cluster_photons = k * (2 * n2 + (n1 - 1) * m + 1);
        let ghz_photons = k * (n1 - 2) * (n2 + m);
        let fusions = 1 + k * (n1 - 1);
        let fused_photons = 2 * m * fusions;
        let measured_photons = 2 * k;
        let remaining_photons =
            ring_photons + cluster_photons + ghz_photons - fused_photons - measured_photons;
        EncodedRingAudit {
            ring_photons,
            cluster_photons,
            ghz_photons,
            fused_photons,
            measured_photons,
            remaining_photons,
        }
    }

    pub fn total(&self) -> usize {
        self.ring_photons + self.cluster_photons + self.ghz_photons
    }
}

/// Ring of `k` logical qubits, each in an `(n1, n2)` parity code.
///
/// Stages: a redundant ring with `m + 1` photons per vertex (`2m + 1` at the
/// ends before closing); `k` three-vertex clusters `(n2, (n1-1)m + 1, n2)`;
/// `k (n1 - 2)` GHZ states of `n2 + m` photons fused onto the cluster
/// centres to form stars; one boosted fusion per star onto the ring; finally
/// the leftover ring photon and star-centre photon of each site are
/// X-measured.
pub fn compile_encoded_ring(k: usize, n1: usize, n2: usize, m: usize) -> Result<GenerationPlan> {
    require(k >= 3, || format!("a ring needs k >= 3, got {k}"))?;
    require(n1 >= 2 && n2 >= 1, || {
        format!("parity code needs n1 >= 2 and n2 >= 1, got ({n1}, {n2})")
    })?;
    require(m >= 1, || "boosted fusion needs m >= 1".into())?;
    let mut b = Builder::default();

    let mut sizes = vec![m + 1; k];
    sizes[0] = 2 * m + 1;
    sizes[k - 1] = 2 * m + 1;
    let ring = b.linear(&sizes);
    let mut stars = Vec::with_capacity(k);
    for _ in 0..k {
        stars.push(b.linear(&[n2, (n1 - 1) * m + 1, n2]));
    }
    let mut ghz = Vec::with_capacity(k * (n1 - 2));
    for _ in 0..k * (n1 - 2) {
        ghz.push(b.linear(&[n2 + m]).remove(0));
    }

    // close the ring with the extra block of the end vertices
    b.boosted(&ring[0][1 + m..], &ring[k - 1][1 + m..]);
    // grow each star: centre blocks after the first go to the GHZ states
    for (s, star) in stars.iter().enumerate() {
        let centre = &star[1];
        for g in 0..n1 - 2 {
            let block = &centre[1 + m * (g + 1)..1 + m * (g + 2)];
            b.boosted(block, &ghz[s * (n1 - 2) + g][n2..]);
        }
    }
    // attach each star to its ring site
    for (s, star) in stars.iter().enumerate() {
        b.boosted(&star[1][1..1 + m], &ring[s][1..1 + m]);
    }
    for (s, star) in stars.iter().enumerate() {
        b.push(None, Instruction::MeasureX { q: ring[s][0] });
        b.push(None, Instruction::MeasureX { q: star[1][0] });
    }
    let plan = b.finish(
        "encoded_ring",
        params(&[
            ("k", k.into()),
            ("n1", n1.into()),
            ("n2", n2.into()),
            ("m", m.into()),
        ]),
    );
    let audit = EncodedRingAudit::new(k, n1, n2, m);
    if plan.photon_count() != audit.total() {
        return Err(Error::Internal(format!(
            "encoded ring emits {} photons, audit expects {}",
            plan.photon_count(),
            audit.total()
        )));
    }
    Ok(plan)
}

/// Why a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// A heralded fusion failure.
    Partial,
    /// A photon that had to be detected was lost.
    Loss,
}

/// A single-photon measurement as performed in the lab.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub q: QubitId,
    pub basis: Pauli,
    pub outcome: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub photons_emitted: usize,
    pub fusions: Vec<FusionRecord>,
    pub measurements: Vec<MeasurementRecord>,
    pub failure: Option<FailureCause>,
}

/// The physical basis that acts as `target` on the underlying graph state
/// once the frame `f` of the qubit is taken into account.
pub fn frame_adapted_basis(f: LocalClifford, target: Pauli) -> Pauli {
    Pauli::ALL
        .into_iter()
        .find(|&b| f.conjugate(b).1 == target)
        .expect("Cliffords permute the Pauli axes")
}

fn outcome_for<S: Sampler>(
    rg: &RedundantGraph,
    q: QubitId,
    basis: Pauli,
    sampler: &mut S,
) -> Result<bool> {
    Ok(match rg.forced_outcome(q, basis)? {
        Some(o) => o,
        None => sampler.outcome_bit(),
    })
}

/// Runs a plan on `rg`, drawing every random event from `sampler`. Stops at
/// the first fusion failure or lost photon, leaving `rg` partially built.
pub fn execute<S: Sampler>(
    plan: &GenerationPlan,
    rg: &mut RedundantGraph,
    sampler: &mut S,
) -> Result<Execution> {
    let mut emitters: BTreeMap<u32, QubitId> = BTreeMap::new();
    let mut ex = Execution::default();
    let stream_of = |s: &Step| {
        s.stream
            .ok_or_else(|| Error::MalformedPlan("emitter instruction without a stream id".into()))
    };
    // lab bases of a run of consecutive measurements, fixed when the run starts
    let mut lab_bases: BTreeMap<QubitId, Pauli> = BTreeMap::new();
    for (idx, step) in plan.steps.iter().enumerate() {
        let is_measurement = |i: &Instruction| {
            matches!(
                i,
                Instruction::MeasureX { .. } | Instruction::MeasureZ { .. }
            )
        };
        if !is_measurement(&step.instr) {
            lab_bases.clear();
        } else if lab_bases.is_empty() {
            for s in plan.steps[idx..]
                .iter()
                .take_while(|s| is_measurement(&s.instr))
            {
                let (Instruction::MeasureX { q } | Instruction::MeasureZ { q }) = s.instr else {
                    unreachable!()
                };
                let target = if matches!(s.instr, Instruction::MeasureX { .. }) {
                    Pauli::X
                } else {
                    Pauli::Z
                };
                if rg.contains(q) {
                    lab_bases.insert(q, frame_adapted_basis(rg.frame(q), target));
                }
            }
        }
        if step.instr.is_emitter_op() && !matches!(step.instr, Instruction::InitEmitter { .. }) {
            let sid = stream_of(step)?;
            let e = *emitters.get(&sid).ok_or_else(|| {
                Error::MalformedPlan(format!("stream {sid} used before InitEmitter"))
            })?;
            rg.set_emitter(Some(e))?;
        }
        match &step.instr {
            Instruction::InitEmitter { emitter } => {
                let sid = stream_of(step)?;
                rg.set_emitter(None)?;
                rg.init_emitter(Some(*emitter))?;
                emitters.insert(sid, *emitter);
            }
            Instruction::HadamardEmitter => rg.hadamard_emitter()?,
            Instruction::Emit { photon } => {
                rg.emit_photon(Some(*photon))?;
                ex.photons_emitted += 1;
            }
            Instruction::MeasureXEmitter => {
                let e = rg.emitter().expect("emitter selected above");
                let o = outcome_for(rg, e, Pauli::X, sampler)?;
                rg.measure_out_emitter(o)?;
            }
            Instruction::HPush { q } => {
                rg.hadamard_push(*q)?;
            }
            Instruction::FuseType1 { qa, qb } | Instruction::FuseType2Variant { qa, qb } => {
                let (qa, qb) = (*qa, *qb);
                let variant = matches!(step.instr, Instruction::FuseType2Variant { .. });
                let fusion_type = if variant {
                    FusionType::Variant
                } else {
                    FusionType::TypeOne
                };
                let mut rec = FusionRecord {
                    fusion_type,
                    qa,
                    qb,
                    outcome_bits: Vec::new(),
                    kind: FusionKind::CompleteFail,
                    attempts_used: 1,
                };
                let detected = if variant {
                    sampler.detected(qa) & sampler.detected(qb)
                } else {
                    sampler.detected(qb)
                };
                if !detected {
                    ex.fusions.push(rec);
                    ex.failure = Some(FailureCause::Loss);
                    return Ok(ex);
                }
                let success = sampler.fusion_succeeds();
                let (i, j) = (sampler.outcome_bit(), sampler.outcome_bit());
                rec.outcome_bits = if variant { vec![i, j] } else { vec![i] };
                if success {
                    rec.kind = FusionKind::Success;
                    if variant {
                        rg.fuse_type2_variant(qa, qb, i, j)?;
                    } else {
                        rg.fuse_type1(qa, qb, i)?;
                    }
                    ex.fusions.push(rec);
                } else {
                    rec.kind = FusionKind::PartialFail;
                    ex.fusions.push(rec);
                    ex.failure = Some(FailureCause::Partial);
                    return Ok(ex);
                }
            }
            Instruction::BoostedFuse { a, b } => {
                let out = boosted_fuse(rg, a, b, sampler)?;
                ex.fusions.push(FusionRecord {
                    fusion_type: FusionType::Variant,
                    qa: a[0],
                    qb: b[0],
                    outcome_bits: out.outcome_bits,
                    kind: out.kind,
                    attempts_used: out.attempts_used,
                });
                match out.kind {
                    FusionKind::Success => {}
                    FusionKind::PartialFail => {
                        ex.failure = Some(FailureCause::Partial);
                        return Ok(ex);
                    }
                    FusionKind::CompleteFail => {
                        ex.failure = Some(FailureCause::Loss);
                        return Ok(ex);
                    }
                }
            }
            Instruction::MeasureX { q } | Instruction::MeasureZ { q } => {
                if !sampler.detected(*q) {
                    ex.failure = Some(FailureCause::Loss);
                    return Ok(ex);
                }
                let basis = *lab_bases.get(q).ok_or(Error::UnknownQubit(*q))?;
                let outcome = outcome_for(rg, *q, basis, sampler)?;
                rg.measure_member(*q, basis, outcome, None)?;
                ex.measurements.push(MeasurementRecord {
                    q: *q,
                    basis,
                    outcome,
                });
            }
        }
    }
    rg.set_emitter(None)?;
    Ok(ex)
}
