//! Randomised comparison of every graph rewrite against the statevector
//! oracle.
//!
//! Each rule draws `cases` random inputs of at most `max_qubits` qubits and
//! checks all outcome branches. Case `c` of rule `r` uses its own generator
//! position, so reports are reproducible for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::clifford::{LocalClifford, Pauli};
use crate::error::{Error, Result};
use crate::fusion::{Fuse, FusionType};
use crate::graph::{GraphState, MeasureKind, QubitId};
use crate::oracle::{
    build_graph_state, build_redundant_state, DenseState, Kraus, DEFAULT_TOLERANCE,
};
use crate::redundant::RedundantGraph;

/// Frame indices that keep the Z axis.
const Z_PRESERVING: [usize; 8] = [0, 1, 2, 3, 8, 9, 10, 11];

/// Counterexamples kept per rule.
const MAX_DUMPS: usize = 5;

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub max_qubits: usize,
    pub cases: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            max_qubits: 8,
            cases: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub case: usize,
    pub input: Value,
    pub operation: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub rule: &'static str,
    pub cases: usize,
    pub failed: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

type CaseResult = std::result::Result<(), Counterexample>;
type Rule = fn(&mut ChaCha8Rng, usize, usize) -> CaseResult;

pub const RULES: [(&str, Rule); 14] = [
    ("cz", check_cz),
    ("local_complement", check_local_complement),
    ("measure_x", check_measure_x),
    ("measure_y", check_measure_y),
    ("measure_z", check_measure_z),
    ("fusion_type1", check_type1),
    ("fusion_variant", check_variant),
    ("fusion_bell", check_bell),
    ("fusion_xz", check_xz),
    ("redundant_measure", check_redundant_measure),
    ("redundant_fusion", check_redundant_fusion),
    ("emission", check_emission),
    ("hadamard_push", check_hadamard_push),
    ("push_out", check_push_out),
];

/// Runs every rule; one report per rule, in [`RULES`] order.
pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<RuleReport>> {
    if cfg.max_qubits < 3 {
        return Err(Error::InvalidParameter(format!(
            "max_qubits must be >= 3, got {}",
            cfg.max_qubits
        )));
    }
    Ok(RULES
        .iter()
        .enumerate()
        .map(|(r, &(name, rule))| run_rule(cfg, r as u64, name, rule))
        .collect())
}

fn run_rule(cfg: &VerifyConfig, index: u64, name: &'static str, rule: Rule) -> RuleReport {
    let mut failures: Vec<Counterexample> = (0..cfg.cases)
        .into_par_iter()
        .filter_map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index);
            rng.set_word_pos((case as u128) << 32);
            rule(&mut rng, cfg.max_qubits, case).err()
        })
        .collect();
    let failed = failures.len();
    failures.truncate(MAX_DUMPS);
    RuleReport {
        rule: name,
        cases: cfg.cases,
        failed,
        counterexamples: failures,
    }
}

/// Applies a fusion branch to the statevector: the success Kraus operator,
/// or the two single-qubit measurements of a failure.
pub fn oracle_fusion(
    s: &mut DenseState,
    t: FusionType,
    success: bool,
    a: QubitId,
    b: QubitId,
    bits: (bool, bool),
) -> Result<f64> {
    let (i, j) = bits;
    if !success {
        let first = if t == FusionType::Xz {
            Pauli::X
        } else {
            Pauli::Z
        };
        let p1 = s.measure(a, first, i)?;
        return Ok(p1 * s.measure(b, Pauli::Z, j)?);
    }
    match t {
        FusionType::TypeOne => s.apply_kraus(Kraus::TypeOne(i), &[a, b]),
        FusionType::Variant => {
            let p = s.apply_kraus(Kraus::TypeOne(i), &[a, b])?;
            Ok(p * s.measure(a, Pauli::Y, j)?)
        }
        FusionType::Bell => s.apply_kraus(Kraus::BellPair { zz: i, xx: j }, &[a, b]),
        FusionType::Xz => s.apply_kraus(Kraus::XzPair { xz: i, zx: j }, &[a, b]),
    }
}

fn random_graph(rng: &mut ChaCha8Rng, min_n: usize, max_n: usize) -> GraphState {
    let n = rng.random_range(min_n..=max_n);
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.random() {
                edges.push((a, b));
            }
        }
    }
    let mut g = GraphState::from_edges(n, &edges).expect("valid edge list");
    for q in 0..n as u32 {
        let f = LocalClifford::from_index(rng.random_range(0..24)).expect("index below 24");
        g.set_frame(QubitId(q), f).expect("qubit exists");
    }
    g
}

fn random_redundant(rng: &mut ChaCha8Rng, max_qubits: usize, z_preserving: bool) -> RedundantGraph {
    let mut rg = RedundantGraph::new();
    let mut total = 0;
    let mut vs = Vec::new();
    loop {
        let s = rng.random_range(1..=3);
        if total + s > max_qubits || (vs.len() >= 2 && rng.random_bool(0.2)) {
            break;
        }
        total += s;
        vs.push(rg.add_ghz(s).expect("fresh ids"));
    }
    for a in 0..vs.len() {
        for b in a + 1..vs.len() {
            if rng.random() {
                rg.toggle_edge(vs[a], vs[b]).expect("distinct vertices");
            }
        }
    }
    let qs: Vec<_> = rg.qubits().collect();
    for q in qs {
        let i = if z_preserving {
            Z_PRESERVING[rng.random_range(0..8)]
        } else {
            rng.random_range(0..24)
        };
        rg.set_frame(q, LocalClifford::from_index(i).expect("index below 24"))
            .expect("qubit exists");
    }
    rg
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn dump<T: Serialize>(
    case: usize,
    input: &T,
    operation: String,
    detail: impl ToString,
) -> Counterexample {
    Counterexample {
        case,
        input: serde_json::to_value(input).unwrap_or(Value::Null),
        operation,
        detail: detail.to_string(),
    }
}

fn same_graph(g: &GraphState, s: &DenseState) -> Result<bool> {
    build_graph_state(g)?.equal_up_to_phase(s, DEFAULT_TOLERANCE)
}

/// Compares after splitting off qubits the oracle still holds but the
/// rewrite dropped.
fn same_redundant(rg: &RedundantGraph, s: &DenseState) -> Result<bool> {
    let mut s = s.clone();
    let extra: Vec<_> = s
        .qubits()
        .iter()
        .copied()
        .filter(|q| !rg.contains(*q))
        .collect();
    for q in extra {
        if s.split_off(q).is_err() {
            return Ok(false);
        }
    }
    build_redundant_state(rg)?.equal_up_to_phase(&s, DEFAULT_TOLERANCE)
}

/// Checks one rewrite against the oracle: a zero-probability branch must be
/// rejected as impossible, any other branch must give the same state.
fn judge<T: Serialize>(
    case: usize,
    input: &T,
    op: String,
    oracle: Result<f64>,
    rewrite: Result<()>,
    same: impl FnOnce() -> Result<bool>,
) -> CaseResult {
    match (oracle, rewrite) {
        (
            Err(Error::ZeroProbability),
            Err(Error::ZeroProbability | Error::ImpossibleOutcome { .. }),
        ) => Ok(()),
        (Err(Error::ZeroProbability), Ok(())) => {
            Err(dump(case, input, op, "accepted a zero-probability branch"))
        }
        (Err(e), _) => Err(dump(case, input, op, format!("oracle error: {e}"))),
        (Ok(_), Err(e)) => Err(dump(case, input, op, format!("rewrite error: {e}"))),
        (Ok(_), Ok(())) => match same() {
            Ok(true) => Ok(()),
            Ok(false) => Err(dump(case, input, op, "state differs from oracle")),
            Err(e) => Err(dump(case, input, op, format!("comparison error: {e}"))),
        },
    }
}

fn check_cz(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let g = random_graph(rng, 2, max_q);
    let a = QubitId(rng.random_range(0..g.len() as u32));
    let b = QubitId((a.0 + rng.random_range(1..g.len() as u32)) % g.len() as u32);
    let mut s = build_graph_state(&g).map_err(|e| dump(case, &g, "build".into(), e))?;
    let mut h = g.clone();
    let oracle = s.apply_cz(a, b).map(|_| 1.0);
    judge(
        case,
        &g,
        format!("cz({a}, {b})"),
        oracle,
        h.cz(a, b),
        || same_graph(&h, &s),
    )
}

fn check_local_complement(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let g = random_graph(rng, 1, max_q);
    let a = QubitId(rng.random_range(0..g.len() as u32));
    let s = build_graph_state(&g).map_err(|e| dump(case, &g, "build".into(), e))?;
    let mut h = g.clone();
    let r = h.local_complement(a);
    judge(
        case,
        &g,
        format!("local_complement({a})"),
        Ok(1.0),
        r,
        || same_graph(&h, &s),
    )
}

fn check_measure(rng: &mut ChaCha8Rng, max_q: usize, case: usize, basis: Pauli) -> CaseResult {
    let g = random_graph(rng, 1, max_q);
    let q = QubitId(rng.random_range(0..g.len() as u32));
    let nb: Vec<_> = g
        .neighbors(q)
        .map_err(|e| dump(case, &g, "neighbors".into(), e))?
        .iter()
        .copied()
        .collect();
    let special = (basis == Pauli::X && !nb.is_empty()).then(|| pick(rng, &nb));
    for outcome in [false, true] {
        let op = format!(
            "measure({q}, {basis}, {}, special {special:?})",
            u8::from(outcome)
        );
        let mut s = build_graph_state(&g).map_err(|e| dump(case, &g, "build".into(), e))?;
        let oracle = s.measure(q, basis, outcome);
        let mut h = g.clone();
        let r = h.measure(q, basis, outcome, special);
        if let (Ok(p), Ok(kind)) = (&oracle, &r) {
            let want = if *kind == MeasureKind::Deterministic {
                1.0
            } else {
                0.5
            };
            if (p - want).abs() > 1e-10 {
                return Err(dump(
                    case,
                    &g,
                    op,
                    format!("outcome probability {p}, rewrite reports {kind:?}"),
                ));
            }
        }
        judge(case, &g, op, oracle, r.map(|_| ()), || same_graph(&h, &s))?;
    }
    Ok(())
}

fn check_measure_x(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_measure(rng, max_q, case, Pauli::X)
}

fn check_measure_y(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_measure(rng, max_q, case, Pauli::Y)
}

fn check_measure_z(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_measure(rng, max_q, case, Pauli::Z)
}

const BITS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

fn check_fusion(rng: &mut ChaCha8Rng, max_q: usize, case: usize, t: FusionType) -> CaseResult {
    let g = random_graph(rng, 2, max_q);
    let a = QubitId(rng.random_range(0..g.len() as u32));
    let b = QubitId((a.0 + rng.random_range(1..g.len() as u32)) % g.len() as u32);
    for success in [true, false] {
        for bits in BITS {
            let op = format!("{t:?}({a}, {b}) success={success} bits={bits:?}");
            let mut s = build_graph_state(&g).map_err(|e| dump(case, &g, "build".into(), e))?;
            let oracle = oracle_fusion(&mut s, t, success, a, b, bits);
            let mut h = g.clone();
            let r = if success {
                h.fuse(t, a, b, bits)
            } else {
                h.fail(t, a, b, bits)
            };
            judge(case, &g, op, oracle, r, || same_graph(&h, &s))?;
        }
    }
    Ok(())
}

fn check_type1(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_fusion(rng, max_q, case, FusionType::TypeOne)
}

fn check_variant(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_fusion(rng, max_q, case, FusionType::Variant)
}

fn check_bell(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_fusion(rng, max_q, case, FusionType::Bell)
}

fn check_xz(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    check_fusion(rng, max_q, case, FusionType::Xz)
}

fn check_redundant_measure(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let rg = random_redundant(rng, max_q, false);
    let qs: Vec<_> = rg.qubits().collect();
    let q = pick(rng, &qs);
    for basis in Pauli::ALL {
        for outcome in [false, true] {
            let op = format!("measure_member({q}, {basis}, {})", u8::from(outcome));
            let mut s =
                build_redundant_state(&rg).map_err(|e| dump(case, &rg, "build".into(), e))?;
            let oracle = s.measure(q, basis, outcome);
            let mut h = rg.clone();
            let r = h.measure_member(q, basis, outcome, None).map(|_| ());
            judge(case, &rg, op, oracle, r, || same_redundant(&h, &s))?;
        }
    }
    Ok(())
}

fn check_redundant_fusion(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let z_preserving = rng.random();
    let rg = random_redundant(rng, max_q, z_preserving);
    let qs: Vec<_> = rg.qubits().collect();
    let a = pick(rng, &qs);
    let others: Vec<_> = qs
        .iter()
        .copied()
        .filter(|q| rg.vertex_of(*q).ok() != rg.vertex_of(a).ok())
        .collect();
    if others.is_empty() {
        return Ok(());
    }
    let b = pick(rng, &others);
    for t in [
        FusionType::TypeOne,
        FusionType::Variant,
        FusionType::Bell,
        FusionType::Xz,
    ] {
        for success in [true, false] {
            for bits in BITS {
                let op = format!("{t:?}({a}, {b}) success={success} bits={bits:?}");
                let mut s =
                    build_redundant_state(&rg).map_err(|e| dump(case, &rg, "build".into(), e))?;
                let oracle = oracle_fusion(&mut s, t, success, a, b, bits);
                let mut h = rg.clone();
                let r = if success {
                    h.fuse(t, a, b, bits)
                } else {
                    h.fail(t, a, b, bits)
                };
                judge(case, &rg, op, oracle, r, || same_redundant(&h, &s))?;
            }
        }
    }
    Ok(())
}

fn check_emission(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let rg = random_redundant(rng, max_q - 1, true);
    let qs: Vec<_> = rg.qubits().collect();
    let e = pick(rng, &qs);
    let op = format!("emit_photon(emitter {e})");
    let mut s = build_redundant_state(&rg).map_err(|err| dump(case, &rg, "build".into(), err))?;
    let mut h = rg.clone();
    let r = h.set_emitter(Some(e)).and_then(|_| h.emit_photon(None));
    let p = match &r {
        Ok(p) => *p,
        Err(err) => return Err(dump(case, &rg, op, format!("rewrite error: {err}"))),
    };
    let oracle = s.apply_emission(e, p).map(|_| 1.0);
    judge(case, &rg, op, oracle, Ok(()), || same_redundant(&h, &s))
}

fn check_hadamard_push(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let rg = random_redundant(rng, max_q, false);
    let multi: Vec<_> = rg
        .qubits()
        .filter(|q| {
            rg.vertex_of(*q)
                .and_then(|v| rg.members(v))
                .map_or(false, |m| m.len() > 1)
        })
        .collect();
    if multi.is_empty() {
        return Ok(());
    }
    let q = pick(rng, &multi);
    let mut s = build_redundant_state(&rg).map_err(|e| dump(case, &rg, "build".into(), e))?;
    let oracle = s.apply_clifford(q, LocalClifford::H).map(|_| 1.0);
    let mut h = rg.clone();
    let r = h.hadamard_push(q).map(|_| ());
    judge(case, &rg, format!("hadamard_push({q})"), oracle, r, || {
        same_redundant(&h, &s)
    })
}

fn check_push_out(rng: &mut ChaCha8Rng, max_q: usize, case: usize) -> CaseResult {
    let rg = random_redundant(rng, max_q, false);
    let qs: Vec<_> = rg.qubits().collect();
    let q = pick(rng, &qs);
    let s = build_redundant_state(&rg).map_err(|e| dump(case, &rg, "build".into(), e))?;
    let mut h = rg.clone();
    match h.push_out(q) {
        Ok(_) => judge(case, &rg, format!("push_out({q})"), Ok(1.0), Ok(()), || {
            same_redundant(&h, &s)
        }),
        Err(Error::SingletonVertex(_)) => Ok(()),
        Err(e) => Err(dump(case, &rg, format!("push_out({q})"), e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_reports_mismatch() {
        let g = GraphState::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut s = build_graph_state(&g).unwrap();
        s.apply_cz(QubitId(0), QubitId(2)).unwrap();
        let r = judge(4, &g, "none".into(), Ok(1.0), Ok(()), || same_graph(&g, &s));
        let c = r.unwrap_err();
        assert_eq!(c.case, 4);
        assert_eq!(c.detail, "state differs from oracle");
        assert!(c.input.get("edges").is_some());
        let r = judge(
            0,
            &g,
            "x".into(),
            Err(Error::ZeroProbability),
            Ok(()),
            || Ok(true),
        );
        assert!(r.is_err());
    }
}
