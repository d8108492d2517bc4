mod common;

use common::{all_frames, arb_redundant, same_graph, same_redundant, Z_PRESERVING};
use hybridgen::oracle::{build_graph_state, build_redundant_state, DEFAULT_TOLERANCE};
use hybridgen::{Error, LocalClifford, MeasureKind, Pauli, QubitId, RedundantGraph};
use proptest::prelude::*;

fn pick(rg: &RedundantGraph, i: prop::sample::Index) -> QubitId {
    let qs: Vec<_> = rg.qubits().collect();
    qs[i.index(qs.len())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn physical_form_matches_encoding(rg in arb_redundant(8, all_frames())) {
        let s = build_redundant_state(&rg).unwrap();
        prop_assert!(same_graph(&rg.to_physical(), &s));
    }

    #[test]
    fn measurements_match_oracle(
        rg in arb_redundant(8, all_frames()),
        i in any::<prop::sample::Index>(),
        basis in prop::sample::select(Pauli::ALL.to_vec()),
        outcome in any::<bool>(),
    ) {
        let q = pick(&rg, i);
        let mut s = build_redundant_state(&rg).unwrap();
        let p = s.measure(q, basis, outcome);
        let mut h = rg.clone();
        let r = h.measure_member(q, basis, outcome, None);
        match p {
            Err(Error::ZeroProbability) => {
                prop_assert_eq!(rg.forced_outcome(q, basis).unwrap(), Some(!outcome));
                let impossible = matches!(r, Err(Error::ImpossibleOutcome { .. }));
                prop_assert!(impossible);
            }
            Ok(p) => {
                let r = r.unwrap();
                let want = if r.kind == MeasureKind::Deterministic { 1.0 } else { 0.5 };
                prop_assert!((p - want).abs() < 1e-10);
                prop_assert!(!h.contains(q));
                for m in &r.removed {
                    prop_assert!(!h.contains(*m));
                }
                prop_assert!(same_redundant(&h, &s));
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn gates_match_oracle(
        rg in arb_redundant(8, all_frames()),
        i in any::<prop::sample::Index>(),
        c in 0..24usize,
        p in prop::sample::select(Pauli::ALL.to_vec()),
    ) {
        let q = pick(&rg, i);
        let c = LocalClifford::from_index(c).unwrap();
        let mut s = build_redundant_state(&rg).unwrap();
        s.apply_clifford(q, c).unwrap();
        let mut h = rg.clone();
        h.apply_clifford(q, c).unwrap();
        prop_assert!(same_redundant(&h, &s));

        let mut s = build_redundant_state(&rg).unwrap();
        s.apply_clifford(q, LocalClifford::pauli(p)).unwrap();
        let mut h = rg.clone();
        h.apply_pauli(q, p).unwrap();
        prop_assert!(same_redundant(&h, &s));
    }

    #[test]
    fn hadamard_push_and_push_out(rg in arb_redundant(8, all_frames()), i in any::<prop::sample::Index>()) {
        let q = pick(&rg, i);
        let v = rg.vertex_of(q).unwrap();
        let size = rg.members(v).unwrap().len();
        let mut h = rg.clone();
        let mut s = build_redundant_state(&rg).unwrap();
        s.apply_clifford(q, LocalClifford::H).unwrap();
        match h.hadamard_push(q) {
            Ok(nv) => {
                prop_assert!(size >= 2);
                prop_assert_eq!(h.members(nv).unwrap().len(), 1);
                prop_assert!(h.has_edge(nv, v));
                prop_assert!(same_redundant(&h, &s));
            }
            Err(Error::SingletonVertex(_)) => prop_assert_eq!(size, 1),
            Err(e) => panic!("{e}"),
        }
        let mut h = rg.clone();
        if h.push_out(q).is_ok() {
            prop_assert!(same_redundant(&h, &build_redundant_state(&rg).unwrap()));
            h.pull_in(q).unwrap();
            prop_assert!(h.same_structure(&rg, false));
        }
        let mut h = rg.clone();
        if h.pull_in(q).is_ok() {
            prop_assert!(same_redundant(&h, &build_redundant_state(&rg).unwrap()));
        }
    }

    #[test]
    fn local_complement_at_single_member_vertex(rg in arb_redundant(8, all_frames()), i in any::<prop::sample::Index>()) {
        let q = pick(&rg, i);
        let v = rg.vertex_of(q).unwrap();
        let mut h = rg.clone();
        if rg.members(v).unwrap().len() == 1 {
            h.local_complement(v).unwrap();
            prop_assert!(same_redundant(&h, &build_redundant_state(&rg).unwrap()));
        } else {
            prop_assert!(h.local_complement(v).is_err());
        }
    }

    #[test]
    fn emission_matches_oracle(rg in arb_redundant(7, &Z_PRESERVING), i in any::<prop::sample::Index>()) {
        let e = pick(&rg, i);
        let mut h = rg.clone();
        h.set_emitter(Some(e)).unwrap();
        let p = h.emit_photon(None).unwrap();
        prop_assert_eq!(h.vertex_of(p).unwrap(), h.vertex_of(e).unwrap());
        let mut s = build_redundant_state(&rg).unwrap();
        s.apply_emission(e, p).unwrap();
        prop_assert!(same_redundant(&h, &s));

        // X-measuring the fresh photon with outcome 0 undoes the emission
        h.measure_x(p, false).unwrap();
        prop_assert!(same_redundant(&h, &build_redundant_state(&rg).unwrap()));
    }
}

#[test]
fn emission_then_z_measurement_collapses_vertex() {
    let mut rg = RedundantGraph::new();
    let e = rg.init_emitter(None).unwrap();
    rg.hadamard_emitter().unwrap();
    let p = rg.emit_photon(None).unwrap();
    let before = build_redundant_state(&rg).unwrap();
    let r = rg.measure_z(p, false).unwrap();
    assert_eq!(r.removed, vec![p, e]);
    assert_eq!(r.collapsed_value, Some(false));
    assert_eq!(rg.qubit_count(), 0);
    let mut s = before;
    s.measure(p, Pauli::Z, false).unwrap();
    assert!(same_redundant(&rg, &s));
}

#[test]
fn emitter_lifecycle() {
    let mut rg = RedundantGraph::new();
    assert!(matches!(rg.emit_photon(None), Err(Error::NoEmitter)));
    assert!(matches!(rg.hadamard_emitter(), Err(Error::NoEmitter)));
    let e = rg.init_emitter(None).unwrap();
    assert!(matches!(rg.init_emitter(None), Err(Error::EmitterExists)));
    assert!(matches!(
        rg.emit_photon(None),
        Err(Error::UnsupportedFrame { .. })
    ));
    rg.hadamard_emitter().unwrap();
    assert!(matches!(
        rg.hadamard_emitter(),
        Err(Error::EmptyEmitterVertex)
    ));
    let p1 = rg.emit_photon(None).unwrap();
    assert!(matches!(
        rg.emit_photon(Some(p1)),
        Err(Error::DuplicateQubit(_))
    ));
    rg.hadamard_emitter().unwrap();
    assert_eq!(rg.vertex_count(), 2);
    assert_eq!(rg.members(rg.vertex_of(e).unwrap()).unwrap().len(), 1);
    assert!(matches!(
        rg.hadamard_emitter(),
        Err(Error::EmptyEmitterVertex)
    ));
}

#[test]
fn lone_emitter_measured_out_leaves_nothing() {
    let mut rg = RedundantGraph::new();
    rg.init_emitter(None).unwrap();
    rg.hadamard_emitter().unwrap();
    let r = rg.measure_out_emitter(false).unwrap();
    assert_eq!(r.kind, MeasureKind::Deterministic);
    assert_eq!(rg.qubit_count(), 0);
    assert!(rg.emitter().is_none());
}

#[test]
fn ghz_with_emitter_measured_out() {
    let mut rg = RedundantGraph::new();
    rg.init_emitter(None).unwrap();
    rg.hadamard_emitter().unwrap();
    for _ in 0..3 {
        rg.emit_photon(None).unwrap();
    }
    for outcome in [false, true] {
        let mut h = rg.clone();
        let e = h.emitter().unwrap();
        let mut s = build_redundant_state(&h).unwrap();
        s.measure(e, Pauli::X, outcome).unwrap();
        h.measure_out_emitter(outcome).unwrap();
        assert_eq!(h.vertex_count(), 1);
        assert_eq!(h.qubit_count(), 3);
        assert!(same_redundant(&h, &s));
    }
}

#[test]
fn star_from_pushed_ghz() {
    let mut rg = RedundantGraph::new();
    let v = rg.add_ghz(3).unwrap();
    let m: Vec<_> = rg.members(v).unwrap().iter().copied().collect();
    rg.hadamard_push(m[1]).unwrap();
    rg.hadamard_push(m[2]).unwrap();
    assert_eq!(rg.vertex_count(), 3);
    assert_eq!(rg.neighbors(v).unwrap().len(), 2);
    assert_eq!(rg.edges().len(), 2);
    assert!(rg.frames().next().is_none());

    // the same GHZ in physical form is already a star, up to H on the leaves
    let mut ghz = RedundantGraph::new();
    ghz.add_ghz(3).unwrap();
    let g = ghz.to_physical();
    assert_eq!(g.edges().len(), 2);
    assert_eq!(g.frame(QubitId(1)), LocalClifford::H);
}

#[test]
fn z_on_middle_vertex_splits_chain() {
    let mut rg = RedundantGraph::new();
    let a = rg.add_ghz(2).unwrap();
    let b = rg.add_ghz(3).unwrap();
    let c = rg.add_ghz(2).unwrap();
    rg.toggle_edge(a, b).unwrap();
    rg.toggle_edge(b, c).unwrap();
    let q = *rg.members(b).unwrap().iter().nth(1).unwrap();
    rg.measure_z(q, true).unwrap();
    assert_eq!(rg.vertex_count(), 2);
    assert!(rg.edges().is_empty());
}

#[test]
fn json_round_trip() {
    let mut rg = RedundantGraph::new();
    rg.init_emitter(None).unwrap();
    rg.hadamard_emitter().unwrap();
    rg.emit_photon(None).unwrap();
    rg.emit_photon(None).unwrap();
    rg.hadamard_emitter().unwrap();
    let s = serde_json::to_string(&rg).unwrap();
    assert_eq!(
        s,
        r#"{"vertices":[{"id":0,"members":[1,2],"emitter":false},{"id":1,"members":[0],"emitter":true}],"edges":[[0,1]],"frames":{},"emitter_qubit":0}"#
    );
    let back: RedundantGraph = serde_json::from_str(&s).unwrap();
    assert!(back.same_structure(&rg, false));
    assert!(build_redundant_state(&back)
        .unwrap()
        .equal_up_to_phase(
            &build_graph_state(&rg.to_physical()).unwrap(),
            DEFAULT_TOLERANCE
        )
        .unwrap());
}
