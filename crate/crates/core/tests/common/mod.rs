#![allow(dead_code)]

use hybridgen::oracle::{build_graph_state, build_redundant_state, DenseState, DEFAULT_TOLERANCE};
use hybridgen::{GraphState, LocalClifford, QubitId, RedundantGraph};
use proptest::prelude::*;

/// Frames that keep the Z axis (diagonal, or diagonal times X).
pub const Z_PRESERVING: [usize; 8] = [0, 1, 2, 3, 8, 9, 10, 11];

pub fn arb_graph(max_n: usize, frames: bool) -> impl Strategy<Value = GraphState> {
    (1..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
            prop::collection::vec(0..24usize, n),
        )
            .prop_map(move |(bits, fr)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for a in 0..n as u32 {
                    for b in a + 1..n as u32 {
                        if bits[k] {
                            edges.push((a, b));
                        }
                        k += 1;
                    }
                }
                let mut g = GraphState::from_edges(n, &edges).unwrap();
                if frames {
                    for (i, f) in fr.into_iter().enumerate() {
                        g.set_frame(QubitId(i as u32), LocalClifford::from_index(f).unwrap())
                            .unwrap();
                    }
                }
                g
            })
    })
}

/// Random redundant graph: vertex sizes, edges and per-qubit frames.
/// `frame_pool` lists allowed Clifford indices.
pub fn arb_redundant(
    max_qubits: usize,
    frame_pool: &'static [usize],
) -> impl Strategy<Value = RedundantGraph> {
    prop::collection::vec(1..=3usize, 1..=max_qubits)
        .prop_map(move |mut sizes| {
            let mut total = 0;
            sizes.retain(|&s| {
                total += s;
                total <= max_qubits
            });
            sizes
        })
        .prop_flat_map(move |sizes| {
            let n = sizes.len();
            let q: usize = sizes.iter().sum();
            (
                Just(sizes),
                prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
                prop::collection::vec(prop::sample::select(frame_pool), q),
            )
        })
        .prop_map(|(sizes, bits, fr)| {
            let mut rg = RedundantGraph::new();
            let vs: Vec<_> = sizes.iter().map(|&s| rg.add_ghz(s).unwrap()).collect();
            let mut k = 0;
            for a in 0..vs.len() {
                for b in a + 1..vs.len() {
                    if bits[k] {
                        rg.toggle_edge(vs[a], vs[b]).unwrap();
                    }
                    k += 1;
                }
            }
            let qs: Vec<_> = rg.qubits().collect();
            for (q, f) in qs.into_iter().zip(fr) {
                rg.set_frame(q, LocalClifford::from_index(f).unwrap())
                    .unwrap();
            }
            rg
        })
}

pub fn all_frames() -> &'static [usize] {
    static ALL: [usize; 24] = [
        0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23,
    ];
    &ALL
}

pub fn same_graph(g: &GraphState, s: &DenseState) -> bool {
    build_graph_state(g)
        .unwrap()
        .equal_up_to_phase(s, DEFAULT_TOLERANCE)
        .unwrap()
}

/// Compares after splitting off qubits the oracle still holds but the
/// rewrite dropped (collapsed GHZ members).
pub fn same_redundant(rg: &RedundantGraph, s: &DenseState) -> bool {
    let mut s = s.clone();
    let extra: Vec<_> = s
        .qubits()
        .iter()
        .copied()
        .filter(|q| !rg.contains(*q))
        .collect();
    for q in extra {
        if s.split_off(q).is_err() {
            return false;
        }
    }
    build_redundant_state(rg)
        .unwrap()
        .equal_up_to_phase(&s, DEFAULT_TOLERANCE)
        .unwrap()
}
