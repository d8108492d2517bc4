//! The single-qubit Clifford group modulo global phase.
//!
//! Every element is stored as an index into a fixed table of 24 matrices.
//! The canonical name of an element is a Pauli prefix followed by one of
//! six coset representatives (`I`, `H`, `S`, `HS`, `SH`, `HSH`), read as a
//! matrix product: `ZS` is the matrix `Z * S`, i.e. apply `S` then `Z`.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub type Mat2 = [[Complex64; 2]; 2];

const NAMES: [&str; 24] = [
    "I", "X", "Y", "Z", //
    "H", "XH", "YH", "ZH", //
    "S", "XS", "YS", "ZS", //
    "HS", "XHS", "YHS", "ZHS", //
    "SH", "XSH", "YSH", "ZSH", //
    "HSH", "XHSH", "YHSH", "ZHSH",
];

/// Single-qubit Pauli operator (identity excluded).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Mat2 {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// An element of the 24-element single-qubit Clifford group, up to phase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalClifford(u8);

/// One local-complementation step used to rewrite a frame toward identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LcStep {
    /// Complement at the qubit itself: right-multiplies its frame by the
    /// inverse of `sqrt(-iX)`.
    Vertex,
    /// Complement at a neighbour: right-multiplies the frame by the inverse
    /// of `sqrt(iZ)`.
    Neighbor,
}

struct Tables {
    mats: [Mat2; 24],
    mul: [[u8; 24]; 24],
    inv: [u8; 24],
    // conj[c][p] = c^dagger * p * c as (negative, pauli)
    conj: [[(bool, Pauli); 3]; 24],
    lc_vertex: u8,
    lc_neighbor: u8,
    words: Vec<Vec<LcStep>>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Returns `Some(phase)` with `b = phase * a` when the matrices agree up to a
/// unit-modulus factor.
pub fn phase_between(a: &Mat2, b: &Mat2) -> Option<Complex64> {
    let (mut bi, mut bj, mut best) = (0, 0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            if a[i][j].norm() > best {
                best = a[i][j].norm();
                bi = i;
                bj = j;
            }
        }
    }
    if best < 1e-12 {
        return None;
    }
    let ratio = b[bi][bj] / a[bi][bj];
    if (ratio.norm() - 1.0).abs() > 1e-9 {
        return None;
    }
    for i in 0..2 {
        for j in 0..2 {
            if (b[i][j] - ratio * a[i][j]).norm() > 1e-9 {
                return None;
            }
        }
    }
    Some(ratio)
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let id: Mat2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let h: Mat2 = [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]];
    let s: Mat2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]];
    let bases = [
        id,
        h,
        s,
        matmul(&h, &s),
        matmul(&s, &h),
        matmul(&matmul(&h, &s), &h),
    ];
    let paulis = [id, Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix()];

    let mut mats = [id; 24];
    for (b, base) in bases.iter().enumerate() {
        for (p, pauli) in paulis.iter().enumerate() {
            mats[4 * b + p] = matmul(pauli, base);
        }
    }
    let find = |m: &Mat2| -> u8 {
        mats.iter()
            .position(|x| phase_between(x, m).is_some())
            .expect("Clifford table is closed") as u8
    };

    let mut mul = [[0u8; 24]; 24];
    let mut inv = [0u8; 24];
    for a in 0..24 {
        for b in 0..24 {
            mul[a][b] = find(&matmul(&mats[a], &mats[b]));
        }
        inv[a] = find(&dagger(&mats[a]));
    }

    let mut conj = [[(false, Pauli::X); 3]; 24];
    for (k, m) in mats.iter().enumerate() {
        for (pi, p) in Pauli::ALL.iter().enumerate() {
            let out = matmul(&matmul(&dagger(m), &p.matrix()), m);
            conj[k][pi] = Pauli::ALL
                .iter()
                .find_map(|q| {
                    phase_between(&q.matrix(), &out).and_then(|ph| {
                        if (ph.re - 1.0).abs() < 1e-9 {
                            Some((false, *q))
                        } else if (ph.re + 1.0).abs() < 1e-9 {
                            Some((true, *q))
                        } else {
                            None
                        }
                    })
                })
                .expect("Clifford conjugation maps Paulis to signed Paulis");
        }
    }

    // sqrt(-iX) = exp(-i pi/4 X), sqrt(iZ) = exp(i pi/4 Z)
    let sqrt_mix: Mat2 = [[c(r, 0.0), c(0.0, -r)], [c(0.0, -r), c(r, 0.0)]];
    let sqrt_iz: Mat2 = [[c(r, r), c(0.0, 0.0)], [c(0.0, 0.0), c(r, -r)]];
    let lc_vertex = find(&dagger(&sqrt_mix));
    let lc_neighbor = find(&dagger(&sqrt_iz));

    // Shortest words w with e * w = I, by breadth-first search over the group.
    let mut words: Vec<Option<Vec<LcStep>>> = vec![None; 24];
    words[0] = Some(Vec::new());
    let mut frontier = vec![0u8];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &e in &frontier {
            // e * w = I; predecessors p with p * g = e have word g :: w
            for (step, g) in [(LcStep::Vertex, lc_vertex), (LcStep::Neighbor, lc_neighbor)] {
                let p = mul[e as usize][inv[g as usize] as usize];
                if words[p as usize].is_none() {
                    let mut w = vec![step];
                    w.extend(words[e as usize].as_ref().unwrap().iter().copied());
                    words[p as usize] = Some(w);
                    next.push(p);
                }
            }
        }
        frontier = next;
    }

    Tables {
        mats,
        mul,
        inv,
        conj,
        lc_vertex,
        lc_neighbor,
        words: words
            .into_iter()
            .map(|w| w.expect("generators span the group"))
            .collect(),
    }
}

impl LocalClifford {
    pub const IDENTITY: LocalClifford = LocalClifford(0);
    pub const X: LocalClifford = LocalClifford(1);
    pub const Y: LocalClifford = LocalClifford(2);
    pub const Z: LocalClifford = LocalClifford(3);
    pub const H: LocalClifford = LocalClifford(4);
    pub const S: LocalClifford = LocalClifford(8);
    /// `S` inverse (`Z * S` up to phase).
    pub const S_DAG: LocalClifford = LocalClifford(11);

    pub fn all() -> impl Iterator<Item = LocalClifford> {
        (0..24u8).map(LocalClifford)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Option<LocalClifford> {
        (i < 24).then_some(LocalClifford(i as u8))
    }

    pub fn pauli(p: Pauli) -> LocalClifford {
        match p {
            Pauli::X => Self::X,
            Pauli::Y => Self::Y,
            Pauli::Z => Self::Z,
        }
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0 as usize]
    }

    pub fn matrix(self) -> Mat2 {
        tables().mats[self.0 as usize]
    }

    pub fn from_matrix(m: &Mat2) -> Option<LocalClifford> {
        tables()
            .mats
            .iter()
            .position(|x| phase_between(x, m).is_some())
            .map(|i| LocalClifford(i as u8))
    }

    pub fn inverse(self) -> LocalClifford {
        LocalClifford(tables().inv[self.0 as usize])
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// `C^dagger P C = (-1)^neg * Q`, returned as `(neg, Q)`.
    pub fn conjugate(self, p: Pauli) -> (bool, Pauli) {
        let pi = match p {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
        };
        tables().conj[self.0 as usize][pi]
    }

    /// Diagonal in the computational basis (`I`, `Z`, `S`, `S_DAG`); these
    /// commute with CZ.
    pub fn is_diagonal(self) -> bool {
        self.conjugate(Pauli::Z) == (false, Pauli::Z)
    }

    /// Maps `Z` to `+Z` or `-Z`: a diagonal element, possibly times `X`.
    pub fn preserves_z_axis(self) -> bool {
        self.conjugate(Pauli::Z).1 == Pauli::Z
    }

    /// Frame correction absorbed at a vertex when its neighbourhood is
    /// complemented without changing the state.
    pub(crate) fn lc_vertex_correction() -> LocalClifford {
        LocalClifford(tables().lc_vertex)
    }

    /// Frame correction absorbed by each neighbour of the complemented vertex.
    pub(crate) fn lc_neighbor_correction() -> LocalClifford {
        LocalClifford(tables().lc_neighbor)
    }

    pub(crate) fn reduction_word(self) -> &'static [LcStep] {
        &tables().words[self.0 as usize]
    }
}

impl Default for LocalClifford {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for LocalClifford {
    type Output = LocalClifford;

    /// Matrix product: `(a * b)` applies `b` first.
    fn mul(self, rhs: LocalClifford) -> LocalClifford {
        LocalClifford(tables().mul[self.0 as usize][rhs.0 as usize])
    }
}

impl fmt::Debug for LocalClifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for LocalClifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LocalClifford {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let alias = match s {
            "Sdg" | "SDG" | "S_DAG" => "ZS",
            "" => "I",
            other => other,
        };
        NAMES
            .iter()
            .position(|n| *n == alias)
            .map(|i| LocalClifford(i as u8))
            .ok_or_else(|| Error::Parse(format!("unknown Clifford tag `{s}`")))
    }
}

impl Serialize for LocalClifford {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LocalClifford {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
