//! Dense statevector reference simulator.
//!
//! Qubits are kept in ascending id order; the qubit at position `p` is bit
//! `p` of the amplitude index. Removing a qubit contracts the register.

use num_complex::Complex64;
use serde::Serialize;

use crate::clifford::{LocalClifford, Mat2, Pauli};
use crate::error::{Error, Result};
use crate::graph::{GraphState, QubitId};
use crate::redundant::RedundantGraph;

pub const DEFAULT_MAX_QUBITS: usize = 12;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, Serialize)]
pub struct DenseState {
    qubits: Vec<QubitId>,
    #[serde(serialize_with = "ser_amps")]
    amps: Vec<Complex64>,
    #[serde(skip)]
    max_qubits: usize,
}

fn ser_amps<S: serde::Serializer>(
    amps: &[Complex64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(amps.len()))?;
    for a in amps {
        seq.serialize_element(&[a.re, a.im])?;
    }
    seq.end()
}

/// Operators understood by [`DenseState::apply_kraus`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kraus {
    /// `|0⟩⟨00| + (-1)^i |1⟩⟨11|` on `(a, b)`; `b` is removed.
    TypeOne(bool),
    /// `(I + (-1)^j P)/2` on one qubit, which is then removed.
    Project(Pauli, bool),
    Clifford(LocalClifford),
    Cz,
    /// Rank-one projection of `(a, b)` onto the joint eigenstate of
    /// `Z_a Z_b` and `X_a X_b` with eigenvalues `(-1)^zz`, `(-1)^xx`.
    /// Both qubits are removed.
    BellPair {
        zz: bool,
        xx: bool,
    },
    /// As `BellPair` for the operators `X_a Z_b` and `Z_a X_b`.
    XzPair {
        xz: bool,
        zx: bool,
    },
}

impl DenseState {
    /// The empty register (amplitude 1).
    pub fn scalar() -> Self {
        DenseState {
            qubits: Vec::new(),
            amps: vec![ONE],
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }

    pub fn with_max_qubits(mut self, n: usize) -> Self {
        self.max_qubits = n;
        self
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, q: QubitId) -> Result<usize> {
        self.qubits
            .binary_search(&q)
            .map_err(|_| Error::UnknownQubit(q))
    }

    /// Adds qubit `q` in the single-qubit state `v`.
    pub fn add_qubit(&mut self, q: QubitId, v: [Complex64; 2]) -> Result<()> {
        let p = match self.qubits.binary_search(&q) {
            Ok(_) => return Err(Error::DuplicateQubit(q)),
            Err(p) => p,
        };
        if self.qubits.len() + 1 > self.max_qubits {
            return Err(Error::TooManyQubits(self.qubits.len() + 1, self.max_qubits));
        }
        let low = (1usize << p) - 1;
        let mut out = vec![ZERO; self.amps.len() * 2];
        for (j, o) in out.iter_mut().enumerate() {
            let bit = (j >> p) & 1;
            let old = (j & low) | ((j >> (p + 1)) << p);
            *o = self.amps[old] * v[bit];
        }
        self.qubits.insert(p, q);
        self.amps = out;
        Ok(())
    }

    pub fn add_plus(&mut self, q: QubitId) -> Result<()> {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.add_qubit(q, [r, r])
    }

    pub fn apply_matrix(&mut self, q: QubitId, m: &Mat2) -> Result<()> {
        let p = self.position(q)?;
        let bit = 1usize << p;
        for j in 0..self.amps.len() {
            if j & bit == 0 {
                let (a0, a1) = (self.amps[j], self.amps[j | bit]);
                self.amps[j] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_clifford(&mut self, q: QubitId, c: LocalClifford) -> Result<()> {
        self.apply_matrix(q, &c.matrix())
    }

    pub fn apply_cz(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        if a == b {
            return Err(Error::SameQubit(a));
        }
        let mask = (1usize << self.position(a)?) | (1usize << self.position(b)?);
        for (j, amp) in self.amps.iter_mut().enumerate() {
            if j & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Emission isometry `|0⟩⟨0| ⊗ |0⟩ + |1⟩⟨1| ⊗ |1⟩` copying the
    /// computational basis of `emitter` onto a new qubit `new`.
    pub fn apply_emission(&mut self, emitter: QubitId, new: QubitId) -> Result<()> {
        self.position(emitter)?;
        self.add_qubit(new, [ONE, ZERO])?;
        self.apply_cnot(emitter, new)
    }

    fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<()> {
        let c = 1usize << self.position(control)?;
        let t = 1usize << self.position(target)?;
        for j in 0..self.amps.len() {
            if j & c != 0 && j & t == 0 {
                self.amps.swap(j, j | t);
            }
        }
        Ok(())
    }

    /// Contracts the qubits `targets` with the bra `⟨phi|` (index bit `i` of
    /// `phi` belongs to `targets[i]`) and removes them.
    fn contract(&mut self, targets: &[QubitId], phi: &[Complex64]) -> Result<()> {
        let pos: Vec<usize> = targets
            .iter()
            .map(|&q| self.position(q))
            .collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.qubits.len())
            .filter(|p| !pos.contains(p))
            .collect();
        let mut out = vec![ZERO; 1 << keep.len()];
        for (j, amp) in self.amps.iter().enumerate() {
            let mut t = 0;
            for (i, &p) in pos.iter().enumerate() {
                t |= ((j >> p) & 1) << i;
            }
            let mut k = 0;
            for (i, &p) in keep.iter().enumerate() {
                k |= ((j >> p) & 1) << i;
            }
            out[k] += phi[t].conj() * amp;
        }
        self.qubits = keep.iter().map(|&p| self.qubits[p]).collect();
        self.amps = out;
        Ok(())
    }

    fn normalize(&mut self) -> Result<f64> {
        let p = self.norm_sqr();
        if p < 1e-12 {
            return Err(Error::ZeroProbability);
        }
        let s = p.sqrt();
        for a in &mut self.amps {
            *a /= s;
        }
        Ok(p)
    }

    /// Applies `op` to `targets`, returning the probability of the branch
    /// (the squared norm before renormalisation; 1 for unitaries).
    pub fn apply_kraus(&mut self, op: Kraus, targets: &[QubitId]) -> Result<f64> {
        let need = match op {
            Kraus::Project(..) | Kraus::Clifford(_) => 1,
            _ => 2,
        };
        if targets.len() != need {
            return Err(Error::InvalidParameter(format!(
                "{op:?} acts on {need} qubits, got {}",
                targets.len()
            )));
        }
        if need == 2 && targets[0] == targets[1] {
            return Err(Error::SameQubit(targets[0]));
        }
        let before = self.norm_sqr();
        match op {
            Kraus::Clifford(c) => {
                self.apply_clifford(targets[0], c)?;
                return Ok(1.0);
            }
            Kraus::Cz => {
                self.apply_cz(targets[0], targets[1])?;
                return Ok(1.0);
            }
            Kraus::Project(p, j) => {
                let e = eigenvector(p, j);
                self.contract(&targets[..1], &e)?;
            }
            Kraus::TypeOne(i) => {
                let (a, b) = (targets[0], targets[1]);
                let pa = 1usize << self.position(a)?;
                let pb = 1usize << self.position(b)?;
                for (j, amp) in self.amps.iter_mut().enumerate() {
                    let (xa, xb) = (j & pa != 0, j & pb != 0);
                    if xa != xb {
                        *amp = ZERO;
                    } else if xa && i {
                        *amp = -*amp;
                    }
                }
                // keep b's bit equal to a's, then drop b by contracting with ⟨0|+⟨1|
                self.contract(&[b], &[ONE, ONE])?;
            }
            Kraus::BellPair { zz, xx } => {
                self.contract(targets, &bell_vector(zz, xx))?;
            }
            Kraus::XzPair { xz, zx } => {
                // H_b maps the X_a X_b / Z_a Z_b eigenbasis onto X_a Z_b / Z_a X_b
                let v = bell_vector(zx, xz);
                let h = LocalClifford::H.matrix();
                let mut w = [ZERO; 4];
                for (ta, wa) in [(0usize, 0usize), (1, 1)] {
                    for tb in 0..2 {
                        for sb in 0..2 {
                            w[ta | (tb << 1)] += h[tb][sb] * v[wa | (sb << 1)];
                        }
                    }
                }
                self.contract(targets, &w)?;
            }
        }
        let after = self.normalize()?;
        Ok(after / before)
    }

    /// Measures `q` in `basis` with the given outcome, removing it.
    pub fn measure(&mut self, q: QubitId, basis: Pauli, outcome: bool) -> Result<f64> {
        self.apply_kraus(Kraus::Project(basis, outcome), &[q])
    }

    pub fn equal_up_to_phase(&self, other: &DenseState, tol: f64) -> Result<bool> {
        if self.qubits != other.qubits {
            return Err(Error::RegisterMismatch);
        }
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let n = (self.norm_sqr() * other.norm_sqr()).sqrt();
        if n < 1e-300 {
            return Ok(false);
        }
        let phase = inner / inner.norm().max(1e-300);
        let scale = (other.norm_sqr() / self.norm_sqr()).sqrt();
        let max_dev = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase * scale - b).norm())
            .fold(0.0, f64::max);
        Ok(max_dev <= tol)
    }

    /// Removes `q` if it is unentangled with the rest, returning its state.
    pub fn split_off(&mut self, q: QubitId) -> Result<[Complex64; 2]> {
        let p = self.position(q)?;
        let bit = 1usize << p;
        let (i0, _) = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let rest = i0 & !bit;
        let mut v = [self.amps[rest], self.amps[rest | bit]];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        v[0] /= n;
        v[1] /= n;
        let mut trial = self.clone();
        trial.contract(&[q], &v)?;
        let mut rebuilt = trial.clone();
        rebuilt.add_qubit(q, v)?;
        if !rebuilt.equal_up_to_phase(self, 1e-9)? {
            return Err(Error::InvalidParameter(format!("qubit {q} is entangled")));
        }
        *self = trial;
        Ok(v)
    }
}

fn eigenvector(p: Pauli, outcome: bool) -> [Complex64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = if outcome { -1.0 } else { 1.0 };
    match p {
        Pauli::Z if !outcome => [ONE, ZERO],
        Pauli::Z => [ZERO, ONE],
        Pauli::X => [Complex64::new(r, 0.0), Complex64::new(s * r, 0.0)],
        Pauli::Y => [Complex64::new(r, 0.0), Complex64::new(0.0, s * r)],
    }
}

/// `(|0, zz⟩ + (-1)^xx |1, 1-zz⟩)/√2` with index `xa + 2 xb`.
fn bell_vector(zz: bool, xx: bool) -> [Complex64; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = [ZERO; 4];
    let b = zz as usize;
    v[b << 1] = Complex64::new(r, 0.0);
    v[1 | ((1 - b) << 1)] = Complex64::new(if xx { -r } else { r }, 0.0);
    v
}

/// `⊗|+⟩`, CZ on every edge, then each qubit's frame.
pub fn build_graph_state(g: &GraphState) -> Result<DenseState> {
    build_graph_state_with_limit(g, DEFAULT_MAX_QUBITS)
}

pub fn build_graph_state_with_limit(g: &GraphState, max_qubits: usize) -> Result<DenseState> {
    if g.len() > max_qubits {
        return Err(Error::TooManyQubits(g.len(), max_qubits));
    }
    let mut s = DenseState::scalar().with_max_qubits(max_qubits);
    for v in g.vertices() {
        s.add_plus(v)?;
    }
    for (a, b) in g.edges() {
        s.apply_cz(a, b)?;
    }
    for (q, f) in g.frames() {
        s.apply_clifford(q, f)?;
    }
    Ok(s)
}

/// A GHZ block per vertex, a CZ per logical edge, then the frames.
///
/// The CZ of a logical edge is placed on the highest-id member of each
/// endpoint; the rewrite rules place byproducts on the lowest-id member, so
/// agreement also exercises the member symmetry of the encoding.
pub fn build_redundant_state(rg: &RedundantGraph) -> Result<DenseState> {
    build_redundant_state_with_limit(rg, DEFAULT_MAX_QUBITS)
}

pub fn build_redundant_state_with_limit(
    rg: &RedundantGraph,
    max_qubits: usize,
) -> Result<DenseState> {
    if rg.qubit_count() > max_qubits {
        return Err(Error::TooManyQubits(rg.qubit_count(), max_qubits));
    }
    let mut s = DenseState::scalar().with_max_qubits(max_qubits);
    for (_, members) in rg.vertices() {
        let mut it = members.iter();
        let first = *it.next().expect("nonempty vertex");
        s.add_plus(first)?;
        for &m in it {
            s.apply_emission(first, m)?;
        }
    }
    for (a, b) in rg.edges() {
        let ha = *rg.members(a)?.iter().next_back().unwrap();
        let hb = *rg.members(b)?.iter().next_back().unwrap();
        s.apply_cz(ha, hb)?;
    }
    for (q, f) in rg.frames() {
        s.apply_clifford(q, f)?;
    }
    Ok(s)
}
