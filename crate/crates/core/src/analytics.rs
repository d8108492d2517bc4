//! Closed-form success probabilities and rates.
//!
//! `eta` is the probability that a photon is detected. A boosted fusion
//! with `m` photon pairs succeeds with `(1 - 2^-m) eta^(2m)`; everything
//! else here is built from that and from binomial supply statistics for
//! multiplexed factories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Cell, Table};

/// Default cap on the optimal allocation (the optimum diverges at `eta = 1`).
pub const DEFAULT_M_CAP: u32 = 30;
/// Default ancilla budget searched for the ancilla-assisted schemes.
pub const DEFAULT_ANCILLA_CAP: u64 = 1 << 12;
/// Relative slack used when comparing probabilities that may coincide.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "detection probability must lie in [0, 1], got {eta}"
        )))
    }
}

fn check_positive(name: &str, v: u64) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be >= 1")))
    }
}

/// `p^n`, through logarithms once the exponent is large.
pub fn pow_prob(p: f64, n: u64) -> f64 {
    if n == 0 {
        1.0
    } else if n <= 50 {
        p.powi(n as i32)
    } else if p == 0.0 {
        0.0
    } else {
        (n as f64 * p.ln()).exp()
    }
}

/// Success probability of a boosted type II fusion with `m` attempts.
pub fn p_boosted(m: u32, eta: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "boosted fusion needs m >= 1".into(),
        ));
    }
    check_eta(eta)?;
    Ok((1.0 - 0.5f64.powi(m as i32)) * pow_prob(eta * eta, m.into()))
}

/// `f(m) = (1 - 2^-m) / (1 - 2^-(m+1))`, with `f(0) = 0`. Adding a pair to
/// `m` pays off exactly when `eta^2 > f(m)`.
pub fn improvement_factor(m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let a = 0.5f64.powi(m as i32);
    (1.0 - a) / (1.0 - a / 2.0)
}

/// Optimal photon-pair allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MOpt {
    pub m: u32,
    /// The search stopped at the cap; the true optimum is larger.
    pub capped: bool,
}

pub fn m_opt(eta: f64) -> Result<MOpt> {
    m_opt_with_cap(eta, DEFAULT_M_CAP)
}

/// Smallest `m >= 1` with `eta^2 <= f(m)`. On a tie the smaller allocation
/// is kept, since both give the same probability.
pub fn m_opt_with_cap(eta: f64, cap: u32) -> Result<MOpt> {
    check_eta(eta)?;
    if eta == 0.0 {
        return Err(Error::InvalidParameter(
            "m_opt is undefined for eta = 0".into(),
        ));
    }
    if cap == 0 {
        return Err(Error::InvalidParameter("m cap must be >= 1".into()));
    }
    let e2 = eta * eta;
    let mut m = 1;
    while e2 > improvement_factor(m) * (1.0 + TIE_TOLERANCE) {
        if m == cap {
            return Ok(MOpt { m, capped: true });
        }
        m += 1;
    }
    Ok(MOpt { m, capped: false })
}

/// `eta` at which the optimum steps from `m` to `m + 1`.
pub fn m_opt_boundary(m: u32) -> f64 {
    improvement_factor(m).sqrt()
}

pub fn p_boosted_opt(eta: f64) -> Result<(f64, MOpt)> {
    let m = m_opt(eta)?;
    Ok((p_boosted(m.m, eta)?, m))
}

/// Number of boosted fusions joining `n2` linear clusters of `n1` vertices.
pub fn n_fusions_2d(n1: u64, n2: u64) -> u64 {
    n1 * n2.saturating_sub(1)
}

pub fn p_cluster_2d(n1: u64, n2: u64, m: u32, eta: f64) -> Result<f64> {
    check_positive("n1", n1)?;
    check_positive("n2", n2)?;
    Ok(pow_prob(p_boosted(m, eta)?, n_fusions_2d(n1, n2)))
}

/// All-photonic reference: every edge of the `n1 x n2` lattice is made by a
/// fusion succeeding with `eta^2 / 2`.
pub fn p_allphotonic_2d(n1: u64, n2: u64, eta: f64) -> Result<f64> {
    check_positive("n1", n1)?;
    check_positive("n2", n2)?;
    check_eta(eta)?;
    let edges = n1 * (n2 - 1) + n2 * (n1 - 1);
    Ok(pow_prob(eta * eta / 2.0, edges))
}

/// Time to emit one redundantly encoded linear cluster of `n1` vertices
/// with `2m + 1` photons each.
pub fn t_ext(m: u32, n1: u64, t_emit: f64, t_h: f64) -> Result<f64> {
    if !(t_emit >= 0.0 && t_h >= 0.0) {
        return Err(Error::InvalidParameter(
            "durations must be non-negative".into(),
        ));
    }
    Ok(n1 as f64 * ((2 * m + 1) as f64 * t_emit + t_h))
}

pub fn rate_2d(n1: u64, n2: u64, m: u32, eta: f64, t_emit: f64, t_h: f64) -> Result<f64> {
    let t = t_ext(m, n1, t_emit, t_h)?;
    if t <= 0.0 {
        return Err(Error::InvalidParameter(
            "generation time must be positive".into(),
        ));
    }
    Ok(p_cluster_2d(n1, n2, m, eta)? / t)
}

/// Rate with the optimal allocation over the rate with plain type II
/// fusions (`m = 1`).
pub fn rate_ratio_2d(n1: u64, n2: u64, eta: f64, t_emit: f64, t_h: f64) -> Result<f64> {
    let m = m_opt(eta)?.m;
    Ok(rate_2d(n1, n2, m, eta, t_emit, t_h)? / rate_2d(n1, n2, 1, eta, t_emit, t_h)?)
}

/// Fusions for a cluster of shape `dims`, the first dimension being made
/// deterministically by the emitters.
pub fn n_fusions_ddim(dims: &[u64]) -> Result<u64> {
    if dims.is_empty() {
        return Err(Error::InvalidParameter(
            "cluster needs at least one dimension".into(),
        ));
    }
    for &n in dims {
        check_positive("every dimension", n)?;
    }
    let total: u64 = dims.iter().product();
    Ok(dims[1..].iter().map(|&ni| total / ni * (ni - 1)).sum())
}

pub fn p_cluster_ddim(dims: &[u64], m: u32, eta: f64) -> Result<f64> {
    Ok(pow_prob(p_boosted(m, eta)?, n_fusions_ddim(dims)?))
}

/// Boosted fusions in the encoded ring construction.
pub fn n_fusions_ring_encoded(k: u64, n1: u64) -> u64 {
    1 + k * (n1 - 1)
}

/// Encoded ring: all boosted fusions succeed and the `2k` photons measured
/// at the end are detected. Independent of the block size `n2`.
pub fn p_ring_encoded(k: u64, n1: u64, eta: f64, m: u32) -> Result<f64> {
    if k < 3 || n1 < 2 {
        return Err(Error::InvalidParameter(format!(
            "encoded ring needs k >= 3 and n1 >= 2, got k={k}, n1={n1}"
        )));
    }
    let pb = p_boosted(m, eta)?;
    Ok(pow_prob(pb, n_fusions_ring_encoded(k, n1)) * pow_prob(eta * eta, k))
}

/// Ancilla-assisted Bell measurement with `k = 2^(N+1) - 2` ancillas.
pub fn p_grice(eta: f64, eta_a: f64, k: u64) -> Result<f64> {
    check_eta(eta)?;
    check_eta(eta_a)?;
    if !(k + 2).is_power_of_two() || k + 2 < 2 {
        return Err(Error::InvalidParameter(format!(
            "{k} ancillas is not of the form 2^(N+1) - 2"
        )));
    }
    Ok((k + 1) as f64 / (k + 2) as f64 * eta * eta * pow_prob(eta_a, k))
}

/// Ancilla-assisted Bell measurement with `k = 2^(N+2) - 4` ancillas.
pub fn p_evl(eta: f64, eta_a: f64, k: u64) -> Result<f64> {
    check_eta(eta)?;
    check_eta(eta_a)?;
    if k % 4 != 0 || !(k / 4 + 1).is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "{k} ancillas is not of the form 2^(N+2) - 4"
        )));
    }
    Ok((k + 2) as f64 / (k + 4) as f64 * eta * eta * pow_prob(eta_a, k))
}

/// Repeat-until-success entanglement of two emitters.
pub fn p_rus(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let e2 = eta * eta;
    Ok(e2 / (2.0 - e2))
}

/// Best ancilla count on a ladder, searched up to `cap` ancillas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderOpt {
    pub k: u64,
    pub p: f64,
}

fn ladder_opt(
    cap: u64,
    ladder: impl Fn(u32) -> u64,
    p: impl Fn(u64) -> Result<f64>,
) -> Result<LadderOpt> {
    let mut best = LadderOpt { k: 0, p: p(0)? };
    for n in 1.. {
        let k = ladder(n);
        if k > cap {
            break;
        }
        let v = p(k)?;
        if v > best.p {
            best = LadderOpt { k, p: v };
        }
    }
    Ok(best)
}

pub fn p_grice_opt(eta: f64, eta_a: f64, cap: u64) -> Result<LadderOpt> {
    ladder_opt(cap, |n| (1u64 << (n + 1)) - 2, |k| p_grice(eta, eta_a, k))
}

pub fn p_evl_opt(eta: f64, eta_a: f64, cap: u64) -> Result<LadderOpt> {
    ladder_opt(cap, |n| (1u64 << (n + 2)) - 4, |k| p_evl(eta, eta_a, k))
}

/// Binomial distribution `B(n, p)`, evaluated in log space so that large
/// `n` with small tails stays finite.
#[derive(Clone, Debug)]
pub struct Binomial {
    pmf: Vec<f64>,
    /// `tail[i] = P(X >= i)`, with `tail[n + 1] = 0`.
    tail: Vec<f64>,
}

impl Binomial {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        check_eta(p)?;
        let n = n as usize;
        let pmf: Vec<f64> = if p == 0.0 || p == 1.0 {
            let hit = if p == 0.0 { 0 } else { n };
            (0..=n).map(|i| if i == hit { 1.0 } else { 0.0 }).collect()
        } else {
            let (lp, lq) = (p.ln(), (1.0 - p).ln());
            let mut ln_choose = 0.0;
            (0..=n)
                .map(|i| {
                    if i > 0 {
                        ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
                    }
                    (ln_choose + i as f64 * lp + (n - i) as f64 * lq).exp()
                })
                .collect()
        };
        let total: f64 = pmf.iter().sum();
        let pmf: Vec<f64> = pmf.into_iter().map(|x| x / total).collect();
        // each side summed from its own end, so the small side stays exact
        let mode = pmf
            .iter()
            .enumerate()
            .fold(0, |b, (i, x)| if *x > pmf[b] { i } else { b });
        let mut tail = vec![0.0; n + 2];
        for i in (mode + 1..=n).rev() {
            tail[i] = tail[i + 1] + pmf[i];
        }
        let mut below = 0.0;
        for i in 0..=mode {
            tail[i] = 1.0 - below;
            below += pmf[i];
        }
        Ok(Binomial { pmf, tail })
    }

    pub fn n(&self) -> u64 {
        self.pmf.len() as u64 - 1
    }

    pub fn pmf(&self, i: u64) -> f64 {
        self.pmf.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `P(X >= i)`; exactly 1 for `i = 0`.
    pub fn at_least(&self, i: u64) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.tail.get(i as usize).copied().unwrap_or(0.0).min(1.0)
        }
    }
}

/// Parameters of the three-factory scheme for encoded rings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoryConfig {
    pub k: u64,
    pub n1: u64,
    pub n2: u64,
    pub m: u32,
    pub n_a: u64,
    pub n_b: u64,
    pub epsilon: f64,
}

impl FactoryConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("k", self.k)?;
        check_positive("n2", self.n2)?;
        check_positive("m", self.m.into())?;
        if self.n1 < 2 {
            return Err(Error::InvalidParameter("n1 must be >= 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-trial success probabilities of the three factories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoryProbs {
    /// Ring from factory A.
    pub p_a: f64,
    /// One parity code from factory B.
    pub p_b: f64,
    /// One combination attempt in factory C.
    pub p_c: f64,
}

/// `p_a = P_B`, `p_b = P_B^(n1-2)`, `p_c = (P_B eta^2)^k`. With `strict`,
/// `p_a` also requires the `k (m + 1)` photons left in the ring to survive
/// (not part of the published accounting).
pub fn factory_probs(k: u64, n1: u64, m: u32, eta: f64, strict: bool) -> Result<FactoryProbs> {
    let pb = p_boosted(m, eta)?;
    let mut p_a = pb;
    if strict {
        p_a *= pow_prob(eta, k * (u64::from(m) + 1));
    }
    Ok(FactoryProbs {
        p_a,
        p_b: pow_prob(pb, n1.saturating_sub(2)),
        p_c: pow_prob(pb * eta * eta, k),
    })
}

/// Probability that factory C outputs at least one encoded ring.
pub fn factory_success(cfg: &FactoryConfig, eta: f64, strict: bool) -> Result<f64> {
    cfg.validate()?;
    let pr = factory_probs(cfg.k, cfg.n1, cfg.m, eta, strict)?;
    factory_success_with(cfg.k, cfg.n_a, cfg.n_b, &pr)
}

/// The factory sum for given per-trial probabilities.
pub fn factory_success_with(k: u64, n_a: u64, n_b: u64, pr: &FactoryProbs) -> Result<f64> {
    let a = Binomial::new(n_a, pr.p_a)?;
    let b = Binomial::new(n_b, pr.p_b)?;
    // resources for at least c attempts
    let enough = |c: u64| a.at_least(c) * b.at_least(k * c);
    let mut total = 0.0;
    let mut next = enough(1);
    for c in 1..=n_a.min(n_b) {
        let here = next;
        next = enough(c + 1);
        let exactly = (here - next).max(0.0);
        if exactly == 0.0 && here == 0.0 {
            break;
        }
        total += exactly * (1.0 - pow_prob(1.0 - pr.p_c, c));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Approximate multiplexing needed for failure probability `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorySizing {
    pub probs: FactoryProbs,
    pub c_hat: u64,
    pub n_a: u64,
    pub n_b: u64,
}

pub fn factory_sizing(
    k: u64,
    n1: u64,
    m: u32,
    eta: f64,
    epsilon: f64,
    strict: bool,
) -> Result<FactorySizing> {
    let cfg = FactoryConfig {
        k,
        n1,
        n2: 1,
        m,
        n_a: 0,
        n_b: 0,
        epsilon,
    };
    cfg.validate()?;
    let probs = factory_probs(k, n1, m, eta, strict)?;
    if probs.p_a <= 0.0 || probs.p_b <= 0.0 || probs.p_c <= 0.0 {
        return Err(Error::InvalidParameter(
            "a factory never succeeds at this eta".into(),
        ));
    }
    let c_hat = if probs.p_c >= 1.0 {
        1
    } else {
        (epsilon.ln() / (1.0 - probs.p_c).ln()).ceil() as u64
    };
    Ok(FactorySizing {
        probs,
        c_hat,
        n_a: (c_hat as f64 / probs.p_a).ceil() as u64,
        n_b: ((k * c_hat) as f64 / probs.p_b).ceil() as u64,
    })
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Boosted fusion success versus loss: optimal allocation and fixed `m`.
pub fn allocation_table(etas: &[f64], fixed_m: &[u32], cap: u32) -> Result<Table> {
    if etas.is_empty() {
        return Err(Error::InvalidParameter("empty eta grid".into()));
    }
    let mut cols = vec![
        "loss".to_string(),
        "eta".into(),
        "p_opt".into(),
        "m_opt".into(),
        "m_capped".into(),
    ];
    cols.extend(fixed_m.iter().map(|m| format!("p_m{m}")));
    let mut t = Table::new(cols);
    for &eta in etas {
        let mo = m_opt_with_cap(eta, cap)?;
        let mut r = vec![
            (1.0 - eta).into(),
            eta.into(),
            p_boosted(mo.m, eta)?.into(),
            mo.m.into(),
            mo.capped.into(),
        ];
        for &m in fixed_m {
            r.push(p_boosted(m, eta)?.into());
        }
        t.push(r)?;
    }
    Ok(t)
}

/// `eta` thresholds where the optimal allocation steps up.
pub fn allocation_boundaries(max_m: u32) -> Result<Table> {
    let mut t = Table::new(["m", "eta_boundary", "loss_boundary"]);
    for m in 1..=max_m {
        let eta = m_opt_boundary(m);
        t.push(vec![m.into(), eta.into(), (1.0 - eta).into()])?;
    }
    Ok(t)
}

/// 2D cluster probabilities for every `(n1, n2)` and `eta`, one row each.
pub fn cluster_table(
    n1s: &[u64],
    n2s: &[u64],
    etas: &[f64],
    t_emit: f64,
    t_h: f64,
) -> Result<Table> {
    if n1s.is_empty() || n2s.is_empty() || etas.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut t = Table::new([
        "eta",
        "n1",
        "n2",
        "p_allphotonic",
        "p_type2",
        "p_boosted",
        "m_opt",
        "rate_ratio",
    ]);
    for &eta in etas {
        let mo = m_opt(eta)?;
        for &n1 in n1s {
            for &n2 in n2s {
                t.push(vec![
                    eta.into(),
                    Cell::Int(n1 as i64),
                    Cell::Int(n2 as i64),
                    p_allphotonic_2d(n1, n2, eta)?.into(),
                    p_cluster_2d(n1, n2, 1, eta)?.into(),
                    p_cluster_2d(n1, n2, mo.m, eta)?.into(),
                    mo.m.into(),
                    rate_ratio_2d(n1, n2, eta, t_emit, t_h)?.into(),
                ])?;
            }
        }
    }
    Ok(t)
}

/// Quantities of [`cluster_table`] that can be laid out as an `n1 x n2` matrix.
pub const CLUSTER_QUANTITIES: [&str; 4] = ["p_allphotonic", "p_type2", "p_boosted", "rate_ratio"];

/// One quantity of [`cluster_table`] at a single `eta`, with a row per `n1` and
/// a column per `n2`.
pub fn cluster_matrix(
    n1s: &[u64],
    n2s: &[u64],
    eta: f64,
    quantity: &str,
    t_emit: f64,
    t_h: f64,
) -> Result<Table> {
    if !CLUSTER_QUANTITIES.contains(&quantity) {
        return Err(Error::InvalidParameter(format!(
            "unknown quantity {quantity}"
        )));
    }
    let long = cluster_table(n1s, n2s, &[eta], t_emit, t_h)?;
    let col = long.column_index(quantity).expect("listed quantity");
    let mut t = Table::new(
        std::iter::once("n1".to_string()).chain(n2s.iter().map(|n2| format!("n2={n2}"))),
    );
    for (i, &n1) in n1s.iter().enumerate() {
        let mut row = vec![Cell::Int(n1 as i64)];
        row.extend(
            long.rows[i * n2s.len()..(i + 1) * n2s.len()]
                .iter()
                .map(|r| r[col].clone()),
        );
        t.push(row)?;
    }
    Ok(t)
}

/// Boosted fusion against repeat-until-success and the ancilla-assisted
/// schemes (ancillas detected with the same `eta`).
pub fn scheme_table(etas: &[f64], ancilla_cap: u64) -> Result<Table> {
    if etas.is_empty() {
        return Err(Error::InvalidParameter("empty eta grid".into()));
    }
    let mut t = Table::new([
        "eta",
        "p_boosted_opt",
        "m_opt",
        "p_rus",
        "p_grice_opt",
        "k_grice",
        "p_evl_opt",
        "k_evl",
    ]);
    for &eta in etas {
        let (pb, mo) = p_boosted_opt(eta)?;
        let g = p_grice_opt(eta, eta, ancilla_cap)?;
        let e = p_evl_opt(eta, eta, ancilla_cap)?;
        t.push(vec![
            eta.into(),
            pb.into(),
            mo.m.into(),
            p_rus(eta)?.into(),
            g.p.into(),
            Cell::Int(g.k as i64),
            e.p.into(),
            Cell::Int(e.k as i64),
        ])?;
    }
    Ok(t)
}
