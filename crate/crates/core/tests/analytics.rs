use approx::assert_relative_eq;
use hybridgen::analytics::*;
use hybridgen::table::Table;
use proptest::prelude::*;
use statrs::distribution::{Binomial as StatBinomial, Discrete, DiscreteCDF};

/// Direct transcription used as a reference.
fn boosted_ref(m: u32, eta: f64) -> f64 {
    (1.0 - 2f64.powi(-(m as i32))) * eta.powi(2 * m as i32)
}

#[test]
fn threshold_between_one_and_two_pairs() {
    let t = (2.0f64 / 3.0).sqrt();
    assert_relative_eq!(m_opt_boundary(1), t, epsilon = 1e-15);
    assert_eq!(m_opt(t - 1e-10).unwrap().m, 1);
    assert_eq!(m_opt(t).unwrap().m, 1);
    assert_eq!(m_opt(t + 1e-10).unwrap().m, 2);
    assert_eq!(m_opt(0.3).unwrap().m, 1);
}

#[test]
fn optimal_allocation_table() {
    assert_eq!(
        m_opt(0.9).unwrap(),
        MOpt {
            m: 2,
            capped: false
        }
    );
    assert_eq!(
        m_opt(0.95).unwrap(),
        MOpt {
            m: 3,
            capped: false
        }
    );
    assert_eq!(improvement_factor(0), 0.0);
    assert_relative_eq!(improvement_factor(1), 2.0 / 3.0);
    assert_relative_eq!(improvement_factor(2), 6.0 / 7.0);
    assert_relative_eq!(improvement_factor(3), 14.0 / 15.0);
    let capped = m_opt_with_cap(1.0, 12).unwrap();
    assert_eq!(
        capped,
        MOpt {
            m: 12,
            capped: true
        }
    );
    assert!((1.0 - p_boosted(DEFAULT_M_CAP, 1.0).unwrap()) < 1e-9);
}

#[test]
fn cluster_probabilities() {
    let p = p_cluster_2d(5, 5, 3, 0.95).unwrap();
    let want = boosted_ref(3, 0.95).powi(20);
    assert_relative_eq!(p, want, max_relative = 1e-12);
    assert!((1.3e-4..1.6e-4).contains(&p));
    assert_eq!(format!("{p:.2e}"), "1.47e-4");
    assert_eq!(p_cluster_2d(7, 1, 3, 0.8).unwrap(), 1.0);
    assert_relative_eq!(p_cluster_2d(2, 2, 1, 1.0).unwrap(), 0.25);

    assert_relative_eq!(p_allphotonic_2d(2, 1, 1.0).unwrap(), 0.5);
    assert_relative_eq!(p_allphotonic_2d(2, 2, 1.0).unwrap(), 0.0625);
    assert_relative_eq!(
        p_allphotonic_2d(5, 5, 0.95).unwrap(),
        0.45125f64.powi(40),
        max_relative = 1e-12
    );
}

#[test]
fn rate_ratios() {
    let r95 = rate_ratio_2d(5, 5, 0.95, 1.0, 0.0).unwrap();
    let r90 = rate_ratio_2d(5, 5, 0.90, 1.0, 0.0).unwrap();
    // independent evaluation: P(m)/(n1 (2m+1))
    let rate = |m: u32, eta: f64| boosted_ref(m, eta).powi(20) / (5.0 * (2 * m + 1) as f64);
    assert_relative_eq!(r95, rate(3, 0.95) / rate(1, 0.95), max_relative = 1e-12);
    assert_relative_eq!(r90, rate(2, 0.90) / rate(1, 0.90), max_relative = 1e-12);
    assert!((r95 - 514.0).abs() <= 1.0, "{r95}");
    assert!((r90 - 29.5).abs() <= 0.5, "{r90}");

    assert_eq!(t_ext(1, 1, 1.0, 1.0).unwrap(), 4.0);
    assert_eq!(t_ext(1, 5, 1.0, 0.0).unwrap(), 15.0);
    assert_eq!(t_ext(3, 5, 1.0, 0.0).unwrap(), 35.0);
    assert!(rate_2d(5, 5, 1, 0.9, 0.0, 0.0).is_err());
}

#[test]
fn higher_dimensional_counts() {
    assert_eq!(n_fusions_ddim(&[5, 5]).unwrap(), 20);
    assert_eq!(n_fusions_ddim(&[2, 2, 2]).unwrap(), 8);
    assert_eq!(n_fusions_ddim(&[9]).unwrap(), 0);
    assert_eq!(p_cluster_ddim(&[9], 2, 0.7).unwrap(), 1.0);
    assert!(n_fusions_ddim(&[]).is_err());
    for n1 in 1..=10 {
        for n2 in 1..=10 {
            assert_eq!(n_fusions_ddim(&[n1, n2]).unwrap(), n1 * (n2 - 1));
            for &(m, eta) in &[(1, 0.9), (3, 0.95), (2, 1.0)] {
                assert_eq!(
                    p_cluster_ddim(&[n1, n2], m, eta).unwrap(),
                    p_cluster_2d(n1, n2, m, eta).unwrap()
                );
            }
        }
    }
    // per-dimension sum, written out for 3D
    let (a, b, c) = (3u64, 4u64, 5u64);
    assert_eq!(
        n_fusions_ddim(&[a, b, c]).unwrap(),
        (b - 1) * a * c + (c - 1) * a * b
    );
}

#[test]
fn encoded_ring_probabilities() {
    for m in 1..6 {
        assert_relative_eq!(
            p_ring_encoded(6, 4, 1.0, m).unwrap(),
            (1.0 - 2f64.powi(-(m as i32))).powi(19),
            max_relative = 1e-12
        );
    }
    assert_relative_eq!(p_ring_encoded(3, 2, 1.0, 1).unwrap(), 0.0625);
    let p = p_ring_encoded(6, 4, 0.95, 3).unwrap();
    assert_relative_eq!(
        p,
        boosted_ref(3, 0.95).powi(19) * 0.95f64.powi(12),
        max_relative = 1e-12
    );
    assert!(p_ring_encoded(2, 4, 0.9, 1).is_err());
}

#[test]
fn ancilla_schemes() {
    assert_relative_eq!(p_grice(1.0, 1.0, 2).unwrap(), 0.75);
    assert_relative_eq!(p_grice(1.0, 1.0, 6).unwrap(), 7.0 / 8.0);
    assert_relative_eq!(p_grice(0.9, 0.8, 0).unwrap(), 0.5 * 0.81);
    assert_relative_eq!(p_evl(1.0, 1.0, 12).unwrap(), 14.0 / 16.0);
    assert_relative_eq!(p_evl(0.9, 0.9, 4).unwrap(), 0.75 * 0.9f64.powi(6));
    for bad in [1, 3, 4, 5, 10] {
        assert!(p_grice(1.0, 1.0, bad).is_err(), "{bad}");
    }
    for bad in [2, 6, 8, 20] {
        assert!(p_evl(1.0, 1.0, bad).is_err(), "{bad}");
    }
    assert_eq!(p_rus(1.0).unwrap(), 1.0);
    assert_relative_eq!(p_rus(0.9).unwrap(), 0.81 / 1.19);
    // lossless: the largest ladder rung wins
    let g = p_grice_opt(1.0, 1.0, DEFAULT_ANCILLA_CAP).unwrap();
    assert_eq!(g.k, 4094);
    let e = p_evl_opt(1.0, 1.0, DEFAULT_ANCILLA_CAP).unwrap();
    assert_eq!(e.k, 4092);
}

#[test]
fn scheme_ordering_on_dense_grid() {
    for eta in linspace(0.5, 1.0, 501) {
        let (pb, _) = p_boosted_opt(eta).unwrap();
        let rus = p_rus(eta).unwrap();
        let g = p_grice_opt(eta, eta, DEFAULT_ANCILLA_CAP).unwrap().p;
        let e = p_evl_opt(eta, eta, DEFAULT_ANCILLA_CAP).unwrap().p;
        assert!(rus >= pb * (1.0 - TIE_TOLERANCE), "eta={eta}");
        assert!(
            pb >= g * (1.0 - TIE_TOLERANCE),
            "eta={eta}: boosted {pb} < grice {g}"
        );
        assert!(
            pb >= e * (1.0 - TIE_TOLERANCE),
            "eta={eta}: boosted {pb} < evl {e}"
        );
    }
}

#[test]
fn binomial_against_reference() {
    for &(n, p) in &[
        (0u64, 0.3),
        (1, 0.5),
        (10, 0.25),
        (186, 0.643),
        (1726, 0.4137),
        (5000, 0.01),
    ] {
        let b = Binomial::new(n, p).unwrap();
        let r = StatBinomial::new(p, n).unwrap();
        let mut sum = 0.0;
        for i in 0..=n {
            sum += b.pmf(i);
            let want = r.pmf(i);
            assert!(
                (b.pmf(i) - want).abs() <= 1e-12 + 1e-9 * want,
                "n={n} i={i}"
            );
        }
        assert!((sum - 1.0).abs() < 1e-12, "n={n}: {sum}");
        assert_eq!(b.at_least(0), 1.0);
        for i in [1, n / 3, n / 2, n] {
            if i >= 1 && i <= n {
                let want = 1.0 - r.cdf(i - 1);
                assert!((b.at_least(i) - want).abs() < 1e-10, "n={n} i={i}");
            }
        }
    }
}

/// Factory sum evaluated straight from the definitions with the reference
/// binomial.
fn factory_ref(k: u64, n_a: u64, n_b: u64, pr: &FactoryProbs) -> f64 {
    let a = StatBinomial::new(pr.p_a, n_a).unwrap();
    let b = StatBinomial::new(pr.p_b, n_b).unwrap();
    let ge = |d: &StatBinomial, n: u64, x: u64| {
        if x == 0 {
            1.0
        } else if x > n {
            0.0
        } else {
            1.0 - d.cdf(x - 1)
        }
    };
    let enough = |c: u64| ge(&a, n_a, c) * ge(&b, n_b, k * c);
    (1..=n_a.min(n_b))
        .map(|c| (enough(c) - enough(c + 1)) * (1.0 - (1.0 - pr.p_c).powi(c as i32)))
        .sum()
}

#[test]
fn factory_sizing_example() {
    let s = factory_sizing(6, 4, 3, 0.95, 0.01, false).unwrap();
    let pb = boosted_ref(3, 0.95);
    assert_relative_eq!(s.probs.p_a, pb);
    assert_relative_eq!(s.probs.p_b, pb * pb, max_relative = 1e-12);
    assert_relative_eq!(
        s.probs.p_c,
        (pb * 0.95 * 0.95).powi(6),
        max_relative = 1e-12
    );
    assert!((s.probs.p_c - 0.0383).abs() < 5e-5);
    assert_eq!(s.c_hat, 119);
    assert_eq!(s.n_a, 186);
    assert_eq!(s.n_b, 1726);

    let cfg = FactoryConfig {
        k: 6,
        n1: 4,
        n2: 2,
        m: 3,
        n_a: s.n_a,
        n_b: s.n_b,
        epsilon: 0.01,
    };
    let p = factory_success(&cfg, 0.95, false).unwrap();
    assert!(p >= 0.94, "{p}");
    assert!(p >= 1.0 - 0.01 - 0.05);
    assert!((p - factory_ref(6, s.n_a, s.n_b, &s.probs)).abs() < 1e-9);

    let big = FactoryConfig {
        n_a: 10 * s.n_a,
        n_b: 10 * s.n_b,
        ..cfg
    };
    assert!(factory_success(&big, 0.95, false).unwrap() > 1.0 - 1e-12);

    let strict = factory_sizing(6, 4, 3, 0.95, 0.01, true).unwrap();
    assert!(strict.probs.p_a < s.probs.p_a);
    assert!(strict.n_a > s.n_a);
}

#[test]
fn factory_edge_cases() {
    let pr = FactoryProbs {
        p_a: 0.3,
        p_b: 0.2,
        p_c: 0.1,
    };
    assert_eq!(factory_success_with(6, 0, 0, &pr).unwrap(), 0.0);
    let sure = FactoryProbs {
        p_a: 1.0,
        p_b: 1.0,
        p_c: 1.0,
    };
    assert_eq!(factory_success_with(6, 1, 6, &sure).unwrap(), 1.0);
    assert_eq!(factory_success_with(6, 1, 5, &sure).unwrap(), 0.0);
    let bad = FactoryConfig {
        k: 6,
        n1: 4,
        n2: 2,
        m: 3,
        n_a: 1,
        n_b: 1,
        epsilon: 1.0,
    };
    assert!(factory_success(&bad, 0.9, false).is_err());
    assert!(factory_sizing(6, 4, 3, 0.9, 0.0, false).is_err());
}

#[test]
fn factory_monotone_in_supply() {
    let pr = factory_probs(6, 4, 3, 0.95, false).unwrap();
    let mut last = 0.0;
    for n_a in (0..=400).step_by(10) {
        let p = factory_success_with(6, n_a, 1726, &pr).unwrap();
        assert!(p + 1e-12 >= last);
        last = p;
    }
    let mut last = 0.0;
    for n_b in (0..=4000).step_by(100) {
        let p = factory_success_with(6, 186, n_b, &pr).unwrap();
        assert!(p + 1e-12 >= last);
        last = p;
    }
}

#[test]
fn rate_tables() {
    let t = allocation_table(&[0.5, 0.9, 1.0], &[1, 2, 3], DEFAULT_M_CAP).unwrap();
    assert_eq!(
        t.columns,
        ["loss", "eta", "p_opt", "m_opt", "m_capped", "p_m1", "p_m2", "p_m3"]
    );
    let last = &t.rows[2];
    assert_eq!(last[3].to_string(), DEFAULT_M_CAP.to_string());
    assert_eq!(last[4].to_string(), "true");
    assert_relative_eq!(last[2].as_f64().unwrap(), 1.0 - 2f64.powi(-30));

    let b = allocation_boundaries(4).unwrap();
    let etas = b.column_f64("eta_boundary").unwrap();
    for (m, eta) in (1..=4).zip(etas) {
        assert_eq!(m_opt(eta - 1e-9).unwrap().m, m);
        assert_eq!(m_opt(eta + 1e-9).unwrap().m, m + 1);
    }

    let t = cluster_table(&[3, 5], &[3, 5], &[0.9, 0.95], 1.0, 0.0).unwrap();
    assert_eq!(t.rows.len(), 8);
    let i = t
        .rows
        .iter()
        .position(|r| {
            r[0].to_string() == "0.95" && r[1].to_string() == "5" && r[2].to_string() == "5"
        })
        .unwrap();
    let ratio = t.rows[i][7].as_f64().unwrap();
    assert!((ratio - 514.0).abs() <= 1.0);

    let mat = cluster_matrix(&[3, 5], &[3, 4, 5], 0.95, "rate_ratio", 1.0, 0.0).unwrap();
    assert_eq!(mat.columns, ["n1", "n2=3", "n2=4", "n2=5"]);
    assert_eq!(mat.rows.len(), 2);
    assert_eq!(mat.rows[1][3].as_f64().unwrap(), ratio);
    assert!(cluster_matrix(&[3], &[3], 0.9, "rate", 1.0, 0.0).is_err());

    let t = scheme_table(&linspace(0.82, 1.0, 10), DEFAULT_ANCILLA_CAP).unwrap();
    let back = Table::from_csv(&t.to_csv()).unwrap();
    assert_eq!(back.to_csv(), t.to_csv());
    assert!(scheme_table(&[], 8).is_err());
}

proptest! {
    #[test]
    fn boosted_increases_with_eta(m in 1u32..25, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!(a < b);
        prop_assert!(p_boosted(m, a).unwrap() < p_boosted(m, b).unwrap() || b == 0.0);
        prop_assert!((p_boosted(m, a).unwrap() - boosted_ref(m, a)).abs() < 1e-15);
    }

    #[test]
    fn optimum_beats_every_allocation(eta in 0.01..0.9999f64) {
        let mo = m_opt(eta).unwrap();
        prop_assert!(!mo.capped);
        let best = p_boosted(mo.m, eta).unwrap();
        for m in 1..=20 {
            prop_assert!(best >= p_boosted(m, eta).unwrap() * (1.0 - TIE_TOLERANCE));
        }
        prop_assert!(improvement_factor(mo.m - 1) <= eta * eta);
        prop_assert!(eta * eta <= improvement_factor(mo.m) * (1.0 + TIE_TOLERANCE));
    }

    #[test]
    fn optimum_nondecreasing(a in 0.01..1.0f64, b in 0.01..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(m_opt(lo).unwrap().m <= m_opt(hi).unwrap().m);
    }

    #[test]
    fn factory_probability_in_range(n_a in 0u64..300, n_b in 0u64..3000, eta in 0.7..1.0f64) {
        let cfg = FactoryConfig { k: 6, n1: 4, n2: 2, m: 3, n_a, n_b, epsilon: 0.01 };
        let p = factory_success(&cfg, eta, false).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
