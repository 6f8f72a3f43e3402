use proptest::prelude::*;
use simo_noma::bounds::{
    averaged_pep, averaged_pep_oracle, ber_upper_bound, enumerate_pairs, BoundConfig, BoundSet,
    BoundVariant,
};
use simo_noma::channel::{db_to_linear, draw_channels, synthesize_rx, ChannelParams};
use simo_noma::constellation::Constellation;
use simo_noma::detection::{detect_jml, detect_sic, joint_metric, DetectorKind};
use simo_noma::simkernel::{chunk_rng, run_sweep, StopRule, SweepSpec};
use simo_noma::User;

const ORDERS: [usize; 5] = [4, 8, 16, 32, 64];

fn order() -> impl Strategy<Value = usize> {
    prop::sample::select(ORDERS.to_vec())
}

fn orders_pair() -> impl Strategy<Value = (usize, usize)> {
    (order(), order()).prop_map(|(a, b)| (a.max(b), a.min(b)))
}

#[test]
fn oracle_grid() {
    for &g in &[0.01, 0.1, 1.0, 2.0, 10.0, 100.0, 1000.0] {
        for &l in &[1, 2, 4, 8] {
            let a = averaged_pep(g, l).unwrap();
            let o = averaged_pep_oracle(g, l).unwrap();
            assert!(((a - o) / o).abs() < 1e-8, "gamma {g} L {l}: {a} vs {o}");
        }
    }
}

#[test]
fn bounds_strictly_decrease_over_sweep() {
    for (m1, m2) in [(4, 4), (16, 16), (64, 32), (64, 16)] {
        for l in [1, 2, 4] {
            let vals: Vec<BoundSet> = (0..=40)
                .map(|db| {
                    let s1 = db_to_linear(db as f64);
                    BoundSet::evaluate(m1, m2, l, s1, s1 / 8.0).unwrap()
                })
                .collect();
            for w in vals.windows(2) {
                assert!(w[1].u1_full < w[0].u1_full);
                assert!(w[1].u2_full < w[0].u2_full);
                assert!(w[1].u1_dom < w[0].u1_dom);
                assert!(w[1].u2_dom < w[0].u2_dom);
            }
        }
    }
}

fn bound_slope(m1: usize, m2: usize, l: usize, start: f64) -> [f64; 2] {
    let b = |db: f64| {
        let s1 = db_to_linear(db);
        BoundSet::evaluate(m1, m2, l, s1, s1 / 8.0).unwrap()
    };
    let (lo, hi) = (b(start), b(start + 10.0));
    [
        (hi.u1_full.log10() - lo.u1_full.log10()) / 10.0,
        (hi.u2_full.log10() - lo.u2_full.log10()) / 10.0,
    ]
}

#[test]
fn bound_slope_approaches_diversity_order() {
    for l in [1usize, 2, 4, 8] {
        let target = -(l as f64) / 10.0;
        for (m1, m2, start) in [
            (4, 4, 30.0),
            (4, 4, 50.0),
            (16, 16, 50.0),
            (64, 16, 50.0),
            (64, 32, 50.0),
            (64, 64, 50.0),
        ] {
            for slope in bound_slope(m1, m2, l, start) {
                assert!(
                    ((slope - target) / target).abs() < 0.05,
                    "L {l} ({m1},{m2}) from {start} dB: slope {slope}"
                );
            }
        }
    }
}

#[test]
fn jml_beats_sic_at_high_snr() {
    let spec = SweepSpec {
        sigma1_db_points: vec![40.0],
        sigma_ratio: 0.125,
        antennas: 4,
        m1: 16,
        m2: 16,
        detectors: vec![DetectorKind::Sic, DetectorKind::Jml],
        stop: StopRule {
            min_bit_errors: u64::MAX,
            max_trials: 10_000_000,
        },
        seed: 3,
    };
    let curve = run_sweep(&spec).unwrap();
    let p = &curve.points[0];
    assert_eq!(p.trials, 10_000_000);
    for u in User::BOTH {
        let sic = p.estimate(DetectorKind::Sic).unwrap().user(u).bit_errors;
        let jml = p.estimate(DetectorKind::Jml).unwrap().user(u).bit_errors;
        assert!(jml < sic, "{}: jml {jml} sic {sic}", u.label());
    }
}

#[test]
fn curve_serializes() {
    let spec = SweepSpec {
        sigma1_db_points: vec![0.0, 10.0],
        sigma_ratio: 0.125,
        antennas: 2,
        m1: 8,
        m2: 4,
        detectors: vec![DetectorKind::Jml],
        stop: StopRule {
            min_bit_errors: 10,
            max_trials: 10_000,
        },
        seed: 5,
    };
    let curve = run_sweep(&spec).unwrap();
    assert_eq!(curve.points.len(), 2);
    assert!(curve.points[0].estimate(DetectorKind::Sic).is_none());
    assert!(curve.points[0].estimate(DetectorKind::Jml).unwrap().u1.ber > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dominant_never_exceeds_full((m1, m2) in orders_pair(), l in 1usize..=8, db in -10.0f64..50.0) {
        let s1 = db_to_linear(db);
        let b = BoundSet::evaluate(m1, m2, l, s1, s1 / 8.0).unwrap();
        prop_assert!(b.u1_dom <= b.u1_full && b.u2_dom <= b.u2_full);
        if m1 == 4 {
            prop_assert_eq!(b.u1_dom, b.u1_full);
        }
        if m2 == 4 {
            prop_assert_eq!(b.u2_dom, b.u2_full);
        }
    }

    #[test]
    fn pair_gammas_are_positive((m1, m2) in orders_pair(), db in -10.0f64..50.0, ratio in 0.01f64..0.99) {
        let s1 = db_to_linear(db);
        let cfg = BoundConfig::new(m1, m2, 4, s1, s1 * ratio, BoundVariant::Full).unwrap();
        for u in User::BOTH {
            let t = enumerate_pairs(&cfg, u);
            let outer = if u == User::Near { m1 / 4 } else { m2 / 4 };
            prop_assert_eq!(t.rows.len(), outer * m1 * m2 / 2);
            for r in &t.rows {
                prop_assert!(r.gamma > 0.0);
                match u {
                    User::Near => prop_assert!(r.a_mag > 0.0),
                    User::Far => prop_assert!(r.b_mag > 0.0),
                }
            }
        }
    }

    #[test]
    fn bound_is_consistent_with_its_rows((m1, m2) in orders_pair(), l in 1usize..=6, db in 0.0f64..40.0) {
        let s1 = db_to_linear(db);
        let cfg = BoundConfig::new(m1, m2, l, s1, s1 / 8.0, BoundVariant::Full).unwrap();
        for u in User::BOTH {
            let order = if u == User::Near { m1 } else { m2 };
            let sum: f64 = enumerate_pairs(&cfg, u)
                .rows
                .iter()
                .map(|r| 2.0 * averaged_pep(r.gamma, l).unwrap())
                .sum();
            let direct = ber_upper_bound(&cfg, u).unwrap();
            prop_assert!((sum / order.trailing_zeros() as f64 - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn jml_is_a_global_minimizer(
        (m1, m2) in orders_pair(),
        l in 1usize..=4,
        db in -5.0f64..40.0,
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        prop_assume!(m1 * m2 <= 1024);
        let params = ChannelParams::normalized(l, db, 0.125).unwrap();
        let c1 = Constellation::new(m1).unwrap();
        let c2 = Constellation::new(m2).unwrap();
        let mut rng = chunk_rng(seed, 0, 0);
        let ch = draw_channels(&params, &mut rng);
        let (i, j) = ((seed % m1 as u64) as usize, (seed / 7 % m2 as u64) as usize);
        let rx = synthesize_rx(&params, &ch, c1.symbols()[i], c2.symbols()[j], &mut rng);

        let jml = detect_jml(&rx, &ch, &params, &c1, &c2);
        let sic = detect_sic(&rx, &ch, &params, &c1, &c2);
        let metric = |a: usize, b: usize| joint_metric(&rx, &ch, &params, c1.symbols()[a - 1], c2.symbols()[b - 1]);
        let best = metric(jml.x1_index, jml.x2_index);
        prop_assert!(best <= metric(sic.x1_index, sic.x2_index) * (1.0 + 1e-12) + 1e-12);
        for a in 1..=m1 {
            for b in 1..=m2 {
                prop_assert!(best <= metric(a, b) * (1.0 + 1e-12) + 1e-12);
            }
        }

        // same outputs with antennas permuted
        let mut order: Vec<usize> = (0..l).collect();
        order.rotate_left((perm_seed % l as u64) as usize);
        if perm_seed & 1 == 1 {
            order.reverse();
        }
        let mut ch2 = ch.clone();
        let mut rx2 = rx.clone();
        for (dst, &src) in order.iter().enumerate() {
            ch2.h1[dst] = ch.h1[src];
            ch2.h2[dst] = ch.h2[src];
            rx2.y[dst] = rx.y[src];
        }
        let jml2 = detect_jml(&rx2, &ch2, &params, &c1, &c2);
        let sic2 = detect_sic(&rx2, &ch2, &params, &c1, &c2);
        prop_assert_eq!((jml.x1_index, jml.x2_index), (jml2.x1_index, jml2.x2_index));
        prop_assert_eq!((sic.x1_index, sic.x2_index), (sic2.x1_index, sic2.x2_index));
    }
}
