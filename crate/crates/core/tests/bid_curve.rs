mod common;

use common::{interpolate, merit_order, merit_prices, net_injection};
use gridcoord::case;
use gridcoord::dso_market::{build_bid_curve, feasible_range, value_at};
use gridcoord::model::Coupling;
use gridcoord::synth::{random_scenario, SynthConfig};
use proptest::prelude::*;

#[test]
fn reference_curve_matches_merit_order() {
    let s = case::bundled("paper_reference").unwrap();
    let curve = build_bid_curve(&s).unwrap();
    let oracle = merit_order(&s);
    assert_eq!(curve.breakpoints.len(), oracle.len());
    for (bp, (q, c)) in curve.breakpoints.iter().zip(&oracle) {
        assert!((bp.q - q).abs() < 1e-9, "{} vs {}", bp.q, q);
        assert!((bp.cost - c).abs() < 1e-9);
    }
    let prices: Vec<f64> = curve.segments.iter().map(|s| s.price).collect();
    assert_eq!(prices.len(), 5);
    for (a, b) in prices.iter().zip([10.0, 15.0, 20.0, 24.0, 28.0]) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn random_curves_match_merit_order() {
    let cfg = SynthConfig::default();
    for seed in 0..60 {
        let s = random_scenario(seed, &cfg);
        let curve = build_bid_curve(&s).unwrap();
        let oracle = merit_order(&s);
        assert_eq!(curve.breakpoints.len(), oracle.len(), "seed {seed}");
        for (bp, (q, c)) in curve.breakpoints.iter().zip(&oracle) {
            assert!((bp.q - q).abs() < 1e-6, "seed {seed}: {} vs {}", bp.q, q);
            assert!((bp.cost - c).abs() < 1e-6 * (1.0 + c.abs()), "seed {seed}");
        }
        for (seg, p) in curve.segments.iter().zip(merit_prices(&s)) {
            assert!((seg.price - p).abs() < 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn reference_dispatch_at_award() {
    let s = case::bundled("paper_reference").unwrap();
    let d = value_at(&s, 1.2).unwrap();
    let expect = [
        ("DDGAG1", 0.5),
        ("DDGAG2", 1.0),
        ("DDGAG3", 1.2),
        ("DDGAG4", 0.0),
        ("REAG", 1.0),
        ("DRAG", 2.5),
    ];
    for (id, mw) in expect {
        assert!((d.mw(id).unwrap() - mw).abs() < 1e-9, "{id}");
    }
    assert!((d.cost - (-32.0)).abs() < 1e-9);
    assert!(d.duality_gap <= 1e-7);
}

#[test]
fn range_ends_are_sharp() {
    let s = case::bundled("paper_reference").unwrap();
    let (lo, hi) = feasible_range(&s).unwrap();
    assert!((lo + 1.5).abs() < 1e-9 && (hi - 5.7).abs() < 1e-9);
    assert!(matches!(value_at(&s, 5.8), Err(gridcoord::Error::Infeasible(_))));
    assert!(matches!(value_at(&s, -1.6), Err(gridcoord::Error::Infeasible(_))));
}

#[test]
fn zero_impedance_range_is_capacity_sum() {
    let mut s = case::bundled("voltage_binding").unwrap();
    for br in &mut s.network.branches {
        br.r = 0.0;
        br.x = 0.0;
    }
    let (lo, hi) = feasible_range(&s).unwrap();
    let oracle = merit_order(&s);
    assert!((lo - oracle[0].0).abs() < 1e-9);
    assert!((hi - oracle[oracle.len() - 1].0).abs() < 1e-9);
}

#[test]
fn voltage_limits_shrink_the_range() {
    let s = case::bundled("voltage_binding").unwrap();
    let (lo, hi) = feasible_range(&s).unwrap();
    assert!(lo > -1.5 + 1e-3 && hi < 5.7 - 1e-3, "[{lo}, {hi}]");
    let curve = build_bid_curve(&s).unwrap();
    curve.check(1e-5).unwrap();
}

#[test]
fn coupling_forms_agree_on_reference() {
    let eq = case::bundled("paper_reference").unwrap();
    let mut ge = eq.clone();
    ge.coupling = Coupling::AtLeast;
    let a = build_bid_curve(&eq).unwrap();
    let b = build_bid_curve(&ge).unwrap();
    assert_eq!(a.segments.len(), b.segments.len());
    for (x, y) in a.segments.iter().zip(&b.segments) {
        assert!((x.q_lo - y.q_lo).abs() < 1e-9 && (x.q_hi - y.q_hi).abs() < 1e-9);
        assert!((x.price - y.price).abs() < 1e-9);
    }
}

#[test]
fn branch_orientation_in_file_is_irrelevant() {
    let s = case::bundled("voltage_binding").unwrap();
    let mut flipped = s.clone();
    for br in &mut flipped.network.branches {
        std::mem::swap(&mut br.from, &mut br.to);
    }
    let a = build_bid_curve(&s).unwrap();
    let b = build_bid_curve(&flipped).unwrap();
    assert_eq!(a.breakpoints.len(), b.breakpoints.len());
    for (x, y) in a.breakpoints.iter().zip(&b.breakpoints) {
        assert!((x.q - y.q).abs() < 1e-9 && (x.cost - y.cost).abs() < 1e-9);
    }
}

#[test]
fn sweep_step_does_not_change_the_curve() {
    let mut s = case::bundled("voltage_binding").unwrap();
    let fine = build_bid_curve(&s).unwrap();
    s.sweep_step = 2.5;
    let coarse = build_bid_curve(&s).unwrap();
    assert_eq!(fine.segments.len(), coarse.segments.len());
    for (x, y) in fine.segments.iter().zip(&coarse.segments) {
        assert!((x.q_hi - y.q_hi).abs() < 1e-9 && (x.price - y.price).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn value_function_matches_oracle_and_conserves_power(seed in 0u64..10_000, t in 0.0f64..=1.0) {
        let s = random_scenario(seed, &SynthConfig::default());
        let (lo, hi) = feasible_range(&s).unwrap();
        let q = lo + t * (hi - lo);
        let d = value_at(&s, q).unwrap();
        let oracle = interpolate(&merit_order(&s), q);
        prop_assert!((d.cost - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{} vs {}", d.cost, oracle);
        let mw: Vec<f64> = d.aggregators.iter().map(|a| a.mw).collect();
        prop_assert!((net_injection(&s, &mw) - q).abs() <= 1e-7);
        prop_assert!(d.duality_gap <= 1e-7);
    }

    #[test]
    fn curve_is_convex_and_duals_match_differences(seed in 0u64..10_000, t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
        let s = random_scenario(seed, &SynthConfig::default());
        let curve = build_bid_curve(&s).unwrap();
        curve.check(1e-5).unwrap();
        let (lo, hi) = (curve.q_min(), curve.q_max());
        let (a, b) = (lo + t1 * (hi - lo), lo + t2 * (hi - lo));
        let mid = value_at(&s, 0.5 * (a + b)).unwrap().cost;
        let chord = 0.5 * (value_at(&s, a).unwrap().cost + value_at(&s, b).unwrap().cost);
        prop_assert!(mid <= chord + 1e-5, "mid {} chord {}", mid, chord);
        for seg in &curve.segments {
            if seg.width() <= 1e-3 {
                continue;
            }
            let m = 0.5 * (seg.q_lo + seg.q_hi);
            let h = 0.25 * seg.width();
            let fd = (value_at(&s, m + h).unwrap().cost - value_at(&s, m - h).unwrap().cost) / (2.0 * h);
            let dual = value_at(&s, m).unwrap().marginal_price;
            prop_assert!((fd - dual).abs() <= 1e-5 * (1.0 + dual.abs()), "fd {} dual {}", fd, dual);
        }
    }
}

#[test]
fn small_impedance_rows_do_not_derail_the_solver() {
    // Voltage rows with tiny flow coefficients once drove the tableau ill-conditioned.
    let s = random_scenario(6228178117264287759, &SynthConfig::default());
    let (lo, hi) = feasible_range(&s).unwrap();
    let oracle = merit_order(&s);
    assert!((lo - oracle[0].0).abs() < 1e-7);
    assert!((hi - oracle[oracle.len() - 1].0).abs() < 1e-7);
}
