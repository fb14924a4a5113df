use gridcoord::case;
use gridcoord::coordination::{check_equivalence, run_coordinated, run_ideal};
use gridcoord::synth::{random_scenario, SynthConfig};
use proptest::prelude::*;

#[test]
fn reference_clears_at_table_values() {
    let s = case::bundled("paper_reference").unwrap();
    let r = run_coordinated(&s).unwrap();
    assert!((r.award() - 1.2).abs() < 1e-9);
    assert!((r.iso.clearing_price - 22.0).abs() < 1e-9);
    for (id, mw) in [("Gen1", 10.0), ("Gen2", 20.0), ("Gen3", 13.8), ("DR1", 10.0), ("DR2", 20.0), ("DR3", 10.0)] {
        assert!((r.iso.cleared(id).unwrap() - mw).abs() < 1e-9, "{id}");
    }
}

#[test]
fn as_printed_fixture_shifts_gen3_only() {
    let s = case::bundled("paper_as_printed").unwrap();
    let r = run_coordinated(&s).unwrap();
    assert!((r.iso.cleared("Gen3").unwrap() - 23.8).abs() < 1e-9);
    assert!((r.iso.cleared("DR3").unwrap() - 20.0).abs() < 1e-9);
    assert!((r.award() - 1.2).abs() < 1e-9);
    assert!((r.iso.clearing_price - 22.0).abs() < 1e-9);
}

#[test]
fn ideal_matches_coordinated_on_fixtures() {
    for name in case::BUNDLED {
        let s = case::bundled(name).unwrap();
        let rep = check_equivalence(&s, 1e-6).unwrap();
        assert!(rep.pass, "{name}: {}", rep.max_deviation);
        let ideal = run_ideal(&s).unwrap();
        assert!(ideal.duality_gap <= 1e-7);
    }
}

#[test]
fn award_is_a_best_response_to_the_clearing_price() {
    let cfg = SynthConfig::default();
    for seed in 0..40 {
        let s = random_scenario(seed, &cfg);
        let r = run_coordinated(&s).unwrap();
        let lambda = r.iso.clearing_price;
        let q = r.award();
        for seg in &r.bid_curve.segments {
            // Segments cheaper than the price are taken in full, dearer ones not at all.
            if seg.price < lambda - 1e-7 {
                assert!(q >= seg.q_hi - 1e-7, "seed {seed}");
            } else if seg.price > lambda + 1e-7 {
                assert!(q <= seg.q_lo + 1e-7, "seed {seed}");
            }
        }
    }
}

#[test]
fn segments_fill_in_price_order() {
    let cfg = SynthConfig::default();
    for seed in 0..40 {
        let s = random_scenario(seed, &cfg);
        let r = run_coordinated(&s).unwrap();
        let fills = &r.iso.dso_segments[0];
        let segs = &r.bid_curve.segments;
        for (i, (fill, seg)) in fills.iter().zip(segs).enumerate() {
            if *fill > 1e-7 {
                for (earlier_fill, earlier) in fills[..i].iter().zip(segs) {
                    if earlier.price < seg.price - 1e-9 {
                        assert!((earlier_fill - earlier.width()).abs() < 1e-7, "seed {seed}");
                    }
                }
            }
        }
        let total: f64 = fills.iter().sum();
        assert!((r.bid_curve.q_min() + total - r.award()).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coordination_reproduces_joint_dispatch(seed in any::<u64>()) {
        let s = random_scenario(seed, &SynthConfig::default());
        let rep = check_equivalence(&s, 1e-6).unwrap();
        prop_assert!(rep.pass, "max deviation {}", rep.max_deviation);
        prop_assert!((rep.objective_ideal - rep.objective_coordinated).abs() <= 1e-6 * (1.0 + rep.objective_ideal.abs()));
    }
}
