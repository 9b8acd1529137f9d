use fedenv_core::envelope::{envelope_l1, envelope_l2, naive_envelope, ConstraintGrid};
use fedenv_core::signal::{synth_power_law, SmoothnessParams, TailMode};

fn tail_sum(l: usize, k_max: usize) -> f64 {
    let mut acc = 0.0;
    for k in l + 1..=k_max {
        acc += 2.0 / (k * k) as f64;
    }
    acc
}

#[test]
fn naive_shift_is_the_tail_sum() {
    let params = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
    let s = synth_power_law(&params, TailMode::NonnegSymmetric, 50, 4).sample(512);
    for l in [1, 2, 5, 10] {
        let naive = naive_envelope(&s, l).unwrap();
        assert!((naive.sa1 - tail_sum(l, 50)).abs() < 1e-9, "L={l}");
    }
    assert!((tail_sum(2, 50) - 0.750265).abs() < 1e-6);
}

#[test]
fn optimal_envelopes_undercut_naive_on_power_law() {
    let params = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
    let s = synth_power_law(&params, TailMode::NonnegSymmetric, 50, 4).sample(512);
    let grid = ConstraintGrid::full(512);
    for l in [1, 2, 5] {
        let naive = naive_envelope(&s, l).unwrap();
        let l1 = envelope_l1(&s, l, &grid).unwrap();
        let l2 = envelope_l2(&s, l, &grid).unwrap();
        assert!(l1.sa1 < 0.9 * naive.sa1, "L={l}: {} vs {}", l1.sa1, naive.sa1);
        assert!(l2.sa2 < naive.sa2, "L={l}");
    }
}
