//! Limited-buyer-type machinery on the lottery family.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use menu_forge::limited_types::{
    corner_loss_bound_check, mapping_of_menu, precompute, run_limited_bandit, TypeSet,
};
use menu_forge::mechanisms::{Choice, DemandKind, ItemValuation};

fn item(v: f64) -> ItemValuation {
    ItemValuation::new(vec![v], DemandKind::Additive, 1.0).unwrap()
}

#[test]
fn example_one_buyer_maps_to_the_expensive_lottery() {
    let types = TypeSet::item(vec![item(0.6)]).unwrap();
    // Menu coordinates per entry: (phi, price); the null entry is implicit.
    let menu_params = [0.26, 0.24, 0.95, 0.52];
    let mapping = mapping_of_menu(&types, 2, &menu_params).unwrap();
    assert_eq!(mapping.assignment, vec![Choice::Lottery { entry: 2 }]);
}

#[test]
fn zero_value_types_map_to_null() {
    let types = TypeSet::item(vec![item(0.0), item(0.0)]).unwrap();
    let mapping = mapping_of_menu(&types, 1, &[0.5, 0.3]).unwrap();
    assert!(mapping
        .assignment
        .iter()
        .all(|c| *c == Choice::Lottery { entry: 0 }));
}

#[test]
fn lottery_corner_loss_has_epsilon_slack() {
    // Price moves of at most epsilon in L1 cost at most epsilon revenue per
    // round for lotteries (no unit multiplier).
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..20 {
        let v = rng.gen_range(1..=2);
        let types =
            TypeSet::item((0..v).map(|_| item(rng.gen_range(0.1..=1.0))).collect()).unwrap();
        let epsilon = 0.1;
        let t_len = 5;
        let seq: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..v)).collect();
        let (corner, grid) = corner_loss_bound_check(&types, 1, epsilon, &seq, None).unwrap();
        let slack = epsilon * t_len as f64;
        assert!(
            corner >= grid - slack,
            "trial {trial}: corner {corner} < grid {grid} - {slack}"
        );
    }
}

#[test]
fn lottery_limited_bandit_runs_and_reproduces() {
    let types = TypeSet::item(vec![item(0.6), item(0.3), item(0.9)]).unwrap();
    let pre = precompute(&types, 1, 0.05, 2.0, None).unwrap();
    assert!(pre.experts() > 0);
    assert!(pre.spanner.approximation_c <= 2.0 + 1e-9);

    let t = 4096;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seq: Vec<usize> = (0..t).map(|_| rng.gen_range(0..3)).collect();
    let a = run_limited_bandit(&pre, &seq, None, 77).unwrap();
    let b = run_limited_bandit(&pre, &seq, None, 77).unwrap();
    assert_eq!(a.rows.len(), t);
    assert_eq!(a.rows, b.rows);
    // The learner extracts a reasonable fraction of the hindsight optimum.
    assert!(a.realized_cum_revenue > 0.3 * a.best_cum_revenue);
    // Estimates stay within the range bound.
    assert!(pre.estimate_bound > 0.0);
}
