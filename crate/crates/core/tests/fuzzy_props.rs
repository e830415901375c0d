use msfuzzy::agreement::rand_index;
use msfuzzy::fuzzy::{fuzzy_kmeans, FuzzyConfig};
use msfuzzy::markov::simulate_ms;
use msfuzzy::rng::rng_from_seed;
use msfuzzy::types::hard_assign;
use msfuzzy::{find_dgp, TimeSeries};
use proptest::prelude::*;

fn ms_sample(label: &str, len: usize, seed: u64) -> (TimeSeries, msfuzzy::StatePath) {
    let (_, e) = find_dgp(label).unwrap();
    simulate_ms(&e.spec, len, &mut rng_from_seed(seed)).unwrap()
}

#[test]
fn small_fuzziness_is_nearly_crisp() {
    let (y, _) = ms_sample("MS2--8", 200, 3);
    let r = fuzzy_kmeans(y.values(), 2, 1.05, &FuzzyConfig::default()).unwrap();
    let worst = (0..y.len())
        .flat_map(|t| (0..2).map(move |j| (t, j)))
        .map(|(t, j)| {
            let u = r.membership.get(t, j);
            (u - u.round()).abs()
        })
        .fold(0.0f64, f64::max);
    assert!(worst < 0.1, "{worst}");
}

#[test]
fn well_separated_states_are_recovered() {
    let mut rands = Vec::new();
    for seed in 0..15 {
        let (y, s) = ms_sample("MS2--8", 100, seed);
        let r = fuzzy_kmeans(y.values(), 2, 2.0, &FuzzyConfig::with_seed(seed)).unwrap();
        rands.push(rand_index(&hard_assign(&r.membership), &s).unwrap());
    }
    rands.sort_by(f64::total_cmp);
    assert_eq!(rands[7], 1.0);
}

#[test]
fn rows_sum_to_one_and_centroids_descend() {
    let (y, _) = ms_sample("MS3--2", 150, 9);
    for k in 1..=5 {
        let r = fuzzy_kmeans(y.values(), k, 2.0, &FuzzyConfig::default()).unwrap();
        for t in 0..y.len() {
            assert!((r.membership.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        assert!(r.centroids.windows(2).all(|w| w[0] > w[1]));
        assert!(r.objective >= 0.0);
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_equivariance(seed in 0u64..1000, a in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0], b in -10.0f64..10.0) {
        let (y, _) = ms_sample("MS3--3", 80, seed);
        let cfg = FuzzyConfig::with_seed(seed);
        let base = fuzzy_kmeans(y.values(), 3, 2.0, &cfg).unwrap();
        let z = y.affine(a, b).unwrap();
        let moved = fuzzy_kmeans(z.values(), 3, 2.0, &cfg).unwrap();
        // a negative scale reverses the descending centroid order
        let map = |j: usize| if a > 0.0 { j } else { 2 - j };
        for j in 0..3 {
            let c = a * base.centroids[map(j)] + b;
            prop_assert!((moved.centroids[j] - c).abs() < 1e-6 * (1.0 + c.abs()));
            for t in 0..y.len() {
                prop_assert!((moved.membership.get(t, j) - base.membership.get(t, map(j))).abs() < 1e-6);
            }
        }
    }
}
