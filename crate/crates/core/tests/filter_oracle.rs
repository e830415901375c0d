mod oracle;

use msfuzzy::filter::{filter_and_smooth, hamilton_filter, kim_smoother};
use msfuzzy::markov::{ergodic_probabilities, mean_duration, simulate_chain, simulate_ms};
use msfuzzy::rng::rng_from_seed;
use msfuzzy::{dgp_catalog, MSModelSpec, TimeSeries, TransitionMatrix};
use oracle::{enumerate_paths, ergodic_by_powers, random_spec, random_transition};
use rand::Rng;

fn check_against_enumeration(y: &TimeSeries, spec: &MSModelSpec) {
    let (ll, paths) = filter_and_smooth(y, spec).unwrap();
    let (ll_ref, marg) = enumerate_paths(y.values(), spec);
    assert!((ll - ll_ref).abs() < 1e-10, "loglik {ll} vs {ll_ref}");
    for (t, row) in marg.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((paths.smoothed[(t, j)] - v).abs() < 1e-10, "t={t} j={j}");
        }
    }
}

#[test]
fn filter_and_smoother_match_path_enumeration() {
    let mut rng = rng_from_seed(2024);
    for case in 0..60 {
        let k = 2 + case % 2;
        let order = (case / 2) % 2;
        let spec = random_spec(&mut rng, k, order);
        let len = rng.random_range(2..=if k == 3 { 9 } else { 12 });
        let (y, _) = simulate_ms(&spec, len, &mut rng).unwrap();
        check_against_enumeration(&y, &spec);
    }
}

#[test]
fn enumeration_with_catalog_ar_model() {
    let entry = &dgp_catalog()[8];
    assert_eq!(entry.label, "MS2AR--1");
    let (y, _) = simulate_ms(&entry.spec, 10, &mut rng_from_seed(5)).unwrap();
    check_against_enumeration(&y, &entry.spec);
}

#[test]
fn filtered_equals_smoothed_at_the_end() {
    let mut rng = rng_from_seed(3);
    for order in [0, 1] {
        let spec = random_spec(&mut rng, 3, order);
        let (y, _) = simulate_ms(&spec, 80, &mut rng).unwrap();
        let out = hamilton_filter(&y, &spec).unwrap();
        let paths = kim_smoother(&out, &spec.transition).unwrap();
        let last = y.len() - 1;
        for j in 0..3 {
            assert!((out.filtered[(last, j)] - paths.smoothed[(last, j)]).abs() < 1e-12);
        }
        for t in 0..y.len() {
            for m in [&paths.predicted, &paths.filtered, &paths.smoothed] {
                let s: f64 = m.row(t).iter().sum();
                assert!((s - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn ergodic_distribution_matches_power_iteration() {
    let mut rng = rng_from_seed(17);
    for k in 2..=4 {
        for _ in 0..20 {
            let p = random_transition(&mut rng, k);
            let pi = ergodic_probabilities(&p).unwrap();
            let reference = ergodic_by_powers(&p);
            for (a, b) in pi.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
    for e in dgp_catalog() {
        let pi = ergodic_probabilities(&e.spec.transition).unwrap();
        let reference = ergodic_by_powers(&e.spec.transition);
        assert!(pi.iter().zip(&reference).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn long_run_frequencies_and_durations() {
    let p = TransitionMatrix::new(vec![
        vec![0.9, 0.07, 0.03],
        vec![0.15, 0.8, 0.05],
        vec![0.1, 0.2, 0.7],
    ])
    .unwrap();
    let pi = ergodic_probabilities(&p).unwrap();
    let path = simulate_chain(&p, 400_000, &mut rng_from_seed(99)).unwrap();
    let mut counts = [0usize; 3];
    let mut spells = [(0usize, 0usize); 3];
    let states = path.states();
    let mut run = 1;
    for t in 0..states.len() {
        counts[states[t]] += 1;
        if t + 1 < states.len() && states[t + 1] == states[t] {
            run += 1;
        } else {
            spells[states[t]].0 += run;
            spells[states[t]].1 += 1;
            run = 1;
        }
    }
    for j in 0..3 {
        let freq = counts[j] as f64 / states.len() as f64;
        assert!((freq - pi[j]).abs() < 0.01, "state {j}: {freq} vs {}", pi[j]);
        let avg_spell = spells[j].0 as f64 / spells[j].1 as f64;
        let d = mean_duration(p.get(j, j)).unwrap();
        assert!((avg_spell - d).abs() / d < 0.03, "state {j}: {avg_spell} vs {d}");
    }
}

#[test]
fn filter_rejects_degenerate_input() {
    let spec = random_spec(&mut rng_from_seed(1), 2, 1);
    let y = TimeSeries::new(vec![0.5]).unwrap();
    assert!(hamilton_filter(&y, &spec).is_err());
}
