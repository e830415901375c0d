mod oracle;

use msfuzzy::experiments::{emit_density_grid, GridSpec};
use msfuzzy::markov::{ergodic_mixture_density, mixture_support, simulate_chain, simulate_ms};
use msfuzzy::rng::rng_from_seed;
use msfuzzy::{dgp_catalog, ergodic_probabilities, find_dgp};
use oracle::count_modes;

#[test]
fn catalog_chains_reach_their_ergodic_frequencies() {
    for e in dgp_catalog().iter().step_by(8) {
        let p = &e.spec.transition;
        let pi = ergodic_probabilities(p).unwrap();
        let k = p.k();
        for j in 0..k {
            let drift: f64 = (0..k).map(|i| pi[i] * p.get(i, j)).sum::<f64>() - pi[j];
            assert!(drift.abs() < 1e-10);
        }
        let path = simulate_chain(p, 100_000, &mut rng_from_seed(7)).unwrap();
        let mut counts = vec![0usize; k];
        let mut trans = vec![vec![0usize; k]; k];
        for w in path.states().windows(2) {
            trans[w[0]][w[1]] += 1;
        }
        path.states().iter().for_each(|&s| counts[s] += 1);
        for j in 0..k {
            assert!((counts[j] as f64 / 1e5 - pi[j]).abs() < 0.01, "{} state {j}", e.label);
            let row: usize = trans[j].iter().sum();
            let diag = trans[j][j] as f64 / row as f64;
            assert!((diag - p.get(j, j)).abs() < 0.01, "{} p_{j}{j}", e.label);
        }
    }
}

#[test]
fn simulated_states_have_the_right_means_and_persistence() {
    let (_, e) = find_dgp("MS2--4").unwrap();
    let (y, s) = simulate_ms(&e.spec, 10_000, &mut rng_from_seed(1)).unwrap();
    let high: Vec<f64> = y
        .values()
        .iter()
        .zip(s.states())
        .filter(|(_, &st)| st == 1)
        .map(|(v, _)| *v)
        .collect();
    let m = high.iter().sum::<f64>() / high.len() as f64;
    assert!((m - 4.0).abs() < 0.1);

    let (_, e) = find_dgp("MS2AR--4").unwrap();
    let (y, s) = simulate_ms(&e.spec, 20_000, &mut rng_from_seed(2)).unwrap();
    let dev: Vec<f64> = y
        .values()
        .iter()
        .zip(s.states())
        .map(|(v, &st)| v - e.spec.means[st])
        .collect();
    let mean = dev.iter().sum::<f64>() / dev.len() as f64;
    let var: f64 = dev.iter().map(|d| (d - mean).powi(2)).sum();
    let cov: f64 = dev.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    assert!((cov / var - 0.7).abs() < 0.03, "lag-1 autocorrelation {}", cov / var);
}

#[test]
fn simulation_is_bit_identical_for_a_seed() {
    let (_, e) = find_dgp("MS3AR--2").unwrap();
    let a = simulate_ms(&e.spec, 300, &mut rng_from_seed(42)).unwrap();
    let b = simulate_ms(&e.spec, 300, &mut rng_from_seed(42)).unwrap();
    assert_eq!(a, b);
}

fn trapezoid(xs: &[f64], f: &[f64]) -> f64 {
    xs.windows(2)
        .zip(f.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

#[test]
fn every_mixture_density_integrates_to_one() {
    for e in dgp_catalog() {
        let (lo, hi) = mixture_support(&e.spec, 8.0).unwrap();
        let n = 20_001;
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let d = ergodic_mixture_density(&e.spec, &xs).unwrap();
        let integral = trapezoid(&xs, &d);
        assert!((integral - 1.0).abs() < 1e-6, "{}: {integral}", e.label);
    }
}

#[test]
fn mixture_modes() {
    let grid = GridSpec {
        n_points: 4001,
        ..Default::default()
    };
    let (xs, d) = emit_density_grid("MS2--4", &grid).unwrap();
    assert_eq!(count_modes(&d), 2);
    let mut peaks: Vec<f64> = (1..d.len() - 1)
        .filter(|&i| d[i] > d[i - 1] && d[i] > d[i + 1])
        .map(|i| xs[i])
        .collect();
    peaks.sort_by(f64::total_cmp);
    assert!((peaks[0] - 0.0).abs() < 0.05 && (peaks[1] - 4.0).abs() < 0.05, "{peaks:?}");

    let (_, d) = emit_density_grid("MS3--4", &grid).unwrap();
    assert_eq!(count_modes(&d), 3);
}
