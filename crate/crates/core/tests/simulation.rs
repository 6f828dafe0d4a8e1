use coda_splr::coda::{composition_to_balances, sbp_to_contrast};
use coda_splr::simlab::{
    build_scenario, generate_dataset, important_plrs, sample_balances, ImportanceRule,
    ScenarioId, NOISE_BOUND, RELEVANT_CORRELATION,
};
use coda_splr::stability::{compute_paths_with, PathOptions};
use coda_splr::coda::plr_expand;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0);
    let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / (n - 1.0);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    (va, vb, cov / (va * vb).sqrt())
}

#[test]
fn sampler_moments_match_the_design() {
    let sc = build_scenario(ScenarioId::A, 10).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let b = sample_balances(&sc, 100_000, &mut rng).unwrap();
    let col = |j: usize| b.column(j).iter().copied().collect::<Vec<f64>>();

    let (r0, r1) = (sc.relevant[0], sc.relevant[3]);
    let (v0, v1, rho) = moments(&col(r0), &col(r1));
    assert!((rho - RELEVANT_CORRELATION).abs() < 0.02, "correlation {rho}");
    assert!((v0 - 1.0).abs() < 0.03 && (v1 - 1.0).abs() < 0.03);

    let noise = col(sc.noise[0]);
    let (vn, _, cross) = moments(&noise, &col(r0));
    let uniform_var = (2.0 * NOISE_BOUND).powi(2) / 12.0;
    assert!((vn - uniform_var).abs() < 0.05, "noise variance {vn}");
    assert!(cross.abs() < 0.02, "noise correlated with relevant: {cross}");
    assert!(noise.iter().all(|v| v.abs() <= NOISE_BOUND));
}

#[test]
fn generated_compositions_carry_the_sampled_balances() {
    for id in ScenarioId::ALL {
        for d in [10, 20] {
            let sc = build_scenario(id, d).unwrap();
            let x = generate_dataset(&sc, 50, 11).unwrap();
            assert_eq!((x.n(), x.d()), (50, d));
            for row in x.values().row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
            let mut rng = ChaCha20Rng::seed_from_u64(11);
            let b = sample_balances(&sc, 50, &mut rng).unwrap();
            let back = composition_to_balances(&x, &sbp_to_contrast(&sc.sbp)).unwrap();
            assert!((back - b).abs().max() < 1e-9);
        }
    }
}

#[test]
fn relevant_and_noise_balances_partition_the_basis() {
    for id in ScenarioId::ALL {
        for (d, relevant) in [(10, [5, 7, 2]), (20, [10, 15, 4])] {
            let sc = build_scenario(id, d).unwrap();
            let expected = relevant[ScenarioId::ALL.iter().position(|&s| s == id).unwrap()];
            assert_eq!(sc.relevant.len(), expected, "{id}{d}");
            assert_eq!(sc.relevant.len() + sc.noise.len(), d - 1);
            let strict = important_plrs(&sc, ImportanceRule::Strict);
            let lax = important_plrs(&sc, ImportanceRule::Lax);
            assert!(strict.important.iter().all(|c| lax.important.contains(c)));
        }
    }
}

#[test]
fn sparsity_grows_along_the_grid() {
    let sc = build_scenario(ScenarioId::B, 10).unwrap();
    for seed in 0..3 {
        let xp = plr_expand(&generate_dataset(&sc, 100, seed).unwrap(), true);
        let report = compute_paths_with(&xp, &PathOptions::default()).unwrap();
        let zero: Vec<f64> = report.tradeoff.iter().map(|t| t.pct_zero).collect();
        assert_eq!(zero[0], 0.0);
        assert_eq!(*zero.last().unwrap(), 100.0);
        // Warm-started paths may wobble by a logratio or two, never more.
        let step = 100.0 / xp.m() as f64;
        for w in zero.windows(2) {
            assert!(w[1] >= w[0] - 2.0 * step - 1e-9, "{w:?}");
        }
    }
}
