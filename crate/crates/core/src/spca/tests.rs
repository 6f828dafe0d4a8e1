use super::*;
use crate::coda::{plr_expand, CompositionMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_plr(n: usize, d: usize, seed: u64) -> PlrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Part-specific spreads give distinct leading eigenvalues.
    let spread: Vec<f64> = (0..d).map(|j| 0.3 + 0.25 * j as f64).collect();
    let v = DMatrix::from_fn(n, d, |_, j| {
        let g: f64 = rng.sample(StandardNormal);
        (spread[j] * g).exp()
    });
    plr_expand(&CompositionMatrix::unnamed(v).unwrap(), true)
}

fn random_orthonormal(m: usize, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Direct transcription of the penalised objective, entry by entry.
fn objective_oracle(x: &DMatrix<f64>, b: &DMatrix<f64>, h: &DMatrix<f64>, alpha: f64, beta: f64) -> f64 {
    let (n, m) = x.shape();
    let k = b.ncols();
    let mut rec = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mut fitted = 0.0;
            for c in 0..k {
                let mut score = 0.0;
                for l in 0..m {
                    score += x[(i, l)] * b[(l, c)];
                }
                fitted += score * h[(j, c)];
            }
            rec += (x[(i, j)] - fitted).powi(2);
        }
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for v in b.iter() {
        l1 += v.abs();
        l2 += v * v;
    }
    0.5 * rec + alpha * l1 + 0.5 * beta * l2
}

/// Minimises the scalar prox subproblem on a uniform grid over [-10, 10].
fn prox_grid_oracle(z: f64, step: f64, alpha: f64, beta: f64) -> f64 {
    let f = |b: f64| 0.5 * (b - z).powi(2) + step * (alpha * b.abs() + 0.5 * beta * b * b);
    let mut best = (f64::INFINITY, 0.0);
    let steps = 200_000;
    for i in 0..=steps {
        let b = -10.0 + 20.0 * i as f64 / steps as f64;
        let v = f(b);
        if v < best.0 {
            best = (v, b);
        }
    }
    best.1
}

fn classical_top_k(x: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let cov = x.transpose() * x / (n - 1.0);
    let eig = cov.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vecs = DMatrix::zeros(x.ncols(), k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    let vals = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    (vecs, vals)
}

fn projector(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let q = cols.clone().qr().q();
    &q * q.transpose()
}

#[test]
fn prox_examples() {
    assert_eq!(prox_elastic_net(0.5, 1.0, 0.5, 3.0), 0.0);
    assert_eq!(prox_elastic_net(2.0, 1.0, 0.5, 0.0), 1.5);
    assert_eq!(prox_elastic_net(-2.0, 1.0, 0.5, 0.0), -1.5);
    assert!((prox_elastic_net(2.0, 0.5, 1.0, 2.0) - 0.75).abs() < 1e-15);
}

#[test]
fn prox_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let z: f64 = rng.random_range(-8.0..8.0);
        let step: f64 = rng.random_range(0.05..2.0);
        let alpha: f64 = rng.random_range(0.0..3.0);
        let beta: f64 = rng.random_range(0.0..2.0);
        let got = prox_elastic_net(z, step, alpha, beta);
        let want = prox_grid_oracle(z, step, alpha, beta);
        assert!((got - want).abs() < 1e-3, "z={z} step={step} a={alpha} b={beta}");
    }
}

#[test]
fn objective_matches_oracle() {
    let xp = random_plr(12, 5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = xp.m();
    let b = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
    let h = random_orthonormal(m, 2, &mut rng);
    let got = objective(&xp, &b, &h, 0.3, 0.7).unwrap();
    let want = objective_oracle(xp.values(), &b, &h, 0.3, 0.7);
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
}

#[test]
fn objective_special_cases() {
    let xp = random_plr(30, 6, 5);
    let x = xp.values();
    let m = xp.m();
    let zero = DMatrix::zeros(m, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = random_orthonormal(m, 2, &mut rng);
    let half = 0.5 * x.norm_squared();
    assert!((objective(&xp, &zero, &h, 1.0, 1.0).unwrap() - half).abs() < 1e-12 * half);

    // Eckart-Young: residual of the best rank-2 fit.
    let svd = x.clone().svd(false, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let discarded: f64 = sv[2..].iter().map(|s| s * s).sum();
    let (vk, _) = classical_top_k(x, 2);
    let got = objective(&xp, &vk, &vk, 0.0, 0.0).unwrap();
    assert!((got - 0.5 * discarded).abs() < 1e-9 * half);

    assert!(matches!(
        objective(&xp, &DMatrix::zeros(m + 1, 2), &h, 0.0, 0.0),
        Err(CodaError::DimensionMismatch(_))
    ));
}

#[test]
fn update_h_is_orthonormal_and_optimal() {
    let xp = random_plr(40, 6, 8);
    let m = xp.m();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
    let step = update_h(&xp, &b).unwrap();
    assert!(!step.rank_deficient);
    let hth = step.h.transpose() * &step.h;
    assert!((hth - DMatrix::identity(2, 2)).abs().max() < 1e-10);
    let best = objective(&xp, &b, &step.h, 0.0, 0.0).unwrap();
    for _ in 0..100 {
        let h0 = random_orthonormal(m, 2, &mut rng);
        assert!(best <= objective(&xp, &b, &h0, 0.0, 0.0).unwrap() + 1e-9);
    }
}

#[test]
fn update_h_rank_one_case() {
    let xp = random_plr(25, 5, 12);
    let m = xp.m();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = DMatrix::from_fn(m, 1, |_, _| rng.random_range(-1.0..1.0));
    let h = update_h(&xp, &b).unwrap().h;
    let x = xp.values();
    let a: DVector<f64> = (x.transpose() * (x * &b)).column(0).into_owned();
    let want = &a / a.norm();
    assert!((h.column(0) - want).abs().max() < 1e-12);
}

#[test]
fn update_h_fixed_point_on_eigenvectors() {
    let xp = random_plr(50, 6, 21);
    let (vk, _) = classical_top_k(xp.values(), 2);
    let h = update_h(&xp, &vk).unwrap().h;
    assert!((projector(&h) - projector(&vk)).abs().max() < 1e-9);
}

#[test]
fn update_h_completes_rank_deficiency() {
    let xp = random_plr(20, 4, 6);
    let m = xp.m();
    let mut b = DMatrix::zeros(m, 2);
    b[(0, 0)] = 1.0;
    let step = update_h(&xp, &b).unwrap();
    assert!(step.rank_deficient);
    let hth = step.h.transpose() * &step.h;
    assert!((hth - DMatrix::identity(2, 2)).abs().max() < 1e-10);

    let zero = update_h(&xp, &DMatrix::zeros(m, 2)).unwrap();
    assert!(zero.rank_deficient);
    assert!((zero.h.transpose() * &zero.h - DMatrix::identity(2, 2)).abs().max() < 1e-10);
}

#[test]
fn dense_fit_matches_classical_pca() {
    for seed in 0..5 {
        let xp = random_plr(100, 7, 100 + seed);
        let fit = fit(&xp, &SpcaConfig::default()).unwrap();
        let (vk, vals) = classical_top_k(xp.values(), 2);
        let x = xp.values();
        let classical = projector(&(x * &vk)) * x;
        let sparse = projector(&fit.z) * x;
        let rel = (&sparse - &classical).norm() / classical.norm();
        assert!(rel < 1e-5, "seed {seed}: rel {rel}");
        let total: f64 = vals.iter().sum();
        let want = 100.0 * (vals[0] + vals[1]) / total;
        assert!((fit.exvar_pct - want).abs() < 1e-6);
        assert!((explained_variance_k(&xp, &fit).unwrap() - want).abs() < 1e-6);
        assert_eq!(fit.nonzero_rows.len(), xp.m());
    }
}

#[test]
fn fit_invariants_hold() {
    let xp = random_plr(60, 6, 31);
    let solver = SparsePca::new(&xp, 2, 0).unwrap();
    let amax = solver.alpha_max(&SpcaConfig::default()).unwrap();
    for frac in [0.0, 0.01, 0.1, 0.3, 0.6] {
        let cfg = SpcaConfig::default().with_alpha(frac * amax);
        let f = solver.fit(&cfg, None).unwrap();
        let hth = f.h.transpose() * &f.h;
        assert!((hth - DMatrix::identity(2, 2)).abs().max() < 1e-8);
        assert_eq!(f.z, xp.values() * &f.b);
        for w in f.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "trace increased: {} -> {}", w[0], w[1]);
        }
        for r in 0..xp.m() {
            let nz = f.b.row(r).iter().any(|&v| v != 0.0);
            assert_eq!(nz, f.nonzero_rows.contains(&r));
        }
    }
}

#[test]
fn alpha_max_is_a_sparsity_boundary() {
    let xp = random_plr(60, 6, 41);
    let cfg = SpcaConfig::default();
    let amax = find_alpha_max(&xp, &cfg).unwrap();
    assert!(amax > 0.0);
    let at = fit(&xp, &cfg.with_alpha(amax)).unwrap();
    assert!(at.is_all_zero());
    assert_eq!(at.exvar_pct, 0.0);
    assert!(fit(&xp, &cfg.with_alpha(1.01 * amax)).unwrap().is_all_zero());
    assert!(!fit(&xp, &cfg.with_alpha(0.5 * amax)).unwrap().is_all_zero());
}

#[test]
fn constant_data_has_zero_alpha_max() {
    let v = DMatrix::from_fn(10, 4, |_, j| (j + 1) as f64);
    let xp = plr_expand(&CompositionMatrix::unnamed(v).unwrap(), true);
    assert_eq!(find_alpha_max(&xp, &SpcaConfig::default()).unwrap(), 0.0);
    let f = fit(&xp, &SpcaConfig::default()).unwrap();
    assert!(f.is_all_zero());
    assert_eq!(f.exvar_pct, 0.0);
}

#[test]
fn fit_is_deterministic() {
    let xp = random_plr(50, 6, 51);
    let cfg = SpcaConfig::default().with_alpha(5.0);
    let a = fit(&xp, &cfg).unwrap();
    let b = fit(&xp, &cfg).unwrap();
    assert_eq!(a.b, b.b);
    assert_eq!(a.objective_trace, b.objective_trace);
}

#[test]
fn rejects_bad_config_and_uncentered_input() {
    let xp = random_plr(10, 4, 1);
    assert!(fit(&xp, &SpcaConfig { k: 0, ..Default::default() }).is_err());
    assert!(fit(&xp, &SpcaConfig { k: 10, ..Default::default() }).is_err());
    assert!(fit(&xp, &SpcaConfig::default().with_alpha(-1.0)).is_err());
    let v = DMatrix::from_fn(10, 4, |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64);
    let raw = plr_expand(&CompositionMatrix::unnamed(v).unwrap(), false);
    assert_eq!(
        fit(&raw, &SpcaConfig::default()).unwrap_err(),
        CodaError::NotCentered
    );
}
