//! Small dense linear-algebra helpers shared by the logratio, sparse PCA and
//! STEP modules.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative norm below which a new direction is treated as lying in the
/// span of the basis already accumulated.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Incrementally built orthonormal basis of a column subspace of `R^n`.
///
/// Used to evaluate `||P_S X||_F^2` for a growing set of columns `S`
/// without refactorising.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<DVector<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// Part of `v` orthogonal to the current basis, normalised, or `None`
    /// when `v` is (numerically) in the span. Two Gram-Schmidt passes.
    pub fn orthogonal_direction(&self, v: &DVector<f64>) -> Option<DVector<f64>> {
        debug_assert_eq!(v.len(), self.dim);
        let norm0 = v.norm();
        if norm0 == 0.0 {
            return None;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm <= DEPENDENCE_TOL * norm0 {
            None
        } else {
            Some(r / norm)
        }
    }

    /// Adds `v` to the basis. Returns `false` if it was dependent.
    pub fn push(&mut self, v: &DVector<f64>) -> bool {
        match self.orthogonal_direction(v) {
            Some(q) => {
                self.vectors.push(q);
                true
            }
            None => false,
        }
    }

    pub fn push_direction(&mut self, q: DVector<f64>) {
        self.vectors.push(q);
    }

    /// `||P x||_F^2` summed over the columns of `x`.
    pub fn captured(&self, x: &DMatrix<f64>) -> f64 {
        self.vectors
            .iter()
            .map(|q| captured_by_direction(q, x))
            .sum()
    }
}

/// `||q^T x||^2` for a unit vector `q`.
pub fn captured_by_direction(q: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    (x.transpose() * q).norm_squared()
}

/// Largest eigenvalue of the Gram matrix `x^T x`, by power iteration applied
/// as `x^T (x v)`. The start vector is Gaussian, drawn from `seed`.
pub fn gram_spectral_norm(x: &DMatrix<f64>, tol: f64, max_iter: usize, seed: u64) -> f64 {
    let m = x.ncols();
    if m == 0 || x.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    let nv = v.norm();
    v /= nv;
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = x.transpose() * (x * &v);
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |best, v| {
            if v.abs() > best.abs() {
                v
            } else {
                best
            }
        });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Top-`k` right singular vectors of `x` as an `ncols × k` matrix, with the
/// sign convention of [`fix_column_signs`].
pub fn top_right_singular_vectors(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let m = x.ncols();
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let mut out = DMatrix::zeros(m, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    // Fewer singular triplets than k (n < k): complete with unit vectors.
    let mut basis = OrthoBasis::new(m);
    for c in 0..k.min(idx.len()) {
        basis.push(&out.column(c).into_owned());
    }
    let mut e = 0;
    for c in idx.len()..k {
        while e < m {
            let unit = DVector::from_fn(m, |i, _| if i == e { 1.0 } else { 0.0 });
            e += 1;
            if let Some(q) = basis.orthogonal_direction(&unit) {
                out.set_column(c, &q);
                basis.push_direction(q);
                break;
            }
        }
    }
    fix_column_signs(&mut out);
    out
}
