use irlab_core::rng::GaussianStream;
use irlab_core::spectral::{
    best_rank_l, effective_rank, effective_rank_of_spectrum, eigendecompose, random_orthogonal, SymMatrix,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
    let mut g = GaussianStream::new(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = g.standard_normal();
        }
    }
    SymMatrix::from_upper(m).unwrap()
}

fn random_psd(n: usize, rank: usize, seed: u64) -> SymMatrix {
    let mut g = GaussianStream::new(seed);
    let b = DMatrix::from_fn(n, rank, |_, _| g.standard_normal());
    SymMatrix::from_upper(&b * b.transpose()).unwrap()
}

/// Number of eigenvalues of `a` strictly below `x`, by Sylvester's law of
/// inertia: the count of negative pivots in the LDLᵀ factorization of
/// `a − xI`.
fn count_below(a: &DMatrix<f64>, x: f64) -> usize {
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut p = m[(k, k)];
        if p == 0.0 {
            p = -1e-300;
        }
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            for j in k + 1..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    negatives
}

/// Eigenvalues in descending order via bisection on the inertia count.
fn bisection_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let r = a.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    (0..n)
        .map(|idx| {
            // The (idx+1)-th largest is the (n-idx)-th smallest.
            let target = n - idx;
            let (mut lo, mut hi) = (-r, r);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(a, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn jacobi_matches_inertia_bisection() {
    for seed in 0..20 {
        let n = 2 + (seed as usize % 12);
        let a = random_symmetric(n, 1000 + seed);
        let oracle = bisection_eigenvalues(a.as_matrix());
        let d = eigendecompose(&a).unwrap();
        for (x, y) in d.values().iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "seed {seed}: {x} vs {y}");
        }
    }
}

#[test]
fn best_rank_l_beats_random_rank_l_candidates() {
    let mut g = GaussianStream::new(77);
    for seed in 0..5u64 {
        let n = 8;
        let a = random_psd(n, n, seed);
        let d = eigendecompose(&a).unwrap();
        for l in 1..n {
            let best = best_rank_l(&d, l).unwrap();
            let best_err = (a.as_matrix() - best.as_matrix()).norm();
            // Eckart–Young value.
            let tail: f64 = d.values()[l..].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((best_err - tail).abs() <= 1e-9 * (1.0 + tail));
            for _ in 0..200 {
                // Perturb the optimal factors; any rank-L result must be worse.
                let u =
                    d.vectors().columns(0, l).into_owned() + DMatrix::from_fn(n, l, |_, _| 0.05 * g.standard_normal());
                let s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    l,
                    d.values()[..l].iter().map(|v| v * (1.0 + 0.05 * g.standard_normal())),
                ));
                let cand = &u * s * u.transpose();
                assert!((a.as_matrix() - cand).norm() >= best_err - 1e-12);
            }
        }
    }
}

#[test]
fn effective_rank_of_scaled_projection_is_its_rank() {
    for r in 1..6 {
        let mut diag = vec![0.0; 8];
        diag[..r].iter_mut().for_each(|v| *v = 3.5);
        let q = random_orthogonal(8, r as u64);
        let w = SymMatrix::from_eigenpairs(&q, &diag).unwrap();
        assert!((effective_rank(&w).unwrap() - r as f64).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_is_orthogonal_and_reconstructs(n in 2usize..=25, seed in any::<u64>()) {
        let a = random_symmetric(n, seed);
        let d = eigendecompose(&a).unwrap();
        let v = d.vectors();
        let id = v.transpose() * v;
        prop_assert!((id - DMatrix::identity(n, n)).amax() < 1e-10);
        let back = d.reconstruct();
        prop_assert!((back.as_matrix() - a.as_matrix()).amax() < 1e-10 * (1.0 + a.max_abs()));
        prop_assert!(d.values().windows(2).all(|w| w[0] >= w[1]));
        // Trace is the eigenvalue sum.
        let s: f64 = d.values().iter().sum();
        prop_assert!((s - a.trace()).abs() < 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn effective_rank_is_scale_invariant_and_bounded(
        values in prop::collection::vec(-50.0f64..50.0, 1..20),
        c in prop_oneof![1e-6f64..1e6, -1e6f64..-1e-6],
    ) {
        prop_assume!(values.iter().any(|v| v.abs() > 1e-9));
        let r = effective_rank_of_spectrum(&values).unwrap();
        let rc = effective_rank_of_spectrum(&values.iter().map(|v| v * c).collect::<Vec<_>>()).unwrap();
        prop_assert!((r - rc).abs() <= 1e-10 * r);
        let nonzero = values.iter().filter(|v| **v != 0.0).count() as f64;
        prop_assert!(r >= 1.0 - 1e-12 && r <= nonzero + 1e-12);
    }

    #[test]
    fn weyl_holds_for_random_perturbations(n in 2usize..=12, seed in any::<u64>(), scale in 1e-4f64..2.0) {
        let a = random_symmetric(n, seed);
        let e = random_symmetric(n, seed.wrapping_add(1)).scaled(scale);
        let da = eigendecompose(&a).unwrap();
        let dt = eigendecompose(&a.add(&e).unwrap()).unwrap();
        let en = eigendecompose(&e).unwrap().spectral_norm();
        for (x, y) in da.values().iter().zip(dt.values()) {
            prop_assert!((x - y).abs() <= en * (1.0 + 1e-10) + 1e-12);
        }
    }

    #[test]
    fn psd_nuclear_norm_is_trace(n in 1usize..=15, rank in 1usize..=15, seed in any::<u64>()) {
        let a = random_psd(n, rank.min(n), seed);
        let d = eigendecompose(&a).unwrap();
        prop_assert!((d.nuclear_norm() - a.trace()).abs() <= 1e-9 * (1.0 + a.trace()));
        prop_assert!(d.spectral_norm() <= a.frobenius_norm() * (1.0 + 1e-12));
    }
}
