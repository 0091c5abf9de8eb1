use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcsck_core::error::Error;
use wcsck_core::linalg::{dot, BandMatrix, BorderedSolver};

fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = BandMatrix::zeros(n, kl, ku);
    for i in 0..n {
        for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
            a.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    a
}

#[test]
fn band_lu_matches_dense_solve_with_pivoting() {
    for (kl, ku, seed) in [(2, 2, 1), (3, 1, 2), (1, 4, 3), (4, 4, 4)] {
        let a = random_band(60, kl, ku, seed);
        let b: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let dense = a.to_dense().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let x = a.clone().factor().unwrap().solve(&b);
        let err = x.iter().zip(dense.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let size = dense.amax();
        assert!(err < 1e-11 * size.max(1.0), "kl={kl} ku={ku}: {err} of {size}");
        let r = a.mul_vec(&x);
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12 * size.max(1.0)));
    }
}

#[test]
fn zero_pivot_needs_row_exchange() {
    let mut a = BandMatrix::zeros(3, 1, 1);
    a.set(0, 1, 1.0);
    a.set(1, 0, 1.0);
    a.set(1, 2, 1.0);
    a.set(2, 1, 1.0);
    a.set(2, 2, 1.0);
    let x = a.clone().factor().unwrap().solve(&[1.0, 2.0, 3.0]);
    assert_eq!(a.mul_vec(&x), vec![1.0, 2.0, 3.0]);
}

#[test]
fn singular_matrix_is_rejected() {
    let mut a = BandMatrix::zeros(4, 1, 1);
    for i in 0..4 {
        a.set(i, i, 1.0);
    }
    a.set(2, 2, 0.0);
    assert!(matches!(a.factor(), Err(Error::SingularLinearization)));
}

/// Discrete Neumann Laplacian: constants span the kernel.
fn neumann(n: usize) -> BandMatrix {
    let mut a = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        let mut diag = 0.0;
        if i > 0 {
            a.set(i, i - 1, -1.0);
            diag += 1.0;
        }
        if i + 1 < n {
            a.set(i, i + 1, -1.0);
            diag += 1.0;
        }
        a.set(i, i, diag);
    }
    a
}

#[test]
fn bordered_solve_handles_a_kernel() {
    let n = 50;
    let a = neumann(n);
    let ones = vec![1.0; n];
    let solver = BorderedSolver::new(&a, vec![ones.clone()], vec![ones.clone()], vec![n / 2]).unwrap();
    let mut r: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).cos()).collect();
    let mean = r.iter().sum::<f64>() / n as f64;
    r.iter_mut().for_each(|x| *x -= mean);
    let (x, lam) = solver.solve(&r, &[0.0]).unwrap();
    assert!(lam[0].abs() < 1e-12, "{lam:?}");
    assert!(dot(&ones, &x).abs() < 1e-10);
    let ax = a.mul_vec(&x);
    assert!(ax.iter().zip(&r).all(|(p, q)| (p - q).abs() < 1e-10));
    let (_, lam) = solver.solve(&vec![1.0; n], &[0.0]).unwrap();
    assert!((lam[0] - 1.0).abs() < 1e-10, "{lam:?}");
}

#[test]
fn bordered_solve_with_two_kernel_modes() {
    let n = 40;
    let mut a = BandMatrix::zeros(2 * n, 1, 1);
    let block = neumann(n);
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            a.set(i, j, block.get(i, j));
            a.set(n + i, n + j, block.get(i, j));
        }
    }
    let e1: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { 0.0 }).collect();
    let e2: Vec<f64> = (0..2 * n).map(|i| if i < n { 0.0 } else { 1.0 }).collect();
    let solver = BorderedSolver::new(&a, vec![e1.clone(), e2.clone()], vec![e1.clone(), e2.clone()], vec![3, n + 7]).unwrap();
    let r: Vec<f64> = (0..2 * n).map(|i| (i as f64).sin()).map(|x| x + 0.5).collect();
    let (x, lam) = solver.solve(&r, &[0.1, -0.2]).unwrap();
    assert!((dot(&e1, &x) - 0.1).abs() < 1e-10 && (dot(&e2, &x) + 0.2).abs() < 1e-10);
    let ax = a.mul_vec(&x);
    for i in 0..2 * n {
        let c = if i < n { lam[0] } else { lam[1] };
        assert!((ax[i] + c - r[i]).abs() < 1e-10);
    }
}
