//! Small complex linear-algebra helpers shared by the signal-processing modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `e^{j 2π num / den}` with the argument reduced modulo `den` first.
pub fn unit_root(num: i64, den: usize) -> C64 {
    let den_i = den as i64;
    let r = num.rem_euclid(den_i);
    // Exact values at the quarter turns keep small DFTs free of rounding.
    if 4 * r == 0 {
        return C64::new(1.0, 0.0);
    }
    if 4 * r == den_i {
        return C64::new(0.0, 1.0);
    }
    if 2 * r == den_i {
        return C64::new(-1.0, 0.0);
    }
    if 4 * r == 3 * den_i {
        return C64::new(0.0, -1.0);
    }
    C64::from_polar(1.0, 2.0 * PI * r as f64 / den as f64)
}

/// Unitary `n × n` DFT basis whose column `k` is `e^{+j2π mk/n}/√n`.
pub fn dft_basis(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, k| unit_root((m * k) as i64, n) * scale)
}

/// Unitary DFT basis with the opposite sign convention, column `k` is `e^{-j2π mk/n}/√n`.
pub fn dft_basis_conj(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, k| unit_root(-((m * k) as i64), n) * scale)
}

/// Largest absolute entry of `BᴴB − I`.
pub fn unitary_deviation(b: &CMatrix) -> f64 {
    let gram = b.adjoint() * b;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // Symmetrise explicitly so round-off in the accumulation cannot skew the solver.
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Indices of the `k` largest values; ties go to the lower index.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Squared Frobenius norm.
pub fn fro_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Random matrix with i.i.d. `CN(0, 1)` entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}
