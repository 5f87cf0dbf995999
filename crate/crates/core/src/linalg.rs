use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub fn herm_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let e = SymmetricEigen::new(m.clone());
    let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}
