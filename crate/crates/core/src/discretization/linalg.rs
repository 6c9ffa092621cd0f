use crate::error::{HydroError, Result};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

/// LU factorisation of a real dense matrix, applied to complex right-hand sides
/// by solving the real and imaginary parts separately.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &Array2<f64>, what: &str, k: i64) -> Result<Self> {
        let (n, m) = a.dim();
        if n != m {
            return Err(HydroError::Dimension(format!("{what}: matrix is {n}x{m}")));
        }
        let mat = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        let lu = mat.lu();
        if !lu.is_invertible() {
            return Err(HydroError::Singular { k, what: what.to_string() });
        }
        Ok(DenseLu { lu, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn solve_real(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let v = DVector::from_iterator(self.n, b.iter().copied());
        let x = self.lu.solve(&v).expect("factorisation checked invertible");
        Array1::from_iter(x.iter().copied())
    }

    pub fn solve(&self, b: ArrayView1<Complex64>) -> Array1<Complex64> {
        let re = self.solve_real(b.mapv(|c| c.re).view());
        let im = self.solve_real(b.mapv(|c| c.im).view());
        re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }
}
