//! Chebyshev–Gauss–Lobatto collocation on an interval `[a, b]`.
//!
//! Nodes are stored in increasing order, `y_0 = a` and `y_{n-1} = b` exactly.
//! All operators act on nodal values and are dense `n x n` matrices, which is
//! fine for the resolutions used here (n <= 256).

use ndarray::{Array1, Array2};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    a: f64,
    b: f64,
    nodes: Array1<f64>,
    /// First derivative matrix on the mapped interval.
    d1: Array2<f64>,
    /// Second derivative matrix (`d1 * d1`).
    d2: Array2<f64>,
    /// Nodal values -> Chebyshev coefficients.
    to_coeffs: Array2<f64>,
    /// Clenshaw–Curtis weights for `\int_a^b`.
    cc_weights: Array1<f64>,
    /// Row i integrates from `a` to `y_i`.
    antiderivative: Array2<f64>,
}

impl ChebyshevGrid {
    /// `n` nodes on `[a, b]`; requires `n >= 2` and `a < b`.
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 2, "need at least two Chebyshev nodes");
        assert!(a < b, "empty interval");
        let deg = n - 1;
        let half = (b - a) / 2.0;
        // reference angle theta_j = pi*(deg-j)/deg, x_j = cos(theta_j) increasing in j
        let theta: Vec<f64> = (0..n).map(|j| PI * (deg - j) as f64 / deg as f64).collect();
        let mut nodes = Array1::zeros(n);
        for j in 0..n {
            // sin^2 form keeps the endpoints exact
            let s = (PI * j as f64 / (2 * deg) as f64).sin();
            nodes[j] = a + (b - a) * s * s;
        }
        nodes[0] = a;
        nodes[deg] = b;

        // reference nodes in [-1, 1] for the differentiation matrix
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let s = (PI * j as f64 / (2 * deg) as f64).sin();
                2.0 * s * s - 1.0
            })
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let mut d1 = Array2::zeros((n, n));
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (w[j] / w[i]) / (x[i] - x[j]);
                    d1[[i, j]] = v / half;
                    diag -= v;
                }
            }
            d1[[i, i]] = diag / half;
        }
        let d2 = d1.dot(&d1);

        let cbar = |m: usize| if m == 0 || m == deg { 2.0 } else { 1.0 };
        let mut to_coeffs = Array2::zeros((n, n));
        for m in 0..n {
            for j in 0..n {
                to_coeffs[[m, j]] =
                    2.0 / (deg as f64 * cbar(m) * cbar(j)) * (m as f64 * theta[j]).cos();
            }
        }

        let mut grid = ChebyshevGrid {
            a,
            b,
            nodes,
            d1,
            d2,
            to_coeffs,
            cc_weights: Array1::zeros(n),
            antiderivative: Array2::zeros((n, n)),
        };
        grid.cc_weights = grid.partial_weights(a, b);
        let mut anti = Array2::zeros((n, n));
        for i in 0..n {
            let row = grid.partial_weights(a, grid.nodes[i]);
            anti.row_mut(i).assign(&row);
        }
        grid.antiderivative = anti;
        grid
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> &Array1<f64> {
        &self.nodes
    }

    pub fn d1(&self) -> &Array2<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &Array2<f64> {
        &self.d2
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.cc_weights
    }

    /// Matrix whose row i gives `\int_a^{y_i}` of the nodal interpolant.
    pub fn antiderivative(&self) -> &Array2<f64> {
        &self.antiderivative
    }

    pub fn to_coeffs(&self) -> &Array2<f64> {
        &self.to_coeffs
    }

    fn to_reference(&self, y: f64) -> f64 {
        (2.0 * y - self.a - self.b) / (self.b - self.a)
    }

    /// Quadrature weights for `\int_lo^hi` of the degree-(n-1) interpolant.
    ///
    /// Built from exact integrals of `T_m` on the reference interval, so the
    /// result is exact for polynomials of degree < n.
    pub fn partial_weights(&self, lo: f64, hi: f64) -> Array1<f64> {
        let n = self.len();
        let xl = self.to_reference(lo).clamp(-1.0, 1.0);
        let xh = self.to_reference(hi).clamp(-1.0, 1.0);
        let tl = chebyshev_values(n + 1, xl);
        let th = chebyshev_values(n + 1, xh);
        let half = (self.b - self.a) / 2.0;
        let mut moments = Array1::zeros(n);
        for m in 0..n {
            let prim = |t: &[f64], x: f64| -> f64 {
                match m {
                    0 => x,
                    1 => 0.5 * x * x,
                    _ => t[m + 1] / (2.0 * (m as f64 + 1.0)) - t[m - 1] / (2.0 * (m as f64 - 1.0)),
                }
            };
            moments[m] = half * (prim(&th, xh) - prim(&tl, xl));
        }
        self.to_coeffs.t().dot(&moments)
    }

    /// Row vector evaluating the nodal interpolant at `y`.
    pub fn eval_row(&self, y: f64) -> Array1<f64> {
        let x = self.to_reference(y).clamp(-1.0, 1.0);
        let t = chebyshev_values(self.len(), x);
        self.to_coeffs.t().dot(&Array1::from(t))
    }

    /// Interpolation matrix from this grid's nodes to `points`.
    pub fn interp_matrix(&self, points: &[f64]) -> Array2<f64> {
        let mut m = Array2::zeros((points.len(), self.len()));
        for (i, &p) in points.iter().enumerate() {
            m.row_mut(i).assign(&self.eval_row(p));
        }
        m
    }
}

/// `T_0(x), ..., T_{count-1}(x)` by the three-term recurrence.
pub fn chebyshev_values(count: usize, x: f64) -> Vec<f64> {
    let mut t = vec![0.0; count.max(2)];
    t[0] = 1.0;
    t[1] = x;
    for m in 2..count {
        t[m] = 2.0 * x * t[m - 1] - t[m - 2];
    }
    t.truncate(count);
    t
}
