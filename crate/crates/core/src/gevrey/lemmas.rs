//! Sampled checks of the product and commutator inequalities in Gevrey and
//! Sobolev spaces on the circle.
//!
//! Each check draws random real trigonometric polynomials, evaluates both
//! sides exactly in coefficient space (direct convolution, no aliasing) and
//! reports the largest observed ratio `lhs / rhs`, where `rhs` omits the
//! unknown constant. Norms use the coefficient convention
//! `|f|_{X^r}^2 = sum_k <k>^{2r} e^{2 tau <k>^sigma} |f_k|^2`.

use super::{japanese, CutoffProfile};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Real trigonometric polynomial `sum_{|k| <= degree} c_k e^{ikx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    degree: i64,
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn zero(degree: i64) -> Self {
        TrigPoly {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); (2 * degree + 1) as usize],
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = TrigPoly::zero(0);
        p.coeffs[0] = Complex64::new(c, 0.0);
        p
    }

    /// Conjugate-symmetric coefficients with real and imaginary parts uniform in [-1, 1].
    pub fn random(degree: i64, rng: &mut ChaCha8Rng) -> Self {
        let mut p = TrigPoly::zero(degree);
        p.set(0, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
        for k in 1..=degree {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            p.set(k, c);
            p.set(-k, c.conj());
        }
        p
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k.abs() > self.degree {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.degree) as usize]
        }
    }

    pub fn set(&mut self, k: i64, c: Complex64) {
        let d = self.degree;
        self.coeffs[(k + d) as usize] = c;
    }

    pub fn map(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for k in -self.degree..=self.degree {
            out.set(k, f(k, self.get(k)));
        }
        out
    }

    pub fn ddx(&self) -> Self {
        self.map(|k, c| c * Complex64::new(0.0, k as f64))
    }

    /// Exact product by direct convolution.
    pub fn mul(&self, other: &TrigPoly) -> Self {
        let mut out = TrigPoly::zero(self.degree + other.degree);
        for a in -self.degree..=self.degree {
            let ca = self.get(a);
            if ca == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in -other.degree..=other.degree {
                let idx = (a + b + out.degree) as usize;
                out.coeffs[idx] += ca * other.get(b);
            }
        }
        out
    }

    /// `|f|_{X^r}` at radius `tau` (tau = 0 gives `H^r`).
    pub fn norm(&self, r: f64, tau: f64, sigma: f64) -> f64 {
        (-self.degree..=self.degree)
            .map(|k| {
                let jk = japanese(k as f64);
                jk.powf(2.0 * r) * (2.0 * tau * jk.powf(sigma)).exp() * self.get(k).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn cutoff_high(&self, n: f64, profile: &CutoffProfile) -> Self {
        self.map(|k, c| c * profile.eval(k as f64 / n))
    }
}

/// Bilinear form `B(f, g)_k = sum_l m(k, l) f_{k-l} (i l) g_l`.
fn bilinear_dx(f: &TrigPoly, g: &TrigPoly, m: impl Fn(i64, i64) -> f64) -> TrigPoly {
    let mut out = TrigPoly::zero(f.degree() + g.degree());
    for k in -out.degree()..=out.degree() {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in -g.degree()..=g.degree() {
            let fk = f.get(k - l);
            if fk == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += m(k, l) * fk * Complex64::new(0.0, l as f64) * g.get(l);
        }
        out.set(k, acc);
    }
    out
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Sampling controls shared by the lemma checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub trials: usize,
    pub degree: i64,
    pub sigma: f64,
    pub tau: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            trials: 100,
            degree: 8,
            sigma: 1.0,
            tau: 0.3,
            seed: 20240531,
        }
    }
}

/// One JSON verification record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub params: BTreeMap<String, f64>,
    pub trials: usize,
    pub seed: u64,
    pub max_ratio: f64,
}

impl LemmaReport {
    fn new(lemma: &str, params: &[(&str, f64)], sampling: &Sampling, max_ratio: f64) -> Self {
        let mut p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        p.insert("degree".into(), sampling.degree as f64);
        p.insert("sigma".into(), sampling.sigma);
        p.insert("tau".into(), sampling.tau);
        LemmaReport {
            lemma: lemma.to_string(),
            params: p,
            trials: sampling.trials,
            seed: sampling.seed,
            max_ratio,
        }
    }
}

/// Ratio for `|fg|_{X^r} <= C |f|_{X^s}|g|_{X^r} + C |f|_{X^r}|g|_{X^s}`.
pub fn product_ratio(f: &TrigPoly, g: &TrigPoly, r: f64, s: f64, tau: f64, sigma: f64) -> f64 {
    let lhs = f.mul(g).norm(r, tau, sigma);
    let rhs = f.norm(s, tau, sigma) * g.norm(r, tau, sigma) + f.norm(r, tau, sigma) * g.norm(s, tau, sigma);
    ratio(lhs, rhs)
}

/// High-frequency product form with `P_{>=N}` and `P_{>=N/2}`.
pub fn product_high_ratio(f: &TrigPoly, g: &TrigPoly, r: f64, s: f64, n: f64, tau: f64, sigma: f64) -> f64 {
    let prof = CutoffProfile::default();
    let lhs = f.mul(g).cutoff_high(n, &prof).norm(r, tau, sigma);
    let rhs = f.norm(s, tau, sigma) * g.cutoff_high(n / 2.0, &prof).norm(r, tau, sigma)
        + f.cutoff_high(n / 2.0, &prof).norm(r, tau, sigma) * g.norm(s, tau, sigma);
    ratio(lhs, rhs)
}

/// Parameters of the commutator estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorParams {
    pub r: f64,
    pub s1: f64,
    pub s: f64,
    pub delta: f64,
    pub n: f64,
}

impl Default for CommutatorParams {
    fn default() -> Self {
        CommutatorParams {
            r: 2.0,
            s1: 2.0,
            s: 1.0,
            delta: 0.5,
            n: 4.0,
        }
    }
}

/// The four commutator ratios for one pair `(f, g)`:
/// `[<D>^r, f] dx g`, `[P_{>=N}, f] dx g`, `(f dx g)_Phi - f dx g_Phi` and its cut-off form.
pub fn commutator_ratios(f: &TrigPoly, g: &TrigPoly, p: &CommutatorParams, tau: f64, sigma: f64) -> [f64; 4] {
    let prof = CutoffProfile::default();
    let chi = |k: i64| prof.eval(k as f64 / p.n);
    let ephi = |k: i64| (tau * japanese(k as f64).powf(sigma)).exp();
    let jr = |k: i64| japanese(k as f64).powf(p.r);
    let g_half = g.cutoff_high(p.n / 2.0, &prof);

    let sob_lhs = bilinear_dx(f, g, |k, l| jr(k) - jr(l)).norm(0.0, 0.0, sigma);
    let sob_rhs = f.norm(p.s1, 0.0, sigma) * g.norm(p.r, 0.0, sigma)
        + f.norm(p.r + 1.0 - p.delta, 0.0, sigma) * g.norm(p.s + p.delta, 0.0, sigma);

    let cut_lhs = bilinear_dx(f, g, |k, l| chi(k) - chi(l)).norm(p.r, 0.0, sigma);
    let cut_rhs = f.norm(p.s1, 0.0, sigma) * g_half.norm(p.r, 0.0, sigma)
        + f.norm(p.r + 1.0 - p.delta, 0.0, sigma) * g.norm(p.s + p.delta, 0.0, sigma);

    let mul_lhs = bilinear_dx(f, g, |k, l| ephi(k) - ephi(l)).norm(p.r, 0.0, sigma);
    let mul_rhs = f.norm(p.s1, tau, sigma) * g.norm(p.r + sigma, tau, sigma)
        + f.norm(p.r + 1.0 - p.delta, tau, sigma) * g.norm(p.s + p.delta, tau, sigma);

    let mcut_lhs = bilinear_dx(f, g, |k, l| chi(k) * ephi(k) - chi(l) * ephi(l)).norm(p.r, 0.0, sigma);
    let mcut_rhs = f.norm(p.s1, tau, sigma) * g_half.norm(p.r + sigma, tau, sigma)
        + f.norm(p.r + 1.0 - p.delta, tau, sigma) * g.norm(p.s + p.delta, tau, sigma);

    [
        ratio(sob_lhs, sob_rhs),
        ratio(cut_lhs, cut_rhs),
        ratio(mul_lhs, mul_rhs),
        ratio(mcut_lhs, mcut_rhs),
    ]
}

/// Max sampled ratios of the Gevrey product estimate (plain and high-frequency forms).
pub fn check_product_inequality(r: f64, s: f64, n: f64, sampling: &Sampling) -> Vec<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut plain: f64 = 0.0;
    let mut high: f64 = 0.0;
    for _ in 0..sampling.trials {
        let f = TrigPoly::random(sampling.degree, &mut rng);
        let g = TrigPoly::random(sampling.degree, &mut rng);
        plain = plain.max(product_ratio(&f, &g, r, s, sampling.tau, sampling.sigma));
        high = high.max(product_high_ratio(&f, &g, r, s, n, sampling.tau, sampling.sigma));
    }
    vec![
        LemmaReport::new("gevrey_product", &[("r", r), ("s", s)], sampling, plain),
        LemmaReport::new("gevrey_product_high", &[("r", r), ("s", s), ("N", n)], sampling, high),
    ]
}

/// Max sampled ratios of the four commutator estimates.
pub fn check_commutator_inequalities(p: &CommutatorParams, sampling: &Sampling) -> Vec<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut worst = [0.0f64; 4];
    for _ in 0..sampling.trials {
        let f = TrigPoly::random(sampling.degree, &mut rng);
        let g = TrigPoly::random(sampling.degree, &mut rng);
        let r = commutator_ratios(&f, &g, p, sampling.tau, sampling.sigma);
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }
    let params = [("r", p.r), ("s1", p.s1), ("s", p.s), ("delta", p.delta), ("N", p.n)];
    ["sobolev_commutator", "cutoff_commutator", "multiplier_commutator", "multiplier_cutoff_commutator"]
        .iter()
        .zip(worst)
        .map(|(name, v)| LemmaReport::new(name, &params, sampling, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_give_half_exponential() {
        let one = TrigPoly::constant(1.0);
        for tau in [0.0, 0.3, 1.0] {
            let r = product_ratio(&one, &one, 2.0, 1.0, tau, 1.0);
            assert!((r - tau.exp() / (2.0 * (2.0 * tau).exp())).abs() < 1e-15);
            assert!(r <= 0.5);
        }
    }

    #[test]
    fn zero_factor_gives_zero_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = TrigPoly::random(8, &mut rng);
        assert_eq!(product_ratio(&TrigPoly::zero(8), &g, 2.0, 1.0, 0.3, 1.0), 0.0);
    }

    #[test]
    fn constants_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = TrigPoly::random(8, &mut rng);
        let f = TrigPoly::random(8, &mut rng);
        let p = CommutatorParams::default();
        assert_eq!(commutator_ratios(&TrigPoly::constant(2.5), &g, &p, 0.3, 1.0), [0.0; 4]);
        assert_eq!(commutator_ratios(&f, &TrigPoly::constant(-1.0), &p, 0.3, 1.0), [0.0; 4]);
    }

    #[test]
    fn convolution_matches_nodal_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = TrigPoly::random(3, &mut rng);
        let g = TrigPoly::random(4, &mut rng);
        let fg = f.mul(&g);
        let eval = |p: &TrigPoly, x: f64| -> f64 {
            (-p.degree()..=p.degree())
                .map(|k| (p.get(k) * Complex64::from_polar(1.0, k as f64 * x)).re)
                .sum()
        };
        for x in [0.1, 1.3, 4.0] {
            assert!((eval(&fg, x) - eval(&f, x) * eval(&g, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_ratios_are_finite_and_seeded() {
        let s = Sampling { trials: 20, ..Sampling::default() };
        let a = check_product_inequality(2.0, 1.0, 4.0, &s);
        let b = check_product_inequality(2.0, 1.0, 4.0, &s);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.max_ratio.is_finite() && r.max_ratio > 0.0));
        let c = check_commutator_inequalities(&CommutatorParams::default(), &s);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|r| r.max_ratio.is_finite() && r.max_ratio > 0.0));
    }
}
