//! Empirical constants in the kernel size bounds.
//!
//! For each `(ε, k, s)` the largest of `|K₁|, |K₂|, |G₀|, |G₁|` in `L^s(0,1)` is
//! compared with `min{1, (ε(1+|k|))^{-1/s}}` and the largest of
//! `|∂_yK₁|, |∂_yK₂|, |G₂|, |G₃|` with `(ε(1+|k|))^{1-1/s}`. The regularised
//! scale `(1+ε|k|)^{1-1/s}` for the derivative family is reported alongside.

use super::{dk1, dk2, g0, g1, g2, g3, k1, k2};
use crate::discretization::ChebyshevGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundConfig {
    pub epsilons: Vec<f64>,
    pub k_max: i64,
    /// Exponents; `f64::INFINITY` selects the sup norm.
    pub s_values: Vec<f64>,
    pub quadrature_nodes: usize,
    pub constant_limit: f64,
    pub spread_limit: f64,
}

impl Default for KernelBoundConfig {
    fn default() -> Self {
        KernelBoundConfig {
            epsilons: vec![0.2, 0.1, 0.05, 0.01],
            k_max: 256,
            s_values: vec![1.0, 2.0, f64::INFINITY],
            quadrature_nodes: 513,
            constant_limit: 4.0,
            spread_limit: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConstants {
    pub epsilon: f64,
    pub value: f64,
    pub derivative: f64,
    pub derivative_regularized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub config: KernelBoundConfig,
    pub per_epsilon: Vec<EpsilonConstants>,
    pub value_constant: f64,
    pub derivative_constant: f64,
    pub derivative_regularized_constant: f64,
    /// `max_ε |C_ε / mean(C) - 1|` for each family.
    pub value_spread: f64,
    pub derivative_spread: f64,
    pub passed: bool,
}

fn lebesgue_norm(values: &[f64], weights: &[f64], s: f64) -> f64 {
    if s.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v.abs().powf(s))
            .sum::<f64>()
            .powf(1.0 / s)
    }
}

fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().fold(0.0f64, |m, v| m.max((v / mean - 1.0).abs()))
}

/// Sweep `ε × {1..k_max} × s` and report the empirical constants.
pub fn check_kernel_bounds(config: &KernelBoundConfig) -> KernelBoundReport {
    let quad = ChebyshevGrid::new(config.quadrature_nodes, 0.0, 1.0);
    let ys = quad.nodes().to_vec();
    let ws = quad.weights().to_vec();
    let values: [fn(f64, f64) -> f64; 4] = [k1, k2, g0, g1];
    let derivatives: [fn(f64, f64) -> f64; 4] = [dk1, dk2, g2, g3];
    let family_norm = |fs: &[fn(f64, f64) -> f64; 4], a: f64, s: f64| {
        fs.iter()
            .map(|f| {
                let v: Vec<f64> = ys.iter().map(|&y| f(a, y)).collect();
                lebesgue_norm(&v, &ws, s)
            })
            .fold(0.0f64, f64::max)
    };

    let mut per_epsilon = Vec::new();
    for &eps in &config.epsilons {
        let mut c = EpsilonConstants {
            epsilon: eps,
            value: 0.0,
            derivative: 0.0,
            derivative_regularized: 0.0,
        };
        for k in 1..=config.k_max {
            let a = eps * k as f64;
            let scale = eps * (1.0 + k as f64);
            for &s in &config.s_values {
                let inv_s = if s.is_infinite() { 0.0 } else { 1.0 / s };
                let vb = 1.0f64.min(scale.powf(-inv_s));
                let db = scale.powf(1.0 - inv_s);
                let rb = (1.0 + a).powf(1.0 - inv_s);
                let vn = family_norm(&values, a, s);
                let dn = family_norm(&derivatives, a, s);
                c.value = c.value.max(vn / vb);
                c.derivative = c.derivative.max(dn / db);
                c.derivative_regularized = c.derivative_regularized.max(dn / rb);
            }
        }
        per_epsilon.push(c);
    }
    let max_of = |f: fn(&EpsilonConstants) -> f64| per_epsilon.iter().map(f).fold(0.0f64, f64::max);
    let value_constant = max_of(|c| c.value);
    let derivative_constant = max_of(|c| c.derivative);
    let derivative_regularized_constant = max_of(|c| c.derivative_regularized);
    let value_spread = spread(&per_epsilon.iter().map(|c| c.value).collect::<Vec<_>>());
    let derivative_spread = spread(&per_epsilon.iter().map(|c| c.derivative).collect::<Vec<_>>());
    let passed = value_constant <= config.constant_limit
        && derivative_constant <= config.constant_limit
        && value_spread <= config.spread_limit
        && derivative_spread <= config.spread_limit;
    KernelBoundReport {
        config: config.clone(),
        per_epsilon,
        value_constant,
        derivative_constant,
        derivative_regularized_constant,
        value_spread,
        derivative_spread,
        passed,
    }
}
