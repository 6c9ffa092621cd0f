use crate::discretization::{Grid, GridSpec};
use crate::error::{HydroError, Result};
use crate::gevrey::GevreyParams;
use crate::initial_data::DataSpec;
use crate::timestep::{step_count, MeanPressure, StepSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub c0: f64,
    pub a: f64,
    pub delta0: f64,
    #[serde(rename = "N0")]
    pub n0: u32,
}

impl Default for DataConfig {
    fn default() -> Self {
        let d = DataSpec::default();
        DataConfig {
            c0: d.c0,
            a: d.a,
            delta0: d.delta0,
            n0: d.n0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GevreyConfig {
    pub sigma: f64,
    pub tau0: f64,
    pub beta: f64,
}

impl Default for GevreyConfig {
    fn default() -> Self {
        GevreyConfig {
            sigma: 1.0,
            tau0: 0.5,
            beta: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub filter_alpha: f64,
    pub dealias_fraction: f64,
    /// Initial truncation length of the boundary-layer half line.
    #[serde(rename = "L_lift")]
    pub l_lift: f64,
    pub mean_pressure: MeanPressure,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            nx: 32,
            ny: 64,
            dt: 2.5e-4,
            t_end: 0.25,
            filter_alpha: 36.0,
            dealias_fraction: 2.0 / 3.0,
            l_lift: 1.0,
            mean_pressure: MeanPressure::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilons: vec![0.2, 0.1, 0.05],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Weight `A` of the high-frequency velocity part of `E, G, D`.
    #[serde(rename = "A")]
    pub weight_a: f64,
    pub eta: f64,
    /// Steps between rows of the energy-functional log.
    pub report_every: usize,
    /// Steps between hydrostatic snapshots; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub lift_nodes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            weight_a: 1.0,
            eta: 1.0,
            report_every: 50,
            snapshot_every: 0,
            lift_nodes: 64,
        }
    }
}

/// Everything a run needs. Every table and key is optional; missing ones take
/// the defaults of the reference experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    pub gevrey: GevreyConfig,
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| HydroError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HydroError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical TOML form, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HydroError::Config(msg));
        self.data_spec().validate()?;
        self.gevrey_params().validate()?;
        self.grid_spec().validate()?;
        self.step_settings().validate()?;
        step_count(self.numerics.t_end, self.numerics.dt)?;
        let eps = &self.sweep.epsilons;
        if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("epsilon {e} is outside (0, 1)"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("epsilons must be strictly decreasing, got {eps:?}"));
        }
        if !(self.numerics.l_lift > 0.0) {
            return bad(format!("L_lift must be positive, got {}", self.numerics.l_lift));
        }
        let a = &self.analysis;
        if a.report_every == 0 || a.lift_nodes < 8 || !(a.eta > 0.0) || !(a.weight_a >= 0.0) {
            return bad(format!("invalid analysis settings {a:?}"));
        }
        if self.data.n0 < 8 {
            return bad(format!("N0 = {} leaves no energy level r = N0 - 7", self.data.n0));
        }
        Ok(())
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec {
            c0: self.data.c0,
            a: self.data.a,
            delta0: self.data.delta0,
            n0: self.data.n0,
            ..DataSpec::default()
        }
    }

    pub fn gevrey_params(&self) -> GevreyParams {
        GevreyParams::new(self.gevrey.sigma, self.gevrey.tau0, self.gevrey.beta)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.numerics.nx, self.numerics.ny).with_dealias(self.numerics.dealias_fraction)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.grid_spec())
    }

    pub fn step_settings(&self) -> StepSettings {
        StepSettings {
            filter_alpha: self.numerics.filter_alpha,
            mean_pressure: self.numerics.mean_pressure,
            ..StepSettings::new(self.numerics.dt)
        }
    }

    /// Energy level `r = N0 - 7`.
    pub fn energy_level(&self) -> f64 {
        self.data.n0 as f64 - 7.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_experiment() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.sweep.epsilons, vec![0.2, 0.1, 0.05]);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn round_trip_and_hash_track_content() {
        let text = "seed = 3\n[numerics]\nnx = 16\nny = 32\nT = 0.01\n[sweep]\nepsilons = [0.5, 0.25, 0.125]\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.numerics.nx, 16);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn rejects_bad_sweeps_and_keys() {
        for text in [
            "[sweep]\nepsilons = [0.1, 0.2]",
            "[sweep]\nepsilons = [0.1, 0.1]",
            "[sweep]\nepsilons = [1.5]",
            "[numerics]\nbogus = 1",
            "[numerics]\ndt = 0.3",
            "[data]\na = 0.9",
        ] {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }
}
