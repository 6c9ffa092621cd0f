use super::pipeline::{write_csv, write_json, EnergySample};
use super::rate::{fit_rate, load_reports, RateFit};
use crate::error::{HydroError, Result};
use crate::hydro::read_monitor_csv;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub epsilon: f64,
    #[serde(rename = "L2_error")]
    pub l2_error: f64,
    #[serde(rename = "Linf_error")]
    pub linf_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub epsilon: f64,
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub t: f64,
    pub tau: f64,
    #[serde(rename = "Xnorm_level1")]
    pub xnorm_level1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSummary {
    pub files: Vec<String>,
    pub rate_fit: Option<RateFit>,
}

const ERROR_SCRIPT: &str = r#"set terminal svg size 640,480
set output 'errors_vs_eps.svg'
set datafile separator ','
set logscale xy
set key top left
set xlabel 'epsilon'
set ylabel 'sup_t error'
"#;

const ENERGY_SCRIPT: &str = r#"set terminal svg size 640,480
set output 'energy.svg'
set datafile separator ','
set logscale y
set xlabel 't'
set ylabel 'E(t)'
"#;

const RADIUS_SCRIPT: &str = r#"set terminal svg size 640,480
set output 'gevrey_radius.svg'
set datafile separator ','
set xlabel 't'
set ylabel 'tau(t)'
plot 'gevrey_radius.csv' skip 1 using 1:2 with lines title 'tau'
"#;

/// Write plot data and gnuplot scripts for the reports found under `inputs`.
pub fn plot(inputs: &[PathBuf], out: &Path) -> Result<PlotSummary> {
    let loaded = load_reports(inputs)?;
    if loaded.is_empty() {
        return Err(HydroError::Insufficient("no reports found in the given inputs".into()));
    }
    fs::create_dir_all(out)?;
    let mut files = Vec::new();

    let rows: Vec<ErrorRow> = loaded
        .iter()
        .map(|l| ErrorRow {
            epsilon: l.report.epsilon,
            l2_error: l.report.l2_error,
            linf_error: l.report.linf_error,
        })
        .collect();
    write_csv(&out.join("errors_vs_eps.csv"), &rows)?;
    files.push("errors_vs_eps.csv".to_string());
    let reports: Vec<_> = loaded.iter().map(|l| l.report.clone()).collect();
    let positive = rows.iter().all(|r| r.l2_error > 0.0 && r.linf_error > 0.0);
    let fit = if reports.len() >= 3 && positive { Some(fit_rate(&reports)?) } else { None };
    let mut script = ERROR_SCRIPT.to_string();
    let data = "'errors_vs_eps.csv' skip 1";
    match &fit {
        Some(f) => {
            write_json(&out.join("rate_fit.json"), f)?;
            files.push("rate_fit.json".to_string());
            script.push_str(&format!(
                "l2(x) = exp({:.17e}) * x**{:.17e}\nlinf(x) = exp({:.17e}) * x**{:.17e}\n",
                f.l2.intercept, f.l2.slope, f.linf.intercept, f.linf.slope
            ));
            script.push_str(&format!(
                "plot {data} using 1:2 with points title 'L2', {data} using 1:3 with points title 'Linf', \\\n     l2(x) title sprintf('L2 fit, slope %.3f', {:.6}), linf(x) title sprintf('Linf fit, slope %.3f', {:.6})\n",
                f.l2.slope, f.linf.slope
            ));
        }
        None => script.push_str(&format!(
            "plot {data} using 1:2 with linespoints title 'L2', {data} using 1:3 with linespoints title 'Linf'\n"
        )),
    }
    fs::write(out.join("errors_vs_eps.gp"), script)?;
    files.push("errors_vs_eps.gp".to_string());

    let mut energy = Vec::new();
    for l in &loaded {
        let path = l.dir.join("energy.csv");
        if path.is_file() {
            let mut rdr = csv::Reader::from_path(&path)?;
            for rec in rdr.deserialize::<EnergySample>() {
                let s = rec?;
                energy.push(EnergyRow {
                    epsilon: l.report.epsilon,
                    t: s.t,
                    e: s.e,
                    g: s.g,
                    d: s.d,
                });
            }
        }
    }
    if !energy.is_empty() {
        write_csv(&out.join("energy.csv"), &energy)?;
        let mut script = ENERGY_SCRIPT.to_string();
        let curves: Vec<String> = loaded
            .iter()
            .map(|l| {
                let e = l.report.epsilon;
                format!("'energy.csv' skip 1 using ($1 == {e:e} ? $2 : 1/0):3 with lines title 'eps = {e}'")
            })
            .collect();
        script.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
        fs::write(out.join("energy.gp"), script)?;
        files.extend(["energy.csv".to_string(), "energy.gp".to_string()]);
    }

    let monitor = loaded
        .iter()
        .filter_map(|l| l.dir.parent().map(|p| p.join("monitor.csv")))
        .chain(inputs.iter().map(|p| p.join("monitor.csv")))
        .find(|p| p.is_file());
    if let Some(path) = monitor {
        let log = read_monitor_csv(File::open(path)?)?;
        let rows: Vec<RadiusRow> = log
            .iter()
            .map(|r| RadiusRow {
                t: r.t,
                tau: r.tau,
                xnorm_level1: r.xnorm_level1,
            })
            .collect();
        write_csv(&out.join("gevrey_radius.csv"), &rows)?;
        fs::write(out.join("gevrey_radius.gp"), RADIUS_SCRIPT)?;
        files.extend(["gevrey_radius.csv".to_string(), "gevrey_radius.gp".to_string()]);
    }
    let summary = PlotSummary { files, rate_fit: fit };
    Ok(summary)
}
