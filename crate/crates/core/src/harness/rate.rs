use crate::error::{HydroError, Result};
use crate::error_analysis::ErrorReport;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Slope required of both norms for a PASS verdict.
pub const SLOPE_THRESHOLD: f64 = 1.8;

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(HydroError::Dimension(format!("{} abscissae, {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(HydroError::Insufficient(format!("a line needs 2 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HydroError::Insufficient("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Fit of `log error` against `log ε` for both norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub epsilons: Vec<f64>,
    #[serde(rename = "L2_errors")]
    pub l2_errors: Vec<f64>,
    #[serde(rename = "Linf_errors")]
    pub linf_errors: Vec<f64>,
    #[serde(rename = "L2")]
    pub l2: LineFit,
    #[serde(rename = "Linf")]
    pub linf: LineFit,
    pub threshold: f64,
    pub passed: bool,
}

pub fn fit_errors(epsilons: &[f64], l2: &[f64], linf: &[f64]) -> Result<RateFit> {
    if epsilons.len() < 3 {
        return Err(HydroError::Insufficient(format!("rate fit needs at least 3 points, got {}", epsilons.len())));
    }
    let logs = |v: &[f64], what: &str| -> Result<Vec<f64>> {
        v.iter()
            .map(|x| {
                if *x > 0.0 && x.is_finite() {
                    Ok(x.ln())
                } else {
                    Err(HydroError::Insufficient(format!("{what} value {x} has no logarithm")))
                }
            })
            .collect()
    };
    let le = logs(epsilons, "epsilon")?;
    let l2_fit = fit_line(&le, &logs(l2, "L2 error")?)?;
    let linf_fit = fit_line(&le, &logs(linf, "Linf error")?)?;
    Ok(RateFit {
        epsilons: epsilons.to_vec(),
        l2_errors: l2.to_vec(),
        linf_errors: linf.to_vec(),
        l2: l2_fit,
        linf: linf_fit,
        threshold: SLOPE_THRESHOLD,
        passed: l2_fit.slope >= SLOPE_THRESHOLD && linf_fit.slope >= SLOPE_THRESHOLD,
    })
}

pub fn fit_rate(reports: &[ErrorReport]) -> Result<RateFit> {
    let eps: Vec<f64> = reports.iter().map(|r| r.epsilon).collect();
    let l2: Vec<f64> = reports.iter().map(|r| r.l2_error).collect();
    let linf: Vec<f64> = reports.iter().map(|r| r.linf_error).collect();
    fit_errors(&eps, &l2, &linf)
}

/// A report together with the directory it was read from.
#[derive(Debug, Clone)]
pub struct LoadedReport {
    pub report: ErrorReport,
    pub dir: PathBuf,
}

fn read_report(path: &Path) -> Result<ErrorReport> {
    let text = fs::read_to_string(path).map_err(|e| HydroError::Io(e).context(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| HydroError::Json(e).context(path.display().to_string()))
}

/// Collect reports from report files, sweep-point directories or run
/// directories (every `eps_*/report.json` inside). Sorted by decreasing `ε`.
pub fn load_reports(paths: &[PathBuf]) -> Result<Vec<LoadedReport>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_file() {
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            out.push(LoadedReport { report: read_report(p)?, dir });
        } else if p.join("report.json").is_file() {
            out.push(LoadedReport {
                report: read_report(&p.join("report.json"))?,
                dir: p.clone(),
            });
        } else if p.is_dir() {
            let mut dirs: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|d| d.join("report.json").is_file())
                .collect();
            dirs.sort();
            for d in dirs {
                out.push(LoadedReport {
                    report: read_report(&d.join("report.json"))?,
                    dir: d,
                });
            }
        } else {
            return Err(HydroError::Insufficient(format!("{} does not exist", p.display())));
        }
    }
    out.sort_by(|a, b| b.report.epsilon.total_cmp(&a.report.epsilon));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let sq: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let lin: Vec<f64> = eps.iter().map(|e| 0.7 * e).collect();
        let fit = fit_errors(&eps, &sq, &sq).unwrap();
        assert!((fit.l2.slope - 2.0).abs() < 1e-12);
        assert!((fit.l2.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((fit.l2.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.passed);
        let fit = fit_errors(&eps, &lin, &sq).unwrap();
        assert!((fit.l2.slope - 1.0).abs() < 1e-12);
        assert!(!fit.passed);
    }

    #[test]
    fn needs_three_positive_points() {
        assert_eq!(fit_errors(&[0.2, 0.1], &[1.0, 0.5], &[1.0, 0.5]).unwrap_err().exit_code(), 2);
        assert!(fit_errors(&[0.2, 0.1, 0.05], &[1.0, 0.0, 0.5], &[1.0, 0.5, 0.2]).is_err());
    }

    #[test]
    fn r_squared_drops_with_noise() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let fit = fit_line(&x, &[0.0, 1.5, 1.5, 3.0]).unwrap();
        assert!((fit.slope - 0.9).abs() < 1e-12);
        assert!(fit.r_squared < 1.0 && fit.r_squared > 0.8);
    }
}
