//! Benchmark flows: advected shear waves, Stokes modes in a disk and the
//! Poiseuille wall calibration, plus the sweeps that tabulate them.

pub mod bessel;
pub mod poiseuille;
pub mod reproduce;
pub mod shear_wave;
pub mod stokes;

pub use bessel::{bessel_j, bessel_zero};
pub use poiseuille::{run_poiseuille, PoiseuilleRun, PoiseuilleSpec};
pub use reproduce::{reproduce, Artifact, Target};
pub use shear_wave::{run_shear_wave, ShearWaveRun, ShearWaveSpec};
pub use stokes::{run_stokes_disk, StokesDiskSpec, StokesMode, StokesRun};

use crate::error::{Error, Result};
use crate::vonneumann::polyfit;

/// Window of a log-linear decay fit: samples after `skip` steps, up to the
/// first one whose magnitude falls below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub skip: usize,
    pub floor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { skip: 50, floor: 0.01 }
    }
}

/// Largest rms deviation of `ln|A|` from the fitted line accepted as an
/// exponential.
const MAX_LOG_RESIDUAL: f64 = 0.05;
const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Rate in `A(t) ∝ e^{−Γt}`.
    pub gamma: f64,
    pub log_intercept: f64,
    pub residual: f64,
    /// First and last step inside the window.
    pub window: (usize, usize),
    pub points: usize,
}

/// Least-squares line through `ln|A(t)|` over the window.
pub fn fit_decay(times: &[usize], magnitudes: &[f64], win: &FitWindow) -> Result<DecayFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &a) in times.iter().zip(magnitudes) {
        if t < win.skip {
            continue;
        }
        if !(a.abs() >= win.floor) {
            break;
        }
        x.push(t as f64);
        y.push(a.abs().ln());
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::FitFailure(format!(
            "{} samples between step {} and the {} floor",
            x.len(),
            win.skip,
            win.floor
        )));
    }
    let (c, residual) = polyfit(&x, &y, &[0, 1])?;
    if residual > MAX_LOG_RESIDUAL {
        return Err(Error::FitFailure(format!("decay is not exponential: log residual {residual:.3e}")));
    }
    Ok(DecayFit {
        gamma: -c[1],
        log_intercept: c[0],
        residual,
        window: (x[0] as usize, *x.last().expect("non-empty") as usize),
        points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_rate_and_respects_window() {
        let times: Vec<usize> = (0..400).collect();
        let a: Vec<f64> = times.iter().map(|&t| 0.9 * (-0.02 * t as f64).exp()).collect();
        let fit = fit_decay(&times, &a, &FitWindow::default()).unwrap();
        assert!((fit.gamma - 0.02).abs() < 1e-12);
        assert_eq!(fit.window.0, 50);
        // 0.9 e^{−0.02 t} ≥ 0.01 up to t = 224.
        assert_eq!(fit.window.1, 224);
    }

    #[test]
    fn rejects_short_or_noisy_series() {
        let times: Vec<usize> = (0..55).collect();
        let a = vec![1.0; 55];
        assert!(fit_decay(&times, &a, &FitWindow::default()).is_err());
        let times: Vec<usize> = (0..300).collect();
        let a: Vec<f64> = times.iter().map(|&t| if t % 2 == 0 { 1.0 } else { 0.5 }).collect();
        assert!(fit_decay(&times, &a, &FitWindow::default()).is_err());
    }
}
