//! Body-force driven channel flow and the apparent wall position.

use crate::vonneumann::polyfit;
use crate::boundaries::{classify, Geometry, WallRule, HALO_DEPTH};
use crate::error::{Error, Result};
use crate::schemes::{FieldSet, SchemeConfig, Simulation};

/// Nodes along the periodic direction; enough for the widest stencil.
const CHANNEL_LENGTH: usize = 8;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoiseuilleSpec {
    /// Fluid rows.
    pub width: usize,
    /// Wall offset beyond the first and last fluid rows, in `(0, 1]`.
    pub xi: f64,
    pub force: f64,
    pub scheme: SchemeConfig,
    pub wall_rule: WallRule,
    /// Relative profile change per `check_every` steps that counts as steady.
    pub tolerance: f64,
    pub check_every: usize,
    pub max_steps: usize,
    /// Largest rms deviation from the parabola relative to the peak velocity.
    pub max_residual: f64,
}

impl PoiseuilleSpec {
    pub fn new(xi: f64, scheme: SchemeConfig, wall_rule: WallRule) -> Self {
        Self { width: 15, xi, force: 1e-6, scheme, wall_rule, tolerance: 1e-10, check_every: 100, max_steps: 200_000, max_residual: 1e-2 }
    }

    pub fn rows(&self) -> usize {
        self.width + 2 * HALO_DEPTH
    }

    fn validate(&self) -> Result<()> {
        if self.width < 3 {
            return Err(Error::InvalidParameter("channel needs at least three fluid rows".into()));
        }
        if !(self.force > 0.0 && self.force.is_finite()) {
            return Err(Error::InvalidParameter(format!("body force {} must be positive", self.force)));
        }
        if !(self.tolerance > 0.0) || self.check_every == 0 {
            return Err(Error::InvalidParameter("convergence check needs a positive tolerance and period".into()));
        }
        self.scheme.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiseuilleRun {
    /// Mean of the two apparent wall offsets.
    pub xi_measured: f64,
    pub xi_bottom: f64,
    pub xi_top: f64,
    /// `(y, u_x)` over the fluid rows, `y` counted from the first fluid row.
    pub profile: Vec<(f64, f64)>,
    pub u_max: f64,
    pub residual: f64,
    pub steps: usize,
}

/// Row-averaged `u_x`. With the force split around the collision the
/// velocity at integer times carries half a kick, `u = (J + g/2)/ρ`.
fn profile(fs: &FieldSet, nx: usize, lo: usize, width: usize, g: f64) -> Vec<f64> {
    (lo..lo + width)
        .map(|j| {
            (0..nx)
                .map(|i| {
                    let (rho, jx, _) = fs.conserved(j * nx + i);
                    (jx + 0.5 * g) / rho
                })
                .sum::<f64>()
                / nx as f64
        })
        .collect()
}

pub fn run_poiseuille(spec: &PoiseuilleSpec) -> Result<PoiseuilleRun> {
    spec.validate()?;
    let (nx, ny) = (CHANNEL_LENGTH, spec.rows());
    let walls = classify(&Geometry::Channel { width: spec.width, xi: spec.xi }, nx, ny)?;
    let lo = (ny - spec.width) / 2;
    let state = FieldSet::for_scheme(spec.scheme.kind, nx, ny, |_, _| (1.0, 0.0, 0.0));
    let mut sim = Simulation::new(spec.scheme.clone(), state)?
        .with_walls(walls, spec.wall_rule)?
        .with_force([spec.force, 0.0]);

    let mut last = profile(&sim.state, nx, lo, spec.width, spec.force);
    loop {
        sim.run(spec.check_every)?;
        let now = profile(&sim.state, nx, lo, spec.width, spec.force);
        let peak = now.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let change = now.iter().zip(&last).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        last = now;
        if peak > 0.0 && change <= spec.tolerance * peak {
            break;
        }
        if sim.time >= spec.max_steps {
            return Err(Error::FitFailure(format!("no steady state after {} steps", sim.time)));
        }
    }

    let y: Vec<f64> = (0..spec.width).map(|j| j as f64).collect();
    let (c, rms) = polyfit(&y, &last, &[0, 1, 2])?;
    let u_max = last.iter().fold(0.0f64, |m, u| m.max(*u));
    let residual = rms / u_max;
    if residual > spec.max_residual || c[2] >= 0.0 {
        return Err(Error::FitFailure(format!("profile is not parabolic: relative residual {residual:.3e}")));
    }
    // Roots of c0 + c1 y + c2 y², c2 < 0.
    let disc = (c[1] * c[1] - 4.0 * c[2] * c[0]).sqrt();
    let y1 = (-c[1] + disc) / (2.0 * c[2]);
    let y2 = (-c[1] - disc) / (2.0 * c[2]);
    let (xi_bottom, xi_top) = (-y1, y2 - (spec.width - 1) as f64);
    Ok(PoiseuilleRun {
        xi_measured: 0.5 * (xi_bottom + xi_top),
        xi_bottom,
        xi_top,
        profile: y.into_iter().zip(last).collect(),
        u_max,
        residual,
        steps: sim.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bgk_bounce_back_puts_the_wall_half_way() {
        // With σ² = 3/16 single-rate bounce-back is exact for the parabola.
        let nu = (3.0f64 / 16.0).sqrt() / 3.0;
        let cfg = SchemeConfig::bgk(nu).unwrap();
        let run = run_poiseuille(&PoiseuilleSpec::new(0.3, cfg, WallRule::BounceBack)).unwrap();
        assert!((run.xi_measured - 0.5).abs() < 1e-6, "{}", run.xi_measured);
        assert!((run.xi_bottom - run.xi_top).abs() < 1e-8);
        let w = 15.0;
        let expected = 1e-6 * w * w / (8.0 * nu);
        assert!((run.u_max - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn bgk_bounce_back_slip_follows_the_closed_form() {
        // Halfway bounce-back: W_eff² = W² + 16σ²/3 − 1 with σ = 3ν.
        for nu in [0.02, 0.25] {
            let run = run_poiseuille(&PoiseuilleSpec::new(0.5, SchemeConfig::bgk(nu).unwrap(), WallRule::BounceBack))
                .unwrap();
            let sigma = 3.0 * nu;
            let w_eff = (225.0 + 16.0 * sigma * sigma / 3.0 - 1.0f64).sqrt();
            assert!((run.xi_measured - (w_eff - 14.0) / 2.0).abs() < 1e-6, "{nu}: {}", run.xi_measured);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let cfg = SchemeConfig::bgk(0.05).unwrap();
        assert!(run_poiseuille(&PoiseuilleSpec { width: 2, ..PoiseuilleSpec::new(0.5, cfg.clone(), WallRule::BounceBack) }).is_err());
        assert!(run_poiseuille(&PoiseuilleSpec::new(1.5, cfg, WallRule::BounceBack)).is_err());
    }
}
