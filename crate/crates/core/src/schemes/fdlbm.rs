use super::{
    kick_populations, kick_primitive, map_nodes, stream_to_primitive, PrimitiveField, SchemeConfig, StepContext,
    ThetaGradient, ThetaXySign,
};
use crate::lattice::{equilibrium, from_moments, Populations};
use crate::stencil::{derivative_masked, Axis, ScalarGrid, StencilKind};
use crate::boundaries::NodeClassification;

/// Defects of conservation of the energy and the two stress moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFields {
    pub theta_e: ScalarGrid,
    pub theta_xx: ScalarGrid,
    pub theta_xy: ScalarGrid,
}

/// Evaluate the three defect expressions with the configured stencil.
/// Derivatives of products are taken on the pointwise product grid.
pub fn fdlbm_theta(fs: &PrimitiveField, cfg: &SchemeConfig) -> ThetaFields {
    fdlbm_theta_masked(fs, cfg, None)
}

fn fdlbm_theta_masked(fs: &PrimitiveField, cfg: &SchemeConfig, narrow: Option<&[bool]>) -> ThetaFields {
    let (nx, ny) = (fs.nx, fs.ny);
    let n = nx * ny;
    let d = |values: &[f64], axis: Axis| {
        let mut out = vec![0.0; n];
        derivative_masked(values, nx, ny, cfg.stencil, axis, narrow, &mut out);
        out
    };
    let (rho, vx, vy) = (&fs.rho, &fs.vx, &fs.vy);
    let vxx: Vec<f64> = vx.iter().map(|a| a * a).collect();
    let vxy: Vec<f64> = vx.iter().zip(vy).map(|(a, b)| a * b).collect();
    let vyy: Vec<f64> = vy.iter().map(|b| b * b).collect();

    let rho_x = d(rho, Axis::X);
    let rho_y = d(rho, Axis::Y);
    let (gx, gy) = match cfg.theta_gradient {
        ThetaGradient::Velocity => (vx.clone(), vy.clone()),
        ThetaGradient::Momentum => (
            rho.iter().zip(vx).map(|(r, u)| r * u).collect(),
            rho.iter().zip(vy).map(|(r, v)| r * v).collect(),
        ),
    };
    let vx_x = d(&gx, Axis::X);
    let vx_y = d(&gx, Axis::Y);
    let vy_x = d(&gy, Axis::X);
    let vy_y = d(&gy, Axis::Y);
    let vxx_x = d(&vxx, Axis::X);
    let vxy_x = d(&vxy, Axis::X);
    let vxy_y = d(&vxy, Axis::Y);
    let vyy_y = d(&vyy, Axis::Y);

    let cross = match cfg.theta_xy_sign {
        ThetaXySign::Symmetric => 1.0,
        ThetaXySign::AsPrinted => -1.0,
    };

    let mut theta_e = ScalarGrid::zeros(nx, ny);
    let mut theta_xx = ScalarGrid::zeros(nx, ny);
    let mut theta_xy = ScalarGrid::zeros(nx, ny);
    for k in 0..n {
        let (u, v) = (vx[k], vy[k]);
        let div = vx_x[k] + vy_y[k];
        theta_e.values[k] = (2.0 + 6.0 * (u * u + v * v)) * div - 2.0 * (u * rho_x[k] + v * rho_y[k]);
        theta_xx.values[k] = 2.0 / 3.0 * (vx_x[k] - vy_y[k]) - 2.0 / 3.0 * (u * rho_x[k] - v * rho_y[k])
            - 2.0 * (u * (vxx_x[k] + vxy_y[k]) - v * (vxy_x[k] + vyy_y[k]));
        theta_xy.values[k] = (vy_x[k] + cross * vx_y[k]) / 3.0 - (u * rho_y[k] + v * rho_x[k]) / 3.0
            - u * (vxy_x[k] + vyy_y[k])
            - v * (vxx_x[k] + vxy_y[k]);
    }
    ThetaFields { theta_e, theta_xx, theta_xy }
}

pub fn fdlbm_step(fs: &PrimitiveField, cfg: &SchemeConfig) -> PrimitiveField {
    fdlbm_step_with(fs, cfg, &StepContext::default())
}

/// Rebuild the post-collision moments at second order from the primitive
/// fields and finite-difference defects, stream, keep density and velocity.
pub fn fdlbm_step_with(fs: &PrimitiveField, cfg: &SchemeConfig, ctx: &StepContext) -> PrimitiveField {
    let (nx, ny) = (fs.nx, fs.ny);
    let forced = ctx.force != [0.0, 0.0];
    let kicked;
    let state = if forced {
        let mut s = fs.clone();
        for k in 0..nx * ny {
            if ctx.is_fluid(k) {
                kick_primitive(&mut s, k, ctx.force);
            }
        }
        kicked = s;
        &kicked
    } else {
        fs
    };

    let narrow = match (ctx.walls, cfg.stencil) {
        (Some(w), StencilKind::FivePoint) => Some(narrow_mask(w)),
        _ => None,
    };
    let theta = fdlbm_theta_masked(state, cfg, narrow.as_deref());
    let ce = 1.0 - 1.0 / cfg.rates.s_e;
    let cxx = 1.0 - 1.0 / cfg.rates.s_xx;

    let fstar: Vec<Populations> = map_nodes(nx, ny, |k| {
        let r = state.rho[k];
        let mut m = equilibrium(r, r * state.vx[k], r * state.vy[k]);
        m.e += ce * theta.theta_e.values[k];
        m.xx += cxx * theta.theta_xx.values[k];
        m.xy += cxx * theta.theta_xy.values[k];
        let mut f = from_moments(&m);
        if forced && ctx.is_fluid(k) {
            kick_populations(&mut f, ctx.force);
        }
        f
    });
    stream_to_primitive(&fstar, nx, ny)
}

/// Per node and axis, whether the five-point footprint along that axis
/// leaves the fluid.
fn narrow_mask(w: &NodeClassification) -> Vec<bool> {
    let (nx, ny) = (w.nx as isize, w.ny as isize);
    let fluid = |i: isize, j: isize| w.is_fluid_index((j.rem_euclid(ny) * nx + i.rem_euclid(nx)) as usize);
    let mut mask = Vec::with_capacity(2 * w.kinds.len());
    for j in 0..ny {
        for i in 0..nx {
            let along_x = [-2, -1, 1, 2].iter().all(|d| fluid(i + d, j));
            let along_y = [-2, -1, 1, 2].iter().all(|d| fluid(i, j + d));
            mask.push(!along_x);
            mask.push(!along_y);
        }
    }
    mask
}
