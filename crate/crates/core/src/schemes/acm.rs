use super::{kick_populations, kick_primitive, map_nodes, stream_to_primitive, PrimitiveField, SchemeConfig, StepContext};
use crate::lattice::{equilibrium_populations, Populations, Q, VELOCITIES};

/// Odd part of the equilibrium in the velocity, `½(f_eq(ρ, u) − f_eq(ρ, −u))`.
#[inline]
pub fn odd_equilibrium(rho: f64, jx: f64, jy: f64) -> Populations {
    let plus = equilibrium_populations(rho, jx, jy);
    let minus = equilibrium_populations(rho, -jx, -jy);
    let mut out = [0.0; Q];
    for a in 0..Q {
        out[a] = 0.5 * (plus[a] - minus[a]);
    }
    out
}

pub fn acm_step(fs: &PrimitiveField, cfg: &SchemeConfig) -> PrimitiveField {
    acm_step_with(fs, cfg, &StepContext::default())
}

/// Rebuild the post-collision populations from the primitive fields as
/// `f* = f_eq(x) + Θ (f_eo(x + c) − f_eo(x))`, stream, and keep only the
/// new density and velocity.
pub fn acm_step_with(fs: &PrimitiveField, cfg: &SchemeConfig, ctx: &StepContext) -> PrimitiveField {
    let (nx, ny) = (fs.nx, fs.ny);
    let theta = 1.0 - 6.0 * cfg.acm_nu;

    let mut state = fs.clone();
    if ctx.force != [0.0, 0.0] {
        for k in 0..nx * ny {
            if ctx.is_fluid(k) {
                kick_primitive(&mut state, k, ctx.force);
            }
        }
    }
    let cons = |k: usize| {
        let r = state.rho[k];
        (r, r * state.vx[k], r * state.vy[k])
    };
    let feq: Vec<Populations> = map_nodes(nx, ny, |k| {
        let (r, jx, jy) = cons(k);
        equilibrium_populations(r, jx, jy)
    });
    let feo: Vec<Populations> = map_nodes(nx, ny, |k| {
        let (r, jx, jy) = cons(k);
        odd_equilibrium(r, jx, jy)
    });

    let fstar: Vec<Populations> = map_nodes(nx, ny, |k| {
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        let mut out = feq[k];
        for (a, fa) in out.iter_mut().enumerate() {
            let [cx, cy] = VELOCITIES[a];
            let ni = (i + cx as isize).rem_euclid(nx as isize) as usize;
            let nj = (j + cy as isize).rem_euclid(ny as isize) as usize;
            *fa += theta * (feo[nj * nx + ni][a] - feo[k][a]);
        }
        if ctx.force != [0.0, 0.0] && ctx.is_fluid(k) {
            kick_populations(&mut out, ctx.force);
        }
        out
    });
    stream_to_primitive(&fstar, nx, ny)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_part_vanishes_at_rest() {
        assert_eq!(odd_equilibrium(1.3, 0.0, 0.0), [0.0; Q]);
    }

    #[test]
    fn odd_part_carries_momentum_only() {
        let feo = odd_equilibrium(1.0, 0.04, -0.02);
        let m = crate::lattice::to_moments(&feo);
        assert!(m.rho.abs() < 1e-16);
        assert!((m.jx - 0.04).abs() < 1e-16 && (m.jy + 0.02).abs() < 1e-16);
        assert!(m.e.abs() < 1e-16 && m.xx.abs() < 1e-16 && m.xy.abs() < 1e-16);
    }

    #[test]
    fn unit_theta_free_case_is_a_fixed_point() {
        let cfg = SchemeConfig::acm(1.0 / 6.0).unwrap();
        let fs = PrimitiveField::uniform(7, 6, 1.02, [0.05, -0.01]);
        let out = acm_step(&fs, &cfg);
        for k in 0..42 {
            assert!((out.rho[k] - 1.02).abs() < 1e-15);
            assert!((out.vx[k] - 0.05).abs() < 1e-15);
        }
    }
}
