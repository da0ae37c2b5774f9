use super::{kick_moments, map_nodes, PopulationField, SchemeConfig, StepContext};
use crate::boundaries::{bounce_back, interpolated_bounce_back, WallRule};
use crate::lattice::{from_moments, relax, to_moments, Populations, OPPOSITE, Q, VELOCITIES};

/// Collide in moment space, then stream each population along its velocity
/// on a periodic grid.
pub fn mrt_step(fs: &PopulationField, cfg: &SchemeConfig) -> PopulationField {
    mrt_step_with(fs, cfg, &StepContext::default())
}

pub fn mrt_step_with(fs: &PopulationField, cfg: &SchemeConfig, ctx: &StepContext) -> PopulationField {
    let (nx, ny) = (fs.nx, fs.ny);
    let rates = cfg.effective_rates();
    let forced = ctx.force != [0.0, 0.0];

    let post: Vec<Populations> = map_nodes(nx, ny, |k| {
        if !ctx.is_fluid(k) {
            return fs.f[k];
        }
        let mut m = to_moments(&fs.f[k]);
        if forced {
            kick_moments(&mut m, ctx.force);
        }
        let mut m = relax(&m, &rates);
        if forced {
            kick_moments(&mut m, ctx.force);
        }
        from_moments(&m)
    });

    let neighbour = |k: usize, a: usize, sign: isize| -> usize {
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        let [cx, cy] = VELOCITIES[a];
        let si = (i + sign * cx as isize).rem_euclid(nx as isize) as usize;
        let sj = (j + sign * cy as isize).rem_euclid(ny as isize) as usize;
        sj * nx + si
    };

    let f = map_nodes(nx, ny, |k| {
        if !ctx.is_fluid(k) {
            return fs.f[k];
        }
        let mut out = [0.0; Q];
        for (a, fa) in out.iter_mut().enumerate() {
            let src = neighbour(k, a, -1);
            if ctx.is_fluid(src) {
                *fa = post[src][a];
                continue;
            }
            // The wall cuts the link from k towards src.
            let q = ctx
                .walls
                .and_then(|w| w.cuts[k][OPPOSITE[a]])
                .unwrap_or(0.5);
            *fa = match ctx.wall_rule {
                WallRule::BounceBack => bounce_back(&post[k], a),
                WallRule::Interpolated => {
                    let up = neighbour(k, a, 1);
                    let upstream = ctx.is_fluid(up).then(|| &post[up]);
                    interpolated_bounce_back(q, a, &post[k], upstream)
                }
            };
        }
        out
    });
    PopulationField { nx, ny, f }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundaries::{classify, Geometry};
    use crate::lattice::{equilibrium_populations, RelaxationRates};

    #[test]
    fn streaming_moves_populations_along_their_velocity() {
        // s = 1 collision of an equilibrium state leaves it unchanged, so the
        // step is pure streaming.
        let cfg = SchemeConfig::mrt(RelaxationRates::bgk(1.0).unwrap());
        let (nx, ny) = (5, 4);
        let mut fs = PopulationField::equilibrium_from_fn(nx, ny, |_, _| (1.0, 0.0, 0.0));
        fs.f[0] = equilibrium_populations(1.5, 0.1, 0.2);
        let out = mrt_step(&fs, &cfg);
        for a in 0..Q {
            let [cx, cy] = VELOCITIES[a];
            let i = cx.rem_euclid(nx as i32) as usize;
            let j = cy.rem_euclid(ny as i32) as usize;
            assert!((out.f[j * nx + i][a] - fs.f[0][a]).abs() < 1e-15);
        }
    }

    #[test]
    fn channel_at_rest_stays_at_rest() {
        let walls = classify(&Geometry::Channel { width: 7, xi: 0.5 }, 4, 11).unwrap();
        let cfg = SchemeConfig::bgk(0.1).unwrap();
        let mut fs = PopulationField::equilibrium_from_fn(4, 11, |_, _| (1.0, 0.0, 0.0));
        let rest = fs.clone();
        for rule in [WallRule::BounceBack, WallRule::Interpolated] {
            let ctx = StepContext { walls: Some(&walls), wall_rule: rule, ..Default::default() };
            for _ in 0..10 {
                fs = mrt_step_with(&fs, &cfg, &ctx);
            }
            for (a, b) in fs.f.iter().flatten().zip(rest.f.iter().flatten()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
