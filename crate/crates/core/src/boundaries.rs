//! Solid walls: node classification, wall-cut fractions, extrapolation of
//! the primitive state into nodes just outside the fluid, and the
//! bounce-back rules used by the population schemes.

use crate::error::{Error, Result};
use crate::lattice::{Populations, OPPOSITE, Q, VELOCITIES};

/// Number of non-fluid layers that receive extrapolated values. The widest
/// stencil reaches two nodes, evaluated on the first outside layer.
pub const HALO_DEPTH: usize = 3;

/// Longest ray walked from an outside node when searching for fluid.
const MAX_RAY: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    PeriodicBox,
    /// Fluid rows `width` nodes wide, centred in the grid, periodic along x.
    /// The walls sit `xi` link lengths beyond the first and last fluid rows.
    Channel { width: usize, xi: f64 },
    /// Circular fluid region; no periodicity.
    Disk { cx: f64, cy: f64, radius: f64 },
}

impl Geometry {
    /// Disk centred in the grid with the small offset that avoids
    /// lattice-symmetric placements.
    pub fn centered_disk(nx: usize, ny: usize, radius: f64) -> Self {
        Geometry::Disk {
            cx: nx as f64 / 2.0 + 0.03,
            cy: ny as f64 / 2.0 + 0.07,
            radius,
        }
    }

    fn wraps(&self) -> (bool, bool) {
        match self {
            Geometry::PeriodicBox => (true, true),
            Geometry::Channel { .. } => (true, false),
            Geometry::Disk { .. } => (false, false),
        }
    }

    fn validate(&self, nx: usize, ny: usize) -> Result<()> {
        match *self {
            Geometry::PeriodicBox => Ok(()),
            Geometry::Channel { width, xi } => {
                if !(xi > 0.0 && xi <= 1.0) {
                    return Err(Error::Geometry(format!("wall offset {xi} outside (0, 1]")));
                }
                if width == 0 || ny < width + 2 {
                    return Err(Error::Geometry(format!(
                        "channel of {width} rows does not fit {ny} grid rows with walls"
                    )));
                }
                Ok(())
            }
            Geometry::Disk { cx, cy, radius } => {
                if !(radius > 2.0) {
                    return Err(Error::Geometry(format!("radius {radius} must exceed 2")));
                }
                let margins = [cx - radius, nx as f64 - (cx + radius), cy - radius, ny as f64 - (cy + radius)];
                if margins.iter().any(|m| !(*m >= 2.0)) {
                    return Err(Error::Geometry(format!(
                        "disk ({cx}, {cy}, R = {radius}) needs a 2-node margin inside {nx}x{ny}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn channel_rows(width: usize, ny: usize) -> (usize, usize) {
        let first = (ny - width) / 2;
        (first, first + width - 1)
    }

    /// Node membership. Ties on a curved wall count as fluid.
    pub fn is_fluid(&self, i: usize, j: usize, nx: usize, ny: usize) -> bool {
        let _ = nx;
        match *self {
            Geometry::PeriodicBox => true,
            Geometry::Channel { width, .. } => {
                let (lo, hi) = Self::channel_rows(width, ny);
                j >= lo && j <= hi
            }
            Geometry::Disk { cx, cy, radius } => {
                let dx = i as f64 - cx;
                let dy = j as f64 - cy;
                dx * dx + dy * dy <= radius * radius
            }
        }
    }

    /// Fraction of the link from fluid node `(i, j)` along velocity `dir`
    /// at which the wall is crossed, or `None` when the link stays in the
    /// fluid.
    pub fn cut_fraction(&self, i: usize, j: usize, dir: usize, nx: usize, ny: usize) -> Option<f64> {
        let [cx_, cy_] = VELOCITIES[dir];
        match *self {
            Geometry::PeriodicBox => None,
            Geometry::Channel { width, xi } => {
                let (lo, hi) = Self::channel_rows(width, ny);
                let y = j as f64;
                match cy_ {
                    -1 if j == lo => Some(y - (lo as f64 - xi)),
                    1 if j == hi => Some((hi as f64 + xi) - y),
                    _ => None,
                }
            }
            Geometry::Disk { cx, cy, radius } => {
                let ni = i as i64 + cx_ as i64;
                let nj = j as i64 + cy_ as i64;
                let inside_grid = ni >= 0 && nj >= 0 && (ni as usize) < nx && (nj as usize) < ny;
                if inside_grid && self.is_fluid(ni as usize, nj as usize, nx, ny) {
                    return None;
                }
                let (px, py) = (i as f64 - cx, j as f64 - cy);
                let (ux, uy) = (cx_ as f64, cy_ as f64);
                let a = ux * ux + uy * uy;
                let b = px * ux + py * uy;
                let c = px * px + py * py - radius * radius;
                let t = (-b + (b * b - a * c).max(0.0).sqrt()) / a;
                Some(t.clamp(f64::EPSILON, 1.0))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Fluid,
    /// Outside node linked to at least one fluid node.
    Virtual,
    /// Deeper outside node still read by wide stencils.
    Halo,
    DeepSolid,
}

/// Straight lattice path from an outside node into the fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Velocity index pointing from the outside node towards the fluid.
    pub direction: usize,
    /// Links travelled before reaching the first fluid node.
    pub distance: usize,
    /// Wall-cut fraction of the link leaving the first fluid node backwards.
    pub q: f64,
    pub first: usize,
    pub second: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NodeClassification {
    pub nx: usize,
    pub ny: usize,
    pub kinds: Vec<NodeKind>,
    /// For fluid nodes, the cut fraction of each link that leaves the fluid.
    pub cuts: Vec<[Option<f64>; Q]>,
    /// Extrapolation rays of every virtual and halo node.
    pub rays: Vec<(usize, Vec<Ray>)>,
}

impl NodeClassification {
    #[inline]
    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[j * self.nx + i]
    }

    #[inline]
    pub fn is_fluid_index(&self, idx: usize) -> bool {
        self.kinds[idx] == NodeKind::Fluid
    }

    pub fn fluid_mask(&self) -> Vec<bool> {
        self.kinds.iter().map(|k| *k == NodeKind::Fluid).collect()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }

    /// Overwrite every virtual and halo node of a primitive field with the
    /// values extrapolated from the fluid; deep solid nodes are set to rest
    /// at unit density.
    pub fn fill_virtual(&self, rho: &mut [f64], vx: &mut [f64], vy: &mut [f64]) {
        for (idx, kind) in self.kinds.iter().enumerate() {
            if *kind == NodeKind::DeepSolid {
                rho[idx] = 1.0;
                vx[idx] = 0.0;
                vy[idx] = 0.0;
            }
        }
        for (idx, rays) in &self.rays {
            let mut acc_rho = 0.0;
            let mut acc_v = [0.0; 2];
            for ray in rays {
                let first = LinkSample { rho: rho[ray.first], v: [vx[ray.first], vy[ray.first]] };
                let second = ray
                    .second
                    .map(|s| LinkSample { rho: rho[s], v: [vx[s], vy[s]] });
                let (r, v) = extrapolate(first, second, ray.q, ray.distance as f64);
                acc_rho += r;
                acc_v[0] += v[0];
                acc_v[1] += v[1];
            }
            let n = rays.len() as f64;
            rho[*idx] = acc_rho / n;
            vx[*idx] = acc_v[0] / n;
            vy[*idx] = acc_v[1] / n;
        }
    }
}

fn step_node(
    i: usize,
    j: usize,
    dir: usize,
    s: usize,
    nx: usize,
    ny: usize,
    wraps: (bool, bool),
) -> Option<(usize, usize)> {
    let [cx, cy] = VELOCITIES[dir];
    let mut ni = i as i64 + cx as i64 * s as i64;
    let mut nj = j as i64 + cy as i64 * s as i64;
    if wraps.0 {
        ni = ni.rem_euclid(nx as i64);
    }
    if wraps.1 {
        nj = nj.rem_euclid(ny as i64);
    }
    if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
        return None;
    }
    Some((ni as usize, nj as usize))
}

pub fn classify(geom: &Geometry, nx: usize, ny: usize) -> Result<NodeClassification> {
    if nx == 0 || ny == 0 {
        return Err(Error::Geometry("empty grid".into()));
    }
    geom.validate(nx, ny)?;
    let wraps = geom.wraps();
    let n = nx * ny;
    let fluid: Vec<bool> = (0..n).map(|idx| geom.is_fluid(idx % nx, idx / nx, nx, ny)).collect();

    let mut kinds = vec![NodeKind::DeepSolid; n];
    let mut cuts = vec![[None; Q]; n];
    for idx in 0..n {
        let (i, j) = (idx % nx, idx / nx);
        if fluid[idx] {
            kinds[idx] = NodeKind::Fluid;
            for (dir, cut) in cuts[idx].iter_mut().enumerate().skip(1) {
                let outside = match step_node(i, j, dir, 1, nx, ny, wraps) {
                    Some((ni, nj)) => !fluid[nj * nx + ni],
                    None => true,
                };
                if outside {
                    *cut = Some(geom.cut_fraction(i, j, dir, nx, ny).ok_or_else(|| {
                        Error::Geometry(format!("link from ({i}, {j}) along {dir} leaves the fluid without a wall"))
                    })?);
                }
            }
            continue;
        }
        // Chebyshev distance to the fluid decides virtual versus halo.
        let mut nearest = usize::MAX;
        let d = HALO_DEPTH as i64;
        for dj in -d..=d {
            for di in -d..=d {
                let mut ni = i as i64 + di;
                let mut nj = j as i64 + dj;
                if wraps.0 {
                    ni = ni.rem_euclid(nx as i64);
                }
                if wraps.1 {
                    nj = nj.rem_euclid(ny as i64);
                }
                if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
                    continue;
                }
                if fluid[nj as usize * nx + ni as usize] {
                    nearest = nearest.min(di.unsigned_abs().max(dj.unsigned_abs()) as usize);
                }
            }
        }
        kinds[idx] = match nearest {
            1 => NodeKind::Virtual,
            d if d <= HALO_DEPTH => NodeKind::Halo,
            _ => NodeKind::DeepSolid,
        };
    }

    let mut rays = Vec::new();
    for idx in 0..n {
        if !matches!(kinds[idx], NodeKind::Virtual | NodeKind::Halo) {
            continue;
        }
        let (i, j) = (idx % nx, idx / nx);
        let mut found: Vec<Ray> = Vec::new();
        for dir in 1..Q {
            for s in 1..=MAX_RAY {
                let Some((fi, fj)) = step_node(i, j, dir, s, nx, ny, wraps) else { break };
                let fidx = fj * nx + fi;
                if !fluid[fidx] {
                    continue;
                }
                let q = cuts[fidx][OPPOSITE[dir]].ok_or_else(|| {
                    Error::Geometry(format!("no wall cut between ({i}, {j}) and ({fi}, {fj})"))
                })?;
                let second = step_node(i, j, dir, s + 1, nx, ny, wraps)
                    .map(|(a, b)| b * nx + a)
                    .filter(|s2| fluid[*s2]);
                found.push(Ray { direction: dir, distance: s, q, first: fidx, second });
                break;
            }
        }
        let Some(best) = found.iter().map(|r| r.distance).min() else {
            return Err(Error::NoFluidNeighbor { x: i, y: j });
        };
        found.retain(|r| r.distance == best);
        rays.push((idx, found));
    }

    Ok(NodeClassification { nx, ny, kinds, cuts, rays })
}

/// Primitive state sampled at a fluid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub rho: f64,
    pub v: [f64; 2],
}

/// State of the node one link beyond the fluid, from the first fluid node
/// (wall at fraction `q` of that link) and optionally the second one.
pub fn virtual_state(first: LinkSample, second: Option<LinkSample>, q: f64) -> Result<(f64, [f64; 2])> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("cut fraction {q} outside (0, 1]")));
    }
    Ok(extrapolate(first, second, q, 1.0))
}

/// Linear extrapolation through a zero velocity on the wall to a node
/// `distance` links beyond the first fluid node. For `q ≥ 1/2` the line
/// passes through the first fluid node; closer walls use the second fluid
/// node so the slope stays bounded. Density is copied from the first node.
#[inline]
pub fn extrapolate(first: LinkSample, second: Option<LinkSample>, q: f64, distance: f64) -> (f64, [f64; 2]) {
    let v = match second {
        Some(s) if q < 0.5 => {
            let w = (q - distance) / (q + 1.0);
            [s.v[0] * w, s.v[1] * w]
        }
        _ => {
            let w = (q - distance) / q;
            [first.v[0] * w, first.v[1] * w]
        }
    };
    (first.rho, v)
}

/// Plain bounce-back: the population entering a fluid node along `dir` from
/// a wall is the one that left it in the opposite direction.
#[inline]
pub fn bounce_back(post_here: &Populations, dir: usize) -> f64 {
    post_here[OPPOSITE[dir]]
}

/// Linearly interpolated bounce-back for a wall at fraction `q` of the link
/// leaving the node along `OPPOSITE[dir]`. `post_upstream` is the
/// post-collision state of the fluid node on the other side (`x + c_dir`),
/// needed when `q < 1/2`; without it the rule falls back to plain
/// bounce-back.
#[inline]
pub fn interpolated_bounce_back(
    q: f64,
    dir: usize,
    post_here: &Populations,
    post_upstream: Option<&Populations>,
) -> f64 {
    let out = OPPOSITE[dir];
    if q < 0.5 {
        match post_upstream {
            Some(up) => 2.0 * q * post_here[out] + (1.0 - 2.0 * q) * up[out],
            None => post_here[out],
        }
    } else {
        post_here[out] / (2.0 * q) + (2.0 * q - 1.0) / (2.0 * q) * post_here[dir]
    }
}

/// Boundary rule applied by population schemes on cut links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallRule {
    BounceBack,
    Interpolated,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: f64) -> LinkSample {
        LinkSample { rho: 1.0, v: [v, 0.0] }
    }

    #[test]
    fn channel_classification() {
        let c = classify(&Geometry::Channel { width: 15, xi: 0.5 }, 6, 17).unwrap();
        for j in 1..=15 {
            assert_eq!(c.kind(0, j), NodeKind::Fluid);
        }
        assert_eq!(c.kind(3, 0), NodeKind::Virtual);
        assert_eq!(c.kind(3, 16), NodeKind::Virtual);
        for i in 0..6 {
            let lo = 6 + i;
            let hi = 15 * 6 + i;
            for dir in [4, 7, 8] {
                assert_eq!(c.cuts[lo][dir], Some(0.5));
            }
            for dir in [2, 5, 6] {
                assert_eq!(c.cuts[hi][dir], Some(0.5));
            }
            assert_eq!(c.cuts[lo][2], None);
        }
    }

    #[test]
    fn channel_wall_offset_sets_fraction() {
        let c = classify(&Geometry::Channel { width: 15, xi: 0.3 }, 5, 21).unwrap();
        // Rows 3..=17 are fluid.
        assert_eq!(c.kind(0, 2), NodeKind::Virtual);
        assert_eq!(c.kind(0, 1), NodeKind::Halo);
        assert_eq!(c.kind(0, 0), NodeKind::Halo);
        let q = c.cuts[3 * 5][4].unwrap();
        assert!((q - 0.3).abs() < 1e-15);
    }

    #[test]
    fn disk_distance_test() {
        let geom = Geometry::Disk { cx: 32.0, cy: 32.0, radius: 29.9 };
        let c = classify(&geom, 64, 64).unwrap();
        // (61, 32) is 29 from the centre; (62, 32) is 30.
        assert_eq!(c.kind(61, 32), NodeKind::Fluid);
        assert_eq!(c.kind(62, 32), NodeKind::Virtual);
        let geom = Geometry::Disk { cx: 32.5, cy: 32.0, radius: 29.9 };
        let c = classify(&geom, 66, 66).unwrap();
        assert_eq!(c.kind(62, 32), NodeKind::Fluid); // 29.5
        assert_eq!(c.kind(63, 32), NodeKind::Virtual); // 30.5
    }

    #[test]
    fn disk_radial_cut_matches_circle_intersection() {
        let geom = Geometry::Disk { cx: 32.0, cy: 32.0, radius: 29.9 };
        let c = classify(&geom, 64, 64).unwrap();
        // Last fluid node on the +x axis is at distance 29.
        let q = c.cuts[32 * 64 + 61][1].unwrap();
        assert!((q - 0.9).abs() < 1e-12);
        // Diagonal link from a node near the wall, checked against the
        // quadratic root written out independently.
        let geom = Geometry::centered_disk(64, 64, 29.9);
        let c = classify(&geom, 64, 64).unwrap();
        let (cx, cy) = (32.03, 32.07);
        for idx in 0..64 * 64 {
            for dir in 5..9 {
                if let Some(q) = c.cuts[idx][dir] {
                    let (i, j) = ((idx % 64) as f64, (idx / 64) as f64);
                    let [ux, uy] = VELOCITIES[dir];
                    let x = i + q * ux as f64 - cx;
                    let y = j + q * uy as f64 - cy;
                    assert!(((x * x + y * y).sqrt() - 29.9).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn virtual_nodes_have_fluid_links_and_rays() {
        let geom = Geometry::centered_disk(64, 64, 29.9);
        let c = classify(&geom, 64, 64).unwrap();
        for (idx, rays) in &c.rays {
            assert!(!rays.is_empty());
            if c.kinds[*idx] == NodeKind::Virtual {
                assert!(rays.iter().all(|r| r.distance == 1));
            }
            assert!(rays.iter().all(|r| r.q > 0.0 && r.q <= 1.0));
        }
        assert!(c.count(NodeKind::Virtual) > 100);
    }

    #[test]
    fn classification_is_deterministic() {
        let geom = Geometry::centered_disk(64, 64, 29.9);
        let a = classify(&geom, 64, 64).unwrap();
        let b = classify(&geom, 64, 64).unwrap();
        assert_eq!(a.kinds, b.kinds);
        assert_eq!(a.cuts, b.cuts);
        assert_eq!(a.rays, b.rays);
    }

    #[test]
    fn geometry_outside_grid_rejected() {
        assert!(classify(&Geometry::Disk { cx: 32.0, cy: 32.0, radius: 31.0 }, 64, 64).is_err());
        assert!(classify(&Geometry::Disk { cx: 32.0, cy: 32.0, radius: 1.5 }, 64, 64).is_err());
        assert!(classify(&Geometry::Channel { width: 15, xi: 0.0 }, 4, 21).is_err());
        assert!(classify(&Geometry::Channel { width: 15, xi: 0.5 }, 4, 16).is_err());
    }

    #[test]
    fn wall_on_virtual_node_gives_zero() {
        let (_, v) = virtual_state(sample(0.3), None, 1.0).unwrap();
        assert_eq!(v, [0.0, 0.0]);
    }

    #[test]
    fn midpoint_wall_reflects() {
        let (rho, v) = virtual_state(sample(0.3), Some(sample(0.6)), 0.5).unwrap();
        assert_eq!(v[0], -0.3);
        assert_eq!(rho, 1.0);
    }

    #[test]
    fn exact_on_linear_profiles() {
        // Wall at s = q beyond the first fluid node, u(s) = slope·(q − s).
        for &q in &[0.05, 0.2, 0.49, 0.5, 0.7, 1.0] {
            let slope = 0.37;
            let u = |s: f64| slope * (q - s);
            for distance in 1..=3 {
                let (_, v) = extrapolate(
                    sample(u(0.0)),
                    Some(sample(u(-1.0))),
                    q,
                    distance as f64,
                );
                assert!((v[0] - u(distance as f64)).abs() < 1e-12, "q={q} d={distance}");
            }
        }
    }

    #[test]
    fn cut_fraction_must_lie_in_unit_interval() {
        assert!(virtual_state(sample(0.1), None, 0.0).is_err());
        assert!(virtual_state(sample(0.1), None, 1.5).is_err());
    }

    #[test]
    fn bounce_back_reverses() {
        let post: Populations = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        for dir in 1..Q {
            assert_eq!(bounce_back(&post, dir), post[OPPOSITE[dir]]);
            assert_eq!(interpolated_bounce_back(0.5, dir, &post, None), post[OPPOSITE[dir]]);
        }
    }

    #[test]
    fn channel_fill_is_exact_for_linear_wall_profiles() {
        let geom = Geometry::Channel { width: 9, xi: 0.3 };
        let (nx, ny) = (5, 15);
        let c = classify(&geom, nx, ny).unwrap();
        // Fluid rows 3..=11, bottom wall at y = 2.7.
        let u = |y: f64| 0.01 * (y - 2.7);
        let mut rho = vec![1.0; nx * ny];
        let mut vx: Vec<f64> = (0..nx * ny).map(|k| u((k / nx) as f64)).collect();
        let mut vy = vec![0.0; nx * ny];
        for k in 0..nx * ny {
            if !c.is_fluid_index(k) {
                vx[k] = 99.0;
            }
        }
        c.fill_virtual(&mut rho, &mut vx, &mut vy);
        for j in 0..3 {
            assert!((vx[j * nx] - u(j as f64)).abs() < 1e-12, "row {j}");
        }
    }
}
