//! Time stepping: the moment-space reference scheme (MRT and its
//! single-rate BGK special case), the link-wise artificial compressibility
//! method and the finite-difference reconstructed scheme.
//!
//! Every step is a pure `old → new` transform; node updates only read the
//! input fields, so the row-parallel loops produce bit-identical results for
//! any worker count.

mod acm;
mod fdlbm;
mod mrt;

pub use acm::{acm_step, acm_step_with, odd_equilibrium};
pub use fdlbm::{fdlbm_step, fdlbm_step_with, fdlbm_theta, ThetaFields};
pub use mrt::{mrt_step, mrt_step_with};

use rayon::prelude::*;

use crate::boundaries::{NodeClassification, WallRule};
use crate::error::{Error, Result};
use crate::lattice::{self, MomentVector, Populations, RelaxationRates, Q, VELOCITIES};
use crate::stencil::StencilKind;

/// Grids smaller than this are stepped on the calling thread.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Mrt,
    /// MRT with every rate equal to `s_xx`.
    Bgk,
    Acm,
    #[serde(rename = "fd-lbm", alias = "fdlbm")]
    FdLbm,
}

impl SchemeKind {
    pub fn uses_populations(self) -> bool {
        matches!(self, Self::Mrt | Self::Bgk)
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrt" => Ok(Self::Mrt),
            "bgk" => Ok(Self::Bgk),
            "acm" | "lw-acm" => Ok(Self::Acm),
            "fdlbm" | "fd-lbm" => Ok(Self::FdLbm),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Sign of the cross-derivative term in the off-diagonal stress defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaXySign {
    /// `⅓(∂x vy − ∂y vx)`.
    AsPrinted,
    /// `⅓(∂x vy + ∂y vx)`, the symmetric strain rate.
    Symmetric,
}

/// Field differenced in the first-order (non-product) terms of the defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaGradient {
    /// `∂x vx` etc. on the velocity `v = J/ρ`.
    Velocity,
    /// `∂x Jx` etc. on the momentum; the density-gradient terms then cancel
    /// the pressure part of `∂t J` at first order in the mean velocity.
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub rates: RelaxationRates,
    /// Derivative estimator of the finite-difference scheme.
    pub stencil: StencilKind,
    /// Viscosity of the artificial compressibility scheme; `Θ = 1 − 6ν`.
    pub acm_nu: f64,
    pub theta_xy_sign: ThetaXySign,
    pub theta_gradient: ThetaGradient,
}

impl SchemeConfig {
    pub fn mrt(rates: RelaxationRates) -> Self {
        Self {
            kind: SchemeKind::Mrt,
            rates,
            stencil: StencilKind::FivePoint,
            acm_nu: lattice::transport(&rates).nu,
            theta_xy_sign: ThetaXySign::Symmetric,
            theta_gradient: ThetaGradient::Momentum,
        }
    }

    /// Multiple relaxation times for the viscosity `nu`: the energy rates
    /// equal the shear rate and the energy-flux rate is `s_q`, or the one
    /// satisfying the quartic condition when `None`.
    pub fn mrt_for_viscosity(nu: f64, s_q: Option<f64>) -> Result<Self> {
        let s = lattice::rate_for_viscosity(nu)?;
        let s_q = s_q.unwrap_or_else(|| lattice::quartic_s_q(s));
        Ok(Self::mrt(RelaxationRates::new(s, s, s_q, s)?))
    }

    /// Single relaxation rate for the viscosity `nu`.
    pub fn bgk(nu: f64) -> Result<Self> {
        let s = lattice::rate_for_viscosity(nu)?;
        let mut cfg = Self::mrt(RelaxationRates::bgk(s)?);
        cfg.kind = SchemeKind::Bgk;
        Ok(cfg)
    }

    pub fn acm(nu: f64) -> Result<Self> {
        let s = lattice::rate_for_viscosity(nu)?;
        let cfg = Self {
            kind: SchemeKind::Acm,
            rates: RelaxationRates::bgk(s)?,
            stencil: StencilKind::FivePoint,
            acm_nu: nu,
            theta_xy_sign: ThetaXySign::Symmetric,
            theta_gradient: ThetaGradient::Momentum,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Finite-difference scheme with shear and bulk rates both set from `nu`.
    pub fn fdlbm(nu: f64, stencil: StencilKind) -> Result<Self> {
        let s = lattice::rate_for_viscosity(nu)?;
        Ok(Self::fdlbm_with_rates(RelaxationRates::bgk(s)?, stencil))
    }

    pub fn fdlbm_with_rates(rates: RelaxationRates, stencil: StencilKind) -> Self {
        Self {
            kind: SchemeKind::FdLbm,
            rates,
            stencil,
            acm_nu: lattice::transport(&rates).nu,
            theta_xy_sign: ThetaXySign::Symmetric,
            theta_gradient: ThetaGradient::Momentum,
        }
    }

    pub fn with_theta_xy_sign(mut self, sign: ThetaXySign) -> Self {
        self.theta_xy_sign = sign;
        self
    }

    pub fn with_theta_gradient(mut self, g: ThetaGradient) -> Self {
        self.theta_gradient = g;
        self
    }

    /// Rates actually used by the collision.
    pub fn effective_rates(&self) -> RelaxationRates {
        match self.kind {
            SchemeKind::Bgk => RelaxationRates {
                s_e: self.rates.s_xx,
                s_xx: self.rates.s_xx,
                s_q: self.rates.s_xx,
                s_eps: self.rates.s_xx,
            },
            _ => self.rates,
        }
    }

    /// Long-wave shear viscosity at rest.
    pub fn viscosity(&self) -> f64 {
        match self.kind {
            SchemeKind::Acm => self.acm_nu,
            _ => lattice::transport(&self.rates).nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SchemeKind::Acm => {
                if !(self.acm_nu > 0.0 && self.acm_nu <= 1.0 / 6.0) {
                    return Err(Error::InvalidParameter(format!(
                        "artificial compressibility needs 0 < nu <= 1/6, got {}",
                        self.acm_nu
                    )));
                }
                Ok(())
            }
            _ => self.effective_rates().validate(),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::Mrt => "mrt".into(),
            SchemeKind::Bgk => "bgk".into(),
            SchemeKind::Acm => "acm".into(),
            SchemeKind::FdLbm => format!("fd-lbm-{}", self.stencil.points()),
        }
    }
}

/// Nine population grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationField {
    pub nx: usize,
    pub ny: usize,
    pub f: Vec<Populations>,
}

/// Density and velocity grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveField {
    pub nx: usize,
    pub ny: usize,
    pub rho: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl PrimitiveField {
    pub fn uniform(nx: usize, ny: usize, rho: f64, v: [f64; 2]) -> Self {
        let n = nx * ny;
        Self { nx, ny, rho: vec![rho; n], vx: vec![v[0]; n], vy: vec![v[1]; n] }
    }

    /// Build from `(rho, jx, jy)` per node.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> (f64, f64, f64)) -> Self {
        let mut out = Self::uniform(nx, ny, 1.0, [0.0; 2]);
        for j in 0..ny {
            for i in 0..nx {
                let (rho, jx, jy) = f(i, j);
                let k = j * nx + i;
                out.rho[k] = rho;
                out.vx[k] = jx / rho;
                out.vy[k] = jy / rho;
            }
        }
        out
    }
}

impl PopulationField {
    /// Equilibrium populations of `(rho, jx, jy)` per node.
    pub fn equilibrium_from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> (f64, f64, f64)) -> Self {
        let mut pops = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (rho, jx, jy) = f(i, j);
                pops.push(lattice::equilibrium_populations(rho, jx, jy));
            }
        }
        Self { nx, ny, f: pops }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSet {
    Populations(PopulationField),
    Primitive(PrimitiveField),
}

impl FieldSet {
    /// State of the representation used by `kind`, built from
    /// `(rho, jx, jy)` per node (populations start at equilibrium).
    pub fn for_scheme(
        kind: SchemeKind,
        nx: usize,
        ny: usize,
        f: impl Fn(usize, usize) -> (f64, f64, f64),
    ) -> Self {
        if kind.uses_populations() {
            FieldSet::Populations(PopulationField::equilibrium_from_fn(nx, ny, f))
        } else {
            FieldSet::Primitive(PrimitiveField::from_fn(nx, ny, f))
        }
    }

    pub fn extents(&self) -> (usize, usize) {
        match self {
            FieldSet::Populations(p) => (p.nx, p.ny),
            FieldSet::Primitive(p) => (p.nx, p.ny),
        }
    }

    /// `(rho, jx, jy)` at node index `k`.
    #[inline]
    pub fn conserved(&self, k: usize) -> (f64, f64, f64) {
        match self {
            FieldSet::Populations(p) => {
                let f = &p.f[k];
                let rho: f64 = f.iter().sum();
                let mut jx = 0.0;
                let mut jy = 0.0;
                for (fi, c) in f.iter().zip(VELOCITIES) {
                    jx += c[0] as f64 * fi;
                    jy += c[1] as f64 * fi;
                }
                (rho, jx, jy)
            }
            FieldSet::Primitive(p) => {
                let r = p.rho[k];
                (r, r * p.vx[k], r * p.vy[k])
            }
        }
    }

    /// Compensated sums, so that conservation checks see the per-node
    /// round-off rather than that of the summation.
    pub fn total_mass(&self) -> f64 {
        let (nx, ny) = self.extents();
        compensated_sum((0..nx * ny).map(|k| self.conserved(k).0))
    }

    pub fn total_momentum(&self) -> [f64; 2] {
        let (nx, ny) = self.extents();
        let n = nx * ny;
        [compensated_sum((0..n).map(|k| self.conserved(k).1)), compensated_sum((0..n).map(|k| self.conserved(k).2))]
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FieldSet::Populations(p) => p.f.iter().flatten().all(|v| v.is_finite()),
            FieldSet::Primitive(p) => p
                .rho
                .iter()
                .chain(&p.vx)
                .chain(&p.vy)
                .all(|v| v.is_finite()),
        }
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Half of a Strang-split body force: adds `g/2` to the momentum of every
/// fluid node. Population fields receive the kick as a shift of their
/// equilibrium, so the energy flux follows the momentum.
pub fn apply_half_kick(fs: &mut FieldSet, g: [f64; 2], fluid: Option<&[bool]>) {
    if g == [0.0, 0.0] {
        return;
    }
    match fs {
        FieldSet::Populations(p) => {
            for (k, f) in p.f.iter_mut().enumerate() {
                if fluid.is_none_or(|m| m[k]) {
                    kick_populations(f, g);
                }
            }
        }
        FieldSet::Primitive(p) => {
            for k in 0..p.rho.len() {
                if fluid.is_none_or(|m| m[k]) {
                    kick_primitive(p, k, g);
                }
            }
        }
    }
}

/// Adds `g/2` to the momentum of one node as `f_eq(ρ, J + g/2) − f_eq(ρ, J)`.
#[inline]
pub(crate) fn kick_populations(f: &mut Populations, g: [f64; 2]) {
    let m = lattice::to_moments(f);
    let before = lattice::equilibrium_populations(m.rho, m.jx, m.jy);
    let after = lattice::equilibrium_populations(m.rho, m.jx + 0.5 * g[0], m.jy + 0.5 * g[1]);
    for a in 0..Q {
        f[a] += after[a] - before[a];
    }
}

/// Moment-space form of [`kick_populations`].
#[inline]
pub(crate) fn kick_moments(m: &mut MomentVector, g: [f64; 2]) {
    let before = lattice::equilibrium(m.rho, m.jx, m.jy).to_array();
    let after = lattice::equilibrium(m.rho, m.jx + 0.5 * g[0], m.jy + 0.5 * g[1]).to_array();
    let mut v = m.to_array();
    for r in 0..Q {
        v[r] += after[r] - before[r];
    }
    *m = MomentVector::from_array(v);
}

/// Adds `g/2` to the momentum of one node.
#[inline]
pub(crate) fn kick_primitive(p: &mut PrimitiveField, k: usize, g: [f64; 2]) {
    let r = p.rho[k];
    p.vx[k] += 0.5 * g[0] / r;
    p.vy[k] += 0.5 * g[1] / r;
}

/// Walls, wall rule and body force for one step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub force: [f64; 2],
    pub walls: Option<&'a NodeClassification>,
    pub wall_rule: WallRule,
}

impl Default for StepContext<'_> {
    fn default() -> Self {
        Self { force: [0.0; 2], walls: None, wall_rule: WallRule::BounceBack }
    }
}

impl StepContext<'_> {
    #[inline]
    pub(crate) fn is_fluid(&self, k: usize) -> bool {
        self.walls.is_none_or(|w| w.is_fluid_index(k))
    }
}

/// One time step of any scheme.
pub fn step(fs: &FieldSet, cfg: &SchemeConfig, ctx: &StepContext) -> Result<FieldSet> {
    match (cfg.kind, fs) {
        (SchemeKind::Mrt | SchemeKind::Bgk, FieldSet::Populations(p)) => {
            Ok(FieldSet::Populations(mrt_step_with(p, cfg, ctx)))
        }
        (SchemeKind::Acm, FieldSet::Primitive(p)) => Ok(FieldSet::Primitive(acm_step_with(p, cfg, ctx))),
        (SchemeKind::FdLbm, FieldSet::Primitive(p)) => Ok(FieldSet::Primitive(fdlbm_step_with(p, cfg, ctx))),
        (kind, _) => Err(Error::InvalidParameter(format!(
            "field representation does not match scheme {kind:?}"
        ))),
    }
}

/// Pull streaming of post-collision populations followed by the moment
/// sums, for the primitive-variable schemes.
pub(crate) fn stream_to_primitive(fstar: &[Populations], nx: usize, ny: usize) -> PrimitiveField {
    let mut out = PrimitiveField::uniform(nx, ny, 1.0, [0.0; 2]);
    let row = |j: usize, rho: &mut [f64], vx: &mut [f64], vy: &mut [f64]| {
        for i in 0..nx {
            let mut f = [0.0; Q];
            for (a, fa) in f.iter_mut().enumerate() {
                let [cx, cy] = VELOCITIES[a];
                let si = (i as isize - cx as isize).rem_euclid(nx as isize) as usize;
                let sj = (j as isize - cy as isize).rem_euclid(ny as isize) as usize;
                *fa = fstar[sj * nx + si][a];
            }
            let r: f64 = f.iter().sum();
            let mut jx = 0.0;
            let mut jy = 0.0;
            for (fa, c) in f.iter().zip(VELOCITIES) {
                jx += c[0] as f64 * fa;
                jy += c[1] as f64 * fa;
            }
            rho[i] = r;
            vx[i] = jx / r;
            vy[i] = jy / r;
        }
    };
    if nx * ny >= PARALLEL_THRESHOLD {
        out.rho
            .par_chunks_mut(nx)
            .zip(out.vx.par_chunks_mut(nx))
            .zip(out.vy.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(j, ((r, x), y))| row(j, r, x, y));
    } else {
        for ((j, r), (x, y)) in out
            .rho
            .chunks_mut(nx)
            .enumerate()
            .zip(out.vx.chunks_mut(nx).zip(out.vy.chunks_mut(nx)))
        {
            row(j, r, x, y);
        }
    }
    out
}

/// Evaluate `f(k)` for every node into a fresh vector, row-parallel on
/// large grids.
pub(crate) fn map_nodes<T: Send + Copy + Default>(
    nx: usize,
    ny: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    let mut out = vec![T::default(); nx * ny];
    if nx * ny >= PARALLEL_THRESHOLD {
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(j * nx + i);
            }
        });
    } else {
        for (k, v) in out.iter_mut().enumerate() {
            *v = f(k);
        }
    }
    out
}

/// Driver owning a state, its walls and a body force.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub cfg: SchemeConfig,
    pub state: FieldSet,
    pub walls: Option<NodeClassification>,
    pub wall_rule: WallRule,
    pub force: [f64; 2],
    pub time: usize,
}

impl Simulation {
    pub fn new(cfg: SchemeConfig, state: FieldSet) -> Result<Self> {
        cfg.validate()?;
        let ok = match &state {
            FieldSet::Populations(_) => cfg.kind.uses_populations(),
            FieldSet::Primitive(_) => !cfg.kind.uses_populations(),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "field representation does not match scheme {:?}",
                cfg.kind
            )));
        }
        Ok(Self { cfg, state, walls: None, wall_rule: WallRule::BounceBack, force: [0.0; 2], time: 0 })
    }

    pub fn with_walls(mut self, walls: NodeClassification, rule: WallRule) -> Result<Self> {
        if (walls.nx, walls.ny) != self.state.extents() {
            return Err(Error::Geometry("classification extents differ from the field".into()));
        }
        self.walls = Some(walls);
        self.wall_rule = rule;
        self.fill_outside();
        Ok(self)
    }

    pub fn with_force(mut self, g: [f64; 2]) -> Self {
        self.force = g;
        self
    }

    fn fill_outside(&mut self) {
        if let (Some(walls), FieldSet::Primitive(p)) = (&self.walls, &mut self.state) {
            walls.fill_virtual(&mut p.rho, &mut p.vx, &mut p.vy);
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let ctx = StepContext { force: self.force, walls: self.walls.as_ref(), wall_rule: self.wall_rule };
        self.state = step(&self.state, &self.cfg, &ctx)?;
        self.time += 1;
        self.fill_outside();
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        if !self.state.is_finite() {
            return Err(Error::Diverged { step: self.time });
        }
        Ok(())
    }
}
