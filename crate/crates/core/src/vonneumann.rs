//! Linear stability analysis around a uniform state.
//!
//! The amplification matrix is obtained by linearising the actual scheme
//! step: the response to a single perturbed node gives a translation
//! invariant kernel `K(d)`, and `H(k) = Σ_d K(d) e^{−i k·d}` for any wave
//! vector. A second route perturbs commensurate plane waves directly and
//! serves as a cross-check.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{equilibrium_populations, sigma, Q, VELOCITIES};
use crate::report::{num, Csv};
use crate::schemes::{step, FieldSet, PopulationField, PrimitiveField, SchemeConfig, StepContext};
use crate::stencil::StencilKind;

pub type C64 = Complex<f64>;

/// Default perturbation amplitude used for linearisation.
pub const DEFAULT_DELTA: f64 = 1e-4;
/// Moduli above `1 + UNSTABLE_MARGIN` count as growth.
pub const UNSTABLE_MARGIN: f64 = 1e-9;
const KERNEL_GRID: usize = 12;
const MIN_PROBE_NODES: usize = 8;
const MAX_PROBE_NODES: usize = 4096;

/// Plane wave `exp(i(kx·x + ky·y))` superposed on a uniform state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveProbe {
    pub kx: f64,
    pub ky: f64,
    pub velocity: [f64; 2],
    pub base_rho: f64,
}

impl PlaneWaveProbe {
    pub fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky, velocity: [0.0; 2], base_rho: 1.0 }
    }

    /// Wave vector of modulus `k` at angle `phi` (radians) from the x axis.
    pub fn polar(k: f64, phi: f64) -> Self {
        Self::new(k * phi.cos(), k * phi.sin())
    }

    /// `kx = 2πa/nx`, `ky = 2πb/ny`.
    pub fn commensurate(a: i64, nx: usize, b: i64, ny: usize) -> Self {
        Self::new(2.0 * PI * a as f64 / nx as f64, 2.0 * PI * b as f64 / ny as f64)
    }

    pub fn with_velocity(mut self, v: [f64; 2]) -> Self {
        self.velocity = v;
        self
    }

    pub fn with_base_rho(mut self, rho: f64) -> Self {
        self.base_rho = rho;
        self
    }

    pub fn modulus(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    /// Smallest periodic grid carrying the wave, enlarged to at least eight
    /// nodes per direction.
    pub fn probe_grid(&self) -> Result<(usize, usize)> {
        let period = |k: f64| -> Option<usize> {
            (1..=MAX_PROBE_NODES).find(|&n| {
                let turns = k * n as f64 / (2.0 * PI);
                (turns - turns.round()).abs() < 1e-9
            })
        };
        match (period(self.kx), period(self.ky)) {
            (Some(px), Some(py)) => Ok((px * MIN_PROBE_NODES.div_ceil(px), py * MIN_PROBE_NODES.div_ceil(py))),
            _ => Err(Error::NonCommensurate { kx: self.kx, ky: self.ky, nx: MAX_PROBE_NODES, ny: MAX_PROBE_NODES }),
        }
    }
}

/// Velocity of magnitude `speed` along the direction `phi`.
pub fn along(phi: f64, speed: f64) -> [f64; 2] {
    [speed * phi.cos(), speed * phi.sin()]
}

/// One-step propagator of plane-wave amplitudes. The state is the nine
/// populations for MRT/BGK and `(δρ, δJx, δJy)` for the primitive schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationMatrix {
    pub h: DMatrix<C64>,
}

impl AmplificationMatrix {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        // Exactly degenerate clusters (k = 0, single-rate collisions) can stall
        // the QR iteration at the tightest deflation tolerance.
        let schur = [f64::EPSILON, 1e-13, 1e-12, 1e-10]
            .into_iter()
            .find_map(|eps| self.h.clone().try_schur(eps, 20_000))
            .ok_or_else(|| Error::FitFailure("Schur decomposition did not converge".into()))?;
        let ev = schur
            .eigenvalues()
            .ok_or_else(|| Error::FitFailure("Schur form is not triangular".into()))?;
        Ok(ev.iter().copied().collect())
    }

    /// Eigenvalues with unit eigenvectors (null vectors of `H − zI`).
    pub fn eigenpairs(&self) -> Result<Vec<(C64, DVector<C64>)>> {
        let n = self.dim();
        self.eigenvalues()?
            .into_iter()
            .map(|z| {
                let shifted = &self.h - DMatrix::<C64>::identity(n, n) * z;
                let svd = shifted.svd(false, true);
                let v_t = svd.v_t.ok_or_else(|| Error::FitFailure("SVD failed".into()))?;
                let (idx, _) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("non-empty matrix");
                let v: DVector<C64> = v_t.row(idx).adjoint().column(0).into_owned();
                Ok((z, v.normalize()))
            })
            .collect()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

fn state_dim(cfg: &SchemeConfig) -> usize {
    if cfg.kind.uses_populations() {
        Q
    } else {
        3
    }
}

fn base_state(cfg: &SchemeConfig, rho: f64, v: [f64; 2]) -> Vec<f64> {
    let (jx, jy) = (rho * v[0], rho * v[1]);
    if cfg.kind.uses_populations() {
        equilibrium_populations(rho, jx, jy).to_vec()
    } else {
        vec![rho, jx, jy]
    }
}

fn field_from_states(cfg: &SchemeConfig, nx: usize, ny: usize, state: impl Fn(usize) -> Vec<f64>) -> FieldSet {
    if cfg.kind.uses_populations() {
        let f = (0..nx * ny)
            .map(|k| {
                let s = state(k);
                let mut p = [0.0; Q];
                p.copy_from_slice(&s);
                p
            })
            .collect();
        FieldSet::Populations(PopulationField { nx, ny, f })
    } else {
        FieldSet::Primitive(PrimitiveField::from_fn(nx, ny, |i, j| {
            let s = state(j * nx + i);
            (s[0], s[1], s[2])
        }))
    }
}

fn read_state(fs: &FieldSet, k: usize) -> Vec<f64> {
    match fs {
        FieldSet::Populations(p) => p.f[k].to_vec(),
        FieldSet::Primitive(_) => {
            let (r, jx, jy) = fs.conserved(k);
            vec![r, jx, jy]
        }
    }
}

fn flatten(fs: &FieldSet, dim: usize) -> Vec<f64> {
    let (nx, ny) = fs.extents();
    let mut out = Vec::with_capacity(nx * ny * dim);
    for k in 0..nx * ny {
        out.extend(read_state(fs, k));
    }
    out
}

/// Richardson-extrapolated central difference `(4D(δ/2) − D(δ))/3` of a
/// vector-valued response. The `δ²` error cancels, so a fairly large `δ`
/// keeps roundoff small.
fn derivative(delta: f64, response: impl Fn(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let central = |h: f64| -> Result<Vec<f64>> {
        let (p, m) = (response(h)?, response(-h)?);
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (coarse, fine) = (central(delta)?, central(delta / 2.0)?);
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

/// Impulse response of one scheme step around a uniform state.
#[derive(Debug, Clone)]
pub struct LinearKernel {
    dim: usize,
    taps: Vec<(i64, i64, DMatrix<f64>)>,
}

impl LinearKernel {
    pub fn build(cfg: &SchemeConfig, velocity: [f64; 2], base_rho: f64, delta: f64) -> Result<Self> {
        cfg.validate()?;
        if !(delta > 0.0) || !(base_rho > 0.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} and base density {base_rho} must be positive")));
        }
        let n = KERNEL_GRID;
        let centre = (n / 2) * n + n / 2;
        let dim = state_dim(cfg);
        let base = base_state(cfg, base_rho, velocity);
        let ctx = StepContext::default();

        let mut columns = Vec::with_capacity(dim);
        for comp in 0..dim {
            columns.push(derivative(delta, |amp| {
                let fs = field_from_states(cfg, n, n, |k| {
                    let mut s = base.clone();
                    if k == centre {
                        s[comp] += amp;
                    }
                    s
                });
                Ok(flatten(&step(&fs, cfg, &ctx)?, dim))
            })?);
        }

        let mut taps = Vec::new();
        for k in 0..n * n {
            let m = DMatrix::<f64>::from_fn(dim, dim, |o, comp| columns[comp][k * dim + o]);
            if m.iter().any(|v| *v != 0.0) {
                let dx = (k % n) as i64 - (n / 2) as i64;
                let dy = (k / n) as i64 - (n / 2) as i64;
                taps.push((dx, dy, m));
            }
        }
        Ok(Self { dim, taps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest offset reached by the kernel (Chebyshev norm).
    pub fn reach(&self) -> i64 {
        self.taps.iter().map(|(dx, dy, _)| dx.abs().max(dy.abs())).max().unwrap_or(0)
    }

    pub fn matrix(&self, kx: f64, ky: f64) -> AmplificationMatrix {
        let mut h = DMatrix::<C64>::zeros(self.dim, self.dim);
        for (dx, dy, m) in &self.taps {
            let phase = C64::from_polar(1.0, -(kx * *dx as f64 + ky * *dy as f64));
            h += m.map(|v| C64::new(v, 0.0)) * phase;
        }
        AmplificationMatrix { h }
    }
}

/// `H(k)` for one probe, through the impulse-response kernel.
pub fn amplification_matrix(cfg: &SchemeConfig, probe: &PlaneWaveProbe) -> Result<AmplificationMatrix> {
    let kernel = LinearKernel::build(cfg, probe.velocity, probe.base_rho, DEFAULT_DELTA)?;
    Ok(kernel.matrix(probe.kx, probe.ky))
}

/// `H(k)` by perturbing cosine and sine plane waves on the smallest periodic
/// grid carrying the (commensurate) probe and projecting the response back
/// on the mode.
pub fn amplification_matrix_plane_wave(
    cfg: &SchemeConfig,
    probe: &PlaneWaveProbe,
    delta: f64,
) -> Result<AmplificationMatrix> {
    cfg.validate()?;
    let (nx, ny) = probe.probe_grid()?;
    let need = 2 * cfg.stencil.half_width() + 1;
    if nx < need || ny < need {
        return Err(Error::GridTooSmall { nx, ny, reason: format!("stencil needs {need} nodes") });
    }
    let dim = state_dim(cfg);
    let base = base_state(cfg, probe.base_rho, probe.velocity);
    let ctx = StepContext::default();
    let phase = |k: usize| probe.kx * (k % nx) as f64 + probe.ky * (k / nx) as f64;

    let response = |comp: usize, wave: fn(f64) -> f64| -> Result<DVector<C64>> {
        let d = derivative(delta, |amp| {
            let fs = field_from_states(cfg, nx, ny, |k| {
                let mut s = base.clone();
                s[comp] += amp * wave(phase(k));
                s
            });
            Ok(flatten(&step(&fs, cfg, &ctx)?, dim))
        })?;
        let mut acc = DVector::<C64>::zeros(dim);
        for k in 0..nx * ny {
            let w = C64::from_polar(1.0, -phase(k));
            for o in 0..dim {
                acc[o] += w * d[k * dim + o];
            }
        }
        Ok(acc.unscale((nx * ny) as f64))
    };

    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for comp in 0..dim {
        let c = response(comp, f64::cos)?;
        let s = response(comp, f64::sin)?;
        h.set_column(comp, &(c + s * C64::new(0.0, 1.0)));
    }
    Ok(AmplificationMatrix { h })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchLabel {
    Shear,
    AcousticPlus,
    AcousticMinus,
    Kinetic,
}

impl BranchLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Shear => "shear",
            Self::AcousticPlus => "acoustic+",
            Self::AcousticMinus => "acoustic-",
            Self::Kinetic => "kinetic",
        }
    }

    pub fn is_hydrodynamic(self) -> bool {
        self != Self::Kinetic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBranch {
    pub z: C64,
    /// `−log z`: attenuation in the real part, frequency in the imaginary part.
    pub gamma: C64,
    pub eigenvector: DVector<C64>,
    pub label: BranchLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSample {
    pub k: f64,
    /// Modes in tracked order: index `i` continues index `i` of the
    /// previous sample.
    pub modes: Vec<ModeBranch>,
    /// Smallest overlap of a hydrodynamic branch with its predecessor
    /// (1 at the first sample).
    pub min_overlap: f64,
}

impl DispersionSample {
    pub fn branch(&self, label: BranchLabel) -> Option<&ModeBranch> {
        self.modes.iter().find(|m| m.label == label)
    }

    pub fn max_modulus(&self) -> f64 {
        self.modes.iter().map(|m| m.z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispersion {
    pub phi: f64,
    pub velocity: [f64; 2],
    pub samples: Vec<DispersionSample>,
}

impl Dispersion {
    /// `(k, overlap)` of every sample where a hydrodynamic branch could not
    /// be continued with overlap ≥ 0.5.
    pub fn ambiguities(&self) -> Vec<(f64, f64)> {
        self.samples.iter().filter(|s| s.min_overlap < 0.5).map(|s| (s.k, s.min_overlap)).collect()
    }

    pub fn check_tracking(&self) -> Result<()> {
        match self.ambiguities().first() {
            Some(&(k, overlap)) => Err(Error::BranchAmbiguity { k, overlap }),
            None => Ok(()),
        }
    }

    /// First sample with a growing mode.
    pub fn first_unstable(&self) -> Option<(f64, f64)> {
        self.samples.iter().map(|s| (s.k, s.max_modulus())).find(|(_, m)| *m > 1.0 + UNSTABLE_MARGIN)
    }

    pub fn to_csv(&self) -> Csv {
        let mut csv = Csv::new(["k", "re_gamma", "im_gamma", "nu_k", "modulus", "branch"]);
        for s in &self.samples {
            for m in s.modes.iter().filter(|m| m.label.is_hydrodynamic()) {
                csv.push([
                    num(s.k),
                    num(m.gamma.re),
                    num(m.gamma.im),
                    num(m.gamma.re / (s.k * s.k)),
                    num(m.z.norm()),
                    m.label.as_str().to_string(),
                ]);
            }
        }
        csv
    }
}

/// Weighted squared moduli of (density, longitudinal momentum, transverse
/// momentum) in an orthonormal moment basis.
fn hydro_fractions(v: &DVector<C64>, phi: f64) -> (f64, f64, f64) {
    let (rho, jx, jy, wr, wj) = if v.len() == Q {
        let mut rho = C64::new(0.0, 0.0);
        let (mut jx, mut jy) = (rho, rho);
        for (a, c) in VELOCITIES.iter().enumerate() {
            rho += v[a];
            jx += v[a] * c[0] as f64;
            jy += v[a] * c[1] as f64;
        }
        (rho, jx, jy, 1.0 / 9.0, 1.0 / 6.0)
    } else {
        (v[0], v[1], v[2], 1.0, 1.0)
    };
    let (c, s) = (phi.cos(), phi.sin());
    let long = jx * c + jy * s;
    let trans = -jx * s + jy * c;
    (rho.norm_sqr() * wr, long.norm_sqr() * wj, trans.norm_sqr() * wj)
}

fn label_first(pairs: &[(C64, DVector<C64>)], phi: f64) -> Vec<BranchLabel> {
    let n = pairs.len();
    let fr: Vec<(f64, f64, f64)> = pairs.iter().map(|(_, v)| hydro_fractions(v, phi)).collect();
    let mut labels = vec![BranchLabel::Kinetic; n];
    let shear = (0..n).max_by(|&a, &b| fr[a].2.total_cmp(&fr[b].2)).expect("modes");
    labels[shear] = BranchLabel::Shear;
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != shear).collect();
    rest.sort_by(|&a, &b| (fr[b].0 + fr[b].1).total_cmp(&(fr[a].0 + fr[a].1)));
    if rest.len() >= 2 {
        let (a, b) = (rest[0], rest[1]);
        let gamma_im = |i: usize| -pairs[i].0.arg();
        let (plus, minus) = if gamma_im(a) >= gamma_im(b) { (a, b) } else { (b, a) };
        labels[plus] = BranchLabel::AcousticPlus;
        labels[minus] = BranchLabel::AcousticMinus;
    }
    labels
}

fn to_mode(z: C64, v: DVector<C64>, label: BranchLabel) -> ModeBranch {
    ModeBranch { z, gamma: -z.ln(), eigenvector: v, label }
}

/// Eigenmodes of `H(k)` along the direction `phi` at ascending `ks`,
/// with branches continued by maximal eigenvector overlap.
pub fn dispersion_modes(cfg: &SchemeConfig, velocity: [f64; 2], phi: f64, ks: &[f64]) -> Result<Dispersion> {
    if ks.is_empty() || ks[0] <= 0.0 || ks.windows(2).any(|w| w[1] <= w[0]) || ks[ks.len() - 1] > PI + 1e-12 {
        return Err(Error::InvalidParameter("k samples must ascend within (0, π]".into()));
    }
    let kernel = LinearKernel::build(cfg, velocity, 1.0, DEFAULT_DELTA)?;
    let spectra: Vec<Vec<(C64, DVector<C64>)>> = ks
        .par_iter()
        .map(|&k| kernel.matrix(k * phi.cos(), k * phi.sin()).eigenpairs())
        .collect::<Result<_>>()?;

    let mut samples: Vec<DispersionSample> = Vec::with_capacity(ks.len());
    for (idx, pairs) in spectra.into_iter().enumerate() {
        let k = ks[idx];
        let Some(prev) = samples.last() else {
            let labels = label_first(&pairs, phi);
            let modes = pairs.into_iter().zip(labels).map(|((z, v), l)| to_mode(z, v, l)).collect();
            samples.push(DispersionSample { k, modes, min_overlap: 1.0 });
            continue;
        };
        let n = pairs.len();
        let mut overlaps: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (i, m) in prev.modes.iter().enumerate() {
            for (j, (_, v)) in pairs.iter().enumerate() {
                overlaps.push((m.eigenvector.dotc(v).norm(), i, j));
            }
        }
        overlaps.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut assigned: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut taken = vec![false; n];
        for (o, i, j) in overlaps {
            if assigned[i].is_none() && !taken[j] {
                assigned[i] = Some((j, o));
                taken[j] = true;
            }
        }
        let mut min_overlap: f64 = 1.0;
        let mut modes = Vec::with_capacity(n);
        for (i, a) in assigned.into_iter().enumerate() {
            let (j, o) = a.expect("square assignment");
            let label = prev.modes[i].label;
            if label.is_hydrodynamic() {
                min_overlap = min_overlap.min(o);
            }
            let (z, v) = pairs[j].clone();
            modes.push(to_mode(z, v, label));
        }
        samples.push(DispersionSample { k, modes, min_overlap });
    }
    Ok(Dispersion { phi, velocity, samples })
}

/// Long-wave transport coefficients from the hydrodynamic branches.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TransportFit {
    pub nu0: f64,
    /// Coefficient of `k⁴` in the shear attenuation.
    pub nu2: f64,
    /// Coefficient of `k⁶`, fitted to keep `nu2` unbiased.
    pub nu4: f64,
    pub c_s: f64,
    pub gamma_s: f64,
    /// Root-mean-square residual of `ν(k)` over the fit window.
    pub residual: f64,
    pub fit_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscositySample {
    pub k: f64,
    pub gamma: C64,
    pub nu: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityCurve {
    pub fit: TransportFit,
    pub samples: Vec<ViscositySample>,
    /// First `(k, |z|)` with a growing mode of any branch.
    pub unstable: Option<(f64, f64)>,
}

impl ViscosityCurve {
    pub fn to_csv(&self) -> Csv {
        let mut csv = Csv::new(["k", "re_gamma", "im_gamma", "nu_k", "nu_k_over_nu0", "branch"]);
        for s in &self.samples {
            csv.push([
                num(s.k),
                num(s.gamma.re),
                num(s.gamma.im),
                num(s.nu),
                num(s.nu / self.fit.nu0),
                BranchLabel::Shear.as_str().into(),
            ]);
        }
        csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub velocity: [f64; 2],
    /// Largest `k` of the tabulated curve.
    pub k_max: f64,
    /// Upper end of the fit window.
    pub fit_k_max: f64,
    pub fit_samples: usize,
    pub table_samples: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { velocity: [0.0; 2], k_max: PI, fit_k_max: 0.5, fit_samples: 24, table_samples: 64 }
    }
}

/// Least squares for `y ≈ Σ c_p x^p` over `p ∈ powers`.
pub(crate) fn polyfit(x: &[f64], y: &[f64], powers: &[i32]) -> Result<(Vec<f64>, f64)> {
    if x.len() < powers.len() {
        return Err(Error::FitFailure(format!("{} points for {} coefficients", x.len(), powers.len())));
    }
    let a = DMatrix::from_fn(x.len(), powers.len(), |i, j| x[i].powi(powers[j]));
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let resid = (&a * &coef - &b).norm() / (x.len() as f64).sqrt();
    Ok((coef.iter().copied().collect(), resid))
}

/// `ν(k) = Re Γ_shear / k²` along `phi`, with `ν₀ + ν₂k² + ν₄k⁴` fitted
/// over the small-k window.
pub fn effective_viscosity_curve(cfg: &SchemeConfig, phi: f64, opts: &CurveOptions) -> Result<ViscosityCurve> {
    if !(opts.fit_k_max > 0.0 && opts.k_max > 0.0 && opts.k_max <= PI + 1e-12) || opts.fit_samples < 4 {
        return Err(Error::InvalidParameter("curve needs 0 < k_max ≤ π and at least four fit samples".into()));
    }
    let mut ks: Vec<f64> = (1..=opts.fit_samples)
        .map(|i| opts.fit_k_max.min(opts.k_max) * i as f64 / opts.fit_samples as f64)
        .collect();
    let last = *ks.last().expect("fit samples");
    ks.extend((1..=opts.table_samples).map(|i| opts.k_max * i as f64 / opts.table_samples as f64).filter(|&k| k > last + 1e-12));

    let disp = dispersion_modes(cfg, opts.velocity, phi, &ks)?;
    let unstable = disp.first_unstable();

    let mut samples = Vec::with_capacity(ks.len());
    for s in &disp.samples {
        let m = s.branch(BranchLabel::Shear).expect("shear branch labelled");
        samples.push(ViscositySample { k: s.k, gamma: m.gamma, nu: m.gamma.re / (s.k * s.k), modulus: m.z.norm() });
    }
    // Growth of another branch is reported but only a growing shear branch
    // ends the fit window.
    let k_stop = samples.iter().find(|s| s.modulus > 1.0 + UNSTABLE_MARGIN).map_or(f64::INFINITY, |s| s.k);

    let window: Vec<&ViscositySample> =
        samples.iter().filter(|s| s.k <= opts.fit_k_max + 1e-12 && s.k < k_stop).collect();
    if window.len() < 4 {
        let (k, modulus) = samples.iter().find(|s| s.k >= k_stop).map_or((0.0, 1.0), |s| (s.k, s.modulus));
        return Err(Error::Instability { k, modulus });
    }
    if let Some(bad) = disp.samples.iter().take_while(|s| s.k <= opts.fit_k_max + 1e-12).find(|s| s.min_overlap < 0.5) {
        return Err(Error::BranchAmbiguity { k: bad.k, overlap: bad.min_overlap });
    }
    let x: Vec<f64> = window.iter().map(|s| s.k * s.k).collect();
    let y: Vec<f64> = window.iter().map(|s| s.nu).collect();
    let (c, residual) = polyfit(&x, &y, &[0, 1, 2])?;

    let first = &disp.samples[0];
    let (c_s, gamma_s) = match (first.branch(BranchLabel::AcousticPlus), first.branch(BranchLabel::AcousticMinus)) {
        (Some(p), Some(m)) => {
            let k = first.k;
            ((p.gamma.im - m.gamma.im) / (2.0 * k), (p.gamma.re + m.gamma.re) / (2.0 * k * k))
        }
        _ => (f64::NAN, f64::NAN),
    };
    Ok(ViscosityCurve {
        fit: TransportFit { nu0: c[0], nu2: c[1], nu4: c[2], c_s, gamma_s, residual, fit_points: window.len() },
        samples,
        unstable,
    })
}

/// Largest eigenvalue modulus over `samples` wave numbers in `(0, k_max]`
/// along `phi`; returns the first `(k, |z|)` exceeding `1 + UNSTABLE_MARGIN`.
pub fn instability_scan(
    cfg: &SchemeConfig,
    velocity: [f64; 2],
    phi: f64,
    k_max: f64,
    samples: usize,
) -> Result<Option<(f64, f64)>> {
    let kernel = LinearKernel::build(cfg, velocity, 1.0, DEFAULT_DELTA)?;
    let radii: Vec<(f64, f64)> = (1..=samples)
        .into_par_iter()
        .map(|i| {
            let k = k_max * i as f64 / samples as f64;
            kernel.matrix(k * phi.cos(), k * phi.sin()).spectral_radius().map(|r| (k, r))
        })
        .collect::<Result<_>>()?;
    Ok(radii.into_iter().find(|(_, r)| *r > 1.0 + UNSTABLE_MARGIN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignVariant {
    /// Angular term subtracted.
    AsPrinted,
    /// Angular term added, which reproduces the tabulated values.
    TableMatched,
}

/// Closed-form shear hyperviscosity of the finite-difference scheme,
/// `isotropic ∓ angular·(cos²φ − cos⁴φ)`.
pub fn closed_form_hyperviscosity(kind: StencilKind, s_xx: f64, phi: f64, variant: SignVariant) -> f64 {
    let s = sigma(s_xx);
    let (iso, ang) = match kind {
        StencilKind::ThreePoint => ((2.0 * s - 3.0) * (2.0 * s - 1.0) / 72.0, (8.0 * s - 3.0) / 36.0),
        StencilKind::FivePoint => (s * (2.0 * s - 1.0) / 36.0, s / 18.0),
        StencilKind::NinePoint => {
            ((3.0 - 2.0 * s) * (2.0 * s - 1.0) / (24.0 * s), (20.0 * s - 9.0) / (12.0 * s))
        }
    };
    let c2 = phi.cos().powi(2);
    let angular = ang * (c2 - c2 * c2);
    match variant {
        SignVariant::AsPrinted => iso - angular,
        SignVariant::TableMatched => iso + angular,
    }
}

/// Sound speed, sound damping and advected shear viscosity of the artificial
/// compressibility scheme.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AcmPredictions {
    pub c_s: f64,
    pub gamma_s: f64,
    pub nu_eff: f64,
}

pub fn acm_predictions(nu: f64, v: f64) -> AcmPredictions {
    AcmPredictions { c_s: (2.0 * nu).sqrt(), gamma_s: nu / 2.0 + 1.0 / 12.0, nu_eff: nu - v * v / 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{quartic_s_q, RelaxationRates};

    fn all_schemes() -> Vec<SchemeConfig> {
        let mut v = vec![
            SchemeConfig::mrt(RelaxationRates::new(1.6, 1.8, 1.2, 1.4).unwrap()),
            SchemeConfig::bgk(0.02).unwrap(),
            SchemeConfig::acm(0.01).unwrap(),
        ];
        for kind in StencilKind::ALL {
            v.push(SchemeConfig::fdlbm(0.02, kind).unwrap());
        }
        v
    }

    #[test]
    fn conservation_at_zero_wave_number() {
        for cfg in all_schemes() {
            for vel in [[0.0, 0.0], [0.08, -0.05]] {
                let h = amplification_matrix(&cfg, &PlaneWaveProbe::new(0.0, 0.0).with_velocity(vel)).unwrap();
                let ones = h.eigenvalues().unwrap().iter().filter(|z| (*z - 1.0).norm() < 1e-10).count();
                assert_eq!(ones, 3, "{}", cfg.label());
            }
        }
    }

    #[test]
    fn kinetic_spectrum_at_zero_wave_number() {
        let rates = RelaxationRates::new(1.6, 1.8, 1.2, 1.4).unwrap();
        let cfg = SchemeConfig::mrt(rates);
        let mut ev: Vec<f64> =
            amplification_matrix(&cfg, &PlaneWaveProbe::new(0.0, 0.0)).unwrap().eigenvalues().unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut expected = vec![1.0, 1.0, 1.0, -0.6, -0.8, -0.8, -0.2, -0.2, -0.4];
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{ev:?}");
        }
    }

    #[test]
    fn routes_agree_on_commensurate_probes() {
        for cfg in all_schemes() {
            for (a, b) in [(1, 0), (2, 1), (1, 1), (3, 5)] {
                let probe = PlaneWaveProbe::commensurate(a, 16, b, 16).with_velocity([0.05, 0.02]);
                let h1 = amplification_matrix(&cfg, &probe).unwrap();
                let h2 = amplification_matrix_plane_wave(&cfg, &probe, DEFAULT_DELTA).unwrap();
                assert!((&h1.h - &h2.h).norm() < 1e-8, "{} ({a},{b})", cfg.label());
            }
        }
    }

    #[test]
    fn non_commensurate_probe_rejected() {
        let cfg = SchemeConfig::acm(0.01).unwrap();
        let probe = PlaneWaveProbe::new(1.0, 0.0);
        assert!(matches!(
            amplification_matrix_plane_wave(&cfg, &probe, DEFAULT_DELTA),
            Err(Error::NonCommensurate { .. })
        ));
        assert_eq!(PlaneWaveProbe::commensurate(1, 2, 0, 1).probe_grid().unwrap(), (8, 8));
        assert_eq!(PlaneWaveProbe::commensurate(3, 191, 2, 191).probe_grid().unwrap(), (191, 191));
    }

    #[test]
    fn halving_delta_is_consistent() {
        for cfg in all_schemes() {
            let probe = PlaneWaveProbe::polar(0.7, 0.3).with_velocity([0.1, 0.0]);
            let a = LinearKernel::build(&cfg, probe.velocity, 1.0, DEFAULT_DELTA).unwrap().matrix(probe.kx, probe.ky);
            let b = LinearKernel::build(&cfg, probe.velocity, 1.0, DEFAULT_DELTA / 2.0).unwrap().matrix(probe.kx, probe.ky);
            assert!((&a.h - &b.h).norm() < 1e-8 * a.h.norm(), "{}", cfg.label());
        }
    }

    #[test]
    fn kernel_reach_fits_the_grid() {
        for cfg in all_schemes() {
            let kernel = LinearKernel::build(&cfg, [0.1, 0.1], 1.0, DEFAULT_DELTA).unwrap();
            assert!(kernel.reach() <= 3, "{}", cfg.label());
        }
    }

    #[test]
    fn acm_shear_along_x_matches_hand_derivation() {
        // Transverse momentum along x: z = 1 − 2ν(1 − cos k) exactly.
        let nu = 0.03;
        let cfg = SchemeConfig::acm(nu).unwrap();
        for k in [0.1, 0.9, 2.5] {
            let h = amplification_matrix(&cfg, &PlaneWaveProbe::new(k, 0.0)).unwrap();
            let z = 1.0 - 2.0 * nu * (1.0 - f64::cos(k));
            assert!((h.h[(2, 2)] - z).norm() < 1e-9);
            assert!(h.h[(2, 0)].norm() < 1e-9 && h.h[(2, 1)].norm() < 1e-9);
        }
    }

    #[test]
    fn fdlbm_shear_along_x_matches_hand_derivation() {
        // z = 1 − (1 − cos k)/3 + (1 − 1/s) sin k · S(k)/3, S the stencil symbol.
        for kind in [StencilKind::ThreePoint, StencilKind::FivePoint] {
            let cfg = SchemeConfig::fdlbm(0.02, kind).unwrap();
            let a = 1.0 - 1.0 / cfg.rates.s_xx;
            for k in [0.2, 1.1, 2.9] {
                let h = amplification_matrix(&cfg, &PlaneWaveProbe::new(k, 0.0)).unwrap();
                let sym = crate::stencil::stencil_symbol(kind, k, 0.0).im;
                let z = 1.0 - (1.0 - k.cos()) / 3.0 + a * k.sin() * sym / 3.0;
                assert!((h.h[(2, 2)] - z).norm() < 1e-9, "{kind:?} {k}");
            }
        }
    }

    #[test]
    fn acm_matrix_at_rest_matches_second_order_expansion() {
        let nu = 0.01;
        let cfg = SchemeConfig::acm(nu).unwrap();
        for k in [0.02, 0.04] {
            let h = amplification_matrix(&cfg, &PlaneWaveProbe::new(k, 0.0)).unwrap().h;
            let i = C64::new(0.0, 1.0);
            let expected = [
                [C64::new(1.0 - k * k / 6.0, 0.0), -i * 6.0 * nu * k, C64::new(0.0, 0.0)],
                [-i * k / 3.0, C64::new(1.0 - 3.0 * nu * k * k, 0.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0 - nu * k * k, 0.0)],
            ];
            for r in 0..3 {
                for c in 0..3 {
                    assert!((h[(r, c)] - expected[r][c]).norm() < 2.0 * k.powi(3), "({r},{c}) at {k}");
                }
            }
        }
    }

    #[test]
    fn acm_sound_and_shear() {
        let nu = 0.01;
        let cfg = SchemeConfig::acm(nu).unwrap();
        let d = dispersion_modes(&cfg, [0.0; 2], 0.0, &[0.01, 0.03, 0.05]).unwrap();
        let s = &d.samples[2];
        let plus = s.branch(BranchLabel::AcousticPlus).unwrap();
        assert!((plus.gamma.im / 0.05 - (2.0 * nu).sqrt()).abs() < 1e-3);
        assert!((plus.gamma.re / 0.0025 - (nu / 2.0 + 1.0 / 12.0)).abs() < 1e-3);
        let shear = s.branch(BranchLabel::Shear).unwrap();
        assert!((shear.gamma.re / 0.0025 - nu).abs() < 1e-4);
        d.check_tracking().unwrap();
    }

    #[test]
    fn mrt_long_wave_viscosity_and_isotropy() {
        let nu = 1.0 / 108f64.sqrt();
        let s = crate::lattice::rate_for_viscosity(nu).unwrap();
        let cfg = SchemeConfig::mrt(RelaxationRates::new(s, s, quartic_s_q(s), s).unwrap());
        let opts = CurveOptions { k_max: 0.5, ..Default::default() };
        for phi in [0.0, 26.6f64.to_radians(), PI / 4.0] {
            let fit = effective_viscosity_curve(&cfg, phi, &opts).unwrap().fit;
            assert!((fit.nu0 - nu).abs() < 1e-6, "{phi}: {}", fit.nu0);
        }
    }

    #[test]
    fn mrt_advection_reduces_shear_viscosity() {
        let cfg = SchemeConfig::bgk(0.02).unwrap();
        for v in [0.1, 0.2] {
            let opts = CurveOptions { velocity: [v, 0.0], k_max: 0.5, ..Default::default() };
            let fit = effective_viscosity_curve(&cfg, 0.0, &opts).unwrap().fit;
            assert!((fit.nu0 / (0.02 * (1.0 - 3.0 * v * v)) - 1.0).abs() < 1e-4, "{v}: {}", fit.nu0);
        }
    }

    #[test]
    fn momentum_gradient_keeps_sound_stable_under_advection() {
        use crate::schemes::ThetaGradient;
        let phi = 2f64.atan2(3.0);
        let v = along(phi, 0.1);
        let base = SchemeConfig::fdlbm(0.01, StencilKind::ThreePoint).unwrap();
        let mom = base.clone().with_theta_gradient(ThetaGradient::Momentum);
        let vel = base.with_theta_gradient(ThetaGradient::Velocity);
        assert_eq!(instability_scan(&mom, v, phi, 0.6, 24).unwrap(), None);
        assert!(instability_scan(&vel, v, phi, 0.6, 24).unwrap().is_some());
    }

    #[test]
    fn closed_forms_at_table_angles() {
        let phi = 26.60f64.to_radians();
        let three = closed_form_hyperviscosity(StencilKind::ThreePoint, 1.85, 0.0, SignVariant::AsPrinted);
        assert!((three - 0.03725).abs() < 5e-6);
        let t = closed_form_hyperviscosity(StencilKind::ThreePoint, 1.85, phi, SignVariant::TableMatched);
        assert!((t - 0.02534).abs() < 5e-6);
        let t = closed_form_hyperviscosity(StencilKind::ThreePoint, 1.85, PI / 4.0, SignVariant::TableMatched);
        assert!((t - 0.01867).abs() < 5e-6);
        let f = closed_form_hyperviscosity(StencilKind::FivePoint, 1.85, 0.0, SignVariant::AsPrinted);
        assert!((f + 0.00103).abs() < 5e-6);
        let f = closed_form_hyperviscosity(StencilKind::FivePoint, 1.85, PI / 4.0, SignVariant::TableMatched);
        assert!((f + 0.00047).abs() < 5e-6);
    }

    #[test]
    fn acm_closed_forms() {
        let p = acm_predictions(0.01, 0.0);
        assert!((p.c_s - 0.141421).abs() < 1e-6 && (p.gamma_s - 0.0883333).abs() < 1e-7 && p.nu_eff == 0.01);
        assert!((acm_predictions(0.01, 0.1).nu_eff - 0.005).abs() < 1e-15);
        assert!(acm_predictions(0.01, 0.02f64.sqrt()).nu_eff.abs() < 1e-15);
    }

    #[test]
    fn polyfit_recovers_a_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let (c, r) = polyfit(&x, &y, &[0, 1, 2]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn bad_samples_rejected() {
        let cfg = SchemeConfig::acm(0.01).unwrap();
        assert!(dispersion_modes(&cfg, [0.0; 2], 0.0, &[]).is_err());
        assert!(dispersion_modes(&cfg, [0.0; 2], 0.0, &[0.0, 0.1]).is_err());
        assert!(dispersion_modes(&cfg, [0.0; 2], 0.0, &[0.2, 0.1]).is_err());
        assert!(dispersion_modes(&cfg, [0.0; 2], 0.0, &[4.0]).is_err());
    }
}
