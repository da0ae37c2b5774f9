//! D2Q9 velocity set, the orthogonal moment basis and the equilibria shared
//! by every scheme.
//!
//! Velocity ordering (frozen here, every other module reads it from
//! [`VELOCITIES`]):
//!
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```
//!
//! The moment rows are ρ, Jx, Jy, E, XX, XY, qx, qy, ε. Rows are pairwise
//! orthogonal, so the inverse is the transpose scaled by the squared row
//! norms; every inverse entry is a single integer ratio and is therefore
//! exactly rounded.

use crate::error::{Error, Result};

/// Number of discrete velocities.
pub const Q: usize = 9;

/// Discrete velocities in column order of the moment matrix.
pub const VELOCITIES: [[i32; 2]; Q] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [-1, 0],
    [0, -1],
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
];

/// `OPPOSITE[i]` is the index of `-VELOCITIES[i]`.
pub const OPPOSITE: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

/// Labels of the moment rows.
pub const MOMENT_NAMES: [&str; Q] = ["rho", "jx", "jy", "e", "xx", "xy", "qx", "qy", "eps"];

/// Index of each moment row.
pub mod row {
    pub const RHO: usize = 0;
    pub const JX: usize = 1;
    pub const JY: usize = 2;
    pub const E: usize = 3;
    pub const XX: usize = 4;
    pub const XY: usize = 5;
    pub const QX: usize = 6;
    pub const QY: usize = 7;
    pub const EPS: usize = 8;
}

/// Nine values attached to one node, indexed like [`VELOCITIES`].
pub type Populations = [f64; Q];

/// The D2Q9 velocity set together with the names of its moment rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VelocitySet {
    pub velocities: [[i32; 2]; Q],
    pub moment_names: [&'static str; Q],
}

impl VelocitySet {
    pub const fn d2q9() -> Self {
        Self {
            velocities: VELOCITIES,
            moment_names: MOMENT_NAMES,
        }
    }

    pub fn opposite(&self, i: usize) -> usize {
        OPPOSITE[i]
    }
}

impl Default for VelocitySet {
    fn default() -> Self {
        Self::d2q9()
    }
}

const fn moment_rows() -> [[i32; Q]; Q] {
    let mut m = [[0i32; Q]; Q];
    let mut i = 0;
    while i < Q {
        let cx = VELOCITIES[i][0];
        let cy = VELOCITIES[i][1];
        let c2 = cx * cx + cy * cy;
        m[row::RHO][i] = 1;
        m[row::JX][i] = cx;
        m[row::JY][i] = cy;
        m[row::E][i] = 3 * c2 - 4;
        m[row::XX][i] = cx * cx - cy * cy;
        m[row::XY][i] = cx * cy;
        m[row::QX][i] = (3 * c2 - 5) * cx;
        m[row::QY][i] = (3 * c2 - 5) * cy;
        m[row::EPS][i] = (9 * c2 * c2 - 21 * c2 + 8) / 2;
        i += 1;
    }
    m
}

const fn row_norms(m: &[[i32; Q]; Q]) -> [i32; Q] {
    let mut n = [0i32; Q];
    let mut k = 0;
    while k < Q {
        let mut i = 0;
        while i < Q {
            n[k] += m[k][i] * m[k][i];
            i += 1;
        }
        k += 1;
    }
    n
}

const fn to_f64(m: &[[i32; Q]; Q]) -> [[f64; Q]; Q] {
    let mut out = [[0.0; Q]; Q];
    let mut k = 0;
    while k < Q {
        let mut i = 0;
        while i < Q {
            out[k][i] = m[k][i] as f64;
            i += 1;
        }
        k += 1;
    }
    out
}

const fn inverse(m: &[[i32; Q]; Q]) -> [[f64; Q]; Q] {
    let norms = row_norms(m);
    let mut inv = [[0.0; Q]; Q];
    let mut i = 0;
    while i < Q {
        let mut k = 0;
        while k < Q {
            inv[i][k] = m[k][i] as f64 / norms[k] as f64;
            k += 1;
        }
        i += 1;
    }
    inv
}

const M_INT: [[i32; Q]; Q] = moment_rows();
const M: [[f64; Q]; Q] = to_f64(&M_INT);
const M_INV: [[f64; Q]; Q] = inverse(&M_INT);

/// The integer moment matrix and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub m: [[i32; Q]; Q],
    pub m_inv: [[f64; Q]; Q],
}

impl MomentMatrix {
    /// Squared norm of every row.
    pub fn row_norms(&self) -> [i32; Q] {
        row_norms(&self.m)
    }
}

pub fn moment_matrix() -> MomentMatrix {
    MomentMatrix {
        m: M_INT,
        m_inv: M_INV,
    }
}

/// Moment-space image of a population vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentVector {
    pub rho: f64,
    pub jx: f64,
    pub jy: f64,
    pub e: f64,
    pub xx: f64,
    pub xy: f64,
    pub qx: f64,
    pub qy: f64,
    pub eps: f64,
}

impl MomentVector {
    pub fn to_array(self) -> [f64; Q] {
        [
            self.rho, self.jx, self.jy, self.e, self.xx, self.xy, self.qx, self.qy, self.eps,
        ]
    }

    pub fn from_array(a: [f64; Q]) -> Self {
        Self {
            rho: a[0],
            jx: a[1],
            jy: a[2],
            e: a[3],
            xx: a[4],
            xy: a[5],
            qx: a[6],
            qy: a[7],
            eps: a[8],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn to_moments(f: &Populations) -> MomentVector {
    let mut m = [0.0; Q];
    for (k, mk) in m.iter_mut().enumerate() {
        *mk = M[k].iter().zip(f).map(|(a, b)| a * b).sum();
    }
    MomentVector::from_array(m)
}

#[inline]
pub fn from_moments(m: &MomentVector) -> Populations {
    let m = m.to_array();
    let mut f = [0.0; Q];
    for (i, fi) in f.iter_mut().enumerate() {
        *fi = M_INV[i].iter().zip(&m).map(|(a, b)| a * b).sum();
    }
    f
}

/// Equilibrium moments without the density check; callers guarantee
/// `rho > 0`.
#[inline]
pub(crate) fn equilibrium(rho: f64, jx: f64, jy: f64) -> MomentVector {
    let j2 = (jx * jx + jy * jy) / rho;
    MomentVector {
        rho,
        jx,
        jy,
        e: -2.0 * rho + 3.0 * j2,
        xx: (jx * jx - jy * jy) / rho,
        xy: jx * jy / rho,
        qx: -jx,
        qy: -jy,
        eps: rho - 3.0 * j2,
    }
}

/// Equilibrium values of all nine moments for the conserved state
/// `(rho, jx, jy)`.
pub fn equilibrium_moments(rho: f64, jx: f64, jy: f64) -> Result<MomentVector> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "density must be positive, got {rho}"
        )));
    }
    Ok(equilibrium(rho, jx, jy))
}

/// Equilibrium populations for `(rho, jx, jy)`.
#[inline]
pub fn equilibrium_populations(rho: f64, jx: f64, jy: f64) -> Populations {
    from_moments(&equilibrium(rho, jx, jy))
}

/// Relaxation rates of the non-conserved moments. `s_xx` drives both
/// stress moments XX and XY.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RelaxationRates {
    pub s_e: f64,
    pub s_xx: f64,
    pub s_q: f64,
    pub s_eps: f64,
}

impl RelaxationRates {
    pub fn new(s_e: f64, s_xx: f64, s_q: f64, s_eps: f64) -> Result<Self> {
        let rates = Self {
            s_e,
            s_xx,
            s_q,
            s_eps,
        };
        rates.validate()?;
        Ok(rates)
    }

    /// Single relaxation time: every rate equal.
    pub fn bgk(s: f64) -> Result<Self> {
        Self::new(s, s, s, s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("s_e", self.s_e),
            ("s_xx", self.s_xx),
            ("s_q", self.s_q),
            ("s_eps", self.s_eps),
        ] {
            if !(s > 0.0 && s < 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {s} is outside (0, 2)"
                )));
            }
        }
        Ok(())
    }

    /// Rates of all nine rows; conserved rows get zero.
    pub fn per_moment(&self) -> [f64; Q] {
        [
            0.0, 0.0, 0.0, self.s_e, self.s_xx, self.s_xx, self.s_q, self.s_q, self.s_eps,
        ]
    }
}

/// Collision in moment space. Conserved moments are copied untouched.
#[inline]
pub fn relax(m: &MomentVector, rates: &RelaxationRates) -> MomentVector {
    let eq = equilibrium(m.rho, m.jx, m.jy);
    let r = |v: f64, veq: f64, s: f64| v + s * (veq - v);
    MomentVector {
        rho: m.rho,
        jx: m.jx,
        jy: m.jy,
        e: r(m.e, eq.e, rates.s_e),
        xx: r(m.xx, eq.xx, rates.s_xx),
        xy: r(m.xy, eq.xy, rates.s_xx),
        qx: r(m.qx, eq.qx, rates.s_q),
        qy: r(m.qy, eq.qy, rates.s_q),
        eps: r(m.eps, eq.eps, rates.s_eps),
    }
}

/// Long-wave transport coefficients of the standard scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub nu: f64,
    pub zeta: f64,
    pub c_s: f64,
}

/// `σ = 1/s − 1/2`.
#[inline]
pub fn sigma(s: f64) -> f64 {
    1.0 / s - 0.5
}

pub fn transport(rates: &RelaxationRates) -> Transport {
    Transport {
        nu: sigma(rates.s_xx) / 3.0,
        zeta: sigma(rates.s_e) / 3.0,
        c_s: (1.0f64 / 3.0).sqrt(),
    }
}

/// Shear rate giving the kinematic viscosity `nu`.
pub fn rate_for_viscosity(nu: f64) -> Result<f64> {
    if !(nu > -1.0 / 6.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "viscosity {nu} is not reachable by a positive relaxation rate"
        )));
    }
    Ok(1.0 / (3.0 * nu + 0.5))
}

/// Energy-flux rate satisfying the quartic condition
/// `(1/s_xx − 1/2)(1/s_q − 1/2) = 1/6`.
pub fn quartic_s_q(s_xx: f64) -> f64 {
    let sigma_q = 1.0 / (6.0 * sigma(s_xx));
    1.0 / (sigma_q + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn density_row_is_all_ones() {
        assert_eq!(moment_matrix().m[0], [1; Q]);
    }

    #[test]
    fn jx_jy_rows_reproduce_velocity_components() {
        let mm = moment_matrix();
        for i in 0..Q {
            assert_eq!(mm.m[row::JX][i], VELOCITIES[i][0]);
            assert_eq!(mm.m[row::JY][i], VELOCITIES[i][1]);
        }
    }

    #[test]
    fn printed_rows_match() {
        let m = moment_matrix().m;
        assert_eq!(m[row::E], [-4, -1, -1, -1, -1, 2, 2, 2, 2]);
        assert_eq!(m[row::XX], [0, 1, -1, 1, -1, 0, 0, 0, 0]);
        assert_eq!(m[row::XY], [0, 0, 0, 0, 0, 1, -1, 1, -1]);
        assert_eq!(m[row::QX], [0, -2, 0, 2, 0, 1, -1, -1, 1]);
        assert_eq!(m[row::QY], [0, 0, -2, 0, 2, 1, 1, -1, -1]);
        assert_eq!(m[row::EPS], [4, -2, -2, -2, -2, 1, 1, 1, 1]);
    }

    #[test]
    fn rows_are_orthogonal() {
        let m = moment_matrix().m;
        for a in 0..Q {
            for b in (a + 1)..Q {
                let dot: i32 = (0..Q).map(|i| m[a][i] * m[b][i]).sum();
                assert_eq!(dot, 0, "rows {a} and {b}");
            }
        }
    }

    #[test]
    fn inverse_is_exact() {
        let mm = moment_matrix();
        for a in 0..Q {
            for b in 0..Q {
                let v: f64 = (0..Q).map(|i| mm.m[a][i] as f64 * mm.m_inv[i][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-14, "({a},{b}) = {v}");
            }
        }
    }

    #[test]
    fn diagonal_velocity_column() {
        let mut f = [0.0; Q];
        f[5] = 1.0;
        assert_eq!(
            to_moments(&f).to_array(),
            [1.0, 1.0, 1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn uniform_and_rest_populations() {
        assert_eq!(
            to_moments(&[1.0; Q]).to_array(),
            [9.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let mut f = [0.0; Q];
        f[0] = 1.0;
        assert_eq!(
            to_moments(&f).to_array(),
            [1.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 0.0, 4.0]
        );
    }

    #[test]
    fn equilibrium_examples() {
        let eq = equilibrium_moments(1.0, 0.0, 0.0).unwrap();
        assert_eq!(eq.to_array(), [1.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 1.0]);

        let eq = equilibrium_moments(1.0, 0.1, 0.0).unwrap();
        assert!((eq.e + 1.97).abs() < 1e-15);
        assert!((eq.xx - 0.01).abs() < 1e-15);
        assert_eq!(eq.xy, 0.0);
        assert_eq!(eq.qx, -0.1);
        assert_eq!(eq.qy, 0.0);
        assert!((eq.eps - 0.97).abs() < 1e-15);

        let eq = equilibrium_moments(2.0, 0.0, 0.0).unwrap();
        assert_eq!(eq.e, -4.0);
        assert_eq!(eq.eps, 2.0);
        assert_eq!((eq.qx, eq.qy, eq.jx, eq.jy), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn equilibrium_rejects_nonpositive_density() {
        assert!(equilibrium_moments(0.0, 0.0, 0.0).is_err());
        assert!(equilibrium_moments(-1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn relax_limits() {
        let m = MomentVector::from_array([1.1, 0.02, -0.01, 0.3, 0.2, -0.1, 0.05, 0.07, 0.4]);
        let eq = equilibrium(m.rho, m.jx, m.jy);
        let full = relax(&m, &RelaxationRates { s_e: 1.0, s_xx: 1.0, s_q: 1.0, s_eps: 1.0 });
        for (a, b) in full.to_array().iter().zip(eq.to_array()) {
            assert!((a - b).abs() < 1e-15);
        }
        let none = relax(&m, &RelaxationRates { s_e: 0.0, s_xx: 0.0, s_q: 0.0, s_eps: 0.0 });
        assert_eq!(none, m);
    }

    #[test]
    fn relax_over_relaxation_arithmetic() {
        // At rest the equilibrium of XX is zero.
        let m = MomentVector { rho: 1.0, xx: 2.0, ..Default::default() };
        let rates = RelaxationRates { s_e: 1.0, s_xx: 1.5, s_q: 1.0, s_eps: 1.0 };
        assert_eq!(relax(&m, &rates).xx, -1.0);
    }

    #[test]
    fn transport_relations() {
        let t = transport(&RelaxationRates::bgk(1.0).unwrap());
        assert!((t.nu - 1.0 / 6.0).abs() < 1e-15);
        assert!((t.c_s - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let t = transport(&RelaxationRates::bgk(1.999_999).unwrap());
        assert!(t.nu.abs() < 1e-6);
        assert!(rate_for_viscosity(-1.0 / 6.0).is_err());
        assert!((rate_for_viscosity(1.0 / 6.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_rate_for_optimal_viscosity() {
        let s_xx = rate_for_viscosity(1.0 / 108f64.sqrt()).unwrap();
        assert!((quartic_s_q(s_xx) - 0.9282).abs() < 1e-4);
    }

    #[test]
    fn rates_outside_open_interval_rejected() {
        assert!(RelaxationRates::new(1.0, 2.0, 1.0, 1.0).is_err());
        assert!(RelaxationRates::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(RelaxationRates::new(1.2, 1.9, 0.3, 1.99).is_ok());
    }

    fn moment_strategy() -> impl Strategy<Value = MomentVector> {
        (0.5f64..2.0, prop::array::uniform8(-1.0f64..1.0)).prop_map(|(rho, r)| {
            MomentVector::from_array([rho, r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]])
        })
    }

    proptest! {
        #[test]
        fn relax_conserves_hydrodynamic_moments(
            m in moment_strategy(),
            s in prop::array::uniform4(0.01f64..1.99),
        ) {
            let out = relax(&m, &RelaxationRates { s_e: s[0], s_xx: s[1], s_q: s[2], s_eps: s[3] });
            prop_assert_eq!(out.rho.to_bits(), m.rho.to_bits());
            prop_assert_eq!(out.jx.to_bits(), m.jx.to_bits());
            prop_assert_eq!(out.jy.to_bits(), m.jy.to_bits());
        }

        #[test]
        fn moment_round_trip(m in moment_strategy()) {
            let back = to_moments(&from_moments(&m)).to_array();
            for (a, b) in back.iter().zip(m.to_array()) {
                prop_assert!((a - b).abs() <= 1e-13);
            }
        }

        #[test]
        fn quartic_identity(s_xx in 0.5f64..1.99) {
            let s_q = quartic_s_q(s_xx);
            prop_assert!((sigma(s_xx) * sigma(s_q) - 1.0 / 6.0).abs() < 1e-12);
        }
    }
}
