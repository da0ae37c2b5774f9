//! First-derivative finite differences on periodic grids (δx = 1).

use nalgebra::Complex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilKind {
    /// `½(•(i+1) − •(i−1))`
    ThreePoint,
    /// `¾(•(i+1) − •(i−1)) − ⅛(•(i+2) − •(i−2))`
    FivePoint,
    /// Centred difference corrected with the four diagonal neighbours.
    NinePoint,
}

impl StencilKind {
    pub const ALL: [StencilKind; 3] = [Self::ThreePoint, Self::FivePoint, Self::NinePoint];

    /// Reach along the derivative direction.
    pub fn half_width(self) -> usize {
        match self {
            Self::ThreePoint | Self::NinePoint => 1,
            Self::FivePoint => 2,
        }
    }

    /// Reach across the derivative direction.
    pub fn transverse_width(self) -> usize {
        match self {
            Self::NinePoint => 1,
            _ => 0,
        }
    }

    pub fn points(self) -> usize {
        match self {
            Self::ThreePoint => 3,
            Self::FivePoint => 5,
            Self::NinePoint => 9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::ThreePoint => "3-point",
            Self::FivePoint => "5-point",
            Self::NinePoint => "9-point",
        }
    }
}

impl std::str::FromStr for StencilKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3" | "three" | "3-point" | "three-point" => Ok(Self::ThreePoint),
            "5" | "five" | "5-point" | "five-point" => Ok(Self::FivePoint),
            "9" | "nine" | "9-point" | "nine-point" => Ok(Self::NinePoint),
            other => Err(Error::InvalidParameter(format!("unknown stencil {other:?}"))),
        }
    }
}

/// Real values on an `nx × ny` periodic grid, stored row by row
/// (`values[j * nx + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, values: vec![0.0; nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(i, j));
            }
        }
        Self { nx, ny, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
}

fn check_extent(nx: usize, ny: usize, along: usize, across: usize, kind: StencilKind) -> Result<()> {
    let need_along = 2 * kind.half_width() + 1;
    let need_across = 2 * kind.transverse_width() + 1;
    if along < need_along || across < need_across {
        return Err(Error::GridTooSmall {
            nx,
            ny,
            reason: format!("{} stencil needs {need_along} nodes along the derivative", kind.label()),
        });
    }
    Ok(())
}

pub fn ddx(g: &ScalarGrid, kind: StencilKind) -> Result<ScalarGrid> {
    check_extent(g.nx, g.ny, g.nx, g.ny, kind)?;
    let mut out = ScalarGrid::zeros(g.nx, g.ny);
    derivative_into(&g.values, g.nx, g.ny, kind, Axis::X, &mut out.values);
    Ok(out)
}

pub fn ddy(g: &ScalarGrid, kind: StencilKind) -> Result<ScalarGrid> {
    check_extent(g.nx, g.ny, g.ny, g.nx, kind)?;
    let mut out = ScalarGrid::zeros(g.nx, g.ny);
    derivative_into(&g.values, g.nx, g.ny, kind, Axis::Y, &mut out.values);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

/// Derivative of a row-major periodic field along `axis`, written into `out`.
/// Extents are not checked here.
pub(crate) fn derivative_into(
    values: &[f64],
    nx: usize,
    ny: usize,
    kind: StencilKind,
    axis: Axis,
    out: &mut [f64],
) {
    derivative_masked(values, nx, ny, kind, axis, None, out);
}

/// As [`derivative_into`], with the three-point difference wherever
/// `narrow` is set. `narrow` holds one flag per node and axis, x first.
pub(crate) fn derivative_masked(
    values: &[f64],
    nx: usize,
    ny: usize,
    kind: StencilKind,
    axis: Axis,
    narrow: Option<&[bool]>,
    out: &mut [f64],
) {
    debug_assert_eq!(values.len(), nx * ny);
    debug_assert_eq!(out.len(), nx * ny);
    // Offsets are expressed as (along, across) and rotated for the y axis.
    let at = |i: usize, j: usize, da: isize, dc: isize| -> f64 {
        let (dx, dy) = match axis {
            Axis::X => (da, dc),
            Axis::Y => (dc, da),
        };
        let ii = (i as isize + dx).rem_euclid(nx as isize) as usize;
        let jj = (j as isize + dy).rem_euclid(ny as isize) as usize;
        values[jj * nx + ii]
    };
    for j in 0..ny {
        for i in 0..nx {
            let flag = 2 * (j * nx + i) + matches!(axis, Axis::Y) as usize;
            let kind = if narrow.is_some_and(|m| m[flag]) { StencilKind::ThreePoint } else { kind };
            out[j * nx + i] = match kind {
                StencilKind::ThreePoint => 0.5 * (at(i, j, 1, 0) - at(i, j, -1, 0)),
                StencilKind::FivePoint => {
                    0.75 * (at(i, j, 1, 0) - at(i, j, -1, 0))
                        - 0.125 * (at(i, j, 2, 0) - at(i, j, -2, 0))
                }
                StencilKind::NinePoint => {
                    at(i, j, 1, 0) - at(i, j, -1, 0)
                        - 0.25
                            * (at(i, j, 1, 1) - at(i, j, -1, 1) - at(i, j, -1, -1)
                                + at(i, j, 1, -1))
                }
            };
        }
    }
}

/// Fourier multiplier of the x-derivative stencil for the mode
/// `exp(i(kx·i + ky·j))`. The y-derivative symbol is obtained by swapping
/// the arguments.
pub fn stencil_symbol(kind: StencilKind, kx: f64, ky: f64) -> Complex<f64> {
    let im = match kind {
        StencilKind::ThreePoint => kx.sin(),
        StencilKind::FivePoint => 1.5 * kx.sin() - 0.25 * (2.0 * kx).sin(),
        StencilKind::NinePoint => kx.sin() * (2.0 - ky.cos()),
    };
    Complex::new(0.0, im)
}
