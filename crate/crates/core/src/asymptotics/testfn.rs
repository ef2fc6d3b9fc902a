//! Glued test functions: a bubble inside `B_{L eps}`, the Green function
//! outside `B_{2 L eps}`, and a cutoff interpolation of the regular part in
//! between.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::bubble::{profile, BubbleSpec};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{admissible, Weights, EIGHT_PI};
use crate::green::{GreenFunction, PoleRegular};
use crate::grid::Point;

/// `|grad eta| <= ETA_GRADIENT_CONSTANT / (L eps)` for the quintic ramp.
pub const ETA_GRADIENT_CONSTANT: f64 = 15.0 / (8.0 * LN_2);
/// Samples per ring in the gluing check.
pub const GLUING_SAMPLES: usize = 64;
/// Floor of the gluing tolerance, absorbing round-off of the zone formulas.
pub const GLUING_FLOOR: f64 = 1e-10;

/// Cutoff: 1 for `r <= R`, 0 for `r >= 2R`, quintic in `log2(r / R)` between.
pub fn eta(r: f64, inner: f64) -> f64 {
    if r <= inner {
        return 1.0;
    }
    let t = ((r / inner).ln() / LN_2).min(1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

#[derive(Debug, Clone)]
pub struct TestFunctionPartial {
    pub spec: BubbleSpec,
    pub coeffs: PoleRegular,
    /// Constant `4 log(L eps) - 2 log(1 + pi L^2) - A` added outside the bubble.
    pub shift: f64,
    pub gluing_jump: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct TestFunctionFull {
    pub spec1: BubbleSpec,
    pub spec2: BubbleSpec,
    pub coeffs1: PoleRegular,
    pub coeffs2: PoleRegular,
    pub shift: f64,
    /// Constant added to the inverted bubble at the negative pole.
    pub inner_shift2: f64,
    pub gluing_jump: f64,
    pub field: Field,
}

/// Summary written alongside a test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingSummary {
    pub eps: f64,
    pub l: f64,
    pub gluing_jump: f64,
    pub mean: f64,
}

struct Zone {
    center: Point,
    eps: f64,
    radius: f64,
    /// `G ~ a log r + A + lambda x + nu y` near the center.
    a: f64,
    reg: PoleRegular,
    /// `+1` for the bubble `w`, `-1` for `-w`.
    sign: f64,
    inner_shift: f64,
}

impl Zone {
    fn linear(&self, dx: f64, dy: f64) -> f64 {
        self.reg.lambda * dx + self.reg.nu * dy
    }

    fn inner(&self, x: Point) -> f64 {
        let (dx, dy) = x.displacement_from(self.center);
        self.sign * profile(dx.hypot(dy) / self.eps) + self.linear(dx, dy) + self.inner_shift
    }

    /// `H = G - a log r - A - lambda x - nu y`.
    fn h(&self, x: Point, g: f64) -> f64 {
        let (dx, dy) = x.displacement_from(self.center);
        g - self.a * dx.hypot(dy).ln() - self.reg.a - self.linear(dx, dy)
    }
}

fn zone_of(zones: &[Zone], x: Point) -> Option<(&Zone, f64)> {
    zones.iter().find_map(|z| {
        let r = x.distance(z.center);
        (r < 2.0 * z.radius).then_some((z, r))
    })
}

fn assemble(green: &GreenFunction, zones: &[Zone], shift: f64) -> Field {
    let grid = green.grid();
    let g = green.node_values();
    Field::from_fn(grid, |x| {
        let k = grid.nearest_node(x);
        match zone_of(zones, x) {
            Some((z, r)) if r < z.radius => z.inner(x),
            Some((z, r)) => g[k] - eta(r, z.radius) * z.h(x, g[k]) + shift,
            None => g[k] + shift,
        }
    })
}

/// Largest discrepancy between neighbouring zone formulas on the two
/// gluing circles of every zone.
fn gluing_jump(green: &GreenFunction, zones: &[Zone], shift: f64) -> f64 {
    let mut pts = Vec::new();
    for z in zones {
        for (k, scale) in [(0usize, 1.0), (1, 2.0)] {
            for s in 0..GLUING_SAMPLES {
                let th = 2.0 * PI * s as f64 / GLUING_SAMPLES as f64;
                let r = scale * z.radius;
                pts.push((k, z, z.center.shifted(r * th.cos(), r * th.sin())));
            }
        }
    }
    let xs: Vec<Point> = pts.iter().map(|p| p.2).collect();
    let gs = green.values_at(&xs);
    pts.iter()
        .zip(gs)
        .map(|((k, z, x), g)| {
            if *k == 0 {
                // eta = 1: G - H + shift against the bubble formula.
                (g - z.h(*x, g) + shift - z.inner(*x)).abs()
            } else {
                // eta = 0 on the outer circle.
                (eta(2.0 * z.radius, z.radius) * z.h(*x, g)).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn check_center(green: &GreenFunction, i: usize, spec: &BubbleSpec) -> Result<()> {
    let d = green.poles()[i].at.distance(spec.center);
    if d > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "bubble center is {d:e} away from pole {i}"
        )));
    }
    Ok(())
}

fn check_admissible(field: &Field, w: &Weights) -> Result<()> {
    let a = admissible(field, w);
    if !a.ok {
        return Err(Error::Inadmissible(format!(
            "test function integrals {:e}, {:e}",
            a.i1, a.i2
        )));
    }
    Ok(())
}

fn check_jump(jump: f64, regs: &[PoleRegular]) -> Result<()> {
    let tol = regs
        .iter()
        .map(|r| 10.0 * r.fit_residual)
        .fold(GLUING_FLOOR, f64::max);
    if jump > tol {
        return Err(Error::GluingMismatch { jump, tol });
    }
    Ok(())
}

/// Single-bubble test function at the pole of a nonlinear Green function.
pub fn build_partial(spec: &BubbleSpec, green: &GreenFunction, w: &Weights) -> Result<TestFunctionPartial> {
    let grid = green.grid();
    if w.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.n(),
            got: w.grid().n(),
        });
    }
    spec.check_resolved(grid)?;
    check_center(green, 0, spec)?;
    let pole = green.poles()[0];
    if (pole.strength - EIGHT_PI).abs() > 1e-12 * EIGHT_PI {
        return Err(Error::InvalidInput("partial test function needs a pole of strength 8 pi".into()));
    }
    let reg = green.regulars()[0];
    let l = spec.l;
    let shift = 4.0 * spec.radius().ln() - 2.0 * (PI * l * l).ln_1p() - reg.a;
    let zones = [Zone {
        center: spec.center,
        eps: spec.eps,
        radius: spec.radius(),
        a: -4.0,
        reg,
        sign: 1.0,
        inner_shift: 0.0,
    }];
    let jump = gluing_jump(green, &zones, shift);
    check_jump(jump, &[reg])?;
    let field = assemble(green, &zones, shift);
    check_admissible(&field, w)?;
    Ok(TestFunctionPartial {
        spec: *spec,
        coeffs: reg,
        shift,
        gluing_jump: jump,
        field,
    })
}

/// Positive bubble at the `+8 pi` pole, negative bubble at the `-8 pi` pole.
pub fn build_full(
    spec1: &BubbleSpec,
    spec2: &BubbleSpec,
    green: &GreenFunction,
    w: &Weights,
) -> Result<TestFunctionFull> {
    let grid = green.grid();
    if w.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.n(),
            got: w.grid().n(),
        });
    }
    let poles = green.poles();
    if poles.len() != 2
        || (poles[0].strength - EIGHT_PI).abs() > 1e-12 * EIGHT_PI
        || (poles[1].strength + EIGHT_PI).abs() > 1e-12 * EIGHT_PI
    {
        return Err(Error::InvalidInput("full test function needs poles (+8 pi, -8 pi)".into()));
    }
    spec1.check_resolved(grid)?;
    spec2.check_resolved(grid)?;
    check_center(green, 0, spec1)?;
    check_center(green, 1, spec2)?;
    let sep = spec1.center.distance(spec2.center);
    if 2.0 * (spec1.radius() + spec2.radius()) >= sep {
        return Err(Error::InvalidInput(format!(
            "gluing zones overlap: radii {} and {} at separation {sep}",
            2.0 * spec1.radius(),
            2.0 * spec2.radius()
        )));
    }
    let (r1, r2) = (green.regulars()[0], green.regulars()[1]);
    let shift = 4.0 * spec1.radius().ln() - 2.0 * (PI * spec1.l * spec1.l).ln_1p() - r1.a;
    let inner_shift2 = 4.0 * spec2.radius().ln() + r2.a + shift - 2.0 * (PI * spec2.l * spec2.l).ln_1p();
    let zones = [
        Zone {
            center: spec1.center,
            eps: spec1.eps,
            radius: spec1.radius(),
            a: -4.0,
            reg: r1,
            sign: 1.0,
            inner_shift: 0.0,
        },
        Zone {
            center: spec2.center,
            eps: spec2.eps,
            radius: spec2.radius(),
            a: 4.0,
            reg: r2,
            sign: -1.0,
            inner_shift: inner_shift2,
        },
    ];
    let jump = gluing_jump(green, &zones, shift);
    check_jump(jump, &[r1, r2])?;
    let field = assemble(green, &zones, shift);
    check_admissible(&field, w)?;
    Ok(TestFunctionFull {
        spec1: *spec1,
        spec2: *spec2,
        coeffs1: r1,
        coeffs2: r2,
        shift,
        inner_shift2,
        gluing_jump: jump,
        field,
    })
}

impl TestFunctionPartial {
    pub fn summary(&self) -> GluingSummary {
        GluingSummary {
            eps: self.spec.eps,
            l: self.spec.l,
            gluing_jump: self.gluing_jump,
            mean: self.field.mean(),
        }
    }
}

impl TestFunctionFull {
    pub fn summary(&self) -> GluingSummary {
        GluingSummary {
            eps: self.spec1.eps,
            l: self.spec1.l,
            gluing_jump: self.gluing_jump,
            mean: self.field.mean(),
        }
    }
}
