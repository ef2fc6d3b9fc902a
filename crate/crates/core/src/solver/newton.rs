//! Newton refinement: preconditioned conjugate gradients on the Hessian of J.

use crate::field::Field;
use crate::functional::{Evaluation, Params};
use crate::spectral::{inverse_laplacian_projected, laplacian};

/// Hessian-vector product at the state described by `ev`:
/// `-Delta v - a (d1 v - d1 <d1, v>) - b (d2 v - d2 <d2, v>)`.
pub(crate) fn hessian_apply(v: &Field, ev: &Evaluation, p: &Params) -> Field {
    let a = p.active_rho1();
    let b = p.rho2;
    let lap = laplacian(v);
    let m1 = ev.density1.inner(v);
    let m2 = ev.density2.inner(v);
    let vals = lap
        .values()
        .iter()
        .zip(v.values())
        .zip(ev.density1.values().iter().zip(ev.density2.values()))
        .map(|((l, vv), (d1, d2))| -l - a * d1 * (vv - m1) - b * d2 * (vv - m2))
        .collect();
    Field::new(v.grid(), vals)
        .expect("same grid")
        .project_mean_zero()
}

/// Approximately solves `H s = -g` on mean-zero fields. Returns `None` if
/// negative curvature is met before any progress is made.
pub(crate) fn newton_direction(
    g: &Field,
    ev: &Evaluation,
    p: &Params,
    max_iters: usize,
    rtol: f64,
) -> Option<Field> {
    let precondition = |r: &Field| inverse_laplacian_projected(r).scale(-1.0);
    let mut s = Field::zeros(g.grid());
    let mut r = g.scale(-1.0).project_mean_zero();
    let r0 = r.l2_norm();
    if r0 == 0.0 {
        return Some(s);
    }
    let mut z = precondition(&r);
    let mut d = z.clone();
    let mut rz = r.inner(&z);
    for it in 0..max_iters {
        let hd = hessian_apply(&d, ev, p);
        let curv = d.inner(&hd);
        if curv <= 0.0 {
            return if it == 0 { None } else { Some(s) };
        }
        let alpha = rz / curv;
        s = s.add_scaled(alpha, &d);
        r = r.add_scaled(-alpha, &hd);
        if r.l2_norm() <= rtol * r0 {
            break;
        }
        z = precondition(&r);
        let rz_new = r.inner(&z);
        d = z.add_scaled(rz_new / rz, &d);
        rz = rz_new;
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{evaluate, evaluate_j, gradient_from, Weights};
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = Grid::new(32).unwrap();
        let h1 = Field::from_fn(g, |q| 1.0 + 0.4 * (2.0 * PI * q.x).cos());
        let w = Weights::new(h1, Field::constant(g, 1.0)).unwrap();
        let p = Params::new(10.0, 6.0, 0.0).unwrap();
        let u = Field::from_fn(g, |q| 0.3 * (2.0 * PI * (q.x + 2.0 * q.y)).sin()).project_mean_zero();
        let v = Field::from_fn(g, |q| (2.0 * PI * q.y).cos() + 0.2 * (6.0 * PI * q.x).sin());
        let ev = evaluate(&u, &w, &p).unwrap();
        let hv = hessian_apply(&v, &ev, &p);
        let t = 1e-5;
        let up = u.add_scaled(t, &v);
        let um = u.add_scaled(-t, &v);
        let gp = gradient_from(&up, &evaluate(&up, &w, &p).unwrap(), &p);
        let gm = gradient_from(&um, &evaluate(&um, &w, &p).unwrap(), &p);
        let fd = gp.add_scaled(-1.0, &gm).scale(0.5 / t);
        assert!(fd.add_scaled(-1.0, &hv).max_abs() < 1e-6 * hv.max_abs());
        // Symmetry of the second variation.
        let v2 = Field::from_fn(g, |q| (2.0 * PI * (q.x - q.y)).sin());
        let a = hessian_apply(&v2, &ev, &p).inner(&v);
        let b = hv.inner(&v2);
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let _ = evaluate_j(&u, &w, &p).unwrap();
    }

    #[test]
    fn newton_solves_linear_case() {
        // With rho = 0 the Hessian is -Delta and one Newton step is exact.
        let g = Grid::new(32).unwrap();
        let w = Weights::uniform(g);
        let p = Params::new(0.0, 0.0, 0.0).unwrap();
        let u = Field::from_fn(g, |q| (2.0 * PI * q.x).sin() * (4.0 * PI * q.y).cos());
        let ev = evaluate(&u, &w, &p).unwrap();
        let gr = gradient_from(&u, &ev, &p);
        let s = newton_direction(&gr, &ev, &p, 50, 1e-12).unwrap();
        assert!(u.add_scaled(1.0, &s).max_abs() < 1e-10);
    }
}
