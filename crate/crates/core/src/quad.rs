//! Gauss-Legendre rules and panelled radial quadrature.

use std::sync::OnceLock;

/// Nodes and weights of the `m`-point rule on `[-1, 1]` (Newton on `P_m`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// `int_a^b f` with `panels` equal 16-point panels.
pub fn integrate_panels(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * 0.5 * h * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    s
}

/// `int_0^b f` for integrands with an integrable endpoint singularity at 0,
/// using dyadically shrinking panels `[b/2^(k+1), b/2^k]`.
pub fn integrate_from_zero(b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    let mut hi = b;
    for _ in 0..60 {
        let lo = 0.5 * hi;
        s += integrate_panels(lo, hi, 1, &f);
        hi = lo;
    }
    s
}
