//! Position-space Green functions of the 1+1 Klein-Gordon field.
//!
//! `theta` is taken as zero on the light cone itself and `sgn(0) = 0`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::numeric::{bessel_j0, composite_gl, CompensatedSum};
use crate::spacetime::SupportBox;

/// Pauli-Jordan function, `[phi(x), phi(0)] = i Delta(x)`:
/// `Delta(t, x) = -1/2 sgn(t) theta(t^2 - x^2) J0(m sqrt(t^2 - x^2))`.
pub fn pauli_jordan_1p1(m: f64, t: f64, x: f64) -> f64 {
    let s = t * t - x * x;
    if s <= 0.0 || t == 0.0 {
        return 0.0;
    }
    -0.5 * t.signum() * bessel_j0(m * s.sqrt())
}

/// `G_ret(t, x) = 1/2 theta(t) theta(t^2 - x^2) J0(m sqrt(t^2 - x^2))`.
pub fn retarded_green_1p1(m: f64, t: f64, x: f64) -> f64 {
    let s = t * t - x * x;
    if t <= 0.0 || s <= 0.0 {
        return 0.0;
    }
    0.5 * bessel_j0(m * s.sqrt())
}

/// `G_adv(t, x) = G_ret(-t, x)`.
pub fn advanced_green_1p1(m: f64, t: f64, x: f64) -> f64 {
    retarded_green_1p1(m, -t, x)
}

/// Quadrature resolution for [`smeared_pauli_jordan_1p1`].
#[derive(Debug, Clone, Copy)]
pub struct SmearingRule {
    pub outer_panels: usize,
    pub outer_order: usize,
    pub inner_panels: usize,
    pub inner_order: usize,
}

impl Default for SmearingRule {
    fn default() -> Self {
        SmearingRule { outer_panels: 6, outer_order: 12, inner_panels: 3, inner_order: 16 }
    }
}

/// `[phi_f, phi_g] = i int int f(x) g(z) Delta(x - z)` for real functions
/// supported in the given boxes, evaluated in position space.
///
/// The outer integral runs over `f`'s box; for every outer node the inner
/// integral over `g` is done separately on the backward and forward light
/// cones in light-cone coordinates `a = dt - dx`, `b = dt + dx`, where
/// `Delta` is smooth, so no quadrature node straddles the cone.
pub fn smeared_pauli_jordan_1p1<F, G>(m: f64, f: F, f_box: &SupportBox, g: G, g_box: &SupportBox, rule: SmearingRule) -> Complex64
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let qt = composite_gl(f_box.lo[0], f_box.hi[0], rule.outer_panels, rule.outer_order);
    let qx = composite_gl(f_box.lo[1], f_box.hi[1], rule.outer_panels, rule.outer_order);
    let rows: Vec<f64> = qt
        .par_iter()
        .map(|&(t, wt)| {
            let mut row = CompensatedSum::default();
            for &(x, wx) in &qx {
                let fv = f(&[t, x]);
                if fv == 0.0 {
                    continue;
                }
                let past = cone_integral(m, &g, g_box, t, x, -1.0, rule);
                let future = cone_integral(m, &g, g_box, t, x, 1.0, rule);
                row.add(wt * wx * fv * (-0.5 * past + 0.5 * future));
            }
            row.value()
        })
        .collect();
    let mut total = CompensatedSum::default();
    rows.into_iter().for_each(|r| total.add(r));
    Complex64::new(0.0, total.value())
}

/// `int g(z) J0(m sqrt((x-z)^2)) dz` over the backward (`s = -1`) or
/// forward (`s = +1`) light cone of `(t, x)`.
fn cone_integral<G: Fn(&[f64]) -> f64>(m: f64, g: &G, b: &SupportBox, t: f64, x: f64, s: f64, rule: SmearingRule) -> f64 {
    // z = (t + s (a + b)/2, x + s (b - a)/2), a, b >= 0, dz = da db / 2
    let (p0, p1) = if s < 0.0 { (2.0 * (t - b.hi[0]), 2.0 * (t - b.lo[0])) } else { (2.0 * (b.lo[0] - t), 2.0 * (b.hi[0] - t)) };
    let (m0, m1) = if s < 0.0 { (2.0 * (x - b.hi[1]), 2.0 * (x - b.lo[1])) } else { (2.0 * (b.lo[1] - x), 2.0 * (b.hi[1] - x)) };
    let a_lo = 0.0f64.max(0.5 * (p0 - m1));
    let a_hi = 0.5 * (p1 - m0);
    if a_hi <= a_lo {
        return 0.0;
    }
    let b_range = |a: f64| (0.0f64.max(p0 - a).max(a + m0), (p1 - a).min(a + m1));
    let mut breaks: Vec<f64> = [a_lo, a_hi, p0, -m0, 0.5 * (p0 - m0), 0.5 * (p1 - m1)]
        .into_iter()
        .filter(|v| *v >= a_lo && *v <= a_hi)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|u, v| (*u - *v).abs() < 1e-14);

    let mut acc = CompensatedSum::default();
    for w in breaks.windows(2) {
        for (a, wa) in composite_gl(w[0], w[1], rule.inner_panels, rule.inner_order) {
            let (blo, bhi) = b_range(a);
            if bhi <= blo {
                continue;
            }
            for (bb, wb) in composite_gl(blo, bhi, rule.inner_panels, rule.inner_order) {
                let z = [t + s * 0.5 * (a + bb), x + s * 0.5 * (bb - a)];
                let gv = g(&z);
                if gv != 0.0 {
                    acc.add(wa * wb * 0.5 * gv * bessel_j0(m * (a * bb).max(0.0).sqrt()));
                }
            }
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First zero of J0 by bisection on the libm values.
    fn j0_first_zero() -> f64 {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if bessel_j0(a) * bessel_j0(c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn spacelike_and_origin_vanish() {
        assert_eq!(pauli_jordan_1p1(1.0, 0.5, 0.7), 0.0);
        assert_eq!(pauli_jordan_1p1(1.0, -0.5, 0.7), 0.0);
        assert_eq!(pauli_jordan_1p1(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn vanishes_at_bessel_zero() {
        let z = j0_first_zero();
        // m sqrt(t^2 - x^2) = z with m = 1.3, x = 0.4
        let m = 1.3;
        let t = ((z / m).powi(2) + 0.16).sqrt();
        assert!(pauli_jordan_1p1(m, t, 0.4).abs() < 1e-10);
    }

    #[test]
    fn retarded_minus_advanced_is_pauli_jordan() {
        for &(t, x) in &[(0.3, 0.1), (-1.2, 0.5), (2.0, -1.9), (0.4, 0.9), (-3.0, 0.0)] {
            let m = 0.8;
            let lhs = -(retarded_green_1p1(m, t, x) - advanced_green_1p1(m, t, x));
            assert!((lhs - pauli_jordan_1p1(m, t, x)).abs() < 1e-15);
        }
        assert_eq!(retarded_green_1p1(1.0, -0.5, 0.1), 0.0);
    }

    #[test]
    fn retarded_solves_klein_gordon_inside_cone() {
        let (m, h) = (1.1, 1e-3);
        let mut worst = 0.0f64;
        for &(t, x) in &[(1.0, 0.2), (2.5, -1.0), (0.7, 0.0), (3.0, 2.0)] {
            let g = |t: f64, x: f64| retarded_green_1p1(m, t, x);
            let dtt = (g(t + h, x) - 2.0 * g(t, x) + g(t - h, x)) / (h * h);
            let dxx = (g(t, x + h) - 2.0 * g(t, x) + g(t, x - h)) / (h * h);
            worst = worst.max((dtt - dxx + m * m * g(t, x)).abs());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn smeared_commutator_of_spacelike_boxes_is_zero() {
        let fb = SupportBox { lo: vec![-0.5, -0.5], hi: vec![0.5, 0.5] };
        let gb = SupportBox { lo: vec![-0.5, 2.0], hi: vec![0.5, 3.0] };
        let one = |_: &[f64]| 1.0;
        let v = smeared_pauli_jordan_1p1(1.0, one, &fb, one, &gb, SmearingRule::default());
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn smeared_commutator_massless_box_volume() {
        // m = 0: Delta = -1/2 on the backward cone; g a unit box entirely in
        // the past cone of every point of a tiny f box gives -i/2 |g| |f|.
        let fb = SupportBox { lo: vec![5.0, -0.01], hi: vec![5.02, 0.01] };
        let gb = SupportBox { lo: vec![0.0, -0.5], hi: vec![1.0, 0.5] };
        let one = |_: &[f64]| 1.0;
        let v = smeared_pauli_jordan_1p1(0.0, one, &fb, one, &gb, SmearingRule::default());
        let want = -0.5 * 1.0 * (0.02 * 0.02);
        assert!((v.im - want).abs() < 1e-13 && v.re == 0.0, "{v}");
    }
}
