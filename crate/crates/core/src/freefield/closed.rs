//! Shell integrals of closed Gaussians without a momentum lattice.
//!
//! Every term pair of `conj(f~) g~` is itself a momentum-space Gaussian, and
//! each is integrated separately over the positive mass shell: in 1+1 along
//! the spatial momentum, in 3+1 in spherical coordinates whose polar axis
//! points at the term's centre.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{integrate_adaptive, integrate_breaks, periodic_trapezoid, significant_window, AdaptiveTol, ComplexSum};
use crate::spacetime::SpacetimeDim;
use crate::testfn::{Gauss, GaussianPacket, GaussianSum};

use std::f64::consts::PI;

/// Magnitudes below `exp(-WINDOW_DROP)` of the peak are dropped.
const WINDOW_DROP: f64 = 70.0;

fn tol(rel: f64, abs: f64) -> AdaptiveTol {
    AdaptiveTol { rel, abs, max_intervals: 4000 }
}

/// `int d^d k / ((2 pi)^d 2 w) conj(f~(k)) g~(k)` on the positive shell.
pub fn closed_pairing(f: &GaussianSum, g: &GaussianSum, m: f64, rel_tol: f64) -> Result<Complex64> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch { expected: f.dim.n(), got: g.dim.n() });
    }
    let fk = f.fourier()?;
    let gk = g.fourier()?;
    let mut acc = ComplexSum::default();
    for a in &fk.terms {
        let ac = a.conj();
        for b in &gk.terms {
            acc.add(shell_integral(f.dim, m, &ac.mul(b)?, rel_tol));
        }
    }
    Ok(acc.value() * (2.0 * PI).powi(-(f.dim.d_space as i32)))
}

/// `int d^d k / (2 w) P(w, k)` for one momentum-space Gaussian.
pub fn shell_integral(dim: SpacetimeDim, m: f64, p: &Gauss, rel_tol: f64) -> Complex64 {
    match dim.d_space {
        1 => shell_1p1(m, p, rel_tol),
        _ => shell_3p1(m, p, rel_tol),
    }
}

fn widths(p: &Gauss) -> (f64, f64) {
    let (lo, hi) = (p.min_eigenvalue(), p.max_eigenvalue());
    (1.0 / hi.sqrt(), 1.0 / lo.sqrt())
}

fn shell_1p1(m: f64, p: &Gauss, rel_tol: f64) -> Complex64 {
    let on_shell = |kx: f64| [(m * m + kx * kx).sqrt(), kx];
    let log_re = |kx: f64| p.log_eval(&on_shell(kx)).re;
    let (s_min, s_max) = widths(p);
    let reach = 40.0 * s_max + p.center[0].abs() + m;
    let (a, b) = (p.center[1] - reach, p.center[1] + reach);
    let n = ((b - a) / (0.25 * s_min)).ceil().clamp(400.0, 400_000.0) as usize;
    let (lo, hi) = significant_window(log_re, a, b, n, WINDOW_DROP);
    let peak = max_on(log_re, lo, hi, 64);
    let abs = (peak.exp() * (hi - lo) * 1e-18).max(1e-300);
    integrate_adaptive(
        |kx| {
            let k = on_shell(kx);
            p.eval(&k) / (2.0 * k[0])
        },
        lo,
        hi,
        16,
        tol(rel_tol, abs),
    )
}

/// Orthonormal frame `(e1, e2, axis)`.
fn frame(axis: [f64; 3]) -> [[f64; 3]; 3] {
    let trial = if axis[0].abs() < 0.8 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = trial[0] * axis[0] + trial[1] * axis[1] + trial[2] * axis[2];
    let mut e1 = [trial[0] - d * axis[0], trial[1] - d * axis[1], trial[2] - d * axis[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    [e1, e2, axis]
}

fn shell_3p1(m: f64, p: &Gauss, rel_tol: f64) -> Complex64 {
    let cs = [p.center[1], p.center[2], p.center[3]];
    let cn = (cs[0] * cs[0] + cs[1] * cs[1] + cs[2] * cs[2]).sqrt();
    let (s_min, s_max) = widths(p);
    let axis = if cn > 1e-3 * s_min { [cs[0] / cn, cs[1] / cn, cs[2] / cn] } else { [0.0, 0.0, 1.0] };
    let [e1, e2, e3] = frame(axis);
    let point = |rho: f64, ct: f64, st: f64, phi: f64| -> [f64; 4] {
        let (sp, cp) = phi.sin_cos();
        let mut k = [(m * m + rho * rho).sqrt(), 0.0, 0.0, 0.0];
        for i in 0..3 {
            k[i + 1] = rho * (st * cp * e1[i] + st * sp * e2[i] + ct * e3[i]);
        }
        k
    };

    // radial window from the magnitude along a handful of directions
    let dirs = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0, 0.5 * PI), (-1.0, 0.0, 0.0), (0.9, 0.435_889_894_354_067_4, 0.0)];
    let log_re = |rho: f64| {
        dirs.iter()
            .map(|&(ct, st, phi)| p.log_eval(&point(rho, ct, st, phi)).re)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let reach = cn + 40.0 * s_max + p.center[0].abs() + m;
    let n = (reach / (0.25 * s_min)).ceil().clamp(400.0, 200_000.0) as usize;
    let (lo, hi) = significant_window(log_re, 0.0, reach, n, WINDOW_DROP);
    let peak = max_on(log_re, lo, hi, 64);
    let abs = (peak.exp() * hi.powi(3) * 1e-18).max(1e-300);

    let radial = |rho: f64| -> Complex64 {
        if rho == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let w = (m * m + rho * rho).sqrt();
        let ang_abs = abs / (rho * rho).max(1e-300);
        let width = (3.0 * s_min / rho).min(PI / 8.0);
        let mut breaks = vec![0.0];
        let mut t = width;
        while t < PI {
            breaks.push(t);
            t *= 2.0;
        }
        breaks.push(PI);
        let angular = integrate_breaks(
            |theta: f64| {
                let (st, ct) = theta.sin_cos();
                let ring = periodic_trapezoid(|phi| p.eval(&point(rho, ct, st, phi)), 2.0 * PI, 8, tol(rel_tol, ang_abs));
                ring * st
            },
            &breaks,
            tol(rel_tol, ang_abs),
        );
        angular * (rho * rho / (2.0 * w))
    };
    integrate_adaptive(radial, lo, hi, 16, tol(rel_tol, abs))
}

fn max_on<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    (0..=n).map(|i| f(a + (b - a) * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max)
}

/// `(F, F)` for a single packet from the one-dimensional rapidity integral.
///
/// On the shell `Q(k - p) = 2 m^2 s (s + 1)` with `s = cosh(r) - 1` for the
/// relative rapidity `r`, so the norm depends only on `mu`, `m`, `|amp|`.
/// For `mu << m` it scales as `mu^-3` in 1+1 and `mu^-5` in 3+1.
pub fn packet_norm_closed(p: &GaussianPacket) -> f64 {
    let (m, mu) = (p.m, p.mu);
    let n = p.dim().n() as i32;
    let c = 750.0 * mu * mu / (m * m);
    let s_max = 0.5 * (-1.0 + (1.0 + 4.0 * c).sqrt());
    let r_max = (1.0 + s_max).acosh();
    let expo = |r: f64| {
        let s = r.cosh() - 1.0;
        // cosh(r) - 1 = 2 sinh^2(r/2) keeps precision near r = 0
        let s = if r.abs() < 1.0 { 2.0 * (0.5 * r).sinh().powi(2) } else { s };
        (-(m * m) * s * (s + 1.0) / (mu * mu)).exp()
    };
    let scale = p.amp.norm_sqr() * (PI / (mu * mu)).powi(n);
    let k = match p.dim().d_space {
        1 => {
            let half = integrate_adaptive(|r| Complex64::new(expo(r), 0.0), 0.0, r_max, 16, AdaptiveTol::default()).re;
            2.0 * half / (4.0 * PI)
        }
        _ => {
            let v = integrate_adaptive(
                |r| Complex64::new(r.sinh().powi(2) * expo(r), 0.0),
                0.0,
                r_max,
                16,
                AdaptiveTol::default(),
            )
            .re;
            0.5 * m * m * 4.0 * PI / (2.0 * PI).powi(3) * v
        }
    };
    scale * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::Boost;

    fn packet(k: &[f64], mu: f64, c: &[f64]) -> GaussianPacket {
        GaussianPacket::new(k, mu, 1.0, c, Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn self_pairing_matches_rapidity_formula_1p1() {
        for (k, mu) in [(0.0, 0.5), (0.8, 0.3), (-1.7, 0.9), (3.0, 0.1)] {
            let p = packet(&[k], mu, &[0.2, -0.4]);
            let g = p.to_gaussian();
            let v = closed_pairing(&g, &g, 1.0, 1e-12).unwrap();
            let want = packet_norm_closed(&p);
            assert!((v.re / want - 1.0).abs() < 1e-10, "k={k} mu={mu}: {v} vs {want}");
            assert!(v.im.abs() < 1e-12 * want);
        }
    }

    #[test]
    fn self_pairing_matches_rapidity_formula_3p1() {
        let p = packet(&[0.3, -0.2, 0.5], 0.6, &[0.0, 0.1, 0.0, -0.2]);
        let g = p.to_gaussian();
        let v = closed_pairing(&g, &g, 1.0, 1e-11).unwrap();
        let want = packet_norm_closed(&p);
        assert!((v.re / want - 1.0).abs() < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn boost_invariance_1p1() {
        let p = packet(&[0.4], 0.5, &[0.0, 0.3]);
        let q = packet(&[-0.2], 0.7, &[0.5, -0.6]);
        let base = closed_pairing(&p.to_gaussian(), &q.to_gaussian(), 1.0, 1e-12).unwrap();
        for r in [-0.9, 0.35, 1.3] {
            let b = Boost { axis: 1, rapidity: r };
            let (pb, qb) = (p.boosted(&b).unwrap(), q.boosted(&b).unwrap());
            let v = closed_pairing(&pb.to_gaussian(), &qb.to_gaussian(), 1.0, 1e-12).unwrap();
            assert!((v - base).norm() <= 1e-9 * base.norm(), "{v} vs {base}");
        }
    }

    #[test]
    fn norm_scaling_small_mu() {
        // ratio approaches 2^3 in 1+1 and 2^5 in 3+1 as mu -> 0
        for (dim, power) in [(SpacetimeDim::ONE_PLUS_ONE, 3), (SpacetimeDim::THREE_PLUS_ONE, 5)] {
            let at = |mu: f64| packet_norm_closed(&GaussianPacket::at_rest(dim, mu, 1.0).unwrap());
            let r = at(0.005) / at(0.01);
            assert!((r / 2f64.powi(power) - 1.0).abs() < 1e-2, "{r}");
        }
    }
}
