//! Summation and quadrature primitives shared by the field modules.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn complex_sum<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
    let mut s = ComplexSum::default();
    for z in it {
        s.add(z);
    }
    s.value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).expect("nonzero");
    let mut pairs = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in &base {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveTol {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveTol {
    fn default() -> Self {
        AdaptiveTol { rel: 1e-12, abs: 1e-300, max_intervals: 4000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Legendre integration of a complex integrand.
///
/// Each panel is estimated with a 12-point rule on the whole panel and on
/// its two halves; the difference is the error estimate. The interval is
/// first split into `initial_panels` pieces so that narrow features are not
/// missed.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, initial_panels: usize, tol: AdaptiveTol) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let n0 = initial_panels.max(1);
    let h = (b - a) / n0 as f64;
    let breaks: Vec<f64> = (0..=n0).map(|i| if i == n0 { b } else { a + i as f64 * h }).collect();
    integrate_breaks(f, &breaks, tol)
}

/// As [`integrate_adaptive`], starting from the panels between consecutive
/// (sorted) breakpoints.
pub fn integrate_breaks<F>(f: F, breaks: &[f64], tol: AdaptiveTol) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let rule = gauss_legendre(12);
    let gl = |lo: f64, hi: f64| -> Complex64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut s = Complex64::new(0.0, 0.0);
        for &(x, w) in &rule {
            s += f(c + h * x) * w;
        }
        s * h
    };
    let eval = |lo: f64, hi: f64| -> Panel {
        let whole = gl(lo, hi);
        let mid = 0.5 * (lo + hi);
        let halves = gl(lo, mid) + gl(mid, hi);
        Panel { a: lo, b: hi, value: halves, err: (halves - whole).norm() }
    };

    let mut heap: BinaryHeap<Panel> =
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| eval(w[0], w[1])).collect();
    if heap.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    loop {
        let (total, err) = heap.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(s, e), p| (s + p.value, e + p.err));
        if err <= tol.abs.max(tol.rel * total.norm()) || heap.len() >= tol.max_intervals {
            // deterministic final reduction: sort panels by position
            let mut panels = heap.into_vec();
            panels.sort_by(|x, y| x.a.total_cmp(&y.a));
            return complex_sum(panels.iter().map(|p| p.value));
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(eval(worst.a, mid));
        heap.push(eval(mid, worst.b));
    }
}

/// Trapezoid rule for a periodic integrand on `[0, period)`, doubling the
/// node count from `n0` until successive estimates agree.
pub fn periodic_trapezoid<F>(f: F, period: f64, n0: usize, tol: AdaptiveTol) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let mut n = n0.max(2);
    let mut sum = complex_sum((0..n).map(|i| f(period * i as f64 / n as f64)));
    let mut est = sum * (period / n as f64);
    while n < 4096 {
        let extra = complex_sum((0..n).map(|i| f(period * (i as f64 + 0.5) / n as f64)));
        sum += extra;
        n *= 2;
        let next = sum * (period / n as f64);
        let diff = (next - est).norm();
        est = next;
        if diff <= tol.abs.max(tol.rel * est.norm()) {
            break;
        }
    }
    est
}

/// Bessel function of the first kind, order zero.
#[inline]
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Locates the window `[lo, hi]` where `log_mag` is within `drop` of its
/// maximum, by scanning `n` points on `[a, b]`. The window is padded by two
/// scan steps on each side and clipped to `[a, b]`.
pub fn significant_window<F: Fn(f64) -> f64>(log_mag: F, a: f64, b: f64, n: usize, drop: f64) -> (f64, f64) {
    let step = (b - a) / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| log_mag(a + i as f64 * step)).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = vals.iter().position(|v| *v >= max - drop).unwrap_or(0);
    let last = vals.iter().rposition(|v| *v >= max - drop).unwrap_or(n - 1);
    let lo = a + (first as f64 - 2.0).max(0.0) * step;
    let hi = a + ((last + 2).min(n - 1)) as f64 * step;
    (lo, hi)
}
