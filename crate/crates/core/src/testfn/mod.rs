//! Test functions: Gaussian packets, closed Gaussian sums, grid bumps, and the
//! contracted envelopes built from them.

mod bump;
mod envelope;
mod gauss;

pub use bump::{smooth_profile, BumpFunction, Grid};
pub use envelope::{contract_envelope, EnvelopeSpec, EnvelopeVariant, TanhEnvelope};
pub use gauss::{Gauss, GaussianPacket, GaussianSum};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::{SpacetimeDim, SupportBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    Packet(GaussianPacket),
    Gaussian(GaussianSum),
    Tanh(TanhEnvelope),
    Bump(BumpFunction),
}

impl From<GaussianPacket> for TestFunction {
    fn from(p: GaussianPacket) -> Self {
        TestFunction::Packet(p)
    }
}

impl From<BumpFunction> for TestFunction {
    fn from(b: BumpFunction) -> Self {
        TestFunction::Bump(b)
    }
}

impl TestFunction {
    pub fn dim(&self) -> SpacetimeDim {
        match self {
            TestFunction::Packet(p) => p.dim(),
            TestFunction::Gaussian(g) => g.dim,
            TestFunction::Tanh(t) => t.factor.dim,
            TestFunction::Bump(b) => b.dim(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        match self {
            TestFunction::Packet(p) => p.to_gaussian().eval(y),
            TestFunction::Gaussian(g) => g.eval(y),
            TestFunction::Tanh(t) => t.eval(y),
            TestFunction::Bump(b) => b.eval(y),
        }
    }

    /// Closed Gaussian form, when the function has one.
    pub fn as_gaussian(&self) -> Option<GaussianSum> {
        match self {
            TestFunction::Packet(p) => Some(p.to_gaussian()),
            TestFunction::Gaussian(g) => Some(g.clone()),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, TestFunction::Packet(_) | TestFunction::Gaussian(_))
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> TestFunction {
        match self {
            TestFunction::Packet(p) => TestFunction::Gaussian(p.to_gaussian().conj()),
            TestFunction::Gaussian(g) => TestFunction::Gaussian(g.conj()),
            TestFunction::Tanh(t) => TestFunction::Tanh(t.clone()),
            TestFunction::Bump(b) => TestFunction::Bump(b.conj()),
        }
    }

    /// `y -> f(y - shift)`.
    pub fn translated(&self, shift: &[f64]) -> TestFunction {
        match self {
            TestFunction::Packet(p) => TestFunction::Packet(p.translated(shift)),
            TestFunction::Gaussian(g) => TestFunction::Gaussian(g.translate(shift)),
            TestFunction::Tanh(t) => TestFunction::Tanh(TanhEnvelope {
                weight: t.weight.translate(shift),
                factor: t.factor.translate(shift),
                ..t.clone()
            }),
            TestFunction::Bump(b) => TestFunction::Bump(b.translated(shift)),
        }
    }

    pub fn scaled(&self, factor: f64) -> TestFunction {
        let z = Complex64::new(factor, 0.0);
        match self {
            TestFunction::Packet(p) => TestFunction::Packet(GaussianPacket { amp: p.amp * factor, ..p.clone() }),
            TestFunction::Gaussian(g) => TestFunction::Gaussian(g.scaled(z)),
            TestFunction::Tanh(t) => TestFunction::Tanh(TanhEnvelope { scale: t.scale * factor, ..t.clone() }),
            TestFunction::Bump(b) => TestFunction::Bump(b.scaled(z)),
        }
    }

    /// Axis-aligned box outside which `|f| < eps * max|f|`.
    ///
    /// Gaussian boxes come from the quadratic forms (for a sum, the maximum
    /// is estimated by the largest term amplitude); bump boxes are the
    /// bounding box of the support mask.
    pub fn effective_support(&self, eps: f64) -> SupportBox {
        let eps = eps.clamp(f64::MIN_POSITIVE, 1.0);
        match self {
            TestFunction::Packet(p) => gaussian_box(&p.to_gaussian(), eps, 0.0),
            TestFunction::Gaussian(g) => gaussian_box(g, eps, 0.0),
            TestFunction::Tanh(t) => {
                // tanh(Cw)/tanh(C) <= C w / tanh(C)
                let bound = t.weight.mul(&t.factor).expect("positive forms");
                gaussian_box(&bound, eps, (t.c / t.c.tanh()).ln())
            }
            TestFunction::Bump(b) => b.support_box(),
        }
    }

    /// Centre of the `1e-3` effective support.
    pub fn centre(&self) -> Vec<f64> {
        match self {
            TestFunction::Packet(p) => p.center.clone(),
            _ => self.effective_support(1e-3).centre(),
        }
    }

    /// Grid representation: bumps as they are, Tanh envelopes sampled on an
    /// automatically sized lattice. Gaussians return `None` (they have a
    /// closed form and are never sampled implicitly).
    pub fn sampled(&self) -> Option<BumpFunction> {
        match self {
            TestFunction::Bump(b) => Some(b.clone()),
            TestFunction::Tanh(t) => {
                let lmax = t
                    .weight
                    .terms
                    .iter()
                    .chain(&t.factor.terms)
                    .map(Gauss::max_eigenvalue)
                    .fold(0.0f64, f64::max);
                let h = 0.25 / lmax.max(1e-300).sqrt();
                let bx = self.effective_support(1e-16);
                let n = bx.lo.len();
                let grid = Grid::covering(&bx, &vec![h; n]).ok()?;
                let samples: Vec<Complex64> = grid.nodes().map(|y| t.eval(&y)).collect();
                let mask = vec![true; samples.len()];
                BumpFunction::new(grid, samples, mask).ok()
            }
            _ => None,
        }
    }

    /// `int f(y) d^n y`.
    pub fn integral(&self) -> Result<Complex64> {
        match self.as_gaussian() {
            Some(g) => g.integral(),
            None => Ok(self.sampled().ok_or_else(|| Error::Unsupported("integral".into()))?.integral()),
        }
    }
}

fn gaussian_box(g: &GaussianSum, eps: f64, log_prefactor: f64) -> SupportBox {
    let n = g.dim.n();
    if g.terms.is_empty() {
        return SupportBox::point(&vec![0.0; n]);
    }
    let log_max = g.terms.iter().map(|t| t.log_amp.re).fold(f64::NEG_INFINITY, f64::max) + log_prefactor;
    let log_thr = log_max + eps.ln();
    let mut out: Option<SupportBox> = None;
    for t in &g.terms {
        let budget = t.log_amp.re + log_prefactor - log_thr;
        let inv = t.inverse_form().expect("positive definite form");
        let b = if budget <= 0.0 {
            SupportBox::point(&t.center)
        } else {
            let hw: Vec<f64> = (0..n).map(|i| (budget * inv[(i, i)]).sqrt()).collect();
            SupportBox {
                lo: t.center.iter().zip(&hw).map(|(c, h)| c - h).collect(),
                hi: t.center.iter().zip(&hw).map(|(c, h)| c + h).collect(),
            }
        };
        out = Some(match out {
            None => b,
            Some(o) => o.union(&b),
        });
    }
    out.expect("non-empty")
}

/// `lambda[f] = coeff * (f,f)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleFunctionalSpec {
    pub p1_coeff: f64,
    pub p1_power: f64,
}

impl Default for ScaleFunctionalSpec {
    fn default() -> Self {
        ScaleFunctionalSpec { p1_coeff: 1.0, p1_power: 0.0 }
    }
}

impl ScaleFunctionalSpec {
    /// Evaluates the scale functional given the caller-computed norm `(f,f)`.
    pub fn evaluate(&self, norm: f64) -> Result<f64> {
        if !(self.p1_coeff > 0.0) {
            return Err(Error::InvalidParameter("p1_coeff must be positive".into()));
        }
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate(format!("scale functional needs (f,f) > 0, got {norm}")));
        }
        Ok(self.p1_coeff * norm.powf(self.p1_power))
    }
}

/// `int f(y) g(y) d^n y` (no conjugation).
pub fn integrate_product(f: &TestFunction, g: &TestFunction) -> Result<Complex64> {
    if let (Some(a), Some(b)) = (f.as_gaussian(), g.as_gaussian()) {
        return a.mul(&b)?.integral();
    }
    let (grid_fn, other) = match (f.sampled(), g.sampled()) {
        (Some(b), _) => (b, g),
        (None, Some(b)) => (b, f),
        (None, None) => return Err(Error::Unsupported("product integral".into())),
    };
    let vals = grid_fn
        .grid
        .nodes()
        .zip(&grid_fn.samples)
        .map(|(y, s)| if *s == Complex64::new(0.0, 0.0) { *s } else { s * other.eval(&y) });
    Ok(crate::numeric::complex_sum(vals) * grid_fn.grid.cell_volume())
}
