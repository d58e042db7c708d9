use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BumpFunction, GaussianSum, TestFunction};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeVariant {
    /// `|f(l(y-x)+x)|^2` on `Supp f`, zero elsewhere.
    SupportRestricted,
    /// `|f(y)|^2 |f(l(y-x)+x)|^2`.
    Product,
    /// `tanh(C |f(y)|^2)/tanh(C) |f(l(y-x)+x)|^2`.
    TanhProduct,
    /// `|f(y)|^2 sum_a w_a |f(s_a l (y-x)+x)|^2`.
    MeasureSmeared,
    /// `f(y) f(l(y-x)+x)`.
    NonAbsolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub variant: EnvelopeVariant,
    /// Saturation constant for [`EnvelopeVariant::TanhProduct`].
    #[serde(default)]
    pub c: Option<f64>,
    /// `(scale multiplier, weight)` atoms of the smearing measure for
    /// [`EnvelopeVariant::MeasureSmeared`]. Each atom contracts by
    /// `multiplier * lambda`.
    #[serde(default)]
    pub alpha_nodes: Vec<(f64, f64)>,
}

impl EnvelopeSpec {
    pub fn new(variant: EnvelopeVariant) -> Self {
        EnvelopeSpec { variant, c: None, alpha_nodes: Vec::new() }
    }

    pub fn tanh(c: f64) -> Self {
        EnvelopeSpec { variant: EnvelopeVariant::TanhProduct, c: Some(c), alpha_nodes: Vec::new() }
    }

    pub fn measure(alpha_nodes: Vec<(f64, f64)>) -> Self {
        EnvelopeSpec { variant: EnvelopeVariant::MeasureSmeared, c: None, alpha_nodes }
    }

    pub fn validate(&self) -> Result<()> {
        match self.variant {
            EnvelopeVariant::TanhProduct => match self.c {
                Some(c) if c > 0.0 => Ok(()),
                _ => Err(invalid("TanhProduct envelope needs C > 0")),
            },
            EnvelopeVariant::MeasureSmeared => {
                if self.alpha_nodes.is_empty() {
                    return Err(invalid("MeasureSmeared envelope needs at least one node"));
                }
                if self.alpha_nodes.iter().any(|(s, w)| !(*s > 0.0) || !(*w >= 0.0)) {
                    return Err(invalid("smearing nodes need positive scales and non-negative weights"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the variant yields real, non-negative envelopes.
    pub fn is_non_negative(&self) -> bool {
        self.variant != EnvelopeVariant::NonAbsolute
    }
}

/// `scale * tanh(C * weight(y)) / tanh(C) * factor(y)` with `weight` and
/// `factor` real non-negative Gaussian sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanhEnvelope {
    pub c: f64,
    pub weight: GaussianSum,
    pub factor: GaussianSum,
    pub scale: f64,
}

impl TanhEnvelope {
    pub fn eval(&self, y: &[f64]) -> Complex64 {
        let w = self.weight.eval(y).re;
        let f = self.factor.eval(y).re;
        Complex64::new(self.scale * (self.c * w).tanh() / self.c.tanh() * f, 0.0)
    }
}

/// The contracted envelope `f_{lambda,x}`.
pub fn contract_envelope(f: &TestFunction, spec: &EnvelopeSpec, lambda: f64, x: &[f64]) -> Result<TestFunction> {
    spec.validate()?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("contraction scale must be positive"));
    }
    f.dim().check(x)?;
    match f {
        TestFunction::Packet(p) => gaussian_envelope(&p.to_gaussian(), spec, lambda, x),
        TestFunction::Gaussian(g) => gaussian_envelope(g, spec, lambda, x),
        TestFunction::Bump(b) => bump_envelope(b, spec, lambda, x).map(TestFunction::Bump),
        TestFunction::Tanh(_) => {
            let sampled = f.sampled().ok_or_else(|| Error::Unsupported("cannot sample envelope".into()))?;
            bump_envelope(&sampled, spec, lambda, x).map(TestFunction::Bump)
        }
    }
}

fn gaussian_envelope(g: &GaussianSum, spec: &EnvelopeSpec, lambda: f64, x: &[f64]) -> Result<TestFunction> {
    let contracted = g.contract(lambda, x);
    let out = match spec.variant {
        // Support of a Gaussian is all of spacetime, so the restriction is vacuous.
        EnvelopeVariant::SupportRestricted => contracted.abs_sq()?,
        EnvelopeVariant::Product => g.abs_sq()?.mul(&contracted.abs_sq()?)?,
        EnvelopeVariant::TanhProduct => {
            return Ok(TestFunction::Tanh(TanhEnvelope {
                c: spec.c.expect("validated"),
                weight: g.abs_sq()?,
                factor: contracted.abs_sq()?,
                scale: 1.0,
            }))
        }
        EnvelopeVariant::MeasureSmeared => {
            let mut acc = GaussianSum::zero(g.dim);
            for &(s, w) in &spec.alpha_nodes {
                if w > 0.0 {
                    acc = acc.add(&g.contract(s * lambda, x).abs_sq()?.scaled(Complex64::new(w, 0.0)));
                }
            }
            g.abs_sq()?.mul(&acc)?
        }
        EnvelopeVariant::NonAbsolute => g.mul(&contracted)?,
    };
    Ok(TestFunction::Gaussian(out))
}

fn bump_envelope(b: &BumpFunction, spec: &EnvelopeSpec, lambda: f64, x: &[f64]) -> Result<BumpFunction> {
    let n = b.grid.n_axes();
    let read = |y: &[f64], s: f64| -> Complex64 {
        let z: Vec<f64> = (0..n).map(|a| s * (y[a] - x[a]) + x[a]).collect();
        b.eval(&z)
    };
    let mut samples = Vec::with_capacity(b.samples.len());
    for (i, (&fy, &inside)) in b.samples.iter().zip(&b.support_mask).enumerate() {
        if !inside {
            samples.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let y = b.grid.node(i);
        let v = match spec.variant {
            EnvelopeVariant::SupportRestricted => Complex64::new(read(&y, lambda).norm_sqr(), 0.0),
            EnvelopeVariant::Product => Complex64::new(fy.norm_sqr() * read(&y, lambda).norm_sqr(), 0.0),
            EnvelopeVariant::TanhProduct => {
                let c = spec.c.expect("validated");
                Complex64::new((c * fy.norm_sqr()).tanh() / c.tanh() * read(&y, lambda).norm_sqr(), 0.0)
            }
            EnvelopeVariant::MeasureSmeared => {
                let s: f64 = spec.alpha_nodes.iter().map(|&(s, w)| w * read(&y, s * lambda).norm_sqr()).sum();
                Complex64::new(fy.norm_sqr() * s, 0.0)
            }
            EnvelopeVariant::NonAbsolute => fy * read(&y, lambda),
        };
        samples.push(v);
    }
    BumpFunction::new(b.grid.clone(), samples, b.support_mask.clone())
}
