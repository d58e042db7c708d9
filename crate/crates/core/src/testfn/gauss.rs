//! Complex Gaussians in centred form and the plane-wave packet family.
//!
//! A [`Gauss`] is
//!
//! ```text
//! g(y) = exp(L - (y - c)^T A (y - c) + i nu . (y - c))
//! ```
//!
//! with `A` real symmetric positive definite, `c` and `nu` real and `L`
//! complex. The dot products here are Euclidean; Minkowski structure enters
//! only through how packets and Fourier transforms build `A`, `c` and `nu`.
//! The same type is used in position and momentum space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spacetime::{self, eta, Boost, SpacetimeDim};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gauss {
    /// Row-major `n x n` quadratic form.
    pub a: Vec<f64>,
    pub center: Vec<f64>,
    pub freq: Vec<f64>,
    pub log_amp: Complex64,
}

fn mat(n: usize, a: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, a)
}

fn quad_form(n: usize, a: &[f64], u: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += a[i * n + j] * u[j];
        }
        s += u[i] * r;
    }
    s
}

impl Gauss {
    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// Log of the value at `y`.
    #[inline]
    pub fn log_eval(&self, y: &[f64]) -> Complex64 {
        let n = self.n();
        let mut u = [0.0f64; 4];
        let mut phase = 0.0;
        for i in 0..n {
            u[i] = y[i] - self.center[i];
            phase += self.freq[i] * u[i];
        }
        let q = quad_form(n, &self.a, &u[..n]);
        self.log_amp + Complex64::new(-q, phase)
    }

    #[inline]
    pub fn eval(&self, y: &[f64]) -> Complex64 {
        self.log_eval(y).exp()
    }

    pub fn conj(&self) -> Gauss {
        Gauss {
            a: self.a.clone(),
            center: self.center.clone(),
            freq: self.freq.iter().map(|v| -v).collect(),
            log_amp: self.log_amp.conj(),
        }
    }

    pub fn inverse_form(&self) -> Result<DMatrix<f64>> {
        mat(self.n(), &self.a)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular Gaussian quadratic form".into()))
    }

    pub fn det(&self) -> f64 {
        mat(self.n(), &self.a).determinant()
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Gauss) -> Result<Gauss> {
        let n = self.n();
        let a1 = mat(n, &self.a);
        let a2 = mat(n, &other.a);
        let a = &a1 + &a2;
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular product form".into()))?;
        let p = DVector::from_column_slice(&self.center);
        let q = DVector::from_column_slice(&other.center);
        let d = &p - &q;
        // w = A^-1 A2 (p - q); r = p - w is the combined centre
        let w = &a_inv * (&a2 * &d);
        let r = &p - &w;
        let c_real = (&a1 * &d).dot(&w);
        let nu1 = DVector::from_column_slice(&self.freq);
        let nu2 = DVector::from_column_slice(&other.freq);
        let phase = nu1.dot(&(&r - &p)) + nu2.dot(&(&r - &q));
        Ok(Gauss {
            a: row_major(&a),
            center: r.iter().cloned().collect(),
            freq: (&nu1 + &nu2).iter().cloned().collect(),
            log_amp: self.log_amp + other.log_amp + Complex64::new(-c_real, phase),
        })
    }

    /// `|g|^2` as a Gaussian (real, non-negative).
    pub fn abs_sq(&self) -> Gauss {
        Gauss {
            a: self.a.iter().map(|v| 2.0 * v).collect(),
            center: self.center.clone(),
            freq: vec![0.0; self.n()],
            log_amp: Complex64::new(2.0 * self.log_amp.re, 0.0),
        }
    }

    /// `y -> g(scale (y - x) + x)`.
    pub fn contract(&self, scale: f64, x: &[f64]) -> Gauss {
        let s2 = scale * scale;
        Gauss {
            a: self.a.iter().map(|v| s2 * v).collect(),
            center: x.iter().zip(&self.center).map(|(xi, ci)| xi + (ci - xi) / scale).collect(),
            freq: self.freq.iter().map(|v| scale * v).collect(),
            log_amp: self.log_amp,
        }
    }

    /// `y -> g(y - shift)`.
    pub fn translate(&self, shift: &[f64]) -> Gauss {
        Gauss {
            center: self.center.iter().zip(shift).map(|(c, s)| c + s).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, log_factor: Complex64) -> Gauss {
        Gauss { log_amp: self.log_amp + log_factor, ..self.clone() }
    }

    /// Position-space integral over all of spacetime.
    pub fn integral(&self) -> Result<Complex64> {
        let n = self.n();
        let a_inv = self.inverse_form()?;
        let nu = DVector::from_column_slice(&self.freq);
        let q = nu.dot(&(&a_inv * &nu));
        let log_norm = 0.5 * (n as f64 * std::f64::consts::PI.ln() - self.det().ln());
        Ok((self.log_amp + Complex64::new(log_norm - 0.25 * q, 0.0)).exp())
    }

    /// Fourier transform `k -> int g(y) exp(i k.y) d^n y` with the Minkowski
    /// product `k.y`, returned as a momentum-space Gaussian.
    pub fn fourier(&self) -> Result<Gauss> {
        let n = self.n();
        let a_inv = self.inverse_form()?;
        let mut ak = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                ak[i * n + j] = 0.25 * eta(i) * eta(j) * a_inv[(i, j)];
            }
        }
        let kc: Vec<f64> = self.freq.iter().enumerate().map(|(i, v)| -eta(i) * v).collect();
        let xi: Vec<f64> = self.center.iter().enumerate().map(|(i, v)| eta(i) * v).collect();
        let phase: f64 = xi.iter().zip(&kc).map(|(a, b)| a * b).sum();
        let log_norm = 0.5 * (n as f64 * std::f64::consts::PI.ln() - self.det().ln());
        Ok(Gauss { a: ak, center: kc, freq: xi, log_amp: self.log_amp + Complex64::new(log_norm, phase) })
    }

    /// Smallest eigenvalue of the quadratic form.
    pub fn min_eigenvalue(&self) -> f64 {
        mat(self.n(), &self.a).symmetric_eigenvalues().min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        mat(self.n(), &self.a).symmetric_eigenvalues().max()
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Finite sum of Gaussians; the empty sum is the zero function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSum {
    pub dim: SpacetimeDim,
    pub terms: Vec<Gauss>,
}

impl GaussianSum {
    pub fn zero(dim: SpacetimeDim) -> Self {
        GaussianSum { dim, terms: Vec::new() }
    }

    pub fn single(dim: SpacetimeDim, g: Gauss) -> Self {
        GaussianSum { dim, terms: vec![g] }
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        self.terms.iter().map(|g| g.eval(y)).sum()
    }

    pub fn conj(&self) -> Self {
        GaussianSum { dim: self.dim, terms: self.terms.iter().map(Gauss::conj).collect() }
    }

    pub fn mul(&self, other: &GaussianSum) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b)?);
            }
        }
        Ok(GaussianSum { dim: self.dim, terms })
    }

    pub fn abs_sq(&self) -> Result<Self> {
        if self.terms.len() == 1 {
            return Ok(GaussianSum::single(self.dim, self.terms[0].abs_sq()));
        }
        self.conj().mul(self)
    }

    pub fn contract(&self, scale: f64, x: &[f64]) -> Self {
        GaussianSum { dim: self.dim, terms: self.terms.iter().map(|g| g.contract(scale, x)).collect() }
    }

    pub fn translate(&self, shift: &[f64]) -> Self {
        GaussianSum { dim: self.dim, terms: self.terms.iter().map(|g| g.translate(shift)).collect() }
    }

    /// Multiplies by a complex constant.
    pub fn scaled(&self, factor: Complex64) -> Self {
        if factor == Complex64::new(0.0, 0.0) {
            return GaussianSum::zero(self.dim);
        }
        let lf = factor.ln();
        GaussianSum { dim: self.dim, terms: self.terms.iter().map(|g| g.scaled(lf)).collect() }
    }

    pub fn add(&self, other: &GaussianSum) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        GaussianSum { dim: self.dim, terms }
    }

    pub fn integral(&self) -> Result<Complex64> {
        self.terms.iter().map(Gauss::integral).sum()
    }

    pub fn fourier(&self) -> Result<GaussianSum> {
        Ok(GaussianSum { dim: self.dim, terms: self.terms.iter().map(Gauss::fourier).collect::<Result<_>>()? })
    }
}

/// Plane-wave packet `amp * exp(-i k.y' + mu^2 (y'.y' - 2 (k.y')^2 / m^2))`,
/// `y' = y - center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub k: Vec<f64>,
    pub mu: f64,
    pub m: f64,
    pub center: Vec<f64>,
    pub amp: Complex64,
}

impl GaussianPacket {
    /// Builds a packet with on-shell momentum from its spatial part.
    pub fn new(spatial_k: &[f64], mu: f64, m: f64, center: &[f64], amp: Complex64) -> Result<Self> {
        let p = GaussianPacket { k: spacetime::on_shell(m, spatial_k), mu, m, center: center.to_vec(), amp };
        p.validate()?;
        Ok(p)
    }

    pub fn at_rest(dim: SpacetimeDim, mu: f64, m: f64) -> Result<Self> {
        GaussianPacket::new(&vec![0.0; dim.d_space], mu, m, &vec![0.0; dim.n()], Complex64::new(1.0, 0.0))
    }

    pub fn dim(&self) -> SpacetimeDim {
        SpacetimeDim { d_space: self.k.len() - 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(invalid("packet mu must be positive"));
        }
        if !(self.m > 0.0) {
            return Err(invalid("packet mass must be positive"));
        }
        if self.k.len() != self.center.len() {
            return Err(Error::DimensionMismatch { expected: self.k.len(), got: self.center.len() });
        }
        SpacetimeDim::new(self.k.len() - 1)?;
        let m2 = self.m * self.m;
        if (spacetime::dot(&self.k, &self.k) - m2).abs() > 1e-12 * m2 {
            return Err(invalid("packet momentum is off shell"));
        }
        if self.k[0] <= 0.0 {
            return Err(invalid("packet energy must be positive"));
        }
        Ok(())
    }

    /// Rest-frame Euclidean quadratic form `2 (k.y)^2/m^2 - y.y` as a matrix.
    pub fn rest_form(&self) -> Vec<f64> {
        let n = self.k.len();
        let kl = spacetime::lower(&self.k);
        let m2 = self.m * self.m;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 2.0 * kl[i] * kl[j] / m2 - if i == j { eta(i) } else { 0.0 };
            }
        }
        a
    }

    pub fn to_gaussian(&self) -> GaussianSum {
        let dim = self.dim();
        if self.amp == Complex64::new(0.0, 0.0) {
            return GaussianSum::zero(dim);
        }
        let mu2 = self.mu * self.mu;
        let g = Gauss {
            a: self.rest_form().into_iter().map(|v| mu2 * v).collect(),
            center: self.center.clone(),
            freq: spacetime::lower(&self.k).into_iter().map(|v| -v).collect(),
            log_amp: self.amp.ln(),
        };
        GaussianSum::single(dim, g)
    }

    /// Boosts momentum and centre together; the energy is recomputed from
    /// the boosted spatial momentum so the packet stays exactly on shell.
    pub fn boosted(&self, b: &Boost) -> Result<Self> {
        let k = b.apply(&self.k);
        GaussianPacket::new(&k[1..], self.mu, self.m, &b.apply(&self.center), self.amp)
    }

    pub fn translated(&self, a: &[f64]) -> Self {
        GaussianPacket { center: self.center.iter().zip(a).map(|(c, s)| c + s).collect(), ..self.clone() }
    }
}
