//! The free scalar field: Fourier transforms, the positive-frequency inner
//! product `(f, g)` on the mass shell, smeared commutators, and 1+1 Green
//! functions.
//!
//! Conventions: `f~(k) = int f(y) exp(i k.y) d^n y` with the Minkowski
//! product, and
//!
//! ```text
//! (f, g) = int d^d k / ((2 pi)^d 2 w(k)) conj(f~(k)) g~(k),   k0 = w(k)
//! ```
//!
//! which is the two-point function `<phi_f^dagger phi_g>`. The same
//! `2 pi / (2 pi)^(d+1)` prefactor pattern is used in every dimension.
//!
//! Two evaluation paths exist: a fixed tensor-product lattice on the
//! spatial-momentum cube ([`MassShellQuadrature`]) that works for every
//! test function, and an adaptive path for closed Gaussians ([`closed`]).

pub mod closed;
mod gridft;
mod green;

pub use closed::{closed_pairing, packet_norm_closed, shell_integral};
pub use green::{advanced_green_1p1, pauli_jordan_1p1, retarded_green_1p1, smeared_pauli_jordan_1p1, SmearingRule};
pub use gridft::{dtft, GridFt};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{composite_gl, ComplexSum};
use crate::registry::{FieldLabel, FnId, ModeLabel, Pairing, Registry};
use crate::spacetime::SpacetimeDim;
use crate::testfn::{BumpFunction, GaussianSum, TestFunction};

/// Generator for the default lattice: composite Gauss-Legendre panels on
/// `[-cutoff, cutoff]` along every spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub m: f64,
    /// Per-axis momentum cutoff (the lattice is a cube, not a ball).
    pub cutoff: f64,
    pub panels: usize,
    pub order: usize,
}

impl QuadratureSpec {
    /// Defaults that resolve packets with `mu >= 0.1 m` to well below 1e-10.
    pub fn default_for(dim: SpacetimeDim, m: f64) -> Self {
        match dim.d_space {
            1 => QuadratureSpec { m, cutoff: 12.0 * m, panels: 48, order: 16 },
            _ => QuadratureSpec { m, cutoff: 6.0 * m, panels: 12, order: 8 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuadratureData {
    m: f64,
    cutoff: f64,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Spatial-momentum nodes and weights for shell integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadratureData", into = "QuadratureData")]
pub struct MassShellQuadrature {
    dim: SpacetimeDim,
    m: f64,
    cutoff: f64,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    omega: Vec<f64>,
    /// `w / ((2 pi)^d 2 omega)` per node.
    measure: Vec<f64>,
    fingerprint: u64,
}

impl TryFrom<QuadratureData> for MassShellQuadrature {
    type Error = Error;
    fn try_from(d: QuadratureData) -> Result<Self> {
        MassShellQuadrature::explicit(d.m, d.cutoff, d.nodes, d.weights)
    }
}

impl From<MassShellQuadrature> for QuadratureData {
    fn from(q: MassShellQuadrature) -> Self {
        QuadratureData { m: q.m, cutoff: q.cutoff, nodes: q.nodes, weights: q.weights }
    }
}

fn fnv(bits: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bits {
        for byte in b.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl MassShellQuadrature {
    pub fn explicit(m: f64, cutoff: f64, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("shell mass must be positive"));
        }
        if !(cutoff > 0.0) {
            return Err(invalid("momentum cutoff must be positive"));
        }
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(invalid("quadrature needs matching non-empty node and weight lists"));
        }
        let d = nodes[0].len();
        let dim = SpacetimeDim::new(d)?;
        if nodes.iter().any(|k| k.len() != d) {
            return Err(invalid("quadrature nodes have mixed dimensions"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid("quadrature weights must be positive"));
        }
        let omega: Vec<f64> = nodes.iter().map(|k| (m * m + k.iter().map(|v| v * v).sum::<f64>()).sqrt()).collect();
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(invalid("shell energy not finite"));
        }
        let norm = (2.0 * PI).powi(-(d as i32));
        let measure = weights.iter().zip(&omega).map(|(w, o)| w * norm / (2.0 * o)).collect();
        let fingerprint = fnv(
            std::iter::once(m.to_bits())
                .chain(std::iter::once(cutoff.to_bits()))
                .chain(nodes.iter().flatten().map(|v| v.to_bits()))
                .chain(weights.iter().map(|v| v.to_bits())),
        );
        Ok(MassShellQuadrature { dim, m, cutoff, nodes, weights, omega, measure, fingerprint })
    }

    pub fn from_spec(dim: SpacetimeDim, spec: &QuadratureSpec) -> Result<Self> {
        if spec.panels == 0 || spec.order == 0 {
            return Err(invalid("quadrature needs at least one panel and node"));
        }
        if !(spec.cutoff > 0.0) {
            return Err(invalid("momentum cutoff must be positive"));
        }
        let axis = composite_gl(-spec.cutoff, spec.cutoff, spec.panels, spec.order);
        let d = dim.d_space;
        let total = axis.len().pow(d as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut k = vec![0.0; d];
            let mut w = 1.0;
            for a in (0..d).rev() {
                let (x, wx) = axis[rem % axis.len()];
                rem /= axis.len();
                k[a] = x;
                w *= wx;
            }
            nodes.push(k);
            weights.push(w);
        }
        MassShellQuadrature::explicit(spec.m, spec.cutoff, nodes, weights)
    }

    pub fn dim(&self) -> SpacetimeDim {
        self.dim
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// On-shell four-momentum of node `i`.
    pub fn momentum(&self, i: usize) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.dim.n());
        k.push(self.omega[i]);
        k.extend_from_slice(&self.nodes[i]);
        k
    }

    /// Largest energy on the lattice.
    pub fn max_energy(&self) -> f64 {
        self.omega.iter().cloned().fold(0.0, f64::max)
    }

    /// `(a, b)` on this lattice; compensated sum in node order.
    pub fn inner(&self, a: &SingleParticleVector, b: &SingleParticleVector) -> Result<Complex64> {
        for v in [a, b] {
            if v.fingerprint != self.fingerprint || v.values.len() != self.len() {
                return Err(Error::QuadratureMismatch("vector was built on another quadrature".into()));
            }
        }
        let mut s = ComplexSum::default();
        for ((x, y), w) in a.values.iter().zip(&b.values).zip(&self.measure) {
            s.add(x.conj() * y * w);
        }
        Ok(s.value())
    }
}

/// `f~` at the nodes of one quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleParticleVector {
    pub values: Vec<Complex64>,
    fingerprint: u64,
}

/// A Fourier transform: closed Gaussians or lattice samples of a bump.
#[derive(Debug, Clone)]
pub enum MomentumRep {
    ClosedGaussian(GaussianSum),
    Grid(GridFt),
}

impl MomentumRep {
    pub fn eval(&self, k: &[f64]) -> Complex64 {
        match self {
            MomentumRep::ClosedGaussian(g) => g.eval(k),
            MomentumRep::Grid(ft) => ft.eval(k),
        }
    }
}

/// Which path evaluates `(f, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairingMethod {
    Lattice,
    Closed,
    /// Closed when both functions are Gaussian, lattice otherwise.
    #[default]
    Auto,
}

/// Minimum zero-padding for bump transforms.
pub const MIN_PADDING: usize = 4;

pub fn fourier(f: &TestFunction, padding: usize) -> Result<MomentumRep> {
    if padding < MIN_PADDING {
        return Err(invalid(format!("zero-padding factor must be at least {MIN_PADDING}")));
    }
    if let Some(g) = f.as_gaussian() {
        return Ok(MomentumRep::ClosedGaussian(g.fourier()?));
    }
    let b = f.sampled().ok_or_else(|| Error::Unsupported("Fourier transform".into()))?;
    Ok(MomentumRep::Grid(GridFt::compute(&b, padding)))
}

/// Evaluation context: one mass-shell quadrature plus numerical settings.
#[derive(Debug, Clone)]
pub struct FreeField {
    pub quad: MassShellQuadrature,
    pub padding: usize,
    /// Relative tolerance of the adaptive closed path.
    pub closed_tol: f64,
}

fn packet_mass(f: &TestFunction) -> Option<f64> {
    match f {
        TestFunction::Packet(p) => Some(p.m),
        _ => None,
    }
}

fn bits_key(g: &GaussianSum) -> Vec<u64> {
    g.terms
        .iter()
        .flat_map(|t| {
            t.a.iter()
                .chain(&t.center)
                .chain(&t.freq)
                .chain([t.log_amp.re, t.log_amp.im].iter())
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        })
        .collect()
}

impl FreeField {
    pub fn new(quad: MassShellQuadrature) -> Self {
        FreeField { quad, padding: MIN_PADDING, closed_tol: 1e-12 }
    }

    pub fn from_spec(dim: SpacetimeDim, spec: &QuadratureSpec) -> Result<Self> {
        Ok(FreeField::new(MassShellQuadrature::from_spec(dim, spec)?))
    }

    pub fn mass(&self) -> f64 {
        self.quad.m
    }

    pub fn dim(&self) -> SpacetimeDim {
        self.quad.dim
    }

    fn check(&self, f: &TestFunction) -> Result<()> {
        if f.dim() != self.quad.dim {
            return Err(Error::DimensionMismatch { expected: self.quad.dim.n(), got: f.dim().n() });
        }
        if let Some(m) = packet_mass(f) {
            if (m - self.quad.m).abs() > 1e-12 * self.quad.m {
                return Err(Error::QuadratureMismatch(format!("packet mass {m} differs from shell mass {}", self.quad.m)));
            }
        }
        Ok(())
    }

    fn check_nyquist(&self, b: &BumpFunction) -> Result<()> {
        for (a, h) in b.grid.spacing.iter().enumerate() {
            let kmax = if a == 0 { self.quad.max_energy() } else { self.quad.cutoff };
            if kmax > PI / h {
                return Err(Error::QuadratureMismatch(format!(
                    "shell reaches |k| = {kmax:.3} beyond the grid Nyquist limit {:.3} on axis {a}",
                    PI / h
                )));
            }
        }
        Ok(())
    }

    /// `f~` restricted to the quadrature's shell nodes.
    pub fn shell_vector(&self, f: &TestFunction) -> Result<SingleParticleVector> {
        self.check(f)?;
        let idx: Vec<usize> = (0..self.quad.len()).collect();
        let values = if let Some(g) = f.as_gaussian() {
            let gk = g.fourier()?;
            idx.par_iter().map(|&i| gk.eval(&self.quad.momentum(i))).collect()
        } else {
            let b = f.sampled().ok_or_else(|| Error::Unsupported("shell restriction".into()))?;
            self.check_nyquist(&b)?;
            idx.par_iter().map(|&i| dtft(&b, &self.quad.momentum(i))).collect()
        };
        Ok(SingleParticleVector { values, fingerprint: self.quad.fingerprint })
    }

    /// `(f, g)` on the lattice.
    pub fn inner_product(&self, f: &TestFunction, g: &TestFunction) -> Result<Complex64> {
        let (a, b) = (self.shell_vector(f)?, self.shell_vector(g)?);
        self.quad.inner(&a, &b)
    }

    /// `(f, g)` by adaptive shell integration; both functions must be
    /// Gaussian. One orientation is evaluated and conjugated, so the result
    /// is exactly Hermitian.
    pub fn inner_product_closed(&self, f: &TestFunction, g: &TestFunction) -> Result<Complex64> {
        self.check(f)?;
        self.check(g)?;
        let (Some(a), Some(b)) = (f.as_gaussian(), g.as_gaussian()) else {
            return Err(Error::Unsupported("closed inner product needs Gaussian test functions".into()));
        };
        if bits_key(&a) <= bits_key(&b) {
            closed_pairing(&a, &b, self.quad.m, self.closed_tol)
        } else {
            Ok(closed_pairing(&b, &a, self.quad.m, self.closed_tol)?.conj())
        }
    }

    pub fn pair_with(&self, f: &TestFunction, g: &TestFunction, method: PairingMethod) -> Result<Complex64> {
        match method {
            PairingMethod::Lattice => self.inner_product(f, g),
            PairingMethod::Closed => self.inner_product_closed(f, g),
            PairingMethod::Auto if f.is_gaussian() && g.is_gaussian() => self.inner_product_closed(f, g),
            PairingMethod::Auto => self.inner_product(f, g),
        }
    }

    /// `[phi_f, phi_g] = (f*, g) - (g*, f)` on the lattice.
    pub fn commutator_value(&self, f: &TestFunction, g: &TestFunction) -> Result<Complex64> {
        let (fc, gc) = (self.shell_vector(&f.conj())?, self.shell_vector(&g.conj())?);
        let (fv, gv) = (self.shell_vector(f)?, self.shell_vector(g)?);
        Ok(self.quad.inner(&fc, &gv)? - self.quad.inner(&gc, &fv)?)
    }
}

/// `(f, g)` on the given lattice.
pub fn inner_product(f: &TestFunction, g: &TestFunction, q: &MassShellQuadrature) -> Result<Complex64> {
    FreeField::new(q.clone()).inner_product(f, g)
}

/// `[phi_f, phi_g]` on the given lattice.
pub fn commutator_value(f: &TestFunction, g: &TestFunction, q: &MassShellQuadrature) -> Result<Complex64> {
    FreeField::new(q.clone()).commutator_value(f, g)
}

/// `(f, g)` for Gaussians by the adaptive path; with `dense_check` the value
/// is also computed on that lattice and a relative disagreement above 1e-6
/// (relative to `sqrt((f,f)(g,g))`) is reported as an error.
pub fn inner_product_closed(
    f: &TestFunction,
    g: &TestFunction,
    m: f64,
    dense_check: Option<&MassShellQuadrature>,
) -> Result<Complex64> {
    let dim = f.dim();
    let probe = MassShellQuadrature::explicit(m, 1.0, vec![vec![0.0; dim.d_space]], vec![1.0])?;
    let ff = FreeField::new(probe);
    let v = ff.inner_product_closed(f, g)?;
    if let Some(q) = dense_check {
        let lat = FreeField::new(q.clone());
        let scale = (ff.inner_product_closed(f, f)?.re * ff.inner_product_closed(g, g)?.re).sqrt();
        let diff = (lat.inner_product(f, g)? - v).norm();
        if diff > 1e-6 * scale {
            return Err(Error::QuadratureMismatch(format!("closed and lattice paths differ by {:.3e}", diff / scale)));
        }
    }
    Ok(v)
}

/// All pairings `(h_a, h_b)` among a fixed set of mode labels, computed once.
#[derive(Debug, Clone, Serialize)]
pub struct GramTable {
    labels: Vec<ModeLabel>,
    #[serde(skip)]
    index: BTreeMap<ModeLabel, usize>,
    /// Row-major `n x n`, Hermitian by construction.
    values: Vec<Complex64>,
}

impl GramTable {
    /// Pairings among every registered function and its conjugate.
    pub fn build(registry: &Registry, field: &FreeField, method: PairingMethod) -> Result<Self> {
        let ids: Vec<FnId> = registry.ids().collect();
        GramTable::build_for(registry, field, method, &ids)
    }

    pub fn build_for(registry: &Registry, field: &FreeField, method: PairingMethod, ids: &[FnId]) -> Result<Self> {
        let labels: Vec<ModeLabel> =
            ids.iter().flat_map(|&id| [ModeLabel::plain(id), ModeLabel::conjugated(id)]).collect();
        let funcs: Vec<TestFunction> = labels.iter().map(|l| registry.resolve(*l)).collect::<Result<_>>()?;
        let n = labels.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();

        let use_closed = |i: usize, j: usize| match method {
            PairingMethod::Lattice => false,
            PairingMethod::Closed => true,
            PairingMethod::Auto => funcs[i].is_gaussian() && funcs[j].is_gaussian(),
        };
        let needs_lattice: Vec<bool> = (0..n).map(|i| (0..n).any(|j| !use_closed(i, j))).collect();
        let vectors: Vec<Option<SingleParticleVector>> = funcs
            .par_iter()
            .zip(needs_lattice.par_iter())
            .map(|(f, need)| if *need { field.shell_vector(f).map(Some) } else { Ok(None) })
            .collect::<Result<_>>()?;

        let upper: Vec<Complex64> = pairs
            .par_iter()
            .map(|&(i, j)| {
                if use_closed(i, j) {
                    field.inner_product_closed(&funcs[i], &funcs[j])
                } else {
                    field.quad.inner(vectors[i].as_ref().expect("lattice vector"), vectors[j].as_ref().expect("lattice vector"))
                }
            })
            .collect::<Result<_>>()?;

        let mut values = vec![Complex64::new(0.0, 0.0); n * n];
        for (&(i, j), v) in pairs.iter().zip(upper) {
            values[i * n + j] = v;
            values[j * n + i] = v.conj();
        }
        for i in 0..n {
            values[i * n + i].im = 0.0;
        }
        Ok(GramTable::from_parts(labels, values))
    }

    /// Table from explicit values; the matrix must be Hermitian.
    pub fn from_values(labels: Vec<ModeLabel>, values: Vec<Complex64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(invalid("gram values must be n x n"));
        }
        for i in 0..n {
            for j in 0..n {
                if values[i * n + j] != values[j * n + i].conj() {
                    return Err(invalid("gram values are not Hermitian"));
                }
            }
        }
        Ok(GramTable::from_parts(labels, values))
    }

    fn from_parts(labels: Vec<ModeLabel>, values: Vec<Complex64>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        GramTable { labels, index, values }
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn get(&self, a: ModeLabel, b: ModeLabel) -> Option<Complex64> {
        let n = self.labels.len();
        let (i, j) = (*self.index.get(&a)?, *self.index.get(&b)?);
        Some(self.values[i * n + j])
    }

    /// Gram matrix `(f_i, f_j)` for the plain functions of the given ids.
    pub fn gram(&self, ids: &[FnId]) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(ids.len() * ids.len());
        for &a in ids {
            for &b in ids {
                out.push(self.pair(ModeLabel::plain(a), ModeLabel::plain(b))?);
            }
        }
        Ok(out)
    }

    /// `[phi_f, phi_g]` from the stored pairings.
    pub fn commutator_of(&self, f: FieldLabel, g: FieldLabel) -> Result<Complex64> {
        self.commutator(f, g)
    }
}

impl Pairing for GramTable {
    fn pair(&self, a: ModeLabel, b: ModeLabel) -> Result<Complex64> {
        self.get(a, b).ok_or(Error::Unregistered(if self.index.contains_key(&a) { b.id } else { a.id }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::Boost;
    use crate::testfn::{GaussianPacket, Grid};

    fn field1() -> FreeField {
        FreeField::from_spec(SpacetimeDim::ONE_PLUS_ONE, &QuadratureSpec::default_for(SpacetimeDim::ONE_PLUS_ONE, 1.0))
            .unwrap()
    }

    fn pk(k: f64, mu: f64, c: [f64; 2], amp: Complex64) -> TestFunction {
        GaussianPacket::new(&[k], mu, 1.0, &c, amp).unwrap().into()
    }

    #[test]
    fn lattice_matches_closed_for_packets() {
        let ff = field1();
        let fs = [
            pk(0.0, 0.5, [0.0, 0.0], Complex64::new(1.0, 0.0)),
            pk(0.7, 0.3, [0.4, -1.0], Complex64::new(0.3, 0.8)),
            pk(-1.2, 0.8, [-0.5, 0.9], Complex64::new(-1.0, 0.2)),
        ];
        for f in &fs {
            for g in &fs {
                let (l, c) = (ff.inner_product(f, g).unwrap(), ff.inner_product_closed(f, g).unwrap());
                let scale = (ff.inner_product_closed(f, f).unwrap().re * ff.inner_product_closed(g, g).unwrap().re).sqrt();
                assert!((l - c).norm() <= 1e-9 * scale, "{l} vs {c}");
            }
        }
    }

    #[test]
    fn hermitian_exact() {
        let ff = field1();
        let f = pk(0.7, 0.3, [0.4, -1.0], Complex64::new(0.3, 0.8));
        let g = pk(-0.2, 0.6, [0.0, 0.5], Complex64::new(1.0, 0.0));
        assert_eq!(ff.inner_product(&f, &g).unwrap(), ff.inner_product(&g, &f).unwrap().conj());
        assert_eq!(ff.inner_product_closed(&f, &g).unwrap(), ff.inner_product_closed(&g, &f).unwrap().conj());
    }

    #[test]
    fn mass_mismatch_is_an_error() {
        let ff = field1();
        let f: TestFunction = GaussianPacket::new(&[0.0], 0.5, 2.0, &[0.0, 0.0], Complex64::new(1.0, 0.0)).unwrap().into();
        assert!(matches!(ff.inner_product(&f, &f), Err(Error::QuadratureMismatch(_))));
    }

    #[test]
    fn vectors_from_other_quadratures_rejected() {
        let a = field1();
        let b = FreeField::from_spec(SpacetimeDim::ONE_PLUS_ONE, &QuadratureSpec { m: 1.0, cutoff: 10.0, panels: 40, order: 16 })
            .unwrap();
        let f = pk(0.0, 0.5, [0.0, 0.0], Complex64::new(1.0, 0.0));
        let (va, vb) = (a.shell_vector(&f).unwrap(), b.shell_vector(&f).unwrap());
        assert!(a.quad.inner(&va, &vb).is_err());
    }

    #[test]
    fn disjoint_momenta_are_orthogonal() {
        let ff = field1();
        let f = pk(-5.0, 0.25, [0.0, 0.0], Complex64::new(1.0, 0.0));
        let g = pk(5.0, 0.25, [0.0, 0.0], Complex64::new(1.0, 0.0));
        let v = ff.inner_product(&f, &g).unwrap();
        let scale = (ff.inner_product(&f, &f).unwrap().re * ff.inner_product(&g, &g).unwrap().re).sqrt();
        assert!(v.norm() <= 1e-10 * scale);
    }

    #[test]
    fn real_self_commutator_vanishes() {
        let ff = field1();
        let g = Grid::new(vec![-1.0, -1.0], vec![0.05, 0.05], vec![41, 41]).unwrap();
        let b: TestFunction =
            BumpFunction::smooth(g, &[0.0, 0.0], &[0.9, 0.9], Complex64::new(1.0, 0.0), None).unwrap().into();
        let v = ff.commutator_value(&b, &b).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lorentz_invariance_lattice() {
        let ff = field1();
        let p = GaussianPacket::new(&[0.3], 0.6, 1.0, &[0.0, 0.2], Complex64::new(1.0, 0.0)).unwrap();
        let q = GaussianPacket::new(&[-0.1], 0.5, 1.0, &[0.3, -0.3], Complex64::new(0.5, 0.5)).unwrap();
        let base = ff.inner_product(&p.clone().into(), &q.clone().into()).unwrap();
        let b = Boost { axis: 1, rapidity: 0.6 };
        let v = ff.inner_product(&p.boosted(&b).unwrap().into(), &q.boosted(&b).unwrap().into()).unwrap();
        assert!((v - base).norm() <= 1e-6 * base.norm());
    }

    #[test]
    fn nyquist_guard() {
        let ff = field1();
        let g = Grid::new(vec![-1.2, -1.2], vec![0.3, 0.3], vec![9, 9]).unwrap();
        let b: TestFunction = BumpFunction::smooth(g, &[0.0, 0.0], &[0.9, 0.9], Complex64::new(1.0, 0.0), None).unwrap().into();
        assert!(matches!(ff.shell_vector(&b), Err(Error::QuadratureMismatch(_))));
    }

    #[test]
    fn quadrature_json_round_trip() {
        let q = MassShellQuadrature::from_spec(SpacetimeDim::ONE_PLUS_ONE, &QuadratureSpec { m: 1.0, cutoff: 3.0, panels: 2, order: 4 })
            .unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let back: MassShellQuadrature = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn gram_table_is_hermitian_and_matches_direct() {
        let mut reg = Registry::new(SpacetimeDim::ONE_PLUS_ONE);
        let a = reg.register("a", pk(0.2, 0.5, [0.0, 0.0], Complex64::new(1.0, 0.0))).unwrap();
        let b = reg.register("b", pk(-0.4, 0.7, [0.3, 0.1], Complex64::new(0.0, 1.0))).unwrap();
        let ff = field1();
        let t = GramTable::build(&reg, &ff, PairingMethod::Auto).unwrap();
        let direct = ff.inner_product_closed(reg.get(a).unwrap(), reg.get(b).unwrap()).unwrap();
        assert_eq!(t.pair(ModeLabel::plain(a), ModeLabel::plain(b)).unwrap(), direct);
        for &x in t.labels() {
            for &y in t.labels() {
                assert_eq!(t.pair(x, y).unwrap(), t.pair(y, x).unwrap().conj());
            }
        }
    }
}
