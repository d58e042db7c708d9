use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spacetime::{SpacetimeDim, SupportBox};

/// Uniform rectangular lattice; nodes are `origin + i * spacing` with
/// `0 <= i[a] < shape[a]`, stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let g = Grid { origin, spacing, shape };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `[lo, hi]` with (at most) the requested spacing per axis.
    pub fn covering(b: &SupportBox, spacing: &[f64]) -> Result<Self> {
        let mut shape = Vec::new();
        let mut sp = Vec::new();
        for i in 0..b.lo.len() {
            let len = b.hi[i] - b.lo[i];
            let n = ((len / spacing[i]).ceil() as usize).max(1) + 1;
            shape.push(n);
            sp.push(if n > 1 { len / (n - 1) as f64 } else { spacing[i] });
        }
        Grid::new(b.lo.clone(), sp, shape)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.origin.len();
        if self.spacing.len() != n || self.shape.len() != n {
            return Err(invalid("grid axis counts disagree"));
        }
        SpacetimeDim::new(n.saturating_sub(1))?;
        if self.spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(invalid("grid spacing must be positive"));
        }
        if self.shape.iter().any(|s| *s == 0) {
            return Err(invalid("grid extent must be at least one node"));
        }
        Ok(())
    }

    pub fn n_axes(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n_axes()];
        for a in (0..self.n_axes()).rev() {
            idx[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    pub fn translated(&self, shift: &[f64]) -> Grid {
        Grid { origin: self.origin.iter().zip(shift).map(|(o, s)| o + s).collect(), ..self.clone() }
    }

    pub fn bounds(&self) -> SupportBox {
        SupportBox {
            lo: self.origin.clone(),
            hi: (0..self.n_axes()).map(|a| self.origin[a] + (self.shape[a] - 1) as f64 * self.spacing[a]).collect(),
        }
    }
}

/// Compactly supported function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub grid: Grid,
    pub samples: Vec<Complex64>,
    pub support_mask: Vec<bool>,
}

/// `exp(1 - 1/(1 - u^2))` on `|u| < 1`, zero elsewhere; peak value 1.
pub fn smooth_profile(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// Snap tolerance for reading values at (numerically) exact nodes.
const NODE_SNAP: f64 = 1e-10;

impl BumpFunction {
    pub fn new(grid: Grid, samples: Vec<Complex64>, support_mask: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.len() || support_mask.len() != grid.len() {
            return Err(invalid("bump sample count does not match grid"));
        }
        let mut samples = samples;
        for (s, m) in samples.iter_mut().zip(&support_mask) {
            if !m {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        Ok(BumpFunction { grid, samples, support_mask })
    }

    /// Samples `f` on the grid; the mask marks nodes where `f` is nonzero.
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: Grid, f: F) -> Result<Self> {
        let samples: Vec<Complex64> = grid.nodes().map(|y| f(&y)).collect();
        let mask = samples.iter().map(|s| *s != Complex64::new(0.0, 0.0)).collect();
        BumpFunction::new(grid, samples, mask)
    }

    /// Product of smooth 1D profiles about `center` with the given half
    /// widths, optionally modulated by `exp(-i k.y)` for a carrier momentum.
    pub fn smooth(
        grid: Grid,
        center: &[f64],
        half_widths: &[f64],
        amp: Complex64,
        carrier: Option<&[f64]>,
    ) -> Result<Self> {
        if half_widths.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("bump half widths must be positive"));
        }
        let samples: Vec<Complex64> = grid
            .nodes()
            .map(|y| {
                let env: f64 = (0..y.len()).map(|a| smooth_profile((y[a] - center[a]) / half_widths[a])).product();
                let phase = carrier.map(|k| -crate::spacetime::dot(k, &y)).unwrap_or(0.0);
                amp * env * Complex64::new(0.0, phase).exp()
            })
            .collect();
        let mask = grid
            .nodes()
            .map(|y| (0..y.len()).all(|a| ((y[a] - center[a]) / half_widths[a]).abs() < 1.0))
            .collect();
        BumpFunction::new(grid, samples, mask)
    }

    pub fn dim(&self) -> SpacetimeDim {
        SpacetimeDim { d_space: self.grid.n_axes() - 1 }
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn eval(&self, y: &[f64]) -> Complex64 {
        let n = self.grid.n_axes();
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for a in 0..n {
            let u = (y[a] - self.grid.origin[a]) / self.grid.spacing[a];
            let last = (self.grid.shape[a] - 1) as f64;
            if u < -NODE_SNAP || u > last + NODE_SNAP || !u.is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            let r = u.round();
            if (u - r).abs() <= NODE_SNAP {
                base[a] = r as usize;
                frac[a] = 0.0;
            } else {
                let i = u.floor() as usize;
                base[a] = i;
                frac[a] = u - i as f64;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = [0usize; 4];
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    idx[a] = base[a] + 1;
                } else {
                    w *= 1.0 - frac[a];
                    idx[a] = base[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            acc += self.samples[self.grid.flat_index(&idx[..n])] * w;
        }
        acc
    }

    pub fn conj(&self) -> Self {
        BumpFunction { samples: self.samples.iter().map(|s| s.conj()).collect(), ..self.clone() }
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        BumpFunction { grid: self.grid.translated(shift), ..self.clone() }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        BumpFunction { samples: self.samples.iter().map(|s| s * factor).collect(), ..self.clone() }
    }

    /// Bounding box of the support mask (grid-aligned).
    pub fn support_box(&self) -> SupportBox {
        let n = self.grid.n_axes();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for (i, m) in self.support_mask.iter().enumerate() {
            if *m {
                let y = self.grid.node(i);
                for a in 0..n {
                    lo[a] = lo[a].min(y[a]);
                    hi[a] = hi[a].max(y[a]);
                }
            }
        }
        if lo[0].is_infinite() {
            let c = self.grid.bounds().centre();
            return SupportBox::point(&c);
        }
        SupportBox { lo, hi }
    }

    /// Riemann sum over the lattice.
    pub fn integral(&self) -> Complex64 {
        crate::numeric::complex_sum(self.samples.iter().cloned()) * self.grid.cell_volume()
    }

    /// Linear combination of bumps sharing one grid.
    pub fn linear_combination(terms: &[(Complex64, &BumpFunction)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| invalid("empty linear combination"))?.1;
        let mut samples = vec![Complex64::new(0.0, 0.0); first.samples.len()];
        let mut mask = vec![false; first.samples.len()];
        for (c, b) in terms {
            if b.grid != first.grid {
                return Err(Error::InvalidParameter("bumps live on different grids".into()));
            }
            for i in 0..samples.len() {
                samples[i] += c * b.samples[i];
                mask[i] |= b.support_mask[i];
            }
        }
        BumpFunction::new(first.grid.clone(), samples, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Grid {
        Grid::new(vec![-1.0, -1.0], vec![0.1, 0.1], vec![21, 21]).unwrap()
    }

    #[test]
    fn node_values_are_exact() {
        let b = BumpFunction::smooth(grid2(), &[0.0, 0.0], &[0.8, 0.8], Complex64::new(1.0, 0.0), Some(&[1.0, 0.3]))
            .unwrap();
        for i in [0, 57, 220, 300, 440] {
            assert_eq!(b.eval(&b.grid.node(i)), b.samples[i]);
        }
    }

    #[test]
    fn zero_outside_grid() {
        let b = BumpFunction::smooth(grid2(), &[0.0, 0.0], &[0.8, 0.8], Complex64::new(1.0, 0.0), None).unwrap();
        assert_eq!(b.eval(&[1.5, 0.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let g = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2]).unwrap();
        let b = BumpFunction::from_fn(g, |y| Complex64::new(1.0 + 2.0 * y[0] + 3.0 * y[1], 0.0)).unwrap();
        assert!((b.eval(&[0.25, 0.5]).re - (1.0 + 0.5 + 1.5)).abs() < 1e-14);
    }

    #[test]
    fn support_box_is_mask_bbox() {
        let b = BumpFunction::smooth(grid2(), &[0.0, 0.0], &[0.45, 0.25], Complex64::new(1.0, 0.0), None).unwrap();
        let s = b.support_box();
        assert!((s.lo[0] + 0.4).abs() < 1e-12 && (s.hi[0] - 0.4).abs() < 1e-12);
        assert!((s.lo[1] + 0.2).abs() < 1e-12 && (s.hi[1] - 0.2).abs() < 1e-12);
    }
}
