//! Discrete Fourier transforms of grid bumps with continuum normalization.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::spacetime::eta;
use crate::testfn::BumpFunction;

/// Fourier samples of a bump, `f~(k) ~ dV sum_n f(y_n) exp(i k.y_n)`, on the
/// frequency lattice of the zero-padded grid.
#[derive(Debug, Clone)]
pub struct GridFt {
    source: BumpFunction,
    pub padding: usize,
    /// Physical momentum component per FFT index, one list per axis.
    pub freqs: Vec<Vec<f64>>,
    pub shape: Vec<usize>,
    /// Row-major over `shape` in FFT index order.
    pub values: Vec<Complex64>,
}

impl GridFt {
    pub fn compute(source: &BumpFunction, padding: usize) -> GridFt {
        let grid = &source.grid;
        let n_axes = grid.n_axes();
        let padding = padding.max(1);
        let shape: Vec<usize> = grid.shape.iter().map(|s| s * padding).collect();
        let total: usize = shape.iter().product();

        let mut data = vec![Complex64::new(0.0, 0.0); total];
        for (flat, s) in source.samples.iter().enumerate() {
            let idx = grid.multi_index(flat);
            let pflat = idx.iter().zip(&shape).fold(0, |acc, (i, l)| acc * l + i);
            data[pflat] = *s;
        }

        // inverse FFTs compute sum_n x_n exp(+2 pi i j n / L)
        let mut planner = FftPlanner::<f64>::new();
        for axis in 0..n_axes {
            let len = shape[axis];
            let fft = planner.plan_fft_inverse(len);
            let stride: usize = shape[axis + 1..].iter().product();
            let outer: usize = shape[..axis].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * len * stride + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    fft.process(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }

        let freqs: Vec<Vec<f64>> = (0..n_axes)
            .map(|a| {
                let len = shape[a] as i64;
                (0..len)
                    .map(|j| {
                        let jw = if j >= (len + 1) / 2 { j - len } else { j };
                        eta(a) * 2.0 * std::f64::consts::PI * jw as f64 / (len as f64 * grid.spacing[a])
                    })
                    .collect()
            })
            .collect();

        let dv = grid.cell_volume();
        let mut values = data;
        for (flat, v) in values.iter_mut().enumerate() {
            let mut rem = flat;
            let mut k_dot_o = 0.0;
            for a in (0..n_axes).rev() {
                let j = rem % shape[a];
                rem /= shape[a];
                k_dot_o += eta(a) * freqs[a][j] * grid.origin[a];
            }
            *v *= Complex64::new(0.0, k_dot_o).exp() * dv;
        }

        GridFt { source: source.clone(), padding, freqs, shape, values }
    }

    pub fn source(&self) -> &BumpFunction {
        &self.source
    }

    /// Momentum vector of a lattice entry.
    pub fn momentum(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut k = vec![0.0; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            k[a] = self.freqs[a][rem % self.shape[a]];
            rem /= self.shape[a];
        }
        k
    }

    /// Exact trigonometric interpolant (the lattice sum evaluated at `k`).
    pub fn eval(&self, k: &[f64]) -> Complex64 {
        dtft(&self.source, k)
    }
}

/// `dV sum_n f(y_n) exp(i k.y_n)`, contracted axis by axis (last axis
/// first).
pub fn dtft(b: &BumpFunction, k: &[f64]) -> Complex64 {
    let grid = &b.grid;
    let mut buf: Vec<Complex64> = b.samples.clone();
    let mut len = buf.len();
    for a in (0..grid.n_axes()).rev() {
        let n = grid.shape[a];
        let w = eta(a) * k[a];
        let phase: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(0.0, w * (grid.origin[a] + i as f64 * grid.spacing[a])).exp()).collect();
        let outer = len / n;
        for o in 0..outer {
            let mut s = Complex64::new(0.0, 0.0);
            for (v, ph) in buf[o * n..(o + 1) * n].iter().zip(&phase) {
                s += v * ph;
            }
            buf[o] = s;
        }
        len = outer;
    }
    buf[0] * grid.cell_volume()
}
