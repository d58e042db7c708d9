//! Minkowski-space helpers with signature (+,-,...,-).
//!
//! Vectors are plain `[f64]` slices of length `d_space + 1` with the time
//! component first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpacetimeDim {
    pub d_space: usize,
}

impl SpacetimeDim {
    pub const ONE_PLUS_ONE: SpacetimeDim = SpacetimeDim { d_space: 1 };
    pub const THREE_PLUS_ONE: SpacetimeDim = SpacetimeDim { d_space: 3 };

    pub fn new(d_space: usize) -> Result<Self> {
        match d_space {
            1 | 3 => Ok(SpacetimeDim { d_space }),
            _ => Err(Error::InvalidParameter(format!(
                "unsupported spatial dimension {d_space} (expected 1 or 3)"
            ))),
        }
    }

    /// Number of spacetime components.
    pub fn n(&self) -> usize {
        self.d_space + 1
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n(), got: v.len() })
        }
    }
}

/// Metric sign of component `i`.
#[inline]
pub fn eta(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = a[0] * b[0];
    for i in 1..a.len() {
        s -= a[i] * b[i];
    }
    s
}

/// Lowers the index: returns `eta * v`.
pub fn lower(v: &[f64]) -> Vec<f64> {
    v.iter().enumerate().map(|(i, x)| eta(i) * x).collect()
}

/// On-shell momentum with the given spatial part.
pub fn on_shell(m: f64, spatial: &[f64]) -> Vec<f64> {
    let k2: f64 = spatial.iter().map(|x| x * x).sum();
    let mut k = Vec::with_capacity(spatial.len() + 1);
    k.push((m * m + k2).sqrt());
    k.extend_from_slice(spatial);
    k
}

/// A Lorentz boost of rapidity `rapidity` along spatial axis `axis` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    pub axis: usize,
    pub rapidity: f64,
}

impl Boost {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let (ch, sh) = (self.rapidity.cosh(), self.rapidity.sinh());
        let mut out = v.to_vec();
        let (t, x) = (v[0], v[self.axis]);
        out[0] = ch * t + sh * x;
        out[self.axis] = sh * t + ch * x;
        out
    }
}

/// Axis-aligned spacetime box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn point(x: &[f64]) -> Self {
        SupportBox { lo: x.to_vec(), hi: x.to_vec() }
    }

    pub fn centre(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    pub fn union(&self, other: &SupportBox) -> SupportBox {
        SupportBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

/// Causal relation of one box relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Separation {
    /// Every point of the first box is in the closed causal past of every
    /// point of the second, with a strictly positive time gap.
    Past,
    Future,
    Spacelike,
    Overlapping,
}

/// Classifies box `a` relative to box `b`.
pub fn classify(a: &SupportBox, b: &SupportBox) -> Separation {
    let n = a.lo.len();
    // Extremes of |Δx| over the two boxes, per spatial axis.
    let mut max_dx2 = 0.0;
    let mut min_dx2 = 0.0;
    for i in 1..n {
        let far = (b.hi[i] - a.lo[i]).abs().max((a.hi[i] - b.lo[i]).abs());
        let gap = (b.lo[i] - a.hi[i]).max(a.lo[i] - b.hi[i]).max(0.0);
        max_dx2 += far * far;
        min_dx2 += gap * gap;
    }
    let (max_dx, min_dx) = (max_dx2.sqrt(), min_dx2.sqrt());
    // b later than a by at least this much
    let min_dt_fwd = b.lo[0] - a.hi[0];
    let min_dt_bwd = a.lo[0] - b.hi[0];
    let max_abs_dt = (b.hi[0] - a.lo[0]).abs().max((a.hi[0] - b.lo[0]).abs());
    if min_dt_fwd > 0.0 && min_dt_fwd >= max_dx {
        Separation::Past
    } else if min_dt_bwd > 0.0 && min_dt_bwd >= max_dx {
        Separation::Future
    } else if min_dx > max_abs_dt {
        Separation::Spacelike
    } else {
        Separation::Overlapping
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_preserves_interval() {
        let b = Boost { axis: 1, rapidity: 0.7 };
        let v = [1.3, -0.4, 2.0, 0.1];
        assert!((dot(&v, &v) - dot(&b.apply(&v), &b.apply(&v))).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let a = SupportBox { lo: vec![-1.0, -0.5], hi: vec![-0.8, 0.5] };
        let b = SupportBox { lo: vec![2.0, -0.5], hi: vec![3.0, 0.5] };
        assert_eq!(classify(&a, &b), Separation::Past);
        assert_eq!(classify(&b, &a), Separation::Future);
        let c = SupportBox { lo: vec![-0.1, 5.0], hi: vec![0.1, 6.0] };
        assert_eq!(classify(&a, &c), Separation::Spacelike);
        assert_eq!(classify(&a, &a), Separation::Overlapping);
    }

    #[test]
    fn rejects_two_space_dims() {
        assert!(SpacetimeDim::new(2).is_err());
    }
}
