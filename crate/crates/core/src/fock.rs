//! Truncated bosonic Fock spaces over a finite set of test functions.
//!
//! The Gram matrix `G_ij = (f_i, f_j)` is diagonalised, `G = U diag(l) U^dagger`;
//! eigenvalues below `1e-10 * trace` are null vectors of the pre-inner
//! product and are discarded. The remaining modes
//!
//! ```text
//! e_k = sum_i U_ik f_i / sqrt(l_k)
//! ```
//!
//! are orthonormal, and any single-particle vector `h` in their span acts as
//! `a^dagger(h) = sum_k (e_k, h) a_k^dagger`. States are occupation vectors
//! with at most `N` particles, grouped by particle number and ordered
//! lexicographically within each group.

use std::collections::HashMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::registry::{FieldLabel, FnId, ModeLabel, Pairing};
use crate::wick::OperatorPoly;

/// Relative eigenvalue floor for the null-mode quotient.
pub const NULL_FLOOR: f64 = 1e-10;
/// Largest relative residual `|h - P h|^2 / (h, h)` accepted when
/// projecting onto the modes.
pub const PROJECTION_TOL: f64 = 1e-8;
/// Default truncation.
pub const DEFAULT_MAX_PARTICLES: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockSpec {
    pub basis: Vec<FnId>,
    /// Row-major `(f_i, f_j)`.
    pub gram: Vec<Complex64>,
    pub max_particles: usize,
    /// Kept eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues dropped as null modes.
    pub discarded: Vec<f64>,
    /// Row-major `n x modes` eigenvector matrix `U` (kept columns only).
    u: Vec<Complex64>,
    states: Vec<Vec<u8>>,
    #[serde(skip)]
    index: HashMap<Vec<u8>, usize>,
    fingerprint: u64,
}

fn hermitian_eigen(n: usize, gram: &[Complex64]) -> (Vec<f64>, DMatrix<Complex64>) {
    let g = DMatrix::from_row_slice(n, n, gram);
    let eig = g.symmetric_eigen();
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

/// Occupation vectors over `modes` with total at most `n_max`, grouped by
/// total and lexicographic (as multisets of mode indices) within a group.
fn occupation_basis(modes: usize, n_max: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        let mut multiset = Vec::with_capacity(n);
        multisets(modes, n, 0, &mut multiset, &mut |ms| {
            let mut occ = vec![0u8; modes];
            for &k in ms {
                occ[k] += 1;
            }
            out.push(occ);
        });
    }
    out
}

fn multisets(modes: usize, left: usize, start: usize, cur: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if left == 0 {
        emit(cur);
        return;
    }
    for k in start..modes {
        cur.push(k);
        multisets(modes, left - 1, k, cur, emit);
        cur.pop();
    }
}

fn fnv_bits(vals: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in vals {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl FockSpec {
    /// Builds the space over `ids` using the pairing's `(f_i, f_j)`.
    pub fn build(ids: &[FnId], pairing: &dyn Pairing, max_particles: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyBasis);
        }
        let n = ids.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let v = pairing.pair(ModeLabel::plain(ids[i]), ModeLabel::plain(ids[j]))?;
                gram[i * n + j] = v;
                gram[j * n + i] = v.conj();
            }
            gram[i * n + i].im = 0.0;
        }
        FockSpec::from_gram(ids.to_vec(), gram, max_particles)
    }

    pub fn from_gram(basis: Vec<FnId>, gram: Vec<Complex64>, max_particles: usize) -> Result<Self> {
        let n = basis.len();
        if n == 0 {
            return Err(Error::EmptyBasis);
        }
        if gram.len() != n * n {
            return Err(invalid("gram matrix must be n x n"));
        }
        let trace: f64 = (0..n).map(|i| gram[i * n + i].re).sum();
        if !(trace > 0.0) {
            return Err(Error::EmptyBasis);
        }
        let (vals, vecs) = hermitian_eigen(n, &gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| vals[*b].total_cmp(&vals[*a]));
        let floor = NULL_FLOOR * trace;
        let (kept, dropped): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&k| vals[k] >= floor);
        if kept.is_empty() {
            return Err(Error::EmptyBasis);
        }
        let modes = kept.len();
        let mut u = Vec::with_capacity(n * modes);
        for i in 0..n {
            for &k in &kept {
                u.push(vecs[(i, k)]);
            }
        }
        let states = occupation_basis(modes, max_particles);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let fingerprint = fnv_bits(
            basis.iter().map(|b| b.0 as u64)
                .chain(gram.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]))
                .chain(std::iter::once(max_particles as u64)),
        );
        Ok(FockSpec {
            basis,
            gram,
            max_particles,
            eigenvalues: kept.iter().map(|&k| vals[k]).collect(),
            discarded: dropped.iter().map(|&k| vals[k]).collect(),
            u,
            states,
            index,
            fingerprint,
        })
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn min_gram_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().chain(&self.discarded).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        let n = self.basis.len();
        (0..n).map(|i| self.gram[i * n + i].re).sum()
    }

    fn state_index(&self, occ: &[u8]) -> Option<usize> {
        if self.index.is_empty() {
            self.states.iter().position(|s| s == occ)
        } else {
            self.index.get(occ).copied()
        }
    }

    /// Vacuum state vector.
    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::from_element(self.dim(), Complex64::new(0.0, 0.0));
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// Basis state with one particle in mode `k`.
    pub fn one_particle(&self, k: usize) -> Result<DVector<Complex64>> {
        if k >= self.modes() || self.max_particles == 0 {
            return Err(invalid("no such one-particle state"));
        }
        let mut occ = vec![0u8; self.modes()];
        occ[k] = 1;
        let mut v = DVector::from_element(self.dim(), Complex64::new(0.0, 0.0));
        v[self.state_index(&occ).expect("in basis")] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// `(f_i, e_k)` expressed as the coefficient matrix `c_ik`, so that
    /// `f_i = sum_k c_ik e_k` on the kept subspace.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let (n, m) = (self.basis.len(), self.modes());
        let mut c = Vec::with_capacity(n * m);
        for i in 0..n {
            for k in 0..m {
                c.push(self.u[i * m + k].conj() * self.eigenvalues[k].sqrt());
            }
        }
        c
    }

    /// Inner products reconstructed from the mode expansion,
    /// `sum_k conj(c_ik) c_jk`.
    pub fn reconstructed_gram(&self) -> Vec<Complex64> {
        let (n, m) = (self.basis.len(), self.modes());
        let c = self.coefficients();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..m).map(|k| c[i * m + k].conj() * c[j * m + k]).sum();
            }
        }
        out
    }

    /// Mode amplitudes `(e_k, h)` of a single-particle vector, after
    /// checking that `h` lies in the modelled subspace.
    pub fn project(&self, h: ModeLabel, pairing: &dyn Pairing) -> Result<Vec<Complex64>> {
        let (n, m) = (self.basis.len(), self.modes());
        let overlaps: Vec<Complex64> =
            self.basis.iter().map(|&b| pairing.pair(ModeLabel::plain(b), h)).collect::<Result<_>>()?;
        let amps: Vec<Complex64> = (0..m)
            .map(|k| {
                let s: Complex64 = (0..n).map(|i| self.u[i * m + k].conj() * overlaps[i]).sum();
                s / self.eigenvalues[k].sqrt()
            })
            .collect();
        let hh = pairing.pair(h, h)?.re;
        let captured: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let residual = (hh - captured).max(0.0);
        if !(hh > 0.0) || residual > PROJECTION_TOL * hh {
            let rel = if hh > 0.0 { residual / hh } else { f64::INFINITY };
            return Err(Error::OutsideSubspace { id: h.id, residual: rel });
        }
        Ok(amps)
    }

    /// Matrix of `a^dagger(h)` (`creator = true`) or `a(h)`.
    fn ladder(&self, amps: &[Complex64], creator: bool) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut mtx = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (col, occ) in self.states.iter().enumerate() {
            for (k, amp) in amps.iter().enumerate() {
                let mut next = occ.clone();
                let factor = if creator {
                    next[k] += 1;
                    (next[k] as f64).sqrt()
                } else {
                    if occ[k] == 0 {
                        continue;
                    }
                    next[k] -= 1;
                    (occ[k] as f64).sqrt()
                };
                if let Some(row) = self.state_index(&next) {
                    let c = if creator { *amp } else { amp.conj() };
                    mtx[(row, col)] += c * factor;
                }
            }
        }
        mtx
    }

    pub fn creator_matrix(&self, h: ModeLabel, pairing: &dyn Pairing) -> Result<FockMatrix> {
        let amps = self.project(h, pairing)?;
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: self.ladder(&amps, true) })
    }

    pub fn annihilator_matrix(&self, h: ModeLabel, pairing: &dyn Pairing) -> Result<FockMatrix> {
        let amps = self.project(h, pairing)?;
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: self.ladder(&amps, false) })
    }

    /// `phi_f = a(f*) + a^dagger(f)`; transitions above `N` particles are
    /// dropped.
    pub fn field_matrix(&self, label: FieldLabel, pairing: &dyn Pairing) -> Result<FockMatrix> {
        let a = self.annihilator_matrix(label.annihilator(), pairing)?;
        let c = self.creator_matrix(label.creator(), pairing)?;
        a.add(&c)
    }

    /// Sum over monomials of creator matrices times annihilator matrices.
    pub fn poly_matrix(&self, p: &OperatorPoly, pairing: &dyn Pairing) -> Result<FockMatrix> {
        let d = self.dim();
        let mut cre: HashMap<ModeLabel, DMatrix<Complex64>> = HashMap::new();
        let mut ann: HashMap<ModeLabel, DMatrix<Complex64>> = HashMap::new();
        let mut total = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (key, coeff) in p.terms() {
            let mut m = DMatrix::<Complex64>::identity(d, d);
            for h in &key.creators {
                if !cre.contains_key(h) {
                    cre.insert(*h, self.creator_matrix(*h, pairing)?.matrix);
                }
                m = &m * &cre[h];
            }
            for h in &key.annihilators {
                if !ann.contains_key(h) {
                    ann.insert(*h, self.annihilator_matrix(*h, pairing)?.matrix);
                }
                m = &m * &ann[h];
            }
            total += m * *coeff;
        }
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: total })
    }

    /// `<0| phi_1 ... phi_n |0>` by applying field matrices to the vacuum,
    /// rightmost first. Exact once `max_particles >= n / 2`.
    pub fn vev(&self, labels: &[FieldLabel], pairing: &dyn Pairing) -> Result<Complex64> {
        let mut cache: HashMap<FieldLabel, DMatrix<Complex64>> = HashMap::new();
        let mut state = self.vacuum();
        for l in labels.iter().rev() {
            if !cache.contains_key(l) {
                cache.insert(*l, self.field_matrix(*l, pairing)?.matrix);
            }
            state = &cache[l] * state;
        }
        Ok(state[0])
    }

    pub fn identity(&self) -> FockMatrix {
        FockMatrix { fingerprint: self.fingerprint, matrix: DMatrix::identity(self.dim(), self.dim()) }
    }

    /// Total number operator.
    pub fn number_operator(&self) -> FockMatrix {
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (i, s) in self.states.iter().enumerate() {
            m[(i, i)] = Complex64::new(s.iter().map(|&v| v as f64).sum(), 0.0);
        }
        FockMatrix { fingerprint: self.fingerprint, matrix: m }
    }

    /// Indices of states with at most `n` particles.
    pub fn states_up_to(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.states[i].iter().map(|&v| v as usize).sum::<usize>() <= n).collect()
    }
}

/// Dense operator on the occupation basis of one [`FockSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix {
    fingerprint: u64,
    pub matrix: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct FockMatrixJson {
    rows: usize,
    cols: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<[f64; 2]>,
}

/// Magic bytes of the binary matrix layout.
pub const BINARY_MAGIC: &[u8; 8] = b"FOCKMAT1";

impl FockMatrix {
    fn same_spec(&self, other: &FockMatrix) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn add(&self, other: &FockMatrix) -> Result<FockMatrix> {
        self.same_spec(other)?;
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &FockMatrix) -> Result<FockMatrix> {
        self.same_spec(other)?;
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: &self.matrix - &other.matrix })
    }

    pub fn mul(&self, other: &FockMatrix) -> Result<FockMatrix> {
        self.same_spec(other)?;
        Ok(FockMatrix { fingerprint: self.fingerprint, matrix: &self.matrix * &other.matrix })
    }

    pub fn adjoint(&self) -> FockMatrix {
        FockMatrix { fingerprint: self.fingerprint, matrix: self.matrix.adjoint() }
    }

    pub fn commutator(&self, other: &FockMatrix) -> Result<FockMatrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// `<state| M |state>`; the state must be normalised to 1e-12.
    pub fn expectation(&self, state: &DVector<Complex64>) -> Result<Complex64> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: state.len() });
        }
        if (state.norm_squared() - 1.0).abs() > 1e-12 {
            return Err(invalid("state is not normalised"));
        }
        Ok(state.dotc(&(&self.matrix * state)))
    }

    /// `<vac| M |vac>`.
    pub fn vacuum_element(&self) -> Complex64 {
        self.matrix[(0, 0)]
    }

    /// Largest entry of `M - M^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (r, c) = self.matrix.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let v = self.matrix[(i, j)];
                data.push([v.re, v.im]);
            }
        }
        serde_json::to_value(FockMatrixJson { rows: r, cols: c, data }).expect("serialisable")
    }

    /// `FOCKMAT1`, `u64` rows, `u64` cols, then row-major little-endian
    /// `f64` pairs `(re, im)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (r, c) = self.matrix.shape();
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(r as u64).to_le_bytes())?;
        w.write_all(&(c as u64).to_le_bytes())?;
        for i in 0..r {
            for j in 0..c {
                let v = self.matrix[(i, j)];
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Reads a matrix written by [`FockMatrix::write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<DMatrix<Complex64>> {
    let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut m = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            m[(i, j)] = Complex64::new(re, f64::from_le_bytes(word));
        }
    }
    Ok(m)
}
