//! Normal-ordered polynomials in creation and annihilation operators.
//!
//! Single-particle vectors are [`ModeLabel`]s; all contractions come from a
//! [`Pairing`], `[a(h), a^dagger(h')] = (h, h')`. A smeared field is
//! `phi_f = a(f*) + a^dagger(f)`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{FieldLabel, ModeLabel, Pairing};

/// Relative pruning threshold for coefficients.
pub const PRUNE_REL: f64 = 1e-15;
/// Guard for [`vev_recursive`].
pub const MAX_RECURSIVE: usize = 24;
/// Guard for [`vev_pairings`].
pub const MAX_PAIRINGS: usize = 12;

/// Creators and annihilators of a normal-ordered monomial, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonomialKey {
    pub creators: Vec<ModeLabel>,
    pub annihilators: Vec<ModeLabel>,
}

impl MonomialKey {
    pub fn identity() -> Self {
        MonomialKey { creators: Vec::new(), annihilators: Vec::new() }
    }

    pub fn new(mut creators: Vec<ModeLabel>, mut annihilators: Vec<ModeLabel>) -> Self {
        creators.sort();
        annihilators.sort();
        MonomialKey { creators, annihilators }
    }

    pub fn degree(&self) -> usize {
        self.creators.len() + self.annihilators.len()
    }
}

#[derive(Serialize, Deserialize)]
struct MonomialJson {
    creators: Vec<ModeLabel>,
    annihilators: Vec<ModeLabel>,
    coeff: [f64; 2],
}

/// Finite sum of normal-ordered monomials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<MonomialJson>", from = "Vec<MonomialJson>")]
pub struct OperatorPoly {
    terms: BTreeMap<MonomialKey, Complex64>,
}

impl From<OperatorPoly> for Vec<MonomialJson> {
    fn from(p: OperatorPoly) -> Self {
        p.terms
            .into_iter()
            .map(|(k, c)| MonomialJson { creators: k.creators, annihilators: k.annihilators, coeff: [c.re, c.im] })
            .collect()
    }
}

impl From<Vec<MonomialJson>> for OperatorPoly {
    fn from(v: Vec<MonomialJson>) -> Self {
        let mut p = OperatorPoly::zero();
        for m in v {
            p.add_term(MonomialKey::new(m.creators, m.annihilators), Complex64::new(m.coeff[0], m.coeff[1]));
        }
        p
    }
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly { terms: BTreeMap::new() }
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut p = OperatorPoly::zero();
        p.add_term(MonomialKey::identity(), c);
        p
    }

    pub fn identity() -> Self {
        OperatorPoly::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn monomial(key: MonomialKey, c: Complex64) -> Self {
        let mut p = OperatorPoly::zero();
        p.add_term(key, c);
        p
    }

    pub fn creator(h: ModeLabel) -> Self {
        OperatorPoly::monomial(MonomialKey::new(vec![h], vec![]), Complex64::new(1.0, 0.0))
    }

    pub fn annihilator(h: ModeLabel) -> Self {
        OperatorPoly::monomial(MonomialKey::new(vec![], vec![h]), Complex64::new(1.0, 0.0))
    }

    /// `phi_f = a(f*) + a^dagger(f)` (or the adjoint field).
    pub fn field(label: FieldLabel) -> Self {
        OperatorPoly::annihilator(label.annihilator()).add(&OperatorPoly::creator(label.creator()))
    }

    pub fn add_term(&mut self, key: MonomialKey, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Complex64 {
        self.terms.get(key).cloned().unwrap_or_default()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(MonomialKey::degree).max().unwrap_or(0)
    }

    pub fn add(&self, other: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c);
        }
        out.pruned()
    }

    pub fn sub(&self, other: &OperatorPoly) -> OperatorPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> OperatorPoly {
        OperatorPoly { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }.pruned()
    }

    /// Drops coefficients below `PRUNE_REL` of the largest one.
    pub fn pruned(mut self) -> OperatorPoly {
        let thr = PRUNE_REL * self.max_coeff();
        self.terms.retain(|_, c| c.norm() > thr);
        self
    }

    /// Formal adjoint: creators and annihilators swap, coefficients conjugate.
    pub fn adjoint(&self) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (k, c) in &self.terms {
            out.add_term(MonomialKey::new(k.annihilators.clone(), k.creators.clone()), c.conj());
        }
        out
    }

    /// Coefficient of the identity monomial.
    pub fn vacuum_expectation(&self) -> Complex64 {
        self.coeff(&MonomialKey::identity())
    }

    /// Largest coefficient difference to `other`, relative to the largest
    /// coefficient of either.
    pub fn rel_diff(&self, other: &OperatorPoly) -> f64 {
        let scale = self.max_coeff().max(other.max_coeff());
        if scale == 0.0 {
            return 0.0;
        }
        self.sub_raw(other).max_coeff() / scale
    }

    fn sub_raw(&self, other: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c);
        }
        out
    }

    /// Every mode label occurring in the polynomial.
    pub fn labels(&self) -> Vec<ModeLabel> {
        let mut v: Vec<ModeLabel> =
            self.terms.keys().flat_map(|k| k.creators.iter().chain(&k.annihilators).cloned()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Operator algebra over one pairing context.
pub struct Wick<'a> {
    pairing: &'a dyn Pairing,
}

impl<'a> Wick<'a> {
    pub fn new(pairing: &'a dyn Pairing) -> Self {
        Wick { pairing }
    }

    pub fn pairing(&self) -> &dyn Pairing {
        self.pairing
    }

    pub fn field_op(&self, label: FieldLabel) -> Result<OperatorPoly> {
        // resolves both labels so that unregistered ids fail here
        self.pairing.pair(label.annihilator(), label.creator())?;
        Ok(OperatorPoly::field(label))
    }

    /// Normal-ordered product. The annihilators of each left monomial are
    /// moved through the creators of each right monomial; every partial
    /// matching contributes its contractions.
    pub fn mul(&self, a: &OperatorPoly, b: &OperatorPoly) -> Result<OperatorPoly> {
        let mut out = OperatorPoly::zero();
        let mut cache: HashMap<(ModeLabel, ModeLabel), Complex64> = HashMap::new();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let ann = &ka.annihilators;
                let cre = &kb.creators;
                let mut contr = vec![Complex64::new(0.0, 0.0); ann.len() * cre.len()];
                for (i, x) in ann.iter().enumerate() {
                    for (j, y) in cre.iter().enumerate() {
                        contr[i * cre.len() + j] = match cache.get(&(*x, *y)) {
                            Some(v) => *v,
                            None => {
                                let v = self.pairing.pair(*x, *y)?;
                                cache.insert((*x, *y), v);
                                v
                            }
                        };
                    }
                }
                let mut used = vec![false; cre.len()];
                let mut kept_ann = Vec::with_capacity(ann.len());
                matchings(0, ann.len(), cre.len(), &contr, &mut used, &mut kept_ann, Complex64::new(1.0, 0.0), &mut |w, used, kept| {
                    let mut creators = ka.creators.clone();
                    creators.extend(cre.iter().zip(used).filter(|(_, u)| !**u).map(|(c, _)| *c));
                    let mut annihilators: Vec<ModeLabel> = kept.iter().map(|&i| ann[i]).collect();
                    annihilators.extend_from_slice(&kb.annihilators);
                    out.add_term(MonomialKey::new(creators, annihilators), ca * cb * w);
                });
            }
        }
        Ok(out.pruned())
    }

    /// Left-to-right product of several polynomials.
    pub fn product(&self, factors: &[OperatorPoly]) -> Result<OperatorPoly> {
        let mut acc = OperatorPoly::identity();
        for f in factors {
            acc = self.mul(&acc, f)?;
        }
        Ok(acc)
    }

    /// `phi_{l1} ... phi_{ln}` as a normal-ordered polynomial.
    pub fn field_product(&self, labels: &[FieldLabel]) -> Result<OperatorPoly> {
        let ops: Vec<OperatorPoly> = labels.iter().map(|l| self.field_op(*l)).collect::<Result<_>>()?;
        self.product(&ops)
    }

    /// `:phi_{l1} ... phi_{ln}:`, the product with every contraction removed.
    pub fn normal_ordered_fields(&self, labels: &[FieldLabel]) -> Result<OperatorPoly> {
        let n = labels.len();
        if n > MAX_RECURSIVE {
            return Err(Error::TooLarge { n, limit: MAX_RECURSIVE });
        }
        let mut out = OperatorPoly::zero();
        for mask in 0u32..(1u32 << n) {
            let mut cre = Vec::new();
            let mut ann = Vec::new();
            for (i, l) in labels.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    cre.push(l.creator());
                } else {
                    ann.push(l.annihilator());
                }
            }
            out.add_term(MonomialKey::new(cre, ann), Complex64::new(1.0, 0.0));
        }
        Ok(out)
    }

    /// `[phi_l, P]` computed as `phi_l P - P phi_l`, checked against the
    /// derivation expansion.
    pub fn commute_field_with_poly(&self, label: FieldLabel, p: &OperatorPoly) -> Result<OperatorPoly> {
        let phi = self.field_op(label)?;
        let direct = self.mul(&phi, p)?.sub(&self.mul(p, &phi)?);
        let expansion = self.commutator_derivation(label, p)?;
        let scale = p.max_coeff() * self.field_scale(label, p)?;
        let diff = direct.sub_raw(&expansion).max_coeff();
        if diff > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Inconsistent(format!("commutator expansion off by {diff:.3e}")));
        }
        Ok(direct)
    }

    fn field_scale(&self, label: FieldLabel, p: &OperatorPoly) -> Result<f64> {
        let mut s = 0.0f64;
        for h in p.labels() {
            s = s.max(self.pairing.pair(label.annihilator(), h)?.norm());
            s = s.max(self.pairing.pair(h, label.creator())?.norm());
        }
        Ok(s * p.max_degree().max(1) as f64)
    }

    /// `[phi_l, P]` by the derivation rule: each creator `a^dagger(c)` of a
    /// monomial contributes `(l_ann, c)` times the monomial without it, and
    /// each annihilator `a(h)` contributes `-(h, l_cre)`.
    pub fn commutator_derivation(&self, label: FieldLabel, p: &OperatorPoly) -> Result<OperatorPoly> {
        let mut out = OperatorPoly::zero();
        for (k, c) in &p.terms {
            for i in 0..k.creators.len() {
                let w = self.pairing.pair(label.annihilator(), k.creators[i])?;
                let mut rest = k.creators.clone();
                rest.remove(i);
                out.add_term(MonomialKey::new(rest, k.annihilators.clone()), c * w);
            }
            for i in 0..k.annihilators.len() {
                let w = self.pairing.pair(k.annihilators[i], label.creator())?;
                let mut rest = k.annihilators.clone();
                rest.remove(i);
                out.add_term(MonomialKey::new(k.creators.clone(), rest), -c * w);
            }
        }
        Ok(out.pruned())
    }

    /// Contraction matrix `C[i][j] = <phi_i phi_j>` for `i < j`.
    fn contractions(&self, labels: &[FieldLabel]) -> Result<Vec<Complex64>> {
        let n = labels.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i + 1..n {
                c[i * n + j] = self.pairing.two_point(labels[i], labels[j])?;
            }
        }
        Ok(c)
    }

    /// `<phi_1 ... phi_n>` by removing the last field and contracting it
    /// with each earlier one, memoized on the set of remaining indices.
    pub fn vev_recursive(&self, labels: &[FieldLabel]) -> Result<Complex64> {
        let n = labels.len();
        if n > MAX_RECURSIVE {
            return Err(Error::TooLarge { n, limit: MAX_RECURSIVE });
        }
        if n % 2 == 1 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let c = self.contractions(labels)?;
        let mut memo: HashMap<u32, Complex64> = HashMap::new();
        let full = (1u32 << n) - 1;
        Ok(recurse(full, n, &c, &mut memo))
    }

    /// `<phi_1 ... phi_n>` as an explicit sum over perfect matchings, each
    /// pair `i < j` weighted by `<phi_i phi_j>`.
    pub fn vev_pairings(&self, labels: &[FieldLabel]) -> Result<Complex64> {
        let n = labels.len();
        if n > MAX_PAIRINGS {
            return Err(Error::TooLarge { n, limit: MAX_PAIRINGS });
        }
        if n % 2 == 1 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let c = self.contractions(labels)?;
        let mut terms = Vec::new();
        perfect_matchings(&mut (0..n).collect(), &mut Vec::new(), &mut |pairs| {
            terms.push(pairs.iter().fold(Complex64::new(1.0, 0.0), |acc, &(i, j)| acc * c[i * n + j]));
        });
        Ok(crate::numeric::complex_sum(terms))
    }
}

fn recurse(mask: u32, n: usize, c: &[Complex64], memo: &mut HashMap<u32, Complex64>) -> Complex64 {
    if mask == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if let Some(v) = memo.get(&mask) {
        return *v;
    }
    let last = 31 - mask.leading_zeros() as usize;
    let rest = mask & !(1u32 << last);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..last {
        if rest >> i & 1 == 1 {
            acc += c[i * n + last] * recurse(rest & !(1u32 << i), n, c, memo);
        }
    }
    memo.insert(mask, acc);
    acc
}

fn perfect_matchings(rest: &mut Vec<usize>, pairs: &mut Vec<(usize, usize)>, visit: &mut dyn FnMut(&[(usize, usize)])) {
    if rest.is_empty() {
        visit(pairs);
        return;
    }
    let first = rest.remove(0);
    for k in 0..rest.len() {
        let partner = rest.remove(k);
        pairs.push((first, partner));
        perfect_matchings(rest, pairs, visit);
        pairs.pop();
        rest.insert(k, partner);
    }
    rest.insert(0, first);
}

/// Enumerates partial matchings of annihilators `i..n_ann` into unused
/// creators, calling `emit(weight, used_creators, unmatched_annihilators)`.
#[allow(clippy::too_many_arguments)]
fn matchings(
    i: usize,
    n_ann: usize,
    n_cre: usize,
    contr: &[Complex64],
    used: &mut Vec<bool>,
    kept: &mut Vec<usize>,
    w: Complex64,
    emit: &mut dyn FnMut(Complex64, &[bool], &[usize]),
) {
    if i == n_ann {
        emit(w, used, kept);
        return;
    }
    kept.push(i);
    matchings(i + 1, n_ann, n_cre, contr, used, kept, w, emit);
    kept.pop();
    for j in 0..n_cre {
        if !used[j] {
            used[j] = true;
            matchings(i + 1, n_ann, n_cre, contr, used, kept, w * contr[i * n_cre + j], emit);
            used[j] = false;
        }
    }
}
