//! Named test functions and the labels operators refer to them by.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::SpacetimeDim;
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FnId(pub u32);

/// A single-particle vector: the registered function itself or its complex
/// conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeLabel {
    pub id: FnId,
    pub conj: bool,
}

impl ModeLabel {
    pub fn plain(id: FnId) -> Self {
        ModeLabel { id, conj: false }
    }

    pub fn conjugated(id: FnId) -> Self {
        ModeLabel { id, conj: true }
    }

    pub fn flipped(self) -> Self {
        ModeLabel { id: self.id, conj: !self.conj }
    }
}

/// The smeared field `phi_f` (or its adjoint `phi_f^dagger = phi_{f*}`).
///
/// `phi_f = a(f*) + a^dagger(f)`, so the field contributes an annihilator
/// of the conjugate function and a creator of the function itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldLabel {
    pub id: FnId,
    #[serde(default)]
    pub dagger: bool,
}

impl FieldLabel {
    pub fn new(id: FnId) -> Self {
        FieldLabel { id, dagger: false }
    }

    pub fn dagger(id: FnId) -> Self {
        FieldLabel { id, dagger: true }
    }

    pub fn adjoint(self) -> Self {
        FieldLabel { id: self.id, dagger: !self.dagger }
    }

    /// Label of the smearing function actually used, `f` or `f*`.
    pub fn function(self) -> ModeLabel {
        ModeLabel { id: self.id, conj: self.dagger }
    }

    pub fn annihilator(self) -> ModeLabel {
        ModeLabel { id: self.id, conj: !self.dagger }
    }

    pub fn creator(self) -> ModeLabel {
        ModeLabel { id: self.id, conj: self.dagger }
    }
}

/// Source of the one-particle inner products `(h_a, h_b)` (antilinear in
/// the first slot).
pub trait Pairing: Sync {
    fn pair(&self, a: ModeLabel, b: ModeLabel) -> Result<Complex64>;

    /// `[phi_f, phi_g] = (f*, g) - (g*, f)`.
    fn commutator(&self, f: FieldLabel, g: FieldLabel) -> Result<Complex64> {
        Ok(self.pair(f.annihilator(), g.creator())? - self.pair(g.annihilator(), f.creator())?)
    }

    /// Two-point function `<phi_f phi_g>`.
    fn two_point(&self, f: FieldLabel, g: FieldLabel) -> Result<Complex64> {
        self.pair(f.annihilator(), g.creator())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    name: String,
    function: TestFunction,
}

/// Append-only store of test functions for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    dim: SpacetimeDim,
    entries: Vec<Entry>,
}

impl Registry {
    pub fn new(dim: SpacetimeDim) -> Self {
        Registry { dim, entries: Vec::new() }
    }

    pub fn dim(&self) -> SpacetimeDim {
        self.dim
    }

    pub fn register(&mut self, name: impl Into<String>, function: TestFunction) -> Result<FnId> {
        if function.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim.n(), got: function.dim().n() });
        }
        let id = FnId(self.entries.len() as u32);
        self.entries.push(Entry { name: name.into(), function });
        Ok(id)
    }

    pub fn get(&self, id: FnId) -> Result<&TestFunction> {
        self.entries.get(id.0 as usize).map(|e| &e.function).ok_or(Error::Unregistered(id))
    }

    pub fn name(&self, id: FnId) -> Result<&str> {
        self.entries.get(id.0 as usize).map(|e| e.name.as_str()).ok_or(Error::Unregistered(id))
    }

    pub fn find(&self, name: &str) -> Option<FnId> {
        self.entries.iter().position(|e| e.name == name).map(|i| FnId(i as u32))
    }

    /// The function a mode label stands for (conjugated if requested).
    pub fn resolve(&self, label: ModeLabel) -> Result<TestFunction> {
        let f = self.get(label.id)?;
        Ok(if label.conj { f.conj() } else { f.clone() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = FnId> {
        (0..self.entries.len() as u32).map(FnId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::GaussianPacket;

    #[test]
    fn field_label_modes() {
        let f = FieldLabel::new(FnId(3));
        assert_eq!(f.annihilator(), ModeLabel::conjugated(FnId(3)));
        assert_eq!(f.creator(), ModeLabel::plain(FnId(3)));
        let fd = f.adjoint();
        assert_eq!(fd.annihilator(), ModeLabel::plain(FnId(3)));
        assert_eq!(fd.creator(), ModeLabel::conjugated(FnId(3)));
    }

    #[test]
    fn register_checks_dimension() {
        let mut r = Registry::new(SpacetimeDim::ONE_PLUS_ONE);
        let p = GaussianPacket::at_rest(SpacetimeDim::THREE_PLUS_ONE, 0.5, 1.0).unwrap();
        assert!(r.register("p", p.into()).is_err());
        assert!(matches!(r.get(FnId(0)), Err(Error::Unregistered(_))));
    }
}
