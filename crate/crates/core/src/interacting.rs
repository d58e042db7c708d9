//! The smeared interaction `L[f]` and the first-order nonlinear field.
//!
//! For a test function `f` with scale `lambda = lambda[f]`, every centre `x_j`
//! of a finite node rule carries an envelope `h_j = f_{lambda, x_j}` with
//! norm `s_j = (h_j, h_j)` and the local operator `u_j = phi_{h_j} phi_{h_j}^dagger`.
//! Then
//!
//! ```text
//! L[f] = sum_j w_j sum_q g_q s_j^{p_q} :u_j^q:
//! xi_f = phi_f - i sum_j w_j (T[phi_f L_j] - L_j phi_f)
//! ```
//!
//! where `T` orders by centre time (later operator to the left, ties
//! symmetrized).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freefield::{packet_norm_closed, FreeField, GramTable, PairingMethod};
use crate::numeric::{gauss_legendre, ComplexSum};
use crate::registry::{FieldLabel, FnId, ModeLabel, Pairing, Registry};
use crate::spacetime::{classify, Separation, SpacetimeDim, SupportBox};
use crate::testfn::{contract_envelope, integrate_product, EnvelopeSpec, GaussianPacket, ScaleFunctionalSpec, TestFunction};
use crate::wick::{OperatorPoly, Wick};

/// Largest power `q` accepted in a term.
pub const MAX_Q: u32 = 3;
/// Relative tolerance under which two centre times count as equal.
pub const TIE_TOL: f64 = 1e-12;
/// Default relative threshold of the automatic centre box.
pub const DEFAULT_EPS: f64 = 1e-3;

fn default_eps() -> f64 {
    DEFAULT_EPS
}

/// One monomial `g s^p u^q` of the interaction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionTerm {
    pub g: f64,
    #[serde(default)]
    pub p: f64,
    pub q: u32,
}

/// Node rule for the integral over envelope centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterGrid {
    Explicit { nodes: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Tensor Gauss-Legendre rule on the effective support of `f`.
    Auto {
        per_axis: usize,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

/// Overall factor applied to every envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// The envelope as contracted.
    #[default]
    Raw,
    /// Rescaled so that `|int h| = 1`.
    UnitMass,
}

/// What plays the role of `u` at each centre.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocalOperator {
    /// `phi_h phi_h^dagger` for the envelope at scale `lambda`.
    #[default]
    Bilinear,
    /// `sum_a w_a phi_{h_a} phi_{h_a}^dagger` with `h_a` contracted by
    /// `s_a lambda`, for `(s_a, w_a)` in `alpha_nodes`.
    Smeared { alpha_nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub terms: Vec<InteractionTerm>,
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub scale: ScaleFunctionalSpec,
    pub center_grid: CenterGrid,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub local: LocalOperator,
}

impl InteractionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(invalid("interaction needs at least one term"));
        }
        for t in &self.terms {
            if t.q == 0 || t.q > MAX_Q {
                return Err(invalid(format!("term power q = {} outside 1..={MAX_Q}", t.q)));
            }
            if !t.g.is_finite() || !t.p.is_finite() {
                return Err(invalid("term coefficients must be finite"));
            }
        }
        self.envelope.validate()?;
        match &self.center_grid {
            CenterGrid::Explicit { nodes, weights } => {
                if nodes.is_empty() || nodes.len() != weights.len() {
                    return Err(invalid("centre grid needs matching non-empty node and weight lists"));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(invalid("centre weights must be non-negative"));
                }
            }
            CenterGrid::Auto { per_axis, eps } => {
                if *per_axis == 0 {
                    return Err(invalid("automatic centre grid needs at least one node per axis"));
                }
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(invalid("automatic centre grid needs 0 < eps < 1"));
                }
            }
        }
        if let LocalOperator::Smeared { alpha_nodes } = &self.local {
            if alpha_nodes.is_empty() {
                return Err(invalid("smeared local operator needs at least one node"));
            }
            if alpha_nodes.iter().any(|(s, w)| !(*s > 0.0) || !(*w >= 0.0)) {
                return Err(invalid("smearing nodes need positive scales and non-negative weights"));
            }
        }
        Ok(())
    }

    /// Whether every coupling vanishes.
    pub fn is_free(&self) -> bool {
        self.terms.iter().all(|t| t.g == 0.0)
    }

    /// Centre nodes and weights for `f`.
    pub fn centers(&self, f: &TestFunction) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let n = f.dim().n();
        match &self.center_grid {
            CenterGrid::Explicit { nodes, weights } => {
                for x in nodes {
                    f.dim().check(x)?;
                }
                Ok((nodes.clone(), weights.clone()))
            }
            CenterGrid::Auto { per_axis, eps } => {
                let b = f.effective_support(*eps);
                let rule = gauss_legendre(*per_axis);
                let total = per_axis.pow(n as u32);
                let mut nodes = Vec::with_capacity(total);
                let mut weights = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut x = vec![0.0; n];
                    let mut w = 1.0;
                    for a in (0..n).rev() {
                        let (t, wt) = rule[rem % per_axis];
                        rem /= per_axis;
                        let half = 0.5 * (b.hi[a] - b.lo[a]);
                        x[a] = b.lo[a] + half * (t + 1.0);
                        w *= wt * half;
                    }
                    nodes.push(x);
                    weights.push(w);
                }
                Ok((nodes, weights))
            }
        }
    }
}

/// Causal relation of an envelope's effective support to a target support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PastConeRelation {
    pub envelope: SupportBox,
    pub target: SupportBox,
    pub separation: Separation,
}

impl PastConeRelation {
    pub fn new(envelope: SupportBox, target: SupportBox) -> Self {
        let separation = classify(&envelope, &target);
        PastConeRelation { envelope, target, separation }
    }
}

/// One centre of the interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmearedLocalOp {
    pub center: Vec<f64>,
    pub weight: f64,
    /// Registered envelopes and their weights in `u`.
    pub atoms: Vec<(FnId, f64)>,
    /// `s = sum_a w_a (h_a, h_a)`.
    pub norm: f64,
    /// Time coordinate used by the ordering.
    pub time: f64,
    pub support: SupportBox,
}

/// The envelope `f_{lambda, x}` after normalization.
pub fn envelope_at(f: &TestFunction, spec: &EnvelopeSpec, norm: Normalization, lambda: f64, x: &[f64]) -> Result<TestFunction> {
    let h = contract_envelope(f, spec, lambda, x)?;
    match norm {
        Normalization::Raw => Ok(h),
        Normalization::UnitMass => {
            let mass = h.integral()?.norm();
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::Degenerate(format!("envelope at {x:?} has no mass")));
            }
            Ok(h.scaled(1.0 / mass))
        }
    }
}

/// `|int h g / int h - g(x)|`: how far the normalized envelope is from a
/// point evaluation at `x`.
pub fn envelope_delta_residual(h: &TestFunction, probe: &TestFunction, x: &[f64]) -> Result<f64> {
    let c = h.integral()?;
    if c.norm() == 0.0 {
        return Err(Error::Degenerate("envelope has zero integral".into()));
    }
    Ok((integrate_product(h, probe)? / c - probe.eval(x)).norm())
}

/// `sum_a w_a phi_{h_a} phi_{h_a}^dagger` (not normal ordered).
pub fn smeared_local_op(wick: &Wick, atoms: &[(FnId, f64)]) -> Result<OperatorPoly> {
    if atoms.is_empty() {
        return Err(invalid("smeared local operator needs at least one node"));
    }
    let mut out = OperatorPoly::zero();
    for &(id, w) in atoms {
        let pair = wick.field_product(&[FieldLabel::new(id), FieldLabel::dagger(id)])?;
        out = out.add(&pair.scale(Complex64::new(w, 0.0)));
    }
    Ok(out)
}

/// `:u^q:` for `u = sum_a w_a phi_a phi_a^dagger`, ordering applied once to
/// each full monomial.
pub fn normal_ordered_power(wick: &Wick, atoms: &[(FnId, f64)], q: u32) -> Result<OperatorPoly> {
    let mut out = OperatorPoly::zero();
    let k = atoms.len();
    let total = k.pow(q);
    for flat in 0..total {
        let mut rem = flat;
        let mut labels = Vec::with_capacity(2 * q as usize);
        let mut w = 1.0;
        for _ in 0..q {
            let (id, wa) = atoms[rem % k];
            rem /= k;
            w *= wa;
            labels.push(FieldLabel::new(id));
            labels.push(FieldLabel::dagger(id));
        }
        if w == 0.0 {
            continue;
        }
        wick.pairing().pair(labels[0].annihilator(), labels[0].creator())?;
        out = out.add(&wick.normal_ordered_fields(&labels)?.scale(Complex64::new(w, 0.0)));
    }
    Ok(out)
}

fn tie(ta: f64, tb: f64) -> bool {
    (ta - tb).abs() <= TIE_TOL * ta.abs().max(tb.abs()).max(1.0)
}

/// `T[A B]` by centre time: the later factor stands to the left; equal
/// times give `(AB + BA)/2`.
pub fn time_order_pair(wick: &Wick, a: &OperatorPoly, ta: f64, b: &OperatorPoly, tb: f64) -> Result<OperatorPoly> {
    if tie(ta, tb) {
        let ab = wick.mul(a, b)?;
        let ba = wick.mul(b, a)?;
        Ok(ab.add(&ba).scale(Complex64::new(0.5, 0.0)))
    } else if ta > tb {
        wick.mul(a, b)
    } else {
        wick.mul(b, a)
    }
}

/// The interaction of one test function, with all envelopes registered and
/// their pairings tabulated.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub spec: InteractionSpec,
    pub dim: SpacetimeDim,
    pub f: FnId,
    pub lambda: f64,
    /// Time coordinate of `phi_f` for the ordering.
    pub f_time: f64,
    pub f_support: SupportBox,
    pub locals: Vec<SmearedLocalOp>,
    /// Centres dropped because their envelope has zero norm.
    pub dropped: usize,
    pub table: GramTable,
}

impl Interaction {
    /// Registers the envelopes of `f` and tabulates every pairing among `f`,
    /// `extra` and the envelopes.
    pub fn build(
        registry: &mut Registry,
        f: FnId,
        spec: &InteractionSpec,
        field: &FreeField,
        method: PairingMethod,
        extra: &[FnId],
    ) -> Result<Self> {
        spec.validate()?;
        let func = registry.get(f)?.clone();
        let base_name = registry.name(f)?.to_string();
        let ff = field.pair_with(&func, &func, method)?.re;
        let lambda = spec.scale.evaluate(ff)?;
        let (nodes, weights) = spec.centers(&func)?;
        let scales: Vec<(f64, f64)> = match &spec.local {
            LocalOperator::Bilinear => vec![(1.0, 1.0)],
            LocalOperator::Smeared { alpha_nodes } => alpha_nodes.clone(),
        };

        let envelopes: Vec<Vec<TestFunction>> = nodes
            .par_iter()
            .map(|x| {
                scales
                    .iter()
                    .map(|&(s, _)| envelope_at(&func, &spec.envelope, spec.normalization, s * lambda, x))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        let mut atom_ids = Vec::with_capacity(nodes.len());
        for (j, hs) in envelopes.iter().enumerate() {
            let mut ids = Vec::with_capacity(hs.len());
            for (a, h) in hs.iter().enumerate() {
                let name = if hs.len() == 1 { format!("{base_name}@env{j}") } else { format!("{base_name}@env{j}.{a}") };
                ids.push(registry.register(name, h.clone())?);
            }
            atom_ids.push(ids);
        }

        let mut ids = vec![f];
        ids.extend(extra.iter().copied().filter(|e| *e != f));
        ids.extend(atom_ids.iter().flatten().copied());
        let table = GramTable::build_for(registry, field, method, &ids)?;

        let mut locals = Vec::new();
        let mut dropped = 0;
        for (j, x) in nodes.iter().enumerate() {
            let atoms: Vec<(FnId, f64)> = atom_ids[j].iter().zip(&scales).map(|(id, &(_, w))| (*id, w)).collect();
            let mut norm = 0.0;
            for &(id, w) in &atoms {
                norm += w * table.pair(ModeLabel::plain(id), ModeLabel::plain(id))?.re;
            }
            if !(norm > 0.0) {
                dropped += 1;
                continue;
            }
            let mut support: Option<SupportBox> = None;
            for h in &envelopes[j] {
                let b = h.effective_support(DEFAULT_EPS);
                support = Some(match support {
                    None => b,
                    Some(s) => s.union(&b),
                });
            }
            let support = support.expect("at least one atom");
            let time = support.centre()[0];
            locals.push(SmearedLocalOp { center: x.clone(), weight: weights[j], atoms, norm, time, support });
        }
        if locals.is_empty() {
            return Err(Error::Degenerate("every envelope has zero norm".into()));
        }
        let f_support = func.effective_support(DEFAULT_EPS);
        Ok(Interaction {
            spec: spec.clone(),
            dim: func.dim(),
            f,
            lambda,
            f_time: func.centre()[0],
            f_support,
            locals,
            dropped,
            table,
        })
    }

    pub fn wick(&self) -> Wick<'_> {
        Wick::new(&self.table)
    }

    pub fn phi_f(&self) -> OperatorPoly {
        OperatorPoly::field(FieldLabel::new(self.f))
    }

    /// `u_j` at centre `j`.
    pub fn local_op(&self, j: usize) -> Result<OperatorPoly> {
        smeared_local_op(&self.wick(), &self.locals[j].atoms)
    }

    /// `L_j = sum_q g_q s_j^{p_q} :u_j^q:` (without the centre weight).
    pub fn local_term(&self, j: usize) -> Result<OperatorPoly> {
        let wick = self.wick();
        let loc = &self.locals[j];
        let mut out = OperatorPoly::zero();
        for t in &self.spec.terms {
            if t.g == 0.0 {
                continue;
            }
            let c = t.g * loc.norm.powf(t.p);
            out = out.add(&normal_ordered_power(&wick, &loc.atoms, t.q)?.scale(Complex64::new(c, 0.0)));
        }
        Ok(out)
    }

    /// `L[f]`, checked to be self-adjoint.
    pub fn assemble_l(&self) -> Result<OperatorPoly> {
        let parts: Vec<OperatorPoly> = (0..self.locals.len())
            .into_par_iter()
            .map(|j| Ok(self.local_term(j)?.scale(Complex64::new(self.locals[j].weight, 0.0))))
            .collect::<Result<_>>()?;
        let l = parts.iter().fold(OperatorPoly::zero(), |acc, p| acc.add(p));
        let asym = l.rel_diff(&l.adjoint());
        if asym > 1e-12 {
            return Err(Error::Inconsistent(format!("L[f] is not self-adjoint: {asym:.3e}")));
        }
        Ok(l)
    }

    /// Relation of centre `j`'s envelope to the support of `f`.
    pub fn relation(&self, j: usize) -> PastConeRelation {
        PastConeRelation::new(self.locals[j].support.clone(), self.f_support.clone())
    }

    pub fn all_centers(&self, sep: Separation) -> bool {
        (0..self.locals.len()).all(|j| self.relation(j).separation == sep)
    }

    /// `phi_f - i sum_j w_j (T[phi_f L_j] - L_j phi_f)`.
    pub fn xi_first_order(&self) -> Result<OperatorPoly> {
        let phi = self.phi_f();
        if self.spec.is_free() {
            return Ok(phi);
        }
        let wick = self.wick();
        let parts: Vec<OperatorPoly> = (0..self.locals.len())
            .into_par_iter()
            .map(|j| {
                let lj = self.local_term(j)?;
                let ordered = time_order_pair(&wick, &phi, self.f_time, &lj, self.locals[j].time)?;
                let after = wick.mul(&lj, &phi)?;
                Ok(ordered.sub(&after).scale(Complex64::new(0.0, -self.locals[j].weight)))
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().fold(phi, |acc, p| acc.add(p)))
    }

    /// `phi_f - i [phi_f, L]`, the retarded form.
    pub fn commutator_form(&self) -> Result<OperatorPoly> {
        let phi = self.phi_f();
        let l = self.assemble_l()?;
        let c = self.wick().commute_field_with_poly(FieldLabel::new(self.f), &l)?;
        Ok(phi.add(&c.scale(Complex64::new(0.0, -1.0))))
    }

    /// Compares `<phi_probe (xi_f - phi_f)>` from the operator products with
    /// the same quantity assembled from scalar commutators `[phi_f, phi_h]`
    /// and two-point functions. Returns the relative residual.
    pub fn retarded_form_check(&self, probe: FnId) -> Result<f64> {
        if self.dim.d_space != 1 {
            return Err(Error::Geometry("retarded form check is defined in 1+1 dimensions".into()));
        }
        if !self.all_centers(Separation::Past) {
            return Err(Error::Geometry("every centre must be strictly in the past of f".into()));
        }
        let wick = self.wick();
        let p = FieldLabel::new(probe);
        let correction = self.xi_first_order()?.sub(&self.phi_f());
        let by_products = wick.mul(&OperatorPoly::field(p), &correction)?.vacuum_expectation();

        // [phi_f, :u^q:] has 2q - 1 fields left; only q = 1 survives the
        // vacuum expectation with a single probe field.
        let fl = FieldLabel::new(self.f);
        let mut acc = ComplexSum::default();
        for loc in &self.locals {
            for t in self.spec.terms.iter().filter(|t| t.q == 1 && t.g != 0.0) {
                let c = loc.weight * t.g * loc.norm.powf(t.p);
                for &(id, w) in &loc.atoms {
                    let (h, hd) = (FieldLabel::new(id), FieldLabel::dagger(id));
                    let term = self.table.commutator(fl, h)? * self.table.two_point(p, hd)?
                        + self.table.commutator(fl, hd)? * self.table.two_point(p, h)?;
                    acc.add(Complex64::new(0.0, -c * w) * term);
                }
            }
        }
        let by_scalars = acc.value();
        let scale = by_products.norm().max(by_scalars.norm());
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok((by_products - by_scalars).norm() / scale)
    }

    /// `sum_{j,k} w_j w_k |(u_j, u_k)|^{2q}` with `q` from the leading term
    /// and `(u_j, u_k) = sum_{a,b} w_a w_b (h_a, h_b)`.
    pub fn loop_scalar(&self) -> Result<f64> {
        let q = self.spec.terms[0].q;
        let n = self.locals.len();
        let mut overlaps = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut s = ComplexSum::default();
                for &(a, wa) in &self.locals[j].atoms {
                    for &(b, wb) in &self.locals[k].atoms {
                        s.add(self.table.pair(ModeLabel::plain(a), ModeLabel::plain(b))? * (wa * wb));
                    }
                }
                overlaps.push(s.value());
            }
        }
        let weights: Vec<f64> = self.locals.iter().map(|l| l.weight).collect();
        loop_kernel(&weights, &overlaps, q)
    }

    /// `|<phi_f^dagger (xi_f - phi_f)>|`.
    pub fn first_order_two_point(&self) -> Result<f64> {
        let correction = self.xi_first_order()?.sub(&self.phi_f());
        let left = OperatorPoly::field(FieldLabel::dagger(self.f));
        Ok(self.wick().mul(&left, &correction)?.vacuum_expectation().norm())
    }
}

/// `sum_{j,k} w_j w_k |O_jk|^{2q}` for a row-major overlap matrix `O`.
pub fn loop_kernel(weights: &[f64], overlaps: &[Complex64], q: u32) -> Result<f64> {
    let n = weights.len();
    if overlaps.len() != n * n {
        return Err(invalid("overlap matrix must be n x n"));
    }
    let mut acc = crate::numeric::CompensatedSum::default();
    for j in 0..n {
        for k in 0..n {
            acc.add(weights[j] * weights[k] * overlaps[j * n + k].norm().powi(2 * q as i32));
        }
    }
    Ok(acc.value())
}

/// Packet parameters with `mu` left free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketFamily {
    pub k: Vec<f64>,
    pub m: f64,
    pub center: Vec<f64>,
    #[serde(default = "unit_amp")]
    pub amp: [f64; 2],
}

fn unit_amp() -> [f64; 2] {
    [1.0, 0.0]
}

impl PacketFamily {
    pub fn at(&self, mu: f64) -> Result<GaussianPacket> {
        GaussianPacket::new(&self.k, mu, self.m, &self.center, Complex64::new(self.amp[0], self.amp[1]))
    }

    pub fn dim(&self) -> Result<SpacetimeDim> {
        SpacetimeDim::new(self.k.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepObservable {
    LoopScalar,
    FirstOrder2pt,
}

/// One row of a `mu` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub observable: f64,
    /// Time half-width of the packet's effective support.
    pub width: f64,
    /// `(F, F)`.
    pub norm: f64,
}

pub const SWEEP_HEADER: &str = "mu,observable,width,norm";

/// Evaluates the observable for each packet `F(k, mu)`; rows come back in
/// the order of `mu_values`.
pub fn mu_sweep(
    family: &PacketFamily,
    mu_values: &[f64],
    spec: &InteractionSpec,
    field: &FreeField,
    method: PairingMethod,
    observable: SweepObservable,
) -> Result<Vec<SweepRow>> {
    if mu_values.is_empty() || mu_values.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(invalid("mu values must be positive"));
    }
    let up = mu_values.windows(2).all(|w| w[0] < w[1]);
    let down = mu_values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(invalid("mu values must be strictly sorted"));
    }
    spec.validate()?;
    let dim = family.dim()?;
    mu_values
        .par_iter()
        .map(|&mu| {
            let packet = family.at(mu)?;
            let mut reg = Registry::new(dim);
            let f = reg.register("F", packet.clone().into())?;
            let width = 0.5 * {
                let b = TestFunction::from(packet.clone()).effective_support(DEFAULT_EPS);
                b.hi[0] - b.lo[0]
            };
            let norm = packet_norm_closed(&packet);
            let value = if observable == SweepObservable::FirstOrder2pt && spec.is_free() {
                0.0
            } else {
                let inter = Interaction::build(&mut reg, f, spec, field, method, &[])?;
                match observable {
                    SweepObservable::LoopScalar => inter.loop_scalar()?,
                    SweepObservable::FirstOrder2pt => inter.first_order_two_point()?,
                }
            };
            if !value.is_finite() {
                return Err(Error::Degenerate(format!("observable overflowed at mu = {mu}")));
            }
            Ok(SweepRow { mu, observable: value, width, norm })
        })
        .collect()
}

/// CSV rendering with [`SWEEP_HEADER`]; floats in shortest round-trip form.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.mu, r.observable, r.width, r.norm));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpec;
    use crate::freefield::QuadratureSpec;
    use crate::testfn::EnvelopeVariant;

    fn field1() -> FreeField {
        FreeField::from_spec(SpacetimeDim::ONE_PLUS_ONE, &QuadratureSpec::default_for(SpacetimeDim::ONE_PLUS_ONE, 1.0))
            .unwrap()
    }

    fn packet(k: f64, mu: f64, c: [f64; 2]) -> TestFunction {
        GaussianPacket::new(&[k], mu, 1.0, &c, Complex64::new(1.0, 0.0)).unwrap().into()
    }

    fn spec(terms: Vec<InteractionTerm>, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> InteractionSpec {
        InteractionSpec {
            terms,
            envelope: EnvelopeSpec::new(EnvelopeVariant::SupportRestricted),
            scale: ScaleFunctionalSpec { p1_coeff: 3.0, p1_power: 0.0 },
            center_grid: CenterGrid::Explicit { nodes, weights },
            normalization: Normalization::Raw,
            local: LocalOperator::Bilinear,
        }
    }

    fn term(g: f64, p: f64, q: u32) -> InteractionTerm {
        InteractionTerm { g, p, q }
    }

    fn setup(s: &InteractionSpec, f: TestFunction) -> (Registry, Interaction) {
        let mut reg = Registry::new(SpacetimeDim::ONE_PLUS_ONE);
        let id = reg.register("f", f).unwrap();
        let inter = Interaction::build(&mut reg, id, s, &field1(), PairingMethod::Closed, &[]).unwrap();
        (reg, inter)
    }

    #[test]
    fn validation() {
        let mut s = spec(vec![term(1.0, 0.0, 4)], vec![vec![0.0, 0.0]], vec![1.0]);
        assert!(s.validate().is_err());
        s.terms = vec![];
        assert!(s.validate().is_err());
        s.terms = vec![term(1.0, 0.0, 1)];
        s.center_grid = CenterGrid::Explicit { nodes: vec![vec![0.0, 0.0]], weights: vec![-1.0] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_center_bilinear_has_zero_vev_and_one_particle_value() {
        let s = spec(vec![term(0.7, 0.0, 1)], vec![vec![0.0, 0.0]], vec![1.0]);
        let (_, inter) = setup(&s, packet(0.3, 0.6, [0.0, 0.0]));
        let l = inter.assemble_l().unwrap();
        assert_eq!(l.vacuum_expectation(), Complex64::new(0.0, 0.0));
        assert_eq!(l.rel_diff(&l.adjoint()), 0.0);

        // <1_h| L |1_h> with |1_h> = a^dagger(h)|0> / |h|
        let h = inter.locals[0].atoms[0].0;
        let fock = FockSpec::build(&[h], &inter.table, 2).unwrap();
        let cre = fock.creator_matrix(ModeLabel::plain(h), &inter.table).unwrap();
        let state = &cre.matrix * fock.vacuum();
        let state = state.unscale(state.norm());
        let lm = fock.poly_matrix(&l, &inter.table).unwrap();
        let v = lm.expectation(&state).unwrap();
        let hh = inter.table.pair(ModeLabel::plain(h), ModeLabel::plain(h)).unwrap().re;
        let hch = inter.table.pair(ModeLabel::conjugated(h), ModeLabel::plain(h)).unwrap().norm_sqr();
        let want = 0.7 * (hh * hh + hch) / hh;
        assert!((v.re - want).abs() < 1e-10 * want && v.im.abs() < 1e-10 * want, "{v} vs {want}");
    }

    #[test]
    fn time_ordering_conventions() {
        let s = spec(vec![term(1.0, 0.0, 1)], vec![vec![0.0, 0.0]], vec![1.0]);
        let (_, inter) = setup(&s, packet(0.0, 0.5, [0.0, 0.0]));
        let w = inter.wick();
        let a = inter.phi_f();
        let b = inter.local_op(0).unwrap();
        assert_eq!(time_order_pair(&w, &a, 1.0, &b, 0.0).unwrap(), w.mul(&a, &b).unwrap());
        assert_eq!(time_order_pair(&w, &a, 0.0, &b, 1.0).unwrap(), w.mul(&b, &a).unwrap());
        let sym = w.mul(&a, &b).unwrap().add(&w.mul(&b, &a).unwrap()).scale(Complex64::new(0.5, 0.0));
        assert_eq!(time_order_pair(&w, &a, 2.0, &b, 2.0).unwrap(), sym);
    }

    #[test]
    fn free_limit_is_exact() {
        let s = spec(vec![term(0.0, 0.0, 2)], vec![vec![-3.0, 0.0]], vec![1.0]);
        let (_, inter) = setup(&s, packet(0.2, 0.5, [0.0, 0.0]));
        assert_eq!(inter.xi_first_order().unwrap(), inter.phi_f());
    }

    #[test]
    fn past_and_future_centres() {
        let f = packet(0.2, 0.8, [0.0, 0.0]);
        let past = spec(vec![term(0.4, 0.5, 1), term(-0.2, 0.0, 2)], vec![vec![-30.0, 0.3], vec![-26.0, -0.5]], vec![0.6, 0.4]);
        let (_, inter) = setup(&past, f.clone());
        assert!(inter.all_centers(Separation::Past));
        let xi = inter.xi_first_order().unwrap();
        let cf = inter.commutator_form().unwrap();
        assert!(xi.rel_diff(&cf) <= 1e-12, "{}", xi.rel_diff(&cf));
        assert!(xi.rel_diff(&inter.phi_f()) > 1e-6);

        let future = spec(vec![term(0.4, 0.5, 1)], vec![vec![30.0, 0.3]], vec![1.0]);
        let (_, inter) = setup(&future, f);
        assert!(inter.all_centers(Separation::Future));
        let xi = inter.xi_first_order().unwrap();
        assert!(xi.rel_diff(&inter.phi_f()) <= 1e-12);
    }

    #[test]
    fn retarded_form_residual() {
        let mut reg = Registry::new(SpacetimeDim::ONE_PLUS_ONE);
        let f = reg.register("f", packet(0.2, 0.8, [0.0, 0.0])).unwrap();
        let g = reg.register("g", packet(-0.4, 0.6, [-4.0, 1.0])).unwrap();
        let s = spec(vec![term(0.3, 0.0, 1)], vec![vec![-30.0, 0.3], vec![-28.0, 0.0]], vec![0.5, 0.5]);
        let inter = Interaction::build(&mut reg, f, &s, &field1(), PairingMethod::Closed, &[g]).unwrap();
        let r = inter.retarded_form_check(g).unwrap();
        assert!(r <= 1e-10, "{r}");

        let s0 = spec(vec![term(0.0, 0.0, 1)], vec![vec![-30.0, 0.3]], vec![1.0]);
        let inter = Interaction::build(&mut reg, f, &s0, &field1(), PairingMethod::Closed, &[g]).unwrap();
        assert_eq!(inter.retarded_form_check(g).unwrap(), 0.0);

        let near = spec(vec![term(0.3, 0.0, 1)], vec![vec![0.0, 0.0]], vec![1.0]);
        let inter = Interaction::build(&mut reg, f, &near, &field1(), PairingMethod::Closed, &[g]).unwrap();
        assert!(matches!(inter.retarded_form_check(g), Err(Error::Geometry(_))));
    }

    #[test]
    fn smeared_local_operator() {
        let f = packet(0.1, 0.5, [0.0, 0.0]);
        let mut s = spec(vec![term(1.0, 0.0, 1)], vec![vec![0.0, 0.0]], vec![1.0]);
        let (_, single) = setup(&s, f.clone());
        s.local = LocalOperator::Smeared { alpha_nodes: vec![(1.0, 0.5), (1.0, 0.5)] };
        let (_, halves) = setup(&s, f.clone());
        let a = single.local_op(0).unwrap();
        let b = halves.local_op(0).unwrap();
        // labels differ (separately registered), compare through the vacuum
        // two-point function of u|0>
        let two_point = |i: &Interaction, u: &OperatorPoly| i.wick().mul(&u.adjoint(), u).unwrap().vacuum_expectation();
        let (va, vb) = (two_point(&single, &a), two_point(&halves, &b));
        assert!((va - vb).norm() <= 1e-12 * va.norm(), "{va} {vb}");

        s.local = LocalOperator::Smeared { alpha_nodes: vec![(0.7, 0.3), (1.6, 0.7)] };
        let (_, mixed) = setup(&s, f);
        let u = mixed.local_op(0).unwrap();
        let connected = mixed.wick().mul(&u.adjoint(), &u).unwrap().vacuum_expectation()
            - u.adjoint().vacuum_expectation() * u.vacuum_expectation();
        // oracle: full minus disconnected four-point functions
        let atoms = &mixed.locals[0].atoms;
        let w = mixed.wick();
        let mut want = Complex64::new(0.0, 0.0);
        for &(a, wa) in atoms {
            for &(b, wb) in atoms {
                let labels = [FieldLabel::new(a), FieldLabel::dagger(a), FieldLabel::new(b), FieldLabel::dagger(b)];
                let full = w.vev_pairings(&labels).unwrap();
                let disc = w.vev_pairings(&labels[..2]).unwrap() * w.vev_pairings(&labels[2..]).unwrap();
                want += wa * wb * (full - disc);
            }
        }
        // closed form of the connected part
        let mut direct = Complex64::new(0.0, 0.0);
        for &(a, wa) in atoms {
            for &(b, wb) in atoms {
                let pr = |x: ModeLabel, y: ModeLabel| mixed.table.pair(x, y).unwrap();
                let (pa, ca, pb, cb) = (ModeLabel::plain(a), ModeLabel::conjugated(a), ModeLabel::plain(b), ModeLabel::conjugated(b));
                direct += wa * wb * (pr(ca, pb) * pr(pa, cb) + pr(ca, cb) * pr(pa, pb));
            }
        }
        assert!((connected - want).norm() <= 1e-12 * want.norm(), "{connected} {want}");
        assert!((want - direct).norm() <= 1e-12 * direct.norm(), "{want} {direct}");
    }

    #[test]
    fn loop_scalar_single_centre_and_trend() {
        let s = spec(vec![term(1.0, 0.0, 2)], vec![vec![0.0, 0.0]], vec![0.8]);
        let (_, inter) = setup(&s, packet(0.0, 0.5, [0.0, 0.0]));
        let h = inter.locals[0].atoms[0].0;
        let hh = inter.table.pair(ModeLabel::plain(h), ModeLabel::plain(h)).unwrap().re;
        let v = inter.loop_scalar().unwrap();
        assert!((v - 0.64 * hh.powi(4)).abs() <= 1e-12 * v);

        let mut s = s;
        s.normalization = Normalization::UnitMass;
        s.scale = ScaleFunctionalSpec { p1_coeff: 0.5, p1_power: 1.0 };
        let fam = PacketFamily { k: vec![0.0], m: 1.0, center: vec![0.0, 0.0], amp: [1.0, 0.0] };
        let mus = [0.8, 0.4, 0.2];
        let rows = mu_sweep(&fam, &mus, &s, &field1(), PairingMethod::Closed, SweepObservable::LoopScalar).unwrap();
        assert!(rows.windows(2).all(|w| w[1].observable > w[0].observable), "{rows:?}");
        for r in &rows {
            assert!((r.width * r.mu / (rows[0].width * rows[0].mu) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn free_sweep_is_zero() {
        let s = spec(vec![term(0.0, 0.0, 1)], vec![vec![0.0, 0.0]], vec![1.0]);
        let fam = PacketFamily { k: vec![0.3], m: 1.0, center: vec![0.0, 0.0], amp: [1.0, 0.0] };
        let rows = mu_sweep(&fam, &[0.5, 0.4], &s, &field1(), PairingMethod::Closed, SweepObservable::FirstOrder2pt).unwrap();
        assert!(rows.iter().all(|r| r.observable == 0.0));
        assert!(sweep_csv(&rows).starts_with("mu,observable,width,norm\n"));
        assert!(mu_sweep(&fam, &[0.5, 0.6, 0.4], &s, &field1(), PairingMethod::Closed, SweepObservable::LoopScalar).is_err());
    }

    #[test]
    fn auto_grid_weights_cover_box() {
        let s = InteractionSpec {
            center_grid: CenterGrid::Auto { per_axis: 3, eps: 1e-3 },
            ..spec(vec![term(1.0, 0.0, 1)], vec![], vec![])
        };
        let f = packet(0.0, 0.5, [1.0, 2.0]);
        let (nodes, weights) = s.centers(&f).unwrap();
        assert_eq!(nodes.len(), 9);
        let b = f.effective_support(1e-3);
        let vol = (b.hi[0] - b.lo[0]) * (b.hi[1] - b.lo[1]);
        assert!((weights.iter().sum::<f64>() / vol - 1.0).abs() < 1e-12);
        assert!(nodes.iter().all(|x| b.contains(x)));
    }
}
