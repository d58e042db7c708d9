use num_complex::Complex64;
use proptest::prelude::*;

use tfreg_core::{
    Boost, FieldLabel, FnId, FockSpec, FreeField, GaussianPacket, GramTable, OperatorPoly, PairingMethod, QuadratureSpec, Registry,
    SpacetimeDim, TestFunction, Wick,
};

const D1: SpacetimeDim = SpacetimeDim::ONE_PLUS_ONE;

fn field() -> FreeField {
    FreeField::from_spec(D1, &QuadratureSpec::default_for(D1, 1.0)).unwrap()
}

fn packet_params() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (-1.0..1.0f64, 0.5..1.2f64, -2.0..2.0f64, -2.0..2.0f64, 0.5..1.5f64, 0.0..6.28f64)
}

fn packet(p: (f64, f64, f64, f64, f64, f64)) -> GaussianPacket {
    let (k, mu, t, x, r, phase) = p;
    GaussianPacket::new(&[k], mu, 1.0, &[t, x], Complex64::from_polar(r, phase)).unwrap()
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.5..1.5f64, -1.5..1.5f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn registry(ps: &[(f64, f64, f64, f64, f64, f64)]) -> (Registry, Vec<FnId>) {
    let mut reg = Registry::new(D1);
    let ids = ps.iter().enumerate().map(|(i, p)| reg.register(format!("p{i}"), packet(*p).into()).unwrap()).collect();
    (reg, ids)
}

fn labels_from(ids: &[FnId], picks: &[(usize, bool)]) -> Vec<FieldLabel> {
    picks
        .iter()
        .map(|&(i, d)| {
            let id = ids[i % ids.len()];
            if d { FieldLabel::dagger(id) } else { FieldLabel::new(id) }
        })
        .collect()
}

fn close(a: Complex64, b: Complex64, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn inner_product_is_hermitian_and_sesquilinear(
        pf in packet_params(), pg in packet_params(), ph in packet_params(), alpha in complex(),
    ) {
        let field = field();
        let (f, g, h) = (packet(pf).to_gaussian(), packet(pg).to_gaussian(), packet(ph).to_gaussian());
        let t = |s: &tfreg_core::GaussianSum| TestFunction::Gaussian(s.clone());
        let ip = |a: &TestFunction, b: &TestFunction| field.inner_product_closed(a, b).unwrap();
        let (ft, gt, ht) = (t(&f), t(&g), t(&h));
        let fg = ip(&ft, &gt);
        prop_assert_eq!(fg, ip(&gt, &ft).conj());
        let scale = (ip(&ft, &ft).re * (ip(&gt, &gt).re + ip(&ht, &ht).re)).sqrt() * (1.0 + alpha.norm());
        let lin = ip(&ft, &t(&g.scaled(alpha).add(&h)));
        prop_assert!(close(lin, alpha * fg + ip(&ft, &ht), scale, 1e-9));
        let anti = ip(&t(&f.scaled(alpha)), &gt);
        prop_assert!(close(anti, alpha.conj() * fg, scale, 1e-9));
    }

    #[test]
    fn gram_matrices_are_positive(ps in prop::collection::vec(packet_params(), 1..5)) {
        let (reg, ids) = registry(&ps);
        let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &ids).unwrap();
        let spec = FockSpec::build(&ids, &table, 1).unwrap();
        prop_assert!(spec.min_gram_eigenvalue() >= -1e-10 * spec.trace());
    }

    #[test]
    fn scale_input_is_poincare_invariant(p in packet_params(), rapidity in -1.5..1.5f64, a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let field = field();
        let f = packet(p);
        let moved = f.boosted(&Boost { axis: 1, rapidity }).unwrap().translated(&[a, b]);
        let n0 = field.inner_product_closed(&f.clone().into(), &f.into()).unwrap().re;
        let n1 = field.inner_product_closed(&moved.clone().into(), &moved.into()).unwrap().re;
        prop_assert!((n1 - n0).abs() <= 1e-8 * n0);
    }

    #[test]
    fn wick_product_is_associative_and_vev_linear(
        ps in prop::collection::vec(packet_params(), 2..4),
        picks in prop::collection::vec((0usize..4, any::<bool>()), 6),
        alpha in complex(), beta in complex(),
    ) {
        let (reg, ids) = registry(&ps);
        let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &ids).unwrap();
        let w = Wick::new(&table);
        let l = labels_from(&ids, &picks);
        let a = w.field_product(&l[0..2]).unwrap();
        let b = w.field_product(&l[2..4]).unwrap();
        let c = w.field_product(&l[4..6]).unwrap();
        let left = w.mul(&w.mul(&a, &b).unwrap(), &c).unwrap();
        let right = w.mul(&a, &w.mul(&b, &c).unwrap()).unwrap();
        prop_assert!(left.rel_diff(&right) <= 1e-12);

        let combined = a.scale(alpha).add(&left.scale(beta)).vacuum_expectation();
        let (va, vl) = (a.vacuum_expectation(), left.vacuum_expectation());
        let scale = (alpha * va).norm() + (beta * vl).norm();
        prop_assert!(close(combined, alpha * va + beta * vl, scale, 1e-12));
    }

    #[test]
    fn commutator_is_a_derivation(
        ps in prop::collection::vec(packet_params(), 2..4),
        picks in prop::collection::vec((0usize..4, any::<bool>()), 4),
    ) {
        let (reg, ids) = registry(&ps);
        let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &ids).unwrap();
        let w = Wick::new(&table);
        let l = labels_from(&ids, &picks);
        let p = w.field_product(&l[1..]).unwrap();
        // errors when the direct commutator and the derivation rule disagree
        let direct = w.commute_field_with_poly(l[0], &p).unwrap();
        let rule = w.commutator_derivation(l[0], &p).unwrap();
        prop_assert!(direct.rel_diff(&rule) <= 1e-12);
    }

    #[test]
    fn fock_matrices_reproduce_wick_vevs(
        ps in prop::collection::vec(packet_params(), 1..3),
        picks in prop::collection::vec((0usize..3, any::<bool>()), 2..7),
    ) {
        let (mut reg, ids) = registry(&ps);
        let conj: Vec<FnId> = ids.iter().map(|&i| {
            let f = reg.get(i).unwrap().conj();
            reg.register(format!("c{}", i.0), f).unwrap()
        }).collect();
        let basis: Vec<FnId> = ids.iter().chain(&conj).copied().collect();
        let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &basis).unwrap();
        let w = Wick::new(&table);
        let l = labels_from(&ids, &picks);
        let n = l.len();
        let rec = w.vev_recursive(&l).unwrap();
        let scale: f64 = l.iter().map(|x| table_norm(&w, *x)).product();
        let spec = FockSpec::build(&basis, &table, n.div_ceil(2)).unwrap();
        prop_assert!(close(spec.vev(&l, &table).unwrap(), rec, scale, 1e-10));
        // a larger truncation never changes an exact value
        let bigger = FockSpec::build(&basis, &table, n.div_ceil(2) + 1).unwrap();
        prop_assert!(bigger.dim() > spec.dim());
        prop_assert!(close(bigger.vev(&l, &table).unwrap(), rec, scale, 1e-10));
    }
}

/// `sqrt(<phi^dagger phi> + <phi phi^dagger>)`, a bound on one field's
/// contribution to a product.
fn table_norm(w: &Wick, l: FieldLabel) -> f64 {
    let a = w.vev_recursive(&[l.adjoint(), l]).unwrap().norm();
    let b = w.vev_recursive(&[l, l.adjoint()]).unwrap().norm();
    (a + b).sqrt()
}

#[test]
fn truncation_below_half_the_field_count_loses_terms() {
    let (mut reg, ids) = registry(&[(0.2, 0.8, 0.0, 0.0, 1.0, 0.0)]);
    let f = reg.get(ids[0]).unwrap().conj();
    let c = reg.register("c", f).unwrap();
    let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &[ids[0], c]).unwrap();
    let w = Wick::new(&table);
    let l = vec![FieldLabel::new(ids[0]); 4];
    let exact = w.vev_recursive(&l).unwrap();
    let small = FockSpec::build(&[ids[0], c], &table, 1).unwrap().vev(&l, &table).unwrap();
    let full = FockSpec::build(&[ids[0], c], &table, 2).unwrap().vev(&l, &table).unwrap();
    assert!((full - exact).norm() <= 1e-10 * exact.norm());
    assert!((small - exact).norm() > 1e-3 * exact.norm());
    assert_eq!(OperatorPoly::identity().vacuum_expectation(), Complex64::new(1.0, 0.0));
}
