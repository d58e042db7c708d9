use num_complex::Complex64;

use tfreg_core::freefield::{smeared_pauli_jordan_1p1, SmearingRule};
use tfreg_core::testfn::smooth_profile;
use tfreg_core::{BumpFunction, FreeField, GaussianPacket, Grid, QuadratureSpec, SpacetimeDim, SupportBox, TestFunction};

const D1: SpacetimeDim = SpacetimeDim::ONE_PLUS_ONE;

fn bump(c: [f64; 2], w: [f64; 2]) -> (TestFunction, SupportBox) {
    let bx = SupportBox { lo: vec![c[0] - w[0], c[1] - w[1]], hi: vec![c[0] + w[0], c[1] + w[1]] };
    let grid = Grid::covering(&bx, &[0.05, 0.05]).unwrap();
    (BumpFunction::smooth(grid, &c, &w, Complex64::new(1.0, 0.0), None).unwrap().into(), bx)
}

fn profile(c: [f64; 2], w: [f64; 2]) -> impl Fn(&[f64]) -> f64 + Sync {
    move |y: &[f64]| smooth_profile((y[0] - c[0]) / w[0]) * smooth_profile((y[1] - c[1]) / w[1])
}

#[test]
fn lattice_commutator_matches_pauli_jordan_integral() {
    let field = FreeField::from_spec(D1, &QuadratureSpec { m: 1.0, cutoff: 40.0, panels: 80, order: 16 }).unwrap();
    let rule = SmearingRule { outer_panels: 4, outer_order: 8, inner_panels: 2, inner_order: 12 };
    let w = [2.0, 2.0];

    let (cf, cg) = ([0.0, 0.0], [9.0, 0.5]);
    let (f, fb) = bump(cf, w);
    let (g, gb) = bump(cg, w);
    let lattice = field.commutator_value(&f, &g).unwrap();
    let oracle = smeared_pauli_jordan_1p1(1.0, profile(cf, w), &fb, profile(cg, w), &gb, rule);
    assert!(lattice.re.abs() < 1e-12 * lattice.norm(), "real fields commute to an imaginary number");
    assert!((lattice - oracle).norm() <= 1e-4 * oracle.norm(), "{lattice} vs {oracle}");

    // spatial gap 9 - 4 = 5 exceeds the largest time difference 0.5 + 4
    let (h, _) = bump([0.5, 9.0], w);
    let spacelike = field.commutator_value(&f, &h).unwrap();
    let scale = field.inner_product(&f, &f).unwrap().re;
    assert!(spacelike.norm() <= 1e-6 * scale, "{spacelike}");
}

#[test]
fn closed_and_lattice_paths_agree_for_packets() {
    let field = FreeField::from_spec(D1, &QuadratureSpec::default_for(D1, 1.0)).unwrap();
    let f: TestFunction = GaussianPacket::new(&[0.4], 0.9, 1.0, &[0.0, 0.0], Complex64::new(1.0, 0.0)).unwrap().into();
    let g: TestFunction = GaussianPacket::new(&[-0.3], 0.7, 1.0, &[1.0, -0.5], Complex64::new(0.0, 1.0)).unwrap().into();
    let closed = field.inner_product_closed(&f, &g).unwrap();
    let lattice = field.inner_product(&f, &g).unwrap();
    let scale = (field.inner_product_closed(&f, &f).unwrap().re * field.inner_product_closed(&g, &g).unwrap().re).sqrt();
    assert!((closed - lattice).norm() <= 1e-6 * scale);
}
