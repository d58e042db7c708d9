use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use tfreg_core::interacting::{mu_sweep, CenterGrid, InteractionSpec, InteractionTerm, LocalOperator, Normalization, PacketFamily, SweepObservable};
use tfreg_core::{
    BumpFunction, EnvelopeSpec, EnvelopeVariant, FieldLabel, FnId, FockSpec, FreeField, GaussianPacket, Grid, GramTable,
    PairingMethod, QuadratureSpec, Registry, ScaleFunctionalSpec, SpacetimeDim, SupportBox, TestFunction, Wick,
};

const D1: SpacetimeDim = SpacetimeDim::ONE_PLUS_ONE;

fn field() -> FreeField {
    FreeField::from_spec(D1, &QuadratureSpec::default_for(D1, 1.0)).unwrap()
}

fn packet(k: f64, mu: f64, t: f64, x: f64) -> TestFunction {
    GaussianPacket::new(&[k], mu, 1.0, &[t, x], Complex64::new(1.0, 0.0)).unwrap().into()
}

fn inner_products(c: &mut Criterion) {
    let field = field();
    let f = packet(0.3, 0.8, 0.0, 0.0);
    let g = packet(-0.2, 0.6, 1.0, 0.5);
    let bx = SupportBox { lo: vec![-1.5, -1.5], hi: vec![1.5, 1.5] };
    let b: TestFunction =
        BumpFunction::smooth(Grid::covering(&bx, &[0.2, 0.2]).unwrap(), &[0.0, 0.0], &[1.5, 1.5], Complex64::new(1.0, 0.0), None)
            .unwrap()
            .into();
    c.bench_function("inner_closed_packets", |bench| bench.iter(|| field.inner_product_closed(black_box(&f), black_box(&g))));
    c.bench_function("inner_lattice_packets", |bench| bench.iter(|| field.inner_product(black_box(&f), black_box(&g))));
    c.bench_function("inner_lattice_bump", |bench| bench.iter(|| field.inner_product(black_box(&b), black_box(&f))));
}

fn wick_and_fock(c: &mut Criterion) {
    let mut reg = Registry::new(D1);
    let ids: Vec<FnId> =
        (0..3).map(|i| reg.register(format!("p{i}"), packet(0.2 * i as f64, 0.8, 0.0, i as f64 - 1.0)).unwrap()).collect();
    let conj: Vec<FnId> = ids
        .iter()
        .map(|&i| {
            let f = reg.get(i).unwrap().conj();
            reg.register(format!("c{}", i.0), f).unwrap()
        })
        .collect();
    let basis: Vec<FnId> = ids.iter().chain(&conj).copied().collect();
    let table = GramTable::build_for(&reg, &field(), PairingMethod::Closed, &basis).unwrap();
    let w = Wick::new(&table);
    let labels: Vec<FieldLabel> =
        (0..8).map(|i| if i % 2 == 0 { FieldLabel::new(ids[i % 3]) } else { FieldLabel::dagger(ids[(i + 1) % 3]) }).collect();
    c.bench_function("vev_recursive_8", |bench| bench.iter(|| w.vev_recursive(black_box(&labels))));
    c.bench_function("vev_pairings_8", |bench| bench.iter(|| w.vev_pairings(black_box(&labels))));
    let spec = FockSpec::build(&basis, &table, 4).unwrap();
    c.bench_function("vev_fock_8", |bench| bench.iter(|| spec.vev(black_box(&labels), &table)));
    c.bench_function("field_product_6", |bench| bench.iter(|| w.field_product(black_box(&labels[..6]))));
}

fn sweep(c: &mut Criterion) {
    let field = field();
    let spec = InteractionSpec {
        terms: vec![InteractionTerm { g: 1.0, p: 0.0, q: 1 }],
        envelope: EnvelopeSpec::new(EnvelopeVariant::SupportRestricted),
        scale: ScaleFunctionalSpec { p1_coeff: 0.2, p1_power: 1.0 },
        center_grid: CenterGrid::Explicit { nodes: vec![vec![0.0, 0.0]], weights: vec![1.0] },
        normalization: Normalization::UnitMass,
        local: LocalOperator::Bilinear,
    };
    let family = PacketFamily { k: vec![0.3], m: 1.0, center: vec![0.0, 0.0], amp: [1.0, 0.0] };
    let mus: Vec<f64> = (0..8).map(|i| 0.8 * 2f64.powf(-(i as f64) / 2.0)).collect();
    c.bench_function("mu_sweep_loop_scalar_8", |bench| {
        bench.iter(|| mu_sweep(&family, black_box(&mus), &spec, &field, PairingMethod::Closed, SweepObservable::LoopScalar))
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = inner_products, wick_and_fock, sweep
}
criterion_main!(kernels);
