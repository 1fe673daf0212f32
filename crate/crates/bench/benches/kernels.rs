use std::hint::black_box;
use std::sync::Arc;

use clangevin::constraints::{build_fixed_point, build_hopf, build_periodic, LimitCycleOptions};
use clangevin::inference::{
    preprocess_constrained, preprocess_ensemble, ArcLengthPenalty, ConstrainedPosterior, DataLikelihood,
    EnsemblePosterior,
};
use clangevin::linalg::{ConstraintFactors, GaussNewtonOptions};
use clangevin::models::{bundled_dataset, Repressilator};
use clangevin::pipeline::{fixed_point_start, limit_cycle_start};
use clangevin::samplers::{draw_momentum, obabo_step, ChainState, LangevinConfig};
use clangevin::{ConstraintSystem, MassSpec, ModelOde, PotentialModel, RngStream};
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

fn model() -> Arc<dyn ModelOde> {
    Arc::new(Repressilator::three())
}

fn stepping(c: &mut Criterion, name: &str, q0: DVector<f64>, sys: &dyn ConstraintSystem, pot: &dyn PotentialModel, cfg: LangevinConfig) {
    let mass = MassSpec::identity(sys.dim());
    let mut rng = RngStream::new(1, 0).rng();
    let fac = ConstraintFactors::new(&sys.jacobian(&q0), &q0, &mass).unwrap();
    let p0 = draw_momentum(&fac, cfg.temperature, &mut rng);
    let mut state = ChainState::new(q0, p0, sys, pot, &mass).unwrap();
    c.bench_function(name, |b| b.iter(|| black_box(obabo_step(&mut state, &cfg, sys, pot, &mut rng).accepted)));
}

fn fixed_point(c: &mut Criterion) {
    let fp = build_fixed_point(model());
    let ds = bundled_dataset().unwrap();
    let q0 = fixed_point_start(&fp, &ds.params, &GaussNewtonOptions::default()).unwrap();
    let pot = ConstrainedPosterior::boxed(fp.layout()).unwrap();
    stepping(c, "obabo step, fixed point", q0, &fp, &pot, LangevinConfig::default());
}

fn periodic(c: &mut Criterion) {
    let ds = bundled_dataset().unwrap();
    let template = preprocess_constrained(&ds).unwrap();
    let periodic = Arc::new(build_periodic(model(), 20).unwrap());
    let seed = limit_cycle_start(
        &periodic,
        &build_hopf(model()),
        &[],
        template.tau_data,
        0.3,
        0,
        (&ds.params, &ds.y0),
        &LimitCycleOptions::default(),
    )
    .unwrap();
    let q = seed.start.q;
    let mass = MassSpec::identity(periodic.dim());
    c.bench_function("periodic residual, N=20", |b| b.iter(|| black_box(periodic.residual(&q))));
    c.bench_function("periodic jacobian, N=20", |b| b.iter(|| black_box(periodic.jacobian(&q))));
    let jac = periodic.jacobian(&q);
    c.bench_function("bordered factorization, N=20", |b| {
        b.iter(|| black_box(ConstraintFactors::new(&jac, &q, &mass).unwrap()))
    });
    let pot = ConstrainedPosterior::periodic(
        periodic.clone(),
        ArcLengthPenalty::default(),
        Some(DataLikelihood::from_template(&template).unwrap()),
    )
    .unwrap();
    let cfg = LangevinConfig { dt: 0.01, ..LangevinConfig::default() };
    stepping(c, "obabo step, periodic orbit N=20", q, periodic.as_ref(), &pot, cfg);
}

fn ensemble(c: &mut Criterion) {
    let ds = bundled_dataset().unwrap();
    let post = EnsemblePosterior::new(model(), preprocess_ensemble(&ds).unwrap(), ds.t_total).unwrap();
    let theta = post.assemble(&ds.params, &ds.y0);
    c.bench_function("ensemble log posterior", |b| b.iter(|| black_box(post.log_posterior(&theta))));
}

criterion_group!(benches, fixed_point, periodic, ensemble);
criterion_main!(benches);
