use std::sync::Arc;

use clangevin::constraints::{build_fixed_point, build_hopf, build_periodic, imaginary_pair_distance, LimitCycleOptions};
use clangevin::inference::{preprocess_constrained, ArcLengthPenalty, ConstrainedPosterior, DataLikelihood, DEFAULT_ARC_THRESHOLD};
use clangevin::linalg::GaussNewtonOptions;
use clangevin::models::{bundled_dataset, Repressilator};
use clangevin::pipeline::{fixed_point_start, hopf_start, limit_cycle_start};
use clangevin::samplers::{run_chain, samples_from_csv, samples_to_csv, ChainOptions, LangevinConfig};
use clangevin::{ConstraintSystem, MassSpec, ModelOde, RngStream};
use nalgebra::DVector;
use proptest::prelude::*;

fn model() -> Arc<dyn ModelOde> {
    Arc::new(Repressilator::three())
}

#[test]
fn fixed_point_to_hopf_to_cycle() {
    let ds = bundled_dataset().unwrap();
    let gn = GaussNewtonOptions::default();
    let fixed = build_fixed_point(model());
    let q0 = fixed_point_start(&fixed, &ds.params, &gn).unwrap();
    let pot = ConstrainedPosterior::boxed(fixed.layout()).unwrap();
    let cfg = LangevinConfig::default();
    let mass = MassSpec::identity(fixed.dim());
    let fp = run_chain(&q0, 2000, &cfg, &fixed, &pot, &mass, RngStream::new(3, 0), &ChainOptions::default()).unwrap();
    assert!(fp.max_residual <= 1e-8);
    assert!(fp.acceptance_rate() > 0.5);

    let hopf = build_hopf(model());
    let h0 = hopf_start(&fixed, &hopf, &fp.samples, 50, &gn).unwrap();
    let part = hopf.parts(&h0);
    assert!(part.omega > 0.0);
    assert!(imaginary_pair_distance(&fixed.jac_y(&fixed.assemble(part.y, part.params)), part.omega) <= 1e-6);

    let template = preprocess_constrained(&ds).unwrap();
    let periodic = Arc::new(build_periodic(model(), 12).unwrap());
    let seed = limit_cycle_start(
        &periodic,
        &hopf,
        &[h0],
        template.tau_data,
        DEFAULT_ARC_THRESHOLD,
        5,
        (&ds.params, &ds.y0),
        &LimitCycleOptions::default(),
    )
    .unwrap();
    assert!(seed.arc_length >= DEFAULT_ARC_THRESHOLD);
    let post = ConstrainedPosterior::periodic(
        periodic.clone(),
        ArcLengthPenalty::default(),
        Some(DataLikelihood::from_template(&template).unwrap()),
    )
    .unwrap();
    let cfg = LangevinConfig { dt: 0.01, stride: 5, ..LangevinConfig::default() };
    let mass = MassSpec::identity(periodic.dim());
    let lc = run_chain(&seed.start.q, 200, &cfg, periodic.as_ref(), &post, &mass, RngStream::new(3, 1), &ChainOptions::default())
        .unwrap();
    assert_eq!(lc.samples.len(), 40);
    assert!(lc.max_residual <= 1e-8);
    assert!(lc.acceptance_rate() > 0.5);
}

proptest! {
    #[test]
    fn sample_csv_round_trips(rows in proptest::collection::vec(proptest::collection::vec(-1e300f64..1e300, 3), 0..20)) {
        let cols: Vec<String> = ["a", "b_0", "b_1"].iter().map(|s| s.to_string()).collect();
        let samples: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_column_slice(r)).collect();
        let (c2, s2) = samples_from_csv(&samples_to_csv(&cols, &samples)).unwrap();
        prop_assert_eq!(c2, cols);
        prop_assert_eq!(s2, samples);
    }
}
