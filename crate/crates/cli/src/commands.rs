use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clangevin::constraints::{build_fixed_point, build_hopf, build_periodic, LimitCycleOptions};
use clangevin::diagnostics::{build_report, curvature_weights, kl_estimate, GaussianKde};
use clangevin::inference::{
    preprocess_constrained, preprocess_ensemble, ArcLengthPenalty, ConstrainedPosterior, DataLikelihood,
    EnsemblePosterior,
};
use clangevin::linalg::GaussNewtonOptions;
use clangevin::models::SimulatedDataset;
use clangevin::pipeline::{fixed_point_start, hopf_start, limit_cycle_start, CycleSource};
use clangevin::samplers::{
    run_chain, run_ensemble, samples_to_csv, AcceptanceStats, ChainOptions, ChainRecord,
};
use clangevin::{ConstraintSystem, MassSpec, ModelOde, PotentialModel, RngStream};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{default_y0, RunConfig};
use crate::error::CliError;
use crate::geometry::{CoordinatePlane, UnitSphere};
use crate::output::{artifact_version, read_sample_set, read_samples, read_text, write_atomic, Manifest, Totals, MANIFEST_NAME};
use crate::{BaselineArgs, DiagnoseArgs, GenerateArgs, Manifold, Mode, ReweightArgs, SampleArgs};

const HOPF_CANDIDATES: usize = 50;
const WALKER_INIT_TRIES: usize = 100;

pub fn generate_data(a: &GenerateArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    cfg.model.species = a.species;
    cfg.model.params = a.params.clone();
    cfg.validate()?;
    let model = cfg.model()?;
    let params = cfg.params()?;
    let y0 = a.y0.clone().unwrap_or_else(|| default_y0(a.species));
    if y0.len() != a.species {
        return Err(CliError::Config(format!("--y0 needs {} values, got {}", a.species, y0.len())));
    }
    let ds = clangevin::models::generate_data(&model, &params, &y0, a.t_total, a.points, a.noise_var, a.seed)?;
    write_atomic(&a.out, &ds.to_csv())?;
    println!("wrote {} observations to {}", ds.times.len(), a.out.display());
    Ok(())
}

fn load_dataset(arg: Option<&PathBuf>, cfg: &RunConfig) -> Result<SimulatedDataset, CliError> {
    let path = arg
        .or(cfg.data.path.as_ref())
        .ok_or_else(|| CliError::Config("a dataset is required (--dataset or data.path)".into()))?;
    let ds = SimulatedDataset::from_csv(&read_text(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if ds.species != cfg.model.species {
        return Err(CliError::Config(format!(
            "dataset has {} species, configuration {}",
            ds.species, cfg.model.species
        )));
    }
    Ok(ds)
}

fn out_dir(arg: Option<&PathBuf>, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    arg.or(cfg.out_dir.as_ref())
        .cloned()
        .ok_or_else(|| CliError::Config("an output directory is required (--out-dir or out_dir)".into()))
}

fn upstream(paths: &[PathBuf], expected: &[String], what: &str) -> Result<Vec<DVector<f64>>, CliError> {
    let (cols, chains) = read_sample_set(paths)?;
    if cols != expected {
        return Err(CliError::Config(format!("{what} samples have columns {cols:?}, expected {expected:?}")));
    }
    let pooled: Vec<_> = chains.into_iter().flatten().collect();
    if pooled.is_empty() {
        return Err(CliError::Config(format!("{what} sample files are empty")));
    }
    Ok(pooled)
}

fn run_chains(
    q0: &DVector<f64>,
    cfg: &RunConfig,
    c: &dyn ConstraintSystem,
    pot: &dyn PotentialModel,
) -> Result<Vec<ChainRecord>, CliError> {
    let lcfg = cfg.langevin();
    let mass = MassSpec::identity(c.dim());
    (0..cfg.sampler.chains as u64)
        .into_par_iter()
        .map(|i| {
            run_chain(q0, cfg.sampler.steps, &lcfg, c, pot, &mass, RngStream::new(cfg.seed, i), &ChainOptions::default())
                .map_err(CliError::from)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn manifest(
    command: &str,
    mode: &str,
    cfg: &RunConfig,
    n_mesh: Option<usize>,
    stride: usize,
    totals: Totals,
    rejections: BTreeMap<String, usize>,
    files: Vec<String>,
    start: BTreeMap<String, Value>,
) -> Manifest {
    Manifest {
        version: artifact_version(),
        command: command.into(),
        mode: mode.into(),
        config_checksum: cfg.checksum(),
        seed: cfg.seed,
        species: cfg.model.species,
        n_mesh,
        stride,
        totals,
        rejections,
        chains: Vec::new(),
        files,
        start,
        config: serde_json::to_value(cfg).expect("config serializes"),
    }
}

fn write_chains(
    dir: &Path,
    records: &[ChainRecord],
    cfg: &RunConfig,
    mode: Mode,
    n_mesh: Option<usize>,
    start: BTreeMap<String, Value>,
) -> Result<Manifest, CliError> {
    let mut files = Vec::new();
    let mut stats = AcceptanceStats::default();
    for (i, r) in records.iter().enumerate() {
        let name = format!("chain_{i:03}.csv");
        write_atomic(&dir.join(&name), &r.to_csv())?;
        files.push(name);
        stats.merge(&r.stats);
    }
    let (totals, rejections) = Manifest::totals_from(&stats);
    let mut m = manifest("sample", mode.name(), cfg, n_mesh, cfg.sampler.stride, totals, rejections, files, start);
    m.chains = records.iter().map(ChainRecord::summary).collect();
    m.write(dir)?;
    Ok(m)
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    if let Some(v) = a.steps {
        cfg.sampler.steps = v;
    }
    if let Some(v) = a.chains {
        cfg.sampler.chains = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.dt {
        cfg.sampler.dt = v;
    }
    if let Some(v) = a.metropolis {
        cfg.sampler.metropolis = v;
    }
    if let Some(d) = &a.dataset {
        cfg.data.path = Some(d.clone());
    }
    cfg.validate()?;
    let dir = out_dir(a.out_dir.as_ref(), &cfg)?;
    let model: Arc<dyn ModelOde> = Arc::new(cfg.model()?);
    let gn = GaussNewtonOptions::default();
    let mut start = BTreeMap::new();
    let (records, n_mesh) = match a.mode {
        Mode::FixedPoint => {
            let c = build_fixed_point(model);
            let q0 = fixed_point_start(&c, &cfg.params()?, &gn)?;
            let pot = ConstrainedPosterior::boxed(c.layout())?.with_restraint(cfg.restraint(c.layout())?);
            start.insert("params".into(), json!(cfg.params()?));
            (run_chains(&q0, &cfg, &c, &pot)?, None)
        }
        Mode::Hopf => {
            if a.input.is_empty() {
                return Err(CliError::Config("hopf mode needs fixed-point samples via --input".into()));
            }
            let fixed = build_fixed_point(model.clone());
            let hopf = build_hopf(model);
            let samples = upstream(&a.input, &fixed.layout().column_names(), "fixed-point")?;
            let q0 = hopf_start(&fixed, &hopf, &samples, HOPF_CANDIDATES, &gn)?;
            let pot = ConstrainedPosterior::boxed(hopf.layout())?.with_restraint(cfg.restraint(hopf.layout())?);
            start.insert("upstream_samples".into(), json!(samples.len()));
            start.insert("omega".into(), json!(hopf.parts(&q0).omega));
            (run_chains(&q0, &cfg, &hopf, &pot)?, None)
        }
        Mode::LimitCycle => {
            let ds = load_dataset(cfg.data.path.as_ref(), &cfg)?;
            let template = preprocess_constrained(&ds)?;
            let n_mesh = cfg.limit_cycle.n_mesh;
            let periodic = Arc::new(build_periodic(model.clone(), n_mesh)?);
            let hopf = build_hopf(model);
            let hopf_samples = if a.input.is_empty() {
                Vec::new()
            } else {
                upstream(&a.input, &hopf.layout().column_names(), "Hopf")?
            };
            let seed = limit_cycle_start(
                &periodic,
                &hopf,
                &hopf_samples,
                template.tau_data,
                cfg.limit_cycle.arc_threshold,
                cfg.limit_cycle.max_candidates,
                (&ds.params, &ds.y0),
                &LimitCycleOptions::default(),
            )?;
            let source = match seed.source {
                CycleSource::Hopf(i) => format!("hopf sample {i}"),
                CycleSource::Fallback => "dataset parameters".into(),
            };
            start.insert("source".into(), json!(source));
            start.insert("arc_length".into(), json!(seed.arc_length));
            start.insert("period_estimate".into(), json!(seed.start.period_estimate));
            start.insert("tau_data".into(), json!(template.tau_data));
            let pot = ConstrainedPosterior::periodic(
                periodic.clone(),
                ArcLengthPenalty { threshold: cfg.limit_cycle.arc_threshold },
                Some(DataLikelihood::from_template(&template)?),
            )?
            .with_restraint(cfg.restraint(periodic.layout())?);
            (run_chains(&seed.start.q, &cfg, periodic.as_ref(), &pot)?, Some(n_mesh))
        }
    };
    let m = write_chains(&dir, &records, &cfg, a.mode, n_mesh, start)?;
    println!(
        "{} chains, {} steps each, acceptance {:.4}; wrote {}",
        records.len(),
        cfg.sampler.steps,
        m.totals.acceptance_rate,
        dir.display()
    );
    Ok(())
}

pub fn baseline(a: &BaselineArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    if let Some(v) = a.sweeps {
        cfg.ensemble.sweeps = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(d) = &a.dataset {
        cfg.data.path = Some(d.clone());
    }
    cfg.validate()?;
    let dir = out_dir(a.out_dir.as_ref(), &cfg)?;
    let ds = load_dataset(cfg.data.path.as_ref(), &cfg)?;
    let model: Arc<dyn ModelOde> = Arc::new(cfg.model()?);
    let mut post = EnsemblePosterior::new(model, preprocess_ensemble(&ds)?, ds.t_total)?;
    post.restraint = cfg.restraint(post.layout())?;
    post.penalty = ArcLengthPenalty { threshold: cfg.limit_cycle.arc_threshold };
    let ecfg = cfg.ensemble();
    ecfg.validate(post.dim())?;
    let truth = post.assemble(&ds.params, &ds.y0);
    let mut rng = RngStream::new(cfg.seed, 0).rng();
    let spread = cfg.ensemble.init_spread;
    let mut init = Vec::new();
    for w in 0..ecfg.walker_count(post.dim()) {
        let walker = (0..WALKER_INIT_TRIES)
            .map(|_| &truth + DVector::from_fn(truth.len(), |_, _| spread * rng.sample::<f64, _>(StandardNormal)))
            .find(|t| post.log_posterior(t).is_finite())
            .ok_or_else(|| CliError::Numerical(format!("no finite-density start for walker {w}")))?;
        init.push(walker);
    }
    let rec = run_ensemble(init, cfg.ensemble.sweeps, &ecfg, |t| post.log_posterior(t), &mut rng)?;
    let columns = post.layout().column_names();
    let mut files = Vec::new();
    for (w, chain) in rec.chains.iter().enumerate() {
        let name = format!("walker_{w:03}.csv");
        write_atomic(&dir.join(&name), &samples_to_csv(&columns, chain))?;
        files.push(name);
    }
    let totals = Totals { steps: rec.steps, accepted: rec.accepted, acceptance_rate: rec.acceptance_rate() };
    let rejections = BTreeMap::from([("stretch".to_string(), rec.steps - rec.accepted)]);
    let mut start = BTreeMap::new();
    start.insert("walkers".into(), json!(rec.chains.len()));
    start.insert("init_spread".into(), json!(spread));
    let m = manifest("baseline", "ensemble", &cfg, None, cfg.ensemble.stride, totals, rejections, files, start);
    m.write(&dir)?;
    println!(
        "{} walkers, {} updates, acceptance {:.4}; wrote {}",
        rec.chains.len(),
        rec.steps,
        rec.acceptance_rate(),
        dir.display()
    );
    Ok(())
}

fn is_param_column(name: &str) -> bool {
    let block = name.rsplit_once('_').filter(|(_, i)| i.parse::<usize>().is_ok()).map_or(name, |(b, _)| b);
    matches!(block, "k0" | "k1" | "n")
}

fn sibling_manifest(samples: &Path) -> PathBuf {
    samples.parent().unwrap_or_else(|| Path::new(".")).join(MANIFEST_NAME)
}

fn select(columns: &[String], wanted: &[String]) -> Result<Vec<usize>, CliError> {
    wanted
        .iter()
        .map(|w| {
            columns
                .iter()
                .position(|c| c == w)
                .ok_or_else(|| CliError::Config(format!("no column named {w:?}")))
        })
        .collect()
}

fn project(chains: &[Vec<DVector<f64>>], idx: &[usize]) -> Vec<Vec<DVector<f64>>> {
    chains
        .iter()
        .map(|c| c.iter().map(|q| DVector::from_iterator(idx.len(), idx.iter().map(|&i| q[i]))).collect())
        .collect()
}

fn thinned(chains: &[Vec<DVector<f64>>], max: usize) -> Vec<DVector<f64>> {
    let pooled: Vec<&DVector<f64>> = chains.iter().flatten().collect();
    let step = pooled.len().div_ceil(max.max(1)).max(1);
    pooled.into_iter().step_by(step).cloned().collect()
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    let (columns, chains) = read_sample_set(&a.samples)?;
    let names: Vec<String> = match &a.columns {
        Some(c) => c.clone(),
        None if columns.iter().any(|c| is_param_column(c)) => {
            columns.iter().filter(|c| is_param_column(c)).cloned().collect()
        }
        None => columns.clone(),
    };
    let idx = select(&columns, &names)?;
    let stride = match a.stride {
        Some(s) => s,
        None => {
            let m = sibling_manifest(&a.samples[0]);
            if m.exists() {
                Manifest::read(&m)?.stride
            } else {
                1
            }
        }
    };
    let sel = project(&chains, &idx);
    let mut report = build_report(&names, &sel, stride)?;
    if !a.reference.is_empty() {
        let (ref_cols, ref_chains) = read_sample_set(&a.reference)?;
        let ref_idx = select(&ref_cols, &names)?;
        let p1 = thinned(&sel, a.kl_max_samples);
        let p2 = thinned(&project(&ref_chains, &ref_idx), a.kl_max_samples);
        let k1 = GaussianKde::new(p1.clone())?;
        let k2 = GaussianKde::new(p2)?;
        report.kl = Some(kl_estimate(&p1, |x| k1.log_density(x), |x| k2.log_density(x))?);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&a.report, &(text + "\n"))?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4e}"));
    println!(
        "{} chains over {} columns: mean ESS/step {}, min ESS/step {}, R̂ {}{}",
        report.chains,
        names.len(),
        fmt(report.average_ess_per_step),
        fmt(report.minimum_ess_per_step),
        report.rhat.map_or("n/a".to_string(), |r| format!("{r:.4}")),
        report.kl.map_or(String::new(), |k| format!(", KL {:.4}", k.value))
    );
    Ok(())
}

fn manifest_constraint(m: &Manifest) -> Result<Box<dyn ConstraintSystem>, CliError> {
    let model: Arc<dyn ModelOde> = Arc::new(clangevin::models::Repressilator::new(m.species)?);
    match m.mode.as_str() {
        "fixed-point" => Ok(Box::new(build_fixed_point(model))),
        "hopf" => Ok(Box::new(build_hopf(model))),
        "limit-cycle" => {
            let n = m.n_mesh.ok_or_else(|| CliError::Config("limit-cycle manifest without n_mesh".into()))?;
            Ok(Box::new(build_periodic(model, n)?))
        }
        other => Err(CliError::Config(format!("runs of mode {other:?} carry no constraint to reweight against"))),
    }
}

pub fn reweight(a: &ReweightArgs) -> Result<(), CliError> {
    let (columns, samples) = read_samples(&a.samples)?;
    let c: Box<dyn ConstraintSystem> = match a.manifold {
        Some(Manifold::Sphere) => Box::new(UnitSphere::new(&columns)?),
        Some(Manifold::Plane) => Box::new(CoordinatePlane::new(&columns)?),
        None => {
            let path = a.manifest.clone().unwrap_or_else(|| sibling_manifest(&a.samples));
            manifest_constraint(&Manifest::read(&path)?)?
        }
    };
    if c.layout().column_names() != columns {
        return Err(CliError::Config("sample columns do not match the constraint layout".into()));
    }
    let idx = select(&columns, &a.coords)?;
    let weights = curvature_weights(&samples, c.as_ref(), &idx)?;
    let mut out_cols = columns.clone();
    out_cols.push("weight".into());
    let rows: Vec<DVector<f64>> = samples
        .iter()
        .zip(&weights)
        .map(|(q, w)| DVector::from_iterator(q.len() + 1, q.iter().cloned().chain([*w])))
        .collect();
    write_atomic(&a.out, &samples_to_csv(&out_cols, &rows))?;
    println!("wrote {} weighted rows to {}", rows.len(), a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_columns_are_recognised() {
        for c in ["k0_0", "k1_1", "n_2", "k0", "n"] {
            assert!(is_param_column(c), "{c}");
        }
        for c in ["y_0", "tau", "y0_1", "sigma", "n_x", "mesh_3"] {
            assert!(!is_param_column(c), "{c}");
        }
    }

    #[test]
    fn thinning_caps_rows() {
        let chains = vec![(0..1000).map(|i| DVector::from_element(1, i as f64)).collect::<Vec<_>>(); 3];
        let t = thinned(&chains, 700);
        assert!(t.len() <= 700 && t.len() >= 600);
        assert_eq!(thinned(&chains, 10_000).len(), 3000);
    }
}
