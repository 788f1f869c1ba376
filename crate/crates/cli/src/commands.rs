use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use canard_lab::config::Config;
use canard_lab::measures::{histogram, ks_distance, pushforward_measure, PushForward};
use canard_lab::relation::{classify_invariant_measures, InvariantMeasures};
use canard_lab::sim::{ensemble_transport, find_control_lambda, EnsembleRun};
use canard_lab::{Error, LienardSystem, SdiEvaluator, Side, SlowRelation, TransportMeasure};

use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, Cell, Csv};

/// Sizes the global worker pool from `CANARD_LAB_THREADS` (0 or unset: all cores).
pub fn init_threads() -> CliResult<()> {
    let threads = match std::env::var("CANARD_LAB_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!(
                "CANARD_LAB_THREADS must be a nonnegative integer, got `{v}`"
            ))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

struct Loaded {
    config: Config,
    system: LienardSystem,
    out: PathBuf,
}

fn load(path: &Path, out: Option<PathBuf>) -> CliResult<Loaded> {
    let config = Config::from_file(path)?;
    let system = config.lienard()?;
    let report = system.validate();
    if !report.all_pass() {
        return Err(CliError::Invalid(report.failures().join("; ")));
    }
    let out = out
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded {
        config,
        system,
        out,
    })
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn validate(path: &Path) -> CliResult<()> {
    let config = Config::from_file(path)?;
    let system = config.lienard()?;
    let report = system.validate();
    println!("{report}");
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "{} assumption check(s) failed",
            report.failures().len()
        )))
    }
}

pub fn sdi(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let l = load(path, out)?;
    let e = SdiEvaluator::new(l.system);
    let top = e.common_max();
    let n = l.config.output.points.max(1);
    let mut csv = Csv::new(&["s", "I_minus", "I_plus", "I_total", "dI_minus", "dI_plus"]);
    for i in 1..=n {
        let s = if i == n {
            top
        } else {
            top * i as f64 / n as f64
        };
        let (im, ip) = (e.sdi_minus(s)?, e.sdi_plus(s)?);
        csv.row(&[
            s.into(),
            im.into(),
            ip.into(),
            (im + ip).into(),
            e.sdi_derivative(s, Side::Attracting)?.into(),
            e.sdi_derivative(s, Side::Repelling)?.into(),
        ]);
    }
    announce(&write_atomic(&l.out, "sdi.csv", &csv.into_string())?);
    Ok(())
}

fn two_section(l: &Loaded) -> CliResult<SlowRelation> {
    let (sc_minus, sc_plus) = l.config.section_heights()?;
    let interval = l.config.entry_interval()?;
    Ok(SlowRelation::two_section(
        SdiEvaluator::new(l.system.clone()),
        interval,
        sc_minus,
        sc_plus,
    )?)
}

/// `Ok(None)` when the value leaves the repelling branch.
fn defined(r: canard_lab::Result<f64>) -> CliResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BranchRange { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn relation(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let l = load(path, out)?;
    let rel = two_section(&l)?;
    let (lo, hi) = rel.entry_interval().expect("two-section");
    let n = l.config.output.points.max(2);
    let mut csv = Csv::new(&["s_minus", "S0", "tilde_S0"]);
    for i in 0..n {
        let s = if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        csv.row(&[
            s.into(),
            defined(rel.two_section_relation(s))?.into(),
            defined(rel.limit_map(s))?.into(),
        ]);
    }
    match rel.buffer() {
        Some(b) => println!("funnel case, buffer point s_b = {b}"),
        None => println!("tunnel case"),
    }
    announce(&write_atomic(&l.out, "relation.csv", &csv.into_string())?);
    Ok(())
}

pub fn ergodic(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let l = load(path, out)?;
    let e = SdiEvaluator::new(l.system.clone());
    let s0 = l.config.sections.s0.unwrap_or_else(|| e.common_max());
    let rel = SlowRelation::single_section(e.clone(), s0)?;
    let class = classify_invariant_measures(&e, (s0 * 1e-4, s0))?;
    let mut report = String::new();
    writeln!(report, "system: f = {}, p = {}", l.system.f(), l.system.p()).expect("string");
    writeln!(report, "interval = (0, {s0}]").expect("string");
    writeln!(
        report,
        "orientation = {:?}",
        rel.orientation().expect("single-section")
    )
    .expect("string");
    writeln!(report, "{class}").expect("string");
    writeln!(report, "cyclicity:").expect("string");
    let probes: Vec<f64> = match &class {
        InvariantMeasures::Every { .. } => vec![0.5 * s0],
        InvariantMeasures::ConvexHull(c) => {
            let mut probes = Vec::new();
            let mut edges = c.atoms.clone();
            edges.push(s0);
            for w in edges.windows(2) {
                probes.push(0.5 * (w[0] + w[1]));
            }
            probes.extend(c.atoms.iter().skip(1));
            probes.sort_by(f64::total_cmp);
            probes
        }
    };
    for s in probes {
        writeln!(report, "  {}", rel.cyclicity_report(s)?).expect("string");
    }
    print!("{report}");
    announce(&write_atomic(&l.out, "ergodic.txt", &report)?);
    Ok(())
}

fn limit_measure(l: &Loaded) -> CliResult<(TransportMeasure, PushForward)> {
    let entry = TransportMeasure::make_entry(l.config.entry_kind()?)?;
    let rel = two_section(l)?;
    let pushed = pushforward_measure(&entry, &rel)?;
    Ok((entry, pushed))
}

pub fn density(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let l = load(path, out)?;
    let (entry, pushed) = limit_measure(&l)?;
    let mut csv = Csv::new(&["s", "density"]);
    if let Some(d) = entry.density() {
        for (s, v) in d.nodes().zip(d.values()) {
            csv.row(&[s.into(), (*v).into()]);
        }
    }
    announce(&write_atomic(
        &l.out,
        "entry_density.csv",
        &csv.into_string(),
    )?);

    let exit = &pushed.measure;
    let mut csv = Csv::new(&["s", "density", "atom_location", "atom_mass"]);
    if let Some(d) = exit.density() {
        for (s, v) in d.nodes().zip(d.values()) {
            csv.row(&[s.into(), (*v).into(), Cell::Empty, Cell::Empty]);
        }
    }
    for a in exit.atoms() {
        csv.row(&[Cell::Empty, Cell::Empty, a.location.into(), a.mass.into()]);
    }
    println!(
        "exit measure: density mass {}, atoms {}, total mass {}",
        exit.density_mass(),
        exit.atoms().len(),
        exit.total_mass()
    );
    announce(&write_atomic(
        &l.out,
        "exit_density.csv",
        &csv.into_string(),
    )?);
    Ok(())
}

fn eps_or_config(l: &Loaded, eps: Option<f64>) -> CliResult<f64> {
    eps.or(l.config.sim.eps)
        .ok_or_else(|| CliError::Usage("no eps given (use --eps or sim.eps)".into()))
}

fn run_ensemble(
    l: &Loaded,
    entry: &TransportMeasure,
    eps: f64,
    samples: usize,
    seed: u64,
) -> CliResult<(EnsembleRun, usize)> {
    let (sc_minus, sc_plus) = l.config.section_heights()?;
    let cfg = l.config.sim_config(&l.system, eps)?;
    let control = find_control_lambda(
        &l.system,
        &cfg,
        sc_minus,
        sc_plus,
        l.config.sim.lambda_bracket,
    )?;
    let run = ensemble_transport(&l.system, &cfg, control.lambda, entry, samples, seed)?;
    Ok((run, control.iterations))
}

pub fn simulate(
    path: &Path,
    out: Option<PathBuf>,
    eps: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> CliResult<()> {
    let l = load(path, out)?;
    let eps = eps_or_config(&l, eps)?;
    let samples = samples.unwrap_or(l.config.sim.samples);
    let seed = seed.unwrap_or(l.config.sim.seed);
    let (entry, pushed) = limit_measure(&l)?;
    let (run, iterations) = run_ensemble(&l, &entry, eps, samples, seed)?;

    let mut csv = Csv::new(&["eps", "lambda_c", "iterations"]);
    csv.row(&[eps.into(), run.lambda_c.into(), iterations.into()]);
    announce(&write_atomic(&l.out, "control.csv", &csv.into_string())?);

    let mut csv = Csv::new(&["sample_id", "s_entry", "s_exit", "outcome"]);
    for m in &run.members {
        csv.row(&[
            m.id.into(),
            m.s_entry.into(),
            m.outcome.exit_height().into(),
            m.outcome.label().into(),
        ]);
    }
    announce(&write_atomic(&l.out, "ensemble.csv", &csv.into_string())?);

    let mut csv = Csv::new(&["bin_left", "bin_right", "count"]);
    for b in histogram(&run.exits.values, l.config.output.bins) {
        csv.row(&[b.left.into(), b.right.into(), b.count.into()]);
    }
    announce(&write_atomic(&l.out, "histogram.csv", &csv.into_string())?);

    println!("eps = {eps}, lambda_c = {}", run.lambda_c);
    println!(
        "crossed = {}, failures = {:?}",
        run.exits.values.len(),
        run.failures
    );
    if !run.exits.values.is_empty() {
        println!(
            "ks distance to the limit measure = {}",
            ks_distance(&run.exits.values, &pushed.measure)
        );
    }
    if run.flagged {
        eprintln!("warning: more than 10% of the orbits failed to cross the exit section");
    }
    Ok(())
}

pub fn compare(
    path: &Path,
    out: Option<PathBuf>,
    eps: &[f64],
    samples: Option<usize>,
    seed: Option<u64>,
) -> CliResult<()> {
    if eps.len() < 2 {
        return Err(CliError::Usage(
            "compare needs at least two --eps values".into(),
        ));
    }
    let l = load(path, out)?;
    let samples = samples.unwrap_or(l.config.sim.samples);
    let seed = seed.unwrap_or(l.config.sim.seed);
    let (entry, pushed) = limit_measure(&l)?;
    let mut csv = Csv::new(&["eps", "lambda_c", "ks", "crossed", "failures"]);
    let mut distances = Vec::new();
    for &e in eps {
        let (run, _) = run_ensemble(&l, &entry, e, samples, seed)?;
        let ks = ks_distance(&run.exits.values, &pushed.measure);
        println!(
            "eps = {e}: lambda_c = {}, ks = {ks}, failures = {}",
            run.lambda_c,
            run.failure_count()
        );
        csv.row(&[
            e.into(),
            run.lambda_c.into(),
            ks.into(),
            run.exits.values.len().into(),
            run.failure_count().into(),
        ]);
        distances.push((e, ks));
    }
    distances.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = distances.windows(2).all(|w| w[1].1 <= w[0].1);
    println!("ks distances decreasing as eps decreases: {decreasing}");
    announce(&write_atomic(&l.out, "compare.csv", &csv.into_string())?);
    Ok(())
}
