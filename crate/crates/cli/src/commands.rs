use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use regimekit::estimate::report::markdown_table;
use regimekit::estimate::{fit, FitOptions};
use regimekit::filter::{classify, empirical_durations, write_probabilities_csv};
use regimekit::select::{aic_lag_search, min_significant_lag, LagSearch};
use regimekit::simulate::{recover, simulate};
use regimekit::timeseries::{describe, load_csv, write_csv, SummaryStats};
use regimekit::{DGPConfig, FitResult, ModelSpec, Series};
use serde::{Deserialize, Serialize};

use crate::args::{DescribeArgs, FitArgs, LagsearchArgs, RecoverArgs, RegimesArgs, Rule, SimulateArgs};
use crate::error::{CliError, CliResult, ESTIMATION, WARNINGS};
use crate::svg::probability_chart;

pub const VERSION: &str = concat!("regimekit ", env!("CARGO_PKG_VERSION"));

/// Contents of `fit.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitArtifact {
    pub version: String,
    pub fit: FitResult,
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{what} {}: {e}", path.display())))
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn csv_header(path: &Path) -> CliResult<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(headers.iter().map(|h| h.trim().to_string()).collect())
}

// ---------------------------------------------------------------------------
// describe

pub fn describe_cmd(args: &DescribeArgs, out: &Path) -> CliResult<u8> {
    let data = &args.data;
    let series: Vec<Series> = if args.vars.is_empty() {
        // Every column that parses as numbers.
        let mut all = Vec::new();
        for name in csv_header(&data.csv)? {
            if name == data.date_column {
                continue;
            }
            match load_csv::<f64>(&data.csv, &data.date_column, &[name.as_str()]) {
                Ok(mut s) => all.append(&mut s),
                Err(regimekit::Error::Load { ref column, .. }) if *column == name => {}
                Err(e) => return Err(e.into()),
            }
        }
        all
    } else {
        let names: Vec<&str> = args.vars.iter().map(String::as_str).collect();
        load_csv(&data.csv, &data.date_column, &names)?
    };
    if series.is_empty() {
        return Err(CliError::usage("no numeric columns to describe"));
    }

    let rows: Vec<(String, SummaryStats<f64>)> = series
        .iter()
        .map(|s| Ok((s.name().to_string(), describe(s, args.max_lag)?)))
        .collect::<regimekit::Result<_>>()?;

    let mut table = String::from("| Variable | Mean | SD | Max | Min | ADF | N |\n|---|---|---|---|---|---|---|\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::usage(e.to_string());
    w.write_record(["variable", "mean", "sd", "max", "min", "adf", "adf_stars", "adf_lag", "n"])
        .map_err(io)?;
    for (name, st) in &rows {
        let adf = st.adf.expect("describe runs the ADF test");
        let stars = adf.reject_level.stars();
        let _ = writeln!(
            table,
            "| {name} | {} | {} | {} | {} | {}{stars} | {} |",
            fmt3(st.mean),
            fmt3(st.sd),
            fmt3(st.max),
            fmt3(st.min),
            fmt3(adf.tstat),
            st.n_obs
        );
        w.write_record([
            name.clone(),
            st.mean.to_string(),
            st.sd.to_string(),
            st.max.to_string(),
            st.min.to_string(),
            adf.tstat.to_string(),
            stars.to_string(),
            adf.lag.to_string(),
            st.n_obs.to_string(),
        ])
        .map_err(io)?;
    }
    table.push_str("\nADF: constant-only, lag by AIC; * / ** / *** reject a unit root at 10% / 5% / 1%.\n");
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    write_artifact(out, "describe.csv", &bytes)?;
    print!("{table}");
    Ok(0)
}

// ---------------------------------------------------------------------------
// fit

fn variables(spec: &ModelSpec, dep: &str) -> Vec<String> {
    let mut names = vec![dep.to_string()];
    for v in spec.regressors().iter().chain(spec.tp_covariate()) {
        if !names.contains(&v.name) {
            names.push(v.name.clone());
        }
    }
    names
}

fn load_spec(path: &Path, mode: Option<crate::args::Mode>) -> CliResult<ModelSpec> {
    let spec: ModelSpec = read_json(path, "model spec")?;
    match mode {
        None => Ok(spec),
        Some(m) => {
            let s = ModelSpec::new(spec.regressors().to_vec(), m.into(), spec.tp_covariate().cloned())?;
            Ok(s.with_initial(spec.initial()))
        }
    }
}

fn load_for(spec: &ModelSpec, dep: &str, data: &crate::args::DataArgs) -> CliResult<Vec<Series>> {
    let names = variables(spec, dep);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(load_csv(&data.csv, &data.date_column, &names)?)
}

pub fn fit_cmd(args: &FitArgs, out: &Path) -> CliResult<u8> {
    let spec = load_spec(&args.spec, args.mode)?;
    let series = load_for(&spec, &args.dep, &args.data)?;
    let ds = spec.build_dataset(&series, &args.dep)?;
    let options = FitOptions::default()
        .with_restarts(args.control.restarts)
        .with_seed(args.control.seed);
    let f = fit(&ds, &spec, &options)?;

    let title = args.name.clone().unwrap_or_else(|| {
        args.spec
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    });
    let table = markdown_table(&[(title.as_str(), &f)]);

    let mut probs = Vec::new();
    write_probabilities_csv(&mut probs, &f.periods, &f.smoothed)?;
    let surge: Vec<f64> = f.smoothed.surge_probs().collect();
    let chart = probability_chart(&f.periods, &surge, &f.dep, &f.dependent, &f.classification.episodes);

    let artifact = FitArtifact {
        version: VERSION.to_string(),
        fit: f,
    };
    let json = serde_json::to_string_pretty(&artifact).map_err(|e| CliError::usage(e.to_string()))?;
    write_artifact(out, "fit.json", format!("{json}\n").as_bytes())?;
    write_artifact(out, "table.md", table.as_bytes())?;
    write_artifact(out, "probs.csv", &probs)?;
    write_artifact(out, "probs.svg", chart.as_bytes())?;

    let f = &artifact.fit;
    print!("{table}");
    println!();
    print!("{}", regimes_report(f));
    if f.warnings.is_empty() {
        Ok(0)
    } else {
        for w in &f.warnings {
            eprintln!("warning: {}", serde_json::to_string(w).unwrap_or_default().trim_matches('"'));
        }
        Ok(WARNINGS)
    }
}

// ---------------------------------------------------------------------------
// regimes

fn opt3(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => fmt3(x),
        Some(_) => "inf".into(),
        None => "-".into(),
    }
}

/// Episode list and the two kinds of duration, in quarters.
pub fn regimes_report(f: &FitResult) -> String {
    let mut s = String::from("Surge episodes (smoothed surge probability > 0.5):\n");
    if f.classification.episodes.is_empty() {
        s.push_str("  none\n");
    }
    for e in &f.classification.episodes {
        let _ = writeln!(s, "  {e}");
    }
    let d = &f.durations;
    let _ = writeln!(s, "Expected durations (quarters):    surge    steady");
    let model = d.model_implied.map_or([None, None], |m| [Some(m[0]), Some(m[1])]);
    let label = match (f.spec.is_tvtp(), d.evaluated_at) {
        (true, Some(at)) => format!("model-implied (time-varying: evaluated at covariate mean {})", fmt3(at)),
        (true, None) => "model-implied (time-varying: evaluated at covariate mean)".to_string(),
        (false, _) => "model-implied 1/(1-p)".to_string(),
    };
    let _ = writeln!(s, "  {label}: {} {}", opt3(model[0]), opt3(model[1]));
    let _ = writeln!(
        s,
        "  empirical (quarters per episode): {} {}",
        opt3(d.empirical[0]),
        opt3(d.empirical[1])
    );
    s
}

pub fn regimes_cmd(args: &RegimesArgs) -> CliResult<u8> {
    let mut a: FitArtifact = read_json(&args.fit, "fit artifact")?;
    let f = &mut a.fit;
    let n = f.periods.len();
    if n == 0 || f.smoothed.smoothed.len() != n || f.param_names.len() != f.std_errors.len() {
        return Err(CliError::usage(format!(
            "fit artifact {}: inconsistent series lengths",
            args.fit.display()
        )));
    }
    // Episodes are recomputed from the stored probabilities.
    f.classification = classify(&f.smoothed, &f.periods);
    f.durations.empirical = empirical_durations(&f.classification);
    print!("{}", regimes_report(f));
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate / recover

fn load_dgp(path: &Path, seed: Option<u64>) -> CliResult<DGPConfig> {
    let mut cfg: DGPConfig = read_json(path, "DGP file")?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate_cmd(args: &SimulateArgs, out: &Path) -> CliResult<u8> {
    let cfg = load_dgp(&args.dgp, args.seed)?;
    let sim = simulate(&cfg)?;
    let mut data = Vec::new();
    write_csv(&mut data, &args.date_column, &sim.series)?;
    let mut states = Vec::new();
    sim.write_states_csv(&mut states)?;
    let a = write_artifact(out, &format!("{}.csv", args.name), &data)?;
    let b = write_artifact(out, &format!("{}_states.csv", args.name), &states)?;
    println!("wrote {} and {}", a.display(), b.display());
    Ok(0)
}

pub fn recover_cmd(args: &RecoverArgs, out: &Path) -> CliResult<u8> {
    if args.reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let cfg = load_dgp(&args.dgp, args.seed)?;
    let options = FitOptions::default().with_restarts(args.restarts);
    let started = Instant::now();
    let report = recover(&cfg, args.reps, &options)?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    let mut reps = Vec::new();
    report.write_replications_csv(&mut reps)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::usage(e.to_string()))?;
    write_artifact(out, "recovery_summary.csv", &summary)?;
    write_artifact(out, "recovery_replications.csv", &reps)?;
    write_artifact(out, "recovery.json", format!("{json}\n").as_bytes())?;

    println!("| param | truth | mean | bias | median abs bias | RMSE | 95% coverage |");
    println!("|---|---|---|---|---|---|---|");
    for s in &report.summaries {
        println!(
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.3} |",
            s.name, s.truth, s.mean, s.bias, s.median_abs_bias, s.rmse, s.coverage
        );
    }
    match report.median_accuracy {
        Some(a) => println!("median classification accuracy: {a:.3}"),
        None => println!("median classification accuracy: -"),
    }
    println!("failed replications: {} of {}", report.failures, args.reps);
    // Timing stays out of the artifacts so they are reproducible.
    eprintln!(
        "wall-clock: {elapsed:.2}s total, {:.3}s per replication",
        elapsed / args.reps as f64
    );
    if report.failures == args.reps {
        return Err(CliError {
            code: ESTIMATION,
            message: "every replication failed".into(),
        });
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// lagsearch

pub fn lagsearch_cmd(args: &LagsearchArgs, out: &Path) -> CliResult<u8> {
    let base = load_spec(&args.spec, None)?;
    let mut series = load_for(&base, &args.dep, &args.data)?;
    if !series.iter().any(|s| s.name() == args.var) {
        series.extend(load_csv(&args.data.csv, &args.data.date_column, &[args.var.as_str()])?);
    }
    let options = FitOptions::default()
        .with_restarts(args.control.restarts)
        .with_seed(args.control.seed);
    let search: LagSearch<f64> = match args.rule {
        Rule::Significance => min_significant_lag(
            &series,
            &args.dep,
            &base,
            &args.var,
            args.max_lag,
            args.level.into(),
            args.regimes.into(),
            &options,
        )?,
        Rule::Aic => aic_lag_search(&series, &args.dep, &base, &args.var, args.target.into(), args.max_lag, &options)?,
    };
    let mut csv = Vec::new();
    search.write_csv(&mut csv)?;
    let path = write_artifact(out, &format!("lagsearch_{}.csv", args.var), &csv)?;
    for w in &search.warnings {
        eprintln!("warning: {w}");
    }
    match search.chosen() {
        None => println!("{}: no lag selected", args.var),
        Some(c) => {
            let mut parts = Vec::new();
            if let Some(l) = c.reg_lag {
                parts.push(format!("regression lag {l}"));
            }
            if let Some(l) = c.tp_lag {
                parts.push(format!("transition lag {l}"));
            }
            println!("{}: {}", args.var, parts.join(", "));
        }
    }
    println!("candidates written to {}", path.display());
    Ok(0)
}
