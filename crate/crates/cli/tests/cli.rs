use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_regimekit"));
    c.env_remove("REGIMEKIT_OUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two-regime DGP with the given regressors (all Gaussian) and `t` aligned
/// rows, written to `dir/name.json`.
fn dgp(dir: &Path, name: &str, regressors: &[(&str, usize)], tvtp: Option<(&str, usize)>, t: usize) -> PathBuf {
    let regs: Vec<String> = regressors
        .iter()
        .map(|(n, l)| format!(r#"{{"name":"{n}","lag":{l}}}"#))
        .collect();
    let betas = |b: f64| vec![b.to_string(); regressors.len()].join(",");
    let mut gens: Vec<String> = regressors
        .iter()
        .map(|(n, _)| format!(r#"{{"name":"{n}","mean":0.0,"sd":1.0}}"#))
        .collect();
    let (mode, cov, alpha1) = match tvtp {
        Some((n, l)) => {
            if !regressors.iter().any(|(r, _)| *r == n) {
                gens.push(format!(r#"{{"name":"{n}","mean":0.0,"sd":2.0}}"#));
            }
            (
                "TVTP",
                format!(r#","tp_covariate":{{"name":"{n}","lag":{l}}}"#),
                r#","alpha1":[0.0,0.4]"#,
            )
        }
        None => ("FTP", String::new(), ""),
    };
    let json = format!(
        r#"{{
  "spec": {{"regressors":[{}],"transition_mode":"{mode}"{cov}}},
  "params": {{
    "regime": [{{"mu":6.0,"betas":[{}],"log_var":0.1823}},{{"mu":1.0,"betas":[{}],"log_var":-0.5108}}],
    "transition": {{"alpha0":[1.1439,2.8116]{alpha1}}}
  }},
  "t": {t},
  "generators": [{}],
  "start": "1995Q1"
}}"#,
        regs.join(","),
        betas(-0.5),
        betas(0.2),
        gens.join(",")
    );
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, json).unwrap();
    path
}

/// Simulates `dgp` into `dir/<name>.csv` and returns the path.
fn simulated(dir: &Path, dgp: &Path, name: &str, seed: u64) -> PathBuf {
    let o = run(dir, &["simulate", "--dgp", p(dgp), "--seed", &seed.to_string(), "--name", name]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join(format!("{name}.csv"))
}

fn spec_file(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn describe_reports_table_one_columns() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[("credit", 1)], None, 150);
    let csv = simulated(dir.path(), &g, "data", 1);

    let o = run(dir.path(), &["describe", "--csv", p(&csv), "--vars", "pd,credit"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "| Variable | Mean | SD | Max | Min | ADF | N |");
    assert!(lines[2].starts_with("| pd | "));
    assert!(lines[3].starts_with("| credit | "));
    assert!(lines[4].is_empty());
    let table = fs::read_to_string(dir.path().join("describe.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("variable,mean,sd,max,min,adf,adf_stars,adf_lag,n\n"));

    // Default selection skips a non-numeric column.
    let text = fs::read_to_string(&csv).unwrap();
    let with_label: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 { format!("{l},note\n") } else { format!("{l},x{i}\n") })
        .collect();
    let labelled = spec_file(dir.path(), "labelled.csv", &with_label);
    let o = run(dir.path(), &["describe", "--csv", p(&labelled)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("| pd |") || l.starts_with("| credit |")).count(), 2);
    assert!(!stdout(&o).contains("| note |"));

    let o = run(dir.path(), &["describe", "--csv", p(&csv), "--vars", "pd,nope"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn fit_writes_four_artifacts_deterministically() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[("ca", 1)], None, 101);
    let csv = simulated(dir.path(), &g, "data", 11);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 103, "102 quarters plus header");
    let spec = spec_file(dir.path(), "m.json", r#"{"regressors":[{"name":"ca","lag":1}],"transition_mode":"FTP"}"#);

    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["fit", "--csv", p(&csv), "--spec", p(&spec), "--restarts", "6"];
    let oa = run(a.path(), &args);
    let ob = bin().env("REGIMEKIT_OUT", b.path()).arg("--out-dir").arg(a.path().join("ignored")).args(args).output().unwrap();
    assert!([0, 3].contains(&code(&oa)), "{}", stderr(&oa));
    assert_eq!(code(&oa), code(&ob));
    assert!(!a.path().join("ignored").exists());

    for name in ["fit.json", "table.md", "probs.csv", "probs.svg"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }

    let probs = fs::read_to_string(a.path().join("probs.csv")).unwrap();
    assert_eq!(probs.lines().count(), 1 + 101);
    assert!(probs.starts_with("period,p_surge,p_steady,regime_label\n"));

    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(json["version"], concat!("regimekit ", env!("CARGO_PKG_VERSION")));
    assert_eq!(json["fit"]["n_obs"], 101);
    assert_eq!(json["fit"]["filter"]["filtered"].as_array().unwrap().len(), 101);

    let svg = fs::read_to_string(a.path().join("probs.svg")).unwrap();
    assert!(svg.starts_with(r#"<svg xmlns="http://www.w3.org/2000/svg" width="900" height="360" viewBox="0 0 900 360""#));
    assert!(!svg.contains("href") && !svg.contains("url("));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn paper_spec_file_gives_table_layout() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[("y", 1), ("ca", 1), ("r", 1), ("oil", 2)], None, 101);
    let csv = simulated(dir.path(), &g, "data", 5);
    let m5 = models().join("m5.json");
    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&m5), "--restarts", "6", "--name", "M5"]);
    assert!([0, 3].contains(&code(&o)), "{}", stderr(&o));
    let md = fs::read_to_string(dir.path().join("table.md")).unwrap();
    let labels: Vec<&str> = md
        .lines()
        .filter_map(|l| l.strip_prefix("| ").and_then(|r| r.split(" |").next()))
        .collect();
    let expected_order = [
        "*Surge regime*",
        "μ^1",
        "log(σ_t^1)",
        "σ²^1 = exp(log σ)",
        "y_{t-1}^1",
        "ca_{t-1}^1",
        "r_{t-1}^1",
        "oil_{t-2}^1",
        "*Steady regime*",
        "μ^2",
        "*Coefficients of transition probability*",
        "α_0^1",
        "α_0^2",
        "AIC",
        "Loglikelihood",
        "Number of observations",
    ];
    let mut pos = 0;
    for want in expected_order {
        let at = labels[pos..].iter().position(|l| *l == want).unwrap_or_else(|| panic!("{want} missing after row {pos}"));
        pos += at + 1;
    }
    assert!(md.contains("| Number of observations | 101 |"));
    assert!(md.starts_with("| | M5 |"));
}

#[test]
fn mode_override_is_validated() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[], Some(("fin", 1)), 60);
    let csv = simulated(dir.path(), &g, "data", 2);
    let spec = spec_file(
        dir.path(),
        "t.json",
        r#"{"regressors":[],"transition_mode":"TVTP","tp_covariate":{"name":"fin","lag":1}}"#,
    );
    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&spec), "--mode", "ftp"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("covariate requires tvtp"), "{}", stderr(&o));
    assert!(!dir.path().join("fit.json").exists());

    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&spec), "--dep", "missing"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&spec), "--mode", "sideways"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn regimes_reads_episodes_and_durations() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[], None, 60);
    let csv = simulated(dir.path(), &g, "data", 8);
    let spec = spec_file(dir.path(), "f.json", r#"{"regressors":[],"transition_mode":"FTP"}"#);
    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&spec), "--restarts", "4"]);
    assert!([0, 3].contains(&code(&o)), "{}", stderr(&o));

    // Overwrite the smoothed path with a known pattern.
    let path = dir.path().join("fit.json");
    let mut json: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let periods: Vec<String> = json["fit"]["periods"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let surge_at = |i: usize| (3..=5).contains(&i) || (10..=11).contains(&i) || i == 20;
    let rows: Vec<serde_json::Value> = (0..periods.len())
        .map(|i| {
            let s = if surge_at(i) { 0.9 } else if i == 6 { 0.5 } else { 0.1 };
            serde_json::json!([s, 1.0 - s])
        })
        .collect();
    json["fit"]["smoothed"]["smoothed"] = serde_json::Value::Array(rows);
    fs::write(&path, serde_json::to_string(&json).unwrap()).unwrap();

    let o = bin().arg("regimes").arg(&path).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let want = [
        format!("  {}-{}", periods[3], periods[5]),
        format!("  {}-{}", periods[10], periods[11]),
        format!("  {}-{}", periods[20], periods[20]),
    ];
    for w in &want {
        assert!(out.contains(&format!("{w}\n")), "{w} not in\n{out}");
    }
    assert_eq!(out.lines().filter(|l| l.starts_with("  ") && l.contains('-') && l.contains('Q')).count(), 3);
    assert!(out.contains("model-implied 1/(1-p): "));
    // 6 surge quarters over 3 runs; (n - 6) steady quarters over 4 runs.
    let steady = (periods.len() - 6) as f64 / 4.0;
    assert!(out.contains(&format!("empirical (quarters per episode): 2.000 {steady:.3}\n")), "{out}");

    fs::write(&path, "{\"version\": 1}").unwrap();
    let o = bin().arg("regimes").arg(&path).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn tvtp_durations_are_marked_time_varying() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[], Some(("fin", 1)), 120);
    let csv = simulated(dir.path(), &g, "data", 3);
    let spec = spec_file(
        dir.path(),
        "t.json",
        r#"{"regressors":[],"transition_mode":"TVTP","tp_covariate":{"name":"fin","lag":1}}"#,
    );
    let o = run(dir.path(), &["fit", "--csv", p(&csv), "--spec", p(&spec), "--restarts", "4"]);
    assert!([0, 3].contains(&code(&o)), "{}", stderr(&o));
    let o = bin().arg("regimes").arg(dir.path().join("fit.json")).output().unwrap();
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("model-implied")).unwrap();
    assert!(line.contains("time-varying: evaluated at covariate mean"), "{line}");
    let nums: Vec<&str> = line.rsplit(": ").next().unwrap().split(' ').collect();
    assert_eq!(nums.len(), 2);
    for n in nums {
        assert_eq!(n.split('.').nth(1).map(str::len), Some(3), "{n}");
    }
}

#[test]
fn simulate_is_seeded() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[("x", 2)], None, 50);
    let a = fs::read(simulated(dir.path(), &g, "a", 4)).unwrap();
    let b = fs::read(simulated(dir.path(), &g, "b", 4)).unwrap();
    let c = fs::read(simulated(dir.path(), &g, "c", 5)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(
        fs::read(dir.path().join("a_states.csv")).unwrap(),
        fs::read(dir.path().join("b_states.csv")).unwrap()
    );
    let states = fs::read_to_string(dir.path().join("a_states.csv")).unwrap();
    assert_eq!(states.lines().count(), 51);
    assert!(states.lines().skip(1).all(|l| l.ends_with(",1") || l.ends_with(",2")));

    fs::write(dir.path().join("bad.json"), "{}").unwrap();
    let o = run(dir.path(), &["simulate", "--dgp", p(&dir.path().join("bad.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn recover_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[], None, 120);
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["recover", "--dgp", p(&g), "--reps", "4", "--seed", "7", "--restarts", "3"];
    let oa = run(a.path(), &args);
    let ob = bin().arg("--jobs").arg("1").arg("--out-dir").arg(b.path()).args(args).output().unwrap();
    assert_eq!(code(&oa), 0, "{}", stderr(&oa));
    assert_eq!(code(&ob), 0, "{}", stderr(&ob));
    assert_eq!(stdout(&oa), stdout(&ob));
    assert!(stderr(&oa).contains("wall-clock"));
    for name in ["recovery_summary.csv", "recovery_replications.csv", "recovery.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let summary = fs::read_to_string(a.path().join("recovery_summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().contains("coverage"));
    assert!(summary.lines().any(|l| l.starts_with("p11,")));

    let o = run(a.path(), &["recover", "--dgp", p(&g), "--reps", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lagsearch_writes_candidates() {
    let dir = TempDir::new().unwrap();
    let g = dgp(dir.path(), "g", &[("x", 2)], None, 150);
    let csv = simulated(dir.path(), &g, "data", 21);
    let base = spec_file(dir.path(), "base.json", r#"{"regressors":[],"transition_mode":"FTP"}"#);
    let o = run(
        dir.path(),
        &[
            "lagsearch", "--csv", p(&csv), "--spec", p(&base), "--var", "x", "--max-lag", "3", "--level", "1",
            "--restarts", "4",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("x: "), "{}", stdout(&o));
    let table = fs::read_to_string(dir.path().join("lagsearch_x.csv")).unwrap();
    assert!(table.starts_with("reg_lag,tp_lag,n_obs,loglik,aic,param,coef,se,stars,chosen,error\n"));
    assert_eq!(table.lines().count(), 1 + 3 * 2);

    let o = run(
        dir.path(),
        &[
            "lagsearch", "--csv", p(&csv), "--spec", p(&base), "--var", "x", "--rule", "aic", "--target",
            "transition", "--max-lag", "2", "--restarts", "3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("transition lag"), "{}", stdout(&o));

    let o = run(dir.path(), &["lagsearch", "--csv", p(&csv), "--spec", p(&base), "--var", "x", "--level", "2"]);
    assert_eq!(code(&o), 2);
}
