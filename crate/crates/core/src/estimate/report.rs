//! Markdown coefficient table: one column per model, coefficients with
//! parenthesised standard errors and significance stars, and an AIC /
//! log-likelihood / observation-count footer. Numbers use three decimals.

use std::fmt::Write;

use crate::scalar::Scalar;

use super::{stars, FitResult};

fn cell<T: Scalar>(v: T, se: Option<T>) -> String {
    let marker = stars(v, se).marker();
    match se {
        Some(s) => format!("{:.3}{marker} ({:.3})", v.to_f64_lossy(), s.to_f64_lossy()),
        None => format!("{:.3}{marker} (-)", v.to_f64_lossy()),
    }
}

fn lagged_label(name: &str, lag: usize, regime: usize) -> String {
    if lag == 0 {
        format!("{name}_t^{regime}")
    } else {
        format!("{name}_{{t-{lag}}}^{regime}")
    }
}

struct Row {
    label: String,
    cells: Vec<String>,
}

fn push_row(rows: &mut Vec<Row>, label: String, col: usize, ncols: usize, value: String) {
    let row = match rows.iter().position(|r| r.label == label) {
        Some(i) => &mut rows[i],
        None => {
            rows.push(Row {
                label,
                cells: vec![String::new(); ncols],
            });
            rows.last_mut().unwrap()
        }
    };
    row.cells[col] = value;
}

/// Renders fits side by side under the given column titles.
pub fn markdown_table<T: Scalar>(fits: &[(&str, &FitResult<T>)]) -> String {
    let ncols = fits.len();
    let mut sections: [Vec<Row>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (col, (_, fit)) in fits.iter().enumerate() {
        let flat = fit.params.pack();
        let k = fit.spec.n_regressors();
        for s in 0..2 {
            let off = s * (k + 2);
            let rows = &mut sections[s];
            let regime = s + 1;
            push_row(rows, format!("μ^{regime}"), col, ncols, cell(flat[off], fit.std_errors[off]));
            let lv = off + k + 1;
            push_row(rows, format!("log(σ_t^{regime})"), col, ncols, cell(flat[lv], fit.std_errors[lv]));
            push_row(
                rows,
                format!("σ²^{regime} = exp(log σ)"),
                col,
                ncols,
                format!("{:.3}", flat[lv].exp().to_f64_lossy()),
            );
            for (j, r) in fit.spec.regressors().iter().enumerate() {
                let i = off + 1 + j;
                push_row(rows, lagged_label(&r.name, r.lag, regime), col, ncols, cell(flat[i], fit.std_errors[i]));
            }
        }
        let a = 2 * (k + 2);
        // Regime by regime, as in the paper: α_0^1, α_1^1, α_0^2, α_1^2.
        let order: &[(usize, &str)] = if fit.spec.is_tvtp() {
            &[(0, "α_0^1"), (2, "α_1^1"), (1, "α_0^2"), (3, "α_1^2")]
        } else {
            &[(0, "α_0^1"), (1, "α_0^2")]
        };
        for &(j, label) in order {
            push_row(&mut sections[2], label.to_string(), col, ncols, cell(flat[a + j], fit.std_errors[a + j]));
        }
    }

    let mut out = String::new();
    let titles: Vec<&str> = fits.iter().map(|(t, _)| *t).collect();
    let _ = writeln!(out, "| | {} |", titles.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(ncols));
    let dep = fits.first().map(|(_, f)| f.dependent.as_str()).unwrap_or("");
    let _ = writeln!(out, "| *Dependent variable: {dep}* |{}", " |".repeat(ncols));
    let covariates: Vec<String> = fits
        .iter()
        .map(|(_, f)| {
            f.spec
                .tp_covariate()
                .map(|c| lagged_label(&c.name, c.lag, 0).replace("^0", ""))
                .unwrap_or_default()
        })
        .collect();
    if covariates.iter().any(|c| !c.is_empty()) {
        let _ = writeln!(out, "| fin_{{t-l_0}} | {} |", covariates.join(" | "));
    }
    let titles = ["*Surge regime*", "*Steady regime*", "*Coefficients of transition probability*"];
    for (title, rows) in titles.iter().zip(&sections) {
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(out, "| {title} |{}", " |".repeat(ncols));
        for r in rows {
            let _ = writeln!(out, "| {} | {} |", r.label, r.cells.join(" | "));
        }
    }
    let footer = |f: &dyn Fn(&FitResult<T>) -> String| {
        fits.iter().map(|(_, fit)| f(fit)).collect::<Vec<_>>().join(" | ")
    };
    let _ = writeln!(out, "| AIC | {} |", footer(&|f| format!("{:.3}", f.aic.to_f64_lossy())));
    let _ = writeln!(out, "| Loglikelihood | {} |", footer(&|f| format!("{:.3}", f.loglik.to_f64_lossy())));
    let _ = writeln!(out, "| Number of observations | {} |", footer(&|f| f.n_obs.to_string()));
    out.push_str(
        "\nStandard errors in parentheses. *, ** and *** represent significance at 10%, 5% and 1% level.\n",
    );
    out
}
