use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::spec::{expected_duration, TransitionMatrix};
use crate::timeseries::Period;

use super::SmoothOutput;

/// Surge probability above which a quarter is classified as surge.
pub const SURGE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Surge,
    Steady,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Surge => "surge",
            Regime::Steady => "steady",
        }
    }
}

/// Maximal run of consecutive surge quarters, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: Period,
    pub end: Period,
}

impl std::fmt::Display for Episode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<(Period, Regime)>,
    pub episodes: Vec<Episode>,
}

impl Classification {
    pub fn regimes(&self) -> impl Iterator<Item = Regime> + '_ {
        self.labels.iter().map(|(_, r)| *r)
    }
}

/// Surge iff the smoothed surge probability is strictly above one half.
pub fn classify<T: Scalar>(sm: &SmoothOutput<T>, periods: &[Period]) -> Classification {
    let threshold = T::lit(SURGE_THRESHOLD);
    let labels: Vec<(Period, Regime)> = periods
        .iter()
        .zip(sm.surge_probs())
        .map(|(&p, prob)| (p, if prob > threshold { Regime::Surge } else { Regime::Steady }))
        .collect();
    let episodes = runs(labels.iter().map(|(_, r)| *r), Regime::Surge)
        .into_iter()
        .map(|(a, b)| Episode {
            start: labels[a].0,
            end: labels[b].0,
        })
        .collect();
    Classification { labels, episodes }
}

/// Inclusive index ranges of maximal runs of `target`.
fn runs(labels: impl Iterator<Item = Regime>, target: Regime) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    let mut last = 0;
    for (i, r) in labels.enumerate() {
        match (r == target, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
        last = i;
    }
    if let Some(s) = open {
        out.push((s, last));
    }
    out
}

/// Quarters classified in each regime divided by that regime's number of
/// runs; `None` for a regime that never occurs.
pub fn empirical_durations<T: Scalar>(class: &Classification) -> [Option<T>; 2] {
    [Regime::Surge, Regime::Steady].map(|target| {
        let count = class.regimes().filter(|&r| r == target).count();
        let episodes = runs(class.regimes(), target).len();
        (episodes > 0).then(|| T::from_count(count) / T::from_count(episodes))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Durations<T> {
    /// `1 / (1 - p_ii)` for `[surge, steady]`.
    pub model_implied: Option<[T; 2]>,
    /// Covariate value the time-varying matrix was evaluated at, if any.
    pub evaluated_at: Option<T>,
    pub empirical: [Option<T>; 2],
}

pub fn durations<T: Scalar>(
    tm: Option<&TransitionMatrix<T>>,
    class: Option<&Classification>,
) -> Durations<T> {
    Durations {
        model_implied: tm.map(|m| [expected_duration(m.p11), expected_duration(m.p22)]),
        evaluated_at: None,
        empirical: class.map_or([None, None], empirical_durations),
    }
}

/// Writes `period,p_surge,p_steady,regime_label`.
pub fn write_probabilities_csv<T: Scalar, W: Write>(
    writer: W,
    periods: &[Period],
    sm: &SmoothOutput<T>,
) -> Result<()> {
    let class = classify(sm, periods);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["period", "p_surge", "p_steady", "regime_label"])?;
    for ((p, row), (_, regime)) in periods.iter().zip(&sm.smoothed).zip(&class.labels) {
        w.write_record([
            p.to_string(),
            row[0].to_string(),
            row[1].to_string(),
            regime.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periods(n: usize) -> Vec<Period> {
        let s: Period = "2007Q1".parse().unwrap();
        (0..n).map(|i| s.offset(i as i64)).collect()
    }

    fn smooth_of(p: &[f64]) -> SmoothOutput<f64> {
        SmoothOutput {
            smoothed: p.iter().map(|&x| [x, 1.0 - x]).collect(),
        }
    }

    #[test]
    fn threshold_rule_and_episodes() {
        let c = classify(&smooth_of(&[0.9, 0.6, 0.4, 0.7]), &periods(4));
        let r: Vec<Regime> = c.regimes().collect();
        assert_eq!(r, [Regime::Surge, Regime::Surge, Regime::Steady, Regime::Surge]);
        assert_eq!(c.episodes.len(), 2);
        assert_eq!(c.episodes[0].to_string(), "2007Q1-2007Q2");
        assert_eq!(c.episodes[1].to_string(), "2007Q4-2007Q4");
    }

    #[test]
    fn ties_classify_as_steady() {
        let c = classify(&smooth_of(&[0.5; 5]), &periods(5));
        assert!(c.regimes().all(|r| r == Regime::Steady));
        assert!(c.episodes.is_empty());
        assert_eq!(empirical_durations::<f64>(&c), [None, Some(5.0)]);
    }

    #[test]
    fn dating_format() {
        let mut p = vec![0.1; 56];
        for i in (0..4).chain(8..12).chain(35..42).chain(52..56) {
            p[i] = 0.8;
        }
        let c = classify(&smooth_of(&p), &periods(56));
        let dated: Vec<String> = c.episodes.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            dated.join(", "),
            "2007Q1-2007Q4, 2009Q1-2009Q4, 2015Q4-2017Q2, 2020Q1-2020Q4"
        );
    }

    #[test]
    fn duration_arithmetic() {
        let d = durations(Some(&TransitionMatrix { p11: 0.5, p22: 0.75 }), None);
        assert_eq!(d.model_implied, Some([2.0, 4.0]));
        let d: Durations<f64> = durations(Some(&TransitionMatrix { p11: 0.7584, p22: 0.9433 }), None);
        let [s, t] = d.model_implied.unwrap();
        assert!((s - 4.139).abs() < 0.01);
        assert!((1.0 - 1.0 / 4.139_f64 - 0.7584).abs() < 1e-4);
        assert!((1.0 - 1.0 / 17.625_f64 - 0.9433).abs() < 1e-4);
        assert!((t - 1.0 / 0.0567).abs() < 1e-9);
    }

    #[test]
    fn empirical_duration_counts_runs() {
        let c = classify(&smooth_of(&[0.9, 0.9, 0.1, 0.1, 0.1, 0.9]), &periods(6));
        let [surge, steady] = empirical_durations::<f64>(&c);
        assert_eq!(surge, Some(1.5));
        assert_eq!(steady, Some(3.0));
    }

    #[test]
    fn probabilities_csv_layout() {
        let mut buf = Vec::new();
        write_probabilities_csv(&mut buf, &periods(2), &smooth_of(&[0.75, 0.25])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "period,p_surge,p_steady,regime_label\n2007Q1,0.75,0.25,surge\n2007Q2,0.25,0.75,steady\n"
        );
    }
}
