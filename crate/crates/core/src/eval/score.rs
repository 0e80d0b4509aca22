//! Official SemEval-2010 Task 8 scoring and bootstrap intervals.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Family, RelationLabel, NUM_FAMILIES, NUM_LABELS};
use crate::error::{Error, Result};

/// Precision, recall and F1 of one relation family, in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyScore {
    pub family: Family,
    pub true_positives: u64,
    /// Predictions falling in the family, either direction.
    pub predicted: u64,
    /// Gold instances of the family, either direction.
    pub gold: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub instances: usize,
    pub families: Vec<FamilyScore>,
    /// Mean family F1 over the families that occur in gold or predictions.
    pub macro_f1: f64,
    pub accuracy: f64,
    /// `confusion[gold][pred]` over the 19 label indices.
    pub confusion: Vec<Vec<u64>>,
    pub interval: Option<Interval>,
}

fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    tp: [u64; NUM_FAMILIES],
    predicted: [u64; NUM_FAMILIES],
    gold: [u64; NUM_FAMILIES],
    correct: u64,
    n: u64,
}

impl Tally {
    fn add(&mut self, gold: RelationLabel, pred: RelationLabel) {
        self.n += 1;
        if gold == pred {
            self.correct += 1;
        }
        if let Some(f) = gold.family() {
            self.gold[f.index()] += 1;
            if gold == pred {
                self.tp[f.index()] += 1;
            }
        }
        if let Some(f) = pred.family() {
            self.predicted[f.index()] += 1;
        }
    }

    fn family_scores(&self) -> Vec<FamilyScore> {
        Family::ALL
            .iter()
            .map(|&family| {
                let i = family.index();
                let precision = percent(self.tp[i], self.predicted[i]);
                let recall = percent(self.tp[i], self.gold[i]);
                FamilyScore {
                    family,
                    true_positives: self.tp[i],
                    predicted: self.predicted[i],
                    gold: self.gold[i],
                    precision,
                    recall,
                    f1: f1(precision, recall),
                }
            })
            .collect()
    }

    fn macro_f1(&self) -> f64 {
        let scores = self.family_scores();
        let present: Vec<f64> = scores
            .iter()
            .filter(|s| s.gold > 0 || s.predicted > 0)
            .map(|s| s.f1)
            .collect();
        if present.is_empty() {
            // Nothing but Other on either side: no family-level errors.
            100.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }
}

fn tally(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<Tally> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    let mut t = Tally::default();
    for (&g, &p) in gold.iter().zip(pred) {
        t.add(g, p);
    }
    Ok(t)
}

/// Scores predictions with directed matching: a true positive needs both
/// family and direction right, while family precision and recall count
/// either direction in their denominators.
pub fn score_semeval(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<EvalReport> {
    let t = tally(gold, pred)?;
    let mut confusion = vec![vec![0u64; NUM_LABELS]; NUM_LABELS];
    for (g, p) in gold.iter().zip(pred) {
        confusion[g.index()][p.index()] += 1;
    }
    Ok(EvalReport {
        instances: gold.len(),
        families: t.family_scores(),
        macro_f1: t.macro_f1(),
        accuracy: percent(t.correct, t.n),
        confusion,
        interval: None,
    })
}

/// Macro-F1 alone, in percent.
pub fn macro_f1(gold: &[RelationLabel], pred: &[RelationLabel]) -> Result<f64> {
    Ok(tally(gold, pred)?.macro_f1())
}

/// Percentile bootstrap interval of macro-F1 over instance resamples.
/// Iteration `i` draws from its own stream of the seeded generator, so the
/// result does not depend on thread scheduling.
pub fn bootstrap_ci(
    gold: &[RelationLabel],
    pred: &[RelationLabel],
    iterations: usize,
    level: f64,
    seed: u64,
) -> Result<Interval> {
    if iterations < 100 {
        return Err(Error::Config(
            "bootstrap needs at least 100 iterations".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    tally(gold, pred)?;
    if gold.is_empty() {
        return Err(Error::Empty("label sequence"));
    }
    let n = gold.len();
    let mut scores: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(it as u64);
            let mut t = Tally::default();
            for _ in 0..n {
                let j = rng.random_range(0..n);
                t.add(gold[j], pred[j]);
            }
            t.macro_f1()
        })
        .collect();
    scores.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        lower: quantile(&scores, tail),
        upper: quantile(&scores, 1.0 - tail),
        level,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl EvalReport {
    /// `key=value` lines for machine consumption.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("instances={}\n", self.instances));
        out.push_str(&format!("macro_f1={:.4}\n", self.macro_f1));
        out.push_str(&format!("accuracy={:.4}\n", self.accuracy));
        if let Some(ci) = self.interval {
            out.push_str(&format!("ci_level={}\n", ci.level));
            out.push_str(&format!("ci_lower={:.4}\n", ci.lower));
            out.push_str(&format!("ci_upper={:.4}\n", ci.upper));
        }
        for s in &self.families {
            let name = s.family.name();
            out.push_str(&format!("{name}.precision={:.4}\n", s.precision));
            out.push_str(&format!("{name}.recall={:.4}\n", s.recall));
            out.push_str(&format!("{name}.f1={:.4}\n", s.f1));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8}",
            "family", "tp", "pred", "gold", "P", "R", "F1"
        )?;
        for s in &self.families {
            writeln!(
                f,
                "{:<20} {:>6} {:>6} {:>6} {:>8.2} {:>8.2} {:>8.2}",
                s.family.name(),
                s.true_positives,
                s.predicted,
                s.gold,
                s.precision,
                s.recall,
                s.f1
            )?;
        }
        writeln!(f)?;
        writeln!(f, "instances      {}", self.instances)?;
        writeln!(f, "macro-F1       {:.2}", self.macro_f1)?;
        writeln!(f, "accuracy       {:.2}", self.accuracy)?;
        if let Some(ci) = self.interval {
            writeln!(
                f,
                "{:.0}% interval  ({:.2}, {:.2})",
                ci.level * 100.0,
                ci.lower,
                ci.upper
            )?;
        }
        Ok(())
    }
}
