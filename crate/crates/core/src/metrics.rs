//! Duration-level and episode-level scoring.
//!
//! Seizure is the positive class. Every ratio with a zero denominator is
//! defined as 0, so fold averages never divide by zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::LabelSequence;

/// Sensitivity, precision and F1 of one scoring level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub ppv: f64,
    pub f1: f64,
}

impl Rates {
    pub fn from_ratios(tpr: f64, ppv: f64) -> Self {
        Self {
            tpr,
            ppv,
            f1: f1(tpr, ppv),
        }
    }
}

/// `2 * tpr * ppv / (tpr + ppv)`, or 0 when both are 0.
pub fn f1(tpr: f64, ppv: f64) -> f64 {
    if tpr + ppv > 0.0 {
        2.0 * tpr * ppv / (tpr + ppv)
    } else {
        0.0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sample-wise confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DurationCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl DurationCounts {
    pub fn count(pred: &[bool], truth: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        c
    }

    pub fn add(&mut self, other: &Self) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn rates(&self) -> Rates {
        Rates::from_ratios(ratio(self.tp, self.tp + self.fn_), ratio(self.tp, self.tp + self.fp))
    }
}

/// Episode counts under any-overlap matching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EpisodeCounts {
    pub true_episodes: u64,
    pub detected: u64,
    pub predicted_episodes: u64,
    pub predicted_correct: u64,
}

/// Maximal runs of `true` as half-open `[start, end)` ranges.
pub fn episodes(x: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in x.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, x.len()));
    }
    out
}

impl EpisodeCounts {
    pub fn count(pred: &[bool], truth: &[bool]) -> Self {
        let overlaps = |(s, e): (usize, usize), other: &[bool]| other[s..e].iter().any(|&v| v);
        let true_eps = episodes(truth);
        let pred_eps = episodes(pred);
        Self {
            true_episodes: true_eps.len() as u64,
            detected: true_eps.iter().filter(|&&ep| overlaps(ep, pred)).count() as u64,
            predicted_episodes: pred_eps.len() as u64,
            predicted_correct: pred_eps.iter().filter(|&&ep| overlaps(ep, truth)).count() as u64,
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.true_episodes += other.true_episodes;
        self.detected += other.detected;
        self.predicted_episodes += other.predicted_episodes;
        self.predicted_correct += other.predicted_correct;
    }

    pub fn rates(&self) -> Rates {
        Rates::from_ratios(
            ratio(self.detected, self.true_episodes),
            ratio(self.predicted_correct, self.predicted_episodes),
        )
    }
}

fn check_lengths(pred: &LabelSequence, truth: &LabelSequence) -> Result<(Vec<bool>, Vec<bool>)> {
    if pred.len() != truth.len() {
        return Err(Error::Usage(format!(
            "prediction length {} differs from truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok((pred.positives().collect(), truth.positives().collect()))
}

pub fn duration_scores(pred: &LabelSequence, truth: &LabelSequence) -> Result<Rates> {
    let (p, t) = check_lengths(pred, truth)?;
    Ok(DurationCounts::count(&p, &t).rates())
}

pub fn episode_scores(pred: &LabelSequence, truth: &LabelSequence) -> Result<Rates> {
    let (p, t) = check_lengths(pred, truth)?;
    Ok(EpisodeCounts::count(&p, &t).rates())
}

/// Geometric mean of duration and episode F1.
pub fn f1de_gmean(f1_duration: f64, f1_episode: f64) -> f64 {
    (f1_duration * f1_episode).sqrt()
}

/// Both scoring levels plus their geometric mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub duration: Rates,
    pub episode: Rates,
    pub f1de_gmean: f64,
}

impl ScoreSet {
    pub fn new(duration: Rates, episode: Rates) -> Self {
        Self {
            duration,
            episode,
            f1de_gmean: f1de_gmean(duration.f1, episode.f1),
        }
    }

    pub fn score(pred: &LabelSequence, truth: &LabelSequence) -> Result<Self> {
        Ok(Self::new(duration_scores(pred, truth)?, episode_scores(pred, truth)?))
    }

    /// Scores pooled counts over several independent sequences (e.g. files).
    pub fn pooled(pairs: &[(Vec<bool>, Vec<bool>)]) -> Self {
        let mut d = DurationCounts::default();
        let mut e = EpisodeCounts::default();
        for (p, t) in pairs {
            d.add(&DurationCounts::count(p, t));
            e.add(&EpisodeCounts::count(p, t));
        }
        Self::new(d.rates(), e.rates())
    }

    fn fields(&self) -> [f64; 7] {
        [
            self.duration.tpr,
            self.duration.ppv,
            self.duration.f1,
            self.episode.tpr,
            self.episode.ppv,
            self.episode.f1,
            self.f1de_gmean,
        ]
    }

    fn from_fields(f: [f64; 7]) -> Self {
        Self {
            duration: Rates {
                tpr: f[0],
                ppv: f[1],
                f1: f[2],
            },
            episode: Rates {
                tpr: f[3],
                ppv: f[4],
                f1: f[5],
            },
            f1de_gmean: f[6],
        }
    }
}

/// Field-wise arithmetic mean over folds. The geometric mean is averaged
/// directly rather than recomputed from the averaged F1 values.
pub fn aggregate_subject(scores: &[ScoreSet]) -> Result<ScoreSet> {
    if scores.is_empty() {
        return Err(Error::Usage("no fold scores to aggregate".into()));
    }
    let mut sum = [0.0; 7];
    for s in scores {
        for (acc, v) in sum.iter_mut().zip(s.fields()) {
            *acc += v;
        }
    }
    let n = scores.len() as f64;
    Ok(ScoreSet::from_fields(sum.map(|v| v / n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(bits: &[u8]) -> LabelSequence {
        LabelSequence::from_bits(bits)
    }

    #[test]
    fn perfect_prediction() {
        let t = seq(&[0, 1, 1, 0, 1]);
        let s = ScoreSet::score(&t, &t).unwrap();
        assert_eq!(
            s.duration,
            Rates {
                tpr: 1.0,
                ppv: 1.0,
                f1: 1.0
            }
        );
        assert_eq!(
            s.episode,
            Rates {
                tpr: 1.0,
                ppv: 1.0,
                f1: 1.0
            }
        );
        assert_eq!(s.f1de_gmean, 1.0);
    }

    #[test]
    fn duration_hand_count() {
        let r = duration_scores(&seq(&[0, 1, 1, 0, 1, 0]), &seq(&[0, 0, 1, 1, 1, 0])).unwrap();
        assert!((r.tpr - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.ppv - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_conventions() {
        let zeros = seq(&[0; 10]);
        assert_eq!(duration_scores(&zeros, &zeros).unwrap(), Rates::default());
        assert_eq!(episode_scores(&zeros, &zeros).unwrap(), Rates::default());
        let truth = seq(&[0, 1, 1, 0, 0]);
        assert_eq!(
            episode_scores(&zeros.clone(), &seq(&[0, 1, 1, 0, 0, 0, 0, 0, 0, 0])).unwrap(),
            Rates::default()
        );
        assert!(duration_scores(&zeros, &truth).is_err());
    }

    #[test]
    fn episode_hand_count() {
        // truth episodes at [3,7) and [12,16); prediction hits the first and adds one at [18,20)
        let mut t = [0u8; 20];
        let mut p = [0u8; 20];
        t[3..7].fill(1);
        t[12..16].fill(1);
        p[5..9].fill(1);
        p[18..20].fill(1);
        let r = episode_scores(&seq(&p), &seq(&t)).unwrap();
        assert_eq!(
            r,
            Rates {
                tpr: 0.5,
                ppv: 0.5,
                f1: 0.5
            }
        );
    }

    #[test]
    fn single_episode_fully_covered() {
        let mut t = [0u8; 20];
        t[4..10].fill(1);
        let mut p = [0u8; 20];
        p[3..12].fill(1);
        assert_eq!(
            episode_scores(&seq(&p), &seq(&t)).unwrap(),
            Rates {
                tpr: 1.0,
                ppv: 1.0,
                f1: 1.0
            }
        );
    }

    #[test]
    fn gmean_examples() {
        assert_eq!(f1de_gmean(1.0, 1.0), 1.0);
        assert_eq!(f1de_gmean(0.0, 0.7), 0.0);
        assert!((f1de_gmean(0.64, 0.81) - 0.72).abs() < 1e-12);
    }

    #[test]
    fn aggregation_averages_fields() {
        let a = ScoreSet {
            f1de_gmean: 0.6,
            ..Default::default()
        };
        let b = ScoreSet {
            f1de_gmean: 0.8,
            ..Default::default()
        };
        assert!((aggregate_subject(&[a, b]).unwrap().f1de_gmean - 0.7).abs() < 1e-15);
        let single = ScoreSet::new(Rates::from_ratios(0.3, 0.9), Rates::from_ratios(1.0, 0.5));
        assert_eq!(aggregate_subject(&[single]).unwrap(), single);
        assert!(aggregate_subject(&[]).is_err());
    }

    #[test]
    fn episodes_extraction() {
        assert_eq!(episodes(&[true, true, false, true]), vec![(0, 2), (3, 4)]);
        assert!(episodes(&[false; 3]).is_empty());
    }
}
