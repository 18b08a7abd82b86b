//! Post-training reduction of the number of sub-classes.
//!
//! Each step selects the `ceil(step_fraction * n)` least populated
//! sub-classes (ties: highest id first), never the last one of a label, and
//! either deletes them or merges each into its nearest surviving same-label
//! sub-class. The step is kept only if the smoothed training-set F1DEgmean
//! stays at or above `(1 - tolerance)` times the unreduced model's score;
//! the first violating step is reverted and the procedure stops.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{evaluate_files, EncodedFile, Smoothing};
use crate::training::{GlobalLabel, Model, SubClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionStrategy {
    Removal,
    Clustering,
}

impl fmt::Display for ReductionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionStrategy::Removal => "removal",
            ReductionStrategy::Clustering => "clustering",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub step_fraction: f64,
    pub tolerance: f64,
    pub strategy: ReductionStrategy,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl ReductionConfig {
    pub fn new(strategy: ReductionStrategy) -> Self {
        Self {
            step_fraction: 0.10,
            tolerance: 0.03,
            strategy,
            smoothing: Smoothing::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::Config(format!(
                "step fraction must be in (0, 1), got {}",
                self.step_fraction
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// One evaluated reduction step; step 0 is the unreduced model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionStep {
    pub step: usize,
    pub strategy: ReductionStrategy,
    pub seizure_subclasses: usize,
    pub nonseizure_subclasses: usize,
    /// Windows still represented by the model.
    pub absorbed_windows: u64,
    pub train_f1de_gmean: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub model: Model,
    pub baseline_score: f64,
    pub final_score: f64,
    pub trace: Vec<ReductionStep>,
}

/// Indices of the sub-classes to drop in the next step.
fn select(model: &Model, fraction: f64) -> Vec<usize> {
    let subs = model.subclasses();
    let k = (fraction * subs.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..subs.len()).collect();
    order.sort_by(|&a, &b| {
        subs[a]
            .count()
            .cmp(&subs[b].count())
            .then(subs[b].id().cmp(&subs[a].id()))
    });
    let mut remaining = [
        model.count_for(GlobalLabel::NonSeizure),
        model.count_for(GlobalLabel::Seizure),
    ];
    let mut chosen = Vec::with_capacity(k);
    for i in order {
        if chosen.len() == k {
            break;
        }
        let slot = subs[i].label() as usize;
        if remaining[slot] > 1 {
            remaining[slot] -= 1;
            chosen.push(i);
        }
    }
    chosen
}

/// Applies one removal or clustering step to a copy of `model`.
fn apply_step(model: &Model, chosen: &[usize], strategy: ReductionStrategy) -> Result<Model> {
    let chosen_set: HashSet<usize> = chosen.iter().copied().collect();
    let subs = model.subclasses();
    let mut survivors: Vec<SubClass> = subs
        .iter()
        .enumerate()
        .filter(|(i, _)| !chosen_set.contains(i))
        .map(|(_, s)| s.clone())
        .collect();
    if strategy == ReductionStrategy::Clustering {
        // targets are found against the prototypes as they were before this step
        let snapshot = survivors.clone();
        let mut merges: Vec<(usize, usize)> = Vec::with_capacity(chosen.len());
        for &i in chosen {
            let src = &subs[i];
            let target = snapshot
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label() == src.label())
                .map(|(j, s)| (s.prototype().hamming(src.prototype()).unwrap_or(u32::MAX), s.id(), j))
                .min()
                .map(|(_, _, j)| j)
                .ok_or_else(|| Error::Usage("no surviving sub-class to merge into".into()))?;
            merges.push((i, target));
        }
        for (src, dst) in merges {
            survivors[dst].absorb_subclass(&subs[src], model.tiebreak())?;
        }
    }
    let mut reduced = model.clone();
    *reduced.subclasses_mut() = survivors;
    Ok(reduced)
}

fn record(step: usize, model: &Model, strategy: ReductionStrategy, score: f64, accepted: bool) -> ReductionStep {
    ReductionStep {
        step,
        strategy,
        seizure_subclasses: model.count_for(GlobalLabel::Seizure),
        nonseizure_subclasses: model.count_for(GlobalLabel::NonSeizure),
        absorbed_windows: model.total_absorbed(),
        train_f1de_gmean: score,
        accepted,
    }
}

/// Iteratively shrinks `model` while the training score stays within tolerance.
pub fn reduce(model: &Model, train: &[EncodedFile], cfg: &ReductionConfig) -> Result<ReductionOutcome> {
    cfg.validate()?;
    for label in GlobalLabel::ALL {
        if model.count_for(label) == 0 {
            return Err(Error::Usage(format!("model has no {label} sub-class")));
        }
        if !train.iter().any(|f| f.labels.contains(&label)) {
            return Err(Error::Usage(format!("training set has no {label} windows")));
        }
    }
    let baseline = evaluate_files(model, train, Some(cfg.smoothing))?.f1de_gmean;
    let floor = (1.0 - cfg.tolerance) * baseline;
    let mut trace = vec![record(0, model, cfg.strategy, baseline, true)];
    let mut current = model.clone();
    let mut current_score = baseline;
    loop {
        let chosen = select(&current, cfg.step_fraction);
        if chosen.is_empty() {
            break;
        }
        let candidate = apply_step(&current, &chosen, cfg.strategy)?;
        let score = evaluate_files(&candidate, train, Some(cfg.smoothing))?.f1de_gmean;
        let accepted = score >= floor;
        trace.push(record(trace.len(), &candidate, cfg.strategy, score, accepted));
        if !accepted {
            break;
        }
        current = candidate;
        current_score = score;
    }
    Ok(ReductionOutcome {
        model: current,
        baseline_score: baseline,
        final_score: current_score,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdcore::{Hypervector, TieBreaker};
    use crate::training::{train_multicentroid, ModelKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(center: &Hypervector, flips: usize, rng: &mut ChaCha8Rng) -> Hypervector {
        let mut v = center.clone();
        for _ in 0..flips {
            let b = rng.random_range(0..v.dim());
            v.set(b, !v.bit(b));
        }
        v
    }

    /// A file with long runs of two clean clusters.
    fn clustered_file(centers: &[Hypervector; 2], rng: &mut ChaCha8Rng) -> EncodedFile {
        let mut f = EncodedFile::default();
        for i in 0..60 {
            let label = GlobalLabel::from_bool((20..35).contains(&i));
            f.vectors.push(noisy(&centers[label as usize], 40, rng));
            f.labels.push(label);
        }
        f
    }

    #[test]
    fn one_subclass_per_label_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tie = TieBreaker::generate(1024, &mut rng).unwrap();
        let centers = [
            Hypervector::random(1024, &mut rng).unwrap(),
            Hypervector::random(1024, &mut rng).unwrap(),
        ];
        let file = clustered_file(&centers, &mut rng);
        let model = train_multicentroid(file.stream(), &tie, Default::default()).unwrap();
        assert_eq!(model.len(), 2);
        for strategy in [ReductionStrategy::Removal, ReductionStrategy::Clustering] {
            let out = reduce(&model, std::slice::from_ref(&file), &ReductionConfig::new(strategy)).unwrap();
            assert_eq!(out.model, model);
            assert_eq!(out.trace.len(), 1);
        }
    }

    #[test]
    fn duplicate_singletons_are_removed_without_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tie = TieBreaker::generate(1024, &mut rng).unwrap();
        let centers = [
            Hypervector::random(1024, &mut rng).unwrap(),
            Hypervector::random(1024, &mut rng).unwrap(),
        ];
        let file = clustered_file(&centers, &mut rng);
        let base = train_multicentroid(file.stream(), &tie, Default::default()).unwrap();
        // append two count-1 sub-classes duplicating the existing prototypes
        let mut subs = base.subclasses().to_vec();
        for (k, s) in base.subclasses().iter().enumerate() {
            subs.push(SubClass::found(100 + k as u32, s.label(), s.prototype()));
        }
        let model = Model::from_parts(ModelKind::MultiCentroid, tie.clone(), subs);
        let before = evaluate_files(&model, std::slice::from_ref(&file), Some(Smoothing::default())).unwrap();
        let cfg = ReductionConfig {
            step_fraction: 0.5,
            ..ReductionConfig::new(ReductionStrategy::Removal)
        };
        let out = reduce(&model, std::slice::from_ref(&file), &cfg).unwrap();
        assert_eq!(out.model.len(), 2);
        assert!(out.model.subclasses().iter().all(|s| s.id() < 100));
        assert_eq!(out.final_score, before.f1de_gmean);
        assert_eq!(out.model.total_absorbed(), model.total_absorbed() - 2);
    }

    #[test]
    fn clustering_identical_prototypes_adds_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tie = TieBreaker::generate(256, &mut rng).unwrap();
        let p = Hypervector::random(256, &mut rng).unwrap();
        let q = Hypervector::random(256, &mut rng).unwrap();
        let mut big = SubClass::found(0, GlobalLabel::Seizure, &p);
        big.absorb(&p, &tie).unwrap();
        big.absorb(&p, &tie).unwrap();
        let small = SubClass::found(1, GlobalLabel::Seizure, &p);
        let other = SubClass::found(2, GlobalLabel::NonSeizure, &q);
        let model = Model::from_parts(ModelKind::MultiCentroid, tie.clone(), vec![big, small, other]);
        let chosen = select(&model, 0.1);
        assert_eq!(chosen, vec![1]);
        let merged = apply_step(&model, &chosen, ReductionStrategy::Clustering).unwrap();
        assert_eq!(merged.len(), 2);
        let s = &merged.subclasses()[0];
        assert_eq!((s.id(), s.count()), (0, 4));
        assert_eq!(s.prototype(), &p);
        assert_eq!(merged.total_absorbed(), model.total_absorbed());
    }

    #[test]
    fn selection_prefers_small_then_young_and_keeps_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tie = TieBreaker::generate(64, &mut rng).unwrap();
        let hv = Hypervector::random(64, &mut rng).unwrap();
        let subs = vec![
            SubClass::found(0, GlobalLabel::Seizure, &hv),
            SubClass::found(1, GlobalLabel::NonSeizure, &hv),
            SubClass::found(2, GlobalLabel::NonSeizure, &hv),
            SubClass::found(3, GlobalLabel::NonSeizure, &hv),
        ];
        let model = Model::from_parts(ModelKind::MultiCentroid, tie, subs);
        // ceil(0.5 * 4) = 2: youngest non-seizure first, the lone seizure class is protected
        assert_eq!(select(&model, 0.5), vec![3, 2]);
        assert_eq!(select(&model, 0.9), vec![3, 2]);
    }

    #[test]
    fn tolerance_bound_holds_on_noisy_models() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(10 + seed);
            let tie = TieBreaker::generate(1024, &mut rng).unwrap();
            let centers = [
                Hypervector::random(1024, &mut rng).unwrap(),
                Hypervector::random(1024, &mut rng).unwrap(),
            ];
            let mut file = clustered_file(&centers, &mut rng);
            // outliers create extra sub-classes
            for v in file.vectors.iter_mut().step_by(7) {
                *v = Hypervector::random(1024, &mut rng).unwrap();
            }
            let model = train_multicentroid(file.stream(), &tie, Default::default()).unwrap();
            for strategy in [ReductionStrategy::Removal, ReductionStrategy::Clustering] {
                let cfg = ReductionConfig::new(strategy);
                let out = reduce(&model, &[file.clone()], &cfg).unwrap();
                assert!(out.final_score >= (1.0 - cfg.tolerance) * out.baseline_score);
                assert!(out.model.len() <= model.len());
                assert!(out.model.count_for(GlobalLabel::Seizure) >= 1);
                assert!(out.model.count_for(GlobalLabel::NonSeizure) >= 1);
                let accepted: Vec<_> = out.trace.iter().filter(|s| s.accepted).collect();
                for w in accepted.windows(2) {
                    assert!(
                        w[1].seizure_subclasses + w[1].nonseizure_subclasses
                            < w[0].seizure_subclasses + w[0].nonseizure_subclasses
                    );
                }
                if strategy == ReductionStrategy::Clustering {
                    assert_eq!(out.model.total_absorbed(), model.total_absorbed());
                }
                let again = reduce(&model, &[file.clone()], &cfg).unwrap();
                assert_eq!(again.model, out.model);
            }
        }
    }

    #[test]
    fn missing_label_in_training_set_is_usage_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tie = TieBreaker::generate(64, &mut rng).unwrap();
        let a = Hypervector::random(64, &mut rng).unwrap();
        let b = Hypervector::random(64, &mut rng).unwrap();
        let model = train_multicentroid(
            [(&a, GlobalLabel::Seizure), (&b, GlobalLabel::NonSeizure)],
            &tie,
            Default::default(),
        )
        .unwrap();
        let file = EncodedFile {
            vectors: vec![a.clone()],
            labels: vec![GlobalLabel::Seizure],
        };
        assert!(matches!(
            reduce(&model, &[file], &ReductionConfig::new(ReductionStrategy::Removal)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = ReductionConfig::new(ReductionStrategy::Removal);
        cfg.step_fraction = 1.0;
        assert!(cfg.validate().is_err());
        cfg.step_fraction = 0.1;
        cfg.tolerance = -0.1;
        assert!(cfg.validate().is_err());
    }
}
