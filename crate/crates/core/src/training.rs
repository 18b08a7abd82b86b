//! Prototype models and their single-pass trainers.
//!
//! A two-class model is a multi-centroid model that happens to hold exactly
//! one sub-class per label, so both share [`Model`] and the same nearest
//! prototype search.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdcore::{BitAccumulator, Hypervector, TieBreaker};

/// Global class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GlobalLabel {
    NonSeizure = 0,
    Seizure = 1,
}

impl GlobalLabel {
    pub const ALL: [GlobalLabel; 2] = [GlobalLabel::NonSeizure, GlobalLabel::Seizure];

    pub fn from_bool(seizure: bool) -> Self {
        if seizure {
            GlobalLabel::Seizure
        } else {
            GlobalLabel::NonSeizure
        }
    }

    pub fn is_seizure(self) -> bool {
        self == GlobalLabel::Seizure
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(GlobalLabel::NonSeizure),
            1 => Some(GlobalLabel::Seizure),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GlobalLabel::NonSeizure => "nonseizure",
            GlobalLabel::Seizure => "seizure",
        }
    }
}

impl fmt::Display for GlobalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One centroid of a global class.
#[derive(Clone, Debug, PartialEq)]
pub struct SubClass {
    id: u32,
    label: GlobalLabel,
    acc: BitAccumulator,
    prototype: Hypervector,
}

impl SubClass {
    pub(crate) fn found(id: u32, label: GlobalLabel, hv: &Hypervector) -> Self {
        Self {
            id,
            label,
            acc: BitAccumulator::from_vector(hv),
            prototype: hv.clone(),
        }
    }

    pub(crate) fn from_parts(id: u32, label: GlobalLabel, acc: BitAccumulator, tiebreak: &TieBreaker) -> Result<Self> {
        let prototype = acc.binarize(tiebreak.vector())?;
        Ok(Self {
            id,
            label,
            acc,
            prototype,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn label(&self) -> GlobalLabel {
        self.label
    }

    /// Windows absorbed.
    pub fn count(&self) -> u32 {
        self.acc.count()
    }

    pub fn accumulator(&self) -> &BitAccumulator {
        &self.acc
    }

    pub fn prototype(&self) -> &Hypervector {
        &self.prototype
    }

    pub(crate) fn absorb(&mut self, hv: &Hypervector, tiebreak: &TieBreaker) -> Result<()> {
        self.acc.accumulate(hv)?;
        self.prototype = self.acc.binarize(tiebreak.vector())?;
        Ok(())
    }

    pub(crate) fn absorb_subclass(&mut self, other: &SubClass, tiebreak: &TieBreaker) -> Result<()> {
        self.acc.merge(&other.acc)?;
        self.prototype = self.acc.binarize(tiebreak.vector())?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    TwoClass,
    MultiCentroid,
}

/// Collection of sub-classes under the two global labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    kind: ModelKind,
    tiebreak: TieBreaker,
    subclasses: Vec<SubClass>,
}

/// Result of a nearest-prototype query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub id: u32,
    pub label: GlobalLabel,
    /// Differing bits.
    pub hamming: u32,
    /// `hamming / dim`.
    pub distance: f64,
}

impl Model {
    pub(crate) fn from_parts(kind: ModelKind, tiebreak: TieBreaker, subclasses: Vec<SubClass>) -> Self {
        Self {
            kind,
            tiebreak,
            subclasses,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn tiebreak(&self) -> &TieBreaker {
        &self.tiebreak
    }

    pub fn subclasses(&self) -> &[SubClass] {
        &self.subclasses
    }

    pub fn dim(&self) -> usize {
        self.tiebreak.dim()
    }

    pub fn len(&self) -> usize {
        self.subclasses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subclasses.is_empty()
    }

    pub fn count_for(&self, label: GlobalLabel) -> usize {
        self.subclasses.iter().filter(|s| s.label == label).count()
    }

    /// Total windows absorbed across all sub-classes.
    pub fn total_absorbed(&self) -> u64 {
        self.subclasses.iter().map(|s| u64::from(s.count())).sum()
    }

    pub(crate) fn subclasses_mut(&mut self) -> &mut Vec<SubClass> {
        &mut self.subclasses
    }

    /// Nearest sub-class by Hamming distance. Ties go to `preferred`, then to
    /// the lowest id.
    pub fn nearest(&self, hv: &Hypervector, preferred: GlobalLabel) -> Result<Nearest> {
        if self.subclasses.is_empty() {
            return Err(Error::Usage("nearest sub-class of an empty model".into()));
        }
        if hv.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "query dimension {} does not match model dimension {}",
                hv.dim(),
                self.dim()
            )));
        }
        let mut best: Option<(u32, bool, u32, usize)> = None;
        for (index, s) in self.subclasses.iter().enumerate() {
            let d = crate::hdcore::hamming_words(s.prototype.words(), hv.words());
            let key = (d, s.label != preferred, s.id, index);
            if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                best = Some(key);
            }
        }
        let (hamming, _, id, index) = best.expect("non-empty");
        Ok(Nearest {
            index,
            id,
            label: self.subclasses[index].label,
            hamming,
            distance: f64::from(hamming) / self.dim() as f64,
        })
    }

    /// Nearest among sub-classes with the given label, lowest id on ties.
    pub fn nearest_with_label(&self, hv: &Hypervector, label: GlobalLabel) -> Option<Nearest> {
        self.subclasses
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(index, s)| {
                let h = crate::hdcore::hamming_words(s.prototype.words(), hv.words());
                (h, s.id, index)
            })
            .min()
            .map(|(hamming, id, index)| Nearest {
                index,
                id,
                label,
                hamming,
                distance: f64::from(hamming) / self.dim() as f64,
            })
    }
}

/// Builds the two-class model: one accumulator per label, binarized once.
pub fn train_two_class<'a, I>(stream: I, tiebreak: &TieBreaker) -> Result<Model>
where
    I: IntoIterator<Item = (&'a Hypervector, GlobalLabel)>,
{
    let mut accs: [Option<BitAccumulator>; 2] = [None, None];
    for (hv, label) in stream {
        if hv.dim() != tiebreak.dim() {
            return Err(Error::Usage("training vector dimension mismatch".into()));
        }
        let slot = &mut accs[label as usize];
        match slot {
            Some(acc) => acc.accumulate(hv)?,
            None => *slot = Some(BitAccumulator::from_vector(hv)),
        }
    }
    let mut subclasses = Vec::with_capacity(2);
    for label in GlobalLabel::ALL {
        let acc = accs[label as usize]
            .take()
            .ok_or_else(|| Error::Training(format!("training stream has no {label} windows")))?;
        subclasses.push(SubClass::from_parts(label as u32, label, acc, tiebreak)?);
    }
    Ok(Model::from_parts(ModelKind::TwoClass, tiebreak.clone(), subclasses))
}

/// Options of the multi-centroid trainer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiCentroidOptions {
    /// Extra normalized distance by which the nearest correct-label
    /// prototype must beat the nearest wrong-label one for absorption.
    /// Zero reproduces the plain nearest-prototype rule.
    pub margin: f64,
}

impl Default for MultiCentroidOptions {
    fn default() -> Self {
        Self { margin: 0.0 }
    }
}

/// What the trainer did with one window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingEvent {
    Founded { id: u32, label: GlobalLabel },
    Absorbed { id: u32, label: GlobalLabel },
}

/// Single-pass multi-centroid training.
///
/// For each window with label `y`: found a new `y` sub-class if none exists
/// or if the globally nearest prototype (ties to `y`, then lowest id) has the
/// wrong label; otherwise absorb the window into that nearest prototype.
pub fn train_multicentroid<'a, I>(stream: I, tiebreak: &TieBreaker, opts: MultiCentroidOptions) -> Result<Model>
where
    I: IntoIterator<Item = (&'a Hypervector, GlobalLabel)>,
{
    train_multicentroid_traced(stream, tiebreak, opts).map(|(m, _)| m)
}

/// [`train_multicentroid`] that also reports the per-window decisions.
pub fn train_multicentroid_traced<'a, I>(
    stream: I,
    tiebreak: &TieBreaker,
    opts: MultiCentroidOptions,
) -> Result<(Model, Vec<TrainingEvent>)>
where
    I: IntoIterator<Item = (&'a Hypervector, GlobalLabel)>,
{
    let mut model = Model::from_parts(ModelKind::MultiCentroid, tiebreak.clone(), Vec::new());
    let mut events = Vec::new();
    let mut next_id = 0u32;
    for (hv, label) in stream {
        if hv.dim() != tiebreak.dim() {
            return Err(Error::Usage("training vector dimension mismatch".into()));
        }
        // The globally nearest prototype (ties to `label`) has the correct
        // label exactly when the nearest correct one is no farther than the
        // nearest wrong one.
        let target = model.nearest_with_label(hv, label).and_then(|correct| {
            let absorb = model
                .nearest_with_label(hv, label_other(label))
                .is_none_or(|wrong| correct.distance + opts.margin <= wrong.distance);
            absorb.then_some(correct.index)
        });
        match target {
            Some(index) => {
                let s = &mut model.subclasses[index];
                s.absorb(hv, tiebreak)?;
                events.push(TrainingEvent::Absorbed { id: s.id, label });
            }
            None => {
                model.subclasses.push(SubClass::found(next_id, label, hv));
                events.push(TrainingEvent::Founded { id: next_id, label });
                next_id += 1;
            }
        }
    }
    if model.is_empty() {
        return Err(Error::Training("empty training stream".into()));
    }
    Ok((model, events))
}

fn label_other(label: GlobalLabel) -> GlobalLabel {
    match label {
        GlobalLabel::NonSeizure => GlobalLabel::Seizure,
        GlobalLabel::Seizure => GlobalLabel::NonSeizure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdcore::bundle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tie(dim: usize, seed: u64) -> TieBreaker {
        TieBreaker::generate(dim, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn random(dim: usize, rng: &mut ChaCha8Rng) -> Hypervector {
        Hypervector::random(dim, rng).unwrap()
    }

    #[test]
    fn two_class_single_vectors_become_prototypes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (s, n) = (random(256, &mut rng), random(256, &mut rng));
        let t = tie(256, 2);
        let m = train_two_class([(&s, GlobalLabel::Seizure), (&n, GlobalLabel::NonSeizure)], &t).unwrap();
        assert_eq!(m.len(), 2);
        let proto = |l| {
            m.subclasses()
                .iter()
                .find(|x| x.label() == l)
                .unwrap()
                .prototype()
                .clone()
        };
        assert_eq!(proto(GlobalLabel::Seizure), s);
        assert_eq!(proto(GlobalLabel::NonSeizure), n);
        // a duplicated vector does not change the majority
        let m2 = train_two_class(
            [
                (&s, GlobalLabel::Seizure),
                (&s, GlobalLabel::Seizure),
                (&n, GlobalLabel::NonSeizure),
            ],
            &t,
        )
        .unwrap();
        assert_eq!(m2.subclasses()[1].prototype(), &s);
    }

    #[test]
    fn two_class_requires_both_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random(64, &mut rng);
        let err = train_two_class([(&s, GlobalLabel::Seizure)], &tie(64, 1)).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn two_class_prototype_is_bundle_of_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = tie(1024, 5);
        let data: Vec<(Hypervector, GlobalLabel)> = (0..100)
            .map(|_| (random(1024, &mut rng), GlobalLabel::from_bool(rng.random_bool(0.3))))
            .collect();
        let m = train_two_class(data.iter().map(|(h, l)| (h, *l)), &t).unwrap();
        for label in GlobalLabel::ALL {
            let vs: Vec<Hypervector> = data
                .iter()
                .filter(|(_, l)| *l == label)
                .map(|(h, _)| h.clone())
                .collect();
            let sc = m.subclasses().iter().find(|s| s.label() == label).unwrap();
            assert_eq!(sc.prototype(), &bundle(&vs, t.vector()).unwrap());
            assert_eq!(sc.count() as usize, vs.len());
        }
    }

    #[test]
    fn nearest_tie_policy() {
        let a = Hypervector::from_bit_str(64, "1100").unwrap();
        let b = Hypervector::from_bit_str(64, "0011").unwrap();
        let q = Hypervector::from_bit_str(64, "1010").unwrap();
        let t = tie(64, 1);
        let m = train_two_class([(&a, GlobalLabel::Seizure), (&b, GlobalLabel::NonSeizure)], &t).unwrap();
        let n = m.nearest(&q, GlobalLabel::NonSeizure).unwrap();
        assert_eq!(n.label, GlobalLabel::NonSeizure);
        assert_eq!(n.distance, 2.0 / 64.0);
        let s = m.nearest(&q, GlobalLabel::Seizure).unwrap();
        assert_eq!(s.label, GlobalLabel::Seizure);
        let exact = m.nearest(&a, GlobalLabel::NonSeizure).unwrap();
        assert_eq!((exact.label, exact.hamming), (GlobalLabel::Seizure, 0));
    }

    #[test]
    fn nearest_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let t = tie(128, rng.random());
            let data: Vec<(Hypervector, GlobalLabel)> = (0..rng.random_range(4..30))
                .map(|_| (random(128, &mut rng), GlobalLabel::from_bool(rng.random_bool(0.5))))
                .collect();
            let Ok(m) = train_multicentroid(data.iter().map(|(h, l)| (h, *l)), &t, Default::default()) else {
                continue;
            };
            let q = random(128, &mut rng);
            let got = m.nearest(&q, GlobalLabel::NonSeizure).unwrap();
            let mut best = (u32::MAX, true, u32::MAX);
            for s in m.subclasses() {
                let mut d = 0;
                for i in 0..128 {
                    if s.prototype().bit(i) != q.bit(i) {
                        d += 1;
                    }
                }
                let key = (d, s.label() != GlobalLabel::NonSeizure, s.id());
                if key < best {
                    best = key;
                }
            }
            assert_eq!((got.hamming, got.id), (best.0, best.2));
        }
    }

    #[test]
    fn empty_model_nearest_is_usage_error() {
        let m = Model::from_parts(ModelKind::MultiCentroid, tie(64, 1), Vec::new());
        assert!(matches!(
            m.nearest(&Hypervector::zeros(64).unwrap(), GlobalLabel::Seizure),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn multicentroid_count_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = tie(512, 8);
        let data: Vec<(Hypervector, GlobalLabel)> = (0..200)
            .map(|_| (random(512, &mut rng), GlobalLabel::from_bool(rng.random_bool(0.2))))
            .collect();
        let m = train_multicentroid(data.iter().map(|(h, l)| (h, *l)), &t, Default::default()).unwrap();
        assert_eq!(m.total_absorbed(), 200);
        assert!(m.count_for(GlobalLabel::Seizure) >= 1);
        assert!(m.count_for(GlobalLabel::NonSeizure) >= 1);
        for s in m.subclasses() {
            assert_eq!(s.prototype(), &s.accumulator().binarize(t.vector()).unwrap());
        }
        // founding vectors survive untouched in singleton sub-classes
        let mut founders = std::collections::HashMap::new();
        let (_, events) =
            train_multicentroid_traced(data.iter().map(|(h, l)| (h, *l)), &t, Default::default()).unwrap();
        for (e, (h, _)) in events.iter().zip(&data) {
            if let TrainingEvent::Founded { id, .. } = e {
                founders.insert(*id, h.clone());
            }
        }
        for s in m.subclasses().iter().filter(|s| s.count() == 1) {
            assert_eq!(s.prototype(), &founders[&s.id()]);
        }
    }

    #[test]
    fn separable_stream_yields_one_subclass_per_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = tie(2048, 10);
        let centers = [random(2048, &mut rng), random(2048, &mut rng)];
        let mut data = Vec::new();
        for i in 0..60 {
            let label = GlobalLabel::from_bool(i % 3 == 0);
            let mut v = centers[label as usize].clone();
            for _ in 0..100 {
                let b = rng.random_range(0..2048);
                v.set(b, !v.bit(b));
            }
            data.push((v, label));
        }
        let m = train_multicentroid(data.iter().map(|(h, l)| (h, *l)), &t, Default::default()).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn positive_margin_founds_more_subclasses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = tie(1024, 12);
        let data: Vec<(Hypervector, GlobalLabel)> = (0..100)
            .map(|_| (random(1024, &mut rng), GlobalLabel::from_bool(rng.random_bool(0.5))))
            .collect();
        let plain = train_multicentroid(data.iter().map(|(h, l)| (h, *l)), &t, Default::default()).unwrap();
        let strict = train_multicentroid(
            data.iter().map(|(h, l)| (h, *l)),
            &t,
            MultiCentroidOptions { margin: 0.05 },
        )
        .unwrap();
        assert!(strict.len() >= plain.len());
    }
}
