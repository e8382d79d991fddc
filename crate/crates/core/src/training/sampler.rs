use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::SubjectId;

/// Window indices grouped by subject.
pub type SubjectWindows = BTreeMap<SubjectId, Vec<usize>>;

/// Generator for one minibatch. Composition depends only on
/// `(seed, epoch, batch)`, never on execution order.
pub fn batch_rng(seed: u64, epoch: usize, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | batch as u64);
    rng
}

/// Picks `subjects_per_batch` distinct subjects, then `windows_per_subject`
/// windows of each without replacement. Subjects with too few windows are
/// sampled with replacement instead.
pub fn sample_minibatch<R: Rng>(
    rng: &mut R,
    index: &SubjectWindows,
    subjects_per_batch: usize,
    windows_per_subject: usize,
) -> Result<Vec<usize>> {
    let eligible: Vec<SubjectId> = index
        .iter()
        .filter(|(_, w)| !w.is_empty())
        .map(|(&s, _)| s)
        .collect();
    if eligible.is_empty() {
        return Err(Error::invalid("no subject has any training window"));
    }
    if eligible.len() < subjects_per_batch {
        log::warn!(
            "only {} subjects available for a {subjects_per_batch}-subject batch",
            eligible.len()
        );
    }
    let chosen: Vec<SubjectId> = eligible
        .choose_multiple(rng, subjects_per_batch.min(eligible.len()))
        .copied()
        .collect();
    let mut batch = Vec::with_capacity(chosen.len() * windows_per_subject);
    for subject in chosen {
        let windows = &index[&subject];
        if windows.len() >= windows_per_subject {
            batch.extend(windows.choose_multiple(rng, windows_per_subject).copied());
        } else {
            log::debug!(
                "subject {subject} has {} windows; sampling with replacement",
                windows.len()
            );
            batch.extend((0..windows_per_subject).map(|_| *windows.choose(rng).expect("non-empty")));
        }
    }
    Ok(batch)
}

/// Optimizer steps per epoch: enough batches to cover every window once.
pub fn epoch_batches(total_windows: usize, batch_size: usize) -> Result<usize> {
    if total_windows == 0 || batch_size == 0 {
        return Err(Error::invalid("epoch needs windows and a positive batch size"));
    }
    Ok(total_windows.div_ceil(batch_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap};

    fn index(subjects: u32, per: usize) -> SubjectWindows {
        (0..subjects)
            .map(|s| (s, (0..per).map(|w| s as usize * per + w).collect()))
            .collect()
    }

    #[test]
    fn forced_full_batch() {
        let idx = index(16, 16);
        let b = sample_minibatch(&mut batch_rng(1, 0, 0), &idx, 16, 16).unwrap();
        let set: BTreeSet<_> = b.iter().copied().collect();
        assert_eq!(set, (0..256).collect());
    }

    #[test]
    fn composition_invariant() {
        let idx = index(40, 25);
        for i in 0..50 {
            let b = sample_minibatch(&mut batch_rng(9, 0, i), &idx, 16, 16).unwrap();
            assert_eq!(b.len(), 256);
            let mut per: HashMap<usize, usize> = HashMap::new();
            for w in &b {
                *per.entry(w / 25).or_default() += 1;
            }
            assert_eq!(per.len(), 16);
            assert!(per.values().all(|&c| c == 16));
            assert_eq!(b.iter().collect::<BTreeSet<_>>().len(), 256);
        }
    }

    #[test]
    fn small_subjects_fall_back_to_replacement() {
        let idx = index(16, 3);
        let b = sample_minibatch(&mut batch_rng(0, 0, 0), &idx, 16, 16).unwrap();
        assert_eq!(b.len(), 256);
        let empty: SubjectWindows = [(1, vec![])].into_iter().collect();
        assert!(sample_minibatch(&mut batch_rng(0, 0, 0), &empty, 16, 16).is_err());
    }

    #[test]
    fn epoch_batch_counts() {
        assert_eq!(epoch_batches(1000, 256).unwrap(), 4);
        assert_eq!(epoch_batches(256, 256).unwrap(), 1);
        assert_eq!(epoch_batches(257, 256).unwrap(), 2);
        assert!(epoch_batches(0, 256).is_err());
    }
}
