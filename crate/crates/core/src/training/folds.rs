use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SubjectId;

/// Subject-to-fold mapping for class-disjoint cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: BTreeMap<SubjectId, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, subject: SubjectId) -> Option<usize> {
        self.folds.get(&subject).copied()
    }

    pub fn subjects_in(&self, fold: usize) -> BTreeSet<SubjectId> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(&s, _)| s)
            .collect()
    }

    /// Subjects used for training when `fold` is held out.
    pub fn train_subjects(&self, fold: usize) -> BTreeSet<SubjectId> {
        self.folds
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(&s, _)| s)
            .collect()
    }
}

/// Greedy balanced assignment: subjects in descending recording count go to
/// the fold with the fewest recordings so far, ties broken by fewest
/// subjects and then lowest fold index.
pub fn assign_folds(subjects: &[(SubjectId, usize)], k: usize) -> Result<FoldAssignment> {
    if k == 0 {
        return Err(Error::invalid("fold count must be at least 1"));
    }
    let unique: BTreeSet<_> = subjects.iter().map(|(s, _)| *s).collect();
    if unique.len() != subjects.len() {
        return Err(Error::invalid("subject list contains duplicates"));
    }
    if subjects.len() < k {
        return Err(Error::invalid(format!(
            "{} subjects cannot fill {k} folds",
            subjects.len()
        )));
    }
    let mut order: Vec<&(SubjectId, usize)> = subjects.iter().collect();
    // stable: equal counts keep input order
    order.sort_by(|a, b| b.1.cmp(&a.1));
    let mut load = vec![(0usize, 0usize); k];
    let mut folds = BTreeMap::new();
    for &(subject, count) in order {
        let target = (0..k)
            .min_by_key(|&f| (load[f].0, load[f].1, f))
            .expect("k >= 1");
        load[target].0 += count;
        load[target].1 += 1;
        folds.insert(subject, target);
    }
    Ok(FoldAssignment { k, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_two_folds() {
        let a = assign_folds(&[(1, 4), (2, 4), (3, 2), (4, 2)], 2).unwrap();
        let totals: Vec<usize> = (0..2)
            .map(|f| {
                a.subjects_in(f)
                    .iter()
                    .map(|s| [4, 4, 2, 2][*s as usize - 1])
                    .sum()
            })
            .collect();
        assert_eq!(totals, vec![6, 6]);
        assert_eq!(a.subjects_in(0).len(), 2);
    }

    #[test]
    fn single_fold_and_errors() {
        let a = assign_folds(&[(1, 3), (2, 1)], 1).unwrap();
        assert!(a.folds.values().all(|&f| f == 0));
        assert!(assign_folds(&[(1, 3)], 2).is_err());
        assert!(assign_folds(&[(1, 3), (1, 2)], 1).is_err());
    }

    #[test]
    fn equal_counts_divide_evenly() {
        let subjects: Vec<_> = (0..12).map(|s| (s, 5)).collect();
        let a = assign_folds(&subjects, 4).unwrap();
        for f in 0..4 {
            assert_eq!(a.subjects_in(f).len(), 3);
        }
    }
}
