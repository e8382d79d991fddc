use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use crate::error::{Error, Result};
use crate::signal::{Round, SubjectId, Task};

/// Which subjects form the held-out test population.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectRule {
    /// Every subject with at least one recording in this round.
    InRound(Round),
    Subjects(Vec<SubjectId>),
    /// No held-out population: train and test on the same subjects
    /// (closed-set, cross-session evaluation).
    NoHoldout,
}

impl SubjectRule {
    pub fn select(&self, manifest: &Manifest) -> BTreeSet<SubjectId> {
        match self {
            SubjectRule::InRound(round) => manifest
                .rows
                .iter()
                .filter(|r| r.round == *round)
                .map(|r| r.subject_id)
                .collect(),
            SubjectRule::Subjects(list) => {
                let present = manifest.subjects();
                list.iter().copied().filter(|s| present.contains(s)).collect()
            }
            SubjectRule::NoHoldout => BTreeSet::new(),
        }
    }
}

/// Subject-disjoint train/test partition. Rows whose task is listed in
/// `exclude_from_train` are dropped from the training side only.
pub fn split_train_test(manifest: &Manifest, rule: &SubjectRule, exclude_from_train: &[Task]) -> Result<(Manifest, Manifest)> {
    let test_subjects = rule.select(manifest);
    if test_subjects.is_empty() {
        return Err(Error::Config(format!("test rule {rule:?} selects no subject")));
    }
    if test_subjects.len() == manifest.subjects().len() {
        return Err(Error::Config(format!(
            "test rule {rule:?} selects every subject, leaving nothing to train on"
        )));
    }
    let train = manifest.filtered(|r| !test_subjects.contains(&r.subject_id) && !exclude_from_train.contains(&r.task));
    let test = manifest.filtered(|r| test_subjects.contains(&r.subject_id));
    Ok((train, test))
}
