//! Fold assignment, minibatch sampling, the one-cycle schedule, Adam and
//! the cross-validated training loop.

mod adam;
mod folds;
mod map_at_r;
mod sampler;
mod schedule;
mod trainer;

pub use adam::{Adam, AdamConfig};
pub use folds::{assign_folds, FoldAssignment};
pub use map_at_r::map_at_r;
pub use sampler::{batch_rng, epoch_batches, sample_minibatch, SubjectWindows};
pub use schedule::OneCycleSchedule;
pub use trainer::{embed_windows, train_cv, train_fold, write_run_log, EpochLog, TrainOutcome, TrainRunConfig};
