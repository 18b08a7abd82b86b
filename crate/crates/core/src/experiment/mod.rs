//! Leave-one-seizure-out cross-validation over model variants.

mod config;
mod pipeline;
mod report;
mod run;

pub use config::{DataConfig, EncodingConfig, ExperimentConfig, ReductionSettings, Variant};
pub use pipeline::{
    encode_features, encode_file, encode_with_model, signal_features, window_file, window_signal, WindowedFile,
};
pub use report::{
    emit_report, read_csv, subject_rows, summary_rows, Report, ScoreRow, SubclassRow, SubjectRow, SummaryRow, TraceRow,
};
pub use run::{
    group_by_subject, load_subjects, resolve_montage, run_crossvalidation, run_crossvalidation_on, subclass_shares,
    train_model, SubjectData,
};
