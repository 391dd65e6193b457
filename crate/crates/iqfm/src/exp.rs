//! Experiment orchestration: named tasks and methods, desk/paper presets
//! with a plain-text config overlay, deterministic per-trial seeding, sweep
//! runners, CSV reports, and the image-set file format.

mod config;
mod idx;
mod report;
mod run;
mod seeds;

pub use config::{ExperimentConfig, Method, Preset, Task, CONFIG_SCHEMA};
pub use idx::{
    count_idx, ensure_fashion_files, ensure_fashion_files_sized, parse_idx, parse_idx_subset,
    synthesize_fashion, write_idx, FashionPaths, ImageDataset, IMAGE_CLASSES, IMAGE_PIXELS,
    IMAGE_SIDE, TEST_COUNT, TRAIN_COUNT,
};
pub use report::{
    compute_metrics, export_embeddings, export_gram_csv, export_loss_trace, read_embeddings,
    read_report, report_to_csv, summary_to_csv, write_report, ExperimentReport, ReportRow,
    SummaryRow, REPORT_HEADER,
};
pub use run::{
    export_trained_embeddings, generate_datasets, run_and_save, run_experiment, summarize_report,
    Sweep,
};
pub use seeds::trial_seed;
