//! Posting-schedule analytics over page/post/reaction event logs: temporal
//! profiles, optimal posting schedules, reaction-profile categorization and
//! reaction-gain evaluation.

pub mod categorize;
pub mod cli;
pub mod evaluate;
pub mod ingest;
pub mod profiles;
pub mod schedules;
pub mod synth;
