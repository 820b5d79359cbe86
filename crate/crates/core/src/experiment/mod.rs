//! Seeded multi-run experiments and their CSV/PGM artifacts.

mod config;
mod output;
mod run;

pub use config::{load_config, BasisChoice, Environment, ExperimentConfig};
pub use output::{pearson, write_grid_csv, write_pgm};
pub use run::{
    emit_basis_figures, run_basis_command, run_chain_experiment, run_gridworld_experiment,
    table1, RunRecord, RunReport, RunTrace, Table1Row, TABLE1_ROWS,
};
