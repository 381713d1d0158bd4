//! Genealogy generation: complete trees, single lineages, tagged cells and
//! time-truncated populations.

mod csv_io;
mod many_to_one;
mod path;
mod population;
mod tagged;
mod tree;

use serde::{Deserialize, Serialize};

pub use csv_io::{
    fmt_real, read_genealogy, read_genealogy_file, write_genealogy, write_genealogy_file, GENEALOGY_HEADER,
};
pub use many_to_one::{default_battery, many_to_one_check, ManyToOneReport, ManyToOneRow, TestFunction};
pub use path::TreePath;
pub use population::{simulate_population, LivingCell};
pub use tagged::{simulate_tagged_cell, TaggedEvent, TaggedPath};
pub use tree::{
    extract_observations, population_snapshot, simulate_full_tree, simulate_sparse_lineage, CellRecord, GenealogyTree,
    SnapshotCell, TreeScheme,
};

use crate::model::{LifetimeSampler, DEFAULT_T_MAX};

/// Which child a single lineage follows at each division.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildChoice {
    #[default]
    Uniform,
    /// Always the first child; for debugging.
    FirstChild,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_max: f64,
    pub lifetime_sampler: LifetimeSampler,
    pub child_choice: ChildChoice,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            t_max: DEFAULT_T_MAX,
            lifetime_sampler: LifetimeSampler::InverseHazard,
            child_choice: ChildChoice::Uniform,
        }
    }
}
