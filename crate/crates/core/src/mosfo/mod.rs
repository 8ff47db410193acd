//! Archive-based multi-objective sunflower optimizer and ZDT benchmarks.

mod archive;
mod optimizer;
mod problem;
mod quality;
mod tent;
mod zdt;

pub use archive::{count_dominated_pairs, dominates, ArchiveMember, InsertOutcome, ParetoArchive};
pub use optimizer::{init_population, optimize, Individual, Mosfo, MosfoConfig};
pub use problem::{Bounds, FnProblem, MultiObjectiveProblem};
pub use quality::{front_quality, FrontQuality};
pub use tent::{tent_sequence, TentMap};
pub use zdt::{analytic_front, zdt3_segments, zdt_evaluate, Zdt, ZdtKind};
