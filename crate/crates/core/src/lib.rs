//! Answers of first-order queries over bounded-degree relational structures,
//! enumerated in lexicographic order after a preprocessing phase whose work
//! grows linearly with the structure.
//!
//! The pipeline: [`structure`] loads the structure and builds the Gaifman
//! graph and distance index, [`neighborhood`] assigns every element a
//! canonical neighborhood type, [`decomposition`] turns the query into
//! r-partitions with relevant type sequences, and [`enumeration`] walks the
//! type buckets and merges the resulting streams. [`evaluator`] is the
//! brute-force reference.

pub mod cli;
pub mod decomposition;
pub mod enumeration;
pub mod error;
pub mod evaluator;
pub mod formula;
pub mod generate;
pub mod neighborhood;
pub mod structure;

pub use decomposition::{build_plan, div_holds, enumerate_partitions, relevant_sequences, DecompositionPlan, RPartition};
pub use enumeration::{merge_streams, CursorState, DelayStats, EnumerationCursor, PrepareOptions, PreparedQuery};
pub use error::{Error, Result};
pub use evaluator::{brute_enumerate, evaluate, Assignment};
pub use formula::{free_variables, locality_radius, parse_formula, Formula, Signature};
pub use neighborhood::{apply_position_sequence, build_type_index, extract_neighborhood, TypeIndex};
pub use structure::{build_distance_index, gaifman_graph, load_structure, DistanceIndex, Elem, Structure};
