//! Recoding a labeling into a pre-partition with prescribed masses, the
//! alphabet reduction feeding it, and an exhaustive generator search.

mod oracle;
mod pipeline;
mod recode;
mod reduce;

pub use oracle::{
    brute_force_generator_search, factor_system, relative_generator_search, subadditivity_check, OracleResult,
    SubadditivityReport, ORACLE_MAX_POINTS,
};
pub use pipeline::{
    decode, encode_names, erase_labels, max_name_distance, partial_mismatches, refine_to_p, synthesize_prepartition,
    target_count, OrbitEntry, RecodePlan, Synthesis,
};
pub use recode::{krieger_recode, Certificate, RecodeOutcome, RecodeParams, ScanRow, Q_SEARCH_LIMIT};
pub use reduce::{reduce_alphabet, AlphabetReduction, ReductionReport};
