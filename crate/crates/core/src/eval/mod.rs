//! Scoring, confidence intervals, word similarity, ablations and n-gram
//! inspection.

mod ablation;
mod io;
mod ngrams;
mod score;
mod wordsim;

pub use ablation::{
    ablation_combinations, format_ablation_table, format_cv_table, run_ablations, AblationRow,
};
pub use io::{align_by_id, read_predictions, write_feature_row, write_predictions};
pub use ngrams::{top_ngrams, NgramScore};
pub use score::{bootstrap_ci, macro_f1, score_semeval, EvalReport, FamilyScore, Interval};
pub use wordsim::{
    average_ranks, read_wordsim, spearman, spearman_wordsim, EmbeddingSelector, WordSimPair,
    WordSimResult,
};
