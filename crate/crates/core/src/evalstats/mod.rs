//! Evaluation statistics: overlap metrics, reliability and group tests.

mod glm;
mod icc;
mod overlap;
pub mod special;
mod wilcoxon;

pub use glm::{glm_fit, glm_group, Covariate, GlmResult, MeasureTable, SubjectMeta};
pub use icc::{icc_absolute, IccResult};
pub use overlap::{
    avg_hausdorff, avg_hausdorff_with, dice, dice_per_label, squared_edt, HausdorffForm, LabelScore, LabelScores,
};
pub use wilcoxon::{bonferroni, wilcoxon_signed_rank, WilcoxonResult};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("{side} set is empty")]
    EmptySet { side: &'static str },
    #[error("variance is degenerate: {0}")]
    DegenerateVariance(String),
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("{n} usable pairs; at least {min} needed")]
    TooFewPairs { n: usize, min: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;
