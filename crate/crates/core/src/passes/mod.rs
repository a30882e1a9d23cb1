//! Circuit transformations, each a pure function `Circuit -> Circuit`, and
//! the staged pipeline that chains them into the depth-4 reduction.

mod balance;
mod binarize;
mod depth4;
mod homogenize;
mod normalize;
mod pipeline;

pub use balance::{
    balance, balance_bound, balance_bound_tight, is_x_balanced, x_balance_violation,
};
pub use binarize::binarize_mul;
pub use depth4::{
    depth4_reduce, depth4_reduce_with, merge_depth4, split_classifications, Depth4Details,
    DepthFourShape, SplitClassification,
};
pub use homogenize::homogenize;
pub use normalize::{normal_form_violation, normalize, normalize_with};
pub use pipeline::{
    choose_a, reduce_to_depth4, reduce_to_depth4_with, BoundCheck, PartReport, PassReport,
    Pipeline, PipelineConfig, PropertyCheck, Stage,
};
