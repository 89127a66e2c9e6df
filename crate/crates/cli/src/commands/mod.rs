pub mod compare;
pub mod embed;
pub mod eval;
pub mod pipeline;
pub mod predict;
pub mod train;
