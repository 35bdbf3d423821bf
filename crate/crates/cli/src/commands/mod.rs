pub mod annotations;
pub mod pipeline;
pub mod score;
pub mod serve;
pub mod traces;
pub mod train;
