//! Toolchain for explainable AI-generated video detection: annotation model,
//! reasoning-trace grammar, prompt and corpus pipelines, distillation records,
//! the joint language/classifier objective and evaluation metrics.

pub mod corpus;
pub mod distill;
pub mod eval;
pub mod evidence;
pub mod record;
pub mod synth;
pub mod tagseq;
pub mod llm;
pub mod loss;
pub mod pipeline;
