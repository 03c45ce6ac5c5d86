//! Turns finite-domain datalog answer set programs into imperative programs.
//!
//! The pipeline is `syntax` → `analysis` → `completion` → `synth`, with two
//! independent semantics to check it against: the grounding/reduct `oracle`
//! and the goal-directed `evaluator`. `fuzz` ties them together in a
//! differential test harness.

pub mod analysis;
pub mod completion;
pub mod evaluator;
pub mod fuzz;
pub mod oracle;
pub mod syntax;
pub mod synth;
