//! The synthesis pipeline: error functionals, the per-level refinements, the
//! factorial thinning, chain amalgamation, and diagonal matrix assembly.

pub mod amalgamate;
pub mod assemble;
pub mod err;
pub mod law;
pub mod q1;
pub mod sampler;
pub mod schedule;
pub mod thin;

pub use err::{eee, err, ErrMode, ErrValue};
pub use q1::{build_q1, refine_levels, LevelOutcome, PassOutcome, StageRecord};
pub use sampler::PathSampler;
pub use schedule::SynthesisSchedule;
pub use amalgamate::{amalgamate, amalgamate_lazy, Amalgam};
pub use assemble::{synthesize_matrix, Reservoir, Synthesis};
pub use thin::{thin_factorial, ThinOutcome};
