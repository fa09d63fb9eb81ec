//! Resisting-oracle lower-bound machinery: hard continuous families, the
//! continuous and mixed-integer adversaries, tilted extensions, hereditary
//! transforms and the information-game harness.

mod consistency;
mod cont;
mod extension;
mod family;
mod game;
mod mi;

use thiserror::Error;

pub use consistency::{consistent_at, member_response, subgradient_witness, Record};
pub use cont::{ContAdversary, Member, MemberKind};
pub use extension::{
    closest_fiber, extend_truncate, fiber_index, fiber_slope, hereditary_transform, psi_eval, psi_function,
    zero_one_fibers, BitClass, HereditaryTransform, PostMap,
};
pub use family::{eps_solutions_overlap, ny_hard_family, FamilySpec, HardFamily};
pub use game::{
    bundled_strategies, check_unambiguous, game_domain, measure_hardness, psi_instance, run_game, verify_consistency,
    Adversary, BisectStrategy, CenterpointStrategy, GameContext, GameOutcome, GameSummary, RandomStrategy, Strategy,
};
pub use mi::{mi_domain, MiAdversary};

use crate::instance::InstanceError;
use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("family rejected: {0}")]
    Family(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
