//! Purposeful option discovery on a deterministic ring world.
//!
//! The pipeline is: a random walk (over primitive actions and any options
//! found so far) records feature differences, a dense SVD of those
//! differences yields *eigenpurposes*, each purpose is planned for with
//! value iteration in a terminate-augmented MDP, and the resulting greedy
//! policies become options for the next collection phase.

pub mod driver;
pub mod error;
pub mod features;
pub mod harness;
pub mod planner;
pub mod purpose;
pub mod ring;
pub mod runtime;
pub mod theory;
pub mod transitions;

pub use driver::{run_phase, run_pod, OptionSet, PhaseTrace, PodConfig, PodOutcome};
pub use error::{PodError, Result};
pub use features::{DiffVector, FeatureCodec, FeatureVector, ObservabilityMode};
pub use planner::{build_option, value_iteration, DiscoveredOption, QTable};
pub use purpose::{canonicalize, extract, Eigenpurpose, Sign};
pub use ring::{PrimitiveAction, Ring, RingState};
pub use transitions::DiffDataset;
