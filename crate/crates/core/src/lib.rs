//! Security analysis toolkit for finite-key quantum key distribution.

pub mod bits;
pub mod bounds;
pub mod mathcore;
pub mod postproc;
pub mod qstate;
pub mod rates;
pub mod simulator;
pub mod stats;
pub mod suites;

pub use bits::BitString;
pub use bounds::{JointDistribution, SecurityParams};
pub use mathcore::{BigCount, Log2Value};
pub use postproc::{LeakModel, LinearCodeSpec, ToeplitzSeed};
pub use qstate::{CqState, DensityMatrix, Povm};
pub use rates::{RateCurve, RateModelParams};
pub use simulator::{ProtocolConfig, SessionStatus, SessionTranscript};
