//! Certified numerics for an entire function of slow infinite-order growth
//! with every extended complex value as an asymptotic value.
//!
//! The crate builds the function from a growth budget ([`plan`]), certifies
//! the sector constants it needs ([`certify`]), locates asymptotic rays for a
//! target value ([`sectors`], [`targets`]) and evaluates the function along
//! those rays with rigorous error bounds ([`evaluate`]).

pub mod certify;
pub mod error;
pub mod evaluate;
pub mod files;
pub mod growth;
pub mod numerics;
pub mod oracle;
pub mod phi0;
pub mod plan;
pub mod sectors;
pub mod targets;

pub use error::{Error, Result};
pub use certify::{find_alphas, AlphaSearch, SectorCertificate};
pub use evaluate::{RayPlan, RayTarget, Radius};
pub use growth::GrowthSpec;
pub use numerics::{Ball, Float, Mag, PrecisionContext, RBall, RationalAngle, Round, TowerMag};
pub use plan::{build_plan, FunctionPlan};
pub use sectors::{AddressBits, SectorInterval};
pub use targets::{GaussianRational, Omega, TargetSelection};
