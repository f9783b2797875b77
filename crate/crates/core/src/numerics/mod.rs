//! Certified numerics: multiprecision floats, balls, log-polar numbers,
//! iterated-exponential magnitudes and exact angles.

mod angle;
mod ball;
mod context;
mod elementary;
mod float;
mod logpolar;
mod mag;
mod tower;

pub use angle::{format_rational, parse_rational, RationalAngle};
pub use ball::{Ball, RBall};
pub use context::{PrecisionContext, PrecisionDescriptor};
pub use float::{Float, Round};
pub use logpolar::{logpolar_mul, logpolar_pow_int, AngleRepr, LogPolar, LOGPOLAR_CUTOFF};
pub use mag::Mag;
pub use tower::{tower_loglog, tower_sum_upper, TowerMag, TOWER_CUT};

pub(crate) use ball::mag_lower;

