use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ball::RBall;
use super::elementary::{compute_ln2, compute_pi};
use crate::error::{Error, Result};

/// Extra bits carried by the cached constants beyond the working precision.
const CONSTANT_GUARD: u32 = 512;

#[derive(Debug)]
struct Constants {
    prec: u32,
    pi: RBall,
    ln2: RBall,
    sqrt_pi: RBall,
    inv_sqrt_pi: RBall,
}

impl Constants {
    fn compute(prec: u32) -> Constants {
        let pi = compute_pi(prec);
        let ln2 = compute_ln2(prec);
        let sqrt_pi = pi.sqrt(prec);
        let inv_sqrt_pi = sqrt_pi.recip(prec);
        Constants { prec, pi, ln2, sqrt_pi, inv_sqrt_pi }
    }
}

/// Working precision together with constants cached at that precision.
///
/// Immutable and cheap to clone; every numeric routine takes one explicitly.
#[derive(Clone, Debug)]
pub struct PrecisionContext {
    bits: u32,
    consts: Arc<Constants>,
}

/// Serializable description of a context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionDescriptor {
    pub bits: u32,
}

impl PrecisionContext {
    pub const DEFAULT_BITS: u32 = 128;
    pub const MIN_BITS: u32 = 64;
    pub const MAX_BITS: u32 = 1 << 16;

    pub fn new(bits: u32) -> Result<PrecisionContext> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::Precondition(format!(
                "precision must lie in [{}, {}] bits, got {bits}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(PrecisionContext { bits, consts: Arc::new(Constants::compute(bits + CONSTANT_GUARD)) })
    }

    pub fn from_descriptor(d: PrecisionDescriptor) -> Result<PrecisionContext> {
        PrecisionContext::new(d.bits)
    }

    pub fn descriptor(&self) -> PrecisionDescriptor {
        PrecisionDescriptor { bits: self.bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn pick(&self, prec: u32, f: impl Fn(&Constants) -> &RBall) -> RBall {
        if prec <= self.consts.prec {
            f(&self.consts).clone()
        } else {
            f(&Constants::compute(prec + 16)).clone()
        }
    }

    pub fn pi(&self, prec: u32) -> RBall {
        self.pick(prec, |c| &c.pi)
    }

    pub fn ln2(&self, prec: u32) -> RBall {
        self.pick(prec, |c| &c.ln2)
    }

    pub fn sqrt_pi(&self, prec: u32) -> RBall {
        self.pick(prec, |c| &c.sqrt_pi)
    }

    pub fn inv_sqrt_pi(&self, prec: u32) -> RBall {
        self.pick(prec, |c| &c.inv_sqrt_pi)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(Self::DEFAULT_BITS).expect("default precision is valid")
    }
}
