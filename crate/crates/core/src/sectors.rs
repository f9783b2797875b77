//! Nested sectors `G(i_1, ..., i_n)`: `z^{N_n}` maps each generation-`n`
//! sector onto `H_n` (bit 1) or `K_n` (bit 0). All arithmetic is exact.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::numerics::RationalAngle;
use crate::plan::FunctionPlan;

/// Bit `j` (1-based) is 1 when the generation-`j` image is `H_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct AddressBits(pub Vec<bool>);

impl AddressBits {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(s: &str) -> Result<AddressBits> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Invalid(format!("address bits must be 0 or 1, got {c:?}"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(AddressBits)
    }
}

impl fmt::Display for AddressBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// The angular interval `[lo, hi]` of a sector, in units of `pi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorInterval {
    pub lo: RationalAngle,
    pub hi: RationalAngle,
    pub generation: usize,
}

impl SectorInterval {
    pub fn width(&self) -> RationalAngle {
        self.hi.sub(&self.lo)
    }

    pub fn midpoint(&self) -> RationalAngle {
        self.lo.add(&self.hi).half()
    }

    pub fn contains(&self, other: &SectorInterval) -> bool {
        self.lo.q() <= other.lo.q() && other.hi.q() <= self.hi.q()
    }

    pub fn disjoint(&self, other: &SectorInterval) -> bool {
        self.hi.q() < other.lo.q() || other.hi.q() < self.lo.q()
    }
}

/// Where `z^{N_n}` must send the sector's lower edge: `-alpha_n/2` for
/// `H_n`, `pi - alpha_n/2` for `K_n`.
fn image_start(bit: bool, alpha: &RationalAngle) -> RationalAngle {
    let h = alpha.half().neg();
    if bit {
        h
    } else {
        RationalAngle::pi().add(&h)
    }
}

/// Generation-1 sector: `K_1 = [pi - alpha_1/2, pi + alpha_1/2]` or `H_1 = [-alpha_1/2, alpha_1/2]`.
pub fn root_sector(bit: bool, alpha1: &RationalAngle) -> SectorInterval {
    let lo = image_start(bit, alpha1);
    SectorInterval { hi: lo.add(alpha1), lo, generation: 1 }
}

/// Leftmost sector of opening `alpha / n` inside `parent` whose image under
/// `z^n` is `H` (bit 1) or `K` (bit 0).
pub fn child_sector_with(parent: &SectorInterval, bit: bool, alpha: &RationalAngle, n: &BigInt) -> Result<SectorInterval> {
    let t = image_start(bit, alpha);
    let nq = BigRational::from_integer(n.clone());
    // c = (t + 2 k) / N in units of pi, with the smallest k keeping c >= parent.lo.
    let k = ((parent.lo.q() * &nq - t.q()) / BigRational::from_integer(BigInt::from(2))).ceil();
    let c = RationalAngle::new((t.q() + k * BigRational::from_integer(BigInt::from(2))) / &nq);
    let out = SectorInterval { hi: c.add(&alpha.div_int(n)), lo: c, generation: parent.generation + 1 };
    if !parent.contains(&out) {
        return Err(Error::Construction(format!(
            "no generation-{} child fits in [{}, {}] pi",
            out.generation, parent.lo, parent.hi
        )));
    }
    Ok(out)
}

pub fn child_sector(parent: &SectorInterval, bit: bool, plan: &FunctionPlan) -> Result<SectorInterval> {
    let n = parent.generation + 1;
    if parent.generation == 0 || n > plan.levels {
        return Err(Error::Precondition(format!("generation {n} is outside the plan's {} levels", plan.levels)));
    }
    child_sector_with(parent, bit, plan.alpha_at(n), plan.n_at(n))
}

/// The chain `S_1 > S_2 > ...` of an address, from explicit openings and
/// exponents (`alphas[j]`, `ns[j]` belong to generation `j + 1`).
pub fn address_chain(bits: &AddressBits, alphas: &[RationalAngle], ns: &[BigInt]) -> Result<Vec<SectorInterval>> {
    if bits.len() > alphas.len() || bits.len() > ns.len() {
        return Err(Error::DepthInsufficient(format!("address of length {} exceeds {} levels", bits.len(), alphas.len())));
    }
    let mut out: Vec<SectorInterval> = Vec::with_capacity(bits.len());
    for (j, &b) in bits.0.iter().enumerate() {
        let s = match out.last() {
            None => root_sector(b, &alphas[0]),
            Some(parent) => child_sector_with(parent, b, &alphas[j], &ns[j])?,
        };
        if let Some(parent) = out.last() {
            if !parent.contains(&s) {
                return Err(Error::Construction(format!("generation {} escapes its parent", j + 1)));
            }
        }
        out.push(s);
    }
    Ok(out)
}

pub fn address_to_sector(bits: &AddressBits, plan: &FunctionPlan) -> Result<Vec<SectorInterval>> {
    address_chain(bits, &plan.alphas, &plan.n)
}

/// Midpoint and opening of the deepest sector of the address.
pub fn ray_angle(bits: &AddressBits, plan: &FunctionPlan) -> Result<(RationalAngle, RationalAngle)> {
    if bits.is_empty() {
        return Err(Error::Precondition("an address needs at least one bit".into()));
    }
    let chain = address_to_sector(bits, plan)?;
    let deepest = chain.last().expect("nonempty chain");
    Ok((deepest.midpoint(), deepest.width()))
}

/// Does `z^N` map the sector exactly onto `H` (bit 1) or `K` (bit 0) of opening `alpha`?
pub fn image_matches(s: &SectorInterval, bit: bool, alpha: &RationalAngle, n: &BigInt) -> bool {
    let nq = BigRational::from_integer(n.clone());
    let lo = s.lo.q() * &nq;
    let hi = s.hi.q() * &nq;
    let shift = (lo.clone() - image_start(bit, alpha).q()) / BigRational::from_integer(BigInt::from(2));
    shift.is_integer() && hi - lo == *alpha.q()
}

/// All `2^depth` generation-`depth` sectors, sorted by lower edge.
pub fn cantor_intervals(plan: &FunctionPlan, depth: usize) -> Result<Vec<(AddressBits, SectorInterval)>> {
    if depth == 0 || depth > plan.levels {
        return Err(Error::DepthInsufficient(format!("depth {depth} outside 1..={}", plan.levels)));
    }
    let mut layer: Vec<(AddressBits, SectorInterval)> = [false, true]
        .iter()
        .map(|&b| (AddressBits(vec![b]), root_sector(b, plan.alpha_at(1))))
        .collect();
    for _ in 1..depth {
        let mut next = Vec::with_capacity(layer.len() * 2);
        for (bits, s) in &layer {
            for b in [false, true] {
                let mut nb = bits.clone();
                nb.0.push(b);
                next.push((nb, child_sector(s, b, plan)?));
            }
        }
        layer = next;
    }
    layer.sort_by(|a, b| a.1.lo.q().cmp(b.1.lo.q()));
    Ok(layer)
}

/// Sum of openings of the generation-`depth` sectors: `2^depth alpha_n / N_n`.
pub fn total_measure(plan: &FunctionPlan, depth: usize) -> RationalAngle {
    let two_pow = BigInt::one() << depth;
    plan.alpha_at(depth).div_int(plan.n_at(depth)).mul_int(&two_pow)
}

/// The integer `k` with `a = b + 2 k pi`, if there is one.
pub fn winding(a: &RationalAngle, b: &RationalAngle) -> Option<BigInt> {
    let d = (a.q() - b.q()) / BigRational::from_integer(BigInt::from(2));
    if d.is_integer() {
        Some(d.to_integer())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ra(n: i64, d: i64) -> RationalAngle {
        RationalAngle::from_ratio(n, d)
    }

    #[test]
    fn hand_computed_second_generation() {
        let alphas = [ra(1, 8), ra(1, 16)];
        let ns = [BigInt::one(), BigInt::from(25)];
        let g1 = root_sector(true, &alphas[0]);
        assert_eq!((g1.lo.clone(), g1.hi.clone()), (ra(-1, 16), ra(1, 16)));
        let g11 = child_sector_with(&g1, true, &alphas[1], &ns[1]).unwrap();
        assert_eq!((g11.lo.clone(), g11.hi.clone()), (ra(-1, 800), ra(1, 800)));
        assert_eq!(g11.lo.mul_int(&ns[1]), ra(-1, 32));
        assert_eq!(g11.hi.mul_int(&ns[1]), ra(1, 32));
        let chain = address_chain(&AddressBits(vec![true, true]), &alphas, &ns).unwrap();
        assert_eq!(chain[1], g11);
        assert_eq!(chain[1].midpoint(), RationalAngle::zero());
        assert_eq!(chain[1].width(), ra(1, 400));
        let g0 = root_sector(false, &alphas[0]);
        assert_eq!((g0.lo.clone(), g0.hi.clone()), (ra(15, 16), ra(17, 16)));
    }

    #[test]
    fn images_are_exact() {
        let alphas = [ra(1, 8), ra(1, 16), ra(1, 40)];
        let ns = [BigInt::one(), BigInt::from(25), BigInt::from(1201)];
        for code in 0..8u32 {
            let bits = AddressBits((0..3).map(|j| code >> j & 1 == 1).collect());
            let chain = address_chain(&bits, &alphas, &ns).unwrap();
            for (j, s) in chain.iter().enumerate() {
                assert!(image_matches(s, bits.0[j], &alphas[j], &ns[j]));
                assert!(!image_matches(s, !bits.0[j], &alphas[j], &ns[j]));
            }
        }
    }

    #[test]
    fn child_must_fit() {
        // N * width = 2 pi cannot always hold a sector of the right phase.
        let parent = SectorInterval { lo: ra(0, 1), hi: ra(1, 100), generation: 1 };
        assert!(child_sector_with(&parent, false, &ra(1, 1000), &BigInt::from(3)).is_err());
    }

    #[test]
    fn address_parsing() {
        let b = AddressBits::parse("0110").unwrap();
        assert_eq!(b.0, vec![false, true, true, false]);
        assert_eq!(b.to_string(), "0110");
        assert!(AddressBits::parse("012").is_err());
        assert_eq!(winding(&ra(5, 1), &ra(1, 1)), Some(BigInt::from(2)));
        assert_eq!(winding(&ra(1, 2), &ra(0, 1)), None);
    }
}
