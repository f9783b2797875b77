//! The countable set `P` of Gaussian rationals `q, -q, iq, -iq` with
//! `q in [0, 1)`, its enumeration `beta_n`, and index sets `A` whose
//! `beta`-sums hit a target.
//!
//! Enumeration: `beta_1 = 0`, then blocks `(q, -q, iq, -iq)` with `q`
//! running over the reduced fractions in `(0, 1)` ordered by denominator,
//! then numerator: `1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, parse_rational};
use crate::sectors::AddressBits;

/// Largest denominator the enumeration indexes.
pub const MAX_DENOMINATOR: u64 = 1 << 31;
const SIEVE: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PClass {
    /// `q`
    P1,
    /// `-q`
    P2,
    /// `i q`
    P3,
    /// `-i q`
    P4,
}

impl PClass {
    fn offset(self) -> u64 {
        match self {
            PClass::P1 => 0,
            PClass::P2 => 1,
            PClass::P3 => 2,
            PClass::P4 => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> GaussianRational {
        GaussianRational { re, im }
    }

    pub fn zero() -> GaussianRational {
        GaussianRational::default()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    /// `|re| + |im|`, which is `|z|` for the axis-aligned elements of `P`.
    pub fn l1(&self) -> BigRational {
        self.re.abs() + self.im.abs()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }

    /// Parses `x`, `x+iy`, `x+yi`, `iy`, `yi` or `i` with `x`, `y` decimals or `p/q`.
    pub fn parse(s: &str) -> Result<GaussianRational> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Invalid("empty complex number".into()));
        }
        let bytes = t.as_bytes();
        let split = (1..bytes.len()).rev().find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'/')
        });
        let (a, b) = match split {
            Some(i) => (&t[..i], &t[i..]),
            None => ("", t.as_str()),
        };
        let imag = |p: &str| -> Result<Option<BigRational>> {
            let (sign, body) = match p.strip_prefix('-') {
                Some(r) => (-1, r),
                None => (1, p.strip_prefix('+').unwrap_or(p)),
            };
            let core = if let Some(r) = body.strip_prefix('i') {
                r
            } else if let Some(r) = body.strip_suffix('i') {
                r.strip_suffix('*').unwrap_or(r)
            } else {
                return Ok(None);
            };
            let v = if core.is_empty() { BigRational::one() } else { parse_rational(core)? };
            Ok(Some(if sign < 0 { -v } else { v }))
        };
        let real = |p: &str| -> Result<BigRational> {
            if p.is_empty() {
                Ok(BigRational::zero())
            } else {
                parse_rational(p.strip_prefix('+').unwrap_or(p))
            }
        };
        match imag(b)? {
            Some(im) => Ok(GaussianRational::new(real(a)?, im)),
            None if a.is_empty() => Ok(GaussianRational::new(real(b)?, BigRational::zero())),
            None => Err(Error::Invalid(format!("cannot parse complex number {s:?}"))),
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return f.write_str(&format_rational(&self.re));
        }
        let sign = if self.im.is_negative() { "-" } else { "+" };
        if self.re.is_zero() && sign == "+" {
            return write!(f, "i{}", format_rational(&self.im));
        }
        write!(f, "{}{sign}i{}", format_rational(&self.re), format_rational(&self.im.abs()))
    }
}

fn sieve() -> &'static Vec<u64> {
    static S: OnceLock<Vec<u64>> = OnceLock::new();
    S.get_or_init(|| {
        let mut phi: Vec<u64> = (0..SIEVE as u64).collect();
        for i in 2..SIEVE {
            if phi[i] == i as u64 {
                for j in (i..SIEVE).step_by(i) {
                    phi[j] -= phi[j] / i as u64;
                }
            }
        }
        let mut acc = 0u64;
        phi[0] = 0;
        for v in phi.iter_mut() {
            acc += *v;
            *v = acc;
        }
        phi
    })
}

/// `sum_{k <= n} phi(k)`.
fn totient_sum(n: u64) -> u64 {
    if (n as usize) < SIEVE {
        return sieve()[n as usize];
    }
    static MEMO: OnceLock<Mutex<HashMap<u64, u64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = memo.lock().expect("memo lock").get(&n) {
        return *v;
    }
    let mut s = (n as u128 * (n as u128 + 1) / 2) as u64;
    let mut d = 2u64;
    while d <= n {
        let q = n / d;
        let last = n / q;
        s -= (last - d + 1) * totient_sum(q);
        d = last + 1;
    }
    memo.lock().expect("memo lock").insert(n, s);
    s
}

fn prime_factors(mut d: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= d {
        if d % p == 0 {
            out.push(p);
            while d % p == 0 {
                d /= p;
            }
        }
        p += 1;
    }
    if d > 1 {
        out.push(d);
    }
    out
}

/// `#{1 <= m <= x : gcd(m, d) = 1}` by inclusion-exclusion.
fn coprime_count(x: u64, primes: &[u64]) -> u64 {
    let mut total: i64 = 0;
    for mask in 0u32..(1 << primes.len()) {
        let mut prod = 1u64;
        for (i, p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prod *= p;
            }
        }
        let term = (x / prod) as i64;
        total += if mask.count_ones() % 2 == 0 { term } else { -term };
    }
    total as u64
}

/// Number of reduced fractions in `(0, 1)` with denominator `< d`.
fn before_denominator(d: u64) -> u64 {
    totient_sum(d - 1) - 1
}

/// 1-based position of the reduced fraction `m / d` in the `q` order.
fn position(m: u64, d: u64) -> u64 {
    before_denominator(d) + coprime_count(m, &prime_factors(d))
}

/// The `p`-th fraction `(m, d)` in the `q` order.
fn fraction_at(p: u64) -> (u64, u64) {
    let (mut lo, mut hi) = (2u64, 2 * (p as f64).sqrt() as u64 + 3);
    while totient_sum(hi) - 1 < p {
        hi *= 2;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if totient_sum(mid) > p {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let d = lo;
    let k = p - before_denominator(d);
    let primes = prime_factors(d);
    let (mut a, mut b) = (1u64, d - 1);
    while a < b {
        let mid = a + (b - a) / 2;
        if coprime_count(mid, &primes) >= k {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    (a, d)
}

/// `beta_n` as `(q, class)` with `q in [0, 1)`.
pub fn beta_entry(n: u64) -> Result<(BigRational, PClass)> {
    if n == 0 {
        return Err(Error::Invalid("the enumeration starts at n = 1".into()));
    }
    if n == 1 {
        return Ok((BigRational::zero(), PClass::P1));
    }
    let p = (n - 2) / 4 + 1;
    let class = [PClass::P1, PClass::P2, PClass::P3, PClass::P4][((n - 2) % 4) as usize];
    let (m, d) = fraction_at(p);
    Ok((BigRational::new(BigInt::from(m), BigInt::from(d)), class))
}

fn place(q: BigRational, class: PClass) -> GaussianRational {
    let z = BigRational::zero();
    match class {
        PClass::P1 => GaussianRational::new(q, z),
        PClass::P2 => GaussianRational::new(-q, z),
        PClass::P3 => GaussianRational::new(z, q),
        PClass::P4 => GaussianRational::new(z, -q),
    }
}

pub fn beta(n: u64) -> Result<GaussianRational> {
    let (q, c) = beta_entry(n)?;
    Ok(place(q, c))
}

fn index_of_entry(q: &BigRational, class: PClass) -> Result<u64> {
    if q.is_zero() {
        return if class == PClass::P1 { Ok(1) } else { Err(Error::Invalid("zero is only beta_1".into())) };
    }
    if !q.is_positive() || *q >= BigRational::one() {
        return Err(Error::Invalid(format!("{} is not in (0, 1)", format_rational(q))));
    }
    let d = q.denom().to_u64().filter(|d| *d <= MAX_DENOMINATOR);
    let d = d.ok_or_else(|| Error::Invalid(format!("denominator of {} exceeds {MAX_DENOMINATOR}", format_rational(q))))?;
    let m = q.numer().to_u64().expect("numerator below denominator");
    Ok(2 + 4 * (position(m, d) - 1) + class.offset())
}

/// Inverse of [`beta`]; `None` for values outside `P`.
pub fn index_of(x: &GaussianRational) -> Option<u64> {
    let (q, class) = match (x.re.is_zero(), x.im.is_zero()) {
        (true, true) => return Some(1),
        (false, true) if x.re.is_positive() => (x.re.clone(), PClass::P1),
        (false, true) => (-x.re.clone(), PClass::P2),
        (true, false) if x.im.is_positive() => (x.im.clone(), PClass::P3),
        (true, false) => (-x.im.clone(), PClass::P4),
        _ => return None,
    };
    index_of_entry(&q, class).ok()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Omega {
    Exact(GaussianRational),
    Approx { re: f64, im: f64, tol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSelection {
    pub omega: Omega,
    /// Sorted, distinct indices.
    pub indices: Vec<u64>,
    pub achieved: GaussianRational,
    pub abs_sum: BigRational,
}

impl TargetSelection {
    fn from_indices(omega: Omega, mut indices: Vec<u64>) -> Result<TargetSelection> {
        indices.sort_unstable();
        indices.dedup();
        let mut achieved = GaussianRational::zero();
        let mut abs_sum = BigRational::zero();
        for &n in &indices {
            let b = beta(n)?;
            abs_sum += b.l1();
            achieved = achieved.add(&b);
        }
        Ok(TargetSelection { omega, indices, achieved, abs_sum })
    }

    /// Bits `i_j = [j in A]` for `j = 1..=depth`.
    pub fn bits_prefix(&self, depth: usize) -> AddressBits {
        AddressBits((1..=depth as u64).map(|j| self.indices.binary_search(&j).is_ok()).collect())
    }

    pub fn max_index(&self) -> Option<u64> {
        self.indices.last().copied()
    }

    /// Recomputes the sums from the enumeration and checks the contract.
    pub fn verify(&self) -> Result<()> {
        let again = TargetSelection::from_indices(self.omega.clone(), self.indices.clone())?;
        if again.indices != self.indices || again.achieved != self.achieved || again.abs_sum != self.abs_sum {
            return Err(Error::Construction("selection sums do not match its indices".into()));
        }
        match &self.omega {
            Omega::Exact(w) if *w != self.achieved => Err(Error::Construction("exact selection misses its target".into())),
            Omega::Approx { re, im, tol } => {
                let (x, y) = self.achieved.to_f64();
                if (x - re).hypot(y - im) > *tol {
                    return Err(Error::Construction("approximate selection misses its tolerance".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn axis_classes(x: &BigRational, pos: PClass, neg: PClass) -> (BigRational, PClass) {
    if x.is_negative() {
        (-x.clone(), neg)
    } else {
        (x.clone(), pos)
    }
}

/// `k = floor(x) + 1` distinct fractions in `(0, 1)` summing to `x > 0`:
/// `x/k + c (j - (k-1)/2)` with `c = min(x/k, 1 - x/k) / k`.
fn decompose(x: &BigRational) -> Vec<BigRational> {
    let k: BigInt = x.floor().to_integer() + 1;
    let kq = BigRational::from_integer(k.clone());
    let base = x / &kq;
    let c = (&base).min(&(BigRational::one() - &base)).clone() / &kq;
    let centre = (&kq - BigRational::one()) / BigRational::from_integer(BigInt::from(2));
    let kk = k.to_u64().expect("decomposition size fits u64");
    (0..kk).map(|j| &base + &c * (BigRational::from_integer(BigInt::from(j)) - &centre)).collect()
}

fn indices_for(parts: &[BigRational], class: PClass) -> Result<Vec<u64>> {
    parts.iter().map(|q| index_of_entry(q, class)).collect()
}

/// A finite `A` with `sum_{n in A} beta_n = omega` exactly.
pub fn select_target(omega: &GaussianRational) -> Result<TargetSelection> {
    let mut indices = Vec::new();
    for (x, pos, neg) in [(&omega.re, PClass::P1, PClass::P2), (&omega.im, PClass::P3, PClass::P4)] {
        if x.is_zero() {
            continue;
        }
        let (ax, class) = axis_classes(x, pos, neg);
        indices.extend(indices_for(&decompose(&ax), class)?);
    }
    TargetSelection::from_indices(Omega::Exact(omega.clone()), indices)
}

/// Largest fraction `<= g` with denominator `<= dmax`, by Stern-Brocot descent.
fn best_lower(g: &BigRational, dmax: &BigInt) -> BigRational {
    let (mut a, mut b) = (BigInt::zero(), BigInt::one());
    let (mut c, mut d) = (BigInt::one(), BigInt::zero());
    let floor_div = |n: &BigRational| n.floor().to_integer();
    loop {
        let gb = BigRational::from_integer(b.clone()) * g;
        let slack = &gb - BigRational::from_integer(a.clone());
        if slack.is_zero() {
            break;
        }
        // Move the left end towards g.
        let right_gap = BigRational::from_integer(c.clone()) - BigRational::from_integer(d.clone()) * g;
        let mut k = if d.is_zero() { floor_div(&slack) } else { floor_div(&(slack / &right_gap)) };
        let mut limited = false;
        if !d.is_zero() {
            let cap = (dmax - &b).div_floor(&d);
            if cap < k {
                k = cap;
                limited = true;
            }
        }
        a += &k * &c;
        b += &k * &d;
        if limited {
            break;
        }
        let gb = BigRational::from_integer(b.clone()) * g;
        let slack = &gb - BigRational::from_integer(a.clone());
        if slack.is_zero() {
            break;
        }
        // Move the right end towards g.
        let right_gap = BigRational::from_integer(c.clone()) - BigRational::from_integer(d.clone()) * g;
        let mut k = (right_gap / &slack).ceil().to_integer() - 1;
        let cap = (dmax - &d).div_floor(&b);
        if cap < k {
            k = cap;
        }
        if k.is_zero() {
            break;
        }
        c += &k * &a;
        d += &k * &b;
    }
    BigRational::new(a, b)
}

/// Greedy: per axis, repeatedly take the largest unused fraction below the
/// remaining gap with denominator at most `D`, doubling `D` until the pick
/// is at least half the gap (capped at 1/2).
pub fn select_target_approx(re: f64, im: f64, tol: f64) -> Result<TargetSelection> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive and finite".into()));
    }
    let exact = |v: f64| BigRational::from_float(v).ok_or_else(|| Error::Invalid("target must be finite".into()));
    let half_tol = BigRational::from_float(tol / 2.0).expect("finite");
    let mut indices = Vec::new();
    for (x, pos, neg) in [(exact(re)?, PClass::P1, PClass::P2), (exact(im)?, PClass::P3, PClass::P4)] {
        let (mut gap, class) = axis_classes(&x, pos, neg);
        let mut used: BTreeSet<BigRational> = BTreeSet::new();
        while gap > half_tol {
            let floor = gap.clone().min(BigRational::one()) / BigRational::from_integer(BigInt::from(2));
            let mut dmax = BigInt::from(2);
            let pick = loop {
                let cap = BigRational::new(&dmax - 1, dmax.clone());
                let target = gap.clone().min(cap);
                let three_quarters = &target * BigRational::new(3.into(), 4.into());
                let found = [target, three_quarters]
                    .iter()
                    .map(|t| best_lower(t, &dmax))
                    .find(|q| q.is_positive() && *q >= floor && !used.contains(q));
                if let Some(q) = found {
                    break q;
                }
                dmax *= 2;
                if dmax > BigInt::from(MAX_DENOMINATOR) {
                    return Err(Error::Invalid("tolerance needs denominators beyond the enumeration".into()));
                }
            };
            gap -= &pick;
            indices.push(index_of_entry(&pick, class)?);
            used.insert(pick);
        }
    }
    TargetSelection::from_indices(Omega::Approx { re, im, tol }, indices)
}

/// The first `count` indices with `beta_n` real and at least 1/2.
pub fn infinity_target(count: usize) -> Vec<u64> {
    let half = BigRational::new(1.into(), 2.into());
    let mut out = Vec::with_capacity(count);
    let mut p = 1u64;
    while out.len() < count {
        let (m, d) = fraction_at(p);
        if BigRational::new(BigInt::from(m), BigInt::from(d)) >= half {
            out.push(2 + 4 * (p - 1));
        }
        p += 1;
    }
    out
}

fn is_probable_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == vec![n]
}

/// An even number of distinct fractions summing to `x > 0`, each with a
/// denominator divisible by a prime large enough that every index lies
/// above `min_index`.
fn fresh_decompose(x: &BigRational, class: PClass, min_index: u64) -> Result<Vec<u64>> {
    let k: BigInt = (x.floor().to_integer() + 1) * 2;
    let kq = BigRational::from_integer(k.clone());
    let base = x / &kq;
    let ku = k.to_u64().ok_or_else(|| Error::Invalid("target too large".into()))?;
    // (k - 1) / P < base, P > den(base), P > k, and denominators >= P index past min_index.
    let need_gap: BigInt = (BigRational::from_integer(k.clone() - 1) / &base).ceil().to_integer() + 1;
    let need_gap = need_gap.to_u64();
    let mut p = need_gap
        .ok_or_else(|| Error::Invalid("target too fine for fresh indices".into()))?
        .max(base.denom().to_u64().unwrap_or(u64::MAX).saturating_add(1))
        .max(ku + 1)
        .max(3);
    while !(is_probable_prime(p) && 4 * before_denominator(p) + 2 > min_index) {
        p += 1;
        if p > MAX_DENOMINATOR {
            return Err(Error::Invalid("no admissible prime below the enumeration limit".into()));
        }
    }
    let pq = BigInt::from(p);
    let parts: Vec<BigRational> = (0..ku)
        .map(|j| &base + BigRational::new(BigInt::from(2 * j as i64 - (ku as i64 - 1)), pq.clone()))
        .collect();
    indices_for(&parts, class)
}

/// A selection containing `forced_in`, avoiding `forced_out`, summing exactly to `omega`.
pub fn constrained_target(
    omega: &GaussianRational,
    forced_in: &BTreeSet<u64>,
    forced_out: &BTreeSet<u64>,
) -> Result<TargetSelection> {
    if forced_in.intersection(forced_out).next().is_some() {
        return Err(Error::Invalid("forced-in and forced-out sets overlap".into()));
    }
    if forced_in.is_empty() && forced_out.is_empty() {
        return select_target(omega);
    }
    if forced_in.contains(&0) || forced_out.contains(&0) {
        return Err(Error::Invalid("indices start at 1".into()));
    }
    let mut forced_sum = GaussianRational::zero();
    for &n in forced_in {
        forced_sum = forced_sum.add(&beta(n)?);
    }
    let residual = omega.sub(&forced_sum);
    let floor = forced_in.iter().chain(forced_out).copied().max().unwrap_or(0);
    let mut indices: Vec<u64> = forced_in.iter().copied().collect();
    for (x, pos, neg) in [(&residual.re, PClass::P1, PClass::P2), (&residual.im, PClass::P3, PClass::P4)] {
        if x.is_zero() {
            continue;
        }
        let (ax, class) = axis_classes(x, pos, neg);
        indices.extend(fresh_decompose(&ax, class, floor)?);
    }
    let sel = TargetSelection::from_indices(Omega::Exact(omega.clone()), indices)?;
    if sel.indices.iter().any(|n| forced_out.contains(n)) {
        return Err(Error::Construction("fresh index collided with the forced-out set".into()));
    }
    Ok(sel)
}

/// Forced sets from an address prefix: bit 1 forces `j` in, bit 0 forces it out.
pub fn forced_from_prefix(bits: &AddressBits) -> (BTreeSet<u64>, BTreeSet<u64>) {
    let mut fin = BTreeSet::new();
    let mut fout = BTreeSet::new();
    for (j, b) in bits.0.iter().enumerate() {
        if *b {
            fin.insert(j as u64 + 1);
        } else {
            fout.insert(j as u64 + 1);
        }
    }
    (fin, fout)
}
