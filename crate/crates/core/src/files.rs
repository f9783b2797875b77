//! JSON persistence for plans and rays.
//!
//! Rationals are `"p/q"` strings and reals are exact decimal strings paired
//! with their mantissa width, so a load reproduces the saved values exactly.
//! Each document carries a SHA-256 digest of its own pretty-printed form
//! taken with the digest field empty.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::{CertKind, CertStatus, SectorCertificate};
use crate::error::{Error, Result};
use crate::evaluate::{RayPlan, RayTarget};
use crate::growth::GrowthSpec;
use crate::numerics::{format_rational, parse_rational, Float, PrecisionDescriptor, RationalAngle};
use crate::plan::FunctionPlan;
use crate::sectors::{AddressBits, SectorInterval};
use crate::targets::{GaussianRational, Omega, TargetSelection};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealField {
    pub value: String,
    pub bits: u64,
}

impl RealField {
    pub fn new(x: &Float) -> RealField {
        RealField { value: x.to_decimal_string(), bits: x.bits() }
    }

    pub fn parse(&self) -> Result<Float> {
        let x = Float::parse_decimal_exact(&self.value).map_err(|e| Error::Format(e.to_string()))?;
        if x.bits() != self.bits {
            return Err(Error::Format(format!("{} has {} bits, file says {}", self.value, x.bits(), self.bits)));
        }
        Ok(x)
    }
}

fn rational(s: &str) -> Result<BigRational> {
    parse_rational(s).map_err(|e| Error::Format(e.to_string()))
}

fn angle(s: &str) -> Result<RationalAngle> {
    rational(s).map(RationalAngle::new)
}

fn f64_field(x: f64) -> Result<String> {
    Float::from_f64(x).map(|f| f.to_decimal_string()).ok_or_else(|| Error::Format(format!("{x} is not finite")))
}

fn parse_f64(s: &str) -> Result<f64> {
    let x = Float::parse_decimal_exact(s).map_err(|e| Error::Format(e.to_string()))?;
    let v = x.to_f64();
    if Float::from_f64(v).as_ref() != Some(&x) {
        return Err(Error::Format(format!("{s} is not a double")));
    }
    Ok(v)
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Serializes with the digest filled in.
fn seal<T: Serialize>(doc: &mut T, digest: impl Fn(&mut T) -> &mut String) -> Result<String> {
    digest(doc).clear();
    let bare = serde_json::to_string_pretty(doc)?;
    *digest(doc) = sha256_hex(&bare);
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

fn check_seal<T: Serialize>(doc: &mut T, digest: impl Fn(&mut T) -> &mut String) -> Result<()> {
    let claimed = std::mem::take(digest(doc));
    let bare = serde_json::to_string_pretty(doc)?;
    let actual = sha256_hex(&bare);
    *digest(doc) = claimed.clone();
    if claimed != actual {
        return Err(Error::Format(format!("digest mismatch: file says {claimed}, content hashes to {actual}")));
    }
    Ok(())
}

fn check_header(version: u32, kind: &str, want: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Format(format!("schema version {version} is not {SCHEMA_VERSION}")));
    }
    if kind != want {
        return Err(Error::Format(format!("expected a {want} document, found {kind:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub alpha: String,
    pub exponent: String,
    pub log_r: RealField,
    pub log_lambda: RealField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<u32>,
    pub half_angle: String,
    pub split_radius: RealField,
    pub grid_step: RealField,
    pub sup_mod_bound: RealField,
    pub sup_arg_bound: Option<RealField>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl CertificateRecord {
    fn new(c: &SectorCertificate) -> CertificateRecord {
        let (kind, level) = match c.kind {
            CertKind::K => ("K", None),
            CertKind::H(n) => ("H", Some(n)),
        };
        let (status, failure) = match &c.status {
            CertStatus::Certified => ("certified", None),
            CertStatus::Failed(why) => ("failed", Some(why.clone())),
        };
        CertificateRecord {
            kind: kind.into(),
            level,
            half_angle: format_rational(c.half_angle.q()),
            split_radius: RealField::new(&c.split_radius),
            grid_step: RealField::new(&c.grid_step),
            sup_mod_bound: RealField::new(&c.sup_mod_bound),
            sup_arg_bound: c.sup_arg_bound.as_ref().map(RealField::new),
            status: status.into(),
            failure,
        }
    }

    fn parse(&self) -> Result<SectorCertificate> {
        let kind = match (self.kind.as_str(), self.level) {
            ("K", None) => CertKind::K,
            ("H", Some(n)) => CertKind::H(n),
            _ => return Err(Error::Format(format!("bad certificate kind {:?}", self.kind))),
        };
        let status = match (self.status.as_str(), &self.failure) {
            ("certified", None) => CertStatus::Certified,
            ("failed", Some(why)) => CertStatus::Failed(why.clone()),
            _ => return Err(Error::Format(format!("bad certificate status {:?}", self.status))),
        };
        Ok(SectorCertificate {
            kind,
            half_angle: angle(&self.half_angle)?,
            split_radius: self.split_radius.parse()?,
            grid_step: self.grid_step.parse()?,
            sup_mod_bound: self.sup_mod_bound.parse()?,
            sup_arg_bound: self.sup_arg_bound.as_ref().map(RealField::parse).transpose()?,
            status,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema_version: u32,
    pub kind: String,
    pub growth: String,
    pub precision_bits: u32,
    /// Full opening of `K`, in units of `pi`.
    pub alpha: String,
    pub levels: Vec<LevelRecord>,
    pub certificates: Vec<CertificateRecord>,
    pub digest: String,
}

impl PlanFile {
    pub fn new(plan: &FunctionPlan) -> PlanFile {
        let levels = (1..=plan.levels)
            .map(|n| LevelRecord {
                n,
                alpha: format_rational(plan.alpha_at(n).q()),
                exponent: plan.n_at(n).to_string(),
                log_r: RealField::new(plan.log_r_at(n)),
                log_lambda: RealField::new(plan.log_lambda_at(n)),
            })
            .collect();
        PlanFile {
            schema_version: SCHEMA_VERSION,
            kind: "plan".into(),
            growth: plan.growth.to_string(),
            precision_bits: plan.precision.bits,
            alpha: format_rational(plan.alpha.q()),
            levels,
            certificates: plan.certificates.iter().map(CertificateRecord::new).collect(),
            digest: String::new(),
        }
    }

    pub fn to_plan(&self) -> Result<FunctionPlan> {
        check_header(self.schema_version, &self.kind, "plan")?;
        for (i, l) in self.levels.iter().enumerate() {
            if l.n != i + 1 {
                return Err(Error::Format(format!("level {} listed at position {}", l.n, i + 1)));
            }
        }
        let exps = self
            .levels
            .iter()
            .map(|l| l.exponent.parse().map_err(|_| Error::Format(format!("bad exponent {:?}", l.exponent))))
            .collect::<Result<Vec<_>>>()?;
        Ok(FunctionPlan {
            levels: self.levels.len(),
            alpha: angle(&self.alpha)?,
            alphas: self.levels.iter().map(|l| angle(&l.alpha)).collect::<Result<_>>()?,
            n: exps,
            log_r: self.levels.iter().map(|l| l.log_r.parse()).collect::<Result<_>>()?,
            log_lambda: self.levels.iter().map(|l| l.log_lambda.parse()).collect::<Result<_>>()?,
            growth: GrowthSpec::parse_canonical(&self.growth).map_err(|e| Error::Format(e.to_string()))?,
            certificates: self.certificates.iter().map(CertificateRecord::parse).collect::<Result<_>>()?,
            precision: PrecisionDescriptor { bits: self.precision_bits },
        })
    }
}

pub fn save_plan(plan: &FunctionPlan) -> Result<String> {
    seal(&mut PlanFile::new(plan), |d| &mut d.digest)
}

/// Parses a plan document and checks its digest.
pub fn load_plan_file(text: &str) -> Result<PlanFile> {
    let mut doc: PlanFile = serde_json::from_str(text)?;
    check_header(doc.schema_version, &doc.kind, "plan")?;
    check_seal(&mut doc, |d| &mut d.digest)?;
    Ok(doc)
}

pub fn load_plan(text: &str) -> Result<FunctionPlan> {
    load_plan_file(text)?.to_plan()
}

/// Digest of a saved plan, as recorded in its file.
pub fn plan_digest(plan: &FunctionPlan) -> Result<String> {
    let mut doc = PlanFile::new(plan);
    seal(&mut doc, |d| &mut d.digest)?;
    Ok(doc.digest)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum OmegaRecord {
    Exact { re: String, im: String },
    Approx { re: String, im: String, tol: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetRecord {
    Value { omega: OmegaRecord, indices: Vec<u64>, achieved_re: String, achieved_im: String, abs_sum: String },
    Infinity { indices: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayFile {
    pub schema_version: u32,
    pub kind: String,
    pub plan_digest: String,
    pub target: TargetRecord,
    pub bits: String,
    /// Midpoint of the deepest sector, in units of `pi`.
    pub theta: String,
    pub theta_width: String,
    pub sector_lo: String,
    pub sector_hi: String,
    pub generation: usize,
    pub digest: String,
}

impl RayFile {
    pub fn new(ray: &RayPlan, plan_digest: &str) -> Result<RayFile> {
        let target = match &ray.target {
            RayTarget::Value(s) => TargetRecord::Value {
                omega: match &s.omega {
                    Omega::Exact(w) => OmegaRecord::Exact { re: format_rational(&w.re), im: format_rational(&w.im) },
                    Omega::Approx { re, im, tol } => {
                        OmegaRecord::Approx { re: f64_field(*re)?, im: f64_field(*im)?, tol: f64_field(*tol)? }
                    }
                },
                indices: s.indices.clone(),
                achieved_re: format_rational(&s.achieved.re),
                achieved_im: format_rational(&s.achieved.im),
                abs_sum: format_rational(&s.abs_sum),
            },
            RayTarget::Infinity { indices } => TargetRecord::Infinity { indices: indices.clone() },
        };
        Ok(RayFile {
            schema_version: SCHEMA_VERSION,
            kind: "ray".into(),
            plan_digest: plan_digest.into(),
            target,
            bits: ray.bits.to_string(),
            theta: format_rational(ray.theta.q()),
            theta_width: format_rational(ray.theta_width.q()),
            sector_lo: format_rational(ray.sector.lo.q()),
            sector_hi: format_rational(ray.sector.hi.q()),
            generation: ray.sector.generation,
            digest: String::new(),
        })
    }

    pub fn to_ray(&self) -> Result<RayPlan> {
        check_header(self.schema_version, &self.kind, "ray")?;
        let target = match &self.target {
            TargetRecord::Value { omega, indices, achieved_re, achieved_im, abs_sum } => {
                let omega = match omega {
                    OmegaRecord::Exact { re, im } => Omega::Exact(GaussianRational::new(rational(re)?, rational(im)?)),
                    OmegaRecord::Approx { re, im, tol } => {
                        Omega::Approx { re: parse_f64(re)?, im: parse_f64(im)?, tol: parse_f64(tol)? }
                    }
                };
                let sel = TargetSelection {
                    omega,
                    indices: indices.clone(),
                    achieved: GaussianRational::new(rational(achieved_re)?, rational(achieved_im)?),
                    abs_sum: rational(abs_sum)?,
                };
                sel.verify().map_err(|e| Error::Format(e.to_string()))?;
                RayTarget::Value(sel)
            }
            TargetRecord::Infinity { indices } => RayTarget::Infinity { indices: indices.clone() },
        };
        let sector = SectorInterval { lo: angle(&self.sector_lo)?, hi: angle(&self.sector_hi)?, generation: self.generation };
        let ray = RayPlan {
            target,
            bits: AddressBits::parse(&self.bits).map_err(|e| Error::Format(e.to_string()))?,
            theta: angle(&self.theta)?,
            theta_width: angle(&self.theta_width)?,
            sector,
        };
        if ray.theta != ray.sector.midpoint() || ray.theta_width != ray.sector.width() || ray.bits.len() != ray.sector.generation {
            return Err(Error::Format("ray angle does not match its sector".into()));
        }
        Ok(ray)
    }
}

pub fn save_ray(ray: &RayPlan, plan_digest: &str) -> Result<String> {
    seal(&mut RayFile::new(ray, plan_digest)?, |d| &mut d.digest)
}

pub fn load_ray_file(text: &str) -> Result<RayFile> {
    let mut doc: RayFile = serde_json::from_str(text)?;
    check_header(doc.schema_version, &doc.kind, "ray")?;
    check_seal(&mut doc, |d| &mut d.digest)?;
    Ok(doc)
}

/// Loads a ray and, given its plan, checks the plan digest and re-derives the sector.
pub fn load_ray(text: &str, plan: Option<&FunctionPlan>) -> Result<RayPlan> {
    let doc = load_ray_file(text)?;
    let ray = doc.to_ray()?;
    if let Some(plan) = plan {
        let d = plan_digest(plan)?;
        if d != doc.plan_digest {
            return Err(Error::Format(format!("ray was built for plan {}, not {d}", doc.plan_digest)));
        }
        let again = RayPlan::from_bits(ray.target.clone(), ray.bits.clone(), plan)?;
        if again != ray {
            return Err(Error::Format("ray sector does not match the plan".into()));
        }
    }
    Ok(ray)
}
