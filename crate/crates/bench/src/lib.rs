//! Fixtures shared by the benchmarks.

use asymval_core::evaluate::{ray_plan, RayPlan};
use asymval_core::targets::select_target;
use asymval_core::{build_plan, FunctionPlan, GaussianRational, GrowthSpec, PrecisionContext};

pub fn context(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).expect("valid precision")
}

/// Four-level plan for `G(r) = r + 1`.
pub fn desk_plan(ctx: &PrecisionContext) -> FunctionPlan {
    build_plan(&GrowthSpec::parse("pow:1").expect("growth"), 4, ctx).expect("plan")
}

pub fn half_ray(plan: &FunctionPlan) -> RayPlan {
    let w = GaussianRational::parse("1/2").expect("target");
    ray_plan(select_target(&w).expect("selection"), plan).expect("ray")
}
