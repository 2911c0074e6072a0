//! Name-keyed factories for every pluggable component.
//!
//! Each table maps a config name to a constructor returning a trait object.
//! [`Registry::builtin`] registers the stock components; callers may add
//! their own before building an experiment.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};
use stp_core::diagnostics::convex_rate_constants;
use stp_core::directions::{DirectionSampler, ScaledGaussian, UnitSphere};
use stp_core::objectives::{HuberChainConvex, NesterovChain, Objective, SphereQuadratic};
use stp_core::schedules::{linear_rate_probe_base, Directional, Harmonic, Power, StepSchedule};
use stp_core::solvers::{Gld, Rgf, Solver, Stp};

use crate::config::{ExperimentConfig, InitSpec, ObjectiveSpec};
use crate::error::HarnessError;

type Built<T> = Result<T, HarnessError>;

pub type ObjectiveFactory = fn(&ObjectiveSpec) -> Built<Arc<dyn Objective>>;
pub type DistributionFactory = fn() -> Arc<dyn DirectionSampler>;
pub type ScheduleFactory = fn(&Params<'_>, &BuildContext<'_>) -> Built<Arc<dyn StepSchedule>>;
pub type SolverFactory =
    fn(&Params<'_>, &BuildContext<'_>, Option<Arc<dyn StepSchedule>>) -> Built<Arc<dyn Solver>>;

/// Everything a schedule or solver factory may consult.
pub struct BuildContext<'a> {
    pub objective: &'a dyn Objective,
    pub sampler: &'a Arc<dyn DirectionSampler>,
    pub theta_init: &'a [f64],
}

/// A parameter map together with its position in the config, for error
/// messages that name the offending key.
pub struct Params<'a> {
    prefix: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(prefix: &'a str, map: &'a Map<String, Value>) -> Self {
        Self { prefix, map }
    }

    pub fn key(&self, name: &str) -> String {
        format!("{}.{}", self.prefix, name)
    }

    pub fn raw(&self, name: &str) -> Option<&'a Value> {
        self.map.get(name)
    }

    pub fn f64(&self, name: &str) -> Built<Option<f64>> {
        match self.map.get(name) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| HarnessError::invalid(self.key(name), "expected a number")),
        }
    }

    pub fn require_f64(&self, name: &str) -> Built<f64> {
        self.f64(name)?
            .ok_or_else(|| HarnessError::invalid(self.key(name), "missing required parameter"))
    }

    /// Rejects parameters outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Built<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(HarnessError::invalid(
                self.key(k),
                format!("unknown parameter (allowed: {})", allowed.join(", ")),
            )),
            None => Ok(()),
        }
    }
}

fn core_err(key: impl Into<String>) -> impl FnOnce(stp_core::Error) -> HarnessError {
    let key = key.into();
    move |e| HarnessError::invalid(key, e.to_string())
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub objective: Arc<dyn Objective>,
    pub sampler: Arc<dyn DirectionSampler>,
    pub schedule: Option<Arc<dyn StepSchedule>>,
    pub solver: Arc<dyn Solver>,
    pub theta_init: Vec<f64>,
}

#[derive(Clone, Default)]
pub struct Registry {
    objectives: BTreeMap<String, ObjectiveFactory>,
    distributions: BTreeMap<String, DistributionFactory>,
    schedules: BTreeMap<String, ScheduleFactory>,
    solvers: BTreeMap<String, SolverFactory>,
}

fn unknown<T>(
    key: &str,
    kind: &'static str,
    name: &str,
    table: &BTreeMap<String, T>,
) -> HarnessError {
    HarnessError::UnknownComponent {
        key: key.into(),
        kind,
        name: name.into(),
        known: table.keys().cloned().collect::<Vec<_>>().join(", "),
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_objective("nesterov_chain", |spec| {
            Params::new("objective.params", &spec.params).only(&[])?;
            Ok(Arc::new(NesterovChain::new(spec.dim)?))
        });
        r.register_objective("sphere_quadratic", |spec| {
            Params::new("objective.params", &spec.params).only(&[])?;
            Ok(Arc::new(SphereQuadratic::new(spec.dim)?))
        });
        r.register_objective("huber_chain", |spec| {
            Params::new("objective.params", &spec.params).only(&[])?;
            Ok(Arc::new(HuberChainConvex::new(spec.dim)?))
        });
        r.register_distribution("unit_sphere", || Arc::new(UnitSphere));
        r.register_distribution("scaled_gaussian", || Arc::new(ScaledGaussian));
        r.register_schedule("power", build_power);
        r.register_schedule("harmonic", build_harmonic);
        r.register_schedule("directional", build_directional);
        r.register_solver("stp", build_stp);
        r.register_solver("rgf", build_rgf);
        r.register_solver("gld", build_gld);
        r
    }

    pub fn register_objective(&mut self, name: &str, factory: ObjectiveFactory) {
        self.objectives.insert(name.into(), factory);
    }

    pub fn register_distribution(&mut self, name: &str, factory: DistributionFactory) {
        self.distributions.insert(name.into(), factory);
    }

    pub fn register_schedule(&mut self, name: &str, factory: ScheduleFactory) {
        self.schedules.insert(name.into(), factory);
    }

    pub fn register_solver(&mut self, name: &str, factory: SolverFactory) {
        self.solvers.insert(name.into(), factory);
    }

    pub fn objective_names(&self) -> Vec<&str> {
        self.objectives.keys().map(String::as_str).collect()
    }

    pub fn solver_names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }

    pub fn schedule_names(&self) -> Vec<&str> {
        self.schedules.keys().map(String::as_str).collect()
    }

    pub fn distribution_names(&self) -> Vec<&str> {
        self.distributions.keys().map(String::as_str).collect()
    }

    pub fn objective(&self, spec: &ObjectiveSpec) -> Built<Arc<dyn Objective>> {
        let factory = self
            .objectives
            .get(&spec.name)
            .ok_or_else(|| unknown("objective.name", "objective", &spec.name, &self.objectives))?;
        factory(spec)
    }

    pub fn distribution(&self, name: &str) -> Built<Arc<dyn DirectionSampler>> {
        let factory = self.distributions.get(name).ok_or_else(|| {
            unknown(
                "distribution.name",
                "distribution",
                name,
                &self.distributions,
            )
        })?;
        Ok(factory())
    }

    pub fn build(&self, config: &ExperimentConfig) -> Built<Experiment> {
        let objective = self.objective(&config.objective)?;
        let sampler = self.distribution(&config.distribution.name)?;
        let theta_init = initial_point(objective.as_ref(), &config.init)?;
        let solver_factory = self
            .solvers
            .get(&config.solver.name)
            .ok_or_else(|| unknown("solver.name", "solver", &config.solver.name, &self.solvers))?;
        let ctx = BuildContext {
            objective: objective.as_ref(),
            sampler: &sampler,
            theta_init: &theta_init,
        };
        let schedule = match &config.schedule {
            Some(spec) => {
                let factory = self.schedules.get(&spec.name).ok_or_else(|| {
                    unknown("schedule.name", "schedule", &spec.name, &self.schedules)
                })?;
                Some(factory(
                    &Params::new("schedule.params", &spec.params),
                    &ctx,
                )?)
            }
            None => None,
        };
        let solver = solver_factory(
            &Params::new("solver.params", &config.solver.params),
            &ctx,
            schedule.clone(),
        )?;
        Ok(Experiment {
            objective,
            sampler,
            schedule,
            solver,
            theta_init,
        })
    }
}

fn initial_point(objective: &dyn Objective, init: &InitSpec) -> Built<Vec<f64>> {
    match init {
        InitSpec::Zeros => Ok(vec![0.0; objective.dim()]),
        InitSpec::Point { values } => {
            if values.len() != objective.dim() {
                return Err(HarnessError::invalid(
                    "init.values",
                    format!(
                        "expected {} coordinates, got {}",
                        objective.dim(),
                        values.len()
                    ),
                ));
            }
            Ok(values.clone())
        }
        InitSpec::Level { level } => objective
            .point_at_level(*level)
            .map_err(core_err("init.level")),
    }
}

fn build_power(p: &Params<'_>, _ctx: &BuildContext<'_>) -> Built<Arc<dyn StepSchedule>> {
    p.only(&["alpha", "exponent"])?;
    let alpha = p.require_f64("alpha")?;
    let exponent = p.require_f64("exponent")?;
    Ok(Arc::new(
        Power::new(alpha, exponent).map_err(core_err(p.key("alpha")))?,
    ))
}

/// `alpha` is a number or `"convex_rate"`, which picks `2R/μ_D` for the
/// configured start point.
fn build_harmonic(p: &Params<'_>, ctx: &BuildContext<'_>) -> Built<Arc<dyn StepSchedule>> {
    p.only(&["alpha"])?;
    let alpha = match p.raw("alpha") {
        Some(serde_json::Value::String(s)) if s == "convex_rate" => {
            let mu_d = ctx
                .sampler
                .constants(ctx.objective.dim())
                .map_err(core_err(p.key("alpha")))?
                .mu_d;
            convex_rate_constants(ctx.objective, ctx.theta_init, mu_d)
                .map_err(core_err(p.key("alpha")))?
                .alpha
        }
        _ => p.require_f64("alpha")?,
    };
    Ok(Arc::new(
        Harmonic::new(alpha).map_err(core_err(p.key("alpha")))?,
    ))
}

/// Uses the objective's smoothness constant. Without an explicit `h`, the
/// base giving a linear rate is derived from `μ_D`, `μ` and `L`.
fn build_directional(p: &Params<'_>, ctx: &BuildContext<'_>) -> Built<Arc<dyn StepSchedule>> {
    p.only(&["h", "floor"])?;
    let l = ctx.objective.smoothness();
    let h = match p.f64("h")? {
        Some(h) => h,
        None => {
            let mu = ctx.objective.strong_convexity();
            if mu <= 0.0 {
                return Err(HarnessError::invalid(
                    p.key("h"),
                    "required when the objective is not strongly convex",
                ));
            }
            let mu_d = ctx
                .sampler
                .constants(ctx.objective.dim())
                .map_err(core_err(p.key("h")))?
                .mu_d;
            linear_rate_probe_base(mu_d, mu, l).map_err(core_err(p.key("h")))?
        }
    };
    let schedule = match p.f64("floor")? {
        Some(floor) => Directional::with_floor(l, h, floor),
        None => Directional::new(l, h),
    }
    .map_err(core_err(p.key("h")))?;
    Ok(Arc::new(schedule))
}

fn build_stp(
    p: &Params<'_>,
    ctx: &BuildContext<'_>,
    schedule: Option<Arc<dyn StepSchedule>>,
) -> Built<Arc<dyn Solver>> {
    p.only(&[])?;
    let schedule = schedule
        .ok_or_else(|| HarnessError::invalid("schedule", "stp needs a step-size schedule"))?;
    Ok(Arc::new(Stp::new(ctx.sampler.clone(), schedule)))
}

fn build_rgf(
    p: &Params<'_>,
    ctx: &BuildContext<'_>,
    schedule: Option<Arc<dyn StepSchedule>>,
) -> Built<Arc<dyn Solver>> {
    p.only(&["mu_fd", "h_step"])?;
    if schedule.is_some() {
        return Err(HarnessError::invalid("schedule", "rgf takes no schedule"));
    }
    let mu_fd = p.require_f64("mu_fd")?;
    let h_step = p.f64("h_step")?.unwrap_or(1.0 / ctx.objective.smoothness());
    Ok(Arc::new(
        Rgf::new(mu_fd, h_step).map_err(core_err(p.key("mu_fd")))?,
    ))
}

fn build_gld(
    p: &Params<'_>,
    ctx: &BuildContext<'_>,
    schedule: Option<Arc<dyn StepSchedule>>,
) -> Built<Arc<dyn Solver>> {
    p.only(&["r_min", "r_max"])?;
    if schedule.is_some() {
        return Err(HarnessError::invalid("schedule", "gld takes no schedule"));
    }
    let r_min = p.require_f64("r_min")?;
    let r_max = p.require_f64("r_max")?;
    Ok(Arc::new(
        Gld::new(ctx.sampler.clone(), r_min, r_max).map_err(core_err(p.key("r_min")))?,
    ))
}
