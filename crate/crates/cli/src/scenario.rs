//! Turns an [`ExperimentConfig`] into core objects of a fixed dimension.

use std::sync::Arc;

use lorentz_born::currents::{
    boosted_gaussian_current, constant_current, example1_field, rescale_velocity, rotating_drift_current,
};
use lorentz_born::field::ScalarFn;
use lorentz_born::flow::default_rk4_step;
use lorentz_born::hypersurface::builtin::{graph, polar_disk, square_disk, tilted_plane, time_slice};
use lorentz_born::{
    CurrentSpec, FlowMap, Integrator, Orientation, ParamBox, ParametrizedHypersurface, RegionSpec, Spacetime,
    SpacetimePoint, Vector, VectorField,
};

use crate::config::{
    CurrentConfig, ExperimentConfig, FlowFieldConfig, IntegratorConfig, OrientationConfig, SurfaceConfig,
};
use crate::error::{CliError, CliResult};
use crate::expr::{parse_components, Expression, COORDINATES, PARAMETERS};

/// Everything a command needs, in dimension `D`.
pub struct Scenario<const D: usize> {
    pub st: Spacetime<D>,
    pub current: CurrentSpec<D>,
    pub surface: ParametrizedHypersurface<D>,
    pub region: RegionSpec,
    pub flow: FlowMap<D>,
    pub tau_grid: Vec<f64>,
}

impl<const D: usize> Scenario<D> {
    pub fn build(cfg: &ExperimentConfig) -> CliResult<Self> {
        let st = spacetime::<D>(&cfg.spacetime.name)?;
        let surface = surface::<D>(&cfg.surface, cfg.resolution)?.with_orientation(orientation(cfg.orientation));
        let current = current::<D>(&st, &cfg.current)?;
        let samples: Vec<SpacetimePoint<D>> = surface.grid_nodes()?.iter().map(|n| n.point).collect();
        current.check_invariants(&st, &samples)?;
        let flow = flow::<D>(cfg, &current, &samples)?;
        let region = match &cfg.region {
            None => RegionSpec::full(&surface),
            Some(rects) => RegionSpec::new(
                rects
                    .iter()
                    .map(|r| ParamBox::new(r.clone()))
                    .collect::<lorentz_born::Result<_>>()?,
            ),
        };
        region.validate(surface.param_box())?;
        Ok(Scenario {
            st,
            current,
            surface,
            region,
            flow,
            tau_grid: linspace(0.0, cfg.flow.tau_max, cfg.flow.samples),
        })
    }
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn spacetime<const D: usize>(name: &str) -> CliResult<Spacetime<D>> {
    match name {
        "minkowski" => Ok(Spacetime::minkowski()),
        "conformal" => Ok(Spacetime::conformal_test()),
        other => Err(CliError::Config(format!(
            "unknown spacetime {other:?} (expected minkowski or conformal)"
        ))),
    }
}

fn orientation(o: OrientationConfig) -> Orientation {
    match o {
        OrientationConfig::Anchored => Orientation::Anchored,
        OrientationConfig::Reversed => Orientation::AnchoredReversed,
        OrientationConfig::Positive => Orientation::Positive,
        OrientationConfig::Negative => Orientation::Negative,
    }
}

fn vector<const D: usize>(components: &[f64], what: &str) -> CliResult<Vector<D>> {
    if components.len() != D {
        return Err(CliError::Config(format!(
            "{what} needs {D} components, got {}",
            components.len()
        )));
    }
    Ok(Vector::<D>::from_column_slice(components))
}

fn require_2plus1<const D: usize>(what: &str) -> CliResult<()> {
    if D == 3 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} is only defined in dimension 3")))
    }
}

fn to3<const D: usize>(p: &SpacetimePoint<D>) -> SpacetimePoint<3> {
    SpacetimePoint::<3>::new(p[0], p[1], p[2])
}

fn from3<const D: usize>(p: &SpacetimePoint<3>) -> SpacetimePoint<D> {
    let mut q = SpacetimePoint::<D>::zeros();
    q.fixed_rows_mut::<3>(0).copy_from(p);
    q
}

/// A 2+1 field seen as a `D`-field; only called with `D == 3`.
fn lift_field<const D: usize>(f: VectorField<3>) -> VectorField<D> {
    let values = f.clone();
    let mut lifted = VectorField::new(move |p: &SpacetimePoint<D>| from3(&values.at(&to3(p))));
    if f.has_analytic_divergence() {
        let div = f.clone();
        lifted = lifted.with_divergence(move |p| div.analytic_divergence(&to3(p)).unwrap_or(f64::NAN));
    }
    if f.has_analytic_flow() {
        lifted = lifted.with_flow(move |tau, p| from3(&f.analytic_flow(tau, &to3(p)).unwrap_or(to3(p))));
    }
    lifted
}

fn lift_current<const D: usize>(c: CurrentSpec<3>) -> CurrentSpec<D> {
    let density = c.density;
    CurrentSpec {
        label: c.label,
        current: lift_field(c.current),
        density: Arc::new(move |p| density(&to3(p))),
        velocity: lift_field(c.velocity),
        divergence_free: c.divergence_free,
    }
}

fn lift_surface<const D: usize>(h: ParametrizedHypersurface<3>) -> CliResult<ParametrizedHypersurface<D>> {
    let faces = h.truncation_faces().to_vec();
    let embed = h.clone();
    Ok(ParametrizedHypersurface::new_fallible(
        h.label().to_string(),
        move |u| embed.embed(u).map(|p| from3(&p)),
        h.param_box().clone(),
        h.grid_shape().to_vec(),
    )?
    .with_truncation_faces(faces))
}

fn coordinate_names<const D: usize>() -> &'static [&'static str] {
    &COORDINATES[..D]
}

fn expression_field<const D: usize>(exprs: Vec<Expression>) -> VectorField<D> {
    VectorField::new(move |p: &SpacetimePoint<D>| Vector::<D>::from_fn(|i, _| exprs[i].eval(p.as_slice())))
}

fn scalar<const D: usize>(source: &str) -> CliResult<ScalarFn<D>> {
    let e = Expression::parse(source, coordinate_names::<D>())?;
    Ok(Arc::new(move |p: &SpacetimePoint<D>| e.eval(p.as_slice())))
}

pub fn current<const D: usize>(st: &Spacetime<D>, cfg: &CurrentConfig) -> CliResult<CurrentSpec<D>> {
    Ok(match cfg {
        CurrentConfig::BoostedGaussian { velocity, width } => {
            let mut v = velocity.clone();
            if v.len() > D - 1 {
                return Err(CliError::Config(format!(
                    "velocity has {} components, spacetime has {} spatial dimensions",
                    v.len(),
                    D - 1
                )));
            }
            v.resize(D - 1, 0.0);
            boosted_gaussian_current::<D>(&v, *width)?
        }
        CurrentConfig::Constant { components } => constant_current(vector::<D>(components, "constant current")?)?,
        CurrentConfig::RotatingDrift {
            omega,
            center,
            drift,
            width,
        } => {
            require_2plus1::<D>("rotating_drift")?;
            lift_current(rotating_drift_current(*omega, *center, *drift, *width)?)
        }
        CurrentConfig::Expression {
            components,
            divergence_free,
        } => {
            // Factorization ρ = √g(J,J), X = J/ρ.
            let exprs = parse_components(components, D, coordinate_names::<D>())?;
            let j = expression_field::<D>(exprs);
            let metric = st.clone();
            let jd = j.clone();
            let density: ScalarFn<D> = Arc::new(move |p| {
                let v = jd.at(p);
                metric.inner(p, &v, &v).map(f64::sqrt).unwrap_or(f64::NAN)
            });
            let (jv, rho) = (j.clone(), Arc::clone(&density));
            CurrentSpec {
                label: format!("expression({})", components.join(", ")),
                current: j,
                density,
                velocity: VectorField::new(move |p| jv.at(p) / rho(p)),
                divergence_free: *divergence_free,
            }
        }
    })
}

pub fn surface<const D: usize>(cfg: &SurfaceConfig, resolution: usize) -> CliResult<ParametrizedHypersurface<D>> {
    let cube = |half_width: f64| ParamBox::new(vec![[-half_width, half_width]; D - 1]);
    Ok(match cfg {
        SurfaceConfig::TimeSlice { t0, half_width } => time_slice::<D>(*t0, *half_width, resolution)?,
        SurfaceConfig::TiltedPlane { slope, half_width } => {
            tilted_plane::<D>(*slope, cube(*half_width)?, vec![resolution; D - 1])?.truncated_everywhere()
        }
        SurfaceConfig::Graph { height, half_width } => {
            let s = Expression::parse(height, &COORDINATES[1..D])?;
            graph::<D, _>(
                format!("graph(t = {height})"),
                move |u| s.eval(u),
                cube(*half_width)?,
                vec![resolution; D - 1],
            )?
            .truncated_everywhere()
        }
        SurfaceConfig::PolarDisk { t0, radius } => {
            require_2plus1::<D>("polar_disk")?;
            lift_surface(polar_disk(*t0, *radius, vec![resolution, 2 * resolution])?)?
        }
        SurfaceConfig::SquareDisk { t0, radius } => {
            require_2plus1::<D>("square_disk")?;
            lift_surface(square_disk(*t0, *radius, vec![resolution, resolution])?)?
        }
        SurfaceConfig::Expression {
            embed,
            param_box,
            truncated,
        } => {
            let exprs = parse_components(embed, D, &PARAMETERS[..D - 1])?;
            let label = format!("expression({})", embed.join(", "));
            let h = ParametrizedHypersurface::<D>::new(
                label,
                move |u| SpacetimePoint::<D>::from_fn(|i, _| exprs[i].eval(u)),
                ParamBox::new(param_box.clone())?,
                vec![resolution; D - 1],
            )?;
            if *truncated {
                h.truncated_everywhere()
            } else {
                h
            }
        }
    })
}

fn flow<const D: usize>(
    cfg: &ExperimentConfig,
    current: &CurrentSpec<D>,
    samples: &[SpacetimePoint<D>],
) -> CliResult<FlowMap<D>> {
    let mut field = match &cfg.flow.field {
        FlowFieldConfig::Velocity => current.velocity.clone(),
        FlowFieldConfig::Example1 { omega } => {
            require_2plus1::<D>("the rotating observer flow")?;
            lift_field(example1_field(*omega)?)
        }
        FlowFieldConfig::Constant { components } => VectorField::constant(vector::<D>(components, "flow field")?),
        FlowFieldConfig::Expression { components } => {
            expression_field::<D>(parse_components(components, D, coordinate_names::<D>())?)
        }
    };
    if let Some(source) = &cfg.flow.rescale {
        let spec = CurrentSpec {
            velocity: field,
            ..current.clone()
        };
        field = rescale_velocity(&spec, scalar::<D>(source)?, samples)?.velocity;
    }
    let integrator = match cfg.flow.integrator {
        IntegratorConfig::Analytic => Integrator::AnalyticIfAvailable,
        IntegratorConfig::Rk4 => Integrator::Rk4 {
            step: cfg.flow.step.unwrap_or_else(|| default_rk4_step(cfg.flow.tau_max)),
        },
    };
    Ok(FlowMap::new(field, integrator))
}
