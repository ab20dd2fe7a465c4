//! Flows of vector fields acting on points and hypersurfaces, and detection
//! of the flow time at which a pushed-forward tangent direction becomes
//! lightlike.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::field::{fd_step, SpacetimePoint, VectorField};
use crate::geometry::{bilinear, CausalCharacter, Spacetime, CAUSAL_TOLERANCE};
use crate::hypersurface::{causal_class_of_frame, ParametrizedHypersurface, SampledRegion, SurfaceNode};

/// Tolerance of the one-step/two-half-steps consistency check, relative to
/// `1 + ‖p‖`.
const STEP_CHECK_TOLERANCE: f64 = 1e-8;

/// Default bisection tolerance for crossing times.
pub const ROOT_TOLERANCE: f64 = 1e-6;

/// Default number of uniform samples used to bracket a crossing.
pub const BRACKET_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integrator {
    /// Use the field's closed-form flow; fall back to RK4 with step
    /// `1e−3·(1+|τ|)` when there is none.
    AnalyticIfAvailable,
    /// Classical fourth-order Runge–Kutta with the given maximal step.
    Rk4 { step: f64 },
}

/// Default RK4 step for integrating over a flow time span `tau`.
pub fn default_rk4_step(tau: f64) -> f64 {
    1e-3 * (1.0 + tau.abs())
}

#[derive(Debug, Clone)]
pub struct FlowMap<const D: usize> {
    field: VectorField<D>,
    integrator: Integrator,
}

impl<const D: usize> FlowMap<D> {
    pub fn new(field: VectorField<D>, integrator: Integrator) -> Self {
        FlowMap { field, integrator }
    }

    pub fn analytic(field: VectorField<D>) -> Self {
        FlowMap::new(field, Integrator::AnalyticIfAvailable)
    }

    pub fn rk4(field: VectorField<D>, step: f64) -> Self {
        FlowMap::new(field, Integrator::Rk4 { step })
    }

    pub fn field(&self) -> &VectorField<D> {
        &self.field
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    /// Whether points are moved by the closed-form flow.
    pub fn is_analytic(&self) -> bool {
        matches!(self.integrator, Integrator::AnalyticIfAvailable) && self.field.has_analytic_flow()
    }

    /// `Φ_τ(p)`.
    pub fn flow_point(&self, p: &SpacetimePoint<D>, tau: f64) -> Result<SpacetimePoint<D>> {
        if tau == 0.0 {
            return Ok(*p);
        }
        let q = match self.integrator {
            Integrator::AnalyticIfAvailable => match self.field.analytic_flow(tau, p) {
                Some(q) => q,
                None => self.integrate_rk4(p, tau, default_rk4_step(tau))?,
            },
            Integrator::Rk4 { step } => self.integrate_rk4(p, tau, step)?,
        };
        if q.iter().all(|c| c.is_finite()) {
            Ok(q)
        } else {
            Err(GeometryError::LeftChartDomain { tau })
        }
    }

    fn rk4_step(&self, p: &SpacetimePoint<D>, h: f64) -> SpacetimePoint<D> {
        let k1 = self.field.at(p);
        let k2 = self.field.at(&(p + k1 * (0.5 * h)));
        let k3 = self.field.at(&(p + k2 * (0.5 * h)));
        let k4 = self.field.at(&(p + k3 * h));
        p + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
    }

    fn integrate_rk4(&self, p: &SpacetimePoint<D>, tau: f64, max_step: f64) -> Result<SpacetimePoint<D>> {
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(GeometryError::InvalidInput(format!("RK4 step must be positive, got {max_step}")));
        }
        let steps = (tau.abs() / max_step).ceil().max(1.0) as usize;
        let h = tau / steps as f64;

        let full = self.rk4_step(p, h);
        let half = self.rk4_step(&self.rk4_step(p, 0.5 * h), 0.5 * h);
        let discrepancy = (full - half).norm();
        if !discrepancy.is_finite() {
            return Err(GeometryError::LeftChartDomain { tau: h });
        }
        if discrepancy > STEP_CHECK_TOLERANCE * (1.0 + p.norm()) {
            return Err(GeometryError::StepSizeTooLarge { step: h.abs(), discrepancy });
        }

        let mut q = full;
        for k in 1..steps {
            q = self.rk4_step(&q, h);
            if !q.iter().all(|c| c.is_finite()) {
                return Err(GeometryError::LeftChartDomain { tau: h * (k + 1) as f64 });
            }
        }
        Ok(q)
    }

    /// Moves a point set known at flow time `from` to flow time `to`.
    ///
    /// Closed-form flows are re-applied to the `base` set (time 0); numeric
    /// flows continue from `current`, so marching along a grid of times
    /// costs one integration over the whole span.
    pub fn transport<C: PointCloud<D>>(&self, base: &C, current: &C, from: f64, to: f64) -> Result<C> {
        if self.is_analytic() {
            base.map_points(|p| self.flow_point(p, to))
        } else {
            current.map_points(|p| self.flow_point(p, to - from))
        }
    }

    /// The surface `Φ_τ(Σ)` over the same parameter box and grid.
    pub fn evolve_surface(&self, base: &ParametrizedHypersurface<D>, tau: f64) -> EvolvedSurface<D> {
        EvolvedSurface {
            base: base.clone(),
            flow: self.clone(),
            tau,
        }
    }

    /// Pushes a sampled region forward to flow time `tau`.
    pub fn evolve_region(&self, region: &SampledRegion<D>, tau: f64) -> Result<SampledRegion<D>> {
        region.map_points(|p| self.flow_point(p, tau))
    }
}

/// A set of points that can be pushed through a map as a unit.
pub trait PointCloud<const D: usize>: Sized {
    fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Sync;
}

impl<const D: usize> PointCloud<D> for SampledRegion<D> {
    fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Sync,
    {
        SampledRegion::map_points(self, map)
    }
}

impl<const D: usize> PointCloud<D> for Vec<SurfaceNode<D>> {
    fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Sync,
    {
        self.par_iter().map(|n| n.map_points(&map)).collect()
    }
}

impl<const D: usize> PointCloud<D> for Vec<SpacetimePoint<D>> {
    fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Sync,
    {
        self.iter().map(map).collect()
    }
}

/// `Σ_τ = Φ_τ(Σ)`, evaluated lazily.
#[derive(Debug, Clone)]
pub struct EvolvedSurface<const D: usize> {
    pub base: ParametrizedHypersurface<D>,
    pub flow: FlowMap<D>,
    pub tau: f64,
}

impl<const D: usize> EvolvedSurface<D> {
    /// The evolved surface as a parametrized hypersurface with embedding
    /// `Φ_τ ∘ φ`, sharing parameter box, grid and orientation with the base.
    pub fn surface(&self) -> ParametrizedHypersurface<D> {
        let flow = self.flow.clone();
        let tau = self.tau;
        self.base.map_embedding(format!("{}@tau={tau}", self.base.label()), move |p| {
            flow.flow_point(p, tau)
        })
    }
}

/// Parameters of the crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSearch {
    pub tau_max: f64,
    pub brackets: usize,
    pub tolerance: f64,
}

impl CrossingSearch {
    pub fn new(tau_max: f64) -> Self {
        CrossingSearch {
            tau_max,
            brackets: BRACKET_SAMPLES,
            tolerance: ROOT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// First flow time in `(0, tau_max]` at which the pushforward of the tangent
/// direction `Σ direction_i ∂_iφ` at `u` turns lightlike, or `None` when the
/// norm keeps its sign.
///
/// The pushforward is the central difference of the flowed endpoints
/// `Φ_τ(φ(u ± h·direction))`; `g(V,V)` is bracketed on a uniform grid and
/// refined by bisection.
pub fn lightlike_crossing<const D: usize>(
    st: &Spacetime<D>,
    flow: &FlowMap<D>,
    h: &ParametrizedHypersurface<D>,
    u: &[f64],
    direction: &[f64],
    search: CrossingSearch,
) -> Result<Option<f64>> {
    if direction.len() + 1 != D || direction.iter().all(|&c| c == 0.0) {
        return Err(GeometryError::InvalidInput(format!(
            "direction must be a nonzero vector with {} components",
            D - 1
        )));
    }
    if !(search.tau_max > 0.0 && search.brackets >= 1 && search.tolerance > 0.0) {
        return Err(GeometryError::InvalidInput("invalid crossing search parameters".into()));
    }
    let scale = direction.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let step = fd_step(u.iter().fold(0.0_f64, |m, c| m.max(c.abs()))) / scale;
    let shifted = |sign: f64| -> Vec<f64> {
        u.iter().zip(direction).map(|(x, d)| x + sign * step * d).collect()
    };
    let base: Vec<SpacetimePoint<D>> = vec![h.embed(u)?, h.embed(&shifted(1.0))?, h.embed(&shifted(-1.0))?];

    let norm = |pts: &[SpacetimePoint<D>]| -> Result<f64> {
        let v = (pts[1] - pts[2]) / (2.0 * step);
        let g = st.metric_at(&pts[0])?;
        Ok(bilinear(&g, &v, &v))
    };

    let q0 = norm(&base)?;
    if q0.abs() <= CAUSAL_TOLERANCE * (1.0 + q0.abs()) {
        return Err(GeometryError::InvalidInput(format!(
            "direction is already lightlike at tau = 0 (g(V,V) = {q0:e})"
        )));
    }
    let initial_sign = q0.signum();

    let dt = search.tau_max / search.brackets as f64;
    let mut lo_tau = 0.0;
    let mut lo_pts = base.clone();
    for k in 1..=search.brackets {
        let tau = k as f64 * dt;
        let pts = flow.transport(&base, &lo_pts, lo_tau, tau)?;
        let q = norm(&pts)?;
        if q.signum() != initial_sign || q == 0.0 {
            check_single_sign_change(flow, &norm, &base, &lo_pts, lo_tau, tau, initial_sign)?;
            return bisect(flow, &norm, &base, lo_pts, lo_tau, tau, initial_sign, search.tolerance).map(Some);
        }
        lo_tau = tau;
        lo_pts = pts;
    }
    Ok(None)
}

fn check_single_sign_change<const D: usize>(
    flow: &FlowMap<D>,
    norm: &impl Fn(&[SpacetimePoint<D>]) -> Result<f64>,
    base: &Vec<SpacetimePoint<D>>,
    lo_pts: &Vec<SpacetimePoint<D>>,
    lo: f64,
    hi: f64,
    initial_sign: f64,
) -> Result<()> {
    const PROBES: usize = 8;
    let mut sign = initial_sign;
    let mut changes = 0;
    let mut prev_tau = lo;
    let mut prev = lo_pts.clone();
    for i in 1..=PROBES {
        let tau = lo + (hi - lo) * i as f64 / PROBES as f64;
        prev = flow.transport(base, &prev, prev_tau, tau)?;
        prev_tau = tau;
        let s = norm(&prev)?.signum();
        if s != sign {
            changes += 1;
            sign = s;
        }
    }
    if changes > 1 {
        return Err(GeometryError::RootNotBracketable { tau: lo });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bisect<const D: usize>(
    flow: &FlowMap<D>,
    norm: &impl Fn(&[SpacetimePoint<D>]) -> Result<f64>,
    base: &Vec<SpacetimePoint<D>>,
    mut lo_pts: Vec<SpacetimePoint<D>>,
    mut lo: f64,
    mut hi: f64,
    initial_sign: f64,
    tolerance: f64,
) -> Result<f64> {
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let pts = flow.transport(base, &lo_pts, lo, mid)?;
        let q = norm(&pts)?;
        if q.signum() == initial_sign && q != 0.0 {
            lo = mid;
            lo_pts = pts;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of a causal sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<const D: usize> {
    pub node: usize,
    pub param: Vec<f64>,
    pub tau: f64,
    pub point: Vec<f64>,
    pub character: CausalCharacter,
}

/// Causal character of every grid node of `Φ_τ(Σ)` for each `τ` in
/// `tau_grid`. Nodes whose tangent vectors degenerate are reported as
/// [`CausalCharacter::Degenerate`].
pub fn causal_sweep<const D: usize>(
    st: &Spacetime<D>,
    flow: &FlowMap<D>,
    h: &ParametrizedHypersurface<D>,
    tau_grid: &[f64],
) -> Result<Vec<SweepRow<D>>> {
    let base = h.grid_nodes()?;
    let mut current = base.clone();
    let mut current_tau = 0.0;
    let mut rows = Vec::with_capacity(base.len() * tau_grid.len());
    for &tau in tau_grid {
        current = flow.transport(&base, &current, current_tau, tau)?;
        current_tau = tau;
        for (index, node) in current.iter().enumerate() {
            let character = match node.frame() {
                Ok(frame) => causal_class_of_frame(st, &frame)?,
                Err(GeometryError::DegenerateImmersion { .. }) => CausalCharacter::Degenerate,
                Err(e) => return Err(e),
            };
            rows.push(SweepRow {
                node: index,
                param: node.param.clone(),
                tau,
                point: node.point.as_slice().to_vec(),
                character,
            });
        }
    }
    Ok(rows)
}

/// First `τ` of the sweep at which each node stops being spacelike, indexed
/// by node.
pub fn first_non_spacelike<const D: usize>(rows: &[SweepRow<D>]) -> Vec<Option<f64>> {
    let nodes = rows.iter().map(|r| r.node + 1).max().unwrap_or(0);
    let mut first = vec![None; nodes];
    for row in rows {
        if row.character != CausalCharacter::Spacelike && first[row.node].is_none() {
            first[row.node] = Some(row.tau);
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::example1_field;
    use crate::hypersurface::builtin::polar_disk;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn example1_flow_of_point() {
        let flow = FlowMap::analytic(example1_field(1.0).unwrap());
        let q = flow.flow_point(&Vector3::new(0.0, 1.0, 0.0), FRAC_PI_2).unwrap();
        assert_relative_eq!(q, Vector3::new(2f64.sqrt() * FRAC_PI_2, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(q[0], 2.221441469079183, epsilon = 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = Vector3::new(0.3, -1.0, 2.0);
        for flow in [
            FlowMap::analytic(example1_field(0.7).unwrap()),
            FlowMap::rk4(example1_field(0.7).unwrap(), 1e-3),
        ] {
            assert_eq!(flow.flow_point(&p, 0.0).unwrap(), p);
        }
    }

    #[test]
    fn constant_field_translates() {
        let flow = FlowMap::rk4(VectorField::constant(Vector3::new(1.0, 0.0, 0.0)), 0.01);
        let q = flow.flow_point(&Vector3::new(0.0, 0.4, -0.2), 3.0).unwrap();
        assert_relative_eq!(q, Vector3::new(3.0, 0.4, -0.2), epsilon = 1e-12);
    }

    #[test]
    fn rk4_matches_analytic_flow() {
        let field = example1_field(1.3).unwrap();
        let exact = FlowMap::analytic(field.clone());
        let numeric = FlowMap::rk4(field, 1e-3);
        let p = Vector3::new(0.1, 0.8, -0.4);
        let a = exact.flow_point(&p, 2.5).unwrap();
        let b = numeric.flow_point(&p, 2.5).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn oversized_step_rejected() {
        let numeric = FlowMap::rk4(example1_field(2.0).unwrap(), 2.0);
        let err = numeric.flow_point(&Vector3::new(0.0, 3.0, 0.0), 10.0);
        assert!(matches!(err, Err(GeometryError::StepSizeTooLarge { .. })));
    }

    #[test]
    fn blow_up_leaves_chart() {
        // dx/dτ = x² reaches infinity at τ = 1/x0.
        let field = VectorField::new(|p: &Vector3<f64>| Vector3::new(1.0, p[1] * p[1], 0.0));
        let flow = FlowMap::rk4(field, 1e-3);
        let err = flow.flow_point(&Vector3::new(0.0, 1.0, 0.0), 5.0);
        assert!(matches!(err, Err(GeometryError::LeftChartDomain { .. })), "{err:?}");
    }

    #[test]
    fn evolved_disk_time_coordinate() {
        let omega = 0.8;
        let flow = FlowMap::analytic(example1_field(omega).unwrap());
        let disk = polar_disk(0.0, 1.0, vec![4, 4]).unwrap();
        let tau = 0.6;
        let evolved = flow.evolve_surface(&disk, tau).surface();
        for (u, _) in disk.param_box().midpoint_nodes(&[4, 4]) {
            let p = evolved.embed(&u).unwrap();
            let expected = (1.0 + omega * omega * u[0] * u[0]).sqrt() * tau;
            assert_relative_eq!(p[0], expected, epsilon = 1e-12);
        }
        let unchanged = flow.evolve_surface(&disk, 0.0).surface();
        assert_eq!(unchanged.embed(&[0.5, 1.0]).unwrap(), disk.embed(&[0.5, 1.0]).unwrap());
    }

    #[test]
    fn crossing_time_examples() {
        let st = Spacetime::<3>::minkowski();
        for (omega, r0, expected) in [(1.0, 1.0, 2f64.sqrt()), (0.5, 2.0, 2.0 * 2f64.sqrt())] {
            let flow = FlowMap::analytic(example1_field(omega).unwrap());
            let disk = polar_disk(0.0, 2.0 * r0, vec![4, 4]).unwrap();
            let tau = lightlike_crossing(&st, &flow, &disk, &[r0, 0.3], &[1.0, 0.0], CrossingSearch::new(10.0))
                .unwrap()
                .unwrap();
            assert!((tau - expected).abs() < 1e-6, "omega {omega} r0 {r0}: {tau} vs {expected}");
        }
    }

    #[test]
    fn translation_never_crosses() {
        let st = Spacetime::<3>::minkowski();
        let flow = FlowMap::analytic(VectorField::constant(Vector3::new(1.0, 0.0, 0.0)));
        let disk = polar_disk(0.0, 1.0, vec![4, 4]).unwrap();
        for direction in [[1.0, 0.0], [0.0, 1.0], [0.5, -0.3]] {
            let crossing =
                lightlike_crossing(&st, &flow, &disk, &[0.5, 1.0], &direction, CrossingSearch::new(20.0)).unwrap();
            assert_eq!(crossing, None);
        }
    }

    #[test]
    fn crossing_rejects_zero_direction() {
        let st = Spacetime::<3>::minkowski();
        let flow = FlowMap::analytic(example1_field(1.0).unwrap());
        let disk = polar_disk(0.0, 1.0, vec![4, 4]).unwrap();
        assert!(lightlike_crossing(&st, &flow, &disk, &[0.5, 0.0], &[0.0, 0.0], CrossingSearch::new(1.0)).is_err());
    }

    #[test]
    fn sweep_starts_spacelike_and_outer_ring_crosses_first() {
        let st = Spacetime::<3>::minkowski();
        let flow = FlowMap::analytic(example1_field(1.0).unwrap());
        let disk = polar_disk(0.0, 2.0, vec![8, 6]).unwrap();
        let taus: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
        let rows = causal_sweep(&st, &flow, &disk, &taus).unwrap();
        assert!(rows
            .iter()
            .filter(|r| r.tau == 0.0)
            .all(|r| r.character == CausalCharacter::Spacelike));
        let first = first_non_spacelike(&rows);
        let radius_of = |node: usize| rows[node].param[0];
        let outer = (0..first.len()).max_by(|&a, &b| radius_of(a).total_cmp(&radius_of(b))).unwrap();
        let inner = (0..first.len()).min_by(|&a, &b| radius_of(a).total_cmp(&radius_of(b))).unwrap();
        let outer_tau = first[outer].expect("outer node crosses");
        let r = radius_of(outer);
        let analytic = (1.0 + r * r).sqrt() / r;
        assert!(outer_tau >= analytic && outer_tau - analytic <= 0.05 + 1e-12);
        assert_eq!(first[inner], None);
    }
}
