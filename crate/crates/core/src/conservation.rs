//! Numerical checks of probability conservation along flows.
//!
//! Two mechanisms are checked:
//!
//! * transport: `P(τ) = ∫_{Φ_τ(Σ)} J·μ` with `dP/dτ = ∫ div(J) X·μ` when the
//!   lateral boundary of the family carries no flux (always the case when
//!   `J = ρX`), so divergence-free currents give constant `P`;
//! * divergence theorem on a flow cylinder: the two end caps plus the
//!   lateral tube bound a compact region, and the outward fluxes sum to
//!   `∫ div(J) μ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::born::{born_integral_sampled, normal_flux_integral_sampled, ContractedCurrentForm};
use crate::currents::CurrentSpec;
use crate::error::{GeometryError, Result};
use crate::field::VectorField;
use crate::flow::FlowMap;
use crate::geometry::Spacetime;
use crate::hypersurface::{ParametrizedHypersurface, SampledRegion};
use crate::linalg::determinant;
use crate::quadrature::{pairwise_sum, IntegralResult, ParamBox, Side};

/// Probabilities along a family of evolved surfaces, with the transport
/// identity residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub tau_grid: Vec<f64>,
    pub totals: Vec<f64>,
    /// Quadrature plus truncation budget of each total.
    pub error_estimates: Vec<f64>,
    /// Finite-difference `dP/dτ`.
    pub derivatives: Vec<f64>,
    /// `∫ div(J) X·μ` on each surface.
    pub source_integrals: Vec<f64>,
    /// `|dP/dτ − ∫ div(J) X·μ|`.
    pub derivative_residuals: Vec<f64>,
    /// `max_i |P(τ_i) − P(τ_0)|`.
    pub max_drift: f64,
}

impl ConservationReport {
    pub fn max_residual(&self) -> f64 {
        self.derivative_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_error_estimate(&self) -> f64 {
        self.error_estimates.iter().copied().fold(0.0, f64::max)
    }

    /// Rows `(tau, total, error_estimate, residual)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.tau_grid.len()).map(move |i| {
            [
                self.tau_grid[i],
                self.totals[i],
                self.error_estimates[i],
                self.derivative_residuals[i],
            ]
        })
    }
}

fn validate_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(GeometryError::InvalidInput("empty tau grid".into()));
    }
    if tau_grid.iter().any(|t| !t.is_finite()) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeometryError::InvalidInput(
            "tau grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Derivative of samples on a possibly non-uniform grid: three-point
/// central differences inside, three-point one-sided differences at the
/// ends (all second order).
pub fn grid_derivative(tau: &[f64], values: &[f64]) -> Vec<f64> {
    let n = tau.len();
    match n {
        0 => return vec![],
        1 => return vec![0.0],
        2 => {
            let slope = (values[1] - values[0]) / (tau[1] - tau[0]);
            return vec![slope, slope];
        }
        _ => {}
    }
    let mut out = vec![0.0; n];
    {
        let (h1, h2) = (tau[1] - tau[0], tau[2] - tau[1]);
        out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * values[0] + (h1 + h2) / (h1 * h2) * values[1]
            - h1 / (h2 * (h1 + h2)) * values[2];
    }
    for i in 1..n - 1 {
        let (h1, h2) = (tau[i] - tau[i - 1], tau[i + 1] - tau[i]);
        out[i] = -h2 / (h1 * (h1 + h2)) * values[i - 1]
            + (h2 - h1) / (h1 * h2) * values[i]
            + h1 / (h2 * (h1 + h2)) * values[i + 1];
    }
    {
        let (h1, h2) = (tau[n - 2] - tau[n - 3], tau[n - 1] - tau[n - 2]);
        out[n - 1] = (2.0 * h2 + h1) / (h2 * (h1 + h2)) * values[n - 1]
            - (h1 + h2) / (h1 * h2) * values[n - 2]
            + h2 / (h1 * (h1 + h2)) * values[n - 3];
    }
    out
}

/// `P(τ)` of `J` over `Φ_τ(Σ)` for each τ, together with the source term
/// `∫ div(J) X·μ` (`X` the flow's field).
///
/// The orientation is fixed once on `Σ` and carried along by the flow.
/// Analytic flows are evaluated independently per τ; numeric flows march
/// through the grid.
pub fn probability_sweep<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    flow: &FlowMap<D>,
    h: &ParametrizedHypersurface<D>,
    tau_grid: &[f64],
) -> Result<ConservationReport> {
    validate_tau_grid(tau_grid)?;
    let base = h.sample()?;
    let form = ContractedCurrentForm::new(st, current);
    let velocity_form = ContractedCurrentForm::new(st, flow.field());
    let sign = h.orientation().sign(form.eval_frame(&base.anchor().frame()?)?);

    let evaluate = |region: &SampledRegion<D>| -> Result<(IntegralResult, f64)> {
        let total = born_integral_sampled(&form, region, sign)?;
        let source = region.integrate(|_, frame| {
            Ok(sign * st.divergence(current, &frame.point)? * velocity_form.eval_frame(frame)?)
        })?;
        Ok((total, source.value))
    };

    let samples: Vec<(IntegralResult, f64)> = if flow.is_analytic() {
        tau_grid
            .par_iter()
            .map(|&tau| evaluate(&flow.evolve_region(&base, tau)?))
            .collect::<Result<_>>()?
    } else {
        let mut out = Vec::with_capacity(tau_grid.len());
        let mut region = flow.evolve_region(&base, tau_grid[0])?;
        out.push(evaluate(&region)?);
        for w in tau_grid.windows(2) {
            region = flow.transport(&base, &region, w[0], w[1])?;
            out.push(evaluate(&region)?);
        }
        out
    };

    let totals: Vec<f64> = samples.iter().map(|(r, _)| r.value).collect();
    let error_estimates = samples.iter().map(|(r, _)| r.error_budget()).collect();
    let source_integrals: Vec<f64> = samples.iter().map(|(_, s)| *s).collect();
    let derivatives = grid_derivative(tau_grid, &totals);
    let derivative_residuals = derivatives
        .iter()
        .zip(&source_integrals)
        .map(|(d, s)| (d - s).abs())
        .collect();
    let max_drift = totals.iter().map(|p| (p - totals[0]).abs()).fold(0.0, f64::max);
    Ok(ConservationReport {
        tau_grid: tau_grid.to_vec(),
        totals,
        error_estimates,
        derivatives,
        source_integrals,
        derivative_residuals,
        max_drift,
    })
}

/// `P(τ)` along the surfaces generated by the current's own velocity field.
/// Requires a divergence-free current.
pub fn conservation_sweep<const D: usize>(
    st: &Spacetime<D>,
    c: &CurrentSpec<D>,
    h: &ParametrizedHypersurface<D>,
    tau_grid: &[f64],
) -> Result<ConservationReport> {
    if !c.divergence_free {
        return Err(GeometryError::InvalidInput(format!(
            "{} is not divergence-free; use reynolds_check",
            c.label
        )));
    }
    probability_sweep(st, &c.current, &FlowMap::analytic(c.velocity.clone()), h, tau_grid)
}

/// Transport identity `d/dτ ∫ ρX·μ = ∫ div(ρX) X·μ` along the flow of `X`;
/// no conservation assumed.
pub fn reynolds_check<const D: usize>(
    st: &Spacetime<D>,
    c: &CurrentSpec<D>,
    h: &ParametrizedHypersurface<D>,
    tau_grid: &[f64],
) -> Result<ConservationReport> {
    probability_sweep(st, &c.current, &FlowMap::analytic(c.velocity.clone()), h, tau_grid)
}

/// Region swept by a surface under a flow between two flow times: end caps
/// `Φ_{τ0}(Σ)`, `Φ_{τ1}(Σ)` and the lateral tube `Φ_{[τ0,τ1]}(∂Σ)`.
#[derive(Debug, Clone)]
pub struct FlowCylinder<const D: usize> {
    pub base: ParametrizedHypersurface<D>,
    pub flow: FlowMap<D>,
    pub tau0: f64,
    pub tau1: f64,
    /// Cells along τ on the tube (coarse level).
    pub tau_cells: usize,
}

impl<const D: usize> FlowCylinder<D> {
    pub fn new(base: ParametrizedHypersurface<D>, flow: FlowMap<D>, tau0: f64, tau1: f64) -> Self {
        FlowCylinder {
            base,
            flow,
            tau0,
            tau1,
            tau_cells: 8,
        }
    }

    pub fn with_tau_cells(mut self, cells: usize) -> Self {
        self.tau_cells = cells.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTheoremReport {
    /// `∫ g(J,n) ν` over the caps.
    pub cap0_normal: IntegralResult,
    pub cap1_normal: IntegralResult,
    /// `|cap1 − cap0|` of the normal-flux integrals.
    pub cap_difference: f64,
    /// `∫ J·μ` over the caps, orientation carried from the base.
    pub cap0_contracted: IntegralResult,
    pub cap1_contracted: IntegralResult,
    /// Outward flux of `J` through the lateral tube.
    pub tube_flux: IntegralResult,
    /// `|cap1 − cap0 + tube|` of the contracted integrals.
    pub boundary_residual: f64,
}

/// Boundary fluxes of `J` on a flow cylinder. Both caps must be spacelike.
pub fn divergence_theorem_check<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    cyl: &FlowCylinder<D>,
) -> Result<DivergenceTheoremReport> {
    if !(cyl.tau0.is_finite() && cyl.tau1.is_finite() && cyl.tau0 <= cyl.tau1) {
        return Err(GeometryError::InvalidInput(format!(
            "flow cylinder needs tau0 <= tau1, got [{}, {}]",
            cyl.tau0, cyl.tau1
        )));
    }
    let base = cyl.base.sample()?;
    let form = ContractedCurrentForm::new(st, current);
    let sign = cyl.base.orientation().sign(form.eval_frame(&base.anchor().frame()?)?);

    let cap0 = cyl.flow.evolve_region(&base, cyl.tau0)?;
    let cap1 = if cyl.tau1 == cyl.tau0 {
        cap0.clone()
    } else {
        cyl.flow.evolve_region(&base, cyl.tau1)?
    };
    let cap0_normal = normal_flux_integral_sampled(st, current, &cap0)?;
    let cap1_normal = normal_flux_integral_sampled(st, current, &cap1)?;
    let cap0_contracted = born_integral_sampled(&form, &cap0, sign)?;
    let cap1_contracted = born_integral_sampled(&form, &cap1, sign)?;
    let tube_flux = if cyl.tau1 == cyl.tau0 {
        IntegralResult::default()
    } else {
        tube_flux(&form, cyl)?
    };
    Ok(DivergenceTheoremReport {
        cap0_normal,
        cap1_normal,
        cap_difference: (cap1_normal.value - cap0_normal.value).abs(),
        cap0_contracted,
        cap1_contracted,
        tube_flux,
        boundary_residual: (cap1_contracted.value - cap0_contracted.value + tube_flux.value).abs(),
    })
}

/// Outward flux through the lateral tube, face by face.
///
/// A tube point is `Φ_τ(φ(u))` with `u` on a face of the parameter box; its
/// tangent space is spanned by `X` (exactly, as the flow derivative) and the
/// pushed-forward face tangents. The outward direction is the pushforward
/// of `±∂_{u_i}` across the face.
fn tube_flux<const D: usize>(form: &ContractedCurrentForm<D>, cyl: &FlowCylinder<D>) -> Result<IntegralResult> {
    let k = D - 1;
    let field = cyl.flow.field();
    let mut total = IntegralResult::default();
    for axis in 0..k {
        for side in [Side::Lower, Side::Upper] {
            let outward_sign = if side == Side::Upper { 1.0 } else { -1.0 };
            let fixed = match side {
                Side::Lower => cyl.base.param_box().intervals()[axis][0],
                Side::Upper => cyl.base.param_box().intervals()[axis][1],
            };
            let mut intervals = vec![[cyl.tau0, cyl.tau1]];
            let mut shape = vec![cyl.tau_cells];
            for j in (0..k).filter(|&j| j != axis) {
                intervals.push(cyl.base.param_box().intervals()[j]);
                shape.push(cyl.base.grid_shape()[j]);
            }
            let face_box = ParamBox::new(intervals)?;

            let level = |shape: &[usize]| -> Result<(f64, usize)> {
                let nodes = face_box.midpoint_nodes(shape);
                let terms = nodes
                    .par_iter()
                    .map(|(v, weight)| {
                        let tau = v[0];
                        let mut u: Vec<f64> = v[1..].to_vec();
                        u.insert(axis, fixed);
                        let node = cyl.base.node(u, *weight)?.map_points(|p| cyl.flow.flow_point(p, tau))?;
                        let frame = node.frame()?;
                        let x = field.at(&frame.point);
                        let outward = frame.basis[axis] * outward_sign;
                        let mut tangents = vec![x];
                        tangents.extend((0..k).filter(|&j| j != axis).map(|j| frame.basis[j]));
                        let orientation = nalgebra::SMatrix::<f64, D, D>::from_fn(|row, col| {
                            if col == 0 {
                                outward[row]
                            } else {
                                tangents[col - 1][row]
                            }
                        });
                        let s = determinant(&orientation).signum();
                        Ok(s * form.eval(&frame.point, &tangents)? * weight)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((pairwise_sum(&terms), nodes.len()))
            };
            let (coarse, _) = level(&shape)?;
            let fine_shape: Vec<usize> = shape.iter().map(|n| 2 * n).collect();
            let (fine, count) = level(&fine_shape)?;
            total = total.combine(IntegralResult::from_levels(coarse, fine, count));
        }
    }
    Ok(total)
}
