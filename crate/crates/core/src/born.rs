//! Hypersurface probabilities `P_Σ(A) = ∫_A ι*(J·μ)`.
//!
//! `J·μ` is the current inserted into the first slot of the metric volume
//! form. Evaluated on a coordinate frame it is `√|det g|·det[J | ∂₁φ | … ]`,
//! which needs neither a normal vector nor an induced metric and is
//! therefore defined on surfaces of any causal character.
//!
//! On spacelike surfaces the same integral equals `∫ g(J,n) ν` with `n` the
//! future unit normal and `ν` the volume form of `−ι*g`;
//! [`verify_spacelike_identity`] computes both sides on shared nodes.

use nalgebra::{DMatrix, DVector, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::field::{SpacetimePoint, Vector, VectorField};
use crate::geometry::{bilinear, Spacetime};
use crate::hypersurface::{
    induced_area_element, Orientation, ParametrizedHypersurface, SampledRegion, SurfaceNode, TangentFrame,
};
use crate::linalg::determinant;
use crate::quadrature::{IntegralResult, ParamBox};

/// Relative scale below which the contracted form counts as vanishing
/// (the surface is tangent to `J`).
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

/// The `(D−1)`-form `J·μ`.
#[derive(Debug, Clone)]
pub struct ContractedCurrentForm<const D: usize> {
    st: Spacetime<D>,
    current: VectorField<D>,
}

impl<const D: usize> ContractedCurrentForm<D> {
    pub fn new(st: &Spacetime<D>, current: &VectorField<D>) -> Self {
        ContractedCurrentForm {
            st: st.clone(),
            current: current.clone(),
        }
    }

    pub fn spacetime(&self) -> &Spacetime<D> {
        &self.st
    }

    pub fn current(&self) -> &VectorField<D> {
        &self.current
    }

    /// `(J·μ)_p(V₁, …, V_{D−1})`.
    pub fn eval(&self, p: &SpacetimePoint<D>, vectors: &[Vector<D>]) -> Result<f64> {
        if vectors.len() + 1 != D {
            return Err(GeometryError::InvalidInput(format!(
                "form takes {} vectors, got {}",
                D - 1,
                vectors.len()
            )));
        }
        let density = self.st.volume_density(p)?;
        let j = self.current.at(p);
        let columns = SMatrix::<f64, D, D>::from_fn(|row, col| if col == 0 { j[row] } else { vectors[col - 1][row] });
        Ok(density * determinant(&columns))
    }

    pub fn eval_frame(&self, frame: &TangentFrame<D>) -> Result<f64> {
        self.eval(&frame.point, &frame.basis)
    }

    /// Scale against which a vanishing value is judged:
    /// `√|det g|·‖J‖·∏‖V_i‖` with Euclidean component norms.
    pub fn tangency_scale(&self, frame: &TangentFrame<D>) -> Result<f64> {
        let density = self.st.volume_density(&frame.point)?;
        let frame_scale: f64 = frame.basis.iter().map(|v| v.norm()).product();
        Ok(density * self.current.at(&frame.point).norm() * frame_scale)
    }
}

/// Finite union of pairwise non-overlapping sub-rectangles of a parameter box.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionSpec {
    pub rects: Vec<ParamBox>,
}

impl RegionSpec {
    pub fn new(rects: Vec<ParamBox>) -> Self {
        RegionSpec { rects }
    }

    /// The whole parameter box of `h`.
    pub fn full<const D: usize>(h: &ParametrizedHypersurface<D>) -> Self {
        RegionSpec {
            rects: vec![h.param_box().clone()],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn validate(&self, param_box: &ParamBox) -> Result<()> {
        for (i, rect) in self.rects.iter().enumerate() {
            if !param_box.contains(rect) {
                return Err(GeometryError::InvalidInput(format!(
                    "region rectangle {i} {:?} leaves the parameter box",
                    rect.intervals()
                )));
            }
            for (k, other) in self.rects.iter().enumerate().skip(i + 1) {
                if rect.overlaps(other) {
                    return Err(GeometryError::InvalidInput(format!(
                        "region rectangles {i} and {k} overlap"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> f64 {
        self.rects.iter().map(ParamBox::measure).sum()
    }
}

/// Sign of the measure on a sampled region, from the orientation rule and
/// the contracted form at the anchor node.
pub fn orientation_sign<const D: usize>(
    form: &ContractedCurrentForm<D>,
    region: &SampledRegion<D>,
    orientation: Orientation,
) -> Result<f64> {
    let anchor = form.eval_frame(&region.anchor().frame()?)?;
    Ok(orientation.sign(anchor))
}

/// `∫ ι*(J·μ)` over a sampled region with a fixed sign.
pub fn born_integral_sampled<const D: usize>(
    form: &ContractedCurrentForm<D>,
    region: &SampledRegion<D>,
    sign: f64,
) -> Result<IntegralResult> {
    region.integrate(|_, frame| Ok(sign * form.eval_frame(frame)?))
}

/// Probability `P_Σ(A)` of region `A` of the surface `h`.
///
/// No causality condition is imposed on `h`; only the immersion has to be
/// regular at the quadrature nodes.
pub fn born_probability<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    h: &ParametrizedHypersurface<D>,
    region: &RegionSpec,
) -> Result<IntegralResult> {
    region.validate(h.param_box())?;
    if region.is_empty() {
        return Ok(IntegralResult::default());
    }
    let form = ContractedCurrentForm::new(st, current);
    let sampled = h.sample_region(&region.rects)?;
    let sign = orientation_sign(&form, &sampled, h.orientation())?;
    born_integral_sampled(&form, &sampled, sign)
}

/// Future-directed unit normal of a spacelike frame: the time axis made
/// orthogonal to the frame, then normalized.
pub fn unit_normal<const D: usize>(st: &Spacetime<D>, frame: &TangentFrame<D>) -> Result<Vector<D>> {
    let g = st.metric_at(&frame.point)?;
    let k = frame.basis.len();
    let mut axis = Vector::<D>::zeros();
    axis[0] = 1.0;
    let gram = DMatrix::from_fn(k, k, |i, j| bilinear(&g, &frame.basis[i], &frame.basis[j]));
    let rhs = DVector::from_fn(k, |i, _| bilinear(&g, &frame.basis[i], &axis));
    let coeffs = gram.lu().solve(&rhs).ok_or_else(|| GeometryError::NotSpacelike { param: vec![] })?;
    let mut normal = axis;
    for (c, t) in coeffs.iter().zip(&frame.basis) {
        normal -= t * *c;
    }
    if normal[0] < 0.0 {
        normal = -normal;
    }
    st.normalize_timelike(&frame.point, &normal)
}

/// Flux density `g(J,n)·√det(−ι*g)` at a node; fails off spacelike nodes.
pub fn normal_flux_density<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    node: &SurfaceNode<D>,
    frame: &TangentFrame<D>,
) -> Result<f64> {
    let area = induced_area_element(st, node, frame)?;
    let normal = unit_normal(st, frame).map_err(|_| GeometryError::NotSpacelike {
        param: node.param.clone(),
    })?;
    Ok(st.inner(&frame.point, &current.at(&frame.point), &normal)? * area)
}

/// `∫ g(J,n) ν` over a sampled region.
pub fn normal_flux_integral_sampled<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    region: &SampledRegion<D>,
) -> Result<IntegralResult> {
    region.integrate(|node, frame| normal_flux_density(st, current, node, frame))
}

/// Both sides of `g(J,n)ν = ι*(J·μ)` on a spacelike region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `∫ g(J,n) ν`.
    pub normal_flux: IntegralResult,
    /// `∫ ι*(J·μ)`.
    pub contracted: IntegralResult,
    pub abs_difference: f64,
    pub rel_difference: f64,
    /// Largest pointwise relative difference of the two integrands over
    /// fine nodes where the contracted integrand exceeds 1e-12.
    pub max_pointwise_rel_difference: f64,
}

pub fn verify_spacelike_identity<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    h: &ParametrizedHypersurface<D>,
    region: &RegionSpec,
) -> Result<IdentityReport> {
    region.validate(h.param_box())?;
    let sampled = h.sample_region(&region.rects)?;
    identity_on_region(st, current, &sampled, h.orientation())
}

/// Identity check on an already sampled (possibly evolved) region.
pub fn identity_on_region<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    sampled: &SampledRegion<D>,
    orientation: Orientation,
) -> Result<IdentityReport> {
    let form = ContractedCurrentForm::new(st, current);
    let normal_flux = normal_flux_integral_sampled(st, current, sampled)?;
    let sign = orientation_sign(&form, sampled, orientation)?;
    let contracted = born_integral_sampled(&form, sampled, sign)?;

    let mut max_pointwise = 0.0_f64;
    for node in sampled.fine_nodes() {
        let frame = node.frame()?;
        let rhs = sign * form.eval_frame(&frame)?;
        if rhs.abs() > 1e-12 {
            let lhs = normal_flux_density(st, current, node, &frame)?;
            max_pointwise = max_pointwise.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    let abs_difference = (normal_flux.value - contracted.value).abs();
    Ok(IdentityReport {
        normal_flux,
        contracted,
        abs_difference,
        rel_difference: abs_difference / contracted.value.abs().max(f64::MIN_POSITIVE),
        max_pointwise_rel_difference: max_pointwise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityNode {
    pub param: Vec<f64>,
    /// Oriented integrand (parameter-space density).
    pub integrand: f64,
    pub tangent: bool,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub nodes: Vec<PositivityNode>,
    pub tangent_count: usize,
    pub negative_count: usize,
}

impl PositivityReport {
    pub fn tangent_params(&self) -> Vec<&[f64]> {
        self.nodes.iter().filter(|n| n.tangent).map(|n| n.param.as_slice()).collect()
    }
}

/// Flags grid nodes where the surface is tangent to `J` or where the
/// oriented integrand is negative.
pub fn positivity_check<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    h: &ParametrizedHypersurface<D>,
) -> Result<PositivityReport> {
    let form = ContractedCurrentForm::new(st, current);
    let anchor = form.eval_frame(&h.tangent_frame(&h.param_box().center())?)?;
    let sign = h.orientation().sign(anchor);
    let mut nodes = Vec::new();
    for node in h.grid_nodes()? {
        let frame = node.frame()?;
        let integrand = sign * form.eval_frame(&frame)?;
        let tangent = integrand.abs() < TANGENCY_TOLERANCE * form.tangency_scale(&frame)?;
        nodes.push(PositivityNode {
            param: node.param.clone(),
            integrand,
            tangent,
            negative: !tangent && integrand < 0.0,
        });
    }
    let tangent_count = nodes.iter().filter(|n| n.tangent).count();
    let negative_count = nodes.iter().filter(|n| n.negative).count();
    Ok(PositivityReport {
        nodes,
        tangent_count,
        negative_count,
    })
}
