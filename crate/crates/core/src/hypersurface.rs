//! Parametrized hypersurfaces over rectangular parameter boxes.
//!
//! Tangent frames are central differences of the embedding. Quadrature
//! works on [`SampledRegion`]s, which keep for every node the embedded
//! point together with its differencing stencil. Pushing all of those points
//! through a map (a flow, say) and differencing again gives the tangent
//! frame of the mapped surface, so evolved surfaces never need their own
//! variational equations.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::field::{fd_step, SpacetimePoint, Vector};
use crate::geometry::{bilinear, CausalCharacter, Spacetime, CAUSAL_TOLERANCE};
use crate::quadrature::{pairwise_sum, IntegralResult, ParamBox, Side};

/// Smallest eigenvalue of the Gram matrix of the unit tangent vectors below
/// which the immersion is considered degenerate.
const IMMERSION_TOLERANCE: f64 = 1e-12;

type EmbedFn<const D: usize> = Arc<dyn Fn(&[f64]) -> Result<SpacetimePoint<D>> + Send + Sync>;

/// How the sign of the surface measure is fixed.
///
/// `Anchored` orients the parameter order so that the contracted current
/// form is nonnegative at the centre of the parameter box; the other
/// variants fix or flip that choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Anchored,
    AnchoredReversed,
    Positive,
    Negative,
}

impl Orientation {
    /// Sign multiplying the parameter-order integrand, given the integrand
    /// value at the anchor node.
    pub fn sign(self, anchor_value: f64) -> f64 {
        let anchored = if anchor_value < 0.0 { -1.0 } else { 1.0 };
        match self {
            Orientation::Anchored => anchored,
            Orientation::AnchoredReversed => -anchored,
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Anchored => Orientation::AnchoredReversed,
            Orientation::AnchoredReversed => Orientation::Anchored,
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn fixed(sign: f64) -> Self {
        if sign < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }
}

/// Embedding of a `(D−1)`-dimensional parameter box into the chart.
#[derive(Clone)]
pub struct ParametrizedHypersurface<const D: usize> {
    label: String,
    embed: EmbedFn<D>,
    param_box: ParamBox,
    grid_shape: Vec<usize>,
    orientation: Orientation,
    truncation_faces: Vec<(usize, Side)>,
}

impl<const D: usize> fmt::Debug for ParametrizedHypersurface<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedHypersurface")
            .field("label", &self.label)
            .field("param_box", &self.param_box)
            .field("grid_shape", &self.grid_shape)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl<const D: usize> ParametrizedHypersurface<D> {
    pub fn new<F>(
        label: impl Into<String>,
        embed: F,
        param_box: ParamBox,
        grid_shape: Vec<usize>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> SpacetimePoint<D> + Send + Sync + 'static,
    {
        Self::new_fallible(label, move |u| Ok(embed(u)), param_box, grid_shape)
    }

    pub fn new_fallible<F>(
        label: impl Into<String>,
        embed: F,
        param_box: ParamBox,
        grid_shape: Vec<usize>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<SpacetimePoint<D>> + Send + Sync + 'static,
    {
        if param_box.dim() + 1 != D {
            return Err(GeometryError::InvalidInput(format!(
                "parameter box has {} axes, a hypersurface in dimension {D} needs {}",
                param_box.dim(),
                D - 1
            )));
        }
        validate_grid(&grid_shape, D - 1)?;
        Ok(ParametrizedHypersurface {
            label: label.into(),
            embed: Arc::new(embed),
            param_box,
            grid_shape,
            orientation: Orientation::Anchored,
            truncation_faces: Vec::new(),
        })
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_grid_shape(mut self, grid_shape: Vec<usize>) -> Result<Self> {
        validate_grid(&grid_shape, D - 1)?;
        self.grid_shape = grid_shape;
        Ok(self)
    }

    /// Marks faces of the parameter box where an unbounded surface has been
    /// cut off. Integrals report a truncation estimate from these faces.
    pub fn with_truncation_faces(mut self, faces: Vec<(usize, Side)>) -> Self {
        self.truncation_faces = faces;
        self
    }

    /// Marks every face of the parameter box as a truncation face.
    pub fn truncated_everywhere(self) -> Self {
        let faces = (0..D - 1)
            .flat_map(|axis| [(axis, Side::Lower), (axis, Side::Upper)])
            .collect();
        self.with_truncation_faces(faces)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn param_box(&self) -> &ParamBox {
        &self.param_box
    }

    pub fn grid_shape(&self) -> &[usize] {
        &self.grid_shape
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn truncation_faces(&self) -> &[(usize, Side)] {
        &self.truncation_faces
    }

    pub fn embed(&self, u: &[f64]) -> Result<SpacetimePoint<D>> {
        if u.len() != D - 1 {
            return Err(GeometryError::InvalidInput(format!(
                "parameter has {} components, expected {}",
                u.len(),
                D - 1
            )));
        }
        let p = (self.embed)(u)?;
        if p.iter().all(|c| c.is_finite()) {
            Ok(p)
        } else {
            Err(GeometryError::InvalidInput(format!(
                "embedding is not finite at parameter {u:?}"
            )))
        }
    }

    /// Same parameter box and grid, embedding post-composed with `map`.
    pub fn map_embedding<F>(&self, label: impl Into<String>, map: F) -> Self
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Send + Sync + 'static,
    {
        let embed = Arc::clone(&self.embed);
        ParametrizedHypersurface {
            label: label.into(),
            embed: Arc::new(move |u| map(&embed(u)?)),
            param_box: self.param_box.clone(),
            grid_shape: self.grid_shape.clone(),
            orientation: self.orientation,
            truncation_faces: self.truncation_faces.clone(),
        }
    }

    /// Tangent frame `∂φ/∂u^i` at `u` by central differences.
    pub fn tangent_frame(&self, u: &[f64]) -> Result<TangentFrame<D>> {
        self.node(u.to_vec(), 0.0)?.frame()
    }

    /// Builds the differencing stencil of one node.
    pub fn node(&self, param: Vec<f64>, weight: f64) -> Result<SurfaceNode<D>> {
        let point = self.embed(&param)?;
        let mut stencil = Vec::with_capacity(D - 1);
        let mut steps = Vec::with_capacity(D - 1);
        let mut shifted = param.clone();
        for i in 0..D - 1 {
            let h = fd_step(param[i]);
            shifted[i] = param[i] + h;
            let plus = self.embed(&shifted)?;
            shifted[i] = param[i] - h;
            let minus = self.embed(&shifted)?;
            shifted[i] = param[i];
            stencil.push((plus, minus));
            steps.push(h);
        }
        Ok(SurfaceNode {
            param,
            weight,
            point,
            stencil,
            steps,
        })
    }

    /// Nodes for a list of parameters (evaluated in parallel, order kept).
    pub fn nodes(&self, params: Vec<(Vec<f64>, f64)>) -> Result<Vec<SurfaceNode<D>>> {
        params
            .into_par_iter()
            .map(|(u, w)| self.node(u, w))
            .collect()
    }

    /// Midpoint nodes of the surface's own grid over the whole box.
    pub fn grid_nodes(&self) -> Result<Vec<SurfaceNode<D>>> {
        self.nodes(self.param_box.midpoint_nodes(&self.grid_shape))
    }

    /// Quadrature plan over the whole parameter box.
    pub fn sample(&self) -> Result<SampledRegion<D>> {
        self.sample_region(std::slice::from_ref(&self.param_box))
    }

    /// Quadrature plan over sub-rectangles of the parameter box. Each
    /// rectangle is integrated on the surface's grid shape (coarse) and on
    /// twice that resolution (fine).
    pub fn sample_region(&self, rects: &[ParamBox]) -> Result<SampledRegion<D>> {
        let fine_shape: Vec<usize> = self.grid_shape.iter().map(|n| 2 * n).collect();
        let mut sampled = Vec::with_capacity(rects.len());
        for rect in rects {
            if !self.param_box.contains(rect) {
                return Err(GeometryError::InvalidInput(format!(
                    "region rectangle {:?} leaves the parameter box {:?}",
                    rect.intervals(),
                    self.param_box.intervals()
                )));
            }
            let coarse = self.nodes(rect.midpoint_nodes(&self.grid_shape))?;
            let fine = self.nodes(rect.midpoint_nodes(&fine_shape))?;
            let mut face_params = Vec::new();
            for &(axis, side) in &self.truncation_faces {
                if rect.shares_face(&self.param_box, axis, side) {
                    face_params.extend(rect.face_nodes(&fine_shape, axis, side));
                }
            }
            let truncation = self.nodes(face_params)?;
            sampled.push(SampledRect {
                measure: rect.measure(),
                coarse,
                fine,
                truncation,
            });
        }
        let anchor = self.node(self.param_box.center(), 0.0)?;
        Ok(SampledRegion {
            rects: sampled,
            anchor,
        })
    }
}

fn validate_grid(grid_shape: &[usize], axes: usize) -> Result<()> {
    if grid_shape.len() != axes {
        return Err(GeometryError::InvalidInput(format!(
            "grid shape has {} entries, expected {axes}",
            grid_shape.len()
        )));
    }
    if grid_shape.iter().any(|&n| n < 2) {
        return Err(GeometryError::InvalidInput(format!(
            "grid shape entries must be at least 2, got {grid_shape:?}"
        )));
    }
    Ok(())
}

/// Point on a surface together with the `D−1` coordinate tangent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame<const D: usize> {
    pub point: SpacetimePoint<D>,
    pub basis: Vec<Vector<D>>,
}

impl<const D: usize> TangentFrame<D> {
    /// Frame with the coordinate tangent vectors taken as given.
    pub fn new(point: SpacetimePoint<D>, basis: Vec<Vector<D>>) -> Result<Self> {
        if basis.len() + 1 != D {
            return Err(GeometryError::InvalidInput(format!(
                "frame has {} vectors, expected {}",
                basis.len(),
                D - 1
            )));
        }
        Ok(TangentFrame { point, basis })
    }

    fn check_immersion(&self, param: &[f64]) -> Result<()> {
        let units: Vec<Vector<D>> = self
            .basis
            .iter()
            .map(|v| v.normalize())
            .collect();
        if units.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::DegenerateImmersion {
                param: param.to_vec(),
            });
        }
        let k = units.len();
        let gram = DMatrix::from_fn(k, k, |i, j| units[i].dot(&units[j]));
        let smallest = SymmetricEigen::new(gram).eigenvalues.min();
        if smallest < IMMERSION_TOLERANCE {
            return Err(GeometryError::DegenerateImmersion {
                param: param.to_vec(),
            });
        }
        Ok(())
    }
}

/// A quadrature node: parameter, weight, embedded point and the embedded
/// central-difference stencil around it.
#[derive(Debug, Clone)]
pub struct SurfaceNode<const D: usize> {
    pub param: Vec<f64>,
    pub weight: f64,
    pub point: SpacetimePoint<D>,
    stencil: Vec<(SpacetimePoint<D>, SpacetimePoint<D>)>,
    steps: Vec<f64>,
}

impl<const D: usize> SurfaceNode<D> {
    pub fn frame(&self) -> Result<TangentFrame<D>> {
        let basis = self
            .stencil
            .iter()
            .zip(&self.steps)
            .map(|((plus, minus), h)| (plus - minus) / (2.0 * h))
            .collect();
        let frame = TangentFrame {
            point: self.point,
            basis,
        };
        frame.check_immersion(&self.param)?;
        Ok(frame)
    }

    /// Pushes the node point and its stencil through `map`.
    pub fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>>,
    {
        let stencil = self
            .stencil
            .iter()
            .map(|(plus, minus)| Ok((map(plus)?, map(minus)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SurfaceNode {
            param: self.param.clone(),
            weight: self.weight,
            point: map(&self.point)?,
            stencil,
            steps: self.steps.clone(),
        })
    }
}

#[derive(Debug, Clone)]
struct SampledRect<const D: usize> {
    measure: f64,
    coarse: Vec<SurfaceNode<D>>,
    fine: Vec<SurfaceNode<D>>,
    truncation: Vec<SurfaceNode<D>>,
}

/// Nodes of a two-level midpoint rule over a union of sub-rectangles, plus
/// truncation-face nodes and the orientation anchor.
#[derive(Debug, Clone)]
pub struct SampledRegion<const D: usize> {
    rects: Vec<SampledRect<D>>,
    anchor: SurfaceNode<D>,
}

impl<const D: usize> SampledRegion<D> {
    pub fn anchor(&self) -> &SurfaceNode<D> {
        &self.anchor
    }

    /// Fine-grid nodes of all rectangles.
    pub fn fine_nodes(&self) -> impl Iterator<Item = &SurfaceNode<D>> {
        self.rects.iter().flat_map(|r| r.fine.iter())
    }

    /// Every node the region holds, anchor included.
    pub fn all_nodes(&self) -> impl Iterator<Item = &SurfaceNode<D>> {
        self.rects
            .iter()
            .flat_map(|r| r.coarse.iter().chain(&r.fine).chain(&r.truncation))
            .chain(std::iter::once(&self.anchor))
    }

    /// Pushes every node through `map` (in parallel, order kept).
    pub fn map_points<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&SpacetimePoint<D>) -> Result<SpacetimePoint<D>> + Sync,
    {
        let map_all = |nodes: &[SurfaceNode<D>]| -> Result<Vec<SurfaceNode<D>>> {
            nodes.par_iter().map(|n| n.map_points(&map)).collect()
        };
        let rects = self
            .rects
            .iter()
            .map(|r| {
                Ok(SampledRect {
                    measure: r.measure,
                    coarse: map_all(&r.coarse)?,
                    fine: map_all(&r.fine)?,
                    truncation: map_all(&r.truncation)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledRegion {
            rects,
            anchor: self.anchor.map_points(&map)?,
        })
    }

    /// Integrates a density (already including the parameter-space area
    /// element) over the region.
    pub fn integrate<F>(&self, density: F) -> Result<IntegralResult>
    where
        F: Fn(&SurfaceNode<D>, &TangentFrame<D>) -> Result<f64> + Sync,
    {
        let weighted = |nodes: &[SurfaceNode<D>]| -> Result<f64> {
            let terms = nodes
                .par_iter()
                .map(|n| Ok(density(n, &n.frame()?)? * n.weight))
                .collect::<Result<Vec<f64>>>()?;
            Ok(pairwise_sum(&terms))
        };
        let mut total = IntegralResult::default();
        for rect in &self.rects {
            let coarse = weighted(&rect.coarse)?;
            let fine = weighted(&rect.fine)?;
            let mut result = IntegralResult::from_levels(coarse, fine, rect.fine.len());
            let mut edge_max = 0.0_f64;
            for n in &rect.truncation {
                edge_max = edge_max.max(density(n, &n.frame()?)?.abs());
            }
            result.truncation_estimate = edge_max * rect.measure;
            total = total.combine(result);
        }
        Ok(total)
    }
}

/// `−g(∂_iφ, ∂_jφ)` for the vectors of a frame.
pub fn pullback_metric_of_frame<const D: usize>(
    st: &Spacetime<D>,
    frame: &TangentFrame<D>,
) -> Result<DMatrix<f64>> {
    let g = st.metric_at(&frame.point)?;
    let k = frame.basis.len();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        -bilinear(&g, &frame.basis[i], &frame.basis[j])
    }))
}

/// Negative pullback metric `−ι*g` at parameter `u`.
pub fn pullback_metric<const D: usize>(
    st: &Spacetime<D>,
    h: &ParametrizedHypersurface<D>,
    u: &[f64],
) -> Result<DMatrix<f64>> {
    pullback_metric_of_frame(st, &h.tangent_frame(u)?)
}

/// Causal character of the tangent space spanned by a frame.
///
/// The frame vectors are first scaled to unit Euclidean length so that the
/// causal tolerance does not depend on the parametrization speed.
pub fn causal_class_of_frame<const D: usize>(
    st: &Spacetime<D>,
    frame: &TangentFrame<D>,
) -> Result<CausalCharacter> {
    let unit = TangentFrame {
        point: frame.point,
        basis: frame.basis.iter().map(|v| v.normalize()).collect(),
    };
    let pullback = pullback_metric_of_frame(st, &unit)?;
    let eigenvalues = SymmetricEigen::new(pullback).eigenvalues;
    Ok(if eigenvalues.iter().any(|&e| e < -CAUSAL_TOLERANCE) {
        CausalCharacter::Timelike
    } else if eigenvalues.min() > CAUSAL_TOLERANCE {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Lightlike
    })
}

pub fn surface_causal_class<const D: usize>(
    st: &Spacetime<D>,
    h: &ParametrizedHypersurface<D>,
    u: &[f64],
) -> Result<CausalCharacter> {
    causal_class_of_frame(st, &h.tangent_frame(u)?)
}

/// Riemannian area element `√det(−ι*g)`; fails unless the frame is spacelike.
pub fn induced_area_element<const D: usize>(
    st: &Spacetime<D>,
    node: &SurfaceNode<D>,
    frame: &TangentFrame<D>,
) -> Result<f64> {
    if causal_class_of_frame(st, frame)? != CausalCharacter::Spacelike {
        return Err(GeometryError::NotSpacelike {
            param: node.param.clone(),
        });
    }
    let det = pullback_metric_of_frame(st, frame)?.determinant();
    Ok(det.max(0.0).sqrt())
}

/// `∫ f ν` with `ν` the volume form of `−ι*g`, over a sampled region.
pub fn induced_volume_integral_sampled<const D: usize, F>(
    st: &Spacetime<D>,
    region: &SampledRegion<D>,
    f: F,
) -> Result<IntegralResult>
where
    F: Fn(&SpacetimePoint<D>, &TangentFrame<D>) -> Result<f64> + Sync,
{
    region.integrate(|node, frame| Ok(f(&node.point, frame)? * induced_area_element(st, node, frame)?))
}

/// `∫_Σ f ν` over the whole surface. Fails with `NotSpacelike` at the first
/// node whose tangent space is not spacelike.
pub fn induced_volume_integral<const D: usize, F>(
    st: &Spacetime<D>,
    h: &ParametrizedHypersurface<D>,
    f: F,
) -> Result<IntegralResult>
where
    F: Fn(&SpacetimePoint<D>) -> f64 + Sync,
{
    induced_volume_integral_sampled(st, &h.sample()?, |p, _| Ok(f(p)))
}

/// Built-in surfaces.
pub mod builtin {
    use super::*;
    use std::f64::consts::PI;

    /// Graph `t = s(x)` over a box of spatial coordinates.
    pub fn graph<const D: usize, S>(
        label: impl Into<String>,
        height: S,
        param_box: ParamBox,
        grid_shape: Vec<usize>,
    ) -> Result<ParametrizedHypersurface<D>>
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ParametrizedHypersurface::new(
            label,
            move |u| {
                let mut p = SpacetimePoint::<D>::zeros();
                p[0] = height(u);
                for (i, x) in u.iter().enumerate() {
                    p[i + 1] = *x;
                }
                p
            },
            param_box,
            grid_shape,
        )
    }

    /// Slice `t = t0` over the cube `[−half_width, half_width]^{D−1}`,
    /// truncated on every face.
    pub fn time_slice<const D: usize>(
        t0: f64,
        half_width: f64,
        cells: usize,
    ) -> Result<ParametrizedHypersurface<D>> {
        let param_box = ParamBox::new(vec![[-half_width, half_width]; D - 1])?;
        Ok(graph("time_slice", move |_| t0, param_box, vec![cells; D - 1])?.truncated_everywhere())
    }

    /// Plane `t = slope·x` over a box.
    pub fn tilted_plane<const D: usize>(
        slope: f64,
        param_box: ParamBox,
        grid_shape: Vec<usize>,
    ) -> Result<ParametrizedHypersurface<D>> {
        graph("tilted_plane", move |u| slope * u[0], param_box, grid_shape)
    }

    /// Embedding `(a, b) ↦ (a, slope·a, b)`: timelike for slope < 1,
    /// lightlike at 1, spacelike above.
    pub fn steep_plane(slope: f64, param_box: ParamBox, grid_shape: Vec<usize>) -> Result<ParametrizedHypersurface<3>> {
        ParametrizedHypersurface::new(
            "steep_plane",
            move |u| SpacetimePoint::<3>::new(u[0], slope * u[0], u[1]),
            param_box,
            grid_shape,
        )
    }

    /// Flat disk of radius `radius` in the slice `t = t0`, polar parameters
    /// `(r, θ) ∈ [1e−6·radius, radius] × [0, 2π]`.
    pub fn polar_disk(t0: f64, radius: f64, grid_shape: Vec<usize>) -> Result<ParametrizedHypersurface<3>> {
        let param_box = ParamBox::new(vec![[1e-6 * radius, radius], [0.0, 2.0 * PI]])?;
        ParametrizedHypersurface::new(
            "polar_disk",
            move |u| SpacetimePoint::<3>::new(t0, u[0] * u[1].cos(), u[0] * u[1].sin()),
            param_box,
            grid_shape,
        )
    }

    /// Flat disk in Cartesian-like parameters: the square `[−1,1]²` mapped
    /// onto the disk by `(u,v) ↦ R(u√(1−v²/2), v√(1−u²/2))`.
    pub fn square_disk(t0: f64, radius: f64, grid_shape: Vec<usize>) -> Result<ParametrizedHypersurface<3>> {
        let param_box = ParamBox::new(vec![[-1.0, 1.0], [-1.0, 1.0]])?;
        ParametrizedHypersurface::new(
            "square_disk",
            move |u| {
                let (a, b) = (u[0], u[1]);
                SpacetimePoint::<3>::new(
                    t0,
                    radius * a * (1.0 - 0.5 * b * b).sqrt(),
                    radius * b * (1.0 - 0.5 * a * a).sqrt(),
                )
            },
            param_box,
            grid_shape,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::builtin::*;
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, Vector3};
    use std::f64::consts::PI;

    fn unit_box() -> ParamBox {
        ParamBox::new(vec![[0.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn tangent_frames_of_simple_surfaces() {
        let disk = polar_disk(0.0, 2.0, vec![4, 4]).unwrap();
        let frame = disk.tangent_frame(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(frame.basis[0], Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(frame.basis[1], Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-9);

        let bump = graph::<3, _>(
            "bump",
            |u| (u[0] - 0.5).powi(2) + (u[1] - 0.5).powi(2),
            unit_box(),
            vec![4, 4],
        )
        .unwrap();
        let frame = bump.tangent_frame(&[0.5, 0.5]).unwrap();
        assert_relative_eq!(frame.basis[0], Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(frame.basis[1], Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-9);

        let tilted = tilted_plane::<3>(0.5, unit_box(), vec![4, 4]).unwrap();
        let frame = tilted.tangent_frame(&[0.3, 0.7]).unwrap();
        assert_relative_eq!(frame.basis[0], Vector3::new(0.5, 1.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(frame.basis[1], Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_immersion_detected() {
        let pinched = ParametrizedHypersurface::<3>::new(
            "pinched",
            |u| Vector3::new(0.0, u[0] + u[1], 2.0 * (u[0] + u[1])),
            unit_box(),
            vec![2, 2],
        )
        .unwrap();
        assert!(matches!(
            pinched.tangent_frame(&[0.5, 0.5]),
            Err(GeometryError::DegenerateImmersion { .. })
        ));
    }

    #[test]
    fn rejects_bad_construction() {
        let embed = |u: &[f64]| Vector3::new(0.0, u[0], u[1]);
        assert!(ParametrizedHypersurface::<3>::new("g", embed, unit_box(), vec![1, 4]).is_err());
        assert!(ParametrizedHypersurface::<3>::new("g", embed, unit_box(), vec![4]).is_err());
        let cube = ParamBox::new(vec![[0.0, 1.0]; 3]).unwrap();
        assert!(ParametrizedHypersurface::<3>::new("g", embed, cube, vec![4, 4, 4]).is_err());
    }

    #[test]
    fn pullback_metric_examples() {
        let st = Spacetime::<3>::minkowski();
        let disk = polar_disk(0.0, 3.0, vec![4, 4]).unwrap();
        let m = pullback_metric(&st, &disk, &[2.0, 0.0]).unwrap();
        assert_relative_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]), epsilon = 1e-8);

        let tilted = tilted_plane::<3>(0.5, unit_box(), vec![4, 4]).unwrap();
        let m = pullback_metric(&st, &tilted, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(m, DMatrix::from_row_slice(2, 2, &[0.75, 0.0, 0.0, 1.0]), epsilon = 1e-9);

        let null = tilted_plane::<3>(1.0, unit_box(), vec![4, 4]).unwrap();
        let m = pullback_metric(&st, &null, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), epsilon = 1e-9);
    }

    #[test]
    fn surface_causal_classes() {
        let st = Spacetime::<3>::minkowski();
        let disk = polar_disk(0.0, 1.0, vec![4, 4]).unwrap();
        for u in [[0.2, 0.0], [0.9, 4.0], [0.5, 6.0]] {
            assert_eq!(surface_causal_class(&st, &disk, &u).unwrap(), CausalCharacter::Spacelike);
        }
        let null = tilted_plane::<3>(1.0, unit_box(), vec![4, 4]).unwrap();
        assert_eq!(
            surface_causal_class(&st, &null, &[0.5, 0.5]).unwrap(),
            CausalCharacter::Lightlike
        );
        let vertical = steep_plane(0.0, unit_box(), vec![4, 4]).unwrap();
        assert_eq!(
            surface_causal_class(&st, &vertical, &[0.5, 0.5]).unwrap(),
            CausalCharacter::Timelike
        );
    }

    #[test]
    fn classification_matches_pullback_definiteness() {
        let st = Spacetime::<3>::minkowski();
        for slope in [0.0, 0.3, 0.9, 1.1, 2.0] {
            let plane = tilted_plane::<3>(slope, unit_box(), vec![4, 4]).unwrap();
            let m = pullback_metric(&st, &plane, &[0.5, 0.5]).unwrap();
            let definite = m.clone().cholesky().is_some();
            let class = surface_causal_class(&st, &plane, &[0.5, 0.5]).unwrap();
            assert_eq!(definite, class == CausalCharacter::Spacelike, "slope {slope}");
        }
    }

    #[test]
    fn disk_and_tilted_areas() {
        let st = Spacetime::<3>::minkowski();
        let disk = polar_disk(0.0, 2.0, vec![8, 16]).unwrap();
        let area = induced_volume_integral(&st, &disk, |_| 1.0).unwrap();
        assert_relative_eq!(area.value, 4.0 * PI, max_relative = 1e-6);

        let tilted = tilted_plane::<3>(0.5, unit_box(), vec![4, 4]).unwrap();
        let area = induced_volume_integral(&st, &tilted, |_| 1.0).unwrap();
        assert_relative_eq!(area.value, 0.75f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn induced_integral_refuses_non_spacelike_surfaces() {
        let st = Spacetime::<3>::minkowski();
        let steep = tilted_plane::<3>(1.5, unit_box(), vec![4, 4]).unwrap();
        assert!(matches!(
            induced_volume_integral(&st, &steep, |_| 1.0),
            Err(GeometryError::NotSpacelike { .. })
        ));
    }

    #[test]
    fn disk_area_independent_of_parametrization() {
        let st = Spacetime::<3>::minkowski();
        let polar = induced_volume_integral(&st, &polar_disk(0.0, 1.5, vec![16, 32]).unwrap(), |_| 1.0)
            .unwrap();
        let square = induced_volume_integral(&st, &square_disk(0.0, 1.5, vec![64, 64]).unwrap(), |_| 1.0)
            .unwrap();
        let tolerance = 3.0 * (polar.error_estimate + square.error_estimate) + 1e-12;
        assert!(
            (polar.value - square.value).abs() < tolerance,
            "polar {} square {} tol {tolerance}",
            polar.value,
            square.value
        );
    }

    #[test]
    fn region_must_stay_inside_box() {
        let plane = time_slice::<3>(0.0, 1.0, 4).unwrap();
        let outside = ParamBox::new(vec![[0.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(plane.sample_region(&[outside]).is_err());
    }

    #[test]
    fn orientation_signs() {
        assert_eq!(Orientation::Anchored.sign(-2.0), -1.0);
        assert_eq!(Orientation::Anchored.sign(0.0), 1.0);
        assert_eq!(Orientation::AnchoredReversed.sign(3.0), -1.0);
        assert_eq!(Orientation::Negative.sign(3.0), -1.0);
        assert_eq!(Orientation::Positive.reversed(), Orientation::Negative);
    }
}
