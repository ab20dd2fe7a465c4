//! Scalar and vector fields on a single global chart.

use std::fmt;
use std::sync::Arc;

use nalgebra::SVector;

/// Chart coordinates of an event. Coordinate 0 is the time coordinate in
/// every built-in chart.
pub type SpacetimePoint<const D: usize> = SVector<f64, D>;

/// Contravariant components of a tangent vector.
pub type Vector<const D: usize> = SVector<f64, D>;

pub type ScalarFn<const D: usize> = Arc<dyn Fn(&SpacetimePoint<D>) -> f64 + Send + Sync>;
type ValueFn<const D: usize> = Arc<dyn Fn(&SpacetimePoint<D>) -> Vector<D> + Send + Sync>;
type FlowFn<const D: usize> = Arc<dyn Fn(f64, &SpacetimePoint<D>) -> SpacetimePoint<D> + Send + Sync>;

/// A smooth vector field, optionally carrying its exact divergence and flow.
///
/// The analytic extras are trusted by the consumers (the flow integrator and
/// the divergence operator) and are cross-checked against numerics in tests.
#[derive(Clone)]
pub struct VectorField<const D: usize> {
    value: ValueFn<D>,
    divergence: Option<ScalarFn<D>>,
    flow: Option<FlowFn<D>>,
}

impl<const D: usize> VectorField<D> {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&SpacetimePoint<D>) -> Vector<D> + Send + Sync + 'static,
    {
        VectorField {
            value: Arc::new(value),
            divergence: None,
            flow: None,
        }
    }

    /// Field with the same components everywhere.
    pub fn constant(components: Vector<D>) -> Self {
        VectorField::new(move |_| components)
            .with_divergence(|_| 0.0)
            .with_flow(move |tau, p| p + components * tau)
    }

    pub fn with_divergence<F>(mut self, divergence: F) -> Self
    where
        F: Fn(&SpacetimePoint<D>) -> f64 + Send + Sync + 'static,
    {
        self.divergence = Some(Arc::new(divergence));
        self
    }

    pub fn with_flow<F>(mut self, flow: F) -> Self
    where
        F: Fn(f64, &SpacetimePoint<D>) -> SpacetimePoint<D> + Send + Sync + 'static,
    {
        self.flow = Some(Arc::new(flow));
        self
    }

    /// Drops the analytic divergence and flow, leaving only the values.
    pub fn values_only(&self) -> Self {
        VectorField {
            value: Arc::clone(&self.value),
            divergence: None,
            flow: None,
        }
    }

    #[inline]
    pub fn at(&self, p: &SpacetimePoint<D>) -> Vector<D> {
        (self.value)(p)
    }

    pub fn analytic_divergence(&self, p: &SpacetimePoint<D>) -> Option<f64> {
        self.divergence.as_ref().map(|div| div(p))
    }

    pub fn has_analytic_divergence(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn analytic_flow(&self, tau: f64, p: &SpacetimePoint<D>) -> Option<SpacetimePoint<D>> {
        self.flow.as_ref().map(|flow| flow(tau, p))
    }

    pub fn has_analytic_flow(&self) -> bool {
        self.flow.is_some()
    }

    /// Pointwise product `f·F`. Analytic extras are not carried over.
    pub fn scaled_by(&self, factor: ScalarFn<D>) -> Self {
        let value = Arc::clone(&self.value);
        VectorField::new(move |p| value(p) * factor(p))
    }
}

impl<const D: usize> fmt::Debug for VectorField<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &D)
            .field("analytic_divergence", &self.divergence.is_some())
            .field("analytic_flow", &self.flow.is_some())
            .finish()
    }
}

/// Central-difference step for a coordinate of magnitude `x`.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}
