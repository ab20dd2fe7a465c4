//! Lorentzian metrics on a single chart, index gymnastics and causal
//! classification.
//!
//! Sign convention is (+,−,…,−): timelike vectors have positive norm. All
//! built-in charts use coordinate 0 as time, and future-directedness is read
//! off the sign of that component.

use std::fmt;
use std::sync::Arc;

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::field::{fd_step, SpacetimePoint, Vector, VectorField};
use crate::linalg::{determinant, symmetric_eigenvalues};

/// Threshold on `g(V,V)` separating spacelike, lightlike and timelike.
pub const CAUSAL_TOLERANCE: f64 = 1e-9;

/// Metrics with `|det g|` below this are rejected as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-14;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub type MetricTensor<const D: usize> = SMatrix<f64, D, D>;
type MetricFn<const D: usize> = Arc<dyn Fn(&SpacetimePoint<D>) -> MetricTensor<D> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    /// Within the causal tolerance of the light cone.
    Lightlike,
    /// No well-defined tangent space (the immersion degenerates).
    Degenerate,
}

impl CausalCharacter {
    pub fn as_str(self) -> &'static str {
        match self {
            CausalCharacter::Spacelike => "spacelike",
            CausalCharacter::Timelike => "timelike",
            CausalCharacter::Lightlike => "lightlike",
            CausalCharacter::Degenerate => "degenerate",
        }
    }

    pub fn classify(norm_sq: f64) -> Self {
        if norm_sq < -CAUSAL_TOLERANCE {
            CausalCharacter::Spacelike
        } else if norm_sq > CAUSAL_TOLERANCE {
            CausalCharacter::Timelike
        } else {
            CausalCharacter::Lightlike
        }
    }
}

impl fmt::Display for CausalCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A Lorentzian metric on a global chart of dimension `D`.
#[derive(Clone)]
pub struct Spacetime<const D: usize> {
    name: String,
    metric_fn: MetricFn<D>,
}

impl<const D: usize> fmt::Debug for Spacetime<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spacetime")
            .field("name", &self.name)
            .field("dim", &D)
            .finish()
    }
}

impl<const D: usize> Spacetime<D> {
    pub fn new<F>(name: impl Into<String>, metric_fn: F) -> Self
    where
        F: Fn(&SpacetimePoint<D>) -> MetricTensor<D> + Send + Sync + 'static,
    {
        Spacetime {
            name: name.into(),
            metric_fn: Arc::new(metric_fn),
        }
    }

    /// Flat metric diag(1, −1, …, −1).
    pub fn minkowski() -> Self {
        let eta = minkowski_eta::<D>();
        Spacetime::new(format!("minkowski{D}"), move |_| eta)
    }

    /// Conformally flat metric Ω²·η with Ω = 1 + 0.1·sin(x), x = coordinate 1.
    pub fn conformal_test() -> Self {
        let eta = minkowski_eta::<D>();
        Spacetime::new(format!("conformal{D}"), move |p| {
            let omega = conformal_factor(p[1]);
            eta * (omega * omega)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub const fn dim(&self) -> usize {
        D
    }

    /// Raw metric components without validation.
    #[inline]
    pub fn metric_unchecked(&self, p: &SpacetimePoint<D>) -> MetricTensor<D> {
        (self.metric_fn)(p)
    }

    /// Metric components at `p`, validated for symmetry, regularity and
    /// Lorentzian signature.
    pub fn metric_at(&self, p: &SpacetimePoint<D>) -> Result<MetricTensor<D>> {
        let g = self.metric_unchecked(p);
        validate_metric(&g, p)?;
        Ok(g)
    }

    pub fn inverse_metric_at(&self, p: &SpacetimePoint<D>) -> Result<MetricTensor<D>> {
        let g = self.metric_at(p)?;
        g.try_inverse().ok_or_else(|| GeometryError::Singular {
            point: p.as_slice().to_vec(),
            det: determinant(&g),
        })
    }

    /// Density √|det g| of the metric volume form in chart coordinates.
    pub fn volume_density(&self, p: &SpacetimePoint<D>) -> Result<f64> {
        Ok(determinant(&self.metric_at(p)?).abs().sqrt())
    }

    pub fn inner(&self, p: &SpacetimePoint<D>, v: &Vector<D>, w: &Vector<D>) -> Result<f64> {
        let g = self.metric_at(p)?;
        Ok(bilinear(&g, v, w))
    }

    /// Metric gradient `g^{μν} ∂_ν f` by central differences.
    pub fn gradient<F>(&self, f: F, p: &SpacetimePoint<D>) -> Result<Vector<D>>
    where
        F: Fn(&SpacetimePoint<D>) -> f64,
    {
        let mut partials = Vector::<D>::zeros();
        for mu in 0..D {
            let h = fd_step(p[mu]);
            let mut plus = *p;
            let mut minus = *p;
            plus[mu] += h;
            minus[mu] -= h;
            partials[mu] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        if !partials.iter().all(|x| x.is_finite()) {
            return Err(GeometryError::DifferentiationFailure {
                point: p.as_slice().to_vec(),
            });
        }
        Ok(self.inverse_metric_at(p)? * partials)
    }

    /// The gradient of `f` as a vector field.
    ///
    /// Evaluation points where differentiation or metric inversion fails
    /// yield NaN components; use [`Spacetime::gradient`] for checked access.
    pub fn gradient_field<F>(&self, f: F) -> VectorField<D>
    where
        F: Fn(&SpacetimePoint<D>) -> f64 + Send + Sync + 'static,
    {
        let st = self.clone();
        VectorField::new(move |p| {
            st.gradient(&f, p)
                .unwrap_or_else(|_| Vector::<D>::repeat(f64::NAN))
        })
    }

    /// Rescales a future-directed timelike vector to unit norm.
    pub fn normalize_timelike(&self, p: &SpacetimePoint<D>, v: &Vector<D>) -> Result<Vector<D>> {
        let norm_sq = self.inner(p, v, v)?;
        if norm_sq <= CAUSAL_TOLERANCE {
            return Err(GeometryError::NotTimelike { norm_sq });
        }
        if v[0] <= 0.0 {
            return Err(GeometryError::PastDirected {
                time_component: v[0],
            });
        }
        Ok(v / norm_sq.sqrt())
    }

    /// Divergence `(1/√|g|) ∂_μ(√|g| F^μ)`; the field's analytic divergence
    /// is used when present.
    pub fn divergence(&self, field: &VectorField<D>, p: &SpacetimePoint<D>) -> Result<f64> {
        if let Some(div) = field.analytic_divergence(p) {
            return Ok(div);
        }
        self.divergence_fd(field, p)
    }

    /// Central-difference divergence, ignoring any analytic divergence.
    pub fn divergence_fd(&self, field: &VectorField<D>, p: &SpacetimePoint<D>) -> Result<f64> {
        let density = |q: &SpacetimePoint<D>| -> Result<f64> { self.volume_density(q) };
        let mut sum = 0.0;
        for mu in 0..D {
            let h = fd_step(p[mu]);
            let mut plus = *p;
            let mut minus = *p;
            plus[mu] += h;
            minus[mu] -= h;
            let upper = density(&plus)? * field.at(&plus)[mu];
            let lower = density(&minus)? * field.at(&minus)[mu];
            sum += (upper - lower) / (2.0 * h);
        }
        let div = sum / density(p)?;
        if div.is_finite() {
            Ok(div)
        } else {
            Err(GeometryError::DifferentiationFailure {
                point: p.as_slice().to_vec(),
            })
        }
    }

    pub fn causal_class(&self, p: &SpacetimePoint<D>, v: &Vector<D>) -> Result<CausalCharacter> {
        if v.iter().all(|&c| c == 0.0) {
            return Err(GeometryError::ZeroVector);
        }
        Ok(CausalCharacter::classify(self.inner(p, v, v)?))
    }
}

/// The Minkowski metric components diag(1, −1, …, −1).
pub fn minkowski_eta<const D: usize>() -> MetricTensor<D> {
    let mut eta = MetricTensor::<D>::zeros();
    eta[(0, 0)] = 1.0;
    for i in 1..D {
        eta[(i, i)] = -1.0;
    }
    eta
}

/// Conformal factor of the built-in curved test metric.
pub fn conformal_factor(x: f64) -> f64 {
    1.0 + 0.1 * x.sin()
}

#[inline]
pub fn bilinear<const D: usize>(g: &MetricTensor<D>, v: &Vector<D>, w: &Vector<D>) -> f64 {
    v.dot(&(g * w))
}

fn validate_metric<const D: usize>(g: &MetricTensor<D>, p: &SpacetimePoint<D>) -> Result<()> {
    let scale = g.amax().max(f64::MIN_POSITIVE);
    let mut asymmetry = 0.0_f64;
    let mut diagonal = true;
    for i in 0..D {
        for j in (i + 1)..D {
            asymmetry = asymmetry.max((g[(i, j)] - g[(j, i)]).abs());
            if g[(i, j)] != 0.0 || g[(j, i)] != 0.0 {
                diagonal = false;
            }
        }
    }
    if asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(GeometryError::NonSymmetric {
            point: p.as_slice().to_vec(),
            asymmetry,
        });
    }
    let det = determinant(g);
    if !det.is_finite() || det.abs() < SINGULAR_TOLERANCE {
        return Err(GeometryError::Singular {
            point: p.as_slice().to_vec(),
            det,
        });
    }
    let eigenvalues: Vec<f64> = if diagonal {
        g.diagonal().iter().copied().collect()
    } else {
        symmetric_eigenvalues(g)
    };
    let positive = eigenvalues.iter().filter(|&&e| e > 0.0).count();
    let negative = eigenvalues.iter().filter(|&&e| e < 0.0).count();
    if positive != 1 || negative != D - 1 {
        return Err(GeometryError::NonLorentzian {
            point: p.as_slice().to_vec(),
            eigenvalues,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn minkowski_metric_values() {
        let g4 = Spacetime::<4>::minkowski()
            .metric_at(&Vector4::new(3.0, -1.0, 2.0, 7.0))
            .unwrap();
        assert_eq!(g4, Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0)));
        let g3 = Spacetime::<3>::minkowski()
            .metric_at(&Vector3::new(0.5, 0.0, 1.0))
            .unwrap();
        assert_eq!(g3, Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)));
    }

    #[test]
    fn conformal_metric_is_flat_where_factor_is_one() {
        let g = Spacetime::<4>::conformal_test()
            .metric_at(&Vector4::zeros())
            .unwrap();
        assert_eq!(g, minkowski_eta::<4>());
    }

    #[test]
    fn rejects_riemannian_and_singular_metrics() {
        let euclid = Spacetime::<3>::new("euclid", |_| Matrix3::identity());
        assert!(matches!(
            euclid.metric_at(&Vector3::zeros()),
            Err(GeometryError::NonLorentzian { .. })
        ));
        let flat_time = Spacetime::<3>::new("degenerate", |_| {
            Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, -1.0))
        });
        assert!(matches!(
            flat_time.metric_at(&Vector3::zeros()),
            Err(GeometryError::Singular { .. })
        ));
        let skew = Spacetime::<3>::new("skew", |_| {
            let mut g = minkowski_eta::<3>();
            g[(0, 1)] = 0.3;
            g
        });
        assert!(matches!(
            skew.metric_at(&Vector3::zeros()),
            Err(GeometryError::NonSymmetric { .. })
        ));
    }

    #[test]
    fn non_diagonal_lorentzian_metric_accepted() {
        // Minkowski in light-cone-mixed coordinates stays Lorentzian.
        let st = Spacetime::<3>::new("mixed", |_| {
            Matrix3::new(1.0, 0.5, 0.0, 0.5, -1.0, 0.0, 0.0, 0.0, -1.0)
        });
        assert!(st.metric_at(&Vector3::zeros()).is_ok());
    }

    #[test]
    fn inner_products() {
        let m4 = Spacetime::<4>::minkowski();
        let e0 = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(m4.inner(&Vector4::zeros(), &e0, &e0).unwrap(), 1.0);
        let m3 = Spacetime::<3>::minkowski();
        let p = Vector3::zeros();
        let null = Vector3::new(1.0, 1.0, 0.0);
        assert_eq!(m3.inner(&p, &null, &null).unwrap(), 0.0);
        let v = Vector3::new(2f64.sqrt(), 1.0, 0.0);
        let w = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(m3.inner(&p, &v, &w).unwrap(), 0.0);
    }

    #[test]
    fn gradients_of_coordinate_functions() {
        let m4 = Spacetime::<4>::minkowski();
        let p = Vector4::new(0.3, -0.2, 1.0, 2.0);
        let grad_t = m4.gradient(|q| q[0], &p).unwrap();
        assert_relative_eq!(grad_t, Vector4::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-10);
        let grad_x = m4.gradient(|q| q[1], &p).unwrap();
        assert_relative_eq!(grad_x, Vector4::new(0.0, -1.0, 0.0, 0.0), epsilon = 1e-10);
    }

    #[test]
    fn gradient_of_time_in_conformal_metric() {
        // Ω(π/2) = 1.1, so g^{00} = 1/1.21.
        let st = Spacetime::<4>::conformal_test();
        let p = Vector4::new(0.0, FRAC_PI_2, 0.0, 0.0);
        let grad = st.gradient_field(|q| q[0]).at(&p);
        assert_relative_eq!(grad[0], 1.0 / 1.21, epsilon = 1e-10);
        assert_relative_eq!(grad.rows(1, 3).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn gradient_of_non_finite_function_fails() {
        let st = Spacetime::<3>::minkowski();
        let err = st.gradient(|q| (q[1] - 1.0).ln(), &Vector3::new(0.0, 1.0, 0.0));
        assert!(matches!(err, Err(GeometryError::DifferentiationFailure { .. })));
    }

    #[test]
    fn normalize_timelike_cases() {
        let m4 = Spacetime::<4>::minkowski();
        let p = Vector4::zeros();
        assert_relative_eq!(
            m4.normalize_timelike(&p, &Vector4::new(2.0, 0.0, 0.0, 0.0)).unwrap(),
            Vector4::new(1.0, 0.0, 0.0, 0.0)
        );
        let m3 = Spacetime::<3>::minkowski();
        let unit = Vector3::new(2f64.sqrt(), 1.0, 0.0);
        let q = Vector3::zeros();
        assert_relative_eq!(m3.normalize_timelike(&q, &unit).unwrap(), unit, epsilon = 1e-15);
        assert_relative_eq!(
            m3.normalize_timelike(&q, &(unit * 2.0)).unwrap(),
            unit,
            epsilon = 1e-15
        );
        assert!(matches!(
            m3.normalize_timelike(&q, &Vector3::new(1.0, 1.0, 0.0)),
            Err(GeometryError::NotTimelike { .. })
        ));
        assert!(matches!(
            m3.normalize_timelike(&q, &Vector3::new(-2.0, 0.0, 0.0)),
            Err(GeometryError::PastDirected { .. })
        ));
    }

    #[test]
    fn divergence_examples() {
        let m4 = Spacetime::<4>::minkowski();
        let p = Vector4::new(0.1, 0.2, -0.3, 0.4);
        let constant = VectorField::new(|_| Vector4::new(1.0, 2.0, 3.0, 4.0));
        assert_relative_eq!(m4.divergence(&constant, &p).unwrap(), 0.0, epsilon = 1e-12);
        let radial = VectorField::new(|q: &Vector4<f64>| *q);
        assert_relative_eq!(m4.divergence(&radial, &p).unwrap(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn divergence_uses_volume_density() {
        // F = (0, 1/Ω⁴, 0, 0) has √|g|F¹ = 1 in the 4D conformal chart, so
        // div F = 0 although F¹ varies with x.
        let st = Spacetime::<4>::conformal_test();
        let f = VectorField::new(|q: &Vector4<f64>| {
            Vector4::new(0.0, conformal_factor(q[1]).powi(-4), 0.0, 0.0)
        });
        let p = Vector4::new(0.0, 0.7, 0.0, 0.0);
        assert_relative_eq!(st.divergence(&f, &p).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn causal_classes() {
        let m4 = Spacetime::<4>::minkowski();
        let p = Vector4::zeros();
        let class = |v| m4.causal_class(&p, &v).unwrap();
        assert_eq!(class(Vector4::new(1.0, 0.0, 0.0, 0.0)), CausalCharacter::Timelike);
        assert_eq!(class(Vector4::new(1.0, 1.0, 0.0, 0.0)), CausalCharacter::Lightlike);
        assert_eq!(class(Vector4::new(0.0, 1.0, 0.0, 0.0)), CausalCharacter::Spacelike);
        assert_eq!(
            m4.causal_class(&p, &Vector4::zeros()),
            Err(GeometryError::ZeroVector)
        );
    }
}
