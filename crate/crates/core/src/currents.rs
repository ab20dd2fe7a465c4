//! Analytic currents `J = ρX` and velocity fields used as inputs.
//!
//! Gaussian packets are normalized with the constant `(2πw²)^{−k/2}` for `k`
//! spatial dimensions, so that `∫ J⁰ dᵏx = 1` on every slice `t = const`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{GeometryError, Result};
use crate::field::{ScalarFn, SpacetimePoint, Vector, VectorField};
use crate::geometry::Spacetime;

/// Relative tolerance of the `J = ρX` factorization check.
const FACTORIZATION_TOLERANCE: f64 = 1e-12;

/// Bound on the finite-difference divergence of currents declared
/// divergence-free, relative to the current's magnitude scale.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;

/// A current together with a factorization `J = ρX` into a positive density
/// and a future-directed timelike velocity field.
#[derive(Clone)]
pub struct CurrentSpec<const D: usize> {
    pub label: String,
    pub current: VectorField<D>,
    pub density: ScalarFn<D>,
    pub velocity: VectorField<D>,
    pub divergence_free: bool,
}

impl<const D: usize> fmt::Debug for CurrentSpec<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurrentSpec")
            .field("label", &self.label)
            .field("divergence_free", &self.divergence_free)
            .finish()
    }
}

impl<const D: usize> CurrentSpec<D> {
    /// Checks the factorization, future-directed timelikeness of `J` and,
    /// when claimed, vanishing divergence at each sample point.
    pub fn check_invariants(&self, st: &Spacetime<D>, samples: &[SpacetimePoint<D>]) -> Result<()> {
        for p in samples {
            let j = self.current.at(p);
            let rho = (self.density)(p);
            let x = self.velocity.at(p);
            let mismatch = (j - x * rho).amax();
            if mismatch > FACTORIZATION_TOLERANCE * j.amax().max(f64::MIN_POSITIVE) {
                return Err(GeometryError::InvalidInput(format!(
                    "{}: J != rho X at {:?} (mismatch {mismatch:e})",
                    self.label,
                    p.as_slice()
                )));
            }
            if !(rho > 0.0) {
                return Err(GeometryError::InvalidInput(format!(
                    "{}: density not positive at {:?}",
                    self.label,
                    p.as_slice()
                )));
            }
            if !(st.inner(p, &x, &x)? > 0.0 && x[0] > 0.0) {
                return Err(GeometryError::InvalidInput(format!(
                    "{}: velocity not future timelike at {:?}",
                    self.label,
                    p.as_slice()
                )));
            }
            if self.divergence_free {
                let div = st.divergence_fd(&self.current, p)?;
                let scale = j.amax().max(1e-300);
                if div.abs() > DIVERGENCE_TOLERANCE * scale.max(1.0) {
                    return Err(GeometryError::InvalidInput(format!(
                        "{}: divergence {div:e} at {:?}",
                        self.label,
                        p.as_slice()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rotating observer field in 2+1 Minkowski space:
/// `X = (√(1+ω²(x²+y²)), −ωy, ωx)`, with its closed-form flow.
pub fn example1_field(omega: f64) -> Result<VectorField<3>> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(GeometryError::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    Ok(VectorField::new(move |p: &SpacetimePoint<3>| {
        let (x, y) = (p[1], p[2]);
        let (vx, vy) = (-omega * y, omega * x);
        Vector::<3>::new((1.0 + vx * vx + vy * vy).sqrt(), vx, vy)
    })
    .with_divergence(|_| 0.0)
    .with_flow(move |tau, p| {
        let (t0, x0, y0) = (p[0], p[1], p[2]);
        let speed = (1.0 + omega * omega * (x0 * x0 + y0 * y0)).sqrt();
        let (s, c) = (omega * tau).sin_cos();
        SpacetimePoint::<3>::new(speed * tau + t0, x0 * c - y0 * s, x0 * s + y0 * c)
    }))
}

/// Crossing time `√(1+ω²r₀²)/(ω²r₀)` at which the radial direction of the
/// evolved initial disk becomes lightlike.
pub fn example1_crossing_time(omega: f64, r0: f64) -> f64 {
    (1.0 + omega * omega * r0 * r0).sqrt() / (omega * omega * r0)
}

fn gaussian_norm(width: f64, spatial_dims: usize) -> f64 {
    (2.0 * PI * width * width).powf(-(spatial_dims as f64) / 2.0)
}

/// Normalized Gaussian packet moving rigidly with velocity `v`:
/// `J = f(x − vt)·(1, v)`, `f` of width `width` centred at the origin at
/// `t = 0`. The velocity factor is the unit observer field `(1, v)/√(1−v²)`.
pub fn boosted_gaussian_current<const D: usize>(velocity: &[f64], width: f64) -> Result<CurrentSpec<D>> {
    if velocity.len() + 1 != D {
        return Err(GeometryError::InvalidInput(format!(
            "velocity has {} components, expected {}",
            velocity.len(),
            D - 1
        )));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(GeometryError::InvalidInput(format!("width must be positive, got {width}")));
    }
    let speed = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(speed < 1.0) {
        return Err(GeometryError::SuperluminalVelocity { speed });
    }
    let mut direction = Vector::<D>::zeros();
    direction[0] = 1.0;
    for (i, v) in velocity.iter().enumerate() {
        direction[i + 1] = *v;
    }
    let gamma = 1.0 / (1.0 - speed * speed).sqrt();
    let norm = gaussian_norm(width, D - 1);
    let profile = move |p: &SpacetimePoint<D>| -> f64 {
        let t = p[0];
        let r2: f64 = (1..D).map(|i| (p[i] - direction[i] * t).powi(2)).sum();
        norm * (-r2 / (2.0 * width * width)).exp()
    };

    let current = VectorField::new(move |p| direction * profile(p)).with_divergence(|_| 0.0);
    let observer = direction * gamma;
    let velocity_field = VectorField::new(move |_| observer)
        .with_divergence(|_| 0.0)
        .with_flow(move |tau, p| p + observer * tau);
    Ok(CurrentSpec {
        label: format!("boosted_gaussian(v={velocity:?}, w={width})"),
        current,
        density: Arc::new(move |p| profile(p) / gamma),
        velocity: velocity_field,
        divergence_free: true,
    })
}

/// Current `J = ρX` with `X` the rotating observer field and `ρ` a Gaussian
/// in `(x, y)` whose centre drifts along x with speed `drift`:
/// `ρ = N exp(−((x−c_x−drift·t)² + (y−c_y)²)/(2w²))`. Not conserved; its
/// divergence `X^μ ∂_μ ρ` (the field is divergence-free) is attached.
pub fn rotating_drift_current(omega: f64, center: [f64; 2], drift: f64, width: f64) -> Result<CurrentSpec<3>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(GeometryError::InvalidInput(format!("width must be positive, got {width}")));
    }
    let velocity = example1_field(omega)?;
    let norm = gaussian_norm(width, 2);
    let w2 = width * width;
    let offsets = move |p: &SpacetimePoint<3>| (p[1] - center[0] - drift * p[0], p[2] - center[1]);
    let density = move |p: &SpacetimePoint<3>| {
        let (dx, dy) = offsets(p);
        norm * (-(dx * dx + dy * dy) / (2.0 * w2)).exp()
    };
    let x_field = velocity.clone();
    let divergence = move |p: &SpacetimePoint<3>| {
        let rho = density(p);
        let (dx, dy) = offsets(p);
        let grad = Vector::<3>::new(rho * dx * drift / w2, -rho * dx / w2, -rho * dy / w2);
        x_field.at(p).dot(&grad)
    };
    let x_values = velocity.clone();
    let current = VectorField::new(move |p| x_values.at(p) * density(p)).with_divergence(divergence);
    Ok(CurrentSpec {
        label: format!("rotating_drift(omega={omega}, c={center:?}, drift={drift}, w={width})"),
        current,
        density: Arc::new(density),
        velocity,
        divergence_free: false,
    })
}

/// Constant current `J` with the trivial factorization `ρ = √g(J,J)`,
/// `X = J/ρ` in Minkowski coordinates.
pub fn constant_current<const D: usize>(components: Vector<D>) -> Result<CurrentSpec<D>> {
    let st = Spacetime::<D>::minkowski();
    let origin = SpacetimePoint::<D>::zeros();
    let norm_sq = st.inner(&origin, &components, &components)?;
    if !(norm_sq > 0.0 && components[0] > 0.0) {
        return Err(GeometryError::InvalidInput(
            "constant current must be future-directed timelike".into(),
        ));
    }
    let rho = norm_sq.sqrt();
    Ok(CurrentSpec {
        label: format!("constant({:?})", components.as_slice()),
        current: VectorField::constant(components),
        density: Arc::new(move |_| rho),
        velocity: VectorField::constant(components / rho),
        divergence_free: true,
    })
}

/// Replaces the factorization `J = ρX` by `J = (ρ/f)(fX)` for a positive
/// function `f`, checked at the sample points. `J` itself is untouched.
pub fn rescale_velocity<const D: usize>(
    spec: &CurrentSpec<D>,
    factor: ScalarFn<D>,
    samples: &[SpacetimePoint<D>],
) -> Result<CurrentSpec<D>> {
    for p in samples {
        let value = factor(p);
        if !(value > 0.0 && value.is_finite()) {
            return Err(GeometryError::NonPositiveRescaling {
                point: p.as_slice().to_vec(),
                value,
            });
        }
    }
    let density = Arc::clone(&spec.density);
    let density_factor = Arc::clone(&factor);
    Ok(CurrentSpec {
        label: format!("{} (rescaled)", spec.label),
        current: spec.current.clone(),
        density: Arc::new(move |p| density(p) / density_factor(p)),
        velocity: spec.velocity.scaled_by(factor),
        divergence_free: spec.divergence_free,
    })
}
