//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use lorentz_born::born::{born_probability, verify_spacelike_identity, RegionSpec};
use lorentz_born::born::{normal_flux_integral_sampled, ContractedCurrentForm};
use lorentz_born::conservation::{
    conservation_sweep, divergence_theorem_check, probability_sweep, reynolds_check, FlowCylinder,
};
use lorentz_born::currents::{
    boosted_gaussian_current, example1_crossing_time, example1_field, rescale_velocity, rotating_drift_current,
};
use lorentz_born::field::ScalarFn;
use lorentz_born::flow::{causal_sweep, first_non_spacelike, lightlike_crossing, CrossingSearch, FlowMap};
use lorentz_born::hypersurface::builtin::{graph, polar_disk, tilted_plane, time_slice};
use lorentz_born::{
    CausalCharacter, GeometryError, ParamBox, ParametrizedHypersurface, Spacetime, SpacetimePoint, VectorField,
};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn plane_through_origin(half_width: f64, cells: usize) -> ParametrizedHypersurface<3> {
    graph(
        "t=0",
        |_| 0.0,
        ParamBox::new(vec![[-half_width, half_width]; 2]).unwrap(),
        vec![cells, cells],
    )
    .unwrap()
}

fn crossing_times() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let st = Spacetime::<3>::minkowski();
    let plane = plane_through_origin(6.0, 4);
    let mut worst_analytic = 0.0_f64;
    let mut worst_rk4 = 0.0_f64;
    for _ in 0..20 {
        let omega = rng.random_range(0.1..2.0);
        let r0 = rng.random_range(0.1..5.0);
        let theta = rng.random_range(0.0..2.0 * PI);
        let expected = example1_crossing_time(omega, r0);
        let u = [r0 * theta.cos(), r0 * theta.sin()];
        let direction = [theta.cos(), theta.sin()];
        let search = CrossingSearch::new(1.2 * example1_crossing_time(0.1, 0.1));
        let field = example1_field(omega).unwrap();

        let analytic = lightlike_crossing(&st, &FlowMap::analytic(field.clone()), &plane, &u, &direction, search)
            .unwrap()
            .unwrap_or(f64::NAN);
        let rk4 = lightlike_crossing(&st, &FlowMap::rk4(field, 1e-3), &plane, &u, &direction, search)
            .unwrap()
            .unwrap_or(f64::NAN);
        worst_analytic = worst_analytic.max((analytic - expected).abs());
        worst_rk4 = worst_rk4.max((rk4 - expected).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst_analytic < 1e-6 && worst_rk4 < 1e-4 && elapsed < 10.0,
        format!("max |err| analytic {worst_analytic:.2e} (<1e-6), rk4 {worst_rk4:.2e} (<1e-4), {elapsed:.2} s (<10 s)"),
    )
}

fn monotone_crossing() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let plane = plane_through_origin(12.0, 4);
    let flow = FlowMap::analytic(example1_field(1.0).unwrap());
    let radii: Vec<f64> = (0..=99).map(|i| 0.1 + 9.9 * i as f64 / 99.0).collect();
    let times: Vec<f64> = radii
        .iter()
        .map(|&r| {
            lightlike_crossing(&st, &flow, &plane, &[r, 0.0], &[1.0, 0.0], CrossingSearch::new(20.0).with_tolerance(1e-9))
                .unwrap()
                .unwrap_or(f64::NAN)
        })
        .collect();
    let decreasing = times.windows(2).all(|w| w[1] < w[0]);
    let last = *times.last().unwrap();
    let asymptote = (last - 1.0).abs() / 1.0;
    outcome(
        decreasing && asymptote < 0.01,
        format!("strictly decreasing over 100 radii: {decreasing}; tau*(10) = {last:.6} ({:.3}% from 1/omega)", 100.0 * asymptote),
    )
}

fn spacelike_identity() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let c = boosted_gaussian_current::<3>(&[0.5, 0.0], 1.0).unwrap();
    let square = ParamBox::new(vec![[-8.0, 8.0], [-8.0, 8.0]]).unwrap();
    let cases: Vec<(&str, ParametrizedHypersurface<3>)> = vec![
        ("flat plane", time_slice::<3>(0.0, 8.0, 32).unwrap()),
        ("tilted plane", tilted_plane::<3>(0.3, square.clone(), vec![32, 32]).unwrap()),
        (
            "curved graph",
            graph::<3, _>(
                "bump",
                |u| 0.2 * (-(u[0] * u[0] + u[1] * u[1]) / 4.0).exp() + 0.05 * u[1].sin(),
                square,
                vec![32, 32],
            )
            .unwrap(),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, h) in &cases {
        let report = verify_spacelike_identity(&st, &c.current, h, &RegionSpec::full(h)).unwrap();
        pass &= report.rel_difference < 1e-8 && report.max_pointwise_rel_difference < 1e-10;
        parts.push(format!(
            "{name}: rel {:.1e}, pointwise {:.1e}",
            report.rel_difference, report.max_pointwise_rel_difference
        ));
    }
    outcome(pass, parts.join("; "))
}

fn born_normalization() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for v in [0.0, 0.5] {
        let st = Spacetime::<3>::minkowski();
        let c = boosted_gaussian_current::<3>(&[v, 0.0], 1.0).unwrap();
        let plane = time_slice::<3>(0.0, 8.0, 16).unwrap();
        let r = born_probability(&st, &c.current, &plane, &RegionSpec::full(&plane)).unwrap();
        let err = (r.value - 1.0).abs();
        pass &= err + r.error_budget() < 1e-6;
        parts.push(format!("2+1 v={v}: |P-1| {err:.1e}, budget {:.1e}", r.error_budget()));

        let st4 = Spacetime::<4>::minkowski();
        let c4 = boosted_gaussian_current::<4>(&[v, 0.0, 0.0], 1.0).unwrap();
        let slice = time_slice::<4>(0.0, 8.0, 16).unwrap();
        let r4 = born_probability(&st4, &c4.current, &slice, &RegionSpec::full(&slice)).unwrap();
        let err4 = (r4.value - 1.0).abs();
        pass &= err4 + r4.error_budget() < 1e-6;
        parts.push(format!("3+1 v={v}: |P-1| {err4:.1e}, budget {:.1e}", r4.error_budget()));
    }
    outcome(pass, parts.join("; "))
}

fn random_rescaling(rng: &mut ChaCha8Rng) -> (String, ScalarFn<3>) {
    let amplitude = rng.random_range(0.1..0.6);
    let kx = rng.random_range(0.3..1.5);
    let ky = rng.random_range(-1.0..1.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    (
        format!("1+{amplitude:.2}sin({kx:.2}x{ky:+.2}y+{phase:.2})"),
        Arc::new(move |p: &SpacetimePoint<3>| 1.0 + amplitude * (kx * p[1] + ky * p[2] + phase).sin()),
    )
}

fn conservation() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let c = boosted_gaussian_current::<3>(&[0.5, 0.0], 1.0).unwrap();
    let plane = time_slice::<3>(0.0, 8.0, 16).unwrap();
    let tau_grid: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    let base = conservation_sweep(&st, &c, &plane, &tau_grid).unwrap();
    let mut pass = base.max_drift < 1e-6;
    let mut parts = vec![format!("f=1: drift {:.1e}", base.max_drift)];

    let samples: Vec<SpacetimePoint<3>> = plane.grid_nodes().unwrap().iter().map(|n| n.point).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for _ in 0..5 {
        let (label, f) = random_rescaling(&mut rng);
        let rescaled = rescale_velocity(&c, f, &samples).unwrap();
        let report = conservation_sweep(&st, &rescaled, &plane, &tau_grid).unwrap();
        pass &= report.max_drift < 1e-6;
        parts.push(format!("f={label}: drift {:.1e}", report.max_drift));
    }
    outcome(pass, parts.join("; "))
}

fn mixed_causal() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let radius = 2.0;
    let omega = 1.0;
    let current = VectorField::constant(Vector3::new(1.0 / (PI * radius * radius), 0.0, 0.0));
    let disk = polar_disk(0.0, radius, vec![16, 32]).unwrap();
    let flow = FlowMap::analytic(example1_field(omega).unwrap());
    let crossing = example1_crossing_time(omega, radius);
    let tau_grid: Vec<f64> = (0..=16).map(|i| 0.125 * i as f64).collect();

    let report = probability_sweep(&st, &current, &flow, &disk, &tau_grid).unwrap();

    // The induced-volume path works before the outer ring crosses and is
    // refused afterwards.
    let base = disk.sample().unwrap();
    let mut refusals = 0;
    let mut wrong = Vec::new();
    for &tau in &tau_grid {
        let region = flow.evolve_region(&base, tau).unwrap();
        match normal_flux_integral_sampled(&st, &current, &region) {
            Ok(r) if tau < crossing => {
                if (r.value - report.totals[0]).abs() > 1e-6 {
                    wrong.push(format!("tau={tau}: normal flux {}", r.value));
                }
            }
            Err(GeometryError::NotSpacelike { .. }) if tau > crossing => refusals += 1,
            other => wrong.push(format!("tau={tau}: {:?}", other.map(|r| r.value))),
        }
    }
    let expected_refusals = tau_grid.iter().filter(|&&t| t > crossing).count();

    let sweep = causal_sweep(&st, &flow, &disk, &tau_grid).unwrap();
    let timelike_late = sweep
        .iter()
        .filter(|r| r.tau == 2.0)
        .any(|r| r.character == CausalCharacter::Timelike);
    let outer_first = first_non_spacelike(&sweep).into_iter().flatten().fold(f64::INFINITY, f64::min);

    let pass = report.max_drift < 1e-6
        && wrong.is_empty()
        && refusals == expected_refusals
        && refusals > 0
        && timelike_late
        && outer_first > crossing - 0.125;
    outcome(
        pass,
        format!(
            "P(tau) drift {:.1e} over tau in [0,2] (crossing at {crossing:.6}); NotSpacelike on {refusals}/{expected_refusals} post-crossing surfaces; first non-spacelike node at tau={outer_first}; {}",
            report.max_drift,
            if wrong.is_empty() { "normal-flux path consistent".to_string() } else { wrong.join(", ") }
        ),
    )
}

fn reynolds() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let c = rotating_drift_current(1.0, [0.5, 0.0], 0.3, 0.4).unwrap();
    let plane = plane_through_origin(5.0, 48);
    let grid = |dt: f64| -> Vec<f64> {
        let n = (0.2 / dt).round() as usize;
        (0..=n).map(|i| i as f64 * dt).collect()
    };
    let coarse = reynolds_check(&st, &c, &plane, &grid(1e-2)).unwrap();
    let fine = reynolds_check(&st, &c, &plane, &grid(5e-3)).unwrap();
    let (r1, r2) = (coarse.max_residual(), fine.max_residual());
    let ratio = r1 / r2;
    let source = coarse.source_integrals.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    outcome(
        r1 < 1e-4 && (3.0..=5.0).contains(&ratio),
        format!("residual {r1:.2e} at spacing 1e-2, {r2:.2e} at 5e-3, ratio {ratio:.2} (max |source| {source:.2e})"),
    )
}

fn divergence_theorem() -> Outcome {
    let st = Spacetime::<3>::minkowski();
    let c = boosted_gaussian_current::<3>(&[0.5, 0.0], 1.0).unwrap();
    let square = plane_through_origin(8.0, 32);
    let cyl = FlowCylinder::new(square, FlowMap::analytic(c.velocity.clone()), 0.0, 1.0);
    let report = divergence_theorem_check(&st, &c.current, &cyl).unwrap();
    let captured = report.cap0_normal.value;
    outcome(
        report.cap_difference < 1e-6 && report.tube_flux.value.abs() < 1e-10 && captured > 1.0 - 1e-12,
        format!(
            "cap difference {:.1e}, tube flux {:.1e}, cap mass {captured:.15}",
            report.cap_difference, report.tube_flux.value
        ),
    )
}

/// Monte-Carlo estimate of `∫ ι*(J·μ)` over a region with uniform samples.
fn monte_carlo<const D: usize>(
    st: &Spacetime<D>,
    current: &VectorField<D>,
    h: &ParametrizedHypersurface<D>,
    region: &RegionSpec,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let form = ContractedCurrentForm::new(st, current);
    let anchor = form.eval_frame(&h.tangent_frame(&h.param_box().center()).unwrap()).unwrap();
    let sign = h.orientation().sign(anchor);
    let total_measure = region.measure();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        // Pick a rectangle with probability proportional to its measure.
        let mut pick = rng.random_range(0.0..total_measure);
        let rect = region
            .rects
            .iter()
            .find(|r| {
                pick -= r.measure();
                pick <= 0.0
            })
            .unwrap_or_else(|| region.rects.last().unwrap());
        let u: Vec<f64> = rect.intervals().iter().map(|[lo, hi]| rng.random_range(*lo..*hi)).collect();
        let value = sign * form.eval_frame(&h.tangent_frame(&u).unwrap()).unwrap() * total_measure;
        sum += value;
        sum_sq += value * value;
    }
    let n = samples as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0);
    (mean, (variance / (n - 1.0)).sqrt())
}

fn monte_carlo_oracle() -> Outcome {
    const SAMPLES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let st = Spacetime::<3>::minkowski();
    let conformal = Spacetime::<3>::conformal_test();
    let stat = boosted_gaussian_current::<3>(&[0.0, 0.0], 1.0).unwrap();
    let boosted = boosted_gaussian_current::<3>(&[0.5, 0.0], 1.0).unwrap();
    let plane = time_slice::<3>(0.0, 8.0, 16).unwrap();
    let half = RegionSpec::new(vec![ParamBox::new(vec![[0.0, 8.0], [-8.0, 8.0]]).unwrap()]);
    let pieces = RegionSpec::new(vec![
        ParamBox::new(vec![[-1.0, 0.0], [-2.0, 2.0]]).unwrap(),
        ParamBox::new(vec![[0.5, 3.0], [-1.0, 1.5]]).unwrap(),
    ]);
    let tilted = tilted_plane::<3>(0.3, ParamBox::new(vec![[-8.0, 8.0]; 2]).unwrap(), vec![32, 32]).unwrap();
    let unit = |h: &ParametrizedHypersurface<3>| RegionSpec::full(h);

    let cases: Vec<(&str, &Spacetime<3>, &VectorField<3>, &ParametrizedHypersurface<3>, RegionSpec)> = vec![
        ("static", &st, &stat.current, &plane, unit(&plane)),
        ("boosted", &st, &boosted.current, &plane, unit(&plane)),
        ("half plane", &st, &stat.current, &plane, half),
        ("two rectangles", &st, &boosted.current, &plane, pieces),
        ("tilted", &st, &boosted.current, &tilted, unit(&tilted)),
        ("conformal", &conformal, &stat.current, &plane, unit(&plane)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, st, current, h, region) in cases {
        let grid = born_probability(st, current, h, &region).unwrap();
        let (mc, se) = monte_carlo(st, current, h, &region, SAMPLES, &mut rng);
        let z = (mc - grid.value).abs() / se;
        pass &= z < 3.0;
        parts.push(format!("{name}: {z:.2} SE"));
    }
    outcome(pass, parts.join("; "))
}

fn rk4_convergence() -> Outcome {
    let field = example1_field(1.0).unwrap();
    let analytic = FlowMap::analytic(field.clone());
    let points = [
        SpacetimePoint::<3>::new(0.0, 1.0, 0.0),
        SpacetimePoint::<3>::new(0.5, -1.5, 2.0),
        SpacetimePoint::<3>::new(-1.0, 0.3, -0.7),
    ];
    let tau = 2.0;
    let error = |step: f64| -> f64 {
        let flow = FlowMap::rk4(field.clone(), step);
        points
            .iter()
            .map(|p| (flow.flow_point(p, tau).unwrap() - analytic.flow_point(p, tau).unwrap()).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (error(0.02), error(0.01));
    let ratio = e1 / e2;
    outcome(
        (12.0..=20.0).contains(&ratio),
        format!("max error {e1:.2e} at step 0.02, {e2:.2e} at 0.01, ratio {ratio:.2} (~16)"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("example-1 crossing times", crossing_times),
        ("crossing monotonicity and asymptote", monotone_crossing),
        ("spacelike identity", spacelike_identity),
        ("born normalization", born_normalization),
        ("conservation sweep and rescalings", conservation),
        ("mixed-causal conservation", mixed_causal),
        ("reynolds transport", reynolds),
        ("divergence theorem", divergence_theorem),
        ("monte-carlo oracle", monte_carlo_oracle),
        ("rk4 convergence oracle", rk4_convergence),
    ];
    let only: Option<String> = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failures = 0;
    for (name, check) in criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("{status} {name}: {} [{:.2} s]", result.detail, start.elapsed().as_secs_f64());
        if !result.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
