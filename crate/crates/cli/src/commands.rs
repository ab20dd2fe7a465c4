//! Subcommand implementations. Each writes its files into the output
//! directory and returns the JSON summary printed on stdout.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use lorentz_born::born::{normal_flux_integral_sampled, positivity_check};
use lorentz_born::conservation::probability_sweep;
use lorentz_born::currents::{example1_crossing_time, example1_field, rescale_velocity};
use lorentz_born::field::ScalarFn;
use lorentz_born::flow::{causal_sweep, first_non_spacelike, lightlike_crossing, CrossingSearch};
use lorentz_born::hypersurface::builtin::polar_disk;
use lorentz_born::{
    born_probability, conservation_sweep, divergence_theorem_check, reynolds_check, verify_spacelike_identity,
    FlowCylinder, FlowMap, GeometryError, SpacetimePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, IntegratorConfig};
use crate::error::{CliError, CliResult};
use crate::expr::{COORDINATES, PARAMETERS};
use crate::output::{float, json_string, write_json, CsvOutput};
use crate::scenario::{linspace, Scenario};

macro_rules! by_dimension {
    ($cfg:expr, $f:ident($($arg:expr),*)) => {
        match $cfg.spacetime.dim {
            3 => $f::<3>($($arg),*),
            4 => $f::<4>($($arg),*),
            d => Err(CliError::Config(format!("unsupported dimension {d}"))),
        }
    };
}

// ---------------------------------------------------------------- example1

#[derive(Serialize)]
struct Example1Summary {
    omega: f64,
    r_max: f64,
    tau_max: f64,
    crossings: usize,
    max_abs_error: f64,
    sweep_tau_max: f64,
    sweep_rows: usize,
    files: Vec<String>,
}

pub fn example1(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    let e = &cfg.example1;
    if !(e.omega > 0.0 && e.omega.is_finite()) {
        return Err(CliError::Config(format!("example1.omega must be positive, got {}", e.omega)));
    }
    if !(e.r_max > 0.0 && e.r_max.is_finite()) || e.grid < 1 || e.frames < 1 || e.angular < 2 {
        return Err(CliError::Config(
            "example1 needs r_max > 0, grid >= 1, frames >= 1 and angular >= 2".into(),
        ));
    }
    let config_json = cfg.to_json();
    let st = lorentz_born::Spacetime::<3>::minkowski();
    let field = example1_field(e.omega)?;
    let flow = match e.integrator {
        IntegratorConfig::Analytic => FlowMap::analytic(field),
        IntegratorConfig::Rk4 => FlowMap::rk4(field.values_only(), cfg.flow.step.unwrap_or(1e-3)),
    };

    let radii: Vec<f64> = (1..=e.grid).map(|k| k as f64 * e.r_max / e.grid as f64).collect();
    let tau_max = e.tau_max.unwrap_or(1.1 * example1_crossing_time(e.omega, radii[0]));
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err(CliError::Config(format!("example1.tau_max must be positive, got {tau_max}")));
    }
    // The radial probe reaches slightly past the rim.
    let probe_disk = polar_disk(0.0, 1.01 * e.r_max, vec![2, 2])?;
    let search = CrossingSearch::new(tau_max).with_tolerance(1e-10);
    let mut table = CsvOutput::create(out, "example1_crossings.csv", &config_json, &["r0", "analytic", "numeric", "abs_err"])?;
    let mut crossings = 0;
    let mut max_abs_error = 0.0_f64;
    for &r0 in &radii {
        let Some(numeric) = lightlike_crossing(&st, &flow, &probe_disk, &[r0, 0.0], &[1.0, 0.0], search)? else {
            continue;
        };
        let analytic = example1_crossing_time(e.omega, r0);
        let err = (numeric - analytic).abs();
        max_abs_error = max_abs_error.max(err);
        crossings += 1;
        table.row([float(r0), float(analytic), float(numeric), float(err)])?;
    }
    let crossings_path = table.finish()?;

    let sweep_tau_max = e.sweep_tau_max.unwrap_or(2.0 * example1_crossing_time(e.omega, e.r_max));
    let disk = polar_disk(0.0, e.r_max, vec![e.grid.max(2), e.angular])?;
    let tau_grid = linspace(0.0, sweep_tau_max, e.frames + 1);
    let rows = causal_sweep(&st, &flow, &disk, &tau_grid)?;
    let mut sweep = CsvOutput::create(
        out,
        "example1_sweep.csv",
        &config_json,
        &["tau", "r0", "theta", "t", "x", "y", "causal_class"],
    )?;
    for row in &rows {
        sweep.row([
            float(row.tau),
            float(row.param[0]),
            float(row.param[1]),
            float(row.point[0]),
            float(row.point[1]),
            float(row.point[2]),
            row.character.as_str().to_string(),
        ])?;
    }
    let sweep_path = sweep.finish()?;

    json_string(&Example1Summary {
        omega: e.omega,
        r_max: e.r_max,
        tau_max,
        crossings,
        max_abs_error,
        sweep_tau_max,
        sweep_rows: rows.len(),
        files: vec![crossings_path.display().to_string(), sweep_path.display().to_string()],
    })
}

// ------------------------------------------------------------------ verify

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    pass: bool,
    skipped: bool,
    metrics: BTreeMap<&'static str, f64>,
    detail: String,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            pass: true,
            skipped: false,
            metrics: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn skip(mut self, why: impl Into<String>) -> Self {
        self.skipped = true;
        self.detail = why.into();
        self
    }

    fn fail(mut self, why: impl Into<String>) -> Self {
        self.pass = false;
        self.detail = why.into();
        self
    }

    fn metric(&mut self, key: &'static str, value: f64) {
        self.metrics.insert(key, value);
    }

    /// Records `value` and requires it to stay below `tol`.
    fn bound(&mut self, key: &'static str, value: f64, tol: f64) {
        self.metric(key, value);
        if !(value.abs() < tol) {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&format!("{key} = {value:e} exceeds {tol:e}"));
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    pass: bool,
    suites: Vec<Suite>,
    config: &'a ExperimentConfig,
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    let suites = by_dimension!(cfg, verify_suites(cfg))?;
    let pass = suites.iter().all(|s| s.pass);
    let report = VerifyReport {
        pass,
        suites,
        config: cfg,
    };
    let (path, text) = write_json(out, "verify.json", &report)?;
    if pass {
        Ok(text)
    } else {
        let failed: Vec<&str> = report.suites.iter().filter(|s| !s.pass).map(|s| s.name).collect();
        print!("{text}");
        Err(CliError::VerificationFailed(format!(
            "failed suites: {} (report in {})",
            failed.join(", "),
            path.display()
        )))
    }
}

/// Turns a "surface is not spacelike" refusal into a failed suite.
fn refusal(suite: Suite, result: GeometryError) -> CliResult<Suite> {
    match result {
        e @ GeometryError::NotSpacelike { .. } => Ok(suite.fail(e.to_string())),
        e => Err(e.into()),
    }
}

fn verify_suites<const D: usize>(cfg: &ExperimentConfig) -> CliResult<Vec<Suite>> {
    let s = Scenario::<D>::build(cfg)?;
    let tol = &cfg.verify;
    let mut suites = Vec::new();

    let mut norm = Suite::new("normalization");
    let p = born_probability(&s.st, &s.current.current, &s.surface, &s.region)?;
    norm.metric("value", p.value);
    norm.metric("error_estimate", p.error_estimate);
    norm.metric("truncation_estimate", p.truncation_estimate);
    match tol.expected_total {
        Some(expected) => norm.bound("deviation_plus_budget", (p.value - expected).abs() + p.error_budget(), tol.normalization_tol),
        None => norm = norm.skip("no expected total configured"),
    }
    suites.push(norm);

    let mut identity = Suite::new("spacelike_identity");
    suites.push(match verify_spacelike_identity(&s.st, &s.current.current, &s.surface, &s.region) {
        Ok(r) => {
            identity.metric("normal_flux", r.normal_flux.value);
            identity.metric("contracted", r.contracted.value);
            identity.bound("rel_difference", r.rel_difference, tol.identity_tol);
            identity.bound("max_pointwise_rel_difference", r.max_pointwise_rel_difference, tol.pointwise_tol);
            identity
        }
        Err(e) => refusal(identity, e)?,
    });

    let mut conservation = Suite::new("conservation");
    let mut rescaled = Suite::new("seeded_rescaling");
    if s.current.divergence_free {
        let r = conservation_sweep(&s.st, &s.current, &s.surface, &s.tau_grid)?;
        conservation.bound("max_drift", r.max_drift, tol.drift_tol);
        conservation.metric("max_error_estimate", r.max_error_estimate());

        let samples: Vec<SpacetimePoint<D>> = s.surface.grid_nodes()?.iter().map(|n| n.point).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = 0.0_f64;
        let mut labels = Vec::new();
        for _ in 0..tol.rescalings {
            let (label, f) = random_rescaling::<D>(&mut rng);
            let spec = rescale_velocity(&s.current, f, &samples)?;
            let r = conservation_sweep(&s.st, &spec, &s.surface, &s.tau_grid)?;
            worst = worst.max(r.max_drift);
            labels.push(label);
        }
        rescaled.bound("max_drift", worst, tol.drift_tol);
        rescaled.metric("count", tol.rescalings as f64);
        if rescaled.pass {
            rescaled.detail = labels.join(", ");
        }
    } else {
        conservation = conservation.skip("current is not divergence-free");
        rescaled = rescaled.skip("current is not divergence-free");
    }
    suites.push(conservation);
    suites.push(rescaled);

    let mut reynolds = Suite::new("reynolds_transport");
    let r = reynolds_check(&s.st, &s.current, &s.surface, &s.tau_grid)?;
    reynolds.bound("max_residual", r.max_residual(), tol.reynolds_tol);
    reynolds.metric("max_error_estimate", r.max_error_estimate());
    suites.push(reynolds);

    let mut divergence = Suite::new("divergence_theorem");
    if s.current.divergence_free {
        let cyl = FlowCylinder::new(
            s.surface.clone(),
            FlowMap::analytic(s.current.velocity.clone()),
            0.0,
            tol.cylinder_tau,
        );
        divergence = match divergence_theorem_check(&s.st, &s.current.current, &cyl) {
            Ok(r) => {
                divergence.metric("cap0", r.cap0_normal.value);
                divergence.metric("cap1", r.cap1_normal.value);
                divergence.bound("cap_difference", r.cap_difference, tol.cap_tol);
                divergence.bound("tube_flux", r.tube_flux.value, tol.tube_tol);
                divergence.bound("boundary_residual", r.boundary_residual, tol.cap_tol);
                divergence
            }
            Err(e) => refusal(divergence, e)?,
        };
    } else {
        divergence = divergence.skip("current is not divergence-free");
    }
    suites.push(divergence);
    Ok(suites)
}

/// `f = 1 + a·sin(k_x x + k_y y + φ)` with `a < 1`, so `f > 0`.
fn random_rescaling<const D: usize>(rng: &mut ChaCha8Rng) -> (String, ScalarFn<D>) {
    let amplitude = rng.random_range(0.1..0.6);
    let kx = rng.random_range(0.3..1.5);
    let ky = rng.random_range(-1.0..1.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    (
        format!("1+{amplitude:.4}*sin({kx:.4}*x{ky:+.4}*y+{phase:.4})"),
        Arc::new(move |p: &SpacetimePoint<D>| 1.0 + amplitude * (kx * p[1] + ky * p[2] + phase).sin()),
    )
}

// -------------------------------------------------------------------- born

#[derive(Serialize)]
struct BornRecord {
    surface: String,
    region: Vec<Vec<[f64; 2]>>,
    value: f64,
    error_estimate: f64,
    truncation_estimate: f64,
    nodes: usize,
    flags: BornFlags,
}

#[derive(Serialize)]
struct BornFlags {
    tangent_nodes: usize,
    negative_nodes: usize,
    /// Whether the spacelike normal-flux integral is defined on the region.
    spacelike: bool,
}

pub fn born(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    let record = by_dimension!(cfg, born_record(cfg))?;
    Ok(write_json(out, "born.json", &record)?.1)
}

fn born_record<const D: usize>(cfg: &ExperimentConfig) -> CliResult<BornRecord> {
    let s = Scenario::<D>::build(cfg)?;
    let p = born_probability(&s.st, &s.current.current, &s.surface, &s.region)?;
    let positivity = positivity_check(&s.st, &s.current.current, &s.surface)?;
    let spacelike = if s.region.is_empty() {
        true
    } else {
        match normal_flux_integral_sampled(&s.st, &s.current.current, &s.surface.sample_region(&s.region.rects)?) {
            Ok(_) => true,
            Err(GeometryError::NotSpacelike { .. }) => false,
            Err(e) => return Err(e.into()),
        }
    };
    Ok(BornRecord {
        surface: s.surface.label().to_string(),
        region: s.region.rects.iter().map(|r| r.intervals().to_vec()).collect(),
        value: p.value,
        error_estimate: p.error_estimate,
        truncation_estimate: p.truncation_estimate,
        nodes: p.nodes,
        flags: BornFlags {
            tangent_nodes: positivity.tangent_count,
            negative_nodes: positivity.negative_count,
            spacelike,
        },
    })
}

// ------------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepSummary {
    samples: usize,
    max_drift: f64,
    max_residual: f64,
    max_error_estimate: f64,
    file: String,
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    by_dimension!(cfg, sweep_dim(cfg, out))
}

fn sweep_dim<const D: usize>(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    let s = Scenario::<D>::build(cfg)?;
    let report = probability_sweep(&s.st, &s.current.current, &s.flow, &s.surface, &s.tau_grid)?;
    let mut csv = CsvOutput::create(out, "conservation.csv", &cfg.to_json(), &["tau", "total", "error_estimate", "residual"])?;
    for row in report.rows() {
        csv.row(row.map(float))?;
    }
    let path = csv.finish()?;
    json_string(&SweepSummary {
        samples: report.tau_grid.len(),
        max_drift: report.max_drift,
        max_residual: report.max_residual(),
        max_error_estimate: report.max_error_estimate(),
        file: path.display().to_string(),
    })
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct ClassifySummary {
    nodes: usize,
    /// Per τ: counts of each causal character.
    frames: Vec<FrameCounts>,
    /// Earliest sampled τ at which some node is no longer spacelike.
    first_non_spacelike: Option<f64>,
    file: String,
}

#[derive(Serialize)]
struct FrameCounts {
    tau: f64,
    counts: BTreeMap<&'static str, usize>,
}

pub fn classify(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    by_dimension!(cfg, classify_dim(cfg, out))
}

fn classify_dim<const D: usize>(cfg: &ExperimentConfig, out: &Path) -> CliResult<String> {
    let s = Scenario::<D>::build(cfg)?;
    let rows = causal_sweep(&s.st, &s.flow, &s.surface, &s.tau_grid)?;
    let mut header = vec!["tau", "node"];
    header.extend(&PARAMETERS[..D - 1]);
    header.extend(&COORDINATES[..D]);
    header.push("causal_class");
    let mut csv = CsvOutput::create(out, "classify.csv", &cfg.to_json(), &header)?;
    let mut frames: Vec<FrameCounts> = Vec::new();
    for row in &rows {
        let mut fields = vec![float(row.tau), row.node.to_string()];
        fields.extend(row.param.iter().chain(&row.point).map(|&x| float(x)));
        fields.push(row.character.as_str().to_string());
        csv.row(&fields)?;
        if frames.last().map(|f| f.tau) != Some(row.tau) {
            frames.push(FrameCounts {
                tau: row.tau,
                counts: BTreeMap::new(),
            });
        }
        let counts = &mut frames.last_mut().expect("frame pushed").counts;
        *counts.entry(row.character.as_str()).or_insert(0) += 1;
    }
    let path = csv.finish()?;
    let first = first_non_spacelike(&rows).into_iter().flatten().fold(None, |m: Option<f64>, t| {
        Some(m.map_or(t, |m| m.min(t)))
    });
    json_string(&ClassifySummary {
        nodes: rows.iter().map(|r| r.node + 1).max().unwrap_or(0),
        frames,
        first_non_spacelike: first,
        file: path.display().to_string(),
    })
}
