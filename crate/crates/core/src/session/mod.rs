//! The simulated reconstruction loop.
//!
//! A session holds one ground-truth mesh and an evolving estimate. Each
//! iteration selects a contact candidate on the estimate, sweeps the
//! probe through the truth mesh, and on contact appends a tactile
//! attractor and refits/redeforms/repropagates. Contact failures leave
//! the whole estimate untouched for that iteration.

mod config;
mod metrics;

pub use config::{DeformConfig, FieldConfig, SessionConfig};
pub use metrics::{
    records_to_csv, ComparisonSummary, IterationRecord, RecordOutcome, StrategyStats,
};

use nalgebra::{Point3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exploration::{candidate_pose, select_next_min_u, select_next_ours, Strategy};
use crate::io::load_obj;
use crate::local_deform::{apply_deformation, compute_displacement_samples, fit_interpolant};
use crate::mesh::{chamfer_distance, make_icosphere, sample_surface, segment_intersect, TriangleMesh};
use crate::sensing::{
    attractor_uncertainty, sample_visual_prior, simulate_reading, Attractor, AttractorSource,
    ContactReading,
};
use crate::template_fit::{fit_ellipsoid, instantiate_template, EllipsoidParams};
use crate::uncertainty::{init_field_with, propagate, UncertaintyField};

/// Why a probe attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The sweep segment never crossed the real surface.
    NoIntersection,
    /// The real surface was farther from the candidate than the
    /// failure threshold.
    ThresholdExceeded,
    /// The sensing pad missed the surface (contact outside the pad).
    PadMiss,
}

impl FailureReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::NoIntersection => "no_intersection",
            FailureReason::ThresholdExceeded => "threshold_exceeded",
            FailureReason::PadMiss => "pad_miss",
        }
    }
}

/// Outcome of one probe sweep.
#[derive(Debug, Clone, Copy)]
pub enum ProbeResult {
    Contact {
        point: Point3<f64>,
        reading: ContactReading,
    },
    Failure {
        reason: FailureReason,
    },
}

/// Sweeps the probe through `pose.0 +- d * pose.1` and intersects the
/// truth mesh, entering from the +normal side.
///
/// A hit farther than `failure_threshold` from the candidate is a contact
/// failure; otherwise a reading is simulated whose pad offset noise grows
/// with the prediction error (offsets drawn from a 2D Gaussian with sigma
/// scaled by `|hit - candidate| / failure_threshold`; draws beyond the pad
/// radius are sensing-part misses).
pub fn simulate_probe(
    truth: &TriangleMesh,
    pose: (Point3<f64>, Vector3<f64>),
    cfg: &SessionConfig,
    rng: &mut ChaCha8Rng,
) -> ProbeResult {
    let (point, normal) = pose;
    let start = point + normal * cfg.probe_travel_d;
    let end = point - normal * cfg.probe_travel_d;
    let hit = match segment_intersect(truth, &start, &end) {
        Some(h) => h,
        None => {
            return ProbeResult::Failure {
                reason: FailureReason::NoIntersection,
            }
        }
    };
    let miss = (hit.point - point).norm();
    if miss > cfg.failure_threshold {
        return ProbeResult::Failure {
            reason: FailureReason::ThresholdExceeded,
        };
    }

    let sigma = 0.5 * cfg.sensor.pad_radius * (miss / cfg.failure_threshold);
    let offset = Vector2::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    ) * sigma;
    match simulate_reading(offset, &cfg.sensor) {
        Ok(reading) => ProbeResult::Contact {
            point: hit.point,
            reading,
        },
        Err(Error::PadMiss) => ProbeResult::Failure {
            reason: FailureReason::PadMiss,
        },
        Err(_) => unreachable!("simulate_reading only fails with PadMiss"),
    }
}

/// Auto ridge for the displacement interpolant, as a multiple of
/// (mean site spacing)^3. Attractor displacements carry sensor noise and
/// the sites cluster along probe paths; a ridge at neighbor-kernel scale
/// keeps the weights bounded and the far field flat, where a vanishing
/// ridge lets the interpolant oscillate and drift by centimeters on
/// unexplored regions.
const AUTO_REG_SCALE: f64 = 10.0;

/// The iteration-0 fit runs this many times the configured fit budget.
const COLD_START_FIT_FACTOR: usize = 10;

/// One in-flight reconstruction run.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub cfg: SessionConfig,
    pub truth: TriangleMesh,
    truth_cloud: Vec<Point3<f64>>,
    /// Unit icosphere the template is instantiated from.
    pub template: TriangleMesh,
    pub params: EllipsoidParams,
    pub estimate: TriangleMesh,
    pub field: UncertaintyField,
    pub attractors: Vec<Attractor>,
    pub records: Vec<IterationRecord>,
    /// Probe attempts completed so far.
    iteration: usize,
    cumulative_failures: usize,
}

impl SessionState {
    /// Initializes from the visual prior alone and records iteration 0.
    pub fn new(cfg: SessionConfig, truth: TriangleMesh) -> Result<Self> {
        cfg.validate()?;
        let template = make_icosphere(1.0, cfg.template_subdivisions)?;
        let truth_cloud = sample_surface(&truth, cfg.chamfer_samples, cfg.seed)?;

        let attractors = sample_visual_prior(&truth, &cfg.visual)?;
        if attractors.is_empty() {
            return Err(Error::EmptyPrior);
        }

        let init = EllipsoidParams::modest_init(&attractors, cfg.fit.init_scale_factor)?;
        let mut state = SessionState {
            field: init_field_with(&template, cfg.field.traverse_threshold, cfg.field.mode),
            truth_cloud,
            template: template.clone(),
            params: init,
            estimate: template,
            attractors,
            records: Vec::new(),
            iteration: 0,
            cumulative_failures: 0,
            cfg,
            truth,
        };
        // The cold-start fit has no warm start to lean on and must walk
        // from the modest init all the way to the prior's shape; give it
        // a deeper budget than the per-iteration refits. The refits keep
        // the configured budget, which also keeps under-determined
        // directions (flat patches prefer infinite axes) from outrunning
        // the probes that would pin them.
        let warm_fit = state.cfg.fit;
        state.cfg.fit.max_iterations = warm_fit.max_iterations.saturating_mul(COLD_START_FIT_FACTOR);
        let refit_result = state.refit();
        state.cfg.fit = warm_fit;
        refit_result?;
        let chamfer = state.chamfer()?;
        state.records.push(IterationRecord {
            iteration: 0,
            chamfer_m: chamfer,
            cumulative_failures: 0,
            n_attractors: state.attractors.len(),
            selected_vertex: None,
            outcome: RecordOutcome::Init,
        });
        Ok(state)
    }

    /// Loads the truth mesh from `cfg.truth_mesh_path` and initializes.
    pub fn from_config(cfg: SessionConfig) -> Result<Self> {
        let truth = load_obj(std::path::Path::new(&cfg.truth_mesh_path))?;
        SessionState::new(cfg, truth)
    }

    /// Global fit (warm start), local deformation, uncertainty update.
    fn refit(&mut self) -> Result<()> {
        let fit = fit_ellipsoid(&self.attractors, &self.params, &self.cfg.fit)?;
        self.params = fit.params;
        let global = instantiate_template(&self.template, &self.params)?;

        let samples = compute_displacement_samples(&global, &self.attractors);
        let regularization = self
            .cfg
            .deform
            .regularization
            .unwrap_or_else(|| AUTO_REG_SCALE * mean_site_spacing(&samples).powi(3));
        let interpolant = fit_interpolant(&samples, regularization)?;
        let max_displacement = self
            .cfg
            .deform
            .max_displacement
            .unwrap_or_else(|| 0.5 * self.params.semi_axes().min());
        self.estimate = apply_deformation(&global, &interpolant, max_displacement)?;
        self.field = propagate(&self.field, &self.estimate, &self.attractors);
        Ok(())
    }

    fn chamfer(&self) -> Result<f64> {
        let cloud = sample_surface(&self.estimate, self.cfg.chamfer_samples, self.cfg.seed)?;
        chamfer_distance(&cloud, &self.truth_cloud)
    }

    /// Per-iteration probe noise stream; split by iteration index so
    /// paired strategy runs face identical noise at the same step.
    fn probe_rng(&self, iteration: usize) -> ChaCha8Rng {
        let seed = splitmix(
            self.cfg
                .seed
                .wrapping_add(splitmix(self.cfg.sensor.offset_noise_seed)),
        )
        .wrapping_add(iteration as u64);
        ChaCha8Rng::seed_from_u64(splitmix(seed))
    }

    /// Runs one probe iteration: select, sweep, update, record.
    ///
    /// Errs with [`Error::ExplorationComplete`] when the configured
    /// strategy has no admissible candidate left.
    pub fn run_iteration(&mut self) -> Result<IterationRecord> {
        let selected = match self.cfg.explore.strategy {
            Strategy::Ours => select_next_ours(&self.estimate, &self.field, &self.cfg.explore)?.0,
            Strategy::MinU => select_next_min_u(&self.field)?,
        };
        let pose = candidate_pose(&self.estimate, selected);
        self.iteration += 1;
        let mut rng = self.probe_rng(self.iteration);
        let probe = simulate_probe(&self.truth, pose, &self.cfg, &mut rng);

        let record = match probe {
            ProbeResult::Contact { point, reading } => {
                let uncertainty = attractor_uncertainty(&reading, &self.cfg.sensor)?;
                self.attractors.push(Attractor {
                    position: point,
                    uncertainty,
                    source: AttractorSource::Tactile,
                });
                self.refit()?;
                IterationRecord {
                    iteration: self.iteration,
                    chamfer_m: self.chamfer()?,
                    cumulative_failures: self.cumulative_failures,
                    n_attractors: self.attractors.len(),
                    selected_vertex: Some(selected),
                    outcome: RecordOutcome::Contact,
                }
            }
            ProbeResult::Failure { reason } => {
                // The estimate is not updated on failure; the error
                // metric carries over unchanged.
                self.cumulative_failures += 1;
                IterationRecord {
                    iteration: self.iteration,
                    chamfer_m: self.records.last().expect("init record").chamfer_m,
                    cumulative_failures: self.cumulative_failures,
                    n_attractors: self.attractors.len(),
                    selected_vertex: Some(selected),
                    outcome: RecordOutcome::Failure(reason),
                }
            }
        };
        self.records.push(record);
        Ok(record)
    }

    /// Probe attempts completed.
    pub fn iterations_done(&self) -> usize {
        self.iteration
    }
}

fn mean_site_spacing(samples: &[crate::local_deform::DisplacementSample]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        for (j, t) in samples.iter().enumerate() {
            if i != j {
                nearest = nearest.min((s.site - t.site).norm());
            }
        }
        total += nearest;
    }
    total / samples.len() as f64
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Outcome of a full session.
#[derive(Debug)]
pub struct SessionRun {
    pub state: SessionState,
    /// True when the exploration frontier emptied before `max_iterations`.
    pub completed_early: bool,
}

/// Runs a session to `max_iterations` probe attempts (or until the
/// exploration frontier is exhausted) against an in-memory truth mesh.
pub fn run_session_with_truth(cfg: SessionConfig, truth: TriangleMesh) -> Result<SessionRun> {
    let mut state = SessionState::new(cfg, truth)?;
    let mut completed_early = false;
    for _ in 0..state.cfg.max_iterations {
        match state.run_iteration() {
            Ok(_) => {}
            Err(Error::ExplorationComplete) => {
                completed_early = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SessionRun {
        state,
        completed_early,
    })
}

/// Runs a session, loading the truth mesh from the configured path.
pub fn run_session(cfg: SessionConfig) -> Result<SessionRun> {
    let truth = load_obj(std::path::Path::new(&cfg.truth_mesh_path))?;
    run_session_with_truth(cfg, truth)
}

/// Paired strategy comparison: for every seed, runs the session twice
/// (proposed strategy vs `min_u`) with identical priors and probe noise
/// streams, and aggregates final chamfer (mm) and failure counts.
pub fn compare_strategies(cfg: &SessionConfig, seeds: &[u64]) -> Result<ComparisonSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "compare_strategies needs at least one seed".into(),
        ));
    }
    let truth = load_obj(std::path::Path::new(&cfg.truth_mesh_path))?;
    compare_strategies_with_truth(cfg, seeds, &truth)
}

pub fn compare_strategies_with_truth(
    cfg: &SessionConfig,
    seeds: &[u64],
    truth: &TriangleMesh,
) -> Result<ComparisonSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "compare_strategies needs at least one seed".into(),
        ));
    }
    let object = std::path::Path::new(&cfg.truth_mesh_path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "object".into());

    let mut per_strategy = Vec::new();
    for strategy in [Strategy::Ours, Strategy::MinU] {
        let mut chamfer_mm = Vec::new();
        let mut failures = Vec::new();
        for &seed in seeds {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            run_cfg.visual.seed = seed;
            run_cfg.explore.strategy = strategy;
            let run = run_session_with_truth(run_cfg, truth.clone())?;
            let last = run.state.records.last().expect("records never empty");
            chamfer_mm.push(last.chamfer_m * 1000.0);
            failures.push(last.cumulative_failures as f64);
        }
        per_strategy.push(StrategyStats {
            strategy,
            chamfer_mm_mean: mean(&chamfer_mm),
            chamfer_mm_std: std_dev(&chamfer_mm),
            failures_mean: mean(&failures),
            failures_std: std_dev(&failures),
        });
    }

    Ok(ComparisonSummary {
        object,
        seeds: seeds.to_vec(),
        stats: per_strategy,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); zero for a single observation.
fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
