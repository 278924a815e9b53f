//! Flat key/value session configuration.
//!
//! One `key = value` per line, `#` comments, unknown keys rejected.
//! `render` emits every key in a fixed order so a rendered config parses
//! back to the same session.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::exploration::{ExplorationConfig, Strategy};
use crate::sensing::{SensorModel, VisualPriorConfig};
use crate::template_fit::FitConfig;
use crate::uncertainty::{PropagationMode, DEFAULT_TRAVERSE_THRESHOLD};

/// Local-deformation knobs; `None` means derive from the fitted shape.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeformConfig {
    /// Ridge on the kernel block; default `10 * (mean site spacing)^3`.
    pub regularization: Option<f64>,
    /// Clamp on per-vertex displacement; default half the smallest
    /// fitted semi-axis.
    pub max_displacement: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct FieldConfig {
    pub traverse_threshold: usize,
    pub mode: PropagationMode,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            traverse_threshold: DEFAULT_TRAVERSE_THRESHOLD,
            mode: PropagationMode::Literal,
        }
    }
}

/// Everything one reconstruction run needs.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub truth_mesh_path: String,
    pub template_subdivisions: u32,
    /// Probe travel half-distance `d`, meters.
    pub probe_travel_d: f64,
    /// Contact-failure threshold, meters.
    pub failure_threshold: f64,
    /// Probe attempts per session (the visual-only iteration 0 is extra).
    pub max_iterations: usize,
    pub seed: u64,
    /// Points per cloud for the chamfer metric.
    pub chamfer_samples: usize,
    pub fit: FitConfig,
    pub visual: VisualPriorConfig,
    pub sensor: SensorModel,
    pub explore: ExplorationConfig,
    pub deform: DeformConfig,
    pub field: FieldConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            truth_mesh_path: String::new(),
            template_subdivisions: 3,
            probe_travel_d: 0.05,
            failure_threshold: 0.015,
            max_iterations: 50,
            seed: 0,
            chamfer_samples: 20_000,
            fit: FitConfig::default(),
            visual: VisualPriorConfig::default(),
            sensor: SensorModel::default(),
            explore: ExplorationConfig::default(),
            deform: DeformConfig::default(),
            field: FieldConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.truth_mesh_path.is_empty() {
            return Err(Error::Config("truth_mesh is required".into()));
        }
        if !(self.probe_travel_d > 0.0) {
            return Err(Error::Config("probe_travel_d must be positive".into()));
        }
        if !(self.failure_threshold > 0.0) {
            return Err(Error::Config("failure_threshold must be positive".into()));
        }
        if self.template_subdivisions > 6 {
            return Err(Error::Config(
                "template_subdivisions must be in [0, 6]".into(),
            ));
        }
        if self.chamfer_samples == 0 {
            return Err(Error::Config("chamfer_samples must be positive".into()));
        }
        if let Some(r) = self.deform.regularization {
            if r < 0.0 {
                return Err(Error::Config("deform_regularization must be >= 0".into()));
            }
        }
        if let Some(d) = self.deform.max_displacement {
            if !(d > 0.0) {
                return Err(Error::Config("deform_max_displacement must be > 0".into()));
            }
        }
        self.fit.validate().map_err(as_config)?;
        self.visual.validate().map_err(as_config)?;
        self.sensor.validate().map_err(as_config)?;
        self.explore.validate().map_err(as_config)?;
        Ok(())
    }

    /// Full key/value rendering; parses back to an identical config.
    pub fn render(&self) -> String {
        let v = &self.visual;
        let mut s = String::new();
        let mut kv = |k: &str, val: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&val);
            s.push('\n');
        };
        kv("truth_mesh", self.truth_mesh_path.clone());
        kv("template_subdivisions", self.template_subdivisions.to_string());
        kv("probe_travel_d", self.probe_travel_d.to_string());
        kv("failure_threshold", self.failure_threshold.to_string());
        kv("max_iterations", self.max_iterations.to_string());
        kv("seed", self.seed.to_string());
        kv("chamfer_samples", self.chamfer_samples.to_string());
        kv("strategy", self.explore.strategy.as_str().to_string());
        kv("fit_learning_rate", self.fit.learning_rate.to_string());
        kv("fit_max_iterations", self.fit.max_iterations.to_string());
        kv("fit_convergence_tol", self.fit.convergence_tol.to_string());
        kv("fit_init_scale_factor", self.fit.init_scale_factor.to_string());
        kv(
            "fit_confidence_weighting",
            self.fit.confidence_weighting.to_string(),
        );
        kv(
            "visual_view_direction",
            format!(
                "{} {} {}",
                v.view_direction.x, v.view_direction.y, v.view_direction.z
            ),
        );
        kv("visual_cone_half_angle", v.cone_half_angle.to_string());
        kv("visual_n_points", v.n_points.to_string());
        kv("visual_position_sigma", v.position_noise_sigma.to_string());
        kv("visual_uncertainty", v.visual_uncertainty.to_string());
        kv("visual_seed", v.seed.to_string());
        kv("sensor_u_max", self.sensor.u_max.to_string());
        kv("sensor_pad_radius", self.sensor.pad_radius.to_string());
        kv("sensor_nominal_force", self.sensor.nominal_force.to_string());
        kv("sensor_offset_seed", self.sensor.offset_noise_seed.to_string());
        kv("explore_alpha_g", self.explore.alpha_g.to_string());
        kv("explore_alpha_u", self.explore.alpha_u.to_string());
        kv("explore_u_prime_min", self.explore.u_prime_min.to_string());
        kv("explore_u_prime_max", self.explore.u_prime_max.to_string());
        kv(
            "deform_regularization",
            match self.deform.regularization {
                Some(r) => r.to_string(),
                None => "auto".into(),
            },
        );
        kv(
            "deform_max_displacement",
            match self.deform.max_displacement {
                Some(d) => d.to_string(),
                None => "auto".into(),
            },
        );
        kv(
            "field_traverse_threshold",
            self.field.traverse_threshold.to_string(),
        );
        kv("field_mode", self.field.mode.as_str().to_string());
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: HashMap<String, String> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if map
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }

        let mut cfg = SessionConfig::default();
        let mut visual_seed_set = false;

        let known = [
            "truth_mesh",
            "template_subdivisions",
            "probe_travel_d",
            "failure_threshold",
            "max_iterations",
            "seed",
            "chamfer_samples",
            "strategy",
            "fit_learning_rate",
            "fit_max_iterations",
            "fit_convergence_tol",
            "fit_init_scale_factor",
            "fit_confidence_weighting",
            "visual_view_direction",
            "visual_cone_half_angle",
            "visual_n_points",
            "visual_position_sigma",
            "visual_uncertainty",
            "visual_seed",
            "sensor_u_max",
            "sensor_pad_radius",
            "sensor_nominal_force",
            "sensor_offset_seed",
            "explore_alpha_g",
            "explore_alpha_u",
            "explore_u_prime_min",
            "explore_u_prime_max",
            "deform_regularization",
            "deform_max_displacement",
            "field_traverse_threshold",
            "field_mode",
        ];
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key {key:?}")));
            }
        }

        for (key, value) in &map {
            match key.as_str() {
                "truth_mesh" => cfg.truth_mesh_path = value.clone(),
                "template_subdivisions" => cfg.template_subdivisions = parse_num(key, value)?,
                "probe_travel_d" => cfg.probe_travel_d = parse_num(key, value)?,
                "failure_threshold" => cfg.failure_threshold = parse_num(key, value)?,
                "max_iterations" => cfg.max_iterations = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "chamfer_samples" => cfg.chamfer_samples = parse_num(key, value)?,
                "strategy" => {
                    cfg.explore.strategy = match value.as_str() {
                        "ours" => Strategy::Ours,
                        "min_u" => Strategy::MinU,
                        other => {
                            return Err(Error::Config(format!(
                                "strategy must be 'ours' or 'min_u', got {other:?}"
                            )))
                        }
                    }
                }
                "fit_learning_rate" => cfg.fit.learning_rate = parse_num(key, value)?,
                "fit_max_iterations" => cfg.fit.max_iterations = parse_num(key, value)?,
                "fit_convergence_tol" => cfg.fit.convergence_tol = parse_num(key, value)?,
                "fit_init_scale_factor" => cfg.fit.init_scale_factor = parse_num(key, value)?,
                "fit_confidence_weighting" => {
                    cfg.fit.confidence_weighting = parse_bool(key, value)?
                }
                "visual_view_direction" => {
                    let parts: Vec<f64> = value
                        .split_whitespace()
                        .map(|p| p.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| {
                            Error::Config(format!("visual_view_direction: bad vector {value:?}"))
                        })?;
                    if parts.len() != 3 {
                        return Err(Error::Config(
                            "visual_view_direction needs 3 components".into(),
                        ));
                    }
                    cfg.visual.view_direction = Vector3::new(parts[0], parts[1], parts[2]);
                }
                "visual_cone_half_angle" => cfg.visual.cone_half_angle = parse_num(key, value)?,
                "visual_n_points" => cfg.visual.n_points = parse_num(key, value)?,
                "visual_position_sigma" => {
                    cfg.visual.position_noise_sigma = parse_num(key, value)?
                }
                "visual_uncertainty" => cfg.visual.visual_uncertainty = parse_num(key, value)?,
                "visual_seed" => {
                    cfg.visual.seed = parse_num(key, value)?;
                    visual_seed_set = true;
                }
                "sensor_u_max" => cfg.sensor.u_max = parse_num(key, value)?,
                "sensor_pad_radius" => cfg.sensor.pad_radius = parse_num(key, value)?,
                "sensor_nominal_force" => cfg.sensor.nominal_force = parse_num(key, value)?,
                "sensor_offset_seed" => cfg.sensor.offset_noise_seed = parse_num(key, value)?,
                "explore_alpha_g" => cfg.explore.alpha_g = parse_num(key, value)?,
                "explore_alpha_u" => cfg.explore.alpha_u = parse_num(key, value)?,
                "explore_u_prime_min" => cfg.explore.u_prime_min = parse_num(key, value)?,
                "explore_u_prime_max" => cfg.explore.u_prime_max = parse_num(key, value)?,
                "deform_regularization" => {
                    cfg.deform.regularization = parse_auto(key, value)?;
                }
                "deform_max_displacement" => {
                    cfg.deform.max_displacement = parse_auto(key, value)?;
                }
                "field_traverse_threshold" => {
                    cfg.field.traverse_threshold = parse_num(key, value)?
                }
                "field_mode" => {
                    cfg.field.mode = match value.as_str() {
                        "literal" => PropagationMode::Literal,
                        "complement" => PropagationMode::Complement,
                        other => {
                            return Err(Error::Config(format!(
                                "field_mode must be 'literal' or 'complement', got {other:?}"
                            )))
                        }
                    }
                }
                _ => unreachable!("key set checked above"),
            }
        }

        if !visual_seed_set {
            cfg.visual.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn as_config(e: Error) -> Error {
    Error::Config(e.to_string())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected bool, got {other:?}"))),
    }
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        Ok(Some(parse_num::<f64>(key, value)?))
    }
}
