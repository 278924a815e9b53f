//! Attractors and the sensors that produce them.
//!
//! An attractor is a measured surface point, visual or tactile, with an
//! uncertainty in `[0, 1]`. Tactile uncertainty comes from the measured
//! force/torque balance: a contact held at the pad center reads zero
//! torque and zero uncertainty, one at the pad edge approaches `u_max`.

use nalgebra::{Point3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mesh::{SurfaceSampler, TriangleMesh};

/// Origin of a surface evidence point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorSource {
    Visual,
    Tactile,
}

impl AttractorSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttractorSource::Visual => "visual",
            AttractorSource::Tactile => "tactile",
        }
    }
}

/// A surface evidence point with its measurement uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct Attractor {
    pub position: Point3<f64>,
    /// In `[0, 1]`; lower means more trusted.
    pub uncertainty: f64,
    pub source: AttractorSource,
}

/// One force/torque sample at a detected contact.
#[derive(Debug, Clone, Copy)]
pub struct ContactReading {
    /// Normal force, newtons; nonnegative at contact.
    pub force_z: f64,
    pub torque_x: f64,
    pub torque_y: f64,
}

/// Simulated tactile sensor parameters.
#[derive(Debug, Clone, Copy)]
pub struct SensorModel {
    /// Maximum allowed uncertainty for tactile attractors, in `(0, 1]`.
    pub u_max: f64,
    /// Radius of the circular sensing pad, meters.
    pub pad_radius: f64,
    /// Force applied when the probe holds a contact, newtons.
    pub nominal_force: f64,
    /// Extra entropy mixed into the per-iteration probe noise streams.
    pub offset_noise_seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            u_max: 0.5,
            pad_radius: 0.01,
            nominal_force: 1.0,
            offset_noise_seed: 0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.u_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "u_max must be in (0, 1], got {}",
                self.u_max
            )));
        }
        if !(self.pad_radius > 0.0) {
            return Err(Error::InvalidParameter("pad_radius must be positive".into()));
        }
        if !(self.nominal_force > 0.0) {
            return Err(Error::InvalidParameter(
                "nominal_force must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Uncertainty of a tactile attractor from its contact reading:
/// `u = u_max * (|Tx| + |Ty|) / (2|Fz| + |Tx| + |Ty|)`.
pub fn attractor_uncertainty(reading: &ContactReading, model: &SensorModel) -> Result<f64> {
    let torque = reading.torque_x.abs() + reading.torque_y.abs();
    let force = reading.force_z.abs();
    if torque == 0.0 && force == 0.0 {
        return Err(Error::NoContact);
    }
    Ok(model.u_max * torque / (2.0 * force + torque))
}

/// Reading produced when the pad holds a contact offset from its center.
///
/// Rigid moment-arm model: full nominal force plus torques proportional
/// to the in-plane offset. Offsets beyond the pad radius mean the sensing
/// part missed the surface.
pub fn simulate_reading(contact_offset: Vector2<f64>, model: &SensorModel) -> Result<ContactReading> {
    if contact_offset.norm() > model.pad_radius {
        return Err(Error::PadMiss);
    }
    Ok(ContactReading {
        force_z: model.nominal_force,
        torque_x: model.nominal_force * contact_offset.y,
        torque_y: model.nominal_force * contact_offset.x,
    })
}

/// Single-view visual prior parameters.
#[derive(Debug, Clone, Copy)]
pub struct VisualPriorConfig {
    /// Direction the camera looks along (from viewer toward the object).
    pub view_direction: Vector3<f64>,
    /// Half angle of the visibility cone about the viewing axis, radians.
    pub cone_half_angle: f64,
    pub n_points: usize,
    /// Isotropic position noise, meters.
    pub position_noise_sigma: f64,
    /// Fixed uncertainty assigned to every visual attractor.
    pub visual_uncertainty: f64,
    pub seed: u64,
}

impl Default for VisualPriorConfig {
    fn default() -> Self {
        VisualPriorConfig {
            view_direction: Vector3::new(-1.0, 0.0, 0.0),
            cone_half_angle: 0.65,
            n_points: 60,
            position_noise_sigma: 0.001,
            visual_uncertainty: 0.4,
            seed: 0,
        }
    }
}

impl VisualPriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "cone_half_angle must be in (0, pi/2), got {}",
                self.cone_half_angle
            )));
        }
        if self.n_points == 0 {
            return Err(Error::InvalidParameter("n_points must be positive".into()));
        }
        if self.view_direction.norm() <= 1e-12 {
            return Err(Error::InvalidParameter(
                "view_direction must be nonzero".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.visual_uncertainty) {
            return Err(Error::InvalidParameter(
                "visual_uncertainty must be in [0, 1]".into(),
            ));
        }
        if self.position_noise_sigma < 0.0 {
            return Err(Error::InvalidParameter(
                "position_noise_sigma must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Samples the patch of the truth surface a fixed single-view camera
/// would see: points whose outward normal faces the viewer and that lie
/// inside the cone about the viewing axis through the mesh centroid.
/// Positions are perturbed with isotropic Gaussian noise.
pub fn sample_visual_prior(
    truth: &TriangleMesh,
    cfg: &VisualPriorConfig,
) -> Result<Vec<Attractor>> {
    cfg.validate()?;
    let sampler = SurfaceSampler::new(truth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let axis = -cfg.view_direction.normalize();
    let cos_threshold = cfg.cone_half_angle.cos();
    let centroid = truth.centroid();

    let mut out = Vec::with_capacity(cfg.n_points);
    let max_attempts = 100_000 + 10_000 * cfg.n_points;
    let mut attempts = 0;
    while out.len() < cfg.n_points && attempts < max_attempts {
        attempts += 1;
        let (p, face) = sampler.sample(&mut rng);
        let normal = truth.face_normal(face);
        if normal.dot(&cfg.view_direction) >= 0.0 {
            continue;
        }
        let radial = p - centroid;
        let len = radial.norm();
        if len <= 1e-12 || radial.dot(&axis) < cos_threshold * len {
            continue;
        }
        let noise = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ) * cfg.position_noise_sigma;
        out.push(Attractor {
            position: p + noise,
            uncertainty: cfg.visual_uncertainty,
            source: AttractorSource::Visual,
        });
    }
    if out.len() < cfg.n_points {
        return Err(Error::EmptyPrior);
    }
    Ok(out)
}

/// Writes attractors as `x y z uncertainty source` lines.
pub fn format_attractors(attractors: &[Attractor]) -> String {
    let mut s = String::new();
    for a in attractors {
        s.push_str(&format!(
            "{} {} {} {} {}\n",
            a.position.x,
            a.position.y,
            a.position.z,
            a.uncertainty,
            a.source.as_str()
        ));
    }
    s
}

/// Parses the line format written by [`format_attractors`]. Blank lines
/// and `#` comments are skipped.
pub fn parse_attractors(text: &str) -> std::result::Result<Vec<Attractor>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(format!(
                "line {}: expected 5 fields, got {}",
                lineno + 1,
                fields.len()
            ));
        }
        let num = |s: &str| -> std::result::Result<f64, String> {
            s.parse::<f64>()
                .map_err(|_| format!("line {}: bad number {:?}", lineno + 1, s))
        };
        let source = match fields[4] {
            "visual" => AttractorSource::Visual,
            "tactile" => AttractorSource::Tactile,
            other => return Err(format!("line {}: unknown source {:?}", lineno + 1, other)),
        };
        let uncertainty = num(fields[3])?;
        if !(0.0..=1.0).contains(&uncertainty) {
            return Err(format!(
                "line {}: uncertainty {} outside [0, 1]",
                lineno + 1,
                uncertainty
            ));
        }
        out.push(Attractor {
            position: Point3::new(num(fields[0])?, num(fields[1])?, num(fields[2])?),
            uncertainty,
            source,
        });
    }
    Ok(out)
}

pub fn save_attractors(path: &std::path::Path, attractors: &[Attractor]) -> Result<()> {
    std::fs::write(path, format_attractors(attractors))?;
    Ok(())
}

pub fn load_attractors(path: &std::path::Path) -> Result<Vec<Attractor>> {
    let text = std::fs::read_to_string(path)?;
    parse_attractors(&text).map_err(|message| Error::FileFormat {
        path: path.display().to_string(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_icosphere, project_point};
    use approx::assert_relative_eq;

    fn model(u_max: f64) -> SensorModel {
        SensorModel {
            u_max,
            ..SensorModel::default()
        }
    }

    #[test]
    fn centered_contact_has_zero_uncertainty() {
        let r = ContactReading {
            force_z: 5.0,
            torque_x: 0.0,
            torque_y: 0.0,
        };
        assert_eq!(attractor_uncertainty(&r, &model(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn pure_torque_contact_hits_u_max() {
        let r = ContactReading {
            force_z: 0.0,
            torque_x: 0.1,
            torque_y: 0.0,
        };
        assert_eq!(attractor_uncertainty(&r, &model(0.5)).unwrap(), 0.5);
    }

    #[test]
    fn mixed_reading_matches_formula() {
        let r = ContactReading {
            force_z: 1.0,
            torque_x: 1.0,
            torque_y: 1.0,
        };
        assert_relative_eq!(
            attractor_uncertainty(&r, &model(0.5)).unwrap(),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn all_zero_reading_is_no_contact() {
        let r = ContactReading {
            force_z: 0.0,
            torque_x: 0.0,
            torque_y: 0.0,
        };
        assert!(matches!(
            attractor_uncertainty(&r, &model(0.5)),
            Err(Error::NoContact)
        ));
    }

    #[test]
    fn centered_offset_reads_zero_torque() {
        let m = model(0.5);
        let r = simulate_reading(Vector2::new(0.0, 0.0), &m).unwrap();
        assert_eq!(r.force_z, m.nominal_force);
        assert_eq!(r.torque_x, 0.0);
        assert_eq!(r.torque_y, 0.0);
        assert_eq!(attractor_uncertainty(&r, &m).unwrap(), 0.0);
    }

    #[test]
    fn pad_edge_offset_matches_closed_form() {
        let m = model(0.5);
        let r = simulate_reading(Vector2::new(m.pad_radius, 0.0), &m).unwrap();
        let u = attractor_uncertainty(&r, &m).unwrap();
        let f = m.nominal_force;
        let expected = m.u_max * (f * m.pad_radius) / (2.0 * f + f * m.pad_radius);
        assert_relative_eq!(u, expected, epsilon = 1e-15);
    }

    #[test]
    fn offset_outside_pad_is_a_miss() {
        let m = model(0.5);
        assert!(matches!(
            simulate_reading(Vector2::new(m.pad_radius * 1.01, 0.0), &m),
            Err(Error::PadMiss)
        ));
    }

    #[test]
    fn uncertainty_monotone_in_offset_norm() {
        let m = model(0.5);
        let mut last = -1.0;
        for i in 0..=10 {
            let o = m.pad_radius * i as f64 / 10.0;
            let r = simulate_reading(Vector2::new(o, 0.0), &m).unwrap();
            let u = attractor_uncertainty(&r, &m).unwrap();
            assert!(u >= last);
            last = u;
        }
    }

    #[test]
    fn visual_prior_respects_visibility() {
        let truth = make_icosphere(1.0, 3).unwrap();
        let cfg = VisualPriorConfig {
            view_direction: Vector3::new(-1.0, 0.0, 0.0),
            cone_half_angle: 0.3,
            n_points: 80,
            position_noise_sigma: 0.0,
            visual_uncertainty: 0.4,
            seed: 4,
        };
        let prior = sample_visual_prior(&truth, &cfg).unwrap();
        assert_eq!(prior.len(), 80);
        for a in &prior {
            assert!(a.position.x > 0.0);
            assert_eq!(a.uncertainty, 0.4);
            assert_eq!(a.source, AttractorSource::Visual);
            // Noiseless points lie on the surface.
            assert!(project_point(&truth, &a.position).distance < 1e-9);
        }
    }

    #[test]
    fn visual_prior_is_reproducible() {
        let truth = make_icosphere(0.1, 2).unwrap();
        let cfg = VisualPriorConfig {
            seed: 99,
            ..VisualPriorConfig::default()
        };
        let a = sample_visual_prior(&truth, &cfg).unwrap();
        let b = sample_visual_prior(&truth, &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.position, y.position);
        }
    }

    #[test]
    fn attractor_text_round_trip() {
        let truth = make_icosphere(0.1, 2).unwrap();
        let cfg = VisualPriorConfig::default();
        let prior = sample_visual_prior(&truth, &cfg).unwrap();
        let text = format_attractors(&prior);
        let back = parse_attractors(&text).unwrap();
        assert_eq!(prior.len(), back.len());
        for (a, b) in prior.iter().zip(&back) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.uncertainty, b.uncertainty);
            assert_eq!(a.source, b.source);
        }
    }

    #[test]
    fn attractor_parse_rejects_garbage() {
        assert!(parse_attractors("1 2 3 0.5").is_err());
        assert!(parse_attractors("1 2 3 0.5 sonar").is_err());
        assert!(parse_attractors("1 2 x 0.5 visual").is_err());
        assert!(parse_attractors("1 2 3 1.5 visual").is_err());
        assert!(parse_attractors("# comment\n\n1 2 3 0.5 visual\n").unwrap().len() == 1);
    }
}
