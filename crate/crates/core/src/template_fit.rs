//! Global shape estimation: fit ellipsoid parameters to the attractor
//! set and instantiate the template mesh under them.
//!
//! The mapping `y = diag(s) * R * (x - t)` sends points on the
//! parameterized ellipsoid to the unit sphere; fitting minimizes
//! `sum_i (|y_i|^2 - 1)^2` by gradient descent with backtracking. The
//! gradient is analytic, chained through the quaternion normalization so
//! it matches finite differences of the same loss.

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sensing::Attractor;

/// Rotation, translation and per-axis reciprocal-semi-axis scale of the
/// fitted ellipsoid template.
#[derive(Debug, Clone, Copy)]
pub struct EllipsoidParams {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    /// Positive reciprocal semi-axes (1/meters): semi-axis k is `1/scale[k]`.
    pub scale: Vector3<f64>,
}

impl EllipsoidParams {
    pub fn identity() -> Self {
        EllipsoidParams {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
            scale: Vector3::repeat(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale components must be positive and finite, got {:?}",
                self.scale
            )));
        }
        if (self.rotation.as_ref().norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "rotation quaternion is not normalized".into(),
            ));
        }
        Ok(())
    }

    /// Semi-axis lengths, the reciprocals of `scale`.
    pub fn semi_axes(&self) -> Vector3<f64> {
        Vector3::new(1.0 / self.scale.x, 1.0 / self.scale.y, 1.0 / self.scale.z)
    }

    /// Modest initialization: centered on the attractor centroid, sphere
    /// of radius `init_scale_factor * max spread`, identity rotation.
    /// Deliberately small so the fit grows into the data.
    pub fn modest_init(attractors: &[Attractor], init_scale_factor: f64) -> Result<Self> {
        if attractors.is_empty() {
            return Err(Error::InvalidParameter(
                "cannot initialize from an empty attractor set".into(),
            ));
        }
        if !(init_scale_factor > 0.0) {
            return Err(Error::InvalidParameter(
                "init_scale_factor must be positive".into(),
            ));
        }
        let centroid = attractors
            .iter()
            .fold(Vector3::zeros(), |acc, a| acc + a.position.coords)
            / attractors.len() as f64;
        let spread = attractors
            .iter()
            .map(|a| (a.position.coords - centroid).norm())
            .fold(0.0, f64::max)
            .max(1e-6);
        Ok(EllipsoidParams {
            rotation: UnitQuaternion::identity(),
            translation: centroid,
            scale: Vector3::repeat(1.0 / (init_scale_factor * spread)),
        })
    }

    /// Flat text record: `qw qx qy qz tx ty tz sx sy sz`.
    pub fn to_record(&self) -> String {
        let q = self.rotation.as_ref();
        format!(
            "{} {} {} {} {} {} {} {} {} {}",
            q.w,
            q.i,
            q.j,
            q.k,
            self.translation.x,
            self.translation.y,
            self.translation.z,
            self.scale.x,
            self.scale.y,
            self.scale.z
        )
    }

    pub fn from_record(text: &str) -> std::result::Result<Self, String> {
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| format!("bad number {s:?}")))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != 10 {
            return Err(format!("expected 10 values, got {}", vals.len()));
        }
        let params = EllipsoidParams {
            rotation: UnitQuaternion::from_quaternion(Quaternion::new(
                vals[0], vals[1], vals[2], vals[3],
            )),
            translation: Vector3::new(vals[4], vals[5], vals[6]),
            scale: Vector3::new(vals[7], vals[8], vals[9]),
        };
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }
}

/// Gradient-descent hyperparameters for the ellipsoid fit.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Initial step size of the line search.
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop when the loss decrease falls below this.
    pub convergence_tol: f64,
    pub init_scale_factor: f64,
    /// Weight each residual by `1 - uncertainty` (off by default).
    pub confidence_weighting: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            learning_rate: 1e-2,
            max_iterations: 500,
            convergence_tol: 1e-10,
            init_scale_factor: 0.75,
            confidence_weighting: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(
                "learning_rate must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.convergence_tol < 0.0 {
            return Err(Error::InvalidParameter(
                "convergence_tol must be nonnegative".into(),
            ));
        }
        if !(self.init_scale_factor > 0.0) {
            return Err(Error::InvalidParameter(
                "init_scale_factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `y = diag(s) * R * (x - t)`; unit norm exactly when `x` lies on the
/// parameterized ellipsoid.
pub fn normalize_point(x: &Point3<f64>, params: &EllipsoidParams) -> Vector3<f64> {
    (params.rotation * (x.coords - params.translation)).component_mul(&params.scale)
}

/// Sum over attractors of `(|y|^2 - 1)^2`, optionally weighted by
/// `1 - uncertainty`.
pub fn ellipsoid_loss(
    attractors: &[Attractor],
    params: &EllipsoidParams,
    confidence_weighting: bool,
) -> Result<f64> {
    if attractors.is_empty() {
        return Err(Error::InvalidParameter(
            "ellipsoid_loss needs at least one attractor".into(),
        ));
    }
    Ok(loss_raw(attractors, params, confidence_weighting))
}

fn loss_raw(attractors: &[Attractor], params: &EllipsoidParams, weighted: bool) -> f64 {
    attractors
        .iter()
        .map(|a| {
            let r = normalize_point(&a.position, params).norm_squared() - 1.0;
            let w = if weighted { 1.0 - a.uncertainty } else { 1.0 };
            w * r * r
        })
        .sum()
}

/// Loss gradient with respect to the raw parameter vector
/// `(qw, qx, qy, qz, tx, ty, tz, sx, sy, sz)`, where the quaternion is
/// normalized before use. Matches central finite differences of
/// [`ellipsoid_loss`] over the same ten parameters.
fn loss_gradient(
    attractors: &[Attractor],
    params: &EllipsoidParams,
    weighted: bool,
) -> (Vector4<f64>, Vector3<f64>, Vector3<f64>) {
    let q = params.rotation.as_ref();
    let qw = q.w;
    let qu = Vector3::new(q.i, q.j, q.k);
    let s = params.scale;

    let mut g_q = Vector4::zeros();
    let mut g_t = Vector3::zeros();
    let mut g_s = Vector3::zeros();

    for a in attractors {
        let v = a.position.coords - params.translation;
        let rv = params.rotation * v;
        let y = rv.component_mul(&s);
        let r = y.norm_squared() - 1.0;
        let w = if weighted { 1.0 - a.uncertainty } else { 1.0 };
        let base = 4.0 * w * r;

        let sy = y.component_mul(&s); // diag(s) * y

        // d/ds_k |y|^2 = 2 y_k rv_k -> contributes base * y_k * rv_k.
        g_s += base * y.component_mul(&rv);

        // d/dt: y = diag(s) R (x - t) -> -R^T diag(s) y.
        g_t -= base * (params.rotation.inverse() * sy);

        // d(R v)/dq for unit q = (w, u): R v = v + 2w (u x v) + 2 u x (u x v).
        let uxv = qu.cross(&v);
        g_q.x += base * sy.dot(&(2.0 * uxv));
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = 1.0;
            let d = 2.0 * qw * e.cross(&v) + 2.0 * e.cross(&uxv) + 2.0 * qu.cross(&e.cross(&v));
            g_q[k + 1] += base * sy.dot(&d);
        }
    }

    // Chain through normalization: grad_raw = (I - q q^T) grad_unit at |q| = 1.
    let qvec = Vector4::new(qw, qu.x, qu.y, qu.z);
    let g_q = g_q - qvec * qvec.dot(&g_q);

    (g_q, g_t, g_s)
}

/// Outcome of [`fit_ellipsoid`].
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub params: EllipsoidParams,
    pub loss: f64,
    pub iterations: usize,
    /// True when fewer than 4 attractors left the fit under-determined.
    pub underdetermined: bool,
}

const MAX_HALVINGS: u32 = 10;
/// Lower bound on scale components in normalized (unit-RMS-spread) data
/// coordinates: semi-axes never exceed four data spreads. Caps the
/// runaway direction that flat, low-curvature attractor patches open up
/// (their best ellipsoid is infinitely large).
const MIN_NORMALIZED_SCALE: f64 = 0.25;

/// Fits ellipsoid parameters by gradient descent with backtracking.
///
/// Accepted iterates never increase the loss: a proposed step is halved
/// up to ten times until the loss drops, and the search stops when even
/// that fails or the loss decrease falls below `convergence_tol`. The
/// accepted step seeds the next iteration's line search at twice its
/// length.
///
/// Internally the data are shifted to their centroid and rescaled to
/// unit spread before descending; this conditions the translation and
/// scale blocks to comparable magnitudes without changing the loss
/// (the parameterization maps back exactly).
pub fn fit_ellipsoid(
    attractors: &[Attractor],
    init: &EllipsoidParams,
    cfg: &FitConfig,
) -> Result<FitResult> {
    if attractors.is_empty() {
        return Err(Error::InvalidParameter(
            "fit_ellipsoid needs at least one attractor".into(),
        ));
    }
    cfg.validate()?;
    init.validate()?;
    let underdetermined = attractors.len() < 4;

    let center = attractors
        .iter()
        .fold(Vector3::zeros(), |acc, a| acc + a.position.coords)
        / attractors.len() as f64;
    let spread = (attractors
        .iter()
        .map(|a| (a.position.coords - center).norm_squared())
        .sum::<f64>()
        / attractors.len() as f64)
        .sqrt()
        .max(1e-9);
    let attractors: Vec<Attractor> = attractors
        .iter()
        .map(|a| Attractor {
            position: Point3::from((a.position.coords - center) / spread),
            ..*a
        })
        .collect();
    let attractors = attractors.as_slice();
    let mut params = EllipsoidParams {
        rotation: init.rotation,
        translation: (init.translation - center) / spread,
        scale: init.scale * spread,
    };
    let mut loss = loss_raw(attractors, &params, cfg.confidence_weighting);
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "ellipsoid loss is non-finite at the initial parameters ({loss})"
        )));
    }

    let mut step = cfg.learning_rate;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let (g_q, g_t, g_s) = loss_gradient(attractors, &params, cfg.confidence_weighting);
        if !(g_q.iter().all(|g| g.is_finite())
            && g_t.iter().all(|g| g.is_finite())
            && g_s.iter().all(|g| g.is_finite()))
        {
            return Err(Error::Numerical(
                "non-finite gradient; shrink the learning rate".into(),
            ));
        }

        let mut accepted = false;
        let mut trial = step;
        for _ in 0..=MAX_HALVINGS {
            let candidate = step_params(&params, &g_q, &g_t, &g_s, trial);
            let cand_loss = loss_raw(attractors, &candidate, cfg.confidence_weighting);
            if cand_loss.is_finite() && cand_loss < loss {
                let delta = loss - cand_loss;
                params = candidate;
                loss = cand_loss;
                step = trial * 2.0;
                accepted = true;
                if delta < cfg.convergence_tol {
                    return Ok(denormalize(params, center, spread, loss, iterations, underdetermined));
                }
                break;
            }
            trial *= 0.5;
        }
        if !accepted {
            break; // No descent direction left at this resolution.
        }
    }

    Ok(denormalize(params, center, spread, loss, iterations, underdetermined))
}

fn denormalize(
    params: EllipsoidParams,
    center: Vector3<f64>,
    spread: f64,
    loss: f64,
    iterations: usize,
    underdetermined: bool,
) -> FitResult {
    FitResult {
        params: EllipsoidParams {
            rotation: params.rotation,
            translation: center + params.translation * spread,
            scale: params.scale / spread,
        },
        loss,
        iterations,
        underdetermined,
    }
}

fn step_params(
    params: &EllipsoidParams,
    g_q: &Vector4<f64>,
    g_t: &Vector3<f64>,
    g_s: &Vector3<f64>,
    step: f64,
) -> EllipsoidParams {
    let q = params.rotation.as_ref();
    let raw = Quaternion::new(
        q.w - step * g_q.x,
        q.i - step * g_q.y,
        q.j - step * g_q.z,
        q.k - step * g_q.w,
    );
    let rotation = UnitQuaternion::from_quaternion(raw);
    let translation = params.translation - step * g_t;
    let scale = (params.scale - step * g_s).map(|s| s.max(MIN_NORMALIZED_SCALE));
    EllipsoidParams {
        rotation,
        translation,
        scale,
    }
}

/// Maps each unit-sphere template vertex through the inverse of
/// [`normalize_point`]: `v' = R^T diag(1/s) v + t`. Normals are
/// recomputed on the result.
pub fn instantiate_template(
    unit_sphere: &TriangleMesh,
    params: &EllipsoidParams,
) -> Result<TriangleMesh> {
    params.validate()?;
    let positions = unit_sphere
        .vertices()
        .iter()
        .map(|v| {
            Point3::from(
                params.rotation.inverse() * v.coords.component_div(&params.scale)
                    + params.translation,
            )
        })
        .collect();
    unit_sphere.with_vertex_positions(positions)
}
