//! Local surface estimation: interpolate attractor-to-mesh displacement
//! residuals and push template vertices along their normals.
//!
//! The interpolant uses the triharmonic kernel `phi(r) = r^3` (the 3D
//! analog of the planar thin-plate spline) with a linear polynomial
//! tail, solved as the standard augmented symmetric system. Degenerate
//! site configurations (one site, collinear sites) fall back to the
//! minimum-norm least-squares solution.

use nalgebra::{DMatrix, DVector, Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{project_point, TriangleMesh};
use crate::sensing::Attractor;

/// A signed normal displacement observed at a site on the global mesh.
#[derive(Debug, Clone, Copy)]
pub struct DisplacementSample {
    /// Projection of the attractor onto the global mesh.
    pub site: Point3<f64>,
    /// Normal of the face containing the site.
    pub normal: Vector3<f64>,
    /// Signed normal offset: positive for bumps, negative for dents.
    pub displacement: f64,
    /// Uncertainty of the source attractor; used to pick the survivor
    /// when near-duplicate sites are merged.
    pub source_uncertainty: f64,
}

/// Scalar interpolant `F(x) = sum_i w_i |x - c_i|^3 + a0 + a.x`.
#[derive(Debug, Clone)]
pub struct RbfInterpolant {
    centers: Vec<Point3<f64>>,
    weights: Vec<f64>,
    /// Constant plus linear coefficients `(a0, ax, ay, az)`.
    affine: [f64; 4],
}

impl RbfInterpolant {
    pub const KERNEL_EXPONENT: u32 = 3;

    /// The constant function `F == c` (empty kernel part).
    pub fn constant(c: f64) -> Self {
        RbfInterpolant {
            centers: Vec::new(),
            weights: Vec::new(),
            affine: [c, 0.0, 0.0, 0.0],
        }
    }

    pub fn centers(&self) -> &[Point3<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn affine(&self) -> [f64; 4] {
        self.affine
    }

    pub fn evaluate(&self, x: &Point3<f64>) -> f64 {
        let mut value = self.affine[0]
            + self.affine[1] * x.x
            + self.affine[2] * x.y
            + self.affine[3] * x.z;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let r = (x - c).norm();
            value += w * r * r * r;
        }
        value
    }
}

/// Per-attractor displacement against the global mesh: site is the
/// closest surface point, displacement the normal component of the
/// residual `(x - p) . n`.
pub fn compute_displacement_samples(
    global_mesh: &TriangleMesh,
    attractors: &[Attractor],
) -> Vec<DisplacementSample> {
    attractors
        .iter()
        .map(|a| {
            let proj = project_point(global_mesh, &a.position);
            DisplacementSample {
                site: proj.point,
                normal: proj.normal,
                displacement: (a.position - proj.point).dot(&proj.normal),
                source_uncertainty: a.uncertainty,
            }
        })
        .collect()
}

const DUPLICATE_SITE_TOL: f64 = 1e-9;

/// Fits the interpolant to `F(site_i) = displacement_i`.
///
/// Near-duplicate sites (within 1e-9) are merged, keeping the sample with
/// the lower source uncertainty. `regularization` adds a ridge on the
/// kernel block; at zero the data are interpolated exactly and the fit is
/// rejected if the solve cannot reach 1e-8 relative residuals.
pub fn fit_interpolant(
    samples: &[DisplacementSample],
    regularization: f64,
) -> Result<RbfInterpolant> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "fit_interpolant needs at least one sample".into(),
        ));
    }
    if !(regularization >= 0.0) {
        return Err(Error::InvalidParameter(
            "regularization must be nonnegative".into(),
        ));
    }

    let kept = dedup_sites(samples);
    let n = kept.len();
    let dim = n + 4;

    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            let r = (kept[i].site - kept[j].site).norm();
            m[(i, j)] = r * r * r;
        }
        m[(i, i)] += regularization;
        let p = kept[i].site;
        m[(i, n)] = 1.0;
        m[(i, n + 1)] = p.x;
        m[(i, n + 2)] = p.y;
        m[(i, n + 3)] = p.z;
        m[(n, i)] = 1.0;
        m[(n + 1, i)] = p.x;
        m[(n + 2, i)] = p.y;
        m[(n + 3, i)] = p.z;
        rhs[i] = kept[i].displacement;
    }

    // SVD pseudoinverse: exact for the regular case, minimum-norm for
    // rank-deficient site configurations (n < 4, coplanar sites).
    let svd = m.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (max_sv * 1e-13).max(f64::MIN_POSITIVE);
    let solution = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Numerical(format!("interpolant solve failed: {e}")))?;

    let interpolant = RbfInterpolant {
        centers: kept.iter().map(|s| s.site).collect(),
        weights: solution.as_slice()[..n].to_vec(),
        affine: [
            solution[n],
            solution[n + 1],
            solution[n + 2],
            solution[n + 3],
        ],
    };

    if regularization == 0.0 {
        let max_d = kept
            .iter()
            .map(|s| s.displacement.abs())
            .fold(0.0, f64::max);
        let tol = 1e-8 * max_d.max(1.0);
        for s in &kept {
            let resid = (interpolant.evaluate(&s.site) - s.displacement).abs();
            if resid > tol {
                return Err(Error::Numerical(format!(
                    "singular interpolation system: residual {resid} exceeds {tol}"
                )));
            }
        }
    }

    Ok(interpolant)
}

fn dedup_sites(samples: &[DisplacementSample]) -> Vec<DisplacementSample> {
    let mut kept: Vec<DisplacementSample> = Vec::with_capacity(samples.len());
    for s in samples {
        match kept
            .iter_mut()
            .find(|k| (k.site - s.site).norm() <= DUPLICATE_SITE_TOL)
        {
            Some(existing) => {
                if s.source_uncertainty < existing.source_uncertainty {
                    *existing = *s;
                }
            }
            None => kept.push(*s),
        }
    }
    kept
}

/// Moves each vertex by `clamp(F(v), +-max_displacement)` along its
/// vertex normal. Topology is untouched; normals are recomputed.
pub fn apply_deformation(
    global_mesh: &TriangleMesh,
    interpolant: &RbfInterpolant,
    max_displacement: f64,
) -> Result<TriangleMesh> {
    if !(max_displacement > 0.0) {
        return Err(Error::InvalidParameter(
            "max_displacement must be positive".into(),
        ));
    }
    let positions = global_mesh
        .vertices()
        .iter()
        .zip(global_mesh.vertex_normals())
        .map(|(v, n)| {
            let d = interpolant
                .evaluate(v)
                .clamp(-max_displacement, max_displacement);
            v + n * d
        })
        .collect();
    global_mesh.with_vertex_positions(positions)
}
