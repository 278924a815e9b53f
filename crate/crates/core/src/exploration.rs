//! Next-contact selection.
//!
//! The proposed strategy scores frontier vertices (uncertain, but with at
//! least one confident neighbor) by a weighted sum of their mean geodesic
//! distance to the confident set and their own uncertainty, which walks
//! the frontier depth-first across the surface. The `min_u` baseline just
//! takes the globally most uncertain vertex.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{geodesic_distances, TriangleMesh};
use crate::uncertainty::UncertaintyField;

/// Which exploration strategy a session runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Ours,
    MinU,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Ours => "ours",
            Strategy::MinU => "min_u",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExplorationConfig {
    /// Weight of the geodesic-distance term.
    pub alpha_g: f64,
    /// Weight of the uncertainty term.
    pub alpha_u: f64,
    /// Candidates must be at least this uncertain.
    pub u_prime_min: f64,
    /// Neighbors at or below this count as confident.
    pub u_prime_max: f64,
    pub strategy: Strategy,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            alpha_g: 0.5,
            alpha_u: 0.5,
            u_prime_min: 0.6,
            u_prime_max: 0.45,
            strategy: Strategy::Ours,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_g < 0.0 || self.alpha_u < 0.0 {
            return Err(Error::InvalidParameter(
                "alpha_g and alpha_u must be nonnegative".into(),
            ));
        }
        if !(self.alpha_g + self.alpha_u > 0.0) {
            return Err(Error::InvalidParameter(
                "alpha_g + alpha_u must be positive".into(),
            ));
        }
        for (name, v) in [("u_prime_min", self.u_prime_min), ("u_prime_max", self.u_prime_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Overlapping bands (confident threshold above the candidate
    /// threshold) are allowed but usually a mistake.
    pub fn band_warning(&self) -> Option<String> {
        (self.u_prime_max > self.u_prime_min).then(|| {
            format!(
                "u_prime_max ({}) exceeds u_prime_min ({}): vertices can be \
                 confident and candidates at once",
                self.u_prime_max, self.u_prime_min
            )
        })
    }
}

/// Score of one candidate vertex.
#[derive(Debug, Clone, Copy)]
pub struct CandidateScore {
    pub vertex_index: usize,
    /// Mean geodesic distance to the confident set, normalized to [0, 1]
    /// by the maximum over candidates.
    pub g: f64,
    /// The vertex's own uncertainty.
    pub u: f64,
    /// `alpha_g * g + alpha_u * u`.
    pub total: f64,
}

/// Proposed two-fold strategy: among frontier vertices (uncertainty at
/// least `u_prime_min`, at least one edge-neighbor at or below
/// `u_prime_max`), pick the argmax of `alpha_g * G + alpha_u * U`.
///
/// Returns the winner and the full score table, sorted by vertex index.
/// Errs with [`Error::ExplorationComplete`] when no candidate exists.
pub fn select_next_ours(
    mesh: &TriangleMesh,
    field: &UncertaintyField,
    cfg: &ExplorationConfig,
) -> Result<(usize, Vec<CandidateScore>)> {
    cfg.validate()?;
    let u = &field.values;
    debug_assert_eq!(u.len(), mesh.vertices().len());

    let confident: Vec<usize> = (0..u.len()).filter(|&i| u[i] <= cfg.u_prime_max).collect();
    let candidates: Vec<usize> = (0..u.len())
        .filter(|&j| {
            u[j] >= cfg.u_prime_min
                && mesh.neighbors(j).iter().any(|&n| u[n] <= cfg.u_prime_max)
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::ExplorationComplete);
    }

    // Mean geodesic distance from each candidate to every confident
    // vertex; one single-source run per candidate.
    let mut raw_g = Vec::with_capacity(candidates.len());
    for &j in &candidates {
        let d = geodesic_distances(mesh, &[j])?;
        let mean = confident.iter().map(|&c| d[c]).sum::<f64>() / confident.len() as f64;
        raw_g.push(mean);
    }
    let max_g = raw_g.iter().cloned().fold(0.0, f64::max);

    let mut scores = Vec::with_capacity(candidates.len());
    let mut winner = (f64::NEG_INFINITY, usize::MAX);
    for (k, &j) in candidates.iter().enumerate() {
        let g = if max_g > 0.0 { raw_g[k] / max_g } else { 0.0 };
        let total = cfg.alpha_g * g + cfg.alpha_u * u[j];
        scores.push(CandidateScore {
            vertex_index: j,
            g,
            u: u[j],
            total,
        });
        if total > winner.0 {
            winner = (total, j);
        }
    }
    Ok((winner.1, scores))
}

/// Baseline: globally most uncertain vertex, lowest index on ties.
pub fn select_next_min_u(field: &UncertaintyField) -> Result<usize> {
    if field.values.is_empty() {
        return Err(Error::InvalidParameter("empty uncertainty field".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, &u) in field.values.iter().enumerate() {
        if u > best.0 {
            best = (u, i);
        }
    }
    Ok(best.1)
}

/// Contact pose for a candidate: the vertex position and its vertex
/// normal on the current estimate.
pub fn candidate_pose(mesh: &TriangleMesh, vertex_index: usize) -> (Point3<f64>, Vector3<f64>) {
    (
        mesh.vertices()[vertex_index],
        mesh.vertex_normals()[vertex_index],
    )
}
