//! Per-triangle geometric primitives: closest point and watertight
//! segment intersection.

use nalgebra::{Point3, Vector3};

/// Closest point on triangle `(a, b, c)` to `p`, with barycentric
/// coordinates of the result. Region-based method; the returned
/// barycentrics are clamped to the triangle.
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }

    // Interior.
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// A segment/triangle hit: parameter along the segment and barycentric
/// coordinates on the triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleHit {
    pub t: f64,
    pub bary: [f64; 3],
}

/// Watertight segment/triangle intersection (Woop-style shear test).
///
/// Edge functions for a shared edge of two adjacent triangles are exact
/// negations of each other, so a segment crossing a shared edge always
/// registers on at least one of the triangles. Boundary hits (an edge
/// function of exactly zero) count for both.
pub fn segment_triangle_intersect(
    start: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<TriangleHit> {
    // Axis permutation: kz is the dominant direction component.
    let abs = dir.abs();
    let kz = if abs.x > abs.y {
        if abs.x > abs.z {
            0
        } else {
            2
        }
    } else if abs.y > abs.z {
        1
    } else {
        2
    };
    let mut kx = (kz + 1) % 3;
    let mut ky = (kz + 2) % 3;
    if dir[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }

    let sx = dir[kx] / dir[kz];
    let sy = dir[ky] / dir[kz];
    let sz = 1.0 / dir[kz];

    // Vertices relative to the segment start, sheared into ray space.
    let av = a - start;
    let bv = b - start;
    let cv = c - start;

    let ax = av[kx] - sx * av[kz];
    let ay = av[ky] - sy * av[kz];
    let bx = bv[kx] - sx * bv[kz];
    let by = bv[ky] - sy * bv[kz];
    let cx = cv[kx] - sx * cv[kz];
    let cy = cv[ky] - sy * cv[kz];

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;

    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }

    let det = u + v + w;
    if det == 0.0 {
        return None;
    }

    let az = sz * av[kz];
    let bz = sz * bv[kz];
    let cz = sz * cv[kz];
    let t_scaled = u * az + v * bz + w * cz;

    // 0 <= t <= 1 in segment parameterization, honoring det's sign.
    if det > 0.0 {
        if t_scaled < 0.0 || t_scaled > det {
            return None;
        }
    } else if t_scaled > 0.0 || t_scaled < det {
        return None;
    }

    let inv = 1.0 / det;
    Some(TriangleHit {
        t: t_scaled * inv,
        bary: [u * inv, v * inv, w * inv],
    })
}
