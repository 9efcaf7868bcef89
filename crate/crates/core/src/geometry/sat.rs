//! Separating-axis queries between convex polytopes.
//!
//! For translating (never rotating) convex polytopes the candidate axes —
//! face normals of both hulls plus pairwise edge-direction cross products —
//! are exhaustive, so the minimum interval overlap is the exact penetration
//! depth and a negative overlap is a valid separation certificate.

use super::polytope::ConvexPolytope;
use super::vec::Vec3;

pub(crate) struct SatResult {
    /// Minimum interval overlap over all axes; negative means separated by
    /// at least that gap along the witness axis.
    pub overlap: f64,
    /// Witness axis, unit length, oriented from shape A toward shape B.
    pub axis: Vec3,
}

fn project(p: &ConvexPolytope, off: Vec3, axis: Vec3) -> (f64, f64) {
    let base = off.dot(axis);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in p.verts() {
        let t = v.dot(axis) + base;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    (lo, hi)
}

pub(crate) fn min_overlap(
    pa: &ConvexPolytope,
    off_a: Vec3,
    pb: &ConvexPolytope,
    off_b: Vec3,
) -> SatResult {
    let mut axes: Vec<Vec3> = Vec::new();
    for pl in &pa.hull().planes {
        axes.push(pl.n);
    }
    for pl in &pb.hull().planes {
        axes.push(pl.n);
    }
    for ea in &pa.hull().edge_dirs {
        for eb in &pb.hull().edge_dirs {
            if let Some(n) = ea.cross(*eb).normalized(1e-9) {
                axes.push(n);
            }
        }
    }
    if axes.is_empty() {
        // two point hulls
        axes.push((off_b - off_a).normalized(1e-14).unwrap_or(Vec3::ZERO));
    }

    let mut best = SatResult {
        overlap: f64::INFINITY,
        axis: Vec3::ZERO,
    };
    for axis in axes {
        if axis == Vec3::ZERO {
            continue;
        }
        let (a_lo, a_hi) = project(pa, off_a, axis);
        let (b_lo, b_hi) = project(pb, off_b, axis);
        let overlap = a_hi.min(b_hi) - a_lo.max(b_lo);
        if overlap < best.overlap {
            let toward_b = (b_lo + b_hi) - (a_lo + a_hi);
            best = SatResult {
                overlap,
                axis: if toward_b >= 0.0 { axis } else { -axis },
            };
        }
    }
    best
}

/// True when the interiors overlap deeper than `eps`. Flat hulls have no
/// interior and never interpenetrate.
pub(crate) fn interpenetrates(
    pa: &ConvexPolytope,
    off_a: Vec3,
    pb: &ConvexPolytope,
    off_b: Vec3,
    eps: f64,
) -> bool {
    if pa.dim() < 3 || pb.dim() < 3 {
        return false;
    }
    min_overlap(pa, off_a, pb, off_b).overlap > eps
}
