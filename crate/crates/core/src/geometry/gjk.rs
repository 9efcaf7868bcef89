//! GJK distance between convex hulls of finite point sets.
//!
//! Works directly on vertex lists (the support function is a max over the
//! set), so it serves both solid polytopes and degenerate surfaces
//! (points, segments, flat polygons).

use super::vec::Vec3;

const MAX_ITERATIONS: usize = 128;
const REL_TOL: f64 = 1e-12;

fn support(pts: &[Vec3], dir: Vec3) -> Vec3 {
    let mut best = pts[0];
    let mut best_d = best.dot(dir);
    for &p in &pts[1..] {
        let d = p.dot(dir);
        if d > best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

/// Distance between `conv(a)` and `conv(b)`; 0 when they intersect.
pub fn distance(a: &[Vec3], b: &[Vec3], offset_a: Vec3, offset_b: Vec3) -> f64 {
    debug_assert!(!a.is_empty() && !b.is_empty());
    // Work in the Minkowski difference A - B; distance to the origin.
    let mink_support = |dir: Vec3| -> Vec3 {
        (support(a, dir) + offset_a) - (support(b, -dir) + offset_b)
    };

    let scale = {
        let ca = a[0] + offset_a;
        let cb = b[0] + offset_b;
        1.0 + ca.norm().max(cb.norm())
    };
    let tol = REL_TOL * scale;

    let mut simplex: Vec<Vec3> = vec![mink_support(Vec3::ZERO - (a[0] + offset_a) + (b[0] + offset_b))];
    if simplex[0].norm_sq() == 0.0 {
        return 0.0;
    }

    let mut closest = simplex[0];
    for _ in 0..MAX_ITERATIONS {
        let dist = closest.norm();
        if dist <= tol {
            return 0.0;
        }
        let dir = -closest / dist;
        let w = mink_support(dir);
        // support gap: how much closer any point of the set can be
        let gap = dist - w.dot(-dir);
        if gap <= tol.max(dist * 1e-12) {
            return dist;
        }
        if simplex.iter().any(|s| s.approx_eq(w, tol)) {
            return dist;
        }
        simplex.push(w);
        let (point, keep) = closest_to_origin(&simplex);
        simplex = keep;
        closest = point;
        if simplex.len() == 4 {
            // origin enclosed
            return 0.0;
        }
    }
    closest.norm()
}

/// Closest point of the simplex to the origin plus the supporting
/// sub-simplex.
fn closest_to_origin(simplex: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    match simplex.len() {
        1 => (simplex[0], vec![simplex[0]]),
        2 => closest_segment(simplex[0], simplex[1]),
        3 => closest_triangle(simplex[0], simplex[1], simplex[2]),
        4 => closest_tetra(simplex[0], simplex[1], simplex[2], simplex[3]),
        _ => unreachable!("simplex size"),
    }
}

fn closest_segment(a: Vec3, b: Vec3) -> (Vec3, Vec<Vec3>) {
    let ab = b - a;
    let denom = ab.norm_sq();
    if denom == 0.0 {
        return (a, vec![a]);
    }
    let t = -a.dot(ab) / denom;
    if t <= 0.0 {
        (a, vec![a])
    } else if t >= 1.0 {
        (b, vec![b])
    } else {
        (a + ab * t, vec![a, b])
    }
}

fn closest_triangle(a: Vec3, b: Vec3, c: Vec3) -> (Vec3, Vec<Vec3>) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, vec![a]);
    }
    let bp = -b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, vec![b]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a + ab * t, vec![a, b]);
    }
    let cp = -c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, vec![c]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a + ac * t, vec![a, c]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * t, vec![b, c]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, vec![a, b, c])
}

fn closest_tetra(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> (Vec3, Vec<Vec3>) {
    // The origin is enclosed when it sits inside all four face halfspaces.
    // A face can only certify enclosure when the tetrahedron has genuine
    // height over it; flat simplices (common for parallel-face contacts)
    // must fall back to the face distances or the orientation sign is
    // noise and a tiny positive gap collapses to a bogus zero.
    let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm()).max(1.0);
    let faces = [
        (a, b, c, d),
        (a, b, d, c),
        (a, c, d, b),
        (b, c, d, a),
    ];
    let mut best: Option<(Vec3, Vec<Vec3>)> = None;
    let mut enclosed = true;
    for &(p, q, r, other) in &faces {
        let mut consider_face = |enclosed: &mut bool| {
            *enclosed = false;
            let (pt, keep) = closest_triangle(p, q, r);
            if best
                .as_ref()
                .map(|(bp, _)| pt.norm_sq() < bp.norm_sq())
                .unwrap_or(true)
            {
                best = Some((pt, keep));
            }
        };
        let n = (q - p).cross(r - p);
        let Some(nh) = n.normalized(1e-14 * scale * scale) else {
            consider_face(&mut enclosed);
            continue;
        };
        let height = nh.dot(other - p);
        if height.abs() <= 1e-10 * scale {
            consider_face(&mut enclosed);
            continue;
        }
        let outward = if height > 0.0 { -nh } else { nh };
        if outward.dot(-p) > 0.0 {
            consider_face(&mut enclosed);
        }
    }
    if enclosed {
        (Vec3::ZERO, vec![a, b, c, d])
    } else {
        best.expect("at least one face considered")
    }
}
