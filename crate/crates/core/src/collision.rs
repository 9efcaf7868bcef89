//! Collision detection and response: first time of contact by conservative
//! per-pair bisection, colliding-pair extraction at a contact instant, and
//! elastic/inelastic velocity updates.
//!
//! Per-pair contact searches are independent; with the `parallel` feature
//! they fan out over rayon and reduce with a total order on `(t, idA, idB)`,
//! so parallel and sequential runs give identical answers.

use thiserror::Error;

use crate::geometry::{
    contact_surface, face_normals_containing, gjk, interpenetrates_displaced, vec3, GeometryError,
    Shape, Surface, Vec3,
};
use crate::par::*;
use crate::Tolerances;

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("shapes {a} and {b} interpenetrate before the contact search")]
    InterpenetratingInput { a: u32, b: u32 },
    #[error(
        "tunneling guard: relative displacement {displacement:.6} of pair ({a}, {b}) over the \
         horizon exceeds the smallest shape extent {extent:.6}; lower delta or the velocities"
    )]
    TunnelingGuard {
        a: u32,
        b: u32,
        displacement: f64,
        extent: f64,
    },
    #[error("contact normal is degenerate")]
    DegenerateNormal,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A pair of touching shapes whose continued motion interpenetrates, with
/// their contact surface in global coordinates.
#[derive(Debug, Clone)]
pub struct CollisionTuple {
    pub id_a: u32,
    pub id_b: u32,
    pub surface: Surface,
}

/// Velocities after a collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseResult {
    Elastic { w_a: Vec3, w_b: Vec3 },
    Inelastic { v: Vec3 },
}

/// Collision response on contact surface `x`: inelastic collisions produce
/// the common velocity of the bound body, elastic ones the two bounced
/// velocities.
pub fn respond(
    s1: &Shape,
    s2: &Shape,
    x: &Surface,
    inelastic: bool,
    tol: &Tolerances,
) -> Result<ResponseResult, CollisionError> {
    if inelastic {
        Ok(ResponseResult::Inelastic {
            v: inelastic_response(s1, s2),
        })
    } else {
        let (w_a, w_b) = elastic_response(s1, s2, x, tol)?;
        Ok(ResponseResult::Elastic { w_a, w_b })
    }
}

fn pair_indices(n: usize) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// Broad phase: AABBs swept over the horizon must overlap for a pair to be
/// a contact candidate.
fn swept_aabbs_overlap(a: &Shape, b: &Shape, horizon: f64, eps: f64) -> bool {
    let sweep = |s: &Shape| -> (Vec3, Vec3) {
        let (lo, hi) = s.aabb();
        let v = s.velocity().unwrap_or(Vec3::ZERO) * horizon;
        (
            vec3(lo.x.min(lo.x + v.x), lo.y.min(lo.y + v.y), lo.z.min(lo.z + v.z)),
            vec3(hi.x.max(hi.x + v.x), hi.y.max(hi.y + v.y), hi.z.max(hi.z + v.z)),
        )
    };
    let (alo, ahi) = sweep(a);
    let (blo, bhi) = sweep(b);
    alo.x <= bhi.x + eps
        && blo.x <= ahi.x + eps
        && alo.y <= bhi.y + eps
        && blo.y <= ahi.y + eps
        && alo.z <= bhi.z + eps
        && blo.z <= ahi.z + eps
}

/// First interpenetration instant of one pair within `[0, horizon]`, the
/// minimum over the leaf pairs. `None` when the pair never interpenetrates
/// by the horizon.
fn pair_ftoc(
    ids: (u32, u32),
    a: &Shape,
    b: &Shape,
    horizon: f64,
    tol: &Tolerances,
) -> Result<Option<f64>, CollisionError> {
    let va = a.velocity().unwrap_or(Vec3::ZERO);
    let vb = b.velocity().unwrap_or(Vec3::ZERO);
    let rel = vb - va;
    let rel_speed = rel.norm();
    if rel_speed * horizon <= tol.eps_len {
        return Ok(None);
    }
    let extent = a.min_extent().min(b.min_extent());
    if !extent.is_finite() {
        // flat bodies have no interior to penetrate
        return Ok(None);
    }
    // Tunneling guard: a pair that crosses a whole body within one time
    // resolution quantum has no meaningful contact instant.
    if extent / rel_speed < tol.eps_t * 8.0 {
        return Err(CollisionError::TunnelingGuard {
            a: ids.0,
            b: ids.1,
            displacement: rel_speed * tol.eps_t * 8.0,
            extent,
        });
    }
    let mut best: Option<f64> = None;
    for la in a.leaves() {
        for lb in b.leaves() {
            if la.polytope().dim() < 3 || lb.polytope().dim() < 3 {
                continue;
            }
            let limit = best.unwrap_or(horizon);
            if let Some(t) = leaf_pair_ftoc(la, lb, rel, limit, tol) {
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        }
    }
    Ok(best)
}

/// Exact first-contact search for one convex leaf pair under linear
/// relative motion (only `lb` moves, by `rel * t`).
///
/// The pair distance is convex in time, so its minimum comes from a ternary
/// search; inside the zero-distance span the separating-axis overlap depth
/// is concave, so its maximum is exact too. Together they make tunneling
/// through short graze intervals impossible.
fn leaf_pair_ftoc(
    la: &crate::geometry::BasicShape,
    lb: &crate::geometry::BasicShape,
    rel: Vec3,
    horizon: f64,
    tol: &Tolerances,
) -> Option<f64> {
    let pa = la.polytope();
    let pb = lb.polytope();
    let dist_at = |t: f64| -> f64 {
        gjk::distance(pa.verts(), pb.verts(), la.ref_point(), lb.ref_point() + rel * t)
    };
    let pen_at = |t: f64| -> f64 {
        crate::geometry::sat_overlap(pa, la.ref_point(), pb, lb.ref_point() + rel * t)
    };
    let touch_eps = tol.eps_len * 0.5;

    // convex minimization of the distance over [0, horizon]
    let mut lo = 0.0;
    let mut hi = horizon;
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dist_at(m1) <= dist_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_min = 0.5 * (lo + hi);
    if dist_at(t_min) > touch_eps {
        return None;
    }

    // zero-distance span [t_in, t_out] around the minimum
    let t_in = {
        let (mut lo, mut hi) = (0.0, t_min);
        if dist_at(0.0) <= touch_eps {
            0.0
        } else {
            for _ in 0..tol.max_bisect {
                let mid = 0.5 * (lo + hi);
                if dist_at(mid) <= touch_eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    let t_out = {
        let (mut lo, mut hi) = (t_min, horizon);
        if dist_at(horizon) <= touch_eps {
            horizon
        } else {
            for _ in 0..tol.max_bisect {
                let mid = 0.5 * (lo + hi);
                if dist_at(mid) <= touch_eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };

    // concave maximization of the penetration depth over the span
    let (mut lo, mut hi) = (t_in, t_out);
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if pen_at(m1) >= pen_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_deep = 0.5 * (lo + hi);
    if pen_at(t_deep) <= tol.eps_len {
        // touching without interpenetrating never triggers a contact
        return None;
    }

    // entry instant: last non-penetrating time before the deep point
    let penetrates_at = |t: f64| -> bool { pen_at(t) > tol.eps_len };
    debug_assert!(!penetrates_at(0.0), "contact search requires disjoint input");
    let mut lo = if penetrates_at(t_in) { 0.0 } else { t_in };
    let mut hi = t_deep;
    for _ in 0..tol.max_bisect {
        if hi - lo <= tol.eps_t * 0.5 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if penetrates_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // secant polish on the distance brings the residual gap to eps_len
    // scale so downstream touching tests stay tight
    let mut t = lo;
    for _ in 0..32 {
        let d = dist_at(t);
        if d <= tol.eps_len * 0.25 {
            break;
        }
        let mut h = (hi - t) * 0.5;
        let mut d2 = dist_at(t + h);
        let mut halvings = 0;
        while d2 <= 0.0 && halvings < 24 {
            h *= 0.5;
            d2 = dist_at(t + h);
            halvings += 1;
        }
        if d2 <= 0.0 || d2 >= d || h <= 0.0 {
            break;
        }
        let slope = (d2 - d) / h;
        let next = (t - d / slope).min(hi);
        if !(next > t) {
            break;
        }
        if penetrates_at(next) {
            hi = next;
            continue;
        }
        t = next;
    }
    Some(t)
}

fn candidate_pairs(shapes: &[(u32, &Shape)], horizon: f64, eps: f64) -> Vec<(usize, usize)> {
    pair_indices(shapes.len())
        .into_iter()
        .filter(|&(i, j)| swept_aabbs_overlap(shapes[i].1, shapes[j].1, horizon, eps))
        .collect()
}

fn check_disjoint(shapes: &[(u32, &Shape)], eps: f64) -> Result<(), CollisionError> {
    for (i, (ida, sa)) in shapes.iter().enumerate() {
        for (idb, sb) in shapes.iter().skip(i + 1) {
            if crate::geometry::interpenetrates(sa, sb, eps) {
                return Err(CollisionError::InterpenetratingInput { a: *ida, b: *idb });
            }
        }
    }
    Ok(())
}

fn reduce_min(results: Vec<Option<(f64, u32, u32)>>) -> Option<f64> {
    results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .map(|(t, _, _)| t)
}

/// First time of contact of an indexed set of shapes within `horizon`: the
/// earliest instant at which some pair touches such that any further
/// movement makes them interpenetrate. `None` past the horizon. Pairs
/// already touching whose relative motion does not cause interpenetration
/// never trigger.
pub fn ftoc(
    shapes: &[(u32, &Shape)],
    horizon: f64,
    tol: &Tolerances,
) -> Result<Option<f64>, CollisionError> {
    check_disjoint(shapes, tol.eps_len)?;
    let pairs = candidate_pairs(shapes, horizon, tol.eps_len);
    let results: Vec<Result<Option<(f64, u32, u32)>, CollisionError>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ids = (shapes[i].0, shapes[j].0);
            Ok(pair_ftoc(ids, shapes[i].1, shapes[j].1, horizon, tol)?
                .map(|t| (t, ids.0, ids.1)))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(reduce_min(results))
}

/// Sequential reference path for [`ftoc`]; with the `parallel` feature off
/// this is also what [`ftoc`] resolves to. Kept public so the bench suite
/// can compare both.
pub fn ftoc_sequential(
    shapes: &[(u32, &Shape)],
    horizon: f64,
    tol: &Tolerances,
) -> Result<Option<f64>, CollisionError> {
    check_disjoint(shapes, tol.eps_len)?;
    let pairs = candidate_pairs(shapes, horizon, tol.eps_len);
    let mut results: Vec<Option<(f64, u32, u32)>> = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        let ids = (shapes[i].0, shapes[j].0);
        results.push(
            pair_ftoc(ids, shapes[i].1, shapes[j].1, horizon, tol)?.map(|t| (t, ids.0, ids.1)),
        );
    }
    Ok(reduce_min(results))
}

/// The colliding set at the current configuration: pairs touching within
/// `contact_eps` whose continued motion interpenetrates, each with its
/// contact surface. Tuples come out sorted by `(idA, idB)`.
pub fn colliding(
    shapes: &[(u32, &Shape)],
    tol: &Tolerances,
    contact_eps: f64,
) -> Vec<CollisionTuple> {
    let mut out: Vec<CollisionTuple> = Vec::new();
    for (i, (ida, sa)) in shapes.iter().enumerate() {
        for (idb, sb) in shapes.iter().skip(i + 1) {
            if crate::geometry::shape_distance(sa, sb) > contact_eps {
                continue;
            }
            let va = sa.velocity().unwrap_or(Vec3::ZERO);
            let vb = sb.velocity().unwrap_or(Vec3::ZERO);
            let rel = vb - va;
            // touching now, interpenetrating a moment later
            if !interpenetrates_displaced(sa, Vec3::ZERO, sb, rel * tol.eps_t, tol.eps_len) {
                continue;
            }
            if let Ok(Some(surface)) = contact_surface(sa, sb, contact_eps) {
                out.push(CollisionTuple {
                    id_a: *ida,
                    id_b: *idb,
                    surface,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.id_a, a.id_b).cmp(&(b.id_a, b.id_b)));
    out
}

/// Elastic collision response on contact surface `x`: the velocities after
/// the impulse exchange that conserves momentum and kinetic energy. When `x`
/// is a face feature of the first shape the impulse acts along that face's
/// outward normal; for edge/vertex contacts it acts along the line from the
/// contact point toward the second shape's reference point.
pub fn elastic_response(
    s1: &Shape,
    s2: &Shape,
    x: &Surface,
    tol: &Tolerances,
) -> Result<(Vec3, Vec3), CollisionError> {
    let n = contact_normal(s1, s2, x, tol)?;
    let v1 = s1.velocity().unwrap_or(Vec3::ZERO);
    let v2 = s2.velocity().unwrap_or(Vec3::ZERO);
    let m1 = s1.mass();
    let m2 = s2.mass();
    let rel_n = (v1 - v2).dot(n); // n is unit, so n·n = 1
    let (w1, w2) = match (m1.is_infinite(), m2.is_infinite()) {
        (false, false) => {
            let lambda = 2.0 * (m1 * m2 / (m1 + m2)) * rel_n;
            (v1 - n * (lambda / m1), v2 + n * (lambda / m2))
        }
        // limits of the finite-mass equations
        (false, true) => (v1 - n * (2.0 * rel_n), v2),
        (true, false) => (v1, v2 + n * (2.0 * rel_n)),
        (true, true) => (v1, v2),
    };
    Ok((w1, w2))
}

fn contact_normal(
    s1: &Shape,
    s2: &Shape,
    x: &Surface,
    tol: &Tolerances,
) -> Result<Vec3, CollisionError> {
    // contact surfaces sit on the mid-plane between the touching features,
    // so the face lookup needs contact-scale slack
    let face_eps = tol.eps_len * 8.0;
    // a unique containing face means x is a face feature of s1; several
    // matches mean x is on an edge or vertex of s1
    let n1 = face_normals_containing(s1, x, face_eps);
    if let [n] = n1.as_slice() {
        return Ok(*n);
    }
    // edge or vertex of s1 against a face of s2: that face carries the
    // line of contact (sign is immaterial to the response)
    let n2 = face_normals_containing(s2, x, face_eps);
    if let [n] = n2.as_slice() {
        return Ok(-*n);
    }
    // edge-edge or corner-corner: direction from the contact point toward
    // the second shape's reference point
    (s2.ref_point() - x.centroid())
        .normalized(tol.eps_len)
        .ok_or(CollisionError::DegenerateNormal)
}

/// Perfectly inelastic response: the mass-weighted average velocity the
/// bound compound moves with.
pub fn inelastic_response(s1: &Shape, s2: &Shape) -> Vec3 {
    let v1 = s1.velocity().unwrap_or(Vec3::ZERO);
    let v2 = s2.velocity().unwrap_or(Vec3::ZERO);
    let m1 = s1.mass();
    let m2 = s2.mass();
    match (m1.is_infinite(), m2.is_infinite()) {
        (false, false) => v1 * (m1 / (m1 + m2)) + v2 * (m2 / (m1 + m2)),
        (true, false) => v1,
        (false, true) => v2,
        (true, true) => (v1 + v2) * 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testkit::*;
    use crate::geometry::{surface, Shape};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn head_on_cube_ftoc_is_one() {
        // A = [0,1]^3 moving +x at 1, B = [2,3]x[0,1]^2 static: gap 1
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(2.5, 0.5, 0.5), Vec3::ZERO);
        let shapes = [(1u32, &a), (2u32, &b)];
        let t = ftoc(&shapes, 5.0, &tol()).unwrap().unwrap();
        assert!((t - 1.0).abs() <= 1e-6, "got {t}");
        let t_seq = ftoc_sequential(&shapes, 5.0, &tol()).unwrap().unwrap();
        assert_eq!(t, t_seq, "parallel and sequential agree bitwise");
    }

    #[test]
    fn static_pair_never_collides() {
        let a = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let b = unit_cube_at(vec3(3.0, 0.0, 0.0), Vec3::ZERO);
        assert!(ftoc(&[(1, &a), (2, &b)], 10.0, &tol()).unwrap().is_none());
    }

    #[test]
    fn touching_co_moving_pair_does_not_trigger() {
        let v = vec3(1.0, 0.0, 0.0);
        let a = unit_cube_at(Vec3::ZERO, v);
        let b = unit_cube_at(vec3(1.0, 0.0, 0.0), v);
        assert!(ftoc(&[(1, &a), (2, &b)], 4.0, &tol()).unwrap().is_none());
    }

    #[test]
    fn interpenetrating_input_is_error() {
        let a = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let b = unit_cube_at(vec3(0.25, 0.0, 0.0), vec3(1.0, 0.0, 0.0));
        assert!(matches!(
            ftoc(&[(1, &a), (2, &b)], 1.0, &tol()),
            Err(CollisionError::InterpenetratingInput { .. })
        ));
    }

    #[test]
    fn tunneling_guard_fires_when_safe_step_unresolvable() {
        // so fast that the probe spacing would drop below time resolution
        let a = unit_cube_at(Vec3::ZERO, vec3(1e6, 0.0, 0.0));
        let b = unit_cube_at(vec3(5.0, 0.0, 0.0), Vec3::ZERO);
        assert!(matches!(
            ftoc(&[(1, &a), (2, &b)], 1.0, &tol()),
            Err(CollisionError::TunnelingGuard { .. })
        ));
    }

    #[test]
    fn fast_pair_contact_not_missed() {
        // 50 length units per step: stepping must still catch the crossing
        let a = unit_cube_at(Vec3::ZERO, vec3(50.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(10.0, 0.0, 0.0), Vec3::ZERO);
        let t = ftoc(&[(1, &a), (2, &b)], 1.0, &tol()).unwrap().unwrap();
        assert!((t - 9.0 / 50.0).abs() < 1e-6, "got {t}");
    }

    #[test]
    fn ftoc_contact_gap_is_tiny_after_polish() {
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(2.5, 0.5, 0.5), Vec3::ZERO);
        let t = ftoc(&[(1, &a), (2, &b)], 5.0, &tol()).unwrap().unwrap();
        let a_t = a.translate_over_time(t).unwrap();
        let b_t = b.translate_over_time(t).unwrap();
        let gap = crate::geometry::shape_distance(&a_t, &b_t);
        assert!(gap <= 1e-9, "gap {gap}");
        assert!(!crate::geometry::interpenetrates(&a_t, &b_t, 1e-9));
    }

    #[test]
    fn colliding_set_extraction() {
        // advance the head-on pair to contact, then ask who collides
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(2.5, 0.5, 0.5), Vec3::ZERO);
        let c = unit_cube_at(vec3(0.5, 5.0, 0.5), Vec3::ZERO); // bystander
        let t = ftoc(&[(1, &a), (2, &b), (3, &c)], 5.0, &tol())
            .unwrap()
            .unwrap();
        let a_t = a.translate_over_time(t).unwrap();
        let b_t = b.translate_over_time(t).unwrap();
        let c_t = c.translate_over_time(t).unwrap();
        let tuples = colliding(&[(1, &a_t), (2, &b_t), (3, &c_t)], &tol(), 1e-9 * 16.0);
        assert_eq!(tuples.len(), 1);
        assert_eq!((tuples[0].id_a, tuples[0].id_b), (1, 2));
        let s = &tuples[0].surface;
        assert_eq!(s.verts().len(), 4);
        assert!((s.measure() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn touching_equal_velocity_pair_excluded_from_colliding() {
        let v = vec3(0.0, 1.0, 0.0);
        let a = unit_cube_at(Vec3::ZERO, v);
        let b = unit_cube_at(vec3(1.0, 0.0, 0.0), v);
        let tuples = colliding(&[(1, &a), (2, &b)], &tol(), 1e-9 * 16.0);
        assert!(tuples.is_empty());
    }

    #[test]
    fn equal_mass_head_on_swap() {
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let a = a.update_velocity(vec3(1.0, 0.0, 0.0));
        let b = b.update_velocity(vec3(-1.0, 0.0, 0.0));
        let (w1, w2) = elastic_response(&a, &b, &face, &tol()).unwrap();
        assert!((w1 - vec3(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((w2 - vec3(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn equal_velocities_unchanged() {
        let v = vec3(0.3, 0.0, 0.0);
        let (a, b, face) = touching_cubes(v);
        let (w1, w2) = elastic_response(&a, &b, &face, &tol()).unwrap();
        assert_eq!(w1, v);
        assert_eq!(w2, v);
    }

    #[test]
    fn wall_reflection_matches_large_mass_limit() {
        let probe = unit_cube_at(Vec3::ZERO, vec3(2.0, 1.0, 0.0));
        let face = surface::unit_square_x(0.5, 0.5);
        let wall = Shape::Basic(cube(3.0, f64::INFINITY, vec3(2.0, 0.0, 0.0), Vec3::ZERO));
        let (w1, w2) = elastic_response(&probe, &wall, &face, &tol()).unwrap();
        assert!((w1 - vec3(-2.0, 1.0, 0.0)).norm() < 1e-12, "normal reflects");
        assert_eq!(w2, Vec3::ZERO);
        // the finite-mass equations converge to the wall limit
        for m in [1e3, 1e6, 1e9] {
            let heavy = Shape::Basic(cube(3.0, m, vec3(2.0, 0.0, 0.0), Vec3::ZERO));
            let (f1, _) = elastic_response(&probe, &heavy, &face, &tol()).unwrap();
            assert!((f1 - w1).norm() < 10.0 / m, "mass {m}");
        }
    }

    #[test]
    fn elastic_conservation_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let m1 = rng.gen_range(0.1..10.0);
            let m2 = rng.gen_range(0.1..10.0);
            let v1 = vec3(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            let v2 = vec3(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            let a = Shape::Basic(cube(1.0, m1, vec3(-0.5, 0.0, 0.0), v1));
            let b = Shape::Basic(cube(1.0, m2, vec3(0.5, 0.0, 0.0), v2));
            let face = surface::unit_square_x(0.0, 0.5);
            let (w1, w2) = elastic_response(&a, &b, &face, &tol()).unwrap();
            let p_before = v1 * m1 + v2 * m2;
            let p_after = w1 * m1 + w2 * m2;
            assert!((p_before - p_after).norm() <= 1e-9 * p_before.norm().max(1.0));
            let ke = |m: f64, v: Vec3| 0.5 * m * v.norm_sq();
            let e_before = ke(m1, v1) + ke(m2, v2);
            let e_after = ke(m1, w1) + ke(m2, w2);
            assert!((e_before - e_after).abs() <= 1e-9 * e_before.max(1.0));
            // involution on the normal component
            let a2 = a.update_velocity(w1);
            let b2 = b.update_velocity(w2);
            let (u1, u2) = elastic_response(&a2, &b2, &face, &tol()).unwrap();
            assert!((u1 - v1).norm() <= 1e-9 * (1.0 + v1.norm()));
            assert!((u2 - v2).norm() <= 1e-9 * (1.0 + v2.norm()));
        }
    }

    #[test]
    fn inelastic_weighted_average() {
        let a = Shape::Basic(cube(1.0, 1.0, Vec3::ZERO, vec3(2.0, 0.0, 0.0)));
        let b = Shape::Basic(cube(1.0, 3.0, vec3(1.0, 0.0, 0.0), Vec3::ZERO));
        let v = inelastic_response(&a, &b);
        assert!((v - vec3(0.5, 0.0, 0.0)).norm() < 1e-12);
        // common velocity is a fixed point
        let w = vec3(0.1, -0.2, 0.3);
        let c = a.update_velocity(w);
        let d = b.update_velocity(w);
        assert!((inelastic_response(&c, &d) - w).norm() < 1e-15);
        // equal masses give the midpoint
        let e = Shape::Basic(cube(1.0, 3.0, Vec3::ZERO, vec3(2.0, 0.0, 0.0)));
        let v = inelastic_response(&e, &b);
        assert!((v - vec3(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ftoc_satisfies_the_three_contact_conditions() {
        // the definition of a first time of contact, as executable checks:
        // no interpenetration up to t, touching at t, interpenetration
        // just after t
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(3.0, 0.8, 0.2), vec3(-0.5, 0.0, 0.0));
        let t = ftoc(&[(1, &a), (2, &b)], 3.0, &tol()).unwrap().unwrap();
        let tl = tol();
        let at = |shape: &Shape, when: f64| shape.translate_over_time(when).unwrap();
        // condition 1, sampled along [0, t]
        for k in 0..=100 {
            let s = t * k as f64 / 100.0;
            assert!(
                !crate::geometry::interpenetrates(&at(&a, s), &at(&b, s), tl.eps_len),
                "no interpenetration before contact (s = {s})"
            );
        }
        // condition 2: touching at t
        let gap = crate::geometry::shape_distance(&at(&a, t), &at(&b, t));
        assert!(gap <= tl.eps_len, "touching at t, gap {gap:e}");
        // condition 3: a moment later they interpenetrate
        assert!(crate::geometry::interpenetrates(
            &at(&a, t + tl.eps_t),
            &at(&b, t + tl.eps_t),
            tl.eps_len
        ));
    }

    #[test]
    fn graze_that_never_interpenetrates_does_not_trigger() {
        // cubes whose corners brush past within eps: touching without
        // interpenetrating must not produce a contact
        let a = unit_cube_at(vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(3.0, 1.0, 0.0), Vec3::ZERO); // corners align exactly
        let t = ftoc(&[(1, &a), (2, &b)], 5.0, &tol()).unwrap();
        assert!(t.is_none(), "graze produced {t:?}");
    }

    #[test]
    fn respond_wraps_both_outcomes() {
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let a = a.update_velocity(vec3(1.0, 0.0, 0.0));
        match respond(&a, &b, &face, true, &tol()).unwrap() {
            ResponseResult::Inelastic { v } => {
                assert!((v - vec3(0.5, 0.0, 0.0)).norm() < 1e-12)
            }
            other => panic!("expected inelastic, got {other:?}"),
        }
        match respond(&a, &b, &face, false, &tol()).unwrap() {
            ResponseResult::Elastic { w_a, w_b } => {
                assert!((w_a - vec3(0.0, 0.0, 0.0)).norm() < 1e-12);
                assert!((w_b - vec3(1.0, 0.0, 0.0)).norm() < 1e-12);
            }
            other => panic!("expected elastic, got {other:?}"),
        }
    }

    #[test]
    fn ftoc_analytic_spot_checks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let side = rng.gen_range(0.5..1.5);
            let gap = rng.gen_range(0.5..2.0);
            let speed = rng.gen_range(0.2..1.0);
            let a = Shape::Basic(cube(side, 1.0, Vec3::ZERO, vec3(speed, 0.0, 0.0)));
            let b = Shape::Basic(cube(
                side,
                1.0,
                vec3(side + gap, rng.gen_range(-0.2..0.2), 0.0),
                Vec3::ZERO,
            ));
            let horizon = (gap / speed) * 1.5;
            let t = ftoc(&[(1, &a), (2, &b)], horizon, &tol()).unwrap();
            let expect = gap / speed;
            let t = t.expect("contact expected");
            assert!((t - expect).abs() <= 1e-6, "t={t} expect={expect}");
        }
    }
}
