//! Convex polytopes in V-representation with derived hull data.
//!
//! A polytope stores its vertices relative to the owning shape's reference
//! point; the hull (supporting planes, polygonal faces, edge directions) is
//! computed once at construction and shared, so translating a shape never
//! rebuilds geometry.

use std::sync::Arc;

use super::vec::{vec3, Vec3};
use super::GeometryError;

/// Halfspace `n · x <= d` with unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub n: Vec3,
    pub d: f64,
}

impl Plane {
    pub fn signed_dist(&self, p: Vec3) -> f64 {
        self.n.dot(p) - self.d
    }

    pub fn flipped(&self) -> Plane {
        Plane {
            n: -self.n,
            d: -self.d,
        }
    }
}

/// A polygonal face of the hull: supporting plane plus its vertices in
/// counter-clockwise order when viewed from outside.
#[derive(Debug, Clone)]
pub struct HullFace {
    pub plane: Plane,
    pub verts: Vec<usize>,
}

#[derive(Debug)]
pub struct HullData {
    /// Affine dimension of the vertex set: 0 point, 1 segment, 2 polygon,
    /// 3 solid.
    pub dim: usize,
    /// Supporting halfspaces; membership means satisfying all of them.
    pub planes: Vec<Plane>,
    /// Proper polygonal faces (dim 3), or the two orientations of the flat
    /// polygon (dim 2). Empty for lower dimensions.
    pub faces: Vec<HullFace>,
    /// Unique edge directions, unit length, canonical sign.
    pub edge_dirs: Vec<Vec3>,
    /// Smallest width across supporting planes; 0 for flat hulls.
    pub min_extent: f64,
    pub centroid: Vec3,
}

/// Convex polytope in local coordinates.
#[derive(Debug, Clone)]
pub struct ConvexPolytope {
    verts: Vec<Vec3>,
    hull: Arc<HullData>,
}

impl PartialEq for ConvexPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.verts == other.verts
    }
}

impl ConvexPolytope {
    /// Builds a polytope, requiring every input vertex to be an extreme point
    /// of the hull: duplicates and interior vertices within `eps` are
    /// rejected.
    pub fn new(verts: Vec<Vec3>, eps: f64) -> Result<Self, GeometryError> {
        if verts.is_empty() {
            return Err(GeometryError::EmptyPolytope);
        }
        for v in &verts {
            if !v.is_finite() {
                return Err(GeometryError::NonFiniteCoordinate);
            }
        }
        for (i, v) in verts.iter().enumerate() {
            for w in &verts[i + 1..] {
                if v.approx_eq(*w, eps) {
                    return Err(GeometryError::RedundantVertex { vertex: *v });
                }
            }
        }
        let hull = build_hull(&verts, eps)?;
        let extreme = hull_vertex_flags(&verts, &hull, eps);
        if let Some(i) = extreme.iter().position(|e| !e) {
            return Err(GeometryError::RedundantVertex { vertex: verts[i] });
        }
        Ok(ConvexPolytope {
            verts,
            hull: Arc::new(hull),
        })
    }

    /// Builds the hull of an arbitrary point cloud, silently dropping
    /// non-extreme points.
    pub fn hull_of(points: &[Vec3], eps: f64) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyPolytope);
        }
        let mut deduped: Vec<Vec3> = Vec::new();
        for p in points {
            if !p.is_finite() {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            if !deduped.iter().any(|q| q.approx_eq(*p, eps)) {
                deduped.push(*p);
            }
        }
        let hull = build_hull(&deduped, eps)?;
        let flags = hull_vertex_flags(&deduped, &hull, eps);
        let verts: Vec<Vec3> = deduped
            .into_iter()
            .zip(flags)
            .filter_map(|(v, keep)| keep.then_some(v))
            .collect();
        let hull = build_hull(&verts, eps)?;
        Ok(ConvexPolytope {
            verts,
            hull: Arc::new(hull),
        })
    }

    pub fn verts(&self) -> &[Vec3] {
        &self.verts
    }

    pub fn hull(&self) -> &HullData {
        &self.hull
    }

    pub fn dim(&self) -> usize {
        self.hull.dim
    }

    /// Farthest vertex along `dir`; ties broken lexicographically so the
    /// answer is deterministic.
    pub fn support(&self, dir: Vec3) -> Vec3 {
        let mut best = self.verts[0];
        let mut best_d = best.dot(dir);
        for &v in &self.verts[1..] {
            let d = v.dot(dir);
            if d > best_d + 1e-15 || (d >= best_d - 1e-15 && v.lex_cmp(&best).is_lt()) {
                if d > best_d {
                    best_d = d;
                }
                best = v;
            }
        }
        best
    }

    /// Point membership (local frame) with `eps` slack.
    pub fn contains(&self, p: Vec3, eps: f64) -> bool {
        self.hull.planes.iter().all(|pl| pl.signed_dist(p) <= eps)
    }

    /// True when `p` lies within `eps` of the polytope surface. For flat
    /// hulls the whole set is boundary.
    pub fn on_boundary(&self, p: Vec3, eps: f64) -> bool {
        if !self.contains(p, eps) {
            return false;
        }
        if self.hull.dim < 3 {
            return true;
        }
        self.hull
            .planes
            .iter()
            .any(|pl| pl.signed_dist(p).abs() <= eps)
    }

    /// True when an open ball of radius `eps` around `p` stays inside.
    pub fn is_interior(&self, p: Vec3, eps: f64) -> bool {
        if self.hull.dim < 3 {
            return false;
        }
        self.hull.planes.iter().all(|pl| pl.signed_dist(p) < -eps)
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = self.verts[0];
        let mut hi = self.verts[0];
        for v in &self.verts[1..] {
            lo = vec3(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = vec3(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }
}

fn hull_vertex_flags(verts: &[Vec3], hull: &HullData, eps: f64) -> Vec<bool> {
    // A vertex is extreme iff some supporting plane set pins it: for dim 3 it
    // must lie on at least 3 face planes, dim 2 on at least 2 edge planes,
    // dim 1 on an end plane. Equivalently (and robustly): it is NOT in the
    // hull of the others. We use the plane-count criterion, which is exact
    // for the hulls we build.
    verts
        .iter()
        .map(|&v| {
            let needed = match hull.dim {
                0 => return true,
                1 => 1,
                2 => 2,
                _ => 3,
            };
            let active = hull
                .planes
                .iter()
                .filter(|pl| pl.signed_dist(v).abs() <= eps * 4.0)
                .count();
            // For flat hulls the two carrier planes are always active; only
            // planes beyond the carrier pair pin the vertex.
            let carrier = match hull.dim {
                1 => 4,
                2 => 2,
                _ => 0,
            };
            active.saturating_sub(carrier) >= needed
        })
        .collect()
}

fn build_hull(verts: &[Vec3], eps: f64) -> Result<HullData, GeometryError> {
    let (dim, basis) = affine_basis(verts, eps);
    match dim {
        0 => Ok(hull0(verts[0])),
        1 => Ok(hull1(verts, basis[0], basis[1], eps)),
        2 => hull2(verts, basis[0], basis[1], basis[2], eps),
        _ => hull3(verts, basis, eps),
    }
}

/// Finds up to 4 affinely independent vertex indices.
fn affine_basis(verts: &[Vec3], eps: f64) -> (usize, [usize; 4]) {
    let mut idx = [0usize; 4];
    let p0 = verts[0];
    // farthest point from p0
    let (i1, d1) = verts
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.dist(p0)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if d1 <= eps {
        return (0, idx);
    }
    idx[1] = i1;
    let u = (verts[i1] - p0) / d1;
    // farthest from the line
    let (i2, d2) = verts
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = *v - p0;
            (i, (w - u * w.dot(u)).norm())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if d2 <= eps {
        return (1, idx);
    }
    idx[2] = i2;
    let n = u.cross(verts[i2] - p0).normalized(0.0).unwrap();
    // farthest from the plane
    let (i3, d3) = verts
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (*v - p0).dot(n).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if d3 <= eps {
        return (2, idx);
    }
    idx[3] = i3;
    (3, idx)
}

fn axis_frame(n: Vec3) -> (Vec3, Vec3) {
    let pick = if n.x.abs() < 0.9 {
        vec3(1.0, 0.0, 0.0)
    } else {
        vec3(0.0, 1.0, 0.0)
    };
    let u = n.cross(pick).normalized(0.0).unwrap();
    let w = n.cross(u);
    (u, w)
}

fn hull0(p: Vec3) -> HullData {
    let axes = [
        vec3(1.0, 0.0, 0.0),
        vec3(-1.0, 0.0, 0.0),
        vec3(0.0, 1.0, 0.0),
        vec3(0.0, -1.0, 0.0),
        vec3(0.0, 0.0, 1.0),
        vec3(0.0, 0.0, -1.0),
    ];
    HullData {
        dim: 0,
        planes: axes.iter().map(|&n| Plane { n, d: n.dot(p) }).collect(),
        faces: Vec::new(),
        edge_dirs: Vec::new(),
        min_extent: 0.0,
        centroid: p,
    }
}

fn hull1(verts: &[Vec3], i0: usize, i1: usize, _eps: f64) -> HullData {
    // Endpoints are the extremes along the carrier direction.
    let dir = (verts[i1] - verts[i0]).normalized(0.0).unwrap();
    let (lo, hi) = verts.iter().fold((verts[i0], verts[i1]), |(lo, hi), &v| {
        let t = v.dot(dir);
        (
            if t < lo.dot(dir) { v } else { lo },
            if t > hi.dot(dir) { v } else { hi },
        )
    });
    let (u, w) = axis_frame(dir);
    let planes = vec![
        Plane {
            n: dir,
            d: dir.dot(hi),
        },
        Plane {
            n: -dir,
            d: -dir.dot(lo),
        },
        Plane { n: u, d: u.dot(lo) },
        Plane {
            n: -u,
            d: -u.dot(lo),
        },
        Plane { n: w, d: w.dot(lo) },
        Plane {
            n: -w,
            d: -w.dot(lo),
        },
    ];
    HullData {
        dim: 1,
        planes,
        faces: Vec::new(),
        edge_dirs: vec![canonical_dir(dir)],
        min_extent: 0.0,
        centroid: (lo + hi) * 0.5,
    }
}

fn hull2(
    verts: &[Vec3],
    i0: usize,
    i1: usize,
    i2: usize,
    eps: f64,
) -> Result<HullData, GeometryError> {
    let n = (verts[i1] - verts[i0])
        .cross(verts[i2] - verts[i0])
        .normalized(0.0)
        .unwrap();
    let order = planar_hull_order(verts, n, eps)?;
    let poly: Vec<Vec3> = order.iter().map(|&i| verts[i]).collect();
    let centroid = poly.iter().fold(Vec3::ZERO, |a, &v| a + v) / poly.len() as f64;
    let mut planes = vec![
        Plane { n, d: n.dot(poly[0]) },
        Plane {
            n: -n,
            d: -n.dot(poly[0]),
        },
    ];
    let mut edge_dirs = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if let Some(e) = (b - a).normalized(eps) {
            let side = e.cross(n);
            let side = if side.dot(centroid - a) > 0.0 { -side } else { side };
            planes.push(Plane {
                n: side,
                d: side.dot(a),
            });
            push_unique_dir(&mut edge_dirs, e);
        }
    }
    let faces = vec![
        HullFace {
            plane: planes[0],
            verts: order.clone(),
        },
        HullFace {
            plane: planes[1],
            verts: order.iter().rev().copied().collect(),
        },
    ];
    Ok(HullData {
        dim: 2,
        planes,
        faces,
        edge_dirs,
        min_extent: 0.0,
        centroid,
    })
}

/// Indices of the 2D convex hull of coplanar points, counter-clockwise
/// around `n`, starting from the lexicographically smallest vertex.
pub(crate) fn planar_hull_order(
    verts: &[Vec3],
    n: Vec3,
    _eps: f64,
) -> Result<Vec<usize>, GeometryError> {
    let (u, w) = axis_frame(n);
    let pts2: Vec<(f64, f64)> = verts.iter().map(|v| (v.dot(u), v.dot(w))).collect();
    let mut idx: Vec<usize> = (0..verts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts2[a]
            .0
            .total_cmp(&pts2[b].0)
            .then(pts2[a].1.total_cmp(&pts2[b].1))
    });
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (pts2[a].0 - pts2[o].0) * (pts2[b].1 - pts2[o].1)
            - (pts2[a].1 - pts2[o].1) * (pts2[b].0 - pts2[o].0)
    };
    // Monotone chain; collinear midpoints are dropped.
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    // The chain runs counter-clockwise in (u, w); flip if that disagrees
    // with the requested normal.
    let a = verts[lower[0]];
    let b = verts[lower[1]];
    let c = verts[lower[2]];
    if (b - a).cross(c - a).dot(n) < 0.0 {
        lower.reverse();
    }
    // canonical start: lexicographically smallest vertex first
    let start = lower
        .iter()
        .enumerate()
        .min_by(|(_, &i), (_, &j)| verts[i].lex_cmp(&verts[j]))
        .map(|(k, _)| k)
        .unwrap();
    lower.rotate_left(start);
    Ok(lower)
}

struct QhFace {
    v: [usize; 3],
    plane: Plane,
    outside: Vec<usize>,
    alive: bool,
}

fn make_face(verts: &[Vec3], a: usize, b: usize, c: usize, interior: Vec3) -> Option<QhFace> {
    let n = (verts[b] - verts[a]).cross(verts[c] - verts[a]);
    let n = n.normalized(1e-14)?;
    let mut plane = Plane {
        n,
        d: n.dot(verts[a]),
    };
    let mut v = [a, b, c];
    if plane.signed_dist(interior) > 0.0 {
        plane = plane.flipped();
        v.swap(1, 2);
    }
    Some(QhFace {
        v,
        plane,
        outside: Vec::new(),
        alive: true,
    })
}

fn hull3(verts: &[Vec3], basis: [usize; 4], eps: f64) -> Result<HullData, GeometryError> {
    let [i0, i1, i2, i3] = basis;
    let interior = (verts[i0] + verts[i1] + verts[i2] + verts[i3]) / 4.0;
    let mut faces: Vec<QhFace> = Vec::new();
    for (a, b, c) in [(i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)] {
        faces.push(make_face(verts, a, b, c, interior).ok_or(GeometryError::DegenerateHull)?);
    }
    let lift = eps.max(1e-12);
    let in_simplex = |i: usize| i == i0 || i == i1 || i == i2 || i == i3;
    for i in 0..verts.len() {
        if in_simplex(i) {
            continue;
        }
        if let Some(f) = faces
            .iter_mut()
            .find(|f| f.plane.signed_dist(verts[i]) > lift)
        {
            f.outside.push(i);
        }
    }

    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > verts.len() * 8 + 64 {
            return Err(GeometryError::DegenerateHull);
        }
        let Some(fi) = faces.iter().position(|f| f.alive && !f.outside.is_empty()) else {
            break;
        };
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                faces[fi]
                    .plane
                    .signed_dist(verts[a])
                    .total_cmp(&faces[fi].plane.signed_dist(verts[b]))
            })
            .unwrap();
        let p = verts[apex];
        // all faces the apex can see
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.plane.signed_dist(p) > lift)
            .map(|(i, _)| i)
            .collect();
        let mut orphans: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &i in &visible {
            let [a, b, c] = faces[i].v;
            edges.extend_from_slice(&[(a, b), (b, c), (c, a)]);
            orphans.append(&mut faces[i].outside);
            faces[i].alive = false;
        }
        // horizon = directed edges whose reverse is not among visible faces
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| !edges.contains(&(b, a)))
            .collect();
        let mut new_faces: Vec<QhFace> = Vec::new();
        for (a, b) in horizon {
            let f = make_face(verts, a, b, apex, interior).ok_or(GeometryError::DegenerateHull)?;
            new_faces.push(f);
        }
        for o in orphans {
            if o == apex {
                continue;
            }
            if let Some(f) = new_faces
                .iter_mut()
                .find(|f| f.plane.signed_dist(verts[o]) > lift)
            {
                f.outside.push(o);
            }
        }
        faces.extend(new_faces);
    }

    let tris: Vec<&QhFace> = faces.iter().filter(|f| f.alive).collect();
    if tris.is_empty() {
        return Err(GeometryError::DegenerateHull);
    }

    // merge coplanar triangles into polygonal faces
    let d_eps = eps.max(1e-12);
    let mut planes: Vec<Plane> = Vec::new();
    for f in &tris {
        let found = planes
            .iter()
            .any(|pl| pl.n.dot(f.plane.n) > 1.0 - 1e-9 && (pl.d - f.plane.d).abs() <= d_eps * 8.0);
        if !found {
            planes.push(f.plane);
        }
    }
    let mut hull_verts: Vec<usize> = tris.iter().flat_map(|f| f.v).collect();
    hull_verts.sort_unstable();
    hull_verts.dedup();

    let mut out_faces: Vec<HullFace> = Vec::new();
    let mut edge_dirs: Vec<Vec3> = Vec::new();
    for pl in &planes {
        let on: Vec<usize> = hull_verts
            .iter()
            .copied()
            .filter(|&i| pl.signed_dist(verts[i]).abs() <= d_eps * 8.0)
            .collect();
        if on.len() < 3 {
            return Err(GeometryError::DegenerateHull);
        }
        let pts: Vec<Vec3> = on.iter().map(|&i| verts[i]).collect();
        let order = planar_hull_order(&pts, pl.n, eps)?;
        let poly: Vec<usize> = order.iter().map(|&k| on[k]).collect();
        for i in 0..poly.len() {
            let a = verts[poly[i]];
            let b = verts[poly[(i + 1) % poly.len()]];
            if let Some(e) = (b - a).normalized(1e-14) {
                push_unique_dir(&mut edge_dirs, e);
            }
        }
        out_faces.push(HullFace {
            plane: *pl,
            verts: poly,
        });
    }

    let centroid = hull_verts
        .iter()
        .fold(Vec3::ZERO, |acc, &i| acc + verts[i])
        / hull_verts.len() as f64;
    let min_extent = planes
        .iter()
        .map(|pl| {
            let lo = hull_verts
                .iter()
                .map(|&i| pl.n.dot(verts[i]))
                .fold(f64::INFINITY, f64::min);
            pl.d - lo
        })
        .fold(f64::INFINITY, f64::min);

    Ok(HullData {
        dim: 3,
        planes,
        faces: out_faces,
        edge_dirs,
        min_extent,
        centroid,
    })
}

fn canonical_dir(d: Vec3) -> Vec3 {
    if d.lex_cmp(&Vec3::ZERO).is_lt() {
        -d
    } else {
        d
    }
}

fn push_unique_dir(dirs: &mut Vec<Vec3>, d: Vec3) {
    let c = canonical_dir(d);
    if !dirs.iter().any(|e| e.cross(c).norm() < 1e-9) {
        dirs.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn cube_verts(side: f64) -> Vec<Vec3> {
        let h = side / 2.0;
        let mut v = Vec::new();
        for &x in &[-h, h] {
            for &y in &[-h, h] {
                for &z in &[-h, h] {
                    v.push(vec3(x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn cube_hull() {
        let p = ConvexPolytope::new(cube_verts(2.0), 1e-9).unwrap();
        let h = p.hull();
        assert_eq!(h.dim, 3);
        assert_eq!(h.planes.len(), 6);
        assert_eq!(h.faces.len(), 6);
        assert_eq!(h.edge_dirs.len(), 3);
        assert!((h.min_extent - 2.0).abs() < 1e-9);
        for f in &h.faces {
            assert_eq!(f.verts.len(), 4);
        }
        assert!(p.contains(vec3(0.0, 0.0, 0.0), 1e-9));
        assert!(p.is_interior(vec3(0.0, 0.0, 0.0), 1e-9));
        assert!(p.on_boundary(vec3(1.0, 0.0, 0.0), 1e-9));
        assert!(!p.is_interior(vec3(1.0, 0.0, 0.0), 1e-9));
        assert!(!p.contains(vec3(1.1, 0.0, 0.0), 1e-9));
    }

    #[test]
    fn tetrahedron_hull() {
        let v = vec![
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ];
        let p = ConvexPolytope::new(v, 1e-9).unwrap();
        assert_eq!(p.hull().dim, 3);
        assert_eq!(p.hull().planes.len(), 4);
        assert_eq!(p.hull().faces.len(), 4);
    }

    #[test]
    fn octahedron_hull() {
        let v = vec![
            vec3(1.0, 0.0, 0.0),
            vec3(-1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, -1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
            vec3(0.0, 0.0, -1.0),
        ];
        let p = ConvexPolytope::new(v, 1e-9).unwrap();
        assert_eq!(p.hull().faces.len(), 8);
    }

    #[test]
    fn interior_vertex_rejected() {
        let mut v = cube_verts(2.0);
        v.push(vec3(0.0, 0.0, 0.0));
        let err = ConvexPolytope::new(v, 1e-9).unwrap_err();
        assert!(matches!(err, GeometryError::RedundantVertex { .. }));
    }

    #[test]
    fn face_midpoint_vertex_rejected() {
        let mut v = cube_verts(2.0);
        v.push(vec3(1.0, 0.0, 0.0));
        assert!(ConvexPolytope::new(v, 1e-9).is_err());
    }

    #[test]
    fn duplicate_vertex_rejected() {
        let mut v = cube_verts(2.0);
        v.push(vec3(1.0, 1.0, 1.0));
        assert!(matches!(
            ConvexPolytope::new(v, 1e-9),
            Err(GeometryError::RedundantVertex { .. })
        ));
    }

    #[test]
    fn hull_of_drops_interior_points() {
        let mut v = cube_verts(2.0);
        v.push(vec3(0.1, 0.2, 0.3));
        v.push(vec3(0.0, 0.0, 0.99));
        let p = ConvexPolytope::hull_of(&v, 1e-9).unwrap();
        assert_eq!(p.verts().len(), 8);
    }

    #[test]
    fn flat_square_hull() {
        let v = vec![
            vec3(0.0, 0.0, 1.0),
            vec3(1.0, 0.0, 1.0),
            vec3(1.0, 1.0, 1.0),
            vec3(0.0, 1.0, 1.0),
        ];
        let p = ConvexPolytope::new(v, 1e-9).unwrap();
        assert_eq!(p.dim(), 2);
        assert!(p.contains(vec3(0.5, 0.5, 1.0), 1e-9));
        assert!(!p.contains(vec3(0.5, 0.5, 1.1), 1e-9));
        assert!(!p.is_interior(vec3(0.5, 0.5, 1.0), 1e-9));
        assert!(p.on_boundary(vec3(0.5, 0.5, 1.0), 1e-9));
    }

    #[test]
    fn segment_hull() {
        let v = vec![vec3(0.0, 0.0, 0.0), vec3(2.0, 0.0, 0.0)];
        let p = ConvexPolytope::new(v, 1e-9).unwrap();
        assert_eq!(p.dim(), 1);
        assert!(p.contains(vec3(1.0, 0.0, 0.0), 1e-9));
        assert!(!p.contains(vec3(1.0, 0.1, 0.0), 1e-9));
        let mid = vec![vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(2.0, 0.0, 0.0)];
        assert!(ConvexPolytope::new(mid, 1e-9).is_err());
    }

    #[test]
    fn point_hull() {
        let p = ConvexPolytope::new(vec![vec3(1.0, 2.0, 3.0)], 1e-9).unwrap();
        assert_eq!(p.dim(), 0);
        assert!(p.contains(vec3(1.0, 2.0, 3.0), 1e-9));
        assert!(!p.contains(vec3(1.0, 2.0, 3.1), 1e-9));
    }

    #[test]
    fn random_cloud_hull_contains_all_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let pts: Vec<Vec3> = (0..40)
                .map(|_| {
                    vec3(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let p = ConvexPolytope::hull_of(&pts, 1e-9).unwrap();
            for q in &pts {
                assert!(p.contains(*q, 1e-7), "hull must contain every input");
            }
            // Euler: V - E + F = 2 (count edges from faces)
            let f = p.hull().faces.len();
            let e: usize = p.hull().faces.iter().map(|f| f.verts.len()).sum::<usize>() / 2;
            let v = p.verts().len();
            assert_eq!(v + f, e + 2, "Euler characteristic");
        }
    }
}
