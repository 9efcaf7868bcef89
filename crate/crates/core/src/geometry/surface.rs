//! Contact surfaces: points, segments and convex planar polygons.
//!
//! Channels, bonds, and shape compositions all carry surfaces. The
//! constructor canonicalizes the vertex order (hull order, lexicographically
//! smallest vertex first, orientation along a sign-canonical normal) so that
//! equal point sets print and compare identically.

use serde::{Deserialize, Serialize};

use super::gjk;
use super::polytope::{planar_hull_order, Plane};
use super::vec::{Vec3, vec3};
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Point,
    Segment,
    Polygon,
}

/// A non-empty convex set of contact points: a single point, a segment or a
/// convex coplanar polygon. Whether coordinates are local to a shape or
/// global follows from context: surfaces inside behaviours are local to the
/// host shape, surfaces on processes and bonds are global.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    verts: Vec<Vec3>,
}

impl Surface {
    pub fn point(p: Vec3) -> Surface {
        Surface { verts: vec![p] }
    }

    /// Canonicalizes: dedups within `eps`, drops non-extreme vertices, orders
    /// polygon vertices counter-clockwise around the sign-canonical normal.
    pub fn new(verts: Vec<Vec3>, eps: f64) -> Result<Surface, GeometryError> {
        let mut dedup: Vec<Vec3> = Vec::new();
        for v in verts {
            if !v.is_finite() {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            if !dedup.iter().any(|q| q.approx_eq(v, eps)) {
                dedup.push(v);
            }
        }
        match dedup.len() {
            0 => Err(GeometryError::EmptySurface),
            1 => Ok(Surface { verts: dedup }),
            _ => Self::canonicalize(dedup, eps),
        }
    }

    fn canonicalize(pts: Vec<Vec3>, eps: f64) -> Result<Surface, GeometryError> {
        // affine dimension of the set
        let p0 = pts[0];
        let (far, dist) = pts
            .iter()
            .map(|&v| (v, v.dist(p0)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if dist <= eps {
            return Ok(Surface { verts: vec![p0] });
        }
        let axis = (far - p0) / dist;
        let off_line = pts
            .iter()
            .map(|&v| {
                let w = v - p0;
                (v, (w - axis * w.dot(axis)).norm())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if off_line.1 <= eps {
            // collinear: keep the two extremes in lexicographic order
            let (mut lo, mut hi) = (p0, far);
            for &v in &pts {
                let t = v.dot(axis);
                if t < lo.dot(axis) {
                    lo = v;
                }
                if t > hi.dot(axis) {
                    hi = v;
                }
            }
            let mut ends = [lo, hi];
            ends.sort_by(|a, b| a.lex_cmp(b));
            return Ok(Surface {
                verts: ends.to_vec(),
            });
        }
        let n = axis
            .cross(off_line.0 - p0)
            .normalized(0.0)
            .expect("non-collinear");
        // coplanarity check
        for v in &pts {
            if (*v - p0).dot(n).abs() > eps * 8.0 {
                return Err(GeometryError::SurfaceNotPlanar);
            }
        }
        let n = canonical_normal(n);
        let order = planar_hull_order(&pts, n, eps)?;
        let verts = order.into_iter().map(|i| pts[i]).collect();
        Ok(Surface { verts })
    }

    pub fn kind(&self) -> SurfaceKind {
        match self.verts.len() {
            1 => SurfaceKind::Point,
            2 => SurfaceKind::Segment,
            _ => SurfaceKind::Polygon,
        }
    }

    pub fn verts(&self) -> &[Vec3] {
        &self.verts
    }

    pub fn affine_dim(&self) -> usize {
        match self.verts.len() {
            1 => 0,
            2 => 1,
            _ => 2,
        }
    }

    pub fn translated(&self, dv: Vec3) -> Surface {
        Surface {
            verts: self.verts.iter().map(|&v| v + dv).collect(),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        self.verts.iter().fold(Vec3::ZERO, |a, &v| a + v) / self.verts.len() as f64
    }

    /// Supporting plane of a polygon surface, sign-canonical normal.
    pub fn plane(&self) -> Option<Plane> {
        if self.verts.len() < 3 {
            return None;
        }
        let n = (self.verts[1] - self.verts[0])
            .cross(self.verts[2] - self.verts[0])
            .normalized(0.0)?;
        let n = canonical_normal(n);
        Some(Plane {
            n,
            d: n.dot(self.verts[0]),
        })
    }

    /// Polygon area, segment length, or 0 for a point.
    pub fn measure(&self) -> f64 {
        match self.kind() {
            SurfaceKind::Point => 0.0,
            SurfaceKind::Segment => self.verts[0].dist(self.verts[1]),
            SurfaceKind::Polygon => {
                let o = self.verts[0];
                let mut acc = Vec3::ZERO;
                for i in 1..self.verts.len() - 1 {
                    acc += (self.verts[i] - o).cross(self.verts[i + 1] - o);
                }
                acc.norm() * 0.5
            }
        }
    }

    /// Vertices, edge midpoints and centroid: the sample set used by
    /// tolerant set-inclusion checks.
    pub fn sample_points(&self) -> Vec<Vec3> {
        let mut pts = self.verts.clone();
        let n = self.verts.len();
        if n >= 2 {
            for i in 0..n {
                let j = (i + 1) % n;
                if n == 2 && i == 1 {
                    break;
                }
                pts.push((self.verts[i] + self.verts[j]) * 0.5);
            }
            pts.push(self.centroid());
        }
        pts
    }

    pub fn distance_to(&self, other: &Surface) -> f64 {
        gjk::distance(&self.verts, &other.verts, Vec3::ZERO, Vec3::ZERO)
    }

    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        gjk::distance(&self.verts, &[p], Vec3::ZERO, Vec3::ZERO)
    }

    pub fn contains_point(&self, p: Vec3, eps: f64) -> bool {
        self.distance_to_point(p) <= eps
    }

    /// `other` lies inside this surface as a convex set, up to `eps`.
    pub fn contains_surface(&self, other: &Surface, eps: f64) -> bool {
        other
            .sample_points()
            .iter()
            .all(|&p| self.contains_point(p, eps))
    }

    /// Point-set equality up to `eps`: same affine dimension and mutual
    /// sample inclusion.
    pub fn approx_eq(&self, other: &Surface, eps: f64) -> bool {
        self.affine_dim() == other.affine_dim()
            && self.contains_surface(other, eps)
            && other.contains_surface(self, eps)
    }

    /// Intersection of two surfaces as convex sets, `None` when they are
    /// farther than `eps` apart. Nearly-coplanar polygons (within `eps`) are
    /// clipped on their mid-plane.
    pub fn intersect(&self, other: &Surface, eps: f64) -> Option<Surface> {
        if self.distance_to(other) > eps {
            return None;
        }
        let result = match (self.affine_dim(), other.affine_dim()) {
            (0, _) => Some(vec![self.verts[0]]),
            (_, 0) => Some(vec![other.verts[0]]),
            (1, 1) => segment_segment(&self.verts, &other.verts, eps),
            (1, 2) => segment_polygon(&self.verts, other, eps),
            (2, 1) => segment_polygon(&other.verts, self, eps),
            (2, 2) => polygon_polygon(self, other, eps),
            _ => unreachable!(),
        }?;
        Surface::new(result, eps.max(1e-12)).ok()
    }

    /// Canonical comparison key: kind, then lexicographic vertex list.
    pub fn cmp_key(&self, other: &Surface) -> std::cmp::Ordering {
        self.verts
            .len()
            .cmp(&other.verts.len())
            .then_with(|| {
                for (a, b) in self.verts.iter().zip(&other.verts) {
                    let c = a.lex_cmp(b);
                    if c.is_ne() {
                        return c;
                    }
                }
                std::cmp::Ordering::Equal
            })
    }
}

fn canonical_normal(n: Vec3) -> Vec3 {
    if n.lex_cmp(&Vec3::ZERO).is_lt() {
        -n
    } else {
        n
    }
}

fn segment_segment(a: &[Vec3], b: &[Vec3], eps: f64) -> Option<Vec<Vec3>> {
    let da = a[1] - a[0];
    let db = b[1] - b[0];
    if da.cross(db).norm() <= eps * (1.0 + da.norm() * db.norm()) {
        // parallel; collinear overlap if the lines coincide
        let u = da.normalized(eps)?;
        let off = b[0] - a[0];
        if (off - u * off.dot(u)).norm() > eps * 4.0 {
            // parallel but offset: closest-point contact
            return closest_point_contact(a, b);
        }
        let ta = [0.0, da.norm()];
        let tb = [(b[0] - a[0]).dot(u), (b[1] - a[0]).dot(u)];
        let lo = ta[0].max(tb[0].min(tb[1]));
        let hi = ta[1].min(tb[0].max(tb[1]));
        if lo > hi + eps {
            return None;
        }
        Some(vec![a[0] + u * lo, a[0] + u * hi])
    } else {
        closest_point_contact(a, b)
    }
}

/// Midpoint of the closest pair, used for crossing/touching contacts.
fn closest_point_contact(a: &[Vec3], b: &[Vec3]) -> Option<Vec<Vec3>> {
    // dense parameter scan is overkill; project b endpoints and refine by
    // ternary section on the pair distance, which is convex
    let f = |t: f64, s: f64| -> f64 {
        let pa = a[0] + (a[1] - a[0]) * t;
        let pb = b[0] + (b[1] - b[0]) * s;
        pa.dist(pb)
    };
    let mut t = 0.5;
    let mut s = 0.5;
    for _ in 0..64 {
        // coordinate descent on the convex distance
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..40 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1, s) < f(m2, s) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        t = (lo + hi) / 2.0;
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..40 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(t, m1) < f(t, m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        s = (lo + hi) / 2.0;
    }
    let pa = a[0] + (a[1] - a[0]) * t;
    let pb = b[0] + (b[1] - b[0]) * s;
    Some(vec![(pa + pb) * 0.5])
}

fn segment_polygon(seg: &[Vec3], poly: &Surface, eps: f64) -> Option<Vec<Vec3>> {
    let plane = poly.plane()?;
    let d0 = plane.signed_dist(seg[0]);
    let d1 = plane.signed_dist(seg[1]);
    if d0.abs() <= eps * 4.0 && d1.abs() <= eps * 4.0 {
        // in-plane: clip the segment by the polygon's edge halfplanes
        let mut a = seg[0];
        let mut b = seg[1];
        for hp in polygon_edge_planes(poly) {
            let da = hp.signed_dist(a);
            let db = hp.signed_dist(b);
            if da > eps && db > eps {
                return None;
            }
            if da > eps {
                a = a + (b - a) * (da / (da - db));
            } else if db > eps {
                b = b + (a - b) * (db / (db - da));
            }
        }
        Some(vec![a, b])
    } else {
        // crossing: plane intersection point, kept if inside the polygon
        if (d0 > eps && d1 > eps) || (d0 < -eps && d1 < -eps) {
            return None;
        }
        let t = d0 / (d0 - d1);
        let p = seg[0] + (seg[1] - seg[0]) * t.clamp(0.0, 1.0);
        poly.contains_point(p, eps).then(|| vec![p])
    }
}

fn polygon_polygon(a: &Surface, b: &Surface, eps: f64) -> Option<Vec<Vec3>> {
    let pa = a.plane()?;
    let pb = b.plane()?;
    let parallel = pa.n.cross(pb.n).norm() <= 1e-7;
    if parallel {
        let off = (pb.d * pb.n.dot(pa.n) - pa.d).abs();
        if off > eps * 4.0 {
            return None;
        }
        // clip a's polygon by b's edge halfplanes on the mid-plane
        let mid = Plane {
            n: pa.n,
            d: (pa.d + pb.d * pb.n.dot(pa.n)) / 2.0,
        };
        let proj =
            |v: Vec3| -> Vec3 { v - mid.n * mid.signed_dist(v) };
        let mut poly: Vec<Vec3> = a.verts.iter().map(|&v| proj(v)).collect();
        for hp in polygon_edge_planes(b) {
            poly = clip_by_halfplane(&poly, hp, eps);
            if poly.is_empty() {
                return None;
            }
        }
        Some(poly)
    } else {
        // intersection lives on the line common to both planes
        let clip_line = |poly: &Surface, cut: Plane| -> Option<(Vec3, Vec3)> {
            let mut pts: Vec<Vec3> = Vec::new();
            let n = poly.verts.len();
            for i in 0..n {
                let p = poly.verts[i];
                let q = poly.verts[(i + 1) % n];
                let dp = cut.signed_dist(p);
                let dq = cut.signed_dist(q);
                if dp.abs() <= eps {
                    pts.push(p);
                }
                if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
                    pts.push(p + (q - p) * (dp / (dp - dq)));
                }
            }
            if pts.is_empty() {
                return None;
            }
            let dir = pa.n.cross(pb.n).normalized(0.0)?;
            let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), &v| {
                (
                    if v.dot(dir) < lo.dot(dir) { v } else { lo },
                    if v.dot(dir) > hi.dot(dir) { v } else { hi },
                )
            });
            Some((lo, hi))
        };
        let (a0, a1) = clip_line(a, pb)?;
        let (b0, b1) = clip_line(b, pa)?;
        let dir = pa.n.cross(pb.n).normalized(0.0)?;
        let lo = a0.dot(dir).max(b0.dot(dir).min(b1.dot(dir)));
        let hi = a1.dot(dir).min(b0.dot(dir).max(b1.dot(dir)));
        if lo > hi + eps {
            return None;
        }
        let origin = a0;
        let t0 = lo - origin.dot(dir);
        let t1 = hi - origin.dot(dir);
        Some(vec![origin + dir * t0, origin + dir * t1])
    }
}

fn polygon_edge_planes(poly: &Surface) -> Vec<Plane> {
    let Some(plane) = poly.plane() else {
        return Vec::new();
    };
    let c = poly.centroid();
    let n = poly.verts.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = poly.verts[i];
        let b = poly.verts[(i + 1) % n];
        if let Some(e) = (b - a).normalized(1e-14) {
            let mut side = e.cross(plane.n);
            if side.dot(c - a) > 0.0 {
                side = -side;
            }
            out.push(Plane {
                n: side,
                d: side.dot(a),
            });
        }
    }
    out
}

fn clip_by_halfplane(poly: &[Vec3], hp: Plane, eps: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = hp.signed_dist(p);
        let dq = hp.signed_dist(q);
        if dp <= eps {
            out.push(p);
        }
        if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
            out.push(p + (q - p) * (dp / (dp - dq)));
        }
    }
    out
}

/// `global(X, p) = X + p`: a local surface expressed in global coordinates.
pub fn local_to_global(x: &Surface, p: Vec3) -> Surface {
    x.translated(p)
}

pub fn unit_square_x(x: f64, half: f64) -> Surface {
    Surface::new(
        vec![
            vec3(x, -half, -half),
            vec3(x, half, -half),
            vec3(x, half, half),
            vec3(x, -half, half),
        ],
        1e-12,
    )
    .unwrap()
}
