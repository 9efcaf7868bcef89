//! 3D shapes: convex-polytope bodies glued on contact surfaces, their motion
//! over time and their well-formedness conditions.
//!
//! A shape is a binary tree of basic shapes. Every composition node carries
//! the contact surface on which its children touch; well-formedness requires
//! that the children touch exactly there, do not interpenetrate and agree on
//! a single velocity so the compound moves as one body.

pub mod gjk;
pub mod polytope;
mod sat;
pub mod surface;
pub mod vec;

use std::fmt;

use thiserror::Error;

pub use polytope::{ConvexPolytope, HullData, HullFace, Plane};
pub use surface::{local_to_global, Surface, SurfaceKind};
pub use vec::{vec3, Vec3};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("polytope needs at least one vertex")]
    EmptyPolytope,
    #[error("coordinates must be finite")]
    NonFiniteCoordinate,
    #[error("vertex {vertex} is not an extreme point of the hull")]
    RedundantVertex { vertex: Vec3 },
    #[error("hull construction failed on degenerate input")]
    DegenerateHull,
    #[error("surface needs at least one vertex")]
    EmptySurface,
    #[error("surface vertices are not coplanar")]
    SurfaceNotPlanar,
    #[error("mass must be positive, got {mass}")]
    NonPositiveMass { mass: f64 },
    #[error("reference point must lie inside the polytope")]
    RefPointOutside,
    #[error("time must be non-negative, got {t}")]
    NegativeTime { t: f64 },
    #[error("shapes interpenetrate; contact surface undefined")]
    InterpenetratingContact,
    #[error("contact normal is degenerate")]
    DegenerateNormal,
    #[error("ill-formed shape composition: {0}")]
    IllFormed(WfReport),
}

/// One violation of the shape well-formedness conditions, located by the
/// path of the composition node (`""` is the root, then `L`/`R` per level).
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeViolation {
    /// Children interpenetrate: their intersection has interior points.
    Interpenetration { at: String },
    /// The stored contact surface is not on both children's boundaries.
    ContactNotOnBoundaries { at: String },
    /// The children touch outside the stored contact surface.
    ContactMismatch { at: String },
    /// Leaf velocities are not a single vector.
    VelocityMismatch { at: String },
}

impl fmt::Display for ShapeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, at) = match self {
            ShapeViolation::Interpenetration { at } => ("children interpenetrate", at),
            ShapeViolation::ContactNotOnBoundaries { at } => {
                ("contact surface not on both boundaries", at)
            }
            ShapeViolation::ContactMismatch { at } => {
                ("children touch outside the contact surface", at)
            }
            ShapeViolation::VelocityMismatch { at } => ("leaf velocities differ", at),
        };
        let at = if at.is_empty() { "root" } else { at };
        write!(f, "{what} (at {at})")
    }
}

/// Outcome of a well-formedness check; violations are data, not errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WfReport {
    pub violations: Vec<ShapeViolation>,
}

impl WfReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for WfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// A convex body: polytope (vertices local to the reference point), mass
/// (may be infinite for walls), reference point and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicShape {
    polytope: ConvexPolytope,
    mass: f64,
    ref_point: Vec3,
    velocity: Vec3,
}

impl BasicShape {
    pub fn new(
        polytope: ConvexPolytope,
        mass: f64,
        ref_point: Vec3,
        velocity: Vec3,
        eps: f64,
    ) -> Result<Self, GeometryError> {
        if !(mass > 0.0) {
            return Err(GeometryError::NonPositiveMass { mass });
        }
        if !ref_point.is_finite() || !velocity.is_finite() {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        // vertices are relative to the reference point, so "reference point
        // inside the global hull" is "origin inside the local hull"
        if !polytope.contains(Vec3::ZERO, eps) {
            return Err(GeometryError::RefPointOutside);
        }
        Ok(BasicShape {
            polytope,
            mass,
            ref_point,
            velocity,
        })
    }

    pub fn polytope(&self) -> &ConvexPolytope {
        &self.polytope
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn ref_point(&self) -> Vec3 {
        self.ref_point
    }

    pub fn velocity(&self) -> Vec3 {
        self.velocity
    }

    pub fn global_verts(&self) -> Vec<Vec3> {
        self.polytope
            .verts()
            .iter()
            .map(|&v| v + self.ref_point)
            .collect()
    }

    pub fn contains_global(&self, p: Vec3, eps: f64) -> bool {
        self.polytope.contains(p - self.ref_point, eps)
    }

    pub fn on_boundary_global(&self, p: Vec3, eps: f64) -> bool {
        self.polytope.on_boundary(p - self.ref_point, eps)
    }

    pub fn is_interior_global(&self, p: Vec3, eps: f64) -> bool {
        self.polytope.is_interior(p - self.ref_point, eps)
    }

    fn translated(&self, t: f64) -> BasicShape {
        BasicShape {
            polytope: self.polytope.clone(),
            mass: self.mass,
            ref_point: self.ref_point + self.velocity * t,
            velocity: self.velocity,
        }
    }

    fn with_velocity(&self, w: Vec3) -> BasicShape {
        BasicShape {
            polytope: self.polytope.clone(),
            mass: self.mass,
            ref_point: self.ref_point,
            velocity: w,
        }
    }

    /// Outward normals of faces whose relative interior contains `p`.
    fn relint_face_normals(&self, p: Vec3, eps: f64) -> Vec<Vec3> {
        let lp = p - self.ref_point;
        let hull = self.polytope.hull();
        let mut out = Vec::new();
        for face in &hull.faces {
            if face.plane.signed_dist(lp).abs() > eps {
                continue;
            }
            let verts: Vec<Vec3> = face
                .verts
                .iter()
                .map(|&i| self.polytope.verts()[i])
                .collect();
            let inside_all_edges = (0..verts.len()).all(|i| {
                let a = verts[i];
                let b = verts[(i + 1) % verts.len()];
                match (b - a).normalized(1e-14) {
                    Some(e) => {
                        let mut side = e.cross(face.plane.n);
                        let c = verts.iter().fold(Vec3::ZERO, |s, &v| s + v) / verts.len() as f64;
                        if side.dot(c - a) > 0.0 {
                            side = -side;
                        }
                        side.dot(lp - a) < -eps
                    }
                    None => true,
                }
            });
            if inside_all_edges {
                out.push(face.plane.n);
            }
        }
        out
    }
}

/// A 3D shape: a basic convex body or two shapes glued on a contact surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Basic(BasicShape),
    Compose(Box<Shape>, Surface, Box<Shape>),
}

impl Shape {
    pub fn basic(b: BasicShape) -> Shape {
        Shape::Basic(b)
    }

    /// Glues two shapes on `contact`, rejecting ill-formed compositions with
    /// the violation report.
    pub fn compose(left: Shape, contact: Surface, right: Shape, eps: f64) -> Result<Shape, WfReport> {
        let s = Shape::Compose(Box::new(left), contact, Box::new(right));
        let report = s.is_well_formed(eps);
        if report.is_ok() {
            Ok(s)
        } else {
            Err(report)
        }
    }

    pub fn leaves(&self) -> Vec<&BasicShape> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a BasicShape>) {
        match self {
            Shape::Basic(b) => out.push(b),
            Shape::Compose(l, _, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass_ref().0
    }

    /// Mass-weighted reference point; an infinite-mass child is the sole
    /// contributor, two infinite children average.
    pub fn ref_point(&self) -> Vec3 {
        self.mass_ref().1
    }

    fn mass_ref(&self) -> (f64, Vec3) {
        match self {
            Shape::Basic(b) => (b.mass, b.ref_point),
            Shape::Compose(l, _, r) => {
                let (ml, pl) = l.mass_ref();
                let (mr, pr) = r.mass_ref();
                let p = match (ml.is_infinite(), mr.is_infinite()) {
                    (true, true) => (pl + pr) * 0.5,
                    (true, false) => pl,
                    (false, true) => pr,
                    (false, false) => (pl * ml + pr * mr) / (ml + mr),
                };
                (ml + mr, p)
            }
        }
    }

    /// The set of leaf velocities (exact comparison, deduplicated).
    pub fn velocities(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = Vec::new();
        for leaf in self.leaves() {
            if !out.contains(&leaf.velocity) {
                out.push(leaf.velocity);
            }
        }
        out
    }

    /// The common velocity when the shape moves as one body.
    pub fn velocity(&self) -> Option<Vec3> {
        let vs = self.velocities();
        (vs.len() == 1).then(|| vs[0])
    }

    /// Point-set membership with `eps` slack.
    pub fn contains(&self, p: Vec3, eps: f64) -> bool {
        self.leaves().iter().any(|l| l.contains_global(p, eps))
    }

    /// Boundary membership: in the point set but not interior of the union.
    /// A point is interior of the union when a leaf holds it strictly inside
    /// or when two leaf faces sandwich it with opposite outward normals.
    pub fn on_boundary(&self, p: Vec3, eps: f64) -> bool {
        let leaves = self.leaves();
        if !leaves.iter().any(|l| l.contains_global(p, eps)) {
            return false;
        }
        if leaves.iter().any(|l| l.is_interior_global(p, eps)) {
            return false;
        }
        for (i, a) in leaves.iter().enumerate() {
            let normals_a = a.relint_face_normals(p, eps);
            if normals_a.is_empty() {
                continue;
            }
            for b in leaves.iter().skip(i + 1) {
                let normals_b = b.relint_face_normals(p, eps);
                for na in &normals_a {
                    for nb in &normals_b {
                        if na.dot(*nb) < -(1.0 - 1e-6) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// The shape after `t` time units: every leaf and every contact surface
    /// advected by its velocity.
    pub fn translate_over_time(&self, t: f64) -> Result<Shape, GeometryError> {
        if t < 0.0 {
            return Err(GeometryError::NegativeTime { t });
        }
        Ok(self.translate_unchecked(t))
    }

    fn translate_unchecked(&self, t: f64) -> Shape {
        match self {
            Shape::Basic(b) => Shape::Basic(b.translated(t)),
            Shape::Compose(l, x, r) => {
                let v = self
                    .velocity()
                    .unwrap_or_else(|| self.leaves()[0].velocity);
                Shape::Compose(
                    Box::new(l.translate_unchecked(t)),
                    x.translated(v * t),
                    Box::new(r.translate_unchecked(t)),
                )
            }
        }
    }

    /// Every leaf velocity replaced by `w`; geometry untouched.
    pub fn update_velocity(&self, w: Vec3) -> Shape {
        match self {
            Shape::Basic(b) => Shape::Basic(b.with_velocity(w)),
            Shape::Compose(l, x, r) => Shape::Compose(
                Box::new(l.update_velocity(w)),
                x.clone(),
                Box::new(r.update_velocity(w)),
            ),
        }
    }

    /// Checks the three composition conditions at every node.
    pub fn is_well_formed(&self, eps: f64) -> WfReport {
        let mut report = WfReport::default();
        self.check_wf(eps, String::new(), &mut report);
        report
    }

    fn check_wf(&self, eps: f64, at: String, report: &mut WfReport) {
        let Shape::Compose(l, x, r) = self else {
            return;
        };
        l.check_wf(eps, format!("{at}L"), report);
        r.check_wf(eps, format!("{at}R"), report);

        if interpenetrates(l, r, eps) {
            report.violations.push(ShapeViolation::Interpenetration { at: at.clone() });
        } else {
            // the stored contact must be on both boundaries...
            let on_both = x
                .sample_points()
                .iter()
                .all(|&p| l.on_boundary(p, eps) && r.on_boundary(p, eps));
            if !on_both {
                report
                    .violations
                    .push(ShapeViolation::ContactNotOnBoundaries { at: at.clone() });
            }
            // ...and the children must touch nowhere else
            let patches = contact_patches(l, r, eps);
            if patches.is_empty()
                || !patches.iter().all(|patch| {
                    patch
                        .sample_points()
                        .iter()
                        .all(|&p| x.contains_point(p, eps * 8.0))
                })
            {
                report
                    .violations
                    .push(ShapeViolation::ContactMismatch { at: at.clone() });
            }
        }

        if self.velocities().len() != 1 {
            report.violations.push(ShapeViolation::VelocityMismatch { at });
        }
    }

    /// Smallest hull width over solid leaves; infinity when every leaf is
    /// flat (flat bodies cannot be tunnelled through).
    pub fn min_extent(&self) -> f64 {
        self.leaves()
            .iter()
            .filter(|l| l.polytope.dim() == 3)
            .map(|l| l.polytope.hull().min_extent)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for leaf in self.leaves() {
            let (l, h) = leaf.polytope.aabb();
            let l = l + leaf.ref_point;
            let h = h + leaf.ref_point;
            lo = vec3(lo.x.min(l.x), lo.y.min(l.y), lo.z.min(l.z));
            hi = vec3(hi.x.max(h.x), hi.y.max(h.y), hi.z.max(h.z));
        }
        (lo, hi)
    }

    /// Canonical form modulo structural congruence: the leaf multiset plus
    /// the contact-surface set.
    pub fn canonical(&self) -> CanonicalShape {
        let mut leaves: Vec<LeafKey> = self
            .leaves()
            .iter()
            .map(|l| {
                let mut verts = l.global_verts();
                verts.sort_by(Vec3::lex_cmp);
                LeafKey {
                    verts,
                    mass: l.mass,
                    ref_point: l.ref_point,
                    velocity: l.velocity,
                }
            })
            .collect();
        leaves.sort_by(|a, b| a.cmp_key(b));
        let mut contacts = Vec::new();
        self.collect_contacts(&mut contacts);
        contacts.sort_by(Surface::cmp_key);
        CanonicalShape { leaves, contacts }
    }

    fn collect_contacts(&self, out: &mut Vec<Surface>) {
        if let Shape::Compose(l, x, r) = self {
            l.collect_contacts(out);
            out.push(x.clone());
            r.collect_contacts(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafKey {
    pub verts: Vec<Vec3>,
    pub mass: f64,
    pub ref_point: Vec3,
    pub velocity: Vec3,
}

impl LeafKey {
    fn cmp_key(&self, other: &LeafKey) -> std::cmp::Ordering {
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
            .then(self.mass.total_cmp(&other.mass))
    }

    fn approx_eq(&self, other: &LeafKey, eps: f64) -> bool {
        self.verts.len() == other.verts.len()
            && self
                .verts
                .iter()
                .zip(&other.verts)
                .all(|(a, b)| a.approx_eq(*b, eps))
            && (self.mass == other.mass || (self.mass - other.mass).abs() <= eps)
            && self.ref_point.approx_eq(other.ref_point, eps)
            && self.velocity.approx_eq(other.velocity, eps)
    }
}

/// Canonical form of a shape under `≡_S`: two shapes are structurally
/// congruent exactly when their canonical forms match.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalShape {
    pub leaves: Vec<LeafKey>,
    pub contacts: Vec<Surface>,
}

impl CanonicalShape {
    pub fn approx_eq(&self, other: &CanonicalShape, eps: f64) -> bool {
        if self.leaves.len() != other.leaves.len() || self.contacts.len() != other.contacts.len() {
            return false;
        }
        // greedy bipartite matching; sets are small
        let mut used = vec![false; other.leaves.len()];
        for a in &self.leaves {
            let Some(i) = other
                .leaves
                .iter()
                .enumerate()
                .position(|(i, b)| !used[i] && a.approx_eq(b, eps))
            else {
                return false;
            };
            used[i] = true;
        }
        let mut used = vec![false; other.contacts.len()];
        for a in &self.contacts {
            let Some(i) = other
                .contacts
                .iter()
                .enumerate()
                .position(|(i, b)| !used[i] && a.approx_eq(b, eps))
            else {
                return false;
            };
            used[i] = true;
        }
        true
    }
}

/// Structural congruence of shapes, decided on canonical forms.
pub fn shapes_congruent(a: &Shape, b: &Shape, eps: f64) -> bool {
    a.canonical().approx_eq(&b.canonical(), eps)
}

/// True when some point is interior (beyond `eps`) of both shapes.
pub fn interpenetrates(a: &Shape, b: &Shape, eps: f64) -> bool {
    for la in a.leaves() {
        for lb in b.leaves() {
            if sat::interpenetrates(&la.polytope, la.ref_point, &lb.polytope, lb.ref_point, eps) {
                return true;
            }
        }
    }
    false
}

/// Like [`interpenetrates`] with both shapes displaced by extra offsets;
/// used by the contact search, which slides shapes along their velocities.
pub(crate) fn interpenetrates_displaced(
    a: &Shape,
    off_a: Vec3,
    b: &Shape,
    off_b: Vec3,
    eps: f64,
) -> bool {
    for la in a.leaves() {
        for lb in b.leaves() {
            if sat::interpenetrates(
                &la.polytope,
                la.ref_point + off_a,
                &lb.polytope,
                lb.ref_point + off_b,
                eps,
            ) {
                return true;
            }
        }
    }
    false
}

/// Signed separating-axis overlap between two leaf polytopes at the given
/// offsets: positive is penetration depth, negative a separation gap.
pub(crate) fn sat_overlap(
    pa: &ConvexPolytope,
    off_a: Vec3,
    pb: &ConvexPolytope,
    off_b: Vec3,
) -> f64 {
    sat::min_overlap(pa, off_a, pb, off_b).overlap
}

/// Distance between two shapes as convex-leaf unions.
pub fn shape_distance(a: &Shape, b: &Shape) -> f64 {
    let mut best = f64::INFINITY;
    for la in a.leaves() {
        for lb in b.leaves() {
            let d = gjk::distance(
                la.polytope.verts(),
                lb.polytope.verts(),
                la.ref_point,
                lb.ref_point,
            );
            best = best.min(d);
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// Contact patch between one pair of touching leaves: the intersection of
/// the supporting features along the least-overlap axis.
fn leaf_contact(a: &BasicShape, b: &BasicShape, eps: f64) -> Option<Surface> {
    let d = gjk::distance(
        a.polytope.verts(),
        b.polytope.verts(),
        a.ref_point,
        b.ref_point,
    );
    if d > eps {
        return None;
    }
    let sat = sat::min_overlap(&a.polytope, a.ref_point, &b.polytope, b.ref_point);
    let axis = sat.axis.normalized(1e-12)?;
    let feat_eps = eps * 4.0 + 1e-12;
    let feature = |s: &BasicShape, dir: Vec3| -> Option<Surface> {
        let verts = s.global_verts();
        let max = verts
            .iter()
            .map(|v| v.dot(dir))
            .fold(f64::NEG_INFINITY, f64::max);
        let picked: Vec<Vec3> = verts
            .into_iter()
            .filter(|v| v.dot(dir) >= max - feat_eps)
            .collect();
        Surface::new(picked, 1e-12).ok()
    };
    let fa = feature(a, axis)?;
    let fb = feature(b, -axis)?;
    fa.intersect(&fb, eps * 4.0 + 1e-12)
}

/// All touching patches between the leaves of two shapes.
pub fn contact_patches(a: &Shape, b: &Shape, eps: f64) -> Vec<Surface> {
    let mut out: Vec<Surface> = Vec::new();
    for la in a.leaves() {
        for lb in b.leaves() {
            if let Some(s) = leaf_contact(la, lb, eps) {
                if !out.iter().any(|p| p.approx_eq(&s, eps * 4.0)) {
                    out.push(s);
                }
            }
        }
    }
    out.sort_by(Surface::cmp_key);
    out
}

/// The contact surface between two touching shapes: the convex intersection
/// of their touching boundary features, or `None` when separated by more
/// than `eps`. Multiple coplanar patches merge into their hull; otherwise
/// the largest patch wins.
pub fn contact_surface(a: &Shape, b: &Shape, eps: f64) -> Result<Option<Surface>, GeometryError> {
    if interpenetrates(a, b, eps) {
        return Err(GeometryError::InterpenetratingContact);
    }
    let patches = contact_patches(a, b, eps);
    match patches.len() {
        0 => Ok(None),
        1 => Ok(Some(patches.into_iter().next().unwrap())),
        _ => {
            let all: Vec<Vec3> = patches.iter().flat_map(|p| p.verts().iter().copied()).collect();
            match Surface::new(all, eps.max(1e-12)) {
                Ok(merged) => Ok(Some(merged)),
                // non-coplanar multi-patch contact: deterministically keep
                // the largest patch
                Err(_) => Ok(patches
                    .into_iter()
                    .max_by(|p, q| p.measure().total_cmp(&q.measure()).then(p.cmp_key(q)))
                    .map(Some)
                    .unwrap()),
            }
        }
    }
}

/// Outward unit normals of every face of `s` whose plane contains the whole
/// surface `x`. Exactly one match means `x` is a face feature; several mean
/// `x` lies on an edge or vertex.
pub fn face_normals_containing(s: &Shape, x: &Surface, eps: f64) -> Vec<Vec3> {
    let mut out = Vec::new();
    for leaf in s.leaves() {
        for face in &leaf.polytope.hull().faces {
            let plane = face.plane;
            let all_on = x
                .verts()
                .iter()
                .all(|&v| plane.signed_dist(v - leaf.ref_point).abs() <= eps * 8.0);
            if all_on && !out.iter().any(|n: &Vec3| n.approx_eq(plane.n, 1e-9)) {
                out.push(plane.n);
            }
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn accessors_on_two_cube_compound() {
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let s = Shape::compose(a, face, b, EPS).unwrap();
        assert_eq!(s.mass(), 2.0);
        assert!(s.ref_point().approx_eq(Vec3::ZERO, EPS));
        assert_eq!(s.velocities(), vec![Vec3::ZERO]);
    }

    #[test]
    fn basic_accessors_identity() {
        let b = cube(2.0, 3.0, vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0));
        let s = Shape::Basic(b.clone());
        assert_eq!(s.mass(), 3.0);
        assert_eq!(s.ref_point(), b.ref_point());
        assert_eq!(s.velocity(), Some(b.velocity()));
    }

    #[test]
    fn shared_face_is_interior_of_union() {
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let s = Shape::compose(a, face, b, EPS).unwrap();
        // interior of the shared face: interior of the union
        assert!(!s.on_boundary(vec3(0.0, 0.0, 0.0), EPS));
        assert!(s.contains(vec3(0.0, 0.0, 0.0), EPS));
        // rim of the shared face stays boundary
        assert!(s.on_boundary(vec3(0.0, 0.5, 0.0), EPS));
        // outer faces stay boundary
        assert!(s.on_boundary(vec3(1.0, 0.0, 0.0), EPS));
        assert!(s.on_boundary(vec3(-1.0, 0.25, 0.25), EPS));
    }

    #[test]
    fn boundary_oracle_by_open_ball_sampling() {
        // dense direction sampling of a small ball around candidate points
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let s = Shape::compose(a, face, b, EPS).unwrap();
        let dirs: Vec<Vec3> = {
            let mut d = Vec::new();
            let n = 6;
            for i in 0..n {
                for j in 0..(2 * n) {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                    let phi = std::f64::consts::PI * j as f64 / n as f64;
                    d.push(vec3(
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ));
                }
            }
            d
        };
        let ball_inside = |p: Vec3| -> bool {
            let r = 1e-4;
            dirs.iter().all(|&d| s.contains(p + d * r, 1e-12))
        };
        for p in [
            vec3(0.0, 0.0, 0.0),
            vec3(0.0, 0.25, -0.25),
            vec3(0.0, 0.5, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(-0.5, 0.5, 0.5),
            vec3(0.3, 0.2, 0.1),
        ] {
            if s.contains(p, EPS) {
                assert_eq!(
                    s.on_boundary(p, EPS),
                    !ball_inside(p),
                    "boundary predicate disagrees with open-ball oracle at {p}"
                );
            }
        }
    }

    #[test]
    fn translate_linear_motion() {
        let s = unit_cube_at(Vec3::ZERO, vec3(1.0, 0.0, 0.0));
        let moved = s.translate_over_time(2.0).unwrap();
        assert!(moved.ref_point().approx_eq(vec3(2.0, 0.0, 0.0), EPS));
        assert_eq!(moved.velocity(), Some(vec3(1.0, 0.0, 0.0)));
        let same = s.translate_over_time(0.0).unwrap();
        assert_eq!(s, same);
        assert!(s.translate_over_time(-1.0).is_err());
    }

    #[test]
    fn translate_compound_moves_ref_point() {
        let v = vec3(0.5, -1.0, 2.0);
        let (a, b, face) = touching_cubes(v);
        let s = Shape::compose(a, face, b, EPS).unwrap();
        let moved = s.translate_over_time(1.0).unwrap();
        assert!(moved
            .ref_point()
            .approx_eq(s.ref_point() + v, EPS));
        assert!(moved.is_well_formed(EPS).is_ok());
    }

    #[test]
    fn translate_additivity() {
        let v = vec3(0.3, 0.7, -0.2);
        let (a, b, face) = touching_cubes(v);
        let s = Shape::compose(a, face, b, EPS).unwrap();
        let one = s
            .translate_over_time(0.9)
            .unwrap()
            .translate_over_time(1.3)
            .unwrap();
        let once = s.translate_over_time(2.2).unwrap();
        assert!(shapes_congruent(&one, &once, 1e-7));
    }

    #[test]
    fn update_velocity_preserves_geometry() {
        let (a, b, face) = touching_cubes(vec3(1.0, 0.0, 0.0));
        let s = Shape::compose(a, face, b, EPS).unwrap();
        let w = vec3(0.0, 1.0, 0.0);
        let u = s.update_velocity(w);
        assert_eq!(u.velocity(), Some(w));
        assert_eq!(u.mass(), s.mass());
        assert!(u.ref_point().approx_eq(s.ref_point(), EPS));
        assert!(u.is_well_formed(EPS).is_ok());
        // commutation with translation on the point set
        let tu = s.translate_over_time(1.5).unwrap().update_velocity(w);
        let ut = u.translate_over_time(0.0).unwrap();
        for leaf in tu.leaves() {
            assert!(ut
                .leaves()
                .iter()
                .any(|l| l.polytope() == leaf.polytope()));
        }
    }

    #[test]
    fn well_formed_face_sharing_cubes() {
        let (a, b, face) = touching_cubes(Vec3::ZERO);
        let s = Shape::Compose(Box::new(a), face, Box::new(b));
        assert!(s.is_well_formed(EPS).is_ok());
    }

    #[test]
    fn overlapping_cubes_violate_condition_two() {
        let a = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let b = unit_cube_at(vec3(0.5, 0.0, 0.0), Vec3::ZERO);
        let face = surface::unit_square_x(0.25, 0.5);
        let s = Shape::Compose(Box::new(a), face, Box::new(b));
        let report = s.is_well_formed(EPS);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, ShapeViolation::Interpenetration { .. })));
    }

    #[test]
    fn velocity_mismatch_is_condition_three() {
        let a = unit_cube_at(vec3(-0.5, 0.0, 0.0), vec3(1.0, 0.0, 0.0));
        let b = unit_cube_at(vec3(0.5, 0.0, 0.0), Vec3::ZERO);
        let face = surface::unit_square_x(0.0, 0.5);
        let s = Shape::Compose(Box::new(a), face, Box::new(b));
        let report = s.is_well_formed(EPS);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, ShapeViolation::VelocityMismatch { .. })));
        assert!(Shape::compose(
            unit_cube_at(vec3(-0.5, 0.0, 0.0), vec3(1.0, 0.0, 0.0)),
            surface::unit_square_x(0.0, 0.5),
            unit_cube_at(vec3(0.5, 0.0, 0.0), Vec3::ZERO),
            EPS
        )
        .is_err());
    }

    #[test]
    fn contact_off_the_touching_region_rejected() {
        let a = unit_cube_at(vec3(-0.5, 0.0, 0.0), Vec3::ZERO);
        let b = unit_cube_at(vec3(0.5, 0.0, 0.0), Vec3::ZERO);
        // a face on the far side of cube b
        let wrong = surface::unit_square_x(1.0, 0.5);
        let s = Shape::Compose(Box::new(a), wrong, Box::new(b));
        assert!(!s.is_well_formed(EPS).is_ok());
    }

    #[test]
    fn interpenetration_cases() {
        let a = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let gap = unit_cube_at(vec3(2.0, 0.0, 0.0), Vec3::ZERO);
        assert!(!interpenetrates(&a, &gap, EPS));
        let same = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        assert!(interpenetrates(&a, &same, EPS));
        let touching = unit_cube_at(vec3(1.0, 0.0, 0.0), Vec3::ZERO);
        assert!(!interpenetrates(&a, &touching, EPS));
        assert!(!interpenetrates(&touching, &a, EPS), "symmetric");
    }

    #[test]
    fn contact_surface_square_face() {
        // [0,1]^3 and [1,2]x[0,1]^2 as cubes centered at (.5,.5,.5) / (1.5,.5,.5)
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), Vec3::ZERO);
        let b = unit_cube_at(vec3(1.5, 0.5, 0.5), Vec3::ZERO);
        let x = contact_surface(&a, &b, EPS).unwrap().unwrap();
        assert_eq!(x.kind(), SurfaceKind::Polygon);
        assert_eq!(x.verts().len(), 4);
        assert!(x.verts().iter().all(|v| (v.x - 1.0).abs() < 1e-9));
        assert!((x.measure() - 1.0).abs() < 1e-9);
        let xr = contact_surface(&b, &a, EPS).unwrap().unwrap();
        assert!(x.approx_eq(&xr, EPS), "contact is symmetric");
    }

    #[test]
    fn contact_surface_corner_point() {
        let a = unit_cube_at(vec3(0.5, 0.5, 0.5), Vec3::ZERO);
        let b = unit_cube_at(vec3(1.5, 1.5, 1.5), Vec3::ZERO);
        let x = contact_surface(&a, &b, EPS).unwrap().unwrap();
        assert_eq!(x.kind(), SurfaceKind::Point);
        assert!(x.verts()[0].approx_eq(vec3(1.0, 1.0, 1.0), 1e-9));
    }

    #[test]
    fn contact_surface_absent_beyond_eps() {
        let a = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let b = unit_cube_at(vec3(2.5, 0.0, 0.0), Vec3::ZERO);
        assert!(contact_surface(&a, &b, EPS).unwrap().is_none());
        let c = unit_cube_at(vec3(0.25, 0.0, 0.0), Vec3::ZERO);
        assert!(contact_surface(&a, &c, EPS).is_err(), "interpenetrating");
    }

    #[test]
    fn canonical_commutes_and_associates() {
        let mk = |flipped: bool| {
            let a = unit_cube_at(vec3(-0.5, 0.0, 0.0), Vec3::ZERO);
            let b = unit_cube_at(vec3(0.5, 0.0, 0.0), Vec3::ZERO);
            let face = surface::unit_square_x(0.0, 0.5);
            if flipped {
                Shape::Compose(Box::new(b), face, Box::new(a))
            } else {
                Shape::Compose(Box::new(a), face, Box::new(b))
            }
        };
        assert!(shapes_congruent(&mk(false), &mk(true), EPS));

        // three cubes in a row, both associations
        let a = unit_cube_at(vec3(-1.0, 0.0, 0.0), Vec3::ZERO);
        let b = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let c = unit_cube_at(vec3(1.0, 0.0, 0.0), Vec3::ZERO);
        let x = surface::unit_square_x(-0.5, 0.5);
        let y = surface::unit_square_x(0.5, 0.5);
        let left = Shape::Compose(
            Box::new(Shape::Compose(
                Box::new(a.clone()),
                x.clone(),
                Box::new(b.clone()),
            )),
            y.clone(),
            Box::new(c.clone()),
        );
        let right = Shape::Compose(
            Box::new(a),
            x,
            Box::new(Shape::Compose(Box::new(b), y, Box::new(c))),
        );
        assert!(left.is_well_formed(EPS).is_ok());
        assert!(right.is_well_formed(EPS).is_ok());
        assert!(shapes_congruent(&left, &right, EPS));

        // different basic shapes are not congruent
        let p = unit_cube_at(Vec3::ZERO, Vec3::ZERO);
        let q = unit_cube_at(vec3(0.1, 0.0, 0.0), Vec3::ZERO);
        assert!(!shapes_congruent(&p, &q, EPS));
    }

    #[test]
    fn wf_closed_under_translate_and_update() {
        // randomized compounds built by gluing cubes face to face
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let v = vec3(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let mut shape = unit_cube_at(Vec3::ZERO, v);
            let mut centers = vec![Vec3::ZERO];
            for _ in 0..rng.gen_range(1..4) {
                // attach a new cube on a free axis-aligned face
                let base = centers[rng.gen_range(0..centers.len())];
                let dirs = [
                    vec3(1.0, 0.0, 0.0),
                    vec3(-1.0, 0.0, 0.0),
                    vec3(0.0, 1.0, 0.0),
                    vec3(0.0, -1.0, 0.0),
                    vec3(0.0, 0.0, 1.0),
                    vec3(0.0, 0.0, -1.0),
                ];
                let d = dirs[rng.gen_range(0..6)];
                let c = base + d;
                if centers.iter().any(|&e| e.approx_eq(c, 1e-12)) {
                    continue;
                }
                let face_center = base + d * 0.5;
                let fc = contact_surface(&shape, &unit_cube_at(c, v), EPS)
                    .unwrap()
                    .unwrap();
                assert!(fc.contains_point(face_center, 1e-9));
                shape = Shape::Compose(Box::new(shape), fc, Box::new(unit_cube_at(c, v)));
                centers.push(c);
            }
            assert!(shape.is_well_formed(EPS).is_ok());
            let t = rng.gen_range(0.0..3.0);
            let moved = shape.translate_over_time(t).unwrap();
            assert!(moved.is_well_formed(EPS).is_ok(), "wf closed under +t");
            assert_eq!(moved.mass(), shape.mass());
            assert!(moved
                .ref_point()
                .approx_eq(shape.ref_point() + v * t, 1e-7));
            let w = vec3(rng.gen_range(-1.0..1.0), 0.0, rng.gen_range(-1.0..1.0));
            let upd = shape.update_velocity(w);
            assert!(upd.is_well_formed(EPS).is_ok(), "wf closed under velocity");
        }
    }

    #[test]
    fn infinite_mass_wall_ref_point() {
        let wall = cube(4.0, f64::INFINITY, vec3(5.0, 0.0, 0.0), Vec3::ZERO);
        let probe = cube(1.0, 1.0, vec3(2.5, 0.0, 0.0), Vec3::ZERO);
        let x = contact_surface(
            &Shape::Basic(probe.clone()),
            &Shape::Basic(wall.clone()),
            EPS,
        )
        .unwrap();
        assert!(x.is_some());
        let s = Shape::compose(Shape::Basic(probe), x.unwrap(), Shape::Basic(wall), EPS).unwrap();
        assert!(s.mass().is_infinite());
        assert!(s.ref_point().approx_eq(vec3(5.0, 0.0, 0.0), EPS));
    }
}
