//! 3D processes: shapes paired with behaviours, joined by bonds.
//!
//! The canonical representation is a bond graph: nodes are basic processes
//! (stable identifier, shape, behaviour) and edges are bonds (base name plus
//! global contact surface). Binding always joins two previously separate
//! processes, so the bonds of a connected process form a tree; the term
//! syntax is one of its serializations and structural congruence collapses
//! to graph identity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::behaviour::{
    behaviour_actions, delay_behaviour, delay_limit, validate_behaviour, Action, Behaviour,
    BehaviourEnv, BehaviourError, Name,
};
use crate::geometry::{shapes_congruent, Shape, Surface, Vec3};
use crate::Tolerances;

/// Stable identifier of a basic process; survives every transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error(transparent)]
    Behaviour(#[from] BehaviourError),
    #[error("bond {name} is not present in the process")]
    BondNotFound { name: String },
    #[error("bond graph is not connected")]
    Disconnected,
    #[error("bond graph has a cycle; bonds of a process must form a tree")]
    Cyclic,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
}

/// A channel observed at process level: surface in global coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalChannel {
    pub name: Name,
    pub surface: Surface,
}

impl fmt::Display for GlobalChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {} verts>", self.name, self.surface.verts().len())
    }
}

/// The kind of a split action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicNode {
    pub shape: Shape,
    pub behaviour: Behaviour,
}

/// A bond between two basic processes; endpoints canonically ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub a: NodeId,
    pub b: NodeId,
    pub name: String,
    pub surface: Surface,
}

impl Bond {
    fn cmp_key(&self, other: &Bond) -> std::cmp::Ordering {
        self.name
            .cmp(&other.name)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then_with(|| self.surface.cmp_key(&other.surface))
    }

    /// Matches a `(name, surface)` bond reference up to `eps`.
    pub fn matches(&self, name: &str, surface: &Surface, eps: f64) -> bool {
        self.name == name && self.surface.approx_eq(surface, eps)
    }
}

/// A well-formed 3D process as a bond graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    nodes: BTreeMap<NodeId, BasicNode>,
    bonds: Vec<Bond>,
    shape: Shape,
}

/// A channel action the process offers: the acting node, the globalized
/// channel, and the derivative process.
#[derive(Debug, Clone)]
pub struct ChannelAction {
    pub node: NodeId,
    pub channel: GlobalChannel,
    pub after: Process,
}

/// A split action (weak or strong) the process offers.
#[derive(Debug, Clone)]
pub struct SplitAction {
    pub node: NodeId,
    pub kind: SplitKind,
    pub channel: GlobalChannel,
    pub after: Process,
}

impl Process {
    pub fn basic(id: NodeId, shape: Shape, behaviour: Behaviour) -> Process {
        let mut nodes = BTreeMap::new();
        nodes.insert(id, BasicNode { shape: shape.clone(), behaviour });
        Process {
            nodes,
            bonds: Vec::new(),
            shape,
        }
    }

    pub fn from_parts(
        nodes: BTreeMap<NodeId, BasicNode>,
        mut bonds: Vec<Bond>,
    ) -> Result<Process, ProcessError> {
        assert!(!nodes.is_empty(), "process needs at least one node");
        for b in &mut bonds {
            if b.a > b.b {
                std::mem::swap(&mut b.a, &mut b.b);
            }
        }
        bonds.sort_by(Bond::cmp_key);
        if bonds.len() + 1 != nodes.len() {
            // a tree over n nodes has exactly n-1 edges
            return Err(if bonds.len() + 1 < nodes.len() {
                ProcessError::Disconnected
            } else {
                ProcessError::Cyclic
            });
        }
        let shape = fold_shape(&nodes, &bonds)?;
        Ok(Process { nodes, bonds, shape })
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn min_id(&self) -> NodeId {
        *self.nodes.keys().next().unwrap()
    }

    pub fn node(&self, id: NodeId) -> Option<&BasicNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, BasicNode> {
        &self.nodes
    }

    /// The shape of the process: node shapes glued along the bond surfaces.
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn velocity(&self) -> Option<Vec3> {
        self.shape.velocity()
    }

    /// All bonds currently established in the process.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn find_bond(&self, name: &str, surface: &Surface, eps: f64) -> Option<usize> {
        self.bonds
            .iter()
            .position(|b| b.matches(name, surface, eps))
    }

    /// Process well-formedness: every node shape is well-formed with its
    /// behaviour sites on its boundary, the compound shape is well-formed,
    /// and each bond surface lies on the boundaries of both of its sides.
    pub fn well_formed(&self, env: &BehaviourEnv, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        let eps = tol.eps_len;
        for (id, node) in &self.nodes {
            let report = node.shape.is_well_formed(eps);
            if !report.is_ok() {
                out.push(format!("node {id}: shape ill-formed: {report}"));
            }
            for violation in validate_behaviour(&node.behaviour, env, eps) {
                out.push(format!("node {id}: {violation}"));
            }
            let origin = node.shape.ref_point();
            for s in node.behaviour.surfaces_global(env, origin) {
                let on = s
                    .sample_points()
                    .iter()
                    .all(|&p| node.shape.on_boundary(p, eps * 16.0));
                if !on {
                    out.push(format!(
                        "node {id}: behaviour surface not on the shape boundary"
                    ));
                    break;
                }
            }
        }
        if self.nodes.len() > 1 {
            // bonded bodies may touch beyond their bond surfaces (three
            // mutually adjacent bodies with two bonds), so the compound
            // condition is touching-without-interpenetration plus bond
            // surfaces on the boundaries of both sides
            let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    if crate::geometry::interpenetrates(
                        &self.nodes[a].shape,
                        &self.nodes[b].shape,
                        eps,
                    ) {
                        out.push(format!("nodes {a} and {b} interpenetrate"));
                    }
                }
            }
            if self.velocity().is_none() {
                out.push("node velocities differ".to_string());
            }
            for (i, bond) in self.bonds.iter().enumerate() {
                let (left, right) = self.sides(i);
                let ls = fold_shape_ids(&self.nodes, &self.bonds, &left);
                let rs = fold_shape_ids(&self.nodes, &self.bonds, &right);
                if let (Ok(ls), Ok(rs)) = (ls, rs) {
                    let on = bond.surface.sample_points().iter().all(|&p| {
                        ls.on_boundary(p, eps * 16.0) && rs.on_boundary(p, eps * 16.0)
                    });
                    if !on {
                        out.push(format!(
                            "bond {} between {} and {}: surface not on both sides",
                            bond.name, bond.a, bond.b
                        ));
                    }
                }
            }
        }
        out
    }

    /// Node sets of the two components obtained by removing bond `i`.
    fn sides(&self, i: usize) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
        let bond = &self.bonds[i];
        let mut left = BTreeSet::new();
        let mut stack = vec![bond.a];
        while let Some(id) = stack.pop() {
            if !left.insert(id) {
                continue;
            }
            for (j, e) in self.bonds.iter().enumerate() {
                if j == i {
                    continue;
                }
                if e.a == id {
                    stack.push(e.b);
                } else if e.b == id {
                    stack.push(e.a);
                }
            }
        }
        let right = self.nodes.keys().copied().filter(|n| !left.contains(n)).collect();
        (left, right)
    }

    /// The temporal transition before the maximal-progress gate: every node
    /// behaviour delays, shapes advance and bond surfaces advect.
    pub fn delay(
        &self,
        t: f64,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Option<Process>, ProcessError> {
        let vel = self.velocity().unwrap_or(Vec3::ZERO);
        let mut nodes = BTreeMap::new();
        for (id, node) in &self.nodes {
            let Some(b) = delay_behaviour(&node.behaviour, t, env, tol.eps_t)? else {
                return Ok(None);
            };
            let shape = node
                .shape
                .translate_over_time(t)
                .expect("non-negative delay");
            nodes.insert(*id, BasicNode { shape, behaviour: b });
        }
        let bonds = self
            .bonds
            .iter()
            .map(|e| Bond {
                surface: e.surface.translated(vel * t),
                ..e.clone()
            })
            .collect();
        Ok(Some(Process::from_parts(nodes, bonds).expect("same graph")))
    }

    /// Supremum of delays every node behaviour admits.
    pub fn delay_limit(&self, env: &BehaviourEnv) -> Result<f64, ProcessError> {
        let mut limit = f64::INFINITY;
        for node in self.nodes.values() {
            limit = limit.min(delay_limit(&node.behaviour, env)?);
        }
        Ok(limit)
    }

    fn with_node_behaviour(&self, id: NodeId, behaviour: Behaviour) -> Process {
        let mut p = self.clone();
        p.nodes.get_mut(&id).unwrap().behaviour = behaviour;
        p
    }

    /// Channel actions in global coordinates. At compound level a channel
    /// survives only when its surface still lies on the compound boundary
    /// (bonding can cover sites).
    pub fn channel_actions(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Vec<ChannelAction>, ProcessError> {
        let mut out = Vec::new();
        for (id, node) in &self.nodes {
            let origin = node.shape.ref_point();
            for (action, derivative) in behaviour_actions(&node.behaviour, env)? {
                let Action::Chan(c) = action else { continue };
                let surface = c.surface.translated(origin);
                if self.nodes.len() > 1 {
                    let on = surface
                        .sample_points()
                        .iter()
                        .all(|&p| self.shape.on_boundary(p, tol.eps_len * 16.0));
                    if !on {
                        continue;
                    }
                }
                out.push(ChannelAction {
                    node: *id,
                    channel: GlobalChannel {
                        name: c.name.clone(),
                        surface,
                    },
                    after: self.with_node_behaviour(*id, derivative),
                });
            }
        }
        Ok(out)
    }

    /// Weak- and strong-split actions in global coordinates; split actions
    /// target bonded (interior) surfaces, so they are not boundary-filtered.
    pub fn split_actions(&self, env: &BehaviourEnv) -> Result<Vec<SplitAction>, ProcessError> {
        let mut out = Vec::new();
        for (id, node) in &self.nodes {
            let origin = node.shape.ref_point();
            for (action, derivative) in behaviour_actions(&node.behaviour, env)? {
                let (kind, c) = match action {
                    Action::WeakSplit(c) => (SplitKind::Weak, c),
                    Action::StrongSplit(c) => (SplitKind::Strong, c),
                    Action::Chan(_) => continue,
                };
                out.push(SplitAction {
                    node: *id,
                    kind,
                    channel: GlobalChannel {
                        name: c.name.clone(),
                        surface: c.surface.translated(origin),
                    },
                    after: self.with_node_behaviour(*id, derivative),
                });
            }
        }
        Ok(out)
    }

    /// Does the process offer any strong-split action?
    pub fn has_strong_action(&self, env: &BehaviourEnv) -> Result<bool, ProcessError> {
        for node in self.nodes.values() {
            let acts = behaviour_actions(&node.behaviour, env)?;
            if acts.iter().any(|(a, _)| matches!(a, Action::StrongSplit(_))) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// All synchronizations on bond `i`: the two sides perform compatible
    /// split actions of `kind` whose global surfaces intersect in exactly
    /// the bond surface. The bond itself stays; physical removal is the
    /// split function.
    pub fn sync_split_all(
        &self,
        kind: SplitKind,
        i: usize,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Vec<Process>, ProcessError> {
        let bond = &self.bonds[i];
        let (left, right) = self.sides(i);
        let mut candidates: Vec<(NodeId, SplitAction, NodeId, SplitAction)> = Vec::new();
        let acts = self.split_actions(env)?;
        let eps = tol.eps_len * 16.0;
        for pa in acts.iter().filter(|a| a.kind == kind && left.contains(&a.node)) {
            for pb in acts.iter().filter(|a| a.kind == kind && right.contains(&a.node)) {
                if pa.channel.name.base != bond.name || pb.channel.name.base != bond.name {
                    continue;
                }
                if pa.channel.name == pb.channel.name {
                    continue; // must be complementary
                }
                let Some(meet) = pa.channel.surface.intersect(&pb.channel.surface, eps) else {
                    continue;
                };
                if !meet.approx_eq(&bond.surface, eps) {
                    continue;
                }
                candidates.push((pa.node, pa.clone(), pb.node, pb.clone()));
            }
        }
        candidates.sort_by(|x, y| {
            (x.0, x.2)
                .cmp(&(y.0, y.2))
                .then_with(|| x.1.channel.name.cmp_key(&y.1.channel.name))
                .then_with(|| x.1.after.cmp_key(&y.1.after))
                .then_with(|| x.3.after.cmp_key(&y.3.after))
        });
        let mut out: Vec<Process> = Vec::new();
        for (na, a, nb, b) in candidates {
            let der = self
                .with_node_behaviour(na, a.after.nodes[&na].behaviour.clone())
                .with_node_behaviour(nb, b.after.nodes[&nb].behaviour.clone());
            if !out.contains(&der) {
                out.push(der);
            }
        }
        Ok(out)
    }

    /// First synchronization on the bond in canonical order, if any.
    pub fn sync_split(
        &self,
        kind: SplitKind,
        name: &str,
        surface: &Surface,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Option<Process>, ProcessError> {
        let i = self
            .find_bond(name, surface, tol.eps_len * 16.0)
            .ok_or_else(|| ProcessError::BondNotFound {
                name: name.to_string(),
            })?;
        Ok(self.sync_split_all(kind, i, env, tol)?.into_iter().next())
    }

    fn cmp_key(&self, other: &Process) -> std::cmp::Ordering {
        let ka: Vec<_> = self.nodes.keys().collect();
        let kb: Vec<_> = other.nodes.keys().collect();
        ka.cmp(&kb).then_with(|| {
            for (a, b) in self.nodes.values().zip(other.nodes.values()) {
                let c = a.behaviour.cmp_key(&b.behaviour);
                if c.is_ne() {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
    }

    /// Memoization key: stable ids plus behaviour and bond fingerprints.
    fn canon_key(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (id, node) in &self.nodes {
            let _ = write!(s, "{id}:{};", node.behaviour);
        }
        for b in &self.bonds {
            let _ = write!(s, "[{}-{}:{}]", b.a, b.b, b.name);
        }
        s
    }

    /// Searches for a maximal strong-split synchronization sequence ending
    /// with no strong action left: the witness that the process is able to
    /// complete a reaction. Returns the final process and the set of bond
    /// channels synchronized on.
    pub fn find_completion(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Option<(Process, Vec<(String, Surface)>)>, ProcessError> {
        let mut failed: BTreeSet<String> = BTreeSet::new();
        let mut on_path: Vec<String> = Vec::new();
        self.completion_rec(env, tol, &mut failed, &mut on_path)
            .map(|r| r.0)
    }

    // Returns (result, touched_on_path): failures are only cached when the
    // exploration never hit a state currently on the DFS path, which keeps
    // the cache sound in the presence of synchronization cycles.
    #[allow(clippy::type_complexity)]
    fn completion_rec(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
        failed: &mut BTreeSet<String>,
        on_path: &mut Vec<String>,
    ) -> Result<(Option<(Process, Vec<(String, Surface)>)>, bool), ProcessError> {
        if !self.has_strong_action(env)? {
            return Ok((Some((self.clone(), Vec::new())), false));
        }
        let key = self.canon_key();
        if failed.contains(&key) {
            return Ok((None, false));
        }
        if on_path.contains(&key) {
            return Ok((None, true));
        }
        on_path.push(key.clone());
        let mut touched = false;
        for i in 0..self.bonds.len() {
            for der in self.sync_split_all(SplitKind::Strong, i, env, tol)? {
                let (res, t) = der.completion_rec(env, tol, failed, on_path)?;
                touched |= t;
                if let Some((end, mut channels)) = res {
                    let b = &self.bonds[i];
                    if !channels
                        .iter()
                        .any(|(n, s)| n == &b.name && s.approx_eq(&b.surface, tol.eps_len * 16.0))
                    {
                        channels.push((b.name.clone(), b.surface.clone()));
                    }
                    on_path.pop();
                    return Ok((Some((end, channels)), touched));
                }
            }
        }
        on_path.pop();
        if !touched {
            failed.insert(key);
        }
        Ok((None, touched))
    }

    /// Every distinct channel set some maximal strong-split synchronization
    /// sequence can release; the engine always takes the canonical first,
    /// but analyses may want the whole fan.
    pub fn all_completions(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Vec<Vec<(String, Surface)>>, ProcessError> {
        let mut out: Vec<Vec<(String, Surface)>> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        self.all_completions_rec(env, tol, &mut Vec::new(), &mut seen, &mut out)?;
        Ok(out)
    }

    fn all_completions_rec(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
        path: &mut Vec<(String, Surface)>,
        seen: &mut BTreeSet<String>,
        out: &mut Vec<Vec<(String, Surface)>>,
    ) -> Result<(), ProcessError> {
        if !self.has_strong_action(env)? {
            let mut set = path.clone();
            set.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp_key(&b.1)));
            set.dedup_by(|a, b| a.0 == b.0 && a.1.approx_eq(&b.1, tol.eps_len * 16.0));
            let key: String = set
                .iter()
                .map(|(n, s)| format!("{n}@{:?};", s.verts()))
                .collect();
            if seen.insert(key) {
                out.push(set);
            }
            return Ok(());
        }
        // bounded by states x released-channel subsets, so cyclic
        // synchronizations terminate
        let mut released: Vec<String> = path.iter().map(|(n, _)| n.clone()).collect();
        released.sort();
        let state_key = format!("{}|{}", self.canon_key(), released.join(","));
        if !seen.insert(state_key) {
            return Ok(());
        }
        for i in 0..self.bonds.len() {
            let bond = self.bonds[i].clone();
            for der in self.sync_split_all(SplitKind::Strong, i, env, tol)? {
                path.push((bond.name.clone(), bond.surface.clone()));
                der.all_completions_rec(env, tol, path, seen, out)?;
                path.pop();
            }
        }
        Ok(())
    }

    /// Able to complete a reaction: no strong action pending, or some
    /// strong synchronization sequence runs to exhaustion.
    pub fn can_complete_reaction(
        &self,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<bool, ProcessError> {
        if !self.has_strong_action(env)? {
            return Ok(true);
        }
        if self.bonds.is_empty() {
            // strong actions with no bond can never synchronize
            return Ok(false);
        }
        Ok(self.find_completion(env, tol)?.is_some())
    }

    /// The timed step under maximal progress: a process that could complete
    /// a pending reaction refuses to let time pass.
    pub fn timed_step(
        &self,
        t: f64,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Option<Process>, ProcessError> {
        if t > 0.0
            && self.has_strong_action(env)?
            && self.can_complete_reaction(env, tol)?
        {
            return Ok(None);
        }
        self.delay(t, env, tol)
    }

    /// Removes one bond and returns the two connected components.
    pub fn decompose(&self, i: usize) -> (Process, Process) {
        let (left, right) = self.sides(i);
        (self.restrict(&left, Some(i)), self.restrict(&right, Some(i)))
    }

    fn restrict(&self, keep: &BTreeSet<NodeId>, drop_bond: Option<usize>) -> Process {
        let nodes: BTreeMap<NodeId, BasicNode> = self
            .nodes
            .iter()
            .filter(|(id, _)| keep.contains(id))
            .map(|(id, n)| (*id, n.clone()))
            .collect();
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .enumerate()
            .filter(|(j, b)| Some(*j) != drop_bond && keep.contains(&b.a) && keep.contains(&b.b))
            .map(|(_, b)| b.clone())
            .collect();
        Process::from_parts(nodes, bonds).expect("components stay trees")
    }

    /// Removes every bond matching a channel in `c` and returns the
    /// resulting connected components; velocities are untouched.
    pub fn split(&self, c: &[(String, Surface)], eps: f64) -> Vec<Process> {
        let keep: Vec<Bond> = self
            .bonds
            .iter()
            .filter(|b| !c.iter().any(|(n, s)| b.matches(n, s, eps)))
            .cloned()
            .collect();
        // connected components over the surviving bonds
        let mut comp: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut next = 0usize;
        for &id in self.nodes.keys() {
            if comp.contains_key(&id) {
                continue;
            }
            let mut stack = vec![id];
            while let Some(n) = stack.pop() {
                if comp.insert(n, next).is_some() {
                    continue;
                }
                for b in &keep {
                    if b.a == n && !comp.contains_key(&b.b) {
                        stack.push(b.b);
                    } else if b.b == n && !comp.contains_key(&b.a) {
                        stack.push(b.a);
                    }
                }
            }
            next += 1;
        }
        (0..next)
            .map(|k| {
                let ids: BTreeSet<NodeId> = comp
                    .iter()
                    .filter(|(_, c)| **c == k)
                    .map(|(id, _)| *id)
                    .collect();
                let nodes: BTreeMap<NodeId, BasicNode> = self
                    .nodes
                    .iter()
                    .filter(|(id, _)| ids.contains(id))
                    .map(|(id, n)| (*id, n.clone()))
                    .collect();
                let bonds: Vec<Bond> = keep
                    .iter()
                    .filter(|b| ids.contains(&b.a))
                    .cloned()
                    .collect();
                Process::from_parts(nodes, bonds).expect("components stay trees")
            })
            .collect()
    }

    /// Every node shape carries velocity `v` afterwards.
    pub fn update_velocity(&self, v: Vec3) -> Process {
        let nodes: BTreeMap<NodeId, BasicNode> = self
            .nodes
            .iter()
            .map(|(id, n)| {
                (
                    *id,
                    BasicNode {
                        shape: n.shape.update_velocity(v),
                        behaviour: n.behaviour.clone(),
                    },
                )
            })
            .collect();
        Process::from_parts(nodes, self.bonds.clone()).expect("same graph")
    }

    /// Joins two disjoint processes with a new bond between `node_p` and
    /// `node_q`; the caller provides the post-action behaviours.
    pub fn bind(
        p: &Process,
        q: &Process,
        node_p: NodeId,
        node_q: NodeId,
        name: String,
        surface: Surface,
    ) -> Process {
        let mut nodes = p.nodes.clone();
        nodes.extend(q.nodes.iter().map(|(id, n)| (*id, n.clone())));
        let mut bonds = p.bonds.clone();
        bonds.extend(q.bonds.iter().cloned());
        bonds.push(Bond {
            a: node_p,
            b: node_q,
            name,
            surface,
        });
        Process::from_parts(nodes, bonds).expect("joining two trees with one edge")
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (id, node)) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{id}[{}]", node.behaviour)?;
        }
        for b in &self.bonds {
            write!(f, " <{}:{}-{}>", b.name, b.a, b.b)?;
        }
        Ok(())
    }
}

/// Structural congruence of processes: a label-respecting isomorphism of
/// the bond graphs with congruent shapes, equal behaviours (constants by
/// name) and matching bond surfaces.
pub fn processes_congruent(p: &Process, q: &Process, eps: f64) -> bool {
    if p.nodes.len() != q.nodes.len() || p.bonds.len() != q.bonds.len() {
        return false;
    }
    let pn: Vec<(&NodeId, &BasicNode)> = p.nodes.iter().collect();
    let qn: Vec<(&NodeId, &BasicNode)> = q.nodes.iter().collect();
    // backtracking assignment p-node -> q-node
    fn assign(
        i: usize,
        pn: &[(&NodeId, &BasicNode)],
        qn: &[(&NodeId, &BasicNode)],
        used: &mut Vec<bool>,
        map: &mut BTreeMap<NodeId, NodeId>,
        p: &Process,
        q: &Process,
        eps: f64,
    ) -> bool {
        if i == pn.len() {
            // every bond of p must map onto a bond of q
            return p.bonds.iter().all(|b| {
                let (ma, mb) = (map[&b.a], map[&b.b]);
                q.bonds.iter().any(|c| {
                    c.name == b.name
                        && ((c.a == ma && c.b == mb) || (c.a == mb && c.b == ma))
                        && c.surface.approx_eq(&b.surface, eps)
                })
            });
        }
        for j in 0..qn.len() {
            if used[j] {
                continue;
            }
            let (pid, pnode) = pn[i];
            let (qid, qnode) = qn[j];
            if pnode.behaviour != qnode.behaviour {
                continue;
            }
            if !shapes_congruent(&pnode.shape, &qnode.shape, eps) {
                continue;
            }
            used[j] = true;
            map.insert(*pid, *qid);
            if assign(i + 1, pn, qn, used, map, p, q, eps) {
                return true;
            }
            used[j] = false;
            map.remove(pid);
        }
        false
    }
    let mut used = vec![false; qn.len()];
    let mut map = BTreeMap::new();
    assign(0, &pn, &qn, &mut used, &mut map, p, q, eps)
}

fn fold_shape(nodes: &BTreeMap<NodeId, BasicNode>, bonds: &[Bond]) -> Result<Shape, ProcessError> {
    let all: BTreeSet<NodeId> = nodes.keys().copied().collect();
    fold_shape_ids(nodes, bonds, &all)
}

/// Builds the compound shape of the listed nodes by folding their bonds in
/// canonical order (union-find over the subgraph).
fn fold_shape_ids(
    nodes: &BTreeMap<NodeId, BasicNode>,
    bonds: &[Bond],
    ids: &BTreeSet<NodeId>,
) -> Result<Shape, ProcessError> {
    let mut root: BTreeMap<NodeId, NodeId> = ids.iter().map(|id| (*id, *id)).collect();
    let mut tree: BTreeMap<NodeId, Shape> = ids
        .iter()
        .map(|id| (*id, nodes[id].shape.clone()))
        .collect();
    fn find(root: &mut BTreeMap<NodeId, NodeId>, mut x: NodeId) -> NodeId {
        while root[&x] != x {
            let up = root[&root[&x]];
            root.insert(x, up);
            x = up;
        }
        x
    }
    for b in bonds {
        if !ids.contains(&b.a) || !ids.contains(&b.b) {
            continue;
        }
        let ra = find(&mut root, b.a);
        let rb = find(&mut root, b.b);
        if ra == rb {
            return Err(ProcessError::Cyclic);
        }
        let left = tree.remove(&ra).unwrap();
        let right = tree.remove(&rb).unwrap();
        let joined = Shape::Compose(Box::new(left), b.surface.clone(), Box::new(right));
        root.insert(rb, ra);
        tree.insert(ra, joined);
    }
    if tree.len() != 1 {
        return Err(ProcessError::Disconnected);
    }
    Ok(tree.into_values().next().unwrap())
}
