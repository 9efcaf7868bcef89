//! Networks of 3D processes and the movement-time-step evolution loop:
//! parallel composition, split operations, collision resolution and steering.
//!
//! A network is a multiset of processes keyed by their smallest stable node
//! id, plus the global clock. One evolution step advances the network to the
//! first time of contact or the movement time step, whichever comes first,
//! interleaving sub-delays with the urgent strong-split operations that
//! maximal progress forces; at a contact instant all collisions are resolved
//! before the steer function updates velocities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::behaviour::BehaviourEnv;
use crate::collision::{self, CollisionError, CollisionTuple};
use crate::geometry::{interpenetrates, Shape, Surface, Vec3};
use crate::process::{NodeId, Process, ProcessError, SplitKind};
use crate::trace::{SplitChannel, TraceEvent, TraceHeader};
use crate::Tolerances;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("collision resolution did not terminate within {bound} steps")]
    KappaBound { bound: usize },
    #[error("pair ({a}, {b}) reappeared in the colliding set after being resolved")]
    ResolvedPairReappeared { a: u32, b: u32 },
    #[error("configuration error: {0}")]
    Config(String),
}

/// Compensated clock: long runs accumulate many small sub-delays and must
/// not drift past delay expiries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Clock {
    t: f64,
    carry: f64,
}

impl Clock {
    pub fn value(&self) -> f64 {
        self.t
    }

    pub fn add(&mut self, dt: f64) {
        let y = dt - self.carry;
        let s = self.t + y;
        self.carry = (s - self.t) - y;
        self.t = s;
    }
}

/// A finite multiset of processes with the global clock.
#[derive(Debug, Clone, Default)]
pub struct Network {
    procs: BTreeMap<NodeId, Process>,
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetViolation {
    Process { key: NodeId, detail: String },
    Interpenetration { a: NodeId, b: NodeId },
}

impl fmt::Display for NetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetViolation::Process { key, detail } => write!(f, "process {key}: {detail}"),
            NetViolation::Interpenetration { a, b } => {
                write!(f, "processes {a} and {b} interpenetrate")
            }
        }
    }
}

impl Network {
    pub fn new(processes: impl IntoIterator<Item = Process>) -> Network {
        let mut n = Network::default();
        for p in processes {
            n.insert(p);
        }
        n
    }

    pub fn insert(&mut self, p: Process) {
        self.procs.insert(p.min_id(), p);
    }

    pub fn remove(&mut self, key: NodeId) -> Option<Process> {
        self.procs.remove(&key)
    }

    pub fn processes(&self) -> &BTreeMap<NodeId, Process> {
        &self.procs
    }

    pub fn len(&self) -> usize {
        self.procs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    fn shapes(&self) -> Vec<(u32, &Shape)> {
        self.procs.iter().map(|(k, p)| (k.0, p.shape())).collect()
    }

    /// Both network well-formedness conditions: every process well-formed
    /// and no two processes interpenetrating.
    pub fn well_formed(&self, env: &BehaviourEnv, tol: &Tolerances) -> Vec<NetViolation> {
        let mut out = Vec::new();
        for (key, p) in &self.procs {
            for detail in p.well_formed(env, tol) {
                out.push(NetViolation::Process { key: *key, detail });
            }
        }
        let keys: Vec<NodeId> = self.procs.keys().copied().collect();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if interpenetrates(
                    self.procs[a].shape(),
                    self.procs[b].shape(),
                    tol.eps_len,
                ) {
                    out.push(NetViolation::Interpenetration { a: *a, b: *b });
                }
            }
        }
        out
    }

    /// The pure temporal transition: every process takes the gated timed
    /// step, or `None` when any of them refuses.
    pub fn delay(
        &self,
        t: f64,
        env: &BehaviourEnv,
        tol: &Tolerances,
    ) -> Result<Option<Network>, ProcessError> {
        let mut procs = BTreeMap::new();
        for (k, p) in &self.procs {
            match p.timed_step(t, env, tol)? {
                Some(q) => {
                    procs.insert(*k, q);
                }
                None => return Ok(None),
            }
        }
        let mut clock = self.clock;
        clock.add(t);
        Ok(Some(Network { procs, clock }))
    }

    pub fn colliding(&self, tol: &Tolerances) -> Vec<CollisionTuple> {
        collision::colliding(&self.shapes(), tol, contact_eps(tol))
    }
}

fn contact_eps(tol: &Tolerances) -> f64 {
    tol.eps_len * 16.0
}

/// The strong-split operation: defined when the process has a pending
/// strong action and can complete a reaction. Executes the canonical
/// maximal synchronization sequence and splits every bond in the
/// synchronized channel set.
pub fn strong_split_op(
    p: &Process,
    env: &BehaviourEnv,
    tol: &Tolerances,
) -> Result<Option<(Vec<Process>, Vec<(String, Surface)>)>, ProcessError> {
    if !p.has_strong_action(env)? {
        return Ok(None);
    }
    let Some((end, mut channels)) = p.find_completion(env, tol)? else {
        return Ok(None);
    };
    channels.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp_key(&b.1)));
    let parts = end.split(&channels, tol.eps_len * 16.0);
    Ok(Some((parts, channels)))
}

/// The weak-split operation on one bond: both sides synchronize on
/// compatible weak-split actions, then exactly that bond is removed.
pub fn weak_split_op(
    p: &Process,
    name: &str,
    surface: &Surface,
    env: &BehaviourEnv,
    tol: &Tolerances,
) -> Result<Option<Vec<Process>>, ProcessError> {
    let Some(q) = p.sync_split(SplitKind::Weak, name, surface, env, tol)? else {
        return Ok(None);
    };
    Ok(Some(q.split(
        &[(name.to_string(), surface.clone())],
        tol.eps_len * 16.0,
    )))
}

/// How velocities are steered over time; every rule is a pure function of
/// the clock so traces replay exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum SteerRule {
    Zero,
    Constant(Vec3),
    /// `v(t) = v0 + g * t`.
    Gravity { g: Vec3, v0: Vec3 },
    /// Seeded random direction, fixed speed, resampled at every steer
    /// instant; deterministic in (seed, time, process id).
    Brownian { seed: u64, scale: f64 },
    /// Step function: the last entry with time at most `t` applies; no
    /// entry means the velocity is left unchanged.
    Scripted(Vec<(f64, Vec3)>),
}

impl SteerRule {
    fn velocity_at(&self, t: f64, key: NodeId) -> Option<Vec3> {
        match self {
            SteerRule::Zero => Some(Vec3::ZERO),
            SteerRule::Constant(v) => Some(*v),
            SteerRule::Gravity { g, v0 } => Some(*v0 + *g * t),
            SteerRule::Brownian { seed, scale } => {
                let mut h = std::collections::hash_map::DefaultHasher::new();
                seed.hash(&mut h);
                t.to_bits().hash(&mut h);
                key.0.hash(&mut h);
                let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
                // uniform direction on the sphere
                loop {
                    let v = Vec3 {
                        x: rng.gen_range(-1.0..1.0),
                        y: rng.gen_range(-1.0..1.0),
                        z: rng.gen_range(-1.0..1.0),
                    };
                    let n = v.norm();
                    if n > 1e-3 && n <= 1.0 {
                        return Some(v * (*scale / n));
                    }
                }
            }
            SteerRule::Scripted(entries) => entries
                .iter()
                .take_while(|(at, _)| *at <= t)
                .last()
                .map(|(_, v)| *v),
        }
    }
}

/// Per-process steering rules; compound processes use the rule of their
/// smallest member id. The default applies to unmatched processes.
#[derive(Debug, Clone)]
pub struct SteerSpec {
    pub rules: BTreeMap<NodeId, SteerRule>,
    pub default: SteerRule,
}

impl Default for SteerSpec {
    fn default() -> Self {
        // an empty script leaves velocities unchanged
        SteerSpec {
            rules: BTreeMap::new(),
            default: SteerRule::Scripted(Vec::new()),
        }
    }
}

impl SteerSpec {
    fn rule_for(&self, key: NodeId) -> &SteerRule {
        self.rules.get(&key).unwrap_or(&self.default)
    }
}

/// The velocity-update pass: every process velocity replaced per its rule
/// at time `t`; returns the changes applied.
pub fn apply_steer(
    network: &mut Network,
    spec: &SteerSpec,
    t: f64,
) -> Vec<(NodeId, Vec3)> {
    let keys: Vec<NodeId> = network.procs.keys().copied().collect();
    let mut changed = Vec::new();
    for key in keys {
        let rule = spec.rule_for(key);
        let Some(v) = rule.velocity_at(t, key) else {
            continue;
        };
        let p = &network.procs[&key];
        if p.velocity() == Some(v) {
            continue;
        }
        let updated = p.update_velocity(v);
        network.procs.insert(key, updated);
        changed.push((key, v));
    }
    changed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Collision tuples by (min id, max id); channel pairs lexicographically.
    Canonical,
    /// Channel-pair choice drawn from the seeded generator.
    Random,
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerPolicy::Canonical => write!(f, "canonical"),
            SchedulerPolicy::Random => write!(f, "random"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    /// The movement time step: the longest interval between velocity
    /// updates.
    pub delta: f64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub policy: SchedulerPolicy,
    /// Probability that an enabled weak split fires spontaneously, drawn
    /// once per bond per movement step.
    pub p_omega: f64,
    pub max_steps: Option<u64>,
    pub max_time: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            delta: 1.0,
            tolerances: Tolerances::default(),
            seed: 0,
            policy: SchedulerPolicy::Canonical,
            p_omega: 0.0,
            max_steps: None,
            max_time: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.delta > 0.0) {
            return Err(SimError::Config(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.p_omega) {
            return Err(SimError::Config(format!(
                "p_omega must be in [0, 1], got {}",
                self.p_omega
            )));
        }
        self.tolerances.validate().map_err(SimError::Config)
    }

    pub fn trace_header(&self) -> TraceHeader {
        TraceHeader {
            schema: crate::trace::TRACE_SCHEMA.to_string(),
            delta: self.delta,
            seed: self.seed,
            policy: self.policy.to_string(),
            p_omega: self.p_omega,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub steps: u64,
    pub final_time: f64,
    pub final_processes: usize,
    pub events: BTreeMap<String, u64>,
    pub deadlocked: bool,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "steps {}, final time {:?}, {} processes{}",
            self.steps,
            self.final_time,
            self.final_processes,
            if self.deadlocked { ", deadlocked" } else { "" }
        )?;
        for (kind, count) in &self.events {
            write!(f, "\n  {kind}: {count}")?;
        }
        Ok(())
    }
}

/// One evolution loop owning one network.
pub struct Simulation {
    pub network: Network,
    pub env: BehaviourEnv,
    pub steer: SteerSpec,
    pub config: EvolutionConfig,
    rng: ChaCha8Rng,
    step_index: u64,
    halted: bool,
}

impl Simulation {
    pub fn new(
        network: Network,
        env: BehaviourEnv,
        steer: SteerSpec,
        config: EvolutionConfig,
    ) -> Result<Simulation, SimError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Simulation {
            network,
            env,
            steer,
            config,
            rng,
            step_index: 0,
            halted: false,
        })
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn clock(&self) -> f64 {
        self.network.clock.value()
    }

    /// One movement time step: advance to `min(ftoc, delta)` interleaving
    /// urgent splits, resolve collisions when the step ended at a contact
    /// instant, then steer.
    pub fn evolution_step(&mut self) -> Result<Vec<TraceEvent>, SimError> {
        let mut events = Vec::new();
        if self.halted {
            return Ok(events);
        }
        let tol = self.config.tolerances;
        let horizon = self.config.delta;
        let ftoc_t = collision::ftoc(&self.network.shapes(), horizon, &tol)?;
        let (t_step, at_contact) = match ftoc_t {
            Some(t) if t <= horizon => (t, true),
            _ => (horizon, false),
        };
        self.advance(t_step, &mut events)?;
        if !self.halted {
            if at_contact {
                self.kappa(&mut events)?;
            }
            let t = self.network.clock.value();
            for (key, v) in apply_steer(&mut self.network, &self.steer, t) {
                events.push(TraceEvent::Steer { t, id: key.0, v });
            }
        }
        self.step_index += 1;
        Ok(events)
    }

    /// The interleaved time advance: sub-delays up to the next urgency
    /// point, with mandatory strong splits (and policy weak splits when
    /// time is blocked) fired in between. Emits a deadlock event and halts
    /// when no transition can proceed.
    fn advance(&mut self, total: f64, events: &mut Vec<TraceEvent>) -> Result<(), SimError> {
        let tol = self.config.tolerances;
        if self.config.p_omega > 0.0 {
            self.bernoulli_weak_splits(events)?;
        }
        let mut remaining = total;
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 100_000 {
                return Err(SimError::Config(
                    "evolution sub-step loop exceeded its bound".to_string(),
                ));
            }
            self.fire_strong_splits(events)?;
            // a remainder below time resolution is the same instant
            if remaining <= tol.eps_t * 0.5 {
                break;
            }
            let mut limit = f64::INFINITY;
            for p in self.network.procs.values() {
                limit = limit.min(p.delay_limit(&self.env)?);
            }
            let dt = remaining.min(limit);
            if dt <= 0.0 {
                // time is blocked: a weak split may unblock it
                if self.fire_blocked_weak_split(events)? {
                    continue;
                }
                let t = self.network.clock.value();
                events.push(TraceEvent::Deadlock {
                    t,
                    reason: "time is blocked and no split operation is enabled".to_string(),
                });
                self.halted = true;
                return Ok(());
            }
            match self.network.delay(dt, &self.env, &tol)? {
                Some(next) => {
                    self.network = next;
                    remaining -= dt;
                    events.push(TraceEvent::TimeStep {
                        t: self.network.clock.value(),
                        dt,
                    });
                }
                None => {
                    // a maximal-progress gate closed between the limit
                    // computation and the delay; loop to fire the split
                    continue;
                }
            }
            if remaining <= tol.eps_t * 0.5 {
                self.fire_strong_splits(events)?;
                break;
            }
        }
        Ok(())
    }

    /// Fires every enabled strong-split operation, in process-key order,
    /// until none remains (maximal progress makes them mandatory).
    fn fire_strong_splits(&mut self, events: &mut Vec<TraceEvent>) -> Result<(), SimError> {
        let tol = self.config.tolerances;
        loop {
            let mut fired = false;
            let keys: Vec<NodeId> = self.network.procs.keys().copied().collect();
            for key in keys {
                let Some(p) = self.network.procs.get(&key) else {
                    continue;
                };
                if let Some((parts, channels)) = strong_split_op(p, &self.env, &tol)? {
                    self.network.procs.remove(&key);
                    for part in parts {
                        self.network.insert(part);
                    }
                    events.push(TraceEvent::StrongSplit {
                        t: self.network.clock.value(),
                        channels: channels
                            .into_iter()
                            .map(|(name, surface)| SplitChannel { name, surface })
                            .collect(),
                        pid: key.0,
                    });
                    fired = true;
                    break;
                }
            }
            if !fired {
                return Ok(());
            }
        }
    }

    /// When time is blocked, fires the first enabled weak split in
    /// canonical order. Returns whether one fired.
    fn fire_blocked_weak_split(&mut self, events: &mut Vec<TraceEvent>) -> Result<bool, SimError> {
        let tol = self.config.tolerances;
        let keys: Vec<NodeId> = self.network.procs.keys().copied().collect();
        for key in keys {
            let p = self.network.procs[&key].clone();
            for bond in p.bonds() {
                if let Some(parts) =
                    weak_split_op(&p, &bond.name, &bond.surface, &self.env, &tol)?
                {
                    self.network.procs.remove(&key);
                    for part in parts {
                        self.network.insert(part);
                    }
                    events.push(TraceEvent::WeakSplit {
                        t: self.network.clock.value(),
                        name: bond.name.clone(),
                        surface: bond.surface.clone(),
                        pid: key.0,
                    });
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Spontaneous weak splits: one Bernoulli draw per bond per movement
    /// step.
    fn bernoulli_weak_splits(&mut self, events: &mut Vec<TraceEvent>) -> Result<(), SimError> {
        let tol = self.config.tolerances;
        let keys: Vec<NodeId> = self.network.procs.keys().copied().collect();
        for key in keys {
            let Some(p) = self.network.procs.get(&key).cloned() else {
                continue;
            };
            for bond in p.bonds() {
                if self.rng.gen::<f64>() >= self.config.p_omega {
                    continue;
                }
                if let Some(parts) =
                    weak_split_op(&p, &bond.name, &bond.surface, &self.env, &tol)?
                {
                    self.network.procs.remove(&key);
                    for part in parts {
                        self.network.insert(part);
                    }
                    events.push(TraceEvent::WeakSplit {
                        t: self.network.clock.value(),
                        name: bond.name.clone(),
                        surface: bond.surface.clone(),
                        pid: key.0,
                    });
                    break; // the process changed; stop scanning its bonds
                }
            }
        }
        Ok(())
    }

    /// Resolves every collision at the current (contact) instant, in
    /// deterministic tuple order, until the colliding set is empty. A pair
    /// resolved once must not reappear within the pass.
    pub fn kappa(&mut self, events: &mut Vec<TraceEvent>) -> Result<(), SimError> {
        let tol = self.config.tolerances;
        let mut resolved: BTreeSet<(u32, u32)> = BTreeSet::new();
        let bound = self.network.colliding(&tol).len() * 2 + 4;
        let mut iterations = 0usize;
        loop {
            let tuples = self.network.colliding(&tol);
            for t in &tuples {
                if resolved.contains(&(t.id_a, t.id_b)) {
                    return Err(SimError::ResolvedPairReappeared { a: t.id_a, b: t.id_b });
                }
            }
            let Some(tuple) = tuples.into_iter().next() else {
                return Ok(());
            };
            self.resolve_collision_tuple(&tuple, events)?;
            resolved.insert((tuple.id_a, tuple.id_b));
            iterations += 1;
            if iterations > bound {
                return Err(SimError::KappaBound { bound });
            }
        }
    }

    /// One reduction step: compatible processes bind (inelastic), anything
    /// else bounces (elastic).
    pub fn resolve_collision_tuple(
        &mut self,
        tuple: &CollisionTuple,
        events: &mut Vec<TraceEvent>,
    ) -> Result<(), SimError> {
        let tol = self.config.tolerances;
        let ka = NodeId(tuple.id_a);
        let kb = NodeId(tuple.id_b);
        let (Some(p), Some(q)) = (self.network.procs.get(&ka), self.network.procs.get(&kb))
        else {
            return Err(SimError::Config(format!(
                "stale collision tuple ({}, {})",
                tuple.id_a, tuple.id_b
            )));
        };
        let p = p.clone();
        let q = q.clone();
        let ceps = contact_eps(&tol);
        let t = self.network.clock.value();

        // candidate channel-action pairs: complementary names, surfaces
        // meeting inside the contact region
        let pacts = p.channel_actions(&self.env, &tol)?;
        let qacts = q.channel_actions(&self.env, &tol)?;
        let mut candidates = Vec::new();
        for ca in &pacts {
            for cb in &qacts {
                if cb.channel.name != ca.channel.name.complement() {
                    continue;
                }
                let Some(meet) = ca.channel.surface.intersect(&cb.channel.surface, ceps) else {
                    continue;
                };
                if meet.distance_to(&tuple.surface) > ceps {
                    continue;
                }
                candidates.push((ca, cb, meet));
            }
        }
        candidates.sort_by(|x, y| {
            x.0.channel
                .name
                .base
                .cmp(&y.0.channel.name.base)
                .then(x.0.node.cmp(&y.0.node))
                .then(x.1.node.cmp(&y.1.node))
                .then_with(|| x.2.cmp_key(&y.2))
        });

        if candidates.is_empty() {
            let (w1, w2) = collision::elastic_response(p.shape(), q.shape(), &tuple.surface, &tol)?;
            let p2 = p.update_velocity(w1);
            let q2 = q.update_velocity(w2);
            self.network.procs.insert(ka, p2);
            self.network.procs.insert(kb, q2);
            events.push(TraceEvent::Collision {
                t,
                ids: (tuple.id_a, tuple.id_b),
                surface: tuple.surface.clone(),
                elastic: true,
            });
        } else {
            let pick = match self.config.policy {
                SchedulerPolicy::Canonical => 0,
                SchedulerPolicy::Random => self.rng.gen_range(0..candidates.len()),
            };
            let (ca, cb, meet) = &candidates[pick];
            let v = collision::inelastic_response(p.shape(), q.shape());
            let name = ca.channel.name.base.clone();
            let joined = Process::bind(&ca.after, &cb.after, ca.node, cb.node, name.clone(), meet.clone())
                .update_velocity(v);
            self.network.procs.remove(&ka);
            self.network.procs.remove(&kb);
            self.network.insert(joined);
            events.push(TraceEvent::Bind {
                t,
                name,
                surface: meet.clone(),
                ids: (tuple.id_a, tuple.id_b),
            });
        }
        Ok(())
    }

    /// Iterates evolution steps until a bound or a deadlock, streaming
    /// events into `sink`.
    pub fn run(
        &mut self,
        mut sink: impl FnMut(&TraceEvent),
    ) -> Result<RunSummary, SimError> {
        let mut summary = RunSummary::default();
        loop {
            if let Some(max) = self.config.max_steps {
                if summary.steps >= max {
                    break;
                }
            }
            if let Some(max) = self.config.max_time {
                if self.clock() >= max - self.config.tolerances.eps_t {
                    break;
                }
            }
            if self.halted {
                break;
            }
            let events = self.evolution_step()?;
            for e in &events {
                *summary.events.entry(e.kind().to_string()).or_default() += 1;
                sink(e);
            }
            summary.steps += 1;
        }
        summary.final_time = self.clock();
        summary.final_processes = self.network.len();
        summary.deadlocked = self.halted;
        Ok(summary)
    }
}
