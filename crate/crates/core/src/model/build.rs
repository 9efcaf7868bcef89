//! Turns a parsed model into a runnable network, collecting every semantic
//! violation along the way.

use std::collections::BTreeMap;
use std::fmt;

use crate::behaviour::{validate_behaviour, Behaviour, BehaviourEnv, Channel, Name};
use crate::geometry::{ConvexPolytope, BasicShape, Shape, Surface, Vec3};
use crate::network::{EvolutionConfig, Network, SteerSpec};
use crate::process::{NodeId, Process};
use crate::Tolerances;

use super::{BChan, BExpr, ModelFile, SteerTarget, SurfRef};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    DuplicateName { kind: &'static str, name: String },
    UnknownSurface { name: String },
    UnknownShape { name: String },
    BadShape { name: String, detail: String },
    BadSurface { name: String, detail: String },
    BadBehaviour { context: String, detail: String },
    BadProcess { name: String, detail: String },
    BadSteer { detail: String },
    BadConfig { detail: String },
    IllFormedNetwork { detail: String },
    TunnelingRisk { detail: String },
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelViolation::DuplicateName { kind, name } => {
                write!(f, "duplicate {kind} name `{name}`")
            }
            ModelViolation::UnknownSurface { name } => write!(f, "unknown surface `{name}`"),
            ModelViolation::UnknownShape { name } => write!(f, "unknown shape `{name}`"),
            ModelViolation::BadShape { name, detail } => write!(f, "shape `{name}`: {detail}"),
            ModelViolation::BadSurface { name, detail } => write!(f, "surface `{name}`: {detail}"),
            ModelViolation::BadBehaviour { context, detail } => {
                write!(f, "behaviour {context}: {detail}")
            }
            ModelViolation::BadProcess { name, detail } => write!(f, "process `{name}`: {detail}"),
            ModelViolation::BadSteer { detail } => write!(f, "steer: {detail}"),
            ModelViolation::BadConfig { detail } => write!(f, "config: {detail}"),
            ModelViolation::IllFormedNetwork { detail } => write!(f, "network: {detail}"),
            ModelViolation::TunnelingRisk { detail } => write!(f, "tunneling guard: {detail}"),
        }
    }
}

/// Everything needed to run a parsed model.
pub struct BuiltModel {
    pub network: Network,
    pub env: BehaviourEnv,
    pub steer: SteerSpec,
    pub config: EvolutionConfig,
    /// Declared process names in id order; `NodeId(i + 1)` belongs to the
    /// i-th declaration.
    pub process_names: Vec<String>,
}

struct Builder {
    violations: Vec<ModelViolation>,
    surfaces: BTreeMap<String, Surface>,
    shapes: BTreeMap<String, (ConvexPolytope, f64)>,
    /// Canonically ordered faces per shape template, for `face(S, i)` refs.
    shape_faces: BTreeMap<String, Vec<Surface>>,
}

impl Builder {
    fn resolve_surface(&mut self, r: &SurfRef, context: &str) -> Option<Surface> {
        match r {
            SurfRef::Named(n) => {
                let found = self.surfaces.get(n).cloned();
                if found.is_none() {
                    self.violations
                        .push(ModelViolation::UnknownSurface { name: n.clone() });
                }
                found
            }
            SurfRef::Face { shape, index } => {
                let Some(faces) = self.shape_faces.get(shape) else {
                    self.violations.push(ModelViolation::UnknownShape {
                        name: shape.clone(),
                    });
                    return None;
                };
                let found = faces.get(*index).cloned();
                if found.is_none() {
                    self.violations.push(ModelViolation::BadBehaviour {
                        context: context.to_string(),
                        detail: format!(
                            "shape `{shape}` has {} faces, index {index} is out of range",
                            faces.len()
                        ),
                    });
                }
                found
            }
        }
    }

    fn lower_bexpr(&mut self, e: &BExpr, context: &str) -> Option<Behaviour> {
        Some(match e {
            BExpr::Nil => Behaviour::Nil,
            BExpr::Const(k) => Behaviour::constant(k.clone()),
            BExpr::Prefix(c, b) => {
                let chan = self.lower_chan(c, context)?;
                Behaviour::prefix(chan, self.lower_bexpr(b, context)?)
            }
            BExpr::Omega(c, b) => {
                let chan = self.lower_chan(c, context)?;
                Behaviour::omega(chan, self.lower_bexpr(b, context)?)
            }
            BExpr::Rho(set, b) => {
                let mut chans = Vec::with_capacity(set.len());
                for c in set {
                    chans.push(self.lower_chan(c, context)?);
                }
                Behaviour::rho(chans, self.lower_bexpr(b, context)?)
            }
            BExpr::Delay(t, b) => Behaviour::delay(*t, self.lower_bexpr(b, context)?),
            BExpr::Sum(a, b) => Behaviour::sum(
                self.lower_bexpr(a, context)?,
                self.lower_bexpr(b, context)?,
            ),
        })
    }

    fn lower_chan(&mut self, c: &BChan, context: &str) -> Option<Channel> {
        let surface = self.resolve_surface(&c.surface, context)?;
        let name = if c.complemented {
            Name::co(c.name.clone())
        } else {
            Name::plain(c.name.clone())
        };
        Some(Channel::new(name, surface))
    }
}

/// Builds (and thereby validates) a model. On any violation the full list
/// is returned instead of a partially built network.
pub fn build_model(m: &ModelFile, tol: &Tolerances) -> Result<BuiltModel, Vec<ModelViolation>> {
    let mut b = Builder {
        violations: Vec::new(),
        surfaces: BTreeMap::new(),
        shapes: BTreeMap::new(),
        shape_faces: BTreeMap::new(),
    };

    for (name, verts) in &m.surfaces {
        if b.surfaces.contains_key(name) {
            b.violations.push(ModelViolation::DuplicateName {
                kind: "surface",
                name: name.clone(),
            });
            continue;
        }
        match Surface::new(verts.clone(), tol.eps_len) {
            Ok(s) => {
                b.surfaces.insert(name.clone(), s);
            }
            Err(e) => b.violations.push(ModelViolation::BadSurface {
                name: name.clone(),
                detail: e.to_string(),
            }),
        }
    }

    for decl in &m.shapes {
        if b.shapes.contains_key(&decl.name) {
            b.violations.push(ModelViolation::DuplicateName {
                kind: "shape",
                name: decl.name.clone(),
            });
            continue;
        }
        if !(decl.mass > 0.0) {
            b.violations.push(ModelViolation::BadShape {
                name: decl.name.clone(),
                detail: format!("mass must be positive, got {}", decl.mass),
            });
            continue;
        }
        match ConvexPolytope::new(decl.verts.clone(), tol.eps_len) {
            Ok(p) => {
                let mut faces: Vec<Surface> = p
                    .hull()
                    .faces
                    .iter()
                    .filter_map(|f| {
                        let verts: Vec<Vec3> =
                            f.verts.iter().map(|&i| p.verts()[i]).collect();
                        Surface::new(verts, tol.eps_len).ok()
                    })
                    .collect();
                faces.sort_by(Surface::cmp_key);
                b.shape_faces.insert(decl.name.clone(), faces);
                b.shapes.insert(decl.name.clone(), (p, decl.mass));
            }
            Err(e) => b.violations.push(ModelViolation::BadShape {
                name: decl.name.clone(),
                detail: e.to_string(),
            }),
        }
    }

    // behaviour environment
    let mut env = BehaviourEnv::new();
    for (name, expr) in &m.behaviours {
        if env.contains_key(name) {
            b.violations.push(ModelViolation::DuplicateName {
                kind: "behaviour",
                name: name.clone(),
            });
            continue;
        }
        if let Some(lowered) = b.lower_bexpr(expr, name) {
            env.insert(name.clone(), lowered);
        }
    }
    for (name, behaviour) in &env {
        for v in validate_behaviour(behaviour, &env, tol.eps_len) {
            b.violations.push(ModelViolation::BadBehaviour {
                context: name.clone(),
                detail: v.to_string(),
            });
        }
    }

    // processes
    let mut network = Network::default();
    let mut process_names = Vec::new();
    let mut seen_names = Vec::new();
    for (i, decl) in m.processes.iter().enumerate() {
        if seen_names.contains(&decl.name) {
            b.violations.push(ModelViolation::DuplicateName {
                kind: "process",
                name: decl.name.clone(),
            });
            continue;
        }
        seen_names.push(decl.name.clone());
        let Some((polytope, mass)) = b.shapes.get(&decl.shape).cloned() else {
            b.violations.push(ModelViolation::UnknownShape {
                name: decl.shape.clone(),
            });
            continue;
        };
        let context = format!("process `{}`", decl.name);
        let Some(behaviour) = b.lower_bexpr(&decl.behaviour, &context) else {
            continue;
        };
        for v in validate_behaviour(&behaviour, &env, tol.eps_len) {
            b.violations.push(ModelViolation::BadProcess {
                name: decl.name.clone(),
                detail: v.to_string(),
            });
        }
        match BasicShape::new(polytope, mass, decl.position, decl.velocity, tol.eps_len) {
            Ok(shape) => {
                let id = NodeId(i as u32 + 1);
                let proc = Process::basic(id, Shape::Basic(shape), behaviour);
                for detail in proc.well_formed(&env, tol) {
                    b.violations.push(ModelViolation::BadProcess {
                        name: decl.name.clone(),
                        detail,
                    });
                }
                network.insert(proc);
                process_names.push(decl.name.clone());
            }
            Err(e) => b.violations.push(ModelViolation::BadProcess {
                name: decl.name.clone(),
                detail: e.to_string(),
            }),
        }
    }

    // steering
    let mut steer = SteerSpec::default();
    for decl in &m.steers {
        if let crate::network::SteerRule::Scripted(entries) = &decl.rule {
            if entries.windows(2).any(|w| w[0].0 > w[1].0) {
                b.violations.push(ModelViolation::BadSteer {
                    detail: "scripted times must be non-decreasing".to_string(),
                });
            }
        }
        match &decl.target {
            SteerTarget::Default => steer.default = decl.rule.clone(),
            SteerTarget::Process(name) => {
                match m.processes.iter().position(|p| &p.name == name) {
                    Some(i) => {
                        steer.rules.insert(NodeId(i as u32 + 1), decl.rule.clone());
                    }
                    None => b.violations.push(ModelViolation::BadSteer {
                        detail: format!("unknown process `{name}`"),
                    }),
                }
            }
        }
    }

    // configuration
    let mut config = EvolutionConfig {
        tolerances: *tol,
        ..EvolutionConfig::default()
    };
    if let Some(d) = m.config.delta {
        config.delta = d;
    }
    if let Some(s) = m.config.seed {
        config.seed = s;
    }
    if let Some(p) = m.config.policy {
        config.policy = p;
    }
    if let Some(p) = m.config.p_omega {
        config.p_omega = p;
    }
    config.max_steps = m.config.max_steps;
    config.max_time = m.config.max_time;
    if let Err(e) = config.validate() {
        b.violations.push(ModelViolation::BadConfig {
            detail: e.to_string(),
        });
    }

    if b.violations.is_empty() {
        // initial network well-formedness (pairwise interpenetration)
        for v in network.well_formed(&env, tol) {
            b.violations.push(ModelViolation::IllFormedNetwork {
                detail: v.to_string(),
            });
        }
        // static tunneling check against declared velocities: the contact
        // search must be able to resolve every pair at time resolution
        let procs: Vec<&Process> = network.processes().values().collect();
        for (i, p) in procs.iter().enumerate() {
            for q in &procs[i + 1..] {
                let rel = (p.velocity().unwrap_or(Vec3::ZERO)
                    - q.velocity().unwrap_or(Vec3::ZERO))
                .norm();
                let extent = p.shape().min_extent().min(q.shape().min_extent());
                if extent.is_finite() && rel > 0.0 && extent / (2.0 * rel) < tol.eps_t * 4.0 {
                    b.violations.push(ModelViolation::TunnelingRisk {
                        detail: format!(
                            "relative speed {rel} cannot be resolved against extent {extent}"
                        ),
                    });
                }
            }
        }
    }

    if b.violations.is_empty() {
        Ok(BuiltModel {
            network,
            env,
            steer,
            config,
            process_names,
        })
    } else {
        Err(b.violations)
    }
}

/// The validation report for a parsed model: empty means buildable.
pub fn validate_model(m: &ModelFile, tol: &Tolerances) -> Vec<ModelViolation> {
    match build_model(m, tol) {
        Ok(_) => Vec::new(),
        Err(vs) => vs,
    }
}
