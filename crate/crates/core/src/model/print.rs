//! Canonical pretty-printer; `parse_model(print_model(m))` reproduces `m`
//! structurally, with floats emitted in shortest round-trip form.

use std::fmt::Write;

use crate::geometry::Vec3;
use crate::network::SteerRule;

use super::{BChan, BExpr, ModelFile, SteerTarget};

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_vec(v: Vec3) -> String {
    format!("({}, {}, {})", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

fn fmt_chan(c: &BChan) -> String {
    let tilde = if c.complemented { "~" } else { "" };
    format!("<{}{}, {}>", tilde, c.name, c.surface)
}

fn fmt_bexpr(e: &BExpr) -> String {
    match e {
        BExpr::Nil => "nil".to_string(),
        BExpr::Const(k) => k.clone(),
        BExpr::Prefix(c, b) => format!("{}.{}", fmt_chan(c), fmt_cont(b)),
        BExpr::Omega(c, b) => {
            let tilde = if c.complemented { "~" } else { "" };
            format!("w({}{}, {}).{}", tilde, c.name, c.surface, fmt_cont(b))
        }
        BExpr::Rho(set, b) => {
            let inner: Vec<String> = set.iter().map(fmt_chan).collect();
            format!("rho{{{}}}.{}", inner.join(", "), fmt_cont(b))
        }
        BExpr::Delay(t, b) => format!("eps({}).{}", fmt_num(*t), fmt_cont(b)),
        BExpr::Sum(a, b) => {
            // right operand parenthesized when it is itself a sum, so the
            // left-associative parse reproduces the tree
            let rhs = match **b {
                BExpr::Sum(..) => format!("({})", fmt_bexpr(b)),
                _ => fmt_bexpr(b),
            };
            format!("{} + {}", fmt_bexpr(a), rhs)
        }
    }
}

/// Continuations of prefixes bind tighter than `+`.
fn fmt_cont(e: &BExpr) -> String {
    match e {
        BExpr::Sum(..) => format!("({})", fmt_bexpr(e)),
        _ => fmt_bexpr(e),
    }
}

/// Renders a model in canonical section order. Declarations keep their
/// stored order, so output is stable across runs.
pub fn print_model(m: &ModelFile) -> String {
    let mut out = String::new();
    for (name, v) in &m.constants {
        let _ = writeln!(out, "const {name} = {}", fmt_num(*v));
    }
    if !m.constants.is_empty() {
        out.push('\n');
    }
    for (name, verts) in &m.surfaces {
        let vs: Vec<String> = verts.iter().map(|v| fmt_vec(*v)).collect();
        let _ = writeln!(out, "surface {name} = {{ {} }}", vs.join(", "));
    }
    if !m.surfaces.is_empty() {
        out.push('\n');
    }
    for s in &m.shapes {
        let vs: Vec<String> = s.verts.iter().map(|v| fmt_vec(*v)).collect();
        let mass = if s.mass.is_infinite() {
            "inf".to_string()
        } else {
            fmt_num(s.mass)
        };
        let _ = writeln!(out, "shape {} {{", s.name);
        let _ = writeln!(out, "    verts = [ {} ]", vs.join(", "));
        let _ = writeln!(out, "    mass = {mass}");
        let _ = writeln!(out, "}}");
    }
    if !m.shapes.is_empty() {
        out.push('\n');
    }
    for (name, b) in &m.behaviours {
        let _ = writeln!(out, "behaviour {name} = {}", fmt_bexpr(b));
    }
    if !m.behaviours.is_empty() {
        out.push('\n');
    }
    for p in &m.processes {
        let _ = writeln!(
            out,
            "process {} = {} @ {} vel {} runs {}",
            p.name,
            p.shape,
            fmt_vec(p.position),
            fmt_vec(p.velocity),
            fmt_bexpr(&p.behaviour)
        );
    }
    if !m.processes.is_empty() {
        out.push('\n');
    }
    for s in &m.steers {
        let target = match &s.target {
            SteerTarget::Process(n) => n.clone(),
            SteerTarget::Default => "default".to_string(),
        };
        let rule = match &s.rule {
            SteerRule::Zero => "zero".to_string(),
            SteerRule::Constant(v) => format!("constant {}", fmt_vec(*v)),
            SteerRule::Gravity { g, v0 } => {
                if *v0 == Vec3::ZERO {
                    format!("gravity {}", fmt_vec(*g))
                } else {
                    format!("gravity {} from {}", fmt_vec(*g), fmt_vec(*v0))
                }
            }
            SteerRule::Brownian { seed, scale } => {
                format!("brownian seed {seed} scale {}", fmt_num(*scale))
            }
            SteerRule::Scripted(entries) => {
                let es: Vec<String> = entries
                    .iter()
                    .map(|(t, v)| format!("({}, {})", fmt_num(*t), fmt_vec(*v)))
                    .collect();
                format!("scripted [ {} ]", es.join(", "))
            }
        };
        let _ = writeln!(out, "steer {target} {rule}");
    }
    if !m.steers.is_empty() {
        out.push('\n');
    }
    let c = &m.config;
    if c != &super::ConfigDecl::default() {
        let _ = writeln!(out, "config {{");
        if let Some(v) = c.delta {
            let _ = writeln!(out, "    delta = {}", fmt_num(v));
        }
        if let Some(v) = c.seed {
            let _ = writeln!(out, "    seed = {v}");
        }
        if let Some(v) = c.policy {
            let _ = writeln!(out, "    policy = {v}");
        }
        if let Some(v) = c.p_omega {
            let _ = writeln!(out, "    p_omega = {}", fmt_num(v));
        }
        if let Some(v) = c.max_steps {
            let _ = writeln!(out, "    max_steps = {v}");
        }
        if let Some(v) = c.max_time {
            let _ = writeln!(out, "    max_time = {}", fmt_num(v));
        }
        let _ = writeln!(out, "}}");
    }
    out
}
