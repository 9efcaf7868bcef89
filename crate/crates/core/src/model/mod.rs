//! The `.shc` textual model format: shape declarations, named surfaces,
//! behaviour definitions, process instantiation, steering and run
//! configuration, plus validation and pretty-printing.
//!
//! Named time constants are substituted into literal delays while parsing;
//! surface names stay symbolic in the syntax tree (the pretty-printer emits
//! them back) and resolve when the model is built into a network.

mod build;
mod parse;
mod print;

use std::fmt;

use crate::geometry::Vec3;
use crate::network::{SchedulerPolicy, SteerRule};

pub use build::{build_model, validate_model, BuiltModel, ModelViolation};
pub use parse::parse_model;
pub use print::print_model;

/// A parsed model file; syntactic except for substituted time constants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelFile {
    pub constants: Vec<(String, f64)>,
    pub surfaces: Vec<(String, Vec<Vec3>)>,
    pub shapes: Vec<ShapeDecl>,
    pub behaviours: Vec<(String, BExpr)>,
    pub processes: Vec<ProcessDecl>,
    pub steers: Vec<SteerDecl>,
    pub config: ConfigDecl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDecl {
    pub name: String,
    /// Vertices local to the reference point.
    pub verts: Vec<Vec3>,
    /// Mass; `inf` declares an immovable wall.
    pub mass: f64,
}

/// A surface reference inside a behaviour: a declared name or a face of a
/// shape template by index.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfRef {
    Named(String),
    Face { shape: String, index: usize },
}

impl fmt::Display for SurfRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfRef::Named(n) => write!(f, "{n}"),
            SurfRef::Face { shape, index } => write!(f, "face({shape}, {index})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BChan {
    pub name: String,
    pub complemented: bool,
    pub surface: SurfRef,
}

/// Behaviour syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum BExpr {
    Nil,
    Const(String),
    Prefix(BChan, Box<BExpr>),
    Omega(BChan, Box<BExpr>),
    Rho(Vec<BChan>, Box<BExpr>),
    Delay(f64, Box<BExpr>),
    Sum(Box<BExpr>, Box<BExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessDecl {
    pub name: String,
    pub shape: String,
    pub position: Vec3,
    pub velocity: Vec3,
    pub behaviour: BExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SteerTarget {
    Process(String),
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteerDecl {
    pub target: SteerTarget,
    pub rule: SteerRule,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDecl {
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub policy: Option<SchedulerPolicy>,
    pub p_omega: Option<f64>,
    pub max_steps: Option<u64>,
    pub max_time: Option<f64>,
}

/// A syntax error with its position in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}\n  | {}",
            self.line, self.column, self.message, self.snippet
        )
    }
}

impl std::error::Error for ParseError {}
