//! Shape Calculus: 3D shapes that move, collide, bind on compatible channels
//! and split bonds again, with machine-checkable well-formedness at every step.
//!
//! The crate is organized around the layers of the calculus:
//!
//! * [`geometry`] — convex-polytope shapes, composition on contact surfaces,
//!   motion over time and shape well-formedness;
//! * [`collision`] — first time of contact, colliding-pair extraction and
//!   elastic/inelastic collision response;
//! * [`behaviour`] — the timed CCS-like behaviour algebra and its temporal and
//!   action transitions;
//! * [`process`] — shapes paired with behaviours, bonds, split
//!   synchronization and maximal progress;
//! * [`network`] — networks of processes, collision resolution, steering and
//!   the movement-time-step evolution loop;
//! * [`model`] — the `.shc` textual model format, validation and
//!   pretty-printing.
//!
//! With the `parallel` feature (default) the collision kernel fans per-pair
//! work out over rayon; results are bitwise identical to the sequential
//! fallback because all reductions use total orders.

pub mod behaviour;
pub mod collision;
pub mod geometry;
pub mod model;
pub mod network;
pub mod process;
pub mod trace;

mod par;

/// Numeric tolerances used by every geometric and temporal comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance for geometric coincidence. Two convex sets
    /// "intersect" when their distance is at most `eps_len`.
    pub eps_len: f64,
    /// Time resolution: the first-time-of-contact search and all clock
    /// comparisons resolve instants up to `eps_t`.
    pub eps_t: f64,
    /// Iteration cap for the conservative bisection in the contact search.
    pub max_bisect: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_len: 1e-9,
            eps_t: 1e-6,
            max_bisect: 64,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_len > 0.0) {
            return Err(format!("eps_len must be positive, got {}", self.eps_len));
        }
        if !(self.eps_t > 0.0) {
            return Err(format!("eps_t must be positive, got {}", self.eps_t));
        }
        if self.max_bisect == 0 {
            return Err("max_bisect must be positive".to_string());
        }
        Ok(())
    }
}
