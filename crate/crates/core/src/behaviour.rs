//! The timed behaviour algebra: channel prefixes, weak- and strong-split
//! prefixes, delays, sums and guarded constants, with the temporal and
//! action transition relations.
//!
//! Behaviour terms are immutable; children are shared through `Arc` so
//! derivative terms are cheap. Surfaces inside behaviours are expressed in
//! the local frame of the eventual host shape.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Surface, Vec3};

/// Limit on constant unfoldings per query; validated (guarded) environments
/// stay far below it.
const MAX_UNFOLDS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviourError {
    #[error("unbound behaviour constant {0}")]
    UnboundConstant(String),
    #[error("constant unfolding exceeded {MAX_UNFOLDS} steps; unguarded recursion?")]
    UnfoldDepthExceeded,
}

/// A channel name or its complement; `~a` synchronizes with `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Name {
    pub base: String,
    pub complemented: bool,
}

impl Name {
    pub fn plain(base: impl Into<String>) -> Name {
        Name {
            base: base.into(),
            complemented: false,
        }
    }

    pub fn co(base: impl Into<String>) -> Name {
        Name {
            base: base.into(),
            complemented: true,
        }
    }

    /// `~~a = a`.
    pub fn complement(&self) -> Name {
        Name {
            base: self.base.clone(),
            complemented: !self.complemented,
        }
    }

    pub fn cmp_key(&self, other: &Name) -> Ordering {
        self.base
            .cmp(&other.base)
            .then(self.complemented.cmp(&other.complemented))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complemented {
            write!(f, "~{}", self.base)
        } else {
            write!(f, "{}", self.base)
        }
    }
}

/// A binding capability: a name active on a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: Name,
    pub surface: Surface,
}

impl Channel {
    pub fn new(name: Name, surface: Surface) -> Channel {
        Channel { name, surface }
    }

    pub fn cmp_key(&self, other: &Channel) -> Ordering {
        self.name
            .cmp_key(&other.name)
            .then_with(|| self.surface.cmp_key(&other.surface))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, ", self.name)?;
        write_surface(f, &self.surface)?;
        write!(f, ">")
    }
}

fn write_surface(f: &mut fmt::Formatter<'_>, s: &Surface) -> fmt::Result {
    write!(f, "{{")?;
    for (i, v) in s.verts().iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "}}")
}

/// Channels are compatible when the names are complementary and the
/// surfaces intersect (distance at most `eps`). Both surfaces must be in
/// the same frame.
pub fn channels_compatible(c1: &Channel, c2: &Channel, eps: f64) -> bool {
    c2.name == c1.name.complement() && c1.surface.distance_to(&c2.surface) <= eps
}

/// Basic atomic actions of behaviours.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Chan(Channel),
    WeakSplit(Channel),
    StrongSplit(Channel),
}

impl Action {
    pub fn channel(&self) -> &Channel {
        match self {
            Action::Chan(c) | Action::WeakSplit(c) | Action::StrongSplit(c) => c,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Action::Chan(_) => 0,
            Action::WeakSplit(_) => 1,
            Action::StrongSplit(_) => 2,
        }
    }

    pub fn cmp_key(&self, other: &Action) -> Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.channel().cmp_key(other.channel()))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Chan(c) => write!(f, "{c}"),
            Action::WeakSplit(c) => write!(f, "w{c}"),
            Action::StrongSplit(c) => write!(f, "rho{c}"),
        }
    }
}

/// Behaviour terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Behaviour {
    Nil,
    Prefix(Channel, Arc<Behaviour>),
    OmegaPrefix(Channel, Arc<Behaviour>),
    /// Strong-split set: non-empty, pairwise incompatible, canonically
    /// ordered by (name, surface).
    Rho(Vec<Channel>, Arc<Behaviour>),
    Delay(f64, Arc<Behaviour>),
    Sum(Arc<Behaviour>, Arc<Behaviour>),
    Const(String),
}

impl Behaviour {
    pub fn prefix(c: Channel, b: Behaviour) -> Behaviour {
        Behaviour::Prefix(c, Arc::new(b))
    }

    pub fn omega(c: Channel, b: Behaviour) -> Behaviour {
        Behaviour::OmegaPrefix(c, Arc::new(b))
    }

    pub fn rho(mut set: Vec<Channel>, b: Behaviour) -> Behaviour {
        set.sort_by(|a, b| a.cmp_key(b));
        Behaviour::Rho(set, Arc::new(b))
    }

    pub fn delay(t: f64, b: Behaviour) -> Behaviour {
        Behaviour::Delay(t, Arc::new(b))
    }

    pub fn sum(a: Behaviour, b: Behaviour) -> Behaviour {
        Behaviour::Sum(Arc::new(a), Arc::new(b))
    }

    pub fn constant(k: impl Into<String>) -> Behaviour {
        Behaviour::Const(k.into())
    }

    fn rank(&self) -> u8 {
        match self {
            Behaviour::Nil => 0,
            Behaviour::Prefix(..) => 1,
            Behaviour::OmegaPrefix(..) => 2,
            Behaviour::Rho(..) => 3,
            Behaviour::Delay(..) => 4,
            Behaviour::Sum(..) => 5,
            Behaviour::Const(_) => 6,
        }
    }

    /// Total structural order; used to keep derivative sets deterministic.
    pub fn cmp_key(&self, other: &Behaviour) -> Ordering {
        use Behaviour::*;
        self.rank()
            .cmp(&other.rank())
            .then_with(|| match (self, other) {
                (Nil, Nil) => Ordering::Equal,
                (Prefix(c1, b1), Prefix(c2, b2))
                | (OmegaPrefix(c1, b1), OmegaPrefix(c2, b2)) => {
                    c1.cmp_key(c2).then_with(|| b1.cmp_key(b2))
                }
                (Rho(l1, b1), Rho(l2, b2)) => l1
                    .len()
                    .cmp(&l2.len())
                    .then_with(|| {
                        for (a, b) in l1.iter().zip(l2) {
                            let c = a.cmp_key(b);
                            if c.is_ne() {
                                return c;
                            }
                        }
                        Ordering::Equal
                    })
                    .then_with(|| b1.cmp_key(b2)),
                (Delay(t1, b1), Delay(t2, b2)) => t1.total_cmp(t2).then_with(|| b1.cmp_key(b2)),
                (Sum(a1, b1), Sum(a2, b2)) => a1.cmp_key(a2).then_with(|| b1.cmp_key(b2)),
                (Const(k1), Const(k2)) => k1.cmp(k2),
                _ => unreachable!("rank already distinguished"),
            })
    }

    /// All surfaces syntactically occurring in the term, reaching through
    /// constants (each constant visited once).
    pub fn surfaces<'a>(&'a self, env: &'a BehaviourEnv) -> Vec<&'a Surface> {
        let mut out = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        self.collect_surfaces(env, &mut seen, &mut out);
        out
    }

    fn collect_surfaces<'a>(
        &'a self,
        env: &'a BehaviourEnv,
        seen: &mut Vec<&'a str>,
        out: &mut Vec<&'a Surface>,
    ) {
        match self {
            Behaviour::Nil => {}
            Behaviour::Prefix(c, b) | Behaviour::OmegaPrefix(c, b) => {
                out.push(&c.surface);
                b.collect_surfaces(env, seen, out);
            }
            Behaviour::Rho(l, b) => {
                out.extend(l.iter().map(|c| &c.surface));
                b.collect_surfaces(env, seen, out);
            }
            Behaviour::Delay(_, b) => b.collect_surfaces(env, seen, out),
            Behaviour::Sum(a, b) => {
                a.collect_surfaces(env, seen, out);
                b.collect_surfaces(env, seen, out);
            }
            Behaviour::Const(k) => {
                if !seen.contains(&k.as_str()) {
                    seen.push(k);
                    if let Some(body) = env.get(k) {
                        body.collect_surfaces(env, seen, out);
                    }
                }
            }
        }
    }

    /// All channel surfaces, translated by `offset` (host reference point).
    pub fn surfaces_global(&self, env: &BehaviourEnv, offset: Vec3) -> Vec<Surface> {
        self.surfaces(env)
            .into_iter()
            .map(|s| s.translated(offset))
            .collect()
    }
}

impl fmt::Display for Behaviour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behaviour::Nil => write!(f, "nil"),
            Behaviour::Prefix(c, b) => write!(f, "{c}.{b}"),
            Behaviour::OmegaPrefix(c, b) => write!(f, "w({}, {{..}}).{b}", c.name),
            Behaviour::Rho(l, b) => {
                write!(f, "rho{{")?;
                for (i, c) in l.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "}}.{b}")
            }
            Behaviour::Delay(t, b) => write!(f, "eps({t:?}).{b}"),
            Behaviour::Sum(a, b) => write!(f, "({a} + {b})"),
            Behaviour::Const(k) => write!(f, "{k}"),
        }
    }
}

/// Constant definitions: `K ≝ B`.
pub type BehaviourEnv = BTreeMap<String, Behaviour>;

struct Unfolder {
    budget: usize,
}

impl Unfolder {
    fn new() -> Self {
        Unfolder {
            budget: MAX_UNFOLDS,
        }
    }

    fn resolve<'a>(
        &mut self,
        k: &str,
        env: &'a BehaviourEnv,
    ) -> Result<&'a Behaviour, BehaviourError> {
        if self.budget == 0 {
            return Err(BehaviourError::UnfoldDepthExceeded);
        }
        self.budget -= 1;
        env.get(k)
            .ok_or_else(|| BehaviourError::UnboundConstant(k.to_string()))
    }
}

/// The temporal transition: the term after letting `t` time units pass, or
/// `None` when some rule refuses the delay (urgency). `time_eps` absorbs
/// float dust in expiring delays.
pub fn delay_behaviour(
    b: &Behaviour,
    t: f64,
    env: &BehaviourEnv,
    time_eps: f64,
) -> Result<Option<Behaviour>, BehaviourError> {
    let mut u = Unfolder::new();
    delay_rec(b, t, env, time_eps, &mut u)
}

fn delay_rec(
    b: &Behaviour,
    t: f64,
    env: &BehaviourEnv,
    time_eps: f64,
    u: &mut Unfolder,
) -> Result<Option<Behaviour>, BehaviourError> {
    Ok(match b {
        Behaviour::Nil => Some(Behaviour::Nil),
        Behaviour::Prefix(..) | Behaviour::OmegaPrefix(..) | Behaviour::Rho(..) => Some(b.clone()),
        Behaviour::Delay(avail, inner) => {
            if *avail + time_eps >= t {
                // residues below time resolution snap to an exact zero so
                // urgency points are reached instead of orbited
                let rest = *avail - t;
                let rest = if rest <= time_eps * 0.5 { 0.0 } else { rest };
                Some(Behaviour::Delay(rest, inner.clone()))
            } else {
                None
            }
        }
        Behaviour::Sum(l, r) => {
            let dl = delay_rec(l, t, env, time_eps, u)?;
            let dr = delay_rec(r, t, env, time_eps, u)?;
            match (dl, dr) {
                (Some(a), Some(b)) => Some(Behaviour::sum(a, b)),
                _ => None,
            }
        }
        Behaviour::Const(k) => {
            let body = u.resolve(k, env)?.clone();
            match delay_rec(&body, t, env, time_eps, u)? {
                // a body that merely idles keeps its name
                Some(derived) if derived == body => Some(b.clone()),
                other => other,
            }
        }
    })
}

/// The action transition relation: every `(action, derivative)` pair the
/// term offers, deduplicated and canonically ordered.
pub fn behaviour_actions(
    b: &Behaviour,
    env: &BehaviourEnv,
) -> Result<Vec<(Action, Behaviour)>, BehaviourError> {
    let mut u = Unfolder::new();
    let mut out = actions_rec(b, env, &mut u)?;
    out.sort_by(|(a1, b1), (a2, b2)| a1.cmp_key(a2).then_with(|| b1.cmp_key(b2)));
    out.dedup_by(|(a1, b1), (a2, b2)| a1 == a2 && b1 == b2);
    Ok(out)
}

fn actions_rec(
    b: &Behaviour,
    env: &BehaviourEnv,
    u: &mut Unfolder,
) -> Result<Vec<(Action, Behaviour)>, BehaviourError> {
    Ok(match b {
        Behaviour::Nil => Vec::new(),
        Behaviour::Prefix(c, cont) => vec![(Action::Chan(c.clone()), (**cont).clone())],
        Behaviour::OmegaPrefix(c, cont) => {
            vec![(Action::WeakSplit(c.clone()), (**cont).clone())]
        }
        Behaviour::Rho(l, cont) => {
            let mut out = Vec::new();
            if let [only] = l.as_slice() {
                out.push((Action::StrongSplit(only.clone()), (**cont).clone()));
            } else {
                for c in l {
                    let rest: Vec<Channel> = l.iter().filter(|d| *d != c).cloned().collect();
                    out.push((
                        Action::StrongSplit(c.clone()),
                        Behaviour::Rho(rest, cont.clone()),
                    ));
                }
            }
            // nested strong splits propagate through the operator
            for (act, der) in actions_rec(cont, env, u)? {
                if matches!(act, Action::StrongSplit(_)) {
                    out.push((act, Behaviour::Rho(l.clone(), Arc::new(der))));
                }
            }
            out
        }
        Behaviour::Delay(t, cont) => {
            if *t == 0.0 {
                actions_rec(cont, env, u)?
            } else {
                Vec::new()
            }
        }
        Behaviour::Sum(l, r) => {
            let mut out = actions_rec(l, env, u)?;
            out.extend(actions_rec(r, env, u)?);
            out
        }
        Behaviour::Const(k) => {
            let body = u.resolve(k, env)?.clone();
            actions_rec(&body, env, u)?
        }
    })
}

/// Supremum of the delays the term admits: how long time may pass before an
/// urgency point. Infinite for idling terms.
pub fn delay_limit(b: &Behaviour, env: &BehaviourEnv) -> Result<f64, BehaviourError> {
    let mut u = Unfolder::new();
    limit_rec(b, env, &mut u)
}

fn limit_rec(b: &Behaviour, env: &BehaviourEnv, u: &mut Unfolder) -> Result<f64, BehaviourError> {
    Ok(match b {
        Behaviour::Nil
        | Behaviour::Prefix(..)
        | Behaviour::OmegaPrefix(..)
        | Behaviour::Rho(..) => f64::INFINITY,
        Behaviour::Delay(t, _) => *t,
        Behaviour::Sum(l, r) => limit_rec(l, env, u)?.min(limit_rec(r, env, u)?),
        Behaviour::Const(k) => {
            let body = u.resolve(k, env)?.clone();
            limit_rec(&body, env, u)?
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BehaviourViolation {
    EmptyRhoSet,
    /// A strong-split set contains a compatible pair.
    CompatiblePairInRho { a: String, b: String },
    NegativeDelay { t: f64 },
    NonFiniteDelay { t: f64 },
    UnboundConstant { name: String },
    /// A constant reaches itself without passing a prefix, split or
    /// positive delay; temporal unfolding would not terminate.
    UnguardedRecursion { name: String },
}

impl fmt::Display for BehaviourViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BehaviourViolation::EmptyRhoSet => write!(f, "strong-split set is empty"),
            BehaviourViolation::CompatiblePairInRho { a, b } => {
                write!(f, "strong-split set contains compatible channels {a} and {b}")
            }
            BehaviourViolation::NegativeDelay { t } => write!(f, "negative delay {t}"),
            BehaviourViolation::NonFiniteDelay { t } => write!(f, "delay {t} is not finite"),
            BehaviourViolation::UnboundConstant { name } => {
                write!(f, "constant {name} is not defined")
            }
            BehaviourViolation::UnguardedRecursion { name } => {
                write!(f, "constant {name} recurses without a guard")
            }
        }
    }
}

/// Checks strong-split sets, delays, constant resolution and guardedness of
/// a term against an environment.
pub fn validate_behaviour(b: &Behaviour, env: &BehaviourEnv, eps: f64) -> Vec<BehaviourViolation> {
    let mut out = Vec::new();
    let mut seen = Vec::new();
    validate_term(b, env, eps, &mut seen, &mut out);
    // guardedness of every constant reachable from b
    for k in &seen {
        if let Some(body) = env.get(*k) {
            let mut path = vec![*k];
            if has_unguarded_cycle(body, env, &mut path) {
                out.push(BehaviourViolation::UnguardedRecursion {
                    name: (*k).to_string(),
                });
            }
        }
    }
    out.dedup_by(|a, b| a == b);
    out
}

/// Validates every definition in an environment.
pub fn validate_env(env: &BehaviourEnv, eps: f64) -> Vec<(String, BehaviourViolation)> {
    let mut out = Vec::new();
    for (k, b) in env {
        for v in validate_behaviour(b, env, eps) {
            out.push((k.clone(), v));
        }
    }
    out
}

fn validate_term<'a>(
    b: &'a Behaviour,
    env: &'a BehaviourEnv,
    eps: f64,
    seen: &mut Vec<&'a str>,
    out: &mut Vec<BehaviourViolation>,
) {
    match b {
        Behaviour::Nil => {}
        Behaviour::Prefix(_, cont) | Behaviour::OmegaPrefix(_, cont) => {
            validate_term(cont, env, eps, seen, out)
        }
        Behaviour::Rho(l, cont) => {
            if l.is_empty() {
                out.push(BehaviourViolation::EmptyRhoSet);
            }
            for (i, a) in l.iter().enumerate() {
                for b in &l[i + 1..] {
                    if channels_compatible(a, b, eps) {
                        out.push(BehaviourViolation::CompatiblePairInRho {
                            a: a.name.to_string(),
                            b: b.name.to_string(),
                        });
                    }
                }
            }
            validate_term(cont, env, eps, seen, out);
        }
        Behaviour::Delay(t, cont) => {
            if *t < 0.0 {
                out.push(BehaviourViolation::NegativeDelay { t: *t });
            } else if !t.is_finite() {
                out.push(BehaviourViolation::NonFiniteDelay { t: *t });
            }
            validate_term(cont, env, eps, seen, out);
        }
        Behaviour::Sum(l, r) => {
            validate_term(l, env, eps, seen, out);
            validate_term(r, env, eps, seen, out);
        }
        Behaviour::Const(k) => {
            if !seen.contains(&k.as_str()) {
                seen.push(k);
                match env.get(k) {
                    Some(body) => validate_term(body, env, eps, seen, out),
                    None => out.push(BehaviourViolation::UnboundConstant { name: k.clone() }),
                }
            }
        }
    }
}

/// Walks unguarded positions (sum branches, zero delays, constant bodies)
/// looking for a constant already on the path.
fn has_unguarded_cycle<'a>(
    b: &'a Behaviour,
    env: &'a BehaviourEnv,
    path: &mut Vec<&'a str>,
) -> bool {
    match b {
        Behaviour::Nil
        | Behaviour::Prefix(..)
        | Behaviour::OmegaPrefix(..)
        | Behaviour::Rho(..) => false,
        Behaviour::Delay(t, cont) => *t == 0.0 && has_unguarded_cycle(cont, env, path),
        Behaviour::Sum(l, r) => {
            has_unguarded_cycle(l, env, path) || has_unguarded_cycle(r, env, path)
        }
        Behaviour::Const(k) => {
            if path.contains(&k.as_str()) {
                return true;
            }
            match env.get(k) {
                Some(body) => {
                    path.push(k);
                    let found = has_unguarded_cycle(body, env, path);
                    path.pop();
                    found
                }
                None => false,
            }
        }
    }
}

#[cfg(test)]
pub mod testkit {
    use super::*;
    use crate::geometry::{surface::unit_square_x, vec3};

    /// Two disjoint square surfaces used as the test alphabet.
    pub fn surf_f() -> Surface {
        unit_square_x(0.5, 0.5)
    }

    pub fn surf_g() -> Surface {
        unit_square_x(-0.5, 0.5)
    }

    pub fn point_surface() -> Surface {
        Surface::point(vec3(0.5, 0.0, 0.0))
    }

    pub fn chan(name: &str, s: Surface) -> Channel {
        let n = match name.strip_prefix('~') {
            Some(base) => Name::co(base),
            None => Name::plain(name),
        };
        Channel::new(n, s)
    }
}

#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    const EPS: f64 = 1e-9;
    const TEPS: f64 = 1e-9;

    fn env() -> BehaviourEnv {
        BehaviourEnv::new()
    }

    #[test]
    fn complement_is_involution() {
        let a = Name::plain("a");
        assert_eq!(a.complement().complement(), a);
        assert_eq!(a.complement(), Name::co("a"));
    }

    #[test]
    fn compatibility_needs_complement_and_overlap() {
        let f = surf_f();
        assert!(channels_compatible(
            &chan("a", f.clone()),
            &chan("~a", f.clone()),
            EPS
        ));
        assert!(!channels_compatible(
            &chan("a", f.clone()),
            &chan("a", f.clone()),
            EPS
        ));
        assert!(!channels_compatible(
            &chan("a", f),
            &chan("~a", surf_g()),
            EPS
        ));
    }

    #[test]
    fn delay_rules() {
        let b = Behaviour::prefix(chan("a", surf_f()), Behaviour::Nil);
        let d = Behaviour::delay(5.0, b.clone());
        let after = delay_behaviour(&d, 3.0, &env(), TEPS).unwrap().unwrap();
        assert_eq!(after, Behaviour::delay(2.0, b.clone()));

        assert_eq!(
            delay_behaviour(&Behaviour::Nil, 7.0, &env(), TEPS).unwrap(),
            Some(Behaviour::Nil)
        );

        let urgent = Behaviour::delay(0.0, Behaviour::Nil);
        assert_eq!(delay_behaviour(&urgent, 1.0, &env(), TEPS).unwrap(), None);

        // prefixes idle
        assert_eq!(
            delay_behaviour(&b, 100.0, &env(), TEPS).unwrap(),
            Some(b.clone())
        );
        // sum delays only when both branches delay
        let s = Behaviour::sum(b.clone(), Behaviour::delay(1.0, Behaviour::Nil));
        assert_eq!(
            delay_behaviour(&s, 1.0, &env(), TEPS).unwrap(),
            Some(Behaviour::sum(b, Behaviour::delay(0.0, Behaviour::Nil)))
        );
        assert_eq!(delay_behaviour(&s, 2.0, &env(), TEPS).unwrap(), None);
    }

    #[test]
    fn time_additivity() {
        let term = Behaviour::sum(
            Behaviour::delay(4.0, Behaviour::Nil),
            Behaviour::prefix(chan("a", surf_f()), Behaviour::Nil),
        );
        let one = delay_behaviour(&term, 1.5, &env(), TEPS).unwrap().unwrap();
        let two = delay_behaviour(&one, 2.0, &env(), TEPS).unwrap().unwrap();
        let direct = delay_behaviour(&term, 3.5, &env(), TEPS).unwrap().unwrap();
        assert_eq!(two, direct);
    }

    #[test]
    fn rho_two_element_derivatives() {
        let c1 = chan("a", surf_f());
        let c2 = chan("b", surf_g());
        let r = Behaviour::rho(vec![c1.clone(), c2.clone()], Behaviour::Nil);
        let acts = behaviour_actions(&r, &env()).unwrap();
        assert_eq!(acts.len(), 2);
        for (act, der) in &acts {
            let Action::StrongSplit(c) = act else {
                panic!("expected strong split")
            };
            let rest = if *c == c1 { c2.clone() } else { c1.clone() };
            assert_eq!(*der, Behaviour::rho(vec![rest], Behaviour::Nil));
        }
    }

    #[test]
    fn nil_has_no_actions() {
        assert!(behaviour_actions(&Behaviour::Nil, &env())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn nested_rho_offers_inner_split() {
        let c1 = chan("a", surf_f());
        let c2 = chan("b", surf_g());
        let inner = Behaviour::rho(vec![c2.clone()], Behaviour::Nil);
        let outer = Behaviour::rho(vec![c1.clone()], inner.clone());
        let acts = behaviour_actions(&outer, &env()).unwrap();
        assert_eq!(acts.len(), 2);
        assert!(acts.contains(&(Action::StrongSplit(c1.clone()), inner.clone())));
        assert!(acts.contains(&(
            Action::StrongSplit(c2),
            Behaviour::rho(vec![c1], Behaviour::Nil)
        )));
    }

    #[test]
    fn zero_delay_passes_actions_through() {
        let b = Behaviour::delay(0.0, Behaviour::prefix(chan("a", surf_f()), Behaviour::Nil));
        let acts = behaviour_actions(&b, &env()).unwrap();
        assert_eq!(acts.len(), 1);
        let pos = Behaviour::delay(0.5, Behaviour::prefix(chan("a", surf_f()), Behaviour::Nil));
        assert!(behaviour_actions(&pos, &env()).unwrap().is_empty());
    }

    #[test]
    fn delay_limits() {
        let c = chan("a", surf_f());
        let s = Behaviour::sum(
            Behaviour::omega(c.clone(), Behaviour::Nil),
            Behaviour::delay(3.0, Behaviour::prefix(chan("~a", surf_f()), Behaviour::Nil)),
        );
        assert_eq!(delay_limit(&s, &env()).unwrap(), 3.0);
        assert_eq!(delay_limit(&Behaviour::Nil, &env()).unwrap(), f64::INFINITY);
        assert_eq!(
            delay_limit(&Behaviour::delay(0.0, Behaviour::Nil), &env()).unwrap(),
            0.0
        );
        // infinite limit admits very long delays
        let idle = Behaviour::rho(vec![c], Behaviour::Nil);
        assert!(delay_behaviour(&idle, 1e6, &env(), TEPS).unwrap().is_some());
    }

    #[test]
    fn constants_unfold_in_all_relations() {
        let mut e = env();
        e.insert(
            "K".into(),
            Behaviour::prefix(chan("a", surf_f()), Behaviour::constant("K")),
        );
        let k = Behaviour::constant("K");
        // the prefix body idles, so the constant keeps its name
        assert_eq!(
            delay_behaviour(&k, 2.0, &e, TEPS).unwrap().unwrap(),
            Behaviour::constant("K")
        );
        // a delaying body unfolds
        let mut e2 = e.clone();
        e2.insert("D".into(), Behaviour::delay(5.0, Behaviour::Nil));
        assert_eq!(
            delay_behaviour(&Behaviour::constant("D"), 2.0, &e2, TEPS)
                .unwrap()
                .unwrap(),
            Behaviour::delay(3.0, Behaviour::Nil)
        );
        let acts = behaviour_actions(&k, &e).unwrap();
        assert_eq!(acts.len(), 1);
        assert_eq!(acts[0].1, Behaviour::constant("K"));
        assert!(matches!(
            behaviour_actions(&Behaviour::constant("missing"), &e),
            Err(BehaviourError::UnboundConstant(_))
        ));
    }

    #[test]
    fn validation_catches_compatible_rho_pair() {
        let f = surf_f();
        let bad = Behaviour::rho(vec![chan("a", f.clone()), chan("~a", f)], Behaviour::Nil);
        let vs = validate_behaviour(&bad, &env(), EPS);
        assert!(vs
            .iter()
            .any(|v| matches!(v, BehaviourViolation::CompatiblePairInRho { .. })));
    }

    #[test]
    fn validation_catches_unguarded_recursion() {
        let mut e = env();
        e.insert("K".into(), Behaviour::constant("K"));
        let vs = validate_behaviour(&Behaviour::constant("K"), &e, EPS);
        assert!(vs
            .iter()
            .any(|v| matches!(v, BehaviourViolation::UnguardedRecursion { .. })));
        // guarded recursion is fine
        let mut e2 = env();
        e2.insert(
            "L".into(),
            Behaviour::prefix(chan("a", surf_f()), Behaviour::constant("L")),
        );
        assert!(validate_behaviour(&Behaviour::constant("L"), &e2, EPS).is_empty());
    }

    #[test]
    fn hexokinase_definitions_validate() {
        let e = hex_env();
        assert!(validate_env(&e, EPS).is_empty());
        let hex = Behaviour::constant("HEX");
        let acts = behaviour_actions(&hex, &e).unwrap();
        assert_eq!(acts.len(), 2, "HEX offers its two channels");
        assert!(acts.iter().all(|(a, _)| matches!(a, Action::Chan(_))));
    }

    fn hex_env() -> BehaviourEnv {
        let x_ha = chan("atp", surf_f());
        let x_hg = chan("glc", surf_g());
        let mut e = env();
        e.insert(
            "HEX".into(),
            Behaviour::sum(
                Behaviour::prefix(x_ha.clone(), Behaviour::constant("HA")),
                Behaviour::prefix(x_hg.clone(), Behaviour::constant("HG")),
            ),
        );
        let c = Behaviour::rho(vec![x_ha.clone(), x_hg.clone()], Behaviour::constant("HEX"));
        e.insert(
            "HA".into(),
            Behaviour::sum(
                Behaviour::omega(x_ha.clone(), Behaviour::constant("HEX")),
                Behaviour::delay(2.0, Behaviour::prefix(x_hg.clone(), c.clone())),
            ),
        );
        e.insert(
            "HG".into(),
            Behaviour::sum(
                Behaviour::omega(x_hg, Behaviour::constant("HEX")),
                Behaviour::delay(2.0, Behaviour::prefix(x_ha, c)),
            ),
        );
        e
    }

    #[test]
    fn rho_interleavings_all_reach_continuation() {
        let channels = vec![
            chan("a", surf_f()),
            chan("b", surf_g()),
            chan("c", point_surface()),
        ];
        let cont = Behaviour::prefix(chan("d", surf_f()), Behaviour::Nil);
        let r = Behaviour::rho(channels.clone(), cont.clone());
        // depth-first over all orders
        fn walk(b: &Behaviour, env: &BehaviourEnv, cont: &Behaviour, depth: usize) -> usize {
            let acts = behaviour_actions(b, env).unwrap();
            if depth == 0 {
                assert_eq!(b, cont);
                return 1;
            }
            assert_eq!(acts.len(), depth);
            acts.iter()
                .map(|(_, der)| walk(der, env, cont, depth - 1))
                .sum()
        }
        let paths = walk(&r, &env(), &cont, channels.len());
        assert_eq!(paths, 6, "3! interleavings");
    }
}
