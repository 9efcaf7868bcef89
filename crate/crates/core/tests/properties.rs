//! Property tests for the closure laws the transition relations promise.

use proptest::prelude::*;

use shape_calculus::behaviour::{delay_behaviour, Behaviour, BehaviourEnv, Channel, Name};
use shape_calculus::geometry::{
    interpenetrates, local_to_global, shapes_congruent, surface::unit_square_x, vec3, BasicShape,
    ConvexPolytope, Shape, Surface, Vec3,
};
use shape_calculus::collision::elastic_response;
use shape_calculus::Tolerances;

fn cube_polytope(side: f64) -> ConvexPolytope {
    let h = side / 2.0;
    let mut v = Vec::new();
    for &x in &[-h, h] {
        for &y in &[-h, h] {
            for &z in &[-h, h] {
                v.push(vec3(x, y, z));
            }
        }
    }
    ConvexPolytope::new(v, 1e-9).unwrap()
}

prop_compose! {
    fn arb_vec3(scale: f64)(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) -> Vec3 {
        vec3(x * scale, y * scale, z * scale)
    }
}

prop_compose! {
    fn arb_cube()(side in 0.4..2.0f64, mass in 0.1..10.0f64,
                  center in arb_vec3(5.0), vel in arb_vec3(2.0)) -> Shape {
        Shape::Basic(BasicShape::new(cube_polytope(side), mass, center, vel, 1e-9).unwrap())
    }
}

proptest! {
    #[test]
    fn translation_is_additive(s in arb_cube(), t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let stepped = s.translate_over_time(t1).unwrap().translate_over_time(t2).unwrap();
        let direct = s.translate_over_time(t1 + t2).unwrap();
        prop_assert!(shapes_congruent(&stepped, &direct, 1e-7));
    }

    #[test]
    fn translation_and_velocity_update_stay_well_formed(
        s in arb_cube(), t in 0.0..3.0f64, w in arb_vec3(3.0)
    ) {
        let eps = 1e-9;
        prop_assert!(s.translate_over_time(t).unwrap().is_well_formed(eps).is_ok());
        let u = s.update_velocity(w);
        prop_assert!(u.is_well_formed(eps).is_ok());
        prop_assert_eq!(u.mass(), s.mass());
        prop_assert!(u.ref_point().approx_eq(s.ref_point(), eps));
        // mass and point set invariant under translation
        let moved = s.translate_over_time(t).unwrap();
        prop_assert_eq!(moved.mass(), s.mass());
        prop_assert!(moved
            .ref_point()
            .approx_eq(s.ref_point() + s.velocity().unwrap() * t, 1e-7));
    }

    #[test]
    fn interpenetration_is_symmetric(a in arb_cube(), b in arb_cube()) {
        prop_assert_eq!(interpenetrates(&a, &b, 1e-9), interpenetrates(&b, &a, 1e-9));
    }

    #[test]
    fn elastic_response_is_an_involution(
        m1 in 0.1..10.0f64, m2 in 0.1..10.0f64,
        v1 in arb_vec3(10.0), v2 in arb_vec3(10.0)
    ) {
        let tol = Tolerances::default();
        let face = unit_square_x(0.0, 0.5);
        let a = Shape::Basic(BasicShape::new(cube_polytope(1.0), m1, vec3(-0.5, 0.0, 0.0), v1, 1e-9).unwrap());
        let b = Shape::Basic(BasicShape::new(cube_polytope(1.0), m2, vec3(0.5, 0.0, 0.0), v2, 1e-9).unwrap());
        let (w1, w2) = elastic_response(&a, &b, &face, &tol).unwrap();
        let (u1, u2) = elastic_response(&a.update_velocity(w1), &b.update_velocity(w2), &face, &tol).unwrap();
        prop_assert!((u1 - v1).norm() <= 1e-9 * (1.0 + v1.norm()));
        prop_assert!((u2 - v2).norm() <= 1e-9 * (1.0 + v2.norm()));
    }

    #[test]
    fn local_global_round_trip(p in arb_vec3(20.0), q in arb_vec3(1.0)) {
        let s = Surface::point(q);
        let there = local_to_global(&s, p);
        let back = local_to_global(&there, -p);
        prop_assert!(back.verts()[0].approx_eq(q, 1e-12));
    }
}

/// Small random behaviour terms over a fixed alphabet.
fn arb_behaviour() -> impl Strategy<Value = Behaviour> {
    let chan_a = Channel::new(Name::plain("a"), unit_square_x(0.5, 0.5));
    let chan_b = Channel::new(Name::co("a"), unit_square_x(-0.5, 0.5));
    let leaf = prop_oneof![Just(Behaviour::Nil)];
    leaf.prop_recursive(4, 64, 3, move |inner| {
        let c1 = chan_a.clone();
        let c2 = chan_b.clone();
        prop_oneof![
            (inner.clone(), 0usize..2).prop_map({
                let cs = [c1.clone(), c2.clone()];
                move |(b, i)| Behaviour::prefix(cs[i].clone(), b)
            }),
            (inner.clone(), 0usize..2).prop_map({
                let cs = [c1.clone(), c2.clone()];
                move |(b, i)| Behaviour::omega(cs[i].clone(), b)
            }),
            (inner.clone(), 0.0..4.0f64).prop_map(|(b, t)| Behaviour::delay(t, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Behaviour::sum(a, b)),
            (inner, 0usize..2).prop_map({
                let cs = [c1, c2];
                move |(b, i)| Behaviour::rho(vec![cs[i].clone()], b)
            }),
        ]
    })
}

proptest! {
    #[test]
    fn behaviour_delay_is_additive(b in arb_behaviour(), t1 in 0.0..2.0f64, t2 in 0.0..2.0f64) {
        let env = BehaviourEnv::new();
        let eps = 0.0;
        let stepped = delay_behaviour(&b, t1, &env, eps)
            .unwrap()
            .and_then(|mid| delay_behaviour(&mid, t2, &env, eps).unwrap());
        let direct = delay_behaviour(&b, t1 + t2, &env, eps).unwrap();
        match (stepped, direct) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                // delays subtract twice on one path; compare within float dust
                prop_assert!(delays_close(&x, &y, 1e-9), "{x} vs {y}");
            }
            (x, y) => prop_assert!(false, "definedness differs: {x:?} vs {y:?}"),
        }
    }
}

fn delays_close(a: &Behaviour, b: &Behaviour, eps: f64) -> bool {
    use Behaviour::*;
    match (a, b) {
        (Nil, Nil) => true,
        (Prefix(c1, a1), Prefix(c2, b1)) | (OmegaPrefix(c1, a1), OmegaPrefix(c2, b1)) => {
            c1 == c2 && delays_close(a1, b1, eps)
        }
        (Rho(l1, a1), Rho(l2, b1)) => l1 == l2 && delays_close(a1, b1, eps),
        (Delay(t1, a1), Delay(t2, b1)) => (t1 - t2).abs() <= eps && delays_close(a1, b1, eps),
        (Sum(a1, a2), Sum(b1, b2)) => delays_close(a1, b1, eps) && delays_close(a2, b2, eps),
        (Const(k1), Const(k2)) => k1 == k2,
        _ => false,
    }
}
