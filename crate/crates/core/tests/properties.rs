//! Property tests over randomly generated polytopes, LPs and invariance problems.

use invkit::invariance::{build_stacked, max_scaling, Certification};
use invkit::lp::{solve, LinearProgram, LpStatus};
use invkit::oracle::{exact_alpha_star, random_box_problem, random_direction};
use invkit::polyhedra::{convex_hull_2d, Polyhedron, CONTAINMENT_TOL};
use invkit::setrep::{InvariantSetRep, Membership};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_polytope<R: Rng>(n: usize, rng: &mut R) -> Polyhedron {
    let lo: Vec<f64> = (0..n).map(|_| -rng.random_range(0.5..2.0)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let b = Polyhedron::from_bounds(&lo, &hi).unwrap();
    let mut rows: Vec<Vec<f64>> = b.matrix().row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rhs: Vec<f64> = b.rhs().iter().copied().collect();
    for _ in 0..rng.random_range(0..4) {
        rows.push(random_direction(n, rng).iter().copied().collect());
        rhs.push(rng.random_range(0.3..1.5));
    }
    Polyhedron::from_rows(&rows, rhs).unwrap()
}

fn support(p: &Polyhedron, dir: &DVector<f64>) -> f64 {
    p.support(dir).unwrap().expect("bounded").0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn containment_is_transitive(seed in any::<u64>(), n in 1usize..4, s in 1.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(n, &mut rng);
        let q = random_polytope(n, &mut rng);
        let a = p.intersect(&q).unwrap();
        let c = p.scale(s).unwrap();
        let ab = p.contains(&a, CONTAINMENT_TOL).unwrap().holds();
        let bc = c.contains(&p, CONTAINMENT_TOL).unwrap().holds();
        prop_assert!(ab && bc);
        prop_assert!(c.contains(&a, CONTAINMENT_TOL).unwrap().holds());
    }

    #[test]
    fn minkowski_sum_matches_vertex_sums(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(2, &mut rng);
        let q = random_polytope(2, &mut rng);
        let sum = p.minkowski_sum(&q).unwrap();
        let (vp, vq) = (p.enumerate_vertices().unwrap(), q.enumerate_vertices().unwrap());
        let pts: Vec<DVector<f64>> = vp.vertices.iter().flat_map(|a| vq.vertices.iter().map(move |b| a + b)).collect();
        let hull = Polyhedron::hull_2d(&pts).unwrap();
        prop_assert_eq!(convex_hull_2d(&pts).len(), sum.enumerate_vertices().unwrap().len());
        for _ in 0..8 {
            let d = random_direction(2, &mut rng);
            let (s1, s2) = (support(&sum, &d), support(&hull, &d));
            prop_assert!((s1 - s2).abs() <= 1e-7 * (1.0 + s1.abs()), "{} vs {}", s1, s2);
        }
    }

    #[test]
    fn scaling_round_trips(seed in any::<u64>(), n in 1usize..5, s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(n, &mut rng);
        let back = p.scale(s).unwrap().scale(1.0 / s).unwrap();
        prop_assert_eq!(back.matrix(), p.matrix());
        for (a, b) in back.rhs().iter().zip(p.rhs().iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        let d = random_direction(n, &mut rng);
        prop_assert!((support(&p.scale(s).unwrap(), &d) - s * support(&p, &d)).abs() <= 1e-8 * s);
    }

    #[test]
    fn lp_solves_are_bitwise_deterministic(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(n, &mut rng);
        let mut lp = LinearProgram::new(n);
        for (row, &d) in p.matrix().row_iter().zip(p.rhs().iter()) {
            lp.add_le(row.iter().copied().enumerate(), d);
        }
        for j in 0..n {
            lp.set_objective(j, rng.random_range(-1.0..1.0));
        }
        let (a, b) = (solve(&lp, 1e-9), solve(&lp, 1e-9));
        prop_assert_eq!(a.status, LpStatus::Optimal);
        prop_assert_eq!(a.iterations, b.iterations);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.solution), bits(&b.solution));
    }

    #[test]
    fn lp_duality_holds(seed in any::<u64>(), n in 1usize..6) {
        // primal: min cᵀx, Cx ≤ d;  dual: min dᵀy, Cᵀy = −c, y ≥ 0, with value −p*
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(n, &mut rng);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut primal = LinearProgram::new(n);
        for (row, &d) in p.matrix().row_iter().zip(p.rhs().iter()) {
            primal.add_le(row.iter().copied().enumerate(), d);
        }
        for (j, &cj) in c.iter().enumerate() {
            primal.set_objective(j, cj);
        }
        let rows = p.num_rows();
        let mut dual = LinearProgram::new(rows);
        for i in 0..rows {
            dual.set_nonneg(i);
            dual.set_objective(i, p.rhs()[i]);
        }
        for (j, &cj) in c.iter().enumerate() {
            dual.add_eq((0..rows).map(|i| (i, p.matrix()[(i, j)])), -cj);
        }
        let (po, dout) = (solve(&primal, 1e-9), solve(&dual, 1e-9));
        prop_assert!(po.is_optimal() && dout.is_optimal());
        // weak duality at every primal vertex, strong duality at the optimum
        for v in p.enumerate_vertices().unwrap().vertices {
            let cv: f64 = c.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            prop_assert!(cv >= -dout.objective_value - 1e-7);
        }
        prop_assert!((po.objective_value + dout.objective_value).abs() <= 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn certificates_are_sound_and_conservative(seed in any::<u64>(), n in 1usize..4, horizon in 1usize..4) {
        let problem = random_box_problem(n, horizon, seed).unwrap();
        let Certification::Certified(cert) = max_scaling(&problem).unwrap() else {
            return Ok(());
        };
        let stacked = build_stacked(&problem).unwrap();
        prop_assert!(cert.check(&stacked, problem.omega.rhs()).within(1e-6));
        let star = exact_alpha_star(&problem).unwrap();
        prop_assert!(cert.alpha <= star.alpha * (1.0 + 1e-6));
    }

    #[test]
    fn invariant_set_rays_are_homogeneous_and_convex(seed in any::<u64>(), horizon in 1usize..4) {
        let problem = random_box_problem(2, horizon, seed).unwrap();
        let alpha = match max_scaling(&problem).unwrap() {
            Certification::Certified(c) if c.alpha.is_finite() => c.alpha,
            _ => return Ok(()),
        };
        let rep = InvariantSetRep::new(&problem, alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (v1, v2) = (random_direction(2, &mut rng), random_direction(2, &mut rng));
        let (r1, r2) = (rep.ray_max(&v1).unwrap().r, rep.ray_max(&v2).unwrap().r);
        let t = rng.random_range(0.2..5.0);
        let rt = rep.ray_max(&(&v1 * t)).unwrap().r;
        prop_assert!((rt * t - r1).abs() <= 1e-6 * r1.max(1.0));
        let mid = (&v1 * r1 + &v2 * r2) * 0.5 * (1.0 - 1e-6);
        prop_assert!(rep.member(&mid).unwrap().is_inside());
        prop_assert!(!rep.member(&(&v1 * (r1 * (1.0 + 1e-4)))).unwrap().is_inside());
    }

    #[test]
    fn feedback_keeps_the_state_inside(seed in any::<u64>(), horizon in 1usize..4) {
        let problem = random_box_problem(2, horizon, seed).unwrap();
        let alpha = match max_scaling(&problem).unwrap() {
            Certification::Certified(c) if c.alpha.is_finite() => c.alpha,
            _ => return Ok(()),
        };
        let rep = InvariantSetRep::new(&problem, alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let v = random_direction(2, &mut rng);
        let hit = rep.ray_max(&v).unwrap();
        let mut x = &v * (hit.r * rng.random_range(0.1..0.999));
        for _ in 0..5 {
            let Membership::Inside(cert) = rep.member(&x).unwrap() else {
                return Err(TestCaseError::fail(format!("left the set at {x}")));
            };
            let (u, next) = rep.feedback(&cert);
            prop_assert!(problem.input_set.contains_point(&u, 1e-6));
            x = next;
        }
    }
}
