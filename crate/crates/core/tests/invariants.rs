//! Property tests for the structural invariants: they quantify over random
//! connected spaces and random data rather than hand-picked instances.

use entrolab_core::calculus::{carre_du_champ, gamma, integrate, relative_entropy};
use entrolab_core::density::Density;
use entrolab_core::duality::{dual_objective, q_apply, Orientation};
use entrolab_core::schrodinger::{ipfp_solve, SolverOptions};
use entrolab_core::space::Space;
use ndarray::Array1;
use proptest::prelude::*;

/// Random connected weighted graph: chain backbone plus extra edges, with
/// conductances and weights of moderate dynamic range.
fn space_strategy() -> impl Strategy<Value = Space> {
    (3usize..10)
        .prop_flat_map(|n| {
            let chain = prop::collection::vec(0.5f64..2.0, n - 1);
            let extras = prop::collection::vec((0usize..n, 0usize..n, 0.5f64..2.0), 0..4);
            let weights = prop::collection::vec(0.5f64..2.0, n);
            (Just(n), chain, extras, weights)
        })
        .prop_map(|(n, chain, extras, weights)| {
            let mut edges: Vec<(usize, usize, f64)> = chain
                .into_iter()
                .enumerate()
                .map(|(i, c)| (i, i + 1, c))
                .collect();
            for (i, j, c) in extras {
                if i != j {
                    edges.push((i.min(j), i.max(j), c));
                }
            }
            Space::graph(&edges, &weights, None).expect("chain keeps it connected")
        })
}

fn vector_strategy(n: usize) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(-2.0f64..2.0, n).prop_map(Array1::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heat_semigroup_mass_and_max_principle(
        space in space_strategy(),
        raw in prop::collection::vec(-1.0f64..1.0, 16),
        s in 0.01f64..1.0,
        t in 0.01f64..1.0,
    ) {
        let n = space.len();
        let f = Array1::from_iter(raw.into_iter().cycle().take(n));
        let one_hop = space.heat_apply(s + t, &f).unwrap();
        let two_hops = space.heat_apply(s, &space.heat_apply(t, &f).unwrap()).unwrap();
        for (a, b) in one_hop.iter().zip(two_hops.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let mass_before = integrate(&space, &f, None);
        let mass_after = integrate(&space, &one_hop, None);
        prop_assert!((mass_before - mass_after).abs() < 1e-12);
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &v in one_hop.iter() {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn kernel_positive_on_connected_spaces(space in space_strategy(), t in 0.05f64..2.0) {
        let kernel = space.heat_kernel(t).unwrap();
        for &v in kernel.iter() {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn integration_by_parts_exact(space in space_strategy(), seed in 0u64..1000) {
        let n = space.len();
        let u = Array1::from_iter((0..n).map(|i| (((seed + i as u64) % 17) as f64) / 8.5 - 1.0));
        let v = Array1::from_iter((0..n).map(|i| (((seed * 3 + i as u64) % 13) as f64) / 6.5 - 1.0));
        let lhs = integrate(&space, &carre_du_champ(&space, &u, &v), None);
        let rhs = -integrate(&space, &(&u * &space.generator_apply(&v)), None);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn gamma_cauchy_schwarz_pointwise(space in space_strategy(), seed in 0u64..1000) {
        let n = space.len();
        let u = Array1::from_iter((0..n).map(|i| (((seed + 7 * i as u64) % 23) as f64) / 11.0 - 1.0));
        let v = Array1::from_iter((0..n).map(|i| (((seed * 5 + i as u64) % 19) as f64) / 9.0 - 1.0));
        let guv = carre_du_champ(&space, &u, &v);
        let gu = gamma(&space, &u);
        let gv = gamma(&space, &v);
        for i in 0..n {
            prop_assert!(guv[i] * guv[i] <= gu[i] * gv[i] + 1e-12);
            prop_assert!(gu[i] >= 0.0);
        }
    }

    #[test]
    fn entropy_nonnegative_against_probability(
        p_raw in prop::collection::vec(0.0f64..1.0, 6),
        q_raw in prop::collection::vec(0.05f64..1.0, 6),
    ) {
        let p_sum: f64 = p_raw.iter().sum();
        prop_assume!(p_sum > 1e-6);
        let q_sum: f64 = q_raw.iter().sum();
        let p = Array1::from_iter(p_raw.iter().map(|v| v / p_sum));
        let q = Array1::from_iter(q_raw.iter().map(|v| v / q_sum));
        prop_assert!(relative_entropy(&p, &q) >= -1e-13);
    }

    #[test]
    fn q_monotone_and_cash_invariant(
        space in space_strategy(),
        seed in 0u64..1000,
        eps in 0.2f64..2.0,
        c in -2.0f64..2.0,
    ) {
        let n = space.len();
        let u = Array1::from_iter((0..n).map(|i| (((seed + i as u64) % 11) as f64) / 5.0 - 1.0));
        let bump = Array1::from_iter((0..n).map(|i| (((seed * 7 + i as u64) % 9) as f64) / 9.0));
        let qu = q_apply(&space, &u, eps, 1.0).unwrap();
        let q_bumped = q_apply(&space, &(&u + &bump), eps, 1.0).unwrap();
        for (a, b) in qu.iter().zip(q_bumped.iter()) {
            prop_assert!(*a <= b + 1e-11);
        }
        let q_shifted = q_apply(&space, &u.mapv(|v| v + c), eps, 1.0).unwrap();
        for (a, b) in qu.iter().zip(q_shifted.iter()) {
            prop_assert!((b - a - c).abs() < 1e-10);
        }
    }
}

proptest! {
    // IPFP runs inside, so fewer cases.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dual_objective_bounded_by_cost(
        space in space_strategy(),
        raw0 in prop::collection::vec(0.3f64..2.0, 16),
        raw1 in prop::collection::vec(0.3f64..2.0, 16),
        u_raw in prop::collection::vec(-3.0f64..3.0, 16),
        eps in 0.5f64..1.5,
    ) {
        let n = space.len();
        let rho0 = Density::normalized(&space, Array1::from_iter(raw0.into_iter().cycle().take(n))).unwrap();
        let rho1 = Density::normalized(&space, Array1::from_iter(raw1.into_iter().cycle().take(n))).unwrap();
        let opts = SolverOptions { tol: 1e-12, max_iter: 200_000 };
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &opts).unwrap();
        let u = Array1::from_iter(u_raw.into_iter().cycle().take(n));
        for orientation in [Orientation::Forward, Orientation::Backward] {
            let obj = dual_objective(&space, &u, &rho0, &rho1, eps, orientation).unwrap();
            prop_assert!(obj <= sol.cost + 1e-9, "objective {obj} above cost {}", sol.cost);
        }
    }

    #[test]
    fn interpolation_mass_exact_on_random_graphs(
        space in space_strategy(),
        raw0 in prop::collection::vec(0.3f64..2.0, 16),
        raw1 in prop::collection::vec(0.3f64..2.0, 16),
        eps in 0.5f64..1.5,
    ) {
        let n = space.len();
        let rho0 = Density::normalized(&space, Array1::from_iter(raw0.into_iter().cycle().take(n))).unwrap();
        let rho1 = Density::normalized(&space, Array1::from_iter(raw1.into_iter().cycle().take(n))).unwrap();
        let opts = SolverOptions { tol: 1e-12, max_iter: 200_000 };
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &opts).unwrap();
        let path = entrolab_core::interpolation::interpolate(&space, &sol, 8).unwrap();
        for rho in &path.rho {
            let mass: f64 = rho.masses(&space).sum();
            prop_assert!((mass - 1.0).abs() < 1e-12, "mass {mass}");
        }
    }
}
