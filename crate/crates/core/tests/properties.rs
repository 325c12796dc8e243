use dcl_core::flow::{dispersive_rhs, semigroup_apply, semigroup_multiplier};
use dcl_core::invariants::energy_e;
use dcl_core::manifold::{clifford_chart, clifford_embed, CLIFFORD_RADIUS};
use dcl_core::presets::random_smooth;
use dcl_core::{ClosedCurve, Manifold};
use ndarray::Array2;
use proptest::prelude::*;

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (r > 1e-3).then(|| [v[0] / r, v[1] / r, v[2] / r])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn coord() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

/// A point on the target together with a second point in its tubular neighbourhood.
fn base_point(m: Manifold) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    match m {
        Manifold::Sphere2 => ([coord(), coord(), coord()], 0.6..1.4f64)
            .prop_filter_map("direction", |(v, r)| unit(v).map(|u| (u.to_vec(), u.iter().map(|c| c * r).collect())))
            .boxed(),
        Manifold::CliffordTorus2 => (0.0..1.0f64, 0.0..1.0f64, 0.8..1.2f64, 0.8..1.2f64)
            .prop_map(|(s, t, r1, r2)| {
                let p = clifford_embed(&[s, t]).to_vec();
                let q = vec![p[0] * r1, p[1] * r1, p[2] * r2, p[3] * r2];
                (p, q)
            })
            .boxed(),
        Manifold::ChartFlatTorus2 => (coord(), coord()).prop_map(|(s, t)| (vec![s, t], vec![s, t])).boxed(),
    }
}

fn manifold() -> impl Strategy<Value = Manifold> {
    prop_oneof![Just(Manifold::Sphere2), Just(Manifold::CliffordTorus2), Just(Manifold::ChartFlatTorus2)]
}

fn case() -> impl Strategy<Value = (Manifold, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    manifold().prop_flat_map(|m| {
        let d = m.ambient_dim();
        (Just(m), base_point(m), prop::collection::vec(coord(), d), prop::collection::vec(coord(), d))
            .prop_map(|(m, (y, q), x, z)| (m, y, q, x, z))
    })
}

proptest! {
    #[test]
    fn projection_lands_on_the_target_and_is_idempotent((m, _y, q, _x, _z) in case()) {
        let p = m.project(&q).unwrap();
        prop_assert!(m.distance(&p) < 1e-12);
        prop_assert!(max_abs_diff(&m.project(&p).unwrap(), &p) < 1e-14);
    }

    #[test]
    fn tangent_and_normal_projectors_split_the_ambient_space((m, y, _q, x, z) in case()) {
        let px = m.tangent_project(&y, &x).unwrap();
        let nx = m.normal_project(&y, &x).unwrap();
        let sum: Vec<f64> = px.iter().zip(&nx).map(|(a, b)| a + b).collect();
        prop_assert!(max_abs_diff(&sum, &x) < 1e-14);
        prop_assert!(max_abs_diff(&m.tangent_project(&y, &px).unwrap(), &px) < 1e-14);
        prop_assert!(dot(&px, &nx).abs() < 1e-14);
        // Self-adjoint.
        let pz = m.tangent_project(&y, &z).unwrap();
        prop_assert!((dot(&px, &z) - dot(&x, &pz)).abs() < 1e-14);
    }

    #[test]
    fn complex_structure_is_an_orthogonal_square_root_of_minus_one((m, y, _q, x, z) in case()) {
        let px = m.tangent_project(&y, &x).unwrap();
        let pz = m.tangent_project(&y, &z).unwrap();
        let jx = m.complex_structure(&y, &px).unwrap();
        let jz = m.complex_structure(&y, &pz).unwrap();
        let jjx = m.complex_structure(&y, &jx).unwrap();
        prop_assert!(max_abs_diff(&jjx, &px.iter().map(|v| -v).collect::<Vec<_>>()) < 1e-14);
        prop_assert!((dot(&jx, &jz) - dot(&px, &pz)).abs() < 1e-14);
        prop_assert!(dot(&jx, &px).abs() < 1e-14);
        prop_assert!(max_abs_diff(&m.tangent_project(&y, &jx).unwrap(), &jx) < 1e-14);
    }

    #[test]
    fn second_fundamental_form_is_symmetric_and_normal((m, y, _q, x, z) in case()) {
        let px = m.tangent_project(&y, &x).unwrap();
        let pz = m.tangent_project(&y, &z).unwrap();
        let a = m.second_fundamental_form(&y, &px, &pz).unwrap();
        let b = m.second_fundamental_form(&y, &pz, &px).unwrap();
        prop_assert!(max_abs_diff(&a, &b) < 1e-13);
        let tangential = m.tangent_project(&y, &a).unwrap();
        prop_assert!(tangential.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn clifford_chart_inverts_the_embedding(s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let p = clifford_embed(&[s, t]);
        prop_assert!((p[0].hypot(p[1]) - CLIFFORD_RADIUS).abs() < 1e-15);
        let c = clifford_chart(&p);
        let wrap = |d: f64| (d - d.round()).abs();
        prop_assert!(wrap(c[0] - s) < 1e-12 && wrap(c[1] - t) < 1e-12);
    }

    #[test]
    fn semigroup_composes(eps in 1e-4..1e-1f64, s in 0.0..1e-2f64, t in 0.0..1e-2f64, seed in 0u64..50) {
        let c = random_smooth(32, Manifold::Sphere2, seed, 0.5).unwrap();
        let f = c.points().to_owned();
        let two = semigroup_apply(semigroup_apply(f.view(), eps, s).unwrap().view(), eps, t).unwrap();
        let one = semigroup_apply(f.view(), eps, s + t).unwrap();
        prop_assert!((&two - &one).iter().all(|v| v.abs() < 1e-13));
        for k in 0..16 {
            let w = semigroup_multiplier(eps, t, k);
            prop_assert!((0.0..=1.0).contains(&w));
            prop_assert_eq!(w, semigroup_multiplier(eps, t, -k));
            prop_assert!(semigroup_multiplier(eps, t, k + 1) <= w);
        }
    }

    #[test]
    fn right_hand_side_commutes_with_grid_shifts(seed in 0u64..100, shift in 1usize..64) {
        let c = random_smooth(64, Manifold::Sphere2, seed, 1.0).unwrap();
        let f = dispersive_rhs(&c, 1.0, 0.5).unwrap();
        let g = dispersive_rhs(&c.shifted(shift), 1.0, 0.5).unwrap();
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..64 {
            let r = (i + shift) % 64;
            for k in 0..3 {
                prop_assert!((g[[i, k]] - f[[r, k]]).abs() < 1e-11 * scale);
            }
        }
    }

    #[test]
    fn energy_is_invariant_under_rotations(seed in 0u64..100, angle in 0.0..6.3f64, axis in [coord(), coord(), coord()]) {
        let Some(k) = unit(axis) else { return Ok(()) };
        let c = random_smooth(32, Manifold::Sphere2, seed, 0.5).unwrap();
        let (s, co) = angle.sin_cos();
        // Rodrigues' formula.
        let rotate = |v: &[f64]| {
            let kxv = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
            let kv = dot(&k, v);
            [0, 1, 2].map(|i| v[i] * co + kxv[i] * s + k[i] * kv * (1.0 - co))
        };
        let pts = Array2::from_shape_fn((32, 3), |(i, j)| rotate(c.point(i))[j]);
        let r = ClosedCurve::new(pts, Manifold::Sphere2).unwrap();
        let (e0, e1) = (energy_e(&c, 1.0).unwrap(), energy_e(&r, 1.0).unwrap());
        prop_assert!((e0 - e1).abs() <= 1e-9 * e0.abs().max(1.0), "{} vs {}", e0, e1);
    }
}
