use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use mkg::bounds::terms::{fast_value, Functional, TermBuilder};
use mkg::bounds::EstimateConstants;
use mkg::config::load_config_str;
use mkg::diagnostics::diagnose;
use mkg::dynamics::{gauge_transform, Integrator};
use mkg::io::{decode_snapshot, encode_snapshot};
use mkg::kahler::{oracle, KahlerFamily, ORACLE_STEP};
use mkg::lattice::NormSnapshot;
use mkg::run::scenario_params;
use mkg::scenario::initial_state;
use mkg::spherical::{kirchhoff_lin, PlaneWave, SphereQuadrature, Superposition};

fn demo() -> mkg::config::RunConfig {
    let text = include_str!("../../../scenarios/interacting_demo.toml").replace("[1024, 1, 1]", "[32, 1, 1]");
    load_config_str(&text).unwrap()
}

fn phi_strategy(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), dim)
        .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
}

fn snapshot_strategy() -> impl Strategy<Value = NormSnapshot> {
    (0.0f64..5.0, prop::collection::vec(0.0f64..2.0, 11)).prop_map(|(t, v)| NormSnapshot::from_values(t, &v))
}

fn constants() -> EstimateConstants {
    EstimateConstants {
        b: vec![0.5, 0.25, 0.1],
        c1: 0.3,
        c2: 1.5,
        c3: 0.4,
        c4: 1.0,
        n_cut: 2,
        j0: 1.0,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_matches_hessian_oracle(
        c4 in 0.0f64..0.5,
        c6 in 0.0f64..0.2,
        dim in 1usize..4,
        seed in any::<u64>(),
    ) {
        let fam = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.0, c4, 0.0, c6], 10.0).unwrap();
        let mut s = seed;
        let phi: Vec<Complex64> = (0..dim).map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64;
            Complex64::from_polar(0.2 + 0.5 * a, 2.0 * PI * a * 7.0)
        }).collect();
        let g = fam.metric(&phi).unwrap();
        let h = oracle::hessian(&fam, &phi, ORACLE_STEP);
        for a in 0..dim {
            for b in 0..dim {
                let d = (g.get(a, b) - h[(a, b)]).norm();
                prop_assert!(d < 1e-6 * (1.0 + h[(a, b)].norm()), "({a},{b}) differs by {d}");
            }
        }
    }

    #[test]
    fn metric_is_hermitian_positive(phi in phi_strategy(3), c4 in 0.0f64..1.0) {
        let fam = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.0, c4], 10.0).unwrap();
        let g = fam.metric(&phi).unwrap();
        for a in 0..3 {
            prop_assert!(g.get(a, a).re > 0.0);
            for b in 0..3 {
                prop_assert!((g.get(a, b) - g.get(b, a).conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn functionals_grow_with_every_norm(s in snapshot_strategy(), i in 0usize..11, bump in 0.0f64..1.0, e0 in 0.0f64..2.0) {
        let k = constants();
        let mut v = s.values();
        v[i] += bump;
        let up = NormSnapshot::from_values(s.t, &v);
        for f in Functional::ALL {
            let (a, b) = (fast_value(f, &s, &k, e0), fast_value(f, &up, &k, e0));
            prop_assert!(b >= a * (1.0 - 1e-12), "{f:?} fell from {a} to {b} when norm {i} grew");
        }
    }

    #[test]
    fn expanded_terms_match_fast_path(s in snapshot_strategy(), e0 in 0.0f64..2.0) {
        let k = constants();
        let tb = TermBuilder::new(&k);
        let x = tb.values(&s, &k, e0);
        for f in Functional::ALL {
            let (a, b) = (tb.build(f).eval(&x), fast_value(f, &s, &k, e0));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300), "{f:?}: {a} vs {b}");
        }
    }

    #[test]
    fn kirchhoff_lin_is_linear(
        k1 in prop::array::uniform3(-1.5f64..1.5),
        k2 in prop::array::uniform3(-1.5f64..1.5),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let q = SphereQuadrature::new(6);
        let (u, v) = (PlaneWave::new(k1), PlaneWave::new(k2));
        let sum = Superposition(vec![(a, Box::new(u)), (b, Box::new(v))]);
        let p = [0.4, 0.1, -0.3, 0.2];
        let lhs = kirchhoff_lin(&sum, p, 0.7, &q);
        let rhs = a * kirchhoff_lin(&u, p, 0.7, &q) + b * kirchhoff_lin(&v, p, 0.7, &q);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gauge_transform_preserves_observables(theta in prop::collection::vec(-PI..PI, 64)) {
        let cfg = demo();
        let (lat, model) = (&cfg.lattice, &cfg.model);
        let mut st = initial_state(cfg.scenario(), &scenario_params(&cfg), lat, model).unwrap();
        let mut it = Integrator::new(lat, model, cfg.dt);
        for _ in 0..20 {
            it.advance(&mut st).unwrap();
        }
        let gt = gauge_transform(&st, lat, model, &theta).unwrap();
        let a = diagnose(&st, lat, model, cfg.mass_m, cfg.flat_c1).unwrap();
        let b = diagnose(&gt, lat, model, cfg.mass_m, cfg.flat_c1).unwrap();
        for (x, y) in [(a.energy_E0, b.energy_E0), (a.flat_J, b.flat_J), (a.norm_snapshot.l2_Dphi, b.norm_snapshot.l2_Dphi)] {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs(), "{x} vs {y}");
        }
        for (p, q) in st.phi.iter().zip(&gt.phi) {
            prop_assert!((p.norm() - q.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact(steps in 0usize..5, t in 0.0f64..10.0) {
        let cfg = demo();
        let (lat, model) = (&cfg.lattice, &cfg.model);
        let mut st = initial_state(cfg.scenario(), &scenario_params(&cfg), lat, model).unwrap();
        let mut it = Integrator::new(lat, model, cfg.dt);
        for _ in 0..steps {
            it.advance(&mut st).unwrap();
        }
        st.t = t;
        let back = decode_snapshot(&encode_snapshot(&st, lat)).unwrap();
        prop_assert_eq!(back.dims, lat.dims);
        prop_assert_eq!(back.state, st);
    }
}
