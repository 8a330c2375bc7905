use proptest::prelude::*;
use std::sync::Arc;

use tumorch_core::dynamics::State;
use tumorch_core::experiments::ErrorBundle;
use tumorch_core::grid::{inner_h, laplacian_apply, norm_h, norm_v};
use tumorch_core::io::{read_snapshot, write_snapshot};
use tumorch_core::operators::{dual_norm, resolvent};
use tumorch_core::potential::*;
use tumorch_core::{Field, Grid, PotentialSpec, SpectralPlan};

fn potentials() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.0..=0.25f64).prop_map(|c| PotentialSpec::quartic(c).unwrap()),
        Just(PotentialSpec::ClassicalSplit),
        Just(PotentialSpec::CustomTable(
            TablePotential::new(&[(-1.0, -1.0), (0.0, -1.0), (0.0, 1.0), (1.0, 1.0)], 0.0).unwrap()
        )),
    ]
}

fn fields() -> impl Strategy<Value = Field> {
    (prop::collection::vec(3usize..8, 1..=3), 0.3..3.0f64)
        .prop_flat_map(|(dims, len)| {
            let n: usize = dims.iter().product();
            (Just(dims), Just(len), prop::collection::vec(-5.0..5.0f64, n))
        })
        .prop_map(|(dims, len, v)| {
            let lengths = vec![len; dims.len()];
            let g = Arc::new(Grid::with_lengths(&dims, &lengths).unwrap());
            Field::new(g, v).unwrap()
        })
}

fn field_pair() -> impl Strategy<Value = (Field, Field)> {
    fields().prop_flat_map(|f| {
        let g = f.grid().clone();
        prop::collection::vec(-5.0..5.0f64, g.len()).prop_map(move |v| (f.clone(), Field::new(g.clone(), v).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn resolvent_solves_and_contracts(pot in potentials(), eps in 1e-3..2.0f64, r1 in -20.0..20.0f64, r2 in -20.0..20.0f64) {
        let s1 = resolvent_scalar(&pot, eps, r1).unwrap();
        let s2 = resolvent_scalar(&pot, eps, r2).unwrap();
        prop_assert!(resolvent_residual(&pot, eps, r1, s1) <= 1e-10 * (1.0 + r1.abs()));
        prop_assert!((s1 - s2).abs() <= (r1 - r2).abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn envelope_sits_below_potential(pot in potentials(), eps in 1e-3..2.0f64, r in -10.0..10.0f64) {
        let env = moreau_envelope(&pot, eps, r).unwrap();
        prop_assert!(env >= -1e-14);
        prop_assert!(env <= pot.bhat(r) * (1.0 + 1e-12) + 1e-14);
        let b = yosida_scalar(&pot, eps, r).unwrap();
        prop_assert!(b.abs() <= pot.graph(r).distance(0.0) * (1.0 + 1e-10) + 1e-10);
    }

    #[test]
    fn envelope_derivative_is_yosida(pot in potentials(), eps in 0.01..1.0f64, r in -5.0..5.0f64) {
        let h = 1e-6;
        let fd = (moreau_envelope(&pot, eps, r + h).unwrap() - moreau_envelope(&pot, eps, r - h).unwrap()) / (2.0 * h);
        let b = yosida_scalar(&pot, eps, r).unwrap();
        prop_assert!((fd - b).abs() <= 1e-4 * (1.0 + b.abs()), "fd {} vs {}", fd, b);
    }

    #[test]
    fn norms_are_ordered(f in fields()) {
        let plan = SpectralPlan::new(f.grid().clone());
        let (d, h, v) = (dual_norm(&plan, &f).unwrap(), norm_h(&f), norm_v(&f));
        prop_assert!(d <= h * (1.0 + 1e-12) + 1e-300);
        prop_assert!(h <= v * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn laplacian_self_adjoint_and_dissipative((f, u) in field_pair()) {
        let plan = SpectralPlan::new(f.grid().clone());
        let lf = laplacian_apply(&f).unwrap();
        let lu = laplacian_apply(&u).unwrap();
        let scale = plan.max_eigenvalue().max(1.0) * norm_h(&f).max(1e-300) * norm_h(&u).max(1e-300);
        prop_assert!((inner_h(&lf, &u).unwrap() - inner_h(&f, &lu).unwrap()).abs() <= 1e-11 * scale);
        prop_assert!(inner_h(&lf, &f).unwrap() <= 1e-11 * plan.max_eigenvalue().max(1.0) * norm_h(&f).powi(2));
    }

    #[test]
    fn resolvent_multipliers_in_unit_interval(f in fields(), lambda in 1e-4..10.0f64) {
        let plan = SpectralPlan::new(f.grid().clone());
        let rf = resolvent(&plan, lambda, &f).unwrap();
        prop_assert!(norm_h(&rf) <= norm_h(&f) * (1.0 + 1e-12) + 1e-300);
        // Cosine modes are eigenvectors, so the mass passes through untouched.
        let mass = |g: &Field| g.values().iter().zip(g.grid().weights()).map(|(v, w)| v * w).sum::<f64>();
        prop_assert!((mass(&rf) - mass(&f)).abs() <= 1e-11 * (1.0 + norm_h(&f)) * f.grid().measure().sqrt());
    }

    #[test]
    fn bundle_of_identical_trajectories_is_zero(f in fields(), t in 0.1..2.0f64) {
        let plan = SpectralPlan::new(f.grid().clone());
        let traj: Vec<State> = (0..3)
            .map(|k| State {
                t: t * k as f64,
                mu: f.scale(k as f64),
                phi: f.clone(),
                sigma: f.scale(-0.5),
                xi: f.clone(),
            })
            .collect();
        let b = ErrorBundle::compute(&plan, 0.1, &traj, &traj).unwrap();
        prop_assert_eq!(b, ErrorBundle::default());
    }

    #[test]
    fn snapshots_roundtrip_bitwise(f in fields(), t in -1e3..1e3f64) {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, "phi", t, &f).unwrap();
        let s = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(s.name, "phi");
        prop_assert_eq!(s.time.to_bits(), t.to_bits());
        prop_assert_eq!(s.field.grid().as_ref(), f.grid().as_ref());
        prop_assert!(s.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
