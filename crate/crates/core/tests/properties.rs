//! Randomized invariants of the transforms and the collision operator.

use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use spectral_boltzmann::analytic::{bkw_field, negative_mass};
use spectral_boltzmann::collision::{collision_spectrum, micro_macro_spectrum};
use spectral_boltzmann::schemes::projected_maxwellian;
use spectral_boltzmann::{to_field, to_spectrum, DistributionField, GridSpec, KernelSpec, KernelTable, Spectrum};

fn table() -> &'static KernelTable {
    static T: OnceLock<KernelTable> = OnceLock::new();
    T.get_or_init(|| {
        let g = GridSpec::with_default_lambda(4, 8.0).unwrap();
        KernelTable::build(&g, &KernelSpec::resolved(&g)).unwrap()
    })
}

fn grid() -> GridSpec {
    *table().grid()
}

fn field_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, grid().len())
}

fn field(values: Vec<f64>) -> DistributionField {
    DistributionField::new(grid(), values).unwrap()
}

fn spectrum_values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), grid().len())
}

fn spectrum(values: Vec<(f64, f64)>) -> Spectrum {
    Spectrum::new(
        grid(),
        values.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(),
    )
    .unwrap()
}

fn close(a: &Spectrum, b: &Spectrum, rel: f64) -> bool {
    (a - b).max_abs() <= rel * a.max_abs().max(b.max_abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_roundtrip(v in field_values()) {
        let f = field(v);
        let back = to_field(&to_spectrum(&f)).unwrap();
        let err = f.values().iter().zip(back.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn parseval(v in field_values()) {
        let f = field(v);
        let n2 = grid().len() as f64;
        let physical: f64 = f.values().iter().map(|x| x * x).sum();
        let spectral = to_spectrum(&f).coeff_norm().powi(2) * n2;
        prop_assert!((physical - spectral).abs() < 1e-12 * physical);
    }

    #[test]
    fn transform_is_linear_and_hermitian(a in field_values(), b in field_values(), c in -3.0f64..3.0) {
        let fa = field(a);
        let fb = field(b);
        let combo = field(fa.values().iter().zip(fb.values()).map(|(x, y)| x + c * y).collect());
        let lhs = to_spectrum(&combo);
        let rhs = &to_spectrum(&fa) + &(&to_spectrum(&fb) * c);
        prop_assert!((&lhs - &rhs).max_abs() < 1e-14 * (1.0 + c.abs()));
        prop_assert!(lhs.hermitian_defect() < 1e-15);
    }

    #[test]
    fn collision_is_bilinear(f in spectrum_values(), g in spectrum_values(), h in spectrum_values(), c in -2.0f64..2.0) {
        let t = table();
        let (f, g, h) = (spectrum(f), spectrum(g), spectrum(h));
        let lhs = collision_spectrum(&(&f + &(&g * c)), &h, t).unwrap();
        let rhs = &collision_spectrum(&f, &h, t).unwrap() + &(&collision_spectrum(&g, &h, t).unwrap() * c);
        prop_assert!(close(&lhs, &rhs, 1e-12));
        let lhs = collision_spectrum(&h, &(&f + &(&g * c)), t).unwrap();
        let rhs = &collision_spectrum(&h, &f, t).unwrap() + &(&collision_spectrum(&h, &g, t).unwrap() * c);
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn collision_keeps_real_fields_real(a in field_values(), b in field_values()) {
        let t = table();
        let q = collision_spectrum(&to_spectrum(&field(a)), &to_spectrum(&field(b)), t).unwrap();
        prop_assert!(q.hermitian_defect() <= 1e-13 * q.max_abs());
        prop_assert!(to_field(&q).is_ok());
    }

    #[test]
    fn mass_mode_of_collision_vanishes(f in spectrum_values(), g in spectrum_values()) {
        let q = collision_spectrum(&spectrum(f), &spectrum(g), table()).unwrap();
        prop_assert_eq!(q.mass_mode(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn micro_macro_identity(g in field_values(), scale in 1e-6f64..1.0) {
        let t = table();
        let f0 = bkw_field(&grid(), 0.0).unwrap();
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let g = &to_spectrum(&field(g)) * scale;
        let full = collision_spectrum(&(&m + &g), &(&m + &g), t).unwrap();
        let mm = collision_spectrum(&m, &m, t).unwrap();
        let fused = micro_macro_spectrum(&m, &g, t).unwrap();
        let tol = 1e-12 * full.max_abs().max(mm.max_abs());
        prop_assert!((&(&full - &mm) - &fused).max_abs() <= tol);
    }

    #[test]
    fn negative_mass_is_subadditive(a in field_values(), b in field_values()) {
        let fa = field(a);
        let fb = field(b);
        let sum = field(fa.values().iter().zip(fb.values()).map(|(x, y)| x + y).collect());
        let (na, _) = negative_mass(&fa);
        let (nb, _) = negative_mass(&fb);
        let (ns, _) = negative_mass(&sum);
        prop_assert!(ns <= na + nb + 1e-14);
    }
}
