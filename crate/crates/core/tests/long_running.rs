//! Slow checks, run with `cargo test --release -- --ignored`.

use spectral_boltzmann::analytic::{bkw_field, negative_mass};
use spectral_boltzmann::schemes::{projected_maxwellian, run};
use spectral_boltzmann::{
    to_field, to_spectrum, GridSpec, IntegratorSpec, KernelSpec, KernelTable, SchemeState, Variant,
};

fn classical_negative_mass(n: usize, t_end: f64) -> f64 {
    let g = GridSpec::with_default_lambda(n, 8.0).unwrap();
    let t = KernelTable::build(&g, &KernelSpec::resolved(&g)).unwrap();
    let f0 = bkw_field(&g, 0.0).unwrap();
    let (_, m) = projected_maxwellian(&f0).unwrap();
    let state = SchemeState::new(Variant::Classical, &to_spectrum(&f0), &m, &t).unwrap();
    let spec = IntegratorSpec::new(0.01, t_end).unwrap();
    let last = run(state, &spec, &t, u64::MAX, |_, _, _| Ok(())).unwrap();
    negative_mass(&to_field(&last.reconstructed()).unwrap()).0
}

#[test]
#[ignore = "N = 32 takes several minutes"]
fn negative_mass_decreases_through_n32() {
    let masses: Vec<f64> = [8, 16, 32]
        .into_iter()
        .map(|n| classical_negative_mass(n, 5.0))
        .collect();
    assert!(masses.windows(2).all(|w| w[1] < w[0]), "{masses:?}");
}
