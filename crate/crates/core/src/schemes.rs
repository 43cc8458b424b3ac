//! Classical and steady-state preserving right-hand sides, and a fixed-step
//! RK4 integrator for both.
//!
//! The classical scheme evolves `f` under `Q(f, f)`. The steady-state
//! preserving scheme writes `f = M + g` with a fixed projected Maxwellian `M`
//! and evolves `g` under `Q(M, g) + Q(g, M) + Q(g, g)`, so `g = 0` is an
//! exact fixed point. The two right-hand sides differ by the constant
//! spectrum `Q(M, M)`.

use crate::analytic::{maxwellian_field, moments, Moments};
use crate::collision::{collision_spectrum_real, micro_macro_spectrum_real};
use crate::error::{Error, Result};
use crate::grid::{to_spectrum, DistributionField, Spectrum};
use crate::kernel::KernelTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Classical,
    SteadyState,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Classical => "classical",
            Variant::SteadyState => "steady_state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParam(format!("dt must be > 0, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidParam(format!("t_end must be >= 0, got {t_end}")));
        }
        if t_end > 0.0 && dt > t_end {
            return Err(Error::InvalidParam(format!("dt = {dt} exceeds t_end = {t_end}")));
        }
        Ok(Self {
            dt,
            t_end,
            method: Method::Rk4,
        })
    }

    /// `ceil(t_end / dt)`, ignoring a relative excess of 1e-9 left over by
    /// decimal step sizes.
    pub fn step_count(&self) -> u64 {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as u64
        } else {
            ratio.ceil() as u64
        }
    }
}

/// Integration state of either scheme.
#[derive(Debug, Clone)]
pub struct SchemeState {
    variant: Variant,
    /// `f` for the classical scheme, `g` for the steady-state scheme.
    unknown: Spectrum,
    m_hat: Spectrum,
    const_term: Spectrum,
    time: f64,
    step: u64,
}

impl SchemeState {
    /// State at `t = 0` from the spectrum of the initial datum and the fixed
    /// projected Maxwellian.
    pub fn new(variant: Variant, f_hat: &Spectrum, m_hat: &Spectrum, table: &KernelTable) -> Result<Self> {
        f_hat.grid().check_same(m_hat.grid(), "scheme state")?;
        let const_term = collision_spectrum_real(m_hat, table)?;
        let unknown = match variant {
            Variant::Classical => f_hat.clone(),
            Variant::SteadyState => f_hat - m_hat,
        };
        Ok(Self {
            variant,
            unknown,
            m_hat: m_hat.clone(),
            const_term,
            time: 0.0,
            step: 0,
        })
    }

    /// Steady-state state with a prescribed micro part.
    pub fn steady_state_from_micro(g_hat: Spectrum, m_hat: &Spectrum, table: &KernelTable) -> Result<Self> {
        g_hat.grid().check_same(m_hat.grid(), "scheme state")?;
        Ok(Self {
            variant: Variant::SteadyState,
            unknown: g_hat,
            m_hat: m_hat.clone(),
            const_term: collision_spectrum_real(m_hat, table)?,
            time: 0.0,
            step: 0,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// The evolved unknown, `f` or `g` depending on the variant.
    pub fn unknown(&self) -> &Spectrum {
        &self.unknown
    }

    pub fn m_hat(&self) -> &Spectrum {
        &self.m_hat
    }

    /// `Q(M, M)`; carried for diagnostics only.
    pub fn const_term(&self) -> &Spectrum {
        &self.const_term
    }

    /// `f`, rebuilt as `M + g` for the steady-state scheme.
    pub fn reconstructed(&self) -> Spectrum {
        match self.variant {
            Variant::Classical => self.unknown.clone(),
            Variant::SteadyState => &self.m_hat + &self.unknown,
        }
    }

    fn rhs(&self, y: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
        match self.variant {
            Variant::Classical => rhs_classical(y, table),
            Variant::SteadyState => rhs_steady_state(y, &self.m_hat, table),
        }
    }
}

/// The projected equilibrium of an initial datum: the Maxwellian with the
/// datum's discrete moments, sampled and transformed.
pub fn projected_maxwellian(initial: &DistributionField) -> Result<(Moments, Spectrum)> {
    let m = moments(initial)?;
    let field = maxwellian_field(initial.grid(), &m)?;
    Ok((m, to_spectrum(&field)))
}

/// `d f / dt = Q(f, f)`. The spectrum must represent a real field; only
/// half the modes are summed and the output is Hermitian by construction.
pub fn rhs_classical(f_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    collision_spectrum_real(f_hat, table)
}

/// `d g / dt = Q(M, g) + Q(g, M) + Q(g, g)`, same convention as
/// [`rhs_classical`].
pub fn rhs_steady_state(g_hat: &Spectrum, m_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    micro_macro_spectrum_real(m_hat, g_hat, table)
}

/// One RK4 step.
pub fn step(state: &SchemeState, spec: &IntegratorSpec, table: &KernelTable) -> Result<SchemeState> {
    let Method::Rk4 = spec.method;
    let dt = spec.dt;
    let y = &state.unknown;
    let k1 = state.rhs(y, table)?;
    let k2 = state.rhs(&y.axpy(0.5 * dt, &k1), table)?;
    let k3 = state.rhs(&y.axpy(0.5 * dt, &k2), table)?;
    let k4 = state.rhs(&y.axpy(dt, &k3), table)?;
    let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    let next = y.axpy(dt / 6.0, &incr);

    let step = state.step + 1;
    if !next.is_finite() {
        return Err(Error::BlowUp { step });
    }
    Ok(SchemeState {
        variant: state.variant,
        unknown: next,
        m_hat: state.m_hat.clone(),
        const_term: state.const_term.clone(),
        time: step as f64 * dt,
        step,
    })
}

/// Integrates to `spec.t_end`, calling `observer(step, time, f)` at step 0,
/// every `stride` steps, and never for other steps. An observer error stops
/// the run.
pub fn run<O>(
    state0: SchemeState,
    spec: &IntegratorSpec,
    table: &KernelTable,
    stride: u64,
    mut observer: O,
) -> Result<SchemeState>
where
    O: FnMut(u64, f64, &Spectrum) -> Result<()>,
{
    if stride == 0 {
        return Err(Error::InvalidParam("observer stride must be >= 1".into()));
    }
    let steps = spec.step_count();
    let mut state = state0;
    observer(state.step, state.time, &state.reconstructed())?;
    for _ in 0..steps {
        state = step(&state, spec, table)?;
        if state.step.is_multiple_of(stride) {
            observer(state.step, state.time, &state.reconstructed())?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::bkw_field;
    use crate::collision::collision_spectrum;
    use crate::grid::{to_field, GridSpec};
    use crate::kernel::KernelSpec;

    fn table(n: usize) -> KernelTable {
        let g = GridSpec::with_default_lambda(n, 8.0).unwrap();
        KernelTable::build(&g, &KernelSpec::resolved(&g)).unwrap()
    }

    #[test]
    fn integrator_spec_validation() {
        assert!(IntegratorSpec::new(0.0, 1.0).is_err());
        assert!(IntegratorSpec::new(0.5, 0.1).is_err());
        assert!(IntegratorSpec::new(0.1, -1.0).is_err());
        assert_eq!(IntegratorSpec::new(0.01, 50.0).unwrap().step_count(), 5000);
        assert_eq!(IntegratorSpec::new(0.3, 1.0).unwrap().step_count(), 4);
        assert_eq!(IntegratorSpec::new(0.1, 0.0).unwrap().step_count(), 0);
    }

    #[test]
    fn zero_spectrum_is_fixed_for_classical() {
        let t = table(3);
        let z = Spectrum::zeros(*t.grid());
        assert_eq!(rhs_classical(&z, &t).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn steady_state_rhs_vanishes_structurally() {
        let t = table(4);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let r = rhs_steady_state(&Spectrum::zeros(*t.grid()), &m, &t).unwrap();
        assert!(r.coeffs().iter().all(|c| c.re == 0.0 && c.im == 0.0));
        let minus_m = m.scaled(-1.0);
        let r = rhs_steady_state(&minus_m, &m, &t).unwrap();
        let c = collision_spectrum(&m, &m, &t).unwrap();
        assert!((&r + &c).max_abs() < 1e-12 * c.max_abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn classical_at_projected_maxwellian_is_const_term() {
        let t = table(4);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let s = SchemeState::new(Variant::Classical, &m, &m, &t).unwrap();
        let r = rhs_classical(&m, &t).unwrap();
        assert_eq!(&r, s.const_term());
        assert!(r.max_abs() > 0.0);
    }

    #[test]
    fn steady_state_fixed_point_and_time() {
        let t = table(4);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let s0 = SchemeState::steady_state_from_micro(Spectrum::zeros(*t.grid()), &m, &t).unwrap();
        let spec = IntegratorSpec::new(0.01, 1.0).unwrap();
        let s1 = step(&s0, &spec, &t).unwrap();
        assert_eq!(s1.unknown().max_abs(), 0.0);
        assert_eq!(s1.reconstructed(), m);
        assert_eq!(s1.step_index(), 1);
        assert!((s1.time() - 0.01).abs() < 1e-16);
    }

    #[test]
    fn classical_step_keeps_mass_mode() {
        let t = table(6);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let fh = to_spectrum(&f0);
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let s0 = SchemeState::new(Variant::Classical, &fh, &m, &t).unwrap();
        let s1 = step(&s0, &IntegratorSpec::new(0.01, 1.0).unwrap(), &t).unwrap();
        let a = fh.mass_mode();
        let b = s1.reconstructed().mass_mode();
        assert!((a - b).norm() / a.norm() < 1e-12);
        assert!(to_field(&s1.reconstructed()).is_ok());
    }

    #[test]
    fn run_with_zero_end_returns_initial_state() {
        let t = table(3);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let fh = to_spectrum(&f0);
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let s0 = SchemeState::new(Variant::SteadyState, &fh, &m, &t).unwrap();
        let mut calls = Vec::new();
        let s = run(
            s0.clone(),
            &IntegratorSpec::new(0.01, 0.0).unwrap(),
            &t,
            1,
            |i, time, _| {
                calls.push((i, time));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(calls, vec![(0, 0.0)]);
        assert_eq!(s.unknown(), s0.unknown());
        assert_eq!(s.time(), 0.0);
    }

    #[test]
    fn observer_stride() {
        let t = table(2);
        let f0 = bkw_field(t.grid(), 0.0).unwrap();
        let fh = to_spectrum(&f0);
        let (_, m) = projected_maxwellian(&f0).unwrap();
        let s0 = SchemeState::new(Variant::Classical, &fh, &m, &t).unwrap();
        let mut seen = Vec::new();
        let end = run(s0, &IntegratorSpec::new(0.1, 1.0).unwrap(), &t, 3, |i, _, _| {
            seen.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 3, 6, 9]);
        assert_eq!(end.step_index(), 10);
    }

    #[test]
    fn blow_up_names_the_step() {
        let t = table(2);
        let mut f = Spectrum::zeros(*t.grid());
        f.set([1, 0], num_complex::Complex64::new(1e200, 0.0)).unwrap();
        f.set([-1, 0], num_complex::Complex64::new(1e200, 0.0)).unwrap();
        let m = Spectrum::zeros(*t.grid());
        let s0 = SchemeState::new(Variant::Classical, &f, &m, &t).unwrap();
        let err = step(&s0, &IntegratorSpec::new(0.5, 1.0).unwrap(), &t).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 1 }));
    }
}
