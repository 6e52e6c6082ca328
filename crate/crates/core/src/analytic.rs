//! Solutions of the mean-field system without recovery (`nu = 0`).
//!
//! With no recovery every class obeys `d/dt ln(f - i) = -lambda k Theta(t)`
//! for a single common `Theta`. Hence for any reference class `(k*, l*)` with
//! `k* >= 1`
//!
//! ```text
//! f(k,l) - i(k,l)(t) = c(k,l) * (f* - i*(t))^(k/k*),
//! c(k,l) = (f(k,l) - i(k,l)(0)) / (f* - i*(0))^(k/k*)
//! ```
//!
//! which reduces the whole system to one scalar ODE for `i*`. When every
//! node has the same in-degree `d`, `Theta` itself is logistic with rate
//! `lambda d` and each class has a closed form.

use crate::degree_model::DegreeClass;
use crate::epidemic_sim::EpidemicParams;
use crate::error::{Error, Result};
use crate::meanfield::{ClassState, MeanFieldForm};
use crate::ode::{substeps, Rk4};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConstants<T> {
    pub reference: DegreeClass,
    reference_index: usize,
    /// `c(k, l)` in pmf support order.
    pub c: Vec<T>,
    /// `f* - i*(0)`.
    pub base: T,
}

impl<T: Scalar> CouplingConstants<T> {
    pub fn reference_index(&self) -> usize {
        self.reference_index
    }
}

/// `(1, 1)` when it has susceptible mass left, otherwise the class with the
/// smallest `k >= 1` (then smallest `l`) that does.
pub fn default_reference_class<T: Scalar>(state: &ClassState<T>) -> Result<DegreeClass> {
    let state = state.to_form(MeanFieldForm::Absolute)?;
    let susceptible = |c: usize| state.pmf.probs()[c] - state.i[c] > T::zero();
    let unit = DegreeClass::new(1, 1);
    if let Some(c) = state.pmf.index_of(unit) {
        if susceptible(c) {
            return Ok(unit);
        }
    }
    state
        .pmf
        .classes()
        .iter()
        .enumerate()
        .filter(|&(c, cls)| cls.k >= 1 && susceptible(c))
        .map(|(_, &cls)| cls)
        .min()
        .ok_or_else(|| Error::InvalidState("no class with in-degree >= 1 has susceptible mass".into()))
}

pub fn coupling_constants<T: Scalar>(initial: &ClassState<T>, reference: DegreeClass) -> Result<CouplingConstants<T>> {
    let state = initial.to_form(MeanFieldForm::Absolute)?;
    if state.r.iter().any(|&r| r != T::zero()) {
        return Err(Error::InvalidState("no-recovery solutions need r = 0".into()));
    }
    if reference.k == 0 {
        return Err(Error::InvalidState("reference class must have in-degree >= 1".into()));
    }
    let ref_idx = state
        .pmf
        .index_of(reference)
        .ok_or_else(|| Error::InvalidState(format!("reference class {reference} not in support")))?;
    let base = state.pmf.probs()[ref_idx] - state.i[ref_idx];
    if !(base > T::zero()) {
        return Err(Error::InvalidState(format!("reference class {reference} is fully infected at t = 0")));
    }
    let k_ref = T::lit(reference.k as f64);
    let c = state
        .pmf
        .iter()
        .zip(&state.i)
        .map(|((cls, f), &i0)| (f - i0) / base.powf(T::lit(cls.k as f64) / k_ref))
        .collect();
    Ok(CouplingConstants { reference, reference_index: ref_idx, c, base })
}

/// Integrates the scalar equation for the reference class and rebuilds all
/// other classes from the coupling relation.
///
/// `reference` defaults to [`default_reference_class`]. Requires `nu = 0`.
pub fn solve_reference_ode<T: Scalar>(
    initial: &ClassState<T>,
    params: &EpidemicParams<T>,
    reference: Option<DegreeClass>,
    grid: &[T],
    dt: T,
) -> Result<Trajectory<T>> {
    if params.nu != T::zero() {
        return Err(Error::InvalidParams(format!("reference-class solution needs nu = 0, got {}", params.nu)));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidParams(format!("step size must be positive, got {dt}")));
    }
    if grid.is_empty() || grid[0] < T::zero() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid must be non-empty, non-negative and strictly increasing".into()));
    }
    let state = initial.to_form(MeanFieldForm::Absolute)?;
    let reference = match reference {
        Some(r) => r,
        None => default_reference_class(&state)?,
    };
    let coupling = coupling_constants(&state, reference)?;
    let pmf = &state.pmf;
    let n = pmf.len();
    let ref_idx = coupling.reference_index;
    let f_ref = pmf.probs()[ref_idx];
    let b0 = coupling.base;
    let k_ref = T::lit(reference.k as f64);
    let exps: Vec<T> = pmf.classes().iter().map(|c| T::lit(c.k as f64) / k_ref).collect();
    let out: Vec<T> = pmf.classes().iter().map(|c| T::lit(c.l as f64)).collect();
    let susceptible0: Vec<T> = pmf.probs().iter().zip(&state.i).map(|(&f, &i)| f - i).collect();
    let mean_out = pmf.mean_out();
    if !(mean_out > T::zero()) {
        return Err(Error::InvalidDistribution("every class has out-degree zero".into()));
    }
    let lambda = params.lambda;

    // i(k,l) = f - (f - i0) * (b / b0)^(k/k*), exactly i0 at t = 0
    let reconstruct = |b: T, row: &mut Vec<T>| {
        let ratio = (b / b0).max(T::zero());
        for c in 0..n {
            row.push(pmf.probs()[c] - susceptible0[c] * ratio.powf(exps[c]));
        }
    };
    let theta = |b: T| -> T {
        let ratio = (b / b0).max(T::zero());
        let mut acc = T::zero();
        for c in 0..n {
            acc += out[c] * (pmf.probs()[c] - susceptible0[c] * ratio.powf(exps[c]));
        }
        acc / mean_out
    };
    let mut rhs = |_t: T, y: &[T], dy: &mut [T]| {
        let b = f_ref - y[0];
        dy[0] = lambda * k_ref * b * theta(b);
    };

    let mut rk = Rk4::new(1);
    let mut y = [state.i[ref_idx]];
    let mut class_i = Vec::with_capacity(grid.len() * n);
    let mut t = T::zero();
    for &target in grid {
        if target > t {
            let steps = substeps(target - t, dt);
            let h = (target - t) / T::from_count(steps);
            for s in 0..steps {
                rk.step(&mut rhs, t + h * T::from_count(s), &mut y, h);
                if !y[0].is_finite() {
                    return Err(Error::NonFinite { t: (t + h * T::from_count(s + 1)).as_f64() });
                }
                y[0] = y[0].max(T::zero()).min(f_ref);
            }
            t = target;
        }
        if y[0] == state.i[ref_idx] && t == T::zero() {
            class_i.extend_from_slice(&state.i);
        } else {
            reconstruct(f_ref - y[0], &mut class_i);
        }
    }
    let class_r = vec![T::zero(); class_i.len()];
    Trajectory::from_class_rows(pmf.classes().to_vec(), grid.to_vec(), class_i, class_r)
}

/// Logistic `Theta` with `Theta(0) = theta0` and rate `lambda * d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticTheta<T> {
    theta0: T,
    rate: T,
}

impl<T: Scalar> LogisticTheta<T> {
    pub fn new(theta0: T, rate: T) -> Result<Self> {
        if !(theta0 > T::zero() && theta0 <= T::one()) {
            return Err(Error::InvalidParams(format!("theta0 must lie in (0, 1], got {theta0}")));
        }
        if !(rate >= T::zero()) || !rate.is_finite() {
            return Err(Error::InvalidParams(format!("rate must be non-negative, got {rate}")));
        }
        Ok(Self { theta0, rate })
    }

    pub fn theta0(&self) -> T {
        self.theta0
    }

    pub fn rate(&self) -> T {
        self.rate
    }
}

/// `Theta(t) = theta0 / (theta0 + (1 - theta0) exp(-rate t))`.
pub fn theta_closed_form<T: Scalar>(th: &LogisticTheta<T>, t: T) -> T {
    th.theta0 / (th.theta0 + (T::one() - th.theta0) * (-th.rate * t).exp())
}

/// Share of out-stubs attached to infected nodes, `sum l i(k,l) / E[L]`.
pub fn stub_share<T: Scalar>(state: &ClassState<T>) -> Result<T> {
    let state = state.to_form(MeanFieldForm::Absolute)?;
    let mean_out = state.pmf.mean_out();
    if !(mean_out > T::zero()) {
        return Err(Error::InvalidDistribution("every class has out-degree zero".into()));
    }
    let acc: T = state.pmf.classes().iter().zip(&state.i).map(|(c, &i)| T::lit(c.l as f64) * i).sum();
    Ok(acc / mean_out)
}

/// Closed-form state at time `t` when every node has in-degree `d` and
/// `nu = 0`:
///
/// ```text
/// i(d,l)(t) = f(d,l) - (f(d,l) - i(d,l)(0)) / (1 - Theta0 + Theta0 exp(lambda d t))
/// ```
///
/// with `Theta0` the infected out-stub share at `t = 0`.
pub fn closed_form_deterministic_indegree<T: Scalar>(initial: &ClassState<T>, lambda: T, t: T) -> Result<ClassState<T>> {
    let state = initial.to_form(MeanFieldForm::Absolute)?;
    let d = state
        .pmf
        .deterministic_in_degree()
        .ok_or_else(|| Error::InvalidDistribution("in-degree is not deterministic".into()))?;
    if state.r.iter().any(|&r| r != T::zero()) {
        return Err(Error::InvalidState("no-recovery solutions need r = 0".into()));
    }
    if !(lambda > T::zero()) || t < T::zero() {
        return Err(Error::InvalidParams("need lambda > 0 and t >= 0".into()));
    }
    let theta0 = stub_share(&state)?;
    // same as f - (f - i0) / denom, rearranged to be exact at t = 0
    let excess = theta0 * (lambda * T::lit(d as f64) * t).exp_m1();
    let gain = excess / (T::one() + excess);
    let i = state
        .pmf
        .probs()
        .iter()
        .zip(&state.i)
        .map(|(&f, &i0)| i0 + (f - i0) * gain)
        .collect();
    Ok(ClassState { i, ..state })
}

/// [`closed_form_deterministic_indegree`] sampled on `grid`.
pub fn closed_form_trajectory<T: Scalar>(initial: &ClassState<T>, lambda: T, grid: &[T]) -> Result<Trajectory<T>> {
    let state = initial.to_form(MeanFieldForm::Absolute)?;
    let mut class_i = Vec::with_capacity(grid.len() * state.pmf.len());
    for &t in grid {
        class_i.extend(closed_form_deterministic_indegree(&state, lambda, t)?.i);
    }
    let class_r = vec![T::zero(); class_i.len()];
    Trajectory::from_class_rows(state.pmf.classes().to_vec(), grid.to_vec(), class_i, class_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::JointDegreePmf;

    fn two_class() -> JointDegreePmf<f64> {
        JointDegreePmf::new(vec![(DegreeClass::new(1, 1), 0.5), (DegreeClass::new(2, 1), 0.5)]).unwrap()
    }

    #[test]
    fn coupling_hand_values() {
        let s = ClassState::new(two_class(), vec![0.1, 0.05], vec![0.0, 0.0]).unwrap();
        let cc = coupling_constants(&s, DegreeClass::new(1, 1)).unwrap();
        assert_eq!(cc.c[0], 1.0);
        assert!((cc.c[1] - 2.8125).abs() < 1e-14, "{}", cc.c[1]);

        let s = ClassState::new(two_class(), vec![0.1, 0.0], vec![0.0, 0.0]).unwrap();
        let cc = coupling_constants(&s, DegreeClass::new(1, 1)).unwrap();
        assert!((cc.c[1] - 0.5 / 0.16).abs() < 1e-14);
    }

    #[test]
    fn coupling_errors() {
        let s = ClassState::new(two_class(), vec![0.5, 0.05], vec![0.0, 0.0]).unwrap();
        assert!(coupling_constants(&s, DegreeClass::new(1, 1)).is_err());
        assert!(coupling_constants(&s, DegreeClass::new(3, 3)).is_err());
        let pmf = JointDegreePmf::new(vec![(DegreeClass::new(0, 1), 0.5), (DegreeClass::new(2, 1), 0.5)]).unwrap();
        let s = ClassState::new(pmf, vec![0.1, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(coupling_constants(&s, DegreeClass::new(0, 1)).is_err());
        assert_eq!(default_reference_class(&s).unwrap(), DegreeClass::new(2, 1));
    }

    #[test]
    fn default_reference_prefers_unit_class() {
        let s = ClassState::new(two_class(), vec![0.1, 0.05], vec![0.0, 0.0]).unwrap();
        assert_eq!(default_reference_class(&s).unwrap(), DegreeClass::new(1, 1));
        let s = ClassState::new(two_class(), vec![0.5, 0.05], vec![0.0, 0.0]).unwrap();
        assert_eq!(default_reference_class(&s).unwrap(), DegreeClass::new(2, 1));
    }

    #[test]
    fn reference_ode_needs_no_recovery() {
        let s = ClassState::new(two_class(), vec![0.1, 0.05], vec![0.0, 0.0]).unwrap();
        let p = EpidemicParams::new(1.0, 0.5, 0.05, 1.0).unwrap();
        assert!(solve_reference_ode(&s, &p, None, &[0.0, 1.0], 1e-3).is_err());
    }

    #[test]
    fn reference_ode_keeps_initial_state_at_zero() {
        let s = ClassState::new(two_class(), vec![0.1, 0.0], vec![0.0, 0.0]).unwrap();
        let p = EpidemicParams::new(1.0, 0.0, 0.05, 1.0).unwrap();
        let t = solve_reference_ode(&s, &p, None, &[0.0, 0.5, 1.0], 1e-3).unwrap();
        assert_eq!(t.class_infected(0), &[0.1, 0.0]);
        assert!(t.class_infected(2)[1] > 0.0);
    }

    #[test]
    fn reference_ode_single_class_is_logistic() {
        let pmf = JointDegreePmf::new(vec![(DegreeClass::new(1, 1), 1.0)]).unwrap();
        let s = ClassState::new(pmf, vec![0.05], vec![0.0]).unwrap();
        let p = EpidemicParams::new(1.0, 0.0, 0.05, 10.0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|j| j as f64 * 0.5).collect();
        let t = solve_reference_ode(&s, &p, None, &grid, 1e-3).unwrap();
        for (j, &tt) in grid.iter().enumerate() {
            let exact = 0.05 / (0.05 + 0.95 * (-tt).exp());
            assert!((t.i()[j] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn theta_examples() {
        let fixed = LogisticTheta::new(1.0f64, 10.0).unwrap();
        assert_eq!(theta_closed_form(&fixed, 3.7), 1.0);
        let th = LogisticTheta::new(0.05f64, 10.0).unwrap();
        assert_eq!(theta_closed_form(&th, 0.0), 0.05);
        assert!((theta_closed_form(&th, 50.0) - 1.0).abs() < 1e-15);
        assert!(LogisticTheta::new(0.0, 1.0).is_err());
        assert!(LogisticTheta::new(1.2, 1.0).is_err());
    }

    #[test]
    fn theta_against_rk4() {
        // oracle: RK4 on dTheta/dt = 10 Theta (1 - Theta)
        let mut rk = Rk4::<f64>::new(1);
        let mut y = [0.05];
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = 10.0 * y[0] * (1.0 - y[0]);
        let h = 1e-4;
        for n in 0..3000 {
            rk.step(&mut f, n as f64 * h, &mut y, h);
        }
        let th = LogisticTheta::new(0.05, 10.0).unwrap();
        let closed = theta_closed_form(&th, 0.3);
        assert!((closed - y[0]).abs() < 1e-10);
        assert!((closed - 0.513_887).abs() < 1e-6, "{closed}");
    }

    #[test]
    fn closed_form_examples() {
        let pmf = JointDegreePmf::new(vec![(DegreeClass::new(10, 10), 1.0f64)]).unwrap();
        let s = ClassState::new(pmf, vec![0.05], vec![0.0]).unwrap();
        assert_eq!(closed_form_deterministic_indegree(&s, 1.0, 0.0).unwrap().i, vec![0.05]);
        let at = closed_form_deterministic_indegree(&s, 1.0, 0.3).unwrap();
        assert!((at.i[0] - 0.513_887).abs() < 1e-6, "{}", at.i[0]);
        let late = closed_form_deterministic_indegree(&s, 1.0, 10.0).unwrap();
        assert!((late.i[0] - 1.0).abs() < 1e-12);

        assert!(closed_form_deterministic_indegree(&ClassState::new(two_class(), vec![0.1, 0.0], vec![0.0, 0.0]).unwrap(), 1.0, 1.0).is_err());
    }
}
