//! Degree-stratified mean-field equations.
//!
//! For a class `(k, l)` with mass `f(k, l)`, infected fraction `i` and
//! recovered fraction `r` (both fractions of all nodes), the absolute form is
//!
//! ```text
//! di/dt = lambda * k * (f - i - r) * (sum_{k',l'} l' i_{k',l'}) / E[L] - nu * i
//! dr/dt = nu * i
//! ```
//!
//! The conditioned form tracks `i / f` and `r / f` instead; its force of
//! infection is `sum l' f' i'_cond / E[L]` and the susceptible factor is
//! `1 - i - r`. Both describe the same flow in different coordinates.

use serde::{Deserialize, Serialize};

use crate::degree_model::JointDegreePmf;
use crate::epidemic_sim::EpidemicParams;
use crate::error::{Error, Result};
use crate::ode::{substeps, Rk4};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanFieldForm {
    /// Fractions of all nodes; `i + r <= f(k, l)`.
    #[default]
    Absolute,
    /// Fractions within each class; `i + r <= 1`.
    Conditioned,
}

/// Per-class infected/recovered fractions in the given convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassState<T> {
    pub pmf: JointDegreePmf<T>,
    pub i: Vec<T>,
    pub r: Vec<T>,
    pub form: MeanFieldForm,
}

impl<T: Scalar> ClassState<T> {
    /// Absolute-form state; checks lengths and the box invariants.
    pub fn new(pmf: JointDegreePmf<T>, i: Vec<T>, r: Vec<T>) -> Result<Self> {
        Self::with_form(pmf, i, r, MeanFieldForm::Absolute)
    }

    pub fn with_form(pmf: JointDegreePmf<T>, i: Vec<T>, r: Vec<T>, form: MeanFieldForm) -> Result<Self> {
        if i.len() != pmf.len() || r.len() != pmf.len() {
            return Err(Error::InvalidState(format!(
                "state vectors of length {}/{} for {} classes",
                i.len(),
                r.len(),
                pmf.len()
            )));
        }
        let s = Self { pmf, i, r, form };
        s.check_box(T::invariant_slack())?;
        Ok(s)
    }

    /// No infection anywhere.
    pub fn uninfected(pmf: JointDegreePmf<T>) -> Self {
        let n = pmf.len();
        Self { pmf, i: vec![T::zero(); n], r: vec![T::zero(); n], form: MeanFieldForm::Absolute }
    }

    /// `i(k, l) = frac * f(k, l)`, no recovered nodes.
    pub fn seeded_uniformly(pmf: JointDegreePmf<T>, frac: T) -> Result<Self> {
        let i = pmf.probs().iter().map(|&p| frac * p).collect();
        let r = vec![T::zero(); pmf.len()];
        Self::new(pmf, i, r)
    }

    fn cap(&self, c: usize) -> T {
        match self.form {
            MeanFieldForm::Absolute => self.pmf.probs()[c],
            MeanFieldForm::Conditioned => T::one(),
        }
    }

    fn check_box(&self, slack: T) -> Result<()> {
        for c in 0..self.i.len() {
            let (i, r) = (self.i[c], self.r[c]);
            if !i.is_finite() || !r.is_finite() || i < -slack || r < -slack || i + r > self.cap(c) + slack {
                return Err(Error::InvalidState(format!(
                    "class {} has i={i}, r={r} outside [0, {}]",
                    self.pmf.classes()[c],
                    self.cap(c)
                )));
            }
        }
        Ok(())
    }

    /// Re-expresses the state in `form` coordinates.
    pub fn to_form(&self, form: MeanFieldForm) -> Result<Self> {
        match (self.form, form) {
            (a, b) if a == b => Ok(self.clone()),
            (MeanFieldForm::Absolute, MeanFieldForm::Conditioned) => absolute_to_conditional(self),
            _ => Ok(conditional_to_absolute(self)),
        }
    }
}

/// Multiplies each class by its mass.
pub fn conditional_to_absolute<T: Scalar>(state: &ClassState<T>) -> ClassState<T> {
    if state.form == MeanFieldForm::Absolute {
        return state.clone();
    }
    let f = state.pmf.probs();
    ClassState {
        pmf: state.pmf.clone(),
        i: state.i.iter().zip(f).map(|(&x, &p)| x * p).collect(),
        r: state.r.iter().zip(f).map(|(&x, &p)| x * p).collect(),
        form: MeanFieldForm::Absolute,
    }
}

/// Divides each class by its mass.
pub fn absolute_to_conditional<T: Scalar>(state: &ClassState<T>) -> Result<ClassState<T>> {
    if state.form == MeanFieldForm::Conditioned {
        return Ok(state.clone());
    }
    let f = state.pmf.probs();
    if let Some(c) = f.iter().position(|&p| !(p > T::zero())) {
        return Err(Error::InvalidState(format!("class {} has zero mass", state.pmf.classes()[c])));
    }
    Ok(ClassState {
        pmf: state.pmf.clone(),
        i: state.i.iter().zip(f).map(|(&x, &p)| x / p).collect(),
        r: state.r.iter().zip(f).map(|(&x, &p)| x / p).collect(),
        form: MeanFieldForm::Conditioned,
    })
}

/// The right-hand side with the pmf-dependent constants precomputed.
#[derive(Debug, Clone)]
pub struct MeanFieldSystem<T> {
    in_deg: Vec<T>,
    out_deg: Vec<T>,
    mass: Vec<T>,
    mean_out: T,
    lambda: T,
    nu: T,
    form: MeanFieldForm,
}

impl<T: Scalar> MeanFieldSystem<T> {
    pub fn new(pmf: &JointDegreePmf<T>, params: &EpidemicParams<T>, form: MeanFieldForm) -> Result<Self> {
        let mean_out = pmf.mean_out();
        if !(mean_out > T::zero()) {
            return Err(Error::InvalidDistribution("every class has out-degree zero".into()));
        }
        Ok(Self {
            in_deg: pmf.classes().iter().map(|c| T::lit(c.k as f64)).collect(),
            out_deg: pmf.classes().iter().map(|c| T::lit(c.l as f64)).collect(),
            mass: pmf.probs().to_vec(),
            mean_out,
            lambda: params.lambda,
            nu: params.nu,
            form,
        })
    }

    pub fn classes(&self) -> usize {
        self.mass.len()
    }

    /// Probability that a uniformly chosen out-stub belongs to an infected node.
    pub fn infected_stub_share(&self, i: &[T]) -> T {
        let weighted: T = match self.form {
            MeanFieldForm::Absolute => self.out_deg.iter().zip(i).map(|(&l, &x)| l * x).sum(),
            MeanFieldForm::Conditioned => {
                self.out_deg.iter().zip(&self.mass).zip(i).map(|((&l, &f), &x)| l * f * x).sum()
            }
        };
        weighted / self.mean_out
    }

    pub fn eval(&self, i: &[T], r: &[T], di: &mut [T], dr: &mut [T]) {
        let theta = self.infected_stub_share(i);
        for c in 0..self.classes() {
            let cap = match self.form {
                MeanFieldForm::Absolute => self.mass[c],
                MeanFieldForm::Conditioned => T::one(),
            };
            let recovery = self.nu * i[c];
            di[c] = self.lambda * self.in_deg[c] * (cap - i[c] - r[c]) * theta - recovery;
            dr[c] = recovery;
        }
    }

    /// Same as [`MeanFieldSystem::eval`] on a stacked `[i.., r..]` vector.
    fn eval_stacked(&self, y: &[T], dy: &mut [T]) {
        let n = self.classes();
        let (i, r) = y.split_at(n);
        let (di, dr) = dy.split_at_mut(n);
        self.eval(i, r, di, dr);
    }
}

/// Time derivatives `(di, dr)` at `state`, evaluated in `form` coordinates.
pub fn rhs<T: Scalar>(state: &ClassState<T>, params: &EpidemicParams<T>, form: MeanFieldForm) -> Result<(Vec<T>, Vec<T>)> {
    let state = state.to_form(form)?;
    let sys = MeanFieldSystem::new(&state.pmf, params, form)?;
    let n = sys.classes();
    let (mut di, mut dr) = (vec![T::zero(); n], vec![T::zero(); n]);
    sys.eval(&state.i, &state.r, &mut di, &mut dr);
    Ok((di, dr))
}

/// Integrates the mean-field system with RK4 and reports absolute
/// fractions at each `grid` time.
///
/// Each grid interval is split into the smallest number of equal steps no
/// longer than `dt`. After every step the state is checked against the box
/// `0 <= i, r` and `i + r <= cap`, against growth of the susceptible
/// fraction and against decrease of `r`. Violations up to
/// [`Scalar::invariant_slack`] are clamped; larger ones are errors.
pub fn integrate<T: Scalar>(
    initial: &ClassState<T>,
    params: &EpidemicParams<T>,
    form: MeanFieldForm,
    grid: &[T],
    dt: T,
) -> Result<Trajectory<T>> {
    check_grid(grid, dt)?;
    let start = initial.to_form(form)?;
    let sys = MeanFieldSystem::new(&start.pmf, params, form)?;
    let n = sys.classes();
    let caps: Vec<T> = (0..n).map(|c| start.cap(c)).collect();
    let to_abs: Vec<T> = match form {
        MeanFieldForm::Absolute => vec![T::one(); n],
        MeanFieldForm::Conditioned => start.pmf.probs().to_vec(),
    };

    let mut y: Vec<T> = start.i.iter().chain(&start.r).copied().collect();
    let mut prev = y.clone();
    let mut rk = Rk4::new(2 * n);
    let mut rhs = |_t: T, y: &[T], dy: &mut [T]| sys.eval_stacked(y, dy);

    let mut class_i = Vec::with_capacity(grid.len() * n);
    let mut class_r = Vec::with_capacity(grid.len() * n);
    let mut record = |y: &[T]| {
        class_i.extend(y[..n].iter().zip(&to_abs).map(|(&x, &a)| x * a));
        class_r.extend(y[n..].iter().zip(&to_abs).map(|(&x, &a)| x * a));
    };

    let mut t = T::zero();
    let mut next = 0;
    // grid points at t = 0 are the initial state
    while next < grid.len() && grid[next] <= T::zero() {
        record(&y);
        next += 1;
    }
    while next < grid.len() {
        let target = grid[next];
        let steps = substeps(target - t, dt);
        let h = (target - t) / T::from_count(steps);
        let t0 = t;
        for s in 0..steps {
            prev.copy_from_slice(&y);
            let ts = t0 + h * T::from_count(s);
            rk.step(&mut rhs, ts, &mut y, h);
            enforce_box(&mut y, &prev, &caps, ts + h)?;
        }
        t = target;
        record(&y);
        next += 1;
    }

    Trajectory::from_class_rows(start.pmf.classes().to_vec(), grid.to_vec(), class_i, class_r)
}

fn check_grid<T: Scalar>(grid: &[T], dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("step size must be positive, got {dt}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid[0] < T::zero() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid must be non-negative and strictly increasing".into()));
    }
    Ok(())
}

/// Validates one step and clamps roundoff-sized excursions.
fn enforce_box<T: Scalar>(y: &mut [T], prev: &[T], caps: &[T], t: T) -> Result<()> {
    let n = caps.len();
    let slack = T::invariant_slack();
    let violation = |class: usize, amount: T| Error::InvariantViolation { t: t.as_f64(), class, amount: amount.as_f64() };
    for c in 0..n {
        let (mut i, mut r) = (y[c], y[n + c]);
        if !i.is_finite() || !r.is_finite() {
            return Err(Error::NonFinite { t: t.as_f64() });
        }
        let excess = (-i).max(-r).max(i + r - caps[c]);
        if excess > slack {
            return Err(violation(c, excess));
        }
        let s_growth = (caps[c] - i - r) - (caps[c] - prev[c] - prev[n + c]);
        if s_growth > slack {
            return Err(violation(c, s_growth));
        }
        let r_drop = prev[n + c] - r;
        if r_drop > slack {
            return Err(violation(c, r_drop));
        }
        r = r.max(T::zero()).min(caps[c]);
        i = i.max(T::zero()).min(caps[c] - r);
        y[c] = i;
        y[n + c] = r;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::DegreeClass;
    use crate::trajectory::uniform_grid;

    fn unit_pmf() -> JointDegreePmf<f64> {
        JointDegreePmf::new(vec![(DegreeClass::new(1, 1), 1.0)]).unwrap()
    }

    fn two_class() -> JointDegreePmf<f64> {
        JointDegreePmf::new(vec![(DegreeClass::new(1, 2), 0.5), (DegreeClass::new(2, 1), 0.5)]).unwrap()
    }

    fn params(lambda: f64, nu: f64) -> EpidemicParams<f64> {
        EpidemicParams::new(lambda, nu, 0.05, 10.0).unwrap()
    }

    #[test]
    fn rhs_logistic_midpoint() {
        let s = ClassState::new(unit_pmf(), vec![0.5], vec![0.0]).unwrap();
        let (di, dr) = rhs(&s, &params(1.0, 0.0), MeanFieldForm::Absolute).unwrap();
        assert_eq!(di, vec![0.25]);
        assert_eq!(dr, vec![0.0]);
    }

    #[test]
    fn rhs_balance_point() {
        let s = ClassState::new(unit_pmf(), vec![0.5], vec![0.0]).unwrap();
        let (di, dr) = rhs(&s, &params(1.0, 0.5), MeanFieldForm::Absolute).unwrap();
        assert_eq!(di, vec![0.0]);
        assert_eq!(dr, vec![0.25]);
    }

    #[test]
    fn rhs_two_class_hand_value() {
        // (0.5 - 0.1) * (2*0.1 + 1*0.05) / 1.5 - 0.5 * 0.1
        let s = ClassState::new(two_class(), vec![0.1, 0.05], vec![0.0, 0.0]).unwrap();
        let (di, dr) = rhs(&s, &params(1.0, 0.5), MeanFieldForm::Absolute).unwrap();
        assert!((di[0] - 0.016_666_666_666_666_67).abs() < 1e-15, "{}", di[0]);
        // (2,1): 2 * (0.5 - 0.05) * 0.25/1.5 - 0.025
        assert!((di[1] - 0.125).abs() < 1e-15, "{}", di[1]);
        assert_eq!(dr, vec![0.05, 0.025]);
    }

    #[test]
    fn rhs_conditioned_matches_absolute_after_scaling() {
        let s = ClassState::new(two_class(), vec![0.1, 0.05], vec![0.02, 0.0]).unwrap();
        let (di_a, _) = rhs(&s, &params(1.3, 0.4), MeanFieldForm::Absolute).unwrap();
        let (di_c, _) = rhs(&s, &params(1.3, 0.4), MeanFieldForm::Conditioned).unwrap();
        for c in 0..2 {
            assert!((di_a[c] - di_c[c] * 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_out_degree_is_rejected() {
        let pmf = JointDegreePmf::new(vec![(DegreeClass::new(1, 0), 1.0)]).unwrap();
        let s = ClassState::uninfected(pmf);
        assert!(rhs(&s, &params(1.0, 0.0), MeanFieldForm::Absolute).is_err());
    }

    #[test]
    fn logistic_closed_form() {
        let s = ClassState::new(unit_pmf(), vec![0.05], vec![0.0]).unwrap();
        let grid = uniform_grid(10.0, 101).unwrap();
        let t = integrate(&s, &params(1.0, 0.0), MeanFieldForm::Absolute, &grid, 1e-3).unwrap();
        for (j, &tt) in grid.iter().enumerate() {
            let exact = 0.05 / (0.05 + 0.95 * (-tt).exp());
            assert!((t.i()[j] - exact).abs() < 1e-8, "t={tt}: {} vs {exact}", t.i()[j]);
            assert_eq!(t.r()[j], 0.0);
        }
    }

    #[test]
    fn zero_infection_is_a_fixed_point() {
        let s = ClassState::uninfected(two_class());
        let grid = uniform_grid(5.0, 11).unwrap();
        let t = integrate(&s, &params(1.0, 0.5), MeanFieldForm::Absolute, &grid, 0.01).unwrap();
        assert!(t.i().iter().chain(t.r()).all(|&x| x == 0.0));
    }

    #[test]
    fn huge_step_is_a_numeric_error() {
        let pmf = JointDegreePmf::new(vec![(DegreeClass::new(50, 50), 1.0)]).unwrap();
        let s = ClassState::seeded_uniformly(pmf, 0.5).unwrap();
        let err = integrate(&s, &params(1.0, 0.5), MeanFieldForm::Absolute, &[0.0, 1.0], 1.0).unwrap_err();
        assert!(err.is_numeric(), "{err}");
    }

    #[test]
    fn state_validation() {
        assert!(ClassState::new(unit_pmf(), vec![0.7], vec![0.4]).is_err());
        assert!(ClassState::new(unit_pmf(), vec![-0.1], vec![0.0]).is_err());
        assert!(ClassState::new(two_class(), vec![0.1], vec![0.0]).is_err());
    }

    #[test]
    fn conversions() {
        let f = two_class();
        let s = ClassState::new(f.clone(), vec![0.25, 0.0], vec![0.0, 0.5]).unwrap();
        let c = absolute_to_conditional(&s).unwrap();
        assert_eq!(c.i, vec![0.5, 0.0]);
        assert_eq!(c.r, vec![0.0, 1.0]);
        assert_eq!(conditional_to_absolute(&c), s);
    }

    #[test]
    fn single_precision_logistic() {
        let pmf = JointDegreePmf::<f32>::new(vec![(DegreeClass::new(1, 1), 1.0)]).unwrap();
        let s = ClassState::new(pmf, vec![0.05], vec![0.0]).unwrap();
        let p = EpidemicParams::new(1.0f32, 0.0, 0.05, 5.0).unwrap();
        let t = integrate(&s, &p, MeanFieldForm::Absolute, &[0.0, 5.0], 0.01).unwrap();
        let exact = 0.05 / (0.05 + 0.95 * (-5.0f32).exp());
        assert!((t.i()[1] - exact).abs() < 1e-4);
    }
}
