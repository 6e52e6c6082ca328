//! Time series of S/I/R fractions, per degree class and in aggregate.
//!
//! Both the stochastic simulator and the ODE solvers report a
//! [`Trajectory`]. Per-class fractions are always fractions of *all* nodes,
//! so class `(k, l)` satisfies `i + r <= f(k, l)`.

use crate::degree_model::DegreeClass;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    classes: Vec<DegreeClass>,
    times: Vec<T>,
    // row-major, one row of `classes.len()` entries per time point
    class_i: Vec<T>,
    class_r: Vec<T>,
    s: Vec<T>,
    i: Vec<T>,
    r: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Builds a trajectory from per-class rows; aggregates are the row sums.
    pub fn from_class_rows(classes: Vec<DegreeClass>, times: Vec<T>, class_i: Vec<T>, class_r: Vec<T>) -> Result<Self> {
        let width = classes.len();
        if class_i.len() != times.len() * width || class_r.len() != times.len() * width {
            return Err(Error::TrajectoryMismatch(format!(
                "{} time points x {} classes does not match {} / {} values",
                times.len(),
                width,
                class_i.len(),
                class_r.len()
            )));
        }
        let row_sums = |v: &[T]| -> Vec<T> {
            if width == 0 {
                vec![T::zero(); times.len()]
            } else {
                v.chunks(width).map(|row| row.iter().copied().sum()).collect()
            }
        };
        let i = row_sums(&class_i);
        let r = row_sums(&class_r);
        let s = i.iter().zip(&r).map(|(&a, &b)| T::one() - a - b).collect();
        Ok(Self { classes, times, class_i, class_r, s, i, r })
    }

    /// Aggregate-only trajectory (no per-class breakdown).
    pub fn from_aggregates(times: Vec<T>, s: Vec<T>, i: Vec<T>, r: Vec<T>) -> Result<Self> {
        if s.len() != times.len() || i.len() != times.len() || r.len() != times.len() {
            return Err(Error::TrajectoryMismatch("aggregate columns differ in length".into()));
        }
        Ok(Self { classes: Vec::new(), times, class_i: Vec::new(), class_r: Vec::new(), s, i, r })
    }

    /// Assembles a trajectory from explicit per-class and aggregate columns,
    /// as read back from a file. Only shapes are checked.
    pub fn from_parts(
        classes: Vec<DegreeClass>,
        times: Vec<T>,
        class_i: Vec<T>,
        class_r: Vec<T>,
        s: Vec<T>,
        i: Vec<T>,
        r: Vec<T>,
    ) -> Result<Self> {
        let n = times.len();
        let w = classes.len();
        if s.len() != n || i.len() != n || r.len() != n || class_i.len() != n * w || class_r.len() != n * w {
            return Err(Error::TrajectoryMismatch("column lengths disagree".into()));
        }
        Ok(Self { classes, times, class_i, class_r, s, i, r })
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.classes
    }

    pub fn has_classes(&self) -> bool {
        !self.classes.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn s(&self) -> &[T] {
        &self.s
    }

    pub fn i(&self) -> &[T] {
        &self.i
    }

    pub fn r(&self) -> &[T] {
        &self.r
    }

    /// Per-class infected fractions at time index `t`.
    pub fn class_infected(&self, t: usize) -> &[T] {
        let w = self.classes.len();
        &self.class_i[t * w..(t + 1) * w]
    }

    pub fn class_recovered(&self, t: usize) -> &[T] {
        let w = self.classes.len();
        &self.class_r[t * w..(t + 1) * w]
    }

    /// Cumulative infection `i + r` at each time point.
    pub fn ever_infected(&self) -> Vec<T> {
        self.i.iter().zip(&self.r).map(|(&a, &b)| a + b).collect()
    }

    /// Pointwise mean of trajectories on a common grid.
    ///
    /// Sums in slice order, so the result does not depend on how the inputs
    /// were produced.
    pub fn mean(trajs: &[Trajectory<T>]) -> Result<Self> {
        let first = trajs.first().ok_or_else(|| Error::TrajectoryMismatch("no trajectories to average".into()))?;
        for t in &trajs[1..] {
            if t.times != first.times || t.classes != first.classes {
                return Err(Error::TrajectoryMismatch("grids or classes differ".into()));
            }
        }
        let m = T::from_count(trajs.len());
        let avg = |get: fn(&Trajectory<T>) -> &Vec<T>| -> Vec<T> {
            let mut acc = vec![T::zero(); get(first).len()];
            for t in trajs {
                for (a, &x) in acc.iter_mut().zip(get(t)) {
                    *a += x;
                }
            }
            acc.into_iter().map(|a| a / m).collect()
        };
        if first.has_classes() {
            Self::from_class_rows(first.classes.clone(), first.times.clone(), avg(|t| &t.class_i), avg(|t| &t.class_r))
        } else {
            Self::from_aggregates(first.times.clone(), avg(|t| &t.s), avg(|t| &t.i), avg(|t| &t.r))
        }
    }

    /// Checks the structural invariants: non-negative fractions, per-class
    /// `i + r <= mass` (when `class_mass` is given), `r` non-decreasing and
    /// `s` non-increasing, each up to `slack`.
    pub fn check_invariants(&self, class_mass: Option<&[T]>, slack: T) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidState(msg));
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return fail("time grid is not strictly increasing".into());
        }
        let w = self.classes.len();
        for t in 0..self.len() {
            let (ci, cr) = (self.class_infected(t), self.class_recovered(t));
            for c in 0..w {
                if ci[c] < -slack || cr[c] < -slack {
                    return fail(format!("negative fraction in class {} at index {t}", self.classes[c]));
                }
                if let Some(mass) = class_mass {
                    if ci[c] + cr[c] > mass[c] + slack {
                        return fail(format!("class {} exceeds its mass at index {t}", self.classes[c]));
                    }
                }
                if t > 0 && cr[c] < self.class_recovered(t - 1)[c] - slack {
                    return fail(format!("recovered fraction of class {} decreased at index {t}", self.classes[c]));
                }
            }
            if t > 0 && self.s[t] > self.s[t - 1] + slack {
                return fail(format!("susceptible fraction increased at index {t}"));
            }
            if t > 0 && self.r[t] < self.r[t - 1] - slack {
                return fail(format!("recovered fraction decreased at index {t}"));
            }
        }
        Ok(())
    }
}

/// `points` equally spaced times on `[0, t_max]`, the last one exactly `t_max`.
pub fn uniform_grid<T: Scalar>(t_max: T, points: usize) -> Result<Vec<T>> {
    if points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 grid points, got {points}")));
    }
    if !(t_max > T::zero()) || !t_max.is_finite() {
        return Err(Error::InvalidGrid(format!("horizon must be positive, got {t_max}")));
    }
    let last = T::from_count(points - 1);
    let mut grid: Vec<T> = (0..points).map(|j| t_max * T::from_count(j) / last).collect();
    grid[points - 1] = t_max;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_are_row_sums() {
        let c = vec![DegreeClass::new(1, 1), DegreeClass::new(2, 2)];
        let t = Trajectory::from_class_rows(c, vec![0.0, 1.0], vec![0.1f64, 0.2, 0.3, 0.1], vec![0.0, 0.0, 0.1, 0.2]).unwrap();
        assert!((t.i()[0] - 0.3).abs() < 1e-15);
        assert!((t.i()[1] - 0.4).abs() < 1e-15);
        assert!((t.r()[1] - 0.3).abs() < 1e-15);
        assert!((t.s()[1] - 0.3).abs() < 1e-15);
        assert_eq!(t.class_infected(1), &[0.3, 0.1]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let c = vec![DegreeClass::new(1, 1)];
        assert!(Trajectory::from_class_rows(c, vec![0.0, 1.0], vec![0.1], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn mean_of_one_is_identity() {
        let a = Trajectory::from_aggregates(vec![0.0, 1.0], vec![0.9, 0.5], vec![0.1, 0.3], vec![0.0, 0.2]).unwrap();
        assert_eq!(Trajectory::mean(std::slice::from_ref(&a)).unwrap(), a);
        let m = Trajectory::mean(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(m, a);
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(10.0f64, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[199], 10.0);
        assert!(uniform_grid(1.0f64, 1).is_err());
        assert!(uniform_grid(0.0f64, 5).is_err());
    }
}
