//! Classical fixed-step fourth-order Runge–Kutta.

use crate::scalar::Scalar;

/// Reusable RK4 stage buffers for an `n`-dimensional system.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances `y` from `t` to `t + h` in place. `f(t, y, dy)` writes the
    /// derivative into `dy`.
    pub fn step<F>(&mut self, f: &mut F, t: T, y: &mut [T], h: T)
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let sixth = h / T::lit(6.0);

        f(t, y, &mut self.k1);
        for ((x, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *x = y + half * h * k;
        }
        f(t + half * h, &self.tmp, &mut self.k2);
        for ((x, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *x = y + half * h * k;
        }
        f(t + half * h, &self.tmp, &mut self.k3);
        for ((x, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *x = y + h * k;
        }
        f(t + h, &self.tmp, &mut self.k4);
        for (j, y) in y.iter_mut().enumerate() {
            *y += sixth * (self.k1[j] + two * self.k2[j] + two * self.k3[j] + self.k4[j]);
        }
    }
}

/// Number of equal substeps needed to cover `interval` with steps no longer
/// than `dt`. Intervals that are an exact multiple of `dt` up to roundoff
/// get exactly that multiple.
pub fn substeps<T: Scalar>(interval: T, dt: T) -> usize {
    let ratio = (interval / dt).as_f64();
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() };
    (n as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let mut rk = Rk4::<f64>::new(1);
        let mut y = [1.0];
        let h = 0.01;
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        for n in 0..100 {
            rk.step(&mut f, n as f64 * h, &mut y, h);
        }
        assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        // y' = -2 t y, y(0) = 1, y(1) = e^-1
        let solve = |n: usize| {
            let mut rk = Rk4::<f64>::new(1);
            let mut y = [1.0];
            let h = 1.0 / n as f64;
            let mut f = |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * t * y[0];
            for j in 0..n {
                rk.step(&mut f, j as f64 * h, &mut y, h);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = solve(10) / solve(20);
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn works_in_single_precision() {
        let mut rk = Rk4::<f32>::new(2);
        let mut y = [1.0f32, 0.0];
        let h = 0.01f32;
        // harmonic oscillator
        let mut f = |_t: f32, y: &[f32], dy: &mut [f32]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        for n in 0..314 {
            rk.step(&mut f, n as f32 * h, &mut y, h);
        }
        assert!((y[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn substep_counts() {
        assert_eq!(substeps(1.0f64, 0.1), 10);
        assert_eq!(substeps(10.0f64 / 199.0, 0.01), 6);
        assert_eq!(substeps(0.001f64, 0.01), 1);
        assert_eq!(substeps(0.3f64, 0.1), 3);
    }
}
