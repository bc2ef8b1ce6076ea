//! Fixed-step classical Runge–Kutta.

use nalgebra::{DVector, SMatrix};

/// A state that can be advanced along a rate of the same shape.
pub trait FlowState: Clone {
    /// `self + h * rate`
    fn add_scaled(&self, rate: &Self, h: f64) -> Self;
}

impl<const R: usize, const C: usize> FlowState for SMatrix<f64, R, C> {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        self + rate * h
    }
}

impl FlowState for DVector<f64> {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        self + rate * h
    }
}

impl FlowState for f64 {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        self + rate * h
    }
}

impl<A: FlowState, B: FlowState> FlowState for (A, B) {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        (self.0.add_scaled(&rate.0, h), self.1.add_scaled(&rate.1, h))
    }
}

/// One RK4 step of size `dt`. `f` receives the stage offset in `[0, dt]`
/// and the stage state.
pub fn rk4_step<S, E, F>(x: &S, dt: f64, mut f: F) -> Result<S, E>
where
    S: FlowState,
    F: FnMut(f64, &S) -> Result<S, E>,
{
    let half = 0.5 * dt;
    let k1 = f(0.0, x)?;
    let k2 = f(half, &x.add_scaled(&k1, half))?;
    let k3 = f(half, &x.add_scaled(&k2, half))?;
    let k4 = f(dt, &x.add_scaled(&k3, dt))?;
    Ok(x
        .add_scaled(&k1, dt / 6.0)
        .add_scaled(&k2, dt / 3.0)
        .add_scaled(&k3, dt / 3.0)
        .add_scaled(&k4, dt / 6.0))
}
