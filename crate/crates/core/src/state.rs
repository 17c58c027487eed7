use num_complex::Complex64;
use serde::Serialize;

/// Steady-state mode amplitudes in the frame rotating at the drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub a: Complex64,
    pub b: Complex64,
    /// |b|², the measured response (spin current in the magnon setting).
    pub x: f64,
    pub stable: bool,
}

impl SteadyState {
    pub fn origin(stable: bool) -> Self {
        Self { a: Complex64::new(0.0, 0.0), b: Complex64::new(0.0, 0.0), x: 0.0, stable }
    }
}
