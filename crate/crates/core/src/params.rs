//! Physical parameter model of the driven two-mode system.
//!
//! Every rate and frequency is stored in angular units (rad/s). Values quoted
//! as ordinary frequencies (Hz) are converted once, at the I/O boundary, with
//! [`hz_to_rad`] and [`rad_to_hz`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to accept a parameter set as anti-PT symmetric.
pub const ANTI_PT_REL_TOL: f64 = 1e-9;

pub fn hz_to_rad(nu: f64) -> f64 {
    TAU * nu
}

pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Rates and frequencies of the two-mode model, all in rad/s.
///
/// Mode `b` is the driven anharmonic mode (the magnon Kittel mode in the
/// cavity-magnon realization); mode `a` is linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_d: f64,
    /// Coherent (Hermitian) coupling.
    pub g: f64,
    /// Dissipative coupling through the shared reservoir.
    pub gamma_shared: f64,
    /// Local damping of mode a; negative only for gain in PT analysis.
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Kerr coefficient (signed).
    pub kerr: f64,
    /// Rabi drive amplitude.
    pub rabi: f64,
}

/// Quantities derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedDetunings {
    /// Δa = ωa − ωd
    pub detuning_a: f64,
    /// Δb = ωb − ωd
    pub detuning_b: f64,
    /// Δ0 = (Δa + Δb)/2
    pub detuning_mean: f64,
    /// Δ = (Δa − Δb)/2
    pub detuning_half_split: f64,
    /// δ = Δa − Δb
    pub detuning_split: f64,
    /// γ0 = (γa + γb)/2
    pub gamma_mean: f64,
    /// γab = (γa − γb)/2
    pub gamma_diff: f64,
    /// γ = γ0 + Γ
    pub gamma_total: f64,
    /// β = Γ² − γ² − (δ/2)²
    pub beta: f64,
    /// I = Ω²
    pub intensity: f64,
}

impl SystemParams {
    /// Anti-PT symmetric set with the drive at the mean mode frequency.
    ///
    /// `carrier` is the drive frequency ωd; the modes sit at ωd ± δ/2.
    pub fn anti_pt(
        carrier: f64,
        split: f64,
        gamma_0: f64,
        gamma_shared: f64,
        kerr: f64,
        rabi: f64,
    ) -> Self {
        Self {
            omega_a: carrier + 0.5 * split,
            omega_b: carrier - 0.5 * split,
            omega_d: carrier,
            g: 0.0,
            gamma_shared,
            gamma_a: gamma_0,
            gamma_b: gamma_0,
            kerr,
            rabi,
        }
    }

    /// PT symmetric set: balanced loss (mode a) and gain (mode b), no
    /// dissipative coupling, modes degenerate at `carrier + detuning_mean`.
    pub fn pt(carrier: f64, detuning_mean: f64, g: f64, gamma_diff: f64) -> Self {
        Self {
            omega_a: carrier + detuning_mean,
            omega_b: carrier + detuning_mean,
            omega_d: carrier,
            g,
            gamma_shared: 0.0,
            gamma_a: gamma_diff,
            gamma_b: -gamma_diff,
            kerr: 0.0,
            rabi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("omega_d", self.omega_d),
            ("g", self.g),
            ("Gamma", self.gamma_shared),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("U", self.kerr),
            ("Omega", self.rabi),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite ({v})")));
        }
        for (name, v) in [("g", self.g), ("Gamma", self.gamma_shared), ("Omega", self.rabi)] {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn derive(&self) -> DerivedDetunings {
        let detuning_a = self.omega_a - self.omega_d;
        let detuning_b = self.omega_b - self.omega_d;
        let detuning_split = detuning_a - detuning_b;
        let gamma_mean = 0.5 * (self.gamma_a + self.gamma_b);
        let gamma_total = gamma_mean + self.gamma_shared;
        let half = 0.5 * detuning_split;
        DerivedDetunings {
            detuning_a,
            detuning_b,
            detuning_mean: 0.5 * (detuning_a + detuning_b),
            detuning_half_split: half,
            detuning_split,
            gamma_mean,
            gamma_diff: 0.5 * (self.gamma_a - self.gamma_b),
            gamma_total,
            beta: self.gamma_shared * self.gamma_shared - gamma_total * gamma_total - half * half,
            intensity: self.rabi * self.rabi,
        }
    }

    /// Largest magnitude among the frequencies and rates; the yardstick for
    /// relative tolerances.
    pub fn scale(&self) -> f64 {
        [
            self.omega_a,
            self.omega_b,
            self.omega_d,
            self.g,
            self.gamma_shared,
            self.gamma_a,
            self.gamma_b,
        ]
        .iter()
        .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()))
    }

    /// Reference rate for nondimensionalization: γ when positive, else Γ,
    /// else the largest nonzero rate.
    pub fn reference_rate(&self) -> f64 {
        let d = self.derive();
        if d.gamma_total > 0.0 {
            d.gamma_total
        } else if self.gamma_shared > 0.0 {
            self.gamma_shared
        } else {
            [self.g, self.gamma_a.abs(), self.gamma_b.abs(), d.detuning_a.abs(), d.detuning_b.abs()]
                .iter()
                .fold(0.0_f64, |m, v| m.max(*v))
                .max(f64::MIN_POSITIVE)
        }
    }

    /// Checks g = 0, γa = γb and ωa + ωb = 2ωd to [`ANTI_PT_REL_TOL`].
    pub fn check_anti_pt(&self) -> Result<()> {
        self.validate()?;
        let tol = ANTI_PT_REL_TOL * self.scale();
        if self.g > tol {
            return Err(Error::NotAntiPt(format!("g = {} is nonzero", self.g)));
        }
        if (self.gamma_a - self.gamma_b).abs() > tol {
            return Err(Error::NotAntiPt(format!(
                "gamma_a = {} differs from gamma_b = {}",
                self.gamma_a, self.gamma_b
            )));
        }
        if (self.omega_a + self.omega_b - 2.0 * self.omega_d).abs() > 2.0 * tol {
            return Err(Error::NotAntiPt(
                "modes are not symmetrically detuned about the drive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_anti_pt(&self) -> bool {
        self.check_anti_pt().is_ok()
    }

    /// Sets the split δ = Δa − Δb, keeping the mean detuning Δ0.
    pub fn with_split(&self, split: f64) -> Self {
        let mean = 0.5 * (self.omega_a + self.omega_b);
        Self { omega_a: mean + 0.5 * split, omega_b: mean - 0.5 * split, ..*self }
    }

    /// Sets γab, keeping γ0.
    pub fn with_gamma_diff(&self, gamma_diff: f64) -> Self {
        let mean = 0.5 * (self.gamma_a + self.gamma_b);
        Self { gamma_a: mean + gamma_diff, gamma_b: mean - gamma_diff, ..*self }
    }

    /// Sets γ0, keeping γab.
    pub fn with_gamma_mean(&self, gamma_mean: f64) -> Self {
        let diff = 0.5 * (self.gamma_a - self.gamma_b);
        Self { gamma_a: gamma_mean + diff, gamma_b: gamma_mean - diff, ..*self }
    }
}

/// Ω = κ·√P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConversion {
    /// rad/(s·√W)
    pub kappa_drive: f64,
}

impl DriveConversion {
    pub fn new(kappa_drive: f64) -> Result<Self> {
        if !(kappa_drive.is_finite() && kappa_drive > 0.0) {
            return Err(Error::Domain(format!("kappa_drive must be > 0, got {kappa_drive}")));
        }
        Ok(Self { kappa_drive })
    }

    pub fn rabi_from_power(&self, power: f64) -> Result<f64> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::Domain(format!("drive power must be >= 0, got {power}")));
        }
        Ok(self.kappa_drive * power.sqrt())
    }

    pub fn power_from_rabi(&self, rabi: f64) -> f64 {
        let r = rabi / self.kappa_drive;
        r * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_symmetric_case() {
        let p = SystemParams {
            omega_a: 5.0,
            omega_b: 5.0,
            omega_d: 5.0,
            g: 0.0,
            gamma_shared: 1.0,
            gamma_a: 0.0,
            gamma_b: 0.0,
            kerr: 0.0,
            rabi: 0.0,
        };
        let d = p.derive();
        assert_eq!(d.detuning_half_split, 0.0);
        assert_eq!(d.detuning_mean, 0.0);
        assert_eq!(d.detuning_split, 0.0);
        assert_eq!(d.gamma_mean, 0.0);
        assert_eq!(d.gamma_total, 1.0);
        assert_eq!(d.beta, 0.0);
    }

    #[test]
    fn lossy_contrast_case() {
        let rate = hz_to_rad(10e6);
        let p = SystemParams::anti_pt(0.0, 0.0, rate, rate, 0.0, 0.0);
        let d = p.derive();
        assert_eq!(d.gamma_mean, rate);
        assert!((d.gamma_total - hz_to_rad(20e6)).abs() <= 1e-15 * d.gamma_total);
    }

    #[test]
    fn anti_pt_split() {
        let split = hz_to_rad(1e6);
        let p = SystemParams::anti_pt(hz_to_rad(10e9), split, 0.0, 1.0, 0.0, 0.0);
        let d = p.derive();
        assert!(d.detuning_mean.abs() < 1e-5);
        assert!((d.detuning_half_split - hz_to_rad(0.5e6)).abs() < 1e-5);
        assert!(p.is_anti_pt());
        let exact = SystemParams::anti_pt(0.0, split, 0.3, 1.0, 0.0, 0.0).derive();
        assert_eq!(exact.detuning_mean, 0.0);
        assert_eq!(exact.gamma_diff, 0.0);
    }

    #[test]
    fn rabi_from_power_law() {
        let conv = DriveConversion::new(3.0).unwrap();
        assert_eq!(conv.rabi_from_power(0.0).unwrap(), 0.0);
        let p0 = 2.5e-6;
        assert_eq!(conv.rabi_from_power(4.0 * p0).unwrap(), 2.0 * conv.rabi_from_power(p0).unwrap());
        assert!(matches!(conv.rabi_from_power(-1.0), Err(Error::Domain(_))));
        assert!(DriveConversion::new(0.0).is_err());
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut p = SystemParams::anti_pt(0.0, 0.0, 0.0, 1.0, 0.0, 1.0);
        assert!(p.validate().is_ok());
        p.gamma_shared = -1.0;
        assert!(p.validate().is_err());
        p.gamma_shared = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn anti_pt_check() {
        let p = SystemParams::anti_pt(1e3, 2.0, 0.1, 1.0, 0.0, 1.0);
        assert!(p.is_anti_pt());
        assert!(!SystemParams { g: 0.1, ..p }.is_anti_pt());
        assert!(!SystemParams { gamma_a: 0.2, ..p }.is_anti_pt());
        assert!(!SystemParams { omega_d: 1e3 + 0.5, ..p }.is_anti_pt());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn derive_is_pure(
                wa in -10.0..10.0f64, wb in -10.0..10.0f64, wd in -10.0..10.0f64,
                gs in 0.0..5.0f64, ga in -2.0..2.0f64, gb in -2.0..2.0f64,
            ) {
                let p = SystemParams {
                    omega_a: wa, omega_b: wb, omega_d: wd, g: 0.0, gamma_shared: gs,
                    gamma_a: ga, gamma_b: gb, kerr: 0.0, rabi: 1.0,
                };
                let d1 = p.derive();
                let d2 = p.derive();
                prop_assert_eq!(d1, d2);
                prop_assert_eq!(d1.detuning_split, 2.0 * d1.detuning_half_split);
                // β from (Δa, Δb, γa, γb) directly
                let gamma = 0.5 * (ga + gb) + gs;
                let half = 0.5 * ((wa - wd) - (wb - wd));
                let beta = gs * gs - gamma * gamma - half * half;
                let scale = (gs * gs).max(gamma * gamma).max(half * half).max(1e-300);
                prop_assert!((beta - d1.beta).abs() <= 1e-12 * scale);
            }
        }
    }
}
