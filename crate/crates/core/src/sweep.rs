//! Sweep grids, sweepable parameter fields and branch continuity sorting.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// A parameter that can be swept. Values are in rad/s except where noted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepField {
    /// Half split Δ = (Δa − Δb)/2, applied through ωa and ωb.
    Delta,
    /// Full split δ = Δa − Δb.
    Split,
    G,
    Gamma,
    GammaAb,
    Gamma0,
    U,
    Omega,
}

impl SweepField {
    pub fn name(self) -> &'static str {
        match self {
            SweepField::Delta => "Delta",
            SweepField::Split => "delta",
            SweepField::G => "g",
            SweepField::Gamma => "Gamma",
            SweepField::GammaAb => "gamma_ab",
            SweepField::Gamma0 => "gamma_0",
            SweepField::U => "U",
            SweepField::Omega => "Omega",
        }
    }

    pub fn apply(self, p: &SystemParams, value: f64) -> SystemParams {
        match self {
            SweepField::Delta => p.with_split(2.0 * value),
            SweepField::Split => p.with_split(value),
            SweepField::G => SystemParams { g: value, ..*p },
            SweepField::Gamma => SystemParams { gamma_shared: value, ..*p },
            SweepField::GammaAb => p.with_gamma_diff(value),
            SweepField::Gamma0 => p.with_gamma_mean(value),
            SweepField::U => SystemParams { kerr: value, ..*p },
            SweepField::Omega => SystemParams { rabi: value, ..*p },
        }
    }

    /// Current value of the field in `p`.
    pub fn read(self, p: &SystemParams) -> f64 {
        let d = p.derive();
        match self {
            SweepField::Delta => d.detuning_half_split,
            SweepField::Split => d.detuning_split,
            SweepField::G => p.g,
            SweepField::Gamma => p.gamma_shared,
            SweepField::GammaAb => d.gamma_diff,
            SweepField::Gamma0 => d.gamma_mean,
            SweepField::U => p.kerr,
            SweepField::Omega => p.rabi,
        }
    }
}

impl fmt::Display for SweepField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Delta" => SweepField::Delta,
            "delta" => SweepField::Split,
            "g" => SweepField::G,
            "Gamma" => SweepField::Gamma,
            "gamma_ab" => SweepField::GammaAb,
            "gamma_0" => SweepField::Gamma0,
            "U" => SweepField::U,
            "Omega" => SweepField::Omega,
            other => return Err(Error::Config(format!("unknown sweep field '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// Closed interval sampled at `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub scale: GridScale,
}

impl Grid {
    pub fn linear(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n, scale: GridScale::Linear }
    }

    pub fn log(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n, scale: GridScale::Log }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::Domain(format!("bad sweep range [{}, {}]", self.min, self.max)));
        }
        if self.n == 0 {
            return Err(Error::Domain("sweep needs at least one point".into()));
        }
        if self.min == self.max || self.n == 1 {
            return Ok(vec![self.min]);
        }
        let last = (self.n - 1) as f64;
        match self.scale {
            GridScale::Linear => Ok((0..self.n)
                .map(|i| {
                    let t = i as f64 / last;
                    if i + 1 == self.n {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * t
                    }
                })
                .collect()),
            GridScale::Log => {
                if self.min <= 0.0 {
                    return Err(Error::Domain("log grid needs a positive range".into()));
                }
                let (l0, l1) = (self.min.ln(), self.max.ln());
                Ok((0..self.n)
                    .map(|i| {
                        if i == 0 {
                            self.min
                        } else if i + 1 == self.n {
                            self.max
                        } else {
                            (l0 + (l1 - l0) * i as f64 / last).exp()
                        }
                    })
                    .collect())
            }
        }
    }
}

fn permutations<const N: usize>() -> Vec<[usize; N]> {
    fn rec<const N: usize>(k: usize, cur: &mut [usize; N], out: &mut Vec<[usize; N]>) {
        if k == N {
            out.push(*cur);
            return;
        }
        for i in k..N {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    let mut cur = [0usize; N];
    for (i, c) in cur.iter_mut().enumerate() {
        *c = i;
    }
    let mut out = Vec::new();
    rec(0, &mut cur, &mut out);
    out
}

/// Reorders each row so every branch moves as little as possible from the
/// previous row (nearest-neighbor matching over all assignments).
pub fn continuity_sort<const N: usize>(rows: &mut [[Complex64; N]]) {
    let perms = permutations::<N>();
    for i in 1..rows.len() {
        let prev = rows[i - 1];
        let cur = rows[i];
        let best = perms
            .iter()
            .min_by(|p, q| {
                let cost = |perm: &[usize; N]| -> f64 {
                    (0..N).map(|k| (cur[perm[k]] - prev[k]).norm_sqr()).sum()
                };
                cost(p).total_cmp(&cost(q))
            })
            .expect("at least one permutation");
        rows[i] = std::array::from_fn(|k| cur[best[k]]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        let v = Grid::linear(-3.0, 3.0, 7).values().unwrap();
        assert_eq!(v, vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let l = Grid::log(1e-3, 1e3, 7).values().unwrap();
        assert_eq!(l[0], 1e-3);
        assert_eq!(l[6], 1e3);
        assert!((l[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_grid_has_one_point() {
        assert_eq!(Grid::linear(2.0, 2.0, 50).values().unwrap(), vec![2.0]);
        assert!(Grid::linear(2.0, 1.0, 5).values().is_err());
        assert!(Grid::log(0.0, 1.0, 5).values().is_err());
    }

    #[test]
    fn field_round_trip() {
        for f in [
            SweepField::Delta,
            SweepField::Split,
            SweepField::G,
            SweepField::Gamma,
            SweepField::GammaAb,
            SweepField::Gamma0,
            SweepField::U,
            SweepField::Omega,
        ] {
            assert_eq!(f.name().parse::<SweepField>().unwrap(), f);
            let p = SystemParams::anti_pt(0.0, 0.4, 0.1, 1.0, 1e-3, 2.0);
            assert!((f.read(&f.apply(&p, 0.75)) - 0.75).abs() < 1e-15);
        }
        assert!("nope".parse::<SweepField>().is_err());
    }

    #[test]
    fn continuity_unswaps_crossing_branches() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        let mut rows = vec![[c(-1.0, 0.0), c(1.0, 0.0)], [c(0.9, 0.1), c(-0.9, 0.1)], [c(0.8, 0.2), c(-0.8, 0.2)]];
        continuity_sort(&mut rows);
        assert!(rows[1][0].re < 0.0 && rows[2][0].re < 0.0);
    }
}
