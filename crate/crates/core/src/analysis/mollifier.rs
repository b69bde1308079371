//! The time mollifier `eta_h(s) = eta(s/h) / h` built on the standard bump.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{CbfError, Result};
use crate::quadrature::integrate_uniform;

const MASS_INTERVALS: usize = 4096;

fn raw_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // trapezoid on a compactly supported smooth function converges faster
        // than any power of the spacing
        let n = MASS_INTERVALS;
        let h = 2.0 / n as f64;
        (1..n).map(|i| raw_bump(-1.0 + i as f64 * h)).sum::<f64>() * h
    })
}

/// Normalized bump `eta(s) = exp(-1/(1-s^2)) / Z` on `(-1, 1)`.
pub fn bump(s: f64) -> f64 {
    raw_bump(s) / bump_norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    h: f64,
}

impl Mollifier {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CbfError::InvalidParameter(format!(
                "mollifier width must be positive, got {h}"
            )));
        }
        Ok(Self { h })
    }

    pub fn width(&self) -> f64 {
        self.h
    }

    /// `eta_h(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        bump(s / self.h) / self.h
    }

    /// `int_a^b eta_h(s) ds`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = ((a / self.h).max(-1.0), (b / self.h).min(1.0));
        if hi <= lo {
            return 0.0;
        }
        let n = MASS_INTERVALS;
        let step = (hi - lo) / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| bump(lo + i as f64 * step)).collect();
        integrate_uniform(step, &vals)
    }

    pub fn axioms(&self) -> MollifierAxioms {
        let n = 1000;
        let mut even_defect: f64 = 0.0;
        let mut min_value = f64::INFINITY;
        for i in 0..=n {
            let s = self.h * (i as f64 / n as f64) * 1.2;
            even_defect = even_defect.max((self.eval(s) - self.eval(-s)).abs() * self.h);
            min_value = min_value.min(self.eval(s)).min(self.eval(-s));
        }
        MollifierAxioms {
            even_defect,
            min_value,
            support_defect: self.eval(self.h).abs() + self.eval(-self.h).abs(),
            mass_defect: (self.mass(-self.h, self.h) - 1.0).abs(),
            half_mass_defect: (self.mass(0.0, self.h) - 0.5).abs(),
        }
    }
}

/// Measured deviations from the mollifier axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierAxioms {
    /// `max |eta(s) - eta(-s)|` on the profile scale.
    pub even_defect: f64,
    pub min_value: f64,
    /// `|eta_h(h)| + |eta_h(-h)|`.
    pub support_defect: f64,
    /// `|int eta_h - 1|`
    pub mass_defect: f64,
    /// `|int_0^h eta_h - 1/2|`
    pub half_mass_defect: f64,
}

impl MollifierAxioms {
    pub fn holds(&self, tol: f64) -> bool {
        self.even_defect <= tol
            && self.min_value >= 0.0
            && self.support_defect == 0.0
            && self.mass_defect <= tol
            && self.half_mass_defect <= tol
    }
}
