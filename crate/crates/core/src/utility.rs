//! CRRA utility: `u(z) = z^(1-gamma)/(1-gamma)`, `ln z` at `gamma = 1`.
//!
//! The log case is handled as its own branch everywhere, never as a limit.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec<S> {
    gamma: S,
}

impl<S: Scalar> UtilitySpec<S> {
    pub fn new(gamma: S) -> Result<Self> {
        if !(gamma > S::zero()) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn log() -> Self {
        Self { gamma: S::one() }
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn is_log(&self) -> bool {
        self.gamma == S::one()
    }

    /// Utility of wealth `z > 0`.
    pub fn u(&self, z: S) -> Result<S> {
        positive("z", z)?;
        Ok(self.util(z))
    }

    /// Marginal utility `z^(-gamma)`.
    pub fn u_prime(&self, z: S) -> Result<S> {
        positive("z", z)?;
        Ok(self.marginal(z))
    }

    /// Inverse marginal utility `I(y) = y^(-1/gamma)`.
    pub fn inverse_marginal(&self, y: S) -> Result<S> {
        positive("y", y)?;
        Ok(self.inv(y))
    }

    pub(crate) fn util(&self, z: S) -> S {
        if self.is_log() {
            z.ln()
        } else {
            let e = S::one() - self.gamma;
            z.powf(e) / e
        }
    }

    pub(crate) fn marginal(&self, z: S) -> S {
        if self.is_log() {
            z.recip()
        } else {
            z.powf(-self.gamma)
        }
    }

    pub(crate) fn inv(&self, y: S) -> S {
        if self.is_log() {
            y.recip()
        } else {
            y.powf(-self.gamma.recip())
        }
    }
}

fn positive<S: Scalar>(name: &'static str, v: S) -> Result<()> {
    if v > S::zero() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_values() {
        let log = UtilitySpec::<f64>::log();
        assert_eq!(log.u(1.0).unwrap(), 0.0);
        assert!((log.u(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(log.inverse_marginal(2.0).unwrap(), 0.5);
        assert!((log.u_prime(1.8447).unwrap() - 0.54209).abs() < 1e-5);
        let pow = UtilitySpec::<f64>::new(2.0).unwrap();
        assert!((pow.u(2.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(UtilitySpec::new(0.0).is_err());
        assert!(UtilitySpec::new(-1.0).is_err());
        let log = UtilitySpec::<f64>::log();
        assert!(log.u(0.0).is_err());
        assert!(log.u_prime(-1.0).is_err());
        assert!(log.inverse_marginal(0.0).is_err());
    }

    #[test]
    fn marginal_matches_finite_difference() {
        for &g in &[0.3, 1.0, 2.0, 5.0] {
            let spec = UtilitySpec::new(g).unwrap();
            for i in 0..=60 {
                let z = 10f64.powf(-3.0 + i as f64 * 0.1);
                let h = z * 1e-5;
                let fd = (spec.util(z + h) - spec.util(z - h)) / (2.0 * h);
                let exact = spec.marginal(z);
                assert!(((fd - exact) / exact).abs() < 1e-6, "g={g} z={z}");
            }
        }
    }

    #[test]
    fn inverse_marginal_blows_up_at_zero() {
        let spec = UtilitySpec::new(2.0).unwrap();
        assert!(spec.inv(1e-12) > 1e5);
        assert!(spec.inv(1.0) > spec.inv(2.0));
    }

    #[test]
    fn power_utility_approaches_log_up_to_constant() {
        for &g in &[1.0 - 1e-8, 1.0 + 1e-8] {
            let spec = UtilitySpec::new(g).unwrap();
            for i in 0..=20 {
                let z = 0.1 + i as f64 * 0.495;
                let shifted = spec.util(z) - 1.0 / (1.0 - g);
                assert!((shifted - z.ln()).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_identity(g in 0.1f64..8.0, z in 1e-3f64..1e3) {
            let spec = UtilitySpec::new(g).unwrap();
            let back = spec.inv(spec.marginal(z));
            prop_assert!(((back - z) / z).abs() < 1e-12);
        }

        #[test]
        fn strictly_concave(g in 0.1f64..8.0, z in 1e-2f64..1e2) {
            let spec = UtilitySpec::new(g).unwrap();
            prop_assert!(spec.marginal(z) > 0.0);
            prop_assert!(spec.marginal(z * 1.01) < spec.marginal(z));
        }
    }
}
