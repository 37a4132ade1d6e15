//! Post-run analyses: the Levy-Gromov isoperimetric comparison and the
//! number-theoretic observations around primorials.

use num_bigint::BigUint;
use num_traits::{One, Pow};

use crate::error::{Error, Result};
use crate::primes::{factorize, first_primes};

/// Minimum of the scalar curvature of the SD metric over two-qubit states,
/// quoted as a literal (no derivation is attempted here).
pub const SCALAR_CURVATURE_MINIMUM: f64 = 3080.0;

/// The quoted value of `34κ` for the extension constant κ, stored as given.
pub const KAPPA_EXTENSION_34: f64 = 3934.06;

/// `ln Γ(d/2 + 1)` as an exact sum of logarithms.
fn ln_gamma_half_plus_one(d: u32) -> f64 {
    if d % 2 == 0 {
        (2..=d / 2).map(|i| f64::from(i).ln()).sum()
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!) with k = (d + 1)/2.
        let k = (d + 1) / 2;
        let ln_2k_fact: f64 = (2..=2 * k).map(|i| f64::from(i).ln()).sum();
        let ln_k_fact: f64 = (2..=k).map(|i| f64::from(i).ln()).sum();
        ln_2k_fact + 0.5 * std::f64::consts::PI.ln() - f64::from(k) * 4f64.ln() - ln_k_fact
    }
}

/// Volume `π^{d/2} / Γ(d/2 + 1)` of the unit ball in `R^d`.
pub fn unit_ball_volume(d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    Ok((0.5 * f64::from(d) * std::f64::consts::PI.ln() - ln_gamma_half_plus_one(d)).exp())
}

/// Area `d · V_d` of the unit sphere bounding the unit ball in `R^d`.
pub fn unit_sphere_area(d: u32) -> Result<f64> {
    Ok(f64::from(d) * unit_ball_volume(d)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsoperimetricReport {
    pub d: u32,
    /// Separable volume fraction `V_sep / V_total`.
    pub alpha: f64,
    /// `A_sep / V_total`.
    pub boundary_ratio: f64,
    pub ball_volume: f64,
    /// Boundary area of the sub-ball of volume `α · ball_volume`.
    pub s_alpha: f64,
    /// `s_alpha / ball_volume`.
    pub w: f64,
    pub holds: bool,
}

/// Compare the boundary-to-volume ratio with that of a flat ball region of
/// the same volume fraction.
///
/// The comparison region is the ball of radius `r = α^{1/d}` inside the unit
/// ball, so `s(α) = area(S^{d-1}) r^{d-1}` and `w = d α^{(d-1)/d}`.
pub fn levy_gromov_check(d: u32, v_total: f64, v_sep: f64, a_sep: f64) -> Result<IsoperimetricReport> {
    if !(v_total > 0.0 && v_sep > 0.0 && a_sep > 0.0) {
        return Err(Error::domain("volumes and area must be positive"));
    }
    let alpha = v_sep / v_total;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("volume fraction {alpha} outside (0, 1)")));
    }
    let ball_volume = unit_ball_volume(d)?;
    let r = alpha.powf(1.0 / f64::from(d));
    let s_alpha = unit_sphere_area(d)? * r.powi(d as i32 - 1);
    let w = s_alpha / ball_volume;
    let boundary_ratio = a_sep / v_total;
    Ok(IsoperimetricReport {
        d,
        alpha,
        boundary_ratio,
        ball_volume,
        s_alpha,
        w,
        holds: boundary_ratio > w,
    })
}

fn check_positive(n: &BigUint) -> Result<()> {
    if n == &BigUint::ZERO {
        Err(Error::domain("argument must be at least 1"))
    } else {
        Ok(())
    }
}

/// Euler's totient `φ(n)`.
pub fn totient(n: &BigUint) -> Result<BigUint> {
    check_positive(n)?;
    let mut out = BigUint::one();
    for (p, e) in factorize(n)? {
        out *= Pow::pow(&p, e - 1) * (&p - 1u32);
    }
    Ok(out)
}

/// `σ_k(n)`, the sum of the `k`-th powers of the divisors of `n`.
pub fn divisor_power_sum(n: &BigUint, k: u32) -> Result<BigUint> {
    check_positive(n)?;
    let mut out = BigUint::one();
    for (p, e) in factorize(n)? {
        if k == 0 {
            out *= e + 1;
        } else {
            let pk = Pow::pow(&p, k);
            out *= (Pow::pow(&pk, e + 1) - 1u32) / (&pk - 1u32);
        }
    }
    Ok(out)
}

/// Whether `σ_k(l) > φ(l)^{k+1}`, compared exactly.
pub fn labos_check(l: &BigUint, k: u32) -> Result<bool> {
    let sigma = divisor_power_sum(l, k)?;
    let phi = totient(l)?;
    Ok(sigma > Pow::pow(&phi, k + 1))
}

/// `(p_l#)^{1/p_l}`, evaluated as `exp(Σ_{i≤l} ln p_i / p_l)`.
pub fn primorial_limit_term(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("primorial index must be at least 1"));
    }
    let primes = first_primes(l);
    let p_l = *primes.last().expect("l >= 1") as f64;
    let ln_primorial: f64 = primes.iter().map(|&p| (p as f64).ln()).sum();
    Ok((ln_primorial / p_l).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactform::primorial;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1).unwrap() - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        let v35 = unit_ball_volume(35).unwrap();
        assert!((v35 / 3.34529e-7 - 1.0).abs() < 1e-5);
        assert!(unit_ball_volume(0).is_err());
    }

    #[test]
    fn levy_gromov_paper_inputs() {
        let r = levy_gromov_check(35, 1.77407e-6, 0.0013566 * 1.77407e-6, 1.09426e-6).unwrap();
        assert!((r.boundary_ratio - 0.616806).abs() < 1e-5);
        assert!((r.w / 0.05734 - 1.0).abs() < 0.02);
        assert!(r.holds);
        let near_one = levy_gromov_check(35, 1.0, 1.0 - 1e-12, 1.0).unwrap();
        assert!((near_one.w - 35.0).abs() < 1e-9);
        assert!(levy_gromov_check(35, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!(totient(&big(2310)).unwrap(), big(480));
        assert_eq!(totient(&big(1)).unwrap(), big(1));
        assert_eq!(divisor_power_sum(&big(6), 1).unwrap(), big(12));
        assert_eq!(divisor_power_sum(&big(12), 0).unwrap(), big(6));
        assert_eq!(divisor_power_sum(&big(13), 3).unwrap(), big(1 + 13u64.pow(3)));
        assert!(totient(&big(0)).is_err());
    }

    #[test]
    fn labos() {
        assert!(labos_check(&big(2310), 4).unwrap());
        assert!(!labos_check(&big(1), 3).unwrap());
        let p14 = primorial(14);
        assert!(labos_check(&p14, 19).unwrap());
        // Exact comparison: the property already holds at k = 18 and fails at 17.
        assert!(labos_check(&p14, 18).unwrap());
        assert!(!labos_check(&p14, 17).unwrap());
    }

    #[test]
    fn primorial_limit() {
        assert!((primorial_limit_term(1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((primorial_limit_term(4).unwrap() - 210f64.powf(1.0 / 7.0)).abs() < 1e-14);
        // Chebyshev's θ(p)/p approaches 1 slowly: the l = 1000 term is still
        // 0.036 below e and only l = 10⁴ comes within 0.01.
        assert!((primorial_limit_term(1000).unwrap() - 2.681895975853582).abs() < 1e-9);
        assert!((primorial_limit_term(10_000).unwrap() - std::f64::consts::E).abs() < 0.01);
    }
}
