//! Exact constants of the form `± (Π p^e) · π^k` and the closed-form volumes
//! built from them.
//!
//! Values are kept fully factored, so products and quotients are exact and
//! always reduced. Conversion to `f64` happens only through [`ExactValue::to_f64`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Div, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::primes::{factorize_u64, first_primes};

/// Dimensions with a tabulated truncated Haar volume.
pub const SUPPORTED_DIMENSIONS: [usize; 4] = [4, 6, 8, 9];

/// An exact real `sign · Π p^e · π^pi_power` with integer exponents.
///
/// Positive exponents form the numerator, negative ones the denominator, so
/// numerator and denominator are coprime by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactValue {
    negative: bool,
    factors: BTreeMap<u64, i32>,
    pi_power: i32,
}

impl ExactValue {
    pub fn one() -> Self {
        ExactValue {
            negative: false,
            factors: BTreeMap::new(),
            pi_power: 0,
        }
    }

    /// `π^k`.
    pub fn pi_pow(k: i32) -> Self {
        ExactValue {
            pi_power: k,
            ..Self::one()
        }
    }

    /// A nonzero machine integer.
    pub fn from_int(n: i64) -> Self {
        assert!(n != 0, "ExactValue cannot represent zero");
        let mut v = Self::one();
        v.negative = n < 0;
        for (p, e) in factorize_u64(n.unsigned_abs()) {
            v.factors.insert(p, e as i32);
        }
        v
    }

    /// `n / d` for nonzero machine integers.
    pub fn ratio(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    /// Build from `(prime, exponent)` pairs; exponents may be negative.
    pub fn from_factors(factors: &[(u64, i32)], pi_power: i32) -> Self {
        let mut v = Self::pi_pow(pi_power);
        for &(p, e) in factors {
            v.add_factor(p, e);
        }
        v
    }

    /// `n!` via Legendre's formula.
    pub fn factorial(n: u64) -> Self {
        let mut v = Self::one();
        for p in first_primes(n as usize).into_iter().take_while(|&p| p <= n) {
            let mut e = 0u64;
            let mut q = p;
            while q <= n {
                e += n / q;
                q = match q.checked_mul(p) {
                    Some(q) => q,
                    None => break,
                };
            }
            v.add_factor(p, e as i32);
        }
        v
    }

    fn add_factor(&mut self, p: u64, e: i32) {
        if e == 0 {
            return;
        }
        let entry = self.factors.entry(p).or_insert(0);
        *entry += e;
        if *entry == 0 {
            self.factors.remove(&p);
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn pi_power(&self) -> i32 {
        self.pi_power
    }

    pub fn recip(&self) -> Self {
        ExactValue {
            negative: self.negative,
            factors: self.factors.iter().map(|(&p, &e)| (p, -e)).collect(),
            pi_power: -self.pi_power,
        }
    }

    pub fn powi(&self, k: i32) -> Self {
        ExactValue {
            negative: self.negative && k % 2 != 0,
            factors: self
                .factors
                .iter()
                .filter(|_| k != 0)
                .map(|(&p, &e)| (p, e * k))
                .collect(),
            pi_power: self.pi_power * k,
        }
    }

    /// Prime factors of the integer numerator, ascending.
    pub fn numerator_factors(&self) -> Vec<(u64, u32)> {
        self.factors
            .iter()
            .filter(|(_, &e)| e > 0)
            .map(|(&p, &e)| (p, e as u32))
            .collect()
    }

    /// Prime factors of the integer denominator, ascending.
    pub fn denominator_factors(&self) -> Vec<(u64, u32)> {
        self.factors
            .iter()
            .filter(|(_, &e)| e < 0)
            .map(|(&p, &e)| (p, (-e) as u32))
            .collect()
    }

    pub fn numerator(&self) -> BigUint {
        expand(&self.numerator_factors())
    }

    pub fn denominator(&self) -> BigUint {
        expand(&self.denominator_factors())
    }

    /// Nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        let sign = if self.negative { -1.0 } else { 1.0 };
        let num = self.numerator().to_f64().unwrap_or(f64::INFINITY);
        let den = self.denominator().to_f64().unwrap_or(f64::INFINITY);
        let value = if num.is_finite() && den.is_finite() {
            num / den * PI.powi(self.pi_power)
        } else {
            self.ln_abs().exp()
        };
        sign * value
    }

    /// `ln |value|`, usable where the value over- or underflows `f64`.
    pub fn ln_abs(&self) -> f64 {
        self.factors
            .iter()
            .map(|(&p, &e)| e as f64 * (p as f64).ln())
            .sum::<f64>()
            + self.pi_power as f64 * PI.ln()
    }

    /// Human-readable factored form, e.g. `π^8 / (2^4 · 3 · 5 · 7)`.
    pub fn factored_form(&self) -> String {
        let render = |factors: &[(u64, u32)], pi: i32| -> String {
            let mut parts: Vec<String> = Vec::new();
            if pi == 1 {
                parts.push("π".into());
            } else if pi > 1 {
                parts.push(format!("π^{pi}"));
            }
            parts.extend(
                factors
                    .iter()
                    .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") }),
            );
            if parts.is_empty() {
                "1".into()
            } else {
                parts.join(" · ")
            }
        };
        let num = render(&self.numerator_factors(), self.pi_power.max(0));
        let den_f = self.denominator_factors();
        let den_pi = (-self.pi_power).max(0);
        let sign = if self.negative { "-" } else { "" };
        if den_f.is_empty() && den_pi == 0 {
            return format!("{sign}{num}");
        }
        let den = render(&den_f, den_pi);
        if den.contains(' ') {
            format!("{sign}{num} / ({den})")
        } else {
            format!("{sign}{num} / {den}")
        }
    }

    /// Form with multiplied-out integers, e.g. `π^8 / 1680`.
    pub fn expanded_form(&self) -> String {
        let render = |n: BigUint, pi: i32| -> String {
            let pi = match pi {
                0 => String::new(),
                1 => "π".into(),
                k => format!("π^{k}"),
            };
            match (n.is_one(), pi.is_empty()) {
                (true, false) => pi,
                (_, true) => n.to_string(),
                (false, false) => format!("{n}·{pi}"),
            }
        };
        let sign = if self.negative { "-" } else { "" };
        let num = render(self.numerator(), self.pi_power.max(0));
        let den = self.denominator();
        let den_pi = (-self.pi_power).max(0);
        if den.is_one() && den_pi == 0 {
            format!("{sign}{num}")
        } else {
            format!("{sign}{num} / {}", render(den, den_pi))
        }
    }
}

fn expand(factors: &[(u64, u32)]) -> BigUint {
    factors
        .iter()
        .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e))
}

impl Mul for &ExactValue {
    type Output = ExactValue;

    fn mul(self, rhs: &ExactValue) -> ExactValue {
        let mut out = self.clone();
        out.negative ^= rhs.negative;
        out.pi_power += rhs.pi_power;
        for (&p, &e) in &rhs.factors {
            out.add_factor(p, e);
        }
        out
    }
}

impl Mul for ExactValue {
    type Output = ExactValue;
    fn mul(self, rhs: ExactValue) -> ExactValue {
        &self * &rhs
    }
}

impl Div for &ExactValue {
    type Output = ExactValue;
    fn div(self, rhs: &ExactValue) -> ExactValue {
        self * &rhs.recip()
    }
}

impl Div for ExactValue {
    type Output = ExactValue;
    fn div(self, rhs: ExactValue) -> ExactValue {
        &self / &rhs
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.factored_form())
    }
}

/// The `l`-th primorial `p_l# = 2 · 3 · 5 ··· p_l` (`p_0# = 1`).
pub fn primorial(l: usize) -> BigUint {
    first_primes(l)
        .into_iter()
        .fold(BigUint::one(), |acc, p| acc * BigUint::from(p))
}

fn primorial_exact(l: usize) -> ExactValue {
    let f: Vec<(u64, i32)> = first_primes(l).into_iter().map(|p| (p, 1)).collect();
    ExactValue::from_factors(&f, 0)
}

/// Conjectured SD volume of separable states, `π^k / p_{k-1}#` with
/// `k = m(m-1)/2`.
pub fn conjectured_separable_volume(m: usize) -> Result<ExactValue> {
    if m < 2 {
        return Err(Error::UnsupportedDimension(m));
    }
    let k = m * (m - 1) / 2;
    Ok(ExactValue::pi_pow(k as i32) / primorial_exact(k - 1))
}

/// SD volume of the eigenvalue simplex,
/// `π^{n/2} Π_{i=1}^{n+1} Γ(i) / Γ(n²/2)`.
///
/// For odd `n`, `Γ(j + 1/2) = (2j)! √π / (4^j j!)` absorbs the half power
/// of π, so the result always has an integral π exponent.
pub fn diagonal_volume(n: usize) -> Result<ExactValue> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let n64 = n as u64;
    let gammas = (0..=n64).fold(ExactValue::one(), |acc, i| &acc * &ExactValue::factorial(i));
    let (gamma_den, pi_power) = if n % 2 == 0 {
        (ExactValue::factorial(n64 * n64 / 2 - 1), (n / 2) as i32)
    } else {
        let j = (n64 * n64 - 1) / 2;
        let g = ExactValue::factorial(2 * j)
            / (&ExactValue::from_factors(&[(2, 2 * j as i32)], 0) * &ExactValue::factorial(j));
        // π^{n/2} / √π
        (g, ((n - 1) / 2) as i32)
    };
    Ok(&(&gammas * &ExactValue::pi_pow(pi_power)) / &gamma_den)
}

/// Volume of the Euler-angle factor after the `m - 1` torus angles drop out.
///
/// Only the four tabulated dimensions are available.
pub fn truncated_haar_volume(m: usize) -> Result<ExactValue> {
    let v = match m {
        4 => ExactValue::from_factors(&[(2, -5), (3, -1)], 6),
        6 => ExactValue::from_factors(&[(2, -18), (3, -3), (5, -1)], 15),
        8 => ExactValue::from_factors(&[(2, -37), (3, -7), (5, -3), (7, -1)], 28),
        9 => ExactValue::from_factors(&[(2, -51), (3, -9), (5, -4), (7, -2)], 36),
        _ => return Err(Error::UnsupportedDimension(m)),
    };
    Ok(v)
}

/// SD volume of all `m × m` density matrices, `H_m · D_m`.
pub fn total_volume(m: usize) -> Result<ExactValue> {
    Ok(&truncated_haar_volume(m)? * &diagonal_volume(m)?)
}

/// Conjectured separability probability, `V_m^s / V_m^{s+n}`, for m = 4, 6.
pub fn conjectured_probability(m: usize) -> Result<ExactValue> {
    if m != 4 && m != 6 {
        return Err(Error::UnsupportedDimension(m));
    }
    Ok(&conjectured_separable_volume(m)? / &total_volume(m)?)
}

/// SD area of the boundary of all two-qubit states, `2 · 71 π^7 / (3^3 · 5 · 7 · 13)`.
pub fn qubit_pair_boundary_area() -> ExactValue {
    ExactValue::from_factors(&[(2, 1), (71, 1), (3, -3), (5, -1), (7, -1), (13, -1)], 7)
}

/// A named constant as emitted by the `constants` command.
#[derive(Clone, Debug)]
pub struct NamedConstant {
    pub name: String,
    pub value: ExactValue,
}

impl NamedConstant {
    fn new(name: impl Into<String>, value: ExactValue) -> Self {
        NamedConstant {
            name: name.into(),
            value,
        }
    }
}

/// All closed-form constants for dimension `m`.
pub fn constants_for(m: usize) -> Result<Vec<NamedConstant>> {
    let mut out = vec![
        NamedConstant::new(format!("H_{m}"), truncated_haar_volume(m)?),
        NamedConstant::new(format!("D_{m}"), diagonal_volume(m)?),
        NamedConstant::new(format!("V_{m}^(s+n)"), total_volume(m)?),
        NamedConstant::new(format!("V_{m}^s (conjectured)"), conjectured_separable_volume(m)?),
    ];
    if m == 4 || m == 6 {
        out.push(NamedConstant::new(
            format!("P_{m} (conjectured)"),
            conjectured_probability(m)?,
        ));
    }
    if m == 4 {
        out.push(NamedConstant::new("A_4^(s+n)", qubit_pair_boundary_area()));
    }
    Ok(out)
}
