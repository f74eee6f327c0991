//! The Bloch-Wigner dilogarithm and the Lobachevsky function.
//!
//! `D(z) = Im Li2(z) + arg(1 - z) log|z|` is real-analytic on `C \ {0, 1}` and
//! extends continuously to the Riemann sphere with `D(0) = D(1) = D(inf) = 0`.
//!
//! Evaluation first moves the argument inside its orbit under the six-fold
//! symmetry group of `D` to the representative of smallest modulus. That
//! representative always satisfies `|w| <= 1` and `Re w <= 1/2`. Small `w` use
//! the power series of `Li2` directly; the rest use the Bernoulli series in
//! `u = -log(1 - w)`, which converges for `|u| < 2 pi`.

use std::f64::consts::PI;
use std::sync::LazyLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inputs closer than this to 0, 1 or infinity evaluate to exactly 0.
pub const SINGULAR_CUTOFF: f64 = 1e-14;

const POWER_SERIES_RADIUS: f64 = 0.5;
const BERNOULLI_TERMS: usize = 14;
const ULP_SLACK: f64 = 10.0 * f64::EPSILON;

/// Numerators and denominators of B_2, B_4, ..., B_28.
const BERNOULLI_EVEN: [(f64, f64); BERNOULLI_TERMS] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
    (-23749461029.0, 870.0),
];

/// `B_2k / (2k + 1)!` for k = 1..=14.
static BERNOULLI_COEFFS: LazyLock<[f64; BERNOULLI_TERMS]> = LazyLock::new(|| {
    let mut out = [0.0; BERNOULLI_TERMS];
    let mut factorial = 1.0_f64;
    let mut n = 1.0_f64;
    for (k, &(num, den)) in BERNOULLI_EVEN.iter().enumerate() {
        // advance factorial from (2k - 1)! to (2k + 1)!
        factorial *= (n + 1.0) * (n + 2.0);
        n += 2.0;
        out[k] = num / den / factorial;
    }
    out
});

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    /// Wraps a finite complex number, rejecting NaN and infinite parts.
    pub fn finite(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() {
            Ok(Self::Finite(z))
        } else {
            Err(Error::Domain(format!("non-finite complex value {z}")))
        }
    }
}

impl TryFrom<Complex64> for ExtendedComplex {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        Self::finite(z)
    }
}

/// A value of `D` with an a-priori error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilogResult {
    pub value: f64,
    pub estimated_error: f64,
}

/// Evaluates the Bloch-Wigner dilogarithm on the Riemann sphere.
pub fn bloch_wigner(z: ExtendedComplex) -> DilogResult {
    match z {
        ExtendedComplex::Infinity => DilogResult {
            value: 0.0,
            estimated_error: 0.0,
        },
        ExtendedComplex::Finite(z) => evaluate(z),
    }
}

/// `D(z)` for a finite argument, without the error estimate.
pub fn bloch_wigner_value(z: Complex64) -> f64 {
    evaluate(z).value
}

fn singular_bound(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * (1.0 + r.ln().abs())
    }
}

fn evaluate(z: Complex64) -> DilogResult {
    let near_zero = z.norm();
    let near_one = (z - 1.0).norm();
    if near_zero < SINGULAR_CUTOFF || near_one < SINGULAR_CUTOFF {
        return DilogResult {
            value: 0.0,
            estimated_error: singular_bound(near_zero.min(near_one)),
        };
    }
    if near_zero > 1.0 / SINGULAR_CUTOFF {
        return DilogResult {
            value: 0.0,
            estimated_error: singular_bound(1.0 / near_zero),
        };
    }

    let (w, sign) = reduce(z);
    let (value, error) = if w.norm() <= POWER_SERIES_RADIUS {
        power_series(w)
    } else {
        bernoulli_series(w)
    };
    DilogResult {
        value: sign * value,
        estimated_error: error,
    }
}

/// The six images of `z` under `D(z) = D(1 - 1/z) = D(1/(1 - z)) = -D(1/z)
/// = -D(1 - z) = -D(z/(z - 1))`, each with its sign.
pub fn dilog_orbit(z: Complex64) -> [(Complex64, f64); 6] {
    let one = Complex64::new(1.0, 0.0);
    [
        (z, 1.0),
        (one - z.inv(), 1.0),
        ((one - z).inv(), 1.0),
        (z.inv(), -1.0),
        (one - z, -1.0),
        (z / (z - one), -1.0),
    ]
}

/// Picks the orbit element of smallest modulus.
fn reduce(z: Complex64) -> (Complex64, f64) {
    let images = dilog_orbit(z);
    let mut best = images[0];
    for &cand in &images[1..] {
        if cand.0.norm() < best.0.norm() {
            best = cand;
        }
    }
    best
}

// Both series return (D(w), error bound) for |w| <= 1, Re w <= 1/2.

fn power_series(w: Complex64) -> (f64, f64) {
    let r = w.norm();
    let mut power = w;
    let mut im_li2 = 0.0;
    let mut magnitude = 0.0;
    let mut n = 1.0_f64;
    loop {
        let term = power.im / (n * n);
        im_li2 += term;
        magnitude += term.abs();
        let next = power.norm() * r / ((n + 1.0) * (n + 1.0));
        if next < 1e-18 * magnitude.max(f64::MIN_POSITIVE) || n > 200.0 {
            break;
        }
        power *= w;
        n += 1.0;
    }
    let tail = r.powf(n + 1.0) / ((n + 1.0) * (n + 1.0) * (1.0 - r));
    let log_term = (Complex64::new(1.0, 0.0) - w).arg() * r.ln();
    let value = im_li2 + log_term;
    (value, tail + ULP_SLACK * (1.0 + magnitude + log_term.abs()))
}

fn bernoulli_series(w: Complex64) -> (f64, f64) {
    let u = -(Complex64::new(1.0, 0.0) - w).ln();
    let u2 = u * u;
    let mut li2 = u - u2 * 0.25;
    let mut magnitude = u.norm() + u2.norm() * 0.25;
    let mut power = u;
    for &coeff in BERNOULLI_COEFFS.iter() {
        power *= u2;
        let term = power * coeff;
        li2 += term;
        magnitude += term.norm();
    }
    let ratio = u.norm() / (2.0 * PI);
    let tail = 2.0 * ratio.powi(2 * BERNOULLI_TERMS as i32 + 3);
    let log_term = (Complex64::new(1.0, 0.0) - w).arg() * w.norm().ln();
    let value = li2.im + log_term;
    (value, tail + ULP_SLACK * (1.0 + magnitude + log_term.abs()))
}

/// The Lobachevsky function `L(theta) = D(e^{2 i theta}) / 2`.
pub fn lobachevsky(theta: f64) -> f64 {
    0.5 * bloch_wigner_value(Complex64::from_polar(1.0, 2.0 * theta))
}

fn check_regular(name: &str, z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("{name} = {z} is not finite")));
    }
    if z.norm() < SINGULAR_CUTOFF {
        return Err(Error::Domain(format!("{name} = {z} must not be 0")));
    }
    if (z - 1.0).norm() < SINGULAR_CUTOFF {
        return Err(Error::Domain(format!("{name} = {z} must not be 1")));
    }
    Ok(())
}

/// Absolute value of
/// `D(x) - D(y) + D(y/x) - D((1-y)/(1-x)) + D((1-1/y)/(1-1/x))`.
pub fn five_term_defect(x: Complex64, y: Complex64) -> Result<f64> {
    check_regular("x", x)?;
    check_regular("y", y)?;
    let one = Complex64::new(1.0, 0.0);
    let d = bloch_wigner_value;
    let sum =
        d(x) - d(y) + d(y / x) - d((one - y) / (one - x)) + d((one - y.inv()) / (one - x.inv()));
    Ok(sum.abs())
}

/// Absolute defect of the trisection identity
/// `D(z) = (D(z/z̄) + D((1-1/z)/(1-1/z̄)) + D((1-z̄)/(1-z))) / 2`.
pub fn trisection_defect(z: Complex64) -> Result<f64> {
    check_regular("z", z)?;
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "z = {z} is real; every trisection argument degenerates to 1"
        )));
    }
    let [a, b, c] = trisection_arguments(z);
    let d = bloch_wigner_value;
    Ok((d(z) - 0.5 * (d(a) + d(b) + d(c))).abs())
}

/// The three unimodular arguments of the trisection identity.
pub fn trisection_arguments(z: Complex64) -> [Complex64; 3] {
    let one = Complex64::new(1.0, 0.0);
    let zb = z.conj();
    [
        z / zb,
        (one - z.inv()) / (one - zb.inv()),
        (one - zb) / (one - z),
    ]
}
