//! Minimal field abstraction so the cross-ratio formulas can be evaluated on
//! plain complex numbers and on forward-mode dual numbers (for exact
//! Jacobians of the compatibility equations).

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;

    fn one() -> Self {
        Self::constant(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Field for Complex64 {
    fn constant(c: f64) -> Self {
        Complex64::new(c, 0.0)
    }
}

/// A complex value paired with its derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: Complex64,
    pub deriv: Complex64,
}

impl Dual {
    pub fn variable(value: Complex64) -> Self {
        Self {
            value,
            deriv: Complex64::new(1.0, 0.0),
        }
    }

    pub fn constant_of(value: Complex64) -> Self {
        Self {
            value,
            deriv: Complex64::new(0.0, 0.0),
        }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            deriv: self.deriv + o.deriv,
        }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            deriv: self.deriv - o.deriv,
        }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            value: self.value * o.value,
            deriv: self.deriv * o.value + self.value * o.deriv,
        }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        Self {
            value: q,
            deriv: (self.deriv - q * o.deriv) / o.value,
        }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            deriv: -self.deriv,
        }
    }
}

impl Field for Dual {
    fn constant(c: f64) -> Self {
        Self::constant_of(Complex64::new(c, 0.0))
    }
}
