//! Forward-mode dual numbers, used to differentiate closed-form expressions exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by expressions evaluated both on plain floats and on dual numbers.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
}

impl Scalar for f64 {}

/// `value + deriv * e` with `e^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    pub fn variable(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }
}

impl Scalar for Dual {}

impl From<f64> for Dual {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value + rhs.value,
            deriv: self.deriv + rhs.deriv,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value - rhs.value,
            deriv: self.deriv - rhs.deriv,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value / rhs.value,
            deriv: (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            value: -self.value,
            deriv: -self.deriv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_rational_function() {
        // f(t) = (t^2 + 1) / (3 - t), f'(t) = (2t(3 - t) + t^2 + 1) / (3 - t)^2
        let f = |t: Dual| (t * t + Dual::from(1.0)) / (Dual::from(3.0) - t);
        let t = 0.7;
        let out = f(Dual::variable(t));
        assert!((out.value - (t * t + 1.0) / (3.0 - t)).abs() < 1e-15);
        let expected = (2.0 * t * (3.0 - t) + t * t + 1.0) / ((3.0 - t) * (3.0 - t));
        assert!((out.deriv - expected).abs() < 1e-14);
        assert_eq!((-Dual::variable(2.0)).deriv, -1.0);
    }
}
