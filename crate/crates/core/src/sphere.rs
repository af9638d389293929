//! Points of the Riemann sphere and the chordal metric.

use std::fmt;

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub const ZERO: SpherePoint = SpherePoint::Finite(Complex64 { re: 0.0, im: 0.0 });
    pub const ONE: SpherePoint = SpherePoint::Finite(Complex64 { re: 1.0, im: 0.0 });
    pub const MINUS_ONE: SpherePoint = SpherePoint::Finite(Complex64 { re: -1.0, im: 0.0 });

    pub fn real(x: f64) -> Self {
        SpherePoint::Finite(Complex64::new(x, 0.0))
    }

    /// Maps non-finite complex values (overflow) to `Infinity`.
    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    /// `num / den` on the sphere; `None` when both vanish.
    pub fn from_ratio(num: Complex64, den: Complex64) -> Option<Self> {
        let zero = Complex64::new(0.0, 0.0);
        match (num == zero, den == zero) {
            (true, true) => None,
            (_, true) => Some(SpherePoint::Infinity),
            _ => Some(SpherePoint::from_complex(num / den)),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SpherePoint::Finite(z) if z.re == 0.0 && z.im == 0.0)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    /// Chordal distance on the unit-diameter-2 sphere; values lie in `[0, 2]`.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        match (*self, *other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
            (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
            }
        }
    }

    /// `1 / conj(z)`: reflection in the unit circle.
    pub fn reflect(&self) -> SpherePoint {
        match *self {
            SpherePoint::Infinity => SpherePoint::ZERO,
            SpherePoint::Finite(z) if z.norm_sqr() == 0.0 => SpherePoint::Infinity,
            SpherePoint::Finite(z) => SpherePoint::Finite(z / z.norm_sqr()),
        }
    }

    /// `[re, im]` for finite points, `"inf"` for infinity.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            SpherePoint::Finite(z) => serde_json::json!([z.re, z.im]),
            SpherePoint::Infinity => serde_json::json!("inf"),
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::from_complex(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            SpherePoint::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            SpherePoint::Finite(z) => {
                let mut seq = serializer.serialize_seq(Some(2))?;
                seq.serialize_element(&z.re)?;
                seq.serialize_element(&z.im)?;
                seq.end()
            }
            SpherePoint::Infinity => serializer.serialize_str("inf"),
        }
    }
}
