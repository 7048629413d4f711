//! Fixed-point coordinates.
//!
//! World units are abstract and stored as integer hundredths so that every
//! trace renders identically across platforms. The ground plane is `x` (east)
//! by `z` (north); `y` is height.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

/// A quantity in hundredths of a world unit (or of a degree).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(pub i64);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub fn from_units(units: i64) -> Self {
        Fixed(units * 100)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Rounds to the nearest hundredth, halves away from zero.
    pub fn from_f64(value: f64) -> Self {
        Fixed((value * 100.0).round() as i64)
    }

    pub fn is_whole(self) -> bool {
        self.0 % 100 == 0
    }

    /// Always two decimals: `510.00`.
    pub fn decimal(self) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        format!("{sign}{}.{:02}", abs / 100, abs % 100)
    }

    /// Integer when whole, otherwise two decimals: `10`, `3.30`.
    pub fn compact(self) -> String {
        if self.is_whole() {
            (self.0 / 100).to_string()
        } else {
            self.decimal()
        }
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.decimal())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedParseError(pub String);

impl fmt::Display for FixedParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid fixed-point number {:?}", self.0)
    }
}

impl std::error::Error for FixedParseError {}

impl FromStr for Fixed {
    type Err = FixedParseError;

    /// Accepts `-?digits(.d{1,2})?`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FixedParseError(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if body.contains('.') && (frac.is_empty() || frac.len() > 2) {
            return Err(err());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole: i64 = int.parse().map_err(|_| err())?;
        let mut cents: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| err())?
        };
        if frac.len() == 1 {
            cents *= 10;
        }
        let value = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(cents))
            .ok_or_else(err)?;
        Ok(Fixed(if neg { -value } else { value }))
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

/// A point on the ground plane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point2 {
    pub x: Fixed,
    pub z: Fixed,
}

impl Point2 {
    pub fn new(x: Fixed, z: Fixed) -> Self {
        Point2 { x, z }
    }

    pub fn units(x: i64, z: i64) -> Self {
        Point2::new(Fixed::from_units(x), Fixed::from_units(z))
    }

    /// Squared distance in hundredths².
    pub fn dist2(self, other: Point2) -> i128 {
        let dx = (self.x.0 - other.x.0) as i128;
        let dz = (self.z.0 - other.z.0) as i128;
        dx * dx + dz * dz
    }

    /// Euclidean distance, floored to a hundredth.
    pub fn dist(self, other: Point2) -> Fixed {
        Fixed(isqrt(self.dist2(other)) as i64)
    }
}

impl fmt::Display for Point2 {
    /// Scenario form: `500,10`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x.compact(), self.z.compact())
    }
}

impl FromStr for Point2 {
    type Err = FixedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        match parts.as_slice() {
            [x, z] => Ok(Point2::new(x.parse()?, z.parse()?)),
            _ => Err(FixedParseError(s.to_string())),
        }
    }
}

/// A 3D point or rotation `(x, y, z)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vec3 {
    pub x: Fixed,
    pub y: Fixed,
    pub z: Fixed,
}

impl Vec3 {
    pub fn new(x: Fixed, y: Fixed, z: Fixed) -> Self {
        Vec3 { x, y, z }
    }

    pub fn ground(self) -> Point2 {
        Point2::new(self.x, self.z)
    }

    pub fn components(self) -> [Fixed; 3] {
        [self.x, self.y, self.z]
    }

    /// Panel form: `(510.00, 0.00, 23.00)`.
    pub fn panel(self) -> String {
        format!("({}, {}, {})", self.x, self.y, self.z)
    }
}

impl fmt::Display for Vec3 {
    /// Scenario form: `510,0,23`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.x.compact(), self.y.compact(), self.z.compact())
    }
}

impl FromStr for Vec3 {
    type Err = FixedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        match parts.as_slice() {
            [x, y, z] => Ok(Vec3::new(x.parse()?, y.parse()?, z.parse()?)),
            _ => Err(FixedParseError(s.to_string())),
        }
    }
}

/// Integer square root, floored.
pub fn isqrt(n: i128) -> i128 {
    if n <= 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Division rounded half away from zero.
pub fn div_round(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    if num >= 0 {
        (num + den / 2) / den
    } else {
        -((-num + den / 2) / den)
    }
}

/// Compass bearing of `to` seen from `from`, in hundredths of a degree,
/// 0 = north (+z), 9000 = east (+x).
pub fn bearing(from: Point2, to: Point2) -> Fixed {
    let dx = (to.x.0 - from.x.0) as f64;
    let dz = (to.z.0 - from.z.0) as f64;
    let deg = dx.atan2(dz).to_degrees();
    let mut centi = (deg * 100.0).round() as i64;
    centi = centi.rem_euclid(36000);
    Fixed(centi)
}

/// Smallest absolute difference between two angles, hundredths of a degree.
pub fn angle_diff(a: Fixed, b: Fixed) -> Fixed {
    let d = (a.0 - b.0).rem_euclid(36000);
    Fixed(d.min(36000 - d))
}
