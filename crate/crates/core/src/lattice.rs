//! Integer lattice geometry: sup-norm cubes and shells, and the outward-facing
//! half-cubes attached to boundary points.
//!
//! All geometry is exact integer arithmetic. Non-integer side lengths are
//! floored once by the caller (see [`half_cube_side`]).

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Result};

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[i64; 4]>);

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "lattice dimension must be at least 1");
        Point(SmallVec::from_slice(coords))
    }

    pub fn origin(d: usize) -> Self {
        assert!(d >= 1, "lattice dimension must be at least 1");
        Point(SmallVec::from_elem(0, d))
    }

    /// `k` times the unit vector along `axis`.
    pub fn axis(d: usize, axis: usize, k: i64) -> Self {
        let mut p = Point::origin(d);
        p.0[axis] = k;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn sup_norm(&self) -> i64 {
        sup_norm(&self.0)
    }

    pub fn norm2_sq(&self) -> i64 {
        norm2_sq(&self.0)
    }

    pub fn add(&self, other: &[i64]) -> Point {
        debug_assert_eq!(self.dim(), other.len());
        Point(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[i64]) -> Point {
        debug_assert_eq!(self.dim(), other.len());
        Point(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }
}

impl Deref for Point {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point::new(&v)
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(v: [i64; N]) -> Self {
        Point::new(&v)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[inline]
pub fn sup_norm(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).max().unwrap_or(0)
}

#[inline]
pub fn norm2_sq(x: &[i64]) -> i64 {
    x.iter().map(|c| c * c).sum()
}

#[inline]
pub fn sup_dist(x: &[i64], y: &[i64]) -> i64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).max().unwrap_or(0)
}

/// The set `{x : j - w < |x|_inf <= j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shell {
    j: i64,
    w: i64,
}

impl Shell {
    pub fn new(j: i64, w: i64) -> Result<Self> {
        if w <= 0 || w > j {
            return invalid(format!("shell needs 0 < w <= j (got j = {j}, w = {w})"));
        }
        Ok(Shell { j, w })
    }

    pub fn outer(&self) -> i64 {
        self.j
    }

    pub fn thickness(&self) -> i64 {
        self.w
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let n = sup_norm(x);
        self.j - self.w < n && n <= self.j
    }
}

/// Integer shell thickness for a real-valued `delta * r`: the ceiling, so the
/// shell is never thinner than the real one.
pub fn shell_thickness(delta_r: f64) -> i64 {
    (delta_r - 1e-9).ceil().max(1.0) as i64
}

/// Side length `floor(L^{rho_over})` of the half-cube, with a small guard so
/// that exact integer powers are not floored one short by rounding.
pub fn half_cube_side(l: i64, rho_over: f64) -> i64 {
    if l <= 0 {
        return 0;
    }
    ((l as f64).powf(rho_over) + 1e-9).floor() as i64
}

pub fn cube_contains(x: &[i64], r: i64) -> Result<bool> {
    if r < 0 {
        return invalid(format!("cube radius must be >= 0 (got {r})"));
    }
    Ok(sup_norm(x) <= r)
}

pub fn shell_contains(x: &[i64], shell: &Shell) -> bool {
    shell.contains(x)
}

/// Index (0-based) of the first coordinate attaining the sup-norm.
pub fn leading_index(x: &[i64]) -> Result<usize> {
    let n = sup_norm(x);
    if n == 0 {
        return invalid("leading index is undefined at the origin");
    }
    Ok(x.iter().position(|c| c.abs() == n).expect("max is attained"))
}

/// Membership in the outward-facing half-cube of side `side` attached to `x`.
pub fn half_cube_contains(y: &[i64], x: &[i64], side: i64) -> Result<bool> {
    let i = leading_index(x)?;
    if side < 0 {
        return invalid(format!("half-cube side must be >= 0 (got {side})"));
    }
    Ok(sup_dist(x, y) <= side && y[i].abs() >= x[i].abs() && y[i].signum() == x[i].signum())
}

/// Membership in the half-cube pushed out to the face of `Q_j`:
/// centre `x + sign(x_i)(j - |x|_inf) e_i`, and `|y_i| > j`.
pub fn shifted_half_cube_contains(y: &[i64], x: &[i64], j: i64, side: i64) -> Result<bool> {
    let i = leading_index(x)?;
    if side < 0 {
        return invalid(format!("half-cube side must be >= 0 (got {side})"));
    }
    let n = sup_norm(x);
    if n > j {
        return invalid(format!("base point has sup-norm {n} > j = {j}"));
    }
    let s = x[i].signum();
    let shift = s * (j - n);
    let far = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(k, (&a, &b))| {
            let c = if k == i { a + shift } else { a };
            (c - b).abs()
        })
        .max()
        .unwrap_or(0);
    Ok(far <= side && y[i].abs() > j && y[i].signum() == s)
}

/// A lattice region used for counting particles or cluster vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cube(i64),
    Shell(Shell),
    HalfCube { base: Point, side: i64 },
    ShiftedHalfCube { base: Point, j: i64, side: i64 },
    Complement(Box<Region>),
}

impl Region {
    pub fn complement(self) -> Region {
        Region::Complement(Box::new(self))
    }

    /// Checks that the region is well formed (e.g. half-cube base is not the origin).
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Cube(r) if *r < -1 => invalid(format!("cube radius {r} < -1")),
            Region::HalfCube { base, side } | Region::ShiftedHalfCube { base, side, .. } => {
                if base.is_origin() {
                    return invalid("half-cube base point must not be the origin");
                }
                if *side < 0 {
                    return invalid("half-cube side must be >= 0");
                }
                Ok(())
            }
            Region::Complement(inner) => inner.validate(),
            _ => Ok(()),
        }
    }

    /// Membership; the region must have passed [`Region::validate`].
    pub fn contains(&self, y: &[i64]) -> bool {
        match self {
            // Q_{-1} is empty.
            Region::Cube(r) => sup_norm(y) <= *r,
            Region::Shell(s) => s.contains(y),
            Region::HalfCube { base, side } => half_cube_contains(y, base, *side).unwrap_or(false),
            Region::ShiftedHalfCube { base, j, side } => {
                shifted_half_cube_contains(y, base, *j, *side).unwrap_or(false)
            }
            Region::Complement(inner) => !inner.contains(y),
        }
    }
}

/// Iterates over all points of `Q_r` in dimension `d` (lexicographic, first
/// coordinate slowest).
pub fn cube_points(d: usize, r: i64) -> impl Iterator<Item = Point> {
    let side = (2 * r + 1) as u64;
    let total = side.pow(d as u32);
    (0..total).map(move |mut idx| {
        let mut p = Point::origin(d);
        for k in (0..d).rev() {
            p.0[k] = (idx % side) as i64 - r;
            idx /= side;
        }
        p
    })
}
