//! Closed-form geometry of C² and the unit sphere S³.
//!
//! A point of C² is stored in its real coordinates `(x1, y1, x2, y2)` with
//! `z1 = x1 + i y1`, `z2 = x2 + i y2`. The real inner product `<z, w>` is the
//! Euclidean dot product of those coordinates and equals `Re (z, w)` for the
//! Hermitian product `(z, w) = z1 conj(w1) + z2 conj(w2)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Absolute slack for identities that hold exactly in closed form.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance used when checking that an input vector is tangent to S³.
pub const TANGENCY_TOL: f64 = 1e-8;

/// A vector of C² in real coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct C2 {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// A vector of C² attached at some base point.
pub type AmbientVector = C2;

impl C2 {
    pub const ZERO: C2 = C2 { x1: 0.0, y1: 0.0, x2: 0.0, y2: 0.0 };

    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        C2 { x1, y1, x2, y2 }
    }

    pub fn from_complex(z1: Complex64, z2: Complex64) -> Self {
        C2::new(z1.re, z1.im, z2.re, z2.im)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        C2::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn z1(self) -> Complex64 {
        Complex64::new(self.x1, self.y1)
    }

    pub fn z2(self) -> Complex64 {
        Complex64::new(self.x2, self.y2)
    }

    /// Real inner product `<self, other> = Re (self, other)`.
    pub fn dot(self, other: C2) -> f64 {
        self.x1 * other.x1 + self.y1 * other.y1 + self.x2 * other.x2 + self.y2 * other.y2
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(self) -> C2 {
        self * (1.0 / self.norm())
    }

    /// Multiplication by the imaginary unit, the complex structure of C².
    pub fn mul_i(self) -> C2 {
        C2::new(-self.y1, self.x1, -self.y2, self.x2)
    }

    /// `(-conj z2, conj z1)`.
    pub fn perp(self) -> C2 {
        C2::new(-self.x2, self.y2, self.x1, -self.y1)
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn nan() -> C2 {
        C2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    }
}

impl Add for C2 {
    type Output = C2;
    fn add(self, o: C2) -> C2 {
        C2::new(self.x1 + o.x1, self.y1 + o.y1, self.x2 + o.x2, self.y2 + o.y2)
    }
}

impl AddAssign for C2 {
    fn add_assign(&mut self, o: C2) {
        *self = *self + o;
    }
}

impl Sub for C2 {
    type Output = C2;
    fn sub(self, o: C2) -> C2 {
        C2::new(self.x1 - o.x1, self.y1 - o.y1, self.x2 - o.x2, self.y2 - o.y2)
    }
}

impl Neg for C2 {
    type Output = C2;
    fn neg(self) -> C2 {
        C2::new(-self.x1, -self.y1, -self.x2, -self.y2)
    }
}

impl Mul<f64> for C2 {
    type Output = C2;
    fn mul(self, s: f64) -> C2 {
        C2::new(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)
    }
}

impl Mul<C2> for f64 {
    type Output = C2;
    fn mul(self, v: C2) -> C2 {
        v * self
    }
}

/// Hermitian product `z1 conj(w1) + z2 conj(w2)`.
pub fn hermitian(z: C2, w: C2) -> Complex64 {
    z.z1() * w.z1().conj() + z.z2() * w.z2().conj()
}

/// Real inner product, `Re hermitian(z, w)`.
pub fn inner(z: C2, w: C2) -> f64 {
    z.dot(w)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of the 4×4 matrix with rows `a, b, c, d`.
pub fn det4(a: C2, b: C2, c: C2, d: C2) -> f64 {
    cross3(a, b, c).dot(d)
}

/// Ternary cross product in R⁴: the vector orthogonal to `a`, `b`, `c` with
/// `det[a, b, c, n] = |n|²` and `|n|` equal to the 3-volume they span.
pub fn cross3(a: C2, b: C2, c: C2) -> C2 {
    let rows = [a.to_array(), b.to_array(), c.to_array()];
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut minor = [[0.0; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            let mut col = 0;
            for (cidx, value) in row.iter().enumerate() {
                if cidx != k {
                    minor[r][col] = *value;
                    col += 1;
                }
            }
        }
        // cofactor of entry (3, k) in a 4x4 determinant
        let sign = if (3 + k) % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * det3(minor);
    }
    C2::from_array(out)
}

/// A point of S³, `|z1|² + |z2|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSpherePoint(C2);

impl UnitSpherePoint {
    /// Normalizes `v` onto S³. `v` must be nonzero.
    pub fn project(v: C2) -> Self {
        UnitSpherePoint(v.normalized())
    }

    /// Accepts `v` when it is within `tol` of unit norm, then renormalizes.
    pub fn try_new(v: C2, tol: f64) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > tol {
            return Err(GeomError::OffSphere { node: (0, 0), norm });
        }
        Ok(UnitSpherePoint(v * (1.0 / norm)))
    }

    /// Wraps a vector that is already known to be unit length.
    pub(crate) fn assume_unit(v: C2) -> Self {
        UnitSpherePoint(v)
    }

    pub fn from_complex(z1: Complex64, z2: Complex64) -> Self {
        UnitSpherePoint::project(C2::from_complex(z1, z2))
    }

    pub fn coords(self) -> C2 {
        self.0
    }
}

impl std::ops::Deref for UnitSpherePoint {
    type Target = C2;
    fn deref(&self) -> &C2 {
        &self.0
    }
}

/// Reeb field `xi(z) = i z`.
pub fn reeb(z: UnitSpherePoint) -> AmbientVector {
    z.mul_i()
}

pub fn perp(z: UnitSpherePoint) -> AmbientVector {
    z.perp()
}

/// The canonical orthonormal frame `(z^perp, i z^perp, i z)` of `T_z S³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientFrame {
    pub base: UnitSpherePoint,
    pub f1: AmbientVector,
    pub f2: AmbientVector,
    pub f3: AmbientVector,
}

impl AmbientFrame {
    /// Coframe `(w1(v), w2(v), w3(v))` with `wi(v) = <v, fi>`.
    pub fn coframe(&self, v: AmbientVector) -> [f64; 3] {
        [v.dot(self.f1), v.dot(self.f2), v.dot(self.f3)]
    }

    pub fn vectors(&self) -> [AmbientVector; 3] {
        [self.f1, self.f2, self.f3]
    }
}

pub fn canonical_frame(z: UnitSpherePoint) -> AmbientFrame {
    let f1 = z.perp();
    AmbientFrame { base: z, f1, f2: f1.mul_i(), f3: z.mul_i() }
}

/// Orthogonal projection of a tangent vector onto the contact plane.
pub fn contact_project(z: UnitSpherePoint, v: AmbientVector) -> Result<AmbientVector> {
    let residual = v.dot(*z).abs();
    if !(residual <= TANGENCY_TOL) {
        return Err(GeomError::NotTangent { residual });
    }
    let xi = reeb(z);
    Ok(v - xi * v.dot(xi))
}

/// Checks `D f3 = -w² f1 + w¹ f2` along the great circle `cos t z + sin t v`.
///
/// Returns the norm of the difference between the tangential part of the
/// central difference of `f3` at `t = 0` and the right-hand side. The error
/// is `O(h²)`.
pub fn frame_derivative_check(z: UnitSpherePoint, v: AmbientVector, h: f64) -> f64 {
    let along = |t: f64| z.coords() * t.cos() + v * t.sin();
    let f3 = |p: C2| p.mul_i();
    let diff = (f3(along(h)) - f3(along(-h))) * (1.0 / (2.0 * h));
    let tangential = diff - *z * diff.dot(*z);
    let frame = canonical_frame(z);
    let [w1, w2, _] = frame.coframe(v);
    let expected = frame.f1 * (-w2) + frame.f2 * w1;
    (tangential - expected).norm()
}
