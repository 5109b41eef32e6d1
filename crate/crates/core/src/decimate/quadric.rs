use std::ops::{Add, AddAssign};

use crate::geometry::{midpoint, Vec3};
use crate::scalar::Real;

/// Symmetric 4×4 error quadric stored as its upper triangle:
///
/// ```text
/// | a00 a01 a02 b0 |
/// | a01 a11 a12 b1 |
/// | a02 a12 a22 b2 |
/// | b0  b1  b2  c  |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadric<T> {
    pub coeffs: [T; 10],
}

/// How an optimal placement was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Solved,
    FirstEndpoint,
    SecondEndpoint,
    Midpoint,
}

impl<T: Real> Quadric<T> {
    pub fn zero() -> Self {
        Self { coeffs: [T::zero(); 10] }
    }

    /// Squared distance to the plane `n·x + d = 0` (with `|n| = 1`), scaled by `weight`.
    pub fn from_plane(n: Vec3<T>, d: T, weight: T) -> Self {
        let [a, b, c] = n;
        Self {
            coeffs: [
                a * a * weight,
                a * b * weight,
                a * c * weight,
                a * d * weight,
                b * b * weight,
                b * c * weight,
                b * d * weight,
                c * c * weight,
                c * d * weight,
                d * d * weight,
            ],
        }
    }

    /// `vᵀ Q v` for the homogeneous point `v = (p, 1)`.
    pub fn evaluate(&self, p: &Vec3<T>) -> T {
        let q = &self.coeffs;
        let [x, y, z] = *p;
        let two = T::lit(2.0);
        q[0] * x * x
            + two * q[1] * x * y
            + two * q[2] * x * z
            + two * q[3] * x
            + q[4] * y * y
            + two * q[5] * y * z
            + two * q[6] * y
            + q[7] * z * z
            + two * q[8] * z
            + q[9]
    }

    /// Minimizer of the quadric, if the 3×3 block is well conditioned.
    pub fn minimizer(&self) -> Option<Vec3<T>> {
        let q = &self.coeffs;
        let (a00, a01, a02, a11, a12, a22) = (q[0], q[1], q[2], q[4], q[5], q[7]);
        let (b0, b1, b2) = (q[3], q[6], q[8]);
        let c00 = a11 * a22 - a12 * a12;
        let c01 = a02 * a12 - a01 * a22;
        let c02 = a01 * a12 - a02 * a11;
        let det = a00 * c00 + a01 * c01 + a02 * c02;
        let scale = [a00, a01, a02, a11, a12, a22].into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if scale == T::zero() || det.abs() < T::lit(1e-12) * scale * scale * scale {
            return None;
        }
        let c11 = a00 * a22 - a02 * a02;
        let c12 = a01 * a02 - a00 * a12;
        let c22 = a00 * a11 - a01 * a01;
        let inv = T::one() / det;
        // x = -A⁻¹ b, A symmetric so its adjugate is symmetric
        let x = -(c00 * b0 + c01 * b1 + c02 * b2) * inv;
        let y = -(c01 * b0 + c11 * b1 + c12 * b2) * inv;
        let z = -(c02 * b0 + c12 * b1 + c22 * b2) * inv;
        let p = [x, y, z];
        p.iter().all(|v| v.is_finite()).then_some(p)
    }

    /// Best placement for collapsing the edge `a`–`b` under this quadric.
    pub fn placement(&self, a: &Vec3<T>, b: &Vec3<T>) -> (Vec3<T>, T, Placement) {
        if let Some(p) = self.minimizer() {
            return (p, self.evaluate(&p), Placement::Solved);
        }
        let m = midpoint(a, b);
        [
            (*a, Placement::FirstEndpoint),
            (*b, Placement::SecondEndpoint),
            (m, Placement::Midpoint),
        ]
        .into_iter()
        .map(|(p, how)| (p, self.evaluate(&p), how))
        .fold(None, |best: Option<(Vec3<T>, T, Placement)>, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
        .unwrap()
    }
}

impl<T: Real> AddAssign for Quadric<T> {
    fn add_assign(&mut self, rhs: Self) {
        for (l, r) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *l += r;
        }
    }
}

impl<T: Real> Add for Quadric<T> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_through(p: Vec3<f64>, n: Vec3<f64>) -> Quadric<f64> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let n = [n[0] / len, n[1] / len, n[2] / len];
        let d = -(n[0] * p[0] + n[1] * p[1] + n[2] * p[2]);
        Quadric::from_plane(n, d, 1.0)
    }

    #[test]
    fn plane_distance_squared() {
        let q = plane_through([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!((q.evaluate(&[3.0, -2.0, 4.0]) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn corner_of_three_planes_is_solved_exactly() {
        let q = plane_through([1.0, 2.0, 3.0], [1.0, 0.0, 0.0])
            + plane_through([1.0, 2.0, 3.0], [0.0, 1.0, 0.0])
            + plane_through([1.0, 2.0, 3.0], [0.0, 0.0, 1.0]);
        let (p, cost, how) = q.placement(&[0.0; 3], &[5.0; 3]);
        assert_eq!(how, Placement::Solved);
        assert!(cost.abs() < 1e-12);
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 2.0).abs() < 1e-12 && (p[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_falls_back() {
        // a single plane leaves a 2D family of minimizers
        let q = plane_through([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert!(q.minimizer().is_none());
        let (p, cost, how) = q.placement(&[0.0, 0.0, 1.0], &[0.0, 0.0, -0.5]);
        assert_eq!(how, Placement::Midpoint);
        assert!((cost - 0.0625).abs() < 1e-12);
        assert_eq!(p, [0.0, 0.0, 0.25]);
    }
}
