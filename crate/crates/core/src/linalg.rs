//! Fixed-size vectors and matrices over any [`Real`].
//!
//! Only what the geometry needs; matrices are row-major.

use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2<T = f64>(pub [T; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<T = f64>(pub [T; 3]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T = f64>(pub [[T; 2]; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T = f64>(pub [[T; 3]; 3]);

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self([x, y])
    }
    pub fn x(&self) -> T {
        self.0[0]
    }
    pub fn y(&self) -> T {
        self.0[1]
    }
    pub fn values(&self) -> Vec2<f64> {
        Vec2([self.0[0].value(), self.0[1].value()])
    }
}

impl Vec2<f64> {
    pub fn lift<T: Real>(&self) -> Vec2<T> {
        Vec2([T::from_f64(self.0[0]), T::from_f64(self.0[1])])
    }
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }
    pub fn zeros() -> Self {
        Self([T::zero(); 3])
    }
    pub fn x(&self) -> T {
        self.0[0]
    }
    pub fn y(&self) -> T {
        self.0[1]
    }
    pub fn z(&self) -> T {
        self.0[2]
    }
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    pub fn cross(&self, o: &Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = o.0;
        Self([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }
    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }
    pub fn scale(&self, k: T) -> Self {
        self.map(|x| x * k)
    }
    pub fn values(&self) -> Vec3<f64> {
        Vec3(self.0.map(Real::value))
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.value().is_finite())
    }
}

impl Vec3<f64> {
    pub fn lift<T: Real>(&self) -> Vec3<T> {
        Vec3(self.0.map(T::from_f64))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|x| -x)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self([[a, b], [c, d]])
    }
    pub fn det(&self) -> T {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }
    pub fn inverse(&self) -> Self {
        let inv = self.det().recip();
        let m = &self.0;
        Self([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ])
    }
    pub fn transpose(&self) -> Self {
        Self([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }
    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|r| r.map(|x| x * k)))
    }
    pub fn mul_vec(&self, v: &Vec2<T>) -> Vec2<T> {
        let m = &self.0;
        Vec2([
            m[0][0] * v.0[0] + m[0][1] * v.0[1],
            m[1][0] * v.0[0] + m[1][1] * v.0[1],
        ])
    }
    pub fn values(&self) -> Mat2<f64> {
        Mat2(self.0.map(|r| r.map(Real::value)))
    }
}

impl Mat2<f64> {
    pub fn lift<T: Real>(&self) -> Mat2<T> {
        Mat2(self.0.map(|r| r.map(T::from_f64)))
    }
    /// Both eigenvalues of a symmetric 2x2 matrix, ascending.
    pub fn sym_eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let mean = 0.5 * (m[0][0] + m[1][1]);
        let half = 0.5 * (m[0][0] - m[1][1]);
        let r = libm::sqrt(half * half + m[0][1] * m[1][0]);
        [mean - r, mean + r]
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = [[T::zero(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        Self(out)
    }
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        Self::diag(&Vec3([T::one(); 3]))
    }
    pub fn zeros() -> Self {
        Self([[T::zero(); 3]; 3])
    }
    pub fn diag(d: &Vec3<T>) -> Self {
        let z = T::zero();
        Self([[d.0[0], z, z], [z, d.0[1], z], [z, z, d.0[2]]])
    }
    pub fn from_cols(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Self {
        Self([
            [a.0[0], b.0[0], c.0[0]],
            [a.0[1], b.0[1], c.0[1]],
            [a.0[2], b.0[2], c.0[2]],
        ])
    }
    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }
    pub fn outer(a: &Vec3<T>, b: &Vec3<T>) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| a.0[i] * b.0[j])))
    }
    pub fn transpose(&self) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| self.0[j][i])))
    }
    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|r| r.map(|x| x * k)))
    }
    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        Vec3(core::array::from_fn(|i| {
            self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2]
        }))
    }
    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
    /// Inverse via the adjugate; the caller guarantees invertibility.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let inv_det = (m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0]).recip();
        Self(adj.map(|r| r.map(|x| x * inv_det)))
    }
    /// Quadratic form `vᵀ M v`.
    pub fn quad(&self, v: &Vec3<T>) -> T {
        v.dot(&self.mul_vec(v))
    }
    /// Top-left 2x2 block.
    pub fn upper_left(&self) -> Mat2<T> {
        Mat2([[self.0[0][0], self.0[0][1]], [self.0[1][0], self.0[1][1]]])
    }
    pub fn values(&self) -> Mat3<f64> {
        Mat3(self.0.map(|r| r.map(Real::value)))
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.value().is_finite())
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self(core::array::from_fn(|i| {
            core::array::from_fn(|j| {
                self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j]
            })
        }))
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| self.0[i][j] + o.0[i][j])))
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| self.0[i][j] - o.0[i][j])))
    }
}

impl Mat3<f64> {
    pub fn lift<T: Real>(&self) -> Mat3<T> {
        Mat3(self.0.map(|r| r.map(T::from_f64)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |a, &x| a.max(x.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// as the columns of the returned matrix (a proper rotation, det = +1).
pub fn sym_eigen3(a: &Mat3<f64>) -> ([f64; 3], Mat3<f64>) {
    let mut m = a.0;
    // symmetrize against tiny asymmetry
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    let mut v = Mat3::<f64>::identity().0;
    for _sweep in 0..64 {
        let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        let scale = m[0][0] * m[0][0] + m[1][1] * m[1][1] + m[2][2] * m[2][2] + off;
        if off <= 1e-36 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / libm::sqrt(t * t + 1.0);
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let vals = order.map(|i| m[i][i]);
    let mut vecs = Mat3(core::array::from_fn(|r| order.map(|c| v[r][c])));
    if vecs.det() < 0.0 {
        for r in 0..3 {
            vecs.0[r][2] = -vecs.0[r][2];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = Mat3([[2.0, 0.3, -0.1], [0.1, 1.5, 0.2], [-0.4, 0.0, 0.9]]);
        let p = a * a.inverse();
        let e = (p - Mat3::identity()).max_abs();
        assert!(e < 1e-14, "{e}");
    }

    #[test]
    fn jacobi_reconstructs_symmetric_matrix() {
        let a = Mat3([[0.3, 0.05, -0.02], [0.05, 0.2, 0.01], [-0.02, 0.01, 0.12]]);
        let (vals, vecs) = sym_eigen3(&a);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let rec = vecs * Mat3::diag(&Vec3(vals)) * vecs.transpose();
        assert!((rec - a).max_abs() < 1e-15);
        assert!((vecs.transpose() * vecs - Mat3::identity()).max_abs() < 1e-14);
        assert!((vecs.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_handles_diagonal_and_repeated() {
        let (vals, vecs) = sym_eigen3(&Mat3::diag(&Vec3([0.26, 0.26, 0.26])));
        assert_eq!(vals, [0.26; 3]);
        assert_eq!(vecs, Mat3::identity());
    }

    #[test]
    fn cross_product_is_orthogonal() {
        let a = Vec3([1.0, 2.0, 3.0]);
        let b = Vec3([-0.5, 0.3, 2.0]);
        let c = a.cross(&b);
        assert!(c.dot(&a).abs() < 1e-14 && c.dot(&b).abs() < 1e-14);
    }
}
