//! Small fixed-size vector and matrix types.

use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Cartesian 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Point from cylindrical coordinates (r, phi, z).
    pub fn from_cylindrical(r: f64, phi: f64, z: f64) -> Self {
        Vec3::new(r * libm::cos(phi), r * libm::sin(phi), z)
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        libm::fmax(libm::fabs(self.x), libm::fmax(libm::fabs(self.y), libm::fabs(self.z)))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Cylindrical radius sqrt(x² + y²).
    pub fn cyl_r(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    /// Cylindrical azimuth atan2(y, x).
    pub fn cyl_phi(self) -> f64 {
        libm::atan2(self.y, self.x)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3×3 matrix. For a jacobian, `m[i][j] = ∂_j f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Matrix whose columns are `a`, `b`, `c`.
    pub fn from_cols(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Mat3([[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// `M v`.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// `Mᵀ v`.
    pub fn apply_t(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.col(0).dot(v), self.col(1).dot(v), self.col(2).dot(v))
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |a, &b| libm::fmax(a, libm::fabs(b)))
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += o.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        out
    }
}

/// Third-order tensor `t[i][j][k] = ∂_k ∂_j f_i`.
pub type Tensor3 = [[[f64; 3]; 3]; 3];

/// 2×2 matrix helpers used by the torus chart code.
pub fn inverse2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

pub fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Row `k` keeps `L[k][k−d]` for `d = 0..=bw` at `data[k·(bw+1) + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: alloc::vec::Vec<f64>,
}

impl BandCholesky {
    /// Factor the matrix whose lower band is given by `entry(k, d) = M[k][k−d]`.
    /// Returns `None` when a pivot is not positive.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bw: usize, entry: F) -> Option<Self> {
        let w = bw + 1;
        let mut data = alloc::vec![0.0; n * w];
        for k in 0..n {
            let k0 = k.saturating_sub(bw);
            for j in k0..=k {
                let mut s = if k - j <= bw { entry(k, k - j) } else { 0.0 };
                for m in k0.max(j.saturating_sub(bw))..j {
                    s -= data[k * w + (k - m)] * data[j * w + (j - m)];
                }
                if j == k {
                    if !(s > 0.0) {
                        return None;
                    }
                    data[k * w] = libm::sqrt(s);
                } else {
                    data[k * w + (k - j)] = s / data[j * w];
                }
            }
        }
        Some(BandCholesky { n, bw, data })
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for k in 0..n {
            let mut s = rhs[k];
            for m in k.saturating_sub(bw)..k {
                s -= self.data[k * w + (k - m)] * rhs[m];
            }
            rhs[k] = s / self.data[k * w];
        }
        for k in (0..n).rev() {
            let mut s = rhs[k];
            for m in k + 1..(k + bw + 1).min(n) {
                s -= self.data[m * w + (m - k)] * rhs[m];
            }
            rhs[k] = s / self.data[k * w];
        }
    }
}

/// LU factors of a band matrix without pivoting, for diagonally dominant systems.
///
/// Row `k` keeps columns `k−bw..=k+bw` at `data[k·(2bw+1) + (col + bw − k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLu {
    n: usize,
    bw: usize,
    data: alloc::vec::Vec<f64>,
}

impl BandLu {
    /// Factor the matrix with `entry(row, col)` for `|row − col| ≤ bw`.
    /// Returns `None` on a vanishing pivot.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bw: usize, entry: F) -> Option<Self> {
        let w = 2 * bw + 1;
        let mut a = alloc::vec![0.0; n * w];
        for k in 0..n {
            for c in k.saturating_sub(bw)..(k + bw + 1).min(n) {
                a[k * w + c + bw - k] = entry(k, c);
            }
        }
        let at = |r: usize, c: usize| r * w + c + bw - r;
        for k in 0..n {
            let piv = a[at(k, k)];
            if !(piv.abs() > 0.0) || !piv.is_finite() {
                return None;
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let l = a[at(i, k)] / piv;
                a[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..end {
                        a[at(i, j)] -= l * a[at(k, j)];
                    }
                }
            }
        }
        Some(BandLu { n, bw, data: a })
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, 2 * self.bw + 1);
        let at = |r: usize, c: usize| r * w + c + bw - r;
        for k in 0..n {
            let mut s = rhs[k];
            for m in k.saturating_sub(bw)..k {
                s -= self.data[at(k, m)] * rhs[m];
            }
            rhs[k] = s;
        }
        for k in (0..n).rev() {
            let mut s = rhs[k];
            for m in k + 1..(k + bw + 1).min(n) {
                s -= self.data[at(k, m)] * rhs[m];
            }
            rhs[k] = s / self.data[at(k, k)];
        }
    }
}
