use super::{cr, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

/// Real Cartesian 3-vector.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        *self * (T::one() / self.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Spherical coordinates `(r, θ, φ)`.
    pub fn to_spherical(&self) -> (T, T, T) {
        let r = self.norm();
        if r == T::zero() {
            return (T::zero(), T::zero(), T::zero());
        }
        let theta = (self.z / r).max(-T::one()).min(T::one()).acos();
        let phi = self.y.atan2(self.x);
        (r, theta, phi)
    }

    pub fn to_complex(&self) -> CVec3<T> {
        CVec3([cr(self.x), cr(self.y), cr(self.z)])
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn cast<U: Real>(&self) -> Vec3<U> {
        let f = |v: T| U::from_f64(v.to_f64().unwrap()).unwrap();
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Complex Cartesian 3-vector (field values, spherical basis vectors).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CVec3<T>(pub [Complex<T>; 3]);

impl<T: Real> CVec3<T> {
    pub fn zero() -> Self {
        Self([cr(T::zero()); 3])
    }

    pub fn new(x: Complex<T>, y: Complex<T>, z: Complex<T>) -> Self {
        Self([x, y, z])
    }

    /// Bilinear product without conjugation.
    pub fn dot(&self, o: &Self) -> Complex<T> {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn dot_real(&self, o: &Vec3<T>) -> Complex<T> {
        self.0[0] * o.x + self.0[1] * o.y + self.0[2] * o.z
    }

    pub fn conj(&self) -> Self {
        Self([self.0[0].conj(), self.0[1].conj(), self.0[2].conj()])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl<T: Real> Add for CVec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> AddAssign for CVec3<T> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            self.0[i] = self.0[i] + o.0[i];
        }
    }
}

impl<T: Real> Sub for CVec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> Index<usize> for CVec3<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.0[i]
    }
}

impl<T: Real> IndexMut<usize> for CVec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.0[i]
    }
}

/// Complex 3×3 matrix, row-major; used for dyadic Green tensors.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CMat3<T>(pub [[Complex<T>; 3]; 3]);

impl<T: Real> CMat3<T> {
    pub fn zero() -> Self {
        Self([[cr(T::zero()); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = cr(T::one());
        }
        m
    }

    pub fn from_columns(cols: [CVec3<T>; 3]) -> Self {
        let mut m = Self::zero();
        for (j, col) in cols.iter().enumerate() {
            for i in 0..3 {
                m.0[i][j] = col.0[i];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] + o.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] - o.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|c| c.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    pub fn imag(&self) -> [[T; 3]; 3] {
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j].im;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVec3<T>) -> CVec3<T> {
        let mut out = CVec3::zero();
        for i in 0..3 {
            out.0[i] = self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2];
        }
        out
    }

    /// `a · M · b` for real vectors.
    pub fn bilinear(&self, a: &Vec3<T>, b: &Vec3<T>) -> Complex<T> {
        let av = a.as_array();
        let bv = b.as_array();
        let mut acc = cr(T::zero());
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + self.0[i][j] * (av[i] * bv[j]);
            }
        }
        acc
    }

    /// `R · M · Rᵀ` for a real rotation given row-major.
    pub fn rotate(&self, r: &[[T; 3]; 3]) -> Self {
        let mut tmp = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = cr(T::zero());
                for k in 0..3 {
                    acc = acc + self.0[k][j] * r[i][k];
                }
                tmp.0[i][j] = acc;
            }
        }
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = cr(T::zero());
                for k in 0..3 {
                    acc = acc + tmp.0[i][k] * r[j][k];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}
