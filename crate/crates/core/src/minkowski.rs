//! Metric signature and four-vector arithmetic.
//!
//! Index 0 is the time axis. The metric enters every quadratic form through
//! the fixed signs `(+1, -1, -1, -1)`; natural units (`c = 1`) are assumed
//! throughout, so all four components of a vector carry the same unit.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// The diagonal metric signature `(+1, -1, -1, -1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSignature;

impl MetricSignature {
    /// Diagonal entries, time axis first.
    pub const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

    /// Sign of one axis. Panics if `axis > 3`.
    #[inline]
    pub fn sign(axis: usize) -> f64 {
        Self::SIGNS[axis]
    }
}

/// Shorthand used by the numeric kernels.
pub(crate) const THETA: [f64; 4] = MetricSignature::SIGNS;

/// A real four-vector, time component first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    #[inline]
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector([t, x, y, z])
    }

    /// Time component.
    #[inline]
    pub fn time(&self) -> f64 {
        self.0[0]
    }

    /// Spatial components.
    #[inline]
    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// Euclidean norm of the spatial part.
    pub fn spatial_norm(&self) -> f64 {
        self.spatial().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<[f64; 4]> for FourVector {
    fn from(c: [f64; 4]) -> Self {
        FourVector(c)
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FourVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        let mut out = [0.0; 4];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a + b;
        }
        FourVector(out)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        let mut out = [0.0; 4];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a - b;
        }
        FourVector(out)
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }
}

/// Signed Minkowski square `sum_mu theta_mu v_mu^2`.
///
/// Positive for timelike vectors, negative for spacelike, zero on the light
/// cone.
#[inline]
pub fn minkowski_square(v: &FourVector) -> f64 {
    let mut q = 0.0;
    for mu in 0..4 {
        q += THETA[mu] * v[mu] * v[mu];
    }
    q
}

/// True when `minkowski_square(v) > 0`.
#[inline]
pub fn is_timelike(v: &FourVector) -> bool {
    minkowski_square(v) > 0.0
}
