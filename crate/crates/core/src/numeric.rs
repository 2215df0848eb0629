//! Small numeric utilities shared by the physics modules.

use num_complex::Complex64;

/// Compensated (Kahan) accumulator. Used wherever a sum must not depend on
/// how work was chunked: contributions are always fed in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    /// Rescale the accumulated state (used by streaming log-sum-exp).
    #[inline]
    pub fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated complex accumulator: one Kahan stream per component.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        KahanComplex { re: KahanSum::new(), im: KahanSum::new() }
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn scale(&mut self, f: f64) {
        self.re.scale(f);
        self.im.scale(f);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Least-squares slope of `ln y` against `ln x`. All `x` and `y` must be
/// strictly positive; the caller guarantees at least two points.
pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    debug_assert!(points.len() >= 2);
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_sum_recovers_small_increments() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-16);
        }
        let exact = 1.0 + 1e-10;
        assert!((k.value() - exact).abs() < 1e-15, "{}", k.value());
    }

    #[test]
    fn log_log_slope_of_power_law_is_exact() {
        let pts: Vec<(f64, f64)> =
            (1..20).map(|i| (i as f64, 3.0 * (i as f64).powf(-2.0))).collect();
        assert!((log_log_slope(&pts) + 2.0).abs() < 1e-12);
    }
}
