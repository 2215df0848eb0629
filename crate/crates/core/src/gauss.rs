//! Gauss-Legendre nodes and weights.
//!
//! Nodes are the roots of the Legendre polynomial, found by Newton iteration
//! on the three-term recurrence from the Tricomi initial guess. Double
//! precision is exact enough for every order used in this crate; the unit
//! tests pin polynomial exactness up to degree `2n - 1`.

use std::sync::OnceLock;

/// Quadrature rule on the canonical interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "a Gauss-Legendre rule needs at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's approximation to the i-th root (descending order).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let step = p / d;
                x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1e-3) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * d * d);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            // Odd rules have an exact central node.
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Legendre polynomial value and derivative at `x` by the recurrence
/// `(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let d = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// The shared 32-point base rule used by the composite momentum quadrature.
pub(crate) fn base_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &GaussLegendre, f: impl Fn(f64) -> f64) -> f64 {
        rule.nodes()
            .iter()
            .zip(rule.weights())
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2, 3, 8, 31, 32, 101] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}: {total}");
            assert_eq!(rule.len(), n);
        }
    }

    #[test]
    fn polynomials_integrate_exactly_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(8);
        for k in 0..16usize {
            let got = integrate(&rule, |x| x.powi(k as i32));
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-14, "degree {k}: {got} vs {exact}");
        }
        // Degree 2n is the first one a rule cannot represent.
        let got = integrate(&rule, |x| x.powi(16));
        assert!((got - 2.0 / 17.0).abs() > 1e-9);
    }

    #[test]
    fn base_rule_handles_oscillation_resolved_by_32_nodes() {
        let rule = base_rule();
        let got = integrate(rule, |x| (7.0 * x).cos());
        let exact = 2.0 * (7.0f64).sin() / 7.0;
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussLegendre::new(33);
        let nodes = rule.nodes();
        for i in 1..nodes.len() {
            assert!(nodes[i] > nodes[i - 1]);
        }
        for i in 0..nodes.len() {
            assert!((nodes[i] + nodes[nodes.len() - 1 - i]).abs() < 1e-15);
        }
    }
}
