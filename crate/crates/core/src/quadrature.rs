//! One-dimensional quadrature rules and Legendre polynomials.
//!
//! Angular integrals use Gauss–Legendre rules on the two half-intervals
//! `[-1, 0)` and `(0, 1]` so that the grazing direction `μ = 0` is never a
//! node; frequency integrals use the composite trapezoidal rule.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of a quadrature rule on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∑ wᵢ f(xᵢ)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `P_l(x)` by the Bonnet recurrence.
pub fn legendre_eval(l: usize, x: f64) -> f64 {
    legendre_pair(l, x).0
}

/// `(P_l(x), P_{l-1}(x))`, with `P_{-1} = 0`.
fn legendre_pair(l: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for k in 0..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Values `P_0(x), …, P_l(x)`.
pub fn legendre_all(l: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(1.0);
    if l >= 1 {
        out.push(x);
    }
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// The `n`-point Gauss–Legendre rule mapped affinely onto `[lo, hi]`.
///
/// Nodes come from Newton's method on `P_n` started at the Chebyshev points,
/// so they are returned in increasing order and are exact to machine precision
/// well beyond the sizes used here.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("Gauss-Legendre rule needs at least one node"));
    }
    if !(lo < hi) {
        return Err(Error::invalid("quadrature interval must satisfy lo < hi"));
    }
    let nf = n as f64;
    let mut ref_nodes = alloc::vec![0.0; n];
    let mut ref_weights = alloc::vec![0.0; n];
    // roots are symmetric; solve for the positive half and mirror
    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let mut x = math::cos(core::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * nf));
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if math::abs(dx) <= NEWTON_TOL {
                break;
            }
        }
        // refresh derivative at the converged root
        let (p, p_prev) = legendre_pair(n, x);
        if x * x != 1.0 {
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ref_nodes[n - 1 - i] = x;
        ref_nodes[i] = -x;
        ref_weights[n - 1 - i] = w;
        ref_weights[i] = w;
    }
    if n % 2 == 1 {
        ref_nodes[n / 2] = 0.0;
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let nodes = ref_nodes.iter().map(|&x| mid + half * x).collect();
    let weights = ref_weights.iter().map(|&w| half * w).collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (lo, hi),
    })
}

/// Composite trapezoidal rule with `n` equidistant nodes including both ends.
pub fn trapezoid(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(Error::invalid("trapezoidal rule needs at least two nodes"));
    }
    if !(lo < hi) {
        return Err(Error::invalid("quadrature interval must satisfy lo < hi"));
    }
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect();
    let mut weights = alloc::vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_rule_is_midpoint() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, [0.0]);
        assert_eq!(r.weights, [2.0]);
    }

    #[test]
    fn two_point_rule_on_unit_interval() {
        let r = gauss_legendre(2, 0.0, 1.0).unwrap();
        let off = 0.5 / 3f64.sqrt();
        assert!((r.nodes[0] - (0.5 - off)).abs() < 1e-15);
        assert!((r.nodes[1] - (0.5 + off)).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
        assert!((r.weights[1] - 0.5).abs() < 1e-15);
        // exact for cubics
        assert!((r.integrate(|x| x * x * x) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn second_moment_of_twelve_point_rule() {
        let r = gauss_legendre(12, -1.0, 1.0).unwrap();
        assert!((r.integrate(|x| x * x) - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(matches!(
            gauss_legendre(0, -1.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn trapezoid_small_cases() {
        let r = trapezoid(2, 0.0, 1.0).unwrap();
        assert_eq!(r.nodes, [0.0, 1.0]);
        assert_eq!(r.weights, [0.5, 0.5]);
        let r = trapezoid(3, -10.0, 10.0).unwrap();
        assert_eq!(r.weights, [5.0, 10.0, 5.0]);
        assert!(trapezoid(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn trapezoid_lorentzian_mass() {
        let r = trapezoid(201, -10.0, 10.0).unwrap();
        let mass = r.integrate(|v| 1.0 / (core::f64::consts::PI * (v * v + 1.0)));
        let exact = 2.0 / core::f64::consts::PI * 10f64.atan();
        assert!((mass - exact).abs() < 1e-3, "{mass} vs {exact}");
        assert!((mass - 0.93655).abs() < 1e-3);
    }

    #[test]
    fn legendre_low_orders() {
        assert_eq!(legendre_eval(0, 0.7), 1.0);
        assert_eq!(legendre_eval(1, 0.7), 0.7);
    }

    #[test]
    fn legendre_degree_seven_matches_monomial_form() {
        let x: f64 = 0.3;
        let explicit = (429.0 * x.powi(7) - 693.0 * x.powi(5) + 315.0 * x.powi(3) - 35.0 * x) / 16.0;
        assert!((legendre_eval(7, x) - explicit).abs() < 1e-14);
        let all = legendre_all(7, x);
        assert_eq!(all.len(), 8);
        assert_eq!(all[7], legendre_eval(7, x));
    }

    #[test]
    fn large_rule_is_accurate() {
        let r = gauss_legendre(500, -1.0, 1.0).unwrap();
        assert!((r.weight_sum() - 2.0).abs() < 1e-13);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!((r.integrate(|x| x.powi(20)) - 2.0 / 21.0).abs() < 1e-13);
    }
}
