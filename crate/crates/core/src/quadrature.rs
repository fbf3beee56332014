//! Gauss-Legendre rules, the product sphere rule and a Halton sequence.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule1d { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

impl Rule1d {
    pub fn gauss_on(n: usize, a: f64, b: f64) -> Self {
        gauss_legendre(n).mapped(a, b)
    }

    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    /// Composite rule: `per_panel` Gauss nodes on each panel between consecutive breakpoints.
    pub fn composite(breaks: &[f64], per_panel: usize) -> Self {
        let base = gauss_legendre(per_panel);
        let mut out = Self { nodes: Vec::new(), weights: Vec::new() };
        for w in breaks.windows(2) {
            let p = base.mapped(w[0], w[1]);
            out.nodes.extend(p.nodes);
            out.weights.extend(p.weights);
        }
        out
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product rule on S^2: Gauss-Legendre in cos(theta) times the trapezoid rule in phi.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let gl = gauss_legendre(n_theta);
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (&c, &w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push([s * phi.cos(), s * phi.sin(), c]);
                weights.push(w * dphi);
            }
        }
        Self { directions, weights }
    }

    /// The default 48 x 96 rule.
    pub fn standard() -> Self {
        Self::product(48, 96)
    }

    /// Rule with `order` Gauss nodes in cos(theta) and twice as many in phi.
    pub fn of_order(order: usize) -> Self {
        Self::product(order, 2 * order)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Composite Simpson weights on a uniform grid with an odd node count.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count >= 3");
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

const PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

/// Radical-inverse Halton point `index` (1-based is customary) in `dim` dimensions.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len());
    PRIMES[..dim]
        .iter()
        .map(|&b| {
            let b = b as u64;
            let (mut i, mut f, mut r) = (index, 1.0, 0.0);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in [1, 2, 5, 12, 48] {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let deg_even = deg - 1;
            let got = r.integrate(|x| x.powi(deg_even as i32));
            assert!((got - 2.0 / (deg_even as f64 + 1.0)).abs() < 1e-13, "n={n}");
            assert!((r.integrate(|x| x.powi(deg as i32)) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_area_and_moments() {
        let s = SphereRule::standard();
        let area: f64 = s.weights.iter().sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        let zz: f64 = s.directions.iter().zip(&s.weights).map(|(d, w)| w * d[0] * d[0]).sum();
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_and_halton() {
        let w = simpson_weights(11, 0.1);
        let s: f64 = (0..11).map(|i| w[i] * (i as f64 * 0.1).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-14);
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 1), vec![0.25]);
    }
}
