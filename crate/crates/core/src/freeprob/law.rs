//! Compactly supported spectral laws and their scalar Cauchy transforms.
//!
//! A continuous part with density `ρ` on `[a, b]` is integrated in the
//! angle `θ` of `t = c − h cos θ` (`c`, `h` the centre and half-width of
//! the support). The weight `W(cos θ) = ρ(t) h sin θ` is analytic for the
//! supported laws, and
//!
//! ```text
//! G(z) = (1/h) ∫₀^π [W(cos θ) − W(u₀)] / (cos θ − u₀) dθ
//!        + W(u₀) · π / (√(z − b) √(z − a)),     u₀ = (c − z)/h,
//! ```
//!
//! which stays accurate for `z` arbitrarily close to the support and on
//! either side of the real axis. The divided difference is evaluated in
//! closed form so it does not cancel when a node approaches `u₀`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq)]
pub enum LawKind {
    Semicircle {
        mean: f64,
        variance: f64,
    },
    /// Free Poisson law with rate `lambda` and jump size `scale`.
    MarchenkoPastur {
        lambda: f64,
        scale: f64,
    },
    Atomic {
        atoms: Vec<f64>,
        weights: Vec<f64>,
    },
    /// Equal-weight atoms on the samples.
    Empirical {
        samples: Vec<f64>,
    },
}

/// A probability measure on the real line with bounded support.
#[derive(Clone)]
pub struct Law {
    kind: LawKind,
    rule: Arc<OnceLock<Rule>>,
}

impl PartialEq for Law {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl std::fmt::Debug for Law {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.kind.fmt(f)
    }
}

/// Analytic weight `W(u)` of a continuous part, `u = cos θ`.
#[derive(Clone, Copy, Debug)]
enum Shape {
    /// `W(u) = (2/π)(1 − u²)`.
    Semicircle,
    /// `W(u) = κ[(p + u) + (1 − p²)/(p − u)]`, i.e. `κ(1 − u²)/(p − u)`.
    FreePoisson { kappa: f64, p: f64 },
}

impl Shape {
    fn w(&self, u: C64) -> C64 {
        match *self {
            Shape::Semicircle => (1.0 - u * u) * (2.0 / PI),
            Shape::FreePoisson { kappa, p } => (p + u + (1.0 - p * p) / (p - u)) * kappa,
        }
    }

    /// `(W(u) − W(u₀)) / (u − u₀)` for real `u`.
    fn divided_difference(&self, u: f64, u0: C64) -> C64 {
        match *self {
            Shape::Semicircle => (u0 + u) * (-2.0 / PI),
            Shape::FreePoisson { kappa, p } => (1.0 + (1.0 - p * p) / ((p - u0) * (p - u))) * kappa,
        }
    }
}

#[derive(Clone, Debug)]
struct Continuous {
    c: f64,
    h: f64,
    shape: Shape,
    /// Gauss–Legendre nodes in θ: `(cos θ_k, ω_k)`.
    nodes: Vec<(f64, f64)>,
}

impl Continuous {
    fn kernel(&self, z: C64) -> C64 {
        let (a, b) = (self.c - self.h, self.c + self.h);
        PI / ((z - b).sqrt() * (z - a).sqrt())
    }

    /// Far from the support the integrand is smooth and the subtraction
    /// would cancel, so plain quadrature is used there.
    fn is_far(&self, z: C64) -> bool {
        let (a, b) = (self.c - self.h, self.c + self.h);
        let dx = if z.re < a {
            a - z.re
        } else if z.re > b {
            z.re - b
        } else {
            0.0
        };
        dx.hypot(z.im) > self.h
    }

    fn cauchy_with(&self, nodes: &[(f64, f64)], z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        if self.is_far(z) {
            for &(u, w) in nodes {
                acc += self.shape.w(C64::new(u, 0.0)) * w / (z - (self.c - self.h * u));
            }
            return acc;
        }
        let u0 = (self.c - z) / self.h;
        for &(u, w) in nodes {
            acc += self.shape.divided_difference(u, u0) * w;
        }
        acc / self.h + self.shape.w(u0) * self.kernel(z)
    }

    fn cauchy(&self, z: C64) -> C64 {
        self.cauchy_with(&self.nodes, z)
    }

    /// `∫ t/(z − t) dμ(t) = zG(z) − 1` by direct quadrature; only used far
    /// from the support.
    fn first_moment_transform(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(u, w) in &self.nodes {
            let t = self.c - self.h * u;
            acc += self.shape.w(C64::new(u, 0.0)) * (w * t) / (z - t);
        }
        acc
    }

    fn mass(&self) -> f64 {
        self.nodes
            .iter()
            .map(|&(u, w)| self.shape.w(C64::new(u, 0.0)).re * w)
            .sum()
    }
}

#[derive(Clone, Debug)]
struct Rule {
    cont: Option<Continuous>,
    atoms: Vec<(f64, f64)>,
}

/// Gauss–Legendre nodes and weights on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (mid - half * x, half * w);
        out[n - 1 - i] = (mid + half * x, half * w);
    }
    out
}

/// Relative agreement required between successive node counts.
const QUAD_TOL: f64 = 1e-12;
const MIN_NODES: usize = 16;
const MAX_NODES: usize = 1 << 15;

fn theta_nodes(n: usize) -> Vec<(f64, f64)> {
    gauss_legendre(n, 0.0, PI)
        .into_iter()
        .map(|(t, w)| (t.cos(), w))
        .collect()
}

/// Doubles the node count until the transform agrees between successive
/// counts on probe points hugging the support.
fn adapt(mut cont: Continuous) -> Continuous {
    let (a, b) = (cont.c - cont.h, cont.c + cont.h);
    let mut probes = Vec::new();
    for frac in [0.0, 0.001, 0.1, 0.37, 0.5, 0.83, 0.999, 1.0] {
        for dy in [1.0, 1e-3, 1e-8] {
            probes.push(C64::new(a + frac * (b - a), dy * cont.h));
        }
    }
    for r in [1.01, 1.5, 3.0] {
        probes.push(C64::new(b + r * cont.h, 0.0));
        probes.push(C64::new(cont.c, r * cont.h));
    }
    probes.push(C64::new(a - 1e-6 * cont.h, 0.0));
    probes.push(C64::new(b + 1e-6 * cont.h, 0.0));
    let mut n = MIN_NODES;
    let mut prev = theta_nodes(n);
    loop {
        let next = theta_nodes(2 * n);
        let worst = probes
            .iter()
            .map(|&z| {
                let (g1, g2) = (cont.cauchy_with(&prev, z), cont.cauchy_with(&next, z));
                (g1 - g2).norm() / (1.0 + g2.norm())
            })
            .fold(0.0, f64::max);
        if worst < QUAD_TOL || 2 * n >= MAX_NODES {
            cont.nodes = prev;
            return cont;
        }
        n *= 2;
        prev = next;
    }
}

impl Law {
    fn from_kind(kind: LawKind) -> Self {
        Law {
            kind,
            rule: Arc::new(OnceLock::new()),
        }
    }

    pub fn semicircle(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "semicircle needs variance > 0, got {variance}"
            )));
        }
        Ok(Law::from_kind(LawKind::Semicircle { mean, variance }))
    }

    pub fn marchenko_pastur(lambda: f64, scale: f64) -> Result<Self> {
        if !(lambda > 0.0 && scale > 0.0 && lambda.is_finite() && scale.is_finite()) {
            return Err(Error::InvalidLaw(
                "marchenko_pastur needs lambda > 0 and scale > 0".into(),
            ));
        }
        Ok(Law::from_kind(LawKind::MarchenkoPastur { lambda, scale }))
    }

    pub fn atomic(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidLaw(
                "atoms and weights must be nonempty and of equal length".into(),
            ));
        }
        if atoms.iter().any(|a| !a.is_finite())
            || weights.iter().any(|w| !(*w > 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidLaw(
                "atoms must be finite and weights positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
        }
        Ok(Law::from_kind(LawKind::Atomic { atoms, weights }))
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidLaw(
                "empirical law needs finite samples".into(),
            ));
        }
        Ok(Law::from_kind(LawKind::Empirical { samples }))
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    fn rule(&self) -> &Rule {
        self.rule.get_or_init(|| match &self.kind {
            LawKind::Semicircle { mean, variance } => Rule {
                cont: Some(adapt(Continuous {
                    c: *mean,
                    h: 2.0 * variance.sqrt(),
                    shape: Shape::Semicircle,
                    nodes: Vec::new(),
                })),
                atoms: Vec::new(),
            },
            LawKind::MarchenkoPastur { lambda, scale } => {
                let s = lambda.sqrt();
                let c = scale * (1.0 + lambda);
                let h = 2.0 * scale * s;
                let p = (1.0 + lambda) / (2.0 * s);
                let cont = adapt(Continuous {
                    c,
                    h,
                    shape: Shape::FreePoisson { kappa: s / PI, p },
                    nodes: Vec::new(),
                });
                let atoms = if *lambda < 1.0 {
                    vec![(0.0, 1.0 - lambda)]
                } else {
                    Vec::new()
                };
                Rule {
                    cont: Some(cont),
                    atoms,
                }
            }
            LawKind::Atomic { atoms, weights } => Rule {
                cont: None,
                atoms: atoms.iter().copied().zip(weights.iter().copied()).collect(),
            },
            LawKind::Empirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                Rule {
                    cont: None,
                    atoms: samples.iter().map(|&s| (s, w)).collect(),
                }
            }
        })
    }

    /// Smallest interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        let rule = self.rule();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let Some(c) = &rule.cont {
            lo = lo.min(c.c - c.h);
            hi = hi.max(c.c + c.h);
        }
        for &(a, _) in &rule.atoms {
            lo = lo.min(a);
            hi = hi.max(a);
        }
        (lo, hi)
    }

    /// Atoms with their weights.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.rule().atoms
    }

    /// Support interval of the continuous part, if any.
    pub fn continuous_support(&self) -> Option<(f64, f64)> {
        self.rule().cont.as_ref().map(|c| (c.c - c.h, c.c + c.h))
    }

    /// Density of the continuous part (zero outside its support).
    pub fn density(&self, t: f64) -> f64 {
        let Some(c) = &self.rule().cont else {
            return 0.0;
        };
        let u = (c.c - t) / c.h;
        if !(-1.0..=1.0).contains(&u) || u.abs() == 1.0 {
            return 0.0;
        }
        let sin = (1.0 - u * u).sqrt();
        c.shape.w(C64::new(u, 0.0)).re / (c.h * sin)
    }

    /// Quadrature mass of the continuous part plus the atom weights.
    pub fn total_mass(&self) -> f64 {
        let rule = self.rule();
        rule.cont.as_ref().map_or(0.0, Continuous::mass)
            + rule.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            LawKind::Semicircle { mean, .. } => *mean,
            LawKind::MarchenkoPastur { lambda, scale } => lambda * scale,
            LawKind::Atomic { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| a * w).sum()
            }
            LawKind::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Number of quadrature nodes used for the continuous part.
    pub fn node_count(&self) -> usize {
        self.rule().cont.as_ref().map_or(0, |c| c.nodes.len())
    }

    /// Cauchy transform `∫ (z − t)⁻¹ dμ(t)` for `z` off the support.
    pub fn cauchy(&self, z: C64) -> C64 {
        let rule = self.rule();
        let mut g = rule
            .cont
            .as_ref()
            .map_or(C64::new(0.0, 0.0), |c| c.cauchy(z));
        for &(a, w) in &rule.atoms {
            g += w / (z - a);
        }
        g
    }

    /// `h(z) = 1/G(z) − z`. Away from the support it is evaluated as
    /// `−G₁(z)/G(z)` with `G₁(z) = ∫ t/(z − t) dμ(t)`, which does not cancel.
    pub fn h(&self, z: C64) -> C64 {
        let rule = self.rule();
        let far = rule.cont.as_ref().map_or(true, |c| c.is_far(z));
        let g = self.cauchy(z);
        if !far {
            return g.inv() - z;
        }
        let mut g1 = rule
            .cont
            .as_ref()
            .map_or(C64::new(0.0, 0.0), |c| c.first_moment_transform(z));
        for &(a, w) in &rule.atoms {
            g1 += w * a / (z - a);
        }
        -g1 / g
    }

    /// Distance from `z` to the support, measured so that `0` means `z`
    /// lies on it.
    pub fn distance_to_support(&self, z: C64) -> f64 {
        let rule = self.rule();
        let mut d = f64::INFINITY;
        if let Some(c) = &rule.cont {
            let (a, b) = (c.c - c.h, c.c + c.h);
            let dx = if z.re < a {
                a - z.re
            } else if z.re > b {
                z.re - b
            } else {
                0.0
            };
            d = d.min(dx.hypot(z.im));
        }
        for &(a, _) in &rule.atoms {
            d = d.min((z - a).norm());
        }
        d
    }

    /// Quadrature nodes `(t_k, weight_k)` of the continuous part followed by
    /// the atoms; integrates smooth functions against the law.
    pub fn discretization(&self, nodes: usize) -> Vec<(f64, f64)> {
        let rule = self.rule();
        let mut out = Vec::new();
        if let Some(c) = &rule.cont {
            for (u, w) in theta_nodes(nodes) {
                out.push((c.c - c.h * u, c.shape.w(C64::new(u, 0.0)).re * w));
            }
        }
        out.extend_from_slice(&rule.atoms);
        out
    }

    /// Draws one sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let rule = self.rule();
        let cont_mass = rule.cont.as_ref().map_or(0.0, Continuous::mass);
        let mut pick =
            rng.random::<f64>() * (cont_mass + rule.atoms.iter().map(|a| a.1).sum::<f64>());
        if let Some(c) = &rule.cont {
            if pick < cont_mass {
                // Rejection sampling of θ against the bounded weight W(cos θ).
                let bound = (0..=200)
                    .map(|k| c.shape.w(C64::new((PI * k as f64 / 200.0).cos(), 0.0)).re)
                    .fold(0.0, f64::max)
                    * 1.05;
                loop {
                    let theta = rng.random::<f64>() * PI;
                    let u = theta.cos();
                    if rng.random::<f64>() * bound <= c.shape.w(C64::new(u, 0.0)).re {
                        return c.c - c.h * u;
                    }
                }
            }
            pick -= cont_mass;
        }
        for &(a, w) in &rule.atoms {
            if pick < w {
                return a;
            }
            pick -= w;
        }
        rule.atoms.last().map_or(0.0, |a| a.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(7, -1.0, 2.0);
        let integral: f64 = rule.iter().map(|(x, w)| w * x.powi(6)).sum();
        assert!((integral - (2f64.powi(7) + 1.0) / 7.0).abs() < 1e-12);
    }

    #[test]
    fn masses() {
        for law in [
            Law::semicircle(0.3, 2.0).unwrap(),
            Law::marchenko_pastur(1.0, 1.0).unwrap(),
            Law::marchenko_pastur(0.4, 2.0).unwrap(),
            Law::marchenko_pastur(3.0, 0.5).unwrap(),
        ] {
            assert!(
                (law.total_mass() - 1.0).abs() < 1e-8,
                "{law:?}: {}",
                law.total_mass()
            );
        }
    }

    #[test]
    fn atom_at_zero() {
        let law = Law::atomic(vec![0.0], vec![1.0]).unwrap();
        let z = C64::new(0.3, 0.7);
        assert!((law.cauchy(z) - z.inv()).norm() < 1e-15);
    }

    #[test]
    fn two_atoms_at_i() {
        let law = Law::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((law.cauchy(C64::new(0.0, 1.0)) - C64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn invalid_laws() {
        assert!(Law::semicircle(0.0, -1.0).is_err());
        assert!(Law::atomic(vec![1.0], vec![0.5]).is_err());
        assert!(Law::marchenko_pastur(0.0, 1.0).is_err());
    }
}
