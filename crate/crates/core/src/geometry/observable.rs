use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point of the phase plane with coordinates `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }

    pub fn dot(self, other: PhasePoint) -> f64 {
        self.q * other.q + self.p * other.p
    }

    /// Symplectic pairing `ω(self, other)` with `ω = dq ∧ dp`.
    pub fn wedge(self, other: PhasePoint) -> f64 {
        self.q * other.p - self.p * other.q
    }

    pub fn norm(self) -> f64 {
        self.q.hypot(self.p)
    }

    pub fn distance(self, other: PhasePoint) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

impl Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.q + o.q, self.p + o.p)
    }
}

impl Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.q - o.q, self.p - o.p)
    }
}

impl Mul<PhasePoint> for f64 {
    type Output = PhasePoint;
    fn mul(self, x: PhasePoint) -> PhasePoint {
        PhasePoint::new(self * x.q, self * x.p)
    }
}

impl Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.q, -self.p)
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.p)
    }
}

/// Value, gradient and Hessian of an observable at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    /// `(∂H/∂q, ∂H/∂p)`
    pub grad: PhasePoint,
    /// `[[H_qq, H_qp], [H_pq, H_pp]]`
    pub hess: [[f64; 2]; 2],
}

impl Jet {
    /// Hamiltonian vector field `(∂H/∂p, −∂H/∂q)`.
    pub fn hamiltonian_field(&self) -> PhasePoint {
        PhasePoint::new(self.grad.p, -self.grad.q)
    }
}

/// Polynomial in `(q, p)` with floating-point coefficients, kept sorted by
/// `(q-degree, p-degree)` with zero entries dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut acc: Vec<(u32, u32, f64)> = Vec::new();
        for (a, b, c) in terms {
            match acc.iter_mut().find(|t| t.0 == a && t.1 == b) {
                Some(t) => t.2 += c,
                None => acc.push((a, b, c)),
            }
        }
        acc.retain(|t| t.2 != 0.0);
        acc.sort_by_key(|t| (t.0, t.1));
        Polynomial { terms: acc }
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    pub fn p_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1).max().unwrap_or(0)
    }

    fn jet(&self, x: PhasePoint) -> Jet {
        let mut j = Jet {
            value: 0.0,
            grad: PhasePoint::default(),
            hess: [[0.0; 2]; 2],
        };
        for &(a, b, c) in &self.terms {
            let (qa, qa1, qa2) = powers(x.q, a);
            let (pb, pb1, pb2) = powers(x.p, b);
            j.value += c * qa * pb;
            j.grad.q += c * qa1 * pb;
            j.grad.p += c * qa * pb1;
            j.hess[0][0] += c * qa2 * pb;
            j.hess[0][1] += c * qa1 * pb1;
            j.hess[1][1] += c * qa * pb2;
        }
        j.hess[1][0] = j.hess[0][1];
        j
    }
}

/// `(x^n, d/dx x^n, d²/dx² x^n)`
fn powers(x: f64, n: u32) -> (f64, f64, f64) {
    let n_i = n as i32;
    let v = x.powi(n_i);
    let d1 = if n >= 1 { n as f64 * x.powi(n_i - 1) } else { 0.0 };
    let d2 = if n >= 2 {
        (n * (n - 1)) as f64 * x.powi(n_i - 2)
    } else {
        0.0
    };
    (v, d1, d2)
}

/// A Hamiltonian on the phase plane with analytic derivatives up to second
/// order. Level sets of an observable are the fibers of its Lagrangian
/// fibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Polynomial(Polynomial),
    /// `p²/2 − cos q`
    Pendulum,
    Sum(Vec<Observable>),
}

impl Observable {
    pub fn polynomial(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        Observable::Polynomial(Polynomial::new(terms))
    }

    /// `q`
    pub fn position() -> Self {
        Self::polynomial([(1, 0, 1.0)])
    }

    /// `p`
    pub fn momentum() -> Self {
        Self::polynomial([(0, 1, 1.0)])
    }

    /// `a·q + b·p`
    pub fn linear(a: f64, b: f64) -> Self {
        Self::polynomial([(1, 0, a), (0, 1, b)])
    }

    /// `q cos θ + p sin θ`
    pub fn rotated_position(theta: f64) -> Self {
        Self::linear(theta.cos(), theta.sin())
    }

    /// `(p² + q²)/2`
    pub fn harmonic_oscillator() -> Self {
        Self::polynomial([(2, 0, 0.5), (0, 2, 0.5)])
    }

    /// `(p² + ω²(q − q₀)²)/2`
    pub fn displaced_oscillator(omega: f64, center: f64) -> Self {
        let w2 = omega * omega;
        Self::polynomial([
            (0, 2, 0.5),
            (2, 0, 0.5 * w2),
            (1, 0, -w2 * center),
            (0, 0, 0.5 * w2 * center * center),
        ])
    }

    pub fn pendulum() -> Self {
        Observable::Pendulum
    }

    pub fn jet(&self, x: PhasePoint) -> Jet {
        match self {
            Observable::Polynomial(poly) => poly.jet(x),
            Observable::Pendulum => {
                let (s, c) = x.q.sin_cos();
                Jet {
                    value: 0.5 * x.p * x.p - c,
                    grad: PhasePoint::new(s, x.p),
                    hess: [[c, 0.0], [0.0, 1.0]],
                }
            }
            Observable::Sum(parts) => {
                let mut acc = Jet {
                    value: 0.0,
                    grad: PhasePoint::default(),
                    hess: [[0.0; 2]; 2],
                };
                for part in parts {
                    let j = part.jet(x);
                    acc.value += j.value;
                    acc.grad = acc.grad + j.grad;
                    for r in 0..2 {
                        for c in 0..2 {
                            acc.hess[r][c] += j.hess[r][c];
                        }
                    }
                }
                acc
            }
        }
    }

    pub fn value(&self, x: PhasePoint) -> f64 {
        self.jet(x).value
    }

    pub fn gradient(&self, x: PhasePoint) -> PhasePoint {
        self.jet(x).grad
    }

    pub fn hessian(&self, x: PhasePoint) -> [[f64; 2]; 2] {
        self.jet(x).hess
    }

    /// True when every fiber is a straight line (affine observable).
    pub fn is_linear(&self) -> bool {
        match self {
            Observable::Polynomial(poly) => poly.total_degree() <= 1,
            Observable::Pendulum => false,
            Observable::Sum(parts) => parts.iter().all(Observable::is_linear),
        }
    }
}

/// Poisson bracket `{f, g} = f_q g_p − f_p g_q` (so that `{q, p} = 1`).
pub fn poisson_bracket(f: &Observable, g: &Observable, x: PhasePoint) -> f64 {
    f.gradient(x).wedge(g.gradient(x))
}
