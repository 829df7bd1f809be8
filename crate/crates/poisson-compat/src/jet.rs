//! Truncated multivariate Taylor (jet) arithmetic.
//!
//! A [`Jet`] holds every partial derivative of a scalar at a point up to a
//! total order of at most [`MAX_ORDER`]. Coefficients are stored as *raw*
//! partial derivatives (not divided by factorials), dense over the simplex
//! of multi-indices of total degree `<= order`, in lexicographic order of
//! the multi-index tuple. The degree-0 entry is the pointwise value.
//!
//! Arithmetic is exact for the operations it supports: sums, products
//! (Leibniz convolution with binomial weights), quotients, integer powers,
//! and composition with `sin`, `cos`, `exp`, `sqrt`. Differentiating the
//! jet of an expression therefore gives the analytically exact derivative
//! values, with no truncation error beyond the stated order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::expr::{Node, ScalarExpr};

/// Hard cap on the jet order. The deepest pipeline in this crate (the
/// symmetry check on the derivative of the metacurvature) needs exactly
/// order-4 jets of the metric and bivector components.
pub const MAX_ORDER: usize = 4;

/// Shared per-(dimension, order) tables: the multi-index enumeration, rank
/// lookup, Leibniz convolution pairs and derivative shifts.
#[derive(Debug)]
pub struct JetSpace {
    dim: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    rank: HashMap<Vec<u8>, usize>,
    /// For each rank r of alpha: list of (rank beta, rank alpha-beta, binom(alpha, beta)).
    products: Vec<Vec<(usize, usize, f64)>>,
}

fn enumerate_simplex(dim: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; dim];
    fn rec(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, budget: u8) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for v in 0..=budget {
            current[pos] = v;
            rec(out, current, pos + 1, budget - v);
        }
        current[pos] = 0;
    }
    rec(&mut out, &mut current, 0, order as u8);
    out.sort();
    out
}

fn binom(n: u8, k: u8) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl JetSpace {
    fn build(dim: usize, order: usize) -> Self {
        let indices = enumerate_simplex(dim, order);
        let rank: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(r, ix)| (ix.clone(), r))
            .collect();
        let mut products = Vec::with_capacity(indices.len());
        for alpha in &indices {
            let mut pairs = Vec::new();
            let mut beta = vec![0u8; dim];
            loop {
                let gamma: Vec<u8> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                let coeff: f64 = alpha
                    .iter()
                    .zip(&beta)
                    .map(|(&a, &b)| binom(a, b))
                    .product();
                pairs.push((rank[&beta], rank[&gamma], coeff));
                // Advance beta through the box 0..=alpha componentwise.
                let mut i = 0;
                loop {
                    if i == dim {
                        break;
                    }
                    if beta[i] < alpha[i] {
                        beta[i] += 1;
                        break;
                    }
                    beta[i] = 0;
                    i += 1;
                }
                if i == dim {
                    break;
                }
            }
            products.push(pairs);
        }
        JetSpace {
            dim,
            order,
            indices,
            rank,
            products,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.indices
    }

    pub fn rank_of(&self, index: &[u8]) -> Option<usize> {
        self.rank.get(index).copied()
    }
}

static SPACES: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();

/// Returns the shared table set for a given dimension and order.
pub fn jet_space(dim: usize, order: usize) -> Arc<JetSpace> {
    let cache = SPACES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((dim, order))
        .or_insert_with(|| Arc::new(JetSpace::build(dim, order)))
        .clone()
}

/// Raw partial derivatives of a scalar at a point, truncated at `order`.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Jet(dim {}, order {}, value {})",
            self.space.dim,
            self.space.order,
            self.value()
        )
    }
}

impl Jet {
    pub fn constant(space: Arc<JetSpace>, value: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet { space, coeffs }
    }

    /// The jet of the coordinate function `x_i` at `value`.
    pub fn variable(space: Arc<JetSpace>, i: usize, value: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        if space.order >= 1 {
            let mut e = vec![0u8; space.dim];
            e[i] = 1;
            let r = space.rank_of(&e).expect("first-order index");
            coeffs[r] = 1.0;
        }
        Jet { space, coeffs }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    /// The degree-0 coefficient: the value of the scalar at the point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw partial derivative for the given multi-index.
    pub fn partial(&self, index: &[u8]) -> Result<f64> {
        if index.len() != self.space.dim {
            return Err(Error::IndexOutOfOrder {
                index: index.to_vec(),
                order: self.space.order,
            });
        }
        match self.space.rank_of(index) {
            Some(r) => Ok(self.coeffs[r]),
            None => Err(Error::IndexOutOfOrder {
                index: index.to_vec(),
                order: self.space.order,
            }),
        }
    }

    /// First derivative along coordinate `i` as a jet of order `order - 1`.
    pub fn derivative(&self, i: usize) -> Jet {
        assert!(
            self.space.order >= 1,
            "cannot differentiate an order-0 jet"
        );
        let target = jet_space(self.space.dim, self.space.order - 1);
        let coeffs = target
            .multi_indices()
            .iter()
            .map(|alpha| {
                let mut shifted = alpha.clone();
                shifted[i] += 1;
                self.coeffs[self.space.rank_of(&shifted).expect("shifted index")]
            })
            .collect();
        Jet {
            space: target,
            coeffs,
        }
    }

    /// Truncates to a lower order (no-op when already at `order`).
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.space.order {
            return self.clone();
        }
        let target = jet_space(self.space.dim, order);
        let coeffs = target
            .multi_indices()
            .iter()
            .map(|alpha| self.coeffs[self.space.rank_of(alpha).unwrap()])
            .collect();
        Jet {
            space: target,
            coeffs,
        }
    }

    fn align(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.space.dim, other.space.dim, "jet dimension mismatch");
        let order = self.space.order.min(other.space.order);
        (self.truncate(order), other.truncate(order))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    /// Leibniz product: the alpha entry is
    /// `sum_{beta <= alpha} binom(alpha, beta) f_beta g_{alpha-beta}`.
    pub fn mul(&self, other: &Jet) -> Jet {
        let (a, b) = self.align(other);
        let space = a.space.clone();
        let mut coeffs = vec![0.0; space.len()];
        for (r, pairs) in space.products.iter().enumerate() {
            let mut acc = 0.0;
            for &(rb, rg, c) in pairs {
                acc += c * a.coeffs[rb] * b.coeffs[rg];
            }
            coeffs[r] = acc;
        }
        Jet { space, coeffs }
    }

    /// Composes a univariate analytic function onto this jet. `derivs[k]`
    /// must hold the k-th derivative of the outer function at `self.value()`.
    ///
    /// With `p = self - value`, the result is `sum_k derivs[k]/k! * p^k`;
    /// `p` has zero constant term so the sum terminates at the jet order.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.space.order;
        assert!(derivs.len() > order, "need derivatives up to the jet order");
        let mut p = self.clone();
        p.coeffs[0] = 0.0;
        let mut result = Jet::constant(self.space.clone(), derivs[0]);
        let mut power = Jet::constant(self.space.clone(), 1.0);
        let mut factorial = 1.0;
        for k in 1..=order {
            power = power.mul(&p);
            factorial *= k as f64;
            result = result.add(&power.scale(derivs[k] / factorial));
        }
        result
    }

    pub fn recip(&self) -> Jet {
        let c = self.value();
        // d^k/dt^k (1/t) = (-1)^k k! / t^(k+1)
        let mut derivs = vec![0.0; self.space.order + 1];
        let mut ck = 1.0 / c;
        let mut fact = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
                ck /= c;
            }
            *d = if k % 2 == 0 { fact * ck } else { -fact * ck };
        }
        self.compose(&derivs)
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self.mul(&other.recip())
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n >= 0 {
            let mut result = Jet::constant(self.space.clone(), 1.0);
            for _ in 0..n {
                result = result.mul(self);
            }
            result
        } else {
            self.recip().powi(-n)
        }
    }

    pub fn sin(&self) -> Jet {
        let c = self.value();
        let cycle = [c.sin(), c.cos(), -c.sin(), -c.cos()];
        let derivs: Vec<f64> = (0..=self.space.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let c = self.value();
        let cycle = [c.cos(), -c.sin(), -c.cos(), c.sin()];
        let derivs: Vec<f64> = (0..=self.space.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let derivs = vec![e; self.space.order + 1];
        self.compose(&derivs)
    }

    pub fn sqrt(&self) -> Jet {
        let c = self.value();
        let mut derivs = vec![0.0; self.space.order + 1];
        // d^k/dt^k sqrt(t) = (1/2)(1/2 - 1)...(1/2 - k + 1) t^(1/2 - k)
        let mut coeff = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            if k > 0 {
                coeff *= 0.5 - (k as f64 - 1.0);
            }
            *d = coeff * c.powf(0.5 - k as f64);
        }
        self.compose(&derivs)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Largest absolute coefficient (used for scale-free residuals).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Evaluates all partial derivatives of `expr` at `point` up to `order`.
pub fn eval_jet(expr: &ScalarExpr, point: &[f64], order: usize) -> Result<Jet> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            requested: order,
            max: MAX_ORDER,
        });
    }
    expr.bind_check(point.len())?;
    let space = jet_space(point.len(), order);
    let jet = eval_node(expr, point, &space);
    if jet.is_finite() {
        Ok(jet)
    } else {
        Err(Error::NonFinite {
            expr: expr.to_string(),
            point: point.to_vec(),
        })
    }
}

fn eval_node(expr: &ScalarExpr, point: &[f64], space: &Arc<JetSpace>) -> Jet {
    match &*expr.0 {
        Node::Coord(i) => Jet::variable(space.clone(), *i, point[*i]),
        Node::Const(c) => Jet::constant(space.clone(), *c),
        Node::Add(a, b) => eval_node(a, point, space).add(&eval_node(b, point, space)),
        Node::Sub(a, b) => eval_node(a, point, space).sub(&eval_node(b, point, space)),
        Node::Mul(a, b) => eval_node(a, point, space).mul(&eval_node(b, point, space)),
        Node::Div(a, b) => eval_node(a, point, space).div(&eval_node(b, point, space)),
        Node::Neg(a) => eval_node(a, point, space).neg(),
        Node::Pow(a, n) => eval_node(a, point, space).powi(*n),
        Node::Sin(a) => eval_node(a, point, space).sin(),
        Node::Cos(a) => eval_node(a, point, space).cos(),
        Node::Exp(a) => eval_node(a, point, space).exp(),
        Node::Sqrt(a) => eval_node(a, point, space).sqrt(),
    }
}
