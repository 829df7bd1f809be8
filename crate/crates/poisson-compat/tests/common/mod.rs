#![allow(dead_code)] // shared across test binaries; not every binary uses every helper

//! Shared oracles for the integration suites: Richardson-extrapolated
//! central finite differences, an exact monomial-map differentiator for
//! polynomials, and deterministic random expression generators. These are
//! deliberately independent of the jet engine they check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use poisson_compat::ScalarExpr;

/// Nested central differences for the raw partial `d^alpha f` at `point`.
fn central(f: &dyn Fn(&[f64]) -> f64, point: &[f64], alpha: &[u8], h: f64) -> f64 {
    match alpha.iter().position(|&a| a > 0) {
        None => f(point),
        Some(i) => {
            let mut inner = alpha.to_vec();
            inner[i] -= 1;
            let mut plus = point.to_vec();
            plus[i] += h;
            let mut minus = point.to_vec();
            minus[i] -= h;
            (central(f, &plus, &inner, h) - central(f, &minus, &inner, h)) / (2.0 * h)
        }
    }
}

/// Central finite differences with two Richardson extrapolation levels
/// (kills the h^2 and h^4 error terms) and a per-order base step chosen to
/// balance truncation against f64 roundoff.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, point: &[f64], alpha: &[u8]) -> f64 {
    let order: u8 = alpha.iter().sum();
    let h = match order {
        0 => return f(point),
        1 => 1e-4,
        2 => 4e-2,
        3 => 6e-2,
        _ => 8e-2,
    };
    if order == 1 {
        // Plain central difference at the classic step.
        return central(f, point, alpha, h);
    }
    let d1 = central(f, point, alpha, h);
    let d2 = central(f, point, alpha, h / 2.0);
    let d4 = central(f, point, alpha, h / 4.0);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// A dense polynomial in `dim` variables as a monomial -> coefficient map,
/// with exact construction from an expression shape and exact raw partial
/// derivatives. Used as the independent oracle for polynomial jets.
#[derive(Debug, Clone)]
pub struct Poly {
    pub dim: usize,
    /// (exponents, coefficient)
    pub terms: Vec<(Vec<u8>, f64)>,
}

impl Poly {
    pub fn constant(dim: usize, c: f64) -> Self {
        Poly {
            dim,
            terms: vec![(vec![0; dim], c)],
        }
    }

    pub fn coord(dim: usize, i: usize) -> Self {
        let mut e = vec![0u8; dim];
        e[i] = 1;
        Poly {
            dim,
            terms: vec![(e, 1.0)],
        }
    }

    fn normalize(mut self) -> Self {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Vec<u8>, f64)> = Vec::new();
        for (e, c) in self.terms {
            match out.last_mut() {
                Some((pe, pc)) if *pe == e => *pc += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        Poly {
            dim: self.dim,
            terms: out,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.clone());
        Poly {
            dim: self.dim,
            terms,
        }
        .normalize()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                terms.push((e, ca * cb));
            }
        }
        Poly {
            dim: self.dim,
            terms,
        }
        .normalize()
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    /// Exact raw partial derivative `d^alpha` evaluated at `point`.
    pub fn partial_at(&self, alpha: &[u8], point: &[f64]) -> f64 {
        let mut acc = 0.0;
        'terms: for (e, c) in &self.terms {
            let mut coeff = *c;
            let mut mono = 1.0;
            for i in 0..self.dim {
                if e[i] < alpha[i] {
                    continue 'terms;
                }
                // falling factorial e_i (e_i - 1) ... (e_i - a_i + 1)
                for k in 0..alpha[i] {
                    coeff *= (e[i] - k) as f64;
                }
                mono *= point[i].powi((e[i] - alpha[i]) as i32);
            }
            acc += coeff * mono;
        }
        acc
    }
}

/// A random polynomial of total degree <= 4 built simultaneously as a
/// `ScalarExpr` (for the jet engine) and a `Poly` (the exact oracle).
pub fn random_polynomial_pair(dim: usize, rng: &mut ChaCha8Rng) -> (ScalarExpr, Poly) {
    // Sum of products of linear factors, keeping total degree <= 4.
    let linear = |rng: &mut ChaCha8Rng| -> (ScalarExpr, Poly) {
        let c = rng.gen_range(-1.5..1.5);
        let mut e = ScalarExpr::constant(c);
        let mut p = Poly::constant(dim, c);
        for i in 0..dim {
            let a = rng.gen_range(-1.5..1.5);
            e = e + ScalarExpr::coord(i) * a;
            p = p.add(&Poly::coord(dim, i).scale(a));
        }
        (e, p)
    };
    let (mut expr, mut poly) = linear(rng);
    for _ in 0..rng.gen_range(1..4) {
        let factors = rng.gen_range(1..=4usize);
        let (mut fe, mut fp) = linear(rng);
        for _ in 1..factors {
            let (ge, gp) = linear(rng);
            fe = fe * ge;
            fp = fp.mul(&gp);
        }
        expr = expr + fe;
        poly = poly.add(&fp);
    }
    (expr, poly)
}

/// A random smooth (non-polynomial) expression whose derivatives up to
/// order 6 stay tame on points in [0.2, 0.9]^dim: a quadratic polynomial
/// plus a few analytic nodes with linear arguments, an optional bounded
/// quotient and an optional square root with positive argument.
pub fn random_smooth_expr(dim: usize, rng: &mut ChaCha8Rng) -> ScalarExpr {
    let linear = |rng: &mut ChaCha8Rng| -> ScalarExpr {
        let mut e = ScalarExpr::constant(rng.gen_range(-1.0..1.0));
        for i in 0..dim {
            e = e + ScalarExpr::coord(i) * rng.gen_range(-1.2..1.2);
        }
        e
    };
    let mut e = linear(rng);
    let quad = linear(rng) * linear(rng);
    e = e + quad;
    for _ in 0..rng.gen_range(1..=2usize) {
        let arg = linear(rng);
        e = e + match rng.gen_range(0..3u8) {
            0 => arg.sin(),
            1 => arg.cos(),
            _ => arg.exp(),
        } * rng.gen_range(-1.0..1.0);
    }
    if rng.gen_bool(0.4) {
        // Pole at distance >= 2 from the sampling region keeps the
        // higher derivatives tame for the finite-difference oracle.
        let i = rng.gen_range(0..dim);
        let denom = ScalarExpr::constant(4.0) + ScalarExpr::coord(i) * ScalarExpr::coord(i);
        e = e + linear(rng) / denom;
    }
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..dim);
        e = e + (ScalarExpr::constant(2.0) + ScalarExpr::coord(i)).sqrt();
    }
    e
}

/// A deterministic point in [0.2, 0.9]^dim.
pub fn random_tame_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.2..0.9)).collect()
}

/// All multi-indices of the given dimension with total degree in 1..=max.
pub fn multi_indices_up_to(dim: usize, max: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; dim];
    fn rec(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, budget: u8) {
        if pos == current.len() {
            if current.iter().any(|&a| a > 0) {
                out.push(current.clone());
            }
            return;
        }
        for v in 0..=budget {
            current[pos] = v;
            rec(out, current, pos + 1, budget - v);
        }
        current[pos] = 0;
    }
    rec(&mut out, &mut current, 0, max);
    out
}
