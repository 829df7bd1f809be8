//! Antisymmetric tensors: differential-form and multivector values, their
//! expression-level fields, and the jet-valued variants the derivative
//! pipelines run on.
//!
//! Components are stored densely over strictly increasing index tuples in
//! lexicographic order; the accessor supplies the sign for any other index
//! arrangement, so full antisymmetry holds by construction. All products
//! and contractions follow the conventions table in [`crate::conventions`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::jet::{eval_jet, jet_space, Jet, JetSpace};

/// Strictly increasing `p`-tuples drawn from `0..n`, lexicographically
/// ordered, shared through a process-wide cache.
pub(crate) fn tuples(n: usize, p: usize) -> Arc<Vec<Vec<u8>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<Vec<u8>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((n, p))
        .or_insert_with(|| {
            let mut out = Vec::new();
            let mut current = Vec::with_capacity(p);
            fn rec(n: usize, p: usize, start: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
                if current.len() == p {
                    out.push(current.clone());
                    return;
                }
                for i in start..n {
                    current.push(i as u8);
                    rec(n, p, i + 1, current, out);
                    current.pop();
                }
            }
            rec(n, p, 0, &mut current, &mut out);
            Arc::new(out)
        })
        .clone()
}

/// Sorts `indices`, returning the permutation sign and the rank of the
/// sorted tuple among increasing tuples; `None` when an index repeats
/// (the component is zero).
pub(crate) fn sign_and_rank(n: usize, indices: &[usize]) -> Option<(f64, usize)> {
    let mut sorted: Vec<usize> = indices.to_vec();
    let mut sign = 1.0;
    // Insertion sort, tracking parity.
    for i in 1..sorted.len() {
        let mut j = i;
        while j > 0 && sorted[j - 1] > sorted[j] {
            sorted.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let table = tuples(n, indices.len());
    let key: Vec<u8> = sorted.iter().map(|&i| i as u8).collect();
    table.iter().position(|t| *t == key).map(|r| (sign, r))
}

/// Parity sign of the concatenation `J ++ K` of two increasing tuples
/// relative to their merged sorted order.
fn shuffle_sign(j: &[u8], k: &[u8]) -> f64 {
    let mut inversions = 0usize;
    for &a in j {
        inversions += k.iter().filter(|&&b| b < a).count();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// Jet-valued forms and multivectors (internal computation carriers)
// ---------------------------------------------------------------------------

/// A differential form at a point whose components are jets: the carrier
/// for every pipeline that needs derivatives of composite tensors.
#[derive(Debug, Clone)]
pub(crate) struct JetForm {
    pub dim: usize,
    pub degree: usize,
    /// Components over increasing tuples, all jets of one (dim, order).
    pub comps: Vec<Jet>,
}

impl JetForm {
    pub fn zero(dim: usize, degree: usize, space: Arc<JetSpace>) -> Self {
        let len = tuples(dim, degree).len();
        JetForm {
            dim,
            degree,
            comps: vec![Jet::constant(space, 0.0); len],
        }
    }

    pub fn order(&self) -> usize {
        self.comps
            .first()
            .map(|j| j.order())
            .unwrap_or(0)
    }

    pub fn get(&self, indices: &[usize]) -> Jet {
        match sign_and_rank(self.dim, indices) {
            Some((s, r)) => self.comps[r].scale(s),
            // Repeated index, or a form of degree > dim (identically
            // zero, no stored components): an order-0 zero jet suffices
            // because such forms are only ever read, never differentiated.
            None => Jet::constant(
                self.comps
                    .first()
                    .map(|j| j.space().clone())
                    .unwrap_or_else(|| jet_space(self.dim, 0)),
                0.0,
            ),
        }
    }

    pub fn add(&self, other: &JetForm) -> JetForm {
        assert_eq!(self.degree, other.degree);
        JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &JetForm) -> JetForm {
        assert_eq!(self.degree, other.degree);
        JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    #[cfg(test)]
    pub fn neg(&self) -> JetForm {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> JetForm {
        JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn mul_jet(&self, f: &Jet) -> JetForm {
        JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.mul(f)).collect(),
        }
    }

    /// Wedge product with unit shuffle coefficients: `(dx^1 ^ dx^2)_{12} = 1`.
    pub fn wedge(&self, other: &JetForm) -> Result<JetForm> {
        let (p, q) = (self.degree, other.degree);
        if p + q > self.dim {
            return Err(Error::DegreeOverflow {
                degree: p + q,
                dim: self.dim,
            });
        }
        let proto_space = self.comps[0].space().clone();
        let out_tuples = tuples(self.dim, p + q);
        let split = tuples(p + q, p);
        let comps = out_tuples
            .iter()
            .map(|full| {
                let mut acc = Jet::constant(proto_space.clone(), 0.0);
                for positions in split.iter() {
                    let mut jt: Vec<u8> = Vec::with_capacity(p);
                    let mut kt: Vec<u8> = Vec::with_capacity(q);
                    let mut taken = vec![false; p + q];
                    for &pos in positions {
                        jt.push(full[pos as usize]);
                        taken[pos as usize] = true;
                    }
                    for (i, &t) in taken.iter().enumerate() {
                        if !t {
                            kt.push(full[i]);
                        }
                    }
                    let sign = shuffle_sign(&jt, &kt);
                    let a = self.get(&jt.iter().map(|&i| i as usize).collect::<Vec<_>>());
                    let b = other.get(&kt.iter().map(|&i| i as usize).collect::<Vec<_>>());
                    acc = acc.add(&a.mul(&b).scale(sign));
                }
                acc
            })
            .collect();
        Ok(JetForm {
            dim: self.dim,
            degree: p + q,
            comps,
        })
    }

    /// Exterior derivative; components lose one jet order.
    pub fn d(&self) -> JetForm {
        let p = self.degree;
        let out_tuples = tuples(self.dim, p + 1);
        let comps = out_tuples
            .iter()
            .map(|full| {
                let mut acc: Option<Jet> = None;
                for a in 0..=p {
                    let var = full[a] as usize;
                    let rest: Vec<usize> =
                        full.iter()
                            .enumerate()
                            .filter(|(i, _)| *i != a)
                            .map(|(_, &v)| v as usize)
                            .collect();
                    let term = self.get(&rest).derivative(var);
                    let term = if a % 2 == 0 { term } else { term.neg() };
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                acc.expect("p+1 >= 1 terms")
            })
            .collect();
        JetForm {
            dim: self.dim,
            degree: p + 1,
            comps,
        }
    }

    /// Interior product by a multivector, with the nesting convention
    /// `(X ^ Y) _| s = Y _| (X _| s)`: on components,
    /// `(M _| s)_K = sum_{J increasing} M^J s_{J ++ K}`.
    pub fn contract(&self, mv: &MultivectorJet) -> Result<JetForm> {
        let (p, q) = (self.degree, mv.degree);
        if q > p {
            return Err(Error::DegreeMismatch(format!(
                "cannot contract a degree-{q} multivector into a degree-{p} form"
            )));
        }
        let out_tuples = tuples(self.dim, p - q);
        let j_tuples = tuples(self.dim, q);
        let comps = out_tuples
            .iter()
            .map(|k| {
                let mut acc: Option<Jet> = None;
                for (jr, j) in j_tuples.iter().enumerate() {
                    let mut full: Vec<usize> = j.iter().map(|&v| v as usize).collect();
                    full.extend(k.iter().map(|&v| v as usize));
                    let sigma = self.get(&full);
                    let term = mv.comps[jr].mul(&sigma);
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                // Degenerate in dimension < q: the contraction is empty.
                acc.unwrap_or_else(|| {
                    Jet::constant(
                        self.comps
                            .first()
                            .map(|j| j.space().clone())
                            .unwrap_or_else(|| jet_space(self.dim, 0)),
                        0.0,
                    )
                })
            })
            .collect();
        Ok(JetForm {
            dim: self.dim,
            degree: p - q,
            comps,
        })
    }

    /// Lie derivative along a vector field given by jets of its components.
    pub fn lie(&self, x: &[Jet]) -> JetForm {
        let p = self.degree;
        let out_tuples = tuples(self.dim, p);
        let comps = out_tuples
            .iter()
            .map(|full| {
                let idx: Vec<usize> = full.iter().map(|&v| v as usize).collect();
                // X^k d_k sigma_I
                let mut acc: Option<Jet> = None;
                for (k, xk) in x.iter().enumerate() {
                    let term = xk.mul(&self.get(&idx).derivative(k));
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                let mut acc = acc.expect("dim >= 1");
                // + sigma_{I, i_a -> k} d_{i_a} X^k
                for a in 0..p {
                    for (k, xk) in x.iter().enumerate() {
                        let mut swapped = idx.clone();
                        swapped[a] = k;
                        let term = self.get(&swapped).mul(&xk.derivative(idx[a]));
                        acc = acc.add(&term);
                    }
                }
                acc
            })
            .collect();
        JetForm {
            dim: self.dim,
            degree: p,
            comps,
        }
    }

    pub fn max_abs_value(&self) -> f64 {
        self.comps
            .iter()
            .fold(0.0, |m, c| m.max(c.value().abs()))
    }

    pub fn value(&self) -> FormValue {
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.value()).collect(),
        }
    }
}

/// A multivector at a point with jet components (same storage scheme).
#[derive(Debug, Clone)]
pub(crate) struct MultivectorJet {
    pub dim: usize,
    pub degree: usize,
    pub comps: Vec<Jet>,
}

impl MultivectorJet {
    pub fn from_vector(x: &[Jet]) -> Self {
        MultivectorJet {
            dim: x.len(),
            degree: 1,
            comps: x.to_vec(),
        }
    }

    pub fn get(&self, indices: &[usize]) -> Jet {
        match sign_and_rank(self.dim, indices) {
            Some((s, r)) => self.comps[r].scale(s),
            None => Jet::constant(
                self.comps
                    .first()
                    .map(|j| j.space().clone())
                    .unwrap_or_else(|| jet_space(self.dim, 0)),
                0.0,
            ),
        }
    }

    pub fn add(&self, other: &MultivectorJet) -> MultivectorJet {
        assert_eq!(self.degree, other.degree);
        MultivectorJet {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> MultivectorJet {
        MultivectorJet {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Exterior product of multivectors (same shuffle convention as forms).
    pub fn wedge(&self, other: &MultivectorJet) -> Result<MultivectorJet> {
        let a = JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.clone(),
        };
        let b = JetForm {
            dim: other.dim,
            degree: other.degree,
            comps: other.comps.clone(),
        };
        let w = a.wedge(&b)?;
        Ok(MultivectorJet {
            dim: w.dim,
            degree: w.degree,
            comps: w.comps,
        })
    }

    /// Lie derivative along `x`:
    /// `(L_X M)^{j1..jq} = X^k d_k M^{j1..jq} - sum_a M^{j1..k..jq} d_k X^{j_a}`.
    pub fn lie(&self, x: &[Jet]) -> MultivectorJet {
        let p = self.degree;
        let out_tuples = tuples(self.dim, p);
        let comps = out_tuples
            .iter()
            .map(|full| {
                let idx: Vec<usize> = full.iter().map(|&v| v as usize).collect();
                let mut acc: Option<Jet> = None;
                for (k, xk) in x.iter().enumerate() {
                    let term = xk.mul(&self.get(&idx).derivative(k));
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                let mut acc = acc.expect("dim >= 1");
                for a in 0..p {
                    for k in 0..self.dim {
                        let mut swapped = idx.clone();
                        swapped[a] = k;
                        let term = self.get(&swapped).mul(&x[idx[a]].derivative(k));
                        acc = acc.sub(&term);
                    }
                }
                acc
            })
            .collect();
        MultivectorJet {
            dim: self.dim,
            degree: p,
            comps,
        }
    }

    pub fn value(&self) -> MultivectorValue {
        MultivectorValue {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.value()).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Pointwise values (public API)
// ---------------------------------------------------------------------------

/// An antisymmetric covariant tensor (differential form) at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    dim: usize,
    degree: usize,
    comps: Vec<f64>,
}

impl FormValue {
    /// Builds from components over strictly increasing tuples (lex order).
    pub fn from_increasing(dim: usize, degree: usize, comps: Vec<f64>) -> Result<Self> {
        let expected = tuples(dim, degree).len();
        if comps.len() != expected {
            return Err(Error::DegreeMismatch(format!(
                "degree-{degree} form in dimension {dim} needs {expected} components, got {}",
                comps.len()
            )));
        }
        Ok(FormValue { dim, degree, comps })
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        FormValue {
            dim,
            degree,
            comps: vec![0.0; tuples(dim, degree).len()],
        }
    }

    /// Builds from a dense component callback, checking antisymmetry on
    /// every transposition of every increasing tuple.
    pub fn from_dense(dim: usize, degree: usize, dense: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let table = tuples(dim, degree);
        let mut comps = Vec::with_capacity(table.len());
        for t in table.iter() {
            let idx: Vec<usize> = t.iter().map(|&v| v as usize).collect();
            let val = dense(&idx);
            for a in 0..degree {
                for b in a + 1..degree {
                    let mut swapped = idx.clone();
                    swapped.swap(a, b);
                    let other = dense(&swapped);
                    if (other + val).abs() > 1e-12 * val.abs().max(other.abs()).max(1.0) {
                        return Err(Error::DegreeMismatch(format!(
                            "components at {idx:?} and {swapped:?} are not antisymmetric"
                        )));
                    }
                }
            }
            comps.push(val);
        }
        Ok(FormValue { dim, degree, comps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Component for an arbitrary index tuple, with the permutation sign.
    pub fn get(&self, indices: &[usize]) -> f64 {
        match sign_and_rank(self.dim, indices) {
            Some((s, r)) => s * self.comps[r],
            None => 0.0,
        }
    }

    /// Components over increasing tuples, in lexicographic order.
    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    /// The single component of a degree-0 form.
    pub fn scalar(&self) -> f64 {
        assert_eq!(self.degree, 0, "scalar() on a degree-{} form", self.degree);
        self.comps[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn add(&self, other: &FormValue) -> FormValue {
        assert_eq!(self.degree, other.degree);
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &FormValue) -> FormValue {
        assert_eq!(self.degree, other.degree);
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> FormValue {
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c * s).collect(),
        }
    }

    pub(crate) fn to_jets(&self, order: usize) -> JetForm {
        let space = jet_space(self.dim, order);
        JetForm {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .map(|&c| Jet::constant(space.clone(), c))
                .collect(),
        }
    }
}

/// An antisymmetric contravariant tensor (multivector) at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivectorValue {
    dim: usize,
    degree: usize,
    comps: Vec<f64>,
}

impl MultivectorValue {
    pub fn from_increasing(dim: usize, degree: usize, comps: Vec<f64>) -> Result<Self> {
        let expected = tuples(dim, degree).len();
        if comps.len() != expected {
            return Err(Error::DegreeMismatch(format!(
                "degree-{degree} multivector in dimension {dim} needs {expected} components, got {}",
                comps.len()
            )));
        }
        Ok(MultivectorValue { dim, degree, comps })
    }

    pub fn vector(comps: Vec<f64>) -> Self {
        MultivectorValue {
            dim: comps.len(),
            degree: 1,
            comps,
        }
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        MultivectorValue {
            dim,
            degree,
            comps: vec![0.0; tuples(dim, degree).len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, indices: &[usize]) -> f64 {
        match sign_and_rank(self.dim, indices) {
            Some((s, r)) => s * self.comps[r],
            None => 0.0,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn sub(&self, other: &MultivectorValue) -> MultivectorValue {
        assert_eq!(self.degree, other.degree);
        MultivectorValue {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub(crate) fn to_jets(&self, order: usize) -> MultivectorJet {
        let space = jet_space(self.dim, order);
        MultivectorJet {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .map(|&c| Jet::constant(space.clone(), c))
                .collect(),
        }
    }
}

/// Wedge product of two form values; `(dx ^ dy)_{12} = 1`.
pub fn wedge(a: &FormValue, b: &FormValue) -> Result<FormValue> {
    let aj = a.to_jets(0);
    let bj = b.to_jets(0);
    Ok(aj.wedge(&bj)?.value())
}

/// Iterated interior product of a multivector into a form, with nesting
/// `(X ^ Y) _| s = Y _| (X _| s)`.
pub fn contract(mv: &MultivectorValue, form: &FormValue) -> Result<FormValue> {
    let fj = form.to_jets(0);
    let mj = mv.to_jets(0);
    Ok(fj.contract(&mj)?.value())
}

// ---------------------------------------------------------------------------
// Expression-level fields
// ---------------------------------------------------------------------------

/// A differential-form field: one `ScalarExpr` per increasing index tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    dim: usize,
    degree: usize,
    comps: Vec<ScalarExpr>,
}

impl FormField {
    pub fn from_components(dim: usize, degree: usize, comps: Vec<ScalarExpr>) -> Result<Self> {
        let expected = tuples(dim, degree).len();
        if comps.len() != expected {
            return Err(Error::DegreeMismatch(format!(
                "degree-{degree} form field in dimension {dim} needs {expected} components, got {}",
                comps.len()
            )));
        }
        for c in &comps {
            c.bind_check(dim)?;
        }
        Ok(FormField { dim, degree, comps })
    }

    /// A 1-form field from its covector components.
    pub fn one_form(comps: Vec<ScalarExpr>) -> Result<Self> {
        let dim = comps.len();
        Self::from_components(dim, 1, comps)
    }

    /// The constant co-frame `dx^i`.
    pub fn coframe(dim: usize, i: usize) -> Self {
        let comps = (0..dim)
            .map(|j| {
                if i == j {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            })
            .collect();
        FormField {
            dim,
            degree: 1,
            comps,
        }
    }

    /// A function viewed as a degree-0 form field.
    pub fn function(dim: usize, f: ScalarExpr) -> Self {
        FormField {
            dim,
            degree: 0,
            comps: vec![f],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn eval(&self, point: &[f64]) -> Result<FormValue> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.eval(point))
            .collect::<Result<Vec<f64>>>()?;
        Ok(FormValue {
            dim: self.dim,
            degree: self.degree,
            comps,
        })
    }

    pub(crate) fn eval_jets(&self, point: &[f64], order: usize) -> Result<JetForm> {
        let comps = self
            .comps
            .iter()
            .map(|c| eval_jet(c, point, order))
            .collect::<Result<Vec<Jet>>>()?;
        Ok(JetForm {
            dim: self.dim,
            degree: self.degree,
            comps,
        })
    }
}

/// A vector field from component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<ScalarExpr>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarExpr>) -> Result<Self> {
        let dim = comps.len();
        for c in &comps {
            c.bind_check(dim)?;
        }
        Ok(VectorField { comps })
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval(point)).collect()
    }

    pub(crate) fn eval_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps
            .iter()
            .map(|c| eval_jet(c, point, order))
            .collect()
    }
}

/// Exterior derivative of a form field at a point (no factorial weights:
/// `(d sigma)_{i0..ip} = sum_a (-1)^a d_{i_a} sigma_{i0.._a..ip}`).
pub fn exterior_d(sigma: &FormField, point: &[f64]) -> Result<FormValue> {
    Ok(sigma.eval_jets(point, 1)?.d().value())
}
