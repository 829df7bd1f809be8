//! Metric, Poisson and volume fields, and the Poisson-structure primitives:
//! the sharp (anchor) map, brackets, the Jacobi check and Lie derivatives.
//!
//! Sign conventions are fixed once in [`crate::conventions`]; in particular
//! `{f,g} = pi^{ij} d_i f d_j g` and `(#a)^i = pi^{ji} a_j`.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::forms::{FormField, FormValue, MultivectorValue, VectorField};
use crate::jet::{eval_jet, Jet};

/// Divides a residual by `max(1, scale)`: the crate-wide scale-free
/// residual convention.
pub fn scale_free(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

// ---------------------------------------------------------------------------
// MetricField
// ---------------------------------------------------------------------------

/// A Riemannian metric `g_ij` built from expressions. Only the upper
/// triangle is stored, so symmetry holds by construction; positive
/// definiteness is validated pointwise via [`MetricField::validate_on`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    dim: usize,
    /// Entries for i <= j in lexicographic order of (i, j).
    upper: Vec<ScalarExpr>,
}

fn sym_rank(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // Row-major upper triangle: row i starts after i*dim - i(i-1)/2 entries.
    i * dim - i * (i + 1) / 2 + j
}

impl MetricField {
    /// Builds from entries on the upper triangle, `(0,0), (0,1), ..., (n-1,n-1)`.
    pub fn from_upper_triangle(dim: usize, upper: Vec<ScalarExpr>) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::InvalidInput(format!(
                "metric in dimension {dim} needs {expected} upper-triangle entries, got {}",
                upper.len()
            )));
        }
        for e in &upper {
            e.bind_check(dim)?;
        }
        Ok(MetricField { dim, upper })
    }

    pub fn identity(dim: usize) -> Self {
        let mut upper = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                upper.push(if i == j {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                });
            }
        }
        MetricField { dim, upper }
    }

    /// `factor * identity` (the conformal family `g = h^-2 delta` is
    /// `diagonal(h.powi(-2))`).
    pub fn diagonal(dim: usize, factor: ScalarExpr) -> Self {
        let mut upper = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                upper.push(if i == j {
                    factor.clone()
                } else {
                    ScalarExpr::zero()
                });
            }
        }
        MetricField { dim, upper }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.upper[sym_rank(self.dim, i, j)]
    }

    pub fn upper_triangle(&self) -> &[ScalarExpr] {
        &self.upper
    }

    /// Dense `g_ij` values at a point.
    pub fn eval_matrix(&self, point: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.entry(i, j).eval(point)?;
            }
        }
        Ok(m)
    }

    /// Dense `g_ij` jets at a point.
    pub(crate) fn eval_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim;
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                m.push(eval_jet(self.entry(i, j), point, order)?);
            }
        }
        Ok(m)
    }

    /// Checks symmetric positive definiteness at every sample point
    /// (all leading principal minors positive).
    pub fn validate_on(&self, chart: &Chart) -> Result<()> {
        if chart.dim() != self.dim {
            return Err(Error::InvalidInput(
                "metric dimension does not match the chart".into(),
            ));
        }
        for p in chart.declared_points() {
            self.check_spd(p)?;
        }
        Ok(())
    }

    pub fn check_spd(&self, point: &[f64]) -> Result<()> {
        let n = self.dim;
        let m = self.eval_matrix(point)?;
        for k in 1..=n {
            if leading_minor(&m, n, k) <= 0.0 {
                return Err(Error::SingularMetric {
                    point: point.to_vec(),
                });
            }
        }
        Ok(())
    }
}

fn leading_minor(m: &[f64], n: usize, k: usize) -> f64 {
    // Gaussian elimination on the leading k x k block.
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = m[i * n + j];
        }
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row * k + col].abs() > a[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            det = -det;
        }
        det *= a[col * k + col];
        for row in col + 1..k {
            let f = a[row * k + col] / a[col * k + col];
            for j in col..k {
                a[row * k + j] -= f * a[col * k + j];
            }
        }
    }
    det
}

/// Gauss-Jordan inverse of a matrix of jets, pivoting on the value part.
/// A pivot collapsing below 1e-12 of the matrix scale is reported as a
/// singular metric rather than silently amplifying rounding noise.
pub(crate) fn invert_jet_matrix(m: &[Jet], n: usize, point: &[f64]) -> Result<Vec<Jet>> {
    let space = m[0].space().clone();
    let scale = m.iter().fold(0.0f64, |s, j| s.max(j.value().abs()));
    let threshold = 1e-12 * scale.max(1e-300);
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(space.clone(), if k % (n + 1) == 0 { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].value().abs() > a[pivot * n + col].value().abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].value().abs() < threshold {
            return Err(Error::SingularMetric {
                point: point.to_vec(),
            });
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let d = a[col * n + col].recip();
        for j in 0..n {
            a[col * n + j] = a[col * n + j].mul(&d);
            inv[col * n + j] = inv[col * n + j].mul(&d);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col].clone();
            for j in 0..n {
                let t = f.mul(&a[col * n + j]);
                a[row * n + j] = a[row * n + j].sub(&t);
                let t = f.mul(&inv[col * n + j]);
                inv[row * n + j] = inv[row * n + j].sub(&t);
            }
        }
    }
    Ok(inv)
}

// ---------------------------------------------------------------------------
// PoissonField
// ---------------------------------------------------------------------------

/// An antisymmetric bivector field `pi^ij`; only the strict upper triangle
/// is stored. Whether it actually satisfies the Jacobi identity is a
/// pointwise check, [`check_jacobi`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonField {
    dim: usize,
    /// Entries for i < j in lexicographic order of (i, j).
    strict_upper: Vec<ScalarExpr>,
}

fn skew_rank(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * dim - i * (i + 1) / 2 + j - i - 1
}

impl PoissonField {
    pub fn zero(dim: usize) -> Self {
        PoissonField {
            dim,
            strict_upper: vec![ScalarExpr::zero(); dim * (dim - 1) / 2],
        }
    }

    /// Builds from entries on the strict upper triangle,
    /// `(0,1), (0,2), ..., (n-2,n-1)`.
    pub fn from_strict_upper(dim: usize, entries: Vec<ScalarExpr>) -> Result<Self> {
        let expected = dim * (dim - 1) / 2;
        if entries.len() != expected {
            return Err(Error::InvalidInput(format!(
                "bivector in dimension {dim} needs {expected} strict-upper entries, got {}",
                entries.len()
            )));
        }
        for e in &entries {
            e.bind_check(dim)?;
        }
        Ok(PoissonField {
            dim,
            strict_upper: entries,
        })
    }

    /// Builds from a sparse list of `(i, j, expr)` with `i < j`.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, ScalarExpr)]) -> Result<Self> {
        let mut pi = Self::zero(dim);
        for (i, j, e) in entries {
            if i >= j || *j >= dim {
                return Err(Error::InvalidInput(format!(
                    "bivector entry ({i}, {j}) is not strictly upper-triangular in dimension {dim}"
                )));
            }
            e.bind_check(dim)?;
            pi.strict_upper[skew_rank(dim, *i, *j)] = e.clone();
        }
        Ok(pi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strict_upper(&self) -> &[ScalarExpr] {
        &self.strict_upper
    }

    /// The expression for `pi^ij` (negated clone below the diagonal).
    pub fn entry(&self, i: usize, j: usize) -> ScalarExpr {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => ScalarExpr::zero(),
            Ordering::Less => self.strict_upper[skew_rank(self.dim, i, j)].clone(),
            Ordering::Greater => -self.strict_upper[skew_rank(self.dim, j, i)].clone(),
        }
    }

    /// Dense `pi^ij` values at a point.
    pub fn eval_matrix(&self, point: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.strict_upper[skew_rank(n, i, j)].eval(point)?;
                m[i * n + j] = v;
                m[j * n + i] = -v;
            }
        }
        Ok(m)
    }

    /// Dense `pi^ij` jets at a point.
    pub(crate) fn eval_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim;
        let space = crate::jet::jet_space(n, order);
        let mut m = vec![Jet::constant(space, 0.0); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let jet = eval_jet(&self.strict_upper[skew_rank(n, i, j)], point, order)?;
                m[j * n + i] = jet.neg();
                m[i * n + j] = jet;
            }
        }
        Ok(m)
    }

    /// The bivector as a degree-2 multivector value at a point.
    pub fn eval_bivector(&self, point: &[f64]) -> Result<MultivectorValue> {
        let comps = self
            .strict_upper
            .iter()
            .map(|e| e.eval(point))
            .collect::<Result<Vec<f64>>>()?;
        MultivectorValue::from_increasing(self.dim, 2, comps)
    }

    pub(crate) fn eval_bivector_jets(
        &self,
        point: &[f64],
        order: usize,
    ) -> Result<crate::forms::MultivectorJet> {
        let comps = self
            .strict_upper
            .iter()
            .map(|e| eval_jet(e, point, order))
            .collect::<Result<Vec<Jet>>>()?;
        Ok(crate::forms::MultivectorJet {
            dim: self.dim,
            degree: 2,
            comps,
        })
    }
}

// ---------------------------------------------------------------------------
// VolumeField
// ---------------------------------------------------------------------------

/// A volume form `eps = rho dx^1 ^ ... ^ dx^n` given by its density.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    dim: usize,
    density: ScalarExpr,
}

impl VolumeField {
    pub fn new(dim: usize, density: ScalarExpr) -> Result<Self> {
        density.bind_check(dim)?;
        Ok(VolumeField { dim, density })
    }

    /// The Riemannian volume density `sqrt(det g)` as an expression.
    pub fn riemannian(g: &MetricField) -> Self {
        let n = g.dim();
        let det = det_expr(n, &|i, j| g.entry(i, j).clone());
        VolumeField {
            dim: n,
            density: det.sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn density(&self) -> &ScalarExpr {
        &self.density
    }

    pub fn eval_density(&self, point: &[f64]) -> Result<f64> {
        self.density.eval(point)
    }

    /// The volume form as a top-degree form field.
    pub fn as_form_field(&self) -> FormField {
        FormField::from_components(self.dim, self.dim, vec![self.density.clone()])
            .expect("top form has one component")
    }

    pub fn validate_on(&self, chart: &Chart) -> Result<()> {
        for p in chart.declared_points() {
            let v = self.eval_density(p)?;
            if v == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "volume density vanishes at {p:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Cofactor-expansion determinant of an expression matrix.
pub(crate) fn det_expr(n: usize, get: &dyn Fn(usize, usize) -> ScalarExpr) -> ScalarExpr {
    fn rec(rows: &[usize], cols: &[usize], get: &dyn Fn(usize, usize) -> ScalarExpr) -> ScalarExpr {
        if rows.len() == 1 {
            return get(rows[0], cols[0]);
        }
        let mut acc: Option<ScalarExpr> = None;
        let rest_rows = &rows[1..];
        for (k, &c) in cols.iter().enumerate() {
            let minor_cols: Vec<usize> = cols
                .iter()
                .copied()
                .filter(|&cc| cc != c)
                .collect();
            let term = get(rows[0], c) * rec(rest_rows, &minor_cols, get);
            let term = if k % 2 == 0 { term } else { -term };
            acc = Some(match acc {
                None => term,
                Some(s) => s + term,
            });
        }
        acc.unwrap()
    }
    let all: Vec<usize> = (0..n).collect();
    rec(&all, &all, get)
}

// ---------------------------------------------------------------------------
// Poisson-structure primitives
// ---------------------------------------------------------------------------

/// The anchor (sharp) map on a covector value: `(#a)^i = pi^{ji} a_j`.
pub fn sharp(pi: &PoissonField, alpha: &FormValue, point: &[f64]) -> Result<MultivectorValue> {
    if alpha.degree() != 1 {
        return Err(Error::DegreeMismatch(format!(
            "sharp expects a 1-form, got degree {}",
            alpha.degree()
        )));
    }
    let n = pi.dim();
    let m = pi.eval_matrix(point)?;
    let comps = (0..n)
        .map(|i| (0..n).map(|j| m[j * n + i] * alpha.get(&[j])).sum())
        .collect();
    Ok(MultivectorValue::vector(comps))
}

/// `{f, g} = pi^{ij} d_i f d_j g` at a point.
pub fn poisson_bracket(
    pi: &PoissonField,
    f: &ScalarExpr,
    g: &ScalarExpr,
    point: &[f64],
) -> Result<f64> {
    let n = pi.dim();
    let fj = eval_jet(f, point, 1)?;
    let gj = eval_jet(g, point, 1)?;
    let m = pi.eval_matrix(point)?;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += m[i * n + j] * fj.derivative(i).value() * gj.derivative(j).value();
        }
    }
    Ok(acc)
}

/// Scale-free max over index triples of the cyclic Jacobi sum
/// `pi^{il} d_l pi^{jk} + pi^{jl} d_l pi^{ki} + pi^{kl} d_l pi^{ij}`.
pub fn check_jacobi(pi: &PoissonField, point: &[f64]) -> Result<f64> {
    let n = pi.dim();
    let jets = pi.eval_jets(point, 1)?;
    let val = |i: usize, j: usize| jets[i * n + j].value();
    let der = |i: usize, j: usize, l: usize| jets[i * n + j].derivative(l).value();
    let mut worst: f64 = 0.0;
    let mut val_scale: f64 = 0.0;
    let mut der_scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            val_scale = val_scale.max(val(i, j).abs());
            for l in 0..n {
                der_scale = der_scale.max(der(i, j, l).abs());
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut sum = 0.0;
                for l in 0..n {
                    sum += val(i, l) * der(j, k, l)
                        + val(j, l) * der(k, i, l)
                        + val(k, l) * der(i, j, l);
                }
                worst = worst.max(sum.abs());
            }
        }
    }
    Ok(scale_free(worst, val_scale * der_scale))
}

/// Koszul bracket of two 1-form fields:
/// `[a, b]_pi = L_{#a} b - L_{#b} a - d(pi(a, b))`.
/// On exact forms this reduces to `[df, dg]_pi = d{f, g}`.
pub fn koszul_bracket(
    pi: &PoissonField,
    alpha: &FormField,
    beta: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    if alpha.degree() != 1 || beta.degree() != 1 {
        return Err(Error::DegreeMismatch(
            "the Koszul bracket is defined on 1-forms".into(),
        ));
    }
    let n = pi.dim();
    let aj = alpha.eval_jets(point, 1)?;
    let bj = beta.eval_jets(point, 1)?;
    let pj = pi.eval_jets(point, 1)?;

    // #alpha and #beta as jet vectors.
    let sharp_of = |form: &crate::forms::JetForm| -> Vec<Jet> {
        (0..n)
            .map(|i| {
                let mut acc: Option<Jet> = None;
                for j in 0..n {
                    let term = pj[j * n + i].mul(&form.get(&[j]));
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                acc.unwrap()
            })
            .collect()
    };
    let sa = sharp_of(&aj);
    let sb = sharp_of(&bj);

    let term1 = bj.lie(&sa);
    let term2 = aj.lie(&sb);

    // pi(alpha, beta) = pi^{ij} a_i b_j, then d of it.
    let mut pairing: Option<Jet> = None;
    for i in 0..n {
        for j in 0..n {
            let term = pj[i * n + j].mul(&aj.get(&[i])).mul(&bj.get(&[j]));
            pairing = Some(match pairing {
                None => term,
                Some(s) => s.add(&term),
            });
        }
    }
    let pairing = crate::forms::JetForm {
        dim: n,
        degree: 0,
        comps: vec![pairing.unwrap()],
    };
    let term3 = pairing.d();

    Ok(term1.sub(&term2).sub(&term3).value())
}

// ---------------------------------------------------------------------------
// Lie derivatives
// ---------------------------------------------------------------------------

/// Lie derivative of a form field along a vector field, at a point.
pub fn lie_form(x: &VectorField, sigma: &FormField, point: &[f64]) -> Result<FormValue> {
    let xj = x.eval_jets(point, 1)?;
    let sj = sigma.eval_jets(point, 1)?;
    Ok(sj.lie(&xj).value())
}

/// Lie derivative of a metric along a vector field (dense symmetric matrix):
/// `(L_X g)_{ij} = X^k d_k g_{ij} + g_{kj} d_i X^k + g_{ik} d_j X^k`.
pub fn lie_metric(x: &VectorField, g: &MetricField, point: &[f64]) -> Result<Vec<f64>> {
    let n = g.dim();
    let xj = x.eval_jets(point, 1)?;
    let gj = g.eval_jets(point, 1)?;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += xj[k].value() * gj[i * n + j].derivative(k).value();
                acc += gj[k * n + j].value() * xj[k].derivative(i).value();
                acc += gj[i * n + k].value() * xj[k].derivative(j).value();
            }
            out[i * n + j] = acc;
        }
    }
    Ok(out)
}

/// Lie derivative of a bivector field along a vector field.
pub fn lie_bivector(x: &VectorField, pi: &PoissonField, point: &[f64]) -> Result<MultivectorValue> {
    let xj = x.eval_jets(point, 1)?;
    let pj = pi.eval_bivector_jets(point, 1)?;
    Ok(pj.lie(&xj).value())
}
