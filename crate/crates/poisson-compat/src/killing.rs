//! Killing-vector systems: verification, reconstruction of the bivector
//! from commuting Killing vectors, and the closed-form connection and form
//! bracket they induce.
//!
//! When `pi = 1/2 Pi^{AB} X_A ^ X_B` with commuting Killing vectors and a
//! constant antisymmetric matrix `Pi`, the connection
//! `D_a b = Pi^{AB} (X_A _| a) L_{X_B} b` is the metric contravariant
//! connection, and the generalized bracket is
//! `{a, b} = Pi^{AB} L_{X_A} a ^ L_{X_B} b`. These formulas are an
//! independent route to the torsion, curvature, metacurvature and
//! divergence verdicts, cross-checked against the metric pipelines.

use crate::error::{Error, Result};
use crate::fields::{lie_metric, scale_free, MetricField, PoissonField, VolumeField};
use crate::forms::{FormField, FormValue, JetForm, MultivectorJet, MultivectorValue, VectorField};
use crate::jet::{jet_space, Jet};

/// A declared system of commuting Killing vectors with a constant
/// antisymmetric coefficient matrix `Pi^{AB}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingSystem {
    vectors: Vec<VectorField>,
    /// Row-major r x r, antisymmetric.
    pi_matrix: Vec<f64>,
}

impl KillingSystem {
    pub fn new(vectors: Vec<VectorField>, pi_matrix: Vec<f64>) -> Result<Self> {
        let r = vectors.len();
        if r == 0 {
            return Err(Error::InvalidInput(
                "a Killing system needs at least one vector".into(),
            ));
        }
        let dim = vectors[0].dim();
        if vectors.iter().any(|v| v.dim() != dim) {
            return Err(Error::InvalidInput(
                "Killing vectors must share the chart dimension".into(),
            ));
        }
        if pi_matrix.len() != r * r {
            return Err(Error::InvalidInput(format!(
                "coefficient matrix must be {r} x {r}"
            )));
        }
        for a in 0..r {
            for b in 0..r {
                if (pi_matrix[a * r + b] + pi_matrix[b * r + a]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(
                        "coefficient matrix must be antisymmetric".into(),
                    ));
                }
            }
        }
        Ok(KillingSystem { vectors, pi_matrix })
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn vectors(&self) -> &[VectorField] {
        &self.vectors
    }

    pub fn coefficient(&self, a: usize, b: usize) -> f64 {
        self.pi_matrix[a * self.rank() + b]
    }

    pub fn pi_matrix(&self) -> &[f64] {
        &self.pi_matrix
    }
}

/// Scale-free max component of `L_X g` at a point (Killing's equation).
pub fn killing_residual(g: &MetricField, x: &VectorField, point: &[f64]) -> Result<f64> {
    let n = g.dim();
    let lie = lie_metric(x, g, point)?;
    // Scale from the individual Leibniz terms.
    let xj = x.eval_jets(point, 1)?;
    let gj = g.eval_jets(point, 1)?;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                scale = scale
                    .max((xj[k].value() * gj[i * n + j].derivative(k).value()).abs())
                    .max((gj[k * n + j].value() * xj[k].derivative(i).value()).abs())
                    .max((gj[i * n + k].value() * xj[k].derivative(j).value()).abs());
            }
        }
    }
    let worst = lie.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(scale_free(worst, scale))
}

/// Scale-free max over pairs of the Lie brackets `[X_A, X_B]`.
pub fn commutator_residual(ks: &KillingSystem, point: &[f64]) -> Result<f64> {
    let n = ks.dim();
    let r = ks.rank();
    let jets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, 1))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..r {
        for b in a + 1..r {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let t1 = jets[a][k].value() * jets[b][i].derivative(k).value();
                    let t2 = jets[b][k].value() * jets[a][i].derivative(k).value();
                    scale = scale.max(t1.abs()).max(t2.abs());
                    acc += t1 - t2;
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    Ok(scale_free(worst, scale))
}

/// `pi = 1/2 Pi^{AB} X_A ^ X_B` evaluated at a point.
pub fn reconstruct_pi(ks: &KillingSystem, point: &[f64]) -> Result<MultivectorValue> {
    Ok(reconstruct_pi_jets(ks, point, 0)?.value())
}

pub(crate) fn reconstruct_pi_jets(
    ks: &KillingSystem,
    point: &[f64],
    order: usize,
) -> Result<MultivectorJet> {
    let n = ks.dim();
    let r = ks.rank();
    let jets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, order))
        .collect::<Result<_>>()?;
    let mut acc = MultivectorJet {
        dim: n,
        degree: 2,
        comps: vec![
            Jet::constant(jet_space(n, order), 0.0);
            crate::forms::tuples(n, 2).len()
        ],
    };
    for a in 0..r {
        for b in a + 1..r {
            let c = ks.coefficient(a, b);
            if c == 0.0 {
                continue;
            }
            let wedge = MultivectorJet::from_vector(&jets[a]).wedge(&MultivectorJet::from_vector(&jets[b]))?;
            acc = acc.add(&wedge.scale(c));
        }
    }
    Ok(acc)
}

/// Scale-free max difference between the reconstructed bivector and the
/// declared one at a point.
pub fn reconstruction_residual(
    ks: &KillingSystem,
    pi: &PoissonField,
    point: &[f64],
) -> Result<f64> {
    let rec = reconstruct_pi(ks, point)?;
    let declared = pi.eval_bivector(point)?;
    let scale = declared.max_abs().max(rec.max_abs());
    Ok(scale_free(rec.sub(&declared).max_abs(), scale))
}

/// The Killing-induced connection `D_a b = Pi^{AB} (X_A _| a) L_{X_B} b`.
pub fn killing_connection(
    ks: &KillingSystem,
    alpha: &FormField,
    beta: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    if alpha.degree() != 1 || beta.degree() != 1 {
        return Err(Error::DegreeMismatch(
            "the Killing connection acts on 1-forms".into(),
        ));
    }
    let n = ks.dim();
    let r = ks.rank();
    let aval = alpha.eval(point)?;
    let bj = beta.eval_jets(point, 1)?;
    let xjets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, 1))
        .collect::<Result<_>>()?;
    let xvals: Vec<Vec<f64>> = ks
        .vectors
        .iter()
        .map(|v| v.eval(point))
        .collect::<Result<_>>()?;
    let mut acc = FormValue::zero(n, 1);
    for a in 0..r {
        let hook: f64 = (0..n).map(|i| xvals[a][i] * aval.get(&[i])).sum();
        if hook == 0.0 {
            continue;
        }
        for b in 0..r {
            let c = ks.coefficient(a, b);
            if c == 0.0 {
                continue;
            }
            acc = acc.add(&bj.lie(&xjets[b]).value().scale(c * hook));
        }
    }
    Ok(acc)
}

/// The Killing-induced generalized bracket
/// `{a, b} = Pi^{AB} L_{X_A} a ^ L_{X_B} b`.
pub fn killing_form_bracket(
    ks: &KillingSystem,
    alpha: &FormField,
    beta: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    let aj = alpha.eval_jets(point, 1)?;
    let bj = beta.eval_jets(point, 1)?;
    let xjets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, 1))
        .collect::<Result<_>>()?;
    Ok(killing_bracket_jets(ks, &aj, &bj, &xjets).value())
}

/// Jet-level `{a, b}_K = Pi^{AB} L_{X_A} a ^ L_{X_B} b` (any degrees).
fn killing_bracket_jets(
    ks: &KillingSystem,
    alpha: &JetForm,
    beta: &JetForm,
    xjets: &[Vec<Jet>],
) -> JetForm {
    let n = ks.dim();
    let r = ks.rank();
    let out_order = alpha.order().min(beta.order()).saturating_sub(1);
    let mut acc = JetForm::zero(n, alpha.degree + beta.degree, jet_space(n, out_order));
    for a in 0..r {
        let la = alpha.lie(&xjets[a]);
        for b in 0..r {
            let c = ks.coefficient(a, b);
            if c == 0.0 {
                continue;
            }
            let lb = beta.lie(&xjets[b]);
            acc = acc.add(&la.wedge(&lb).expect("degrees checked by caller").scale(c));
        }
    }
    acc
}

/// The Killing connection's symbols `G^{ij}_k = Pi^{AB} X_A^i d_k X_B^j`
/// as jets (needs vector jets one order higher).
pub(crate) fn killing_gamma_jets(
    ks: &KillingSystem,
    point: &[f64],
    order: usize,
) -> Result<Vec<Jet>> {
    let n = ks.dim();
    let r = ks.rank();
    let xjets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, order + 1))
        .collect::<Result<_>>()?;
    let mut gamma = vec![Jet::constant(jet_space(n, order), 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = Jet::constant(jet_space(n, order), 0.0);
                for a in 0..r {
                    for b in 0..r {
                        let c = ks.coefficient(a, b);
                        if c == 0.0 {
                            continue;
                        }
                        acc = acc.add(
                            &xjets[a][i]
                                .truncate(order)
                                .mul(&xjets[b][j].derivative(k))
                                .scale(c),
                        );
                    }
                }
                gamma[(i * n + j) * n + k] = acc;
            }
        }
    }
    Ok(gamma)
}

/// Scale-free max difference between the Killing connection and the metric
/// contravariant connection on the coordinate co-frames.
pub fn killing_vs_metric_connection_residual(
    ks: &KillingSystem,
    g: &MetricField,
    pi: &PoissonField,
    point: &[f64],
) -> Result<f64> {
    let n = ks.dim();
    let conn = crate::connection::metric_contra_connection(g, pi, point, 0)?;
    let kgamma = killing_gamma_jets(ks, point, 0)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = conn.gamma_value(i, j, k);
                let b = kgamma[(i * n + j) * n + k].value();
                scale = scale.max(a.abs()).max(b.abs());
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(scale_free(worst, scale))
}

/// The residuals established through the Killing formulas alone, entirely
/// independent of the metric pipelines.
#[derive(Debug, Clone, Default)]
pub struct KillingVerification {
    pub killing_residual: f64,
    pub commutator_residual: f64,
    pub reconstruction_residual: f64,
    pub torsion_residual: f64,
    pub curvature_residual: f64,
    pub metacurvature_residual: f64,
    pub divergence_residual: f64,
}

impl KillingVerification {
    pub fn max_residual(&self) -> f64 {
        [
            self.killing_residual,
            self.commutator_residual,
            self.reconstruction_residual,
            self.torsion_residual,
            self.curvature_residual,
            self.metacurvature_residual,
            self.divergence_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Verifies compatibility through the Killing formulas at one point:
/// checks the system invariants (Killing residuals, commutators,
/// reconstruction of `pi`), then asserts zero torsion, curvature and
/// metacurvature, and the divergence condition, all built from
/// `Pi^{AB}` and the vectors. Raises [`Error::ReconstructionMismatch`]
/// when the declared bivector is not reproduced within `tol`.
pub fn verify_compatible_via_killing(
    g: &MetricField,
    pi: &PoissonField,
    eps: &VolumeField,
    ks: &KillingSystem,
    point: &[f64],
    tol: f64,
) -> Result<KillingVerification> {
    let n = ks.dim();
    let mut out = KillingVerification::default();
    for v in ks.vectors() {
        out.killing_residual = out.killing_residual.max(killing_residual(g, v, point)?);
    }
    out.commutator_residual = commutator_residual(ks, point)?;
    out.reconstruction_residual = reconstruction_residual(ks, pi, point)?;
    if out.reconstruction_residual > tol {
        return Err(Error::ReconstructionMismatch {
            residual: out.reconstruction_residual,
            point: point.to_vec(),
        });
    }

    // Torsion and curvature of the Killing connection against the
    // reconstructed bivector.
    let kgamma = killing_gamma_jets(ks, point, 1)?;
    let pik = reconstruct_pi_jets(ks, point, 2)?;
    let gamma_val = |i: usize, j: usize, k: usize| kgamma[(i * n + j) * n + k].value();
    let pival = |i: usize, j: usize| pik.get(&[i, j]).value();
    let pider = |i: usize, j: usize, m: usize| pik.get(&[i, j]).derivative(m).value();

    let mut torsion: f64 = 0.0;
    let mut tscale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = gamma_val(i, j, k);
                let b = gamma_val(j, i, k);
                let c = pider(i, j, k);
                tscale = tscale.max(a.abs()).max(b.abs()).max(c.abs());
                torsion = torsion.max((a - b - c).abs());
            }
        }
    }
    out.torsion_residual = scale_free(torsion, tscale);

    let mut curv: f64 = 0.0;
    let mut cscale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        let t1 = pival(i, m) * kgamma[(j * n + k) * n + l].derivative(m).value();
                        let t2 = pival(j, m) * kgamma[(i * n + k) * n + l].derivative(m).value();
                        let t3 = gamma_val(j, k, m) * gamma_val(i, m, l);
                        let t4 = gamma_val(i, k, m) * gamma_val(j, m, l);
                        let t5 = pider(i, j, m) * gamma_val(m, k, l);
                        cscale = cscale
                            .max(t1.abs())
                            .max(t2.abs())
                            .max(t3.abs())
                            .max(t4.abs())
                            .max(t5.abs());
                        acc += t1 - t2 + t3 - t4 - t5;
                    }
                    curv = curv.max(acc.abs());
                }
            }
        }
    }
    out.curvature_residual = scale_free(curv, cscale);

    // Metacurvature via the Killing bracket formulas:
    //   M^{ijk} = {x^i, {dx^j, dx^k}} - {{x^i, dx^j}, dx^k} - {{x^i, dx^k}, dx^j}
    // with {f, s} = Pi^{AB} X_A(f) L_{X_B} s and
    //      {a, b} = Pi^{AB} L_{X_A} a ^ L_{X_B} b.
    let order = 2;
    let xjets: Vec<Vec<Jet>> = ks
        .vectors
        .iter()
        .map(|v| v.eval_jets(point, order))
        .collect::<Result<_>>()?;
    let r = ks.rank();
    let coframe = |i: usize, ord: usize| -> JetForm {
        let space = jet_space(n, ord);
        JetForm {
            dim: n,
            degree: 1,
            comps: (0..n)
                .map(|k| Jet::constant(space.clone(), if k == i { 1.0 } else { 0.0 }))
                .collect(),
        }
    };
    // {f, s}_K with f = x^i: Pi^{AB} X_A^i L_{X_B} s.
    let fn_bracket = |i: usize, sigma: &JetForm| -> JetForm {
        let out_order = sigma.order().saturating_sub(1);
        let mut acc = JetForm::zero(n, sigma.degree, jet_space(n, out_order));
        for a in 0..r {
            for b in 0..r {
                let c = ks.coefficient(a, b);
                if c == 0.0 {
                    continue;
                }
                acc = acc.add(
                    &sigma
                        .lie(&xjets[b])
                        .mul_jet(&xjets[a][i].truncate(out_order))
                        .scale(c),
                );
            }
        }
        acc
    };
    let mut meta: f64 = 0.0;
    let mut mscale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let s_jk = killing_bracket_jets(ks, &coframe(j, order), &coframe(k, order), &xjets);
                let term_a = fn_bracket(i, &s_jk);
                let tau_ij = fn_bracket(i, &coframe(j, order));
                let tau_ik = fn_bracket(i, &coframe(k, order));
                let term_b = killing_bracket_jets(ks, &tau_ij, &coframe(k, order), &xjets);
                let term_c = killing_bracket_jets(ks, &tau_ik, &coframe(j, order), &xjets);
                mscale = mscale
                    .max(term_a.max_abs_value())
                    .max(term_b.max_abs_value())
                    .max(term_c.max_abs_value());
                meta = meta.max(term_a.sub(&term_b).sub(&term_c).max_abs_value());
            }
        }
    }
    out.metacurvature_residual = scale_free(meta, mscale.max(1.0));

    // Divergence condition with the reconstructed bivector.
    let ej = eps.as_form_field().eval_jets(point, 1)?;
    let contracted = ej.contract(&pik)?;
    out.divergence_residual = scale_free(
        contracted.d().value().max_abs(),
        contracted.max_abs_value(),
    );

    Ok(out)
}
