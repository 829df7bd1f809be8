//! The generalized Poisson bracket on forms and the metacurvature tensor.
//!
//! For a flat, torsion-free contravariant connection the bracket of two
//! 1-forms is determined by the fundamental brackets
//! `{f, sigma} = D_{df} sigma` and `{dx^i, dx^j} = d(D_{dx^i} dx^j)`
//! together with the product identity
//! `{f a, b} = f {a, b} + a ^ {f, b}`. The metacurvature measures the
//! failure of the graded Jacobi identity:
//!
//! `M(df, b, c) = {f, {b, c}} - {{f, b}, c} - {{f, c}, b}`.
//!
//! It is a tensor, symmetric in the three contravariant slots and
//! antisymmetric in the two covariant ones, and it is only defined where
//! the torsion and curvature residuals vanish.
//!
//! Two independent pipelines are provided: the defining assembly above,
//! and — on charts whose coordinates are declared affine for the induced
//! flat covariant connection, with `pi` invertible — the symplectic route
//! through third derivatives of `pi` lowered with `omega = pi^{-1}`. Their
//! entry-wise agreement pins the overall sign (see [`crate::conventions`]).

use crate::connection::{metric_contra_connection, ContraChristoffel};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::fields::{scale_free, MetricField, PoissonField};
use crate::forms::{FormField, FormValue, JetForm};
use crate::jet::{eval_jet, jet_space, Jet};

/// The metacurvature at a point, stored dense with the symmetries imposed;
/// the residual of the raw (pre-symmetrization) assembly is kept alongside.
#[derive(Debug, Clone)]
pub struct MetaTensor {
    point: Vec<f64>,
    dim: usize,
    /// Dense components `[((((i n + j) n + k) n + l) n + m)]`.
    comps: Vec<f64>,
    raw_symmetry_residual: f64,
}

impl MetaTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> f64 {
        let n = self.dim;
        self.comps[(((i * n + j) * n + k) * n + l) * n + m]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Max deviation of the raw assembly from the stored symmetries,
    /// scale-free; rounding-level for correct input.
    pub fn raw_symmetry_residual(&self) -> f64 {
        self.raw_symmetry_residual
    }

    /// Contraction `M(a, b, c)` as a 2-form value, for covector components.
    pub fn apply(&self, a: &[f64], b: &[f64], c: &[f64]) -> FormValue {
        let n = self.dim;
        FormValue::from_dense(n, 2, |idx| {
            let (l, m) = (idx[0], idx[1]);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        acc += self.get(i, j, k, l, m) * a[i] * b[j] * c[k];
                    }
                }
            }
            acc
        })
        .expect("symmetrized storage is antisymmetric in (l, m)")
    }
}

fn coframe_jets(n: usize, i: usize, order: usize) -> JetForm {
    let space = jet_space(n, order);
    JetForm {
        dim: n,
        degree: 1,
        comps: (0..n)
            .map(|k| Jet::constant(space.clone(), if k == i { 1.0 } else { 0.0 }))
            .collect(),
    }
}

/// `{dx^i, dx^j} = d(D_{dx^i} dx^j)` as a jet-valued 2-form
/// (one order below the connection's symbol jets).
fn bracket_coframe(conn: &ContraChristoffel, i: usize, j: usize) -> JetForm {
    conn.d_coframe(i, j).d()
}

/// The generalized bracket of two jet-valued 1-forms, assembled from the
/// fundamental brackets and the product identity:
///
/// `{a, b} = a_i b_j {dx^i, dx^j} + {a_i, b_j} dx^i ^ dx^j
///         + b_j dx^i ^ (d_m a_i Gamma^{mj}_q dx^q)
///         + a_i dx^j ^ (d_m b_j Gamma^{mi}_q dx^q)`.
pub(crate) fn bracket_one_forms_jets(
    conn: &ContraChristoffel,
    alpha: &JetForm,
    beta: &JetForm,
) -> JetForm {
    let n = conn.dim();
    let out_order = alpha
        .order()
        .min(beta.order())
        .min(conn.order())
        .saturating_sub(1);
    let mut acc = JetForm::zero(n, 2, jet_space(n, out_order));
    // No 2-forms in dimension 1; the bracket is identically zero.
    if n < 2 {
        return acc;
    }
    for i in 0..n {
        let a_i = alpha.get(&[i]);
        // Every term below carries a_i or one of its derivatives.
        if a_i.is_zero() {
            continue;
        }
        let dxi = coframe_jets(n, i, out_order);
        for j in 0..n {
            let b_j = beta.get(&[j]);
            if b_j.is_zero() {
                continue;
            }
            // a_i b_j {dx^i, dx^j}
            let fundamental = bracket_coframe(conn, i, j);
            acc = acc.add(&fundamental.mul_jet(&a_i.mul(&b_j).truncate(out_order)));

            // {a_i, b_j} dx^i ^ dx^j with {f,g} = pi^{ml} d_m f d_l g
            let mut fg = Jet::constant(jet_space(n, out_order), 0.0);
            for m in 0..n {
                for l in 0..n {
                    let term = conn
                        .pi_jet(m, l)
                        .truncate(out_order)
                        .mul(&a_i.derivative(m))
                        .mul(&b_j.derivative(l));
                    fg = fg.add(&term);
                }
            }
            let dxj = coframe_jets(n, j, out_order);
            acc = acc.add(&dxi.wedge(&dxj).expect("degree 2 <= n").mul_jet(&fg));

            // b_j dx^i ^ D_{d a_i} dx^j  (D_{d a_i} dx^j = d_m a_i Gamma^{mj}_q dx^q)
            let mut da_dxj = JetForm::zero(n, 1, jet_space(n, out_order));
            let mut db_dxi = JetForm::zero(n, 1, jet_space(n, out_order));
            for m in 0..n {
                da_dxj = da_dxj.add(
                    &conn
                        .d_coframe(m, j)
                        .mul_jet(&a_i.derivative(m)),
                );
                db_dxi = db_dxi.add(
                    &conn
                        .d_coframe(m, i)
                        .mul_jet(&b_j.derivative(m)),
                );
            }
            acc = acc.add(&dxi.wedge(&da_dxj).expect("degree 2").mul_jet(&b_j.truncate(out_order)));
            acc = acc.add(&dxj.wedge(&db_dxi).expect("degree 2").mul_jet(&a_i.truncate(out_order)));
        }
    }
    acc
}

/// `{f, sigma} = D_{df} sigma` at a point. Degree-0 forms reduce to the
/// ordinary Poisson bracket.
pub fn bracket_fn_form(
    g: &MetricField,
    pi: &PoissonField,
    f: &ScalarExpr,
    sigma: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    let conn = metric_contra_connection(g, pi, point, 1)?;
    let fj = eval_jet(f, point, 1)?;
    let sj = sigma.eval_jets(point, 1)?;
    Ok(bracket_fn_form_jets(&conn, &fj, &sj).value())
}

/// Jet-level `D_{df} sigma = d_i f D_{dx^i} sigma`.
pub(crate) fn bracket_fn_form_jets(
    conn: &ContraChristoffel,
    f: &Jet,
    sigma: &JetForm,
) -> JetForm {
    let n = conn.dim();
    let out_order = sigma.order().min(f.order()).min(conn.order() + 1) - 1;
    let mut acc = JetForm::zero(n, sigma.degree, jet_space(n, out_order));
    for i in 0..n {
        let term = conn
            .d_along_coframe(i, sigma)
            .mul_jet(&f.derivative(i));
        acc = acc.add(&term);
    }
    acc
}

/// The generalized bracket of two 1-form fields at a point.
pub fn bracket_one_forms(
    g: &MetricField,
    pi: &PoissonField,
    alpha: &FormField,
    beta: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    if alpha.degree() != 1 || beta.degree() != 1 {
        return Err(Error::DegreeMismatch(
            "the generalized bracket assembly takes 1-form fields".into(),
        ));
    }
    let conn = metric_contra_connection(g, pi, point, 2)?;
    let aj = alpha.eval_jets(point, 2)?;
    let bj = beta.eval_jets(point, 2)?;
    Ok(bracket_one_forms_jets(&conn, &aj, &bj).value())
}

/// Assembles the metacurvature as jets of the requested order. Requires
/// symbol jets of order `out_order + 2` on the connection.
///
/// Returns the dense jet tensor together with the raw symmetry residual of
/// the value parts (before symmetrization).
fn mdef_jets(conn: &ContraChristoffel, out_order: usize) -> (Vec<Jet>, f64) {
    let n = conn.dim();
    assert!(
        conn.order() >= out_order + 2,
        "metacurvature at jet order {out_order} needs symbol jets of order {}",
        out_order + 2
    );
    // M^{ijk} as a jet 2-form for every (i, j, k):
    //   {x^i, {dx^j, dx^k}} - {{x^i, dx^j}, dx^k} - {{x^i, dx^k}, dx^j}
    // with {x^i, .} = D_{dx^i} and {x^i, dx^j} = D_{dx^i} dx^j.
    let mut forms: Vec<Option<JetForm>> = vec![None; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let s_jk = bracket_coframe(conn, j, k);
                let term_a = conn.d_along_coframe(i, &s_jk);
                let tau_ij = conn.d_coframe(i, j);
                let tau_ik = conn.d_coframe(i, k);
                let order = conn.order();
                let term_b = bracket_one_forms_jets(conn, &tau_ij, &coframe_jets(n, k, order));
                let term_c = bracket_one_forms_jets(conn, &tau_ik, &coframe_jets(n, j, order));
                let m = term_a.sub(&term_b).sub(&term_c);
                let m = JetForm {
                    dim: n,
                    degree: 2,
                    comps: m.comps.iter().map(|c| c.truncate(out_order)).collect(),
                };
                // The assembly is symmetric in (j, k) term by term.
                forms[(i * n + k) * n + j] = Some(m.clone());
                forms[(i * n + j) * n + k] = Some(m);
            }
        }
    }
    let forms: Vec<JetForm> = forms.into_iter().map(|f| f.expect("filled")).collect();

    // Raw symmetry in (i, j, k): the assembly is (j, k)-symmetric by
    // construction; (i, j)-symmetry is the flatness theorem at work.
    let mut scale: f64 = 0.0;
    let mut raw: f64 = 0.0;
    let form_at = |i: usize, j: usize, k: usize| -> &JetForm { &forms[(i * n + j) * n + k] };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                scale = scale.max(form_at(i, j, k).max_abs_value());
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for (pi_, pj, pk) in [(j, i, k), (i, k, j), (k, j, i)] {
                    let diff = form_at(i, j, k).sub(form_at(pi_, pj, pk));
                    raw = raw.max(diff.max_abs_value());
                }
            }
        }
    }
    let raw_residual = scale_free(raw, scale);

    // Symmetrize over the 6 permutations of (i, j, k); store dense.
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let zero_space = jet_space(n, out_order);
    let mut dense = vec![Jet::constant(zero_space, 0.0); n * n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let mut acc: Option<Jet> = None;
                        let upper = [i, j, k];
                        for p in perms {
                            let term =
                                form_at(upper[p[0]], upper[p[1]], upper[p[2]]).get(&[l, m]);
                            acc = Some(match acc {
                                None => term,
                                Some(s) => s.add(&term),
                            });
                        }
                        dense[(((i * n + j) * n + k) * n + l) * n + m] =
                            acc.unwrap().scale(1.0 / 6.0);
                    }
                }
            }
        }
    }
    (dense, raw_residual)
}

/// The metacurvature from its defining bracket assembly. Only defined when
/// the connection's torsion and curvature residuals are inside `tol`.
pub fn metacurvature_def(conn: &ContraChristoffel, tol: f64) -> Result<MetaTensor> {
    if conn.torsion_residual() > tol {
        return Err(Error::HasTorsion {
            residual: conn.torsion_residual(),
            tol,
        });
    }
    let (_, curvature) = conn.curvature();
    if curvature > tol {
        return Err(Error::NotFlat {
            residual: curvature,
            tol,
        });
    }
    let (dense, raw) = mdef_jets(conn, 0);
    Ok(MetaTensor {
        point: conn.point().to_vec(),
        dim: conn.dim(),
        comps: dense.iter().map(|j| j.value()).collect(),
        raw_symmetry_residual: raw,
    })
}

/// Convenience wrapper: builds the connection (symbol jets of order 2) and
/// assembles the metacurvature at `point`.
pub fn metacurvature_at(
    g: &MetricField,
    pi: &PoissonField,
    point: &[f64],
    tol: f64,
) -> Result<MetaTensor> {
    let conn = metric_contra_connection(g, pi, point, 2)?;
    metacurvature_def(&conn, tol)
}

/// The symplectic route: with `omega = pi^{-1}` (matrix inverse) and the
/// chart coordinates declared affine for the induced flat covariant
/// connection, the metacurvature is built from the third partials of `pi`:
///
/// `M^{ijk}_{lm} = pi^{ai} pi^{bj} pi^{ck} omega_{dl} omega_{em} d_a d_b d_c pi^{de}`
///
/// (overall sign per the conventions ledger, pinned by agreement with
/// [`metacurvature_def`]).
pub fn metacurvature_symplectic_oracle(
    pi: &PoissonField,
    point: &[f64],
    has_flat_frame: bool,
) -> Result<MetaTensor> {
    if !has_flat_frame {
        return Err(Error::NoFlatFrame);
    }
    let n = pi.dim();
    let pj = pi.eval_jets(point, 3)?;
    let pvals: Vec<f64> = pj.iter().map(|j| j.value()).collect();
    // omega = matrix inverse of pi (fails when pi is degenerate).
    let omega = invert_value_matrix(&pvals, n).ok_or_else(|| Error::DegeneratePoisson {
        point: point.to_vec(),
        det: value_det(&pvals, n),
    })?;

    let mut comps = vec![0.0; n * n * n * n * n];
    // Third raw partials d_a d_b d_c pi^{de}.
    let third = |d: usize, e: usize, a: usize, b: usize, c: usize| -> f64 {
        let mut idx = vec![0u8; n];
        idx[a] += 1;
        idx[b] += 1;
        idx[c] += 1;
        pj[d * n + e].partial(&idx).expect("order-3 jet")
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let mut acc = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                for c in 0..n {
                                    let pre = pvals[a * n + i] * pvals[b * n + j] * pvals[c * n + k];
                                    if pre == 0.0 {
                                        continue;
                                    }
                                    for d in 0..n {
                                        for e in 0..n {
                                            let low = omega[d * n + l] * omega[e * n + m];
                                            if low == 0.0 {
                                                continue;
                                            }
                                            acc += pre * low * third(d, e, a, b, c);
                                        }
                                    }
                                }
                            }
                        }
                        comps[(((i * n + j) * n + k) * n + l) * n + m] = acc;
                    }
                }
            }
        }
    }
    Ok(MetaTensor {
        point: point.to_vec(),
        dim: n,
        comps,
        raw_symmetry_residual: 0.0,
    })
}

fn value_det(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            det = -det;
        }
        det *= a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

fn invert_value_matrix(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let det = value_det(m, n);
    if det.abs() <= 1e-12 * scale.powi(n as i32).max(1e-300) {
        return None;
    }
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let d = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            for j in 0..n {
                a[row * n + j] -= f * a[col * n + j];
                inv[row * n + j] -= f * inv[col * n + j];
            }
        }
    }
    Some(inv)
}

/// Scale-free max over index assignments of
/// `|D^i M^{jkl}_{mn} - D^j M^{ikl}_{mn}|`: the derivative of the
/// metacurvature must be totally symmetric in the contravariant slots.
/// Needs symbol jets of order 3 (hence order-4 jets of `g` and `pi`).
pub fn meta_bianchi_residual(conn: &ContraChristoffel, tol: f64) -> Result<f64> {
    if conn.torsion_residual() > tol {
        return Err(Error::HasTorsion {
            residual: conn.torsion_residual(),
            tol,
        });
    }
    let (_, curvature) = conn.curvature();
    if curvature > tol {
        return Err(Error::NotFlat {
            residual: curvature,
            tol,
        });
    }
    let n = conn.dim();
    let (m_jets, _) = mdef_jets(conn, 1);
    let mj = |j: usize, k: usize, l: usize, mm: usize, nn: usize| -> &Jet {
        &m_jets[(((j * n + k) * n + l) * n + mm) * n + nn]
    };
    // (D_{dx^i} M)^{jkl}_{mn} =
    //   #dx^i(M^{jkl}_{mn})
    //   - G^{ij}_q M^{qkl} - G^{ik}_q M^{jql} - G^{il}_q M^{jkq}
    //   + G^{iq}_m M_{qn}  + G^{iq}_n M_{mq}
    let dm = |i: usize, j: usize, k: usize, l: usize, mm: usize, nn: usize, scale: &mut f64| -> f64 {
        let mut acc = conn.sharp_coframe_apply(i, mj(j, k, l, mm, nn)).value();
        *scale = scale.max(acc.abs());
        for q in 0..n {
            let terms = [
                -conn.gamma_value(i, j, q) * mj(q, k, l, mm, nn).value(),
                -conn.gamma_value(i, k, q) * mj(j, q, l, mm, nn).value(),
                -conn.gamma_value(i, l, q) * mj(j, k, q, mm, nn).value(),
                conn.gamma_value(i, q, mm) * mj(j, k, l, q, nn).value(),
                conn.gamma_value(i, q, nn) * mj(j, k, l, mm, q).value(),
            ];
            for t in terms {
                *scale = scale.max(t.abs());
                acc += t;
            }
        }
        acc
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for mm in 0..n {
                        for nn in 0..n {
                            let a = dm(i, j, k, l, mm, nn, &mut scale);
                            let b = dm(j, i, k, l, mm, nn, &mut scale);
                            worst = worst.max((a - b).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(scale_free(worst, scale))
}
