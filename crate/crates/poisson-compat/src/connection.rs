//! Connections: the Levi-Civita covariant connection with its scalar
//! curvature, the metric contravariant connection `D` with its torsion and
//! curvature, and the cotangent geodesic integrator.
//!
//! `D` differentiates along 1-forms through the anchor map. It is built
//! from the contravariant Koszul formula (see [`crate::conventions`]); the
//! construction is self-verifying because the torsion and metric-pairing
//! residuals are computed alongside and must vanish for any correct sign
//! placement.

use crate::error::{Error, Result};
use crate::fields::{invert_jet_matrix, scale_free, MetricField, PoissonField};
use crate::forms::JetForm;
use crate::jet::{jet_space, Jet};

/// Levi-Civita symbols `Gamma^k_{ij}` at a point.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub point: Vec<f64>,
    dim: usize,
    /// Indexed `[(k*n + i)*n + j]`, symmetric in `(i, j)`.
    symbols: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.symbols[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.symbols.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Levi-Civita connection of `g` at a point:
/// `Gamma^k_{ij} = 1/2 g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij})`.
pub fn levi_civita(g: &MetricField, point: &[f64]) -> Result<Christoffel> {
    let n = g.dim();
    let gj = g.eval_jets(point, 1)?;
    let ginv = invert_jet_matrix(&gj, n, point)?;
    let mut symbols = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    let term = gj[j * n + l].derivative(i).value()
                        + gj[i * n + l].derivative(j).value()
                        - gj[i * n + j].derivative(l).value();
                    acc += 0.5 * ginv[k * n + l].value() * term;
                }
                symbols[(k * n + i) * n + j] = acc;
            }
        }
    }
    Ok(Christoffel {
        point: point.to_vec(),
        dim: n,
        symbols,
    })
}

/// Scalar curvature of `g` at a point, from the full Riemann tensor.
/// In two dimensions the Gaussian curvature is `R / 2`.
pub fn scalar_curvature(g: &MetricField, point: &[f64]) -> Result<f64> {
    let n = g.dim();
    let gj = g.eval_jets(point, 2)?;
    let ginv = invert_jet_matrix(&gj, n, point)?;
    // Christoffel symbols as order-1 jets.
    let mut gamma = vec![Jet::constant(jet_space(n, 1), 0.0); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc: Option<Jet> = None;
                for l in 0..n {
                    let term = gj[j * n + l]
                        .derivative(i)
                        .add(&gj[i * n + l].derivative(j))
                        .sub(&gj[i * n + j].derivative(l));
                    let term = ginv[k * n + l].truncate(1).mul(&term).scale(0.5);
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                gamma[(k * n + i) * n + j] = acc.unwrap();
            }
        }
    }
    let gamma_val =
        |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j].value();
    let gamma_der = |k: usize, i: usize, j: usize, m: usize| {
        gamma[(k * n + i) * n + j].derivative(m).value()
    };
    // R^r_{s mu nu} = d_mu G^r_{nu s} - d_nu G^r_{mu s}
    //               + G^r_{mu l} G^l_{nu s} - G^r_{nu l} G^l_{mu s}
    let mut r_scalar = 0.0;
    for s in 0..n {
        for nu in 0..n {
            // Ricci_{s nu} = R^mu_{s mu nu}
            let mut ricci = 0.0;
            for mu in 0..n {
                let mut riem = gamma_der(mu, nu, s, mu) - gamma_der(mu, mu, s, nu);
                for l in 0..n {
                    riem += gamma_val(mu, mu, l) * gamma_val(l, nu, s)
                        - gamma_val(mu, nu, l) * gamma_val(l, mu, s);
                }
                ricci += riem;
            }
            r_scalar += ginv[s * n + nu].value() * ricci;
        }
    }
    Ok(r_scalar)
}

/// Gaussian curvature of a 2-dimensional metric (`R / 2`).
pub fn gaussian_curvature(g: &MetricField, point: &[f64]) -> Result<f64> {
    if g.dim() != 2 {
        return Err(Error::InvalidInput(
            "Gaussian curvature is a 2-dimensional quantity".into(),
        ));
    }
    Ok(scalar_curvature(g, point)? / 2.0)
}

// ---------------------------------------------------------------------------
// The metric contravariant connection
// ---------------------------------------------------------------------------

/// The metric contravariant connection at a point: the symbols
/// `Gamma^{ij}_k` with `D_{dx^i} dx^j = Gamma^{ij}_k dx^k`, kept as jets so
/// downstream pipelines can differentiate them, together with the jets of
/// `pi`, `g` and `g^{-1}` they were built from.
#[derive(Debug, Clone)]
pub struct ContraChristoffel {
    point: Vec<f64>,
    dim: usize,
    order: usize,
    /// `Gamma^{ij}_k` as jets, indexed `[(i*n + j)*n + k]`.
    gamma: Vec<Jet>,
    /// `pi^{ij}` jets (order + 1), row-major.
    pi: Vec<Jet>,
    /// `g^{ij}` jets (order + 1), row-major.
    ginv: Vec<Jet>,
    torsion_residual: f64,
    compat_residual: f64,
}

/// Builds the metric contravariant connection from the contravariant
/// Koszul formula, with `Gamma` jets of the requested order (`<= 3`).
///
/// The torsion and metric-compatibility residuals are evaluated as part of
/// the construction; they are this connection's defining equations, so
/// anything above rounding noise indicates bad input (or a singular
/// metric, which is reported as an error).
pub fn metric_contra_connection(
    g: &MetricField,
    pi: &PoissonField,
    point: &[f64],
    order: usize,
) -> Result<ContraChristoffel> {
    let n = g.dim();
    if pi.dim() != n {
        return Err(Error::InvalidInput(
            "metric and bivector dimensions differ".into(),
        ));
    }
    let gj = g.eval_jets(point, order + 1)?;
    let pj = pi.eval_jets(point, order + 1)?;
    let ginv = invert_jet_matrix(&gj, n, point)?;

    // 2 <D_{dx^i} dx^j, dx^k> per the contravariant Koszul formula.
    let mut rhs = vec![Jet::constant(jet_space(n, order), 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = Jet::constant(jet_space(n, order), 0.0);
                for m in 0..n {
                    // #dx^i(G^{jk}) + #dx^j(G^{ik}) - #dx^k(G^{ij})
                    acc = acc.add(
                        &pj[i * n + m]
                            .truncate(order)
                            .mul(&ginv[j * n + k].derivative(m)),
                    );
                    acc = acc.add(
                        &pj[j * n + m]
                            .truncate(order)
                            .mul(&ginv[i * n + k].derivative(m)),
                    );
                    acc = acc.sub(
                        &pj[k * n + m]
                            .truncate(order)
                            .mul(&ginv[i * n + j].derivative(m)),
                    );
                    // <[dx^i,dx^j], dx^k> - <[dx^j,dx^k], dx^i> + <[dx^k,dx^i], dx^j>
                    // with [dx^a,dx^b]_pi = d(pi^{ab}).
                    acc = acc.add(
                        &pj[i * n + j]
                            .derivative(m)
                            .mul(&ginv[m * n + k].truncate(order)),
                    );
                    acc = acc.sub(
                        &pj[j * n + k]
                            .derivative(m)
                            .mul(&ginv[m * n + i].truncate(order)),
                    );
                    acc = acc.add(
                        &pj[k * n + i]
                            .derivative(m)
                            .mul(&ginv[m * n + j].truncate(order)),
                    );
                }
                rhs[(i * n + j) * n + k] = acc;
            }
        }
    }

    // Lower the last slot: Gamma^{ij}_k = 1/2 rhs^{ijl} g_{lk}.
    let mut gamma = vec![Jet::constant(jet_space(n, order), 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = Jet::constant(jet_space(n, order), 0.0);
                for l in 0..n {
                    acc = acc.add(&rhs[(i * n + j) * n + l].mul(&gj[l * n + k].truncate(order)));
                }
                gamma[(i * n + j) * n + k] = acc.scale(0.5);
            }
        }
    }

    let mut conn = ContraChristoffel {
        point: point.to_vec(),
        dim: n,
        order,
        gamma,
        pi: pj,
        ginv,
        torsion_residual: 0.0,
        compat_residual: 0.0,
    };
    conn.torsion_residual = conn.torsion().1;
    conn.compat_residual = conn.metric_compat_residual();
    Ok(conn)
}

impl ContraChristoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Jet order carried by the symbols.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.gamma[(i * self.dim + j) * self.dim + k]
    }

    pub fn gamma_value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma(i, j, k).value()
    }

    pub(crate) fn pi_jet(&self, i: usize, j: usize) -> &Jet {
        &self.pi[i * self.dim + j]
    }

    /// Torsion residual recorded at build time.
    pub fn torsion_residual(&self) -> f64 {
        self.torsion_residual
    }

    /// Metric-compatibility residual recorded at build time.
    pub fn compat_residual(&self) -> f64 {
        self.compat_residual
    }

    /// Testing aid: returns a copy with `Gamma^{ij}_k` shifted by `delta`
    /// and the recorded residuals recomputed.
    pub fn with_perturbed_symbol(&self, i: usize, j: usize, k: usize, delta: f64) -> Self {
        let mut out = self.clone();
        let n = self.dim;
        let idx = (i * n + j) * n + k;
        let space = out.gamma[idx].space().clone();
        out.gamma[idx] = out.gamma[idx].add(&Jet::constant(space, delta));
        out.torsion_residual = out.torsion().1;
        out.compat_residual = out.metric_compat_residual();
        out
    }

    /// `#dx^i(f)` for a jet `f`: `pi^{im} d_m f` (drops one jet order).
    pub(crate) fn sharp_coframe_apply(&self, i: usize, f: &Jet) -> Jet {
        let n = self.dim;
        let order = f.order() - 1;
        let mut acc = Jet::constant(jet_space(n, order), 0.0);
        for m in 0..n {
            acc = acc.add(&self.pi[i * n + m].truncate(order).mul(&f.derivative(m)));
        }
        acc
    }

    /// `D_{dx^i} dx^j` as a jet-valued 1-form.
    pub(crate) fn d_coframe(&self, i: usize, j: usize) -> JetForm {
        let n = self.dim;
        JetForm {
            dim: n,
            degree: 1,
            comps: (0..n).map(|k| self.gamma(i, j, k).clone()).collect(),
        }
    }

    /// `D_{dx^i} sigma` for a jet-valued form `sigma`; one jet order is
    /// consumed by the derivative part, and the symbols are truncated to
    /// match:
    /// `(D_{dx^i} s)_K = #dx^i(s_K) + sum_a sum_m Gamma^{im}_{K_a} s_{K[a -> m]}`.
    pub(crate) fn d_along_coframe(&self, i: usize, sigma: &JetForm) -> JetForm {
        let n = self.dim;
        let p = sigma.degree;
        // saturating: a form of degree > dim has no components, and the
        // order is then irrelevant.
        let out_order = sigma.order().saturating_sub(1);
        let table = crate::forms::tuples(n, p);
        let comps = table
            .iter()
            .map(|tuple| {
                let idx: Vec<usize> = tuple.iter().map(|&v| v as usize).collect();
                let mut acc = self.sharp_coframe_apply(i, &sigma.get(&idx));
                for a in 0..p {
                    for m in 0..n {
                        let mut swapped = idx.clone();
                        swapped[a] = m;
                        let term = self
                            .gamma(i, m, idx[a])
                            .truncate(out_order)
                            .mul(&sigma.get(&swapped).truncate(out_order));
                        acc = acc.add(&term);
                    }
                }
                acc
            })
            .collect();
        JetForm {
            dim: n,
            degree: p,
            comps,
        }
    }

    /// Contravariant torsion on the coordinate co-frame,
    /// `T^{ij}_k = Gamma^{ij}_k - Gamma^{ji}_k - d_k pi^{ij}`,
    /// plus its scale-free max residual.
    pub fn torsion(&self) -> (Vec<f64>, f64) {
        let n = self.dim;
        let mut t = vec![0.0; n * n * n];
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = self.gamma_value(i, j, k);
                    let b = self.gamma_value(j, i, k);
                    let c = self.pi[i * n + j].derivative(k).value();
                    scale = scale.max(a.abs()).max(b.abs()).max(c.abs());
                    let v = a - b - c;
                    t[(i * n + j) * n + k] = v;
                    worst = worst.max(v.abs());
                }
            }
        }
        (t, scale_free(worst, scale))
    }

    /// Metric-compatibility residual:
    /// `#dx^i(g^{jk}) - Gamma^{ij}_l g^{lk} - Gamma^{ik}_l g^{jl}`,
    /// scale-free max over `(i, j, k)`.
    pub fn metric_compat_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut lhs = 0.0;
                    for m in 0..n {
                        lhs += self.pi[i * n + m].value()
                            * self.ginv[j * n + k].derivative(m).value();
                    }
                    let mut rhs = 0.0;
                    for l in 0..n {
                        rhs += self.gamma_value(i, j, l) * self.ginv[l * n + k].value()
                            + self.gamma_value(i, k, l) * self.ginv[j * n + l].value();
                    }
                    scale = scale.max(lhs.abs()).max(rhs.abs());
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        scale_free(worst, scale)
    }

    /// Contravariant curvature `K(dx^i, dx^j) dx^k = K^{ijk}_l dx^l`:
    ///
    /// `K^{ijk}_l = #dx^i(G^{jk}_l) - #dx^j(G^{ik}_l)
    ///            + G^{jk}_m G^{im}_l - G^{ik}_m G^{jm}_l
    ///            - d_m(pi^{ij}) G^{mk}_l`
    ///
    /// (writing `G` for `Gamma`). Returns the dense tensor and its
    /// scale-free max; the connection is flat when the residual vanishes.
    pub fn curvature(&self) -> (Vec<f64>, f64) {
        let n = self.dim;
        assert!(
            self.order >= 1,
            "curvature needs Gamma jets of order >= 1"
        );
        let mut out = vec![0.0; n * n * n * n];
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            let t1 = self.pi[i * n + m].value()
                                * self.gamma(j, k, l).derivative(m).value();
                            let t2 = self.pi[j * n + m].value()
                                * self.gamma(i, k, l).derivative(m).value();
                            let t3 = self.gamma_value(j, k, m) * self.gamma_value(i, m, l);
                            let t4 = self.gamma_value(i, k, m) * self.gamma_value(j, m, l);
                            let t5 = self.pi[i * n + j].derivative(m).value()
                                * self.gamma_value(m, k, l);
                            scale = scale
                                .max(t1.abs())
                                .max(t2.abs())
                                .max(t3.abs())
                                .max(t4.abs())
                                .max(t5.abs());
                            acc += t1 - t2 + t3 - t4 - t5;
                        }
                        out[((i * n + j) * n + k) * n + l] = acc;
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        (out, scale_free(worst, scale))
    }
}

/// Contravariant torsion of a connection (exposed as a free function to
/// match the operation vocabulary; see [`ContraChristoffel::torsion`]).
pub fn contra_torsion(conn: &ContraChristoffel) -> (Vec<f64>, f64) {
    conn.torsion()
}

/// Contravariant curvature tensor with its flatness residual.
pub fn contra_curvature(conn: &ContraChristoffel) -> (Vec<f64>, f64) {
    conn.curvature()
}

// ---------------------------------------------------------------------------
// Cotangent geodesics
// ---------------------------------------------------------------------------

/// A point of the cotangent bundle: base coordinates and covector.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentState {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Metric norm `|xi| = sqrt(g^{ij} xi_i xi_j)` of the covector.
pub fn cotangent_norm(g: &MetricField, state: &CotangentState) -> Result<f64> {
    let n = g.dim();
    let gj = g.eval_jets(&state.u, 0)?;
    let ginv = invert_jet_matrix(&gj, n, &state.u)?;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += ginv[i * n + j].value() * state.xi[i] * state.xi[j];
        }
    }
    if acc < 0.0 {
        return Err(Error::SingularMetric {
            point: state.u.clone(),
        });
    }
    Ok(acc.sqrt())
}

fn geodesic_rhs(
    g: &MetricField,
    pi: &PoissonField,
    u: &[f64],
    xi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.dim();
    let conn = metric_contra_connection(g, pi, u, 0)?;
    let pm = pi.eval_matrix(u)?;
    // u_dot = #xi, (#xi)^i = pi^{ji} xi_j
    let u_dot: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| pm[j * n + i] * xi[j]).sum())
        .collect();
    // xi_dot_k = -Gamma^{ij}_k xi_i xi_j
    let xi_dot: Vec<f64> = (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc -= conn.gamma_value(i, j, k) * xi[i] * xi[j];
                }
            }
            acc
        })
        .collect();
    Ok((u_dot, xi_dot))
}

/// One classical explicit fourth-order step of the cotangent geodesic
/// system `u_dot = #xi`, `xi_dot_k = -Gamma^{ij}_k xi_i xi_j`.
pub fn geodesic_step(
    g: &MetricField,
    pi: &PoissonField,
    state: &CotangentState,
    dt: f64,
) -> Result<CotangentState> {
    if dt <= 0.0 {
        return Err(Error::InvalidInput("step size must be positive".into()));
    }
    let n = g.dim();
    let eval = |u: &[f64], xi: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        geodesic_rhs(g, pi, u, xi).map_err(|e| Error::LeftChartDomain {
            point: u.to_vec(),
            reason: e.to_string(),
        })
    };
    let shift = |base: &CotangentState, ku: &[f64], kx: &[f64], s: f64| -> CotangentState {
        CotangentState {
            u: (0..n).map(|i| base.u[i] + s * ku[i]).collect(),
            xi: (0..n).map(|i| base.xi[i] + s * kx[i]).collect(),
        }
    };
    let (k1u, k1x) = eval(&state.u, &state.xi)?;
    let s2 = shift(state, &k1u, &k1x, dt / 2.0);
    let (k2u, k2x) = eval(&s2.u, &s2.xi)?;
    let s3 = shift(state, &k2u, &k2x, dt / 2.0);
    let (k3u, k3x) = eval(&s3.u, &s3.xi)?;
    let s4 = shift(state, &k3u, &k3x, dt);
    let (k4u, k4x) = eval(&s4.u, &s4.xi)?;
    Ok(CotangentState {
        u: (0..n)
            .map(|i| state.u[i] + dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]))
            .collect(),
        xi: (0..n)
            .map(|i| state.xi[i] + dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
            .collect(),
    })
}

/// Integrates `steps` geodesic steps, returning the trajectory (including
/// the initial state) and the max relative drift of the covector norm.
pub fn geodesic_run(
    g: &MetricField,
    pi: &PoissonField,
    initial: CotangentState,
    steps: usize,
    dt: f64,
) -> Result<(Vec<CotangentState>, f64)> {
    let norm0 = cotangent_norm(g, &initial)?;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(initial);
    let mut max_drift: f64 = 0.0;
    for _ in 0..steps {
        let next = geodesic_step(g, pi, trajectory.last().unwrap(), dt)?;
        let norm = cotangent_norm(g, &next)?;
        if norm0 > 0.0 {
            max_drift = max_drift.max((norm - norm0).abs() / norm0);
        }
        trajectory.push(next);
    }
    Ok((trajectory, max_drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarExpr;

    fn x() -> ScalarExpr {
        ScalarExpr::coord(0)
    }
    fn y() -> ScalarExpr {
        ScalarExpr::coord(1)
    }

    fn conformal(h: &ScalarExpr) -> MetricField {
        MetricField::diagonal(2, h.clone().powi(-2))
    }

    fn quadratic_h() -> ScalarExpr {
        ScalarExpr::one() + x() * x() + y() * y()
    }

    #[test]
    fn levi_civita_vanishes_for_constant_metric() {
        let g = MetricField::identity(3);
        let c = levi_civita(&g, &[0.3, 0.1, -0.2]).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn levi_civita_conformal_hand_values() {
        // g = h^-2 delta with h = 1 + x^2 + y^2.
        let h = quadratic_h();
        let g = conformal(&h);
        // At the origin h is critical, so all symbols vanish.
        let c0 = levi_civita(&g, &[0.0, 0.0]).unwrap();
        assert!(c0.max_abs() < 1e-14);
        // At (1,0): Gamma^1_{11} = -d_x log h = -1.
        let c = levi_civita(&g, &[1.0, 0.0]).unwrap();
        assert!((c.gamma(0, 0, 0) + 1.0).abs() < 1e-12);
        // Symmetry in the lower pair.
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(c.gamma(k, i, j), c.gamma(k, j, i));
                }
            }
        }
    }

    #[test]
    fn scalar_curvature_flat_and_sphere() {
        let flat = MetricField::identity(2);
        assert_eq!(scalar_curvature(&flat, &[0.4, 0.5]).unwrap(), 0.0);

        // h = a + b(x^2+y^2): Gaussian curvature 4ab everywhere.
        let (a, b) = (1.3, 0.6);
        let h = ScalarExpr::constant(a) + (x() * x() + y() * y()) * b;
        let g = conformal(&h);
        for p in [[0.0, 0.0], [0.7, -0.4], [1.5, 2.0]] {
            let k = gaussian_curvature(&g, &p).unwrap();
            assert!(
                (k - 4.0 * a * b).abs() < 1e-9 * (4.0 * a * b),
                "K = {k} at {p:?}"
            );
        }
    }

    #[test]
    fn gaussian_curvature_matches_conformal_formula_for_cubic() {
        // h = 1 + x^3 at (1,1): K = h lap(h) - |grad h|^2 = 2*6 - 9 = 3.
        let h = ScalarExpr::one() + x().powi(3);
        let g = conformal(&h);
        let k = gaussian_curvature(&g, &[1.0, 1.0]).unwrap();
        assert!((k - 3.0).abs() < 1e-10, "K = {k}");
    }

    #[test]
    fn contra_connection_trivial_for_constant_data() {
        let g = MetricField::identity(2);
        let pi =
            PoissonField::from_entries(2, &[(0, 1, ScalarExpr::constant(0.5))]).unwrap();
        let conn = metric_contra_connection(&g, &pi, &[0.2, 0.9], 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(conn.gamma_value(i, j, k), 0.0);
                }
            }
        }
        assert_eq!(conn.torsion_residual(), 0.0);
        assert_eq!(conn.curvature().1, 0.0);
    }

    #[test]
    fn contra_connection_conformal_hand_values() {
        // For g = h^-2 delta, pi^{12} = h the symbols are
        // Gamma^{ij}_k = delta^j_k v^i with v = (h_y, -h_x).
        let h = quadratic_h();
        let g = conformal(&h);
        let pi = PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap();
        let p = [1.0, 0.0]; // h = 2, h_x = 2, h_y = 0
        let conn = metric_contra_connection(&g, &pi, &p, 1).unwrap();
        let expect = |i: usize, j: usize, k: usize| -> f64 {
            let v = [0.0, -2.0]; // (h_y, -h_x) at (1, 0)
            if j == k {
                v[i]
            } else {
                0.0
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let got = conn.gamma_value(i, j, k);
                    assert!(
                        (got - expect(i, j, k)).abs() < 1e-12,
                        "Gamma^{{{i}{j}}}_{k} = {got}, expected {}",
                        expect(i, j, k)
                    );
                }
            }
        }
        assert!(conn.torsion_residual() < 1e-12);
        assert!(conn.compat_residual() < 1e-12);
    }

    #[test]
    fn curvature_antisymmetric_in_first_index_pair() {
        // Exact (not just approximate) antisymmetry: swapping (i, j)
        // negates every term of the assembly identically.
        let h = quadratic_h();
        let g = conformal(&h);
        let pi = PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap();
        let conn = metric_contra_connection(&g, &pi, &[0.9, -0.3], 1).unwrap();
        let (k, _) = conn.curvature();
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    for l in 0..n {
                        assert_eq!(
                            k[((i * n + j) * n + kk) * n + l],
                            -k[((j * n + i) * n + kk) * n + l]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conformal_family_is_flat_for_any_h() {
        for h in [quadratic_h(), ScalarExpr::one() + x().powi(3)] {
            let g = conformal(&h);
            let pi = PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap();
            for p in [[0.3, -0.5], [1.0, 1.0], [0.0, 0.8]] {
                let conn = metric_contra_connection(&g, &pi, &p, 1).unwrap();
                let (_, flat) = conn.curvature();
                assert!(flat < 1e-12, "curvature residual {flat} at {p:?}");
            }
        }
    }

    #[test]
    fn perturbed_symbols_show_torsion() {
        let h = quadratic_h();
        let g = conformal(&h);
        let pi = PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap();
        let conn = metric_contra_connection(&g, &pi, &[0.4, 0.7], 1).unwrap();
        let bad = conn.with_perturbed_symbol(0, 1, 0, 1.0);
        assert!(bad.torsion_residual() > 0.1);
    }

    #[test]
    fn geodesic_stationary_when_bivector_vanishes() {
        let g = MetricField::identity(2);
        let pi = PoissonField::zero(2);
        let s0 = CotangentState {
            u: vec![0.3, 0.4],
            xi: vec![1.0, -2.0],
        };
        let s1 = geodesic_step(&g, &pi, &s0, 0.1).unwrap();
        assert_eq!(s0, s1);
    }

    #[test]
    fn geodesic_straight_line_on_flat_torus() {
        let g = MetricField::identity(2);
        let pi = PoissonField::from_entries(2, &[(0, 1, ScalarExpr::one())]).unwrap();
        let s0 = CotangentState {
            u: vec![0.0, 0.0],
            xi: vec![1.0, 0.0],
        };
        let (traj, drift) = geodesic_run(&g, &pi, s0, 100, 0.01).unwrap();
        let last = traj.last().unwrap();
        // u_dot = #dx = d_y: motion along y at unit speed; xi constant.
        assert!((last.u[1] - 1.0).abs() < 1e-12);
        assert!(last.u[0].abs() < 1e-12);
        assert_eq!(last.xi, vec![1.0, 0.0]);
        assert!(drift < 1e-14);
    }

    #[test]
    fn geodesic_leaving_the_domain_is_reported() {
        // Metric density 1/sqrt(x) is only defined for x > 0; a covector
        // pointing in -x drives the trajectory out of the domain.
        let g = MetricField::from_upper_triangle(
            2,
            vec![
                ScalarExpr::one() / x().sqrt(),
                ScalarExpr::zero(),
                ScalarExpr::one(),
            ],
        )
        .unwrap();
        let pi = PoissonField::from_entries(2, &[(0, 1, ScalarExpr::one())]).unwrap();
        let mut state = CotangentState {
            u: vec![0.05, 0.0],
            xi: vec![0.0, 1.0], // #dy = -d_x
        };
        let mut left = false;
        for _ in 0..100 {
            match geodesic_step(&g, &pi, &state, 0.01) {
                Ok(next) => state = next,
                Err(Error::LeftChartDomain { .. }) => {
                    left = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(left, "trajectory should have left the chart domain");
    }

    #[test]
    fn geodesic_conserves_cotangent_norm_on_sphere_chart() {
        let h = quadratic_h();
        let g = conformal(&h);
        let pi = PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap();
        let s0 = CotangentState {
            u: vec![0.3, -0.2],
            xi: vec![0.7, 0.4],
        };
        let (_, drift) = geodesic_run(&g, &pi, s0, 1000, 1e-3).unwrap();
        assert!(drift <= 1e-6, "norm drift {drift}");
    }
}
