//! The contravariant divergence, the modular vector field, the
//! Koszul-Brylinski codifferential, and the volume compatibility condition
//! `d(pi _| eps) = 0`.
//!
//! For a torsion-free contravariant connection there is a vector field
//! `phi` with `D.s = phi _| s - delta s` for every form `s`, where
//! `delta s = pi _| ds - d(pi _| s)`. For a volume form, `phi _| eps =
//! -d(pi _| eps)` exactly when `D eps = 0`; with the Riemannian volume and
//! the metric contravariant connection this turns the divergence condition
//! into the vanishing of the modular vector field.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::connection::{metric_contra_connection, ContraChristoffel};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::fields::{scale_free, MetricField, PoissonField, VolumeField};
use crate::forms::{FormField, FormValue, JetForm, MultivectorJet};
use crate::jet::jet_space;

/// The modular vector field of the metric contravariant connection at a
/// point, `phi^i = D.(dx^i)`, together with the verified residual of the
/// defining identity `D.a = phi _| a - pi _| da` on random 1-forms.
#[derive(Debug, Clone)]
pub struct ModularVector {
    pub point: Vec<f64>,
    pub components: Vec<f64>,
    pub identity_residual: f64,
}

impl ModularVector {
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Koszul-Brylinski codifferential `delta s = pi _| ds - d(pi _| s)` at a
/// point. Degree 1 drops the second term (there is no degree -1 form).
pub fn koszul_brylinski(
    pi: &PoissonField,
    sigma: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    let p = sigma.degree();
    if p < 1 {
        return Err(Error::DegreeMismatch(
            "the codifferential needs a form of degree >= 1".into(),
        ));
    }
    let sj = sigma.eval_jets(point, 2)?;
    let pj = pi.eval_bivector_jets(point, 2)?;
    Ok(kb_jets(&pj, &sj).value())
}

/// Jet-level codifferential; consumes one jet order.
pub(crate) fn kb_jets(pi: &MultivectorJet, sigma: &JetForm) -> JetForm {
    let p = sigma.degree;
    let n = sigma.dim;
    // d of a top-degree form vanishes identically.
    let term1 = if p < n {
        sigma.d().contract(pi).expect("degree p+1 >= 2")
    } else {
        JetForm::zero(n, p - 1, jet_space(n, sigma.order().saturating_sub(1)))
    };
    if p >= 2 {
        let term2 = sigma.contract(pi).expect("q <= p").d();
        term1.sub(&term2)
    } else {
        term1
    }
}

/// Contravariant divergence: the trace of `D` over the first form slot,
/// `(D.s)_K = (D_{dx^j} s)_{jK}`.
pub fn contra_divergence(
    g: &MetricField,
    pi: &PoissonField,
    sigma: &FormField,
    point: &[f64],
) -> Result<FormValue> {
    let conn = metric_contra_connection(g, pi, point, 1)?;
    let sj = sigma.eval_jets(point, 1)?;
    Ok(contra_divergence_jets(&conn, &sj).value())
}

pub(crate) fn contra_divergence_jets(conn: &ContraChristoffel, sigma: &JetForm) -> JetForm {
    let n = conn.dim();
    let p = sigma.degree;
    assert!(p >= 1, "divergence needs a form of degree >= 1");
    let out_order = sigma.order() - 1;
    let table = crate::forms::tuples(n, p - 1);
    let mut comps = vec![
        crate::jet::Jet::constant(jet_space(n, out_order), 0.0);
        table.len()
    ];
    for j in 0..n {
        let dj = conn.d_along_coframe(j, sigma);
        for (r, k) in table.iter().enumerate() {
            let mut idx: Vec<usize> = Vec::with_capacity(p);
            idx.push(j);
            idx.extend(k.iter().map(|&v| v as usize));
            comps[r] = comps[r].add(&dj.get(&idx));
        }
    }
    JetForm {
        dim: n,
        degree: p - 1,
        comps,
    }
}

/// Builds the modular vector field at a point and verifies the defining
/// identity `D.a = phi _| a - pi _| da` against `checks` seeded random
/// polynomial 1-forms.
pub fn modular_vector(
    g: &MetricField,
    pi: &PoissonField,
    point: &[f64],
    checks: usize,
) -> Result<ModularVector> {
    let n = g.dim();
    let conn = metric_contra_connection(g, pi, point, 1)?;
    // phi^i = D.(dx^i) = sum_j Gamma^{ji}_j
    let components: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| conn.gamma_value(j, i, j)).sum())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f64);
    let mut identity_residual: f64 = 0.0;
    for _ in 0..checks {
        let alpha = random_one_form(n, &mut rng);
        let aj = alpha.eval_jets(point, 2)?;
        let div = contra_divergence_jets(&conn, &aj).value().scalar();
        let aval = alpha.eval(point)?;
        let phi_hook: f64 = (0..n).map(|i| components[i] * aval.get(&[i])).sum();
        let pj = pi.eval_bivector_jets(point, 1)?;
        let pi_da = aj.d().contract(&pj).expect("bivector into 2-form").value().scalar();
        let scale = div.abs().max(phi_hook.abs()).max(pi_da.abs());
        identity_residual =
            identity_residual.max(scale_free((div - (phi_hook - pi_da)).abs(), scale));
    }
    Ok(ModularVector {
        point: point.to_vec(),
        components,
        identity_residual,
    })
}

/// A deterministic random 1-form with quadratic polynomial components.
pub(crate) fn random_one_form(n: usize, rng: &mut ChaCha8Rng) -> FormField {
    let comps = (0..n).map(|_| random_poly(n, rng)).collect();
    FormField::one_form(comps).expect("component count matches")
}

/// A deterministic random form field of a given degree.
#[cfg(test)]
pub(crate) fn random_form(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> FormField {
    let len = crate::forms::tuples(n, degree).len();
    let comps = (0..len).map(|_| random_poly(n, rng)).collect();
    FormField::from_components(n, degree, comps).expect("component count matches")
}

fn random_poly(n: usize, rng: &mut ChaCha8Rng) -> ScalarExpr {
    let mut e = ScalarExpr::constant(rng.gen_range(-1.0..1.0));
    for i in 0..n {
        e = e + ScalarExpr::coord(i) * rng.gen_range(-1.0..1.0);
        for j in i..n {
            e = e + ScalarExpr::coord(i) * ScalarExpr::coord(j) * rng.gen_range(-1.0..1.0);
        }
    }
    e
}

/// Scale-free max component of `d(pi _| eps)` at a point: the volume
/// compatibility residual.
pub fn volume_compat(pi: &PoissonField, eps: &VolumeField, point: &[f64]) -> Result<f64> {
    let n = pi.dim();
    if n < 2 {
        return Ok(0.0);
    }
    let ej = eps.as_form_field().eval_jets(point, 1)?;
    let pj = pi.eval_bivector_jets(point, 1)?;
    let contracted = ej.contract(&pj).expect("bivector into top form");
    let scale = contracted.max_abs_value();
    let residual = contracted.d().value().max_abs();
    Ok(scale_free(residual, scale))
}

/// Residual of the contravariant derivative of the volume form over the
/// co-frame directions: `D_{dx^i} eps = [#dx^i(rho) + rho Gamma^{ij}_j] dx^1..n`.
pub fn check_d_epsilon(
    g: &MetricField,
    pi: &PoissonField,
    eps: &VolumeField,
    point: &[f64],
) -> Result<f64> {
    let n = g.dim();
    let conn = metric_contra_connection(g, pi, point, 0)?;
    let rho = crate::jet::eval_jet(eps.density(), point, 1)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let sharp_rho = conn.sharp_coframe_apply(i, &rho).value();
        let trace: f64 = (0..n).map(|j| conn.gamma_value(i, j, j)).sum();
        let leibniz = rho.value() * trace;
        scale = scale.max(sharp_rho.abs()).max(leibniz.abs()).max(rho.value().abs());
        worst = worst.max((sharp_rho + leibniz).abs());
    }
    Ok(scale_free(worst, scale))
}

/// Scale-free residual of the divergence identity
/// `D.s = phi _| s - delta s` for one form field at one point.
pub fn divergence_identity_residual(
    g: &MetricField,
    pi: &PoissonField,
    sigma: &FormField,
    point: &[f64],
) -> Result<f64> {
    let p = sigma.degree();
    if p < 1 {
        return Err(Error::DegreeMismatch(
            "the divergence identity concerns forms of degree >= 1".into(),
        ));
    }
    let conn = metric_contra_connection(g, pi, point, 1)?;
    let phi = modular_vector(g, pi, point, 0)?;
    let sj = sigma.eval_jets(point, 2)?;
    let pj = pi.eval_bivector_jets(point, 2)?;

    let div = contra_divergence_jets(&conn, &sj).value();
    let delta = kb_jets(&pj, &sj).value();
    let phi_mv = crate::forms::MultivectorValue::vector(phi.components.clone());
    let hook = crate::forms::contract(&phi_mv, &sigma.eval(point)?)?;

    let rhs = hook.sub(&delta);
    let scale = div.max_abs().max(hook.max_abs()).max(delta.max_abs());
    Ok(scale_free(div.sub(&rhs).max_abs(), scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ScalarExpr {
        ScalarExpr::coord(0)
    }
    fn y() -> ScalarExpr {
        ScalarExpr::coord(1)
    }

    fn conformal_pair(h: &ScalarExpr) -> (MetricField, PoissonField) {
        (
            MetricField::diagonal(2, h.clone().powi(-2)),
            PoissonField::from_entries(2, &[(0, 1, h.clone())]).unwrap(),
        )
    }

    fn r3() -> (MetricField, PoissonField, VolumeField) {
        let pi = PoissonField::from_entries(
            3,
            &[
                (0, 1, ScalarExpr::one()),
                (0, 2, ScalarExpr::coord(1)),
                (1, 2, -ScalarExpr::coord(0)),
            ],
        )
        .unwrap();
        let g = MetricField::identity(3);
        let eps = VolumeField::new(3, ScalarExpr::one()).unwrap();
        (g, pi, eps)
    }

    #[test]
    fn codifferential_vanishes_for_constant_data() {
        let pi = PoissonField::from_entries(2, &[(0, 1, ScalarExpr::constant(0.7))]).unwrap();
        let sigma = FormField::one_form(vec![ScalarExpr::one(), ScalarExpr::constant(2.0)]).unwrap();
        let d = koszul_brylinski(&pi, &sigma, &[0.4, 0.1]).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn codifferential_of_volume_on_sphere_chart() {
        // delta eps = -d(pi _| eps); with pi _| eps = h^{-1} this is
        // -d(h^{-1}) = h^{-2} dh.
        let h = ScalarExpr::one() + x() * x() + y() * y();
        let (_, pi) = conformal_pair(&h);
        let eps = FormField::from_components(2, 2, vec![h.clone().powi(-2)]).unwrap();
        let p = [1.0, 0.0]; // h = 2, dh = (2, 0)
        let d = koszul_brylinski(&pi, &eps, &p).unwrap();
        assert!((d.get(&[0]) - 0.5).abs() < 1e-12, "{}", d.get(&[0]));
        assert!(d.get(&[1]).abs() < 1e-12);
    }

    #[test]
    fn codifferential_squares_to_zero() {
        let (_, pi, _) = r3();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let sigma = random_form(3, 2, &mut rng);
            let p = [0.3, -0.8, 0.5];
            let sj = sigma.eval_jets(&p, 3).unwrap();
            let pj = pi.eval_bivector_jets(&p, 3).unwrap();
            let dd = kb_jets(&pj, &kb_jets(&pj, &sj)).value();
            assert!(dd.max_abs() < 1e-9, "delta^2 = {}", dd.max_abs());
        }
    }

    #[test]
    fn modular_vector_of_flat_torus_vanishes() {
        let g = MetricField::identity(2);
        let pi = PoissonField::from_entries(2, &[(0, 1, ScalarExpr::constant(0.5))]).unwrap();
        let phi = modular_vector(&g, &pi, &[0.2, 0.9], 10).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        assert!(phi.identity_residual < 1e-12);
    }

    #[test]
    fn modular_vector_of_r3_chart_vanishes() {
        let (g, pi, _) = r3();
        let phi = modular_vector(&g, &pi, &[1.0, -0.4, 0.7], 10).unwrap();
        assert!(phi.max_abs() < 1e-13);
        assert!(phi.identity_residual < 1e-11);
    }

    #[test]
    fn modular_vector_on_conformal_chart() {
        // phi = (h_y, -h_x) on g = h^-2 delta, pi^{12} = h; with the
        // Riemannian volume D eps = 0 and phi _| eps = -d(pi _| eps).
        let h = ScalarExpr::one() + x().powi(3);
        let (g, pi) = conformal_pair(&h);
        let p = [1.0, 1.0]; // h_x = 3, h_y = 0
        let phi = modular_vector(&g, &pi, &p, 10).unwrap();
        assert!((phi.components[0] - 0.0).abs() < 1e-12);
        assert!((phi.components[1] + 3.0).abs() < 1e-12);
        assert!(phi.identity_residual < 1e-10);

        let eps = VolumeField::riemannian(&g);
        assert!(check_d_epsilon(&g, &pi, &eps, &p).unwrap() < 1e-12);

        // phi _| eps = -d(pi _| eps): both equal h^{-2} dh here.
        let ej = eps.as_form_field().eval_jets(&p, 1).unwrap();
        let phi_mv = crate::forms::MultivectorValue::vector(phi.components.clone());
        let lhs = crate::forms::contract(&phi_mv, &ej.value()).unwrap();
        let pj = pi.eval_bivector_jets(&p, 1).unwrap();
        let rhs = ej.contract(&pj).unwrap().d().value().scale(-1.0);
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn volume_compat_passes_on_r3_and_fails_on_sphere() {
        let (_, pi, eps) = r3();
        for p in [[0.5, 0.1, -0.3], [1.0, 1.0, 1.0]] {
            assert!(volume_compat(&pi, &eps, &p).unwrap() < 1e-14);
        }

        let h = ScalarExpr::one() + x() * x() + y() * y();
        let (g, pi2) = conformal_pair(&h);
        let eps2 = VolumeField::riemannian(&g);
        // At (1,0): residual = |d(h^{-1})| = h^{-2} |dh| = 0.5.
        let r = volume_compat(&pi2, &eps2, &[1.0, 0.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn d_epsilon_detects_scaled_volume() {
        let g = MetricField::identity(2);
        let pi = PoissonField::from_entries(2, &[(0, 1, ScalarExpr::constant(0.5))]).unwrap();
        let eps = VolumeField::new(2, x().exp()).unwrap();
        let r = check_d_epsilon(&g, &pi, &eps, &[0.3, 0.4]).unwrap();
        assert!(r > 0.1, "residual {r}");
    }

    #[test]
    fn divergence_identity_across_degrees_on_r3() {
        let (g, pi, _) = r3();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for degree in 1..=3 {
            for _ in 0..4 {
                let sigma = random_form(3, degree, &mut rng);
                let r =
                    divergence_identity_residual(&g, &pi, &sigma, &[0.4, -0.6, 0.2]).unwrap();
                assert!(r < 1e-10, "degree {degree}: residual {r}");
            }
        }
    }

    #[test]
    fn contra_divergence_of_coframe_is_modular_component() {
        // D.(df) = phi(f): check on f = x^i, i.e. sigma = dx^i.
        let h = ScalarExpr::one() + x().powi(3);
        let (g, pi) = conformal_pair(&h);
        let p = [0.8, -0.1];
        let phi = modular_vector(&g, &pi, &p, 0).unwrap();
        for i in 0..2 {
            let d = contra_divergence(&g, &pi, &FormField::coframe(2, i), &p)
                .unwrap()
                .scalar();
            assert!((d - phi.components[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn contra_divergence_r3_dz() {
        let (g, pi, _) = r3();
        let d = contra_divergence(&g, &pi, &FormField::coframe(3, 2), &[1.0, 1.0, 1.0])
            .unwrap()
            .scalar();
        assert!(d.abs() < 1e-14, "phi^3 = {d}");
    }
}
