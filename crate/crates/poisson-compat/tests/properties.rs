//! Property tests for the exterior-calculus kernels and the structural
//! identities of the Poisson machinery, plus proptest coverage of the
//! antisymmetric storage.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_smooth_expr, random_tame_point};
use poisson_compat::catalog;
use poisson_compat::fields::{check_jacobi, koszul_bracket, lie_form};
use poisson_compat::forms::{contract, wedge, FormField, FormValue, MultivectorValue, VectorField};
use poisson_compat::{eval_jet, ScalarExpr};

fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for shorter in all_permutations(k - 1) {
        for pos in 0..k {
            let mut perm = shorter.clone();
            perm.insert(pos, k - 1);
            out.push(perm);
        }
    }
    out
}

fn parity(perm: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// Brute-force wedge: full antisymmetrization with 1/(p! q!) weights,
// summing over every permutation of the index positions.
fn wedge_brute(a: &FormValue, b: &FormValue, idx: &[usize]) -> f64 {
    let p = a.degree();
    let q = b.degree();
    let mut acc = 0.0;
    for perm in all_permutations(p + q) {
        let aidx: Vec<usize> = perm[..p].iter().map(|&i| idx[i]).collect();
        let bidx: Vec<usize> = perm[p..].iter().map(|&i| idx[i]).collect();
        acc += parity(&perm) * a.get(&aidx) * b.get(&bidx);
    }
    let fact = |m: usize| (1..=m).product::<usize>() as f64;
    acc / (fact(p) * fact(q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Wedge agrees with the full antisymmetrization oracle.
    #[test]
    fn wedge_matches_brute_force(
        ac in proptest::collection::vec(-3.0f64..3.0, 4),
        bc in proptest::collection::vec(-3.0f64..3.0, 6),
    ) {
        // a: 1-form, b: 2-form in dimension 4.
        let a = FormValue::from_increasing(4, 1, ac).unwrap();
        let b = FormValue::from_increasing(4, 2, bc).unwrap();
        let w = wedge(&a, &b).unwrap();
        for idx in [[0usize, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3], [2, 0, 3]] {
            let got = w.get(&idx);
            let expected = wedge_brute(&a, &b, &idx);
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    // Iterated-contraction nesting: (X ^ Y) _| s = Y _| (X _| s).
    #[test]
    fn contraction_nesting_matches_iterated(
        xc in proptest::collection::vec(-2.0f64..2.0, 3),
        yc in proptest::collection::vec(-2.0f64..2.0, 3),
        sc in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let x = MultivectorValue::vector(xc);
        let y = MultivectorValue::vector(yc);
        let sigma = FormValue::from_increasing(3, 2, sc).unwrap();
        // X ^ Y through the jet kernel (multivector wedge).
        let xy = {
            let xf = FormValue::from_increasing(3, 1, x.components().to_vec()).unwrap();
            let yf = FormValue::from_increasing(3, 1, y.components().to_vec()).unwrap();
            let w = wedge(&xf, &yf).unwrap();
            MultivectorValue::from_increasing(3, 2, w.components().to_vec()).unwrap()
        };
        let lhs = contract(&xy, &sigma).unwrap();
        let inner = contract(&x, &sigma).unwrap();
        let rhs = contract(&y, &inner).unwrap();
        prop_assert!((lhs.scalar() - rhs.scalar()).abs() <= 1e-12 * rhs.scalar().abs().max(1.0));
    }

    // Antisymmetric accessors flip sign under transposition.
    #[test]
    fn form_accessor_antisymmetry(
        comps in proptest::collection::vec(-5.0f64..5.0, 6),
        i in 0usize..4, j in 0usize..4,
    ) {
        prop_assume!(i != j);
        let v = FormValue::from_increasing(4, 2, comps).unwrap();
        prop_assert_eq!(v.get(&[i, j]), -v.get(&[j, i]));
        let m = MultivectorValue::from_increasing(4, 2, v.components().to_vec()).unwrap();
        prop_assert_eq!(m.get(&[i, j]), -m.get(&[j, i]));
    }
}

#[test]
fn d_squared_vanishes_on_random_scalar_fields() {
    // Random degree-<=4 polynomials f: the differential df exists in
    // closed form through the exact monomial oracle, and d(df) must
    // vanish at every point.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for dim in [2usize, 3] {
        for _ in 0..10 {
            let (_, poly) = common::random_polynomial_pair(dim, &mut rng);
            let df_comps: Vec<ScalarExpr> = (0..dim)
                .map(|i| {
                    let mut alpha = vec![0u8; dim];
                    alpha[i] = 1;
                    poly_derivative_expr(&poly, &alpha)
                })
                .collect();
            let df = FormField::one_form(df_comps).unwrap();
            let p = random_tame_point(dim, &mut rng);
            let dd = poisson_compat::forms::exterior_d(&df, &p).unwrap();
            assert!(dd.max_abs() < 1e-9, "d^2 = {} at {p:?}", dd.max_abs());
        }
    }
}

/// Exact derivative of a polynomial oracle, rebuilt as an expression.
fn poly_derivative_expr(poly: &common::Poly, alpha: &[u8]) -> ScalarExpr {
    let mut acc = ScalarExpr::zero();
    'terms: for (e, c) in &poly.terms {
        let mut coeff = *c;
        let mut mono = ScalarExpr::one();
        for i in 0..poly.dim {
            if e[i] < alpha[i] {
                continue 'terms;
            }
            for k in 0..alpha[i] {
                coeff *= (e[i] - k) as f64;
            }
            for _ in 0..(e[i] - alpha[i]) {
                mono = mono * ScalarExpr::coord(i);
            }
        }
        acc = acc + mono * coeff;
    }
    acc
}

#[test]
fn cartan_formula_on_random_one_forms() {
    // L_X s = X _| ds + d(X _| s), established with independent pieces:
    // lie_form on one side; exterior_d, contract and a jet-level d(X _| s)
    // on the other.
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for dim in [2usize, 3] {
        for _ in 0..10 {
            let sigma = FormField::one_form(
                (0..dim).map(|_| random_smooth_expr(dim, &mut rng)).collect(),
            )
            .unwrap();
            let xf = VectorField::new(
                (0..dim).map(|_| random_smooth_expr(dim, &mut rng)).collect(),
            )
            .unwrap();
            let p = random_tame_point(dim, &mut rng);

            let lhs = lie_form(&xf, &sigma, &p).unwrap();

            // X _| ds at the point.
            let ds = poisson_compat::forms::exterior_d(&sigma, &p).unwrap();
            let xval = MultivectorValue::vector(xf.eval(&p).unwrap());
            let t1 = contract(&xval, &ds).unwrap();

            // d(X _| s): the scalar X^i s_i as an expression, then d.
            let pairing: ScalarExpr = (0..dim)
                .map(|i| xf.components()[i].clone() * sigma.components()[i].clone())
                .reduce(|a, b| a + b)
                .unwrap();
            let pj = eval_jet(&pairing, &p, 1).unwrap();
            let t2: Vec<f64> = (0..dim).map(|i| pj.derivative(i).value()).collect();
            let t2 = FormValue::from_increasing(dim, 1, t2).unwrap();

            let rhs = t1.add(&t2);
            let diff = lhs.sub(&rhs).max_abs();
            assert!(
                diff < 1e-9 * rhs.max_abs().max(1.0),
                "Cartan residual {diff} at {p:?}"
            );
        }
    }
}

#[test]
fn sharp_intertwines_koszul_and_lie_brackets() {
    // #[df, dg]_pi = [#df, #dg] on exact 1-forms, for every catalog
    // Poisson structure.
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for name in catalog::entry_names() {
        if *name == "broken-jacobi" {
            continue;
        }
        let entry = catalog::get_entry(name).unwrap();
        let pi = &entry.bundle.poisson;
        let n = pi.dim();
        for _ in 0..5 {
            let f = random_smooth_expr(n, &mut rng);
            let g = random_smooth_expr(n, &mut rng);
            let p = random_tame_point(n, &mut rng);

            // df, dg as 1-form fields via order-2 jets is not available
            // at the expression level, so bracket the differentials
            // numerically: [#df, #dg]^i = (#df)^k d_k (#dg)^i - (dg <-> df).
            let fj = eval_jet(&f, &p, 2).unwrap();
            let gj = eval_jet(&g, &p, 2).unwrap();
            let pij = |i: usize, j: usize| pi.entry(i, j);
            // (#df)^i = pi^{ji} d_j f as a jet (order 1).
            let sharp_jets = |hj: &poisson_compat::Jet| -> Vec<poisson_compat::Jet> {
                (0..n)
                    .map(|i| {
                        let mut acc: Option<poisson_compat::Jet> = None;
                        for j in 0..n {
                            let pje = eval_jet(&pij(j, i), &p, 1).unwrap();
                            let term = pje.mul(&hj.derivative(j));
                            acc = Some(match acc {
                                None => term,
                                Some(s) => s.add(&term),
                            });
                        }
                        acc.unwrap()
                    })
                    .collect()
            };
            let sf = sharp_jets(&fj);
            let sg = sharp_jets(&gj);
            let lie_bracket: Vec<f64> = (0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += sf[k].value() * sg[i].derivative(k).value()
                            - sg[k].value() * sf[i].derivative(k).value();
                    }
                    acc
                })
                .collect();

            // The Koszul bracket of exact forms is d{f,g}; sharp of that is
            // computed numerically from {f,g} jets.
            let mut bracket_jet: Option<poisson_compat::Jet> = None;
            for i in 0..n {
                for j in 0..n {
                    let pje = eval_jet(&pij(i, j), &p, 2).unwrap();
                    let term = pje.mul(&fj.derivative(i)).mul(&gj.derivative(j));
                    bracket_jet = Some(match bracket_jet {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
            }
            let bracket_jet = bracket_jet.unwrap(); // {f,g} as an order-1 jet
            let d_bracket: Vec<f64> = (0..n).map(|i| bracket_jet.derivative(i).value()).collect();
            let sharp_d_bracket: Vec<f64> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| pij(j, i).eval(&p).unwrap() * d_bracket[j])
                        .sum()
                })
                .collect();

            for i in 0..n {
                let diff = (lie_bracket[i] - sharp_d_bracket[i]).abs();
                let scale = lie_bracket[i].abs().max(sharp_d_bracket[i].abs()).max(1.0);
                assert!(
                    diff <= 1e-9 * scale,
                    "{name}: anchor intertwining fails at {p:?} (component {i}: {} vs {})",
                    lie_bracket[i],
                    sharp_d_bracket[i]
                );
            }
        }
    }
}

#[test]
fn koszul_bracket_reduces_to_d_of_poisson_bracket() {
    // [df, dg]_pi = d{f, g} on polynomial exact forms where the
    // differentials exist in closed form.
    let pi = catalog::get_entry("r3-su2").unwrap().bundle.poisson;
    let x = ScalarExpr::coord(0);
    let y = ScalarExpr::coord(1);
    let z = ScalarExpr::coord(2);
    // f = x y, g = z: df = (y, x, 0), dg = (0, 0, 1).
    let df = FormField::one_form(vec![y.clone(), x.clone(), ScalarExpr::zero()]).unwrap();
    let dg = FormField::one_form(vec![
        ScalarExpr::zero(),
        ScalarExpr::zero(),
        ScalarExpr::one(),
    ])
    .unwrap();
    let f = x.clone() * y.clone();
    let g = z;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..5 {
        let p = random_tame_point(3, &mut rng);
        let lhs = koszul_bracket(&pi, &df, &dg, &p).unwrap();
        // d{f,g} numerically from {f,g} jets.
        let fj = eval_jet(&f, &p, 2).unwrap();
        let gj = eval_jet(&g, &p, 2).unwrap();
        let mut bracket: Option<poisson_compat::Jet> = None;
        for i in 0..3 {
            for j in 0..3 {
                let pje = eval_jet(&pi.entry(i, j), &p, 1).unwrap();
                let term = pje.mul(&fj.derivative(i).truncate(1)).mul(&gj.derivative(j).truncate(1));
                bracket = Some(match bracket {
                    None => term,
                    Some(s) => s.add(&term),
                });
            }
        }
        let bracket = bracket.unwrap();
        for i in 0..3 {
            let expected = bracket.derivative(i).value();
            assert!(
                (lhs.get(&[i]) - expected).abs() < 1e-10 * expected.abs().max(1.0),
                "component {i} at {p:?}"
            );
        }
    }
}

#[test]
fn jacobi_residual_vanishes_for_all_catalog_structures() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for name in catalog::entry_names() {
        if *name == "broken-jacobi" {
            continue;
        }
        let entry = catalog::get_entry(name).unwrap();
        let n = entry.bundle.chart.dim();
        for _ in 0..6 {
            let p = random_tame_point(n, &mut rng);
            let r = check_jacobi(&entry.bundle.poisson, &p).unwrap();
            assert!(r <= 1e-9, "{name}: Jacobi residual {r} at {p:?}");
        }
    }
}

#[test]
fn scalar_curvature_matches_conformal_surface_formula() {
    // For g = h^-2 delta in two dimensions the Gaussian curvature is
    // h (h_xx + h_yy) - (h_x^2 + h_y^2); evaluate that independently from
    // jets of h and compare with the full Riemann pipeline.
    use poisson_compat::connection::gaussian_curvature;
    use poisson_compat::MetricField;

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..8 {
        // Positive h on the sampling region: 2 + small smooth part.
        let bump = random_smooth_expr(2, &mut rng);
        let h = ScalarExpr::constant(3.0) + bump * 0.2;
        let g = MetricField::diagonal(2, h.clone().powi(-2));
        for _ in 0..3 {
            let p = random_tame_point(2, &mut rng);
            let hj = eval_jet(&h, &p, 2).unwrap();
            let (hx, hy) = (hj.derivative(0).value(), hj.derivative(1).value());
            let lap = hj.partial(&[2, 0]).unwrap() + hj.partial(&[0, 2]).unwrap();
            let expected = hj.value() * lap - (hx * hx + hy * hy);
            let got = gaussian_curvature(&g, &p).unwrap();
            assert!(
                (got - expected).abs() <= 1e-8 * expected.abs().max(1.0),
                "K = {got}, conformal formula gives {expected} at {p:?}"
            );
        }
    }
}

#[test]
fn volume_identity_biconditional() {
    // Where D eps = 0 the identity phi _| eps = -d(pi _| eps) holds; with
    // a non-parallel volume the same combination has a visible residual.
    use poisson_compat::catalog;
    use poisson_compat::divergence::{check_d_epsilon, modular_vector};
    use poisson_compat::{MultivectorValue, VolumeField};

    let identity_residual = |bundle: &poisson_compat::catalog::ChartBundle,
                             eps: &VolumeField,
                             p: &[f64]|
     -> f64 {
        let n = bundle.chart.dim();
        let phi = modular_vector(&bundle.metric, &bundle.poisson, p, 0).unwrap();
        let phi_mv = MultivectorValue::vector(phi.components.clone());
        let eps_val = eps.as_form_field().eval(p).unwrap();
        let lhs = contract(&phi_mv, &eps_val).unwrap();
        // d(pi _| eps) from the contracted (n-2)-form field: assemble the
        // contraction pointwise and differentiate via exterior_d on an
        // expression-level field when the data is closed-form. Here we
        // lean on volume_compat's internals being exercised elsewhere and
        // evaluate d numerically through the library by building
        // pi _| eps as expressions for these diagonal charts.
        let _ = n;
        let d_hook = {
            // For the 2-dimensional charts used here pi _| eps is the
            // scalar pi^{12} eps_{12}; d of it comes from jets.
            let pi12 = bundle.poisson.entry(0, 1);
            let rho = eps.density().clone();
            let scalar = pi12 * rho;
            let jet = eval_jet(&scalar, p, 1).unwrap();
            FormValue::from_increasing(
                2,
                1,
                (0..2).map(|i| jet.derivative(i).value()).collect(),
            )
            .unwrap()
        };
        lhs.add(&d_hook).max_abs()
    };

    let torus = catalog::get_entry("flat-torus-2d").unwrap().bundle;
    let p = [0.3, 0.4];
    // Parallel volume: biconditional forward direction.
    assert!(check_d_epsilon(&torus.metric, &torus.poisson, &torus.volume, &p).unwrap() <= 1e-10);
    assert!(identity_residual(&torus, &torus.volume, &p) <= 1e-8);

    // Scaled volume: D eps != 0 and the identity visibly fails.
    let scaled = VolumeField::new(2, ScalarExpr::coord(0).exp()).unwrap();
    assert!(check_d_epsilon(&torus.metric, &torus.poisson, &scaled, &p).unwrap() > 0.1);
    assert!(identity_residual(&torus, &scaled, &p) > 0.1);

    // Same two directions on the sphere chart (eps Riemannian, parallel).
    let sphere = catalog::get_entry("podles-sphere").unwrap().bundle;
    let p = [1.0, 0.5];
    assert!(check_d_epsilon(&sphere.metric, &sphere.poisson, &sphere.volume, &p).unwrap() <= 1e-10);
    assert!(identity_residual(&sphere, &sphere.volume, &p) <= 1e-8);
}

#[test]
fn killing_bracket_agrees_with_assembled_bracket_on_nil3() {
    use poisson_compat::catalog;
    use poisson_compat::killing::killing_form_bracket;
    use poisson_compat::metacurvature::bracket_one_forms;

    let b = catalog::get_entry("heisenberg-nil3").unwrap().bundle;
    let ks = b.killing.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..6 {
        let alpha = FormField::one_form(
            (0..3).map(|_| random_smooth_expr(3, &mut rng)).collect(),
        )
        .unwrap();
        let beta = FormField::one_form(
            (0..3).map(|_| random_smooth_expr(3, &mut rng)).collect(),
        )
        .unwrap();
        let p = random_tame_point(3, &mut rng);
        let via_killing = killing_form_bracket(ks, &alpha, &beta, &p).unwrap();
        let via_symbols = bracket_one_forms(&b.metric, &b.poisson, &alpha, &beta, &p).unwrap();
        let diff = via_killing.sub(&via_symbols).max_abs();
        let scale = via_symbols.max_abs().max(1.0);
        assert!(diff <= 1e-8 * scale, "bracket routes disagree: {diff} at {p:?}");
    }
}

#[test]
fn contra_connection_matches_finite_difference_koszul() {
    // Rebuild the symbols from the same contravariant Koszul formula but
    // with finite-difference derivatives of g^{-1} and pi in place of
    // jets: an independent derivative path through the defining formula.
    use common::fd_partial;
    use poisson_compat::connection::metric_contra_connection;
    use poisson_compat::catalog::podles_sphere_with;

    let b = podles_sphere_with(1.0, 1.0);
    let n = 2usize;
    let p = [1.0, 0.0];

    let ginv_at = |x: &[f64], i: usize, j: usize| -> f64 {
        let m = b.metric.eval_matrix(x).unwrap();
        // 2x2 inverse.
        let det = m[0] * m[3] - m[1] * m[2];
        let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
        inv[i * 2 + j]
    };
    let pi_at = |x: &[f64], i: usize, j: usize| -> f64 {
        b.poisson.eval_matrix(x).unwrap()[i * n + j]
    };
    let e = |k: usize| {
        let mut a = [0u8; 2];
        a[k] = 1;
        a.to_vec()
    };
    let d_ginv = |i: usize, j: usize, m: usize| -> f64 {
        fd_partial(&|x: &[f64]| ginv_at(x, i, j), &p, &e(m))
    };
    let d_pi = |i: usize, j: usize, m: usize| -> f64 {
        fd_partial(&|x: &[f64]| pi_at(x, i, j), &p, &e(m))
    };

    let mut gamma_fd = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut rhs = 0.0;
                for m in 0..n {
                    rhs += pi_at(&p, i, m) * d_ginv(j, k, m)
                        + pi_at(&p, j, m) * d_ginv(i, k, m)
                        - pi_at(&p, k, m) * d_ginv(i, j, m)
                        + d_pi(i, j, m) * ginv_at(&p, m, k)
                        - d_pi(j, k, m) * ginv_at(&p, m, i)
                        + d_pi(k, i, m) * ginv_at(&p, m, j);
                }
                // Lower the last slot with g.
                gamma_fd[(i * n + j) * n + k] = rhs;
            }
        }
    }
    let g = b.metric.eval_matrix(&p).unwrap();
    let conn = metric_contra_connection(&b.metric, &b.poisson, &p, 1).unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut lowered = 0.0;
                for l in 0..n {
                    lowered += 0.5 * gamma_fd[(i * n + j) * n + l] * g[l * n + k];
                }
                let exact = conn.gamma_value(i, j, k);
                assert!(
                    (lowered - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "Gamma^{{{i}{j}}}_{k}: fd {lowered}, jets {exact}"
                );
            }
        }
    }

    // The same transport drives the function/form bracket:
    // {x, dy} = D_dx dy = Gamma^{12}_k dx^k = h_y dy = 0 at (1, 0).
    use poisson_compat::forms::FormField;
    use poisson_compat::metacurvature::bracket_fn_form;
    let v = bracket_fn_form(
        &b.metric,
        &b.poisson,
        &ScalarExpr::coord(0),
        &FormField::coframe(2, 1),
        &p,
    )
    .unwrap();
    assert!((v.get(&[1]) - conn.gamma_value(0, 1, 1)).abs() < 1e-12);
    assert!(v.max_abs() < 1e-12);
}

#[test]
fn product_jets_equal_leibniz_convolution_of_factor_jets() {
    // eval_jet(f * g) must coincide entry-wise with the Leibniz product
    // of the separately evaluated factor jets, for random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..25 {
        let dim = 1 + (rng.gen_range(0..3u8) as usize);
        let f = random_smooth_expr(dim, &mut rng);
        let g = random_smooth_expr(dim, &mut rng);
        let p = random_tame_point(dim, &mut rng);
        let product = eval_jet(&(f.clone() * g.clone()), &p, 4).unwrap();
        let convolved = eval_jet(&f, &p, 4).unwrap().mul(&eval_jet(&g, &p, 4).unwrap());
        for alpha in common::multi_indices_up_to(dim, 4) {
            let a = product.partial(&alpha).unwrap();
            let b = convolved.partial(&alpha).unwrap();
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                "d^{alpha:?}: tree {a}, convolution {b}"
            );
        }
        assert!((product.value() - convolved.value()).abs() <= 1e-12 * product.value().abs().max(1.0));
    }
}

// ---------------------------------------------------------------------------
// Expression render / parse round trip
// ---------------------------------------------------------------------------

fn arb_expr(depth: u32) -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (0usize..2).prop_map(ScalarExpr::coord),
        (-3.0f64..3.0).prop_map(ScalarExpr::constant),
    ];
    leaf.prop_recursive(depth, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| -a),
            (inner.clone(), 0i32..4).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            // exp/sqrt/div omitted: unconstrained nesting overflows or
            // leaves the real domain, which is not what this test probes.
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // Rendering an expression and reparsing it preserves its values.
    #[test]
    fn render_parse_round_trip_is_semantically_identical(e in arb_expr(5)) {
        let names: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let text = e.render(&names);
        let back = poisson_compat::parse_expr(&text, &names).unwrap();
        for p in [[0.0, 0.0], [0.7, -0.3], [-1.1, 0.9], [2.0, 1.5]] {
            match (e.eval(&p), back.eval(&p)) {
                (Ok(a), Ok(b)) => {
                    let scale = a.abs().max(1.0);
                    prop_assert!((a - b).abs() <= 1e-12 * scale, "`{text}` at {p:?}: {a} vs {b}");
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "`{text}` at {p:?}: {a:?} vs {b:?}"),
            }
        }
    }
}
