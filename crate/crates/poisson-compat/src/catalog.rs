//! Built-in chart definitions with their expected verdicts.
//!
//! Each entry packages a chart, a metric, a bivector and a volume form
//! (plus an optional Killing system and flat-frame declaration) together
//! with the verdicts a full check run must reproduce. The entries cover
//! flat tori in several dimensions, the constant-curvature sphere chart
//! with its rotation-invariant quadratic bivector, a cubic conformal
//! deformation of it, the 3-dimensional nil-manifold, the rotation-bracket
//! structure on Euclidean 3-space, a 4-torus symplectic quotient chart,
//! and a deliberately broken bivector.
//!
//! Tori and quotients appear as single periodicity-agnostic charts: every
//! implemented condition is local and pointwise, so the global
//! identifications never enter a verdict — the chart is the local model.

use std::f64::consts::SQRT_2;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::fields::{MetricField, PoissonField, VolumeField};
use crate::forms::VectorField;
use crate::killing::KillingSystem;
use crate::report::{Overall, Verdict};

/// Everything a check run consumes: the chart plus its tensor fields.
#[derive(Debug, Clone)]
pub struct ChartBundle {
    pub name: Option<String>,
    pub chart: Chart,
    pub metric: MetricField,
    pub poisson: PoissonField,
    pub volume: VolumeField,
    pub killing: Option<KillingSystem>,
    /// True when the chart coordinates are affine for the flat covariant
    /// connection induced by `D` (enables the symplectic metacurvature
    /// oracle where `pi` is invertible).
    pub flat_frame: bool,
}

/// Expected verdicts for a catalog entry.
#[derive(Debug, Clone)]
pub struct ExpectedVerdicts {
    pub jacobi: Verdict,
    pub torsion: Verdict,
    pub flatness: Verdict,
    pub metacurvature: Verdict,
    pub divergence: Verdict,
    pub overall: Overall,
}

impl ExpectedVerdicts {
    fn all_pass() -> Self {
        ExpectedVerdicts {
            jacobi: Verdict::Pass,
            torsion: Verdict::Pass,
            flatness: Verdict::Pass,
            metacurvature: Verdict::Pass,
            divergence: Verdict::Pass,
            overall: Overall::Compatible,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub bundle: ChartBundle,
    pub expected: ExpectedVerdicts,
}

/// Names of the built-in entries, in catalog order.
pub fn entry_names() -> &'static [&'static str] {
    &[
        "flat-torus-2d",
        "flat-torus-n",
        "podles-sphere",
        "conformal-cubic",
        "heisenberg-nil3",
        "r3-su2",
        "four-torus-z4-cover",
        "broken-jacobi",
    ]
}

/// Looks up a built-in entry by name.
pub fn get_entry(name: &str) -> Result<CatalogEntry> {
    match name {
        "flat-torus-2d" => Ok(flat_torus_2d()),
        "flat-torus-n" => Ok(flat_torus_n()),
        "podles-sphere" => Ok(podles_sphere()),
        "conformal-cubic" => Ok(conformal_cubic()),
        "heisenberg-nil3" => Ok(heisenberg_nil3()),
        "r3-su2" => Ok(r3_su2()),
        "four-torus-z4-cover" => Ok(four_torus_z4_cover()),
        "broken-jacobi" => Ok(broken_jacobi()),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

fn x() -> ScalarExpr {
    ScalarExpr::coord(0)
}
fn y() -> ScalarExpr {
    ScalarExpr::coord(1)
}

fn flat_torus_2d() -> CatalogEntry {
    let theta = 0.5;
    let chart = Chart::new(&["x", "y"])
        .with_points(&[&[0.0, 0.0]])
        .with_box(&[-1.0, -1.0], &[1.0, 1.0]);
    let metric = MetricField::identity(2);
    let poisson =
        PoissonField::from_entries(2, &[(0, 1, ScalarExpr::constant(theta))]).unwrap();
    let volume = VolumeField::riemannian(&metric);
    let killing = KillingSystem::new(
        vec![
            VectorField::new(vec![ScalarExpr::one(), ScalarExpr::zero()]).unwrap(),
            VectorField::new(vec![ScalarExpr::zero(), ScalarExpr::one()]).unwrap(),
        ],
        vec![0.0, theta, -theta, 0.0],
    )
    .unwrap();
    CatalogEntry {
        name: "flat-torus-2d",
        description: "Flat 2-torus chart: constant metric and constant bivector.",
        bundle: ChartBundle {
            name: Some("flat-torus-2d".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: Some(killing),
            flat_frame: true,
        },
        expected: ExpectedVerdicts::all_pass(),
    }
}

fn flat_torus_n() -> CatalogEntry {
    // n = 3 with pi = d_x ^ (d_y + sqrt(2) d_z): the coefficient span is
    // 2-dimensional but generates a denser translation group.
    let chart = Chart::new(&["x", "y", "z"])
        .with_points(&[&[0.0, 0.0, 0.0]])
        .with_box(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
    let metric = MetricField::identity(3);
    let poisson = PoissonField::from_entries(
        3,
        &[
            (0, 1, ScalarExpr::one()),
            (0, 2, ScalarExpr::constant(SQRT_2)),
        ],
    )
    .unwrap();
    let volume = VolumeField::riemannian(&metric);
    let killing = KillingSystem::new(
        vec![
            VectorField::new(vec![
                ScalarExpr::one(),
                ScalarExpr::zero(),
                ScalarExpr::zero(),
            ])
            .unwrap(),
            VectorField::new(vec![
                ScalarExpr::zero(),
                ScalarExpr::one(),
                ScalarExpr::constant(SQRT_2),
            ])
            .unwrap(),
        ],
        vec![0.0, 1.0, -1.0, 0.0],
    )
    .unwrap();
    CatalogEntry {
        name: "flat-torus-n",
        description: "Flat 3-torus chart with an irrational-direction constant bivector.",
        bundle: ChartBundle {
            name: Some("flat-torus-n".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: Some(killing),
            flat_frame: true,
        },
        expected: ExpectedVerdicts::all_pass(),
    }
}

/// The constant-curvature sphere chart `g = h^-2 delta`,
/// `pi = h d_x ^ d_y`, `h = a + b (x^2 + y^2)`, for arbitrary `ab > 0`.
pub fn podles_sphere_with(a: f64, b: f64) -> ChartBundle {
    let h = ScalarExpr::constant(a) + (x() * x() + y() * y()) * b;
    let metric = MetricField::diagonal(2, h.clone().powi(-2));
    let poisson = PoissonField::from_entries(2, &[(0, 1, h)]).unwrap();
    let volume = VolumeField::riemannian(&metric);
    let chart = Chart::new(&["x", "y"])
        .with_points(&[&[0.0, 0.0], &[1.0, 0.0]])
        .with_box(&[-1.5, -1.5], &[1.5, 1.5]);
    ChartBundle {
        name: Some("podles-sphere".into()),
        chart,
        metric,
        poisson,
        volume,
        killing: None,
        flat_frame: true,
    }
}

fn podles_sphere() -> CatalogEntry {
    CatalogEntry {
        name: "podles-sphere",
        description:
            "Round-sphere conformal chart with the rotation-invariant quadratic bivector \
             (h = 1 + x^2 + y^2): flat and metacurvature-free, but the volume divergence \
             condition fails.",
        bundle: podles_sphere_with(1.0, 1.0),
        expected: ExpectedVerdicts {
            jacobi: Verdict::Pass,
            torsion: Verdict::Pass,
            flatness: Verdict::Pass,
            metacurvature: Verdict::Pass,
            divergence: Verdict::Fail,
            overall: Overall::NotCompatible,
        },
    }
}

/// The cubic conformal family `h = 1 + c3 x^3` on the same chart shape.
pub fn conformal_cubic_with(c3: f64) -> ChartBundle {
    let h = ScalarExpr::one() + x().powi(3) * c3;
    let metric = MetricField::diagonal(2, h.clone().powi(-2));
    let poisson = PoissonField::from_entries(2, &[(0, 1, h)]).unwrap();
    let volume = VolumeField::riemannian(&metric);
    let chart = Chart::new(&["x", "y"])
        .with_points(&[&[1.0, 1.0]])
        .with_box(&[-0.5, -1.0], &[1.5, 1.0]);
    ChartBundle {
        name: Some("conformal-cubic".into()),
        chart,
        metric,
        poisson,
        volume,
        killing: None,
        flat_frame: true,
    }
}

fn conformal_cubic() -> CatalogEntry {
    CatalogEntry {
        name: "conformal-cubic",
        description:
            "Conformal chart with a cubic factor (h = 1 + x^3): the connection is flat and \
             torsion-free but the metacurvature does not vanish.",
        bundle: conformal_cubic_with(1.0),
        expected: ExpectedVerdicts {
            jacobi: Verdict::Pass,
            torsion: Verdict::Pass,
            flatness: Verdict::Pass,
            metacurvature: Verdict::Fail,
            divergence: Verdict::Fail,
            overall: Overall::NotCompatible,
        },
    }
}

fn heisenberg_nil3() -> CatalogEntry {
    // Nil-manifold chart. The metric dx^2 + dy^2 + (dz - y dx)^2 is
    // invariant under the commuting Killing frame
    //   K1 = d_x + th d_y + th x d_z,  K2 = d_z,
    // and pi = K1 ^ K2 = (d_x + th d_y) ^ d_z with th irrational.
    let theta = SQRT_2;
    let chart = Chart::new(&["x", "y", "z"])
        .with_points(&[&[0.0, 0.0, 0.0]])
        .with_box(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
    let metric = MetricField::from_upper_triangle(
        3,
        vec![
            ScalarExpr::one() + y() * y(), // g_xx
            ScalarExpr::zero(),            // g_xy
            -y(),                          // g_xz
            ScalarExpr::one(),             // g_yy
            ScalarExpr::zero(),            // g_yz
            ScalarExpr::one(),             // g_zz
        ],
    )
    .unwrap();
    let poisson = PoissonField::from_entries(
        3,
        &[
            (0, 2, ScalarExpr::one()),
            (1, 2, ScalarExpr::constant(theta)),
        ],
    )
    .unwrap();
    let volume = VolumeField::riemannian(&metric);
    let killing = KillingSystem::new(
        vec![
            VectorField::new(vec![
                ScalarExpr::one(),
                ScalarExpr::constant(theta),
                x() * theta,
            ])
            .unwrap(),
            VectorField::new(vec![
                ScalarExpr::zero(),
                ScalarExpr::zero(),
                ScalarExpr::one(),
            ])
            .unwrap(),
        ],
        vec![0.0, 1.0, -1.0, 0.0],
    )
    .unwrap();
    CatalogEntry {
        name: "heisenberg-nil3",
        description:
            "3-dimensional nil-manifold chart: right-invariant metric with the bi-invariant \
             bivector (d_x + sqrt(2) d_y) ^ d_z, decomposed into commuting Killing vectors.",
        bundle: ChartBundle {
            name: Some("heisenberg-nil3".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: Some(killing),
            flat_frame: false,
        },
        expected: ExpectedVerdicts::all_pass(),
    }
}

fn r3_su2() -> CatalogEntry {
    // Euclidean 3-space with {x,y} = 1, {x,z} = y, {y,z} = -x. This
    // bivector satisfies all three conditions but cannot be decomposed
    // into Killing vectors, so no Killing system is declared.
    let chart = Chart::new(&["x", "y", "z"])
        .with_points(&[&[1.0, 1.0, 1.0]])
        .with_box(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
    let metric = MetricField::identity(3);
    let poisson = PoissonField::from_entries(
        3,
        &[
            (0, 1, ScalarExpr::one()),
            (0, 2, ScalarExpr::coord(1)),
            (1, 2, -ScalarExpr::coord(0)),
        ],
    )
    .unwrap();
    let volume = VolumeField::riemannian(&metric);
    CatalogEntry {
        name: "r3-su2",
        description:
            "Euclidean 3-space with the rotation-algebra bracket {x,y}=1, {x,z}=y, {y,z}=-x: \
             compatible, yet not generated by Killing vectors.",
        bundle: ChartBundle {
            name: Some("r3-su2".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: None,
            flat_frame: false,
        },
        expected: ExpectedVerdicts::all_pass(),
    }
}

fn four_torus_z4_cover() -> CatalogEntry {
    // Flat 4-torus chart underlying a quarter-turn quotient: the
    // symplectic form dx1 ^ dy1 + dx2 ^ dy2 inverted to a constant
    // bivector (matrix inverse: pi^{x1 y1} = pi^{x2 y2} = -1).
    let chart = Chart::new(&["x1", "y1", "x2", "y2"])
        .with_points(&[&[0.0, 0.0, 0.0, 0.0]])
        .with_box(&[-1.0, -1.0, -1.0, -1.0], &[1.0, 1.0, 1.0, 1.0]);
    let metric = MetricField::identity(4);
    let poisson = PoissonField::from_entries(
        4,
        &[
            (0, 1, ScalarExpr::constant(-1.0)),
            (2, 3, ScalarExpr::constant(-1.0)),
        ],
    )
    .unwrap();
    let volume = VolumeField::riemannian(&metric);
    let frame = |i: usize| {
        VectorField::new(
            (0..4)
                .map(|j| {
                    if i == j {
                        ScalarExpr::one()
                    } else {
                        ScalarExpr::zero()
                    }
                })
                .collect(),
        )
        .unwrap()
    };
    let mut pi_matrix = vec![0.0; 16];
    pi_matrix[1] = -1.0;
    pi_matrix[4] = 1.0;
    pi_matrix[11] = -1.0;
    pi_matrix[14] = 1.0;
    let killing =
        KillingSystem::new(vec![frame(0), frame(1), frame(2), frame(3)], pi_matrix).unwrap();
    CatalogEntry {
        name: "four-torus-z4-cover",
        description:
            "Flat 4-torus chart (the covering space of a quarter-turn quotient) with the \
             constant bivector inverse to dx1 ^ dy1 + dx2 ^ dy2.",
        bundle: ChartBundle {
            name: Some("four-torus-z4-cover".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: Some(killing),
            flat_frame: true,
        },
        expected: ExpectedVerdicts::all_pass(),
    }
}

fn broken_jacobi() -> CatalogEntry {
    // pi = d_x ^ d_y + x d_x ^ d_z: not a Poisson bivector.
    let chart = Chart::new(&["x", "y", "z"])
        .with_points(&[&[1.0, 1.0, 1.0]])
        .with_box(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
    let metric = MetricField::identity(3);
    let poisson =
        PoissonField::from_entries(3, &[(0, 1, ScalarExpr::one()), (0, 2, x())]).unwrap();
    let volume = VolumeField::riemannian(&metric);
    CatalogEntry {
        name: "broken-jacobi",
        description: "Deliberately broken bivector: the Jacobi identity fails.",
        bundle: ChartBundle {
            name: Some("broken-jacobi".into()),
            chart,
            metric,
            poisson,
            volume,
            killing: None,
            flat_frame: false,
        },
        expected: ExpectedVerdicts {
            jacobi: Verdict::Fail,
            torsion: Verdict::Undefined,
            flatness: Verdict::Undefined,
            metacurvature: Verdict::Undefined,
            divergence: Verdict::Undefined,
            overall: Overall::NotPoisson,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_entry_is_an_error() {
        assert!(matches!(
            get_entry("no-such-chart"),
            Err(Error::UnknownEntry(_))
        ));
    }

    #[test]
    fn all_entries_resolve() {
        for name in entry_names() {
            let e = get_entry(name).unwrap();
            assert_eq!(e.name, *name);
            assert_eq!(e.bundle.chart.dim(), e.bundle.metric.dim());
        }
    }
}
