//! The check orchestrator: runs Jacobi, torsion, flatness, metacurvature
//! and the divergence conditions over the sample points of a chart bundle
//! and assembles a [`CompatReport`].

use rayon::prelude::*;

use crate::catalog::ChartBundle;
use crate::connection::metric_contra_connection;
use crate::divergence::{check_d_epsilon, modular_vector, volume_compat};
use crate::error::{Error, Result};
use crate::fields::{check_jacobi, scale_free};
use crate::killing::{killing_vs_metric_connection_residual, verify_compatible_via_killing};
use crate::metacurvature::{metacurvature_def, metacurvature_symplectic_oracle};
use crate::report::{
    CompatReport, ConditionRecord, CrossCheck, Overall, ReportOptions, Verdict,
};

/// Options for a check run. Identical options and bundle give a
/// byte-identical JSON report.
#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Scale-free residual tolerance for every verdict.
    pub tol: f64,
    /// Seeded random points drawn from the sample box (when declared),
    /// in addition to the declared points.
    pub random_points: usize,
    pub seed: u64,
    /// Max jet order the run may use; metacurvature needs at least 3 and
    /// its derivative symmetry 4.
    pub jet_order: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tol: 1e-8,
            random_points: 10,
            seed: 42,
            jet_order: 4,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct PointChecks {
    torsion: f64,
    compat: f64,
    curvature: f64,
    metacurvature: Option<f64>,
    oracle_agreement: Option<f64>,
    divergence: f64,
    volume_parallel: f64,
    modular_identity: f64,
    killing_max: Option<f64>,
    killing_vs_metric: Option<f64>,
}

fn worst_over_points(
    values: impl Iterator<Item = (usize, f64)>,
    points: &[Vec<f64>],
    tol: f64,
) -> ConditionRecord {
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0usize;
    let mut any = false;
    for (i, v) in values {
        any = true;
        if v > worst {
            worst = v;
            at = i;
        }
    }
    if !any {
        return ConditionRecord::undefined("no sample points");
    }
    ConditionRecord::from_residual(worst, points[at].clone(), tol)
}

/// Runs the full compatibility check on a bundle.
///
/// Order of evaluation: Jacobi first (everything downstream is undefined
/// for a non-Poisson bivector), then torsion / flatness, then the
/// metacurvature (gated on the first two), then the divergence and volume
/// conditions. Killing declarations add independent cross-checks.
pub fn run_check(bundle: &ChartBundle, options: &CheckOptions) -> Result<CompatReport> {
    if options.jet_order < 2 || options.jet_order > crate::jet::MAX_ORDER {
        return Err(Error::InvalidInput(format!(
            "jet order must be between 2 and {} (curvature needs second derivatives), got {}",
            crate::jet::MAX_ORDER,
            options.jet_order
        )));
    }
    let chart = &bundle.chart;
    let points = chart.sample(options.random_points, options.seed)?;

    // Input validation: the metric must be positive definite and the
    // volume density nonzero at every point of the run.
    for p in &points {
        bundle.metric.check_spd(p)?;
        let rho = bundle.volume.eval_density(p)?;
        if rho == 0.0 {
            return Err(Error::InvalidInput(format!(
                "volume density vanishes at {p:?}"
            )));
        }
    }

    let report_options = ReportOptions {
        tol: options.tol,
        random_points: options.random_points,
        seed: options.seed,
        jet_order: options.jet_order,
    };
    let base = |jacobi: ConditionRecord, overall: Overall| CompatReport {
        schema_version: 1,
        chart_name: bundle.name.clone(),
        dim: chart.dim(),
        options: report_options.clone(),
        sample_points: points.len(),
        jacobi,
        torsion: ConditionRecord::undefined("bivector is not Poisson"),
        flatness: ConditionRecord::undefined("bivector is not Poisson"),
        metacurvature: ConditionRecord::undefined("bivector is not Poisson"),
        divergence: ConditionRecord::undefined("bivector is not Poisson"),
        volume_parallel: ConditionRecord::undefined("bivector is not Poisson"),
        cross_checks: Vec::new(),
        overall,
    };

    // Phase 1: the Jacobi identity.
    let jacobi_residuals: Vec<Result<f64>> = points
        .par_iter()
        .map(|p| check_jacobi(&bundle.poisson, p))
        .collect();
    let mut jacobi_values = Vec::with_capacity(points.len());
    for r in jacobi_residuals {
        jacobi_values.push(r?);
    }
    let jacobi = worst_over_points(
        jacobi_values.iter().copied().enumerate(),
        &points,
        options.tol,
    );
    if jacobi.verdict == Verdict::Fail {
        return Ok(base(jacobi, Overall::NotPoisson));
    }

    // Phase 2: everything else, per point. The metacurvature assembly
    // needs symbol jets of order 2, hence field jets of order 3.
    let run_metacurvature = options.jet_order >= 3;
    let conn_order = if run_metacurvature { 2 } else { 1 };
    let per_point: Vec<Result<PointChecks>> = points
        .par_iter()
        .map(|p| -> Result<PointChecks> {
            let mut out = PointChecks::default();
            let conn =
                metric_contra_connection(&bundle.metric, &bundle.poisson, p, conn_order)?;
            out.torsion = conn.torsion_residual();
            out.compat = conn.compat_residual();
            out.curvature = conn.curvature().1;

            if run_metacurvature
                && out.torsion <= options.tol
                && out.curvature <= options.tol
            {
                let m = metacurvature_def(&conn, options.tol)?;
                let pi_scale = bundle
                    .poisson
                    .eval_bivector(p)?
                    .max_abs();
                out.metacurvature = Some(scale_free(m.max_abs(), pi_scale * pi_scale));
                if bundle.flat_frame {
                    match metacurvature_symplectic_oracle(&bundle.poisson, p, true) {
                        Ok(oracle) => {
                            let mut diff: f64 = 0.0;
                            let mut scale: f64 = 0.0;
                            let n = chart.dim();
                            for i in 0..n {
                                for j in 0..n {
                                    for k in 0..n {
                                        for l in 0..n {
                                            for mm in 0..n {
                                                let a = m.get(i, j, k, l, mm);
                                                let b = oracle.get(i, j, k, l, mm);
                                                diff = diff.max((a - b).abs());
                                                scale = scale.max(a.abs()).max(b.abs());
                                            }
                                        }
                                    }
                                }
                            }
                            out.oracle_agreement = Some(scale_free(diff, scale));
                        }
                        Err(Error::DegeneratePoisson { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }

            out.divergence = volume_compat(&bundle.poisson, &bundle.volume, p)?;
            out.volume_parallel =
                check_d_epsilon(&bundle.metric, &bundle.poisson, &bundle.volume, p)?;
            out.modular_identity =
                modular_vector(&bundle.metric, &bundle.poisson, p, 5)?.identity_residual;

            if let Some(ks) = &bundle.killing {
                let v = verify_compatible_via_killing(
                    &bundle.metric,
                    &bundle.poisson,
                    &bundle.volume,
                    ks,
                    p,
                    options.tol,
                )?;
                out.killing_max = Some(v.max_residual());
                out.killing_vs_metric = Some(killing_vs_metric_connection_residual(
                    ks,
                    &bundle.metric,
                    &bundle.poisson,
                    p,
                )?);
            }
            Ok(out)
        })
        .collect();
    let mut checks = Vec::with_capacity(points.len());
    for r in per_point {
        checks.push(r?);
    }

    let torsion = worst_over_points(
        checks.iter().map(|c| c.torsion).enumerate(),
        &points,
        options.tol,
    );
    let flatness = worst_over_points(
        checks.iter().map(|c| c.curvature).enumerate(),
        &points,
        options.tol,
    );
    let divergence = worst_over_points(
        checks.iter().map(|c| c.divergence).enumerate(),
        &points,
        options.tol,
    );
    let volume_parallel = worst_over_points(
        checks.iter().map(|c| c.volume_parallel).enumerate(),
        &points,
        options.tol,
    );

    let metacurvature = if !run_metacurvature {
        ConditionRecord::undefined(format!(
            "needs jet order >= 3, run had {}",
            options.jet_order
        ))
    } else if torsion.verdict != Verdict::Pass || flatness.verdict != Verdict::Pass {
        ConditionRecord::undefined("connection is not flat and torsion-free")
    } else {
        worst_over_points(
            checks
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.metacurvature.map(|v| (i, v))),
            &points,
            options.tol,
        )
    };

    let mut cross_checks = Vec::new();
    let mut push_cross = |name: &str, values: Vec<(usize, f64)>, tol: f64| {
        if values.is_empty() {
            return;
        }
        let worst = values.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
        cross_checks.push(CrossCheck {
            name: name.to_string(),
            residual: worst,
            passed: worst <= tol,
        });
    };
    push_cross(
        "metric-pairing-parallel",
        checks.iter().map(|c| c.compat).enumerate().collect(),
        options.tol,
    );
    push_cross(
        "modular-divergence-identity",
        checks
            .iter()
            .map(|c| c.modular_identity)
            .enumerate()
            .collect(),
        options.tol,
    );
    push_cross(
        "metacurvature-oracle-agreement",
        checks
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.oracle_agreement.map(|v| (i, v)))
            .collect(),
        1e-7,
    );
    push_cross(
        "killing-verification",
        checks
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.killing_max.map(|v| (i, v)))
            .collect(),
        options.tol,
    );
    push_cross(
        "killing-vs-metric-connection",
        checks
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.killing_vs_metric.map(|v| (i, v)))
            .collect(),
        1e-9,
    );

    let overall = if torsion.verdict == Verdict::Pass
        && flatness.verdict == Verdict::Pass
        && metacurvature.verdict == Verdict::Pass
        && divergence.verdict == Verdict::Pass
    {
        Overall::Compatible
    } else {
        Overall::NotCompatible
    };

    Ok(CompatReport {
        schema_version: 1,
        chart_name: bundle.name.clone(),
        dim: chart.dim(),
        options: report_options,
        sample_points: points.len(),
        jacobi,
        torsion,
        flatness,
        metacurvature,
        divergence,
        volume_parallel,
        cross_checks,
        overall,
    })
}
