//! The compatibility report: per-condition residuals and verdicts, the
//! cross-check records, and the rendered human/JSON outputs.

use serde::Serialize;

/// Verdict of one condition. `Undefined` means a prerequisite failed (for
/// example, no metacurvature verdict exists without flatness) or the
/// requested jet order was too low to run the check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Undefined,
}

impl Verdict {
    pub fn symbol(&self) -> &'static str {
        match self {
            Verdict::Pass => "\u{2713}",
            Verdict::Fail => "\u{2717}",
            Verdict::Undefined => "\u{2014}",
        }
    }
}

/// One condition's outcome: max scale-free residual over the sample
/// points, the point where it was attained, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionRecord {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionRecord {
    pub fn undefined(note: impl Into<String>) -> Self {
        ConditionRecord {
            verdict: Verdict::Undefined,
            residual: None,
            worst_point: None,
            note: Some(note.into()),
        }
    }

    pub fn from_residual(residual: f64, worst_point: Vec<f64>, tol: f64) -> Self {
        ConditionRecord {
            verdict: if residual <= tol {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            residual: Some(residual),
            worst_point: Some(worst_point),
            note: None,
        }
    }
}

/// A secondary agreement record (oracle comparisons, identity checks).
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

/// The overall verdict, following the three-part compatibility definition:
/// flat torsion-free metric contravariant connection, vanishing
/// metacurvature, and the volume divergence condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Compatible,
    NotCompatible,
    NotPoisson,
}

/// Engine metadata echoed into the report. Identical input and options
/// produce a byte-identical JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportOptions {
    pub tol: f64,
    pub random_points: usize,
    pub seed: u64,
    pub jet_order: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart_name: Option<String>,
    pub dim: usize,
    pub options: ReportOptions,
    pub sample_points: usize,
    pub jacobi: ConditionRecord,
    pub torsion: ConditionRecord,
    pub flatness: ConditionRecord,
    pub metacurvature: ConditionRecord,
    pub divergence: ConditionRecord,
    pub volume_parallel: ConditionRecord,
    pub cross_checks: Vec<CrossCheck>,
    pub overall: Overall,
}

impl CompatReport {
    /// Process exit code: 0 compatible, 1 not compatible, 2 not Poisson.
    pub fn exit_code(&self) -> i32 {
        match self.overall {
            Overall::Compatible => 0,
            Overall::NotCompatible => 1,
            Overall::NotPoisson => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn fmt_point(p: &Option<Vec<f64>>) -> String {
        match p {
            None => String::new(),
            Some(p) => {
                let coords: Vec<String> = p.iter().map(|v| format!("{v:.4}")).collect();
                format!("({})", coords.join(", "))
            }
        }
    }

    /// The human-readable condition table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.chart_name {
            out.push_str(&format!("chart: {name} (dim {})\n", self.dim));
        } else {
            out.push_str(&format!("chart: dim {}\n", self.dim));
        }
        out.push_str(&format!(
            "points: {} | tol: {:.1e} | seed: {} | jet order: {}\n\n",
            self.sample_points, self.options.tol, self.options.seed, self.options.jet_order
        ));
        out.push_str(&format!(
            "  {:<16} {:^3}  {:>12}  {}\n",
            "condition", "", "max residual", "worst point"
        ));
        for (name, rec) in [
            ("jacobi", &self.jacobi),
            ("torsion", &self.torsion),
            ("flatness", &self.flatness),
            ("metacurvature", &self.metacurvature),
            ("divergence", &self.divergence),
            ("volume-parallel", &self.volume_parallel),
        ] {
            match rec.residual {
                Some(r) => out.push_str(&format!(
                    "  {:<16} {:^3}  {:>12}  {}\n",
                    name,
                    rec.verdict.symbol(),
                    format!("{r:.3e}"),
                    Self::fmt_point(&rec.worst_point)
                )),
                None => out.push_str(&format!(
                    "  {:<16} {:^3}  ({})\n",
                    name,
                    rec.verdict.symbol(),
                    rec.note.as_deref().unwrap_or("not evaluated")
                )),
            }
        }
        if !self.cross_checks.is_empty() {
            out.push_str("\n  cross-checks:\n");
            for c in &self.cross_checks {
                out.push_str(&format!(
                    "  {:<36} {:^3}  {:>12.3e}\n",
                    c.name,
                    if c.passed { "\u{2713}" } else { "\u{2717}" },
                    c.residual
                ));
            }
        }
        out.push_str(&format!(
            "\noverall: {}\n",
            match self.overall {
                Overall::Compatible => "compatible".to_string(),
                Overall::NotCompatible => {
                    let mut failing = Vec::new();
                    for (name, rec) in [
                        ("flatness", &self.flatness),
                        ("torsion", &self.torsion),
                        ("metacurvature", &self.metacurvature),
                        ("divergence", &self.divergence),
                    ] {
                        if rec.verdict == Verdict::Fail {
                            failing.push(name);
                        }
                    }
                    format!("not compatible ({} condition fails)", failing.join(", "))
                }
                Overall::NotPoisson => "not a Poisson structure".to_string(),
            }
        ));
        out
    }
}
