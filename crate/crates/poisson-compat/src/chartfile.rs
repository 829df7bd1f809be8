//! The chart file format: parsing and export.
//!
//! A chart file is a line-based document with `#` comments and sections:
//!
//! ```text
//! [chart]
//! dim = 2                      # optional when coords is present
//! coords = x y
//! point = 1.0, 0.0             # repeatable; declared sample points
//! box = -1.5, -1.5 ; 1.5, 1.5  # optional sampling box (low ; high)
//! seed = 42                    # optional default seed
//!
//! [metric]                     # entries default to 0
//! identity                     # optional: start from the identity matrix
//! g 1 1 = (1 + x^2 + y^2)^(-2)
//!
//! [poisson]                    # strict upper triangle, 1-based indices
//! pi 1 2 = 1 + x^2 + y^2
//!
//! [volume]                     # optional; default density = sqrt(det g)
//! density = (1 + x^2 + y^2)^(-2)
//!
//! [killing]                    # optional
//! X = 1, 1.4142135623730951, 1.4142135623730951*x
//! X = 0, 0, 1
//! Pi 1 2 = 1
//!
//! [flat_frame]                 # optional
//! coordinates
//! ```
//!
//! Expressions use the infix syntax of [`crate::expr::parse_expr`] over
//! the declared coordinate names. Metric entries may be given on either
//! side of the diagonal but must agree; bivector entries must be strictly
//! off-diagonal (declaring `pi i i` is an error).

use crate::catalog::ChartBundle;
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, ScalarExpr};
use crate::fields::{MetricField, PoissonField, VolumeField};
use crate::forms::VectorField;
use crate::killing::KillingSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Chart,
    Metric,
    Poisson,
    Volume,
    Killing,
    FlatFrame,
}

/// Parsed chart file: the bundle plus the optional default seed.
#[derive(Debug, Clone)]
pub struct ParsedChartFile {
    pub bundle: ChartBundle,
    pub seed: Option<u64>,
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

fn with_line(e: Error, line: usize) -> Error {
    match e {
        Error::Syntax { msg, .. } => Error::Syntax { line, msg },
        Error::UnknownCoordinate { name, .. } => Error::UnknownCoordinate { line, name },
        other => other,
    }
}

fn parse_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| syntax(line, format!("bad number `{}`", t.trim())))
        })
        .collect()
}

/// Parses a chart file into a bundle, validating every field invariant
/// that does not require a full engine run (symmetry, antisymmetry,
/// positive definiteness and a nonzero volume density at the declared
/// points). Whether the bivector is Poisson is a check-run verdict, not a
/// parse error.
pub fn parse_chart_file(text: &str) -> Result<ParsedChartFile> {
    let mut section = Section::None;
    let mut dim: Option<usize> = None;
    let mut coords: Option<Vec<String>> = None;
    let mut points: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut sample_box: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut seed: Option<u64> = None;

    // Raw entries, resolved after the header is known.
    let mut metric_identity = false;
    let mut metric_entries: Vec<(usize, usize, usize, String)> = Vec::new();
    let mut poisson_entries: Vec<(usize, usize, usize, String)> = Vec::new();
    let mut volume_density: Option<(usize, String)> = None;
    let mut killing_vectors: Vec<(usize, String)> = Vec::new();
    let mut killing_pi: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut flat_frame = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = match &line[1..line.len() - 1] {
                "chart" => Section::Chart,
                "metric" => Section::Metric,
                "poisson" => Section::Poisson,
                "volume" => Section::Volume,
                "killing" => Section::Killing,
                "flat_frame" => Section::FlatFrame,
                other => return Err(syntax(lineno, format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        match section {
            Section::None => {
                return Err(syntax(lineno, "content before the first section header"))
            }
            Section::Chart => {
                let (key, value) = split_kv(line, lineno)?;
                match key {
                    "dim" => {
                        dim = Some(value.parse::<usize>().map_err(|_| {
                            syntax(lineno, format!("bad dimension `{value}`"))
                        })?)
                    }
                    "coords" => {
                        coords = Some(
                            value
                                .split_whitespace()
                                .map(|s| s.to_string())
                                .collect(),
                        )
                    }
                    "point" => points.push((lineno, parse_floats(value, lineno)?)),
                    "box" => {
                        let halves: Vec<&str> = value.split(';').collect();
                        if halves.len() != 2 {
                            return Err(syntax(
                                lineno,
                                "box needs `low1, low2, ... ; high1, high2, ...`",
                            ));
                        }
                        sample_box = Some((
                            parse_floats(halves[0], lineno)?,
                            parse_floats(halves[1], lineno)?,
                        ));
                    }
                    "seed" => {
                        seed = Some(value.parse::<u64>().map_err(|_| {
                            syntax(lineno, format!("bad seed `{value}`"))
                        })?)
                    }
                    other => {
                        return Err(syntax(lineno, format!("unknown chart key `{other}`")))
                    }
                }
            }
            Section::Metric => {
                if line == "identity" {
                    metric_identity = true;
                    continue;
                }
                let (i, j, expr) = split_indexed(line, "g", lineno)?;
                metric_entries.push((lineno, i, j, expr));
            }
            Section::Poisson => {
                let (i, j, expr) = split_indexed(line, "pi", lineno)?;
                poisson_entries.push((lineno, i, j, expr));
            }
            Section::Volume => {
                let (key, value) = split_kv(line, lineno)?;
                if key != "density" {
                    return Err(syntax(lineno, format!("unknown volume key `{key}`")));
                }
                volume_density = Some((lineno, value.to_string()));
            }
            Section::Killing => {
                if let Some(rest) = line.strip_prefix("X") {
                    let rest = rest.trim_start();
                    let Some(value) = rest.strip_prefix('=') else {
                        return Err(syntax(lineno, "expected `X = comp, comp, ...`"));
                    };
                    killing_vectors.push((lineno, value.trim().to_string()));
                } else if let Some(rest) = line.strip_prefix("Pi") {
                    let (i, j, expr) = split_indexed(&format!("Pi{rest}"), "Pi", lineno)?;
                    let v = expr.trim().parse::<f64>().map_err(|_| {
                        syntax(lineno, "Pi entries must be numeric constants")
                    })?;
                    killing_pi.push((lineno, i, j, v));
                } else {
                    return Err(syntax(lineno, "expected `X = ...` or `Pi i j = ...`"));
                }
            }
            Section::FlatFrame => {
                if line != "coordinates" {
                    return Err(syntax(
                        lineno,
                        "the flat_frame section supports only `coordinates`",
                    ));
                }
                flat_frame = true;
            }
        }
    }

    // Resolve the chart header.
    let coords = match (coords, dim) {
        (Some(c), Some(d)) if c.len() != d => {
            return Err(Error::InvalidInput(format!(
                "dim = {d} but {} coordinate names declared",
                c.len()
            )))
        }
        (Some(c), _) => c,
        (None, Some(d)) => (0..d).map(|i| format!("x{}", i + 1)).collect(),
        (None, None) => {
            return Err(Error::InvalidInput(
                "chart needs `coords` or `dim`".into(),
            ))
        }
    };
    let n = coords.len();
    let mut chart = Chart::from_names(coords.clone())?;
    for (lineno, p) in points {
        chart.push_point(p).map_err(|e| with_line(e, lineno))?;
    }
    if let Some((lo, hi)) = sample_box {
        chart.set_box(lo, hi)?;
    }

    let parse_at = |lineno: usize, text: &str| -> Result<ScalarExpr> {
        parse_expr(text, &coords).map_err(|e| with_line(e, lineno))
    };

    // Metric: default 0 entries (identity seeds the diagonal), explicit
    // entries override; both orders of an off-diagonal pair must agree.
    let mut g_exprs: Vec<Option<(usize, ScalarExpr)>> = vec![None; n * n];
    for (lineno, i, j, text) in metric_entries {
        if i >= n || j >= n {
            return Err(syntax(
                lineno,
                format!("metric index out of range for dimension {n}"),
            ));
        }
        let e = parse_at(lineno, &text)?;
        if g_exprs[i * n + j].is_some() {
            return Err(syntax(
                lineno,
                format!("g {} {} declared twice", i + 1, j + 1),
            ));
        }
        if i != j {
            if let Some((_, prev)) = &g_exprs[j * n + i] {
                if *prev != e {
                    return Err(Error::Asymmetry {
                        line: lineno,
                        i: i + 1,
                        j: j + 1,
                    });
                }
            }
        }
        g_exprs[i * n + j] = Some((lineno, e));
    }
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let e = match (&g_exprs[i * n + j], &g_exprs[j * n + i]) {
                (Some((_, a)), _) => a.clone(),
                (None, Some((_, b))) => b.clone(),
                (None, None) => {
                    if i == j && metric_identity {
                        ScalarExpr::one()
                    } else {
                        ScalarExpr::zero()
                    }
                }
            };
            upper.push(e);
        }
    }
    let metric = MetricField::from_upper_triangle(n, upper)?;

    // Bivector: strict upper triangle; the diagonal is structurally zero.
    let mut pi_exprs: Vec<Option<ScalarExpr>> = vec![None; n * n];
    for (lineno, i, j, text) in poisson_entries {
        if i >= n || j >= n {
            return Err(syntax(
                lineno,
                format!("bivector index out of range for dimension {n}"),
            ));
        }
        let e = parse_at(lineno, &text)?;
        if i == j {
            if !e.is_zero_literal() {
                return Err(Error::Symmetry {
                    line: lineno,
                    msg: format!(
                        "pi {0} {0} must vanish (antisymmetric tensor)",
                        i + 1
                    ),
                });
            }
            continue;
        }
        let (a, b, expr) = if i < j { (i, j, e) } else { (j, i, -e) };
        if pi_exprs[a * n + b].is_some() {
            return Err(Error::Symmetry {
                line: lineno,
                msg: format!("pi entry ({}, {}) declared twice", a + 1, b + 1),
            });
        }
        pi_exprs[a * n + b] = Some(expr);
    }
    let mut strict_upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            strict_upper.push(pi_exprs[i * n + j].clone().unwrap_or_else(ScalarExpr::zero));
        }
    }
    let poisson = PoissonField::from_strict_upper(n, strict_upper)?;

    let volume = match volume_density {
        Some((lineno, text)) => VolumeField::new(n, parse_at(lineno, &text)?)?,
        None => VolumeField::riemannian(&metric),
    };

    let killing = if killing_vectors.is_empty() {
        if !killing_pi.is_empty() {
            return Err(Error::InvalidInput(
                "killing section declares Pi entries but no vectors".into(),
            ));
        }
        None
    } else {
        let mut vectors = Vec::with_capacity(killing_vectors.len());
        for (lineno, text) in &killing_vectors {
            let comps: Vec<ScalarExpr> = text
                .split(',')
                .map(|c| parse_at(*lineno, c.trim()))
                .collect::<Result<_>>()?;
            if comps.len() != n {
                return Err(syntax(
                    *lineno,
                    format!("Killing vector needs {n} components"),
                ));
            }
            vectors.push(VectorField::new(comps)?);
        }
        let r = vectors.len();
        let mut pi_matrix = vec![0.0; r * r];
        for (lineno, i, j, v) in killing_pi {
            if i >= r || j >= r {
                return Err(syntax(
                    lineno,
                    format!("Pi index out of range for {r} vectors"),
                ));
            }
            if i == j {
                return Err(Error::Symmetry {
                    line: lineno,
                    msg: "Pi is antisymmetric; diagonal entries must vanish".into(),
                });
            }
            pi_matrix[i * r + j] = v;
            pi_matrix[j * r + i] = -v;
        }
        Some(KillingSystem::new(vectors, pi_matrix)?)
    };

    // Pointwise invariants at the declared points.
    metric.validate_on(&chart)?;
    volume.validate_on(&chart)?;

    Ok(ParsedChartFile {
        bundle: ChartBundle {
            name: None,
            chart,
            metric,
            poisson,
            volume,
            killing,
            flat_frame,
        },
        seed,
    })
}

fn split_kv(line: &str, lineno: usize) -> Result<(&str, &str)> {
    match line.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(syntax(lineno, format!("expected `key = value`, got `{line}`"))),
    }
}

/// Splits `name i j = expr` into 0-based indices and the expression text.
fn split_indexed(line: &str, name: &str, lineno: usize) -> Result<(usize, usize, String)> {
    let Some((head, expr)) = line.split_once('=') else {
        return Err(syntax(lineno, format!("expected `{name} i j = expr`")));
    };
    let tokens: Vec<&str> = head.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != name {
        return Err(syntax(lineno, format!("expected `{name} i j = expr`")));
    }
    let parse_index = |t: &str| -> Result<usize> {
        let v = t
            .parse::<usize>()
            .map_err(|_| syntax(lineno, format!("bad index `{t}`")))?;
        if v == 0 {
            return Err(syntax(lineno, "indices are 1-based"));
        }
        Ok(v - 1)
    };
    Ok((
        parse_index(tokens[1])?,
        parse_index(tokens[2])?,
        expr.trim().to_string(),
    ))
}

/// Renders a bundle in the chart file format; `parse_chart_file` of the
/// output reproduces the bundle.
pub fn export_chart_file(bundle: &ChartBundle, seed: Option<u64>) -> String {
    let names = bundle.chart.coord_names();
    let n = bundle.chart.dim();
    let mut out = String::new();
    out.push_str("[chart]\n");
    out.push_str(&format!("dim = {n}\n"));
    out.push_str(&format!("coords = {}\n", names.join(" ")));
    for p in bundle.chart.declared_points() {
        let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("point = {}\n", coords.join(", ")));
    }
    if let Some((lo, hi)) = bundle.chart.sample_box() {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push_str(&format!("box = {} ; {}\n", fmt(lo), fmt(hi)));
    }
    if let Some(s) = seed {
        out.push_str(&format!("seed = {s}\n"));
    }

    out.push_str("\n[metric]\n");
    for i in 0..n {
        for j in i..n {
            let e = bundle.metric.entry(i, j);
            if !e.is_zero_literal() {
                out.push_str(&format!("g {} {} = {}\n", i + 1, j + 1, e.render(names)));
            }
        }
    }

    out.push_str("\n[poisson]\n");
    for i in 0..n {
        for j in i + 1..n {
            let e = bundle.poisson.entry(i, j);
            if !e.is_zero_literal() {
                out.push_str(&format!("pi {} {} = {}\n", i + 1, j + 1, e.render(names)));
            }
        }
    }

    out.push_str("\n[volume]\n");
    out.push_str(&format!(
        "density = {}\n",
        bundle.volume.density().render(names)
    ));

    if let Some(ks) = &bundle.killing {
        out.push_str("\n[killing]\n");
        for v in ks.vectors() {
            let comps: Vec<String> = v.components().iter().map(|c| c.render(names)).collect();
            out.push_str(&format!("X = {}\n", comps.join(", ")));
        }
        for a in 0..ks.rank() {
            for b in a + 1..ks.rank() {
                let c = ks.coefficient(a, b);
                if c != 0.0 {
                    out.push_str(&format!("Pi {} {} = {c}\n", a + 1, b + 1));
                }
            }
        }
    }

    if bundle.flat_frame {
        out.push_str("\n[flat_frame]\ncoordinates\n");
    }
    out
}
