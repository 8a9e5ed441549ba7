//! Canonical serialization of reports: JSON with sorted keys and fixed
//! 17-significant-digit floats, plus CSV with the same numeric encoding.
//!
//! Identical inputs must serialize to identical bytes, so rerunning a
//! seeded sweep can be diffed with `cmp`. That rules out locale-, hash-,
//! or pointer-dependent formatting; everything here is deterministic by
//! construction. Floats render as `{:.16e}`, which round-trips every
//! finite `f64`; negative zero is folded into zero so the two equal
//! values cannot produce different bytes.

use crate::bounds::{BoundReport, SweepSummary};

/// A JSON value assembled by hand; rendering sorts object keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Uint(u64),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn opt_float(v: Option<f64>) -> Json {
        v.map_or(Json::Null, Json::Float)
    }

    pub fn opt_uint(v: Option<u64>) -> Json {
        v.map_or(Json::Null, Json::Uint)
    }
}

/// `f64` to its canonical 17-significant-digit form. Rejects non-finite
/// values loudly: a NaN in a report is an upstream bug, not data.
pub fn fmt_float(v: f64) -> String {
    assert!(v.is_finite(), "reports must not carry non-finite values");
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn escape_str(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn render_into(value: &Json, out: &mut String) {
    match value {
        Json::Null => out.push_str("null"),
        Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Json::Uint(u) => out.push_str(&u.to_string()),
        Json::Int(i) => out.push_str(&i.to_string()),
        Json::Float(f) => out.push_str(&fmt_float(*f)),
        Json::Str(s) => escape_str(s, out),
        Json::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render_into(item, out);
            }
            out.push(']');
        }
        Json::Object(entries) => {
            let mut sorted: Vec<&(String, Json)> = entries.iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            out.push('{');
            for (i, (key, item)) in sorted.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                escape_str(key, out);
                out.push(':');
                render_into(item, out);
            }
            out.push('}');
        }
    }
}

/// Renders compact canonical JSON (no whitespace, keys sorted).
pub fn render(value: &Json) -> String {
    let mut out = String::new();
    render_into(value, &mut out);
    out
}

/// One bound report as a JSON object with every field present.
pub fn bound_report_json(report: &BoundReport) -> Json {
    Json::Object(vec![
        ("bound_id".into(), Json::str(report.bound_id.as_str())),
        ("lhs".into(), Json::Float(report.lhs)),
        ("rhs".into(), Json::Float(report.rhs)),
        ("slack".into(), Json::Float(report.slack)),
        ("pass".into(), Json::Bool(report.pass)),
        ("n".into(), Json::Uint(report.context.n as u64)),
        ("seed".into(), Json::opt_uint(report.context.seed)),
        ("epsilon".into(), Json::opt_float(report.context.epsilon)),
        ("noise_l2".into(), Json::opt_float(report.context.noise_l2)),
        (
            "noise_linf".into(),
            Json::opt_float(report.context.noise_linf),
        ),
        (
            "note".into(),
            report
                .context
                .note
                .as_ref()
                .map_or(Json::Null, |s| Json::str(s.clone())),
        ),
    ])
}

/// A batch of reports plus the violation count.
pub fn reports_json(reports: &[BoundReport]) -> Json {
    let violations = reports.iter().filter(|r| !r.pass).count() as u64;
    Json::Object(vec![
        (
            "reports".into(),
            Json::Array(reports.iter().map(bound_report_json).collect()),
        ),
        ("violations".into(), Json::Uint(violations)),
    ])
}

/// Sweep summary with its per-bound breakdown.
pub fn sweep_summary_json(summary: &SweepSummary) -> Json {
    let per_bound = summary
        .per_bound
        .iter()
        .map(|(id, tally)| {
            (
                id.clone(),
                Json::Object(vec![
                    ("checks".into(), Json::Uint(tally.checks)),
                    ("violations".into(), Json::Uint(tally.violations)),
                    ("skipped".into(), Json::Uint(tally.skipped)),
                    ("min_slack".into(), Json::opt_float(tally.min_slack)),
                ]),
            )
        })
        .collect();
    Json::Object(vec![
        ("trials".into(), Json::Uint(summary.trials)),
        ("seed".into(), Json::Uint(summary.seed)),
        ("violations".into(), Json::Uint(summary.violations)),
        ("min_slack".into(), Json::opt_float(summary.min_slack)),
        ("per_bound".into(), Json::Object(per_bound)),
    ])
}

/// Absorption curve as `[{"step": t, "value": F(t)}, ...]`.
pub fn curve_json(curve: &[f64]) -> Json {
    Json::Array(
        curve
            .iter()
            .enumerate()
            .map(|(step, &value)| {
                Json::Object(vec![
                    ("step".into(), Json::Uint(step as u64)),
                    ("value".into(), Json::Float(value)),
                ])
            })
            .collect(),
    )
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn csv_opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Bound reports as CSV, one row per report, canonical column order.
pub fn bound_reports_csv(reports: &[BoundReport]) -> String {
    let mut out =
        String::from("bound_id,lhs,rhs,slack,pass,n,seed,epsilon,noise_l2,noise_linf,note\n");
    for r in reports {
        let seed = r.context.seed.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.bound_id.as_str(),
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.slack),
            r.pass,
            r.context.n,
            seed,
            csv_opt_float(r.context.epsilon),
            csv_opt_float(r.context.noise_l2),
            csv_opt_float(r.context.noise_linf),
            csv_escape(r.context.note.as_deref().unwrap_or("")),
        ));
    }
    out
}

/// Sweep summary as CSV: one row per bound plus a `total` row.
pub fn sweep_summary_csv(summary: &SweepSummary) -> String {
    let mut out = String::from("bound_id,checks,violations,skipped,min_slack\n");
    let mut checks_total = 0;
    let mut skipped_total = 0;
    for (id, tally) in &summary.per_bound {
        checks_total += tally.checks;
        skipped_total += tally.skipped;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            id,
            tally.checks,
            tally.violations,
            tally.skipped,
            csv_opt_float(tally.min_slack),
        ));
    }
    out.push_str(&format!(
        "total,{},{},{},{}\n",
        checks_total,
        summary.violations,
        skipped_total,
        csv_opt_float(summary.min_slack),
    ));
    out
}

/// Absorption curve as CSV `step,value` rows.
pub fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("step,value\n");
    for (step, &value) in curve.iter().enumerate() {
        out.push_str(&format!("{step},{}\n", fmt_float(value)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundContext, BoundId};

    #[test]
    fn floats_render_with_17_significant_digits_and_round_trip() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(-0.0), fmt_float(0.0));
        for &v in &[
            0.5,
            1.0 / 3.0,
            2.0 / 3.0,
            -0.25,
            1e-300,
            123456.789,
            f64::MIN_POSITIVE,
        ] {
            let parsed: f64 = fmt_float(v).parse().unwrap();
            assert_eq!(parsed, v, "canonical form must round-trip {v}");
        }
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    fn non_finite_floats_are_a_bug() {
        fmt_float(f64::NAN);
    }

    #[test]
    fn object_keys_render_sorted() {
        let value = Json::Object(vec![
            ("zebra".into(), Json::Uint(1)),
            ("alpha".into(), Json::Bool(true)),
            ("mid".into(), Json::Null),
        ]);
        assert_eq!(render(&value), r#"{"alpha":true,"mid":null,"zebra":1}"#);
    }

    #[test]
    fn strings_escape_controls_and_quotes() {
        let value = Json::str("a\"b\\c\nd\u{1}");
        assert_eq!(render(&value), "\"a\\\"b\\\\c\\nd\\u0001\"");
    }

    #[test]
    fn rendered_json_is_machine_parseable() {
        let report = BoundReport::new(
            BoundId::Weyl,
            0.1,
            0.2,
            BoundContext {
                seed: Some(42),
                noise_l2: Some(0.2),
                ..BoundContext::for_n(4)
            },
        );
        let text = render(&reports_json(&[report]));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["violations"], 0);
        assert_eq!(parsed["reports"][0]["bound_id"], "weyl");
        assert_eq!(parsed["reports"][0]["n"], 4);
        assert!(parsed["reports"][0]["epsilon"].is_null());
        assert!((parsed["reports"][0]["slack"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_quotes_fields_that_need_it() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn report_csv_has_one_row_per_report() {
        let report = BoundReport::new(BoundId::Tv, 1.0 / 24.0, 1.0 / 15.0, BoundContext::for_n(2));
        let csv = bound_reports_csv(&[report]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("bound_id,lhs,rhs"));
        assert!(lines[1].starts_with("tv,"));
        // Absent optionals are empty cells, not zeros.
        assert!(lines[1].contains(",,"));
    }

    #[test]
    fn curve_serializers_agree_on_values() {
        let curve = vec![0.0, 0.5, 0.75];
        let json = render(&curve_json(&curve));
        let csv = curve_csv(&curve);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 3);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.ends_with("2,7.5000000000000000e-1\n"));
    }
}
