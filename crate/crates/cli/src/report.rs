//! Machine-readable run reports: a stable JSON schema with sorted keys and
//! 17-significant-digit floats, plus the CSV projection of the result rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u64 = 1;

/// One named value or check in a report.
#[derive(Debug, Clone, Default)]
pub struct ResultRow {
    pub name: String,
    pub value_re: Option<f64>,
    pub value_im: Option<f64>,
    pub stderr: Option<f64>,
    pub n_samples: Option<u64>,
    pub mode: Option<&'static str>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl ResultRow {
    pub fn check(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        ResultRow {
            name: name.into(),
            residual: Some(residual),
            tolerance: Some(tolerance),
            pass: Some(residual <= tolerance),
            ..Default::default()
        }
    }
}

/// Everything a run needs to be reproduced and judged.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub width: usize,
    pub height: usize,
    pub p: f64,
    pub beta: f64,
    pub t: f64,
    pub seed: Option<u64>,
    pub results: Vec<ResultRow>,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn overall_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass != Some(false))
    }

    pub fn to_jval(&self) -> JVal {
        let mut root = BTreeMap::new();
        root.insert("schema_version".into(), JVal::Int(SCHEMA_VERSION as i64));
        root.insert("command".into(), JVal::Str(self.command.clone()));
        let mut dom = BTreeMap::new();
        dom.insert("width".into(), JVal::Int(self.width as i64));
        dom.insert("height".into(), JVal::Int(self.height as i64));
        root.insert("domain".into(), JVal::Obj(dom));
        let mut params = BTreeMap::new();
        params.insert("p".into(), JVal::Float(self.p));
        params.insert("beta".into(), JVal::Float(self.beta));
        params.insert("t".into(), JVal::Float(self.t));
        root.insert("params".into(), JVal::Obj(params));
        root.insert(
            "seed".into(),
            match self.seed {
                Some(s) => JVal::Int(s as i64),
                None => JVal::Null,
            },
        );
        root.insert("pass".into(), JVal::Bool(self.overall_pass()));
        root.insert("wall_ms".into(), JVal::Int(self.wall_ms as i64));
        let rows = self
            .results
            .iter()
            .map(|r| {
                let mut m = BTreeMap::new();
                m.insert("name".into(), JVal::Str(r.name.clone()));
                let opt_f = |v: Option<f64>| v.map(JVal::Float).unwrap_or(JVal::Null);
                m.insert("value_re".into(), opt_f(r.value_re));
                m.insert("value_im".into(), opt_f(r.value_im));
                m.insert("stderr".into(), opt_f(r.stderr));
                m.insert(
                    "n_samples".into(),
                    r.n_samples
                        .map(|n| JVal::Int(n as i64))
                        .unwrap_or(JVal::Null),
                );
                m.insert(
                    "mode".into(),
                    r.mode.map(|s| JVal::Str(s.into())).unwrap_or(JVal::Null),
                );
                m.insert("residual".into(), opt_f(r.residual));
                m.insert("tolerance".into(), opt_f(r.tolerance));
                m.insert("pass".into(), r.pass.map(JVal::Bool).unwrap_or(JVal::Null));
                JVal::Obj(m)
            })
            .collect();
        root.insert("results".into(), JVal::Arr(rows));
        JVal::Obj(root)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.to_jval().write(&mut out, 0);
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value_re,value_im,stderr,residual,tolerance,pass\n");
        for r in &self.results {
            let f = |v: Option<f64>| v.map(fmt_g17).unwrap_or_default();
            let pass = r.pass.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.name,
                f(r.value_re),
                f(r.value_im),
                f(r.stderr),
                f(r.residual),
                f(r.tolerance),
                pass
            );
        }
        out
    }
}

/// Project the JSON form of a report back onto its CSV rows; used to pin the
/// losslessness of the two encodings against each other.
#[cfg_attr(not(test), allow(dead_code))]
pub fn jval_to_csv(v: &JVal) -> Option<String> {
    let JVal::Obj(root) = v else { return None };
    let JVal::Arr(rows) = root.get("results")? else {
        return None;
    };
    let mut out = String::from("name,value_re,value_im,stderr,residual,tolerance,pass\n");
    for row in rows {
        let JVal::Obj(m) = row else { return None };
        let s = |key: &str| -> String {
            match m.get(key) {
                Some(JVal::Float(x)) => fmt_g17(*x),
                Some(JVal::Str(x)) => x.clone(),
                Some(JVal::Bool(b)) => b.to_string(),
                _ => String::new(),
            }
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s("name"),
            s("value_re"),
            s("value_im"),
            s("stderr"),
            s("residual"),
            s("tolerance"),
            s("pass")
        );
    }
    Some(out)
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Minimal JSON value with deterministic (sorted) object keys.
#[derive(Debug, Clone)]
pub enum JVal {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Arr(Vec<JVal>),
    Obj(BTreeMap<String, JVal>),
}

impl JVal {
    pub fn write(&self, out: &mut String, indent: usize) {
        match self {
            JVal::Null => out.push_str("null"),
            JVal::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            JVal::Int(i) => {
                let _ = write!(out, "{i}");
            }
            JVal::Float(x) => {
                if x.is_finite() {
                    out.push_str(&fmt_g17(*x));
                } else {
                    out.push_str("null");
                }
            }
            JVal::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04x}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            JVal::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    item.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            JVal::Obj(map) => {
                if map.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    let _ = write!(out, "\"{k}\": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips() {
        for x in [0.1, 2.0 - 2f64.sqrt(), 1.0 / 3.0, -1e-300, 6.02e23] {
            let s = fmt_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_matches_json_projection() {
        let report = RunReport {
            command: "fkf test".into(),
            width: 2,
            height: 2,
            p: 0.5,
            beta: 0.3,
            t: 1.2,
            seed: Some(7),
            results: vec![
                ResultRow {
                    name: "f".into(),
                    value_re: Some(0.123456789012345678),
                    value_im: Some(0.0),
                    stderr: Some(0.0),
                    n_samples: Some(16),
                    mode: Some("exact"),
                    ..Default::default()
                },
                ResultRow::check("euler", 0.0, 1e-12),
            ],
            wall_ms: 1,
        };
        assert_eq!(jval_to_csv(&report.to_jval()).unwrap(), report.to_csv());
        assert!(report.overall_pass());
        let json = report.to_json();
        assert!(json.contains("\"schema_version\": 1"));
    }
}
