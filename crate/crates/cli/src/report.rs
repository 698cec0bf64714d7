//! Report rendering: JSON by default, a plain table with `--pretty`.

use serde_json::Value;

pub fn render(v: &Value, pretty: bool) -> String {
    if !pretty {
        return serde_json::to_string_pretty(v).expect("serializable") + "\n";
    }
    let mut out = String::new();
    table(v, "", &mut out);
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn table(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            for (k, x) in map {
                if is_scalar(x) || x.as_array().is_some_and(|a| a.iter().all(is_scalar) && a.len() <= 16) {
                    let cell = match x {
                        Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(" "),
                        _ => scalar(x),
                    };
                    out.push_str(&format!("{prefix}{k:<width$}  {cell}\n"));
                } else {
                    out.push_str(&format!("{prefix}{k}\n"));
                    table(x, &format!("{prefix}  "), out);
                }
            }
        }
        Value::Array(rows) if rows.iter().all(|r| r.is_object()) && !rows.is_empty() => {
            let mut cols: Vec<String> = Vec::new();
            for r in rows {
                for k in r.as_object().unwrap().keys() {
                    if !cols.contains(k) {
                        cols.push(k.clone());
                    }
                }
            }
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| cols.iter().map(|c| r.get(c).map_or("-".into(), |x| if is_scalar(x) { scalar(x) } else { x.to_string() })).collect())
                .collect();
            let widths: Vec<usize> = (0..cols.len()).map(|i| cells.iter().map(|r| r[i].len()).chain([cols[i].len()]).max().unwrap()).collect();
            let line = |row: &[String]| -> String {
                let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                format!("{prefix}{}\n", parts.join("  ").trim_end())
            };
            out.push_str(&line(&cols));
            for r in &cells {
                out.push_str(&line(r));
            }
        }
        Value::Array(items) => {
            for x in items {
                if is_scalar(x) {
                    out.push_str(&format!("{prefix}{}\n", scalar(x)));
                } else {
                    out.push_str(&format!("{prefix}{x}\n"));
                }
            }
        }
        x => out.push_str(&format!("{prefix}{}\n", scalar(x))),
    }
}
