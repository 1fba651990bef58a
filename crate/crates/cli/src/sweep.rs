//! Parameter sweeps: one base scenario plus `[[sweep.case]]` override tables.
//!
//! ```toml
//! # base scenario keys ...
//! [[outputs]]
//! format = "csv"
//! path = "out/{label}.csv"
//!
//! [[sweep.case]]
//! label = "narrow"
//! seed.kernels = [{ a = "0.5", b = "0.5*y" }]
//!
//! [[sweep.case]]
//! label = "minus"
//! branch = "minus"
//! ```
//!
//! Each case table is merged into the base: tables merge key by key, any other
//! value (arrays included) replaces the base value. `{label}` in output paths and
//! in `name` is replaced by the case label.

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::scenario::Scenario;
use crate::{io_error, CliError, CliResult};

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub label: String,
    pub scenario: Scenario,
}

pub fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn substitute(value: &mut Value, label: &str) {
    if let Value::String(s) = value {
        *s = s.replace("{label}", label);
    }
}

pub fn expand(text: &str) -> CliResult<Vec<SweepCase>> {
    let mut base: Table = text
        .parse()
        .map_err(|e| CliError::Input(format!("invalid sweep file: {e}")))?;
    let sweep = base
        .remove("sweep")
        .ok_or_else(|| CliError::Input("missing [sweep] section".into()))?;
    let Value::Table(mut sweep) = sweep else {
        return Err(CliError::Input("`sweep` must be a table".into()));
    };
    let cases = match sweep.remove("case") {
        Some(Value::Array(cases)) if !cases.is_empty() => cases,
        _ => {
            return Err(CliError::Input(
                "[sweep] needs at least one [[sweep.case]]".into(),
            ))
        }
    };
    if let Some(key) = sweep.keys().next() {
        return Err(CliError::Input(format!("unknown key `sweep.{key}`")));
    }

    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(cases.len());
    for (i, case) in cases.into_iter().enumerate() {
        let Value::Table(mut case) = case else {
            return Err(CliError::Input(format!("sweep.case[{i}] must be a table")));
        };
        let label = match case.remove("label") {
            Some(Value::String(s)) if !s.is_empty() => s,
            _ => {
                return Err(CliError::Input(format!(
                    "sweep.case[{i}] needs a non-empty string `label`"
                )))
            }
        };
        if !seen.insert(label.clone()) {
            return Err(CliError::Input(format!("duplicate sweep label `{label}`")));
        }
        let mut table = base.clone();
        merge(&mut table, case);
        match table.get_mut("name") {
            Some(name) => substitute(name, &label),
            None => {
                table.insert("name".into(), Value::String(label.clone()));
            }
        }
        if let Some(Value::Array(outputs)) = table.get_mut("outputs") {
            for o in outputs.iter_mut() {
                if let Some(p) = o.get_mut("path") {
                    substitute(p, &label);
                }
            }
        }
        let scenario = Scenario::from_value(Value::Table(table))
            .map_err(|e| CliError::Input(format!("sweep case `{label}`: {e}")))?;
        out.push(SweepCase { label, scenario });
    }
    Ok(out)
}

pub fn load(path: &Path) -> CliResult<Vec<SweepCase>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    expand(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
branch = "plus"
[seed]
kind = "kernels"
[[seed.kernels]]
a = "1"
b = "y"
[grid]
x0 = -1.0
x1 = 1.0
nx = 3
y0 = 0.0
y1 = 0.0
ny = 1
t0 = 0.0
t1 = 0.0
nt = 1
[[outputs]]
format = "csv"
path = "out/{label}.csv"
"#;

    #[test]
    fn cases_override_and_label_paths() {
        let text = format!(
            "{BASE}\n[[sweep.case]]\nlabel = \"one\"\n\n[[sweep.case]]\nlabel = \"two\"\nbranch = \"minus\"\ngrid.nx = 5\n"
        );
        let cases = expand(&text).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].scenario.grid.nx, 3);
        assert_eq!(cases[1].scenario.grid.nx, 5);
        assert_eq!(cases[1].scenario.grid.x0, -1.0);
        assert_eq!(cases[1].scenario.branch, dlw_core::Branch::Minus);
        assert_eq!(cases[1].scenario.outputs[0].path, Path::new("out/two.csv"));
        assert_eq!(cases[0].scenario.name.as_deref(), Some("one"));
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let text =
            format!("{BASE}\n[[sweep.case]]\nlabel = \"a\"\n[[sweep.case]]\nlabel = \"a\"\n");
        assert!(expand(&text).is_err());
    }

    #[test]
    fn arrays_replace() {
        let mut base: Table = "x = [1, 2]\n[t]\na = 1\nb = 2".parse().unwrap();
        let overlay: Table = "x = [3]\n[t]\nb = 5".parse().unwrap();
        merge(&mut base, overlay);
        assert_eq!(base["x"].as_array().unwrap().len(), 1);
        assert_eq!(base["t"]["a"].as_integer(), Some(1));
        assert_eq!(base["t"]["b"].as_integer(), Some(5));
    }
}
