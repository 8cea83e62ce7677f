//! CSV ingestion and emission for curve datasets.
//!
//! Two layouts are supported:
//! - wide: line 1 is `#grid,t_1,...,t_m`, then one `group,id,v_1,...,v_m`
//!   row per curve, all sharing the grid;
//! - long: header `group,id,time,value`, one row per observation point,
//!   times sorted within each curve.

use funkmean::{DiscretizedCurve, Error, FunctionalDataset};

/// A parsed dataset plus the label/id bookkeeping the core library drops.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    /// Group labels in order of first appearance; group j in the dataset
    /// carries label `group_labels[j]`.
    pub group_labels: Vec<String>,
    /// Curve ids, parallel to the dataset's groups.
    pub curve_ids: Vec<Vec<String>>,
    pub data: FunctionalDataset,
}

fn parse_f64(field: &str, line: usize) -> Result<f64, Error> {
    field.trim().parse::<f64>().map_err(|_| Error::ParseError {
        line,
        message: format!("expected a number, got {field:?}"),
    })
}

struct GroupAccumulator {
    labels: Vec<String>,
    ids: Vec<Vec<String>>,
    curves: Vec<Vec<DiscretizedCurve>>,
}

impl GroupAccumulator {
    fn new() -> Self {
        Self {
            labels: Vec::new(),
            ids: Vec::new(),
            curves: Vec::new(),
        }
    }

    fn push(&mut self, group: &str, id: &str, curve: DiscretizedCurve) {
        let j = match self.labels.iter().position(|l| l == group) {
            Some(j) => j,
            None => {
                self.labels.push(group.to_string());
                self.ids.push(Vec::new());
                self.curves.push(Vec::new());
                self.labels.len() - 1
            }
        };
        self.ids[j].push(id.to_string());
        self.curves[j].push(curve);
    }

    fn finish(self) -> Result<CurveTable, Error> {
        let data = FunctionalDataset::new(self.curves)?;
        Ok(CurveTable {
            group_labels: self.labels,
            curve_ids: self.ids,
            data,
        })
    }
}

fn parse_wide(text: &str) -> Result<CurveTable, Error> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::EmptyInput("empty CSV".into()))?;
    let mut fields = header.split(',');
    let tag = fields.next().unwrap_or("");
    if tag.trim() != "#grid" {
        return Err(Error::ParseError {
            line: 1,
            message: format!("wide layout must start with `#grid`, got {tag:?}"),
        });
    }
    let grid: Vec<f64> = fields
        .map(|f| parse_f64(f, 1))
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(Error::ParseError {
            line: 1,
            message: "grid header has no time points".into(),
        });
    }
    let mut acc = GroupAccumulator::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != grid.len() + 2 {
            return Err(Error::ParseError {
                line,
                message: format!(
                    "expected group,id and {} values, found {} fields",
                    grid.len(),
                    parts.len()
                ),
            });
        }
        let values: Vec<f64> = parts[2..]
            .iter()
            .map(|f| parse_f64(f, line))
            .collect::<Result<_, _>>()?;
        let curve = DiscretizedCurve::new(grid.clone(), values)?;
        acc.push(parts[0].trim(), parts[1].trim(), curve);
    }
    acc.finish()
}

fn parse_long(text: &str) -> Result<CurveTable, Error> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::EmptyInput("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    if cols != ["group", "id", "time", "value"] {
        return Err(Error::ParseError {
            line: 1,
            message: format!("long layout needs header group,id,time,value, got {header:?}"),
        });
    }
    // (group, id) keyed runs, in order of first appearance.
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut times: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::ParseError {
                line,
                message: format!("expected group,id,time,value, found {} fields", parts.len()),
            });
        }
        let key = (parts[0].trim().to_string(), parts[1].trim().to_string());
        let t = parse_f64(parts[2], line)?;
        let v = parse_f64(parts[3], line)?;
        let idx = match keys.iter().position(|k| *k == key) {
            Some(idx) => idx,
            None => {
                keys.push(key);
                times.push(Vec::new());
                values.push(Vec::new());
                keys.len() - 1
            }
        };
        if let Some(&last) = times[idx].last() {
            if t <= last {
                return Err(Error::ParseError {
                    line,
                    message: format!(
                        "times within a curve must be strictly increasing ({t} after {last})"
                    ),
                });
            }
        }
        times[idx].push(t);
        values[idx].push(v);
    }
    let mut acc = GroupAccumulator::new();
    for (((group, id), t), v) in keys.into_iter().zip(times).zip(values) {
        acc.push(&group, &id, DiscretizedCurve::new(t, v)?);
    }
    acc.finish()
}

/// Parse either layout, sniffing the first line.
pub fn parse_table(text: &str) -> Result<CurveTable, Error> {
    match text.lines().next() {
        Some(first) if first.trim_start().starts_with("#grid") => parse_wide(text),
        Some(_) => parse_long(text),
        None => Err(Error::EmptyInput("empty CSV".into())),
    }
}

/// Wide-format emission; requires every curve to share the first curve's grid.
#[cfg_attr(not(test), allow(dead_code))]
pub fn write_wide(table: &CurveTable) -> Result<String, Error> {
    let grid = table.data.groups()[0][0].times();
    let mut out = String::from("#grid");
    for t in grid {
        out.push_str(&format!(",{t}"));
    }
    out.push('\n');
    for (j, group) in table.data.groups().iter().enumerate() {
        for (i, curve) in group.iter().enumerate() {
            if curve.times() != grid {
                return Err(Error::InvalidDataset(
                    "wide layout needs a shared grid across all curves".into(),
                ));
            }
            out.push_str(&table.group_labels[j]);
            out.push(',');
            out.push_str(&table.curve_ids[j][i]);
            for v in curve.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn write_long(table: &CurveTable) -> String {
    let mut out = String::from("group,id,time,value\n");
    for (j, group) in table.data.groups().iter().enumerate() {
        for (i, curve) in group.iter().enumerate() {
            for (t, v) in curve.times().iter().zip(curve.values()) {
                out.push_str(&format!(
                    "{},{},{t},{v}\n",
                    table.group_labels[j], table.curve_ids[j][i]
                ));
            }
        }
    }
    out
}
