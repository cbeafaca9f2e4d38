use std::path::Path;

use crate::error::{Error, Result};
use crate::recognition::Series;

/// One series as stored on disk: consecutive time indices from `start`,
/// optional per-row labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRecord {
    pub id: String,
    pub start: i64,
    pub values: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

impl SeriesRecord {
    /// Segments with length `tau`; a segment's label is its last row's label.
    pub fn to_series(&self, tau: usize) -> Result<Series> {
        let labels = match &self.labels {
            Some(rows) if tau > 0 => Some((1..=rows.len() / tau).map(|j| rows[j * tau - 1]).collect()),
            _ => None,
        };
        let mut s = Series::new(self.id.clone(), self.values.clone(), tau, labels)?;
        s.start = self.start;
        Ok(s)
    }
}

struct Columns {
    id: usize,
    t: usize,
    dims: Vec<usize>,
    label: Option<usize>,
}

fn columns(headers: &::csv::StringRecord, path: &str) -> Result<Columns> {
    let err = |msg: String| Error::Data { path: path.to_string(), row: 1, msg };
    let find = |name: &str| headers.iter().position(|h| h == name);
    let id = find("series_id").ok_or_else(|| err("missing column 'series_id'".into()))?;
    let t = find("t").ok_or_else(|| err("missing column 't'".into()))?;
    let mut dims = Vec::new();
    while let Some(c) = find(&format!("dim_{}", dims.len())) {
        dims.push(c);
    }
    if dims.is_empty() {
        return Err(err("missing column 'dim_0'".into()));
    }
    let label = find("label");
    let known = 2 + dims.len() + usize::from(label.is_some());
    if headers.len() != known {
        let extra = headers
            .iter()
            .find(|h| !["series_id", "t", "label"].contains(h) && !h.starts_with("dim_"))
            .or_else(|| headers.iter().find(|h| h.starts_with("dim_") && find(h).is_some_and(|c| !dims.contains(&c))))
            .unwrap_or("?");
        return Err(err(format!("unexpected column '{extra}'")));
    }
    Ok(Columns { id, t, dims, label })
}

/// Parses CSV text; `path` only labels error messages. Rows are numbered by
/// file line, the header being line 1.
pub fn parse_csv(text: &str, path: &str) -> Result<Vec<SeriesRecord>> {
    let mut reader = ::csv::ReaderBuilder::new().has_headers(true).trim(::csv::Trim::All).from_reader(text.as_bytes());
    let cols = columns(reader.headers()?, path)?;
    let mut out: Vec<SeriesRecord> = Vec::new();
    let mut prev_t = 0i64;
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::Data { path: path.to_string(), row, msg };
        let field = |c: usize| record.get(c).unwrap_or("");
        let id = field(cols.id).to_string();
        if id.is_empty() {
            return Err(err("empty series_id".into()));
        }
        let t: i64 = field(cols.t).parse().map_err(|_| err(format!("bad time index '{}'", field(cols.t))))?;
        let values = cols
            .dims
            .iter()
            .enumerate()
            .map(|(d, &c)| match field(c).parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(format!("bad value '{}' in dim_{d}", field(c)))),
            })
            .collect::<Result<Vec<_>>>()?;
        let label = match cols.label {
            Some(c) => match field(c) {
                "0" => Some(0u8),
                "1" => Some(1u8),
                other => return Err(err(format!("label must be 0 or 1, got '{other}'"))),
            },
            None => None,
        };

        match out.last_mut() {
            Some(cur) if cur.id == id => {
                if t == prev_t {
                    return Err(err(format!("duplicate (series_id, t) = ({id}, {t})")));
                }
                if t != prev_t + 1 {
                    return Err(err(format!("non-contiguous t in series {id}: {t} after {prev_t}")));
                }
                cur.values.push(values);
                if let (Some(ls), Some(l)) = (&mut cur.labels, label) {
                    ls.push(l);
                }
            }
            last => {
                if let Some(prev) = last {
                    if id < prev.id {
                        return Err(err(format!("rows not sorted by series_id: {id} after {}", prev.id)));
                    }
                }
                out.push(SeriesRecord { id, start: t, values: vec![values], labels: label.map(|l| vec![l]) });
            }
        }
        prev_t = t;
    }
    Ok(out)
}

pub fn load_csv(path: &Path) -> Result<Vec<SeriesRecord>> {
    let text = super::read_to_string(path)?;
    parse_csv(&text, &path.display().to_string())
}

pub fn write_csv(path: &Path, records: &[SeriesRecord]) -> Result<()> {
    crate::io::atomic_write(path, render_csv(records)?.as_bytes())
}

pub(crate) fn render_csv(records: &[SeriesRecord]) -> Result<String> {
    let dim = records.first().and_then(|r| r.values.first()).map_or(0, Vec::len);
    let labelled = records.first().is_some_and(|r| r.labels.is_some());
    for r in records {
        if r.values.iter().any(|v| v.len() != dim) || r.labels.is_some() != labelled {
            return Err(Error::invalid(format!("series {} does not match the others' columns", r.id)));
        }
        if r.labels.as_ref().is_some_and(|l| l.len() != r.values.len()) {
            return Err(Error::invalid(format!("series {}: label count differs from row count", r.id)));
        }
    }
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let mut header = vec!["series_id".to_string(), "t".to_string()];
    header.extend((0..dim).map(|d| format!("dim_{d}")));
    if labelled {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for r in records {
        for (i, v) in r.values.iter().enumerate() {
            let mut row = vec![r.id.clone(), (r.start + i as i64).to_string()];
            row.extend(v.iter().map(|x| format!("{x:?}")));
            if let Some(l) = &r.labels {
                row.push(l[i].to_string());
            }
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
