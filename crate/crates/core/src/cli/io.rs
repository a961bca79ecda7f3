//! Flat-file formats: panel data, ground truth, draws and JSON sidecars.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{ChainOutput, DrawColumns};
use crate::model::{PanelDataset, ParameterDraw};
use crate::simulator::GroundTruth;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("line {line}: cannot parse {what} from `{field}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Writes `data.csv`: one row per observed (subject, period) with
/// `id, t, x, y, v_1.., w_1..`; ids and periods are 1-based.
pub fn write_data(path: &Path, data: &PanelDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["id", "t", "x", "y"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=data.p_v()).map(|k| format!("v_{k}")));
    header.extend((1..=data.p_w()).map(|k| format!("w_{k}")));
    w.write_record(&header)?;
    for i in 0..data.n() {
        for t in 0..data.n_observed(i) {
            let mut rec = vec![(i + 1).to_string(), (t + 1).to_string(), data.x(i).to_string(), num(data.y(i, t))];
            rec.extend(data.v_row(i).iter().map(|&v| num(v)));
            rec.extend(data.w_row(i, t).iter().map(|&v| num(v)));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn covariate_count(header: &csv::StringRecord, prefix: &str, start: usize) -> usize {
    let mut k = 0;
    while let Some(h) = header.get(start + k) {
        if h.trim() != format!("{prefix}_{}", k + 1) {
            break;
        }
        k += 1;
    }
    k
}

struct SubjectRows {
    x: u8,
    v: Vec<f64>,
    cells: Vec<(usize, f64, Vec<f64>)>,
}

/// Reads `data.csv`. Subjects keep their order of first appearance; each
/// subject's periods must form a prefix `1..=T_i`, and `x` and the selection
/// covariates must be constant within a subject. The panel length is the
/// largest period present unless `periods` is given.
pub fn read_data(path: &Path, periods: Option<usize>) -> Result<PanelDataset> {
    let mut r = csv_reader(path)?;
    let header = r.headers()?.clone();
    let fixed: Vec<&str> = header.iter().take(4).map(str::trim).collect();
    if fixed != ["id", "t", "x", "y"] {
        return Err(Error::Schema(format!("{}: header must start with id,t,x,y", path.display())));
    }
    let p_v = covariate_count(&header, "v", 4);
    let p_w = covariate_count(&header, "w", 4 + p_v);
    if header.len() != 4 + p_v + p_w {
        return Err(Error::Schema(format!(
            "{}: unexpected columns after v_1..v_{p_v}, w_1..w_{p_w}",
            path.display()
        )));
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut subjects: Vec<SubjectRows> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = rec[0].trim().to_string();
        let t: usize = parse(&rec[1], "t", line)?;
        let x: u8 = parse(&rec[2], "x", line)?;
        let y: f64 = parse(&rec[3], "y", line)?;
        let v: Vec<f64> = (0..p_v).map(|k| parse(&rec[4 + k], "v", line)).collect::<Result<_>>()?;
        let w: Vec<f64> = (0..p_w).map(|k| parse(&rec[4 + p_v + k], "w", line)).collect::<Result<_>>()?;
        if t == 0 {
            return Err(Error::Schema(format!("line {line}: periods are numbered from 1")));
        }
        let k = *index.entry(id.clone()).or_insert_with(|| {
            subjects.push(SubjectRows { x, v: v.clone(), cells: Vec::new() });
            subjects.len() - 1
        });
        let s = &mut subjects[k];
        if s.x != x || s.v.iter().zip(&v).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(Error::Schema(format!(
                "line {line}: subject {id} changes treatment or selection covariates"
            )));
        }
        s.cells.push((t, y, w));
    }

    let observed_max = subjects.iter().flat_map(|s| s.cells.iter().map(|c| c.0)).max().unwrap_or(0);
    let periods = match periods {
        Some(p) if p < observed_max => {
            return Err(Error::Schema(format!("data reach period {observed_max} but the panel has {p}")))
        }
        Some(p) => p,
        None if observed_max == 0 => return Err(Error::Schema(format!("{}: no data rows", path.display()))),
        None => observed_max,
    };
    let n = subjects.len();
    let mut x = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n * p_v);
    let mut w = vec![0.0; n * periods * p_w];
    let mut y = vec![0.0; n * periods];
    let mut n_obs = Vec::with_capacity(n);
    let ids: Vec<&String> = {
        let mut pairs: Vec<(&String, &usize)> = index.iter().collect();
        pairs.sort_by_key(|p| *p.1);
        pairs.into_iter().map(|p| p.0).collect()
    };
    for (i, mut s) in subjects.into_iter().enumerate() {
        s.cells.sort_by_key(|c| c.0);
        for (k, c) in s.cells.iter().enumerate() {
            if c.0 != k + 1 {
                return Err(Error::Schema(format!(
                    "subject {}: observed periods must be 1..=T_i without gaps or repeats",
                    ids[i]
                )));
            }
            let cell = i * periods + k;
            y[cell] = c.1;
            w[cell * p_w..(cell + 1) * p_w].copy_from_slice(&c.2);
        }
        x.push(s.x);
        v.extend_from_slice(&s.v);
        n_obs.push(s.cells.len());
    }
    PanelDataset::from_parts(periods, p_v, p_w, x, v, w, y, n_obs).map_err(|e| Error::Schema(e.to_string()))
}

/// Writes `truth.csv`: every (subject, period) cell including unobserved ones.
pub fn write_truth(path: &Path, data: &PanelDataset, truth: &GroundTruth) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["id", "t", "x", "xstar", "f_c", "f_0", "f_1", "y0", "y1", "ate_true"])?;
    let t_max = data.periods();
    for i in 0..data.n() {
        for t in 0..t_max {
            let cell = i * t_max + t;
            w.write_record([
                (i + 1).to_string(),
                (t + 1).to_string(),
                data.x(i).to_string(),
                num(truth.xstar[i]),
                num(truth.f_c[i]),
                num(truth.f_0[i]),
                num(truth.f_1[i]),
                num(truth.y0[cell]),
                num(truth.y1[cell]),
                num(truth.ate[t]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// True average treatment effect per period from `truth.csv`.
pub fn read_true_ate(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv_reader(path)?;
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", path.display())))
    };
    let (ct, ca) = (col("t")?, col("ate_true")?);
    let mut ate: Vec<Option<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let t: usize = parse(&rec[ct], "t", line)?;
        let a: f64 = parse(&rec[ca], "ate_true", line)?;
        if t == 0 {
            return Err(Error::Schema(format!("line {line}: periods are numbered from 1")));
        }
        if ate.len() < t {
            ate.resize(t, None);
        }
        match ate[t - 1] {
            None => ate[t - 1] = Some(a),
            Some(b) if b.to_bits() == a.to_bits() => {}
            Some(_) => return Err(Error::Schema(format!("line {line}: inconsistent ate_true for period {t}"))),
        }
    }
    ate.into_iter()
        .enumerate()
        .map(|(t, a)| a.ok_or_else(|| Error::Schema(format!("truth file has no row for period {}", t + 1))))
        .collect()
}

/// Writes one stored draw per row under the canonical column names.
pub fn write_draws(path: &Path, chain: &ChainOutput) -> Result<()> {
    let m = &chain.metadata;
    let cols = DrawColumns::new(m.p_v, m.periods, m.p_w);
    let mut w = csv_writer(path)?;
    w.write_record(cols.names())?;
    for (d, a) in chain.draws.iter().zip(&chain.ate) {
        w.write_record(cols.flatten(d, a).into_iter().map(num))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub struct DrawFile {
    pub columns: DrawColumns,
    pub draws: Vec<ParameterDraw>,
    pub ate: Vec<Vec<f64>>,
    /// Flattened rows in file order.
    pub rows: Vec<Vec<f64>>,
}

pub fn read_draws(path: &Path) -> Result<DrawFile> {
    let mut r = csv_reader(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let columns = DrawColumns::from_header(&header).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let mut out = DrawFile {
        columns,
        draws: Vec::new(),
        ate: Vec::new(),
        rows: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let row: Vec<f64> = rec.iter().map(|f| parse(f, "draw value", line)).collect::<Result<_>>()?;
        let (d, a) = columns.unflatten(&row)?;
        out.draws.push(d);
        out.ate.push(a);
        out.rows.push(row);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

/// Parses a JSON config; unknown keys and type errors become config errors.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}
