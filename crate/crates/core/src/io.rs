//! CSV formats for clouds, matrices and observation lists.
//!
//! Numbers are written at 12 significant digits. Cloud and matrix files may
//! start with a `#` metadata line; readers skip comment lines.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::completion::{MaskMode, SampleMask};
use crate::edm::NodeCloud;
use crate::error::{Error, Result};
use crate::rng::ALGORITHM_ID;

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal for the 12-digit rounding of `x`.
pub fn fmt_sig12(x: f64) -> String {
    let r = round_sig12(x);
    let mag = r.abs();
    if r == 0.0 {
        "0".into()
    } else if !(1e-5..1e16).contains(&mag) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// `# n=..,d=..,seed=..,dist=..,rng=..`.
pub fn cloud_meta_line(cloud: &NodeCloud) -> String {
    format!(
        "# n={},d={},seed={},dist={},rng={}",
        cloud.n(),
        cloud.d(),
        cloud.seed,
        cloud.dist_id,
        ALGORITHM_ID
    )
}

fn join_row<'a>(vals: impl Iterator<Item = &'a f64>) -> String {
    vals.map(|&v| fmt_sig12(v)).collect::<Vec<_>>().join(",")
}

pub fn write_cloud_csv<W: Write>(mut w: W, cloud: &NodeCloud) -> Result<()> {
    writeln!(w, "{}", cloud_meta_line(cloud))?;
    let header: Vec<String> = (1..=cloud.d()).map(|k| format!("x{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in cloud.coords.row_iter() {
        writeln!(w, "{}", join_row(row.iter()))?;
    }
    Ok(())
}

/// Writes a matrix with no header, preceded by `meta` as a comment line.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>, meta: Option<&str>) -> Result<()> {
    if let Some(meta) = meta {
        writeln!(w, "{meta}")?;
    }
    for row in m.row_iter() {
        writeln!(w, "{}", join_row(row.iter()))?;
    }
    Ok(())
}

/// Data rows of a numeric CSV plus the text of its `#` comment lines. Blank
/// lines and a leading non-numeric header row are skipped.
fn read_numeric_rows<R: Read>(mut r: R) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let comments = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .map(|c| c.trim().to_string())
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_record = false;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let vals = match parsed {
            Ok(v) => v,
            Err(_) if !seen_record => {
                seen_record = true;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("{e} in {:?}", record.iter().collect::<Vec<_>>().join(",")),
                })
            }
        };
        if let Some(first) = rows.first() {
            if vals.len() != first.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", first.len(), vals.len()),
                });
            }
        }
        seen_record = true;
        rows.push(vals);
    }
    Ok((rows, comments))
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let c = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, c, |i, j| rows[i][j])
}

/// Reads a cloud; seed and distribution id are recovered from the metadata
/// line when present.
pub fn read_cloud_csv<R: Read>(r: R) -> Result<NodeCloud> {
    let (rows, comments) = read_numeric_rows(r)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no coordinate rows".into(),
        });
    }
    let mut cloud = NodeCloud::from_coords(to_matrix(&rows));
    for c in &comments {
        for (k, v) in meta_pairs(c) {
            match k.as_str() {
                "seed" => cloud.seed = v.parse().unwrap_or(0),
                "dist" => cloud.dist_id = v,
                _ => {}
            }
        }
    }
    Ok(cloud)
}

/// `key=value` pairs of a metadata line. Values may contain commas (as in
/// `dist=uniform[-1,1]`); a fragment without `=` continues the previous value.
fn meta_pairs(line: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for frag in line.split(',') {
        match frag.split_once('=') {
            Some((k, v)) if !k.contains('[') && !k.contains('(') => {
                out.push((k.trim().to_string(), v.trim().to_string()))
            }
            _ => {
                if let Some(last) = out.last_mut() {
                    last.1.push(',');
                    last.1.push_str(frag);
                }
            }
        }
    }
    out
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let (rows, _) = read_numeric_rows(r)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no matrix rows".into(),
        });
    }
    Ok(to_matrix(&rows))
}

/// `i,j,value` rows, 0-based indices, with an `i,j,value` header.
pub fn write_observations_csv<W: Write>(mut w: W, mask: &SampleMask, values: &[f64]) -> Result<()> {
    writeln!(
        w,
        "# n={},m={},mode={},seed={}",
        mask.n,
        mask.m,
        match mask.mode {
            MaskMode::AllEntries => "all-entries",
            MaskMode::SymmetricOffdiag => "symmetric-offdiag",
        },
        mask.seed
    )?;
    writeln!(w, "i,j,value")?;
    for (&(i, j), &v) in mask.coords.iter().zip(values) {
        writeln!(w, "{i},{j},{}", fmt_sig12(v))?;
    }
    Ok(())
}

/// Reads an observation list for an `n x n` matrix. The result keeps the
/// file's values aligned with the mask's sorted coordinates.
pub fn read_observations_csv<R: Read>(
    r: R,
    n: usize,
    mode: MaskMode,
) -> Result<(SampleMask, Vec<f64>)> {
    let (rows, _) = read_numeric_rows(r)?;
    let mut entries = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        if row.len() != 3 {
            return Err(Error::Parse {
                line: k + 1,
                msg: "observation rows are i,j,value".into(),
            });
        }
        let idx = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Parse {
                    line: k + 1,
                    msg: format!("index {v} is not a nonnegative integer"),
                })
            }
        };
        entries.push(((idx(row[0])?, idx(row[1])?), row[2]));
    }
    entries.sort_by_key(|a| a.0);
    entries.dedup_by(|a, b| a.0 == b.0);
    let mask = SampleMask::from_coords(n, entries.iter().map(|e| e.0).collect(), mode)?;
    let values = entries.iter().map(|e| e.1).collect();
    Ok((mask, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::sample_mask;

    #[test]
    fn sig12_rounding() {
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig12(59.220807652301), "59.2208076523");
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(-2.5e-20), "-2.5e-20");
        assert_eq!(fmt_sig12(1748.0), "1748");
    }

    #[test]
    fn cloud_round_trip() {
        let mut cloud = NodeCloud::from_rows(&[&[0.25, -0.5], &[1.0 / 3.0, 0.75]]);
        cloud.seed = 7;
        cloud.dist_id = "uniform[-1,1]".into();
        let mut buf = Vec::new();
        write_cloud_csv(&mut buf, &cloud).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("# n=2,d=2,seed=7,dist=uniform[-1,1],rng=splitmix64-counter\nx1,x2\n")
        );
        let back = read_cloud_csv(&buf[..]).unwrap();
        assert_eq!(back.seed, 7);
        assert_eq!(back.dist_id, "uniform[-1,1]");
        assert!((back.coords - cloud.coords).abs().max() < 1e-12);
    }

    #[test]
    fn matrix_round_trip_and_ragged_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, None).unwrap();
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), m);
        let bad = "0,1\n1\n";
        assert!(matches!(
            read_matrix_csv(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn observations_round_trip() {
        let mask = sample_mask(6, 10, MaskMode::SymmetricOffdiag, 3).unwrap();
        let vals: Vec<f64> = mask.coords.iter().map(|&(i, j)| (i + j) as f64).collect();
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &mask, &vals).unwrap();
        let (m2, v2) = read_observations_csv(&buf[..], 6, MaskMode::SymmetricOffdiag).unwrap();
        assert_eq!(m2.coords, mask.coords);
        assert_eq!(v2, vals);
    }
}
