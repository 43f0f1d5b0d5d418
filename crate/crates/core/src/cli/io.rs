//! CSV formats. Every file has a header row. Poses are written as
//! `tx,ty,tz,qw,qx,qy,qz` with a w-first unit quaternion; quaternions are
//! normalized on read. Numbers use the shortest representation that reads
//! back to the same `f64`.

use std::collections::BTreeMap;
use std::path::Path;
use std::rc::Rc;

use nalgebra::{DMatrix, Vector3};

use crate::manifold::{Element, Pose3, Rotation3};
use crate::tracking::{
    ErrorReport, ErrorStats, KeyframeEstimate, KeyframeType, MeasurementKind, MeasurementRecord,
    Payload, TrajectoryEstimate, TruthSample,
};

use super::{CliError, UnitCircleRow};

const POSE_FIELDS: [&str; 7] = ["tx", "ty", "tz", "qw", "qx", "qy", "qz"];

fn pose_header(prefix: &str) -> Vec<String> {
    POSE_FIELDS
        .iter()
        .map(|f| {
            if prefix.is_empty() {
                f.to_string()
            } else {
                format!("{prefix}_{f}")
            }
        })
        .collect()
}

fn pose_fields(p: &Pose3) -> Vec<String> {
    let q = p.rotation.to_quaternion();
    let t = p.translation;
    [t.x, t.y, t.z, q[0], q[1], q[2], q[3]]
        .iter()
        .map(|v| v.to_string())
        .collect()
}

fn position_fields(p: &Vector3<f64>) -> Vec<String> {
    let mut f: Vec<String> = [p.x, p.y, p.z].iter().map(|v| v.to_string()).collect();
    f.extend(std::iter::repeat_n(String::new(), 4));
    f
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn data_err(path: &Path, row: usize, message: impl Into<String>) -> CliError {
    CliError::Data {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

struct Row<'a> {
    path: &'a Path,
    line: usize,
    record: csv::StringRecord,
    index: Rc<BTreeMap<String, usize>>,
}

impl Row<'_> {
    fn raw(&self, name: &str) -> Result<&str, CliError> {
        let i = self
            .index
            .get(name)
            .ok_or_else(|| data_err(self.path, 1, format!("missing column '{name}'")))?;
        Ok(self.record.get(*i).unwrap_or("").trim())
    }

    fn num(&self, name: &str) -> Result<f64, CliError> {
        let s = self.raw(name)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                data_err(
                    self.path,
                    self.line,
                    format!("{name}: expected a number, got '{s}'"),
                )
            })
    }

    fn opt_num(&self, name: &str) -> Result<Option<f64>, CliError> {
        if self.raw(name)?.is_empty() {
            Ok(None)
        } else {
            self.num(name).map(Some)
        }
    }

    fn position(&self, prefix: &str) -> Result<Vector3<f64>, CliError> {
        let h = pose_header(prefix);
        Ok(Vector3::new(
            self.num(&h[0])?,
            self.num(&h[1])?,
            self.num(&h[2])?,
        ))
    }

    fn has_rotation(&self, prefix: &str) -> Result<bool, CliError> {
        Ok(!self.raw(&pose_header(prefix)[3])?.is_empty())
    }

    fn pose(&self, prefix: &str) -> Result<Pose3, CliError> {
        let h = pose_header(prefix);
        let q: Vec<f64> = h[3..]
            .iter()
            .map(|n| self.num(n))
            .collect::<Result<_, _>>()?;
        let rotation = Rotation3::from_quaternion(q[0], q[1], q[2], q[3])
            .map_err(|e| data_err(self.path, self.line, e.to_string()))?;
        Ok(Pose3::new(rotation, self.position(prefix)?))
    }
}

fn read_rows(path: &Path) -> Result<Vec<Row<'_>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        .clone();
    let index: Rc<BTreeMap<String, usize>> = Rc::new(
        headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect(),
    );
    reader
        .records()
        .enumerate()
        .map(|(i, r)| {
            let record = r.map_err(|e| data_err(path, i + 2, e.to_string()))?;
            Ok(Row {
                path,
                line: i + 2,
                record,
                index: Rc::clone(&index),
            })
        })
        .collect()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_row(w: &mut csv::Writer<std::fs::File>, fields: &[String]) -> Result<(), CliError> {
    w.write_record(fields)
        .map_err(|e| CliError::Io(e.to_string()))
}

fn finish(mut w: csv::Writer<std::fs::File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_truth(path: &Path, truth: &[TruthSample]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(pose_header("chaser"));
    header.extend(pose_header("target"));
    write_row(&mut w, &header)?;
    for s in truth {
        let mut row = vec![s.timestamp.to_string()];
        row.extend(pose_fields(&s.chaser));
        row.extend(pose_fields(&s.target));
        write_row(&mut w, &row)?;
    }
    finish(w)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthSample>, CliError> {
    let samples: Vec<TruthSample> = read_rows(path)?
        .iter()
        .map(|r| {
            Ok(TruthSample {
                timestamp: r.num("timestamp")?,
                chaser: r.pose("chaser")?,
                target: r.pose("target")?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    if let Some(i) = (1..samples.len()).find(|&i| samples[i].timestamp < samples[i - 1].timestamp) {
        return Err(data_err(path, i + 2, "timestamps must be non-decreasing"));
    }
    Ok(samples)
}

/// `timestamp,kind,tx,ty,tz,qw,qx,qy,qz,cov`. USBL rows leave the
/// quaternion empty. `cov` is empty or the row-major entries of the
/// measurement covariance separated by spaces.
pub fn write_measurements(path: &Path, records: &[MeasurementRecord]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec!["timestamp".to_string(), "kind".to_string()];
    header.extend(pose_header(""));
    header.push("cov".into());
    write_row(&mut w, &header)?;
    for r in records {
        let mut row = vec![r.timestamp.to_string(), r.kind.label().to_string()];
        row.extend(match &r.payload {
            Payload::Pose(p) => pose_fields(p),
            Payload::Position(v) => position_fields(v),
        });
        row.push(
            r.covariance
                .as_ref()
                .map(|c| {
                    c.transpose()
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default(),
        );
        write_row(&mut w, &row)?;
    }
    finish(w)
}

pub fn read_measurements(path: &Path) -> Result<Vec<MeasurementRecord>, CliError> {
    read_rows(path)?
        .iter()
        .map(|r| {
            let t = r.num("timestamp")?;
            let kind_raw = r.raw("kind")?;
            let kind = MeasurementKind::parse(kind_raw)
                .ok_or_else(|| data_err(path, r.line, format!("unknown kind '{kind_raw}'")))?;
            let mut rec = match kind {
                MeasurementKind::Usbl => MeasurementRecord::usbl(t, r.position("")?),
                MeasurementKind::Odom => MeasurementRecord::odom(t, r.pose("")?),
                MeasurementKind::Optical => MeasurementRecord::optical(t, r.pose("")?),
            };
            let cov = r.raw("cov")?;
            if !cov.is_empty() {
                let v: Vec<f64> = cov
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| data_err(path, r.line, format!("cov: cannot parse '{cov}'")))?;
                let n = (v.len() as f64).sqrt().round() as usize;
                if n * n != v.len() {
                    return Err(data_err(path, r.line, "cov: entry count is not a square"));
                }
                rec = rec.with_covariance(DMatrix::from_row_slice(n, n, &v));
            }
            rec.validate(r.line)
                .map_err(|e| data_err(path, r.line, e.to_string()))?;
            Ok(rec)
        })
        .collect()
}

/// One row per keyframe. Orientation columns are empty for R³ targets.
pub fn write_estimate(path: &Path, estimate: &TrajectoryEstimate) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec!["timestamp".to_string(), "type".to_string()];
    header.extend(pose_header("chaser"));
    header.extend(pose_header("target"));
    header.extend(pose_header("rel"));
    header.push("rel_angle".into());
    header.push("target_sigma_t".into());
    write_row(&mut w, &header)?;
    for kf in &estimate.keyframes {
        let mut row = vec![kf.timestamp.to_string(), kf.kind.label().to_string()];
        row.extend(pose_fields(&kf.chaser));
        row.extend(match &kf.target {
            Element::Se3(p) => pose_fields(p),
            other => position_fields(&other.position().expect("position-bearing target")),
        });
        row.extend(match &kf.relative_rotation {
            Some(r) => pose_fields(&Pose3::new(*r, kf.relative_position)),
            None => position_fields(&kf.relative_position),
        });
        row.push(opt(kf.relative_angle));
        row.push(opt(kf
            .target_covariance
            .as_ref()
            .map(|c| (c[(0, 0)] + c[(1, 1)] + c[(2, 2)]).sqrt())));
        write_row(&mut w, &row)?;
    }
    finish(w)
}

pub fn read_estimate(path: &Path) -> Result<TrajectoryEstimate, CliError> {
    let keyframes = read_rows(path)?
        .iter()
        .map(|r| {
            let kind_raw = r.raw("type")?;
            let kind = KeyframeType::parse(kind_raw)
                .ok_or_else(|| data_err(path, r.line, format!("unknown type '{kind_raw}'")))?;
            let oriented = r.has_rotation("target")?;
            let target: Element = if oriented {
                r.pose("target")?.into()
            } else {
                r.position("target")?.into()
            };
            let (relative_position, relative_rotation) = if r.has_rotation("rel")? {
                let p = r.pose("rel")?;
                (p.translation, Some(p.rotation))
            } else {
                (r.position("rel")?, None)
            };
            Ok(KeyframeEstimate {
                timestamp: r.num("timestamp")?,
                kind,
                chaser: r.pose("chaser")?,
                target,
                relative_position,
                relative_rotation,
                relative_angle: r.opt_num("rel_angle")?,
                target_covariance: None,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(TrajectoryEstimate { keyframes })
}

fn stats_row(group: &str, s: &ErrorStats) -> Vec<String> {
    vec![
        group.to_string(),
        s.count.to_string(),
        s.mean.to_string(),
        s.std.to_string(),
        s.max.to_string(),
    ]
}

/// Summary rows `group,count,mean,std,max`: keyframe groups, then the raw
/// measurement baselines.
pub fn metrics_rows(
    report: &ErrorReport,
    raw: Option<(&ErrorStats, &ErrorStats)>,
) -> Vec<(String, ErrorStats)> {
    let mut rows = vec![
        ("USBL".to_string(), report.stats(KeyframeType::Usbl)),
        ("OPTICAL".to_string(), report.stats(KeyframeType::Optical)),
        ("GATE".to_string(), report.stats(KeyframeType::Gate)),
        ("ALL".to_string(), report.all),
    ];
    if let Some((u, o)) = raw {
        rows.push(("RAW_USBL".into(), *u));
        rows.push(("RAW_OPTICAL".into(), *o));
    }
    rows
}

pub fn write_metrics(path: &Path, rows: &[(String, ErrorStats)]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    write_row(
        &mut w,
        &["group", "count", "mean", "std", "max"].map(String::from),
    )?;
    for (g, s) in rows {
        write_row(&mut w, &stats_row(g, s))?;
    }
    finish(w)
}

pub fn read_metrics(path: &Path) -> Result<Vec<(String, ErrorStats)>, CliError> {
    read_rows(path)?
        .iter()
        .map(|r| {
            let count = r.raw("count")?;
            Ok((
                r.raw("group")?.to_string(),
                ErrorStats {
                    count: count.parse().map_err(|_| {
                        data_err(path, r.line, format!("count: bad value '{count}'"))
                    })?,
                    mean: r.raw("mean")?.parse().unwrap_or(f64::NAN),
                    std: r.raw("std")?.parse().unwrap_or(f64::NAN),
                    max: r.raw("max")?.parse().unwrap_or(f64::NAN),
                },
            ))
        })
        .collect()
}

pub fn write_errors(path: &Path, report: &ErrorReport) -> Result<(), CliError> {
    let mut w = writer(path)?;
    write_row(
        &mut w,
        &["timestamp", "type", "position_error", "angle_error"].map(String::from),
    )?;
    for r in &report.rows {
        write_row(
            &mut w,
            &[
                r.timestamp.to_string(),
                r.kind.label().to_string(),
                r.position_error.to_string(),
                opt(r.angle_error),
            ],
        )?;
    }
    finish(w)
}

/// Aligned text table of the summary rows.
pub fn format_table(rows: &[(String, ErrorStats)]) -> String {
    let mut out = format!(
        "{:<12} {:>6} {:>10} {:>10} {:>10}\n",
        "group", "count", "mean [m]", "std [m]", "max [m]"
    );
    for (g, s) in rows {
        let f = |v: f64| {
            if v.is_nan() {
                "-".to_string()
            } else {
                format!("{v:.4}")
            }
        };
        out.push_str(&format!(
            "{:<12} {:>6} {:>10} {:>10} {:>10}\n",
            g,
            s.count,
            f(s.mean),
            f(s.std),
            f(s.max)
        ));
    }
    out
}

/// `index,anchored,init_*,opt_*,init_arc_distance,arc_distance`.
pub fn write_unit_circle(path: &Path, rows: &[UnitCircleRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec!["index".to_string(), "anchored".to_string()];
    header.extend(pose_header("init"));
    header.extend(pose_header("opt"));
    header.push("init_arc_distance".into());
    header.push("arc_distance".into());
    write_row(&mut w, &header)?;
    for r in rows {
        let mut row = vec![r.index.to_string(), r.anchored.to_string()];
        row.extend(pose_fields(&r.initial));
        row.extend(pose_fields(&r.optimized));
        row.push(r.initial_arc_distance.to_string());
        row.push(r.arc_distance.to_string());
        write_row(&mut w, &row)?;
    }
    finish(w)
}

pub fn read_unit_circle(path: &Path) -> Result<Vec<UnitCircleRow>, CliError> {
    read_rows(path)?
        .iter()
        .map(|r| {
            let index = r.raw("index")?;
            let anchored = r.raw("anchored")?;
            Ok(UnitCircleRow {
                index: index
                    .parse()
                    .map_err(|_| data_err(path, r.line, format!("index: bad value '{index}'")))?,
                anchored: anchored.parse().map_err(|_| {
                    data_err(path, r.line, format!("anchored: bad value '{anchored}'"))
                })?,
                initial: r.pose("init")?,
                optimized: r.pose("opt")?,
                initial_arc_distance: r.num("init_arc_distance")?,
                arc_distance: r.num("arc_distance")?,
            })
        })
        .collect()
}
