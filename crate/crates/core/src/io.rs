//! Artifact files: dataset and trajectory CSVs, JSON documents, figure data.
//!
//! Every file is written to a temporary sibling first and renamed into place,
//! so readers never see a partial artifact. Floats are printed in shortest
//! round-trip form, so reading a CSV back reproduces the exact values.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;

use crate::evaluate::{Evaluation, SweepRow};
use crate::regression::{Dataset, DatasetMeta, GpModel};
use crate::simulate::Trajectory;
use crate::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(context: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        context: context.display().to_string(),
        source,
    }
}

/// Write `bytes` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn to_csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>, path: &Path) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })
}

/// Numeric CSV with a header row.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("{}: row {}: '{f}' is not a number", path.display(), i + 2))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Sidecar metadata file next to a dataset CSV.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Columns `t, q0..q{n-1}, y0..y{n-1}` plus a `.meta.json` sidecar.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    data.validate()?;
    let n = data.inputs[0].len();
    let m = data.outputs[0].len();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..n).map(|i| format!("q{i}")))
        .chain((0..m).map(|i| format!("y{i}")))
        .collect();
    let rows = (0..data.len()).map(|i| {
        std::iter::once(data.times[i])
            .chain(data.inputs[i].iter().copied())
            .chain(data.outputs[i].iter().copied())
            .collect()
    });
    let bytes = to_csv(&header, rows, path)?;
    write_atomic(path, &bytes)?;
    write_json(&meta_path(path), &data.meta)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (header, rows) = read_csv(path)?;
    let nq = header.iter().filter(|h| h.starts_with('q')).count();
    let ny = header.iter().filter(|h| h.starts_with('y')).count();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((0..nq).map(|i| format!("q{i}")))
        .chain((0..ny).map(|i| format!("y{i}")))
        .collect();
    if header != expected || nq == 0 || ny == 0 {
        return Err(Error::InvalidInput(format!(
            "{}: expected header t,q0..,y0.., got {}",
            path.display(),
            header.join(",")
        )));
    }
    let meta_file = meta_path(path);
    let meta: DatasetMeta = serde_json::from_str(&read_to_string(&meta_file)?).map_err(|source| Error::Json {
        context: meta_file.display().to_string(),
        source,
    })?;
    let mut data = Dataset {
        inputs: Vec::with_capacity(rows.len()),
        outputs: Vec::with_capacity(rows.len()),
        times: Vec::with_capacity(rows.len()),
        meta,
    };
    for row in rows {
        data.times.push(row[0]);
        data.inputs.push(DVector::from_column_slice(&row[1..1 + nq]));
        data.outputs.push(DVector::from_column_slice(&row[1 + nq..]));
    }
    data.validate()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(data)
}

/// Columns `t, q0..q{n-1}`.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let n = traj.states.first().map_or(0, |q| q.len());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..n).map(|i| format!("q{i}")))
        .collect();
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, q)| std::iter::once(*t).chain(q.iter().copied()).collect());
    write_atomic(path, &to_csv(&header, rows, path)?)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let (header, rows) = read_csv(path)?;
    if header.first().map(String::as_str) != Some("t") || header.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: expected header t,q0,..",
            path.display()
        )));
    }
    let label = path
        .file_stem()
        .map_or(String::new(), |s| s.to_string_lossy().into_owned());
    Ok(Trajectory {
        times: rows.iter().map(|r| r[0]).collect(),
        states: rows.iter().map(|r| DVector::from_column_slice(&r[1..])).collect(),
        field_label: label,
    })
}

pub fn write_model(path: &Path, model: &GpModel) -> Result<()> {
    let mut text = model.to_json()?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_model(path: &Path) -> Result<GpModel> {
    GpModel::from_json(&read_to_string(path)?).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// File names of the figure series inside an output directory.
pub const FIGURE_FILES: [&str; 4] = [
    "fig1_trajectories.csv",
    "fig2_planar_error.csv",
    "fig3_constraint_violation.csv",
    "fig4_field_error.csv",
];

/// Write the four figure series: planar paths, `Delta(t)`, `e_nh` and `e_f`
/// along the test set.
pub fn write_figures(dir: &Path, eval: &Evaluation) -> Result<Vec<PathBuf>> {
    let labels: Vec<&str> = eval.models.iter().map(|m| m.report.model_label.as_str()).collect();
    let paths: Vec<PathBuf> = FIGURE_FILES.iter().map(|f| dir.join(f)).collect();

    let mut header = vec!["t".to_string(), "true_x".into(), "true_y".into()];
    for l in &labels {
        header.push(format!("{l}_x"));
        header.push(format!("{l}_y"));
    }
    let rows = (0..eval.reference.len()).map(|i| {
        let mut row = vec![
            eval.reference.times[i],
            eval.reference.states[i][0],
            eval.reference.states[i][1],
        ];
        for m in &eval.models {
            row.push(m.rollout.states[i][0]);
            row.push(m.rollout.states[i][1]);
        }
        row
    });
    write_atomic(&paths[0], &to_csv(&header, rows, &paths[0])?)?;

    let per_model = |path: &Path, times: &[f64], series: &dyn Fn(usize, usize) -> f64| -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(labels.iter().map(|l| l.to_string()))
            .collect();
        let rows = (0..times.len()).map(|i| {
            std::iter::once(times[i])
                .chain((0..labels.len()).map(|m| series(m, i)))
                .collect()
        });
        write_atomic(path, &to_csv(&header, rows, path)?)
    };
    per_model(&paths[1], &eval.reference.times, &|m, i| {
        eval.models[m].planar_error.per_time[i]
    })?;
    per_model(&paths[2], &eval.test_times, &|m, i| {
        eval.models[m].constraint_violation.values[i]
    })?;
    per_model(&paths[3], &eval.test_times, &|m, i| {
        eval.models[m].field_error.values[i]
    })?;
    Ok(paths)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })?;
    write_atomic(path, &bytes)
}
