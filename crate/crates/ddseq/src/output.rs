//! Files written by `ddseq run`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use ddseq_core::mesh::assemble_laplacian;

use crate::harness::ExperimentOutput;
use crate::mmio::write_matrix_market;

#[derive(Serialize)]
struct StepRow {
    step: usize,
    iters: usize,
    relres0: f64,
    relres_final: f64,
    time_s: f64,
}

#[derive(Serialize)]
struct ResidualRow {
    step: usize,
    iter: usize,
    relres_rhs: f64,
    relres_r0: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

/// Per-step table `step, iters, relres0, relres_final, time_s`.
pub fn write_steps(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in &out.steps {
        w.serialize(StepRow {
            step: r.step,
            iters: r.iterations,
            relres0: r.relres0,
            relres_final: r.relres_final,
            time_s: r.time_s,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Residual histories, one row per iteration of every step.
pub fn write_residuals(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in &out.steps {
        let r0 = r.residual_history.first().copied().unwrap_or(0.0);
        for (iter, &res) in r.residual_history.iter().enumerate() {
            w.serialize(ResidualRow {
                step: r.step,
                iter,
                relres_rhs: if r.rhs_norm > 0.0 {
                    res / r.rhs_norm
                } else {
                    0.0
                },
                relres_r0: if r0 > 0.0 { res / r0 } else { 0.0 },
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ritz values attached to the deflation basis after each step.
pub fn write_ritz(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let width = out
        .steps
        .iter()
        .map(|r| r.ritz_values.len())
        .max()
        .unwrap_or(0);
    let mut header = vec!["step".to_string()];
    header.extend((1..=width).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for r in &out.steps {
        let mut row = vec![r.step.to_string()];
        row.extend(r.ritz_values.iter().map(|t| format!("{t:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_faces(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let width = out
        .faces
        .iter()
        .map(|f| f.top_eigenvalues.len())
        .max()
        .unwrap_or(0);
    let mut header: Vec<String> = ["face", "s", "t", "rows_added"].map(String::from).to_vec();
    header.extend((1..=width).map(|i| format!("lambda_{i}")));
    w.write_record(&header)?;
    for f in &out.faces {
        let mut row = vec![
            f.face.to_string(),
            f.s.to_string(),
            f.t.to_string(),
            f.rows_added.to_string(),
        ];
        row.extend(f.top_eigenvalues.iter().map(|l| format!("{l:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Nodal fields as `node, x, y, <fields>`.
pub fn write_fields(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    if out.fields.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir)?;
    for dump in &out.fields {
        let mut w = csv_writer(&dir.join(format!("step_{:05}.csv", dump.step)))?;
        let mut header = vec!["node".to_string(), "x".into(), "y".into()];
        header.extend(dump.columns.iter().map(|(name, _)| name.to_string()));
        w.write_record(&header)?;
        for (node, [x, y]) in out.mesh.coords.iter().enumerate() {
            let mut row = vec![node.to_string(), x.to_string(), y.to_string()];
            row.extend(dump.columns.iter().map(|(_, v)| format!("{:e}", v[node])));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Node coordinates and element connectivity with subdomain ids.
pub fn write_mesh(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    let mut w = csv_writer(&dir.join("nodes.csv"))?;
    w.write_record(["node", "x", "y"])?;
    for (n, [x, y]) in out.mesh.coords.iter().enumerate() {
        w.write_record([n.to_string(), x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("elements.csv"))?;
    w.write_record(["element", "n0", "n1", "n2", "n3", "subdomain"])?;
    for (e, nodes) in out.mesh.elements.iter().enumerate() {
        let mut row = vec![e.to_string()];
        row.extend(nodes.iter().map(|n| n.to_string()));
        row.push(out.partition.element_subdomain[e].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output file of a run into `dir`.
pub fn write_all(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("config.txt"), format!("{}\n", out.config))?;
    write_steps(out, &dir.join("steps.csv"))?;
    write_residuals(out, &dir.join("residuals.csv"))?;
    write_ritz(out, &dir.join("ritz.csv"))?;
    write_faces(out, &dir.join("faces.csv"))?;
    write_json(&dir.join("summary.json"), &out.summary)?;
    write_json(&dir.join("coarse.json"), &out.coarse)?;
    write_fields(out, &dir.join("fields"))?;
    if out.config.dump_mesh {
        write_mesh(out, dir)?;
    }
    Ok(())
}

/// Writes the stiffness matrix with Dirichlet rows and columns removed.
pub fn write_stiffness(out: &ExperimentOutput, path: &Path) -> Result<()> {
    let bc = out.config.boundary_condition(&out.mesh);
    let (k, _) = assemble_laplacian(&out.mesh, &bc)?;
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_matrix_market(BufWriter::new(f), &k)?;
    Ok(())
}
