//! Scene execution: builds the data set, resolves named surfaces and
//! regions, runs tasks in declaration order, and writes one report per
//! task. A task failure is reported and counted but does not stop later
//! tasks; flagged inadmissibility inside a report is not a failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use qlm_core::algebra::Vec3;
use qlm_core::embedding::weyl_condition;
use qlm_core::flow::{
    extension_energy, extension_from_surface, q_derivative_check, solve_rotsym_extension,
    FlowOptions,
};
use qlm_core::initial_data::{
    build_catalog_data, constraint_fields, dec_check, InitialDataSet, Region, SampledGrid,
};
use qlm_core::masses::{
    analyze_surface, brown_york, kijowski_liu_yau, w_mass, wang_yau_energy, x_modified_energy,
    AnalysisOptions, SurfaceAnalysis, VectorField, WangYauOptions,
};
use qlm_core::shields::{
    boundary_margin_field, lambda_of_d, obstruction_report, psi_threshold, shield_check,
    BartnikData, FillInThresholds, ShieldGeometry,
};
use qlm_core::sphere::SphereGrid;
use qlm_core::surface::{extrinsic_data, ExtrinsicData, SurfaceMesh};

use crate::artifact::{num, ArtifactMeta, Writer};
use crate::scene::{
    self, ConstraintsTask, EmbedTask, FieldSpec, FillinTask, FlowTask, MassesTask, SceneFile,
    ShieldTask, SurfaceSpec, TableFormat, TaskSpec,
};

pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<TableFormat>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Run a scene file; returns the process exit code (0 unless a task failed).
pub fn run(scene_path: &Path, ov: &Overrides) -> Result<i32> {
    if let Some(t) = ov.tol {
        if !(t > 0.0) || !t.is_finite() {
            bail!("--tol must be positive and finite, got {t}");
        }
    }
    let (scene, hash) = scene::load(scene_path)?;
    let scene_dir =
        scene_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let out_dir = ov
        .out
        .clone()
        .or_else(|| scene.output.dir.clone())
        .or_else(|| std::env::var_os("QLM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qlm-out"));
    let format = ov.format.or(scene.output.format).unwrap_or(TableFormat::Csv);

    let mut runner = Runner::new(&scene, scene_dir, ov.tol)?;
    let mut writer = Writer::new(&out_dir, ArtifactMeta::new(hash, ov.seed))?;

    let mut failures = 0usize;
    for (i, task) in scene.tasks.iter().enumerate() {
        if let Err(e) = runner.execute(i, task, format, &mut writer) {
            eprintln!("task {} failed: {e:#}", i + 1);
            failures += 1;
        }
    }
    println!(
        "{}: {} task(s), {} artifact(s) in {}{}",
        scene_path.display(),
        scene.tasks.len(),
        writer.artifact_count(),
        out_dir.display(),
        if failures > 0 { format!(", {failures} failure(s)") } else { String::new() }
    );
    Ok(if failures == 0 { 0 } else { 1 })
}

fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn to_field(spec: Option<&FieldSpec>) -> VectorField {
    match spec {
        // the only accepted name is "zero" (validated)
        None | Some(FieldSpec::Name(_)) => VectorField::Zero,
        Some(FieldSpec::Radial { radial }) => VectorField::Radial { factor: *radial },
        Some(FieldSpec::Constant { constant }) => VectorField::Constant { v: *constant },
    }
}

/// Sample file for a parametrized surface: header, grid shape, then one
/// `x y z` line per node (theta-major).
fn parse_surface_samples(text: &str) -> Result<(SphereGrid, Vec<Vec3>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| anyhow!("empty surface file"))?;
    if header.trim() != "qlm-surface 1" {
        bail!("expected header `qlm-surface 1`, got `{header}`");
    }
    let (ln, dims_line) = lines.next().ok_or_else(|| anyhow!("missing grid shape line"))?;
    let dims = dims_line
        .split_whitespace()
        .map(str::parse::<usize>)
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("line {}: bad grid shape", ln + 1))?;
    if dims.len() != 2 {
        bail!("line {}: grid shape needs 2 integers, got {}", ln + 1, dims.len());
    }
    let grid = SphereGrid::new(dims[0], dims[1])?;
    let n = grid.node_count();
    let mut pos = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) =
            lines.next().ok_or_else(|| anyhow!("expected {n} node lines, file ended early"))?;
        let v = row
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: bad coordinate", ln + 1))?;
        if v.len() != 3 {
            bail!("line {}: node line needs 3 values, got {}", ln + 1, v.len());
        }
        pos.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok((grid, pos))
}

struct Runner<'a> {
    scene: &'a SceneFile,
    scene_dir: PathBuf,
    ids: InitialDataSet,
    embed_tol: f64,
    dec_tol: f64,
    fit_tol: f64,
    analyses: BTreeMap<String, SurfaceAnalysis>,
}

impl<'a> Runner<'a> {
    fn new(scene: &'a SceneFile, scene_dir: PathBuf, tol_override: Option<f64>) -> Result<Runner<'a>> {
        let ids = match (&scene.data.catalog, &scene.data.grid) {
            (Some(name), None) => build_catalog_data(name, &scene.data.params)?,
            (None, Some(rel)) => {
                let path = resolve(&scene_dir, rel);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading grid data {}", path.display()))?;
                InitialDataSet::from_samples(SampledGrid::from_text(&text)?)?
            }
            _ => unreachable!("validated"),
        };
        Ok(Runner {
            scene,
            scene_dir,
            ids,
            embed_tol: tol_override.or(scene.tolerances.embedding).unwrap_or(1e-10),
            dec_tol: scene.tolerances.dec.unwrap_or(1e-10),
            fit_tol: scene.tolerances.fit.unwrap_or(1e-8),
            analyses: BTreeMap::new(),
        })
    }

    fn surface_spec(&self, name: &str) -> &SurfaceSpec {
        self.scene.surfaces.iter().find(|s| s.name == name).expect("validated reference")
    }

    fn build_mesh(&self, name: &str) -> Result<SurfaceMesh> {
        let spec = self.surface_spec(name);
        if let Some(radius) = spec.radius {
            let [nt, np] = spec.grid.unwrap_or([32, 64]);
            let grid = SphereGrid::new(nt, np)?;
            Ok(SurfaceMesh::coordinate_sphere(spec.center.unwrap_or([0.0; 3]), radius, grid)?)
        } else {
            let path = resolve(&self.scene_dir, spec.samples.as_ref().expect("validated"));
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading surface samples {}", path.display()))?;
            let (grid, pos) =
                parse_surface_samples(&text).with_context(|| format!("surface `{name}`"))?;
            Ok(SurfaceMesh::from_parametrization_samples(
                grid,
                pos,
                spec.fit_tol.unwrap_or(self.fit_tol),
            )?)
        }
    }

    /// Extrinsic data plus embedding, cached per surface name.
    fn analysis(&mut self, name: &str) -> Result<&SurfaceAnalysis> {
        if !self.analyses.contains_key(name) {
            let mesh = self.build_mesh(name)?;
            let mut opts = AnalysisOptions::new();
            opts.embedding.tol_rel = self.embed_tol;
            let analysis = analyze_surface(&self.ids, mesh, &opts)
                .with_context(|| format!("analyzing surface `{name}`"))?;
            self.analyses.insert(name.to_string(), analysis);
        }
        Ok(&self.analyses[name])
    }

    /// Extrinsic data alone; no embedding, so it also serves non-convex
    /// surfaces.
    fn extrinsic(&self, name: &str) -> Result<ExtrinsicData> {
        let mesh = self.build_mesh(name)?;
        Ok(extrinsic_data(&self.ids, mesh)?)
    }

    fn region(&self, name: &str) -> Region {
        let spec = self.scene.regions.iter().find(|r| r.name == name).expect("validated reference");
        let shape = spec.shape.unwrap_or([8, 12, 16]);
        if let Some(b) = &spec.ball {
            Region::ball(b.center, b.radius, shape)
        } else if let Some(s) = &spec.shell {
            Region::Shell { center: s.center, r_min: s.r_min, r_max: s.r_max, shape }
        } else if let Some(b) = &spec.box_spec {
            Region::Box { lo: b.lo, hi: b.hi, shape }
        } else {
            Region::SampledInterior
        }
    }

    fn execute(
        &mut self,
        idx: usize,
        task: &TaskSpec,
        format: TableFormat,
        w: &mut Writer,
    ) -> Result<()> {
        let nn = format!("{:02}", idx + 1);
        if let Some(t) = &task.constraints {
            return self.run_constraints(&nn, t, format, w);
        }
        if let Some(t) = &task.masses {
            return self.run_masses(&nn, t, format, w);
        }
        if let Some(t) = &task.embed {
            return self.run_embed(&nn, t, w);
        }
        if let Some(t) = &task.flow {
            return self.run_flow(&nn, t, w);
        }
        if let Some(t) = &task.shield {
            return self.run_shield(&nn, t, w);
        }
        if let Some(t) = &task.fillin {
            return self.run_fillin(&nn, t, w);
        }
        unreachable!("validated task kind")
    }

    fn run_constraints(
        &mut self,
        nn: &str,
        t: &ConstraintsTask,
        format: TableFormat,
        w: &mut Writer,
    ) -> Result<()> {
        let region = self.region(&t.region);
        let fields = constraint_fields(&self.ids, &region)?;
        let dec = dec_check(&fields, t.dec_tol.unwrap_or(self.dec_tol));
        w.report(
            &format!("{nn}_constraints_{}", t.region),
            json!({
                "region": t.region,
                "points": fields.len(),
                "max_abs_mu": num(fields.max_abs_mu()),
                "max_j_norm": num(fields.max_j_norm()),
                "min_dec_margin": num(fields.min_dec_margin()),
                "dec": {
                    "tolerance": dec.tolerance,
                    "satisfied": dec.violations.is_empty(),
                    "violations": dec.violations.len(),
                    "worst_margin": num(dec.margin_min),
                    "worst_point": dec.worst_point,
                },
            }),
        )?;
        if t.table.unwrap_or(true) {
            let columns =
                ["x", "y", "z", "mu", "j_x", "j_y", "j_z", "j_norm", "trace_k", "scalar_curvature"];
            let rows: Vec<Vec<String>> = (0..fields.len())
                .map(|i| {
                    vec![
                        fields.points[i][0].to_string(),
                        fields.points[i][1].to_string(),
                        fields.points[i][2].to_string(),
                        fields.mu[i].to_string(),
                        fields.j[i][0].to_string(),
                        fields.j[i][1].to_string(),
                        fields.j[i][2].to_string(),
                        fields.j_norm[i].to_string(),
                        fields.trace_k[i].to_string(),
                        fields.scalar_curvature[i].to_string(),
                    ]
                })
                .collect();
            w.table(&format!("{nn}_constraints_{}_samples", t.region), format, &columns, &rows)?;
        }
        Ok(())
    }

    fn run_masses(
        &mut self,
        nn: &str,
        t: &MassesTask,
        format: TableFormat,
        w: &mut Writer,
    ) -> Result<()> {
        let embed_tol = self.embed_tol;
        let analysis = self.analysis(&t.surface)?;
        let by = brown_york(analysis);
        let kly = kijowski_liu_yau(analysis);
        let wv = w_mass(analysis);
        let wy = if t.wang_yau.unwrap_or(true) {
            let tau = t.tau.clone().unwrap_or_else(|| vec![0.0]);
            let mut opts = WangYauOptions::new();
            opts.embedding.tol_rel = embed_tol;
            match wang_yau_energy(analysis, &tau, &opts) {
                Ok(r) => Some(r),
                Err(e) => {
                    eprintln!("task {nn} (masses): wang-yau column unavailable: {e}");
                    None
                }
            }
        } else {
            None
        };

        let mut columns = vec![
            "surface",
            "area",
            "area_radius",
            "m_by",
            "m_kly",
            "m_w",
            "e_wy",
            "m_by_raw",
            "m_kly_raw",
            "m_w_raw",
            "e_wy_raw",
            "by_margin",
            "kly_margin",
            "w_margin",
            "wy_margin",
            "kly_clamped",
            "by_admissible",
            "kly_admissible",
            "w_admissible",
            "wy_admissible",
            "embed_residual",
            "embed_iterations",
        ];
        let f = |v: f64| v.to_string();
        let (e_wy, e_wy_raw, wy_margin, wy_ok) = match &wy {
            Some(r) => (f(r.normalized), f(r.raw), f(r.hypothesis_margin), "true".to_string()),
            None => ("NaN".into(), "NaN".into(), "NaN".into(), "false".to_string()),
        };
        let mut row = vec![
            t.surface.clone(),
            f(by.area),
            f(analysis.data.area_radius()),
            f(by.normalized),
            f(kly.normalized),
            f(wv.normalized),
            e_wy,
            f(by.raw),
            f(kly.raw),
            f(wv.raw),
            e_wy_raw,
            f(by.hypothesis_margin),
            f(kly.hypothesis_margin),
            f(wv.hypothesis_margin),
            wy_margin,
            kly.clamped_nodes.to_string(),
            by.admissible.to_string(),
            kly.admissible.to_string(),
            wv.admissible.to_string(),
            wy_ok,
            f(analysis.embedding.residual_max),
            analysis.embedding.iterations.to_string(),
        ];
        if let Some(spec) = &t.field {
            let x = x_modified_energy(analysis, &to_field(Some(spec)));
            columns.extend_from_slice(&["x_energy", "x_raw", "x_margin", "x_admissible"]);
            row.extend_from_slice(&[
                f(x.normalized),
                f(x.raw),
                f(x.boundary_margin),
                x.admissible.to_string(),
            ]);
        }
        w.table(&format!("{nn}_masses_{}", t.surface), format, &columns, &[row])
    }

    fn run_embed(&mut self, nn: &str, t: &EmbedTask, w: &mut Writer) -> Result<()> {
        let analysis = self.analysis(&t.surface)?;
        let grid = &analysis.data.mesh.grid;
        let weyl = weyl_condition(grid, &analysis.data.gamma);
        let h0 = &analysis.reference_h;
        let (h0_min, h0_max) = h0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        w.report(
            &format!("{nn}_embed_{}", t.surface),
            json!({
                "surface": t.surface,
                "l_max": analysis.embedding.l_max,
                "iterations": analysis.embedding.iterations,
                "residual_max": num(analysis.embedding.residual_max),
                "gauss_min": num(weyl.k_min),
                "area": num(analysis.data.area),
                "area_radius": num(analysis.data.area_radius()),
                "h0_min": num(h0_min),
                "h0_max": num(h0_max),
            }),
        )?;
        if t.cloud.unwrap_or(true) {
            let columns = ["theta", "phi", "x", "y", "z", "h0", "gauss"];
            let mut rows = Vec::with_capacity(grid.node_count());
            for i in 0..grid.n_theta {
                for j in 0..grid.n_phi {
                    let idx = grid.idx(i, j);
                    let p = analysis.embedding.positions[idx];
                    rows.push(vec![
                        grid.theta[i].to_string(),
                        grid.phi[j].to_string(),
                        p.x.to_string(),
                        p.y.to_string(),
                        p.z.to_string(),
                        h0[idx].to_string(),
                        weyl.gauss[idx].to_string(),
                    ]);
                }
            }
            w.table(&format!("{nn}_embed_{}_cloud", t.surface), TableFormat::Csv, &columns, &rows)?;
        }
        Ok(())
    }

    fn run_flow(&mut self, nn: &str, t: &FlowTask, w: &mut Writer) -> Result<()> {
        let opts = FlowOptions {
            n_leaves: t.leaves.unwrap_or(200),
            r_max_factor: t.r_max_factor.unwrap_or(1e4),
        };
        let step = t.derivative_step.unwrap_or(1e-5);
        let (source, boundary, traj) = match (&t.surface, t.r0, t.u0) {
            (Some(name), _, _) => {
                let analysis = self.analysis(name)?;
                let (b, traj) =
                    extension_from_surface(analysis, &to_field(t.field.as_ref()), &opts)?;
                (name.clone(), Some(b), traj)
            }
            (None, Some(r0), Some(u0)) => {
                ("param".to_string(), None, solve_rotsym_extension(r0, u0, &opts)?)
            }
            _ => unreachable!("validated"),
        };
        let deriv = q_derivative_check(&traj, step);
        let energy = extension_energy(&traj)?;
        w.report(
            &format!("{nn}_flow_{source}"),
            json!({
                "source": source,
                "r0": num(traj.r0),
                "u0": num(traj.u0),
                "m_tilde": num(traj.m_tilde),
                "extension_energy": num(energy),
                "max_q_increase": num(traj.max_q_increase()),
                "q_derivative": { "step_rel": deriv.step_rel, "max_defect": num(deriv.max_defect) },
                "leaves": traj.leaves.len(),
                "r_max_factor": opts.r_max_factor,
                "boundary_u": boundary.as_ref().map(|b| json!({
                    "min": num(b.min),
                    "max": num(b.max),
                    "flux_mean": num(b.flux_mean),
                })),
            }),
        )?;
        let columns = ["radius", "u", "q", "mean_curvature", "area"];
        let rows: Vec<Vec<String>> = traj
            .leaves
            .iter()
            .map(|l| {
                vec![
                    l.radius.to_string(),
                    l.u.to_string(),
                    l.q.to_string(),
                    l.mean_curvature.to_string(),
                    l.area.to_string(),
                ]
            })
            .collect();
        w.table(&format!("{nn}_flow_{source}_leaves"), TableFormat::Csv, &columns, &rows)
    }

    fn run_shield(&mut self, nn: &str, t: &ShieldTask, w: &mut Writer) -> Result<()> {
        match (&t.boundary, &t.interior, &t.annulus) {
            (Some(b), Some(int), Some(ann)) => {
                let data = self.extrinsic(b)?;
                let interior = constraint_fields(&self.ids, &self.region(int))?;
                let annulus = constraint_fields(&self.ids, &self.region(ann))?;
                let sg = ShieldGeometry {
                    sigma: t.sigma,
                    n: t.n,
                    d: t.d,
                    l: t.l,
                    boundary_margin: boundary_margin_field(&data),
                    interior_margin_u0: interior.min_dec_margin(),
                    interior_margin_annulus: annulus.min_dec_margin(),
                };
                let report = shield_check(&sg)?;
                w.report(&format!("{nn}_shield_{b}"), serde_json::to_value(&report)?)
            }
            (None, None, None) => {
                // thresholds only: out-of-domain lambda is null, psi infinite
                let lambda = match lambda_of_d(t.sigma, t.n, t.d) {
                    Ok(v) => num(v),
                    Err(qlm_core::Error::ShieldDomain(_)) => serde_json::Value::Null,
                    Err(e) => return Err(e.into()),
                };
                let psi = psi_threshold(t.sigma, t.n, t.d, t.l)?;
                w.report(
                    &format!("{nn}_shield"),
                    json!({
                        "sigma": t.sigma,
                        "n": t.n,
                        "d": t.d,
                        "l": t.l,
                        "lambda": lambda,
                        "psi": num(psi),
                    }),
                )
            }
            _ => unreachable!("validated"),
        }
    }

    fn run_fillin(&mut self, nn: &str, t: &FillinTask, w: &mut Writer) -> Result<()> {
        let (bd, label) = match (&t.surface, &t.record) {
            (Some(name), None) => {
                (BartnikData::from_surface(&self.extrinsic(name)?), name.clone())
            }
            (None, Some(rel)) => {
                let path = resolve(&self.scene_dir, rel);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading record {}", path.display()))?;
                (BartnikData::from_text(&text)?, "record".to_string())
            }
            _ => unreachable!("validated"),
        };
        let report = obstruction_report(&bd, FillInThresholds { h0: t.h0, c0: t.c0 })?;
        w.report(&format!("{nn}_fillin_{label}"), serde_json::to_value(&report)?)?;
        if t.export_record.unwrap_or(false) {
            w.text(&format!("{nn}_fillin_{label}_record.txt"), &bd.to_text())?;
        }
        Ok(())
    }
}
