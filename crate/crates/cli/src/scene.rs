//! Scene files: declarative TOML describing one data set, named surfaces and
//! regions, and an ordered task list. Parsing is strict (unknown keys are
//! rejected) and every cross-reference is resolved before anything runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub data: DataSpec,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

/// Either a catalog entry (name plus parameters) or a sampled grid file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub grid: Option<PathBuf>,
}

/// A named surface: coordinate sphere (`center`, `radius`, optional `grid`)
/// or a parametrization sample file (`samples`, optional `fit_tol`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    pub center: Option<[f64; 3]>,
    pub radius: Option<f64>,
    pub grid: Option<[usize; 2]>,
    pub samples: Option<PathBuf>,
    pub fit_tol: Option<f64>,
}

/// A named sample region: exactly one of `ball`, `shell`, `box`, or
/// `interior`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub ball: Option<BallSpec>,
    pub shell: Option<ShellSpec>,
    #[serde(rename = "box")]
    pub box_spec: Option<BoxSpec>,
    /// All interior nodes of a sampled data set.
    pub interior: Option<bool>,
    /// Sample counts: `[nr, ntheta, nphi]` for balls and shells,
    /// `[nx, ny, nz]` for boxes.
    pub shape: Option<[usize; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub center: [f64; 3],
    pub r_min: f64,
    pub r_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// One task per entry; exactly one of the kind keys must be present.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub constraints: Option<ConstraintsTask>,
    pub masses: Option<MassesTask>,
    pub embed: Option<EmbedTask>,
    pub flow: Option<FlowTask>,
    pub shield: Option<ShieldTask>,
    pub fillin: Option<FillinTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsTask {
    pub region: String,
    /// Margins below `-dec_tol` count as violations; defaults to
    /// `tolerances.dec`, then `1e-10`.
    pub dec_tol: Option<f64>,
    /// Write the per-point table artifact (default true).
    pub table: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassesTask {
    pub surface: String,
    /// Evaluate the Wang-Yau energy column (default true).
    pub wang_yau: Option<bool>,
    /// Time function as real spherical harmonic coefficients, length
    /// `(L+1)²`; default `[0.0]`.
    pub tau: Option<Vec<f64>>,
    /// Auxiliary vector field; adds the X-modified energy columns.
    pub field: Option<FieldSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedTask {
    pub surface: String,
    /// Write the embedded point cloud artifact (default true).
    pub cloud: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowTask {
    /// Seed from a declared surface (area radius and flux-mean boundary u)...
    pub surface: Option<String>,
    /// ...or prescribe the seed directly.
    pub r0: Option<f64>,
    pub u0: Option<f64>,
    pub leaves: Option<usize>,
    pub r_max_factor: Option<f64>,
    /// Modifier field for the boundary seed (surface mode only).
    pub field: Option<FieldSpec>,
    /// Relative step of the dQ/dr spot check (default 1e-5).
    pub derivative_step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldTask {
    pub sigma: f64,
    pub n: usize,
    pub d: f64,
    pub l: f64,
    /// Optional geometry: inner-boundary surface plus the two sample regions.
    /// All three must be given together; without them the task reports the
    /// thresholds alone.
    pub boundary: Option<String>,
    pub interior: Option<String>,
    pub annulus: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillinTask {
    /// Boundary data induced from a declared surface...
    pub surface: Option<String>,
    /// ...or loaded from a Bartnik record file.
    pub record: Option<PathBuf>,
    pub h0: f64,
    pub c0: f64,
    /// Also write the boundary record in its text format.
    pub export_record: Option<bool>,
}

/// Auxiliary vector field: the string `"zero"`, `{ radial = c }` for `c·x`,
/// or `{ constant = [vx, vy, vz] }`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Name(String),
    Radial { radial: f64 },
    Constant { constant: [f64; 3] },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub format: Option<TableFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Convergence bound for every isometric embedding (default 1e-10).
    pub embedding: Option<f64>,
    /// Energy-condition slack for constraint checks (default 1e-10).
    pub dec: Option<f64>,
    /// Fit residual bound for sampled surfaces (default 1e-8).
    pub fit: Option<f64>,
}

/// Counts reported by `validate`.
#[derive(Debug)]
pub struct SceneSummary {
    pub surfaces: usize,
    pub regions: usize,
    pub tasks: usize,
}

/// Artifact names embed surface/region names, so keep them path- and
/// CSV-safe.
fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 48
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn check_field(spec: &FieldSpec, what: &str) -> Result<()> {
    match spec {
        FieldSpec::Name(n) if n == "zero" => Ok(()),
        FieldSpec::Name(n) => bail!("{what}: unknown field `{n}`; expected \"zero\", {{ radial = c }}, or {{ constant = [..] }}"),
        FieldSpec::Radial { radial } if radial.is_finite() => Ok(()),
        FieldSpec::Radial { radial } => bail!("{what}: radial factor {radial} is not finite"),
        FieldSpec::Constant { constant } if constant.iter().all(|v| v.is_finite()) => Ok(()),
        FieldSpec::Constant { .. } => bail!("{what}: constant field has non-finite components"),
    }
}

fn check_sphere_grid(grid: &[usize; 2], what: &str) -> Result<()> {
    if grid[0] < 6 || grid[1] < 8 || grid[1] % 2 != 0 {
        bail!("{what}: grid [{}, {}] needs n_theta >= 6 and even n_phi >= 8", grid[0], grid[1]);
    }
    Ok(())
}

/// Semantic validation beyond the serde schema: exclusive choices, name
/// rules, and cross-references. Dangling references are rejected here,
/// before any computation starts.
pub fn validate(scene: &SceneFile) -> Result<SceneSummary> {
    match (&scene.data.catalog, &scene.data.grid) {
        (Some(_), Some(_)) => bail!("[data]: give either `catalog` or `grid`, not both"),
        (None, None) => bail!("[data]: one of `catalog` or `grid` is required"),
        (None, Some(_)) if !scene.data.params.is_empty() => {
            bail!("[data]: `params` applies only to catalog entries")
        }
        _ => {}
    }

    let mut surface_names = BTreeSet::new();
    for s in &scene.surfaces {
        if !valid_name(&s.name) {
            bail!("surface name `{}` must be 1-48 characters from [A-Za-z0-9_-]", s.name);
        }
        if !surface_names.insert(s.name.as_str()) {
            bail!("surface `{}` is declared twice", s.name);
        }
        match (&s.radius, &s.samples) {
            (Some(_), Some(_)) => bail!("surface `{}`: give either `radius` or `samples`", s.name),
            (None, None) => bail!("surface `{}`: one of `radius` or `samples` is required", s.name),
            (Some(r), None) => {
                if !(*r > 0.0) || !r.is_finite() {
                    bail!("surface `{}`: radius must be positive and finite", s.name);
                }
                if s.fit_tol.is_some() {
                    bail!("surface `{}`: `fit_tol` applies only to sampled surfaces", s.name);
                }
                if let Some(g) = &s.grid {
                    check_sphere_grid(g, &format!("surface `{}`", s.name))?;
                }
            }
            (None, Some(_)) => {
                if s.center.is_some() || s.grid.is_some() {
                    bail!(
                        "surface `{}`: `center` and `grid` apply only to coordinate spheres",
                        s.name
                    );
                }
            }
        }
    }

    let mut region_names = BTreeSet::new();
    for r in &scene.regions {
        if !valid_name(&r.name) {
            bail!("region name `{}` must be 1-48 characters from [A-Za-z0-9_-]", r.name);
        }
        if !region_names.insert(r.name.as_str()) {
            bail!("region `{}` is declared twice", r.name);
        }
        let kinds =
            [r.ball.is_some(), r.shell.is_some(), r.box_spec.is_some(), r.interior == Some(true)];
        if kinds.iter().filter(|k| **k).count() != 1 {
            bail!(
                "region `{}`: exactly one of `ball`, `shell`, `box`, or `interior = true` is required",
                r.name
            );
        }
        if r.interior == Some(true) && r.shape.is_some() {
            bail!("region `{}`: `shape` does not apply to interior regions", r.name);
        }
        if let Some(b) = &r.ball {
            if !(b.radius > 0.0) || !b.radius.is_finite() {
                bail!("region `{}`: ball radius must be positive and finite", r.name);
            }
        }
        if let Some(s) = &r.shell {
            if !(s.r_min > 0.0 && s.r_max > s.r_min) || !s.r_max.is_finite() {
                bail!("region `{}`: shell needs 0 < r_min < r_max, both finite", r.name);
            }
        }
        if let Some(shape) = &r.shape {
            if shape.iter().any(|&s| s < 2) {
                bail!("region `{}`: shape needs at least 2 samples per axis", r.name);
            }
        }
    }

    let need_surface = |idx: usize, kind: &str, name: &str| -> Result<()> {
        if !surface_names.contains(name) {
            bail!("task {} ({kind}) references undeclared surface \"{name}\"", idx + 1);
        }
        Ok(())
    };
    let need_region = |idx: usize, kind: &str, name: &str| -> Result<()> {
        if !region_names.contains(name) {
            bail!("task {} ({kind}) references undeclared region \"{name}\"", idx + 1);
        }
        Ok(())
    };

    for (i, t) in scene.tasks.iter().enumerate() {
        let kinds = [
            t.constraints.is_some(),
            t.masses.is_some(),
            t.embed.is_some(),
            t.flow.is_some(),
            t.shield.is_some(),
            t.fillin.is_some(),
        ];
        if kinds.iter().filter(|k| **k).count() != 1 {
            bail!(
                "task {}: exactly one of constraints/masses/embed/flow/shield/fillin is required",
                i + 1
            );
        }
        if let Some(c) = &t.constraints {
            need_region(i, "constraints", &c.region)?;
        }
        if let Some(m) = &t.masses {
            need_surface(i, "masses", &m.surface)?;
            if let Some(tau) = &m.tau {
                let l = (tau.len() as f64).sqrt() as usize;
                if tau.is_empty() || l * l != tau.len() {
                    bail!(
                        "task {} (masses): tau length {} is not a square (L+1)^2",
                        i + 1,
                        tau.len()
                    );
                }
            }
            if let Some(f) = &m.field {
                check_field(f, &format!("task {} (masses)", i + 1))?;
            }
        }
        if let Some(e) = &t.embed {
            need_surface(i, "embed", &e.surface)?;
        }
        if let Some(f) = &t.flow {
            match (&f.surface, f.r0, f.u0) {
                (Some(name), None, None) => need_surface(i, "flow", name)?,
                (None, Some(r0), Some(u0)) => {
                    if !(r0 > 0.0 && u0 > 0.0) || !r0.is_finite() || !u0.is_finite() {
                        bail!("task {} (flow): r0 and u0 must be positive and finite", i + 1);
                    }
                }
                _ => bail!(
                    "task {} (flow): give either `surface` or both `r0` and `u0`",
                    i + 1
                ),
            }
            if f.field.is_some() && f.surface.is_none() {
                bail!("task {} (flow): `field` applies only to surface-seeded flows", i + 1);
            }
            if let Some(spec) = &f.field {
                check_field(spec, &format!("task {} (flow)", i + 1))?;
            }
            if let Some(n) = f.leaves {
                if n < 3 {
                    bail!("task {} (flow): needs at least 3 leaves", i + 1);
                }
            }
            if let Some(fac) = f.r_max_factor {
                if !(fac > 1.0) {
                    bail!("task {} (flow): r_max_factor must exceed 1", i + 1);
                }
            }
            if let Some(h) = f.derivative_step {
                if !(h > 0.0 && h < 1e-2) {
                    bail!("task {} (flow): derivative_step must lie in (0, 1e-2)", i + 1);
                }
            }
        }
        if let Some(s) = &t.shield {
            if !(s.sigma >= 0.0) || !s.sigma.is_finite() {
                bail!("task {} (shield): sigma must be finite and >= 0", i + 1);
            }
            if s.n < 2 {
                bail!("task {} (shield): dimension n must be >= 2", i + 1);
            }
            for (v, what) in [(s.d, "d"), (s.l, "l")] {
                if !(v >= 0.0) || !v.is_finite() {
                    bail!("task {} (shield): {what} must be finite and >= 0", i + 1);
                }
            }
            let geo = [s.boundary.is_some(), s.interior.is_some(), s.annulus.is_some()];
            match geo.iter().filter(|g| **g).count() {
                0 => {}
                3 => {
                    need_surface(i, "shield", s.boundary.as_deref().unwrap())?;
                    need_region(i, "shield", s.interior.as_deref().unwrap())?;
                    need_region(i, "shield", s.annulus.as_deref().unwrap())?;
                }
                _ => bail!(
                    "task {} (shield): `boundary`, `interior`, and `annulus` must be given together",
                    i + 1
                ),
            }
        }
        if let Some(f) = &t.fillin {
            match (&f.surface, &f.record) {
                (Some(name), None) => need_surface(i, "fillin", name)?,
                (None, Some(_)) => {}
                _ => bail!("task {} (fillin): give either `surface` or `record`", i + 1),
            }
            if !f.h0.is_finite() || !f.c0.is_finite() {
                bail!("task {} (fillin): thresholds h0 and c0 must be finite", i + 1);
            }
        }
    }

    for (v, what) in [
        (scene.tolerances.embedding, "embedding"),
        (scene.tolerances.dec, "dec"),
        (scene.tolerances.fit, "fit"),
    ] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                bail!("[tolerances]: {what} must be positive and finite");
            }
        }
    }

    Ok(SceneSummary {
        surfaces: scene.surfaces.len(),
        regions: scene.regions.len(),
        tasks: scene.tasks.len(),
    })
}

/// Parse and validate a scene file; returns the scene and the hex-truncated
/// SHA-256 of its bytes (the hash stamped into every report).
pub fn load(path: &std::path::Path) -> Result<(SceneFile, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading scene {}", path.display()))?;
    let hash = {
        let digest = Sha256::digest(&bytes);
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            s.push_str(&format!("{b:02x}"));
        }
        s
    };
    let text = String::from_utf8(bytes).with_context(|| format!("scene {} is not UTF-8", path.display()))?;
    let scene: SceneFile =
        toml::from_str(&text).with_context(|| format!("parsing scene {}", path.display()))?;
    validate(&scene)?;
    Ok((scene, hash))
}
