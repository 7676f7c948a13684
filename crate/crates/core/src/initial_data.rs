//! Initial data sets `(M, g, k)` and the constraint-level operators.
//!
//! The catalog entries are radial metrics `g_ij = δ_ij + B(|x|²) x_i x_j`
//! evaluated with closed-form jets, so curvature quantities on catalog data
//! carry no discretization error:
//!
//! * `flat`: `B = 0`, `k = 0`;
//! * `schwarzschild_slice(m)`: `B(ρ) = 2m / (ρ(√ρ - 2m))`, `k = 0`, chart
//!   restricted to `|x| > 2m` (this is `(1 - 2m/r)^{-1} dr² + r² dΩ²` in
//!   Cartesian components);
//! * `cmc_hyperboloid(a)`: `B(ρ) = -1/(a² + ρ)`, the hyperbolic metric of
//!   curvature `-1/a²`, with `k = g/a` (so `tr_g k = 3/a`).
//!
//! Sampled data sets store `g` and `k` on a Cartesian grid and differentiate
//! with fourth-order centered stencils; evaluation stays two cells away from
//! the sample boundary.
//!
//! Constraint densities follow `μ = ½(R + (tr_g k)² - |k|_g²)` and
//! `J = div_g π` with `π = k - (tr_g k) g`; the dominant energy condition is
//! the pointwise margin `μ - |J|_g ≥ 0`. ADM energy-momentum integrals use
//! Euclidean normals and area elements on large coordinate spheres and a
//! Richardson extrapolation in `1/r` across shells.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::algebra::{pairwise_sum, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

// ---------------------------------------------------------------------------
// data set representations

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Catalog {
    Flat,
    SchwarzschildSlice { m: f64 },
    CmcHyperboloid { a: f64 },
}

#[derive(Debug, Clone)]
pub enum DataKind {
    Catalog(Catalog),
    Sampled(SampledGrid),
}

#[derive(Debug, Clone)]
pub struct InitialDataSet {
    pub kind: DataKind,
    label: String,
}

/// Metric jet at a point: value, first and second coordinate derivatives.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub d2g: [[Mat3; 3]; 3],
}

/// Second fundamental form jet: value and first derivatives.
#[derive(Debug, Clone)]
pub struct CurvatureJet {
    pub k: Mat3,
    pub dk: [Mat3; 3],
}

impl Catalog {
    /// `(B, B', B'')` as functions of `ρ = |x|²`.
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        match *self {
            Catalog::Flat => (0.0, 0.0, 0.0),
            Catalog::SchwarzschildSlice { m } => {
                let s = rho.sqrt();
                let d = rho * (s - 2.0 * m);
                let d1 = 1.5 * s - 2.0 * m;
                let d2 = 0.75 / s;
                let b = 2.0 * m / d;
                let b1 = -2.0 * m * d1 / (d * d);
                let b2 = -2.0 * m * (d2 * d - 2.0 * d1 * d1) / (d * d * d);
                (b, b1, b2)
            }
            Catalog::CmcHyperboloid { a } => {
                let w = a * a + rho;
                (-1.0 / w, 1.0 / (w * w), -2.0 / (w * w * w))
            }
        }
    }

    fn contains(&self, x: &[f64; 3]) -> bool {
        match *self {
            Catalog::SchwarzschildSlice { m } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                r > 2.0 * m
            }
            _ => true,
        }
    }

    fn chart_reason(&self) -> String {
        match *self {
            Catalog::SchwarzschildSlice { m } => {
                format!("chart requires |x| > 2m = {}", 2.0 * m)
            }
            _ => "unbounded chart".to_string(),
        }
    }
}

impl InitialDataSet {
    pub fn flat() -> InitialDataSet {
        InitialDataSet { kind: DataKind::Catalog(Catalog::Flat), label: "flat".into() }
    }

    pub fn schwarzschild_slice(m: f64) -> Result<InitialDataSet> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("schwarzschild_slice needs m > 0, got {m}")));
        }
        Ok(InitialDataSet {
            kind: DataKind::Catalog(Catalog::SchwarzschildSlice { m }),
            label: format!("schwarzschild_slice(m={m})"),
        })
    }

    pub fn cmc_hyperboloid(a: f64) -> Result<InitialDataSet> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("cmc_hyperboloid needs a > 0, got {a}")));
        }
        Ok(InitialDataSet {
            kind: DataKind::Catalog(Catalog::CmcHyperboloid { a }),
            label: format!("cmc_hyperboloid(a={a})"),
        })
    }

    pub fn from_samples(grid: SampledGrid) -> Result<InitialDataSet> {
        grid.validate()?;
        Ok(InitialDataSet { kind: DataKind::Sampled(grid), label: "sampled".into() })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Asymptotic flatness with the decay rate used by ADM preconditions.
    pub fn decay_rate(&self) -> Option<f64> {
        match &self.kind {
            DataKind::Catalog(Catalog::Flat) => Some(1.0),
            DataKind::Catalog(Catalog::SchwarzschildSlice { .. }) => Some(1.0),
            DataKind::Catalog(Catalog::CmcHyperboloid { .. }) => None,
            DataKind::Sampled(s) => s.decay_rate,
        }
    }

    pub fn is_asymptotically_flat(&self) -> bool {
        self.decay_rate().map(|q| q > 0.5).unwrap_or(false)
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        match &self.kind {
            DataKind::Catalog(c) => c.contains(x),
            DataKind::Sampled(s) => s.contains_interior(x),
        }
    }

    pub fn check_contains(&self, x: &[f64; 3]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            let reason = match &self.kind {
                DataKind::Catalog(c) => c.chart_reason(),
                DataKind::Sampled(_) => "outside the sampled interior (two-cell margin)".into(),
            };
            Err(Error::OutsideChart { x: x[0], y: x[1], z: x[2], reason })
        }
    }

    /// Closed-form metric jet; sampled data sets must use node evaluation.
    pub fn metric_jet(&self, x: &[f64; 3]) -> Result<MetricJet> {
        self.check_contains(x)?;
        match &self.kind {
            DataKind::Catalog(c) => Ok(radial_metric_jet(c, x)),
            DataKind::Sampled(s) => s.metric_jet_at(x),
        }
    }

    pub fn curvature_jet(&self, x: &[f64; 3]) -> Result<CurvatureJet> {
        self.check_contains(x)?;
        match &self.kind {
            DataKind::Catalog(c) => Ok(radial_curvature_jet(c, x)),
            DataKind::Sampled(s) => s.curvature_jet_at(x),
        }
    }

    /// True when jets are available at arbitrary chart points (catalog data).
    pub fn has_analytic_jets(&self) -> bool {
        matches!(self.kind, DataKind::Catalog(_))
    }
}

/// Build a catalog entry from its registry name and parameter map.
pub fn build_catalog_data(name: &str, params: &BTreeMap<String, f64>) -> Result<InitialDataSet> {
    let only = |allowed: &[&str]| -> Result<()> {
        for key in params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "unexpected parameter `{key}` for catalog `{name}`"
                )));
            }
        }
        Ok(())
    };
    match name {
        "flat" => {
            only(&[])?;
            Ok(InitialDataSet::flat())
        }
        "schwarzschild_slice" => {
            only(&["m"])?;
            let m = *params
                .get("m")
                .ok_or_else(|| Error::InvalidParameter("schwarzschild_slice requires `m`".into()))?;
            InitialDataSet::schwarzschild_slice(m)
        }
        "cmc_hyperboloid" => {
            only(&["a"])?;
            let a = *params
                .get("a")
                .ok_or_else(|| Error::InvalidParameter("cmc_hyperboloid requires `a`".into()))?;
            InitialDataSet::cmc_hyperboloid(a)
        }
        other => Err(Error::UnknownCatalog(other.to_string())),
    }
}

fn radial_metric_jet(catalog: &Catalog, x: &[f64; 3]) -> MetricJet {
    let rho = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let (b, b1, b2) = catalog.profile(rho);
    let xv = Vec3::new(x[0], x[1], x[2]);
    let xxt = xv * xv.transpose();
    let g = Mat3::identity() + b * xxt;
    let e = [Vec3::x(), Vec3::y(), Vec3::z()];
    let mut dg = [Mat3::zeros(); 3];
    for k in 0..3 {
        let sym = e[k] * xv.transpose() + xv * e[k].transpose();
        dg[k] = 2.0 * b1 * x[k] * xxt + b * sym;
    }
    let mut d2g = [[Mat3::zeros(); 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            let sym_k = e[k] * xv.transpose() + xv * e[k].transpose();
            let sym_l = e[l] * xv.transpose() + xv * e[l].transpose();
            let sym_kl = e[k] * e[l].transpose() + e[l] * e[k].transpose();
            let delta = if k == l { 1.0 } else { 0.0 };
            d2g[k][l] = 4.0 * b2 * x[k] * x[l] * xxt
                + 2.0 * b1 * delta * xxt
                + 2.0 * b1 * x[k] * sym_l
                + 2.0 * b1 * x[l] * sym_k
                + b * sym_kl;
        }
    }
    MetricJet { g, dg, d2g }
}

fn radial_curvature_jet(catalog: &Catalog, x: &[f64; 3]) -> CurvatureJet {
    match *catalog {
        Catalog::CmcHyperboloid { a } => {
            let mj = radial_metric_jet(catalog, x);
            let mut dk = [Mat3::zeros(); 3];
            for i in 0..3 {
                dk[i] = mj.dg[i] / a;
            }
            CurvatureJet { k: mj.g / a, dk }
        }
        _ => CurvatureJet { k: Mat3::zeros(), dk: [Mat3::zeros(); 3] },
    }
}

// ---------------------------------------------------------------------------
// pointwise curvature and constraints

/// Christoffel symbols, curvature scalar and inverse metric at a point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub g: Mat3,
    pub g_inv: Mat3,
    /// `Γ^k_{ij}` as `gamma[k][i][j]`.
    pub gamma: [[[f64; 3]; 3]; 3],
    pub scalar_curvature: f64,
}

pub fn point_geometry(jet: &MetricJet) -> Result<PointGeometry> {
    let g_inv = jet
        .g
        .try_inverse()
        .ok_or_else(|| Error::BadGrid("metric sample is singular".into()))?;
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for l in 0..3 {
                    acc += g_inv[(k, l)]
                        * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                }
                gamma[k][i][j] = 0.5 * acc;
            }
        }
    }
    // ∂_k g^{ml} = -(g^{-1} ∂_k g g^{-1})^{ml}
    let mut dg_inv = [Mat3::zeros(); 3];
    for k in 0..3 {
        dg_inv[k] = -(g_inv * jet.dg[k] * g_inv);
    }
    // ∂_k Γ^m_{ij}
    let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3]; // [k][m][i][j]
    for k in 0..3 {
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = 0.0;
                    for l in 0..3 {
                        acc += dg_inv[k][(m, l)]
                            * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                        acc += g_inv[(m, l)]
                            * (jet.d2g[k][i][(j, l)] + jet.d2g[k][j][(i, l)]
                                - jet.d2g[k][l][(i, j)]);
                    }
                    dgamma[k][m][i][j] = 0.5 * acc;
                }
            }
        }
    }
    // Ricci: R_ij = ∂_k Γ^k_ij - ∂_i Γ^k_kj + Γ^k_kl Γ^l_ij - Γ^k_il Γ^l_kj
    let mut ricci = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += dgamma[k][k][i][j] - dgamma[i][k][k][j];
                for l in 0..3 {
                    acc += gamma[k][k][l] * gamma[l][i][j] - gamma[k][i][l] * gamma[l][k][j];
                }
            }
            ricci[(i, j)] = acc;
        }
    }
    let mut scalar = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            scalar += g_inv[(i, j)] * ricci[(i, j)];
        }
    }
    Ok(PointGeometry { g: jet.g, g_inv, gamma, scalar_curvature: scalar })
}

/// Pointwise constraint data.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintPoint {
    pub mu: f64,
    pub j: [f64; 3],
    pub j_norm: f64,
    pub trace_k: f64,
    pub trace_pi: f64,
    pub scalar_curvature: f64,
}

pub fn constraint_at(geom: &PointGeometry, kjet: &CurvatureJet) -> ConstraintPoint {
    let g_inv = &geom.g_inv;
    let k = &kjet.k;
    let mut trace_k = 0.0;
    let mut k_norm2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            trace_k += g_inv[(i, j)] * k[(i, j)];
            for a in 0..3 {
                for b in 0..3 {
                    k_norm2 += g_inv[(i, a)] * g_inv[(j, b)] * k[(i, j)] * k[(a, b)];
                }
            }
        }
    }
    let mu = 0.5 * (geom.scalar_curvature + trace_k * trace_k - k_norm2);

    // π = k - (tr k) g and its first derivatives.
    let pi = k - trace_k * geom.g;
    let mut dg_inv = [Mat3::zeros(); 3];
    // Recompute ∂ g^{-1} from Christoffels: ∂_k g_ij = Γ^l_ki g_lj + Γ^l_kj g_il.
    for c in 0..3 {
        let mut dgc = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for l in 0..3 {
                    acc += geom.gamma[l][c][i] * geom.g[(l, j)] + geom.gamma[l][c][j] * geom.g[(i, l)];
                }
                dgc[(i, j)] = acc;
            }
        }
        dg_inv[c] = -(g_inv * dgc * g_inv);
    }
    let mut j_cov = [0.0; 3];
    for jj in 0..3 {
        let mut acc = 0.0;
        for i in 0..3 {
            for kk in 0..3 {
                // ∂_k tr k term folded below via product rule on π.
                let mut dpi = kjet.dk[kk][(i, jj)];
                // ∂_k (tr k) = ∂_k g^{ab} k_ab + g^{ab} ∂_k k_ab
                let mut dtrk = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        dtrk += dg_inv[kk][(a, b)] * k[(a, b)] + g_inv[(a, b)] * kjet.dk[kk][(a, b)];
                    }
                }
                // reconstruct ∂_k g_ij from Christoffels
                let mut dgij = 0.0;
                for l in 0..3 {
                    dgij += geom.gamma[l][kk][i] * geom.g[(l, jj)]
                        + geom.gamma[l][kk][jj] * geom.g[(i, l)];
                }
                dpi -= dtrk * geom.g[(i, jj)] + trace_k * dgij;
                let mut cov = dpi;
                for l in 0..3 {
                    cov -= geom.gamma[l][kk][i] * pi[(l, jj)] + geom.gamma[l][kk][jj] * pi[(i, l)];
                }
                acc += g_inv[(i, kk)] * cov;
            }
        }
        j_cov[jj] = acc;
    }
    let mut j_norm2 = 0.0;
    let mut trace_pi = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            j_norm2 += g_inv[(i, j)] * j_cov[i] * j_cov[j];
            trace_pi += g_inv[(i, j)] * pi[(i, j)];
        }
    }
    ConstraintPoint {
        mu,
        j: j_cov,
        j_norm: j_norm2.max(0.0).sqrt(),
        trace_k,
        trace_pi,
        scalar_curvature: geom.scalar_curvature,
    }
}

// ---------------------------------------------------------------------------
// regions and constraint fields

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Cartesian box sampled on a `shape` product grid (endpoints included).
    Box { lo: [f64; 3], hi: [f64; 3], shape: [usize; 3] },
    /// Spherical shell around `center`, radii linearly spaced in
    /// `[r_min, r_max]`, colatitudes at interior offsets, uniform azimuths.
    Shell { center: [f64; 3], r_min: f64, r_max: f64, shape: [usize; 3] },
    /// All interior nodes of a sampled data set.
    SampledInterior,
}

impl Region {
    pub fn ball(center: [f64; 3], radius: f64, shape: [usize; 3]) -> Region {
        Region::Shell { center, r_min: radius * 1e-3, r_max: radius, shape }
    }

    pub(crate) fn points(&self) -> Result<Vec<[f64; 3]>> {
        match self {
            Region::Box { lo, hi, shape } => {
                for d in 0..3 {
                    if shape[d] < 2 || !(hi[d] > lo[d]) {
                        return Err(Error::BadRegion(format!(
                            "box axis {d} needs hi > lo and shape >= 2"
                        )));
                    }
                }
                let mut pts = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
                for ix in 0..shape[0] {
                    for iy in 0..shape[1] {
                        for iz in 0..shape[2] {
                            let f = |d: usize, i: usize| {
                                lo[d] + (hi[d] - lo[d]) * i as f64 / (shape[d] - 1) as f64
                            };
                            pts.push([f(0, ix), f(1, iy), f(2, iz)]);
                        }
                    }
                }
                Ok(pts)
            }
            Region::Shell { center, r_min, r_max, shape } => {
                if !(*r_min > 0.0) || !(r_max > r_min) || shape.iter().any(|&s| s < 2) {
                    return Err(Error::BadRegion(
                        "shell needs 0 < r_min < r_max and shape >= 2 in every axis".into(),
                    ));
                }
                let (nr, nt, np) = (shape[0], shape[1], shape[2]);
                let mut pts = Vec::with_capacity(nr * nt * np);
                for ir in 0..nr {
                    let r = r_min + (r_max - r_min) * ir as f64 / (nr - 1) as f64;
                    for it in 0..nt {
                        let th = (it as f64 + 0.5) * std::f64::consts::PI / nt as f64;
                        for ip in 0..np {
                            let ph = ip as f64 * 2.0 * std::f64::consts::PI / np as f64;
                            pts.push([
                                center[0] + r * th.sin() * ph.cos(),
                                center[1] + r * th.sin() * ph.sin(),
                                center[2] + r * th.cos(),
                            ]);
                        }
                    }
                }
                Ok(pts)
            }
            Region::SampledInterior => Err(Error::BadRegion(
                "SampledInterior region is only meaningful for sampled data sets".into(),
            )),
        }
    }
}

/// Constraint densities sampled over a region.
#[derive(Debug, Clone)]
pub struct ConstraintFields {
    pub points: Vec<[f64; 3]>,
    pub mu: Vec<f64>,
    pub j: Vec<[f64; 3]>,
    pub j_norm: Vec<f64>,
    pub trace_k: Vec<f64>,
    pub trace_pi: Vec<f64>,
    pub scalar_curvature: Vec<f64>,
}

impl ConstraintFields {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_abs_mu(&self) -> f64 {
        self.mu.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn max_j_norm(&self) -> f64 {
        self.j_norm.iter().fold(0.0f64, |a, v| a.max(*v))
    }

    /// Smallest pointwise dominant-energy margin `μ - |J|` over the region.
    pub fn min_dec_margin(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.j_norm)
            .fold(f64::INFINITY, |a, (m, j)| a.min(m - j))
    }
}

/// Sample points of `region`, validated against the data set's chart.
pub(crate) fn region_points(ids: &InitialDataSet, region: &Region) -> Result<Vec<[f64; 3]>> {
    let points: Vec<[f64; 3]> = match (&ids.kind, region) {
        (DataKind::Sampled(s), Region::SampledInterior) => s.interior_points(),
        (DataKind::Sampled(s), other) => {
            let raw = other.points()?;
            for p in &raw {
                s.check_on_node(p)?;
            }
            raw
        }
        (DataKind::Catalog(_), Region::SampledInterior) => {
            return Err(Error::BadRegion(
                "SampledInterior region requires a sampled data set".into(),
            ));
        }
        (DataKind::Catalog(_), other) => other.points()?,
    };
    for p in &points {
        ids.check_contains(p)?;
    }
    Ok(points)
}

/// Evaluate `μ`, `J`, `|J|` over the region.
pub fn constraint_fields(ids: &InitialDataSet, region: &Region) -> Result<ConstraintFields> {
    let points = region_points(ids, region)?;
    let rows: Vec<Result<ConstraintPoint>> = points
        .par_iter()
        .map(|p| {
            let mj = ids.metric_jet(p)?;
            let kj = ids.curvature_jet(p)?;
            let geom = point_geometry(&mj)?;
            Ok(constraint_at(&geom, &kj))
        })
        .collect();
    let mut out = ConstraintFields {
        points,
        mu: Vec::new(),
        j: Vec::new(),
        j_norm: Vec::new(),
        trace_k: Vec::new(),
        trace_pi: Vec::new(),
        scalar_curvature: Vec::new(),
    };
    for row in rows {
        let c = row?;
        out.mu.push(c.mu);
        out.j.push(c.j);
        out.j_norm.push(c.j_norm);
        out.trace_k.push(c.trace_k);
        out.trace_pi.push(c.trace_pi);
        out.scalar_curvature.push(c.scalar_curvature);
    }
    Ok(out)
}

/// A dominant-energy-condition violation at a sample point.
#[derive(Debug, Clone, Copy)]
pub struct DecViolation {
    pub index: usize,
    pub point: [f64; 3],
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct DecReport {
    pub margin_min: f64,
    pub worst_point: [f64; 3],
    pub violations: Vec<DecViolation>,
    pub tolerance: f64,
}

/// Pointwise `μ - |J|` margins; points with margin below `-tol` are listed.
pub fn dec_check(fields: &ConstraintFields, tol: f64) -> DecReport {
    assert!(!fields.is_empty(), "dec_check needs at least one sample point");
    let mut margin_min = f64::INFINITY;
    let mut worst = fields.points[0];
    let mut violations = Vec::new();
    for i in 0..fields.len() {
        let margin = fields.mu[i] - fields.j_norm[i];
        if margin < margin_min {
            margin_min = margin;
            worst = fields.points[i];
        }
        if margin < -tol {
            violations.push(DecViolation { index: i, point: fields.points[i], margin });
        }
    }
    DecReport { margin_min, worst_point: worst, violations, tolerance: tol }
}

// ---------------------------------------------------------------------------
// ADM energy-momentum

#[derive(Debug, Clone)]
pub struct AdmOptions {
    pub sphere_grid: (usize, usize),
    pub extrapolation_order: usize,
}

impl Default for AdmOptions {
    fn default() -> Self {
        AdmOptions { sphere_grid: (32, 64), extrapolation_order: 2 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShellValues {
    pub radius: f64,
    pub energy: f64,
    pub momentum: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct AdmResult {
    pub energy: f64,
    pub momentum: [f64; 3],
    pub momentum_norm: f64,
    /// `sqrt(E² - |P|²)` when `E² ≥ |P|²`, else 0 with `valid_mass = false`.
    pub mass: f64,
    pub valid_mass: bool,
    pub shells: Vec<ShellValues>,
    pub extrapolation_order: usize,
}

/// ADM energy and linear momentum from coordinate-sphere shells.
///
/// `E = 1/(16π) lim ∫ (∂_i g_ij - ∂_j g_ii) ν^j dA` and
/// `P_j = 1/(8π) lim ∫ π_ij ν^i dA`, both with Euclidean normal and area
/// element; the limit is Richardson-extrapolated in `1/r` over the last
/// `order + 1` shells.
pub fn adm_energy_momentum(
    ids: &InitialDataSet,
    radii: &[f64],
    opts: &AdmOptions,
) -> Result<AdmResult> {
    if !ids.is_asymptotically_flat() {
        return Err(Error::NotAsymptoticallyFlat(format!(
            "{} has no positive decay rate",
            ids.label()
        )));
    }
    if !ids.has_analytic_jets() {
        return Err(Error::InvalidArgument(
            "ADM extraction needs jets at arbitrary shell points; supply catalog data".into(),
        ));
    }
    let needed = opts.extrapolation_order + 1;
    if radii.len() < needed.max(3) {
        return Err(Error::TooFewRadii { needed: needed.max(3), got: radii.len() });
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("extraction radii must be distinct".into()));
    }
    let grid = SphereGrid::new(opts.sphere_grid.0, opts.sphere_grid.1)?;
    let mut shells = Vec::with_capacity(sorted.len());
    for &r in &sorted {
        let mut e_terms = Vec::with_capacity(grid.node_count());
        let mut p_terms = [
            Vec::with_capacity(grid.node_count()),
            Vec::with_capacity(grid.node_count()),
            Vec::with_capacity(grid.node_count()),
        ];
        for i in 0..grid.n_theta {
            let w = grid.omega_weight(i) * r * r;
            for j in 0..grid.n_phi {
                let nu = grid.radial(i, j);
                let x = [r * nu[0], r * nu[1], r * nu[2]];
                let mj = ids.metric_jet(&x)?;
                let kj = ids.curvature_jet(&x)?;
                let geom = point_geometry(&mj)?;
                let mut integrand = 0.0;
                for jj in 0..3 {
                    let mut term = 0.0;
                    for ii in 0..3 {
                        term += mj.dg[ii][(ii, jj)] - mj.dg[jj][(ii, ii)];
                    }
                    integrand += term * nu[jj];
                }
                e_terms.push(integrand * w);
                let mut trace_k = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        trace_k += geom.g_inv[(a, b)] * kj.k[(a, b)];
                    }
                }
                let pi = kj.k - trace_k * mj.g;
                for jj in 0..3 {
                    let mut term = 0.0;
                    for ii in 0..3 {
                        term += pi[(ii, jj)] * nu[ii];
                    }
                    p_terms[jj].push(term * w);
                }
            }
        }
        let e = pairwise_sum(&e_terms) / (16.0 * std::f64::consts::PI);
        let p = [
            pairwise_sum(&p_terms[0]) / (8.0 * std::f64::consts::PI),
            pairwise_sum(&p_terms[1]) / (8.0 * std::f64::consts::PI),
            pairwise_sum(&p_terms[2]) / (8.0 * std::f64::consts::PI),
        ];
        shells.push(ShellValues { radius: r, energy: e, momentum: p });
    }
    let order = opts.extrapolation_order;
    let tail = &shells[shells.len() - (order + 1)..];
    let energy = extrapolate_in_inverse_radius(tail.iter().map(|s| (s.radius, s.energy)), order)?;
    let mut momentum = [0.0; 3];
    for c in 0..3 {
        momentum[c] =
            extrapolate_in_inverse_radius(tail.iter().map(|s| (s.radius, s.momentum[c])), order)?;
    }
    let p2 = momentum.iter().map(|p| p * p).sum::<f64>();
    let valid_mass = energy * energy >= p2;
    let mass = (energy * energy - p2).max(0.0).sqrt();
    Ok(AdmResult {
        energy,
        momentum,
        momentum_norm: p2.sqrt(),
        mass,
        valid_mass,
        shells,
        extrapolation_order: order,
    })
}

/// Solve for `f(0)` in the model `f(u) = f0 + c_1 u + ... + c_order u^order`
/// with `u = 1/r`, using exactly `order + 1` samples.
pub(crate) fn extrapolate_in_inverse_radius(
    samples: impl Iterator<Item = (f64, f64)>,
    order: usize,
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples.collect();
    assert_eq!(pts.len(), order + 1);
    let n = order + 1;
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    for (row, (r, v)) in pts.iter().enumerate() {
        let u = 1.0 / r;
        for col in 0..n {
            a[(row, col)] = u.powi(col as i32);
        }
        b[row] = *v;
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidArgument("degenerate extrapolation system".into()))?;
    Ok(sol[0])
}

// ---------------------------------------------------------------------------
// sampled grids

/// Cartesian samples of `(g, k)`; node `(ix, iy, iz)` sits at
/// `origin + (ix hx, iy hy, iz hz)` and is stored at
/// `(ix * ny + iy) * nz + iz`.
#[derive(Debug, Clone)]
pub struct SampledGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub decay_rate: Option<f64>,
    pub g: Vec<Mat3>,
    pub k: Vec<Mat3>,
}

impl SampledGrid {
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    pub fn node_position(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
            self.origin[2] + iz as f64 * self.spacing[2],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims[0] * self.dims[1] * self.dims[2];
        if self.dims.iter().any(|&d| d < 5) {
            return Err(Error::BadGrid("each axis needs at least 5 samples".into()));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::BadGrid("spacings must be positive".into()));
        }
        if self.g.len() != n || self.k.len() != n {
            return Err(Error::BadGrid(format!(
                "expected {n} samples, got g: {}, k: {}",
                self.g.len(),
                self.k.len()
            )));
        }
        for (idx, g) in self.g.iter().enumerate() {
            if g.determinant() <= 0.0 {
                return Err(Error::BadGrid(format!(
                    "metric sample {idx} is not positive definite"
                )));
            }
        }
        Ok(())
    }

    /// Sample a catalog data set onto a grid (used to exercise the
    /// finite-difference path against closed forms).
    pub fn from_catalog(
        ids: &InitialDataSet,
        origin: [f64; 3],
        spacing: [f64; 3],
        dims: [usize; 3],
        decay_rate: Option<f64>,
    ) -> Result<SampledGrid> {
        let mut g = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        let mut k = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for ix in 0..dims[0] {
            for iy in 0..dims[1] {
                for iz in 0..dims[2] {
                    let x = [
                        origin[0] + ix as f64 * spacing[0],
                        origin[1] + iy as f64 * spacing[1],
                        origin[2] + iz as f64 * spacing[2],
                    ];
                    let mj = ids.metric_jet(&x)?;
                    let kj = ids.curvature_jet(&x)?;
                    g.push(mj.g);
                    k.push(kj.k);
                }
            }
        }
        let grid = SampledGrid { dims, spacing, origin, decay_rate, g, k };
        grid.validate()?;
        Ok(grid)
    }

    /// Build a grid from closures (for synthetic data in tests and scenes).
    pub fn from_fields(
        origin: [f64; 3],
        spacing: [f64; 3],
        dims: [usize; 3],
        mut metric: impl FnMut(&[f64; 3]) -> Mat3,
        mut curv: impl FnMut(&[f64; 3]) -> Mat3,
    ) -> Result<SampledGrid> {
        let mut g = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        let mut k = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for ix in 0..dims[0] {
            for iy in 0..dims[1] {
                for iz in 0..dims[2] {
                    let x = [
                        origin[0] + ix as f64 * spacing[0],
                        origin[1] + iy as f64 * spacing[1],
                        origin[2] + iz as f64 * spacing[2],
                    ];
                    g.push(metric(&x));
                    k.push(curv(&x));
                }
            }
        }
        let grid = SampledGrid { dims, spacing, origin, decay_rate: None, g, k };
        grid.validate()?;
        Ok(grid)
    }

    fn node_of(&self, x: &[f64; 3]) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let f = (x[d] - self.origin[d]) / self.spacing[d];
            let i = f.round();
            if (f - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.dims[d] {
                return None;
            }
            idx[d] = i as usize;
        }
        Some(idx)
    }

    fn check_on_node(&self, x: &[f64; 3]) -> Result<()> {
        match self.node_of(x) {
            Some(idx) if self.is_interior(idx) => Ok(()),
            Some(_) => Err(Error::BadRegion(format!(
                "point ({}, {}, {}) is within the two-cell stencil margin of the sample boundary",
                x[0], x[1], x[2]
            ))),
            None => Err(Error::BadRegion(format!(
                "point ({}, {}, {}) does not coincide with a sample node",
                x[0], x[1], x[2]
            ))),
        }
    }

    fn is_interior(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|d| idx[d] >= 2 && idx[d] + 2 < self.dims[d])
    }

    fn contains_interior(&self, x: &[f64; 3]) -> bool {
        self.node_of(x).map(|i| self.is_interior(i)).unwrap_or(false)
    }

    pub fn interior_points(&self) -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        for ix in 2..self.dims[0] - 2 {
            for iy in 2..self.dims[1] - 2 {
                for iz in 2..self.dims[2] - 2 {
                    pts.push(self.node_position(ix, iy, iz));
                }
            }
        }
        pts
    }

    fn metric_jet_at(&self, x: &[f64; 3]) -> Result<MetricJet> {
        let idx = self
            .node_of(x)
            .filter(|i| self.is_interior(*i))
            .ok_or_else(|| Error::BadRegion("jet requested off the sampled interior".into()))?;
        Ok(self.fd_metric_jet(idx))
    }

    fn curvature_jet_at(&self, x: &[f64; 3]) -> Result<CurvatureJet> {
        let idx = self
            .node_of(x)
            .filter(|i| self.is_interior(*i))
            .ok_or_else(|| Error::BadRegion("jet requested off the sampled interior".into()))?;
        Ok(self.fd_curvature_jet(idx))
    }

    fn sample_g(&self, i: [isize; 3]) -> &Mat3 {
        &self.g[self.index(i[0] as usize, i[1] as usize, i[2] as usize)]
    }

    fn sample_k(&self, i: [isize; 3]) -> &Mat3 {
        &self.k[self.index(i[0] as usize, i[1] as usize, i[2] as usize)]
    }

    fn fd_metric_jet(&self, idx: [usize; 3]) -> MetricJet {
        let base = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
        let g = *self.sample_g(base);
        let mut dg = [Mat3::zeros(); 3];
        let mut d2g = [[Mat3::zeros(); 3]; 3];
        for axis in 0..3 {
            let h = self.spacing[axis];
            let fetch = |s: isize| {
                let mut i = base;
                i[axis] += s;
                *self.sample_g(i)
            };
            dg[axis] =
                (fetch(-2) - 8.0 * fetch(-1) + 8.0 * fetch(1) - fetch(2)) / (12.0 * h);
            d2g[axis][axis] = (-fetch(-2) + 16.0 * fetch(-1) - 30.0 * g + 16.0 * fetch(1)
                - fetch(2))
                / (12.0 * h * h);
        }
        // Mixed second derivatives: cross of two fourth-order first stencils.
        let w = [1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];
        let off = [-2isize, -1, 1, 2];
        for a in 0..3 {
            for b in (a + 1)..3 {
                let mut acc = Mat3::zeros();
                for (sa, wa) in off.iter().zip(&w) {
                    for (sb, wb) in off.iter().zip(&w) {
                        let mut i = base;
                        i[a] += sa;
                        i[b] += sb;
                        acc += *self.sample_g(i) * (wa * wb);
                    }
                }
                acc /= self.spacing[a] * self.spacing[b];
                d2g[a][b] = acc;
                d2g[b][a] = acc;
            }
        }
        MetricJet { g, dg, d2g }
    }

    fn fd_curvature_jet(&self, idx: [usize; 3]) -> CurvatureJet {
        let base = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
        let k = *self.sample_k(base);
        let mut dk = [Mat3::zeros(); 3];
        for axis in 0..3 {
            let h = self.spacing[axis];
            let fetch = |s: isize| {
                let mut i = base;
                i[axis] += s;
                *self.sample_k(i)
            };
            dk[axis] =
                (fetch(-2) - 8.0 * fetch(-1) + 8.0 * fetch(1) - fetch(2)) / (12.0 * h);
        }
        CurvatureJet { k, dk }
    }

    // -- text serialization -------------------------------------------------

    /// Self-describing text format: a header with dims/spacing/origin/decay,
    /// then one line of 12 numbers per node (`g` then `k`, upper triangles)
    /// in storage order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qlm-grid 1");
        let _ = writeln!(s, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2]);
        let _ = writeln!(
            s,
            "spacing {:.17e} {:.17e} {:.17e}",
            self.spacing[0], self.spacing[1], self.spacing[2]
        );
        let _ = writeln!(
            s,
            "origin {:.17e} {:.17e} {:.17e}",
            self.origin[0], self.origin[1], self.origin[2]
        );
        match self.decay_rate {
            Some(q) => {
                let _ = writeln!(s, "decay {q:.17e}");
            }
            None => {
                let _ = writeln!(s, "decay none");
            }
        }
        for idx in 0..self.g.len() {
            let g = &self.g[idx];
            let k = &self.k[idx];
            let _ = writeln!(
                s,
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                g[(0, 0)], g[(0, 1)], g[(0, 2)], g[(1, 1)], g[(1, 2)], g[(2, 2)],
                k[(0, 0)], k[(0, 1)], k[(0, 2)], k[(1, 1)], k[(1, 2)], k[(2, 2)]
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SampledGrid> {
        let mut lines = text.lines().enumerate();
        let mut expect = |tag: &str| -> Result<(usize, String)> {
            for (no, line) in lines.by_ref() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                if let Some(rest) = line.strip_prefix(tag) {
                    return Ok((no + 1, rest.trim().to_string()));
                }
                return Err(Error::GridFile {
                    line: no + 1,
                    message: format!("expected `{tag}`, found `{line}`"),
                });
            }
            Err(Error::GridFile { line: 0, message: format!("missing `{tag}` header line") })
        };
        let (line_no, version) = expect("qlm-grid")?;
        if version != "1" {
            return Err(Error::GridFile {
                line: line_no,
                message: format!("unsupported grid version `{version}`"),
            });
        }
        let parse3 = |line_no: usize, body: &str| -> Result<[f64; 3]> {
            let vals: Vec<f64> = body
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::GridFile { line: line_no, message: e.to_string() })?;
            if vals.len() != 3 {
                return Err(Error::GridFile {
                    line: line_no,
                    message: format!("expected 3 values, found {}", vals.len()),
                });
            }
            Ok([vals[0], vals[1], vals[2]])
        };
        let (no, body) = expect("dims")?;
        let dims_f = parse3(no, &body)?;
        let dims = [dims_f[0] as usize, dims_f[1] as usize, dims_f[2] as usize];
        let (no, body) = expect("spacing")?;
        let spacing = parse3(no, &body)?;
        let (no, body) = expect("origin")?;
        let origin = parse3(no, &body)?;
        let (no, body) = expect("decay")?;
        let decay_rate = if body == "none" {
            None
        } else {
            Some(body.parse::<f64>().map_err(|e| Error::GridFile {
                line: no,
                message: e.to_string(),
            })?)
        };
        let n = dims[0] * dims[1] * dims[2];
        let mut g = Vec::with_capacity(n);
        let mut k = Vec::with_capacity(n);
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::GridFile { line: no + 1, message: e.to_string() })?;
            if vals.len() != 12 {
                return Err(Error::GridFile {
                    line: no + 1,
                    message: format!("expected 12 components per node, found {}", vals.len()),
                });
            }
            let sym = |v: &[f64]| {
                Mat3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5])
            };
            g.push(sym(&vals[0..6]));
            k.push(sym(&vals[6..12]));
        }
        if g.len() != n {
            return Err(Error::GridFile {
                line: 0,
                message: format!("expected {n} node lines, found {}", g.len()),
            });
        }
        let grid = SampledGrid { dims, spacing, origin, decay_rate, g, k };
        grid.validate()?;
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn catalog_registry_validates_names_and_parameters() {
        assert!(build_catalog_data("flat", &map(&[])).is_ok());
        assert!(build_catalog_data("schwarzschild_slice", &map(&[("m", 1.0)])).is_ok());
        assert!(build_catalog_data("cmc_hyperboloid", &map(&[("a", 2.0)])).is_ok());
        assert!(matches!(
            build_catalog_data("kerr", &map(&[])),
            Err(Error::UnknownCatalog(_))
        ));
        assert!(build_catalog_data("schwarzschild_slice", &map(&[("m", -1.0)])).is_err());
        assert!(build_catalog_data("flat", &map(&[("m", 1.0)])).is_err());
    }

    #[test]
    fn schwarzschild_metric_matches_radial_closed_form() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        // At x = (4, 0, 0) the radial-radial component is (1 - 2m/r)^{-1} = 2.
        let jet = ids.metric_jet(&[4.0, 0.0, 0.0]).unwrap();
        assert!((jet.g[(0, 0)] - 2.0).abs() < 1e-14, "g_rr = {}", jet.g[(0, 0)]);
        assert!((jet.g[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(jet.g[(0, 1)].abs() < 1e-14);
        // Off-axis: tangential directions are Euclidean.
        let p = [3.0 / 5.0 * 4.0, 4.0 / 5.0 * 4.0, 0.0];
        let jet = ids.metric_jet(&p).unwrap();
        let tangent = Vec3::new(-p[1], p[0], 0.0).normalize();
        let val = (jet.g * tangent).dot(&tangent);
        assert!((val - 1.0).abs() < 1e-13, "tangential metric {val}");
    }

    #[test]
    fn schwarzschild_chart_excludes_horizon() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        assert!(matches!(
            ids.metric_jet(&[1.5, 0.0, 0.0]),
            Err(Error::OutsideChart { .. })
        ));
    }

    #[test]
    fn hyperboloid_has_constant_negative_curvature_and_cmc_trace() {
        for a in [1.0, 2.5] {
            let ids = InitialDataSet::cmc_hyperboloid(a).unwrap();
            for p in [[0.3, -0.2, 0.5], [2.0, 1.0, -0.7], [0.0, 0.0, 0.0]] {
                let geom = point_geometry(&ids.metric_jet(&p).unwrap()).unwrap();
                let want = -6.0 / (a * a);
                assert!(
                    (geom.scalar_curvature - want).abs() < 1e-10,
                    "R at {p:?}: {} vs {want}",
                    geom.scalar_curvature
                );
                let c = constraint_at(&geom, &ids.curvature_jet(&p).unwrap());
                assert!((c.trace_k - 3.0 / a).abs() < 1e-11, "tr k = {}", c.trace_k);
                // Conjugate momentum trace identity: tr π = -2 tr k.
                assert!(
                    (c.trace_pi + 2.0 * c.trace_k).abs() < 1e-11,
                    "tr π = {} vs {}",
                    c.trace_pi,
                    -2.0 * c.trace_k
                );
            }
        }
    }

    #[test]
    fn catalog_constraints_vanish() {
        // flat and schwarzschild are vacuum time-symmetric; the hyperboloid
        // is vacuum with μ = ½(-6 + 9 - 3)/a² = 0.
        let shell = Region::Shell {
            center: [0.0; 3],
            r_min: 3.0,
            r_max: 5.0,
            shape: [3, 6, 8],
        };
        for ids in [
            InitialDataSet::flat(),
            InitialDataSet::schwarzschild_slice(1.0).unwrap(),
            InitialDataSet::cmc_hyperboloid(1.0).unwrap(),
        ] {
            let fields = constraint_fields(&ids, &shell).unwrap();
            assert!(
                fields.max_abs_mu() < 1e-9,
                "{}: max |μ| = {}",
                ids.label(),
                fields.max_abs_mu()
            );
            assert!(
                fields.max_j_norm() < 1e-9,
                "{}: max |J| = {}",
                ids.label(),
                fields.max_j_norm()
            );
        }
    }

    #[test]
    fn dec_margin_is_zero_on_catalog_vacuum_and_negative_on_boosted_slab() {
        let shell = Region::Shell { center: [0.0; 3], r_min: 0.5, r_max: 1.5, shape: [3, 4, 6] };
        let fields = constraint_fields(&InitialDataSet::cmc_hyperboloid(1.0).unwrap(), &shell).unwrap();
        let report = dec_check(&fields, 1e-8);
        assert!(report.margin_min.abs() < 1e-8, "hyperboloid margin {}", report.margin_min);
        assert!(report.violations.is_empty());

        // k = diag(c, 0, 0) on flat g with c = x_2: μ = 0 but
        // J_2 = ∂_2 π_22 = -1, so μ - |J| = -1 everywhere.
        let grid = SampledGrid::from_fields(
            [-1.0; 3],
            [0.25; 3],
            [9, 9, 9],
            |_| Mat3::identity(),
            |x| Mat3::new(x[1], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        )
        .unwrap();
        let ids = InitialDataSet::from_samples(grid).unwrap();
        let fields = constraint_fields(&ids, &Region::SampledInterior).unwrap();
        let report = dec_check(&fields, 1e-8);
        assert!(
            (report.margin_min + 1.0).abs() < 1e-9,
            "slab margin {} (want -1)",
            report.margin_min
        );
        assert_eq!(report.violations.len(), fields.len(), "every node violates");
    }

    #[test]
    fn sampled_fd_constraints_converge_at_fourth_order() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let err_at = |h: f64, n: usize| -> f64 {
            let grid = SampledGrid::from_catalog(
                &ids,
                [3.0, 3.0, 3.0],
                [h, h, h],
                [n, n, n],
                Some(1.0),
            )
            .unwrap();
            let sampled = InitialDataSet::from_samples(grid).unwrap();
            let fields = constraint_fields(&sampled, &Region::SampledInterior).unwrap();
            fields.max_abs_mu()
        };
        let coarse = err_at(0.2, 9);
        let fine = err_at(0.1, 13); // same interior physical points and beyond
        assert!(coarse > 1e-12, "coarse error should be visible, got {coarse}");
        let ratio = coarse / fine;
        assert!(ratio >= 8.0, "fourth-order stencils should gain >= 8x, got {ratio:.2}");
    }

    #[test]
    fn adm_recovers_schwarzschild_mass_and_zero_momentum() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let res = adm_energy_momentum(&ids, &[20.0, 40.0, 80.0], &AdmOptions::default()).unwrap();
        assert!((res.energy - 1.0).abs() < 2e-2, "E = {}", res.energy);
        assert!(res.momentum_norm < 1e-10, "|P| = {}", res.momentum_norm);
        assert!(res.valid_mass);
        assert!((res.mass - res.energy).abs() < 1e-12);
        // Per-shell values converge to m from above like m·r/(r-2m).
        for s in &res.shells {
            let want = s.radius / (s.radius - 2.0);
            assert!((s.energy - want).abs() < 1e-10, "shell {}: {}", s.radius, s.energy);
        }
    }

    #[test]
    fn adm_rejects_non_asymptotically_flat_data() {
        let ids = InitialDataSet::cmc_hyperboloid(1.0).unwrap();
        assert!(matches!(
            adm_energy_momentum(&ids, &[20.0, 40.0, 80.0], &AdmOptions::default()),
            Err(Error::NotAsymptoticallyFlat(_))
        ));
    }

    #[test]
    fn adm_needs_three_shells() {
        let ids = InitialDataSet::flat();
        assert!(matches!(
            adm_energy_momentum(&ids, &[20.0, 40.0], &AdmOptions::default()),
            Err(Error::TooFewRadii { .. })
        ));
    }

    #[test]
    fn flat_adm_is_zero() {
        let res =
            adm_energy_momentum(&InitialDataSet::flat(), &[10.0, 20.0, 40.0], &AdmOptions::default())
                .unwrap();
        assert!(res.energy.abs() < 1e-14);
        assert!(res.momentum_norm < 1e-14);
    }

    #[test]
    fn grid_text_roundtrip_preserves_samples() {
        let ids = InitialDataSet::cmc_hyperboloid(1.3).unwrap();
        let grid =
            SampledGrid::from_catalog(&ids, [-0.6; 3], [0.3; 3], [5, 5, 5], None).unwrap();
        let text = grid.to_text();
        let back = SampledGrid::from_text(&text).unwrap();
        assert_eq!(back.dims, grid.dims);
        for idx in 0..grid.g.len() {
            assert_eq!(back.g[idx], grid.g[idx], "g sample {idx}");
            assert_eq!(back.k[idx], grid.k[idx], "k sample {idx}");
        }
    }

    #[test]
    fn grid_parser_reports_line_numbers() {
        let err = SampledGrid::from_text("qlm-grid 1\ndims 5 5 nope\n").unwrap_err();
        match err {
            Error::GridFile { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn decay_estimate_matches_schwarzschild_falloff() {
        // |g - δ| on distant shells behaves like 2m/r.
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        for r in [50.0, 100.0] {
            let jet = ids.metric_jet(&[r, 0.0, 0.0]).unwrap();
            let dev = (jet.g - Mat3::identity()).norm();
            let expect = 2.0 / (r - 2.0);
            assert!((dev - expect).abs() < 0.2 * expect, "deviation {dev} at r = {r}");
        }
    }
}
