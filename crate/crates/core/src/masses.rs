//! Quasilocal mass functionals on closed 2-surfaces.
//!
//! All functionals compare physical boundary data against the image of the
//! isometric embedding of the induced metric:
//!
//! * Brown-York: `∫ (H₀ - H) dσ`;
//! * Kijowski-Liu-Yau: `∫ (H₀ - sqrt(H² - (tr_Σ k)²)) dσ`, defined when
//!   `H > |tr_Σ k|`;
//! * the `W` functional: `∫ (H₀ - (H - |π(ν,·)|)) dσ`, recorded with the
//!   boundary hypothesis `H > |π(ν,·)|`;
//! * Wang-Yau at time function `τ`: the reference term embeds
//!   `γ̂ = γ + dτ⊗dτ` and integrates its flat mean curvature against the
//!   hatted area element, the physical term minimizes the generalized mean
//!   curvature over boost gauges;
//! * the `X`-modified energy: `∫ (H₀ - (H - ⟨X, ν⟩_g)) dσ` for an auxiliary
//!   vector field, with interior hypothesis `R + 2 div X - 2|X|² ≥ 0` and
//!   boundary hypothesis `H > ⟨X, ν⟩`.
//!
//! Raw values are the integrals themselves; normalized values divide by
//! `8π`, so a round sphere in the Schwarzschild slice reports the familiar
//! `r (1 - sqrt(1 - 2m/r))`. Inadmissible integrands are clamped (never
//! extended past the hypothesis) and flagged.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::algebra::{pairwise_sum, Mat3, Sym2, Vec3};
use crate::embedding::{embed_convex, EmbeddingOptions, EmbeddingResult};
use crate::error::{Error, Result};
use crate::harmonics::{Deriv, SphereBasis};
use crate::initial_data::{point_geometry, region_points, InitialDataSet, Region};
use crate::surface::{extrinsic_data, ExtrinsicData, SurfaceMesh};
use crate::MASS_NORMALIZATION;

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub embedding: EmbeddingOptions,
}

impl AnalysisOptions {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Surface data bundled with the embedding of its induced metric.
pub struct SurfaceAnalysis {
    pub data: ExtrinsicData,
    pub embedding: EmbeddingResult,
    /// Reference mean curvature `H₀` at the grid nodes.
    pub reference_h: Vec<f64>,
}

/// Extrinsic data plus isometric embedding of the induced metric.
pub fn analyze_surface(
    ids: &InitialDataSet,
    mesh: SurfaceMesh,
    opts: &AnalysisOptions,
) -> Result<SurfaceAnalysis> {
    let data = extrinsic_data(ids, mesh)?;
    let embedding = embed_convex(&data.mesh.grid, &data.gamma, &opts.embedding)?;
    let reference_h = embedding.mean_curvature();
    Ok(SurfaceAnalysis { data, embedding, reference_h })
}

#[derive(Debug, Clone, Copy)]
pub struct MassReport {
    /// The surface integral itself.
    pub raw: f64,
    /// `raw / 8π`.
    pub normalized: f64,
    pub area: f64,
    /// Whether the defining hypothesis holds pointwise.
    pub admissible: bool,
    /// Minimum of the hypothesis margin over the surface.
    pub hypothesis_margin: f64,
    /// Number of nodes where the integrand had to be clamped.
    pub clamped_nodes: usize,
}

fn report(analysis: &SurfaceAnalysis, integrand: &[f64], margin: f64, clamped: usize) -> MassReport {
    let raw = analysis.data.integrate(integrand);
    MassReport {
        raw,
        normalized: raw / MASS_NORMALIZATION,
        area: analysis.data.area,
        admissible: margin > 0.0,
        hypothesis_margin: margin,
        clamped_nodes: clamped,
    }
}

/// Brown-York mass `∫ (H₀ - H) dσ`; the classical hypothesis is `H > 0`.
pub fn brown_york(analysis: &SurfaceAnalysis) -> MassReport {
    let n = analysis.data.mean_curvature.len();
    let mut integrand = Vec::with_capacity(n);
    let mut margin = f64::INFINITY;
    for i in 0..n {
        let h = analysis.data.mean_curvature[i];
        integrand.push(analysis.reference_h[i] - h);
        margin = margin.min(h);
    }
    report(analysis, &integrand, margin, 0)
}

/// Kijowski-Liu-Yau mass `∫ (H₀ - sqrt(H² - (tr_Σ k)²)) dσ`;
/// hypothesis `H > |tr_Σ k|`. Nodes violating it contribute the clamped
/// value `sqrt(max(H² - (tr_Σ k)², 0))` and are counted.
pub fn kijowski_liu_yau(analysis: &SurfaceAnalysis) -> MassReport {
    let n = analysis.data.mean_curvature.len();
    let mut integrand = Vec::with_capacity(n);
    let mut margin = f64::INFINITY;
    let mut clamped = 0;
    for i in 0..n {
        let h = analysis.data.mean_curvature[i];
        let t = analysis.data.surface_trace_k[i];
        margin = margin.min(h - t.abs());
        let q = h * h - t * t;
        if q < 0.0 {
            clamped += 1;
        }
        integrand.push(analysis.reference_h[i] - q.max(0.0).sqrt());
    }
    report(analysis, &integrand, margin, clamped)
}

/// The `W` functional `∫ (H₀ - (H - |π(ν,·)|)) dσ`;
/// hypothesis `H > |π(ν,·)|`.
pub fn w_mass(analysis: &SurfaceAnalysis) -> MassReport {
    let n = analysis.data.mean_curvature.len();
    let mut integrand = Vec::with_capacity(n);
    let mut margin = f64::INFINITY;
    for i in 0..n {
        let h = analysis.data.mean_curvature[i];
        let p = analysis.data.pi_nu_norm[i];
        margin = margin.min(h - p);
        integrand.push(analysis.reference_h[i] - (h - p));
    }
    report(analysis, &integrand, margin, 0)
}

// ---------------------------------------------------------------------------
// Wang-Yau energy

#[derive(Debug, Clone)]
pub struct WangYauOptions {
    /// Harmonic degree of the gauge ansatz; default `n_theta / 2`.
    pub gauge_l_max: Option<usize>,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub embedding: EmbeddingOptions,
}

impl Default for WangYauOptions {
    fn default() -> Self {
        WangYauOptions {
            gauge_l_max: None,
            newton_tol: 1e-11,
            newton_max: 60,
            embedding: EmbeddingOptions::default(),
        }
    }
}

impl WangYauOptions {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone)]
pub struct WangYauReport {
    pub raw: f64,
    pub normalized: f64,
    pub reference_term: f64,
    pub physical_term: f64,
    /// `min (H - |tr_Σ k|)` over the surface.
    pub hypothesis_margin: f64,
    pub gauge_coeffs: Vec<f64>,
    pub newton_iterations: usize,
    pub embedding_residual: f64,
    pub embedding_iterations: usize,
    /// Minimum Gauss curvature of `γ̂ = γ + dτ⊗dτ`.
    pub weyl_k_min: f64,
}

/// Wang-Yau quasilocal energy at time function `τ`, given as real spherical
/// harmonic coefficients (length `(L+1)²`) on the analysis grid. At `τ = 0`
/// this reduces to the Kijowski-Liu-Yau mass.
pub fn wang_yau_energy(
    analysis: &SurfaceAnalysis,
    tau: &[f64],
    opts: &WangYauOptions,
) -> Result<WangYauReport> {
    let grid = &analysis.data.mesh.grid;
    let n = grid.node_count();
    let l_tau = degree_from_len(tau.len())?;
    if l_tau > grid.n_theta - 2 {
        return Err(Error::InvalidArgument(format!(
            "time function degree {l_tau} exceeds the grid band limit {}",
            grid.n_theta - 2
        )));
    }
    let tau_basis = SphereBasis::new(grid, l_tau);
    let tau_t = tau_basis.synthesize(tau, Deriv::Dt);
    let tau_p = tau_basis.synthesize(tau, Deriv::Dp);

    // contravariant gradient and slope factor
    let mut u_t = vec![0.0; n];
    let mut u_p = vec![0.0; n];
    let mut slope = vec![0.0; n];
    for i in 0..n {
        let inv = analysis.data.gamma[i].inverse();
        u_t[i] = inv.tt * tau_t[i] + inv.tp * tau_p[i];
        u_p[i] = inv.tp * tau_t[i] + inv.pp * tau_p[i];
        let grad2 = tau_t[i] * u_t[i] + tau_p[i] * u_p[i];
        slope[i] = (1.0 + grad2).sqrt();
    }

    // reference term: embed the hatted metric and integrate its flat mean
    // curvature against the hatted area element
    let gamma_hat: Vec<Sym2> = (0..n)
        .map(|i| Sym2 {
            tt: analysis.data.gamma[i].tt + tau_t[i] * tau_t[i],
            tp: analysis.data.gamma[i].tp + tau_t[i] * tau_p[i],
            pp: analysis.data.gamma[i].pp + tau_p[i] * tau_p[i],
        })
        .collect();
    let weyl = crate::embedding::weyl_condition(grid, &gamma_hat);
    if !weyl.passes {
        return Err(Error::WeylConditionFailed { min_k: weyl.k_min, node: weyl.k_min_node });
    }
    let mut embed_opts = opts.embedding.clone();
    embed_opts.skip_weyl_check = true;
    let hat = embed_convex(grid, &gamma_hat, &embed_opts)?;
    let h0_hat = hat.mean_curvature();
    let mut ref_terms = Vec::with_capacity(n);
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let idx = grid.idx(i, j);
            ref_terms.push(h0_hat[idx] * gamma_hat[idx].det().sqrt() * grid.area_weight(i));
        }
    }
    let reference_term = pairwise_sum(&ref_terms);

    // physical term: minimize the generalized mean curvature over gauges
    let h = &analysis.data.mean_curvature;
    let trk = &analysis.data.surface_trace_k;
    let mut margin = f64::INFINITY;
    for i in 0..n {
        margin = margin.min(h[i] - trk[i].abs());
    }
    if margin <= 0.0 {
        return Err(Error::BoundaryHypothesis { min_value: margin });
    }
    let mut w = vec![0.0; n];
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let idx = grid.idx(i, j);
            w[idx] = analysis.data.sqrt_det[idx] * grid.area_weight(i);
        }
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut lin_const = vec![0.0; n];
    for i in 0..n {
        a[i] = slope[i] * h[i];
        b[i] = slope[i] * trk[i];
        lin_const[i] = analysis.data.omega[i][0] * u_t[i] + analysis.data.omega[i][1] * u_p[i];
    }
    let gauge = minimize_gauge(grid, opts, &w, &a, &b, &u_t, &u_p)?;
    let mut phys_terms = Vec::with_capacity(n);
    for i in 0..n {
        phys_terms.push(
            w[i] * (a[i] * gauge.phi[i].cosh()
                + b[i] * gauge.phi[i].sinh()
                + gauge.phi_t[i] * u_t[i]
                + gauge.phi_p[i] * u_p[i]
                + lin_const[i]),
        );
    }
    let physical_term = pairwise_sum(&phys_terms);

    let raw = reference_term - physical_term;
    Ok(WangYauReport {
        raw,
        normalized: raw / MASS_NORMALIZATION,
        reference_term,
        physical_term,
        hypothesis_margin: margin,
        gauge_coeffs: gauge.coeffs,
        newton_iterations: gauge.iterations,
        embedding_residual: hat.residual_max,
        embedding_iterations: hat.iterations,
        weyl_k_min: weyl.k_min,
    })
}

fn degree_from_len(len: usize) -> Result<usize> {
    let mut l = 0usize;
    loop {
        let count = (l + 1) * (l + 1);
        if count == len {
            return Ok(l);
        }
        if count > len {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector length {len} is not a perfect square (L+1)²"
            )));
        }
        l += 1;
    }
}

struct GaugeSolution {
    coeffs: Vec<f64>,
    phi: Vec<f64>,
    phi_t: Vec<f64>,
    phi_p: Vec<f64>,
    iterations: usize,
}

/// Newton minimization of
/// `F[φ] = Σ w (a cosh φ + b sinh φ + φ_t u^t + φ_p u^p)` over harmonic
/// coefficients of `φ`. Strictly convex when `a > |b|` pointwise.
fn minimize_gauge(
    grid: &crate::sphere::SphereGrid,
    opts: &WangYauOptions,
    w: &[f64],
    a: &[f64],
    b: &[f64],
    u_t: &[f64],
    u_p: &[f64],
) -> Result<GaugeSolution> {
    let n = grid.node_count();
    let l_gauge = opts
        .gauge_l_max
        .unwrap_or(grid.n_theta / 2)
        .min(grid.n_theta - 2);
    let basis = SphereBasis::new(grid, l_gauge);
    let n_coeff = (l_gauge + 1) * (l_gauge + 1);

    // dense node-by-coefficient tables for values and derivatives
    let mut bv = DMatrix::<f64>::zeros(n, n_coeff);
    let mut bt = DMatrix::<f64>::zeros(n, n_coeff);
    let mut bp = DMatrix::<f64>::zeros(n, n_coeff);
    let mut unit = vec![0.0; n_coeff];
    for k in 0..n_coeff {
        unit[k] = 1.0;
        let v = basis.synthesize(&unit, Deriv::Val);
        let t = basis.synthesize(&unit, Deriv::Dt);
        let p = basis.synthesize(&unit, Deriv::Dp);
        for i in 0..n {
            bv[(i, k)] = v[i];
            bt[(i, k)] = t[i];
            bp[(i, k)] = p[i];
        }
        unit[k] = 0.0;
    }

    // constant part of the gradient from the linear term
    let mut g_lin = DVector::<f64>::zeros(n_coeff);
    for k in 0..n_coeff {
        let mut acc = 0.0;
        for i in 0..n {
            acc += w[i] * (bt[(i, k)] * u_t[i] + bp[(i, k)] * u_p[i]);
        }
        g_lin[k] = acc;
    }

    // pointwise optimal boost, projected onto the basis, as initial guess
    let mut phi0 = vec![0.0; n];
    for i in 0..n {
        let x = (-b[i] / a[i]).clamp(-0.999_999, 0.999_999);
        phi0[i] = x.atanh();
    }
    let mut coeffs = DVector::<f64>::from_vec(basis.analyze(grid, &phi0));

    let objective = |c: &DVector<f64>| -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let phi = (&bv * c).data.as_vec().clone();
        let phi_t = (&bt * c).data.as_vec().clone();
        let phi_p = (&bp * c).data.as_vec().clone();
        let mut terms = Vec::with_capacity(n);
        for i in 0..n {
            terms.push(
                w[i] * (a[i] * phi[i].cosh()
                    + b[i] * phi[i].sinh()
                    + phi_t[i] * u_t[i]
                    + phi_p[i] * u_p[i]),
            );
        }
        (pairwise_sum(&terms), phi, phi_t, phi_p)
    };

    let scale: f64 = (0..n).map(|i| w[i] * a[i]).sum();
    let (mut f_val, mut phi, mut phi_t, mut phi_p) = objective(&coeffs);
    let mut iterations = 0;
    for _ in 0..opts.newton_max {
        // gradient
        let mut grad = g_lin.clone();
        for k in 0..n_coeff {
            let mut acc = 0.0;
            for i in 0..n {
                acc += w[i] * (a[i] * phi[i].sinh() + b[i] * phi[i].cosh()) * bv[(i, k)];
            }
            grad[k] += acc;
        }
        if grad.norm() <= opts.newton_tol * scale.max(1.0) {
            break;
        }
        iterations += 1;
        // Hessian = Bᵀ diag(w (a cosh + b sinh)) B, positive definite
        let mut d = DVector::<f64>::zeros(n);
        for i in 0..n {
            d[i] = w[i] * (a[i] * phi[i].cosh() + b[i] * phi[i].sinh());
        }
        let mut bw = bv.clone();
        for i in 0..n {
            for k in 0..n_coeff {
                bw[(i, k)] *= d[i];
            }
        }
        let hess = bv.transpose() * &bw;
        let chol = Cholesky::new(hess).ok_or_else(|| Error::InvalidArgument(
            "gauge Hessian lost positive definiteness".into(),
        ))?;
        let step = chol.solve(&(-&grad));
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..30 {
            let trial = &coeffs + t * &step;
            let (f_trial, p, pt, pp) = objective(&trial);
            if f_trial <= f_val {
                coeffs = trial;
                f_val = f_trial;
                phi = p;
                phi_t = pt;
                phi_p = pp;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    Ok(GaugeSolution {
        coeffs: coeffs.data.as_vec().clone(),
        phi,
        phi_t,
        phi_p,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// X-modified energy

/// Auxiliary vector fields with closed-form Jacobians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorField {
    Zero,
    /// `X = factor · x` (position field).
    Radial { factor: f64 },
    Constant { v: [f64; 3] },
}

impl VectorField {
    pub fn value(&self, x: &[f64; 3]) -> Vec3 {
        match *self {
            VectorField::Zero => Vec3::zeros(),
            VectorField::Radial { factor } => factor * Vec3::new(x[0], x[1], x[2]),
            VectorField::Constant { v } => Vec3::new(v[0], v[1], v[2]),
        }
    }

    /// `∂_j X^i` as a matrix with row `i`, column `j`.
    pub fn jacobian(&self, _x: &[f64; 3]) -> Mat3 {
        match *self {
            VectorField::Zero | VectorField::Constant { .. } => Mat3::zeros(),
            VectorField::Radial { factor } => Mat3::identity() * factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct XModifiedReport {
    pub raw: f64,
    pub normalized: f64,
    pub area: f64,
    /// `min (H - ⟨X, ν⟩_g)` over the surface.
    pub boundary_margin: f64,
    pub admissible: bool,
}

/// `∫ (H₀ - (H - ⟨X, ν⟩_g)) dσ` with the boundary hypothesis
/// `H > ⟨X, ν⟩_g`.
pub fn x_modified_energy(analysis: &SurfaceAnalysis, field: &VectorField) -> XModifiedReport {
    let n = analysis.data.mean_curvature.len();
    let mut integrand = Vec::with_capacity(n);
    let mut margin = f64::INFINITY;
    for i in 0..n {
        let p = analysis.data.mesh.pos[i];
        let x = field.value(&[p.x, p.y, p.z]);
        let pairing = (analysis.data.ambient_metric[i] * x).dot(&analysis.data.normal[i]);
        let h = analysis.data.mean_curvature[i];
        margin = margin.min(h - pairing);
        integrand.push(analysis.reference_h[i] - (h - pairing));
    }
    let raw = analysis.data.integrate(&integrand);
    XModifiedReport {
        raw,
        normalized: raw / MASS_NORMALIZATION,
        area: analysis.data.area,
        boundary_margin: margin,
        admissible: margin > 0.0,
    }
}

#[derive(Debug, Clone)]
pub struct XHypothesesReport {
    /// `min (R + 2 div X - 2 |X|²)` over the region.
    pub interior_margin_min: f64,
    pub worst_point: [f64; 3],
    pub satisfied: bool,
}

/// Interior hypothesis `R + 2 div_g X - 2 |X|_g² ≥ 0` scanned over a region.
pub fn vector_field_hypotheses(
    ids: &InitialDataSet,
    region: &Region,
    field: &VectorField,
) -> Result<XHypothesesReport> {
    let points = region_points(ids, region)?;
    let mut min_margin = f64::INFINITY;
    let mut worst = points[0];
    for p in &points {
        let jet = ids.metric_jet(p)?;
        let geom = point_geometry(&jet)?;
        let x = field.value(p);
        let jac = field.jacobian(p);
        let mut div = 0.0;
        for i in 0..3 {
            div += jac[(i, i)];
            for l in 0..3 {
                div += geom.gamma[i][i][l] * x[l];
            }
        }
        let norm2 = (geom.g * x).dot(&x);
        let margin = geom.scalar_curvature + 2.0 * div - 2.0 * norm2;
        if margin < min_margin {
            min_margin = margin;
            worst = *p;
        }
    }
    Ok(XHypothesesReport {
        interior_margin_min: min_margin,
        worst_point: worst,
        satisfied: min_margin >= 0.0,
    })
}
