//! Closed 2-surfaces in an initial data set and their extrinsic geometry.
//!
//! A surface is a map from the product grid on `S²` into the chart. Tangent
//! vectors come from closed forms (coordinate spheres) or from a spherical
//! harmonic fit of sampled positions. The outward unit normal is computed
//! pointwise from the ambient metric; its surface derivatives are taken with
//! the grid's sixth-order stencils, so mean curvature converges at sixth
//! order under refinement.
//!
//! Sign conventions: `H = γ^{ab} g(∇_{e_a} ν, e_b)` with `ν` outward, so the
//! round sphere of radius `r` in flat space has `H = 2/r > 0`. Null
//! expansions are `θ_± = H ± tr_Σ k`.

use crate::algebra::{pairwise_sum, Mat3, Sym2, Vec3};
use crate::error::{Error, Result};
use crate::harmonics::{Deriv, SphereBasis};
use crate::initial_data::{point_geometry, InitialDataSet};
use crate::sphere::SphereGrid;

/// Discrete surface: node positions and tangent vectors on a sphere grid.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub grid: SphereGrid,
    pub pos: Vec<Vec3>,
    pub e_theta: Vec<Vec3>,
    pub e_phi: Vec<Vec3>,
    label: String,
}

impl SurfaceMesh {
    /// Coordinate sphere `x = center + r n̂(θ, φ)` with analytic tangents.
    pub fn coordinate_sphere(center: [f64; 3], radius: f64, grid: SphereGrid) -> Result<SurfaceMesh> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coordinate sphere needs radius > 0, got {radius}"
            )));
        }
        let n = grid.node_count();
        let mut pos = Vec::with_capacity(n);
        let mut e_theta = Vec::with_capacity(n);
        let mut e_phi = Vec::with_capacity(n);
        let c = Vec3::new(center[0], center[1], center[2]);
        for i in 0..grid.n_theta {
            let (st, ct) = (grid.sin_theta[i], grid.cos_theta[i]);
            for j in 0..grid.n_phi {
                let (sp, cp) = grid.phi[j].sin_cos();
                let nh = Vec3::new(st * cp, st * sp, ct);
                pos.push(c + radius * nh);
                e_theta.push(radius * Vec3::new(ct * cp, ct * sp, -st));
                e_phi.push(radius * Vec3::new(-st * sp, st * cp, 0.0));
            }
        }
        Ok(SurfaceMesh {
            grid,
            pos,
            e_theta,
            e_phi,
            label: format!("sphere(r={radius}, c=({}, {}, {}))", center[0], center[1], center[2]),
        })
    }

    /// Build a mesh from positions sampled at the grid nodes. Components are
    /// fit in the spherical harmonic basis (degree `n_theta - 2`) and
    /// tangents are synthesized from the fit; `fit_tol` bounds the allowed
    /// pointwise fit residual relative to the surface scale.
    pub fn from_parametrization_samples(
        grid: SphereGrid,
        pos: Vec<Vec3>,
        fit_tol: f64,
    ) -> Result<SurfaceMesh> {
        if pos.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "expected {} position samples, got {}",
                grid.node_count(),
                pos.len()
            )));
        }
        let l_max = grid.n_theta - 2;
        let basis = SphereBasis::new(&grid, l_max);
        let n = grid.node_count();
        let mut comp = vec![vec![0.0; n]; 3];
        for (i, p) in pos.iter().enumerate() {
            comp[0][i] = p.x;
            comp[1][i] = p.y;
            comp[2][i] = p.z;
        }
        let scale = pos.iter().map(|p| p.norm()).fold(0.0f64, f64::max).max(1e-300);
        let mut fitted = vec![Vec::new(); 3];
        let mut dt = vec![Vec::new(); 3];
        let mut dp = vec![Vec::new(); 3];
        for c in 0..3 {
            let coeffs = basis.analyze(&grid, &comp[c]);
            let back = basis.synthesize(&coeffs, Deriv::Val);
            let residual = back
                .iter()
                .zip(&comp[c])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if residual > fit_tol * scale {
                return Err(Error::InvalidArgument(format!(
                    "position samples are not resolved by the grid: component {c} fit residual \
                     {residual:.3e} exceeds {:.3e}",
                    fit_tol * scale
                )));
            }
            fitted[c] = back;
            dt[c] = basis.synthesize(&coeffs, Deriv::Dt);
            dp[c] = basis.synthesize(&coeffs, Deriv::Dp);
        }
        let mut out_pos = Vec::with_capacity(n);
        let mut e_theta = Vec::with_capacity(n);
        let mut e_phi = Vec::with_capacity(n);
        for i in 0..n {
            out_pos.push(Vec3::new(fitted[0][i], fitted[1][i], fitted[2][i]));
            e_theta.push(Vec3::new(dt[0][i], dt[1][i], dt[2][i]));
            e_phi.push(Vec3::new(dp[0][i], dp[1][i], dp[2][i]));
        }
        Ok(SurfaceMesh {
            grid,
            pos: out_pos,
            e_theta,
            e_phi,
            label: "parametrized".into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Euclidean centroid of the node positions (area-unweighted).
    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        for p in &self.pos {
            c += p;
        }
        c / self.pos.len() as f64
    }
}

/// Pointwise extrinsic geometry of a surface inside an initial data set.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    pub mesh: SurfaceMesh,
    /// Induced metric `γ_ab` per node.
    pub gamma: Vec<Sym2>,
    pub sqrt_det: Vec<f64>,
    /// Outward unit normal (index raised).
    pub normal: Vec<Vec3>,
    /// Mean curvature `H` with respect to the outward normal.
    pub mean_curvature: Vec<f64>,
    /// Tangential slice `k(e_a, e_b)` per node.
    pub k_tangential: Vec<Sym2>,
    /// `tr_Σ k = γ^{ab} k(e_a, e_b)`.
    pub surface_trace_k: Vec<f64>,
    /// `ω_a = k(ν, e_a)` covector components `(θ, φ)`.
    pub omega: Vec<[f64; 2]>,
    /// `k(ν, ν)`.
    pub k_nn: Vec<f64>,
    /// `π(ν, ν) = k(ν, ν) - tr_g k`; equals `-tr_Σ k` identically.
    pub pi_nu_nu: Vec<f64>,
    /// `|π(ν, ·)|_g = sqrt((tr_Σ k)² + γ^{ab} ω_a ω_b)`.
    pub pi_nu_norm: Vec<f64>,
    /// Ambient metric at each node (for pairings like `⟨X, ν⟩_g`).
    pub ambient_metric: Vec<Mat3>,
    pub area: f64,
}

/// Extrinsic data of `mesh` inside `ids`. Requires closed-form jets, i.e.
/// catalog data; sampled sets cannot provide jets at arbitrary surface nodes.
pub fn extrinsic_data(ids: &InitialDataSet, mesh: SurfaceMesh) -> Result<ExtrinsicData> {
    if !ids.has_analytic_jets() {
        return Err(Error::InvalidArgument(
            "surface operators need jets at arbitrary points; supply catalog data".into(),
        ));
    }
    let n = mesh.grid.node_count();
    let centroid = mesh.centroid();
    let scale = mesh
        .pos
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0f64, f64::max);
    // A surface whose extent is at rounding level relative to where it sits
    // is a numerical point; nothing downstream is meaningful.
    if !(scale > 1e-12 * centroid.norm()) || !(scale > 1e-150) {
        return Err(Error::DegenerateSurface {
            node: 0,
            reason: "surface extent vanishes relative to its position".into(),
        });
    }
    let mut gamma = Vec::with_capacity(n);
    let mut sqrt_det = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut orient = 0.0f64;

    struct NodeAmbient {
        g: Mat3,
        gamma_sym: [[[f64; 3]; 3]; 3],
        k: Mat3,
    }
    let mut ambient = Vec::with_capacity(n);

    for i in 0..n {
        let x = [mesh.pos[i].x, mesh.pos[i].y, mesh.pos[i].z];
        let mj = ids.metric_jet(&x)?;
        let kj = ids.curvature_jet(&x)?;
        let geom = point_geometry(&mj)?;
        let (et, ep) = (mesh.e_theta[i], mesh.e_phi[i]);
        let ind = Sym2 {
            tt: (geom.g * et).dot(&et),
            tp: (geom.g * et).dot(&ep),
            pp: (geom.g * ep).dot(&ep),
        };
        let det = ind.det();
        // det γ scales like (surface scale)⁴; compare against that, not 0,
        // so numerically collapsed frames are caught too.
        if !(det > (1e-10 * scale * scale).powi(2)) {
            return Err(Error::DegenerateSurface {
                node: i,
                reason: format!("induced metric determinant {det:.3e} vanishes at surface scale"),
            });
        }
        let cross = et.cross(&ep);
        if cross.norm() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateSurface {
                node: i,
                reason: "tangent vectors are parallel".into(),
            });
        }
        // The Euclidean cross product gives the covariant normal components;
        // raise with g^{-1} and normalize in g.
        let raised = geom.g_inv * cross;
        let len = (geom.g * raised).dot(&raised).sqrt();
        let nu = raised / len;
        orient += nu.dot(&(mesh.pos[i] - centroid));
        gamma.push(ind);
        sqrt_det.push(det.sqrt());
        normal.push(nu);
        ambient.push(NodeAmbient { g: geom.g, gamma_sym: geom.gamma, k: kj.k });
    }
    let flip = if orient < 0.0 { -1.0 } else { 1.0 };
    let mut mixed = false;
    for (i, nu) in normal.iter_mut().enumerate() {
        *nu *= flip;
        if nu.dot(&(mesh.pos[i] - centroid)) < 0.0 {
            mixed = true;
        }
    }
    if mixed {
        return Err(Error::DegenerateSurface {
            node: 0,
            reason: "normal orientation is inconsistent across the surface".into(),
        });
    }

    // differentiate the normal componentwise on the grid
    let comp: Vec<Vec<f64>> = (0..3)
        .map(|c| normal.iter().map(|v| v[c]).collect::<Vec<f64>>())
        .collect();
    let mut dnu_t = vec![Vec3::zeros(); n];
    let mut dnu_p = vec![Vec3::zeros(); n];
    for c in 0..3 {
        let (dt, dp) = mesh.grid.fd_partials(&comp[c]);
        for i in 0..n {
            dnu_t[i][c] = dt[i];
            dnu_p[i][c] = dp[i];
        }
    }

    let mut mean_curvature = Vec::with_capacity(n);
    let mut k_tangential = Vec::with_capacity(n);
    let mut surface_trace_k = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut k_nn = Vec::with_capacity(n);
    let mut pi_nu_nu = Vec::with_capacity(n);
    let mut pi_nu_norm = Vec::with_capacity(n);
    for i in 0..n {
        let amb = &ambient[i];
        let nu = normal[i];
        let (et, ep) = (mesh.e_theta[i], mesh.e_phi[i]);
        let inv = gamma[i].inverse();
        // ∇_{e_a} ν with the ambient connection
        let covariant = |da: &Vec3, ea: &Vec3| -> Vec3 {
            let mut out = *da;
            for kk in 0..3 {
                let mut acc = 0.0;
                for jj in 0..3 {
                    for ll in 0..3 {
                        acc += amb.gamma_sym[kk][jj][ll] * ea[jj] * nu[ll];
                    }
                }
                out[kk] += acc;
            }
            out
        };
        let grad_t = covariant(&dnu_t[i], &et);
        let grad_p = covariant(&dnu_p[i], &ep);
        let m_tt = (amb.g * grad_t).dot(&et);
        let m_tp = (amb.g * grad_t).dot(&ep);
        let m_pt = (amb.g * grad_p).dot(&et);
        let m_pp = (amb.g * grad_p).dot(&ep);
        let h = inv.tt * m_tt + inv.tp * (m_tp + m_pt) + inv.pp * m_pp;
        let k_tt = (amb.k * et).dot(&et);
        let k_tp = (amb.k * et).dot(&ep);
        let k_pp = (amb.k * ep).dot(&ep);
        let trk = inv.tt * k_tt + 2.0 * inv.tp * k_tp + inv.pp * k_pp;
        let w = [(amb.k * nu).dot(&et), (amb.k * nu).dot(&ep)];
        let knn = (amb.k * nu).dot(&nu);
        let omega_norm2 = inv.tt * w[0] * w[0] + 2.0 * inv.tp * w[0] * w[1] + inv.pp * w[1] * w[1];
        mean_curvature.push(h);
        k_tangential.push(Sym2 { tt: k_tt, tp: k_tp, pp: k_pp });
        surface_trace_k.push(trk);
        omega.push(w);
        k_nn.push(knn);
        pi_nu_nu.push(knn - (trk + knn));
        pi_nu_norm.push((trk * trk + omega_norm2).max(0.0).sqrt());
    }

    let ambient_metric: Vec<Mat3> = ambient.iter().map(|a| a.g).collect();
    let mut data = ExtrinsicData {
        mesh,
        gamma,
        sqrt_det,
        normal,
        mean_curvature,
        k_tangential,
        surface_trace_k,
        omega,
        k_nn,
        pi_nu_nu,
        pi_nu_norm,
        ambient_metric,
        area: 0.0,
    };
    data.area = data.integrate_ones();
    Ok(data)
}

impl ExtrinsicData {
    fn integrate_ones(&self) -> f64 {
        let ones = vec![1.0; self.mesh.grid.node_count()];
        self.integrate(&ones)
    }

    /// `∫ f dσ` with the induced area element.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        assert_eq!(field.len(), self.mesh.grid.node_count());
        let grid = &self.mesh.grid;
        let mut terms = Vec::with_capacity(field.len());
        for i in 0..grid.n_theta {
            for j in 0..grid.n_phi {
                let idx = grid.idx(i, j);
                terms.push(field[idx] * self.sqrt_det[idx] * grid.area_weight(i));
            }
        }
        pairwise_sum(&terms)
    }

    /// Area radius `sqrt(area / 4π)`.
    pub fn area_radius(&self) -> f64 {
        (self.area / (4.0 * std::f64::consts::PI)).sqrt()
    }

    /// Spacelike mean curvature vector norm `sqrt(H² - (tr_Σ k)²)` per node;
    /// `None` where the vector fails to be spacelike within `-slack`.
    pub fn mean_curvature_vector_norm(&self, slack: f64) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.mean_curvature.len());
        for i in 0..self.mean_curvature.len() {
            let h = self.mean_curvature[i];
            let t = self.surface_trace_k[i];
            let q = h * h - t * t;
            if h <= 0.0 || q < -slack {
                return None;
            }
            out.push(q.max(0.0).sqrt());
        }
        Some(out)
    }
}

/// Null expansions `θ_± = H ± tr_Σ k` per node.
#[derive(Debug, Clone)]
pub struct Expansions {
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrappingClass {
    /// `θ_+ > band` everywhere.
    Untrapped,
    /// `|θ_+| ≤ band` everywhere.
    MarginallyOuterTrapped,
    /// `θ_+ < -band` everywhere.
    OuterTrapped,
    /// sign of `θ_+` varies across the surface
    Mixed,
}

pub fn null_expansions(data: &ExtrinsicData) -> Expansions {
    let n = data.mean_curvature.len();
    let mut theta_plus = Vec::with_capacity(n);
    let mut theta_minus = Vec::with_capacity(n);
    for i in 0..n {
        theta_plus.push(data.mean_curvature[i] + data.surface_trace_k[i]);
        theta_minus.push(data.mean_curvature[i] - data.surface_trace_k[i]);
    }
    Expansions { theta_plus, theta_minus }
}

impl Expansions {
    pub fn max_abs_theta_plus(&self) -> f64 {
        self.theta_plus.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Classify with a tolerance band on `θ_+`.
    pub fn classify(&self, band: f64) -> TrappingClass {
        assert!(band >= 0.0, "tolerance band must be nonnegative");
        let max = self.theta_plus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.theta_plus.iter().cloned().fold(f64::INFINITY, f64::min);
        if max.abs().max(min.abs()) <= band {
            TrappingClass::MarginallyOuterTrapped
        } else if min > band {
            TrappingClass::Untrapped
        } else if max < -band {
            TrappingClass::OuterTrapped
        } else {
            TrappingClass::Mixed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SphereGrid;

    fn sphere_data(ids: &InitialDataSet, r: f64, nt: usize) -> ExtrinsicData {
        let grid = SphereGrid::new(nt, 2 * nt).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.0; 3], r, grid).unwrap();
        extrinsic_data(ids, mesh).unwrap()
    }

    fn max_err(vals: &[f64], want: f64) -> f64 {
        vals.iter().map(|v| (v - want).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn flat_sphere_round_geometry() {
        let data = sphere_data(&InitialDataSet::flat(), 2.0, 32);
        assert!(max_err(&data.mean_curvature, 1.0) < 1e-4, "H err {}", max_err(&data.mean_curvature, 1.0));
        assert!((data.area - 16.0 * std::f64::consts::PI).abs() < 1e-10);
        assert!(max_err(&data.surface_trace_k, 0.0) < 1e-14);
        assert!(max_err(&data.pi_nu_norm, 0.0) < 1e-14);
        // normal is radial
        for (i, nu) in data.normal.iter().enumerate() {
            let radial = data.mesh.pos[i].normalize();
            assert!((nu - radial).norm() < 1e-12);
        }
    }

    #[test]
    fn off_center_sphere_is_unchanged() {
        let grid = SphereGrid::new(16, 32).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.4, -0.2, 0.9], 1.5, grid).unwrap();
        let data = extrinsic_data(&InitialDataSet::flat(), mesh).unwrap();
        assert!(max_err(&data.mean_curvature, 2.0 / 1.5) < 1e-3);
    }

    #[test]
    fn schwarzschild_sphere_mean_curvature_oracle() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        for r in [3.0, 4.0, 10.0] {
            let data = sphere_data(&ids, r, 32);
            let want = (2.0 / r) * (1.0f64 - 2.0 / r).sqrt();
            let err = max_err(&data.mean_curvature, want);
            assert!(err < 1e-4, "r = {r}: H error {err}");
            // induced metric is the round sphere of area radius r
            assert!((data.area_radius() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_curvature_converges_at_sixth_order() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let want = (2.0f64 / 3.0) * (1.0f64 - 2.0 / 3.0).sqrt();
        let coarse = max_err(&sphere_data(&ids, 3.0, 16).mean_curvature, want);
        let fine = max_err(&sphere_data(&ids, 3.0, 32).mean_curvature, want);
        assert!(coarse > 1e-13, "coarse error too small to measure: {coarse}");
        let ratio = coarse / fine;
        assert!(ratio >= 8.0, "refinement gain {ratio:.2} below sixth-order expectation");
    }

    #[test]
    fn hyperboloid_sphere_exact_traces_and_curvature() {
        let a = 1.0;
        let ids = InitialDataSet::cmc_hyperboloid(a).unwrap();
        let r = 2.0 / 5.0f64.sqrt();
        let data = sphere_data(&ids, r, 24);
        // k = g/a restricted to the surface: exact identities independent of FD
        assert!(max_err(&data.surface_trace_k, 2.0 / a) < 1e-12);
        assert!(max_err(&data.k_nn, 1.0 / a) < 1e-12);
        for w in &data.omega {
            assert!(w[0].abs() < 1e-12 && w[1].abs() < 1e-12);
        }
        // π(ν,ν) = -tr_Σ k
        for i in 0..data.pi_nu_nu.len() {
            assert!((data.pi_nu_nu[i] + data.surface_trace_k[i]).abs() < 1e-12);
        }
        assert!(max_err(&data.pi_nu_norm, 2.0 / a) < 1e-12);
        // H = (2/r) sqrt(1 + r²/a²); at r = 2/√5 this is exactly 3
        assert!(max_err(&data.mean_curvature, 3.0) < 1e-4);
        // spacelike mean curvature vector norm √(H² - trk²) = √5
        let norm = data.mean_curvature_vector_norm(1e-10).unwrap();
        assert!(max_err(&norm, 5.0f64.sqrt()) < 2e-4);
    }

    #[test]
    fn expansions_on_hyperboloid_sphere() {
        let ids = InitialDataSet::cmc_hyperboloid(1.0).unwrap();
        let data = sphere_data(&ids, 1.0, 24);
        let exp = null_expansions(&data);
        let h = 2.0 * 2.0f64.sqrt();
        assert!(max_err(&exp.theta_plus, h + 2.0) < 1e-4);
        assert!(max_err(&exp.theta_minus, h - 2.0) < 1e-4);
        assert_eq!(exp.classify(1e-3), TrappingClass::Untrapped);
    }

    #[test]
    fn near_horizon_sphere_is_marginally_trapped_within_band() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let data = sphere_data(&ids, 2.0 + 1e-8, 16);
        let exp = null_expansions(&data);
        // H ≈ (2/r)√(1 - 2m/r) ≈ 7.1e-5 just outside the horizon; k = 0
        // makes the surface marginal in both null directions.
        assert!(exp.max_abs_theta_plus() < 1e-3);
        assert_eq!(exp.classify(1e-3), TrappingClass::MarginallyOuterTrapped);
        assert!(max_err(&exp.theta_minus, 0.0) < 1e-3);
        // Well outside the horizon the same band reports untrapped.
        let outside = null_expansions(&sphere_data(&ids, 3.0, 16));
        assert_eq!(outside.classify(1e-3), TrappingClass::Untrapped);
    }

    #[test]
    fn ellipsoid_mean_curvature_matches_closed_form() {
        let (a, b, c) = (1.2, 1.0, 0.8);
        let worst_for = |nt: usize| -> f64 {
            let grid = SphereGrid::new(nt, 2 * nt).unwrap();
            let mut pos = Vec::with_capacity(grid.node_count());
            for i in 0..grid.n_theta {
                for j in 0..grid.n_phi {
                    let (st, ct) = (grid.sin_theta[i], grid.cos_theta[i]);
                    let (sp, cp) = grid.phi[j].sin_cos();
                    pos.push(Vec3::new(a * st * cp, b * st * sp, c * ct));
                }
            }
            let mesh = SurfaceMesh::from_parametrization_samples(grid, pos, 1e-10).unwrap();
            let data = extrinsic_data(&InitialDataSet::flat(), mesh).unwrap();
            let mut worst = 0.0f64;
            for (i, p) in data.mesh.pos.iter().enumerate() {
                let p2 = p.x * p.x / (a * a * a * a)
                    + p.y * p.y / (b * b * b * b)
                    + p.z * p.z / (c * c * c * c);
                let q = p.x * p.x / a.powi(6) + p.y * p.y / b.powi(6) + p.z * p.z / c.powi(6);
                let want =
                    (p2 * (1.0 / (a * a) + 1.0 / (b * b) + 1.0 / (c * c)) - q) / p2.powf(1.5);
                worst = worst.max((data.mean_curvature[i] - want).abs());
            }
            worst
        };
        let coarse = worst_for(24);
        let fine = worst_for(48);
        assert!(coarse < 5e-3, "ellipsoid H error {coarse}");
        assert!(fine < 5e-4, "refined ellipsoid H error {fine}");
        assert!(coarse / fine > 8.0, "H refinement ratio {:.2}", coarse / fine);
    }

    #[test]
    fn parametrization_fit_rejects_aliased_samples() {
        let grid = SphereGrid::new(8, 16).unwrap();
        let mut pos = Vec::with_capacity(grid.node_count());
        for i in 0..grid.n_theta {
            for j in 0..grid.n_phi {
                let (st, ct) = (grid.sin_theta[i], grid.cos_theta[i]);
                let (sp, cp) = grid.phi[j].sin_cos();
                let r = 1.0 + 0.3 * (8.0 * grid.phi[j]).cos() * st.powi(8);
                pos.push(Vec3::new(r * st * cp, r * st * sp, r * ct));
            }
        }
        assert!(matches!(
            SurfaceMesh::from_parametrization_samples(grid, pos, 1e-8),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn collapsed_samples_are_degenerate() {
        let grid = SphereGrid::new(8, 16).unwrap();
        let pos = vec![Vec3::new(1.0, 2.0, 3.0); grid.node_count()];
        let mesh = SurfaceMesh::from_parametrization_samples(grid, pos, 1e-6).unwrap();
        assert!(matches!(
            extrinsic_data(&InitialDataSet::flat(), mesh),
            Err(Error::DegenerateSurface { .. })
        ));
    }

    #[test]
    fn surface_must_stay_inside_the_chart() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let grid = SphereGrid::new(8, 16).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.0; 3], 1.5, grid).unwrap();
        assert!(matches!(extrinsic_data(&ids, mesh), Err(Error::OutsideChart { .. })));
    }
}
