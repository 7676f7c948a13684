//! Rotationally symmetric quasispherical extensions.
//!
//! The exterior metric ansatz is `u(r)² dr² + r² dΩ²` on `r ≥ r₀`. Scalar
//! flatness reduces to `u' = u(1 - u²)/(2r)`, whose conserved quantity is
//! the Misner-Sharp parameter `m̃ = (r/2)(1 - u⁻²)`; the solver evaluates
//! the conservation law directly, so leaves carry no integration error.
//!
//! Along the flow the leaf quantity `Q(r) = r (1 - 1/u(r))` equals the
//! Brown-York integral of the leaf divided by `8π`. Its derivative obeys
//! `dQ/dr = -(s - 1)²/(2s)` with `s = 1/u`, manifestly nonpositive, and
//! `Q(r) → m̃` as `r → ∞`: the extension energy.
//!
//! `shi_tam_boundary_u` seeds the flow from surface data: pointwise
//! `u = H₀ / (H - ⟨X, ν⟩)` and the flux mean
//! `ū = ∫H₀ dσ / ∫(H - ⟨X, ν⟩) dσ`, which makes the seeded `Q(r₀)` agree
//! with the (X-modified) Brown-York value whenever the leaf is round.

use crate::error::{Error, Result};
use crate::initial_data::extrapolate_in_inverse_radius;
use crate::masses::{SurfaceAnalysis, VectorField};

#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Number of leaves, log-spaced from `r₀` to `r₀ · r_max_factor`.
    pub n_leaves: usize,
    pub r_max_factor: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { n_leaves: 200, r_max_factor: 1e4 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowLeaf {
    pub radius: f64,
    pub u: f64,
    /// `Q(r) = r (1 - 1/u)`.
    pub q: f64,
    /// Leaf mean curvature `2/(u r)`.
    pub mean_curvature: f64,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub leaves: Vec<FlowLeaf>,
    /// Conserved parameter; also the `r → ∞` limit of `Q`.
    pub m_tilde: f64,
    pub r0: f64,
    pub u0: f64,
}

/// Solve the rotationally symmetric extension seeded with `u(r₀) = u₀`.
pub fn solve_rotsym_extension(r0: f64, u0: f64, opts: &FlowOptions) -> Result<FlowTrajectory> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidParameter(format!("flow needs r₀ > 0, got {r0}")));
    }
    if !(u0 > 0.0) || !u0.is_finite() {
        return Err(Error::InvalidParameter(format!("flow needs u₀ > 0, got {u0}")));
    }
    if opts.n_leaves < 3 {
        return Err(Error::InvalidParameter("flow needs at least 3 leaves".into()));
    }
    if !(opts.r_max_factor > 1.0) {
        return Err(Error::InvalidParameter("r_max_factor must exceed 1".into()));
    }
    let m_tilde = 0.5 * r0 * (1.0 - 1.0 / (u0 * u0));
    let mut traj = FlowTrajectory { leaves: Vec::with_capacity(opts.n_leaves), m_tilde, r0, u0 };
    let log_step = opts.r_max_factor.ln() / (opts.n_leaves - 1) as f64;
    for i in 0..opts.n_leaves {
        let r = r0 * (log_step * i as f64).exp();
        traj.leaves.push(traj.leaf_at(r));
    }
    Ok(traj)
}

impl FlowTrajectory {
    /// `u(r)` from the conservation law; exact for `r ≥ r₀`.
    pub fn u_at(&self, r: f64) -> f64 {
        (1.0 - 2.0 * self.m_tilde / r).powf(-0.5)
    }

    pub fn q_at(&self, r: f64) -> f64 {
        r * (1.0 - 1.0 / self.u_at(r))
    }

    fn leaf_at(&self, r: f64) -> FlowLeaf {
        let u = self.u_at(r);
        FlowLeaf {
            radius: r,
            u,
            q: r * (1.0 - 1.0 / u),
            mean_curvature: 2.0 / (u * r),
            area: 4.0 * std::f64::consts::PI * r * r,
        }
    }

    /// Largest increase of `Q` between consecutive leaves (nonpositive up to
    /// roundoff for a valid trajectory).
    pub fn max_q_increase(&self) -> f64 {
        self.leaves
            .windows(2)
            .map(|w| w[1].q - w[0].q)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct QDerivativeReport {
    pub max_defect: f64,
    pub defects: Vec<f64>,
    pub step_rel: f64,
}

/// Check `dQ/dr = -(s-1)²/(2s)`, `s = 1/u`, at every leaf: the numeric
/// derivative uses a small relative step on the conservation-law solution.
pub fn q_derivative_check(traj: &FlowTrajectory, step_rel: f64) -> QDerivativeReport {
    assert!(step_rel > 0.0 && step_rel < 1e-2, "step must be small and positive");
    let mut defects = Vec::with_capacity(traj.leaves.len());
    let mut max_defect = 0.0f64;
    for leaf in &traj.leaves {
        let r = leaf.radius;
        let h = step_rel * r;
        let dq = (traj.q_at(r + h) - traj.q_at(r - h)) / (2.0 * h);
        let s = 1.0 / leaf.u;
        let rhs = -(s - 1.0) * (s - 1.0) / (2.0 * s);
        let defect = (dq - rhs).abs();
        defects.push(defect);
        max_defect = max_defect.max(defect);
    }
    QDerivativeReport { max_defect, defects, step_rel }
}

/// Extrapolate the leaf values `Q(r)` to `r → ∞` (Richardson in `1/r` over
/// the last three leaves). For the exact trajectory this reproduces `m̃` up
/// to the neglected `1/r³` tail.
pub fn extension_energy(traj: &FlowTrajectory) -> Result<f64> {
    if traj.leaves.len() < 3 {
        return Err(Error::TooFewRadii { needed: 3, got: traj.leaves.len() });
    }
    let tail = &traj.leaves[traj.leaves.len() - 3..];
    extrapolate_in_inverse_radius(tail.iter().map(|l| (l.radius, l.q)), 2)
}

#[derive(Debug, Clone)]
pub struct BoundaryU {
    /// Pointwise `H₀ / (H - ⟨X, ν⟩)`.
    pub values: Vec<f64>,
    /// `∫ H₀ dσ / ∫ (H - ⟨X, ν⟩) dσ`.
    pub flux_mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Boundary seed for the extension flow. Fails with `FlowHypothesis` when
/// the modified mean curvature `H - ⟨X, ν⟩` is not strictly positive.
pub fn shi_tam_boundary_u(analysis: &SurfaceAnalysis, field: &VectorField) -> Result<BoundaryU> {
    let n = analysis.data.mean_curvature.len();
    let mut values = Vec::with_capacity(n);
    let mut denom_field = Vec::with_capacity(n);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        let p = analysis.data.mesh.pos[i];
        let x = field.value(&[p.x, p.y, p.z]);
        let pairing = (analysis.data.ambient_metric[i] * x).dot(&analysis.data.normal[i]);
        let denom = analysis.data.mean_curvature[i] - pairing;
        if !(denom > 0.0) {
            return Err(Error::FlowHypothesis(format!(
                "H - <X, nu> = {denom:.6e} at node {i} is not strictly positive"
            )));
        }
        let u = analysis.reference_h[i] / denom;
        min = min.min(u);
        max = max.max(u);
        values.push(u);
        denom_field.push(denom);
    }
    let h0_flux = analysis.data.integrate(&analysis.reference_h);
    let denom_flux = analysis.data.integrate(&denom_field);
    if !(denom_flux > 0.0) {
        return Err(Error::FlowHypothesis(format!(
            "total modified mean curvature flux {denom_flux:.6e} is not positive"
        )));
    }
    Ok(BoundaryU { values, flux_mean: h0_flux / denom_flux, min, max })
}

/// Seed and run the extension flow from a surface: `r₀` is the area radius
/// and `u₀` the flux-mean boundary value.
pub fn extension_from_surface(
    analysis: &SurfaceAnalysis,
    field: &VectorField,
    opts: &FlowOptions,
) -> Result<(BoundaryU, FlowTrajectory)> {
    let boundary = shi_tam_boundary_u(analysis, field)?;
    let traj = solve_rotsym_extension(analysis.data.area_radius(), boundary.flux_mean, opts)?;
    Ok((boundary, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::InitialDataSet;
    use crate::masses::{analyze_surface, brown_york, AnalysisOptions};
    use crate::sphere::SphereGrid;
    use crate::surface::SurfaceMesh;

    #[test]
    fn closed_form_extension_energies() {
        let opts = FlowOptions::default();
        let traj = solve_rotsym_extension(1.0, 2.0, &opts).unwrap();
        assert!((traj.m_tilde - 0.375).abs() < 1e-15);
        let e = extension_energy(&traj).unwrap();
        assert!((e - 0.375).abs() < 1e-9, "extension energy {e}");

        let traj = solve_rotsym_extension(4.0, 2.0f64.sqrt(), &opts).unwrap();
        assert!((traj.m_tilde - 1.0).abs() < 1e-15);
        let e = extension_energy(&traj).unwrap();
        assert!((e - 1.0).abs() < 1e-9, "extension energy {e}");
    }

    #[test]
    fn q_is_monotone_and_satisfies_the_derivative_identity() {
        let traj = solve_rotsym_extension(1.0, 2.0, &FlowOptions::default()).unwrap();
        assert!(traj.max_q_increase() <= 1e-14, "ΔQ = {}", traj.max_q_increase());
        let report = q_derivative_check(&traj, 1e-5);
        assert!(report.max_defect < 1e-8, "defect {}", report.max_defect);
    }

    #[test]
    fn trivial_seed_gives_flat_extension() {
        let traj = solve_rotsym_extension(3.0, 1.0, &FlowOptions::default()).unwrap();
        assert_eq!(traj.m_tilde, 0.0);
        for leaf in &traj.leaves {
            assert!(leaf.q.abs() < 1e-15);
            assert!((leaf.u - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_mass_seeds_are_valid_and_monotone() {
        // u₀ < 1 corresponds to a negative Misner-Sharp parameter.
        let traj = solve_rotsym_extension(2.0, 0.8, &FlowOptions::default()).unwrap();
        assert!(traj.m_tilde < 0.0);
        assert!(traj.max_q_increase() <= 1e-14);
        let e = extension_energy(&traj).unwrap();
        assert!((e - traj.m_tilde).abs() < 1e-9);
    }

    #[test]
    fn invalid_seeds_are_rejected() {
        assert!(matches!(
            solve_rotsym_extension(-1.0, 2.0, &FlowOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            solve_rotsym_extension(1.0, 0.0, &FlowOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn schwarzschild_boundary_seed_matches_brown_york() {
        let ids = InitialDataSet::schwarzschild_slice(1.0).unwrap();
        let grid = SphereGrid::new(24, 48).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.0; 3], 4.0, grid).unwrap();
        let analysis = analyze_surface(&ids, mesh, &AnalysisOptions::new()).unwrap();
        let (boundary, traj) =
            extension_from_surface(&analysis, &VectorField::Zero, &FlowOptions::default()).unwrap();
        // exact boundary u is (1 - 2m/r)^{-1/2} = sqrt(2)
        assert!((boundary.flux_mean - 2.0f64.sqrt()).abs() < 1e-4);
        // seeded Q(r0) equals the Brown-York value
        let by = brown_york(&analysis).normalized;
        assert!(
            (traj.leaves[0].q - by).abs() < 1e-6,
            "Q(r0) = {} vs BY = {}",
            traj.leaves[0].q,
            by
        );
        // the extension energy approaches the exact exterior mass
        let e = extension_energy(&traj).unwrap();
        assert!((e - 1.0).abs() < 1e-3, "extension energy {e}");
    }

    #[test]
    fn flow_hypothesis_failure_is_reported() {
        let analysis = {
            let grid = SphereGrid::new(12, 24).unwrap();
            let mesh = SurfaceMesh::coordinate_sphere([0.0; 3], 1.0, grid).unwrap();
            analyze_surface(&InitialDataSet::flat(), mesh, &AnalysisOptions::new()).unwrap()
        };
        let field = VectorField::Radial { factor: 2.0 };
        assert!(matches!(
            shi_tam_boundary_u(&analysis, &field),
            Err(Error::FlowHypothesis(_))
        ));
    }
}
