//! Dominant-energy-shield thresholds and fill-in obstruction quantities.
//!
//! A shield is a nested family `U₀ ⊃ U₁ ⊃ U₂` in an initial data set with
//! the energy condition on all of `U₀`, a strict energy surplus on the
//! annulus `U₁ ∖ U₂`, and a mean-curvature lower bound `-Ψ(d, l)` on the
//! inner boundary, where `d = dist(∂U₂, ∂U₁)` and `l = dist(∂U₁, ∂U₀)`.
//! The threshold `Ψ` is built from `λ(d) = (n√σ/2)·tan(n√σ·d/2)` and takes
//! the distinguished value `+∞` outside its domain; infinity is a legitimate
//! threshold (the boundary condition becomes vacuous), never an error.
//!
//! Fill-in obstructions act on Bartnik boundary data `(γ, α, H, β)`. The
//! derived field `f = √((tr_Σ α)² + |β|²_γ)` is compared against `H` both
//! pointwise and in integral; thresholds are mandatory user inputs because
//! the underlying statements are existential in them.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::algebra::Sym2;
use crate::error::{Error, Result};
use crate::sphere::SphereGrid;
use crate::surface::ExtrinsicData;

fn check_shield_params(sigma: f64, n: usize, d: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "energy floor sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "shield dimension must be >= 2, got {n}"
        )));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "separation distance must be finite and >= 0, got {d}"
        )));
    }
    Ok(())
}

/// `λ(d) = (n√σ/2)·tan(n√σ·d/2)`; returns the limit value `0` for `σ = 0`.
///
/// The tangent pole at `d = π/(√σ n)` bounds the domain; at or beyond it the
/// comparison solution ceases to exist and the call fails with
/// [`Error::ShieldDomain`]. The comparison is made against the pole location
/// itself so that `d == π/(√σ n)` is out of domain at exact floating point.
pub fn lambda_of_d(sigma: f64, n: usize, d: f64) -> Result<f64> {
    check_shield_params(sigma, n, d)?;
    if sigma == 0.0 || d == 0.0 {
        return Ok(0.0);
    }
    let s = sigma.sqrt() * n as f64;
    let pole = PI / s;
    if d >= pole {
        return Err(Error::ShieldDomain(format!(
            "d = {d:.9} reaches the tangent pole pi/(sqrt(sigma) n) = {pole:.9}"
        )));
    }
    Ok(0.5 * s * (0.5 * s * d).tan())
}

/// Threshold `Ψ(d, l) = (2/n)·λ(d)/(1 − l·λ(d))` on the finite branch,
/// `+∞` when `d ≥ π/(√σ n)` or `l ≥ 1/λ(d)`.
///
/// The infinite branch is a value, not an error: it propagates through
/// comparisons (anything finite is `< ∞`) and renders the boundary condition
/// of the shield vacuous.
pub fn psi_threshold(sigma: f64, n: usize, d: f64, l: f64) -> Result<f64> {
    check_shield_params(sigma, n, d)?;
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "separation distance must be finite and >= 0, got {l}"
        )));
    }
    let lam = match lambda_of_d(sigma, n, d) {
        Ok(v) => v,
        Err(Error::ShieldDomain(_)) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    // 1/λ is +∞ when λ = 0, so the comparison below is fine there.
    if l >= 1.0 / lam {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 / n as f64) * lam / (1.0 - l * lam))
}

/// Geometry of a candidate shield: thresholds plus the sampled margins the
/// three conditions test. The distances `d`, `l` are user inputs; the record
/// does not measure them from bulk data.
#[derive(Debug, Clone)]
pub struct ShieldGeometry {
    /// Energy-density floor `σ ≥ 0` (units 1/length²).
    pub sigma: f64,
    /// Ambient dimension (3 for the catalogs here).
    pub n: usize,
    /// `dist(∂U₂, ∂U₁) ≥ 0`.
    pub d: f64,
    /// `dist(∂U₁, ∂U₀) ≥ 0`.
    pub l: f64,
    /// Field `H − |π(ν,·)|_{T∂Ū₀}` sampled on the inner boundary `∂Ū₀`.
    pub boundary_margin: Vec<f64>,
    /// `min (μ − |J|)` over `U₀`.
    pub interior_margin_u0: f64,
    /// `min (μ − |J|)` over the annulus `U₁ ∖ U₂`.
    pub interior_margin_annulus: f64,
}

/// Boundary-margin field `H − |π(ν,·)|_{TΣ}` of a surface, the quantity the
/// shield condition bounds from below by `-Ψ(d, l)`. Only the tangential
/// slice of `π(ν,·)` enters here.
pub fn boundary_margin_field(data: &ExtrinsicData) -> Vec<f64> {
    let n = data.mesh.grid.node_count();
    (0..n)
        .map(|i| {
            let inv = data.gamma[i].inverse();
            let w = data.omega[i];
            data.mean_curvature[i] - inv.pair(w, w).max(0.0).sqrt()
        })
        .collect()
}

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("infinite")
    } else if *v < 0.0 {
        s.serialize_str("-infinite")
    } else {
        s.serialize_str("nan")
    }
}

/// Outcome of [`shield_check`]: every margin is echoed so a failed condition
/// shows by how much it failed.
#[derive(Debug, Clone, Serialize)]
pub struct ShieldReport {
    pub sigma: f64,
    pub n: usize,
    pub d: f64,
    pub l: f64,
    /// `Ψ(d, l)`; may be infinite.
    #[serde(serialize_with = "serialize_extended")]
    pub psi: f64,
    /// Condition (1) margin: `min (μ − |J|)` on `U₀`.
    pub dec_margin_u0: f64,
    /// Condition (2) margin: `min (μ − |J|) − σ n (n − 1)` on `U₁ ∖ U₂`.
    pub surplus_margin_annulus: f64,
    /// Smallest value of `H − |π(ν,·)|_T` on `∂Ū₀`.
    pub boundary_min: f64,
    /// Condition (3) margin: `boundary_min + Ψ`; may be infinite.
    #[serde(serialize_with = "serialize_extended")]
    pub boundary_margin: f64,
    pub condition_dec: bool,
    pub condition_surplus: bool,
    pub condition_boundary: bool,
    pub passes: bool,
}

/// Tests the three shield conditions: (1) `μ − |J| ≥ 0` on `U₀`,
/// (2) `μ − |J| ≥ σ n (n−1)` on `U₁ ∖ U₂`, (3) `min boundary_margin > −Ψ`.
pub fn shield_check(sg: &ShieldGeometry) -> Result<ShieldReport> {
    check_shield_params(sg.sigma, sg.n, sg.d)?;
    if sg.boundary_margin.is_empty() {
        return Err(Error::InvalidArgument(
            "shield geometry carries no boundary samples".into(),
        ));
    }
    let psi = psi_threshold(sg.sigma, sg.n, sg.d, sg.l)?;
    let surplus_required = sg.sigma * (sg.n * (sg.n - 1)) as f64;
    let surplus_margin = sg.interior_margin_annulus - surplus_required;
    let boundary_min = sg
        .boundary_margin
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(*v));
    let condition_dec = sg.interior_margin_u0 >= 0.0;
    let condition_surplus = surplus_margin >= 0.0;
    let condition_boundary = boundary_min > -psi;
    Ok(ShieldReport {
        sigma: sg.sigma,
        n: sg.n,
        d: sg.d,
        l: sg.l,
        psi,
        dec_margin_u0: sg.interior_margin_u0,
        surplus_margin_annulus: surplus_margin,
        boundary_min,
        boundary_margin: boundary_min + psi,
        condition_dec,
        condition_surplus,
        condition_boundary,
        passes: condition_dec && condition_surplus && condition_boundary,
    })
}

/// Bartnik boundary data on a sphere grid: induced metric `γ`, tangential
/// second-form slice `α`, mean curvature `H`, and normal-tangential momentum
/// 1-form `β`, all in the `(∂_θ, ∂_φ)` frame.
#[derive(Debug, Clone)]
pub struct BartnikData {
    pub grid: SphereGrid,
    pub gamma: Vec<Sym2>,
    pub alpha: Vec<Sym2>,
    pub mean_curvature: Vec<f64>,
    pub beta: Vec<[f64; 2]>,
    pub label: String,
}

impl BartnikData {
    pub fn new(
        grid: SphereGrid,
        gamma: Vec<Sym2>,
        alpha: Vec<Sym2>,
        mean_curvature: Vec<f64>,
        beta: Vec<[f64; 2]>,
        label: String,
    ) -> Result<BartnikData> {
        let n = grid.node_count();
        if gamma.len() != n || alpha.len() != n || mean_curvature.len() != n || beta.len() != n {
            return Err(Error::GridMismatch(format!(
                "Bartnik fields must carry {n} samples, got gamma {} alpha {} H {} beta {}",
                gamma.len(),
                alpha.len(),
                mean_curvature.len(),
                beta.len()
            )));
        }
        for (i, g) in gamma.iter().enumerate() {
            if !(g.tt > 0.0 && g.det() > 0.0) {
                return Err(Error::DegenerateSurface {
                    node: i,
                    reason: format!(
                        "boundary metric is not positive definite (tt = {:.3e}, det = {:.3e})",
                        g.tt,
                        g.det()
                    ),
                });
            }
        }
        Ok(BartnikData { grid, gamma, alpha, mean_curvature, beta, label })
    }

    /// Boundary data induced by a surface in an initial data set: `α` is the
    /// tangential slice of `k` and `β` its normal-tangential slice `ω`.
    pub fn from_surface(data: &ExtrinsicData) -> BartnikData {
        BartnikData {
            grid: data.mesh.grid.clone(),
            gamma: data.gamma.clone(),
            alpha: data.k_tangential.clone(),
            mean_curvature: data.mean_curvature.clone(),
            beta: data.omega.clone(),
            label: data.mesh.label().to_string(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    /// Area of the boundary in the metric `γ`.
    pub fn area(&self) -> f64 {
        let sqrt_det: Vec<f64> = self.gamma.iter().map(|g| g.det().sqrt()).collect();
        let ones = vec![1.0; self.node_count()];
        self.grid.integrate(&ones, &sqrt_det)
    }

    /// Serializes to the grid text format: a header, the grid shape, then one
    /// line per node with `γ`, `α`, `H`, `β` components.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("qlm-bartnik 1\n");
        out.push_str(&format!("{} {}\n", self.grid.n_theta, self.grid.n_phi));
        out.push_str(&format!("label {}\n", self.label));
        for i in 0..self.node_count() {
            let g = self.gamma[i];
            let a = self.alpha[i];
            let b = self.beta[i];
            out.push_str(&format!(
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n",
                g.tt, g.tp, g.pp, a.tt, a.tp, a.pp, self.mean_curvature[i], b[0], b[1]
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BartnikData> {
        let fail = |line: usize, message: String| Error::GridFile { line, message };
        let mut lines = text.lines().enumerate();
        let (ln, header) = lines
            .next()
            .ok_or_else(|| fail(1, "empty file".into()))?;
        if header.trim() != "qlm-bartnik 1" {
            return Err(fail(ln + 1, format!("expected header `qlm-bartnik 1`, got `{header}`")));
        }
        let (ln, shape) = lines
            .next()
            .ok_or_else(|| fail(2, "missing grid shape line".into()))?;
        let dims: Vec<usize> = shape
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fail(ln + 1, format!("bad grid shape: {e}")))?;
        if dims.len() != 2 {
            return Err(fail(ln + 1, format!("grid shape needs 2 integers, got {}", dims.len())));
        }
        let grid = SphereGrid::new(dims[0], dims[1])?;
        let (ln, label_line) = lines
            .next()
            .ok_or_else(|| fail(3, "missing label line".into()))?;
        let label = label_line
            .strip_prefix("label")
            .ok_or_else(|| fail(ln + 1, format!("expected `label ...`, got `{label_line}`")))?
            .trim()
            .to_string();

        let n = grid.node_count();
        let mut gamma = Vec::with_capacity(n);
        let mut alpha = Vec::with_capacity(n);
        let mut mean_curvature = Vec::with_capacity(n);
        let mut beta = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| fail(n + 3, format!("expected {n} node lines, file ended early")))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| fail(ln + 1, format!("bad node value: {e}")))?;
            if vals.len() != 9 {
                return Err(fail(ln + 1, format!("node line needs 9 values, got {}", vals.len())));
            }
            gamma.push(Sym2 { tt: vals[0], tp: vals[1], pp: vals[2] });
            alpha.push(Sym2 { tt: vals[3], tp: vals[4], pp: vals[5] });
            mean_curvature.push(vals[6]);
            beta.push([vals[7], vals[8]]);
        }
        if let Some((ln, row)) = lines.next() {
            if !row.trim().is_empty() {
                return Err(fail(ln + 1, "trailing content after node lines".into()));
            }
        }
        BartnikData::new(grid, gamma, alpha, mean_curvature, beta, label)
    }

    /// High-frequency energy fraction of `α` and `β` in the spherical
    /// harmonic basis. Grid data cannot certify a Hölder class, so the tail
    /// is reported as a smoothness hint, never enforced.
    pub fn smoothness_tail(&self) -> SmoothnessTail {
        let l_max = self.grid.n_theta - 2;
        let cutoff = (2 * l_max) / 3;
        let n = self.node_count();
        let comp = |f: &dyn Fn(usize) -> f64| (0..n).map(f).collect::<Vec<f64>>();
        // Component parities follow the differentiation rules: `tt`/`pp` and
        // the φ-component of a 1-form analyze with shift 0, `tp` and the
        // θ-component with shift 1.
        let spectra: [Vec<f64>; 5] = [
            self.grid.mode_energy_spectrum(&comp(&|i| self.alpha[i].tt), 0),
            self.grid.mode_energy_spectrum(&comp(&|i| self.alpha[i].tp), 1),
            self.grid.mode_energy_spectrum(&comp(&|i| self.alpha[i].pp), 0),
            self.grid.mode_energy_spectrum(&comp(&|i| self.beta[i][0]), 1),
            self.grid.mode_energy_spectrum(&comp(&|i| self.beta[i][1]), 0),
        ];
        // A component whose whole energy is at the analysis roundoff floor of
        // the record (ω of time-symmetric data, say) has a noise-over-noise
        // tail ratio; report it as smooth instead.
        let record_energy = spectra
            .iter()
            .map(|s| s.iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        let tail_of = |spectrum: &Vec<f64>| -> f64 {
            let total: f64 = spectrum[1..].iter().sum();
            let tail: f64 = spectrum[cutoff + 1..].iter().sum();
            if total > 1e-24 * record_energy {
                tail / total
            } else {
                0.0
            }
        };
        let alpha_tail = spectra[..3].iter().map(tail_of).fold(0.0f64, f64::max);
        let beta_tail = spectra[3..].iter().map(tail_of).fold(0.0f64, f64::max);
        SmoothnessTail { l_max, cutoff, alpha_tail, beta_tail }
    }
}

/// Spectral-tail diagnostic: fraction of the non-constant `L²` energy held
/// by degrees above `cutoff`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothnessTail {
    pub l_max: usize,
    pub cutoff: usize,
    pub alpha_tail: f64,
    pub beta_tail: f64,
}

/// Derived scalar `f = √((tr_Σ α)² + |β|²_γ)` per node. When the data come
/// from a surface in an initial data set this equals the surface's
/// `|π(ν,·)|` field.
pub fn fillin_f(bd: &BartnikData) -> Result<Vec<f64>> {
    let n = bd.node_count();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let g = bd.gamma[i];
        if !(g.tt > 0.0 && g.det() > 0.0) {
            return Err(Error::DegenerateSurface {
                node: i,
                reason: format!("boundary metric determinant {:.3e} is not positive", g.det()),
            });
        }
        let inv = g.inverse();
        let tr = inv.trace_against(&bd.alpha[i]);
        let b2 = inv.pair(bd.beta[i], bd.beta[i]);
        out.push((tr * tr + b2).max(0.0).sqrt());
    }
    Ok(out)
}

/// User-supplied obstruction thresholds. There are no defaults: the
/// statements behind the report only assert that suitable constants exist.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FillInThresholds {
    /// Integral threshold `h₀` for `∫ (H − f) dμ_γ > h₀`.
    pub h0: f64,
    /// Pointwise threshold `C₀` for `H − f ≥ C₀`.
    pub c0: f64,
}

/// Obstruction quantities of a Bartnik record against supplied thresholds,
/// with margins and the unchecked assumptions echoed.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub label: String,
    /// Echo of the user-supplied `h₀`.
    pub h0: f64,
    /// Echo of the user-supplied `C₀`.
    pub c0: f64,
    pub area: f64,
    pub min_h_minus_f: f64,
    pub integral_h_minus_f: f64,
    /// `∫ (H − f) dμ_γ > h₀` under the supplied `h₀`.
    pub integral_criterion_met: bool,
    /// `H − f ≥ C₀` pointwise under the supplied `C₀`.
    pub pointwise_criterion_met: bool,
    pub min_f: f64,
    pub max_f: f64,
    pub smoothness: SmoothnessTail,
    /// The record cannot see the boundary decomposition of a candidate
    /// fill-in; its topology is assumed, not checked.
    pub assumed_boundary_topology: bool,
    /// Isotopy class of `γ` within the positive-scalar-curvature moduli is
    /// undecidable at grid scale; assumed, not checked.
    pub assumed_isotopy_class: bool,
}

/// Evaluates the computable obstruction hypotheses `∫ (H − f) dμ_γ > h₀` and
/// `H − f ≥ C₀` for the supplied thresholds.
pub fn obstruction_report(bd: &BartnikData, thresholds: FillInThresholds) -> Result<ObstructionReport> {
    if !thresholds.h0.is_finite() || !thresholds.c0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "obstruction thresholds must be finite, got h0 = {}, c0 = {}",
            thresholds.h0, thresholds.c0
        )));
    }
    let f = fillin_f(bd)?;
    let n = bd.node_count();
    let margin: Vec<f64> = (0..n).map(|i| bd.mean_curvature[i] - f[i]).collect();
    let sqrt_det: Vec<f64> = bd.gamma.iter().map(|g| g.det().sqrt()).collect();
    let integral = bd.grid.integrate(&margin, &sqrt_det);
    let area = bd.area();
    let min_margin = margin.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let (min_f, max_f) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    Ok(ObstructionReport {
        label: bd.label.clone(),
        h0: thresholds.h0,
        c0: thresholds.c0,
        area,
        min_h_minus_f: min_margin,
        integral_h_minus_f: integral,
        integral_criterion_met: integral > thresholds.h0,
        pointwise_criterion_met: min_margin >= thresholds.c0,
        min_f,
        max_f,
        smoothness: bd.smoothness_tail(),
        assumed_boundary_topology: true,
        assumed_isotopy_class: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::InitialDataSet;
    use crate::surface::{extrinsic_data, SurfaceMesh};
    use proptest::prelude::*;

    fn round_unit_sphere_data(h: f64, alpha_scale: f64) -> BartnikData {
        let grid = SphereGrid::new(12, 24).unwrap();
        let n = grid.node_count();
        let mut gamma = Vec::with_capacity(n);
        for i in 0..grid.n_theta {
            for _ in 0..grid.n_phi {
                let st = grid.sin_theta[i];
                gamma.push(Sym2 { tt: 1.0, tp: 0.0, pp: st * st });
            }
        }
        let alpha: Vec<Sym2> = gamma
            .iter()
            .map(|g| Sym2 { tt: alpha_scale * g.tt, tp: alpha_scale * g.tp, pp: alpha_scale * g.pp })
            .collect();
        BartnikData::new(
            grid,
            gamma,
            alpha,
            vec![h; n],
            vec![[0.0, 0.0]; n],
            "round unit sphere".into(),
        )
        .unwrap()
    }

    #[test]
    fn lambda_matches_closed_form_oracle() {
        let v = lambda_of_d(1.0, 3, PI / 6.0).unwrap();
        assert!((v - 1.5).abs() < 1e-12, "lambda {v}");
        assert_eq!(lambda_of_d(0.0, 3, 0.7).unwrap(), 0.0);
        assert_eq!(lambda_of_d(2.0, 3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_rejects_tangent_pole() {
        match lambda_of_d(1.0, 3, PI / 3.0) {
            Err(Error::ShieldDomain(_)) => {}
            other => panic!("expected ShieldDomain, got {other:?}"),
        }
        // Just inside the pole stays finite.
        let inside = lambda_of_d(1.0, 3, PI / 3.0 * (1.0 - 1e-9)).unwrap();
        assert!(inside.is_finite() && inside > 1e6);
    }

    #[test]
    fn psi_matches_arithmetic_oracle() {
        let v = psi_threshold(1.0, 3, PI / 6.0, 1.0 / 3.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "psi {v}");
    }

    #[test]
    fn psi_infinite_branch_boundaries_are_exact() {
        assert!(psi_threshold(1.0, 3, PI / 3.0, 0.1).unwrap().is_infinite());
        // l exactly at 1/lambda(d) belongs to the infinite branch.
        let lam = lambda_of_d(1.0, 3, PI / 6.0).unwrap();
        assert!(psi_threshold(1.0, 3, PI / 6.0, 1.0 / lam).unwrap().is_infinite());
        assert!(psi_threshold(1.0, 3, PI / 6.0, 1.0 / lam * (1.0 - 1e-12)).unwrap().is_finite());
        // d exactly at the pole likewise.
        let pole = PI / (1.0f64.sqrt() * 3.0);
        assert!(psi_threshold(1.0, 3, pole, 0.0).unwrap().is_infinite());
        // sigma = 0 keeps the finite branch for every l.
        assert_eq!(psi_threshold(0.0, 3, 5.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_vanishes_in_the_small_sigma_limit() {
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let sigma = 10f64.powi(-k);
            let v = psi_threshold(sigma, 3, 0.4, 0.3).unwrap();
            assert!(v.is_finite() && v >= 0.0);
            assert!(v < prev, "psi must decrease with sigma: {v} vs {prev}");
            prev = v;
        }
        assert!(prev < 1e-11, "limit value {prev}");
    }

    #[test]
    fn psi_diverges_approaching_the_l_boundary() {
        let lam = lambda_of_d(1.0, 3, PI / 6.0).unwrap();
        let mut prev = 0.0;
        for k in 1..=40 {
            let l = (1.0 / lam) * (1.0 - 2f64.powi(-k));
            let v = psi_threshold(1.0, 3, PI / 6.0, l).unwrap();
            assert!(v.is_finite() && v > prev);
            prev = v;
        }
        assert!(prev > 1e9, "divergence stalled at {prev}");
    }

    proptest! {
        #[test]
        fn psi_monotone_in_d_and_l(
            sigma in 0.05f64..2.0,
            u in 0.01f64..0.95,
            v in 0.01f64..0.99,
            w in 0.0f64..0.95,
            t in 0.0f64..0.99,
        ) {
            let n = 3usize;
            let pole = PI / (sigma.sqrt() * n as f64);
            let d2 = u * pole;
            let d1 = v * d2;
            let lam2 = lambda_of_d(sigma, n, d2).unwrap();
            let lam1 = lambda_of_d(sigma, n, d1).unwrap();
            prop_assert!(lam1 <= lam2 + 1e-12);
            let l2 = w * (1.0 / lam2).min(1e6);
            let l1 = t * l2;
            let p_d1 = psi_threshold(sigma, n, d1, l1).unwrap();
            let p_d2 = psi_threshold(sigma, n, d2, l1).unwrap();
            let p_l2 = psi_threshold(sigma, n, d2, l2).unwrap();
            prop_assert!(p_d1 <= p_d2 * (1.0 + 1e-12) + 1e-12);
            prop_assert!(psi_threshold(sigma, n, d2, l1.min(l2)).unwrap()
                <= p_l2 * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn shield_check_margin_arithmetic() {
        let sg = ShieldGeometry {
            sigma: 1.0,
            n: 3,
            d: PI / 6.0,
            l: 1.0 / 3.0,
            boundary_margin: vec![-1.9, 0.0, 3.0],
            interior_margin_u0: 0.2,
            interior_margin_annulus: 6.0,
        };
        let rep = shield_check(&sg).unwrap();
        assert!((rep.psi - 2.0).abs() < 1e-12);
        assert_eq!(rep.surplus_margin_annulus, 0.0);
        assert!(rep.condition_dec && rep.condition_surplus && rep.condition_boundary);
        assert!(rep.passes);
        assert!((rep.boundary_margin - 0.1).abs() < 1e-12);

        let mut worse = sg.clone();
        worse.boundary_margin = vec![-2.1];
        let rep = shield_check(&worse).unwrap();
        assert!(!rep.condition_boundary && !rep.passes);

        let mut thin = sg;
        thin.interior_margin_annulus = 5.9;
        let rep = shield_check(&thin).unwrap();
        assert!(!rep.condition_surplus && !rep.passes);
        assert!((rep.surplus_margin_annulus + 0.1).abs() < 1e-12);
    }

    #[test]
    fn infinite_psi_makes_the_boundary_condition_vacuous() {
        let sg = ShieldGeometry {
            sigma: 1.0,
            n: 3,
            d: PI / 3.0,
            l: 0.1,
            boundary_margin: vec![-1e9],
            interior_margin_u0: 0.0,
            interior_margin_annulus: 7.0,
        };
        let rep = shield_check(&sg).unwrap();
        assert!(rep.psi.is_infinite());
        assert!(rep.condition_boundary);
        assert!(rep.boundary_margin.is_infinite());
        assert!(rep.passes);
    }

    #[test]
    fn fillin_f_pointwise_cases() {
        let bd = round_unit_sphere_data(2.0, 0.0);
        for v in fillin_f(&bd).unwrap() {
            assert_eq!(v, 0.0);
        }
        // alpha = gamma on the unit sphere has trace 2.
        let bd = round_unit_sphere_data(2.0, 1.0);
        for v in fillin_f(&bd).unwrap() {
            assert!((v - 2.0).abs() < 1e-14);
        }
        // pure beta: f = |beta|_gamma.
        let mut bd = round_unit_sphere_data(2.0, 0.0);
        bd.beta = vec![[0.3, 0.0]; bd.node_count()];
        for v in fillin_f(&bd).unwrap() {
            assert!((v - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn induced_data_reproduces_surface_momentum_norm() {
        let ids = InitialDataSet::cmc_hyperboloid(1.0).unwrap();
        let grid = SphereGrid::new(12, 24).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.15, -0.1, 0.2], 1.1, grid).unwrap();
        let data = extrinsic_data(&ids, mesh).unwrap();
        let bd = BartnikData::from_surface(&data);
        let f = fillin_f(&bd).unwrap();
        for i in 0..bd.node_count() {
            assert!(
                (f[i] - data.pi_nu_norm[i]).abs() <= 1e-12,
                "node {i}: f {} vs pi_nu_norm {}",
                f[i],
                data.pi_nu_norm[i]
            );
        }
        // Centered sphere: tr_S k = 2/a = 2 with omega = 0, so f = 2.
        let grid = SphereGrid::new(12, 24).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.0; 3], 1.0, grid).unwrap();
        let data = extrinsic_data(&ids, mesh).unwrap();
        let f = fillin_f(&BartnikData::from_surface(&data)).unwrap();
        for v in f {
            assert!((v - 2.0).abs() < 1e-11, "f {v}");
        }
    }

    #[test]
    fn obstruction_example_on_the_unit_sphere() {
        let bd = round_unit_sphere_data(2.0, 0.0);
        let rep = obstruction_report(&bd, FillInThresholds { h0: 10.0, c0: 0.5 }).unwrap();
        assert!((rep.area - 4.0 * PI).abs() < 1e-12);
        assert!((rep.integral_h_minus_f - 8.0 * PI).abs() < 1e-10, "integral {}", rep.integral_h_minus_f);
        assert!(rep.integral_criterion_met);
        assert!(rep.pointwise_criterion_met);
        assert_eq!(rep.h0, 10.0);
        assert_eq!(rep.c0, 0.5);

        // H = f pointwise: no strict positivity for any positive threshold.
        let bd = round_unit_sphere_data(2.0, 1.0);
        let rep = obstruction_report(&bd, FillInThresholds { h0: 0.0, c0: 1e-9 }).unwrap();
        assert!(rep.min_h_minus_f.abs() < 1e-13);
        assert!(!rep.integral_criterion_met);
        assert!(!rep.pointwise_criterion_met);

        // f exceeding H somewhere shows up as a negative pointwise margin.
        let bd = round_unit_sphere_data(2.0, 1.5);
        let rep = obstruction_report(&bd, FillInThresholds { h0: 0.0, c0: 0.0 }).unwrap();
        assert!(rep.min_h_minus_f < -0.9);
        assert!(!rep.pointwise_criterion_met);
        assert!(rep.assumed_boundary_topology && rep.assumed_isotopy_class);
    }

    #[test]
    fn bartnik_text_roundtrip_is_exact() {
        let ids = InitialDataSet::cmc_hyperboloid(0.8).unwrap();
        let grid = SphereGrid::new(8, 16).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.1, 0.0, -0.05], 0.9, grid).unwrap();
        let bd = BartnikData::from_surface(&extrinsic_data(&ids, mesh).unwrap());
        let back = BartnikData::from_text(&bd.to_text()).unwrap();
        assert_eq!(back.label, bd.label);
        for i in 0..bd.node_count() {
            assert_eq!(back.gamma[i], bd.gamma[i]);
            assert_eq!(back.alpha[i], bd.alpha[i]);
            assert_eq!(back.mean_curvature[i], bd.mean_curvature[i]);
            assert_eq!(back.beta[i], bd.beta[i]);
        }
    }

    #[test]
    fn bartnik_parse_errors_carry_line_numbers() {
        let bd = round_unit_sphere_data(2.0, 0.0);
        let mut lines: Vec<String> = bd.to_text().lines().map(String::from).collect();
        lines[7] = "not a number".into();
        match BartnikData::from_text(&lines.join("\n")) {
            Err(Error::GridFile { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected GridFile error, got {other:?}"),
        }
        match BartnikData::from_text("qlm-bartnik 2\n4 8\nlabel x\n") {
            Err(Error::GridFile { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected GridFile error, got {other:?}"),
        }
    }

    #[test]
    fn smoothness_tail_flags_rough_fields() {
        let ids = InitialDataSet::cmc_hyperboloid(1.0).unwrap();
        let grid = SphereGrid::new(16, 32).unwrap();
        let mesh = SurfaceMesh::coordinate_sphere([0.1, 0.05, 0.0], 1.0, grid).unwrap();
        let mut bd = BartnikData::from_surface(&extrinsic_data(&ids, mesh).unwrap());
        let tail = bd.smoothness_tail();
        assert!(tail.alpha_tail < 1e-8, "smooth alpha tail {}", tail.alpha_tail);
        assert!(tail.beta_tail < 1e-8, "smooth beta tail {}", tail.beta_tail);

        // Inject grid-scale oscillation into alpha; the tail must see it.
        for i in 0..bd.grid.n_theta {
            for j in 0..bd.grid.n_phi {
                let node = bd.grid.idx(i, j);
                bd.alpha[node].tt += 0.5 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        let rough = bd.smoothness_tail();
        assert!(rough.alpha_tail > 0.3, "rough alpha tail {}", rough.alpha_tail);
    }
}
