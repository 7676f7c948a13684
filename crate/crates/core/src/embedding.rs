//! Isometric embedding of metrics on `S²` into Euclidean `R³`.
//!
//! `gauss_curvature` evaluates the Brioschi formula with spectral
//! differentiation (Fourier in `φ`, barycentric polynomial in `cos θ`), so it
//! is exact for band-limited metric components. `weyl_condition` reports
//! whether `K > 0` everywhere, the classical solvability condition for a
//! global convex embedding.
//!
//! `embed_convex` solves the isometry equations in a spherical harmonic
//! ansatz for the three position components with damped Gauss-Newton steps;
//! the normal equations are solved matrix-free by preconditioned conjugate
//! gradients, with synthesis/adjoint pairs supplying `J` and `Jᵀ` products.
//! Residuals are frame-normalized (relative to the target components), the
//! translation modes are pinned to the origin, and rotations are controlled
//! by the Levenberg damping. The reference mean curvature of the embedded
//! image is `H₀ = -γ̂^{ab} (X_{ab} · n̂)` with `n̂` outward, so round spheres
//! give `H₀ = 2/r`.

use crate::algebra::{pairwise_sum, Mat3, Sym2, Vec3};
use crate::error::{Error, Result};
use crate::harmonics::{coeff_count, coeff_index, Deriv, SphereBasis};
use crate::sphere::SphereGrid;

/// Gauss curvature of `γ` via the Brioschi formula.
pub fn gauss_curvature(grid: &SphereGrid, gamma: &[Sym2]) -> Vec<f64> {
    assert_eq!(gamma.len(), grid.node_count());
    let n = grid.node_count();
    let e: Vec<f64> = gamma.iter().map(|g| g.tt).collect();
    let f: Vec<f64> = gamma.iter().map(|g| g.tp).collect();
    let g: Vec<f64> = gamma.iter().map(|g| g.pp).collect();
    // Parity shifts: tt/pp components carry shift 0, the tp component 1.
    let e_t = grid.spectral_dtheta(&e, 0);
    let e_p = grid.spectral_dphi(&e, 1);
    let e_pp = grid.spectral_dphi(&e, 2);
    let f_t = grid.spectral_dtheta(&f, 1);
    let f_p = grid.spectral_dphi(&f, 1);
    let f_tp = grid.spectral_dphi(&f_t, 1);
    let g_t = grid.spectral_dtheta(&g, 0);
    let g_p = grid.spectral_dphi(&g, 1);
    let g_tt = grid.spectral_dtheta2(&g, 0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let det = e[i] * g[i] - f[i] * f[i];
        let m1 = Mat3::new(
            -0.5 * e_pp[i] + f_tp[i] - 0.5 * g_tt[i],
            0.5 * e_t[i],
            f_t[i] - 0.5 * e_p[i],
            f_p[i] - 0.5 * g_t[i],
            e[i],
            f[i],
            0.5 * g_p[i],
            f[i],
            g[i],
        );
        let m2 = Mat3::new(
            0.0,
            0.5 * e_p[i],
            0.5 * g_t[i],
            0.5 * e_p[i],
            e[i],
            f[i],
            0.5 * g_t[i],
            f[i],
            g[i],
        );
        out.push((m1.determinant() - m2.determinant()) / (det * det));
    }
    out
}

#[derive(Debug, Clone)]
pub struct WeylReport {
    pub gauss: Vec<f64>,
    pub k_min: f64,
    pub k_min_node: usize,
    pub passes: bool,
}

/// Check pointwise positivity of the Gauss curvature.
pub fn weyl_condition(grid: &SphereGrid, gamma: &[Sym2]) -> WeylReport {
    let gauss = gauss_curvature(grid, gamma);
    let mut k_min = f64::INFINITY;
    let mut k_min_node = 0;
    for (i, k) in gauss.iter().enumerate() {
        if *k < k_min {
            k_min = *k;
            k_min_node = i;
        }
    }
    WeylReport { gauss, k_min, k_min_node, passes: k_min > 0.0 }
}

#[derive(Debug, Clone)]
pub struct EmbeddingOptions {
    /// Harmonic degree of the position ansatz; default `n_theta - 2`.
    pub l_max: Option<usize>,
    /// Convergence bound on the frame-normalized residual maximum.
    pub tol_rel: f64,
    pub max_iterations: usize,
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Skip the Weyl positivity gate (used when the caller already checked).
    pub skip_weyl_check: bool,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions {
            l_max: None,
            tol_rel: 1e-10,
            max_iterations: 80,
            cg_tol: 1e-3,
            cg_max: 600,
            skip_weyl_check: false,
        }
    }
}

/// Converged embedding: harmonic coefficients of the position components and
/// the synthesized image.
pub struct EmbeddingResult {
    pub grid: SphereGrid,
    pub basis: SphereBasis,
    pub coeffs: [Vec<f64>; 3],
    pub positions: Vec<Vec3>,
    pub iterations: usize,
    /// Largest frame-normalized isometry defect over nodes and components.
    pub residual_max: f64,
    pub l_max: usize,
}

struct Workspace<'a> {
    grid: &'a SphereGrid,
    basis: &'a SphereBasis,
    target: &'a [Sym2],
    /// per-node frame scales for tt, tp, pp residuals
    scale: Vec<[f64; 3]>,
    /// quadrature weight per node
    weight: Vec<f64>,
    /// diagonal preconditioner per coefficient (shared across components)
    precond: Vec<f64>,
}

struct Evaluation {
    xt: [Vec<f64>; 3],
    xp: [Vec<f64>; 3],
    delta: [Vec<f64>; 3],
    objective: f64,
    residual_max: f64,
}

impl<'a> Workspace<'a> {
    fn evaluate(&self, coeffs: &[Vec<f64>; 3]) -> Evaluation {
        let n = self.grid.node_count();
        let xt = [
            self.basis.synthesize(&coeffs[0], Deriv::Dt),
            self.basis.synthesize(&coeffs[1], Deriv::Dt),
            self.basis.synthesize(&coeffs[2], Deriv::Dt),
        ];
        let xp = [
            self.basis.synthesize(&coeffs[0], Deriv::Dp),
            self.basis.synthesize(&coeffs[1], Deriv::Dp),
            self.basis.synthesize(&coeffs[2], Deriv::Dp),
        ];
        let mut delta = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut residual_max = 0.0f64;
        let mut terms = Vec::with_capacity(3 * n);
        for i in 0..n {
            let tt: f64 = (0..3).map(|c| xt[c][i] * xt[c][i]).sum();
            let tp: f64 = (0..3).map(|c| xt[c][i] * xp[c][i]).sum();
            let pp: f64 = (0..3).map(|c| xp[c][i] * xp[c][i]).sum();
            let d = [
                tt - self.target[i].tt,
                tp - self.target[i].tp,
                pp - self.target[i].pp,
            ];
            for a in 0..3 {
                let rel = d[a] / self.scale[i][a];
                residual_max = residual_max.max(rel.abs());
                let mult = if a == 1 { 2.0 } else { 1.0 };
                terms.push(mult * self.weight[i] * rel * rel);
                delta[a][i] = d[a];
            }
        }
        Evaluation { xt, xp, delta, objective: pairwise_sum(&terms), residual_max }
    }

    /// `J δc` at the current linearization point.
    fn apply_j(&self, eval: &Evaluation, dir: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let n = self.grid.node_count();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for c in 0..3 {
            let dt = self.basis.synthesize(&dir[c], Deriv::Dt);
            let dp = self.basis.synthesize(&dir[c], Deriv::Dp);
            for i in 0..n {
                out[0][i] += 2.0 * eval.xt[c][i] * dt[i];
                out[1][i] += eval.xt[c][i] * dp[i] + eval.xp[c][i] * dt[i];
                out[2][i] += 2.0 * eval.xp[c][i] * dp[i];
            }
        }
        out
    }

    /// `Jᵀ v` for node fields `v = (v_tt, v_tp, v_pp)`.
    fn apply_jt(&self, eval: &Evaluation, v: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let n = self.grid.node_count();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for c in 0..3 {
            let mut a_t = vec![0.0; n];
            let mut a_p = vec![0.0; n];
            for i in 0..n {
                a_t[i] = 2.0 * v[0][i] * eval.xt[c][i] + v[1][i] * eval.xp[c][i];
                a_p[i] = v[1][i] * eval.xt[c][i] + 2.0 * v[2][i] * eval.xp[c][i];
            }
            let mut g = self.basis.synthesize_adjoint(&a_t, Deriv::Dt);
            let gp = self.basis.synthesize_adjoint(&a_p, Deriv::Dp);
            for (gi, pi) in g.iter_mut().zip(&gp) {
                *gi += pi;
            }
            out[c] = g;
        }
        out
    }

    fn weight_residuals(&self, fields: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let n = self.grid.node_count();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            for a in 0..3 {
                let mult = if a == 1 { 2.0 } else { 1.0 };
                let s = self.scale[i][a];
                out[a][i] = mult * self.weight[i] * fields[a][i] / (s * s);
            }
        }
        out
    }

    /// `(JᵀWJ + λ P) δ` for the damped normal equations.
    fn apply_normal(&self, eval: &Evaluation, lambda: f64, dir: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let jd = self.apply_j(eval, dir);
        let wjd = self.weight_residuals(&jd);
        let mut out = self.apply_jt(eval, &wjd);
        for c in 0..3 {
            for (o, (d, p)) in out[c].iter_mut().zip(dir[c].iter().zip(&self.precond)) {
                *o += lambda * p * d;
            }
        }
        out
    }
}

fn dot3(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
    let mut acc = 0.0;
    for c in 0..3 {
        acc += a[c].iter().zip(&b[c]).map(|(x, y)| x * y).sum::<f64>();
    }
    acc
}

fn pcg(
    ws: &Workspace,
    eval: &Evaluation,
    lambda: f64,
    rhs: &[Vec<f64>; 3],
    tol: f64,
    max_iter: usize,
) -> [Vec<f64>; 3] {
    let zeros = [
        vec![0.0; rhs[0].len()],
        vec![0.0; rhs[1].len()],
        vec![0.0; rhs[2].len()],
    ];
    let mut x = zeros.clone();
    let mut r = rhs.clone();
    let prec = |v: &[Vec<f64>; 3]| -> [Vec<f64>; 3] {
        let mut out = v.clone();
        for c in 0..3 {
            for (o, p) in out[c].iter_mut().zip(&ws.precond) {
                *o /= p * (1.0 + lambda);
            }
        }
        out
    };
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot3(&r, &z);
    let b_norm = dot3(rhs, rhs).sqrt().max(1e-300);
    for _ in 0..max_iter {
        if dot3(&r, &r).sqrt() <= tol * b_norm {
            break;
        }
        let ap = ws.apply_normal(eval, lambda, &p);
        let pap = dot3(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for c in 0..3 {
            for i in 0..x[c].len() {
                x[c][i] += alpha * p[c][i];
                r[c][i] -= alpha * ap[c][i];
            }
        }
        z = prec(&r);
        let rz_new = dot3(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for c in 0..3 {
            for i in 0..p[c].len() {
                p[c][i] = z[c][i] + beta * p[c][i];
            }
        }
    }
    x
}

/// Solve the isometric embedding problem for a convex metric on `S²`.
pub fn embed_convex(
    grid: &SphereGrid,
    gamma: &[Sym2],
    opts: &EmbeddingOptions,
) -> Result<EmbeddingResult> {
    if gamma.len() != grid.node_count() {
        return Err(Error::GridMismatch(format!(
            "metric field has {} nodes, grid has {}",
            gamma.len(),
            grid.node_count()
        )));
    }
    for (i, g) in gamma.iter().enumerate() {
        if !(g.tt > 0.0) || !(g.det() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "target metric is not positive definite at node {i}"
            )));
        }
    }
    if !opts.skip_weyl_check {
        let report = weyl_condition(grid, gamma);
        if !report.passes {
            return Err(Error::WeylConditionFailed {
                min_k: report.k_min,
                node: report.k_min_node,
            });
        }
    }
    let l_max = opts.l_max.unwrap_or(grid.n_theta.saturating_sub(2)).min(grid.n_theta - 2);
    let basis = SphereBasis::new(grid, l_max);
    let n = grid.node_count();

    // area from the target metric fixes the scale of the round initial guess
    let mut area_terms = Vec::with_capacity(n);
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            area_terms.push(gamma[grid.idx(i, j)].det().sqrt() * grid.area_weight(i));
        }
    }
    let area = pairwise_sum(&area_terms);
    let r0 = (area / (4.0 * std::f64::consts::PI)).sqrt();

    let mut scale = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let idx = grid.idx(i, j);
            let s_tt = gamma[idx].tt;
            let s_pp = gamma[idx].pp;
            scale.push([s_tt, (s_tt * s_pp).sqrt(), s_pp]);
            weight.push(grid.omega_weight(i));
        }
    }
    let mut precond = vec![0.0; coeff_count(l_max)];
    for l in 0..=l_max {
        for m in -(l as isize)..=(l as isize) {
            precond[coeff_index(l, m)] = (1.0 + (l * (l + 1)) as f64) / (r0 * r0);
        }
    }
    let ws = Workspace { grid, basis: &basis, target: gamma, scale, weight, precond };

    // round initial guess of matching area
    let amp = (4.0 * std::f64::consts::PI / 3.0).sqrt();
    let mut coeffs = [
        vec![0.0; coeff_count(l_max)],
        vec![0.0; coeff_count(l_max)],
        vec![0.0; coeff_count(l_max)],
    ];
    coeffs[0][coeff_index(1, 1)] = r0 * amp;
    coeffs[1][coeff_index(1, -1)] = r0 * amp;
    coeffs[2][coeff_index(1, 0)] = r0 * amp;

    let mut eval = ws.evaluate(&coeffs);
    let mut lambda = 1e-8;
    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        if eval.residual_max <= opts.tol_rel {
            break;
        }
        iterations += 1;
        let wd = ws.weight_residuals(&eval.delta);
        let mut rhs = ws.apply_jt(&eval, &wd);
        for c in 0..3 {
            for v in rhs[c].iter_mut() {
                *v = -*v;
            }
        }
        let step = pcg(&ws, &eval, lambda, &rhs, opts.cg_tol, opts.cg_max);
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..14 {
            let mut trial = coeffs.clone();
            for c in 0..3 {
                for i in 0..trial[c].len() {
                    trial[c][i] += t * step[c][i];
                }
                trial[c][coeff_index(0, 0)] = 0.0;
            }
            let trial_eval = ws.evaluate(&trial);
            if trial_eval.objective < eval.objective {
                coeffs = trial;
                eval = trial_eval;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if accepted {
            lambda = (lambda / 3.0).max(1e-12);
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                return Err(Error::EmbeddingDiverged {
                    residual_max: eval.residual_max,
                    iterations,
                    tolerance: opts.tol_rel,
                });
            }
        }
    }
    if eval.residual_max > opts.tol_rel {
        return Err(Error::EmbeddingDiverged {
            residual_max: eval.residual_max,
            iterations,
            tolerance: opts.tol_rel,
        });
    }
    let xs = [
        basis.synthesize(&coeffs[0], Deriv::Val),
        basis.synthesize(&coeffs[1], Deriv::Val),
        basis.synthesize(&coeffs[2], Deriv::Val),
    ];
    let positions = (0..n).map(|i| Vec3::new(xs[0][i], xs[1][i], xs[2][i])).collect();
    Ok(EmbeddingResult {
        grid: grid.clone(),
        basis,
        coeffs,
        positions,
        iterations,
        residual_max: eval.residual_max,
        l_max,
    })
}

impl EmbeddingResult {
    pub fn component_field(&self, comp: usize, d: Deriv) -> Vec<f64> {
        self.basis.synthesize(&self.coeffs[comp], d)
    }

    fn vec_field(&self, d: Deriv) -> Vec<Vec3> {
        let x = self.component_field(0, d);
        let y = self.component_field(1, d);
        let z = self.component_field(2, d);
        (0..x.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect()
    }

    /// Outward Euclidean unit normal of the embedded image.
    pub fn outward_normal(&self) -> Vec<Vec3> {
        let xt = self.vec_field(Deriv::Dt);
        let xp = self.vec_field(Deriv::Dp);
        let centroid =
            self.positions.iter().fold(Vec3::zeros(), |a, p| a + p) / self.positions.len() as f64;
        let mut normals: Vec<Vec3> =
            xt.iter().zip(&xp).map(|(a, b)| a.cross(b).normalize()).collect();
        let orient: f64 = normals
            .iter()
            .zip(&self.positions)
            .map(|(n, p)| n.dot(&(p - centroid)))
            .sum();
        if orient < 0.0 {
            for n in normals.iter_mut() {
                *n = -*n;
            }
        }
        normals
    }

    /// Induced metric of the embedded image (equals the target up to the
    /// converged residual).
    pub fn induced_metric(&self) -> Vec<Sym2> {
        let xt = self.vec_field(Deriv::Dt);
        let xp = self.vec_field(Deriv::Dp);
        xt.iter()
            .zip(&xp)
            .map(|(a, b)| Sym2 { tt: a.dot(a), tp: a.dot(b), pp: b.dot(b) })
            .collect()
    }

    /// Mean curvature `H₀` of the embedded image with respect to the outward
    /// normal, from harmonic second derivatives.
    pub fn mean_curvature(&self) -> Vec<f64> {
        let xtt = self.vec_field(Deriv::Dtt);
        let xtp = self.vec_field(Deriv::Dtp);
        let xpp = self.vec_field(Deriv::Dpp);
        let gamma = self.induced_metric();
        let normals = self.outward_normal();
        let mut out = Vec::with_capacity(self.positions.len());
        for i in 0..self.positions.len() {
            let inv = gamma[i].inverse();
            let l_tt = xtt[i].dot(&normals[i]);
            let l_tp = xtp[i].dot(&normals[i]);
            let l_pp = xpp[i].dot(&normals[i]);
            out.push(-(inv.tt * l_tt + 2.0 * inv.tp * l_tp + inv.pp * l_pp));
        }
        out
    }

    /// Support function `h = (X - centroid)·n̂` of the embedded image.
    pub fn support_function(&self) -> Vec<f64> {
        let centroid =
            self.positions.iter().fold(Vec3::zeros(), |a, p| a + p) / self.positions.len() as f64;
        let normals = self.outward_normal();
        self.positions
            .iter()
            .zip(&normals)
            .map(|(p, n)| (p - centroid).dot(n))
            .collect()
    }

    fn integrate(&self, field: &[f64]) -> f64 {
        let gamma = self.induced_metric();
        let mut terms = Vec::with_capacity(field.len());
        for i in 0..self.grid.n_theta {
            for j in 0..self.grid.n_phi {
                let idx = self.grid.idx(i, j);
                terms.push(field[idx] * gamma[idx].det().sqrt() * self.grid.area_weight(i));
            }
        }
        pairwise_sum(&terms)
    }

    /// Relative defect of the Minkowski identity `∫ H₀ dσ = 2 ∫ K h dσ`,
    /// with `K` from the Brioschi formula on the induced metric and `h` the
    /// support function. The two sides differentiate the surface through
    /// entirely different pipelines, so this is a strong self-check.
    pub fn minkowski_identity_defect(&self) -> f64 {
        let h0 = self.mean_curvature();
        let gamma = self.induced_metric();
        let k = gauss_curvature(&self.grid, &gamma);
        let h = self.support_function();
        let lhs = self.integrate(&h0);
        let rhs_field: Vec<f64> = k.iter().zip(&h).map(|(a, b)| 2.0 * a * b).collect();
        let rhs = self.integrate(&rhs_field);
        (lhs - rhs).abs() / lhs.abs().max(1e-300)
    }
}

/// Best rigid alignment (orthogonal map, reflection allowed, plus
/// translation) of `a` onto `b`; returns the root-mean-square misfit after
/// alignment.
pub fn align_positions(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ca = a.iter().fold(Vec3::zeros(), |s, p| s + p) / n;
    let cb = b.iter().fold(Vec3::zeros(), |s, p| s + p) / n;
    let mut cov = Mat3::zeros();
    for (p, q) in a.iter().zip(b) {
        cov += (q - cb) * (p - ca).transpose();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let q = u * v_t;
    let mut acc = 0.0;
    for (p, r) in a.iter().zip(b) {
        acc += (q * (p - ca) - (r - cb)).norm_squared();
    }
    (acc / n).sqrt()
}
