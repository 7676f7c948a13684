//! Latitude-longitude grids on the parameter sphere.
//!
//! Nodes are Gauss-Legendre in `t = cos θ` crossed with a uniform periodic
//! grid in `φ`, so the poles are never sampled and surface quadrature is
//! spectrally accurate. Two differentiation schemes live here:
//!
//! * sixth-order finite differences in `(θ, φ)` with ghost rows continued
//!   across the poles (a scalar on the sphere satisfies
//!   `f(-θ, φ) = f(θ, φ+π)`), used for fields that are only known pointwise,
//! * spectral differentiation (barycentric Lagrange in `t`, Fourier in `φ`)
//!   for globally smooth fields such as induced metric components.

use crate::algebra::{pairwise_dot, pairwise_sum};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

pub const MIN_THETA: usize = 6;
pub const MIN_PHI: usize = 8;

#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Colatitudes in strictly increasing order, all in (0, π).
    pub theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    /// Gauss-Legendre weights in the `t = cos θ` variable, row-aligned.
    pub gl_weight: Vec<f64>,
    pub phi: Vec<f64>,
    pub d_phi: f64,
    theta_stencil_src: Vec<[(usize, bool); 7]>,
    theta_stencil_w: Vec<[f64; 7]>,
    /// Barycentric differentiation matrices in `t = cos θ` (first, second).
    dt_mat: Vec<f64>,
    dtt_mat: Vec<f64>,
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<SphereGrid> {
        if n_theta < MIN_THETA || n_phi < MIN_PHI || n_phi % 2 != 0 {
            return Err(Error::BadSphereGrid {
                n_theta,
                n_phi,
                min_theta: MIN_THETA,
                min_phi: MIN_PHI,
            });
        }
        let rule = gauss_legendre(n_theta);
        // Gauss nodes ascend in t; θ = acos(t) therefore descends. Flip so the
        // first row sits nearest the north pole.
        let mut theta = Vec::with_capacity(n_theta);
        let mut gl_weight = Vec::with_capacity(n_theta);
        for i in 0..n_theta {
            theta.push(rule.nodes[n_theta - 1 - i].acos());
            gl_weight.push(rule.weights[n_theta - 1 - i]);
        }
        let cos_theta: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let d_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * d_phi).collect();

        // Extended colatitude ladder for pole-crossing stencils.
        let ext = |e: isize| -> (f64, usize, bool) {
            let n = n_theta as isize;
            if e < 0 {
                let src = (-1 - e) as usize;
                (-theta[src], src, true)
            } else if e >= n {
                let src = (2 * n - 1 - e) as usize;
                (2.0 * std::f64::consts::PI - theta[src], src, true)
            } else {
                (theta[e as usize], e as usize, false)
            }
        };
        let mut theta_stencil_src = Vec::with_capacity(n_theta);
        let mut theta_stencil_w = Vec::with_capacity(n_theta);
        for i in 0..n_theta {
            let mut src = [(0usize, false); 7];
            let mut nodes = [0.0f64; 7];
            for (s, e) in ((i as isize - 3)..=(i as isize + 3)).enumerate() {
                let (th, row, flip) = ext(e);
                nodes[s] = th;
                src[s] = (row, flip);
            }
            let w = crate::fd::fd_weights(theta[i], &nodes, 1);
            theta_stencil_src.push(src);
            theta_stencil_w.push([w[0], w[1], w[2], w[3], w[4], w[5], w[6]]);
        }

        let (dt_mat, dtt_mat) = barycentric_t_matrices(&cos_theta, &gl_weight);

        Ok(SphereGrid {
            n_theta,
            n_phi,
            theta,
            cos_theta,
            sin_theta,
            gl_weight,
            phi,
            d_phi,
            theta_stencil_src,
            theta_stencil_w,
            dt_mat,
            dtt_mat,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_phi
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Weight for integrals `∫ f dσ = Σ f √(det γ) w`; the `1/sin θ` factor
    /// converts the Gauss weight in `t` to a weight in `θ`.
    #[inline]
    pub fn area_weight(&self, i: usize) -> f64 {
        self.gl_weight[i] * self.d_phi / self.sin_theta[i]
    }

    /// Weight for integrals against the round measure `dΩ = sin θ dθ dφ`.
    #[inline]
    pub fn omega_weight(&self, i: usize) -> f64 {
        self.gl_weight[i] * self.d_phi
    }

    /// `∫ f dσ` with the supplied induced area element, fixed-order pairwise
    /// reduction.
    pub fn integrate(&self, values: &[f64], area_element: &[f64]) -> f64 {
        assert_eq!(values.len(), self.node_count());
        assert_eq!(area_element.len(), self.node_count());
        let terms: Vec<f64> = (0..self.node_count())
            .map(|n| {
                let i = n / self.n_phi;
                values[n] * area_element[n] * self.area_weight(i)
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// `∫ f dΩ` over the parameter sphere.
    pub fn integrate_round(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.node_count());
        let terms: Vec<f64> = (0..self.node_count())
            .map(|n| values[n] * self.omega_weight(n / self.n_phi))
            .collect();
        pairwise_sum(&terms)
    }

    /// Sixth-order `(∂_θ f, ∂_φ f)` of a scalar on the sphere, ghost rows
    /// continued across the poles.
    pub fn fd_partials(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(f.len(), self.node_count());
        let np = self.n_phi;
        let half = np / 2;
        let mut ft = vec![0.0; f.len()];
        let mut fp = vec![0.0; f.len()];
        let cp = 1.0 / (60.0 * self.d_phi);
        for i in 0..self.n_theta {
            let src = &self.theta_stencil_src[i];
            let w = &self.theta_stencil_w[i];
            for j in 0..np {
                let mut acc = 0.0;
                for s in 0..7 {
                    let (row, flip) = src[s];
                    let col = if flip { (j + half) % np } else { j };
                    acc += w[s] * f[row * np + col];
                }
                ft[i * np + j] = acc;
                let jp1 = (j + 1) % np;
                let jp2 = (j + 2) % np;
                let jp3 = (j + 3) % np;
                let jm1 = (j + np - 1) % np;
                let jm2 = (j + np - 2) % np;
                let jm3 = (j + np - 3) % np;
                fp[i * np + j] = cp
                    * (-f[i * np + jm3] + 9.0 * f[i * np + jm2] - 45.0 * f[i * np + jm1]
                        + 45.0 * f[i * np + jp1]
                        - 9.0 * f[i * np + jp2]
                        + f[i * np + jp3]);
            }
        }
        (ft, fp)
    }

    /// Spectral `∂_θ` of a component field. The `φ`-Fourier mode `m` of a
    /// smooth field has a θ-profile `sin^p θ · q(cos θ)` with polynomial `q`
    /// and parity `p = (m + shift) mod 2`; `shift` is 0 for scalars and for
    /// `tt`/`pp` tensor components, 1 for `tp` components. Removing the
    /// `sin θ` factor before the barycentric derivative keeps the result
    /// exact for band-limited fields all the way to the poles.
    pub fn spectral_dtheta(&self, f: &[f64], shift: usize) -> Vec<f64> {
        self.spectral_dtheta_impl(f, shift, 1)
    }

    /// Spectral `∂²_θ` of a component field; see [`Self::spectral_dtheta`].
    pub fn spectral_dtheta2(&self, f: &[f64], shift: usize) -> Vec<f64> {
        self.spectral_dtheta_impl(f, shift, 2)
    }

    fn spectral_dtheta_impl(&self, f: &[f64], shift: usize, order: u32) -> Vec<f64> {
        assert!(order == 1 || order == 2);
        assert!(shift <= 1);
        assert_eq!(f.len(), self.node_count());
        let nt = self.n_theta;
        let np = self.n_phi;
        let m_max = np / 2;
        let mut out = vec![0.0; f.len()];
        let inv = 2.0 / np as f64;
        let mut a = vec![0.0; nt];
        let mut b = vec![0.0; nt];
        for m in 0..=m_max {
            let scale = if m == 0 || m == m_max { inv / 2.0 } else { inv };
            for i in 0..nt {
                let row = &f[i * np..(i + 1) * np];
                let mut am = 0.0;
                let mut bm = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    let arg = m as f64 * self.phi[j];
                    am += v * arg.cos();
                    bm += v * arg.sin();
                }
                a[i] = am * scale;
                b[i] = bm * scale;
            }
            let odd = (m + shift) % 2 == 1;
            let da = self.dtheta_profile(&a, odd, order);
            let db = if m == 0 || m == m_max {
                Vec::new()
            } else {
                self.dtheta_profile(&b, odd, order)
            };
            for i in 0..nt {
                for j in 0..np {
                    let arg = m as f64 * self.phi[j];
                    let mut v = da[i] * arg.cos();
                    if !db.is_empty() {
                        v += db[i] * arg.sin();
                    }
                    out[i * np + j] += v;
                }
            }
        }
        out
    }

    /// θ-derivatives of a single mode profile with the stated parity.
    fn dtheta_profile(&self, prof: &[f64], odd: bool, order: u32) -> Vec<f64> {
        let nt = self.n_theta;
        let mul = |mat: &[f64], v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; nt];
            for i in 0..nt {
                let mut acc = 0.0;
                for k in 0..nt {
                    acc += mat[i * nt + k] * v[k];
                }
                out[i] = acc;
            }
            out
        };
        if !odd {
            // f = q(t): f_θ = -sin θ q_t, f_θθ = sin²θ q_tt - cos θ q_t.
            let qt = mul(&self.dt_mat, prof);
            match order {
                1 => (0..nt).map(|i| -self.sin_theta[i] * qt[i]).collect(),
                _ => {
                    let qtt = mul(&self.dtt_mat, prof);
                    (0..nt)
                        .map(|i| {
                            let s = self.sin_theta[i];
                            s * s * qtt[i] - self.cos_theta[i] * qt[i]
                        })
                        .collect()
                }
            }
        } else {
            // f = sin θ h(t): f_θ = cos θ h - sin²θ h_t,
            // f_θθ = -sin θ h - 3 sin θ cos θ h_t + sin³θ h_tt.
            let h: Vec<f64> = (0..nt).map(|i| prof[i] / self.sin_theta[i]).collect();
            let ht = mul(&self.dt_mat, &h);
            match order {
                1 => (0..nt)
                    .map(|i| {
                        let s = self.sin_theta[i];
                        self.cos_theta[i] * h[i] - s * s * ht[i]
                    })
                    .collect(),
                _ => {
                    let htt = mul(&self.dtt_mat, &h);
                    (0..nt)
                        .map(|i| {
                            let s = self.sin_theta[i];
                            let c = self.cos_theta[i];
                            -s * h[i] - 3.0 * s * c * ht[i] + s * s * s * htt[i]
                        })
                        .collect()
                }
            }
        }
    }

    /// Spectral `∂_φ` (order 1) or `∂²_φ` (order 2) along rows via the
    /// discrete Fourier series.
    pub fn spectral_dphi(&self, f: &[f64], order: u32) -> Vec<f64> {
        assert!(order == 1 || order == 2);
        assert_eq!(f.len(), self.node_count());
        let np = self.n_phi;
        let m_max = np / 2;
        let mut out = vec![0.0; f.len()];
        let inv = 2.0 / np as f64;
        for i in 0..self.n_theta {
            let row = &f[i * np..(i + 1) * np];
            for m in 0..=m_max {
                let mut a = 0.0;
                let mut b = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    let arg = m as f64 * self.phi[j];
                    a += v * arg.cos();
                    b += v * arg.sin();
                }
                let scale = if m == 0 || m == m_max { inv / 2.0 } else { inv };
                a *= scale;
                b *= scale;
                if m == 0 {
                    continue;
                }
                let mf = m as f64;
                for j in 0..np {
                    let arg = mf * self.phi[j];
                    let term = match order {
                        1 => {
                            if m == m_max {
                                // Nyquist cosine mode has zero first
                                // derivative at the nodes.
                                mf * b * arg.cos()
                            } else {
                                mf * (-a * arg.sin() + b * arg.cos())
                            }
                        }
                        _ => -mf * mf * (a * arg.cos() + b * arg.sin()),
                    };
                    out[i * np + j] += term;
                }
            }
        }
        out
    }

    /// Parity-aware energy spectrum of a component field. Each φ-Fourier
    /// mode is reduced to its polynomial profile `q(t)` (the `sin θ` parity
    /// factor stripped per `shift`, exactly as in [`Self::spectral_dtheta`])
    /// and expanded in orthonormal Legendre polynomials. Entry `d` collects
    /// squared coefficients of effective degree `d = max(deg q + parity, m)`;
    /// resolved smooth fields leave the top entries at roundoff while
    /// grid-scale oscillation fills them. Raw tensor components are not
    /// scalars on the sphere, so a plain harmonic analysis would misreport
    /// perfectly smooth tensors as rough.
    pub fn mode_energy_spectrum(&self, f: &[f64], shift: usize) -> Vec<f64> {
        assert!(shift <= 1);
        assert_eq!(f.len(), self.node_count());
        let nt = self.n_theta;
        let np = self.n_phi;
        let m_max = np / 2;
        let inv = 2.0 / np as f64;
        // Orthonormal Legendre values: leg[n * nt + i] = √(n + ½) P_n(t_i).
        let mut leg = vec![0.0; nt * nt];
        for i in 0..nt {
            let t = self.cos_theta[i];
            let mut prev = 1.0;
            let mut cur = t;
            leg[i] = 0.5f64.sqrt();
            if nt > 1 {
                leg[nt + i] = 1.5f64.sqrt() * t;
            }
            for n in 1..nt - 1 {
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0) * t * cur - nf * prev) / (nf + 1.0);
                prev = cur;
                cur = next;
                leg[(n + 1) * nt + i] = (nf + 1.5).sqrt() * cur;
            }
        }
        let mut spectrum = vec![0.0; nt.max(m_max) + 1];
        let mut profile = vec![0.0; nt];
        for m in 0..=m_max {
            let scale = if m == 0 || m == m_max { inv / 2.0 } else { inv };
            let weight = if m == 0 { 2.0 } else { 1.0 } * std::f64::consts::PI;
            let parity = (m + shift) % 2;
            for trig in 0..2 {
                if trig == 1 && (m == 0 || m == m_max) {
                    continue;
                }
                for i in 0..nt {
                    let row = &f[i * np..(i + 1) * np];
                    let mut acc = 0.0;
                    for (j, &v) in row.iter().enumerate() {
                        let arg = m as f64 * self.phi[j];
                        acc += v * if trig == 0 { arg.cos() } else { arg.sin() };
                    }
                    profile[i] = acc * scale;
                    if parity == 1 {
                        profile[i] /= self.sin_theta[i];
                    }
                }
                for n in 0..nt {
                    let mut c = 0.0;
                    for i in 0..nt {
                        c += self.gl_weight[i] * profile[i] * leg[n * nt + i];
                    }
                    let d = (n + parity).max(m);
                    spectrum[d] += weight * c * c;
                }
            }
        }
        spectrum
    }

    /// Sum `Σ w_n f_n g_n` over nodes with the area weights already folded
    /// into `w`; helper for weighted least squares.
    pub fn weighted_dot(&self, f: &[f64], g: &[f64]) -> f64 {
        let prod: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        pairwise_sum(&prod)
    }

    /// Mean of a field against the round measure.
    pub fn round_mean(&self, values: &[f64]) -> f64 {
        self.integrate_round(values) / (4.0 * std::f64::consts::PI)
    }

    /// Unit radial direction at node `(i, j)`.
    #[inline]
    pub fn radial(&self, i: usize, j: usize) -> [f64; 3] {
        [
            self.sin_theta[i] * self.phi[j].cos(),
            self.sin_theta[i] * self.phi[j].sin(),
            self.cos_theta[i],
        ]
    }

    pub fn require_same(&self, other: &SphereGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: ({}, {}) vs ({}, {})",
                self.n_theta, self.n_phi, other.n_theta, other.n_phi
            )));
        }
        Ok(())
    }
}

/// Barycentric Lagrange differentiation matrices in `θ` on the Gauss rows.
///
/// For Gauss-Legendre nodes the barycentric weights are
/// `w_i ∝ (-1)^i sqrt((1 - t_i²) λ_i)` with `λ_i` the quadrature weights,
/// which avoids the overflow-prone product formula.
fn barycentric_t_matrices(cos_theta: &[f64], gl_weight: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = cos_theta.len();
    let t: Vec<f64> = cos_theta.to_vec();
    let mut bw = Vec::with_capacity(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        bw.push(sign * ((1.0 - t[i] * t[i]) * gl_weight[i]).sqrt());
    }
    // First derivative in t.
    let mut dt = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bw[j] / bw[i]) / (t[i] - t[j]);
                dt[i * n + j] = v;
                diag -= v;
            }
        }
        dt[i * n + i] = diag;
    }
    // Second derivative in t via the standard barycentric recursion.
    let mut dtt = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = 2.0 * dt[i * n + i] * dt[i * n + j]
                    - 2.0 * dt[i * n + j] / (t[i] - t[j]);
                dtt[i * n + j] = v;
                diag -= v;
            }
        }
        dtt[i * n + i] = diag;
    }
    (dt, dtt)
}

/// Convenience: integrate a product of pre-weighted samples (used by tests).
pub fn dot(f: &[f64], g: &[f64]) -> f64 {
    pairwise_dot(f, g)
}
