//! Small fixed-size tensor helpers shared by every module.

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Symmetric 2x2 tensor on a parametrized surface, components in the
/// coordinate frame `(∂_θ, ∂_φ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sym2 {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { tt: 0.0, tp: 0.0, pp: 0.0 };

    pub fn det(&self) -> f64 {
        self.tt * self.pp - self.tp * self.tp
    }

    /// Inverse of a positive definite component matrix.
    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2 { tt: self.pp / d, tp: -self.tp / d, pp: self.tt / d }
    }

    /// `γ^{ab} v_a w_b` for covectors `v`, `w` when `self` is the inverse metric.
    pub fn pair(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        self.tt * v[0] * w[0] + self.tp * (v[0] * w[1] + v[1] * w[0]) + self.pp * v[1] * w[1]
    }

    /// Trace of the symmetric tensor `other` against `self` as inverse metric.
    pub fn trace_against(&self, other: &Sym2) -> f64 {
        self.tt * other.tt + 2.0 * self.tp * other.tp + self.pp * other.pp
    }
}

/// Deterministic pairwise (tree) summation.
///
/// The reduction order depends only on the slice length, so results are
/// reproducible across runs and thread counts, and the rounding error grows
/// like `O(log n)` instead of `O(n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Dot product of `f` and `w` with pairwise reduction.
pub fn pairwise_dot(f: &[f64], w: &[f64]) -> f64 {
    assert_eq!(f.len(), w.len(), "pairwise_dot length mismatch");
    const BASE: usize = 32;
    if f.len() <= BASE {
        let mut acc = 0.0;
        for i in 0..f.len() {
            acc += f[i] * w[i];
        }
        return acc;
    }
    let mid = f.len() / 2;
    pairwise_dot(&f[..mid], &w[..mid]) + pairwise_dot(&f[mid..], &w[mid..])
}
