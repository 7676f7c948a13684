//! Finite-difference weights on arbitrary node sets (Fornberg's recurrence)
//! and the uniform fourth-order stencils built from them.

/// Weights `w_j` such that `f^(m)(x0) ≈ Σ_j w_j f(nodes_j)`, exact for
/// polynomials of degree `nodes.len() - 1`. Nodes need not be uniform or
/// sorted but must be pairwise distinct.
pub fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(m < n, "stencil of {n} nodes cannot produce derivative order {m}");
    // B. Fornberg, "Generation of finite difference formulas on arbitrarily
    // spaced grids", Math. Comp. 51 (1988); c[k][j] holds the weight of node j
    // for derivative order k.
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.pop().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_uniform_fourth_order_first_derivative() {
        let h = 0.1;
        let nodes: Vec<f64> = (-2..=2).map(|i| i as f64 * h).collect();
        let w = fd_weights(0.0, &nodes, 1);
        let expected = [1.0 / (12.0 * h), -8.0 / (12.0 * h), 0.0, 8.0 / (12.0 * h), -1.0 / (12.0 * h)];
        for i in 0..5 {
            assert!((w[i] - expected[i]).abs() < 1e-12, "weight {i}: {} vs {}", w[i], expected[i]);
        }
    }

    #[test]
    fn reproduces_uniform_fourth_order_second_derivative() {
        let h = 0.25;
        let nodes: Vec<f64> = (-2..=2).map(|i| i as f64 * h).collect();
        let w = fd_weights(0.0, &nodes, 2);
        let hh = 12.0 * h * h;
        let expected = [-1.0 / hh, 16.0 / hh, -30.0 / hh, 16.0 / hh, -1.0 / hh];
        for i in 0..5 {
            assert!((w[i] - expected[i]).abs() < 1e-11, "weight {i}");
        }
    }

    #[test]
    fn exact_on_polynomials_for_scattered_nodes() {
        let nodes = [-0.9, -0.35, 0.02, 0.4, 1.1];
        let w = fd_weights(0.1, &nodes, 1);
        // d/dx (3x^4 - 2x^3 + x - 5) at 0.1
        let f = |x: f64| 3.0 * x.powi(4) - 2.0 * x.powi(3) + x - 5.0;
        let df = 12.0 * 0.1f64.powi(3) - 6.0 * 0.1f64.powi(2) + 1.0;
        let approx: f64 = nodes.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
        assert!((approx - df).abs() < 1e-12, "got {approx}, want {df}");
    }

    #[test]
    fn convergence_is_fourth_order_on_smooth_function() {
        // Centered five-point first derivative of sin at 0.3.
        let err = |h: f64| {
            let nodes: Vec<f64> = (-2..=2).map(|i| 0.3 + i as f64 * h).collect();
            let w = fd_weights(0.3, &nodes, 1);
            let approx: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
            (approx - 0.3f64.cos()).abs()
        };
        let e1 = err(0.1);
        let e2 = err(0.05);
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "expected ~16x reduction, got {ratio}");
    }
}
