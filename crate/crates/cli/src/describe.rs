//! Registry of functionals, catalog entries, and conventions for the
//! `describe` verb. Entries state the defining formula, the hypotheses, and
//! this artifact's normalization choices.

use anyhow::{bail, Result};

struct Entry {
    name: &'static str,
    aliases: &'static [&'static str],
    text: &'static str,
}

const REGISTRY: &[Entry] = &[
    Entry {
        name: "brown-york",
        aliases: &["by", "m_by", "brown_york"],
        text: "Brown-York quasilocal mass
  m_BY = (1/8pi) \u{222b}_\u{3a3} (H\u{2080} - H) d\u{3c3}
H is the physical mean curvature of \u{3a3} (outward normal; a round sphere of
radius r in flat space has H = 2/r > 0). H\u{2080} is the mean curvature of the
isometric embedding of (\u{3a3}, \u{3b3}) into Euclidean 3-space (Weyl problem: needs
Gauss curvature K > 0). Hypothesis: H > 0. Reports carry the raw integral
and the normalized value raw/8pi; on the Schwarzschild slice of mass m a
coordinate sphere of radius r gives r(1 - sqrt(1 - 2m/r)).
Reference: Brown & York, Phys. Rev. D 47 (1993) 1407.",
    },
    Entry {
        name: "kijowski-liu-yau",
        aliases: &["kly", "m_kly", "liu-yau"],
        text: "Kijowski-Liu-Yau quasilocal mass
  m_KLY = (1/8pi) \u{222b}_\u{3a3} (H\u{2080} - sqrt(H\u{b2} - (tr_\u{3a3} k)\u{b2})) d\u{3c3}
Hypothesis: H > |tr_\u{3a3} k| (spacelike mean curvature vector). Nodes that
violate it contribute the clamped value sqrt(max(H\u{b2} - (tr_\u{3a3} k)\u{b2}, 0)) and
are counted in the report, never extrapolated. Coincides with the Wang-Yau
energy at time function tau = 0.
References: Kijowski, Gen. Relativ. Gravit. 29 (1997) 307; Liu & Yau,
Phys. Rev. Lett. 90 (2003) 231102.",
    },
    Entry {
        name: "w",
        aliases: &["m_w", "w-functional"],
        text: "W functional
  W = (1/8pi) \u{222b}_\u{3a3} (H\u{2080} - (H - |pi(nu,.)|)) d\u{3c3},   pi = k - (tr k) g
|pi(nu,.)|\u{b2} = (tr_\u{3a3} k)\u{b2} + \u{3b3}^{ab} \u{3c9}_a \u{3c9}_b with \u{3c9}_a = k(nu, e_a).
Hypothesis: H > |pi(nu,.)|. Pointwise H - |pi(nu,.)| <= sqrt(H\u{b2} - (tr_\u{3a3} k)\u{b2})
<= H, so W >= m_KLY >= m_BY integrand by integrand; the masses task reports
all three side by side.",
    },
    Entry {
        name: "wang-yau",
        aliases: &["wy", "e_wy", "wang_yau"],
        text: "Wang-Yau quasilocal energy E_WY(tau)
Reference term: embed gamma_hat = gamma + d tau (x) d tau isometrically into
Euclidean 3-space and integrate its mean curvature against the hatted area
element. Physical term: minimize
  \u{222b} (a cosh(phi) + b sinh(phi) + d phi(grad tau) + omega(grad tau)) d sigma
over boost gauges phi, with a = H sqrt(1+|grad tau|\u{b2}) and
b = tr_\u{3a3} k sqrt(1+|grad tau|\u{b2}) - the infimum of the generalized mean
curvature over normal frames. E_WY = (reference - physical)/8pi. At tau = 0
this reduces to m_KLY. Hypotheses: H > |tr_\u{3a3} k|, and gamma_hat must pass
the Weyl condition. The scene task takes tau as real spherical-harmonic
coefficients of length (L+1)\u{b2}.
References: Wang & Yau, Phys. Rev. Lett. 102 (2009) 021101; Commun. Math.
Phys. 288 (2009) 919.",
    },
    Entry {
        name: "x-energy",
        aliases: &["x", "x_modified", "x-modified"],
        text: "X-modified energy
  E_X = (1/8pi) \u{222b}_\u{3a3} (H\u{2080} - (H - <X, nu>_g)) d\u{3c3}
for an auxiliary vector field X (scene spec: \"zero\", { radial = c } for
c*x, or { constant = [vx, vy, vz] }). Interior hypothesis:
R + 2 div X - 2|X|\u{b2} >= 0; boundary hypothesis: H > <X, nu>_g. X = 0
recovers Brown-York. The masses task appends these columns when the scene
supplies a field; vector_field_hypotheses checks the interior condition
over a declared region.",
    },
    Entry {
        name: "adm",
        aliases: &["adm-energy", "adm_energy"],
        text: "ADM energy-momentum
  E   = (1/16pi) lim_{r->inf} \u{222b}_{S_r} (\u{2202}_i g_ij - \u{2202}_j g_ii) nu^j dA
  P_j = (1/8pi)  lim_{r->inf} \u{222b}_{S_r} pi_ij nu^i dA
Both integrals use the Euclidean normal and area element on coordinate
spheres; the limit is Richardson-extrapolated in 1/r over the outermost
shells. Library entry point: adm_energy_momentum (catalog data only, since
shells need jets at arbitrary points). ADM mass sqrt(E\u{b2} - |P|\u{b2}) is reported
with a validity flag.
Reference: Arnowitt, Deser & Misner, Phys. Rev. 122 (1961) 997.",
    },
    Entry {
        name: "flow",
        aliases: &["extension", "shi-tam", "quasispherical"],
        text: "Rotationally symmetric extension flow
Exterior ansatz u(r)\u{b2} dr\u{b2} + r\u{b2} dOmega\u{b2} on r >= r\u{2080}; scalar flatness reduces
to u' = u(1 - u\u{b2})/(2r), solved exactly through the conserved Misner-Sharp
parameter m = (r/2)(1 - u\u{207b}\u{b2}). The leaf quantity Q(r) = r(1 - 1/u(r)) is
non-increasing (dQ/dr = -(s-1)\u{b2}/(2s), s = 1/u) and Q(r) -> m: the extension
energy. Surface seeding: u = H\u{2080}/(H - <X, nu>) pointwise and the flux mean
u = \u{222b}H\u{2080} d\u{3c3} / \u{222b}(H - <X, nu>) d\u{3c3}, which makes the seeded Q(r\u{2080}) match the
(X-modified) Brown-York value on round leaves. Artifacts: a leaves table
(radius, u, Q, H, area) and a JSON summary with the extension energy and
monotonicity/derivative checks.
Reference: Shi & Tam, J. Differential Geom. 62 (2002) 79.",
    },
    Entry {
        name: "lambda",
        aliases: &["lambda_of_d"],
        text: "lambda(d) = (n sqrt(sigma)/2) * tan(n sqrt(sigma) d / 2)
Comparison slope for an energy floor sigma >= 0 in ambient dimension n.
Domain: d < pi/(sqrt(sigma) n), the tangent pole; at or beyond it the
comparison solution ceases to exist, lambda is undefined, and the shield
threshold Psi becomes infinite. lambda(0) = 0, and lambda is identically 0
when sigma = 0. Example: lambda(sigma=1, n=3, d=pi/6) = 3/2.",
    },
    Entry {
        name: "psi",
        aliases: &["psi_threshold"],
        text: "Psi(d, l) = (2/n) * lambda(d) / (1 - l * lambda(d))
Mean-curvature threshold of the shield construction. Finite branch requires
d < pi/(sqrt(sigma) n) and l < 1/lambda(d); otherwise Psi = +infinity, which
is a legitimate value (the boundary condition it governs becomes vacuous),
never an error. Example: Psi(sigma=1, n=3, d=pi/6, l=1/3) = 2.",
    },
    Entry {
        name: "shield",
        aliases: &["shield_check"],
        text: "Dominant-energy shield
Nested bodies U\u{2080} \u{2283} U\u{2081} \u{2283} U\u{2082} with d = dist(\u{2202}U\u{2082}, \u{2202}U\u{2081}) and
l = dist(\u{2202}U\u{2081}, \u{2202}U\u{2080}). The check reports three margins:
  (1) mu - |J| >= 0 on U\u{2080};
  (2) mu - |J| >= sigma n (n-1) on the annulus U\u{2081} \\ U\u{2082};
  (3) min over \u{2202}U\u{2080} of (H - |pi(nu,.)|_T) > -Psi(d, l).
The scene task takes sigma, n, d, l, and optionally a boundary surface plus
two sample regions (all three together); given thresholds alone it reports
lambda and Psi. Distances d and l are user inputs, echoed, not measured.",
    },
    Entry {
        name: "fillin",
        aliases: &["fill-in", "fillin_f", "f"],
        text: "Fill-in obstruction quantities
Bartnik boundary data (gamma, alpha, H, beta) on S\u{b2} induce
  f = sqrt((tr_\u{3a3} alpha)\u{b2} + |beta|\u{b2}_gamma);
for data induced from a surface in an initial data set, f = |pi(nu,.)|.
The report evaluates the integral criterion \u{222b}(H - f) d mu_gamma > h\u{2080} and
the pointwise criterion H - f >= C\u{2080} for user-supplied thresholds (they are
mandatory: the statements behind the report are existential in them), plus
spectral tail diagnostics for the regularity of alpha and beta. Boundary
topology and isotopy-class hypotheses are echoed as assumed, not checked.",
    },
    Entry {
        name: "bartnik",
        aliases: &["record", "bartnik-record"],
        text: "Bartnik boundary record (text format)
  qlm-bartnik 1
  <n_theta> <n_phi>
  label <name>
  <gamma_tt gamma_tp gamma_pp alpha_tt alpha_tp alpha_pp H beta_t beta_p>
One node line per grid point, theta-major; components in the (d_theta,
d_phi) frame. Produced by fillin = { surface = ..., export_record = true }
and consumed by fillin = { record = \"file\" }.",
    },
    Entry {
        name: "flat",
        aliases: &[],
        text: "Catalog entry: flat
Euclidean slice of Minkowski space: g = delta, k = 0; no parameters.
mu = 0, J = 0 everywhere, and every mass functional vanishes on every
admissible surface. Useful as the zero baseline for convergence checks.",
    },
    Entry {
        name: "schwarzschild_slice",
        aliases: &["schwarzschild"],
        text: "Catalog entry: schwarzschild_slice
Time-symmetric Schwarzschild exterior slice in areal coordinates:
  g_ij = delta_ij + (2m / (r\u{b2}(r - 2m))) x_i x_j,   k = 0,   chart r > 2m.
Parameter: m > 0. Coordinate spheres of radius r have
m_BY = r(1 - sqrt(1 - 2m/r)); the ADM energy is m with zero momentum.",
    },
    Entry {
        name: "cmc_hyperboloid",
        aliases: &["hyperboloid", "cmc"],
        text: "Catalog entry: cmc_hyperboloid
Constant-mean-curvature hyperboloidal slice of Minkowski space:
  g_ij = delta_ij - x_i x_j / (a\u{b2} + r\u{b2}),   k = g / a   (tr_g k = 3/a).
Parameter: a > 0. Vacuum data (mu = 0, J = 0, DEC margin 0); coordinate
spheres have tr_\u{3a3} k = 2/a, so the KLY/W/Wang-Yau functionals are exercised
with nonzero momentum while Brown-York sees a non-flat intrinsic geometry.",
    },
    Entry {
        name: "normalization",
        aliases: &["conventions", "units"],
        text: "Conventions
Geometric units G = c = 1. Mass reports carry raw (the boundary integral)
and normalized (raw/8pi) values. Mean curvature uses the outward normal
(round spheres in flat space have H = 2/r > 0); null expansions are
theta_pm = H \u{b1} tr_\u{3a3} k; the momentum tensor is pi = k - (tr k) g; energy
and current densities are mu = (R + (tr k)\u{b2} - |k|\u{b2})/2 and J = div pi, with
dominant-energy margin mu - |J|. Area radius sqrt(|Sigma|/4pi).",
    },
    Entry {
        name: "grid",
        aliases: &["sphere-grid"],
        text: "Sphere grid
Product grid on S\u{b2}: n_theta Gauss-Legendre colatitude nodes times n_phi
uniform azimuths (n_theta >= 6, n_phi even and >= 8). Integrals use
Gauss-Legendre x trapezoidal weights (spectrally accurate for smooth
fields); tangential derivatives use spherical-harmonic synthesis of fitted
fields or sixth-order finite differences. Scene surfaces default to
grid = [32, 64].",
    },
    Entry {
        name: "scene",
        aliases: &["schema", "scenes"],
        text: "Scene files (TOML)
[data]        catalog = \"name\" with params = { ... }, or grid = \"file\"
[[surfaces]]  name plus (center, radius, grid) or (samples, fit_tol)
[[regions]]   name plus ball = { center, radius } / shell = { center,
              r_min, r_max } / box = { lo, hi } / interior = true, and
              shape = [n1, n2, n3]
[[tasks]]     ordered entries, one of: constraints, masses, embed, flow,
              shield, fillin; references must name declared surfaces or
              regions (checked at parse time)
[output]      dir, format (\"csv\" or \"json\" for tables)
[tolerances]  embedding, dec, fit
Artifacts land in the output directory as NN_<kind>_<name>.{csv,json},
stamped with the artifact version, the scene hash, and a timestamp line.
See the project README for the full schema and examples.",
    },
];

/// Text for a topic (case-insensitive name or alias).
pub fn describe(topic: &str) -> Result<&'static str> {
    let key = topic.to_ascii_lowercase();
    for e in REGISTRY {
        if e.name == key || e.aliases.contains(&key.as_str()) {
            return Ok(e.text);
        }
    }
    let names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
    bail!("unknown topic `{topic}`; available topics: {}", names.join(", "));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_topic_and_alias_resolves() {
        for e in REGISTRY {
            assert!(describe(e.name).is_ok());
            for a in e.aliases {
                assert_eq!(describe(a).unwrap(), e.text, "alias {a}");
            }
        }
    }

    #[test]
    fn unknown_topic_lists_the_registry() {
        let err = describe("nonsense").unwrap_err().to_string();
        assert!(err.contains("psi") && err.contains("brown-york"), "{err}");
    }

    #[test]
    fn aliases_do_not_collide() {
        let mut seen = std::collections::BTreeSet::new();
        for e in REGISTRY {
            assert!(seen.insert(e.name), "duplicate {}", e.name);
            for a in e.aliases {
                assert!(seen.insert(a), "duplicate alias {a}");
            }
        }
    }
}
