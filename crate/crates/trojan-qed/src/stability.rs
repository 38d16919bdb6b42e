//! Linear stability of the rotating-frame equilibria: analytic Jacobian,
//! eigenfrequencies, and the stable/unstable map in the R–r₀ plane.
//!
//! Stability is decided by direct numerical eigen-decomposition of the
//! analytically assembled 10×10 Jacobian. The spectrum always contains a
//! zero mode (rotational symmetry) and a decoupled z-mode pair ±i√(q̃/r₀³),
//! which are used as structural checks. The Jacobian mixes entries spanning
//! ~12 orders of magnitude at physical detunings, so it is balanced before
//! the eigen-solve.

use nalgebra::SMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cavity::{derive_mode_constants, CavityConfig, UnitKind};
use crate::dynamics::{equilibrium_state, Branch, Equilibrium, SystemParams};
use crate::error::Error;
use crate::Result;

type Mat10 = SMatrix<f64, 10, 10>;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Tolerance separating the symmetry zero mode from slow instabilities,
/// and deciding whether an eigenvalue counts as purely imaginary.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Linearization of the dynamics at an equilibrium.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    /// ∂(state-derivative)/∂(state), rows/columns ordered
    /// (x, y, z, px, py, pz, Q₊, Q₋, P₊, P₋).
    pub jacobian: Mat10,
    /// Spectrum of the Jacobian.
    pub eigenvalues: Vec<Complex64>,
    /// q_r = q̃/r₀³.
    pub q_r: f64,
}

/// Outcome of the eigenfrequency classification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityVerdict {
    /// True iff every non-zero-mode eigenvalue has |Re λ| below tolerance.
    pub stable: bool,
    /// Largest |Re λ| over non-zero-mode eigenvalues.
    pub max_real_part: f64,
    /// Count of eigenvalues with |λ| below tolerance.
    pub zero_modes: usize,
    /// |Im λ| of the z-mode pair (expected √(q̃/r₀³)).
    pub z_mode_freq: f64,
}

/// Analytic Jacobian of the evolution equations at `state`.
///
/// Only the Coulomb block depends on the state; the rotation and coupling
/// blocks are constant. Valid at any phase-space point, not just equilibria.
pub fn jacobian_at(s: &crate::dynamics::PhaseState, p: &SystemParams) -> Result<Mat10> {
    let r = s.r();
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    let kappa = p.kappa();
    let g = p.gamma / SQRT2;
    let pos = [s.x, s.y, s.z];
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    // Hessian of the Coulomb force: ∂/∂xⱼ(−q̃ xᵢ/r³) = −q̃(δᵢⱼ/r³ − 3xᵢxⱼ/r⁵).
    let mut hess = [[0.0_f64; 3]; 3];
    for (i, xi) in pos.iter().enumerate() {
        for (j, xj) in pos.iter().enumerate() {
            let delta = if i == j { 1.0 / r3 } else { 0.0 };
            hess[i][j] = -p.q_tilde * (delta - 3.0 * xi * xj / r5);
        }
    }
    let mut j = Mat10::zeros();
    // ẋ = pₓ + κy, ẏ = p_y − κx, ż = p_z.
    j[(0, 3)] = 1.0;
    j[(0, 1)] = kappa;
    j[(1, 4)] = 1.0;
    j[(1, 0)] = -kappa;
    j[(2, 5)] = 1.0;
    // ṗ = Coulomb Hessian + field coupling + rotation.
    for col in 0..3 {
        j[(3, col)] = hess[0][col];
        j[(4, col)] = hess[1][col];
        j[(5, col)] = hess[2][col];
    }
    j[(3, 8)] = g;
    j[(3, 9)] = g;
    j[(3, 4)] = kappa;
    j[(4, 7)] = g;
    j[(4, 6)] = -g;
    j[(4, 3)] = -kappa;
    // Q̇₊ = (1+κ)P₊ − γx/√2, Q̇₋ = (1−κ)P₋ − γx/√2.
    j[(6, 8)] = 1.0 + kappa;
    j[(6, 0)] = -g;
    j[(7, 9)] = -p.kappa_m1;
    j[(7, 0)] = -g;
    // Ṗ₊ = −(1+κ)Q₊ − γy/√2, Ṗ₋ = −(1−κ)Q₋ + γy/√2.
    j[(8, 6)] = -(1.0 + kappa);
    j[(8, 1)] = -g;
    j[(9, 7)] = p.kappa_m1;
    j[(9, 1)] = g;
    Ok(j)
}

/// Osborne balancing: diagonal similarity scaling by powers of two so row
/// and column norms match. Leaves the spectrum exactly invariant.
fn balance(a: &mut Mat10) {
    const RADIX: f64 = 2.0;
    loop {
        let mut converged = true;
        for i in 0..10 {
            let mut c: f64 = (0..10).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..10).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..10 {
                    a[(i, j)] /= f;
                }
                for j in 0..10 {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            return;
        }
    }
}

/// Expand the dynamics around an equilibrium and compute the spectrum.
pub fn linearize(eq: &Equilibrium) -> Result<LinearizedSystem> {
    let jacobian = jacobian_at(&eq.state, &eq.params)?;
    let mut balanced = jacobian;
    balance(&mut balanced);
    let eigenvalues = balanced.complex_eigenvalues().iter().copied().collect();
    Ok(LinearizedSystem { jacobian, eigenvalues, q_r: eq.params.q_r() })
}

/// Classify the spectrum with the default tolerance.
pub fn eigenfrequencies(lin: &LinearizedSystem) -> StabilityVerdict {
    eigenfrequencies_with_tol(lin, DEFAULT_TOL)
}

/// Classify the spectrum: identify the zero mode and the z-mode pair, and
/// judge stability by the real parts of the remaining eigenvalues.
pub fn eigenfrequencies_with_tol(lin: &LinearizedSystem, tol: f64) -> StabilityVerdict {
    let zero_modes = lin.eigenvalues.iter().filter(|l| l.norm() < tol).count();
    let max_real_part = lin
        .eigenvalues
        .iter()
        .filter(|l| l.norm() >= tol)
        .map(|l| l.re.abs())
        .fold(0.0, f64::max);
    let target = lin.q_r.sqrt();
    let z_mode_freq = lin
        .eigenvalues
        .iter()
        .map(|l| l.im.abs())
        .min_by(|a, b| {
            (a - target).abs().partial_cmp(&(b - target).abs()).unwrap()
        })
        .unwrap_or(f64::NAN);
    StabilityVerdict { stable: max_real_part < tol, max_real_part, zero_modes, z_mode_freq }
}

/// Grid specification for [`stability_map`]: cavity radius R against the
/// equilibrium radius r₀ (in units of 3600 a₀) at fixed cavity length.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MapSpec {
    /// Cavity radius range (m), inclusive.
    pub r_cavity: (f64, f64),
    /// Equilibrium radius range in units of 3600 a₀, inclusive.
    pub r0_units: (f64, f64),
    /// Grid counts (R cells, r₀ cells).
    pub grid: (usize, usize),
    /// Fixed cavity length (m).
    pub l_cavity: f64,
}

/// One cell of the stability map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MapCell {
    /// Cavity radius (m).
    pub r_cavity: f64,
    /// Equilibrium radius in units of 3600 a₀.
    pub r0_units: f64,
    /// None where no equilibrium can be derived (marked `undefined`).
    pub verdict: Option<StabilityVerdict>,
}

/// Stability scan over the R–r₀ plane plus the extracted boundary polyline.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityMap {
    pub spec: MapSpec,
    /// Row-major cells: index = iR·n_r0 + ir0.
    pub cells: Vec<MapCell>,
    /// Boundary points (R, r₀-in-3600a₀) at stable/unstable sign changes
    /// along each column of constant R.
    pub boundary: Vec<(f64, f64)>,
}

fn cell_verdict(r_cavity: f64, r0_units: f64, l_cavity: f64) -> Option<StabilityVerdict> {
    let cfg = CavityConfig::new(r_cavity, l_cavity).ok()?;
    let mc = derive_mode_constants(&cfg).ok()?;
    let r0_nat = mc.to_natural(r0_units * 3600.0 * cfg.constants.a0, UnitKind::Length);
    let p = SystemParams::from_geometry(mc.q_tilde, mc.gamma, r0_nat, Branch::Trojan).ok()?;
    let eq = equilibrium_state(&p, 0.0).ok()?;
    let lin = linearize(&eq).ok()?;
    Some(eigenfrequencies(&lin))
}

/// Scan the R–r₀ plane in parallel; each cell derives the cavity constants,
/// takes the Trojan branch κ = Ω>(r₀)/ω, and classifies the equilibrium.
pub fn stability_map(spec: &MapSpec) -> Result<StabilityMap> {
    let (n_r, n_r0) = spec.grid;
    if n_r < 2 || n_r0 < 2 {
        return Err(Error::Domain("stability map needs at least a 2×2 grid".into()));
    }
    if !(spec.r_cavity.0 > 0.0 && spec.r0_units.0 > 0.0 && spec.l_cavity > 0.0) {
        return Err(Error::Domain("stability map ranges must be positive".into()));
    }
    let r_at = |i: usize| {
        spec.r_cavity.0 + (spec.r_cavity.1 - spec.r_cavity.0) * i as f64 / (n_r - 1) as f64
    };
    let r0_at = |j: usize| {
        spec.r0_units.0 + (spec.r0_units.1 - spec.r0_units.0) * j as f64 / (n_r0 - 1) as f64
    };
    let cells: Vec<MapCell> = (0..n_r * n_r0)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_r0, idx % n_r0);
            let (r_cavity, r0_units) = (r_at(i), r0_at(j));
            MapCell { r_cavity, r0_units, verdict: cell_verdict(r_cavity, r0_units, spec.l_cavity) }
        })
        .collect();

    let mut boundary = Vec::new();
    for i in 0..n_r {
        for j in 0..n_r0 - 1 {
            let a = &cells[i * n_r0 + j];
            let b = &cells[i * n_r0 + j + 1];
            if let (Some(va), Some(vb)) = (&a.verdict, &b.verdict) {
                if va.stable != vb.stable {
                    boundary.push((a.r_cavity, 0.5 * (a.r0_units + b.r0_units)));
                }
            }
        }
    }
    Ok(StabilityMap { spec: *spec, cells, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhaseState;
    use approx::assert_abs_diff_eq;

    const QT: f64 = 4.586_475e2;
    const GAMMA_REF: f64 = 3.244_784e-7;

    fn reference() -> SystemParams {
        SystemParams::from_q_gamma(0.956_25, GAMMA_REF, QT).unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = SystemParams::from_q_gamma(0.9, 0.02, QT).unwrap();
        let eq = equilibrium_state(&p, 0.6).unwrap();
        let jac = jacobian_at(&eq.state, &p).unwrap();
        let h = 1e-6;
        let base = eq.state.to_array();
        for col in 0..10 {
            let mut ap = base;
            let mut am = base;
            ap[col] += h;
            am[col] -= h;
            let fp = crate::dynamics::equations_of_motion(&PhaseState::from_array(ap), &p)
                .unwrap()
                .to_array();
            let fm = crate::dynamics::equations_of_motion(&PhaseState::from_array(am), &p)
                .unwrap()
                .to_array();
            for row in 0..10 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert_abs_diff_eq!(jac[(row, col)], fd, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn z_block_is_decoupled_oscillator() {
        let p = reference();
        let eq = equilibrium_state(&p, 0.3).unwrap();
        let j = jacobian_at(&eq.state, &p).unwrap();
        assert_eq!(j[(2, 5)], 1.0);
        assert_abs_diff_eq!(j[(5, 2)], -p.q_r(), epsilon = 1e-12);
        for col in 0..10 {
            if col != 5 {
                assert_eq!(j[(2, col)], 0.0);
            }
            if col != 2 {
                assert_eq!(j[(5, col)], 0.0, "row 5 col {col}");
            }
        }
        for row in 0..10 {
            if row != 5 {
                assert_eq!(j[(row, 2)], 0.0, "col 2 row {row}");
            }
            if row != 2 {
                assert_eq!(j[(row, 5)], 0.0, "col 5 row {row}");
            }
        }
    }

    #[test]
    fn reference_point_is_stable_with_expected_modes() {
        let p = reference();
        let eq = equilibrium_state(&p, 0.0).unwrap();
        let lin = linearize(&eq).unwrap();
        let v = eigenfrequencies(&lin);
        assert!(v.stable, "max real part {:e}", v.max_real_part);
        assert!(v.max_real_part < 1e-8);
        assert!(v.zero_modes >= 2);
        assert_abs_diff_eq!(v.z_mode_freq, lin.q_r.sqrt(), epsilon = 1e-8);
        // Frozen spectrum: fast field pair at 1+κ ≈ 2 and in-plane pairs.
        let mut imag: Vec<f64> = lin.eigenvalues.iter().map(|l| l.im.abs()).collect();
        imag.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_abs_diff_eq!(imag[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(imag[2], 0.977_880_4, epsilon = 1e-6);
        assert_abs_diff_eq!(imag[4], 0.950_038_9, epsilon = 1e-6);
        assert_abs_diff_eq!(imag[6], 0.375_734_1, epsilon = 1e-6);
    }

    #[test]
    fn spectrum_symmetry_quadruples() {
        let p = SystemParams::from_q_gamma(0.93, 0.01, QT).unwrap();
        let lin = linearize(&equilibrium_state(&p, 0.0).unwrap()).unwrap();
        for l in &lin.eigenvalues {
            let has_neg = lin.eigenvalues.iter().any(|m| (m + l).norm() < 1e-8);
            let has_conj = lin.eigenvalues.iter().any(|m| (m - l.conj()).norm() < 1e-8);
            assert!(has_neg && has_conj, "eigenvalue {l} lacks symmetry partners");
        }
    }

    #[test]
    fn verdict_invariant_under_phi() {
        let p = reference();
        let v0 = eigenfrequencies(&linearize(&equilibrium_state(&p, 0.0).unwrap()).unwrap());
        for phi in [0.9, 2.2, 4.5] {
            let v = eigenfrequencies(&linearize(&equilibrium_state(&p, phi).unwrap()).unwrap());
            assert_eq!(v.stable, v0.stable);
            assert_abs_diff_eq!(v.z_mode_freq, v0.z_mode_freq, epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_rotation_preserves_eigenvalue_multiset() {
        let p = SystemParams::from_q_gamma(0.9, 0.02, QT).unwrap();
        let l0 = linearize(&equilibrium_state(&p, 0.0).unwrap()).unwrap();
        let l1 = linearize(&equilibrium_state(&p, 1.1).unwrap()).unwrap();
        for l in &l0.eigenvalues {
            // Numerical zero modes (|λ| below the spectral tolerance) are
            // pure round-off and do not reproduce between rotations.
            if l.norm() < 1e-8 {
                continue;
            }
            let matched = l1.eigenvalues.iter().any(|m| (m - l).norm() < 1e-8);
            assert!(matched, "eigenvalue {l} not found after rotation");
        }
    }

    #[test]
    fn gamma_zero_field_block_decouples() {
        let p = SystemParams::from_geometry(QT, 0.0, 6.0, Branch::Trojan).unwrap();
        let lin = linearize(&equilibrium_state(&p, 0.0).unwrap()).unwrap();
        let kappa = p.kappa();
        for target in [1.0 + kappa, (1.0 - kappa).abs()] {
            let found = lin
                .eigenvalues
                .iter()
                .filter(|l| (l.im.abs() - target).abs() < 1e-9 && l.re.abs() < 1e-9)
                .count();
            assert!(found >= 2, "missing field pair at ±i{target}");
        }
    }

    #[test]
    fn gamma_to_zero_window_boundary_near_eight_ninths() {
        // With a small coupling, the q-window of stability should open just
        // above q = 8/9, matching the externally driven case.
        let gamma = 1e-4;
        let classify = |q: f64| {
            let p = SystemParams::from_q_gamma(q, gamma, QT).unwrap();
            eigenfrequencies(&linearize(&equilibrium_state(&p, 0.0).unwrap()).unwrap()).stable
        };
        assert!(!classify(0.85));
        assert!(!classify(0.8888));
        assert!(classify(0.8890));
        assert!(classify(0.95));
        assert!(classify(0.9999));
    }

    #[test]
    fn small_map_contains_stable_reference_cell() {
        let spec = MapSpec {
            r_cavity: (0.30e-2, 0.34e-2),
            r0_units: (0.9, 1.1),
            grid: (3, 3),
            l_cavity: 1.0e-2,
        };
        let map = stability_map(&spec).unwrap();
        assert_eq!(map.cells.len(), 9);
        // Center cell ≈ (0.32 cm, 3600 a0): the operating point, stable.
        let center = &map.cells[4];
        assert!(center.verdict.expect("defined").stable);
    }
}
