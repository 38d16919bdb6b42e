//! Physical predictions from the Gaussian fundamental state: second
//! moments, generalized uncertainty relations, squeezing metrics, and
//! Wigner-function cross-sections of the field modes.

use nalgebra::{Matrix2, Matrix4, SMatrix};
use serde::Serialize;

use crate::error::Error;
use crate::quantum::AMatrix;
use crate::Result;

type Mat8 = SMatrix<f64, 8, 8>;

/// Phase-space coordinate order used throughout this module.
pub const COORDS: [&str; 8] = ["x", "y", "Qp", "Qm", "px", "py", "Pp", "Pm"];

/// Index constants into [`CovarianceMatrix::sigma`].
pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const QP: usize = 2;
    pub const QM: usize = 3;
    pub const PX: usize = 4;
    pub const PY: usize = 5;
    pub const PP: usize = 6;
    pub const PM: usize = 7;
}

/// Symmetric 8×8 covariance over (x, y, Q₊, Q₋, pₓ, p_y, P₊, P₋) in
/// natural units, with symmetrized cross entries ⟨ξᵢξⱼ + ξⱼξᵢ⟩/2.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub sigma: Mat8,
}

impl CovarianceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, j)]
    }

    /// Symplectic eigenvalues: the |Im λ| of the eigenvalues of Ω_symp·σ,
    /// four values each appearing as ±iν. Physical states have ν ≥ 1/2.
    pub fn symplectic_eigenvalues(&self) -> [f64; 4] {
        let mut omega = Mat8::zeros();
        for k in 0..4 {
            omega[(k, k + 4)] = 1.0;
            omega[(k + 4, k)] = -1.0;
        }
        let m = omega * self.sigma;
        let eig = m.complex_eigenvalues();
        let mut nus: Vec<f64> = eig.iter().map(|l| l.im.abs()).collect();
        nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Eigenvalues come in ± pairs; keep one of each.
        [nus[0], nus[2], nus[4], nus[6]]
    }

    /// Quantum-physicality bound σ + iΩ_symp/2 ⪰ 0, i.e. every symplectic
    /// eigenvalue ≥ 1/2 − tol.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues().iter().all(|nu| *nu >= 0.5 - tol)
    }
}

/// Second moments implied by ψ ∝ exp(−½ XᵀAX) with X = (x, y, Q₊, Q₋):
/// position block ½(Re A)⁻¹, momentum block ½(Re A + Im A (Re A)⁻¹ Im A),
/// symmetrized cross block −½(Re A)⁻¹ Im A. The sign convention is pinned
/// by a direct quadrature oracle in the test suite.
pub fn covariance_from_a(a: &AMatrix) -> Result<CovarianceMatrix> {
    let re = a.re();
    let im = a.im();
    let re_inv = re.try_inverse().ok_or(Error::NonNormalizable)?;
    if re.cholesky().is_none() {
        return Err(Error::NonNormalizable);
    }
    let pos: Matrix4<f64> = re_inv * 0.5;
    let mom: Matrix4<f64> = (re + im * re_inv * im) * 0.5;
    let cross: Matrix4<f64> = -(re_inv * im) * 0.5;
    let mut sigma = Mat8::zeros();
    for i in 0..4 {
        for j in 0..4 {
            sigma[(i, j)] = pos[(i, j)];
            sigma[(i + 4, j + 4)] = mom[(i, j)];
            sigma[(i, j + 4)] = cross[(i, j)];
            sigma[(j + 4, i)] = cross[(i, j)];
        }
    }
    Ok(CovarianceMatrix { sigma })
}

/// Electron-block moments in (r₀, mΩr₀) units and field-block moments in
/// natural units, plus the derived uncertainty and squeezing figures.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    // Electron block, Table-3 layout.
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub px_px: f64,
    pub py_py: f64,
    pub px_py: f64,
    pub x_px_sym: f64,
    pub y_py_sym: f64,
    pub x_py_sym: f64,
    pub y_px_sym: f64,
    // Field block, Table-4 layout.
    pub qp_qp: f64,
    pub qm_qm: f64,
    pub pp_pp: f64,
    pub pm_pm: f64,
    pub qp_qm: f64,
    pub pp_pm: f64,
    /// Largest |⟨QᵢPⱼ + PⱼQᵢ⟩/2| over the field modes.
    pub qp_cross_max: f64,
    pub uncertainty_lhs_x: f64,
    pub uncertainty_lhs_y: f64,
    pub uncertainty_bound: f64,
    pub saturation_x: f64,
    pub saturation_y: f64,
    pub squeezing_ratio: f64,
}

/// Unit system for electron-block quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentUnits {
    /// ħ = m = Ω = 1.
    Natural,
    /// Positions in r₀, momenta in mΩr₀; r₀ given in natural length units
    /// of the ω frame, κ = Ω/ω.
    Orbit { r0: f64, kappa: f64 },
}

impl MomentUnits {
    /// Every electron second moment divides by this scale (positions and
    /// momenta share it because mΩr₀ in natural momentum units equals r₀
    /// in natural length units).
    fn scale(&self) -> f64 {
        match self {
            MomentUnits::Natural => 1.0,
            MomentUnits::Orbit { r0, kappa } => r0 * r0 * kappa,
        }
    }
}

/// Result of the two-dimensional generalized uncertainty relations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UncertaintyReport {
    pub lhs_x: f64,
    pub lhs_y: f64,
    pub bound: f64,
    pub saturation_x: f64,
    pub saturation_y: f64,
}

/// Evaluate the two displayed two-dimensional uncertainty inequalities.
/// In natural units the bound is 1/4; in (r₀, mΩr₀) units it is
/// (ħ/(mΩr₀²))²/4.
pub fn uncertainty_check(cov: &CovarianceMatrix, units: MomentUnits) -> UncertaintyReport {
    use idx::*;
    let s = units.scale();
    let g = |i: usize, j: usize| cov.get(i, j) / s;
    // Symmetrized ⟨ab + ba⟩ = 2·σ_ab.
    let xpx = 2.0 * g(X, PX);
    let xpy = 2.0 * g(X, PY);
    let ypx = 2.0 * g(Y, PX);
    let ypy = 2.0 * g(Y, PY);
    let lhs_x = g(X, X) * g(PX, PX) + g(X, Y) * g(PX, PY) - 0.25 * (xpx * xpx + xpy * ypx);
    let lhs_y = g(Y, Y) * g(PY, PY) + g(X, Y) * g(PX, PY) - 0.25 * (ypy * ypy + ypx * xpy);
    let bound = 0.25 / (s * s);
    UncertaintyReport {
        lhs_x,
        lhs_y,
        bound,
        saturation_x: lhs_x / bound,
        saturation_y: lhs_y / bound,
    }
}

/// Squeezing figures of the two field modes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqueezingReport {
    /// ⟨Q₋Q₋⟩/⟨P₋P₋⟩.
    pub ratio_minus: f64,
    /// ⟨Q₊Q₊⟩/⟨P₊P₊⟩.
    pub ratio_plus: f64,
    /// Minimum quadrature variance of the co-rotating mode over all
    /// rotated quadratures (smaller eigenvalue of its 2×2 block).
    pub min_variance_minus: f64,
    pub min_variance_plus: f64,
    pub cross_qq: f64,
    pub cross_pp: f64,
}

pub fn squeezing_metrics(cov: &CovarianceMatrix) -> SqueezingReport {
    use idx::*;
    let block = |q: usize, p: usize| {
        Matrix2::new(cov.get(q, q), cov.get(q, p), cov.get(q, p), cov.get(p, p))
    };
    let min_eig = |b: Matrix2<f64>| {
        let tr = b.trace();
        let disc = ((b[(0, 0)] - b[(1, 1)]).powi(2) + 4.0 * b[(0, 1)] * b[(0, 1)]).sqrt();
        0.5 * (tr - disc)
    };
    SqueezingReport {
        ratio_minus: cov.get(QM, QM) / cov.get(PM, PM),
        ratio_plus: cov.get(QP, QP) / cov.get(PP, PP),
        min_variance_minus: min_eig(block(QM, PM)),
        min_variance_plus: min_eig(block(QP, PP)),
        cross_qq: cov.get(QP, QM),
        cross_pp: cov.get(PP, PM),
    }
}

/// Full moment report at the reference unit conversion.
pub fn moment_report(cov: &CovarianceMatrix, units: MomentUnits) -> MomentReport {
    use idx::*;
    let s = units.scale();
    let g = |i: usize, j: usize| cov.get(i, j);
    let u = uncertainty_check(cov, units);
    let sq = squeezing_metrics(cov);
    let qp_cross_max = [g(QP, PP), g(QP, PM), g(QM, PP), g(QM, PM)]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    MomentReport {
        xx: g(X, X) / s,
        yy: g(Y, Y) / s,
        xy: g(X, Y) / s,
        px_px: g(PX, PX) / s,
        py_py: g(PY, PY) / s,
        px_py: g(PX, PY) / s,
        x_px_sym: 2.0 * g(X, PX) / s,
        y_py_sym: 2.0 * g(Y, PY) / s,
        x_py_sym: 2.0 * g(X, PY) / s,
        y_px_sym: 2.0 * g(Y, PX) / s,
        qp_qp: g(QP, QP),
        qm_qm: g(QM, QM),
        pp_pp: g(PP, PP),
        pm_pm: g(PM, PM),
        qp_qm: g(QP, QM),
        pp_pm: g(PP, PM),
        qp_cross_max,
        uncertainty_lhs_x: u.lhs_x,
        uncertainty_lhs_y: u.lhs_y,
        uncertainty_bound: u.bound,
        saturation_x: u.saturation_x,
        saturation_y: u.saturation_y,
        squeezing_ratio: sq.ratio_minus,
    }
}

/// Which single-mode reduced state to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Plane {
    /// Counter-rotating mode (Q₊, P₊).
    QpPp,
    /// Co-rotating mode (Q₋, P₋).
    QmPm,
}

/// Evaluation grid, as offsets from the slice center.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub nq: usize,
    pub np: usize,
    /// Half-width of the Q axis; if `None`, 5 standard deviations.
    pub q_half_width: Option<f64>,
    pub p_half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nq: 101, np: 101, q_half_width: None, p_half_width: None }
    }
}

/// Reduced single-mode Wigner function on a grid. The reduction is the
/// Gaussian marginal over all other variables (the reduced state), not a
/// conditional slice; for this nearly product state the two differ only
/// by normalization. Axes are offsets from `center`, the classical
/// equilibrium quadrature values, because the equilibrium field amplitude
/// dwarfs the fluctuation scale.
#[derive(Debug, Clone, Serialize)]
pub struct WignerSlice {
    pub plane: Plane,
    /// Q-axis offsets from center.
    pub q_axis: Vec<f64>,
    /// P-axis offsets from center.
    pub p_axis: Vec<f64>,
    /// `w[i][j]` = W(q_axis[i], p_axis[j]).
    pub w: Vec<Vec<f64>>,
    /// Classical equilibrium (Q, P) of the selected mode.
    pub center: (f64, f64),
    /// Determinant of the reduced 2×2 covariance (≥ 1/4 for physical
    /// states, = 1/4 for a pure unentangled mode).
    pub det_sigma: f64,
    /// Semantics tag for serialized output.
    pub reduction: &'static str,
}

pub fn wigner_slice(
    cov: &CovarianceMatrix,
    plane: Plane,
    grid: &GridSpec,
    center: (f64, f64),
) -> Result<WignerSlice> {
    use idx::*;
    let (qi, pi) = match plane {
        Plane::QpPp => (QP, PP),
        Plane::QmPm => (QM, PM),
    };
    let s2 = Matrix2::new(cov.get(qi, qi), cov.get(qi, pi), cov.get(qi, pi), cov.get(pi, pi));
    let det = s2.determinant();
    if !(det > 0.0) {
        return Err(Error::Numerical(
            "degenerate reduced covariance: Wigner slice undefined".into(),
        ));
    }
    let inv = s2.try_inverse().ok_or_else(|| {
        Error::Numerical("degenerate reduced covariance: Wigner slice undefined".into())
    })?;
    let qw = grid.q_half_width.unwrap_or(5.0 * s2[(0, 0)].sqrt());
    let pw = grid.p_half_width.unwrap_or(5.0 * s2[(1, 1)].sqrt());
    let axis = |n: usize, w: f64| -> Vec<f64> {
        if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|k| -w + 2.0 * w * k as f64 / (n - 1) as f64).collect()
        }
    };
    let q_axis = axis(grid.nq, qw);
    let p_axis = axis(grid.np, pw);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let w = q_axis
        .iter()
        .map(|&q| {
            p_axis
                .iter()
                .map(|&p| {
                    let quad =
                        inv[(0, 0)] * q * q + 2.0 * inv[(0, 1)] * q * p + inv[(1, 1)] * p * p;
                    norm * (-0.5 * quad).exp()
                })
                .collect()
        })
        .collect();
    Ok(WignerSlice {
        plane,
        q_axis,
        p_axis,
        w,
        center,
        det_sigma: det,
        reduction: "marginal (reduced single-mode state); axes are offsets from center",
    })
}
