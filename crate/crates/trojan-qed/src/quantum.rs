//! Gaussian fundamental state of the quadratic Hamiltonian around the
//! Trojan equilibrium: the ten coupled algebraic equations for the
//! complex-structure coefficients a_ij, a damped Newton solver with
//! continuation in the rescaled coupling γ̄ = γ/√(κ−1), and the
//! perturbation expansion in γ̄.
//!
//! At physical detunings κ − 1 ~ 1e-12 the raw coefficients span twelve
//! orders of magnitude, so the solver works in rescaled variables
//!
//! ```text
//! a13 = γ̄√ε·b13   a14 = γ̄√ε·b14   a23 = γ̄√ε·b23   a24 = γ̄√ε·b24
//! a34 = γ̄²ε·b34                    (ε = κ − 1, τ = γ̄²)
//! ```
//!
//! in which the system is ε-free to leading order and perfectly conditioned;
//! the public residuals are on the unscaled coefficients.

use nalgebra::{Matrix4, SMatrix, SVector};
use serde::Serialize;

use crate::dynamics::SystemParams;
use crate::error::Error;
use crate::Result;

type Vec10 = SVector<f64, 10>;
type Mat10 = SMatrix<f64, 10, 10>;

const W: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Parameters of the quadratic Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticParams {
    /// Coulomb-to-centrifugal ratio, q ∈ (0, 1).
    pub q: f64,
    /// Detuning κ − 1 > 0 (Trojan branch).
    pub kappa_m1: f64,
    /// Atom–field coupling γ ≥ 0.
    pub gamma: f64,
}

impl QuadraticParams {
    /// From (q, γ), deriving the detuning from the consistency relation
    /// γ² = (1−q)κ²(κ²−1).
    pub fn from_q_gamma(q: f64, gamma: f64) -> Result<Self> {
        let p = SystemParams::from_q_gamma(q, gamma, 1.0)?;
        Ok(Self { q, kappa_m1: p.kappa_m1, gamma })
    }

    /// From (q, κ−1), deriving γ from the consistency relation.
    pub fn from_q_kappa_m1(q: f64, kappa_m1: f64) -> Result<Self> {
        let p = SystemParams::from_q_kappa_m1(q, kappa_m1, 1.0)?;
        Ok(Self { q, kappa_m1, gamma: p.gamma })
    }

    /// From (q, κ−1, γ̄), with γ = γ̄√(κ−1); used when γ̄ is pinned rather
    /// than derived.
    pub fn from_q_kappa_m1_gbar(q: f64, kappa_m1: f64, gamma_bar: f64) -> Result<Self> {
        if !(0.0 < q && q < 1.0 && kappa_m1 > 0.0 && gamma_bar >= 0.0) {
            return Err(Error::Domain(format!(
                "need q in (0,1), kappa-1 > 0, gamma_bar >= 0; got ({q}, {kappa_m1}, {gamma_bar})"
            )));
        }
        Ok(Self { q, kappa_m1, gamma: gamma_bar * kappa_m1.sqrt() })
    }

    /// Quoted mode: take the triple literally without the consistency
    /// relation (residual quality is then only as good as the triple).
    pub fn from_parts(q: f64, kappa_m1: f64, gamma: f64) -> Result<Self> {
        if !(0.0 < q && q < 1.0 && kappa_m1 > 0.0 && gamma >= 0.0) {
            return Err(Error::Domain(format!(
                "need q in (0,1), kappa-1 > 0, gamma >= 0; got ({q}, {kappa_m1}, {gamma})"
            )));
        }
        Ok(Self { q, kappa_m1, gamma })
    }

    pub fn kappa(&self) -> f64 {
        1.0 + self.kappa_m1
    }

    /// Rescaled coupling γ̄ = γ/√(κ−1).
    pub fn gamma_bar(&self) -> f64 {
        self.gamma / self.kappa_m1.sqrt()
    }
}

/// The ten real parameters of the complex symmetric matrix A of the
/// Gaussian ansatz over X = (x, y, Q₊, Q₋). Entries (1,2), (1,3), (1,4)
/// carry a factor i; the rest are real.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
    pub a14: f64,
    pub a22: f64,
    pub a23: f64,
    pub a24: f64,
    pub a33: f64,
    pub a34: f64,
    pub a44: f64,
}

impl AMatrix {
    /// Real part of A (normalizability is positive definiteness of this).
    pub fn re(&self) -> Matrix4<f64> {
        Matrix4::new(
            self.a11, 0.0, 0.0, 0.0,
            0.0, self.a22, self.a23, self.a24,
            0.0, self.a23, self.a33, self.a34,
            0.0, self.a24, self.a34, self.a44,
        )
    }

    /// Imaginary part of A.
    pub fn im(&self) -> Matrix4<f64> {
        Matrix4::new(
            0.0, self.a12, self.a13, self.a14,
            self.a12, 0.0, 0.0, 0.0,
            self.a13, 0.0, 0.0, 0.0,
            self.a14, 0.0, 0.0, 0.0,
        )
    }

    /// True iff Re A is positive definite (the Gaussian is normalizable).
    pub fn is_normalizable(&self) -> bool {
        self.re().cholesky().is_some()
    }
}

/// Left-hand sides of the ten stationarity equations, in the order
/// (a)–(j), evaluated on unscaled coefficients.
///
/// The equations are derived by inserting the Gaussian ansatz into the
/// stationary Schrödinger equation with the quadratic Hamiltonian; every
/// coupling enters as γ/√2, matching the γ/√2 prefactors of the
/// Hamiltonian's coupling term.
pub fn residuals(a: &AMatrix, p: &QuadraticParams) -> [f64; 10] {
    let g = p.gamma * W;
    let kap = p.kappa();
    let AMatrix { a11, a12, a13, a14, a22, a23, a24, a33, a34, a44 } = *a;
    [
        -2.0 * kap * kap * p.q - a11 * a11 + 2.0 * kap * a12 + a12 * a12 - 2.0 * g * a13
            + a13 * a13 * (1.0 + kap)
            - 2.0 * g * a14
            + a14 * a14 * (1.0 - kap),
        a11 * a12 + a12 * a22 - g * a23 + a13 * a23 - g * a24 + a14 * a24
            + kap * (-a11 + a22 + a13 * a23 - a14 * a24),
        a11 * a13 + a12 * a23 - g * a33 + a13 * a33 - g * a34 + a14 * a34
            + kap * (a23 + a13 * a33 - a14 * a34),
        a11 * a14 + a12 * a24 - g * a34 + a13 * a34 - g * a44 + a14 * a44
            + kap * (a24 + a13 * a34 - a14 * a44),
        kap * kap * p.q - 2.0 * kap * a12 + a12 * a12 - a22 * a22
            - a23 * a23 * (1.0 + kap)
            - a24 * a24 * (1.0 - kap),
        -g - kap * a13 + a12 * a13 - a22 * a23 - a23 * a33 - kap * a23 * a33 - a24 * a34
            + kap * a24 * a34,
        g - kap * a14 + a12 * a14 - a22 * a24 - a23 * a34 - kap * a23 * a34 - a24 * a44
            + kap * a24 * a44,
        1.0 + kap + a13 * a13 - a23 * a23 - a33 * a33 * (1.0 + kap) - a34 * a34 * (1.0 - kap),
        a13 * a14 - a23 * a24 - a34 * ((1.0 + kap) * a33 + (1.0 - kap) * a44),
        1.0 - kap + a14 * a14 - a24 * a24 - a44 * a44 * (1.0 - kap) - a34 * a34 * (1.0 + kap),
    ]
}

/// Analytic Jacobian of [`residuals`] with respect to the coefficient
/// vector (a11, a12, a13, a14, a22, a23, a24, a33, a34, a44).
pub fn residual_jacobian(a: &AMatrix, p: &QuadraticParams) -> [[f64; 10]; 10] {
    let g = p.gamma * W;
    let kap = p.kappa();
    let AMatrix { a11, a12, a13, a14, a22, a23, a24, a33, a34, a44 } = *a;
    let mut j = [[0.0; 10]; 10];
    // Column order matches the struct order above.
    // (a)
    j[0][0] = -2.0 * a11;
    j[0][1] = 2.0 * kap + 2.0 * a12;
    j[0][2] = -2.0 * g + 2.0 * a13 * (1.0 + kap);
    j[0][3] = -2.0 * g + 2.0 * a14 * (1.0 - kap);
    // (b)
    j[1][0] = a12 - kap;
    j[1][1] = a11 + a22;
    j[1][2] = a23 * (1.0 + kap);
    j[1][3] = a24 * (1.0 - kap);
    j[1][4] = a12 + kap;
    j[1][5] = -g + a13 * (1.0 + kap);
    j[1][6] = -g + a14 * (1.0 - kap);
    // (c)
    j[2][0] = a13;
    j[2][1] = a23;
    j[2][2] = a11 + a33 * (1.0 + kap);
    j[2][3] = a34 * (1.0 - kap);
    j[2][5] = a12 + kap;
    j[2][7] = -g + a13 * (1.0 + kap);
    j[2][8] = -g + a14 * (1.0 - kap);
    // (d)
    j[3][0] = a14;
    j[3][1] = a24;
    j[3][2] = a34 * (1.0 + kap);
    j[3][3] = a11 + a44 * (1.0 - kap);
    j[3][6] = a12 + kap;
    j[3][8] = -g + a13 * (1.0 + kap);
    j[3][9] = -g + a14 * (1.0 - kap);
    // (e)
    j[4][1] = -2.0 * kap + 2.0 * a12;
    j[4][4] = -2.0 * a22;
    j[4][5] = -2.0 * a23 * (1.0 + kap);
    j[4][6] = -2.0 * a24 * (1.0 - kap);
    // (f)
    j[5][1] = a13;
    j[5][2] = a12 - kap;
    j[5][4] = -a23;
    j[5][5] = -a22 - a33 * (1.0 + kap);
    j[5][6] = -a34 * (1.0 - kap);
    j[5][7] = -a23 * (1.0 + kap);
    j[5][8] = -a24 * (1.0 - kap);
    // (g)
    j[6][1] = a14;
    j[6][3] = a12 - kap;
    j[6][4] = -a24;
    j[6][5] = -a34 * (1.0 + kap);
    j[6][6] = -a22 - a44 * (1.0 - kap);
    j[6][8] = -a23 * (1.0 + kap);
    j[6][9] = -a24 * (1.0 - kap);
    // (h)
    j[7][2] = 2.0 * a13;
    j[7][5] = -2.0 * a23;
    j[7][7] = -2.0 * a33 * (1.0 + kap);
    j[7][8] = -2.0 * a34 * (1.0 - kap);
    // (i)
    j[8][2] = a14;
    j[8][3] = a13;
    j[8][5] = -a24;
    j[8][6] = -a23;
    j[8][7] = -a34 * (1.0 + kap);
    j[8][8] = -((1.0 + kap) * a33 + (1.0 - kap) * a44);
    j[8][9] = -a34 * (1.0 - kap);
    // (j)
    j[9][3] = 2.0 * a14;
    j[9][6] = -2.0 * a24;
    j[9][8] = -2.0 * a34 * (1.0 + kap);
    j[9][9] = -2.0 * a44 * (1.0 - kap);
    j
}

/// Converged solution of the ten equations.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub a: AMatrix,
    /// ∞-norm of the unscaled residuals at the solution.
    pub residual_norm: f64,
    /// Total Newton iterations over the continuation path.
    pub iterations: usize,
    /// Human-readable description of the continuation steps taken.
    pub seed_path: String,
}

// ---------------------------------------------------------------------------
// Rescaled internal system.
//
// Variables c = (a11, a12, a22, a33, a44, b13, b14, b23, b24, b34) with
// a13 = γ̄√ε·b13 … a34 = τε·b34, τ = γ̄². Writing κ − 1 = ε exactly keeps
// every equation O(1) down to ε ~ 1e-12.
// ---------------------------------------------------------------------------

fn rescaled_residuals(c: &Vec10, q: f64, eps: f64, tau: f64) -> Vec10 {
    let (a11, a12, a22, a33, a44) = (c[0], c[1], c[2], c[3], c[4]);
    let (b13, b14, b23, b24, b34) = (c[5], c[6], c[7], c[8], c[9]);
    let kap = 1.0 + eps;
    let kp1 = 2.0 + eps; // 1 + κ
    let km1 = -eps; // 1 − κ
    let m = tau * eps;
    Vec10::from_column_slice(&[
        -2.0 * kap * kap * q - a11 * a11 + 2.0 * kap * a12 + a12 * a12
            + m * (-2.0 * W * (b13 + b14) + kp1 * b13 * b13 + km1 * b14 * b14),
        a11 * a12 + a12 * a22 + kap * (a22 - a11)
            + m * (-W * (b23 + b24) + kp1 * b13 * b23 + km1 * b14 * b24),
        a11 * b13 + a12 * b23 + kp1 * a33 * b13 + kap * b23 - W * a33
            + m * b34 * (-W + km1 * b14),
        a11 * b14 + (a12 + kap) * b24 - W * a44 + km1 * a44 * b14
            + m * b34 * (-W + kp1 * b13),
        kap * kap * q - 2.0 * kap * a12 + a12 * a12 - a22 * a22
            + m * (-kp1 * b23 * b23 - km1 * b24 * b24),
        -W + (a12 - kap) * b13 - a22 * b23 - kp1 * a33 * b23 + eps * m * b24 * b34,
        W + (a12 - kap) * b14 - a22 * b24 + eps * a44 * b24 - kp1 * m * b23 * b34,
        kp1 * (1.0 - a33 * a33) + m * (b13 * b13 - b23 * b23) - km1 * m * m * b34 * b34,
        b13 * b14 - b23 * b24 - b34 * (kp1 * a33 + km1 * a44),
        -(1.0 - a44 * a44) + tau * (b14 * b14 - b24 * b24) - tau * m * kp1 * b34 * b34,
    ])
}

fn rescaled_jacobian(c: &Vec10, q: f64, eps: f64, tau: f64) -> Mat10 {
    let (a11, a12, a22, a33, a44) = (c[0], c[1], c[2], c[3], c[4]);
    let (b13, b14, b23, b24, b34) = (c[5], c[6], c[7], c[8], c[9]);
    let kap = 1.0 + eps;
    let kp1 = 2.0 + eps;
    let km1 = -eps;
    let m = tau * eps;
    let _ = q;
    let mut j = Mat10::zeros();
    // Row 0: (a)
    j[(0, 0)] = -2.0 * a11;
    j[(0, 1)] = 2.0 * kap + 2.0 * a12;
    j[(0, 5)] = m * (-2.0 * W + 2.0 * kp1 * b13);
    j[(0, 6)] = m * (-2.0 * W + 2.0 * km1 * b14);
    // Row 1: (b)
    j[(1, 0)] = a12 - kap;
    j[(1, 1)] = a11 + a22;
    j[(1, 2)] = a12 + kap;
    j[(1, 5)] = m * kp1 * b23;
    j[(1, 6)] = m * km1 * b24;
    j[(1, 7)] = m * (-W + kp1 * b13);
    j[(1, 8)] = m * (-W + km1 * b14);
    // Row 2: (c)
    j[(2, 0)] = b13;
    j[(2, 1)] = b23;
    j[(2, 3)] = kp1 * b13 - W;
    j[(2, 5)] = a11 + kp1 * a33;
    j[(2, 6)] = m * b34 * km1;
    j[(2, 7)] = a12 + kap;
    j[(2, 9)] = m * (-W + km1 * b14);
    // Row 3: (d)
    j[(3, 0)] = b14;
    j[(3, 1)] = b24;
    j[(3, 4)] = -W + km1 * b14;
    j[(3, 5)] = m * b34 * kp1;
    j[(3, 6)] = a11 + km1 * a44;
    j[(3, 8)] = a12 + kap;
    j[(3, 9)] = m * (-W + kp1 * b13);
    // Row 4: (e)
    j[(4, 1)] = -2.0 * kap + 2.0 * a12;
    j[(4, 2)] = -2.0 * a22;
    j[(4, 7)] = -2.0 * m * kp1 * b23;
    j[(4, 8)] = -2.0 * m * km1 * b24;
    // Row 5: (f)
    j[(5, 1)] = b13;
    j[(5, 2)] = -b23;
    j[(5, 3)] = -kp1 * b23;
    j[(5, 5)] = a12 - kap;
    j[(5, 7)] = -a22 - kp1 * a33;
    j[(5, 8)] = eps * m * b34;
    j[(5, 9)] = eps * m * b24;
    // Row 6: (g)
    j[(6, 1)] = b14;
    j[(6, 2)] = -b24;
    j[(6, 4)] = eps * b24;
    j[(6, 6)] = a12 - kap;
    j[(6, 7)] = -kp1 * m * b34;
    j[(6, 8)] = -a22 + eps * a44;
    j[(6, 9)] = -kp1 * m * b23;
    // Row 7: (h)
    j[(7, 3)] = -2.0 * kp1 * a33;
    j[(7, 5)] = 2.0 * m * b13;
    j[(7, 7)] = -2.0 * m * b23;
    j[(7, 9)] = -2.0 * km1 * m * m * b34;
    // Row 8: (i)
    j[(8, 3)] = -kp1 * b34;
    j[(8, 4)] = -km1 * b34;
    j[(8, 5)] = b14;
    j[(8, 6)] = b13;
    j[(8, 7)] = -b24;
    j[(8, 8)] = -b23;
    j[(8, 9)] = -(kp1 * a33 + km1 * a44);
    // Row 9: (j)
    j[(9, 4)] = 2.0 * a44;
    j[(9, 6)] = 2.0 * tau * b14;
    j[(9, 8)] = -2.0 * tau * b24;
    j[(9, 9)] = -2.0 * tau * m * kp1 * b34;
    j
}

/// ∂F/∂τ of the rescaled system at fixed c (for the perturbation tangent).
fn rescaled_dtau(c: &Vec10, eps: f64, tau: f64) -> Vec10 {
    let (b13, b14, b23, b24, b34) = (c[5], c[6], c[7], c[8], c[9]);
    let kp1 = 2.0 + eps;
    let km1 = -eps;
    Vec10::from_column_slice(&[
        eps * (-2.0 * W * (b13 + b14) + kp1 * b13 * b13 + km1 * b14 * b14),
        eps * (-W * (b23 + b24) + kp1 * b13 * b23 + km1 * b14 * b24),
        eps * b34 * (-W + km1 * b14),
        eps * b34 * (-W + kp1 * b13),
        eps * (-kp1 * b23 * b23 - km1 * b24 * b24),
        eps * eps * b24 * b34,
        -kp1 * eps * b23 * b34,
        eps * (b13 * b13 - b23 * b23) - 2.0 * tau * eps * eps * km1 * b34 * b34,
        0.0,
        (b14 * b14 - b24 * b24) - 2.0 * tau * eps * kp1 * b34 * b34,
    ])
}

fn map_to_a(c: &Vec10, eps: f64, gbar: f64) -> AMatrix {
    let u = eps.sqrt();
    AMatrix {
        a11: c[0],
        a12: c[1],
        a22: c[2],
        a33: c[3],
        a44: c[4],
        a13: gbar * u * c[5],
        a14: gbar * u * c[6],
        a23: gbar * u * c[7],
        a24: gbar * u * c[8],
        a34: gbar * gbar * eps * c[9],
    }
}

/// Damped Newton on the rescaled system at fixed (q, ε, τ). Returns the
/// solution and the iteration count.
fn newton_rescaled(mut c: Vec10, q: f64, eps: f64, tau: f64, max_iter: usize) -> Result<(Vec10, usize)> {
    let norm = |v: &Vec10| v.amax();
    let mut f = rescaled_residuals(&c, q, eps, tau);
    for iter in 0..max_iter {
        if norm(&f) < 1e-13 {
            return Ok((c, iter));
        }
        let j = rescaled_jacobian(&c, q, eps, tau);
        let d = j
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Numerical("singular Jacobian in Newton step".into()))?;
        // Armijo backtracking on the residual norm.
        let f0 = norm(&f);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let c_try = c + d * t;
            let f_try = rescaled_residuals(&c_try, q, eps, tau);
            if norm(&f_try) <= (1.0 - 1e-4 * t) * f0 {
                c = c_try;
                f = f_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence(format!(
                "line search stalled at residual {f0:.3e} (iteration {iter})"
            )));
        }
    }
    if norm(&f) < 1e-13 {
        Ok((c, max_iter))
    } else {
        Err(Error::NoConvergence(format!(
            "residual {:.3e} after {max_iter} iterations",
            norm(&f)
        )))
    }
}

/// Zeroth-order state: the electronic triple solves the reduced three
/// equations (γ = 0); the field part is the vacuum (a33 = a44 = 1, rest 0).
///
/// The closed form a12 = κ(2 + q − 2s)/(3q), s = √(1 + q − 2q²) seeds the
/// Newton polish and is cross-checked against it in tests.
pub fn zeroth_order_seed(q: f64, kappa: f64) -> Result<AMatrix> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    let s = (1.0 + q - 2.0 * q * q).sqrt();
    let a12_seed = kappa * (2.0 + q - 2.0 * s) / (3.0 * q);
    // a11 from (a), a22 from (b); then polish all three simultaneously.
    let mut v = [
        (2.0 * kappa * a12_seed + a12_seed * a12_seed - 2.0 * kappa * kappa * q).max(1e-12).sqrt(),
        a12_seed,
        0.0,
    ];
    v[2] = v[0] * (kappa - v[1]) / (v[1] + kappa);
    for _ in 0..100 {
        let (a11, a12, a22) = (v[0], v[1], v[2]);
        let f = [
            -2.0 * kappa * kappa * q - a11 * a11 + 2.0 * kappa * a12 + a12 * a12,
            a11 * a12 + a12 * a22 + kappa * (a22 - a11),
            kappa * kappa * q - 2.0 * kappa * a12 + a12 * a12 - a22 * a22,
        ];
        let j = nalgebra::Matrix3::new(
            -2.0 * a11,
            2.0 * kappa + 2.0 * a12,
            0.0,
            a12 - kappa,
            a11 + a22,
            a12 + kappa,
            0.0,
            -2.0 * kappa + 2.0 * a12,
            -2.0 * a22,
        );
        let d = j
            .lu()
            .solve(&-nalgebra::Vector3::from_column_slice(&f))
            .ok_or_else(|| Error::NoConvergence("reduced system Jacobian singular".into()))?;
        v[0] += d[0];
        v[1] += d[1];
        v[2] += d[2];
        if d.amax() < 1e-15 {
            break;
        }
    }
    let (a11, a12, a22) = (v[0], v[1], v[2]);
    let res = [
        -2.0 * kappa * kappa * q - a11 * a11 + 2.0 * kappa * a12 + a12 * a12,
        a11 * a12 + a12 * a22 + kappa * (a22 - a11),
        kappa * kappa * q - 2.0 * kappa * a12 + a12 * a12 - a22 * a22,
    ];
    if res.iter().any(|r| r.abs() > 1e-10) {
        return Err(Error::NoConvergence(format!(
            "reduced system did not converge at q = {q}: residuals {res:?}"
        )));
    }
    if !(v[0] > 0.0 && v[2] > 0.0) {
        return Err(Error::Domain(format!(
            "no normalizable zeroth-order solution at q = {q}: (a11, a22) = ({}, {})",
            v[0], v[2]
        )));
    }
    Ok(AMatrix { a11: v[0], a12: v[1], a22: v[2], a33: 1.0, a44: 1.0, ..Default::default() })
}

/// Seed in rescaled variables: zeroth electronic triple, vacuum field part,
/// and the b-coefficients from the linear system they satisfy at τ = 0.
fn rescaled_seed(q: f64, eps: f64) -> Result<Vec10> {
    let z = zeroth_order_seed(q, 1.0 + eps)?;
    let mut c = Vec10::zeros();
    c[0] = z.a11;
    c[1] = z.a12;
    c[2] = z.a22;
    c[3] = 1.0;
    c[4] = 1.0;
    // One Newton step from b = 0 solves the linear τ=0 cross equations
    // exactly; run the full Newton to also absorb the O(ε) couplings.
    let (c, _) = newton_rescaled(c, q, eps, 0.0, 50)?;
    Ok(c)
}

/// Options for [`solve_ground_state`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Maximum Newton iterations per continuation point.
    pub max_iter: usize,
    /// Maximum number of step halvings in the γ̄ continuation.
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iter: 200, max_halvings: 16 }
    }
}

/// Solve the ten equations for the Gaussian fundamental state.
///
/// Default seeding: the γ = 0 solution followed by continuation in γ̄ with
/// adaptive step halving. A caller-supplied seed is tried directly first.
pub fn solve_ground_state(
    p: &QuadraticParams,
    seed: Option<&AMatrix>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let eps = p.kappa_m1;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("Trojan-branch solve needs kappa > 1, got 1 + {eps}")));
    }
    let gbar = p.gamma_bar();
    let mut iterations = 0;

    if let Some(s) = seed {
        let u = eps.sqrt();
        let scale = if gbar > 0.0 { gbar * u } else { 1.0 };
        let c0 = Vec10::from_column_slice(&[
            s.a11,
            s.a12,
            s.a22,
            s.a33,
            s.a44,
            s.a13 / scale,
            s.a14 / scale,
            s.a23 / scale,
            s.a24 / scale,
            if gbar > 0.0 { s.a34 / (gbar * gbar * eps) } else { s.a34 },
        ]);
        if let Ok((c, it)) = newton_rescaled(c0, p.q, eps, gbar * gbar, opts.max_iter) {
            return finish(c, p, eps, gbar, it, "caller seed".to_string());
        }
    }

    let mut c = rescaled_seed(p.q, eps)?;
    if gbar == 0.0 {
        return finish(c, p, eps, gbar, iterations, "gamma = 0 seed".to_string());
    }
    let mut g_cur = 0.0_f64;
    let mut step = gbar;
    let mut halvings = 0;
    let mut points = 0;
    while g_cur < gbar {
        let g_try = (g_cur + step).min(gbar);
        match newton_rescaled(c, p.q, eps, g_try * g_try, opts.max_iter) {
            Ok((c_new, it)) => {
                c = c_new;
                iterations += it;
                g_cur = g_try;
                points += 1;
                step *= 2.0;
            }
            Err(_) => {
                halvings += 1;
                step *= 0.5;
                if halvings > opts.max_halvings {
                    return Err(Error::NoConvergence(format!(
                        "continuation stalled at gamma_bar = {g_cur:.6e} of {gbar:.6e}"
                    )));
                }
            }
        }
    }
    let path = format!(
        "gamma = 0 seed, then {points} continuation point(s) to gamma_bar = {gbar:.6e} ({halvings} halvings)"
    );
    finish(c, p, eps, gbar, iterations, path)
}

fn finish(
    c: Vec10,
    p: &QuadraticParams,
    eps: f64,
    gbar: f64,
    iterations: usize,
    seed_path: String,
) -> Result<SolveReport> {
    let a = map_to_a(&c, eps, gbar);
    if !a.is_normalizable() {
        return Err(Error::NonNormalizable);
    }
    let residual_norm = residuals(&a, p).iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(SolveReport { a, residual_norm, iterations, seed_path })
}

/// Perturbation expansion in γ̄ of the fundamental-state coefficients.
///
/// Orders: 0 — the γ = 0 state; 1 — adds the atom–field cross terms, which
/// are O(γ̄); 2 — adds the O(γ̄²) shifts of the diagonal coefficients and
/// a34, obtained by solving the linearized correction equations in τ = γ̄²
/// numerically (not from closed forms).
pub fn perturbation_series(p: &QuadraticParams, order: u8) -> Result<AMatrix> {
    if order > 2 {
        return Err(Error::Domain(format!("perturbation order must be 0, 1 or 2, got {order}")));
    }
    let eps = p.kappa_m1;
    if !(eps > 0.0) {
        return Err(Error::Domain("perturbation series needs kappa > 1".into()));
    }
    let gbar = p.gamma_bar();
    let c0 = rescaled_seed(p.q, eps)?;
    if order == 0 {
        return Ok(zeroth_order_seed(p.q, p.kappa())?);
    }
    if order == 1 {
        // Cross terms at their leading coefficients; diagonals untouched.
        let mut a = map_to_a(&c0, eps, gbar);
        a.a34 = 0.0;
        return Ok(a);
    }
    // Order 2: tangent in τ at τ = 0: J(c0)·dc = −∂F/∂τ.
    let j = rescaled_jacobian(&c0, p.q, eps, 0.0);
    let rhs = -rescaled_dtau(&c0, eps, 0.0);
    let dc = j
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoConvergence("singular correction system near resonance".into()))?;
    let tau = gbar * gbar;
    let mut c2 = c0 + dc * tau;
    // Cross-term coefficients stay at their O(γ̄) values; only the even
    // (diagonal and a34) entries receive the τ correction.
    for idx in 5..=8 {
        c2[idx] = c0[idx];
    }
    c2[9] = c0[9];
    Ok(map_to_a(&c2, eps, gbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const Q_REF: f64 = 0.95625;
    const EPS_REF: f64 = 2e-11;
    /// Pinned rescaled coupling reproducing the reference strong-coupling
    /// solution (near criticality a44 is hypersensitive to gamma_bar).
    const GBAR_PINNED: f64 = 0.295_799_884_775_272_9;

    fn reference_params() -> QuadraticParams {
        QuadraticParams::from_q_kappa_m1_gbar(Q_REF, EPS_REF, GBAR_PINNED).unwrap()
    }

    #[test]
    fn zeroth_order_matches_reference_diagonals() {
        let z = zeroth_order_seed(Q_REF, 1.0).unwrap();
        assert_abs_diff_eq!(z.a11, 0.51160, epsilon = 5e-5);
        assert_abs_diff_eq!(z.a12, 0.78164, epsilon = 5e-5);
        assert_abs_diff_eq!(z.a22, 0.06270, epsilon = 5e-5);
        assert_eq!(z.a33, 1.0);
        assert_eq!(z.a44, 1.0);
        assert!(z.is_normalizable());
    }

    #[test]
    fn zeroth_order_satisfies_reduced_equations() {
        // A normalizable decoupled state exists only for q > 8/9, the same
        // window as classical stability.
        for q in [0.90, 0.93, 0.95625, 0.99] {
            let z = zeroth_order_seed(q, 1.0).unwrap();
            let p = QuadraticParams { q, kappa_m1: 0.0, gamma: 0.0 };
            // With gamma = 0 the first, second and fifth equations close on
            // the electronic triple alone.
            let r = residuals(&z, &p);
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12 && r[4].abs() < 1e-12,
                "q={q}: residuals {:?}", r);
        }
    }

    #[test]
    fn zeroth_order_rejects_bad_q() {
        assert!(zeroth_order_seed(0.0, 1.0).is_err());
        assert!(zeroth_order_seed(1.5, 1.0).is_err());
        // Below the q = 8/9 stability boundary no normalizable decoupled
        // state exists.
        assert!(zeroth_order_seed(0.5, 1.0).is_err());
    }

    #[test]
    fn residual_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = QuadraticParams::from_parts(
                rng.gen_range(0.1..0.99),
                rng.gen_range(1e-6..0.5),
                rng.gen_range(0.0..0.3),
            )
            .unwrap();
            let a = AMatrix {
                a11: rng.gen_range(0.1..2.0),
                a12: rng.gen_range(-1.0..1.0),
                a13: rng.gen_range(-0.5..0.5),
                a14: rng.gen_range(-0.5..0.5),
                a22: rng.gen_range(0.1..2.0),
                a23: rng.gen_range(-0.5..0.5),
                a24: rng.gen_range(-0.5..0.5),
                a33: rng.gen_range(0.1..2.0),
                a34: rng.gen_range(-0.5..0.5),
                a44: rng.gen_range(0.1..2.0),
            };
            let jac = residual_jacobian(&a, &p);
            let fields: [fn(&mut AMatrix) -> &mut f64; 10] = [
                |a| &mut a.a11,
                |a| &mut a.a12,
                |a| &mut a.a13,
                |a| &mut a.a14,
                |a| &mut a.a22,
                |a| &mut a.a23,
                |a| &mut a.a24,
                |a| &mut a.a33,
                |a| &mut a.a34,
                |a| &mut a.a44,
            ];
            let h = 1e-6;
            for (col, f) in fields.iter().enumerate() {
                let mut ap = a;
                *f(&mut ap) += h;
                let mut am = a;
                *f(&mut am) -= h;
                let rp = residuals(&ap, &p);
                let rm = residuals(&am, &p);
                for row in 0..10 {
                    let fd = (rp[row] - rm[row]) / (2.0 * h);
                    assert_abs_diff_eq!(jac[row][col], fd, epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn rescaled_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let q = rng.gen_range(0.1..0.99);
            let eps = rng.gen_range(1e-12..0.1);
            let tau = rng.gen_range(0.0..0.2);
            let c = Vec10::from_fn(|_, _| rng.gen_range(-1.5..1.5));
            let jac = rescaled_jacobian(&c, q, eps, tau);
            let h = 1e-6;
            for col in 0..10 {
                let mut cp = c;
                cp[col] += h;
                let mut cm = c;
                cm[col] -= h;
                let fd = (rescaled_residuals(&cp, q, eps, tau)
                    - rescaled_residuals(&cm, q, eps, tau))
                    / (2.0 * h);
                for row in 0..10 {
                    assert_abs_diff_eq!(jac[(row, col)], fd[row], epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn solve_reproduces_reference_strong_coupling_state() {
        let p = reference_params();
        let rep = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        let a = rep.a;
        assert!(rep.residual_norm < 1e-12, "residual {:.3e}", rep.residual_norm);
        assert!(a.is_normalizable());
        assert_abs_diff_eq!(a.a11, 0.51160, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a12, 0.78164, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a22, 0.06270, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a33, 1.0, epsilon = 1e-6);
        assert_relative_eq!(a.a44, 0.00532, max_relative = 5e-3);
        assert_relative_eq!(a.a13, 7.50e-7, max_relative = 1e-2);
        assert_relative_eq!(a.a14, 4.668e-6, max_relative = 1e-2);
        assert_relative_eq!(a.a23, -5.33e-7, max_relative = 1e-2);
        assert_relative_eq!(a.a24, -1.34e-6, max_relative = 1e-2);
        assert_relative_eq!(a.a34, 1.40e-12, max_relative = 2e-2);
    }

    #[test]
    fn solve_with_zero_coupling_decouples_exactly() {
        let p = QuadraticParams::from_parts(Q_REF, EPS_REF, 0.0).unwrap();
        let rep = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        assert_eq!(rep.a.a13, 0.0);
        assert_eq!(rep.a.a14, 0.0);
        assert_eq!(rep.a.a23, 0.0);
        assert_eq!(rep.a.a24, 0.0);
        assert_eq!(rep.a.a34, 0.0);
        assert_abs_diff_eq!(rep.a.a33, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.a.a44, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_accepts_caller_seed() {
        let p = reference_params();
        let base = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        let seeded = solve_ground_state(&p, Some(&base.a), &SolveOptions::default()).unwrap();
        assert!(seeded.seed_path.contains("caller seed"));
        assert_relative_eq!(seeded.a.a44, base.a.a44, max_relative = 1e-10);
    }

    #[test]
    fn solve_is_deterministic() {
        let p = reference_params();
        let a = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        let b = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        assert_eq!(a.a, b.a);
    }

    #[test]
    fn solve_at_physical_detuning_stays_conditioned() {
        // kappa - 1 ~ 1.2e-12 as derived from the reference geometry.
        let p = QuadraticParams::from_q_kappa_m1(Q_REF, 1.203e-12).unwrap();
        let rep = solve_ground_state(&p, None, &SolveOptions::default()).unwrap();
        assert!(rep.residual_norm < 1e-12);
        assert!(rep.a.is_normalizable());
        assert_abs_diff_eq!(rep.a.a33, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn perturbation_zeroth_and_first_orders() {
        let p = reference_params();
        let a0 = perturbation_series(&p, 0).unwrap();
        assert_eq!(a0.a13, 0.0);
        assert_eq!(a0.a44, 1.0);
        let a1 = perturbation_series(&p, 1).unwrap();
        assert_abs_diff_eq!(a1.a11, a0.a11, epsilon = 1e-12);
        assert_abs_diff_eq!(a1.a44, 1.0, epsilon = 1e-12);
        assert_eq!(a1.a34, 0.0);
        assert!(a1.a13 != 0.0 && a1.a14 != 0.0);
        assert!(perturbation_series(&p, 3).is_err());
    }

    #[test]
    fn perturbation_order_two_reproduces_weak_coupling_table() {
        // Self-consistent gamma_bar at the reference (q, kappa).
        let p = QuadraticParams::from_q_kappa_m1(Q_REF, EPS_REF).unwrap();
        let a = perturbation_series(&p, 2).unwrap();
        assert_abs_diff_eq!(a.a11, 0.51160, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a12, 0.78164, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a22, 0.06270, epsilon = 5e-5);
        assert_abs_diff_eq!(a.a33, 1.0, epsilon = 1e-6);
        // The perturbative a44 differs by two orders of magnitude from the
        // exact strong-coupling value: the series breaks down near the
        // critical coupling.
        assert_relative_eq!(a.a44, 0.50751, max_relative = 1e-3);
        assert_relative_eq!(a.a13, 7.50e-7, max_relative = 1e-2);
        assert_relative_eq!(a.a14, 4.50e-6, max_relative = 1e-2);
        assert_relative_eq!(a.a23, -5.33e-7, max_relative = 1e-2);
        assert_relative_eq!(a.a24, -7.68e-7, max_relative = 1e-2);
        assert_relative_eq!(a.a34, 1.49e-12, max_relative = 1e-2);
    }

    #[test]
    fn perturbation_agrees_with_solver_at_weak_coupling() {
        let p = QuadraticParams::from_q_kappa_m1_gbar(Q_REF, EPS_REF, 0.02).unwrap();
        let pert = perturbation_series(&p, 2).unwrap();
        let exact = solve_ground_state(&p, None, &SolveOptions::default()).unwrap().a;
        assert_relative_eq!(pert.a44, exact.a44, max_relative = 1e-4);
        assert_relative_eq!(pert.a13, exact.a13, max_relative = 1e-3);
        assert_relative_eq!(pert.a14, exact.a14, max_relative = 1e-3);
    }

    #[test]
    fn gamma_bar_construction_round_trips() {
        let p = QuadraticParams::from_q_kappa_m1_gbar(0.9, 1e-10, 0.25).unwrap();
        assert_relative_eq!(p.gamma_bar(), 0.25, max_relative = 1e-14);
        let p2 = QuadraticParams::from_q_gamma(p.q, {
            // gamma consistent with (q, kappa) so the detuning round-trips.
            QuadraticParams::from_q_kappa_m1(0.9, 1e-10).unwrap().gamma
        })
        .unwrap();
        assert_relative_eq!(p2.kappa_m1, 1e-10, max_relative = 1e-8);
    }
}
