//! Shared oracle routines used by both the oracle suite and the
//! acceptance suite: Gauss–Hermite quadrature moments, finite-difference
//! Hamiltonian gradients, and frequency-branch round trips.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trojan_qed::dynamics::{
    equations_of_motion, hamiltonian_rotating, omega_branches, solve_r0, PhaseState, SystemParams,
};
use trojan_qed::observables::covariance_from_a;
use trojan_qed::quantum::AMatrix;

/// Gauss–Hermite nodes and weights for weight e^{−y²}, computed by Newton
/// iteration on the Hermite recurrence, walking the positive roots from
/// the outermost inward and mirroring by symmetry.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let h = |x: f64| -> (f64, f64) {
        let mut h0 = 1.0_f64;
        let mut h1 = 2.0 * x;
        if n == 1 {
            return (h1, 2.0 * h0);
        }
        for k in 2..=n {
            let h2 = 2.0 * x * h1 - 2.0 * (k as f64 - 1.0) * h0;
            h0 = h1;
            h1 = h2;
        }
        (h1, 2.0 * n as f64 * h0)
    };
    let m = (n + 1) / 2;
    let nf = n as f64;
    let mut roots = vec![0.0_f64; m];
    for i in 0..m {
        let mut x = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => roots[0] - 1.14 * nf.powf(0.426) / roots[0],
            2 => 1.86 * roots[1] - 0.86 * roots[0],
            3 => 1.91 * roots[2] - 0.91 * roots[1],
            _ => 2.0 * roots[i - 1] - roots[i - 2],
        };
        for _ in 0..200 {
            let (v, d) = h(x);
            let step = v / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        roots[i] = x;
        let (_, d) = h(x);
        // w = 2^{n+1} n! √π / H_n'(x)^2, factorial folded in via logs.
        let ln_num = (nf + 1.0) * std::f64::consts::LN_2
            + (1..=n).map(|k| (k as f64).ln()).sum::<f64>()
            + 0.5 * std::f64::consts::PI.ln();
        let w = (ln_num - 2.0 * d.abs().ln()).exp();
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub fn random_a(rng: &mut ChaCha8Rng) -> AMatrix {
    loop {
        let a = AMatrix {
            a11: rng.gen_range(0.6..2.0),
            a22: rng.gen_range(0.6..2.0),
            a33: rng.gen_range(0.6..2.0),
            a44: rng.gen_range(0.6..2.0),
            a12: rng.gen_range(-0.6..0.6),
            a13: rng.gen_range(-0.6..0.6),
            a14: rng.gen_range(-0.6..0.6),
            a23: rng.gen_range(-0.25..0.25),
            a24: rng.gen_range(-0.25..0.25),
            a34: rng.gen_range(-0.25..0.25),
        };
        if a.is_normalizable() {
            return a;
        }
    }
}

/// Quadrature moments of ψ = N exp(−½ XᵀAX): the density |ψ|² is
/// exp(−XᵀRX); momentum integrands follow from p̂ᵢψ = i(AX)ᵢψ, so
/// p̂ᵢp̂ⱼψ = (Aᵢⱼ − (AX)ᵢ(AX)ⱼ)ψ and the symmetrized mixed moment is
/// −⟨xᵢ(I X)ⱼ⟩. Whitening X = L⁻ᵀy with R = LLᵀ reduces everything to
/// the Gauss–Hermite weight; degree-4 integrands are exact at 8 points.
pub struct QuadMoments {
    pub pos: Matrix4<f64>,
    pub mom: Matrix4<f64>,
    pub cross: Matrix4<f64>,
}

pub fn quadrature_moments(a: &AMatrix) -> QuadMoments {
    let re = a.re();
    let im = a.im();
    let l = re.cholesky().expect("test A must be normalizable").l();
    let l_inv_t = l.try_inverse().expect("Cholesky factor invertible").transpose();
    let (nodes, weights) = gauss_hermite(8);
    let mut z = 0.0;
    let mut pos = Matrix4::zeros();
    let mut mom = Matrix4::zeros();
    let mut cross = Matrix4::zeros();
    for (i0, &y0) in nodes.iter().enumerate() {
        for (i1, &y1) in nodes.iter().enumerate() {
            for (i2, &y2) in nodes.iter().enumerate() {
                for (i3, &y3) in nodes.iter().enumerate() {
                    let w = weights[i0] * weights[i1] * weights[i2] * weights[i3];
                    let x = l_inv_t * Vector4::new(y0, y1, y2, y3);
                    let rx = re * x;
                    let ix = im * x;
                    z += w;
                    for p in 0..4 {
                        for q in 0..4 {
                            pos[(p, q)] += w * x[p] * x[q];
                            // Re[(AX)ᵢ(AX)ⱼ] = (RX)ᵢ(RX)ⱼ − (IX)ᵢ(IX)ⱼ.
                            mom[(p, q)] += w * (re[(p, q)] - (rx[p] * rx[q] - ix[p] * ix[q]));
                            cross[(p, q)] += w * (-x[p] * ix[q]);
                        }
                    }
                }
            }
        }
    }
    QuadMoments { pos: pos / z, mom: mom / z, cross: cross / z }
}

/// Gaussian moment formulas vs direct quadrature on randomized A's.
/// Panics with a diagnostic on the first disagreement beyond 1e-8.
pub fn run_gaussian_moment_oracle(trials: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..trials {
        let a = random_a(&mut rng);
        let cov = covariance_from_a(&a).unwrap();
        let q = quadrature_moments(&a);
        for i in 0..4 {
            for j in 0..4 {
                let scale = 1.0_f64.max(cov.get(i, j).abs());
                assert!(
                    (cov.get(i, j) - q.pos[(i, j)]).abs() < 1e-8 * scale,
                    "trial {trial}: position moment ({i},{j}): {} vs {}",
                    cov.get(i, j),
                    q.pos[(i, j)]
                );
                assert!(
                    (cov.get(i + 4, j + 4) - q.mom[(i, j)]).abs() < 1e-8 * scale,
                    "trial {trial}: momentum moment ({i},{j}): {} vs {}",
                    cov.get(i + 4, j + 4),
                    q.mom[(i, j)]
                );
                assert!(
                    (cov.get(i, j + 4) - q.cross[(i, j)]).abs() < 1e-8 * scale,
                    "trial {trial}: cross moment ({i},{j}): {} vs {}",
                    cov.get(i, j + 4),
                    q.cross[(i, j)]
                );
            }
        }
    }
}

/// Equations of motion vs central-difference gradients of the rotating
/// Hamiltonian on random states. Panics on disagreement beyond 1e-6.
pub fn run_eom_gradient_oracle(trials: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs = [(0usize, 3usize), (1, 4), (2, 5), (6, 8), (7, 9)];
    for trial in 0..trials {
        let p = SystemParams::from_q_gamma(
            rng.gen_range(0.3..0.99),
            rng.gen_range(1e-4..0.2),
            rng.gen_range(1.0..1e3),
        )
        .unwrap();
        let mut arr = [0.0; 10];
        // Keep the electron away from the center so the Coulomb term is
        // smooth at the finite-difference scale.
        arr[0] = rng.gen_range(0.5..2.0) * p.r0;
        arr[1] = rng.gen_range(-0.5..0.5) * p.r0;
        arr[2] = rng.gen_range(-0.5..0.5) * p.r0;
        for slot in arr.iter_mut().skip(3) {
            *slot = rng.gen_range(-1.0..1.0) * p.r0;
        }
        let s = PhaseState::from_array(arr);
        let rhs = equations_of_motion(&s, &p).unwrap().to_array();
        let h0 = hamiltonian_rotating(&s, &p).unwrap();
        let scale_h = 1.0_f64.max(h0.abs());
        let hstep = 1e-6 * p.r0.max(1.0);
        let grad = |k: usize| {
            let mut ap = arr;
            ap[k] += hstep;
            let mut am = arr;
            am[k] -= hstep;
            let hp = hamiltonian_rotating(&PhaseState::from_array(ap), &p).unwrap();
            let hm = hamiltonian_rotating(&PhaseState::from_array(am), &p).unwrap();
            (hp - hm) / (2.0 * hstep)
        };
        for (qi, pi) in pairs {
            let dq = rhs[qi];
            let dp = rhs[pi];
            assert!(
                (dq - grad(pi)).abs() < 1e-6 * scale_h.max(dq.abs()),
                "trial {trial}: dq[{qi}] {} vs dH/dp {}",
                dq,
                grad(pi)
            );
            assert!(
                (dp + grad(qi)).abs() < 1e-6 * scale_h.max(dp.abs()),
                "trial {trial}: dp[{pi}] {} vs -dH/dq {}",
                dp,
                -grad(qi)
            );
        }
    }
}

/// Frequency-branch round trips over a radius grid. Panics on a round
/// trip worse than 1e-10 relative.
pub fn run_branch_round_trip_oracle(points: usize) {
    let q_tilde = 458.6475;
    // A moderate coupling keeps the near-resonant branch's κ² − 1 large
    // enough that reconstructing it from κ costs no precision; at γ ≪ 1e-2
    // that reconstruction alone caps round trips near 1e-9.
    let gamma = 0.05;
    for step in 0..points {
        // Radii spanning both sides of the resonance radius q̃^(1/3).
        let r0 = 3.0 + 10.0 * step as f64 / points as f64;
        let (omega_gt, omega_lt) = omega_branches(r0, q_tilde, gamma, 1.0).unwrap();
        assert!(omega_gt > 1.0 && omega_lt < 1.0, "branch ordering at r0 = {r0}");
        let r_gt = solve_r0(omega_gt, q_tilde, gamma, 1.0).unwrap();
        let r_lt = solve_r0(omega_lt, q_tilde, gamma, 1.0).unwrap();
        assert!((r_gt - r0).abs() < 1e-10 * r0, "Trojan round trip at r0 = {r0}: {r_gt}");
        assert!((r_lt - r0).abs() < 1e-10 * r0, "anti-Trojan round trip at r0 = {r0}: {r_lt}");
    }
}
