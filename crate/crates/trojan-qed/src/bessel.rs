//! Bessel function J₁ and the first root of its derivative.
//!
//! The mode profile only ever needs J₁ on |x| ≤ 10, so a plain power series
//! suffices: the largest term at x = 10 is ~7×10², giving ~7×10⁻¹⁴ worst-case
//! cancellation error, within the 1e-12 budget. No asymptotic branch, hence
//! no switch point to validate.

/// Largest argument for which the series accuracy is guaranteed.
pub const DOMAIN: f64 = 10.0;

/// First positive root of dJ₁/dx, i.e. the radial eigenvalue of the TE₁₁ mode.
///
/// Frozen from [`find_x11`]; kept as a constant so geometry code does not
/// re-run the root-find.
pub const X11: f64 = 1.841_183_781_340_659_3;

/// J₁(x) by power series: Σₘ (−1)ᵐ (x/2)^{2m+1} / (m! (m+1)!).
///
/// Absolute error < 1e-12 on |x| ≤ 10.
pub fn bessel_j1(x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h; // m = 0
    let mut sum = term;
    for m in 1..60 {
        term *= -h2 / (m as f64 * (m as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// dJ₁/dx by term-wise differentiation of the same series.
pub fn bessel_j1_prime(x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    // d/dx [ (x/2)^{2m+1} / (m!(m+1)!) ] = (2m+1)/2 · (x/2)^{2m} / (m!(m+1)!)
    let mut pow = 1.0; // (x/2)^{2m} / (m!(m+1)!)
    let mut sum = 0.5;
    for m in 1..60 {
        pow *= -h2 / (m as f64 * (m as f64 + 1.0));
        let term = 0.5 * (2.0 * m as f64 + 1.0) * pow;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Smallest positive root of J₁′, located by bisection on the bracket (1, 3).
///
/// J₁′(1) > 0 and J₁′(3) < 0, and J₁′ has no other sign change in between,
/// so plain bisection converges unconditionally.
pub fn find_x11() -> f64 {
    let (mut lo, mut hi) = (1.0_f64, 3.0_f64);
    debug_assert!(bessel_j1_prime(lo) > 0.0 && bessel_j1_prime(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if bessel_j1_prime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
