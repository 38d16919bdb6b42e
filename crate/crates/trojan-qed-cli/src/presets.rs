//! Canned run configurations for the published figures and tables.
//!
//! Each preset expands to an ordinary argument vector, so presets and
//! hand-written flags go through identical parsing and validation.

pub const NAMES: [&str; 12] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "table1", "table2", "table3",
    "table4",
];

/// Argument vector for a preset, or `None` for an unknown name.
pub fn preset_argv(name: &str) -> Option<Vec<&'static str>> {
    let tail: Vec<&'static str> = match name {
        // Rotation-frequency branches versus orbit radius.
        "fig1" => vec!["branches"],
        // Rotating-frame trajectory near the anti-Trojan equilibrium.
        "fig2" => vec![
            "trajectory",
            "--branch",
            "anti",
            "--t-end",
            "200",
            "--dp",
            "0.001,0.001,0",
            "--sample-dt",
            "0.1",
        ],
        // Stability classification over the (R, r0) plane.
        "fig3" => vec!["stability-map"],
        // Bounded perturbed orbit, sampled over the late window. Uses the
        // quoted dimensionless parameters: with the literal 3600 a0
        // geometry (q = 0.94844) this launch slowly escapes, while at the
        // published q = 0.95625 it stays in a bounded annulus.
        "fig4" => vec![
            "trajectory",
            "--q",
            "0.95625",
            "--gamma",
            "3.244784e-7",
            "--dp",
            "0.02,0.07,0.02",
            "--t-end",
            "1500",
            "--sample-dt",
            "0.05",
            "--sample-start",
            "1400",
        ],
        // Same launch, full history at coarse sampling (z oscillation).
        "fig5" => vec![
            "trajectory",
            "--q",
            "0.95625",
            "--gamma",
            "3.244784e-7",
            "--dp",
            "0.02,0.07,0.02",
            "--t-end",
            "1500",
            "--sample-dt",
            "0.5",
        ],
        // Energy of the circulating solution versus detuning.
        "fig6" => vec!["energy-curve"],
        // Wigner function of the squeezed co-rotating mode.
        "fig7" => vec!["wigner", "--plane", "qm"],
        // Wigner function of the vacuum-like counter-rotating mode.
        "fig8" => vec!["wigner", "--plane", "qp"],
        // Perturbative series next to the exact fundamental state.
        "table1" => vec!["ground-state", "--series"],
        // Exact fundamental-state parameters.
        "table2" => vec!["ground-state"],
        // Electron moments in orbit units.
        "table3" => vec!["moments", "--units", "orbit"],
        // Field moments in natural units.
        "table4" => vec!["moments", "--units", "natural"],
        _ => return None,
    };
    let mut argv = vec!["trojan-qed"];
    argv.extend(tail);
    Some(argv)
}
