//! Named studies: convergence scans with slope fits, exactness suites and statistical checks.
//! Each produces a [`Report`] of tables, checks, fits and plots.

mod algebra;
mod fit;
mod loops;
mod output;
mod report;
mod scenario;
mod stats;

pub use fit::{loglog_fit, FitResult};
pub use output::{render_svg, write_report};
pub use report::{Cell, Check, Plot, Report, Series, Table};
pub use scenario::{
    EulerSpec, FieldSpec, GaussianRunSpec, KelvinSpec, LoopSpec, ModeSpec, ParamsSpec, ScanSpec, Scenario, TimeLawSpec,
};

use crate::error::{Error, Result};

/// Seed and worker count shared by every experiment of a run.
#[derive(Clone, Copy, Debug)]
pub struct RunContext {
    pub seed: u64,
    pub threads: usize,
}

impl Default for RunContext {
    fn default() -> Self {
        Self { seed: 1, threads: crate::par::default_threads() }
    }
}

type Runner = fn(&Scenario, &RunContext) -> Result<Report>;

/// A registered experiment.
pub struct Experiment {
    pub id: &'static str,
    pub title: &'static str,
    /// The statement the experiment checks.
    pub verifies: &'static str,
    pub description: &'static str,
    /// Whether the experiment asserts anything, or only tabulates.
    pub exploratory: bool,
    /// Rough single-core runtime at default settings.
    pub runtime: &'static str,
    run: Runner,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("id", &self.id).finish_non_exhaustive()
    }
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        id: "euler_ensemble",
        title: "Euler ensemble exactness",
        verifies: "Star-polygon momentum ensembles solve the discretized momentum-loop systems exactly",
        description: "Builds {q/p} star polygons, checks the four defining conditions and the I_a, I_b, I_c identities, \
                      and evaluates the full and liquid momentum-system residuals along P_k(t) = sqrt(1/(2(t+t0))) G_k / gamma. \
                      Sweeps euler.q_values, every admissible p, and euler.times.",
        exploratory: false,
        runtime: "< 1 s",
        run: algebra::euler_ensemble,
    },
    Experiment {
        id: "derivative_oracles",
        title: "Closed forms against finite differences",
        verifies: "Vertex gradients of the circulation, the exact discretized area derivative and the vorticity and \
                   diffusion operators in loop and momentum form",
        description: "Compares every closed form with an independent finite-difference or quadrature route over a fixed \
                      suite of fields, loops and vertices (more than 500 cases). Relative error is |a - b| / max(|b|, 1e-3), \
                      threshold 1e-5.",
        exploratory: false,
        runtime: "~3 s",
        run: algebra::derivative_oracles,
    },
    Experiment {
        id: "degeneracies",
        title: "Exact degeneracies",
        verifies: "R_ad vanishes for constant vorticity, all operators vanish on a constant field, and the two \
                   summation-by-parts forms of the momentum loop functional agree",
        description: "Rotation field on several loops (R_ad <= 1e-12), constant field through every operator, and 100 random \
                      momentum states on random loops (forms agree to 1e-12).",
        exploratory: false,
        runtime: "~2 s",
        run: algebra::degeneracies,
    },
    Experiment {
        id: "ek_index_oracle",
        title: "Drift-term index check",
        verifies: "The momentum drift E_k equals the composition of the operator symbols with the (k+3, k+2) index pair",
        description: "Builds E_k from the closed Omega, U and D symbols and compares it with both index variants of the \
                      explicit formula over random states.",
        exploratory: false,
        runtime: "< 1 s",
        run: algebra::ek_index_oracle,
    },
    Experiment {
        id: "area_derivative_scan",
        title: "Area-derivative remainder vs edge length",
        verifies: "|R_ad| is linear in the local edge length |C_{k+1} - C_{k-1}|",
        description: "Shrinks the two edges around one vertex of the configured loop by h and fits |R_ad| against h \
                      (expected slope 1 +- 0.3). Sweep: scan.h_values.",
        exploratory: false,
        runtime: "< 1 s",
        run: loops::area_derivative_scan,
    },
    Experiment {
        id: "bs_recovery",
        title: "Regularized Biot-Savart recovery vs cutoff",
        verifies: "BS_ell[curl u] recovers u with an L2 error of order ell^{3/2}",
        description: "Closed-form recovery error of a Gaussian-windowed field against ell (expected slope 1.5 +- 0.3). \
                      Sweep: scan.ell_values.",
        exploratory: false,
        runtime: "~10 s",
        run: loops::bs_recovery,
    },
    Experiment {
        id: "bs_closed_form",
        title: "Biot-Savart of a plane wave",
        verifies: "BS_ell of a single wave mode equals its velocity times (1 + R(|a|/ell)), with R of Schwartz decay",
        description: "Direct ball quadrature against the closed form on 10 random (mode, x, ell) triples (<= 1e-4 relative), \
                      and |R(kappa)| (1 + kappa)^4 on kappa in [1, 1e4].",
        exploratory: false,
        runtime: "< 1 s",
        run: loops::bs_closed_form,
    },
    Experiment {
        id: "residual_scan",
        title: "Discretized loop-equation residual",
        verifies: "The discretized loop equation holds up to a remainder of order N^{alpha-1} log N + N^{-3 alpha/2}",
        description: "Evaluates |R_loop| on an exact Navier-Stokes field for each alpha in scan.alphas and N in scan.n_values. \
                      Passes when |R_loop| is non-increasing in N and stays below C (N^{alpha-1} log N + N^{-3 alpha/2}) with \
                      C frozen at the smallest N.",
        exploratory: false,
        runtime: "~8 min",
        run: loops::residual_scan,
    },
    Experiment {
        id: "liquid_scan",
        title: "Liquid loop-equation residual",
        verifies: "The discretized liquid loop equation holds up to O(1/N)",
        description: "|R_liquid| on the configured field and loop for N in scan.n_values, fitted against 1/N \
                      (expected slope 1 +- 0.3).",
        exploratory: false,
        runtime: "< 1 s",
        run: loops::liquid_scan,
    },
    Experiment {
        id: "operator_errors",
        title: "Operator error terms vs N",
        verifies: "The vorticity, diffusion, velocity and advection operators reproduce omega, curl omega, u and omega x u \
                   at a vertex as N grows",
        description: "Tabulates the error parts of each operator at one vertex for N in scan.n_values and alpha = params.alpha.",
        exploratory: true,
        runtime: "~5 s",
        run: loops::operator_errors,
    },
    Experiment {
        id: "rbad_scan",
        title: "Uncontrolled advection remainder",
        verifies: "Size of R_bad, the part of the shifted advection operator without an error bound",
        description: "Nested finite differences of U^M_k Psi; tabulates |R_bad| and |R_bad| log N for N in scan.n_values. \
                      No pass/fail: the expected magnitude is unknown.",
        exploratory: true,
        runtime: "~1.5 min",
        run: loops::rbad_scan,
    },
    Experiment {
        id: "gaussian_stats",
        title: "Gaussian ensemble statistics",
        verifies: "A Gaussian random velocity field with covariance exp(r0^2 Laplacian) yields the loop functional \
                   exp(-(1/2)(gamma/nu)^2 Var Gamma)",
        description: "Covariance z-scores for 10 test-field pairs, Monte Carlo psi0 against the heat-kernel closed form with \
                      both exponent variants, translation invariance, and the decay in gamma/nu and trend in r0.",
        exploratory: false,
        runtime: "~15 s",
        run: stats::gaussian_stats,
    },
    Experiment {
        id: "obstruction_demo",
        title: "Small-loop obstruction",
        verifies: "A field ensemble with nonzero mean vorticity flux cannot be matched by a momentum ensemble with real \
                   increments at order sigma^2",
        description: "Rotation field on the unit circle: left coefficient 2i E[A.omega] (purely imaginary, magnitude 8 pi), \
                      right coefficient -E[(int P.gamma')^2] (real), their mismatch, and the directly measured Taylor \
                      coefficient. A gradient field gives a zero left side.",
        exploratory: false,
        runtime: "< 1 s",
        run: stats::obstruction,
    },
    Experiment {
        id: "taylor_remainder",
        title: "Small-loop Taylor remainder",
        verifies: "E[psi] - 1 - sigma^2 c is O(sigma^3)",
        description: "Remainder after the sigma^2 term on an ABC field and a curve without central symmetry, fitted against \
                      sigma (expected slope 3 +- 0.3). Sweep: scan.sigma_values.",
        exploratory: false,
        runtime: "< 1 s",
        run: stats::taylor_remainder,
    },
    Experiment {
        id: "kelvin_check",
        title: "Kelvin circulation along an advected loop",
        verifies: "dGamma/dt = -nu oint curl(omega).dC for a loop moving with an exact Navier-Stokes flow",
        description: "RK4 advection of markers and tangents; compares the fourth-order time difference of the circulation \
                      with the viscous line integral (<= 1e-4 relative) and checks the step-halving ratio lies in [12, 20].",
        exploratory: false,
        runtime: "~3 s",
        run: stats::kelvin_check,
    },
];

/// Looks up an experiment by id.
pub fn find(id: &str) -> Result<&'static Experiment> {
    EXPERIMENTS
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::Argument(format!("unknown experiment `{id}` (see list-experiments)")))
}

/// Runs one experiment by id.
pub fn run(id: &str, scenario: &Scenario, ctx: &RunContext) -> Result<Report> {
    scenario.validate()?;
    (find(id)?.run)(scenario, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<_> = EXPERIMENTS.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), EXPERIMENTS.len());
        assert!(EXPERIMENTS.len() >= 10);
        assert!(find("nope").is_err());
    }
}
