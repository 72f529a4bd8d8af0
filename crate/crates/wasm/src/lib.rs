//! Browser bindings for the interactive demo page (`www/index.html`).
//!
//! Three operations, each taking a JSON parameter string and returning a
//! JSON result string, so the page needs no typed glue beyond
//! `JSON.parse`:
//!
//! - [`interpolate_demo`]: solve a Schrödinger problem on a circle/interval
//!   grid and return the full entropic interpolation `ρ_t` with potentials,
//!   for the time/ε explorer;
//! - [`sweep_demo`]: the zero-noise experiment `ε·I_ε` vs `½W₂²`;
//! - [`dual_ascent_demo`]: the concave dual objective climbing to `ε·I_ε`.
//!
//! Build for the web with
//! `cargo build -p entrolab-wasm --target wasm32-unknown-unknown --release`
//! followed by `wasm-bindgen --target web` (see the README). The functions
//! are plain Rust and are exercised natively by the crate's tests.

use entrolab_core::calculus::entropy_wrt_reference;
use entrolab_core::density::{Density, Profile};
use entrolab_core::duality::{dual_gradient, dual_objective, Orientation};
use entrolab_core::interpolation::interpolate;
use entrolab_core::oracle::{zero_noise_sweep, SweepSpec};
use entrolab_core::schrodinger::{ipfp_solve, SolverOptions};
use entrolab_core::space::Space;
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
enum DemoProfile {
    Uniform,
    Gaussian { center: f64, scale: f64 },
    Sine { amplitude: f64, frequency: f64 },
    Cosine { amplitude: f64, frequency: f64 },
}

impl DemoProfile {
    fn to_profile(&self) -> Profile {
        match *self {
            DemoProfile::Uniform => Profile::Uniform,
            DemoProfile::Gaussian { center, scale } => Profile::Gaussian { center, scale },
            DemoProfile::Sine { amplitude, frequency } => Profile::Sine { amplitude, frequency },
            DemoProfile::Cosine { amplitude, frequency } => {
                Profile::Cosine { amplitude, frequency }
            }
        }
    }
}

#[derive(Deserialize)]
struct InterpolateParams {
    /// "circle" or "interval".
    kind: String,
    n: usize,
    eps: f64,
    steps: usize,
    marginal0: DemoProfile,
    marginal1: DemoProfile,
}

#[derive(Serialize)]
struct InterpolateResult {
    coords: Vec<f64>,
    times: Vec<f64>,
    /// One density curve per grid time.
    rho: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    entropy: Vec<f64>,
    cost: f64,
    iterations: usize,
    residual: f64,
}

fn build_space(kind: &str, n: usize) -> Result<Space, String> {
    match kind {
        "circle" => Space::circle_grid(n, 1.0).map_err(|e| e.to_string()),
        "interval" => Space::interval_grid(n, 1.0).map_err(|e| e.to_string()),
        other => Err(format!("unknown space kind {other:?}")),
    }
}

fn clamp_size(n: usize) -> Result<usize, String> {
    if (8..=512).contains(&n) {
        Ok(n)
    } else {
        Err(format!("grid size {n} outside the demo range 8..=512"))
    }
}

/// Solve + interpolate; returns the full `ρ_t` surface for the explorer.
#[wasm_bindgen]
pub fn interpolate_demo(params_json: &str) -> Result<String, String> {
    let params: InterpolateParams =
        serde_json::from_str(params_json).map_err(|e| format!("params: {e}"))?;
    let n = clamp_size(params.n)?;
    let steps = params.steps.clamp(2, 256);
    let space = build_space(&params.kind, n)?;
    let rho0 = Density::from_profile(&space, &params.marginal0.to_profile())
        .map_err(|e| e.to_string())?;
    let rho1 = Density::from_profile(&space, &params.marginal1.to_profile())
        .map_err(|e| e.to_string())?;
    let opts = SolverOptions {
        tol: 1e-10,
        max_iter: 20_000,
    };
    let sol =
        ipfp_solve(&space, &rho0, &rho1, params.eps, &opts).map_err(|e| e.to_string())?;
    let path = interpolate(&space, &sol, steps).map_err(|e| e.to_string())?;
    let entropy = path
        .rho
        .iter()
        .map(|rho| entropy_wrt_reference(&space, rho))
        .collect();
    let result = InterpolateResult {
        coords: space.coords().expect("grid space").to_vec(),
        times: path.times.clone(),
        rho: path.rho.iter().map(|d| d.values().to_vec()).collect(),
        theta: path.theta.iter().map(|v| v.to_vec()).collect(),
        entropy,
        cost: sol.cost,
        iterations: sol.iterations,
        residual: sol.marginal_residual,
    };
    Ok(serde_json::to_string(&result).expect("result serializes"))
}

#[derive(Deserialize)]
struct SweepParams {
    n: usize,
    center0: f64,
    center1: f64,
    scale: f64,
    eps_list: Vec<f64>,
}

#[derive(Serialize)]
struct SweepResult {
    rows: Vec<SweepDemoRow>,
}

#[derive(Serialize)]
struct SweepDemoRow {
    eps: f64,
    cost: f64,
    w2sq_half: f64,
    gap: f64,
}

/// Zero-noise experiment on the unit interval with two Gaussian bumps.
#[wasm_bindgen]
pub fn sweep_demo(params_json: &str) -> Result<String, String> {
    let params: SweepParams =
        serde_json::from_str(params_json).map_err(|e| format!("params: {e}"))?;
    let n = clamp_size(params.n)?;
    let spec = SweepSpec {
        length: 1.0,
        marginal0: Profile::Gaussian { center: params.center0, scale: params.scale },
        marginal1: Profile::Gaussian { center: params.center1, scale: params.scale },
        solver: SolverOptions {
            tol: 1e-9,
            max_iter: 20_000,
        },
        floor: None,
    };
    let pairs: Vec<(f64, usize)> = params.eps_list.iter().map(|&e| (e, n)).collect();
    let rows = zero_noise_sweep(&spec, &pairs).map_err(|e| e.to_string())?;
    let result = SweepResult {
        rows: rows
            .iter()
            .map(|r| SweepDemoRow {
                eps: r.eps,
                cost: r.cost,
                w2sq_half: r.w2sq_half,
                gap: r.gap,
            })
            .collect(),
    };
    Ok(serde_json::to_string(&result).expect("result serializes"))
}

#[derive(Deserialize)]
struct AscentParams {
    n: usize,
    eps: f64,
    steps: usize,
    marginal0: DemoProfile,
    marginal1: DemoProfile,
}

#[derive(Serialize)]
struct AscentResult {
    /// Dual objective after each ascent step (feasible: stays below cost).
    objectives: Vec<f64>,
    cost: f64,
    gradient_norm: f64,
}

/// Gradient ascent on the Kantorovich dual objective, recording the
/// objective trace toward `ε·I_ε`.
#[wasm_bindgen]
pub fn dual_ascent_demo(params_json: &str) -> Result<String, String> {
    let params: AscentParams =
        serde_json::from_str(params_json).map_err(|e| format!("params: {e}"))?;
    let n = clamp_size(params.n)?;
    let steps = params.steps.clamp(1, 2000);
    let space = build_space("circle", n)?;
    let rho0 = Density::from_profile(&space, &params.marginal0.to_profile())
        .map_err(|e| e.to_string())?;
    let rho1 = Density::from_profile(&space, &params.marginal1.to_profile())
        .map_err(|e| e.to_string())?;
    let opts = SolverOptions {
        tol: 1e-10,
        max_iter: 20_000,
    };
    let sol =
        ipfp_solve(&space, &rho0, &rho1, params.eps, &opts).map_err(|e| e.to_string())?;
    let rate = 0.5 * params.eps;
    let mut u = Array1::<f64>::zeros(n);
    let mut objectives = Vec::with_capacity(steps + 1);
    objectives.push(
        dual_objective(&space, &u, &rho0, &rho1, params.eps, Orientation::Forward)
            .map_err(|e| e.to_string())?,
    );
    let mut grad = Array1::<f64>::zeros(n);
    for _ in 0..steps {
        grad = dual_gradient(&space, &u, &rho0, &rho1, params.eps).map_err(|e| e.to_string())?;
        u = &u + &grad.mapv(|v| rate * v);
        objectives.push(
            dual_objective(&space, &u, &rho0, &rho1, params.eps, Orientation::Forward)
                .map_err(|e| e.to_string())?,
        );
    }
    let gradient_norm = grad.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let result = AscentResult {
        objectives,
        cost: sol.cost,
        gradient_norm,
    };
    Ok(serde_json::to_string(&result).expect("result serializes"))
}
