//! Independent optimal-transport oracles and the zero-noise sweep.
//!
//! Nothing here goes through IPFP or the potentials, so these routines serve
//! as cross-checks for the solver:
//!
//! - [`two_point_cost_scan`] minimizes `H(γ|R)` directly over the
//!   one-parameter family of couplings on a two-point space;
//! - [`w2_exact_1d`] computes `½W₂²` from the quantile coupling on the line;
//! - [`w2_lp_small`] solves the Kantorovich LP exactly by the transportation
//!   simplex for small instances;
//! - [`zero_noise_sweep`] tabulates `ε·I_ε` against `½W₂²` over a descending
//!   `ε` schedule, refining the grid jointly with `ε` so that the discrete
//!   heat kernel stays in its Gaussian regime (`ε ≥ 10·h`).

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::density::{Density, Profile};
use crate::schrodinger::{ipfp_solve, SolverOptions};
use crate::space::Space;
use crate::{Error, Result};

/// One record of the zero-noise experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub n: usize,
    /// Entropic cost `ε·I_ε`.
    pub cost: f64,
    /// Exact `½W₂²` from the 1-D quantile oracle.
    pub w2sq_half: f64,
    /// `cost - w2sq_half`.
    pub gap: f64,
}

/// Problem family for [`zero_noise_sweep`]: an interval grid with two
/// analytic marginals, re-sampled on each grid in the schedule.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub length: f64,
    pub marginal0: Profile,
    pub marginal1: Profile,
    pub solver: SolverOptions,
    /// Optional mixing of each marginal with the uniform density.
    pub floor: Option<f64>,
}

/// Minimize `ε·H(γ|R^{ε/2})` on a two-point space by golden-section search
/// over the single free coupling entry. Couplings with marginals `μ₀, μ₁`
/// form the one-parameter family
///
/// ```text
/// γ(s) = [ s          μ₀(0)-s         ]
///        [ μ₁(0)-s    1-μ₀(0)-μ₁(0)+s ]
/// ```
///
/// and `s ↦ H(γ(s)|R)` is strictly convex.
pub fn two_point_cost_scan(
    space: &Space,
    rho0: &Density,
    rho1: &Density,
    eps: f64,
) -> Result<f64> {
    if space.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "two-point scan needs exactly 2 points, got {}",
            space.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let kernel = space.heat_kernel(0.5 * eps)?;
    let w = space.weights();
    let reference = [
        [kernel[[0, 0]] * w[0] * w[0], kernel[[0, 1]] * w[0] * w[1]],
        [kernel[[1, 0]] * w[1] * w[0], kernel[[1, 1]] * w[1] * w[1]],
    ];
    let a0 = rho0.values()[0] * w[0];
    let b0 = rho1.values()[0] * w[0];
    let entropy = |s: f64| -> f64 {
        let gamma = [[s, a0 - s], [b0 - s, 1.0 - a0 - b0 + s]];
        let mut h = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let x: f64 = gamma[i][j];
                if x > 0.0 {
                    h += x * (x / reference[i][j]).ln();
                }
            }
        }
        h
    };
    let mut lo = (a0 + b0 - 1.0).max(0.0);
    let mut hi = a0.min(b0);
    let invphi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let mut f1 = entropy(x1);
    let mut f2 = entropy(x2);
    while hi - lo > 1e-15 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = entropy(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = entropy(x2);
        }
    }
    Ok(eps * entropy(0.5 * (lo + hi)))
}

/// Exact `½W₂²` between two atomic measures on the line via the quantile
/// coupling: both inverse CDFs are step functions, so the integral
/// `∫₀¹ (F₀⁻¹ - F₁⁻¹)² dq` is a finite sum over merged breakpoints.
pub fn w2_exact_1d(coords: &Array1<f64>, mu0: &Array1<f64>, mu1: &Array1<f64>) -> Result<f64> {
    let n = coords.len();
    if mu0.len() != n || mu1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu0.len().max(mu1.len()),
        });
    }
    if coords.windows(2).into_iter().any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "coordinates must be strictly increasing".into(),
        ));
    }
    for mu in [mu0, mu1] {
        if mu.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("negative mass".into()));
        }
        let total: f64 = mu.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "masses must sum to 1, got {total}"
            )));
        }
    }
    // Normalize exactly so both cumulative vectors end at the same value.
    let p = mu0 / mu0.sum();
    let q = mu1 / mu1.sum();
    let mut acc = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ci, mut cj) = (p[0], q[0]);
    let mut level = 0.0;
    loop {
        let t = ci.min(cj).min(1.0);
        if t > level {
            let d = coords[i] - coords[j];
            acc += (t - level) * d * d;
            level = t;
        }
        let advance_i = ci <= cj;
        let advance_j = cj <= ci;
        if advance_i {
            i += 1;
            if i >= n {
                break;
            }
            ci += p[i];
        }
        if advance_j {
            j += 1;
            if j >= n {
                break;
            }
            cj += q[j];
        }
    }
    Ok(0.5 * acc)
}

/// Exact optimum of `Σ γ_ij d_ij²/2` over the transport polytope, solved by
/// the transportation simplex with Bland's entering rule. Restricted to
/// `n ≤ 64` points.
pub fn w2_lp_small(dist: &Array2<f64>, mu0: &Array1<f64>, mu1: &Array1<f64>) -> Result<f64> {
    const LIMIT: usize = 64;
    let n = mu0.len();
    if n > LIMIT {
        return Err(Error::LpTooLarge { limit: LIMIT, got: n });
    }
    if mu1.len() != n || dist.shape() != [n, n] {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu1.len(),
        });
    }
    if (mu0.sum() - 1.0).abs() > 1e-9 || (mu1.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("masses must sum to 1".into()));
    }
    let supply: Vec<f64> = (mu0 / mu0.sum()).to_vec();
    let demand: Vec<f64> = (mu1 / mu1.sum()).to_vec();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * dist[[i, j]] * dist[[i, j]]).collect())
        .collect();
    transportation_simplex(&supply, &demand, &cost)
}

/// Transportation simplex on a dense cost table. Basic cells form a spanning
/// tree of the bipartite supply/demand graph; Bland's smallest-index entering
/// rule guards against cycling through degenerate pivots.
fn transportation_simplex(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<f64> {
    let n = supply.len();
    let m = demand.len();
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(n + m - 1);

    // Northwest-corner start: walks from (0,0) to (n-1,m-1) one index at a
    // time, producing exactly n+m-1 basic cells.
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = a[i].min(b[j]);
            basis.push((i, j));
            flow.push(f);
            a[i] -= f;
            b[j] -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (a[i] < b[j] || j == m - 1) && i < n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let cost_scale = cost
        .iter()
        .flatten()
        .fold(1.0f64, |acc, &c| acc.max(c.abs()));
    let enter_tol = 1e-12 * cost_scale;
    let max_pivots = 200_000;

    for _ in 0..max_pivots {
        // Potentials from the spanning tree: u_i + v_j = c_ij on basic cells.
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; m];
        u[0] = 0.0;
        let mut settled = 1;
        while settled < n + m {
            let mut progressed = false;
            for &(i, j) in basis.iter() {
                match (u[i].is_nan(), v[j].is_nan()) {
                    (false, true) => {
                        v[j] = cost[i][j] - u[i];
                        settled += 1;
                        progressed = true;
                    }
                    (true, false) => {
                        u[i] = cost[i][j] - v[j];
                        settled += 1;
                        progressed = true;
                    }
                    _ => {}
                }
            }
            if !progressed {
                return Err(Error::InvalidParameter(
                    "transportation basis lost tree structure".into(),
                ));
            }
        }

        // Bland: first cell with negative reduced cost enters.
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if cost[i][j] - u[i] - v[j] < -enter_tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let objective = basis
                .iter()
                .zip(flow.iter())
                .map(|(&(i, j), &f)| f * cost[i][j])
                .sum();
            return Ok(objective);
        };

        // Unique tree path from row node ei to column node ej; walking the
        // cycle entering -> path, signs alternate starting at minus.
        let path = tree_path(&basis, n, m, ei, ej)?;
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (t, &edge) in path.iter().enumerate() {
            if t % 2 == 0 {
                let k = basis.iter().position(|&b| b == edge).unwrap();
                if flow[k] < theta {
                    theta = flow[k];
                    leave = k;
                }
            }
        }
        for (t, &edge) in path.iter().enumerate() {
            let k = basis.iter().position(|&b| b == edge).unwrap();
            if t % 2 == 0 {
                flow[k] -= theta;
            } else {
                flow[k] += theta;
            }
        }
        basis[leave] = (ei, ej);
        flow[leave] = theta;
    }
    Err(Error::InvalidParameter(
        "transportation simplex exceeded the pivot budget".into(),
    ))
}

/// Edges of the unique basis-tree path from row node `start_row` to column
/// node `end_col`, in walk order.
fn tree_path(
    basis: &[(usize, usize)],
    n: usize,
    m: usize,
    start_row: usize,
    end_col: usize,
) -> Result<Vec<(usize, usize)>> {
    // Nodes: rows 0..n, then columns n..n+m.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
    for (k, &(i, j)) in basis.iter().enumerate() {
        adj[i].push((n + j, k));
        adj[n + j].push((i, k));
    }
    let target = n + end_col;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + m];
    let mut queue = std::collections::VecDeque::from([start_row]);
    let mut seen = vec![false; n + m];
    seen[start_row] = true;
    while let Some(x) = queue.pop_front() {
        if x == target {
            break;
        }
        for &(y, k) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some((x, k));
                queue.push_back(y);
            }
        }
    }
    if !seen[target] {
        return Err(Error::InvalidParameter(
            "transportation basis lost tree structure".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut node = target;
    while let Some((prev, k)) = parent[node] {
        edges.push(basis[k]);
        node = prev;
    }
    edges.reverse();
    Ok(edges)
}

/// Run the zero-noise experiment: for each `(ε, n)` pair solve the
/// Schrödinger problem on an interval grid and record `ε·I_ε` next to the
/// exact `½W₂²`. Pairs must respect `ε ≥ 10·h`.
pub fn zero_noise_sweep(spec: &SweepSpec, pairs: &[(f64, usize)]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut cached: Option<(usize, Space)> = None;
    for &(eps, n) in pairs {
        let h = spec.length / n as f64;
        if eps < 10.0 * h {
            return Err(Error::PairingRule { eps, h });
        }
        let space = match &cached {
            Some((cached_n, s)) if *cached_n == n => s.clone(),
            _ => {
                let s = Space::interval_grid(n, spec.length)?;
                cached = Some((n, s.clone()));
                s
            }
        };
        let mut rho0 = Density::from_profile(&space, &spec.marginal0)?;
        let mut rho1 = Density::from_profile(&space, &spec.marginal1)?;
        if let Some(delta) = spec.floor {
            rho0 = rho0.with_floor(&space, delta)?;
            rho1 = rho1.with_floor(&space, delta)?;
        }
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &spec.solver)?;
        let w2sq_half = w2_exact_1d(
            space.coords().expect("interval grid has coordinates"),
            &rho0.masses(&space),
            &rho1.masses(&space),
        )?;
        rows.push(SweepRow {
            eps,
            n,
            cost: sol.cost,
            w2sq_half,
            gap: sol.cost - w2sq_half,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    #[test]
    fn w2_identical_measures_is_zero() {
        let coords = array![0.0, 0.5, 1.0];
        let mu = array![0.2, 0.3, 0.5];
        assert_eq!(w2_exact_1d(&coords, &mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn w2_two_atoms() {
        // δ_a to δ_b costs (a-b)²/2.
        let coords = array![0.1, 0.9];
        let a = array![1.0, 0.0];
        let b = array![0.0, 1.0];
        let got = w2_exact_1d(&coords, &a, &b).unwrap();
        assert!((got - 0.5 * 0.8f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn w2_rejects_bad_input() {
        let coords = array![0.0, 1.0];
        assert!(w2_exact_1d(&coords, &array![0.5, 0.6], &array![0.5, 0.5]).is_err());
        assert!(w2_exact_1d(&array![1.0, 0.0], &array![0.5, 0.5], &array![0.5, 0.5]).is_err());
    }

    #[test]
    fn lp_forced_coupling() {
        // 2x2 with d(0,1)=1, μ0=(1,0), μ1=(0,1) -> cost 1/2.
        let dist = array![[0.0, 1.0], [1.0, 0.0]];
        let got = w2_lp_small(&dist, &array![1.0, 0.0], &array![0.0, 1.0]).unwrap();
        assert!((got - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lp_identical_marginals_cost_zero() {
        let dist = array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let mu = array![0.2, 0.5, 0.3];
        let got = w2_lp_small(&dist, &mu, &mu).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn lp_rejects_large_instances() {
        let n = 65;
        let dist = Array2::zeros((n, n));
        let mu = Array1::from_elem(n, 1.0 / n as f64);
        assert!(matches!(
            w2_lp_small(&dist, &mu, &mu),
            Err(Error::LpTooLarge { .. })
        ));
    }

    #[test]
    fn lp_matches_quantile_oracle_on_random_lines() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        for case in 0..10 {
            let n = 12;
            let coords = Array1::from_iter((0..n).map(|i| i as f64 / n as f64));
            let mut dist = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    dist[[i, j]] = (coords[i] - coords[j]).abs();
                }
            }
            let raw0 = Array1::from_iter((0..n).map(|_| rng.gen_range(0.05..1.0)));
            let raw1 = Array1::from_iter((0..n).map(|_| rng.gen_range(0.05..1.0)));
            let mu0 = &raw0 / raw0.sum();
            let mu1 = &raw1 / raw1.sum();
            let lp = w2_lp_small(&dist, &mu0, &mu1).unwrap();
            let quantile = w2_exact_1d(&coords, &mu0, &mu1).unwrap();
            assert!(
                (lp - quantile).abs() < 1e-9,
                "case {case}: lp {lp} vs quantile {quantile}"
            );
        }
    }

    #[test]
    fn scan_handles_identical_marginals() {
        let s = Space::interval_grid(2, 2.0).unwrap();
        let u = Density::uniform(&s);
        // Identical marginals on a space with total mass 2: the optimum is
        // the normalized kernel measure, H = -log 2.
        let got = two_point_cost_scan(&s, &u, &u, 1.0).unwrap();
        assert!((got + 2.0f64.ln()).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn sweep_rejects_bad_pairing() {
        let spec = SweepSpec {
            length: 1.0,
            marginal0: Profile::Gaussian { center: 0.3, scale: 0.02 },
            marginal1: Profile::Gaussian { center: 0.7, scale: 0.02 },
            solver: SolverOptions::default(),
            floor: None,
        };
        let err = zero_noise_sweep(&spec, &[(0.05, 100)]).unwrap_err();
        assert!(matches!(err, Error::PairingRule { .. }), "got {err}");
    }

    #[test]
    fn sweep_identical_marginals_costs_vanish() {
        let spec = SweepSpec {
            length: 1.0,
            marginal0: Profile::Gaussian { center: 0.5, scale: 0.05 },
            marginal1: Profile::Gaussian { center: 0.5, scale: 0.05 },
            solver: SolverOptions::default(),
            floor: None,
        };
        let rows = zero_noise_sweep(&spec, &[(0.8, 64), (0.4, 64), (0.2, 64)]).unwrap();
        assert!(rows[0].w2sq_half.abs() < 1e-15);
        for pair in rows.windows(2) {
            assert!(
                pair[1].cost.abs() <= pair[0].cost.abs() + 1e-12,
                "cost should shrink with eps"
            );
        }
        // W2 = 0 here, so the whole cost is entropic overhead ~ eps.
        assert!(rows.last().unwrap().cost < 0.3 * rows[0].cost);
    }
}
