//! Finite reversible metric measure spaces and their heat flow.
//!
//! A [`Space`] is a set of `n` points together with a distance matrix `d`,
//! strictly positive reference weights `m`, and a generator `Δ` whose rows
//! sum to zero, whose off-diagonal entries are nonnegative, and which is
//! reversible with respect to `m`: `m_i Δ_ij = m_j Δ_ji`.
//!
//! The heat flow `h_t = exp(tΔ)` is evaluated through the spectral
//! decomposition of the weight-symmetrized generator
//! `S = D^{1/2} Δ D^{-1/2}` (with `D = diag(m)`), computed once at
//! construction and cached. This makes the semigroup law, mass preservation
//! and self-adjointness exact up to floating point, which is what the
//! downstream identity checks require.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Geometry tag; the 1-D W2 oracle only accepts interval geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Periodic 1-D grid (arc-length distance).
    Circle,
    /// 1-D grid with reflecting (Neumann) ends, cell-centered coordinates.
    Interval,
    /// General weighted graph.
    Graph,
}

/// Cached eigendecomposition of the symmetrized generator.
///
/// `S = U diag(λ) Uᵀ` with `S = D^{1/2} Δ D^{-1/2}`, so
/// `exp(tΔ) = D^{-1/2} U diag(e^{tλ}) Uᵀ D^{1/2}`.
#[derive(Debug, Clone)]
struct Spectrum {
    /// Eigenvalues in ascending order (most negative first, ~0 last).
    eigenvalues: Array1<f64>,
    /// Orthonormal eigenvector columns of the symmetrized generator.
    basis: Array2<f64>,
    sqrt_weights: Array1<f64>,
}

impl Spectrum {
    fn compute(generator: &Array2<f64>, weights: &Array1<f64>) -> Self {
        let n = weights.len();
        let sqrt_weights = weights.mapv(f64::sqrt);
        // Symmetrize: by reversibility S is symmetric up to rounding;
        // average to hand the eigensolver an exactly symmetric matrix.
        let mut sym = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let a = sqrt_weights[i] * generator[[i, j]] / sqrt_weights[j];
                let b = sqrt_weights[j] * generator[[j, i]] / sqrt_weights[i];
                let s = 0.5 * (a + b);
                sym[(i, j)] = s;
                sym[(j, i)] = s;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
        let mut basis = Array2::zeros((n, n));
        for (col, &k) in order.iter().enumerate() {
            for row in 0..n {
                basis[[row, col]] = eig.eigenvectors[(row, k)];
            }
        }
        Spectrum {
            eigenvalues,
            basis,
            sqrt_weights,
        }
    }

    /// exp(tΔ) f through the cached basis; two dense matvecs.
    fn apply(&self, t: f64, f: &Array1<f64>) -> Array1<f64> {
        let scaled = &self.sqrt_weights * f;
        let mut coeffs = self.basis.t().dot(&scaled);
        for (c, &lam) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= (t * lam).exp();
        }
        self.basis.dot(&coeffs) / &self.sqrt_weights
    }
}

/// A finite reversible metric measure space with cached heat-flow spectrum.
#[derive(Debug, Clone)]
pub struct Space {
    kind: SpaceKind,
    coords: Option<Array1<f64>>,
    dist: Array2<f64>,
    weights: Array1<f64>,
    generator: Array2<f64>,
    spectrum: Spectrum,
    /// Total length for circle geometry (needed for wrap-around profiles).
    circumference: Option<f64>,
}

impl Space {
    /// Periodic 1-D grid: `n` points, spacing `h = length/n`, weights `h`,
    /// generator the wrap-around second-difference stencil scaled by `1/h²`,
    /// distance the arc length.
    pub fn circle_grid(n: usize, length: f64) -> Result<Space> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "circle grid needs n >= 3, got {n}"
            )));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "circle grid needs length > 0, got {length}"
            )));
        }
        let h = length / n as f64;
        let inv_h2 = 1.0 / (h * h);
        let mut generator = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            generator[[i, prev]] += inv_h2;
            generator[[i, next]] += inv_h2;
            generator[[i, i]] = -(generator[[i, prev]] + generator[[i, next]]);
        }
        let mut dist = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let k = i.abs_diff(j);
                dist[[i, j]] = (k.min(n - k)) as f64 * h;
            }
        }
        let weights = Array1::from_elem(n, h);
        let coords = Array1::from_iter((0..n).map(|i| i as f64 * h));
        let spectrum = Spectrum::compute(&generator, &weights);
        Ok(Space {
            kind: SpaceKind::Circle,
            coords: Some(coords),
            dist,
            weights,
            generator,
            spectrum,
            circumference: Some(length),
        })
    }

    /// 1-D grid on `[0, length]` with reflecting ends: cell centers
    /// `x_i = (i + ½)h`, weights `h`, Neumann second-difference stencil,
    /// Euclidean distance.
    pub fn interval_grid(n: usize, length: f64) -> Result<Space> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "interval grid needs n >= 2, got {n}"
            )));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interval grid needs length > 0, got {length}"
            )));
        }
        let h = length / n as f64;
        let inv_h2 = 1.0 / (h * h);
        let mut generator = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            if i > 0 {
                generator[[i, i - 1]] = inv_h2;
            }
            if i + 1 < n {
                generator[[i, i + 1]] = inv_h2;
            }
            let row_off: f64 = (0..n).filter(|&j| j != i).map(|j| generator[[i, j]]).sum();
            generator[[i, i]] = -row_off;
        }
        let mut dist = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                dist[[i, j]] = i.abs_diff(j) as f64 * h;
            }
        }
        let weights = Array1::from_elem(n, h);
        let coords = Array1::from_iter((0..n).map(|i| (i as f64 + 0.5) * h));
        let spectrum = Spectrum::compute(&generator, &weights);
        Ok(Space {
            kind: SpaceKind::Interval,
            coords: Some(coords),
            dist,
            weights,
            generator,
            spectrum,
            circumference: None,
        })
    }

    /// Weighted graph: `generator[i][j] = c_ij / m_i` off-diagonal, diagonal
    /// set so rows sum to zero. Reversibility holds by construction since the
    /// conductances are symmetric. When `dist` is omitted, hop distance on the
    /// graph is used.
    pub fn graph(
        edges: &[(usize, usize, f64)],
        weights: &[f64],
        dist: Option<Array2<f64>>,
    ) -> Result<Space> {
        let n = weights.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "graph needs at least 2 points, got {n}"
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be strictly positive, got {} at index {i}",
                weights[i]
            )));
        }
        let mut conductance = Array2::<f64>::zeros((n, n));
        for &(i, j, c) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for {n} points"
                )));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "conductance on edge ({i}, {j}) must be positive, got {c}"
                )));
            }
            conductance[[i, j]] += c;
            conductance[[j, i]] += c;
        }
        let weights = Array1::from_iter(weights.iter().copied());
        let mut generator = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    generator[[i, j]] = conductance[[i, j]] / weights[i];
                    row += generator[[i, j]];
                }
            }
            generator[[i, i]] = -row;
        }
        let dist = match dist {
            Some(d) => {
                validate_distance(&d, n)?;
                d
            }
            None => hop_distance(&conductance, n)?,
        };
        let spectrum = Spectrum::compute(&generator, &weights);
        let space = Space {
            kind: SpaceKind::Graph,
            coords: None,
            dist,
            weights,
            generator,
            spectrum,
            circumference: None,
        };
        if !space.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(space)
    }

    /// Parse the plain-text edge-list format:
    ///
    /// ```text
    /// # comment
    /// weights 1.0 1.0 2.0
    /// 0 1 1.0
    /// 1 2 0.5
    /// dist
    /// 0.0 1.0 2.0
    /// 1.0 0.0 1.0
    /// 2.0 1.0 0.0
    /// ```
    ///
    /// One `i j conductance` triple per line, a mandatory `weights` line, and
    /// an optional `dist` block holding the full matrix row by row. Without a
    /// `dist` block, hop distance is used.
    pub fn from_edge_list(text: &str) -> Result<Space> {
        let mut weights: Option<Vec<f64>> = None;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut dist_rows: Vec<Vec<f64>> = Vec::new();
        let mut in_dist = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| {
                Error::InvalidParameter(format!("edge list line {}: {msg}", lineno + 1))
            };
            if in_dist {
                let row: std::result::Result<Vec<f64>, _> =
                    line.split_whitespace().map(str::parse::<f64>).collect();
                dist_rows.push(row.map_err(|e| err(format!("bad distance row: {e}")))?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("weights") {
                let ws: std::result::Result<Vec<f64>, _> =
                    rest.split_whitespace().map(str::parse::<f64>).collect();
                weights = Some(ws.map_err(|e| err(format!("bad weights: {e}")))?);
            } else if line == "dist" {
                in_dist = true;
            } else {
                let mut parts = line.split_whitespace();
                let i: usize = parts
                    .next()
                    .ok_or_else(|| err("missing edge source".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad edge source: {e}")))?;
                let j: usize = parts
                    .next()
                    .ok_or_else(|| err("missing edge target".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad edge target: {e}")))?;
                let c: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing conductance".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad conductance: {e}")))?;
                if parts.next().is_some() {
                    return Err(err("expected exactly `i j conductance`".into()));
                }
                edges.push((i, j, c));
            }
        }
        let weights = weights.ok_or_else(|| {
            Error::InvalidParameter("edge list is missing the `weights` line".into())
        })?;
        let n = weights.len();
        let dist = if dist_rows.is_empty() {
            None
        } else {
            if dist_rows.len() != n || dist_rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidParameter(format!(
                    "distance block must be an {n}x{n} matrix"
                )));
            }
            let mut d = Array2::zeros((n, n));
            for (i, row) in dist_rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    d[[i, j]] = v;
                }
            }
            Some(d)
        };
        Space::graph(&edges, &weights, dist)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// Whether the space is empty (never true for a constructed space).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Real coordinates per point, available for grid builders.
    pub fn coords(&self) -> Option<&Array1<f64>> {
        self.coords.as_ref()
    }

    /// Total length for circle geometry.
    pub fn circumference(&self) -> Option<f64> {
        self.circumference
    }

    pub fn dist(&self) -> &Array2<f64> {
        &self.dist
    }

    /// Reference measure weights `m` (strictly positive).
    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    /// Total mass `m(X)`.
    pub fn total_mass(&self) -> f64 {
        self.weights.sum()
    }

    pub fn generator(&self) -> &Array2<f64> {
        &self.generator
    }

    /// Δf.
    pub fn generator_apply(&self, f: &Array1<f64>) -> Array1<f64> {
        self.generator.dot(f)
    }

    /// Eigenvalues of the symmetrized generator, ascending.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.spectrum.eigenvalues
    }

    /// Largest |λ|; governs explicit time-step limits downstream.
    pub fn spectral_radius(&self) -> f64 {
        self.spectrum
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &l| a.max(l.abs()))
    }

    /// Connectivity via zero-eigenvalue multiplicity: exactly one eigenvalue
    /// within `1e-9 * spectral_radius` of zero.
    pub fn is_connected(&self) -> bool {
        let tol = 1e-9 * self.spectral_radius().max(1.0);
        self.spectrum
            .eigenvalues
            .iter()
            .filter(|&&l| l.abs() <= tol)
            .count()
            == 1
    }

    /// Heat flow `h_t f = exp(tΔ) f`, exact through the cached spectrum.
    pub fn heat_apply(&self, t: f64, f: &Array1<f64>) -> Result<Array1<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.check_len(f)?;
        if t == 0.0 {
            return Ok(f.clone());
        }
        Ok(self.spectrum.apply(t, f))
    }

    /// `log(h_t e^u)` with max-subtraction, the stabilized building block of
    /// log-domain IPFP and the entropic Hopf-Lax operator. Finite output is
    /// guaranteed on connected spaces as long as `h_t e^{u - max u}` does not
    /// underflow entirely.
    pub fn log_heat_apply(&self, t: f64, u: &Array1<f64>) -> Result<Array1<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.check_len(u)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = u.mapv(|x| (x - shift).exp());
        let h = self.spectrum.apply(t, &v);
        Ok(h.mapv(|x| x.max(0.0).ln() + shift))
    }

    /// Heat kernel `r_t[x][y] = exp(tΔ)[x][y] / m_y`, symmetric and mass
    /// preserving: `Σ_y r_t[x][y] m_y = 1`.
    pub fn heat_kernel(&self, t: f64) -> Result<Array2<f64>> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "heat kernel needs t > 0, got {t}"
            )));
        }
        let n = self.len();
        let spec = &self.spectrum;
        // r = D^{-1/2} U e^{tλ} Uᵀ D^{-1/2}
        let mut scaled = spec.basis.clone();
        for (mut col, &lam) in scaled.columns_mut().into_iter().zip(spec.eigenvalues.iter()) {
            col *= (t * lam).exp();
        }
        let mut kernel = scaled.dot(&spec.basis.t());
        for i in 0..n {
            for j in 0..n {
                kernel[[i, j]] /= spec.sqrt_weights[i] * spec.sqrt_weights[j];
            }
        }
        Ok(kernel)
    }

    fn check_len(&self, f: &Array1<f64>) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

fn validate_distance(d: &Array2<f64>, n: usize) -> Result<()> {
    if d.shape() != [n, n] {
        return Err(Error::InconsistentDistance(format!(
            "expected {n}x{n}, got {:?}",
            d.shape()
        )));
    }
    for i in 0..n {
        if d[[i, i]] != 0.0 {
            return Err(Error::InconsistentDistance(format!(
                "nonzero diagonal at {i}"
            )));
        }
        for j in 0..n {
            if i != j && !(d[[i, j]] > 0.0) {
                return Err(Error::InconsistentDistance(format!(
                    "d[{i}][{j}] = {} is not positive",
                    d[[i, j]]
                )));
            }
            if (d[[i, j]] - d[[j, i]]).abs() > 1e-12 * (1.0 + d[[i, j]].abs()) {
                return Err(Error::InconsistentDistance(format!(
                    "asymmetry at ({i}, {j})"
                )));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[[i, j]] > d[[i, k]] + d[[k, j]] + 1e-12 {
                    return Err(Error::InconsistentDistance(format!(
                        "triangle inequality fails for ({i}, {j}) via {k}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Breadth-first hop distance; errors on disconnected graphs.
fn hop_distance(conductance: &Array2<f64>, n: usize) -> Result<Array2<f64>> {
    let mut dist = Array2::from_elem((n, n), f64::INFINITY);
    for start in 0..n {
        let mut frontier = vec![start];
        dist[[start, start]] = 0.0;
        let mut level = 0.0;
        while !frontier.is_empty() {
            level += 1.0;
            let mut next = Vec::new();
            for &u in &frontier {
                for v in 0..n {
                    if conductance[[u, v]] > 0.0 && dist[[start, v]].is_infinite() {
                        dist[[start, v]] = level;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
    }
    if dist.iter().any(|d| d.is_infinite()) {
        return Err(Error::Disconnected);
    }
    Ok(dist)
}
