//! Open quantum walks on finite directed graphs.

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{mul_adjoint_into, mul_into, CMatrix, DensityMatrix};
use crate::rng::path_rng;
use crate::scalar::Real;
use crate::stats::{chunked_reduce, MatrixMoments, DEFAULT_CHUNK};

/// Transition probabilities below this are treated as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-14;

/// Directed edge `from → to` carrying the Kraus operator `B_{(from→to)}`.
#[derive(Clone, Debug)]
pub struct Edge<T> {
    pub from: usize,
    pub to: usize,
    pub kraus: CMatrix<T>,
}

#[derive(Clone, Debug)]
pub struct OQWKernel<T> {
    n_vertices: usize,
    dim: usize,
    edges: Vec<Edge<T>>,
    out: Vec<Vec<usize>>,
    // K†K per edge, so that a transition probability is a single trace product.
    effects: Vec<CMatrix<T>>,
}

impl<T: Real> OQWKernel<T> {
    /// Checks `Σ_y K†K = I` at every vertex to `tol`.
    pub fn new(n_vertices: usize, edges: Vec<Edge<T>>, tol: T) -> Result<Self> {
        let dim = edges
            .first()
            .ok_or_else(|| Error::Contract("kernel without edges".into()))?
            .kraus
            .require_square("Kraus operator")?;
        let mut out = vec![Vec::new(); n_vertices];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n_vertices || e.to >= n_vertices {
                return Err(Error::Domain(format!("edge {}->{} leaves the vertex set", e.from, e.to)));
            }
            if e.kraus.rows() != dim || e.kraus.cols() != dim {
                return dim_err(format!("edge {}->{} Kraus operator has wrong shape", e.from, e.to));
            }
            out[e.from].push(i);
        }
        let effects: Vec<CMatrix<T>> = edges.iter().map(|e| &e.kraus.adjoint() * &e.kraus).collect();
        for (x, idx) in out.iter().enumerate() {
            let mut s = CMatrix::zeros(dim, dim);
            for &i in idx {
                s += &effects[i];
            }
            let defect = (&s - &CMatrix::identity(dim)).max_abs();
            if !(defect <= tol) {
                return Err(Error::Contract(format!("vertex {x}: completeness defect {defect:e}")));
            }
        }
        Ok(Self { n_vertices, dim, edges, out, effects })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Edge indices leaving `x`.
    pub fn out_edges(&self, x: usize) -> &[usize] {
        &self.out[x]
    }

    /// Classical chain: `K = √p(x,y)·I`.
    pub fn classical(stochastic: &[Vec<f64>], dim: usize) -> Result<Self> {
        let n = stochastic.len();
        let mut edges = Vec::new();
        for (x, row) in stochastic.iter().enumerate() {
            if row.len() != n {
                return dim_err("stochastic matrix is not square");
            }
            for (y, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    return Err(Error::Contract(format!("negative transition probability at ({x},{y})")));
                }
                if p > 0.0 {
                    edges.push(Edge { from: x, to: y, kraus: CMatrix::identity(dim).scale_real(T::lit(p.sqrt())) });
                }
            }
        }
        Self::new(n, edges, T::lit(1e-10))
    }
}

/// `ρ = Σ_x ρ(x) ⊗ |x⟩⟨x|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalState<T> {
    sites: Vec<CMatrix<T>>,
}

impl<T: Real> DiagonalState<T> {
    pub fn new(sites: Vec<CMatrix<T>>) -> Result<Self> {
        let dim = sites.first().map_or(0, CMatrix::rows);
        let mut total = T::zero();
        for (x, m) in sites.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return dim_err(format!("site {x} has wrong shape"));
            }
            if !m.is_hermitian(T::lit(1e-12)) {
                return Err(Error::Contract(format!("site {x} is not Hermitian")));
            }
            if crate::linalg::min_eigenvalue(m)? < T::lit(-1e-10) {
                return Err(Error::Contract(format!("site {x} is not PSD")));
            }
            total += m.trace().re;
        }
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Contract(format!("total trace {total} != 1")));
        }
        Ok(Self { sites })
    }

    pub fn new_unchecked(sites: Vec<CMatrix<T>>) -> Self {
        Self { sites }
    }

    /// `ρ ⊗ |x⟩⟨x|`.
    pub fn point(n_vertices: usize, x: usize, rho: &DensityMatrix<T>) -> Self {
        let mut sites = vec![CMatrix::zeros(rho.dim(), rho.dim()); n_vertices];
        sites[x] = rho.matrix().clone();
        Self { sites }
    }

    pub fn sites(&self) -> &[CMatrix<T>] {
        &self.sites
    }

    pub fn total_trace(&self) -> T {
        self.sites.iter().map(|m| m.trace().re).sum()
    }

    /// `Σ_x ρ(x)`.
    pub fn gyro_marginal(&self) -> CMatrix<T> {
        let d = self.sites.first().map_or(0, CMatrix::rows);
        let mut m = CMatrix::zeros(d, d);
        for s in &self.sites {
            m += s;
        }
        m
    }

    /// Summed trace norm of the site-wise difference.
    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.sites.len() != other.sites.len() {
            return dim_err("diagonal states on different vertex sets");
        }
        let mut s = T::zero();
        for (a, b) in self.sites.iter().zip(&other.sites) {
            s += crate::linalg::trace_norm(&(a - b))?;
        }
        Ok(s)
    }
}

/// `output(y) = Σ_{x→y} K ρ(x) K†`.
pub fn oqw_apply<T: Real>(kernel: &OQWKernel<T>, s: &DiagonalState<T>) -> Result<DiagonalState<T>> {
    if s.sites.len() != kernel.n_vertices {
        return Err(Error::Domain(format!(
            "state has {} sites, kernel has {} vertices",
            s.sites.len(),
            kernel.n_vertices
        )));
    }
    let d = kernel.dim;
    if s.sites.iter().any(|m| m.rows() != d) {
        return dim_err("state and kernel disagree on the gyroscope dimension");
    }
    let mut out = vec![CMatrix::zeros(d, d); kernel.n_vertices];
    for e in &kernel.edges {
        out[e.to] += &e.kraus.sandwich(&s.sites[e.from]);
    }
    Ok(DiagonalState { sites: out })
}

/// Scratch buffers for allocation-free trajectory stepping.
#[derive(Clone, Debug)]
pub struct StepWorkspace<T> {
    tmp: CMatrix<T>,
    out: CMatrix<T>,
    probs: Vec<T>,
}

impl<T: Real> StepWorkspace<T> {
    pub fn new(dim: usize) -> Self {
        Self { tmp: CMatrix::zeros(dim, dim), out: CMatrix::zeros(dim, dim), probs: Vec::new() }
    }
}

/// Samples the next vertex from `x` and overwrites `rho` with the normalized
/// post-state.
pub fn sample_step_in_place<T: Real, R: Rng + ?Sized>(
    kernel: &OQWKernel<T>,
    rho: &mut CMatrix<T>,
    x: usize,
    rng: &mut R,
    ws: &mut StepWorkspace<T>,
) -> Result<usize> {
    let edges = kernel
        .out
        .get(x)
        .ok_or_else(|| Error::Domain(format!("vertex {x} is not in the kernel")))?;
    ws.probs.clear();
    let mut total = T::zero();
    for &i in edges {
        let p = kernel.effects[i].trace_product_re(rho).max(T::zero());
        ws.probs.push(p);
        total += p;
    }
    if ws.probs.iter().all(|&p| p < T::lit(DEGENERATE_THRESHOLD)) {
        return Err(Error::DegenerateStep { vertex: x, threshold: DEGENERATE_THRESHOLD });
    }
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::Contract(format!("transition probabilities at vertex {x} sum to {total}")));
    }
    let u = T::lit(rng.random::<f64>()) * total;
    let mut acc = T::zero();
    let mut pick = edges.len() - 1;
    for (k, &p) in ws.probs.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = k;
            break;
        }
    }
    // never select a null branch through rounding at the top end
    while ws.probs[pick] < T::lit(DEGENERATE_THRESHOLD) {
        pick -= 1;
    }
    let e = &kernel.edges[edges[pick]];
    mul_into(&e.kraus, rho, &mut ws.tmp);
    mul_adjoint_into(&ws.tmp, &e.kraus, &mut ws.out);
    let p = ws.probs[pick];
    let inv = T::one() / p;
    for (r, o) in rho.data_mut().iter_mut().zip(ws.out.data()) {
        *r = *o * inv;
    }
    // exact Hermitian symmetry keeps long runs from drifting
    let d = rho.rows();
    for i in 0..d {
        rho[(i, i)].im = T::zero();
        for j in i + 1..d {
            let z = (rho[(i, j)] + rho[(j, i)].conj()) * T::lit(0.5);
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
        }
    }
    Ok(e.to)
}

/// One quantum-trajectory step: samples `y` with probability `Tr(KϱK†)`.
pub fn sample_step<T: Real, R: Rng + ?Sized>(
    kernel: &OQWKernel<T>,
    rho: &DensityMatrix<T>,
    x: usize,
    rng: &mut R,
) -> Result<(usize, DensityMatrix<T>)> {
    if rho.dim() != kernel.dim {
        return dim_err("state and kernel disagree on the gyroscope dimension");
    }
    let mut m = rho.matrix().clone();
    let mut ws = StepWorkspace::new(kernel.dim);
    let y = sample_step_in_place(kernel, &mut m, x, rng, &mut ws)?;
    Ok((y, DensityMatrix::new_unchecked(m)))
}

/// Sampled path `(X_n, ϱ_n)`.
#[derive(Clone, Debug)]
pub struct QuantumTrajectory<T, P = usize> {
    pub times: Vec<usize>,
    pub positions: Vec<P>,
    pub states: Vec<DensityMatrix<T>>,
    pub rng_seed: u64,
    pub stream: u64,
}

/// Runs `n_steps` steps from `(ρ₀, x₀)` on stream `(seed, stream)`.
pub fn run_trajectory<T: Real>(
    kernel: &OQWKernel<T>,
    rho0: &DensityMatrix<T>,
    x0: usize,
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> Result<QuantumTrajectory<T>> {
    let mut rng = path_rng(seed, stream);
    let mut rho = rho0.clone();
    let mut x = x0;
    let mut traj = QuantumTrajectory {
        times: vec![0],
        positions: vec![x0],
        states: vec![rho0.clone()],
        rng_seed: seed,
        stream,
    };
    for n in 1..=n_steps {
        let (y, next) = sample_step(kernel, &rho, x, &mut rng)?;
        x = y;
        rho = next;
        traj.times.push(n);
        traj.positions.push(x);
        traj.states.push(rho.clone());
    }
    Ok(traj)
}

/// Absolute slack added to the 5σ test of [`expectation_identity_check`].
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Monte Carlo estimate of `E(ϱ_n ⊗ |X_n⟩⟨X_n|)` against `oqw_apply^n`.
#[derive(Clone, Debug)]
pub struct IdentityReport<T> {
    pub per_site_distance: Vec<T>,
    pub per_site_stderr: Vec<T>,
    pub discrepancy: T,
    pub stderr_sum: T,
    pub n_samples: usize,
    pub pass: bool,
}

pub fn expectation_identity_check<T: Real>(
    kernel: &OQWKernel<T>,
    rho0: &DensityMatrix<T>,
    x0: usize,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<IdentityReport<T>> {
    let nv = kernel.n_vertices;
    let d = kernel.dim;
    if x0 >= nv {
        return Err(Error::Domain(format!("start vertex {x0} not in the kernel")));
    }
    let mut exact = DiagonalState::point(nv, x0, rho0);
    for _ in 0..n_steps {
        exact = oqw_apply(kernel, &exact)?;
    }
    let init = || (vec![MatrixMoments::<T>::new(d, d); nv], None::<Error>);
    let (moments, err) = chunked_reduce(
        n_samples,
        DEFAULT_CHUNK,
        init,
        |i, acc| {
            if acc.1.is_some() {
                return;
            }
            let mut rng = path_rng(seed, i as u64);
            let mut rho = rho0.matrix().clone();
            let mut ws = StepWorkspace::new(d);
            let mut x = x0;
            for _ in 0..n_steps {
                match sample_step_in_place(kernel, &mut rho, x, &mut rng, &mut ws) {
                    Ok(y) => x = y,
                    Err(e) => {
                        acc.1 = Some(e);
                        return;
                    }
                }
            }
            for (v, m) in acc.0.iter_mut().enumerate() {
                if v == x {
                    m.push(&rho);
                } else {
                    m.push_zero();
                }
            }
        },
        |a, b| {
            if a.1.is_none() {
                a.1 = b.1;
            }
            for (m, o) in a.0.iter_mut().zip(&b.0) {
                m.merge(o);
            }
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    let mut per_site_distance = Vec::with_capacity(nv);
    let mut per_site_stderr = Vec::with_capacity(nv);
    for (m, ex) in moments.iter().zip(exact.sites()) {
        per_site_distance.push(crate::linalg::trace_norm(&(&m.mean() - ex))?);
        per_site_stderr.push(m.trace_norm_stderr());
    }
    let discrepancy: T = per_site_distance.iter().copied().sum();
    let stderr_sum: T = per_site_stderr.iter().copied().sum();
    Ok(IdentityReport {
        // the floor covers zero-variance (deterministic) walks
        pass: discrepancy <= T::lit(5.0) * stderr_sum + T::lit(ROUNDOFF_FLOOR),
        per_site_distance,
        per_site_stderr,
        discrepancy,
        stderr_sum,
        n_samples,
    })
}
