use crate::error::{dim_err, Error, Result};
use crate::linalg::{matrix_exp, mul_adjoint_into, mul_into, trace_norm, CMatrix, DensityMatrix, HermitianEigen, Svd};
use crate::oqbm::OQBMParams;
use crate::scalar::{cplx, Real, C};

/// `𝓛(ρ) = −i[H,ρ] + NρN† − ½{N†N, ρ}`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator<T> {
    n: CMatrix<T>,
    h: CMatrix<T>,
    // K = −iH − ½N†N, so that 𝓛(ρ) = Kρ + ρK† + NρN†
    k: CMatrix<T>,
}

impl<T: Real> LindbladGenerator<T> {
    pub fn new(n: CMatrix<T>, h: CMatrix<T>) -> Result<Self> {
        let d = n.require_square("N")?;
        if h.rows() != d || h.cols() != d {
            return dim_err("N and H differ in dimension");
        }
        let herm = h.hermiticity_defect();
        if herm > T::lit(1e-12) {
            return Err(Error::Contract(format!("H is not Hermitian: deviation {herm:e}")));
        }
        let nn = &n.adjoint() * &n;
        let k = &h.scale(cplx(0.0, -1.0)) - &nn.scale_real(T::lit(0.5));
        Ok(Self { n, h, k })
    }

    pub fn from_params(p: &OQBMParams<T>) -> Self {
        Self::new(p.n().clone(), p.h().clone()).expect("validated parameters")
    }

    pub fn dim(&self) -> usize {
        self.n.rows()
    }

    pub fn n(&self) -> &CMatrix<T> {
        &self.n
    }

    pub fn h(&self) -> &CMatrix<T> {
        &self.h
    }

    /// `−iH − ½N†N`.
    pub fn k(&self) -> &CMatrix<T> {
        &self.k
    }

    /// `N + N†`.
    pub fn drift_operator(&self) -> CMatrix<T> {
        &self.n + &self.n.adjoint()
    }

    /// `T(ρ) = Tr((N + N†)ρ)`.
    pub fn drift(&self, rho: &CMatrix<T>) -> T {
        (&self.n * rho).trace().re * T::lit(2.0)
    }

    /// Largest singular value of `N`.
    pub fn n_norm(&self) -> T {
        HermitianEigen::new(&(&self.n.adjoint() * &self.n)).map(|e| e.max().max(T::zero()).sqrt()).unwrap_or_else(|_| self.n.frobenius_norm())
    }

    pub fn rhs(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        let mut ws = RhsWorkspace::new(d);
        self.rhs_into(rho, &mut out, &mut ws);
        out
    }

    /// Allocation-free [`Self::rhs`].
    pub fn rhs_into(&self, rho: &CMatrix<T>, out: &mut CMatrix<T>, ws: &mut RhsWorkspace<T>) {
        mul_into(&self.n, rho, &mut ws.a);
        mul_adjoint_into(&ws.a, &self.n, out);
        mul_into(&self.k, rho, &mut ws.a);
        *out += &ws.a;
        mul_adjoint_into(rho, &self.k, &mut ws.a);
        *out += &ws.a;
    }

    /// Row-major vectorization: `vec(𝓛(ρ)) = L̂ vec(ρ)` with
    /// `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix<T> {
        let d = self.dim();
        let id = CMatrix::identity(d);
        let mut l = self.k.kron(&id);
        l += &id.kron(&self.k.conj());
        l += &self.n.kron(&self.n.conj());
        l
    }
}

/// Scratch space for [`LindbladGenerator::rhs_into`].
#[derive(Clone, Debug)]
pub struct RhsWorkspace<T> {
    pub(crate) a: CMatrix<T>,
}

impl<T: Real> RhsWorkspace<T> {
    pub fn new(d: usize) -> Self {
        Self { a: CMatrix::zeros(d, d) }
    }
}

/// `𝓛(ρ)`.
pub fn lindblad_rhs<T: Real>(g: &LindbladGenerator<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    if rho.rows() != g.dim() || rho.cols() != g.dim() {
        return dim_err("state and generator differ in dimension");
    }
    Ok(g.rhs(rho))
}

/// Largest admissible `dt·‖L̂‖₁` for [`evolve_rho_g`].
pub const RK4_STABILITY: f64 = 0.1;

/// RK4 integration of `dρ/dt = 𝓛(ρ)` up to time `t` with steps of at most `dt`.
pub fn evolve_rho_g<T: Real>(g: &LindbladGenerator<T>, rho0: &DensityMatrix<T>, t: T, dt: T) -> Result<DensityMatrix<T>> {
    if rho0.dim() != g.dim() {
        return dim_err("state and generator differ in dimension");
    }
    if !(dt > T::zero()) || t < T::zero() {
        return Err(Error::Config(format!("need dt > 0 and t >= 0, got dt={dt}, t={t}")));
    }
    let norm = g.superoperator().norm_one();
    if dt * norm > T::lit(RK4_STABILITY) {
        return Err(Error::Config(format!(
            "dt*||L|| = {:e} exceeds {RK4_STABILITY}",
            (dt * norm).to_f64_lossy()
        )));
    }
    let steps = (t / dt).ceil().to_usize().unwrap_or(0);
    let h = if steps > 0 { t / T::from_usize_lossy(steps) } else { T::zero() };
    let d = g.dim();
    let mut rho = rho0.matrix().clone();
    let mut ws = RhsWorkspace::new(d);
    let (mut k1, mut k2, mut k3, mut k4) = (CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d));
    let mut stage = CMatrix::zeros(d, d);
    let half = h * T::lit(0.5);
    for step in 0..steps {
        g.rhs_into(&rho, &mut k1, &mut ws);
        stage.copy_from(&rho);
        stage.axpy(C::new(half, T::zero()), &k1);
        g.rhs_into(&stage, &mut k2, &mut ws);
        stage.copy_from(&rho);
        stage.axpy(C::new(half, T::zero()), &k2);
        g.rhs_into(&stage, &mut k3, &mut ws);
        stage.copy_from(&rho);
        stage.axpy(C::new(h, T::zero()), &k3);
        g.rhs_into(&stage, &mut k4, &mut ws);
        let w = h / T::lit(6.0);
        for idx in 0..d * d {
            let v = k1.data()[idx] + (k2.data()[idx] + k3.data()[idx]) * T::lit(2.0) + k4.data()[idx];
            rho.data_mut()[idx] += v * w;
        }
        let drift = (rho.trace().re - rho0.matrix().trace().re).abs();
        if drift > T::lit(1e-6) {
            return Err(Error::Integration { step, reason: format!("trace drift {drift:e}") });
        }
    }
    Ok(DensityMatrix::new_unchecked(rho.hermitian_part()))
}

/// `e^{tL̂}` as a `d² × d²` matrix.
pub fn semigroup<T: Real>(g: &LindbladGenerator<T>, t: T) -> Result<CMatrix<T>> {
    matrix_exp(&g.superoperator().scale_real(t))
}

/// `e^{t𝓛}ρ₀` through the vectorized generator.
pub fn evolve_exact<T: Real>(g: &LindbladGenerator<T>, rho0: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    let d = g.dim();
    let v = semigroup(g, t)?.apply(rho0.data());
    Ok(CMatrix::from_vec(d, d, v)?.hermitian_part())
}

/// Result of the invariant-state solve.
#[derive(Clone, Debug)]
pub enum InvariantStates<T> {
    Unique(DensityMatrix<T>),
    /// Null space of dimension > 1: a basis of Hermitian null matrices and a
    /// family of invariant density matrices obtained from it.
    Multiple { basis: Vec<CMatrix<T>>, states: Vec<DensityMatrix<T>> },
}

impl<T: Real> InvariantStates<T> {
    pub fn states(&self) -> Vec<&DensityMatrix<T>> {
        match self {
            Self::Unique(s) => vec![s],
            Self::Multiple { states, .. } => states.iter().collect(),
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, Self::Unique(_))
    }
}

/// Relative singular-value cutoff for the null-space rank decision.
pub const NULL_THRESHOLD: f64 = 1e-10;

fn to_matrix<T: Real>(v: &[C<T>], d: usize) -> CMatrix<T> {
    CMatrix::from_vec(d, d, v.to_vec()).expect("d² entries")
}

/// Hermitian basis of the span of `mats` (closed under † by assumption).
fn hermitian_basis<T: Real>(mats: &[CMatrix<T>]) -> Vec<CMatrix<T>> {
    let mut out: Vec<CMatrix<T>> = Vec::new();
    let target = mats.len();
    for m in mats {
        for cand in [m.hermitian_part(), (m - &m.adjoint()).scale(cplx(0.0, -0.5))] {
            let mut c = cand;
            for b in &out {
                let proj = b.trace_product_re(&c);
                c.axpy(C::new(-proj, T::zero()), b);
            }
            let n = c.frobenius_norm();
            if n > T::lit(1e-8) && out.len() < target {
                out.push(c.scale_real(T::one() / n));
            }
        }
    }
    out
}

/// Null space of 𝓛 via the SVD of `L̂`.
pub fn invariant_state<T: Real>(g: &LindbladGenerator<T>) -> Result<InvariantStates<T>> {
    let d = g.dim();
    let l = g.superoperator();
    let null = Svd::new(&l)?.null_space(T::lit(NULL_THRESHOLD));
    if null.is_empty() {
        return Err(Error::Contract("generator has no null space".into()));
    }
    let mats: Vec<CMatrix<T>> = null.iter().map(|v| to_matrix(v, d)).collect();
    if mats.len() == 1 {
        let m = &mats[0];
        let tr = m.trace();
        if tr.norm() < T::lit(1e-12) {
            return Err(Error::Contract("null vector has zero trace".into()));
        }
        let rho = m.scale(C::new(T::one(), T::zero()) / tr);
        return Ok(InvariantStates::Unique(DensityMatrix::normalized(&rho.hermitian_part())?));
    }
    let basis = hermitian_basis(&mats);
    // Ergodic projection onto the null space along the range:
    // E = R (Lₗ† R)⁻¹ Lₗ†, with Lₗ the left null vectors.
    let left = Svd::new(&l.adjoint())?.null_space(T::lit(NULL_THRESHOLD));
    let k = null.len();
    if left.len() != k {
        return Err(Error::Contract("left and right null spaces differ in dimension".into()));
    }
    let overlap = CMatrix::from_fn(k, k, |i, j| crate::linalg::inner(&left[i], &null[j]));
    let svd = Svd::new(&overlap)?;
    if svd.sigma.last().copied().unwrap_or_else(T::zero) < T::lit(1e-10) {
        return Err(Error::Contract("null space is not semisimple".into()));
    }
    let inv = {
        let sinv = CMatrix::from_real_diag(&svd.sigma.iter().map(|&s| T::one() / s).collect::<Vec<_>>());
        &(&svd.v * &sinv) * &svd.u.adjoint()
    };
    let project = |x: &CMatrix<T>| -> CMatrix<T> {
        let coeffs: Vec<C<T>> = left.iter().map(|lv| crate::linalg::inner(lv, x.data())).collect();
        let c = inv.apply(&coeffs);
        let mut out = CMatrix::zeros(d, d);
        for (j, v) in null.iter().enumerate() {
            out.axpy(c[j], &to_matrix(v, d));
        }
        out
    };
    // Eigenprojectors of a generic Hermitian element of the null space.
    let mut a = CMatrix::zeros(d, d);
    for (i, b) in basis.iter().enumerate() {
        let w = T::lit(1.0 + 0.618_033_988_75 * (i as f64 + 1.0).sqrt());
        a.axpy(C::new(w, T::zero()), b);
    }
    let eig = HermitianEigen::new(&a)?;
    let mut states: Vec<DensityMatrix<T>> = Vec::new();
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && (eig.values[j] - eig.values[i]).abs() < T::lit(1e-8) {
            j += 1;
        }
        let mut p = CMatrix::zeros(d, d);
        for c in i..j {
            p += &CMatrix::projector(&eig.eigenvector(c));
        }
        let s = project(&p).hermitian_part();
        if s.trace().re > T::lit(1e-10) {
            let s = DensityMatrix::normalized(&s)?;
            let dup = states
                .iter()
                .any(|o| trace_norm(&(o.matrix() - s.matrix())).map(|x| x < T::lit(1e-8)).unwrap_or(false));
            if !dup {
                states.push(s);
            }
        }
        i = j;
    }
    Ok(InvariantStates::Multiple { basis, states })
}

/// `Tr((N + N†)ρ∞)` for each invariant state.
#[derive(Clone, Debug, PartialEq)]
pub enum BallisticSpeed<T> {
    Unique(T),
    PerState(Vec<T>),
}

pub fn ballistic_speed<T: Real>(g: &LindbladGenerator<T>) -> Result<BallisticSpeed<T>> {
    let s = g.drift_operator();
    Ok(match invariant_state(g)? {
        InvariantStates::Unique(r) => BallisticSpeed::Unique(r.matrix().trace_product_re(&s)),
        InvariantStates::Multiple { states, .. } => {
            BallisticSpeed::PerState(states.iter().map(|r| r.matrix().trace_product_re(&s)).collect())
        }
    })
}

/// `‖𝓛(ρ)‖_∞`, the residual of an invariant state.
pub fn residual<T: Real>(g: &LindbladGenerator<T>, rho: &CMatrix<T>) -> T {
    g.rhs(rho).max_abs()
}
