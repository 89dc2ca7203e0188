//! Measured evolutions on finite outcome sets: the non-demolition certificate,
//! the exact unraveling by enumeration of measurement histories, and the
//! comparison with sequential pointer-based indirect measurement.

use num_traits::{One, Zero};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{embed_operator, partial_trace, trace_distance, CMatrix, DensityMatrix, Subsystem};
use crate::measure::{check_resolution, PointerMap, NULL_PROBABILITY};
use crate::oqw::OQWKernel;
use crate::scalar::{re, Real, C};

/// Threshold used by the certificate and the consistency report.
pub const EXACT_TOL: f64 = 1e-10;
/// Largest number of outcome histories `Π_t |X_t|` that will be enumerated.
pub const MAX_HISTORIES: usize = 10_000;
/// History products with smaller max-norm are treated as zero.
const ATOM_TOL: f64 = 1e-12;

/// Unitaries `U_t` on `H_G ⊗ H_B` for `t = 0..=n` and, per time, a projective
/// measurement on `H_B` given as a list of projectors (one per outcome).
#[derive(Clone, Debug)]
pub struct MeasuredEvolution<T> {
    dg: usize,
    db: usize,
    unitaries: Vec<CMatrix<T>>,
    algebras: Vec<Vec<CMatrix<T>>>,
}

impl<T: Real> MeasuredEvolution<T> {
    pub fn new(dg: usize, db: usize, unitaries: Vec<CMatrix<T>>, algebras: Vec<Vec<CMatrix<T>>>) -> Result<Self> {
        if unitaries.is_empty() || unitaries.len() != algebras.len() {
            return dim_err(format!(
                "{} unitaries for {} measurement times",
                unitaries.len(),
                algebras.len()
            ));
        }
        let d = dg * db;
        for (t, u) in unitaries.iter().enumerate() {
            if u.rows() != d || u.cols() != d {
                return dim_err(format!("U_{t} is {}x{}, expected {d}x{d}", u.rows(), u.cols()));
            }
            let defect = u.unitarity_defect();
            if defect > T::lit(EXACT_TOL) {
                return Err(Error::Contract(format!("U_{t} not unitary: defect {defect:e}")));
            }
        }
        let id_defect = (&unitaries[0] - &CMatrix::identity(d)).max_abs();
        if id_defect > T::lit(1e-12) {
            return Err(Error::Contract(format!("U_0 differs from the identity by {id_defect:e}")));
        }
        for family in &algebras {
            check_resolution(family, db)?;
        }
        Ok(Self { dg, db, unitaries, algebras })
    }

    pub fn dg(&self) -> usize {
        self.dg
    }

    pub fn db(&self) -> usize {
        self.db
    }

    /// Number of measurement times.
    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitary(&self, t: usize) -> &CMatrix<T> {
        &self.unitaries[t]
    }

    pub fn algebra(&self, t: usize) -> &[CMatrix<T>] {
        &self.algebras[t]
    }

    pub fn outcome_sizes(&self) -> Vec<usize> {
        self.algebras.iter().map(Vec::len).collect()
    }

    /// `U_{t,s} = U_t U_s†`.
    pub fn propagator(&self, t: usize, s: usize) -> CMatrix<T> {
        &self.unitaries[t] * &self.unitaries[s].adjoint()
    }

    /// `I_G ⊗ P`.
    pub fn lift(&self, p: &CMatrix<T>) -> CMatrix<T> {
        CMatrix::identity(self.dg).kron(p)
    }

    /// `heis[t][s][a] = U_{t,s} (I_G ⊗ P^s_a) U_{t,s}†` for `s ≤ t`.
    fn heisenberg_table(&self) -> Vec<Vec<Vec<CMatrix<T>>>> {
        (0..self.len())
            .map(|t| {
                (0..=t)
                    .map(|s| {
                        let u = self.propagator(t, s);
                        self.algebras[s].iter().map(|p| u.sandwich(&self.lift(p))).collect()
                    })
                    .collect()
            })
            .collect()
    }

    fn check_state(&self, rho0: &DensityMatrix<T>) -> Result<()> {
        if rho0.dim() != self.dg * self.db {
            return dim_err(format!(
                "initial state of dim {} is not on H_G({}) ⊗ H_B({})",
                rho0.dim(),
                self.dg,
                self.db
            ));
        }
        Ok(())
    }
}

/// Result of [`check_nondemolition`].
#[derive(Clone, Debug)]
pub struct NondemolitionReport<T> {
    /// Largest `‖[U_{t,s}PU_{t,s}†, I_G ⊗ Q]‖_max` over `s < t`, `P ∈ 𝒜_s`, `Q ∈ 𝒜_t`.
    pub max_commutator: T,
    /// Largest `‖X − I_G ⊗ Tr_G(X)/d_G‖_max` over the same transported projectors `X`.
    pub max_factorization_defect: T,
    pub passed: bool,
}

/// Exhaustive check that every transported earlier projector commutes with the
/// current measurement and acts trivially on `H_G`.
pub fn check_nondemolition<T: Real>(me: &MeasuredEvolution<T>) -> NondemolitionReport<T> {
    let mut max_commutator = T::zero();
    let mut max_factorization_defect = T::zero();
    let lifted: Vec<Vec<CMatrix<T>>> =
        me.algebras.iter().map(|fam| fam.iter().map(|p| me.lift(p)).collect()).collect();
    for t in 0..me.len() {
        for s in 0..t {
            let u = me.propagator(t, s);
            for p in &lifted[s] {
                let x = u.sandwich(p);
                for q in &lifted[t] {
                    max_commutator = max_commutator.max(x.commutator(q).max_abs());
                }
                // dimensions always match here
                let y = partial_trace(&x, (me.dg, me.db), Subsystem::B)
                    .expect("dimensions checked at construction")
                    .scale_real(T::one() / T::from_usize_lossy(me.dg));
                max_factorization_defect = max_factorization_defect.max((&x - &me.lift(&y)).max_abs());
            }
        }
    }
    let tol = T::lit(EXACT_TOL);
    NondemolitionReport {
        max_commutator,
        max_factorization_defect,
        passed: max_commutator <= tol && max_factorization_defect <= tol,
    }
}

/// Mixed-radix encoding of outcome prefixes `(a_0, …, a_t)`.
fn encode(prefix: &[usize], sizes: &[usize]) -> usize {
    prefix.iter().zip(sizes).fold(0, |acc, (&a, &n)| acc * n + a)
}

fn decode(mut code: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &n) in out.iter_mut().zip(sizes).rev() {
        *slot = code % n;
        code /= n;
    }
    out
}

fn history_capacity(sizes: &[usize]) -> Result<usize> {
    sizes.iter().try_fold(1usize, |acc, &n| {
        acc.checked_mul(n).filter(|&v| v <= MAX_HISTORIES).ok_or_else(|| {
            Error::Capacity(format!("more than {MAX_HISTORIES} outcome histories"))
        })
    })
}

/// Exact law of the measurement histories and the conditional system states.
///
/// For each time `t`, tables are indexed by the mixed-radix code of the prefix
/// `(a_0, …, a_t)`; see [`UnravelingDistribution::code`].
#[derive(Clone, Debug)]
pub struct UnravelingDistribution<T> {
    pub outcome_sizes: Vec<usize>,
    /// `prefix_probabilities[t][code]`.
    pub prefix_probabilities: Vec<Vec<T>>,
    /// Conditional states on `H_G`; `None` below the null threshold.
    pub states: Vec<Vec<Option<DensityMatrix<T>>>>,
    /// Codes of the prefixes whose history product is nonzero (atoms of the joint algebra).
    pub atoms: Vec<Vec<usize>>,
    /// `phi[t][i]`: value of `X_t` on atom `i` of time `t`.
    pub phi: Vec<Vec<usize>>,
    /// `eta[t][s][i]`: index among the time-`s` atoms of the restriction of atom `i`.
    pub eta: Vec<Vec<Vec<usize>>>,
}

impl<T: Real> UnravelingDistribution<T> {
    pub fn code(&self, prefix: &[usize]) -> usize {
        encode(prefix, &self.outcome_sizes[..prefix.len()])
    }

    pub fn prefix(&self, t: usize, code: usize) -> Vec<usize> {
        decode(code, &self.outcome_sizes[..=t])
    }

    /// Law of the full history `(X_0, …, X_n)`.
    pub fn joint_law(&self) -> &[T] {
        self.prefix_probabilities.last().map_or(&[], Vec::as_slice)
    }

    /// Law of `X_t` alone.
    pub fn marginal(&self, t: usize) -> Vec<T> {
        let n = self.outcome_sizes[t];
        let mut out = vec![T::zero(); n];
        for (code, &p) in self.prefix_probabilities[t].iter().enumerate() {
            out[code % n] += p;
        }
        out
    }

    /// `Σ_ω P(ω) ϱ_t(ω)`.
    pub fn mean_state(&self, t: usize) -> CMatrix<T> {
        let d = self.states[t].iter().flatten().next().map_or(0, DensityMatrix::dim);
        let mut acc = CMatrix::zeros(d, d);
        for (p, s) in self.prefix_probabilities[t].iter().zip(&self.states[t]) {
            if let Some(s) = s {
                acc.axpy(re(*p), s.matrix());
            }
        }
        acc
    }
}

/// Enumerates all outcome histories. The probability of a prefix is
/// `Re Tr(U_tρU_t† Π)` with `Π` the time-ordered product of the transported
/// projectors; the conditional state is `Tr_B(ΠρΠ†)` normalized.
pub fn exact_unraveling<T: Real>(
    me: &MeasuredEvolution<T>,
    rho0: &DensityMatrix<T>,
) -> Result<UnravelingDistribution<T>> {
    me.check_state(rho0)?;
    let sizes = me.outcome_sizes();
    history_capacity(&sizes)?;
    let heis = me.heisenberg_table();
    let d = me.dg * me.db;
    let mut prefix_probabilities = Vec::with_capacity(me.len());
    let mut states = Vec::with_capacity(me.len());
    let mut atoms: Vec<Vec<usize>> = Vec::with_capacity(me.len());
    let mut phi = Vec::with_capacity(me.len());
    let mut eta = Vec::with_capacity(me.len());
    for t in 0..me.len() {
        let rho_t = me.unitaries[t].sandwich(rho0.matrix());
        let n_prefix: usize = sizes[..=t].iter().product();
        let mut probs = Vec::with_capacity(n_prefix);
        let mut st = Vec::with_capacity(n_prefix);
        let mut atoms_t = Vec::new();
        for code in 0..n_prefix {
            let prefix = decode(code, &sizes[..=t]);
            let mut pi = CMatrix::identity(d);
            for (s, &a) in prefix.iter().enumerate() {
                pi = &pi * &heis[t][s][a];
            }
            if pi.max_abs() > T::lit(ATOM_TOL) {
                atoms_t.push(code);
            }
            probs.push((&rho_t * &pi).trace().re);
            let branch = pi.sandwich(&rho_t);
            let w = branch.trace().re;
            st.push(if w < T::lit(NULL_PROBABILITY) {
                None
            } else {
                let reduced = partial_trace(&branch, (me.dg, me.db), Subsystem::A)?;
                Some(DensityMatrix::new_unchecked(reduced.hermitian_part().scale_real(T::one() / w)))
            });
        }
        phi.push(atoms_t.iter().map(|&c| c % sizes[t]).collect());
        let eta_t: Vec<Vec<usize>> = (0..t)
            .map(|s| {
                let div: usize = sizes[s + 1..=t].iter().product();
                atoms_t
                    .iter()
                    .map(|&c| {
                        let restricted = c / div;
                        // a nonzero product has nonzero restrictions
                        atoms[s].binary_search(&restricted).unwrap_or(usize::MAX)
                    })
                    .collect()
            })
            .collect();
        eta.push(eta_t);
        atoms.push(atoms_t);
        prefix_probabilities.push(probs);
        states.push(st);
    }
    Ok(UnravelingDistribution { outcome_sizes: sizes, prefix_probabilities, states, atoms, phi, eta })
}

/// Pointer history law and conditional states from sequential indirect measurement.
#[derive(Clone, Debug)]
pub struct IndirectLaw<T> {
    pub pointer_sizes: Vec<usize>,
    /// `probabilities[k][code]` over pointer prefixes `(y_0, …, y_k)`.
    pub probabilities: Vec<Vec<T>>,
    pub states: Vec<Vec<Option<DensityMatrix<T>>>>,
}

fn check_pointers<T: Real>(
    me: &MeasuredEvolution<T>,
    pointers: &[(PointerMap, DensityMatrix<T>)],
) -> Result<Vec<usize>> {
    if pointers.len() != me.len() {
        return dim_err(format!("{} pointers for {} measurement times", pointers.len(), me.len()));
    }
    for (k, (psi, sigma)) in pointers.iter().enumerate() {
        if psi.nx() != me.algebras[k].len() {
            return dim_err(format!(
                "pointer {k} reads {} outcomes, measurement has {}",
                psi.nx(),
                me.algebras[k].len()
            ));
        }
        if sigma.dim() != psi.ny() {
            return dim_err(format!("pointer state {k} has dim {}, pointer space {}", sigma.dim(), psi.ny()));
        }
    }
    let sizes: Vec<usize> = pointers.iter().map(|(p, _)| p.ny()).collect();
    history_capacity(&sizes)?;
    Ok(sizes)
}

/// Evolves `ρ` forward, couples pointer `k` after `U_{t_k,t_{k−1}}` and reads
/// it, branch by branch. Pointer registers are traced out as soon as they are
/// read, so only branch states on `H_G ⊗ H_B` are stored.
pub fn indirect_law<T: Real>(
    me: &MeasuredEvolution<T>,
    rho0: &DensityMatrix<T>,
    pointers: &[(PointerMap, DensityMatrix<T>)],
) -> Result<IndirectLaw<T>> {
    me.check_state(rho0)?;
    let sizes = check_pointers(me, pointers)?;
    let mut branches: Vec<CMatrix<T>> = vec![rho0.matrix().clone()];
    let mut probabilities = Vec::with_capacity(me.len());
    let mut states = Vec::with_capacity(me.len());
    for k in 0..me.len() {
        let step = if k == 0 { me.unitaries[0].clone() } else { me.propagator(k, k - 1) };
        let (psi, sigma) = &pointers[k];
        let lifted: Vec<CMatrix<T>> = me.algebras[k].iter().map(|p| me.lift(p)).collect();
        let nx = lifted.len();
        // preimage[x][y] = y⁰ with ψ(x, y⁰) = y
        let mut preimage = vec![vec![0usize; psi.ny()]; nx];
        for (x, row) in preimage.iter_mut().enumerate() {
            for y0 in 0..psi.ny() {
                row[psi.apply(x, y0)] = y0;
            }
        }
        let mut next = Vec::with_capacity(branches.len() * psi.ny());
        for rho in &branches {
            let evolved = step.sandwich(rho);
            let blocks: Vec<Vec<CMatrix<T>>> = lifted
                .iter()
                .map(|px| {
                    let left = px * &evolved;
                    lifted.iter().map(|py| &left * py).collect()
                })
                .collect();
            for y in 0..psi.ny() {
                let mut out = CMatrix::zeros(evolved.rows(), evolved.cols());
                for x in 0..nx {
                    for x2 in 0..nx {
                        let w = sigma.matrix()[(preimage[x][y], preimage[x2][y])];
                        if !w.is_zero() {
                            out.axpy(w, &blocks[x][x2]);
                        }
                    }
                }
                next.push(out);
            }
        }
        branches = next;
        let mut probs = Vec::with_capacity(branches.len());
        let mut st = Vec::with_capacity(branches.len());
        for b in &branches {
            let p = b.trace().re;
            probs.push(p);
            st.push(if p < T::lit(NULL_PROBABILITY) {
                None
            } else {
                let reduced = partial_trace(b, (me.dg, me.db), Subsystem::A)?;
                Some(DensityMatrix::new_unchecked(reduced.hermitian_part().scale_real(T::one() / p)))
            });
        }
        probabilities.push(probs);
        states.push(st);
    }
    Ok(IndirectLaw { pointer_sizes: sizes, probabilities, states })
}

/// Pushes the exact unraveling through the pointer maps with independent
/// classical pointer noise `y⁰_k ~ diag(σ_k)`.
pub fn pushforward<T: Real>(
    dist: &UnravelingDistribution<T>,
    pointers: &[(PointerMap, DensityMatrix<T>)],
) -> Result<IndirectLaw<T>> {
    if pointers.len() != dist.outcome_sizes.len() {
        return dim_err("one pointer per measurement time required");
    }
    let sizes: Vec<usize> = pointers.iter().map(|(p, _)| p.ny()).collect();
    history_capacity(&sizes)?;
    // w[k][x][y] = P(ψ_k(x, y⁰) = y)
    let w: Vec<Vec<Vec<T>>> = pointers
        .iter()
        .map(|(psi, sigma)| {
            (0..psi.nx())
                .map(|x| {
                    let mut row = vec![T::zero(); psi.ny()];
                    for y0 in 0..psi.ny() {
                        row[psi.apply(x, y0)] += sigma.matrix()[(y0, y0)].re;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let mut probabilities = Vec::with_capacity(sizes.len());
    let mut states = Vec::with_capacity(sizes.len());
    for k in 0..sizes.len() {
        let n_y: usize = sizes[..=k].iter().product();
        let mut probs = vec![T::zero(); n_y];
        let mut acc: Vec<Option<CMatrix<T>>> = vec![None; n_y];
        for (code, &p) in dist.prefix_probabilities[k].iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            let prefix = dist.prefix(k, code);
            for ycode in 0..n_y {
                let ys = decode(ycode, &sizes[..=k]);
                let weight = prefix.iter().zip(&ys).enumerate().fold(T::one(), |acc, (l, (&a, &y))| acc * w[l][a][y]);
                if weight == T::zero() {
                    continue;
                }
                probs[ycode] += p * weight;
                if let Some(s) = &dist.states[k][code] {
                    let slot = acc[ycode].get_or_insert_with(|| CMatrix::zeros(s.dim(), s.dim()));
                    slot.axpy(re(p * weight), s.matrix());
                }
            }
        }
        let st = probs
            .iter()
            .zip(acc)
            .map(|(&p, m)| match m {
                Some(m) if p >= T::lit(NULL_PROBABILITY) => {
                    Some(DensityMatrix::new_unchecked(m.hermitian_part().scale_real(T::one() / p)))
                }
                _ => None,
            })
            .collect();
        probabilities.push(probs);
        states.push(st);
    }
    Ok(IndirectLaw { pointer_sizes: sizes, probabilities, states })
}

/// Discrepancies between the indirect-measurement law and the pushforward of
/// the exact unraveling.
#[derive(Clone, Debug)]
pub struct ConsistencyReport<T> {
    /// Max over times of the total variation between pointer-prefix laws.
    pub max_total_variation: T,
    /// Max trace distance between conditional states over non-null pointer prefixes.
    pub max_state_distance: T,
    pub passed: bool,
}

pub fn consistency_check<T: Real>(
    me: &MeasuredEvolution<T>,
    rho0: &DensityMatrix<T>,
    pointers: &[(PointerMap, DensityMatrix<T>)],
) -> Result<ConsistencyReport<T>> {
    let direct = indirect_law(me, rho0, pointers)?;
    let pushed = pushforward(&exact_unraveling(me, rho0)?, pointers)?;
    let mut max_tv = T::zero();
    let mut max_state = T::zero();
    for k in 0..me.len() {
        let tv: T = direct.probabilities[k]
            .iter()
            .zip(&pushed.probabilities[k])
            .map(|(&a, &b)| (a - b).abs())
            .sum::<T>()
            * T::lit(0.5);
        max_tv = max_tv.max(tv);
        for (a, b) in direct.states[k].iter().zip(&pushed.states[k]) {
            if let (Some(a), Some(b)) = (a, b) {
                max_state = max_state.max(trace_distance(a.matrix(), b.matrix())?);
            }
        }
    }
    let tol = T::lit(EXACT_TOL);
    Ok(ConsistencyReport {
        max_total_variation: max_tv,
        max_state_distance: max_state,
        passed: max_tv <= tol && max_state <= tol,
    })
}

/// Completes the orthonormal columns of `partial` (an `n × k` isometry) to a
/// unitary, keeping them as the columns listed in `slots`.
fn complete_unitary<T: Real>(partial: &CMatrix<T>, slots: &[usize]) -> Result<CMatrix<T>> {
    let n = partial.rows();
    let mut basis: Vec<Vec<C<T>>> = (0..partial.cols()).map(|c| (0..n).map(|r| partial[(r, c)]).collect()).collect();
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![C::zero(); n];
        v[e] = C::one();
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for b in &basis {
                let c = crate::linalg::inner(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * *bi;
                }
            }
        }
        let norm = crate::linalg::vec_norm(&v);
        if norm > T::lit(1e-6) {
            basis.push(v.into_iter().map(|z| z / re(norm)).collect());
        }
    }
    if basis.len() != n {
        return Err(Error::Contract("isometry completion failed".into()));
    }
    let k = partial.cols();
    let mut order = vec![usize::MAX; n];
    for (i, &s) in slots.iter().enumerate() {
        order[s] = i;
    }
    let mut extra = k..n;
    for o in order.iter_mut().filter(|o| **o == usize::MAX) {
        *o = extra.next().unwrap_or(0);
    }
    Ok(CMatrix::from_fn(n, n, |r, c| basis[order[c]][r]))
}

/// Unitary dilation of an open quantum walk with one probe per step.
///
/// `H_B = ℂ^V (position) ⊗ (ℂ^V)^{⊗n}` with every probe prepared in `reference`.
/// Step `k` acts on `H_G ⊗ position ⊗ probe_k` as
/// `Σ_{x,y,z} V(x)_{yz} ⊗ |y⟩⟨x| ⊗ |x⟩⟨z|`, where `V(x)` is a unitary on
/// `probe ⊗ H_G` whose `reference` column block holds the Kraus operators `B_{x→y}`.
/// The probe thus records the position left, and the measurement at each time
/// is the position.
pub fn oqw_dilation<T: Real>(
    kernel: &OQWKernel<T>,
    n_steps: usize,
    reference: usize,
) -> Result<MeasuredEvolution<T>> {
    let nv = kernel.n_vertices();
    let d = kernel.dim();
    if reference >= nv {
        return Err(Error::Domain(format!("reference probe state {reference} out of range")));
    }
    let db = nv.checked_pow(n_steps as u32 + 1).filter(|&n| n * d <= 4096).ok_or_else(|| {
        Error::Capacity(format!("dilation of {n_steps} steps on {nv} vertices is too large"))
    })?;
    // V(x) on probe ⊗ H_G, index y·d + g
    let mut vs = Vec::with_capacity(nv);
    for x in 0..nv {
        let mut col = CMatrix::zeros(nv * d, d);
        for &ei in kernel.out_edges(x) {
            let e = &kernel.edges()[ei];
            let merged = &col.block(e.to * d, 0, d, d) + &e.kraus;
            col.set_block(e.to * d, 0, &merged);
        }
        let slots: Vec<usize> = (0..d).map(|g| reference * d + g).collect();
        vs.push(complete_unitary(&col, &slots)?);
    }
    // U on H_G ⊗ position ⊗ probe
    let m = d * nv * nv;
    let idx = |g: usize, pos: usize, probe: usize| (g * nv + pos) * nv + probe;
    let mut step = CMatrix::zeros(m, m);
    for x in 0..nv {
        for y in 0..nv {
            for z in 0..nv {
                for g in 0..d {
                    for g2 in 0..d {
                        let v = vs[x][(y * d + g, z * d + g2)];
                        if !v.is_zero() {
                            step[(idx(g, y, x), idx(g2, x, z))] = v;
                        }
                    }
                }
            }
        }
    }
    let mut dims = vec![d, nv];
    dims.extend(std::iter::repeat(nv).take(n_steps));
    let mut unitaries = vec![CMatrix::identity(d * db)];
    for k in 1..=n_steps {
        let lifted = embed_operator(&step, &dims, &[0, 1, 1 + k])?;
        let prev = unitaries.last().expect("nonempty");
        unitaries.push(&lifted * prev);
    }
    let probes = db / nv;
    let positions: Vec<CMatrix<T>> = (0..nv)
        .map(|x| CMatrix::unit(nv, x, x).kron(&CMatrix::identity(probes)))
        .collect();
    MeasuredEvolution::new(d, db, unitaries, vec![positions; n_steps + 1])
}

/// `ρ_G ⊗ |x0⟩⟨x0| ⊗ |r⟩⟨r|^{⊗n}` for [`oqw_dilation`].
pub fn oqw_initial_state<T: Real>(
    rho_g: &DensityMatrix<T>,
    n_vertices: usize,
    n_steps: usize,
    x0: usize,
    reference: usize,
) -> DensityMatrix<T> {
    let mut m = rho_g.matrix().kron(&CMatrix::unit(n_vertices, x0, x0));
    for _ in 0..n_steps {
        m = m.kron(&CMatrix::unit(n_vertices, reference, reference));
    }
    DensityMatrix::new_unchecked(m)
}

/// Two times, `H_B = ℂ²` measured in the computational basis at both, with a
/// Hadamard on `H_B` in between. The transported first measurement does not
/// commute with the second one.
pub fn hadamard_counterexample<T: Real>(dg: usize) -> MeasuredEvolution<T> {
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let had = CMatrix::from_fn(2, 2, |i, j| re(if i == 1 && j == 1 { -h } else { h }));
    let z: Vec<CMatrix<T>> = (0..2).map(|a| CMatrix::unit(2, a, a)).collect();
    MeasuredEvolution {
        dg,
        db: 2,
        unitaries: vec![CMatrix::identity(2 * dg), CMatrix::identity(dg).kron(&had)],
        algebras: vec![z.clone(), z],
    }
}
