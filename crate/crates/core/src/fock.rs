//! Truncated Fock-space linear algebra.
//!
//! Single-mode objects live on `span{|0⟩, …, |dim-1⟩}`; two-mode objects use
//! the lexicographic product basis `|n_A, n_B⟩ ↦ n_A·dim + n_B`. Everything is
//! dense and double precision.
//!
//! Beamsplitter convention: amplitudes are real and non-negative, the
//! transmitted port is mode B and the reflected port is mode A, so
//! `BS|n,0⟩ = Σ_k √(C(n,k) T^k (1-T)^{n-k}) |n-k, k⟩`.

use nalgebra::{DMatrix, DVector};
use statrs::function::factorial::ln_factorial;

use crate::error::{check_unit_interval, Error, Result};
use crate::C64;

/// Default tolerance on probability mass lost to truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Tolerance used when checking Hermiticity and trace normalisation.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;

/// Truncation dimension large enough for displacements up to `max_amp_sq`
/// (`|α|²`) acting on thermal-like states with mean photon number up to
/// `max_nbar`.
pub fn default_dim(max_amp_sq: f64, max_nbar: f64) -> usize {
    let wanted = (6.0 * (max_amp_sq + max_nbar + 1.0)).ceil() as usize;
    wanted.max(32)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// `C(n,k) p^k (1-p)^{n-k}`, evaluated in log space.
pub fn binomial_weight(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln = ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
    ln.exp()
}

/// `w[n][r]`: probability that exactly `r` of `n` photons are lost through a
/// channel of transmission `eta`.
fn loss_weights(dim: usize, eta: f64) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|n| (0..=n).map(|r| binomial_weight(n, r, 1.0 - eta)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: DVector<C64>,
}

impl FockVector {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dimension("Fock vector needs dim >= 1".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::number(0, dim)
    }

    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Dimension(format!("|{n}⟩ does not fit in dim {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// Truncated coherent state `|α⟩`; not renormalised.
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("Fock vector needs dim >= 1".into()));
        }
        let x = alpha.norm_sqr();
        let v = DVector::from_fn(dim, |n, _| {
            if n == 0 {
                return C64::new((-0.5 * x).exp(), 0.0);
            }
            let ln_mag = n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n as u64) - 0.5 * x;
            C64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
        });
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.unscale(self.norm()),
        }
    }

    pub fn projector(&self) -> FockOperator {
        FockOperator {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
            hermitian: true,
        }
    }
}

/// Dense operator on a truncated single-mode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl FockOperator {
    pub fn new(entries: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.is_empty() {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let op = Self { entries, hermitian };
        if hermitian && !op.is_hermitian(NUMERIC_TOLERANCE) {
            return Err(Error::param("operator flagged Hermitian is not"));
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            entries: DMatrix::from_diagonal(&d),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.entries[(m, n)]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (i..d).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Real diagonal, e.g. the photon-number distribution of a state.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.entries[(n, n)].re).collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.entries[(i, j)].norm() <= tol))
    }

    /// `self · rhs`; Hermiticity of the product is not tracked.
    pub fn matmul(&self, rhs: &FockOperator) -> Result<FockOperator> {
        same_dim(self.dim(), rhs.dim())?;
        Ok(Self {
            entries: &self.entries * &rhs.entries,
            hermitian: false,
        })
    }

    /// `U† · self · U`.
    pub fn conjugate_by(&self, u: &FockOperator) -> Result<FockOperator> {
        same_dim(self.dim(), u.dim())?;
        let entries = u.entries.adjoint() * &self.entries * &u.entries;
        Ok(Self {
            entries,
            hermitian: self.hermitian,
        })
    }

    /// Leading `dim × dim` block.
    pub fn restrict(&self, dim: usize) -> Result<FockOperator> {
        if dim == 0 || dim > self.dim() {
            return Err(Error::Dimension(format!("cannot restrict dim {} to {dim}", self.dim())));
        }
        Ok(Self {
            entries: self.entries.view((0, 0), (dim, dim)).into_owned(),
            hermitian: self.hermitian,
        })
    }

    pub fn expectation_vector(&self, psi: &FockVector) -> Result<C64> {
        same_dim(self.dim(), psi.dim())?;
        let a = psi.amplitudes();
        Ok((a.adjoint() * &self.entries * a)[(0, 0)])
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Dimension(format!("dimension mismatch: {a} vs {b}")))
    }
}

/// Generalised Laguerre polynomial `L_n^{(k)}(x)` by upward recurrence.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `⟨m|D(α)|n⟩` via the associated-Laguerre closed form with log-scaled
/// factorial prefactors.
pub fn displacement_element(alpha: C64, m: usize, n: usize) -> C64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return if m == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let k = hi - lo;
    let ln_pref = 0.5 * (ln_factorial(lo as u64) - ln_factorial(hi as u64)) + 0.5 * k as f64 * x.ln() - 0.5 * x;
    let mag = ln_pref.exp() * laguerre(lo, k, x);
    let sign = if m < n && k % 2 == 1 { -1.0 } else { 1.0 };
    let phase = (m as f64 - n as f64) * alpha.arg();
    C64::from_polar(sign * mag, phase)
}

/// Truncated `D(α)` without the column-norm check.
pub fn displacement_matrix_unchecked(alpha: C64, dim: usize) -> FockOperator {
    FockOperator {
        entries: DMatrix::from_fn(dim, dim, |m, n| displacement_element(alpha, m, n)),
        hermitian: false,
    }
}

/// First `ncols` columns of the truncated `D(α)` as a `dim × ncols` matrix.
pub fn displacement_columns(alpha: C64, dim: usize, ncols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, ncols.min(dim), |m, n| displacement_element(alpha, m, n))
}

/// `1 - Σ_m |⟨m|U|n⟩|²` for each of the first `ncols` columns.
pub fn column_defects(op: &FockOperator, ncols: usize) -> Vec<f64> {
    (0..ncols.min(op.dim()))
        .map(|n| 1.0 - op.entries.column(n).norm_squared())
        .collect()
}

/// Truncated displacement operator `D(α) = exp(α a† − α* a)`.
///
/// Fails with a truncation error when any of the first `max(4, ⌈|α|²⌉)`
/// columns loses more than [`DEFAULT_TAIL_TOLERANCE`] of its norm.
pub fn displacement_matrix(alpha: C64, dim: usize) -> Result<FockOperator> {
    displacement_matrix_with_tolerance(alpha, dim, DEFAULT_TAIL_TOLERANCE)
}

pub fn displacement_matrix_with_tolerance(alpha: C64, dim: usize, tail_tol: f64) -> Result<FockOperator> {
    if dim == 0 {
        return Err(Error::Dimension("displacement needs dim >= 1".into()));
    }
    let d = displacement_matrix_unchecked(alpha, dim);
    let ncheck = 4usize.max(alpha.norm_sqr().ceil() as usize);
    let worst = column_defects(&d, ncheck).into_iter().fold(0.0, f64::max);
    if worst > tail_tol {
        return Err(Error::Truncation {
            what: format!("D({alpha})"),
            deficit: worst,
            tolerance: tail_tol,
            dim,
        });
    }
    Ok(d)
}

/// Photon-number distribution of a thermal state with mean `nbar`, not
/// renormalised after truncation.
pub fn thermal_distribution(nbar: f64, dim: usize) -> Vec<f64> {
    let ratio = nbar / (1.0 + nbar);
    let mut p = Vec::with_capacity(dim);
    let mut w = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        p.push(w);
        w *= ratio;
    }
    p
}

pub fn thermal_state(nbar: f64, dim: usize) -> Result<FockOperator> {
    thermal_state_with_tolerance(nbar, dim, DEFAULT_TAIL_TOLERANCE)
}

pub fn thermal_state_with_tolerance(nbar: f64, dim: usize, tail_tol: f64) -> Result<FockOperator> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::param(format!("nbar = {nbar} must be >= 0")));
    }
    if dim == 0 {
        return Err(Error::Dimension("thermal state needs dim >= 1".into()));
    }
    let p = thermal_distribution(nbar, dim);
    // Retained mass is 1 - (n̄/(1+n̄))^dim exactly.
    let deficit = (nbar / (1.0 + nbar)).powi(dim as i32);
    if deficit > tail_tol {
        return Err(Error::Truncation {
            what: format!("thermal state n̄={nbar}"),
            deficit,
            tolerance: tail_tol,
            dim,
        });
    }
    Ok(FockOperator::from_diagonal(&p))
}

/// Binomial (pure-loss) channel with transmission `eta` on a single mode.
pub fn loss_channel(state: &FockOperator, eta: f64) -> Result<FockOperator> {
    check_unit_interval("eta", eta)?;
    let dim = state.dim();
    let w = loss_weights(dim, eta);
    let rho = &state.entries;
    let out = DMatrix::from_fn(dim, dim, |k, l| {
        let mut acc = C64::new(0.0, 0.0);
        let mut j = 0;
        while k + j < dim && l + j < dim {
            let f = (w[k + j][j] * w[l + j][j]).sqrt();
            if f > 0.0 {
                acc += rho[(k + j, l + j)] * f;
            }
            j += 1;
        }
        acc
    });
    Ok(FockOperator {
        entries: out,
        hermitian: state.hermitian,
    })
}

/// Diagonal-only version of [`loss_channel`].
pub fn loss_distribution(probs: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_unit_interval("eta", eta)?;
    let dim = probs.len();
    let mut out = vec![0.0; dim];
    for (n, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (k, slot) in out.iter_mut().enumerate().take(n + 1) {
            *slot += p * binomial_weight(n, k, eta);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Two-mode density matrix in the `|n_A, n_B⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    entries: DMatrix<C64>,
    dim: usize,
}

/// Two-mode operator in the `|n_A, n_B⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeOperator {
    entries: DMatrix<C64>,
    dim: usize,
}

impl TwoModeOperator {
    pub fn new(entries: DMatrix<C64>, dim: usize) -> Result<Self> {
        if entries.nrows() != dim * dim || entries.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "two-mode operator must be {0}x{0} for dim {dim}",
                dim * dim
            )));
        }
        Ok(Self { entries, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> C64 {
        self.entries[(i * self.dim + j, k * self.dim + l)]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.entries.nrows();
        (0..d).all(|i| (i..d).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }
}

/// `opA ⊗ opB`.
pub fn tensor(op_a: &FockOperator, op_b: &FockOperator) -> Result<TwoModeOperator> {
    same_dim(op_a.dim(), op_b.dim())?;
    Ok(TwoModeOperator {
        entries: op_a.entries.kronecker(&op_b.entries),
        dim: op_a.dim(),
    })
}

/// `tr(op · ρ)`.
pub fn expectation(op: &TwoModeOperator, state: &TwoModeState) -> Result<C64> {
    same_dim(op.dim, state.dim)?;
    Ok(trace_of_product(&op.entries, &state.entries))
}

pub(crate) fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

impl TwoModeState {
    /// Wraps a density matrix, checking shape, trace and Hermiticity.
    pub fn new(entries: DMatrix<C64>, dim: usize) -> Result<Self> {
        let s = Self::new_unchecked(entries, dim)?;
        let tr = s.trace();
        if (tr - 1.0).abs() > NUMERIC_TOLERANCE {
            return Err(Error::param(format!("state trace {tr} is not 1")));
        }
        let op = TwoModeOperator {
            entries: s.entries.clone(),
            dim,
        };
        if !op.is_hermitian(NUMERIC_TOLERANCE) {
            return Err(Error::param("density matrix is not Hermitian"));
        }
        Ok(s)
    }

    pub(crate) fn new_unchecked(entries: DMatrix<C64>, dim: usize) -> Result<Self> {
        if dim == 0 || entries.nrows() != dim * dim || entries.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "two-mode state must be {0}x{0} for dim {dim}",
                dim * dim
            )));
        }
        Ok(Self { entries, dim })
    }

    pub fn product(rho_a: &FockOperator, rho_b: &FockOperator) -> Result<Self> {
        same_dim(rho_a.dim(), rho_b.dim())?;
        Ok(Self {
            entries: rho_a.entries.kronecker(&rho_b.entries),
            dim: rho_a.dim(),
        })
    }

    pub fn pure(psi: &DVector<C64>, dim: usize) -> Result<Self> {
        if psi.len() != dim * dim {
            return Err(Error::Dimension(format!("pure state needs {} amplitudes", dim * dim)));
        }
        Self::new_unchecked(psi * psi.adjoint(), dim)
    }

    /// Convex combination `Σ w_i ρ_i`.
    pub fn mixture(parts: &[(f64, TwoModeState)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("empty mixture"))?;
        let dim = first.1.dim;
        let mut acc = DMatrix::zeros(dim * dim, dim * dim);
        for (w, s) in parts {
            same_dim(dim, s.dim)?;
            acc += &s.entries * C64::new(*w, 0.0);
        }
        Ok(Self { entries: acc, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.dim + j
    }

    pub fn get(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> C64 {
        self.entries[(self.index(i, j), self.index(k, l))]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `p_ij = ⟨ij|ρ|ij⟩`.
    pub fn joint_probability(&self, i: usize, j: usize) -> f64 {
        self.get((i, j), (i, j)).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol && self.min_eigenvalue() >= -tol
    }

    pub fn reduced(&self, mode: Mode) -> FockOperator {
        let d = self.dim;
        let entries = DMatrix::from_fn(d, d, |x, y| {
            (0..d)
                .map(|z| match mode {
                    Mode::A => self.get((x, z), (y, z)),
                    Mode::B => self.get((z, x), (z, y)),
                })
                .sum()
        });
        FockOperator {
            entries,
            hermitian: true,
        }
    }
}

/// Binomial loss with transmission `eta` on one mode of a two-mode state.
pub fn loss_channel_mode(state: &TwoModeState, mode: Mode, eta: f64) -> Result<TwoModeState> {
    check_unit_interval("eta", eta)?;
    let d = state.dim;
    let w = loss_weights(d, eta);
    let rho = &state.entries;
    let out = DMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        let mut acc = C64::new(0.0, 0.0);
        let mut r = 0;
        loop {
            let (i2, j2, k2, l2, a, b) = match mode {
                Mode::A => (i + r, j, k + r, l, i + r, k + r),
                Mode::B => (i, j + r, k, l + r, j + r, l + r),
            };
            if a >= d || b >= d {
                break;
            }
            let f = (w[a][r] * w[b][r]).sqrt();
            if f > 0.0 {
                acc += rho[(i2 * d + j2, k2 * d + l2)] * f;
            }
            r += 1;
        }
        acc
    });
    Ok(TwoModeState { entries: out, dim: d })
}

/// Amplitudes of `BS|n,0⟩` indexed by the number of transmitted photons `k`
/// (which end up in mode B).
pub fn split_amplitudes(n: usize, t: f64) -> Vec<f64> {
    (0..=n).map(|k| binomial_weight(n, k, t).sqrt()).collect()
}

/// Sends a single-mode state through a beamsplitter of transmission `t`
/// whose second input port is in vacuum.
pub fn split_single_mode(state: &FockOperator, t: f64, out_dim: usize) -> Result<TwoModeState> {
    check_unit_interval("T", t)?;
    let din = state.dim();
    if out_dim < din {
        return Err(Error::Dimension(format!(
            "two-mode dim {out_dim} cannot hold the {din}-level input after splitting"
        )));
    }
    let d = out_dim;
    let amps: Vec<Vec<f64>> = (0..din).map(|n| split_amplitudes(n, t)).collect();
    let mut out = DMatrix::zeros(d * d, d * d);
    for n in 0..din {
        for m in 0..din {
            let c = state.entries[(n, m)];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for (k, &an) in amps[n].iter().enumerate() {
                if an == 0.0 {
                    continue;
                }
                let row = (n - k) * d + k;
                for (q, &am) in amps[m].iter().enumerate() {
                    out[(row, (m - q) * d + q)] += c * (an * am);
                }
            }
        }
    }
    Ok(TwoModeState { entries: out, dim: d })
}

/// Two-mode state that commutes with the total photon number, stored as one
/// dense block per total photon number `N`.
///
/// Block `N` is indexed by the mode-A photon number `i` over
/// `lo(N)..=hi(N)`, with `lo(N) = max(0, N-dim+1)` and `hi(N) = min(N, dim-1)`.
/// Phase-randomised states and everything the witness sees are of this form.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberBlockState {
    dim: usize,
    blocks: Vec<DMatrix<C64>>,
}

pub(crate) fn block_range(dim: usize, total: usize) -> (usize, usize) {
    let lo = total.saturating_sub(dim - 1);
    let hi = total.min(dim - 1);
    (lo, hi)
}

impl NumberBlockState {
    pub fn zeros(dim: usize) -> Self {
        let blocks = (0..2 * dim - 1)
            .map(|n| {
                let (lo, hi) = block_range(dim, n);
                DMatrix::zeros(hi - lo + 1, hi - lo + 1)
            })
            .collect();
        Self { dim, blocks }
    }

    /// Phase average of a dense state: keeps only elements between equal
    /// total photon numbers.
    pub fn from_dense(state: &TwoModeState) -> Self {
        let d = state.dim;
        let mut out = Self::zeros(d);
        for (n, block) in out.blocks.iter_mut().enumerate() {
            let (lo, _) = block_range(d, n);
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    let (i, k) = (lo + r, lo + c);
                    block[(r, c)] = state.get((i, n - i), (k, n - k));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> TwoModeState {
        let d = self.dim;
        let mut out = DMatrix::zeros(d * d, d * d);
        for (n, block) in self.blocks.iter().enumerate() {
            let (lo, _) = block_range(d, n);
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    let (i, k) = (lo + r, lo + c);
                    out[(i * d + n - i, k * d + n - k)] = block[(r, c)];
                }
            }
        }
        TwoModeState { entries: out, dim: d }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn block(&self, total: usize) -> Option<&DMatrix<C64>> {
        self.blocks.get(total)
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    /// `⟨ij|ρ|kl⟩`, zero unless `i+j = k+l`.
    pub fn get(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> C64 {
        let d = self.dim;
        if i + j != k + l || i >= d || j >= d || k >= d || l >= d {
            return C64::new(0.0, 0.0);
        }
        let n = i + j;
        let (lo, _) = block_range(d, n);
        self.blocks[n][(i - lo, k - lo)]
    }

    pub fn joint_probability(&self, i: usize, j: usize) -> f64 {
        self.get((i, j), (i, j)).re
    }

    /// Matrix of joint photon-number probabilities `p[i][j]`.
    pub fn number_distribution(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.joint_probability(i, j)).collect())
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.clone().symmetric_eigenvalues().iter().copied().collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol && self.min_eigenvalue() >= -tol
    }

    /// Beamsplitter applied to a diagonal single-mode state with photon-number
    /// distribution `probs`; the two-mode dim equals `probs.len()`.
    pub fn split_distribution(probs: &[f64], t: f64) -> Result<Self> {
        check_unit_interval("T", t)?;
        if probs.is_empty() {
            return Err(Error::Dimension("empty distribution".into()));
        }
        let d = probs.len();
        let mut out = Self::zeros(d);
        for (n, &p) in probs.iter().enumerate() {
            let amps = split_amplitudes(n, t);
            let (lo, _) = block_range(d, n);
            let block = &mut out.blocks[n];
            // mode-A index i holds n-i transmitted photons
            for i in lo..=n {
                for k in lo..=n {
                    block[(i - lo, k - lo)] = C64::new(p * amps[n - i] * amps[n - k], 0.0);
                }
            }
        }
        Ok(out)
    }

    /// Binomial loss with transmission `eta` on one mode.
    pub fn apply_loss(&self, mode: Mode, eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        let d = self.dim;
        let w = loss_weights(d, eta);
        let mut out = Self::zeros(d);
        for (n, src) in self.blocks.iter().enumerate() {
            let (lo, _) = block_range(d, n);
            for r0 in 0..src.nrows() {
                for c0 in 0..src.ncols() {
                    let v = src[(r0, c0)];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (i, k) = (lo + r0, lo + c0);
                    let (a, b) = match mode {
                        Mode::A => (i, k),
                        Mode::B => (n - i, n - k),
                    };
                    for r in 0..=a.min(b) {
                        let f = (w[a][r] * w[b][r]).sqrt();
                        if f == 0.0 {
                            continue;
                        }
                        let m = n - r;
                        let (lo2, _) = block_range(d, m);
                        let (i2, k2) = match mode {
                            Mode::A => (i - r, k - r),
                            Mode::B => (i, k),
                        };
                        out.blocks[m][(i2 - lo2, k2 - lo2)] += v * f;
                    }
                }
            }
        }
        Ok(out)
    }
}
