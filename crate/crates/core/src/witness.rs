//! Displaced ±1 observables and the phase-randomised two-mode witness.
//!
//! `σ_α = D(α)† (2 P_ns − 1) D(α)` assigns +1 to "no click" and −1 to
//! "click". The witness averages `σ_α ⊗ σ_β` over a common phase rotation
//! `e^{iφ(a†a + b†b)}`. Because the rotation multiplies `⟨ij|·|kl⟩` by
//! `e^{iφ(k+l−i−j)}`, the average is exactly the projection onto blocks of
//! equal total photon number, which is how it is computed here.

use nalgebra::DMatrix;

use crate::detector::{no_click_probs, DetectorSpec};
use crate::error::{Error, Result};
use crate::fock::{block_range, displacement_matrix, FockOperator, NumberBlockState, TwoModeOperator, TwoModeState};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaObservable {
    op: FockOperator,
    det: DetectorSpec,
    alpha: C64,
}

impl SigmaObservable {
    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.det
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Leading `dim × dim` block, for evaluating on smaller states.
    pub fn restrict(&self, dim: usize) -> Result<Self> {
        Ok(Self {
            op: self.op.restrict(dim)?,
            ..*self
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.entries().clone().symmetric_eigenvalues().iter().copied().collect()
    }
}

/// `D(α)† (2 P_ns − 1) D(α)` on `dim` levels.
pub fn sigma_observable(det: &DetectorSpec, alpha: C64, dim: usize) -> Result<SigmaObservable> {
    let d = displacement_matrix(alpha, dim)?;
    let p = no_click_probs(det, dim);
    let signed = DMatrix::from_fn(dim, dim, |m, n| d.get(m, n) * (2.0 * p[m] - 1.0));
    let mut entries = d.entries().adjoint() * signed;
    // symmetrise away rounding so the Hermitian flag holds exactly
    let adj = entries.adjoint();
    entries = (entries + adj) * C64::new(0.5, 0.0);
    Ok(SigmaObservable {
        op: FockOperator::new(entries, true)?,
        det: *det,
        alpha,
    })
}

/// Matrix elements of the witness consumed by the separable bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessElements {
    pub w00_00: f64,
    pub w01_01: f64,
    pub w10_10: f64,
    pub w11_11: f64,
    pub w01_10: C64,
    pub w11_20: C64,
    pub w11_02: C64,
}

/// Phase-randomised witness, stored as one block per total photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessMatrix {
    dim: usize,
    blocks: Vec<DMatrix<C64>>,
    elements: WitnessElements,
}

/// Witness from two displaced observables; the phase average is applied
/// analytically.
pub fn witness_matrix(sig_a: &SigmaObservable, sig_b: &SigmaObservable) -> Result<WitnessMatrix> {
    witness_from_operators(sig_a.op(), sig_b.op())
}

/// Phase-averaged `A ⊗ B` for arbitrary single-mode operators.
pub fn witness_from_operators(a: &FockOperator, b: &FockOperator) -> Result<WitnessMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "witness observables have dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let dim = a.dim();
    if dim < 3 {
        return Err(Error::Dimension("witness needs dim >= 3".into()));
    }
    let blocks: Vec<DMatrix<C64>> = (0..2 * dim - 1)
        .map(|n| {
            let (lo, hi) = block_range(dim, n);
            let size = hi - lo + 1;
            DMatrix::from_fn(size, size, |r, c| {
                let (i, k) = (lo + r, lo + c);
                a.get(i, k) * b.get(n - i, n - k)
            })
        })
        .collect();
    let mut w = WitnessMatrix {
        dim,
        blocks,
        elements: WitnessElements {
            w00_00: 0.0,
            w01_01: 0.0,
            w10_10: 0.0,
            w11_11: 0.0,
            w01_10: C64::new(0.0, 0.0),
            w11_20: C64::new(0.0, 0.0),
            w11_02: C64::new(0.0, 0.0),
        },
    };
    w.elements = WitnessElements {
        w00_00: w.get((0, 0), (0, 0)).re,
        w01_01: w.get((0, 1), (0, 1)).re,
        w10_10: w.get((1, 0), (1, 0)).re,
        w11_11: w.get((1, 1), (1, 1)).re,
        w01_10: w.get((0, 1), (1, 0)),
        w11_20: w.get((1, 1), (2, 0)),
        w11_02: w.get((1, 1), (0, 2)),
    };
    Ok(w)
}

impl WitnessMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    /// `⟨ij|W|kl⟩`, zero unless `i+j = k+l`.
    pub fn get(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> C64 {
        let d = self.dim;
        if i + j != k + l || i >= d || j >= d || k >= d || l >= d {
            return C64::new(0.0, 0.0);
        }
        let n = i + j;
        let (lo, _) = block_range(d, n);
        self.blocks[n][(i - lo, k - lo)]
    }

    pub fn elements(&self) -> &WitnessElements {
        &self.elements
    }

    pub fn to_dense(&self) -> TwoModeOperator {
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
        TwoModeOperator::new(out, d).expect("shape by construction")
    }

    /// Eigenvalues of the blocks with total photon number `<= max_total`.
    pub fn spectrum(&self, max_total: usize) -> Vec<f64> {
        self.blocks
            .iter()
            .take(max_total + 1)
            .flat_map(|b| {
                let h = (b + b.adjoint()) * C64::new(0.5, 0.0);
                h.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| (b - b.adjoint()).camax() <= tol)
    }
}

/// `tr(W ρ)` together with the discarded imaginary residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessValue {
    pub value: f64,
    pub imaginary_residue: f64,
}

/// `⟨W⟩` on a number-block state (already phase invariant).
pub fn witness_expectation(w: &WitnessMatrix, rho: &NumberBlockState) -> Result<WitnessValue> {
    if w.dim() != rho.dim() {
        return Err(Error::Dimension(format!(
            "witness dim {} does not match state dim {}",
            w.dim(),
            rho.dim()
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (wb, rb) in w.blocks.iter().zip(rho.blocks()) {
        acc += crate::fock::trace_of_product(wb, rb);
    }
    Ok(WitnessValue {
        value: acc.re,
        imaginary_residue: acc.im,
    })
}

/// `⟨W⟩` on a general dense state; only its phase-averaged part contributes.
pub fn witness_expectation_dense(w: &WitnessMatrix, rho: &TwoModeState) -> Result<WitnessValue> {
    witness_expectation(w, &NumberBlockState::from_dense(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn undisplaced_sigma_is_diagonal_sign_pattern() {
        let s1 = sigma_observable(&DetectorSpec::new(1, 1.0).unwrap(), c(0.0), 10).unwrap();
        let s7 = sigma_observable(&DetectorSpec::new(7, 1.0).unwrap(), c(0.0), 10).unwrap();
        for n in 0..10 {
            assert_eq!(s1.op().get(n, n).re, if n < 1 { 1.0 } else { -1.0 });
            assert_eq!(s7.op().get(n, n).re, if n < 7 { 1.0 } else { -1.0 });
        }
        assert!(s1.op().is_diagonal(0.0));
    }

    #[test]
    fn sigma_spectrum_bounded() {
        let s = sigma_observable(&DetectorSpec::new(7, 1.0).unwrap(), C64::new(1.9, 0.8), 80).unwrap();
        for e in s.eigenvalues() {
            assert!(e.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn ideal_qubit_observables_give_coherence_sum() {
        // σ_x on the qubit, zero elsewhere
        let mut sx = DMatrix::zeros(4, 4);
        sx[(0, 1)] = c(1.0);
        sx[(1, 0)] = c(1.0);
        let sx = FockOperator::new(sx, true).unwrap();
        let w = witness_from_operators(&sx, &sx).unwrap();
        assert_eq!(w.get((0, 1), (1, 0)), c(1.0));
        assert_eq!(w.get((1, 0), (0, 1)), c(1.0));
        assert_eq!(w.get((0, 0), (1, 1)), c(0.0));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w.get((i, j), (i, j)), c(0.0));
            }
        }
        // on (|01⟩+|10⟩)/√2 the value is 1
        let mut psi = nalgebra::DVector::zeros(16);
        psi[1] = c(0.5f64.sqrt());
        psi[4] = c(0.5f64.sqrt());
        let rho = TwoModeState::pure(&psi, 4).unwrap();
        let v = witness_expectation_dense(&w, &rho).unwrap();
        assert_abs_diff_eq!(v.value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn undisplaced_witness_is_diagonal() {
        let a = sigma_observable(&DetectorSpec::new(1, 1.0).unwrap(), c(0.0), 6).unwrap();
        let b = sigma_observable(&DetectorSpec::new(7, 1.0).unwrap(), c(0.0), 6).unwrap();
        let w = witness_matrix(&a, &b).unwrap().to_dense();
        let d = w.entries();
        for r in 0..36 {
            for col in 0..36 {
                if r != col {
                    assert_eq!(d[(r, col)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn vacuum_expectation_without_displacement_is_one() {
        let a = sigma_observable(&DetectorSpec::new(1, 1.0).unwrap(), c(0.0), 6).unwrap();
        let b = sigma_observable(&DetectorSpec::new(7, 1.0).unwrap(), c(0.0), 6).unwrap();
        let w = witness_matrix(&a, &b).unwrap();
        let vac = FockVector::vacuum(6).unwrap().projector();
        let rho = TwoModeState::product(&vac, &vac).unwrap();
        assert_eq!(witness_expectation_dense(&w, &rho).unwrap().value, 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = sigma_observable(&DetectorSpec::new(1, 1.0).unwrap(), c(0.0), 6).unwrap();
        let b = sigma_observable(&DetectorSpec::new(1, 1.0).unwrap(), c(0.0), 7).unwrap();
        assert_eq!(witness_matrix(&a, &b).unwrap_err().class_name(), "DimensionError");
    }
}
