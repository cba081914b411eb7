//! Laplacian eigendecomposition, the graph Fourier transform (GFT) and its
//! fractional powers.
//!
//! For a symmetric Laplacian `L = V Λ Vᵀ` the GFT matrix is `F = Vᵀ`. Since
//! `F` is real orthogonal it is normal, so it has a unitary eigenbasis
//! `F = P diag(μ) Pᴴ` with every `|μ_l| = 1`. Fractional powers are then
//! `F^α = P diag(μ^α) Pᴴ`, with `μ^α = exp(i α arg μ)` on the principal
//! branch `arg μ ∈ (−π, π]`.
//!
//! The unitary basis is obtained from a complex Schur factorisation of `F`;
//! for a normal matrix the triangular factor is diagonal up to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

const SYMMETRY_TOL: f64 = 1e-12;
/// Phases this close to −π are snapped to +π so that `μ = −1` always lands
/// on the principal branch.
const BRANCH_SNAP: f64 = 1e-12;
/// Relative tolerance used when choosing the sign-defining entry of an
/// eigenvector; entries within this of the maximum count as ties.
const SIGN_TIE_TOL: f64 = 1e-12;

/// Ascending eigenvalues and sign-canonical orthonormal eigenvectors of a
/// graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from raw parts, applying the ordering and
    /// sign conventions. Used when loading cached results.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: eigenvectors.ncols(),
            });
        }
        Ok(canonicalize(DVector::from_vec(eigenvalues), eigenvectors))
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Laplacian eigenvalues `λ_1 ≤ … ≤ λ_N`.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthogonal matrix `V` whose columns are the eigenvectors `φ_l`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Largest eigenvalue (0 for edgeless graphs).
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    /// GFT matrix `F = V⁻¹ = Vᵀ`.
    pub fn gft(&self) -> DMatrix<f64> {
        self.eigenvectors.transpose()
    }

    /// Unitary eigenstructure of `F`, from which all fractional powers are
    /// formed.
    pub fn gft_eigenbasis(&self) -> Result<GftEigenbasis> {
        GftEigenbasis::new(&self.gft())
    }

    /// Checks reconstruction and orthonormality against the Laplacian.
    pub fn verify(&self, laplacian: &DMatrix<f64>) -> Result<()> {
        let n = self.len();
        if laplacian.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: laplacian.nrows(),
                got: n,
            });
        }
        let v = &self.eigenvectors;
        let recon = v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose();
        let recon_err = (recon - laplacian).norm();
        if recon_err > 1e-10 * laplacian.norm().max(1.0) {
            return Err(Error::Decomposition(format!(
                "reconstruction error {recon_err:e}"
            )));
        }
        let orth_err = (v.transpose() * v - DMatrix::identity(n, n)).norm();
        if orth_err > 1e-10 {
            return Err(Error::Decomposition(format!(
                "eigenvectors not orthonormal (error {orth_err:e})"
            )));
        }
        if self.eigenvalues.as_slice().windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Decomposition("eigenvalues not ascending".into()));
        }
        Ok(())
    }
}

/// Eigendecomposes a symmetric matrix into ascending eigenvalues and
/// sign-canonical eigenvectors.
///
/// Each eigenvector is flipped so that its largest-magnitude entry is
/// positive (lowest index wins a tie). Bases of repeated eigenvalues are
/// taken as the eigensolver returns them.
pub fn decompose(l: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !l.is_square() {
        return Err(Error::DimensionMismatch {
            expected: l.nrows(),
            got: l.ncols(),
        });
    }
    let asym = (l - l.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = l
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    Ok(canonicalize(eig.eigenvalues, eig.eigenvectors))
}

fn canonicalize(values: DVector<f64>, vectors: DMatrix<f64>) -> SpectralDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        let max_abs = col.amax();
        let pivot = col
            .iter()
            .position(|x| x.abs() >= max_abs * (1.0 - SIGN_TIE_TOL))
            .unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Unitary eigenbasis `P` and unit-circle eigenvalues `μ` of a real
/// orthogonal matrix, `F = P diag(μ) Pᴴ`.
#[derive(Debug, Clone)]
pub struct GftEigenbasis {
    basis: DMatrix<C64>,
    basis_adjoint: DMatrix<C64>,
    phases: Vec<f64>,
}

impl GftEigenbasis {
    /// Factorises an orthogonal matrix. Fails if the Schur iteration does not
    /// converge or the input is not (numerically) normal.
    pub fn new(f: &DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        let fc = f.map(|x| C64::new(x, 0.0));
        let (q, t) = fc
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Decomposition("complex Schur iteration did not converge".into()))?
            .unpack();

        let off_diag = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| t[(i, j)].norm())
            .fold(0.0, f64::max);
        if off_diag > 1e-8 {
            return Err(Error::Decomposition(format!(
                "GFT matrix is not normal (Schur off-diagonal {off_diag:e})"
            )));
        }

        let phases = (0..n)
            .map(|i| {
                let theta = t[(i, i)].arg();
                if theta <= -PI + BRANCH_SNAP {
                    PI
                } else {
                    theta
                }
            })
            .collect();
        Ok(GftEigenbasis {
            basis_adjoint: q.adjoint(),
            basis: q,
            phases,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Unitary matrix `P` whose columns are eigenvectors of `F`.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    /// Principal arguments `θ_l ∈ (−π, π]` of the eigenvalues of `F`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Eigenvalues `μ_l = exp(i θ_l)`.
    pub fn unit_eigenvalues(&self) -> Vec<C64> {
        self.phases.iter().map(|&t| C64::from_polar(1.0, t)).collect()
    }

    /// `P diag(w) Pᴴ`.
    fn synthesize(&self, weights: impl Iterator<Item = C64>) -> DMatrix<C64> {
        let mut scaled = self.basis.clone();
        for (mut col, w) in scaled.column_iter_mut().zip(weights) {
            col *= w;
        }
        scaled * &self.basis_adjoint
    }

    /// Fractional power `F^α`.
    pub fn power_matrix(&self, alpha: f64) -> DMatrix<C64> {
        self.synthesize(self.phases.iter().map(|&t| C64::from_polar(1.0, alpha * t)))
    }

    /// `dF^α/dα = P diag(μ^α Log μ) Pᴴ`, with `Log μ = i θ`.
    pub fn alpha_derivative(&self, alpha: f64) -> DMatrix<C64> {
        self.synthesize(
            self.phases
                .iter()
                .map(|&t| C64::from_polar(1.0, alpha * t) * C64::new(0.0, t)),
        )
    }
}

/// The fractional transform `F^α` together with the eigenstructure it was
/// built from.
#[derive(Debug, Clone)]
pub struct FractionalOperator {
    alpha: f64,
    matrix: DMatrix<C64>,
    eigenbasis: Arc<GftEigenbasis>,
}

impl FractionalOperator {
    pub fn new(eigenbasis: Arc<GftEigenbasis>, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("fractional order {alpha} is not finite")));
        }
        Ok(FractionalOperator {
            alpha,
            matrix: eigenbasis.power_matrix(alpha),
            eigenbasis,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn eigenbasis(&self) -> &Arc<GftEigenbasis> {
        &self.eigenbasis
    }

    pub fn unitary_basis(&self) -> &DMatrix<C64> {
        self.eigenbasis.basis()
    }

    pub fn unit_eigenvalues(&self) -> Vec<C64> {
        self.eigenbasis.unit_eigenvalues()
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// `x̂^α = F^α x`.
    pub fn apply(&self, x: &DVector<C64>) -> Result<FractionalSpectrum> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        Ok(FractionalSpectrum {
            coefficients: &self.matrix * x,
        })
    }

    pub fn apply_real(&self, x: &DVector<f64>) -> Result<FractionalSpectrum> {
        self.apply(&x.map(|v| C64::new(v, 0.0)))
    }

    /// The inverse transform `F^{−α}`.
    pub fn inverse(&self) -> FractionalOperator {
        FractionalOperator {
            alpha: -self.alpha,
            matrix: self.eigenbasis.power_matrix(-self.alpha),
            eigenbasis: Arc::clone(&self.eigenbasis),
        }
    }

    /// `dF^α/dα` at this operator's order.
    pub fn alpha_derivative(&self) -> DMatrix<C64> {
        self.eigenbasis.alpha_derivative(self.alpha)
    }
}

/// Coefficients `x̂^α[λ_l]` of a signal in the fractional domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSpectrum {
    pub coefficients: DVector<C64>,
}

/// `F^α` for a decomposition. Builds the eigenbasis of `F` each call; use
/// [`GftEigenbasis`] directly when sweeping many orders.
pub fn gfrft_matrix(dec: &SpectralDecomposition, alpha: f64) -> Result<FractionalOperator> {
    FractionalOperator::new(Arc::new(dec.gft_eigenbasis()?), alpha)
}

pub fn gfrft_apply(op: &FractionalOperator, x: &DVector<C64>) -> Result<FractionalSpectrum> {
    op.apply(x)
}

pub fn gfrft_inverse(op: &FractionalOperator) -> FractionalOperator {
    op.inverse()
}

pub fn gfrft_alpha_derivative(dec: &SpectralDecomposition, alpha: f64) -> Result<DMatrix<C64>> {
    Ok(dec.gft_eigenbasis()?.alpha_derivative(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, random_connected_graph, Graph};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(m: &DMatrix<f64>) -> DMatrix<C64> {
        m.map(|x| C64::new(x, 0.0))
    }

    fn eye(n: usize) -> DMatrix<C64> {
        DMatrix::identity(n, n)
    }

    fn dec_of(g: &Graph) -> SpectralDecomposition {
        decompose(&laplacian(g)).unwrap()
    }

    fn random_decs(count: usize, seed: u64) -> Vec<SpectralDecomposition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| dec_of(&random_connected_graph(3 + i % 10, 0.4, &mut rng)))
            .collect()
    }

    #[test]
    fn path_eigenvalues() {
        let dec = dec_of(&Graph::path(3).unwrap());
        for (got, want) in dec.eigenvalues().iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        dec.verify(&laplacian(&Graph::path(3).unwrap())).unwrap();
    }

    #[test]
    fn single_node() {
        let dec = decompose(&DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(dec.eigenvalues().as_slice(), &[0.0]);
        assert_eq!(dec.eigenvectors()[(0, 0)], 1.0);
    }

    #[test]
    fn complete_graph_constant_vector_positive() {
        let dec = dec_of(&Graph::complete(3).unwrap());
        for (got, want) in dec.eigenvalues().iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let c = 1.0 / 3f64.sqrt();
        for x in dec.eigenvectors().column(0).iter() {
            assert!((x - c).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(decompose(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sign_canon_largest_entry_positive() {
        for dec in random_decs(20, 7) {
            for col in dec.eigenvectors().column_iter() {
                let max = col.amax();
                let first = col.iter().find(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap();
                assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn decompose_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let l = laplacian(&random_connected_graph(9, 0.4, &mut rng));
            let a = decompose(&l).unwrap();
            let b = decompose(&l).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn boundary_orders() {
        for dec in random_decs(10, 11) {
            let n = dec.len();
            let basis = Arc::new(dec.gft_eigenbasis().unwrap());
            let f0 = FractionalOperator::new(basis.clone(), 0.0).unwrap();
            assert!((f0.matrix() - eye(n)).norm() <= 1e-10);
            let f1 = FractionalOperator::new(basis, 1.0).unwrap();
            assert!((f1.matrix() - real(&dec.gft())).norm() <= 1e-10);
            assert!(f1.matrix().iter().map(|z| z.im.abs()).fold(0.0, f64::max) <= 1e-10);
        }
    }

    #[test]
    fn square_root_squares_to_gft() {
        let dec = dec_of(&Graph::path(3).unwrap());
        let half = gfrft_matrix(&dec, 0.5).unwrap();
        let sq = half.matrix() * half.matrix();
        assert!((sq - real(&dec.gft())).norm() <= 1e-8);
    }

    #[test]
    fn identity_order_returns_signal() {
        let dec = dec_of(&Graph::path(4).unwrap());
        let op = gfrft_matrix(&dec, 0.0).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = op.apply_real(&x).unwrap();
        for (a, b) in y.coefficients.iter().zip(x.iter()) {
            assert!((a - C64::new(*b, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn gft_of_constant_signal() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let dec = dec_of(&g);
        let op = gfrft_matrix(&dec, 1.0).unwrap();
        let ones = DVector::from_element(5, 1.0);
        let got = op.apply_real(&ones).unwrap().coefficients;
        // oracle: plain real product Vᵀ 1
        let oracle = dec.gft() * &ones;
        assert!((got[0].re - 5f64.sqrt()).abs() < 1e-10);
        for l in 0..5 {
            assert!((got[l] - C64::new(oracle[l], 0.0)).norm() < 1e-10);
            if l > 0 {
                assert!(got[l].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn apply_matches_entrywise_sum() {
        let dec = random_decs(1, 5).pop().unwrap();
        let op = gfrft_matrix(&dec, 0.37).unwrap();
        let n = dec.len();
        let x = DVector::from_fn(n, |i, _| (i as f64).sin());
        let got = op.apply_real(&x).unwrap().coefficients;
        for l in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for u in 0..n {
                s += op.matrix()[(l, u)] * x[u];
            }
            assert!((got[l] - s).norm() < 1e-12);
        }
        assert!(op.apply_real(&DVector::zeros(n + 1)).is_err());
    }

    #[test]
    fn inverse_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dec = dec_of(&random_connected_graph(8, 0.4, &mut rng));
        let n = dec.len();
        let f1 = gfrft_matrix(&dec, 1.0).unwrap();
        assert!((gfrft_inverse(&f1).matrix() - real(dec.eigenvectors())).norm() <= 1e-10);
        let f0 = gfrft_matrix(&dec, 0.0).unwrap();
        assert!((gfrft_inverse(&f0).matrix() - eye(n)).norm() <= 1e-10);
        let op = gfrft_matrix(&dec, 0.7).unwrap();
        let inv = gfrft_inverse(&op);
        assert_eq!(inv.alpha(), -0.7);
        assert!((op.matrix() * inv.matrix() - eye(n)).norm() <= 1e-8);
    }

    #[test]
    fn trivial_graph_derivative_is_zero() {
        let dec = decompose(&DMatrix::zeros(1, 1)).unwrap();
        let d = gfrft_alpha_derivative(&dec, 0.8).unwrap();
        assert_eq!(d[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        let mut decs = random_decs(10, 21);
        decs.push(dec_of(&Graph::path(3).unwrap()));
        for dec in decs {
            let basis = dec.gft_eigenbasis().unwrap();
            for alpha in [-2.5, -1.0, 0.3, 1.7] {
                let analytic = basis.alpha_derivative(alpha);
                let fd = (basis.power_matrix(alpha + h) - basis.power_matrix(alpha - h))
                    / C64::new(2.0 * h, 0.0);
                let rel = (&analytic - fd).norm() / analytic.norm().max(1e-300);
                assert!(rel <= 1e-5, "alpha {alpha}: rel {rel:e}");
                // shares the eigenbasis with F^α
                let p = basis.power_matrix(alpha);
                assert!((&analytic * &p - &p * &analytic).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn minus_one_eigenvalue_on_principal_branch() {
        // reflection swapping two nodes has eigenvalue −1
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let basis = GftEigenbasis::new(&f).unwrap();
        assert!(basis.phases().iter().any(|&t| t == PI));
        assert!(basis.phases().iter().all(|&t| t > -PI && t <= PI));
        assert!((basis.power_matrix(1.0) - real(&f)).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn group_law_and_unitarity(
            seed in any::<u64>(),
            n in 3usize..12,
            pairs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 20),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dec = dec_of(&random_connected_graph(n, 0.4, &mut rng));
            let basis = dec.gft_eigenbasis().unwrap();
            for (a, b) in pairs {
                let fa = basis.power_matrix(a);
                let fb = basis.power_matrix(b);
                prop_assert!((&fa * &fb - basis.power_matrix(a + b)).norm() <= 1e-8);
                prop_assert!((&fa * fa.adjoint() - eye(n)).norm() <= 1e-8);
            }
        }

        #[test]
        fn transform_preserves_energy(
            seed in any::<u64>(),
            alpha in -3.0f64..3.0,
            xs in proptest::collection::vec(-10.0f64..10.0, 12),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dec = dec_of(&random_connected_graph(12, 0.4, &mut rng));
            let op = gfrft_matrix(&dec, alpha).unwrap();
            let x = DVector::from_vec(xs);
            let y = op.apply_real(&x).unwrap().coefficients;
            prop_assert!((y.norm() - x.norm()).abs() <= 1e-8);
        }
    }
}
