//! Gaussian-state linear algebra on covariance matrices.
//!
//! Quadratures are interleaved per mode, `(x1, p1, x2, p2, ...)`, and every
//! entry is expressed in shot-noise units so the vacuum is the 2×2 identity.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, Matrix2};

use crate::error::{domain, numerical, validation, Result};

const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below 1 for a symplectic eigenvalue to still count as physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;
const PINV_RTOL: f64 = 1e-12;
const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// Symmetric `2n × 2n` matrix of quadrature second moments.
///
/// Physicality is not enforced on construction; miscalibrated scenarios are
/// allowed to produce matrices that violate the uncertainty principle. Use
/// [`CovarianceMatrix::is_physical`] to check.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<f64>,
}

/// Symplectic spectrum, one value per mode, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

/// Quadrature read out by an ideal homodyne detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementBasis {
    XQuadrature,
    PQuadrature,
}

impl CovarianceMatrix {
    /// Wraps `data` after checking it is square, even-sized and symmetric.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c {
            return Err(validation(format!(
                "covariance matrix must be square, got {r}x{c}"
            )));
        }
        if r == 0 || r % 2 != 0 {
            return Err(validation(format!(
                "covariance matrix dimension must be a positive even number, got {r}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(validation("covariance matrix has non-finite entries"));
        }
        let scale = data.amax().max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                if (data[(i, j)] - data[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(validation(format!(
                        "covariance matrix is not symmetric at ({i},{j}): {} vs {}",
                        data[(i, j)],
                        data[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    /// `n`-mode vacuum.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            data: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state with quadrature variance `v`.
    pub fn thermal(v: f64) -> Self {
        Self {
            data: DMatrix::identity(2, 2) * v,
        }
    }

    /// Two-mode squeezed vacuum (EPR state) with local variance `v ≥ 1`.
    pub fn two_mode_squeezed(v: f64) -> Result<Self> {
        if v < 1.0 {
            return Err(domain(format!("EPR variance must be >= 1, got {v}")));
        }
        Ok(Self::symmetric_two_mode(v, (v * v - 1.0).sqrt(), v))
    }

    /// Two-mode matrix `[[a·I, c·σz], [c·σz, b·I]]`.
    pub fn symmetric_two_mode(a: f64, c: f64, b: f64) -> Self {
        let mut data = DMatrix::zeros(4, 4);
        data[(0, 0)] = a;
        data[(1, 1)] = a;
        data[(2, 2)] = b;
        data[(3, 3)] = b;
        data[(0, 2)] = c;
        data[(2, 0)] = c;
        data[(1, 3)] = -c;
        data[(3, 1)] = -c;
        Self { data }
    }

    pub fn n_modes(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// 2×2 block coupling `mode_i` and `mode_j`.
    pub fn block(&self, mode_i: usize, mode_j: usize) -> Matrix2<f64> {
        self.data
            .fixed_view::<2, 2>(2 * mode_i, 2 * mode_j)
            .into_owned()
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let n = self.data.nrows();
        let m = other.data.nrows();
        let mut data = DMatrix::zeros(n + m, n + m);
        data.view_mut((0, 0), (n, n)).copy_from(&self.data);
        data.view_mut((n, n), (m, m)).copy_from(&other.data);
        CovarianceMatrix { data }
    }

    /// Keeps the listed modes in the given order. Dropping a mode is the
    /// partial trace over it; permuting the list reorders modes.
    pub fn select_modes(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        let n = self.n_modes();
        if modes.is_empty() {
            return Err(validation("mode selection must not be empty"));
        }
        for (k, &m) in modes.iter().enumerate() {
            if m >= n {
                return Err(validation(format!(
                    "mode index {m} out of range for {n} modes"
                )));
            }
            if modes[..k].contains(&m) {
                return Err(validation(format!("mode index {m} selected twice")));
            }
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let data = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.data[(idx[i], idx[j])]);
        Ok(CovarianceMatrix { data })
    }

    /// Applies the local π phase rotation `−I2` to `mode`, flipping the sign
    /// of every correlation that involves it.
    pub fn phase_flip(&self, mode: usize) -> Result<CovarianceMatrix> {
        let n = self.n_modes();
        if mode >= n {
            return Err(validation(format!(
                "mode index {mode} out of range for {n} modes"
            )));
        }
        let mut data = self.data.clone();
        let dim = data.nrows();
        for q in [2 * mode, 2 * mode + 1] {
            for k in 0..dim {
                if k / 2 != mode {
                    data[(q, k)] = -data[(q, k)];
                    data[(k, q)] = -data[(k, q)];
                }
            }
        }
        Ok(CovarianceMatrix { data })
    }

    /// Congruence `D γ D` with `D = diag(1, …, 1/√n0 on mode, …, 1)`:
    /// divides the mode's variances by `n0` and its correlations by `√n0`.
    pub fn rescale_mode(&self, mode: usize, n0: f64) -> Result<CovarianceMatrix> {
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(domain(format!(
                "rescaling factor must be positive, got {n0}"
            )));
        }
        let n = self.n_modes();
        if mode >= n {
            return Err(validation(format!(
                "mode index {mode} out of range for {n} modes"
            )));
        }
        let s = n0.sqrt().recip();
        let mut data = self.data.clone();
        for q in [2 * mode, 2 * mode + 1] {
            data.row_mut(q).scale_mut(s);
            data.column_mut(q).scale_mut(s);
        }
        Ok(CovarianceMatrix { data })
    }

    /// Every symplectic eigenvalue is at least `1 − 1e-9`.
    pub fn is_physical(&self) -> bool {
        symplectic_eigenvalues(self)
            .map(|s| s.min() >= 1.0 - PHYSICALITY_TOL)
            .unwrap_or(false)
    }
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// Von Neumann entropy `Σ G((λ−1)/2)` in bits.
    ///
    /// Eigenvalues within `1e-9` below 1 are treated as 1; anything lower is
    /// an unphysical state and reported as a domain error.
    pub fn entropy(&self) -> Result<f64> {
        self.values.iter().try_fold(0.0, |acc, &lambda| {
            if lambda < 1.0 - PHYSICALITY_TOL {
                return Err(domain(format!(
                    "symplectic eigenvalue {lambda} < 1: state violates the uncertainty principle"
                )));
            }
            Ok(acc + entropy_g(((lambda - 1.0) / 2.0).max(0.0))?)
        })
    }
}

/// `G(x) = (x+1)·log2(x+1) − x·log2(x)`, the entropy of a thermal mode with
/// mean photon number `x`.
pub fn entropy_g(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(domain("entropy_g of NaN"));
    }
    if x < -1e-12 {
        return Err(domain(format!("entropy_g requires x >= 0, got {x}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Block-diagonal symplectic form with `[[0, 1], [−1, 0]]` per mode.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues: moduli of the eigenvalues of `iΩγ`, one per mode.
///
/// `Ωγ` has purely imaginary eigenvalues `±iν`; the real Schur form gives
/// them directly, after which the `±` pairs collapse to one entry each.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let n = gamma.n_modes();
    let product = symplectic_form(n) * gamma.data();
    let schur = Schur::try_new(product, SCHUR_EPS, SCHUR_MAX_ITER).ok_or_else(|| {
        let sv = gamma.data().singular_values();
        numerical(format!(
            "Schur decomposition did not converge for a {n}-mode matrix (condition number {:.3e})",
            sv.max() / sv.min()
        ))
    })?;
    let mut moduli: Vec<f64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let values = moduli
        .chunks(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect();
    Ok(SymplecticSpectrum { values })
}

/// Mixes `mode_a` and `mode_b` on a beamsplitter of transmittance `eta`.
///
/// Returns `Yᵀ γ Y`, where `Y` is the identity except on the two modes'
/// 4×4 block `[[√η I, √(1−η) I], [−√(1−η) I, √η I]]`. `mode_a` exits with
/// weight `√η` on its own input, `mode_b` with weight `√η` on its own.
pub fn apply_beamsplitter(
    gamma: &CovarianceMatrix,
    mode_a: usize,
    mode_b: usize,
    eta: f64,
) -> Result<CovarianceMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!(
            "beamsplitter transmittance must lie in [0,1], got {eta}"
        )));
    }
    let n = gamma.n_modes();
    if mode_a >= n || mode_b >= n {
        return Err(validation(format!(
            "beamsplitter modes ({mode_a},{mode_b}) out of range for {n} modes"
        )));
    }
    if mode_a == mode_b {
        return Err(validation("beamsplitter modes must be distinct"));
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let mut y = DMatrix::identity(2 * n, 2 * n);
    for q in 0..2 {
        let (ia, ib) = (2 * mode_a + q, 2 * mode_b + q);
        y[(ia, ia)] = t;
        y[(ib, ib)] = t;
        y[(ia, ib)] = r;
        y[(ib, ia)] = -r;
    }
    let mut data = y.transpose() * gamma.data() * &y;
    symmetrize(&mut data);
    Ok(CovarianceMatrix { data })
}

/// Appends one vacuum mode: `γ ⊕ I2`.
pub fn attach_vacuum(gamma: &CovarianceMatrix) -> CovarianceMatrix {
    gamma.direct_sum(&CovarianceMatrix::vacuum(1))
}

/// Conditional covariance of the remaining modes after an ideal homodyne
/// measurement of `basis` on `measured_mode`:
/// `γ_R − σ (X γ_M X)^MP σᵀ`, with `X` projecting onto the measured quadrature.
pub fn condition_on_homodyne(
    gamma: &CovarianceMatrix,
    measured_mode: usize,
    basis: MeasurementBasis,
) -> Result<CovarianceMatrix> {
    let n = gamma.n_modes();
    if n < 2 {
        return Err(validation("homodyne conditioning needs at least two modes"));
    }
    if measured_mode >= n {
        return Err(validation(format!(
            "measured mode {measured_mode} out of range for {n} modes"
        )));
    }
    let quad = match basis {
        MeasurementBasis::XQuadrature => 0,
        MeasurementBasis::PQuadrature => 1,
    };
    let measured_var = gamma.data()[(2 * measured_mode + quad, 2 * measured_mode + quad)];
    if !(measured_var > 0.0) {
        return Err(numerical(format!(
            "measured quadrature variance must be positive, got {measured_var}"
        )));
    }

    let rest: Vec<usize> = (0..n)
        .filter(|&m| m != measured_mode)
        .flat_map(|m| [2 * m, 2 * m + 1])
        .collect();
    let data = gamma.data();
    let gamma_rest = DMatrix::from_fn(rest.len(), rest.len(), |i, j| data[(rest[i], rest[j])]);
    let sigma = DMatrix::from_fn(rest.len(), 2, |i, j| data[(rest[i], 2 * measured_mode + j)]);

    let mut projector = DMatrix::zeros(2, 2);
    projector[(quad, quad)] = 1.0;
    let projected = &projector * gamma.block(measured_mode, measured_mode) * &projector;
    let pinv = pseudo_inverse(projected)?;

    let mut conditional = gamma_rest - &sigma * pinv * sigma.transpose();
    symmetrize(&mut conditional);
    Ok(CovarianceMatrix { data: conditional })
}

/// Moore–Penrose pseudoinverse; singular values below `1e-12·σ_max` are zero.
fn pseudo_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.svd(true, true);
    let cutoff = PINV_RTOL * svd.singular_values.max();
    svd.pseudo_inverse(cutoff)
        .map_err(|e| numerical(format!("pseudoinverse failed: {e}")))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
