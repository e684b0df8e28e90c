//! Unscented Kalman filtering with interval-constrained posteriors.
//!
//! Sigma points follow the symmetric Julier-Uhlmann construction with a
//! single spread parameter `kappa`:
//!
//! ```text
//! X_0 = mu,  X_i = mu + col_i(S),  X_{i+D} = mu - col_i(S),  S S^T = (D + kappa) P
//! W_0 = kappa / (D + kappa),  W_i = 1 / (2 (D + kappa))
//! ```
//!
//! Both mean and covariance use the same weights, so a positive `kappa`
//! keeps every weight positive and every recovered covariance PSD.
//! [`truncate`] projects a belief onto box constraints by moment matching
//! (see the `truncate` module docs).

mod truncate;

pub use truncate::{truncate, truncated_normal_moments};

use crate::error::{domain, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Smallest spread used by [`default_spread`].
pub const MIN_SPREAD: f64 = 0.5;

/// Diagonal jitter added before retrying a failed Cholesky factorisation.
const JITTER: f64 = 1e-12;

/// `3 - D`, floored at [`MIN_SPREAD`] so all weights stay positive.
pub fn default_spread(dim: usize) -> f64 {
    (3.0 - dim as f64).max(MIN_SPREAD)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(domain(
                "GaussianBelief",
                format!("mean has {d} entries, covariance is {}x{}", cov.nrows(), cov.ncols()),
            ));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(domain("GaussianBelief", "non-finite entry"));
        }
        let scale = cov.amax().max(1e-300);
        if (&cov - cov.transpose()).amax() > 1e-9 * scale {
            return Err(domain("GaussianBelief", "covariance is not symmetric"));
        }
        Ok(Self { mean, cov })
    }

    pub fn from_diagonal(mean: DVector<f64>, variances: &DVector<f64>) -> Result<Self> {
        Self::new(mean, DMatrix::from_diagonal(variances))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variances(&self) -> DVector<f64> {
        self.cov.diagonal()
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    pub(crate) fn symmetrize(&mut self) {
        let t = self.cov.transpose();
        self.cov += t;
        self.cov *= 0.5;
    }
}

/// `2D + 1` sigma points (one per row) with their weights.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub points: DMatrix<f64>,
    pub weights: DVector<f64>,
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }
}

/// Per-component feasible interval; infinite entries leave a side open.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(domain("Bounds", "lower and upper differ in length"));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(domain("Bounds", format!("component {i}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn with(mut self, index: usize, lower: f64, upper: f64) -> Result<Self> {
        self.lower[index] = lower;
        self.upper[index] = upper;
        Self::new(self.lower, self.upper)
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains_strictly(&self, x: &DVector<f64>) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(&v, (&lo, &hi))| {
                let unconstrained = lo == f64::NEG_INFINITY && hi == f64::INFINITY;
                unconstrained || (v > lo && v < hi)
            })
    }
}

/// Lower-triangular-ish factor `S` with `S S^T = m`. Falls back to a
/// clipped symmetric eigendecomposition when Cholesky fails.
fn matrix_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let mut jittered = m.clone();
    for i in 0..m.nrows() {
        jittered[(i, i)] += JITTER * m[(i, i)].abs().max(1.0);
    }
    if let Some(ch) = jittered.cholesky() {
        return Ok(ch.l());
    }
    let eig = m.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    if eig.eigenvalues.iter().any(|&l| !l.is_finite() || l < -1e-9 * scale) {
        return Err(Error::Decomposition(format!(
            "covariance is not positive semi-definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Symmetric sigma-point set for `b`.
pub fn sigma_points(b: &GaussianBelief, spread: f64) -> Result<SigmaSet> {
    if !(spread.is_finite() && spread > 0.0) {
        return Err(domain("sigma_points", format!("spread = {spread}")));
    }
    let d = b.dim();
    let n = d as f64 + spread;
    let s = matrix_sqrt(&(&b.cov * n))?;
    let mut points = DMatrix::zeros(2 * d + 1, d);
    points.row_mut(0).copy_from(&b.mean.transpose());
    for i in 0..d {
        let col = s.column(i);
        points.row_mut(1 + i).copy_from(&(&b.mean + col).transpose());
        points.row_mut(1 + d + i).copy_from(&(&b.mean - col).transpose());
    }
    let mut weights = DVector::from_element(2 * d + 1, 0.5 / n);
    weights[0] = spread / n;
    Ok(SigmaSet { points, weights })
}

/// Propagated points, their weighted mean and covariance.
struct Propagated {
    points: DMatrix<f64>,
    belief: GaussianBelief,
}

fn propagate<F>(s: &SigmaSet, mut f: F) -> Result<Propagated>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let y = f(&s.point(i));
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Propagation { index: i });
        }
        if let Some(first) = rows.first() {
            if first.len() != y.len() {
                return Err(domain("unscented_transform", "output dimension changed"));
            }
        }
        rows.push(y);
    }
    let m = rows.first().map_or(0, |r| r.len());
    let mut points = DMatrix::zeros(s.len(), m);
    for (i, y) in rows.iter().enumerate() {
        points.row_mut(i).copy_from(&y.transpose());
    }
    let mean = points.transpose() * &s.weights;
    let mut cov = DMatrix::zeros(m, m);
    for (i, y) in rows.iter().enumerate() {
        let dy = y - &mean;
        cov.ger(s.weights[i], &dy, &dy, 1.0);
    }
    let mut belief = GaussianBelief { mean, cov };
    belief.symmetrize();
    Ok(Propagated { points, belief })
}

/// Push `s` through `f` and recover the weighted mean and covariance.
pub fn unscented_transform<F>(s: &SigmaSet, f: F) -> Result<GaussianBelief>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    Ok(propagate(s, f)?.belief)
}

fn check_square(op: &'static str, m: &DMatrix<f64>, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(domain(op, format!("expected {d}x{d} noise matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Time update: unscented transform of `f` plus additive process noise `q`.
pub fn predict<F>(b: &GaussianBelief, f: F, q: &DMatrix<f64>, spread: f64) -> Result<GaussianBelief>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    check_square("predict", q, b.dim())?;
    let s = sigma_points(b, spread)?;
    let mut out = unscented_transform(&s, f)?;
    if out.dim() != b.dim() {
        return Err(domain("predict", "process function changed the state dimension"));
    }
    out.cov += q;
    out.symmetrize();
    Ok(out)
}

/// Measurement update with measurement function `h`, noise `r` and
/// observation `z`.
pub fn update<H>(
    b: &GaussianBelief,
    h: H,
    r: &DMatrix<f64>,
    z: &DVector<f64>,
    spread: f64,
) -> Result<GaussianBelief>
where
    H: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if z.iter().any(|v| !v.is_finite()) {
        return Err(domain("update", "non-finite measurement"));
    }
    let s = sigma_points(b, spread)?;
    let Propagated { points, belief: pred } = propagate(&s, h)?;
    if pred.dim() != z.len() {
        return Err(domain("update", "measurement dimension mismatch"));
    }
    check_square("update", r, z.len())?;
    let innovation_cov = &pred.cov + r;
    let mut cross = DMatrix::zeros(b.dim(), z.len());
    for i in 0..s.len() {
        let dx = s.point(i) - &b.mean;
        let dz = points.row(i).transpose() - &pred.mean;
        cross.ger(s.weights[i], &dx, &dz, 1.0);
    }
    // K = C S^-1, computed as (S^-1 C^T)^T since S is symmetric.
    let gain_t = match innovation_cov.clone().cholesky() {
        Some(ch) => ch.solve(&cross.transpose()),
        None => innovation_cov
            .clone()
            .lu()
            .solve(&cross.transpose())
            .ok_or(Error::SingularInnovation)?,
    };
    if gain_t.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let gain = gain_t.transpose();
    let mean = &b.mean + &gain * (z - &pred.mean);
    let cov = &b.cov - &gain * &innovation_cov * gain.transpose();
    let mut post = GaussianBelief { mean, cov };
    post.symmetrize();
    Ok(post)
}

/// A belief with its filter settings: predict, update, then truncate the
/// posterior onto `bounds`.
#[derive(Debug, Clone)]
pub struct TruncatedUkf {
    pub belief: GaussianBelief,
    pub bounds: Bounds,
    pub spread: f64,
}

impl TruncatedUkf {
    pub fn new(belief: GaussianBelief, bounds: Bounds, spread: f64) -> Result<Self> {
        if bounds.len() != belief.dim() {
            return Err(domain("TruncatedUkf", "bounds dimension mismatch"));
        }
        if !(spread.is_finite() && spread > 0.0) {
            return Err(domain("TruncatedUkf", format!("spread = {spread}")));
        }
        Ok(Self { belief, bounds, spread })
    }

    pub fn predict<F>(&mut self, f: F, q: &DMatrix<f64>) -> Result<()>
    where
        F: FnMut(&DVector<f64>) -> DVector<f64>,
    {
        self.belief = predict(&self.belief, f, q, self.spread)?;
        Ok(())
    }

    pub fn update<H>(&mut self, h: H, r: &DMatrix<f64>, z: &DVector<f64>) -> Result<()>
    where
        H: FnMut(&DVector<f64>) -> DVector<f64>,
    {
        let post = update(&self.belief, h, r, z, self.spread)?;
        self.belief = truncate(&post, &self.bounds)?;
        Ok(())
    }
}
