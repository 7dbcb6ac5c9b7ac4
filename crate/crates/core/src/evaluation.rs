//! Fit-quality metrics, k-fold cross validation and synthetic benchmark data.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::criteria::Criterion;
use crate::error::{invalid, Result};
use crate::geometry::{residuals, Dataset, Hyperplane, NormSpec, Point};
use crate::solvers::{fit, SolverHints};

/// Strip coverage for a list of widths, and the width covering 90 % of the
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct StripMetrics {
    /// `(ε, fraction of points with residual ≤ ε)`.
    pub coverage: Vec<(f64, f64)>,
    /// The `⌈0.9 n⌉`-th smallest residual.
    pub eps90: f64,
}

impl StripMetrics {
    /// Coverage at a width in the list it was computed for.
    pub fn coverage_at(&self, eps: f64) -> Option<f64> {
        self.coverage.iter().find(|(e, _)| *e == eps).map(|(_, c)| *c)
    }
}

/// Residual strip statistics of `points` around `h`. Vertical residuals
/// measure vertical width; norm residuals use the norm's distance.
pub fn strip_metrics(points: &[Point], h: &Hyperplane, norm: &NormSpec, eps_list: &[f64]) -> Result<StripMetrics> {
    if points.is_empty() {
        return Err(invalid("no points"));
    }
    let mut res = residuals(h, points, norm)?;
    res.sort_unstable_by(f64::total_cmp);
    let n = res.len();
    let coverage = eps_list.iter().map(|&e| (e, res.partition_point(|r| *r <= e) as f64 / n as f64)).collect();
    let k = (9 * n).div_ceil(10);
    Ok(StripMetrics { coverage, eps90: res[k - 1] })
}

/// What to fit on each training sample. Preset criteria are re-instantiated
/// for the training size.
#[derive(Debug, Clone)]
pub struct FitRequest {
    pub criterion: Criterion,
    pub norm: NormSpec,
    pub hints: SolverHints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    /// Held-out point indices per fold.
    pub folds: Vec<Vec<usize>>,
    /// ε₉₀ on each held-out fold.
    pub eps90: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
}

/// Seeded partition of `0..n` into `k` contiguous chunks of a shuffle; the
/// first `n mod k` folds get `⌈n/k⌉` points, the rest `⌊n/k⌋`.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(invalid(format!("need 2 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut Xoshiro256PlusPlus::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// k-fold cross validation of held-out ε₉₀.
pub fn kfold_cv(dataset: &Dataset, k: usize, request: &FitRequest, seed: u64) -> Result<CvSummary> {
    let n = dataset.len();
    let folds = kfold_partition(n, k, seed)?;
    let mut eps90 = Vec::with_capacity(k);
    for fold in &folds {
        let train_idx: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
        if train_idx.len() < dataset.dim() + 1 {
            return Err(invalid(format!(
                "a training sample of {} points is too small in dimension {}",
                train_idx.len(),
                dataset.dim()
            )));
        }
        let train = dataset.subset(&train_idx)?;
        let criterion = request.criterion.for_size(train.len())?;
        let fitted = fit(&train, &criterion, &request.norm, &request.hints)?;
        let held: Vec<Point> = fold.iter().map(|&i| dataset.point(i).clone()).collect();
        eps90.push(strip_metrics(&held, &fitted.hyperplane, &request.norm, &[])?.eps90);
    }
    let mut sorted = eps90.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    Ok(CvSummary {
        min: sorted[0],
        max: sorted[m - 1],
        median,
        mean: sorted.iter().sum::<f64>() / m as f64,
        folds,
        eps90,
    })
}

/// Which coordinates the outlier noise is added to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// All explanatory coordinates.
    X,
    /// The response.
    Y,
}

/// Rows of a generated sample, with the indices that were corrupted.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub rows: Vec<Vec<f64>>,
    /// Sorted.
    pub corrupted: Vec<usize>,
}

impl Synthetic {
    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::from_rows(self.rows.clone())
    }
}

/// Standard normal draws by the Box–Muller transform.
struct BoxMuller {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl BoxMuller {
    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.rng.gen::<f64>(); // (0, 1]
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        self.spare = Some(r * (2.0 * PI * u2).sin());
        r * (2.0 * PI * u2).cos()
    }
}

/// Benchmark sample around `x_d = −Σ_{k<d} x_k`: features `N(0, 100²)`,
/// response noise `N(0, 10²)`, and `⌊0.15 n⌋` rows of a seeded shuffle
/// receiving extra `N(0, 500²)` noise on the chosen coordinates.
pub fn synthetic_generate(n: usize, d: usize, corruption: Corruption, seed: u64) -> Result<Synthetic> {
    if n == 0 || d < 2 {
        return Err(invalid(format!("need n ≥ 1 and d ≥ 2, got n = {n}, d = {d}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut gauss = BoxMuller { rng, spare: None };
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..d - 1).map(|_| 100.0 * gauss.next()).collect();
            let y = -row.iter().sum::<f64>() + 10.0 * gauss.next();
            row.push(y);
            row
        })
        .collect();
    let mut corrupted = order[..n * 15 / 100].to_vec();
    corrupted.sort_unstable();
    for &i in &corrupted {
        let cols = match corruption {
            Corruption::X => 0..d - 1,
            Corruption::Y => d - 1..d,
        };
        for j in cols {
            rows[i][j] += 500.0 * gauss.next();
        }
    }
    Ok(Synthetic { rows, corrupted })
}
