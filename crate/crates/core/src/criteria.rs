//! Ordered-median aggregation `Φ(ε) = Σ_j λ_j ε_(j)^p` and named presets.

use std::fmt;

use num_traits::One;

use crate::error::{invalid, Result};
use crate::exponent::{pow_rational, rational_f64, Rational};

/// A size given either as an absolute count or as a fraction of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Share {
    Count(usize),
    Fraction(f64),
}

impl Share {
    /// Values in `(0, 1)` are fractions; nonnegative integers are counts.
    pub fn from_param(v: f64) -> Result<Self> {
        if v > 0.0 && v < 1.0 {
            Ok(Share::Fraction(v))
        } else if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
            Ok(Share::Count(v as usize))
        } else {
            Err(invalid(format!("parameter {v} is neither a fraction in (0,1) nor a count")))
        }
    }

    fn floor(self, n: usize) -> usize {
        match self {
            Share::Count(k) => k,
            Share::Fraction(f) => (f * n as f64).floor() as usize,
        }
    }

    fn ceil(self, n: usize) -> usize {
        match self {
            Share::Count(k) => k,
            Share::Fraction(f) => (f * n as f64).ceil() as usize,
        }
    }

    fn value(self) -> f64 {
        match self {
            Share::Count(k) => k as f64,
            Share::Fraction(f) => f,
        }
    }
}

/// Named criteria. Sizes are resolved against `n` by [`Preset::instantiate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Sum of residuals (least absolute deviations for vertical residuals).
    Sum,
    /// Largest residual (Chebyshev / minimax).
    Max,
    /// Residual at position `⌈n/2⌉`.
    Med,
    /// `λ = (0^K, 1^{n-K})`: the sum of the `n - K` largest residuals.
    KCentrum(Share),
    /// `λ = (1^K, 0^{n-K})`: the sum of the `K` smallest residuals.
    AntiKCentrum(Share),
    /// Sum of squares.
    Sos,
    /// Sum of residuals to the power 3/2.
    Sum15,
    /// Squared residual at position `r`.
    Lqs(Share),
    /// Squared residual at position `⌊n/2⌋ + 1`.
    Lms,
    /// Sum of the `⌈αn⌉` smallest squared residuals.
    Lts(f64),
}

impl Preset {
    /// Accepts the names `SUM, MAX, MED, kC, AkC, SOS, 1.5SUM, LQS, LMS, LTS`
    /// (case-insensitive). `kC`/`AkC` default to `K = ⌊n/2⌋`, `LTS` to
    /// `α = 0.5`; `LQS` requires its position.
    pub fn parse(name: &str, param: Option<f64>) -> Result<Self> {
        let share = |default: Option<Share>| -> Result<Share> {
            match param {
                Some(v) => Share::from_param(v),
                None => default.ok_or_else(|| invalid(format!("{name} needs a parameter"))),
            }
        };
        let preset = match name.to_ascii_uppercase().as_str() {
            "SUM" => Preset::Sum,
            "MAX" => Preset::Max,
            "MED" => Preset::Med,
            "KC" => Preset::KCentrum(share(Some(Share::Fraction(0.5)))?),
            "AKC" => Preset::AntiKCentrum(share(Some(Share::Fraction(0.5)))?),
            "SOS" => Preset::Sos,
            "1.5SUM" => Preset::Sum15,
            "LQS" => Preset::Lqs(share(None)?),
            "LMS" => Preset::Lms,
            "LTS" => {
                let alpha = param.unwrap_or(0.5);
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(invalid(format!("LTS coverage {alpha} outside (0, 1]")));
                }
                Preset::Lts(alpha)
            }
            _ => return Err(invalid(format!("unknown criterion {name:?}"))),
        };
        Ok(preset)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Sum => "SUM",
            Preset::Max => "MAX",
            Preset::Med => "MED",
            Preset::KCentrum(_) => "kC",
            Preset::AntiKCentrum(_) => "AkC",
            Preset::Sos => "SOS",
            Preset::Sum15 => "1.5SUM",
            Preset::Lqs(_) => "LQS",
            Preset::Lms => "LMS",
            Preset::Lts(_) => "LTS",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Preset::KCentrum(s) | Preset::AntiKCentrum(s) | Preset::Lqs(s) => Some(s.value()),
            Preset::Lts(a) => Some(a),
            _ => None,
        }
    }

    pub fn instantiate(&self, n: usize) -> Result<Criterion> {
        if n == 0 {
            return Err(invalid("criteria need at least one residual"));
        }
        let indicator = |pos: usize| -> Result<Vec<f64>> {
            if pos == 0 || pos > n {
                return Err(invalid(format!("position {pos} outside 1..={n}")));
            }
            let mut l = vec![0.0; n];
            l[pos - 1] = 1.0;
            Ok(l)
        };
        let two = Rational::from_integer(2);
        let (lambda, p) = match *self {
            Preset::Sum => (vec![1.0; n], Rational::one()),
            Preset::Max => (indicator(n)?, Rational::one()),
            Preset::Med => (indicator(n.div_ceil(2))?, Rational::one()),
            Preset::KCentrum(s) => {
                let k = s.floor(n);
                if k >= n {
                    return Err(invalid(format!("kC with K = {k} leaves no residual out of {n}")));
                }
                ((0..n).map(|j| if j < k { 0.0 } else { 1.0 }).collect(), Rational::one())
            }
            Preset::AntiKCentrum(s) => {
                let k = s.floor(n);
                if k == 0 || k > n {
                    return Err(invalid(format!("AkC with K = {k} is outside 1..={n}")));
                }
                ((0..n).map(|j| if j < k { 1.0 } else { 0.0 }).collect(), Rational::one())
            }
            Preset::Sos => (vec![1.0; n], two),
            Preset::Sum15 => (vec![1.0; n], Rational::new(3, 2)),
            Preset::Lqs(s) => (indicator(s.ceil(n).max(1))?, two),
            Preset::Lms => (indicator(n / 2 + 1)?, two),
            Preset::Lts(alpha) => {
                let h = ((alpha * n as f64).ceil() as usize).clamp(1, n);
                ((0..n).map(|j| if j < h { 1.0 } else { 0.0 }).collect(), two)
            }
        };
        Ok(Criterion { lambda, p, preset: Some(*self) })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(v) => write!(f, "{}({v})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Ordered-median weights `λ ≥ 0` and power `p ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    lambda: Vec<f64>,
    p: Rational,
    preset: Option<Preset>,
}

impl Criterion {
    pub fn new(lambda: Vec<f64>, p: Rational) -> Result<Self> {
        if lambda.is_empty() {
            return Err(invalid("λ is empty"));
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(invalid("λ must be finite and nonnegative"));
        }
        if lambda.iter().all(|l| *l == 0.0) {
            return Err(invalid("λ is identically zero"));
        }
        if p < Rational::one() {
            return Err(invalid(format!("power {p} is below 1")));
        }
        Ok(Self { lambda, p, preset: None })
    }

    pub fn preset(name: &str, n: usize, param: Option<f64>) -> Result<Self> {
        Preset::parse(name, param)?.instantiate(n)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn power(&self) -> Rational {
        self.p
    }

    pub fn p(&self) -> f64 {
        rational_f64(self.p)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn preset_kind(&self) -> Option<Preset> {
        self.preset
    }

    /// Display label: the preset name, or `OMF` for custom weights.
    pub fn label(&self) -> String {
        self.preset.map_or_else(|| "OMF".to_string(), |p| p.to_string())
    }

    /// The same preset for a sample of size `n` (custom weights cannot be
    /// resized).
    pub fn for_size(&self, n: usize) -> Result<Self> {
        if n == self.len() {
            return Ok(self.clone());
        }
        match self.preset {
            Some(p) => p.instantiate(n),
            None => Err(invalid("custom λ cannot be resized to a different sample size")),
        }
    }

    /// Nondecreasing weights make Φ convex in the residuals.
    pub fn is_monotone(&self) -> bool {
        self.lambda.windows(2).all(|w| w[0] <= w[1])
    }

    /// If `λ = (λ'_1, …, λ'_m, 0, …, 0)` with `λ'` nondecreasing, returns `m`.
    /// Then `Φ(ε)` is the minimum over `m`-subsets `S` of `Φ_{λ'}(ε_S)`.
    pub fn trimmed_monotone_len(&self) -> Option<usize> {
        let m = self.lambda.iter().rposition(|&l| l > 0.0)? + 1;
        self.lambda[..m].windows(2).all(|w| w[0] <= w[1]).then_some(m)
    }

    /// The position (0-based) of the only nonzero weight, if there is one.
    pub fn single_position(&self) -> Option<usize> {
        let mut nz = self.lambda.iter().enumerate().filter(|(_, &l)| l > 0.0);
        let (i, _) = nz.next()?;
        nz.next().is_none().then_some(i)
    }

    /// `Φ(ε)`. Residuals must be nonnegative and `len` must match λ.
    pub fn evaluate(&self, residuals: &[f64]) -> Result<f64> {
        self.check(residuals)?;
        let mut sorted = residuals.to_vec();
        Ok(self.evaluate_in_place(&mut sorted))
    }

    /// Sorts `buf` and evaluates; no validation.
    pub(crate) fn evaluate_in_place(&self, buf: &mut [f64]) -> f64 {
        buf.sort_unstable_by(f64::total_cmp);
        self.evaluate_sorted(buf)
    }

    pub(crate) fn evaluate_sorted(&self, sorted: &[f64]) -> f64 {
        self.lambda.iter().zip(sorted).filter(|(l, _)| **l != 0.0).map(|(l, e)| l * pow_rational(*e, self.p)).sum()
    }

    /// `Φ` through r-centrum sums: `λ_1 Σ ε^p + Σ_{r≥2} (λ_r − λ_{r−1}) θ_{n−r+1}`
    /// where `θ_m` is the sum of the `m` largest powered residuals.
    pub fn evaluate_rcentrum(&self, residuals: &[f64]) -> Result<f64> {
        self.check(residuals)?;
        let n = residuals.len();
        let mut powered: Vec<f64> = residuals.iter().map(|e| pow_rational(*e, self.p)).collect();
        powered.sort_unstable_by(|a, b| b.total_cmp(a));
        // theta[m] = sum of the m largest
        let mut theta = vec![0.0; n + 1];
        for m in 0..n {
            theta[m + 1] = theta[m] + powered[m];
        }
        let mut total = self.lambda[0] * theta[n];
        for r in 1..n {
            total += (self.lambda[r] - self.lambda[r - 1]) * theta[n - r];
        }
        Ok(total)
    }

    fn check(&self, residuals: &[f64]) -> Result<()> {
        if residuals.len() != self.lambda.len() {
            return Err(invalid(format!(
                "{} residuals for a criterion of length {}",
                residuals.len(),
                self.lambda.len()
            )));
        }
        if residuals.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(invalid("residuals must be finite and nonnegative"));
        }
        Ok(())
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
