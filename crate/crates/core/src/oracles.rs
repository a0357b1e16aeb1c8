//! Independent ground truth: exact level-window word counts by dynamic
//! programming over exact letter sums, the constrained maximum-entropy
//! (Gibbs) distribution, and the explicit separated grid / interval cover
//! bounds for the weighted shift on `K`.
//!
//! Nothing here calls into the counting or spectra code.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::dynamics::{NuForm, Potential};
use crate::error::{Error, Result};
use crate::exact::{window_contains, Rational};

pub const DEFAULT_DP_BUDGET: u128 = 200_000_000;

/// Natural log of a big integer; `-inf` for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().expect("finite below 2^1000").ln()
    } else {
        let shift = bits - 900;
        (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Histogram of exact Birkhoff sums over all words of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpCountTable {
    pub n: usize,
    /// Common denominator of the potential's values.
    pub den: i128,
    /// Smallest achievable sum numerator; `counts[k]` is for `min_sum + k`.
    pub min_sum: i128,
    pub counts: Vec<BigUint>,
}

impl DpCountTable {
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    /// Number of words with `|average - alpha| < delta`, decided exactly.
    pub fn window_count(&self, alpha: f64, delta: f64) -> Result<BigUint> {
        let a = Rational::from_f64(alpha)?;
        let d = Rational::from_f64(delta)?;
        Ok(self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, c)| {
                !c.is_zero() && window_contains(self.min_sum + *k as i128, self.den, self.n, a, d)
            })
            .map(|(_, c)| c)
            .sum())
    }

    /// Achievable averages with their word counts.
    pub fn histogram(&self) -> impl Iterator<Item = (f64, &BigUint)> + '_ {
        self.counts.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| {
            let sum = self.min_sum + k as i128;
            (sum as f64 / (self.den as f64 * self.n as f64), c)
        })
    }

    /// Achievable average closest to `alpha`.
    pub fn nearest_average(&self, alpha: f64) -> f64 {
        self.histogram()
            .map(|(a, _)| a)
            .min_by(|x, y| (x - alpha).abs().total_cmp(&(y - alpha).abs()))
            .unwrap_or(f64::NAN)
    }
}

/// Exact sum histogram for a depth-1 potential.
pub fn dp_count_table(phi: &Potential, n: usize, budget: u128) -> Result<DpCountTable> {
    if phi.depth() != 1 {
        return Err(Error::domain("the word-count oracle needs a depth-1 potential"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let exact = phi.exact();
    let lo = *exact.nums.iter().min().expect("nonempty alphabet");
    let hi = *exact.nums.iter().max().expect("nonempty alphabet");
    let span = (hi - lo) as u128;
    // distinct letter offsets with multiplicities
    let mut letters: Vec<(usize, u64)> = Vec::new();
    for &v in &exact.nums {
        let off = (v - lo) as usize;
        match letters.iter_mut().find(|(o, _)| *o == off) {
            Some(e) => e.1 += 1,
            None => letters.push((off, 1)),
        }
    }
    let cells = span * n as u128 + 1;
    let work = cells * n as u128 * letters.len() as u128;
    if work > budget {
        return Err(Error::budget("dp word-count work", work, budget));
    }

    let mut counts = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); counts.len() + span as usize];
        for (k, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &(off, mult) in &letters {
                next[k + off] += c * mult;
            }
        }
        counts = next;
    }
    Ok(DpCountTable {
        n,
        den: exact.den,
        min_sum: lo * n as i128,
        counts,
    })
}

/// Exact number of length-`n` words whose `phi`-average lies strictly within
/// `delta` of `alpha`.
pub fn level_count_dp(phi: &Potential, alpha: f64, delta: f64, n: usize, budget: u128) -> Result<BigUint> {
    if !(delta > 0.0) {
        return Err(Error::domain("delta must be positive"));
    }
    dp_count_table(phi, n, budget)?.window_count(alpha, delta)
}

/// Solution of `max H(p)` subject to `sum p_i a_i = alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxEntropy {
    pub p: Vec<f64>,
    pub entropy: f64,
    /// Exponential-family parameter; infinite at a boundary `alpha`.
    pub beta: f64,
}

pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn gibbs(values: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let top = values
        .iter()
        .map(|&a| beta * a)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|&a| (beta * a - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    let mean = p.iter().zip(values).map(|(pi, a)| pi * a).sum();
    (p, mean)
}

pub fn constrained_max_entropy(values: &[f64], alpha: f64) -> Result<MaxEntropy> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("values must be finite and nonempty"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if alpha < lo - tol || alpha > hi + tol {
        return Err(Error::domain(format!(
            "alpha = {alpha} outside [{lo}, {hi}]"
        )));
    }
    let extreme = |target: f64, beta: f64| {
        let hits = values.iter().filter(|&&a| (a - target).abs() <= tol).count();
        let p: Vec<f64> = values
            .iter()
            .map(|&a| if (a - target).abs() <= tol { 1.0 / hits as f64 } else { 0.0 })
            .collect();
        MaxEntropy {
            p,
            entropy: (hits as f64).ln(),
            beta,
        }
    };
    if hi - lo <= tol {
        return Ok(extreme(lo, 0.0));
    }
    if (alpha - hi).abs() <= tol {
        return Ok(extreme(hi, f64::INFINITY));
    }
    if (alpha - lo).abs() <= tol {
        return Ok(extreme(lo, f64::NEG_INFINITY));
    }

    let mean = |b: f64| gibbs(values, b).1;
    let (mut a, mut b) = (-1.0f64, 1.0f64);
    while mean(a) > alpha {
        a *= 2.0;
        if a < -1e300 {
            return Err(Error::Inconclusive("beta bracket diverged".into()));
        }
    }
    while mean(b) < alpha {
        b *= 2.0;
        if b > 1e300 {
            return Err(Error::Inconclusive("beta bracket diverged".into()));
        }
    }
    let mut beta = 0.5 * (a + b);
    for _ in 0..400 {
        beta = 0.5 * (a + b);
        let m = mean(beta);
        if (m - alpha).abs() < 1e-13 || b - a < 1e-15 * beta.abs().max(1.0) {
            break;
        }
        if m < alpha {
            a = beta;
        } else {
            b = beta;
        }
    }
    let (p, m) = gibbs(values, beta);
    if (m - alpha).abs() > 1e-10 {
        return Err(Error::Inconclusive(format!(
            "bisection stalled with mean {m} for alpha {alpha}"
        )));
    }
    Ok(MaxEntropy {
        entropy: shannon(&p),
        p,
        beta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpGibbsRow {
    pub n: usize,
    pub count: String,
    /// `(1/n) log count`, `None` when the window holds no word of length n.
    pub rate: Option<f64>,
    pub h_star: f64,
    pub gap: Option<f64>,
}

/// `(1/n) log` of exact window counts against the Gibbs value `H*(alpha)`.
pub fn dp_rate_vs_gibbs(
    phi: &Potential,
    alpha: f64,
    delta: f64,
    n_schedule: &[usize],
    budget: u128,
) -> Result<Vec<DpGibbsRow>> {
    let h_star = constrained_max_entropy(phi.table(), alpha)?.entropy;
    n_schedule
        .iter()
        .map(|&n| {
            let c = level_count_dp(phi, alpha, delta, n, budget)?;
            let rate = (!c.is_zero()).then(|| ln_big(&c) / n as f64);
            Ok(DpGibbsRow {
                n,
                count: c.to_string(),
                rate,
                h_star,
                gap: rate.map(|r| (r - h_star).abs()),
            })
        })
        .collect()
}

/// Least `ell` with `sum_{k >= ell} nu_k < (eps/2)^p`.
pub fn tail_ell(nu: NuForm, p: f64, eps: f64) -> usize {
    let target = (eps / 2.0).powf(p);
    let mut ell = 1usize;
    while nu.tail_sum(ell) >= target {
        ell += 1;
    }
    ell
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedShiftBounds {
    pub log_lower: f64,
    pub log_upper: f64,
    pub ell: usize,
    /// Grid values per coordinate in the separated set.
    pub grid_points: u64,
    /// `floor(12 M / eps)`; the cover uses `2 * half_width` intervals per coordinate.
    pub half_width: u64,
    pub norm_m: f64,
}

fn floor_guarded(x: f64) -> f64 {
    (x + 1e-9 * x.abs().max(1.0)).floor()
}

/// Logs of the separated-grid cardinality and the interval-cover
/// cardinality for `(K, shift)` in `l^p(nu)` at scale `eps`, time `n`.
pub fn weighted_shift_bounds(nu: NuForm, p: f64, eps: f64, n: usize, ell: usize) -> Result<WeightedShiftBounds> {
    nu.validate()?;
    if !(eps > 0.0) || !(p >= 1.0) || n == 0 {
        return Err(Error::domain("need eps > 0, p >= 1, n >= 1"));
    }
    let target = (eps / 2.0).powf(p);
    if ell == 0 || nu.tail_sum(ell) >= target {
        return Err(Error::domain(format!(
            "tail condition fails for ell = {ell}; the least admissible ell is {}",
            tail_ell(nu, p, eps)
        )));
    }
    let grid_points = floor_guarded(nu.weight(1).powf(1.0 / p) / eps) as u64 + 1;
    let norm_m = nu.total().powf(1.0 / p);
    let half_width = floor_guarded(12.0 * norm_m / eps) as u64;
    Ok(WeightedShiftBounds {
        log_lower: n as f64 * (grid_points as f64).ln(),
        log_upper: (n + ell + 1) as f64 * (2.0 * half_width as f64).ln(),
        ell,
        grid_points,
        half_width,
        norm_m,
    })
}

/// `d_n` in `l^p(nu)` between finitely supported sequences (zero beyond).
fn lp_dn(nu: NuForm, p: f64, x: &[f64], y: &[f64], n: usize, tail_pow: f64) -> f64 {
    let len = x.len().max(y.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..n)
        .map(|j| {
            let s: f64 = (j..len)
                .map(|i| nu.weight(i - j + 1) * (at(x, i) - at(y, i)).abs().powf(p))
                .sum();
            s + tail_pow
        })
        .fold(0.0, f64::max)
        .powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCertificate {
    pub points: usize,
    pub min_separation: f64,
    /// `min_separation - eps`; zero means separation holds only non-strictly.
    pub margin: f64,
}

/// Enumerate the separated grid at time `n` and measure its worst pair.
pub fn certify_weighted_grid(nu: NuForm, p: f64, eps: f64, n: usize) -> Result<GridCertificate> {
    let step = eps / nu.weight(1).powf(1.0 / p);
    let per = floor_guarded(1.0 / step) as usize + 1;
    let total = per.checked_pow(n as u32).filter(|&t| t <= 4096).ok_or_else(|| {
        Error::budget("weighted grid points", (per as u128).saturating_pow(n as u32), 4096)
    })?;
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let v = (idx % per) as f64 * step;
                    idx /= per;
                    v
                })
                .collect()
        })
        .collect();
    let mut min_sep = f64::INFINITY;
    for i in 0..points.len() {
        for k in i + 1..points.len() {
            min_sep = min_sep.min(lp_dn(nu, p, &points[i], &points[k], n, 0.0));
        }
    }
    Ok(GridCertificate {
        points: total,
        min_separation: min_sep,
        margin: min_sep - eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverCertificate {
    /// Closed-form supremum of `d_n` over one cover element.
    pub analytic_diameter: f64,
    /// Largest `d_n` found over enumerated extreme pairs in one element.
    pub enumerated_diameter: f64,
    pub valid: bool,
}

/// Diameter of a cover element `{x_i in I_{k_i}, i <= n + ell}` in `d_n`.
pub fn certify_weighted_cover(nu: NuForm, p: f64, eps: f64, n: usize, ell: usize) -> Result<CoverCertificate> {
    let b = weighted_shift_bounds(nu, p, eps, n, ell)?;
    let len = eps / (6.0 * b.norm_m);
    let fixed = n + ell;
    // coordinates beyond the fixed block can differ by 2
    let tail_from = |j: usize| 2f64.powf(p) * nu.tail_sum(fixed - j + 1);
    let analytic = (0..n)
        .map(|j| {
            let head: f64 = (1..=fixed - j).map(|k| nu.weight(k)).sum::<f64>() * len.powf(p);
            head + tail_from(j)
        })
        .fold(0.0, f64::max)
        .powf(1.0 / p);

    if fixed > 16 {
        return Err(Error::budget("cover corner patterns", 1u128 << fixed.min(127), 1 << 16));
    }
    let mut enumerated = 0.0f64;
    for pattern in 0u32..(1 << fixed) {
        let x: Vec<f64> = (0..fixed)
            .map(|i| if pattern >> i & 1 == 1 { len / 2.0 } else { -len / 2.0 })
            .collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let d = (0..n)
            .map(|j| lp_dn(nu, p, &x[j..], &y[j..], 1, tail_from(j)).powf(p))
            .fold(0.0, f64::max)
            .powf(1.0 / p);
        enumerated = enumerated.max(d);
    }
    Ok(CoverCertificate {
        analytic_diameter: analytic,
        enumerated_diameter: enumerated,
        valid: analytic < eps && enumerated < eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::System;

    fn first_coord(m: usize) -> Potential {
        Potential::first_coordinate(&System::grid_full_shift(m).unwrap())
    }

    #[test]
    fn dp_examples() {
        let phi = first_coord(2);
        let b = DEFAULT_DP_BUDGET;
        assert_eq!(level_count_dp(&phi, 0.5, 0.2, 4, b).unwrap(), BigUint::from(6u32));
        assert_eq!(level_count_dp(&phi, 0.5, 2.0, 4, b).unwrap(), BigUint::from(16u32));
        assert_eq!(level_count_dp(&phi, 1.0, 0.01, 4, b).unwrap(), BigUint::from(1u32));
        assert!(matches!(level_count_dp(&phi, 0.5, 0.2, 4, 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn dp_totals_are_exact() {
        let phi = first_coord(3);
        let t = dp_count_table(&phi, 40, DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(t.total(), BigUint::from(3u32).pow(40));
    }

    #[test]
    fn gibbs_examples() {
        let r = constrained_max_entropy(&[0.0, 1.0], 0.5).unwrap();
        assert!(r.beta.abs() < 1e-9);
        assert!((r.entropy - 2f64.ln()).abs() < 1e-12);
        let r = constrained_max_entropy(&[0.0, 0.5, 1.0], 0.5).unwrap();
        assert!((r.entropy - 3f64.ln()).abs() < 1e-12);
        let r = constrained_max_entropy(&[0.0, 1.0], 0.25).unwrap();
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((r.entropy - h).abs() < 1e-8);
        assert!((r.p[0] - 0.75).abs() < 1e-9);
        assert!(constrained_max_entropy(&[0.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn gibbs_boundary_uses_multiplicity() {
        let r = constrained_max_entropy(&[0.0, 1.0, 1.0], 1.0).unwrap();
        assert!((r.entropy - 2f64.ln()).abs() < 1e-12);
        let r = constrained_max_entropy(&[0.0, 1.0], 0.0).unwrap();
        assert_eq!(r.entropy, 0.0);
    }

    #[test]
    fn dp_against_gibbs() {
        let rows = dp_rate_vs_gibbs(&first_coord(2), 0.5, 0.1, &[16], DEFAULT_DP_BUDGET).unwrap();
        assert!(rows[0].gap.unwrap() < 0.08);
        let rows = dp_rate_vs_gibbs(&first_coord(3), 0.5, 0.05, &[12], DEFAULT_DP_BUDGET).unwrap();
        assert!(rows[0].gap.unwrap() < 0.12);
        let rows = dp_rate_vs_gibbs(&first_coord(2), 1.0, 1e-6, &[8], DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(rows[0].rate, Some(0.0));
        assert_eq!(rows[0].h_star, 0.0);
    }

    #[test]
    fn weighted_bounds_examples() {
        let nu = NuForm::dyadic();
        let ell = tail_ell(nu, 1.0, 0.1);
        let b = weighted_shift_bounds(nu, 1.0, 0.1, 3, ell).unwrap();
        assert_eq!(b.grid_points, 6);
        assert!((b.log_lower - 3.0 * 6f64.ln()).abs() < 1e-12);
        assert!((b.log_upper - (4 + ell) as f64 * 240f64.ln()).abs() < 1e-9);
        let b = weighted_shift_bounds(nu, 1.0, 1.0, 3, tail_ell(nu, 1.0, 1.0)).unwrap();
        assert_eq!(b.log_lower, 0.0);
        assert!(matches!(weighted_shift_bounds(nu, 1.0, 0.1, 3, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn weighted_grid_and_cover_certificates() {
        let nu = NuForm::dyadic();
        let g = certify_weighted_grid(nu, 1.0, 0.2, 2).unwrap();
        assert_eq!(g.points, 9);
        assert!(g.margin.abs() < 1e-12);
        let c = certify_weighted_cover(nu, 1.0, 0.2, 2, tail_ell(nu, 1.0, 0.2)).unwrap();
        assert!(c.valid, "{c:?}");
        assert!(c.enumerated_diameter <= c.analytic_diameter + 1e-12);
    }
}
