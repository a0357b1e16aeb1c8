//! From counts to rates: entropy at scale, metric mean dimension, the
//! level-set spectrum `Lambda_phi(alpha, eps)` and its mean-dimension ratio,
//! and the critical exponent of uniform-length covers of a level set.
//!
//! All logarithms are natural. Limits in `n` are read off the largest half of
//! the `n` schedule (the "tail").

use serde::Serialize;

use crate::counting::{count_cell, resolve_backend, CountOptions, CountSample, LevelWindow};
use crate::dynamics::{Potential, System};
use crate::error::{Error, Result};
use crate::oracles::{dp_count_table, DEFAULT_DP_BUDGET};

pub const DEFAULT_DELTA_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SlopeFit,
    TailMax,
    TailMin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub value: f64,
    pub method: Method,
    pub n_schedule: Vec<usize>,
    /// Max deviation of the tail rates from `value`.
    pub residual: f64,
    /// Some count was only a lower bound.
    pub lower_flag: bool,
    pub flags: Vec<String>,
    /// `(1/n) log count` per schedule entry; `None` for empty cells.
    pub rates: Vec<Option<f64>>,
    /// Tail-max of the rates, kept as a cross-check for slope fits.
    pub tail_max: Option<f64>,
    /// Rate of certified upper bounds, when the counts came with them.
    pub upper: Option<f64>,
    /// Certificate of the counts behind the estimate.
    pub certificate: String,
}

impl RateEstimate {
    fn constant(value: f64, n_schedule: &[usize], method: Method, flag: &str) -> Self {
        RateEstimate {
            value,
            method,
            n_schedule: n_schedule.to_vec(),
            residual: 0.0,
            lower_flag: false,
            flags: vec![flag.to_string()],
            rates: n_schedule.iter().map(|_| Some(value)).collect(),
            tail_max: Some(value),
            upper: None,
            certificate: "none".into(),
        }
    }
}

fn check_schedule(n_schedule: &[usize]) -> Result<()> {
    if n_schedule.is_empty() || n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n schedule must be nonempty, positive and increasing"));
    }
    Ok(())
}

/// Indices of the largest half of the schedule (at least one entry).
fn tail_indices(len: usize) -> std::ops::Range<usize> {
    len / 2..len
}

/// Least-squares slope of `y` against `x`.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn rate_of(log: f64, n: usize) -> Option<f64> {
    (log > f64::NEG_INFINITY).then(|| log / n as f64)
}

/// Estimate from a table of counts.
///
/// `SlopeFit` regresses `log count` on `n` over the tail, which removes a
/// constant multiplicative factor in the counts; the tail rates give the
/// residual. `TailMax`/`TailMin` are the limsup/liminf proxies, with an
/// optional additive log correction per cell.
pub fn estimate_rate(samples: &[CountSample], method: Method, correction: &dyn Fn(usize) -> f64) -> RateEstimate {
    let ns: Vec<usize> = samples.iter().map(|s| s.n).collect();
    let rates: Vec<Option<f64>> = samples
        .iter()
        .map(|s| rate_of(s.log_count + correction(s.n), s.n))
        .collect();
    let tail: Vec<usize> = tail_indices(samples.len())
        .filter(|&i| rates[i].is_some())
        .collect();
    let mut flags = Vec::new();
    if tail.len() < tail_indices(samples.len()).len() {
        flags.push("empty-cells-skipped".to_string());
    }
    let tail_rates: Vec<f64> = tail.iter().filter_map(|&i| rates[i]).collect();
    let tail_max = tail_rates.iter().copied().reduce(f64::max);
    let tail_min = tail_rates.iter().copied().reduce(f64::min);
    let (mut value, mut used) = match method {
        Method::TailMax => (tail_max, Method::TailMax),
        Method::TailMin => (tail_min, Method::TailMin),
        Method::SlopeFit => {
            let pts: Vec<(f64, f64)> = tail
                .iter()
                .map(|&i| (samples[i].n as f64, samples[i].log_count))
                .collect();
            match slope(&pts) {
                Some(v) => (Some(v), Method::SlopeFit),
                None => {
                    flags.push("slope-fit-underdetermined".to_string());
                    (tail_max, Method::TailMax)
                }
            }
        }
    };
    if value.is_none() {
        flags.push("all-cells-empty".to_string());
        value = Some(0.0);
        used = method;
    }
    let mut value = value.unwrap();
    if value < 0.0 {
        flags.push("clamped-negative".to_string());
        value = 0.0;
    }
    let residual = tail_rates.iter().map(|r| (r - value).abs()).fold(0.0, f64::max);
    let upper = {
        let ups: Vec<f64> = tail
            .iter()
            .filter_map(|&i| samples[i].log_upper.map(|u| u / samples[i].n as f64))
            .collect();
        ups.into_iter().reduce(f64::min)
    };
    RateEstimate {
        value,
        method: used,
        n_schedule: ns,
        residual,
        lower_flag: samples.iter().any(|s| s.lower_only),
        flags,
        rates,
        tail_max,
        upper,
        certificate: samples
            .last()
            .map_or("none", |s| s.certificate.as_str())
            .to_string(),
    }
}

fn collect_samples(
    sys: &System,
    eps: f64,
    window: Option<&LevelWindow>,
    n_schedule: &[usize],
    opts: &CountOptions,
) -> Result<Vec<CountSample>> {
    let n_max = *n_schedule.last().expect("nonempty schedule");
    let w_max = window.map(|w| w.at(n_max)).transpose()?;
    let opts = &resolve_backend(sys, n_max, eps, w_max.as_ref(), opts);
    let mut out: Vec<CountSample> = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let w = window.map(|w| w.at(n)).transpose()?;
        match count_cell(sys, n, eps, w.as_ref(), opts) {
            Ok(s) => out.push(s),
            Err(Error::Budget { what, required, cap }) => {
                let partial: Vec<String> = out
                    .iter()
                    .map(|s| format!("n={}:{:.4}", s.n, s.log_count / s.n as f64))
                    .collect();
                return Err(Error::Budget {
                    what: format!("{what} at n={n} (partial rates {})", partial.join(" ")),
                    required,
                    cap,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `h(f, eps)` from maximal separated counts.
pub fn entropy_at_scale(sys: &System, eps: f64, n_schedule: &[usize], method: Method, opts: &CountOptions) -> Result<RateEstimate> {
    entropy_with_counts(sys, eps, n_schedule, method, opts).map(|r| r.0)
}

/// `entropy_at_scale` together with the counts behind it (none when `eps`
/// is at least the diameter).
pub fn entropy_with_counts(
    sys: &System,
    eps: f64,
    n_schedule: &[usize],
    method: Method,
    opts: &CountOptions,
) -> Result<(RateEstimate, Vec<CountSample>)> {
    check_schedule(n_schedule)?;
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if eps >= sys.diameter() {
        return Ok((RateEstimate::constant(0.0, n_schedule, method, "eps-above-diameter"), Vec::new()));
    }
    let samples = collect_samples(sys, eps, None, n_schedule, opts)?;
    Ok((estimate_rate(&samples, method, &|_| 0.0), samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub m: usize,
    pub eps: f64,
    pub rate: f64,
    pub residual: f64,
    pub ratio: f64,
    pub certificate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdimEstimate {
    pub rows: Vec<ScaleRow>,
    pub estimate: RateEstimate,
}

/// The grid family `m_j = 2^j + 1`, `eps_j = g_j / divisor` for `j` in `js`.
pub fn coupled_grid_schedule(js: &[u32], divisor: f64) -> Result<Vec<(System, f64)>> {
    js.iter()
        .map(|&j| {
            let sys = System::grid_full_shift((1usize << j) + 1)?;
            let eps = sys.letter_gap() / divisor;
            Ok((sys, eps))
        })
        .collect()
}

fn check_scales(schedule: &[(System, f64)]) -> Result<()> {
    if schedule.len() < 3 {
        return Err(Error::config(0, format!("scale schedule has {} entries, at least 3 needed", schedule.len())));
    }
    if schedule.windows(2).any(|w| w[0].1 <= w[1].1) || schedule.iter().any(|s| !(s.1 > 0.0 && s.1 < 1.0)) {
        return Err(Error::config(0, "scales must lie in (0, 1) and strictly decrease"));
    }
    Ok(())
}

fn ratio_estimate(rows: &[ScaleRow], ns: &[usize], lower: bool) -> RateEstimate {
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let tail = &ratios[tail_indices(ratios.len())];
    let value = tail.iter().copied().fold(0.0, f64::max);
    let mut flags = Vec::new();
    if ratios.windows(2).any(|w| w[1] < w[0]) {
        flags.push("ratio-not-monotone".to_string());
    }
    RateEstimate {
        value,
        method: Method::TailMax,
        n_schedule: ns.to_vec(),
        residual: tail.iter().map(|r| (r - value).abs()).fold(0.0, f64::max),
        lower_flag: lower,
        flags,
        rates: ratios.into_iter().map(Some).collect(),
        tail_max: Some(value),
        upper: None,
        certificate: rows.last().map_or_else(String::new, |r| r.certificate.clone()),
    }
}

/// Upper metric mean dimension: tail-max of `h(f, eps_j) / |log eps_j|`.
pub fn mdim_estimate(schedule: &[(System, f64)], n_schedule: &[usize], opts: &CountOptions) -> Result<MdimEstimate> {
    check_scales(schedule)?;
    let mut rows = Vec::new();
    let mut lower = false;
    for (sys, eps) in schedule {
        let est = entropy_at_scale(sys, *eps, n_schedule, Method::SlopeFit, opts)?;
        lower |= est.lower_flag;
        rows.push(ScaleRow {
            m: sys.alphabet_size(),
            eps: *eps,
            rate: est.value,
            residual: est.residual,
            ratio: est.value / eps.ln().abs(),
            certificate: est.certificate.clone(),
        });
    }
    let estimate = ratio_estimate(&rows, n_schedule, lower);
    Ok(MdimEstimate { rows, estimate })
}

/// Does the window stay strictly inside the range of `phi`?
fn window_interior(phi: &Potential, alpha: f64, delta: f64) -> bool {
    alpha - delta > phi.min_value() && alpha + delta < phi.max_value()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub value: f64,
    pub residual: f64,
    pub counts: Vec<String>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub estimate: RateEstimate,
    pub per_delta: Vec<DeltaRow>,
    pub chosen_delta: f64,
    pub stabilized: bool,
}

/// Per-delta liminf estimate of `(1/n) log M(alpha, delta, n, eps)`.
///
/// Interior windows use `(log M_n + 1/2 log n) / n`: constrained counts
/// carry a `n^{-1/2}` prefactor that otherwise biases finite-`n` rates low.
/// A vacuous window reduces to the full-space estimator.
fn lambda_for_delta(
    sys: &System,
    phi: &Potential,
    alpha: f64,
    eps: f64,
    delta: f64,
    n_schedule: &[usize],
    opts: &CountOptions,
) -> Result<(RateEstimate, Vec<CountSample>)> {
    let lw = LevelWindow::new(phi.clone(), alpha, delta, n_schedule[0])?;
    let samples = collect_samples(sys, eps, Some(&lw), n_schedule, opts)?;
    let est = if lw.is_vacuous() {
        let mut e = estimate_rate(&samples, Method::SlopeFit, &|_| 0.0);
        e.flags.push("vacuous-window".into());
        e
    } else if window_interior(phi, alpha, delta) {
        estimate_rate(&samples, Method::TailMin, &|n| 0.5 * (n as f64).ln())
    } else {
        estimate_rate(&samples, Method::TailMin, &|_| 0.0)
    };
    Ok((est, samples))
}

fn empty_level(phi: &Potential, alpha: f64, n: usize) -> Error {
    let nearest = if phi.depth() == 1 {
        dp_count_table(phi, n, DEFAULT_DP_BUDGET)
            .map(|t| t.nearest_average(alpha))
            .unwrap_or(f64::NAN)
    } else {
        alpha.clamp(phi.min_value(), phi.max_value())
    };
    Error::EmptyLevel { alpha, nearest }
}

/// `Lambda_phi(alpha, eps)` with the `delta -> 0` limit replaced by
/// stabilization: the value at the smallest `delta` whose estimate moved by
/// less than `delta_tol` from the previous one.
#[allow(clippy::too_many_arguments)]
pub fn lambda_at_scale(
    sys: &System,
    phi: &Potential,
    alpha: f64,
    eps: f64,
    delta_schedule: &[f64],
    n_schedule: &[usize],
    delta_tol: f64,
    opts: &CountOptions,
) -> Result<LambdaEstimate> {
    check_schedule(n_schedule)?;
    phi.check_system(sys)?;
    if delta_schedule.is_empty() || delta_schedule.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::domain("delta schedule must be nonempty and strictly decreasing"));
    }
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for (i, &delta) in delta_schedule.iter().enumerate() {
        let (est, samples) = lambda_for_delta(sys, phi, alpha, eps, delta, n_schedule, opts)?;
        let all_empty = samples.iter().all(|s| s.is_empty());
        if all_empty && i + 1 == delta_schedule.len() {
            return Err(empty_level(phi, alpha, *n_schedule.last().unwrap()));
        }
        rows.push(DeltaRow {
            delta,
            value: est.value,
            residual: est.residual,
            counts: samples.iter().map(|s| s.count.clone()).collect(),
            flags: est.flags.clone(),
        });
        estimates.push(est);
    }
    let stable = (1..rows.len())
        .filter(|&i| (rows[i].value - rows[i - 1].value).abs() < delta_tol)
        .last();
    let (pick, stabilized) = match stable {
        Some(i) => (i, true),
        None => (rows.len() - 1, rows.len() == 1),
    };
    let mut estimate = estimates.swap_remove(pick);
    if !stabilized {
        estimate.flags.push("delta-not-stabilized".into());
    }
    Ok(LambdaEstimate {
        estimate,
        chosen_delta: rows[pick].delta,
        per_delta: rows,
        stabilized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaMdimEstimate {
    pub rows: Vec<ScaleRow>,
    pub estimate: RateEstimate,
}

/// Tail-max of `Lambda(alpha, eps_j) / |log eps_j|` over a coupled schedule,
/// with the first-coordinate potential on each system.
pub fn lambda_mdim(
    schedule: &[(System, f64)],
    alpha: f64,
    delta_schedule: &[f64],
    n_schedule: &[usize],
    delta_tol: f64,
    opts: &CountOptions,
) -> Result<LambdaMdimEstimate> {
    check_scales(schedule)?;
    let mut rows = Vec::new();
    let mut lower = false;
    for (sys, eps) in schedule {
        let phi = Potential::first_coordinate(sys);
        let est = lambda_at_scale(sys, &phi, alpha, *eps, delta_schedule, n_schedule, delta_tol, opts)?;
        lower |= est.estimate.lower_flag;
        rows.push(ScaleRow {
            m: sys.alphabet_size(),
            eps: *eps,
            rate: est.estimate.value,
            residual: est.estimate.residual,
            ratio: est.estimate.value / eps.ln().abs(),
            certificate: est.estimate.certificate.clone(),
        });
    }
    let estimate = ratio_estimate(&rows, n_schedule, lower);
    Ok(LambdaMdimEstimate { rows, estimate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenRow {
    pub s: f64,
    /// `log(N_n e^{-ns})` per tail length.
    pub log_cover_values: Vec<f64>,
    pub vanishing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenEstimate {
    pub estimate: RateEstimate,
    pub table: Vec<BowenRow>,
}

/// Critical exponent of uniform-length covers of `G(alpha, delta, k_start)`.
///
/// The cover of length `n >= k_start` uses `N(alpha, delta, n, eps)` balls,
/// since `G` sits inside `P(alpha, delta, n)` for those `n`. The cover value
/// `N_n e^{-ns}` (with the same `1/2 log n` prefactor correction as the
/// spectrum for interior windows) vanishes at `s` when some tail length
/// pushes it below 1; the critical `s` is bisected between the last
/// divergent and the first vanishing grid point. Uniform-length covers are a
/// subfamily, so the result bounds the exponent from above.
#[allow(clippy::too_many_arguments)]
pub fn bowen_level_exponent(
    sys: &System,
    phi: &Potential,
    alpha: f64,
    delta: f64,
    k_start: usize,
    eps: f64,
    n_schedule: &[usize],
    s_grid: &[f64],
    opts: &CountOptions,
) -> Result<BowenEstimate> {
    check_schedule(n_schedule)?;
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("s grid must be nonempty and increasing"));
    }
    let ns: Vec<usize> = n_schedule.iter().copied().filter(|&n| n >= k_start).collect();
    if ns.is_empty() {
        return Err(Error::domain("no schedule entry reaches k_start"));
    }
    let lw = LevelWindow::new(phi.clone(), alpha, delta, ns[0])?;
    let samples = collect_samples(sys, eps, Some(&lw), &ns, opts)?;
    if samples.iter().all(|s| s.is_empty()) {
        return Err(empty_level(phi, alpha, *ns.last().unwrap()));
    }
    let interior = !lw.is_vacuous() && window_interior(phi, alpha, delta);
    let corr = |n: usize| if interior { 0.5 * (n as f64).ln() } else { 0.0 };
    let tail: Vec<&CountSample> = samples[tail_indices(samples.len())]
        .iter()
        .filter(|s| !s.is_empty())
        .collect();
    let log_values = |s: f64| -> Vec<f64> {
        tail.iter()
            .map(|c| c.log_count + corr(c.n) - c.n as f64 * s)
            .collect()
    };
    let vanishing = |s: f64| log_values(s).iter().any(|&v| v < 0.0);

    let table: Vec<BowenRow> = s_grid
        .iter()
        .map(|&s| BowenRow {
            s,
            log_cover_values: log_values(s),
            vanishing: vanishing(s),
        })
        .collect();
    let first_vanishing = table.iter().position(|r| r.vanishing);
    if let Some(i) = first_vanishing {
        if table[i..].iter().any(|r| !r.vanishing) {
            return Err(Error::Inconclusive(format!(
                "cover trend not monotone in s: {:?}",
                table.iter().map(|r| (r.s, r.vanishing)).collect::<Vec<_>>()
            )));
        }
    }
    let (value, flags) = match first_vanishing {
        None => {
            return Err(Error::Inconclusive(format!(
                "covers diverge on the whole s grid (max s = {})",
                s_grid[s_grid.len() - 1]
            )))
        }
        Some(0) => (s_grid[0], vec!["critical-at-or-below-grid".to_string()]),
        Some(i) => {
            let (mut lo, mut hi) = (s_grid[i - 1], s_grid[i]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if vanishing(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (0.5 * (lo + hi), Vec::new())
        }
    };
    let mut estimate = estimate_rate(&samples, Method::TailMin, &corr);
    estimate.value = value.max(0.0);
    estimate.residual = tail
        .iter()
        .map(|c| ((c.log_count + corr(c.n)) / c.n as f64 - value).abs())
        .fold(0.0, f64::max);
    estimate.flags.extend(flags);
    estimate.flags.push("upper-bound-uniform-covers".into());
    Ok(BowenEstimate { estimate, table })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub eps: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub h: f64,
    pub ratio: f64,
    pub residual: f64,
    pub delta: f64,
    pub flags: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
    pub delta_schedule: Vec<f64>,
    pub n_schedule: Vec<usize>,
}

/// `Lambda` over an `alpha` grid at each scale, with `h(f, eps)` alongside.
#[allow(clippy::too_many_arguments)]
pub fn spectrum_table(
    sys: &System,
    phi: &Potential,
    eps_schedule: &[f64],
    alphas: &[f64],
    delta_schedule: &[f64],
    n_schedule: &[usize],
    delta_tol: f64,
    opts: &CountOptions,
) -> Result<SpectrumTable> {
    if eps_schedule.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::domain("eps schedule must strictly decrease"));
    }
    let mut rows = Vec::new();
    for &eps in eps_schedule {
        let h = entropy_at_scale(sys, eps, n_schedule, Method::SlopeFit, opts)?;
        for &alpha in alphas {
            let l = lambda_at_scale(sys, phi, alpha, eps, delta_schedule, n_schedule, delta_tol, opts)?;
            rows.push(SpectrumRow {
                eps,
                alpha,
                lambda: l.estimate.value,
                h: h.value,
                ratio: if eps < 1.0 { l.estimate.value / eps.ln().abs() } else { 0.0 },
                residual: l.estimate.residual,
                delta: l.chosen_delta,
                flags: l.estimate.flags.join(";"),
            });
        }
    }
    Ok(SpectrumTable {
        rows,
        delta_schedule: delta_schedule.to_vec(),
        n_schedule: n_schedule.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::Backend;

    fn grid(m: usize) -> System {
        System::grid_full_shift(m).unwrap()
    }

    fn opts() -> CountOptions {
        CountOptions::default()
    }

    #[test]
    fn entropy_examples() {
        let s2 = grid(2);
        let ns: Vec<usize> = (2..=8).collect();
        let e = entropy_at_scale(&s2, 0.2, &ns, Method::SlopeFit, &opts()).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 0.1 * 2f64.ln(), "{e:?}");
        let e = entropy_at_scale(&s2, 1.5, &ns, Method::SlopeFit, &opts()).unwrap();
        assert_eq!(e.value, 0.0);
        let s4 = grid(4);
        let e = entropy_at_scale(&s4, 0.1, &[2, 3, 4, 5, 6], Method::SlopeFit, &opts()).unwrap();
        assert!((e.value - 4f64.ln()).abs() < 0.15 * 4f64.ln(), "{e:?}");
        assert!(e.upper.unwrap() >= e.value);
    }

    #[test]
    fn tail_max_is_available() {
        let s2 = grid(2);
        let e = entropy_at_scale(&s2, 0.49, &[2, 4, 6, 8], Method::TailMax, &opts()).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e.method, Method::TailMax);
    }

    #[test]
    fn mdim_schedule_rules() {
        let short = coupled_grid_schedule(&[2, 3], 2.5).unwrap();
        assert!(matches!(mdim_estimate(&short, &[2, 3], &opts()), Err(Error::Config { .. })));

        // fixed alphabet: ratio decays as eps shrinks
        let fixed: Vec<(System, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| (grid(2), e)).collect();
        let o = CountOptions {
            backend: Backend::PrefixBracket,
            ..opts()
        };
        let est = mdim_estimate(&fixed, &[4, 6, 8], &o).unwrap();
        assert!(est.rows.windows(2).all(|w| w[1].ratio < w[0].ratio));

        let point: Vec<(System, f64)> = [0.4, 0.2, 0.1].iter().map(|&e| (grid(1), e)).collect();
        let est = mdim_estimate(&point, &[2, 3], &opts()).unwrap();
        assert_eq!(est.estimate.value, 0.0);
    }

    #[test]
    fn lambda_examples() {
        let s2 = grid(2);
        let phi = Potential::first_coordinate(&s2);
        let ns: Vec<usize> = (1..=14).collect();
        let deltas = [0.2, 0.1, 0.05];
        let l = lambda_at_scale(&s2, &phi, 0.5, 0.49, &deltas, &ns, DEFAULT_DELTA_TOL, &opts()).unwrap();
        assert!((l.estimate.value - 2f64.ln()).abs() < 0.05, "{l:?}");
        let l = lambda_at_scale(&s2, &phi, 0.25, 0.49, &deltas, &ns, DEFAULT_DELTA_TOL, &opts()).unwrap();
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((l.estimate.value - h).abs() < 0.07, "{l:?}");

        let c = Potential::constant(&s2, 0.3).unwrap();
        let l = lambda_at_scale(&s2, &c, 0.3, 0.49, &deltas, &ns, DEFAULT_DELTA_TOL, &opts()).unwrap();
        let e = entropy_at_scale(&s2, 0.49, &ns, Method::SlopeFit, &opts()).unwrap();
        assert!((l.estimate.value - e.value).abs() < 1e-12);

        let err = lambda_at_scale(&s2, &phi, 2.0, 0.49, &deltas, &ns, DEFAULT_DELTA_TOL, &opts()).unwrap_err();
        assert!(matches!(err, Error::EmptyLevel { nearest, .. } if nearest == 1.0));
    }

    #[test]
    fn lambda_at_extreme_alpha_is_zero() {
        let s2 = grid(2);
        let phi = Potential::first_coordinate(&s2);
        let ns: Vec<usize> = (1..=12).collect();
        let l = lambda_at_scale(&s2, &phi, 0.0, 0.49, &[0.2, 0.1, 0.05], &ns, DEFAULT_DELTA_TOL, &opts()).unwrap();
        assert!(l.estimate.value.abs() < 1e-12);
    }

    #[test]
    fn bowen_examples() {
        let s2 = grid(2);
        let phi = Potential::first_coordinate(&s2);
        let ns: Vec<usize> = (1..=14).collect();
        let grid_s: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let b = bowen_level_exponent(&s2, &phi, 0.5, 0.1, 1, 0.49, &ns, &grid_s, &opts()).unwrap();
        assert!((b.estimate.value - 2f64.ln()).abs() < 0.08, "{:?}", b.estimate);

        let c = Potential::constant(&s2, 0.0).unwrap();
        let b = bowen_level_exponent(&s2, &c, 0.0, 0.1, 1, 0.49, &ns, &grid_s, &opts()).unwrap();
        let e = entropy_at_scale(&s2, 0.49, &ns, Method::SlopeFit, &opts()).unwrap();
        assert!((b.estimate.value - e.value).abs() < 0.1 * e.value);

        let high: Vec<f64> = vec![2.0, 3.0];
        let b = bowen_level_exponent(&s2, &phi, 0.5, 0.1, 1, 0.49, &ns, &high, &opts()).unwrap();
        assert_eq!(b.estimate.value, 2.0);
        assert!(b.table.iter().all(|r| r.vanishing));
    }
}
