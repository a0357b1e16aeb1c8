//! Specification on full shifts: gluing orbit segments with gaps, the
//! Moran-style sets `S_k`, `C_k`, `T_k` at toy sizes, the uniform measures
//! `eta_k` on them, and the entropy-distribution lower bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{m_count, uniform_shape, CountOptions, LevelWindow, SeparatedSet, WordIndex};
use crate::dynamics::{letter_at, Letter, Point, Potential, System, TailConvention};
use crate::error::{Error, Result};
use crate::measures::FiniteMeasure;
use crate::oracles::{dp_count_table, DEFAULT_DP_BUDGET};

/// Default cap on the number of glued points in one level.
pub const DEFAULT_TUPLE_CAP: u128 = 1 << 21;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GluedOrbit {
    pub segments: Vec<(Point, usize)>,
    pub gap: usize,
    pub glued: Point,
    pub shadow_eps: f64,
    /// Start of each segment's window in the glued orbit.
    pub offsets: Vec<usize>,
    /// `d_{len_j}(f^{a_j} glued, segment_j)` per segment.
    pub shadow_distances: Vec<f64>,
}

impl GluedOrbit {
    /// `sum len_j + gap * (#segments - 1)`.
    pub fn total_length(&self) -> usize {
        self.segments.iter().map(|s| s.1).sum::<usize>() + self.gap * (self.segments.len() - 1)
    }
}

/// Least `m` with `2^{-m} diam < eps / 2`, where `diam` is the letter
/// diameter: agreement on `m` further symbols then keeps every shadow
/// window below `eps / 2`. Scales of at least `2 diam` need no gap.
pub fn gap_for(sys: &System, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if !sys.is_grid() {
        return Err(Error::domain("gap_for is realized on grid full shifts only"));
    }
    let diam = sys.letter_diameter();
    if eps >= 2.0 * diam {
        return Ok(0);
    }
    let mut m = 0usize;
    while diam * 0.5f64.powi(m as i32) >= eps / 2.0 {
        m += 1;
    }
    Ok(m)
}

/// Concatenate segments. Each gap is filled with the segment's own
/// continuation, so the glued orbit agrees with segment `j` on
/// `len_j + gap` symbols; the last segment keeps its stored word and tail.
fn glue_words(segments: &[(&Point, usize)], gap: usize) -> (Vec<Letter>, Vec<usize>) {
    let (last, last_len) = segments[segments.len() - 1];
    let total: usize = segments[..segments.len() - 1].iter().map(|s| s.1 + gap).sum::<usize>()
        + last.depth().max(last_len);
    let mut word = Vec::with_capacity(total);
    let mut offsets = Vec::with_capacity(segments.len());
    for &(x, len) in &segments[..segments.len() - 1] {
        offsets.push(word.len());
        word.extend((0..len + gap).map(|i| letter_at(x.word(), x.tail(), i)));
    }
    offsets.push(word.len());
    word.extend((0..last.depth().max(last_len)).map(|i| letter_at(last.word(), last.tail(), i)));
    (word, offsets)
}

fn shadow_distances(sys: &System, glued: &[Letter], tail: TailConvention, segments: &[(&Point, usize)], offsets: &[usize]) -> Vec<f64> {
    segments
        .iter()
        .zip(offsets)
        .map(|(&(x, len), &a)| sys.dyn_distance_words(&glued[a..], tail, x.word(), x.tail(), len))
        .collect()
}

/// Glue `segments` with `gap` symbols between consecutive windows and verify
/// every shadow distance is below `eps` by direct evaluation.
pub fn glue(sys: &System, segments: &[(Point, usize)], gap: usize, eps: f64) -> Result<GluedOrbit> {
    if segments.is_empty() {
        return Err(Error::domain("nothing to glue"));
    }
    if segments.iter().any(|s| s.1 == 0) {
        return Err(Error::domain("segment lengths must be positive"));
    }
    for (x, _) in segments {
        sys.check_point(x)?;
    }
    let needed = gap_for(sys, eps)?;
    if segments.len() > 1 && gap < needed {
        return Err(Error::Contract(format!("gap {gap} is below gap_for(eps = {eps}) = {needed}")));
    }
    let refs: Vec<(&Point, usize)> = segments.iter().map(|(x, l)| (x, *l)).collect();
    let (word, offsets) = glue_words(&refs, gap);
    let tail = segments[segments.len() - 1].0.tail();
    let distances = shadow_distances(sys, &word, tail, &refs, &offsets);
    if let Some((j, d)) = distances.iter().enumerate().find(|(_, &d)| !(d < eps)) {
        return Err(Error::Contract(format!("segment {j} is shadowed at distance {d} >= {eps}")));
    }
    Ok(GluedOrbit {
        segments: segments.to_vec(),
        gap,
        glued: Point::new(word, tail)?,
        shadow_eps: eps,
        offsets,
        shadow_distances: distances,
    })
}

/// A maximal `(n, eps)`-separated subset of the level window
/// `|A_n - alpha| < delta` (one ergodic component, so a single window).
pub fn build_sk(sys: &System, phi: &Potential, alpha: f64, delta: f64, n: usize, eps: f64, opts: &CountOptions) -> Result<SeparatedSet> {
    let lw = LevelWindow::new(phi.clone(), alpha, delta, n)?;
    let set = m_count(sys, &lw, eps, opts)?;
    if set.is_empty() {
        let nearest = dp_count_table(phi, n, DEFAULT_DP_BUDGET)
            .map(|t| t.nearest_average(alpha))
            .unwrap_or_else(|_| alpha.clamp(phi.min_value(), phi.max_value()));
        return Err(Error::EmptyLevel { alpha, nearest });
    }
    Ok(set)
}

/// One stage of the construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranLevel {
    pub k: usize,
    #[serde(skip)]
    pub s_k: SeparatedSet,
    pub c_k: Vec<Point>,
    pub t_k: Vec<Point>,
    /// Index of each `T_k` point's parent in `T_{k-1}`.
    pub parents: Vec<usize>,
    pub t_len: usize,
    pub c_len: usize,
    pub n_k: usize,
    pub m_k: usize,
    pub r_k: f64,
    pub big_n: usize,
    /// `[R_k N_k]`, the number of `S_k` blocks in a `C_k` point.
    pub blocks: usize,
    /// Gap symbols inside a `T_k` point's first `t_len` symbols.
    pub gap_symbols: usize,
    /// Every `S_j`-block window in a `T_k` point, all stages: (offset, length).
    pub block_offsets: Vec<(usize, usize)>,
    pub max_shadow: f64,
}

fn tuple_digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for d in digits.iter_mut().rev() {
        *d = index % base;
        index /= base;
    }
    digits
}

/// Glue every `[R_k N_k]`-tuple of `S_k` points with gap `m_k` into `C_k`
/// (lexicographic tuple order), then every `(T_{k-1}, C_k)` pair into `T_k`.
pub fn build_ck_tk(
    sys: &System,
    s_k: &SeparatedSet,
    r_k: f64,
    big_n: usize,
    m_k: usize,
    prev: Option<&MoranLevel>,
    cap: u128,
) -> Result<MoranLevel> {
    if !(r_k > 0.0 && r_k < 1.0) {
        return Err(Error::domain("R_k must lie in (0, 1)"));
    }
    if s_k.is_empty() {
        return Err(Error::domain("S_k is empty"));
    }
    let blocks = (r_k * big_n as f64).floor() as usize;
    if blocks == 0 {
        return Err(Error::domain("[R_k N_k] must be at least 1"));
    }
    let eps = s_k.eps;
    let n = s_k.n;
    let k = prev.map_or(1, |p| p.k + 1);
    let needed = gap_for(sys, eps / 2f64.powi(k as i32))?;
    if m_k < needed {
        return Err(Error::Contract(format!("gap m_{k} = {m_k} is below gap_for(eps / 2^{k}) = {needed}")));
    }
    let s = s_k.count() as u128;
    let c_count = s.checked_pow(blocks as u32).filter(|&c| c <= cap);
    let t_count = c_count.and_then(|c| c.checked_mul(prev.map_or(1, |p| p.t_k.len() as u128)));
    let t_count = match t_count {
        Some(t) if t <= cap => t as usize,
        _ => {
            let required = s.saturating_pow(blocks as u32).saturating_mul(prev.map_or(1, |p| p.t_k.len() as u128));
            return Err(Error::budget("Moran level points", required, cap));
        }
    };
    let c_count = c_count.expect("bounded by t_count") as usize;

    let points = &s_k.points;
    let glued: Vec<(Vec<Letter>, f64)> = (0..c_count)
        .into_par_iter()
        .map(|i| {
            let segs: Vec<(&Point, usize)> = tuple_digits(i, points.len(), blocks).into_iter().map(|d| (&points[d], n)).collect();
            let (word, offsets) = glue_words(&segs, m_k);
            let tail = segs[segs.len() - 1].0.tail();
            let worst = shadow_distances(sys, &word, tail, &segs, &offsets).into_iter().fold(0.0, f64::max);
            (word, worst)
        })
        .collect();
    let tail = points[0].tail();
    let mut max_shadow = glued.iter().map(|g| g.1).fold(0.0, f64::max);
    if !(max_shadow < eps) {
        return Err(Error::Contract(format!("C_{k} shadow distance {max_shadow} >= {eps}")));
    }
    let c_k: Vec<Point> = glued
        .into_iter()
        .map(|(w, _)| Point::new(w, tail))
        .collect::<Result<_>>()?;
    let c_len = blocks * n + (blocks - 1) * m_k;
    let c_offsets: Vec<usize> = (0..blocks).map(|j| j * (n + m_k)).collect();

    let level = match prev {
        None => MoranLevel {
            k,
            s_k: s_k.clone(),
            t_k: c_k.clone(),
            parents: vec![0; c_k.len()],
            c_k,
            t_len: c_len,
            c_len,
            n_k: n,
            m_k,
            r_k,
            big_n,
            blocks,
            gap_symbols: (blocks - 1) * m_k,
            block_offsets: c_offsets.iter().map(|&a| (a, n)).collect(),
            max_shadow,
        },
        Some(p) => {
            let t_k: Vec<(Vec<Letter>, f64)> = (0..t_count)
                .into_par_iter()
                .map(|i| {
                    let (parent, child) = (&p.t_k[i / c_count], &c_k[i % c_count]);
                    let segs = [(parent, p.t_len), (child, c_len)];
                    let (word, offsets) = glue_words(&segs, m_k);
                    let worst = shadow_distances(sys, &word, tail, &segs, &offsets).into_iter().fold(0.0, f64::max);
                    (word, worst)
                })
                .collect();
            max_shadow = t_k.iter().map(|g| g.1).fold(max_shadow, f64::max);
            if !(max_shadow < eps) {
                return Err(Error::Contract(format!("T_{k} shadow distance {max_shadow} >= {eps}")));
            }
            let shift = p.t_len + m_k;
            let mut block_offsets = p.block_offsets.clone();
            block_offsets.extend(c_offsets.iter().map(|&a| (shift + a, n)));
            MoranLevel {
                k,
                s_k: s_k.clone(),
                t_k: t_k
                    .into_iter()
                    .map(|(w, _)| Point::new(w, tail))
                    .collect::<Result<_>>()?,
                parents: (0..t_count).map(|i| i / c_count).collect(),
                c_k,
                t_len: p.t_len + m_k + c_len,
                c_len,
                n_k: n,
                m_k,
                r_k,
                big_n,
                blocks,
                gap_symbols: p.gap_symbols + m_k + (blocks - 1) * m_k,
                block_offsets,
                max_shadow,
            }
        }
    };
    Ok(level)
}

/// Outcome of the exhaustive invariant checks on one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranCheck {
    pub k: usize,
    pub c_count: usize,
    pub t_count: usize,
    pub c_cardinality: bool,
    pub t_cardinality: bool,
    /// All `T_k` points pairwise `d_{t_k} > eps`.
    pub separated: bool,
    /// Largest `d_{t_{k-1}}(parent, child)`, against `eps / 2^k`.
    pub max_nesting: Option<f64>,
    pub nested: bool,
    /// Largest `|A_{n_j}(f^a x) - alpha|` over all block windows.
    pub max_block_deviation: f64,
    pub block_bound: f64,
    /// Largest `|A_{t_k}(x) - alpha|`.
    pub max_total_deviation: f64,
    pub total_bound: f64,
    pub birkhoff: bool,
}

impl MoranCheck {
    pub fn passed(&self) -> bool {
        self.c_cardinality && self.t_cardinality && self.separated && self.nested && self.birkhoff
    }
}

/// Check cardinalities, pairwise separation, parent-ball nesting and
/// Birkhoff control exhaustively. `deltas` holds `delta_j` for stages `1..=k`.
pub fn check_level(sys: &System, level: &MoranLevel, prev: Option<&MoranLevel>, phi: &Potential, alpha: f64, deltas: &[f64]) -> Result<MoranCheck> {
    if deltas.len() < level.k {
        return Err(Error::domain("one delta per stage is required"));
    }
    let eps = level.s_k.eps;
    let k = level.k;
    let c_expected = (level.s_k.count() as u128).pow(level.blocks as u32);
    let t_expected = c_expected * prev.map_or(1, |p| p.t_k.len() as u128);

    let separated = match uniform_shape(&level.t_k) {
        Some((depth, tail)) => {
            let mut index = WordIndex::new(sys, level.t_len, depth, tail);
            level.t_k.iter().all(|x| {
                let clash = index.any_within(x.word(), eps);
                index.insert(x.word(), 1.0);
                !clash
            })
        }
        None => SeparatedSet {
            points: level.t_k.clone(),
            n: level.t_len,
            eps,
            certificate: level.s_k.certificate,
        }
        .verify_separated(sys),
    };

    let radius = eps / 2f64.powi(k as i32);
    let max_nesting = prev.map(|p| {
        level
            .t_k
            .par_iter()
            .zip(&level.parents)
            .map(|(x, &i)| {
                let parent = &p.t_k[i];
                sys.dyn_distance_words(parent.word(), parent.tail(), x.word(), x.tail(), p.t_len)
            })
            .reduce(|| 0.0, f64::max)
    });
    let nested = max_nesting.map_or(true, |d| d < radius);

    let var = phi.variation(sys, radius)?;
    let delta_max = deltas[..k].iter().copied().fold(0.0, f64::max);
    let spread = (phi.max_value() - alpha).abs().max((phi.min_value() - alpha).abs());
    let r = phi.depth();
    let needed = level.t_len + r - 1;
    if let Some(x) = level.t_k.iter().find(|x| x.depth() < needed) {
        return Err(Error::Depth {
            needed,
            have: x.depth(),
        });
    }
    let (max_block, max_total) = level
        .t_k
        .par_iter()
        .map(|x| {
            let w = x.word();
            let block = level
                .block_offsets
                .iter()
                .map(|&(a, n)| {
                    let s: f64 = (a..a + n).map(|i| phi.eval_word(&w[i..i + r])).sum();
                    (s / n as f64 - alpha).abs()
                })
                .fold(0.0, f64::max);
            let total: f64 = (0..level.t_len).map(|i| phi.eval_word(&w[i..i + r])).sum();
            (block, (total / level.t_len as f64 - alpha).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let block_bound = delta_max + var;
    let total_bound = block_bound + level.gap_symbols as f64 * spread / level.t_len as f64;
    let slack = 1e-12;
    Ok(MoranCheck {
        k,
        c_count: level.c_k.len(),
        t_count: level.t_k.len(),
        c_cardinality: level.c_k.len() as u128 == c_expected,
        t_cardinality: level.t_k.len() as u128 == t_expected,
        separated,
        max_nesting,
        nested,
        max_block_deviation: max_block,
        block_bound,
        max_total_deviation: max_total,
        total_bound,
        birkhoff: max_block <= block_bound + slack && max_total <= total_bound + slack,
    })
}

/// Uniform atoms on `T_k`.
pub fn eta_measure(sys: &System, t_k: &[Point]) -> Result<FiniteMeasure> {
    if t_k.is_empty() {
        return Err(Error::domain("T_k is empty"));
    }
    Ok(FiniteMeasure::uniform_atoms(t_k, sys.alphabet_size(), None)?.with_label(format!("eta({} atoms)", t_k.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdpBound {
    /// `min` over sampled balls of `-(1/n) log eta(B_n(x, radius))`.
    pub s_star: f64,
    pub n: usize,
    pub radius: f64,
    pub balls: usize,
    /// Balls of zero mass, which carry no constraint.
    pub skipped: usize,
    pub max_mass: f64,
    /// Largest number of atoms in one ball, for uniform atoms.
    pub max_atoms: usize,
    pub degenerate: bool,
}

/// Entropy-distribution lower bound at scale `radius` from the open
/// `d_n`-balls around the sample points.
pub fn edp_lower_bound(sys: &System, eta: &FiniteMeasure, sample: &[Point], n: usize, radius: f64) -> Result<EdpBound> {
    let atoms = eta
        .atoms()
        .ok_or_else(|| Error::domain("the distribution bound needs an atomic measure"))?;
    if sample.is_empty() {
        return Err(Error::domain("empty ball sample"));
    }
    if n == 0 || !(radius > 0.0) {
        return Err(Error::domain("n must be positive and the radius positive"));
    }
    let points: Vec<Point> = atoms.iter().map(|a| a.0.clone()).collect();
    for x in points.iter().chain(sample) {
        sys.check_point(x)?;
        if x.depth() < n {
            return Err(Error::Depth { needed: n, have: x.depth() });
        }
    }
    let masses = ball_masses(sys, atoms, &points, sample, n, radius);
    let min_atom = atoms.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    let charged: Vec<f64> = masses.iter().copied().filter(|&m| m > 0.0).collect();
    if charged.is_empty() {
        return Err(Error::domain("no sampled ball meets the support of eta"));
    }
    let max_mass = charged.iter().copied().fold(0.0, f64::max);
    let degenerate = max_mass >= 1.0 - 1e-12;
    let s_star = if degenerate { 0.0 } else { (-max_mass.ln() / n as f64).max(0.0) };
    Ok(EdpBound {
        s_star,
        n,
        radius,
        balls: charged.len(),
        skipped: masses.len() - charged.len(),
        max_mass,
        max_atoms: (max_mass / min_atom + 1e-9).floor() as usize,
        degenerate,
    })
}

/// `eta(B_n(x, radius))` for open balls around each sample point.
pub fn ball_masses_for(sys: &System, eta: &FiniteMeasure, sample: &[Point], n: usize, radius: f64) -> Result<Vec<f64>> {
    let atoms = eta
        .atoms()
        .ok_or_else(|| Error::domain("ball masses need an atomic measure"))?;
    let points: Vec<Point> = atoms.iter().map(|a| a.0.clone()).collect();
    for x in points.iter().chain(sample) {
        sys.check_point(x)?;
        if x.depth() < n {
            return Err(Error::Depth { needed: n, have: x.depth() });
        }
    }
    Ok(ball_masses(sys, atoms, &points, sample, n, radius))
}

fn ball_masses(sys: &System, atoms: &[(Point, f64)], points: &[Point], sample: &[Point], n: usize, radius: f64) -> Vec<f64> {
    let shape = uniform_shape(points).filter(|s| uniform_shape(sample) == Some(*s));
    match shape {
        Some((depth, tail)) => {
            let mut index = WordIndex::new(sys, n, depth, tail);
            for (x, w) in atoms {
                index.insert(x.word(), *w);
            }
            sample.iter().map(|x| index.mass_within_open(x.word(), radius)).collect()
        }
        None => sample
            .par_iter()
            .map(|x| {
                atoms
                    .iter()
                    .filter(|(y, _)| sys.dyn_distance_words(x.word(), x.tail(), y.word(), y.tail(), n) < radius)
                    .map(|a| a.1)
                    .sum()
            })
            .collect(),
    }
}
