//! Separated and spanning sets under `d_n`, and level-window counts.
//!
//! Candidates are all words of length `n + L` (pad-0 tails), `L` the
//! truncation depth for the scale. A greedy scan in lexicographic order keeps
//! a word iff it is `(n, eps)`-separated from everything kept so far; the
//! kept words sit in a trie whose partial window sums are lower bounds for
//! every window of `d_n`, so whole subtrees are discarded as soon as one
//! window already exceeds `eps`.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Letter, Point, Potential, System, TailConvention};
use crate::error::{Error, Result};
use crate::exact::{window_contains, Rational};
use crate::oracles::ln_big;

pub const DEFAULT_CANDIDATE_CAP: u128 = 1 << 23;
pub const DEFAULT_EXACT_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    GreedyMaximal,
    ExactMaximum,
    ExplicitGrid,
    /// Distinct `n`-prefixes (lower) and depth-`n + r` cylinders (upper).
    PrefixBracket,
    /// Greedy over a random sample of candidates: a lower bound only.
    Sampled,
}

impl Certificate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Certificate::GreedyMaximal => "greedy-maximal",
            Certificate::ExactMaximum => "exact-maximum",
            Certificate::ExplicitGrid => "paper-grid",
            Certificate::PrefixBracket => "prefix-bracket",
            Certificate::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSet {
    pub points: Vec<Point>,
    pub n: usize,
    pub eps: f64,
    pub certificate: Certificate,
}

impl SeparatedSet {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exhaustive pair check of `d_n > eps`.
    pub fn verify_separated(&self, sys: &System) -> bool {
        self.points.iter().enumerate().all(|(i, x)| {
            self.points[i + 1..]
                .iter()
                .all(|y| separated(sys, x, y, self.n, self.eps))
        })
    }

    /// Every candidate lies within closed `d_n`-distance `eps` of a member.
    pub fn verify_spanning(&self, sys: &System, candidates: &[Point]) -> bool {
        candidates
            .par_iter()
            .all(|c| self.points.iter().any(|x| !separated(sys, x, c, self.n, self.eps)))
    }
}

/// `d_n(x, y) > eps`, the one separation predicate used everywhere.
#[inline]
pub fn separated(sys: &System, x: &Point, y: &Point, n: usize, eps: f64) -> bool {
    sys.dyn_distance_words(x.word(), x.tail(), y.word(), y.tail(), n) > eps
}

/// Query `(phi, alpha, delta, n)` for the finite-time level set `P(alpha, delta, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWindow {
    pub phi: Potential,
    pub alpha: f64,
    pub delta: f64,
    pub n: usize,
}

impl LevelWindow {
    pub fn new(phi: Potential, alpha: f64, delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::domain("delta must be positive"));
        }
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(LevelWindow { phi, alpha, delta, n })
    }

    pub fn at(&self, n: usize) -> Result<Self> {
        LevelWindow::new(self.phi.clone(), self.alpha, self.delta, n)
    }

    /// Window that every point satisfies.
    pub fn is_vacuous(&self) -> bool {
        self.phi.min_value() > self.alpha - self.delta && self.phi.max_value() < self.alpha + self.delta
    }

    fn exact(&self) -> Result<ExactWindow> {
        Ok(ExactWindow {
            alpha: Rational::from_f64(self.alpha)?,
            delta: Rational::from_f64(self.delta)?,
            den: self.phi.exact().den,
            n: self.n,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ExactWindow {
    alpha: Rational,
    delta: Rational,
    den: i128,
    n: usize,
}

impl ExactWindow {
    #[inline]
    fn contains(&self, phi: &Potential, word: &[Letter]) -> bool {
        window_contains(phi.birkhoff_numerator(word, self.n), self.den, self.n, self.alpha, self.delta)
    }
}

/// `|A_n(x) - alpha| < delta`, decided in exact arithmetic.
pub fn level_membership(sys: &System, lw: &LevelWindow, x: &Point) -> Result<bool> {
    sys.check_point(x)?;
    lw.phi.check_system(sys)?;
    let needed = lw.n + lw.phi.depth() - 1;
    if x.depth() < needed {
        return Err(Error::Depth {
            needed,
            have: x.depth(),
        });
    }
    Ok(lw.exact()?.contains(&lw.phi, x.word()))
}

/// Length of candidate words at resolution `(n, eps)`.
pub fn candidate_depth(sys: &System, n: usize, eps: f64) -> usize {
    n + sys.truncation_depth(eps, n)
}

fn space_size(m: usize, len: usize) -> u128 {
    (m as u128).checked_pow(len as u32).unwrap_or(u128::MAX)
}

/// All words of length `len` in lexicographic order.
pub struct WordOdometer {
    m: usize,
    word: Vec<Letter>,
    started: bool,
    done: bool,
}

impl WordOdometer {
    pub fn new(m: usize, len: usize) -> Self {
        WordOdometer {
            m,
            word: vec![0; len],
            started: false,
            done: m == 0,
        }
    }

    pub fn next_word(&mut self) -> Option<&[Letter]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.word);
        }
        for i in (0..self.word.len()).rev() {
            if (self.word[i] as usize) + 1 < self.m {
                self.word[i] += 1;
                return Some(&self.word);
            }
            self.word[i] = 0;
        }
        self.done = true;
        None
    }
}

pub fn enumerate_words(sys: &System, len: usize, cap: u128) -> Result<Vec<Point>> {
    let size = space_size(sys.alphabet_size(), len);
    if size > cap {
        return Err(Error::budget("candidate words", size, cap));
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut odo = WordOdometer::new(sys.alphabet_size(), len);
    while let Some(w) = odo.next_word() {
        out.push(Point::pad_zero(w.to_vec())?);
    }
    Ok(out)
}

/// The finite family of truncated words that represents `X` at `(n, eps)`.
pub fn enumerate_candidates(sys: &System, n: usize, eps: f64, cap: u128) -> Result<Vec<Point>> {
    enumerate_words(sys, candidate_depth(sys, n, eps), cap)
}

/// Trie over words of one length and tail convention, answering `d_n`
/// radius queries with window-sum pruning.
pub(crate) struct WordIndex<'s> {
    sys: &'s System,
    n: usize,
    depth: usize,
    tail: TailConvention,
    m: usize,
    weights: Vec<f64>,
    children: Vec<u32>,
    leaf_mass: HashMap<u32, f64>,
    sums: Vec<f64>,
    path: Vec<Letter>,
    order: Vec<Vec<Letter>>,
}

/// What a radius query collects.
#[derive(Clone, Copy)]
enum Query {
    /// Stop at the first leaf with `d_n <= r`.
    AnyClosed(f64),
    /// Total mass of leaves with `d_n < r`.
    MassOpen(f64),
}

impl Query {
    fn radius(self) -> f64 {
        match self {
            Query::AnyClosed(r) | Query::MassOpen(r) => r,
        }
    }
}

impl<'s> WordIndex<'s> {
    pub(crate) fn new(sys: &'s System, n: usize, depth: usize, tail: TailConvention) -> Self {
        let m = sys.alphabet_size();
        // letters ordered by distance from each letter, same letter first
        let order = (0..m)
            .map(|a| {
                let mut v: Vec<Letter> = (0..m as Letter).collect();
                v.sort_by_key(|&c| (c as i64 - a as i64).unsigned_abs());
                v
            })
            .collect();
        WordIndex {
            sys,
            n,
            depth,
            tail,
            m,
            weights: (0..=depth + 1).map(|k| sys.weight(k)).collect(),
            children: vec![0; m],
            leaf_mass: HashMap::new(),
            sums: vec![0.0; (depth + 1) * n],
            path: vec![0; depth],
            order,
        }
    }

    pub(crate) fn insert(&mut self, w: &[Letter], mass: f64) {
        debug_assert_eq!(w.len(), self.depth);
        let mut node = 0usize;
        for &c in w {
            let slot = node * self.m + c as usize;
            if self.children[slot] == 0 {
                let fresh = self.children.len() / self.m;
                self.children[slot] = fresh as u32;
                self.children.extend(std::iter::repeat(0).take(self.m));
            }
            node = self.children[slot] as usize;
        }
        *self.leaf_mass.entry(node as u32).or_insert(0.0) += mass;
    }

    /// Some indexed word has `d_n <= r`.
    pub(crate) fn any_within(&mut self, w: &[Letter], r: f64) -> bool {
        self.dfs(0, 0, w, Query::AnyClosed(r)) > 0.0
    }

    /// Mass of indexed words with `d_n < r`.
    pub(crate) fn mass_within_open(&mut self, w: &[Letter], r: f64) -> f64 {
        self.dfs(0, 0, w, Query::MassOpen(r))
    }

    fn dfs(&mut self, node: usize, t: usize, w: &[Letter], q: Query) -> f64 {
        if t == self.depth {
            let d = if self.tail == TailConvention::PadZero {
                // both tails are zero: the accumulated sums are the windows,
                // added in the same order as the direct evaluation
                let top = self.sums[t * self.n..].iter().copied().fold(0.0, f64::max);
                self.sys.root(top)
            } else {
                self.sys.dyn_distance_words(w, self.tail, &self.path, self.tail, self.n)
            };
            let hit = match q {
                Query::AnyClosed(r) => d <= r,
                Query::MassOpen(r) => d < r,
            };
            return if hit { self.leaf_mass[&(node as u32)] } else { 0.0 };
        }
        let p = self.sys.exponent();
        // partial sums only grow, so they prune any window already too wide
        let prune_above = q.radius().powf(p) * (1.0 + 1e-9) + 1e-300;
        let xv = self.sys.letter_value(w[t]);
        let mut total = 0.0;
        for oi in 0..self.m {
            let c = self.order[w[t] as usize][oi];
            let child = self.children[node * self.m + c as usize] as usize;
            if child == 0 {
                continue;
            }
            let dv = (xv - self.sys.letter_value(c)).abs();
            let dv = if p == 1.0 { dv } else { dv.powf(p) };
            let (base, next) = (t * self.n, (t + 1) * self.n);
            let mut alive = true;
            for j in 0..self.n {
                let add = if j <= t { self.weights[t - j + 1] * dv } else { 0.0 };
                let s = self.sums[base + j] + add;
                self.sums[next + j] = s;
                if s > prune_above {
                    alive = false;
                    break;
                }
            }
            if !alive {
                continue;
            }
            self.path[t] = c;
            total += self.dfs(child, t + 1, w, q);
            if total > 0.0 && matches!(q, Query::AnyClosed(_)) {
                return total;
            }
        }
        total
    }
}

/// Greedy scan over words of one common length and tail convention.
fn greedy_words<'a, I>(sys: &System, words: I, depth: usize, tail: TailConvention, n: usize, eps: f64) -> Vec<Vec<Letter>>
where
    I: IntoIterator<Item = &'a [Letter]>,
{
    let mut index = WordIndex::new(sys, n, depth, tail);
    let mut kept = Vec::new();
    for w in words {
        if !index.any_within(w, eps) {
            index.insert(w, 1.0);
            kept.push(w.to_vec());
        }
    }
    kept
}

pub(crate) fn uniform_shape(candidates: &[Point]) -> Option<(usize, TailConvention)> {
    let first = candidates.first()?;
    candidates
        .iter()
        .all(|c| c.depth() == first.depth() && c.tail() == first.tail())
        .then(|| (first.depth(), first.tail()))
}

/// Keep a candidate iff it is separated from everything kept before it.
pub fn greedy_maximal_separated(sys: &System, candidates: &[Point], n: usize, eps: f64) -> Result<SeparatedSet> {
    if candidates.is_empty() {
        return Err(Error::domain("no candidates"));
    }
    for c in candidates {
        sys.check_point(c)?;
        if c.depth() < n {
            return Err(Error::Depth {
                needed: n,
                have: c.depth(),
            });
        }
    }
    let points = match uniform_shape(candidates) {
        Some((depth, tail)) => greedy_words(sys, candidates.iter().map(|c| c.word()), depth, tail, n, eps)
            .into_iter()
            .map(|w| Point::new(w, tail))
            .collect::<Result<Vec<_>>>()?,
        None => {
            let mut kept: Vec<Point> = Vec::new();
            for c in candidates {
                if kept.iter().all(|k| separated(sys, k, c, n, eps)) {
                    kept.push(c.clone());
                }
            }
            kept
        }
    };
    Ok(SeparatedSet {
        points,
        n,
        eps,
        certificate: Certificate::GreedyMaximal,
    })
}

/// Maximum separated subset by exhaustive independent-set search.
pub fn exact_max_separated(sys: &System, candidates: &[Point], n: usize, eps: f64, cap: usize) -> Result<SeparatedSet> {
    if candidates.len() > cap.min(64) {
        return Err(Error::budget("exact search candidates", candidates.len() as u128, cap.min(64) as u128));
    }
    for c in candidates {
        sys.check_point(c)?;
    }
    let k = candidates.len();
    let mut conflict = vec![0u64; k];
    for i in 0..k {
        for j in i + 1..k {
            if !separated(sys, &candidates[i], &candidates[j], n, eps) {
                conflict[i] |= 1 << j;
                conflict[j] |= 1 << i;
            }
        }
    }
    fn search(conflict: &[u64], open: u64, chosen: u64, best: &mut u64) {
        if chosen.count_ones() + open.count_ones() <= best.count_ones() {
            return;
        }
        if open == 0 {
            *best = chosen;
            return;
        }
        let v = open.trailing_zeros() as usize;
        let bit = 1u64 << v;
        search(conflict, open & !bit & !conflict[v], chosen | bit, best);
        search(conflict, open & !bit, chosen, best);
    }
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut best = 0u64;
    search(&conflict, all, 0, &mut best);
    Ok(SeparatedSet {
        points: (0..k).filter(|i| best >> i & 1 == 1).map(|i| candidates[i].clone()).collect(),
        n,
        eps,
        certificate: Certificate::ExactMaximum,
    })
}

/// How counts are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Backend {
    /// Exhaustive when within the candidate cap, else the prefix bracket when
    /// it applies, else a budget error.
    Auto,
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
    PrefixBracket,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    pub backend: Backend,
    pub candidate_cap: u128,
    pub exact_cap: usize,
    pub timings: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            backend: Backend::Auto,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            exact_cap: DEFAULT_EXACT_CAP,
            timings: false,
        }
    }
}

/// One count at one `(n, eps)` cell, carried as a log so huge counts fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountSample {
    pub n: usize,
    /// Log of the reported count; `-inf` when empty.
    pub log_count: f64,
    /// Log of a certified upper bound when the backend provides one.
    pub log_upper: Option<f64>,
    pub count: String,
    pub certificate: Certificate,
    pub lower_only: bool,
    pub elapsed_ms: Option<u128>,
}

impl CountSample {
    pub fn is_empty(&self) -> bool {
        self.log_count == f64::NEG_INFINITY
    }
}

/// Words of length `len` from the scan backend, filtered by the window,
/// stored back to back.
fn scan_words(sys: &System, len: usize, window: Option<&LevelWindow>, opts: &CountOptions) -> Result<(Vec<Letter>, bool)> {
    let m = sys.alphabet_size();
    let exact = window.map(|w| w.exact()).transpose()?;
    if let Some(w) = window {
        w.phi.check_system(sys)?;
        let needed = w.n + w.phi.depth() - 1;
        if len < needed {
            return Err(Error::Depth { needed, have: len });
        }
    }
    let keep = |word: &[Letter]| match (window, exact) {
        (Some(w), Some(e)) => e.contains(&w.phi, word),
        _ => true,
    };
    match opts.backend {
        Backend::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut words: Vec<Vec<Letter>> = (0..samples)
                .map(|_| (0..len).map(|_| rng.gen_range(0..m) as Letter).collect())
                .collect();
            words.sort();
            words.dedup();
            Ok((words.into_iter().filter(|w| keep(w)).flatten().collect(), true))
        }
        _ => {
            let size = space_size(m, len);
            if size > opts.candidate_cap {
                return Err(Error::budget("candidate words", size, opts.candidate_cap));
            }
            // the window only reads the first `head` letters: filter those,
            // then append every tail; both loops run in lexicographic order
            let head = window.map_or(0, |w| w.n + w.phi.depth() - 1);
            let tail_len = len - head;
            let mut tails = Vec::with_capacity(space_size(m, tail_len) as usize * tail_len);
            let mut odo = WordOdometer::new(m, tail_len);
            while let Some(t) = odo.next_word() {
                tails.extend_from_slice(t);
            }
            let lead = (1..=head).find(|&k| space_size(m, k) >= 256).unwrap_or(head);
            let mut leads = Vec::new();
            let mut odo = WordOdometer::new(m, lead);
            while let Some(h) = odo.next_word() {
                leads.push(h.to_vec());
            }
            let chunks: Vec<Vec<Letter>> = leads
                .par_iter()
                .map(|l| {
                    let mut out = Vec::new();
                    let mut w = l.clone();
                    let mut odo = WordOdometer::new(m, head - lead);
                    while let Some(rest) = odo.next_word() {
                        w.truncate(lead);
                        w.extend_from_slice(rest);
                        if keep(&w) {
                            if tail_len == 0 {
                                out.extend_from_slice(&w);
                            } else {
                                for t in tails.chunks_exact(tail_len) {
                                    out.extend_from_slice(&w);
                                    out.extend_from_slice(t);
                                }
                            }
                        }
                    }
                    out
                })
                .collect();
            Ok((chunks.concat(), false))
        }
    }
}

fn scan_separated(sys: &System, n: usize, eps: f64, window: Option<&LevelWindow>, opts: &CountOptions) -> Result<SeparatedSet> {
    let len = candidate_depth(sys, n, eps).max(window.map_or(0, |w| w.n + w.phi.depth() - 1));
    let (words, sampled) = scan_words(sys, len, window, opts)?;
    let kept = greedy_words(sys, words.chunks_exact(len.max(1)), len, TailConvention::PadZero, n, eps);
    Ok(SeparatedSet {
        points: kept.into_iter().map(Point::pad_zero).collect::<Result<_>>()?,
        n,
        eps,
        certificate: if sampled { Certificate::Sampled } else { Certificate::GreedyMaximal },
    })
}

/// Resolve `Backend::Auto` once for a whole schedule, so that every cell of
/// a rate estimate is counted the same way.
pub fn resolve_backend(sys: &System, n_max: usize, eps: f64, window: Option<&LevelWindow>, opts: &CountOptions) -> CountOptions {
    if opts.backend != Backend::Auto {
        return *opts;
    }
    let len = candidate_depth(sys, n_max, eps).max(window.map_or(0, |w| n_max + w.phi.depth() - 1));
    let bracket = space_size(sys.alphabet_size(), len) > opts.candidate_cap
        && sys.is_grid()
        && eps < sys.letter_gap() / 2.0
        && window.map_or(true, |w| w.phi.depth() == 1);
    CountOptions {
        backend: if bracket { Backend::PrefixBracket } else { Backend::Exhaustive },
        ..*opts
    }
}

/// Maximal `(n, eps)`-separated subset of `P(alpha, delta, n)` among candidates.
///
/// An empty result means the window holds no candidate at this `n`.
pub fn m_count(sys: &System, lw: &LevelWindow, eps: f64, opts: &CountOptions) -> Result<SeparatedSet> {
    let set = scan_separated(sys, lw.n, eps, Some(lw), opts)?;
    if set.count() > 0 && set.count() <= opts.exact_cap && !matches!(opts.backend, Backend::Sampled { .. }) {
        // small windows: certify a maximum, not just a maximal set
        let len = candidate_depth(sys, lw.n, eps).max(lw.n + lw.phi.depth() - 1);
        if space_size(sys.alphabet_size(), len) <= opts.exact_cap as u128 {
            let (words, _) = scan_words(sys, len, Some(lw), opts)?;
            let cands = words
                .chunks_exact(len)
                .map(|w| Point::pad_zero(w.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            return exact_max_separated(sys, &cands, lw.n, eps, opts.exact_cap);
        }
    }
    Ok(set)
}

/// Greedy cover size bounding `N(alpha, delta, n, eps)` from above.
///
/// The maximal separated set is a cover by closed `eps`-balls; its size is
/// the reported value.
pub fn n_count(sys: &System, lw: &LevelWindow, eps: f64, opts: &CountOptions) -> Result<usize> {
    Ok(scan_separated(sys, lw.n, eps, Some(lw), opts)?.count())
}

/// Unconstrained maximal separated set (the count behind `s(f, n, eps)`).
pub fn s_count(sys: &System, n: usize, eps: f64, opts: &CountOptions) -> Result<SeparatedSet> {
    scan_separated(sys, n, eps, None, opts)
}

/// Extra cylinder depth so that depth-`n + r` cylinders have `d_n`-diameter
/// at most `eps` on a grid shift.
pub fn bracket_extra_depth(eps: f64) -> usize {
    ((1.0 / eps).log2().ceil() as i64 - 1).max(0) as usize
}

/// Words of length `n` whose average lies in the window, by repeated
/// squaring of the letter polynomial.
pub fn window_word_count(phi: &Potential, alpha: f64, delta: f64, n: usize) -> Result<BigUint> {
    if phi.depth() != 1 {
        return Err(Error::domain("window word counts need a depth-1 potential"));
    }
    let ex = phi.exact();
    let lo = *ex.nums.iter().min().expect("nonempty");
    let mut base: Vec<BigUint> = Vec::new();
    for &v in &ex.nums {
        let off = (v - lo) as usize;
        if base.len() <= off {
            base.resize(off + 1, BigUint::zero());
        }
        base[off] += 1u32;
    }
    let mul = |a: &[BigUint], b: &[BigUint]| -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut acc = vec![BigUint::one()];
    let mut pow = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &pow);
        }
        e >>= 1;
        if e > 0 {
            pow = mul(&pow, &pow);
        }
    }
    let a = Rational::from_f64(alpha)?;
    let d = Rational::from_f64(delta)?;
    Ok(acc
        .iter()
        .enumerate()
        .filter(|(k, _)| window_contains(lo * n as i128 + *k as i128, ex.den, n, a, d))
        .map(|(_, c)| c)
        .sum())
}

/// Certified bracket on the separated count of a grid shift below half the
/// letter gap: distinct `n`-prefixes are separated, and points sharing a
/// depth-`n + r` cylinder are not.
pub fn prefix_bracket(sys: &System, n: usize, eps: f64, window: Option<&LevelWindow>) -> Result<CountSample> {
    if !sys.is_grid() || !(eps < sys.letter_gap() / 2.0) {
        return Err(Error::domain("the prefix bracket needs a grid shift with eps below half the letter gap"));
    }
    let m = sys.alphabet_size() as f64;
    let r = bracket_extra_depth(eps);
    let (log_lower, count) = match window {
        None => (n as f64 * m.ln(), BigUint::from(sys.alphabet_size()).pow(n as u32)),
        Some(w) => {
            w.phi.check_system(sys)?;
            let c = window_word_count(&w.phi, w.alpha, w.delta, n)?;
            (ln_big(&c), c)
        }
    };
    Ok(CountSample {
        n,
        log_count: log_lower,
        log_upper: Some(log_lower + r as f64 * m.ln()),
        count: count.to_string(),
        certificate: Certificate::PrefixBracket,
        lower_only: false,
        elapsed_ms: None,
    })
}

/// One count cell through the configured backend.
pub fn count_cell(sys: &System, n: usize, eps: f64, window: Option<&LevelWindow>, opts: &CountOptions) -> Result<CountSample> {
    let start = Instant::now();
    let use_bracket = resolve_backend(sys, n, eps, window, opts).backend == Backend::PrefixBracket;
    let mut sample = if use_bracket {
        prefix_bracket(sys, n, eps, window)?
    } else {
        let set = scan_separated(sys, n, eps, window, opts)?;
        let c = set.count();
        CountSample {
            n,
            log_count: if c == 0 { f64::NEG_INFINITY } else { (c as f64).ln() },
            log_upper: None,
            count: c.to_string(),
            certificate: set.certificate,
            lower_only: set.certificate == Certificate::Sampled,
            elapsed_ms: None,
        }
    };
    if opts.timings {
        sample.elapsed_ms = Some(start.elapsed().as_millis());
    }
    Ok(sample)
}

/// CSV row for count exports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub count: String,
    pub certificate: String,
    pub elapsed_ms: Option<u128>,
}

impl CountRow {
    pub fn new(sys: &System, eps: f64, window: Option<&LevelWindow>, sample: &CountSample) -> Self {
        CountRow {
            kind: sys.label(),
            m: sys.alphabet_size(),
            n: sample.n,
            eps,
            alpha: window.map(|w| w.alpha),
            delta: window.map(|w| w.delta),
            count: sample.count.clone(),
            certificate: sample.certificate.as_str().to_string(),
            elapsed_ms: sample.elapsed_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> System {
        System::grid_full_shift(m).unwrap()
    }

    fn window(sys: &System, alpha: f64, delta: f64, n: usize) -> LevelWindow {
        LevelWindow::new(Potential::first_coordinate(sys), alpha, delta, n).unwrap()
    }

    #[test]
    fn candidate_enumeration() {
        let s2 = grid(2);
        assert_eq!(s2.truncation_depth(3.0, 1), 2);
        let c = enumerate_candidates(&s2, 1, 3.0, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.windows(2).all(|w| w[0].word() < w[1].word()));
        assert_eq!(enumerate_words(&grid(3), 3, 1000).unwrap().len(), 27);
        assert!(matches!(
            enumerate_candidates(&s2, 4, 0.1, 10),
            Err(Error::Budget { required: 2048, cap: 10, .. })
        ));
    }

    #[test]
    fn greedy_examples() {
        let s = grid(2);
        let x = Point::pad_zero(vec![0, 1, 1]).unwrap();
        let dup = vec![x.clone(), x.clone(), x.clone()];
        assert_eq!(greedy_maximal_separated(&s, &dup, 2, 0.1).unwrap().count(), 1);

        let cands = enumerate_candidates(&s, 2, 0.4, DEFAULT_CANDIDATE_CAP).unwrap();
        let set = greedy_maximal_separated(&s, &cands, 2, 0.4).unwrap();
        assert!(set.count() >= 4);
        assert!(set.verify_separated(&s));
        assert!(set.verify_spanning(&s, &cands));

        let spread: Vec<Point> = (0..4u16)
            .map(|i| Point::pad_zero(vec![i >> 1, i & 1, 0]).unwrap())
            .collect();
        assert_eq!(greedy_maximal_separated(&s, &spread, 2, 0.4).unwrap().count(), 4);
    }

    #[test]
    fn trie_matches_pairwise_greedy() {
        let s = grid(3);
        for &(n, eps) in &[(1usize, 0.3f64), (2, 0.2), (2, 0.6), (3, 0.45)] {
            let cands = enumerate_words(&s, n + 3, 1 << 20).unwrap();
            let fast = greedy_maximal_separated(&s, &cands, n, eps).unwrap();
            let mut slow: Vec<Point> = Vec::new();
            for c in &cands {
                if slow.iter().all(|k| separated(&s, k, c, n, eps)) {
                    slow.push(c.clone());
                }
            }
            assert_eq!(fast.points, slow, "n={n} eps={eps}");
        }
    }

    #[test]
    fn exact_search_examples() {
        let s = grid(2);
        let cands = enumerate_words(&s, 3, 100).unwrap();
        let exact = exact_max_separated(&s, &cands, 1, 0.6, DEFAULT_EXACT_CAP).unwrap();
        let greedy = greedy_maximal_separated(&s, &cands, 1, 0.6).unwrap();
        // d_1 > 0.6 forces the first letters to differ and the rest to add 0.1+
        assert_eq!(exact.count(), 2);
        assert!(greedy.count() <= exact.count());
        assert!(exact.verify_separated(&s));

        let same = vec![cands[0].clone(); 5];
        assert_eq!(exact_max_separated(&s, &same, 1, 0.1, 24).unwrap().count(), 1);
        let too_many = enumerate_words(&s, 5, 100).unwrap();
        assert!(matches!(exact_max_separated(&s, &too_many, 1, 0.1, 24), Err(Error::Budget { .. })));
    }

    #[test]
    fn membership_examples() {
        let s = grid(2);
        let x = Point::pad_zero(vec![0, 1, 0, 1]).unwrap();
        assert!(level_membership(&s, &window(&s, 0.5, 0.01, 4), &x).unwrap());
        assert!(!level_membership(&s, &window(&s, 0.25, 0.2, 4), &x).unwrap());
        assert!(level_membership(&s, &window(&s, 0.5, 1e-9, 4), &x).unwrap());
        assert!(matches!(
            level_membership(&s, &window(&s, 0.5, 0.1, 5), &x),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn m_and_n_count_examples() {
        let s = grid(2);
        let opts = CountOptions::default();
        let lw = window(&s, 0.5, 0.2, 4);
        // at 0.49 every tail is within eps of every other, leaving C(4,2) words
        let set = m_count(&s, &lw, 0.49, &opts).unwrap();
        assert_eq!(set.count(), 6);
        assert!(set.verify_separated(&s));
        assert_eq!(n_count(&s, &lw, 0.49, &opts).unwrap(), 6);
        // at 0.2 the tails split each prefix into the same number of classes
        let per_prefix = m_count(&s, &window(&s, 1.0, 0.01, 4), 0.2, &opts).unwrap().count();
        assert_eq!(m_count(&s, &lw, 0.2, &opts).unwrap().count(), 6 * per_prefix);

        assert!(m_count(&s, &window(&s, 2.0, 0.1, 4), 0.2, &opts).unwrap().is_empty());
        assert_eq!(n_count(&s, &window(&s, 1.0, 0.01, 4), 0.49, &opts).unwrap(), 1);

        let vac = window(&s, 0.5, 5.0, 3);
        assert!(vac.is_vacuous());
        assert_eq!(
            m_count(&s, &vac, 0.3, &opts).unwrap().count(),
            s_count(&s, 3, 0.3, &opts).unwrap().count()
        );
    }

    #[test]
    fn grid_count_is_prefix_times_tail() {
        // eps = 0.49 < g/2: every tail is within eps, so counts are exactly 2^n
        let s = grid(2);
        for n in 1..=8 {
            let set = s_count(&s, n, 0.49, &CountOptions::default()).unwrap();
            assert_eq!(set.count(), 1 << n);
        }
    }

    #[test]
    fn sampled_mode_is_a_lower_bound() {
        let s = grid(2);
        let opts = CountOptions {
            backend: Backend::Sampled { samples: 40, seed: 7 },
            ..CountOptions::default()
        };
        let c = count_cell(&s, 6, 0.49, None, &opts).unwrap();
        assert!(c.lower_only);
        assert!(c.log_count <= (64f64).ln() + 1e-12);
        assert_eq!(c, count_cell(&s, 6, 0.49, None, &opts).unwrap());
    }

    #[test]
    fn bracket_and_polynomial_counts() {
        let s = grid(5);
        let eps = 0.25 / 2.5;
        let b = prefix_bracket(&s, 3, eps, None).unwrap();
        assert!((b.log_count - 3.0 * 5f64.ln()).abs() < 1e-12);
        let lw = window(&s, 0.5, 0.1, 3);
        let c = window_word_count(&lw.phi, 0.5, 0.1, 3).unwrap();
        let brute = enumerate_words(&s, 3, 1000)
            .unwrap()
            .iter()
            .filter(|x| level_membership(&s, &lw, x).unwrap())
            .count();
        assert_eq!(c, BigUint::from(brute));
        // upper bound really bounds an exhaustive greedy count
        let s2 = grid(2);
        let ex = s_count(&s2, 4, 0.3, &CountOptions::default()).unwrap().count() as f64;
        let br = prefix_bracket(&s2, 4, 0.3, None).unwrap();
        assert!(ex.ln() <= br.log_upper.unwrap() + 1e-12);
        assert!(ex.ln() >= br.log_count - 1e-12);
    }
}
