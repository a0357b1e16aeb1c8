//! Representable dynamical systems: one-sided shifts over finite alphabets
//! with a weighted coordinate metric, their dynamical metrics and Birkhoff
//! averages of locally constant potentials.
//!
//! A [`Point`] is a finite word plus a tail convention, which makes it an
//! exact description of an infinite sequence. Distances are computed on that
//! infinite sequence: for grid shifts the tail beyond the stored word has a
//! constant coordinate difference, so its contribution has a closed form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ScaledValues;

pub type Letter = u16;

/// How coordinates beyond the stored word are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TailConvention {
    RepeatLast,
    PadZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Point {
    word: Vec<Letter>,
    tail: TailConvention,
}

impl Point {
    pub fn new(word: Vec<Letter>, tail: TailConvention) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::domain("a point needs at least one stored coordinate"));
        }
        Ok(Point { word, tail })
    }

    pub fn pad_zero(word: Vec<Letter>) -> Result<Self> {
        Point::new(word, TailConvention::PadZero)
    }

    pub fn repeat_last(word: Vec<Letter>) -> Result<Self> {
        Point::new(word, TailConvention::RepeatLast)
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }

    pub fn tail(&self) -> TailConvention {
        self.tail
    }

    /// Letter at 0-based coordinate `i`, resolved through the tail convention.
    #[inline]
    pub fn letter(&self, i: usize) -> Letter {
        letter_at(&self.word, self.tail, i)
    }

    /// The first `len` letters, extended through the tail convention if needed.
    pub fn prefix(&self, len: usize) -> Vec<Letter> {
        (0..len).map(|i| self.letter(i)).collect()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.word.iter().map(|l| l.to_string()).collect();
        let tail = match self.tail {
            TailConvention::RepeatLast => "repeat",
            TailConvention::PadZero => "pad0",
        };
        write!(f, "({}|{})", letters.join(","), tail)
    }
}

#[inline]
pub(crate) fn letter_at(word: &[Letter], tail: TailConvention, i: usize) -> Letter {
    if i < word.len() {
        word[i]
    } else {
        match tail {
            TailConvention::RepeatLast => word[word.len() - 1],
            TailConvention::PadZero => 0,
        }
    }
}

/// Closed-form coordinate weights `nu_n` of the weighted shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NuForm {
    /// `nu_n = ratio^n`, `0 < ratio < 1`.
    Geometric { ratio: f64 },
    /// `nu_n = n^(-exponent)`, `exponent > 1`.
    Power { exponent: f64 },
}

impl NuForm {
    pub fn dyadic() -> Self {
        NuForm::Geometric { ratio: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NuForm::Geometric { ratio } if ratio > 0.0 && ratio < 1.0 => Ok(()),
            NuForm::Power { exponent } if exponent > 1.0 => Ok(()),
            _ => Err(Error::domain(format!("weight sequence {self} is not summable"))),
        }
    }

    /// `nu_n` for `n >= 1`.
    pub fn weight(&self, n: usize) -> f64 {
        match *self {
            NuForm::Geometric { ratio } => ratio.powi(n as i32),
            NuForm::Power { exponent } => (n as f64).powf(-exponent),
        }
    }

    /// `sum_{k >= from} nu_k`. Exact for geometric weights, an upper bound
    /// (integral test) for power weights.
    pub fn tail_sum(&self, from: usize) -> f64 {
        let from = from.max(1);
        match *self {
            NuForm::Geometric { ratio } => ratio.powi(from as i32) / (1.0 - ratio),
            NuForm::Power { exponent } => {
                let a = from as f64;
                a.powf(-exponent) + a.powf(1.0 - exponent) / (exponent - 1.0)
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.tail_sum(1)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::domain(format!("nu_form `{s}` must look like geometric:0.5")))?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("bad nu_form parameter `{arg}`")))?;
        let form = match kind.trim() {
            "geometric" => NuForm::Geometric { ratio: v },
            "power" => NuForm::Power { exponent: v },
            other => return Err(Error::domain(format!("unknown nu_form `{other}`"))),
        };
        form.validate()?;
        Ok(form)
    }
}

impl fmt::Display for NuForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuForm::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            NuForm::Power { exponent } => write!(f, "power:{exponent}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Full shift over `{0, 1/(m-1), ..., 1}` with `d = sum 2^-n |x_n - y_n|`.
    GridFullShift { m: usize },
    /// Shift on `K = {|x_n| <= 1}` in `l^p(nu)`, truncated to `ell_trunc`
    /// coordinates and a `grid_m`-point grid on `[-1, 1]`.
    WeightedShift {
        nu: NuForm,
        p: f64,
        ell_trunc: usize,
        grid_m: usize,
    },
}

/// A concrete system with its metric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    kind: SystemKind,
    values: Vec<f64>,
}

impl System {
    pub fn grid_full_shift(m: usize) -> Result<Self> {
        if m == 0 || m > Letter::MAX as usize {
            return Err(Error::domain(format!("alphabet size {m} out of range")));
        }
        let values = if m == 1 {
            vec![0.0]
        } else {
            (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
        };
        Ok(System {
            kind: SystemKind::GridFullShift { m },
            values,
        })
    }

    pub fn weighted_shift(nu: NuForm, p: f64, ell_trunc: usize, grid_m: usize) -> Result<Self> {
        nu.validate()?;
        if !(p >= 1.0) {
            return Err(Error::domain(format!("p = {p} must be >= 1")));
        }
        if ell_trunc == 0 {
            return Err(Error::domain("ell_trunc must be positive"));
        }
        if grid_m < 2 || grid_m > Letter::MAX as usize {
            return Err(Error::domain(format!("grid_m = {grid_m} out of range")));
        }
        let values = (0..grid_m)
            .map(|i| -1.0 + 2.0 * i as f64 / (grid_m - 1) as f64)
            .collect();
        Ok(System {
            kind: SystemKind::WeightedShift {
                nu,
                p,
                ell_trunc,
                grid_m,
            },
            values,
        })
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, SystemKind::GridFullShift { .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            SystemKind::GridFullShift { m } => format!("grid-full-shift(m={m})"),
            SystemKind::WeightedShift {
                nu,
                p,
                ell_trunc,
                grid_m,
            } => format!("weighted-shift(nu={nu},p={p},ell={ell_trunc},grid={grid_m})"),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.values.len()
    }

    pub fn letter_value(&self, letter: Letter) -> f64 {
        self.values[letter as usize]
    }

    pub fn letter_values(&self) -> &[f64] {
        &self.values
    }

    /// Spacing between adjacent letter values.
    pub fn letter_gap(&self) -> f64 {
        match self.kind {
            SystemKind::GridFullShift { m } if m == 1 => f64::INFINITY,
            SystemKind::GridFullShift { m } => 1.0 / (m - 1) as f64,
            SystemKind::WeightedShift { grid_m, .. } => 2.0 / (grid_m - 1) as f64,
        }
    }

    pub fn letter_diameter(&self) -> f64 {
        match self.kind {
            SystemKind::GridFullShift { m } if m == 1 => 0.0,
            SystemKind::GridFullShift { .. } => 1.0,
            SystemKind::WeightedShift { .. } => 2.0,
        }
    }

    /// Metric exponent: 1 for grid shifts, `p` for the weighted shift.
    pub fn exponent(&self) -> f64 {
        match self.kind {
            SystemKind::GridFullShift { .. } => 1.0,
            SystemKind::WeightedShift { p, .. } => p,
        }
    }

    /// Number of coordinates seen by the base metric, `None` for all.
    pub fn horizon(&self) -> Option<usize> {
        match self.kind {
            SystemKind::GridFullShift { .. } => None,
            SystemKind::WeightedShift { ell_trunc, .. } => Some(ell_trunc),
        }
    }

    /// Weight of the 1-based coordinate `k` in the base metric.
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        match self.kind {
            SystemKind::GridFullShift { .. } => 0.5f64.powi(k as i32),
            SystemKind::WeightedShift { nu, ell_trunc, .. } => {
                if k <= ell_trunc {
                    nu.weight(k)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            SystemKind::GridFullShift { .. } => self.letter_diameter(),
            SystemKind::WeightedShift { nu, p, ell_trunc, .. } => {
                let mass = nu.total() - nu.tail_sum(ell_trunc + 1);
                2.0 * mass.powf(1.0 / p)
            }
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        let m = self.alphabet_size();
        if let Some(bad) = x.word().iter().find(|&&l| l as usize >= m) {
            return Err(Error::domain(format!(
                "letter {bad} is not in an alphabet of size {m}"
            )));
        }
        Ok(())
    }

    pub fn check_same(&self, other: &System) -> Result<()> {
        if self != other {
            return Err(Error::SystemMismatch(format!(
                "{} vs {}",
                self.label(),
                other.label()
            )));
        }
        Ok(())
    }

    /// The shift map on stored words.
    pub fn shift(&self, x: &Point) -> Result<Point> {
        self.check_point(x)?;
        if x.depth() < 2 {
            return Err(Error::Underflow);
        }
        Point::new(x.word()[1..].to_vec(), x.tail())
    }

    /// `d(f^j x, f^j y)^p` on raw words.
    pub(crate) fn window_pow(
        &self,
        a: &[Letter],
        ta: TailConvention,
        b: &[Letter],
        tb: TailConvention,
        j: usize,
    ) -> f64 {
        let p = self.exponent();
        let diff = |i: usize| -> f64 {
            let va = self.values[letter_at(a, ta, i) as usize];
            let vb = self.values[letter_at(b, tb, i) as usize];
            let d = (va - vb).abs();
            if p == 1.0 {
                d
            } else {
                d.powf(p)
            }
        };
        match self.horizon() {
            Some(h) => (1..=h).map(|k| self.weight(k) * diff(j + k - 1)).sum(),
            None => {
                let depth = a.len().max(b.len());
                let explicit = depth.saturating_sub(j);
                let mut s = 0.0;
                for k in 1..=explicit {
                    s += self.weight(k) * diff(j + k - 1);
                }
                // beyond the stored words the difference is constant
                let c = diff(depth.max(j));
                s + c * 0.5f64.powi(explicit as i32)
            }
        }
    }

    pub(crate) fn dyn_distance_words(
        &self,
        a: &[Letter],
        ta: TailConvention,
        b: &[Letter],
        tb: TailConvention,
        n: usize,
    ) -> f64 {
        let mut best = 0.0f64;
        for j in 0..n {
            best = best.max(self.window_pow(a, ta, b, tb, j));
        }
        self.root(best)
    }

    #[inline]
    pub(crate) fn root(&self, s: f64) -> f64 {
        let p = self.exponent();
        if p == 1.0 {
            s
        } else {
            s.powf(1.0 / p)
        }
    }

    /// Base distance `d(x, y)`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.root(self.window_pow(x.word(), x.tail(), y.word(), y.tail(), 0)))
    }

    /// Bound on how far `distance` can move if the stored tails are stand-ins
    /// for unknown coordinates beyond the stored depth.
    pub fn tail_bound(&self, x: &Point, y: &Point) -> f64 {
        let depth = x.depth().max(y.depth());
        match self.horizon() {
            Some(h) if depth >= h => 0.0,
            Some(_) => match self.kind {
                SystemKind::WeightedShift { nu, p, .. } => {
                    (self.letter_diameter().powf(p) * nu.tail_sum(depth + 1)).powf(1.0 / p)
                }
                _ => unreachable!(),
            },
            None => 0.5f64.powi(depth as i32) * self.letter_diameter(),
        }
    }

    /// Dynamical distance `d_n(x, y) = max_{0 <= j < n} d(f^j x, f^j y)`.
    pub fn dynamical_distance(&self, x: &Point, y: &Point, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        self.check_point(x)?;
        self.check_point(y)?;
        let have = x.depth().min(y.depth());
        if have < n {
            return Err(Error::Depth { needed: n, have });
        }
        Ok(self.dyn_distance_words(x.word(), x.tail(), y.word(), y.tail(), n))
    }

    /// Extra depth `L` so that coordinates past `n + L` move any `d_n` by at
    /// most `eps / 10`.
    pub fn truncation_depth(&self, eps: f64, _n: usize) -> usize {
        assert!(eps > 0.0, "eps must be positive");
        let budget = eps / 10.0;
        match self.kind {
            SystemKind::GridFullShift { .. } => {
                let diam = self.letter_diameter();
                let mut l = 0usize;
                while diam * 0.5f64.powi(l as i32) > budget {
                    l += 1;
                }
                l
            }
            SystemKind::WeightedShift { nu, p, ell_trunc, .. } => {
                let c = self.letter_diameter().powf(p);
                let mut l = 0usize;
                while l < ell_trunc && (c * nu.tail_sum(l + 1)).powf(1.0 / p) >= budget {
                    l += 1;
                }
                l
            }
        }
    }

    /// `(1/n) sum_{j<n} phi(f^j x)`.
    pub fn birkhoff_average(&self, phi: &Potential, x: &Point, n: usize) -> Result<f64> {
        self.check_point(x)?;
        phi.check_system(self)?;
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        let needed = n + phi.depth() - 1;
        if x.depth() < needed {
            return Err(Error::Depth {
                needed,
                have: x.depth(),
            });
        }
        let w = x.word();
        let s: f64 = (0..n).map(|j| phi.eval_word(&w[j..j + phi.depth()])).sum();
        Ok(s / n as f64)
    }
}

/// A locally constant potential, tabulated on words of length `depth` in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    name: String,
    alphabet: usize,
    depth: usize,
    table: Vec<f64>,
    exact: ScaledValues,
}

impl Potential {
    pub fn new(name: impl Into<String>, alphabet: usize, depth: usize, table: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::domain("potential depth must be at least 1"));
        }
        let cells = (alphabet as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if cells != table.len() as u128 {
            return Err(Error::domain(format!(
                "potential table has {} entries, {cells} needed for depth {depth} over {alphabet} letters",
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("potential table has non-finite entries"));
        }
        let exact = ScaledValues::from_f64s(&table)?;
        Ok(Potential {
            name: name.into(),
            alphabet,
            depth,
            table,
            exact,
        })
    }

    /// `phi(x) = x_1`, the value of the first letter.
    pub fn first_coordinate(sys: &System) -> Self {
        Potential::new("first-coordinate", sys.alphabet_size(), 1, sys.letter_values().to_vec())
            .expect("letter values are finite")
    }

    pub fn constant(sys: &System, c: f64) -> Result<Self> {
        Potential::new("constant", sys.alphabet_size(), 1, vec![c; sys.alphabet_size()])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub(crate) fn exact(&self) -> &ScaledValues {
        &self.exact
    }

    pub fn check_system(&self, sys: &System) -> Result<()> {
        if self.alphabet != sys.alphabet_size() {
            return Err(Error::SystemMismatch(format!(
                "potential over {} letters used on {}",
                self.alphabet,
                sys.label()
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn index(&self, w: &[Letter]) -> usize {
        w.iter().fold(0usize, |acc, &l| acc * self.alphabet + l as usize)
    }

    /// Value on a word of exactly `depth` letters.
    #[inline]
    pub fn eval_word(&self, w: &[Letter]) -> f64 {
        self.table[self.index(&w[..self.depth])]
    }

    /// Exact Birkhoff sum numerator over the common denominator.
    pub(crate) fn birkhoff_numerator(&self, w: &[Letter], n: usize) -> i128 {
        (0..n)
            .map(|j| self.exact.nums[self.index(&w[j..j + self.depth])])
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn oscillation(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    pub fn is_constant(&self) -> bool {
        self.oscillation() == 0.0
    }

    /// Modulus of continuity `Var(phi, eps) = sup{|phi(x) - phi(y)| : d(x, y) < eps}`.
    ///
    /// Two depth-`r` cylinders come within `eps` of each other iff their
    /// closest points (equal tails) do, so the supremum is a finite max.
    pub fn variation(&self, sys: &System, eps: f64) -> Result<f64> {
        self.check_system(sys)?;
        let cells = self.table.len();
        if cells > 4096 {
            return Err(Error::budget("variation table pairs", (cells * cells) as u128, 4096 * 4096));
        }
        let p = sys.exponent();
        let target = eps.powf(p);
        let words: Vec<Vec<Letter>> = (0..cells).map(|i| self.word_of(i)).collect();
        let mut best = 0.0f64;
        for (i, u) in words.iter().enumerate() {
            for (k, v) in words.iter().enumerate().skip(i + 1) {
                let gap = (self.table[i] - self.table[k]).abs();
                if gap <= best {
                    continue;
                }
                let s: f64 = u
                    .iter()
                    .zip(v)
                    .enumerate()
                    .map(|(c, (&a, &b))| {
                        sys.weight(c + 1) * (sys.letter_value(a) - sys.letter_value(b)).abs().powf(p)
                    })
                    .sum();
                if s < target {
                    best = gap;
                }
            }
        }
        Ok(best)
    }

    fn word_of(&self, mut index: usize) -> Vec<Letter> {
        let mut w = vec![0 as Letter; self.depth];
        for slot in w.iter_mut().rev() {
            *slot = (index % self.alphabet) as Letter;
            index /= self.alphabet;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> System {
        System::grid_full_shift(m).unwrap()
    }

    fn rl(w: &[Letter]) -> Point {
        Point::repeat_last(w.to_vec()).unwrap()
    }

    fn pz(w: &[Letter]) -> Point {
        Point::pad_zero(w.to_vec()).unwrap()
    }

    #[test]
    fn shift_examples() {
        let s2 = grid(2);
        assert_eq!(s2.shift(&pz(&[0, 1, 0])).unwrap().word(), &[1, 0]);
        assert_eq!(s2.shift(&rl(&[1, 1, 1, 1])).unwrap().word(), &[1, 1, 1]);
        let s3 = grid(3);
        let y = s3.shift(&rl(&[2, 0, 1, 1])).unwrap();
        assert_eq!(y.word(), &[0, 1, 1]);
        assert_eq!(y.tail(), TailConvention::RepeatLast);
        assert_eq!(s2.shift(&pz(&[1])), Err(Error::Underflow));
    }

    #[test]
    fn distance_examples() {
        let s = grid(2);
        assert_eq!(s.distance(&rl(&[0]), &rl(&[1])).unwrap(), 1.0);
        assert_eq!(s.distance(&rl(&[0, 0, 0]), &rl(&[1, 1, 1])).unwrap(), 1.0);
        assert_eq!(s.distance(&rl(&[0, 1, 0]), &rl(&[0, 1, 0])).unwrap(), 0.0);
        assert_eq!(s.distance(&rl(&[0, 0]), &rl(&[0, 1])).unwrap(), 0.5);
    }

    #[test]
    fn tail_sum_matches_deep_truncation() {
        // x = 000..., y = 0111...: compare with an explicit depth-60 sum
        let s = grid(2);
        let deep: f64 = (2..=60).map(|n| 0.5f64.powi(n)).sum();
        let d = s.distance(&pz(&[0]), &rl(&[0, 1])).unwrap();
        assert!((d - deep).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_foreign_letters() {
        let s = grid(2);
        assert!(s.distance(&pz(&[2]), &pz(&[0])).is_err());
    }

    #[test]
    fn dynamical_distance_examples() {
        let s = grid(2);
        let x = pz(&[0, 0, 0]);
        let y = pz(&[0, 0, 1]);
        assert_eq!(s.dynamical_distance(&x, &y, 1).unwrap(), s.distance(&x, &y).unwrap());
        // direct max of three truncated sums: 1/8, 1/4, 1/2
        let direct = [0.125f64, 0.25, 0.5].iter().copied().fold(0.0, f64::max);
        assert_eq!(s.dynamical_distance(&x, &y, 3).unwrap(), direct);
        assert_eq!(s.dynamical_distance(&x, &x, 3).unwrap(), 0.0);
        assert!(matches!(
            s.dynamical_distance(&x, &y, 4),
            Err(Error::Depth { needed: 4, have: 3 })
        ));
    }

    #[test]
    fn birkhoff_examples() {
        let s2 = grid(2);
        let phi = Potential::first_coordinate(&s2);
        assert_eq!(s2.birkhoff_average(&phi, &pz(&[0, 1, 0, 1]), 4).unwrap(), 0.5);
        let c = Potential::constant(&s2, 0.7).unwrap();
        assert!((s2.birkhoff_average(&c, &pz(&[0, 1, 1]), 3).unwrap() - 0.7).abs() < 1e-15);
        let s3 = grid(3);
        let phi3 = Potential::first_coordinate(&s3);
        assert_eq!(s3.birkhoff_average(&phi3, &pz(&[2, 2, 0, 1]), 4).unwrap(), 0.625);
        assert!(matches!(
            s3.birkhoff_average(&phi3, &pz(&[2, 2]), 4),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn truncation_depth_examples() {
        let s = grid(2);
        assert_eq!(s.truncation_depth(0.1, 5), 7);
        assert_eq!(s.truncation_depth(1.0, 5), 4);
        assert_eq!(s.truncation_depth(10.0, 5), 0);
        assert_eq!(s.truncation_depth(50.0, 1), 0);
    }

    #[test]
    fn weighted_shift_distance() {
        let s = System::weighted_shift(NuForm::dyadic(), 1.0, 4, 3).unwrap();
        // letters 0,1,2 -> -1, 0, 1
        let x = pz(&[2, 1, 1, 1]);
        let y = pz(&[1, 1, 1, 1]);
        assert!((s.distance(&x, &y).unwrap() - 0.5).abs() < 1e-15);
        let s2 = System::weighted_shift(NuForm::dyadic(), 2.0, 4, 3).unwrap();
        let d = s2.distance(&pz(&[2, 2, 1, 1]), &pz(&[0, 1, 1, 1])).unwrap();
        assert!((d - (4.0 * 0.5 + 0.25f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn variation_of_first_coordinate() {
        let s = grid(2);
        let phi = Potential::first_coordinate(&s);
        // letters 0 and 1 are 1/2 apart at best
        assert_eq!(phi.variation(&s, 0.5).unwrap(), 0.0);
        assert_eq!(phi.variation(&s, 0.51).unwrap(), 1.0);
    }

    #[test]
    fn nu_form_parse() {
        assert_eq!(NuForm::parse("geometric:0.5").unwrap(), NuForm::dyadic());
        assert!(NuForm::parse("power:0.5").is_err());
        let pw = NuForm::parse("power:2").unwrap();
        assert!(pw.tail_sum(1) >= std::f64::consts::PI.powi(2) / 6.0);
    }
}
