//! Finite measures on symbolic systems (empirical, Bernoulli, Markov),
//! cylinder partitions, partition entropy and entropy rates, and the
//! measure-theoretic level spectrum `H_phi` at scale `eps`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::counting::SeparatedSet;
use crate::dynamics::{Letter, Point, Potential, System, SystemKind};
use crate::error::{Error, Result};
use crate::oracles::{constrained_max_entropy, shannon};
use crate::spectra::{Method, RateEstimate};

/// Cylinder-mass enumeration cap before closed forms take over.
const ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeasureKind {
    Empirical {
        atoms: Vec<(Point, f64)>,
        /// Window half-width the atoms were selected with, if any.
        tolerance: Option<f64>,
    },
    Bernoulli {
        p: Vec<f64>,
    },
    Markov {
        matrix: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMeasure {
    pub label: String,
    pub alphabet: usize,
    pub kind: MeasureKind,
}

fn check_probability(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::domain(format!("{what} has negative or non-finite entries")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl FiniteMeasure {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        check_probability(&p, "probability vector")?;
        Ok(FiniteMeasure {
            label: format!("bernoulli{p:?}"),
            alphabet: p.len(),
            kind: MeasureKind::Bernoulli { p },
        })
    }

    /// Markov chain with its stationary vector, solved from
    /// `(P^T - I) pi = 0`, `sum pi = 1`.
    pub fn markov(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = matrix.len();
        if m == 0 || matrix.iter().any(|row| row.len() != m) {
            return Err(Error::domain("transition matrix must be square and nonempty"));
        }
        for row in &matrix {
            check_probability(row, "transition row")?;
        }
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = matrix[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(m);
        b[m - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::domain("transition matrix has no unique stationary vector"))?;
        let stationary: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
        for j in 0..m {
            let v: f64 = (0..m).map(|i| stationary[i] * matrix[i][j]).sum();
            if (v - stationary[j]).abs() > 1e-10 {
                return Err(Error::domain("stationary vector failed the invariance check"));
            }
        }
        Ok(FiniteMeasure {
            label: format!("markov{matrix:?}"),
            alphabet: m,
            kind: MeasureKind::Markov { matrix, stationary },
        })
    }

    pub fn empirical(atoms: Vec<(Point, f64)>, alphabet: usize, tolerance: Option<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("empirical measure needs at least one atom"));
        }
        let weights: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        check_probability(&weights, "atom weights")?;
        if atoms.iter().any(|(x, _)| x.word().iter().any(|&l| l as usize >= alphabet)) {
            return Err(Error::domain("atom outside the alphabet"));
        }
        Ok(FiniteMeasure {
            label: format!("empirical({} atoms)", atoms.len()),
            alphabet,
            kind: MeasureKind::Empirical { atoms, tolerance },
        })
    }

    /// Uniform atoms on the given points.
    pub fn uniform_atoms(points: &[Point], alphabet: usize, tolerance: Option<f64>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        FiniteMeasure::empirical(points.iter().map(|p| (p.clone(), w)).collect(), alphabet, tolerance)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_invariant(&self) -> bool {
        !matches!(self.kind, MeasureKind::Empirical { .. })
    }

    pub fn atoms(&self) -> Option<&[(Point, f64)]> {
        match &self.kind {
            MeasureKind::Empirical { atoms, .. } => Some(atoms),
            _ => None,
        }
    }

    /// Mass of the cylinder `[w]`.
    pub fn cylinder_mass(&self, w: &[Letter]) -> f64 {
        match &self.kind {
            MeasureKind::Bernoulli { p } => w.iter().map(|&l| p[l as usize]).product(),
            MeasureKind::Markov { matrix, stationary } => match w.split_first() {
                None => 1.0,
                Some((&first, rest)) => {
                    let mut mass = stationary[first as usize];
                    let mut prev = first;
                    for &l in rest {
                        mass *= matrix[prev as usize][l as usize];
                        prev = l;
                    }
                    mass
                }
            },
            MeasureKind::Empirical { atoms, .. } => atoms
                .iter()
                .filter(|(x, _)| (0..w.len()).all(|i| x.letter(i) == w[i]))
                .map(|a| a.1)
                .sum(),
        }
    }

    /// `int phi d mu`, exact finite sums for every kind.
    pub fn integrate(&self, phi: &Potential) -> Result<f64> {
        if phi.alphabet() != self.alphabet {
            return Err(Error::SystemMismatch("potential and measure alphabets differ".into()));
        }
        match &self.kind {
            MeasureKind::Empirical { atoms, .. } => Ok(atoms
                .iter()
                .map(|(x, w)| w * phi.eval_word(&x.prefix(phi.depth())))
                .sum()),
            _ => {
                let r = phi.depth();
                let cells = self.alphabet.pow(r as u32);
                Ok((0..cells)
                    .map(|i| {
                        let w = word_of(i, self.alphabet, r);
                        self.cylinder_mass(&w) * phi.table()[i]
                    })
                    .sum())
            }
        }
    }
}

fn word_of(mut index: usize, m: usize, len: usize) -> Vec<Letter> {
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = (index % m) as Letter;
        index /= m;
    }
    w
}

/// The partition into depth-`r` cylinders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Partition {
    pub depth: usize,
    pub alphabet: usize,
    pub diameter_bound: f64,
}

impl Partition {
    pub fn cells(&self) -> u128 {
        (self.alphabet as u128).saturating_pow(self.depth as u32)
    }
}

/// Diameter of a depth-`r` cylinder: coordinates past `r` are free.
pub fn cylinder_diameter(sys: &System, r: usize) -> f64 {
    match sys.kind() {
        SystemKind::GridFullShift { .. } => 0.5f64.powi(r as i32) * sys.letter_diameter(),
        SystemKind::WeightedShift { nu, p, ell_trunc, .. } => {
            if r >= *ell_trunc {
                0.0
            } else {
                let mass = nu.tail_sum(r + 1) - nu.tail_sum(ell_trunc + 1);
                (sys.letter_diameter().powf(*p) * mass).powf(1.0 / p)
            }
        }
    }
}

/// The coarsest cylinder partition (depth at least 1) with diameter `< eps`.
pub fn cylinder_partition(sys: &System, eps: f64) -> Result<Partition> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    let mut r = 1usize;
    while cylinder_diameter(sys, r) >= eps {
        r += 1;
        if r > 4096 {
            return Err(Error::domain("no cylinder depth reaches this scale"));
        }
    }
    Ok(Partition {
        depth: r,
        alphabet: sys.alphabet_size(),
        diameter_bound: cylinder_diameter(sys, r),
    })
}

/// `xi^n = xi v f^{-1} xi v ... v f^{-(n-1)} xi`: cylinders of depth `r + n - 1`.
pub fn refine(xi: &Partition, n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let depth = xi.depth + n - 1;
    Ok(Partition {
        depth,
        alphabet: xi.alphabet,
        // a depth-(r + n - 1) cylinder only shrinks the diameter
        diameter_bound: xi.diameter_bound,
    })
}

/// `H_mu(xi) = -sum mu(C) log mu(C)`.
pub fn partition_entropy(mu: &FiniteMeasure, xi: &Partition) -> Result<f64> {
    if mu.alphabet != xi.alphabet {
        return Err(Error::SystemMismatch("measure and partition alphabets differ".into()));
    }
    let r = xi.depth;
    match &mu.kind {
        MeasureKind::Empirical { atoms, .. } => {
            let mut cells: HashMap<Vec<Letter>, f64> = HashMap::new();
            for (x, w) in atoms {
                *cells.entry(x.prefix(r)).or_insert(0.0) += w;
            }
            let mut masses: Vec<f64> = cells.into_values().collect();
            masses.sort_by(f64::total_cmp);
            Ok(shannon(&masses))
        }
        _ if xi.cells() <= ENUMERATION_CAP as u128 => {
            let cells = xi.cells() as usize;
            let masses: Vec<f64> = (0..cells)
                .map(|i| mu.cylinder_mass(&word_of(i, mu.alphabet, r)))
                .collect();
            Ok(shannon(&masses))
        }
        MeasureKind::Bernoulli { p } => Ok(r as f64 * shannon(p)),
        MeasureKind::Markov { matrix, stationary } => {
            Ok(shannon(stationary) + (r as f64 - 1.0) * markov_entropy(matrix, stationary))
        }
    }
}

/// `-sum_i pi_i sum_j P_ij log P_ij`.
pub fn markov_entropy(matrix: &[Vec<f64>], stationary: &[f64]) -> f64 {
    stationary
        .iter()
        .zip(matrix)
        .map(|(pi, row)| pi * shannon(row))
        .sum()
}

/// `h_mu(f, xi)` from the conditional increments `H(xi^n) - H(xi^{n-1})`.
///
/// For invariant measures the increments decrease to the rate and equal it
/// exactly for Bernoulli and Markov measures once `n >= 2`; `(1/n) H(xi^n)` is
/// kept as a cross-check. Empirical measures get the finite-`n` value
/// `(1/n) H(xi^n)` and a non-invariance flag.
pub fn entropy_rate(mu: &FiniteMeasure, xi: &Partition, n_max: usize) -> Result<RateEstimate> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let h: Vec<f64> = (1..=n_max)
        .map(|n| partition_entropy(mu, &refine(xi, n)?))
        .collect::<Result<_>>()?;
    let averages: Vec<Option<f64>> = h.iter().enumerate().map(|(i, v)| Some(v / (i + 1) as f64)).collect();
    let mut flags = Vec::new();
    let value = if !mu.is_invariant() {
        flags.push("non-invariant".to_string());
        h[n_max - 1] / n_max as f64
    } else if n_max == 1 {
        h[0]
    } else {
        h[n_max - 1] - h[n_max - 2]
    };
    let value = value.max(0.0);
    let tail = &averages[n_max / 2..];
    Ok(RateEstimate {
        value,
        method: Method::TailMin,
        n_schedule: (1..=n_max).collect(),
        residual: tail.iter().flatten().map(|a| (a - value).abs()).fold(0.0, f64::max),
        lower_flag: false,
        flags,
        tail_max: tail.iter().flatten().copied().reduce(f64::max),
        rates: averages,
        upper: None,
        certificate: "cylinder-partition".into(),
    })
}

/// The maximum-entropy Bernoulli measure with `int phi = alpha`.
pub fn gibbs_measure_for_level(sys: &System, phi: &Potential, alpha: f64) -> Result<FiniteMeasure> {
    phi.check_system(sys)?;
    if phi.depth() != 1 {
        return Err(Error::domain("Gibbs level measures need a depth-1 potential"));
    }
    let (lo, hi) = (phi.min_value(), phi.max_value());
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if alpha < lo - tol || alpha > hi + tol {
        return Err(Error::EmptyLevel {
            alpha,
            nearest: alpha.clamp(lo, hi),
        });
    }
    let sol = constrained_max_entropy(phi.table(), alpha)?;
    let total: f64 = sol.p.iter().sum();
    let p: Vec<f64> = sol.p.iter().map(|x| x / total).collect();
    Ok(FiniteMeasure::bernoulli(p)?.with_label(format!("gibbs(alpha={alpha})")))
}

/// `(sigma, mu)`: uniform atoms on the set, and their average over the first
/// `n` shifts.
pub fn empirical_from_separated(set: &SeparatedSet, n: usize, alphabet: usize, tolerance: Option<f64>) -> Result<(FiniteMeasure, FiniteMeasure)> {
    if set.is_empty() {
        return Err(Error::domain("empty separated set"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if let Some(x) = set.points.iter().find(|x| x.depth() < n) {
        return Err(Error::Depth {
            needed: n,
            have: x.depth(),
        });
    }
    let sigma = FiniteMeasure::uniform_atoms(&set.points, alphabet, tolerance)?.with_label("sigma");
    let w = 1.0 / (set.count() * n) as f64;
    let mut atoms = Vec::with_capacity(set.count() * n);
    for x in &set.points {
        for i in 0..n {
            atoms.push((Point::new(x.word()[i..].to_vec(), x.tail())?, w));
        }
    }
    // sum of equal weights can drift from 1 by rounding
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    let mu = FiniteMeasure::empirical(atoms, alphabet, tolerance)?.with_label("orbit-average");
    Ok((sigma, mu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureRow {
    pub label: String,
    pub integral: f64,
    pub rate: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HphiEstimate {
    pub estimate: RateEstimate,
    pub per_measure: Vec<MeasureRow>,
    pub partition: Partition,
}

/// `sup_mu inf_{|xi| < eps} h_mu(f, xi)` over a declared family, with the
/// infimum taken on the coarsest cylinder partition below `eps`.
pub fn h_phi_at_scale(
    sys: &System,
    phi: &Potential,
    alpha: f64,
    eps: f64,
    family: &[FiniteMeasure],
    n_max: usize,
) -> Result<HphiEstimate> {
    if family.is_empty() {
        return Err(Error::domain("empty measure family"));
    }
    phi.check_system(sys)?;
    let xi = cylinder_partition(sys, eps)?;
    let mut rows = Vec::new();
    let mut best: Option<RateEstimate> = None;
    for mu in family {
        let integral = mu.integrate(phi)?;
        let allowed = match &mu.kind {
            MeasureKind::Empirical { tolerance, .. } => tolerance.unwrap_or(1e-9),
            _ => 1e-9,
        };
        if (integral - alpha).abs() > allowed + 1e-12 {
            return Err(Error::Contract(format!(
                "{}: integral {integral} is not within {allowed} of alpha = {alpha}",
                mu.label
            )));
        }
        let mut est = entropy_rate(mu, &xi, n_max)?;
        if !mu.is_invariant() {
            est.flags.push("upper-bound-partition-inf".into());
        }
        rows.push(MeasureRow {
            label: mu.label.clone(),
            integral,
            rate: est.value,
            flags: est.flags.clone(),
        });
        if best.as_ref().map_or(true, |b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(HphiEstimate {
        estimate: best.expect("nonempty family"),
        per_measure: rows,
        partition: xi,
    })
}

/// Shannon entropy of uniform atoms on a separated set over the refined
/// cylinder partition below its scale, next to `log #set`. The two agree
/// when no refined cell holds two members.
pub fn separated_set_entropy(sys: &System, set: &SeparatedSet) -> Result<(f64, f64)> {
    let xi = cylinder_partition(sys, set.eps)?;
    let refined = refine(&xi, set.n)?;
    let sigma = FiniteMeasure::uniform_atoms(&set.points, sys.alphabet_size(), None)?;
    Ok((partition_entropy(&sigma, &refined)?, (set.count() as f64).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{m_count, CountOptions, LevelWindow};

    fn grid(m: usize) -> System {
        System::grid_full_shift(m).unwrap()
    }

    fn h2(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn partition_examples() {
        let s = grid(2);
        assert_eq!(cylinder_partition(&s, 1.5).unwrap().depth, 1);
        let xi = cylinder_partition(&s, 0.25).unwrap();
        assert_eq!(xi.depth, 3);
        assert!(cylinder_partition(&s, 0.0).is_err());
        assert_eq!(refine(&xi, 1).unwrap().depth, 3);
        let one = cylinder_partition(&s, 1.5).unwrap();
        assert_eq!(refine(&one, 3).unwrap().depth, 3);
        let two = Partition { depth: 2, ..one };
        assert_eq!(refine(&two, 2).unwrap().depth, 3);
    }

    #[test]
    fn cylinder_diameter_is_attained_and_not_exceeded() {
        let s = grid(2);
        let r = 3;
        let mut worst = 0.0f64;
        for a in 0u32..(1 << 8) {
            for b in 0u32..(1 << 8) {
                let x: Vec<Letter> = (0..r + 8).map(|i| if i < r { 1 } else { (a >> (i - r) & 1) as Letter }).collect();
                let y: Vec<Letter> = (0..r + 8).map(|i| if i < r { 1 } else { (b >> (i - r) & 1) as Letter }).collect();
                let d = s
                    .distance(&Point::repeat_last(x).unwrap(), &Point::repeat_last(y).unwrap())
                    .unwrap();
                worst = worst.max(d);
            }
        }
        assert!(worst <= cylinder_diameter(&s, r) + 1e-15);
        assert!(worst >= cylinder_diameter(&s, r) - 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let s = grid(2);
        let xi = cylinder_partition(&s, 1.5).unwrap();
        let point = FiniteMeasure::bernoulli(vec![1.0, 0.0]).unwrap();
        assert_eq!(partition_entropy(&point, &xi).unwrap(), 0.0);
        let fair = FiniteMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert!((partition_entropy(&fair, &xi).unwrap() - 2f64.ln()).abs() < 1e-15);
        let skew = FiniteMeasure::bernoulli(vec![0.75, 0.25]).unwrap();
        assert!((partition_entropy(&skew, &xi).unwrap() - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn entropy_rate_examples() {
        let s = grid(2);
        let xi = cylinder_partition(&s, 1.5).unwrap();
        for n_max in [1, 3, 6] {
            let fair = FiniteMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
            assert!((entropy_rate(&fair, &xi, n_max).unwrap().value - 2f64.ln()).abs() < 1e-12);
        }
        let skew = FiniteMeasure::bernoulli(vec![0.75, 0.25]).unwrap();
        assert!((entropy_rate(&skew, &xi, 5).unwrap().value - h2(0.25)).abs() < 1e-12);
        let chain = FiniteMeasure::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let r = entropy_rate(&chain, &xi, 8).unwrap();
        assert!((r.value - h2(0.1)).abs() < 1e-12);
        assert!((r.value - 0.3251).abs() < 1e-4);
    }

    #[test]
    fn markov_stationary_vector() {
        let chain = FiniteMeasure::markov(vec![vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5], vec![0.0, 1.0, 0.0]]).unwrap();
        if let MeasureKind::Markov { stationary, matrix } = &chain.kind {
            for j in 0..3 {
                let v: f64 = (0..3).map(|i| stationary[i] * matrix[i][j]).sum();
                assert!((v - stationary[j]).abs() < 1e-12);
            }
        } else {
            unreachable!();
        }
        assert!(FiniteMeasure::markov(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let s2 = grid(2);
        let phi = Potential::first_coordinate(&s2);
        let g = gibbs_measure_for_level(&s2, &phi, 0.5).unwrap();
        assert!(matches!(&g.kind, MeasureKind::Bernoulli { p } if (p[0] - 0.5).abs() < 1e-12));
        let g = gibbs_measure_for_level(&s2, &phi, 0.25).unwrap();
        assert!((g.integrate(&phi).unwrap() - 0.25).abs() < 1e-10);
        let s3 = grid(3);
        let g = gibbs_measure_for_level(&s3, &Potential::first_coordinate(&s3), 0.5).unwrap();
        let xi = cylinder_partition(&s3, 1.5).unwrap();
        assert!((partition_entropy(&g, &xi).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(matches!(gibbs_measure_for_level(&s2, &phi, 1.5), Err(Error::EmptyLevel { .. })));
    }

    #[test]
    fn empirical_examples() {
        let s = grid(2);
        let x = Point::pad_zero(vec![0, 1, 1]).unwrap();
        let one = SeparatedSet {
            points: vec![x.clone()],
            n: 1,
            eps: 0.1,
            certificate: crate::counting::Certificate::GreedyMaximal,
        };
        let (sigma, mu) = empirical_from_separated(&one, 1, 2, None).unwrap();
        assert_eq!(sigma.atoms().unwrap().len(), 1);
        assert_eq!(mu.atoms().unwrap()[0].1, 1.0);

        let lw = LevelWindow::new(Potential::first_coordinate(&s), 0.5, 0.2, 4).unwrap();
        let set = m_count(&s, &lw, 0.49, &CountOptions::default()).unwrap();
        assert_eq!(set.count(), 6);
        let (_, mu) = empirical_from_separated(&set, 4, 2, Some(0.2)).unwrap();
        let integral = mu.integrate(&lw.phi).unwrap();
        assert!((integral - 0.5).abs() < 0.2);
    }

    #[test]
    fn h_phi_examples() {
        let s = grid(2);
        let phi = Potential::first_coordinate(&s);
        for (alpha, want) in [(0.5, 2f64.ln()), (0.25, h2(0.25))] {
            let g = gibbs_measure_for_level(&s, &phi, alpha).unwrap();
            let h = h_phi_at_scale(&s, &phi, alpha, 0.49, &[g], 4).unwrap();
            assert!((h.estimate.value - want).abs() < 1e-9);
        }
        let fair = FiniteMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert!(matches!(h_phi_at_scale(&s, &phi, 0.25, 0.49, &[fair], 4), Err(Error::Contract(_))));
        assert!(h_phi_at_scale(&s, &phi, 0.25, 0.49, &[], 4).is_err());
    }

    #[test]
    fn separated_set_entropy_is_log_count() {
        let s = grid(2);
        let lw = LevelWindow::new(Potential::first_coordinate(&s), 0.5, 0.3, 6).unwrap();
        for eps in [0.49, 0.3, 0.2] {
            let set = m_count(&s, &lw, eps, &CountOptions::default()).unwrap();
            let (h, log_count) = separated_set_entropy(&s, &set).unwrap();
            assert!((h - log_count).abs() < 1e-9, "eps={eps}");
        }
    }
}
