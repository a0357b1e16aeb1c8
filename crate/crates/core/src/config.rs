//! Experiment configuration: flat `key = value` text with dotted section
//! keys and `#` comments. Lists are comma-separated; a Markov matrix lists
//! rows separated by `;`. Every parse error names its line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::counting::{Backend, CountOptions, DEFAULT_CANDIDATE_CAP, DEFAULT_EXACT_CAP};
use crate::dynamics::{NuForm, Potential, System};
use crate::error::{Error, Result};
use crate::measures::FiniteMeasure;
use crate::oracles::DEFAULT_DP_BUDGET;
use crate::specification::DEFAULT_TUPLE_CAP;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Grid { m: usize },
    Weighted { nu: NuForm, p: f64, ell_trunc: usize, grid_m: usize },
}

impl SystemSpec {
    pub fn build(&self) -> Result<System> {
        match *self {
            SystemSpec::Grid { m } => System::grid_full_shift(m),
            SystemSpec::Weighted { nu, p, ell_trunc, grid_m } => System::weighted_shift(nu, p, ell_trunc, grid_m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    FirstCoordinate,
    Constant(f64),
    Table { depth: usize, table: Vec<f64> },
}

impl PotentialSpec {
    pub fn build(&self, sys: &System) -> Result<Potential> {
        match self {
            PotentialSpec::FirstCoordinate => Ok(Potential::first_coordinate(sys)),
            PotentialSpec::Constant(c) => Potential::constant(sys, *c),
            PotentialSpec::Table { depth, table } => Potential::new("table", sys.alphabet_size(), *depth, table.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// The maximum-entropy Bernoulli measure at each `alpha`.
    Gibbs,
    Bernoulli(Vec<f64>),
    Markov(Vec<Vec<f64>>),
}

impl MeasureSpec {
    /// The declared family at level `alpha`.
    pub fn family(&self, sys: &System, phi: &Potential, alpha: f64) -> Result<Vec<FiniteMeasure>> {
        match self {
            MeasureSpec::Gibbs => Ok(vec![crate::measures::gibbs_measure_for_level(sys, phi, alpha)?]),
            MeasureSpec::Bernoulli(p) => Ok(vec![FiniteMeasure::bernoulli(p.clone())?]),
            MeasureSpec::Markov(m) => Ok(vec![FiniteMeasure::markov(m.clone())?]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedules {
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    /// Coupled grid schedule `m_j = 2^j + 1`, `eps_j = g_j / divisor`.
    pub coupled_j: Vec<u32>,
    pub coupled_divisor: f64,
    /// Strictly decreasing.
    pub delta: Vec<f64>,
    /// Strictly increasing.
    pub n: Vec<usize>,
    /// Strictly increasing.
    pub alpha: Vec<f64>,
    /// Bowen cover start length.
    pub k_start: usize,
    /// Spacing of the Bowen `s` grid.
    pub s_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budgets {
    pub candidates: u128,
    pub exact: usize,
    pub dp: u128,
    pub tuples: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoranSpec {
    pub alpha: f64,
    /// Per stage.
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
    pub big_n: Vec<usize>,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub potential: PotentialSpec,
    pub schedule: Schedules,
    pub budget: Budgets,
    pub backend: Backend,
    pub seed: u64,
    /// `|Lambda - H_phi|` allowed in the variational check.
    pub tolerance: f64,
    /// `|Bowen - Lambda|` allowed in the variational check.
    pub bowen_tolerance: f64,
    pub delta_tol: f64,
    pub measure: MeasureSpec,
    pub moran: MoranSpec,
    pub output_dir: PathBuf,
}

struct Entry {
    line: usize,
    value: String,
}

const KEYS: &[&str] = &[
    "kind",
    "m",
    "nu_form",
    "p",
    "ell_trunc",
    "grid_m",
    "potential.kind",
    "potential.depth",
    "potential.table",
    "potential.value",
    "schedule.eps",
    "schedule.coupled_j",
    "schedule.coupled_divisor",
    "schedule.delta",
    "schedule.n",
    "schedule.alpha",
    "schedule.k_start",
    "schedule.s_step",
    "budget.candidates",
    "budget.exact",
    "budget.dp",
    "budget.tuples",
    "count.backend",
    "count.samples",
    "seed",
    "tolerance",
    "bowen_tolerance",
    "delta_tol",
    "measure.kind",
    "measure.p",
    "measure.matrix",
    "moran.alpha",
    "moran.n",
    "moran.delta",
    "moran.big_n",
    "moran.r",
    "output.dir",
];

struct Table {
    entries: BTreeMap<String, Entry>,
    last_line: usize,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected `key = value`, found `{body}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(line, format!("unknown key `{key}`")));
            }
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(Error::config(line, format!("key `{key}` has no value")));
            }
            if let Some(prev) = entries.insert(key.to_string(), Entry { line, value }) {
                return Err(Error::config(line, format!("key `{key}` already set on line {}", prev.line)));
            }
        }
        Ok(Table { entries, last_line })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.last_line, |e| e.line)
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn require(&self, key: &str) -> Result<&Entry> {
        self.raw(key)
            .ok_or_else(|| Error::config(self.last_line, format!("missing required key `{key}`")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|e| {
                e.value
                    .parse()
                    .map_err(|_| Error::config(e.line, format!("cannot parse `{}` for key `{key}`", e.value)))
            })
            .transpose()
    }

    fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key).map(|e| parse_list(&e.value, e.line, key)).transpose()
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::config(line, format!("cannot parse list item `{}` for key `{key}`", t.trim())))
        })
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let t = Table::parse(text)?;
        let kind = t.require("kind")?;
        let system = match kind.value.as_str() {
            "grid" => SystemSpec::Grid {
                m: t.get("m")?.ok_or_else(|| Error::config(kind.line, "grid system needs key `m`"))?,
            },
            "weighted" => {
                let nu = match t.raw("nu_form") {
                    Some(e) => NuForm::parse(&e.value).map_err(|err| Error::config(e.line, err.to_string()))?,
                    None => NuForm::dyadic(),
                };
                SystemSpec::Weighted {
                    nu,
                    p: t.get_or("p", 1.0)?,
                    ell_trunc: t.get_or("ell_trunc", 12)?,
                    grid_m: t.get_or("grid_m", 3)?,
                }
            }
            other => return Err(Error::config(kind.line, format!("unknown system kind `{other}` (grid or weighted)"))),
        };

        let potential = match t.raw("potential.kind").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("first", _)) => PotentialSpec::FirstCoordinate,
            Some(("constant", line)) => PotentialSpec::Constant(
                t.get("potential.value")?
                    .ok_or_else(|| Error::config(line, "constant potential needs `potential.value`"))?,
            ),
            Some(("table", line)) => PotentialSpec::Table {
                depth: t.get_or("potential.depth", 1)?,
                table: t
                    .list("potential.table")?
                    .ok_or_else(|| Error::config(line, "table potential needs `potential.table`"))?,
            },
            Some((other, line)) => {
                return Err(Error::config(line, format!("unknown potential kind `{other}` (first, constant or table)")))
            }
        };

        let schedule = Schedules {
            eps: t.list("schedule.eps")?.unwrap_or_else(|| vec![0.49]),
            coupled_j: t.list("schedule.coupled_j")?.unwrap_or_else(|| vec![2, 3, 4, 5, 6]),
            coupled_divisor: t.get_or("schedule.coupled_divisor", 2.5)?,
            delta: t.list("schedule.delta")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05]),
            n: t.list("schedule.n")?.unwrap_or_else(|| (1..=14).collect()),
            alpha: t
                .list("schedule.alpha")?
                .unwrap_or_else(|| (1..=9).map(|i| i as f64 / 10.0).collect()),
            k_start: t.get_or("schedule.k_start", 1)?,
            s_step: t.get_or("schedule.s_step", 0.01)?,
        };

        let budget = Budgets {
            candidates: t.get_or("budget.candidates", DEFAULT_CANDIDATE_CAP)?,
            exact: t.get_or("budget.exact", DEFAULT_EXACT_CAP)?,
            dp: t.get_or("budget.dp", DEFAULT_DP_BUDGET)?,
            tuples: t.get_or("budget.tuples", DEFAULT_TUPLE_CAP)?,
        };

        let seed = t.get_or("seed", 0u64)?;
        let backend = match t.raw("count.backend").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("auto", _)) => Backend::Auto,
            Some(("exhaustive", _)) => Backend::Exhaustive,
            Some(("bracket", _)) => Backend::PrefixBracket,
            Some(("sampled", _)) => Backend::Sampled {
                samples: t.get_or("count.samples", 100_000)?,
                seed,
            },
            Some((other, line)) => {
                return Err(Error::config(line, format!("unknown backend `{other}` (auto, exhaustive, bracket, sampled)")))
            }
        };

        let measure = match t.raw("measure.kind").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("gibbs", _)) => MeasureSpec::Gibbs,
            Some(("bernoulli", line)) => MeasureSpec::Bernoulli(
                t.list("measure.p")?
                    .ok_or_else(|| Error::config(line, "bernoulli measure needs `measure.p`"))?,
            ),
            Some(("markov", line)) => {
                let e = t
                    .raw("measure.matrix")
                    .ok_or_else(|| Error::config(line, "markov measure needs `measure.matrix`"))?;
                MeasureSpec::Markov(
                    e.value
                        .split(';')
                        .map(|row| parse_list(row, e.line, "measure.matrix"))
                        .collect::<Result<_>>()?,
                )
            }
            Some((other, line)) => {
                return Err(Error::config(line, format!("unknown measure kind `{other}` (gibbs, bernoulli, markov)")))
            }
        };

        let moran = MoranSpec {
            alpha: t.get_or("moran.alpha", 0.5)?,
            n: t.list("moran.n")?.unwrap_or_else(|| vec![10]),
            delta: t.list("moran.delta")?.unwrap_or_else(|| vec![0.2]),
            big_n: t.list("moran.big_n")?.unwrap_or_else(|| vec![3]),
            r: t.get_or("moran.r", 0.9)?,
        };

        let cfg = ExperimentConfig {
            system,
            potential,
            schedule,
            budget,
            backend,
            seed,
            tolerance: t.get_or("tolerance", 0.07)?,
            bowen_tolerance: t.get_or("bowen_tolerance", 0.08)?,
            delta_tol: t.get_or("delta_tol", crate::spectra::DEFAULT_DELTA_TOL)?,
            measure,
            moran,
            output_dir: t.get_or("output.dir", PathBuf::from("out"))?,
        };
        cfg.validate(&t)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text)
    }

    fn validate(&self, t: &Table) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::config(t.line_of(key), msg));
        let s = &self.schedule;
        if s.eps.is_empty() || s.eps.iter().any(|&e| !(e > 0.0)) || s.eps.windows(2).any(|w| w[0] <= w[1]) {
            return fail("schedule.eps", "schedule.eps must be positive and strictly decreasing".into());
        }
        if s.delta.is_empty() || s.delta.iter().any(|&d| !(d > 0.0)) || s.delta.windows(2).any(|w| w[0] <= w[1]) {
            return fail("schedule.delta", "schedule.delta must be positive and strictly decreasing".into());
        }
        if s.n.is_empty() || s.n[0] == 0 || s.n.windows(2).any(|w| w[0] >= w[1]) {
            return fail("schedule.n", "schedule.n must be positive and strictly increasing".into());
        }
        if s.alpha.is_empty() || s.alpha.windows(2).any(|w| w[0] >= w[1]) {
            return fail("schedule.alpha", "schedule.alpha must be strictly increasing".into());
        }
        if s.coupled_j.is_empty() || s.coupled_j.windows(2).any(|w| w[0] >= w[1]) {
            return fail("schedule.coupled_j", "schedule.coupled_j must be strictly increasing".into());
        }
        if !(s.coupled_divisor > 2.0) {
            return fail("schedule.coupled_divisor", "schedule.coupled_divisor must exceed 2 so eps_j < g_j / 2".into());
        }
        if s.k_start == 0 {
            return fail("schedule.k_start", "schedule.k_start must be positive".into());
        }
        if !(s.s_step > 0.0) {
            return fail("schedule.s_step", "schedule.s_step must be positive".into());
        }
        let b = &self.budget;
        for (key, zero) in [
            ("budget.candidates", b.candidates == 0),
            ("budget.exact", b.exact == 0),
            ("budget.dp", b.dp == 0),
            ("budget.tuples", b.tuples == 0),
        ] {
            if zero {
                return fail(key, format!("{key} must be positive"));
            }
        }
        if !(self.tolerance > 0.0) {
            return fail("tolerance", "tolerance must be positive".into());
        }
        if !(self.bowen_tolerance > 0.0) {
            return fail("bowen_tolerance", "bowen_tolerance must be positive".into());
        }
        if !(self.delta_tol > 0.0) {
            return fail("delta_tol", "delta_tol must be positive".into());
        }
        let m = &self.moran;
        if m.n.is_empty() || m.n.len() != m.delta.len() || m.n.len() != m.big_n.len() {
            return fail("moran.n", "moran.n, moran.delta and moran.big_n need one entry per stage".into());
        }
        if m.n.iter().any(|&n| n == 0) || m.delta.iter().any(|&d| !(d > 0.0)) {
            return fail("moran.n", "moran stage lengths and deltas must be positive".into());
        }
        if !(m.r > 0.0 && m.r < 1.0) {
            return fail("moran.r", "moran.r must lie in (0, 1)".into());
        }
        let sys = self
            .system
            .build()
            .map_err(|e| Error::config(t.line_of("kind"), e.to_string()))?;
        self.potential
            .build(&sys)
            .map_err(|e| Error::config(t.line_of("potential.kind"), e.to_string()))?;
        Ok(())
    }

    pub fn system(&self) -> Result<System> {
        self.system.build()
    }

    pub fn potential(&self, sys: &System) -> Result<Potential> {
        self.potential.build(sys)
    }

    pub fn count_options(&self, timings: bool) -> CountOptions {
        CountOptions {
            backend: self.backend,
            candidate_cap: self.budget.candidates,
            exact_cap: self.budget.exact,
            timings,
        }
    }

    /// Bowen `s` grid from 0 to `log m` (plus a step) at the configured spacing.
    pub fn s_grid(&self, sys: &System) -> Vec<f64> {
        let top = (sys.alphabet_size() as f64).ln() + self.schedule.s_step;
        let steps = (top / self.schedule.s_step).ceil() as usize;
        (0..=steps).map(|i| i as f64 * self.schedule.s_step).collect()
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.system {
            SystemSpec::Grid { m } => {
                kv("kind", "grid".into());
                kv("m", m.to_string());
            }
            SystemSpec::Weighted { nu, p, ell_trunc, grid_m } => {
                kv("kind", "weighted".into());
                kv("nu_form", nu.to_string());
                kv("p", p.to_string());
                kv("ell_trunc", ell_trunc.to_string());
                kv("grid_m", grid_m.to_string());
            }
        }
        match &self.potential {
            PotentialSpec::FirstCoordinate => kv("potential.kind", "first".into()),
            PotentialSpec::Constant(c) => {
                kv("potential.kind", "constant".into());
                kv("potential.value", c.to_string());
            }
            PotentialSpec::Table { depth, table } => {
                kv("potential.kind", "table".into());
                kv("potential.depth", depth.to_string());
                kv("potential.table", join(table));
            }
        }
        let s = &self.schedule;
        kv("schedule.eps", join(&s.eps));
        kv("schedule.coupled_j", join(&s.coupled_j));
        kv("schedule.coupled_divisor", s.coupled_divisor.to_string());
        kv("schedule.delta", join(&s.delta));
        kv("schedule.n", join(&s.n));
        kv("schedule.alpha", join(&s.alpha));
        kv("schedule.k_start", s.k_start.to_string());
        kv("schedule.s_step", s.s_step.to_string());
        let b = &self.budget;
        kv("budget.candidates", b.candidates.to_string());
        kv("budget.exact", b.exact.to_string());
        kv("budget.dp", b.dp.to_string());
        kv("budget.tuples", b.tuples.to_string());
        match self.backend {
            Backend::Auto => kv("count.backend", "auto".into()),
            Backend::Exhaustive => kv("count.backend", "exhaustive".into()),
            Backend::PrefixBracket => kv("count.backend", "bracket".into()),
            Backend::Sampled { samples, .. } => {
                kv("count.backend", "sampled".into());
                kv("count.samples", samples.to_string());
            }
        }
        kv("seed", self.seed.to_string());
        kv("tolerance", self.tolerance.to_string());
        kv("bowen_tolerance", self.bowen_tolerance.to_string());
        kv("delta_tol", self.delta_tol.to_string());
        match &self.measure {
            MeasureSpec::Gibbs => kv("measure.kind", "gibbs".into()),
            MeasureSpec::Bernoulli(p) => {
                kv("measure.kind", "bernoulli".into());
                kv("measure.p", join(p));
            }
            MeasureSpec::Markov(rows) => {
                kv("measure.kind", "markov".into());
                kv("measure.matrix", rows.iter().map(|r| join(r)).collect::<Vec<_>>().join("; "));
            }
        }
        let m = &self.moran;
        kv("moran.alpha", m.alpha.to_string());
        kv("moran.n", join(&m.n));
        kv("moran.delta", join(&m.delta));
        kv("moran.big_n", join(&m.big_n));
        kv("moran.r", m.r.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_grid_config() {
        let c = ExperimentConfig::parse("# two letters\nkind = grid\nm = 2\n").unwrap();
        assert_eq!(c.system, SystemSpec::Grid { m: 2 });
        assert_eq!(c.potential, PotentialSpec::FirstCoordinate);
        assert_eq!(c.schedule.alpha.len(), 9);
        assert_eq!(c.system().unwrap().alphabet_size(), 2);
    }

    #[test]
    fn round_trip() {
        let text = "kind = weighted\nnu_form = power:2.5\np = 1.5\nell_trunc = 9\ngrid_m = 4\n\
                    potential.kind = table\npotential.depth = 1\npotential.table = 0.1, -0.25, 3, 1e-9\n\
                    schedule.eps = 0.3, 0.1\nschedule.n = 2, 4, 6\ncount.backend = sampled\ncount.samples = 500\n\
                    seed = 7\nmeasure.kind = markov\nmeasure.matrix = 0.9, 0.1; 0.2, 0.8\n\
                    moran.n = 4, 5\nmoran.delta = 0.2, 0.1\nmoran.big_n = 2, 3\noutput.dir = results/x\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.backend, Backend::Sampled { samples: 500, seed: 7 });
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_text(), c.to_text());
    }

    #[test]
    fn errors_name_lines_and_keys() {
        let e = ExperimentConfig::parse("m = 2\nseed = 1\n").unwrap_err();
        assert!(matches!(&e, Error::Config { message, .. } if message.contains("`kind`")), "{e}");
        let e = ExperimentConfig::parse("kind = grid\nm = 2\nschedule.eps = 0.1, 0.2\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
        let e = ExperimentConfig::parse("kind = grid\nm = two\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = ExperimentConfig::parse("kind = grid\nm = 2\nbogus = 1\n").unwrap_err();
        assert!(matches!(&e, Error::Config { line: 3, message } if message.contains("bogus")));
        let e = ExperimentConfig::parse("kind = grid\nm = 2\nm = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        let e = ExperimentConfig::parse("kind = grid\nm = 2\npotential.kind = table\npotential.table = 1, 2, 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
        let e = ExperimentConfig::parse("kind = grid\nm = 2\nbudget.candidates = 0\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        assert!(ExperimentConfig::parse("kind = grid\nm = 2\nnoequals\n").is_err());
    }

    #[test]
    fn s_grid_covers_log_m() {
        let c = ExperimentConfig::parse("kind = grid\nm = 3\nschedule.s_step = 0.05\n").unwrap();
        let g = c.s_grid(&c.system().unwrap());
        assert_eq!(g[0], 0.0);
        assert!(*g.last().unwrap() > 3f64.ln());
    }
}
