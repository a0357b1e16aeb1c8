use levelscale::config::ExperimentConfig;
use levelscale::counting::{
    enumerate_candidates, exact_max_separated, greedy_maximal_separated, m_count, n_count, CountOptions, LevelWindow,
};
use levelscale::measures::{cylinder_partition, partition_entropy, refine, FiniteMeasure};
use levelscale::oracles::{constrained_max_entropy, shannon};
use levelscale::{Letter, NuForm, Point, Potential, System};
use proptest::prelude::*;

fn word(m: usize, len: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(0..m as Letter, len)
}

fn systems() -> impl Strategy<Value = System> {
    prop_oneof![
        (2usize..6).prop_map(|m| System::grid_full_shift(m).unwrap()),
        (1usize..3, 8usize..14).prop_map(|(p, ell)| System::weighted_shift(NuForm::dyadic(), p as f64, ell, 3).unwrap()),
    ]
}

fn pair(len: usize) -> impl Strategy<Value = (System, Vec<Letter>, Vec<Letter>)> {
    systems().prop_flat_map(move |s| {
        let m = s.alphabet_size();
        (Just(s), word(m, len), word(m, len))
    })
}

fn probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_symmetric_and_vanishes_on_diagonal((s, a, b) in pair(16)) {
        let x = Point::pad_zero(a).unwrap();
        let y = Point::pad_zero(b).unwrap();
        prop_assert_eq!(s.distance(&x, &y).unwrap(), s.distance(&y, &x).unwrap());
        prop_assert_eq!(s.distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn dynamical_distance_is_monotone_and_recursive((s, a, b) in pair(16), n in 1usize..14) {
        let x = Point::repeat_last(a).unwrap();
        let y = Point::repeat_last(b).unwrap();
        let dn = s.dynamical_distance(&x, &y, n).unwrap();
        let dn1 = s.dynamical_distance(&x, &y, n + 1).unwrap();
        prop_assert!(dn <= dn1);
        let fx = s.shift(&x).unwrap();
        let fy = s.shift(&y).unwrap();
        let rec = s.distance(&x, &y).unwrap().max(s.dynamical_distance(&fx, &fy, n).unwrap());
        prop_assert!((dn1 - rec).abs() <= 1e-12);
    }

    #[test]
    fn grid_words_differing_in_window_are_gap_separated(m in 2usize..6, a in word(5, 10), i in 0usize..6, n in 1usize..7) {
        let s = System::grid_full_shift(m).unwrap();
        let a: Vec<Letter> = a.into_iter().map(|c| c % m as Letter).collect();
        let mut b = a.clone();
        let i = i % n;
        b[i] = (b[i] + 1) % m as Letter;
        let x = Point::pad_zero(a).unwrap();
        let y = Point::pad_zero(b).unwrap();
        prop_assert!(s.dynamical_distance(&x, &y, n).unwrap() >= 0.5 * s.letter_gap() - 1e-12);
    }

    #[test]
    fn birkhoff_sums_telescope(m in 2usize..5, a in word(4, 14), n in 2usize..10) {
        let s = System::grid_full_shift(m).unwrap();
        let a: Vec<Letter> = a.into_iter().map(|c| c % m as Letter).collect();
        let phi = Potential::first_coordinate(&s);
        let x = Point::pad_zero(a).unwrap();
        let total = n as f64 * s.birkhoff_average(&phi, &x, n).unwrap();
        let head = s.birkhoff_average(&phi, &x, 1).unwrap();
        let rest = (n - 1) as f64 * s.birkhoff_average(&phi, &s.shift(&x).unwrap(), n - 1).unwrap();
        prop_assert!((total - head - rest).abs() <= 1e-9);
    }

    #[test]
    fn separated_and_spanning_counts_sandwich(m in 2usize..4, eps in 0.15f64..0.49, alpha in 0.2f64..0.8, delta in 0.1f64..0.4, n in 1usize..4) {
        let s = System::grid_full_shift(m).unwrap();
        let opts = CountOptions::default();
        let lw = LevelWindow::new(Potential::first_coordinate(&s), alpha, delta, n).unwrap();
        let big_m = m_count(&s, &lw, eps, &opts).unwrap().count();
        prop_assert!(n_count(&s, &lw, eps, &opts).unwrap() <= big_m);
        prop_assert!(big_m <= n_count(&s, &lw, eps / 2.0, &opts).unwrap());
    }

    #[test]
    fn greedy_never_beats_exact(m in 2usize..4, eps in 0.1f64..0.49, n in 1usize..4, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..18)) {
        let s = System::grid_full_shift(m).unwrap();
        let all = enumerate_candidates(&s, n, eps, 1 << 17).unwrap();
        let mut cands: Vec<Point> = picks.iter().map(|i| i.get(&all).clone()).collect();
        cands.dedup();
        let exact = exact_max_separated(&s, &cands, n, eps, 24).unwrap().count();
        let greedy = greedy_maximal_separated(&s, &cands, n, eps).unwrap().count();
        prop_assert!(greedy <= exact);
    }

    #[test]
    fn refined_partition_entropy_is_subadditive(p in probs(3), rows in prop::collection::vec(probs(3), 3), a in 1usize..5, b in 1usize..5) {
        let s = System::grid_full_shift(3).unwrap();
        let xi = cylinder_partition(&s, 0.5).unwrap();
        for mu in [FiniteMeasure::bernoulli(p.clone()).unwrap(), FiniteMeasure::markov(rows.clone()).unwrap()] {
            let h = |n: usize| partition_entropy(&mu, &refine(&xi, n).unwrap()).unwrap();
            prop_assert!(h(a + b) <= h(a) + h(b) + 1e-9);
        }
    }

    #[test]
    fn gibbs_vector_maximises_constrained_entropy(alpha in 0.05f64..0.95, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, t in 0.0f64..0.05) {
        let values = [0.0, 0.3, 0.5, 1.0];
        let opt = constrained_max_entropy(&values, alpha).unwrap();
        // perturbations keeping total mass and mean fixed
        let basis = [[0.2, -0.5, 0.3, 0.0], [1.0, 0.0, -2.0, 1.0]];
        let q: Vec<f64> = (0..4).map(|i| opt.p[i] + t * (c1 * basis[0][i] + c2 * basis[1][i])).collect();
        prop_assume!(q.iter().all(|&x| x >= 0.0));
        prop_assert!(shannon(&q) <= opt.entropy + 1e-9);
    }

    #[test]
    fn config_text_round_trips(m in 2usize..9, eps in prop::collection::vec(0.01f64..0.5, 1..4), seed in any::<u64>(), tol in 0.01f64..0.2) {
        let mut eps = eps;
        eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eps.dedup();
        let eps: Vec<String> = eps.iter().map(|e| e.to_string()).collect();
        let text = format!("kind = grid\nm = {m}\nschedule.eps = {}\nseed = {seed}\ntolerance = {tol}\n", eps.join(", "));
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
