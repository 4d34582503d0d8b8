use mmgame::dynamics::{mmga_field, mmrd_field, GradientMode};
use mmgame::experiment::{parse_csv, to_csv};
use mmgame::metrics::{kl_from_nash, strategy_distance};
use mmgame::{normalize, GameSpec, Player, Solver, TransitionMatrix};
use proptest::prelude::*;

fn game_dims() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2, 1)), Just((2, 2)), Just((3, 1)), Just((4, 1))]
}

/// A game with interior strategies for both players.
fn instance() -> impl Strategy<Value = (GameSpec, mmgame::Strategy, mmgame::Strategy)> {
    game_dims().prop_flat_map(|(m, n)| {
        let states = (m * m).pow(n as u32);
        (
            prop::collection::vec(-2.0..2.0f64, m * m),
            prop::collection::vec(0.05..1.0f64, m * states),
            prop::collection::vec(0.05..1.0f64, m * states),
        )
            .prop_map(move |(u, rx, ry)| {
                (
                    GameSpec::zero_sum(m, n, u).unwrap(),
                    normalize(m, &rx).unwrap(),
                    normalize(m, &ry).unwrap(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_scale_invariant(raw in prop::collection::vec(0.01..10.0f64, 6), k in 0.1..100.0f64) {
        let a = normalize(3, &raw).unwrap();
        let scaled: Vec<f64> = raw.iter().map(|v| v * k).collect();
        let b = normalize(3, &scaled).unwrap();
        for (p, q) in a.probs().iter().zip(b.probs()) {
            prop_assert!((p - q).abs() < 1e-15);
        }
        for s in 0..2 {
            prop_assert!((a.row(s).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn successor_shifts_memory((m, n) in game_dims(), seed in any::<u64>()) {
        let game = GameSpec::zero_sum(m, n, vec![0.0; m * m]).unwrap();
        let s = (seed as usize) % game.num_states();
        let (a, b) = ((seed >> 20) as usize % m, (seed >> 40) as usize % m);
        let pairs = game.state_pairs(s);
        prop_assert_eq!(game.state_index(&pairs).unwrap(), s);
        let next = game.state_pairs(game.successor(s, a, b));
        prop_assert_eq!(next[0], (a, b));
        prop_assert_eq!(&next[1..], &pairs[..n - 1]);
    }

    #[test]
    fn transition_matrix_is_column_stochastic((game, x, y) in instance()) {
        let mt = TransitionMatrix::new(&game, &x, &y).unwrap();
        for c in mt.column_sums() {
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_distribution_is_a_fixed_point((game, x, y) in instance()) {
        let solver = Solver::default();
        let state = solver.analyze(&game, &x, &y).unwrap();
        let p = &state.stationary.p;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let mut mp = vec![0.0; p.len()];
        state.matrix.apply(p, &mut mp);
        for (a, b) in p.iter().zip(&mp) {
            prop_assert!((a - b).abs() < 1e-11);
        }
        let direct = Solver::direct().analyze(&game, &x, &y).unwrap();
        for (a, b) in p.iter().zip(&direct.stationary.p) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_sum_payoffs_cancel((game, x, y) in instance()) {
        let solver = Solver::direct();
        let u = solver.stationary_payoff(&game, &x, &y, Player::X).unwrap();
        let v = solver.stationary_payoff(&game, &x, &y, Player::Y).unwrap();
        prop_assert!((u + v).abs() < 1e-12);
    }

    #[test]
    fn future_payoff_is_affine_and_vanishes_at_stationarity((game, x, y) in instance(), alpha in 0.0..1.0f64) {
        let solver = Solver::default();
        let state = solver.analyze(&game, &x, &y).unwrap();
        let fp = solver.future_payoff(&game, &state, Player::X).unwrap();
        let k = game.num_states();
        let p: Vec<f64> = (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let q: Vec<f64> = vec![1.0 / k as f64; k];
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        prop_assert!((fp.pi(&mix) - alpha * fp.pi(&p) - (1.0 - alpha) * fp.pi(&q)).abs() < 1e-10);
        prop_assert!(fp.pi(&state.stationary.p).abs() < 1e-10);
        let series = solver.expected_future_payoff(&game, &x, &y, &p).unwrap();
        prop_assert!((series - fp.pi(&p)).abs() < 1e-9);
    }

    #[test]
    fn gradient_is_orthogonal_to_own_strategy((game, x, y) in instance()) {
        let g = Solver::default().payoff_gradient_exact(&game, &x, &y, Player::X).unwrap();
        for s in 0..game.num_states() {
            let dot: f64 = (0..game.m()).map(|a| x.get(s, a) * g.get(s, a)).sum();
            prop_assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn fields_preserve_row_sums_and_agree((game, x, y) in instance()) {
        let solver = Solver::default();
        let rd = mmrd_field(&game, &x, &y, &solver).unwrap();
        let ga = mmga_field(&game, &x, &y, &solver, GradientMode::Exact).unwrap();
        for f in [&rd.dx, &rd.dy, &ga.dx, &ga.dy] {
            for row in f.chunks(game.m()) {
                prop_assert!(row.iter().sum::<f64>().abs() < 1e-12);
            }
        }
        prop_assert!(rd.max_abs_diff(&ga) < 1e-8);
    }

    #[test]
    fn distance_is_a_metric(
        a in prop::collection::vec(0.01..0.99f64, 4),
        b in prop::collection::vec(0.01..0.99f64, 4),
        c in prop::collection::vec(0.01..0.99f64, 4),
    ) {
        let d = |p: &[f64], q: &[f64]| strategy_distance(p, q).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        if a != b {
            prop_assert!(d(&a, &b) > 0.0);
        }
    }

    #[test]
    fn kl_is_nonnegative(raw in prop::collection::vec(0.01..1.0f64, 12), nraw in prop::collection::vec(0.01..1.0f64, 12)) {
        let x = normalize(3, &raw).unwrap();
        let nash = normalize(3, &nraw).unwrap();
        prop_assert!(kl_from_nash(&x, &nash).unwrap() >= -1e-15);
        prop_assert!(kl_from_nash(&nash, &nash).unwrap().abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(any::<f64>(), 3), 0..20)) {
        let header: Vec<String> = ["t", "a", "b"].iter().map(|s| s.to_string()).collect();
        let text = to_csv(&header, &rows).unwrap();
        let (h, back) = parse_csv(&text).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back.len(), rows.len());
        for (r, s) in rows.iter().flatten().zip(back.iter().flatten()) {
            prop_assert!(r.to_bits() == s.to_bits() || (r.is_nan() && s.is_nan()));
        }
    }
}
