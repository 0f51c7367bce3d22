use proptest::prelude::*;
use quadmargin::linalg::Matrix;
use quadmargin::market_data::{compute_returns, estimate_stats, load_prices, CsvLayout, ReturnTable};
use quadmargin::synthetic::rng_from_seed;
use rand::Rng;

fn table(n: usize, m: usize, data: Vec<f64>) -> ReturnTable<f64> {
    ReturnTable {
        tickers: (0..n).map(|i| format!("T{i}")).collect(),
        returns: Matrix::new(n, m, data).unwrap(),
    }
}

#[test]
fn csv_round_trip_two_tickers() {
    let mut rng = rng_from_seed(42);
    let mut csv = String::from("date,AAA,BBB\n");
    let mut a = 100.0f64;
    let mut b = 40.0f64;
    let mut expect = Vec::new();
    for t in 0..301 {
        a *= 1.0 + rng.random_range(-0.02..0.02);
        b *= 1.0 + rng.random_range(-0.02..0.02);
        expect.push((a, b));
        csv.push_str(&format!("2020-{:03},{a},{b}\n", t));
    }
    let pt = load_prices::<f64, _>(csv.as_bytes(), &CsvLayout::default()).unwrap();
    assert_eq!((pt.n_assets(), pt.n_days()), (2, 301));
    assert_eq!(pt.tickers(), ["AAA", "BBB"]);
    for (t, (a, b)) in expect.iter().enumerate() {
        assert_eq!(pt.prices()[(0, t)], *a);
        assert_eq!(pt.prices()[(1, t)], *b);
    }
    let st = estimate_stats(&compute_returns(&pt)).unwrap();
    assert_eq!(st.sample_count(), 300);
}

#[test]
fn covariance_matches_double_loop() {
    let mut rng = rng_from_seed(7);
    let (n, m) = (3, 50);
    let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-0.05..0.05)).collect();
    let st = estimate_stats(&table(n, m, data.clone())).unwrap();
    let at = |i: usize, t: usize| data[i * m + t];
    for i in 0..n {
        let mut mi = 0.0;
        for t in 0..m {
            mi += at(i, t);
        }
        mi /= m as f64;
        assert!((st.mean()[i] - mi).abs() <= 1e-14);
        for j in 0..n {
            let mut mj = 0.0;
            for t in 0..m {
                mj += at(j, t);
            }
            mj /= m as f64;
            let mut s = 0.0;
            for t in 0..m {
                s += (at(i, t) - mi) * (at(j, t) - mj);
            }
            s /= m as f64;
            assert!((st.covariance()[(i, j)] - s).abs() <= 1e-14);
        }
    }
}

fn returns_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..5, 2usize..30).prop_flat_map(|(n, m)| {
        (Just(n), Just(m), prop::collection::vec(-0.2f64..0.2, n * m))
    })
}

proptest! {
    #[test]
    fn time_permutation_invariant((n, m, data) in returns_strategy(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut rng = rng_from_seed(seed);
        for i in (1..m).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<f64> = (0..n).flat_map(|i| perm.iter().map(move |&t| (i, t))).map(|(i, t)| data[i * m + t]).collect();
        let a = estimate_stats(&table(n, m, data)).unwrap();
        let b = estimate_stats(&table(n, m, shuffled)).unwrap();
        for (x, y) in a.mean().iter().zip(b.mean()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
        for (x, y) in a.covariance().as_slice().iter().zip(b.covariance().as_slice()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn shift_and_scale((n, m, data) in returns_strategy(), asset in 0usize..5, c in -0.1f64..0.1, alpha in -3.0f64..3.0) {
        let asset = asset % n;
        let base = estimate_stats(&table(n, m, data.clone())).unwrap();

        let mut shifted = data.clone();
        let mut scaled = data;
        for t in 0..m {
            shifted[asset * m + t] += c;
            scaled[asset * m + t] *= alpha;
        }
        let sh = estimate_stats(&table(n, m, shifted)).unwrap();
        prop_assert!((sh.mean()[asset] - base.mean()[asset] - c).abs() <= 1e-12);
        for (x, y) in sh.covariance().as_slice().iter().zip(base.covariance().as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }

        let sc = estimate_stats(&table(n, m, scaled)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let f = match (i == asset, j == asset) {
                    (true, true) => alpha * alpha,
                    (true, false) | (false, true) => alpha,
                    _ => 1.0,
                };
                prop_assert!((sc.covariance()[(i, j)] - f * base.covariance()[(i, j)]).abs() <= 1e-12);
            }
        }
        for i in 0..n {
            prop_assert!(sc.covariance()[(i, i)] >= 0.0);
        }
    }

    #[test]
    fn returns_exceed_minus_one(prices in prop::collection::vec(0.01f64..1e4, 3..40)) {
        let p = prices.len();
        let mut csv = String::from("date,X\n");
        for (t, v) in prices.iter().enumerate() {
            csv.push_str(&format!("{t:04},{v}\n"));
        }
        let pt = load_prices::<f64, _>(csv.as_bytes(), &CsvLayout::default()).unwrap();
        let rt = compute_returns(&pt);
        prop_assert_eq!(rt.returns.cols(), p - 1);
        prop_assert!(rt.returns.as_slice().iter().all(|&r| r > -1.0));
    }
}
