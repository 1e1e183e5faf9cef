mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ubac::gf2::{Gf2Matrix, Solution};
use ubac::rlc::{erased_positions, random_codeword, rlc_decode, rlc_observe, stacked_matrix, RlcOutcome};

fn bits(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..=1, cols), rows)
}

fn matrix() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1usize..=64, 1usize..=64).prop_flat_map(|(r, c)| bits(r, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rank_matches_naive_elimination(rows in matrix()) {
        let m = Gf2Matrix::from_rows(&rows).unwrap();
        prop_assert_eq!(m.rank(), common::naive_rank(&rows));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solve_agrees_with_rank_test(rows in matrix(), seed in any::<u64>()) {
        let m = Gf2Matrix::from_rows(&rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<u8> = (0..m.rows()).map(|_| rng.random::<bool>() as u8).collect();
        let augmented: Vec<Vec<u8>> = rows.iter().zip(&b).map(|(r, &x)| {
            let mut r = r.clone();
            r.push(x);
            r
        }).collect();
        let rank = common::naive_rank(&rows);
        let consistent = common::naive_rank(&augmented) == rank;
        match m.solve(&b).unwrap() {
            Solution::Inconsistent => prop_assert!(!consistent),
            Solution::Unique(x) => {
                prop_assert!(consistent && rank == m.cols());
                prop_assert_eq!(m.mul_vec(&x).unwrap(), b);
            }
            Solution::Family { particular, nullspace } => {
                prop_assert!(consistent && rank < m.cols());
                prop_assert_eq!(nullspace.len(), m.cols() - rank);
                prop_assert_eq!(m.mul_vec(&particular).unwrap(), b.clone());
                for v in &nullspace {
                    prop_assert!(m.mul_vec(v).unwrap().iter().all(|&x| x == 0));
                }
            }
        }
    }

    /// Against all `2^12` words: decoding succeeds exactly when the
    /// observation fits a single codeword pair.
    #[test]
    fn small_rlc_matches_exhaustive_search(seed in any::<u64>(), tau in 0usize..4) {
        let (n, r) = (12, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Gf2Matrix::random(r, n, &mut rng);
        let rows: Vec<Vec<u8>> = (0..r).map(|i| h.row(i)).collect();
        let book = common::all_codewords(&rows, n);
        let m1 = book[rng.random_range(0..book.len())].clone();
        let m2 = book[rng.random_range(0..book.len())].clone();
        let y = rlc_observe(&m1, &m2, tau);
        let fits: Vec<(&Vec<u8>, &Vec<u8>)> = book
            .iter()
            .flat_map(|a| book.iter().map(move |b| (a, b)))
            .filter(|(a, b)| rlc_observe(a, b, tau) == y)
            .collect();
        let erased = erased_positions(&y, n, tau);
        let full_rank = stacked_matrix(&h, tau, &erased).rank() == erased.len();
        match rlc_decode(&h, tau, &y).unwrap() {
            RlcOutcome::Decoded { m1: a, m2: b } => {
                prop_assert_eq!(fits.len(), 1);
                prop_assert!(full_rank);
                prop_assert_eq!((&a, &b), (&m1, &m2));
            }
            RlcOutcome::Ambiguous => {
                prop_assert!(fits.len() > 1);
                prop_assert!(!full_rank);
            }
        }
    }

    #[test]
    fn decoding_succeeds_iff_stacked_matrix_has_full_rank(seed in any::<u64>(), n in 16usize..80, tau in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = n / 2;
        let h = Gf2Matrix::random(r, n, &mut rng);
        let basis = h.nullspace();
        let m1 = random_codeword(&basis, n, &mut rng);
        let m2 = random_codeword(&basis, n, &mut rng);
        let y = rlc_observe(&m1, &m2, tau);
        let erased = erased_positions(&y, n, tau);
        let full_rank = stacked_matrix(&h, tau, &erased).rank() == erased.len();
        let decoded = matches!(rlc_decode(&h, tau, &y).unwrap(), RlcOutcome::Decoded { .. });
        prop_assert_eq!(decoded, full_rank);
    }
}

#[test]
fn erased_count_concentrates() {
    let (n, tau, trials) = (256, 5, 400);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = Gf2Matrix::random(n / 2, n, &mut rng);
    let basis = h.nullspace();
    let mean = (0..trials)
        .map(|_| {
            let m1 = random_codeword(&basis, n, &mut rng);
            let m2 = random_codeword(&basis, n, &mut rng);
            erased_positions(&rlc_observe(&m1, &m2, tau), n, tau).len() as f64
        })
        .sum::<f64>()
        / trials as f64;
    let expect = (n - tau) as f64 / 2.0;
    assert!((mean - expect).abs() <= 3.0 * (n as f64).sqrt() / 2.0, "mean {mean}, expected {expect}");
}
