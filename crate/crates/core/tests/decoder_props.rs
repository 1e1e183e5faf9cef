mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ubac::channel::{erasure_pattern_with, modulate, random_bits, transmit};
use ubac::codes::reference_code;
use ubac::decoder::{decode, decode_erasure_pattern};
use ubac::gf2::LdpcEncoder;
use ubac::tanner::sample_graph;

const UNBOUNDED: usize = 100_000;

fn instance() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=3, 30usize..400, any::<u64>()).prop_flat_map(|(code, n, seed)| (Just(code), Just(n), 0..n / 2, Just(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flooding_and_sequential_peeling_agree((code, n, tau, seed) in instance()) {
        let g = sample_graph(&reference_code(code), n, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let erased = erasure_pattern_with(n, tau, &mut rng);
        let r = decode_erasure_pattern(&g, tau, &erased, UNBOUNDED).unwrap();
        let mut order: Vec<usize> = (0..g.m()).collect();
        order.shuffle(&mut rng);
        let oracle = common::sequential_peel(&g, tau, &erased, &order);
        let got: BTreeSet<(u8, usize)> = r.erased_set().into_iter().collect();
        prop_assert_eq!(got, oracle);
        prop_assert_eq!(r.success, r.erased_count() == 0);
        prop_assert!(r.erased_fraction_per_iter.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.edge_updates <= g.edge_count() * r.iterations_used.max(1));
    }

    #[test]
    fn transmitted_words_decode_like_their_pattern((code, n, tau, seed) in instance()) {
        let g = sample_graph(&reference_code(code), n, seed).unwrap();
        let enc = LdpcEncoder::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(3));
        let dither = random_bits(n, &mut rng);
        let m1 = enc.encode(&dither, &[], &mut rng).unwrap();
        let m2 = enc.encode(&dither, &[], &mut rng).unwrap();
        let y = transmit(&modulate(&m1, &dither), &modulate(&m2, &dither), tau, &dither).unwrap();
        let erased: Vec<usize> = (tau..n).filter(|&p| y[p] == 0).collect();
        let full = decode(&g, tau, &y, &dither, UNBOUNDED).unwrap();
        let pattern = decode_erasure_pattern(&g, tau, &erased, UNBOUNDED).unwrap();
        prop_assert_eq!(full.erased_set(), pattern.erased_set());
        prop_assert_eq!(full.iterations_used, pattern.iterations_used);
        // Every recovered bit is the sent bit: no undetected errors.
        for (v, &b) in full.user1_values.iter().zip(&m1) {
            prop_assert!(v.is_none_or(|x| x == b));
        }
        for (v, &b) in full.user2_values.iter().zip(&m2) {
            prop_assert!(v.is_none_or(|x| x == b));
        }
    }
}
