use mps_rg::format::{mps_to_json, parse_mps};
use mps_rg::report::{trace_rows, write_trace_csv};
use mps_rg_core::random::{random_invertible, random_mps};
use mps_rg_core::rg::flow;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mps_json_round_trip_is_exact(seed in any::<u64>(), d in 1usize..=4, bond in 1usize..=4, edge in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_mps(&mut rng, d, bond);
        if edge {
            s = s.replace_boundary(random_invertible(&mut rng, bond)).unwrap();
        }
        let text = mps_to_json(&s);
        prop_assert_eq!(parse_mps(&text).unwrap(), s);
        prop_assert_eq!(mps_to_json(&parse_mps(&text).unwrap()), text);
    }

    #[test]
    fn trace_csv_has_one_row_per_record(seed in any::<u64>(), steps in 1usize..=5) {
        let s = random_mps(&mut ChaCha8Rng::seed_from_u64(seed), 2, 2);
        let t = flow(&s, steps, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        prop_assert_eq!(text.lines().count(), t.records.len() + 1);
        let rows = trace_rows(&t);
        prop_assert!(rows.iter().all(|r| r.abs_lambda_1 == 1.0 || r.abs_lambda_1 == 0.0));
        prop_assert!(rows.windows(2).all(|w| w[1].abs_lambda_2 <= w[1].abs_lambda_1));
    }
}
