//! Property tests: algebraic invariants of the glitch error, enumeration
//! against brute force, mapper dominance, and metric inequalities.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csdac_core::mappers::{
    canonical_table, greedy_map, mapping_cost_path, memoryless_solve, viterbi_map, MappingTable,
};
use csdac_core::model::{decode, glitch_error, Basis, Codeword, RepDistribution, Representation};
use csdac_core::optimizer::random_valid_basis;
use csdac_core::reps::{enumerate_reps, metric_complete, metric_overcomplete};
use csdac_core::TransitionModel;

/// Random covering basis via the split construction, then optional extra
/// weight bumps that keep coverage.
fn arb_basis(max_n: u32, max_extra_len: usize) -> impl Strategy<Value = Basis> {
    (2u32..=max_n, 0usize..=max_extra_len, any::<u64>()).prop_map(move |(n, extra, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = (n as usize + extra).min((1usize << n) - 1);
        random_valid_basis(n, len, &mut rng).expect("dimensions are feasible")
    })
}

fn random_rep_of(code: Codeword, basis: &Basis, seed: u64) -> Representation {
    let set = enumerate_reps(code, basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    set.reps[rng.gen_range(0..set.reps.len())].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glitch_error_is_symmetric_zero_diagonal_and_bounds_step(
        basis in arb_basis(6, 4),
        xy in any::<(u64, u64, u64)>(),
    ) {
        let (sx, sy, sr) = xy;
        let x = (sx % u64::from(basis.num_codewords())) as Codeword;
        let y = (sy % u64::from(basis.num_codewords())) as Codeword;
        let rep_x = random_rep_of(x, &basis, sr);
        let rep_y = random_rep_of(y, &basis, sr ^ 0x5851_F42D);
        let g_xy = glitch_error(&rep_x, &rep_y, &basis).unwrap();
        let g_yx = glitch_error(&rep_y, &rep_x, &basis).unwrap();
        prop_assert_eq!(g_xy, g_yx);
        prop_assert_eq!(glitch_error(&rep_x, &rep_x, &basis).unwrap(), 0);
        let step = (i64::from(x) - i64::from(y)).unsigned_abs();
        prop_assert!(g_xy >= step, "toggled weight {} below net step {}", g_xy, step);
    }

    #[test]
    fn decode_is_linear_on_disjoint_patterns(
        basis in arb_basis(6, 4),
        mask_seed in any::<u64>(),
    ) {
        let l = basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
        let a_mask: u64 = rng.gen::<u64>() & ((1 << l) - 1);
        let b_mask: u64 = rng.gen::<u64>() & ((1 << l) - 1) & !a_mask;
        let a = Representation::from_low_mask(a_mask, l);
        let b = Representation::from_low_mask(b_mask, l);
        let both = Representation::from_low_mask(a_mask | b_mask, l);
        prop_assert_eq!(
            decode(&both, &basis).unwrap(),
            decode(&a, &basis).unwrap() + decode(&b, &basis).unwrap()
        );
    }

    #[test]
    fn enumeration_matches_brute_force_scan(basis in arb_basis(6, 6)) {
        let l = basis.len();
        prop_assume!(l <= 16);
        // group every pattern by decoded value
        let mut by_code: Vec<Vec<u64>> = vec![Vec::new(); basis.num_codewords() as usize];
        for mask in 0u64..(1 << l) {
            let rep = Representation::from_low_mask(mask, l);
            let value = decode(&rep, &basis).unwrap();
            if value <= u64::from(basis.max_code()) {
                by_code[value as usize].push(mask);
            }
        }
        for code in 0..=basis.max_code() {
            let set = enumerate_reps(code, &basis).unwrap();
            let mut masks: Vec<u64> = set.reps.iter().map(|r| r.low_mask().unwrap()).collect();
            masks.sort_unstable();
            let mut expected = by_code[code as usize].clone();
            expected.sort_unstable();
            prop_assert_eq!(masks, expected, "code {}", code);
            // canonical ordering within the set
            for pair in set.reps.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
        }
    }

    #[test]
    fn canonical_rep_is_first_in_enumeration(basis in arb_basis(6, 5)) {
        for code in 0..=basis.max_code() {
            let set = enumerate_reps(code, &basis).unwrap();
            prop_assert_eq!(&basis.canonical_rep(code).unwrap(), &set.reps[0]);
        }
    }

    #[test]
    fn representation_bit_string_roundtrip(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
        let rep = Representation::from_bits(&bits);
        let parsed: Representation = rep.to_string().parse().unwrap();
        prop_assert_eq!(parsed, rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn viterbi_is_optimal_and_dominates(
        basis in arb_basis(5, 3),
        seq_seed in any::<u64>(),
        len in 2usize..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seq_seed);
        let codes: Vec<Codeword> =
            (0..len).map(|_| rng.gen_range(0..basis.num_codewords())).collect();
        // skip instances whose exhaustive path count is unreasonable
        let path_count: u128 = codes
            .iter()
            .map(|&c| enumerate_reps(c, &basis).unwrap().len() as u128)
            .product();
        prop_assume!(path_count <= 200_000);

        let best = viterbi_map(&codes, &basis, None).unwrap();
        prop_assert_eq!(mapping_cost_path(&codes, &best, &basis).unwrap(), best.cost);

        // exhaustive oracle
        fn walk(
            codes: &[Codeword],
            basis: &Basis,
            stage: usize,
            prev: Option<&Representation>,
            acc: u64,
            best: &mut u64,
        ) {
            if stage == codes.len() {
                *best = (*best).min(acc);
                return;
            }
            for rep in &enumerate_reps(codes[stage], basis).unwrap().reps {
                let step = match prev {
                    Some(p) => {
                        let g = glitch_error(p, rep, basis).unwrap();
                        g * g
                    }
                    None => 0,
                };
                walk(codes, basis, stage + 1, Some(rep), acc + step, best);
            }
        }
        let mut exhaustive = u64::MAX;
        walk(&codes, &basis, 0, None, 0, &mut exhaustive);
        prop_assert_eq!(best.cost, exhaustive);

        let greedy = greedy_map(&codes, &basis, None).unwrap();
        prop_assert!(best.cost <= greedy.cost);
        for rep in &greedy.reps {
            prop_assert_eq!(rep.len(), basis.len());
        }
    }

    #[test]
    fn adaptive_metric_never_exceeds_fixed_table_metric(
        basis in arb_basis(5, 3),
        table_seed in any::<u64>(),
    ) {
        let model = TransitionModel::uniform(basis.bit_depth());
        // random valid memoryless table
        let reps: Vec<Representation> = (0..=basis.max_code())
            .map(|c| random_rep_of(c, &basis, table_seed ^ u64::from(c)))
            .collect();
        let table = MappingTable::memoryless(basis.clone(), reps).unwrap();
        let fixed = metric_complete(&basis, &table, &model).unwrap();
        let dist = RepDistribution::from_table(&table).unwrap();
        let adaptive = metric_overcomplete(&basis, &dist, &model).unwrap();
        prop_assert!(adaptive.raw_metric <= fixed.raw_metric + 1e-9);
        prop_assert!(fixed.normalized_metric >= 0.0);
    }

    #[test]
    fn metrics_are_invariant_under_weight_input_order(
        basis in arb_basis(5, 3),
        shuffle_seed in any::<u64>(),
    ) {
        let model = TransitionModel::uniform(basis.bit_depth());
        let mut shuffled = basis.weights().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        let rebuilt = Basis::new(shuffled, basis.bit_depth()).unwrap();
        prop_assert_eq!(rebuilt.weights(), basis.weights());
        let a = metric_complete(&basis, &canonical_table(&basis).unwrap(), &model).unwrap();
        let b = metric_complete(&rebuilt, &canonical_table(&rebuilt).unwrap(), &model).unwrap();
        prop_assert_eq!(a.raw_metric, b.raw_metric);
    }

    #[test]
    fn memoryless_tables_stay_valid(
        basis in arb_basis(5, 3),
        seed in any::<u64>(),
    ) {
        let model = TransitionModel::uniform(basis.bit_depth());
        let table = memoryless_solve(&basis, &model, 2, seed).unwrap();
        for code in 0..=basis.max_code() {
            let rep = table.rep_for(code).unwrap();
            prop_assert_eq!(decode(rep, &basis).unwrap(), u64::from(code));
        }
    }
}
