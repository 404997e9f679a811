use pacr_core::dsl::arbitrary::{random_args, random_program};
use pacr_core::dsl::{eval_function, parse_program, print_program, Evaluator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_program(&mut rng, 4, 5);
        let text = print_program(&g.program);
        let reparsed = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&reparsed, &g.program);
        // printing is byte-stable
        prop_assert_eq!(print_program(&reparsed), text);
        prop_assert!(g.program.validate().is_ok());
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_program(&mut rng, 3, 5);
        let args = random_args(&mut rng, &g.params);
        let a = eval_function(&g.program, &g.entry, args.clone(), 50_000);
        let b = eval_function(&g.program, &g.entry, args, 50_000);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fuel_is_monotone(seed in any::<u64>(), extra in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_program(&mut rng, 3, 5);
        let args = random_args(&mut rng, &g.params);
        let mut ev = Evaluator::new(&g.program, 1_000_000);
        if let Ok(v) = ev.call(&g.entry, args.clone()) {
            let used = 1_000_000 - ev.remaining_fuel();
            prop_assert!(used >= 1);
            let exact = eval_function(&g.program, &g.entry, args.clone(), used);
            prop_assert_eq!(exact.as_ref(), Ok(&v));
            let more = eval_function(&g.program, &g.entry, args.clone(), used + extra);
            prop_assert_eq!(more.as_ref(), Ok(&v));
            if used > 1 {
                let less = eval_function(&g.program, &g.entry, args, used - 1);
                prop_assert!(less.is_err());
            }
        }
    }
}
