use plap_core::cli_report::{parse_config, ConfigError};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_survive_parsing(m in 8usize..300, steps in 1usize..500, tau_e in -5i32..-1,
                              p in 1.5f64..6.0, b in 0.05f64..1.95, seeds in prop::collection::vec(0u64..1000, 1..6),
                              blank in prop::collection::vec(any::<bool>(), 4)) {
        let tau = 10f64.powi(tau_e);
        let sp = |i: usize| if blank[i] { "\n# comment\n" } else { "" };
        let seed_list: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
        let text = format!(
            "[grid]{}\nm = {m}\ntau = {tau:e}\nT = {}\n{}[solver]\np = {p}\n[geometry]{}\nb = {b}\n[experiment]\nseeds = {}\n",
            sp(0), tau * steps as f64, sp(1), sp(2), seed_list.join(", "),
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.grid.m, Some(m));
        prop_assert_eq!(cfg.grid.tau, Some(tau));
        prop_assert_eq!(cfg.solver.p, p);
        prop_assert_eq!(cfg.geometry.b, b);
        prop_assert_eq!(cfg.experiment.seeds.as_ref(), Some(&seeds));
        // the line bookkeeping points at the key
        let lp = cfg.lines["solver.p"];
        prop_assert_eq!(text.lines().nth(lp - 1).unwrap().trim(), format!("p = {p}"));
    }

    #[test]
    fn unknown_keys_report_their_line(pad in 0usize..6, key in "[a-z]{3,8}_x") {
        let text = format!("[solver]\n{}{key} = 1\n", "\n".repeat(pad));
        match parse_config(&text) {
            Err(ConfigError::UnknownKey { line, key: k, .. }) => {
                prop_assert_eq!(line, pad + 2);
                prop_assert_eq!(k, key);
            }
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_rejected(first in 1.5f64..5.0, second in 1.5f64..5.0) {
        let text = format!("[solver]\np = {first}\np = {second}\n");
        let dup = matches!(parse_config(&text), Err(ConfigError::DuplicateKey { line: 3, .. }));
        prop_assert!(dup);
    }

    #[test]
    fn bad_b_is_a_constraint_error(b in prop_oneof![-5.0f64..=0.0, 2.0f64..10.0]) {
        let text = format!("[geometry]\nb = {b}\n");
        let err = parse_config(&text).unwrap_err();
        let ok = matches!(err, ConfigError::Constraint { line: 2, .. });
        prop_assert!(ok, "{}", err);
    }
}
