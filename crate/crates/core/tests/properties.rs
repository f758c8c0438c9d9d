//! Property tests across the public API.

use proptest::prelude::*;
use stablema::bounds::{gamma1_bound, rho, RhoTable};
use stablema::harness::{fit_rate, D3Entry, ExperimentConfig};
use stablema::stable::{char_fn_sbs, sample_sbs};
use stablema::{plan_grid, simulate_paths, KernelBank, KernelSpec, SeedStream, StableParams};

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|l| KernelSpec::ou(l).unwrap()),
        (-0.3f64..1.0, 1.4f64..4.0).prop_map(|(k, a)| KernelSpec::truncated_power_law(k, a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn char_fn_is_even_bounded_and_decreasing(beta in 0.1f64..2.0, scale in 0.1f64..3.0, u in 0.0f64..10.0, du in 0.0f64..1.0) {
        let p = StableParams::new(beta, scale).unwrap();
        let c = char_fn_sbs(&p, u);
        prop_assert!(c > 0.0 || u > 0.0);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, char_fn_sbs(&p, -u));
        prop_assert!(char_fn_sbs(&p, u + du) <= c);
    }

    #[test]
    fn samples_scale_linearly(beta in 0.3f64..2.0, scale in 0.2f64..5.0, seed: u64) {
        let unit = sample_sbs(&StableParams::new(beta, 1.0).unwrap(), 16, SeedStream::new(seed, 0)).unwrap();
        let scaled = sample_sbs(&StableParams::new(beta, scale).unwrap(), 16, SeedStream::new(seed, 0)).unwrap();
        for (a, b) in unit.iter().zip(&scaled) {
            prop_assert!((a * scale - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rho_is_symmetric_and_positive(gi in kernel(), gj in kernel(), beta in 0.8f64..1.9, k in -20i64..20) {
        let a = rho(&gi, &gj, beta, k).unwrap();
        let b = rho(&gj, &gi, beta, -k).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-7 * a);
    }

    #[test]
    fn fit_recovers_exact_power_laws(c in 0.01f64..100.0, slope in -2.0f64..1.0) {
        let pts: Vec<(usize, f64)> = [64usize, 128, 256, 512].iter().map(|&n| (n, c * (n as f64).powf(slope))).collect();
        let fit = fit_rate(&pts, false).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!(fit.slope_halfwidth < 1e-8);
    }

    #[test]
    fn dictionary_entries_are_certified(v in prop::collection::vec(-3.0f64..3.0, 1..4), theta in 0.0f64..6.3) {
        let e = D3Entry::new(v, theta);
        let (d2, d3) = e.derivative_bounds();
        prop_assert!(d2 <= 1.0 + 1e-12 && d3 <= 1.0 + 1e-12);
    }

    #[test]
    fn config_round_trips(seed: u64, reps in 100usize..5000, start in 1usize..100, steps in prop::collection::vec(1usize..50, 1..5)) {
        let mut n_list = vec![start];
        for s in steps {
            n_list.push(n_list.last().unwrap() + s);
        }
        let text = format!(
            "master_seed = {seed}\nreplications = {reps}\nn_list = {n_list:?}\n[driver]\nbeta = 1.5\nscale = 1.0\n[[kernels]]\nfamily = \"ou\"\nlambda = 1.0\n[functional]\nfreqs = [[1.0]]\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}

#[test]
fn paths_are_reproducible_per_stream() {
    let bank = KernelBank::new(vec![KernelSpec::ou(1.0).unwrap(), KernelSpec::truncated_power_law(0.2, 3.0).unwrap()])
        .unwrap();
    let params = StableParams::new(1.3, 1.0).unwrap();
    let grid = plan_grid(&bank, &params, 32, 0.1).unwrap();
    let a = simulate_paths(&bank, &params, &grid, SeedStream::new(5, 9)).unwrap();
    let b = simulate_paths(&bank, &params, &grid, SeedStream::new(5, 9)).unwrap();
    let c = simulate_paths(&bank, &params, &grid, SeedStream::new(5, 10)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn gamma_surrogate_grows_with_memory() {
    let beta = 1.5;
    let short = RhoTable::build(&KernelBank::new(vec![KernelSpec::ou(2.0).unwrap()]).unwrap(), beta, 64).unwrap();
    let long = RhoTable::build(&KernelBank::new(vec![KernelSpec::ou(0.5).unwrap()]).unwrap(), beta, 64).unwrap();
    assert!(gamma1_bound(&long, 64, 1).unwrap().value > gamma1_bound(&short, 64, 1).unwrap().value);
}
