//! The shipped configuration files and TOML round trips.

use std::path::PathBuf;

use d3pinn::config::{load_config, ConfigSource, RunConfig, Scale, Variant};
use d3pinn::losses::{GradientMode, InterfaceAverage};
use d3pinn::network::Activation;
use d3pinn::problems::ProblemName;
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn every_shipped_config_loads() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_config(ConfigSource::File(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3, "only {seen} configuration files found");
}

#[test]
fn spelled_out_file_equals_its_preset() {
    let cfg = load_config(ConfigSource::File(&configs_dir().join("example2.toml"))).unwrap();
    assert_eq!(cfg, RunConfig::preset(ProblemName::Example2, Scale::Full));
}

#[test]
fn overrides_apply_on_top_of_the_preset() {
    let cfg = load_config(ConfigSource::File(
        &configs_dir().join("example1-three-subdomains.toml"),
    ))
    .unwrap();
    let desk = RunConfig::preset(ProblemName::Example1, Scale::Desk);
    assert_eq!(cfg.decomposition.cuts, vec![-0.3, 0.3]);
    assert_eq!(cfg.networks.len(), 3);
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.train.iterations, desk.train.iterations);
    assert_eq!(cfg.weights, desk.weights);
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Xpinn), Just(Variant::Ddpinn), Just(Variant::D3pinn)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dump_and_reload_is_identity(
        example2 in any::<bool>(),
        desk in any::<bool>(),
        v in variant(),
        seed in 0u64..=i64::MAX as u64,
        cut in -0.9f64..0.9,
        widths in prop::array::uniform2(1usize..80),
        depth in 1usize..8,
        iterations in 1usize..100_000,
        lr in 1e-6f64..1.0,
        w in prop::array::uniform9(0.0f64..100.0),
        flags in prop::array::uniform3(any::<bool>()),
    ) {
        let problem = if example2 { ProblemName::Example2 } else { ProblemName::Example1 };
        let mut cfg = RunConfig::preset(problem, if desk { Scale::Desk } else { Scale::Full });
        cfg.variant = v;
        cfg.seed = seed;
        cfg.decomposition.cuts = vec![cut];
        for (n, width) in cfg.networks.iter_mut().zip(widths) {
            n.width = width;
            n.depth = depth;
        }
        cfg.train.iterations = iterations;
        cfg.train.learning_rate = lr;
        cfg.weights = d3pinn::losses::LossWeights::from_array(w);
        cfg.activation = if flags[0] { Activation::Sin } else { Activation::Tanh };
        cfg.loss.interface_average = if flags[1] { InterfaceAverage::Sum } else { InterfaceAverage::Difference };
        cfg.loss.gradient = if flags[2] { GradientMode::SpaceOnly } else { GradientMode::SpaceTime };
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
