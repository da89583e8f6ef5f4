use mimosim::channel::{ArrayConfig, BasisPair, ClusterModel, FrequencyGrid, synthesize_channel};
use mimosim::codebook::{doppler_compress, etype2_compress, etype2_reconstruct, DopplerConfig, EType2Config, PrecoderReport};
use mimosim::experiment::{drop_seed, parse_config, ExperimentConfig, ExperimentKind};
use mimosim::linalg::random_complex_matrix;
use mimosim::prediction::{extract_doppler, predict, predict_and_compress, PredictionConfig};
use mimosim::CMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn etype2(l: usize, nf: usize, z: usize, k: usize) -> EType2Config {
    EType2Config {
        beams_l: l,
        freq_units: nf,
        delay_dim_z: z,
        fraction_p: 1.0,
        units_per_subband: 1,
        top_k: k,
        layers: 1,
    }
}

#[test]
fn drop_seed_vectors() {
    assert_eq!(drop_seed(0, 0), 0xe220a8397b1dcdaf);
    assert_eq!(drop_seed(0, 1), 0x6e789e6aa1b965f4);
    assert_eq!(drop_seed(1234567, 0), 6457827717110365317);
    assert_eq!(drop_seed(1234567, 1), 3203168211198807973);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn predicted_report_is_composition(seed in any::<u64>()) {
        let array = ArrayConfig::uniform(1, 4, 2).unwrap();
        let grid = FrequencyGrid::new(4, 360e3, 1).unwrap();
        let bases = BasisPair::dft(&array, grid.units);
        let mut cfg = PredictionConfig::new(8, 0.5e-3, 4).unwrap();
        cfg.pairs_k = 12;
        let model = ClusterModel { max_doppler_hz: 100.0, ..ClusterModel::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths = model.draw(&mut rng, &array, &grid);
        let obs: Vec<CMatrix> = (0..8).map(|n| synthesize_channel(&paths, n as f64 * cfg.slot_gap_dt, &array, &grid).unwrap().matrix).collect();
        let codebook = DopplerConfig { slots: 4, time_basis_t: 2, etype2: etype2(2, 4, 2, 8) };
        let report = predict_and_compress(&obs, &bases, &cfg, &codebook, &array).unwrap();
        let slots = predict(&extract_doppler(&obs, &bases, &cfg).unwrap(), &bases, &cfg);
        let stacked = CMatrix::from_fn(array.ports(), 4 * 4, |r, c| slots[c % 4][(r, c / 4)]);
        prop_assert_eq!(report, doppler_compress(&stacked, &codebook, &array).unwrap());
    }

    #[test]
    fn report_text_round_trips(seed in any::<u64>(), k in 1usize..=24) {
        let array = ArrayConfig::uniform(1, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vec![random_complex_matrix(&mut rng, array.ports(), 6)];
        let report = etype2_compress(&v, &etype2(2, 6, 6, k), &array).unwrap();
        let back = PrecoderReport::from_text(&report.to_text()).unwrap();
        for x in 0..6 {
            prop_assert_eq!(etype2_reconstruct(&back, x).unwrap(), etype2_reconstruct(&report, x).unwrap());
        }
        prop_assert_eq!(back, report);
    }

    #[test]
    fn config_toml_round_trips(kind in 0usize..7, seed in any::<u64>(), drops in 0usize..10_000) {
        let mut cfg = ExperimentConfig::new(ExperimentKind::ALL[kind]);
        cfg.seed = seed;
        cfg.drops = drops;
        let back = parse_config(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}
