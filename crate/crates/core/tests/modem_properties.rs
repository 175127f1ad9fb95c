use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use translum::modem::{decode, encode, label_duty, pdm_marks, rasterize_into, PulseTrain, Waveform};
use translum::{build_frame, make_substream, BitStream, LinkConfig, Modulation};

fn config(modulation: Modulation, rate: f64) -> LinkConfig {
    LinkConfig { payload_len: 16, ..LinkConfig::new(rate, modulation) }
}

fn capture(train: &PulseTrain, cfg: &LinkConfig, lead: usize, noise: f64, seed: u64) -> Waveform<f64> {
    let mut samples = Vec::new();
    rasterize_into(train, cfg.sample_rate(), 1.0, lead, 4 * cfg.oversampling as usize, &mut samples).unwrap();
    let mut rng = make_substream(seed, 0);
    for x in &mut samples {
        *x += noise * rng.sample::<f64, _>(StandardNormal);
    }
    Waveform::new(cfg.sample_rate(), samples).unwrap()
}

fn modulation() -> impl Strategy<Value = Modulation> {
    prop_oneof![Just(Modulation::Pwm), Just(Modulation::Pdm)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn amplitude_scaling_invariance(
        payload in proptest::collection::vec(any::<u8>(), 16),
        m in modulation(),
        lead in 0usize..64,
        seed in any::<u64>(),
        scale_exp in -3.0f64..3.0,
    ) {
        let cfg = config(m, 2e6);
        let bits = build_frame(&payload, 0xA5).unwrap().bits();
        let w = capture(&encode(&bits, &cfg), &cfg, lead, 0.05, seed);
        let a = 10f64.powf(scale_exp);
        prop_assert_eq!(decode(&w, &cfg).unwrap(), decode(&w.map(|x| a * x), &cfg).unwrap());
    }

    #[test]
    fn dc_offset_invariance(
        payload in proptest::collection::vec(any::<u8>(), 16),
        m in modulation(),
        lead in 0usize..64,
        seed in any::<u64>(),
        offset in -10.0f64..10.0,
    ) {
        let cfg = config(m, 1e6);
        let bits = build_frame(&payload, 0xA5).unwrap().bits();
        let w = capture(&encode(&bits, &cfg), &cfg, lead, 0.05, seed);
        prop_assert_eq!(decode(&w, &cfg).unwrap(), decode(&w.map(|x| x + offset), &cfg).unwrap());
    }

    #[test]
    fn half_duty_reads_as_one(
        payload in proptest::collection::vec(any::<u8>(), 16),
        k in 32usize..160,
        half in 1usize..1000,
    ) {
        prop_assert!(label_duty(half, 2 * half));
        prop_assert!(!label_duty(half - 1, 2 * half));
        // End to end: one symbol carries a pulse of exactly half the period.
        let cfg = config(Modulation::Pwm, 1e6);
        let bits = build_frame(&payload, 0xA5).unwrap().bits();
        let train = encode(&bits, &cfg);
        let mut pulses = train.pulses().to_vec();
        pulses[k].width = 0.5 * train.symbol_period();
        let edited = PulseTrain::new(train.symbol_period(), train.n_symbols(), pulses).unwrap();
        let got = decode(&capture(&edited, &cfg, 0, 0.0, 0), &cfg).unwrap();
        prop_assert_eq!(got.get(k), Some(true));
    }

    #[test]
    fn pdm_pulse_count_is_popcount(
        payload in proptest::collection::vec(any::<u8>(), 16),
        lead in 0usize..80,
        rate in prop_oneof![Just(1e6), Just(3e6)],
    ) {
        let cfg = config(Modulation::Pdm, rate);
        let bits = build_frame(&payload, 0xA5).unwrap().bits();
        let train = encode(&bits, &cfg);
        prop_assert_eq!(train.pulses().len(), bits.count_ones());
        let marks = pdm_marks(&capture(&train, &cfg, lead, 0.0, 0), &cfg).unwrap();
        prop_assert_eq!(marks.len(), bits.count_ones());
    }
}

#[test]
fn payload_only_frames_round_trip() {
    for m in [Modulation::Pwm, Modulation::Pdm] {
        let cfg = config(m, 5e6);
        let payload: Vec<u8> = (0..16).collect();
        let frame = build_frame(&payload, 0xA5).unwrap();
        let got = decode(&capture(&encode(&frame.bits(), &cfg), &cfg, 3, 0.0, 0), &cfg).unwrap();
        let off = translum::locate_prefix(&got, 0xA5).unwrap();
        let body = translum::extract_payload(&got, off, 128).unwrap();
        assert_eq!(body, BitStream::from_bytes(&payload));
    }
}
