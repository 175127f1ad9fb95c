use translum::channel::{RxModel, TissueStack};
use translum::harness::{run_link, run_link_with_injection, sweep, SweepRow, SweepSettings};
use translum::{locate_prefix, BitStream, Config, LinkConfig, Modulation};

fn noisy_rx(thermal: f64) -> RxModel<f64> {
    RxModel { thermal_noise_vrms: thermal, ..RxModel::default() }
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn counters_do_not_depend_on_thread_count() {
    let cfg = LinkConfig::new(5e6, Modulation::Pwm).with_seed(99);
    let stack = TissueStack::preset("bone10_skin7").unwrap();
    // Enough noise to produce errors and the odd sync failure.
    let rx = noisy_rx(0.06);
    let one = pool(1).install(|| run_link(&cfg, &stack, &rx, 60)).unwrap();
    let four = pool(4).install(|| run_link(&cfg, &stack, &rx, 60)).unwrap();
    assert!(one.bit_errors > 0);
    assert_eq!(
        (one.bits_compared, one.bit_errors, one.sync_failures, one.ber, one.ber_upper_95, &one.config_digest),
        (four.bits_compared, four.bit_errors, four.sync_failures, four.ber, four.ber_upper_95, &four.config_digest)
    );
}

#[test]
fn seed_changes_the_noise() {
    let stack = TissueStack::preset("bone10_skin7").unwrap();
    let rx = noisy_rx(0.06);
    let a = run_link(&LinkConfig::new(5e6, Modulation::Pwm).with_seed(1), &stack, &rx, 40).unwrap();
    let b = run_link(&LinkConfig::new(5e6, Modulation::Pwm).with_seed(2), &stack, &rx, 40).unwrap();
    assert_ne!((a.bit_errors, a.config_digest), (b.bit_errors, b.config_digest));
}

#[test]
fn report_invariants_hold() {
    let stack = TissueStack::preset("bone8_skin7").unwrap();
    for thermal in [0.0, 0.05, 0.07] {
        let r = run_link(&LinkConfig::new(2e6, Modulation::Pwm).with_seed(5), &stack, &noisy_rx(thermal), 30).unwrap();
        assert_eq!(r.frames_sent, 30);
        assert_eq!(r.bits_compared, (30 - r.sync_failures) * 1520);
        if r.bits_compared > 0 {
            assert_eq!(r.ber, r.bit_errors as f64 / r.bits_compared as f64);
        }
        assert!(r.ber_upper_95 >= r.ber);
    }
}

#[test]
fn single_precision_pipeline_runs_clean() {
    for m in [Modulation::Pwm, Modulation::Pdm] {
        let cfg = LinkConfig::new(3e6, m).with_seed(8);
        let stack = TissueStack::<f32>::preset("bone10_skin7").unwrap();
        let r = run_link(&cfg, &stack, &RxModel::<f32>::default(), 30).unwrap();
        assert_eq!((r.bit_errors, r.sync_failures), (0, 0), "{m}");
    }
}

#[test]
fn injected_errors_counted_in_noiseless_run() {
    let cfg = LinkConfig::new(1e6, Modulation::Pdm).with_seed(4);
    let stack = TissueStack::<f64>::preset("head_reference").unwrap();
    let k = 3;
    let inject = |_: u64, bits: &mut BitStream| {
        let off = locate_prefix(bits, 0xA5).unwrap();
        for j in 0..k {
            bits.flip(off + 32 + 500 * j);
        }
    };
    let r = run_link_with_injection(&cfg, &stack, &RxModel::noiseless(), 25, &inject).unwrap();
    assert_eq!(r.bit_errors, 25 * k as u64);
}

#[test]
fn embedded_config_drives_a_run() {
    let config = Config::embedded_default();
    let stack = config.tissue.resolve().unwrap();
    let r = run_link(&config.link, &stack, &config.receiver, 20).unwrap();
    assert_eq!((r.bit_errors, r.sync_failures), (0, 0));
}

#[test]
fn json_config_with_units() {
    let config = Config::from_json(
        r#"{
            "link": {"data_rate": "3 Mbit/s", "modulation": "PDM", "led_peak_power": "800 uW", "seed": 12},
            "tissue": {"preset": "bone8_skin7"},
            "receiver": {"thermal_noise_vrms": "4 mV", "bandwidth": "40 MHz"}
        }"#,
    )
    .unwrap();
    assert_eq!(config.link.led_peak_power, 800e-6);
    assert_eq!(config.receiver.bandwidth, 40e6);
    let r = run_link(&config.link, &config.tissue.resolve().unwrap(), &config.receiver, 10).unwrap();
    assert_eq!(r.bit_errors, 0);
}

#[test]
fn sweep_continues_past_bad_rows() {
    let rows = vec![
        SweepRow { rate_bps: 2_000_000, modulation: Modulation::Pwm, preset: "bone8_skin7".into() },
        SweepRow { rate_bps: 2_000_000, modulation: Modulation::Pwm, preset: "no_such_tissue".into() },
        SweepRow { rate_bps: 3_000_000, modulation: Modulation::Pdm, preset: "bone8_skin7".into() },
    ];
    let out = sweep(&rows, &SweepSettings { frames: 5, ..SweepSettings::default() });
    assert!(out[0].report.is_ok() && out[1].report.is_err() && out[2].report.is_ok());
    assert!(out[1].report.as_ref().unwrap_err().contains("no_such_tissue"));
}
