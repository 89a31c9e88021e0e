use twr_noma::analysis::outage;
use twr_noma::config_file::{default_config_text, load_config, preset, ConfigDocument};
use twr_noma::output::{emit_outputs, to_csv};
use twr_noma::sweep::{run_sweep, Metric, Scheme, SweepSpec};
use twr_noma::{model, Signal, SystemConfig};

#[test]
fn file_to_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, default_config_text().replace("sic.omega_i_db = -20.0", "sic.omega_i_db = -15.0")).unwrap();
    let config = load_config(Some(&conf), None, &["interference.varpi2=0.02".to_string()]).unwrap();
    assert!((config.omega_i - 10f64.powf(-1.5)).abs() < 1e-15);
    assert_eq!(config.varpi2, 0.02);

    let mut spec = SweepSpec::new(Metric::ThroughputDl, vec![Signal::X1]).with_snr(0.0, 30.0, 10.0);
    spec.iterations = 5000;
    spec.include_asymptotic = true;
    spec.include_oma = true;
    let first = run_sweep(&spec, &config).unwrap();
    let path = dir.path().join("t.csv");
    emit_outputs(&first, &path, false).unwrap();
    let again = run_sweep(&spec, &config).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), to_csv(&again).into_bytes());
    assert_eq!(first.len(), 4 * 3);
    assert!(first.iter().filter(|r| r.scheme == Scheme::Oma).all(|r| r.analytic.is_none()));
}

#[test]
fn presets_change_only_what_they_name() {
    let base = SystemConfig::table_one();
    let f5 = preset("fig5").unwrap().config().unwrap();
    assert!((f5.omega_i - 0.1).abs() < 1e-15);
    assert_eq!((f5.a, f5.b, f5.rates), (base.a, base.b, base.rates));
    assert_eq!(preset("fig8").unwrap().config().unwrap(), base);
}

#[test]
fn crn_sweep_is_smooth() {
    let mut spec = SweepSpec::new(Metric::ErgodicRate, vec![Signal::X1]).with_snr(0.0, 40.0, 5.0);
    spec.iterations = 20_000;
    spec.modes = vec![twr_noma::SicMode::Perfect];
    spec.common_random_numbers = true;
    let rows = run_sweep(&spec, &SystemConfig::table_one()).unwrap();
    assert!(rows.windows(2).all(|w| w[1].mc.mean >= w[0].mc.mean));
}

#[test]
fn single_precision_tracks_double() {
    for x in Signal::ALL {
        for db in [5.0, 20.0, 35.0] {
            let c64 = SystemConfig::table_one().with_snr_db(db);
            let c32 = model::SystemConfig::<f32>::table_one().with_snr_db(db as f32);
            let p64 = outage(&c64, x).unwrap().p_exact;
            let p32 = outage(&c32, x).unwrap().p_exact as f64;
            assert!((p64 - p32).abs() < 1e-4, "{x} {db} dB: {p64} vs {p32}");
        }
    }
}

#[test]
fn unknown_keys_rejected_from_files() {
    let err = ConfigDocument::parse("schema_version = 1\nnoma.c1 = 3\n").unwrap_err();
    assert!(err.to_string().contains("noma.c1"));
}
