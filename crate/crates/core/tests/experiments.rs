use std::fs;

use ringlock::coupling::CouplingFunction;
use ringlock::experiments::{
    convergence_experiment, counterexample_experiment, scatter_experiment, seed_for,
    standard_residual_experiment, SettleSettings,
};
use ringlock::io::{sidecar_path, write_table_with_metadata, Metadata};
use ringlock::thresholds::ProbeSettings;
use ringlock::{Error, Scheme};

fn quick_probe() -> ProbeSettings {
    ProbeSettings {
        transient_time: 300.0,
        observation_time: 100.0,
        rel_tol: 1e-2,
        ..ProbeSettings::default()
    }
}

#[test]
fn scatter_tables_are_reproducible() {
    let f = CouplingFunction::sine();
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run in 0..2 {
        let report = scatter_experiment(&f, Scheme::Telescopic, 5, 4, 11, &quick_probe()).unwrap();
        assert_eq!(report.rows.len(), 4);
        for (i, row) in report.rows.iter().enumerate() {
            assert_eq!(row.seed, 11 + i as u64);
            assert!(row.ratio <= report.summary.ratio_bound + 0.05);
        }
        let path = dir.path().join(format!("scatter{run}.csv"));
        let meta = Metadata::new().with("f", f.to_string()).with("seed", 11u64);
        write_table_with_metadata(&path, &report.rows, &meta).unwrap();
        assert!(sidecar_path(&path).exists());
        texts.push(fs::read_to_string(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert!(texts[0].starts_with(
        "seed,n,f_spec,scheme,gamma_c_hat,gamma_r_hat,gamma_c_analytic,ring_bound,ratio\n"
    ));
}

#[test]
fn scatter_analytic_column_exact() {
    let f = CouplingFunction::sine_plus_cos3();
    let p = f.profile().unwrap();
    let report = scatter_experiment(&f, Scheme::Telescopic, 6, 3, 0, &quick_probe()).unwrap();
    for row in &report.rows {
        let fv = ringlock::frequencies::FrequencyVector::sample_uniform(6, row.seed).unwrap();
        let gc = ringlock::analytic::chain_threshold(&p, &fv.cumulative_deviations());
        assert_eq!(row.gamma_c_analytic, gc);
        assert!((row.gamma_c_hat - gc).abs() / gc < 0.02);
    }
}

#[test]
fn single_size_has_no_fit() {
    let f = CouplingFunction::parse("-sin(1)").unwrap();
    let r = convergence_experiment(&f, 0.5, &[8], 1, 3, &SettleSettings::default()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].seed, seed_for(3, 8, 0));
    assert_eq!(r.rows[0].seed, 11);
    assert!(r.separation_slope.is_none());
    assert!(r.rows[0].analytic_residual <= r.rows[0].residual_bound);
    assert!(r.rows[0].separation > 0.0 && r.rows[0].separation < 1.0);
}

#[test]
fn convergence_rejects_bad_fraction() {
    let f = CouplingFunction::sine();
    for frac in [0.0, 1.0, -0.2] {
        assert!(matches!(
            convergence_experiment(&f, frac, &[8], 1, 0, &SettleSettings::default()),
            Err(Error::InvalidConfig(_))
        ));
    }
}

#[test]
fn standard_residuals_shrink() {
    let f = CouplingFunction::shifted_sine(0.6);
    let r = standard_residual_experiment(&f, 0.5, &[8, 64], 8, 2).unwrap();
    assert_eq!(r.rows.len(), 16);
    assert_eq!(r.sizes.len(), 2);
    assert!(r.sizes[1].mean_residual < r.sizes[0].mean_residual);
    for row in r.rows.iter().filter(|row| row.found) {
        assert!(row.chain_residual < 1e-8);
    }
}

#[test]
fn counterexample_report() {
    let report = counterexample_experiment().unwrap();
    assert_eq!(report.checks.len(), 7);
    assert!(report.all_passed(), "{:#?}", report.checks);
}
