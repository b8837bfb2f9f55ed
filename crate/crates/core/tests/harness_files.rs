use mimcei::estimator::{Method, RunOptions, VarianceModel};
use mimcei::harness::io::{read_rates_csv, read_sweep_csv, write_file, write_rates_csv, write_sweep_csv};
use mimcei::harness::{cost_error_sweep, estimate_rate_surface, fit_dominating_surface, Preset, SweepSpec};
use mimcei::solver::QoIValue;

#[test]
fn doubling_samples_keeps_surface_within_four_standard_errors() {
    let p = Preset::LinearNu4_3.problem();
    let opts = RunOptions::default();
    let a = estimate_rate_surface(&p, 3, 250, 1, &opts).unwrap();
    let b = estimate_rate_surface(&p, 3, 500, 2, &opts).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        assert!((x.ef - y.ef).abs() <= 4.0 * se, "{x:?} vs {y:?}");
    }
}

#[test]
fn surface_files_round_trip_and_fit_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let p = Preset::LinearNu4_3.problem();
    let s = estimate_rate_surface(&p, 3, 200, 9, &RunOptions::default()).unwrap();
    let path = dir.path().join("rates.csv");
    write_file(&path, |w| write_rates_csv(&s, w)).unwrap();
    let back = read_rates_csv(&path).unwrap();
    assert_eq!(back.points, s.points);
    let fit = fit_dominating_surface(&back).unwrap();
    assert!(fit.dominates);
}

#[test]
fn sweep_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let preset = Preset::LinearNu4_3;
    let spec = SweepSpec {
        methods: vec![Method::Mimc1, Method::Mimc2, Method::Mlmc],
        epsilons: vec![0.5, 0.25, 0.125],
        replicates: 2,
        rates: preset.rates(VarianceModel::Standard),
        mixed: None,
        replicate_seeds: Vec::new(),
    };
    let run = |name: &str| {
        let out = cost_error_sweep(&preset.problem(), &spec, &QoIValue::Vector(vec![]), 21, &RunOptions::default());
        let path = dir.path().join(name);
        write_file(&path, |w| write_sweep_csv(&out.records, true, w)).unwrap();
        path
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let records = read_sweep_csv(&a).unwrap();
    assert_eq!(records.len(), 18);
    assert!(records.iter().all(|r| r.cost > 0.0 && r.walltime_s == 0.0));
}
