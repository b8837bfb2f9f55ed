use mimcei::estimator::{build_index_set, mlmc_params, run_mimc, LevelSpec, RunOptions, VarianceModel};
use mimcei::harness::{least_squares_line, Preset};
use mimcei::model::QoIFunctional;
use mimcei::noise::sample_lattice;
use mimcei::rng::StreamKey;
use mimcei::solver::{pair_difference, solve, Grids};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn mimc_mean_agrees_with_single_level_monte_carlo() {
    let preset = Preset::NonlinearNu4_3;
    let mut p = preset.problem();
    p.qoi.functional = QoIFunctional::LinearFunctional(vec![1.0]);
    let rates = preset.rates(VarianceModel::Standard);
    let eps = 0.125;
    let opts = RunOptions::default();
    let runs: Vec<f64> = (0..50)
        .map(|s| run_mimc(&p, eps, &rates, 500 + s, &opts).unwrap().value.as_scalar().unwrap())
        .collect();
    let (e1, e2) = build_index_set(LevelSpec::Tolerance(eps), &rates).unwrap().extent();
    let grids = Grids::dyadic(e1.max(e2));
    let (m, n) = (grids.steps(e1), grids.modes(e2));
    let direct: Vec<f64> = (0..4000)
        .map(|i| {
            let lat = sample_lattice(&p, n, m, StreamKey::new(77, [900, 900], i)).unwrap();
            solve(&p, m, n, &lat).unwrap().qoi.as_scalar().unwrap()
        })
        .collect();
    let (a, sa) = mean_and_se(&runs);
    let (b, sb) = mean_and_se(&direct);
    assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "{a} +- {sa} vs {b} +- {sb}");
}

#[test]
fn mlmc_pair_variance_decays() {
    let preset = Preset::LinearNu4_3;
    let p = preset.problem();
    let params = mlmc_params(0.125, 1.0, preset.nu(), 0.5, 2.0 / 3.0).unwrap();
    let mut pts = Vec::new();
    for level in 1..=5 {
        let fine = params.grid(level);
        let coarse = params.grid(level - 1);
        let draws: Vec<_> = (0..1000)
            .map(|i| {
                let lat = sample_lattice(&p, fine.1, fine.0, StreamKey::mlmc(13, level, i)).unwrap();
                pair_difference(&p, fine, Some(coarse), &lat).unwrap()
            })
            .collect();
        let mut mean = draws[0].zero_like();
        for d in &draws {
            mean.add_scaled(1.0 / draws.len() as f64, d);
        }
        let var = draws.iter().map(|d| d.difference(&mean).norm_sq()).sum::<f64>() / (draws.len() - 1) as f64;
        pts.push((level as f64, -var.log2()));
    }
    // Level 1 refines time only, so its variance sits low; compare the
    // space-refining levels 2 and 5 as well as the overall trend.
    let (slope, _) = least_squares_line(&pts).unwrap();
    assert!(slope >= 0.3, "slope {slope}, points {pts:?}");
    assert!(pts[4].1 - pts[1].1 >= 2.0, "points {pts:?}");
}

#[test]
fn estimator_json_echoes_configuration() {
    let preset = Preset::LinearNu4_3;
    let out = run_mimc(&preset.problem(), 0.3, &preset.rates(VarianceModel::Reduced), 4, &RunOptions::default()).unwrap();
    let v = serde_json::to_value(&out).unwrap();
    assert_eq!(v["method"], "MIMC2");
    for key in ["value", "perIndex", "totalCost", "seed", "config"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["config"]["rates"]["varianceModel"].is_string());
    assert_eq!(v["perIndex"].as_array().unwrap().len(), out.per_index.len());
}
