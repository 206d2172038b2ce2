//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! to the real stdout, so the summary shows up even when output is captured.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use attractorkit::bounds::*;
use attractorkit::config::{Fixture, ModelConfig};
use attractorkit::covering::*;
use attractorkit::dde::Nonlinearity;
use attractorkit::dde::{integrate, NormKind};
use attractorkit::pipeline;
use attractorkit::rds::*;
use attractorkit::sampling::rng;
use attractorkit::spectral::*;
use rand::Rng;

mod common;
use common::{brute_winding, cantor_cloud, finite_difference, phi, product_cloud, segment_cloud};

fn fixture(name: &str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    Fixture::load(&path).unwrap()
}

fn all_fixtures() -> Vec<(String, Fixture)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

/// Prints the verdict line, then fails the test if any check or the time
/// budget failed.
fn verdict(id: u32, name: &str, start: Instant, budget: Duration, failures: &[String], detail: &str) {
    let elapsed = start.elapsed();
    let mut failures = failures.to_vec();
    if elapsed > budget {
        failures.push(format!("took {elapsed:.1?}, budget {budget:?}"));
    }
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "[{status}] criterion {id}: {name} ({elapsed:.2?}) {detail}").unwrap();
    for f in &failures {
        writeln!(out, "    {f}").unwrap();
    }
    out.flush().unwrap();
    assert!(failures.is_empty(), "criterion {id} failed: {failures:#?}");
}

#[test]
fn criterion_1_dimension_formula() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let value = general_bound(1, 2.0, 2.0, 0.5).unwrap();
    let exact = 3f64.ln() / 2f64.ln();
    if (value - exact).abs() > 1e-12 {
        failures.push(format!("bound(1, 2, 2, 1/2) = {value}, expected {exact}"));
    }
    let mut g = rng(2024, 0);
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 100 {
        let (k, k0, lf, rho1, alpha) = (
            g.random_range(1.0..3.0),
            g.random_range(1.0..3.0),
            g.random_range(0.0..0.2),
            g.random_range(-6.0..-1.0),
            g.random_range(0.01..2.0),
        );
        let inputs = DichotomyInputs {
            k,
            k0,
            gamma: -rho1,
            lipschitz: lf,
            rho1,
            rho_m: rho1,
            k_m: 1,
            provenance: Provenance::Analytic,
        };
        let rfde = SqueezingConstants::rfde(inputs).unwrap().certificate(alpha).unwrap();
        let rrd = SqueezingConstants::rrd(DichotomyInputs {
            k0: 1.0,
            gamma: 1.0,
            ..inputs
        })
        .unwrap()
        .certificate(alpha)
        .unwrap();
        if rfde.zeta >= 1.0 || rrd.zeta >= 1.0 {
            continue;
        }
        let pairs = [
            (
                general_bound(1, 2.0, alpha, rfde.zeta).unwrap(),
                rfde_corollary_bound(alpha, k, k0, lf, rho1).unwrap(),
            ),
            (
                general_bound(1, 2.0, alpha, rrd.zeta).unwrap(),
                rrd_corollary_bound(alpha, k, lf, rho1).unwrap(),
            ),
        ];
        for (general, corollary) in pairs {
            let rel = (general - corollary).abs() / corollary.abs().max(1.0);
            worst = worst.max(rel);
            if rel > 1e-12 {
                failures.push(format!(
                    "general {general} vs corollary {corollary} at K={k} K0={k0} L={lf} rho1={rho1} alpha={alpha}"
                ));
            }
        }
        checked += 1;
    }
    let detail = format!("bound = {value:.15}, {checked} random sets, worst relative gap {worst:.1e}");
    verdict(
        1,
        "dimension formula",
        start,
        Duration::from_secs(1),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_2_covering_lemma() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for dim in 1..=3 {
        for ratio in [1.0, 2.0, 4.0, 8.0] {
            for norm in [NormKind::Max, NormKind::Euclidean] {
                let c = cover_ball(dim, norm, 1.0, 1.0 / ratio).unwrap();
                let expected = dim as f64 * 2f64.powi(dim as i32) * (1.0 + ratio).powi(dim as i32);
                cases += 1;
                worst = worst.max(c.centers.len() as f64 / expected);
                if c.bound != expected || c.centers.len() as f64 > expected {
                    failures.push(format!(
                        "dim {dim} ratio {ratio} {norm:?}: {} centers, bound {expected}",
                        c.centers.len()
                    ));
                }
            }
        }
    }
    let detail = format!("{cases} cases, largest count/bound {worst:.3}");
    verdict(2, "covering lemma", start, Duration::from_secs(30), &failures, &detail);
}

#[test]
fn criterion_3_root_solver() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut g = rng(31, 0);
    let mut roots_seen = 0;
    let mut worst = 0.0f64;
    for i in 0..25 {
        let a: f64 = g.random_range(-4.0..-0.5);
        let b: f64 = g.random_range(-0.95..0.95) * a.abs();
        let tau: f64 = g.random_range(0.2..2.0);
        let chi = CharacteristicFunction::scalar(a, b, tau);
        let window = SearchWindow {
            re_min: g.random_range(-8.0..-3.0),
            re_max: g.random_range(-0.3..1.0),
            im_max: g.random_range(5.0..30.0),
        };
        let set = char_roots_in(&chi, window, &RootOptions::default()).unwrap();
        let w = set.window;
        let counted: i64 = set.roots.iter().map(|r| r.multiplicity as i64).sum();
        let winding = brute_winding(&chi, w.re_min, w.re_max, -w.im_max, w.im_max);
        if counted != winding || set.winding_total != winding {
            failures.push(format!(
                "model {i}: {counted} roots, solver winding {}, oracle winding {winding}",
                set.winding_total
            ));
        }
        for r in &set.roots {
            let residual = chi.det(r.lambda).norm();
            worst = worst.max(residual);
            if residual >= 1e-10 {
                failures.push(format!("model {i}: |Delta({})| = {residual:e}", r.lambda));
            }
        }
        roots_seen += set.roots.len();
    }
    let hayes = rightmost_root(&CharacteristicFunction::scalar(0.0, -std::f64::consts::FRAC_PI_2, 1.0)).unwrap();
    let rho1 = hayes.root.lambda.re;
    if rho1.abs() > 1e-8 {
        failures.push(format!("Hayes rho1 = {rho1:e}"));
    }
    let detail = format!("{roots_seen} roots in 25 models, worst residual {worst:.1e}, Hayes rho1 = {rho1:.1e}");
    verdict(3, "root solver", start, Duration::from_secs(60), &failures, &detail);
}

#[test]
fn criterion_4_squeezing() {
    let start = Instant::now();
    let mut fx = fixture("rfde_stable.toml");
    fx.analysis.pairs = 100;
    fx.analysis.horizon_delays = 5.0;
    fx.analysis.slack = 0.05;
    fx.analysis.step = Some(1e-3);
    let analysis = pipeline::certify(&fx).unwrap();
    let v = pipeline::squeeze(&fx, &analysis).unwrap();
    let mut failures = Vec::new();
    if v.pass_rate < 1.0 {
        let bad = v.records.iter().filter(|r| !r.pass).count();
        failures.push(format!("{bad} of {} checks failed", v.records.len()));
    }
    if v.pairs != 100 {
        failures.push(format!("{} pairs", v.pairs));
    }
    let t_max = v.records.iter().map(|r| r.t).fold(0.0, f64::max);
    if (t_max - 5.0 * fx.delay()).abs() > 1e-12 || v.records.iter().any(|r| r.t <= 0.0) {
        failures.push(format!("grid reaches {t_max}"));
    }
    let detail = format!(
        "{} pairs x {} times, pass rate {} (M1 = {:.3}; with M1 = 2: {:.3}), ball radius {:.4}",
        v.pairs,
        v.records.len() / v.pairs,
        v.pass_rate,
        analysis.certification.certificate.constants.m1,
        v.literal_pass_rate,
        v.ball_radius
    );
    verdict(
        4,
        "squeezing inequalities",
        start,
        Duration::from_secs(300),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_5_absorbing_set() {
    let start = Instant::now();
    let fx = fixture("rfde_stable.toml");
    let analysis = pipeline::certify(&fx).unwrap();
    let model = analysis.model();
    let d = analysis.decomp().decay().unwrap();
    let opts = VerifyOptions {
        step: 1e-3,
        ..VerifyOptions::for_delay(model.tau())
    };
    let mut failures = Vec::new();
    let mut detail = format!("K0 = {:.4}, gamma = {:.4};", d.k0, d.gamma);
    match absorbing_set(d.k0, d.gamma, model.lipschitz(), model.c1()) {
        Ok(ball) => {
            let check = check_absorption(model, &ball, 3.0 * ball.radius, 50, fx.analysis.seed, &opts).unwrap();
            let worst = check
                .entry_times
                .iter()
                .map(|t| t.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            detail += &format!(
                " R_B = {:.4}, T_D = {:.4}, latest entry {worst:.4}",
                ball.radius, check.predicted_time
            );
            if !check.pass {
                failures.push(format!("latest entry {worst} after T_D = {}", check.predicted_time));
            }
        }
        Err(e) => {
            failures.push(format!("no absorbing ball: {e}"));
            // what the same check sees on the eventual ball
            let ball = eventual_ball(d.k0, d.gamma, model.lipschitz(), model.c1()).unwrap();
            let check = check_absorption(model, &ball, 3.0 * ball.radius, 50, fx.analysis.seed, &opts).unwrap();
            let worst = check
                .entry_times
                .iter()
                .map(|t| t.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            let eta = d.gamma - d.k0 * model.lipschitz();
            let gronwall = (d.k0 * 3.0 * ball.radius / (ball.radius - d.k0 * model.c1() / eta)).ln() / eta;
            detail += &format!(
                " eventual radius {:.4}: latest entry {worst:.3} vs ln(3)/gamma = {:.3} (Gronwall time {gronwall:.3})",
                ball.radius, check.predicted_time
            );
        }
    }
    verdict(5, "absorbing set", start, Duration::from_secs(300), &failures, &detail);
}

fn tree_failures(tree: &CoveringTree, label: &str) -> Vec<String> {
    let mut out = Vec::new();
    for l in &tree.levels {
        if !l.centers_near_image() {
            out.push(format!(
                "{label} level {}: center gap {} > {}",
                l.level, l.max_center_gap, l.radius
            ));
        }
        if !l.image_covered() {
            out.push(format!("{label} level {}: residual {}", l.level, l.max_residual));
        }
        if !l.within_bound() {
            out.push(format!("{label} level {}: {} > {}", l.level, l.cardinality, l.bound));
        }
    }
    for e in &tree.e_sets {
        if e.cardinality as f64 > e.bound {
            out.push(format!("{label} E^{}: {} > {}", e.level, e.cardinality, e.bound));
        }
    }
    out
}

#[test]
fn criterion_6_covering_tree() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rates = Vec::new();
    let quarter = DiagonalSplitMap::quarter();
    let mixed = DiagonalSplitMap::quarter_eighth();
    let line = PointCloud::lattice(1, NormKind::Max, 801, 1.0).unwrap();
    let square = PointCloud::lattice(2, NormKind::Max, 61, 1.0).unwrap();
    // (label, map, alpha, sample, D, whether zeta is the slowest contraction rate)
    let cases: Vec<(&str, &DiagonalSplitMap, f64, &PointCloud, PointCloud, bool)> = vec![
        (
            "x/4, alpha 1",
            &quarter,
            1.0,
            &line,
            PointCloud::lattice(1, NormKind::Max, 121, 3.0).unwrap(),
            true,
        ),
        (
            "x/4, alpha 1/2",
            &quarter,
            0.5,
            &line,
            PointCloud::lattice(1, NormKind::Max, 121, 3.0).unwrap(),
            true,
        ),
        (
            "x/4, alpha 1/4",
            &quarter,
            0.25,
            &line,
            PointCloud::lattice(1, NormKind::Max, 121, 3.0).unwrap(),
            true,
        ),
        (
            "(x/4, y/8), alpha 1/2",
            &mixed,
            0.5,
            &square,
            PointCloud::lattice(2, NormKind::Max, 31, 1.0).unwrap(),
            true,
        ),
        // zeta = 3/8 only bounds the rate from below here
        (
            "(x/4, y/8), alpha 1",
            &mixed,
            1.0,
            &square,
            PointCloud::lattice(2, NormKind::Max, 31, 1.0).unwrap(),
            false,
        ),
    ];
    for (label, map, alpha, sample, d, tight) in cases {
        let c = map.constants(alpha);
        let tree = build_covering_tree(map, &c, 1.0, 6, sample).unwrap();
        failures.extend(tree_failures(&tree, label));
        let r = verify_exponential_attraction(map, &tree, &d, 6, 0.1).unwrap();
        if !r.pass {
            failures.push(format!("{label}: attraction check failed: {:?}", r.rows));
        }
        match r.fitted_rate {
            Some(k) => {
                rates.push(format!("{label}: {k:.3}/{:.3}", r.expected_rate));
                if tight && (k / r.expected_rate - 1.0).abs() > 0.1 {
                    failures.push(format!("{label}: fitted rate {k} vs -ln zeta = {}", r.expected_rate));
                }
            }
            None => failures.push(format!("{label}: too few absorbed steps to fit a rate")),
        }
    }
    let detail = format!("6 levels; rates {}", rates.join(", "));
    verdict(6, "covering tree", start, Duration::from_secs(60), &failures, &detail);
}

#[test]
fn criterion_7_box_counting_calibration() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let ladder = geometric_ladder(0.125, 0.5, 6);
    let seg = box_counting_dimension(&segment_cloud(2000, 1), &ladder)
        .unwrap()
        .estimate;
    let prod = box_counting_dimension(&product_cloud(1000, 2), &ladder)
        .unwrap()
        .estimate;
    let cantor = box_counting_dimension(&cantor_cloud(8), &geometric_ladder(1.0 / 3.0, 1.0 / 3.0, 6))
        .unwrap()
        .estimate;
    let d = 2f64.ln() / 3f64.ln();
    for (label, got, want, tol) in [
        ("segment", seg, 1.0, 0.15),
        ("product", prod, 2.0, 0.2),
        ("Cantor", cantor, d, 0.1),
    ] {
        if (got - want).abs() > tol {
            failures.push(format!("{label}: {got} not within {tol} of {want}"));
        }
    }
    let detail = format!("segment {seg:.3}, product {prod:.3}, Cantor {cantor:.4}");
    verdict(
        7,
        "box-counting calibration",
        start,
        Duration::from_secs(60),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_8_end_to_end() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    let mut certified = 0;
    for (name, fx) in all_fixtures() {
        let analysis = match pipeline::certify(&fx) {
            Ok(a) => a,
            Err(e) => {
                lines.push(format!("{name}: not certified ({})", e.code()));
                continue;
            }
        };
        certified += 1;
        let dim = pipeline::attractor_dimension(&fx, &analysis, 50, fx.analysis.seed, None).unwrap();
        lines.push(format!(
            "{name}: estimate {:.3} <= bound {:.3}",
            dim.report.estimate, dim.bound
        ));
        if !dim.within_bound {
            failures.push(format!(
                "{name}: estimate {} exceeds bound {}",
                dim.report.estimate, dim.bound
            ));
        }
    }
    let has_rrd = all_fixtures()
        .iter()
        .any(|(_, f)| matches!(f.model, ModelConfig::Rrd(_)) && pipeline::certify(f).is_ok());
    if certified < 2 || !has_rrd {
        failures.push("need certified delay and reaction-diffusion fixtures".into());
    }
    verdict(
        8,
        "end-to-end consistency",
        start,
        Duration::from_secs(600),
        &failures,
        &lines.join("; "),
    );
}

#[test]
fn criterion_9_reaction_diffusion_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let model = match &fixture("rrd_scaled_sin.toml").model {
        ModelConfig::Rrd(c) => c.build().unwrap(),
        _ => unreachable!(),
    };
    let points = 400;
    let (fd, h) = finite_difference(&model, points, 3.125e-5, 1.0);
    let reduced = galerkin_reduce(&model).unwrap();
    let step = 1e-3;
    let nd = (model.r / step).round() as usize;
    let start_seg = history_from_field(&model, nd, phi).unwrap();
    let coeffs = integrate(&reduced, &start_seg, 1.0, step)
        .unwrap()
        .state_at(1.0)
        .unwrap();
    let err = ((0..points)
        .map(|j| (fd[j] - synthesize(&coeffs, (j + 1) as f64 * h)).powi(2))
        .sum::<f64>()
        * h)
        .sqrt();
    if err >= 1e-3 {
        failures.push(format!("L2 gap {err:e}"));
    }
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 2.5] {
        let m = RdModel::new(a, 0.0, 0.7, Nonlinearity::ZERO, 8).unwrap();
        for mode in &mode_spectrum(&m).unwrap().modes {
            let expected = -((mode.mode * mode.mode) as f64) - a;
            if mode.roots.len() != 1 {
                failures.push(format!("a = {a}, mode {}: {} roots", mode.mode, mode.roots.len()));
                continue;
            }
            let r = mode.roots[0].lambda;
            let gap = (r.re - expected).abs().max(r.im.abs());
            worst = worst.max(gap / expected.abs());
            if r.re != expected || r.im != 0.0 {
                failures.push(format!("a = {a}, mode {}: root {r}, expected {expected}", mode.mode));
            }
        }
    }
    let detail = format!("Galerkin vs finite differences {err:.2e} in L2; b = 0 roots worst relative gap {worst:.1e}");
    verdict(
        9,
        "reaction-diffusion oracle",
        start,
        Duration::from_secs(120),
        &failures,
        &detail,
    );
}
