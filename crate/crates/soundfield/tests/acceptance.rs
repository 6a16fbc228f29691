//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria 3 and 4 share the full CI-profile single-wave runs (all three
//! arrays, nine octave bands), computed once.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64;
use soundfield::arrays::{make_afmt, make_fibo64, make_tf24, pair_layout};
use soundfield::benchmarks::{
    run_case1, run_case2, run_case3, ArrayKind, CaseConfig, CaseId, CaseResult, Pipeline, Profile,
    Scalar, SummaryRow,
};
use soundfield::estimators::{
    accumulate_cov, doa_from_intensity, eig3, psi_com, psi_pr, AveWeight, CovAccumulator,
};
use soundfield::rng::task_rng;
use soundfield::sh::{estimate_hoa, foa_from_hoa, HoaCoefficients, DEFAULT_REGULARIZATION};
use soundfield::spatial::{angle_between, frame_constant, Direction};
use soundfield::wavefield::{
    synth_rigid, wave_from_incidence, BandSpec, Medium, Scene, OCTAVE_CENTERS,
};

// ---------------------------------------------------------------------------
// criterion 1: tight-frame identity of the 12-axis direction matrix
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_tight_frame_identity() {
    let layout = pair_layout(&make_tf24()).unwrap();
    let check = frame_constant(&layout.axes()).unwrap();
    let pass = (check.constant - 4.0).abs() < 1e-12 && check.max_offdiag < 1e-12;
    println!(
        "acceptance 1: {} — frame constant {} (|A-4| = {:.2e}), max off-diagonal {:.2e}",
        if pass { "PASS" } else { "FAIL" },
        check.constant,
        (check.constant - 4.0).abs(),
        check.max_offdiag
    );
    assert!(pass);
    assert!(check.is_tight);
}

// ---------------------------------------------------------------------------
// criterion 2: eigen-index anchor spectra
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_eigen_anchor_triple() {
    let anchors = [
        ([1.0, 0.0, 0.0], 0.0),
        ([1.0, 1.0, 0.0], 0.5),
        ([1.0, 1.0, 1.0], 1.0),
    ];
    let mut worst = 0.0_f64;
    for (spectrum, expected) in anchors {
        let com = psi_com(&spectrum).unwrap();
        let pr = psi_pr(&spectrum).unwrap().normalized;
        worst = worst.max((com - expected).abs()).max((pr - expected).abs());
    }
    let pass = worst < 1e-12;
    println!(
        "acceptance 2: {} — anchor-spectrum deviation {:.2e} (tolerance 1e-12)",
        if pass { "PASS" } else { "FAIL" },
        worst
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// criteria 3 and 4 share the CI single-plane-wave runs
// ---------------------------------------------------------------------------

struct Case1Runs {
    results: Vec<(ArrayKind, CaseResult)>,
    elapsed: Duration,
}

fn case1_runs() -> &'static Case1Runs {
    static RUNS: OnceLock<Case1Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let results = [ArrayKind::Afmt, ArrayKind::Fibo64, ArrayKind::Tf24]
            .into_iter()
            .map(|kind| {
                let cfg = CaseConfig::named(CaseId::Case1, kind, Profile::Ci);
                (kind, run_case1(&cfg).expect("case 1 run"))
            })
            .collect();
        Case1Runs {
            results,
            elapsed: start.elapsed(),
        }
    })
}

fn summary_mean(result: &CaseResult, band: f64, index: &str) -> f64 {
    result
        .summary
        .iter()
        .find_map(|row| match row {
            SummaryRow::Mean {
                band_hz,
                index: name,
                mean,
            } if *band_hz == band && name == index => Some(*mean),
            _ => None,
        })
        .unwrap_or(f64::NAN)
}

#[test]
fn criterion_3_case1_eigen_indices_near_zero() {
    let runs = case1_runs();
    let mut violations = Vec::new();
    println!("acceptance 3: per-band mean of eigen indices (CI grid, bound 0.005)");
    for (kind, result) in &runs.results {
        let mut nine_band = (0.0, 0.0);
        for &band in &OCTAVE_CENTERS {
            let pr = summary_mean(result, band, "psi_pr");
            let com = summary_mean(result, band, "psi_com");
            nine_band.0 += pr / 9.0;
            nine_band.1 += com / 9.0;
            println!("  {} {:>6} Hz: psi_pr {pr:.5}  psi_com {com:.5}", kind.name(), band);
            if pr > 0.005 {
                violations.push(format!("{} {band} Hz psi_pr {pr:.5}", kind.name()));
            }
            if com > 0.005 {
                violations.push(format!("{} {band} Hz psi_com {com:.5}", kind.name()));
            }
        }
        println!(
            "  {} nine-band average: psi_pr {:.5}  psi_com {:.5}",
            kind.name(),
            nine_band.0,
            nine_band.1
        );
    }
    println!(
        "acceptance 3: case-1 runtime {:.1} s (target < 120 s)",
        runs.elapsed.as_secs_f64()
    );
    assert!(
        runs.elapsed < Duration::from_secs(120),
        "case 1 runtime exceeded the target"
    );
    if violations.is_empty() {
        println!("acceptance 3: PASS — all per-band eigen-index means <= 0.005");
    } else {
        println!(
            "acceptance 3: FAIL — {} per-band mean(s) above 0.005: {}",
            violations.len(),
            violations.join("; ")
        );
    }
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

#[test]
fn criterion_4_case1_arrival_detection_error() {
    let runs = case1_runs();
    let mut violations = Vec::new();
    for (kind, result) in &runs.results {
        for &band in &OCTAVE_CENTERS {
            let err = summary_mean(result, band, "doa_err_deg");
            match kind {
                ArrayKind::Fibo64 => {
                    let bound = if band <= 4000.0 { 1.0 } else { 2.0 };
                    if err >= bound {
                        violations.push(format!("fibo64 {band} Hz mean error {err:.3} deg"));
                    }
                }
                ArrayKind::Tf24 => {
                    let bound = match band as u64 {
                        8000 => 6.0,
                        16000 => 9.0,
                        _ => f64::INFINITY,
                    };
                    if err > bound {
                        violations.push(format!("tf24 {band} Hz mean error {err:.3} deg"));
                    }
                }
                ArrayKind::Afmt => {}
            }
        }
    }
    let fibo_16k = summary_mean(&runs.results[1].1, 16000.0, "doa_err_deg");
    let tf24_8k = summary_mean(&runs.results[2].1, 8000.0, "doa_err_deg");
    let tf24_16k = summary_mean(&runs.results[2].1, 16000.0, "doa_err_deg");
    if violations.is_empty() {
        println!(
            "acceptance 4: PASS — fibo64 within 1/2 deg (16 kHz: {fibo_16k:.4} deg); \
             tf24 {tf24_8k:.2} deg at 8 kHz (<= 6), {tf24_16k:.2} deg at 16 kHz (<= 9)"
        );
    } else {
        println!("acceptance 4: FAIL — {}", violations.join("; "));
    }
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

// ---------------------------------------------------------------------------
// criterion 5: case 2 linearity for the tight-frame array
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_case2_linearity() {
    let mut cfg = CaseConfig::named(CaseId::Case2, ArrayKind::Tf24, Profile::Ci);
    cfg.bands = vec![250.0, 500.0, 1000.0, 2000.0];
    let result = run_case2(&cfg).unwrap();
    let mut violations = Vec::new();
    for &band in &cfg.bands {
        let (max_err, pearson) = result
            .summary
            .iter()
            .find_map(|row| match row {
                SummaryRow::LinearityError {
                    band_hz,
                    index,
                    max_abs_err,
                    pearson_r,
                } if *band_hz == band && index == "psi_com" => Some((*max_abs_err, *pearson_r)),
                _ => None,
            })
            .unwrap();
        println!("  tf24 {band:>6} Hz: max |psi_com - (1 - eta)| = {max_err:.4}, pearson {pearson:.5}");
        if max_err >= 0.12 {
            violations.push(format!("{band} Hz max error {max_err:.4}"));
        }
        if pearson <= 0.99 {
            violations.push(format!("{band} Hz pearson {pearson:.5}"));
        }
    }
    if violations.is_empty() {
        println!("acceptance 5: PASS — psi_com tracks 1 - eta (max error < 0.12, pearson > 0.99)");
    } else {
        println!("acceptance 5: FAIL — {}", violations.join("; "));
    }
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

// ---------------------------------------------------------------------------
// criterion 6: case 3 anchors at 1 kHz for all arrays
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_case3_interference_anchors() {
    let start = Instant::now();
    let mut violations = Vec::new();
    for kind in [ArrayKind::Afmt, ArrayKind::Fibo64, ArrayKind::Tf24] {
        let mut cfg = CaseConfig::named(CaseId::Case3, kind, Profile::Ci);
        cfg.bands = vec![1000.0];
        let result = run_case3(&cfg).unwrap();
        let anchors = |index: &str| -> (f64, f64, f64) {
            result
                .summary
                .iter()
                .find_map(|row| match row {
                    SummaryRow::AngleAnchors {
                        index: name,
                        at_0,
                        at_90,
                        at_180,
                        ..
                    } if name == index => Some((*at_0, *at_90, *at_180)),
                    _ => None,
                })
                .unwrap()
        };
        let scalar_name = if kind == ArrayKind::Tf24 { "psi_ave" } else { "psi_ie" };
        let (_, _, scalar_180) = anchors(scalar_name);
        let (com_0, com_90, com_180) = anchors("psi_com");
        println!(
            "  {}: {scalar_name}(180) = {scalar_180:.3}, psi_com(0/90/180) = {com_0:.3}/{com_90:.3}/{com_180:.3}",
            kind.name()
        );
        if scalar_180 < 0.9 {
            violations.push(format!("{} {scalar_name}(180) = {scalar_180:.3}", kind.name()));
        }
        if com_180 > 0.05 {
            violations.push(format!("{} psi_com(180) = {com_180:.3}", kind.name()));
        }
        if !(0.45..=0.55).contains(&com_90) {
            violations.push(format!("{} psi_com(90) = {com_90:.3}", kind.name()));
        }
        if com_0 > 0.05 {
            violations.push(format!("{} psi_com(0) = {com_0:.3}", kind.name()));
        }
    }
    let elapsed = start.elapsed();
    println!(
        "acceptance 6: case-3 runtime {:.1} s (target < 60 s)",
        elapsed.as_secs_f64()
    );
    assert!(elapsed < Duration::from_secs(60));
    if violations.is_empty() {
        println!("acceptance 6: PASS — interference anchors hold for all arrays");
    } else {
        println!("acceptance 6: FAIL — {}", violations.join("; "));
    }
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

// ---------------------------------------------------------------------------
// criterion 7: harmonic round trip on the rigid-sphere chain
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_sh_round_trip() {
    let spec = make_fibo64();
    let medium = Medium::default();
    let incidence = Direction::from_angles(75.0, 55.0).unwrap();
    let scene = Scene::new(1000.0, vec![wave_from_incidence(incidence)]).unwrap();
    let snap = synth_rigid(&spec, &scene, &medium, None).unwrap();
    let estimated = estimate_hoa(&snap, &spec, &medium, 4, DEFAULT_REGULARIZATION).unwrap();
    let analytic = HoaCoefficients::plane_wave(&incidence, Complex64::new(1.0, 0.0), 4);
    let mut worst: f64 = 0.0;
    for acn in 0..9 {
        let err = (estimated.values[acn] - analytic.values[acn]).norm();
        worst = worst.max(err / analytic.values[acn].norm().max(0.05));
    }
    let (p, u) = foa_from_hoa(&estimated, &medium).unwrap();
    let q = soundfield::estimators::foa_from_pu(p, u, &medium);
    let doa_err = angle_between(&doa_from_intensity(&q.intensity).unwrap(), &incidence);
    let pass = worst < 0.01 && doa_err < 1.0;
    println!(
        "acceptance 7: {} — coefficient error {:.4}% (n <= 2), intensity DOA error {:.4} deg",
        if pass { "PASS" } else { "FAIL" },
        100.0 * worst,
        doa_err
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// criterion 8: property suite
// ---------------------------------------------------------------------------

/// Independent eigenvalue oracle: trigonometric roots of the characteristic
/// cubic of a Hermitian 3x3 matrix.
fn cubic_eigenvalues(m: &nalgebra::Matrix3<Complex64>) -> [f64; 3] {
    let q = (m[(0, 0)].re + m[(1, 1)].re + m[(2, 2)].re) / 3.0;
    let mut p2 = 0.0;
    for i in 0..3 {
        p2 += (m[(i, i)].re - q) * (m[(i, i)].re - q);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        p2 += 2.0 * m[(i, j)].norm_sqr();
    }
    if p2 <= 1e-300 {
        return [q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    let mut b = nalgebra::Matrix3::<Complex64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let sub = if i == j {
                Complex64::new(q, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            b[(i, j)] = (m[(i, j)] - sub) / Complex64::new(p, 0.0);
        }
    }
    let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
        - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
        + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
    let r = (det.re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    let mut out = [l1, l2, l3];
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

#[test]
fn criterion_8_property_suite() {
    use rand::Rng;
    let medium = Medium::default();

    // scale invariance of every index across all three arrays
    let alpha = Complex64::from_polar(0.37, 2.1);
    let mut worst_scale = 0.0_f64;
    for spec in [make_afmt(), make_fibo64(), make_tf24()] {
        let pipeline = Pipeline::new(spec, medium).unwrap();
        let band = BandSpec::new(2000.0).unwrap().with_tones(20);
        let scenes = soundfield::wavefield::band_noise_scenes(
            &band,
            &[wave_from_incidence(Direction::from_angles(50.0, 70.0).unwrap())],
            3,
        );
        let mut plain = soundfield::benchmarks::BandAccumulator::new(false);
        let mut scaled = soundfield::benchmarks::BandAccumulator::new(false);
        for scene in &scenes {
            let snap = pipeline.synthesize(scene).unwrap();
            let mut s = snap.clone();
            for v in s.values.iter_mut() {
                *v *= alpha;
            }
            plain.push(&pipeline.snapshot_quantities(&snap).unwrap());
            scaled.push(&pipeline.snapshot_quantities(&s).unwrap());
        }
        let a = plain.finalize(&pipeline, AveWeight::VelocitySquared, None).unwrap();
        let b = scaled.finalize(&pipeline, AveWeight::VelocitySquared, None).unwrap();
        let value = |s: &Scalar| match s {
            Scalar::Ie(c) => c.value,
            Scalar::Ave(v) => *v,
        };
        worst_scale = worst_scale
            .max((value(&a.scalar) - value(&b.scalar)).abs())
            .max((a.psi_pr.normalized - b.psi_pr.normalized).abs())
            .max((a.psi_com - b.psi_com).abs())
            .max(angle_between(&a.doa.unwrap(), &b.doa.unwrap()));
    }
    assert!(worst_scale < 1e-9, "scale invariance violated: {worst_scale:.2e}");

    // rotation equivariance under a 90-degree frame symmetry
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
    let spec = make_tf24();
    let mut rotated = spec.clone();
    for s in rotated.sensors.iter_mut() {
        let p = rot * s.position();
        s.position_m = [p.x, p.y, p.z];
        s.orientation = Direction::new(rot * s.orientation.as_vector()).unwrap();
    }
    let base = Pipeline::new(spec, medium).unwrap();
    let turned = Pipeline::new(rotated, medium).unwrap();
    let incidence = Direction::from_angles(33.0, 112.0).unwrap();
    let incidence_rot = Direction::new(rot * incidence.as_vector()).unwrap();
    let scene = Scene::new(2000.0, vec![wave_from_incidence(incidence)]).unwrap();
    let scene_rot = Scene::new(2000.0, vec![wave_from_incidence(incidence_rot)]).unwrap();
    let qa = base.scene_quantities(&scene).unwrap();
    let qb = turned.scene_quantities(&scene_rot).unwrap();
    let rot_err = (rot * qa.intensity - qb.intensity).norm() / qa.intensity.norm();
    assert!(rot_err < 1e-9, "rotation equivariance violated: {rot_err:.2e}");

    // eigenvalue solver vs the characteristic-cubic oracle
    let mut rng = task_rng(8, &[88]);
    let mut worst_eig = 0.0_f64;
    for _ in 0..1000 {
        let mut acc = CovAccumulator::new();
        for _ in 0..3 {
            acc.push(&Vector3::new(
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ));
        }
        let cov = acc.finalize().unwrap().matrix;
        let solved = eig3(&cov).unwrap();
        let oracle = cubic_eigenvalues(&cov);
        let scale = solved[0].abs().max(1e-12);
        for k in 0..3 {
            worst_eig = worst_eig.max((solved[k] - oracle[k]).abs() / scale);
        }
    }
    assert!(worst_eig < 1e-9, "eigen solver deviates from oracle: {worst_eig:.2e}");

    // accumulator associativity: bit-level under fixed order, 1e-12 under merge
    let samples: Vec<Vector3<Complex64>> = (0..120)
        .map(|_| {
            Vector3::new(
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    let once = accumulate_cov(samples.iter().copied()).unwrap();
    let twice = accumulate_cov(samples.iter().copied()).unwrap();
    let mut merge_err = 0.0_f64;
    for split in [1usize, 40, 77, 119] {
        let mut left = CovAccumulator::new();
        let mut right = CovAccumulator::new();
        for s in &samples[..split] {
            left.push(s);
        }
        for s in &samples[split..] {
            right.push(s);
        }
        let merged = right.merge(left).finalize().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    once.matrix[(i, j)].re.to_bits(),
                    twice.matrix[(i, j)].re.to_bits(),
                    "fixed-order accumulation must be bit-stable"
                );
                merge_err = merge_err.max((once.matrix[(i, j)] - merged.matrix[(i, j)]).norm());
            }
        }
    }
    assert!(merge_err < 1e-12, "merge reordering error {merge_err:.2e}");

    println!(
        "acceptance 8: PASS — scale invariance {worst_scale:.1e}, rotation {rot_err:.1e}, \
         eigen oracle {worst_eig:.1e} over 1000 matrices, merge reorder {merge_err:.1e}"
    );
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical reruns of a benchmark command
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &std::path::Path, jobs: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_soundfield"))
            .args([
                "case2",
                "--array",
                "tf24",
                "--bands",
                "1000",
                "--profile",
                "ci",
                "--rays",
                "500",
                "--tones",
                "30",
                "--eta-step",
                "0.25",
                "--seed",
                "7",
                "--jobs",
                jobs,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run(&a, "2");
    run(&b, "2");
    run(&c, "1"); // thread count must not affect results
    for file in ["results.csv", "summary.csv", "config.echo.json", "results.json"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        let fc = std::fs::read(c.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical reruns");
        assert_eq!(fa, fc, "{file} depends on the thread count");
    }
    println!("acceptance 9: PASS — reruns and thread-count changes are byte-identical");
}
