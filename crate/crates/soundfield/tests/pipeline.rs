//! Cross-module round trips: synthesis -> estimation -> indices.

use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64;
use soundfield::arrays::{make_afmt, make_fibo64, make_tf24, ArraySpec};
use soundfield::benchmarks::{Pipeline, Scalar};
use soundfield::estimators::{
    cov_pu_whitened, doa_from_intensity, psi_ave, psi_directional, AveWeight,
};
use soundfield::rng::task_rng;
use soundfield::sh::{estimate_hoa, foa_from_hoa, HoaCoefficients, DEFAULT_REGULARIZATION};
use soundfield::spatial::{angle_between, Direction};
use soundfield::wavefield::{
    diffuse_rays_with, synth_rigid, wave_from_incidence, BandSpec, Medium, Scene,
    OCTAVE_CENTERS,
};

#[test]
fn hoa_round_trip_recovers_plane_wave_coefficients() {
    let spec = make_fibo64();
    let medium = Medium::default();
    let incidence = Direction::from_angles(40.0, 60.0).unwrap();
    let scene = Scene::new(1000.0, vec![wave_from_incidence(incidence)]).unwrap();
    let snap = synth_rigid(&spec, &scene, &medium, None).unwrap();
    let estimated = estimate_hoa(&snap, &spec, &medium, 4, DEFAULT_REGULARIZATION).unwrap();
    let analytic = HoaCoefficients::plane_wave(&incidence, Complex64::new(1.0, 0.0), 4);
    for n in 0..=2usize {
        for acn in (n * n)..((n + 1) * (n + 1)) {
            let err = (estimated.values[acn] - analytic.values[acn]).norm();
            let scale = analytic.values[acn].norm().max(0.05);
            assert!(
                err / scale < 0.01,
                "acn {acn}: {:?} vs {:?}",
                estimated.values[acn],
                analytic.values[acn]
            );
        }
    }
    let (p, u) = foa_from_hoa(&estimated, &medium).unwrap();
    let q = soundfield::estimators::foa_from_pu(p, u, &medium);
    let doa = doa_from_intensity(&q.intensity).unwrap();
    assert!(angle_between(&doa, &incidence) < 1.0);
}

#[test]
fn plane_wave_impedance_across_bands() {
    let spec = make_fibo64();
    let medium = Medium::default();
    let incidence = Direction::from_angles(123.0, 77.0).unwrap();
    for &fc in &[125.0, 500.0, 2000.0, 5000.0] {
        let scene = Scene::new(fc, vec![wave_from_incidence(incidence)]).unwrap();
        let snap = synth_rigid(&spec, &scene, &medium, None).unwrap();
        let a = estimate_hoa(&snap, &spec, &medium, 4, DEFAULT_REGULARIZATION).unwrap();
        let (p, u) = foa_from_hoa(&a, &medium).unwrap();
        let norm_u: f64 = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let ratio = norm_u * medium.impedance() / p.norm();
        assert!(
            (0.95..=1.05).contains(&ratio),
            "impedance ratio {ratio} at {fc} Hz"
        );
    }
}

#[test]
fn fibo64_intensity_doa_below_one_degree_in_every_band() {
    // the full processing chain is order-limited, like the array's analysis
    let pipeline = Pipeline::new(make_fibo64(), Medium::default()).unwrap();
    for &fc in &OCTAVE_CENTERS {
        for (az, zen) in [(10.0, 20.0), (200.0, 95.0), (321.0, 160.0)] {
            let incidence = Direction::from_angles(az, zen).unwrap();
            let scene = Scene::new(fc, vec![wave_from_incidence(incidence)]).unwrap();
            let q = pipeline.scene_quantities(&scene).unwrap();
            let doa = doa_from_intensity(&q.intensity).unwrap();
            let err = angle_between(&doa, &incidence);
            assert!(err < 1.0, "{err} deg at {fc} Hz from ({az}, {zen})");
        }
    }
}

/// Multiply every sensor signal by a complex factor; all indices must be
/// unchanged and the arrival direction preserved.
#[test]
fn scale_invariance_of_indices() {
    let medium = Medium::default();
    let alpha = Complex64::from_polar(3.7, 1.1);
    for spec in [make_afmt(), make_fibo64(), make_tf24()] {
        let pipeline = Pipeline::new(spec, medium).unwrap();
        let incidence = Direction::from_angles(75.0, 50.0).unwrap();
        let mut rng = task_rng(11, &[0]);
        let band = BandSpec::new(1000.0).unwrap().with_tones(20);
        let scenes = soundfield::wavefield::band_noise_scenes(
            &band,
            &[wave_from_incidence(incidence)],
            77,
        );
        let mut acc_a = soundfield::benchmarks::BandAccumulator::new(false);
        let mut acc_b = soundfield::benchmarks::BandAccumulator::new(false);
        for scene in &scenes {
            let snap = pipeline.synthesize(scene).unwrap();
            let mut scaled = snap.clone();
            for v in scaled.values.iter_mut() {
                *v *= alpha;
            }
            acc_a.push(&pipeline.snapshot_quantities(&snap).unwrap());
            acc_b.push(&pipeline.snapshot_quantities(&scaled).unwrap());
        }
        let _ = &mut rng;
        let ia = acc_a.finalize(&pipeline, AveWeight::VelocitySquared, None).unwrap();
        let ib = acc_b.finalize(&pipeline, AveWeight::VelocitySquared, None).unwrap();
        let scalar = |s: &Scalar| match s {
            Scalar::Ie(c) => c.value,
            Scalar::Ave(v) => *v,
        };
        assert!((scalar(&ia.scalar) - scalar(&ib.scalar)).abs() < 1e-9);
        assert!((ia.psi_pr.normalized - ib.psi_pr.normalized).abs() < 1e-9);
        assert!((ia.psi_com - ib.psi_com).abs() < 1e-9);
        let da = ia.doa.unwrap();
        let db = ib.doa.unwrap();
        assert!(angle_between(&da, &db) < 1e-9);
    }
}

/// Rotating the scene and the array rigidly by a symmetry rotation of the
/// tight frame leaves scalar indices unchanged and rotates intensity/DOA.
#[test]
fn rotation_equivariance_under_frame_symmetry() {
    let medium = Medium::default();
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
    let spec = make_tf24();
    let pipeline = Pipeline::new(spec.clone(), medium).unwrap();

    let mut rotated = spec.clone();
    for s in rotated.sensors.iter_mut() {
        let p = rot * s.position();
        s.position_m = [p.x, p.y, p.z];
        s.orientation = Direction::new(rot * s.orientation.as_vector()).unwrap();
    }
    let pipeline_rot = Pipeline::new(rotated, medium).unwrap();

    let incidence = Direction::from_angles(25.0, 65.0).unwrap();
    let incidence_rot = Direction::new(rot * incidence.as_vector()).unwrap();
    for &fc in &[500.0, 4000.0] {
        let scene = Scene::new(fc, vec![wave_from_incidence(incidence)]).unwrap();
        let scene_rot = Scene::new(fc, vec![wave_from_incidence(incidence_rot)]).unwrap();
        let q = pipeline.scene_quantities(&scene).unwrap();
        let qr = pipeline_rot.scene_quantities(&scene_rot).unwrap();
        let rotated_i = rot * q.intensity;
        assert!(
            (rotated_i - qr.intensity).norm() <= 1e-9 * q.intensity.norm().max(1e-300),
            "intensity equivariance at {fc}"
        );
        let ax = q.axes.unwrap();
        let axr = qr.axes.unwrap();
        // per-axis energies are a permutation of each other under the symmetry
        let mut a: Vec<f64> = ax.energy.clone();
        let mut b: Vec<f64> = axr.energy.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1e-300));
        }
    }
}

#[test]
fn ave_weight_laws_agree_on_beam_scenario() {
    // beam-dominated mixture (eta = 0.95) at 2 kHz: the velocity-squared and
    // energy weightings give directional averages within 0.1
    let medium = Medium::default();
    let pipeline = Pipeline::new(make_tf24(), medium).unwrap();
    let center = Direction::from_angles(3.0, 87.0).unwrap();
    let mut rng = task_rng(5, &[42]);
    let band = BandSpec::new(2000.0).unwrap();
    let mut acc = soundfield::benchmarks::BandAccumulator::new(false);
    for _ in 0..50 {
        let f = soundfield::wavefield::tone_frequency(&band, &mut rng);
        let mut beam =
            soundfield::wavefield::beam_rays_with(2000, &center, 0.005, &mut rng).unwrap();
        soundfield::wavefield::normalize_energy(&mut beam, 0.95);
        let mut diffuse = diffuse_rays_with(2000, &mut rng);
        soundfield::wavefield::normalize_energy(&mut diffuse, 0.05);
        let mut waves = beam;
        waves.append(&mut diffuse);
        let scene = Scene { frequency_hz: f, waves };
        acc.push(&pipeline.scene_quantities(&scene).unwrap());
    }
    let by_u2 = acc
        .finalize(&pipeline, AveWeight::VelocitySquared, None)
        .unwrap();
    let by_energy = acc.finalize(&pipeline, AveWeight::Energy, None).unwrap();
    let value = |s: &Scalar| match s {
        Scalar::Ave(v) => *v,
        Scalar::Ie(c) => c.value,
    };
    let (a, b) = (value(&by_u2.scalar), value(&by_energy.scalar));
    assert!((a - b).abs() <= 0.1, "u^2 weighting {a} vs energy weighting {b}");
}

#[test]
fn pu_covariance_diagnostic_anchors() {
    let medium = Medium::default();
    let pipeline = Pipeline::new(make_afmt(), medium).unwrap();
    let band = BandSpec::new(1000.0).unwrap();

    // isotropic reference field through its own whitener: self-consistent by
    // construction, so the whitened eigenvalues sit near 1
    let mut rng = task_rng(9, &[7]);
    let mut reference = Vec::new();
    for _ in 0..8000 {
        let f = soundfield::wavefield::tone_frequency(&band, &mut rng);
        let scene = Scene {
            frequency_hz: f,
            waves: diffuse_rays_with(600, &mut rng),
        };
        let q = pipeline.scene_quantities(&scene).unwrap();
        reference.push(soundfield::estimators::PuSample {
            pressure: q.pressure.unwrap(),
            velocity: q.velocity,
        });
    }
    let mut acc = soundfield::estimators::PuCovAccumulator::new();
    for s in &reference {
        acc.push(s);
    }
    let ref_cov = acc.finalize().unwrap();
    let whitener = soundfield::estimators::PuWhitener::from_reference(&ref_cov).unwrap();
    let (_, idx) = cov_pu_whitened(&reference, &whitener).unwrap();
    for l in &idx.eigenvalues {
        assert!((l - 1.0).abs() < 0.05, "whitened eigenvalues {:?}", idx.eigenvalues);
    }
    assert!(idx.psi_com >= 0.95, "psi_com_pu {}", idx.psi_com);

    // single plane wave: near rank-1 after whitening
    let incidence = Direction::from_angles(33.0, 61.0).unwrap();
    let mut samples = Vec::new();
    for _ in 0..200 {
        let f = soundfield::wavefield::tone_frequency(&band, &mut rng);
        let scene = Scene::new(f, vec![wave_from_incidence(incidence)]).unwrap();
        let q = pipeline.scene_quantities(&scene).unwrap();
        samples.push(soundfield::estimators::PuSample {
            pressure: q.pressure.unwrap(),
            velocity: q.velocity,
        });
    }
    let (_, idx) = cov_pu_whitened(&samples, &whitener).unwrap();
    assert!(idx.psi_com <= 0.05, "single-wave psi_com_pu {}", idx.psi_com);

    // opposing waves: intermediate value
    let up = Direction::from_angles(0.0, 0.0).unwrap();
    let down = up.flipped();
    let mut samples = Vec::new();
    for _ in 0..400 {
        let secondary = soundfield::wavefield::randomize_wave(&wave_from_incidence(down), &mut rng);
        let scene = Scene {
            frequency_hz: 1000.0,
            waves: vec![wave_from_incidence(up), secondary],
        };
        let q = pipeline.scene_quantities(&scene).unwrap();
        samples.push(soundfield::estimators::PuSample {
            pressure: q.pressure.unwrap(),
            velocity: q.velocity,
        });
    }
    let (_, idx) = cov_pu_whitened(&samples, &whitener).unwrap();
    assert!(
        (0.1..=0.4).contains(&idx.psi_com),
        "opposing-wave psi_com_pu {}",
        idx.psi_com
    );
}

#[test]
fn directional_psi_matches_hand_formula() {
    // per-axis clamped index against explicit arithmetic for one pair
    let medium = Medium::default();
    let spec: ArraySpec = make_tf24();
    let pipeline = Pipeline::new(spec, medium).unwrap();
    let incidence = Direction::from_angles(0.0, 90.0).unwrap(); // +x, along pair 10
    let scene = Scene::new(250.0, vec![wave_from_incidence(incidence)]).unwrap();
    let q = pipeline.scene_quantities(&scene).unwrap();
    let ax = q.axes.unwrap();
    let psi10 = psi_directional(ax.intensity[10], ax.energy[10], &medium).unwrap();
    // on-axis at 250 Hz the fixture is near-cardioid: almost pure traveling wave
    assert!(psi10.value < 0.01, "on-axis psi_r {}", psi10.value);
    let psis: Vec<f64> = (0..12)
        .map(|k| psi_directional(ax.intensity[k], ax.energy[k], &medium).unwrap().value)
        .collect();
    let ave = psi_ave(&psis, &ax.velocity_sq).unwrap();
    assert!((0.0..=1.0).contains(&ave));
}
