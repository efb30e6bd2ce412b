use ace_core::synth::Pattern;
use ace_core::{
    convection_error, evaluate_case, generate, perturb, AceConfig, AceError, EvalCase, FlowField2D,
    Perturbation, ScalarField2D, SynthSpec,
};

fn masked_mean(values: &[f64], mask: &[bool]) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    sum / n as f64
}

fn moving_blobs(seed: u64) -> SynthSpec {
    SynthSpec {
        height: 80,
        width: 80,
        pattern: Pattern::RandomBlobs { count: 3 },
        advection: (2.0, -1.0),
        convection_rate: 0.0,
        steps: 2,
        seed,
    }
}

#[test]
fn perfect_forecast_scores_zero() {
    let frames = generate(&moving_blobs(3)).unwrap();
    let case = EvalCase::new(
        "perfect",
        frames[0].clone(),
        frames[1].clone(),
        frames[1].clone(),
    )
    .unwrap();
    let report = evaluate_case(&case, &AceConfig::default()).unwrap();
    assert_eq!(report.ae, 0.0);
    assert_eq!(report.ce, 0.0);
    assert_eq!(report.ace, 0.0);
    assert_eq!(report.mse, 0.0);
    assert_eq!(report.psnr, 100.0);
    assert_eq!(report.ssim, 1.0);
}

#[test]
fn blurred_prediction_raises_ae() {
    let spec = SynthSpec::single_blob(96, (44.0, 50.0), 6.0, (3.0, 0.0));
    let frames = generate(&spec).unwrap();
    let cfg = AceConfig::default();
    let sharp = EvalCase::new(
        "sharp",
        frames[0].clone(),
        frames[1].clone(),
        frames[1].clone(),
    )
    .unwrap();
    let blurred = perturb(&frames[1], Perturbation::Blur { sigma: 3.0 }).unwrap();
    let soft = EvalCase::new("soft", frames[0].clone(), frames[1].clone(), blurred).unwrap();
    let a = evaluate_case(&sharp, &cfg).unwrap();
    let b = evaluate_case(&soft, &cfg).unwrap();
    assert!(b.ae > a.ae, "{} vs {}", b.ae, a.ae);
    assert!(b.ace > a.ace);
}

#[test]
fn convection_mismatch_with_exact_flows() {
    let mut spec = SynthSpec::single_blob(96, (46.0, 48.0), 6.0, (2.0, -1.0));
    spec.convection_rate = 0.05;
    let frames = generate(&spec).unwrap();
    let faster = SynthSpec {
        convection_rate: 0.10,
        ..spec.clone()
    };
    let prediction = generate(&faster).unwrap().swap_remove(1);
    let exact = FlowField2D::uniform(96, 96, 2.0, -1.0);
    let (_, map) = convection_error(&frames[0], &frames[1], &prediction, &exact, &exact).unwrap();
    let ce = masked_mean(map.values(), &spec.support_mask(0.0).unwrap());
    assert!((ce - 0.05).abs() < 0.005, "ce on support {ce}");
}

#[test]
fn evaluation_is_deterministic() {
    let frames = generate(&moving_blobs(11)).unwrap();
    let pred = perturb(&frames[1], Perturbation::ScaleAmplitude { factor: 0.8 }).unwrap();
    let case = EvalCase::new("det", frames[0].clone(), frames[1].clone(), pred).unwrap();
    let cfg = AceConfig::default();
    let a = evaluate_case(&case, &cfg).unwrap();
    let b = evaluate_case(&case, &cfg).unwrap();
    assert_eq!(a.ae.to_bits(), b.ae.to_bits());
    assert_eq!(a.ce.to_bits(), b.ce.to_bits());
    assert_eq!(a.ssim.to_bits(), b.ssim.to_bits());
}

#[test]
fn degenerate_case_names_case_id() {
    let flat = ScalarField2D::from_fn(16, 16, |_, _| 2.5).unwrap();
    let case = EvalCase::new("flat-07", flat.clone(), flat.clone(), flat).unwrap();
    let err = evaluate_case(&case, &AceConfig::default()).unwrap_err();
    assert!(
        matches!(err.root(), AceError::DegenerateRange { .. }),
        "{err}"
    );
    assert!(err.to_string().contains("flat-07"), "{err}");
}

#[test]
fn maps_emitted_on_request() {
    let frames = generate(&moving_blobs(5)).unwrap();
    let case = EvalCase::new(
        "maps",
        frames[0].clone(),
        frames[1].clone(),
        frames[0].clone(),
    )
    .unwrap();
    let cfg = AceConfig {
        emit_maps: true,
        ..AceConfig::default()
    };
    let report = evaluate_case(&case, &cfg).unwrap();
    let maps = report.maps.as_ref().expect("maps requested");
    assert_eq!(maps.ae.shape(), (80, 80));
    assert!((maps.ae.mean() - report.ae).abs() < 1e-12);
    assert!((maps.ce.mean() - report.ce).abs() < 1e-12);
}
