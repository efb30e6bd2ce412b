//! Fixtures shared by the benchmarks.

use ace_core::synth::Pattern;
use ace_core::{generate, perturb, EvalCase, Perturbation, ScalarField2D, SynthSpec};

/// Two frames of a single blob moving by `(3, -2)` on a `size` square grid.
pub fn blob_pair(size: usize) -> (ScalarField2D, ScalarField2D) {
    let c = size as f64 / 2.0;
    let spec = SynthSpec::single_blob(size, (c, c), size as f64 / 16.0, (3.0, -2.0));
    let mut frames = generate(&spec).expect("valid blob spec");
    let to = frames.pop().unwrap();
    (frames.pop().unwrap(), to)
}

/// A textured case whose prediction is the truth blurred by `sigma = 2`.
pub fn blurred_case(size: usize) -> EvalCase {
    let spec = SynthSpec {
        height: size,
        width: size,
        pattern: Pattern::RandomBlobs { count: 4 },
        advection: (2.0, -1.0),
        convection_rate: 0.05,
        steps: 2,
        seed: 9,
    };
    let frames = generate(&spec).expect("valid spec");
    let pred = perturb(&frames[1], Perturbation::Blur { sigma: 2.0 }).expect("positive sigma");
    EvalCase::new("bench", frames[0].clone(), frames[1].clone(), pred).expect("matching shapes")
}
