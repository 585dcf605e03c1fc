//! Fixtures shared by the benchmarks.

use doleans::generators::{generate_member, GeneratorKind, GeneratorSpec, JumpLaw};
use doleans::CadlagPath;

/// A Brownian path with `steps` grid steps on `[0, 1]`.
pub fn brownian(steps: usize, seed: u64) -> CadlagPath {
    let spec = GeneratorSpec::new(GeneratorKind::Brownian, 1.0, steps);
    generate_member(&spec, seed, 0).expect("valid spec")
}

/// A compound Poisson path with about `jumps` jumps, some below −1.
pub fn jumpy(jumps: usize, seed: u64) -> CadlagPath {
    let law = JumpLaw::Uniform { low: -3.0, high: -1.5 };
    let kind = GeneratorKind::CompoundPoisson { rate: jumps as f64, law };
    let spec = GeneratorSpec::new(kind, 1.0, 1);
    generate_member(&spec, seed, 0).expect("valid spec")
}
