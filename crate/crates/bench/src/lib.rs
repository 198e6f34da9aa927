//! Fixtures shared by the benchmarks.

use flocklab::dynamics::{InitSpec, MassInit, PositionInit, VelocityInit};
use flocklab::{AgentState, Domain};

/// `n` agents uniform in `[-1, 1]^dim` with Gaussian velocities and
/// Dirichlet masses.
pub fn random_state(n: usize, dim: usize, seed: u64) -> (AgentState, Domain) {
    let dom = Domain::free(dim);
    let spec = InitSpec {
        positions: PositionInit::UniformBox {
            lo: Some(-1.0),
            hi: Some(1.0),
        },
        velocities: VelocityInit::Gaussian {
            std: 1.0,
            mean: None,
            center: true,
        },
        masses: MassInit::Dirichlet { alpha: 1.0, total: 1.0 },
    };
    let state = spec.generate(n, &dom, seed).expect("valid fixture");
    (state, dom)
}
