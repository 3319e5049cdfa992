use d2dsim_core::allocation::{pair_context, PowerSpec};
use d2dsim_core::policy::PolicyContext;
use d2dsim_core::system::{generate_topology, SystemParams};
use rand::Rng;

/// Draws a fresh 1-CUE/1-DUE topology and returns its policy context.
#[allow(dead_code)]
pub fn random_pair_context<R: Rng>(
    rng: &mut R,
    params: &SystemParams,
    power: PowerSpec,
) -> PolicyContext {
    let topo = generate_topology(rng, 1, 1, params).expect("topology");
    pair_context(topo.cues[0], topo.due_pairs[0], params, power)
}
