//! Seeded generators for randomized suites. Everything flows from a ChaCha
//! stream so CLI runs and property suites are reproducible bit-for-bit.

use crate::mesh::{Domain, MeshFunction};
use crate::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-negative piecewise-constant function on random dyadic blocks, zero
/// outside a centered sub-box. Block count and amplitude kept moderate so
/// operator outputs stay well-scaled.
pub fn nonneg_function(domain: Domain, rng: &mut ChaCha8Rng) -> Result<MeshFunction> {
    let cells = domain.n_cells();
    let mut values = vec![0.0; cells];
    let blocks = rng.gen_range(3..=8);
    let cpa = domain.cells_per_axis() as usize;
    for _ in 0..blocks {
        let amp: f64 = rng.gen_range(0.05..3.0);
        match domain.n {
            1 => {
                let len = rng.gen_range(1..=(cpa / 4).max(1));
                let start = rng.gen_range(0..cpa - len + 1);
                for v in values.iter_mut().skip(start).take(len) {
                    *v += amp;
                }
            }
            _ => {
                let len0 = rng.gen_range(1..=(cpa / 4).max(1));
                let len1 = rng.gen_range(1..=(cpa / 4).max(1));
                let s0 = rng.gen_range(0..cpa - len0 + 1);
                let s1 = rng.gen_range(0..cpa - len1 + 1);
                for i0 in s0..s0 + len0 {
                    for i1 in s1..s1 + len1 {
                        values[i0 * cpa + i1] += amp;
                    }
                }
            }
        }
    }
    MeshFunction::from_values(domain, values)
}

/// Random weight: strictly positive on a random collection of blocks with a
/// small floor so essential infima stay positive.
pub fn weight(domain: Domain, rng: &mut ChaCha8Rng, floor: f64) -> Result<MeshFunction> {
    let f = nonneg_function(domain, rng)?;
    f.map(|v| v + floor)
}

/// Bounded-oscillation symbol for commutators: values in [-1, 1].
pub fn bounded_oscillation(domain: Domain, rng: &mut ChaCha8Rng) -> Result<MeshFunction> {
    let f = nonneg_function(domain, rng)?;
    let max = f.values().iter().cloned().fold(0.0f64, f64::max).max(1e-9);
    f.map(|v| 2.0 * v / max - 1.0)
}
