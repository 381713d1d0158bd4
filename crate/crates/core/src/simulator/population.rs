use serde::{Deserialize, Serialize};

use super::tree::{spawn_child, spawn_root, Node};
use super::SimOptions;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// A cell alive at the observation time of a time-truncated simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LivingCell {
    /// `ξ_t^u`.
    pub size: f64,
    /// `τ_t^u`.
    pub growth_rate: f64,
    /// `τ̄_t^u`: growth accumulated along the ancestry up to `t`.
    pub cumulative_growth: f64,
    pub generation: usize,
}

/// Grows the whole population from a single root until time `t`, expanding
/// only the cells that divide before `t`, so the result is never censored.
pub fn simulate_population(
    spec: &ModelSpec,
    t: f64,
    seed: u64,
    opts: &SimOptions,
    max_cells: usize,
) -> Result<Vec<LivingCell>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "population time must be finite and nonnegative, got {t}"
        )));
    }
    let mut alive = Vec::new();
    let mut stack: Vec<(Node, f64)> = vec![(spawn_root(spec, seed, opts)?, 0.0)];
    while let Some((node, cumulative)) = stack.pop() {
        let r = &node.record;
        if r.division_time() > t {
            let elapsed = t - r.birth_time;
            alive.push(LivingCell {
                size: r.size_birth * (r.growth_rate * elapsed).exp(),
                growth_rate: r.growth_rate,
                cumulative_growth: cumulative + r.growth_rate * elapsed,
                generation: r.path.len(),
            });
            if alive.len() > max_cells {
                return Err(Error::invalid(format!(
                    "population at t = {t} exceeds {max_cells} cells"
                )));
            }
            continue;
        }
        let next = cumulative + r.growth_rate * r.lifetime;
        for bit in [1u8, 0] {
            stack.push((spawn_child(spec, &node, bit, None, opts)?, next));
        }
    }
    Ok(alive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let spec = ModelSpec::reference();
        for seed in 0..10 {
            let cells = simulate_population(&spec, 2.0, seed, &SimOptions::default(), 1 << 20).unwrap();
            let mass: f64 = cells.iter().map(|c| (-(c.generation as f64)).exp2()).sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn time_zero_is_the_root() {
        let spec = ModelSpec::reference();
        let cells = simulate_population(&spec, 0.0, 3, &SimOptions::default(), 10).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].generation, 0);
        assert_eq!(cells[0].cumulative_growth, 0.0);
    }
}
