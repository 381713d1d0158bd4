//! The tagged cell: size and growth rate along a uniformly chosen line of descent.

use serde::{Deserialize, Serialize};

use super::path::TreePath;
use super::tree::{choose_child, spawn_child, spawn_root};
use super::SimOptions;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// State right after the tagged cell's `k`-th division.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedEvent {
    pub division_time: f64,
    pub size_after: f64,
    pub growth_after: f64,
    /// `𝒱̄` at the division time.
    pub cumulative_growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPath {
    pub root_size: f64,
    pub root_growth: f64,
    pub horizon: f64,
    pub events: Vec<TaggedEvent>,
    /// `ϑ_{C_horizon}`: the node alive at the horizon.
    pub node: TreePath,
}

impl TaggedPath {
    fn check(&self, t: f64) {
        assert!(
            (0.0..=self.horizon).contains(&t),
            "tagged path queried at t = {t} outside [0, {}]",
            self.horizon
        );
    }

    /// `C_t`: number of divisions in `[0, t]`.
    pub fn generation(&self, t: f64) -> usize {
        self.check(t);
        self.events.partition_point(|e| e.division_time <= t)
    }

    /// `(birth time, growth rate, cumulative growth at birth)` of the cell alive at `t`.
    fn current(&self, t: f64) -> (usize, f64, f64, f64) {
        let c = self.generation(t);
        match c {
            0 => (0, 0.0, self.root_growth, 0.0),
            _ => {
                let e = &self.events[c - 1];
                (c, e.division_time, e.growth_after, e.cumulative_growth)
            }
        }
    }

    /// `𝒱(t)`.
    pub fn growth(&self, t: f64) -> f64 {
        self.current(t).2
    }

    /// `𝒱̄(t)`.
    pub fn cumulative_growth(&self, t: f64) -> f64 {
        let (_, birth, v, cum) = self.current(t);
        cum + v * (t - birth)
    }

    /// `χ(t) = x e^{𝒱̄(t)} / 2^{C_t}`.
    pub fn size(&self, t: f64) -> f64 {
        let c = self.generation(t) as i32;
        scale_pow2(self.root_size * self.cumulative_growth(t).exp(), -c)
    }

    /// `ϑ_k` for `k <= C_horizon`.
    pub fn node_at_generation(&self, k: usize) -> TreePath {
        self.node.prefix(k)
    }
}

fn scale_pow2(x: f64, k: i32) -> f64 {
    // exact while the result stays normal
    x * 2f64.powi(k)
}

/// Follows a uniformly random line of descent over `[0, horizon]`.
pub fn simulate_tagged_cell(spec: &ModelSpec, horizon: f64, seed: u64, opts: &SimOptions) -> Result<TaggedPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "tagged-cell horizon must be positive, got {horizon}"
        )));
    }
    let mut node = spawn_root(spec, seed, opts)?;
    let root_size = node.record.size_birth;
    let root_growth = node.record.growth_rate;
    let mut events = Vec::new();
    let mut cumulative = 0.0;
    while node.record.division_time() <= horizon {
        cumulative += node.record.growth_rate * node.record.lifetime;
        let generation = events.len() as i32 + 1;
        let size = scale_pow2(root_size * cumulative.exp(), -generation);
        let bit = choose_child(&node, opts);
        let child = spawn_child(spec, &node, bit, Some(size), opts)?;
        events.push(TaggedEvent {
            division_time: child.record.birth_time,
            size_after: size,
            growth_after: child.record.growth_rate,
            cumulative_growth: cumulative,
        });
        node = child;
    }
    Ok(TaggedPath {
        root_size,
        root_growth,
        horizon,
        events,
        node: node.record.path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    #[test]
    fn initial_condition() {
        let path = simulate_tagged_cell(&ModelSpec::reference(), 3.0, 1, &SimOptions::default()).unwrap();
        assert_eq!(path.generation(0.0), 0);
        assert_eq!(path.size(0.0), path.root_size);
        assert_eq!(path.cumulative_growth(0.0), 0.0);
        assert_eq!(path.node_at_generation(0), TreePath::root());
    }

    #[test]
    fn representation_and_growth_control() {
        let spec = ModelSpec::reference();
        for seed in 0..20 {
            let path = simulate_tagged_cell(&spec, 5.0, seed, &SimOptions::default()).unwrap();
            assert_eq!(path.node.len(), path.events.len());
            for i in 0..=200 {
                let t = 5.0 * i as f64 / 200.0;
                let c = path.generation(t);
                let lhs = path.size(t) * 2f64.powi(c as i32);
                let rhs = path.root_size * path.cumulative_growth(t).exp();
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
                if t > 0.0 {
                    let rate = path.cumulative_growth(t) / t;
                    assert!(rate >= 0.2 * (1.0 - 1e-12) && rate <= 3.0 * (1.0 + 1e-12));
                }
                assert!(spec.bounds.contains(path.growth(t)));
            }
        }
    }

    #[test]
    fn sizes_after_division_halve() {
        let spec = ModelSpec::reference();
        let path = simulate_tagged_cell(&spec, 8.0, 7, &SimOptions::default()).unwrap();
        assert!(!path.events.is_empty());
        for e in &path.events {
            let before = path.size(e.division_time - 1e-9);
            assert!((e.size_after - before / 2.0).abs() < 1e-6 * before);
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(simulate_tagged_cell(&ModelSpec::reference(), 0.0, 1, &SimOptions::default()).is_err());
    }
}
