use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::TreePath;
use super::SimOptions;
use crate::error::{Error, Result};
use crate::estimator::{Observation, ObservationSet};
use crate::model::{sample_lifetime, ModelSpec};
use crate::rng::NodeKey;

const CHOICE_SALT: u64 = 0x4348_4f49_4345;

/// Marks of one cell: size at birth `ξ_u`, growth rate `τ_u`, birth time
/// `b_u` and lifetime `ζ_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(with = "path_string")]
    pub path: TreePath,
    pub size_birth: f64,
    pub growth_rate: f64,
    pub birth_time: f64,
    pub lifetime: f64,
}

impl CellRecord {
    pub fn division_time(&self) -> f64 {
        self.birth_time + self.lifetime
    }

    pub fn size_at_division(&self) -> f64 {
        self.size_birth * (self.growth_rate * self.lifetime).exp()
    }

    pub fn is_alive_at(&self, t: f64) -> bool {
        self.birth_time <= t && t < self.division_time()
    }
}

mod path_string {
    use super::TreePath;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &TreePath, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(p)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TreePath, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Node being grown, with its random stream key.
#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub record: CellRecord,
    pub key: NodeKey,
}

pub(crate) fn spawn_root(spec: &ModelSpec, seed: u64, opts: &SimOptions) -> Result<Node> {
    let key = NodeKey::root(seed);
    let mut rng = key.rng();
    let (size, growth) = spec.sample_root(&mut rng)?;
    let lifetime = sample_lifetime(
        &spec.division_rate,
        size,
        growth,
        opts.lifetime_sampler,
        opts.t_max,
        &mut rng,
    )?;
    Ok(Node {
        record: CellRecord {
            path: TreePath::root(),
            size_birth: size,
            growth_rate: growth,
            birth_time: 0.0,
            lifetime,
        },
        key,
    })
}

/// Child `bit` of `parent`. `size` overrides the default `ξ_{u⁻} e^{τζ} / 2`.
pub(crate) fn spawn_child(
    spec: &ModelSpec,
    parent: &Node,
    bit: u8,
    size: Option<f64>,
    opts: &SimOptions,
) -> Result<Node> {
    let key = parent.key.child(bit);
    let mut rng = key.rng();
    let p = &parent.record;
    let size = size.unwrap_or_else(|| p.size_at_division() * 0.5);
    let growth = spec.growth_kernel.sample(p.growth_rate, &spec.bounds, &mut rng)?;
    let lifetime = sample_lifetime(
        &spec.division_rate,
        size,
        growth,
        opts.lifetime_sampler,
        opts.t_max,
        &mut rng,
    )?;
    Ok(Node {
        record: CellRecord {
            path: p.path.child(bit),
            size_birth: size,
            growth_rate: growth,
            birth_time: p.division_time(),
            lifetime,
        },
        key,
    })
}

pub(crate) fn choose_child(node: &Node, opts: &SimOptions) -> u8 {
    match opts.child_choice {
        super::ChildChoice::Uniform => node.key.aux(CHOICE_SALT).rng().random::<bool>() as u8,
        super::ChildChoice::FirstChild => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeScheme {
    Full { generations: u32 },
    Sparse { length: usize },
}

/// A connected, rooted set of cells: a complete tree (breadth-first order)
/// or a single line of descent (chain order).
#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyTree {
    scheme: TreeScheme,
    records: Vec<CellRecord>,
}

impl GenealogyTree {
    /// Builds a tree from records in any order, inferring the scheme and
    /// checking the structural invariants.
    pub fn from_records(mut records: Vec<CellRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Schema("a genealogy needs at least the root".into()));
        }
        records.sort_by(|a, b| a.path.cmp(&b.path));
        if records.windows(2).any(|w| w[0].path == w[1].path) {
            return Err(Error::Schema("duplicate tree path".into()));
        }
        let chain = records.iter().enumerate().all(|(i, r)| r.path.len() == i)
            && records.windows(2).all(|w| w[0].path.is_ancestor_of(&w[1].path));
        let n = records.len();
        let full = (n + 1).is_power_of_two() && records.iter().enumerate().all(|(i, r)| r.path.bfs_index() == Some(i));
        let scheme = if full {
            TreeScheme::Full {
                generations: (n + 1).trailing_zeros() - 1,
            }
        } else if chain {
            TreeScheme::Sparse { length: n }
        } else {
            return Err(Error::Schema(
                "records form neither a complete tree nor a single lineage".into(),
            ));
        };
        Ok(GenealogyTree { scheme, records })
    }

    pub fn scheme(&self) -> TreeScheme {
        self.scheme
    }

    pub fn records(&self) -> &[CellRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<CellRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn root(&self) -> &CellRecord {
        &self.records[0]
    }

    pub fn get(&self, path: &TreePath) -> Option<&CellRecord> {
        let index = match self.scheme {
            TreeScheme::Full { .. } => path.bfs_index()?,
            TreeScheme::Sparse { .. } => path.len(),
        };
        self.records.get(index).filter(|r| &r.path == path)
    }

    /// Flat `(ξ_u, τ_u, ζ_u)` rows in breadth-first order.
    pub fn observations(&self) -> Result<ObservationSet> {
        extract_observations(self)
    }
}

/// Simulates every cell of generations `0..=generations`.
pub fn simulate_full_tree(spec: &ModelSpec, generations: u32, seed: u64, opts: &SimOptions) -> Result<GenealogyTree> {
    if generations >= 40 {
        return Err(Error::invalid(format!(
            "{generations} generations would not fit in memory"
        )));
    }
    let total = (1usize << (generations + 1)) - 1;
    let mut nodes = Vec::with_capacity(total);
    nodes.push(spawn_root(spec, seed, opts)?);
    for level in 1..=generations {
        let parents = &nodes[(1usize << (level - 1)) - 1..(1usize << level) - 1];
        let children = parents
            .par_iter()
            .flat_map_iter(|p| [0u8, 1].map(|bit| spawn_child(spec, p, bit, None, opts)))
            .collect::<Result<Vec<_>>>()?;
        nodes.extend(children);
    }
    Ok(GenealogyTree {
        scheme: TreeScheme::Full { generations },
        records: nodes.into_iter().map(|n| n.record).collect(),
    })
}

/// Follows a single line of descent for `length` cells.
pub fn simulate_sparse_lineage(spec: &ModelSpec, length: usize, seed: u64, opts: &SimOptions) -> Result<GenealogyTree> {
    if length == 0 {
        return Err(Error::invalid("a lineage needs at least one cell"));
    }
    let mut node = spawn_root(spec, seed, opts)?;
    let mut records = Vec::with_capacity(length);
    for _ in 1..length {
        let bit = choose_child(&node, opts);
        let child = spawn_child(spec, &node, bit, None, opts)?;
        records.push(std::mem::replace(&mut node, child).record);
    }
    records.push(node.record);
    Ok(GenealogyTree {
        scheme: TreeScheme::Sparse { length },
        records,
    })
}

/// Cell alive at a snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCell {
    pub size: f64,
    pub growth_rate: f64,
    pub path: TreePath,
}

/// Cells alive at time `t` (`b_u <= t < b_u + ζ_u`) with their current sizes.
pub fn population_snapshot(tree: &GenealogyTree, t: f64) -> Result<Vec<SnapshotCell>> {
    let generations = match tree.scheme {
        TreeScheme::Full { generations } => generations as usize,
        TreeScheme::Sparse { .. } => {
            return Err(Error::invalid("population snapshots need a full tree"));
        }
    };
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("snapshot time must be nonnegative, got {t}")));
    }
    if let Some(leaf) = tree
        .records
        .iter()
        .filter(|r| r.path.len() == generations)
        .find(|r| r.division_time() <= t)
    {
        return Err(Error::HorizonExceeded {
            t,
            path: leaf.path.to_string(),
            division_time: leaf.division_time(),
        });
    }
    Ok(tree
        .records
        .iter()
        .filter(|r| r.is_alive_at(t))
        .map(|r| SnapshotCell {
            size: r.size_birth * (r.growth_rate * (t - r.birth_time)).exp(),
            growth_rate: r.growth_rate,
            path: r.path.clone(),
        })
        .collect())
}

pub fn extract_observations(tree: &GenealogyTree) -> Result<ObservationSet> {
    ObservationSet::new(
        tree.records
            .iter()
            .map(|r| Observation {
                size_birth: r.size_birth,
                growth_rate: r.growth_rate,
                lifetime: r.lifetime,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DivisionRate, ModelSpec};

    fn dirac_square() -> ModelSpec {
        ModelSpec::constant_growth(DivisionRate::power_law(1.0, 2.0).unwrap(), 1.0)
    }

    fn assert_fundamental(parent: &CellRecord, child: &CellRecord) {
        let lhs = 2.0 * child.size_birth;
        let rhs = parent.size_birth * (parent.growth_rate * parent.lifetime).exp();
        assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs, "{lhs} vs {rhs}");
        assert_eq!(child.birth_time, parent.birth_time + parent.lifetime);
    }

    #[test]
    fn generation_zero_is_root_only() {
        let tree = simulate_full_tree(&ModelSpec::reference(), 0, 1, &SimOptions::default()).unwrap();
        assert_eq!(tree.len(), 1);
        let root = tree.root();
        assert!(root.size_birth >= 1.0 / 3.0 && root.size_birth <= 3.0);
        assert_eq!(tree.scheme(), TreeScheme::Full { generations: 0 });
    }

    #[test]
    fn two_generations_share_sizes() {
        let tree = simulate_full_tree(&ModelSpec::reference(), 2, 9, &SimOptions::default()).unwrap();
        assert_eq!(tree.len(), 7);
        for (i, r) in tree.records().iter().enumerate() {
            assert_eq!(r.path.bfs_index(), Some(i));
            if let Some(pp) = r.path.parent() {
                let parent = tree.get(&pp).unwrap();
                assert_fundamental(parent, r);
            }
        }
        for p in [0usize, 1, 2] {
            assert_eq!(
                tree.records()[2 * p + 1].size_birth,
                tree.records()[2 * p + 2].size_birth
            );
        }
    }

    #[test]
    fn full_tree_is_reproducible_across_pools() {
        let spec = dirac_square();
        let opts = SimOptions::default();
        let a = simulate_full_tree(&spec, 10, 42, &opts).unwrap();
        let b = simulate_full_tree(&spec, 10, 42, &opts).unwrap();
        assert_eq!(a, b);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let c = one.install(|| simulate_full_tree(&spec, 10, 42, &opts).unwrap());
        let d = eight.install(|| simulate_full_tree(&spec, 10, 42, &opts).unwrap());
        assert_eq!(a, c);
        assert_eq!(a, d);
        let other = simulate_full_tree(&spec, 10, 43, &opts).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn subtree_does_not_depend_on_depth() {
        let spec = ModelSpec::reference();
        let shallow = simulate_full_tree(&spec, 3, 5, &SimOptions::default()).unwrap();
        let deep = simulate_full_tree(&spec, 6, 5, &SimOptions::default()).unwrap();
        assert_eq!(shallow.records(), &deep.records()[..15]);
    }

    #[test]
    fn lineage_shapes() {
        let spec = ModelSpec::reference();
        let one = simulate_sparse_lineage(&spec, 1, 3, &SimOptions::default()).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.root().path.is_root());
        let three = simulate_sparse_lineage(&spec, 3, 3, &SimOptions::default()).unwrap();
        let r = three.records();
        assert!(r[0].path.is_ancestor_of(&r[1].path) && r[1].path.is_ancestor_of(&r[2].path));
        assert_eq!(three.scheme(), TreeScheme::Sparse { length: 3 });
        assert!(simulate_sparse_lineage(&spec, 0, 3, &SimOptions::default()).is_err());
    }

    #[test]
    fn lineage_follows_fundamental_relation() {
        let tree = simulate_sparse_lineage(&dirac_square(), 50, 8, &SimOptions::default()).unwrap();
        for w in tree.records().windows(2) {
            assert_fundamental(&w[0], &w[1]);
            let expected = w[0].size_birth * (1.0 * w[0].lifetime).exp() / 2.0;
            assert!((w[1].size_birth - expected).abs() <= 4.0 * f64::EPSILON * expected);
        }
    }

    #[test]
    fn first_child_flag() {
        let opts = SimOptions {
            child_choice: super::super::ChildChoice::FirstChild,
            ..SimOptions::default()
        };
        let tree = simulate_sparse_lineage(&ModelSpec::reference(), 20, 1, &opts).unwrap();
        assert!(tree.records().iter().all(|r| r.path.bits().all(|b| b == 0)));
        // the followed cells coincide with the leftmost branch of the full tree
        let full = simulate_full_tree(&ModelSpec::reference(), 4, 1, &opts).unwrap();
        for k in 0..5 {
            assert_eq!(&tree.records()[k], full.get(&tree.records()[k].path).unwrap());
        }
    }

    #[test]
    fn lineage_choices_are_balanced() {
        let tree = simulate_sparse_lineage(&ModelSpec::reference(), 4001, 11, &SimOptions::default()).unwrap();
        let last = &tree.records()[4000].path;
        let ones = last.bits().filter(|b| *b == 1).count() as f64;
        // Binomial(4000, 1/2): 5 standard deviations ≈ 158
        assert!((ones - 2000.0).abs() < 158.0);
    }

    fn single_root() -> GenealogyTree {
        GenealogyTree::from_records(vec![CellRecord {
            path: TreePath::root(),
            size_birth: 1.0,
            growth_rate: 1.0,
            birth_time: 0.0,
            lifetime: std::f64::consts::LN_2,
        }])
        .unwrap()
    }

    #[test]
    fn snapshot_of_single_root() {
        let tree = single_root();
        let cells = population_snapshot(&tree, 0.5 * std::f64::consts::LN_2).unwrap();
        assert_eq!(cells.len(), 1);
        assert!((cells[0].size - std::f64::consts::SQRT_2).abs() < 1e-15);
        let at_zero = population_snapshot(&tree, 0.0).unwrap();
        assert_eq!(at_zero[0].size, 1.0);
        assert!(matches!(
            population_snapshot(&tree, std::f64::consts::LN_2),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn snapshot_counts_living_cells() {
        let spec = dirac_square();
        let tree = simulate_full_tree(&spec, 12, 4, &SimOptions::default()).unwrap();
        let horizon = tree
            .records()
            .iter()
            .filter(|r| r.path.len() == 12)
            .map(|r| r.division_time())
            .fold(f64::INFINITY, f64::min);
        let t = 0.9 * horizon;
        let cells = population_snapshot(&tree, t).unwrap();
        assert!(!cells.is_empty());
        // every lineage crosses t exactly once, so the weights 2^{-|u|} sum to one
        let mass: f64 = cells.iter().map(|c| (-(c.path.len() as f64)).exp2()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(population_snapshot(&tree, 1.01 * horizon).is_err());
    }

    #[test]
    fn observation_counts() {
        let spec = ModelSpec::reference();
        let opts = SimOptions::default();
        assert_eq!(
            simulate_full_tree(&spec, 2, 1, &opts)
                .unwrap()
                .observations()
                .unwrap()
                .len(),
            7
        );
        assert_eq!(
            simulate_sparse_lineage(&spec, 5, 1, &opts)
                .unwrap()
                .observations()
                .unwrap()
                .len(),
            5
        );
    }

    #[test]
    fn from_records_rejects_gaps() {
        let mut tree = simulate_full_tree(&ModelSpec::reference(), 2, 1, &SimOptions::default())
            .unwrap()
            .into_records();
        tree.remove(1);
        assert!(GenealogyTree::from_records(tree).is_err());
    }
}
