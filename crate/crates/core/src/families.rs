//! Graph families used as experiment corpora.
//!
//! The Margulis-type graph on `(ℤ/n)²` joins `(x, y)` to its images under
//!
//! ```text
//! (x ± 2y, y)   (x ± (2y + 1), y)   (x, y ± 2x)   (x, y ± (2x + 1))
//! ```
//!
//! with all arithmetic mod `n`. The resulting 8-regular multigraph is
//! collapsed to a simple graph: loops are dropped and parallel edges merged,
//! so degrees can fall below 8 for small `n`. Point `(x, y)` is named `x,y`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::io::{self, IoError};
use crate::space::{FiniteSpace, GraphBlock, SpaceError};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("{0}")]
    OutOfRange(String),
    #[error("no simple {d}-regular graph on {n} vertices")]
    NotRealizable { n: usize, d: usize },
    #[error("no simple graph after {0} configuration-model samples")]
    RejectionBudget(usize),
    #[error("box space sizes must be strictly increasing")]
    NotIncreasing,
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Configuration-model resamplings before giving up.
pub const REJECTION_BUDGET: usize = 1000;

/// Largest hypercube dimension accepted; the distance table is quadratic.
pub const MAX_HYPERCUBE_DIM: u32 = 16;

fn cycle_block(n: usize) -> GraphBlock {
    GraphBlock::unit(format!("C{n}"), n, (0..n).map(|i| (i, (i + 1) % n)))
}

fn complete_block(n: usize) -> GraphBlock {
    GraphBlock::unit(format!("K{n}"), n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

fn hypercube_block(d: u32) -> GraphBlock {
    let n = 1usize << d;
    let edges = (0..n).flat_map(|v| (0..d).map(move |b| (v, v ^ (1 << b)))).filter(|(u, v)| u < v);
    GraphBlock::unit(format!("Q{d}"), n, edges)
}

fn margulis_block(n: usize) -> GraphBlock {
    let idx = |x: usize, y: usize| x * n + y;
    let m = n as i64;
    let wrap = |v: i64| v.rem_euclid(m) as usize;
    let mut edges = BTreeSet::new();
    for x in 0..m {
        for y in 0..m {
            for s in [1, -1] {
                let images = [
                    (x + s * 2 * y, y),
                    (x + s * (2 * y + 1), y),
                    (x, y + s * 2 * x),
                    (x, y + s * (2 * x + 1)),
                ];
                let u = idx(x as usize, y as usize);
                for (a, b) in images {
                    let v = idx(wrap(a), wrap(b));
                    if u != v {
                        edges.insert((u.min(v), u.max(v)));
                    }
                }
            }
        }
    }
    let mut block = GraphBlock::unit(format!("margulis{n}"), n * n, edges);
    block.points = (0..n).flat_map(|x| (0..n).map(move |y| format!("{x},{y}"))).collect();
    block
}

fn random_regular_block(n: usize, d: usize, seed: u64) -> Result<GraphBlock, FamilyError> {
    if n == 0 {
        return Err(FamilyError::OutOfRange("random regular graph needs n ≥ 1".into()));
    }
    if d >= n || (n * d) % 2 == 1 {
        return Err(FamilyError::NotRealizable { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..REJECTION_BUDGET {
        stubs.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !edges.insert((u, v)) {
                continue 'attempt;
            }
        }
        return Ok(GraphBlock::unit(format!("RR{n}d{d}s{seed}"), n, edges));
    }
    Err(FamilyError::RejectionBudget(REJECTION_BUDGET))
}

fn single(block: GraphBlock) -> Result<FiniteSpace, FamilyError> {
    Ok(FiniteSpace::from_blocks(block.name.clone(), vec![block])?)
}

pub fn make_cycle(n: usize) -> Result<FiniteSpace, FamilyError> {
    if n < 3 {
        return Err(FamilyError::OutOfRange(format!("cycle needs n ≥ 3, got {n}")));
    }
    single(cycle_block(n))
}

pub fn make_complete(n: usize) -> Result<FiniteSpace, FamilyError> {
    if n < 1 {
        return Err(FamilyError::OutOfRange("complete graph needs n ≥ 1".into()));
    }
    single(complete_block(n))
}

pub fn make_hypercube(d: u32) -> Result<FiniteSpace, FamilyError> {
    if !(1..=MAX_HYPERCUBE_DIM).contains(&d) {
        return Err(FamilyError::OutOfRange(format!("hypercube needs 1 ≤ d ≤ {MAX_HYPERCUBE_DIM}, got {d}")));
    }
    single(hypercube_block(d))
}

/// Uniform simple `d`-regular graph by the configuration model with
/// rejection of loops and repeated edges.
pub fn make_random_regular(n: usize, d: usize, seed: u64) -> Result<FiniteSpace, FamilyError> {
    single(random_regular_block(n, d, seed)?)
}

pub fn make_margulis(n: usize) -> Result<FiniteSpace, FamilyError> {
    if n < 2 {
        return Err(FamilyError::OutOfRange(format!("margulis graph needs n ≥ 2, got {n}")));
    }
    single(margulis_block(n))
}

/// Disjoint union of cycles of the given strictly increasing lengths.
pub fn make_box_space_z(sizes: &[usize]) -> Result<FiniteSpace, FamilyError> {
    if sizes.is_empty() {
        return Err(FamilyError::OutOfRange("box space needs at least one size".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FamilyError::NotIncreasing);
    }
    if let Some(&s) = sizes.iter().find(|&&s| s < 3) {
        return Err(FamilyError::OutOfRange(format!("box space sizes must be ≥ 3, got {s}")));
    }
    let name = format!("box_z[{}]", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    union(name, sizes.iter().map(|&n| cycle_block(n)).collect())
}

/// Joins blocks at infinite distance, prefixing point names with the block
/// name so they stay distinct.
fn union(name: String, blocks: Vec<GraphBlock>) -> Result<FiniteSpace, FamilyError> {
    let blocks = blocks
        .into_iter()
        .map(|mut b| {
            b.points = b.points.iter().map(|p| format!("{}:{}", b.name, p)).collect();
            b
        })
        .collect();
    Ok(FiniteSpace::from_blocks(name, blocks)?)
}

/// `{family, params, members}`; each member is one parameter value of the
/// family, or a graph file path for the `file` family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub family: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub members: Vec<Value>,
}

impl FamilyManifest {
    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        serde_json::from_str(text).map_err(|e| FamilyError::Manifest(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, FamilyError> {
        Self::parse(&io::read_to_string(path)?)
    }

    fn param_u64(&self, key: &str) -> Result<Option<u64>, FamilyError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| FamilyError::Manifest(format!("param `{key}` must be a nonnegative integer"))),
        }
    }

    fn member_usize(v: &Value) -> Result<usize, FamilyError> {
        v.as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| FamilyError::Manifest(format!("member {v} must be a nonnegative integer")))
    }

    /// The union of all members, one coarse component group per member.
    /// `base` resolves relative paths of the `file` family.
    pub fn build(&self, base: Option<&Path>) -> Result<FiniteSpace, FamilyError> {
        if self.members.is_empty() {
            return Err(FamilyError::Manifest("no members".into()));
        }
        let name = self.family.clone();
        match self.family.as_str() {
            "box_space_z" => {
                let sizes = self.members.iter().map(Self::member_usize).collect::<Result<Vec<_>, _>>()?;
                let mut space = make_box_space_z(&sizes)?;
                space = FiniteSpace::disjoint_union(name, &[&space])?;
                Ok(space)
            }
            "file" => {
                let spaces = self
                    .members
                    .iter()
                    .map(|m| {
                        let rel = m.as_str().ok_or_else(|| FamilyError::Manifest(format!("member {m} must be a path")))?;
                        let path = match base {
                            Some(b) => b.join(rel),
                            None => PathBuf::from(rel),
                        };
                        Ok(io::read_space_file(&path)?)
                    })
                    .collect::<Result<Vec<_>, FamilyError>>()?;
                let refs: Vec<&FiniteSpace> = spaces.iter().collect();
                Ok(FiniteSpace::disjoint_union(name, &refs)?)
            }
            family => {
                let mut blocks = Vec::with_capacity(self.members.len());
                for m in &self.members {
                    let v = Self::member_usize(m)?;
                    let block = match family {
                        "cycle" => {
                            make_cycle(v)?;
                            cycle_block(v)
                        }
                        "complete" => {
                            make_complete(v)?;
                            complete_block(v)
                        }
                        "hypercube" => {
                            let d = u32::try_from(v).unwrap_or(u32::MAX);
                            make_hypercube(d)?;
                            hypercube_block(d)
                        }
                        "margulis" => {
                            if v < 2 {
                                return Err(FamilyError::OutOfRange(format!("margulis graph needs n ≥ 2, got {v}")));
                            }
                            margulis_block(v)
                        }
                        "random_regular" => {
                            let d = self
                                .param_u64("d")?
                                .ok_or_else(|| FamilyError::Manifest("random_regular needs param `d`".into()))?;
                            let seed = self.param_u64("seed")?.unwrap_or(0);
                            random_regular_block(v, d as usize, seed)?
                        }
                        other => return Err(FamilyError::UnknownFamily(other.to_string())),
                    };
                    blocks.push(block);
                }
                union(name, blocks)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use std::collections::HashSet;

    fn edge_set(space: &FiniteSpace) -> HashSet<(usize, usize)> {
        let n = space.len();
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| space.dist_units(x, y) == Some(space.scale()))
            .collect()
    }

    fn degrees(space: &FiniteSpace) -> Vec<usize> {
        let mut deg = vec![0; space.len()];
        for (x, _) in edge_set(space) {
            deg[x] += 1;
        }
        deg
    }

    #[test]
    fn small_named_graphs() {
        let c = make_cycle(4).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.max_finite_distance(), rational(2, 1));
        assert_eq!(make_complete(5).unwrap().max_finite_distance(), rational(1, 1));
        let q = make_hypercube(3).unwrap();
        assert_eq!(q.len(), 8);
        assert_eq!(q.max_finite_distance(), rational(3, 1));
        assert!(make_cycle(2).is_err());
        assert!(make_hypercube(0).is_err());
        assert_eq!(make_complete(1).unwrap().len(), 1);
    }

    #[test]
    fn random_regular_degrees_and_parity() {
        let g = make_random_regular(8, 3, 1).unwrap();
        assert_eq!(g.len(), 8);
        assert!(degrees(&g).iter().all(|&d| d == 3));
        assert!(matches!(make_random_regular(7, 3, 1), Err(FamilyError::NotRealizable { .. })));
        assert!(matches!(make_random_regular(4, 4, 1), Err(FamilyError::NotRealizable { .. })));
        let a = make_random_regular(30, 4, 9).unwrap();
        let b = make_random_regular(30, 4, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_regular_large_connectivity_recorded() {
        let g = make_random_regular(1024, 4, 7).unwrap();
        assert!(degrees(&g).iter().all(|&d| d == 4));
        // Frozen from a run: this seed gives a connected graph.
        assert_eq!(g.component_count(), 1);
    }

    #[test]
    fn margulis_sizes_and_degrees() {
        let m2 = make_margulis(2).unwrap();
        assert_eq!(m2.len(), 4);
        assert!(degrees(&m2).iter().all(|&d| d <= 8));
        let m8 = make_margulis(8).unwrap();
        assert_eq!(m8.len(), 64);
        assert!(degrees(&m8).iter().all(|&d| (4..=8).contains(&d)));
        assert_eq!(m8.component_count(), 1);
        assert_eq!(m8.point_name(8 * 3 + 5), "3,5");
    }

    #[test]
    fn margulis_three_is_translation_transitive() {
        let n = 3;
        let g = make_margulis(n).unwrap();
        let edges = edge_set(&g);
        for a in 0..n {
            for b in 0..n {
                let shift = |v: usize| ((v / n + a) % n) * n + (v % n + b) % n;
                assert!(edges.iter().all(|&(u, v)| edges.contains(&(shift(u), shift(v)))), "shift ({a},{b})");
            }
        }
    }

    #[test]
    fn box_space_components() {
        let s = make_box_space_z(&[4, 8]).unwrap();
        assert_eq!(s.component_sizes(), vec![4, 8]);
        assert_eq!(make_box_space_z(&[3]).unwrap().component_sizes(), vec![3]);
        assert_eq!(make_box_space_z(&[2, 4, 8]).unwrap_err().to_string(), "box space sizes must be ≥ 3, got 2");
        assert!(matches!(make_box_space_z(&[8, 4]), Err(FamilyError::NotIncreasing)));
        assert!(matches!(make_box_space_z(&[4, 4]), Err(FamilyError::NotIncreasing)));
        assert_eq!(s.point_name(4), "C8:0");
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        for s in [make_cycle(9), make_complete(6), make_hypercube(4), make_margulis(5), make_box_space_z(&[3, 5, 7])] {
            let s = s.unwrap();
            s.check_invariants().unwrap();
        }
        assert_eq!(make_margulis(6).unwrap(), make_margulis(6).unwrap());
    }

    #[test]
    fn manifests() {
        let m = FamilyManifest::parse(r#"{"family":"box_space_z","params":{},"members":[4,8,16]}"#).unwrap();
        assert_eq!(m.build(None).unwrap().component_sizes(), vec![4, 8, 16]);
        let m = FamilyManifest::parse(r#"{"family":"margulis","members":[4,8]}"#).unwrap();
        let s = m.build(None).unwrap();
        assert_eq!(s.component_sizes(), vec![16, 64]);
        assert_eq!(s.name(), "margulis");
        let m = FamilyManifest::parse(r#"{"family":"random_regular","params":{"d":3,"seed":2},"members":[8,10]}"#).unwrap();
        assert_eq!(m.build(None).unwrap().len(), 18);
        let m = FamilyManifest::parse(r#"{"family":"random_regular","members":[8]}"#).unwrap();
        assert!(matches!(m.build(None), Err(FamilyError::Manifest(_))));
        let m = FamilyManifest::parse(r#"{"family":"torus","members":[8]}"#).unwrap();
        assert!(matches!(m.build(None), Err(FamilyError::UnknownFamily(_))));
        assert!(FamilyManifest::parse("{").is_err());
    }
}
