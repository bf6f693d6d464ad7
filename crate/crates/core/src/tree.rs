//! Pruned channel trees and the codes they define.
//!
//! A tree is grown from a single root channel. A node `w` receives the two
//! butterfly children exactly when `depth(w) < n` and
//! `min(Z(w), 1 - Z(w)) > eps * 2^-n`. Afterwards every leaf with
//! `Z(w) <= eps * 2^-n` carries information and every other leaf is frozen.
//!
//! All nodes live in one arena. Children are allocated as an adjacent pair
//! (flat first, sharp second) in depth-first construction order, so node
//! indices and serialized output are canonical.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::channel::ErasureRate;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deepest tree accepted; `2^n` must fit in a `u64`.
pub const MAX_DEPTH: u32 = 63;

/// Multiplier in the default depth `n = ceil(-5 log2 eps)`.
pub const DEPTH_PER_LOG_EPSILON: f64 = 5.0;

// -5 log2(eps) for eps = 2^(-k/5) lands a few ulps off k; snap those back.
const DEFAULT_DEPTH_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn sibling(self) -> NodeId {
        NodeId(self.0 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeafClass {
    #[serde(rename = "info")]
    Information,
    #[serde(rename = "frozen")]
    Frozen,
}

impl LeafClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafClass::Information => "info",
            LeafClass::Frozen => "frozen",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<S = f64> {
    z: ErasureRate<S>,
    depth: u32,
    // flat child; the sharp child is always the next index
    first_child: Option<NodeId>,
    class: Option<LeafClass>,
}

impl<S: Scalar> TreeNode<S> {
    pub fn z(&self) -> &ErasureRate<S> {
        &self.z
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn is_leaf(&self) -> bool {
        self.first_child.is_none()
    }

    /// `(flat, sharp)` children of an internal node.
    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        self.first_child.map(|f| (f, f.sibling()))
    }

    /// Leaf classification; `None` for internal nodes and for leaves of a
    /// tree whose information set has not been selected.
    pub fn class(&self) -> Option<LeafClass> {
        self.class
    }
}

/// Rooted binary tree of synthetic channels stored as an arena.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTree<S = f64> {
    nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> ChannelTree<S> {
    pub fn root_only(z: ErasureRate<S>) -> Self {
        Self {
            nodes: vec![TreeNode {
                z,
                depth: 0,
                first_child: None,
                class: None,
            }],
        }
    }

    /// Applies the butterfly to leaf `id`, returning `(flat, sharp)`.
    pub fn split(&mut self, id: NodeId) -> Result<(NodeId, NodeId)> {
        let node = &self.nodes[id.index()];
        if !node.is_leaf() {
            return Err(Error::MalformedTree(format!("node {} is already split", id.0)));
        }
        let first = u32::try_from(self.nodes.len())
            .ok()
            .filter(|i| i.checked_add(1).is_some())
            .map(NodeId)
            .ok_or_else(|| Error::MalformedTree("too many nodes".into()))?;
        let (flat, sharp, depth) = (node.z.flat(), node.z.sharp(), node.depth + 1);
        self.nodes[id.index()].first_child = Some(first);
        self.nodes[id.index()].class = None;
        for z in [flat, sharp] {
            self.nodes.push(TreeNode {
                z,
                depth,
                first_child: None,
                class: None,
            });
        }
        Ok((first, first.sibling()))
    }

    pub fn root(&self) -> &TreeNode<S> {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode<S> {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All node ids in arena order.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Leaves in depth-first order, flat subtree before sharp subtree.
    pub fn leaves(&self) -> Leaves<'_, S> {
        Leaves {
            tree: self,
            stack: vec![NodeId::ROOT],
        }
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// `P{tau = d}` for every leaf depth `d`.
    pub fn tau_distribution(&self) -> BTreeMap<u32, S> {
        let mut dist = BTreeMap::new();
        for id in self.leaves() {
            let d = self.node(id).depth;
            let slot = dist.entry(d).or_insert_with(S::zero);
            *slot = slot.clone() + S::pow2_neg(d);
        }
        dist
    }

    /// `E[tau] = sum over leaves of 2^-depth * depth`.
    pub fn expected_tau(&self) -> S {
        self.tau_distribution()
            .into_iter()
            .fold(S::zero(), |acc, (d, p)| acc + p * depth_scalar(d))
    }

    /// `sum over leaves of 2^-depth`; always 1 for a well-formed tree.
    pub fn leaf_mass(&self) -> S {
        self.leaves()
            .fold(S::zero(), |acc, id| acc + S::pow2_neg(self.node(id).depth))
    }

    /// `sum over leaves of 2^-depth * Z`; equals the root's `Z` by conservation.
    pub fn leaf_erasure_mass(&self) -> S {
        self.leaves().fold(S::zero(), |acc, id| {
            let node = self.node(id);
            acc + S::pow2_neg(node.depth) * node.z.value().clone()
        })
    }

    fn set_class(&mut self, id: NodeId, class: Option<LeafClass>) {
        self.nodes[id.index()].class = class;
    }
}

fn depth_scalar<S: Scalar>(d: u32) -> S {
    S::from_u32(d).expect("every scalar represents small integers")
}

pub struct Leaves<'a, S> {
    tree: &'a ChannelTree<S>,
    stack: Vec<NodeId>,
}

impl<S: Scalar> Iterator for Leaves<'_, S> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        while let Some(id) = self.stack.pop() {
            match self.tree.node(id).children() {
                Some((flat, sharp)) => {
                    self.stack.push(sharp);
                    self.stack.push(flat);
                }
                None => return Some(id),
            }
        }
        None
    }
}

/// Exact figures of merit of a grown code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMetrics<S = f64> {
    pub block_length: u64,
    pub rate: S,
    pub p_bound: S,
    pub expected_tau: S,
    pub tau_distribution: BTreeMap<u32, S>,
}

/// A grown tree together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec<S = f64> {
    tree: ChannelTree<S>,
    z0: ErasureRate<S>,
    epsilon: S,
    n: u32,
    threshold: S,
    info_set: Vec<NodeId>,
    metrics: CodeMetrics<S>,
}

/// `2^n`, or an overflow error past `u64`.
pub fn block_length_for(n: u32) -> Result<u64> {
    1u64.checked_shl(n).ok_or(Error::Overflow(n))
}

/// `ceil(-5 log2 eps)` for `0 < eps < 1`.
pub fn default_depth(epsilon: f64) -> Result<u32> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be a positive finite number, got {epsilon}"
        )));
    }
    let raw = -DEPTH_PER_LOG_EPSILON * epsilon.log2();
    let n = (raw - DEFAULT_DEPTH_SNAP).ceil();
    if n < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} gives a default depth of {n}; pass epsilon < 1 or an explicit n"
        )));
    }
    if n > f64::from(MAX_DEPTH) {
        return Err(Error::Overflow(n as u32));
    }
    Ok(n as u32)
}

/// Epsilon tied to depth by `eps = 2^(-n/5)`, the inverse of [`default_depth`].
pub fn epsilon_for_depth(n: u32) -> f64 {
    2f64.powf(-f64::from(n) / DEPTH_PER_LOG_EPSILON)
}

impl<S: Scalar> CodeSpec<S> {
    /// Grows the pruned tree for `BEC(z0)` and selects its information set.
    ///
    /// Without `n_override` the depth cap is `ceil(-5 log2 eps)`, which needs
    /// `eps < 1`. An explicit `n` may be any value up to [`MAX_DEPTH`],
    /// including 0.
    pub fn grow(z0: ErasureRate<S>, epsilon: S, n_override: Option<u32>) -> Result<Self> {
        let eps_f = epsilon.to_f64().unwrap_or(f64::NAN);
        if !eps_f.is_finite() || epsilon <= S::zero() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be a positive finite number, got {epsilon}"
            )));
        }
        let n = match n_override {
            Some(n) => n,
            None => default_depth(eps_f)?,
        };
        let block_length = block_length_for(n)?;
        if n > MAX_DEPTH {
            return Err(Error::Overflow(n));
        }
        let threshold = epsilon.clone() * S::pow2_neg(n);

        let mut tree = ChannelTree::root_only(z0.clone());
        let mut pending = vec![NodeId::ROOT];
        while let Some(id) = pending.pop() {
            let node = tree.node(id);
            if node.depth < n && node.z.polarization_gap() > threshold {
                let (flat, sharp) = tree.split(id)?;
                pending.push(sharp);
                pending.push(flat);
            }
        }

        let mut spec = Self {
            tree,
            z0,
            epsilon,
            n,
            threshold,
            info_set: Vec::new(),
            metrics: CodeMetrics {
                block_length,
                rate: S::zero(),
                p_bound: S::zero(),
                expected_tau: S::zero(),
                tau_distribution: BTreeMap::new(),
            },
        };
        spec.select_info_set();
        Ok(spec)
    }

    /// Classifies every leaf (`Z <= threshold` is information, the rest
    /// frozen), refreshes the metrics and returns the information leaves in
    /// layout order.
    pub fn select_info_set(&mut self) -> &[NodeId] {
        let leaves: Vec<NodeId> = self.tree.leaves().collect();
        self.info_set.clear();
        for id in leaves {
            let class = if *self.tree.node(id).z.value() <= self.threshold {
                self.info_set.push(id);
                LeafClass::Information
            } else {
                LeafClass::Frozen
            };
            self.tree.set_class(id, Some(class));
        }
        self.metrics = self.compute_metrics();
        &self.info_set
    }

    fn compute_metrics(&self) -> CodeMetrics<S> {
        let mut rate = S::zero();
        let mut p_bound = S::zero();
        for &id in &self.info_set {
            let node = self.tree.node(id);
            rate = rate + S::pow2_neg(node.depth);
            p_bound = p_bound + S::pow2(self.n - node.depth) * node.z.value().clone();
        }
        let tau_distribution = self.tree.tau_distribution();
        let expected_tau = tau_distribution
            .iter()
            .fold(S::zero(), |acc, (&d, p)| acc + p.clone() * depth_scalar(d));
        CodeMetrics {
            block_length: self.metrics.block_length,
            rate,
            p_bound,
            expected_tau,
            tau_distribution,
        }
    }

    pub fn tree(&self) -> &ChannelTree<S> {
        &self.tree
    }

    pub fn z0(&self) -> &ErasureRate<S> {
        &self.z0
    }

    pub fn epsilon(&self) -> &S {
        &self.epsilon
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn threshold(&self) -> &S {
        &self.threshold
    }

    pub fn info_set(&self) -> &[NodeId] {
        &self.info_set
    }

    pub fn metrics(&self) -> &CodeMetrics<S> {
        &self.metrics
    }

    pub fn block_length(&self) -> u64 {
        self.metrics.block_length
    }

    pub fn rate(&self) -> &S {
        &self.metrics.rate
    }

    pub fn p_bound(&self) -> &S {
        &self.metrics.p_bound
    }

    pub fn expected_tau(&self) -> &S {
        &self.metrics.expected_tau
    }

    pub fn tau_distribution(&self) -> &BTreeMap<u32, S> {
        &self.metrics.tau_distribution
    }

    /// Number of copies of leaf `id` in a block, `2^(n - depth)`.
    pub fn copies(&self, id: NodeId) -> u64 {
        1u64 << (self.n - self.tree.node(id).depth)
    }

    /// Re-evaluates the growth rule and leaf criterion at every node.
    pub fn check_invariants(&self) -> Result<()> {
        for id in self.tree.ids() {
            let node = self.tree.node(id);
            let should_split = node.depth < self.n && node.z.polarization_gap() > self.threshold;
            if should_split == node.is_leaf() {
                return Err(Error::MalformedTree(format!(
                    "node {} at depth {} (z = {}) violates the growth rule",
                    id.0, node.depth, node.z
                )));
            }
            match node.children() {
                Some((flat, sharp)) => {
                    let (f, s) = (self.tree.node(flat), self.tree.node(sharp));
                    if f.z != node.z.flat() || s.z != node.z.sharp() {
                        return Err(Error::MalformedTree(format!(
                            "children of node {} are not its butterfly transforms",
                            id.0
                        )));
                    }
                    if f.depth != node.depth + 1 || s.depth != node.depth + 1 {
                        return Err(Error::MalformedTree(format!(
                            "children of node {} have wrong depth",
                            id.0
                        )));
                    }
                    if node.class.is_some() {
                        return Err(Error::MalformedTree(format!(
                            "internal node {} carries a leaf class",
                            id.0
                        )));
                    }
                }
                None => {
                    let expect = if *node.z.value() <= self.threshold {
                        LeafClass::Information
                    } else {
                        LeafClass::Frozen
                    };
                    if node.class != Some(expect) {
                        return Err(Error::MalformedTree(format!(
                            "leaf {} should be {}",
                            id.0,
                            expect.as_str()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// canonical JSON

struct NodeView<'a> {
    tree: &'a ChannelTree<f64>,
    id: NodeId,
}

impl Serialize for NodeView<'_> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let node = self.tree.node(self.id);
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("z", &node.z.to_f64())?;
        map.serialize_entry("depth", &node.depth)?;
        match node.children() {
            Some((flat, sharp)) => {
                let pair = [
                    NodeView { tree: self.tree, id: flat },
                    NodeView { tree: self.tree, id: sharp },
                ];
                map.serialize_entry("children", &pair)?;
            }
            None => map.serialize_entry("children", &None::<()>)?,
        }
        map.serialize_entry("class", &node.class)?;
        map.end()
    }
}

impl Serialize for CodeSpec<f64> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut map = s.serialize_map(Some(5))?;
        map.serialize_entry("z0", &self.z0.to_f64())?;
        map.serialize_entry("epsilon", &self.epsilon)?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("threshold", &self.threshold)?;
        map.serialize_entry(
            "root",
            &NodeView {
                tree: &self.tree,
                id: NodeId::ROOT,
            },
        )?;
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    z: f64,
    depth: u32,
    children: Option<Vec<NodeDoc>>,
    class: Option<LeafClass>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    z0: f64,
    epsilon: f64,
    n: u32,
    threshold: f64,
    root: NodeDoc,
}

impl CodeSpec<f64> {
    /// Canonical single-line JSON; floats use the shortest exact round-trip form.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses a tree document and checks it node by node against the growth
    /// rule, butterfly transforms and leaf criterion.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        let z0 = ErasureRate::new(doc.z0)?;
        let spec = Self::grow(z0, doc.epsilon, Some(doc.n))?;
        if spec.threshold != doc.threshold {
            return Err(Error::MalformedTree(format!(
                "threshold {} does not equal epsilon * 2^-n = {}",
                doc.threshold, spec.threshold
            )));
        }
        // walk the document alongside the regrown arena
        let mut stack = vec![(&doc.root, NodeId::ROOT)];
        while let Some((d, id)) = stack.pop() {
            let node = spec.tree.node(id);
            if d.z != node.z.to_f64() || d.depth != node.depth || d.class != node.class {
                return Err(Error::MalformedTree(format!(
                    "node at depth {} with z = {} disagrees with the growth rule",
                    d.depth, d.z
                )));
            }
            match (&d.children, node.children()) {
                (None, None) => {}
                (Some(kids), Some((flat, sharp))) if kids.len() == 2 => {
                    stack.push((&kids[1], sharp));
                    stack.push((&kids[0], flat));
                }
                _ => {
                    return Err(Error::MalformedTree(format!(
                        "node at depth {} with z = {} has the wrong children",
                        d.depth, d.z
                    )))
                }
            }
        }
        Ok(spec)
    }
}
