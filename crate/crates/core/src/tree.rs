//! The reasoning-trajectory space: a rooted tree built iteratively from
//! path events.
//!
//! Node ids are consecutive naturals in insertion order, so the label map
//! is the identity. Terminal nodes are either the single done leaf or
//! backtrack leaves; a backtrack leaf records its reset target, which must
//! be a strict ancestor. Abandoned branches are never deleted — leaf
//! counts and tree statistics depend on them.

use serde::{Deserialize, Serialize};

use crate::grammar::ThinkEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

pub const ROOT: NodeId = NodeId(0);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Internal,
    DoneLeaf,
    BacktrackLeaf { target: NodeId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub proposition: String,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("tree is finalized")]
    FinalizedTree,
    #[error("frontier is a terminal node")]
    FrontierIsTerminal,
    #[error("cannot mark done at the root")]
    DoneAtRoot,
    #[error("target is not a strict ancestor of the frontier")]
    NotAnAncestor,
    #[error("unknown node id")]
    UnknownId,
}

/// Rooted tree with an active frontier.
///
/// Single-writer: mutating operations take `&mut self`; reads are safe to
/// share between mutations.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningTree {
    nodes: Vec<TreeNode>,
    frontier: NodeId,
    finalized: bool,
    /// Construction history, one event per successful mutation.
    history: Vec<ThinkEvent>,
}

impl ReasoningTree {
    /// A tree with the problem description at the root (id 0).
    pub fn new(root_proposition: impl Into<String>) -> Self {
        ReasoningTree {
            nodes: vec![TreeNode {
                id: ROOT,
                proposition: root_proposition.into(),
                parent: None,
                children: Vec::new(),
                kind: NodeKind::Internal,
            }],
            frontier: ROOT,
            finalized: false,
            history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree always has its root
    }

    pub fn frontier(&self) -> NodeId {
        self.frontier
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode, TreeError> {
        self.nodes.get(id.index()).ok_or(TreeError::UnknownId)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Depth of the frontier counted in path nodes (the root alone is 1).
    pub fn frontier_depth(&self) -> usize {
        let mut depth = 1;
        let mut cur = self.frontier;
        while let Some(p) = self.nodes[cur.index()].parent {
            depth += 1;
            cur = p;
        }
        depth
    }

    /// Append a new internal child of the frontier and move the frontier
    /// onto it.
    pub fn extend(&mut self, proposition: impl Into<String>) -> Result<NodeId, TreeError> {
        if self.finalized {
            return Err(TreeError::FinalizedTree);
        }
        if self.nodes[self.frontier.index()].kind != NodeKind::Internal {
            return Err(TreeError::FrontierIsTerminal);
        }
        let id = NodeId(self.nodes.len() as u32);
        let proposition = proposition.into();
        self.nodes.push(TreeNode {
            id,
            proposition: proposition.clone(),
            parent: Some(self.frontier),
            children: Vec::new(),
            kind: NodeKind::Internal,
        });
        self.nodes[self.frontier.index()].children.push(id);
        self.frontier = id;
        self.history.push(ThinkEvent::Step {
            label: id.0,
            proposition,
        });
        Ok(id)
    }

    /// Terminate the construction: the frontier becomes the done leaf.
    ///
    /// A frontier that already has children (it was re-entered through a
    /// backtrack) cannot itself become a leaf; the done marker is then
    /// materialized as a fresh empty-proposition child.
    pub fn mark_done(&mut self) -> Result<(), TreeError> {
        if self.finalized {
            return Err(TreeError::FinalizedTree);
        }
        if self.frontier == ROOT {
            return Err(TreeError::DoneAtRoot);
        }
        let f = self.frontier.index();
        if self.nodes[f].children.is_empty() {
            self.nodes[f].kind = NodeKind::DoneLeaf;
        } else {
            let id = NodeId(self.nodes.len() as u32);
            self.nodes.push(TreeNode {
                id,
                proposition: String::new(),
                parent: Some(self.frontier),
                children: Vec::new(),
                kind: NodeKind::DoneLeaf,
            });
            self.nodes[f].children.push(id);
            self.frontier = id;
        }
        self.finalized = true;
        self.history.push(ThinkEvent::Done);
        Ok(())
    }

    /// Record a backtrack to `target` (a strict ancestor of the frontier)
    /// and reset the frontier there.
    ///
    /// A childless frontier becomes the backtrack leaf itself; a frontier
    /// with children gets a materialized leaf child, keeping leaves
    /// childless.
    pub fn mark_backtrack(&mut self, target: NodeId) -> Result<(), TreeError> {
        if self.finalized {
            return Err(TreeError::FinalizedTree);
        }
        if !self.is_strict_ancestor(target, self.frontier) {
            return Err(TreeError::NotAnAncestor);
        }
        let f = self.frontier.index();
        if self.nodes[f].children.is_empty() && self.frontier != ROOT {
            self.nodes[f].kind = NodeKind::BacktrackLeaf { target };
        } else {
            let id = NodeId(self.nodes.len() as u32);
            self.nodes.push(TreeNode {
                id,
                proposition: String::new(),
                parent: Some(self.frontier),
                children: Vec::new(),
                kind: NodeKind::BacktrackLeaf { target },
            });
            self.nodes[f].children.push(id);
        }
        self.frontier = target;
        self.history
            .push(ThinkEvent::BacktrackTo { target: target.0 });
        Ok(())
    }

    fn is_strict_ancestor(&self, candidate: NodeId, of: NodeId) -> bool {
        if candidate.index() >= self.nodes.len() {
            return false;
        }
        let mut cur = self.nodes[of.index()].parent;
        while let Some(p) = cur {
            if p == candidate {
                return true;
            }
            cur = self.nodes[p.index()].parent;
        }
        false
    }

    /// Path from the root to `id`'s parent, root first, excluding `id`.
    pub fn ancestors(&self, id: NodeId) -> Result<Vec<NodeId>, TreeError> {
        let mut node = self.node(id)?;
        let mut out = Vec::new();
        while let Some(p) = node.parent {
            out.push(p);
            node = &self.nodes[p.index()];
        }
        out.reverse();
        Ok(out)
    }

    /// Root-to-frontier propositions — the only context handed to policies.
    pub fn active_path(&self) -> Vec<(NodeId, &str)> {
        let mut out = Vec::new();
        let mut cur = Some(self.frontier);
        while let Some(id) = cur {
            let n = &self.nodes[id.index()];
            out.push((id, n.proposition.as_str()));
            cur = n.parent;
        }
        out.reverse();
        out
    }

    pub fn count_backtrack_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::BacktrackLeaf { .. }))
            .count()
    }

    /// The winning chain of thought: root-to-done-leaf propositions,
    /// excluding the root. `None` while unsolved.
    pub fn extract_cot(&self) -> Option<Vec<String>> {
        if !self.finalized {
            return None;
        }
        let done = self.nodes.iter().find(|n| n.kind == NodeKind::DoneLeaf)?;
        let mut props = Vec::new();
        let mut cur = Some(done.id);
        while let Some(id) = cur {
            if id != ROOT {
                props.push(self.nodes[id.index()].proposition.clone());
            }
            cur = self.nodes[id.index()].parent;
        }
        props.reverse();
        Some(props)
    }

    /// Full exploration history in generation order; replaying it through
    /// a fresh tree reconstructs this tree's shape, kinds, and targets.
    pub fn to_think_events(&self) -> Vec<ThinkEvent> {
        self.history.clone()
    }

    /// Snapshot for export:
    /// `{nodes: [{id, parent, kind, target?, proposition}], frontier, finalized}`.
    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            nodes: self
                .nodes
                .iter()
                .map(|n| SnapshotNode {
                    id: n.id.0,
                    parent: n.parent.map(|p| p.0),
                    kind: match n.kind {
                        NodeKind::Internal => "internal",
                        NodeKind::DoneLeaf => "done",
                        NodeKind::BacktrackLeaf { .. } => "backtrack",
                    }
                    .into(),
                    target: match n.kind {
                        NodeKind::BacktrackLeaf { target } => Some(target.0),
                        _ => None,
                    },
                    proposition: n.proposition.clone(),
                })
                .collect(),
            frontier: self.frontier.0,
            finalized: self.finalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: u32,
    pub parent: Option<u32>,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<u32>,
    pub proposition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub nodes: Vec<SnapshotNode>,
    pub frontier: u32,
    pub finalized: bool,
}

/// Why an event replay was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("step label {0} is not above every earlier label")]
    NonMonotoneLabel(u32),
    #[error("backtrack target {0} does not name an emitted step or the root")]
    UnknownTarget(u32),
    #[error("event {index}: {source}")]
    Tree {
        index: usize,
        #[source]
        source: TreeError,
    },
}

/// Drive a fresh tree through document-level think events.
///
/// Document labels need not be consecutive (trees that materialized
/// leaves emit gapped labels), so they are mapped onto tree ids here.
/// This is also the protocol check behind the format reward: ancestor
/// restriction, done-at-root, and post-done events all surface as errors.
pub fn replay_think_events(
    root_proposition: &str,
    events: &[ThinkEvent],
) -> Result<ReasoningTree, ReplayError> {
    let mut tree = ReasoningTree::new(root_proposition);
    let mut label_to_id: Vec<(u32, NodeId)> = Vec::new();
    let mut last_label = 0u32;
    for (index, event) in events.iter().enumerate() {
        let step = |source| ReplayError::Tree { index, source };
        match event {
            ThinkEvent::Step { label, proposition } => {
                if *label <= last_label {
                    return Err(ReplayError::NonMonotoneLabel(*label));
                }
                last_label = *label;
                let id = tree.extend(proposition.clone()).map_err(step)?;
                label_to_id.push((*label, id));
            }
            ThinkEvent::BacktrackTo { target } => {
                let id = if *target == 0 {
                    ROOT
                } else {
                    label_to_id
                        .iter()
                        .find(|(l, _)| l == target)
                        .map(|(_, id)| *id)
                        .ok_or(ReplayError::UnknownTarget(*target))?
                };
                tree.mark_backtrack(id).map_err(step)?;
            }
            ThinkEvent::Done => tree.mark_done().map_err(step)?,
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(props: &[&str]) -> ReasoningTree {
        let mut t = ReasoningTree::new("Q");
        for p in props {
            t.extend(*p).unwrap();
        }
        t
    }

    #[test]
    fn new_tree_shape() {
        let t = ReasoningTree::new("Q");
        assert_eq!(t.len(), 1);
        assert_eq!(t.frontier(), ROOT);
        assert!(!t.is_finalized());
        assert_eq!(t.ancestors(ROOT).unwrap(), vec![]);
        // empty root proposition is fine
        assert_eq!(ReasoningTree::new("").len(), 1);
    }

    #[test]
    fn extend_assigns_consecutive_ids() {
        let mut t = ReasoningTree::new("Q");
        assert_eq!(t.extend("s1").unwrap(), NodeId(1));
        assert_eq!(t.extend("s2").unwrap(), NodeId(2));
        assert_eq!(t.extend("s3").unwrap(), NodeId(3));
        assert_eq!(t.frontier(), NodeId(3));
        assert_eq!(
            t.ancestors(NodeId(3)).unwrap(),
            vec![ROOT, NodeId(1), NodeId(2)]
        );
    }

    #[test]
    fn extend_after_done_fails() {
        let mut t = chain(&["s1", "s2"]);
        t.mark_done().unwrap();
        assert_eq!(t.extend("s3"), Err(TreeError::FinalizedTree));
        assert_eq!(t.mark_done(), Err(TreeError::FinalizedTree));
    }

    #[test]
    fn mark_done_finalizes_with_one_leaf() {
        let mut t = chain(&["s1", "s2"]);
        let leaves_before = t.count_backtrack_leaves();
        t.mark_done().unwrap();
        assert!(t.is_finalized());
        assert_eq!(t.count_backtrack_leaves(), leaves_before);
        let done_count = t
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::DoneLeaf)
            .count();
        assert_eq!(done_count, 1);
    }

    #[test]
    fn done_at_root_rejected() {
        let mut t = ReasoningTree::new("Q");
        assert_eq!(t.mark_done(), Err(TreeError::DoneAtRoot));
    }

    #[test]
    fn backtrack_converts_frontier_and_branches() {
        let mut t = chain(&["s1", "s2"]);
        t.mark_backtrack(NodeId(1)).unwrap();
        assert_eq!(
            t.node(NodeId(2)).unwrap().kind,
            NodeKind::BacktrackLeaf { target: NodeId(1) }
        );
        assert_eq!(t.frontier(), NodeId(1));
        let id = t.extend("s3").unwrap();
        assert_eq!(id, NodeId(3));
        assert_eq!(
            t.node(NodeId(1)).unwrap().children,
            vec![NodeId(2), NodeId(3)]
        );
    }

    #[test]
    fn backtrack_from_branching_frontier_materializes_leaf() {
        let mut t = chain(&["s1", "s2"]);
        t.mark_backtrack(NodeId(1)).unwrap();
        // frontier 1 now has a child; an immediate second backtrack must
        // materialize its own vertex
        t.mark_backtrack(ROOT).unwrap();
        assert_eq!(t.frontier(), ROOT);
        assert_eq!(
            t.node(NodeId(3)).unwrap().kind,
            NodeKind::BacktrackLeaf { target: ROOT }
        );
        assert_eq!(t.node(NodeId(3)).unwrap().parent, Some(NodeId(1)));
        assert_eq!(t.count_backtrack_leaves(), 2);
    }

    #[test]
    fn backtrack_rejects_non_ancestors() {
        let mut t = chain(&["s1", "s2"]);
        assert_eq!(t.mark_backtrack(NodeId(2)), Err(TreeError::NotAnAncestor));
        t.mark_backtrack(NodeId(1)).unwrap();
        t.extend("s3").unwrap();
        // node 2 is a sibling of the frontier, not an ancestor
        assert_eq!(t.mark_backtrack(NodeId(2)), Err(TreeError::NotAnAncestor));
        assert_eq!(t.mark_backtrack(NodeId(9)), Err(TreeError::NotAnAncestor));
    }

    #[test]
    fn active_path_after_backtrack() {
        let mut t = chain(&["s1", "s2", "s3"]);
        assert_eq!(t.active_path().len(), 4);
        t.mark_backtrack(NodeId(1)).unwrap();
        let path = t.active_path();
        assert_eq!(
            path.iter().map(|(id, _)| *id).collect::<Vec<_>>(),
            vec![ROOT, NodeId(1)]
        );
    }

    #[test]
    fn extract_cot_skips_abandoned_branches() {
        let mut t = chain(&["s1", "bad"]);
        t.mark_backtrack(NodeId(1)).unwrap();
        t.extend("s2").unwrap();
        t.mark_done().unwrap();
        assert_eq!(
            t.extract_cot().unwrap(),
            vec!["s1".to_string(), "s2".to_string()]
        );
    }

    #[test]
    fn extract_cot_unsolved() {
        assert_eq!(chain(&["s1"]).extract_cot(), None);
    }

    #[test]
    fn think_events_record_generation_order() {
        let mut t = chain(&["s1", "s2"]);
        t.mark_backtrack(NodeId(1)).unwrap();
        t.extend("s3").unwrap();
        t.mark_done().unwrap();
        let events = t.to_think_events();
        assert_eq!(events.len(), 5);
        assert_eq!(events[2], ThinkEvent::BacktrackTo { target: 1 });
        assert_eq!(events[4], ThinkEvent::Done);
        assert_eq!(ReasoningTree::new("Q").to_think_events(), vec![]);
    }

    #[test]
    fn replay_reconstructs_tree() {
        let mut t = chain(&["s1", "s2"]);
        t.mark_backtrack(NodeId(1)).unwrap();
        t.mark_backtrack(ROOT).unwrap();
        t.extend("s4").unwrap();
        t.extend("s5").unwrap();
        t.mark_done().unwrap();
        let replayed = replay_think_events("Q", &t.to_think_events()).unwrap();
        assert_eq!(replayed, t);
    }

    #[test]
    fn replay_rejects_protocol_violations() {
        // done at root
        assert!(matches!(
            replay_think_events("Q", &[ThinkEvent::Done]),
            Err(ReplayError::Tree {
                source: TreeError::DoneAtRoot,
                ..
            })
        ));
        // backtrack to a label off the active path
        let events = vec![
            ThinkEvent::Step {
                label: 1,
                proposition: "a".into(),
            },
            ThinkEvent::Step {
                label: 2,
                proposition: "b".into(),
            },
            ThinkEvent::BacktrackTo { target: 1 },
            ThinkEvent::Step {
                label: 3,
                proposition: "c".into(),
            },
            ThinkEvent::BacktrackTo { target: 2 },
        ];
        assert!(matches!(
            replay_think_events("Q", &events),
            Err(ReplayError::Tree {
                source: TreeError::NotAnAncestor,
                ..
            })
        ));
    }

    #[test]
    fn snapshot_shape() {
        let mut t = chain(&["s1"]);
        t.mark_done().unwrap();
        let json = serde_json::to_value(t.snapshot()).unwrap();
        assert_eq!(json["frontier"], 1);
        assert_eq!(json["finalized"], true);
        assert_eq!(json["nodes"][1]["kind"], "done");
        assert!(json["nodes"][1].get("target").is_none());
    }
}
