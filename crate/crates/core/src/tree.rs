//! Proof-state trees and sub-proof mining.
//!
//! A linear, bullet-structured proof is turned into a tree whose nodes are
//! proof states and whose edges are labelled with the tactic that leads from
//! one state to the next. A tactic that opens several goals labels one edge
//! per goal, so every non-leaf node applies exactly one tactic and the number
//! of non-leaf nodes equals the number of tactics. Every intermediate state
//! carries a proof of its own: the linearisation of its subtree.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{BulletKind, Marker, Origin, Tactic, TacticSequence, TheoremRecord};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("proof uses goal selectors, which cannot be turned into a tree")]
    GoalSelectorUnsupported,
    #[error("malformed bullet structure: {0}")]
    MalformedBullets(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("cannot descend {k} unbranched steps (only {reachable} available)")]
    KOutOfRange { k: usize, reachable: usize },
    #[error("goal oracle: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// Tactic on the edge from the parent; `None` for the root.
    pub incoming_tactic: Option<Tactic>,
    /// Children in source order of their branches.
    pub children: Vec<NodeId>,
    pub depth: usize,
}

impl ProofNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub nodes: Vec<ProofNode>,
    pub root_id: NodeId,
}

impl ProofTree {
    fn with_root() -> Self {
        Self {
            nodes: vec![ProofNode {
                id: 0,
                parent: None,
                incoming_tactic: None,
                children: Vec::new(),
                depth: 0,
            }],
            root_id: 0,
        }
    }

    fn add_child(&mut self, parent: NodeId, tactic: Tactic) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(ProofNode {
            id,
            parent: Some(parent),
            incoming_tactic: Some(tactic),
            children: Vec::new(),
            depth,
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&ProofNode> {
        self.nodes.get(id)
    }

    pub fn root(&self) -> &ProofNode {
        &self.nodes[self.root_id]
    }

    /// Number of states that still have a tactic applied to them.
    pub fn inner_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Child indices leading from the root to `id`.
    pub fn path(&self, id: NodeId) -> Result<Vec<usize>, TreeError> {
        let mut node = self.node(id).ok_or(TreeError::UnknownNode(id))?;
        let mut path = Vec::new();
        while let Some(parent) = node.parent {
            let p = &self.nodes[parent];
            let idx = p
                .children
                .iter()
                .position(|&c| c == node.id)
                .expect("child listed under its parent");
            path.push(idx);
            node = p;
        }
        path.reverse();
        Ok(path)
    }

    pub fn node_at_path(&self, path: &[usize]) -> Option<NodeId> {
        let mut cur = self.root_id;
        for &i in path {
            cur = *self.nodes[cur].children.get(i)?;
        }
        Some(cur)
    }

    /// Node ids in depth-first pre-order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root_id];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Item {
    Tactic(usize),
    Group(Vec<Vec<Item>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Bullet(BulletKind),
    Tactic(usize),
}

struct BlockParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl BlockParser {
    fn new(seq: &TacticSequence) -> Self {
        let mut toks = Vec::new();
        let marker_tok = |m: &Marker| match *m {
            Marker::OpenBrace => Tok::Open,
            Marker::CloseBrace => Tok::Close,
            Marker::Bullet(b) => Tok::Bullet(b),
        };
        for (i, t) in seq.tactics.iter().enumerate() {
            toks.extend(t.markers.iter().map(marker_tok));
            toks.push(Tok::Tactic(i));
        }
        toks.extend(seq.trailing.iter().map(marker_tok));
        Self { toks, pos: 0 }
    }

    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn block(&mut self, active: &[BulletKind], braces: usize) -> Result<Vec<Item>, TreeError> {
        let mut items = Vec::new();
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Tactic(i) => {
                    items.push(Item::Tactic(i));
                    self.pos += 1;
                }
                Tok::Close if braces > 0 => return Ok(items),
                Tok::Close => return Err(malformed("unmatched `}`")),
                Tok::Open => {
                    let mut blocks = Vec::new();
                    while self.peek() == Some(Tok::Open) {
                        self.pos += 1;
                        // bullets restart inside braces
                        let b = self.block(&[], braces + 1)?;
                        if self.peek() != Some(Tok::Close) {
                            return Err(malformed("unclosed `{`"));
                        }
                        self.pos += 1;
                        if b.is_empty() {
                            return Err(malformed("empty brace block"));
                        }
                        blocks.push(b);
                    }
                    items.push(Item::Group(blocks));
                }
                Tok::Bullet(kind) => {
                    if active.contains(&kind) {
                        return Ok(items);
                    }
                    let mut inner = active.to_vec();
                    inner.push(kind);
                    let mut blocks = Vec::new();
                    while self.peek() == Some(Tok::Bullet(kind)) {
                        self.pos += 1;
                        let b = self.block(&inner, braces)?;
                        if b.is_empty() {
                            return Err(malformed(&format!("empty `{kind}` bullet")));
                        }
                        blocks.push(b);
                    }
                    items.push(Item::Group(blocks));
                }
            }
        }
        Ok(items)
    }
}

fn malformed(msg: &str) -> TreeError {
    TreeError::MalformedBullets(msg.to_string())
}

/// Build the proof-state tree of a goal-selector-free proof.
pub fn build_tree(seq: &TacticSequence) -> Result<ProofTree, TreeError> {
    if crate::parser::detect_goal_selectors(seq) {
        return Err(TreeError::GoalSelectorUnsupported);
    }
    let mut parser = BlockParser::new(seq);
    let items = parser.block(&[], 0)?;
    debug_assert_eq!(parser.pos, parser.toks.len());
    let mut tree = ProofTree::with_root();
    let root = tree.root_id;
    attach(&mut tree, seq, &items, root)?;
    Ok(tree)
}

fn attach(
    tree: &mut ProofTree,
    seq: &TacticSequence,
    items: &[Item],
    from: NodeId,
) -> Result<(), TreeError> {
    let mut cur = from;
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Item::Tactic(t) => {
                let tactic = Tactic::plain(seq.tactics[*t].text.clone());
                if let Some(Item::Group(blocks)) = items.get(i + 1) {
                    for block in blocks {
                        let child = tree.add_child(cur, tactic.clone());
                        attach(tree, seq, block, child)?;
                    }
                    // goals left unfocused after the group (typical after braces)
                    let rest = &items[i + 2..];
                    if !rest.is_empty() {
                        let child = tree.add_child(cur, tactic);
                        attach(tree, seq, rest, child)?;
                    }
                    return Ok(());
                }
                cur = tree.add_child(cur, tactic);
                i += 1;
            }
            Item::Group(blocks) if blocks.len() == 1 => {
                // focusing a single goal does not change the state
                let mut merged = blocks[0].clone();
                merged.extend_from_slice(&items[i + 1..]);
                return attach(tree, seq, &merged, cur);
            }
            Item::Group(_) => {
                return Err(malformed("bullet group without a preceding tactic"));
            }
        }
    }
    Ok(())
}

/// Proof of the state `node`: the incoming tactics of its subtree in
/// depth-first order, with canonical bullets (`-`, `+`, `*`, `--`, ...)
/// wherever a state has more than one child.
pub fn linearize(tree: &ProofTree, node: NodeId) -> Result<TacticSequence, TreeError> {
    tree.node(node).ok_or(TreeError::UnknownNode(node))?;
    let mut out = Vec::new();
    emit(tree, node, 0, &mut out);
    Ok(TacticSequence::new(out))
}

fn emit(tree: &ProofTree, mut node: NodeId, level: usize, out: &mut Vec<Tactic>) {
    loop {
        let n = &tree.nodes[node];
        let Some(&first) = n.children.first() else {
            return;
        };
        let tactic = tree.nodes[first]
            .incoming_tactic
            .clone()
            .expect("non-root node has a tactic");
        out.push(tactic);
        if n.children.len() == 1 {
            node = first;
            continue;
        }
        let bullet = Marker::Bullet(BulletKind::for_depth(level + 1));
        for &child in &n.children {
            let start = out.len();
            emit(tree, child, level + 1, out);
            if let Some(t) = out.get_mut(start) {
                t.markers.insert(0, bullet);
            }
        }
        return;
    }
}

/// Goal texts for intermediate states, produced offline by a tool that can
/// run Rocq. File format: JSON array of
/// `{ "theorem_id": string, "node_path": [int], "goal": string }`.
#[derive(Debug, Clone, Default)]
pub struct GoalOracle {
    goals: HashMap<(String, Vec<usize>), String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalEntry {
    pub theorem_id: String,
    pub node_path: Vec<usize>,
    pub goal: String,
}

impl GoalOracle {
    pub fn from_entries(entries: impl IntoIterator<Item = GoalEntry>) -> Self {
        let goals = entries
            .into_iter()
            .map(|e| ((e.theorem_id, e.node_path), e.goal))
            .collect();
        Self { goals }
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let entries: Vec<GoalEntry> =
            serde_json::from_str(text).map_err(|e| TreeError::Oracle(e.to_string()))?;
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> Result<Self, TreeError> {
        let text = fs::read_to_string(path)
            .map_err(|e| TreeError::Oracle(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn get(&self, theorem_id: &str, node_path: &[usize]) -> Option<&str> {
        self.goals
            .get(&(theorem_id.to_string(), node_path.to_vec()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }
}

/// A synthesized sub-theorem for one intermediate proof state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinedRecord {
    pub parent_id: String,
    pub node_path: Vec<usize>,
    pub synthesized_name: String,
    pub proof: TacticSequence,
    pub goal_text: Option<String>,
    pub origin: Origin,
}

impl MinedRecord {
    /// `0-1` style rendering of the node path used in ids.
    pub fn path_label(&self) -> String {
        self.node_path
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Corpus record for this sub-theorem. Without a goal text the statement
    /// is the parent statement tagged with the node path.
    pub fn to_theorem(&self, parent: &TheoremRecord) -> TheoremRecord {
        let statement = match &self.goal_text {
            Some(goal) => goal.clone(),
            None => format!("{} [after {}]", parent.statement_text, self.path_label()),
        };
        TheoremRecord::new(
            format!("{}#node{}", parent.id, self.path_label()),
            parent.file.clone(),
            self.synthesized_name.clone(),
            parent.kind,
            statement,
            self.proof.clone(),
            self.origin,
        )
    }
}

fn check_minable(record: &TheoremRecord) -> Result<ProofTree, TreeError> {
    if record.has_goal_selectors {
        return Err(TreeError::GoalSelectorUnsupported);
    }
    build_tree(&record.proof)
}

/// One record per intermediate state: every node except the root (whose
/// proof is the original) and the closed leaves (which have no proof left).
pub fn mine_subproofs(
    record: &TheoremRecord,
    goals: Option<&GoalOracle>,
) -> Result<Vec<MinedRecord>, TreeError> {
    let tree = check_minable(record)?;
    let mut mined = Vec::new();
    for id in tree.preorder() {
        let node = &tree.nodes[id];
        if id == tree.root_id || node.is_leaf() {
            continue;
        }
        let node_path = tree.path(id)?;
        let suffix = node_path
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("_");
        mined.push(MinedRecord {
            parent_id: record.id.clone(),
            synthesized_name: format!("{}_sub_{}", record.name, suffix),
            proof: linearize(&tree, id)?,
            goal_text: goals
                .and_then(|g| g.get(&record.id, &node_path))
                .map(str::to_string),
            node_path,
            origin: Origin::MinedSubproof,
        });
    }
    Ok(mined)
}

/// The state reached after `k` unbranched steps from the root.
pub fn mine_after_k(
    record: &TheoremRecord,
    k: usize,
    goals: Option<&GoalOracle>,
) -> Result<MinedRecord, TreeError> {
    let tree = check_minable(record)?;
    let mut cur = tree.root_id;
    for step in 0..k {
        match tree.nodes[cur].children.as_slice() {
            [only] => cur = *only,
            _ => return Err(TreeError::KOutOfRange { k, reachable: step }),
        }
    }
    if k == 0 || tree.nodes[cur].is_leaf() {
        let reachable = if k == 0 { 0 } else { k - 1 };
        return Err(TreeError::KOutOfRange { k, reachable });
    }
    let node_path = tree.path(cur)?;
    Ok(MinedRecord {
        parent_id: record.id.clone(),
        synthesized_name: format!("{}_after_{}", record.name, k),
        proof: linearize(&tree, cur)?,
        goal_text: goals
            .and_then(|g| g.get(&record.id, &node_path))
            .map(str::to_string),
        node_path,
        origin: Origin::MinedAfterK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MiningMode {
    Subproofs,
    AfterK { k: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningStats {
    pub n_theorems: usize,
    pub n_mined: usize,
    pub n_skipped_goal_selectors: usize,
    pub n_failed: usize,
    pub failures: Vec<(String, String)>,
}

/// Mine a whole record list. Records that cannot be mined are counted, not
/// fatal.
pub fn mine_corpus(
    records: &[TheoremRecord],
    mode: MiningMode,
    goals: Option<&GoalOracle>,
) -> (Vec<TheoremRecord>, MiningStats) {
    let mut stats = MiningStats {
        n_theorems: records.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for record in records {
        let result = match mode {
            MiningMode::Subproofs => mine_subproofs(record, goals),
            MiningMode::AfterK { k } => mine_after_k(record, k, goals).map(|m| vec![m]),
        };
        match result {
            Ok(mined) => out.extend(mined.iter().map(|m| m.to_theorem(record))),
            Err(TreeError::GoalSelectorUnsupported) => stats.n_skipped_goal_selectors += 1,
            Err(e) => {
                stats.n_failed += 1;
                stats.failures.push((record.id.clone(), e.to_string()));
            }
        }
    }
    stats.n_mined = out.len();
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_file, split_tactics, SourceFile, TheoremKind};
    use proptest::prelude::*;

    const SPLIT_BODY: &str = "intros n. destruct n. - left; auto. - right; auto.";

    fn record(body: &str) -> TheoremRecord {
        TheoremRecord::new(
            "f.v#t",
            "f.v",
            "t",
            TheoremKind::Lemma,
            "P",
            split_tactics(body),
            Origin::Original,
        )
    }

    fn incoming(tree: &ProofTree, id: NodeId) -> &str {
        &tree.nodes[id].incoming_tactic.as_ref().unwrap().text
    }

    #[test]
    fn destruct_split_tree_shape() {
        let tree = build_tree(&split_tactics(SPLIT_BODY)).unwrap();
        let root = tree.root();
        assert_eq!(root.children.len(), 1);
        let s1 = root.children[0];
        assert_eq!(incoming(&tree, s1), "intros n.");
        let branches = &tree.nodes[s1].children;
        assert_eq!(branches.len(), 2);
        let (s2, s3) = (branches[0], branches[1]);
        assert_eq!(incoming(&tree, s2), "destruct n.");
        assert_eq!(incoming(&tree, s3), "destruct n.");
        let l2 = tree.nodes[s2].children[0];
        let l3 = tree.nodes[s3].children[0];
        assert_eq!(incoming(&tree, l2), "left; auto.");
        assert_eq!(incoming(&tree, l3), "right; auto.");
        assert!(tree.nodes[l2].is_leaf() && tree.nodes[l3].is_leaf());
        assert_eq!(tree.inner_count(), 4);
        assert_eq!(tree.path(s3).unwrap(), vec![0, 1]);
        assert_eq!(tree.node_at_path(&[0, 1]), Some(s3));
    }

    #[test]
    fn destruct_split_linearizations() {
        let tree = build_tree(&split_tactics(SPLIT_BODY)).unwrap();
        let s1 = tree.node_at_path(&[0]).unwrap();
        let s2 = tree.node_at_path(&[0, 0]).unwrap();
        assert_eq!(
            linearize(&tree, s1).unwrap().render(),
            "destruct n. - left; auto. - right; auto."
        );
        assert_eq!(linearize(&tree, s2).unwrap().render(), "left; auto.");
        assert_eq!(linearize(&tree, tree.root_id).unwrap().render(), SPLIT_BODY);
        assert_eq!(linearize(&tree, 99), Err(TreeError::UnknownNode(99)));
    }

    #[test]
    fn chain_root_is_identity() {
        let seq = split_tactics("intros. simpl. reflexivity.");
        let tree = build_tree(&seq).unwrap();
        assert_eq!(linearize(&tree, tree.root_id).unwrap(), seq);
        assert_eq!(tree.len(), 4);
    }

    #[test]
    fn single_tactic() {
        let tree = build_tree(&split_tactics("auto.")).unwrap();
        assert_eq!(tree.len(), 2);
        assert_eq!(tree.root().children.len(), 1);
        assert!(mine_subproofs(&record("auto."), None).unwrap().is_empty());
    }

    #[test]
    fn nested_bullets() {
        // worked by hand: states
        // r -intros-> a -destruct-> {b, f}; b -simpl-> c -split-> {d, e};
        // d -auto-> leaf; e -auto-> leaf; f -lia-> leaf
        let body = "intros. destruct n. - simpl. split. + auto. + auto. - lia.";
        let seq = split_tactics(body);
        let tree = build_tree(&seq).unwrap();
        assert_eq!(seq.len(), 7);
        assert_eq!(tree.len(), 10);
        assert_eq!(tree.inner_count(), 7);
        assert_eq!(tree.max_depth(), 5);
        let b = tree.node_at_path(&[0, 0]).unwrap();
        assert_eq!(
            linearize(&tree, b).unwrap().render(),
            "simpl. split. - auto. - auto."
        );
        assert_eq!(linearize(&tree, tree.root_id).unwrap().render(), body);
        assert_eq!(mine_subproofs(&record(body), None).unwrap().len(), 6);
    }

    #[test]
    fn braces_with_continuation() {
        let seq = split_tactics("assert (H : P). { auto. } exact H.");
        let tree = build_tree(&seq).unwrap();
        let root = tree.root();
        assert_eq!(root.children.len(), 2);
        assert_eq!(
            linearize(&tree, tree.root_id).unwrap().render(),
            "assert (H : P). - auto. - exact H."
        );
    }

    #[test]
    fn sequential_braces() {
        let seq = split_tactics("split. { left. } { right. }");
        let tree = build_tree(&seq).unwrap();
        assert_eq!(tree.root().children.len(), 2);
        assert_eq!(tree.inner_count(), 3);
    }

    #[test]
    fn legacy_unbulleted_branching_is_a_chain() {
        let tree = build_tree(&split_tactics("split. auto. auto.")).unwrap();
        assert_eq!(tree.max_depth(), 3);
        assert!(tree.nodes.iter().all(|n| n.children.len() <= 1));
    }

    #[test]
    fn malformed_structures() {
        for body in ["split. { auto.", "auto. }", "- a. - b.", "split. - - a."] {
            assert!(
                matches!(
                    build_tree(&split_tactics(body)),
                    Err(TreeError::MalformedBullets(_))
                ),
                "{body}"
            );
        }
    }

    #[test]
    fn goal_selectors_rejected() {
        let seq = split_tactics("intros n. destruct n. all: try (left; auto) || (right; auto).");
        assert_eq!(build_tree(&seq), Err(TreeError::GoalSelectorUnsupported));
        let rec = record("intros n. destruct n. all: auto.");
        assert_eq!(
            mine_subproofs(&rec, None),
            Err(TreeError::GoalSelectorUnsupported)
        );
    }

    #[test]
    fn destruct_split_mining() {
        let src = "Theorem test : forall n : nat, n = 0 \\/ n <> 0.\nProof.\n  intros n.\n  destruct n.\n  - left; auto.\n  - right; auto.\nQed.";
        let (records, _) = parse_file(&SourceFile::new("split.v", src));
        let mined = mine_subproofs(&records[0], None).unwrap();
        let proofs: Vec<String> = mined.iter().map(|m| m.proof.render()).collect();
        assert_eq!(
            proofs,
            [
                "destruct n. - left; auto. - right; auto.",
                "left; auto.",
                "right; auto."
            ]
        );
        let paths: Vec<_> = mined.iter().map(|m| m.node_path.clone()).collect();
        assert_eq!(paths, vec![vec![0], vec![0, 0], vec![0, 1]]);
        let th = mined[1].to_theorem(&records[0]);
        assert_eq!(th.id, "split.v#test#node0-0");
        assert_eq!(th.origin, Origin::MinedSubproof);
        assert!(th.statement_text.ends_with("[after 0-0]"));
    }

    #[test]
    fn goal_oracle_fills_goal_text() {
        let oracle = GoalOracle::from_json(
            r#"[{"theorem_id": "f.v#t", "node_path": [0, 0], "goal": "0 = 0 \\/ 0 <> 0"}]"#,
        )
        .unwrap();
        let mined = mine_subproofs(&record(SPLIT_BODY), Some(&oracle)).unwrap();
        assert_eq!(mined[0].goal_text, None);
        assert_eq!(mined[1].goal_text.as_deref(), Some("0 = 0 \\/ 0 <> 0"));
        assert_eq!(
            mined[1].to_theorem(&record(SPLIT_BODY)).statement_text,
            "0 = 0 \\/ 0 <> 0"
        );
        assert!(GoalOracle::from_json("{").is_err());
    }

    #[test]
    fn after_k_examples() {
        let eq_trans = record("intros x y z Hxy Hyz. rewrite Hxy. rewrite Hyz. reflexivity.");
        let m = mine_after_k(&eq_trans, 2, None).unwrap();
        assert_eq!(m.proof.render(), "rewrite Hyz. reflexivity.");
        assert_eq!(m.origin, Origin::MinedAfterK);
        let last = mine_after_k(&eq_trans, 3, None).unwrap();
        assert_eq!(last.proof.render(), "reflexivity.");
        assert!(matches!(
            mine_after_k(&eq_trans, 4, None),
            Err(TreeError::KOutOfRange { k: 4, .. })
        ));
        let branching = record(SPLIT_BODY);
        assert_eq!(
            mine_after_k(&branching, 1, None).unwrap().proof.render(),
            "destruct n. - left; auto. - right; auto."
        );
        assert_eq!(
            mine_after_k(&branching, 2, None),
            Err(TreeError::KOutOfRange { k: 2, reachable: 1 })
        );
        assert!(mine_after_k(&branching, 0, None).is_err());
    }

    #[test]
    fn synthetic_expansion_factor() {
        // 100 theorems, 5 tactics each, one two-way branch
        let records: Vec<_> = (0..100)
            .map(|i| record(&format!("intro. t{i}. case. - a{i}. - b{i}.")))
            .collect();
        let (mined, stats) = mine_corpus(&records, MiningMode::Subproofs, None);
        assert_eq!(stats.n_mined, mined.len());
        assert!((300..=500).contains(&mined.len()), "{}", mined.len());
        assert_eq!(mined.len(), 400);
    }

    #[test]
    fn mine_corpus_counts_selectors() {
        let records = vec![record(SPLIT_BODY), record("split. all: auto.")];
        let (mined, stats) = mine_corpus(&records, MiningMode::Subproofs, None);
        assert_eq!(mined.len(), 3);
        assert_eq!(stats.n_skipped_goal_selectors, 1);
    }

    #[derive(Debug, Clone)]
    struct Script {
        chain: Vec<String>,
        branches: Vec<Script>,
    }

    fn script() -> impl Strategy<Value = Script> {
        let tactic = prop::sample::select(vec![
            "auto.",
            "simpl.",
            "intros x.",
            "lia.",
            "apply H.",
            "rewrite Nat.add_0_r.",
            "destruct n; auto.",
            "exact (f x).",
        ])
        .prop_map(str::to_string);
        let leaf = prop::collection::vec(tactic.clone(), 1..4).prop_map(|chain| Script {
            chain,
            branches: vec![],
        });
        leaf.prop_recursive(4, 40, 4, move |inner| {
            (
                prop::collection::vec(tactic.clone(), 1..4),
                prop::collection::vec(inner, 2..4),
            )
                .prop_map(|(chain, branches)| Script { chain, branches })
        })
    }

    fn render_script(s: &Script, depth: usize, out: &mut Vec<String>) {
        out.extend(s.chain.iter().cloned());
        for b in &s.branches {
            out.push(BulletKind::for_depth(depth + 1).to_string());
            render_script(b, depth + 1, out);
        }
    }

    proptest! {
        #[test]
        fn canonical_round_trip(s in script()) {
            let mut parts = Vec::new();
            render_script(&s, 0, &mut parts);
            let text = parts.join(" ");
            let seq = split_tactics(&text);
            let tree = build_tree(&seq).unwrap();
            let lin = linearize(&tree, tree.root_id).unwrap();
            prop_assert_eq!(&lin, &seq);
            prop_assert_eq!(split_tactics(&lin.render()), seq.clone());
            prop_assert_eq!(tree.inner_count(), seq.len());

            let rec = record(&text);
            let mined = mine_subproofs(&rec, None).unwrap();
            prop_assert_eq!(mined.len(), seq.len() - 1);
            for m in &mined {
                let sub = build_tree(&m.proof).unwrap();
                prop_assert_eq!(sub.inner_count(), m.proof.len());
            }
        }
    }
}
