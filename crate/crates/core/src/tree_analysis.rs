//! Structural inspection of trained forests: which features split
//! immediately below the split nodes of a given parent feature.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltr::{GBDTModel, TreeNode};

/// Tally for one child feature under one parent feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChildTally {
    pub count: u64,
    /// Count normalized over all tallied children of the same parent.
    pub share: f64,
}

/// Per-parent adjacency statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParentStats {
    /// Internal nodes splitting on the parent feature.
    pub parent_node_count: u64,
    pub children: BTreeMap<String, ChildTally>,
}

/// Distribution of child-split features under each parent feature.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAdjacencyReport {
    pub per_parent: BTreeMap<String, ParentStats>,
}

impl NodeAdjacencyReport {
    /// CSV export: `parent_feature,child_feature,count,share`.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "parent_feature,child_feature,count,share")?;
        for (parent, stats) in &self.per_parent {
            for (child, tally) in &stats.children {
                writeln!(out, "{parent},{child},{},{}", tally.count, tally.share)?;
            }
        }
        Ok(())
    }

    /// Summed share of the children whose feature name satisfies `pred`,
    /// under the given parent. None when the parent tallied no children.
    pub fn share_where(&self, parent: &str, pred: impl Fn(&str) -> bool) -> Option<f64> {
        let stats = self.per_parent.get(parent)?;
        if stats.children.is_empty() {
            return None;
        }
        Some(
            stats
                .children
                .iter()
                .filter(|(name, _)| pred(name))
                .map(|(_, t)| t.share)
                .sum(),
        )
    }
}

fn check_known(model: &GBDTModel, names: &BTreeSet<String>) -> Result<()> {
    for name in names {
        if !model.feature_names.contains(name) {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    Ok(())
}

/// Scan every internal node of every tree; when a node splits on a parent
/// feature, tally the split features of its immediate children (both
/// children counted; leaf children are skipped, and `child_filter`, when
/// given, restricts which child features enter the tally).
pub fn child_feature_distribution(
    model: &GBDTModel,
    parent_features: &BTreeSet<String>,
    child_filter: Option<&BTreeSet<String>>,
) -> Result<NodeAdjacencyReport> {
    check_known(model, parent_features)?;
    if let Some(filter) = child_filter {
        check_known(model, filter)?;
    }

    let mut report = NodeAdjacencyReport::default();
    for name in parent_features {
        report.per_parent.insert(name.clone(), ParentStats::default());
    }

    for tree in &model.trees {
        for node in &tree.nodes {
            let TreeNode::Internal {
                feature,
                left,
                right,
                ..
            } = node
            else {
                continue;
            };
            let feature_name = &model.feature_names[*feature];
            if !parent_features.contains(feature_name) {
                continue;
            }
            let stats = report.per_parent.get_mut(feature_name).unwrap();
            stats.parent_node_count += 1;
            for child_idx in [*left, *right] {
                if let TreeNode::Internal {
                    feature: child_feature,
                    ..
                } = &tree.nodes[child_idx]
                {
                    let child_name = &model.feature_names[*child_feature];
                    if child_filter.map(|f| f.contains(child_name)).unwrap_or(true) {
                        stats
                            .children
                            .entry(child_name.clone())
                            .or_insert(ChildTally { count: 0, share: 0.0 })
                            .count += 1;
                    }
                }
            }
        }
    }

    for stats in report.per_parent.values_mut() {
        let total: u64 = stats.children.values().map(|t| t.count).sum();
        if total > 0 {
            for tally in stats.children.values_mut() {
                tally.share = tally.count as f64 / total as f64;
            }
        }
    }
    Ok(report)
}

/// How many internal nodes split on each feature, over the whole forest.
pub fn feature_split_frequency(model: &GBDTModel) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for tree in &model.trees {
        for node in &tree.nodes {
            if let TreeNode::Internal { feature, .. } = node {
                *out.entry(model.feature_names[*feature].clone()).or_insert(0) += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltr::Tree;

    fn internal(feature: usize, left: usize, right: usize) -> TreeNode {
        TreeNode::Internal {
            feature,
            threshold: 0.5,
            left,
            right,
        }
    }

    fn leaf() -> TreeNode {
        TreeNode::Leaf { value: 0.0 }
    }

    fn model(trees: Vec<Tree>) -> GBDTModel {
        GBDTModel {
            feature_names: vec![
                "vertical_Fashion".into(),
                "vertical_Consumables".into(),
                "web_30_cr".into(),
                "web_730_cr".into(),
            ],
            base_score: 0.0,
            learning_rate: 0.1,
            trees,
        }
    }

    fn parents(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stump_has_parent_count_but_no_children() {
        let m = model(vec![Tree {
            nodes: vec![internal(0, 1, 2), leaf(), leaf()],
        }]);
        let report =
            child_feature_distribution(&m, &parents(&["vertical_Fashion"]), None).unwrap();
        let stats = &report.per_parent["vertical_Fashion"];
        assert_eq!(stats.parent_node_count, 1);
        assert!(stats.children.is_empty());
    }

    #[test]
    fn depth_two_tallies_both_children() {
        let m = model(vec![Tree {
            nodes: vec![
                internal(0, 1, 4),
                internal(2, 2, 3),
                leaf(),
                leaf(),
                internal(2, 5, 6),
                leaf(),
                leaf(),
            ],
        }]);
        let report =
            child_feature_distribution(&m, &parents(&["vertical_Fashion"]), None).unwrap();
        let stats = &report.per_parent["vertical_Fashion"];
        assert_eq!(stats.children["web_30_cr"].count, 2);
        assert_eq!(stats.children["web_30_cr"].share, 1.0);
    }

    #[test]
    fn hand_built_forest_matches_hand_tally() {
        // Tree 1: Fashion root with children on 30cr and 730cr.
        // Tree 2: Consumables root with children 730cr and a leaf.
        // Tree 3: 30cr root (not a parent), Fashion child below it whose own
        //         children are 730cr and a leaf.
        let t1 = Tree {
            nodes: vec![
                internal(0, 1, 4),
                internal(2, 2, 3),
                leaf(),
                leaf(),
                internal(3, 5, 6),
                leaf(),
                leaf(),
            ],
        };
        let t2 = Tree {
            nodes: vec![internal(1, 1, 4), internal(3, 2, 3), leaf(), leaf(), leaf()],
        };
        let t3 = Tree {
            nodes: vec![
                internal(2, 1, 6),
                internal(0, 2, 5),
                internal(3, 3, 4),
                leaf(),
                leaf(),
                leaf(),
                leaf(),
            ],
        };
        let m = model(vec![t1, t2, t3]);
        let report = child_feature_distribution(
            &m,
            &parents(&["vertical_Fashion", "vertical_Consumables"]),
            None,
        )
        .unwrap();

        let fashion = &report.per_parent["vertical_Fashion"];
        assert_eq!(fashion.parent_node_count, 2);
        assert_eq!(fashion.children["web_30_cr"].count, 1);
        assert_eq!(fashion.children["web_730_cr"].count, 2);
        assert!((fashion.children["web_730_cr"].share - 2.0 / 3.0).abs() < 1e-12);

        let consumables = &report.per_parent["vertical_Consumables"];
        assert_eq!(consumables.parent_node_count, 1);
        assert_eq!(consumables.children["web_730_cr"].count, 1);
        assert_eq!(consumables.children["web_730_cr"].share, 1.0);

        // Shares per parent sum to 1.
        for stats in report.per_parent.values() {
            if !stats.children.is_empty() {
                let total: f64 = stats.children.values().map(|t| t.share).sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn report_invariant_to_tree_order() {
        let t1 = Tree {
            nodes: vec![internal(0, 1, 4), internal(2, 2, 3), leaf(), leaf(), leaf()],
        };
        let t2 = Tree {
            nodes: vec![internal(0, 1, 4), internal(3, 2, 3), leaf(), leaf(), leaf()],
        };
        let a = child_feature_distribution(
            &model(vec![t1.clone(), t2.clone()]),
            &parents(&["vertical_Fashion"]),
            None,
        )
        .unwrap();
        let b = child_feature_distribution(
            &model(vec![t2, t1]),
            &parents(&["vertical_Fashion"]),
            None,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_feature_is_an_error() {
        let m = model(vec![]);
        assert!(child_feature_distribution(&m, &parents(&["nope"]), None).is_err());
        assert!(
            child_feature_distribution(&m, &parents(&["web_30_cr"]), Some(&parents(&["nope"])))
                .is_err()
        );
    }

    #[test]
    fn split_frequency_counts_internal_nodes() {
        assert!(feature_split_frequency(&model(vec![])).is_empty());

        let m = model(vec![Tree {
            nodes: vec![internal(2, 1, 2), leaf(), leaf()],
        }]);
        let freq = feature_split_frequency(&m);
        assert_eq!(freq.len(), 1);
        assert_eq!(freq["web_30_cr"], 1);
    }

    #[test]
    fn child_filter_restricts_tally() {
        let m = model(vec![Tree {
            nodes: vec![
                internal(0, 1, 4),
                internal(1, 2, 3),
                leaf(),
                leaf(),
                internal(2, 5, 6),
                leaf(),
                leaf(),
            ],
        }]);
        let behavioral = parents(&["web_30_cr", "web_730_cr"]);
        let report = child_feature_distribution(
            &m,
            &parents(&["vertical_Fashion"]),
            Some(&behavioral),
        )
        .unwrap();
        let stats = &report.per_parent["vertical_Fashion"];
        // The vertical_Consumables child is filtered out.
        assert_eq!(stats.children.len(), 1);
        assert_eq!(stats.children["web_30_cr"].share, 1.0);
    }
}
