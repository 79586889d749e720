//! Small hand-built staged trees used throughout the tests and examples.
//!
//! Vertices are referred to by breadth-first index (`v0` is the root, `v1`
//! and `v2` its children for a binary first variable, and so on).

use crate::model::{EventTree, StagedTree, Staging, VariableSpec};

/// `p` binary variables named `X1..Xp` with levels `0`, `1`.
pub fn binary_tree(p: usize) -> EventTree {
    EventTree::new(
        (1..=p)
            .map(|i| VariableSpec::binary(format!("X{i}")))
            .collect(),
    )
    .expect("binary variables are valid")
}

fn staged(tree: EventTree, blocks: &[Vec<Vec<usize>>]) -> StagedTree {
    let staging = Staging::from_blocks(&tree, blocks).expect("fixture staging is valid");
    StagedTree::new(tree, staging).expect("fixture staging is valid")
}

/// Three binary variables, stages `{v0} {v1} {v2} {v3,v4} {v5,v6}`: the tree
/// of the network `X2 <- X1 -> X3`.
pub fn common_cause() -> StagedTree {
    staged(
        binary_tree(3),
        &[
            vec![vec![0]],
            vec![vec![0], vec![1]],
            vec![vec![0, 1], vec![2, 3]],
        ],
    )
}

/// Three binary variables where `X3` has the same distribution given
/// `X1 = X2 = 0` and `X1 = X2 = 1` (stage `{v3,v6}`). Simple, but not the
/// tree of any network.
pub fn context_specific() -> StagedTree {
    staged(
        binary_tree(3),
        &[
            vec![vec![0]],
            vec![vec![0], vec![1]],
            vec![vec![0, 3], vec![1], vec![2]],
        ],
    )
}

/// Four binary variables with stages `{v1,v2}`, `{v3,v5}`, `{v4}`, `{v6}`,
/// `{v7,v9,v10,v11}`, `{v8,v12,v13,v14}`. Not simple: `v1` and `v2` share a
/// stage but not a position, and its CEG has eight internal vertices.
pub fn eight_positions() -> StagedTree {
    staged(
        binary_tree(4),
        &[
            vec![vec![0]],
            vec![vec![0, 1]],
            vec![vec![0, 2], vec![1], vec![3]],
            vec![vec![0, 2, 3, 4], vec![1, 5, 6, 7]],
        ],
    )
}

/// Social background (3 levels), family life events (3 levels) and hospital
/// admission (2 levels). Life events share a distribution for low and
/// average backgrounds, which in a simple tree forces admission to share a
/// distribution across the matching contexts.
pub fn christchurch() -> StagedTree {
    let levels = |ls: &[&str]| ls.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let tree = EventTree::new(vec![
        VariableSpec::new("Social", levels(&["low", "avg", "high"])).unwrap(),
        VariableSpec::new("Events", levels(&["low", "avg", "high"])).unwrap(),
        VariableSpec::new("Admission", levels(&["no", "yes"])).unwrap(),
    ])
    .expect("valid variables");
    staged(
        tree,
        &[
            vec![vec![0]],
            vec![vec![0, 1], vec![2]],
            vec![
                vec![0, 3],
                vec![1, 4],
                vec![2, 5],
                vec![6],
                vec![7],
                vec![8],
            ],
        ],
    )
}
