use std::collections::BTreeSet;

use super::{Node, ProcessModel};

/// Ordered activity pairs `(x, y)` where `y` may directly follow `x`.
pub type DirectlyFollows = BTreeSet<(String, String)>;

#[derive(Default)]
struct Footprint {
    first: BTreeSet<String>,
    last: BTreeSet<String>,
    /// Activities that occur in at least one trace.
    reachable: BTreeSet<String>,
    df: DirectlyFollows,
}

fn cross(out: &mut DirectlyFollows, from: &BTreeSet<String>, to: &BTreeSet<String>) {
    for x in from {
        for y in to {
            out.insert((x.clone(), y.clone()));
        }
    }
}

fn footprint(node: &Node) -> Footprint {
    match node {
        Node::Leaf(a) => {
            let s = BTreeSet::from([a.clone()]);
            Footprint {
                first: s.clone(),
                last: s.clone(),
                reachable: s,
                df: DirectlyFollows::new(),
            }
        }
        Node::Sequence(children) => {
            let fps: Vec<Footprint> = children.iter().map(footprint).collect();
            let mut out = Footprint {
                first: fps[0].first.clone(),
                last: fps[fps.len() - 1].last.clone(),
                ..Default::default()
            };
            for pair in fps.windows(2) {
                cross(&mut out.df, &pair[0].last, &pair[1].first);
            }
            for fp in fps {
                out.reachable.extend(fp.reachable);
                out.df.extend(fp.df);
            }
            out
        }
        Node::ExclusiveChoice(children) => {
            let mut out = Footprint::default();
            for fp in children.iter().map(footprint) {
                out.first.extend(fp.first);
                out.last.extend(fp.last);
                out.reachable.extend(fp.reachable);
                out.df.extend(fp.df);
            }
            out
        }
        Node::Parallel(children) => {
            let fps: Vec<Footprint> = children.iter().map(footprint).collect();
            let mut out = Footprint::default();
            for (i, a) in fps.iter().enumerate() {
                for (j, b) in fps.iter().enumerate() {
                    if i != j {
                        cross(&mut out.df, &a.reachable, &b.reachable);
                    }
                }
            }
            for fp in fps {
                out.first.extend(fp.first);
                out.last.extend(fp.last);
                out.reachable.extend(fp.reachable);
                out.df.extend(fp.df);
            }
            out
        }
        Node::Loop {
            body,
            redo,
            max_redo,
        } => {
            let mut out = footprint(body);
            if *max_redo > 0 {
                let r = footprint(redo);
                cross(&mut out.df, &out.last.clone(), &r.first);
                cross(&mut out.df, &r.last, &out.first.clone());
                out.reachable.extend(r.reachable);
                out.df.extend(r.df);
            }
            out
        }
    }
}

/// Directly-follows relation of a model, computed from the tree structure.
pub fn directly_follows(model: &ProcessModel) -> DirectlyFollows {
    footprint(model.root()).df
}
