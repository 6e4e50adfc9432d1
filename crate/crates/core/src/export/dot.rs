//! Graphviz DOT rendering. Output is styled for viewing and is not read back.

use std::fmt::Write as _;

use super::{ClusterView, ExportStyle};
use crate::graph::{Relation, WordGraph};

pub const DISTRIBUTIONAL_COLOR: &str = "blue";
pub const SUBSTITUTION_COLOR: &str = "yellow";
pub const REMOVED_COLOR: &str = "gray";

/// Fill colors by palette index; index 0 is the residual lineage.
pub const CLUSTER_COLORS: &[&str] = &[
    "darkblue", "orange", "green3", "red3", "purple", "saddlebrown", "hotpink", "olivedrab", "cyan4", "gold3",
    "slateblue", "tomato",
];

pub fn cluster_color(index: usize) -> &'static str {
    if index == 0 {
        CLUSTER_COLORS[0]
    } else {
        CLUSTER_COLORS[1 + (index - 1) % (CLUSTER_COLORS.len() - 1)]
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn relation_color(relation: Relation) -> &'static str {
    match relation {
        Relation::Distributional => DISTRIBUTIONAL_COLOR,
        Relation::Substitution => SUBSTITUTION_COLOR,
    }
}

/// Maps weights linearly onto grey levels over the observed range; lower is darker.
struct Shade {
    min: f64,
    max: f64,
}

impl Shade {
    fn over(weights: impl Iterator<Item = f64>) -> Option<Shade> {
        weights.fold(None, |acc: Option<Shade>, w| {
            Some(match acc {
                None => Shade { min: w, max: w },
                Some(s) => Shade {
                    min: s.min.min(w),
                    max: s.max.max(w),
                },
            })
        })
    }

    fn color(&self, w: f64) -> String {
        let t = if self.max > self.min {
            (w - self.min) / (self.max - self.min)
        } else {
            1.0
        };
        format!("gray{}", 10 + (t * 70.0).round() as u32)
    }
}

fn relation_names(relations: &std::collections::BTreeSet<Relation>) -> String {
    relations.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(" ")
}

fn edge_color(
    style: &ExportStyle,
    shade: &Option<Shade>,
    relations: &std::collections::BTreeSet<Relation>,
    weight: Option<f64>,
) -> String {
    match (style.weight_shading, shade, weight) {
        (true, Some(s), Some(w)) => s.color(w),
        _ => relation_color(style.edge_colors.dominant(relations)).to_string(),
    }
}

pub fn graph_to_dot(graph: &WordGraph, style: &ExportStyle) -> String {
    let shade = Shade::over(graph.edges().filter_map(|e| e.weight));
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", quote(&format!("{}@{}", graph.target, graph.slice.label)));
    out.push_str("  node [shape=ellipse];\n");
    for n in graph.nodes() {
        let extra = if n.lemma == graph.target { ", shape=box, style=bold" } else { "" };
        let _ = writeln!(out, "  {} [layer={}{extra}];", quote(n.lemma.as_str()), n.layer);
    }
    for e in graph.edges() {
        let _ = write!(
            out,
            "  {} -- {} [relation={}, color={}",
            quote(e.a.as_str()),
            quote(e.b.as_str()),
            quote(&relation_names(&e.relations)),
            quote(&edge_color(style, &shade, &e.relations, e.weight)),
        );
        if let Some(w) = e.weight {
            let _ = write!(out, ", weight={w}");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

pub fn clusters_to_dot(view: &ClusterView, style: &ExportStyle) -> String {
    let shade = Shade::over(view.edges.iter().filter_map(|e| e.weight));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph {} {{",
        quote(&format!("{}@{} {}", view.target, view.slice.label, view.strategy))
    );
    out.push_str("  node [shape=ellipse, style=filled, fontcolor=white];\n");
    for n in &view.nodes {
        let _ = write!(out, "  {} [layer={}", quote(n.lemma.as_str()), n.layer);
        match (n.lineage, n.color) {
            (Some(l), color) => {
                let _ = write!(out, ", lineage={}", quote(&l.to_string()));
                if let Some(c) = color {
                    let _ = write!(out, ", fillcolor={}", quote(cluster_color(c)));
                }
            }
            (None, _) => out.push_str(", shape=box, fillcolor=white, fontcolor=black"),
        }
        out.push_str("];\n");
    }
    for e in &view.edges {
        let color = if e.removed {
            REMOVED_COLOR.to_string()
        } else {
            edge_color(style, &shade, &e.relations, e.weight)
        };
        let _ = write!(
            out,
            "  {} -- {} [relation={}, removed={}, color={}",
            quote(e.a.as_str()),
            quote(e.b.as_str()),
            quote(&relation_names(&e.relations)),
            e.removed,
            quote(&color),
        );
        if e.removed {
            out.push_str(", style=dashed");
        }
        if let Some(w) = e.weight {
            let _ = write!(out, ", weight={w}");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shade_is_linear_and_darker_when_lower() {
        let s = Shade::over([0.2, 0.6, 1.0].into_iter()).unwrap();
        assert_eq!(s.color(0.2), "gray10");
        assert_eq!(s.color(0.6), "gray45");
        assert_eq!(s.color(1.0), "gray80");
    }

    #[test]
    fn residual_color_is_fixed() {
        assert_eq!(cluster_color(0), "darkblue");
        assert_ne!(cluster_color(1), "darkblue");
        assert_ne!(cluster_color(CLUSTER_COLORS.len()), "darkblue");
    }

    #[test]
    fn quoting() {
        assert_eq!(quote(r#"a"b\c"#), r#""a\"b\\c""#);
    }
}
