//! Graphviz export.
//!
//! Nodes are labelled with their id and flags. Initial states are drawn with
//! a double border, deadlocked states as filled octagons and
//! invariant-violating states with a red outline. Edges carry
//! `event(param=value, ...)`.

use std::fmt::Write as _;

use crate::kernel::eval::Model;

use super::graph::StateGraph;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export_dot(model: &Model, g: &StateGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&model.system.name.name));
    out.push_str("  node [shape=ellipse];\n");
    for (i, f) in g.flags.iter().enumerate() {
        let mut tags = Vec::new();
        let mut attrs = Vec::new();
        if g.initial.contains(&(i as u32)) {
            tags.push("init");
            attrs.push("peripheries=2".to_string());
        }
        if f.deadlocked {
            tags.push("deadlock");
            attrs.push("shape=octagon, style=filled, fillcolor=\"#f4cccc\"".to_string());
        }
        if f.violated {
            tags.push("violation");
            attrs.push("color=red, penwidth=2".to_string());
        }
        if !f.expanded {
            tags.push("unexpanded");
            attrs.push("style=dashed".to_string());
        }
        let label = if tags.is_empty() {
            i.to_string()
        } else {
            format!("{i}\\n{}", tags.join(","))
        };
        let extra: String = attrs.iter().map(|a| format!(", {a}")).collect();
        let _ = writeln!(out, "  s{i} [label=\"{label}\"{extra}];");
    }
    for t in &g.transitions {
        let ev = &model.system.events[t.event as usize];
        let args: Vec<String> = ev
            .params
            .iter()
            .zip(&t.binding)
            .map(|(p, v)| format!("{}={v}", p.ident.name))
            .collect();
        let label = format!("{}({})", ev.name.name, args.join(", "));
        let _ = writeln!(
            out,
            "  s{} -> s{} [label=\"{}\"];",
            t.src,
            t.dst,
            escape(&label)
        );
    }
    out.push_str("}\n");
    out
}
