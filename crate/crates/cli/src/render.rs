//! Graphviz rendering of a network, optionally colored by derived
//! guarantees and grouped into protection domain clusters.
//!
//! Output is deterministic: nodes in name order, edges in channel order,
//! clusters in domain id order. Border color and line style encode the
//! instance guarantee: black solid when unsolved, gray solid for neither
//! guarantee, red dashed for confidentiality, blue dotted for integrity,
//! purple dashed and dotted for both.

use std::fmt::Write;

use cordon_core::{domain_label, Assignment, DomainSet, Guarantee, ModelError, Network};

#[derive(Default)]
pub struct RenderOptions<'a> {
    pub assignment: Option<&'a Assignment>,
    pub domains: Option<&'a DomainSet>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_class(g: Option<Guarantee>) -> (&'static str, &'static str) {
    match g {
        None => ("black", "solid"),
        Some(g) => match (g.conf, g.intg) {
            (false, false) => ("gray", "solid"),
            (true, false) => ("red", "dashed"),
            (false, true) => ("blue", "dotted"),
            (true, true) => ("purple", "dashed,dotted"),
        },
    }
}

fn node_line(net: &Network, name: &str, kind: &str, asg: Option<&Assignment>) -> Result<String, ModelError> {
    let guarantee = match asg {
        Some(asg) => Some(net.instance_guarantee(name, asg)?),
        None => None,
    };
    let (color, style) = node_class(guarantee);
    Ok(format!(
        "{} [label=\"{}\\n{}\", color={}, style=\"{}\"];",
        quote(name),
        name,
        kind,
        color,
        style,
    ))
}

pub fn render_dot(net: &Network, opts: &RenderOptions) -> Result<String, ModelError> {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&net.name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();

    match opts.domains {
        Some(domains) => {
            let mut placed = Vec::new();
            for (id, members) in domains.iter() {
                writeln!(out, "  subgraph cluster_{} {{", domain_label(id)).unwrap();
                writeln!(out, "    label=\"{}\";", domain_label(id)).unwrap();
                for name in members {
                    let inst = net.instance(name)?;
                    writeln!(out, "    {}", node_line(net, name, &inst.kind, opts.assignment)?).unwrap();
                    placed.push(name.clone());
                }
                writeln!(out, "  }}").unwrap();
            }
            for inst in net.instances().filter(|i| !placed.contains(&i.name)) {
                writeln!(out, "  {}", node_line(net, &inst.name, &inst.kind, opts.assignment)?).unwrap();
            }
        }
        None => {
            for inst in net.instances() {
                writeln!(out, "  {}", node_line(net, &inst.name, &inst.kind, opts.assignment)?).unwrap();
            }
        }
    }

    for c in net.channels() {
        writeln!(
            out,
            "  {} -> {} [label=\"{} -> {}\"];",
            quote(&c.src),
            quote(&c.dst),
            c.src_port,
            c.dst_port,
        )
        .unwrap();
    }
    writeln!(out, "}}").unwrap();
    Ok(out)
}
