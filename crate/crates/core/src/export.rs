//! Rendering of a network with a highlighted edge subset.

use std::fmt::Write;
use std::str::FromStr;

use crate::network::{EdgeSet, Network, NetworkError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
    Csv,
}

impl FromStr for GraphFormat {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::GraphMl),
            "csv" => Ok(GraphFormat::Csv),
            other => Err(NetworkError::UnknownFormat(other.to_string())),
        }
    }
}

/// Renders every network edge; edges in `subset` are solid and labeled with
/// their key rate, the rest dashed. Output order follows canonical edge order.
pub fn export_graph(net: &Network, subset: &EdgeSet, format: GraphFormat) -> Result<Vec<u8>, NetworkError> {
    if let Some(e) = subset.iter().find(|&e| e >= net.edge_count()) {
        return Err(NetworkError::UnknownEdge(e.to_string(), String::new()));
    }
    let text = match format {
        GraphFormat::Dot => to_dot(net, subset),
        GraphFormat::GraphMl => to_graphml(net, subset),
        GraphFormat::Csv => to_csv(net, subset),
    };
    Ok(text.into_bytes())
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn to_dot(net: &Network, subset: &EdgeSet) -> String {
    let mut out = String::from("graph qkd {\n  node [shape=circle];\n");
    for node in net.nodes() {
        match node.coords {
            Some((x, y)) => writeln!(
                out,
                "  {} [pos=\"{},{}!\"];",
                dot_quote(node.id.as_str()),
                x * 10.0,
                y * 10.0
            ),
            None => writeln!(out, "  {};", dot_quote(node.id.as_str())),
        }
        .unwrap();
    }
    for (i, e) in net.edges().iter().enumerate() {
        let (u, v) = (dot_quote(net.id(e.u).as_str()), dot_quote(net.id(e.v).as_str()));
        if subset.contains(i) {
            writeln!(out, "  {u} -- {v} [style=solid, label=\"{}\"];", e.key_rate).unwrap();
        } else {
            writeln!(out, "  {u} -- {v} [style=dashed];").unwrap();
        }
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn to_graphml(net: &Network, subset: &EdgeSet) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"x\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n",
        "  <key id=\"y\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n",
        "  <key id=\"key_rate\" for=\"edge\" attr.name=\"key_rate_kbps\" attr.type=\"double\"/>\n",
        "  <key id=\"selected\" for=\"edge\" attr.name=\"selected\" attr.type=\"boolean\"/>\n",
        "  <graph id=\"qkd\" edgedefault=\"undirected\">\n"
    ));
    for node in net.nodes() {
        let id = xml_escape(node.id.as_str());
        match node.coords {
            Some((x, y)) => writeln!(
                out,
                "    <node id=\"{id}\"><data key=\"x\">{x}</data><data key=\"y\">{y}</data></node>"
            ),
            None => writeln!(out, "    <node id=\"{id}\"/>"),
        }
        .unwrap();
    }
    for (i, e) in net.edges().iter().enumerate() {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"key_rate\">{}</data><data key=\"selected\">{}</data></edge>",
            xml_escape(net.id(e.u).as_str()),
            xml_escape(net.id(e.v).as_str()),
            e.key_rate,
            subset.contains(i)
        )
        .unwrap();
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// `u,v,key_rate,selected`; readable back as csv-triple edges.
fn to_csv(net: &Network, subset: &EdgeSet) -> String {
    let mut out = String::from("u,v,key_rate,selected\n");
    for (i, e) in net.edges().iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            net.id(e.u),
            net.id(e.v),
            e.key_rate,
            subset.contains(i)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_csv_triple, NetworkBuilder};

    fn triangle() -> Network {
        NetworkBuilder::new()
            .edge("a", "b", 10.0)
            .edge("b", "c", 5.0)
            .edge("a", "c", 2.0)
            .build()
            .unwrap()
    }

    #[test]
    fn dot_styles() {
        let net = triangle();
        let subset = EdgeSet::from_pairs(&net, &[("a", "b"), ("b", "c")]).unwrap();
        let dot = String::from_utf8(export_graph(&net, &subset, GraphFormat::Dot).unwrap()).unwrap();
        assert_eq!(dot.matches("style=solid").count(), 2);
        assert_eq!(dot.matches("style=dashed").count(), 1);
        assert!(dot.contains("\"a\" -- \"b\" [style=solid, label=\"10\"]"));
        assert!(dot.contains("\"a\" -- \"c\" [style=dashed]"));

        let empty = String::from_utf8(export_graph(&net, &EdgeSet::new(), GraphFormat::Dot).unwrap()).unwrap();
        assert_eq!(empty.matches("style=dashed").count(), 3);
        assert_eq!(empty.matches("style=solid").count(), 0);
    }

    #[test]
    fn deterministic_output() {
        let net = crate::network::reference_network(1);
        let subset = EdgeSet::full(&net);
        for f in [GraphFormat::Dot, GraphFormat::GraphMl, GraphFormat::Csv] {
            assert_eq!(
                export_graph(&net, &subset, f).unwrap(),
                export_graph(&net, &subset, f).unwrap()
            );
        }
    }

    #[test]
    fn unknown_format() {
        assert!("svg".parse::<GraphFormat>().is_err());
        assert_eq!("GraphML".parse::<GraphFormat>().unwrap(), GraphFormat::GraphMl);
    }

    #[test]
    fn graphml_counts() {
        let net = triangle();
        let subset = EdgeSet::from_pairs(&net, &[("a", "b")]).unwrap();
        let xml = String::from_utf8(export_graph(&net, &subset, GraphFormat::GraphMl).unwrap()).unwrap();
        assert_eq!(xml.matches("<node ").count(), 3);
        assert_eq!(xml.matches("<edge ").count(), 3);
        assert_eq!(xml.matches(">true<").count(), 1);
    }

    #[test]
    fn csv_reloads() {
        let net = triangle();
        let csv = export_graph(&net, &EdgeSet::new(), GraphFormat::Csv).unwrap();
        let back = parse_csv_triple(std::str::from_utf8(&csv).unwrap(), None).unwrap();
        assert_eq!(back, net);
    }
}
