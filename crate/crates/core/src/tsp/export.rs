use std::fmt::Write;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{TspDecode, TspError, TspInstance, TspTour};
use crate::rng::Seed;

pub const INSTANCE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
}

/// Map export: coordinates, distance matrix and the undirected edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub version: u32,
    pub seed: Option<u64>,
    pub nodes: Vec<NodeDocument>,
    pub dist: Vec<Vec<f64>>,
    pub edges: Vec<EdgeDocument>,
}

impl From<&TspInstance> for InstanceDocument {
    fn from(inst: &TspInstance) -> Self {
        let n = inst.n_nodes();
        InstanceDocument {
            version: INSTANCE_FORMAT_VERSION,
            seed: inst.seed.map(|s| s.0),
            nodes: inst
                .coords
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| NodeDocument { id: i + 1, x, y })
                .collect(),
            dist: inst.dist.clone(),
            edges: (0..n)
                .tuple_combinations()
                .map(|(i, j)| EdgeDocument {
                    from: i + 1,
                    to: j + 1,
                    distance: inst.dist[i][j],
                })
                .collect(),
        }
    }
}

impl TryFrom<InstanceDocument> for TspInstance {
    type Error = TspError;

    /// Distances are recomputed from the coordinates; a stored matrix that
    /// disagrees is rejected.
    fn try_from(doc: InstanceDocument) -> Result<Self, TspError> {
        if doc.version != INSTANCE_FORMAT_VERSION {
            return Err(TspError::Document(format!("unsupported version {}", doc.version)));
        }
        let mut nodes = doc.nodes;
        nodes.sort_by_key(|n| n.id);
        if nodes.iter().enumerate().any(|(i, n)| n.id != i + 1) {
            return Err(TspError::Document("node ids must be 1..n".into()));
        }
        let mut inst = TspInstance::from_coords(nodes.iter().map(|n| (n.x, n.y)).collect())?;
        inst.seed = doc.seed.map(Seed);
        if !doc.dist.is_empty() && doc.dist != inst.dist {
            return Err(TspError::Document("dist does not match coordinates".into()));
        }
        Ok(inst)
    }
}

impl TspInstance {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&InstanceDocument::from(self)).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TspError> {
        let doc: InstanceDocument = serde_json::from_str(s).map_err(|e| TspError::Document(e.to_string()))?;
        TspInstance::try_from(doc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedTourDocument {
    pub order: String,
    pub eigenstate: String,
    pub y_mode: u64,
    pub est_distance: f64,
    pub true_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeDocument {
    pub tours: Vec<DecodedTourDocument>,
    pub best: String,
    pub verified: bool,
    pub near_tie: bool,
    pub quantization_step: f64,
}

impl From<&TspDecode> for DecodeDocument {
    fn from(d: &TspDecode) -> Self {
        DecodeDocument {
            tours: d
                .tours
                .iter()
                .map(|t| DecodedTourDocument {
                    order: t.tour.label(),
                    eigenstate: t.eigenstate.clone(),
                    y_mode: t.y_mode,
                    est_distance: t.est_distance,
                    true_distance: t.true_distance,
                })
                .collect(),
            best: d.best_tour().label(),
            verified: d.verified,
            near_tie: d.is_tie(),
            quantization_step: d.quantization_step,
        }
    }
}

const CANVAS: f64 = 400.0;
const MARGIN: f64 = 30.0;

/// Static SVG of the map; edges of `highlight` are drawn bold.
pub fn render_svg(instance: &TspInstance, highlight: Option<&TspTour>) -> String {
    let (xs, ys): (Vec<f64>, Vec<f64>) = instance.coords.iter().copied().unzip();
    let (min_x, max_x) = xs.iter().copied().minmax().into_option().unwrap();
    let (min_y, max_y) = ys.iter().copied().minmax().into_option().unwrap();
    let span = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    // SVG y grows downwards
    let project = |(x, y): (f64, f64)| (MARGIN + (x - min_x) * scale, CANVAS - MARGIN - (y - min_y) * scale);

    let mut tour_edges = Vec::new();
    if let Some(t) = highlight {
        tour_edges.extend(t.edges().map(|(a, b)| (a.min(b), a.max(b))));
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"##
    );
    let _ = writeln!(out, r##"  <rect width="100%" height="100%" fill="white"/>"##);
    let n = instance.n_nodes();
    for (i, j) in (0..n).tuple_combinations() {
        let (x1, y1) = project(instance.coords[i]);
        let (x2, y2) = project(instance.coords[j]);
        let on_tour = tour_edges.contains(&(i + 1, j + 1));
        let (stroke, width) = if on_tour { ("#c0392b", 3.0) } else { ("#bbbbbb", 1.0) };
        let _ = writeln!(
            out,
            r##"  <line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"##
        );
        let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
        let _ = writeln!(
            out,
            r##"  <text x="{mx:.2}" y="{my:.2}" font-size="10" fill="#555555">{:.1}</text>"##,
            instance.dist[i][j]
        );
    }
    for (i, &p) in instance.coords.iter().enumerate() {
        let (x, y) = project(p);
        let _ = writeln!(out, r##"  <circle cx="{x:.2}" cy="{y:.2}" r="12" fill="#2c3e50"/>"##);
        let _ = writeln!(
            out,
            r##"  <text x="{x:.2}" y="{:.2}" font-size="12" fill="white" text-anchor="middle">{}</text>"##,
            y + 4.0,
            i + 1
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::generate_instance;

    #[test]
    fn instance_json_round_trip() {
        let inst = generate_instance(Seed(12), 4).unwrap();
        let back = TspInstance::from_json(&inst.to_json_pretty()).unwrap();
        assert_eq!(back, inst);
        let doc = InstanceDocument::from(&inst);
        assert_eq!(doc.edges.len(), 6);
        assert_eq!(doc.nodes[0].id, 1);
    }

    #[test]
    fn tampered_distances_rejected() {
        let inst = generate_instance(Seed(1), 4).unwrap();
        let mut doc = InstanceDocument::from(&inst);
        doc.dist[0][1] += 1.0;
        assert!(TspInstance::try_from(doc).is_err());
    }

    #[test]
    fn svg_has_every_node_and_edge() {
        let inst = generate_instance(Seed(2), 4).unwrap();
        let tour = TspTour::new(vec![1, 2, 3, 4]).unwrap();
        let svg = render_svg(&inst, Some(&tour));
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<line").count(), 6);
        assert_eq!(svg.matches("stroke-width=\"3\"").count(), 4);
    }
}
