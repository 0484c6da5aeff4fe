//! Similarity spaces, Similarity Profiles and representational
//! dissimilarity matrices.
//!
//! A space is either continuous (Euclidean distance on vectors) or a
//! connected graph with positive edge weights (shortest-path distance). The
//! distance is the Euclidean *norm* of the difference; the signed difference
//! `a - b` is not a metric and only appears as a negative test fixture.

mod metric;
mod rdm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::PerceptualRepresentation;

pub use metric::{check_metric_axioms, validate_metric, MetricReport, METRIC_TOLERANCE};
pub use rdm::{compare_rdm, rdm, Rdm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("point is not in space {space}: {detail}")]
    PointNotInSpace { space: String, detail: String },
    #[error("graph space {0} is disconnected")]
    DisconnectedGraph(String),
    #[error("graph edge weight {0} must be positive and finite")]
    NonPositiveEdge(f64),
    #[error("metric {metric:?} is not valid for this kind of space")]
    MetricKindMismatch { metric: Metric },
    #[error("similarity profile needs at least one reference")]
    EmptyReferenceSet,
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("RDM size mismatch: {0} vs {1} items")]
    SizeMismatch(usize, usize),
    #[error("RDM item order differs at position {0}")]
    ItemMismatch(usize),
    #[error("RDM upper triangle has zero variance")]
    ZeroVariance,
    #[error("invalid RDM: {0}")]
    InvalidRdm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    GraphShortestPath,
}

/// A connected graph with precomputed all-pairs shortest paths.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    nodes: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    shortest: Vec<f64>,
}

impl WeightedGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    fn index_of(&self, node: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == node)
    }

    fn path(&self, i: usize, j: usize) -> f64 {
        self.shortest[i * self.nodes.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    Continuous { dim: usize },
    Graph(WeightedGraph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySpace {
    pub space_id: String,
    pub kind: SpaceKind,
    pub metric: Metric,
}

/// A location in a space: a vector for continuous spaces, a node name for graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Vector(Vec<f64>),
    Node(String),
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::Vector(v)
    }
}

impl From<&str> for Point {
    fn from(s: &str) -> Self {
        Point::Node(s.to_string())
    }
}

impl SimilaritySpace {
    pub fn continuous(space_id: impl Into<String>, dim: usize) -> Self {
        Self {
            space_id: space_id.into(),
            kind: SpaceKind::Continuous { dim },
            metric: Metric::Euclidean,
        }
    }

    /// Builds a graph space; fails unless every weight is positive and the
    /// graph is connected.
    pub fn graph(
        space_id: impl Into<String>,
        nodes: &[&str],
        edges: &[(&str, &str, f64)],
    ) -> Result<Self, SimError> {
        let space_id = space_id.into();
        let nodes: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
        let n = nodes.len();
        let find = |name: &str| {
            nodes.iter().position(|x| x == name).ok_or_else(|| SimError::PointNotInSpace {
                space: space_id.clone(),
                detail: format!("edge endpoint {name}"),
            })
        };
        let mut indexed = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if !(w > 0.0) || !w.is_finite() {
                return Err(SimError::NonPositiveEdge(w));
            }
            indexed.push((find(a)?, find(b)?, w));
        }

        // Floyd-Warshall
        let mut d = vec![f64::INFINITY; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        for &(a, b, w) in &indexed {
            if w < d[a * n + b] {
                d[a * n + b] = w;
                d[b * n + a] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + d[k * n + j];
                    if cand < d[i * n + j] {
                        d[i * n + j] = cand;
                    }
                }
            }
        }
        if n == 0 || d.iter().any(|v| v.is_infinite()) {
            return Err(SimError::DisconnectedGraph(space_id));
        }
        Ok(Self {
            space_id,
            kind: SpaceKind::Graph(WeightedGraph {
                nodes,
                edges: indexed,
                shortest: d,
            }),
            metric: Metric::GraphShortestPath,
        })
    }

    /// Checks the kind/metric pairing.
    pub fn validate(&self) -> Result<(), SimError> {
        match (&self.kind, self.metric) {
            (SpaceKind::Continuous { .. }, Metric::Euclidean)
            | (SpaceKind::Graph(_), Metric::GraphShortestPath) => Ok(()),
            (_, metric) => Err(SimError::MetricKindMismatch { metric }),
        }
    }

    fn not_in_space(&self, detail: String) -> SimError {
        SimError::PointNotInSpace {
            space: self.space_id.clone(),
            detail,
        }
    }
}

/// `d(a, b)` in `space`.
pub fn distance(space: &SimilaritySpace, a: &Point, b: &Point) -> Result<f64, SimError> {
    space.validate()?;
    match (&space.kind, a, b) {
        (SpaceKind::Continuous { dim }, Point::Vector(x), Point::Vector(y)) => {
            for v in [x, y] {
                if v.len() != *dim || v.iter().any(|c| !c.is_finite()) {
                    return Err(space.not_in_space(format!(
                        "vector of length {} (space dim {dim})",
                        v.len()
                    )));
                }
            }
            Ok(euclidean(x, y))
        }
        (SpaceKind::Graph(g), Point::Node(x), Point::Node(y)) => {
            let i = g.index_of(x).ok_or_else(|| space.not_in_space(format!("node {x}")))?;
            let j = g.index_of(y).ok_or_else(|| space.not_in_space(format!("node {y}")))?;
            Ok(g.path(i, j))
        }
        _ => Err(space.not_in_space("point kind does not match space kind".into())),
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `SP(S)`: distances from one representation to a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub subject: String,
    pub reference_ids: Vec<String>,
    pub distances: Vec<f64>,
}

impl SimilarityProfile {
    /// Reference closest to the subject (first one on ties).
    pub fn nearest(&self) -> Option<(&str, f64)> {
        self.reference_ids
            .iter()
            .zip(&self.distances)
            .fold(None, |best: Option<(&str, f64)>, (id, &d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((id.as_str(), d)),
            })
    }
}

pub fn similarity_profile(
    space: &SimilaritySpace,
    subject: &PerceptualRepresentation,
    references: &[PerceptualRepresentation],
) -> Result<SimilarityProfile, SimError> {
    if references.is_empty() {
        return Err(SimError::EmptyReferenceSet);
    }
    let s = Point::Vector(subject.vector.clone());
    let distances = references
        .iter()
        .map(|r| distance(space, &s, &Point::Vector(r.vector.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimilarityProfile {
        subject: subject.rep_id.clone(),
        reference_ids: references.iter().map(|r| r.rep_id.clone()).collect(),
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(id: &str, v: &[f64]) -> PerceptualRepresentation {
        PerceptualRepresentation::new(id, v.to_vec())
    }

    #[test]
    fn euclidean_three_four_five() {
        let s = SimilaritySpace::continuous("x", 2);
        assert_eq!(distance(&s, &vec![0.0, 0.0].into(), &vec![3.0, 4.0].into()).unwrap(), 5.0);
        assert_eq!(distance(&s, &vec![1.5, -2.0].into(), &vec![1.5, -2.0].into()).unwrap(), 0.0);
    }

    #[test]
    fn graph_path_distance() {
        let g = SimilaritySpace::graph("g", &["n1", "n2", "n3"], &[("n1", "n2", 1.0), ("n2", "n3", 2.0)])
            .unwrap();
        assert_eq!(distance(&g, &"n1".into(), &"n3".into()).unwrap(), 3.0);
        assert_eq!(distance(&g, &"n2".into(), &"n2".into()).unwrap(), 0.0);
        assert!(matches!(
            distance(&g, &"n1".into(), &"n9".into()),
            Err(SimError::PointNotInSpace { .. })
        ));
    }

    #[test]
    fn graph_construction_errors() {
        assert!(matches!(
            SimilaritySpace::graph("g", &["a", "b", "c"], &[("a", "b", 1.0)]),
            Err(SimError::DisconnectedGraph(_))
        ));
        assert!(matches!(
            SimilaritySpace::graph("g", &["a", "b"], &[("a", "b", 0.0)]),
            Err(SimError::NonPositiveEdge(_))
        ));
    }

    #[test]
    fn wrong_point_kind_or_dim() {
        let s = SimilaritySpace::continuous("x", 2);
        assert!(distance(&s, &vec![0.0].into(), &vec![0.0, 1.0].into()).is_err());
        assert!(distance(&s, &"n1".into(), &vec![0.0, 1.0].into()).is_err());
        let bad = SimilaritySpace {
            metric: Metric::GraphShortestPath,
            ..SimilaritySpace::continuous("x", 2)
        };
        assert!(matches!(bad.validate(), Err(SimError::MetricKindMismatch { .. })));
    }

    #[test]
    fn profile_basics() {
        let s = SimilaritySpace::continuous("x", 2);
        let p = similarity_profile(
            &s,
            &rep("s", &[0.0, 0.0]),
            &[rep("a", &[0.0, 0.0]), rep("b", &[1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(p.distances, vec![0.0, 1.0]);
        assert_eq!(p.nearest(), Some(("a", 0.0)));
        assert_eq!(
            similarity_profile(&s, &rep("s", &[0.0, 0.0]), &[]),
            Err(SimError::EmptyReferenceSet)
        );
    }

    #[test]
    fn colour_profile_orders_pink_before_blue() {
        // rough RGB coordinates in [0, 1]
        let space = SimilaritySpace::continuous("colour", 3);
        let red = rep("red", &[0.9, 0.1, 0.1]);
        let refs = [rep("pink", &[1.0, 0.6, 0.7]), rep("blue", &[0.1, 0.2, 0.9])];
        let p = similarity_profile(&space, &red, &refs).unwrap();
        assert!(p.distances[0] < p.distances[1]);
        assert_eq!(p.nearest().unwrap().0, "pink");
    }
}
