use serde::{Deserialize, Serialize};

use super::{distance, Point, SimError, SimilaritySpace, SpaceKind};
use crate::rng::RngStream;

/// Slack allowed before an axiom counts as violated.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Worst-case axiom violations over the checked triples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub triples_checked: usize,
    /// `max |d(a, a)|`
    pub max_identity_violation: f64,
    /// `max(0, -d(a, b))`
    pub max_negativity_violation: f64,
    /// `max |d(a, b) - d(b, a)|`
    pub max_symmetry_violation: f64,
    /// `max(0, d(a, c) - d(a, b) - d(b, c))`
    pub max_triangle_violation: f64,
    /// Number of triples with any violation above tolerance.
    pub violations: usize,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the metric axioms of `d` on each triple.
pub fn check_metric_axioms<P, I, F>(triples: I, d: F, tol: f64) -> MetricReport
where
    I: IntoIterator<Item = (P, P, P)>,
    F: Fn(&P, &P) -> f64,
{
    let mut r = MetricReport::default();
    for (a, b, c) in triples {
        r.triples_checked += 1;
        let id = d(&a, &a).abs();
        let ab = d(&a, &b);
        let ba = d(&b, &a);
        let bc = d(&b, &c);
        let ac = d(&a, &c);
        let neg = [ab, ba, bc, ac].iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        let sym = (ab - ba).abs();
        let tri = (ac - ab - bc).max(0.0);
        r.max_identity_violation = r.max_identity_violation.max(id);
        r.max_negativity_violation = r.max_negativity_violation.max(neg);
        r.max_symmetry_violation = r.max_symmetry_violation.max(sym);
        r.max_triangle_violation = r.max_triangle_violation.max(tri);
        if id > tol || neg > tol || sym > tol || tri > tol {
            r.violations += 1;
        }
    }
    r
}

/// Samples triples from `space` and reports metric-axiom violations.
///
/// Continuous spaces draw `n_samples` triples of Gaussian points at mixed
/// scales. Graph spaces are small enough to check every ordered triple, so
/// `n_samples` only has to meet the minimum there.
pub fn validate_metric(
    space: &SimilaritySpace,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<MetricReport, SimError> {
    if n_samples < 3 {
        return Err(SimError::TooFewSamples(n_samples));
    }
    space.validate()?;
    let d = |a: &Point, b: &Point| distance(space, a, b).unwrap_or(f64::NAN);
    let report = match &space.kind {
        SpaceKind::Continuous { dim } => {
            let draw = |rng: &mut RngStream| {
                let scale = 10f64.powf(rng.uniform(-2.0, 2.0));
                Point::Vector((0..*dim).map(|_| rng.normal(0.0, scale)).collect())
            };
            let triples: Vec<_> = (0..n_samples)
                .map(|_| (draw(rng), draw(rng), draw(rng)))
                .collect();
            check_metric_axioms(triples, d, METRIC_TOLERANCE)
        }
        SpaceKind::Graph(g) => {
            let nodes = g.nodes();
            let mut triples = Vec::with_capacity(nodes.len().pow(3));
            for a in nodes {
                for b in nodes {
                    for c in nodes {
                        triples.push((
                            Point::Node(a.clone()),
                            Point::Node(b.clone()),
                            Point::Node(c.clone()),
                        ));
                    }
                }
            }
            check_metric_axioms(triples, d, METRIC_TOLERANCE)
        }
    };
    Ok(report)
}
