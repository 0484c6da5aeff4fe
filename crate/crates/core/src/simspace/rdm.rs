use serde::{Deserialize, Serialize};

use super::{distance, Point, SimError, SimilaritySpace};

/// Representational dissimilarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rdm {
    pub item_ids: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl Rdm {
    /// Wraps a precomputed matrix after checking it is square, symmetric,
    /// zero on the diagonal and nonnegative.
    pub fn from_matrix(item_ids: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let n = item_ids.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(SimError::InvalidRdm(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            if matrix[i][i] != 0.0 {
                return Err(SimError::InvalidRdm(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = matrix[i][j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(SimError::InvalidRdm(format!("bad entry at ({i}, {j})")));
                }
                if v != matrix[j][i] {
                    return Err(SimError::InvalidRdm(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { item_ids, matrix })
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.matrix[i][j]);
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            item_ids: self.item_ids.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// Header row of item ids, then one row per item.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.item_ids).expect("in-memory write");
        for row in &self.matrix {
            w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Pairwise distances among `items`; the matrix is filled from the upper
/// triangle so it is exactly symmetric.
pub fn rdm(space: &SimilaritySpace, items: &[(String, Point)]) -> Result<Rdm, SimError> {
    let n = items.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(space, &items[i].1, &items[j].1)?;
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    Ok(Rdm {
        item_ids: items.iter().map(|(id, _)| id.clone()).collect(),
        matrix,
    })
}

/// Pearson correlation of the two upper triangles.
pub fn compare_rdm(r1: &Rdm, r2: &Rdm) -> Result<f64, SimError> {
    if r1.len() != r2.len() {
        return Err(SimError::SizeMismatch(r1.len(), r2.len()));
    }
    if let Some(i) = r1.item_ids.iter().zip(&r2.item_ids).position(|(a, b)| a != b) {
        return Err(SimError::ItemMismatch(i));
    }
    let x = r1.upper_triangle();
    let y = r2.upper_triangle();
    let n = x.len() as f64;
    if x.is_empty() {
        return Err(SimError::ZeroVariance);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SimError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
