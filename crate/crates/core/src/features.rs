//! Per-sample embedding: the fourteen centralities of a node followed by the
//! activation probability of the sample, plus z-score standardization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::centrality::{check_complete, CentralityId, NodeScoreMap};
use crate::diffusion::ThresholdSet;
use crate::error::{Error, Result};
use crate::graph::NodeId;

pub const THRESHOLD_FEATURE: &str = "threshold";
pub const FEATURE_COUNT: usize = 15;

/// Column names in their fixed order.
pub fn feature_names() -> Vec<String> {
    CentralityId::ALL
        .iter()
        .map(|c| c.name().to_owned())
        .chain(std::iter::once(THRESHOLD_FEATURE.to_owned()))
        .collect()
}

/// Row-major sample matrix. Rows are keyed by `(node, threshold)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub keys: Vec<(NodeId, f64)>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, keys: Vec<(NodeId, f64)>, values: Vec<f64>) -> Result<Self> {
        if values.len() != keys.len() * feature_names.len() {
            return Err(Error::Assembly(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                keys.len(),
                feature_names.len()
            )));
        }
        Ok(FeatureMatrix {
            feature_names,
            keys,
            values,
        })
    }

    /// Matrix from rows with synthetic keys `(i, 0.0)`.
    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Assembly(format!("row of width {} for {d} columns", bad.len())));
        }
        let keys = (0..rows.len()).map(|i| (i, 0.0)).collect();
        Self::new(feature_names, keys, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            keys: idx.iter().map(|&i| self.keys[i]).collect(),
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Raw features, node-major: rows `(v, p)` for every node `v` and every
/// threshold `p`, in threshold-set order.
pub fn assemble_features(centralities: &[NodeScoreMap], thresholds: &ThresholdSet) -> Result<FeatureMatrix> {
    check_complete(centralities)?;
    thresholds.validate()?;
    let n = centralities[0].scores.len();
    let mut keys = Vec::with_capacity(n * thresholds.len());
    let mut values = Vec::with_capacity(n * thresholds.len() * FEATURE_COUNT);
    for v in 0..n {
        for &p in &thresholds.values {
            keys.push((v, p));
            values.extend(centralities.iter().map(|m| m.scores[v]));
            values.push(p);
        }
    }
    FeatureMatrix::new(feature_names(), keys, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stds: Vec<f64>,
    /// Columns with zero spread; passed through unchanged.
    pub constant: Vec<bool>,
}

pub fn fit_standardizer(m: &FeatureMatrix) -> Result<Standardizer> {
    if m.n_rows() < 2 {
        return Err(Error::Validation(format!(
            "standardizer needs at least 2 rows, got {}",
            m.n_rows()
        )));
    }
    let d = m.n_cols();
    let cols = crate::par::map_range(d, |j| {
        let col = m.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let constant = col.iter().all(|&x| x == col[0]);
        (mean, var.sqrt(), constant)
    });
    Ok(Standardizer {
        feature_names: m.feature_names.clone(),
        means: cols.iter().map(|c| c.0).collect(),
        stds: cols.iter().map(|c| c.1).collect(),
        constant: cols.iter().map(|c| c.2 || c.1 == 0.0).collect(),
    })
}

impl Standardizer {
    fn check(&self, m: &FeatureMatrix) -> Result<()> {
        if m.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                actual: m.feature_names.clone(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check(m)?;
        let d = m.n_cols();
        let values = m
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let j = i % d;
                if self.constant[j] {
                    x
                } else {
                    (x - self.means[j]) / self.stds[j]
                }
            })
            .collect();
        FeatureMatrix::new(m.feature_names.clone(), m.keys.clone(), values)
    }

    pub fn invert(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check(m)?;
        let d = m.n_cols();
        let values = m
            .values
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let j = i % d;
                if self.constant[j] {
                    z
                } else {
                    z * self.stds[j] + self.means[j]
                }
            })
            .collect();
        FeatureMatrix::new(m.feature_names.clone(), m.keys.clone(), values)
    }
}

pub fn apply_standardizer(m: &FeatureMatrix, scaler: &Standardizer) -> Result<FeatureMatrix> {
    scaler.apply(m)
}

/// CSV with header `node,sample_threshold,<features...>`.
pub fn write_features_csv<W: Write>(m: &FeatureMatrix, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["node".to_owned(), "sample_threshold".to_owned()];
    header.extend(m.feature_names.iter().cloned());
    wtr.write_record(&header)?;
    for (i, (node, p)) in m.keys.iter().enumerate() {
        let mut rec = vec![node.to_string(), p.to_string()];
        rec.extend(m.row(i).iter().map(|x| x.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<features csv>", e))?;
    Ok(())
}

pub fn read_features_csv<R: Read>(r: R) -> Result<FeatureMatrix> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "node" || &header[1] != "sample_threshold" {
        return Err(Error::Assembly(format!("unexpected feature header {header:?}")));
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        };
        let node = rec[0].parse::<usize>().map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        keys.push((node, parse(&rec[1])?));
        for s in rec.iter().skip(2) {
            values.push(parse(s)?);
        }
    }
    FeatureMatrix::new(names, keys, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::compute_all_centralities;
    use crate::graph::Graph;

    fn small_features() -> FeatureMatrix {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], true).unwrap();
        let c = compute_all_centralities(&g).unwrap();
        assemble_features(&c, &ThresholdSet::citation()).unwrap()
    }

    #[test]
    fn shape_and_threshold_column() {
        let m = small_features();
        assert_eq!(m.n_rows(), 12);
        assert_eq!(m.n_cols(), 15);
        assert_eq!(m.feature_names.last().unwrap(), "threshold");
        for v in 0..4 {
            let rows: Vec<&[f64]> = (0..3).map(|t| m.row(v * 3 + t)).collect();
            for t in 1..3 {
                assert_eq!(rows[0][..14], rows[t][..14]);
            }
            assert_eq!(rows.iter().map(|r| r[14]).collect::<Vec<_>>(), vec![0.2, 0.3, 0.4]);
        }
    }

    #[test]
    fn missing_measure_is_named() {
        let g = Graph::from_edges(3, [(0, 1)], true).unwrap();
        let mut c = compute_all_centralities(&g).unwrap();
        c.remove(CentralityId::Pagerank.index());
        let err = assemble_features(&c, &ThresholdSet::social()).unwrap_err();
        assert!(err.to_string().contains("pagerank"));
    }

    #[test]
    fn standardize_hand_example() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]],
        )
        .unwrap();
        let s = fit_standardizer(&m).unwrap();
        assert_eq!(s.constant, vec![false, true]);
        let z = s.apply(&m).unwrap();
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((z.row(0)[0] + expect).abs() < 1e-12);
        assert_eq!(z.row(1)[0], 0.0);
        assert!((z.row(2)[0] - 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(z.column(1), vec![5.0; 3]);
    }

    #[test]
    fn standardized_columns_have_unit_scale() {
        let m = small_features();
        let s = fit_standardizer(&m).unwrap();
        let z = s.apply(&m).unwrap();
        for j in 0..z.n_cols() {
            if s.constant[j] {
                continue;
            }
            let col = z.column(j);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        let back = s.invert(&z).unwrap();
        for (a, b) in back.values().iter().zip(m.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_needs_two_rows_and_matching_names() {
        let one = FeatureMatrix::from_rows(vec!["a".into()], &[vec![1.0]]).unwrap();
        assert!(fit_standardizer(&one).is_err());
        let m = small_features();
        let s = fit_standardizer(&m).unwrap();
        let other = FeatureMatrix::from_rows(vec!["a".into()], &[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(s.apply(&other), Err(Error::FeatureMismatch { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let m = small_features();
        let mut buf = Vec::new();
        write_features_csv(&m, &mut buf).unwrap();
        assert_eq!(read_features_csv(buf.as_slice()).unwrap(), m);
    }
}
