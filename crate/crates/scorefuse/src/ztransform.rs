//! Empirical z-transform: per-score empirical cdfs fitted on inlier training
//! data, mapped through the standard normal quantile.
//!
//! For a fitted column with n training scores, a test score s maps to
//! `Φ⁻¹(clamp(F̂(s), 1/(n+1), n/(n+1)))` where `F̂(s)` is the fraction of
//! training scores ≤ s. The clamp keeps z finite when a test score falls
//! outside the training range (raw `F̂` would be 0 or 1 there), using the
//! same `n+1` denominator as the conformal p-value, and never moves an
//! interior quantile: for `F̂ ∈ [1/n, (n-1)/n]` the clamp is inactive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{std_normal_quantile, Probability};

/// Per-row tag on a score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Inlier,
    Ood,
    Unknown,
}

/// An n x m matrix of raw inlier scores with named columns.
///
/// All values are finite and column names are unique; both are enforced at
/// construction. Rows are samples, columns are score sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    column_names: Vec<String>,
    /// Row-major storage, `nrows * column_names.len()` entries.
    values: Vec<f64>,
    nrows: usize,
    labels: Option<Vec<Label>>,
}

impl ScoreMatrix {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_labels(column_names, rows, None)
    }

    pub fn with_labels(
        column_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let m = column_names.len();
        if m == 0 {
            return Err(Error::EmptyInput("score matrix needs at least one column"));
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column name `{name}`"
                )));
            }
        }
        if let Some(ref l) = labels {
            if l.len() != rows.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {} rows",
                    l.len(),
                    rows.len()
                )));
            }
        }
        let mut values = Vec::with_capacity(rows.len() * m);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "row {r} has {} values, expected {m}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: r,
                        column: column_names[c].clone(),
                    });
                }
                values.push(v);
            }
        }
        Ok(Self {
            column_names,
            values,
            nrows: rows.len(),
            labels,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.ncols();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.ncols())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Copy of one column.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows().map(|r| r[index]).collect()
    }
}

/// An n x m matrix of z-values (finite by construction of the transform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZMatrix {
    column_names: Vec<String>,
    values: Vec<f64>,
    nrows: usize,
}

impl ZMatrix {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let inner = ScoreMatrix::new(column_names, rows)?;
        Ok(Self {
            column_names: inner.column_names,
            values: inner.values,
            nrows: inner.nrows,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.ncols();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.ncols())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SortedColumn {
    name: String,
    /// Nondecreasing copy of the training scores; duplicates kept.
    sorted: Vec<f64>,
}

/// A fitted per-column empirical-cdf → standard-normal-quantile map.
///
/// Immutable after [`fit`](ZTransform::fit); transforming is safe to run
/// concurrently from many threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTransform {
    columns: Vec<SortedColumn>,
    n: usize,
}

impl ZTransform {
    /// Fit on inlier training scores. Needs at least two rows; the result is
    /// independent of the row order of the input.
    pub fn fit(train: &ScoreMatrix) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::TooFewSamples {
                need: 2,
                got: train.nrows(),
            });
        }
        let columns = train
            .column_names()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let mut sorted = train.column(j);
                sorted.sort_unstable_by(f64::total_cmp);
                SortedColumn {
                    name: name.clone(),
                    sorted,
                }
            })
            .collect();
        Ok(Self {
            columns,
            n: train.nrows(),
        })
    }

    /// Number of training samples.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Clamp bounds `(1/(n+1), n/(n+1))` applied before the normal quantile.
    pub fn q_bounds(&self) -> (f64, f64) {
        let n = self.n as f64;
        (1.0 / (n + 1.0), n / (n + 1.0))
    }

    fn column(&self, name: &str) -> Result<&SortedColumn> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn check_finite(s: f64) -> Result<f64> {
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::InvalidArgument(format!(
                "score must be finite, got {s}"
            )))
        }
    }

    fn ecdf_on(sorted: &[f64], s: f64) -> f64 {
        // #{training scores <= s} via binary search; right-continuous.
        let count = sorted.partition_point(|&v| v <= s);
        count as f64 / sorted.len() as f64
    }

    /// Empirical cdf `F̂(s)` of one column: the fraction of training scores
    /// ≤ s (ties count).
    pub fn empirical_cdf(&self, col: &str, s: f64) -> Result<Probability> {
        let column = self.column(col)?;
        Self::check_finite(s)?;
        Probability::new(Self::ecdf_on(&column.sorted, s))
    }

    /// Clamped inlier p-value `clamp(F̂(s), 1/(n+1), n/(n+1))`, strictly
    /// inside (0, 1) so that downstream logs and quantiles stay finite.
    pub fn p_value(&self, col: &str, s: f64) -> Result<Probability> {
        let column = self.column(col)?;
        Self::check_finite(s)?;
        let (lo, hi) = self.q_bounds();
        Probability::new(Self::ecdf_on(&column.sorted, s).clamp(lo, hi))
    }

    /// Empirical z-value `Φ⁻¹(clamp(F̂(s), 1/(n+1), n/(n+1)))`; monotone
    /// nondecreasing in s and always finite.
    pub fn z_value(&self, col: &str, s: f64) -> Result<f64> {
        std_normal_quantile(self.p_value(col, s)?)
    }

    fn z_from_sorted(&self, sorted: &[f64], s: f64) -> Result<f64> {
        let (lo, hi) = self.q_bounds();
        std_normal_quantile(Probability::new(Self::ecdf_on(sorted, s).clamp(lo, hi))?)
    }

    /// Transform a whole test matrix; rows keep their order, columns come
    /// out in the transform's column order. The test matrix must have
    /// exactly the fitted columns (any order).
    pub fn transform_matrix(&self, test: &ScoreMatrix) -> Result<ZMatrix> {
        let index = self.resolve_columns(test)?;
        let mut rows = Vec::with_capacity(test.nrows());
        for raw in test.rows() {
            let mut z = Vec::with_capacity(self.columns.len());
            for (col, &src) in self.columns.iter().zip(&index) {
                z.push(self.z_from_sorted(&col.sorted, raw[src])?);
            }
            rows.push(z);
        }
        if rows.is_empty() {
            // ZMatrix::new would work, but keep the column names.
            return Ok(ZMatrix {
                column_names: self.column_names(),
                values: Vec::new(),
                nrows: 0,
            });
        }
        ZMatrix::new(self.column_names(), rows)
    }

    /// Clamped p-values for a whole test matrix (same layout rules as
    /// [`transform_matrix`]). Used by the p-value combiners.
    pub fn p_matrix(&self, test: &ScoreMatrix) -> Result<Vec<Vec<f64>>> {
        let index = self.resolve_columns(test)?;
        let (lo, hi) = self.q_bounds();
        Ok(test
            .rows()
            .map(|raw| {
                self.columns
                    .iter()
                    .zip(&index)
                    .map(|(col, &src)| Self::ecdf_on(&col.sorted, raw[src]).clamp(lo, hi))
                    .collect()
            })
            .collect())
    }

    /// Map each fitted column to its index in `test`, or report the schema
    /// difference.
    fn resolve_columns(&self, test: &ScoreMatrix) -> Result<Vec<usize>> {
        let missing: Vec<String> = self
            .columns
            .iter()
            .filter(|c| !test.column_names().contains(&c.name))
            .map(|c| c.name.clone())
            .collect();
        let extra: Vec<String> = test
            .column_names()
            .iter()
            .filter(|name| self.columns.iter().all(|c| &c.name != *name))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::SchemaMismatch { missing, extra });
        }
        self.columns
            .iter()
            .map(|c| test.column_index(&c.name))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(values: &[f64]) -> ScoreMatrix {
        ScoreMatrix::new(
            vec!["s".into()],
            values.iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn fit_sorts_and_sets_bounds() {
        let t = ZTransform::fit(&matrix(&[2.0, 3.0, 1.0])).unwrap();
        assert_eq!(t.columns[0].sorted, vec![1.0, 2.0, 3.0]);
        let (lo, hi) = t.q_bounds();
        assert_eq!(lo, 0.25);
        assert_eq!(hi, 0.75);
    }

    #[test]
    fn fit_is_row_order_invariant() {
        let a = ZTransform::fit(&matrix(&[1.0, 2.0, 3.0])).unwrap();
        let b = ZTransform::fit(&matrix(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_rejects_non_finite_with_location() {
        let m = ScoreMatrix::new(vec!["a".into()], vec![vec![1.0], vec![f64::NAN]]);
        match m {
            Err(Error::NonFinite { row, column }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "a");
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn fit_rejects_tiny_training_sets() {
        assert!(matches!(
            ZTransform::fit(&matrix(&[1.0])),
            Err(Error::TooFewSamples { need: 2, got: 1 })
        ));
    }

    #[test]
    fn ecdf_counts_ties_as_leq() {
        let t = ZTransform::fit(&matrix(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(t.empirical_cdf("s", 2.0).unwrap().get(), 2.0 / 3.0);
        assert_eq!(t.empirical_cdf("s", 0.5).unwrap().get(), 0.0);
        assert_eq!(t.empirical_cdf("s", 3.0).unwrap().get(), 1.0);
    }

    #[test]
    fn ecdf_unknown_column() {
        let t = ZTransform::fit(&matrix(&[1.0, 2.0, 3.0])).unwrap();
        assert!(matches!(
            t.empirical_cdf("nope", 1.0),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn z_value_interior_and_clamped() {
        let t = ZTransform::fit(&matrix(&[1.0, 2.0, 3.0])).unwrap();
        // Phi^-1(2/3), Phi^-1(0.25) and Phi^-1(0.75): high-precision values.
        let z = t.z_value("s", 2.0).unwrap();
        assert!((z - 0.430_727_299_295_457_5).abs() < 1e-10);
        let z = t.z_value("s", 0.5).unwrap();
        assert!((z - (-0.674_489_750_196_081_7)).abs() < 1e-10);
        let z = t.z_value("s", 10.0).unwrap();
        assert!((z - 0.674_489_750_196_081_7).abs() < 1e-10);
    }

    #[test]
    fn z_value_is_monotone() {
        let t = ZTransform::fit(&matrix(&[0.3, -1.0, 2.5, 2.5, 7.0])).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in -40..=40 {
            let z = t.z_value("s", i as f64 * 0.25).unwrap();
            assert!(z >= prev);
            assert!(z.is_finite());
            prev = z;
        }
    }

    #[test]
    fn self_transform_hits_quantile_grid() {
        let train = matrix(&[1.0, 2.0, 3.0, 4.0]);
        let t = ZTransform::fit(&train).unwrap();
        let z = t.transform_matrix(&train).unwrap();
        let (lo, hi) = t.q_bounds();
        for (i, row) in z.rows().enumerate() {
            let q = ((i + 1) as f64 / 4.0).clamp(lo, hi);
            let want = std_normal_quantile(Probability::new(q).unwrap()).unwrap();
            assert!((row[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_test_matrix_gives_empty_output() {
        let t = ZTransform::fit(&matrix(&[1.0, 2.0, 3.0])).unwrap();
        let empty = ScoreMatrix::new(vec!["s".into()], vec![]).unwrap();
        let z = t.transform_matrix(&empty).unwrap();
        assert_eq!(z.nrows(), 0);
        assert_eq!(z.column_names(), t.column_names().as_slice());
    }

    #[test]
    fn single_row_matches_scalar_calls() {
        let train = ScoreMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]],
        )
        .unwrap();
        let t = ZTransform::fit(&train).unwrap();
        let test = ScoreMatrix::new(vec!["a".into(), "b".into()], vec![vec![2.5, 15.0]]).unwrap();
        let z = t.transform_matrix(&test).unwrap();
        assert_eq!(z.row(0)[0], t.z_value("a", 2.5).unwrap());
        assert_eq!(z.row(0)[1], t.z_value("b", 15.0).unwrap());
    }

    #[test]
    fn transform_respects_column_names_not_order() {
        let train = ScoreMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]],
        )
        .unwrap();
        let t = ZTransform::fit(&train).unwrap();
        let swapped =
            ScoreMatrix::new(vec!["b".into(), "a".into()], vec![vec![15.0, 2.5]]).unwrap();
        let z = t.transform_matrix(&swapped).unwrap();
        assert_eq!(z.column_names(), ["a".to_string(), "b".to_string()]);
        assert_eq!(z.row(0)[0], t.z_value("a", 2.5).unwrap());
    }

    #[test]
    fn schema_mismatch_lists_columns() {
        let train = ScoreMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 10.0], vec![2.0, 20.0]],
        )
        .unwrap();
        let t = ZTransform::fit(&train).unwrap();
        let test = ScoreMatrix::new(vec!["a".into(), "c".into()], vec![vec![1.0, 2.0]]).unwrap();
        match t.transform_matrix(&test) {
            Err(Error::SchemaMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["b".to_string()]);
                assert_eq!(extra, vec!["c".to_string()]);
            }
            other => panic!("expected SchemaMismatch, got {other:?}"),
        }
    }

    #[test]
    fn self_transform_is_near_uniform_after_phi() {
        // Phi(z) of the training column itself sits on the quantile grid, so
        // its empirical distribution is within KS distance 2/sqrt(n) of
        // uniform.
        let n = 100;
        let values: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 * 0.83).collect();
        let train = matrix(&values);
        let t = ZTransform::fit(&train).unwrap();
        let mut u: Vec<f64> = values
            .iter()
            .map(|&s| t.p_value("s", s).unwrap().get())
            .collect();
        u.sort_unstable_by(f64::total_cmp);
        let mut d = 0.0_f64;
        for (i, &x) in u.iter().enumerate() {
            d = d.max(((i + 1) as f64 / n as f64 - x).abs());
            d = d.max((x - i as f64 / n as f64).abs());
        }
        assert!(d <= 2.0 / (n as f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn interior_quantiles_unaffected_by_clamp() {
        // For F in [1/n, (n-1)/n] the clamp to [1/(n+1), n/(n+1)] is inactive.
        let train = matrix(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let t = ZTransform::fit(&train).unwrap();
        for s in [1.0, 2.0, 3.0, 4.0] {
            let f = t.empirical_cdf("s", s).unwrap().get();
            let clamped = t.p_value("s", s).unwrap().get();
            assert_eq!(f, clamped);
        }
    }
}
