//! Dataset representation, the bounded-entry check, vertical partitioning
//! across parties, min-max normalization and train/test splitting.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// An `n × (d + 1)` real matrix whose last column is the regression label.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        if values.ncols() < 2 {
            return Err(Error::Dimension(
                "a data matrix needs at least one feature and a label".into(),
            ));
        }
        if column_names.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                column_names.len(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Domain(format!("non-finite entry at (row {r}, col {c})")));
        }
        Ok(DataMatrix {
            values,
            column_names,
        })
    }

    /// Columns named `x1..xd` followed by `y`.
    pub fn with_default_names(values: DMatrix<f64>) -> Result<Self> {
        let d = values.ncols().saturating_sub(1);
        let mut names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        names.push("y".into());
        Self::new(values, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of features (the label column excluded).
    pub fn d(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn features(&self) -> DMatrix<f64> {
        self.values.columns(0, self.d()).into_owned()
    }

    pub fn labels(&self) -> DVector<f64> {
        self.values.column(self.d()).into_owned()
    }

    fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        DataMatrix {
            values: self.values.select_rows(rows),
            column_names: self.column_names.clone(),
        }
    }
}

/// Entries violating `|x| ≤ 1`, as `(row, column)` pairs in column-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsViolation {
    pub entries: Vec<(usize, usize)>,
}

impl From<BoundsViolation> for Error {
    fn from(v: BoundsViolation) -> Self {
        let (row, col) = v.entries[0];
        Error::Unbounded {
            count: v.entries.len(),
            row,
            col,
        }
    }
}

/// Check that every entry is bounded by 1 in absolute value (inclusive).
pub fn validate_bounds(data: &DataMatrix) -> std::result::Result<(), BoundsViolation> {
    let v = &data.values;
    let mut entries = Vec::new();
    for c in 0..v.ncols() {
        for r in 0..v.nrows() {
            if v[(r, c)].abs() > 1.0 {
                entries.push((r, c));
            }
        }
    }
    if entries.is_empty() {
        Ok(())
    } else {
        Err(BoundsViolation { entries })
    }
}

/// Assignment of contiguous column ranges of `[X, Y]` to `m ≥ 2` parties.
/// The label column belongs to the last party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyPartition {
    blocks: Vec<Range<usize>>,
}

impl PartyPartition {
    /// Build a partition from block widths, in column order.
    pub fn from_widths(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 parties, got {}",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Domain("every party must own at least one column".into()));
        }
        let mut start = 0;
        let blocks = widths
            .iter()
            .map(|w| {
                let r = start..start + w;
                start += w;
                r
            })
            .collect();
        Ok(PartyPartition { blocks })
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn d_max(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    /// Total number of columns covered, `d + 1`.
    pub fn total_columns(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    pub(crate) fn check_covers(&self, data: &DataMatrix) -> Result<()> {
        if self.total_columns() != data.values.ncols() {
            return Err(Error::Dimension(format!(
                "partition covers {} columns but data has {}",
                self.total_columns(),
                data.values.ncols()
            )));
        }
        Ok(())
    }
}

/// Split `d_plus_1` columns over `m` parties; widths differ by at most one and
/// earlier parties take the remainder.
pub fn partition_evenly(d_plus_1: usize, m: usize) -> Result<PartyPartition> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 parties, got {m}")));
    }
    if m > d_plus_1 {
        return Err(Error::Domain(format!(
            "{m} parties cannot share {d_plus_1} columns without an empty party"
        )));
    }
    let base = d_plus_1 / m;
    let extra = d_plus_1 % m;
    let widths: Vec<usize> = (0..m).map(|j| base + usize::from(j < extra)).collect();
    PartyPartition::from_widths(&widths)
}

/// The `n × d_j` block owned by party `j` (1-based).
pub fn slice_party(data: &DataMatrix, partition: &PartyPartition, j: usize) -> Result<DMatrix<f64>> {
    partition.check_covers(data)?;
    if j == 0 || j > partition.m() {
        return Err(Error::Index {
            index: j,
            len: partition.m(),
        });
    }
    let b = &partition.blocks[j - 1];
    Ok(data.values.columns(b.start, b.len()).into_owned())
}

/// A normalized train/test pair and the training-set statistics behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: DataMatrix,
    pub test: DataMatrix,
    /// Per-column `(min, max)` of the raw training data.
    pub normalization_stats: Vec<(f64, f64)>,
}

/// Map every column to `[0, 1]` with `(x - min) / (max - min)` using training
/// statistics. Test values are clamped into `[0, 1]`; constant training
/// columns map to 0.5 in both sets.
pub fn normalize_minmax(train: &DataMatrix, test: &DataMatrix) -> Result<SplitDataset> {
    let cols = train.values.ncols();
    if test.values.ncols() != cols {
        return Err(Error::Dimension(format!(
            "train has {} columns, test has {}",
            cols,
            test.values.ncols()
        )));
    }
    if train.n() == 0 {
        return Err(Error::Empty("training set"));
    }
    let stats: Vec<(f64, f64)> = train
        .values
        .column_iter()
        .map(|c| (c.min(), c.max()))
        .collect();

    let map = |m: &DMatrix<f64>, clamp: bool| {
        let mut out = m.clone();
        for (c, &(lo, hi)) in stats.iter().enumerate() {
            let span = hi - lo;
            for x in out.column_mut(c).iter_mut() {
                *x = if span > 0.0 {
                    let v = (*x - lo) / span;
                    if clamp {
                        v.clamp(0.0, 1.0)
                    } else {
                        v
                    }
                } else {
                    0.5
                };
            }
        }
        out
    };

    Ok(SplitDataset {
        train: DataMatrix {
            values: map(&train.values, false),
            column_names: train.column_names.clone(),
        },
        test: DataMatrix {
            values: map(&test.values, true),
            column_names: test.column_names.clone(),
        },
        normalization_stats: stats,
    })
}

/// Training rows for an `n`-row dataset under the 4:1 split.
pub fn train_size(n: usize) -> usize {
    (0.8 * n as f64).round() as usize
}

/// Uniformly random 4:1 row split. Each part keeps the original row order.
pub fn split_train_test<R: Rng + ?Sized>(data: &DataMatrix, rng: &mut R) -> Result<(DataMatrix, DataMatrix)> {
    let n = data.n();
    if n < 5 {
        return Err(Error::Domain(format!("need at least 5 rows to split, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_train = train_size(n);
    let (tr, te) = idx.split_at_mut(n_train);
    tr.sort_unstable();
    te.sort_unstable();
    Ok((data.select_rows(tr), data.select_rows(te)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn dm(rows: usize, cols: usize, v: &[f64]) -> DataMatrix {
        DataMatrix::with_default_names(DMatrix::from_row_slice(rows, cols, v)).unwrap()
    }

    #[test]
    fn bounds_check() {
        assert!(validate_bounds(&dm(3, 3, &[0.0; 9])).is_ok());
        let mut v = [0.0; 9];
        v[2] = 1.5;
        let err = validate_bounds(&dm(3, 3, &v)).unwrap_err();
        assert_eq!(err.entries, vec![(0, 2)]);
        assert!(validate_bounds(&dm(2, 2, &[1.0, -1.0, -1.0, 1.0])).is_ok());
    }

    #[test]
    fn rejects_non_finite_and_bad_names() {
        let v = DMatrix::from_row_slice(1, 2, &[f64::NAN, 0.0]);
        assert!(DataMatrix::with_default_names(v).is_err());
        let v = DMatrix::zeros(2, 2);
        assert!(DataMatrix::new(v, vec!["a".into()]).is_err());
        assert!(DataMatrix::with_default_names(DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn even_partitions() {
        assert_eq!(partition_evenly(11, 6).unwrap().widths(), vec![2, 2, 2, 2, 2, 1]);
        assert_eq!(partition_evenly(10, 5).unwrap().widths(), vec![2; 5]);
        assert!(matches!(partition_evenly(10, 11), Err(Error::Domain(_))));
        assert!(matches!(partition_evenly(10, 1), Err(Error::Domain(_))));
        let p = partition_evenly(11, 6).unwrap();
        assert_eq!(p.d_max(), 2);
        assert_eq!(p.m(), 6);
    }

    #[test]
    fn party_slices() {
        let d = dm(3, 4, &(0..12).map(f64::from).collect::<Vec<_>>());
        let p = partition_evenly(4, 2).unwrap();
        let first = slice_party(&d, &p, 1).unwrap();
        assert_eq!(first, d.values().columns(0, 2).into_owned());
        assert!(matches!(slice_party(&d, &p, 3), Err(Error::Index { index: 3, len: 2 })));
        assert!(matches!(slice_party(&d, &p, 0), Err(Error::Index { .. })));
        let wrong = partition_evenly(5, 2).unwrap();
        assert!(matches!(slice_party(&d, &wrong, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn minmax_examples() {
        let train = dm(3, 2, &[0.0, 7.0, 5.0, 7.0, 10.0, 7.0]);
        let test = dm(1, 2, &[12.0, 3.0]);
        let s = normalize_minmax(&train, &test).unwrap();
        assert_eq!(s.train.values().column(0).as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.train.values().column(1).as_slice(), &[0.5, 0.5, 0.5]);
        assert_eq!(s.test.values()[(0, 0)], 1.0);
        assert_eq!(s.test.values()[(0, 1)], 0.5);
        assert_eq!(s.normalization_stats, vec![(0.0, 10.0), (7.0, 7.0)]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = dm(10, 2, &(0..20).map(f64::from).collect::<Vec<_>>());
        let (tr, te) = split_train_test(&d, &mut rng::stream(3)).unwrap();
        assert_eq!((tr.n(), te.n()), (8, 2));
        let (tr2, te2) = split_train_test(&d, &mut rng::stream(3)).unwrap();
        assert_eq!((tr, te), (tr2, te2));
        assert_eq!(train_size(1070), 856);
        assert_eq!(1070 - train_size(1070), 214);
        let small = dm(4, 2, &[0.0; 8]);
        assert!(matches!(split_train_test(&small, &mut rng::stream(3)), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn partition_reassembles(d_plus_1 in 2usize..40, m_frac in 0.0f64..1.0, rows in 1usize..5) {
            let m = 2 + ((d_plus_1 - 2) as f64 * m_frac) as usize;
            let p = partition_evenly(d_plus_1, m).unwrap();
            let w = p.widths();
            prop_assert_eq!(w.iter().sum::<usize>(), d_plus_1);
            prop_assert!(w.iter().max().unwrap() - w.iter().min().unwrap() <= 1);
            prop_assert_eq!(p.d_max(), *w.iter().max().unwrap());
            let data = DataMatrix::with_default_names(DMatrix::from_fn(rows, d_plus_1, |i, j| (i * 31 + j) as f64)).unwrap();
            let parts: Vec<DMatrix<f64>> = (1..=m).map(|j| slice_party(&data, &p, j).unwrap()).collect();
            let mut joined = DMatrix::zeros(rows, 0);
            for part in parts {
                let c = joined.ncols();
                joined = joined.insert_columns(c, part.ncols(), 0.0);
                joined.columns_mut(c, part.ncols()).copy_from(&part);
            }
            prop_assert_eq!(&joined, data.values());
        }

        #[test]
        fn normalization_is_idempotent_and_bounded(
            vals in proptest::collection::vec(-1e3f64..1e3, 30),
            test_vals in proptest::collection::vec(-2e3f64..2e3, 6),
        ) {
            let train = dm(10, 3, &vals);
            let test = dm(2, 3, &test_vals);
            let once = normalize_minmax(&train, &test).unwrap();
            prop_assert!(validate_bounds(&once.train).is_ok());
            prop_assert!(validate_bounds(&once.test).is_ok());
            prop_assert!(once.train.values().iter().all(|x| (0.0..=1.0).contains(x)));
            let twice = normalize_minmax(&once.train, &once.test).unwrap();
            prop_assert!((twice.train.values() - once.train.values()).amax() <= 1e-12);
        }

        #[test]
        fn split_is_a_partition(n in 5usize..200, seed in any::<u64>()) {
            let d = DataMatrix::with_default_names(DMatrix::from_fn(n, 2, |i, j| (2 * i + j) as f64)).unwrap();
            let (tr, te) = split_train_test(&d, &mut rng::stream(seed)).unwrap();
            prop_assert_eq!(tr.n(), train_size(n));
            let mut rows: Vec<i64> = tr.values().column(0).iter().chain(te.values().column(0).iter()).map(|x| *x as i64).collect();
            rows.sort_unstable();
            prop_assert_eq!(rows, (0..n as i64).map(|i| 2 * i).collect::<Vec<_>>());
        }
    }
}
