//! Validated multichannel time-series input.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// A length-T, n-channel time series: rows are time points, columns are
/// channels. Construction validates that every value is finite and every
/// row has the same width, so downstream numerics never re-check.
#[derive(Clone, Debug)]
pub struct TimeSeriesMatrix {
    data: Mat,
    columns: Vec<String>,
}

impl TimeSeriesMatrix {
    /// Builds a series from row-major data. `columns` supplies channel
    /// names; `None` generates `c1..cn`.
    pub fn from_rows(rows: Vec<Vec<f64>>, columns: Option<Vec<String>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        let data = Mat::from_rows(rows)?;
        Self::from_mat(data, columns)
    }

    pub fn from_mat(data: Mat, columns: Option<Vec<String>>) -> Result<Self> {
        if data.cols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "time series needs at least one column".into(),
            });
        }
        if !data.is_finite() {
            return Err(Error::NonFinite {
                location: "time series data".into(),
            });
        }
        let columns = match columns {
            Some(names) => {
                if names.len() != data.cols() {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "{} column names for {} columns",
                            names.len(),
                            data.cols()
                        ),
                    });
                }
                names
            }
            None => (1..=data.cols()).map(|i| format!("c{i}")).collect(),
        };
        Ok(TimeSeriesMatrix { data, columns })
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    /// Number of channels.
    pub fn n_channels(&self) -> usize {
        self.data.cols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    /// Copy of channel `c` as a contiguous series.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.column(c)
    }
}
