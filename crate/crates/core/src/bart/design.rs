use std::sync::Arc;

use crate::error::{Error, Result};

/// Candidate split values per covariate. A split at cut `j` of covariate `v`
/// sends `x[v] <= cuts[v][j]` to the left child.
#[derive(Debug, Clone, PartialEq)]
pub struct CutpointGrid {
    cuts: Vec<Vec<f64>>,
}

impl CutpointGrid {
    /// Up to `max_cuts` evenly spaced order statistics of each column, with
    /// duplicates and the column maximum removed (a cut at the maximum would
    /// leave the right child empty).
    pub fn from_rows(values: &[f64], n_cols: usize, max_cuts: usize) -> Self {
        let n_rows = if n_cols == 0 { 0 } else { values.len() / n_cols };
        let mut cuts = Vec::with_capacity(n_cols);
        for v in 0..n_cols {
            let mut col: Vec<f64> = (0..n_rows)
                .map(|i| values[i * n_cols + v])
                .filter(|x| !x.is_nan())
                .collect();
            col.sort_by(f64::total_cmp);
            col.dedup();
            let mut c = Vec::new();
            if col.len() > 1 {
                let max = *col.last().unwrap();
                let distinct = col.len();
                if distinct - 1 <= max_cuts {
                    c.extend_from_slice(&col[..distinct - 1]);
                } else {
                    for k in 1..=max_cuts {
                        let pos = ((k as f64 / (max_cuts + 1) as f64) * (distinct - 1) as f64).round()
                            as usize;
                        let val = col[pos.min(distinct - 1)];
                        if val < max {
                            c.push(val);
                        }
                    }
                    c.dedup();
                }
            }
            cuts.push(c);
        }
        Self { cuts }
    }

    pub fn n_vars(&self) -> usize {
        self.cuts.len()
    }

    pub fn n_cuts(&self, var: usize) -> usize {
        self.cuts[var].len()
    }

    pub fn value(&self, var: usize, cut: u16) -> f64 {
        self.cuts[var][cut as usize]
    }

    /// Number of cutpoints strictly below `x`; `x <= cut_j` iff `bin <= j`.
    pub fn bin(&self, var: usize, x: f64) -> u16 {
        self.cuts[var].partition_point(|&c| c < x) as u16
    }
}

/// Row-major covariate matrix together with its pre-binned copy.
#[derive(Debug, Clone)]
pub struct Design {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    bins: Vec<u16>,
    grid: Arc<CutpointGrid>,
}

impl Design {
    pub fn new(values: Vec<f64>, n_cols: usize, grid: Arc<CutpointGrid>) -> Result<Self> {
        if n_cols == 0 || values.len() % n_cols != 0 {
            return Err(Error::Dimension {
                expected: n_cols,
                got: values.len(),
            });
        }
        if grid.n_vars() != n_cols {
            return Err(Error::Dimension {
                expected: n_cols,
                got: grid.n_vars(),
            });
        }
        let n_rows = values.len() / n_cols;
        let bins = values
            .iter()
            .enumerate()
            .map(|(k, &x)| grid.bin(k % n_cols, x))
            .collect();
        Ok(Self {
            n_rows,
            n_cols,
            values,
            bins,
            grid,
        })
    }

    /// Builds the grid from the rows themselves.
    pub fn from_rows(rows: &[Vec<f64>], max_cuts: usize) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::Dimension {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        let grid = Arc::new(CutpointGrid::from_rows(&values, n_cols, max_cuts));
        Self::new(values, n_cols, grid)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn bins(&self, i: usize) -> &[u16] {
        &self.bins[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn grid(&self) -> &Arc<CutpointGrid> {
        &self.grid
    }
}
