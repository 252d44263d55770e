//! Domain types shared across the crate: the regression instance, selected
//! models and their polyhedral selection events, contrasts, and the master
//! statistic `(X^T X / n, X^T y / sqrt(n))`.

use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A fixed design `x` (n × d) together with a response `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least 1 predictor".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        if let Some(j) = (0..d).find(|&j| x.column(j).iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidDataset(format!("column {j} is identically zero")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Same design with a different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite response".into()));
        }
        Ok(Self {
            x: self.x.clone(),
            y,
        })
    }

    /// Rescales every predictor column to unit Euclidean norm.
    pub fn normalize_columns(&mut self) {
        for mut col in self.x.column_iter_mut() {
            let norm = col.norm();
            col /= norm;
        }
    }

    /// Reads a dataset from CSV. The response column is picked by header name
    /// or zero-based index; every other column is a predictor.
    pub fn from_csv<R: Read>(reader: R, response: &ResponseColumn, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers: Option<Vec<String>> = if has_header {
            Some(rdr.headers()?.iter().map(str::to_owned).collect())
        } else {
            None
        };

        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(col, field)| {
                    field.parse::<f64>().map_err(|_| {
                        Error::InvalidDataset(format!(
                            "record {}: column {col}: cannot parse {field:?} as a number",
                            line + 1
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let width = match (&headers, rows.first()) {
            (Some(h), _) => h.len(),
            (None, Some(r)) => r.len(),
            (None, None) => return Err(Error::InvalidDataset("empty file".into())),
        };

        let target = match response {
            ResponseColumn::Index(i) if *i < width => *i,
            ResponseColumn::Index(i) => {
                return Err(Error::InvalidDataset(format!(
                    "response column index {i} out of range ({width} columns)"
                )))
            }
            ResponseColumn::Name(name) => headers
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| {
                    Error::InvalidDataset(format!("response column {name:?} not found"))
                })?,
        };
        if width < 2 {
            return Err(Error::InvalidDataset("need a response and at least one predictor".into()));
        }

        let n = rows.len();
        let mut x = DMatrix::zeros(n, width - 1);
        let mut y = DVector::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let mut j = 0;
            for (col, &value) in row.iter().enumerate() {
                if col == target {
                    y[i] = value;
                } else {
                    x[(i, j)] = value;
                    j += 1;
                }
            }
        }
        Self::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_owned()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    /// Sign of `v`, with zero mapped to `Pos`.
    pub fn of(v: f64) -> Self {
        if v < 0.0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Pos => "+",
            Sign::Neg => "-",
        })
    }
}

/// One step of a sequential path.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// Active variables in order of entry.
    pub active: Vec<usize>,
    /// Sign of each active least-squares coefficient, aligned with `active`.
    pub signs: Vec<Sign>,
    /// Variable that entered at this step.
    pub entered: usize,
    /// Sign attached to the entering variable by the path's own criterion.
    pub entry_sign: Sign,
    /// Entry criterion value: the normalized score for FS, the knot for LAR.
    pub knot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedModel {
    pub steps: Vec<Step>,
}

impl SelectedModel {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&Step> {
        self.steps.last()
    }

    /// Active sets and signs only, ignoring floating-point knot values.
    pub fn same_decisions(&self, other: &SelectedModel) -> bool {
        self.steps.len() == other.steps.len()
            && self
                .steps
                .iter()
                .zip(&other.steps)
                .all(|(a, b)| a.active == b.active && a.signs == b.signs && a.entry_sign == b.entry_sign)
    }
}

/// A selected model and the polyhedral cone `{y : Q y >= 0}` of responses
/// that reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionEvent {
    pub model: SelectedModel,
    q: DMatrix<f64>,
    step_ends: Vec<usize>,
}

impl SelectionEvent {
    pub(crate) fn from_rows(model: SelectedModel, rows: Vec<DVector<f64>>, step_ends: Vec<usize>, n: usize) -> Self {
        let mut q = DMatrix::zeros(rows.len(), n);
        for (i, row) in rows.iter().enumerate() {
            q.row_mut(i).copy_from(&row.transpose());
        }
        Self { model, q, step_ends }
    }

    /// Builds an event from an explicit constraint matrix.
    pub fn from_matrix(model: SelectedModel, q: DMatrix<f64>) -> Self {
        let rows = q.nrows();
        let mut step_ends = vec![rows; model.len().max(1)];
        if model.is_empty() {
            step_ends.clear();
            step_ends.push(rows);
        }
        Self { model, q, step_ends }
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.q.ncols()
    }

    /// Number of constraint rows contributed by each step.
    pub fn rows_per_step(&self) -> Vec<usize> {
        let mut prev = 0;
        self.step_ends
            .iter()
            .map(|&end| {
                let r = end - prev;
                prev = end;
                r
            })
            .collect()
    }

    /// The event of the first `steps` steps only.
    pub fn prefix(&self, steps: usize) -> SelectionEvent {
        let steps = steps.clamp(1, self.step_ends.len());
        let rows = self.step_ends[steps - 1];
        SelectionEvent {
            model: SelectedModel {
                steps: self.model.steps.iter().take(steps).cloned().collect(),
            },
            q: self.q.rows(0, rows).into_owned(),
            step_ends: self.step_ends[..steps].to_vec(),
        }
    }

    /// `Q y`.
    pub fn slack(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: y.len(),
            });
        }
        Ok(&self.q * y)
    }
}

/// A linear contrast `v` and, for projection contrasts, where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    pub v: DVector<f64>,
    pub active: Vec<usize>,
    /// Position within `active` of the tested coefficient.
    pub coordinate: usize,
    pub orientation: Sign,
    pub norm: f64,
}

impl Contrast {
    /// An arbitrary nonzero contrast vector without projection metadata.
    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidConfig("contrast must be a finite nonzero vector".into()));
        }
        Ok(Self {
            v,
            active: Vec::new(),
            coordinate: 0,
            orientation: Sign::Pos,
            norm,
        })
    }

    pub fn dot(&self, y: &DVector<f64>) -> f64 {
        self.v.dot(y)
    }
}

/// `v = orientation · X_A (X_A^T X_A)^{-1} e_j / sqrt(e_j^T (X_A^T X_A)^{-1} e_j)`,
/// so that `v^T y` is the j-th normalized least-squares coefficient on `A`.
pub fn projection_contrast(ds: &Dataset, active: &[usize], coordinate: usize, orientation: Sign) -> Result<Contrast> {
    if coordinate >= active.len() {
        return Err(Error::InvalidConfig(format!(
            "coordinate {coordinate} outside active set of size {}",
            active.len()
        )));
    }
    if let Some(&bad) = active.iter().find(|&&j| j >= ds.d()) {
        return Err(Error::InvalidConfig(format!("variable {bad} out of range")));
    }
    let ginv = linalg::gram_inverse(ds.x(), active)?;
    let xa = ds.x().select_columns(active.iter());
    let col = ginv.column(coordinate);
    let scale = col[coordinate].sqrt();
    let v = (xa * col) * (orientation.as_f64() / scale);
    let norm = v.norm();
    Ok(Contrast {
        v,
        active: active.to_vec(),
        coordinate,
        orientation,
        norm,
    })
}

/// `(X^T X / n, X^T y / sqrt(n))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterStatistic {
    pub gram: DMatrix<f64>,
    pub score: DVector<f64>,
}

pub fn master_statistic(ds: &Dataset) -> MasterStatistic {
    let n = ds.n() as f64;
    let xt = ds.x().transpose();
    MasterStatistic {
        gram: (&xt * ds.x()) / n,
        score: (xt * ds.y()) / n.sqrt(),
    }
}

/// Scalar settings for pivots and intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotConfig {
    /// Known error standard deviation.
    pub sigma: f64,
    /// Inflation factor applied to the plug-in and bootstrap scales.
    pub c: f64,
    /// Bootstrap padding constant; the padding is `gamma * n^{-1/4}`.
    pub gamma: f64,
    /// Intervals have level `1 - alpha`.
    pub alpha: f64,
}

impl Default for PivotConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            c: 1.0,
            gamma: 1e-4,
            alpha: 0.1,
        }
    }
}

impl PivotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be at least 1, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn orthonormal_2x2() -> Dataset {
        Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![2.0, 1.0])).unwrap()
    }

    #[test]
    fn dataset_rejects_bad_input() {
        let zero_col = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        assert!(matches!(
            Dataset::new(zero_col, DVector::zeros(3)),
            Err(Error::InvalidDataset(_))
        ));
        let one_row = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(Dataset::new(one_row, DVector::zeros(1)).is_err());
        let nan = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(Dataset::new(nan, DVector::zeros(2)).is_err());
        assert!(matches!(
            Dataset::new(DMatrix::identity(2, 2), DVector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn orthonormal_contrast_is_the_column() {
        let ds = orthonormal_2x2();
        let c = projection_contrast(&ds, &[1], 0, Sign::Pos).unwrap();
        assert_abs_diff_eq!(c.v[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.v[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.dot(ds.y()), 1.0, epsilon = 1e-15);
        let neg = projection_contrast(&ds, &[1], 0, Sign::Neg).unwrap();
        assert_abs_diff_eq!(neg.dot(ds.y()), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn correlated_contrast_matches_normal_equations() {
        // Independent route: solve the 2x2 normal equations by Cramer's rule.
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, 0.3, 1.0, -0.7, 0.2, 0.4, -1.1]);
        let y = DVector::from_vec(vec![1.5, -0.2, 0.9, 2.0]);
        let ds = Dataset::new(x.clone(), y.clone()).unwrap();

        let (mut g11, mut g12, mut g22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..4 {
            g11 += x[(i, 0)] * x[(i, 0)];
            g12 += x[(i, 0)] * x[(i, 1)];
            g22 += x[(i, 1)] * x[(i, 1)];
            r1 += x[(i, 0)] * y[i];
            r2 += x[(i, 1)] * y[i];
        }
        let det = g11 * g22 - g12 * g12;
        let beta1 = (g22 * r1 - g12 * r2) / det;
        let inv11 = g22 / det;
        let expected = beta1 / inv11.sqrt();

        let c = projection_contrast(&ds, &[0, 1], 0, Sign::Pos).unwrap();
        assert_abs_diff_eq!(c.dot(&y), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(c.norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn contrast_reports_ill_conditioned_set() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 1.0, 2.0, 1.0, 1.0, 2.0, 0.0]);
        let ds = Dataset::new(x, DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        match projection_contrast(&ds, &[0, 1], 0, Sign::Pos) {
            Err(Error::IllConditioned { active, .. }) => assert_eq!(active, vec![0, 1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn master_statistic_small_cases() {
        let ds = orthonormal_2x2();
        let m = master_statistic(&ds);
        assert_abs_diff_eq!(m.gram, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
        let s2 = 2f64.sqrt();
        assert_abs_diff_eq!(m.score, DVector::from_vec(vec![2.0 / s2, 1.0 / s2]), epsilon = 1e-15);

        let zero = ds.with_response(DVector::zeros(2)).unwrap();
        assert_eq!(master_statistic(&zero).score, DVector::zeros(2));
    }

    #[test]
    fn master_statistic_matches_double_loop() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0 + j as f64 * 0.1);
        let y = DVector::from_fn(10, |i, _| (i as f64 * 0.37).sin());
        let ds = Dataset::new(x.clone(), y.clone()).unwrap();
        let m = master_statistic(&ds);
        for a in 0..3 {
            let mut sy = 0.0;
            for i in 0..10 {
                sy += x[(i, a)] * y[i];
            }
            assert_abs_diff_eq!(m.score[a], sy / 10f64.sqrt(), epsilon = 1e-12);
            for b in 0..3 {
                let mut s = 0.0;
                for i in 0..10 {
                    s += x[(i, a)] * x[(i, b)];
                }
                assert_abs_diff_eq!(m.gram[(a, b)], s / 10.0, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(m.gram.clone(), m.gram.transpose(), epsilon = 0.0);
    }

    #[test]
    fn csv_ingestion_by_name_and_index() {
        let text = "x1,y,x2\n1,2,0\n0,1,1\n1,1,1\n";
        let ds = Dataset::from_csv(text.as_bytes(), &ResponseColumn::Name("y".into()), true).unwrap();
        assert_eq!(ds.y().as_slice(), &[2.0, 1.0, 1.0]);
        assert_eq!(ds.x().column(1).as_slice(), &[0.0, 1.0, 1.0]);

        let raw = "2,1,0\n1,0,1\n3,1,1\n";
        let ds = Dataset::from_csv(raw.as_bytes(), &ResponseColumn::Index(0), false).unwrap();
        assert_eq!(ds.y().as_slice(), &[2.0, 1.0, 3.0]);

        let err = Dataset::from_csv(text.as_bytes(), &ResponseColumn::Name("resp".into()), true).unwrap_err();
        assert!(err.to_string().contains("\"resp\""));
        let err = Dataset::from_csv("a,b\n1,x\n".as_bytes(), &ResponseColumn::Index(0), true).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }

    #[test]
    fn normalize_gives_unit_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 0.0, 2.0, 1.0]);
        let mut ds = Dataset::new(x, DVector::zeros(3)).unwrap();
        ds.normalize_columns();
        for c in ds.x().column_iter() {
            assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-15);
        }
    }
}
