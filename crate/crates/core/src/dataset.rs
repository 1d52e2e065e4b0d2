//! Tabular data: the training examples `T = {x^t}` that empirical methods
//! condition on.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{check_unique, Coalition, FeatureNames, FeatureSubset, FeatureVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    names: FeatureNames,
    rows: Vec<Vec<T>>,
    weights: Option<Vec<T>>,
}

/// When a data row counts as agreeing with the explicand on one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closeness {
    /// Bit-exact equality.
    Exact,
    /// `|x^t_i - x_i| <= fraction · σ_i`, with `σ_i` the population standard
    /// deviation of feature `i` over the reference data.
    StdFraction(f64),
}

/// Per-feature absolute tolerances, or exact agreement.
#[derive(Debug, Clone, PartialEq)]
pub enum Tolerances<T> {
    Exact,
    Within(Vec<T>),
}

impl<T: Scalar> Tolerances<T> {
    /// Features on which `row` agrees with `x`.
    pub fn agreement(&self, row: &[T], x: &[T]) -> Coalition {
        let mut mask = Coalition::empty(x.len());
        for i in 0..x.len() {
            let ok = match self {
                Tolerances::Exact => row[i] == x[i],
                Tolerances::Within(tol) => (row[i] - x[i]).abs() <= tol[i],
            };
            if ok {
                mask.insert(i);
            }
        }
        mask
    }
}

impl<T: Scalar> Dataset<T> {
    pub fn new(names: FeatureNames, rows: Vec<Vec<T>>, weights: Option<Vec<T>>) -> Result<Self> {
        check_unique(&names)?;
        for (k, r) in rows.iter().enumerate() {
            if r.len() != names.len() {
                return Err(Error::Construction(format!(
                    "row {k} has {} values for {} features",
                    r.len(),
                    names.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Construction(format!("row {k} has a non-finite value")));
            }
        }
        if let Some(w) = &weights {
            if w.len() != rows.len() {
                return Err(Error::Construction("one weight per row required".into()));
            }
            if w.iter().any(|v| *v < T::zero() || !v.is_finite()) {
                return Err(Error::Construction("weights must be finite and nonnegative".into()));
            }
            if !rows.is_empty() && w.iter().copied().sum::<T>() <= T::zero() {
                return Err(Error::Construction("weights must have a positive sum".into()));
            }
        }
        Ok(Self { names, rows, weights })
    }

    pub fn from_vectors(rows: &[FeatureVector<T>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Construction("no rows to infer features from".into()))?;
        let names = first.names().clone();
        let rows = rows.iter().map(|r| r.reorder(&names).map(|v| v.values().to_vec())).collect::<Result<Vec<_>>>()?;
        Self::new(names, rows, None)
    }

    pub fn names(&self) -> &FeatureNames {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, k: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[k])
    }

    pub fn row(&self, k: usize) -> FeatureVector<T> {
        FeatureVector::from_parts_unchecked(self.names.clone(), self.rows[k].clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureVector<T>> + '_ {
        (0..self.len()).map(|k| self.row(k))
    }

    pub fn push(&mut self, row: &FeatureVector<T>, weight: T) -> Result<()> {
        let row = row.reorder(&self.names)?;
        if let Some(w) = &mut self.weights {
            w.push(weight);
        } else if weight != T::one() {
            let mut w = vec![T::one(); self.rows.len()];
            w.push(weight);
            self.weights = Some(w);
        }
        self.rows.push(row.values().to_vec());
        Ok(())
    }

    /// Whether some row agrees with `x` on every feature.
    pub fn contains(&self, x: &FeatureVector<T>, tol: &Tolerances<T>) -> Result<bool> {
        let x = x.reorder(&self.names)?;
        let full = Coalition::full(self.names.len());
        Ok(self.rows.iter().any(|r| tol.agreement(r, x.values()) == full))
    }

    /// Weighted mean of every column.
    pub fn means(&self) -> Result<Vec<T>> {
        if self.is_empty() {
            return Err(Error::Construction("mean of an empty dataset".into()));
        }
        let total: T = (0..self.len()).map(|k| self.weight(k)).sum();
        Ok((0..self.names.len())
            .map(|i| (0..self.len()).map(|k| self.weight(k) * self.rows[k][i]).sum::<T>() / total)
            .collect())
    }

    /// Weighted population standard deviation of every column.
    pub fn std_devs(&self) -> Result<Vec<T>> {
        let means = self.means()?;
        let total: T = (0..self.len()).map(|k| self.weight(k)).sum();
        Ok((0..self.names.len())
            .map(|i| {
                let var = (0..self.len())
                    .map(|k| {
                        let d = self.rows[k][i] - means[i];
                        self.weight(k) * d * d
                    })
                    .sum::<T>()
                    / total;
                var.sqrt()
            })
            .collect())
    }

    pub fn mean_vector(&self) -> Result<FeatureVector<T>> {
        Ok(FeatureVector::from_parts_unchecked(self.names.clone(), self.means()?))
    }

    /// Resolve a closeness rule against this data's spread.
    pub fn tolerances(&self, closeness: Closeness) -> Result<Tolerances<T>> {
        match closeness {
            Closeness::Exact => Ok(Tolerances::Exact),
            Closeness::StdFraction(tau) => {
                if tau < 0.0 || !tau.is_finite() {
                    return Err(Error::Argument(format!("smoothing fraction must be >= 0, got {tau}")));
                }
                let t = T::lit(tau);
                Ok(Tolerances::Within(self.std_devs()?.into_iter().map(|s| t * s).collect()))
            }
        }
    }

    /// `T_S`: rows agreeing with `x` on every feature of `subset`.
    pub fn restrict_agreement(
        &self,
        x: &FeatureVector<T>,
        subset: &FeatureSubset,
        closeness: Closeness,
    ) -> Result<Self> {
        let tol = self.tolerances(closeness)?;
        self.restrict_with(x, subset, &tol)
    }

    pub fn restrict_with(&self, x: &FeatureVector<T>, subset: &FeatureSubset, tol: &Tolerances<T>) -> Result<Self> {
        if subset.universe()[..] != self.names[..] {
            return Err(Error::Argument("subset universe differs from dataset features".into()));
        }
        let x = x.reorder(&self.names)?;
        let keep: Vec<usize> = (0..self.len())
            .filter(|&k| subset.coalition().is_subset_of(&tol.agreement(&self.rows[k], x.values())))
            .collect();
        Ok(Self {
            names: self.names.clone(),
            rows: keep.iter().map(|&k| self.rows[k].clone()).collect(),
            weights: self.weights.as_ref().map(|w| keep.iter().map(|&k| w[k]).collect()),
        })
    }

    /// Project onto a subset of columns.
    pub fn select(&self, names: &FeatureNames) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).ok_or_else(|| Error::MissingFeature(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names: names.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            weights: self.weights.clone(),
        })
    }

    /// Parse CSV: a header of feature names with an optional leading `weight`
    /// column, then numeric rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            None => return Err(Error::Parse { position: 1, message: "empty file: missing header row".into() }),
            Some(r) => r.map_err(|e| csv_error(&e))?,
        };
        let mut cols: Vec<String> = header.iter().map(str::to_string).collect();
        let weighted = cols.first().is_some_and(|c| c.eq_ignore_ascii_case("weight"));
        if weighted {
            cols.remove(0);
        }
        if cols.is_empty() || cols.iter().any(String::is_empty) {
            return Err(Error::Parse { position: 1, message: "header has empty feature names".into() });
        }
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| csv_error(&e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let expected = cols.len() + usize::from(weighted);
            if rec.len() != expected {
                return Err(Error::Parse {
                    position: line,
                    message: format!("line {line}: expected {expected} cells, found {}", rec.len()),
                });
            }
            let mut vals = Vec::with_capacity(rec.len());
            for (j, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    position: line,
                    message: format!("line {line}: non-numeric cell `{cell}` in column {}", j + 1),
                })?;
                vals.push(T::lit(v));
            }
            if weighted {
                weights.push(vals.remove(0));
            }
            rows.push(vals);
        }
        Dataset::new(cols.into(), rows, weighted.then_some(weights))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
        let mut header: Vec<&str> = Vec::new();
        if self.weights.is_some() {
            header.push("weight");
        }
        header.extend(self.names.iter().map(String::as_str));
        w.write_record(&header).map_err(io)?;
        for (k, r) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = Vec::new();
            if let Some(ws) = &self.weights {
                cells.push(format!("{:?}", ws[k].as_f64()));
            }
            cells.extend(r.iter().map(|v| format!("{:?}", v.as_f64())));
            w.write_record(&cells).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { position: line, message: format!("line {line}: {e}") }
}
