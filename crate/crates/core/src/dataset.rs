//! Complete tabular observations and per-row count tables.
//!
//! Datasets store state indices; the CSV form stores state labels, with a
//! header row of variable names.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{Structure, Variable};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("dataset has no column for variable `{0}`")]
    MissingColumn(String),
    #[error("row {row}: state index {index} out of range for `{column}`")]
    BadIndex { row: usize, column: String, index: usize },
    #[error("row {row}: unknown state `{label}` for `{column}`")]
    UnknownLabel { row: usize, column: String, label: String },
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth { row: usize, found: usize, expected: usize },
    #[error("column `{0}` has fewer than two distinct states")]
    DegenerateColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A column name and its ordered state labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<usize>>) -> Result<Self, DatasetError> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(DatasetError::RowWidth {
                    row: r,
                    found: row.len(),
                    expected: columns.len(),
                });
            }
            for (c, &s) in row.iter().enumerate() {
                if s >= columns[c].states.len() {
                    return Err(DatasetError::BadIndex {
                        row: r,
                        column: columns[c].name.clone(),
                        index: s,
                    });
                }
            }
        }
        Ok(Dataset { columns, rows })
    }

    /// Empty dataset with one column per variable of `structure`.
    pub fn empty_for(structure: &Structure) -> Self {
        Dataset {
            columns: columns_of(structure),
            rows: Vec::new(),
        }
    }

    pub(crate) fn from_parts_unchecked(columns: Vec<Column>, rows: Vec<Vec<usize>>) -> Self {
        Dataset { columns, rows }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Root variables (no parents) named after the columns.
    pub fn variables(&self) -> Vec<Variable> {
        self.columns
            .iter()
            .map(|c| Variable::new(c.name.clone(), c.states.clone(), Vec::<String>::new()))
            .collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn head(&self, n: usize) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: self.rows[..n.min(self.rows.len())].to_vec(),
        }
    }

    /// Reads labelled CSV using the state order of `variables`. Every column
    /// must be one of the variables.
    pub fn read_csv<R: Read>(reader: R, variables: &[Variable]) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let by_name: HashMap<&str, &Variable> = variables.iter().map(|v| (v.name.as_str(), v)).collect();
        let columns = header
            .iter()
            .map(|h| {
                by_name
                    .get(h.as_str())
                    .map(|v| Column {
                        name: v.name.clone(),
                        states: v.states.clone(),
                    })
                    .ok_or_else(|| DatasetError::UnknownColumn(h.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            let mut row = Vec::with_capacity(columns.len());
            for (c, cell) in record.iter().enumerate() {
                let col = &columns[c];
                let s = col
                    .states
                    .iter()
                    .position(|x| x == cell)
                    .ok_or_else(|| DatasetError::UnknownLabel {
                        row: r,
                        column: col.name.clone(),
                        label: cell.to_string(),
                    })?;
                row.push(s);
            }
            rows.push(row);
        }
        Ok(Dataset { columns, rows })
    }

    /// Reads labelled CSV, inferring each column's states as its distinct
    /// labels in sorted order.
    pub fn read_csv_infer<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut cells: Vec<Vec<String>> = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(DatasetError::RowWidth {
                    row: r,
                    found: record.len(),
                    expected: header.len(),
                });
            }
            cells.push(record.iter().map(str::to_string).collect());
        }
        let mut columns = Vec::with_capacity(header.len());
        for (c, name) in header.iter().enumerate() {
            let states: BTreeSet<&str> = cells.iter().map(|row| row[c].as_str()).collect();
            if states.len() < 2 {
                return Err(DatasetError::DegenerateColumn(name.clone()));
            }
            columns.push(Column {
                name: name.clone(),
                states: states.into_iter().map(str::to_string).collect(),
            });
        }
        let rows = cells
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&columns)
                    .map(|(cell, col)| col.states.iter().position(|s| s == cell).expect("seen"))
                    .collect()
            })
            .collect();
        Ok(Dataset { columns, rows })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().zip(&self.columns).map(|(&s, c)| c.states[s].as_str()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn columns_of(structure: &Structure) -> Vec<Column> {
    structure
        .variables()
        .iter()
        .map(|v| Column {
            name: v.name.clone(),
            states: v.states.clone(),
        })
        .collect()
}

/// Counts of one variable's states per parent configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCounts {
    pub variable: String,
    pub cardinality: usize,
    /// Row-major: `counts[row * cardinality + state]`.
    pub counts: Vec<u64>,
}

impl VariableCounts {
    pub fn row(&self, r: usize) -> &[u64] {
        &self.counts[r * self.cardinality..(r + 1) * self.cardinality]
    }

    pub fn row_count(&self) -> usize {
        self.counts.len() / self.cardinality
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Observed counts for every CPT row of a structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub variables: Vec<VariableCounts>,
}

impl CountTable {
    pub fn zeros(structure: &Structure) -> Self {
        CountTable {
            variables: (0..structure.len())
                .map(|id| VariableCounts {
                    variable: structure.name(id).to_string(),
                    cardinality: structure.cardinality(id),
                    counts: vec![0; structure.row_count(id) * structure.cardinality(id)],
                })
                .collect(),
        }
    }

    pub fn row(&self, var: usize, row: usize) -> &[u64] {
        self.variables[var].row(row)
    }

    pub fn add(&mut self, var: usize, row: usize, state: usize, n: u64) {
        let v = &mut self.variables[var];
        v.counts[row * v.cardinality + state] += n;
    }

    /// True when the table's shape matches `structure`.
    pub fn fits(&self, structure: &Structure) -> bool {
        self.variables.len() == structure.len()
            && self.variables.iter().enumerate().all(|(id, v)| {
                v.variable == structure.name(id)
                    && v.cardinality == structure.cardinality(id)
                    && v.counts.len() == structure.row_count(id) * v.cardinality
            })
    }
}

/// Tallies child states per parent configuration.
pub fn count_dataset(structure: &Structure, ds: &Dataset) -> Result<CountTable, DatasetError> {
    let mut col_of = Vec::with_capacity(structure.len());
    for v in structure.variables() {
        let c = ds
            .column_index(&v.name)
            .ok_or_else(|| DatasetError::MissingColumn(v.name.clone()))?;
        col_of.push(c);
    }
    for col in ds.columns() {
        match structure.index_of(&col.name) {
            None => return Err(DatasetError::UnknownColumn(col.name.clone())),
            Some(id) if structure.cardinality(id) != col.states.len() => {
                return Err(DatasetError::UnknownColumn(format!(
                    "{} (state count differs from the network)",
                    col.name
                )))
            }
            _ => {}
        }
    }
    let mut table = CountTable::zeros(structure);
    let mut assignment = vec![0usize; structure.len()];
    for (r, row) in ds.rows().iter().enumerate() {
        for (id, &c) in col_of.iter().enumerate() {
            let s = row[c];
            if s >= structure.cardinality(id) {
                return Err(DatasetError::BadIndex {
                    row: r,
                    column: structure.name(id).to_string(),
                    index: s,
                });
            }
            assignment[id] = s;
        }
        for id in 0..structure.len() {
            let pr = structure.row_index(id, &assignment);
            table.add(id, pr, assignment[id], 1);
        }
    }
    Ok(table)
}
