//! Datasets shipped with the crate.

use serde::Serialize;

use super::ingest::{parse_series, Table};
use crate::error::{Error, Result};

pub struct Dataset {
    pub name: &'static str,
    pub text: &'static str,
}

impl Dataset {
    /// First comment line of the file, without the `#`.
    pub fn source(&self) -> &'static str {
        self.text
            .lines()
            .find_map(|l| l.strip_prefix('#'))
            .map_or("", str::trim)
    }

    pub fn table(&self) -> Result<Table> {
        parse_series(self.text)
    }
}

macro_rules! bundled {
    ($($name:literal => $file:literal),* $(,)?) => {
        &[$(Dataset { name: $name, text: include_str!(concat!("../../data/", $file)) }),*]
    };
}

pub const DATASETS: &[Dataset] = bundled! {
    "table1-patient9" => "table1_patient09.csv",
    "table1-patient18" => "table1_patient18.csv",
    "table1-patient23" => "table1_patient23.csv",
    "table1-patient17" => "table1_patient17.csv",
    "table1-patient15" => "table1_patient15.csv",
    "table1-patient12" => "table1_patient12.csv",
    "table2-pre-post" => "table2_pre_post.csv",
    "table2-difference" => "table2_difference.csv",
};

/// Table 1 patients in report row order.
pub const TABLE1_PATIENTS: [(u32, &str); 6] = [
    (9, "table1-patient9"),
    (18, "table1-patient18"),
    (23, "table1-patient23"),
    (17, "table1-patient17"),
    (15, "table1-patient15"),
    (12, "table1-patient12"),
];

pub fn dataset(name: &str) -> Result<&'static Dataset> {
    DATASETS
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::Invalid(format!("no bundled dataset '{name}' (see `datasets list`)")))
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: &'static str,
    pub columns: usize,
    pub length: usize,
    pub source: &'static str,
}

pub fn list() -> Result<Vec<DatasetInfo>> {
    DATASETS
        .iter()
        .map(|d| {
            let table = d.table()?;
            Ok(DatasetInfo {
                name: d.name,
                columns: if matches!(table, Table::Pair(..)) { 2 } else { 1 },
                length: table.len(),
                source: d.source(),
            })
        })
        .collect()
}
