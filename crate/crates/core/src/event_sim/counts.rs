//! Basis-resolved coincidence counts and their CSV form.
//!
//! ```text
//! setting_a,setting_b,n_pp,n_pm,n_mp,n_mm,total_shots
//! X,X,3,41,38,2,2000
//! ```
//!
//! `total_shots` is the number of shots assigned to that setting. Lines
//! starting with `#` are ignored on read.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{MeasurementSetting, Pauli};

/// Outcome counts for one setting, indexed `pp, pm, mp, mm`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub outcomes: [u64; 4],
    pub shots: u64,
}

impl SettingCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64, shots: u64) -> Result<Self> {
        let c = Self { outcomes: [n_pp, n_pm, n_mp, n_mm], shots };
        if c.coincidences() > shots {
            return Err(Error::Format(format!(
                "{} coincidences exceed {shots} shots",
                c.coincidences()
            )));
        }
        Ok(c)
    }

    /// Counts with `shots` equal to the number of coincidences.
    pub fn from_outcomes(outcomes: [u64; 4]) -> Self {
        Self { outcomes, shots: outcomes.iter().sum() }
    }

    pub fn coincidences(&self) -> u64 {
        self.outcomes.iter().sum()
    }

    /// Correlated (`pp + mm`) and anticorrelated (`pm + mp`) totals.
    pub fn same_and_different(&self) -> (u64, u64) {
        let [pp, pm, mp, mm] = self.outcomes;
        (pp + mm, pm + mp)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    rows: BTreeMap<MeasurementSetting, SettingCounts>,
}

impl FromIterator<(MeasurementSetting, SettingCounts)> for CountTable {
    fn from_iter<I: IntoIterator<Item = (MeasurementSetting, SettingCounts)>>(iter: I) -> Self {
        Self { rows: iter.into_iter().collect() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    setting_a: String,
    setting_b: String,
    n_pp: u64,
    n_pm: u64,
    n_mp: u64,
    n_mm: u64,
    total_shots: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, setting: MeasurementSetting, counts: SettingCounts) {
        self.rows.insert(setting, counts);
    }

    pub fn with(mut self, setting: MeasurementSetting, counts: SettingCounts) -> Self {
        self.insert(setting, counts);
        self
    }

    pub fn get(&self, setting: MeasurementSetting) -> Option<&SettingCounts> {
        self.rows.get(&setting)
    }

    /// Like [`get`](Self::get) but errors on a missing or empty setting.
    pub fn require(&self, setting: MeasurementSetting) -> Result<&SettingCounts> {
        let c = self.get(setting).ok_or(Error::MissingSetting(setting))?;
        if c.coincidences() == 0 {
            return Err(Error::EmptySetting(setting));
        }
        Ok(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MeasurementSetting, &SettingCounts)> {
        self.rows.iter()
    }

    pub fn settings(&self) -> impl Iterator<Item = MeasurementSetting> + '_ {
        self.rows.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_coincidences(&self) -> u64 {
        self.rows.values().map(SettingCounts::coincidences).sum()
    }

    pub fn total_shots(&self) -> u64 {
        self.rows.values().map(|c| c.shots).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (s, c) in &self.rows {
            let [n_pp, n_pm, n_mp, n_mm] = c.outcomes;
            w.serialize(CsvRow {
                setting_a: s.basis_a.label().to_string(),
                setting_b: s.basis_b.label().to_string(),
                n_pp,
                n_pm,
                n_mp,
                n_mm,
                total_shots: c.shots,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut table = CountTable::new();
        for row in r.deserialize::<CsvRow>() {
            let row = row?;
            let parse = |label: &str| {
                Pauli::from_label(label).ok_or_else(|| Error::Format(format!("unknown basis `{label}`")))
            };
            let setting = MeasurementSetting::new(parse(&row.setting_a)?, parse(&row.setting_b)?);
            if table.rows.contains_key(&setting) {
                return Err(Error::Format(format!("duplicate row for setting {setting}")));
            }
            let counts = SettingCounts::new(row.n_pp, row.n_pm, row.n_mp, row.n_mm, row.total_shots)?;
            table.insert(setting, counts);
        }
        Ok(table)
    }
}
