//! Input distribution tables.
//!
//! Each table is a small delimited text file with a documented header;
//! probabilities are decimals and need not be pre-normalized. Loaders
//! validate shape and ranges, then build samplers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng::SimRng;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn deserialize_rows<T: for<'de> Deserialize<'de>, R: Read>(
    reader: R,
    source: &str,
) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    for record in csv_reader(reader).deserialize() {
        let row: T = record.map_err(|e| Error::parse(source, e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

/// One age bin with an associated weight (probability mass or rate).
#[derive(Debug, Clone, Deserialize)]
pub struct AgeBinRow {
    pub age_min: u32,
    pub age_max: u32,
    #[serde(alias = "rate")]
    pub probability: f64,
}

/// Histogram over age bins; samples an integer age uniformly within the
/// drawn bin.
#[derive(Debug, Clone)]
pub struct AgeDistribution {
    bins: Vec<AgeBinRow>,
    sampler: WeightedIndex<f64>,
}

impl AgeDistribution {
    pub fn new(bins: Vec<AgeBinRow>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::config("age distribution has no bins"));
        }
        for bin in &bins {
            if bin.age_min > bin.age_max {
                return Err(Error::config(format!(
                    "age bin {}..{} is inverted",
                    bin.age_min, bin.age_max
                )));
            }
            if !bin.probability.is_finite() || bin.probability < 0.0 {
                return Err(Error::config("age bin weight must be finite and >= 0"));
            }
        }
        let sampler = WeightedIndex::new(bins.iter().map(|b| b.probability))
            .map_err(|e| Error::config(format!("age distribution not normalizable: {e}")))?;
        Ok(Self { bins, sampler })
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    pub fn sample(&self, rng: &mut SimRng) -> u32 {
        let bin = &self.bins[self.sampler.sample(rng)];
        rng.gen_range(bin.age_min..=bin.age_max)
    }

    pub fn bins(&self) -> &[AgeBinRow] {
        &self.bins
    }

    /// Normalized probability mass of each bin, in order.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.bins.iter().map(|b| b.probability).sum();
        self.bins.iter().map(|b| b.probability / total).collect()
    }

    /// Index of the bin containing `age`, if any.
    pub fn bin_of(&self, age: u32) -> Option<usize> {
        self.bins
            .iter()
            .position(|b| age >= b.age_min && age <= b.age_max)
    }
}

use rand::Rng;

#[derive(Debug, Clone, Deserialize)]
pub struct SizeRow {
    pub size: u32,
    pub probability: f64,
}

/// Histogram over integer sizes (household, school group, workplace).
#[derive(Debug, Clone)]
pub struct SizeDistribution {
    entries: Vec<SizeRow>,
    sampler: WeightedIndex<f64>,
}

impl SizeDistribution {
    pub fn new(entries: Vec<SizeRow>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("size distribution has no entries"));
        }
        for row in &entries {
            if row.size == 0 {
                return Err(Error::config("size distribution contains size 0"));
            }
            if !row.probability.is_finite() || row.probability < 0.0 {
                return Err(Error::config("size weight must be finite and >= 0"));
            }
        }
        let sampler = WeightedIndex::new(entries.iter().map(|r| r.probability))
            .map_err(|e| Error::config(format!("size distribution not normalizable: {e}")))?;
        Ok(Self { entries, sampler })
    }

    /// Convenience constructor from `(size, weight)` pairs.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(size, probability)| SizeRow { size, probability })
                .collect(),
        )
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    pub fn sample(&self, rng: &mut SimRng) -> u32 {
        self.entries[self.sampler.sample(rng)].size
    }

    pub fn entries(&self) -> &[SizeRow] {
        &self.entries
    }

    /// Mean size under the normalized weights.
    pub fn mean(&self) -> f64 {
        let total: f64 = self.entries.iter().map(|r| r.probability).sum();
        self.entries
            .iter()
            .map(|r| r.size as f64 * r.probability)
            .sum::<f64>()
            / total
    }
}

/// Per-age rate table (employment, enrollment). Ages not covered by any
/// row have rate 0.
#[derive(Debug, Clone)]
pub struct AgeRateTable {
    rows: Vec<AgeBinRow>,
}

impl AgeRateTable {
    pub fn new(rows: Vec<AgeBinRow>) -> Result<Self> {
        for row in &rows {
            if row.age_min > row.age_max {
                return Err(Error::config("rate table bin inverted"));
            }
            if !(0.0..=1.0).contains(&row.probability) {
                return Err(Error::config("rates must lie in [0, 1]"));
            }
        }
        Ok(Self { rows })
    }

    /// A table with no rows: rate 0 for every age.
    pub fn empty() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    pub fn rate(&self, age: u32) -> f64 {
        self.rows
            .iter()
            .find(|r| age >= r.age_min && age <= r.age_max)
            .map(|r| r.probability)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct WaningRow {
    pub doses: u32,
    pub week: u32,
    pub infection_protection: f64,
    pub transmission_reduction: f64,
}

/// Vaccine efficacy by dose count and weeks since the last dose.
///
/// Lookups past the last tabulated week hold the final value; dose counts
/// between tabulated rows resolve to the highest tabulated count not
/// exceeding the query.
#[derive(Debug, Clone, Default)]
pub struct WaningTable {
    by_doses: BTreeMap<u32, Vec<(u32, f64, f64)>>,
}

impl WaningTable {
    pub fn new(rows: Vec<WaningRow>) -> Result<Self> {
        let mut by_doses: BTreeMap<u32, Vec<(u32, f64, f64)>> = BTreeMap::new();
        for row in rows {
            if !(0.0..=1.0).contains(&row.infection_protection)
                || !(0.0..=1.0).contains(&row.transmission_reduction)
            {
                return Err(Error::config("waning multipliers must lie in [0, 1]"));
            }
            by_doses.entry(row.doses).or_default().push((
                row.week,
                row.infection_protection,
                row.transmission_reduction,
            ));
        }
        for rows in by_doses.values_mut() {
            rows.sort_by_key(|r| r.0);
        }
        Ok(Self { by_doses })
    }

    /// An empty table; every lookup yields zero protection.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    /// (infection_protection, transmission_reduction) for the given dose
    /// count and week index.
    pub fn lookup(&self, doses: u32, week: u32) -> (f64, f64) {
        let rows = match self
            .by_doses
            .range(..=doses)
            .next_back()
            .or_else(|| self.by_doses.iter().next())
        {
            Some((_, rows)) => rows,
            None => return (0.0, 0.0),
        };
        // Last row with row.week <= week, clamped to the first row.
        let idx = match rows.binary_search_by_key(&week, |r| r.0) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let row = rows[idx];
        (row.1, row.2)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct IncidenceRow {
    pub day: i32,
    pub new_infections: u32,
}

/// Pre-start incidence series for burn-in: new infections per day, keyed by
/// day offsets relative to simulation day 0 (all offsets negative).
#[derive(Debug, Clone, Default)]
pub struct IncidenceSeries {
    rows: Vec<IncidenceRow>,
}

impl IncidenceSeries {
    pub fn new(mut rows: Vec<IncidenceRow>) -> Result<Self> {
        for row in &rows {
            if row.day >= 0 {
                return Err(Error::config(format!(
                    "incidence day {} is not a pre-start offset (must be < 0)",
                    row.day
                )));
            }
        }
        rows.sort_by_key(|r| r.day);
        if rows.windows(2).any(|w| w[0].day == w[1].day) {
            return Err(Error::config("incidence series has duplicate days"));
        }
        Ok(Self { rows })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    /// Rows in ascending day order (oldest first).
    pub fn rows(&self) -> &[IncidenceRow] {
        &self.rows
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.new_infections as u64).sum()
    }

    /// Number of covered pre-start days (from the oldest row to day -1).
    pub fn span_days(&self) -> u32 {
        self.rows.first().map(|r| (-r.day) as u32).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TimingRow {
    pub series: String,
    pub day: i32,
    pub weight: f64,
}

/// Named dose-timing distributions (e.g. last primary dose per age bracket,
/// boosters), each a weighted histogram over pre-start day offsets.
#[derive(Debug, Clone)]
pub struct TimingSeries {
    series: BTreeMap<String, (Vec<i32>, WeightedIndex<f64>)>,
}

impl TimingSeries {
    pub fn new(rows: Vec<TimingRow>) -> Result<Self> {
        let mut grouped: BTreeMap<String, Vec<(i32, f64)>> = BTreeMap::new();
        for row in rows {
            if !row.weight.is_finite() || row.weight < 0.0 {
                return Err(Error::config("timing weight must be finite and >= 0"));
            }
            grouped.entry(row.series).or_default().push((row.day, row.weight));
        }
        let mut series = BTreeMap::new();
        for (name, mut entries) in grouped {
            entries.sort_by_key(|e| e.0);
            let sampler = WeightedIndex::new(entries.iter().map(|e| e.1)).map_err(|e| {
                Error::config(format!("timing series '{name}' not normalizable: {e}"))
            })?;
            series.insert(name, (entries.iter().map(|e| e.0).collect(), sampler));
        }
        Ok(Self { series })
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::new(deserialize_rows(reader, source)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?, &path.display().to_string())
    }

    /// A single-series table that always yields `day`.
    pub fn constant(name: &str, day: i32) -> Self {
        Self::new(vec![TimingRow {
            series: name.to_string(),
            day,
            weight: 1.0,
        }])
        .expect("constant timing series is valid")
    }

    pub fn has(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn sample_day(&self, name: &str, rng: &mut SimRng) -> Result<i32> {
        let (days, sampler) = self
            .series
            .get(name)
            .ok_or_else(|| Error::config(format!("timing series '{name}' not found")))?;
        Ok(days[sampler.sample(rng)])
    }
}
