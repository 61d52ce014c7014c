//! Time-series ingestion: the canonical `year,value` CSV, the Maddison
//! horizontal table layout, and year windows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Header line of the canonical CSV format.
pub const CANONICAL_HEADER: &str = "year,value";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub year: i64,
    pub value: f64,
}

/// Observations ordered by strictly increasing year, all values positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub unit: String,
    observations: Vec<Observation>,
}

impl TimeSeries {
    /// Builds a series, sorting by year. Rejects duplicate years and values
    /// that are not strictly positive and finite.
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        mut observations: Vec<Observation>,
    ) -> Result<Self> {
        for obs in &observations {
            if !(obs.value.is_finite() && obs.value > 0.0) {
                return Err(Error::Validation(format!(
                    "non-positive value {} at year {}",
                    obs.value, obs.year
                )));
            }
        }
        observations.sort_by_key(|o| o.year);
        if let Some(w) = observations.windows(2).find(|w| w[0].year == w[1].year) {
            return Err(Error::Validation(format!("duplicate year {}", w[0].year)));
        }
        Ok(Self {
            name: name.into(),
            unit: unit.into(),
            observations,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = i64> + '_ {
        self.observations.iter().map(|o| o.year)
    }

    /// Inclusive span of the observed years, `None` for an empty series.
    pub fn year_span(&self) -> Option<YearRange> {
        match (self.observations.first(), self.observations.last()) {
            (Some(first), Some(last)) => Some(YearRange {
                start: first.year,
                end: last.year,
            }),
            _ => None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }
}

/// Inclusive span of years. Written and parsed as `START:END`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct YearRange {
    pub start: i64,
    pub end: i64,
}

impl YearRange {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidArgument(format!(
                "year range start {start} is after end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, year: i64) -> bool {
        self.start <= year && year <= self.end
    }

    pub fn intersects(&self, other: &YearRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn intersection(&self, other: &YearRange) -> Option<YearRange> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(YearRange { start, end })
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for YearRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // First ':' after the leading character, so `-10:0` parses.
        let bad = || Error::InvalidArgument(format!("expected START:END, got {s:?}"));
        let s = s.trim();
        let idx = s
            .char_indices()
            .skip(1)
            .find(|&(_, c)| c == ':')
            .map(|(i, _)| i)
            .ok_or_else(bad)?;
        let start = s[..idx].trim().parse::<i64>().map_err(|_| bad())?;
        let end = s[idx + 1..].trim().parse::<i64>().map_err(|_| bad())?;
        YearRange::new(start, end)
    }
}

impl Serialize for YearRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearRange {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses the canonical two-column format. Rows may be in any order; the
/// result is sorted by year. Blank lines are ignored.
pub fn parse_series_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_start_matches('\u{feff}') == CANONICAL_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                column: None,
                message: format!("expected header {CANONICAL_HEADER:?}, got {header:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                column: None,
                message: "empty input".into(),
            })
        }
    }

    let mut observations = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                column: None,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let year = fields[0].trim().parse::<i64>().map_err(|_| Error::Parse {
            line: line_no,
            column: Some(1),
            message: format!("year {:?} is not an integer", fields[0]),
        })?;
        let value = parse_decimal(fields[1]).ok_or_else(|| Error::Parse {
            line: line_no,
            column: Some(2),
            message: format!("value {:?} is not a number", fields[1]),
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Validation(format!(
                "non-positive value {value} at year {year} (line {line_no})"
            )));
        }
        observations.push(Observation { year, value });
    }

    if observations.len() < 2 {
        return Err(Error::Validation(format!(
            "at least 2 observations required, found {}",
            observations.len()
        )));
    }
    TimeSeries::new("series", "", observations)
}

/// Writes the canonical format. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn to_csv(series: &TimeSeries) -> String {
    let mut out = String::from(CANONICAL_HEADER);
    out.push('\n');
    for obs in series.observations() {
        out.push_str(&format!("{},{}\n", obs.year, obs.value));
    }
    out
}

fn parse_decimal(field: &str) -> Option<f64> {
    let field = field.trim();
    // Rust accepts "inf"/"nan"; the interchange format does not.
    if field.is_empty()
        || !field
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
    {
        return None;
    }
    field.parse::<f64>().ok()
}

/// Field delimiter of a Maddison horizontal export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "tab" | "\t" => Ok(Delimiter::Tab),
            other => Err(Error::InvalidArgument(format!(
                "unknown delimiter {other:?} (expected comma or tab)"
            ))),
        }
    }
}

/// Extracts one labelled row from a Maddison-style horizontal table: first
/// row holds the years, first column holds the row labels. Blank cells are
/// missing observations. Thousands separators are stripped from values.
pub fn parse_maddison_horizontal(
    text: &str,
    row_label: &str,
    delimiter: Delimiter,
) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: None,
                message: "empty table".into(),
            })
        }
    };

    // Column index -> year; blank header cells mark unused columns.
    let mut years: Vec<Option<i64>> = vec![None];
    for (col, cell) in header.iter().enumerate().skip(1) {
        let cell = cell.trim();
        if cell.is_empty() {
            years.push(None);
            continue;
        }
        let year = parse_year_cell(cell).ok_or_else(|| Error::Parse {
            line: 1,
            column: Some(col + 1),
            message: format!("header cell {cell:?} is not a year"),
        })?;
        years.push(Some(year));
    }

    let mut available = Vec::new();
    for (idx, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line_no = idx + 2;
        let label = rec.get(0).unwrap_or("").trim();
        if label != row_label.trim() {
            if !label.is_empty() {
                available.push(label.to_string());
            }
            continue;
        }

        let mut observations = Vec::new();
        for (col, cell) in rec.iter().enumerate().skip(1) {
            let cleaned: String = cell.chars().filter(|&c| c != ',').collect();
            let cleaned = cleaned.trim();
            if cleaned.is_empty() {
                continue;
            }
            let value = parse_decimal(cleaned).ok_or_else(|| Error::Parse {
                line: line_no,
                column: Some(col + 1),
                message: format!("cell {cell:?} is not numeric"),
            })?;
            let year = years.get(col).copied().flatten().ok_or_else(|| Error::Parse {
                line: line_no,
                column: Some(col + 1),
                message: "value in a column without a year header".into(),
            })?;
            observations.push(Observation { year, value });
        }
        return TimeSeries::new(label, "", observations);
    }

    Err(Error::Lookup {
        label: row_label.to_string(),
        available,
    })
}

fn parse_year_cell(cell: &str) -> Option<i64> {
    if let Ok(y) = cell.parse::<i64>() {
        return Some(y);
    }
    // Spreadsheet exports sometimes write integer years as "1820.0".
    let f = cell.parse::<f64>().ok()?;
    (f.is_finite() && f.fract() == 0.0).then_some(f as i64)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        column: None,
        message: e.to_string(),
    }
}

/// Observations with `range.start <= year <= range.end`. May be short or
/// empty; fitting operations decide whether that is acceptable.
pub fn window(series: &TimeSeries, range: YearRange) -> TimeSeries {
    TimeSeries {
        name: series.name.clone(),
        unit: series.unit.clone(),
        observations: series
            .observations
            .iter()
            .copied()
            .filter(|o| range.contains(o.year))
            .collect(),
    }
}
