//! Study tables: one row of two-group summary statistics per experiment.
//!
//! The on-disk format is a comma-separated table with the header
//!
//! ```text
//! id,study,year,group_x,mean_x,sd_x,n_x,group_y,mean_y,sd_y,n_y,units,alpha_dm,species,pmid,loc,sign
//! ```
//!
//! Group X is the control group; relative effects are expressed against its mean.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column names, in canonical order.
pub const COLUMNS: [&str; 17] = [
    "id", "study", "year", "group_x", "mean_x", "sd_x", "n_x", "group_y", "mean_y", "sd_y", "n_y",
    "units", "alpha_dm", "species", "pmid", "loc", "sign",
];

/// Significance budget substituted when a table carries `alpha_dm = 0`.
pub const FALLBACK_ALPHA_DM: f64 = 0.05;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),
    #[error("schema error: unknown column `{0}`")]
    UnknownColumn(String),
    #[error("schema error: column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}: column `{column}`: cannot parse {value:?}: {reason}")]
    Field {
        /// Study id when it parsed, else the 1-based data line number.
        row: RowRef,
        column: &'static str,
        value: String,
        reason: String,
    },
    #[error("duplicate study id {0}")]
    DuplicateId(u32),
    #[error("malformed table: {0}")]
    Csv(#[from] csv::Error),
}

/// Where a row-scoped error happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRef {
    Id(u32),
    Line(u64),
}

impl fmt::Display for RowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowRef::Id(id) => write!(f, "id {id}"),
            RowRef::Line(line) => write!(f, "line {line}"),
        }
    }
}

/// Direction of an effect: reported by the source study, or read off an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum EffectSign {
    Negative,
    Null,
    Positive,
}

impl EffectSign {
    pub fn as_i8(self) -> i8 {
        match self {
            EffectSign::Negative => -1,
            EffectSign::Null => 0,
            EffectSign::Positive => 1,
        }
    }
}

impl From<EffectSign> for i8 {
    fn from(s: EffectSign) -> i8 {
        s.as_i8()
    }
}

impl TryFrom<i8> for EffectSign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(EffectSign::Negative),
            0 => Ok(EffectSign::Null),
            1 => Ok(EffectSign::Positive),
            other => Err(format!("sign must be -1, 0 or 1, got {other}")),
        }
    }
}

/// One experiment's two-group summary statistics plus its bibliographic metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub id: u32,
    pub study_label: String,
    pub year: i32,
    pub group_x_label: String,
    pub mean_x: f64,
    pub sd_x: f64,
    pub n_x: u32,
    pub group_y_label: String,
    pub mean_y: f64,
    pub sd_y: f64,
    pub n_y: u32,
    pub units: String,
    /// Per-study (Bonferroni-corrected) significance budget; credible level is `1 - alpha_dm`.
    pub alpha_dm: f64,
    pub species: String,
    pub pmid: String,
    pub loc: String,
    pub reported_sign: EffectSign,
}

/// A single failed invariant on a [`StudySummary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    IdNotPositive,
    SampleSizeX,
    SampleSizeY,
    SdX,
    SdY,
    MeanXNotPositive,
    AlphaOutOfRange,
    NonFinite(&'static str),
}

impl Violation {
    pub fn field(&self) -> &'static str {
        match self {
            Violation::IdNotPositive => "id",
            Violation::SampleSizeX => "n_x",
            Violation::SampleSizeY => "n_y",
            Violation::SdX => "sd_x",
            Violation::SdY => "sd_y",
            Violation::MeanXNotPositive => "mean_x",
            Violation::AlphaOutOfRange => "alpha_dm",
            Violation::NonFinite(field) => field,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IdNotPositive => f.write_str("id > 0"),
            Violation::SampleSizeX => f.write_str("n_x ≥ 2"),
            Violation::SampleSizeY => f.write_str("n_y ≥ 2"),
            Violation::SdX => f.write_str("sd_x > 0"),
            Violation::SdY => f.write_str("sd_y > 0"),
            Violation::MeanXNotPositive => f.write_str("mean_x > 0"),
            Violation::AlphaOutOfRange => f.write_str("alpha_dm in (0,1)"),
            Violation::NonFinite(field) => write!(f, "{field} finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, v: Violation) -> bool {
        self.violations.contains(&v)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every per-study invariant. Violations are data, so this never fails.
pub fn validate_study(s: &StudySummary) -> ValidationReport {
    let mut violations = Vec::new();
    for (field, value) in [
        ("mean_x", s.mean_x),
        ("sd_x", s.sd_x),
        ("mean_y", s.mean_y),
        ("sd_y", s.sd_y),
        ("alpha_dm", s.alpha_dm),
    ] {
        if !value.is_finite() {
            violations.push(Violation::NonFinite(field));
        }
    }
    if s.id == 0 {
        violations.push(Violation::IdNotPositive);
    }
    if s.n_x < 2 {
        violations.push(Violation::SampleSizeX);
    }
    if s.n_y < 2 {
        violations.push(Violation::SampleSizeY);
    }
    if !(s.sd_x > 0.0) {
        violations.push(Violation::SdX);
    }
    if !(s.sd_y > 0.0) {
        violations.push(Violation::SdY);
    }
    if !(s.mean_x > 0.0) {
        violations.push(Violation::MeanXNotPositive);
    }
    if !(s.alpha_dm > 0.0 && s.alpha_dm < 1.0) {
        violations.push(Violation::AlphaOutOfRange);
    }
    ValidationReport { violations }
}

/// Parses a significance budget written either as a decimal (`0.05`) or a ratio (`0.05/3`).
pub fn parse_alpha(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num = parse_real(num)?;
            let den = parse_real(den)?;
            if den == 0.0 {
                return Err("division by zero".into());
            }
            num / den
        }
        None => parse_real(text)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err("not a finite number".into())
    }
}

fn parse_real(text: &str) -> Result<f64, String> {
    let text = text.trim();
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err("not a finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_int<T: std::str::FromStr>(text: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    text.trim().parse::<T>().map_err(|e| e.to_string())
}

struct RowReader<'a> {
    record: &'a csv::StringRecord,
    index: &'a HashMap<&'static str, usize>,
    row: RowRef,
}

impl RowReader<'_> {
    fn text(&self, column: &'static str) -> &str {
        self.record.get(self.index[column]).unwrap_or("")
    }

    fn field<T>(
        &self,
        column: &'static str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, IngestError> {
        let raw = self.text(column);
        parse(raw).map_err(|reason| IngestError::Field {
            row: self.row,
            column,
            value: raw.to_string(),
            reason,
        })
    }
}

/// Parses a study table. Rows come back in file order; ids need not be sorted.
pub fn parse_study_table(text: &str) -> Result<Vec<StudySummary>, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let mut index: HashMap<&'static str, usize> = HashMap::new();
    for (pos, name) in headers.iter().enumerate() {
        let Some(&known) = COLUMNS.iter().find(|c| **c == name) else {
            return Err(IngestError::UnknownColumn(name.to_string()));
        };
        if index.insert(known, pos).is_some() {
            return Err(IngestError::DuplicateColumn(name.to_string()));
        }
    }
    if let Some(missing) = COLUMNS.iter().find(|c| !index.contains_key(*c)) {
        return Err(IngestError::MissingColumn(missing.to_string()));
    }

    let mut studies = Vec::new();
    let mut seen = HashSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = RowReader {
            record: &record,
            index: &index,
            row: RowRef::Line(line as u64 + 1),
        };
        let id: u32 = row.field("id", parse_int)?;
        row.row = RowRef::Id(id);
        let study = StudySummary {
            id,
            study_label: row.text("study").to_string(),
            year: row.field("year", parse_int)?,
            group_x_label: row.text("group_x").to_string(),
            mean_x: row.field("mean_x", parse_real)?,
            sd_x: row.field("sd_x", parse_real)?,
            n_x: row.field("n_x", parse_int)?,
            group_y_label: row.text("group_y").to_string(),
            mean_y: row.field("mean_y", parse_real)?,
            sd_y: row.field("sd_y", parse_real)?,
            n_y: row.field("n_y", parse_int)?,
            units: row.text("units").to_string(),
            alpha_dm: row.field("alpha_dm", parse_alpha)?,
            species: row.text("species").to_string(),
            pmid: row.text("pmid").to_string(),
            loc: row.text("loc").to_string(),
            reported_sign: row.field("sign", |t| {
                parse_int::<i8>(t).and_then(EffectSign::try_from)
            })?,
        };
        if !seen.insert(id) {
            return Err(IngestError::DuplicateId(id));
        }
        studies.push(study);
    }
    Ok(studies)
}

/// Serializes studies back into the table format. `alpha_dm` is written as its evaluated value.
pub fn write_study_table(studies: &[StudySummary]) -> Result<String, IngestError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(COLUMNS)?;
    for s in studies {
        writer.write_record([
            s.id.to_string(),
            s.study_label.clone(),
            s.year.to_string(),
            s.group_x_label.clone(),
            s.mean_x.to_string(),
            s.sd_x.to_string(),
            s.n_x.to_string(),
            s.group_y_label.clone(),
            s.mean_y.to_string(),
            s.sd_y.to_string(),
            s.n_y.to_string(),
            s.units.clone(),
            s.alpha_dm.to_string(),
            s.species.clone(),
            s.pmid.clone(),
            s.loc.clone(),
            s.reported_sign.as_i8().to_string(),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer only emits utf-8 given utf-8 fields"))
}

/// A row that loaded only after a documented correction.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadWarning {
    pub study_id: u32,
    pub message: String,
}

/// A parsed table plus whatever corrections were applied on the way in.
#[derive(Debug, Clone, Default)]
pub struct LoadedTable {
    pub studies: Vec<StudySummary>,
    pub warnings: Vec<LoadWarning>,
}

/// Parses a table and applies the `alpha_dm = 0` fallback.
///
/// A zero budget cannot be a real correction (it would demand a 100% credible
/// interval), so it is read as a transcription slip and replaced with
/// [`FALLBACK_ALPHA_DM`]. Each substitution is logged at warn level and returned.
pub fn load_study_table(text: &str) -> Result<LoadedTable, IngestError> {
    let mut studies = parse_study_table(text)?;
    let mut warnings = Vec::new();
    for s in &mut studies {
        if s.alpha_dm == 0.0 {
            let message = format!(
                "study {}: alpha_dm is 0; substituting {FALLBACK_ALPHA_DM}",
                s.id
            );
            log::warn!("{message}");
            s.alpha_dm = FALLBACK_ALPHA_DM;
            warnings.push(LoadWarning {
                study_id: s.id,
                message,
            });
        }
    }
    Ok(LoadedTable { studies, warnings })
}
