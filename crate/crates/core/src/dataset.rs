//! Tabular datasets with an explicit schema sidecar.
//!
//! Samples carry categorical values as indices into the feature's domain and
//! numeric values as finite reals. Labels are always binary: the schema names
//! the positive token and everything else maps to the (single) negative token.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema line {line}: {message}")]
    SchemaParse { line: usize, message: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{0}` in csv header")]
    MissingColumn(String),
    #[error("unexpected column `{0}` in csv header")]
    UnexpectedColumn(String),
    #[error("row {row}, column `{column}`: unknown token `{token}`")]
    UnknownToken {
        row: usize,
        column: String,
        token: String,
    },
    #[error("row {row}, column `{column}`: non-finite or unparsable numeric cell `{cell}`")]
    NonFiniteNumeric {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}: unknown target label `{token}`")]
    UnknownLabel { row: usize, token: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("class {label} has {count} samples, need at least {needed}")]
    TooFewInClass {
        label: Label,
        count: usize,
        needed: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_sign(v: f64) -> Label {
        if v >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `+1` or `-1`.
    pub fn value(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    /// Domain is sorted lexicographically and duplicate-free.
    Categorical {
        domain: Vec<String>,
    },
    Numeric,
}

impl FeatureKind {
    pub fn categorical<I, S>(values: I) -> Result<FeatureKind>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let domain: BTreeSet<String> = values.into_iter().map(Into::into).collect();
        if domain.is_empty() {
            return Err(DatasetError::InvalidSchema(
                "categorical domain must not be empty".into(),
            ));
        }
        Ok(FeatureKind::Categorical {
            domain: domain.into_iter().collect(),
        })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    feature_names: Vec<String>,
    kinds: Vec<FeatureKind>,
    target_name: String,
    positive_label: String,
    negative_label: Option<String>,
}

impl Schema {
    pub fn new(
        features: Vec<(String, FeatureKind)>,
        target_name: impl Into<String>,
        positive_label: impl Into<String>,
        negative_label: Option<String>,
    ) -> Result<Schema> {
        let target_name = target_name.into();
        let positive_label = positive_label.into();
        let mut seen = BTreeSet::new();
        for (name, kind) in &features {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::InvalidSchema(format!(
                    "duplicate feature `{name}`"
                )));
            }
            if let FeatureKind::Categorical { domain } = kind {
                let sorted: BTreeSet<&String> = domain.iter().collect();
                if domain.is_empty()
                    || sorted.len() != domain.len()
                    || !sorted.into_iter().eq(domain.iter())
                {
                    return Err(DatasetError::InvalidSchema(format!(
                        "domain of `{name}` must be non-empty, sorted and duplicate-free"
                    )));
                }
            }
        }
        if seen.contains(target_name.as_str()) {
            return Err(DatasetError::InvalidSchema(format!(
                "target `{target_name}` is also a feature"
            )));
        }
        if negative_label.as_deref() == Some(positive_label.as_str()) {
            return Err(DatasetError::InvalidSchema(
                "positive and negative labels coincide".into(),
            ));
        }
        let (feature_names, kinds) = features.into_iter().unzip();
        Ok(Schema {
            feature_names,
            kinds,
            target_name,
            positive_label,
            negative_label,
        })
    }

    /// Parses the line-oriented schema format:
    ///
    /// ```text
    /// feature <name> categorical <v1,v2,...>
    /// feature <name> numeric
    /// target <name> positive <token> [negative <token>]
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Schema> {
        let mut features = Vec::new();
        let mut target: Option<(String, String, Option<String>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| DatasetError::SchemaParse {
                line: line_no,
                message: message.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["feature", name, "numeric"] => {
                    features.push((name.to_string(), FeatureKind::Numeric));
                }
                ["feature", name, "categorical", values] => {
                    let tokens: Vec<&str> = values.split(',').map(str::trim).collect();
                    if tokens.iter().any(|t| t.is_empty()) {
                        return Err(err("empty categorical value"));
                    }
                    let unique: BTreeSet<&str> = tokens.iter().copied().collect();
                    if unique.len() != tokens.len() {
                        return Err(err("duplicate categorical value"));
                    }
                    features.push((name.to_string(), FeatureKind::categorical(tokens)?));
                }
                ["target", name, "positive", pos] => {
                    if target.is_some() {
                        return Err(err("target declared twice"));
                    }
                    target = Some((name.to_string(), pos.to_string(), None));
                }
                ["target", name, "positive", pos, "negative", neg] => {
                    if target.is_some() {
                        return Err(err("target declared twice"));
                    }
                    target = Some((name.to_string(), pos.to_string(), Some(neg.to_string())));
                }
                _ => return Err(err("expected `feature <name> numeric|categorical <values>` or `target <name> positive <token>`")),
            }
        }
        let (target_name, positive, negative) = target.ok_or(DatasetError::SchemaParse {
            line: text.lines().count(),
            message: "missing target declaration".into(),
        })?;
        if features.is_empty() {
            return Err(DatasetError::InvalidSchema("no features declared".into()));
        }
        Schema::new(features, target_name, positive, negative)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Schema> {
        Schema::parse(&fs::read_to_string(path)?)
    }

    /// Renders the schema back to its text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, kind) in self.feature_names.iter().zip(&self.kinds) {
            match kind {
                FeatureKind::Numeric => out.push_str(&format!("feature {name} numeric\n")),
                FeatureKind::Categorical { domain } => out.push_str(&format!(
                    "feature {name} categorical {}\n",
                    domain.join(",")
                )),
            }
        }
        out.push_str(&format!(
            "target {} positive {}",
            self.target_name, self.positive_label
        ));
        if let Some(neg) = &self.negative_label {
            out.push_str(&format!(" negative {neg}"));
        }
        out.push('\n');
        out
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn kind(&self, feature: usize) -> &FeatureKind {
        &self.kinds[feature]
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn negative_label(&self) -> Option<&str> {
        self.negative_label.as_deref()
    }

    pub fn label_token(&self, label: Label) -> &str {
        match label {
            Label::Positive => &self.positive_label,
            Label::Negative => self.negative_label.as_deref().unwrap_or("negative"),
        }
    }

    /// The same schema with the roles of the two label tokens swapped.
    pub fn flipped(&self) -> Schema {
        Schema {
            feature_names: self.feature_names.clone(),
            kinds: self.kinds.clone(),
            target_name: self.target_name.clone(),
            positive_label: self.label_token(Label::Negative).to_string(),
            negative_label: Some(self.positive_label.clone()),
        }
    }

    /// Domain token of a categorical feature, `None` for numeric features.
    pub fn category_token(&self, feature: usize, index: u32) -> Option<&str> {
        match &self.kinds[feature] {
            FeatureKind::Categorical { domain } => domain.get(index as usize).map(String::as_str),
            FeatureKind::Numeric => None,
        }
    }

    pub fn category_index(&self, feature: usize, token: &str) -> Option<u32> {
        match &self.kinds[feature] {
            FeatureKind::Categorical { domain } => {
                domain.iter().position(|v| v == token).map(|i| i as u32)
            }
            FeatureKind::Numeric => None,
        }
    }

    fn with_negative(&self, negative: String) -> Schema {
        Schema {
            negative_label: Some(negative),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    /// Index into the categorical domain.
    Category(u32),
    Number(f64),
}

impl Value {
    pub fn as_number(self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(v),
            Value::Category(_) => None,
        }
    }

    pub fn as_category(self) -> Option<u32> {
        match self {
            Value::Category(c) => Some(c),
            Value::Number(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<Value>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset after checking every sample against the schema.
    pub fn new(schema: Arc<Schema>, samples: Vec<Sample>) -> Result<Dataset> {
        for (row, s) in samples.iter().enumerate() {
            if s.values.len() != schema.n_features() {
                return Err(DatasetError::RowLength {
                    row: row + 1,
                    expected: schema.n_features(),
                    found: s.values.len(),
                });
            }
            for (f, v) in s.values.iter().enumerate() {
                let column = &schema.feature_names[f];
                match (schema.kind(f), v) {
                    (FeatureKind::Numeric, Value::Number(x)) if x.is_finite() => {}
                    (FeatureKind::Numeric, _) => {
                        return Err(DatasetError::NonFiniteNumeric {
                            row: row + 1,
                            column: column.clone(),
                            cell: format!("{v:?}"),
                        })
                    }
                    (FeatureKind::Categorical { domain }, Value::Category(c))
                        if (*c as usize) < domain.len() => {}
                    (FeatureKind::Categorical { .. }, _) => {
                        return Err(DatasetError::UnknownToken {
                            row: row + 1,
                            column: column.clone(),
                            token: format!("{v:?}"),
                        })
                    }
                }
            }
        }
        Ok(Dataset { schema, samples })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .samples
            .iter()
            .filter(|s| s.label.is_positive())
            .count();
        (pos, self.samples.len() - pos)
    }

    /// Errors unless both classes have at least `min_per_class` members.
    pub fn require_both_classes(&self, min_per_class: usize) -> Result<()> {
        let (pos, neg) = self.class_counts();
        for (label, count) in [(Label::Positive, pos), (Label::Negative, neg)] {
            if count < min_per_class {
                return Err(DatasetError::TooFewInClass {
                    label,
                    count,
                    needed: min_per_class,
                });
            }
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Same samples with labels negated and label tokens swapped in the schema.
    pub fn flipped(&self) -> Dataset {
        Dataset {
            schema: Arc::new(self.schema.flipped()),
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    values: s.values.clone(),
                    label: s.label.flipped(),
                })
                .collect(),
        }
    }

    /// Cell rendering used by CSV output and reports.
    pub fn render_value(&self, feature: usize, value: Value) -> String {
        match value {
            Value::Category(c) => self
                .schema
                .category_token(feature, c)
                .unwrap_or("?")
                .to_string(),
            Value::Number(x) => format!("{x}"),
        }
    }

    /// Reads a CSV whose header lists every schema feature plus the target
    /// column (any order). Row numbers in errors are 1-based data rows.
    pub fn read_csv<R: Read>(reader: R, schema: Schema) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let position: HashMap<&str, usize> =
            headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
        let mut feature_cols = Vec::with_capacity(schema.n_features());
        for name in &schema.feature_names {
            feature_cols.push(
                *position
                    .get(name.as_str())
                    .ok_or_else(|| DatasetError::MissingColumn(name.clone()))?,
            );
        }
        let target_col = *position
            .get(schema.target_name.as_str())
            .ok_or_else(|| DatasetError::MissingColumn(schema.target_name.clone()))?;
        if headers.len() != schema.n_features() + 1 {
            let known: BTreeSet<&str> = schema
                .feature_names
                .iter()
                .map(String::as_str)
                .chain([schema.target_name.as_str()])
                .collect();
            let extra = headers
                .iter()
                .find(|h| !known.contains(h))
                .unwrap_or("<duplicate>");
            return Err(DatasetError::UnexpectedColumn(extra.to_string()));
        }

        let mut negative = schema.negative_label.clone();
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            if record.len() != headers.len() {
                return Err(DatasetError::RowLength {
                    row,
                    expected: headers.len(),
                    found: record.len(),
                });
            }
            let mut values = Vec::with_capacity(schema.n_features());
            for (f, &col) in feature_cols.iter().enumerate() {
                let cell = &record[col];
                let column = &schema.feature_names[f];
                if cell.is_empty() || cell == "?" || cell.eq_ignore_ascii_case("na") {
                    return Err(DatasetError::MissingValue {
                        row,
                        column: column.clone(),
                    });
                }
                let value = match schema.kind(f) {
                    FeatureKind::Numeric => match cell.parse::<f64>() {
                        Ok(x) if x.is_finite() => Value::Number(x),
                        _ => {
                            return Err(DatasetError::NonFiniteNumeric {
                                row,
                                column: column.clone(),
                                cell: cell.to_string(),
                            })
                        }
                    },
                    FeatureKind::Categorical { .. } => {
                        Value::Category(schema.category_index(f, cell).ok_or_else(|| {
                            DatasetError::UnknownToken {
                                row,
                                column: column.clone(),
                                token: cell.to_string(),
                            }
                        })?)
                    }
                };
                values.push(value);
            }
            let token = &record[target_col];
            let label = if token == schema.positive_label {
                Label::Positive
            } else {
                match &negative {
                    Some(neg) if neg == token => Label::Negative,
                    Some(_) => {
                        return Err(DatasetError::UnknownLabel {
                            row,
                            token: token.to_string(),
                        })
                    }
                    None if token.is_empty() => {
                        return Err(DatasetError::UnknownLabel {
                            row,
                            token: String::new(),
                        })
                    }
                    None => {
                        negative = Some(token.to_string());
                        Label::Negative
                    }
                }
            };
            samples.push(Sample { values, label });
        }
        let schema = match negative {
            Some(neg) if schema.negative_label.is_none() => schema.with_negative(neg),
            _ => schema,
        };
        Ok(Dataset {
            schema: Arc::new(schema),
            samples,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
        let schema = Schema::from_path(schema_path)?;
        let file = fs::File::open(path)?;
        Dataset::read_csv(file, schema)
    }

    /// Writes features in schema order followed by the target column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<&str> = self
            .schema
            .feature_names
            .iter()
            .map(String::as_str)
            .collect();
        header.push(&self.schema.target_name);
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut record: Vec<String> = s
                .values
                .iter()
                .enumerate()
                .map(|(f, &v)| self.render_value(f, v))
                .collect();
            record.push(self.schema.label_token(s.label).to_string());
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Human-readable schema summary (used by `dataset inspect`).
    pub fn summary(&self) -> String {
        let (pos, neg) = self.class_counts();
        let mut out = format!(
            "samples: {}\ntarget: {} (positive `{}`: {}, negative `{}`: {})\nfeatures: {}\n",
            self.len(),
            self.schema.target_name,
            self.schema.positive_label,
            pos,
            self.schema.label_token(Label::Negative),
            neg,
            self.schema.n_features()
        );
        for (f, (name, kind)) in self
            .schema
            .feature_names
            .iter()
            .zip(&self.schema.kinds)
            .enumerate()
        {
            match kind {
                FeatureKind::Categorical { domain } => {
                    out.push_str(&format!(
                        "  {name}: categorical {{{}}}\n",
                        domain.join(", ")
                    ));
                }
                FeatureKind::Numeric => {
                    let vals = self.samples.iter().filter_map(|s| s.values[f].as_number());
                    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                    out.push_str(&format!("  {name}: numeric [{lo}, {hi}]\n"));
                }
            }
        }
        out
    }
}

/// What a binarized column encodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// 0/1 indicator for `feature == domain[value]`.
    Indicator { feature: usize, value: u32 },
    /// Numeric passthrough, optionally standardized.
    Numeric { feature: usize },
}

impl Column {
    pub fn feature(&self) -> usize {
        match *self {
            Column::Indicator { feature, .. } | Column::Numeric { feature } => feature,
        }
    }
}

/// Column layout plus the numeric scaling recorded at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    schema: Arc<Schema>,
    columns: Vec<Column>,
    names: Vec<String>,
    /// `(mean, std)` per column; `None` for indicators and for unscaled numerics.
    scaling: Vec<Option<(f64, f64)>>,
}

impl Encoding {
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn scaling(&self) -> &[Option<(f64, f64)>] {
        &self.scaling
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn encode(&self, sample: &Sample) -> Vec<f64> {
        self.columns
            .iter()
            .zip(&self.scaling)
            .map(|(col, scale)| match *col {
                Column::Indicator { feature, value } => {
                    if sample.values[feature] == Value::Category(value) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Column::Numeric { feature } => {
                    let x = sample.values[feature].as_number().unwrap_or(f64::NAN);
                    match scale {
                        Some((mean, std)) => (x - mean) / std,
                        None => x,
                    }
                }
            })
            .collect()
    }

    pub fn encode_all(&self, data: &Dataset) -> Vec<Vec<f64>> {
        data.samples().iter().map(|s| self.encode(s)).collect()
    }

    /// Maps an encoded numeric column value back to original units.
    pub fn decode_numeric(&self, column: usize, encoded: f64) -> f64 {
        match self.scaling[column] {
            Some((mean, std)) => encoded * std + mean,
            None => encoded,
        }
    }

    /// Line-oriented scaling record: `scale <column> <mean> <std>` for every
    /// standardized numeric column. Reals use 17 significant digits.
    pub fn scaling_text(&self) -> String {
        let mut out = String::from("encoding v1\n");
        for (name, scale) in self.names.iter().zip(&self.scaling) {
            if let Some((mean, std)) = scale {
                out.push_str(&format!("scale {name} {mean:.16e} {std:.16e}\n"));
            }
        }
        out
    }

    /// Rebuilds an encoding for `schema` from [`Encoding::scaling_text`].
    pub fn from_scaling_text(schema: Arc<Schema>, text: &str) -> Result<Encoding> {
        let (columns, names) = layout(&schema);
        let mut scaling = vec![None; columns.len()];
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "encoding v1" => {}
            _ => {
                return Err(DatasetError::SchemaParse {
                    line: 1,
                    message: "expected `encoding v1`".into(),
                })
            }
        }
        for (i, line) in lines {
            let bad = |message: String| DatasetError::SchemaParse {
                line: i + 1,
                message,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let [kw, name, mean, std] = toks[..] else {
                return Err(bad("expected `scale <column> <mean> <std>`".into()));
            };
            if kw != "scale" {
                return Err(bad(format!("unknown keyword `{kw}`")));
            }
            let col = names
                .iter()
                .position(|n| n == name)
                .filter(|&c| matches!(columns[c], Column::Numeric { .. }))
                .ok_or_else(|| bad(format!("`{name}` is not a numeric column")))?;
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| bad(format!("invalid number `{t}`")))
            };
            scaling[col] = Some((num(mean)?, num(std)?));
        }
        Ok(Encoding {
            schema,
            columns,
            names,
            scaling,
        })
    }

    /// Renders the raw value of `sample` behind `column`.
    pub fn describe_value(&self, column: usize, sample: &Sample) -> String {
        let f = self.columns[column].feature();
        match sample.values[f] {
            Value::Category(c) => self.schema.category_token(f, c).unwrap_or("?").to_string(),
            Value::Number(x) => format!("{x}"),
        }
    }
}

/// One-hot encoded, optionally standardized design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedMatrix {
    pub encoding: Encoding,
    pub rows: Vec<Vec<f64>>,
}

impl BinarizedMatrix {
    pub fn column_map(&self) -> &[Column] {
        self.encoding.columns()
    }

    pub fn numeric_scaling(&self) -> &[Option<(f64, f64)>] {
        self.encoding.scaling()
    }

    pub fn width(&self) -> usize {
        self.encoding.width()
    }
}

fn layout(schema: &Schema) -> (Vec<Column>, Vec<String>) {
    let mut columns = Vec::new();
    let mut names = Vec::new();
    for (f, (name, kind)) in schema
        .feature_names()
        .iter()
        .zip(schema.kinds())
        .enumerate()
    {
        match kind {
            FeatureKind::Categorical { domain } => {
                for (v, token) in domain.iter().enumerate() {
                    columns.push(Column::Indicator {
                        feature: f,
                        value: v as u32,
                    });
                    names.push(format!("{name}_{token}"));
                }
            }
            FeatureKind::Numeric => {
                columns.push(Column::Numeric { feature: f });
                names.push(name.clone());
            }
        }
    }
    (columns, names)
}

/// One indicator column per (categorical feature, domain value), one column
/// per numeric feature. Standardization uses the population std; a
/// zero-variance column is left unscaled with std recorded as 1.
pub fn binarize(data: &Dataset, standardize_numeric: bool) -> BinarizedMatrix {
    let schema = data.schema();
    let (columns, names) = layout(schema);
    let scaling = columns
        .iter()
        .map(|col| match *col {
            Column::Numeric { feature } if standardize_numeric && !data.is_empty() => {
                let n = data.len() as f64;
                let vals: Vec<f64> = data
                    .samples()
                    .iter()
                    .filter_map(|s| s.values[feature].as_number())
                    .collect();
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let std = var.sqrt();
                if std > 0.0 {
                    Some((mean, std))
                } else {
                    warn!(
                        "numeric feature `{}` has zero variance; left unscaled",
                        schema.feature_names()[feature]
                    );
                    Some((0.0, 1.0))
                }
            }
            _ => None,
        })
        .collect();
    let encoding = Encoding {
        schema: data.schema_arc(),
        columns,
        names,
        scaling,
    };
    let rows = encoding.encode_all(data);
    BinarizedMatrix { encoding, rows }
}

fn shuffled(mut idx: Vec<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    idx.shuffle(rng);
    idx
}

fn class_indices(data: &Dataset) -> [Vec<usize>; 2] {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, s) in data.samples().iter().enumerate() {
        if s.label.is_positive() {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    [pos, neg]
}

/// Index sets of a stratified split; both keep the original row order.
pub fn split_indices(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    data.require_both_classes(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in class_indices(data) {
        let n = class.len();
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        let order = shuffled(class, &mut rng);
        test.extend_from_slice(&order[..n_test]);
        train.extend_from_slice(&order[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified, seeded train/test split.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data, test_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// Stratified k-fold assignment: returns `(train, test)` index pairs.
pub fn stratified_folds(
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(DatasetError::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    data.require_both_classes(k)?;
    Ok(stratified_fold_indices(&data.labels(), k, seed))
}

/// Fold assignment over a bare label vector; classes smaller than `k` simply
/// leave some folds without members of that class.
pub fn stratified_fold_indices(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let k = k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    for class in [Label::Positive, Label::Negative] {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        for (pos, i) in shuffled(members, &mut rng).into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    (0..k)
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| fold_of[i] == fold);
            (train, test)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn color_schema() -> Schema {
        Schema::parse(
            "feature color categorical r,b\nfeature size numeric\ntarget label positive yes\n",
        )
        .unwrap()
    }

    fn balanced(n_pos: usize, n_neg: usize) -> Dataset {
        let schema = Arc::new(
            Schema::new(
                vec![("x".into(), FeatureKind::Numeric)],
                "y",
                "p",
                Some("n".into()),
            )
            .unwrap(),
        );
        let samples = (0..n_pos + n_neg)
            .map(|i| Sample {
                values: vec![Value::Number(i as f64)],
                label: if i < n_pos {
                    Label::Positive
                } else {
                    Label::Negative
                },
            })
            .collect();
        Dataset::new(schema, samples).unwrap()
    }

    #[test]
    fn loads_small_csv() {
        let csv = "color,size,label\nr,1.5,yes\nb,2,no\nr,-3,yes\n";
        let d = Dataset::read_csv(csv.as_bytes(), color_schema()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(
            d.labels(),
            vec![Label::Positive, Label::Negative, Label::Positive]
        );
        // domain sorted: b < r
        assert_eq!(d.samples()[0].values[0], Value::Category(1));
        assert_eq!(d.schema().negative_label(), Some("no"));
    }

    #[test]
    fn unknown_token_reports_position() {
        let csv = "color,size,label\nr,1,yes\ngreen,2,no\n";
        match Dataset::read_csv(csv.as_bytes(), color_schema()) {
            Err(DatasetError::UnknownToken { row, column, token }) => {
                assert_eq!(
                    (row, column.as_str(), token.as_str()),
                    (2, "color", "green")
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_cells_and_labels() {
        let missing_col = "color,label\nr,yes\n";
        assert!(matches!(
            Dataset::read_csv(missing_col.as_bytes(), color_schema()),
            Err(DatasetError::MissingColumn(c)) if c == "size"
        ));
        let nan = "color,size,label\nr,NaN,yes\n";
        assert!(matches!(
            Dataset::read_csv(nan.as_bytes(), color_schema()),
            Err(DatasetError::NonFiniteNumeric { row: 1, .. })
        ));
        let missing = "color,size,label\nr,,yes\n";
        assert!(matches!(
            Dataset::read_csv(missing.as_bytes(), color_schema()),
            Err(DatasetError::MissingValue { row: 1, .. })
        ));
        let third = "color,size,label\nr,1,yes\nb,1,no\nb,2,maybe\n";
        assert!(matches!(
            Dataset::read_csv(third.as_bytes(), color_schema()),
            Err(DatasetError::UnknownLabel { row: 3, .. })
        ));
    }

    #[test]
    fn schema_parse_errors() {
        assert!(matches!(
            Schema::parse("feature a numeric\n"),
            Err(DatasetError::SchemaParse { .. })
        ));
        assert!(matches!(
            Schema::parse("feature a numeric\nfeature a numeric\ntarget t positive y\n"),
            Err(DatasetError::InvalidSchema(_))
        ));
        assert!(matches!(
            Schema::parse("feature a numeric\ntarget a positive y\n"),
            Err(DatasetError::InvalidSchema(_))
        ));
        assert!(matches!(
            Schema::parse("feature a categorical x,x\ntarget t positive y\n"),
            Err(DatasetError::SchemaParse { line: 1, .. })
        ));
        let s =
            Schema::parse("# c\n\nfeature a categorical z,b,c\ntarget t positive y negative n\n")
                .unwrap();
        assert_eq!(
            s.kind(0),
            &FeatureKind::Categorical {
                domain: vec!["b".into(), "c".into(), "z".into()]
            }
        );
        assert_eq!(Schema::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn binarize_chest_pain() {
        let schema = Schema::parse(
            "feature chest_pain categorical 1,2,3,4\nfeature age numeric\ntarget hd positive yes\n",
        )
        .unwrap();
        let csv = "chest_pain,age,hd\n4,50,yes\n1,60,no\n";
        let d = Dataset::read_csv(csv.as_bytes(), schema).unwrap();
        let m = binarize(&d, false);
        assert_eq!(
            m.encoding.column_names(),
            &[
                "chest_pain_1",
                "chest_pain_2",
                "chest_pain_3",
                "chest_pain_4",
                "age"
            ]
        );
        assert_eq!(m.rows[0], vec![0.0, 0.0, 0.0, 1.0, 50.0]);
        assert_eq!(m.rows[1], vec![1.0, 0.0, 0.0, 0.0, 60.0]);
    }

    #[test]
    fn standardizes_with_population_std() {
        let d = balanced(2, 1); // x = 0, 1, 2
        let m = binarize(&d, true);
        let (mean, std) = m.numeric_scaling()[0].unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(std, (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        // [1,2,3] shifted by one gives the same scaled column
        let col: Vec<f64> = m.rows.iter().map(|r| r[0]).collect();
        for (got, want) in col.iter().zip([-1.224744871391589, 0.0, 1.224744871391589]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(m.encoding.decode_numeric(0, col[2]), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn scaling_text_round_trip() {
        let d = Dataset::read_csv(
            "color,size,label\nr,1.5,yes\nb,2,no\nr,-3,yes\n".as_bytes(),
            color_schema(),
        )
        .unwrap();
        let m = binarize(&d, true);
        let text = m.encoding.scaling_text();
        let back = Encoding::from_scaling_text(d.schema_arc(), &text).unwrap();
        assert_eq!(back, m.encoding);
        assert!(
            Encoding::from_scaling_text(d.schema_arc(), "encoding v1\nscale color_r 0 1\n")
                .is_err()
        );
        assert!(Encoding::from_scaling_text(d.schema_arc(), "scale size 0 1\n").is_err());
    }

    #[test]
    fn zero_variance_column_left_unscaled() {
        let schema = Arc::new(
            Schema::new(vec![("x".into(), FeatureKind::Numeric)], "y", "p", None).unwrap(),
        );
        let samples = (0..3)
            .map(|_| Sample {
                values: vec![Value::Number(5.0)],
                label: Label::Positive,
            })
            .collect();
        let d = Dataset::new(schema, samples).unwrap();
        let m = binarize(&d, true);
        assert_eq!(m.numeric_scaling()[0], Some((0.0, 1.0)));
        assert_eq!(m.rows[0][0], 5.0);
    }

    #[test]
    fn stratified_split_counts() {
        let d = balanced(5, 5);
        let (train, test) = split(&d, 0.2, 7).unwrap();
        assert_eq!(test.class_counts(), (1, 1));
        assert_eq!(train.class_counts(), (4, 4));
        let again = split(&d, 0.2, 7).unwrap();
        assert_eq!(again.1, test);

        let small = balanced(2, 2);
        let (_, test) = split(&small, 0.5, 1).unwrap();
        assert_eq!(test.class_counts(), (1, 1));
    }

    #[test]
    fn split_needs_two_per_class() {
        let d = balanced(1, 5);
        assert!(matches!(
            split(&d, 0.3, 0),
            Err(DatasetError::TooFewInClass {
                label: Label::Positive,
                ..
            })
        ));
        assert!(split(&balanced(3, 3), 1.0, 0).is_err());
    }

    #[test]
    fn folds_partition_rows() {
        let d = balanced(7, 9);
        let folds = stratified_folds(&d, 4, 3).unwrap();
        let mut seen = vec![0; d.len()];
        for (train, test) in &folds {
            assert_eq!(train.len() + test.len(), d.len());
            for &i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
