use std::collections::HashMap;
use std::path::Path;

use chrono::Duration;

use crate::domain::{Role, WellbeingLabels};
use crate::error::{Error, Result};
use crate::features::io::{read_bundle, read_features_csv, FEATURES_FILE};
use crate::features::{DailyFeatureVector, FeatureSchema};
use crate::labels::{read_labels_csv, LabelRecord, LABELS_FILE};

/// Feature rows of day d paired with the labels reported on day d+1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<DailyFeatureVector>,
    pub labels: Vec<WellbeingLabels>,
}

impl Dataset {
    /// Rows without a next-day label are dropped.
    pub fn pair(schema: FeatureSchema, features: Vec<DailyFeatureVector>, labels: &[LabelRecord]) -> Result<Self> {
        let by_key: HashMap<(&str, chrono::NaiveDate), &WellbeingLabels> = labels
            .iter()
            .map(|l| ((l.participant_id.as_str(), l.date), &l.labels))
            .collect();
        let mut rows = Vec::new();
        let mut out = Vec::new();
        for f in features {
            if f.values.len() != schema.len() {
                return Err(Error::ShapeMismatch(format!(
                    "feature row has {} values, schema {}",
                    f.values.len(),
                    schema.len()
                )));
            }
            if let Some(l) = by_key.get(&(f.participant_id.as_str(), f.date + Duration::days(1))) {
                out.push(**l);
                rows.push(f);
            }
        }
        Ok(Self { schema, rows, labels: out })
    }

    /// Reads `features.csv` when present, otherwise extracts features from
    /// the raw bundle; labels come from `labels.csv`.
    pub fn load(dir: &Path) -> Result<Self> {
        let schema = FeatureSchema::default();
        let feats = dir.join(FEATURES_FILE);
        let features = if feats.exists() {
            read_features_csv(&feats, &schema)?
        } else {
            read_bundle(dir)?.all_daily_vectors(&schema)?
        };
        let labels = read_labels_csv(&dir.join(LABELS_FILE))?;
        let ds = Self::pair(schema, features, &labels)?;
        if ds.is_empty() {
            return Err(Error::Data(format!(
                "{}: no feature row has a next-day label",
                dir.display()
            )));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn roles(&self) -> Vec<Role> {
        self.rows.iter().map(|r| r.role).collect()
    }

    pub fn participants(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.participant_id.clone()).collect()
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.rows.iter().any(|r| r.role == role)
    }
}
