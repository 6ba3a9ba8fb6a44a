//! `labels.csv`: one row of five wellbeing scores per participant and report date.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{Label, WellbeingLabels};
use crate::error::{Error, Result};
use crate::util::{fmt_num, parse_date};

pub const LABELS_FILE: &str = "labels.csv";

/// Scores reported on `date`; they describe the wellbeing that follows the
/// features of `date - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub participant_id: String,
    pub date: NaiveDate,
    pub labels: WellbeingLabels,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    participant_id: String,
    date: String,
    alertness: f64,
    happiness: f64,
    energy: f64,
    health: f64,
    stress: f64,
}

pub fn write_labels_csv<W: std::io::Write>(out: W, records: &[LabelRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["participant_id", "date"];
    header.extend(Label::ALL.iter().map(|l| l.as_str()));
    w.write_record(&header)?;
    for r in records {
        let mut rec = vec![r.participant_id.clone(), r.date.to_string()];
        rec.extend(r.labels.0.iter().map(|v| fmt_num(*v)));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRecord>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let values = [row.alertness, row.happiness, row.energy, row.health, row.stress];
        if let Some(v) = values.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::Data(format!(
                "{} row {}: label {v} outside 0-100",
                path.display(),
                i + 2
            )));
        }
        out.push(LabelRecord {
            date: parse_date(&row.date)?,
            participant_id: row.participant_id,
            labels: WellbeingLabels(values),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![LabelRecord {
            participant_id: "N01".into(),
            date: parse_date("2020-01-02").unwrap(),
            labels: WellbeingLabels([38.0, 57.5, 54.0, 63.0, 100.0]),
        }];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(LABELS_FILE);
        let mut buf = Vec::new();
        write_labels_csv(&mut buf, &recs).unwrap();
        std::fs::write(&p, buf).unwrap();
        assert_eq!(read_labels_csv(&p).unwrap(), recs);
    }

    #[test]
    fn rejects_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(LABELS_FILE);
        std::fs::write(
            &p,
            "participant_id,date,alertness,happiness,energy,health,stress\nN01,2020-01-02,101,1,1,1,1\n",
        )
        .unwrap();
        assert!(matches!(read_labels_csv(&p), Err(Error::Data(_))));
    }
}
