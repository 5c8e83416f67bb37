//! CSV tables: ground truth, predictions, tags, pair lists, durations and
//! curve/match exports.
//!
//! All tables use `,` separators, `.` decimals, `\n` line ends and a fixed
//! header. Floats are written in their shortest round-trip representation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::PRCurve;
use crate::model::{
    DetectionPrediction, GroundTruth, GtBox, LocalizationPrediction, SegmentBox, TransformTag,
    VideoId, VideoPair,
};
use crate::search::FrameMatch;

pub const GROUND_TRUTH_HEADER: &[&str] =
    &["query_id", "ref_id", "query_start", "query_end", "ref_start", "ref_end"];
pub const DETECTION_HEADER: &[&str] = &["query_id", "ref_id", "score"];
pub const LOCALIZATION_HEADER: &[&str] = &[
    "query_id",
    "ref_id",
    "query_start",
    "query_end",
    "ref_start",
    "ref_end",
    "score",
];
pub const TAGS_HEADER: &[&str] = &["query_id", "transforms", "n_transforms"];
pub const PAIRS_HEADER: &[&str] = &["query_id", "ref_id"];
pub const DURATIONS_HEADER: &[&str] = &["video_id", "duration"];
pub const MATCHES_HEADER: &[&str] =
    &["query_id", "query_frame", "ref_id", "ref_frame", "similarity"];
pub const CURVE_HEADER: &[&str] = &["rank", "threshold", "precision", "recall"];

/// Separator between transform names inside the `transforms` column.
pub const TAG_SEPARATOR: char = ';';

struct Row {
    line: u64,
    record: csv::StringRecord,
}

impl Row {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::validation(format!("line {}: {msg}", self.line))
    }

    fn field(&self, i: usize) -> &str {
        &self.record[i]
    }

    fn id(&self, i: usize) -> Result<VideoId> {
        VideoId::parse(self.field(i)).map_err(|e| self.err(e))
    }

    fn query(&self, i: usize) -> Result<VideoId> {
        VideoId::query(self.field(i)).map_err(|e| self.err(e))
    }

    fn reference(&self, i: usize) -> Result<VideoId> {
        VideoId::reference(self.field(i)).map_err(|e| self.err(e))
    }

    fn float(&self, i: usize) -> Result<f64> {
        let raw = self.field(i).trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(format!("cannot parse {raw:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite value {raw:?}")));
        }
        Ok(v)
    }

    fn count(&self, i: usize) -> Result<usize> {
        let raw = self.field(i).trim();
        raw.parse()
            .map_err(|_| self.err(format!("cannot parse {raw:?} as a count")))
    }

    fn segment_box(&self, first: usize) -> Result<SegmentBox> {
        SegmentBox::new(
            self.float(first)?,
            self.float(first + 1)?,
            self.float(first + 2)?,
            self.float(first + 3)?,
        )
        .map_err(|e| self.err(e))
    }
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(Row { line, record });
    }
    Ok(rows)
}

fn create(path: &Path, header: &[&str]) -> Result<BufWriter<File>> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    Ok(out)
}

fn finish(out: BufWriter<File>) -> Result<()> {
    let file = out.into_inner().map_err(|e| e.into_error())?;
    file.sync_all()?;
    Ok(())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let boxes = read_rows(path.as_ref(), GROUND_TRUTH_HEADER)?
        .iter()
        .map(|row| {
            Ok(GtBox {
                query: row.query(0)?,
                reference: row.reference(1)?,
                bbox: row.segment_box(2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GroundTruth::new(boxes)
}

pub fn write_ground_truth(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    let mut out = create(path.as_ref(), GROUND_TRUTH_HEADER)?;
    for b in gt.boxes() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.query,
            b.reference,
            b.bbox.query_start(),
            b.bbox.query_end(),
            b.bbox.ref_start(),
            b.bbox.ref_end()
        )?;
    }
    finish(out)
}

pub fn read_detection_predictions(path: impl AsRef<Path>) -> Result<Vec<DetectionPrediction>> {
    read_rows(path.as_ref(), DETECTION_HEADER)?
        .iter()
        .map(|row| {
            DetectionPrediction::new(row.query(0)?, row.reference(1)?, row.float(2)?)
                .map_err(|e| row.err(e))
        })
        .collect()
}

pub fn write_detection_predictions(
    path: impl AsRef<Path>,
    preds: &[DetectionPrediction],
) -> Result<()> {
    let mut out = create(path.as_ref(), DETECTION_HEADER)?;
    for p in preds {
        writeln!(out, "{},{},{}", p.query, p.reference, p.score)?;
    }
    finish(out)
}

pub fn read_localization_predictions(
    path: impl AsRef<Path>,
) -> Result<Vec<LocalizationPrediction>> {
    read_rows(path.as_ref(), LOCALIZATION_HEADER)?
        .iter()
        .map(|row| {
            LocalizationPrediction::new(
                row.query(0)?,
                row.reference(1)?,
                row.segment_box(2)?,
                row.float(6)?,
            )
            .map_err(|e| row.err(e))
        })
        .collect()
}

pub fn write_localization_predictions(
    path: impl AsRef<Path>,
    preds: &[LocalizationPrediction],
) -> Result<()> {
    let mut out = create(path.as_ref(), LOCALIZATION_HEADER)?;
    for p in preds {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.query,
            p.reference,
            p.bbox.query_start(),
            p.bbox.query_end(),
            p.bbox.ref_start(),
            p.bbox.ref_end(),
            p.score
        )?;
    }
    finish(out)
}

pub fn read_tags(path: impl AsRef<Path>) -> Result<Vec<TransformTag>> {
    read_rows(path.as_ref(), TAGS_HEADER)?
        .iter()
        .map(|row| {
            let query = row.query(0)?;
            let names: Vec<&str> = row
                .field(1)
                .split(TAG_SEPARATOR)
                .filter(|s| !s.is_empty())
                .collect();
            let tag = TransformTag::new(query, names);
            let declared = row.count(2)?;
            if declared != tag.n_transforms {
                return Err(row.err(format!(
                    "n_transforms {declared} disagrees with {} listed transforms",
                    tag.n_transforms
                )));
            }
            Ok(tag)
        })
        .collect()
}

pub fn write_tags(path: impl AsRef<Path>, tags: &[TransformTag]) -> Result<()> {
    let mut out = create(path.as_ref(), TAGS_HEADER)?;
    for t in tags {
        if let Some(bad) = t
            .tags
            .iter()
            .find(|n| n.contains([TAG_SEPARATOR, ',', '"', '\n', '\r']))
        {
            return Err(Error::validation(format!("transform name {bad:?} is not writable")));
        }
        let joined: Vec<&str> = t.tags.iter().map(String::as_str).collect();
        writeln!(
            out,
            "{},{},{}",
            t.query,
            joined.join(&TAG_SEPARATOR.to_string()),
            t.n_transforms
        )?;
    }
    finish(out)
}

/// Reads a `query_id,ref_id` pair list (candidates, hard negatives).
pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<VideoPair>> {
    read_rows(path.as_ref(), PAIRS_HEADER)?
        .iter()
        .map(|row| Ok((row.query(0)?, row.reference(1)?)))
        .collect()
}

pub fn write_pairs(path: impl AsRef<Path>, pairs: &[VideoPair]) -> Result<()> {
    let mut out = create(path.as_ref(), PAIRS_HEADER)?;
    for (q, r) in pairs {
        writeln!(out, "{q},{r}")?;
    }
    finish(out)
}

pub fn read_durations(path: impl AsRef<Path>) -> Result<BTreeMap<VideoId, f64>> {
    let mut out = BTreeMap::new();
    for row in read_rows(path.as_ref(), DURATIONS_HEADER)? {
        let id = row.id(0)?;
        let d = row.float(1)?;
        if d < 0.0 {
            return Err(row.err(format!("negative duration {d}")));
        }
        if out.insert(id.clone(), d).is_some() {
            return Err(row.err(format!("duplicate duration for {id}")));
        }
    }
    Ok(out)
}

pub fn write_durations(path: impl AsRef<Path>, durations: &BTreeMap<VideoId, f64>) -> Result<()> {
    let mut out = create(path.as_ref(), DURATIONS_HEADER)?;
    for (id, d) in durations {
        writeln!(out, "{id},{d}")?;
    }
    finish(out)
}

pub fn write_matches(path: impl AsRef<Path>, matches: &[FrameMatch]) -> Result<()> {
    let mut out = create(path.as_ref(), MATCHES_HEADER)?;
    for m in matches {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.query, m.query_frame_idx, m.reference, m.ref_frame_idx, m.similarity
        )?;
    }
    finish(out)
}

pub fn write_curve(path: impl AsRef<Path>, curve: &PRCurve) -> Result<()> {
    let mut out = create(path.as_ref(), CURVE_HEADER)?;
    for p in &curve.points {
        writeln!(out, "{},{},{},{}", p.rank, p.threshold, p.precision, p.recall)?;
    }
    finish(out)
}
