use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{Point, Trajectory};
use crate::dataset::sample::sample_id;
use crate::dataset::LetterSample;
use crate::error::{Error, Result};

/// Wire form of one tracing: `{"writer_id": str, "letter": str, "points": [[x, y, t], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub writer_id: String,
    pub letter: String,
    pub points: Vec<[f64; 3]>,
}

impl SampleRecord {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            writer_id: t.writer_id.clone(),
            letter: t.letter.to_string(),
            points: t.points().iter().map(|p| [p.x, p.y, p.t]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<(Vec<LetterSample>, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses records in order. Bad records are reported, not fatal.
pub fn parse_jsonl(reader: impl BufRead) -> Result<(Vec<LetterSample>, LoadReport)> {
    let mut samples = Vec::new();
    let mut report = LoadReport::default();
    let mut seen: HashMap<(String, char), usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(traj) => {
                let key = (traj.writer_id.clone(), traj.letter);
                let occ = seen.entry(key).or_insert(0);
                samples.push(LetterSample::new(sample_id(&traj.writer_id, traj.letter, *occ), traj));
                *occ += 1;
                report.accepted += 1;
            }
            Err(reason) => report.rejected.push(Rejection { line: i + 1, reason }),
        }
    }
    Ok((samples, report))
}

fn parse_record(line: &str) -> std::result::Result<Trajectory, String> {
    let rec: SampleRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let mut chars = rec.letter.chars();
    let letter = match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => c,
        _ => return Err(format!("unsupported letter {:?}", rec.letter)),
    };
    let points = rec.points.iter().map(|&[x, y, t]| Point::new(x, y, t)).collect();
    Trajectory::new(points, rec.writer_id, letter).map_err(|e| e.to_string())
}

pub fn write_jsonl(samples: &[LetterSample], mut out: impl Write) -> Result<()> {
    for s in samples {
        let line = serde_json::to_string(&SampleRecord::from_trajectory(&s.trajectory))
            .map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}
