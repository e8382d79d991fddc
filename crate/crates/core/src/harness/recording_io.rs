use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{merge_binocular, GazeRecording, RecordingMeta, ScreenGeometry};

/// Columns of one recording file before any conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Second eye, when the file has `x2,y2`.
    pub second_eye: Option<(Vec<f64>, Vec<f64>)>,
}

fn parse_value(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nan") || s.is_empty() {
        return Some(f64::NAN);
    }
    s.parse().ok()
}

pub fn read_trace(path: &Path) -> Result<RawTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let binocular = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "x", "y"] => false,
        ["t", "x", "y", "x2", "y2"] => true,
        _ => return Err(parse_err(1, "header must be t,x,y or t,x,y,x2,y2".into())),
    };
    let mut trace = RawTrace {
        t: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        second_eye: binocular.then(|| (Vec::new(), Vec::new())),
    };
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut vals = [0.0; 5];
        for (i, v) in vals.iter_mut().take(header.len()).enumerate() {
            let f = record.get(i).unwrap_or("");
            *v = parse_value(f).ok_or_else(|| parse_err(line, format!("bad {} value {f:?}", header[i])))?;
        }
        if !vals[0].is_finite() {
            return Err(parse_err(line, "timestamp must be finite".into()));
        }
        trace.t.push(vals[0]);
        trace.x.push(vals[1]);
        trace.y.push(vals[2]);
        if let Some((x2, y2)) = trace.second_eye.as_mut() {
            x2.push(vals[3]);
            y2.push(vals[4]);
        }
    }
    Ok(trace)
}

/// Reads a recording file into degrees. With `geometry`, positions are
/// taken as pixels and converted; binocular files are merged.
pub fn read_recording(
    path: &Path,
    meta: RecordingMeta,
    sampling_rate: f64,
    geometry: Option<&ScreenGeometry>,
) -> Result<GazeRecording> {
    let trace = read_trace(path)?;
    let (mut x, mut y) = match &trace.second_eye {
        Some((x2, y2)) => merge_binocular((&trace.x, &trace.y), (x2, y2))?,
        None => (trace.x, trace.y),
    };
    if let Some(g) = geometry {
        (x, y) = g.convert_trace(&x, &y)?;
    }
    GazeRecording::new(trace.t, x, y, sampling_rate, meta)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        v.to_string()
    }
}

pub fn write_recording(path: &Path, recording: &GazeRecording) -> Result<()> {
    let mut out = String::with_capacity(recording.len() * 32);
    out.push_str("t,x,y\n");
    for i in 0..recording.len() {
        out.push_str(&fmt_value(recording.timestamps[i]));
        out.push(',');
        out.push_str(&fmt_value(recording.x[i]));
        out.push(',');
        out.push_str(&fmt_value(recording.y[i]));
        out.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Round, Task};

    fn meta() -> RecordingMeta {
        RecordingMeta {
            subject_id: 1,
            round: Round(1),
            session: 1,
            task: Task::Tex,
        }
    }

    #[test]
    fn round_trip_with_nan() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rec = GazeRecording::uniform(0.0, vec![0.1, f64::NAN, 0.3], vec![1.0 / 3.0, 2.0, f64::NAN], 250.0, meta()).unwrap();
        write_recording(&p, &rec).unwrap();
        let back = read_recording(&p, meta(), 250.0, None).unwrap();
        assert_eq!(back.timestamps, rec.timestamps);
        assert_eq!(back.x[0], 0.1);
        assert!(back.x[1].is_nan() && back.y[2].is_nan());
        assert_eq!(back.y[0], 1.0 / 3.0);
    }

    #[test]
    fn binocular_merge_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        fs::write(&p, "t,x,y,x2,y2\n0,1,2,3,4\n0.004,NaN,1,1,1\n").unwrap();
        let rec = read_recording(&p, meta(), 250.0, None).unwrap();
        assert_eq!(rec.x[0], 2.0);
        assert_eq!(rec.y[0], 3.0);
        assert!(rec.x[1].is_nan());
        fs::write(&p, "t,x\n0,1\n").unwrap();
        assert!(matches!(read_trace(&p), Err(Error::Parse { line: 1, .. })));
        fs::write(&p, "t,x,y\n0,1,1\n0.004,abc,1\n").unwrap();
        assert!(matches!(read_trace(&p), Err(Error::Parse { line: 3, .. })));
        fs::write(&p, "t,x,y\n0,1,1\n0.1,1,1\n").unwrap();
        assert!(matches!(read_recording(&p, meta(), 250.0, None), Err(Error::Data(_))));
    }
}
