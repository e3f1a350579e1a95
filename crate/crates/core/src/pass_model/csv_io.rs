//! Pass profile CSV interchange.
//!
//! ```text
//! # station=nice epoch=2023-01-02T10:00:00Z step_s=1
//! t_s,distance_m,elevation_deg,radial_velocity_mps,eta,visible
//! 0,1412345.2,21.3,-6512.1,0.0021,1
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{check_sample, PassProfile, PassSample, GRID_TOLERANCE_S};
use crate::{Error, Result};

pub const PROFILE_HEADER: &str = "t_s,distance_m,elevation_deg,radial_velocity_mps,eta,visible";

const COLUMNS: [&str; 6] = [
    "t_s",
    "distance_m",
    "elevation_deg",
    "radial_velocity_mps",
    "eta",
    "visible",
];

pub fn write_profile_to<W: Write>(profile: &PassProfile, out: W) -> Result<()> {
    profile.validate()?;
    let mut out = out;
    writeln!(
        out,
        "# station={} epoch={} step_s={}",
        profile.station,
        profile.epoch.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        profile.sample_step
    )?;
    writeln!(out, "{PROFILE_HEADER}")?;
    // Rust's float Display is the shortest representation that round-trips.
    for s in profile.samples() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.t,
            s.distance,
            s.elevation,
            s.radial_velocity,
            s.eta,
            u8::from(s.visible)
        )?;
    }
    Ok(())
}

/// Writes `profile` to `path` atomically (temporary file then rename).
pub fn write_profile(profile: &PassProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_profile_to(profile, &mut buf)?;
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<PassProfile> {
    read_profile_from(fs::File::open(path)?)
}

pub fn read_profile_from<R: Read>(input: R) -> Result<PassProfile> {
    let mut input = BufReader::new(input);
    let mut meta_line = String::new();
    input.read_line(&mut meta_line)?;
    let (station, epoch, step) = parse_metadata(meta_line.trim_end_matches(['\n', '\r']))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header = reader.headers().map_err(|e| Error::parse(2, "header", e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(Error::parse(
            2,
            "header",
            format!("expected `{PROFILE_HEADER}`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut samples: Vec<PassSample> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            Error::parse(line, "row", e.to_string())
        })?;
        // Positions are relative to the CSV reader, which starts after the metadata line.
        let line = record.position().map_or(0, |p| p.line() as usize) + 1;
        let num = |col: usize| -> Result<f64> {
            record[col]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(line, COLUMNS[col], format!("`{}`: {e}", &record[col])))
        };
        let visible = match record[5].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line, "visible", format!("`{other}` is not 0 or 1"))),
        };
        let sample = PassSample {
            t: num(0)?,
            distance: num(1)?,
            elevation: num(2)?,
            radial_velocity: num(3)?,
            eta: num(4)?,
            visible,
        };
        if let Err(msg) = check_sample(&sample) {
            let column = if msg.starts_with("eta") {
                "eta"
            } else if msg.starts_with("distance") {
                "distance_m"
            } else if msg.starts_with("elevation") {
                "elevation_deg"
            } else if msg.starts_with("radial") {
                "radial_velocity_mps"
            } else {
                "t_s"
            };
            return Err(Error::parse(line, column, msg));
        }
        if let Some(prev) = samples.last() {
            if sample.t <= prev.t {
                return Err(Error::parse(line, "t_s", format!("t = {} does not increase", sample.t)));
            }
            let expected = samples[0].t + samples.len() as f64 * step;
            if (sample.t - expected).abs() > GRID_TOLERANCE_S {
                return Err(Error::parse(
                    line,
                    "t_s",
                    format!("t = {} off the {step} s grid (expected {expected})", sample.t),
                ));
            }
        }
        samples.push(sample);
    }
    PassProfile::new(station, epoch, step, samples)
}

fn parse_metadata(line: &str) -> Result<(String, DateTime<Utc>, f64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(1, "metadata", "expected `# station=... epoch=... step_s=...`"))?;
    let (mut station, mut epoch, mut step) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(1, "metadata", format!("token `{token}` is not key=value")))?;
        match key {
            "station" => station = Some(value.to_string()),
            "epoch" => {
                epoch = Some(
                    DateTime::parse_from_rfc3339(value)
                        .map_err(|e| Error::parse(1, "epoch", format!("`{value}`: {e}")))?
                        .with_timezone(&Utc),
                )
            }
            "step_s" => {
                let v: f64 = value
                    .parse()
                    .map_err(|e| Error::parse(1, "step_s", format!("`{value}`: {e}")))?;
                if !(v > 0.0) {
                    return Err(Error::parse(1, "step_s", "step must be > 0"));
                }
                step = Some(v)
            }
            other => return Err(Error::parse(1, "metadata", format!("unknown key `{other}`"))),
        }
    }
    match (station, epoch, step) {
        (Some(s), Some(e), Some(st)) => Ok((s, e, st)),
        _ => Err(Error::parse(1, "metadata", "station, epoch and step_s are all required")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "# station=nice epoch=2023-01-02T10:00:00Z step_s=1
t_s,distance_m,elevation_deg,radial_velocity_mps,eta,visible
0,1200000,19.5,-6500,0,0
1,1190000,20.1,-6490,0.002,1
2,1180000,20.7,-6480,0.0021,1
";

    fn read(s: &str) -> Result<PassProfile> {
        read_profile_from(s.as_bytes())
    }

    #[test]
    fn reads_well_formed_file() {
        let p = read(GOOD).unwrap();
        assert_eq!(p.station, "nice");
        assert_eq!(p.len(), 3);
        assert!(!p.samples()[0].visible);
        assert_eq!(p.samples()[2].eta, 0.0021);
    }

    #[test]
    fn writes_exact_header_and_metadata() {
        let p = read(GOOD).unwrap();
        let mut buf = Vec::new();
        write_profile_to(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# station=nice epoch=2023-01-02T10:00:00Z step_s=1"));
        assert_eq!(lines.next(), Some(PROFILE_HEADER));
        assert_eq!(lines.next(), Some("0,1200000,19.5,-6500,0,0"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn decreasing_time_cites_row() {
        let bad = GOOD.replace("2,1180000", "0.5,1180000");
        match read(&bad) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(column, "t_s");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta_out_of_range() {
        let bad = GOOD.replace("0.002,1", "1.2,1");
        match read(&bad) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(column, "eta");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_header_and_metadata() {
        assert!(matches!(
            read(&GOOD.replace("eta,visible", "eta,vis")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(read(&GOOD.replace("# station", "station")), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read(&GOOD.replace("step_s=1", "step_s=x")), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read(&GOOD.replace(",1\n2", ",yes\n2")), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(
            read(&GOOD.replace("1190000", "abc")),
            Err(Error::Parse { line: 4, ref column, .. }) if column == "distance_m"
        ));
    }

    #[test]
    fn dark_visible_flag_mismatch() {
        let bad = GOOD.replace("19.5,-6500,0,0", "19.5,-6500,0.1,0");
        assert!(matches!(read(&bad), Err(Error::Parse { line: 3, .. })));
    }
}
