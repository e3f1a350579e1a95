use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::{Round, SimResult};
use crate::{Error, Result};

pub const SIM_CSV_HEADER: &str = "bin_start_s,pairs_legA,pairs_legB,pairs_end_to_end";

/// Recorded rounds of one run, enough to rebuild its counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub engine_version: String,
    pub seed: u64,
    pub rounds: Vec<Round>,
}

#[derive(Serialize, Deserialize)]
struct LogHeader {
    engine_version: String,
    seed: u64,
    rounds: usize,
}

pub fn write_sim_csv<W: Write>(result: &SimResult, mut out: W) -> Result<()> {
    writeln!(out, "{SIM_CSV_HEADER}")?;
    for (i, b) in result.bins.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            result.bin_start(i),
            b.legs[0],
            b.legs[1],
            b.end_to_end
        )?;
    }
    Ok(())
}

/// Per-bin counts read back from a result CSV:
/// `(bin_start, [leg A, leg B], end_to_end)`.
pub fn read_sim_csv<R: Read>(input: R) -> Result<Vec<(f64, [u64; 2], u64)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != SIM_CSV_HEADER {
        return Err(Error::parse(1, "header", format!("expected `{SIM_CSV_HEADER}`")));
    }
    let columns: Vec<&str> = SIM_CSV_HEADER.split(',').collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let int = |c: usize| -> Result<u64> {
            record[c]
                .parse()
                .map_err(|e| Error::parse(line, columns[c], format!("`{}`: {e}", &record[c])))
        };
        let start: f64 = record[0]
            .parse()
            .map_err(|e| Error::parse(line, columns[0], format!("`{}`: {e}", &record[0])))?;
        rows.push((start, [int(1)?, int(2)?], int(3)?));
    }
    Ok(rows)
}

/// Newline-delimited JSON: a header record, then one record per round.
pub fn write_round_log<W: Write>(log: &RoundLog, mut out: W) -> Result<()> {
    let header = LogHeader {
        engine_version: log.engine_version.clone(),
        seed: log.seed,
        rounds: log.rounds.len(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for r in &log.rounds {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_round_log<R: Read>(input: R) -> Result<RoundLog> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Replay("empty round log".into()))??;
    let header: LogHeader = serde_json::from_str(&first)
        .map_err(|e| Error::parse(1, "header", e.to_string()))?;
    let mut rounds = Vec::with_capacity(header.rounds);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        rounds.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 2, "round", e.to_string()))?);
    }
    if rounds.len() != header.rounds {
        return Err(Error::Replay(format!(
            "header announces {} rounds, found {}",
            header.rounds,
            rounds.len()
        )));
    }
    Ok(RoundLog {
        engine_version: header.engine_version,
        seed: header.seed,
        rounds,
    })
}
