//! REDD low-frequency layout: `house_<n>/labels.dat` plus one
//! `channel_<k>.dat` file per meter channel, each line `unix_timestamp watts`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::series::{PowerSeries, Reading};
use crate::error::{Error, Result};

pub fn channel_path(house_dir: &Path, channel: u32) -> PathBuf {
    house_dir.join(format!("channel_{channel}.dat"))
}

pub fn labels_path(house_dir: &Path) -> PathBuf {
    house_dir.join("labels.dat")
}

fn channel_id_from_path(path: &Path) -> Option<u32> {
    path.file_stem()?.to_str()?.strip_prefix("channel_")?.parse().ok()
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads one channel file. Consecutive duplicate timestamps keep the last value.
pub fn parse_redd_channel(path: &Path) -> Result<PowerSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut readings: Vec<Reading> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(ts), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(
                path,
                lineno,
                format!("expected `timestamp watts`, got {line:?}"),
            ));
        };
        let timestamp: i64 = ts
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("bad timestamp {ts:?}")))?;
        let watts: f64 = w
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("bad power value {w:?}")))?;
        if !watts.is_finite() || watts < 0.0 {
            return Err(parse_error(
                path,
                lineno,
                format!("power must be finite and >= 0, got {w}"),
            ));
        }
        match readings.last_mut() {
            Some(last) if last.timestamp == timestamp => last.watts = watts,
            Some(last) if last.timestamp > timestamp => {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("timestamp {timestamp} goes backwards (previous {})", last.timestamp),
                ))
            }
            _ => readings.push(Reading { timestamp, watts }),
        }
    }
    let id = channel_id_from_path(path);
    PowerSeries::new(id, "", readings)
}

/// Reads `labels.dat` into channel → appliance name.
pub fn parse_labels(path: &Path) -> Result<BTreeMap<u32, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(ch), Some(name), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(
                path,
                lineno,
                format!("expected `channel name`, got {line:?}"),
            ));
        };
        let ch: u32 = ch
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("bad channel index {ch:?}")))?;
        if out.insert(ch, name.to_string()).is_some() {
            return Err(parse_error(path, lineno, format!("duplicate channel index {ch}")));
        }
    }
    Ok(out)
}

/// Writes a series in channel-file format. `f64` display is the shortest
/// representation that parses back to the same value.
pub fn write_channel(path: &Path, series: &PowerSeries) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in series.readings() {
        writeln!(w, "{} {}", r.timestamp, r.watts).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: &Path, labels: &BTreeMap<u32, String>) -> Result<()> {
    let mut text = String::new();
    for (ch, name) in labels {
        text.push_str(&format!("{ch} {name}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the requested channels of a house directory, reporting every
/// missing file at once.
pub fn read_channels(house_dir: &Path, channels: &[u32]) -> Result<BTreeMap<u32, PowerSeries>> {
    let missing: Vec<String> = channels
        .iter()
        .map(|&c| channel_path(house_dir, c))
        .filter(|p| !p.is_file())
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingChannels {
            dir: house_dir.to_path_buf(),
            missing,
        });
    }
    channels
        .iter()
        .map(|&c| parse_redd_channel(&channel_path(house_dir, c)).map(|s| (c, s)))
        .collect()
}
