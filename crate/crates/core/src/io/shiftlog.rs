//! Per-frame shift records as CSV: `frame,s,t,score,flags`.

use std::fmt::Write as _;
use std::path::Path;

use crate::align::{AlignmentResult, FrameFlags};
use crate::error::{Error, Result};
use crate::frame::Shift;

pub const HEADER: &str = "frame,s,t,score,flags";

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftRecord {
    pub frame: usize,
    pub s: isize,
    pub t: isize,
    pub score: f64,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShiftLog {
    pub records: Vec<ShiftRecord>,
}

impl ShiftLog {
    pub fn from_result(result: &AlignmentResult) -> Self {
        Self::from_shifts(&result.shifts, Some(&result.flags))
    }

    pub fn from_shifts(shifts: &[Shift], flags: Option<&[FrameFlags]>) -> Self {
        let records = shifts
            .iter()
            .enumerate()
            .map(|(k, sh)| ShiftRecord {
                frame: k,
                s: sh.s,
                t: sh.t,
                score: sh.score,
                flags: flags
                    .map(|f| f[k].tokens().into_iter().map(String::from).collect())
                    .unwrap_or_default(),
            })
            .collect();
        ShiftLog { records }
    }

    pub fn shifts(&self) -> Vec<Shift> {
        self.records
            .iter()
            .map(|r| Shift::new(r.s, r.t, r.score))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.frame,
                r.s,
                r.t,
                format_score(r.score),
                r.flags.join(";")
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::UnsupportedFormat(format!(
                "shift log must start with `{HEADER}`"
            )));
        }
        let bad =
            |n: usize, what: &str| Error::UnsupportedFormat(format!("shift log line {n}: {what}"));
        let mut records = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let n = k + 2;
            let cols: Vec<&str> = line.splitn(5, ',').collect();
            if cols.len() != 5 {
                return Err(bad(n, "expected 5 columns"));
            }
            records.push(ShiftRecord {
                frame: cols[0].parse().map_err(|_| bad(n, "frame"))?,
                s: cols[1].parse().map_err(|_| bad(n, "s"))?,
                t: cols[2].parse().map_err(|_| bad(n, "t"))?,
                score: cols[3].parse().map_err(|_| bad(n, "score"))?,
                flags: cols[4]
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        Ok(ShiftLog { records })
    }
}

/// Fixed-point with 9 significant digits; zero prints as `0.00000000`.
pub fn format_score(v: f64) -> String {
    let exp = if v == 0.0 || !v.is_finite() {
        0
    } else {
        v.abs().log10().floor() as i32
    };
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn write_shift_log(log: &ShiftLog, path: &Path) -> Result<()> {
    std::fs::write(path, log.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn read_shift_log(path: &Path) -> Result<ShiftLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ShiftLog::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(0.0), "0.00000000");
        assert_eq!(format_score(12.3456789), "12.3456789");
        assert_eq!(format_score(0.5), "0.500000000");
        assert_eq!(format_score(123456.789), "123456.789");
    }

    #[test]
    fn rows_and_flags() {
        let mut flags = vec![FrameFlags::default(); 18];
        flags[17].boundary = true;
        let mut shifts = vec![Shift::zero(); 18];
        shifts[17] = Shift::new(4, -2, 12.3456789);
        let log = ShiftLog::from_shifts(&shifts, Some(&flags));
        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 19);
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[1], "0,0,0,0.00000000,");
        assert_eq!(lines[18], "17,4,-2,12.3456789,boundary");
        assert_eq!(ShiftLog::parse(&csv).unwrap(), log);
    }

    #[test]
    fn multiple_flags_join_with_semicolons() {
        let flags = [FrameFlags {
            boundary: true,
            failed: true,
        }];
        let log = ShiftLog::from_shifts(&[Shift::zero()], Some(&flags));
        assert!(log.to_csv().ends_with(",boundary;failed\n"));
        assert!(ShiftLog::parse("nope\n").is_err());
    }
}
