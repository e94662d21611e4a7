//! CSV and JSON emission of sweep summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::simulation::{SweepRow, SweepSummary};

pub const CSV_HEADER: [&str; 15] = [
    "m",
    "p1",
    "p2",
    "pM",
    "R1",
    "R2",
    "R_duo",
    "R_mono",
    "UA_duo",
    "UA_mono",
    "UA_brand_duo",
    "UA_brand_mono",
    "SW_duo",
    "SW_mono",
    "split_rate",
];

const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One emitted summary line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub m: usize,
    pub p1: f64,
    pub p2: f64,
    #[serde(rename = "pM")]
    pub p_mono: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R_duo")]
    pub r_duo: f64,
    #[serde(rename = "R_mono")]
    pub r_mono: f64,
    #[serde(rename = "UA_duo")]
    pub ua_duo: f64,
    #[serde(rename = "UA_mono")]
    pub ua_mono: f64,
    #[serde(rename = "UA_brand_duo")]
    pub ua_brand_duo: f64,
    #[serde(rename = "UA_brand_mono")]
    pub ua_brand_mono: f64,
    #[serde(rename = "SW_duo")]
    pub sw_duo: f64,
    #[serde(rename = "SW_mono")]
    pub sw_mono: f64,
    pub split_rate: f64,
}

impl From<&SweepRow> for SummaryRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            m: r.m,
            p1: r.p1,
            p2: r.p2,
            p_mono: r.p_mono,
            r1: r.r1,
            r2: r.r2,
            r_duo: r.r_duo,
            r_mono: r.r_mono,
            ua_duo: r.ua_duo,
            ua_mono: r.ua_mono,
            ua_brand_duo: r.ua_brand_duo,
            ua_brand_mono: r.ua_brand_mono,
            sw_duo: r.sw_duo,
            sw_mono: r.sw_mono,
            split_rate: r.split_rate,
        }
    }
}

impl SummaryRecord {
    fn values(&self) -> [f64; 14] {
        [
            self.p1,
            self.p2,
            self.p_mono,
            self.r1,
            self.r2,
            self.r_duo,
            self.r_mono,
            self.ua_duo,
            self.ua_mono,
            self.ua_brand_duo,
            self.ua_brand_mono,
            self.sw_duo,
            self.sw_mono,
            self.split_rate,
        ]
    }
}

/// Formats like C's `%.{digits}g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros dropped.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -5 || exponent >= digits as i32 {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exponent.abs())
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(summary: &SweepSummary, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in &summary.rows {
        let record = SummaryRecord::from(row);
        let mut fields = vec![record.m.to_string()];
        fields.extend(
            record
                .values()
                .iter()
                .map(|&x| format_significant(x, SIGNIFICANT_DIGITS)),
        );
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_json(summary: &SweepSummary) -> String {
    let records: Vec<SummaryRecord> = summary.rows.iter().map(SummaryRecord::from).collect();
    serde_json::to_string_pretty(&records).expect("summary records serialize")
}

pub fn parse_json(text: &str) -> Result<Vec<SummaryRecord>, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn parse_csv(text: &str) -> Result<Vec<SummaryRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

pub fn emit<W: Write>(summary: &SweepSummary, format: Format, mut out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => write_csv(summary, out).map_err(std::io::Error::other),
        Format::Json => {
            out.write_all(to_json(summary).as_bytes())?;
            out.write_all(b"\n")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: usize, x: f64) -> SweepRow {
        SweepRow {
            m,
            p1: x,
            p2: x / 3.0,
            p_mono: 2.0 * x / 3.0,
            r1: 1.0,
            r2: 0.125,
            r_duo: 1.125,
            r_mono: 1e-7,
            ua_duo: 123456789.25,
            ua_mono: 0.0,
            ua_brand_duo: -2.5,
            ua_brand_mono: 1e12,
            sw_duo: 19.999999999,
            sw_mono: 20.0,
            split_rate: 0.5,
            mean_ratio: 0.3,
            errors: 0,
        }
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(200.0 / 11.0, 9), "18.1818182");
        assert_eq!(format_significant(2.5, 9), "2.5");
        assert_eq!(format_significant(0.0, 9), "0");
        assert_eq!(format_significant(1e-7, 9), "1e-07");
        assert_eq!(format_significant(1e12, 9), "1e+12");
        assert_eq!(format_significant(123456789.25, 9), "123456789");
        assert_eq!(format_significant(19.999999999, 9), "20");
        assert_eq!(format_significant(-0.000123456789012, 9), "-0.000123456789");
    }

    #[test]
    fn csv_header_and_rows() {
        let summary = SweepSummary {
            rows: vec![row(1, 1.0), row(2, 19.0)],
        };
        let mut buf = Vec::new();
        write_csv(&summary, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "m,p1,p2,pM,R1,R2,R_duo,R_mono,UA_duo,UA_mono,UA_brand_duo,UA_brand_mono,SW_duo,SW_mono,split_rate"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,1,0.333333333,0.666666667,1,0.125,1.125,1e-07,123456789,0,-2.5,1e+12,20,20,0.5"
        );
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[1].m, 2);
    }

    #[test]
    fn json_round_trip() {
        let summary = SweepSummary {
            rows: vec![row(3, 18.123456789123)],
        };
        let parsed = parse_json(&to_json(&summary)).unwrap();
        let original = SummaryRecord::from(&summary.rows[0]);
        for (a, b) in parsed[0].values().iter().zip(original.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!(to_json(&summary).contains("\"UA_brand_mono\""));
    }
}
