//! Plot-ready CSV output with bit-exact decimal round trips.

use std::path::Path;

/// Seventeen significant digits: enough to reproduce every `f64` exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(header: &[String], rows: &[Vec<f64>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let text = to_csv(header, rows).map_err(std::io::Error::other)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}

/// Reads back a CSV written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("row {}: {e}", i + 1))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| format!("row {}: `{f}`: {e}", i + 1)))
            .collect::<Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let header = vec!["t".to_string(), "v".to_string()];
        let rows = vec![
            vec![0.0, 0.1 + 0.2],
            vec![1e-300, -std::f64::consts::PI],
            vec![f64::MAX, f64::MIN_POSITIVE],
            vec![f64::NAN, 5e-324],
        ];
        let text = to_csv(&header, &rows).unwrap();
        let (h, back) = parse_csv(&text).unwrap();
        assert_eq!(h, header);
        for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        assert!(text.starts_with("t,v\n0.0000000000000000e0,3.0000000000000004e-1\n"));
    }
}
