//! Diagnostics CSV: the `DiagnosticsRow` header, then one line per row with floats
//! written to 17 significant digits in C `%.17g` form.

use std::io::{Read, Write};
use std::path::Path;

use crate::diagnostics::{DiagnosticsRow, ExperimentResult, DIAGNOSTICS_HEADER};
use crate::error::{CalabiError, Result};

/// C `%.17g`: 17 significant digits, trailing zeros removed, exponent form outside `[1e-4, 1e17)`.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv_to<W: Write>(out: W, rows: &[DiagnosticsRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(CalabiError::Format("no diagnostics rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for row in rows {
        let fields: Vec<String> = row
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 12 { row.picard_iters.to_string() } else { format_g17(v) })
            .collect();
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    write_csv_to(std::fs::File::create(path)?, rows)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<DiagnosticsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != DIAGNOSTICS_HEADER {
        return Err(CalabiError::Format(format!("unexpected diagnostics header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |col: usize| CalabiError::Format(format!("row {}: cannot parse {} = `{}`", i + 1, DIAGNOSTICS_HEADER[col], &rec[col]));
        let mut v = [0.0; 15];
        for (c, slot) in v.iter_mut().enumerate() {
            if c != 12 {
                *slot = rec[c].parse::<f64>().map_err(|_| bad(c))?;
            }
        }
        rows.push(DiagnosticsRow {
            t: v[0],
            tau: v[1],
            calabi_energy: v[2],
            max_abs_r: v[3],
            rbar: v[4],
            volume: v[5],
            c1_bound: v[6],
            c2_bound: v[7],
            max_riemann: v[8],
            holder_2a: v[9],
            holder_4a: v[10],
            weighted_norm: v[11],
            picard_iters: rec[12].parse().map_err(|_| bad(12))?,
            picard_last_ratio: v[13],
            phi_mean: v[14],
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    read_csv_from(std::fs::File::open(path)?)
}

/// Measurements of an experiment: `name,value,tolerance,pass`.
pub fn write_results_csv_to<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "value", "tolerance", "pass"])?;
    for m in &result.measurements {
        let verdict = if m.tolerance.is_empty() { "report" } else if m.pass { "pass" } else { "fail" };
        w.write_record([m.name.as_str(), &format_g17(m.value), m.tolerance.as_str(), verdict])?;
    }
    w.write_record([result.name.as_str(), "", "overall", if result.pass { "pass" } else { "fail" }])?;
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    write_results_csv_to(std::fs::File::create(path)?, result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g17_matches_c_printf() {
        let cases = [
            (1.0 / 3.0, "0.33333333333333331"),
            (1.0, "1"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e-4, "0.0001"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1.5e300, "1.5000000000000001e+300"),
            (1e16, "10000000000000000"),
            (5e-324, "4.9406564584124654e-324"),
            (97.40909103400243, "97.409091034002429"),
            (0.0, "0"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g17(v), s, "{v:e}");
        }
    }

    #[test]
    fn g17_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            let v = f64::from_bits(rng.gen::<u64>());
            if v.is_finite() {
                assert_eq!(format_g17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
            }
        }
    }

    fn row(i: u64) -> DiagnosticsRow {
        DiagnosticsRow {
            t: 1.0 / 3.0 * i as f64,
            tau: 1e-4,
            calabi_energy: 2.0f64.sqrt() * 1e-9,
            max_abs_r: 0.1,
            volume: 39.47841760435743,
            c1_bound: 0.97,
            c2_bound: 1.03,
            picard_iters: i,
            picard_last_ratio: 1e-3,
            phi_mean: -7.1e-18,
            ..Default::default()
        }
    }

    #[test]
    fn single_row_gives_two_lines() {
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &[row(1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], DIAGNOSTICS_HEADER.join(","));
        assert!(lines[1].starts_with("0.33333333333333331,0.0001,"));
    }

    #[test]
    fn rows_round_trip_bit_exactly() {
        let rows: Vec<_> = (0..5).map(row).collect();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &rows).unwrap();
        assert_eq!(read_csv_from(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn results_csv_lists_measurements_and_verdict() {
        let mut r = ExperimentResult::new("demo");
        r.check("rate", 1.0 / 3.0, "≤ 1", true);
        r.report("steps", 12.0);
        let mut buf = Vec::new();
        write_results_csv_to(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "name,value,tolerance,pass\nrate,0.33333333333333331,≤ 1,pass\nsteps,12,,report\ndemo,,overall,pass\n");
    }

    #[test]
    fn empty_input_and_bad_header_fail() {
        assert!(write_csv_to(Vec::new(), &[]).is_err());
        assert!(read_csv_from("a,b\n1,2\n".as_bytes()).is_err());
    }
}
