//! Number formatting and file writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// `printf("%.17g", x)`.
pub fn g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= P {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV writer with a header row.
pub struct Table {
    inner: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        inner.write_record(header)?;
        Ok(Table { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::g17;

    #[test]
    fn matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (0.0001, "0.0001"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (1.0 / 3.0, "0.33333333333333331"),
            (f64::MIN_POSITIVE, "2.2250738585072014e-308"),
        ];
        for (x, want) in cases {
            assert_eq!(g17(x), want, "{x:e}");
        }
        assert_eq!(g17(-0.0), "-0");
        assert_eq!(g17(f64::NAN), "nan");
    }

    #[test]
    fn round_trips() {
        for x in [std::f64::consts::PI, 1e300, -7.25e-200, 0.1 + 0.2] {
            assert_eq!(g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
