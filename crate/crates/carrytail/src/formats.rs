//! CSV inputs and artifacts.
//!
//! Price files are long format `date,currency,price`. The ingested panel is
//! long format `date,currency,spot,forward,available` with empty cells for
//! missing quotes.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use carrytail_core::ingestion::{Currency, Date, PricePanel, PriceRecord};
use carrytail_core::{MarginSource, PseudoSample};

use crate::error::{CliError, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| CliError::format(path, e.to_string()))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(CliError::format(path, format!("line 1: expected header {}, got {}", expected.join(","), got.join(","))));
    }
    Ok(())
}

fn rows(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| CliError::format(path, e.to_string()))?;
            let line = r.position().map_or(0, |p| p.line() as usize);
            Ok((line, r))
        })
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| CliError::format(path, format!("line {line}: missing {what}")))?;
    raw.parse().map_err(|e| CliError::format(path, format!("line {line}: bad {what} {raw:?}: {e}")))
}

/// Read a `date,currency,price` file.
pub fn read_price_csv(path: &Path) -> Result<Vec<PriceRecord>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["date", "currency", "price"])?;
    rows(path, &mut rdr)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(PriceRecord {
                line,
                date: field(path, line, &rec, 0, "date")?,
                currency: field(path, line, &rec, 1, "currency")?,
                price: field(path, line, &rec, 2, "price")?,
            })
        })
        .collect()
}

pub fn write_price_csv(path: &Path, records: &[PriceRecord]) -> Result<()> {
    let mut w = Table::create(path, &["date", "currency", "price"])?;
    for r in records {
        w.row([r.date.to_string(), r.currency.to_string(), r.price.to_string()])?;
    }
    w.finish()
}

/// Long-format records of one quote side of a panel.
pub fn panel_records(panel: &PricePanel, forward: bool) -> Vec<PriceRecord> {
    let mut out = Vec::new();
    for (t, date) in panel.dates().iter().enumerate() {
        for (c, ccy) in panel.currencies().iter().enumerate() {
            let v = if forward { panel.forward(t, c) } else { panel.spot(t, c) };
            if let Some(price) = v {
                out.push(PriceRecord { line: 0, date: *date, currency: *ccy, price });
            }
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

const PANEL_HEADER: [&str; 5] = ["date", "currency", "spot", "forward", "available"];

pub fn write_panel(path: &Path, panel: &PricePanel) -> Result<()> {
    let mut w = Table::create(path, &PANEL_HEADER)?;
    for (t, date) in panel.dates().iter().enumerate() {
        for (c, ccy) in panel.currencies().iter().enumerate() {
            w.row([
                date.to_string(),
                ccy.to_string(),
                opt(panel.spot(t, c)),
                opt(panel.forward(t, c)),
                u8::from(panel.is_available(t, c)).to_string(),
            ])?;
        }
    }
    w.finish()
}

pub fn read_panel(path: &Path) -> Result<PricePanel> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &PANEL_HEADER)?;
    let mut cells: BTreeMap<(Date, Currency), (Option<f64>, Option<f64>, bool)> = BTreeMap::new();
    for (line, rec) in rows(path, &mut rdr)? {
        let date: Date = field(path, line, &rec, 0, "date")?;
        let ccy: Currency = field(path, line, &rec, 1, "currency")?;
        let quote = |i: usize, what: &str| -> Result<Option<f64>> {
            if rec.get(i).is_some_and(str::is_empty) {
                Ok(None)
            } else {
                field(path, line, &rec, i, what).map(Some)
            }
        };
        let spot = quote(2, "spot")?;
        let fwd = quote(3, "forward")?;
        let available = match rec.get(4) {
            Some("1") => true,
            Some("0") => false,
            other => return Err(CliError::format(path, format!("line {line}: bad available flag {other:?}"))),
        };
        if cells.insert((date, ccy), (spot, fwd, available)).is_some() {
            return Err(CliError::format(path, format!("line {line}: duplicate cell {date} {ccy}")));
        }
    }
    let dates: Vec<Date> = cells.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let ccys: Vec<Currency> = cells.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut spot = Vec::new();
    let mut fwd = Vec::new();
    let mut avail = Vec::new();
    for d in &dates {
        for c in &ccys {
            let (s, f, a) = cells.get(&(*d, *c)).copied().unwrap_or((None, None, false));
            spot.push(s);
            fwd.push(f);
            avail.push(a);
        }
    }
    Ok(PricePanel::with_availability(dates, ccys, spot, fwd, avail)?)
}

/// Read a headed numeric CSV of pseudo-observations.
pub fn read_pseudo_csv(path: &Path) -> Result<(Vec<String>, PseudoSample)> {
    let mut rdr = reader(path)?;
    let names: Vec<String> =
        rdr.headers().map_err(|e| CliError::format(path, e.to_string()))?.iter().map(str::to_string).collect();
    let mut data = Vec::new();
    for (line, rec) in rows(path, &mut rdr)? {
        if rec.len() != names.len() {
            return Err(CliError::format(path, format!("line {line}: expected {} fields, got {}", names.len(), rec.len())));
        }
        for i in 0..names.len() {
            data.push(field::<f64>(path, line, &rec, i, "value")?);
        }
    }
    let dim = names.len();
    let sample = PseudoSample::new(data, dim, vec![MarginSource::External; dim])?;
    Ok((names, sample))
}

pub fn write_pseudo_csv(path: &Path, sample: &PseudoSample) -> Result<()> {
    let header: Vec<String> = (1..=sample.dim()).map(|j| format!("u{j}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = Table::create(path, &header)?;
    for row in sample.rows() {
        w.row(row.iter().map(f64::to_string))?;
    }
    w.finish()
}

/// CSV writer that maps failures onto the output path.
pub struct Table {
    path: std::path::PathBuf,
    inner: csv::Writer<File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut t = Table { path: path.to_path_buf(), inner: csv::Writer::from_writer(file) };
        t.row(header.iter().copied())?;
        Ok(t)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| self.fail(e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn fail(&self, e: csv::Error) -> CliError {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(&self.path, io),
            other => CliError::format(&self.path, format!("{other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn price_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.csv", "date,currency,price\n2010-01-04,AUD,0.9\n2010-01-05,AUD,0.91\n");
        let recs = read_price_csv(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].line, 3);
        let out = dir.path().join("o.csv");
        write_price_csv(&out, &recs).unwrap();
        assert_eq!(read_price_csv(&out).unwrap().iter().map(|r| r.price).collect::<Vec<_>>(), vec![0.9, 0.91]);

        let bad = write(dir.path(), "b.csv", "date,currency,price\n2010-01-04,AUD,0.9\n2010-13-01,AUD,1\n");
        let e = read_price_csv(&bad).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 3);
        let header = write(dir.path(), "h.csv", "day,ccy,px\n");
        assert!(read_price_csv(&header).unwrap_err().to_string().contains("expected header"));
        assert_eq!(read_price_csv(&dir.path().join("missing.csv")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn panel_round_trip() {
        let recs = |v: &[(&str, &str, f64)]| -> Vec<PriceRecord> {
            v.iter()
                .enumerate()
                .map(|(i, (d, c, p))| PriceRecord { line: i + 2, date: d.parse().unwrap(), currency: c.parse().unwrap(), price: *p })
                .collect()
        };
        let spot = recs(&[("2010-01-04", "AUD", 0.9), ("2010-01-04", "NZD", 0.7), ("2010-01-06", "AUD", 0.95), ("2010-01-06", "NZD", 0.72)]);
        let fwd = recs(&[("2010-01-04", "AUD", 0.91), ("2010-01-04", "NZD", 0.71), ("2010-01-05", "AUD", 0.93), ("2010-01-06", "AUD", 0.96), ("2010-01-06", "NZD", 0.73)]);
        let panel = PricePanel::from_records(&spot, &fwd).unwrap().fill_forward();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("panel.csv");
        write_panel(&p, &panel).unwrap();
        assert_eq!(read_panel(&p).unwrap(), panel);
    }

    #[test]
    fn pseudo_round_trip() {
        let s = PseudoSample::from_rows(&[vec![0.1, 0.2], vec![0.5, 0.25]], MarginSource::External).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write_pseudo_csv(&p, &s).unwrap();
        let (names, back) = read_pseudo_csv(&p).unwrap();
        assert_eq!(names, vec!["u1", "u2"]);
        assert_eq!(back, s);
        let out = write(dir.path(), "o.csv", "a,b\n0.5,1.5\n");
        assert_eq!(read_pseudo_csv(&out).unwrap_err().exit_code(), 3);
    }
}
