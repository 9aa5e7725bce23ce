//! Record files: CSV with `# key=value ...` metadata comment lines.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Provenance carried in the leading comment line of every record file.
#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub state_tag: String,
    pub eta: f64,
    pub seed: u64,
    pub n: usize,
}

impl Metadata {
    pub fn write_line<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "# state={} eta={} seed={} n={}",
            self.state_tag, self.eta, self.seed, self.n
        )?;
        Ok(())
    }

    fn parse(line: &str) -> Result<Self> {
        let (mut state, mut eta, mut seed, mut n) = (None, None, None, None);
        for tok in line.trim_start_matches('#').split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed metadata token `{tok}`")))?;
            let bad = || Error::Parse(format!("bad metadata value `{tok}`"));
            match k {
                "state" => state = Some(v.to_string()),
                "eta" => eta = Some(v.parse::<f64>().map_err(|_| bad())?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
                "n" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => {}
            }
        }
        match (state, eta, seed, n) {
            (Some(state_tag), Some(eta), Some(seed), Some(n)) => Ok(Self {
                state_tag,
                eta,
                seed,
                n,
            }),
            _ => Err(Error::Parse(
                "metadata line needs state, eta, seed and n".into(),
            )),
        }
    }
}

/// Writes metadata, a header and rows of already formatted fields.
pub fn write_records<W, I, R>(w: &mut W, meta: &Metadata, header: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    meta.write_line(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads a record file, checking the header; returns metadata and raw rows.
pub fn read_records<R: BufRead>(
    r: R,
    header: &[&str],
) -> Result<(Metadata, Vec<csv::StringRecord>)> {
    let mut meta = None;
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') {
            if meta.is_none() && line.contains("state=") {
                meta = Some(Metadata::parse(&line)?);
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let meta = meta
        .ok_or_else(|| Error::Parse("missing `# state=... eta=... seed=... n=...` line".into()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse(format!(
            "expected header {header:?}, found {got:?}"
        )));
    }
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.len() != meta.n {
        return Err(Error::Parse(format!(
            "metadata says n={} but file has {} rows",
            meta.n,
            rows.len()
        )));
    }
    Ok((meta, rows))
}

pub(crate) fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("missing column {i}")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{raw}` in column {i}")))
}
