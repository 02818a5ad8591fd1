use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

const MAGIC: &str = "# gwx-strain v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrainFormat {
    /// Four `#` header lines, then one float per line.
    GwxText,
    /// `t_s,strain` header, one row per sample.
    Csv,
}

impl StrainFormat {
    /// Guess from the file extension: `.csv` is CSV, anything else gwx-text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => StrainFormat::Csv,
            _ => StrainFormat::GwxText,
        }
    }
}

impl std::str::FromStr for StrainFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gwx-text" | "gwx" | "txt" => Ok(StrainFormat::GwxText),
            "csv" => Ok(StrainFormat::Csv),
            other => Err(Error::Parameter(format!("unknown strain format `{other}`"))),
        }
    }
}

pub fn load_strain(path: impl AsRef<Path>, format: StrainFormat) -> Result<TimeSeries> {
    let text = fs::read_to_string(path.as_ref())?;
    match format {
        StrainFormat::GwxText => parse_gwx(&text),
        StrainFormat::Csv => parse_csv(&text),
    }
}

pub fn save_strain(ts: &TimeSeries, path: impl AsRef<Path>, format: StrainFormat) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    match format {
        StrainFormat::GwxText => {
            // `{:e}` prints the shortest representation that parses back exactly
            writeln!(w, "{MAGIC}")?;
            writeln!(w, "# fs_hz={:e}", ts.fs())?;
            writeln!(w, "# t0_s={:e}", ts.t0())?;
            writeln!(w, "# n={}", ts.len())?;
            for x in ts.samples() {
                writeln!(w, "{x:e}")?;
            }
        }
        StrainFormat::Csv => {
            writeln!(w, "t_s,strain")?;
            for (i, x) in ts.samples().iter().enumerate() {
                writeln!(w, "{:e},{x:e}", ts.time_at(i))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn header_value<'a>(line: Option<&'a str>, lineno: usize, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Parse { line: lineno, msg: "truncated header".into() })?;
    line.trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|rest| rest.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix('='))
        .map(str::trim)
        .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected `# {key}=...`") })
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse { line: lineno, msg: format!("invalid {what} `{s}`") })
}

fn parse_gwx(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == MAGIC => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected `{MAGIC}`") }),
    }
    let fs: f64 = parse_num(header_value(lines.next(), 2, "fs_hz")?, 2, "sample rate")?;
    let t0: f64 = parse_num(header_value(lines.next(), 3, "t0_s")?, 3, "start time")?;
    let n: usize = parse_num(header_value(lines.next(), 4, "n")?, 4, "sample count")?;

    let mut samples = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let lineno = i + 5;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let v: f64 = parse_num(s, lineno, "sample")?;
        if !v.is_finite() {
            return Err(Error::Parse { line: lineno, msg: "sample is not finite".into() });
        }
        samples.push(v);
    }
    if samples.len() != n {
        return Err(Error::Parse {
            line: 4 + samples.len() + 1,
            msg: format!("sample count mismatch: header says {n}, found {}", samples.len()),
        });
    }
    TimeSeries::new(fs, t0, samples).map_err(|e| Error::Parse { line: 2, msg: e.to_string() })
}

fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t_s" || &headers[1] != "strain" {
        return Err(Error::Parse { line: 1, msg: "expected header `t_s,strain`".into() });
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let lineno = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
        if rec.len() != 2 {
            return Err(Error::Parse { line: lineno, msg: "expected two columns".into() });
        }
        times.push(parse_num::<f64>(&rec[0], lineno, "time")?);
        samples.push(parse_num::<f64>(&rec[1], lineno, "sample")?);
    }
    if samples.len() < 2 {
        return Err(Error::Parse {
            line: samples.len() + 1,
            msg: "CSV strain needs at least two rows to fix the sample rate".into(),
        });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Parse { line: 2, msg: "time column must increase".into() });
    }
    TimeSeries::new(1.0 / dt, times[0], samples)
        .map_err(|e| Error::Parse { line: 2, msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn zeros_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("# gwx-strain v1\n# fs_hz=4096\n# t0_s=0\n# n=4096\n");
        for _ in 0..4096 {
            body.push_str("0\n");
        }
        let ts = load_strain(write(dir.path(), "z.txt", &body), StrainFormat::GwxText).unwrap();
        assert_eq!(ts.len(), 4096);
        assert_eq!(ts.duration(), 1.0);
        assert!(ts.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn short_file_reports_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("# gwx-strain v1\n# fs_hz=100\n# t0_s=0\n# n=100\n");
        for i in 0..99 {
            body.push_str(&format!("{i}\n"));
        }
        let err = load_strain(write(dir.path(), "s.txt", &body), StrainFormat::GwxText).unwrap_err();
        assert!(err.to_string().contains("sample count mismatch"), "{err}");
    }

    #[test]
    fn bad_lines_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.txt", "# gwx-strain v1\n# fs_hz=abc\n# t0_s=0\n# n=1\n1\n");
        assert!(matches!(load_strain(&p, StrainFormat::GwxText), Err(Error::Parse { line: 2, .. })));
        let p = write(dir.path(), "b.txt", "# gwx-strain v1\n# fs_hz=10\n# t0_s=0\n# n=2\n1\nx\n");
        assert!(matches!(load_strain(&p, StrainFormat::GwxText), Err(Error::Parse { line: 6, .. })));
        let p = write(dir.path(), "c.txt", "hello\n");
        assert!(matches!(load_strain(&p, StrainFormat::GwxText), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<f64> = (0..2000)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                1e-21 * g
            })
            .collect();
        let ts = TimeSeries::new(4096.0, 1126259446.4, xs).unwrap();
        for (fmt, name) in [(StrainFormat::GwxText, "r.txt"), (StrainFormat::Csv, "r.csv")] {
            let p = dir.path().join(name);
            save_strain(&ts, &p, fmt).unwrap();
            let back = load_strain(&p, fmt).unwrap();
            assert_eq!(back.samples(), ts.samples());
            if fmt == StrainFormat::GwxText {
                assert_eq!(back, ts);
                let p2 = dir.path().join("r2.txt");
                save_strain(&back, &p2, fmt).unwrap();
                assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
            } else {
                assert!((back.fs() - ts.fs()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn format_from_path() {
        assert_eq!(StrainFormat::from_path(Path::new("a.CSV")), StrainFormat::Csv);
        assert_eq!(StrainFormat::from_path(Path::new("a.txt")), StrainFormat::GwxText);
    }
}
