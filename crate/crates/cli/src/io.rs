//! File formats: versioned CSV tables, state CSVs, and `DCS1` binary dumps.
//! Every file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dcs_core::controller::StepReport;

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"DCS1";

/// First line of every CSV: `# dcs-csv v<version> <kind>`.
pub fn schema_line(kind: &str) -> String {
    format!("# dcs-csv v{SCHEMA_VERSION} {kind}")
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Shortest representation that parses back to the same bits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// In-memory CSV with a schema line and a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    kind: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: Vec<String>) -> Self {
        Self {
            kind: kind.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = schema_line(&self.kind);
        s.push('\n');
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.render().as_bytes())
    }
}

/// Parsed CSV: schema kind, header and raw cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub kind: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().context("empty CSV")?;
    let rest = first.strip_prefix("# dcs-csv v").context("missing schema line")?;
    let (version, kind) = rest.split_once(' ').unwrap_or((rest, ""));
    let version: u32 = version.parse().context("bad schema version")?;
    ensure!(version == SCHEMA_VERSION, "schema version {version} is not {SCHEMA_VERSION}");
    let header: Vec<String> = lines.next().context("missing header")?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        if l.starts_with('#') {
            continue;
        }
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        ensure!(row.len() == header.len(), "row {} has {} cells, header has {}", i + 1, row.len(), header.len());
        rows.push(row);
    }
    Ok(ParsedCsv {
        kind: kind.to_string(),
        header,
        rows,
    })
}

fn species_names(m: usize) -> Vec<String> {
    if m == 3 {
        ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
    } else {
        (0..m).map(|s| format!("u{s}")).collect()
    }
}

/// One row per grid point: `x` then the `m` species.
pub fn state_csv(x: &[f64], u: &[f64], m: usize) -> Result<String> {
    ensure!(u.len() == x.len() * m, "state has {} values for {} points of {m} species", u.len(), x.len());
    let mut header = vec!["x".to_string()];
    header.extend(species_names(m));
    let mut t = Table::new("state", header);
    for (j, xj) in x.iter().enumerate() {
        let mut row = vec![num(*xj)];
        row.extend(u[j * m..(j + 1) * m].iter().map(|v| num(*v)));
        t.push(row);
    }
    Ok(t.render())
}

/// Inverse of [`state_csv`]: grid points, interleaved state and `m`.
pub fn read_state_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let p = parse_csv(text)?;
    ensure!(p.kind == "state", "expected a state CSV, found '{}'", p.kind);
    ensure!(p.header.first().map(String::as_str) == Some("x"), "first column must be x");
    let m = p.header.len() - 1;
    ensure!(m >= 1, "state CSV has no species");
    let mut x = Vec::with_capacity(p.rows.len());
    let mut u = Vec::with_capacity(p.rows.len() * m);
    for row in &p.rows {
        x.push(row[0].parse()?);
        for c in &row[1..] {
            u.push(c.parse()?);
        }
    }
    Ok((x, u, m))
}

/// `t` followed by every state component.
pub fn trajectory_csv(points: &[(f64, Vec<f64>)]) -> Result<String> {
    let width = points.first().map_or(0, |p| p.1.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|i| format!("u{i}")));
    let mut t = Table::new("trajectory", header);
    for (time, u) in points {
        ensure!(u.len() == width, "trajectory states differ in length");
        let mut row = vec![num(*time)];
        row.extend(u.iter().map(|v| num(*v)));
        t.push(row);
    }
    Ok(t.render())
}

/// `DCS1`, then `n`, `m` as u64 and `t` as f64, then the `n·m` values, all
/// little-endian.
pub fn encode_dump(n: usize, m: usize, t: f64, u: &[f64]) -> Result<Vec<u8>> {
    ensure!(u.len() == n * m, "state has {} values, expected {}", u.len(), n * m);
    let mut out = Vec::with_capacity(28 + 8 * u.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in u {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// `(n, m, t, state)` from a `DCS1` dump.
pub fn decode_dump(bytes: &[u8]) -> Result<(usize, usize, f64, Vec<f64>)> {
    ensure!(bytes.len() >= 28, "dump is shorter than its header");
    if &bytes[..4] != MAGIC {
        bail!("bad magic bytes");
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().unwrap() };
    let n = u64::from_le_bytes(word(4)) as usize;
    let m = u64::from_le_bytes(word(12)) as usize;
    let t = f64::from_le_bytes(word(20));
    let count = n.checked_mul(m).context("dump dimensions overflow")?;
    ensure!(bytes.len() == 28 + 8 * count, "dump holds {} bytes, header implies {}", bytes.len(), 28 + 8 * count);
    let u = bytes[28..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((n, m, t, u))
}

/// Columns of a step report with room for sweeps `0..=k_max`.
pub fn step_report_header(k_max: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "dt".into(), "k_used".into()];
    h.extend((0..=k_max).map(|k| format!("err_bar_{k}")));
    h.extend((0..=k_max).map(|k| format!("err_tilde_{k}")));
    h.extend((1..=k_max).map(|k| format!("zeta_{k}")));
    h.extend(["accepted", "restarts", "wall_ns"].map(String::from));
    h
}

pub fn step_report_fields(r: &StepReport, k_max: usize) -> Vec<String> {
    let pad = |vals: Vec<f64>, width: usize| -> Vec<String> {
        let mut v: Vec<String> = vals.into_iter().map(num).collect();
        v.resize(width, String::new());
        v
    };
    let mut row = vec![num(r.t), num(r.dt), r.k_used.to_string()];
    row.extend(pad(r.err_bar().collect(), k_max + 1));
    row.extend(pad(r.err_tilde().collect(), k_max + 1));
    row.extend(pad(r.zeta().collect(), k_max));
    row.push(u8::from(r.accepted).to_string());
    row.push(r.restarts.to_string());
    row.push(r.wall_ns.to_string());
    row
}

/// `key=value` lines, one per entry.
pub fn render_kv(entries: &[(String, String)]) -> String {
    entries.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "{k}={v}");
        s
    })
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected key=value", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
