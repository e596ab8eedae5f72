//! Sample representation, standardization and block partitions.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Response vector plus an `n × p` predictor matrix, rows in time order.
///
/// Predictors are stored column-major: column `i` is the contiguous slice
/// `x[i*n..(i+1)*n]`. Every per-predictor kernel walks one column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    p: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    standardized: bool,
    names: Vec<String>,
}

impl Sample {
    /// Build a sample from a response and predictor columns.
    pub fn new(y: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        let p = columns.len();
        let mut x = Vec::with_capacity(n * p);
        for (i, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::Shape(format!(
                    "predictor {} has {} rows, response has {n}",
                    i + 1,
                    c.len()
                )));
            }
            x.extend_from_slice(c);
        }
        Self::from_col_major(y, x, p)
    }

    /// Build a sample from a column-major predictor buffer of width `p`.
    pub fn from_col_major(y: Vec<f64>, x: Vec<f64>, p: usize) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::TooFewRows(n));
        }
        if p == 0 {
            return Err(Error::Shape("need at least one predictor".into()));
        }
        if x.len() != n * p {
            return Err(Error::Shape(format!(
                "predictor buffer has {} values, expected {n} x {p}",
                x.len()
            )));
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: t + 1, col: 1 });
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: k % n + 1,
                col: k / n + 2,
            });
        }
        let mut names = vec!["y".to_string()];
        names.extend((1..=p).map(|i| format!("x{i}")));
        Ok(Self {
            n,
            p,
            y,
            x,
            standardized: false,
            names,
        })
    }

    /// Replace column names: response first, then one per predictor.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p + 1 {
            return Err(Error::Shape(format!(
                "expected {} column names, got {}",
                self.p + 1,
                names.len()
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Predictor column `i` (0-based).
    pub fn column(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.x.chunks_exact(self.n)
    }

    /// Column-major predictor buffer.
    pub fn x_col_major(&self) -> &[f64] {
        &self.x
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Same predictors with a different response (used by bootstrap refits).
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::Shape("response length mismatch".into()));
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: t + 1, col: 1 });
        }
        Ok(Self {
            y,
            standardized: false,
            ..self.clone()
        })
    }
}

/// Mean and divisor-`n` variance with ascending summation.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    (mean, var)
}

fn standardize_in_place(v: &mut [f64]) -> bool {
    let (mean, var) = mean_var(v);
    if !(var > 0.0) {
        return false;
    }
    let sd = var.sqrt();
    for a in v.iter_mut() {
        *a = (*a - mean) / sd;
    }
    true
}

/// Center and scale the response and every predictor to mean 0 and
/// divisor-`n` variance 1.
///
/// A constant response reports `DegenerateColumn(0)`; a constant predictor
/// reports its 1-based predictor index.
pub fn standardize(s: &Sample) -> Result<Sample> {
    let mut out = s.clone();
    if !standardize_in_place(&mut out.y) {
        return Err(Error::DegenerateColumn(0));
    }
    let n = out.n;
    for (i, col) in out.x.chunks_exact_mut(n).enumerate() {
        if !standardize_in_place(col) {
            return Err(Error::DegenerateColumn(i + 1));
        }
    }
    out.standardized = true;
    Ok(out)
}

/// Which file column is the response. Everything else is a predictor unless
/// `predictors` narrows the set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layout {
    pub response: Option<String>,
    pub predictors: Option<Vec<String>>,
}

fn detect_delimiter(header: &str) -> u8 {
    let tabs = header.matches('\t').count();
    let commas = header.matches(',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

/// Read a delimited text file (comma or tab, detected from the header line).
pub fn load_sample(path: &Path, layout: &Layout) -> Result<Sample> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path)?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first)?;
    let delim = detect_delimiter(&first);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::Shape("need a response and at least one predictor column".into()));
    }

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let y_col = match &layout.response {
        Some(name) => find(name)?,
        None => 0,
    };
    let x_cols: Vec<usize> = match &layout.predictors {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&c| c != y_col).collect(),
    };

    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); x_cols.len()];
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError {
            row: r + 1,
            col: 0,
            msg: e.to_string(),
        })?;
        let cell = |c: usize| -> Result<f64> {
            let raw = rec.get(c).ok_or_else(|| Error::ParseError {
                row: r + 1,
                col: c + 1,
                msg: "missing field".into(),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::ParseError {
                row: r + 1,
                col: c + 1,
                msg: format!("`{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: r + 1, col: c + 1 });
            }
            Ok(v)
        };
        y.push(cell(y_col)?);
        for (k, &c) in x_cols.iter().enumerate() {
            cols[k].push(cell(c)?);
        }
    }
    if y.len() < 3 {
        return Err(Error::TooFewRows(y.len()));
    }
    let mut names = vec![header[y_col].clone()];
    names.extend(x_cols.iter().map(|&c| header[c].clone()));
    Sample::new(y, cols)?.with_names(names)
}

/// Write a sample as comma-separated text: response first, then predictors.
pub fn save_sample(path: &Path, s: &Sample) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    writeln!(w, "{}", s.names.join(","))?;
    let mut line = String::new();
    for t in 0..s.n {
        line.clear();
        line.push_str(&format!("{}", s.y[t]));
        for i in 0..s.p {
            line.push(',');
            line.push_str(&format!("{}", s.x[i * s.n + t]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Contiguous, disjoint time blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    block_size: usize,
    blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// 0-based half-open index ranges in ascending order.
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// `⌊n/b⌋` full blocks of length `b`, then one shorter remainder block when
/// `b` does not divide `n`. The remainder starts right after the last full
/// block, so the blocks partition the index set.
pub fn make_blocks(n: usize, b: usize) -> Result<BlockPartition> {
    if b < 1 || b > n {
        return Err(Error::InvalidBlockSize { n, b });
    }
    let full = n / b;
    let mut blocks: Vec<Range<usize>> = (0..full).map(|s| s * b..(s + 1) * b).collect();
    if full * b < n {
        blocks.push(full * b..n);
    }
    Ok(BlockPartition {
        n,
        block_size: b,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_four_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "y,x1,x2\n1,2,3\n4,5,6\n7,8,9\n1,0,1\n");
        let s = load_sample(&p, &Layout::default()).unwrap();
        assert_eq!((s.n(), s.p()), (4, 2));
        assert_eq!(s.y(), &[1.0, 4.0, 7.0, 1.0]);
        assert_eq!(s.column(1), &[3.0, 6.0, 9.0, 1.0]);
        assert!(!s.is_standardized());
    }

    #[test]
    fn tab_delimited_and_named_response() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.tsv", "a\tb\tresp\n1\t2\t3\n4\t5\t6\n7\t8\t9\n");
        let layout = Layout {
            response: Some("resp".into()),
            predictors: None,
        };
        let s = load_sample(&p, &layout).unwrap();
        assert_eq!(s.y(), &[3.0, 6.0, 9.0]);
        assert_eq!(s.column(0), &[1.0, 4.0, 7.0]);
        assert_eq!(s.names(), &["resp", "a", "b"]);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(&dir, "b.csv", "y,x\n1,2\n3,abc\n5,6\n");
        assert!(matches!(
            load_sample(&bad, &Layout::default()),
            Err(Error::ParseError { row: 2, col: 2, .. })
        ));
        let nan = write(&dir, "c.csv", "y,x\n1,2\nNaN,4\n5,6\n");
        assert!(matches!(
            load_sample(&nan, &Layout::default()),
            Err(Error::NonFiniteValue { row: 2, col: 1 })
        ));
        let short = write(&dir, "d.csv", "y,x\n1,2\n3,4\n");
        assert_eq!(load_sample(&short, &Layout::default()), Err(Error::TooFewRows(2)));
        assert!(matches!(
            load_sample(&dir.path().join("nope.csv"), &Layout::default()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn standardize_three_points() {
        let s = Sample::new(vec![1.0, 2.0, 3.0], vec![vec![0.0, 1.0, 5.0]]).unwrap();
        let z = standardize(&s).unwrap();
        let r = (1.5f64).sqrt();
        for (a, b) in z.y().iter().zip([-r, 0.0, r]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(z.is_standardized());
    }

    #[test]
    fn constant_predictor_is_degenerate() {
        let s = Sample::new(vec![1.0, 2.0, 3.0], vec![vec![1.0, 2.0, 0.0], vec![4.0; 3]]).unwrap();
        assert_eq!(standardize(&s), Err(Error::DegenerateColumn(2)));
    }

    #[test]
    fn block_examples() {
        let b = make_blocks(10, 3).unwrap();
        assert_eq!(b.blocks(), &[0..3, 3..6, 6..9, 9..10]);
        let one = make_blocks(6, 6).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.blocks()[0], 0..6);
        assert_eq!(make_blocks(5, 1).unwrap().len(), 5);
        assert!(make_blocks(5, 0).is_err());
        assert!(make_blocks(5, 6).is_err());
    }

    fn arb_sample() -> impl Strategy<Value = Sample> {
        (3usize..40, 1usize..8).prop_flat_map(|(n, p)| {
            prop::collection::vec(-50.0f64..50.0, n * (p + 1)).prop_map(move |v| {
                let y = v[..n].to_vec();
                Sample::from_col_major(y, v[n..].to_vec(), p).unwrap()
            })
        })
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, va) = mean_var(a);
        let (mb, vb) = mean_var(b);
        let c: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
        c / (va * vb).sqrt()
    }

    proptest! {
        #[test]
        fn blocks_partition(n in 1usize..500, b in 1usize..500) {
            prop_assume!(b <= n);
            let part = make_blocks(n, b).unwrap();
            let mut next = 0;
            for (k, r) in part.blocks().iter().enumerate() {
                prop_assert_eq!(r.start, next);
                if k < n / b { prop_assert_eq!(r.len(), b); } else { prop_assert!(r.len() < b && !r.is_empty()); }
                next = r.end;
            }
            prop_assert_eq!(next, n);
        }

        #[test]
        fn standardize_moments_idempotence_and_correlation(s in arb_sample()) {
            let Ok(z) = standardize(&s) else { return Ok(()); };
            for v in std::iter::once(z.y()).chain(z.columns()) {
                let (m, var) = mean_var(v);
                prop_assert!(m.abs() < 1e-10 && (var - 1.0).abs() < 1e-10);
            }
            let zz = standardize(&z).unwrap();
            for (a, b) in zz.x_col_major().iter().zip(z.x_col_major()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            for i in 0..s.p() {
                prop_assert!((corr(s.column(i), s.y()) - corr(z.column(i), z.y())).abs() < 1e-10);
            }
        }

        #[test]
        fn save_load_round_trip(s in arb_sample()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.csv");
            save_sample(&path, &s).unwrap();
            let back = load_sample(&path, &Layout::default()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
