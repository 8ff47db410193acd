//! Raw wind-speed ingestion, gap imputation, windowing and splits.
//!
//! The only accepted input is a UTF-8 CSV with header `timestamp,wind_speed`.
//! A blank `wind_speed` field marks a gap. Timestamps are either integer epoch
//! seconds or ISO-8601 strings; the format is detected from the first row and
//! then required for the whole file.

use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use crate::error::{Error, Result};

/// A series as read from disk, gaps still present.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    /// Epoch seconds, strictly increasing.
    pub timestamps: Vec<i64>,
    pub values: Vec<Option<f64>>,
}

impl RawSeries {
    pub fn new(timestamps: Vec<i64>, values: Vec<Option<f64>>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch(timestamps.len(), values.len()));
        }
        if timestamps.is_empty() {
            return Err(Error::EmptyFile);
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTimestamps { line: i + 3 });
        }
        Ok(Self { timestamps, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `true` at every index whose value is missing.
    pub fn gap_mask(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_none).collect()
    }
}

/// A gap-free, uniformly indexed series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    /// First timestamp, epoch seconds.
    pub origin: i64,
    /// Nominal sampling step in seconds.
    pub step: i64,
}

impl Series {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            origin: 0,
            step: 600,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Non-overlapping windows tiling a prefix of a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSet {
    pub window_size: usize,
    pub windows: Vec<Range<usize>>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Chronological split fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
        }
    }
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64) -> Result<Self> {
        let fracs = [train_frac, val_frac, test_frac];
        if fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "split fractions must lie in (0,1), got {fracs:?}"
            )));
        }
        if (train_frac + val_frac + test_frac - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must sum to 1, got {fracs:?}"
            )));
        }
        Ok(Self {
            train_frac,
            val_frac,
            test_frac,
        })
    }

    /// End indices of the train and validation parts for `n` items.
    pub fn boundaries(&self, n: usize) -> (usize, usize) {
        // the epsilon absorbs representation error such as 0.6 * 10 = 5.999..
        let cut = |frac: f64| ((frac * n as f64) + 1e-9).floor() as usize;
        let train_end = cut(self.train_frac).min(n);
        let val_end = cut(self.train_frac + self.val_frac).clamp(train_end, n);
        (train_end, val_end)
    }
}

/// One fold of a k-fold partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Range<usize>,
}

/// Reads a `timestamp,wind_speed` CSV file.
pub fn load_series(path: impl AsRef<Path>) -> Result<RawSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_series(file)
}

/// Parses `timestamp,wind_speed` CSV content from any reader.
pub fn parse_series<R: Read>(reader: R) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        reason: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "wind_speed" {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!(
                "expected header `timestamp,wind_speed`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut epoch_mode: Option<bool> = None;

    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let raw_ts = &record[0];
        let epoch = *epoch_mode.get_or_insert_with(|| raw_ts.parse::<i64>().is_ok());
        let ts = if epoch {
            raw_ts.parse::<i64>().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("expected epoch seconds, got `{raw_ts}`"),
            })?
        } else {
            parse_iso(raw_ts).ok_or_else(|| Error::MalformedRow {
                line,
                reason: format!("unparseable ISO-8601 timestamp `{raw_ts}`"),
            })?
        };
        if let Some(&prev) = timestamps.last() {
            if ts <= prev {
                return Err(Error::NonMonotoneTimestamps { line });
            }
        }
        let raw_val = &record[1];
        let value = if raw_val.is_empty() {
            None
        } else {
            let v: f64 = raw_val.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("bad wind speed `{raw_val}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("non-finite wind speed `{raw_val}`"),
                });
            }
            Some(v)
        };
        timestamps.push(ts);
        values.push(value);
    }

    if timestamps.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(RawSeries { timestamps, values })
}

fn parse_iso(s: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

/// Fills gaps by straight-line interpolation between the nearest observed
/// neighbours, weighted by index distance.
pub fn interpolate_gaps(raw: &RawSeries) -> Result<Series> {
    let n = raw.values.len();
    if raw.values.iter().all(Option::is_none) {
        return Err(Error::AllMissing);
    }
    if raw.values[0].is_none() {
        return Err(Error::BoundaryGap("leading"));
    }
    if raw.values[n - 1].is_none() {
        return Err(Error::BoundaryGap("trailing"));
    }

    let mut out = Vec::with_capacity(n);
    let mut last_obs = 0usize;
    let mut i = 0;
    while i < n {
        match raw.values[i] {
            Some(v) => {
                out.push(v);
                last_obs = i;
                i += 1;
            }
            None => {
                let next_obs = (i..n)
                    .find(|&j| raw.values[j].is_some())
                    .expect("trailing value present");
                let (a, b) = (raw.values[last_obs].unwrap(), raw.values[next_obs].unwrap());
                let span = (next_obs - last_obs) as f64;
                for j in i..next_obs {
                    let t = (j - last_obs) as f64 / span;
                    out.push(a + (b - a) * t);
                }
                i = next_obs;
            }
        }
    }

    let step = if n > 1 {
        (raw.timestamps[n - 1] - raw.timestamps[0]) / (n as i64 - 1)
    } else {
        0
    };
    Ok(Series {
        values: out,
        origin: raw.timestamps[0],
        step,
    })
}

/// Splits a series into `floor(n / window_size)` consecutive windows.
pub fn partition_windows(series: &Series, window_size: usize) -> Result<WindowSet> {
    if window_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "window size must be at least 2, got {window_size}"
        )));
    }
    let n = series.len();
    if n < window_size {
        return Err(Error::SeriesTooShort {
            len: n,
            window: window_size,
        });
    }
    let windows = (0..n / window_size)
        .map(|k| k * window_size..(k + 1) * window_size)
        .collect();
    Ok(WindowSet {
        window_size,
        windows,
    })
}

/// Contiguous train / validation / test partition by cumulative floor.
pub fn chrono_split<'a, T>(
    items: &'a [T],
    spec: &SplitSpec,
) -> Result<(&'a [T], &'a [T], &'a [T])> {
    if items.len() < 5 {
        return Err(Error::TooFewItems {
            needed: 5,
            got: items.len(),
        });
    }
    let (a, b) = spec.boundaries(items.len());
    Ok((&items[..a], &items[a..b], &items[b..]))
}

/// Contiguous k-fold partition of `0..n`. Earlier folds absorb the remainder.
pub fn kfold_split(n: usize, k: usize) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if n < k {
        return Err(Error::TooFewItems { needed: k, got: n });
    }
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let test = start..start + size;
        let train = (0..n).filter(|j| !test.contains(j)).collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(values: &[Option<f64>]) -> RawSeries {
        RawSeries::new(
            (0..values.len() as i64).map(|i| i * 600).collect(),
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn parses_gap_row() {
        let csv = "timestamp,wind_speed\n0,5.0\n600,\n1200,7.0\n";
        let s = parse_series(csv.as_bytes()).unwrap();
        assert_eq!(s.gap_mask(), vec![false, true, false]);
        assert_eq!(s.values[2], Some(7.0));
    }

    #[test]
    fn parses_iso_timestamps_with_crlf() {
        let csv = "timestamp,wind_speed\r\n2024-01-01T00:00:00,5.0\r\n2024-01-01T00:10:00Z,6.5\r\n";
        let s = parse_series(csv.as_bytes()).unwrap();
        assert_eq!(s.timestamps[1] - s.timestamps[0], 600);
        assert!(s.gap_mask().iter().all(|g| !g));
    }

    #[test]
    fn rejects_non_monotone() {
        let csv = "timestamp,wind_speed\n600,5.0\n0,6.0\n";
        assert!(matches!(
            parse_series(csv.as_bytes()),
            Err(Error::NonMonotoneTimestamps { line: 3 })
        ));
    }

    #[test]
    fn rejects_empty_and_malformed() {
        assert!(matches!(
            parse_series("timestamp,wind_speed\n".as_bytes()),
            Err(Error::EmptyFile)
        ));
        assert!(matches!(
            parse_series("timestamp,wind_speed\n0,abc\n".as_bytes()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_series("time,speed\n0,1\n".as_bytes()),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn interpolation_examples() {
        let s = interpolate_gaps(&raw(&[Some(4.0), None, Some(6.0)])).unwrap();
        assert_eq!(s.values, vec![4.0, 5.0, 6.0]);
        let s = interpolate_gaps(&raw(&[Some(3.0), None, None, Some(9.0)])).unwrap();
        assert_eq!(s.values, vec![3.0, 5.0, 7.0, 9.0]);
        assert!(matches!(
            interpolate_gaps(&raw(&[None, Some(5.0), Some(6.0)])),
            Err(Error::BoundaryGap(_))
        ));
        assert!(matches!(
            interpolate_gaps(&raw(&[None, None])),
            Err(Error::AllMissing)
        ));
    }

    #[test]
    fn window_counts() {
        let s = Series::from_values(vec![1.0; 108]);
        let w = partition_windows(&s, 36).unwrap();
        assert_eq!(w.windows, vec![0..36, 36..72, 72..108]);
        let w = partition_windows(&Series::from_values(vec![1.0; 100]), 36).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.windows[1].end, 72);
        assert!(matches!(
            partition_windows(&Series::from_values(vec![1.0; 10]), 36),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec::default();
        let sizes = |n: usize| {
            let v: Vec<usize> = (0..n).collect();
            let (a, b, c) = chrono_split(&v, &spec).unwrap();
            (a.len(), b.len(), c.len())
        };
        assert_eq!(sizes(100), (60, 20, 20));
        assert_eq!(sizes(10), (6, 2, 2));
        assert_eq!(sizes(101), (60, 20, 21));
        assert!(chrono_split(&[1, 2, 3], &spec).is_err());
        assert!(SplitSpec::new(0.5, 0.5, 0.1).is_err());
    }

    #[test]
    fn kfold_examples() {
        let folds = kfold_split(10, 5).unwrap();
        assert!(folds
            .iter()
            .all(|f| f.test.len() == 2 && f.train.len() == 8));
        let sizes: Vec<usize> = kfold_split(11, 5)
            .unwrap()
            .iter()
            .map(|f| f.test.len())
            .collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
        assert!(matches!(kfold_split(4, 5), Err(Error::TooFewItems { .. })));
    }

    proptest! {
        #[test]
        fn interpolation_is_bounded_and_idempotent(
            vals in proptest::collection::vec(proptest::option::weighted(0.7, 0.0f64..30.0), 2..60),
            first in 0.0f64..30.0,
            last in 0.0f64..30.0,
        ) {
            let mut vals = vals;
            vals[0] = Some(first);
            let n = vals.len();
            vals[n - 1] = Some(last);
            let s = interpolate_gaps(&raw(&vals)).unwrap();
            for (i, v) in vals.iter().enumerate() {
                match v {
                    Some(x) => prop_assert_eq!(s.values[i], *x),
                    None => {
                        let lo = (0..i).rev().find(|&j| vals[j].is_some()).unwrap();
                        let hi = (i..n).find(|&j| vals[j].is_some()).unwrap();
                        let (a, b) = (vals[lo].unwrap(), vals[hi].unwrap());
                        prop_assert!(s.values[i] >= a.min(b) - 1e-12 && s.values[i] <= a.max(b) + 1e-12);
                    }
                }
            }
            let again = interpolate_gaps(&raw(&s.values.iter().map(|v| Some(*v)).collect::<Vec<_>>())).unwrap();
            prop_assert_eq!(again.values, s.values);
        }

        #[test]
        fn windows_tile_prefix(n in 2usize..400, size in 2usize..40) {
            prop_assume!(n >= size);
            let s = Series::from_values((0..n).map(|i| i as f64).collect());
            let w = partition_windows(&s, size).unwrap();
            let joined: Vec<f64> = w.windows.iter().flat_map(|r| s.values[r.clone()].iter().copied()).collect();
            prop_assert_eq!(&joined[..], &s.values[..w.len() * size]);
            prop_assert!(n - w.len() * size < size);
        }

        #[test]
        fn split_partitions_input(n in 5usize..500, a in 0.05f64..0.8, b in 0.05f64..0.8) {
            prop_assume!(a + b < 0.95);
            let spec = SplitSpec::new(a, b, 1.0 - a - b).unwrap();
            let v: Vec<usize> = (0..n).collect();
            let (x, y, z) = chrono_split(&v, &spec).unwrap();
            let joined: Vec<usize> = x.iter().chain(y).chain(z).copied().collect();
            prop_assert_eq!(joined, v);
        }

        #[test]
        fn kfold_covers_every_index_once(n in 2usize..300, k in 2usize..12) {
            prop_assume!(n >= k);
            let folds = kfold_split(n, k).unwrap();
            let mut seen = vec![0u32; n];
            for f in &folds {
                for i in f.test.clone() { seen[i] += 1; }
                prop_assert_eq!(f.train.len() + f.test.len(), n);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let lens: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
        }
    }
}
