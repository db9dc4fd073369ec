//! Gridded datasets and their on-disk formats.
//!
//! Three plain-text formats, all UTF-8 with LF line endings and `.`
//! decimals:
//!
//! * coherency CSV, header
//!   `x,y,label,split,t11,t22,t33,re_t12,im_t12,re_t13,im_t13,re_t23,im_t23`
//! * feature CSV, header `x,y,label,split,f1,f2,f3,f4,f5,f6,f7`
//! * label map: one-line header `width height`, then row-major integers
//!
//! Dataset files print floats with shortest round-trip formatting so a
//! write/read cycle reproduces values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::coherency::CoherencyMatrix;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM};

/// Train/test membership of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    None,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::None => "none",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            "none" => Some(Split::None),
            _ => None,
        }
    }
}

/// One pixel of a coherency grid.
#[derive(Debug, Clone, Copy)]
pub struct Pixel {
    pub matrix: CoherencyMatrix,
    pub label: u32,
    pub split: Split,
}

/// A width x height raster of coherency pixels, row-major.
#[derive(Debug, Clone)]
pub struct GridDataset {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Pixel>,
}

impl GridDataset {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn labeled_count(&self) -> usize {
        self.pixels.iter().filter(|p| p.label > 0).count()
    }

    pub fn train_count(&self) -> usize {
        self.pixels.iter().filter(|p| p.split == Split::Train).count()
    }

    /// Fraction of labeled pixels carrying the train flag.
    pub fn achieved_training_fraction(&self) -> f64 {
        let labeled = self.labeled_count();
        if labeled == 0 {
            0.0
        } else {
            self.train_count() as f64 / labeled as f64
        }
    }

    /// Sorted unique labels (> 0) present in the training split.
    pub fn training_classes(&self) -> Vec<u32> {
        let mut classes: Vec<u32> = self
            .pixels
            .iter()
            .filter(|p| p.split == Split::Train && p.label > 0)
            .map(|p| p.label)
            .collect();
        classes.sort_unstable();
        classes.dedup();
        classes
    }

    pub fn truth_map(&self) -> LabelMap {
        LabelMap {
            width: self.width,
            height: self.height,
            labels: self.pixels.iter().map(|p| p.label).collect(),
        }
    }

    pub fn splits(&self) -> Vec<Split> {
        self.pixels.iter().map(|p| p.split).collect()
    }
}

/// One pixel with extracted features.
#[derive(Debug, Clone, Copy)]
pub struct PixelSample {
    pub x: u32,
    pub y: u32,
    pub label: u32,
    pub split: Split,
    pub features: FeatureVector,
}

/// A raster of feature samples, row-major.
#[derive(Debug, Clone)]
pub struct FeatureGrid {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<PixelSample>,
}

/// A raster of class labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

const COHERENCY_HEADER: &str = "x,y,label,split,t11,t22,t33,re_t12,im_t12,re_t13,im_t13,re_t23,im_t23";
const FEATURE_HEADER: &str = "x,y,label,split,f1,f2,f3,f4,f5,f6,f7";

pub fn write_coherency_csv(ds: &GridDataset, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(ds.pixels.len() * 64 + 80);
    out.push_str(COHERENCY_HEADER);
    out.push('\n');
    for (i, px) in ds.pixels.iter().enumerate() {
        let x = i % ds.width;
        let y = i / ds.width;
        let _ = write!(out, "{},{},{},{}", x, y, px.label, px.split.as_str());
        for v in px.matrix.to_scalars() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_coherency_csv(path: &Path) -> Result<GridDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == COHERENCY_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(&name, 1, format!("unexpected header `{header}`")))
        }
        None => return Err(Error::parse(&name, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(Error::parse(
                &name,
                lineno,
                format!("expected 13 fields, got {}", fields.len()),
            ));
        }
        let x: usize = parse_field(&name, lineno, fields[0], "x")?;
        let y: usize = parse_field(&name, lineno, fields[1], "y")?;
        let label: u32 = parse_field(&name, lineno, fields[2], "label")?;
        let split = Split::parse(fields[3])
            .ok_or_else(|| Error::parse(&name, lineno, format!("bad split `{}`", fields[3])))?;
        let mut scalars = [0.0; 9];
        for (k, slot) in scalars.iter_mut().enumerate() {
            *slot = parse_field(&name, lineno, fields[4 + k], "matrix entry")?;
        }
        rows.push((x, y, Pixel {
            matrix: CoherencyMatrix::from_scalars(scalars),
            label,
            split,
        }));
    }
    grid_from_rows(&name, rows)
}

pub fn write_feature_csv(grid: &FeatureGrid, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(grid.samples.len() * 48 + 48);
    out.push_str(FEATURE_HEADER);
    out.push('\n');
    for s in &grid.samples {
        let _ = write!(out, "{},{},{},{}", s.x, s.y, s.label, s.split.as_str());
        for v in s.features.0 {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == FEATURE_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(&name, 1, format!("unexpected header `{header}`")))
        }
        None => return Err(Error::parse(&name, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + FEATURE_DIM {
            return Err(Error::parse(
                &name,
                lineno,
                format!("expected {} fields, got {}", 4 + FEATURE_DIM, fields.len()),
            ));
        }
        let x: usize = parse_field(&name, lineno, fields[0], "x")?;
        let y: usize = parse_field(&name, lineno, fields[1], "y")?;
        let label: u32 = parse_field(&name, lineno, fields[2], "label")?;
        let split = Split::parse(fields[3])
            .ok_or_else(|| Error::parse(&name, lineno, format!("bad split `{}`", fields[3])))?;
        let mut features = [0.0; FEATURE_DIM];
        for (k, slot) in features.iter_mut().enumerate() {
            *slot = parse_field(&name, lineno, fields[4 + k], "feature")?;
        }
        rows.push((x, y, PixelSample {
            x: x as u32,
            y: y as u32,
            label,
            split,
            features: FeatureVector(features),
        }));
    }
    let name2 = name.clone();
    let (width, height, samples) = pack_rows(&name2, rows)?;
    Ok(FeatureGrid {
        width,
        height,
        samples,
    })
}

pub fn write_label_map(map: &LabelMap, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(map.labels.len() * 3 + 16);
    let _ = writeln!(out, "{} {}", map.width, map.height);
    for row in map.labels.chunks(map.width) {
        let mut first = true;
        for label in row {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{label}");
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (width, height) = match lines.next() {
        Some((_, header)) => {
            let mut it = header.split_whitespace();
            let w: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(&name, 1, "bad width"))?;
            let h: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(&name, 1, "bad height"))?;
            (w, h)
        }
        None => return Err(Error::parse(&name, 1, "empty file")),
    };
    let mut labels = Vec::with_capacity(width * height);
    for (idx, line) in lines {
        for tok in line.split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::parse(&name, idx + 1, format!("bad label `{tok}`")))?;
            labels.push(v);
        }
    }
    if labels.len() != width * height {
        return Err(Error::parse(
            &name,
            1,
            format!("expected {} labels, got {}", width * height, labels.len()),
        ));
    }
    Ok(LabelMap {
        width,
        height,
        labels,
    })
}

fn parse_field<T: std::str::FromStr>(name: &str, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(name, line, format!("bad {what} `{tok}`")))
}

fn grid_from_rows(name: &str, rows: Vec<(usize, usize, Pixel)>) -> Result<GridDataset> {
    let (width, height, pixels) = pack_rows(name, rows)?;
    Ok(GridDataset {
        width,
        height,
        pixels,
    })
}

/// Validates strict row-major order and infers the grid dimensions.
fn pack_rows<T>(name: &str, rows: Vec<(usize, usize, T)>) -> Result<(usize, usize, Vec<T>)> {
    if rows.is_empty() {
        return Err(Error::parse(name, 1, "no data rows"));
    }
    let width = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let height = rows.iter().map(|r| r.1).max().unwrap() + 1;
    if rows.len() != width * height {
        return Err(Error::parse(
            name,
            1,
            format!("grid {width}x{height} needs {} rows, got {}", width * height, rows.len()),
        ));
    }
    for (i, (x, y, _)) in rows.iter().enumerate() {
        if *x != i % width || *y != i / width {
            return Err(Error::parse(
                name,
                i + 2,
                format!("expected row-major pixel ({},{}), got ({x},{y})", i % width, i / width),
            ));
        }
    }
    Ok((width, height, rows.into_iter().map(|r| r.2).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tiny_grid() -> GridDataset {
        let mut pixels = Vec::new();
        for i in 0..6 {
            let f = i as f64;
            pixels.push(Pixel {
                matrix: CoherencyMatrix::new(
                    1.0 + f * 0.25,
                    0.5,
                    0.25,
                    Complex64::new(0.1 * f, -0.05),
                    Complex64::new(0.01, 0.02),
                    Complex64::new(-0.03, 0.001 * f),
                ),
                label: 1 + (i % 2) as u32,
                split: if i < 2 { Split::Train } else { Split::Test },
            });
        }
        GridDataset {
            width: 3,
            height: 2,
            pixels,
        }
    }

    #[test]
    fn coherency_csv_roundtrip_is_value_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let ds = tiny_grid();
        write_coherency_csv(&ds, &path).unwrap();
        let back = read_coherency_csv(&path).unwrap();
        assert_eq!(back.width, ds.width);
        assert_eq!(back.height, ds.height);
        for (a, b) in ds.pixels.iter().zip(back.pixels.iter()) {
            assert_eq!(a.matrix.to_scalars(), b.matrix.to_scalars());
            assert_eq!(a.label, b.label);
            assert_eq!(a.split, b.split);
        }
    }

    #[test]
    fn label_map_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.txt");
        let map = LabelMap {
            width: 3,
            height: 2,
            labels: vec![1, 2, 0, 2, 1, 1],
        };
        write_label_map(&map, &path).unwrap();
        assert_eq!(read_label_map(&path).unwrap(), map);
    }

    #[test]
    fn csv_parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            format!("{COHERENCY_HEADER}\n0,0,1,train,1,1,1,0,0,0,0,0,oops\n"),
        )
        .unwrap();
        match read_coherency_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order.csv");
        std::fs::write(
            &path,
            format!(
                "{COHERENCY_HEADER}\n1,0,1,train,1,1,1,0,0,0,0,0,0\n0,0,1,train,1,1,1,0,0,0,0,0,0\n"
            ),
        )
        .unwrap();
        assert!(matches!(read_coherency_csv(&path), Err(Error::Parse { .. })));
    }
}
