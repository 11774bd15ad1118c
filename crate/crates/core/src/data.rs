//! Datasets: CSV feature files, the two-moon generator and PCA preprocessing.
//!
//! CSV files hold one point per row with an optional integer class id in the
//! last column. A first row that does not parse as numbers is taken as a
//! header. Class ids are remapped to `1..=C` in sorted order; when a source and
//! target file are loaded together the mapping is shared.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, DenseMatrix};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `d x n`, one point per column.
    pub x: DenseMatrix,
    pub labels: Option<Vec<Label>>,
    pub name: String,
    pub role: Role,
    /// Original class id of label `i + 1`.
    pub label_map: Vec<i64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Number of classes in the label mapping.
    pub fn classes(&self) -> usize {
        self.label_map.len()
    }

    /// Copy without labels, for handing to a fit routine.
    pub fn unlabeled(&self) -> Dataset {
        Dataset {
            labels: None,
            ..self.clone()
        }
    }
}

struct RawCsv {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<i64>>,
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_label(path: &Path, line: usize, field: &str) -> Result<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    match field.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::NonIntegerLabel {
            path: path.to_path_buf(),
            line,
            value: field.to_string(),
        }),
    }
}

fn read_raw(path: &Path, has_labels: bool) -> Result<RawCsv> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, 1, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            // header
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        let n_features = if has_labels { expected - 1 } else { expected };
        if n_features == 0 {
            return Err(parse_err(path, line, 1, "no feature columns"));
        }
        let mut row = Vec::with_capacity(n_features);
        for (col, field) in record.iter().take(n_features).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, col + 1, format!("{field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, col + 1, "non-finite value"));
            }
            row.push(v);
        }
        if has_labels {
            labels.push(parse_label(path, line, &record[n_features])?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, 1, "no data rows"));
    }
    Ok(RawCsv {
        rows,
        labels: has_labels.then_some(labels),
    })
}

fn build(raw: RawCsv, map: &[i64], name: String, role: Role) -> Dataset {
    let d = raw.rows[0].len();
    let n = raw.rows.len();
    let x = DenseMatrix::from_fn(d, n, |i, j| raw.rows[j][i]);
    let labels = raw.labels.map(|ls| {
        ls.iter()
            .map(|l| map.binary_search(l).expect("label is in the vocabulary") as Label + 1)
            .collect()
    });
    Dataset {
        x,
        labels,
        name,
        role,
        label_map: map.to_vec(),
    }
}

fn vocabulary<'a>(sets: impl IntoIterator<Item = &'a RawCsv>) -> Vec<i64> {
    let mut vocab = BTreeSet::new();
    for raw in sets {
        vocab.extend(raw.labels.iter().flatten().copied());
    }
    vocab.into_iter().collect()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads one file as a source dataset with its own label mapping.
pub fn load_csv(path: impl AsRef<Path>, has_labels: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = read_raw(path, has_labels)?;
    let map = vocabulary([&raw]);
    Ok(build(raw, &map, stem(path), Role::Source))
}

/// Loads a labeled source file and a target file with a shared label mapping.
pub fn load_csv_pair(
    source: impl AsRef<Path>,
    target: impl AsRef<Path>,
    target_has_labels: bool,
) -> Result<(Dataset, Dataset)> {
    let (sp, tp) = (source.as_ref(), target.as_ref());
    let s = read_raw(sp, true)?;
    let t = read_raw(tp, target_has_labels)?;
    if s.rows[0].len() != t.rows[0].len() {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} features, {} has {}",
            sp.display(),
            s.rows[0].len(),
            tp.display(),
            t.rows[0].len()
        )));
    }
    let map = vocabulary([&s, &t]);
    Ok((
        build(s, &map, stem(sp), Role::Source),
        build(t, &map, stem(tp), Role::Target),
    ))
}

/// Writes one point per row with 17 significant digits; labels (original
/// class ids) go in the last column when present.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(
        File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
    );
    for j in 0..dataset.n() {
        let mut line = dataset
            .x
            .column(j)
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        if let Some(labels) = &dataset.labels {
            let l = labels[j];
            let id = dataset.label_map.get(l as usize - 1).copied().unwrap_or(l as i64);
            line.push_str(&format!(",{id}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainShift {
    pub rotation_deg: f64,
    pub translation: [f64; 2],
}

impl Default for DomainShift {
    fn default() -> Self {
        Self::rotation(30.0)
    }
}

impl DomainShift {
    pub fn identity() -> Self {
        Self::rotation(0.0)
    }

    pub fn rotation(deg: f64) -> Self {
        Self {
            rotation_deg: deg,
            translation: [0.0, 0.0],
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        [
            c * p[0] - s * p[1] + self.translation[0],
            s * p[0] + c * p[1] + self.translation[1],
        ]
    }
}

fn draw_moons(n_per_class: usize, noise: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(2 * n_per_class);
    for class in 0..2 {
        for _ in 0..n_per_class {
            let t = rng.random_range(0.0..std::f64::consts::PI);
            let mut p = if class == 0 {
                [t.cos(), t.sin()]
            } else {
                [1.0 - t.cos(), 0.5 - t.sin()]
            };
            if let Some(noise) = noise {
                p[0] += noise.sample(rng);
                p[1] += noise.sample(rng);
            }
            pts.push(p);
        }
    }
    pts
}

/// Two interleaved half-circles (labels 1 and 2, `n_per_class` each, in class
/// order). The target is an independent draw from the same distribution with
/// `shift` applied.
pub fn two_moon(n_per_class: usize, noise_sd: f64, shift: &DomainShift, seed: u64) -> (Dataset, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (noise_sd > 0.0).then(|| Normal::new(0.0, noise_sd).expect("finite positive sd"));
    let source = draw_moons(n_per_class, &noise, &mut rng);
    let target: Vec<[f64; 2]> = draw_moons(n_per_class, &noise, &mut rng)
        .into_iter()
        .map(|p| shift.apply(p))
        .collect();
    let labels: Vec<Label> = (0..2 * n_per_class).map(|i| 1 + (i >= n_per_class) as Label).collect();
    let make = |pts: Vec<[f64; 2]>, name: &str, role| Dataset {
        x: DenseMatrix::from_fn(2, pts.len(), |i, j| pts[j][i]),
        labels: Some(labels.clone()),
        name: name.to_string(),
        role,
        label_map: vec![1, 2],
    };
    (
        make(source, "two-moon-source", Role::Source),
        make(target, "two-moon-target", Role::Target),
    )
}

/// Projects mean-centered `x` onto its `target_dim` leading principal
/// directions. Each direction is signed so its largest-magnitude coordinate is
/// positive. Works through the smaller of the `d x d` scatter matrix and the
/// `n x n` Gram matrix.
pub fn pca_reduce(x: &DenseMatrix, target_dim: usize) -> Result<DenseMatrix> {
    let (d, n) = x.shape();
    if target_dim == 0 || target_dim > d.min(n) {
        return Err(Error::DimensionMismatch(format!(
            "target dimension {target_dim} must lie in 1..={}",
            d.min(n)
        )));
    }
    let means: Vec<f64> = (0..d).map(|i| x.row(i).iter().sum::<f64>() / n as f64).collect();
    let xc = DenseMatrix::from_fn(d, n, |i, j| x.get(i, j) - means[i]);

    // d x k principal directions, leading component first
    let dirs = if d <= n {
        let mut scatter = xc.matmul(&xc.transpose())?;
        scatter.symmetrize();
        let v = sym_eigen(&scatter)?.largest(target_dim).vectors;
        DenseMatrix::from_fn(d, target_dim, |i, c| v.get(i, target_dim - 1 - c))
    } else {
        let mut g = xc.t_matmul(&xc)?;
        g.symmetrize();
        let pairs = sym_eigen(&g)?.largest(target_dim);
        let xv = xc.matmul(&pairs.vectors)?;
        let floor = 1e-12 * pairs.values.last().copied().unwrap_or(0.0).abs();
        DenseMatrix::from_fn(d, target_dim, |i, c| {
            let c = target_dim - 1 - c;
            let lam = pairs.values[c];
            if lam > floor {
                xv.get(i, c) / lam.sqrt()
            } else {
                0.0
            }
        })
    };
    let mut dirs = dirs;
    for c in 0..target_dim {
        let col = dirs.column(c);
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            for i in 0..d {
                dirs[(i, c)] = -dirs[(i, c)];
            }
        }
    }
    dirs.t_matmul(&xc)
}

/// Reduces source and target jointly and splits the result back.
pub fn pca_reduce_pair(source: &mut Dataset, target: &mut Dataset, target_dim: usize) -> Result<()> {
    let joint = pca_reduce(&source.x.hstack(&target.x)?, target_dim)?;
    let ns = source.n();
    source.x = joint.column_range(0, ns);
    target.x = joint.column_range(ns, joint.cols());
    Ok(())
}

/// Path of the generated two-moon files inside an output directory.
pub fn toy_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("source.csv"), dir.join("target.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn load_with_labels_remaps() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "1,2,0\n3,4,1\n");
        let ds = load_csv(&p, true).unwrap();
        assert_eq!(ds.x, DenseMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));
        assert_eq!(ds.labels(), Some(&[1, 2][..]));
        assert_eq!(ds.label_map, vec![0, 1]);
    }

    #[test]
    fn header_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "h.csv", "f1,f2,label\n1.5,2,7\n3,4,3\n");
        let ds = load_csv(&p, true).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.labels(), Some(&[2, 1][..]));
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "e.csv", "");
        assert!(matches!(load_csv(&empty, true), Err(Error::Parse { .. })));
        let ragged = write(&dir, "r.csv", "1,2,1\n3,1\n");
        assert!(matches!(
            load_csv(&ragged, true),
            Err(Error::RaggedRows { line: 2, expected: 3, found: 2, .. })
        ));
        let bad_label = write(&dir, "l.csv", "1,2,1\n3,4,1.5\n");
        assert!(matches!(load_csv(&bad_label, true), Err(Error::NonIntegerLabel { line: 2, .. })));
        let bad_value = write(&dir, "v.csv", "1,2,1\n3,x,1\n");
        assert!(matches!(
            load_csv(&bad_value, true),
            Err(Error::Parse { line: 2, column: 2, .. })
        ));
        assert!(matches!(load_csv(dir.path().join("missing.csv"), true), Err(Error::Io(_))));
    }

    #[test]
    fn pair_shares_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(&dir, "s.csv", "0,0,5\n1,1,9\n");
        let t = write(&dir, "t.csv", "0,1,9\n1,0,7\n");
        let (src, tgt) = load_csv_pair(&s, &t, true).unwrap();
        assert_eq!(src.label_map, vec![5, 7, 9]);
        assert_eq!(src.labels(), Some(&[1, 3][..]));
        assert_eq!(tgt.labels(), Some(&[3, 2][..]));
        assert_eq!(tgt.role, Role::Target);

        let t3 = write(&dir, "t3.csv", "0,1,1\n");
        assert!(matches!(load_csv_pair(&s, &t3, false), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (src, _) = two_moon(20, 0.1, &DomainShift::default(), 3);
        let p = dir.path().join("rt.csv");
        save_csv(&src, &p).unwrap();
        let back = load_csv(&p, true).unwrap();
        assert_eq!(back.x, src.x);
        assert_eq!(back.labels, src.labels);
    }

    #[test]
    fn two_moon_shape_and_determinism() {
        let (s, t) = two_moon(50, 0.1, &DomainShift::default(), 11);
        assert_eq!(s.x.shape(), (2, 100));
        assert_eq!(t.x.shape(), (2, 100));
        let labels = s.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 50);
        assert_eq!(labels.iter().filter(|&&l| l == 2).count(), 50);
        let (s2, t2) = two_moon(50, 0.1, &DomainShift::default(), 11);
        assert_eq!(s, s2);
        assert_eq!(t, t2);
        let (s3, _) = two_moon(50, 0.1, &DomainShift::default(), 12);
        assert_ne!(s, s3);
    }

    #[test]
    fn noiseless_moons_lie_on_circles() {
        let (s, _) = two_moon(30, 0.0, &DomainShift::identity(), 1);
        for j in 0..60 {
            let (x, y) = (s.x.get(0, j), s.x.get(1, j));
            let r = if j < 30 {
                (x * x + y * y).sqrt()
            } else {
                ((x - 1.0).powi(2) + (y - 0.5).powi(2)).sqrt()
            };
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_is_rigid() {
        let shift = DomainShift {
            rotation_deg: 90.0,
            translation: [1.0, -2.0],
        };
        let p = shift.apply([1.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pca_full_basis_reconstructs() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.0, 4.0, 3.0], &[0.5, -1.0, 2.0, 0.0, 1.0], &[3.0, 3.0, 1.0, -2.0, 0.0]]);
        let z = pca_reduce(&x, 3).unwrap();
        // orthogonal change of basis preserves pairwise distances
        for i in 0..5 {
            for j in 0..5 {
                let dx = crate::linalg::sq_dist(&x.column(i), &x.column(j));
                let dz = crate::linalg::sq_dist(&z.column(i), &z.column(j));
                assert!((dx - dz).abs() < 1e-8);
            }
        }
        assert!(pca_reduce(&x, 4).is_err());
        assert!(pca_reduce(&x, 0).is_err());
    }

    #[test]
    fn pca_wide_matches_tall_route() {
        // d > n goes through the Gram matrix
        let x = DenseMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * (i * j) as f64);
        let z = pca_reduce(&x, 3).unwrap();
        let zt = pca_reduce(&x.transpose().transpose(), 3).unwrap();
        assert_eq!(z, zt);
        let var: f64 = z.as_slice().iter().map(|v| v * v).sum();
        let means: Vec<f64> = (0..6).map(|i| x.row(i).iter().sum::<f64>() / 4.0).collect();
        let total: f64 = (0..6)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| (x.get(i, j) - means[i]).powi(2))
            .sum();
        // centered data of 4 points has rank <= 3, so 3 components keep everything
        assert!((var - total).abs() < 1e-8 * total);
    }
}
