//! Embedding algebra: normalization, branch concatenation and linear
//! dimensionality reduction.

use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const PROJECTION_MAGIC: &[u8; 4] = b"FPPJ";
const PROJECTION_VERSION: u16 = 1;
const UNIT_TOLERANCE: f64 = 1e-6;
const ORTHONORMAL_TOLERANCE: f64 = 1e-8;
const EIGEN_TOLERANCE: f64 = 1e-10;
const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Embedding sizes swept in the dimension study.
pub const SWEEP_DIMS: [usize; 7] = [32, 64, 128, 256, 512, 1024, 2048];

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate(format!("cannot normalize vector of norm {n}")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Concatenate two unit-norm branch embeddings with equal weight.
pub fn concat_branches(texture: &[f64], minutiae: &[f64]) -> Result<Vec<f64>> {
    for (name, v) in [("texture", texture), ("minutiae", minutiae)] {
        let n = norm(v);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Contract(format!("{name} branch has norm {n}, expected 1")));
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(texture.iter().chain(minutiae).map(|x| x * s).collect())
}

/// Keep the first `n` coordinates and re-normalize.
pub fn truncate(v: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > v.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot truncate length {} to {n}",
            v.len()
        )));
    }
    l2_normalize(&v[..n])
}

/// Linear projection onto the leading principal components of a training
/// set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    input_dim: usize,
    output_dim: usize,
    mean: Vec<f64>,
    /// Row-major `output_dim x input_dim`.
    basis: Vec<f64>,
    /// Per-component variance; empty for models read from disk.
    explained_variance: Vec<f64>,
}

impl ProjectionModel {
    /// Assemble a model from explicit parts, checking shapes and
    /// orthonormality of the basis rows.
    pub fn new(mean: Vec<f64>, basis_rows: Vec<Vec<f64>>, explained_variance: Vec<f64>) -> Result<Self> {
        let input_dim = mean.len();
        let output_dim = basis_rows.len();
        if input_dim == 0 || output_dim == 0 || output_dim > input_dim {
            return Err(Error::InvalidArgument(format!(
                "projection {input_dim} -> {output_dim} is not a reduction"
            )));
        }
        if !explained_variance.is_empty() && explained_variance.len() != output_dim {
            return Err(Error::DimensionMismatch {
                expected: output_dim,
                actual: explained_variance.len(),
            });
        }
        let mut basis = Vec::with_capacity(input_dim * output_dim);
        for row in &basis_rows {
            if row.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    expected: input_dim,
                    actual: row.len(),
                });
            }
            basis.extend_from_slice(row);
        }
        let model = Self {
            input_dim,
            output_dim,
            mean,
            basis,
            explained_variance,
        };
        model.check_orthonormal()?;
        Ok(model)
    }

    fn check_orthonormal(&self) -> Result<()> {
        for i in 0..self.output_dim {
            for j in i..self.output_dim {
                let d: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (d - want).abs() > ORTHONORMAL_TOLERANCE {
                    return Err(Error::Contract(format!("basis rows {i},{j} have dot product {d}")));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Unnormalized coordinates of `v - mean` in the basis.
    pub fn coordinates(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: v.len(),
            });
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((0..self.output_dim)
            .map(|i| self.row(i).iter().zip(&centered).map(|(b, c)| b * c).sum())
            .collect())
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        l2_normalize(&self.coordinates(v)?).map_err(|_| Error::Degenerate("projected vector has zero norm".into()))
    }

    /// The same model keeping only the leading `n` components.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.output_dim {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {n} of {} components",
                self.output_dim
            )));
        }
        Ok(Self {
            input_dim: self.input_dim,
            output_dim: n,
            mean: self.mean.clone(),
            basis: self.basis[..n * self.input_dim].to_vec(),
            explained_variance: self.explained_variance.iter().take(n).copied().collect(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + 8 * self.input_dim * (1 + self.output_dim));
        self.encode(&mut out).expect("writing to Vec cannot fail");
        out
    }

    fn encode<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(PROJECTION_MAGIC)?;
        w.write_u16::<LittleEndian>(PROJECTION_VERSION)?;
        w.write_u32::<LittleEndian>(self.input_dim as u32)?;
        w.write_u32::<LittleEndian>(self.output_dim as u32)?;
        for &x in self.mean.iter().chain(&self.basis) {
            w.write_f64::<LittleEndian>(x)?;
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 14 || &bytes[..4] != PROJECTION_MAGIC {
            return Err(Error::Format("bad projection model magic".into()));
        }
        let mut c = Cursor::new(&bytes[4..]);
        let eof = |_| Error::Format("truncated projection model".into());
        let version = c.read_u16::<LittleEndian>().map_err(eof)?;
        if version != PROJECTION_VERSION {
            return Err(Error::Format(format!("projection model version {version} unsupported")));
        }
        let input_dim = c.read_u32::<LittleEndian>().map_err(eof)? as usize;
        let output_dim = c.read_u32::<LittleEndian>().map_err(eof)? as usize;
        let expected = 14 + 8 * input_dim * (1 + output_dim);
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "projection model is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let mut mean = vec![0.0; input_dim];
        c.read_f64_into::<LittleEndian>(&mut mean).map_err(eof)?;
        let mut rows = Vec::with_capacity(output_dim);
        for _ in 0..output_dim {
            let mut row = vec![0.0; input_dim];
            c.read_f64_into::<LittleEndian>(&mut row).map_err(eof)?;
            rows.push(row);
        }
        Self::new(mean, rows, Vec::new()).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn write_projection(model: &ProjectionModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    model
        .encode(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_projection(path: &Path) -> Result<ProjectionModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ProjectionModel::from_bytes(&bytes)
}

/// Flip `row` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(row: &mut [f64]) {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if x.abs() > row[best].abs() {
            best = i;
        }
    }
    if row[best] < 0.0 {
        row.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Remove from `v` its components along `basis` (twice, for stability) and
/// normalize. Returns `None` when nothing independent is left.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    let n = norm(&v);
    (n > 1e-6).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Eigenpairs of a symmetric matrix sorted by eigenvalue descending (index
/// order on ties).
fn sorted_eigen(m: DMatrix<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    let eig = SymmetricEigen::try_new(m, EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS)
        .ok_or_else(|| Error::Degenerate("eigen-solver did not converge".into()))?;
    let mut pairs: Vec<(usize, f64)> = eig.eigenvalues.iter().copied().enumerate().collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(pairs
        .into_iter()
        .map(|(i, val)| (val, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect())
}

/// Fit a principal-component projection to `n` dimensions.
///
/// With more samples than dimensions the covariance matrix is decomposed
/// directly; otherwise the Gram matrix is, and its eigenvectors are mapped
/// back to input space. Components beyond the data rank are completed
/// from the standard basis with zero explained variance.
pub fn fit_projection(train: &[Vec<f64>], n: usize) -> Result<ProjectionModel> {
    if train.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 training vectors, got {}",
            train.len()
        )));
    }
    let dim = train[0].len();
    if let Some(bad) = train.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    if n == 0 || n > dim {
        return Err(Error::InvalidArgument(format!(
            "output dimension {n} outside 1..={dim}"
        )));
    }
    let m = train.len();
    let mut mean = vec![0.0; dim];
    for v in train {
        mean.iter_mut().zip(v).for_each(|(a, x)| *a += x);
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let x = DMatrix::from_fn(m, dim, |i, j| train[i][j] - mean[j]);
    let denom = (m - 1) as f64;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut variance: Vec<f64> = Vec::with_capacity(n);
    if m > dim {
        let cov = x.transpose() * &x;
        for (val, vec) in sorted_eigen(cov)?.into_iter().take(n) {
            rows.push(vec);
            variance.push((val / denom).max(0.0));
        }
    } else {
        let gram = &x * x.transpose();
        let pairs = sorted_eigen(gram)?;
        let top = pairs.first().map_or(0.0, |p| p.0);
        for (val, u) in pairs {
            if rows.len() == n || !(val > top * 1e-10) || top <= 0.0 {
                break;
            }
            let u = DMatrix::from_column_slice(m, 1, &u);
            let v: Vec<f64> = (x.transpose() * u).iter().copied().collect();
            if let Some(v) = orthogonalize(v, &rows) {
                rows.push(v);
                variance.push(val / denom);
            }
        }
    }
    let mut axis = 0;
    while rows.len() < n {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        axis += 1;
        if let Some(v) = orthogonalize(e, &rows) {
            rows.push(v);
            variance.push(0.0);
        }
    }
    rows.iter_mut().for_each(|r| fix_sign(r));
    ProjectionModel::new(mean, rows, variance)
}
