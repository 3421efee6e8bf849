//! Datasets and the synthetic finite-element surrogate.
//!
//! CSV layout: a header row naming feature columns `x0, x1, …` followed by
//! either target columns `y0, y1, …` (regression) or a single `label`
//! column (classification). One sample per row. Files may begin with
//! `#` comment lines; written files start with `# schema_version=1`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Regression(DMatrix<f64>),
    Classes(Vec<usize>),
}

impl Targets {
    fn len(&self) -> usize {
        match self {
            Targets::Regression(m) => m.nrows(),
            Targets::Classes(v) => v.len(),
        }
    }
}

/// Samples as rows. Row counts of features and targets always agree.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    targets: Targets,
    split: Split,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, targets: Targets, split: Split) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(Error::DimensionMismatch { expected: features.nrows(), found: targets.len() });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Targets::Regression(y) = &targets {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { features, targets, split })
    }

    pub fn regression(features: DMatrix<f64>, targets: DMatrix<f64>, split: Split) -> Result<Self> {
        Self::new(features, Targets::Regression(targets), split)
    }

    pub fn classification(features: DMatrix<f64>, labels: Vec<usize>, split: Split) -> Result<Self> {
        Self::new(features, Targets::Classes(labels), split)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// First `n_train` rows become the train split, the rest the test split.
    pub fn split_at(&self, n_train: usize) -> Result<(Dataset, Dataset)> {
        if n_train > self.len() {
            return Err(Error::invalid(format!("cannot take {n_train} training rows from {}", self.len())));
        }
        let n_test = self.len() - n_train;
        let f_train = self.features.rows(0, n_train).into_owned();
        let f_test = self.features.rows(n_train, n_test).into_owned();
        let (t_train, t_test) = match &self.targets {
            Targets::Regression(y) => (
                Targets::Regression(y.rows(0, n_train).into_owned()),
                Targets::Regression(y.rows(n_train, n_test).into_owned()),
            ),
            Targets::Classes(l) => (
                Targets::Classes(l[..n_train].to_vec()),
                Targets::Classes(l[n_train..].to_vec()),
            ),
        };
        Ok((
            Dataset::new(f_train, t_train, Split::Train)?,
            Dataset::new(f_test, t_test, Split::Test)?,
        ))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut writer = writer;
        writeln!(writer, "# schema_version={SCHEMA_VERSION}")?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.in_dim()).map(|i| format!("x{i}")).collect();
        match &self.targets {
            Targets::Regression(y) => header.extend((0..y.ncols()).map(|j| format!("y{j}"))),
            Targets::Classes(_) => header.push("label".into()),
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            match &self.targets {
                Targets::Regression(y) => rec.extend(y.row(i).iter().map(|v| v.to_string())),
                Targets::Classes(l) => rec.push(l[i].to_string()),
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, split: Split) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        let n_x = header.iter().take_while(|h| is_column(h, 'x')).count();
        let rest: Vec<&str> = header.iter().skip(n_x).collect();
        let classes = rest == ["label"];
        if n_x == 0 || !(classes || (!rest.is_empty() && rest.iter().all(|h| is_column(h, 'y')))) {
            return Err(Error::Parse {
                line: 1,
                message: "header must be x0..xN followed by y0..yM or a single `label`".into(),
            });
        }
        let mut feats = Vec::new();
        let mut targs = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != header.len() {
                return Err(Error::Parse { line, message: format!("expected {} fields, found {}", header.len(), rec.len()) });
            }
            for (j, cell) in rec.iter().enumerate() {
                if j < n_x {
                    feats.push(parse_num(cell, line)?);
                } else if classes {
                    labels.push(cell.parse::<usize>().map_err(|_| Error::Parse {
                        line,
                        message: format!("`{cell}` is not a class label"),
                    })?);
                } else {
                    targs.push(parse_num(cell, line)?);
                }
            }
        }
        let rows = feats.len() / n_x;
        let features = DMatrix::from_row_slice(rows, n_x, &feats);
        if classes {
            Dataset::classification(features, labels, split)
        } else {
            Dataset::regression(features, DMatrix::from_row_slice(rows, rest.len(), &targs), split)
        }
    }
}

/// Reads a features-only CSV (header `x0, x1, …`) into a samples×features
/// matrix.
pub fn read_features_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.is_empty() || !header.iter().all(|h| is_column(h, 'x')) {
        return Err(Error::Parse { line: 1, message: "header must be x0..xN".into() });
    }
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse { line, message: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        for cell in rec.iter() {
            values.push(parse_num(cell, line)?);
        }
    }
    let m = DMatrix::from_row_slice(values.len() / header.len(), header.len(), &values);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

fn is_column(h: &str, prefix: char) -> bool {
    h.strip_prefix(prefix).is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
}

fn parse_num(cell: &str, line: usize) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("`{cell}` is not a number") })
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { line, message: e.to_string() }
}

/// Fixed smooth map standing in for a finite-element response:
///
/// ```text
/// y_j = Σ_k A_jk x_k + xᵀ B_j x + Σ_m C_jm sin(ω_m · x + φ_m)
/// ```
///
/// with `A ~ N(0, 1/d)`, symmetric `B_j ~ N(0, 1/d²)`, `ω_m ~ N(0, 1)`,
/// `φ_m ~ U[0, 2π)`, `C ~ N(0, 1/d)` and `m = 1..d`. Inputs are drawn
/// uniformly from `[−1, 1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FemSurrogate {
    linear: DMatrix<f64>,
    quadratic: Vec<DMatrix<f64>>,
    freqs: DMatrix<f64>,
    phases: DVector<f64>,
    mixing: DMatrix<f64>,
}

impl FemSurrogate {
    pub fn new(seed: u64, in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::invalid("dataset dimensions must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d_cafe_0001);
        let d = in_dim as f64;
        let mut gauss = |scale: f64| -> f64 {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        };
        let linear = DMatrix::from_fn(out_dim, in_dim, |_, _| gauss(1.0 / d.sqrt()));
        let quadratic = (0..out_dim)
            .map(|_| {
                let raw = DMatrix::from_fn(in_dim, in_dim, |_, _| gauss(1.0 / d));
                (&raw + raw.transpose()) * 0.5
            })
            .collect();
        let freqs = DMatrix::from_fn(in_dim, in_dim, |_, _| gauss(1.0));
        let mixing = DMatrix::from_fn(out_dim, in_dim, |_, _| gauss(1.0 / d.sqrt()));
        let phases = DVector::from_fn(in_dim, |_, _| rng.random_range(0.0..std::f64::consts::TAU));
        Ok(Self { linear, quadratic, freqs, phases, mixing })
    }

    pub fn in_dim(&self) -> usize {
        self.linear.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let waves = (&self.freqs * x + &self.phases).map(f64::sin);
        let mut y = &self.linear * x + &self.mixing * waves;
        for (j, b) in self.quadratic.iter().enumerate() {
            y[j] += x.dot(&(b * x));
        }
        y
    }
}

/// Deterministic regression dataset from [`FemSurrogate`] plus Gaussian
/// noise of standard deviation `noise_sigma`.
pub fn synth_fem_dataset(
    seed: u64,
    n_samples: usize,
    in_dim: usize,
    out_dim: usize,
    noise_sigma: f64,
) -> Result<Dataset> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid(format!("noise_sigma must be non-negative, got {noise_sigma}")));
    }
    let map = FemSurrogate::new(seed, in_dim, out_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut features = DMatrix::zeros(n_samples, in_dim);
    let mut targets = DMatrix::zeros(n_samples, out_dim);
    for i in 0..n_samples {
        let x = DVector::from_fn(in_dim, |_, _| rng.random_range(-1.0..1.0));
        let mut y = map.eval(&x);
        if noise_sigma > 0.0 {
            y.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        }
        features.set_row(i, &x.transpose());
        targets.set_row(i, &y.transpose());
    }
    Dataset::regression(features, targets, Split::Train)
}

/// Gaussian blobs around random class centres, for classification checks.
pub fn synth_blobs(seed: u64, n_samples: usize, dim: usize, classes: usize, spread: f64) -> Result<Dataset> {
    if dim == 0 || classes == 0 {
        return Err(Error::invalid("blobs need at least one dimension and one class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<DVector<f64>> = (0..classes)
        .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)))
        .collect();
    let mut features = DMatrix::zeros(n_samples, dim);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let c = i % classes;
        let noise: DVector<f64> = DVector::from_fn(dim, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * spread
        });
        features.set_row(i, &(&centres[c] + noise).transpose());
        labels.push(c);
    }
    Dataset::classification(features, labels, Split::Train)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = synth_fem_dataset(7, 20, 7, 5, 0.01).unwrap();
        let b = synth_fem_dataset(7, 20, 7, 5, 0.01).unwrap();
        assert_eq!(a, b);
        let c = synth_fem_dataset(8, 20, 7, 5, 0.01).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_targets_follow_the_map() {
        let ds = synth_fem_dataset(3, 10, 7, 4, 0.0).unwrap();
        let map = FemSurrogate::new(3, 7, 4).unwrap();
        let Targets::Regression(y) = ds.targets() else { panic!() };
        for i in 0..ds.len() {
            assert_eq!(map.eval(&ds.row(i)).transpose(), y.row(i));
        }
        assert_eq!(ds.in_dim(), 7);
    }

    #[test]
    fn invalid_dims() {
        assert!(synth_fem_dataset(1, 5, 0, 3, 0.0).is_err());
        assert!(synth_fem_dataset(1, 5, 3, 0, 0.0).is_err());
        assert!(synth_fem_dataset(1, 5, 3, 3, -1.0).is_err());
    }

    #[test]
    fn row_mismatch_rejected() {
        let err = Dataset::classification(DMatrix::zeros(3, 2), vec![0, 1], Split::Train).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn csv_round_trip() {
        let ds = synth_fem_dataset(5, 6, 3, 2, 0.1).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# schema_version=1\nx0,x1,x2,y0,y1\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice(), Split::Train).unwrap(), ds);

        let blobs = synth_blobs(1, 8, 2, 2, 0.1).unwrap();
        let mut buf = Vec::new();
        blobs.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice(), Split::Train).unwrap(), blobs);
    }

    #[test]
    fn csv_errors() {
        assert!(Dataset::read_csv("a,b\n1,2\n".as_bytes(), Split::Train).is_err());
        let err = Dataset::read_csv("x0,y0\n1,zz\n".as_bytes(), Split::Train).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = Dataset::read_csv("# schema_version=1\nx0,y0\n1,2\n3,q\n".as_bytes(), Split::Train).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        assert!(Dataset::read_csv("x0,label\n1,-1\n".as_bytes(), Split::Train).is_err());
    }

    #[test]
    fn split_keeps_order() {
        let ds = synth_fem_dataset(2, 10, 2, 1, 0.0).unwrap();
        let (tr, te) = ds.split_at(7).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        assert_eq!(te.split(), Split::Test);
        assert_eq!(te.row(0), ds.row(7));
        assert!(ds.split_at(11).is_err());
    }
}
