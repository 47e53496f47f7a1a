//! Labelled feature datasets for the classification problems.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// Radius of the sphere on which synthetic class means are drawn.
pub const MEAN_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MnpcDataset {
    num_classes: usize,
    num_features: usize,
    samples: Vec<(Vec<f64>, usize)>,
}

impl MnpcDataset {
    pub fn new(num_classes: usize, num_features: usize, samples: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if num_features == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        for (i, (xi, c)) in samples.iter().enumerate() {
            if xi.len() != num_features {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has {} features, expected {num_features}",
                    xi.len()
                )));
            }
            if *c >= num_classes {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has class {c}, expected < {num_classes}"
                )));
            }
            if xi.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("sample {i} has a non-finite feature")));
            }
        }
        Ok(MnpcDataset {
            num_classes,
            num_features,
            samples,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn samples(&self) -> &[(Vec<f64>, usize)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Features grouped by class; errors if any class has no samples.
    pub fn by_class(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (xi, c) in &self.samples {
            out[*c].push(xi.clone());
        }
        if let Some(c) = out.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("class {c} has no samples")));
        }
        Ok(out)
    }
}

/// Gaussian clusters around seeded class means of norm [`MEAN_RADIUS`].
pub fn generate_synthetic_mnpc(
    seed: u64,
    num_classes: usize,
    num_features: usize,
    per_class: usize,
    noise_std: f64,
) -> Result<MnpcDataset> {
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be positive".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be finite and nonnegative, got {noise_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for c in 0..num_classes {
        let z: Vec<f64> = loop {
            let z: Vec<f64> = (0..num_features).map(|_| normal(&mut rng)).collect();
            if norm2(&z) > 1e-12 || num_features == 0 {
                break z;
            }
        };
        let n = norm2(&z);
        let mean: Vec<f64> = z.iter().map(|v| MEAN_RADIUS * v / n).collect();
        for _ in 0..per_class {
            let xi = mean.iter().map(|m| m + noise_std * normal(&mut rng)).collect();
            samples.push((xi, c));
        }
    }
    MnpcDataset::new(num_classes, num_features, samples)
}

/// Reads `class_id,feat1,...,featD` rows after one header line. The number
/// of classes is one more than the largest class id.
pub fn load_csv_dataset(path: &Path) -> Result<MnpcDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("{other:?}"),
            },
        })?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut width: Option<usize> = None;
    let mut samples = Vec::new();
    let mut max_class = 0usize;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 2 {
            return Err(parse_err(line, "expected a class id and at least one feature".into()));
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(parse_err(
                    line,
                    format!("ragged row: {} fields, expected {w}", rec.len()),
                ))
            }
            _ => {}
        }
        let class: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad class id {:?}", &rec[0])))?;
        let feats = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("bad feature value {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        max_class = max_class.max(class);
        samples.push((feats, class));
    }
    let Some(width) = width else {
        return Err(Error::EmptyDataset(format!("{} has no data rows", path.display())));
    };
    MnpcDataset::new((max_class + 1).max(2), width - 1, samples)
}
