//! Synthetic benchmarks, contamination and dataset I/O.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed_from_u64`, so a
//! seed reproduces the same dataset bit for bit on every platform.

mod contaminate;
mod io;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::bisect;

pub use contaminate::{contaminate, ContaminationKind, ContaminationSpec, SelectionMode};
pub use io::{
    load_csv, load_manifest, manifest_path, split, write_csv, write_dataset, CsvSchema,
    DatasetManifest, Standardizer,
};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `q`-quantile of the chi-square distribution with `df` degrees of freedom,
/// by bisection on the regularized lower incomplete gamma function.
pub fn chi_square_quantile(df: f64, q: f64) -> Result<f64> {
    if !(df > 0.0) || !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "chi-square quantile needs df > 0 and q in (0,1), got df={df}, q={q}"
        )));
    }
    let cdf = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            statrs::function::gamma::gamma_lr(df / 2.0, x / 2.0)
        }
    };
    let mut hi = df.max(1.0);
    while cdf(hi) < q {
        hi *= 2.0;
    }
    Ok(bisect(|x| cdf(x) - q, 0.0, hi, 1e-13 * hi))
}

/// Median of χ²₁₀, the class threshold of [`gen_hastie`].
pub fn hastie_threshold() -> f64 {
    static T: OnceLock<f64> = OnceLock::new();
    *T.get_or_init(|| chi_square_quantile(10.0, 0.5).expect("valid arguments"))
}

/// `4 · median(χ²₂₀)`, the class threshold of [`gen_gaussian_quantiles`].
pub fn gaussian_quantiles_threshold() -> f64 {
    static T: OnceLock<f64> = OnceLock::new();
    *T.get_or_init(|| 4.0 * chi_square_quantile(20.0, 0.5).expect("valid arguments"))
}

/// Ten iid standard normal features; `y = +1` iff `Σ x² > median(χ²₁₀)`.
pub fn gen_hastie(n: usize, seed: u64) -> Dataset {
    sphere_classes(n, 10, 1.0, hastie_threshold(), seed)
}

/// Twenty features from `N(0, 2I)`; `y = +1` iff `Σ x² > 4 · median(χ²₂₀)`.
///
/// The threshold is used exactly as stated, which leaves the positive class
/// rare (about 0.7%): `Σ x² / 2` is χ²₂₀, so the effective cut sits at twice
/// the median. The balance is measured, not corrected.
pub fn gen_gaussian_quantiles(n: usize, seed: u64) -> Dataset {
    sphere_classes(n, 20, 2f64.sqrt(), gaussian_quantiles_threshold(), seed)
}

fn sphere_classes(n: usize, d: usize, scale: f64, threshold: f64, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r2 = 0.0;
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = scale * z;
            r2 += x * x;
            features.push(x);
        }
        labels.push(if r2 > threshold { 1.0 } else { -1.0 });
    }
    Dataset::new(features, labels, d).expect("generated data is valid")
}

/// Mixture component of a Long/Servedio sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongServedioKind {
    LargeMargin,
    Puller,
    Penalizer,
}

pub const LONG_SERVEDIO_FEATURES: usize = 21;

/// Long/Servedio data: 21 features in `{-1, +1}`, perfectly separated by
/// `sign(Σ x_i)`.
pub fn gen_long_servedio(n: usize, seed: u64) -> Dataset {
    gen_long_servedio_with_kinds(n, seed).0
}

/// [`gen_long_servedio`] plus the mixture component of each sample.
pub fn gen_long_servedio_with_kinds(n: usize, seed: u64) -> (Dataset, Vec<LongServedioKind>) {
    let d = LONG_SERVEDIO_FEATURES;
    let mut rng = rng(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut kinds = Vec::with_capacity(n);
    for _ in 0..n {
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let u: f64 = rng.random();
        let mut x = vec![-y; d];
        let kind = if u < 0.25 {
            x.iter_mut().for_each(|v| *v = y);
            LongServedioKind::LargeMargin
        } else if u < 0.5 {
            x[..11].iter_mut().for_each(|v| *v = y);
            LongServedioKind::Puller
        } else {
            for i in index::sample(&mut rng, 11, 5) {
                x[i] = y;
            }
            for i in index::sample(&mut rng, 10, 6) {
                x[11 + i] = y;
            }
            LongServedioKind::Penalizer
        };
        features.extend_from_slice(&x);
        labels.push(y);
        kinds.push(kind);
    }
    (
        Dataset::new(features, labels, d).expect("generated data is valid"),
        kinds,
    )
}

/// 121-point grid `x_{i,j} = (0.3i, 0.3j)`, `i, j = 0..=10`, labelled `+1` when
/// `i + j <= 10`, with the labels of `x_{2,4}` and `x_{3,4}` flipped. The two
/// flipped points are marked in the mask. Rows are ordered by `i`, then `j`.
pub fn flipped_grid() -> Dataset {
    let mut rows = Vec::with_capacity(121);
    let mut labels = Vec::with_capacity(121);
    let mut mask = Vec::with_capacity(121);
    for i in 0..=10 {
        for j in 0..=10 {
            rows.push(vec![0.3 * i as f64, 0.3 * j as f64]);
            let flipped = j == 4 && (i == 2 || i == 3);
            let y = if i + j <= 10 { 1.0 } else { -1.0 };
            labels.push(if flipped { -y } else { y });
            mask.push(flipped);
        }
    }
    Dataset::from_rows(&rows, labels)
        .and_then(|d| d.with_mask(mask))
        .expect("grid is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Hastie,
    GaussianQuantiles,
    LongServedio,
}

impl Generator {
    pub fn generate(self, n: usize, seed: u64) -> Dataset {
        match self {
            Generator::Hastie => gen_hastie(n, seed),
            Generator::GaussianQuantiles => gen_gaussian_quantiles(n, seed),
            Generator::LongServedio => gen_long_servedio(n, seed),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Hastie => "hastie",
            Generator::GaussianQuantiles => "gaussian_quantiles",
            Generator::LongServedio => "long_servedio",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hastie" | "hastie_10_2" => Ok(Generator::Hastie),
            "gaussian_quantiles" => Ok(Generator::GaussianQuantiles),
            "long_servedio" => Ok(Generator::LongServedio),
            other => Err(Error::InvalidConfig(format!("unknown generator `{other}`"))),
        }
    }
}
