//! Measurements, CSV ingestion and the benchmark target generators.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::AugmentedInput;
use crate::scalar::{lit, Real};

/// One labelled sample. `alpha` is an optional per-measurement step-weight
/// override; when absent the trainer's policy applies.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    pub x: AugmentedInput<T>,
    pub y: T,
    pub alpha: Option<T>,
}

impl<T: Real> Measurement<T> {
    pub fn new(x: AugmentedInput<T>, y: T, alpha: Option<T>) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFinite {
                what: "measurement target",
            });
        }
        if let Some(a) = alpha {
            if !a.is_finite() || a < T::zero() {
                return Err(Error::NonFinite {
                    what: "measurement weight",
                });
            }
        }
        Ok(Self { x, y, alpha })
    }
}

/// Immutable batch of measurements sharing one input dimension. `is_static`
/// records that inputs do not move between iterations, which the batch
/// trainer assumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    measurements: Vec<Measurement<T>>,
    is_static: bool,
}

impl<T: Real> Dataset<T> {
    pub fn new(measurements: Vec<Measurement<T>>) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = measurements[0].x.dim();
        for m in &measurements {
            if m.x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    what: "measurement input",
                    expected: dim,
                    actual: m.x.dim(),
                });
            }
        }
        Ok(Self {
            measurements,
            is_static: true,
        })
    }

    pub fn measurements(&self) -> &[Measurement<T>] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn is_static(&self) -> bool {
        self.is_static
    }

    /// Raw input dimension `N`.
    pub fn input_dim(&self) -> usize {
        self.measurements[0].x.dim() - 1
    }

    // -- CSV ---------------------------------------------------------------

    /// Loads `x1,...,xN,y[,alpha]` rows. Rows without an alpha column get
    /// `alpha_default`.
    pub fn load_csv(path: &Path, alpha_default: Option<T>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(file), alpha_default)
    }

    pub fn read_csv<R: BufRead>(reader: R, alpha_default: Option<T>) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::EmptyDataset),
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
            }
        };
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let has_alpha = columns.last().map(|c| c == "alpha").unwrap_or(false);
        let n_inputs = columns.len() - 1 - usize::from(has_alpha);
        if n_inputs == 0 || columns.get(n_inputs).map(|c| c.as_str()) != Some("y") {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header x1,...,xN,y[,alpha], got '{header}'"),
            });
        }

        let mut measurements = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(|f| f.trim()).collect();
            if fields.len() != columns.len() {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!(
                        "expected {} fields, got {}",
                        columns.len(),
                        fields.len()
                    ),
                });
            }
            let parse = |s: &str| -> Result<T> {
                let v = s.parse::<T>().map_err(|_| Error::Csv {
                    line: line_no,
                    message: format!("invalid number '{s}'"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line: line_no,
                        message: format!("non-finite value '{s}'"),
                    });
                }
                Ok(v)
            };
            let raw: Vec<T> = fields[..n_inputs]
                .iter()
                .map(|f| parse(f))
                .collect::<Result<_>>()?;
            let y = parse(fields[n_inputs])?;
            let alpha = if has_alpha {
                let a = parse(fields[n_inputs + 1])?;
                if a < T::zero() {
                    return Err(Error::Csv {
                        line: line_no,
                        message: "alpha must be non-negative".into(),
                    });
                }
                Some(a)
            } else {
                alpha_default
            };
            measurements.push(Measurement::new(AugmentedInput::from_raw(&raw)?, y, alpha)?);
        }
        Dataset::new(measurements)
    }

    /// Writes the CSV form; floats use the shortest decimal round-trip
    /// encoding, so save-then-load is bit-exact.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        let n = self.input_dim();
        let with_alpha = self.measurements.iter().any(|m| m.alpha.is_some());
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        if with_alpha {
            header.push("alpha".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for m in &self.measurements {
            let mut fields: Vec<String> = m.x.raw().iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", m.y));
            if with_alpha {
                let a = m.alpha.unwrap_or_else(T::one);
                fields.push(format!("{a}"));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Benchmark generators
// ---------------------------------------------------------------------------

/// Unit pyramid target used by the representation benchmark.
pub fn pyramid_target<T: Real>(x1: T, x2: T) -> T {
    crate::model::pyramid_closed_form(x1, x2)
}

/// Grid samples of the unit pyramid over `[-h, h]^2`.
pub fn gen_pyramid<T: Real>(grid_half_width: T, points_per_axis: usize) -> Result<Dataset<T>> {
    assert!(points_per_axis >= 2, "need at least two points per axis");
    let h = grid_half_width;
    let step = (h + h) / lit::<T>((points_per_axis - 1) as f64);
    let mut measurements = Vec::with_capacity(points_per_axis * points_per_axis);
    for i in 0..points_per_axis {
        for j in 0..points_per_axis {
            let x1 = -h + step * lit::<T>(i as f64);
            let x2 = -h + step * lit::<T>(j as f64);
            measurements.push(Measurement::new(
                AugmentedInput::from_raw(&[x1, x2])?,
                pyramid_target(x1, x2),
                None,
            )?);
        }
    }
    Dataset::new(measurements)
}

/// Kink locations of the canonical polygon: the min part switches at 0, the
/// max part at -1/1.2 and 2.5.
pub fn polygon_kinks<T: Real>() -> [T; 3] {
    [-(T::one() / lit::<T>(1.2)), T::zero(), lit::<T>(2.5)]
}

/// Canonical 1-D polygon target:
/// `min(0.5x+2, -0.5x+2) + max(-x-1, 0.2x, x-2)` on `[-4, 4]`.
pub fn polygon_target<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let min_part = (half * x + two).min(-half * x + two);
    let max_part = (-x - T::one()).max(lit::<T>(0.2) * x).max(x - two);
    min_part + max_part
}

/// The eight polygon sample abscissae: endpoints, the three kinks, and the
/// midpoints of the first, third and fourth linear segments.
pub fn polygon_sample_points<T: Real>() -> [T; 8] {
    let [k1, k2, k3] = polygon_kinks::<T>();
    let lo = lit::<T>(-4.0);
    let hi = lit::<T>(4.0);
    let half = lit::<T>(0.5);
    [
        lo,
        (lo + k1) * half,
        k1,
        k2,
        (k2 + k3) * half,
        k3,
        (k3 + hi) * half,
        hi,
    ]
}

/// The paper's eight-point polygon dataset.
pub fn gen_polygon<T: Real>() -> Dataset<T> {
    let measurements = polygon_sample_points::<T>()
        .iter()
        .map(|&x| {
            Measurement::new(
                AugmentedInput::from_raw(&[x]).expect("finite abscissa"),
                polygon_target(x),
                None,
            )
            .expect("finite target")
        })
        .collect();
    Dataset::new(measurements).expect("polygon dataset is non-empty")
}

/// Corner target `y(x) = max_n |x_n|`.
pub fn corner_target<T: Real>(raw: &[T]) -> T {
    raw.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Stratified samples of `max_n |x_n|` in `[-1, 1]^dim`: for each of the
/// `2 * dim` linear surfaces (a signed coordinate dominating), draws
/// `samples_per_region` points whose dominating coordinate has magnitude in
/// `[0.55, 1]` while the others stay in `[-0.5, 0.5]`.
pub fn gen_corner<T: Real>(dim: usize, samples_per_region: usize, seed: u64) -> Result<Dataset<T>> {
    assert!(dim >= 1, "corner target needs at least one dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut measurements = Vec::with_capacity(2 * dim * samples_per_region);
    for n in 0..dim {
        for sign in [1.0f64, -1.0] {
            for _ in 0..samples_per_region {
                let mut raw: Vec<T> = (0..dim)
                    .map(|_| lit::<T>(rng.random_range(-0.5..0.5)))
                    .collect();
                raw[n] = lit::<T>(sign * rng.random_range(0.55..1.0));
                let y = corner_target(&raw);
                measurements.push(Measurement::new(AugmentedInput::from_raw(&raw)?, y, None)?);
            }
        }
    }
    Dataset::new(measurements)
}

/// Signed index of the dominating coordinate of a corner sample, used by the
/// coverage checks: `2n` for `+x_n`, `2n+1` for `-x_n`.
pub fn corner_surface_signature<T: Real>(raw: &[T]) -> usize {
    let mut best = 0;
    let mut best_val = T::zero();
    for (i, v) in raw.iter().enumerate() {
        if v.abs() > best_val {
            best_val = v.abs();
            best = i;
        }
    }
    2 * best + usize::from(raw[best] < T::zero())
}
