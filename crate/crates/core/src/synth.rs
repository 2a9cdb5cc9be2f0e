//! Seeded two-feature datasets for exercising the learners.
//!
//! All generators emit features `f1`, `f2` rounded to two decimals and a
//! `class` target with labels `red` (positive) and `blue`.
//!
//! * `clusters3`: three axis-aligned red boxes in a 30 x 20 field of blue
//!   points. 30% of the rows are red, split evenly over the boxes.
//! * `nested`: an L-shaped red region made of two arms, 35% of the rows,
//!   inside a 20 x 20 blue field. One box cannot cover it without also
//!   covering the blue corner between the arms.
//! * `xor4`: four Gaussian blobs (sd 0.7) at `(+-2, +-2)`; red where the
//!   coordinates share a sign.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, DatasetError, FeatureKind, Label, Sample, Schema, Value};

pub const GENERATORS: [&str; 3] = ["clusters3", "nested", "xor4"];

/// Closed box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Region { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64, margin: f64) -> bool {
        self.x0 - margin <= x
            && x <= self.x1 + margin
            && self.y0 - margin <= y
            && y <= self.y1 + margin
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        (
            rng.gen_range(self.x0..=self.x1),
            rng.gen_range(self.y0..=self.y1),
        )
    }
}

pub const CLUSTERS3_BOXES: [Region; 3] = [
    Region::new(13.0, 17.0, 12.5, 15.5),
    Region::new(5.8, 8.2, 4.8, 6.5),
    Region::new(23.6, 26.7, 4.6, 6.9),
];
const CLUSTERS3_FIELD: Region = Region::new(0.0, 30.0, 0.0, 20.0);

pub const NESTED_ARMS: [Region; 2] = [
    Region::new(4.0, 10.0, 4.0, 8.0),
    Region::new(4.0, 8.0, 8.0, 14.0),
];
const NESTED_FIELD: Region = Region::new(0.0, 20.0, 0.0, 20.0);

pub fn synth_schema() -> Schema {
    Schema::new(
        vec![
            ("f1".into(), FeatureKind::Numeric),
            ("f2".into(), FeatureKind::Numeric),
        ],
        "class",
        "red",
        Some("blue".into()),
    )
    .expect("static schema is valid")
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn point(x: f64, y: f64, label: Label) -> Sample {
    Sample {
        values: vec![Value::Number(round2(x)), Value::Number(round2(y))],
        label,
    }
}

fn finish(mut samples: Vec<Sample>, rng: &mut ChaCha8Rng) -> Dataset {
    samples.shuffle(rng);
    Dataset::new(Arc::new(synth_schema()), samples).expect("generated rows match the schema")
}

/// Layout for [`boxes`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLayout {
    pub regions: Vec<Region>,
    pub field: Region,
    pub positive_share: f64,
    /// Spread positives by region area instead of evenly.
    pub by_area: bool,
    /// Blue points keep at least this distance (per axis) from every region.
    pub margin: f64,
}

/// Positives uniform inside the regions, negatives uniform over the field
/// away from every region.
pub fn boxes(seed: u64, size: usize, layout: &BoxLayout) -> Dataset {
    let BoxLayout {
        regions,
        field,
        positive_share,
        by_area,
        margin,
    } = layout;
    let (field, by_area, margin) = (*field, *by_area, *margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = ((size as f64) * *positive_share).round() as usize;
    let areas: Vec<f64> = regions
        .iter()
        .map(|r| (r.x1 - r.x0) * (r.y1 - r.y0))
        .collect();
    let total: f64 = areas.iter().sum();
    let mut counts: Vec<usize> = if by_area {
        areas
            .iter()
            .map(|a| (n_pos as f64 * a / total).floor() as usize)
            .collect()
    } else {
        vec![n_pos / regions.len(); regions.len()]
    };
    let mut k = 0;
    while counts.iter().sum::<usize>() < n_pos {
        counts[k % regions.len()] += 1;
        k += 1;
    }
    let mut samples = Vec::with_capacity(size);
    for (r, &c) in regions.iter().zip(&counts) {
        for _ in 0..c {
            let (x, y) = r.sample(&mut rng);
            samples.push(point(x, y, Label::Positive));
        }
    }
    while samples.len() < size {
        let (x, y) = field.sample(&mut rng);
        if regions.iter().any(|r| r.contains(x, y, margin)) {
            continue;
        }
        samples.push(point(x, y, Label::Negative));
    }
    finish(samples, &mut rng)
}

pub fn clusters3(seed: u64, size: usize) -> Dataset {
    boxes(
        seed,
        size,
        &BoxLayout {
            regions: CLUSTERS3_BOXES.to_vec(),
            field: CLUSTERS3_FIELD,
            positive_share: 0.3,
            by_area: false,
            margin: 1.0,
        },
    )
}

pub fn nested(seed: u64, size: usize) -> Dataset {
    boxes(
        seed,
        size,
        &BoxLayout {
            regions: NESTED_ARMS.to_vec(),
            field: NESTED_FIELD,
            positive_share: 0.35,
            by_area: true,
            margin: 1.0,
        },
    )
}

pub fn xor4(seed: u64, size: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.7).expect("valid sd");
    let centers = [(2.0, 2.0), (-2.0, -2.0), (2.0, -2.0), (-2.0, 2.0)];
    let samples = (0..size)
        .map(|i| {
            let (cx, cy): (f64, f64) = centers[i % 4];
            let label = if cx * cy > 0.0 {
                Label::Positive
            } else {
                Label::Negative
            };
            point(
                cx + noise.sample(&mut rng),
                cy + noise.sample(&mut rng),
                label,
            )
        })
        .collect();
    finish(samples, &mut rng)
}

pub fn generate(name: &str, seed: u64, size: usize) -> Result<Dataset, DatasetError> {
    if size < 8 {
        return Err(DatasetError::InvalidArgument(format!(
            "size {size} is too small, need >= 8"
        )));
    }
    match name {
        "clusters3" => Ok(clusters3(seed, size)),
        "nested" => Ok(nested(seed, size)),
        "xor4" => Ok(xor4(seed, size)),
        other => Err(DatasetError::InvalidArgument(format!(
            "unknown generator `{other}` (expected one of {})",
            GENERATORS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes(d: &Dataset) -> Vec<u8> {
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        buf
    }

    #[test]
    fn clusters3_shape() {
        let d = clusters3(42, 200);
        assert_eq!(d.len(), 200);
        assert_eq!(d.schema().n_features(), 2);
        assert_eq!(d.class_counts(), (60, 140));
        for s in d.samples() {
            let (x, y) = (
                s.values[0].as_number().unwrap(),
                s.values[1].as_number().unwrap(),
            );
            let inside = CLUSTERS3_BOXES.iter().any(|r| r.contains(x, y, 0.0));
            assert_eq!(inside, s.label.is_positive());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        for name in GENERATORS {
            assert_eq!(
                bytes(&generate(name, 7, 120).unwrap()),
                bytes(&generate(name, 7, 120).unwrap())
            );
        }
        assert_ne!(bytes(&clusters3(1, 100)), bytes(&clusters3(2, 100)));
    }

    #[test]
    fn unknown_generator() {
        assert!(generate("spiral", 0, 100).is_err());
        assert!(generate("xor4", 0, 3).is_err());
    }
}
