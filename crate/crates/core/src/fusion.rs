//! Saliency/image fusion.
//!
//! A one-channel saliency map is lifted to three channels by two stacked
//! cross-correlations,
//!
//! ```text
//! e_c = w3[c] * (b1 + gamma * (w1 * s)) + b3[c]
//! ```
//!
//! and added to the image: `I_S = clamp(I + e, 0, 1)`. Borders are zero
//! padded.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::cross_correlate;
use crate::raster::{ImageBuffer, Plane, SaliencyMap};

pub type Kernel = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionWeights {
    pub w1: Kernel,
    pub b1: f64,
    pub w3: [Kernel; 3],
    pub b3: [f64; 3],
    pub gamma: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            w1: vec![vec![1.0]],
            b1: 0.0,
            w3: [vec![vec![1.0]], vec![vec![1.0]], vec![vec![1.0]]],
            b3: [0.0; 3],
            gamma: 0.5,
        }
    }
}

fn kernel_plane(k: &Kernel, name: &str) -> Result<Plane> {
    let n = k.len();
    if n.is_multiple_of(2) || k.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidConfig(format!("{name} must be a square kernel with odd size")));
    }
    if k.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("{name} has non-finite entries")));
    }
    Plane::new(n, n, k.iter().flatten().copied().collect())
}

impl FusionWeights {
    pub fn with_gamma(gamma: f64) -> Self {
        FusionWeights {
            gamma,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        kernel_plane(&self.w1, "w1")?;
        for (c, k) in self.w3.iter().enumerate() {
            kernel_plane(k, &format!("w3[{c}]"))?;
        }
        let scalars = [self.b1, self.gamma, self.b3[0], self.b3[1], self.b3[2]];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("fusion biases and gamma must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let w: FusionWeights = serde_json::from_str(s)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FusionWeights::from_json_str(&text)
    }
}

/// Three unclamped channels derived from `s`.
pub fn expand_channels(s: &SaliencyMap, w: &FusionWeights) -> Result<[Plane; 3]> {
    w.validate()?;
    expand_plane(s.plane(), w)
}

/// [`expand_channels`] on an arbitrary real field (no `[0, 1]` requirement).
pub fn expand_plane(s: &Plane, w: &FusionWeights) -> Result<[Plane; 3]> {
    let w1 = kernel_plane(&w.w1, "w1")?;
    let hidden = cross_correlate(s, &w1).map(|v| w.b1 + w.gamma * v);
    let mut out = Vec::with_capacity(3);
    for c in 0..3 {
        let k = kernel_plane(&w.w3[c], "w3")?;
        let b = w.b3[c];
        out.push(cross_correlate(&hidden, &k).map(|v| v + b));
    }
    Ok(out.try_into().expect("three channels"))
}

/// `clamp(img + expand_channels(s), 0, 1)`. Grayscale images are replicated
/// to RGB first.
pub fn merge(img: &ImageBuffer, s: &SaliencyMap, w: &FusionWeights) -> Result<ImageBuffer> {
    if img.width() != s.width() || img.height() != s.height() {
        return Err(Error::SizeMismatch {
            image_w: img.width(),
            image_h: img.height(),
            map_w: s.width(),
            map_h: s.height(),
        });
    }
    let extra = expand_channels(s, w)?;
    let rgb = img.to_rgb();
    let data = rgb
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v + extra[i % 3].data()[i / 3]).clamp(0.0, 1.0))
        .collect();
    ImageBuffer::new(img.width(), img.height(), 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(p: Plane) -> SaliencyMap {
        SaliencyMap::new(p).unwrap()
    }

    #[test]
    fn zero_map_gives_zero_channels() {
        let e = expand_channels(&SaliencyMap::zeros(5, 4), &FusionWeights::default()).unwrap();
        for ch in &e {
            assert!(ch.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn unit_map_gives_gamma() {
        let e = expand_channels(&map(Plane::filled(5, 5, 1.0)), &FusionWeights::default()).unwrap();
        for ch in &e {
            assert!(ch.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn impulse_through_box_kernel() {
        let mut p = Plane::filled(7, 7, 0.0);
        p.set(3, 3, 1.0);
        let w = FusionWeights {
            w1: vec![vec![1.0 / 9.0; 3]; 3],
            ..Default::default()
        };
        let e = expand_channels(&map(p), &w).unwrap();
        for ch in &e {
            for y in 0..7usize {
                for x in 0..7usize {
                    let expected = if x.abs_diff(3) <= 1 && y.abs_diff(3) <= 1 { 0.5 / 9.0 } else { 0.0 };
                    assert!((ch.get(x, y) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn merge_examples() {
        let data: Vec<f64> = (0..48).map(|i| (i % 17) as f64 / 16.0).collect();
        let img = ImageBuffer::new(4, 4, 3, data).unwrap();
        let same = merge(&img, &SaliencyMap::zeros(4, 4), &FusionWeights::default()).unwrap();
        assert_eq!(same, img);

        let gray = ImageBuffer::new(6, 6, 3, vec![0.4; 108]).unwrap();
        let fused = merge(&gray, &map(Plane::filled(6, 6, 1.0)), &FusionWeights::default()).unwrap();
        assert!(fused.data().iter().all(|&v| (v - 0.9).abs() < 1e-12));

        let white = ImageBuffer::new(3, 3, 3, vec![1.0; 27]).unwrap();
        let fused = merge(&white, &map(Plane::filled(3, 3, 0.7)), &FusionWeights::default()).unwrap();
        assert!(fused.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn merge_size_mismatch() {
        let img = ImageBuffer::new(4, 4, 3, vec![0.0; 48]).unwrap();
        assert!(matches!(
            merge(&img, &SaliencyMap::zeros(4, 5), &FusionWeights::default()),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn weights_json() {
        let w = FusionWeights::from_json_str(
            r#"{"w1": [[0,0,0],[0,2,0],[0,0,0]], "b1": 0.1, "w3": [[[1]],[[0.5]],[[0]]], "b3": [0,0,0.2], "gamma": 1.0}"#,
        )
        .unwrap();
        assert_eq!(w.w1.len(), 3);
        assert_eq!(w.b3[2], 0.2);
        let partial = FusionWeights::from_json_str(r#"{"gamma": 0.25}"#).unwrap();
        assert_eq!(partial, FusionWeights::with_gamma(0.25));
        assert!(FusionWeights::from_json_str(r#"{"w1": [[1, 2]]}"#).is_err());
        assert!(FusionWeights::from_json_str(r#"{"w1": [[1,1],[1,1]]}"#).is_err());
    }

    fn field(n: usize) -> impl Strategy<Value = Plane> {
        proptest::collection::vec(0.0..1.0f64, n * n).prop_map(move |d| Plane::new(n, n, d).unwrap())
    }

    proptest! {
        #[test]
        fn output_in_range_and_monotone(s in field(6), bump in field(6), img in proptest::collection::vec(0.0..1.0f64, 108)) {
            let img = ImageBuffer::new(6, 6, 3, img).unwrap();
            let w = FusionWeights { w1: vec![vec![0.1; 3]; 3], w3: [vec![vec![0.2; 3]; 3], vec![vec![1.0]], vec![vec![0.05; 5]; 5]], ..Default::default() };
            let lo = map(s.clone());
            let hi = map(Plane::new(6, 6, s.data().iter().zip(bump.data()).map(|(a, b)| (a + b).min(1.0)).collect()).unwrap());
            let f_lo = merge(&img, &lo, &w).unwrap();
            let f_hi = merge(&img, &hi, &w).unwrap();
            for (a, b) in f_lo.data().iter().zip(f_hi.data()) {
                prop_assert!((0.0..=1.0).contains(a));
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn linear_without_biases(s1 in field(5), s2 in field(5), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let w = FusionWeights { w1: vec![vec![0.3, -0.1, 0.2]; 3], w3: [vec![vec![1.0]], vec![vec![0.5; 3]; 3], vec![vec![-0.2; 3]; 3]], gamma: 0.7, ..Default::default() };
            let combo = Plane::new(5, 5, s1.data().iter().zip(s2.data()).map(|(x, y)| a * x + b * y).collect()).unwrap();
            let e1 = expand_plane(&s1, &w).unwrap();
            let e2 = expand_plane(&s2, &w).unwrap();
            let ec = expand_plane(&combo, &w).unwrap();
            for c in 0..3 {
                for i in 0..25 {
                    let lin = a * e1[c].data()[i] + b * e2[c].data()[i];
                    prop_assert!((ec[c].data()[i] - lin).abs() < 1e-12);
                }
            }
        }
    }
}
