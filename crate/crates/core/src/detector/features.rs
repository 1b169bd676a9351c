//! Handcrafted thermal features of a normalized frame.

use serde::{Deserialize, Serialize};

/// Normalized value above which a pixel counts as hot.
pub const HOT_THRESHOLD: f64 = 0.9;
/// Share of pixels averaged for the top-percentile feature.
pub const TOP_FRACTION: f64 = 0.01;
pub const FEATURE_LEN: usize = 6;
pub const FEATURE_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; FEATURE_LEN] = [
    "hot_fraction",
    "top_percentile_mean",
    "largest_blob_fraction",
    "blob_compactness",
    "mean",
    "std",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

impl FeatureVector {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

struct Blob {
    area: usize,
    perimeter: usize,
}

/// Largest 4-connected component of `mask`, ties going to the first one in
/// scan order. Perimeter counts pixel edges facing a non-member or the
/// image border.
fn largest_blob(mask: &[bool], width: usize, height: usize) -> Option<Blob> {
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut best: Option<Blob> = None;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut perimeter) = (0usize, 0usize);
        while let Some(p) = stack.pop() {
            area += 1;
            let (x, y) = (p % width, p / width);
            let neighbours = [
                (x > 0).then(|| p - 1),
                (x + 1 < width).then(|| p + 1),
                (y > 0).then(|| p - width),
                (y + 1 < height).then(|| p + width),
            ];
            for q in neighbours {
                match q {
                    Some(q) if mask[q] => {
                        if !seen[q] {
                            seen[q] = true;
                            stack.push(q);
                        }
                    }
                    _ => perimeter += 1,
                }
            }
        }
        if best.as_ref().map_or(true, |b| area > b.area) {
            best = Some(Blob { area, perimeter });
        }
    }
    best
}

/// Feature vector of a row-major normalized frame:
/// `[hot fraction, top-1% mean, largest hot blob fraction, blob compactness,
/// mean, std]`.
pub fn extract_features(frame: &[f64], width: usize, height: usize) -> FeatureVector {
    let n = frame.len();
    debug_assert_eq!(n, width * height);
    if n == 0 {
        return FeatureVector([0.0; FEATURE_LEN]);
    }
    let nf = n as f64;

    let mask: Vec<bool> = frame.iter().map(|&x| x > HOT_THRESHOLD).collect();
    let hot = mask.iter().filter(|&&m| m).count();

    let k = ((nf * TOP_FRACTION).ceil() as usize).clamp(1, n);
    let mut scratch = frame.to_vec();
    let (_, nth, above) = scratch.select_nth_unstable_by(n - k, f64::total_cmp);
    let top_sum: f64 = above.iter().sum::<f64>() + *nth;
    let top_mean = top_sum / k as f64;

    let (blob_frac, compactness) = match largest_blob(&mask, width, height) {
        Some(b) => (
            b.area as f64 / nf,
            4.0 * std::f64::consts::PI * b.area as f64 / (b.perimeter * b.perimeter) as f64,
        ),
        None => (0.0, 0.0),
    };

    let mean = frame.iter().sum::<f64>() / nf;
    let var = frame.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;

    FeatureVector([
        hot as f64 / nf,
        top_mean,
        blob_frac,
        compactness,
        mean,
        var.sqrt(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_frame_has_no_blob() {
        let f = extract_features(&[0.0; 100], 10, 10);
        assert_eq!(f.0, [0.0; 6]);
    }

    #[test]
    fn square_blob() {
        // 3x3 hot square in a 10x10 frame
        let mut frame = vec![0.2; 100];
        for y in 2..5 {
            for x in 3..6 {
                frame[y * 10 + x] = 1.0;
            }
        }
        let f = extract_features(&frame, 10, 10);
        assert!((f.0[0] - 0.09).abs() < 1e-15);
        assert_eq!(f.0[1], 1.0);
        assert!((f.0[2] - 0.09).abs() < 1e-15);
        // area 9, perimeter 12
        assert!((f.0[3] - 4.0 * std::f64::consts::PI * 9.0 / 144.0).abs() < 1e-12);
        assert!((f.0[4] - (0.09 + 0.91 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn largest_of_two_blobs_and_border_edges() {
        // single pixel at the corner, and a 1x3 bar
        let mut frame = vec![0.0; 25];
        frame[0] = 0.95;
        frame[12] = 0.95;
        frame[13] = 0.95;
        frame[14] = 0.95;
        let f = extract_features(&frame, 5, 5);
        assert!((f.0[2] - 3.0 / 25.0).abs() < 1e-15);
        // bar perimeter 8, including the edge on the right border
        assert!((f.0[3] - 4.0 * std::f64::consts::PI * 3.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn top_percentile_uses_at_least_one_pixel() {
        let mut frame = vec![0.1; 50];
        frame[7] = 0.8;
        let f = extract_features(&frame, 10, 5);
        assert_eq!(f.0[1], 0.8);
        // 1000 pixels -> hottest 10 averaged
        let frame: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let f = extract_features(&frame, 100, 10);
        let expect = (990..1000).map(|i| i as f64 / 1000.0).sum::<f64>() / 10.0;
        assert!((f.0[1] - expect).abs() < 1e-12);
    }
}
