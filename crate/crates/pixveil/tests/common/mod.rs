//! Shared test corpus: synthetic images with natural-like statistics
//! (large smooth regions, sharp edges, mild grain) and toy datasets on disk.

#![allow(dead_code)]

use std::path::Path;

use pixveil::imgcore::{resize_bilinear, save_image, Image, Rng};

/// A synthetic photograph-like image: smooth low-frequency blobs, a medium
/// texture layer, a handful of hard-edged rectangles, and a trace of grain.
/// Most windows are locally smooth, as in photographs with soft backgrounds.
pub fn synth_natural(rng: &mut Rng, w: usize, h: usize, c: usize) -> Image {
    // Low-frequency base shared by all channels.
    let base_data: Vec<f64> = (0..8 * 8).map(|_| 30.0 + rng.uniform() * 195.0).collect();
    let base = resize_bilinear(&Image::new(8, 8, 1, base_data).unwrap(), w, h).unwrap();

    // Medium-scale texture, per channel but correlated through the base.
    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(c);
    for _ in 0..c {
        let mid_data: Vec<f64> = (0..16 * 16).map(|_| (rng.uniform() - 0.5) * 40.0).collect();
        let mid = resize_bilinear(&Image::new(16, 16, 1, mid_data).unwrap(), w, h).unwrap();
        let plane: Vec<f64> = base
            .data()
            .iter()
            .zip(mid.data())
            .map(|(b, m)| b + m)
            .collect();
        channels.push(plane);
    }

    // Hard-edged rectangles: shared geometry, per-channel offsets.
    let rects = 3 + rng.index(4);
    for _ in 0..rects {
        let rw = w / 8 + rng.index(w / 2);
        let rh = h / 8 + rng.index(h / 2);
        let x0 = rng.index(w.saturating_sub(rw).max(1));
        let y0 = rng.index(h.saturating_sub(rh).max(1));
        for plane in channels.iter_mut() {
            let offset = (rng.uniform() - 0.5) * 120.0;
            for y in y0..(y0 + rh).min(h) {
                for x in x0..(x0 + rw).min(w) {
                    plane[y * w + x] += offset;
                }
            }
        }
    }

    // Trace of grain.
    let mut data = vec![0.0; w * h * c];
    for p in 0..w * h {
        for (ch, plane) in channels.iter().enumerate() {
            let grain = (rng.uniform() - 0.5) * 2.0;
            data[p * c + ch] = (plane[p] + grain).clamp(0.0, 255.0);
        }
    }
    Image::new(w, h, c, data).unwrap()
}

/// Uniform iid noise image (for round-trip and conservation tests).
pub fn random_image(rng: &mut Rng, w: usize, h: usize, c: usize) -> Image {
    let data = (0..w * h * c).map(|_| rng.uniform() * 255.0).collect();
    Image::new(w, h, c, data).unwrap()
}

/// Writes a toy dataset of synthetic natural images:
/// `<root>/<class_i>/img_<j>.png`.
pub fn write_toy_dataset(
    root: &Path,
    classes: usize,
    per_class: usize,
    size: (usize, usize),
    seed: u64,
) {
    let mut rng = Rng::new(seed, 0);
    for c in 0..classes {
        let dir = root.join(format!("class{c}"));
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let img = synth_natural(&mut rng, size.0, size.1, 1);
            save_image(&img, dir.join(format!("img_{i:02}.png"))).unwrap();
        }
    }
}

/// Recursively collects (relative path, bytes) for a directory tree, sorted
/// by path.
pub fn snapshot_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

/// Fresh unique temp directory.
pub fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "pixveil-it-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
