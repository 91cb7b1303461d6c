//! Brute-force reference implementations used by tests.
//!
//! Nothing here calls into the crate's geometry or ranking code.

#![allow(dead_code)]

/// Pixels whose centre lies inside `[x0, x1) x [y0, y1)`.
pub fn raster(b: [f64; 4], width: u32, height: u32) -> Vec<bool> {
    let mut grid = vec![false; (width * height) as usize];
    for j in 0..height {
        for i in 0..width {
            let (cx, cy) = (i as f64 + 0.5, j as f64 + 0.5);
            if cx >= b[0] && cx < b[2] && cy >= b[1] && cy < b[3] {
                grid[(j * width + i) as usize] = true;
            }
        }
    }
    grid
}

/// Shared pixels over child pixels, by counting.
pub fn pixel_overlap(child: [f64; 4], parent: [f64; 4], width: u32, height: u32) -> (usize, usize) {
    let c = raster(child, width, height);
    let p = raster(parent, width, height);
    let child_px = c.iter().filter(|v| **v).count();
    let shared = c.iter().zip(&p).filter(|(a, b)| **a && **b).count();
    (shared, child_px)
}

/// Pixel extents `[x0, y0, x1, y1]` of the region of half-size `w/4, h/4`
/// around `origin`, restricted to the frame; `None` when empty.
pub fn plural_region_pixels(origin: (f64, f64), width: u32, height: u32) -> Option<[f64; 4]> {
    let ox = origin.0.clamp(0.0, width as f64);
    let oy = origin.1.clamp(0.0, height as f64);
    let (hw, hh) = (width as f64 / 4.0, height as f64 / 4.0);
    let mut ext: Option<[f64; 4]> = None;
    for j in 0..height {
        for i in 0..width {
            let (cx, cy) = (i as f64 + 0.5, j as f64 + 0.5);
            if (cx - ox).abs() <= hw && (cy - oy).abs() <= hh {
                let e = ext.get_or_insert([i as f64, j as f64, i as f64 + 1.0, j as f64 + 1.0]);
                e[0] = e[0].min(i as f64);
                e[1] = e[1].min(j as f64);
                e[2] = e[2].max(i as f64 + 1.0);
                e[3] = e[3].max(j as f64 + 1.0);
            }
        }
    }
    ext
}

/// Texts sorted by centre distance, then top-left first, by exhaustive
/// comparison of every pair.
pub fn sort_by_distance(origin: (f64, f64), boxes: &[[f64; 4]]) -> Vec<usize> {
    let key = |i: usize| {
        let b = boxes[i];
        let (cx, cy) = ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0);
        ((cx - origin.0).powi(2) + (cy - origin.1).powi(2)).sqrt()
    };
    let mut idx: Vec<usize> = (0..boxes.len()).collect();
    // selection sort: slow and obviously correct
    for a in 0..idx.len() {
        let mut best = a;
        for b in a + 1..idx.len() {
            let (i, j) = (idx[b], idx[best]);
            let less = key(i) < key(j)
                || (key(i) == key(j)
                    && (boxes[i][1], boxes[i][0]) < (boxes[j][1], boxes[j][0]));
            if less {
                best = b;
            }
        }
        idx.swap(a, best);
    }
    idx
}
