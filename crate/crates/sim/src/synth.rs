//! Seeded synthetic scenes: separated rectangles on an empty field, with
//! optional zero stripes through objects and Bernoulli salt noise.
//!
//! Layouts are built by guillotine cuts, each cut leaving a band of at least
//! `min_gap` empty lines, so every scene can be taken apart by alternating
//! row and column projections. Frame `i` draws from its own ChaCha stream, so
//! a frame does not depend on how many others are generated or in what order.

use std::path::Path;

use cram_core::{BinaryFrame, BoundingBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boxes::save_boxes;
use crate::error::{Result, SimError};
use crate::output::ensure_dir;
use crate::pnm::save_frame;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub seed: u64,
    pub objects_min: usize,
    pub objects_max: usize,
    pub object_size_min: usize,
    pub object_size_max: usize,
    /// Target fraction of the frame covered by objects.
    pub occupancy: f64,
    /// Minimum number of empty lines between neighboring objects.
    pub min_gap: usize,
    pub noise_density: f64,
    /// Chance that an object is cut by a zero stripe.
    pub fragment_prob: f64,
    pub fragment_gap: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            frames: 16,
            seed: 1,
            objects_min: 1,
            objects_max: 5,
            object_size_min: 10,
            object_size_max: 48,
            occupancy: 0.05,
            min_gap: 6,
            noise_density: 0.01,
            fragment_prob: 0.0,
            fragment_gap: 2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let err = |m: &str| Err(SimError::Config(format!("synth: {m}")));
        if self.objects_min > self.objects_max {
            return err("objects_min exceeds objects_max");
        }
        if self.object_size_min == 0 || self.object_size_min > self.object_size_max {
            return err("object sizes must satisfy 1 <= object_size_min <= object_size_max");
        }
        if !(self.occupancy > 0.0 && self.occupancy <= 1.0) {
            return err("occupancy must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.noise_density) || !(0.0..=1.0).contains(&self.fragment_prob)
        {
            return err("noise_density and fragment_prob must lie in [0, 1]");
        }
        if self.fragment_gap == 0 {
            return err("fragment_gap must be positive");
        }
        if width == 0 || height == 0 {
            return err("empty frame");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    /// Sensor frame: fragmented objects plus salt noise.
    pub noisy: BinaryFrame,
    /// The same frame without noise.
    pub clean: BinaryFrame,
    /// Cells where a noise draw fired, whether or not they were already set.
    pub noise_mask: BinaryFrame,
    /// Whole object rectangles, before fragmentation.
    pub gt: Vec<BoundingBox>,
}

pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
}

/// Splits the frame into at most `n` cells separated by `gap`-wide bands.
fn guillotine(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    n: usize,
    gap: usize,
) -> Vec<Cell> {
    let mut cells = vec![Cell {
        r0: 0,
        c0: 0,
        h: height,
        w: width,
    }];
    while cells.len() < n {
        // split the largest cell; ties go to the earliest
        let (idx, cell) = cells
            .iter()
            .copied()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| (a.h * a.w).cmp(&(b.h * b.w)).then(ib.cmp(ia)))
            .expect("at least one cell");
        let split_rows = cell.h > cell.w || (cell.h == cell.w && rng.gen_bool(0.5));
        let span = if split_rows { cell.h } else { cell.w };
        if span < gap + 2 {
            break;
        }
        let free = span - gap;
        let lo = (free * 3 / 10).max(1);
        let hi = (free * 7 / 10).max(lo).min(free - 1);
        let first = rng.gen_range(lo..=hi);
        let rest = free - first;
        let (a, b) = if split_rows {
            (
                Cell { h: first, ..cell },
                Cell {
                    r0: cell.r0 + first + gap,
                    h: rest,
                    ..cell
                },
            )
        } else {
            (
                Cell { w: first, ..cell },
                Cell {
                    c0: cell.c0 + first + gap,
                    w: rest,
                    ..cell
                },
            )
        };
        cells[idx] = a;
        cells.insert(idx + 1, b);
    }
    cells
}

pub fn generate_frame(cfg: &SynthConfig, width: usize, height: usize, index: u64) -> SynthFrame {
    let mut rng = frame_rng(cfg.seed, index);
    let n = rng.gen_range(cfg.objects_min..=cfg.objects_max);
    let mut gt = Vec::with_capacity(n);
    let mut clean = BinaryFrame::new(width, height);

    if n > 0 {
        let cells = guillotine(&mut rng, width, height, n, cfg.min_gap);
        let area = cfg.occupancy * (width * height) as f64 / cells.len() as f64;
        for cell in cells {
            let side = area.sqrt();
            let aspect = rng.gen_range(-0.4f64..=0.4).exp();
            let clamp = |v: f64, limit: usize| {
                (v.round() as usize)
                    .clamp(cfg.object_size_min, cfg.object_size_max)
                    .min(limit)
            };
            let h = clamp(side * aspect, cell.h);
            let w = clamp(side / aspect, cell.w);
            let r0 = cell.r0 + rng.gen_range(0..=cell.h - h);
            let c0 = cell.c0 + rng.gen_range(0..=cell.w - w);
            let b = BoundingBox::new(r0, r0 + h - 1, c0, c0 + w - 1);
            clean.fill_rect(b.r0, b.r1, b.c0, b.c1, true);
            gt.push(b);
        }
    }

    // Fragmentation: a full-span zero stripe strictly inside the object.
    for b in &gt {
        if !rng.gen_bool(cfg.fragment_prob) {
            continue;
        }
        let across_cols = rng.gen_bool(0.5);
        let span = if across_cols { b.width() } else { b.height() };
        if span < cfg.fragment_gap + 2 {
            continue;
        }
        let at = rng.gen_range(1..=span - cfg.fragment_gap - 1);
        if across_cols {
            let c = b.c0 + at;
            clean.fill_rect(b.r0, b.r1, c, c + cfg.fragment_gap - 1, false);
        } else {
            let r = b.r0 + at;
            clean.fill_rect(r, r + cfg.fragment_gap - 1, b.c0, b.c1, false);
        }
    }

    let noise_mask = if cfg.noise_density > 0.0 {
        BinaryFrame::from_fn(width, height, |_, _| rng.gen_bool(cfg.noise_density))
    } else {
        BinaryFrame::new(width, height)
    };
    let noisy = clean.union(&noise_mask).expect("same shape");
    gt.sort_by_key(|b| (b.r0, b.c0, b.r1, b.c1));
    SynthFrame {
        noisy,
        clean,
        noise_mask,
        gt,
    }
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:05}")
}

/// Writes `frame_XXXXX.pbm`, `frame_XXXXX.gt.json` and
/// `clean/frame_XXXXX.pbm` for every frame.
pub fn write_corpus(cfg: &SynthConfig, width: usize, height: usize, out: &Path) -> Result<()> {
    let clean_dir = out.join("clean");
    ensure_dir(&clean_dir)?;
    (0..cfg.frames).into_par_iter().try_for_each(|i| {
        let f = generate_frame(cfg, width, height, i as u64);
        let name = frame_name(i);
        save_frame(&f.noisy, &out.join(format!("{name}.pbm")))?;
        save_boxes(&f.gt, &out.join(format!("{name}.gt.json")))?;
        save_frame(&f.clean, &clean_dir.join(format!("{name}.pbm")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cram_core::{component_boxes, Connectivity};

    fn quiet() -> SynthConfig {
        SynthConfig {
            noise_density: 0.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_frame() {
        let cfg = SynthConfig {
            fragment_prob: 0.5,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_frame(&cfg, 320, 240, 3),
            generate_frame(&cfg, 320, 240, 3)
        );
        assert_ne!(
            generate_frame(&cfg, 320, 240, 3),
            generate_frame(&cfg, 320, 240, 4)
        );
    }

    #[test]
    fn clean_gt_is_ccl_of_frame() {
        for i in 0..200 {
            let f = generate_frame(&quiet(), 320, 240, i);
            assert_eq!(f.noisy, f.clean);
            assert_eq!(
                component_boxes(&f.clean, Connectivity::Eight),
                f.gt,
                "frame {i}"
            );
            assert!((1..=5).contains(&f.gt.len()));
        }
    }

    #[test]
    fn objects_keep_their_distance() {
        for i in 0..200 {
            let f = generate_frame(&quiet(), 64, 64, i);
            for (j, a) in f.gt.iter().enumerate() {
                for b in &f.gt[j + 1..] {
                    assert!(
                        a.row_gap(b) >= 6 || a.col_gap(b) >= 6,
                        "frame {i}: {a:?} {b:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn occupancy_is_near_target() {
        let cfg = quiet();
        let total: usize = (0..100)
            .map(|i| generate_frame(&cfg, 320, 240, i).clean.popcount())
            .sum();
        let mean = total as f64 / (100.0 * 320.0 * 240.0);
        assert!((0.03..0.07).contains(&mean), "mean occupancy {mean}");
    }

    #[test]
    fn fragmentation_splits_objects() {
        let cfg = SynthConfig {
            fragment_prob: 1.0,
            ..quiet()
        };
        let f = generate_frame(&cfg, 320, 240, 0);
        let parts = component_boxes(&f.clean, Connectivity::Eight);
        assert_eq!(parts.len(), 2 * f.gt.len());
        for p in parts {
            assert!(f.gt.iter().any(|g| g.union(&p) == *g));
        }
    }
}
