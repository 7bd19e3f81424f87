//! Connected-component labeling, the raster-scan reference for object
//! bounding boxes.

use alloc::vec;
use alloc::vec::Vec;

use crate::frame::BinaryFrame;
use crate::region::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    /// 1-based, in raster order of each component's first pixel.
    pub label: u32,
    pub pixels: usize,
    pub bbox: BoundingBox,
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn add(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Keeps the smaller id as root so roots are first-created labels.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Two-pass union-find labeling of the 1-pixels of `frame`.
pub fn ccl(frame: &BinaryFrame, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (frame.width(), frame.height());
    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; w * h];
    let mut sets = DisjointSet { parent: Vec::new() };

    for row in 0..h {
        for col in 0..w {
            if !frame.get(row, col) {
                continue;
            }
            let mut neighbors = [NONE; 4];
            neighbors[0] = if col > 0 {
                labels[row * w + col - 1]
            } else {
                NONE
            };
            if row > 0 {
                let up = (row - 1) * w;
                neighbors[1] = labels[up + col];
                if connectivity == Connectivity::Eight {
                    neighbors[2] = if col > 0 { labels[up + col - 1] } else { NONE };
                    neighbors[3] = if col + 1 < w {
                        labels[up + col + 1]
                    } else {
                        NONE
                    };
                }
            }
            let mut label = NONE;
            for n in neighbors.into_iter().filter(|&n| n != NONE) {
                label = if label == NONE {
                    n
                } else {
                    sets.union(label, n)
                };
            }
            if label == NONE {
                label = sets.add();
            }
            labels[row * w + col] = label;
        }
    }

    // Roots ascend in raster order of first pixel; compact them to 1..=n.
    let mut final_label = vec![NONE; sets.parent.len()];
    let mut components: Vec<Component> = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let l = labels[row * w + col];
            if l == NONE {
                continue;
            }
            let root = sets.find(l) as usize;
            if final_label[root] == NONE {
                final_label[root] = components.len() as u32;
                components.push(Component {
                    label: components.len() as u32 + 1,
                    pixels: 0,
                    bbox: BoundingBox::new(row, row, col, col),
                });
            }
            let comp = &mut components[final_label[root] as usize];
            comp.pixels += 1;
            comp.bbox = comp.bbox.union(&BoundingBox::new(row, row, col, col));
        }
    }
    components
}

/// Bounding boxes of the components, in label order.
pub fn component_boxes(frame: &BinaryFrame, connectivity: Connectivity) -> Vec<BoundingBox> {
    ccl(frame, connectivity)
        .into_iter()
        .map(|c| c.bbox)
        .collect()
}
