use crate::image::BinaryMask;

/// 8-connected component labeling. Label 0 is background; labels 1.. are
/// assigned in raster order of each component's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabels {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    /// `areas[id]` is the pixel count of component `id`; `areas[0]` is unused (0).
    areas: Vec<usize>,
}

impl ComponentLabels {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of foreground components.
    pub fn count(&self) -> usize {
        self.areas.len() - 1
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn area(&self, id: u32) -> usize {
        self.areas[id as usize]
    }

    /// Areas of components 1..=count, in label order.
    pub fn areas(&self) -> &[usize] {
        &self.areas[1..]
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller provisional id as root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

pub fn label_components(mask: &BinaryMask) -> ComponentLabels {
    let (w, h) = mask.dims();
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet { parent: vec![0] };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            // already-visited 8-neighbors: W, NW, N, NE
            let mut current = 0u32;
            let neighbors = [
                (x.checked_sub(1), Some(y)),
                (x.checked_sub(1), y.checked_sub(1)),
                (Some(x), y.checked_sub(1)),
                (if x + 1 < w { Some(x + 1) } else { None }, y.checked_sub(1)),
            ];
            for (nx, ny) in neighbors {
                let (Some(nx), Some(ny)) = (nx, ny) else { continue };
                let l = provisional[ny * w + nx];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if l != current {
                    sets.union(current, l);
                }
            }
            if current == 0 {
                current = sets.parent.len() as u32;
                sets.parent.push(current);
            }
            provisional[y * w + x] = current;
        }
    }

    // resolve roots and renumber by first appearance in raster order
    let mut final_id = vec![0u32; sets.parent.len()];
    let mut areas = vec![0usize];
    let mut labels = provisional;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if final_id[root] == 0 {
            final_id[root] = areas.len() as u32;
            areas.push(0);
        }
        *l = final_id[root];
        areas[*l as usize] += 1;
    }

    ComponentLabels {
        width: w,
        height: h,
        labels,
        areas,
    }
}

/// Clears every 8-connected component with fewer than `min_area` pixels.
pub fn filter_small(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    let labels = label_components(mask);
    let data = labels
        .labels
        .iter()
        .map(|&l| l != 0 && labels.areas[l as usize] >= min_area)
        .collect();
    BinaryMask::new(mask.width(), mask.height(), data).expect("same dimensions")
}
