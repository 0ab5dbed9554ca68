use super::Minutia;
use crate::dataset_io::GrayImage;

/// Eight neighbours clockwise from north: N, NE, E, SE, S, SW, W, NW.
const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    /// Minutiae closer than this to the image border are dropped.
    pub border: usize,
    /// Minutiae closer than this to each other are dropped as pairs
    /// (spurs, breaks, bridges).
    pub min_separation: f64,
    /// Skeleton pixels followed when estimating a direction.
    pub trace_length: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            border: 8,
            min_separation: 6.0,
            trace_length: 10,
        }
    }
}

struct Skeleton {
    w: usize,
    h: usize,
    px: Vec<bool>,
}

impl Skeleton {
    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.px[y as usize * self.w + x as usize]
    }

    fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        RING.map(|(dx, dy)| self.at(x as isize + dx, y as isize + dy))
    }

    fn crossing_number(&self, x: usize, y: usize) -> usize {
        let r = self.ring(x, y);
        (0..8).filter(|&i| r[i] != r[(i + 1) % 8]).count() / 2
    }

    /// Walk along the skeleton from `start`, never revisiting `visited`,
    /// until a junction, an end or `steps` pixels. Returns the last pixel.
    fn trace(&self, start: (usize, usize), visited: &mut Vec<(usize, usize)>, steps: usize) -> (usize, usize) {
        let mut cur = start;
        visited.push(cur);
        for _ in 0..steps {
            let next: Vec<(usize, usize)> = RING
                .iter()
                .map(|&(dx, dy)| (cur.0 as isize + dx, cur.1 as isize + dy))
                .filter(|&(x, y)| self.at(x, y))
                .map(|(x, y)| (x as usize, y as usize))
                .filter(|p| !visited.contains(p))
                .collect();
            if next.is_empty() {
                break;
            }
            // prefer a 4-connected step when the path is ambiguous
            let step = next
                .iter()
                .copied()
                .find(|p| p.0 == cur.0 || p.1 == cur.1)
                .unwrap_or(next[0]);
            if next.len() > 2 {
                break;
            }
            visited.extend(next.iter().copied());
            cur = step;
        }
        cur
    }
}

/// Zhang-Suen thinning of a binary mask (row-major, `true` = ridge).
pub fn skeletonize(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut px = mask.to_vec();
    let get = |px: &[bool], x: isize, y: isize| -> u8 {
        (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && px[y as usize * w + x as usize]) as u8
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !px[y * w + x] {
                        continue;
                    }
                    let n: [u8; 8] = RING.map(|(dx, dy)| get(&px, x as isize + dx, y as isize + dy));
                    let b: u8 = n.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| n[i] == 0 && n[(i + 1) % 8] == 1).count();
                    if a != 1 {
                        continue;
                    }
                    // n[0]=P2(N) n[2]=P4(E) n[4]=P6(S) n[6]=P8(W)
                    let ok = if pass == 0 {
                        n[0] * n[2] * n[4] == 0 && n[2] * n[4] * n[6] == 0
                    } else {
                        n[0] * n[2] * n[6] == 0 && n[0] * n[4] * n[6] == 0
                    };
                    if ok {
                        remove.push(y * w + x);
                    }
                }
            }
            changed |= !remove.is_empty();
            for i in remove {
                px[i] = false;
            }
        }
        if !changed {
            return px;
        }
    }
}

fn direction(from: (usize, usize), to: (usize, usize)) -> Option<f64> {
    let dx = to.0 as f64 - from.0 as f64;
    let dy = to.1 as f64 - from.1 as f64;
    (dx != 0.0 || dy != 0.0).then(|| dy.atan2(dx))
}

/// Ridge endings and bifurcations of an enhanced, binarized image (dark =
/// ridge) by crossing number on the Zhang-Suen skeleton.
///
/// Directions point away from the side with more ridges: from the ridge
/// body out through an ending, and from a fork towards its stem.
pub fn detect_minutiae(img: &GrayImage) -> Vec<Minutia> {
    detect_minutiae_with(img, &DetectionParams::default())
}

pub fn detect_minutiae_with(img: &GrayImage, params: &DetectionParams) -> Vec<Minutia> {
    let (w, h) = (img.width(), img.height());
    let mask: Vec<bool> = img.data().iter().map(|&v| v < 128).collect();
    let sk = Skeleton {
        w,
        h,
        px: skeletonize(&mask, w, h),
    };

    let mut found = Vec::new();
    let b = params.border;
    for y in b..h.saturating_sub(b) {
        for x in b..w.saturating_sub(b) {
            if !sk.px[y * w + x] {
                continue;
            }
            let theta = match sk.crossing_number(x, y) {
                1 => {
                    let mut visited = vec![(x, y)];
                    let start = RING
                        .iter()
                        .map(|&(dx, dy)| (x as isize + dx, y as isize + dy))
                        .find(|&(nx, ny)| sk.at(nx, ny))
                        .map(|(nx, ny)| (nx as usize, ny as usize));
                    let Some(start) = start else { continue };
                    let end = sk.trace(start, &mut visited, params.trace_length);
                    direction(end, (x, y))
                }
                3 => {
                    let ring = sk.ring(x, y);
                    // first pixel of each run of set neighbours
                    let starts: Vec<(usize, usize)> = (0..8)
                        .filter(|&i| ring[i] && !ring[(i + 7) % 8])
                        .map(|i| ((x as isize + RING[i].0) as usize, (y as isize + RING[i].1) as usize))
                        .collect();
                    if starts.len() != 3 {
                        continue;
                    }
                    let mut visited: Vec<(usize, usize)> = vec![(x, y)];
                    for i in 0..8 {
                        if ring[i] {
                            visited.push(((x as isize + RING[i].0) as usize, (y as isize + RING[i].1) as usize));
                        }
                    }
                    let ends: Vec<(usize, usize)> = starts
                        .iter()
                        .map(|&s| {
                            visited.retain(|&p| p != s);
                            sk.trace(s, &mut visited, params.trace_length)
                        })
                        .collect();
                    let angles: Vec<Option<f64>> = ends.iter().map(|&e| direction((x, y), e)).collect();
                    if angles.iter().any(Option::is_none) {
                        continue;
                    }
                    let a: Vec<f64> = angles.into_iter().flatten().collect();
                    let gap = |i: usize, j: usize| {
                        let d = (a[i] - a[j]).rem_euclid(std::f64::consts::TAU);
                        d.min(std::f64::consts::TAU - d)
                    };
                    // the stem is the branch left out of the tightest pair
                    let pairs = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];
                    let stem = pairs
                        .iter()
                        .min_by(|p, q| gap(p.0, p.1).total_cmp(&gap(q.0, q.1)))
                        .map(|p| p.2)
                        .expect("three pairs");
                    Some(a[stem])
                }
                _ => None,
            };
            if let Some(theta) = theta {
                found.push(Minutia::new(x as f64, y as f64, theta));
            }
        }
    }

    let keep: Vec<bool> = (0..found.len())
        .map(|i| {
            !found
                .iter()
                .enumerate()
                .any(|(j, m)| j != i && (m.x - found[i].x).hypot(m.y - found[i].y) < params.min_separation)
        })
        .collect();
    found
        .into_iter()
        .zip(keep)
        .filter_map(|(m, k)| k.then_some(m))
        .collect()
}
