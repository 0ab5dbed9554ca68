//! Gabor filter-bank texture descriptor.
//!
//! Complex Gabor magnitudes are evaluated on a stride-2 lattice, averaged
//! per pooling cell, then standardized and L2-normalized per vector.

use std::f64::consts::PI;

use crate::dataset_io::GrayImage;
use crate::error::{Error, Result};

const STRIDE: usize = 2;
/// Gaussian envelope width as a fraction of the wavelength.
const SIGMA_PER_WAVELENGTH: f64 = 0.5;
/// Responses below this mean magnitude count as zero energy.
const MIN_RESPONSE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TextureBankParams {
    pub orientations: usize,
    /// Cycles per pixel, each in (0, 0.5).
    pub frequencies: Vec<f64>,
    pub grid: usize,
}

impl Default for TextureBankParams {
    fn default() -> Self {
        Self {
            orientations: 8,
            frequencies: vec![1.0 / 6.0, 1.0 / 9.0, 1.0 / 12.0],
            grid: 8,
        }
    }
}

impl TextureBankParams {
    pub fn raw_dim(&self) -> usize {
        self.orientations * self.frequencies.len() * self.grid * self.grid
    }

    pub fn validate(&self) -> Result<()> {
        if self.orientations == 0 || self.frequencies.is_empty() || self.grid == 0 {
            return Err(Error::InvalidArgument(
                "texture bank needs >= 1 orientation, frequency and grid cell".into(),
            ));
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(**f > 0.0 && **f < 0.5)) {
            return Err(Error::InvalidArgument(format!(
                "texture frequency {f} outside (0, 0.5)"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Kernel1d {
    radius: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Kernel1d {
    /// Unit-sum Gaussian times `exp(i k t)`.
    fn new(sigma: f64, k: f64) -> Self {
        let radius = (3.0 * sigma).ceil() as usize;
        let g: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let t = i as f64 - radius as f64;
                (-t * t / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = g.iter().sum();
        let (mut re, mut im) = (Vec::with_capacity(g.len()), Vec::with_capacity(g.len()));
        for (i, w) in g.iter().enumerate() {
            let t = i as f64 - radius as f64;
            re.push(w / total * (k * t).cos());
            im.push(w / total * (k * t).sin());
        }
        Self { radius, re, im }
    }

    fn dc(&self) -> (f64, f64) {
        (self.re.iter().sum(), self.im.iter().sum())
    }
}

#[derive(Debug, Clone)]
struct Filter {
    x: Kernel1d,
    y: Kernel1d,
    /// DC gain of the separable complex kernel.
    dc: (f64, f64),
}

/// Precomputed filter bank; build once and share across images.
#[derive(Debug, Clone)]
pub struct TextureBank {
    params: TextureBankParams,
    /// Per frequency: the real Gaussian and the oriented filters.
    scales: Vec<(Kernel1d, Vec<Filter>)>,
}

impl TextureBank {
    pub fn new(params: TextureBankParams) -> Result<Self> {
        params.validate()?;
        let scales = params
            .frequencies
            .iter()
            .map(|&f| {
                let sigma = SIGMA_PER_WAVELENGTH / f;
                let k = 2.0 * PI * f;
                let filters = (0..params.orientations)
                    .map(|o| {
                        let theta = PI * o as f64 / params.orientations as f64;
                        let x = Kernel1d::new(sigma, k * theta.cos());
                        let y = Kernel1d::new(sigma, k * theta.sin());
                        let (xr, xi) = x.dc();
                        let (yr, yi) = y.dc();
                        let dc = (xr * yr - xi * yi, xr * yi + xi * yr);
                        Filter { x, y, dc }
                    })
                    .collect();
                (Kernel1d::new(sigma, 0.0), filters)
            })
            .collect();
        Ok(Self { params, scales })
    }

    pub fn params(&self) -> &TextureBankParams {
        &self.params
    }

    pub fn raw_dim(&self) -> usize {
        self.params.raw_dim()
    }

    /// Unit-norm texture feature of length `raw_dim`.
    pub fn extract(&self, img: &GrayImage) -> Result<Vec<f64>> {
        let (w, h) = (img.width(), img.height());
        let g = self.params.grid;
        if w < g || h < g {
            return Err(Error::InvalidArgument(format!(
                "image {w}x{h} smaller than the {g}x{g} pooling grid"
            )));
        }
        let pad = self.scales.iter().map(|(g, _)| g.radius).max().unwrap_or(0);
        let padded = Padded::new(&img.to_f64(), w, h, pad);
        let xs: Vec<usize> = (0..w).step_by(STRIDE).collect();
        let ys: Vec<usize> = (0..h).step_by(STRIDE).collect();
        let cell_of = |p: usize, n: usize| (p * g / n).min(g - 1);
        let cell_x: Vec<usize> = xs.iter().map(|&x| cell_of(x, w)).collect();
        let cell_y: Vec<usize> = ys.iter().map(|&y| cell_of(y, h)).collect();
        let mut cell_count = vec![0usize; g * g];
        for &cy in &cell_y {
            for &cx in &cell_x {
                cell_count[cy * g + cx] += 1;
            }
        }

        let n_orient = self.params.orientations;
        let n_freq = self.params.frequencies.len();
        let mut feature = vec![0.0; self.raw_dim()];
        let mut re = vec![0.0; ys.len() * xs.len()];
        let mut im = vec![0.0; ys.len() * xs.len()];
        for (fi, (gauss, filters)) in self.scales.iter().enumerate() {
            let blur = separable_real(&padded, h, &xs, &ys, gauss);
            for (oi, filter) in filters.iter().enumerate() {
                separable_complex(&padded, h, &xs, &ys, filter, &mut re, &mut im);
                for (iy, &cy) in cell_y.iter().enumerate() {
                    for (ix, &cx) in cell_x.iter().enumerate() {
                        let p = iy * xs.len() + ix;
                        let r = re[p] - filter.dc.0 * blur[p];
                        let i = im[p] - filter.dc.1 * blur[p];
                        let cell = cy * g + cx;
                        feature[(cell * n_orient + oi) * n_freq + fi] += r.hypot(i);
                    }
                }
            }
        }
        for (cell, count) in cell_count.iter().enumerate() {
            let base = cell * n_orient * n_freq;
            for v in &mut feature[base..base + n_orient * n_freq] {
                *v /= *count as f64;
            }
        }
        standardize(&mut feature)
    }
}

fn standardize(feature: &mut [f64]) -> Result<Vec<f64>> {
    let max = feature.iter().copied().fold(0.0, f64::max);
    if max < MIN_RESPONSE {
        return Err(Error::Degenerate("texture response has zero energy".into()));
    }
    let n = feature.len() as f64;
    let mean = feature.iter().sum::<f64>() / n;
    let std = (feature.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if !(std > MIN_RESPONSE * 1e-3) {
        return Err(Error::Degenerate("texture response is constant".into()));
    }
    let z: Vec<f64> = feature.iter().map(|v| (v - mean) / std).collect();
    crate::embedding::l2_normalize(&z)
}

#[inline]
fn clamp_index(p: isize, n: usize) -> usize {
    p.clamp(0, n as isize - 1) as usize
}

/// Rows padded left and right by `pad` replicated edge pixels.
struct Padded {
    data: Vec<f64>,
    stride: usize,
    pad: usize,
}

impl Padded {
    fn new(pixels: &[f64], w: usize, h: usize, pad: usize) -> Self {
        let stride = w + 2 * pad;
        let mut data = Vec::with_capacity(stride * h);
        for y in 0..h {
            let line = &pixels[y * w..(y + 1) * w];
            data.extend(std::iter::repeat_n(line[0], pad));
            data.extend_from_slice(line);
            data.extend(std::iter::repeat_n(line[w - 1], pad));
        }
        Self { data, stride, pad }
    }

    /// Window of `2 * radius + 1` samples centered on column `x` of row `y`.
    #[inline]
    fn window(&self, x: usize, y: usize, radius: usize) -> &[f64] {
        let start = y * self.stride + self.pad + x - radius;
        &self.data[start..start + 2 * radius + 1]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn separable_real(img: &Padded, h: usize, xs: &[usize], ys: &[usize], k: &Kernel1d) -> Vec<f64> {
    let nx = xs.len();
    let mut rows = vec![0.0; h * nx];
    for y in 0..h {
        for (ix, &x) in xs.iter().enumerate() {
            rows[y * nx + ix] = dot(img.window(x, y, k.radius), &k.re);
        }
    }
    let r = k.radius as isize;
    let mut out = vec![0.0; ys.len() * nx];
    for (iy, &y) in ys.iter().enumerate() {
        let dst = &mut out[iy * nx..(iy + 1) * nx];
        for (t, kv) in k.re.iter().enumerate() {
            let src = clamp_index(y as isize + t as isize - r, h) * nx;
            for (o, v) in dst.iter_mut().zip(&rows[src..src + nx]) {
                *o += kv * v;
            }
        }
    }
    out
}

fn separable_complex(
    img: &Padded,
    h: usize,
    xs: &[usize],
    ys: &[usize],
    f: &Filter,
    out_re: &mut [f64],
    out_im: &mut [f64],
) {
    let nx = xs.len();
    let mut rows_re = vec![0.0; h * nx];
    let mut rows_im = vec![0.0; h * nx];
    for y in 0..h {
        for (ix, &x) in xs.iter().enumerate() {
            let win = img.window(x, y, f.x.radius);
            rows_re[y * nx + ix] = dot(win, &f.x.re);
            rows_im[y * nx + ix] = dot(win, &f.x.im);
        }
    }
    out_re.fill(0.0);
    out_im.fill(0.0);
    let ry = f.y.radius as isize;
    for (iy, &y) in ys.iter().enumerate() {
        let dst_re = &mut out_re[iy * nx..(iy + 1) * nx];
        let dst_im = &mut out_im[iy * nx..(iy + 1) * nx];
        for t in 0..f.y.re.len() {
            let (kr, ki) = (f.y.re[t], f.y.im[t]);
            let src = clamp_index(y as isize + t as isize - ry, h) * nx;
            let (a_row, b_row) = (&rows_re[src..src + nx], &rows_im[src..src + nx]);
            for ix in 0..nx {
                let (a, b) = (a_row[ix], b_row[ix]);
                dst_re[ix] += a * kr - b * ki;
                dst_im[ix] += a * ki + b * kr;
            }
        }
    }
}

/// Convenience wrapper building the bank for a single image.
pub fn extract_texture(img: &GrayImage, params: &TextureBankParams) -> Result<Vec<f64>> {
    TextureBank::new(params.clone())?.extract(img)
}
