//! Procedural layer generators: grid/form patterns and multiscale noise
//! backgrounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{clamp_round_u8, Raster};
use crate::rng::RngStream;

/// Grid pattern parameters: rule pitch, stroke, and optional checkboxes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub cell_w: u32,
    pub cell_h: u32,
    pub line_width: u32,
    pub line_intensity: u8,
    pub include_checkboxes: bool,
    /// Chance of placing a checkbox at each interior grid corner.
    pub checkbox_probability: f64,
    pub checkbox_size: u32,
    /// Draw only horizontal baselines, no vertical rules.
    pub baseline_only: bool,
    /// Per-rule position jitter of +/-1 px, off by default.
    pub jitter: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cell_w: 64,
            cell_h: 64,
            line_width: 1,
            line_intensity: 0,
            include_checkboxes: false,
            checkbox_probability: 0.15,
            checkbox_size: 12,
            baseline_only: false,
            jitter: false,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.line_width == 0 {
            return Err(Error::InvalidSpec("line_width must be positive".into()));
        }
        if self.cell_w < 2 * self.line_width || self.cell_h < 2 * self.line_width {
            return Err(Error::InvalidSpec(
                "cell pitch must be at least twice the line width".into(),
            ));
        }
        if self.line_intensity == 255 {
            return Err(Error::InvalidSpec(
                "line_intensity 255 would be invisible on white".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.checkbox_probability) {
            return Err(Error::BadProbability(self.checkbox_probability));
        }
        Ok(())
    }
}

/// Multiscale noise parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub octaves: u32,
    /// Pixels per noise cell at the first octave; doubles each octave.
    pub base_scale: u32,
    pub amplitude_decay: f64,
    pub bias: u8,
    pub contrast: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            octaves: 4,
            base_scale: 4,
            amplitude_decay: 0.6,
            bias: 200,
            contrast: 0.5,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.octaves == 0 {
            return Err(Error::InvalidSpec("octaves must be >= 1".into()));
        }
        if self.base_scale == 0 {
            return Err(Error::InvalidSpec("base_scale must be >= 1".into()));
        }
        if !(self.amplitude_decay > 0.0 && self.amplitude_decay <= 1.0) {
            return Err(Error::InvalidSpec(
                "amplitude_decay must lie in (0, 1]".into(),
            ));
        }
        if self.contrast <= 0.0 {
            return Err(Error::InvalidSpec("contrast must be positive".into()));
        }
        Ok(())
    }
}

/// Rule positions along one axis: multiples of the pitch, clipped so the
/// stroke stays inside the canvas, duplicates removed.
fn rule_positions(extent: u32, pitch: u32, line_width: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let p = match k.checked_mul(pitch) {
            Some(p) if p <= extent => p.min(extent - line_width.min(extent)),
            _ => break,
        };
        if out.last() != Some(&p) {
            out.push(p);
        }
        k += 1;
    }
    out
}

/// Renders a white canvas with grid rules and optional hollow checkboxes.
/// All drawn pixels take `spec.line_intensity`.
///
/// Draw order when jitter is enabled: one draw per vertical rule, then
/// one per horizontal rule. Checkboxes then consume one draw per
/// interior corner plus, when placed, none further.
pub fn gen_grid(spec: &GridSpec, w: u32, h: u32, rng: &mut RngStream) -> Result<Raster> {
    spec.validate()?;
    if w == 0 || h == 0 {
        return Err(Error::EmptyRaster);
    }
    let mut img = Raster::filled(w, h, 255);
    let lw = spec.line_width;

    let mut xs = if spec.baseline_only {
        Vec::new()
    } else {
        rule_positions(w, spec.cell_w, lw)
    };
    let mut ys = rule_positions(h, spec.cell_h, lw);
    if spec.jitter {
        for x in xs.iter_mut() {
            let d = rng.uniform_int(3) as i64 - 1;
            *x = (*x as i64 + d).clamp(0, (w - lw.min(w)) as i64) as u32;
        }
        for y in ys.iter_mut() {
            let d = rng.uniform_int(3) as i64 - 1;
            *y = (*y as i64 + d).clamp(0, (h - lw.min(h)) as i64) as u32;
        }
    }

    for &x in &xs {
        for dx in 0..lw.min(w - x) {
            for y in 0..h {
                img.set(x + dx, y, 0, spec.line_intensity);
            }
        }
    }
    for &y in &ys {
        for dy in 0..lw.min(h - y) {
            for x in 0..w {
                img.set(x, y + dy, 0, spec.line_intensity);
            }
        }
    }

    if spec.include_checkboxes {
        for &cy in &ys {
            for &cx in &xs {
                if !rng.bernoulli(spec.checkbox_probability) {
                    continue;
                }
                draw_hollow_box(
                    &mut img,
                    cx + lw + 1,
                    cy + lw + 1,
                    spec.checkbox_size,
                    lw,
                    spec.line_intensity,
                );
            }
        }
    }
    Ok(img)
}

fn draw_hollow_box(img: &mut Raster, x0: u32, y0: u32, size: u32, stroke: u32, intensity: u8) {
    let (w, h) = (img.width(), img.height());
    if x0 >= w || y0 >= h || size == 0 {
        return;
    }
    let x1 = (x0 + size).min(w);
    let y1 = (y0 + size).min(h);
    for y in y0..y1 {
        for x in x0..x1 {
            let on_edge = x < x0 + stroke || x >= x1.saturating_sub(stroke) || y < y0 + stroke
                || y >= y1.saturating_sub(stroke);
            if on_edge {
                img.set(x, y, 0, intensity);
            }
        }
    }
}

/// Sums bilinearly upsampled uniform noise over octaves with geometric
/// amplitude decay, then maps the field affinely onto
/// `[bias - 64 * contrast, bias + 64 * contrast]` and clamps to 8 bits.
pub fn gen_multiscale_noise(
    spec: &NoiseSpec,
    w: u32,
    h: u32,
    rng: &mut RngStream,
) -> Result<Raster> {
    spec.validate()?;
    if w == 0 || h == 0 {
        return Err(Error::EmptyRaster);
    }
    let n = w as usize * h as usize;
    let mut field = vec![0.0f64; n];
    let mut amplitude = 1.0;
    for k in 0..spec.octaves {
        let cell = (spec.base_scale as u64) << k.min(62);
        let gw = ((w as u64 + cell - 1) / cell).max(1) as u32;
        let gh = ((h as u64 + cell - 1) / cell).max(1) as u32;
        let mut grid = Vec::with_capacity(gw as usize * gh as usize);
        for _ in 0..gw as usize * gh as usize {
            grid.push(rng.next_f64());
        }
        accumulate_bilinear(&mut field, w, h, &grid, gw, gh, amplitude);
        amplitude *= spec.amplitude_decay;
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &field {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let out_lo = spec.bias as f64 - 64.0 * spec.contrast;
    let out_hi = spec.bias as f64 + 64.0 * spec.contrast;
    let span = hi - lo;
    let data = field
        .iter()
        .map(|&v| {
            let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
            clamp_round_u8(out_lo + t * (out_hi - out_lo))
        })
        .collect();
    Raster::from_vec(w, h, 1, data)
}

fn accumulate_bilinear(
    field: &mut [f64],
    w: u32,
    h: u32,
    grid: &[f64],
    gw: u32,
    gh: u32,
    amplitude: f64,
) {
    for y in 0..h {
        let gy = ((y as f64 + 0.5) * gh as f64 / h as f64 - 0.5).clamp(0.0, (gh - 1) as f64);
        let y0 = gy.floor() as usize;
        let y1 = (y0 + 1).min(gh as usize - 1);
        let fy = gy - y0 as f64;
        for x in 0..w {
            let gx = ((x as f64 + 0.5) * gw as f64 / w as f64 - 0.5).clamp(0.0, (gw - 1) as f64);
            let x0 = gx.floor() as usize;
            let x1 = (x0 + 1).min(gw as usize - 1);
            let fx = gx - x0 as f64;
            let top = grid[y0 * gw as usize + x0] * (1.0 - fx) + grid[y0 * gw as usize + x1] * fx;
            let bot = grid[y1 * gw as usize + x0] * (1.0 - fx) + grid[y1 * gw as usize + x1] * fx;
            field[y as usize * w as usize + x as usize] +=
                amplitude * (top * (1.0 - fy) + bot * fy);
        }
    }
}
