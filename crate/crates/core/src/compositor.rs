//! Layer compositing and threshold ground-truth extraction.
//!
//! Ink is combined multiplicatively: each layer is normalized by its own
//! maximum intensity so content always darkens the background it lands
//! on. Labels are cut from the layer itself with an intensity threshold,
//! optionally gated by the document-valid region of the background.

use crate::dataset::SampleManifest;
use crate::error::{Error, Result};
use crate::raster::{clamp_round_u8, Bitmap, ClassId, LabelStack, Layer, Raster};

/// Run-level compositing parameters.
#[derive(Clone, Debug)]
pub struct CompositeConfig {
    /// Intensity threshold: a layer pixel is labeled iff strictly darker
    /// than `tau`.
    pub tau: u8,
    pub canvas: (u32, u32),
    /// Ordered label classes; every assembled stack carries exactly one
    /// plane per entry.
    pub classes: Vec<ClassId>,
}

impl CompositeConfig {
    pub fn new(tau: u8, canvas: (u32, u32), classes: Vec<ClassId>) -> Result<Self> {
        if canvas.0 == 0 || canvas.1 == 0 {
            return Err(Error::EmptyRaster);
        }
        if classes.iter().any(|c| c.is_background()) {
            return Err(Error::BackgroundPlane);
        }
        Ok(CompositeConfig {
            tau,
            canvas,
            classes,
        })
    }
}

/// One synthetic training sample.
#[derive(Clone, Debug)]
pub struct Sample {
    pub image: Raster,
    pub labels: LabelStack,
    pub manifest: SampleManifest,
}

/// Multiplies `base` by the max-normalized `layer`, rounding half up.
/// The result is pointwise no brighter than `base`.
pub fn composite_layer(base: &Raster, layer: &Raster) -> Result<Raster> {
    if base.channels() != 1 || layer.channels() != 1 {
        return Err(Error::BadChannels(base.channels().max(layer.channels())));
    }
    if !base.same_dims(layer) {
        return Err(Error::DimensionMismatch(
            base.width(),
            base.height(),
            layer.width(),
            layer.height(),
        ));
    }
    let max = layer.max_intensity()?;
    if max == 0 {
        return Err(Error::ZeroLayer);
    }
    let max = max as f64;
    let data = base
        .data()
        .iter()
        .zip(layer.data())
        .map(|(&b, &l)| clamp_round_u8(b as f64 * l as f64 / max))
        .collect();
    Raster::from_vec(base.width(), base.height(), 1, data)
}

/// Thresholds a layer into a binary plane: 1 iff the pixel is strictly
/// darker than `tau` and, when a region mask is given, lies inside it.
pub fn extract_label(layer: &Raster, tau: u8, region: Option<&Bitmap>) -> Result<Bitmap> {
    if layer.channels() != 1 {
        return Err(Error::BadChannels(layer.channels()));
    }
    if let Some(mask) = region {
        if mask.width() != layer.width() || mask.height() != layer.height() {
            return Err(Error::DimensionMismatch(
                layer.width(),
                layer.height(),
                mask.width(),
                mask.height(),
            ));
        }
    }
    let data = layer
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let inside = region.map_or(true, |m| m.data()[i] == 1);
            (inside && v < tau) as u8
        })
        .collect();
    Bitmap::from_vec(layer.width(), layer.height(), data)
}

/// Replaces the patch region with `min(canvas, patch)` pointwise, so ink
/// accumulates darkly and white is neutral.
pub fn paste_at(canvas: &Raster, patch: &Raster, x: u32, y: u32) -> Result<Raster> {
    if canvas.channels() != 1 || patch.channels() != 1 {
        return Err(Error::BadChannels(canvas.channels().max(patch.channels())));
    }
    if x.checked_add(patch.width()).map_or(true, |r| r > canvas.width())
        || y.checked_add(patch.height()).map_or(true, |b| b > canvas.height())
    {
        return Err(Error::OutOfBounds {
            x,
            y,
            pw: patch.width(),
            ph: patch.height(),
            cw: canvas.width(),
            ch: canvas.height(),
        });
    }
    let mut out = canvas.clone();
    for py in 0..patch.height() {
        for px in 0..patch.width() {
            let v = canvas.get(x + px, y + py, 0).min(patch.get(px, py, 0));
            out.set(x + px, y + py, 0, v);
        }
    }
    Ok(out)
}

/// Assembles a composite image and its label stack from a background and
/// up to one layer per class.
///
/// Layer factors accumulate as exact integer rationals and are quantized
/// once, so the composite is bit-identical under any permutation of the
/// same layers; a single layer reproduces [`composite_layer`] exactly.
/// Classes without a supplied layer get an all-zero plane. Label planes
/// are gated by the background's document region (derived heuristically
/// when absent).
pub fn assemble_sample(bg: &Layer, layers: &[Layer], cfg: &CompositeConfig) -> Result<Sample> {
    if !bg.class.is_background() {
        return Err(Error::UnknownClass(bg.class.name().to_string()));
    }
    let (cw, ch) = cfg.canvas;
    if bg.image.width() != cw || bg.image.height() != ch {
        return Err(Error::DimensionMismatch(
            cw,
            ch,
            bg.image.width(),
            bg.image.height(),
        ));
    }
    for (i, layer) in layers.iter().enumerate() {
        if layer.image.width() != cw || layer.image.height() != ch {
            return Err(Error::DimensionMismatch(
                cw,
                ch,
                layer.image.width(),
                layer.image.height(),
            ));
        }
        if !cfg.classes.contains(&layer.class) {
            return Err(Error::UnknownClass(layer.class.name().to_string()));
        }
        if layers[..i].iter().any(|l| l.class == layer.class) {
            return Err(Error::DuplicateClass(layer.class.name().to_string()));
        }
    }

    let region = match &bg.region {
        Some(mask) => mask.clone(),
        None => derive_region(&bg.image),
    };

    // Exact product: numerator = bg * prod(layer), denominator = prod(max).
    let n_px = cw as usize * ch as usize;
    let mut num: Vec<u128> = bg.image.data().iter().map(|&b| b as u128).collect();
    let mut den: u128 = 1;
    for layer in layers {
        let max = layer.image.max_intensity()?;
        if max == 0 {
            return Err(Error::ZeroLayer);
        }
        den *= max as u128;
        for (acc, &l) in num.iter_mut().zip(layer.image.data()) {
            *acc *= l as u128;
        }
    }
    let mut pixels = Vec::with_capacity(n_px);
    for &n in &num {
        // round(n / den) half up, in exact integer arithmetic.
        pixels.push(((2 * n + den) / (2 * den)) as u8);
    }
    let image = Raster::from_vec(cw, ch, 1, pixels)?;

    let mut labels = LabelStack::zeros(cw, ch, cfg.classes.clone())?;
    for layer in layers {
        let plane = extract_label(&layer.image, cfg.tau, Some(&region))?;
        labels.set_plane(&layer.class, plane)?;
    }

    let mut manifest = SampleManifest::default();
    manifest.tau = cfg.tau;
    Ok(Sample {
        image,
        labels,
        manifest,
    })
}

/// Heuristic document-valid region for a background without an explicit
/// mask: pixels with intensity >= 60 after 5x5 median smoothing, reduced
/// to the largest 4-connected component with its holes filled.
pub fn derive_region(bg: &Raster) -> Bitmap {
    let (w, h) = (bg.width(), bg.height());
    let smoothed = median_5x5(bg);
    let mut candidate = Bitmap::from_fn(w, h, |x, y| smoothed.get(x, y, 0) >= 60);
    if candidate.is_empty_mask() {
        return candidate;
    }
    candidate = largest_component(&candidate);
    fill_holes(&mut candidate);
    candidate
}

fn median_5x5(img: &Raster) -> Raster {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = Raster::filled(img.width(), img.height(), 0);
    let mut window = [0u8; 25];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for dy in -2..=2 {
                for dx in -2..=2 {
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    let sy = (y + dy).clamp(0, h - 1) as u32;
                    window[k] = img.get(sx, sy, 0);
                    k += 1;
                }
            }
            window.sort_unstable();
            out.set(x as u32, y as u32, 0, window[12]);
        }
    }
    out
}

/// Largest 4-connected component of set pixels; size ties resolve to the
/// component encountered first in row-major order.
fn largest_component(mask: &Bitmap) -> Bitmap {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut label = vec![0u32; w * h];
    let mut sizes = vec![0u64];
    let mut next = 1u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if mask.data()[start] == 0 || label[start] != 0 {
            continue;
        }
        let id = next;
        next += 1;
        let mut size = 0u64;
        stack.push(start);
        label[start] = id;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask.data()[j] == 1 && label[j] == 0 {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    let best = (1..next).max_by_key(|&id| (sizes[id as usize], std::cmp::Reverse(id)));
    let best = best.unwrap_or(0);
    let data = label.iter().map(|&l| (l == best && l != 0) as u8).collect();
    Bitmap::from_vec(mask.width(), mask.height(), data).expect("binary by construction")
}

/// Sets every unset pixel that cannot reach the border through unset
/// pixels (4-connectivity).
fn fill_holes(mask: &mut Bitmap) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    let mut push = |i: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>, data: &[u8]| {
        if !outside[i] && data[i] == 0 {
            outside[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        push(x, &mut outside, &mut stack, mask.data());
        push((h - 1) * w + x, &mut outside, &mut stack, mask.data());
    }
    for y in 0..h {
        push(y * w, &mut outside, &mut stack, mask.data());
        push(y * w + w - 1, &mut outside, &mut stack, mask.data());
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            push(i - 1, &mut outside, &mut stack, mask.data());
        }
        if x + 1 < w {
            push(i + 1, &mut outside, &mut stack, mask.data());
        }
        if y > 0 {
            push(i - w, &mut outside, &mut stack, mask.data());
        }
        if y + 1 < h {
            push(i + w, &mut outside, &mut stack, mask.data());
        }
    }
    for y in 0..h as u32 {
        for x in 0..w as u32 {
            if !outside[y as usize * w + x as usize] {
                mask.set(x, y, true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau: u8, w: u32, h: u32) -> CompositeConfig {
        CompositeConfig::new(
            tau,
            (w, h),
            vec![ClassId::handwriting(), ClassId::text(), ClassId::form()],
        )
        .unwrap()
    }

    #[test]
    fn white_layer_is_neutral() {
        let base = Raster::from_rows(&[&[200, 100], &[150, 250]]).unwrap();
        let layer = Raster::filled(2, 2, 255);
        assert_eq!(composite_layer(&base, &layer).unwrap(), base);
    }

    #[test]
    fn composite_matches_direct_formula() {
        let base = Raster::from_rows(&[&[200, 100], &[150, 250]]).unwrap();
        let layer = Raster::from_rows(&[&[255, 0], &[255, 255]]).unwrap();
        let out = composite_layer(&base, &layer).unwrap();
        assert_eq!(out.data(), &[200, 0, 150, 250]);
    }

    #[test]
    fn zero_base_stays_zero() {
        let base = Raster::filled(3, 3, 0);
        let layer = Raster::filled(3, 3, 90);
        assert_eq!(composite_layer(&base, &layer).unwrap(), base);
    }

    #[test]
    fn composite_rejects_zero_layer_and_mismatch() {
        let base = Raster::filled(2, 2, 10);
        assert!(matches!(
            composite_layer(&base, &Raster::filled(2, 2, 0)),
            Err(Error::ZeroLayer)
        ));
        assert!(matches!(
            composite_layer(&base, &Raster::filled(3, 2, 10)),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn composite_never_brightens() {
        let mut rng = crate::rng::RngStream::new(11, 0);
        for _ in 0..50 {
            let base_data: Vec<u8> = (0..64).map(|_| rng.uniform_int(256) as u8).collect();
            let layer_data: Vec<u8> =
                (0..64).map(|_| 1 + rng.uniform_int(255) as u8).collect();
            let base = Raster::from_vec(8, 8, 1, base_data).unwrap();
            let layer = Raster::from_vec(8, 8, 1, layer_data).unwrap();
            let out = composite_layer(&base, &layer).unwrap();
            for (o, b) in out.data().iter().zip(base.data()) {
                assert!(o <= b);
            }
        }
    }

    #[test]
    fn extract_label_thresholds_strictly() {
        let layer = Raster::from_rows(&[&[100, 200]]).unwrap();
        let plane = extract_label(&layer, 128, None).unwrap();
        assert_eq!(plane.data(), &[1, 0]);
        // tau = 0: nothing is strictly below zero.
        assert!(extract_label(&layer, 0, None).unwrap().is_empty_mask());
        // Exactly tau is not labeled.
        let edge = Raster::from_rows(&[&[128]]).unwrap();
        assert!(extract_label(&edge, 128, None).unwrap().is_empty_mask());
    }

    #[test]
    fn extract_label_respects_region() {
        let layer = Raster::from_rows(&[&[100, 200]]).unwrap();
        let region = Bitmap::from_vec(2, 1, vec![0, 1]).unwrap();
        let plane = extract_label(&layer, 128, Some(&region)).unwrap();
        assert_eq!(plane.data(), &[0, 0]);
        let bad = Bitmap::zeros(3, 1);
        assert!(extract_label(&layer, 128, Some(&bad)).is_err());
    }

    #[test]
    fn paste_takes_pointwise_min() {
        let canvas = Raster::filled(3, 3, 255);
        let patch = Raster::from_rows(&[&[0]]).unwrap();
        let out = paste_at(&canvas, &patch, 0, 0).unwrap();
        assert_eq!(out.get(0, 0, 0), 0);

        let canvas = Raster::from_rows(&[&[100]]).unwrap();
        let patch = Raster::from_rows(&[&[200]]).unwrap();
        assert_eq!(paste_at(&canvas, &patch, 0, 0).unwrap().data(), &[100]);

        let white = Raster::filled(2, 2, 255);
        let base = Raster::from_rows(&[&[5, 6], &[7, 8]]).unwrap();
        assert_eq!(paste_at(&base, &white, 0, 0).unwrap(), base);
    }

    #[test]
    fn paste_rejects_out_of_bounds() {
        let canvas = Raster::filled(4, 4, 255);
        let patch = Raster::filled(2, 2, 0);
        assert!(matches!(
            paste_at(&canvas, &patch, 3, 0),
            Err(Error::OutOfBounds { .. })
        ));
    }

    fn full_region(w: u32, h: u32) -> Option<Bitmap> {
        Some(Bitmap::from_fn(w, h, |_, _| true))
    }

    #[test]
    fn assemble_without_layers_is_blank() {
        let bg_img = Raster::from_rows(&[&[90, 120], &[200, 64]]).unwrap();
        let bg = Layer::with_region(ClassId::background(), bg_img.clone(), full_region(2, 2))
            .unwrap();
        let sample = assemble_sample(&bg, &[], &cfg(128, 2, 2)).unwrap();
        assert_eq!(sample.image, bg_img);
        assert_eq!(sample.labels.classes().len(), 3);
        for plane in sample.labels.planes() {
            assert!(plane.is_empty_mask());
        }
    }

    #[test]
    fn assemble_single_layer_matches_direct_ops() {
        let bg_img = Raster::from_rows(&[&[200, 180], &[240, 255]]).unwrap();
        let hw_img = Raster::from_rows(&[&[30, 255], &[255, 100]]).unwrap();
        let bg =
            Layer::with_region(ClassId::background(), bg_img.clone(), full_region(2, 2)).unwrap();
        let hw = Layer::new(ClassId::handwriting(), hw_img.clone()).unwrap();
        let sample = assemble_sample(&bg, &[hw], &cfg(128, 2, 2)).unwrap();

        assert_eq!(sample.image, composite_layer(&bg_img, &hw_img).unwrap());
        let expect = extract_label(&hw_img, 128, None).unwrap();
        assert_eq!(sample.labels.plane(&ClassId::handwriting()).unwrap(), &expect);
        assert!(sample.labels.plane(&ClassId::text()).unwrap().is_empty_mask());
        assert!(sample.labels.plane(&ClassId::form()).unwrap().is_empty_mask());
    }

    #[test]
    fn assemble_is_order_independent() {
        let mut rng = crate::rng::RngStream::new(3, 9);
        let rand_raster = |rng: &mut crate::rng::RngStream, lo: u8| {
            let data: Vec<u8> = (0..36)
                .map(|_| lo + rng.uniform_int((256 - lo as u64) as u64) as u8)
                .collect();
            Raster::from_vec(6, 6, 1, data).unwrap()
        };
        for _ in 0..25 {
            let bg = Layer::with_region(
                ClassId::background(),
                rand_raster(&mut rng, 0),
                full_region(6, 6),
            )
            .unwrap();
            let a = Layer::new(ClassId::handwriting(), rand_raster(&mut rng, 1)).unwrap();
            let b = Layer::new(ClassId::text(), rand_raster(&mut rng, 1)).unwrap();
            let c = Layer::new(ClassId::form(), rand_raster(&mut rng, 1)).unwrap();
            let cfg = cfg(128, 6, 6);
            let abc = assemble_sample(&bg, &[a.clone(), b.clone(), c.clone()], &cfg).unwrap();
            let cba = assemble_sample(&bg, &[c, b, a], &cfg).unwrap();
            assert_eq!(abc.image, cba.image);
            assert_eq!(abc.labels, cba.labels);
        }
    }

    #[test]
    fn assemble_rejects_duplicate_classes() {
        let bg = Layer::with_region(
            ClassId::background(),
            Raster::filled(2, 2, 200),
            full_region(2, 2),
        )
        .unwrap();
        let a = Layer::new(ClassId::text(), Raster::filled(2, 2, 40)).unwrap();
        let b = Layer::new(ClassId::text(), Raster::filled(2, 2, 50)).unwrap();
        assert!(matches!(
            assemble_sample(&bg, &[a, b], &cfg(128, 2, 2)),
            Err(Error::DuplicateClass(_))
        ));
    }

    #[test]
    fn labeled_pixels_are_darker_than_tau() {
        let mut rng = crate::rng::RngStream::new(17, 1);
        let data: Vec<u8> = (0..64).map(|_| rng.uniform_int(256) as u8).collect();
        let mut layer_img = Raster::from_vec(8, 8, 1, data).unwrap();
        layer_img.set(0, 0, 0, 10); // keep the layer non-zero somewhere dark
        let bg = Layer::with_region(
            ClassId::background(),
            Raster::filled(8, 8, 230),
            full_region(8, 8),
        )
        .unwrap();
        let layer = Layer::new(ClassId::form(), layer_img.clone()).unwrap();
        let sample = assemble_sample(&bg, &[layer], &cfg(90, 8, 8)).unwrap();
        let plane = sample.labels.plane(&ClassId::form()).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                if plane.get(x, y) == 1 {
                    assert!(layer_img.get(x, y, 0) < 90);
                }
            }
        }
    }

    #[test]
    fn derived_region_fills_holes_and_keeps_largest_blob() {
        // 20x20 bright document with a dark hole, plus a separated bright speck.
        let mut img = Raster::filled(32, 32, 10);
        for y in 2..22 {
            for x in 2..22 {
                img.set(x, y, 0, 200);
            }
        }
        for y in 10..13 {
            for x in 10..13 {
                img.set(x, y, 0, 0); // hole inside the document
            }
        }
        img.set(30, 30, 0, 255); // speck, smoothed away or minor component
        let region = derive_region(&img);
        // Interior of the document, including the hole, is inside the region.
        assert_eq!(region.get(11, 11), 1);
        assert_eq!(region.get(5, 5), 1);
        // Far corner outside the document is not.
        assert_eq!(region.get(25, 5), 0);
    }
}
