//! Image and label containers with exact pixel semantics.
//!
//! [`Raster`] is the universal 8-bit pixel buffer (1 or 3 channels,
//! row-major). [`Bitmap`] is a binary plane, and [`LabelStack`] bundles
//! one plane per class over a shared grid. All containers are immutable
//! after construction in pipeline code; mutation happens on locally
//! owned values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounds half up and clamps to the 8-bit range.
pub(crate) fn clamp_round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Semantic class tag. `background` is reserved: it denotes the absence
/// of every labeled plane and never owns one itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(name: impl Into<String>) -> Self {
        ClassId(name.into())
    }

    pub fn background() -> Self {
        ClassId::new("background")
    }

    pub fn handwriting() -> Self {
        ClassId::new("handwriting")
    }

    pub fn text() -> Self {
        ClassId::new("text")
    }

    pub fn form() -> Self {
        ClassId::new("form")
    }

    pub fn is_background(&self) -> bool {
        self.0 == "background"
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassId({})", self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Row-major 8-bit image buffer, single- or three-channel.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Raster({}x{}x{}, {} bytes)",
            self.width,
            self.height,
            self.channels,
            self.data.len()
        )
    }
}

impl Raster {
    /// Builds a raster from raw samples. Length must equal
    /// `width * height * channels` exactly.
    pub fn from_vec(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        if channels != 1 && channels != 3 {
            return Err(Error::BadChannels(channels));
        }
        let want = width as usize * height as usize * channels as usize;
        if data.len() != want {
            return Err(Error::BadBufferLength {
                got: data.len(),
                width,
                height,
                channels,
            });
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel raster filled with a constant value.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Raster {
            width,
            height,
            channels: 1,
            data: vec![value; width as usize * height as usize],
        }
    }

    /// Convenience constructor for tests and generators: single-channel
    /// raster from nested rows.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for row in rows {
            if row.len() as u32 != width {
                return Err(Error::InvalidSpec("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Raster::from_vec(width, height, 1, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn same_dims(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Sample at (x, y, c). Panics out of bounds, like slice indexing.
    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u8, v: u8) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize] = v;
    }

    /// ITU-R BT.601 luminance, `round(0.299 R + 0.587 G + 0.114 B)`,
    /// rounded half up. Single-channel input is returned unchanged.
    pub fn to_grayscale(&self) -> Raster {
        if self.channels == 1 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.width as usize * self.height as usize);
        for px in self.data.chunks_exact(3) {
            let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            data.push(clamp_round_u8(y));
        }
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Maximum sample value over all pixels and channels.
    pub fn max_intensity(&self) -> Result<u8> {
        self.data.iter().copied().max().ok_or(Error::EmptyRaster)
    }

    /// Reads an 8-bit grayscale or RGB PNG. Alpha channels are dropped;
    /// 16-bit and paletted-with-depth formats are rejected.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Raster> {
        let path = path.as_ref();
        let dynimg = image::open(path).map_err(|source| Error::ImageFile {
            path: path.to_path_buf(),
            source,
        })?;
        use image::DynamicImage::*;
        let (width, height) = (dynimg.width(), dynimg.height());
        match dynimg {
            ImageLuma8(buf) => Raster::from_vec(width, height, 1, buf.into_raw()),
            ImageLumaA8(_) => {
                Raster::from_vec(width, height, 1, dynimg.into_luma8().into_raw())
            }
            ImageRgb8(buf) => Raster::from_vec(width, height, 3, buf.into_raw()),
            ImageRgba8(_) => Raster::from_vec(width, height, 3, dynimg.into_rgb8().into_raw()),
            _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
        }
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            _ => image::ExtendedColorType::Rgb8,
        };
        image::save_buffer(path, &self.data, self.width, self.height, color).map_err(|source| {
            Error::ImageFile {
                path: path.to_path_buf(),
                source,
            }
        })
    }
}

/// Binary plane over a pixel grid; every entry is 0 or 1.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Bitmap({}x{}, {} set)",
            self.width,
            self.height,
            self.count_ones()
        )
    }
}

impl Bitmap {
    pub fn zeros(width: u32, height: u32) -> Self {
        Bitmap {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::BadBufferLength {
                got: data.len(),
                width,
                height,
                channels: 1,
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidSpec(format!(
                "bitmap value {bad} is neither 0 nor 1"
            )));
        }
        Ok(Bitmap {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y) as u8);
            }
        }
        Bitmap {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v as u8;
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }

    pub fn is_empty_mask(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn same_dims(&self, other: &Bitmap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Bitmap) -> bool {
        self.same_dims(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    /// Writes the plane as an 8-bit grayscale PNG valued 0/255.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().map(|&v| v * 255).collect();
        Raster::from_vec(self.width.max(1), self.height.max(1), 1, bytes)?.write_png(path)
    }

    /// Reads a 0/255-valued grayscale PNG back into a binary plane.
    /// Any other sample value is an encoding error.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Bitmap> {
        let path = path.as_ref();
        let img = Raster::read_png(path)?;
        if img.channels() != 1 {
            return Err(Error::UnsupportedFormat(path.to_path_buf()));
        }
        let mut data = Vec::with_capacity(img.data().len());
        for &v in img.data() {
            match v {
                0 => data.push(0),
                255 => data.push(1),
                other => {
                    return Err(Error::InvalidLabelValue {
                        path: path.to_path_buf(),
                        value: other,
                    })
                }
            }
        }
        Bitmap::from_vec(img.width(), img.height(), data)
    }
}

/// Ordered set of binary class planes over one grid. Planes may overlap:
/// a pixel can carry several classes at once.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabelStack {
    width: u32,
    height: u32,
    classes: Vec<ClassId>,
    planes: Vec<Bitmap>,
}

impl LabelStack {
    /// All-zero stack with one plane per class. Classes must be unique
    /// and must not include `background`.
    pub fn zeros(width: u32, height: u32, classes: Vec<ClassId>) -> Result<Self> {
        let planes = classes.iter().map(|_| Bitmap::zeros(width, height)).collect();
        LabelStack::from_planes(width, height, classes, planes)
    }

    pub fn from_planes(
        width: u32,
        height: u32,
        classes: Vec<ClassId>,
        planes: Vec<Bitmap>,
    ) -> Result<Self> {
        for (i, class) in classes.iter().enumerate() {
            if class.is_background() {
                return Err(Error::BackgroundPlane);
            }
            if classes[..i].contains(class) {
                return Err(Error::DuplicateClass(class.name().to_string()));
            }
        }
        if planes.len() != classes.len() {
            return Err(Error::InvalidSpec(format!(
                "{} planes supplied for {} classes",
                planes.len(),
                classes.len()
            )));
        }
        for plane in &planes {
            if plane.width() != width || plane.height() != height {
                return Err(Error::DimensionMismatch(
                    width,
                    height,
                    plane.width(),
                    plane.height(),
                ));
            }
        }
        Ok(LabelStack {
            width,
            height,
            classes,
            planes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn planes(&self) -> &[Bitmap] {
        &self.planes
    }

    pub fn plane(&self, class: &ClassId) -> Option<&Bitmap> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| &self.planes[i])
    }

    pub fn set_plane(&mut self, class: &ClassId, plane: Bitmap) -> Result<()> {
        if plane.width() != self.width || plane.height() != self.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                plane.width(),
                plane.height(),
            ));
        }
        let idx = self
            .classes
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass(class.name().to_string()))?;
        self.planes[idx] = plane;
        Ok(())
    }

    /// Writes one 0/255 PNG per class plane as `<stem>.<class>.png` plus
    /// a `<stem>.labels.json` sidecar recording the class order.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (class, plane) in self.classes.iter().zip(&self.planes) {
            plane.write_png(dir.join(format!("{stem}.{class}.png")))?;
        }
        let sidecar = LabelSidecar {
            classes: self.classes.clone(),
        };
        let file = std::fs::File::create(dir.join(format!("{stem}.labels.json")))?;
        serde_json::to_writer_pretty(file, &sidecar)?;
        Ok(())
    }

    /// Loads a stack previously written by [`LabelStack::save`].
    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<LabelStack> {
        let dir = dir.as_ref();
        let file = std::fs::File::open(dir.join(format!("{stem}.labels.json")))?;
        let sidecar: LabelSidecar = serde_json::from_reader(file)?;
        let mut planes = Vec::with_capacity(sidecar.classes.len());
        for class in &sidecar.classes {
            let path = dir.join(format!("{stem}.{class}.png"));
            if !path.exists() {
                return Err(Error::MissingPlane {
                    class: class.name().to_string(),
                    path,
                });
            }
            planes.push(Bitmap::read_png(path)?);
        }
        let (width, height) = planes
            .first()
            .map(|p| (p.width(), p.height()))
            .unwrap_or((0, 0));
        LabelStack::from_planes(width, height, sidecar.classes, planes)
    }
}

#[derive(Serialize, Deserialize)]
struct LabelSidecar {
    classes: Vec<ClassId>,
}

/// One compositing input: a grayscale image tagged with its class, and
/// an optional document-valid region mask.
#[derive(Clone, Debug)]
pub struct Layer {
    pub class: ClassId,
    pub image: Raster,
    pub region: Option<Bitmap>,
}

impl Layer {
    pub fn new(class: ClassId, image: Raster) -> Result<Self> {
        Layer::with_region(class, image, None)
    }

    pub fn with_region(class: ClassId, image: Raster, region: Option<Bitmap>) -> Result<Self> {
        if image.channels() != 1 {
            return Err(Error::BadChannels(image.channels()));
        }
        if let Some(mask) = &region {
            if mask.width() != image.width() || mask.height() != image.height() {
                return Err(Error::DimensionMismatch(
                    image.width(),
                    image.height(),
                    mask.width(),
                    mask.height(),
                ));
            }
        }
        Ok(Layer {
            class,
            image,
            region,
        })
    }
}

/// Stable string-keyed map used in serialized artifacts so output is
/// byte-deterministic.
pub type ClassMap<V> = BTreeMap<String, V>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_white_and_black_identity() {
        let white = Raster::from_vec(1, 1, 3, vec![255, 255, 255]).unwrap();
        assert_eq!(white.to_grayscale().data(), &[255]);
        let black = Raster::from_vec(1, 1, 3, vec![0, 0, 0]).unwrap();
        assert_eq!(black.to_grayscale().data(), &[0]);
    }

    #[test]
    fn grayscale_matches_luminance_formula() {
        // Oracle: direct evaluation of round(0.299 R + 0.587 G + 0.114 B).
        let cases = [(100u8, 200u8, 50u8), (1, 2, 3), (250, 10, 99)];
        for (r, g, b) in cases {
            let expect =
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64 + 0.5).floor() as u8;
            let img = Raster::from_vec(1, 1, 3, vec![r, g, b]).unwrap();
            assert_eq!(img.to_grayscale().data(), &[expect], "rgb ({r},{g},{b})");
        }
        // Frozen value for (100, 200, 50): 29.9 + 117.4 + 5.7 = 153.0.
        let img = Raster::from_vec(1, 1, 3, vec![100, 200, 50]).unwrap();
        assert_eq!(img.to_grayscale().data(), &[153]);
    }

    #[test]
    fn grayscale_idempotent_on_single_channel() {
        let img = Raster::from_rows(&[&[1, 2], &[3, 4]]).unwrap();
        assert_eq!(img.to_grayscale(), img);
    }

    #[test]
    fn grayscale_within_channel_bounds() {
        let img = Raster::from_vec(1, 1, 3, vec![40, 90, 200]).unwrap();
        let y = img.to_grayscale().data()[0];
        assert!((40..=200).contains(&y));
    }

    #[test]
    fn max_intensity_scans_all_pixels() {
        assert_eq!(Raster::filled(4, 4, 0).max_intensity().unwrap(), 0);
        assert_eq!(Raster::filled(2, 2, 255).max_intensity().unwrap(), 255);
        let img = Raster::from_rows(&[&[10, 200], &[30, 40]]).unwrap();
        assert_eq!(img.max_intensity().unwrap(), 200);
    }

    #[test]
    fn raster_rejects_bad_shapes() {
        assert!(matches!(
            Raster::from_vec(0, 4, 1, vec![]),
            Err(Error::EmptyRaster)
        ));
        assert!(matches!(
            Raster::from_vec(2, 2, 2, vec![0; 8]),
            Err(Error::BadChannels(2))
        ));
        assert!(matches!(
            Raster::from_vec(2, 2, 1, vec![0; 5]),
            Err(Error::BadBufferLength { .. })
        ));
    }

    #[test]
    fn bitmap_rejects_non_binary() {
        assert!(Bitmap::from_vec(2, 1, vec![0, 2]).is_err());
        assert!(Bitmap::from_vec(2, 1, vec![0, 1]).is_ok());
    }

    #[test]
    fn label_stack_rejects_background_and_duplicates() {
        assert!(matches!(
            LabelStack::zeros(2, 2, vec![ClassId::background()]),
            Err(Error::BackgroundPlane)
        ));
        assert!(matches!(
            LabelStack::zeros(2, 2, vec![ClassId::text(), ClassId::text()]),
            Err(Error::DuplicateClass(_))
        ));
    }

    #[test]
    fn png_round_trip_grayscale_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let gray = Raster::from_rows(&[&[0, 128], &[255, 7]]).unwrap();
        let p = dir.path().join("gray.png");
        gray.write_png(&p).unwrap();
        assert_eq!(Raster::read_png(&p).unwrap(), gray);

        let rgb = Raster::from_vec(2, 1, 3, vec![1, 2, 3, 250, 251, 252]).unwrap();
        let p = dir.path().join("rgb.png");
        rgb.write_png(&p).unwrap();
        assert_eq!(Raster::read_png(&p).unwrap(), rgb);
    }

    #[test]
    fn bitmap_png_rejects_intermediate_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plane.png");
        Raster::from_rows(&[&[0, 128], &[255, 0]])
            .unwrap()
            .write_png(&p)
            .unwrap();
        assert!(matches!(
            Bitmap::read_png(&p),
            Err(Error::InvalidLabelValue { value: 128, .. })
        ));
    }

    #[test]
    fn label_stack_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let classes = vec![ClassId::handwriting(), ClassId::form()];
        let mut stack = LabelStack::zeros(3, 2, classes.clone()).unwrap();
        let plane = Bitmap::from_fn(3, 2, |x, y| (x + y) % 2 == 0);
        stack.set_plane(&ClassId::form(), plane).unwrap();
        stack.save(dir.path(), "sample").unwrap();
        let loaded = LabelStack::load(dir.path(), "sample").unwrap();
        assert_eq!(loaded, stack);
    }

    #[test]
    fn label_stack_load_reports_missing_plane() {
        let dir = tempfile::tempdir().unwrap();
        let stack = LabelStack::zeros(2, 2, vec![ClassId::text()]).unwrap();
        stack.save(dir.path(), "s").unwrap();
        std::fs::remove_file(dir.path().join("s.text.png")).unwrap();
        match LabelStack::load(dir.path(), "s") {
            Err(Error::MissingPlane { class, .. }) => assert_eq!(class, "text"),
            other => panic!("expected MissingPlane, got {other:?}"),
        }
    }
}
