//! Padding and mutually exclusive tiling of documents into fixed-size
//! patches, plus the inverse reassembly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Bitmap, LabelStack, Raster};

/// Tiling geometry recorded at padding time; sufficient to reassemble
/// the original image from its patches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub original_w: u32,
    pub original_h: u32,
    pub padded_w: u32,
    pub padded_h: u32,
    pub patch: u32,
    pub rows: u32,
    pub cols: u32,
}

impl PatchGrid {
    fn new(original_w: u32, original_h: u32, patch: u32) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidSpec("patch size must be positive".into()));
        }
        let padded_w = original_w.div_ceil(patch) * patch;
        let padded_h = original_h.div_ceil(patch) * patch;
        Ok(PatchGrid {
            original_w,
            original_h,
            padded_w,
            padded_h,
            patch,
            rows: padded_h / patch,
            cols: padded_w / patch,
        })
    }

    pub fn patch_count(&self) -> u32 {
        self.rows * self.cols
    }
}

/// Pads right and bottom with white (255) to the next multiple of `m`.
/// Original pixels are untouched.
pub fn pad_raster(img: &Raster, m: u32) -> Result<(Raster, PatchGrid)> {
    let grid = PatchGrid::new(img.width(), img.height(), m)?;
    let padded = pad_plane(
        img.data(),
        img.width(),
        img.height(),
        img.channels(),
        grid.padded_w,
        grid.padded_h,
        255,
    );
    Ok((
        Raster::from_vec(grid.padded_w, grid.padded_h, img.channels(), padded)?,
        grid,
    ))
}

/// Pads every label plane with zeros; padding never invents positives.
pub fn pad_labels(labels: &LabelStack, m: u32) -> Result<(LabelStack, PatchGrid)> {
    let grid = PatchGrid::new(labels.width(), labels.height(), m)?;
    let mut planes = Vec::with_capacity(labels.planes().len());
    for plane in labels.planes() {
        let data = pad_plane(
            plane.data(),
            plane.width(),
            plane.height(),
            1,
            grid.padded_w,
            grid.padded_h,
            0,
        );
        planes.push(Bitmap::from_vec(grid.padded_w, grid.padded_h, data)?);
    }
    Ok((
        LabelStack::from_planes(
            grid.padded_w,
            grid.padded_h,
            labels.classes().to_vec(),
            planes,
        )?,
        grid,
    ))
}

fn pad_plane(
    data: &[u8],
    w: u32,
    h: u32,
    channels: u8,
    pw: u32,
    ph: u32,
    fill: u8,
) -> Vec<u8> {
    let (w, h, pw, ph, ch) = (
        w as usize,
        h as usize,
        pw as usize,
        ph as usize,
        channels as usize,
    );
    let mut out = vec![fill; pw * ph * ch];
    for y in 0..h {
        out[y * pw * ch..y * pw * ch + w * ch].copy_from_slice(&data[y * w * ch..(y + 1) * w * ch]);
    }
    out
}

/// Cuts the padded image into row-major, non-overlapping, exhaustive
/// `patch x patch` tiles.
pub fn split_raster(padded: &Raster, grid: &PatchGrid) -> Result<Vec<Raster>> {
    if padded.width() != grid.padded_w || padded.height() != grid.padded_h {
        return Err(Error::DimensionMismatch(
            grid.padded_w,
            grid.padded_h,
            padded.width(),
            padded.height(),
        ));
    }
    let p = grid.patch as usize;
    let ch = padded.channels() as usize;
    let mut out = Vec::with_capacity(grid.patch_count() as usize);
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let mut data = Vec::with_capacity(p * p * ch);
            for y in 0..p {
                let src_y = row as usize * p + y;
                let src_x = col as usize * p;
                let start = (src_y * grid.padded_w as usize + src_x) * ch;
                data.extend_from_slice(&padded.data()[start..start + p * ch]);
            }
            out.push(Raster::from_vec(grid.patch, grid.patch, padded.channels(), data)?);
        }
    }
    Ok(out)
}

/// Reassembles patches and crops back to the original dimensions;
/// `join(split(pad(x)))` is `x` bit-exactly.
pub fn join_raster(patches: &[Raster], grid: &PatchGrid) -> Result<Raster> {
    if patches.len() != grid.patch_count() as usize {
        return Err(Error::PatchCountMismatch {
            got: patches.len(),
            rows: grid.rows,
            cols: grid.cols,
        });
    }
    let channels = patches.first().map_or(1, |p| p.channels());
    let p = grid.patch as usize;
    let ch = channels as usize;
    let mut canvas = vec![0u8; grid.padded_w as usize * grid.padded_h as usize * ch];
    for (i, patch) in patches.iter().enumerate() {
        if patch.width() != grid.patch || patch.height() != grid.patch || patch.channels() != channels
        {
            return Err(Error::DimensionMismatch(
                grid.patch,
                grid.patch,
                patch.width(),
                patch.height(),
            ));
        }
        let row = i / grid.cols as usize;
        let col = i % grid.cols as usize;
        for y in 0..p {
            let dst_y = row * p + y;
            let dst_x = col * p;
            let start = (dst_y * grid.padded_w as usize + dst_x) * ch;
            canvas[start..start + p * ch]
                .copy_from_slice(&patch.data()[y * p * ch..(y + 1) * p * ch]);
        }
    }
    // Crop back to the original size.
    let (ow, oh) = (grid.original_w as usize, grid.original_h as usize);
    let mut out = Vec::with_capacity(ow * oh * ch);
    for y in 0..oh {
        let start = y * grid.padded_w as usize * ch;
        out.extend_from_slice(&canvas[start..start + ow * ch]);
    }
    Raster::from_vec(grid.original_w, grid.original_h, channels, out)
}

/// Splits every plane of a padded label stack into per-class tile stacks.
pub fn split_labels(padded: &LabelStack, grid: &PatchGrid) -> Result<Vec<LabelStack>> {
    if padded.width() != grid.padded_w || padded.height() != grid.padded_h {
        return Err(Error::DimensionMismatch(
            grid.padded_w,
            grid.padded_h,
            padded.width(),
            padded.height(),
        ));
    }
    let mut tiles: Vec<Vec<Bitmap>> =
        vec![Vec::with_capacity(padded.classes().len()); grid.patch_count() as usize];
    for plane in padded.planes() {
        let as_raster = Raster::from_vec(plane.width(), plane.height(), 1, plane.data().to_vec())?;
        for (i, tile) in split_raster(&as_raster, grid)?.into_iter().enumerate() {
            tiles[i].push(Bitmap::from_vec(grid.patch, grid.patch, tile.data().to_vec())?);
        }
    }
    tiles
        .into_iter()
        .map(|planes| {
            LabelStack::from_planes(grid.patch, grid.patch, padded.classes().to_vec(), planes)
        })
        .collect()
}

/// Inverse of [`split_labels`]: reassembles tile stacks and crops back.
pub fn join_labels(tiles: &[LabelStack], grid: &PatchGrid) -> Result<LabelStack> {
    if tiles.len() != grid.patch_count() as usize {
        return Err(Error::PatchCountMismatch {
            got: tiles.len(),
            rows: grid.rows,
            cols: grid.cols,
        });
    }
    let classes = tiles
        .first()
        .map(|t| t.classes().to_vec())
        .unwrap_or_default();
    let mut planes = Vec::with_capacity(classes.len());
    for (ci, _) in classes.iter().enumerate() {
        let patches: Vec<Raster> = tiles
            .iter()
            .map(|t| {
                Raster::from_vec(
                    grid.patch,
                    grid.patch,
                    1,
                    t.planes()[ci].data().to_vec(),
                )
            })
            .collect::<Result<_>>()?;
        let joined = join_raster(&patches, grid)?;
        planes.push(Bitmap::from_vec(
            grid.original_w,
            grid.original_h,
            joined.data().to_vec(),
        )?);
    }
    LabelStack::from_planes(grid.original_w, grid.original_h, classes, planes)
}
