//! Level-dependent patch geometry, Patchify and DePatchify.
//!
//! At level `l` with overlap ratio `gamma`, patch size is
//! `ceil(H / (1 + (l-1)*(1-gamma)))` per axis. Anchors advance by
//! `stride = max(1, floor(patch * (1-gamma)))`, and the final anchor is
//! snapped to the image border so no patch leaves the image and every
//! pixel is covered.
//!
//! DePatchify blends overlapping patches with a uniform average,
//! maintained as a running mean per pixel in fixed anchor order. When all
//! contributors carry the same value the running mean returns exactly that
//! value, which makes depatchify∘patchify bit-exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{Image, Rect, CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub level: u32,
    pub gamma: f64,
    pub img_h: usize,
    pub img_w: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
    /// Top-left patch positions, row-major, no duplicates.
    pub anchors: Vec<(usize, usize)>,
}

/// Geometry summary for reports and `sweep --dump-grids`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    pub level: u32,
    pub patch_h: usize,
    pub patch_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
    pub n_patches: usize,
}

impl PatchGrid {
    pub fn n_patches(&self) -> usize {
        self.anchors.len()
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            level: self.level,
            patch_h: self.patch_h,
            patch_w: self.patch_w,
            stride_h: self.stride_h,
            stride_w: self.stride_w,
            n_patches: self.n_patches(),
        }
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.height() != self.img_h || img.width() != self.img_w {
            return Err(Error::Shape(format!(
                "grid built for {}x{} but image is {}x{}",
                self.img_h,
                self.img_w,
                img.height(),
                img.width()
            )));
        }
        Ok(())
    }
}

pub fn make_grid(height: usize, width: usize, level: u32, gamma: f64) -> Result<PatchGrid> {
    if height == 0 || width == 0 {
        return Err(Error::Config(format!(
            "grid dimensions must be >= 1, got {height}x{width}"
        )));
    }
    if level < 1 {
        return Err(Error::Config(format!("level must be >= 1, got {level}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    let denom = 1.0 + (level - 1) as f64 * (1.0 - gamma);
    let patch_h = ((height as f64) / denom).ceil() as usize;
    let patch_w = ((width as f64) / denom).ceil() as usize;
    let stride_h = stride_for(patch_h, gamma);
    let stride_w = stride_for(patch_w, gamma);
    let rows = axis_anchors(height, patch_h, stride_h);
    let cols = axis_anchors(width, patch_w, stride_w);
    let mut anchors = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            anchors.push((r, c));
        }
    }
    Ok(PatchGrid {
        level,
        gamma,
        img_h: height,
        img_w: width,
        patch_h,
        patch_w,
        stride_h,
        stride_w,
        anchors,
    })
}

fn stride_for(patch: usize, gamma: f64) -> usize {
    ((patch as f64 * (1.0 - gamma)).floor() as usize).max(1)
}

/// Anchor offsets 0, stride, 2*stride, ... with the last snapped to
/// `len - patch` when the regular sequence does not already land there.
fn axis_anchors(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    let last = len - patch;
    let mut out = Vec::new();
    let mut a = 0;
    while a <= last {
        out.push(a);
        a += stride;
    }
    if *out.last().expect("anchor 0 always present") != last {
        out.push(last);
    }
    out
}

pub fn patchify(img: &Image, grid: &PatchGrid) -> Result<Vec<Image>> {
    grid.check_image(img)?;
    grid.anchors
        .iter()
        .map(|&(r, c)| {
            img.crop(Rect {
                row: r,
                col: c,
                height: grid.patch_h,
                width: grid.patch_w,
            })
        })
        .collect()
}

pub fn depatchify(
    patches: &[Image],
    grid: &PatchGrid,
    height: usize,
    width: usize,
) -> Result<Image> {
    if height != grid.img_h || width != grid.img_w {
        return Err(Error::Shape(format!(
            "grid built for {}x{} but target is {height}x{width}",
            grid.img_h, grid.img_w
        )));
    }
    if patches.len() != grid.n_patches() {
        return Err(Error::Shape(format!(
            "expected {} patches, got {}",
            grid.n_patches(),
            patches.len()
        )));
    }
    for (i, p) in patches.iter().enumerate() {
        if p.height() != grid.patch_h || p.width() != grid.patch_w {
            return Err(Error::Shape(format!(
                "patch {i} is {}x{}, grid expects {}x{}",
                p.height(),
                p.width(),
                grid.patch_h,
                grid.patch_w
            )));
        }
    }
    let mut out = Image::zeros(height, width)?;
    let mut counts = vec![0u32; CHANNELS * height * width];
    // Sequential anchor-order accumulation keeps the blend deterministic.
    for (patch, &(ar, ac)) in patches.iter().zip(&grid.anchors) {
        for c in 0..CHANNELS {
            for pr in 0..grid.patch_h {
                for pc in 0..grid.patch_w {
                    let idx = out.index(c, ar + pr, ac + pc);
                    let v = patch.get(c, pr, pc);
                    counts[idx] += 1;
                    let n = counts[idx] as f64;
                    let m = out.data()[idx];
                    out.data_mut()[idx] = m + (v - m) / n;
                }
            }
        }
    }
    debug_assert!(counts.iter().all(|&n| n >= 1));
    Ok(out)
}
