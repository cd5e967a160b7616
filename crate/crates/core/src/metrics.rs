//! Image-quality metrics: PSNR, SSIM, channel-moment distance, and a
//! seam-discontinuity score for quantifying patch-boundary artifacts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::image::{image_stats, Image, CHANNELS};

/// PSNR values are capped here so reports stay totally ordered.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all samples of all channels.
/// Returns the 99 dB cap when MSE < 1e-12.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse < 1e-12 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Rec.601 luminance plane.
fn luminance(img: &Image) -> Vec<f64> {
    let n = img.height() * img.width();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    (0..n)
        .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
        .collect()
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Horizontal then vertical pass with the normalized 1D kernel; output is
/// the valid region only, (h - 10) x (w - 10).
fn separable_filter(plane: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let vw = w - SSIM_WINDOW + 1;
    let vh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; h * vw];
    for r in 0..h {
        for c in 0..vw {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * plane[r * w + c + k];
            }
            horiz[r * vw + c] = acc;
        }
    }
    let mut out = vec![0.0; vh * vw];
    for r in 0..vh {
        for c in 0..vw {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(r + k) * vw + c];
            }
            out[r * vw + c] = acc;
        }
    }
    out
}

/// Mean SSIM over the luminance plane. 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, peak 1.0, valid windows only.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let la = luminance(a);
    let lb = luminance(b);
    let kernel = gaussian_kernel();
    let sq = |p: &[f64]| -> Vec<f64> { p.iter().map(|v| v * v).collect() };
    let prod: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();

    let mu_a = separable_filter(&la, h, w, &kernel);
    let mu_b = separable_filter(&lb, h, w, &kernel);
    let e_aa = separable_filter(&sq(&la), h, w, &kernel);
    let e_bb = separable_filter(&sq(&lb), h, w, &kernel);
    let e_ab = separable_filter(&prod, h, w, &kernel);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        sum += num / den;
    }
    Ok(sum / mu_a.len() as f64)
}

/// Per-channel absolute differences of mean and population std.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDelta {
    pub dmu: f64,
    pub dsigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatDistance {
    pub r: ChannelDelta,
    pub g: ChannelDelta,
    pub b: ChannelDelta,
}

impl StatDistance {
    pub fn channels(&self) -> [ChannelDelta; CHANNELS] {
        [self.r, self.g, self.b]
    }

    /// Worst component; the scalar used when a single number is needed.
    pub fn max_component(&self) -> f64 {
        self.channels()
            .iter()
            .flat_map(|d| [d.dmu, d.dsigma])
            .fold(0.0, f64::max)
    }
}

pub fn stat_distance(a: &Image, b: &Image) -> Result<StatDistance> {
    check_shapes(a, b)?;
    let sa = image_stats(a);
    let sb = image_stats(b);
    let delta = |c: usize| ChannelDelta {
        dmu: (sa.mu[c] - sb.mu[c]).abs(),
        dsigma: (sa.sigma[c] - sb.sigma[c]).abs(),
    };
    Ok(StatDistance {
        r: delta(0),
        g: delta(1),
        b: delta(2),
    })
}

/// Mean absolute first difference across interior patch boundaries of the
/// grid, minus the same over all other adjacent pixel pairs. Larger means
/// stronger seams; a seam-free image scores near zero.
pub fn seam_score(img: &Image, grid: &PatchGrid) -> Result<f64> {
    if img.height() != grid.img_h || img.width() != grid.img_w {
        return Err(Error::Shape(format!(
            "grid built for {}x{} but image is {}x{}",
            grid.img_h,
            grid.img_w,
            img.height(),
            img.width()
        )));
    }
    let (h, w) = (img.height(), img.width());
    // Left column index of each vertical boundary pair, and top row index
    // of each horizontal boundary pair.
    let mut vcols = vec![false; w.saturating_sub(1)];
    let mut hrows = vec![false; h.saturating_sub(1)];
    for &(ar, ac) in &grid.anchors {
        if ac > 0 {
            vcols[ac - 1] = true;
        }
        if ac + grid.patch_w < w {
            vcols[ac + grid.patch_w - 1] = true;
        }
        if ar > 0 {
            hrows[ar - 1] = true;
        }
        if ar + grid.patch_h < h {
            hrows[ar + grid.patch_h - 1] = true;
        }
    }
    let mut boundary = (0.0, 0usize);
    let mut interior = (0.0, 0usize);
    for c in 0..CHANNELS {
        for r in 0..h {
            for col in 0..w - 1 {
                let d = (img.get(c, r, col + 1) - img.get(c, r, col)).abs();
                let acc = if vcols[col] { &mut boundary } else { &mut interior };
                acc.0 += d;
                acc.1 += 1;
            }
        }
        for r in 0..h - 1 {
            for col in 0..w {
                let d = (img.get(c, r + 1, col) - img.get(c, r, col)).abs();
                let acc = if hrows[r] { &mut boundary } else { &mut interior };
                acc.0 += d;
                acc.1 += 1;
            }
        }
    }
    if boundary.1 == 0 {
        return Ok(0.0);
    }
    let mean_b = boundary.0 / boundary.1 as f64;
    let mean_i = if interior.1 == 0 {
        0.0
    } else {
        interior.0 / interior.1 as f64
    };
    Ok(mean_b - mean_i)
}

/// JSON metric report written by `evaluate`, `correct --report`, and sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ssim: Option<f64>,
    pub stat_distance: StatDistance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seam_score: Option<f64>,
}

/// Compare two images on the standard metric set. SSIM is omitted when the
/// images are smaller than its window; seam_score is included when a grid
/// is supplied.
pub fn metric_report(a: &Image, b: &Image, grid: Option<&PatchGrid>) -> Result<MetricReport> {
    let ssim_value = if a.height() >= SSIM_WINDOW && a.width() >= SSIM_WINDOW {
        Some(ssim(a, b)?)
    } else {
        None
    };
    Ok(MetricReport {
        psnr_db: psnr(a, b, 1.0)?,
        ssim: ssim_value,
        stat_distance: stat_distance(a, b)?,
        seam_score: match grid {
            Some(g) => Some(seam_score(a, g)?),
            None => None,
        },
    })
}
