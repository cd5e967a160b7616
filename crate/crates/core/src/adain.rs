//! Per-region adaptive instance normalization.
//!
//! Rescales each channel of `content` so its mean and standard deviation
//! match those of `reference`:
//!
//! ```text
//! out[c] = mu_ref[c] + sigma_ref[c] * (content[c] - mu_content[c]) / sigma_content[c]
//! ```
//!
//! Channels whose content sigma falls below `eps` are replaced by the
//! constant `mu_ref[c]`. No clamping happens here; the hierarchical driver
//! clamps once at the very end.

use crate::error::{Error, Result};
use crate::image::{image_stats, Image, CHANNELS};

pub const DEFAULT_EPS: f64 = 1e-6;

pub fn adain(content: &Image, reference: &Image, eps: f64) -> Result<Image> {
    if eps <= 0.0 {
        return Err(Error::Config(format!("eps must be > 0, got {eps}")));
    }
    if !content.same_shape(reference) {
        return Err(Error::Shape(format!(
            "content {}x{} vs reference {}x{}",
            content.height(),
            content.width(),
            reference.height(),
            reference.width()
        )));
    }
    let cs = image_stats(content);
    let rs = image_stats(reference);
    let mut out = content.clone();
    let plane = content.height() * content.width();
    for c in 0..CHANNELS {
        let slice = &mut out.data_mut()[c * plane..(c + 1) * plane];
        if cs.sigma[c] < eps {
            for v in slice.iter_mut() {
                *v = rs.mu[c];
            }
        } else {
            let scale = rs.sigma[c] / cs.sigma[c];
            let (mu_c, mu_r) = (cs.mu[c], rs.mu[c]);
            for v in slice.iter_mut() {
                *v = mu_r + scale * (*v - mu_c);
            }
        }
    }
    Ok(out)
}
