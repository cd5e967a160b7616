//! Synthetic color-shift simulator with known ground truth.
//!
//! Shifts are per-channel affine maps `out = a*v + b` whose gain/bias
//! fields are constant (global), piecewise-constant on a block grid, or
//! bilinearly interpolated from a small lattice. Every spec is exactly
//! invertible, which makes correction quality measurable without any
//! generative model in the loop.
//!
//! Randomness is pinned to ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! via `seed_from_u64`; uniform doubles are built from the top 53 bits of
//! each `next_u64`, so fixtures regenerate bit-identically everywhere.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};

/// Retouching-degree triple (eye enlarging, face lifting, smoothing),
/// each in 0..=3. Carried as opaque manifest metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetouchLabel(pub [u8; 3]);

impl RetouchLabel {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&d| d > 3) {
            return Err(Error::Config(format!(
                "retouch label components must lie in 0..=3, got {:?}",
                self.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftField {
    /// One (gain, bias) pair per channel for the whole image.
    GlobalAffine {
        gains: [f64; CHANNELS],
        biases: [f64; CHANNELS],
    },
    /// Per-channel (gain, bias) per cell of a rows x cols block grid,
    /// cells stored row-major.
    BlockAffine {
        rows: usize,
        cols: usize,
        gains: Vec<[f64; CHANNELS]>,
        biases: Vec<[f64; CHANNELS]>,
    },
    /// Low-resolution lattice of per-channel (gain, bias), bilinearly
    /// upsampled to the image; nodes stored row-major.
    SmoothField {
        lattice_rows: usize,
        lattice_cols: usize,
        gains: Vec<[f64; CHANNELS]>,
        biases: Vec<[f64; CHANNELS]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    #[serde(flatten)]
    pub field: ShiftField,
    pub rng_seed: u64,
    pub magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub retouch_label: Option<RetouchLabel>,
}

/// Shift family selector used when drawing random specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    GlobalAffine,
    BlockAffine { rows: usize, cols: usize },
    SmoothField { rows: usize, cols: usize },
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        let (gains, cells) = match &self.field {
            ShiftField::GlobalAffine { gains, .. } => (std::slice::from_ref(gains), 1),
            ShiftField::BlockAffine {
                rows, cols, gains, biases,
            } => {
                if *rows < 1 || *cols < 1 {
                    return Err(Error::Config("block grid dims must be >= 1".into()));
                }
                if gains.len() != rows * cols || biases.len() != rows * cols {
                    return Err(Error::Config(format!(
                        "block grid {}x{} needs {} cells, got {} gains / {} biases",
                        rows,
                        cols,
                        rows * cols,
                        gains.len(),
                        biases.len()
                    )));
                }
                (gains.as_slice(), rows * cols)
            }
            ShiftField::SmoothField {
                lattice_rows,
                lattice_cols,
                gains,
                biases,
            } => {
                if *lattice_rows < 2 || *lattice_cols < 2 {
                    return Err(Error::Config("lattice dims must be >= 2".into()));
                }
                if gains.len() != lattice_rows * lattice_cols
                    || biases.len() != lattice_rows * lattice_cols
                {
                    return Err(Error::Config(format!(
                        "lattice {}x{} needs {} nodes, got {} gains / {} biases",
                        lattice_rows,
                        lattice_cols,
                        lattice_rows * lattice_cols,
                        gains.len(),
                        biases.len()
                    )));
                }
                (gains.as_slice(), lattice_rows * lattice_cols)
            }
        };
        debug_assert!(cells >= 1);
        for g in gains {
            if g.iter().any(|&a| a <= 0.0) {
                return Err(Error::Config(format!("gains must be > 0, got {g:?}")));
            }
        }
        if let Some(label) = &self.retouch_label {
            label.validate()?;
        }
        Ok(())
    }

    /// Gain and bias at pixel (row, col) for each channel.
    fn coeffs_at(&self, img_h: usize, img_w: usize, row: usize, col: usize) -> ([f64; 3], [f64; 3]) {
        match &self.field {
            ShiftField::GlobalAffine { gains, biases } => (*gains, *biases),
            ShiftField::BlockAffine {
                rows, cols, gains, biases,
            } => {
                let br = (row * rows / img_h).min(rows - 1);
                let bc = (col * cols / img_w).min(cols - 1);
                let i = br * cols + bc;
                (gains[i], biases[i])
            }
            ShiftField::SmoothField {
                lattice_rows,
                lattice_cols,
                gains,
                biases,
            } => {
                let (r0, r1, fr) = lattice_coord(row, img_h, *lattice_rows);
                let (c0, c1, fc) = lattice_coord(col, img_w, *lattice_cols);
                let mut g = [0.0; 3];
                let mut b = [0.0; 3];
                for ch in 0..CHANNELS {
                    g[ch] = bilerp(
                        gains[r0 * lattice_cols + c0][ch],
                        gains[r0 * lattice_cols + c1][ch],
                        gains[r1 * lattice_cols + c0][ch],
                        gains[r1 * lattice_cols + c1][ch],
                        fr,
                        fc,
                    );
                    b[ch] = bilerp(
                        biases[r0 * lattice_cols + c0][ch],
                        biases[r0 * lattice_cols + c1][ch],
                        biases[r1 * lattice_cols + c0][ch],
                        biases[r1 * lattice_cols + c1][ch],
                        fr,
                        fc,
                    );
                }
                (g, b)
            }
        }
    }
}

fn lattice_coord(p: usize, len: usize, nodes: usize) -> (usize, usize, f64) {
    // Map pixel centers 0..len-1 onto lattice span 0..nodes-1.
    let t = if len <= 1 {
        0.0
    } else {
        p as f64 * (nodes - 1) as f64 / (len - 1) as f64
    };
    let lo = (t.floor() as usize).min(nodes - 2);
    (lo, lo + 1, t - lo as f64)
}

fn bilerp(v00: f64, v01: f64, v10: f64, v11: f64, fr: f64, fc: f64) -> f64 {
    let top = v00 + (v01 - v00) * fc;
    let bottom = v10 + (v11 - v10) * fc;
    top + (bottom - top) * fr
}

/// Apply the shift. Output is intentionally unclamped; values leave [0, 1]
/// only as far as the affine map sends them.
pub fn apply_shift(img: &Image, spec: &ShiftSpec) -> Result<Image> {
    spec.validate()?;
    let (h, w) = (img.height(), img.width());
    let mut out = img.clone();
    for r in 0..h {
        for col in 0..w {
            let (g, b) = spec.coeffs_at(h, w, r, col);
            for c in 0..CHANNELS {
                let v = img.get(c, r, col);
                out.set(c, r, col, g[c] * v + b[c]);
            }
        }
    }
    Ok(out)
}

/// Exact analytic inverse of `apply_shift`.
pub fn invert_shift(img: &Image, spec: &ShiftSpec) -> Result<Image> {
    spec.validate()?;
    let (h, w) = (img.height(), img.width());
    let mut out = img.clone();
    for r in 0..h {
        for col in 0..w {
            let (g, b) = spec.coeffs_at(h, w, r, col);
            for c in 0..CHANNELS {
                let v = img.get(c, r, col);
                out.set(c, r, col, (v - b[c]) / g[c]);
            }
        }
    }
    Ok(out)
}

/// Uniform double in [lo, hi) from the pinned generator.
fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Draw a random shift spec. Gains are uniform in
/// [1 - magnitude/2, 1 + magnitude/2], biases in [-0.2*magnitude, 0.2*magnitude].
/// Draw order: all gains (cell-major, channel inner), then all biases.
pub fn random_spec(kind: ShiftKind, rng_seed: u64, magnitude: f64) -> Result<ShiftSpec> {
    if !(magnitude > 0.0 && magnitude <= 1.0) {
        return Err(Error::Config(format!(
            "magnitude must lie in (0, 1], got {magnitude}"
        )));
    }
    let cells = match kind {
        ShiftKind::GlobalAffine => 1,
        ShiftKind::BlockAffine { rows, cols } => {
            if rows < 1 || cols < 1 {
                return Err(Error::Config("block grid dims must be >= 1".into()));
            }
            rows * cols
        }
        ShiftKind::SmoothField { rows, cols } => {
            if rows < 2 || cols < 2 {
                return Err(Error::Config("lattice dims must be >= 2".into()));
            }
            rows * cols
        }
    };
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let (glo, ghi) = (1.0 - 0.5 * magnitude, 1.0 + 0.5 * magnitude);
    let (blo, bhi) = (-0.2 * magnitude, 0.2 * magnitude);
    let mut gains = Vec::with_capacity(cells);
    for _ in 0..cells {
        let mut g = [0.0; 3];
        for v in &mut g {
            *v = uniform(&mut rng, glo, ghi);
        }
        gains.push(g);
    }
    let mut biases = Vec::with_capacity(cells);
    for _ in 0..cells {
        let mut b = [0.0; 3];
        for v in &mut b {
            *v = uniform(&mut rng, blo, bhi);
        }
        biases.push(b);
    }
    let field = match kind {
        ShiftKind::GlobalAffine => ShiftField::GlobalAffine {
            gains: gains[0],
            biases: biases[0],
        },
        ShiftKind::BlockAffine { rows, cols } => ShiftField::BlockAffine {
            rows,
            cols,
            gains,
            biases,
        },
        ShiftKind::SmoothField { rows, cols } => ShiftField::SmoothField {
            lattice_rows: rows,
            lattice_cols: cols,
            gains,
            biases,
        },
    };
    Ok(ShiftSpec {
        field,
        rng_seed,
        magnitude,
        retouch_label: None,
    })
}

/// Deterministic procedural reference image: a smooth random field with a
/// little high-frequency texture, kept away from the [0, 1] borders so
/// moderate shifts stay in range.
pub fn synthetic_reference(height: usize, width: usize, rng_seed: u64) -> Result<Image> {
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed ^ 0x9E37_79B9_7F4A_7C15);
    let nodes_r = 6;
    let nodes_c = 6;
    let mut lattice = vec![[0.0; CHANNELS]; nodes_r * nodes_c];
    for node in &mut lattice {
        for v in node.iter_mut() {
            *v = uniform(&mut rng, 0.15, 0.85);
        }
    }
    let mut img = Image::zeros(height, width)?;
    for r in 0..height {
        for col in 0..width {
            let (r0, r1, fr) = lattice_coord(r, height, nodes_r);
            let (c0, c1, fc) = lattice_coord(col, width, nodes_c);
            for c in 0..CHANNELS {
                let base = bilerp(
                    lattice[r0 * nodes_c + c0][c],
                    lattice[r0 * nodes_c + c1][c],
                    lattice[r1 * nodes_c + c0][c],
                    lattice[r1 * nodes_c + c1][c],
                    fr,
                    fc,
                );
                let t = (r as f64 * 0.83 + col as f64 * 1.29 + c as f64 * 0.41
                    + rng_seed as f64 * 0.017)
                    .sin();
                img.set(c, r, col, (base + 0.05 * t).clamp(0.02, 0.98));
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spec_is_identity() {
        let img = synthetic_reference(8, 8, 1).unwrap();
        let spec = ShiftSpec {
            field: ShiftField::GlobalAffine {
                gains: [1.0; 3],
                biases: [0.0; 3],
            },
            rng_seed: 0,
            magnitude: 1.0,
            retouch_label: None,
        };
        let out = apply_shift(&img, &spec).unwrap();
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn global_affine_definition() {
        let img = synthetic_reference(4, 4, 2).unwrap();
        let spec = ShiftSpec {
            field: ShiftField::GlobalAffine {
                gains: [2.0; 3],
                biases: [0.1; 3],
            },
            rng_seed: 0,
            magnitude: 1.0,
            retouch_label: None,
        };
        let out = apply_shift(&img, &spec).unwrap();
        for (o, i) in out.data().iter().zip(img.data()) {
            assert_eq!(*o, 2.0 * *i + 0.1);
        }
    }

    #[test]
    fn block_assignment_corners() {
        let img = synthetic_reference(4, 4, 3).unwrap();
        let mut gains = vec![[1.0; 3]; 4];
        let mut biases = vec![[0.0; 3]; 4];
        gains[0] = [2.0; 3]; // block (0,0)
        biases[3] = [0.5; 3]; // block (1,1)
        let spec = ShiftSpec {
            field: ShiftField::BlockAffine {
                rows: 2,
                cols: 2,
                gains,
                biases,
            },
            rng_seed: 0,
            magnitude: 1.0,
            retouch_label: None,
        };
        let out = apply_shift(&img, &spec).unwrap();
        assert_eq!(out.get(0, 0, 0), 2.0 * img.get(0, 0, 0));
        assert_eq!(out.get(0, 3, 3), img.get(0, 3, 3) + 0.5);
    }

    #[test]
    fn analytic_inverse_round_trip() {
        let img = synthetic_reference(16, 12, 4).unwrap();
        for kind in [
            ShiftKind::GlobalAffine,
            ShiftKind::BlockAffine { rows: 3, cols: 2 },
            ShiftKind::SmoothField { rows: 4, cols: 4 },
        ] {
            let spec = random_spec(kind, 99, 0.8).unwrap();
            let shifted = apply_shift(&img, &spec).unwrap();
            let back = invert_shift(&shifted, &spec).unwrap();
            for (a, b) in back.data().iter().zip(img.data()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_spec() {
        let a = random_spec(ShiftKind::SmoothField { rows: 4, cols: 4 }, 7, 0.5).unwrap();
        let b = random_spec(ShiftKind::SmoothField { rows: 4, cols: 4 }, 7, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        for s in 0u64..100 {
            let a = random_spec(ShiftKind::GlobalAffine, 2 * s, 0.5).unwrap();
            let b = random_spec(ShiftKind::GlobalAffine, 2 * s + 1, 0.5).unwrap();
            assert_ne!(a.field, b.field, "seed pair {s}");
        }
    }

    #[test]
    fn magnitude_bounds_respected() {
        let spec = random_spec(ShiftKind::GlobalAffine, 5, 0.01).unwrap();
        if let ShiftField::GlobalAffine { gains, biases } = spec.field {
            for c in 0..3 {
                assert!((gains[c] - 1.0).abs() <= 0.005);
                assert!(biases[c].abs() <= 0.002);
            }
        } else {
            unreachable!();
        }
        assert!(random_spec(ShiftKind::GlobalAffine, 5, 0.0).is_err());
        assert!(random_spec(ShiftKind::GlobalAffine, 5, 1.5).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = random_spec(ShiftKind::BlockAffine { rows: 2, cols: 3 }, 11, 0.4).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ShiftSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn non_positive_gain_rejected() {
        let spec = ShiftSpec {
            field: ShiftField::GlobalAffine {
                gains: [1.0, 0.0, 1.0],
                biases: [0.0; 3],
            },
            rng_seed: 0,
            magnitude: 0.5,
            retouch_label: None,
        };
        let img = synthetic_reference(4, 4, 0).unwrap();
        assert!(matches!(apply_shift(&img, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn retouch_label_validation() {
        assert!(RetouchLabel([1, 0, 3]).validate().is_ok());
        assert!(RetouchLabel([1, 4, 0]).validate().is_err());
    }
}
