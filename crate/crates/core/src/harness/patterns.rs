//! Synthetic stimuli for the desk-scale experiments.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Result};
use crate::rbm::BinaryPattern;
use crate::rng::ChainRng;

const DIGITS: [[&str; 8]; 10] = [
    ["..####..", ".#....#.", "#......#", "#......#", "#......#", "#......#", ".#....#.", "..####.."],
    ["....#...", "...##...", "..#.#...", "....#...", "....#...", "....#...", "....#...", "..#####."],
    ["..####..", ".#....#.", "......#.", ".....#..", "....#...", "...#....", "..#.....", ".######."],
    [".#####..", "......#.", "......#.", "..####..", "......#.", "......#.", "......#.", ".#####.."],
    [".#...#..", ".#...#..", ".#...#..", ".######.", ".....#..", ".....#..", ".....#..", ".....#.."],
    [".######.", ".#......", ".#......", ".#####..", "......#.", "......#.", ".#....#.", "..####.."],
    ["..####..", ".#......", ".#......", ".#####..", ".#....#.", ".#....#.", ".#....#.", "..####.."],
    [".######.", "......#.", ".....#..", "....#...", "...#....", "...#....", "...#....", "...#...."],
    ["..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", ".#....#.", ".#....#.", "..####.."],
    ["..####..", ".#....#.", ".#....#.", "..#####.", "......#.", "......#.", "......#.", "..####.."],
];

/// 8×8 prototype of digit `d` as gray levels (0 or 255), row-major.
pub fn digit_prototype(d: usize) -> Result<Vec<u8>> {
    ensure!(d < 10, "digit {d} out of range");
    Ok(DIGITS[d].iter().flat_map(|row| row.bytes().map(|c| if c == b'#' { 255 } else { 0 })).collect())
}

/// A handwritten-like variant of the centred prototype: random stroke
/// intensity, random thickening to the right, a rare one-pixel horizontal
/// shift and a few flipped background pixels.
pub fn noisy_digit(d: usize, rng: &mut ChainRng) -> Result<Vec<u8>> {
    let proto = digit_prototype(d)?;
    let u = rng.uniform();
    let dx: i32 = if u < 0.1 { -1 } else if u < 0.2 { 1 } else { 0 };
    let thick = rng.uniform() * 0.5;
    let mut out = vec![0u8; 64];
    for r in 0..8i32 {
        for c in 0..8i32 {
            let sc = c - dx;
            if (0..8).contains(&sc) && proto[(r * 8 + sc) as usize] > 0 {
                out[(r * 8 + c) as usize] = (160.0 + 95.0 * rng.uniform()) as u8;
                if c + 1 < 8 && rng.uniform() < thick {
                    let j = (r * 8 + c + 1) as usize;
                    out[j] = out[j].max((100.0 + 100.0 * rng.uniform()) as u8);
                }
            }
        }
    }
    for _ in 0..2 {
        let i = rng.index(64);
        out[i] = if out[i] > 0 { 0 } else { (80.0 * rng.uniform()) as u8 };
    }
    Ok(out)
}

/// `n` variants of digit `d`.
pub fn digit_pool(d: usize, n: usize, rng: &mut ChainRng) -> Result<Vec<Vec<u8>>> {
    (0..n).map(|_| noisy_digit(d, rng)).collect()
}

/// Box-averages a `w`×`h` gray image down to `ow`×`oh`.
pub fn downsample_gray(img: &[u8], w: usize, h: usize, ow: usize, oh: usize) -> Result<Vec<u8>> {
    ensure!(img.len() == w * h, "image has {} pixels, expected {w}x{h}", img.len());
    ensure!(ow >= 1 && oh >= 1 && ow <= w && oh <= h, "cannot downsample {w}x{h} to {ow}x{oh}");
    let mut out = Vec::with_capacity(ow * oh);
    for r in 0..oh {
        let (r0, r1) = (r * h / oh, (r + 1) * h / oh);
        for c in 0..ow {
            let (c0, c1) = (c * w / ow, (c + 1) * w / ow);
            let mut sum = 0u32;
            for y in r0..r1 {
                for x in c0..c1 {
                    sum += img[y * w + x] as u32;
                }
            }
            let n = ((r1 - r0) * (c1 - c0)) as u32;
            out.push(((sum + n / 2) / n) as u8);
        }
    }
    Ok(out)
}

pub const AUDIO_CHANNELS: usize = 77;
pub const AUDIO_AFFERENTS: usize = 10;
pub const AUDIO_INPUTS: usize = AUDIO_CHANNELS * AUDIO_AFFERENTS;

/// Spectro-temporal rate pattern of an "utterance": two formant bands at
/// class-specific channels that glide in opposite directions for the two
/// classes over `frames` frames, with per-trial jitter of band position and
/// per-afferent rate. Returns one rate vector (Hz) per frame; afferents of a
/// channel are contiguous.
pub fn auditory_trial(class: usize, frames: usize, rng: &mut ChainRng) -> Result<Vec<Vec<f64>>> {
    ensure!(class < 2, "auditory class {class} out of range");
    ensure!(frames >= 2, "need >= 2 frames");
    let half_width = 5.0;
    let (starts, glide) = if class == 0 { ([14.0, 44.0], 8.0) } else { ([30.0, 62.0], -8.0) };
    let shift = 6.0 * (rng.uniform() - 0.5);
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let phase = f as f64 / (frames - 1) as f64;
        let mut rates = vec![1.0; AUDIO_INPUTS];
        for start in starts {
            let centre = start + glide * phase + shift;
            for ch in 0..AUDIO_CHANNELS {
                let d = (ch as f64 - centre) / half_width;
                if d.abs() < 1.0 {
                    let level = 1.0 - d * d;
                    for a in 0..AUDIO_AFFERENTS {
                        let r = &mut rates[ch * AUDIO_AFFERENTS + a];
                        *r = f64::max(*r, 1.0 + 40.0 * level * (0.5 + rng.uniform()));
                    }
                }
            }
        }
        out.push(rates);
    }
    Ok(out)
}

/// 4×4 pattern with one lit pixel per row, at column `cols[r]`.
pub fn stroke(cols: [usize; 4]) -> BinaryPattern {
    let mut b = vec![0u8; 16];
    for (r, &c) in cols.iter().enumerate() {
        b[r * 4 + c.min(3)] = 1;
    }
    BinaryPattern { bits: b }
}

pub const TRAIN_STROKES: [[usize; 4]; 3] = [[1, 1, 1, 1], [2, 2, 2, 2], [1, 1, 2, 2]];

/// Three training strokes and `n_test` perturbations of them: test pattern
/// `i` is training stroke `i mod 3` with one or two rows moved to the
/// other inner column.
pub fn stroke_dataset(n_test: usize, rng: &mut ChainRng) -> (Vec<BinaryPattern>, Vec<BinaryPattern>) {
    let train = TRAIN_STROKES.iter().map(|&c| stroke(c)).collect();
    let test = (0..n_test)
        .map(|n| {
            let mut c = TRAIN_STROKES[n % 3];
            let k = 1 + rng.index(2);
            for _ in 0..k {
                let r = rng.index(4);
                c[r] = 3 - c[r];
            }
            stroke(c)
        })
        .collect();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_have_expected_shape() {
        for d in 0..10 {
            let p = digit_prototype(d).unwrap();
            assert_eq!(p.len(), 64);
            assert!(p.iter().filter(|&&g| g > 0).count() >= 8);
        }
        assert!(digit_prototype(10).is_err());
        let mut rng = ChainRng::seed_from_u64(1);
        let a = noisy_digit(1, &mut rng).unwrap();
        let b = noisy_digit(1, &mut rng).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn auditory_classes_glide_in_opposite_directions() {
        let mut rng = ChainRng::seed_from_u64(2);
        let up = auditory_trial(0, 5, &mut rng).unwrap();
        let down = auditory_trial(1, 5, &mut rng).unwrap();
        let centre = |r: &[f64]| {
            let w: f64 = r.iter().map(|v| v - 1.0).sum();
            r.iter().enumerate().map(|(i, v)| (i / AUDIO_AFFERENTS) as f64 * (v - 1.0)).sum::<f64>() / w
        };
        assert!(centre(&up[0]) < centre(&up[4]));
        assert!(centre(&down[0]) > centre(&down[4]));
        assert!(centre(&up[0]) + 5.0 < centre(&down[0]));
        assert_eq!(up[0].len(), 770);
    }

    #[test]
    fn downsampling_averages_blocks() {
        let img: Vec<u8> = (0..16).map(|i| if i % 4 < 2 { 200 } else { 0 }).collect();
        assert_eq!(downsample_gray(&img, 4, 4, 2, 2).unwrap(), vec![200, 0, 200, 0]);
        let odd: Vec<u8> = (0..28 * 28).map(|i| (i % 251) as u8).collect();
        let d = downsample_gray(&odd, 28, 28, 8, 8).unwrap();
        assert_eq!(d.len(), 64);
        assert!(downsample_gray(&odd, 28, 27, 8, 8).is_err());
        assert!(downsample_gray(&img, 4, 4, 5, 2).is_err());
    }

    #[test]
    fn strokes_stay_in_inner_columns() {
        let mut rng = ChainRng::seed_from_u64(3);
        let (train, test) = stroke_dataset(20, &mut rng);
        assert_eq!(train.len(), 3);
        for p in train.iter().chain(&test) {
            assert_eq!(p.bits.iter().filter(|&&b| b == 1).count(), 4);
            for r in 0..4 {
                assert_eq!(p.bits[r * 4] + p.bits[r * 4 + 3], 0);
            }
        }
    }
}
