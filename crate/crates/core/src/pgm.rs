//! 8-bit PGM exports for quick inspection.

use std::fs;
use std::path::Path;

use crate::dwf::DigitalWavefrontSet;
use crate::error::Result;
use crate::field::Field;

/// Binary PGM with min/max windowing. Row 0 of the file is the last grid row,
/// so `x2` points up in viewers.
pub fn encode_pgm(field: &Field) -> Vec<u8> {
    let (lo, hi) = field.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", field.width, field.height).into_bytes();
    for i2 in (0..field.height).rev() {
        for i1 in 0..field.width {
            let v = ((field.get(i1, i2) - lo) / span * 255.0).round().clamp(0.0, 255.0);
            out.push(v as u8);
        }
    }
    out
}

pub fn write_pgm(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_pgm(field))?)
}

/// Red, green and blue planes of an orientation-hue overlay: each marked pixel
/// is coloured by the mean orientation of its bins (doubled-angle average),
/// unmarked pixels are black.
pub fn dwf_overlay(dwf: &DigitalWavefrontSet) -> [Field; 3] {
    let (w, h, bins) = (dwf.width(), dwf.height(), dwf.bins());
    let mut planes = [Field::zeros(w, h), Field::zeros(w, h), Field::zeros(w, h)];
    for i2 in 0..h {
        for i1 in 0..w {
            let (mut c, mut s, mut mass) = (0.0, 0.0, 0.0);
            for (k, &v) in dwf.pixel(i1, i2).iter().enumerate() {
                let a = 2.0 * crate::dwf::bin_angle(k, bins);
                c += v * a.cos();
                s += v * a.sin();
                mass += v;
            }
            if mass <= 0.0 {
                continue;
            }
            let hue = (s.atan2(c).rem_euclid(std::f64::consts::TAU)) / std::f64::consts::TAU;
            let rgb = hue_to_rgb(hue);
            let strength = mass.min(1.0);
            for (p, v) in planes.iter_mut().zip(rgb) {
                p.set(i1, i2, v * strength);
            }
        }
    }
    planes
}

fn hue_to_rgb(hue: f64) -> [f64; 3] {
    let h6 = hue * 6.0;
    let x = 1.0 - (h6 % 2.0 - 1.0).abs();
    match h6 as u32 {
        0 => [1.0, x, 0.0],
        1 => [x, 1.0, 0.0],
        2 => [0.0, 1.0, x],
        3 => [0.0, x, 1.0],
        4 => [x, 0.0, 1.0],
        _ => [1.0, 0.0, x],
    }
}

/// Write `<stem>_r.pgm`, `<stem>_g.pgm`, `<stem>_b.pgm`.
pub fn write_dwf_overlay(dwf: &DigitalWavefrontSet, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    let planes = dwf_overlay(dwf);
    for (suffix, plane) in ["r", "g", "b"].iter().zip(planes.iter()) {
        let name = format!("{}_{}.pgm", stem.file_name().and_then(|s| s.to_str()).unwrap_or("dwf"), suffix);
        let path = stem.with_file_name(name);
        fs::write(path, encode_unit_pgm(plane))?;
    }
    Ok(())
}

/// PGM of a field already scaled to `[0, 1]`.
fn encode_unit_pgm(field: &Field) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width, field.height).into_bytes();
    for i2 in (0..field.height).rev() {
        for i1 in 0..field.width {
            out.push((field.get(i1, i2) * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}
