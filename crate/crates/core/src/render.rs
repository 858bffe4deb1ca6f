//! Heatmaps of filters as binary PPM images.
//!
//! Each value maps to `t = clamp(value / vmax, -1, 1)` and then to a
//! blue-white-red colour: negative values fade to blue, positive to red.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::filterbank::{Filter, FilterBank};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VmaxMode {
    PerFilterAbsMax,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderConfig {
    pub cell_pixels: usize,
    pub vmax_mode: VmaxMode,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            cell_pixels: 32,
            vmax_mode: VmaxMode::PerFilterAbsMax,
        }
    }
}

pub fn color(value: f64, vmax: f64) -> [u8; 3] {
    let t = if vmax > 0.0 { (value / vmax).clamp(-1.0, 1.0) } else { 0.0 };
    let red = if t >= 0.0 { 255.0 } else { (255.0 * (1.0 + t)).round() };
    let blue = if t <= 0.0 { 255.0 } else { (255.0 * (1.0 - t)).round() };
    let green = (255.0 * (1.0 - t.abs())).round();
    [red as u8, green as u8, blue as u8]
}

fn abs_max(filter: &Filter) -> f64 {
    filter.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// P6 image of one filter, `k * cell_pixels` pixels square.
pub fn render_filter(filter: &Filter, vmax: f64, cell_pixels: usize) -> Vec<u8> {
    let k = filter.k();
    let side = k * cell_pixels;
    let header = format!("P6\n{side} {side}\n255\n");
    let mut out = Vec::with_capacity(header.len() + 3 * side * side);
    out.extend_from_slice(header.as_bytes());
    for py in 0..side {
        for px in 0..side {
            out.extend_from_slice(&color(filter.get(py / cell_pixels, px / cell_pixels), vmax));
        }
    }
    out
}

pub fn file_name(index: usize, layer: u32, channel: u32) -> String {
    format!("filter_{index:04}_l{layer}_c{channel}.ppm")
}

/// Writes one image per filter into `out_dir` and returns the paths in bank
/// order.
pub fn render_bank(bank: &FilterBank, config: &RenderConfig, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    if config.cell_pixels == 0 {
        return Err(Error::InvalidArgument("cell_pixels must be at least 1".into()));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let global = bank.filters().map(abs_max).fold(0.0, f64::max);
    let mut paths = Vec::with_capacity(bank.len());
    for (i, e) in bank.entries().iter().enumerate() {
        let vmax = match config.vmax_mode {
            VmaxMode::PerFilterAbsMax => abs_max(&e.filter),
            VmaxMode::Global => global,
        };
        let path = out_dir.join(file_name(i, e.layer, e.channel));
        fs::write(&path, render_filter(&e.filter, vmax, config.cell_pixels)).map_err(|err| Error::io(&path, err))?;
        paths.push(path);
    }
    Ok(paths)
}
