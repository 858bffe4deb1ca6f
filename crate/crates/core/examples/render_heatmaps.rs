//! Writes a PPM heatmap for each master filter.
//!
//!     cargo run --example render_heatmaps -- [out_dir]

use masterkey::masterkeys::get_masters;
use masterkey::render::{render_bank, RenderConfig};

fn main() -> masterkey::Result<()> {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "heatmaps".into());
    let paths = render_bank(get_masters().bank(), &RenderConfig::default(), &out_dir)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}
