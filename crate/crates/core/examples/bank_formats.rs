//! Converts a bank between the binary and JSON formats and shows that the
//! content hash survives the round trip.
//!
//!     cargo run --example bank_formats

use masterkey::filterbank::{load_bank, save_bank, BankFormat};
use masterkey::masterkeys::get_masters;

fn main() -> masterkey::Result<()> {
    let dir = std::env::temp_dir().join("masterkey-formats");
    std::fs::create_dir_all(&dir).map_err(|e| masterkey::Error::InvalidArgument(e.to_string()))?;
    let bank = get_masters().into_bank();
    let bin = dir.join("masters.mkfb");
    let json = dir.join("masters.json");

    save_bank(&bank, &bin, BankFormat::Binary)?;
    save_bank(&load_bank(&bin, BankFormat::Binary)?, &json, BankFormat::Json)?;
    let back = load_bank(&json, BankFormat::Json)?;
    println!("original  {}", bank.content_hash());
    println!("via json  {}", back.content_hash());
    println!("files in {}", dir.display());
    Ok(())
}
