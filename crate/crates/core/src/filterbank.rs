//! Filters, filter banks and their on-disk formats.
//!
//! Two interchangeable formats are supported:
//!
//! * **MKFB v1** (binary, little-endian): the 4-byte magic `MKFB`, then
//!   `u32 version`, `u32 k`, `u32 count`, `u32 meta_flag`; when `meta_flag`
//!   is 1 a provenance table of `count` `(u32 layer, u32 channel)` records
//!   follows; then `count * k * k` `f32` values, filter-major and row-major
//!   within each filter.
//! * **JSON manifest**: `{"filters":[{"channel":..,"layer":..,"values":[..]}],"k":..,"version":1}`
//!   with sorted keys and shortest round-trip rendering of each `f32`.
//!
//! Values are held as `f64` in memory and written as `f32`. The writer omits
//! the provenance table when it is implicit (every entry at layer 0 with
//! channel equal to its position), which is also what the reader assumes
//! when the table is absent.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MKFB_MAGIC: [u8; 4] = *b"MKFB";
pub const MKFB_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// A square `k x k` spatial kernel, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Filter {
    k: usize,
    values: Vec<f64>,
}

impl Filter {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || k % 2 == 0 {
            return Err(Error::InvalidFilter(format!("k must be odd and positive, got {k}")));
        }
        if values.len() != k * k {
            return Err(Error::InvalidFilter(format!(
                "expected {} values for k={k}, got {}",
                k * k,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index: 0 });
        }
        Ok(Filter { k, values })
    }

    pub fn from_f32(k: usize, values: &[f32]) -> Result<Self> {
        Filter::new(k, values.iter().map(|&v| v as f64).collect())
    }

    /// Builds a filter from `f(row, col)` evaluated on the grid.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(k * k);
        for row in 0..k {
            for col in 0..k {
                values.push(f(row, col));
            }
        }
        Filter::new(k, values)
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Filter::new(k, vec![0.0; k * k])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.k + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Filter {
        let k = self.k;
        let values = (0..k * k).map(|i| self.values[(i % k) * k + i / k]).collect();
        Filter { k, values }
    }

    /// Rounds every value to the nearest `f32`, i.e. what survives a save.
    pub fn quantized(&self) -> Filter {
        Filter {
            k: self.k,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }
}

impl fmt::Debug for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Filter(k={})", self.k)?;
        for row in self.values.chunks(self.k) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:+.4}")).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BankEntry {
    pub layer: u32,
    pub channel: u32,
    pub filter: Filter,
}

/// An ordered collection of same-sized filters keyed by `(layer, channel)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    k: usize,
    entries: Vec<BankEntry>,
    keys: HashSet<(u32, u32)>,
}

impl FilterBank {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k % 2 == 0 {
            return Err(Error::InvalidFilter(format!("k must be odd and positive, got {k}")));
        }
        Ok(FilterBank {
            k,
            entries: Vec::new(),
            keys: HashSet::new(),
        })
    }

    /// Bank with implicit provenance: layer 0, channel = position.
    pub fn from_filters(k: usize, filters: impl IntoIterator<Item = Filter>) -> Result<Self> {
        let mut bank = FilterBank::new(k)?;
        for (i, filter) in filters.into_iter().enumerate() {
            bank.push(0, i as u32, filter)?;
        }
        Ok(bank)
    }

    pub fn push(&mut self, layer: u32, channel: u32, filter: Filter) -> Result<()> {
        if filter.k() != self.k {
            return Err(Error::KMismatch {
                expected: self.k,
                found: filter.k(),
            });
        }
        if !self.keys.insert((layer, channel)) {
            return Err(Error::DuplicateEntry { layer, channel });
        }
        self.entries.push(BankEntry {
            layer,
            channel,
            filter,
        });
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn filter(&self, index: usize) -> &Filter {
        &self.entries[index].filter
    }

    pub fn filters(&self) -> impl ExactSizeIterator<Item = &Filter> + '_ {
        self.entries.iter().map(|e| &e.filter)
    }

    /// New bank holding the selected entries, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<FilterBank> {
        let mut out = FilterBank::new(self.k)?;
        for &i in indices {
            let entry = self.entries.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                count: self.len(),
            })?;
            out.push(entry.layer, entry.channel, entry.filter.clone())?;
        }
        Ok(out)
    }

    /// Same provenance, values rounded to `f32`.
    pub fn quantized(&self) -> FilterBank {
        FilterBank {
            k: self.k,
            entries: self
                .entries
                .iter()
                .map(|e| BankEntry {
                    layer: e.layer,
                    channel: e.channel,
                    filter: e.filter.quantized(),
                })
                .collect(),
            keys: self.keys.clone(),
        }
    }

    fn has_implicit_provenance(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(i, e)| e.layer == 0 && e.channel as usize == i)
    }

    /// SHA-256 of the canonical MKFB encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_mkfb_bytes()))
    }

    pub fn to_mkfb_bytes(&self) -> Vec<u8> {
        let meta = !self.has_implicit_provenance();
        let kk = self.k * self.k;
        let mut out = Vec::with_capacity(
            HEADER_LEN + if meta { 8 * self.len() } else { 0 } + 4 * kk * self.len(),
        );
        out.extend_from_slice(&MKFB_MAGIC);
        out.extend_from_slice(&MKFB_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(meta as u32).to_le_bytes());
        if meta {
            for e in &self.entries {
                out.extend_from_slice(&e.layer.to_le_bytes());
                out.extend_from_slice(&e.channel.to_le_bytes());
            }
        }
        for e in &self.entries {
            for &v in e.filter.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_mkfb_bytes(bytes: &[u8]) -> Result<FilterBank> {
        let mut reader = ByteReader::new(bytes);
        let magic = reader.take::<4>()?;
        if magic != MKFB_MAGIC {
            return Err(Error::BadMagic {
                expected: MKFB_MAGIC,
                found: magic,
            });
        }
        let version = reader.u32()?;
        if version != MKFB_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let k = reader.u32()? as usize;
        let count = reader.u32()? as usize;
        let meta = match reader.u32()? {
            0 => false,
            1 => true,
            other => return Err(Error::parse("MKFB header", format!("meta_flag {other}"))),
        };
        let kk = k
            .checked_mul(k)
            .ok_or_else(|| Error::parse("MKFB header", "k too large"))?;
        let needed = count
            .checked_mul(if meta { 8 } else { 0 } + 4 * kk)
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::parse("MKFB header", "size overflow"))?;
        if bytes.len() < needed {
            return Err(Error::TruncatedFile {
                needed,
                found: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(Error::parse(
                "MKFB payload",
                format!("{} trailing bytes", bytes.len() - needed),
            ));
        }
        let provenance: Vec<(u32, u32)> = if meta {
            (0..count)
                .map(|_| Ok((reader.u32()?, reader.u32()?)))
                .collect::<Result<_>>()?
        } else {
            (0..count).map(|i| (0, i as u32)).collect()
        };
        let mut bank = FilterBank::new(k)?;
        for (index, (layer, channel)) in provenance.into_iter().enumerate() {
            let mut values = Vec::with_capacity(kk);
            for _ in 0..kk {
                let v = f32::from_le_bytes(reader.take::<4>()?);
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { index });
                }
                values.push(v as f64);
            }
            bank.push(layer, channel, Filter { k, values })?;
        }
        Ok(bank)
    }

    pub fn to_json_string(&self) -> String {
        let manifest = JsonBank {
            filters: self
                .entries
                .iter()
                .map(|e| JsonFilter {
                    channel: e.channel,
                    layer: e.layer,
                    values: e.filter.to_f32(),
                })
                .collect(),
            k: self.k as u32,
            version: MKFB_VERSION,
        };
        serde_json::to_string(&manifest).expect("manifest serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<FilterBank> {
        let manifest: JsonBank =
            serde_json::from_str(text).map_err(|e| Error::parse("JSON manifest", e))?;
        if manifest.version != MKFB_VERSION {
            return Err(Error::UnsupportedVersion(manifest.version));
        }
        let k = manifest.k as usize;
        let mut bank = FilterBank::new(k)?;
        for (index, f) in manifest.filters.into_iter().enumerate() {
            if f.values.len() != k * k {
                return Err(Error::parse(
                    "JSON manifest",
                    format!("filter {index} has {} values, expected {}", f.values.len(), k * k),
                ));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { index });
            }
            bank.push(f.layer, f.channel, Filter::from_f32(k, &f.values)?)?;
        }
        Ok(bank)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBank {
    filters: Vec<JsonFilter>,
    k: u32,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonFilter {
    channel: u32,
    layer: u32,
    values: Vec<f32>,
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::TruncatedFile {
            needed: end,
            found: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take::<4>()?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BankFormat {
    Binary,
    Json,
}

impl BankFormat {
    /// `.json` selects the manifest format, anything else MKFB.
    pub fn from_path(path: &Path) -> BankFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => BankFormat::Json,
            _ => BankFormat::Binary,
        }
    }
}

pub fn load_bank(path: impl AsRef<Path>, format: BankFormat) -> Result<FilterBank> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        BankFormat::Binary => FilterBank::from_mkfb_bytes(&bytes),
        BankFormat::Json => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse("JSON manifest", e))?;
            FilterBank::from_json_str(text)
        }
    }
}

pub fn save_bank(bank: &FilterBank, path: impl AsRef<Path>, format: BankFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        BankFormat::Binary => bank.to_mkfb_bytes(),
        BankFormat::Json => bank.to_json_string().into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BankStats {
    pub count: usize,
    pub mean_norm: f64,
    pub mean_abs_mean: f64,
    pub per_layer_counts: BTreeMap<u32, usize>,
}

pub fn bank_stats(bank: &FilterBank) -> BankStats {
    let mut per_layer_counts = BTreeMap::new();
    let mut norm_sum = 0.0;
    let mut abs_mean_sum = 0.0;
    for e in bank.entries() {
        *per_layer_counts.entry(e.layer).or_insert(0) += 1;
        norm_sum += e.filter.norm();
        abs_mean_sum += e.filter.mean().abs();
    }
    let count = bank.len();
    let (mean_norm, mean_abs_mean) = if count == 0 {
        (0.0, 0.0)
    } else {
        (norm_sum / count as f64, abs_mean_sum / count as f64)
    };
    BankStats {
        count,
        mean_norm,
        mean_abs_mean,
        per_layer_counts,
    }
}
