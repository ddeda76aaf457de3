//! Named reference bases: binary, thermometer, segmented, and the
//! precomputed glitch-optimized vectors for 8-bit converters.

use crate::error::{Error, Result};
use crate::model::Basis;

/// Pure binary weighting: `N` switches `1, 2, 4, ...`.
pub fn binary(bit_depth: u32) -> Result<Basis> {
    if bit_depth == 0 {
        return Err(Error::InvalidConfig("binary basis needs depth >= 1".into()));
    }
    Basis::new((0..bit_depth).map(|i| 1 << i).collect(), bit_depth)
}

/// Thermometer (unary) weighting: `2^N - 1` unit switches.
pub fn thermometer(bit_depth: u32) -> Result<Basis> {
    if bit_depth == 0 {
        return Err(Error::InvalidConfig(
            "thermometer basis needs depth >= 1".into(),
        ));
    }
    Basis::new(vec![1; (1usize << bit_depth) - 1], bit_depth)
}

/// Segmented weighting `kT+mB`: binary low bits `1..2^(m-1)` plus `2^k - 1`
/// unary cells of weight `2^m`, for an `N = k + m` bit converter.
pub fn segmented(therm_bits: u32, binary_bits: u32) -> Result<Basis> {
    if therm_bits == 0 || binary_bits == 0 {
        return Err(Error::InvalidConfig(
            "segmentation needs at least one bit on each side".into(),
        ));
    }
    let bit_depth = therm_bits + binary_bits;
    let mut weights: Vec<u32> = (0..binary_bits).map(|i| 1 << i).collect();
    weights.extend(std::iter::repeat_n(
        1 << binary_bits,
        (1usize << therm_bits) - 1,
    ));
    Basis::new(weights, bit_depth)
}

/// Precomputed glitch-optimized 8-bit bases, available at lengths 9 through
/// 13. All sum to 255 and give full coverage.
pub fn reference_optimized(basis_len: usize) -> Option<Basis> {
    let weights: &[u32] = match basis_len {
        9 => &[1, 2, 4, 8, 16, 31, 43, 69, 81],
        10 => &[1, 2, 4, 8, 16, 21, 31, 39, 62, 71],
        11 => &[1, 2, 4, 8, 13, 18, 26, 30, 38, 54, 61],
        12 => &[1, 2, 4, 8, 11, 16, 20, 25, 27, 35, 48, 58],
        13 => &[1, 2, 4, 7, 9, 15, 16, 19, 22, 26, 38, 42, 54],
        _ => return None,
    };
    Some(Basis::new(weights.to_vec(), 8).expect("reference bases are valid"))
}

/// Parses a preset name: `"<n>B"` (binary), `"<n>T"` (thermometer),
/// `"<k>T+<m>B"` (segmented), or `"opt<l>"` (optimized 8-bit reference).
pub fn parse(name: &str) -> Result<Basis> {
    let trimmed = name.trim();
    let upper = trimmed.to_ascii_uppercase();
    if let Some(rest) = upper.strip_prefix("OPT") {
        let l: usize = rest
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad preset name {trimmed:?}")))?;
        return reference_optimized(l).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no optimized reference basis of length {l} (have 9..=13)"
            ))
        });
    }
    if let Some((t, b)) = upper.split_once("T+") {
        let b = b.strip_suffix('B').ok_or_else(|| {
            Error::InvalidConfig(format!("bad segmented preset {trimmed:?}; want e.g. 4T+4B"))
        })?;
        let k: u32 = t
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad thermometer bits in {trimmed:?}")))?;
        let m: u32 = b
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad binary bits in {trimmed:?}")))?;
        return segmented(k, m);
    }
    if let Some(n) = upper.strip_suffix('B') {
        let n: u32 = n
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad preset name {trimmed:?}")))?;
        return binary(n);
    }
    if let Some(n) = upper.strip_suffix('T') {
        let n: u32 = n
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad preset name {trimmed:?}")))?;
        return thermometer(n);
    }
    Err(Error::InvalidConfig(format!(
        "unknown basis preset {trimmed:?}"
    )))
}
