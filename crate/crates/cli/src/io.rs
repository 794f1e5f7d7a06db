//! File formats: `QNNC` containers and line-per-number vectors.

use std::fs;
use std::path::Path;

use qnn_codec::deepcodec::{decompress_network, network_to_raw, Mode, NetworkContainer, QuantizedNetwork};

use crate::CliError;

pub fn read_container(path: &Path) -> Result<NetworkContainer, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(NetworkContainer::from_bytes(&bytes)?)
}

pub fn write_container(path: &Path, c: &NetworkContainer) -> Result<(), CliError> {
    fs::write(path, c.to_bytes()).map_err(|e| CliError::io(path, e))
}

/// Reads an uncompressed network file (a raw container).
pub fn read_network(path: &Path) -> Result<QuantizedNetwork, CliError> {
    let c = read_container(path)?;
    if c.mode() != Mode::Raw {
        return Err(CliError::invalid(format!(
            "{}: expected an uncompressed network file",
            path.display()
        )));
    }
    Ok(decompress_network(&c)?)
}

pub fn write_network(path: &Path, net: &QuantizedNetwork) -> Result<(), CliError> {
    write_container(path, &network_to_raw(net)?)
}

/// One decimal number per line; blank lines are ignored.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: f64 = l
                .trim()
                .parse()
                .map_err(|_| CliError::invalid(format!("line {}: not a number: {:?}", i + 1, l.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::invalid(format!("line {}: value is not finite", i + 1)))
            }
        })
        .collect()
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_vector(&text)
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}
