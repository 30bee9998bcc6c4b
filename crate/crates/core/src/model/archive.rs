//! Weight archive format.
//!
//! ```text
//! "OFDD"                      4 bytes magic
//! version                     u16 little-endian
//! descriptor length           u32 little-endian
//! descriptor                  UTF-8 `key=value` lines
//! payload                     f64 little-endian, encoder/head/decoder,
//!                             each dense layer as row-major W then b
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, DropoutLayer, Layer, Matrix, Pathway};

use super::{Architecture, ModelKind, PathwayNetwork};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"OFDD";
pub const ARCHIVE_VERSION: u16 = 1;

pub fn save(net: &PathwayNetwork, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_archive(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<PathwayNetwork> {
    read_archive(&fs::read(path)?)
}

pub fn write_archive(net: &PathwayNetwork) -> Vec<u8> {
    let descriptor = describe(net);
    let params = net.flat_params();
    let mut out = Vec::with_capacity(10 + descriptor.len() + params.len() * 8);
    out.extend_from_slice(ARCHIVE_MAGIC);
    out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    out.extend_from_slice(&(descriptor.len() as u32).to_le_bytes());
    out.extend_from_slice(descriptor.as_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn read_archive(bytes: &[u8]) -> Result<PathwayNetwork> {
    if bytes.len() < 4 || &bytes[..4] != ARCHIVE_MAGIC {
        return Err(Error::BadMagic {
            expected: ARCHIVE_MAGIC.to_vec(),
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    let header = take(bytes, 4, 6)?;
    let version = u16::from_le_bytes([header[0], header[1]]);
    if version != ARCHIVE_VERSION {
        return Err(Error::VersionMismatch {
            expected: ARCHIVE_VERSION,
            found: version,
        });
    }
    let len = u32::from_le_bytes([header[2], header[3], header[4], header[5]]) as usize;
    let descriptor = std::str::from_utf8(take(bytes, 10, len)?)
        .map_err(|_| Error::MalformedArchive("descriptor is not UTF-8".into()))?;
    let mut net = parse_descriptor(descriptor)?;

    let payload = &bytes[10 + len..];
    let expected = net.param_count() * 8;
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedArchive(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("archive payload"));
    }
    net.set_flat_params(&params)?;
    Ok(net)
}

fn take(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    bytes.get(start..start + len).ok_or(Error::Truncated {
        expected: start + len,
        found: bytes.len(),
    })
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn describe_pathway(p: &Pathway) -> String {
    p.layers()
        .iter()
        .map(|l| match l {
            Layer::Dense(d) => format!("dense:{}:{}:{}", d.input_dim(), d.output_dim(), d.activation.name()),
            Layer::Dropout(d) => format!("dropout:{:?}", d.rate()),
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn describe(net: &PathwayNetwork) -> String {
    let arch = net.architecture();
    let mut lines = vec![
        format!("kind={}", net.kind()),
        format!("input_dim={}", arch.input_dim),
        format!("latent_dim={}", arch.latent_dim),
        format!("hidden_widths={}", join(&arch.hidden_widths)),
        format!("head_widths={}", join(&arch.head_widths)),
        format!("dropout_rate={:?}", arch.dropout_rate),
        format!("n_classes={}", arch.n_classes),
        format!("decoder_output={}", arch.decoder_output.name()),
        format!("encoder={}", describe_pathway(net.encoder())),
    ];
    if let Some(h) = net.head() {
        lines.push(format!("head={}", describe_pathway(h)));
    }
    if let Some(d) = net.decoder() {
        lines.push(format!("decoder={}", describe_pathway(d)));
    }
    lines.push(format!("params={}", net.param_count()));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedArchive(msg.into())
}

fn parse_pathway(spec: &str) -> Result<Pathway> {
    let mut layers = Vec::new();
    for item in spec.split(';').filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            ["dense", input, output, act] => {
                let input: usize = input.parse().map_err(|_| malformed(item))?;
                let output: usize = output.parse().map_err(|_| malformed(item))?;
                let act = Activation::from_name(act).ok_or_else(|| malformed(item))?;
                let layer = DenseLayer::new(Matrix::zeros(output, input), vec![0.0; output], act)?;
                layers.push(Layer::Dense(layer));
            }
            ["dropout", rate] => {
                let rate: f64 = rate.parse().map_err(|_| malformed(item))?;
                layers.push(Layer::Dropout(DropoutLayer::new(rate)?));
            }
            _ => return Err(malformed(format!("unknown layer {item:?}"))),
        }
    }
    Pathway::new(layers)
}

fn parse_widths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| malformed(format!("bad width {p:?}"))))
        .collect()
}

fn parse_descriptor(text: &str) -> Result<PathwayNetwork> {
    let mut fields = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("descriptor line {line:?}")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| malformed(format!("missing {k}")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| malformed(format!("bad {k}"))) };

    let kind: ModelKind = get("kind")?.parse().map_err(|_| malformed("bad kind"))?;
    let arch = Architecture {
        input_dim: num("input_dim")?,
        latent_dim: num("latent_dim")?,
        hidden_widths: parse_widths(get("hidden_widths")?)?,
        head_widths: parse_widths(get("head_widths")?)?,
        dropout_rate: get("dropout_rate")?.parse().map_err(|_| malformed("bad dropout_rate"))?,
        n_classes: num("n_classes")?,
        decoder_output: Activation::from_name(get("decoder_output")?).ok_or_else(|| malformed("bad decoder_output"))?,
    };
    let encoder = parse_pathway(get("encoder")?)?;
    let head = fields.get("head").map(|s| parse_pathway(s)).transpose()?;
    let decoder = fields.get("decoder").map(|s| parse_pathway(s)).transpose()?;
    let net = PathwayNetwork::from_parts(kind, arch, encoder, head, decoder)?;
    if num("params")? != net.param_count() {
        return Err(malformed("parameter count disagrees with layer list"));
    }
    Ok(net)
}
