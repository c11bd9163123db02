//! The `.mlk` model envelope.
//!
//! ```text
//! "MLK1"             4 bytes
//! format             1 byte   0x01 binary, 0x02 text
//! tag length         u64 LE
//! type tag           ASCII
//! version            u32 LE
//! payload            format-specific fields, to end of file
//! ```
//!
//! Output is a pure function of the model. Readers refuse versions newer
//! than their own and never hand back a partially decoded model.

mod codec;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use codec::{BinaryDecoder, BinaryEncoder, Decoder, Encoder, TextDecoder, TextEncoder};

use crate::clustering::KMeansModel;
use crate::error::{Error, Result};
use crate::linear::{LinearRegressionModel, LogisticRegressionModel};
use crate::matrix::Matrix;
use crate::neural::{FfnModel, Layer};

pub const MAGIC: &[u8; 4] = b"MLK1";

/// Registered type tags with the version this build writes.
pub const MODEL_TYPES: [(&str, u32); 4] =
    [("linear_regression", 1), ("logistic_regression", 1), ("kmeans", 1), ("ffn", 1)];

pub fn writer_version(tag: &str) -> Option<u32> {
    MODEL_TYPES.iter().find(|(t, _)| *t == tag).map(|&(_, v)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Binary,
    Text,
}

impl Format {
    pub fn byte(self) -> u8 {
        match self {
            Format::Binary => 0x01,
            Format::Text => 0x02,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Format::Binary),
            0x02 => Some(Format::Text),
            _ => None,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Binary => "binary",
            Format::Text => "text",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Format::Binary),
            "text" => Ok(Format::Text),
            other => Err(Error::validation(format!("unknown model format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    LinearRegression(LinearRegressionModel),
    LogisticRegression(LogisticRegressionModel),
    KMeans(KMeansModel),
    Ffn(FfnModel),
}

impl Model {
    pub fn type_tag(&self) -> &'static str {
        match self {
            Model::LinearRegression(_) => "linear_regression",
            Model::LogisticRegression(_) => "logistic_regression",
            Model::KMeans(_) => "kmeans",
            Model::Ffn(_) => "ffn",
        }
    }

    pub fn to_bytes(&self, format: Format) -> Vec<u8> {
        let tag = self.type_tag();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(format.byte());
        out.extend_from_slice(&(tag.len() as u64).to_le_bytes());
        out.extend_from_slice(tag.as_bytes());
        out.extend_from_slice(&writer_version(tag).expect("registered tag").to_le_bytes());
        match format {
            Format::Binary => self.encode(&mut BinaryEncoder { out: &mut out }),
            Format::Text => self.encode(&mut TextEncoder { out: &mut out }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        decode_envelope(bytes)
    }

    fn encode<E: Encoder>(&self, e: &mut E) {
        match self {
            Model::LinearRegression(m) => {
                e.count("dim", m.dim());
                e.count("num_weights", m.weights().len());
                e.floats("weights", m.weights());
                e.float("lambda", m.lambda());
            }
            Model::LogisticRegression(m) => {
                e.count("dim", m.dim());
                e.count("num_weights", m.weights().len());
                e.floats("weights", m.weights());
                e.float("lambda", m.lambda());
                e.float("decision_threshold", m.decision_threshold());
            }
            Model::KMeans(m) => {
                let c = m.centroids();
                e.count("k", c.rows());
                e.count("dim", c.cols());
                e.floats("centroids", c.as_slice());
            }
            Model::Ffn(m) => {
                e.count("input_dim", m.input_dim());
                e.count("num_layers", m.layers().len());
                for layer in m.layers() {
                    e.byte("layer_type", layer_type_byte(layer));
                    if let Layer::Linear { weights, bias } = layer {
                        e.count("out", weights.rows());
                        e.count("in", weights.cols());
                        e.floats("weights", weights.as_slice());
                        e.floats("bias", bias);
                    }
                }
            }
        }
    }
}

impl From<LinearRegressionModel> for Model {
    fn from(m: LinearRegressionModel) -> Self {
        Model::LinearRegression(m)
    }
}

impl From<LogisticRegressionModel> for Model {
    fn from(m: LogisticRegressionModel) -> Self {
        Model::LogisticRegression(m)
    }
}

impl From<KMeansModel> for Model {
    fn from(m: KMeansModel) -> Self {
        Model::KMeans(m)
    }
}

impl From<FfnModel> for Model {
    fn from(m: FfnModel) -> Self {
        Model::Ffn(m)
    }
}

const LAYER_LINEAR: u8 = 1;
const LAYER_RELU: u8 = 2;
const LAYER_LOG_SOFTMAX: u8 = 3;

fn layer_type_byte(layer: &Layer) -> u8 {
    match layer {
        Layer::Linear { .. } => LAYER_LINEAR,
        Layer::Relu => LAYER_RELU,
        Layer::LogSoftmax => LAYER_LOG_SOFTMAX,
    }
}

pub fn save_model<W: Write>(model: &Model, sink: &mut W, format: Format) -> Result<()> {
    sink.write_all(&model.to_bytes(format))?;
    sink.flush()?;
    Ok(())
}

/// Reads a whole envelope and returns its type tag with the decoded model.
pub fn load_model<R: Read>(mut source: R) -> Result<(String, Model)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let model = decode_envelope(&bytes)?;
    Ok((model.type_tag().to_string(), model))
}

fn corrupt(offset: usize, reason: impl Into<String>) -> Error {
    Error::CorruptModel { offset, reason: reason.into() }
}

fn decode_envelope(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::NotAModel);
    }
    let mut pos = MAGIC.len();
    let format_byte = *bytes.get(pos).ok_or_else(|| corrupt(pos, "truncated before format byte"))?;
    let format = Format::from_byte(format_byte)
        .ok_or_else(|| corrupt(pos, format!("unknown format byte 0x{format_byte:02x}")))?;
    pos += 1;

    let len_bytes = bytes.get(pos..pos + 8).ok_or_else(|| corrupt(pos, "truncated in type tag length"))?;
    let tag_len = u64::from_le_bytes(len_bytes.try_into().expect("8 bytes"));
    pos += 8;
    let tag_bytes = usize::try_from(tag_len)
        .ok()
        .and_then(|n| bytes.get(pos..pos.checked_add(n)?))
        .ok_or_else(|| corrupt(pos, "truncated in type tag"))?;
    if !tag_bytes.is_ascii() {
        return Err(corrupt(pos, "type tag is not ASCII"));
    }
    let tag = std::str::from_utf8(tag_bytes).expect("ascii");
    let supported = writer_version(tag).ok_or_else(|| Error::UnknownModelType(tag.to_string()))?;
    pos += tag_bytes.len();

    let version_bytes = bytes.get(pos..pos + 4).ok_or_else(|| corrupt(pos, "truncated in version"))?;
    let version = u32::from_le_bytes(version_bytes.try_into().expect("4 bytes"));
    if version == 0 {
        return Err(corrupt(pos, "version 0 is invalid"));
    }
    if version > supported {
        return Err(Error::NewerVersion { tag: tag.to_string(), found: version, supported });
    }
    pos += 4;

    let payload = &bytes[pos..];
    match format {
        Format::Binary => decode_payload(tag, &mut BinaryDecoder::new(payload, pos)),
        Format::Text => decode_payload(tag, &mut TextDecoder::new(payload, pos)?),
    }
}

fn decode_payload<D: Decoder>(tag: &str, d: &mut D) -> Result<Model> {
    let model = match tag {
        "linear_regression" => {
            let weights = read_weights(d)?;
            let lambda = d.float("lambda")?;
            let at = d.offset();
            Model::LinearRegression(
                LinearRegressionModel::from_parts(weights, lambda).map_err(|e| corrupt(at, e.to_string()))?,
            )
        }
        "logistic_regression" => {
            let weights = read_weights(d)?;
            let lambda = d.float("lambda")?;
            let threshold = d.float("decision_threshold")?;
            let at = d.offset();
            Model::LogisticRegression(
                LogisticRegressionModel::from_parts(weights, lambda, threshold)
                    .map_err(|e| corrupt(at, e.to_string()))?,
            )
        }
        "kmeans" => {
            let k = d.count("k")?;
            let dim = d.count("dim")?;
            let at = d.offset();
            let len = k.checked_mul(dim).ok_or_else(|| corrupt(at, "centroid count overflows"))?;
            let values = d.floats("centroids", len)?;
            let at = d.offset();
            let centroids = Matrix::from_vec(k, dim, values).map_err(|e| corrupt(at, e.to_string()))?;
            Model::KMeans(KMeansModel::new(centroids).map_err(|e| corrupt(at, e.to_string()))?)
        }
        "ffn" => Model::Ffn(read_ffn(d)?),
        other => unreachable!("tag {other} passed the registry check"),
    };
    d.finish()?;
    Ok(model)
}

fn read_weights<D: Decoder>(d: &mut D) -> Result<Vec<f64>> {
    let dim = d.count("dim")?;
    let at = d.offset();
    let n = d.count("num_weights")?;
    if Some(n) != dim.checked_add(1) {
        return Err(corrupt(at, format!("num_weights {n} does not match dim {dim}")));
    }
    d.floats("weights", n)
}

fn read_ffn<D: Decoder>(d: &mut D) -> Result<FfnModel> {
    let input_dim = d.count("input_dim")?;
    let num_layers = d.count("num_layers")?;
    let mut layers = Vec::new();
    for _ in 0..num_layers {
        let at = d.offset();
        let layer = match d.byte("layer_type")? {
            LAYER_LINEAR => {
                let out = d.count("out")?;
                let inp = d.count("in")?;
                let at = d.offset();
                let len = out.checked_mul(inp).ok_or_else(|| corrupt(at, "layer size overflows"))?;
                let w = d.floats("weights", len)?;
                let b = d.floats("bias", out)?;
                Layer::Linear {
                    weights: Matrix::from_vec(out, inp, w).map_err(|e| corrupt(at, e.to_string()))?,
                    bias: b,
                }
            }
            LAYER_RELU => Layer::Relu,
            LAYER_LOG_SOFTMAX => Layer::LogSoftmax,
            other => return Err(corrupt(at, format!("unknown layer type {other}"))),
        };
        layers.push(layer);
    }
    let at = d.offset();
    FfnModel::new(input_dim, layers).map_err(|e| corrupt(at, e.to_string()))
}
