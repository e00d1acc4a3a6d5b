//! Parameter files: an 8-byte magic, a little-endian u64 header length, a
//! JSON header, then every parameter as little-endian f64 in header order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NeuralError;

const MAGIC: &[u8; 8] = b"NEDITNN1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    /// Architecture tag, e.g. `"propensity-mlp"` or `"clickbait-bigru"`.
    pub kind: String,
    pub shapes: Vec<Vec<usize>>,
    pub seed: u64,
    /// Architecture and training hyperparameters; free-form per kind.
    pub config: serde_json::Value,
}

pub fn write_params<W: Write>(
    mut out: W,
    kind: &str,
    seed: u64,
    config: serde_json::Value,
    params: &[&Tensor],
) -> Result<(), NeuralError> {
    let header = ModelHeader {
        kind: kind.to_string(),
        shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
        seed,
        config,
    };
    let json = serde_json::to_vec(&header).map_err(|e| NeuralError::Format(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for p in params {
        for x in p.data() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_params<R: Read>(mut input: R) -> Result<(ModelHeader, Vec<Tensor>), NeuralError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NeuralError::Format("not a model file".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: ModelHeader =
        serde_json::from_slice(&json).map_err(|e| NeuralError::Format(e.to_string()))?;
    let mut tensors = Vec::with_capacity(header.shapes.len());
    let mut buf = [0u8; 8];
    for shape in &header.shapes {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push(Tensor::from_vec(shape, data)?);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(NeuralError::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok((header, tensors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_bad_magic() {
        let a = Tensor::from_vec(&[2, 2], vec![1.0, -0.0, f64::MIN_POSITIVE, 3.5]).unwrap();
        let b = Tensor::from_vec(&[1], vec![7.25]).unwrap();
        let mut buf = Vec::new();
        write_params(&mut buf, "test", 9, serde_json::json!({"h": 4}), &[&a, &b]).unwrap();
        let (h, t) = read_params(buf.as_slice()).unwrap();
        assert_eq!(h.kind, "test");
        assert_eq!(h.seed, 9);
        assert_eq!(h.config["h"], 4);
        assert_eq!(t, vec![a, b]);

        buf[0] = b'X';
        assert!(matches!(read_params(buf.as_slice()), Err(NeuralError::Format(_))));
    }
}
