//! Single-file checkpoints: an 8-byte magic, a little-endian u32 header
//! length, a JSON manifest of layer kinds/shapes/activations, then the raw
//! little-endian f32 blob (weights, bias, mask, then PReLU slopes when
//! present, per layer in declaration order). Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActivationKind, Layer, LayerKind, Network, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"NNDEPTH1";

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    layers: Vec<LayerMeta>,
}

#[derive(Serialize, Deserialize)]
struct LayerMeta {
    layer: LayerKind,
    activation: ActivationKind,
    weight_shape: Vec<usize>,
    neurons: usize,
    has_prelu: bool,
}

impl Network {
    pub fn save(&self, path: &Path) -> Result<()> {
        let manifest = Manifest {
            version: 1,
            layers: self
                .layers
                .iter()
                .map(|l| LayerMeta {
                    layer: l.kind,
                    activation: l.activation,
                    weight_shape: l.weights.shape().to_vec(),
                    neurons: l.neuron_count(),
                    has_prelu: l.prelu_slopes.is_some(),
                })
                .collect(),
        };
        let header = serde_json::to_vec(&manifest)?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for l in &self.layers {
            write_f32s(&mut w, l.weights.data())?;
            write_f32s(&mut w, l.bias.data())?;
            write_f32s(&mut w, l.mask.data())?;
            if let Some(s) = &l.prelu_slopes {
                write_f32s(&mut w, s.data())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Network> {
        let bad = |reason: &str| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != MAGIC {
            return Err(bad("magic mismatch"));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
        let hlen = u32::from_le_bytes(len) as usize;
        let mut header = vec![0u8; hlen];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        let manifest: Manifest =
            serde_json::from_slice(&header).map_err(|e| bad(&format!("bad manifest: {e}")))?;
        if manifest.version != 1 {
            return Err(bad(&format!("unsupported version {}", manifest.version)));
        }
        let mut layers = Vec::with_capacity(manifest.layers.len());
        for meta in &manifest.layers {
            let wn: usize = meta.weight_shape.iter().product();
            let weights = Tensor::from_vec(&meta.weight_shape, read_f32s(&mut r, wn, path)?)?;
            let bias = Tensor::from_vec(&[meta.neurons], read_f32s(&mut r, meta.neurons, path)?)?;
            let mask = Tensor::from_vec(&meta.weight_shape, read_f32s(&mut r, wn, path)?)?;
            let prelu_slopes = if meta.has_prelu {
                Some(Tensor::from_vec(
                    &[meta.neurons],
                    read_f32s(&mut r, meta.neurons, path)?,
                )?)
            } else {
                None
            };
            layers.push(Layer {
                kind: meta.layer,
                weights,
                bias,
                mask,
                activation: meta.activation,
                prelu_slopes,
            });
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(bad("trailing bytes after blob"));
        }
        Ok(Network { layers })
    }
}

fn write_f32s<W: Write>(w: &mut W, vals: &[f32]) -> Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, n: usize, path: &Path) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf).map_err(|_| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: format!("truncated blob, wanted {n} floats"),
    })?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = Network::mlp(&[3, 7, 5, 2], ActivationKind::Prelu { init_slope: 0.25 }, 0.5, 99).unwrap();
        net.save(&path).unwrap();
        let back = Network::load(&path).unwrap();
        assert_eq!(net.layers.len(), back.layers.len());
        for (a, b) in net.layers.iter().zip(back.layers.iter()) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.activation, b.activation);
            for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.bias.data().iter().zip(b.bias.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.mask.data().iter().zip(b.mask.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn magic_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NOTMAGIC____").unwrap();
        assert!(matches!(
            Network::load(&path),
            Err(Error::Checkpoint { .. })
        ));
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ckpt");
        let net = Network::mlp(&[2, 4, 2], ActivationKind::Relu, 0.0, 1).unwrap();
        net.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(
            Network::load(&path),
            Err(Error::Checkpoint { .. })
        ));
    }
}
