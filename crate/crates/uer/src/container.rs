//! Little-endian binary container for parameter checkpoints and memory
//! buffer snapshots.
//!
//! Layout:
//!
//! ```text
//! magic      8 bytes  "UEROCL01"
//! count      u32      number of sections
//! section*   tag [u8; 4], length u64, payload
//! ```
//!
//! Checkpoints hold one `META` section (`u32` layer count, `u32` class
//! count, then one `u64` label per predictor row) followed by a `TNSR`
//! section per tensor: `u32` layer index, `u8` role (0 weight, 1 bias),
//! `u64` rows, `u64` cols and the row-major `f64` values. Extractor layers
//! use indices `0..L`; the predictor is layer `L`.
//!
//! Buffer snapshots hold a `BUFH` section (`u64` capacity, `u64` seen,
//! `u64` item count) followed by one `SMPL` section per stored sample:
//! `u64` stream position, `u64` label, `u64` width and the `f64` inputs.

use std::fs;
use std::path::Path;

use uer_core::{
    DenseMatrix, DenseVector, FeatureExtractor, LayerParams, MemoryBuffer, PredictorParams,
    StoredSample,
};

use crate::error::IoError;

pub const MAGIC: &[u8; 8] = b"UEROCL01";

const META: [u8; 4] = *b"META";
const TNSR: [u8; 4] = *b"TNSR";
const BUFH: [u8; 4] = *b"BUFH";
const SMPL: [u8; 4] = *b"SMPL";

/// A tagged chunk of the container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub tag: [u8; 4],
    pub payload: Vec<u8>,
}

pub fn encode(sections: &[Section]) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(12 + sections.iter().map(|s| 12 + s.payload.len()).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for s in sections {
        out.extend_from_slice(&s.tag);
        out.extend_from_slice(&(s.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&s.payload);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Section>, IoError> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != MAGIC {
        return Err(IoError::Container("missing UEROCL01 magic".into()));
    }
    let count = r.u32()?;
    let mut sections = Vec::with_capacity(count.min(1 << 16) as usize);
    for _ in 0..count {
        let tag: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        let len = r.u64()? as usize;
        sections.push(Section {
            tag,
            payload: r.take(len)?.to_vec(),
        });
    }
    if !r.is_done() {
        return Err(IoError::Container(
            "trailing bytes after last section".into(),
        ));
    }
    Ok(sections)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| IoError::Container("truncated container".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, IoError> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| IoError::Container("tensor too large".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn tensor(layer: u32, role: u8, rows: usize, cols: usize, data: &[f64]) -> Section {
    let mut p = Vec::with_capacity(21 + data.len() * 8);
    p.extend_from_slice(&layer.to_le_bytes());
    p.push(role);
    p.extend_from_slice(&(rows as u64).to_le_bytes());
    p.extend_from_slice(&(cols as u64).to_le_bytes());
    put_f64s(&mut p, data);
    Section {
        tag: TNSR,
        payload: p,
    }
}

/// Extractor and predictor parameters with the label of each predictor row.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub extractor: FeatureExtractor,
    pub predictor: PredictorParams,
    pub classes: Vec<usize>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let layers = self.extractor.layers();
        let mut meta = Vec::new();
        meta.extend_from_slice(&(layers.len() as u32).to_le_bytes());
        meta.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for &c in &self.classes {
            meta.extend_from_slice(&(c as u64).to_le_bytes());
        }
        let mut sections = vec![Section {
            tag: META,
            payload: meta,
        }];
        for (i, l) in layers.iter().enumerate() {
            sections.push(tensor(
                i as u32,
                0,
                l.weight.rows(),
                l.weight.cols(),
                l.weight.as_slice(),
            ));
            sections.push(tensor(i as u32, 1, l.bias.len(), 1, l.bias.as_slice()));
        }
        let w = self.predictor.weight();
        let pred = layers.len() as u32;
        sections.push(tensor(pred, 0, w.rows(), w.cols(), w.as_slice()));
        sections.push(tensor(
            pred,
            1,
            self.predictor.num_classes(),
            1,
            self.predictor.bias().as_slice(),
        ));
        encode(&sections)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IoError> {
        let sections = decode(bytes)?;
        let (meta, rest) = sections
            .split_first()
            .filter(|(m, _)| m.tag == META)
            .ok_or_else(|| IoError::Container("checkpoint must start with META".into()))?;
        let mut r = Reader::new(&meta.payload);
        let n_layers = r.u32()? as usize;
        let n_classes = r.u32()? as usize;
        let classes = (0..n_classes)
            .map(|_| r.u64().map(|c| c as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if rest.len() != 2 * (n_layers + 1) {
            return Err(IoError::Container(format!(
                "expected {} tensors for {n_layers} layers, found {}",
                2 * (n_layers + 1),
                rest.len()
            )));
        }
        let mut pairs = Vec::with_capacity(n_layers + 1);
        for (k, chunk) in rest.chunks(2).enumerate() {
            let (wi, w) = read_tensor(&chunk[0], k, 0)?;
            let (_, b) = read_tensor(&chunk[1], k, 1)?;
            debug_assert_eq!(wi, k);
            pairs.push((w, DenseVector::from_vec(b.as_slice().to_vec())?));
        }
        let (pw, pb) = pairs.pop().expect("predictor tensors");
        if pb.len() != n_classes {
            return Err(IoError::Container(
                "predictor rows disagree with META class count".into(),
            ));
        }
        let layers = pairs
            .into_iter()
            .map(|(w, b)| LayerParams::new(w, b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            extractor: FeatureExtractor::from_layers(layers)?,
            predictor: PredictorParams::from_parts(pw, pb)?,
            classes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        fs::write(path, self.to_bytes()).map_err(|e| IoError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_bytes(&fs::read(path).map_err(|e| IoError::io(path, e))?)
    }
}

fn read_tensor(s: &Section, layer: usize, role: u8) -> Result<(usize, DenseMatrix), IoError> {
    if s.tag != TNSR {
        return Err(IoError::Container(format!(
            "expected TNSR section, found {:?}",
            s.tag
        )));
    }
    let mut r = Reader::new(&s.payload);
    let idx = r.u32()? as usize;
    let got_role = r.u8()?;
    if idx != layer || got_role != role {
        return Err(IoError::Container(format!(
            "tensor out of order: layer {idx} role {got_role}, expected layer {layer} role {role}"
        )));
    }
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let data = r.f64s(
        rows.checked_mul(cols)
            .ok_or_else(|| IoError::Container("tensor too large".into()))?,
    )?;
    if !r.is_done() {
        return Err(IoError::Container(
            "tensor payload has trailing bytes".into(),
        ));
    }
    Ok((idx, DenseMatrix::from_vec(rows, cols, data)?))
}

pub fn buffer_to_bytes(buf: &MemoryBuffer) -> Vec<u8> {
    let mut head = Vec::with_capacity(24);
    head.extend_from_slice(&(buf.capacity() as u64).to_le_bytes());
    head.extend_from_slice(&buf.seen().to_le_bytes());
    head.extend_from_slice(&(buf.len() as u64).to_le_bytes());
    let mut sections = vec![Section {
        tag: BUFH,
        payload: head,
    }];
    for s in buf.items() {
        let mut p = Vec::with_capacity(24 + s.x.len() * 8);
        p.extend_from_slice(&s.stream_position.to_le_bytes());
        p.extend_from_slice(&(s.y as u64).to_le_bytes());
        p.extend_from_slice(&(s.x.len() as u64).to_le_bytes());
        put_f64s(&mut p, s.x.as_slice());
        sections.push(Section {
            tag: SMPL,
            payload: p,
        });
    }
    encode(&sections)
}

pub fn buffer_from_bytes(bytes: &[u8]) -> Result<MemoryBuffer, IoError> {
    let sections = decode(bytes)?;
    let (head, rest) = sections
        .split_first()
        .filter(|(h, _)| h.tag == BUFH)
        .ok_or_else(|| IoError::Container("buffer snapshot must start with BUFH".into()))?;
    let mut r = Reader::new(&head.payload);
    let capacity = r.u64()? as usize;
    let seen = r.u64()?;
    let count = r.u64()? as usize;
    if rest.len() != count {
        return Err(IoError::Container(format!(
            "BUFH announces {count} samples, found {}",
            rest.len()
        )));
    }
    let mut items = Vec::with_capacity(count);
    for s in rest {
        if s.tag != SMPL {
            return Err(IoError::Container(format!(
                "expected SMPL section, found {:?}",
                s.tag
            )));
        }
        let mut r = Reader::new(&s.payload);
        let stream_position = r.u64()?;
        let y = r.u64()? as usize;
        let len = r.u64()? as usize;
        let x = DenseVector::from_vec(r.f64s(len)?)?;
        items.push(StoredSample {
            x,
            y,
            stream_position,
        });
    }
    Ok(MemoryBuffer::from_parts(capacity, seen, items)?)
}

pub fn save_buffer(buf: &MemoryBuffer, path: &Path) -> Result<(), IoError> {
    fs::write(path, buffer_to_bytes(buf)).map_err(|e| IoError::io(path, e))
}

pub fn load_buffer(path: &Path) -> Result<MemoryBuffer, IoError> {
    buffer_from_bytes(&fs::read(path).map_err(|e| IoError::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use uer_core::Rng;

    fn sample_checkpoint() -> Checkpoint {
        let mut rng = Rng::new(3);
        let extractor = FeatureExtractor::init(&[4, 6, 5], &mut rng).unwrap();
        let mut predictor = PredictorParams::new(5);
        predictor
            .push_class(&[0.1, -0.2, 1.0 / 3.0, f64::MIN_POSITIVE, -0.0], 0.25)
            .unwrap();
        predictor
            .push_class(&[1e300, 2.0, 3.0, 4.0, 5.0], -1e-300)
            .unwrap();
        Checkpoint {
            extractor,
            predictor,
            classes: vec![7, 2],
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let ck = sample_checkpoint();
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        let bits = |p: &PredictorParams| {
            p.weight()
                .as_slice()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back.predictor), bits(&ck.predictor));
        assert_eq!(back.classes, ck.classes);
    }

    #[test]
    fn empty_predictor_round_trips() {
        let extractor = FeatureExtractor::init(&[2, 3], &mut Rng::new(0)).unwrap();
        let ck = Checkpoint {
            extractor,
            predictor: PredictorParams::new(3),
            classes: vec![],
        };
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back.predictor.feature_dim(), 3);
        assert_eq!(back.predictor.num_classes(), 0);
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let bytes = sample_checkpoint().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }

    #[test]
    fn buffer_round_trip() {
        let mut rng = Rng::new(1);
        let mut buf = MemoryBuffer::new(4);
        buf.update(
            (1..=9).map(|i| StoredSample {
                x: DenseVector::from(&[i as f64, -(i as f64) / 7.0][..]),
                y: i % 3,
                stream_position: i as u64,
            }),
            &mut rng,
        );
        let bytes = buffer_to_bytes(&buf);
        let back = buffer_from_bytes(&bytes).unwrap();
        assert_eq!(back, buf);
        assert_eq!(buffer_to_bytes(&back), bytes);
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }
}
