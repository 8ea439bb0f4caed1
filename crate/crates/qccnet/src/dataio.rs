//! IDX dataset ingestion (MNIST-family), preprocessing, per-circuit
//! partitioning, and seeded batching.

use crate::autograd::TrainingBatch;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const NUM_CLASSES: usize = 10;

/// Images as flat pixel rows scaled to [0,1]; labels in [0, 9].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

fn read_u32_be(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated IDX header: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Big-endian IDX image tensor (magic 0x00000803); pixels scaled by /255.
pub fn load_idx_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_u32_be(&mut f)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"
        )));
    }
    let n = read_u32_be(&mut f)? as usize;
    let rows = read_u32_be(&mut f)? as usize;
    let cols = read_u32_be(&mut f)? as usize;
    let per = rows * cols;
    let mut bytes = vec![0u8; n * per];
    f.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated IDX image body: {e}")))?;
    Ok(bytes
        .chunks_exact(per.max(1))
        .take(n)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect())
}

/// Big-endian IDX label vector (magic 0x00000801); raw bytes passed through.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_u32_be(&mut f)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"
        )));
    }
    let n = read_u32_be(&mut f)? as usize;
    let mut bytes = vec![0u8; n];
    f.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated IDX label body: {e}")))?;
    Ok(bytes)
}

/// Writer counterpart for tests and synthetic fixtures.
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    let per = rows * cols;
    if images.iter().any(|img| img.len() != per) {
        return Err(Error::Shape(format!("images must be {rows}x{cols}")));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    f.write_all(&(images.len() as u32).to_be_bytes())?;
    f.write_all(&(rows as u32).to_be_bytes())?;
    f.write_all(&(cols as u32).to_be_bytes())?;
    for img in images {
        f.write_all(img)?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)?;
    f.flush()?;
    Ok(())
}

/// Load and cross-validate an image/label pair; labels must be valid classes.
pub fn load_dataset(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = load_idx_images(images_path)?;
    let labels = load_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
        return Err(Error::Format(format!("label {bad} outside [0, {}]", NUM_CLASSES - 1)));
    }
    Ok(Dataset { images, labels })
}

/// 784 → 1024: original values then zeros.
pub fn zero_pad(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != 784 {
        return Err(Error::Shape(format!("zero_pad expects 784 values, got {}", x.len())));
    }
    let mut out = x.to_vec();
    out.resize(1024, 0.0);
    Ok(out)
}

/// Mutually exclusive per-circuit index sets of equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitPartition {
    pub circuits: Vec<Vec<usize>>,
}

impl CircuitPartition {
    pub fn d(&self) -> usize {
        self.circuits.len()
    }

    pub fn per_circuit(&self) -> usize {
        self.circuits.first().map_or(0, |c| c.len())
    }
}

/// Seeded shuffle of 0..n−1; the first d·s indices split into d consecutive
/// chunks of s.
pub fn partition_per_circuit<R: Rng>(
    n: usize,
    d: usize,
    s: usize,
    rng: &mut R,
) -> Result<CircuitPartition> {
    if d == 0 || s == 0 {
        return Err(Error::Config("partition needs d ≥ 1 and s ≥ 1".into()));
    }
    if d * s > n {
        return Err(Error::Config(format!("d·s = {} exceeds dataset size {n}", d * s)));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let circuits = idx[..d * s].chunks_exact(s).map(|c| c.to_vec()).collect();
    Ok(CircuitPartition { circuits })
}

pub fn one_hot(label: u8) -> Vec<f64> {
    let mut v = vec![0.0; NUM_CLASSES];
    v[label as usize] = 1.0;
    v
}

/// One epoch of minibatches: each circuit's index stream is shuffled
/// independently (circuit order, same rng), then batch t bundles the t-th
/// B-chunk of every circuit. The trailing remainder is dropped. Targets are
/// one-hot class vectors.
pub fn make_batches<R: Rng>(
    partition: &CircuitPartition,
    data: &Dataset,
    b: usize,
    epoch_rng: &mut R,
) -> Result<Vec<TrainingBatch>> {
    let s = partition.per_circuit();
    if b == 0 || b > s {
        return Err(Error::Config(format!("batch size {b} vs per-circuit samples {s}")));
    }
    let shuffled: Vec<Vec<usize>> = partition
        .circuits
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.shuffle(epoch_rng);
            c
        })
        .collect();
    let n_batches = s / b;
    let mut out = Vec::with_capacity(n_batches);
    for t in 0..n_batches {
        let mut inputs = Vec::with_capacity(partition.d());
        let mut targets = Vec::with_capacity(partition.d());
        for circuit in &shuffled {
            let chunk = &circuit[t * b..(t + 1) * b];
            inputs.push(chunk.iter().map(|&i| data.images[i].clone()).collect());
            targets.push(chunk.iter().map(|&i| one_hot(data.labels[i])).collect());
        }
        out.push(TrainingBatch { inputs, targets });
    }
    Ok(out)
}
