//! Datasets: synthetic Gaussian-blob classification, IDX ingestion, and
//! the partition into client shards, shared validation set, and test set.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::Sample;
use crate::rng;
use crate::scalar::{from_f64, Scalar};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Everything a run needs: per-client shards, the shared validation set,
/// and held-out test samples. Shards are pairwise disjoint and disjoint
/// from shared/test; construction is a pure function of its inputs.
#[derive(Debug, Clone)]
pub struct DatasetBundle<S> {
    pub client_shards: Vec<Vec<Sample<S>>>,
    pub shared: Vec<Sample<S>>,
    pub test: Vec<Sample<S>>,
}

/// Generates a balanced synthetic classification task: class centers are
/// seeded points on the unit sphere, samples add isotropic Gaussian
/// noise with standard deviation `spread`.
pub fn gen_blobs<S: Scalar>(
    num_classes: usize,
    dim: usize,
    n: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<Sample<S>>> {
    if num_classes < 2 {
        return Err(Error::config("blob generation needs at least 2 classes"));
    }
    if dim == 0 {
        return Err(Error::config("blob dimension must be >= 1"));
    }
    let mut stream = rng::stream(seed, rng::TAG_DATA, 0, 0);
    let normal = StandardNormal;

    let mut centers = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        let mut c: Vec<f64> = (0..dim)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&normal, &mut stream))
            .collect();
        let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        // A zero draw is measure-zero; fall back to a unit axis.
        if norm == 0.0 {
            c[0] = 1.0;
        } else {
            for v in &mut c {
                *v /= norm;
            }
        }
        centers.push(c);
    }

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % num_classes;
        let x: Vec<S> = centers[class]
            .iter()
            .map(|&c| {
                let noise: f64 =
                    <StandardNormal as Distribution<f64>>::sample(&normal, &mut stream);
                from_f64::<S>(c + spread * noise)
            })
            .collect();
        samples.push(Sample { x, y: class });
    }
    Ok(samples)
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        CountingReader { inner, offset: 0 }
    }

    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) => Err(Error::Ingestion {
                offset: self.offset,
                message: format!("reading {what}: {e}"),
            }),
        }
    }

    fn read_u32_be(&mut self, what: &str) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.read_exact(&mut buf, what)?;
        Ok(u32::from_be_bytes(buf))
    }
}

/// Loads an IDX image/label file pair: big-endian headers, magic numbers
/// 0x00000803 (images) and 0x00000801 (labels). Pixels are scaled to
/// `[0, 1]` and flattened; labels must be 0-9.
pub fn load_idx<S: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Vec<Sample<S>>> {
    let mut images = CountingReader::new(BufReader::new(File::open(images_path)?));
    let magic = images.read_u32_be("image magic")?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Ingestion {
            offset: 0,
            message: format!("bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"),
        });
    }
    let count = images.read_u32_be("image count")? as usize;
    let rows = images.read_u32_be("image rows")? as usize;
    let cols = images.read_u32_be("image cols")? as usize;
    let pixels = rows * cols;

    let mut labels = CountingReader::new(BufReader::new(File::open(labels_path)?));
    let magic = labels.read_u32_be("label magic")?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Ingestion {
            offset: 0,
            message: format!("bad label magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"),
        });
    }
    let label_count = labels.read_u32_be("label count")? as usize;
    if label_count != count {
        return Err(Error::Ingestion {
            offset: labels.offset,
            message: format!("label count {label_count} does not match image count {count}"),
        });
    }

    let mut samples = Vec::with_capacity(count);
    let mut pixel_buf = vec![0u8; pixels];
    let mut label_buf = [0u8; 1];
    for i in 0..count {
        images.read_exact(&mut pixel_buf, "image data")?;
        labels.read_exact(&mut label_buf, "label data")?;
        let y = label_buf[0] as usize;
        if y > 9 {
            return Err(Error::Ingestion {
                offset: labels.offset - 1,
                message: format!("label {y} out of range at sample {i}"),
            });
        }
        let x: Vec<S> = pixel_buf
            .iter()
            .map(|&p| from_f64::<S>(p as f64 / 255.0))
            .collect();
        samples.push(Sample { x, y });
    }
    Ok(samples)
}

/// Shuffles a sample pool with the given seed and cuts disjoint slices:
/// `m` shards of `shard_size`, then `shared_size` validation samples,
/// then `test_size` test samples.
pub fn make_bundle<S: Scalar>(
    samples: Vec<Sample<S>>,
    m: usize,
    shard_size: usize,
    shared_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<DatasetBundle<S>> {
    let needed = m * shard_size + shared_size + test_size;
    if samples.len() < needed {
        return Err(Error::config(format!(
            "pool of {} samples cannot supply {m} shards of {shard_size} plus {shared_size} shared and {test_size} test",
            samples.len()
        )));
    }
    let mut samples = samples;
    let mut stream = rng::stream(seed, rng::TAG_DATA, 1, 0);
    samples.shuffle(&mut stream);

    let mut iter = samples.into_iter();
    let client_shards: Vec<Vec<Sample<S>>> = (0..m)
        .map(|_| iter.by_ref().take(shard_size).collect())
        .collect();
    let shared: Vec<Sample<S>> = iter.by_ref().take(shared_size).collect();
    let test: Vec<Sample<S>> = iter.by_ref().take(test_size).collect();
    Ok(DatasetBundle {
        client_shards,
        shared,
        test,
    })
}

/// Bundle construction with a separate held-out pool: shards come from
/// the training pool, while the shared validation set and the test set
/// are carved from the held-out pool. Used for file-backed datasets
/// whose training split cannot supply all three parts.
pub fn make_bundle_with_heldout<S: Scalar>(
    train: Vec<Sample<S>>,
    heldout: Vec<Sample<S>>,
    m: usize,
    shard_size: usize,
    shared_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<DatasetBundle<S>> {
    if train.len() < m * shard_size {
        return Err(Error::config(format!(
            "training pool of {} samples cannot supply {m} shards of {shard_size}",
            train.len()
        )));
    }
    if heldout.len() < shared_size + test_size {
        return Err(Error::config(format!(
            "held-out pool of {} samples cannot supply {shared_size} shared and {test_size} test",
            heldout.len()
        )));
    }
    let mut train = train;
    let mut heldout = heldout;
    let mut stream = rng::stream(seed, rng::TAG_DATA, 1, 0);
    train.shuffle(&mut stream);
    heldout.shuffle(&mut stream);

    let mut iter = train.into_iter();
    let client_shards: Vec<Vec<Sample<S>>> = (0..m)
        .map(|_| iter.by_ref().take(shard_size).collect())
        .collect();
    let mut held_iter = heldout.into_iter();
    let shared: Vec<Sample<S>> = held_iter.by_ref().take(shared_size).collect();
    let test: Vec<Sample<S>> = held_iter.by_ref().take(test_size).collect();
    Ok(DatasetBundle {
        client_shards,
        shared,
        test,
    })
}
