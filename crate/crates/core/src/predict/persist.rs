//! Versioned binary model container.
//!
//! Layout (integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes "MCML"
//! version      u32     1
//! task         u8      0 reply_time, 1 reply_length, 2 last_email
//! b_lo, b_hi   f64 x2  class boundaries
//! catalog_hash 32 bytes
//! n_features   u32
//! n_classes    u8
//! n_trees      u32
//! max_depth    u32
//! min_leaf     u32
//! bootstrap    u8
//! seed         u64
//! trees n_trees times:
//!   n_nodes u32
//!   nodes: feature i32, threshold f64, missing_left u8,
//!          left u32, right u32, n_probs u8, probs f64 x n_probs
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::model::{Hyperparams, Model};
use super::tree::{DecisionTree, Node};
use super::{ClassScheme, Task};

const MAGIC: &[u8; 4] = b"MCML";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelPersistError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic: not a model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    Corrupt(&'static str),
}

pub fn write_model<W: Write>(mut w: W, model: &Model) -> Result<(), ModelPersistError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let task = match model.task {
        Task::ReplyTime => 0u8,
        Task::ReplyLength => 1,
        Task::LastEmail => 2,
    };
    w.write_all(&[task])?;
    w.write_all(&model.scheme.b_lo.to_le_bytes())?;
    w.write_all(&model.scheme.b_hi.to_le_bytes())?;
    w.write_all(&model.catalog_hash)?;
    w.write_all(&(model.n_features as u32).to_le_bytes())?;
    w.write_all(&[model.n_classes as u8])?;
    w.write_all(&(model.trees.len() as u32).to_le_bytes())?;
    w.write_all(&(model.hyper.max_depth as u32).to_le_bytes())?;
    w.write_all(&model.hyper.min_leaf.to_le_bytes())?;
    w.write_all(&[u8::from(model.hyper.bootstrap)])?;
    w.write_all(&model.seed.to_le_bytes())?;
    for tree in &model.trees {
        w.write_all(&(tree.nodes.len() as u32).to_le_bytes())?;
        for node in &tree.nodes {
            w.write_all(&node.feature.to_le_bytes())?;
            w.write_all(&node.threshold.to_le_bytes())?;
            w.write_all(&[u8::from(node.missing_left)])?;
            w.write_all(&node.left.to_le_bytes())?;
            w.write_all(&node.right.to_le_bytes())?;
            w.write_all(&[node.probs.len() as u8])?;
            for p in &node.probs {
                w.write_all(&p.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<Model, ModelPersistError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelPersistError::BadMagic);
    }
    let version = u32_of(&mut r)?;
    if version != VERSION {
        return Err(ModelPersistError::UnsupportedVersion(version));
    }
    let task = match u8_of(&mut r)? {
        0 => Task::ReplyTime,
        1 => Task::ReplyLength,
        2 => Task::LastEmail,
        _ => return Err(ModelPersistError::Corrupt("unknown task")),
    };
    let b_lo = f64_of(&mut r)?;
    let b_hi = f64_of(&mut r)?;
    let mut catalog_hash = [0u8; 32];
    r.read_exact(&mut catalog_hash)?;
    let n_features = u32_of(&mut r)? as usize;
    let n_classes = u8_of(&mut r)? as usize;
    let n_trees = u32_of(&mut r)? as usize;
    let max_depth = u32_of(&mut r)? as usize;
    let min_leaf = u32_of(&mut r)?;
    let bootstrap = u8_of(&mut r)? != 0;
    let seed = u64_of(&mut r)?;
    if n_classes == 0 || n_classes > 8 {
        return Err(ModelPersistError::Corrupt("implausible class count"));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = u32_of(&mut r)? as usize;
        if n_nodes == 0 {
            return Err(ModelPersistError::Corrupt("tree with no nodes"));
        }
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let feature = i32_of(&mut r)?;
            let threshold = f64_of(&mut r)?;
            let missing_left = u8_of(&mut r)? != 0;
            let left = u32_of(&mut r)?;
            let right = u32_of(&mut r)?;
            let n_probs = u8_of(&mut r)? as usize;
            let mut probs = Vec::with_capacity(n_probs);
            for _ in 0..n_probs {
                probs.push(f64_of(&mut r)?);
            }
            if (left as usize) >= n_nodes && feature >= 0 {
                return Err(ModelPersistError::Corrupt("child index out of range"));
            }
            if (right as usize) >= n_nodes && feature >= 0 {
                return Err(ModelPersistError::Corrupt("child index out of range"));
            }
            nodes.push(Node {
                feature,
                threshold,
                missing_left,
                left,
                right,
                probs,
            });
        }
        trees.push(DecisionTree { nodes });
    }
    let scheme = ClassScheme { task, b_lo, b_hi };
    Ok(Model {
        task,
        scheme,
        n_classes,
        n_features,
        catalog_hash,
        hyper: Hyperparams {
            n_trees,
            max_depth,
            min_leaf,
            bootstrap,
        },
        seed,
        trees,
    })
}

fn u8_of<R: Read>(r: &mut R) -> Result<u8, ModelPersistError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn u32_of<R: Read>(r: &mut R) -> Result<u32, ModelPersistError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn i32_of<R: Read>(r: &mut R) -> Result<i32, ModelPersistError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(i32::from_le_bytes(b))
}

fn u64_of<R: Read>(r: &mut R) -> Result<u64, ModelPersistError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn f64_of<R: Read>(r: &mut R) -> Result<f64, ModelPersistError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
