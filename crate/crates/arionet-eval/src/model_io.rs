//! Classifier model serialization.
//!
//! Little-endian layout: magic "ARFM", version u32 = 1, split_seed u64,
//! test_fraction f64, classes u32, feat_dim u32, tree_count u32; per
//! tree: node_count u32, then nodes as tag u8 (0 leaf, 1 split) with
//! leaf label u32 or split feature u32 + threshold f64 + left/right u32.

use crate::forest::{DecisionTree, ForestModel, TreeNode};
use crate::EvalError;
use std::io::{Read, Write};
use std::path::Path;

pub const MODEL_MAGIC: &[u8; 4] = b"ARFM";
pub const MODEL_VERSION: u32 = 1;

/// Fitted forest plus the split settings that selected its training rows,
/// so evaluation can reproduce the exact held-out set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub forest: ForestModel,
    pub split_seed: u64,
    pub test_fraction: f64,
}

pub fn classifier_bytes(model: &ClassifierModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&model.split_seed.to_le_bytes());
    out.extend_from_slice(&model.test_fraction.to_le_bytes());
    out.extend_from_slice(&(model.forest.classes as u32).to_le_bytes());
    out.extend_from_slice(&(model.forest.feat_dim as u32).to_le_bytes());
    out.extend_from_slice(&(model.forest.trees.len() as u32).to_le_bytes());
    for tree in &model.forest.trees {
        out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
        for node in &tree.nodes {
            match node {
                TreeNode::Leaf { label } => {
                    out.push(0);
                    out.extend_from_slice(&label.to_le_bytes());
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(1);
                    out.extend_from_slice(&feature.to_le_bytes());
                    out.extend_from_slice(&threshold.to_le_bytes());
                    out.extend_from_slice(&left.to_le_bytes());
                    out.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], EvalError> {
        if self.pos + n > self.buf.len() {
            return Err(EvalError::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, EvalError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, EvalError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, EvalError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64, EvalError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn parse_classifier(bytes: &[u8]) -> Result<ClassifierModel, EvalError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MODEL_MAGIC {
        return Err(EvalError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(EvalError::UnsupportedVersion(version));
    }
    let split_seed = r.u64("split seed")?;
    let test_fraction = r.f64("test fraction")?;
    let classes = r.u32("class count")? as usize;
    let feat_dim = r.u32("feature dim")? as usize;
    let tree_count = r.u32("tree count")? as usize;
    let mut trees = Vec::with_capacity(tree_count);
    for t in 0..tree_count {
        let node_count = r.u32("node count")? as usize;
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            match r.u8("node tag")? {
                0 => nodes.push(TreeNode::Leaf {
                    label: r.u32("leaf label")?,
                }),
                1 => nodes.push(TreeNode::Split {
                    feature: r.u32("split feature")?,
                    threshold: r.f64("split threshold")?,
                    left: r.u32("left child")?,
                    right: r.u32("right child")?,
                }),
                tag => {
                    return Err(EvalError::InvalidModel(format!(
                        "tree {t}: unknown node tag {tag}"
                    )))
                }
            }
        }
        for node in &nodes {
            if let TreeNode::Split { left, right, .. } = node {
                if *left as usize >= nodes.len() || *right as usize >= nodes.len() {
                    return Err(EvalError::InvalidModel(format!(
                        "tree {t}: child index out of range"
                    )));
                }
            }
        }
        trees.push(DecisionTree { nodes });
    }
    Ok(ClassifierModel {
        forest: ForestModel {
            trees,
            classes,
            feat_dim,
        },
        split_seed,
        test_fraction,
    })
}

pub fn write_classifier(model: &ClassifierModel, path: &Path) -> Result<(), EvalError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&classifier_bytes(model))?;
    Ok(())
}

pub fn read_classifier(path: &Path) -> Result<ClassifierModel, EvalError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_classifier(&bytes)
}
