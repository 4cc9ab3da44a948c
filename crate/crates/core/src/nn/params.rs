//! Named parameter blocks shared by the optimizer, the gradient checker and
//! checkpoint serialization.

use super::Matrix;
use crate::error::{Error, Result};

pub struct BlockRef<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a [f64],
}

pub struct BlockMut<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a mut [f64],
}

impl<'a> BlockRef<'a> {
    pub fn matrix(name: String, m: &'a Matrix) -> Self {
        BlockRef {
            name,
            shape: m.shape(),
            values: m.as_slice(),
        }
    }

    pub fn vector(name: String, v: &'a [f64]) -> Self {
        BlockRef {
            name,
            shape: (v.len(), 1),
            values: v,
        }
    }
}

impl<'a> BlockMut<'a> {
    pub fn matrix(name: String, m: &'a mut Matrix) -> Self {
        BlockMut {
            name,
            shape: m.shape(),
            values: m.as_mut_slice(),
        }
    }

    pub fn vector(name: String, v: &'a mut [f64]) -> Self {
        BlockMut {
            name,
            shape: (v.len(), 1),
            values: v,
        }
    }
}

/// A model exposing its trainable parameters, and its non-trainable state
/// (batch-norm running statistics), as ordered named blocks.
pub trait Parameterized {
    fn param_blocks(&self) -> Vec<BlockRef<'_>>;
    fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_>>;

    fn buffer_blocks(&self) -> Vec<BlockRef<'_>> {
        Vec::new()
    }

    fn buffer_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        Vec::new()
    }

    fn parameter_count(&self) -> usize {
        self.param_blocks().iter().map(|b| b.values.len()).sum()
    }
}

/// A model whose train-mode loss can be differentiated with respect to its parameters.
pub trait Differentiable: Parameterized {
    fn loss(&self, inputs: &Matrix, labels: &[usize]) -> Result<f64>;
    fn loss_and_gradients(&self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradBlock {
    pub name: String,
    pub shape: (usize, usize),
    pub values: Vec<f64>,
}

/// Gradients laid out block-for-block like [`Parameterized::param_blocks`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    pub blocks: Vec<GradBlock>,
}

impl Gradients {
    pub fn push_matrix(&mut self, name: impl Into<String>, m: Matrix) {
        let shape = m.shape();
        self.blocks.push(GradBlock {
            name: name.into(),
            shape,
            values: m.as_slice().to_vec(),
        });
    }

    pub fn push_vector(&mut self, name: impl Into<String>, v: Vec<f64>) {
        self.blocks.push(GradBlock {
            name: name.into(),
            shape: (v.len(), 1),
            values: v,
        });
    }

    pub fn get(&self, name: &str) -> Option<&GradBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut GradBlock> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    /// Errors unless names and shapes line up with the model's parameter blocks.
    pub fn check_layout<P: Parameterized + ?Sized>(&self, params: &P) -> Result<()> {
        let blocks = params.param_blocks();
        if blocks.len() != self.blocks.len() {
            return Err(Error::ShapeMismatch {
                context: "gradient block count".into(),
                expected: (blocks.len(), 1),
                actual: (self.blocks.len(), 1),
            });
        }
        for (p, g) in blocks.iter().zip(&self.blocks) {
            if p.name != g.name || p.shape != g.shape {
                return Err(Error::ShapeMismatch {
                    context: format!("gradient block {} vs parameter block {}", g.name, p.name),
                    expected: p.shape,
                    actual: g.shape,
                });
            }
        }
        Ok(())
    }
}
