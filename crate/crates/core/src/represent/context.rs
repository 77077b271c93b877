//! Projection of concatenated forward/backward LM states to a smaller
//! contextual character representation.

use crate::error::{Error, Result};
use crate::nn::{Linear, Matrix, Module, Parameter, Rng};

/// `r_t = W · [h_t ; h_t^r] + b`. The only trainable part of the
/// contextual representation; the language models stay frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextProjection {
    pub linear: Linear,
}

impl ContextProjection {
    pub fn new(lm_hidden: usize, proj_dim: usize, rng: &mut Rng) -> Result<Self> {
        check_dims(lm_hidden, proj_dim)?;
        Ok(Self {
            linear: Linear::new("context", 2 * lm_hidden, proj_dim, true, rng),
        })
    }

    pub fn from_linear(linear: Linear) -> Result<Self> {
        if linear.bias.is_none() || linear.input_dim() % 2 != 0 {
            return Err(Error::Config(
                "context projection needs a bias and an even input width".into(),
            ));
        }
        check_dims(linear.input_dim() / 2, linear.output_dim())?;
        Ok(Self { linear })
    }

    pub fn lm_hidden(&self) -> usize {
        self.linear.input_dim() / 2
    }

    pub fn output_dim(&self) -> usize {
        self.linear.output_dim()
    }

    /// `[h ; h_r]`, the projection input.
    pub fn join(&self, h: &Matrix, h_r: &Matrix) -> Result<Matrix> {
        let w = self.lm_hidden();
        if h.cols() != w || h_r.cols() != w {
            return Err(Error::Shape {
                op: "contextual representation",
                left: h.shape(),
                right: h_r.shape(),
            });
        }
        if h.rows() != h_r.rows() {
            return Err(Error::LengthMismatch {
                what: "backward language model states",
                expected: h.rows(),
                got: h_r.rows(),
            });
        }
        Matrix::hconcat(&[h, h_r])
    }

    pub fn forward(&self, joined: &Matrix) -> Result<Matrix> {
        self.linear.forward(joined)
    }

    /// Accumulates `W`, `b` gradients; the input gradient is discarded
    /// because the language models are not trained here.
    pub fn backward(&mut self, joined: &Matrix, d_out: &Matrix) -> Result<()> {
        self.linear.backward(joined, d_out).map(|_| ())
    }
}

fn check_dims(lm_hidden: usize, proj_dim: usize) -> Result<()> {
    if proj_dim == 0 || proj_dim >= 2 * lm_hidden {
        return Err(Error::Config(format!(
            "projection width {proj_dim} must be positive and below 2 x {lm_hidden}"
        )));
    }
    Ok(())
}

/// Contextual representations `r_1..r_T` from both LM state sequences.
pub fn contextual_rep(h: &Matrix, h_r: &Matrix, proj: &ContextProjection) -> Result<Matrix> {
    proj.forward(&proj.join(h, h_r)?)
}

impl Module for ContextProjection {
    fn parameters(&self) -> Vec<&Parameter> {
        self.linear.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.linear.parameters_mut()
    }
}
