//! A small dense numeric kernel with hand-written backward passes.

mod dropout;
mod gradcheck;
mod linear;
mod lstm;
mod matrix;
mod optim;

pub use dropout::{apply_mask, dropout_mask};
pub use gradcheck::{grad_check, grad_check_with_floor, GradCheckReport};
pub use linear::Linear;
pub use lstm::{BiLstm, BiLstmRun, LstmCell, LstmRun, LstmStepCache};
pub use matrix::{log_sum_exp, sigmoid, Matrix};
pub(crate) use matrix::{axpy, dot};
pub use optim::{clip_grad_norm, Optimizer, OptimizerState};

use rand::SeedableRng;

/// The generator used for every stochastic decision in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a path of counters (epoch, step, ...) so that any
/// point of a run can be re-entered without replaying earlier draws.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base;
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A trainable tensor and its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }
}

/// Anything that owns trainable parameters, listed in a fixed order.
pub trait Module {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}
