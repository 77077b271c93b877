use super::{axpy, dot, Matrix, Module, Parameter, Rng};
use crate::error::{Error, Result};

/// Affine map `y = W x + b` applied to every row of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Parameter,
    pub bias: Option<Parameter>,
}

impl Linear {
    pub fn new(name: &str, input: usize, output: usize, bias: bool, rng: &mut Rng) -> Self {
        Self {
            weight: Parameter::new(format!("{name}.weight"), Matrix::xavier(output, input, rng)),
            bias: bias.then(|| Parameter::new(format!("{name}.bias"), Matrix::zeros(1, output))),
        }
    }

    pub fn from_parts(weight: Parameter, bias: Option<Parameter>) -> Result<Self> {
        if let Some(b) = &bias {
            if b.shape() != (1, weight.value.rows()) {
                return Err(Error::Shape {
                    op: "linear bias",
                    left: weight.shape(),
                    right: b.shape(),
                });
            }
        }
        Ok(Self { weight, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.rows()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "linear forward",
                left: x.shape(),
                right: self.weight.shape(),
            });
        }
        Ok(())
    }

    /// `x` is `T x input`; returns `T x output`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let w = &self.weight.value;
        let mut y = Matrix::zeros(x.rows(), self.output_dim());
        for t in 0..x.rows() {
            let xt = x.row(t);
            let yt = y.row_mut(t);
            for (o, out) in yt.iter_mut().enumerate() {
                *out = dot(w.row(o), xt);
            }
            if let Some(b) = &self.bias {
                for (out, bo) in yt.iter_mut().zip(b.value.data()) {
                    *out += bo;
                }
            }
        }
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Matrix, dy: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        if dy.rows() != x.rows() || dy.cols() != self.output_dim() {
            return Err(Error::Shape {
                op: "linear backward",
                left: dy.shape(),
                right: (x.rows(), self.output_dim()),
            });
        }
        let mut dx = Matrix::zeros(x.rows(), self.input_dim());
        for t in 0..x.rows() {
            let xt = x.row(t);
            let dyt = dy.row(t);
            for (o, &g) in dyt.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                axpy(g, xt, self.weight.grad.row_mut(o));
                axpy(g, self.weight.value.row(o), dx.row_mut(t));
            }
            if let Some(b) = &mut self.bias {
                for (gb, g) in b.grad.data_mut().iter_mut().zip(dyt) {
                    *gb += g;
                }
            }
        }
        Ok(dx)
    }
}

impl Module for Linear {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut ps = vec![&self.weight];
        ps.extend(self.bias.as_ref());
        ps
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut ps = vec![&mut self.weight];
        ps.extend(self.bias.as_mut());
        ps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, seeded_rng};

    fn fixed(w: Matrix, b: Vec<f64>) -> Linear {
        let out = w.rows();
        Linear::from_parts(
            Parameter::new("w", w),
            Some(Parameter::new("b", Matrix::from_vec(1, out, b).unwrap())),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_passthrough() {
        let lin = fixed(Matrix::identity(3), vec![0.0; 3]);
        let x = Matrix::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        assert_eq!(lin.forward(&x).unwrap(), x);
    }

    #[test]
    fn hand_arithmetic() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let lin = fixed(w, vec![0.0, 0.0, 1.0]);
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(lin.forward(&x).unwrap().row(0), &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut rng = seeded_rng(0);
        let lin = Linear::new("l", 3, 2, true, &mut rng);
        let err = lin.forward(&Matrix::zeros(1, 4)).unwrap_err();
        assert!(err.to_string().contains("(1, 4)"), "{err}");
        assert!(err.to_string().contains("(2, 3)"), "{err}");
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let mut rng = seeded_rng(seed);
            let mut lin = Linear::new("l", 4, 3, true, &mut rng);
            for p in lin.parameters_mut() {
                p.value = Matrix::uniform(p.value.rows(), p.value.cols(), 1.0, &mut rng);
            }
            let x = Matrix::uniform(5, 4, 1.0, &mut rng);
            let target = Matrix::uniform(5, 3, 1.0, &mut rng);
            let report = grad_check(
                &mut lin,
                |lin, backprop| {
                    let y = lin.forward(&x)?;
                    // 0.5 * sum (y - target)^2 weighted per entry
                    let mut dy = y.clone();
                    let mut loss = 0.0;
                    for (d, t) in dy.data_mut().iter_mut().zip(target.data()) {
                        *d -= t;
                        loss += 0.5 * *d * *d;
                    }
                    if backprop {
                        lin.backward(&x, &dy)?;
                    }
                    Ok(loss)
                },
                1e-5,
            )
            .unwrap();
            assert!(report.max_relative_error < 1e-6, "seed {seed}: {report:?}");
        }
    }
}
