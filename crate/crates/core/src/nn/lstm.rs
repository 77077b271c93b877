use super::{axpy, dot, sigmoid, Matrix, Module, Parameter, Rng};
use crate::error::{Error, Result};

/// One LSTM layer. Gates are stacked in `i, f, g, o` order in the `4h` rows
/// of both weight matrices and the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub w_ih: Parameter,
    pub w_hh: Parameter,
    pub bias: Parameter,
}

/// Activations of a single step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmCell {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut bias = Matrix::zeros(1, 4 * hidden);
        bias.data_mut()[hidden..2 * hidden].fill(1.0);
        Self {
            w_ih: Parameter::new(format!("{name}.w_ih"), Matrix::xavier(4 * hidden, input, rng)),
            w_hh: Parameter::new(format!("{name}.w_hh"), Matrix::xavier(4 * hidden, hidden, rng)),
            bias: Parameter::new(format!("{name}.bias"), bias),
        }
    }

    pub fn from_parts(w_ih: Parameter, w_hh: Parameter, bias: Parameter) -> Result<Self> {
        let four_h = w_hh.value.rows();
        if four_h % 4 != 0
            || w_hh.value.cols() * 4 != four_h
            || w_ih.value.rows() != four_h
            || bias.shape() != (1, four_h)
        {
            return Err(Error::Shape {
                op: "lstm parameters",
                left: w_ih.shape(),
                right: w_hh.shape(),
            });
        }
        Ok(Self { w_ih, w_hh, bias })
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.value.cols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.value.cols()
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<LstmStepCache> {
        let h = self.hidden();
        if x.len() != self.input() {
            return Err(Error::Shape {
                op: "lstm step input",
                left: (1, x.len()),
                right: self.w_ih.shape(),
            });
        }
        if h_prev.len() != h || c_prev.len() != h {
            return Err(Error::Shape {
                op: "lstm step state",
                left: (h_prev.len(), c_prev.len()),
                right: (h, h),
            });
        }
        let mut gates = self.bias.value.data().to_vec();
        for (r, gate) in gates.iter_mut().enumerate() {
            *gate += dot(self.w_ih.value.row(r), x) + dot(self.w_hh.value.row(r), h_prev);
        }
        for (k, gate) in gates.iter_mut().enumerate() {
            *gate = if (2 * h..3 * h).contains(&k) {
                gate.tanh()
            } else {
                sigmoid(*gate)
            };
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut out = vec![0.0; h];
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            out[j] = o * tanh_c[j];
        }
        Ok(LstmStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
            c,
            h: out,
        })
    }

    /// Backward through one step given the gradients flowing into `h_t` and
    /// `c_t`; returns `(dx, dh_prev, dc_prev)` and accumulates weight grads.
    pub fn backward_step(
        &mut self,
        cache: &LstmStepCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.hidden();
        let g = &cache.gates;
        let mut dpre = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for j in 0..h {
            let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = cache.tanh_c[j];
            let dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
            dpre[j] = dct * gg * i * (1.0 - i);
            dpre[h + j] = dct * cache.c_prev[j] * f * (1.0 - f);
            dpre[2 * h + j] = dct * i * (1.0 - gg * gg);
            dpre[3 * h + j] = dh[j] * tc * o * (1.0 - o);
            dc_prev[j] = dct * f;
        }
        let mut dx = vec![0.0; self.input()];
        let mut dh_prev = vec![0.0; h];
        for (r, &d) in dpre.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            axpy(d, &cache.x, self.w_ih.grad.row_mut(r));
            axpy(d, &cache.h_prev, self.w_hh.grad.row_mut(r));
            axpy(d, self.w_ih.value.row(r), &mut dx);
            axpy(d, self.w_hh.value.row(r), &mut dh_prev);
        }
        for (gb, d) in self.bias.grad.data_mut().iter_mut().zip(&dpre) {
            *gb += d;
        }
        (dx, dh_prev, dc_prev)
    }

    /// Runs the cell left to right over the rows of `inputs`.
    pub fn run(&self, inputs: &Matrix, init: Option<(&[f64], &[f64])>) -> Result<LstmRun> {
        let h = self.hidden();
        let zeros = vec![0.0; h];
        let (mut h_prev, mut c_prev) = match init {
            Some((hp, cp)) => (hp.to_vec(), cp.to_vec()),
            None => (zeros.clone(), zeros),
        };
        let mut outputs = Matrix::zeros(inputs.rows(), h);
        let mut caches = Vec::with_capacity(inputs.rows());
        for t in 0..inputs.rows() {
            let cache = self.step(inputs.row(t), &h_prev, &c_prev)?;
            outputs.row_mut(t).copy_from_slice(&cache.h);
            h_prev.clone_from(&cache.h);
            c_prev.clone_from(&cache.c);
            caches.push(cache);
        }
        Ok(LstmRun {
            caches,
            outputs,
            final_h: h_prev,
            final_c: c_prev,
        })
    }

    /// Backpropagation through time over a whole run. The initial state is
    /// treated as a constant.
    pub fn backward_run(&mut self, run: &LstmRun, d_outputs: &Matrix) -> Result<Matrix> {
        if d_outputs.shape() != run.outputs.shape() {
            return Err(Error::Shape {
                op: "lstm backward",
                left: d_outputs.shape(),
                right: run.outputs.shape(),
            });
        }
        let h = self.hidden();
        let mut d_inputs = Matrix::zeros(run.caches.len(), self.input());
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..run.caches.len()).rev() {
            let mut dh = d_outputs.row(t).to_vec();
            for (a, b) in dh.iter_mut().zip(&dh_next) {
                *a += b;
            }
            let (dx, dh_prev, dc_prev) = self.backward_step(&run.caches[t], &dh, &dc_next);
            d_inputs.row_mut(t).copy_from_slice(&dx);
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        Ok(d_inputs)
    }
}

impl Module for LstmCell {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.w_ih, &self.w_hh, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }
}

#[derive(Clone, Debug)]
pub struct LstmRun {
    pub caches: Vec<LstmStepCache>,
    /// `T x h` hidden states.
    pub outputs: Matrix,
    pub final_h: Vec<f64>,
    pub final_c: Vec<f64>,
}

/// Two independent single-layer LSTMs reading the sequence in opposite
/// directions; the output at `t` is `[h_fwd_t ; h_bwd_t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

#[derive(Clone, Debug)]
pub struct BiLstmRun {
    fwd: LstmRun,
    bwd: LstmRun,
    pub output: Matrix,
}

impl BiLstm {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        Self {
            forward: LstmCell::new(&format!("{name}.fwd"), input, hidden, rng),
            backward: LstmCell::new(&format!("{name}.bwd"), input, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn input(&self) -> usize {
        self.forward.input()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    pub fn forward(&self, inputs: &Matrix) -> Result<BiLstmRun> {
        if inputs.rows() == 0 {
            return Err(Error::EmptySequence("bidirectional lstm"));
        }
        let fwd = self.forward.run(inputs, None)?;
        let bwd = self.backward.run(&inputs.reversed_rows(), None)?;
        let output = Matrix::hconcat(&[&fwd.outputs, &bwd.outputs.reversed_rows()])?;
        Ok(BiLstmRun { fwd, bwd, output })
    }

    pub fn backward_pass(&mut self, run: &BiLstmRun, d_output: &Matrix) -> Result<Matrix> {
        if d_output.shape() != run.output.shape() {
            return Err(Error::Shape {
                op: "bilstm backward",
                left: d_output.shape(),
                right: run.output.shape(),
            });
        }
        let h = self.hidden();
        let d_fwd = d_output.column_block(0, h);
        let d_bwd = d_output.column_block(h, h).reversed_rows();
        let mut d_in = self.forward.backward_run(&run.fwd, &d_fwd)?;
        let d_in_bwd = self.backward.backward_run(&run.bwd, &d_bwd)?.reversed_rows();
        d_in.add_assign(&d_in_bwd)?;
        Ok(d_in)
    }
}

impl Module for BiLstm {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut ps = self.forward.parameters();
        ps.extend(self.backward.parameters());
        ps
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut ps = self.forward.parameters_mut();
        ps.extend(self.backward.parameters_mut());
        ps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, seeded_rng};

    fn randomize(m: &mut impl Module, scale: f64, rng: &mut Rng) {
        for p in m.parameters_mut() {
            p.value = Matrix::uniform(p.value.rows(), p.value.cols(), scale, rng);
        }
    }

    fn zero_cell(input: usize, hidden: usize) -> LstmCell {
        let mut rng = seeded_rng(0);
        let mut cell = LstmCell::new("c", input, hidden, &mut rng);
        for p in cell.parameters_mut() {
            p.value.fill(0.0);
        }
        cell
    }

    #[test]
    fn all_zero_gives_zero_hidden() {
        let cell = zero_cell(3, 2);
        let s = cell.step(&[0.0; 3], &[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(s.h, vec![0.0, 0.0]);
    }

    #[test]
    fn forget_bias_initialised_to_one() {
        let mut rng = seeded_rng(1);
        let cell = LstmCell::new("c", 2, 3, &mut rng);
        assert_eq!(&cell.bias.value.data()[3..6], &[1.0; 3]);
        assert_eq!(&cell.bias.value.data()[..3], &[0.0; 3]);
    }

    #[test]
    fn forget_bias_carries_cell() {
        let mut cell = zero_cell(1, 1);
        cell.bias.value.data_mut()[1] = 1.0;
        let s = cell.step(&[0.7], &[0.0], &[1.0]).unwrap();
        assert!((s.c[0] - 0.731_058_578_630_004_9).abs() < 1e-12, "{}", s.c[0]);
    }

    #[test]
    fn shape_errors() {
        let cell = zero_cell(3, 2);
        assert!(cell.step(&[0.0; 2], &[0.0; 2], &[0.0; 2]).is_err());
        assert!(cell.step(&[0.0; 3], &[0.0; 1], &[0.0; 2]).is_err());
        let bi = BiLstm {
            forward: cell.clone(),
            backward: cell,
        };
        assert!(matches!(
            bi.forward(&Matrix::zeros(0, 3)),
            Err(Error::EmptySequence(_))
        ));
    }

    #[test]
    fn hidden_state_bounded() {
        let mut rng = seeded_rng(4);
        let mut cell = LstmCell::new("c", 4, 5, &mut rng);
        randomize(&mut cell, 5.0, &mut rng);
        let x = Matrix::uniform(30, 4, 10.0, &mut rng);
        let run = cell.run(&x, None).unwrap();
        assert!(run.outputs.data().iter().all(|v| v.abs() < 1.0));
    }

    /// Scalar loss `Σ w·h + Σ v·c` over one step; returns the max relative error.
    fn cell_check(seed: u64) -> f64 {
        {
            let mut rng = seeded_rng(100 + seed);
            let mut cell = LstmCell::new("c", 3, 4, &mut rng);
            randomize(&mut cell, 1.0, &mut rng);
            let x = Matrix::uniform(1, 3, 1.0, &mut rng);
            let h0 = Matrix::uniform(1, 4, 1.0, &mut rng);
            let c0 = Matrix::uniform(1, 4, 1.0, &mut rng);
            let wh = Matrix::uniform(1, 4, 1.0, &mut rng);
            let wc = Matrix::uniform(1, 4, 1.0, &mut rng);
            let report = grad_check(
                &mut cell,
                |cell, backprop| {
                    let s = cell.step(x.row(0), h0.row(0), c0.row(0))?;
                    let loss = dot(&s.h, wh.row(0)) + dot(&s.c, wc.row(0));
                    if backprop {
                        cell.backward_step(&s, wh.row(0), wc.row(0));
                    }
                    Ok(loss)
                },
                1e-5,
            )
            .unwrap();
            report.max_relative_error
        }
    }

    #[test]
    fn cell_backward_matches_finite_differences() {
        assert!(cell_check(0) < 1e-5);
        for seed in 0..20 {
            let err = cell_check(seed);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn cell_input_and_state_gradients() {
        let mut rng = seeded_rng(7);
        let mut cell = LstmCell::new("c", 3, 2, &mut rng);
        randomize(&mut cell, 1.0, &mut rng);
        let x = vec![0.3, -0.2, 0.9];
        let h0 = vec![0.1, -0.4];
        let c0 = vec![0.5, 0.2];
        let wh = [0.7, -1.1];
        let wc = [0.2, 0.4];
        let loss = |x: &[f64], h: &[f64], c: &[f64]| {
            let s = cell.step(x, h, c).unwrap();
            dot(&s.h, &wh) + dot(&s.c, &wc)
        };
        let s = cell.step(&x, &h0, &c0).unwrap();
        let (dx, dh, dc) = cell.clone().backward_step(&s, &wh, &wc);
        let eps = 1e-6;
        let fd = |v: &[f64], i: usize, which: usize| {
            let mut p = v.to_vec();
            let mut m = v.to_vec();
            p[i] += eps;
            m[i] -= eps;
            let (lp, lm) = match which {
                0 => (loss(&p, &h0, &c0), loss(&m, &h0, &c0)),
                1 => (loss(&x, &p, &c0), loss(&x, &m, &c0)),
                _ => (loss(&x, &h0, &p), loss(&x, &h0, &m)),
            };
            (lp - lm) / (2.0 * eps)
        };
        for i in 0..3 {
            assert!((dx[i] - fd(&x, i, 0)).abs() < 1e-8);
        }
        for i in 0..2 {
            assert!((dh[i] - fd(&h0, i, 1)).abs() < 1e-8);
            assert!((dc[i] - fd(&c0, i, 2)).abs() < 1e-8);
        }
    }

    #[test]
    fn single_step_bilstm_concatenates_both_directions() {
        let mut rng = seeded_rng(9);
        let bi = BiLstm::new("b", 3, 2, &mut rng);
        let x = Matrix::uniform(1, 3, 1.0, &mut rng);
        let run = bi.forward(&x).unwrap();
        let f = bi.forward.step(x.row(0), &[0.0; 2], &[0.0; 2]).unwrap();
        let b = bi.backward.step(x.row(0), &[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(&run.output.row(0)[..2], f.h.as_slice());
        assert_eq!(&run.output.row(0)[2..], b.h.as_slice());
    }

    #[test]
    fn reversal_swaps_directions_with_tied_weights() {
        let mut rng = seeded_rng(11);
        let cell = LstmCell::new("c", 3, 4, &mut rng);
        let bi = BiLstm {
            forward: cell.clone(),
            backward: cell,
        };
        let x = Matrix::uniform(6, 3, 1.0, &mut rng);
        let orig = bi.forward(&x).unwrap().output;
        let rev = bi.forward(&x.reversed_rows()).unwrap().output;
        for t in 0..6 {
            assert_eq!(&rev.row(t)[..4], &orig.row(5 - t)[4..]);
        }
    }

    #[test]
    fn bilstm_backward_matches_finite_differences() {
        for seed in 0..20 {
            let mut rng = seeded_rng(200 + seed);
            let mut bi = BiLstm::new("b", 3, 3, &mut rng);
            randomize(&mut bi, 0.8, &mut rng);
            let x = Matrix::uniform(4, 3, 1.0, &mut rng);
            let w = Matrix::uniform(4, 6, 1.0, &mut rng);
            let report = grad_check(
                &mut bi,
                |bi, backprop| {
                    let run = bi.forward(&x)?;
                    let loss = dot(run.output.data(), w.data());
                    if backprop {
                        bi.backward_pass(&run, &w)?;
                    }
                    Ok(loss)
                },
                1e-5,
            )
            .unwrap();
            assert!(report.max_relative_error < 1e-4, "seed {seed}: {report:?}");
        }
    }
}
