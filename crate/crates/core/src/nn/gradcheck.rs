use super::Module;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub entries: usize,
}

/// Compares analytic gradients against central differences for every
/// parameter entry of `model`.
///
/// `loss(model, backprop)` must return the scalar loss and, when `backprop`
/// is true, accumulate its gradient into the parameters. The relative error
/// of one entry is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<M: Module>(
    model: &mut M,
    loss: impl FnMut(&mut M, bool) -> Result<f64>,
    step: f64,
) -> Result<GradCheckReport> {
    grad_check_with_floor(model, loss, step, 1e-8)
}

/// [`grad_check`] with a different denominator floor, for losses whose
/// rounding noise swamps gradients far below the floor.
pub fn grad_check_with_floor<M: Module>(
    model: &mut M,
    mut loss: impl FnMut(&mut M, bool) -> Result<f64>,
    step: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    model.zero_grad();
    let base = loss(model, true)?;
    if !base.is_finite() {
        return Err(Error::NonFiniteLoss(base));
    }
    let analytic: Vec<Vec<f64>> = model
        .parameters()
        .iter()
        .map(|p| p.grad.data().to_vec())
        .collect();

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_parameter: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        entries: 0,
    };
    for (k, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = model.parameters()[k].value.data()[i];
            model.parameters_mut()[k].value.data_mut()[i] = original + step;
            let plus = loss(model, false)?;
            model.parameters_mut()[k].value.data_mut()[i] = original - step;
            let minus = loss(model, false)?;
            model.parameters_mut()[k].value.data_mut()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteLoss(if plus.is_finite() { minus } else { plus }));
            }
            let numeric = (plus - minus) / (2.0 * step);
            let denom = a.abs().max(numeric.abs()).max(floor);
            let err = (a - numeric).abs() / denom;
            report.entries += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_parameter = model.parameters()[k].name.clone();
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    model.zero_grad();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Matrix, Parameter};

    struct Quadratic(Parameter);

    impl Module for Quadratic {
        fn parameters(&self) -> Vec<&Parameter> {
            vec![&self.0]
        }
        fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn quadratic_is_exact() {
        let mut q = Quadratic(Parameter::new(
            "w",
            Matrix::from_vec(1, 3, vec![0.5, -2.0, 3.0]).unwrap(),
        ));
        let report = grad_check(
            &mut q,
            |q, backprop| {
                let v = q.0.value.data().to_vec();
                if backprop {
                    for (g, x) in q.0.grad.data_mut().iter_mut().zip(&v) {
                        *g += 2.0 * x;
                    }
                }
                Ok(v.iter().map(|x| x * x).sum())
            },
            1e-5,
        )
        .unwrap();
        assert!(report.max_relative_error < 1e-9, "{report:?}");
        assert_eq!(report.entries, 3);
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let mut q = Quadratic(Parameter::new("w", Matrix::from_vec(1, 1, vec![1.0]).unwrap()));
        let report = grad_check(
            &mut q,
            |q, backprop| {
                let x = q.0.value.data()[0];
                if backprop {
                    q.0.grad.data_mut()[0] += 3.0 * x;
                }
                Ok(x * x)
            },
            1e-5,
        )
        .unwrap();
        assert!(report.max_relative_error > 0.3);
        assert_eq!(report.worst_parameter, "w");
    }

    #[test]
    fn non_finite_loss_rejected() {
        let mut q = Quadratic(Parameter::new("w", Matrix::zeros(1, 1)));
        assert!(matches!(
            grad_check(&mut q, |_, _| Ok(f64::NAN), 1e-5),
            Err(Error::NonFiniteLoss(_))
        ));
    }
}
