//! Linear-chain CRF over IOBES labels.
//!
//! Label sequences are scored as
//! `Σ_t [W_{y_t}·z_t + b[y_{t-1}][y_t]] + b[y_T][END]` with `y_0 = START`.
//! Transition biases live in an `(L+1) x (L+1)` matrix whose extra row is
//! the START predecessor and whose extra column is the END successor, so
//! `b[·][START]` and `b[END][·]` have no storage at all.
//!
//! All dynamic programs run in log space.

use crate::error::{Error, Result};
use crate::nn::{log_sum_exp, Linear, Matrix, Module, Parameter, Rng};
use crate::tagging::{LabelSequence, Tag, TagSet};

/// Emission weights `W` (`L x dim(z)`, no bias) and transition biases.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    pub emission: Linear,
    pub transitions: Parameter,
}

impl CrfParams {
    pub fn new(input: usize, labels: usize, rng: &mut Rng) -> Self {
        Self {
            emission: Linear::new("crf.emission", input, labels, false, rng),
            transitions: Parameter::new("crf.transitions", Matrix::zeros(labels + 1, labels + 1)),
        }
    }

    pub fn from_parts(emission: Linear, transitions: Parameter) -> Result<Self> {
        let l = emission.output_dim();
        if transitions.shape() != (l + 1, l + 1) {
            return Err(Error::Shape {
                op: "crf transitions",
                left: transitions.shape(),
                right: (l + 1, l + 1),
            });
        }
        Ok(Self {
            emission,
            transitions,
        })
    }

    pub fn label_count(&self) -> usize {
        self.emission.output_dim()
    }

    /// Entry `(t, y)` is `W_y · z_t`.
    pub fn emission_scores(&self, z: &Matrix) -> Result<Matrix> {
        self.emission.forward(z)
    }
}

impl Module for CrfParams {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.emission.weight, &self.transitions]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.emission.weight, &mut self.transitions]
    }
}

/// Allowed transitions over labels augmented with START (row `L`) and END
/// (column `L`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMask {
    labels: usize,
    allowed: Vec<bool>,
}

impl TransitionMask {
    pub fn allow_all(labels: usize) -> Self {
        let n = labels + 1;
        let mut allowed = vec![true; n * n];
        allowed[labels * n + labels] = false;
        Self { labels, allowed }
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    /// `prev == L` means START, `next == L` means END.
    pub fn is_allowed(&self, prev: usize, next: usize) -> bool {
        self.allowed[prev * (self.labels + 1) + next]
    }

    pub fn allowed_count(&self) -> usize {
        self.allowed.iter().filter(|&&a| a).count()
    }
}

/// Transition constraints that make every decodable path IOBES-valid.
pub fn build_iobes_mask(tags: &TagSet) -> TransitionMask {
    let l = tags.label_count();
    let n = l + 1;
    let mut allowed = vec![false; n * n];
    for prev in 0..l {
        let p = Tag::from_index(prev);
        for next in 0..l {
            allowed[prev * n + next] = p.may_precede(Tag::from_index(next));
        }
        allowed[prev * n + l] = p.may_end();
    }
    for next in 0..l {
        allowed[l * n + next] = Tag::from_index(next).may_start();
    }
    TransitionMask { labels: l, allowed }
}

fn check_shapes(emissions: &Matrix, transitions: &Matrix) -> Result<usize> {
    let l = emissions.cols();
    if emissions.rows() == 0 {
        return Err(Error::EmptySequence("crf"));
    }
    if transitions.shape() != (l + 1, l + 1) {
        return Err(Error::Shape {
            op: "crf transitions",
            left: emissions.shape(),
            right: transitions.shape(),
        });
    }
    Ok(l)
}

fn check_labels(emissions: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != emissions.rows() {
        return Err(Error::LengthMismatch {
            what: "label sequence",
            expected: emissions.rows(),
            got: labels.len(),
        });
    }
    if let Some((position, &index)) = labels
        .iter()
        .enumerate()
        .find(|(_, &y)| y >= emissions.cols())
    {
        return Err(Error::LabelOutOfRange {
            position,
            index,
            count: emissions.cols(),
        });
    }
    Ok(())
}

/// Forward variables: `alpha[t][y]` is the log-sum over prefixes ending in
/// `y` at `t`.
fn forward_table(emissions: &Matrix, transitions: &Matrix, l: usize) -> Matrix {
    let t_len = emissions.rows();
    let mut alpha = Matrix::zeros(t_len, l);
    for y in 0..l {
        alpha.set(0, y, transitions.get(l, y) + emissions.get(0, y));
    }
    let mut buf = vec![0.0; l];
    for t in 1..t_len {
        for y in 0..l {
            for (p, b) in buf.iter_mut().enumerate() {
                *b = alpha.get(t - 1, p) + transitions.get(p, y);
            }
            alpha.set(t, y, emissions.get(t, y) + log_sum_exp(&buf));
        }
    }
    alpha
}

fn backward_table(emissions: &Matrix, transitions: &Matrix, l: usize) -> Matrix {
    let t_len = emissions.rows();
    let mut beta = Matrix::zeros(t_len, l);
    for y in 0..l {
        beta.set(t_len - 1, y, transitions.get(y, l));
    }
    let mut buf = vec![0.0; l];
    for t in (0..t_len - 1).rev() {
        for y in 0..l {
            for (n, b) in buf.iter_mut().enumerate() {
                *b = transitions.get(y, n) + emissions.get(t + 1, n) + beta.get(t + 1, n);
            }
            beta.set(t, y, log_sum_exp(&buf));
        }
    }
    beta
}

fn log_partition_from(alpha: &Matrix, transitions: &Matrix, l: usize) -> f64 {
    let last = alpha.rows() - 1;
    let finals: Vec<f64> = (0..l)
        .map(|y| alpha.get(last, y) + transitions.get(y, l))
        .collect();
    log_sum_exp(&finals)
}

/// Log of the normalizer over all `L^T` label sequences, in `O(T L^2)`.
pub fn log_partition(emissions: &Matrix, transitions: &Matrix) -> Result<f64> {
    let l = check_shapes(emissions, transitions)?;
    let alpha = forward_table(emissions, transitions, l);
    Ok(log_partition_from(&alpha, transitions, l))
}

/// Unnormalized log score of one label sequence, END transition included.
pub fn sequence_score(emissions: &Matrix, transitions: &Matrix, labels: &[usize]) -> Result<f64> {
    let l = check_shapes(emissions, transitions)?;
    check_labels(emissions, labels)?;
    let mut score = 0.0;
    let mut prev = l;
    for (t, &y) in labels.iter().enumerate() {
        score += emissions.get(t, y) + transitions.get(prev, y);
        prev = y;
    }
    Ok(score + transitions.get(prev, l))
}

/// Per-position label marginals `p(y_t = y)`, `T x L`.
pub fn marginals(emissions: &Matrix, transitions: &Matrix) -> Result<Matrix> {
    let l = check_shapes(emissions, transitions)?;
    let alpha = forward_table(emissions, transitions, l);
    let beta = backward_table(emissions, transitions, l);
    let log_z = log_partition_from(&alpha, transitions, l);
    let mut out = Matrix::zeros(emissions.rows(), l);
    for t in 0..emissions.rows() {
        for y in 0..l {
            out.set(t, y, (alpha.get(t, y) + beta.get(t, y) - log_z).exp());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CrfLoss {
    pub loss: f64,
    /// `T x L`: marginal minus one-hot gold label.
    pub d_emissions: Matrix,
    /// `(L+1) x (L+1)`: pairwise marginal minus gold transition counts.
    pub d_transitions: Matrix,
}

/// Negative log-likelihood of `labels` and its exact gradients from
/// forward-backward marginals.
pub fn nll_and_gradients(
    emissions: &Matrix,
    transitions: &Matrix,
    labels: &[usize],
) -> Result<CrfLoss> {
    let l = check_shapes(emissions, transitions)?;
    check_labels(emissions, labels)?;
    let t_len = emissions.rows();
    let alpha = forward_table(emissions, transitions, l);
    let beta = backward_table(emissions, transitions, l);
    let log_z = log_partition_from(&alpha, transitions, l);
    let gold = sequence_score(emissions, transitions, labels)?;

    let mut d_emissions = Matrix::zeros(t_len, l);
    let mut d_transitions = Matrix::zeros(l + 1, l + 1);
    for t in 0..t_len {
        for y in 0..l {
            let p = (alpha.get(t, y) + beta.get(t, y) - log_z).exp();
            d_emissions.set(t, y, p);
            if t == 0 {
                d_transitions.add_at(l, y, p);
            }
            if t == t_len - 1 {
                d_transitions.add_at(y, l, p);
            }
        }
        if t > 0 {
            for prev in 0..l {
                let a = alpha.get(t - 1, prev);
                for next in 0..l {
                    let p = (a
                        + transitions.get(prev, next)
                        + emissions.get(t, next)
                        + beta.get(t, next)
                        - log_z)
                        .exp();
                    d_transitions.add_at(prev, next, p);
                }
            }
        }
    }
    let mut prev = l;
    for (t, &y) in labels.iter().enumerate() {
        d_emissions.add_at(t, y, -1.0);
        d_transitions.add_at(prev, y, -1.0);
        prev = y;
    }
    d_transitions.add_at(prev, l, -1.0);

    Ok(CrfLoss {
        loss: (log_z - gold).max(0.0),
        d_emissions,
        d_transitions,
    })
}

/// Highest-scoring label sequence among those the mask permits (all of
/// them when `mask` is `None`). Ties go to the lower label index, both at
/// every backpointer and for the final label.
pub fn viterbi(
    emissions: &Matrix,
    transitions: &Matrix,
    mask: Option<&TransitionMask>,
) -> Result<(LabelSequence, f64)> {
    let l = check_shapes(emissions, transitions)?;
    if let Some(m) = mask {
        if m.labels() != l {
            return Err(Error::LengthMismatch {
                what: "transition mask labels",
                expected: l,
                got: m.labels(),
            });
        }
    }
    let allowed = |p: usize, n: usize| mask.map_or(true, |m| m.is_allowed(p, n));
    let t_len = emissions.rows();
    let mut delta = Matrix::zeros(t_len, l);
    let mut back = vec![0usize; t_len * l];
    for y in 0..l {
        let v = if allowed(l, y) {
            transitions.get(l, y) + emissions.get(0, y)
        } else {
            f64::NEG_INFINITY
        };
        delta.set(0, y, v);
    }
    for t in 1..t_len {
        for y in 0..l {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for p in 0..l {
                if !allowed(p, y) {
                    continue;
                }
                let v = delta.get(t - 1, p) + transitions.get(p, y);
                if v > best {
                    best = v;
                    arg = p;
                }
            }
            delta.set(t, y, best + emissions.get(t, y));
            back[t * l + y] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for y in 0..l {
        if !allowed(y, l) {
            continue;
        }
        let v = delta.get(t_len - 1, y) + transitions.get(y, l);
        if v > best {
            best = v;
            last = y;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Config(
            "no label sequence satisfies the transition mask".into(),
        ));
    }
    let mut labels = vec![0; t_len];
    labels[t_len - 1] = last;
    for t in (1..t_len).rev() {
        labels[t - 1] = back[t * l + labels[t]];
    }
    let score = sequence_score(emissions, transitions, &labels)?;
    Ok((LabelSequence::from_indices(labels), score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;
    use rand::Rng as _;

    /// Every sequence in `0..l` of length `t_len`, in lexicographic order.
    fn all_sequences(t_len: usize, l: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = vec![0; t_len];
        loop {
            out.push(cur.clone());
            let mut i = t_len;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < l {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    fn direct_score(e: &Matrix, b: &Matrix, y: &[usize]) -> f64 {
        let l = e.cols();
        let mut s = b.get(l, y[0]) + e.get(0, y[0]);
        for t in 1..y.len() {
            s += b.get(y[t - 1], y[t]) + e.get(t, y[t]);
        }
        s + b.get(y[y.len() - 1], l)
    }

    fn random_instance(t_len: usize, l: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = seeded_rng(seed);
        (
            Matrix::uniform(t_len, l, 2.0, &mut rng),
            Matrix::uniform(l + 1, l + 1, 2.0, &mut rng),
        )
    }

    #[test]
    fn single_position_closed_form() {
        let e = Matrix::from_rows(&[vec![0.3, -1.2]]).unwrap();
        let b = Matrix::from_rows(&[
            vec![0.0, 0.0, 0.5],
            vec![0.0, 0.0, -0.25],
            vec![0.1, 0.7, 0.0],
        ])
        .unwrap();
        let s0 = 0.1 + 0.5;
        let s1 = 0.7 - 0.25;
        let expected = ((0.3 + s0 as f64).exp() + (-1.2 + s1 as f64).exp()).ln();
        assert!((log_partition(&e, &b).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn uniform_scores() {
        let e = Matrix::zeros(3, 4);
        let b = Matrix::zeros(5, 5);
        let z = log_partition(&e, &b).unwrap();
        assert!((z - 3.0 * 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn matches_brute_force_enumeration() {
        let (e, b) = random_instance(5, 3, 17);
        let terms: Vec<f64> = all_sequences(5, 3)
            .iter()
            .map(|y| direct_score(&e, &b, y))
            .collect();
        assert_eq!(terms.len(), 243);
        let brute = log_sum_exp(&terms);
        assert!((log_partition(&e, &b).unwrap() - brute).abs() < 1e-10);
    }

    #[test]
    fn empty_sequence_rejected() {
        let e = Matrix::zeros(0, 2);
        let b = Matrix::zeros(3, 3);
        assert!(matches!(log_partition(&e, &b), Err(Error::EmptySequence(_))));
        assert!(viterbi(&e, &b, None).is_err());
    }

    #[test]
    fn zero_params_score_zero() {
        let e = Matrix::zeros(4, 3);
        let b = Matrix::zeros(4, 4);
        for y in all_sequences(4, 3) {
            assert_eq!(sequence_score(&e, &b, &y).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_computed_two_step_score() {
        // W = [[1, 0], [0, 1]], z_1 = [2, 3], z_2 = [-1, 4]
        let w = Matrix::identity(2);
        let z = Matrix::from_rows(&[vec![2.0, 3.0], vec![-1.0, 4.0]]).unwrap();
        let crf = CrfParams::from_parts(
            Linear::from_parts(Parameter::new("w", w), None).unwrap(),
            Parameter::new(
                "b",
                Matrix::from_rows(&[
                    vec![0.1, 0.2, 0.3],
                    vec![0.4, 0.5, 0.6],
                    vec![0.7, 0.8, 0.0],
                ])
                .unwrap(),
            ),
        )
        .unwrap();
        let e = crf.emission_scores(&z).unwrap();
        // START->1 (0.8) + e(0,1)=3 + 1->0 (0.4) + e(1,0)=-1 + 0->END (0.3)
        let s = sequence_score(&e, &crf.transitions.value, &[1, 0]).unwrap();
        assert!((s - (0.8 + 3.0 + 0.4 - 1.0 + 0.3)).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_rejected() {
        let (e, b) = random_instance(3, 2, 1);
        assert!(matches!(
            sequence_score(&e, &b, &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(nll_and_gradients(&e, &b, &[0]).is_err());
    }

    #[test]
    fn scores_bounded_by_partition() {
        for seed in 0..50 {
            let (e, b) = random_instance(4, 3, seed);
            let z = log_partition(&e, &b).unwrap();
            for y in all_sequences(4, 3) {
                assert!(sequence_score(&e, &b, &y).unwrap() <= z + 1e-12);
            }
        }
    }

    #[test]
    fn single_label_has_zero_loss() {
        let mut rng = seeded_rng(3);
        let e = Matrix::uniform(5, 1, 3.0, &mut rng);
        let b = Matrix::uniform(2, 2, 3.0, &mut rng);
        let out = nll_and_gradients(&e, &b, &[0; 5]).unwrap();
        assert!(out.loss.abs() < 1e-12);
        assert!(out.d_emissions.data().iter().all(|g| g.abs() < 1e-12));
        assert!(out.d_transitions.data().iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn emission_gradients_sum_to_zero_per_position() {
        let (e, b) = random_instance(6, 4, 8);
        let out = nll_and_gradients(&e, &b, &[0, 1, 2, 3, 2, 1]).unwrap();
        for t in 0..6 {
            let s: f64 = out.d_emissions.row(t).iter().sum();
            assert!(s.abs() < 1e-12, "{s}");
        }
        let m = marginals(&e, &b).unwrap();
        for t in 0..6 {
            assert!((m.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let (e, b) = random_instance(5, 3, 1000 + seed);
            let mut rng = seeded_rng(seed);
            let y: Vec<usize> = (0..5).map(|_| rng.gen_range(0..3)).collect();
            let out = nll_and_gradients(&e, &b, &y).unwrap();
            let loss = |e: &Matrix, b: &Matrix| {
                log_partition(e, b).unwrap() - sequence_score(e, b, &y).unwrap()
            };
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            let mut check = |analytic: f64, numeric: f64| {
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(err);
            };
            for i in 0..e.data().len() {
                let (mut p, mut m) = (e.clone(), e.clone());
                p.data_mut()[i] += h;
                m.data_mut()[i] -= h;
                check(out.d_emissions.data()[i], (loss(&p, &b) - loss(&m, &b)) / (2.0 * h));
            }
            for i in 0..b.data().len() {
                if i == b.data().len() - 1 {
                    continue; // START->END is never read
                }
                let (mut p, mut m) = (b.clone(), b.clone());
                p.data_mut()[i] += h;
                m.data_mut()[i] -= h;
                check(out.d_transitions.data()[i], (loss(&e, &p) - loss(&e, &m)) / (2.0 * h));
            }
            assert!(worst < 1e-6, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn partition_gradient_is_marginal() {
        let (e, b) = random_instance(4, 3, 99);
        let m = marginals(&e, &b).unwrap();
        let h = 1e-6;
        for t in 0..4 {
            for y in 0..3 {
                let (mut p, mut n) = (e.clone(), e.clone());
                p.add_at(t, y, h);
                n.add_at(t, y, -h);
                let fd = (log_partition(&p, &b).unwrap() - log_partition(&n, &b).unwrap()) / (2.0 * h);
                assert!((fd - m.get(t, y)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let (e, b) = random_instance(5, 4, 21);
        let y = [1, 2, 0, 3, 3];
        let mut shifted = e.clone();
        for v in shifted.row_mut(2) {
            *v += 7.5;
        }
        let z0 = log_partition(&e, &b).unwrap();
        let z1 = log_partition(&shifted, &b).unwrap();
        assert!((z1 - z0 - 7.5).abs() < 1e-10);
        let s0 = sequence_score(&e, &b, &y).unwrap();
        let s1 = sequence_score(&shifted, &b, &y).unwrap();
        assert!((s1 - s0 - 7.5).abs() < 1e-12);
        let l0 = nll_and_gradients(&e, &b, &y).unwrap().loss;
        let l1 = nll_and_gradients(&shifted, &b, &y).unwrap().loss;
        assert!((l0 - l1).abs() < 1e-10);
        assert_eq!(
            viterbi(&e, &b, None).unwrap().0,
            viterbi(&shifted, &b, None).unwrap().0
        );
    }

    #[test]
    fn zero_scores_decode_to_all_outside() {
        let (seq, score) = viterbi(&Matrix::zeros(6, 5), &Matrix::zeros(6, 6), None).unwrap();
        assert_eq!(seq.as_slice(), &[0; 6]);
        assert_eq!(score, 0.0);
    }

    /// Lowest-index tie-breaking at each backpointer selects, among optimal
    /// sequences, the smallest when compared from the last position backward.
    fn brute_argmax(e: &Matrix, b: &Matrix) -> Vec<usize> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for y in all_sequences(e.rows(), e.cols()) {
            let s = direct_score(e, b, &y);
            let better = match &best {
                None => true,
                Some((bs, by)) => {
                    s > *bs || (s == *bs && y.iter().rev().lt(by.iter().rev()))
                }
            };
            if better {
                best = Some((s, y));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn viterbi_matches_brute_force() {
        for seed in 0..30 {
            let (e, b) = random_instance(5, 4, 500 + seed);
            let (seq, score) = viterbi(&e, &b, None).unwrap();
            let brute = brute_argmax(&e, &b);
            assert_eq!(seq.as_slice(), brute.as_slice());
            assert!((score - direct_score(&e, &b, &brute)).abs() < 1e-12);
        }
    }

    fn grammar_allows(prev: Option<&str>, next: Option<&str>) -> bool {
        // prev None = START, next None = END; labels are "O", "B", "I", "E", "S"
        match (prev, next) {
            (None, None) => false,
            (None, Some(n)) => matches!(n, "O" | "B" | "S"),
            (Some(p), None) => matches!(p, "O" | "E" | "S"),
            (Some(p), Some(n)) => match p {
                "B" | "I" => matches!(n, "I" | "E"),
                _ => matches!(n, "O" | "B" | "S"),
            },
        }
    }

    #[test]
    fn single_type_mask_grid() {
        let tags = TagSet::new(["PER"]).unwrap();
        let mask = build_iobes_mask(&tags);
        let names = ["O", "B", "I", "E", "S"];
        let mut expected_count = 0;
        for prev in 0..=5 {
            for next in 0..=5 {
                let p = names.get(prev).copied();
                let n = names.get(next).copied();
                let expect = grammar_allows(p, n);
                expected_count += expect as usize;
                assert_eq!(mask.is_allowed(prev, next), expect, "{p:?} -> {n:?}");
            }
        }
        assert_eq!(mask.allowed_count(), expected_count);
        assert_eq!(expected_count, 19);
    }

    #[test]
    fn mask_forbids_bad_transitions() {
        let tags = TagSet::new(["PER", "LOC"]).unwrap();
        let mask = build_iobes_mask(&tags);
        let o = tags.parse_label("O").unwrap();
        let i_per = tags.parse_label("I-PER").unwrap();
        let b_per = tags.parse_label("B-PER").unwrap();
        let i_loc = tags.parse_label("I-LOC").unwrap();
        assert!(!mask.is_allowed(o, i_per));
        assert!(!mask.is_allowed(b_per, i_loc));
        assert!(mask.is_allowed(b_per, i_per));
        assert!(!mask.is_allowed(b_per, tags.label_count()));
    }

    #[test]
    fn masked_decoding_is_always_valid() {
        let tags = TagSet::new(["PER", "LOC"]).unwrap();
        let mask = build_iobes_mask(&tags);
        let l = tags.label_count();
        for seed in 0..200 {
            let mut rng = seeded_rng(seed);
            let t_len = rng.gen_range(1..12);
            let e = Matrix::uniform(t_len, l, 5.0, &mut rng);
            let b = Matrix::uniform(l + 1, l + 1, 5.0, &mut rng);
            let (seq, _) = viterbi(&e, &b, Some(&mask)).unwrap();
            assert!(seq.is_iobes_valid(), "seed {seed}");
        }
    }
}
