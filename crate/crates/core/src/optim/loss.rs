//! Triplet and multiple-negatives (in-batch softmax) objectives with
//! gradients with respect to the sentence embeddings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Triplet,
    MultipleNegatives,
}

impl LossKind {
    pub const NAMES: [&'static str; 2] = ["Triplet", "MultipleNegatives"];
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Triplet => "Triplet",
            LossKind::MultipleNegatives => "MultipleNegatives",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triplet" | "tloss" => Ok(LossKind::Triplet),
            "multiplenegatives" | "multiple_negatives" | "mnloss" | "mn" => {
                Ok(LossKind::MultipleNegatives)
            }
            _ => Err(Error::Usage(format!(
                "unknown loss {s:?}; valid values: {}",
                LossKind::NAMES.join(", ")
            ))),
        }
    }
}

/// Score function for the multiple-negatives loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Similarity {
    Cosine,
    Dot,
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Cosine => "cosine",
            Similarity::Dot => "dot",
        })
    }
}

impl FromStr for Similarity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(Similarity::Cosine),
            "dot" => Ok(Similarity::Dot),
            _ => Err(Error::Usage(format!(
                "unknown similarity {s:?}; valid values: cosine, dot"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletOutput<T> {
    pub loss: T,
    pub grad_anchor: Vec<T>,
    pub grad_positive: Vec<T>,
    pub grad_negative: Vec<T>,
}

fn check_dims<T>(expected: usize, v: &[T]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// `max(‖a − p‖ − ‖a − n‖ + margin, 0)` with Euclidean distances.
///
/// Gradients vanish when the hinge argument is ≤ 0; a zero distance
/// contributes a zero subgradient.
pub fn triplet_loss<T: Scalar>(
    anchor: &[T],
    positive: &[T],
    negative: &[T],
    margin: T,
) -> Result<TripletOutput<T>> {
    let d = anchor.len();
    check_dims(d, positive)?;
    check_dims(d, negative)?;
    let diff_p: Vec<T> = anchor.iter().zip(positive).map(|(&a, &p)| a - p).collect();
    let diff_n: Vec<T> = anchor.iter().zip(negative).map(|(&a, &n)| a - n).collect();
    let dist_p = norm(&diff_p);
    let dist_n = norm(&diff_n);
    let arg = dist_p - dist_n + margin;
    let zeros = vec![T::zero(); d];
    if arg <= T::zero() {
        return Ok(TripletOutput {
            loss: T::zero(),
            grad_anchor: zeros.clone(),
            grad_positive: zeros.clone(),
            grad_negative: zeros,
        });
    }
    let unit = |diff: &[T], dist: T| -> Vec<T> {
        if dist == T::zero() {
            vec![T::zero(); d]
        } else {
            diff.iter().map(|&x| x / dist).collect()
        }
    };
    let up = unit(&diff_p, dist_p);
    let un = unit(&diff_n, dist_n);
    Ok(TripletOutput {
        loss: arg,
        grad_anchor: up.iter().zip(&un).map(|(&p, &n)| p - n).collect(),
        grad_positive: up.iter().map(|&p| -p).collect(),
        grad_negative: un,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLossOutput<T> {
    pub loss: T,
    pub grad_anchors: Vec<Vec<T>>,
    pub grad_positives: Vec<Vec<T>>,
}

/// Score matrix with anchor and positive norms.
type Scores<T> = (Vec<Vec<T>>, Vec<T>, Vec<T>);

/// Scaled score matrix `S[i][j] = scale · sim(a_i, p_j)` and the partial
/// derivatives needed to push score gradients back to the vectors.
fn scores<T: Scalar>(
    anchors: &[Vec<T>],
    positives: &[Vec<T>],
    scale: T,
    sim: Similarity,
) -> Result<Scores<T>> {
    let an: Vec<T> = anchors.iter().map(|a| norm(a)).collect();
    let pn: Vec<T> = positives.iter().map(|p| norm(p)).collect();
    if sim == Similarity::Cosine {
        if let Some(i) = an.iter().position(|&n| n == T::zero()) {
            return Err(Error::Numeric(format!(
                "anchor {i} has zero norm; cosine undefined"
            )));
        }
        if let Some(i) = pn.iter().position(|&n| n == T::zero()) {
            return Err(Error::Numeric(format!(
                "positive {i} has zero norm; cosine undefined"
            )));
        }
    }
    let s = anchors
        .iter()
        .enumerate()
        .map(|(i, a)| {
            positives
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let d = dot(a, p);
                    match sim {
                        Similarity::Cosine => scale * d / (an[i] * pn[j]),
                        Similarity::Dot => scale * d,
                    }
                })
                .collect()
        })
        .collect();
    Ok((s, an, pn))
}

/// Multiple-negatives loss: `−(1/n) Σ_i log softmax_j(S[i][·])[i]`, every
/// `(a_i, p_j)` with `i ≠ j` acting as a negative.
pub fn mn_loss<T: Scalar>(
    anchors: &[Vec<T>],
    positives: &[Vec<T>],
    scale: T,
    sim: Similarity,
) -> Result<BatchLossOutput<T>> {
    let n = anchors.len();
    if n == 0 {
        return Err(Error::Data(
            "multiple-negatives loss needs at least one pair".into(),
        ));
    }
    if positives.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: positives.len(),
        });
    }
    let d = anchors[0].len();
    for v in anchors.iter().chain(positives) {
        check_dims(d, v)?;
    }
    let (s, an, pn) = scores(anchors, positives, scale, sim)?;
    let inv_n = T::one() / T::of(n as f64);

    let mut loss = T::zero();
    // dL/dS
    let mut ds = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        let max = s[i].iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = s[i].iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - s[i][i];
        for j in 0..n {
            let p = (s[i][j] - lse).exp();
            ds[i][j] = (p - if i == j { T::one() } else { T::zero() }) * inv_n;
        }
    }
    loss *= inv_n;

    let mut ga = vec![vec![T::zero(); d]; n];
    let mut gp = vec![vec![T::zero(); d]; n];
    for i in 0..n {
        for j in 0..n {
            let g = ds[i][j];
            if g == T::zero() {
                continue;
            }
            let (a, p) = (&anchors[i], &positives[j]);
            match sim {
                Similarity::Dot => {
                    for k in 0..d {
                        ga[i][k] += g * scale * p[k];
                        gp[j][k] += g * scale * a[k];
                    }
                }
                Similarity::Cosine => {
                    // ∂cos/∂a = p/(|a||p|) − cos · a/|a|², symmetric for p.
                    let cos = s[i][j] / scale;
                    let inv = T::one() / (an[i] * pn[j]);
                    let ia2 = T::one() / (an[i] * an[i]);
                    let ip2 = T::one() / (pn[j] * pn[j]);
                    for k in 0..d {
                        ga[i][k] += g * scale * (p[k] * inv - cos * a[k] * ia2);
                        gp[j][k] += g * scale * (a[k] * inv - cos * p[k] * ip2);
                    }
                }
            }
        }
    }
    Ok(BatchLossOutput {
        loss,
        grad_anchors: ga,
        grad_positives: gp,
    })
}

/// Mean triplet loss over a batch where the negative of pair `i` is
/// `positives[negative_of[i]]`.
pub fn batch_triplet_loss<T: Scalar>(
    anchors: &[Vec<T>],
    positives: &[Vec<T>],
    negative_of: &[usize],
    margin: T,
) -> Result<BatchLossOutput<T>> {
    let n = anchors.len();
    if positives.len() != n || negative_of.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: positives.len().min(negative_of.len()),
        });
    }
    let d = anchors.first().map_or(0, Vec::len);
    let inv_n = T::one() / T::of(n.max(1) as f64);
    let mut loss = T::zero();
    let mut ga = vec![vec![T::zero(); d]; n];
    let mut gp = vec![vec![T::zero(); d]; n];
    for i in 0..n {
        let j = negative_of[i];
        let out = triplet_loss(&anchors[i], &positives[i], &positives[j], margin)?;
        loss += out.loss;
        for k in 0..d {
            ga[i][k] += out.grad_anchor[k] * inv_n;
            gp[i][k] += out.grad_positive[k] * inv_n;
            gp[j][k] += out.grad_negative[k] * inv_n;
        }
    }
    Ok(BatchLossOutput {
        loss: loss * inv_n,
        grad_anchors: ga,
        grad_positives: gp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_hand_cases() {
        let out = triplet_loss(&[0.0, 0.0], &[3.0, 4.0], &[6.0, 8.0], 1.0).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grad_anchor.iter().all(|&g| g == 0.0));

        let out = triplet_loss(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0], 2.0).unwrap();
        assert_eq!(out.loss, 1.0);
        assert_eq!(out.grad_positive, vec![1.0, 0.0]);
        assert_eq!(out.grad_negative, vec![0.0, -1.0]);
        assert_eq!(out.grad_anchor, vec![-1.0, 1.0]);

        let out = triplet_loss(&[0.3, -1.0], &[2.0, 2.0], &[2.0, 2.0], 0.7).unwrap();
        assert_eq!(out.loss, 0.7);
    }

    #[test]
    fn triplet_exactly_at_hinge_has_zero_gradient() {
        // d(a,p) = 1, d(a,n) = 2, margin 1 → argument exactly 0.
        let out = triplet_loss(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0], 1.0).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out
            .grad_anchor
            .iter()
            .chain(&out.grad_negative)
            .all(|&g| g == 0.0));
    }

    #[test]
    fn triplet_rejects_dimension_mismatch() {
        assert!(triplet_loss(&[0.0, 0.0], &[1.0], &[0.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn mn_single_pair_is_zero() {
        let out = mn_loss(
            &[vec![1.0, 2.0]],
            &[vec![-3.0, 0.5]],
            20.0,
            Similarity::Cosine,
        )
        .unwrap();
        assert_eq!(out.loss, 0.0);
    }

    #[test]
    fn mn_identity_scores() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let out = mn_loss(&a, &a, 1.0, Similarity::Cosine).unwrap();
        let expected = (1.0 + (-1.0f64).exp()).ln();
        assert!((out.loss - expected).abs() < 1e-15);
        assert!((out.loss - 0.3133).abs() < 1e-4);
    }

    #[test]
    fn mn_diagonal_dominance_limit() {
        let a = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let out = mn_loss(&a, &a, 200.0, Similarity::Cosine).unwrap();
        assert!(out.loss < 1e-50);
    }

    #[test]
    fn mn_zero_vector_is_an_error() {
        let err = mn_loss(
            &[vec![0.0, 0.0]],
            &[vec![1.0, 0.0]],
            1.0,
            Similarity::Cosine,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn loss_names_parse() {
        assert_eq!(
            "MultipleNegatives".parse::<LossKind>().unwrap(),
            LossKind::MultipleNegatives
        );
        assert_eq!("triplet".parse::<LossKind>().unwrap(), LossKind::Triplet);
        let err = "hinge".parse::<LossKind>().unwrap_err().to_string();
        assert!(err.contains("Triplet") && err.contains("MultipleNegatives"));
    }
}
