//! Contrastive alignment losses over caller-supplied embeddings.
//!
//! Similarities are raw dot products scaled by the temperature; nothing is
//! normalized here.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("embedding must have at least one dimension".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("embedding has non-finite entries".into()));
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Batch of (camouflaged, silhouette) embedding pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pairs: Vec<(Embedding, Embedding)>,
}

impl PairBatch {
    pub fn new(pairs: Vec<(Embedding, Embedding)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Input(format!(
                "contrastive batch needs at least 2 pairs, got {}",
                pairs.len()
            )));
        }
        let d = pairs[0].0.dim();
        if pairs.iter().any(|(c, o)| c.dim() != d || o.dim() != d) {
            return Err(Error::Input("embeddings in a batch must share one dimension".into()));
        }
        Ok(PairBatch { pairs })
    }

    pub fn pairs(&self) -> &[(Embedding, Embedding)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Elementwise mean of patch embeddings.
pub fn avg_pool(patches: &[Embedding]) -> Result<Embedding> {
    let first = patches
        .first()
        .ok_or_else(|| Error::Input("cannot pool an empty patch list".into()))?;
    let d = first.dim();
    if patches.iter().any(|p| p.dim() != d) {
        return Err(Error::Input("patch embeddings differ in dimension".into()));
    }
    let n = patches.len() as f64;
    let mean = (0..d)
        .map(|k| patches.iter().map(|p| p.0[k]).sum::<f64>() / n)
        .collect();
    Embedding::new(mean)
}

fn check_temperature(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("temperature must be positive, got {tau}")))
    }
}

/// Row-wise log-softmax of the similarity matrix `x_Cᵢ · x_Oⱼ / τ`.
fn log_softmax_rows(batch: &PairBatch, tau: f64) -> Vec<Vec<f64>> {
    batch
        .pairs
        .iter()
        .map(|(c, _)| {
            let logits: Vec<f64> = batch.pairs.iter().map(|(_, o)| c.dot(o) / tau).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            logits.into_iter().map(|l| l - lse).collect()
        })
        .collect()
}

/// InfoNCE summed over the batch:
/// `−Σᵢ log( h(Cᵢ,Oᵢ) / Σⱼ h(Cᵢ,Oⱼ) )` with `h(x,y) = exp(xᵀy / τ)`,
/// evaluated through log-sum-exp.
pub fn info_nce(batch: &PairBatch, tau: f64) -> Result<f64> {
    check_temperature(tau)?;
    Ok(log_softmax_rows(batch, tau)
        .iter()
        .enumerate()
        .map(|(i, row)| -row[i])
        .sum())
}

/// Per-pair terms `−log p(Oᵢ | Cᵢ)`; they sum to [`info_nce`].
pub fn info_nce_terms(batch: &PairBatch, tau: f64) -> Result<Vec<f64>> {
    check_temperature(tau)?;
    Ok(log_softmax_rows(batch, tau)
        .iter()
        .enumerate()
        .map(|(i, row)| -row[i])
        .collect())
}

/// Loss together with its gradients with respect to every camouflaged and
/// silhouette embedding, in batch order.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceGrad {
    pub loss: f64,
    pub d_camouflage: Vec<Vec<f64>>,
    pub d_silhouette: Vec<Vec<f64>>,
}

pub fn info_nce_grad(batch: &PairBatch, tau: f64) -> Result<InfoNceGrad> {
    check_temperature(tau)?;
    let n = batch.len();
    let d = batch.pairs[0].0.dim();
    let logp = log_softmax_rows(batch, tau);
    let mut d_c = vec![vec![0.0; d]; n];
    let mut d_o = vec![vec![0.0; d]; n];
    let mut loss = 0.0;
    for i in 0..n {
        loss -= logp[i][i];
        let c = batch.pairs[i].0.values();
        for j in 0..n {
            // ∂/∂logit_ij of −log p_ii
            let w = (logp[i][j].exp() - if i == j { 1.0 } else { 0.0 }) / tau;
            let o = batch.pairs[j].1.values();
            for k in 0..d {
                d_c[i][k] += w * o[k];
                d_o[j][k] += w * c[k];
            }
        }
    }
    Ok(InfoNceGrad {
        loss,
        d_camouflage: d_c,
        d_silhouette: d_o,
    })
}

/// Negative log-likelihood of a response: `−Σ log pᵢ`.
pub fn autoregressive_nll(token_probs: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &p) in token_probs.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Input(format!(
                "token {i} probability {p} is outside (0, 1]"
            )));
        }
        total -= p.ln();
    }
    Ok(total)
}

/// `α·l_con + (1 − α)·l_vlm`.
pub fn total_loss(l_con: f64, l_vlm: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha must be in [0, 1], got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(l_vlm);
    }
    if alpha == 1.0 {
        return Ok(l_con);
    }
    Ok(alpha * l_con + (1.0 - alpha) * l_vlm)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{E, LN_2};

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    /// Direct transcription of the loss: plain exp sums, no stabilization.
    fn naive(batch: &PairBatch, tau: f64) -> f64 {
        let p = batch.pairs();
        let h = |x: &Embedding, y: &Embedding| (x.dot(y) / tau).exp();
        let mut total = 0.0;
        for i in 0..p.len() {
            let pos = h(&p[i].0, &p[i].1);
            let mut neg = 0.0;
            for j in 0..p.len() {
                if j != i {
                    neg += h(&p[i].0, &p[j].1);
                }
            }
            total -= (pos / (neg + pos)).ln();
        }
        total
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> PairBatch {
        let mut v = || emb(&(0..d).map(|_| rng.gen_range(-scale..scale)).collect::<Vec<_>>());
        PairBatch::new((0..n).map(|_| (v(), v())).collect()).unwrap()
    }

    #[test]
    fn pooling() {
        let v = emb(&[1.0, -2.0, 3.5]);
        assert_eq!(avg_pool(&[v.clone(), v.clone(), v.clone()]).unwrap(), v);
        assert_eq!(avg_pool(&[emb(&[0.0, 2.0]), emb(&[2.0, 0.0])]).unwrap(), emb(&[1.0, 1.0]));
        assert_eq!(avg_pool(std::slice::from_ref(&v)).unwrap(), v);
        assert!(avg_pool(&[]).is_err());
        assert!(avg_pool(&[emb(&[1.0]), emb(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn uniform_batch() {
        let v = emb(&[0.3, -1.2, 2.0]);
        let b = PairBatch::new(vec![(v.clone(), v.clone()), (v.clone(), v)]).unwrap();
        for tau in [0.07, 0.7, 1.0, 5.0] {
            assert!((info_nce(&b, tau).unwrap() - 2.0 * LN_2).abs() < 1e-9);
        }
    }

    #[test]
    fn orthonormal_pairs() {
        let (e1, e2) = (emb(&[1.0, 0.0]), emb(&[0.0, 1.0]));
        let b = PairBatch::new(vec![(e1.clone(), e1), (e2.clone(), e2)]).unwrap();
        let want = 2.0 * ((1.0 + E).ln() - 1.0);
        assert!((info_nce(&b, 1.0).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let b = random_batch(&mut rng, 4, 8, 1.5);
            let got = info_nce(&b, 0.7).unwrap();
            assert!((got - naive(&b, 0.7)).abs() < 1e-9);
            assert!(got >= 0.0);
        }
    }

    #[test]
    fn stable_for_large_logits() {
        let b = PairBatch::new(vec![
            (emb(&[1000.0]), emb(&[1000.0])),
            (emb(&[-1000.0]), emb(&[-1000.0])),
        ])
        .unwrap();
        let l = info_nce(&b, 0.7).unwrap();
        assert!(l.is_finite() && l >= 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(PairBatch::new(vec![(emb(&[1.0]), emb(&[1.0]))]).is_err());
        assert!(PairBatch::new(vec![(emb(&[1.0]), emb(&[1.0])), (emb(&[1.0, 2.0]), emb(&[1.0]))]).is_err());
        assert!(Embedding::new(vec![]).is_err());
        assert!(Embedding::new(vec![f64::INFINITY]).is_err());
        let b = PairBatch::new(vec![(emb(&[1.0]), emb(&[1.0])), (emb(&[2.0]), emb(&[1.0]))]).unwrap();
        assert!(matches!(info_nce(&b, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(info_nce(&b, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn nll() {
        assert_eq!(autoregressive_nll(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((autoregressive_nll(&[(-1.0f64).exp()]).unwrap() - 1.0).abs() < 1e-15);
        let want = 3.0 * 10f64.ln();
        assert!((autoregressive_nll(&[0.1; 3]).unwrap() - want).abs() < 1e-12);
        assert!(autoregressive_nll(&[0.5, 0.0]).is_err());
        assert!(autoregressive_nll(&[1.5]).is_err());
    }

    #[test]
    fn weighted_total() {
        assert_eq!(total_loss(2.0, 4.0, 0.0).unwrap(), 4.0);
        assert_eq!(total_loss(2.0, 4.0, 1.0).unwrap(), 2.0);
        assert_eq!(total_loss(2.0, 4.0, 0.5).unwrap(), 3.0);
        assert!(total_loss(2.0, 4.0, 1.1).is_err());
        assert!(total_loss(2.0, 4.0, -0.1).is_err());
    }

    #[test]
    fn summed_loss_is_not_monotone_in_alignment() {
        // x_O0 moving toward x_C0 also raises the negative logit x_C1·x_O0,
        // so the batch sum can grow even though term 0 shrinks.
        let c0 = emb(&[1.0, 0.0]);
        let c1 = emb(&[1.0, 0.1]);
        let o1 = emb(&[0.0, 1.0]);
        let at = |t: f64| {
            let o0 = emb(&[t, 0.0]);
            PairBatch::new(vec![(c0.clone(), o0), (c1.clone(), o1.clone())]).unwrap()
        };
        let (before, after) = (at(0.0), at(1.0));
        assert!(info_nce_terms(&after, 1.0).unwrap()[0] < info_nce_terms(&before, 1.0).unwrap()[0]);
        assert!(info_nce(&after, 1.0).unwrap() > info_nce(&before, 1.0).unwrap());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tau = 0.7;
        for _ in 0..5 {
            let b = random_batch(&mut rng, 4, 5, 1.0);
            let g = info_nce_grad(&b, tau).unwrap();
            assert!((g.loss - info_nce(&b, tau).unwrap()).abs() < 1e-12);
            let h = 1e-5;
            for i in 0..b.len() {
                for k in 0..5 {
                    for which in 0..2 {
                        let bump = |delta: f64| {
                            let mut pairs = b.pairs().to_vec();
                            let e = if which == 0 { &mut pairs[i].0 } else { &mut pairs[i].1 };
                            e.0[k] += delta;
                            info_nce(&PairBatch::new(pairs).unwrap(), tau).unwrap()
                        };
                        let fd = (bump(h) - bump(-h)) / (2.0 * h);
                        let an = if which == 0 { g.d_camouflage[i][k] } else { g.d_silhouette[i][k] };
                        assert!(
                            (fd - an).abs() <= 1e-5 * an.abs().max(1e-3),
                            "fd {fd} vs analytic {an}"
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in any::<u64>(), n in 2usize..7, shift in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_batch(&mut rng, n, 4, 2.0);
            let mut pairs = b.pairs().to_vec();
            pairs.rotate_left(shift % n);
            let rotated = PairBatch::new(pairs).unwrap();
            prop_assert!((info_nce(&b, 0.7).unwrap() - info_nce(&rotated, 0.7).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn pulling_positive_closer_lowers_its_term(seed in any::<u64>(), i in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_batch(&mut rng, 4, 6, 1.0);
            let mut pairs = b.pairs().to_vec();
            let c = pairs[i].0.clone();
            let start = pairs[i].1.clone();
            // the positive logit grows along the segment only while x_C·x_O < |x_C|²
            prop_assume!(c.dot(&start) < c.dot(&c) - 1e-6);
            let mut last = info_nce_terms(&b, 0.7).unwrap()[i];
            for step in 1..=10 {
                let t = step as f64 / 10.0;
                let moved: Vec<f64> = start.values().iter().zip(c.values())
                    .map(|(s, c)| s + t * (c - s)).collect();
                pairs[i].1 = Embedding::new(moved).unwrap();
                let l = info_nce_terms(&PairBatch::new(pairs.clone()).unwrap(), 0.7).unwrap()[i];
                prop_assert!(l < last, "step {step}: {l} >= {last}");
                last = l;
            }
        }

        #[test]
        fn naive_equivalence_bounded_dots(seed in any::<u64>(), n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // |dot| <= d · scale² = 8 · 2.5² = 50
            let b = random_batch(&mut rng, n, 8, 2.5);
            let a = info_nce(&b, 1.0).unwrap();
            prop_assert!((a - naive(&b, 1.0)).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
