//! Seeded sampling of the matrix models and estimation of trace statistics.
//!
//! Reproducibility contract: sampling uses ChaCha8 keyed by the job seed,
//! standard normals come from `rand_distr::StandardNormal` (Ziggurat), and
//! matrix entries are drawn row-major, letters in colour order.  Samples are
//! generated in fixed blocks of 256 with sub-seeds derived from the block
//! index by a SplitMix64 step, so estimates are identical for every thread
//! count.

use std::collections::BTreeMap;

use ndarray::Array2;
use num::{BigRational, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ensembles::{DSpec, EnsembleModel, Letter, ModelSet, TraceExpression};
use crate::error::{Error, Result};

/// Samples per block; fixed so results do not depend on the thread count.
const BLOCK: u64 = 256;

/// A Monte Carlo estimate of one trace statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// One factor of a Monte Carlo target: a single-colour word, optionally
/// centred by the exact engine's mean at the same `N`.
#[derive(Clone, Debug)]
pub struct McFactor {
    pub letters: Vec<Letter>,
    pub centred: bool,
}

/// What to estimate.
#[derive(Clone, Debug)]
pub enum McTarget {
    /// Mean of the product of normalized traces of the groups.
    MeanProduct(Vec<Vec<McFactor>>),
    /// Covariance of the two unnormalized traces.
    Covariance(Vec<McFactor>, Vec<McFactor>),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("rational in f64 range")
}

/// Draws one matrix of the model at size `n`: entries scaled by `1/sqrt(N)`,
/// GOE symmetrized by `(X + X^T)/sqrt(2)`, Wishart assembled as `X^T D X`
/// with `M = round(c N)` rows (ties to even).  An explicit-`D` Wishart uses
/// its smallest label.
pub fn sample_matrix(model: &EnsembleModel, n: u64, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let scale = 1.0 / (n as f64).sqrt();
    match model {
        EnsembleModel::Ginibre => {
            Ok(standard_normal_matrix(n as usize, n as usize, rng) * scale)
        }
        EnsembleModel::Goe => {
            let x = standard_normal_matrix(n as usize, n as usize, rng) * scale;
            Ok((&x + &x.t()) / 2f64.sqrt())
        }
        EnsembleModel::Wishart { d, .. } => {
            let x = sample_wishart_factor(model, n, rng)?;
            match d {
                DSpec::Identity => Ok(x.t().dot(&x)),
                DSpec::Explicit(mats) => {
                    let label = *mats.keys().next().expect("validated nonempty");
                    let dm = &resolve_d_matrices(model, &[label], n)?[&label];
                    Ok(x.t().dot(&dm.dot(&x)))
                }
            }
        }
    }
}

/// The rectangular `M x N` Gaussian factor of a Wishart draw.
fn sample_wishart_factor(
    model: &EnsembleModel,
    n: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let m = model.wishart_rows(n)?;
    Ok(standard_normal_matrix(m as usize, n as usize, rng) * (1.0 / (n as f64).sqrt()))
}

/// Per-sample realizations of every colour used by a target.
struct ColourDraws {
    /// Ginibre and GOE colours: the square matrix itself.
    square: BTreeMap<String, Array2<f64>>,
    /// Wishart colours: the rectangular factor, plus `D` per label.
    wishart: BTreeMap<String, (Array2<f64>, BTreeMap<u32, Array2<f64>>)>,
}

fn resolve_d_matrices(model: &EnsembleModel, labels: &[u32], n: u64) -> Result<BTreeMap<u32, Array2<f64>>> {
    let EnsembleModel::Wishart { d, .. } = model else {
        return Err(Error::InvalidExpression("not a Wishart model".into()));
    };
    let mut out = BTreeMap::new();
    match d {
        DSpec::Identity => {}
        DSpec::Explicit(mats) => {
            let m = model.wishart_rows(n)?;
            for &label in labels {
                let mat = mats.get(&label).ok_or(Error::MissingDMatrix {
                    colour: String::new(),
                    label,
                })?;
                if mat.rows() as u64 != m {
                    return Err(Error::Dimension(
                        "explicit D size disagrees with round(cN)".into(),
                    ));
                }
                let mut dense = Array2::<f64>::zeros((mat.rows(), mat.cols()));
                for i in 0..mat.rows() {
                    for j in 0..mat.cols() {
                        dense[(i, j)] = rational_to_f64(mat.get(i, j));
                    }
                }
                out.insert(label, dense);
            }
        }
    }
    Ok(out)
}

/// Trace of the product of a chain of matrices, with the final
/// multiplication folded into an elementwise sum.
fn trace_of_chain(chain: &[Array2<f64>]) -> f64 {
    match chain.len() {
        0 => f64::NAN,
        1 => chain[0].diag().sum(),
        _ => {
            let mut acc = chain[0].clone();
            for m in &chain[1..chain.len() - 1] {
                acc = acc.dot(m);
            }
            let last = &chain[chain.len() - 1];
            // tr(A B) = sum_ij A_ij B_ji
            let mut t = 0.0;
            for i in 0..acc.nrows() {
                for j in 0..acc.ncols() {
                    t += acc[(i, j)] * last[(j, i)];
                }
            }
            t
        }
    }
}

struct Evaluator<'a> {
    models: &'a ModelSet,
    n: u64,
    /// exact centring constants per factor word, resolved up front
    centres: BTreeMap<String, f64>,
}

impl<'a> Evaluator<'a> {
    fn new(models: &'a ModelSet, n: u64, groups: &[&[McFactor]]) -> Result<Self> {
        let mut centres = BTreeMap::new();
        for group in groups {
            for factor in *group {
                if !factor.centred {
                    continue;
                }
                let key = factor_key(factor);
                if centres.contains_key(&key) {
                    continue;
                }
                // Centring constants come from the exact engine at the same
                // N, never from sample means.
                let expr = TraceExpression::single(factor.letters.clone())?;
                let exact = crate::ensembles::exact_moment(&expr, models)?;
                let c_val = wishart_c_value(models, &factor.letters, n)?;
                let value = exact.eval(&BigRational::from_integer(n.into()), &c_val);
                centres.insert(key, rational_to_f64(&value));
            }
        }
        Ok(Self { models, n, centres })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, targets: &[&[McFactor]]) -> Result<ColourDraws> {
        // Colours are drawn in sorted order, once each.
        let mut colours: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for group in targets {
            for factor in *group {
                for letter in &factor.letters {
                    colours
                        .entry(letter.colour.clone())
                        .or_default()
                        .push(letter.label);
                }
            }
        }
        let mut draws = ColourDraws {
            square: BTreeMap::new(),
            wishart: BTreeMap::new(),
        };
        for (colour, labels) in &colours {
            let model = self.models.get(colour)?;
            match model {
                EnsembleModel::Ginibre | EnsembleModel::Goe => {
                    draws
                        .square
                        .insert(colour.clone(), sample_matrix(model, self.n, rng)?);
                }
                EnsembleModel::Wishart { .. } => {
                    let x = sample_wishart_factor(model, self.n, rng)?;
                    let d = resolve_d_matrices(model, labels, self.n)?;
                    draws.wishart.insert(colour.clone(), (x, d));
                }
            }
        }
        Ok(draws)
    }

    /// Expands one letter into its chain of concrete factors.
    fn letter_chain(&self, letter: &Letter, draws: &ColourDraws, out: &mut Vec<Array2<f64>>) -> Result<()> {
        let model = self.models.get(&letter.colour)?;
        match model {
            EnsembleModel::Goe => {
                // symmetric: transpose flag immaterial
                out.push(draws.square[&letter.colour].clone());
            }
            EnsembleModel::Ginibre => {
                let z = &draws.square[&letter.colour];
                out.push(if letter.transpose {
                    z.t().to_owned()
                } else {
                    z.clone()
                });
            }
            EnsembleModel::Wishart { d, .. } => {
                let (x, dmats) = &draws.wishart[&letter.colour];
                // W = X^T D X; a transposed letter transposes D.
                out.push(x.t().to_owned());
                if let DSpec::Explicit(_) = d {
                    let dm = &dmats[&letter.label];
                    out.push(if letter.transpose {
                        dm.t().to_owned()
                    } else {
                        dm.clone()
                    });
                }
                out.push(x.clone());
            }
        }
        Ok(())
    }

    /// Unnormalized trace of one group (a product of factors).
    fn group_trace(&self, group: &[McFactor], draws: &ColourDraws) -> Result<f64> {
        let mut chain: Vec<Array2<f64>> = Vec::new();
        for factor in group {
            if factor.centred {
                // Materialize the factor and subtract its exact mean.
                let mut inner: Vec<Array2<f64>> = Vec::new();
                for letter in &factor.letters {
                    self.letter_chain(letter, draws, &mut inner)?;
                }
                let mut mat = inner[0].clone();
                for m in &inner[1..] {
                    mat = mat.dot(m);
                }
                let centre = self.centres[&factor_key(factor)];
                for i in 0..mat.nrows() {
                    mat[(i, i)] -= centre;
                }
                chain.push(mat);
            } else {
                for letter in &factor.letters {
                    self.letter_chain(letter, draws, &mut chain)?;
                }
            }
        }
        Ok(trace_of_chain(&chain))
    }
}

fn factor_key(factor: &McFactor) -> String {
    let mut key = String::new();
    for l in &factor.letters {
        key.push_str(&format!(
            "{}#{}{}|",
            l.colour,
            l.label,
            if l.transpose { "T" } else { "" }
        ));
    }
    key
}

/// The symbolic `c` value to evaluate Laurent values at: the common
/// identity-Wishart ratio of the word, `M/N` rounded as sampled, or 1 when
/// no identity-Wishart colour occurs.
pub fn wishart_c_value(models: &ModelSet, letters: &[Letter], n: u64) -> Result<BigRational> {
    for letter in letters {
        if let EnsembleModel::Wishart { d: DSpec::Identity, .. } = models.get(&letter.colour)? {
            let m = models.get(&letter.colour)?.wishart_rows(n)?;
            return Ok(BigRational::new(m.into(), n.into()));
        }
    }
    Ok(BigRational::from_integer(1.into()))
}

/// Estimates the target with `samples` draws at size `n`.  `threads`
/// bounds the worker pool; the result is identical for every thread count.
pub fn estimate(
    target: &McTarget,
    models: &ModelSet,
    n: u64,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<MCEstimate> {
    if samples == 0 {
        return Err(Error::InvalidExpression("zero samples".into()));
    }
    let groups: Vec<&[McFactor]> = match target {
        McTarget::MeanProduct(groups) => groups.iter().map(|g| g.as_slice()).collect(),
        McTarget::Covariance(a, b) => vec![a.as_slice(), b.as_slice()],
    };
    let evaluator = Evaluator::new(models, n, &groups)?;

    let n_blocks = samples.div_ceil(BLOCK);
    let run_block = |block: u64| -> Result<Vec<(f64, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ (block + 1)));
        let count = BLOCK.min(samples - block * BLOCK);
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let draws = evaluator.draw(&mut rng, &groups)?;
            match target {
                McTarget::MeanProduct(gs) => {
                    let mut product = 1.0;
                    for g in gs {
                        product *= evaluator.group_trace(g, &draws)? / n as f64;
                    }
                    out.push((product, 0.0));
                }
                McTarget::Covariance(a, b) => {
                    let x = evaluator.group_trace(a, &draws)?;
                    let y = evaluator.group_trace(b, &draws)?;
                    out.push((x, y));
                }
            }
        }
        Ok(out)
    };

    let blocks: Vec<Vec<(f64, f64)>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..n_blocks)
                .into_par_iter()
                .map(run_block)
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..n_blocks).map(run_block).collect::<Result<Vec<_>>>()?
    };
    let values: Vec<(f64, f64)> = blocks.into_iter().flatten().collect();

    let s = values.len() as f64;
    match target {
        McTarget::MeanProduct(_) => {
            let mean = values.iter().map(|v| v.0).sum::<f64>() / s;
            let var = values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (s - 1.0);
            Ok(MCEstimate {
                mean,
                std_error: (var / s).sqrt(),
                samples,
                seed,
            })
        }
        McTarget::Covariance(_, _) => {
            let mx = values.iter().map(|v| v.0).sum::<f64>() / s;
            let my = values.iter().map(|v| v.1).sum::<f64>() / s;
            // Products of deviations; their mean (with the 1/(S-1)
            // correction) is the covariance, their spread its error bar.
            let prods: Vec<f64> = values
                .iter()
                .map(|v| (v.0 - mx) * (v.1 - my))
                .collect();
            let cov = prods.iter().sum::<f64>() / (s - 1.0);
            let pm = prods.iter().sum::<f64>() / s;
            let pvar = prods.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (s - 1.0);
            Ok(MCEstimate {
                mean: cov,
                std_error: (pvar / s).sqrt(),
                samples,
                seed,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::int;

    fn plain_factor(colour: &str) -> McFactor {
        McFactor {
            letters: vec![Letter::plain(colour)],
            centred: false,
        }
    }

    #[test]
    fn goe_sample_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = sample_matrix(&EnsembleModel::Goe, 20, &mut rng).unwrap();
        let diff = (&t - &t.t()).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn wishart_sample_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = sample_matrix(&EnsembleModel::wishart_identity(int(1)), 15, &mut rng).unwrap();
        // x^T W x = |X x|^2 >= 0 for a few random probes
        for probe in 0..5 {
            let mut rng2 = ChaCha8Rng::seed_from_u64(probe);
            let v = standard_normal_matrix(15, 1, &mut rng2);
            let q = v.t().dot(&w).dot(&v)[(0, 0)];
            assert!(q >= -1e-12, "quadratic form {q}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let models = ModelSet::new().with("t", EnsembleModel::Goe);
        let target = McTarget::Covariance(
            vec![plain_factor("t")],
            vec![plain_factor("t")],
        );
        let a = estimate(&target, &models, 30, 600, 42, 1).unwrap();
        let b = estimate(&target, &models, 30, 600, 42, 1).unwrap();
        assert_eq!(a, b);
        // Thread count does not change the result.
        let c = estimate(&target, &models, 30, 600, 42, 3).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn goe_estimates_ignore_transpose_flags() {
        let models = ModelSet::new().with("t", EnsembleModel::Goe);
        let plain = McTarget::MeanProduct(vec![vec![McFactor {
            letters: vec![Letter::plain("t"); 2],
            centred: false,
        }]]);
        let flagged = McTarget::MeanProduct(vec![vec![McFactor {
            letters: vec![Letter::plain("t"), Letter::transposed("t")],
            centred: false,
        }]]);
        let a = estimate(&plain, &models, 25, 400, 5, 1).unwrap();
        let b = estimate(&flagged, &models, 25, 400, 5, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn goe_trace_covariance_near_two() {
        let models = ModelSet::new().with("t", EnsembleModel::Goe);
        let target = McTarget::Covariance(
            vec![plain_factor("t")],
            vec![plain_factor("t")],
        );
        let est = estimate(&target, &models, 50, 4000, 2024, 1).unwrap();
        assert!(
            (est.mean - 2.0).abs() <= 5.0 * est.std_error,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn ginibre_frobenius_mean_near_one() {
        let models = ModelSet::new().with("z", EnsembleModel::Ginibre);
        let target = McTarget::MeanProduct(vec![vec![McFactor {
            letters: vec![Letter::plain("z"), Letter::transposed("z")],
            centred: false,
        }]]);
        let est = estimate(&target, &models, 100, 400, 11, 1).unwrap();
        assert!(
            (est.mean - 1.0).abs() <= 5.0 * est.std_error,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }
}
