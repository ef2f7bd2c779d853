//! Cross-route consistency checks.
//!
//! The exact engine sums premap tuples.  These tests recompute the same
//! quantities along independent routes: the raw pairing sum over doubled
//! points (no premaps), moment-cumulant reassembly over set partitions, and
//! the limit enumerations against exact constant terms.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, One, Zero};

use premaps::asymptotics::{phi1, phi2};
use premaps::diagrams::visit_pairings;
use premaps::ensembles::{
    exact_moment, exact_trace_cumulant, trace_along, EnsembleModel, Letter, ModelSet,
    RationalMatrix, TraceExpression,
};
use premaps::laurent::{int, rat, rational_pow};
use premaps::oracle::wick_expectation;
use premaps::perm::{parse_cycles, SignPattern, SignedPermutation};

fn pm_domain(n: usize) -> BTreeSet<i64> {
    (1..=n as i64).flat_map(|k| [k, -k]).collect()
}

/// The raw genus-expansion sum for a word of rectangular Gaussian letters
/// `X^{(eps(k))} Y_k`: pairings of `[n]` weighted by
/// `N^(#(g-^{-1} d_eps rho delta rho d_eps g+)/2 - #(gamma) - n/2)`, with the
/// trace of the `Y` data along the particular cycles.  Everything is a
/// plain cycle count; no premap class enumeration is involved.
fn pairing_sum(
    gamma: &SignedPermutation,
    trace_count: usize,
    eps: &SignPattern,
    n: usize,
    big_n: i64,
    y_data: &dyn Fn(&[Vec<i64>]) -> BigRational,
) -> BigRational {
    let points: Vec<i64> = (1..=n as i64).collect();
    let domain = pm_domain(n);
    let delta = SignedPermutation::from_mapping(
        (1..=n as i64).flat_map(|k| [(k, -k), (-k, k)]),
    )
    .unwrap();
    let gamma_minus_inv = gamma.mirror().inverse();
    let mut total = BigRational::zero();
    visit_pairings(&points, &mut |rho| {
        let twisted = eps.twist(&rho.compose(&delta.compose(rho)));
        let sigma = gamma_minus_inv.compose(&twisted.compose(gamma));
        let cycles = sigma.cycles_on(&domain).unwrap();
        let half_count = cycles.len() as i64 / 2;
        let particular: Vec<Vec<i64>> =
            cycles.into_iter().filter(|c| c[0] > 0).collect();
        let weight = y_data(&particular);
        let exponent = half_count - trace_count as i64 - n as i64 / 2;
        total += weight * rational_pow(&int(big_n), exponent);
    });
    total
}

/// GOE by direct expansion: average the pairing sum over all sign patterns,
/// scaled by `2^(-n/2)`; the `Y` data is trivial.
fn goe_direct(traces: &[usize], n_val: i64) -> BigRational {
    let n: usize = traces.iter().sum();
    if n % 2 == 1 {
        return BigRational::zero();
    }
    let gamma = shape_of(traces);
    let mut total = BigRational::zero();
    for mask in 0..(1u32 << n) {
        let eps = SignPattern::new(
            (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect(),
        )
        .unwrap();
        total += pairing_sum(&gamma, traces.len(), &eps, n, n_val, &|_| BigRational::one());
    }
    total * rational_pow(&int(2), -(n as i64) / 2)
}

/// Ginibre by direct expansion at a fixed sign pattern.
fn ginibre_direct(traces: &[usize], eps: &SignPattern, n_val: i64) -> BigRational {
    let n: usize = traces.iter().sum();
    let gamma = shape_of(traces);
    pairing_sum(&gamma, traces.len(), eps, n, n_val, &|_| BigRational::one())
}

/// Wishart by direct expansion over the doubled word
/// `X^T D_1, X, X^T D_2, X, ...`: `2n` letters with alternating signs; the
/// odd particular cycles trace the `D` data, the even ones are trivial.
fn wishart_direct(traces: &[usize], d: &RationalMatrix, n_val: i64) -> BigRational {
    let n: usize = traces.iter().sum();
    let gamma = shape_of(traces);
    // gamma' on [2n]: odd k -> k + 1, even k -> 2 gamma(k/2) - 1.
    let mut mapping = Vec::new();
    for k in 1..=2 * n as i64 {
        let image = if k % 2 == 1 {
            k + 1
        } else {
            2 * gamma.apply(k / 2) - 1
        };
        if image != k {
            mapping.push((k, image));
        }
    }
    let gamma_doubled = SignedPermutation::from_mapping(mapping).unwrap();
    let eps = SignPattern::new(
        (1..=2 * n).map(|k| if k % 2 == 1 { -1 } else { 1 }).collect(),
    )
    .unwrap();
    let d_trace = |particular: &[Vec<i64>]| -> BigRational {
        let mut acc = BigRational::one();
        for cycle in particular {
            let odd = cycle.iter().all(|&k| k.abs() % 2 == 1);
            let even = cycle.iter().all(|&k| k.abs() % 2 == 0);
            assert!(odd || even, "cycle mixes doubled parities: {cycle:?}");
            if even {
                continue; // identity Y data traces to one
            }
            // D sits at the odd slots; divide each trace by N.
            let mats: BTreeMap<i64, RationalMatrix> = cycle
                .iter()
                .map(|&k| (k.abs(), d.clone()))
                .collect();
            let pi = SignedPermutation::from_cycles(&[cycle.clone()]).unwrap();
            let domain: BTreeSet<i64> = cycle.iter().copied().collect();
            acc *= trace_along(&pi, &domain, &mats).unwrap() / int(n_val);
        }
        acc
    };
    pairing_sum(&gamma_doubled, traces.len(), &eps, 2 * n, n_val, &d_trace)
}

fn shape_of(traces: &[usize]) -> SignedPermutation {
    let mut cycles = Vec::new();
    let mut next = 1i64;
    for &t in traces {
        cycles.push((next..next + t as i64).collect::<Vec<_>>());
        next += t as i64;
    }
    SignedPermutation::from_cycles(&cycles).unwrap()
}

fn trace_partitions(n: usize) -> Vec<Vec<usize>> {
    // all ordered compositions of n, as trace shapes
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for rest in trace_partitions(n - first) {
            let mut v = vec![first];
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

#[test]
fn goe_engine_matches_direct_pairing_sum() {
    let models = ModelSet::new().with("t", EnsembleModel::Goe);
    for n in 1..=5usize {
        for traces in trace_partitions(n) {
            let expr = TraceExpression::new(
                traces.iter().map(|&t| vec![Letter::plain("t"); t]).collect(),
            )
            .unwrap();
            let engine = exact_moment(&expr, &models).unwrap();
            for n_val in [2i64, 3, 5] {
                assert_eq!(
                    engine.eval(&int(n_val), &int(1)),
                    goe_direct(&traces, n_val),
                    "GOE direct route, traces {traces:?}, N={n_val}"
                );
            }
        }
    }
}

#[test]
fn ginibre_engine_matches_direct_pairing_sum() {
    let models = ModelSet::new().with("z", EnsembleModel::Ginibre);
    for n in 1..=5usize {
        for traces in trace_partitions(n) {
            for mask in 0..(1u32 << n) {
                let mut letters = Vec::new();
                for i in 0..n {
                    letters.push(Letter::plain("z").with_transpose(mask >> i & 1 == 1));
                }
                let mut words = Vec::new();
                let mut it = letters.into_iter();
                for &t in &traces {
                    words.push((0..t).map(|_| it.next().unwrap()).collect::<Vec<_>>());
                }
                let expr = TraceExpression::new(words).unwrap();
                let engine = exact_moment(&expr, &models).unwrap();
                let eps = SignPattern::new(
                    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect(),
                )
                .unwrap();
                for n_val in [2i64, 3] {
                    assert_eq!(
                        engine.eval(&int(n_val), &int(1)),
                        ginibre_direct(&traces, &eps, n_val),
                        "Ginibre direct route, traces {traces:?}, mask {mask:#b}, N={n_val}"
                    );
                }
            }
        }
    }
}

#[test]
fn wishart_engine_matches_direct_pairing_sum() {
    for n in 1..=5usize {
        for traces in trace_partitions(n) {
            let expr = TraceExpression::new(
                traces.iter().map(|&t| vec![Letter::plain("w"); t]).collect(),
            )
            .unwrap();
            // identity D at square and rectangular aspect ratios
            for (n_val, m_val) in [(2i64, 2i64), (3, 3), (3, 6), (5, 5)] {
                let models = ModelSet::new().with(
                    "w",
                    EnsembleModel::wishart_identity(rat(m_val, n_val)),
                );
                let engine = exact_moment(&expr, &models).unwrap();
                let d = RationalMatrix::identity(m_val as usize);
                assert_eq!(
                    engine.eval(&int(n_val), &rat(m_val, n_val)),
                    wishart_direct(&traces, &d, n_val),
                    "identity-D direct route, traces {traces:?}, N={n_val}, M={m_val}"
                );
            }
            // one explicit D
            let d = RationalMatrix::diagonal(vec![int(1), int(2)]);
            let models = ModelSet::new().with(
                "w",
                EnsembleModel::wishart_explicit(
                    int(1),
                    [(1u32, d.clone())].into_iter().collect(),
                )
                .unwrap(),
            );
            let engine = exact_moment(&expr, &models).unwrap();
            assert_eq!(
                engine.eval(&int(2), &int(1)),
                wishart_direct(&traces, &d, 2),
                "explicit-D direct route, traces {traces:?}"
            );
        }
    }
}

#[test]
fn moment_cumulant_reassembly() {
    // E(Y1...Yr) = sum over set partitions of products of cumulants, as
    // exact Laurent values in N, with Y_k = Tr(w_k).
    let models = ModelSet::new()
        .with("t", EnsembleModel::Goe)
        .with("w", EnsembleModel::wishart_identity(int(1)));
    let words: Vec<Vec<Letter>> = vec![
        vec![Letter::plain("t")],
        vec![Letter::plain("t"); 2],
        vec![Letter::plain("w")],
        vec![Letter::plain("w"), Letter::plain("t")],
    ];
    let partitions3: Vec<Vec<Vec<usize>>> = vec![
        vec![vec![0], vec![1], vec![2]],
        vec![vec![0, 1], vec![2]],
        vec![vec![0, 2], vec![1]],
        vec![vec![1, 2], vec![0]],
        vec![vec![0, 1, 2]],
    ];
    for a in 0..words.len() {
        for b in 0..words.len() {
            for c in 0..words.len() {
                let chosen = [&words[a], &words[b], &words[c]];
                let total: usize = chosen.iter().map(|w| w.len()).sum();
                if total > 5 {
                    continue;
                }
                let expr = TraceExpression::new(chosen.iter().map(|w| (*w).clone()).collect())
                    .unwrap();
                let moment = exact_moment(&expr, &models).unwrap().shift_n(3);
                let mut reassembled = premaps::laurent::LaurentValue::zero();
                for partition in &partitions3 {
                    let mut product = premaps::laurent::LaurentValue::one();
                    for block in partition {
                        let traces: Vec<Vec<Letter>> =
                            block.iter().map(|&i| chosen[i].clone()).collect();
                        product = product
                            .mul(&exact_trace_cumulant(&traces, &models).unwrap());
                    }
                    reassembled = reassembled.add(&product);
                }
                assert_eq!(moment, reassembled, "words {a},{b},{c}");
            }
        }
    }
}

#[test]
fn wishart_transpose_folding_matches_oracle() {
    // A non-symmetric D exposes the W^T = X^T D^T X fold.
    let d = RationalMatrix::from_rows(vec![
        vec![int(1), int(1)],
        vec![int(0), int(2)],
    ])
    .unwrap();
    let models = ModelSet::new().with(
        "w",
        EnsembleModel::wishart_explicit(int(1), [(1u32, d)].into_iter().collect()).unwrap(),
    );
    for n in 1..=3usize {
        for mask in 0..(1u32 << n) {
            let letters: Vec<Letter> = (0..n)
                .map(|i| Letter::plain("w").with_transpose(mask >> i & 1 == 1))
                .collect();
            let expr = TraceExpression::single(letters).unwrap();
            let engine = exact_moment(&expr, &models).unwrap();
            assert_eq!(
                engine.eval(&int(2), &int(1)),
                wick_expectation(&expr, &models, 2).unwrap(),
                "transposed Wishart word, n={n}, mask={mask:#b}"
            );
        }
    }
}

#[test]
fn phi1_matches_exact_constant_term() {
    let goe = ModelSet::new().with("t", EnsembleModel::Goe);
    for n in 1..=6usize {
        let word = vec![Letter::plain("t"); n];
        let limit = phi1(&word, &goe).unwrap().value;
        let exact = exact_moment(&TraceExpression::single(word).unwrap(), &goe).unwrap();
        assert_eq!(limit, exact.constant_term(), "GOE n = {n}");
    }
    let wishart = ModelSet::new().with("w", EnsembleModel::wishart_identity(int(1)));
    for n in 1..=5usize {
        let word = vec![Letter::plain("w"); n];
        let limit = phi1(&word, &wishart).unwrap().value;
        let exact = exact_moment(&TraceExpression::single(word).unwrap(), &wishart).unwrap();
        assert_eq!(limit, exact.constant_term(), "Wishart n = {n}");
    }
    let ginibre = ModelSet::new().with("z", EnsembleModel::Ginibre);
    for n in 1..=4usize {
        for mask in 0..(1u32 << n) {
            let word: Vec<Letter> = (0..n)
                .map(|i| Letter::plain("z").with_transpose(mask >> i & 1 == 1))
                .collect();
            let limit = phi1(&word, &ginibre).unwrap().value;
            let exact =
                exact_moment(&TraceExpression::single(word).unwrap(), &ginibre).unwrap();
            assert_eq!(limit, exact.constant_term(), "Ginibre n = {n}, mask {mask:#b}");
        }
    }
}

#[test]
fn phi2_matches_exact_constant_term() {
    let goe = ModelSet::new().with("t", EnsembleModel::Goe);
    for p in 1..=3usize {
        for q in 1..=3usize {
            let w1 = vec![Letter::plain("t"); p];
            let w2 = vec![Letter::plain("t"); q];
            let limit = phi2(&w1, &w2, &goe).unwrap().value;
            let exact = exact_trace_cumulant(&[w1, w2], &goe).unwrap();
            assert_eq!(limit, exact.constant_term(), "GOE ({p},{q})");
        }
    }
    let wishart = ModelSet::new().with("w", EnsembleModel::wishart_identity(int(1)));
    for p in 1..=3usize {
        for q in 1..=3usize {
            let w1 = vec![Letter::plain("w"); p];
            let w2 = vec![Letter::plain("w"); q];
            let limit = phi2(&w1, &w2, &wishart).unwrap().value;
            let exact = exact_trace_cumulant(&[w1, w2], &wishart).unwrap();
            assert_eq!(limit, exact.constant_term(), "Wishart ({p},{q})");
        }
    }
    // Ginibre fluctuations depend on where the transposes sit; the
    // enumeration has no closed form and must track the exact engine.
    let ginibre = ModelSet::new().with("z", EnsembleModel::Ginibre);
    for p in 1..=2usize {
        for q in 1..=2usize {
            for mask in 0..(1u32 << (p + q)) {
                let letters: Vec<Letter> = (0..p + q)
                    .map(|i| Letter::plain("z").with_transpose(mask >> i & 1 == 1))
                    .collect();
                let w1 = letters[..p].to_vec();
                let w2 = letters[p..].to_vec();
                let limit = phi2(&w1, &w2, &ginibre).unwrap().value;
                let exact = exact_trace_cumulant(&[w1, w2], &ginibre).unwrap();
                assert_eq!(
                    limit,
                    exact.constant_term(),
                    "Ginibre ({p},{q}), mask {mask:#b}"
                );
            }
        }
    }
}

#[test]
fn ginibre_transposes_change_fluctuations() {
    // Ginibre fluctuations depend on the placement of transposes: moving a
    // single transpose within one word kills the (ZZ | ZZ) covariance.
    let ginibre = ModelSet::new().with("z", EnsembleModel::Ginibre);
    let plain = vec![Letter::plain("z"); 2];
    let shifted = vec![Letter::transposed("z"), Letter::plain("z")];
    let v_plain = phi2(&plain, &plain, &ginibre).unwrap().value;
    let v_shifted = phi2(&shifted, &plain, &ginibre).unwrap().value;
    assert_eq!(v_plain.as_rational().unwrap(), int(2));
    assert!(v_shifted.is_zero());
}

#[test]
fn worked_example_premap_matches_pairing() {
    // The five-Wishart worked product: the premap attached to the pairing
    // (1,5)(2,7)(3,9)(4,10)(6,8) of the doubled points contributes with
    // chi = 0 and D-weight tr(D1 D4 D3^T) tr(D2 D5^T).
    let (gamma, _) = parse_cycles("(1,2,3)(4,5)").unwrap();
    let pi: SignedPermutation = "(1,-3,4)(-4,3,-1)(2,-5)(5,-2)".parse().unwrap();
    let i: BTreeSet<i64> = (1..=5).collect();
    let data = premaps::diagrams::euler_characteristic(&gamma, &i, &pi).unwrap();
    assert_eq!(data.chi(), 0);

    // Its weight traces the particular cycles of pi^{-1}.
    let pi_inv = pi.inverse();
    let cycles = pi_inv.particular_cycles_on(&i).unwrap();
    let rendered: Vec<String> = cycles
        .iter()
        .map(|c| {
            c.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    assert_eq!(rendered, vec!["1,4,-3", "2,-5"]);
}
