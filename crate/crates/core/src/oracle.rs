//! Independent brute-force verification: exact Gaussian expectations of
//! trace products computed directly from matrix entries via the Wick
//! formula.
//!
//! No premaps, no genus expansion.  Each trace is expanded into a sum over
//! index functions, each matrix entry into its underlying standard-normal
//! atoms, and the expectation of every atom monomial is the product of
//! univariate Gaussian moments `(m-1)!!` — the Wick pairing sum in closed
//! form.  Powers of `sqrt(2)` and `sqrt(N)` are tracked symbolically; a
//! nonzero result with an odd residual exponent is a hard error.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};

use crate::ensembles::{DSpec, EnsembleModel, ModelSet, RationalMatrix, TraceExpression};
use crate::error::{Error, Result};

/// Largest matrix size the oracle accepts.
pub const ORACLE_MAX_N: u64 = 4;
/// Largest number of Gaussian atom slots in the expanded product.
pub const ORACLE_MAX_ATOMS: usize = 12;
/// Cap on index-function workload.
const ORACLE_WORK_GUARD: u128 = 1_000_000_000;

/// Identity of one standard normal: (colour, row, column).
type Atom = (u8, u8, u8);

enum OracleLetter {
    Ginibre { colour: u8, transposed: bool },
    Goe { colour: u8 },
    Wishart { colour: u8, transposed: bool, d: RationalMatrix },
}

impl OracleLetter {
    fn atom_slots(&self) -> usize {
        match self {
            OracleLetter::Wishart { .. } => 2,
            _ => 1,
        }
    }

    fn branch_count(&self) -> u128 {
        match self {
            OracleLetter::Ginibre { .. } => 1,
            OracleLetter::Goe { .. } => 2,
            OracleLetter::Wishart { d, .. } => {
                let mut nnz = 0u128;
                for i in 0..d.rows() {
                    for j in 0..d.cols() {
                        if !d.get(i, j).is_zero() {
                            nnz += 1;
                        }
                    }
                }
                nnz
            }
        }
    }
}

/// Exact expectation of the normalized-trace product described by `expr`,
/// computed entrywise at matrix size `n` (Wishart rows `M` from the model).
pub fn wick_expectation(
    expr: &TraceExpression,
    models: &ModelSet,
    n: u64,
) -> Result<BigRational> {
    if n == 0 || n > ORACLE_MAX_N {
        return Err(Error::Unsupported(format!(
            "oracle handles 1 <= N <= {ORACLE_MAX_N}, got {n}"
        )));
    }

    // Resolve letters against the models.
    let mut colour_ids: BTreeMap<String, u8> = BTreeMap::new();
    let mut letters: Vec<OracleLetter> = Vec::new();
    for letter in expr.letters() {
        let model = models.get(&letter.colour)?;
        let next_id = colour_ids.len() as u8;
        let colour = *colour_ids.entry(letter.colour.clone()).or_insert(next_id);
        let resolved = match model {
            EnsembleModel::Ginibre => OracleLetter::Ginibre {
                colour,
                transposed: letter.transpose,
            },
            EnsembleModel::Goe => OracleLetter::Goe { colour },
            EnsembleModel::Wishart { d, .. } => {
                let m = model.wishart_rows(n)? as usize;
                let mat = match d {
                    DSpec::Identity => RationalMatrix::identity(m),
                    DSpec::Explicit(mats) => mats
                        .get(&letter.label)
                        .ok_or_else(|| Error::MissingDMatrix {
                            colour: letter.colour.clone(),
                            label: letter.label,
                        })?
                        .clone(),
                };
                OracleLetter::Wishart {
                    colour,
                    transposed: letter.transpose,
                    d: mat,
                }
            }
        };
        letters.push(resolved);
    }

    let atom_slots: usize = letters.iter().map(|l| l.atom_slots()).sum();
    if atom_slots > ORACLE_MAX_ATOMS {
        return Err(Error::GuardExceeded {
            projected: atom_slots as u128,
            guard: ORACLE_MAX_ATOMS as u128,
        });
    }
    if atom_slots % 2 == 1 {
        return Ok(BigRational::zero()); // odd Gaussian moment
    }
    let positions = letters.len();
    let mut projected: u128 = 1;
    for l in &letters {
        projected = projected.saturating_mul(l.branch_count());
    }
    projected = projected.saturating_mul((n as u128).saturating_pow(positions as u32));
    if projected > ORACLE_WORK_GUARD {
        return Err(Error::GuardExceeded {
            projected,
            guard: ORACLE_WORK_GUARD,
        });
    }

    // gamma as a position successor table (1-based positions).
    let shape = expr.shape();
    let successor: Vec<usize> = (1..=positions as i64)
        .map(|p| (shape.apply(p) - 1) as usize)
        .collect();

    // Sum over index functions and entry expansions.
    let mut acc = BigRational::zero();
    let mut index_fn = vec![0u8; positions];
    let mut atoms: Vec<Atom> = Vec::with_capacity(atom_slots);
    loop {
        dfs_letters(
            &letters,
            &successor,
            &index_fn,
            0,
            &mut atoms,
            &BigRational::one(),
            &mut acc,
        );

        // Advance the index odometer.
        let mut p = 0;
        loop {
            if p == positions {
                return finish(acc, &letters, expr.traces().len(), n);
            }
            index_fn[p] += 1;
            if (index_fn[p] as u64) < n {
                break;
            }
            index_fn[p] = 0;
            p += 1;
        }
        if positions == 0 {
            return finish(acc, &letters, expr.traces().len(), n);
        }
    }
}

fn dfs_letters(
    letters: &[OracleLetter],
    successor: &[usize],
    index_fn: &[u8],
    pos: usize,
    atoms: &mut Vec<Atom>,
    coeff: &BigRational,
    acc: &mut BigRational,
) {
    if pos == letters.len() {
        let moment = gaussian_moment(atoms);
        if moment != 0 {
            *acc += coeff * BigRational::from_integer(BigInt::from(moment));
        }
        return;
    }
    // Entry (a, b) of the letter at this position.
    let a = index_fn[pos];
    let b = index_fn[successor[pos]];
    match &letters[pos] {
        OracleLetter::Ginibre { colour, transposed } => {
            let atom = if *transposed {
                (*colour, b, a)
            } else {
                (*colour, a, b)
            };
            atoms.push(atom);
            dfs_letters(letters, successor, index_fn, pos + 1, atoms, coeff, acc);
            atoms.pop();
        }
        OracleLetter::Goe { colour } => {
            for atom in [(*colour, a, b), (*colour, b, a)] {
                atoms.push(atom);
                dfs_letters(letters, successor, index_fn, pos + 1, atoms, coeff, acc);
                atoms.pop();
            }
        }
        OracleLetter::Wishart {
            colour,
            transposed,
            d,
        } => {
            let (row_idx, col_idx) = if *transposed { (b, a) } else { (a, b) };
            for s in 0..d.rows() {
                for t in 0..d.cols() {
                    let dst = d.get(s, t);
                    if dst.is_zero() {
                        continue;
                    }
                    atoms.push((*colour, s as u8, row_idx));
                    atoms.push((*colour, t as u8, col_idx));
                    let coeff = coeff * dst;
                    dfs_letters(letters, successor, index_fn, pos + 1, atoms, &coeff, acc);
                    atoms.pop();
                    atoms.pop();
                }
            }
        }
    }
}

/// `E[prod of atoms]`: product over distinct atoms of `(count-1)!!`, zero if
/// any count is odd.
fn gaussian_moment(atoms: &[Atom]) -> u128 {
    let mut sorted: Vec<Atom> = atoms.to_vec();
    sorted.sort_unstable();
    let mut product: u128 = 1;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let count = j - i;
        if count % 2 == 1 {
            return 0;
        }
        product *= crate::diagrams::double_factorial(count as i64 - 1);
        i = j;
    }
    product
}

fn finish(
    acc: BigRational,
    letters: &[OracleLetter],
    trace_count: usize,
    n: u64,
) -> Result<BigRational> {
    let g = letters
        .iter()
        .filter(|l| matches!(l, OracleLetter::Goe { .. }))
        .count() as i64;
    let z = letters
        .iter()
        .filter(|l| matches!(l, OracleLetter::Ginibre { .. }))
        .count() as i64;
    let w = letters
        .iter()
        .filter(|l| matches!(l, OracleLetter::Wishart { .. }))
        .count() as i64;
    if acc.is_zero() {
        return Ok(acc);
    }
    if g % 2 != 0 || (g + z) % 2 != 0 {
        return Err(Error::InvalidExpression(
            "nonzero expectation with an odd residual sqrt exponent".into(),
        ));
    }
    let n_rat = BigRational::from_integer(BigInt::from(n));
    let scale = crate::laurent::rational_pow(&crate::laurent::int(2), -(g / 2))
        * crate::laurent::rational_pow(&n_rat, -((g + z) / 2 + w + trace_count as i64));
    Ok(acc * scale)
}

/// Convenience wrapper used by the verification harness and CLI: the oracle
/// value for a trace expression at size `n`.
pub fn mc_crosscheck_value(
    expr: &TraceExpression,
    models: &ModelSet,
    n: u64,
) -> Result<BigRational> {
    wick_expectation(expr, models, n)
}
