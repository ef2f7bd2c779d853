//! Exact finite-`N` expectations and cumulants of products of traces of real
//! Ginibre, GOE, and real Wishart words.
//!
//! Everything funnels through one sum: expectations of trace products expand
//! over tuples of premaps, one per independent ensemble, each term weighted
//! by `N^(chi - 2#(gamma))` times the ensemble weight.  Cumulants restrict
//! the sum to tuples whose surface is connected across the trace blocks, and
//! centred cumulants additionally require every factor block to couple to
//! some other block.  Centring is purely combinatorial; nothing is ever
//! subtracted numerically.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, One, Zero};

use crate::diagrams::DiagramClass;
use crate::error::{Error, Result};
use crate::laurent::LaurentValue;
use crate::perm::{SignedPermutation, UnionFind};

/// One occurrence of an ensemble matrix inside a trace word.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Letter {
    pub colour: String,
    /// Selects `D_label` for Wishart colours; ignored for Ginibre and GOE.
    pub label: u32,
    pub transpose: bool,
}

impl Letter {
    pub fn plain(colour: &str) -> Self {
        Self {
            colour: colour.to_string(),
            label: 1,
            transpose: false,
        }
    }

    pub fn transposed(colour: &str) -> Self {
        Self {
            transpose: true,
            ..Self::plain(colour)
        }
    }

    pub fn labelled(colour: &str, label: u32) -> Self {
        Self {
            label,
            ..Self::plain(colour)
        }
    }

    pub fn with_transpose(mut self, t: bool) -> Self {
        self.transpose = t;
        self
    }
}

/// A word of letters split into traces; the trace shape is the permutation
/// whose cycles are the traces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceExpression {
    traces: Vec<Vec<Letter>>,
}

impl TraceExpression {
    pub fn new(traces: Vec<Vec<Letter>>) -> Result<Self> {
        if traces.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidExpression("empty trace".into()));
        }
        Ok(Self { traces })
    }

    pub fn single(word: Vec<Letter>) -> Result<Self> {
        Self::new(vec![word])
    }

    pub fn traces(&self) -> &[Vec<Letter>] {
        &self.traces
    }

    pub fn letter_count(&self) -> usize {
        self.traces.iter().map(|t| t.len()).sum()
    }

    /// Letters in position order (positions are 1-based across all traces).
    pub fn letters(&self) -> impl Iterator<Item = &Letter> {
        self.traces.iter().flatten()
    }

    /// The shape permutation on `[n]` whose cycles delimit the traces.
    pub fn shape(&self) -> SignedPermutation {
        let mut cycles = Vec::new();
        let mut next = 1i64;
        for t in &self.traces {
            let cycle: Vec<i64> = (0..t.len()).map(|i| next + i as i64).collect();
            next += t.len() as i64;
            cycles.push(cycle);
        }
        SignedPermutation::from_cycles(&cycles).expect("trace cycles are disjoint")
    }
}

/// An exact rational matrix, used for explicit Wishart `D` data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diagonal(entries: Vec<BigRational>) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.into_iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = m.get(i, j) + a * other.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        Ok(m)
    }

    pub fn trace(&self) -> Result<BigRational> {
        if self.rows != self.cols {
            return Err(Error::Dimension("trace of a non-square matrix".into()));
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }
}

/// Deterministic `D` data for a Wishart colour.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DSpec {
    /// Every `D_label` is the `M x M` identity; weights stay symbolic in
    /// `c = M/N`.
    Identity,
    /// Explicit square rational matrices keyed by label, all the same size.
    Explicit(BTreeMap<u32, RationalMatrix>),
}

/// One independent matrix ensemble.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EnsembleModel {
    Ginibre,
    Goe,
    Wishart { c: BigRational, d: DSpec },
}

impl EnsembleModel {
    pub fn wishart_identity(c: BigRational) -> Self {
        EnsembleModel::Wishart {
            c,
            d: DSpec::Identity,
        }
    }

    pub fn wishart_explicit(c: BigRational, mats: BTreeMap<u32, RationalMatrix>) -> Result<Self> {
        let mut size = None;
        for m in mats.values() {
            if m.rows() != m.cols() {
                return Err(Error::Dimension("explicit D matrices must be square".into()));
            }
            match size {
                None => size = Some(m.rows()),
                Some(s) if s != m.rows() => {
                    return Err(Error::Dimension(
                        "explicit D matrices must share one size".into(),
                    ))
                }
                _ => {}
            }
        }
        if size.is_none() {
            return Err(Error::Dimension("explicit D spec needs a matrix".into()));
        }
        Ok(EnsembleModel::Wishart {
            c,
            d: DSpec::Explicit(mats),
        })
    }

    /// The premap class summed over for this ensemble.
    pub fn diagram_class(&self) -> DiagramClass {
        match self {
            EnsembleModel::Ginibre => DiagramClass::GinibreClass,
            EnsembleModel::Goe => DiagramClass::PairingPremaps,
            EnsembleModel::Wishart { .. } => DiagramClass::AllPremaps,
        }
    }

    /// Row count of the rectangular Gaussian factor at matrix size `n`.
    pub fn wishart_rows(&self, n: u64) -> Result<u64> {
        match self {
            EnsembleModel::Wishart { c, d } => match d {
                DSpec::Explicit(mats) => {
                    Ok(mats.values().next().expect("validated nonempty").rows() as u64)
                }
                DSpec::Identity => Ok(round_ties_even(&(c * BigRational::from_integer(n.into())))),
            },
            _ => Err(Error::InvalidExpression("not a Wishart model".into())),
        }
    }
}

/// Rounds a nonnegative rational half-to-even.
pub fn round_ties_even(x: &BigRational) -> u64 {
    let floor = x.floor();
    let frac = x - &floor;
    let floor: u64 = floor
        .to_integer()
        .try_into()
        .expect("round_ties_even takes small nonnegative values");
    let half = BigRational::new(1.into(), 2.into());
    if frac > half {
        floor + 1
    } else if frac < half {
        floor
    } else if floor % 2 == 0 {
        floor
    } else {
        floor + 1
    }
}

/// The registered ensembles, keyed by colour.
#[derive(Clone, Default, Debug)]
pub struct ModelSet {
    models: BTreeMap<String, EnsembleModel>,
}

impl ModelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, colour: &str, model: EnsembleModel) {
        self.models.insert(colour.to_string(), model);
    }

    pub fn with(mut self, colour: &str, model: EnsembleModel) -> Self {
        self.insert(colour, model);
        self
    }

    pub fn get(&self, colour: &str) -> Result<&EnsembleModel> {
        self.models
            .get(colour)
            .ok_or_else(|| Error::UnknownColour(colour.to_string()))
    }

    pub fn colours(&self) -> impl Iterator<Item = &String> {
        self.models.keys()
    }
}

/// Product over the cycles of `pi` on `domain` of the trace of the matrix
/// product along the cycle; a negative point transposes its matrix.
pub fn trace_along(
    pi: &SignedPermutation,
    domain: &BTreeSet<i64>,
    mats: &BTreeMap<i64, RationalMatrix>,
) -> Result<BigRational> {
    let mut total = BigRational::one();
    for cycle in pi.cycles_on(domain)? {
        let mut product: Option<RationalMatrix> = None;
        for &k in &cycle {
            let base = mats
                .get(&k.abs())
                .ok_or_else(|| Error::Dimension(format!("no matrix for index {}", k.abs())))?;
            let factor = if k < 0 { base.transpose() } else { base.clone() };
            product = Some(match product {
                None => factor,
                Some(p) => p.mul(&factor)?,
            });
        }
        total *= product.expect("cycles are nonempty").trace()?;
    }
    Ok(total)
}

/// One multiplicative weight factor: `coeff * N^n_exp * c^c_exp`.
#[derive(Clone, Debug)]
struct WeightTerm {
    n_exp: i64,
    c_exp: u32,
    coeff: BigRational,
}

impl WeightTerm {
    fn one() -> Self {
        Self {
            n_exp: 0,
            c_exp: 0,
            coeff: BigRational::one(),
        }
    }
}

/// How a colour weighs its premaps.
#[derive(Clone, Debug)]
enum WeightSpec {
    /// Ginibre and GOE.
    One,
    /// Identity-`D` Wishart: `c` to the number of particular cycles.
    IdentityWishart,
    /// Explicit-`D` Wishart: normalized traces of `D` products along the
    /// particular cycles of the inverse premap.
    ExplicitWishart {
        mats: BTreeMap<u32, RationalMatrix>,
        /// position -> (label, extra transpose folded from the letter)
        assign: BTreeMap<i64, (u32, bool)>,
    },
}

fn weight_of(spec: &WeightSpec, pi: &SignedPermutation, i: &BTreeSet<i64>) -> Result<WeightTerm> {
    match spec {
        WeightSpec::One => Ok(WeightTerm::one()),
        WeightSpec::IdentityWishart => {
            let pm: BTreeSet<i64> = i.iter().flat_map(|&k| [k, -k]).collect();
            let half = pi.cycle_count_on(&pm)? / 2;
            Ok(WeightTerm {
                n_exp: 0,
                c_exp: half as u32,
                coeff: BigRational::one(),
            })
        }
        WeightSpec::ExplicitWishart { mats, assign } => {
            let inv = pi.inverse();
            let cycles = inv.particular_cycles_on(i)?;
            let mut coeff = BigRational::one();
            for cycle in &cycles {
                let mut product: Option<RationalMatrix> = None;
                for &k in cycle {
                    let (label, pre_t) = assign
                        .get(&k.abs())
                        .ok_or_else(|| Error::Dimension(format!("no label at position {k}")))?;
                    let base = mats.get(label).ok_or_else(|| Error::MissingDMatrix {
                        colour: String::new(),
                        label: *label,
                    })?;
                    let transposed = (k < 0) ^ pre_t;
                    let factor = if transposed {
                        base.transpose()
                    } else {
                        base.clone()
                    };
                    product = Some(match product {
                        None => factor,
                        Some(p) => p.mul(&factor)?,
                    });
                }
                coeff *= product.expect("nonempty cycle").trace()?;
            }
            Ok(WeightTerm {
                n_exp: -(cycles.len() as i64),
                c_exp: 0,
                coeff,
            })
        }
    }
}

/// Public weight of one premap under a model: the `f_c` factor of the genus
/// expansion as a Laurent value.  `d_assign` maps each position of the
/// colour to its `D` label and folded transpose flag (Wishart only).
pub fn premap_weight(
    model: &EnsembleModel,
    pi: &SignedPermutation,
    i: &BTreeSet<i64>,
    d_assign: &BTreeMap<i64, (u32, bool)>,
) -> Result<LaurentValue> {
    if !model.diagram_class().contains_on(pi, i) {
        return Err(Error::NotAPremap(format!(
            "{pi} is not in the {:?} class over ±{i:?}",
            model.diagram_class()
        )));
    }
    let spec = match model {
        EnsembleModel::Ginibre | EnsembleModel::Goe => WeightSpec::One,
        EnsembleModel::Wishart { d, .. } => match d {
            DSpec::Identity => WeightSpec::IdentityWishart,
            DSpec::Explicit(mats) => WeightSpec::ExplicitWishart {
                mats: mats.clone(),
                assign: d_assign.clone(),
            },
        },
    };
    let w = weight_of(&spec, pi, i)?;
    Ok(LaurentValue::monomial(w.n_exp, w.c_exp, w.coeff))
}

/// Default cap on the number of premap tuples an exact sum may visit.
pub const DEFAULT_TERM_GUARD: u128 = 100_000_000;

/// A letter after transpose folding: Wishart transposes move onto the `D`
/// matrix, GOE transposes vanish, Ginibre transposes stay as signs.
#[derive(Clone, Debug)]
struct FoldedLetter {
    colour: String,
    eps: i8,
    label: u32,
    d_transposed: bool,
}

fn fold_letters<'a>(
    letters: impl Iterator<Item = &'a Letter>,
    models: &ModelSet,
) -> Result<Vec<FoldedLetter>> {
    letters
        .map(|letter| {
            let model = models.get(&letter.colour)?;
            let folded = match model {
                EnsembleModel::Ginibre => FoldedLetter {
                    colour: letter.colour.clone(),
                    eps: if letter.transpose { -1 } else { 1 },
                    label: letter.label,
                    d_transposed: false,
                },
                EnsembleModel::Goe => FoldedLetter {
                    colour: letter.colour.clone(),
                    eps: 1,
                    label: letter.label,
                    d_transposed: false,
                },
                EnsembleModel::Wishart { .. } => FoldedLetter {
                    colour: letter.colour.clone(),
                    eps: 1,
                    label: letter.label,
                    d_transposed: letter.transpose,
                },
            };
            Ok(folded)
        })
        .collect()
}

/// Connectivity conditions layered on top of the plain moment sum.
struct Filters {
    /// factor block of each position (0-based), length `n`
    block_of_pos: Vec<usize>,
    n_blocks: usize,
    /// trace group of each block
    v_of_block: Vec<usize>,
    n_v: usize,
    /// require the premap to connect all trace groups
    require_v_connected: bool,
    /// require every block to connect to some other block
    require_blocks_external: bool,
}

impl Filters {
    fn moment(n: usize) -> Self {
        Self {
            block_of_pos: vec![0; n],
            n_blocks: 1,
            v_of_block: vec![0],
            n_v: 1,
            require_v_connected: false,
            require_blocks_external: false,
        }
    }
}

struct ColourGroup {
    class: DiagramClass,
    spec: WeightSpec,
    /// sorted global positions of the colour
    positions: BTreeSet<i64>,
    count: u128,
}

/// Flat-index helpers over the doubled domain `±[n]`.
#[inline]
fn idx(k: i64) -> usize {
    if k > 0 {
        2 * (k as usize - 1)
    } else {
        2 * ((-k) as usize - 1) + 1
    }
}

#[inline]
fn point(i: usize) -> i64 {
    if i % 2 == 0 {
        (i / 2 + 1) as i64
    } else {
        -(((i - 1) / 2 + 1) as i64)
    }
}

fn count_cycles_fn(dim: usize, next: impl Fn(usize) -> usize) -> usize {
    debug_assert!(dim <= 64);
    let mut visited: u64 = 0;
    let mut count = 0;
    for start in 0..dim {
        if visited & (1 << start) != 0 {
            continue;
        }
        count += 1;
        let mut cur = start;
        while visited & (1 << cur) == 0 {
            visited |= 1 << cur;
            cur = next(cur);
        }
    }
    count
}

/// The shared genus-expansion sum.  Returns the normalized-trace value
/// `sum N^(chi(gamma, twist(pi)) - 2 #(gamma)) * product of weights` over
/// tuples of class members passing the filters.
fn genus_sum(
    folded: &[FoldedLetter],
    gamma: &SignedPermutation,
    trace_count: usize,
    models: &ModelSet,
    filters: &Filters,
    guard: u128,
) -> Result<LaurentValue> {
    let n = folded.len();
    if n == 0 {
        return Ok(LaurentValue::one());
    }
    if n > 12 {
        return Err(Error::GuardExceeded {
            projected: u128::MAX,
            guard,
        });
    }

    // Group positions by colour, preserving first-use order.
    let mut groups: Vec<ColourGroup> = Vec::new();
    let mut group_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut identity_wishart_ratio: Option<BigRational> = None;
    for (pos0, letter) in folded.iter().enumerate() {
        let pos = (pos0 + 1) as i64;
        let gi = match group_index.get(&letter.colour) {
            Some(&gi) => gi,
            None => {
                let model = models.get(&letter.colour)?;
                let spec = match model {
                    EnsembleModel::Ginibre | EnsembleModel::Goe => WeightSpec::One,
                    EnsembleModel::Wishart { c, d } => match d {
                        DSpec::Identity => {
                            match &identity_wishart_ratio {
                                None => identity_wishart_ratio = Some(c.clone()),
                                Some(prev) if prev == c => {}
                                Some(_) => {
                                    return Err(Error::Unsupported(
                                        "identity-D Wishart colours with different ratios \
                                         cannot share one symbolic c"
                                            .into(),
                                    ))
                                }
                            }
                            WeightSpec::IdentityWishart
                        }
                        DSpec::Explicit(mats) => WeightSpec::ExplicitWishart {
                            mats: mats.clone(),
                            assign: BTreeMap::new(),
                        },
                    },
                };
                groups.push(ColourGroup {
                    class: model.diagram_class(),
                    spec,
                    positions: BTreeSet::new(),
                    count: 0,
                });
                group_index.insert(letter.colour.clone(), groups.len() - 1);
                groups.len() - 1
            }
        };
        groups[gi].positions.insert(pos);
        if let WeightSpec::ExplicitWishart { assign, .. } = &mut groups[gi].spec {
            assign.insert(pos, (letter.label, letter.d_transposed));
        }
    }

    let mut projected: u128 = 1;
    for g in &mut groups {
        g.count = g.class.count(g.positions.len());
        if g.count == 0 {
            return Ok(LaurentValue::zero()); // odd pairing class: empty sum
        }
        projected = projected.saturating_mul(g.count);
    }
    if projected > guard {
        return Err(Error::GuardExceeded { projected, guard });
    }

    // Stream the largest class, collect the rest.
    let stream_idx = groups
        .iter()
        .enumerate()
        .max_by_key(|(_, g)| g.count)
        .map(|(i, _)| i)
        .expect("at least one group");

    let dim = 2 * n;
    let identity_arr: Vec<usize> = (0..dim).collect();

    // Members of collected groups as (index image overlay, weight).
    let mut collected: Vec<Vec<(Vec<(usize, usize)>, WeightTerm)>> = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        if gi == stream_idx {
            collected.push(Vec::new());
            continue;
        }
        let mut members = Vec::new();
        let mut err: Option<Error> = None;
        crate::diagrams::visit_class(g.class, &g.positions, guard, &mut |p| {
            if err.is_some() {
                return;
            }
            match weight_of(&g.spec, p, &g.positions) {
                Ok(w) => {
                    let overlay: Vec<(usize, usize)> = p
                        .support()
                        .map(|s| (idx(s), idx(p.apply(s))))
                        .collect();
                    members.push((overlay, w));
                }
                Err(e) => err = Some(e),
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        collected.push(members);
    }

    // gamma_+ and gamma_-^{-1} as index arrays.
    let gamma_inv = gamma.inverse();
    let mut gp = vec![0usize; dim];
    let mut gm_inv = vec![0usize; dim];
    for i in 0..dim {
        let k = point(i);
        gp[i] = if k > 0 { idx(gamma.apply(k)) } else { i };
        gm_inv[i] = if k < 0 { idx(-gamma_inv.apply(-k)) } else { i };
    }
    // delta_eps as an index involution (identity off Ginibre positions).
    let mut tw = vec![0usize; dim];
    for i in 0..dim {
        let k = point(i);
        let eps = folded[(k.abs() - 1) as usize].eps;
        tw[i] = idx(i64::from(eps) * k);
    }
    let double_faces = 2 * trace_count;

    let mut acc = LaurentValue::zero();
    let mut scratch_parent: Vec<usize> = Vec::new();

    // Iterate the cartesian product of collected members, streaming the
    // designated group innermost.
    let mut combo: Vec<usize> = vec![0; groups.len()];
    loop {
        // Partial premap from the collected members of this combo.
        let mut partial = identity_arr.clone();
        let mut partial_weight = WeightTerm::one();
        for (gi, members) in collected.iter().enumerate() {
            if gi == stream_idx {
                continue;
            }
            let (overlay, w) = &members[combo[gi]];
            for &(s, d) in overlay {
                partial[s] = d;
            }
            partial_weight.n_exp += w.n_exp;
            partial_weight.c_exp += w.c_exp;
            partial_weight.coeff = &partial_weight.coeff * &w.coeff;
        }

        let g = &groups[stream_idx];
        let mut stream_err: Option<Error> = None;
        let mut pi_arr = partial.clone();
        crate::diagrams::visit_class(g.class, &g.positions, guard, &mut |p| {
            if stream_err.is_some() {
                return;
            }
            let w = match weight_of(&g.spec, p, &g.positions) {
                Ok(w) => w,
                Err(e) => {
                    stream_err = Some(e);
                    return;
                }
            };
            // Overlay the streamed member, visit, then restore.
            let overlay: Vec<(usize, usize)> = p
                .support()
                .map(|s| (idx(s), idx(p.apply(s))))
                .collect();
            for &(s, d) in &overlay {
                pi_arr[s] = d;
            }

            let sigma = |i: usize| tw[pi_arr[tw[i]]];
            let keep = passes_filters(filters, folded.len(), &sigma, &mut scratch_parent);
            if keep {
                let edges = count_cycles_fn(dim, sigma);
                let vertices = count_cycles_fn(dim, |i| gm_inv[sigma(gp[i])]);
                let chi = ((double_faces + edges + vertices) / 2) as i64 - n as i64;
                let n_exp =
                    chi - 2 * trace_count as i64 + partial_weight.n_exp + w.n_exp;
                let c_exp = partial_weight.c_exp + w.c_exp;
                let coeff = &partial_weight.coeff * &w.coeff;
                acc.add_term(n_exp, c_exp, &coeff);
            }

            for &(s, _) in &overlay {
                pi_arr[s] = partial[s];
            }
        })?;
        if let Some(e) = stream_err {
            return Err(e);
        }

        // Advance the combo counter over the collected groups.
        let mut gi = 0;
        loop {
            if gi >= groups.len() {
                return Ok(acc);
            }
            if gi == stream_idx {
                gi += 1;
                continue;
            }
            combo[gi] += 1;
            if combo[gi] < collected[gi].len() {
                break;
            }
            combo[gi] = 0;
            gi += 1;
        }
    }
}

fn passes_filters(
    filters: &Filters,
    n: usize,
    sigma: &impl Fn(usize) -> usize,
    scratch: &mut Vec<usize>,
) -> bool {
    if !filters.require_v_connected && !filters.require_blocks_external {
        return true;
    }
    let nb = filters.n_blocks;
    scratch.clear();
    scratch.extend(0..nb);
    // Union blocks along the premap's transitions.
    let find = |parent: &mut Vec<usize>, mut x: usize| {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    };
    for i in 0..2 * n {
        let a = filters.block_of_pos[(point(i).abs() - 1) as usize];
        let b = filters.block_of_pos[(point(sigma(i)).abs() - 1) as usize];
        let (ra, rb) = (find(scratch, a), find(scratch, b));
        if ra != rb {
            scratch[ra] = rb;
        }
    }
    if filters.require_blocks_external {
        // Every block must share a component with another block.
        let mut size = vec![0usize; nb];
        for b in 0..nb {
            size[find(scratch, b)] += 1;
        }
        for b in 0..nb {
            if size[find(scratch, b)] < 2 {
                return false;
            }
        }
    }
    if filters.require_v_connected {
        // Trace groups are connected iff the block components merge them
        // into one: union v-groups sharing a block component.
        let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
        let mut uf = UnionFind::new(filters.n_v);
        for b in 0..nb {
            let r = find(scratch, b);
            let v = filters.v_of_block[b];
            match by_root.get(&r) {
                None => {
                    by_root.insert(r, v);
                }
                Some(&v0) => uf.union(v0, v),
            }
        }
        if uf.component_count(filters.n_v) != 1 {
            return false;
        }
    }
    true
}

/// Exact expectation of the (normalized-trace) product
/// `E(tr(...) * tr(...) * ...)` as a Laurent polynomial in `1/N` (and `c`).
pub fn exact_moment(expr: &TraceExpression, models: &ModelSet) -> Result<LaurentValue> {
    exact_moment_guarded(expr, models, DEFAULT_TERM_GUARD)
}

pub fn exact_moment_guarded(
    expr: &TraceExpression,
    models: &ModelSet,
    guard: u128,
) -> Result<LaurentValue> {
    let folded = fold_letters(expr.letters(), models)?;
    let filters = Filters::moment(folded.len());
    genus_sum(
        &folded,
        &expr.shape(),
        expr.traces().len(),
        models,
        &filters,
        guard,
    )
}

/// Exact classical cumulant `k_r(Tr(w_1), ..., Tr(w_r))` of unnormalized
/// traces, symbolic in `N`.
pub fn exact_trace_cumulant(traces: &[Vec<Letter>], models: &ModelSet) -> Result<LaurentValue> {
    exact_trace_cumulant_guarded(traces, models, DEFAULT_TERM_GUARD)
}

pub fn exact_trace_cumulant_guarded(
    traces: &[Vec<Letter>],
    models: &ModelSet,
    guard: u128,
) -> Result<LaurentValue> {
    let expr = TraceExpression::new(traces.to_vec())?;
    let r = traces.len();
    let folded = fold_letters(expr.letters(), models)?;
    let n = folded.len();
    let mut block_of_pos = vec![0usize; n];
    let mut pos = 0;
    for (b, t) in traces.iter().enumerate() {
        for _ in t {
            block_of_pos[pos] = b;
            pos += 1;
        }
    }
    let filters = Filters {
        block_of_pos,
        n_blocks: r,
        v_of_block: (0..r).collect(),
        n_v: r,
        require_v_connected: true,
        require_blocks_external: false,
    };
    let tr_value = genus_sum(&folded, &expr.shape(), r, models, &filters, guard)?;
    Ok(tr_value.shift_n(r as i64))
}

/// Exact cumulant `k_r(Tr(Å_1...Å_p1), ...)` of unnormalized traces of
/// products of centred single-colour factors.  `groups[l][k]` is the `k`-th
/// factor word of the `l`-th trace.  Centring is expressed through the
/// connectivity conditions: the premap must connect the trace groups and
/// must connect every factor block to at least one other.
pub fn exact_centred_cumulant(
    groups: &[Vec<Vec<Letter>>],
    models: &ModelSet,
) -> Result<LaurentValue> {
    exact_centred_cumulant_guarded(groups, models, DEFAULT_TERM_GUARD)
}

pub fn exact_centred_cumulant_guarded(
    groups: &[Vec<Vec<Letter>>],
    models: &ModelSet,
    guard: u128,
) -> Result<LaurentValue> {
    let tr_value = centred_sum(groups, models, guard)?;
    Ok(tr_value.shift_n(groups.len() as i64))
}

/// The normalized-trace variant of the centred sum, shared with the
/// first-order freeness check (`r = 1` expectation).
pub(crate) fn centred_sum(
    groups: &[Vec<Vec<Letter>>],
    models: &ModelSet,
    guard: u128,
) -> Result<LaurentValue> {
    if groups.is_empty() {
        return Err(Error::InvalidExpression("no trace groups".into()));
    }
    let mut traces: Vec<Vec<Letter>> = Vec::new();
    let mut block_of_pos: Vec<usize> = Vec::new();
    let mut v_of_block: Vec<usize> = Vec::new();
    let mut n_blocks = 0;
    for (l, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::InvalidExpression(
                "cumulant entry with an empty product group".into(),
            ));
        }
        let mut word = Vec::new();
        for factor in group {
            if factor.is_empty() {
                return Err(Error::InvalidExpression("empty centred factor".into()));
            }
            let colour = &factor[0].colour;
            if factor.iter().any(|letter| &letter.colour != colour) {
                return Err(Error::InvalidExpression(
                    "centred factors must be single-colour words".into(),
                ));
            }
            for letter in factor {
                word.push(letter.clone());
                block_of_pos.push(n_blocks);
            }
            v_of_block.push(l);
            n_blocks += 1;
        }
        traces.push(word);
    }
    let expr = TraceExpression::new(traces)?;
    let folded = fold_letters(expr.letters(), models)?;
    let filters = Filters {
        block_of_pos,
        n_blocks,
        v_of_block,
        n_v: groups.len(),
        require_v_connected: true,
        require_blocks_external: true,
    };
    genus_sum(&folded, &expr.shape(), groups.len(), models, &filters, guard)
}
