//! Permutations on finite sets of nonzero signed integers.
//!
//! A [`SignedPermutation`] stores only the points it moves; everything else is
//! an implicit fixed point, so a value is usable on any ambient domain that
//! contains its support.  Cycle counts depend on the domain and therefore take
//! it explicitly.  Composition is rightmost-first throughout:
//! `p.compose(&q)` applies `q` first.
//!
//! The module also houses the sign involution `delta: k -> -k`, its twisted
//! variant `delta_eps: k -> eps(k)*k`, the premap axioms
//! (`delta pi delta = pi^-1`, no cycle containing both `k` and `-k`), and the
//! particular-cycle selection used when collapsing a premap to one cycle per
//! mirror pair.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Canonical ordering of signed points: by absolute value, positive first.
pub fn point_key(k: i64) -> (i64, bool) {
    (k.abs(), k < 0)
}

/// A bijection on a finite set of nonzero integers.  Points outside the
/// stored support are fixed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SignedPermutation {
    /// Sorted (source, target) pairs, fixed points omitted.
    pairs: Vec<(i64, i64)>,
}

impl SignedPermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Builds from an explicit mapping.  Fixed points are dropped; the moved
    /// part must be a bijection of its support onto itself.
    pub fn from_mapping<I: IntoIterator<Item = (i64, i64)>>(mapping: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (src, dst) in mapping {
            if src == 0 || dst == 0 {
                return Err(Error::Parse("permutation points must be nonzero".into()));
            }
            if map.insert(src, dst).is_some() {
                return Err(Error::Parse(format!("duplicate source {src}")));
            }
        }
        map.retain(|s, d| s != d);
        let sources: BTreeSet<i64> = map.keys().copied().collect();
        let targets: BTreeSet<i64> = map.values().copied().collect();
        if sources != targets {
            return Err(Error::Parse(
                "mapping is not a bijection of its support onto itself".into(),
            ));
        }
        Ok(Self {
            pairs: map.into_iter().collect(),
        })
    }

    /// Builds from disjoint cycles.
    pub fn from_cycles(cycles: &[Vec<i64>]) -> Result<Self> {
        let mut mapping = Vec::new();
        let mut seen = BTreeSet::new();
        for cycle in cycles {
            for &k in cycle {
                if k == 0 {
                    return Err(Error::Parse("cycle points must be nonzero".into()));
                }
                if !seen.insert(k) {
                    return Err(Error::Parse(format!("point {k} appears twice")));
                }
            }
            if cycle.len() < 2 {
                continue;
            }
            for i in 0..cycle.len() {
                mapping.push((cycle[i], cycle[(i + 1) % cycle.len()]));
            }
        }
        Self::from_mapping(mapping)
    }

    pub fn transposition(a: i64, b: i64) -> Self {
        Self::from_cycles(&[vec![a, b]]).expect("valid transposition")
    }

    pub fn apply(&self, k: i64) -> i64 {
        match self.pairs.binary_search_by_key(&k, |&(s, _)| s) {
            Ok(i) => self.pairs[i].1,
            Err(_) => k,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Points moved by the permutation, ascending.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.pairs.iter().map(|&(s, _)| s)
    }

    pub fn support_set(&self) -> BTreeSet<i64> {
        self.support().collect()
    }

    /// `self.compose(&q)` is `self ∘ q`: `q` acts first.
    pub fn compose(&self, q: &SignedPermutation) -> SignedPermutation {
        let mut pairs = Vec::with_capacity(self.pairs.len() + q.pairs.len());
        let mut sources: BTreeSet<i64> = q.support().collect();
        sources.extend(self.support());
        for src in sources {
            let dst = self.apply(q.apply(src));
            if dst != src {
                pairs.push((src, dst));
            }
        }
        SignedPermutation { pairs }
    }

    pub fn inverse(&self) -> SignedPermutation {
        let mut pairs: Vec<(i64, i64)> = self.pairs.iter().map(|&(s, d)| (d, s)).collect();
        pairs.sort_unstable();
        SignedPermutation { pairs }
    }

    /// Conjugation by the sign flip: `delta ∘ self ∘ delta`.
    pub fn mirror(&self) -> SignedPermutation {
        let mut pairs: Vec<(i64, i64)> = self.pairs.iter().map(|&(s, d)| (-s, -d)).collect();
        pairs.sort_unstable();
        SignedPermutation { pairs }
    }

    /// Moved cycles in canonical form: each cycle starts at its point of
    /// smallest absolute value (positive first on a tie), cycles sorted by
    /// that leading point.
    pub fn cycles(&self) -> Vec<Vec<i64>> {
        let mut seen = BTreeSet::new();
        let mut cycles = Vec::new();
        for &(start, _) in &self.pairs {
            if seen.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            seen.insert(start);
            let mut cur = self.apply(start);
            while cur != start {
                cycle.push(cur);
                seen.insert(cur);
                cur = self.apply(cur);
            }
            cycles.push(canonical_rotation(cycle));
        }
        cycles.sort_by_key(|c| point_key(c[0]));
        cycles
    }

    /// Cycles over an explicit domain, fixed points included as singletons.
    pub fn cycles_on(&self, domain: &BTreeSet<i64>) -> Result<Vec<Vec<i64>>> {
        for s in self.support() {
            if !domain.contains(&s) {
                return Err(Error::Domain(format!(
                    "domain does not contain moved point {s}"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        let mut cycles = Vec::new();
        for &start in domain {
            if seen.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            seen.insert(start);
            let mut cur = self.apply(start);
            while cur != start {
                cycle.push(cur);
                seen.insert(cur);
                cur = self.apply(cur);
            }
            cycles.push(canonical_rotation(cycle));
        }
        cycles.sort_by_key(|c| point_key(c[0]));
        Ok(cycles)
    }

    /// Number of orbits on `domain`, fixed points counted.
    pub fn cycle_count_on(&self, domain: &BTreeSet<i64>) -> Result<usize> {
        for s in self.support() {
            if !domain.contains(&s) {
                return Err(Error::Domain(format!(
                    "domain does not contain moved point {s}"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for &start in domain {
            if seen.contains(&start) {
                continue;
            }
            count += 1;
            let mut cur = start;
            loop {
                seen.insert(cur);
                cur = self.apply(cur);
                if cur == start {
                    break;
                }
            }
        }
        Ok(count)
    }

    /// Induced permutation on `j`: each point jumps to the first of its
    /// forward orbit that lands back in `j` (deleting all other points from
    /// the cycle notation).
    pub fn restrict(&self, j: &BTreeSet<i64>) -> SignedPermutation {
        let mut pairs = Vec::new();
        for &k in j {
            let mut cur = self.apply(k);
            while cur != k && !j.contains(&cur) {
                cur = self.apply(cur);
            }
            if cur != k {
                pairs.push((k, cur));
            }
        }
        SignedPermutation { pairs }
    }

    /// Premap test: `delta self delta = self^-1` and no cycle contains both
    /// `k` and `-k`.
    pub fn is_premap(&self) -> bool {
        for &(s, d) in &self.pairs {
            // mirror condition pair by pair: (s -> d) forces (-d -> -s)
            if self.apply(-d) != -s {
                return false;
            }
        }
        // Given the mirror condition, a cycle with both signs exists iff some
        // point maps straight to its negative.
        for &(s, d) in &self.pairs {
            if d == -s {
                return false;
            }
        }
        true
    }

    /// Premap test restricted to supports inside `±I` for positive `I`.
    pub fn is_premap_on(&self, i: &BTreeSet<i64>) -> bool {
        self.support().all(|s| i.contains(&s.abs())) && self.is_premap()
    }

    /// The moved particular cycles of a premap: from each mirror pair of
    /// cycles, the one whose smallest-absolute-value point is positive.
    pub fn particular_half(&self) -> Result<SignedPermutation> {
        let cycles = self.particular_cycles_moved()?;
        SignedPermutation::from_cycles(&cycles)
    }

    fn particular_cycles_moved(&self) -> Result<Vec<Vec<i64>>> {
        if !self.is_premap() {
            return Err(Error::NotAPremap(format!("{self}")));
        }
        Ok(self
            .cycles()
            .into_iter()
            .filter(|c| c[0] > 0)
            .collect())
    }

    /// Particular cycles over `±I` (for positive `I`), mirror-paired fixed
    /// points contributing their positive singleton.
    pub fn particular_cycles_on(&self, i: &BTreeSet<i64>) -> Result<Vec<Vec<i64>>> {
        if !self.is_premap_on(i) {
            return Err(Error::NotAPremap(format!("{self} on ±{i:?}")));
        }
        let domain: BTreeSet<i64> = i.iter().flat_map(|&k| [k, -k]).collect();
        Ok(self
            .cycles_on(&domain)?
            .into_iter()
            .filter(|c| c[0] > 0)
            .collect())
    }

    /// `pi_+ pi_-^{-1}` for a permutation supported on a sign-unambiguous
    /// set: the orientation double, always a premap.
    pub fn orientation_double(&self) -> Result<SignedPermutation> {
        for s in self.support() {
            if self.apply(-s) != -s {
                return Err(Error::Domain(format!(
                    "support contains both {s} and {}",
                    -s
                )));
            }
        }
        Ok(self.compose(&self.mirror().inverse()))
    }
}

fn canonical_rotation(mut cycle: Vec<i64>) -> Vec<i64> {
    let lead = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &k)| point_key(k))
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(lead);
    cycle
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, k) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for SignedPermutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(parse_cycles(s)?.0)
    }
}

/// Parses cycle notation such as `"(1,-3,4)(-4,3,-1)"`.  Returns the
/// permutation together with every mentioned point, so singleton cycles like
/// `"(1)(2)"` can still convey a domain.
pub fn parse_cycles(s: &str) -> Result<(SignedPermutation, BTreeSet<i64>)> {
    let mut mentioned = BTreeSet::new();
    let mut cycles: Vec<Vec<i64>> = Vec::new();
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let Some(inner_start) = rest.strip_prefix('(') else {
            return Err(Error::Parse(format!("expected '(' in {s:?}")));
        };
        let Some(end) = inner_start.find(')') else {
            return Err(Error::Parse(format!("unbalanced parentheses in {s:?}")));
        };
        let inner = &inner_start[..end];
        rest = &inner_start[end + 1..];
        if inner.is_empty() {
            continue;
        }
        let mut cycle = Vec::new();
        for tok in inner.split(',') {
            let k: i64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer {tok:?} in {s:?}")))?;
            if k == 0 {
                return Err(Error::Parse("cycle points must be nonzero".into()));
            }
            if !mentioned.insert(k) {
                return Err(Error::Parse(format!("point {k} appears twice in {s:?}")));
            }
            cycle.push(k);
        }
        cycles.push(cycle);
    }
    Ok((SignedPermutation::from_cycles(&cycles)?, mentioned))
}

/// A sign pattern on `[n]`, extended evenly to negatives:
/// `eps(-k) = eps(k)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn plus(n: usize) -> Self {
        Self { signs: vec![1; n] }
    }

    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Parse("sign pattern entries must be ±1".into()));
        }
        Ok(Self { signs })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn get(&self, k: i64) -> i8 {
        let idx = (k.abs() - 1) as usize;
        self.signs[idx]
    }

    pub fn is_all_plus(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }

    /// The involution `delta_eps: k -> eps(k) * k` as a permutation.
    pub fn delta_eps(&self) -> SignedPermutation {
        let mut pairs = Vec::new();
        for (i, &s) in self.signs.iter().enumerate() {
            if s == -1 {
                let k = (i + 1) as i64;
                pairs.push((k, -k));
                pairs.push((-k, k));
            }
        }
        pairs.sort_unstable();
        SignedPermutation { pairs }
    }

    /// Conjugates `p` by `delta_eps` without materializing the involution.
    pub fn twist(&self, p: &SignedPermutation) -> SignedPermutation {
        let sign = |k: i64| i64::from(self.get(k)) * k;
        let mut pairs: Vec<(i64, i64)> = p
            .pairs
            .iter()
            .map(|&(s, d)| (sign(s), sign(d)))
            .collect();
        pairs.sort_unstable();
        SignedPermutation { pairs }
    }
}

/// `gamma_-^{-1} pi gamma_+` for `gamma` on a sign-unambiguous set: conjugates
/// a premap into the premap carrying the vertex data of the glued surface.
pub fn conjugate_premap(
    gamma: &SignedPermutation,
    pi: &SignedPermutation,
) -> Result<SignedPermutation> {
    if !pi.is_premap() {
        return Err(Error::NotAPremap(format!("{pi}")));
    }
    for s in gamma.support() {
        if gamma.apply(-s) != -s {
            return Err(Error::Domain(format!(
                "gamma support contains both {s} and {}",
                -s
            )));
        }
    }
    let gamma_minus_inv = gamma.mirror().inverse();
    Ok(gamma_minus_inv.compose(&pi.compose(gamma)))
}

/// A partition of a finite ground set into disjoint nonempty blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Partition {
    blocks: Vec<Vec<i64>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<i64>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::Parse("partition blocks must be nonempty".into()));
            }
            for &k in block {
                if !seen.insert(k) {
                    return Err(Error::Parse(format!("point {k} in two blocks")));
                }
            }
        }
        let mut blocks: Vec<Vec<i64>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort();
        Ok(Self { blocks })
    }

    pub fn singletons(ground: &BTreeSet<i64>) -> Self {
        Self {
            blocks: ground.iter().map(|&k| vec![k]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<i64>] {
        &self.blocks
    }

    pub fn ground_set(&self) -> BTreeSet<i64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Lattice join: the smallest partition refined by both.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        let ground = self.ground_set();
        if ground != other.ground_set() {
            return Err(Error::Domain("join requires equal ground sets".into()));
        }
        let index: BTreeMap<i64, usize> = ground.iter().copied().zip(0..).collect();
        let mut uf = UnionFind::new(ground.len());
        for part in [self, other] {
            for block in &part.blocks {
                for w in block.windows(2) {
                    uf.union(index[&w[0]], index[&w[1]]);
                }
            }
        }
        let mut grouped: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
        for (&k, &i) in &index {
            grouped.entry(uf.find(i)).or_default().push(k);
        }
        Partition::new(grouped.into_values().collect())
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() <= 1
    }
}

/// Orbits of a permutation over a domain, viewed as a partition.
pub fn orbit_partition(p: &SignedPermutation, domain: &BTreeSet<i64>) -> Result<Partition> {
    Partition::new(p.cycles_on(domain)?)
}

/// True iff some orbit of `p` meets both `j` and `k`.
pub fn connects(p: &SignedPermutation, j: &BTreeSet<i64>, k: &BTreeSet<i64>) -> bool {
    for &start in j {
        let mut cur = start;
        loop {
            if k.contains(&cur) {
                return true;
            }
            cur = p.apply(cur);
            if cur == start {
                break;
            }
        }
    }
    false
}

/// Minimal union-find used for joins and connectivity filters.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    pub fn component_count(&mut self, n: usize) -> usize {
        (0..n).filter(|&i| self.find(i) == i).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> SignedPermutation {
        s.parse().unwrap()
    }

    fn pm_domain(n: i64) -> BTreeSet<i64> {
        (1..=n).flat_map(|k| [k, -k]).collect()
    }

    #[test]
    fn compose_identity_and_involution() {
        let id = SignedPermutation::identity();
        let t = perm("(1,2)");
        assert_eq!(id.compose(&t), t);
        assert_eq!(t.compose(&t), id);
    }

    #[test]
    fn compose_matches_worked_wishart_example() {
        // gamma = (1,2,3)(4,5), pi the hyperedge premap from the two-trace
        // Wishart product; the vertex permutation comes out as the pair of
        // mirrored five-cycles.
        let gamma = perm("(1,2,3)(4,5)");
        let pi = perm("(1,-3,4)(-4,3,-1)(2,-5)(5,-2)");
        let vertex = conjugate_premap(&gamma, &pi).unwrap();
        assert_eq!(vertex, perm("(1,-4,3,-2,5)(-5,2,-3,4,-1)"));
        assert!(vertex.is_premap());
    }

    #[test]
    fn cycle_counts_with_explicit_domain() {
        let p = perm("(1,2)");
        let domain: BTreeSet<i64> = [1, 2, 3].into_iter().collect();
        assert_eq!(p.cycle_count_on(&domain).unwrap(), 2);

        let vertex = perm("(1,-4,3,-2,5)(-5,2,-3,4,-1)");
        assert_eq!(vertex.cycle_count_on(&pm_domain(5)).unwrap(), 2);

        let too_small: BTreeSet<i64> = [1].into_iter().collect();
        assert!(p.cycle_count_on(&too_small).is_err());
    }

    #[test]
    fn inverse_small() {
        assert_eq!(perm("(1,2,3)").inverse(), perm("(1,3,2)"));
    }

    #[test]
    fn restrict_skips_deleted_points() {
        let p = perm("(1,2,3,4)");
        let j: BTreeSet<i64> = [1, 3].into_iter().collect();
        assert_eq!(p.restrict(&j), perm("(1,3)"));

        let big = perm("(1,-4,3,-2,5)(-5,2,-3,4,-1)");
        let j: BTreeSet<i64> = [1, 3, 5].into_iter().collect();
        assert_eq!(big.restrict(&j), perm("(1,3,5)"));
    }

    #[test]
    fn restrict_nests() {
        let p = perm("(1,5,2,-3)(4,-6)");
        let j: BTreeSet<i64> = [1, 2, -3, 4].into_iter().collect();
        let k: BTreeSet<i64> = [1, -3].into_iter().collect();
        assert_eq!(p.restrict(&j).restrict(&k), p.restrict(&k));
    }

    #[test]
    fn premap_axioms() {
        assert!(SignedPermutation::identity().is_premap());
        assert!(perm("(1,-3,4)(-4,3,-1)(2,-5)(5,-2)")
            .is_premap_on(&(1..=5).collect()));
        assert!(!perm("(1,-1)").is_premap());
        assert!(!perm("(1,2)").is_premap()); // mirror cycle missing
    }

    #[test]
    fn premap_inverse_equals_delta_conjugate() {
        let pi = perm("(1,-3,4)(-4,3,-1)(2,-5)(5,-2)");
        assert_eq!(pi.mirror(), pi.inverse());
    }

    #[test]
    fn particular_cycle_selection() {
        assert_eq!(perm("(1,2)(-1,-2)").particular_half().unwrap(), perm("(1,2)"));
        assert_eq!(
            perm("(1,-4,3,-2,5)(-5,2,-3,4,-1)")
                .particular_half()
                .unwrap(),
            perm("(1,-4,3,-2,5)")
        );
        assert!(SignedPermutation::identity()
            .particular_half()
            .unwrap()
            .is_identity());
    }

    #[test]
    fn particular_cycles_include_fixed_points() {
        let id = SignedPermutation::identity();
        let i: BTreeSet<i64> = [1, 2].into_iter().collect();
        let cycles = id.particular_cycles_on(&i).unwrap();
        assert_eq!(cycles, vec![vec![1], vec![2]]);
    }

    #[test]
    fn particular_half_rejects_non_premaps() {
        assert!(perm("(1,2)").particular_half().is_err());
    }

    #[test]
    fn orientation_double_doubles_cycle_count() {
        let p = perm("(1,2)");
        let d = p.orientation_double().unwrap();
        assert_eq!(d, perm("(1,2)(-1,-2)"));
        let domain = pm_domain(2);
        assert_eq!(
            d.cycle_count_on(&domain).unwrap(),
            2 * p.cycle_count_on(&(1..=2).collect()).unwrap()
        );
    }

    #[test]
    fn delta_eps_twists_pairings() {
        // For eps identically +1, delta_eps pi delta pi delta_eps sends the
        // pairing (1,2) to the twisted premap (1,-2)(-1,2).
        let pi = perm("(1,2)");
        let eps = SignPattern::plus(2);
        assert!(eps.delta_eps().is_identity());
        let d = SignedPermutation::from_mapping((1..=2).flat_map(|k| [(k, -k), (-k, k)]))
            .unwrap();
        let chain = eps
            .delta_eps()
            .compose(&pi.compose(&d.compose(&pi.compose(&eps.delta_eps()))));
        assert_eq!(chain, perm("(1,-2)(-1,2)"));

        let eps = SignPattern::new(vec![1, -1]).unwrap();
        let chain = eps
            .delta_eps()
            .compose(&pi.compose(&d.compose(&pi.compose(&eps.delta_eps()))));
        assert_eq!(chain, perm("(1,2)(-1,-2)"));
    }

    #[test]
    fn twist_matches_conjugation() {
        let eps = SignPattern::new(vec![1, -1, -1]).unwrap();
        let p = perm("(1,-3,2)(-2,3,-1)");
        let by_compose = eps.delta_eps().compose(&p.compose(&eps.delta_eps()));
        assert_eq!(eps.twist(&p), by_compose);
    }

    #[test]
    fn conjugate_premap_identity_case() {
        let pi = perm("(1,-3,4)(-4,3,-1)(2,-5)(5,-2)");
        assert_eq!(
            conjugate_premap(&SignedPermutation::identity(), &pi).unwrap(),
            pi
        );
    }

    #[test]
    fn join_and_connects() {
        let a = Partition::new(vec![vec![1], vec![2]]).unwrap();
        let b = Partition::new(vec![vec![1, 2]]).unwrap();
        assert_eq!(a.join(&b).unwrap(), b);

        let p = perm("(1,2)(-1,-2)");
        assert!(connects(
            &p,
            &[1].into_iter().collect(),
            &[2].into_iter().collect()
        ));

        // The worked example's premap connects the two traces.
        let pi = perm("(1,-3,4)(-4,3,-1)(2,-5)(5,-2)");
        let orbits = orbit_partition(&pi, &pm_domain(5)).unwrap();
        let traces = Partition::new(vec![
            vec![1, 2, 3, -1, -2, -3],
            vec![4, 5, -4, -5],
        ])
        .unwrap();
        assert!(orbits.join(&traces).unwrap().is_full());

        let mismatched = Partition::new(vec![vec![7]]).unwrap();
        assert!(orbits.join(&mismatched).is_err());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["()", "(1,2)", "(1,-3,4)(-1,-4,3)", "(1,-4,3,-2,5)(-1,-5,2,-3,4)"] {
            let p = perm(s);
            assert_eq!(p.to_string(), s);
        }
        // Non-canonical input normalizes: cycles start at the point of
        // smallest absolute value and are sorted by that leading point.
        assert_eq!(perm("(2,3,1)").to_string(), "(1,2,3)");
        assert_eq!(perm("(-2,-1)(2,1)").to_string(), "(1,2)(-1,-2)");
        assert_eq!(perm("(-4,3,-1)").to_string(), "(-1,-4,3)");
    }

    #[test]
    fn parse_keeps_mentioned_points() {
        let (p, mentioned) = parse_cycles("(1)(2,3)").unwrap();
        assert_eq!(p, perm("(2,3)"));
        assert_eq!(mentioned, [1, 2, 3].into_iter().collect());
    }

    #[test]
    fn disjoint_supports_add_cycle_counts() {
        let p = perm("(1,2)");
        let q = perm("(3,4,5)");
        let d: BTreeSet<i64> = (1..=5).collect();
        assert_eq!(
            p.compose(&q).cycle_count_on(&d).unwrap(),
            p.cycle_count_on(&(1..=2).collect()).unwrap()
                + q.cycle_count_on(&(3..=5).collect()).unwrap()
        );
    }
}
