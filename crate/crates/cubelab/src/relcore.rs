//! Finite-set substrate: sets, maps, equivalence relations stored as
//! partitions, forks, kernel pairs, coequalisers, pullbacks and the
//! regular-pushout criterion.

use crate::report::CheckReport;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet};

/// A finite set: a size, plus optional element labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinSet {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl FinSet {
    pub fn new(size: usize) -> Self {
        FinSet { size, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::Malformed(format!("duplicate label {l:?}")));
            }
        }
        Ok(FinSet { size: labels.len(), labels: Some(labels) })
    }

    /// Structural equality ignoring labels; maps only care about sizes.
    pub fn same_carrier(&self, other: &FinSet) -> bool {
        self.size == other.size
    }
}

/// A function between finite sets, stored as a table of codomain indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinMap {
    pub dom: FinSet,
    pub cod: FinSet,
    pub table: Vec<usize>,
}

impl FinMap {
    pub fn new(dom: FinSet, cod: FinSet, table: Vec<usize>) -> Result<Self> {
        if table.len() != dom.size {
            return Err(Error::Malformed(format!(
                "table length {} does not match domain size {}",
                table.len(),
                dom.size
            )));
        }
        if let Some(&v) = table.iter().find(|&&v| v >= cod.size) {
            return Err(Error::Malformed(format!(
                "table entry {v} out of range for codomain size {}",
                cod.size
            )));
        }
        Ok(FinMap { dom, cod, table })
    }

    pub fn identity(set: &FinSet) -> Self {
        FinMap { dom: set.clone(), cod: set.clone(), table: (0..set.size).collect() }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// g ∘ self, when codomains line up.
    pub fn then(&self, g: &FinMap) -> Result<FinMap> {
        if self.cod.size != g.dom.size {
            return Err(Error::CodomainMismatch(format!(
                "cannot compose: cod size {} vs dom size {}",
                self.cod.size, g.dom.size
            )));
        }
        Ok(FinMap {
            dom: self.dom.clone(),
            cod: g.cod.clone(),
            table: self.table.iter().map(|&x| g.table[x]).collect(),
        })
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.cod.size];
        for &v in &self.table {
            hit[v] = true;
        }
        hit.into_iter().all(|b| b)
    }

    pub fn is_injective(&self) -> bool {
        let mut hit = vec![false; self.cod.size];
        for &v in &self.table {
            if hit[v] {
                return false;
            }
            hit[v] = true;
        }
        true
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.size == self.cod.size && self.is_injective()
    }

    /// Whether `self` and `other` (same domain) agree up to a bijection of
    /// codomains: both are surjections with identical fibre partitions, or
    /// more generally there is a unique bijection `b` with `b ∘ self = other`.
    /// Coequalisers are only defined up to such a bijection.
    pub fn equal_up_to_codomain_bijection(&self, other: &FinMap) -> bool {
        if self.dom.size != other.dom.size || self.cod.size != other.cod.size {
            return false;
        }
        if !self.is_surjective() || !other.is_surjective() {
            return false;
        }
        let mut fwd: Vec<Option<usize>> = vec![None; self.cod.size];
        let mut bwd: Vec<Option<usize>> = vec![None; other.cod.size];
        for i in 0..self.dom.size {
            let (a, b) = (self.table[i], other.table[i]);
            match (fwd[a], bwd[b]) {
                (None, None) => {
                    fwd[a] = Some(b);
                    bwd[b] = Some(a);
                }
                (Some(b2), Some(a2)) if b2 == b && a2 == a => {}
                _ => return false,
            }
        }
        true
    }
}

/// A binary relation on a finite carrier, as an explicit pair set.
/// Composites of equivalence relations land here; they need not be
/// equivalence relations themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinRel {
    pub carrier: FinSet,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl BinRel {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pairs.contains(&(x, y))
    }
}

/// An equivalence relation on a finite carrier, stored as a partition in
/// canonical form: blocks sorted by least element, elements sorted within
/// blocks. Two `EqRel` values are equal iff their partitions are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EqRel {
    pub carrier: FinSet,
    pub blocks: Vec<Vec<usize>>,
}

impl EqRel {
    pub fn from_blocks(carrier: FinSet, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; carrier.size];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Malformed("empty block".into()));
            }
            for &x in b {
                if x >= carrier.size {
                    return Err(Error::Malformed(format!("block element {x} out of range")));
                }
                if seen[x] {
                    return Err(Error::Malformed(format!("element {x} in two blocks")));
                }
                seen[x] = true;
            }
        }
        if !seen.iter().all(|&b| b) {
            return Err(Error::Malformed("blocks do not cover the carrier".into()));
        }
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Ok(EqRel { carrier, blocks })
    }

    /// The discrete relation Δ: every element alone.
    pub fn discrete(carrier: FinSet) -> Self {
        let blocks = (0..carrier.size).map(|i| vec![i]).collect();
        EqRel { carrier, blocks }
    }

    /// The full relation ∇: one block (none on the empty carrier).
    pub fn full(carrier: FinSet) -> Self {
        let blocks = if carrier.size == 0 { Vec::new() } else { vec![(0..carrier.size).collect()] };
        EqRel { carrier, blocks }
    }

    /// Build the least equivalence relation containing the given pairs.
    pub fn from_pairs(carrier: FinSet, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut uf = UnionFind::new(carrier.size);
        for (x, y) in pairs {
            if x >= carrier.size || y >= carrier.size {
                return Err(Error::Malformed(format!("pair ({x},{y}) out of range")));
            }
            uf.union(x, y);
        }
        Ok(uf.into_eqrel(carrier))
    }

    /// Block index of each element.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.carrier.size];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &x in b {
                out[x] = bi;
            }
        }
        out
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        let bo = self.block_of();
        bo[x] == bo[y]
    }

    /// Pair-set view of the relation.
    pub fn to_binrel(&self) -> BinRel {
        let mut pairs = BTreeSet::new();
        for b in &self.blocks {
            for &x in b {
                for &y in b {
                    pairs.insert((x, y));
                }
            }
        }
        BinRel { carrier: self.carrier.clone(), pairs }
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() <= 1
    }

    /// Refinement order: self ≤ other.
    pub fn leq(&self, other: &EqRel) -> bool {
        let bo = other.block_of();
        self.blocks.iter().all(|b| b.iter().all(|&x| bo[x] == bo[b[0]]))
    }
}

fn check_same_carrier(r: &EqRel, s: &EqRel) -> Result<()> {
    if !r.carrier.same_carrier(&s.carrier) {
        return Err(Error::CarrierMismatch(format!(
            "carriers of size {} and {}",
            r.carrier.size, s.carrier.size
        )));
    }
    Ok(())
}

/// The fibre partition of `f`: x ~ y iff f(x) = f(y).
pub fn kernel_pair(f: &FinMap) -> EqRel {
    let mut fibres: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &v) in f.table.iter().enumerate() {
        fibres.entry(v).or_default().push(x);
    }
    let mut blocks: Vec<Vec<usize>> = fibres.into_values().collect();
    blocks.sort_by_key(|b| b[0]);
    EqRel { carrier: f.dom.clone(), blocks }
}

/// The canonical quotient map onto the blocks of `r`, codomain indexed by
/// block order.
pub fn coequaliser(r: &EqRel) -> FinMap {
    let bo = r.block_of();
    FinMap {
        dom: r.carrier.clone(),
        cod: FinSet::new(r.blocks.len()),
        table: bo,
    }
}

/// Relational composite { (x,z) : ∃y, x R y and y S z }, as a pair set.
pub fn compose_rel(r: &EqRel, s: &EqRel) -> Result<BinRel> {
    check_same_carrier(r, s)?;
    let s_bo = s.block_of();
    let mut pairs = BTreeSet::new();
    // x R y and y S z: for each R-block, collect the S-blocks it meets.
    for rb in &r.blocks {
        let mut s_blocks = BTreeSet::new();
        for &y in rb {
            s_blocks.insert(s_bo[y]);
        }
        for &x in rb {
            for &sb in &s_blocks {
                for &z in &s.blocks[sb] {
                    pairs.insert((x, z));
                }
            }
        }
    }
    Ok(BinRel { carrier: r.carrier.clone(), pairs })
}

/// True iff R∘S = S∘R as pair sets.
pub fn is_permutable(r: &EqRel, s: &EqRel) -> Result<bool> {
    Ok(compose_rel(r, s)? == compose_rel(s, r)?)
}

/// Common refinement: pairwise block intersections.
pub fn meet_rel(r: &EqRel, s: &EqRel) -> Result<EqRel> {
    check_same_carrier(r, s)?;
    let (rb, sb) = (r.block_of(), s.block_of());
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for x in 0..r.carrier.size {
        groups.entry((rb[x], sb[x])).or_default().push(x);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    blocks.sort_by_key(|b| b[0]);
    Ok(EqRel { carrier: r.carrier.clone(), blocks })
}

/// Equivalence closure of the union: the least equivalence relation above
/// both. When R and S permute this equals their relational composite.
pub fn join_rel(r: &EqRel, s: &EqRel) -> Result<EqRel> {
    check_same_carrier(r, s)?;
    let mut uf = UnionFind::new(r.carrier.size);
    for b in r.blocks.iter().chain(s.blocks.iter()) {
        for w in b.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    Ok(uf.into_eqrel(r.carrier.clone()))
}

/// Join of an arbitrary family on one carrier; Δ for the empty family.
pub fn join_all(carrier: &FinSet, rels: &[&EqRel]) -> Result<EqRel> {
    let mut acc = EqRel::discrete(carrier.clone());
    for r in rels {
        acc = join_rel(&acc, r)?;
    }
    Ok(acc)
}

/// Meet of an arbitrary family on one carrier; ∇ for the empty family.
pub fn meet_all(carrier: &FinSet, rels: &[&EqRel]) -> Result<EqRel> {
    let mut acc = EqRel::full(carrier.clone());
    for r in rels {
        acc = meet_rel(&acc, r)?;
    }
    Ok(acc)
}

/// The pullback { (a,b) : f(a) = g(b) } with its two projections. Pairs are
/// ordered lexicographically, so the construction is canonical.
pub fn pullback(f: &FinMap, g: &FinMap) -> Result<(FinSet, FinMap, FinMap)> {
    if f.cod.size != g.cod.size {
        return Err(Error::CodomainMismatch(format!(
            "pullback legs have codomain sizes {} and {}",
            f.cod.size, g.cod.size
        )));
    }
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for a in 0..f.dom.size {
        for b in 0..g.dom.size {
            if f.table[a] == g.table[b] {
                p1.push(a);
                p2.push(b);
            }
        }
    }
    let apex = FinSet::new(p1.len());
    let pr1 = FinMap { dom: apex.clone(), cod: f.dom.clone(), table: p1 };
    let pr2 = FinMap { dom: apex.clone(), cod: g.dom.clone(), table: p2 };
    Ok((apex, pr1, pr2))
}

/// Find, for pullback projections (pr1, pr2), the index of the pair (a, b).
pub fn pullback_pair_index(pr1: &FinMap, pr2: &FinMap, a: usize, b: usize) -> Option<usize> {
    (0..pr1.dom.size).find(|&i| pr1.table[i] == a && pr2.table[i] == b)
}

/// A commuting square of surjections:
///
/// ```text
///        s
///    A ----» C
///    |       |
///  r |       | v
///    »       »
///    B ----» D
///        u
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Square {
    pub r: FinMap,
    pub s: FinMap,
    pub u: FinMap,
    pub v: FinMap,
}

impl Square {
    pub fn validate(&self) -> Result<()> {
        if self.r.dom.size != self.s.dom.size {
            return Err(Error::Malformed("square legs r, s must share a domain".into()));
        }
        if self.u.dom.size != self.r.cod.size || self.v.dom.size != self.s.cod.size {
            return Err(Error::Malformed("square sides do not line up".into()));
        }
        if self.u.cod.size != self.v.cod.size {
            return Err(Error::Malformed("square corners do not share a codomain".into()));
        }
        let t1 = self.r.then(&self.u)?;
        let t2 = self.s.then(&self.v)?;
        if t1.table != t2.table {
            return Err(Error::Malformed("square does not commute".into()));
        }
        for (name, m) in [("r", &self.r), ("s", &self.s), ("u", &self.u), ("v", &self.v)] {
            if !m.is_surjective() {
                return Err(Error::Malformed(format!("side {name} is not surjective")));
            }
        }
        Ok(())
    }
}

/// Regular-pushout criterion: the comparison ⟨r,s⟩ : A → B ×_D C is
/// surjective. The report also records whether R∘S = T = S∘R for the kernel
/// pairs R, S of the legs and T of the diagonal; a failure carries a pullback
/// element with empty preimage as witness.
pub fn is_regular_pushout(square: &Square) -> Result<CheckReport> {
    square.validate()?;
    let diag = square.r.then(&square.u)?;
    let (_apex, pr1, pr2) = pullback(&square.u, &square.v)?;
    let mut hit = vec![false; pr1.dom.size];
    for a in 0..square.r.dom.size {
        let (b, c) = (square.r.table[a], square.s.table[a]);
        if let Some(i) = pullback_pair_index(&pr1, &pr2, b, c) {
            hit[i] = true;
        }
    }
    let rk = kernel_pair(&square.r);
    let sk = kernel_pair(&square.s);
    let tk = kernel_pair(&diag).to_binrel();
    let rs = compose_rel(&rk, &sk)?;
    let sr = compose_rel(&sk, &rk)?;
    let rel_ok = rs.pairs == tk.pairs && sr.pairs == tk.pairs;

    let mut report = if let Some(miss) = hit.iter().position(|&h| !h) {
        CheckReport::fail(json!({
            "unreached_pullback_element": { "b": pr1.table[miss], "c": pr2.table[miss] },
        }))
    } else {
        CheckReport::pass()
    };
    report = report.note(format!(
        "kernel-pair criterion R∘S = T = S∘R: {}",
        if rel_ok { "holds" } else { "fails" }
    ));
    Ok(report)
}

/// A reflexive graph: d, c : edges → vertices with a common section e.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflexiveGraph {
    pub edges: FinSet,
    pub vertices: FinSet,
    pub d: FinMap,
    pub c: FinMap,
    pub e: FinMap,
}

impl ReflexiveGraph {
    pub fn validate(&self) -> Result<()> {
        let id = FinMap::identity(&self.vertices);
        if self.e.then(&self.d)?.table != id.table || self.e.then(&self.c)?.table != id.table {
            return Err(Error::Malformed("d∘e = id = c∘e fails".into()));
        }
        Ok(())
    }

    /// The equivalence closure of the image relation { (d(g), c(g)) }.
    pub fn support_closure(&self) -> Result<EqRel> {
        EqRel::from_pairs(
            self.vertices.clone(),
            (0..self.edges.size).map(|g| (self.d.table[g], self.c.table[g])),
        )
    }

    pub fn from_eqrel(r: &EqRel) -> Self {
        let b = r.to_binrel();
        let pairs: Vec<(usize, usize)> = b.pairs.into_iter().collect();
        let edges = FinSet::new(pairs.len());
        let d = FinMap {
            dom: edges.clone(),
            cod: r.carrier.clone(),
            table: pairs.iter().map(|&(x, _)| x).collect(),
        };
        let c = FinMap {
            dom: edges.clone(),
            cod: r.carrier.clone(),
            table: pairs.iter().map(|&(_, y)| y).collect(),
        };
        let e = FinMap {
            dom: r.carrier.clone(),
            cod: edges.clone(),
            table: (0..r.carrier.size)
                .map(|x| pairs.binary_search(&(x, x)).expect("diagonal pair present"))
                .collect(),
        };
        ReflexiveGraph { edges, vertices: r.carrier.clone(), d, c, e }
    }
}

/// A fork: a reflexive graph augmented with an arrow coequalising (d, c).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fork {
    pub graph: ReflexiveGraph,
    pub arrow: FinMap,
}

impl Fork {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.arrow.dom.size != self.graph.vertices.size {
            return Err(Error::Malformed("fork arrow domain must be the vertex set".into()));
        }
        let fd = self.graph.d.then(&self.arrow)?;
        let fc = self.graph.c.then(&self.arrow)?;
        if fd.table != fc.table {
            return Err(Error::Malformed("f∘d = f∘c fails".into()));
        }
        Ok(())
    }
}

/// True iff the graph part is exactly the kernel relation of the arrow and
/// the arrow is the coequaliser: surjective with fibres equal to the blocks.
pub fn is_exact_fork(fork: &Fork) -> Result<bool> {
    fork.graph.validate()?;
    if fork.arrow.dom.size != fork.graph.vertices.size {
        return Err(Error::Malformed("fork arrow domain must be the vertex set".into()));
    }
    // a non-commuting fork is not exact rather than malformed
    let fd = fork.graph.d.then(&fork.arrow)?;
    let fc = fork.graph.c.then(&fork.arrow)?;
    if fd.table != fc.table || !fork.arrow.is_surjective() {
        return Ok(false);
    }
    let kp = kernel_pair(&fork.arrow).to_binrel();
    // The graph part must be the kernel relation *as a relation*: its image
    // pair set equals kp and distinct edges carry distinct pairs.
    let mut image = BTreeSet::new();
    for g in 0..fork.graph.edges.size {
        if !image.insert((fork.graph.d.table[g], fork.graph.c.table[g])) {
            return Ok(false);
        }
    }
    Ok(image == kp.pairs)
}

/// Complete an arrow with its kernel pair.
pub fn eq_fork(f: &FinMap) -> Fork {
    let graph = ReflexiveGraph::from_eqrel(&kernel_pair(f));
    Fork { graph, arrow: f.clone() }
}

/// Complete a reflexive graph with the coequaliser of (d, c), computed as the
/// coequaliser of the equivalence closure of its image relation.
pub fn coeq_fork(g: &ReflexiveGraph) -> Result<Fork> {
    g.validate()?;
    let rel = g.support_closure()?;
    Ok(Fork { graph: g.clone(), arrow: coequaliser(&rel) })
}

/// Basic union-find used for equivalence closures.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.parent[rx.max(ry)] = rx.min(ry);
        }
    }

    pub fn into_eqrel(mut self, carrier: FinSet) -> EqRel {
        let n = self.parent.len();
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let r = self.find(x);
            groups.entry(r).or_default().push(x);
        }
        let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        EqRel { carrier, blocks }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> FinSet {
        FinSet::new(n)
    }

    fn rel(n: usize, blocks: &[&[usize]]) -> EqRel {
        EqRel::from_blocks(set(n), blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn kernel_pair_identity_is_discrete() {
        let f = FinMap::identity(&set(3));
        assert_eq!(kernel_pair(&f), EqRel::discrete(set(3)));
    }

    #[test]
    fn kernel_pair_constant_is_full() {
        let f = FinMap::new(set(4), set(1), vec![0, 0, 0, 0]).unwrap();
        assert_eq!(kernel_pair(&f), EqRel::full(set(4)));
    }

    #[test]
    fn kernel_pair_mod2() {
        let f = FinMap::new(set(4), set(2), vec![0, 0, 1, 1]).unwrap();
        let expected = rel(4, &[&[0, 1], &[2, 3]]);
        assert_eq!(kernel_pair(&f), expected);
        // oracle: enumerate all pairs and compare images
        let bo = kernel_pair(&f).block_of();
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(bo[x] == bo[y], f.table[x] == f.table[y]);
            }
        }
    }

    #[test]
    fn coequaliser_discrete_is_bijection() {
        let q = coequaliser(&EqRel::discrete(set(5)));
        assert!(q.is_bijective());
    }

    #[test]
    fn coequaliser_blocks() {
        let q = coequaliser(&rel(4, &[&[0, 1], &[2, 3]]));
        assert_eq!(q.table, vec![0, 0, 1, 1]);
        assert_eq!(q.cod.size, 2);
    }

    #[test]
    fn coequaliser_full_is_constant() {
        let q = coequaliser(&EqRel::full(set(5)));
        assert_eq!(q.cod.size, 1);
        assert!(q.table.iter().all(|&v| v == 0));
    }

    #[test]
    fn compose_discrete_neutral() {
        let r = rel(4, &[&[0, 1], &[2, 3]]);
        let d = EqRel::discrete(set(4));
        assert_eq!(compose_rel(&r, &d).unwrap().pairs, r.to_binrel().pairs);
        assert_eq!(compose_rel(&d, &r).unwrap().pairs, r.to_binrel().pairs);
    }

    #[test]
    fn compose_full_absorbs() {
        let f = EqRel::full(set(3));
        assert_eq!(compose_rel(&f, &f).unwrap().pairs, f.to_binrel().pairs);
    }

    #[test]
    fn compose_non_permutable_pair() {
        let r = rel(3, &[&[0, 1], &[2]]);
        let s = rel(3, &[&[0], &[1, 2]]);
        let rs = compose_rel(&r, &s).unwrap();
        let sr = compose_rel(&s, &r).unwrap();
        assert!(rs.contains(0, 2));
        assert!(!sr.contains(0, 2));
        assert!(!is_permutable(&r, &s).unwrap());
        // oracle: pairwise enumeration
        let in_comp = |a: &EqRel, b: &EqRel, x: usize, z: usize| {
            (0..3).any(|y| a.related(x, y) && b.related(y, z))
        };
        for x in 0..3 {
            for z in 0..3 {
                assert_eq!(rs.contains(x, z), in_comp(&r, &s, x, z));
                assert_eq!(sr.contains(x, z), in_comp(&s, &r, x, z));
            }
        }
    }

    #[test]
    fn self_permutable() {
        let r = rel(4, &[&[0, 1], &[2, 3]]);
        assert!(is_permutable(&r, &r).unwrap());
    }

    #[test]
    fn lattice_unit_laws() {
        let r = rel(4, &[&[0, 1], &[2, 3]]);
        assert_eq!(meet_rel(&r, &EqRel::full(set(4))).unwrap(), r);
        assert_eq!(join_rel(&r, &EqRel::discrete(set(4))).unwrap(), r);
    }

    #[test]
    fn join_closure_by_hand() {
        let r = rel(3, &[&[0, 1], &[2]]);
        let s = rel(3, &[&[0], &[1, 2]]);
        assert_eq!(join_rel(&r, &s).unwrap(), EqRel::full(set(3)));
    }

    #[test]
    fn meet_block_intersection() {
        let r = rel(4, &[&[0, 1], &[2, 3]]);
        let s = rel(4, &[&[0, 2], &[1, 3]]);
        assert_eq!(meet_rel(&r, &s).unwrap(), EqRel::discrete(set(4)));
    }

    #[test]
    fn pullback_identity_diagonal() {
        let id = FinMap::identity(&set(3));
        let (apex, p1, p2) = pullback(&id, &id).unwrap();
        assert_eq!(apex.size, 3);
        assert!(p1.is_bijective() && p2.is_bijective());
    }

    #[test]
    fn pullback_disjoint_constants_empty() {
        let f = FinMap::new(set(2), set(2), vec![0, 0]).unwrap();
        let g = FinMap::new(set(2), set(2), vec![1, 1]).unwrap();
        let (apex, _, _) = pullback(&f, &g).unwrap();
        assert_eq!(apex.size, 0);
    }

    #[test]
    fn pullback_mod2_count() {
        let f = FinMap::new(set(4), set(2), vec![0, 1, 0, 1]).unwrap();
        let (apex, _, _) = pullback(&f, &f).unwrap();
        assert_eq!(apex.size, 8);
    }

    #[test]
    fn regular_pushout_identity_sides() {
        let id = FinMap::identity(&set(3));
        let sq = Square { r: id.clone(), s: id.clone(), u: id.clone(), v: id };
        assert!(is_regular_pushout(&sq).unwrap().verdict);
    }

    #[test]
    fn regular_pushout_z6() {
        // Z/6 → Z/2 and Z/6 → Z/3 as set maps; corner = point of agreement Z/1.
        let r = FinMap::new(set(6), set(2), vec![0, 1, 0, 1, 0, 1]).unwrap();
        let s = FinMap::new(set(6), set(3), vec![0, 1, 2, 0, 1, 2]).unwrap();
        let u = FinMap::new(set(2), set(1), vec![0, 0]).unwrap();
        let v = FinMap::new(set(3), set(1), vec![0, 0, 0]).unwrap();
        let rep = is_regular_pushout(&Square { r, s, u, v }).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn regular_pushout_failure_with_witness() {
        // X = {0,1,2}; r collapses {0,1}, s collapses {1,2}; corner a point.
        let r = FinMap::new(set(3), set(2), vec![0, 0, 1]).unwrap();
        let s = FinMap::new(set(3), set(2), vec![0, 1, 1]).unwrap();
        let u = FinMap::new(set(2), set(1), vec![0, 0]).unwrap();
        let v = FinMap::new(set(2), set(1), vec![0, 0]).unwrap();
        let rep = is_regular_pushout(&Square { r, s, u, v }).unwrap();
        assert!(!rep.verdict);
        let w = rep.witness.unwrap();
        // comparison misses (class(2), class(0)) = (1, 0)
        assert_eq!(w["unreached_pullback_element"]["b"], 1);
        assert_eq!(w["unreached_pullback_element"]["c"], 0);
    }

    #[test]
    fn exact_fork_by_construction() {
        let f = FinMap::new(set(4), set(2), vec![0, 0, 1, 1]).unwrap();
        let fork = eq_fork(&f);
        assert_eq!(fork.graph.edges.size, 8);
        assert!(is_exact_fork(&fork).unwrap());
    }

    #[test]
    fn exact_fork_rejects_too_small_graph() {
        let f = FinMap::new(set(4), set(2), vec![0, 0, 1, 1]).unwrap();
        let fork = Fork {
            graph: ReflexiveGraph::from_eqrel(&EqRel::discrete(set(4))),
            arrow: f,
        };
        assert!(!is_exact_fork(&fork).unwrap());
    }

    #[test]
    fn exact_fork_rejects_too_big_graph() {
        let f = FinMap::new(set(4), set(2), vec![0, 0, 1, 1]).unwrap();
        let fork = Fork { graph: ReflexiveGraph::from_eqrel(&EqRel::full(set(4))), arrow: f };
        assert!(!is_exact_fork(&fork).unwrap());
    }

    #[test]
    fn eq_fork_identity_has_diagonal_graph() {
        let fork = eq_fork(&FinMap::identity(&set(3)));
        assert_eq!(fork.graph.edges.size, 3);
        assert!(is_exact_fork(&fork).unwrap());
    }

    #[test]
    fn coeq_fork_trivial_graph() {
        let v = set(3);
        let g = ReflexiveGraph {
            edges: v.clone(),
            vertices: v.clone(),
            d: FinMap::identity(&v),
            c: FinMap::identity(&v),
            e: FinMap::identity(&v),
        };
        let fork = coeq_fork(&g).unwrap();
        assert!(fork.arrow.is_bijective());
    }

    #[test]
    fn empty_carrier_is_legal() {
        let e = set(0);
        let r = EqRel::discrete(e.clone());
        assert_eq!(r, EqRel::full(e.clone()));
        assert_eq!(coequaliser(&r).cod.size, 0);
        let f = FinMap::new(e.clone(), e.clone(), vec![]).unwrap();
        assert_eq!(kernel_pair(&f), r);
        assert!(is_permutable(&r, &r).unwrap());
    }

    #[test]
    fn effectiveness_round_trip_small() {
        // kernel_pair(coequaliser(R)) = R for a couple of hand partitions;
        // exhaustive versions live in the property suite.
        for blocks in [vec![vec![0, 2], vec![1], vec![3]], vec![vec![0, 1, 2, 3]]] {
            let r = EqRel::from_blocks(set(4), blocks).unwrap();
            assert_eq!(kernel_pair(&coequaliser(&r)), r);
        }
    }
}
