//! Independent brute-force cross-checks and counterexample search. The
//! extension oracle unrolls the recursive definition by explicit element
//! enumeration; the search enumerates bounded instance spaces, with a seeded
//! subsample when the space exceeds the budget.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abfg::IntLattice;
use crate::cubes::{
    build_cube_set, check_distributive, is_n_cubic_extension, is_n_fold_regular_epi, Cube,
    EqRelLattice, SetAmbient, ZLatticeOps,
};
use crate::grpalg::{active_catalog, congruence_of, enumerate_normal_subgroups, FinGroup, NormalSubgroup};
use crate::relcore::{EqRel, FinSet};
use crate::report::CheckReport;
use crate::{Error, Result};

/// Non-recursive extension check for n ≤ 3: every edge surjective, every
/// 2-face comparison surjective, and for n = 3 the comparison into the object
/// of compatible co-atom triples surjective — all by element enumeration.
pub fn brute_extension_oracle(cube: &Cube<SetAmbient>) -> Result<bool> {
    let n = cube.n;
    if n > 3 {
        return Err(Error::Unsupported(format!("brute oracle handles n <= 3, got {n}")));
    }
    for m in 0..1usize << n {
        for d in 0..n {
            if m & (1 << d) != 0 && !cube.edge(m, d)?.is_surjective() {
                return Ok(false);
            }
        }
    }
    for m in 0..1usize << n {
        for i in 0..n {
            for j in (i + 1)..n {
                if m & (1 << i) == 0 || m & (1 << j) == 0 {
                    continue;
                }
                let fi = cube.edge(m, i)?; // O_m -> O_{m\i}
                let fj = cube.edge(m, j)?; // O_m -> O_{m\j}
                let gi = cube.edge(m ^ (1 << i), j)?; // O_{m\i} -> O_{m\ij}
                let gj = cube.edge(m ^ (1 << j), i)?; // O_{m\j} -> O_{m\ij}
                let mut hit: BTreeSet<(usize, usize)> = BTreeSet::new();
                for x in 0..cube.objects[m].size {
                    hit.insert((fi.table[x], fj.table[x]));
                }
                for a in 0..fi.cod.size {
                    for b in 0..fj.cod.size {
                        if gi.table[a] == gj.table[b] && !hit.contains(&(a, b)) {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    if n == 3 {
        let top = 7usize;
        let e0 = cube.edge(top, 0)?; // X -> O_6
        let e1 = cube.edge(top, 1)?; // X -> O_5
        let e2 = cube.edge(top, 2)?; // X -> O_3
        let a01 = cube.edge(6, 1)?; // O_6 -> O_4
        let a10 = cube.edge(5, 0)?; // O_5 -> O_4
        let a02 = cube.edge(6, 2)?; // O_6 -> O_2
        let a20 = cube.edge(3, 0)?; // O_3 -> O_2
        let a12 = cube.edge(5, 2)?; // O_5 -> O_1
        let a21 = cube.edge(3, 1)?; // O_3 -> O_1
        let mut hit: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        for x in 0..cube.objects[top].size {
            hit.insert((e0.table[x], e1.table[x], e2.table[x]));
        }
        for a in 0..e0.cod.size {
            for b in 0..e1.cod.size {
                if a01.table[a] != a10.table[b] {
                    continue;
                }
                for c in 0..e2.cod.size {
                    if a02.table[a] == a20.table[c]
                        && a12.table[b] == a21.table[c]
                        && !hit.contains(&(a, b, c))
                    {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// What the search is looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    Distributive,
    NonDistributive,
    /// Every (n−1)-sub-tuple distributive, the tuple itself not.
    SubTuplesDistributiveTupleNot,
    /// n-fold regular epimorphism that is not an n-cubic extension.
    ExtensionRegularEpiGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextKind {
    /// Catalog groups up to `order_bound`, tuples of normal subgroups.
    Group,
    /// Z/m for m up to `modulus_bound`, tuples of ideals.
    Zmod,
    /// Sublattices of Z^ambient_rank with generator entries up to
    /// `entry_bound`: single generators for rank 2, up to two for rank 3.
    Zlattice,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpec {
    pub context: ContextKind,
    pub n: usize,
    pub predicate: Predicate,
    #[serde(default)]
    pub order_bound: Option<usize>,
    #[serde(default)]
    pub modulus_bound: Option<usize>,
    #[serde(default)]
    pub ambient_rank: Option<usize>,
    #[serde(default)]
    pub entry_bound: Option<i64>,
    /// Maximum number of instances examined.
    pub max_instances: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchWitness {
    pub instance: Value,
    pub report: CheckReport,
}

/// One candidate instance: either a congruence tuple or a lattice tuple.
enum Instance {
    Rels { carrier: FinSet, rels: Vec<EqRel>, describe: Value },
    Lats { lats: Vec<IntLattice>, describe: Value },
}

/// A candidate space: shared context data plus one index combination per
/// candidate, realized into a full instance only when examined.
enum Space {
    Group { groups: Vec<(Arc<FinGroup>, Vec<NormalSubgroup>)> },
    Zmod { moduli: Vec<(usize, Vec<usize>, Vec<EqRel>)> },
    Zlattice { rank: usize, lats: Vec<IntLattice> },
}

/// (context slot, index combination into that slot's subobject list)
type Candidate = (usize, Vec<usize>);

fn combinations(k: usize, n: usize, with_replacement: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(
        k: usize,
        n: usize,
        start: usize,
        slot: usize,
        rep: bool,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if slot == n {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur[slot] = i;
            rec(k, n, if rep { i } else { i + 1 }, slot + 1, rep, cur, out);
        }
    }
    if k > 0 {
        rec(k, n, 0, 0, with_replacement, &mut cur, &mut out);
    }
    out
}

fn lattice_candidates(rank: usize, entry_bound: i64) -> Result<Vec<IntLattice>> {
    if !(2..=3).contains(&rank) {
        return Err(Error::Unsupported(format!(
            "zlattice search supports rank 2 or 3, got {rank}"
        )));
    }
    let mut vecs: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![0i64; rank];
    fn fill(bound: i64, slot: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if slot == cur.len() {
            if cur.iter().any(|&v| v != 0) {
                out.push(cur.clone());
            }
            return;
        }
        for v in -bound..=bound {
            cur[slot] = v;
            fill(bound, slot + 1, cur, out);
        }
    }
    fill(entry_bound, 0, &mut cur, &mut vecs);
    let mut lats: Vec<IntLattice> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut push = |l: IntLattice, lats: &mut Vec<IntLattice>| {
        if seen.insert(format!("{:?}", l.basis)) {
            lats.push(l);
        }
    };
    for v in &vecs {
        push(IntLattice::from_vectors(rank, &[v.clone()])?, &mut lats);
    }
    if rank == 3 {
        for i in 0..vecs.len() {
            for j in (i + 1)..vecs.len() {
                let l = IntLattice::from_vectors(rank, &[vecs[i].clone(), vecs[j].clone()])?;
                if l.basis.cols == 2 {
                    push(l, &mut lats);
                }
            }
        }
    }
    // Higher-rank sublattices first, then lexicographic: keeps structurally
    // rich candidates early in the enumeration order.
    lats.sort_by(|a, b| {
        b.basis
            .cols
            .cmp(&a.basis.cols)
            .then_with(|| format!("{:?}", a.basis).cmp(&format!("{:?}", b.basis)))
    });
    Ok(lats)
}

fn build_space(spec: &SearchSpec) -> Result<(Space, Vec<Candidate>)> {
    match spec.context {
        ContextKind::Group => {
            let bound = spec
                .order_bound
                .ok_or_else(|| Error::Malformed("group search needs order_bound".into()))?;
            let mut groups = Vec::new();
            let mut cands = Vec::new();
            for g in active_catalog()? {
                if g.order() > bound {
                    continue;
                }
                let subs = enumerate_normal_subgroups(&g);
                let slot = groups.len();
                for combo in combinations(subs.len(), spec.n, true) {
                    cands.push((slot, combo));
                }
                groups.push((g, subs));
            }
            Ok((Space::Group { groups }, cands))
        }
        ContextKind::Zmod => {
            let bound = spec
                .modulus_bound
                .ok_or_else(|| Error::Malformed("zmod search needs modulus_bound".into()))?;
            let mut moduli = Vec::new();
            let mut cands = Vec::new();
            for m in 2..=bound {
                let divisors: Vec<usize> = (1..=m).filter(|d| m % d == 0).collect();
                let carrier = FinSet::new(m);
                let rels: Vec<EqRel> = divisors
                    .iter()
                    .map(|&d| {
                        EqRel::from_pairs(carrier.clone(), (0..m).map(|x| (x, (x + d) % m)))
                            .expect("ideal congruence")
                    })
                    .collect();
                let slot = moduli.len();
                for combo in combinations(divisors.len(), spec.n, true) {
                    cands.push((slot, combo));
                }
                moduli.push((m, divisors, rels));
            }
            Ok((Space::Zmod { moduli }, cands))
        }
        ContextKind::Zlattice => {
            let bound = spec
                .entry_bound
                .ok_or_else(|| Error::Malformed("zlattice search needs entry_bound".into()))?;
            let rank = spec.ambient_rank.unwrap_or(2);
            let lats = lattice_candidates(rank, bound)?;
            // Repeated entries make the tuple degenerate; use plain
            // combinations without replacement here.
            let cands: Vec<Candidate> =
                combinations(lats.len(), spec.n, false).into_iter().map(|c| (0, c)).collect();
            Ok((Space::Zlattice { rank, lats }, cands))
        }
    }
}

fn realize(space: &Space, cand: &Candidate) -> Instance {
    let (slot, combo) = cand;
    match space {
        Space::Group { groups } => {
            let (g, subs) = &groups[*slot];
            let rels: Vec<EqRel> = combo.iter().map(|&i| congruence_of(&subs[i])).collect();
            let describe = json!({
                "group": g.name.clone().unwrap_or_else(|| format!("order {}", g.order())),
                "order": g.order(),
                "subgroups": combo.iter().map(|&i| subs[i].elements.clone()).collect::<Vec<_>>(),
            });
            Instance::Rels { carrier: FinSet::new(g.order()), rels, describe }
        }
        Space::Zmod { moduli } => {
            let (m, divisors, rels_of) = &moduli[*slot];
            let rels: Vec<EqRel> = combo.iter().map(|&i| rels_of[i].clone()).collect();
            let describe = json!({
                "modulus": m,
                "ideals": combo.iter().map(|&i| divisors[i]).collect::<Vec<_>>(),
            });
            Instance::Rels { carrier: FinSet::new(*m), rels, describe }
        }
        Space::Zlattice { rank, lats } => {
            let tuple: Vec<IntLattice> = combo.iter().map(|&i| lats[i].clone()).collect();
            let describe = json!({
                "ambient_rank": rank,
                "lattices": tuple
                    .iter()
                    .map(|l| {
                        (0..l.basis.cols)
                            .map(|j| {
                                l.basis.col(j).iter().map(|v| v.to_string()).collect::<Vec<_>>()
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>(),
            });
            Instance::Lats { lats: tuple, describe }
        }
    }
}

fn evaluate(inst: &Instance, predicate: Predicate) -> Result<Option<CheckReport>> {
    match predicate {
        Predicate::Distributive | Predicate::NonDistributive => {
            let report = match inst {
                Instance::Rels { rels, .. } => check_distributive(&EqRelLattice, rels)?,
                Instance::Lats { lats, .. } => check_distributive(&ZLatticeOps, lats)?,
            };
            let want = predicate == Predicate::Distributive;
            Ok((report.verdict == want).then_some(report))
        }
        Predicate::SubTuplesDistributiveTupleNot => {
            let (whole, subs): (CheckReport, Vec<CheckReport>) = match inst {
                Instance::Rels { rels, .. } => {
                    let whole = check_distributive(&EqRelLattice, rels)?;
                    if whole.verdict {
                        return Ok(None);
                    }
                    let mut subs = Vec::new();
                    for skip in 0..rels.len() {
                        let sub: Vec<EqRel> = rels
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != skip)
                            .map(|(_, r)| r.clone())
                            .collect();
                        subs.push(check_distributive(&EqRelLattice, &sub)?);
                    }
                    (whole, subs)
                }
                Instance::Lats { lats, .. } => {
                    let whole = check_distributive(&ZLatticeOps, lats)?;
                    if whole.verdict {
                        return Ok(None);
                    }
                    let mut subs = Vec::new();
                    for skip in 0..lats.len() {
                        let sub: Vec<IntLattice> = lats
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != skip)
                            .map(|(_, l)| l.clone())
                            .collect();
                        subs.push(check_distributive(&ZLatticeOps, &sub)?);
                    }
                    (whole, subs)
                }
            };
            if !whole.verdict && subs.iter().all(|s| s.verdict) {
                Ok(Some(whole))
            } else {
                Ok(None)
            }
        }
        Predicate::ExtensionRegularEpiGap => {
            let (carrier, rels) = match inst {
                Instance::Rels { carrier, rels, .. } => (carrier, rels),
                Instance::Lats { .. } => {
                    return Err(Error::Unsupported(
                        "extension gap search needs a finite congruence context".into(),
                    ))
                }
            };
            let built = build_cube_set(carrier, rels)?;
            let epi = is_n_fold_regular_epi(&SetAmbient, &built.cube)?;
            let ext = is_n_cubic_extension(&SetAmbient, &built.cube)?;
            if epi.verdict && !ext.verdict {
                Ok(Some(ext))
            } else {
                Ok(None)
            }
        }
    }
}

/// Enumerate the instance space of the spec and return every examined
/// instance that satisfies the predicate, paired with its report. When the
/// space exceeds the budget, the examined subset is the first half of the
/// budget in enumeration order plus a seeded sample of the remainder, so the
/// result is byte-identical for a fixed seed and budget.
pub fn search(spec: &SearchSpec) -> Result<Vec<SearchWitness>> {
    if spec.n == 0 || spec.max_instances == 0 {
        return Err(Error::Malformed("search needs n >= 1 and a positive budget".into()));
    }
    let (space, cands) = build_space(spec)?;
    let picked: Vec<usize> = if cands.len() <= spec.max_instances {
        (0..cands.len()).collect()
    } else {
        let prefix = spec.max_instances / 2;
        let extra = spec.max_instances - prefix;
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        let mut idx: Vec<usize> = (0..prefix).collect();
        let sampled = rand::seq::index::sample(&mut rng, cands.len() - prefix, extra);
        idx.extend(sampled.into_iter().map(|i| i + prefix));
        idx.sort();
        idx.dedup();
        idx
    };
    let mut out = Vec::new();
    for i in picked {
        let inst = realize(&space, &cands[i]);
        if let Some(report) = evaluate(&inst, spec.predicate)? {
            let describe = match inst {
                Instance::Rels { describe, .. } => describe,
                Instance::Lats { describe, .. } => describe,
            };
            out.push(SearchWitness { instance: describe, report });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubes::build_cube_group;
    use crate::grpalg::klein_four;

    fn cong(m: usize, d: usize) -> EqRel {
        EqRel::from_pairs(FinSet::new(m), (0..m).map(|x| (x, (x + d) % m))).unwrap()
    }

    #[test]
    fn brute_oracle_identity_cube() {
        let built = build_cube_set(&FinSet::new(5), &[]).unwrap();
        assert!(brute_extension_oracle(&built.cube).unwrap());
    }

    #[test]
    fn brute_oracle_rejects_v4() {
        let g = klein_four();
        let subs: Vec<NormalSubgroup> =
            (1..4).map(|i| NormalSubgroup::new(g.clone(), vec![0, i]).unwrap()).collect();
        let built = build_cube_group(&g, &subs).unwrap();
        assert!(!brute_extension_oracle(&built.cube).unwrap());
        assert!(!is_n_cubic_extension(&SetAmbient, &built.cube).unwrap().verdict);
    }

    #[test]
    fn brute_oracle_accepts_z12_triple() {
        let rels = [cong(12, 2), cong(12, 3), cong(12, 4)];
        let built = build_cube_set(&FinSet::new(12), &rels).unwrap();
        assert!(brute_extension_oracle(&built.cube).unwrap());
    }

    #[test]
    fn search_finds_the_v4_triple() {
        let spec = SearchSpec {
            context: ContextKind::Group,
            n: 3,
            predicate: Predicate::NonDistributive,
            order_bound: Some(8),
            modulus_bound: None,
            ambient_rank: None,
            entry_bound: None,
            max_instances: 100_000,
            seed: 0,
        };
        let witnesses = search(&spec).unwrap();
        assert!(witnesses.iter().any(|w| w.instance["order"] == json!(4)
            && w.instance["subgroups"].as_array().unwrap().len() == 3));
    }

    #[test]
    fn extension_gap_search_agrees_with_non_distributivity() {
        let gap = SearchSpec {
            context: ContextKind::Group,
            n: 3,
            predicate: Predicate::ExtensionRegularEpiGap,
            order_bound: Some(4),
            modulus_bound: None,
            ambient_rank: None,
            entry_bound: None,
            max_instances: 100_000,
            seed: 0,
        };
        let nondist = SearchSpec { predicate: Predicate::NonDistributive, ..gap.clone() };
        let a: Vec<Value> = search(&gap).unwrap().into_iter().map(|w| w.instance).collect();
        let b: Vec<Value> = search(&nondist).unwrap().into_iter().map(|w| w.instance).collect();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn search_zmod_ideals_are_all_distributive() {
        let spec = SearchSpec {
            context: ContextKind::Zmod,
            n: 3,
            predicate: Predicate::NonDistributive,
            order_bound: None,
            modulus_bound: Some(30),
            ambient_rank: None,
            entry_bound: None,
            max_instances: 1_000_000,
            seed: 0,
        };
        assert!(search(&spec).unwrap().is_empty());
    }

    // Single-generator sublattices of Z² never produce a quadruple whose
    // sub-triples all distribute while the whole does not; the honest result
    // here is an empty witness list.
    #[test]
    fn rank_two_quadruple_search_comes_up_empty() {
        let spec = SearchSpec {
            context: ContextKind::Zlattice,
            n: 4,
            predicate: Predicate::SubTuplesDistributiveTupleNot,
            order_bound: None,
            modulus_bound: None,
            ambient_rank: Some(2),
            entry_bound: Some(3),
            max_instances: 20_000,
            seed: 7,
        };
        assert!(search(&spec).unwrap().is_empty());
    }

    // In Z³ the kernels of the four face maps of a truncated simplicial
    // abelian group give a quadruple with all sub-triples distributive but
    // the quadruple not; the bounded search space contains it.
    #[test]
    fn rank_three_quadruple_search_finds_a_witness() {
        let spec = SearchSpec {
            context: ContextKind::Zlattice,
            n: 4,
            predicate: Predicate::SubTuplesDistributiveTupleNot,
            order_bound: None,
            modulus_bound: None,
            ambient_rank: Some(3),
            entry_bound: Some(1),
            max_instances: 3_000,
            seed: 7,
        };
        let witnesses = search(&spec).unwrap();
        assert!(!witnesses.is_empty());
    }

    #[test]
    fn search_is_deterministic() {
        let spec = SearchSpec {
            context: ContextKind::Group,
            n: 3,
            predicate: Predicate::NonDistributive,
            order_bound: Some(8),
            modulus_bound: None,
            ambient_rank: None,
            entry_bound: None,
            max_instances: 50,
            seed: 42,
        };
        let a = serde_json::to_string(&search(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&search(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
