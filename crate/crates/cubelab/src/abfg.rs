//! Finitely generated abelian groups via integer-matrix presentations:
//! Hermite and Smith normal forms, subgroup lattices of Z^d, kernels,
//! cokernels, pullbacks and pushouts — all in exact arbitrary-precision
//! arithmetic.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// A dense integer matrix with exact entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Malformed("ragged matrix rows".into()));
        }
        Ok(IntMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().map(BigInt::from).collect(),
        })
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Malformed("ragged matrix rows".into()));
        }
        Ok(IntMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Build from a list of columns, each of length `rows`.
    pub fn from_cols(rows: usize, cols: Vec<Vec<BigInt>>) -> Result<Self> {
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::Malformed("column length mismatch".into()));
        }
        let ncols = cols.len();
        let mut m = IntMatrix::zeros(rows, ncols);
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::RankMismatch(format!(
                "matrix product {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(Error::RankMismatch("matrix-vector product".into()));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect())
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows {
            return Err(Error::RankMismatch("hstack row mismatch".into()));
        }
        let mut out = IntMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        Ok(out)
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.cols {
            return Err(Error::RankMismatch("vstack column mismatch".into()));
        }
        let mut out = IntMatrix::zeros(self.rows + other.rows, self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(i, j, self.get(i, j).clone());
            }
            for i in 0..other.rows {
                out.set(self.rows + i, j, other.get(i, j).clone());
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::RankMismatch("matrix subtraction".into()));
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    /// col[b] += q * col[a]
    fn add_col_multiple(&mut self, b: usize, a: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, b) + q * self.get(i, a);
            self.set(i, b, v);
        }
    }

    /// Replace columns (a, b) by (x*a + y*b, u*a + v*b); used for gcd steps.
    fn combine_cols(&mut self, a: usize, b: usize, x: &BigInt, y: &BigInt, u: &BigInt, v: &BigInt) {
        for i in 0..self.rows {
            let va = self.get(i, a).clone();
            let vb = self.get(i, b).clone();
            self.set(i, a, x * &va + y * &vb);
            self.set(i, b, u * &va + v * &vb);
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    fn add_row_multiple(&mut self, b: usize, a: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(b, j) + q * self.get(a, j);
            self.set(b, j, v);
        }
    }

    fn combine_rows(&mut self, a: usize, b: usize, x: &BigInt, y: &BigInt, u: &BigInt, v: &BigInt) {
        for j in 0..self.cols {
            let va = self.get(a, j).clone();
            let vb = self.get(b, j).clone();
            self.set(a, j, x * &va + y * &vb);
            self.set(b, j, u * &va + v * &vb);
        }
    }
}

/// Column Hermite normal form: returns (H, U) with H = M·U, U unimodular.
/// Pivots are positive, sit in strictly increasing rows from left to right,
/// entries left of a pivot (same row) are reduced into [0, pivot), and zero
/// columns are pushed to the right. The form is canonical.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.cols);
    let mut pivot_col = 0;
    for row in 0..m.rows {
        if pivot_col >= h.cols {
            break;
        }
        // gcd out everything in this row to the right of pivot_col
        let mut found = false;
        for j in pivot_col..h.cols {
            if !h.get(row, j).is_zero() {
                if !found {
                    h.swap_cols(pivot_col, j);
                    u.swap_cols(pivot_col, j);
                    found = true;
                } else {
                    let a = h.get(row, pivot_col).clone();
                    let b = h.get(row, j).clone();
                    let eg = a.extended_gcd(&b);
                    // (x, y) with x*a + y*b = g; cols (p, j) ← (x p + y j, -b/g p + a/g j)
                    let g = eg.gcd;
                    let (x, y) = (eg.x, eg.y);
                    let bg = -(&b / &g);
                    let ag = &a / &g;
                    h.combine_cols(pivot_col, j, &x, &y, &bg, &ag);
                    u.combine_cols(pivot_col, j, &x, &y, &bg, &ag);
                }
            }
        }
        if !found {
            continue;
        }
        if h.get(row, pivot_col).is_negative() {
            h.negate_col(pivot_col);
            u.negate_col(pivot_col);
        }
        let p = h.get(row, pivot_col).clone();
        for j in 0..pivot_col {
            let v = h.get(row, j);
            if !v.is_zero() {
                let q = -v.div_floor(&p);
                h.add_col_multiple(j, pivot_col, &q);
                u.add_col_multiple(j, pivot_col, &q);
            }
        }
        pivot_col += 1;
    }
    (h, u)
}

/// Smith normal form: returns (D, U, V) with D = U·M·V, U and V unimodular,
/// D diagonal with a nonnegative divisibility chain d1 | d2 | …
pub fn snf(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let mut d = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let t = m.rows.min(m.cols);
    let mut k = 0;
    while k < t {
        // find a nonzero pivot in the remaining block
        let mut pivot = None;
        'outer: for i in k..d.rows {
            for j in k..d.cols {
                if !d.get(i, j).is_zero() {
                    pivot = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap_rows(k, pi);
        u.swap_rows(k, pi);
        d.swap_cols(k, pj);
        v.swap_cols(k, pj);
        loop {
            // clear column k below the pivot
            let mut dirty = false;
            for i in k + 1..d.rows {
                if d.get(i, k).is_zero() {
                    continue;
                }
                let a = d.get(k, k).clone();
                let b = d.get(i, k).clone();
                if (&b % &a).is_zero() {
                    let q = -(&b / &a);
                    d.add_row_multiple(i, k, &q);
                    u.add_row_multiple(i, k, &q);
                } else {
                    let eg = a.extended_gcd(&b);
                    let g = eg.gcd;
                    let (x, y) = (eg.x, eg.y);
                    let bg = -(&b / &g);
                    let ag = &a / &g;
                    d.combine_rows(k, i, &x, &y, &bg, &ag);
                    u.combine_rows(k, i, &x, &y, &bg, &ag);
                    dirty = true;
                }
            }
            // clear row k right of the pivot
            for j in k + 1..d.cols {
                if d.get(k, j).is_zero() {
                    continue;
                }
                let a = d.get(k, k).clone();
                let b = d.get(k, j).clone();
                if (&b % &a).is_zero() {
                    let q = -(&b / &a);
                    d.add_col_multiple(j, k, &q);
                    v.add_col_multiple(j, k, &q);
                } else {
                    let eg = a.extended_gcd(&b);
                    let g = eg.gcd;
                    let (x, y) = (eg.x, eg.y);
                    let bg = -(&b / &g);
                    let ag = &a / &g;
                    d.combine_cols(k, j, &x, &y, &bg, &ag);
                    v.combine_cols(k, j, &x, &y, &bg, &ag);
                    dirty = true;
                }
            }
            let col_clear = (k + 1..d.rows).all(|i| d.get(i, k).is_zero());
            let row_clear = (k + 1..d.cols).all(|j| d.get(k, j).is_zero());
            if !dirty && col_clear && row_clear {
                break;
            }
        }
        if d.get(k, k).is_negative() {
            d.negate_row(k);
            u.negate_row(k);
        }
        k += 1;
    }
    // enforce the divisibility chain
    loop {
        let mut fixed = true;
        for i in 0..k.saturating_sub(1) {
            let a = d.get(i, i).clone();
            let b = d.get(i + 1, i + 1).clone();
            if a.is_zero() || (&b % &a).is_zero() {
                continue;
            }
            fixed = false;
            // fold b into position (i, i) and re-diagonalise the 2x2 block
            d.add_col_multiple(i, i + 1, &BigInt::one());
            v.add_col_multiple(i, i + 1, &BigInt::one());
            let eg = a.extended_gcd(&b);
            let g = eg.gcd;
            let (x, y) = (eg.x, eg.y);
            let bg = -(&b / &g);
            let ag = &a / &g;
            d.combine_rows(i, i + 1, &x, &y, &bg, &ag);
            u.combine_rows(i, i + 1, &x, &y, &bg, &ag);
            // clean up the off-diagonal fill-in
            let p = d.get(i, i).clone();
            let q = -(d.get(i, i + 1) / &p);
            d.add_col_multiple(i + 1, i, &q);
            v.add_col_multiple(i + 1, i, &q);
            if d.get(i + 1, i + 1).is_negative() {
                d.negate_row(i + 1);
                u.negate_row(i + 1);
            }
        }
        if fixed {
            break;
        }
    }
    // zeros trail: move zero diagonal entries past nonzero ones
    for i in 0..k {
        if d.get(i, i).is_zero() {
            for j in i + 1..k {
                if !d.get(j, j).is_zero() {
                    d.swap_rows(i, j);
                    u.swap_rows(i, j);
                    d.swap_cols(i, j);
                    v.swap_cols(i, j);
                    break;
                }
            }
        }
    }
    (d, u, v)
}

/// An integer solution of M·x = b, if one exists.
pub fn solve(m: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    if b.len() != m.rows {
        return None;
    }
    let (h, u) = hnf(m);
    let mut residue: Vec<BigInt> = b.to_vec();
    let mut y = vec![BigInt::zero(); m.cols];
    let mut col = 0;
    for row in 0..m.rows {
        if col < h.cols && !h.get(row, col).is_zero() {
            let p = h.get(row, col);
            let (q, r) = residue[row].div_rem(p);
            if !r.is_zero() {
                return None;
            }
            for i in 0..m.rows {
                let v = &residue[i] - &q * h.get(i, col);
                residue[i] = v;
            }
            y[col] = q;
            col += 1;
        } else if !residue[row].is_zero() {
            return None;
        }
    }
    u.mul_vec(&y).ok()
}

/// A basis (columns of U matching zero columns of the HNF) for the integer
/// kernel of M.
pub fn kernel(m: &IntMatrix) -> IntMatrix {
    let (h, u) = hnf(m);
    let zero_cols: Vec<usize> = (0..h.cols)
        .filter(|&j| (0..h.rows).all(|i| h.get(i, j).is_zero()))
        .collect();
    let mut out = IntMatrix::zeros(m.cols, zero_cols.len());
    for (jj, &j) in zero_cols.iter().enumerate() {
        for i in 0..m.cols {
            out.set(i, jj, u.get(i, j).clone());
        }
    }
    out
}

fn drop_zero_cols(h: &IntMatrix) -> IntMatrix {
    let cols: Vec<usize> = (0..h.cols)
        .filter(|&j| (0..h.rows).any(|i| !h.get(i, j).is_zero()))
        .collect();
    let mut out = IntMatrix::zeros(h.rows, cols.len());
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..h.rows {
            out.set(i, jj, h.get(i, j).clone());
        }
    }
    out
}

/// A subgroup of Z^d, stored as a canonical column-HNF basis with zero
/// columns dropped. Two lattices are equal iff their bases are identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntLattice {
    pub ambient_rank: usize,
    pub basis: IntMatrix,
}

impl IntLattice {
    pub fn from_generators(ambient_rank: usize, generators: &IntMatrix) -> Result<Self> {
        if generators.rows != ambient_rank {
            return Err(Error::RankMismatch(format!(
                "generators live in rank {}, expected {}",
                generators.rows, ambient_rank
            )));
        }
        let (h, _) = hnf(generators);
        Ok(IntLattice { ambient_rank, basis: drop_zero_cols(&h) })
    }

    pub fn from_vectors(ambient_rank: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        let cols: Vec<Vec<BigInt>> = vectors
            .iter()
            .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        IntLattice::from_generators(ambient_rank, &IntMatrix::from_cols(ambient_rank, cols)?)
    }

    pub fn zero(ambient_rank: usize) -> Self {
        IntLattice { ambient_rank, basis: IntMatrix::zeros(ambient_rank, 0) }
    }

    pub fn full(ambient_rank: usize) -> Self {
        IntLattice { ambient_rank, basis: IntMatrix::identity(ambient_rank) }
    }

    pub fn rank(&self) -> usize {
        self.basis.cols
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        v.len() == self.ambient_rank && solve(&self.basis, v).is_some()
    }

    pub fn is_sublattice_of(&self, other: &IntLattice) -> bool {
        self.ambient_rank == other.ambient_rank
            && (0..self.basis.cols).all(|j| other.contains(&self.basis.col(j)))
    }
}

fn check_same_rank(a: &IntLattice, b: &IntLattice) -> Result<()> {
    if a.ambient_rank != b.ambient_rank {
        return Err(Error::RankMismatch(format!(
            "lattices of ambient rank {} and {}",
            a.ambient_rank, b.ambient_rank
        )));
    }
    Ok(())
}

/// Sum of lattices: HNF of the concatenated bases.
pub fn lattice_join(a: &IntLattice, b: &IntLattice) -> Result<IntLattice> {
    check_same_rank(a, b)?;
    IntLattice::from_generators(a.ambient_rank, &a.basis.hstack(&b.basis)?)
}

/// Intersection, via the kernel of [A | B]: if (x; y) is in the kernel then
/// A·x = −B·y lies in both lattices, and all intersection elements arise so.
pub fn lattice_meet(a: &IntLattice, b: &IntLattice) -> Result<IntLattice> {
    check_same_rank(a, b)?;
    let combined = a.basis.hstack(&b.basis)?;
    let ker = kernel(&combined);
    let mut top = IntMatrix::zeros(a.basis.cols, ker.cols);
    for i in 0..a.basis.cols {
        for j in 0..ker.cols {
            top.set(i, j, ker.get(i, j).clone());
        }
    }
    IntLattice::from_generators(a.ambient_rank, &a.basis.mul(&top)?)
}

/// The fixed embedding of the additive group generated by the cube roots of
/// unity into Z²: 1 ↦ (1,0), a ↦ (0,1), a² ↦ (−1,−1), so 1 + a + a² = 0.
pub fn complexes_embedding() -> Vec<(&'static str, Vec<i64>)> {
    vec![("1", vec![1, 0]), ("a", vec![0, 1]), ("a^2", vec![-1, -1])]
}

/// Parse a symbolic generator over {1, a, a^2} with an optional integer
/// coefficient: "1", "a", "a^2", "2a", "-3a^2", "6", …
pub fn parse_symbolic(s: &str) -> Result<Vec<BigInt>> {
    let s = s.trim().replace('²', "^2");
    let (coeff_str, sym) = if let Some(idx) = s.find('a') {
        (&s[..idx], &s[idx..])
    } else {
        (&s[..], "1")
    };
    let coeff: BigInt = if coeff_str.is_empty() || coeff_str == "+" {
        BigInt::one()
    } else if coeff_str == "-" {
        -BigInt::one()
    } else {
        coeff_str
            .parse()
            .map_err(|_| Error::Malformed(format!("bad coefficient in {s:?}")))?
    };
    let base: Vec<i64> = match sym {
        "1" => vec![1, 0],
        "a" => vec![0, 1],
        "a^2" => vec![-1, -1],
        other => return Err(Error::Malformed(format!("unknown symbol {other:?}"))),
    };
    Ok(base.into_iter().map(|x| &coeff * BigInt::from(x)).collect())
}

/// Lattice in Z² spanned by symbolic generators over {1, a, a^2}.
pub fn lattice_from_symbolic(gens: &[String]) -> Result<IntLattice> {
    let cols: Result<Vec<Vec<BigInt>>> = gens.iter().map(|s| parse_symbolic(s)).collect();
    IntLattice::from_generators(2, &IntMatrix::from_cols(2, cols?)?)
}

/// A finitely generated abelian group presented as Z^gens / colspan(rels).
/// Relations are stored in canonical HNF; the invariant factors (nontrivial
/// torsion followed by zeros for the free rank) are cached on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FgAbGroup {
    pub gens: usize,
    pub rels: IntMatrix,
    invariants: Vec<BigInt>,
}

impl PartialEq for FgAbGroup {
    /// Group equality is isomorphism: equal invariant-factor sequences.
    fn eq(&self, other: &Self) -> bool {
        self.invariants == other.invariants
    }
}
impl Eq for FgAbGroup {}

impl FgAbGroup {
    pub fn new(gens: usize, rels: IntMatrix) -> Result<Self> {
        if rels.rows != gens {
            return Err(Error::Malformed(format!(
                "presentation has {} rows for {} generators",
                rels.rows, gens
            )));
        }
        let (h, _) = hnf(&rels);
        let rels = drop_zero_cols(&h);
        let (d, _, _) = snf(&rels);
        let mut invariants = Vec::new();
        let mut free = gens;
        for i in 0..d.rows.min(d.cols) {
            let v = d.get(i, i);
            if !v.is_zero() {
                free -= 1;
                if !v.is_one() {
                    invariants.push(v.clone());
                }
            }
        }
        invariants.extend(std::iter::repeat(BigInt::zero()).take(free));
        Ok(FgAbGroup { gens, rels, invariants })
    }

    pub fn free(rank: usize) -> Self {
        FgAbGroup::new(rank, IntMatrix::zeros(rank, 0)).expect("free presentation is valid")
    }

    pub fn cyclic(m: i64) -> Self {
        FgAbGroup::new(1, IntMatrix::from_rows(vec![vec![m]]).unwrap()).unwrap()
    }

    pub fn trivial() -> Self {
        FgAbGroup::new(0, IntMatrix::zeros(0, 0)).unwrap()
    }

    /// Invariant factors: nontrivial torsion d1 | d2 | …, then one zero per
    /// free rank.
    pub fn invariants(&self) -> &[BigInt] {
        &self.invariants
    }

    pub fn is_trivial(&self) -> bool {
        self.invariants.is_empty()
    }

    /// The relation lattice in Z^gens.
    pub fn relation_lattice(&self) -> IntLattice {
        IntLattice { ambient_rank: self.gens, basis: self.rels.clone() }
    }
}

/// A homomorphism of finitely generated abelian groups, as a matrix on
/// chosen generators. Well-definedness is validated on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FgAbHom {
    pub dom: FgAbGroup,
    pub cod: FgAbGroup,
    pub matrix: IntMatrix,
}

impl FgAbHom {
    pub fn new(dom: FgAbGroup, cod: FgAbGroup, matrix: IntMatrix) -> Result<Self> {
        if matrix.rows != cod.gens || matrix.cols != dom.gens {
            return Err(Error::IllDefinedHom(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.rows, matrix.cols, cod.gens, dom.gens
            )));
        }
        let cod_rels = cod.relation_lattice();
        for j in 0..dom.rels.cols {
            let image = matrix.mul_vec(&dom.rels.col(j))?;
            if !cod_rels.contains(&image) {
                return Err(Error::IllDefinedHom(format!(
                    "image of relation {j} is not a codomain relation"
                )));
            }
        }
        Ok(FgAbHom { dom, cod, matrix })
    }

    pub fn identity(g: &FgAbGroup) -> Self {
        FgAbHom { dom: g.clone(), cod: g.clone(), matrix: IntMatrix::identity(g.gens) }
    }

    pub fn zero(dom: &FgAbGroup, cod: &FgAbGroup) -> Self {
        FgAbHom {
            dom: dom.clone(),
            cod: cod.clone(),
            matrix: IntMatrix::zeros(cod.gens, dom.gens),
        }
    }

    /// g ∘ self.
    pub fn then(&self, g: &FgAbHom) -> Result<FgAbHom> {
        if self.cod.gens != g.dom.gens {
            return Err(Error::IllDefinedHom("composition shape mismatch".into()));
        }
        Ok(FgAbHom {
            dom: self.dom.clone(),
            cod: g.cod.clone(),
            matrix: g.matrix.mul(&self.matrix)?,
        })
    }

    pub fn is_zero_hom(&self) -> bool {
        let cod_rels = self.cod.relation_lattice();
        (0..self.matrix.cols).all(|j| cod_rels.contains(&self.matrix.col(j)))
    }

    /// Generator-wise equality modulo codomain relations.
    pub fn hom_equal(&self, other: &FgAbHom) -> bool {
        if self.matrix.cols != other.matrix.cols || self.matrix.rows != other.matrix.rows {
            return false;
        }
        let diff = match self.matrix.sub(&other.matrix) {
            Ok(d) => d,
            Err(_) => return false,
        };
        let cod_rels = self.cod.relation_lattice();
        (0..diff.cols).all(|j| cod_rels.contains(&diff.col(j)))
    }
}

/// Kernel: the subgroup of the domain mapping into the codomain's relations.
pub fn hom_kernel(f: &FgAbHom) -> Result<(FgAbGroup, FgAbHom)> {
    // preimage lattice: x with M·x ∈ span(R_cod)
    let combined = f.matrix.hstack(&f.cod.rels)?;
    let ker = kernel(&combined);
    let mut pre = IntMatrix::zeros(f.dom.gens, ker.cols);
    for i in 0..f.dom.gens {
        for j in 0..ker.cols {
            pre.set(i, j, ker.get(i, j).clone());
        }
    }
    // include the domain relations so the kernel subgroup is saturated
    let pre = pre.hstack(&f.dom.rels)?;
    let pre_lat = IntLattice::from_generators(f.dom.gens, &pre)?;
    let basis = pre_lat.basis.clone();
    // relations of the kernel group: z with basis·z ∈ span(R_dom)
    let comb2 = basis.hstack(&f.dom.rels)?;
    let ker2 = kernel(&comb2);
    let mut rels = IntMatrix::zeros(basis.cols, ker2.cols);
    for i in 0..basis.cols {
        for j in 0..ker2.cols {
            rels.set(i, j, ker2.get(i, j).clone());
        }
    }
    let kgrp = FgAbGroup::new(basis.cols, rels)?;
    let incl = FgAbHom::new(kgrp.clone(), f.dom.clone(), basis)?;
    Ok((kgrp, incl))
}

/// Cokernel: codomain modulo (image + relations), with the canonical
/// projection on the same generators.
pub fn hom_cokernel(f: &FgAbHom) -> Result<(FgAbGroup, FgAbHom)> {
    let rels = f.matrix.hstack(&f.cod.rels)?;
    let cgrp = FgAbGroup::new(f.cod.gens, rels)?;
    let proj = FgAbHom::new(f.cod.clone(), cgrp.clone(), IntMatrix::identity(f.cod.gens))?;
    Ok((cgrp, proj))
}

pub fn is_injective_ab(f: &FgAbHom) -> Result<bool> {
    let (k, _) = hom_kernel(f)?;
    Ok(k.is_trivial())
}

pub fn is_surjective_ab(f: &FgAbHom) -> Result<bool> {
    let (c, _) = hom_cokernel(f)?;
    Ok(c.is_trivial())
}

/// Direct sum with injections and projections.
pub fn direct_sum(a: &FgAbGroup, b: &FgAbGroup) -> Result<(FgAbGroup, [FgAbHom; 4])> {
    let gens = a.gens + b.gens;
    let mut rels = IntMatrix::zeros(gens, a.rels.cols + b.rels.cols);
    for j in 0..a.rels.cols {
        for i in 0..a.gens {
            rels.set(i, j, a.rels.get(i, j).clone());
        }
    }
    for j in 0..b.rels.cols {
        for i in 0..b.gens {
            rels.set(a.gens + i, a.rels.cols + j, b.rels.get(i, j).clone());
        }
    }
    let sum = FgAbGroup::new(gens, rels)?;
    let mut inj1 = IntMatrix::zeros(gens, a.gens);
    let mut inj2 = IntMatrix::zeros(gens, b.gens);
    let mut pr1 = IntMatrix::zeros(a.gens, gens);
    let mut pr2 = IntMatrix::zeros(b.gens, gens);
    for i in 0..a.gens {
        inj1.set(i, i, BigInt::one());
        pr1.set(i, i, BigInt::one());
    }
    for i in 0..b.gens {
        inj2.set(a.gens + i, i, BigInt::one());
        pr2.set(i, a.gens + i, BigInt::one());
    }
    Ok((
        sum.clone(),
        [
            FgAbHom::new(a.clone(), sum.clone(), inj1)?,
            FgAbHom::new(b.clone(), sum.clone(), inj2)?,
            FgAbHom::new(sum.clone(), a.clone(), pr1)?,
            FgAbHom::new(sum, b.clone(), pr2)?,
        ],
    ))
}

/// Pullback of a cospan f : A → C ← B : g, as the kernel of the difference
/// map A ⊕ B → C.
pub fn pullback_ab(f: &FgAbHom, g: &FgAbHom) -> Result<(FgAbGroup, FgAbHom, FgAbHom)> {
    if f.cod.gens != g.cod.gens || f.cod.rels != g.cod.rels {
        return Err(Error::CodomainMismatch("pullback legs must share a codomain".into()));
    }
    let (_, [_, _, pr1, pr2]) = direct_sum(&f.dom, &g.dom)?;
    let diff = FgAbHom::new(
        pr1.dom.clone(),
        f.cod.clone(),
        f.matrix.mul(&pr1.matrix)?.sub(&g.matrix.mul(&pr2.matrix)?)?,
    )?;
    let (p, incl) = hom_kernel(&diff)?;
    let proj1 = incl.then(&pr1)?;
    let proj2 = incl.then(&pr2)?;
    let _ = p;
    Ok((proj1.dom.clone(), proj1, proj2))
}

/// Pushout of a span A ← C → B, as the cokernel of the difference map
/// C → A ⊕ B.
pub fn pushout_ab(f: &FgAbHom, g: &FgAbHom) -> Result<(FgAbGroup, FgAbHom, FgAbHom)> {
    if f.dom.gens != g.dom.gens || f.dom.rels != g.dom.rels {
        return Err(Error::Malformed("pushout legs must share a domain".into()));
    }
    let (_, [inj1, inj2, _, _]) = direct_sum(&f.cod, &g.cod)?;
    let diff = FgAbHom::new(
        f.dom.clone(),
        inj1.cod.clone(),
        inj1.matrix.mul(&f.matrix)?.sub(&inj2.matrix.mul(&g.matrix)?)?,
    )?;
    let (q, proj) = hom_cokernel(&diff)?;
    let i1 = inj1.then(&proj)?;
    let i2 = inj2.then(&proj)?;
    Ok((q, i1, i2))
}

/// Factor `f : W → B` through a monomorphism-like map `incl : P → B`:
/// find h : W → P with incl ∘ h = f (modulo codomain relations).
pub fn factor_through(incl: &FgAbHom, f: &FgAbHom) -> Result<FgAbHom> {
    if incl.cod.gens != f.cod.gens {
        return Err(Error::IllDefinedHom("factorisation targets differ".into()));
    }
    let system = incl.matrix.hstack(&incl.cod.rels)?;
    let mut cols = Vec::new();
    for j in 0..f.matrix.cols {
        let target = f.matrix.col(j);
        let sol = solve(&system, &target)
            .ok_or_else(|| Error::IllDefinedHom(format!("generator {j} does not factor")))?;
        cols.push(sol[..incl.matrix.cols].to_vec());
    }
    let h = IntMatrix::from_cols(incl.matrix.cols, cols)?;
    FgAbHom::new(f.dom.clone(), incl.dom.clone(), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: Vec<i64>) -> Vec<BigInt> {
        v.into_iter().map(BigInt::from).collect()
    }

    #[test]
    fn snf_diag_2_3() {
        let m = IntMatrix::from_rows(vec![vec![2, 0], vec![0, 3]]).unwrap();
        let (d, u, v) = snf(&m);
        assert_eq!(d.get(0, 0), &BigInt::from(1));
        assert_eq!(d.get(1, 1), &BigInt::from(6));
        assert_eq!(u.mul(&m).unwrap().mul(&v).unwrap(), d);
    }

    #[test]
    fn hnf_identity() {
        let m = IntMatrix::identity(3);
        let (h, u) = hnf(&m);
        assert_eq!(h, m);
        assert_eq!(m.mul(&u).unwrap(), h);
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntMatrix::zeros(2, 3);
        let (d, _, _) = snf(&m);
        assert!(d.is_zero());
    }

    #[test]
    fn hnf_is_canonical_under_column_permutation() {
        let m = IntMatrix::from_rows(vec![vec![4, 6, 2], vec![2, 2, 8]]).unwrap();
        let p = IntMatrix::from_rows(vec![vec![6, 2, 4], vec![2, 8, 2]]).unwrap();
        assert_eq!(hnf(&m).0, hnf(&p).0);
        let (h, u) = hnf(&m);
        assert_eq!(m.mul(&u).unwrap(), h);
    }

    #[test]
    fn lattice_meet_join_complexes() {
        // 1 ↦ (1,0), a ↦ (0,1), a² ↦ (−1,−1)
        let two_a = IntLattice::from_vectors(2, &[vec![0, 2]]).unwrap();
        let three_a = IntLattice::from_vectors(2, &[vec![0, 3]]).unwrap();
        let six_a = IntLattice::from_vectors(2, &[vec![0, 6]]).unwrap();
        assert_eq!(lattice_meet(&two_a, &three_a).unwrap(), six_a);

        let one = IntLattice::from_vectors(2, &[vec![1, 0]]).unwrap();
        let a = IntLattice::from_vectors(2, &[vec![0, 1]]).unwrap();
        let a2 = IntLattice::from_vectors(2, &[vec![-1, -1]]).unwrap();
        let full = IntLattice::full(2);
        assert_eq!(lattice_join(&one, &a).unwrap(), full);
        assert_eq!(lattice_join(&one, &a2).unwrap(), full);
        assert_eq!(lattice_join(&a, &a2).unwrap(), full);
    }

    #[test]
    fn lattice_idempotence() {
        let l = IntLattice::from_vectors(3, &[vec![1, 2, 3], vec![0, 4, 2]]).unwrap();
        assert_eq!(lattice_meet(&l, &l).unwrap(), l);
        assert_eq!(lattice_join(&l, &l).unwrap(), l);
    }

    #[test]
    fn symbolic_parsing() {
        assert_eq!(parse_symbolic("1").unwrap(), big(vec![1, 0]));
        assert_eq!(parse_symbolic("2a").unwrap(), big(vec![0, 2]));
        assert_eq!(parse_symbolic("a^2").unwrap(), big(vec![-1, -1]));
        assert_eq!(parse_symbolic("-3a^2").unwrap(), big(vec![3, 3]));
        assert_eq!(parse_symbolic("6").unwrap(), big(vec![6, 0]));
        assert!(parse_symbolic("b").is_err());
    }

    #[test]
    fn complexes_relation_holds() {
        let sum: Vec<BigInt> = complexes_embedding()
            .iter()
            .map(|(_, v)| big(v.clone()))
            .fold(big(vec![0, 0]), |acc, v| vec![&acc[0] + &v[0], &acc[1] + &v[1]]);
        assert_eq!(sum, big(vec![0, 0]));
    }

    #[test]
    fn kernel_of_identity_trivial() {
        let f = FgAbHom::identity(&FgAbGroup::free(2));
        let (k, _) = hom_kernel(&f).unwrap();
        assert!(k.is_trivial());
    }

    #[test]
    fn cokernel_of_times_six() {
        let z = FgAbGroup::free(1);
        let f = FgAbHom::new(z.clone(), z.clone(), IntMatrix::from_rows(vec![vec![6]]).unwrap())
            .unwrap();
        let (c, _) = hom_cokernel(&f).unwrap();
        assert_eq!(c, FgAbGroup::cyclic(6));
        assert!(is_injective_ab(&f).unwrap());
        assert!(!is_surjective_ab(&f).unwrap());
    }

    #[test]
    fn cokernel_of_index_six_inclusion() {
        // ⟨6a²⟩ ↪ ⟨a²⟩ in Z², both rank-1 free, index 6.
        let z = FgAbGroup::free(1);
        let f = FgAbHom::new(z.clone(), z.clone(), IntMatrix::from_rows(vec![vec![6]]).unwrap())
            .unwrap();
        let (c, _) = hom_cokernel(&f).unwrap();
        assert_eq!(c.invariants(), &[BigInt::from(6)]);
    }

    #[test]
    fn pushout_of_z2_and_z3_quotients_is_trivial() {
        let z = FgAbGroup::free(1);
        let z2 = FgAbGroup::cyclic(2);
        let z3 = FgAbGroup::cyclic(3);
        let f = FgAbHom::new(z.clone(), z2, IntMatrix::from_rows(vec![vec![1]]).unwrap()).unwrap();
        let g = FgAbHom::new(z, z3, IntMatrix::from_rows(vec![vec![1]]).unwrap()).unwrap();
        let (q, _, _) = pushout_ab(&f, &g).unwrap();
        assert!(q.is_trivial());
    }

    #[test]
    fn pullback_along_identity_is_domain() {
        let z6 = FgAbGroup::cyclic(6);
        let z = FgAbGroup::free(1);
        let f = FgAbHom::new(z.clone(), z6.clone(), IntMatrix::from_rows(vec![vec![1]]).unwrap())
            .unwrap();
        let id = FgAbHom::identity(&z6);
        let (p, _, _) = pullback_ab(&f, &id).unwrap();
        assert_eq!(p, z);
    }

    #[test]
    fn pushout_along_identity_is_codomain() {
        let z = FgAbGroup::free(1);
        let z4 = FgAbGroup::cyclic(4);
        let f = FgAbHom::new(z.clone(), z4.clone(), IntMatrix::from_rows(vec![vec![1]]).unwrap())
            .unwrap();
        let id = FgAbHom::identity(&z);
        let (q, _, _) = pushout_ab(&f, &id).unwrap();
        assert_eq!(q, z4);
    }

    #[test]
    fn projection_surjective_not_injective() {
        let z2 = FgAbGroup::free(2);
        let z = FgAbGroup::free(1);
        let f = FgAbHom::new(z2, z, IntMatrix::from_rows(vec![vec![1, 0]]).unwrap()).unwrap();
        assert!(is_surjective_ab(&f).unwrap());
        assert!(!is_injective_ab(&f).unwrap());
    }

    #[test]
    fn exactness_of_kernel_cokernel_sequence() {
        // Z² → Z, (x, y) ↦ 2x + 4y
        let f = FgAbHom::new(
            FgAbGroup::free(2),
            FgAbGroup::free(1),
            IntMatrix::from_rows(vec![vec![2, 4]]).unwrap(),
        )
        .unwrap();
        let (_, incl) = hom_kernel(&f).unwrap();
        assert!(incl.then(&f).unwrap().is_zero_hom());
        let (_, proj) = hom_cokernel(&f).unwrap();
        assert!(f.then(&proj).unwrap().is_zero_hom());
    }

    #[test]
    fn factor_through_kernel() {
        let z = FgAbGroup::free(1);
        let z4 = FgAbGroup::cyclic(4);
        let q = FgAbHom::new(z.clone(), z4.clone(), IntMatrix::from_rows(vec![vec![1]]).unwrap())
            .unwrap();
        let (_, incl) = hom_kernel(&q).unwrap();
        // multiplication by 8 lands in the kernel (multiples of 4)
        let f = FgAbHom::new(z.clone(), z.clone(), IntMatrix::from_rows(vec![vec![8]]).unwrap())
            .unwrap();
        let h = factor_through(&incl, &f).unwrap();
        assert!(h.then(&incl).unwrap().hom_equal(&f));
    }

    #[test]
    fn solve_and_membership() {
        let l = IntLattice::from_vectors(2, &[vec![2, 0], vec![0, 3]]).unwrap();
        assert!(l.contains(&big(vec![4, 3])));
        assert!(!l.contains(&big(vec![1, 0])));
        assert!(!l.contains(&big(vec![0, 1])));
        assert!(l.contains(&big(vec![0, 0])));
    }
}
