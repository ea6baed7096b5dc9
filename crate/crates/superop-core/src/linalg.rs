//! Dense complex linear algebra helpers shared by every crate.
//!
//! Most matrices met here are block diagonal up to a permutation: a channel
//! that never mixes populations with coherences, a gadget generator built from
//! independent 2×2 pieces. The helpers detect that structure from the exact
//! nonzero pattern and work block by block, which keeps cost down and keeps
//! tiny blocks at full relative accuracy.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};

pub use faer::c64;

use crate::error::{CoreError, Result};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// Frobenius norm.
pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Largest absolute column sum.
pub fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn scaled(a: MatRef<'_, c64>, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// `Σ coef_k · mats_k`, all of the same shape.
pub fn lincomb(terms: &[(c64, MatRef<'_, c64>)]) -> CMat {
    let (r, c) = (terms[0].1.nrows(), terms[0].1.ncols());
    let mut out = zeros(r, c);
    for (coef, m) in terms {
        if *coef == ZERO {
            continue;
        }
        for j in 0..c {
            for i in 0..r {
                out[(i, j)] += *coef * m[(i, j)];
            }
        }
    }
    out
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

/// `(A + A†)/2`.
pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// `‖A − A†‖_F`.
pub fn antihermitian_residual(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn inverse(a: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Solves `A X = B`.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().solve(b)
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Index blocks of the union of the exact nonzero patterns of `mats`
/// (symmetrized), with every index set in `groups` forced into one block.
/// Blocks are sorted, and ordered by their smallest index.
pub fn pattern_components(n: usize, mats: &[MatRef<'_, c64>], groups: &[&[usize]]) -> Vec<Vec<usize>> {
    let mut ds = DisjointSets::new(n);
    for m in mats {
        for j in 0..n {
            for i in 0..n {
                if i != j && m[(i, j)] != ZERO {
                    ds.union(i, j);
                }
            }
        }
    }
    for g in groups {
        for w in g.windows(2) {
            ds.union(w[0], w[1]);
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = ds.find(i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

pub fn submatrix(a: MatRef<'_, c64>, idx: &[usize]) -> CMat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

pub fn scatter(dst: &mut CMat, idx: &[usize], block: MatRef<'_, c64>) {
    for (bj, &j) in idx.iter().enumerate() {
        for (bi, &i) in idx.iter().enumerate() {
            dst[(i, j)] = block[(bi, bj)];
        }
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Scaling-and-squaring with the degree-13 Padé approximant.
fn expm_dense(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    if n == 1 {
        return Mat::from_fn(1, 1, |_, _| a[(0, 0)].exp());
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = scaled(a, c64::new(0.5f64.powi(s), 0.0));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c64::new(PADE13[k], 0.0);
    let u_inner = lincomb(&[(b(13), a6.as_ref()), (b(11), a4.as_ref()), (b(9), a2.as_ref())]);
    let u_tail = lincomb(&[
        (b(7), a6.as_ref()),
        (b(5), a4.as_ref()),
        (b(3), a2.as_ref()),
        (b(1), id.as_ref()),
    ]);
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);
    let v_inner = lincomb(&[(b(12), a6.as_ref()), (b(10), a4.as_ref()), (b(8), a2.as_ref())]);
    let v_tail = lincomb(&[
        (b(6), a6.as_ref()),
        (b(4), a4.as_ref()),
        (b(2), a2.as_ref()),
        (b(0), id.as_ref()),
    ]);
    let v = &(&a6 * &v_inner) + &v_tail;
    let mut r = solve((&v - &u).as_ref(), (&v + &u).as_ref());
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Matrix exponential, computed independently on each pattern block.
pub fn expm(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    let mut out = zeros(n, n);
    for block in pattern_components(n, &[a], &[]) {
        let e = expm_dense(submatrix(a, &block).as_ref());
        scatter(&mut out, &block, e.as_ref());
    }
    out
}

/// Right eigenvectors as columns of `right`, left eigenvectors as rows of
/// `left = right⁻¹`, so that `Σ_k λ_k r_k l_k = A` and `l_j r_k = δ_jk`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<c64>,
    pub right: CMat,
    pub left: CMat,
}

pub fn eigen_dense(a: MatRef<'_, c64>) -> Result<Eigen> {
    let n = a.nrows();
    if n == 1 {
        return Ok(Eigen { values: vec![a[(0, 0)]], right: identity(1), left: identity(1) });
    }
    let e = a.eigen().map_err(|_| CoreError::NoConvergence)?;
    let values: Vec<c64> = e.S().column_vector().iter().copied().collect();
    let right = e.U().to_owned();
    let left = inverse(right.as_ref());
    Ok(Eigen { values, right, left })
}

/// Eigenvalues of `A`, computed on each pattern block.
pub fn eigvals_blockwise(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n);
    for block in pattern_components(n, &[a], &[]) {
        if block.len() == 1 {
            out.push(a[(block[0], block[0])]);
        } else {
            out.extend(eigen_dense(submatrix(a, &block).as_ref())?.values);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// orthonormal eigenvector columns.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 1 {
        return Ok((vec![a[(0, 0)].re], identity(1)));
    }
    let h = hermitian_part(a);
    let e = h.self_adjoint_eigen(Side::Lower).map_err(|_| CoreError::NoConvergence)?;
    let vals = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    match a.nrows() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![a[(0, 0)].re]),
        _ => hermitian_part(a)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| CoreError::NoConvergence),
    }
}

/// Smallest eigenvalue of the Hermitian part, block by block. `+∞` for an
/// empty matrix.
pub fn min_eig_hermitian(a: MatRef<'_, c64>) -> Result<f64> {
    let n = a.nrows();
    let mut best = f64::INFINITY;
    for block in pattern_components(n, &[a], &[]) {
        let v = eigvalsh(submatrix(a, &block).as_ref())?;
        best = best.min(v[0]);
    }
    Ok(best)
}

/// Largest singular value.
pub fn spectral_norm(a: MatRef<'_, c64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => frobenius(a),
    }
}

/// Orthonormal basis (columns) of the complement of the all-ones direction in
/// `R^k`: the Helmert vectors `(1,…,1,−j,0,…)/√(j(j+1))`.
pub fn helmert_basis(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let norm = ((j * (j + 1)) as f64).sqrt();
            (0..k)
                .map(|i| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(j as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}
