//! Signatures, J-orthogonal iterates and block index machinery.

use std::cell::Cell;

use nalgebra::{DMatrix, Matrix2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Mat, Result};

/// Diagonal ±1 matrix `J`.
///
/// The canonical form has the `p` positive entries first. Unsorted diagonals
/// are accepted everywhere except [`cs_random_init`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    diag: Vec<f64>,
    p: usize,
}

impl Signature {
    /// Canonical signature `diag(I_p, -I_{n-p})`.
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p > n {
            return Err(Error::Signature(format!("p = {p} exceeds n = {n}")));
        }
        if n == 0 {
            return Err(Error::Signature("n must be positive".into()));
        }
        let diag = (0..n).map(|i| if i < p { 1.0 } else { -1.0 }).collect();
        Ok(Self { diag, p })
    }

    /// Signature with an arbitrary ±1 diagonal.
    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Signature("empty diagonal".into()));
        }
        if let Some((i, v)) = diag.iter().enumerate().find(|(_, &v)| v != 1.0 && v != -1.0) {
            return Err(Error::Signature(format!("entry {i} is {v}, expected ±1")));
        }
        let p = diag.iter().filter(|&&v| v > 0.0).count();
        Ok(Self { diag: diag.to_vec(), p })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.diag.len() - self.p
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// True when the diagonal is non-increasing (all +1 before all −1).
    pub fn is_canonical(&self) -> bool {
        self.diag.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn matrix(&self) -> Mat {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag))
    }

    /// `J · M`: scales row `i` of `m` by `J_ii`.
    pub fn scale_rows(&self, m: &Mat) -> Mat {
        let mut out = m.clone();
        for (i, &s) in self.diag.iter().enumerate() {
            if s < 0.0 {
                out.row_mut(i).neg_mut();
            }
        }
        out
    }

    /// `M · J`: scales column `j` of `m` by `J_jj`.
    pub fn scale_cols(&self, m: &Mat) -> Mat {
        let mut out = m.clone();
        for (j, &s) in self.diag.iter().enumerate() {
            if s < 0.0 {
                out.column_mut(j).neg_mut();
            }
        }
        out
    }

    /// The 2×2 diagonal sub-block `J_BB`.
    pub fn block(&self, b: BlockPair) -> Matrix2<f64> {
        Matrix2::new(self.diag[b.i], 0.0, 0.0, self.diag[b.j])
    }

    /// Block pair `(i, j)` tagged with its kind. Indices may come in any order.
    pub fn pair(&self, i: usize, j: usize) -> Result<BlockPair> {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return Err(Error::Dimension(format!("invalid block ({i}, {j}) for n = {n}")));
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let kind = if self.diag[i] != self.diag[j] {
            BlockKind::Hyperbolic
        } else {
            BlockKind::Orthogonal
        };
        Ok(BlockPair { i, j, kind })
    }

    /// All `C(n, 2)` pairs in lexicographic order.
    pub fn all_pairs(&self) -> Vec<BlockPair> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.pair(i, j).expect("valid indices"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// `J_ii ≠ J_jj`: the block lives in O(1, 1).
    Hyperbolic,
    /// `J_ii = J_jj`: the block is an ordinary 2×2 orthogonal matrix.
    Orthogonal,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Hyperbolic => "hyperbolic",
            BlockKind::Orthogonal => "orthogonal",
        }
    }
}

/// Row index pair `i < j` updated jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockPair {
    pub i: usize,
    pub j: usize,
    pub kind: BlockKind,
}

/// A perfect matching of `[n]` into `n/2` disjoint pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrouping {
    pairs: Vec<BlockPair>,
}

impl BlockGrouping {
    /// Builds a grouping from explicit pairs, checking that they partition `[n]`.
    pub fn new(sig: &Signature, pairs: Vec<BlockPair>) -> Result<Self> {
        let n = sig.n();
        if n % 2 != 0 {
            return Err(Error::OddDimension(n));
        }
        if pairs.len() != n / 2 {
            return Err(Error::Dimension(format!("{} pairs for n = {n}", pairs.len())));
        }
        let mut seen = vec![false; n];
        for b in &pairs {
            for k in [b.i, b.j] {
                if k >= n || seen[k] {
                    return Err(Error::Dimension(format!("index {k} repeated or out of range")));
                }
                seen[k] = true;
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[BlockPair] {
        &self.pairs
    }
}

/// Entrywise absolute sum of `XᵀJX − J`.
pub fn feasibility_residual(x: &Mat, sig: &Signature) -> Result<f64> {
    let n = sig.n();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, signature has n = {n}",
            x.nrows(),
            x.ncols()
        )));
    }
    let jx = sig.scale_rows(x);
    let mut m = x.transpose() * jx;
    for i in 0..n {
        m[(i, i)] -= sig.sign(i);
    }
    Ok(m.iter().map(|v| v.abs()).sum())
}

/// A dense iterate kept (approximately) on `{X : XᵀJX = J}`.
///
/// The feasibility residual is cached and recomputed lazily after updates.
#[derive(Debug, Clone)]
pub struct JOrthMatrix {
    x: Mat,
    sig: Signature,
    residual: Cell<Option<f64>>,
}

impl JOrthMatrix {
    /// Wraps `x` without checking feasibility; see [`JOrthMatrix::residual`].
    pub fn new(x: Mat, sig: Signature) -> Result<Self> {
        if x.nrows() != sig.n() || x.ncols() != sig.n() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, signature has n = {}",
                x.nrows(),
                x.ncols(),
                sig.n()
            )));
        }
        Ok(Self { x, sig, residual: Cell::new(None) })
    }

    pub fn identity(sig: Signature) -> Self {
        let n = sig.n();
        Self { x: Mat::identity(n, n), sig, residual: Cell::new(Some(0.0)) }
    }

    pub fn matrix(&self) -> &Mat {
        &self.x
    }

    pub fn into_matrix(self) -> Mat {
        self.x
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    pub fn residual(&self) -> f64 {
        if let Some(r) = self.residual.get() {
            return r;
        }
        let r = feasibility_residual(&self.x, &self.sig).expect("dimensions checked at construction");
        self.residual.set(Some(r));
        r
    }

    /// `X(B, :)` as a 2×n matrix.
    pub fn block_rows(&self, b: BlockPair) -> Mat {
        let n = self.n();
        Mat::from_fn(2, n, |r, c| self.x[(if r == 0 { b.i } else { b.j }, c)])
    }

    /// Applies `X(B,:) ← V·X(B,:)` after checking `VᵀJ_BB V = J_BB`.
    ///
    /// Returns `‖X⁺ − X‖²_F`.
    pub fn apply_block_update(&mut self, b: BlockPair, v: &Matrix2<f64>) -> Result<f64> {
        let defect = block_defect(&self.sig.block(b), v);
        // Entries of VᵀJV carry rounding of order eps·‖V‖²; judge relative to that.
        if defect > 1e-10 * v.norm_squared().max(1.0) {
            return Err(Error::InfeasibleUpdate { defect });
        }
        Ok(self.apply_unchecked(b, v))
    }

    pub(crate) fn apply_unchecked(&mut self, b: BlockPair, v: &Matrix2<f64>) -> f64 {
        if *v == Matrix2::identity() {
            return 0.0;
        }
        let n = self.n();
        let mut delta_sq = 0.0;
        let mut rows_sq = 0.0;
        for c in 0..n {
            let xi = self.x[(b.i, c)];
            let xj = self.x[(b.j, c)];
            let ni = v[(0, 0)] * xi + v[(0, 1)] * xj;
            let nj = v[(1, 0)] * xi + v[(1, 1)] * xj;
            delta_sq += (ni - xi).powi(2) + (nj - xj).powi(2);
            rows_sq += xi * xi + xj * xj;
            self.x[(b.i, c)] = ni;
            self.x[(b.j, c)] = nj;
        }
        // ‖(V−I)Z‖_F ≤ ‖V−I‖_F‖Z‖_F with Z = X(B,:), which implies the
        // ‖X⁺−X‖_F ≤ ‖X‖_F‖V−I‖_F bound.
        debug_assert!(
            delta_sq <= rows_sq * (v - Matrix2::identity()).norm_squared() * (1.0 + 1e-12) + 1e-300
        );
        self.residual.set(None);
        delta_sq
    }
}

/// `‖VᵀJ_BB V − J_BB‖₁` (entrywise).
pub fn block_defect(jbb: &Matrix2<f64>, v: &Matrix2<f64>) -> f64 {
    (v.transpose() * jbb * v - jbb).iter().map(|e| e.abs()).sum()
}

/// Haar-distributed `k×k` orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`).
pub fn haar_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Mat {
    if k == 0 {
        return Mat::zeros(0, 0);
    }
    let g = Mat::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random feasible start `X = diag(U₁,U₂)·Σ(ċ,ṡ)·diag(V₁,V₂)ᵀ`.
///
/// `Σ` couples coordinate `k` of the positive block with coordinate `p + k`
/// of the negative block through `[[ċ_k, ṡ_k], [ṡ_k, ċ_k]]` for
/// `k < min(p, q)` and is the identity elsewhere. `ṡ_k ~ scale·|N(0,1)|`,
/// `ċ = sqrt(1 + ṡ²)`. The signature must be canonical.
pub fn cs_random_init(sig: &Signature, seed: u64, scale: f64) -> Result<JOrthMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cs_random_init_with(sig, &mut rng, scale)
}

pub fn cs_random_init_with<R: Rng + ?Sized>(sig: &Signature, rng: &mut R, scale: f64) -> Result<JOrthMatrix> {
    if !sig.is_canonical() {
        return Err(Error::Signature("cs_random_init requires a canonical signature".into()));
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::Parameter(format!("scale must be nonnegative, got {scale}")));
    }
    let (n, p, q) = (sig.n(), sig.p(), sig.q());
    let r = p.min(q);
    let u1 = haar_orthogonal(p, rng);
    let u2 = haar_orthogonal(q, rng);
    let v1 = haar_orthogonal(p, rng);
    let v2 = haar_orthogonal(q, rng);
    let s: Vec<f64> = (0..r).map(|_| scale * rng.sample::<f64, _>(StandardNormal).abs()).collect();

    let mut u = Mat::zeros(n, n);
    u.view_mut((0, 0), (p, p)).copy_from(&u1);
    u.view_mut((p, p), (q, q)).copy_from(&u2);
    let mut v = Mat::zeros(n, n);
    v.view_mut((0, 0), (p, p)).copy_from(&v1);
    v.view_mut((p, p), (q, q)).copy_from(&v2);

    let mut core = Mat::identity(n, n);
    for (k, &sk) in s.iter().enumerate() {
        let ck = (1.0 + sk * sk).sqrt();
        core[(k, k)] = ck;
        core[(p + k, p + k)] = ck;
        core[(k, p + k)] = sk;
        core[(p + k, k)] = sk;
    }
    let x = u * core * v.transpose();
    JOrthMatrix::new(x, sig.clone())
}

/// Uniform draw from the `C(n,2)` unordered pairs.
pub fn sample_block<R: Rng + ?Sized>(sig: &Signature, rng: &mut R) -> Result<BlockPair> {
    let n = sig.n();
    if n < 2 {
        return Err(Error::Dimension("need n >= 2 to sample a block".into()));
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    sig.pair(i, j)
}

/// Random permutation of `[n]` chunked into consecutive pairs.
pub fn sample_grouping<R: Rng + ?Sized>(sig: &Signature, rng: &mut R) -> Result<BlockGrouping> {
    let n = sig.n();
    if n % 2 != 0 {
        return Err(Error::OddDimension(n));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let pairs = perm
        .chunks_exact(2)
        .map(|c| sig.pair(c[0], c[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockGrouping { pairs })
}

/// `[[cosh μ, sinh μ], [sinh μ, cosh μ]]`.
pub fn hyperbolic_rotation(mu: f64) -> Matrix2<f64> {
    let (c, s) = (mu.cosh(), mu.sinh());
    Matrix2::new(c, s, s, c)
}

/// `[[cos φ, −sin φ], [sin φ, cos φ]]`.
pub fn givens_rotation(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, -s, s, c)
}
