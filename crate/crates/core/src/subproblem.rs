//! Exact global solution of the 2×2 block subproblem
//!
//! ```text
//! min_{V ∈ J_B}  ½ vec(V)ᵀ Q̇ vec(V) + ⟨V, P⟩
//! ```
//!
//! where `J_B = {V : VᵀJ_BB V = J_BB}`.
//!
//! `vec` is row-major throughout: `vec(V) = (V₁₁, V₁₂, V₂₁, V₂₂)`. Every
//! feasible `V` of a given family is `c̃·α + s̃·β` for two fixed sign patterns
//! `α`, `β`, which turns the objective into
//! `a c̃ + b s̃ + c c̃² + d c̃ s̃ + e s̃²` with
//! `a = ⟨α,P⟩`, `b = ⟨β,P⟩`, `c = ½αᵀQ̇α`, `d = ½(αᵀQ̇β + βᵀQ̇α)`, `e = ½βᵀQ̇β`.
//!
//! Hyperbolic blocks use `c̃ = ±cosh μ`, `s̃ = ±sinh μ` over four families;
//! with `t = tanh μ` the stationarity condition squares into a quartic.
//! Orthogonal blocks use rotations and reflections with the half-angle
//! substitution `t = tan(φ/2)`, which again gives a quartic.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::jorth::{BlockKind, BlockPair, JOrthMatrix};
use crate::objectives::{block_gradient, KroneckerH};
use crate::quartic::solve_quartic;
use crate::{Error, Mat, Result};

/// Roots this close to `|t| = 1` are discarded.
const SINGULAR_GUARD: f64 = 1e-12;
/// Relative agreement required between the two sides of the unsquared
/// stationarity condition.
const BRANCH_TOL: f64 = 1e-6;

/// How the 4×4 curvature matrix `Q` is chosen.
#[derive(Debug, Clone, Copy)]
pub enum QMode<'a> {
    /// `Q = Q̲ = (Zᵀ⊗U_B)ᵀ H (Zᵀ⊗U_B)` from the Kronecker description of `H`.
    Exact(&'a KroneckerH),
    /// `Q = ς I₄`.
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemData {
    /// `Q̇ = Q + θI₄`, row-major `vec` convention.
    pub qdot: Matrix4<f64>,
    /// `P = [∇f(X)Xᵀ]_BB − mat(Q̇ vec(I₂))`.
    pub pmat: Matrix2<f64>,
    pub kind: BlockKind,
    pub theta: f64,
}

/// Coefficients of `a c̃ + b s̃ + c c̃² + d c̃ s̃ + e s̃²`, with `w = c + e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub w: f64,
}

impl ReducedCoeffs {
    #[inline]
    pub fn eval(&self, ct: f64, st: f64) -> f64 {
        self.a * ct + self.b * st + self.c * ct * ct + self.d * ct * st + self.e * st * st
    }

    /// `[c₄, c₃, c₂, c₁, c₀]` of the squared stationarity condition in `t = tanh μ`.
    pub fn hyperbolic_quartic(&self) -> [f64; 5] {
        let Self { a, b, d, w, .. } = *self;
        [
            d * d + a * a,
            4.0 * w * d + 2.0 * a * b,
            4.0 * w * w + 2.0 * d * d - a * a + b * b,
            4.0 * w * d - 2.0 * a * b,
            d * d - b * b,
        ]
    }

    /// `[c₄, c₃, c₂, c₁, c₀]` of the stationarity condition in `t = tan(φ/2)`
    /// for `(c̃, s̃) = (cos φ, sin φ)`.
    pub fn circular_quartic(&self) -> [f64; 5] {
        let Self { a, b, d, .. } = *self;
        let k = self.c - self.e;
        [d - b, 4.0 * k - 2.0 * a, -6.0 * d, -2.0 * a - 4.0 * k, b + d]
    }
}

/// Which parametrized family the returned block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFamily {
    /// Hyperbolic case `1..=4`:
    /// 1: `[[c̃, s̃], [s̃, c̃]]`, 2: `[[c̃, −s̃], [−s̃, c̃]]`,
    /// 3: `[[−c̃, −s̃], [s̃, c̃]]`, 4: `[[c̃, −s̃], [s̃, −c̃]]`.
    Hyperbolic(u8),
    /// `[[c, −s], [s, c]]`
    Rotation,
    /// `[[c, s], [s, −c]]`
    Reflection,
}

impl BlockFamily {
    /// 1..4 for hyperbolic cases, 1 for rotations and 2 for reflections.
    pub fn case_id(self) -> u8 {
        match self {
            BlockFamily::Hyperbolic(k) => k,
            BlockFamily::Rotation => 1,
            BlockFamily::Reflection => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub v: Matrix2<f64>,
    /// `½ vec(V)ᵀQ̇vec(V) + ⟨V, P⟩`
    pub value: f64,
    pub family: BlockFamily,
}

impl SubproblemSolution {
    /// `‖V − I₂‖²_F`
    pub fn dist_sq(&self) -> f64 {
        (self.v - Matrix2::identity()).norm_squared()
    }
}

/// Row-major `vec`.
#[inline]
pub fn vec_rm(m: &Matrix2<f64>) -> Vector4<f64> {
    Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Inverse of [`vec_rm`].
#[inline]
pub fn mat_rm(v: &Vector4<f64>) -> Matrix2<f64> {
    Matrix2::new(v[0], v[1], v[2], v[3])
}

/// `[[C_ii, C_ij], [C_ji, C_jj]]`
fn principal_block(m: &Mat, b: BlockPair) -> Matrix2<f64> {
    Matrix2::new(m[(b.i, b.i)], m[(b.i, b.j)], m[(b.j, b.i)], m[(b.j, b.j)])
}

/// `Q̲` for `H = D ⊗ C`, in row-major `vec`: `‖U_B M Z‖²_H = tr(Mᵀ C_B M K)`
/// with `C_B = U_BᵀCU_B` and `K = Z D Zᵀ`, i.e. `Q̲ = C_B ⊗ K`.
pub fn exact_q(x: &Mat, h: &KroneckerH, b: BlockPair) -> Matrix4<f64> {
    match h {
        KroneckerH::Zero => Matrix4::zeros(),
        KroneckerH::Factors { c, d } => {
            let rows = [b.i, b.j];
            let n = x.ncols();
            // K = Z D Zᵀ with Z = X(B,:)
            let mut zd = [[0.0; 2]; 0].to_vec();
            zd.clear();
            let mut k = Matrix2::zeros();
            for (r, &ri) in rows.iter().enumerate() {
                let zrow = x.row(ri);
                let zrow_d = zrow * d;
                for (s, &si) in rows.iter().enumerate() {
                    k[(r, s)] = (0..n).map(|col| zrow_d[col] * x[(si, col)]).sum();
                }
            }
            let k = (k + k.transpose()) * 0.5;
            let cb = principal_block(c, b);
            cb.kronecker(&k)
        }
    }
}

impl SubproblemData {
    /// Assembles the subproblem from `[∇f(X)Xᵀ]_BB` and an already chosen `Q`.
    ///
    /// An indefinite `Q` is shifted by `−λ_min` so that `Q̇ − θI ⪰ 0`.
    pub fn from_parts(gxt: Matrix2<f64>, q: Matrix4<f64>, kind: BlockKind, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
        }
        let q = (q + q.transpose()) * 0.5;
        let lambda_min = SymmetricEigen::new(q).eigenvalues.min();
        let q = if lambda_min < 0.0 { q + Matrix4::identity() * (-lambda_min) } else { q };
        let qdot = q + Matrix4::identity() * theta;
        let pmat = gxt - mat_rm(&(qdot * vec_rm(&Matrix2::identity())));
        Ok(Self { qdot, pmat, kind, theta })
    }

    /// `½ vec(V)ᵀ Q̇ vec(V) + ⟨V, P⟩`
    #[inline]
    pub fn objective(&self, v: &Matrix2<f64>) -> f64 {
        let x = vec_rm(v);
        0.5 * x.dot(&(self.qdot * x)) + v.dot(&self.pmat)
    }

    /// Coefficients for the family `V = c̃·α + s̃·β` (row-major patterns).
    pub fn reduce(&self, alpha: &Vector4<f64>, beta: &Vector4<f64>) -> ReducedCoeffs {
        let p = vec_rm(&self.pmat);
        let qa = self.qdot * alpha;
        let qb = self.qdot * beta;
        let c = 0.5 * alpha.dot(&qa);
        let e = 0.5 * beta.dot(&qb);
        ReducedCoeffs { a: alpha.dot(&p), b: beta.dot(&p), c, d: 0.5 * (alpha.dot(&qb) + beta.dot(&qa)), e, w: c + e }
    }
}

/// Builds the block subproblem at `X` for block `B`.
pub fn build_subproblem(x: &JOrthMatrix, grad: &Mat, b: BlockPair, mode: QMode<'_>, theta: f64) -> Result<SubproblemData> {
    let n = x.n();
    if grad.nrows() != n || grad.ncols() != n {
        return Err(Error::Dimension(format!("gradient is {}x{}, expected {n}x{n}", grad.nrows(), grad.ncols())));
    }
    let gxt = block_gradient(grad, x.matrix(), b);
    let q = choose_q(x.matrix(), b, mode)?;
    SubproblemData::from_parts(gxt, q, b.kind, theta)
}

pub(crate) fn choose_q(x: &Mat, b: BlockPair, mode: QMode<'_>) -> Result<Matrix4<f64>> {
    match mode {
        QMode::Scalar(s) => {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Parameter(format!("varsigma must be nonnegative, got {s}")));
            }
            Ok(Matrix4::identity() * s)
        }
        QMode::Exact(h) => Ok(exact_q(x, h, b)),
    }
}

/// Sign patterns `(α, β)` of the four hyperbolic families.
pub fn hyperbolic_patterns(case: u8) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let v = Vector4::new;
    Ok(match case {
        1 => (v(1.0, 0.0, 0.0, 1.0), v(0.0, 1.0, 1.0, 0.0)),
        2 => (v(1.0, 0.0, 0.0, 1.0), v(0.0, -1.0, -1.0, 0.0)),
        3 => (v(-1.0, 0.0, 0.0, 1.0), v(0.0, -1.0, 1.0, 0.0)),
        4 => (v(1.0, 0.0, 0.0, -1.0), v(0.0, -1.0, 1.0, 0.0)),
        _ => return Err(Error::Parameter(format!("hyperbolic case must be 1..=4, got {case}"))),
    })
}

fn rotation_patterns() -> (Vector4<f64>, Vector4<f64>) {
    (Vector4::new(1.0, 0.0, 0.0, 1.0), Vector4::new(0.0, -1.0, 1.0, 0.0))
}

fn reflection_patterns() -> (Vector4<f64>, Vector4<f64>) {
    (Vector4::new(1.0, 0.0, 0.0, -1.0), Vector4::new(0.0, 1.0, 1.0, 0.0))
}

/// Reduced coefficients of hyperbolic case `1..=4`.
pub fn reduce_hyperbolic(sp: &SubproblemData, case: u8) -> Result<ReducedCoeffs> {
    if sp.kind != BlockKind::Hyperbolic {
        return Err(Error::BlockKind { expected: "hyperbolic", got: sp.kind.name() });
    }
    let (alpha, beta) = hyperbolic_patterns(case)?;
    Ok(sp.reduce(&alpha, &beta))
}

/// Dispatches on the block kind.
pub fn solve(sp: &SubproblemData) -> SubproblemSolution {
    match sp.kind {
        BlockKind::Hyperbolic => solve_hyperbolic_unchecked(sp),
        BlockKind::Orthogonal => solve_orthogonal_unchecked(sp),
    }
}

pub fn solve_hyperbolic_block(sp: &SubproblemData) -> Result<SubproblemSolution> {
    if sp.kind != BlockKind::Hyperbolic {
        return Err(Error::BlockKind { expected: "hyperbolic", got: sp.kind.name() });
    }
    Ok(solve_hyperbolic_unchecked(sp))
}

pub fn solve_orthogonal_block(sp: &SubproblemData) -> Result<SubproblemSolution> {
    if sp.kind != BlockKind::Orthogonal {
        return Err(Error::BlockKind { expected: "orthogonal", got: sp.kind.name() });
    }
    Ok(solve_orthogonal_unchecked(sp))
}

fn quartic_roots(c: [f64; 5]) -> Vec<f64> {
    solve_quartic(c[0], c[1], c[2], c[3], c[4]).unwrap_or_default()
}

/// Keeps the incumbent unless the candidate is strictly better.
struct Incumbent {
    best: SubproblemSolution,
}

impl Incumbent {
    fn identity(sp: &SubproblemData, family: BlockFamily) -> Self {
        let v = Matrix2::identity();
        Self { best: SubproblemSolution { value: sp.objective(&v), v, family } }
    }

    fn offer(&mut self, sp: &SubproblemData, v: Matrix2<f64>, family: BlockFamily) {
        let value = sp.objective(&v);
        if value < self.best.value {
            self.best = SubproblemSolution { v, value, family };
        }
    }
}

fn compose(alpha: &Vector4<f64>, beta: &Vector4<f64>, ct: f64, st: f64) -> Matrix2<f64> {
    mat_rm(&(alpha * ct + beta * st))
}

/// Newton steps on `g(μ) = F(σ cosh μ, σ sinh μ)`, kept only while they decrease `g`.
fn polish_mu(rc: &ReducedCoeffs, sigma: f64, mut mu: f64) -> f64 {
    let g = |m: f64| rc.eval(sigma * m.cosh(), sigma * m.sinh());
    let mut gm = g(mu);
    for _ in 0..4 {
        let (ch, sh) = (mu.cosh(), mu.sinh());
        let (ch2, sh2) = ((2.0 * mu).cosh(), (2.0 * mu).sinh());
        let d1 = sigma * (rc.a * sh + rc.b * ch) + rc.w * sh2 + rc.d * ch2;
        let d2 = sigma * (rc.a * ch + rc.b * sh) + 2.0 * rc.w * ch2 + 2.0 * rc.d * sh2;
        if !(d2 > 0.0) || d1 == 0.0 {
            break;
        }
        let cand = mu - d1 / d2;
        let gc = g(cand);
        if gc < gm {
            mu = cand;
            gm = gc;
        } else {
            break;
        }
    }
    mu
}

/// Newton steps on `g(φ) = F(cos φ, sin φ)`.
fn polish_phi(rc: &ReducedCoeffs, mut phi: f64) -> f64 {
    let g = |p: f64| rc.eval(p.cos(), p.sin());
    let k = rc.c - rc.e;
    let mut gp = g(phi);
    for _ in 0..4 {
        let (s, c) = phi.sin_cos();
        let (s2, c2) = (2.0 * phi).sin_cos();
        let d1 = -rc.a * s + rc.b * c - k * s2 + rc.d * c2;
        let d2 = -rc.a * c - rc.b * s - 2.0 * k * c2 - 2.0 * rc.d * s2;
        if !(d2 > 0.0) || d1 == 0.0 {
            break;
        }
        let cand = phi - d1 / d2;
        let gc = g(cand);
        if gc < gp {
            phi = cand;
            gp = gc;
        } else {
            break;
        }
    }
    phi
}

fn solve_hyperbolic_unchecked(sp: &SubproblemData) -> SubproblemSolution {
    let mut inc = Incumbent::identity(sp, BlockFamily::Hyperbolic(1));
    for case in 1..=4u8 {
        let (alpha, beta) = hyperbolic_patterns(case).expect("valid case");
        let rc = sp.reduce(&alpha, &beta);
        let scale = 1f64.max(rc.a.abs()).max(rc.b.abs()).max(rc.d.abs()).max(rc.w.abs());
        for t in quartic_roots(rc.hyperbolic_quartic()) {
            if !(t.abs() < 1.0 - SINGULAR_GUARD) {
                continue;
            }
            let root = (1.0 - t * t).sqrt();
            let lhs = rc.d * t * t + 2.0 * rc.w * t + rc.d;
            for sigma in [1.0, -1.0] {
                // Squaring merged the two branches: d t² + 2wt + d = −σ(b + at)√(1−t²).
                let rhs = -sigma * (rc.b + rc.a * t) * root;
                if (lhs - rhs).abs() > BRANCH_TOL * scale {
                    continue;
                }
                let mu = polish_mu(&rc, sigma, t.atanh());
                let v = compose(&alpha, &beta, sigma * mu.cosh(), sigma * mu.sinh());
                inc.offer(sp, v, BlockFamily::Hyperbolic(case));
            }
        }
    }
    inc.best
}

fn solve_orthogonal_unchecked(sp: &SubproblemData) -> SubproblemSolution {
    let mut inc = Incumbent::identity(sp, BlockFamily::Rotation);
    for (family, (alpha, beta)) in
        [(BlockFamily::Rotation, rotation_patterns()), (BlockFamily::Reflection, reflection_patterns())]
    {
        let rc = sp.reduce(&alpha, &beta);
        let mut angles: Vec<f64> = quartic_roots(rc.circular_quartic()).iter().map(|t| 2.0 * t.atan()).collect();
        // t = ±∞ (φ = π) is not a root of the quartic in t.
        angles.push(std::f64::consts::PI);
        if family == BlockFamily::Reflection {
            angles.push(0.0);
        }
        for phi in angles {
            let phi = polish_phi(&rc, phi);
            let (s, c) = phi.sin_cos();
            inc.offer(sp, compose(&alpha, &beta, c, s), family);
        }
    }
    inc.best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jorth::{cs_random_init, Signature};
    use crate::objectives::testing::{gaussian, random_symmetric};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sp<R: Rng>(rng: &mut R, kind: BlockKind, theta: f64) -> SubproblemData {
        let a = Matrix4::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let q = a.transpose() * a;
        let p = Matrix2::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        SubproblemData { qdot: q + Matrix4::identity() * theta, pmat: p, kind, theta }
    }

    /// Brute force over both branches of all four hyperbolic families.
    fn hyperbolic_grid(sp: &SubproblemData, step: f64) -> f64 {
        let mats: [fn(f64, f64) -> Matrix2<f64>; 4] = [
            |c, s| Matrix2::new(c, s, s, c),
            |c, s| Matrix2::new(c, -s, -s, c),
            |c, s| Matrix2::new(-c, -s, s, c),
            |c, s| Matrix2::new(c, -s, s, -c),
        ];
        let steps = (20.0 / step).round() as i64;
        let mut best = f64::INFINITY;
        for k in 0..=steps {
            let mu = -10.0 + k as f64 * step;
            let (c, s) = (mu.cosh(), mu.sinh());
            for m in &mats {
                best = best.min(sp.objective(&m(c, s))).min(sp.objective(&m(-c, -s)));
            }
        }
        best
    }

    fn orthogonal_grid(sp: &SubproblemData, step: f64) -> f64 {
        let steps = (std::f64::consts::TAU / step).ceil() as i64;
        let mut best = f64::INFINITY;
        for k in 0..steps {
            let (s, c) = (k as f64 * step).sin_cos();
            best = best.min(sp.objective(&Matrix2::new(c, -s, s, c))).min(sp.objective(&Matrix2::new(c, s, s, -c)));
        }
        best
    }

    #[test]
    fn paper_coefficient_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let sp = random_sp(&mut rng, BlockKind::Hyperbolic, 0.3);
            let q = |i: usize, j: usize| sp.qdot[(i - 1, j - 1)];
            let p = |i: usize, j: usize| sp.pmat[(i - 1, j - 1)];
            let expected = [
                (
                    p(1, 1) + p(2, 2),
                    p(1, 2) + p(2, 1),
                    0.5 * (q(1, 1) + q(4, 1) + q(1, 4) + q(4, 4)),
                    0.5 * (q(2, 1) + q(3, 1) + q(1, 2) + q(4, 2) + q(1, 3) + q(4, 3) + q(2, 4) + q(3, 4)),
                    0.5 * (q(2, 2) + q(3, 2) + q(2, 3) + q(3, 3)),
                ),
                (
                    p(1, 1) + p(2, 2),
                    -p(1, 2) - p(2, 1),
                    0.5 * (q(1, 1) + q(4, 1) + q(1, 4) + q(4, 4)),
                    -0.5 * (q(2, 1) + q(3, 1) + q(1, 2) + q(4, 2) + q(1, 3) + q(4, 3) + q(2, 4) + q(3, 4)),
                    0.5 * (q(2, 2) + q(3, 2) + q(2, 3) + q(3, 3)),
                ),
                (
                    -p(1, 1) + p(2, 2),
                    -p(1, 2) + p(2, 1),
                    0.5 * (q(1, 1) - q(4, 1) - q(1, 4) + q(4, 4)),
                    0.5 * (q(2, 1) - q(3, 1) + q(1, 2) - q(4, 2) - q(1, 3) + q(4, 3) - q(2, 4) + q(3, 4)),
                    0.5 * (q(2, 2) - q(3, 2) - q(2, 3) + q(3, 3)),
                ),
                (
                    p(1, 1) - p(2, 2),
                    -p(1, 2) + p(2, 1),
                    0.5 * (q(1, 1) - q(4, 1) - q(1, 4) + q(4, 4)),
                    0.5 * (-q(2, 1) + q(3, 1) - q(1, 2) + q(4, 2) + q(1, 3) - q(4, 3) + q(2, 4) - q(3, 4)),
                    0.5 * (q(2, 2) - q(3, 2) - q(2, 3) + q(3, 3)),
                ),
            ];
            for (case, (a, b, c, d, e)) in (1..=4u8).zip(expected) {
                let rc = reduce_hyperbolic(&sp, case).unwrap();
                for (got, want) in [(rc.a, a), (rc.b, b), (rc.c, c), (rc.d, d), (rc.e, e), (rc.w, c + e)] {
                    assert_abs_diff_eq!(got, want, epsilon = 1e-12);
                }
                // the reduced form reproduces the objective on the family
                let (al, be) = hyperbolic_patterns(case).unwrap();
                let mu: f64 = rng.random_range(-2.0..2.0);
                let v = compose(&al, &be, mu.cosh(), mu.sinh());
                assert_abs_diff_eq!(rc.eval(mu.cosh(), mu.sinh()), sp.objective(&v), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let sp = SubproblemData {
            qdot: Matrix4::identity(),
            pmat: Matrix2::zeros(),
            kind: BlockKind::Hyperbolic,
            theta: 1.0,
        };
        let rc = reduce_hyperbolic(&sp, 1).unwrap();
        assert_eq!((rc.a, rc.b, rc.c, rc.d, rc.e), (0.0, 0.0, 1.0, 0.0, 1.0));

        let sp = SubproblemData { qdot: Matrix4::zeros(), pmat: Matrix2::new(1.0, 2.0, 3.0, 4.0), ..sp };
        let rc = reduce_hyperbolic(&sp, 1).unwrap();
        assert_eq!((rc.a, rc.b, rc.c, rc.d, rc.e), (5.0, 5.0, 0.0, 0.0, 0.0));
        let rc = reduce_hyperbolic(&sp, 2).unwrap();
        assert_eq!((rc.a, rc.b), (5.0, -5.0));

        let orth = SubproblemData { kind: BlockKind::Orthogonal, ..sp };
        assert!(matches!(reduce_hyperbolic(&orth, 1), Err(Error::BlockKind { .. })));
        assert!(solve_hyperbolic_block(&orth).is_err());
    }

    #[test]
    fn build_subproblem_zero_gradient_and_identity_kronecker() {
        let sig = Signature::new(4, 2).unwrap();
        let x = cs_random_init(&sig, 2, 1.0).unwrap();
        let b = sig.pair(1, 2).unwrap();
        let sp = build_subproblem(&x, &Mat::zeros(4, 4), b, QMode::Scalar(2.0), 0.5).unwrap();
        assert!((sp.pmat - Matrix2::identity() * -2.5).amax() <= 1e-15);
        assert!(build_subproblem(&x, &Mat::zeros(4, 4), b, QMode::Scalar(2.0), 0.0).is_err());

        let h = KroneckerH::Factors { c: Mat::identity(4, 4), d: Mat::identity(4, 4) };
        let id = JOrthMatrix::identity(sig.clone());
        let q = exact_q(id.matrix(), &h, b);
        assert!((q - Matrix4::identity()).amax() <= 1e-15);
    }

    #[test]
    fn exact_q_matches_h_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let sig = Signature::new(n, 3).unwrap();
        let x = cs_random_init(&sig, 9, 0.7).unwrap();
        let c = random_symmetric(n, &mut rng);
        let d = random_symmetric(n, &mut rng);
        let h = KroneckerH::Factors { c: c.clone(), d: d.clone() };
        for b in sig.all_pairs() {
            let q = exact_q(x.matrix(), &h, b);
            for _ in 0..100 {
                let m = Matrix2::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
                // Y = U_B M U_Bᵀ X
                let mut y = Mat::zeros(n, n);
                let rows = [b.i, b.j];
                for r in 0..2 {
                    for s in 0..2 {
                        let xr = x.matrix().row(rows[s]) * m[(r, s)];
                        let mut yr = y.row_mut(rows[r]);
                        yr += xr;
                    }
                }
                let lhs = vec_rm(&m).dot(&(q * vec_rm(&m)));
                let rhs = y.dot(&(&c * &y * &d));
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn indefinite_exact_q_is_shifted() {
        let q = Matrix4::from_diagonal(&Vector4::new(-2.0, 1.0, 0.0, 3.0));
        let sp = SubproblemData::from_parts(Matrix2::zeros(), q, BlockKind::Hyperbolic, 0.1).unwrap();
        let min = SymmetricEigen::new(sp.qdot).eigenvalues.min();
        assert_abs_diff_eq!(min, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn zero_linear_term_keeps_identity() {
        for kind in [BlockKind::Hyperbolic, BlockKind::Orthogonal] {
            let sp = SubproblemData::from_parts(Matrix2::zeros(), Matrix4::zeros(), kind, 0.1).unwrap();
            let sol = solve(&sp);
            assert!((sol.v - Matrix2::identity()).amax() <= 1e-12);
            assert_abs_diff_eq!(sol.value, sp.objective(&Matrix2::identity()), epsilon = 1e-14);
        }
    }

    #[test]
    fn hyperbolic_example_against_grid() {
        let theta = 0.1;
        let qdot = Matrix4::identity() * (1.0 + theta);
        let pmat = Matrix2::new(-3.0, 0.0, 0.0, -3.0);
        let sp = SubproblemData { qdot, pmat, kind: BlockKind::Hyperbolic, theta };
        let sol = solve_hyperbolic_block(&sp).unwrap();
        let grid = hyperbolic_grid(&sp, 1e-4);
        assert!((sol.value - grid).abs() <= 1e-6, "{} vs {}", sol.value, grid);
    }

    #[test]
    fn rotation_example_against_grid() {
        let theta = 0.1;
        let sp = SubproblemData {
            qdot: Matrix4::identity() * theta,
            pmat: Matrix2::new(0.0, 1.0, -1.0, 0.0),
            kind: BlockKind::Orthogonal,
            theta,
        };
        let sol = solve_orthogonal_block(&sp).unwrap();
        assert_eq!(sol.family, BlockFamily::Rotation);
        let grid = orthogonal_grid(&sp, 1e-5);
        assert!((sol.value - grid).abs() <= 1e-6);
    }

    #[test]
    fn random_instances_beat_coarse_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let id = Matrix2::<f64>::identity();
        for _ in 0..200 {
            for kind in [BlockKind::Hyperbolic, BlockKind::Orthogonal] {
                let sp = random_sp(&mut rng, kind, 0.1);
                let sol = solve(&sp);
                let jbb = match kind {
                    BlockKind::Hyperbolic => Matrix2::new(1.0, 0.0, 0.0, -1.0),
                    BlockKind::Orthogonal => id,
                };
                let defect = crate::jorth::block_defect(&jbb, &sol.v);
                assert!(defect <= 1e-10 * sol.v.norm_squared().max(1.0));
                assert!(sol.value <= sp.objective(&id));
                let grid = match kind {
                    BlockKind::Hyperbolic => hyperbolic_grid(&sp, 1e-3),
                    BlockKind::Orthogonal => orthogonal_grid(&sp, 1e-4),
                };
                assert!(sol.value <= grid + 1e-6, "{kind:?}: {} vs {}", sol.value, grid);
            }
        }
    }

    #[test]
    fn hyperbolic_quartic_roots_are_stationary_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sp = random_sp(&mut rng, BlockKind::Hyperbolic, 0.1);
        let rc = reduce_hyperbolic(&sp, 3).unwrap();
        let g = |mu: f64| rc.eval(mu.cosh(), mu.sinh());
        let gm = |mu: f64| rc.eval(-mu.cosh(), -mu.sinh());
        let roots = quartic_roots(rc.hyperbolic_quartic());
        assert!(!roots.is_empty());
        for t in roots.into_iter().filter(|t| t.abs() < 1.0) {
            let mu = t.atanh();
            let h = 1e-6;
            let d_plus = (g(mu + h) - g(mu - h)) / (2.0 * h);
            let d_minus = (gm(mu + h) - gm(mu - h)) / (2.0 * h);
            assert!(d_plus.abs().min(d_minus.abs()) <= 1e-4 * (1.0 + rc.w.abs()));
        }
    }

    #[test]
    fn build_from_gradient_uses_block_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sig = Signature::new(5, 2).unwrap();
        let x = cs_random_init(&sig, 5, 0.5).unwrap();
        let g = gaussian(5, 5, &mut rng);
        let b = sig.pair(1, 3).unwrap();
        let sp = build_subproblem(&x, &g, b, QMode::Scalar(1.0), 0.2).unwrap();
        let full = &g * x.matrix().transpose();
        let gxt = Matrix2::new(full[(1, 1)], full[(1, 3)], full[(3, 1)], full[(3, 3)]);
        assert!((sp.pmat - (gxt - Matrix2::identity() * 1.2)).amax() <= 1e-12);
    }
}
