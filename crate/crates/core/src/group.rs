//! Group-level machinery: exponential map, adjoint action, the dressed
//! operator `R_g = Ad_{g^-1} R Ad_g`, the Iwasawa factorization `l = b u` of
//! SL(n, C) with `b` in AN and `u` in SU(n), and the map `(R - i)` onto
//! Lie(AN).

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    AlgebraElement, BasisSpec, CMat, CVec, ComplexElement, LieContext, LinearOp, MaxAbs, RMat,
    RVec,
};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Tolerance for the SU(n) / SL(n, C) membership invariants.
pub const GROUP_TOL: f64 = 1e-12;
/// Default tolerance for membership of an element in Lie(AN).
pub const AN_MEMBERSHIP_TOL: f64 = 1e-10;
/// Default cap on the condition number accepted by the Iwasawa factorization.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Unitary,
    Complexified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: CMat,
    kind: GroupKind,
}

pub fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMat::identity(n, n)).max_abs()
}

pub fn det_defect(m: &CMat) -> f64 {
    (m.determinant() - Complex64::new(1.0, 0.0)).norm()
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMat::identity(n, n),
            kind: GroupKind::Unitary,
        }
    }

    pub fn unitary(matrix: CMat) -> Result<Self> {
        Self::unitary_with_tol(matrix, GROUP_TOL)
    }

    pub fn unitary_with_tol(matrix: CMat, tol: f64) -> Result<Self> {
        let u = unitarity_defect(&matrix);
        let d = det_defect(&matrix);
        if u > tol || d > tol {
            return Err(Error::SubspaceMembership {
                subspace: "SU(n)",
                residual: u.max(d),
                tolerance: tol,
            });
        }
        Ok(Self {
            matrix,
            kind: GroupKind::Unitary,
        })
    }

    pub fn complexified(matrix: CMat) -> Result<Self> {
        let d = det_defect(&matrix);
        if d > GROUP_TOL {
            return Err(Error::SubspaceMembership {
                subspace: "SL(n,C)",
                residual: d,
                tolerance: GROUP_TOL,
            });
        }
        Ok(Self {
            matrix,
            kind: GroupKind::Complexified,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn inverse(&self) -> Self {
        let matrix = match self.kind {
            GroupKind::Unitary => self.matrix.adjoint(),
            GroupKind::Complexified => inverse(&self.matrix),
        };
        Self {
            matrix,
            kind: self.kind,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let kind = if self.kind == GroupKind::Unitary && other.kind == GroupKind::Unitary {
            GroupKind::Unitary
        } else {
            GroupKind::Complexified
        };
        Self {
            matrix: &self.matrix * &other.matrix,
            kind,
        }
    }
}

/// Inverse of a small invertible matrix. Callers guarantee invertibility
/// (group elements have unit determinant).
pub fn inverse(m: &CMat) -> CMat {
    m.clone()
        .try_inverse()
        .expect("group element with unit determinant is invertible")
}

/// Upper-triangular matrix with positive real diagonal and unit determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct ANElement {
    matrix: CMat,
}

impl ANElement {
    pub fn new(matrix: CMat) -> Result<Self> {
        let r = an_group_defect(&matrix);
        if r > GROUP_TOL {
            return Err(Error::SubspaceMembership {
                subspace: "AN",
                residual: r,
                tolerance: GROUP_TOL,
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

/// Largest violation of the AN group conditions: strictly-lower entries,
/// non-real or non-positive diagonal, and `prod(diag) - 1`.
pub fn an_group_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    let mut prod = 1.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max(m[(i, j)].norm());
        }
        let d = m[(i, i)];
        worst = worst.max(d.im.abs());
        if d.re <= 0.0 {
            worst = worst.max(1.0 - d.re);
        }
        prod *= d.re;
    }
    worst.max((prod - 1.0).abs())
}

/// Largest violation of membership in Lie(AN) for a matrix: strictly-lower
/// entries, imaginary diagonal parts and the trace.
pub fn an_algebra_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max(m[(i, j)].norm());
        }
        worst = worst.max(m[(i, i)].im.abs());
    }
    worst.max(m.trace().norm())
}

pub fn matrix_exp(m: &CMat) -> CMat {
    m.clone().exp()
}

pub fn exp_map(basis: &BasisSpec, x: &AlgebraElement) -> Result<GroupElement> {
    if x.basis != basis.id() {
        return Err(Error::BasisMismatch {
            left: basis.n(),
            right: x.basis.n,
        });
    }
    Ok(GroupElement {
        matrix: matrix_exp(&x.to_matrix(basis)),
        kind: GroupKind::Unitary,
    })
}

pub fn exp_map_c(basis: &BasisSpec, x: &ComplexElement) -> Result<GroupElement> {
    if x.basis != basis.id() {
        return Err(Error::BasisMismatch {
            left: basis.n(),
            right: x.basis.n,
        });
    }
    Ok(GroupElement {
        matrix: matrix_exp(&x.to_matrix(basis)),
        kind: GroupKind::Complexified,
    })
}

/// Complex matrix of `X -> g X g^-1` on basis coefficients.
pub fn adjoint_matrix(basis: &BasisSpec, g: &CMat) -> CMat {
    let ginv = inverse(g);
    let d = basis.dim();
    let mut out = CMat::zeros(d, d);
    for (k, b) in basis.real_basis().iter().enumerate() {
        let c = basis.coeffs(&(g * b * &ginv));
        out.set_column(k, &c);
    }
    out
}

/// Real matrix of `Ad_g` for (numerically) unitary `g`; the imaginary parts,
/// which vanish for exactly unitary `g`, are dropped.
pub fn adjoint_matrix_real(basis: &BasisSpec, g: &CMat) -> RMat {
    adjoint_matrix(basis, g).map(|z| z.re)
}

pub fn adjoint_action(
    basis: &BasisSpec,
    g: &GroupElement,
    x: &AlgebraElement,
) -> Result<AlgebraElement> {
    let m = g.matrix() * x.to_matrix(basis) * g.inverse().matrix();
    AlgebraElement::from_matrix(basis, &m, 1e-10).map_err(|e| {
        Error::Consistency(format!("adjoint action left the compact algebra: {e}"))
    })
}

/// `R_g = Ad_{g^-1} R Ad_g` for unitary `g`.
pub fn dressed_r(basis: &BasisSpec, r: &LinearOp, g: &GroupElement) -> Result<LinearOp> {
    if g.kind() != GroupKind::Unitary {
        return Err(Error::InvalidParameters(
            "dressed operator requires a unitary group element".into(),
        ));
    }
    Ok(LinearOp {
        matrix: dressed_r_matrix(basis, &r.matrix, g.matrix()),
        basis: basis.id(),
    })
}

pub(crate) fn dressed_r_matrix(basis: &BasisSpec, r: &RMat, g: &CMat) -> RMat {
    let ad = adjoint_matrix_real(basis, g);
    let ad_inv = adjoint_matrix_real(basis, &inverse(g));
    ad_inv * r * ad
}

/// Nearest special unitary matrix (polar factor with the determinant phase
/// removed).
pub fn project_special_unitary(m: &CMat) -> CMat {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("requested U") * svd.v_t.expect("requested V^T");
    let phase = w.determinant().arg() / n as f64;
    w * Complex64::from_polar(1.0, -phase)
}

pub fn condition_number(m: &CMat) -> f64 {
    let s = m.clone().singular_values();
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// An algorithm for the factorization `l = b u`, `b` in AN, `u` in SU(n).
pub trait IwasawaAlgorithm: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns `(b, u)` as raw matrices.
    fn factor(&self, l: &CMat) -> Result<(CMat, CMat)>;
}

fn check_conditioning(l: &CMat, cap: f64) -> Result<()> {
    if l.nrows() != l.ncols() {
        return Err(Error::InvalidDimension("Iwasawa needs a square matrix".into()));
    }
    let condition = condition_number(l);
    if !(condition <= cap) {
        return Err(Error::Conditioning { condition, cap });
    }
    Ok(())
}

/// Factors `l l^dagger = b b^dagger` with an upper-triangular Cholesky factor
/// and sets `u = b^-1 l`.
#[derive(Clone, Debug)]
pub struct CholeskyIwasawa {
    pub condition_cap: f64,
}

impl Default for CholeskyIwasawa {
    fn default() -> Self {
        Self {
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

fn reverse(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
}

impl IwasawaAlgorithm for CholeskyIwasawa {
    fn name(&self) -> &'static str {
        "cholesky"
    }

    fn factor(&self, l: &CMat) -> Result<(CMat, CMat)> {
        check_conditioning(l, self.condition_cap)?;
        let gram = l * l.adjoint();
        // Lower Cholesky of the index-reversed Gram matrix, reversed back, is
        // upper triangular with positive diagonal.
        let chol = Cholesky::new(reverse(&gram))
            .ok_or_else(|| Error::Consistency("Gram matrix not positive definite".into()))?;
        let mut b = reverse(&chol.l());
        let n = b.nrows();
        for i in 0..n {
            for j in 0..i {
                b[(i, j)] = Complex64::new(0.0, 0.0);
            }
            b[(i, i)] = Complex64::new(b[(i, i)].re, 0.0);
        }
        let u = b
            .solve_upper_triangular(l)
            .ok_or_else(|| Error::Consistency("singular AN factor".into()))?;
        Ok((b, u))
    }
}

/// Orthonormalizes the rows of `l` from the last row upwards.
#[derive(Clone, Debug)]
pub struct GramSchmidtIwasawa {
    pub condition_cap: f64,
}

impl Default for GramSchmidtIwasawa {
    fn default() -> Self {
        Self {
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

impl IwasawaAlgorithm for GramSchmidtIwasawa {
    fn name(&self) -> &'static str {
        "gram-schmidt"
    }

    fn factor(&self, l: &CMat) -> Result<(CMat, CMat)> {
        check_conditioning(l, self.condition_cap)?;
        let n = l.nrows();
        let mut b = CMat::zeros(n, n);
        let mut u = CMat::zeros(n, n);
        for i in (0..n).rev() {
            let mut v = l.row(i).into_owned();
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for j in (i + 1)..n {
                    let uj = u.row(j);
                    let proj = v
                        .iter()
                        .zip(uj.iter())
                        .fold(Complex64::new(0.0, 0.0), |acc, (a, c)| acc + a * c.conj());
                    b[(i, j)] += proj;
                    v -= uj * proj;
                }
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::Consistency("rank-deficient rows".into()));
            }
            b[(i, i)] = Complex64::new(norm, 0.0);
            u.set_row(i, &(v / Complex64::new(norm, 0.0)));
        }
        Ok((b, u))
    }
}

pub type IwasawaCtor = fn(f64) -> Box<dyn IwasawaAlgorithm>;

pub fn iwasawa_registry() -> Registry<IwasawaCtor> {
    let mut reg: Registry<IwasawaCtor> = Registry::new("iwasawa algorithm");
    reg.register("cholesky", |cap| {
        Box::new(CholeskyIwasawa { condition_cap: cap })
    })
    .register("gram-schmidt", |cap| {
        Box::new(GramSchmidtIwasawa { condition_cap: cap })
    });
    reg
}

/// Iwasawa factorization `l = b u` with the default (Cholesky) algorithm.
pub fn iwasawa(l: &GroupElement) -> Result<(ANElement, GroupElement)> {
    iwasawa_with(&CholeskyIwasawa::default(), l)
}

pub fn iwasawa_with(
    alg: &dyn IwasawaAlgorithm,
    l: &GroupElement,
) -> Result<(ANElement, GroupElement)> {
    let (b, u) = alg.factor(l.matrix())?;
    Ok((
        ANElement::new(b)?,
        GroupElement::unitary_with_tol(u, 1e-10)?,
    ))
}

/// `(R - i) X` as an element of the complexified algebra.
pub fn r_minus_i(ctx: &LieContext, x: &AlgebraElement) -> ComplexElement {
    ComplexElement {
        coeffs: ctx.r_minus_i(&x.coeffs),
        basis: x.basis,
    }
}

/// Distance of `xi` from the image `(R - i) su(n)` in coefficient max-norm.
pub fn r_minus_i_image_residual(ctx: &LieContext, xi: &CVec) -> f64 {
    let re = xi.map(|z| z.re);
    let im = xi.map(|z| z.im);
    (re + ctx.apply_r(&im)).max_abs()
}

/// Solves `(R - i) K = xi` for `K` in the compact algebra.
pub fn invert_r_minus_i(
    ctx: &LieContext,
    xi: &ComplexElement,
    tol: f64,
) -> Result<AlgebraElement> {
    let residual = r_minus_i_image_residual(ctx, &xi.coeffs);
    if residual > tol {
        return Err(Error::SubspaceMembership {
            subspace: "Lie(AN) = (R-i)su(n)",
            residual,
            tolerance: tol,
        });
    }
    Ok(AlgebraElement {
        coeffs: xi.coeffs.map(|z| -z.im),
        basis: xi.basis,
    })
}

/// Splits `z = (R - i) K + kappa` with `K`, `kappa` in the compact algebra,
/// i.e. along `sl(n,C) = Lie(AN) + su(n)`. Returns `(K, kappa)`.
pub fn split_an_compact(ctx: &LieContext, z: &CVec) -> (RVec, RVec) {
    let im = z.map(|c| c.im);
    let k = -&im;
    let kappa = z.map(|c| c.re) + ctx.apply_r(&im);
    (k, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_cartan_weyl, inner, IM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_su(basis: &BasisSpec, rng: &mut ChaCha8Rng, scale: f64) -> AlgebraElement {
        AlgebraElement::new(
            basis,
            RVec::from_fn(basis.dim(), |_, _| rng.random_range(-scale..scale)),
        )
        .unwrap()
    }

    fn random_sl(basis: &BasisSpec, rng: &mut ChaCha8Rng) -> GroupElement {
        let c = CVec::from_fn(basis.dim(), |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        exp_map_c(basis, &ComplexElement::new(basis, c).unwrap()).unwrap()
    }

    #[test]
    fn exp_of_zero_and_pauli_closed_form() {
        let b = build_cartan_weyl(2).unwrap();
        let e = exp_map(&b, &AlgebraElement::zero(&b)).unwrap();
        assert!((e.matrix() - CMat::identity(2, 2)).max_abs() < 1e-15);

        // T = i sigma_3; exp(pi/2 T)^2 = exp(i pi sigma_3) = -1
        let x = AlgebraElement::basis_element(&b, 0).scale(std::f64::consts::FRAC_PI_2);
        let g = exp_map(&b, &x).unwrap();
        let sq = g.matrix() * g.matrix();
        assert!((sq + CMat::identity(2, 2)).max_abs() < 1e-14);
        // closed form diag(e^{i pi/2}, e^{-i pi/2})
        assert!((g.matrix()[(0, 0)] - IM).norm() < 1e-15);
    }

    #[test]
    fn exp_inverse_and_unitarity() {
        let b = build_cartan_weyl(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = random_su(&b, &mut rng, 2.0);
            let g = exp_map(&b, &x).unwrap();
            let gi = exp_map(&b, &x.scale(-1.0)).unwrap();
            assert!((g.matrix() * gi.matrix() - CMat::identity(3, 3)).max_abs() < 1e-12);
            assert!(unitarity_defect(g.matrix()) < 1e-12);
            assert!(det_defect(g.matrix()) < 1e-12);
        }
    }

    #[test]
    fn adjoint_action_properties() {
        let b = build_cartan_weyl(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let id = GroupElement::identity(3);
        for _ in 0..30 {
            let x = random_su(&b, &mut rng, 1.0);
            let y = random_su(&b, &mut rng, 1.0);
            assert!(adjoint_action(&b, &id, &x).unwrap().sub(&x).unwrap().max_norm() < 1e-15);
            let g = exp_map(&b, &random_su(&b, &mut rng, 2.0)).unwrap();
            let gx = adjoint_action(&b, &g, &x).unwrap();
            let gy = adjoint_action(&b, &g, &y).unwrap();
            let lhs = inner(&b, &gx, &gy).unwrap();
            assert!((lhs - inner(&b, &x, &y).unwrap()).abs() < 1e-12);
        }
        // torus elements fix the Cartan subalgebra
        let torus = AlgebraElement::new(
            &b,
            RVec::from_vec(vec![0.7, -1.3, 0., 0., 0., 0., 0., 0.]),
        )
        .unwrap();
        let t = exp_map(&b, &torus).unwrap();
        let h = AlgebraElement::new(
            &b,
            RVec::from_vec(vec![-0.2, 0.9, 0., 0., 0., 0., 0., 0.]),
        )
        .unwrap();
        assert!(adjoint_action(&b, &t, &h).unwrap().sub(&h).unwrap().max_norm() < 1e-14);
    }

    #[test]
    fn dressed_r_identity_and_torus() {
        let ctx = LieContext::su(3).unwrap();
        let b = &ctx.basis;
        let rid = dressed_r(b, &ctx.r, &GroupElement::identity(3)).unwrap();
        assert!((rid.matrix - &ctx.r.matrix).max_abs() < 1e-15);

        let torus = AlgebraElement::new(
            b,
            RVec::from_vec(vec![0.4, 2.1, 0., 0., 0., 0., 0., 0.]),
        )
        .unwrap();
        let t = exp_map(b, &torus).unwrap();
        let rt = dressed_r(b, &ctx.r, &t).unwrap();
        for mu in 0..2 {
            let h = AlgebraElement::basis_element(b, mu);
            assert!(rt.apply(&h).unwrap().max_norm() < 1e-14);
        }
    }

    #[test]
    fn dressed_r_rejects_complex_elements() {
        let ctx = LieContext::su(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = random_sl(&ctx.basis, &mut rng);
        assert!(dressed_r(&ctx.basis, &ctx.r, &l).is_err());
    }

    #[test]
    fn iwasawa_trivial_cases() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let (b, u) = iwasawa(&GroupElement::identity(2)).unwrap();
        assert!((b.matrix() - CMat::identity(2, 2)).max_abs() < 1e-15);
        assert!((u.matrix() - CMat::identity(2, 2)).max_abs() < 1e-15);

        let an = CMat::from_row_slice(2, 2, &[c(2.0), Complex64::new(0.3, -1.1), c(0.0), c(0.5)]);
        let (b, u) = iwasawa(&GroupElement::complexified(an.clone()).unwrap()).unwrap();
        assert!((b.matrix() - &an).max_abs() < 1e-14);
        assert!((u.matrix() - CMat::identity(2, 2)).max_abs() < 1e-14);

        let ctx = LieContext::su(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = exp_map(&ctx.basis, &random_su(&ctx.basis, &mut rng, 2.0)).unwrap();
        let (b, u) = iwasawa(&g).unwrap();
        assert!((b.matrix() - CMat::identity(3, 3)).max_abs() < 1e-13);
        assert!((u.matrix() - g.matrix()).max_abs() < 1e-13);
    }

    #[test]
    fn iwasawa_algorithms_agree() {
        let reg = iwasawa_registry();
        let chol = (reg.get("cholesky").unwrap())(DEFAULT_CONDITION_CAP);
        let gs = (reg.get("gram-schmidt").unwrap())(DEFAULT_CONDITION_CAP);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 3] {
            let basis = build_cartan_weyl(n).unwrap();
            for _ in 0..200 {
                let l = random_sl(&basis, &mut rng);
                let (b1, u1) = chol.factor(l.matrix()).unwrap();
                let (b2, u2) = gs.factor(l.matrix()).unwrap();
                assert!((&b1 * &u1 - l.matrix()).max_abs() < 1e-12);
                assert!((&b2 * &u2 - l.matrix()).max_abs() < 1e-12);
                assert!((&b1 - &b2).max_abs() < 1e-10);
                assert!((&u1 - &u2).max_abs() < 1e-10);
                assert!(an_group_defect(&b1) < 1e-12);
                assert!(unitarity_defect(&u1) < 1e-12);
            }
        }
    }

    #[test]
    fn iwasawa_rejects_ill_conditioned_input() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let l = CMat::from_row_slice(2, 2, &[c(1e5), c(0.0), c(0.0), c(1e-5)]);
        let err = CholeskyIwasawa::default().factor(&l).unwrap_err();
        assert!(matches!(err, Error::Conditioning { .. }));
    }

    #[test]
    fn r_minus_i_examples() {
        let ctx = LieContext::su(3).unwrap();
        let b = &ctx.basis;
        let tol = AN_MEMBERSHIP_TOL;
        // xi = H^mu -> K = T^mu
        for mu in 0..2 {
            let h = ComplexElement::from_matrix(b, b.cartan_generator(mu), 1e-14).unwrap();
            let k = invert_r_minus_i(&ctx, &h, tol).unwrap();
            assert!((k.coeffs - b.unit(mu)).max_abs() < 1e-14);
        }
        // xi = sqrt2 E^a -> K = B^a
        for a in 0..3 {
            let (ep, _) = b.step_generators(a);
            let xi = ComplexElement::from_matrix(b, &(ep * Complex64::new(2f64.sqrt(), 0.0)), 1e-14)
                .unwrap();
            let k = invert_r_minus_i(&ctx, &xi, tol).unwrap();
            assert!((k.coeffs - b.unit(b.b_index(a))).max_abs() < 1e-14);
        }
        let zero = ComplexElement::new(b, CVec::zeros(8)).unwrap();
        assert_eq!(invert_r_minus_i(&ctx, &zero, tol).unwrap().max_norm(), 0.0);

        // a lower-triangular element is rejected
        let (_, em) = b.step_generators(0);
        let bad = ComplexElement::from_matrix(b, em, 1e-14).unwrap();
        assert!(matches!(
            invert_r_minus_i(&ctx, &bad, tol),
            Err(Error::SubspaceMembership { .. })
        ));
    }

    #[test]
    fn split_reconstructs() {
        let ctx = LieContext::su(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let z = CVec::from_fn(8, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let (k, kappa) = split_an_compact(&ctx, &z);
            let back = ctx.r_minus_i(&k) + kappa.map(|x| Complex64::new(x, 0.0));
            assert!((back - &z).max_abs() < 1e-14);
            let an = ctx.basis.to_matrix_c(ctx.r_minus_i(&k).as_slice());
            assert!(an_algebra_defect(&an) < 1e-14);
        }
    }

    #[test]
    fn reprojection_restores_special_unitarity() {
        let ctx = LieContext::su(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = exp_map(&ctx.basis, &random_su(&ctx.basis, &mut rng, 1.0)).unwrap();
        let noisy = g.matrix() + CMat::from_fn(2, 2, |_, _| Complex64::new(1e-7, -2e-7));
        let p = project_special_unitary(&noisy);
        assert!(unitarity_defect(&p) < 1e-14);
        assert!(det_defect(&p) < 1e-14);
        assert!((p - g.matrix()).max_abs() < 1e-6);
    }
}
