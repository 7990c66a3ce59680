//! Finite-dimensional Lie-algebra machinery for su(n).
//!
//! Elements of the compact algebra are stored as real coefficient vectors over
//! a Cartan-Weyl derived basis
//!
//! ```text
//! T^mu = i H^mu,   B^a = i (E^a + E^-a) / sqrt 2,   C^a = (E^a - E^-a) / sqrt 2
//! ```
//!
//! ordered as all `T^mu` first, then `(B^a, C^a)` pairs for the positive roots
//! `e_i - e_j` (`i < j`) in lexicographic order. The same basis spans the
//! complexification over the complex numbers, so complex coefficient vectors
//! represent elements of sl(n, C).
//!
//! The invariant form is the trace form `Tr(XY)` in the fundamental
//! representation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;

pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub(crate) const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Max-modulus of the entries of a real or complex matrix.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R, C, S> MaxAbs for nalgebra::Matrix<f64, R, C, S>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<f64, R, C>,
{
    fn max_abs(&self) -> f64 {
        self.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

impl<R, C, S> MaxAbs for nalgebra::Matrix<Complex64, R, C, S>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<Complex64, R, C>,
{
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupFamily {
    SpecialUnitary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisId {
    pub n: usize,
}

pub struct BasisSpec {
    family: GroupFamily,
    n: usize,
    real_basis: Vec<CMat>,
    cartan: Vec<CMat>,
    positive_roots: Vec<(usize, usize)>,
    step_generators: Vec<(CMat, CMat)>,
    /// `f[(i * dim + j) * dim + k]` with `[b_i, b_j] = f_ijk b_k`.
    structure: Vec<f64>,
    gram: RMat,
    /// Coefficient extraction weights: `c_k = sum_ab extract[k][(a,b)] M[(a,b)]`.
    extract: Vec<CMat>,
}

impl fmt::Debug for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisSpec")
            .field("family", &self.family)
            .field("n", &self.n)
            .field("dim", &self.dim())
            .finish()
    }
}

fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

/// Builds the Cartan-Weyl derived basis of su(n).
pub fn build_cartan_weyl(n: usize) -> Result<Arc<BasisSpec>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "su(n) requires n >= 2, got {n}"
        )));
    }
    let rank = n - 1;

    // Gell-Mann style diagonal generators, Tr(H^mu H^nu) = 2 delta.
    let cartan: Vec<CMat> = (1..=rank)
        .map(|k| {
            let scale = (2.0 / (k * (k + 1)) as f64).sqrt();
            let mut h = CMat::zeros(n, n);
            for d in 0..k {
                h[(d, d)] = Complex64::new(scale, 0.0);
            }
            h[(k, k)] = Complex64::new(-(k as f64) * scale, 0.0);
            h
        })
        .collect();

    let mut positive_roots = Vec::new();
    let mut step_generators = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            positive_roots.push((i, j));
            step_generators.push((matrix_unit(n, i, j), matrix_unit(n, j, i)));
        }
    }

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut real_basis: Vec<CMat> = cartan.iter().map(|h| h * IM).collect();
    for (ep, em) in &step_generators {
        real_basis.push((ep + em) * (IM * inv_sqrt2));
        real_basis.push((ep - em) * Complex64::new(inv_sqrt2, 0.0));
    }
    let dim = real_basis.len();

    let gram = RMat::from_fn(dim, dim, |a, b| {
        (&real_basis[a] * &real_basis[b]).trace().re
    });
    let gram_inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Consistency("degenerate trace form on basis".into()))?;
    let extract: Vec<CMat> = (0..dim)
        .map(|k| {
            let mut w = CMat::zeros(n, n);
            for l in 0..dim {
                let c = gram_inv[(k, l)];
                if c != 0.0 {
                    w += real_basis[l].transpose() * Complex64::new(c, 0.0);
                }
            }
            w
        })
        .collect();

    let mut spec = BasisSpec {
        family: GroupFamily::SpecialUnitary,
        n,
        real_basis,
        cartan,
        positive_roots,
        step_generators,
        structure: Vec::new(),
        gram,
        extract,
    };

    let mut structure = vec![0.0; dim * dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let comm = &spec.real_basis[i] * &spec.real_basis[j]
                - &spec.real_basis[j] * &spec.real_basis[i];
            let c = spec.coeffs_checked(&comm, 1e-12)?;
            for k in 0..dim {
                if c[k].im.abs() > 1e-12 {
                    return Err(Error::Consistency(format!(
                        "bracket [b{i}, b{j}] leaves the compact real form"
                    )));
                }
                structure[(i * dim + j) * dim + k] = c[k].re;
            }
        }
    }
    spec.structure = structure;
    Ok(Arc::new(spec))
}

impl BasisSpec {
    pub fn id(&self) -> BasisId {
        BasisId { n: self.n }
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.n - 1
    }

    pub fn dim(&self) -> usize {
        self.real_basis.len()
    }

    pub fn real_basis(&self) -> &[CMat] {
        &self.real_basis
    }

    /// Hermitian Cartan generator `H^mu`.
    pub fn cartan_generator(&self, mu: usize) -> &CMat {
        &self.cartan[mu]
    }

    pub fn positive_roots(&self) -> &[(usize, usize)] {
        &self.positive_roots
    }

    /// `(E^a, E^-a)` for the `a`-th positive root.
    pub fn step_generators(&self, a: usize) -> (&CMat, &CMat) {
        let (p, m) = &self.step_generators[a];
        (p, m)
    }

    pub fn cartan_index(&self, mu: usize) -> usize {
        mu
    }

    pub fn b_index(&self, a: usize) -> usize {
        self.rank() + 2 * a
    }

    pub fn c_index(&self, a: usize) -> usize {
        self.rank() + 2 * a + 1
    }

    pub fn gram(&self) -> &RMat {
        &self.gram
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.structure[(i * d + j) * d + k]
    }

    pub fn unit(&self, k: usize) -> RVec {
        let mut v = RVec::zeros(self.dim());
        v[k] = 1.0;
        v
    }

    pub fn to_matrix(&self, coeffs: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (c, b) in coeffs.iter().zip(&self.real_basis) {
            if *c != 0.0 {
                m += b * Complex64::new(*c, 0.0);
            }
        }
        m
    }

    pub fn to_matrix_c(&self, coeffs: &[Complex64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (c, b) in coeffs.iter().zip(&self.real_basis) {
            if *c != Complex64::new(0.0, 0.0) {
                m += b * *c;
            }
        }
        m
    }

    /// Complex coefficients of the traceless part of `m`.
    pub fn coeffs(&self, m: &CMat) -> CVec {
        CVec::from_iterator(
            self.dim(),
            self.extract.iter().map(|w| {
                w.iter()
                    .zip(m.iter())
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            }),
        )
    }

    /// Real part of [`Self::coeffs`]: the projection of `m` onto the compact
    /// form along `i su(n)`.
    pub fn real_coeffs(&self, m: &CMat) -> RVec {
        self.coeffs(m).map(|c| c.re)
    }

    /// Coefficients of `m`, failing if `m` is not in the complex span of the
    /// basis (i.e. not traceless) beyond `tol` in max-norm.
    pub fn coeffs_checked(&self, m: &CMat, tol: f64) -> Result<CVec> {
        let c = self.coeffs(m);
        let back = self.to_matrix_c(c.as_slice());
        let residual = (&back - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual > tol {
            return Err(Error::SubspaceMembership {
                subspace: "sl(n,C)",
                residual,
                tolerance: tol,
            });
        }
        Ok(c)
    }

    pub fn bracket_coeffs(&self, x: &[f64], y: &[f64]) -> RVec {
        let d = self.dim();
        let mut out = RVec::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let row = &self.structure[(i * d + j) * d..(i * d + j + 1) * d];
                for (o, f) in out.iter_mut().zip(row) {
                    *o += xy * f;
                }
            }
        }
        out
    }

    pub fn bracket_coeffs_c(&self, x: &[Complex64], y: &[Complex64]) -> CVec {
        let d = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = CVec::zeros(d);
        for i in 0..d {
            if x[i] == zero {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == zero {
                    continue;
                }
                let row = &self.structure[(i * d + j) * d..(i * d + j + 1) * d];
                for (o, f) in out.iter_mut().zip(row) {
                    *o += xy * *f;
                }
            }
        }
        out
    }

    pub fn inner_coeffs(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                s += x[a] * self.gram[(a, b)] * y[b];
            }
        }
        s
    }

    pub fn inner_coeffs_c(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let d = self.dim();
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                s += x[a] * self.gram[(a, b)] * y[b];
            }
        }
        s
    }

    fn check(&self, id: BasisId) -> Result<()> {
        if id.n != self.n {
            return Err(Error::BasisMismatch {
                left: self.n,
                right: id.n,
            });
        }
        Ok(())
    }

    pub fn describe(&self) -> BasisDescription {
        BasisDescription {
            family: self.family,
            n: self.n,
            positive_roots: self.positive_roots.clone(),
            basis: self
                .real_basis
                .iter()
                .map(|m| {
                    (0..self.n)
                        .map(|r| (0..self.n).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

/// JSON-serializable description of a basis, for debugging and fixtures.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisDescription {
    pub family: GroupFamily,
    pub n: usize,
    pub positive_roots: Vec<(usize, usize)>,
    /// `basis[k][row][col] = [re, im]`.
    pub basis: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Element of the compact algebra (real coefficients).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    pub coeffs: RVec,
    pub basis: BasisId,
}

/// Element of the complexified algebra (complex coefficients).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexElement {
    pub coeffs: CVec,
    pub basis: BasisId,
}

impl AlgebraElement {
    pub fn new(basis: &BasisSpec, coeffs: RVec) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::InvalidDimension(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                coeffs.len()
            )));
        }
        Ok(Self {
            coeffs,
            basis: basis.id(),
        })
    }

    pub fn zero(basis: &BasisSpec) -> Self {
        Self {
            coeffs: RVec::zeros(basis.dim()),
            basis: basis.id(),
        }
    }

    pub fn basis_element(basis: &BasisSpec, k: usize) -> Self {
        Self {
            coeffs: basis.unit(k),
            basis: basis.id(),
        }
    }

    pub fn from_matrix(basis: &BasisSpec, m: &CMat, tol: f64) -> Result<Self> {
        let c = basis.coeffs_checked(m, tol)?;
        let imag = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag > tol {
            return Err(Error::SubspaceMembership {
                subspace: "su(n)",
                residual: imag,
                tolerance: tol,
            });
        }
        Ok(Self {
            coeffs: c.map(|z| z.re),
            basis: basis.id(),
        })
    }

    pub fn to_matrix(&self, basis: &BasisSpec) -> CMat {
        basis.to_matrix(self.coeffs.as_slice())
    }

    pub fn complexify(&self) -> ComplexElement {
        ComplexElement {
            coeffs: self.coeffs.map(|c| Complex64::new(c, 0.0)),
            basis: self.basis,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: &self.coeffs * s,
            basis: self.basis,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_basis(self.basis, other.basis)?;
        Ok(Self {
            coeffs: &self.coeffs + &other.coeffs,
            basis: self.basis,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_basis(self.basis, other.basis)?;
        Ok(Self {
            coeffs: &self.coeffs - &other.coeffs,
            basis: self.basis,
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.max_abs()
    }
}

impl ComplexElement {
    pub fn new(basis: &BasisSpec, coeffs: CVec) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::InvalidDimension(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                coeffs.len()
            )));
        }
        Ok(Self {
            coeffs,
            basis: basis.id(),
        })
    }

    pub fn from_matrix(basis: &BasisSpec, m: &CMat, tol: f64) -> Result<Self> {
        Ok(Self {
            coeffs: basis.coeffs_checked(m, tol)?,
            basis: basis.id(),
        })
    }

    pub fn to_matrix(&self, basis: &BasisSpec) -> CMat {
        basis.to_matrix_c(self.coeffs.as_slice())
    }

    pub fn real_part(&self) -> AlgebraElement {
        AlgebraElement {
            coeffs: self.coeffs.map(|c| c.re),
            basis: self.basis,
        }
    }

    pub fn imag_part(&self) -> AlgebraElement {
        AlgebraElement {
            coeffs: self.coeffs.map(|c| c.im),
            basis: self.basis,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn same_basis(a: BasisId, b: BasisId) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok(())
}

/// Trace form `Tr(XY)`.
pub fn inner(basis: &BasisSpec, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    basis.check(x.basis)?;
    basis.check(y.basis)?;
    Ok(basis.inner_coeffs(x.coeffs.as_slice(), y.coeffs.as_slice()))
}

pub fn inner_c(basis: &BasisSpec, x: &ComplexElement, y: &ComplexElement) -> Result<Complex64> {
    basis.check(x.basis)?;
    basis.check(y.basis)?;
    Ok(basis.inner_coeffs_c(x.coeffs.as_slice(), y.coeffs.as_slice()))
}

pub fn bracket(
    basis: &BasisSpec,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<AlgebraElement> {
    basis.check(x.basis)?;
    basis.check(y.basis)?;
    Ok(AlgebraElement {
        coeffs: basis.bracket_coeffs(x.coeffs.as_slice(), y.coeffs.as_slice()),
        basis: basis.id(),
    })
}

pub fn bracket_c(
    basis: &BasisSpec,
    x: &ComplexElement,
    y: &ComplexElement,
) -> Result<ComplexElement> {
    basis.check(x.basis)?;
    basis.check(y.basis)?;
    Ok(ComplexElement {
        coeffs: basis.bracket_coeffs_c(x.coeffs.as_slice(), y.coeffs.as_slice()),
        basis: basis.id(),
    })
}

/// Real-linear operator on the compact algebra, as a matrix on coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOp {
    pub matrix: RMat,
    pub basis: BasisId,
}

impl LinearOp {
    pub fn identity(basis: &BasisSpec) -> Self {
        Self {
            matrix: RMat::identity(basis.dim(), basis.dim()),
            basis: basis.id(),
        }
    }

    pub fn zero(basis: &BasisSpec) -> Self {
        Self {
            matrix: RMat::zeros(basis.dim(), basis.dim()),
            basis: basis.id(),
        }
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        same_basis(self.basis, x.basis)?;
        Ok(AlgebraElement {
            coeffs: &self.matrix * &x.coeffs,
            basis: self.basis,
        })
    }

    /// Complex-linear extension.
    pub fn apply_c(&self, x: &ComplexElement) -> Result<ComplexElement> {
        same_basis(self.basis, x.basis)?;
        Ok(ComplexElement {
            coeffs: apply_real_to_complex(&self.matrix, &x.coeffs),
            basis: self.basis,
        })
    }

    pub fn compose(&self, other: &LinearOp) -> Result<LinearOp> {
        same_basis(self.basis, other.basis)?;
        Ok(LinearOp {
            matrix: &self.matrix * &other.matrix,
            basis: self.basis,
        })
    }

    pub fn add_scaled(&self, other: &LinearOp, s: f64) -> Result<LinearOp> {
        same_basis(self.basis, other.basis)?;
        Ok(LinearOp {
            matrix: &self.matrix + &other.matrix * s,
            basis: self.basis,
        })
    }

    pub fn inverse(&self) -> Result<LinearOp> {
        let sigma_min = self
            .matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if sigma_min < 1e-8 {
            return Err(Error::SingularOperator { site: 0, sigma_min });
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularOperator { site: 0, sigma_min })?;
        Ok(LinearOp {
            matrix: inv,
            basis: self.basis,
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.matrix.max_abs()
    }
}

pub(crate) fn apply_real_to_complex(m: &RMat, x: &CVec) -> CVec {
    let re = m * x.map(|z| z.re);
    let im = m * x.map(|z| z.im);
    CVec::from_iterator(
        x.len(),
        re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b)),
    )
}

/// The canonical Yang-Baxter operator: `R T = 0`, `R B = C`, `R C = -B`.
pub fn canonical_r(basis: &BasisSpec) -> LinearOp {
    let d = basis.dim();
    let mut m = RMat::zeros(d, d);
    for a in 0..basis.positive_roots().len() {
        let (b, c) = (basis.b_index(a), basis.c_index(a));
        m[(c, b)] = 1.0;
        m[(b, c)] = -1.0;
    }
    LinearOp {
        matrix: m,
        basis: basis.id(),
    }
}

/// Negative control: `R B = C`, `R C = B`. Neither skew nor a solution of the
/// modified Yang-Baxter equation.
pub fn flipped_r(basis: &BasisSpec) -> LinearOp {
    let mut r = canonical_r(basis);
    for a in 0..basis.positive_roots().len() {
        let (b, c) = (basis.b_index(a), basis.c_index(a));
        r.matrix[(b, c)] = 1.0;
    }
    r
}

pub type ROperatorCtor = fn(&BasisSpec) -> LinearOp;

/// Registered Yang-Baxter operator candidates, selected by name in configs.
pub fn r_operator_registry() -> Registry<ROperatorCtor> {
    let mut reg: Registry<ROperatorCtor> = Registry::new("r-operator");
    reg.register("canonical", canonical_r)
        .register("flipped", flipped_r)
        .register("zero", LinearOp::zero);
    reg
}

/// `[RX,RY] - R([RX,Y] + [X,RY]) - [X,Y]`.
pub fn mybe_residual(
    basis: &BasisSpec,
    r: &LinearOp,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<AlgebraElement> {
    let rx = r.apply(x)?;
    let ry = r.apply(y)?;
    let lhs = bracket(basis, &rx, &ry)?;
    let rb = r.apply(&r_bracket(basis, r, x, y)?)?;
    lhs.sub(&rb)?.sub(&bracket(basis, x, y)?)
}

/// `[X,Y]_R = [RX,Y] + [X,RY]`.
pub fn r_bracket(
    basis: &BasisSpec,
    r: &LinearOp,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<AlgebraElement> {
    let a = bracket(basis, &r.apply(x)?, y)?;
    let b = bracket(basis, x, &r.apply(y)?)?;
    a.add(&b)
}

/// `(RX,Y) + (X,RY)`; vanishes for a skew operator.
pub fn skew_defect(
    basis: &BasisSpec,
    r: &LinearOp,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<f64> {
    Ok(inner(basis, &r.apply(x)?, y)? + inner(basis, x, &r.apply(y)?)?)
}

/// A basis together with the Yang-Baxter operator used throughout a model.
#[derive(Clone, Debug)]
pub struct LieContext {
    pub basis: Arc<BasisSpec>,
    pub r: LinearOp,
}

impl LieContext {
    pub fn su(n: usize) -> Result<Self> {
        let basis = build_cartan_weyl(n)?;
        let r = canonical_r(&basis);
        Ok(Self { basis, r })
    }

    pub fn with_r(basis: Arc<BasisSpec>, r: LinearOp) -> Result<Self> {
        if r.basis != basis.id() {
            return Err(Error::BasisMismatch {
                left: basis.n(),
                right: r.basis.n,
            });
        }
        Ok(Self { basis, r })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn apply_r(&self, x: &RVec) -> RVec {
        &self.r.matrix * x
    }

    pub fn apply_r_c(&self, x: &CVec) -> CVec {
        apply_real_to_complex(&self.r.matrix, x)
    }

    /// `(R - i) x` for real `x`.
    pub fn r_minus_i(&self, x: &RVec) -> CVec {
        let rx = self.apply_r(x);
        CVec::from_iterator(
            x.len(),
            rx.iter().zip(x.iter()).map(|(a, b)| Complex64::new(*a, -*b)),
        )
    }
}
