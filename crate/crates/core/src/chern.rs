//! Pointwise Chern-Weil theory for Kähler curvature tensors.
//!
//! For a unitary frame `f_1..f_n` put `eps_a = (f_a - i J f_a) / sqrt(2)` and
//! `Omega_ab(x, y) = R(x, y, eps_a, conj(eps_b))`, extended complex-linearly.
//! The total Chern form is `det(I + (i / 2 pi) Omega)`; its degree-`2k` part
//! is `c_k`, obtained from Newton's identities on the form-valued traces
//! `p_m = tr(A^m)` with `A = (i / 2 pi) Omega`. Entries are even forms, so
//! they commute and the identities hold verbatim.

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::exterior::AlternatingForm;
use crate::space::{orthonormality_defect, HermitianSpace};
use crate::MAX_N;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

const FRAME_TOL: f64 = 1e-10;
const REALITY_TOL: f64 = 1e-12;
/// Denominators below this fraction of the reference `|gamma_J(R0)|` are rejected.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Multi-index `(a_1, ..., a_n)` with `sum_i i a_i = n`, naming `c_1^{a_1} ... c_n^{a_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ChernIndex(Vec<u32>);

impl ChernIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        let n = exponents.len();
        if n == 0 {
            return Err(Error::InvalidIndex("empty multi-index".into()));
        }
        let weight: usize = exponents
            .iter()
            .enumerate()
            .map(|(i, &a)| (i + 1) * a as usize)
            .sum();
        if weight != n {
            return Err(Error::InvalidIndex(format!(
                "sum of i * a_i is {weight}, expected {n}"
            )));
        }
        Ok(Self(exponents))
    }

    /// Parses `a_1,...,a_n`.
    pub fn parse(text: &str) -> Result<Self> {
        let exps = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidIndex(format!("bad exponent {t:?} in {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(exps)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for ChernIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `gamma` with `c_I(R) = gamma * omega^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernDensity {
    pub index: ChernIndex,
    pub gamma: f64,
}

/// All multi-indices for dimension `n`, in descending lexicographic order.
pub fn enumerate_indices(n: usize) -> Vec<ChernIndex> {
    fn fill(pos: usize, remaining: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let n = current.len();
        if pos == n {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let part = pos + 1;
        for a in (0..=remaining / part).rev() {
            current[pos] = a as u32;
            fill(pos + 1, remaining - a * part, current, out);
        }
        current[pos] = 0;
    }
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    fill(0, n, &mut vec![0; n], &mut out);
    out.into_iter().map(ChernIndex).collect()
}

/// A complex-valued form stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexForm {
    pub re: AlternatingForm,
    pub im: AlternatingForm,
}

impl ComplexForm {
    fn zero(dim: usize, degree: usize) -> Self {
        Self {
            re: AlternatingForm::zero(dim, degree),
            im: AlternatingForm::zero(dim, degree),
        }
    }

    fn one(dim: usize) -> Self {
        Self {
            re: AlternatingForm::constant(dim, 1.0),
            im: AlternatingForm::zero(dim, 0),
        }
    }

    pub fn degree(&self) -> usize {
        self.re.degree()
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let re = self.re.wedge(&other.re)?.sub(&self.im.wedge(&other.im)?);
        let im = self.re.wedge(&other.im)?.add(&self.im.wedge(&other.re)?);
        Ok(Self { re, im })
    }

    fn axpy(&mut self, s: f64, other: &Self) {
        self.re.axpy(s, &other.re);
        self.im.axpy(s, &other.im);
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    /// `i * self`.
    fn times_i(&self) -> Self {
        Self {
            re: self.im.scale(-1.0),
            im: self.re.clone(),
        }
    }
}

/// An `n x n` matrix of complex 2-forms (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrixOfForms {
    n: usize,
    entries: Vec<ComplexForm>,
}

impl ComplexMatrixOfForms {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, a: usize, b: usize) -> &ComplexForm {
        &self.entries[a * self.n + b]
    }

    /// `max |M_ab + conj(M_ba)|` over all coefficients.
    pub fn skew_hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                let (x, y) = (self.entry(a, b), self.entry(b, a));
                worst = worst
                    .max(x.re.add(&y.re).max_abs())
                    .max(x.im.sub(&y.im).max_abs());
            }
        }
        worst
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        let n = self.n;
        let dim = self.entries[0].re.dim();
        let degree = self.entries[0].degree() + other.entries[0].degree();
        let mut entries = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut acc = ComplexForm::zero(dim, degree);
                for c in 0..n {
                    acc.axpy(1.0, &self.entry(a, c).wedge(other.entry(c, b))?);
                }
                entries.push(acc);
            }
        }
        Ok(Self { n, entries })
    }

    fn trace(&self) -> ComplexForm {
        let mut acc = ComplexForm::zero(self.entries[0].re.dim(), self.entries[0].degree());
        for a in 0..self.n {
            acc.axpy(1.0, self.entry(a, a));
        }
        acc
    }
}

fn check_frame(space: &HermitianSpace, frame: &[Vec<f64>]) -> Result<()> {
    if frame.len() != space.n() || frame.iter().any(|f| f.len() != space.dim()) {
        return Err(Error::Precondition(format!(
            "a unitary frame has {} vectors of length {}",
            space.n(),
            space.dim()
        )));
    }
    let mut all = Vec::with_capacity(space.dim());
    for f in frame {
        all.push(f.clone());
        all.push(space.apply_j(f));
    }
    let refs: Vec<&[f64]> = all.iter().map(|v| v.as_slice()).collect();
    let defect = orthonormality_defect(&refs);
    if defect > FRAME_TOL {
        return Err(Error::Precondition(format!(
            "frame is not unitary (defect {defect:e})"
        )));
    }
    Ok(())
}

/// The curvature matrix `Omega_ab = R(., ., eps_a, conj(eps_b))` of 2-forms.
pub fn curvature_matrix(r: &CurvatureTensor, frame: &[Vec<f64>]) -> Result<ComplexMatrixOfForms> {
    r.require_certified()?;
    let space = r.space();
    check_frame(space, frame)?;
    let (n, d) = (space.n(), space.dim());
    let jframe: Vec<Vec<f64>> = frame.iter().map(|f| space.apply_j(f)).collect();
    let basis: Vec<Vec<f64>> = (0..d).map(|i| space.basis_vector(i)).collect();
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut omega = ComplexForm::zero(d, 2);
            for i in 0..d {
                for j in (i + 1)..d {
                    let (x, y) = (&basis[i], &basis[j]);
                    let re = 0.5 * (r.eval(x, y, &frame[a], &frame[b]) + r.eval(x, y, &jframe[a], &jframe[b]));
                    let im = 0.5 * (r.eval(x, y, &frame[a], &jframe[b]) - r.eval(x, y, &jframe[a], &frame[b]));
                    omega.re.set(&[i, j], re);
                    omega.im.set(&[i, j], im);
                }
            }
            entries.push(omega);
        }
    }
    Ok(ComplexMatrixOfForms { n, entries })
}

/// `c_0, ..., c_n` of `R` as real forms of degrees `0, 2, ..., 2n`.
pub fn chern_forms(r: &CurvatureTensor, frame: &[Vec<f64>]) -> Result<Vec<AlternatingForm>> {
    let omega = curvature_matrix(r, frame)?;
    let n = omega.size();
    let d = r.dim();
    let a = ComplexMatrixOfForms {
        n,
        entries: omega
            .entries
            .iter()
            .map(|e| e.times_i().scale(1.0 / (2.0 * PI)))
            .collect(),
    };
    // power sums p_m = tr(A^m)
    let mut power_sums = Vec::with_capacity(n);
    let mut power = a.clone();
    for m in 1..=n {
        if m > 1 {
            power = power.mul(&a)?;
        }
        power_sums.push(power.trace());
    }
    // Newton: k s_k = sum_{m=1}^k (-1)^{m-1} s_{k-m} p_m
    let mut sigma = vec![ComplexForm::one(d)];
    for k in 1..=n {
        let mut acc = ComplexForm::zero(d, 2 * k);
        for m in 1..=k {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            acc.axpy(sign, &sigma[k - m].wedge(&power_sums[m - 1])?);
        }
        sigma.push(acc.scale(1.0 / k as f64));
    }
    sigma
        .into_iter()
        .map(|c| {
            let residue = c.im.max_abs();
            if residue > REALITY_TOL * c.re.max_abs().max(1.0) {
                return Err(Error::NonRealForm(residue));
            }
            Ok(c.re)
        })
        .collect()
}

/// The `k`-th Chern form, a real form of degree `2k`.
pub fn chern_form(r: &CurvatureTensor, k: usize, frame: &[Vec<f64>]) -> Result<AlternatingForm> {
    if k > r.n() {
        return Err(Error::DegreeOutOfRange {
            degree: 2 * k,
            dim: r.dim(),
        });
    }
    Ok(chern_forms(r, frame)?.swap_remove(k))
}

fn product_density(
    space: &HermitianSpace,
    forms: &[AlternatingForm],
    index: &ChernIndex,
) -> Result<ChernDensity> {
    if index.n() != space.n() {
        return Err(Error::InvalidIndex(format!(
            "index {index} has length {}, expected {}",
            index.n(),
            space.n()
        )));
    }
    let mut acc = AlternatingForm::constant(space.dim(), 1.0);
    for (k, &a) in index.exponents().iter().enumerate() {
        acc = acc.wedge(&forms[k + 1].power(a as usize)?)?;
    }
    Ok(ChernDensity {
        index: index.clone(),
        gamma: acc.top_coefficient(space)?,
    })
}

/// `gamma_I` with `c_I(R) = gamma_I * omega^n`.
pub fn chern_product(r: &CurvatureTensor, index: &ChernIndex, frame: &[Vec<f64>]) -> Result<ChernDensity> {
    let forms = chern_forms(r, frame)?;
    product_density(r.space(), &forms, index)
}

/// Densities for every index of [`enumerate_indices`], sharing one Chern-form computation.
pub fn chern_densities(r: &CurvatureTensor, frame: &[Vec<f64>]) -> Result<Vec<ChernDensity>> {
    let forms = chern_forms(r, frame)?;
    enumerate_indices(r.n())
        .iter()
        .map(|i| product_density(r.space(), &forms, i))
        .collect()
}

/// Chern-number densities of the complex hyperbolic model, cached per `n`.
#[derive(Debug)]
pub struct ReferenceTable {
    pub n: usize,
    pub densities: Vec<ChernDensity>,
}

impl ReferenceTable {
    pub fn gamma(&self, index: &ChernIndex) -> Option<f64> {
        self.densities
            .iter()
            .find(|d| &d.index == index)
            .map(|d| d.gamma)
    }

    pub fn ratio(&self, i: &ChernIndex, j: &ChernIndex) -> Option<f64> {
        Some(self.gamma(i)? / self.gamma(j)?)
    }
}

pub fn reference_constants(n: usize) -> Result<Arc<ReferenceTable>> {
    static CACHE: [OnceLock<Arc<ReferenceTable>>; MAX_N + 1] = [const { OnceLock::new() }; MAX_N + 1];
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if n > MAX_N {
        return Err(Error::ResourceLimit(format!("reference constants need n <= {MAX_N}")));
    }
    if let Some(t) = CACHE[n].get() {
        return Ok(t.clone());
    }
    let space = HermitianSpace::new(n)?;
    let r0 = CurvatureTensor::r0(&space);
    let table = Arc::new(ReferenceTable {
        n,
        densities: chern_densities(&r0, &space.standard_frame())?,
    });
    Ok(CACHE[n].get_or_init(|| table).clone())
}

fn denominator_floor(j: &ChernIndex) -> f64 {
    reference_constants(j.n())
        .ok()
        .and_then(|t| t.gamma(j))
        .map_or(DENOMINATOR_TOL, |g| DENOMINATOR_TOL * g.abs())
}

/// `gamma_I(R) / gamma_J(R)` in the standard frame.
pub fn chern_ratio(r: &CurvatureTensor, i: &ChernIndex, j: &ChernIndex) -> Result<f64> {
    let forms = chern_forms(r, &r.space().standard_frame())?;
    ratio_from_forms(r.space(), &forms, i, j)
}

pub(crate) fn ratio_from_forms(
    space: &HermitianSpace,
    forms: &[AlternatingForm],
    i: &ChernIndex,
    j: &ChernIndex,
) -> Result<f64> {
    let num = product_density(space, forms, i)?.gamma;
    let den = product_density(space, forms, j)?.gamma;
    if den.abs() < denominator_floor(j) {
        return Err(Error::DegenerateDenominator(den.abs()));
    }
    Ok(num / den)
}

/// All ordered pairs `(I, J)` with `I != J`.
pub fn index_pairs(n: usize) -> Vec<(ChernIndex, ChernIndex)> {
    let all = enumerate_indices(n);
    let mut out = Vec::new();
    for i in &all {
        for j in &all {
            if i != j {
                out.push((i.clone(), j.clone()));
            }
        }
    }
    out
}

/// Ratios for a complex space form: `prod_k C(n+1,k)^{a_k} / prod_k C(n+1,k)^{b_k}`.
pub fn space_form_ratio(i: &ChernIndex, j: &ChernIndex) -> f64 {
    let n = i.n();
    let weight = |idx: &ChernIndex| -> f64 {
        idx.exponents()
            .iter()
            .enumerate()
            .map(|(k, &a)| binomial(n + 1, k + 1).powi(a as i32))
            .product()
    };
    weight(i) / weight(j)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
