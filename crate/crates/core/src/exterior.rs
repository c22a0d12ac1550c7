//! Alternating multilinear forms on `R^dim`.
//!
//! A degree-`k` form is stored as one coefficient per strictly increasing
//! index tuple `i_1 < ... < i_k`, so that
//! `f = sum_I f_I e^{i_1} ^ ... ^ e^{i_k}` and
//! `(e^{i_1} ^ ... ^ e^{i_k})(v_1, ..., v_k) = det[v_r[i_s]]`.
//! Tuples are kept as bitmasks and ordered colexicographically.

use crate::error::{Error, Result};
use crate::space::HermitianSpace;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Colexicographic rank of a bitmask among masks of equal popcount.
fn rank(mask: u32) -> usize {
    let mut r = 0;
    let mut m = mask;
    let mut slot = 0;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        slot += 1;
        r += binomial(i, slot);
        m &= m - 1;
    }
    r
}

/// All `k`-subsets of `0..dim` as bitmasks, in colex order.
fn masks(dim: usize, k: usize) -> Vec<u32> {
    let mut out: Vec<u32> = (0u32..(1u32 << dim))
        .filter(|m| m.count_ones() as usize == k)
        .collect();
    out.sort_by_key(|&m| rank(m));
    out
}

fn mask_of(indices: &[usize]) -> Option<u32> {
    let mut m = 0u32;
    for &i in indices {
        if m & (1 << i) != 0 {
            return None;
        }
        m |= 1 << i;
    }
    Some(m)
}

/// Sign of the permutation sorting `indices` (which must be distinct).
fn sort_sign(indices: &[usize]) -> f64 {
    let mut inversions = 0u32;
    for a in 0..indices.len() {
        for b in (a + 1)..indices.len() {
            if indices[a] > indices[b] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of the shuffle merging disjoint sorted sets `a` and `b`.
fn shuffle_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = a;
    while rest != 0 {
        let i = rest.trailing_zeros();
        // elements of b smaller than i
        inversions += (b & ((1u32 << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl AlternatingForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= 31, "dimension too large for bitmask storage");
        assert!(degree <= dim, "degree exceeds dimension");
        Self {
            dim,
            degree,
            coeffs: vec![0.0; binomial(dim, degree)],
        }
    }

    /// The degree-0 form with value `c`.
    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = Self::zero(dim, 0);
        f.coeffs[0] = c;
        f
    }

    /// The basis covector `e^i`.
    pub fn covector(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim, 1);
        f.coeffs[i] = 1.0;
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients in colex order of the index tuples.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `e^{i_1} ^ ... ^ e^{i_k}` for arbitrary (unsorted) indices.
    pub fn get(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), self.degree);
        match mask_of(indices) {
            Some(m) => sort_sign(indices) * self.coeffs[rank(m)],
            None => 0.0,
        }
    }

    /// Sets the coefficient so that `get(indices) == value`.
    pub fn set(&mut self, indices: &[usize], value: f64) {
        assert_eq!(indices.len(), self.degree);
        let m = mask_of(indices).expect("repeated index in alternating form");
        self.coeffs[rank(m)] = sort_sign(indices) * value;
    }

    pub fn add_to(&mut self, indices: &[usize], value: f64) {
        let cur = self.get(indices);
        self.set(indices, cur + value);
    }

    /// Evaluates the form on `degree` vectors.
    pub fn eval(&self, vectors: &[&[f64]]) -> f64 {
        assert_eq!(vectors.len(), self.degree);
        if self.degree == 0 {
            return self.coeffs[0];
        }
        let k = self.degree;
        masks(self.dim, k)
            .into_iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| {
                let rows: Vec<usize> = (0..self.dim).filter(|i| m & (1 << i) != 0).collect();
                let minor = DMatrix::from_fn(k, k, |r, s| vectors[s][rows[r]]);
                c * minor.determinant()
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "forms on different spaces");
        assert_eq!(self.degree, other.degree, "forms of different degree");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        self.check_same_shape(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::SpaceMismatch(self.dim / 2, other.dim / 2));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(Error::DegreeOutOfRange {
                degree,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim, degree);
        let left = masks(self.dim, self.degree);
        let right = masks(self.dim, other.degree);
        for (&a, &ca) in left.iter().zip(&self.coeffs) {
            if ca == 0.0 {
                continue;
            }
            for (&b, &cb) in right.iter().zip(&other.coeffs) {
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                out.coeffs[rank(a | b)] += shuffle_sign(a, b) * ca * cb;
            }
        }
        Ok(out)
    }

    /// `m`-fold wedge power; `power(f, 0)` is the constant 1.
    pub fn power(&self, m: usize) -> Result<Self> {
        let degree = m * self.degree;
        if degree > self.dim {
            return Err(Error::DegreeOutOfRange {
                degree,
                dim: self.dim,
            });
        }
        let mut acc = Self::constant(self.dim, 1.0);
        for _ in 0..m {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// The coefficient `gamma` with `self = gamma * omega^n`, for a top-degree form.
    pub fn top_coefficient(&self, space: &HermitianSpace) -> Result<f64> {
        if self.dim != space.dim() {
            return Err(Error::SpaceMismatch(self.dim / 2, space.n()));
        }
        if self.degree != self.dim {
            return Err(Error::WrongDegree {
                expected: self.dim,
                got: self.degree,
            });
        }
        let volume = space.kahler_form().power(space.n())?;
        Ok(self.coeffs[0] / volume.coeffs[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_form(dim: usize, degree: usize, seed: u64) -> AlternatingForm {
        let mut r = rng::rng(seed);
        let mut f = AlternatingForm::zero(dim, degree);
        f.coeffs = rng::gaussian_vec(&mut r, f.coeffs.len());
        f
    }

    /// Direct antisymmetrization: `(f ^ g)(v_1..v_{p+q}) =
    /// 1/(p! q!) sum_sigma sgn(sigma) f(v_sigma..) g(v_sigma..)`.
    fn brute_wedge_eval(f: &AlternatingForm, g: &AlternatingForm, vs: &[&[f64]]) -> f64 {
        let k = vs.len();
        let mut total = 0.0;
        for perm in permutations(k) {
            let sign = sort_sign(&perm);
            let left: Vec<&[f64]> = perm[..f.degree].iter().map(|&i| vs[i]).collect();
            let right: Vec<&[f64]> = perm[f.degree..].iter().map(|&i| vs[i]).collect();
            total += sign * f.eval(&left) * g.eval(&right);
        }
        total / (factorial(f.degree) * factorial(g.degree))
    }

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn rank_is_bijective() {
        for dim in 1..=8 {
            for k in 0..=dim {
                let ms = masks(dim, k);
                assert_eq!(ms.len(), binomial(dim, k));
                for (i, &m) in ms.iter().enumerate() {
                    assert_eq!(rank(m), i);
                }
            }
        }
    }

    #[test]
    fn covectors_pair_with_basis() {
        let e1 = AlternatingForm::covector(4, 0);
        let e2 = AlternatingForm::covector(4, 1);
        let w = e1.wedge(&e2).unwrap();
        let (a, b) = ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(w.eval(&[&a, &b]), 1.0);
        assert_eq!(w.eval(&[&b, &a]), -1.0);
        assert_eq!(w.eval(&[&a, &a]), 0.0);
    }

    #[test]
    fn odd_forms_square_to_zero() {
        for seed in 0..5 {
            let f = random_form(6, 1, seed);
            assert!(f.wedge(&f).unwrap().max_abs() < 1e-14);
            let g = random_form(6, 3, seed);
            assert!(g.wedge(&g).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn graded_commutativity() {
        for (p, q) in [(1, 2), (2, 2), (1, 3), (3, 3)] {
            let f = random_form(6, p, 3);
            let g = random_form(6, q, 4);
            let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
            let diff = f.wedge(&g).unwrap().sub(&g.wedge(&f).unwrap().scale(sign));
            assert!(diff.max_abs() < 1e-12);
        }
    }

    #[test]
    fn omega_squared_matches_brute_force() {
        let s = HermitianSpace::new(2).unwrap();
        let w = s.kahler_form();
        let w2 = w.wedge(&w).unwrap();
        let basis: Vec<Vec<f64>> = (0..4).map(|i| s.basis_vector(i)).collect();
        let vs: Vec<&[f64]> = basis.iter().map(|v| v.as_slice()).collect();
        let brute = brute_wedge_eval(&w, &w, &vs);
        assert!((w2.eval(&vs) - brute).abs() < 1e-14);
        // omega = -(e^01 + e^23), so omega^2 = 2 e^0123
        assert!((brute - 2.0).abs() < 1e-14);
        assert_eq!(w2.get(&[0, 1, 2, 3]), 2.0);
    }

    #[test]
    fn wedge_agrees_with_antisymmetrization_on_all_basis_tuples() {
        for n in 1..=3 {
            let dim = 2 * n;
            for p in 1..dim {
                for q in 1..=(dim - p) {
                    let f = random_form(dim, p, (10 * p + q) as u64);
                    let g = random_form(dim, q, (100 + 10 * p + q) as u64);
                    let fg = f.wedge(&g).unwrap();
                    let basis: Vec<Vec<f64>> = (0..dim)
                        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect();
                    for m in masks(dim, p + q) {
                        let vs: Vec<&[f64]> = (0..dim)
                            .filter(|i| m & (1 << i) != 0)
                            .map(|i| basis[i].as_slice())
                            .collect();
                        let brute = brute_wedge_eval(&f, &g, &vs);
                        assert!((fg.eval(&vs) - brute).abs() < 1e-11, "n={n} p={p} q={q}");
                    }
                }
            }
        }
    }

    #[test]
    fn wedge_is_associative() {
        for seed in 0..4 {
            let f = random_form(8, 2, seed);
            let g = random_form(8, 3, seed + 10);
            let h = random_form(8, 2, seed + 20);
            let left = f.wedge(&g).unwrap().wedge(&h).unwrap();
            let right = f.wedge(&g.wedge(&h).unwrap()).unwrap();
            assert!(left.sub(&right).max_abs() < 1e-12);
        }
    }

    #[test]
    fn degree_overflow_is_an_error() {
        let f = random_form(4, 3, 1);
        assert!(matches!(
            f.wedge(&f),
            Err(Error::DegreeOutOfRange { degree: 6, dim: 4 })
        ));
    }

    #[test]
    fn powers_of_omega() {
        for n in 1..=3 {
            let s = HermitianSpace::new(n).unwrap();
            let w = s.kahler_form();
            assert_eq!(w.power(1).unwrap(), w);
            let top = w.power(n).unwrap();
            assert!(top.max_abs() > 0.0);
            assert!(matches!(w.power(n + 1), Err(Error::DegreeOutOfRange { .. })));
        }
    }

    #[test]
    fn top_coefficient_normalization() {
        let s = HermitianSpace::new(3).unwrap();
        let top = s.kahler_form().power(3).unwrap();
        assert_eq!(top.top_coefficient(&s).unwrap(), 1.0);
        assert_eq!(AlternatingForm::zero(6, 6).top_coefficient(&s).unwrap(), 0.0);
        assert!((top.scale(2.5).top_coefficient(&s).unwrap() - 2.5).abs() < 1e-15);
        assert!(matches!(
            s.kahler_form().top_coefficient(&s),
            Err(Error::WrongDegree { expected: 6, got: 2 })
        ));
    }

    #[test]
    fn ratios_do_not_depend_on_reference_scale() {
        let s = HermitianSpace::new(2).unwrap();
        let a = random_form(4, 4, 1);
        let b = random_form(4, 4, 2);
        let ratio = a.top_coefficient(&s).unwrap() / b.top_coefficient(&s).unwrap();
        // dividing by omega^n / n! instead of omega^n rescales both coefficients
        let vol = s.kahler_form().power(2).unwrap().scale(0.5);
        let alt = a.coefficients()[0] / vol.coefficients()[0]
            / (b.coefficients()[0] / vol.coefficients()[0]);
        assert!((ratio - alt).abs() < 1e-14);
    }
}
