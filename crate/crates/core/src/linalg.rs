//! Dense complex matrix/vector kernel.
//!
//! Thin layer over `nalgebra` dense types with the handful of operations the
//! rest of the crate needs at controlled tolerances. Frobenius norm is the
//! canonical matrix norm throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Absolute/relative tolerance pair for identity checks on unit-normalized
/// data. Defaults: `abs_eps = 1e-10`, `rel_eps = 1e-8`; all identities of
/// interest are polynomial of low degree in the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs_eps: 1e-10, rel_eps: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> Result<Self> {
        if !(abs_eps > 0.0) || !(rel_eps >= 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "tolerance must satisfy abs_eps > 0, rel_eps >= 0 (got {abs_eps}, {rel_eps})"
            )));
        }
        Ok(Tolerance { abs_eps, rel_eps })
    }

    /// Scale-aware comparison bound for a quantity of magnitude `scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs_eps + self.rel_eps * scale.abs()
    }
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// `ab - ba` for square matrices of equal size.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "commutator needs equal square matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b - b * a)
}

/// Split `m = H + S` with `H` Hermitian and `S` skew-Hermitian.
pub fn herm_skew_split(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "herm_skew_split needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let adj = m.adjoint();
    let h = (m + &adj).scale(0.5);
    let s = (m - &adj).scale(0.5);
    Ok((h, s))
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fro_norm_vec(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Nilpotency test: true iff the k-th power of the Frobenius-normalized
/// matrix has norm at most `abs_eps` (k = size). Avoids eigenvalue
/// computation and is insensitive to overall scale.
pub fn is_nilpotent(m: &CMatrix, tol: Tolerance) -> bool {
    let k = m.nrows();
    debug_assert_eq!(k, m.ncols());
    if k == 0 {
        return true;
    }
    let norm = fro_norm(m);
    if norm <= tol.abs_eps {
        return true;
    }
    let unit = m.scale(1.0 / norm);
    let mut power = unit.clone();
    for _ in 1..k {
        power = &power * &unit;
    }
    fro_norm(&power) <= tol.abs_eps
}

/// A Hermitian inner product on complex vectors. `None` is the standard
/// form `<u, v> = sum u_i conj(v_i)`; `Some(g)` weights by a real symmetric
/// positive-definite matrix: `<u, v> = u^T g conj(v)`.
#[derive(Clone, Copy)]
pub struct HermitianForm<'a> {
    weight: Option<&'a RMatrix>,
}

impl<'a> HermitianForm<'a> {
    pub fn standard() -> Self {
        HermitianForm { weight: None }
    }

    pub fn weighted(g: &'a RMatrix) -> Self {
        HermitianForm { weight: Some(g) }
    }

    pub fn pair(&self, u: &CVector, v: &CVector) -> Complex64 {
        match self.weight {
            None => u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum(),
            Some(g) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..g.nrows() {
                    for b in 0..g.ncols() {
                        acc += u[a] * g[(a, b)] * v[b].conj();
                    }
                }
                acc
            }
        }
    }

    pub fn norm(&self, u: &CVector) -> f64 {
        self.pair(u, u).re.max(0.0).sqrt()
    }
}

/// Gram-Schmidt with respect to a Hermitian form. Deterministic given the
/// input order; the first output is the normalized first input. Signals
/// `DegenerateInput` when a projection residual falls below `abs_eps`.
pub fn gram_schmidt_unitary(
    vectors: &[CVector],
    inner: HermitianForm<'_>,
    tol: Tolerance,
) -> Result<Vec<CVector>> {
    let mut out: Vec<CVector> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        let mut r = v.clone();
        // Two passes of re-orthogonalization keep the Gram matrix at 1e-15.
        for _ in 0..2 {
            for q in &out {
                let c = inner.pair(&r, q);
                r -= q.scale_complex(c);
            }
        }
        let norm = inner.norm(&r);
        if norm <= tol.abs_eps {
            return Err(Error::DegenerateInput(format!(
                "gram_schmidt_unitary: vector {idx} is dependent (residual {norm:.3e})"
            )));
        }
        out.push(r.unscale(norm));
    }
    Ok(out)
}

/// `H = L L^*` for a lower-triangular `L` with positive real diagonal.
pub fn hpd_from_factor(l: &CMatrix) -> Result<CMatrix> {
    let n = l.nrows();
    if n != l.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "hpd_from_factor needs a square factor, got {}x{}",
            n,
            l.ncols()
        )));
    }
    for i in 0..n {
        let d = l[(i, i)];
        if d.im != 0.0 || !(d.re > 0.0) {
            return Err(Error::InvalidFactor(format!(
                "diagonal entry {i} must be real positive, got {d}"
            )));
        }
        for j in (i + 1)..n {
            if l[(i, j)].norm() != 0.0 {
                return Err(Error::InvalidFactor(format!(
                    "entry ({i},{j}) above the diagonal must be zero"
                )));
            }
        }
    }
    Ok(l * l.adjoint())
}

/// Solve `a x = b` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::DegenerateInput("singular linear system".into()))
}

/// Least-squares solution of `a x = b` through the normal equations with a
/// tiny Tikhonov shift; adequate for the small well-scaled systems here.
pub fn lstsq(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let ah = a.adjoint();
    let mut g = &ah * a;
    let shift = 1e-14 * (fro_norm(&g) + 1.0);
    for i in 0..g.nrows() {
        g[(i, i)] += Complex64::new(shift, 0.0);
    }
    let rhs = &ah * b;
    g.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateInput("least-squares normal system is singular".into()))
}

/// Project `x0` onto the kernel of `m` (minimal-change correction):
/// `x0 - M^* (M M^*)^{-1} M x0`, iterated once more to clean up roundoff.
pub fn project_to_kernel(m: &CMatrix, x0: &CVector) -> Result<CVector> {
    let mh = m.adjoint();
    let mut gram = m * &mh;
    let shift = 1e-13 * (fro_norm(&gram) + 1.0);
    for i in 0..gram.nrows() {
        gram[(i, i)] += Complex64::new(shift, 0.0);
    }
    let lu = gram.lu();
    let mut x = x0.clone();
    for _ in 0..2 {
        let rhs = m * &x;
        let lam = lu
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateInput("kernel projection system is singular".into()))?;
        x -= &mh * lam;
    }
    Ok(x)
}

/// Orthonormal basis of the column span of `m`, with deterministic pivoting:
/// highest residual column first, ties to the lowest index.
pub fn column_span_basis(m: &CMatrix, tol: Tolerance) -> Vec<CVector> {
    let form = HermitianForm::standard();
    let mut basis: Vec<CVector> = Vec::new();
    let cols: Vec<CVector> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    let scale: f64 = cols.iter().map(|c| form.norm(c)).fold(0.0, f64::max);
    if scale == 0.0 {
        return basis;
    }
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in cols.iter().enumerate() {
            let mut r = c.clone();
            for q in &basis {
                let cf = form.pair(&r, q);
                r -= q.scale_complex(cf);
            }
            let norm = form.norm(&r);
            if best.map(|(_, bn)| norm > bn + 1e-15).unwrap_or(true) && norm > tol.bound(scale) {
                best = Some((j, norm));
            }
        }
        match best {
            None => break,
            Some((j, _)) => {
                let mut r = cols[j].clone();
                for _ in 0..2 {
                    for q in &basis {
                        let cf = form.pair(&r, q);
                        r -= q.scale_complex(cf);
                    }
                }
                let norm = form.norm(&r);
                basis.push(r.unscale(norm));
            }
        }
    }
    basis
}

pub(crate) trait ScaleComplex {
    fn scale_complex(&self, c: Complex64) -> Self;
}

impl ScaleComplex for CVector {
    fn scale_complex(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }
}

pub fn cmat_from_rows(rows: &[Vec<Complex64>]) -> CMatrix {
    let nr = rows.len();
    let nc = if nr == 0 { 0 } else { rows[0].len() };
    CMatrix::from_fn(nr, nc, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Characteristic polynomial coefficients by Leverrier-Faddeev; the
    /// independent nilpotency oracle (all coefficients except the leading
    /// one must vanish).
    fn leverrier_coeffs(m: &CMatrix) -> Vec<Complex64> {
        let n = m.nrows();
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        let mut aux = CMatrix::zeros(n, n);
        for k in 1..=n {
            aux = m * aux;
            for i in 0..n {
                aux[(i, i)] += coeffs[k - 1];
            }
            let prod = m * &aux;
            let trace: Complex64 = (0..n).map(|i| prod[(i, i)]).sum();
            coeffs.push(-trace / Complex64::new(k as f64, 0.0));
        }
        coeffs
    }

    fn nilpotent_by_charpoly(m: &CMatrix, tol: f64) -> bool {
        let scale = fro_norm(m).max(1.0);
        let unit = m.scale(1.0 / scale);
        leverrier_coeffs(&unit).iter().skip(1).all(|c| c.norm() <= tol)
    }

    #[test]
    fn adjoint_examples() {
        let m = cmat_from_rows(&[vec![c(0.0, 1.0)]]);
        assert_eq!(adjoint(&m)[(0, 0)], c(0.0, -1.0));

        let id = CMatrix::identity(3, 3);
        assert_eq!(adjoint(&id), id);

        let m = cmat_from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        let expect =
            cmat_from_rows(&[vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        assert_eq!(adjoint(&m), expect);
    }

    #[test]
    fn commutator_examples() {
        let b = cmat_from_rows(&[vec![c(2.0, 1.0), c(0.5, 0.0)], vec![c(0.0, 3.0), c(1.0, 1.0)]]);
        let id = CMatrix::identity(2, 2);
        assert_eq!(fro_norm(&commutator(&id, &b).unwrap()), 0.0);
        assert_eq!(fro_norm(&commutator(&b, &b).unwrap()), 0.0);

        // [[0,1],[0,0]] and [[1,0],[0,-1]]: expected value frozen from the
        // entrywise product oracle below.
        let a = cmat_from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        let d = cmat_from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]);
        let got = commutator(&a, &d).unwrap();
        let mut oracle = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c(0.0, 0.0);
                for k in 0..2 {
                    acc += a[(i, k)] * d[(k, j)] - d[(i, k)] * a[(k, j)];
                }
                oracle[(i, j)] = acc;
            }
        }
        assert_eq!(got, oracle);
        assert_eq!(got[(0, 1)], c(-2.0, 0.0));

        assert!(commutator(&a, &CMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn herm_skew_examples() {
        let h = cmat_from_rows(&[vec![c(1.0, 0.0), c(0.5, 0.5)], vec![c(0.5, -0.5), c(2.0, 0.0)]]);
        let (hh, hs) = herm_skew_split(&h).unwrap();
        assert!(fro_norm(&(&hh - &h)) < 1e-15);
        assert!(fro_norm(&hs) < 1e-15);

        let s = cmat_from_rows(&[vec![c(0.0, 1.0), c(0.5, 0.5)], vec![c(-0.5, 0.5), c(0.0, 2.0)]]);
        let (sh, ss) = herm_skew_split(&s).unwrap();
        assert!(fro_norm(&sh) < 1e-15);
        assert!(fro_norm(&(&ss - &s)) < 1e-15);

        let m = cmat_from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        let (h, s) = herm_skew_split(&m).unwrap();
        assert_eq!(h[(0, 1)], c(0.5, 0.0));
        assert_eq!(h[(1, 0)], c(0.5, 0.0));
        assert_eq!(s[(0, 1)], c(0.5, 0.0));
        assert_eq!(s[(1, 0)], c(-0.5, 0.0));
        assert!(fro_norm(&(&h + &s - &m)) < 1e-15);
    }

    #[test]
    fn nilpotent_examples() {
        let tol = Tolerance::default();
        let strict = cmat_from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 1.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(is_nilpotent(&strict, tol));
        assert!(!is_nilpotent(&CMatrix::identity(4, 4), tol));

        // a^2 + bc = 0 forces trace and determinant zero.
        let (a, b) = (1.0, 2.0);
        let m = cmat_from_rows(&[
            vec![c(a, 0.0), c(b, 0.0)],
            vec![c(-a * a / b, 0.0), c(-a, 0.0)],
        ]);
        assert!(is_nilpotent(&m, tol));
    }

    #[test]
    fn nilpotent_agrees_with_charpoly_oracle() {
        let mut rng = SeededRng::new(07230);
        let tol = Tolerance::default();
        for n in 2..=6usize {
            for rep in 0..40 {
                let mut m = CMatrix::from_fn(n, n, |_, _| {
                    c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0))
                });
                if rep % 3 == 0 {
                    // zero out the lower triangle and diagonal: nilpotent
                    for i in 0..n {
                        for j in 0..=i {
                            m[(i, j)] = c(0.0, 0.0);
                        }
                    }
                    // hide the flag under a random unitary similarity
                    let q = random_unitary(&mut rng, n);
                    m = &q * m * q.adjoint();
                }
                assert_eq!(
                    is_nilpotent(&m, tol),
                    nilpotent_by_charpoly(&m, 1e-8),
                    "disagreement at n={n} rep={rep}"
                );
            }
        }
    }

    fn random_unitary(rng: &mut SeededRng, n: usize) -> CMatrix {
        let cols: Vec<CVector> = (0..n)
            .map(|_| CVector::from_fn(n, |_, _| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0))))
            .collect();
        let ortho =
            gram_schmidt_unitary(&cols, HermitianForm::standard(), Tolerance::default()).unwrap();
        CMatrix::from_columns(&ortho)
    }

    #[test]
    fn gram_schmidt_examples() {
        let tol = Tolerance::default();
        let form = HermitianForm::standard();
        let e0 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let out = gram_schmidt_unitary(&[e0.clone(), e1.clone()], form, tol).unwrap();
        assert!(fro_norm_vec(&(&out[0] - &e0)) < 1e-15);
        assert!(fro_norm_vec(&(&out[1] - &e1)) < 1e-15);

        let v = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let out = gram_schmidt_unitary(&[e0.clone(), v], form, tol).unwrap();
        assert!(fro_norm_vec(&(&out[1] - &e1)) < 1e-14);

        // random 4-vector set: Gram matrix is the identity within 1e-12
        let mut rng = SeededRng::new(41);
        let vs: Vec<CVector> = (0..4)
            .map(|_| CVector::from_fn(4, |_, _| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0))))
            .collect();
        let out = gram_schmidt_unitary(&vs, form, tol).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g = form.pair(&out[i], &out[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-12);
            }
        }

        // dependent set signals DegenerateInput
        let dup = vec![e0.clone(), e0.scale_complex(c(2.0, 1.0))];
        assert!(gram_schmidt_unitary(&dup, form, tol).is_err());
    }

    #[test]
    fn hpd_factor_examples() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(hpd_from_factor(&id).unwrap(), id);

        let l = cmat_from_rows(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(3.0, 0.0)]]);
        let h = hpd_from_factor(&l).unwrap();
        assert_eq!(h[(0, 0)], c(4.0, 0.0));
        assert_eq!(h[(1, 1)], c(9.0, 0.0));

        let bad = cmat_from_rows(&[vec![c(-1.0, 0.0)]]);
        assert!(matches!(hpd_from_factor(&bad), Err(Error::InvalidFactor(_))));

        // random valid factor: H Hermitian and x* H x > 0 on sampled x
        let mut rng = SeededRng::new(99);
        let n = 4;
        let mut l = CMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = c(rng.range(0.3, 2.0), 0.0);
            for j in 0..i {
                l[(i, j)] = c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
            }
        }
        let h = hpd_from_factor(&l).unwrap();
        assert!(fro_norm(&(h.adjoint() - &h)) < 1e-13);
        for _ in 0..100 {
            let x = CVector::from_fn(n, |_, _| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)));
            if fro_norm_vec(&x) < 1e-6 {
                continue;
            }
            let q = HermitianForm::standard().pair(&(&h * &x), &x);
            assert!(q.re > 0.0 && q.im.abs() < 1e-12 * q.re.max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn adjoint_involution(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = SeededRng::new(seed);
            let m = CMatrix::from_fn(n, n, |_, _| c(rng.range(-5.0, 5.0), rng.range(-5.0, 5.0)));
            prop_assert_eq!(adjoint(&adjoint(&m)), m);
        }

        #[test]
        fn commutator_antisymmetry(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = SeededRng::new(seed.wrapping_add(7));
            let a = CMatrix::from_fn(n, n, |_, _| c(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)));
            let b = CMatrix::from_fn(n, n, |_, _| c(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)));
            let ab = commutator(&a, &b).unwrap();
            let ba = commutator(&b, &a).unwrap();
            prop_assert!(fro_norm(&(ab + ba)) < 1e-12);
        }

        #[test]
        fn herm_skew_reassembles(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = SeededRng::new(seed.wrapping_add(13));
            let m = CMatrix::from_fn(n, n, |_, _| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)));
            let (h, s) = herm_skew_split(&m).unwrap();
            prop_assert!(fro_norm(&(h.adjoint() - &h)) < 1e-14);
            prop_assert!(fro_norm(&(s.adjoint() + &s)) < 1e-14);
            prop_assert!(fro_norm(&(&h + &s - &m)) < 1e-14);
        }
    }
}
