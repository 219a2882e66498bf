//! Real Lie algebras given by structure constants, plus the subspace
//! lattice operations the frame machinery needs.
//!
//! Structure constants are stored dense (dimensions stay below ~20 at desk
//! scale) with antisymmetry enforced at construction. Subspace bases are
//! kept orthonormal for the standard inner product, built with
//! deterministic pivoting: at each step the candidate with the largest
//! residual norm wins, ties go to the lowest index.

use nalgebra::Complex;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CVector, RMatrix, RVector, Tolerance};

/// Residual threshold for span-membership decisions: `1e-9 * (1 + |v|)`.
pub const SPAN_EPS: f64 = 1e-9;

/// A real Lie algebra of dimension `dim` with bracket coefficients
/// `[u_i, u_j] = sum_k f^k_{ij} u_k` (indices 0-based internally).
#[derive(Debug, Clone, PartialEq)]
pub struct RealLieAlgebra {
    dim: usize,
    /// f[k][i][j] flattened; antisymmetric in (i, j) by construction.
    f: Vec<f64>,
}

impl RealLieAlgebra {
    pub fn abelian(dim: usize) -> Self {
        RealLieAlgebra { dim, f: vec![0.0; dim * dim * dim] }
    }

    /// Build from entries `(k, i, j, value)` meaning `f^k_{ij} = value`;
    /// the transposed coefficient is filled with the opposite sign.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut alg = Self::abelian(dim);
        for &(k, i, j, v) in entries {
            alg.set_f(k, i, j, v)?;
        }
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    pub fn f(&self, k: usize, i: usize, j: usize) -> f64 {
        self.f[self.idx(k, i, j)]
    }

    pub fn set_f(&mut self, k: usize, i: usize, j: usize, v: f64) -> Result<()> {
        if k >= self.dim || i >= self.dim || j >= self.dim {
            return Err(Error::DimensionMismatch(format!(
                "structure constant index ({k},{i},{j}) out of range for dim {}",
                self.dim
            )));
        }
        if i == j {
            if v != 0.0 {
                return Err(Error::PreconditionViolated(
                    "antisymmetry forces f^k_{ii} = 0".into(),
                ));
            }
            return Ok(());
        }
        let a = self.idx(k, i, j);
        let b = self.idx(k, j, i);
        self.f[a] = v;
        self.f[b] = -v;
        Ok(())
    }

    /// Nonzero entries with `i < j`, sorted, for serialization.
    pub fn entries_upper(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in 0..self.dim {
                    let v = self.f(k, i, j);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn bracket(&self, x: &RVector, y: &RVector) -> Result<RVector> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "bracket arguments must have length {}, got {} and {}",
                self.dim,
                x.len(),
                y.len()
            )));
        }
        let mut z = RVector::zeros(self.dim);
        for i in 0..self.dim {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                let yj = y[j];
                if yj == 0.0 {
                    continue;
                }
                let w = xi * yj;
                for k in 0..self.dim {
                    z[k] += self.f(k, i, j) * w;
                }
            }
        }
        Ok(z)
    }

    /// Bracket of basis vectors `u_i, u_j`.
    pub fn bracket_basis(&self, i: usize, j: usize) -> RVector {
        RVector::from_fn(self.dim, |k, _| self.f(k, i, j))
    }

    /// Complex-bilinear extension of the bracket to the complexified algebra.
    pub fn bracket_complex(&self, x: &CVector, y: &CVector) -> CVector {
        let mut z = CVector::from_element(self.dim, Complex64::new(0.0, 0.0));
        for i in 0..self.dim {
            let xi = x[i];
            if xi.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                let yj = y[j];
                if yj.norm_sqr() == 0.0 {
                    continue;
                }
                let w = xi * yj;
                for k in 0..self.dim {
                    let f = self.f(k, i, j);
                    if f != 0.0 {
                        z[k] += Complex::new(f, 0.0) * w;
                    }
                }
            }
        }
        z
    }

    /// Max over basis triples of the Jacobi cyclic-sum norm.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let bij = self.bracket_basis(i, j);
                for k in (j + 1)..n {
                    let bjk = self.bracket_basis(j, k);
                    let bki = self.bracket_basis(k, i);
                    let uk = RVector::from_fn(n, |t, _| if t == k { 1.0 } else { 0.0 });
                    let ui = RVector::from_fn(n, |t, _| if t == i { 1.0 } else { 0.0 });
                    let uj = RVector::from_fn(n, |t, _| if t == j { 1.0 } else { 0.0 });
                    let s = self.bracket(&bij, &uk).unwrap()
                        + self.bracket(&bjk, &ui).unwrap()
                        + self.bracket(&bki, &uj).unwrap();
                    worst = worst.max(s.norm());
                }
            }
        }
        worst
    }

    /// Unimodularity: `trace(ad_{u_i}) = 0` for every basis vector.
    pub fn is_unimodular(&self, tol: Tolerance) -> bool {
        let scale = self.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.dim).all(|i| {
            let tr: f64 = (0..self.dim).map(|k| self.f(k, i, k)).sum();
            tr.abs() <= tol.bound(scale)
        })
    }

    pub fn is_ideal(&self, s: &Subspace, tol: Tolerance) -> Result<bool> {
        if s.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch(
                "subspace ambient dimension differs from algebra dimension".into(),
            ));
        }
        for i in 0..self.dim {
            let ui = RVector::from_fn(self.dim, |t, _| if t == i { 1.0 } else { 0.0 });
            for b in s.basis() {
                let z = self.bracket(&ui, b)?;
                if !s.contains_with(&z, tol) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn is_abelian_on(&self, s: &Subspace, tol: Tolerance) -> Result<bool> {
        if s.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch(
                "subspace ambient dimension differs from algebra dimension".into(),
            ));
        }
        let scale = self.f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, x) in s.basis().iter().enumerate() {
            for y in s.basis().iter().skip(a + 1) {
                if self.bracket(x, y)?.norm() > tol.bound(scale) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Span of all brackets of basis pairs.
    pub fn derived_algebra(&self) -> Subspace {
        let mut gens = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                gens.push(self.bracket_basis(i, j));
            }
        }
        Subspace::from_spanning(self.dim, &gens)
    }
}

/// A linear subspace with an orthonormal stored basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<RVector>,
}

/// Pivoted Gram-Schmidt: append to `basis` from `candidates`, largest
/// residual first, stopping when every remaining residual is below the
/// span threshold.
fn extend_pivoted(basis: &mut Vec<RVector>, candidates: &[RVector]) {
    let mut used = vec![false; candidates.len()];
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (idx, v) in candidates.iter().enumerate() {
            if used[idx] {
                continue;
            }
            let mut r = v.clone();
            for q in basis.iter() {
                let c = r.dot(q);
                r -= q * c;
            }
            let norm = r.norm();
            if norm <= SPAN_EPS * (1.0 + v.norm()) {
                continue;
            }
            if best.map(|(_, bn)| norm > bn + 1e-14 * (1.0 + bn)).unwrap_or(true) {
                best = Some((idx, norm));
            }
        }
        let Some((idx, _)) = best else { break };
        used[idx] = true;
        let mut r = candidates[idx].clone();
        for _ in 0..2 {
            for q in basis.iter() {
                let c = r.dot(q);
                r -= q * c;
            }
        }
        let norm = r.norm();
        basis.push(r.unscale(norm));
    }
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let basis =
            (0..ambient).map(|i| RVector::from_fn(ambient, |t, _| if t == i { 1.0 } else { 0.0 }));
        Subspace { ambient, basis: basis.collect() }
    }

    /// Orthonormal span of the given vectors (rank-revealing, deterministic).
    pub fn from_spanning(ambient: usize, vectors: &[RVector]) -> Self {
        let mut basis = Vec::new();
        extend_pivoted(&mut basis, vectors);
        Subspace { ambient, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[RVector] {
        &self.basis
    }

    pub fn project(&self, v: &RVector) -> RVector {
        let mut p = RVector::zeros(self.ambient);
        for q in &self.basis {
            p += q * v.dot(q);
        }
        p
    }

    pub fn residual(&self, v: &RVector) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &RVector) -> bool {
        self.contains_with(v, Tolerance { abs_eps: SPAN_EPS, rel_eps: SPAN_EPS })
    }

    pub fn contains_with(&self, v: &RVector, tol: Tolerance) -> bool {
        self.residual(v) <= tol.abs_eps * (1.0 + v.norm()).max(tol.rel_eps * (1.0 + v.norm()))
    }

    /// Image under a linear map given by its matrix.
    pub fn map(&self, m: &RMatrix) -> Subspace {
        let imgs: Vec<RVector> = self.basis.iter().map(|b| m * b).collect();
        Subspace::from_spanning(self.ambient, &imgs)
    }

    /// Orthogonal complement in the ambient space (standard inner product).
    pub fn complement(&self) -> Subspace {
        let mut basis = self.basis.clone();
        let std: Vec<RVector> = (0..self.ambient)
            .map(|i| RVector::from_fn(self.ambient, |t, _| if t == i { 1.0 } else { 0.0 }))
            .collect();
        extend_pivoted(&mut basis, &std);
        Subspace { ambient: self.ambient, basis: basis.split_off(self.basis.len()) }
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let mut basis = self.basis.clone();
        extend_pivoted(&mut basis, &other.basis);
        Ok(Subspace { ambient: self.ambient, basis })
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        Ok(self.complement().sum(&other.complement())?.complement())
    }

    /// `{ v in self : metric(v, w) = 0 for all w in other }`.
    ///
    /// Metric-orthogonality to `other` is standard orthogonality to
    /// `metric * other`, so the lattice machinery applies unchanged.
    pub fn ortho_complement_in(&self, other: &Subspace, metric: &RMatrix) -> Result<Subspace> {
        self.check_ambient(other)?;
        let weighted: Vec<RVector> = other.basis.iter().map(|b| metric * b).collect();
        let w = Subspace::from_spanning(self.ambient, &weighted);
        self.intersect(&w.complement())
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "subspace ambient dims differ: {} vs {}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }

    /// Same span test (mutual containment of bases).
    pub fn same_span(&self, other: &Subspace) -> bool {
        self.dim() == other.dim()
            && other.basis.iter().all(|b| self.contains(b))
            && self.basis.iter().all(|b| other.contains(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn heisenberg_like(dim: usize) -> RealLieAlgebra {
        // [u_0, u_1] = u_2
        RealLieAlgebra::from_entries(dim, &[(2, 0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let g = heisenberg_like(4);
        let x = RVector::from_vec(vec![0.3, -1.2, 0.7, 2.0]);
        let z = g.bracket(&x, &x).unwrap();
        assert!(z.norm() < 1e-15);

        let ab = RealLieAlgebra::abelian(4);
        let y = RVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert!(ab.bracket(&x, &y).unwrap().norm() == 0.0);

        let e1 = RVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let e2 = RVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let got = g.bracket(&e1, &e2).unwrap();
        // direct contraction oracle
        let mut oracle = RVector::zeros(4);
        for i in 0..4 {
            for j in (i + 1)..4 {
                for k in 0..4 {
                    oracle[k] += g.f(k, i, j) * (e1[i] * e2[j] - e1[j] * e2[i]);
                }
            }
        }
        assert_eq!(got, oracle);
        assert_eq!(got[2], 1.0);
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(RealLieAlgebra::abelian(6).jacobi_defect(), 0.0);
        assert!(heisenberg_like(4).jacobi_defect() < 1e-15);

        // [u0,u1] = u0 together with [u0,u2] = u1 violates Jacobi:
        // the cyclic sum over (0,1,2) equals [u0,u2] = u1.
        let bad =
            RealLieAlgebra::from_entries(3, &[(0, 0, 1, 1.0), (1, 0, 2, 1.0)]).unwrap();
        let u0 = RVector::from_vec(vec![1.0, 0.0, 0.0]);
        let u1 = RVector::from_vec(vec![0.0, 1.0, 0.0]);
        let u2 = RVector::from_vec(vec![0.0, 0.0, 1.0]);
        let cyc = bad.bracket(&bad.bracket(&u0, &u1).unwrap(), &u2).unwrap()
            + bad.bracket(&bad.bracket(&u1, &u2).unwrap(), &u0).unwrap()
            + bad.bracket(&bad.bracket(&u2, &u0).unwrap(), &u1).unwrap();
        assert!(cyc.norm() > 0.5);
        assert!((bad.jacobi_defect() - cyc.norm()).abs() < 1e-14);
    }

    #[test]
    fn unimodular_examples() {
        let tol = Tolerance::default();
        assert!(RealLieAlgebra::abelian(4).is_unimodular(tol));

        // [Jy,x] = -sigma x, [Jy,Jx] = -sigma Jx with basis (x, Jx, y, Jy):
        // trace ad_{Jy} = -2 sigma, computed here by the direct sum oracle.
        let sigma = 0.8;
        let g = RealLieAlgebra::from_entries(
            4,
            &[(0, 3, 0, -sigma), (1, 3, 1, -sigma)],
        )
        .unwrap();
        let tr: f64 = (0..4).map(|k| g.f(k, 3, k)).sum();
        assert!((tr - (-2.0 * sigma)).abs() < 1e-15);
        assert!(!g.is_unimodular(tol));
        assert!(g.jacobi_defect() < 1e-15);
    }

    #[test]
    fn ideal_and_abelian_examples() {
        let tol = Tolerance::default();
        let sigma = 0.8;
        let g = RealLieAlgebra::from_entries(
            4,
            &[(0, 3, 0, -sigma), (1, 3, 1, -sigma)],
        )
        .unwrap();
        assert!(g.is_ideal(&Subspace::full(4), tol).unwrap());
        assert!(g.is_ideal(&Subspace::zero(4), tol).unwrap());

        let x_span = Subspace::from_spanning(4, &[RVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])]);
        assert!(g.is_ideal(&x_span, tol).unwrap());
        assert!(g.is_abelian_on(&x_span, tol).unwrap());

        let a = Subspace::from_spanning(
            4,
            &[
                RVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
                RVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
                RVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
            ],
        );
        assert!(g.is_ideal(&a, tol).unwrap());
        assert!(g.is_abelian_on(&a, tol).unwrap());

        let jy_span = Subspace::from_spanning(4, &[RVector::from_vec(vec![0.0, 0.0, 0.0, 1.0])]);
        assert!(!g.is_ideal(&jy_span, tol).unwrap());
    }

    #[test]
    fn derived_algebra_examples() {
        assert_eq!(RealLieAlgebra::abelian(4).derived_algebra().dim(), 0);

        let g = heisenberg_like(4);
        let d = g.derived_algebra();
        assert_eq!(d.dim(), 1);
        assert!(d.contains(&RVector::from_vec(vec![0.0, 0.0, 1.0, 0.0])));
    }

    #[test]
    fn subspace_lattice_examples() {
        let s = Subspace::from_spanning(
            4,
            &[
                RVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]),
                RVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
            ],
        );
        assert!(s.intersect(&s).unwrap().same_span(&s));
        assert!(s.sum(&Subspace::zero(4)).unwrap().same_span(&s));

        let id = RMatrix::identity(4, 4);
        let t = Subspace::from_spanning(4, &[RVector::from_vec(vec![0.0, 0.0, 1.0, 0.0])]);
        let oc = s.ortho_complement_in(&t, &id).unwrap();
        assert_eq!(oc.dim(), 1);
        assert!(oc.contains(&RVector::from_vec(vec![1.0, 1.0, 0.0, 0.0])));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rank_identity(seed in 0u64..500, ds in 0usize..4, dt in 0usize..4) {
            let ambient = 6usize;
            let mut rng = SeededRng::new(seed.wrapping_mul(31).wrapping_add(5));
            let mk = |rng: &mut SeededRng, d: usize| {
                let vs: Vec<RVector> = (0..d)
                    .map(|_| RVector::from_fn(ambient, |_, _| rng.range(-1.0, 1.0)))
                    .collect();
                Subspace::from_spanning(ambient, &vs)
            };
            let s = mk(&mut rng, ds);
            let t = mk(&mut rng, dt);
            let inter = s.intersect(&t).unwrap();
            let sum = s.sum(&t).unwrap();
            prop_assert_eq!(inter.dim() + sum.dim(), s.dim() + t.dim());
        }
    }
}
