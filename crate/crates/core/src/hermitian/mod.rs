//! Complex structures, compatible metrics, unitary frames, the C/D
//! structure tensors, Chern torsion, the special-metric defect
//! functionals, and the independent Chevalley-Eilenberg oracle.
//!
//! Conventions, fixed once and checked by the structure-equation
//! cross-test:
//!   C^k_{ij} = <[e_i, e_j], conj(e_k)>,
//!   D^j_{ik} = <[conj(e_j), e_k], e_i>,
//!   [e_i, conj(e_j)] = sum_k ( conj(D^i_{kj}) e_k - D^j_{ki} conj(e_k) ),
//!   T^j_{ik} = -C^j_{ik} - D^j_{ik} + D^j_{ki},
//!   omega = i sum_k phi_k ∧ conj(phi_k),  omega(x, y) = g(Jx, y).

pub mod forms;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liealg::RealLieAlgebra;
use crate::linalg::{
    fro_norm_vec, CMatrix, CVector, HermitianForm, RMatrix, RVector, ScaleComplex,
};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// An almost complex structure `J` on the underlying real vector space,
/// validated to satisfy `J^2 = -I` within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    j: RMatrix,
}

impl ComplexStructure {
    pub fn new(j: RMatrix) -> Result<Self> {
        let dim = j.nrows();
        if dim != j.ncols() || dim % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "complex structure must be a square matrix of even size".into(),
            ));
        }
        let sq = &j * &j + RMatrix::identity(dim, dim);
        if sq.norm() > 1e-12 * (dim as f64) {
            return Err(Error::PreconditionViolated(format!(
                "J^2 + I has norm {:.3e}",
                sq.norm()
            )));
        }
        Ok(ComplexStructure { j })
    }

    /// Block structure `J u_{2k} = u_{2k+1}`, `J u_{2k+1} = -u_{2k}`.
    pub fn standard(dim: usize) -> Self {
        let mut j = RMatrix::zeros(dim, dim);
        for k in 0..dim / 2 {
            j[(2 * k + 1, 2 * k)] = 1.0;
            j[(2 * k, 2 * k + 1)] = -1.0;
        }
        ComplexStructure { j }
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn apply(&self, v: &RVector) -> RVector {
        &self.j * v
    }

    pub fn apply_c(&self, v: &CVector) -> CVector {
        let jc = self.j.map(|x| Complex64::new(x, 0.0));
        &jc * v
    }
}

/// A positive-definite inner product on the real algebra, compatible with
/// a complex structure when `J^T G J = G`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetric {
    g: RMatrix,
}

impl HermitianMetric {
    pub fn new(g: RMatrix) -> Result<Self> {
        let dim = g.nrows();
        if dim != g.ncols() {
            return Err(Error::DimensionMismatch("metric matrix must be square".into()));
        }
        let sym = &g - g.transpose();
        if sym.norm() > 1e-12 * (1.0 + g.norm()) {
            return Err(Error::PreconditionViolated("metric matrix is not symmetric".into()));
        }
        if g.clone().cholesky().is_none() {
            return Err(Error::PreconditionViolated("metric is not positive definite".into()));
        }
        Ok(HermitianMetric { g })
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMetric { g: RMatrix::identity(dim, dim) }
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.g
    }

    pub fn pair(&self, x: &RVector, y: &RVector) -> f64 {
        (x.transpose() * &self.g * y)[(0, 0)]
    }

    pub fn norm(&self, x: &RVector) -> f64 {
        self.pair(x, x).max(0.0).sqrt()
    }

    /// `||J^T G J - G||`, zero for compatible pairs.
    pub fn compatibility_defect(&self, j: &ComplexStructure) -> f64 {
        (j.matrix().transpose() * &self.g * j.matrix() - &self.g).norm()
    }

    pub fn check_compatible(&self, j: &ComplexStructure) -> Result<()> {
        let d = self.compatibility_defect(j);
        if d > 1e-12 * (1.0 + self.g.norm()) {
            return Err(Error::PreconditionViolated(format!(
                "metric is not J-compatible (defect {d:.3e})"
            )));
        }
        Ok(())
    }

    /// Bilinear extension to complex vectors.
    pub fn pair_c(&self, x: &CVector, y: &CVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..self.g.nrows() {
            if x[a].norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..self.g.ncols() {
                let w = self.g[(a, b)];
                if w != 0.0 {
                    acc += x[a] * w * y[b];
                }
            }
        }
        acc
    }
}

/// Max over basis pairs of the Nijenhuis expression
/// `[x,y] - [Jx,Jy] + J[Jx,y] + J[x,Jy]`.
pub fn nijenhuis_defect(g: &RealLieAlgebra, j: &ComplexStructure) -> f64 {
    let n = g.dim();
    let mut worst = 0.0f64;
    let basis: Vec<RVector> =
        (0..n).map(|i| RVector::from_fn(n, |t, _| if t == i { 1.0 } else { 0.0 })).collect();
    let jbasis: Vec<RVector> = basis.iter().map(|v| j.apply(v)).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            let t = g.bracket(&basis[a], &basis[b]).unwrap()
                - g.bracket(&jbasis[a], &jbasis[b]).unwrap()
                + j.apply(&g.bracket(&jbasis[a], &basis[b]).unwrap())
                + j.apply(&g.bracket(&basis[a], &jbasis[b]).unwrap());
            worst = worst.max(t.norm());
        }
    }
    worst
}

/// A unitary basis `e_k = (x_k - i J x_k)/sqrt(2)` of the (1,0)-space,
/// kept together with the generating real vectors.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    /// real vectors x_k; {x_k, J x_k} is a G-orthonormal real basis
    pub x: Vec<RVector>,
    /// e_k = (x_k - i J x_k)/sqrt(2)
    pub e: Vec<CVector>,
}

impl UnitaryFrame {
    pub fn from_adapted(x: Vec<RVector>, j: &ComplexStructure) -> Self {
        let e = x
            .iter()
            .map(|xk| {
                let jx = j.apply(xk);
                CVector::from_fn(xk.len(), |t, _| {
                    Complex64::new(xk[t] / SQRT2, -jx[t] / SQRT2)
                })
            })
            .collect();
        UnitaryFrame { x, e }
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn conj(&self, k: usize) -> CVector {
        self.e[k].map(|z| z.conj())
    }

    /// Max deviation of the frame Gram matrix from the unitary pattern
    /// `<e_i, conj(e_j)> = delta_ij`, `<e_i, e_j> = 0`.
    pub fn gram_residual(&self, metric: &HermitianMetric) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let h = metric.pair_c(&self.e[i], &self.conj(j));
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((h - target).norm());
                worst = worst.max(metric.pair_c(&self.e[i], &self.e[j]).norm());
            }
        }
        worst
    }

    /// The complexified-frame matrix `[e_1 .. e_n | conj(e_1) .. conj(e_n)]`.
    pub fn frame_matrix(&self) -> CMatrix {
        let n = self.n();
        let dim = self.e[0].len();
        CMatrix::from_fn(dim, 2 * n, |r, c| {
            if c < n {
                self.e[c][r]
            } else {
                self.e[c - n][r].conj()
            }
        })
    }
}

/// Deterministic construction of a unitary frame for `(g-metric, J)`.
///
/// Without a hint, real generators are chosen greedily from the standard
/// basis (largest G-residual against the accumulated J-adapted span, ties
/// to the lowest index). With `adapted_basis` given, those vectors are
/// validated and used as the x_k directly.
pub fn build_unitary_frame(
    algebra_dim: usize,
    j: &ComplexStructure,
    metric: &HermitianMetric,
    adapted_basis: Option<&[RVector]>,
) -> Result<UnitaryFrame> {
    let dim = algebra_dim;
    let n = dim / 2;
    let x = match adapted_basis {
        Some(basis) => {
            if basis.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "adapted basis needs {n} vectors, got {}",
                    basis.len()
                )));
            }
            basis.to_vec()
        }
        None => {
            let candidates: Vec<RVector> = (0..dim)
                .map(|i| RVector::from_fn(dim, |t, _| if t == i { 1.0 } else { 0.0 }))
                .collect();
            j_adapted_basis_in(&candidates, n, j, metric)?
        }
    };
    let frame = UnitaryFrame::from_adapted(x, j);
    let res = frame.gram_residual(metric);
    if res > 1e-10 {
        return Err(Error::DegenerateInput(format!(
            "unitary frame construction failed the Gram identity (residual {res:.3e})"
        )));
    }
    Ok(frame)
}

/// Greedy G-orthonormal J-adapted selection of `count` generators from the
/// candidate list: each accepted x contributes the pair {x, Jx}.
pub fn j_adapted_basis_in(
    candidates: &[RVector],
    count: usize,
    j: &ComplexStructure,
    metric: &HermitianMetric,
) -> Result<Vec<RVector>> {
    let mut span: Vec<RVector> = Vec::new();
    let mut out: Vec<RVector> = Vec::new();
    for _ in 0..count {
        let mut best: Option<(usize, f64)> = None;
        for (idx, c) in candidates.iter().enumerate() {
            let mut r = c.clone();
            for q in &span {
                r -= q * metric.pair(&r, q);
            }
            let norm = metric.norm(&r);
            if norm <= 1e-9 * (1.0 + metric.norm(c)) {
                continue;
            }
            if best.map(|(_, bn)| norm > bn + 1e-14 * (1.0 + bn)).unwrap_or(true) {
                best = Some((idx, norm));
            }
        }
        let Some((idx, _)) = best else {
            return Err(Error::DegenerateInput(
                "J-adapted orthonormalization ran out of independent candidates".into(),
            ));
        };
        let mut r = candidates[idx].clone();
        for _ in 0..2 {
            for q in &span {
                r -= q * metric.pair(&r, q);
            }
        }
        let xk = r.unscale(metric.norm(&r));
        let jxk = j.apply(&xk);
        out.push(xk.clone());
        span.push(xk);
        span.push(jxk.unscale(1.0).clone());
    }
    Ok(out)
}

/// The complex structure constants in a unitary frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensors {
    n: usize,
    c: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl StructureTensors {
    pub fn zeros(n: usize) -> Self {
        StructureTensors { n, c: vec![Complex64::new(0.0, 0.0); n * n * n], d: vec![Complex64::new(0.0, 0.0); n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.n + b) * self.n + c
    }

    /// `C^k_{ij}`
    pub fn c(&self, k: usize, i: usize, j: usize) -> Complex64 {
        self.c[self.idx(k, i, j)]
    }

    /// `D^j_{ik}`
    pub fn d(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.d[self.idx(j, i, k)]
    }

    pub fn set_c(&mut self, k: usize, i: usize, j: usize, v: Complex64) {
        let at = self.idx(k, i, j);
        self.c[at] = v;
        let ta = self.idx(k, j, i);
        self.c[ta] = -v;
    }

    pub fn set_d(&mut self, j: usize, i: usize, k: usize, v: Complex64) {
        let at = self.idx(j, i, k);
        self.d[at] = v;
    }

    /// Max |C^k_{ij} + C^k_{ji}| (zero by construction for computed tensors).
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    worst = worst.max((self.c(k, i, j) + self.c(k, j, i)).norm());
                }
            }
        }
        worst
    }
}

/// `C^k_{ij} = <[e_i,e_j], conj(e_k)>` and `D^j_{ik} = <[conj(e_j), e_k], e_i>`.
pub fn compute_cd(
    g: &RealLieAlgebra,
    metric: &HermitianMetric,
    frame: &UnitaryFrame,
) -> StructureTensors {
    let n = frame.n();
    let mut st = StructureTensors::zeros(n);
    let conj: Vec<CVector> = (0..n).map(|k| frame.conj(k)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let br = g.bracket_complex(&frame.e[i], &frame.e[j]);
            for k in 0..n {
                st.set_c(k, i, j, metric.pair_c(&br, &conj[k]));
            }
        }
    }
    for j in 0..n {
        for k in 0..n {
            let br = g.bracket_complex(&conj[j], &frame.e[k]);
            for i in 0..n {
                st.set_d(j, i, k, metric.pair_c(&br, &frame.e[i]));
            }
        }
    }
    st
}

/// Max residual of rebuilding `[e_i, conj(e_j)]` and `[e_i, e_j]` from the
/// tensors against the direct brackets.
pub fn reconstruction_residual(
    g: &RealLieAlgebra,
    frame: &UnitaryFrame,
    st: &StructureTensors,
) -> f64 {
    let n = frame.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut rebuilt = CVector::from_element(frame.e[0].len(), Complex64::new(0.0, 0.0));
            for k in 0..n {
                rebuilt += frame.e[k].scale_complex(st.d(i, k, j).conj());
                rebuilt -= frame.conj(k).scale_complex(st.d(j, k, i));
            }
            let direct = g.bracket_complex(&frame.e[i], &frame.conj(j));
            worst = worst.max(fro_norm_vec(&(rebuilt - direct)));
            if i < j {
                let mut reb = CVector::from_element(frame.e[0].len(), Complex64::new(0.0, 0.0));
                for k in 0..n {
                    reb += frame.e[k].scale_complex(st.c(k, i, j));
                }
                let dir = g.bracket_complex(&frame.e[i], &frame.e[j]);
                worst = worst.max(fro_norm_vec(&(reb - dir)));
            }
        }
    }
    worst
}

/// Chern torsion `T^j_{ik} = -C^j_{ik} - D^j_{ik} + D^j_{ki}`.
#[derive(Debug, Clone)]
pub struct TorsionTensor {
    n: usize,
    t: Vec<Complex64>,
}

impl TorsionTensor {
    /// `T^j_{ik}`
    pub fn t(&self, j: usize, i: usize, k: usize) -> Complex64 {
        self.t[(j * self.n + i) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.t.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn chern_torsion(st: &StructureTensors) -> TorsionTensor {
    let n = st.n();
    let mut t = vec![Complex64::new(0.0, 0.0); n * n * n];
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                t[(j * n + i) * n + k] = -st.c(j, i, k) - st.d(j, i, k) + st.d(j, k, i);
            }
        }
    }
    TorsionTensor { n, t }
}

/// `max_i |sum_k D^k_{ik}|`; zero iff the metric is balanced (on a
/// unimodular algebra).
pub fn balanced_defect(st: &StructureTensors) -> f64 {
    let n = st.n();
    (0..n)
        .map(|i| {
            let s: Complex64 = (0..n).map(|k| st.d(k, i, k)).sum();
            s.norm()
        })
        .fold(0.0, f64::max)
}

/// Max residual of the pluriclosed condition over index pairs
/// `i < k`, `j < l`.
pub fn pluriclosed_defect(st: &StructureTensors) -> f64 {
    let n = st.n();
    let t = chern_torsion(st);
    let mut worst = 0.0f64;
    for i in 0..n {
        for k in (i + 1)..n {
            for j in 0..n {
                for l in (j + 1)..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..n {
                        acc += -t.t(r, i, k) * st.c(r, j, l).conj()
                            - t.t(j, i, r) * st.d(k, r, l).conj()
                            + t.t(j, k, r) * st.d(i, r, l).conj()
                            + t.t(l, i, r) * st.d(k, r, j).conj()
                            - t.t(l, k, r) * st.d(i, r, j).conj();
                    }
                    worst = worst.max(acc.norm());
                }
            }
        }
    }
    worst
}

/// `max |T^j_{ik}|`; zero iff the metric is Kähler.
pub fn kahler_defect(st: &StructureTensors) -> f64 {
    chern_torsion(st).max_abs()
}

/// Max residual over the three Jacobi identity families for (C, D).
pub fn complex_jacobi_residual(st: &StructureTensors) -> f64 {
    let n = st.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut f1 = Complex64::new(0.0, 0.0);
                    let mut f2 = Complex64::new(0.0, 0.0);
                    let mut f3 = Complex64::new(0.0, 0.0);
                    for r in 0..n {
                        f1 += st.c(r, i, j) * st.c(l, r, k)
                            + st.c(r, j, k) * st.c(l, r, i)
                            + st.c(r, k, i) * st.c(l, r, j);
                        f2 += st.c(r, i, k) * st.d(l, j, r) + st.d(r, j, i) * st.d(l, r, k)
                            - st.d(r, j, k) * st.d(l, r, i);
                        f3 += st.c(r, i, k) * st.d(r, j, l).conj()
                            - st.c(j, r, k) * st.d(i, r, l).conj()
                            + st.c(j, r, i) * st.d(k, r, l).conj()
                            - st.d(l, r, i) * st.d(k, j, r).conj()
                            + st.d(l, r, k) * st.d(i, j, r).conj();
                    }
                    worst = worst.max(f1.norm()).max(f2.norm()).max(f3.norm());
                }
            }
        }
    }
    worst
}

/// Transform the tensors to the frame `w_j = sum_a A_{aj} e_a`.
pub fn reframe_tensors(st: &StructureTensors, a: &CMatrix) -> Result<StructureTensors> {
    let n = st.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch("frame-change matrix must be n x n".into()));
    }
    let a_inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInput("frame-change matrix is singular".into()))?;
    let mut out = StructureTensors::zeros(n);

    // C~^m_{ij} = sum_{a,b,k} Ainv_{mk} C^k_{ab} A_{ai} A_{bj}
    let mut t1 = vec![Complex64::new(0.0, 0.0); n * n * n]; // [k][i][b]
    for k in 0..n {
        for i in 0..n {
            for b in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a_ in 0..n {
                    acc += st.c(k, a_, b) * a[(a_, i)];
                }
                t1[(k * n + i) * n + b] = acc;
            }
        }
    }
    let mut t2 = vec![Complex64::new(0.0, 0.0); n * n * n]; // [k][i][j]
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    acc += t1[(k * n + i) * n + b] * a[(b, j)];
                }
                t2[(k * n + i) * n + j] = acc;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += a_inv[(m, k)] * t2[(k * n + i) * n + j];
                }
                out.set_c(m, i, j, acc);
            }
        }
    }

    // D~^j_{mi} = sum_{a,b,k} conj(Ainv_{mk}) D^b_{ka} A_{ai} conj(A_{bj})
    let mut v1 = vec![Complex64::new(0.0, 0.0); n * n * n]; // [j][k][a]
    for j in 0..n {
        for k in 0..n {
            for a_ in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    acc += st.d(b, k, a_) * a[(b, j)].conj();
                }
                v1[(j * n + k) * n + a_] = acc;
            }
        }
    }
    let mut v2 = vec![Complex64::new(0.0, 0.0); n * n * n]; // [j][k][i]
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a_ in 0..n {
                    acc += v1[(j * n + k) * n + a_] * a[(a_, i)];
                }
                v2[(j * n + k) * n + i] = acc;
            }
        }
    }
    for j in 0..n {
        for m in 0..n {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += a_inv[(m, k)].conj() * v2[(j * n + k) * n + i];
                }
                out.set_d(j, m, i, acc);
            }
        }
    }
    Ok(out)
}

/// The metric for which the given (1,0)-frame is unitary.
pub fn metric_from_frame(vectors: &[CVector], j: &ComplexStructure) -> Result<HermitianMetric> {
    let dim = j.dim();
    let n = vectors.len();
    if 2 * n != dim {
        return Err(Error::DimensionMismatch("frame size must be half the real dimension".into()));
    }
    let mut b = RMatrix::zeros(dim, dim);
    for k in 0..n {
        for t in 0..dim {
            b[(t, 2 * k)] = SQRT2 * vectors[k][t].re;
            b[(t, 2 * k + 1)] = -SQRT2 * vectors[k][t].im;
        }
    }
    let bbt = &b * b.transpose();
    let g = bbt
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInput("frame vectors are dependent".into()))?;
    // symmetrize away inversion fuzz
    let g = (&g + g.transpose()).scale(0.5);
    let metric = HermitianMetric::new(g)?;
    metric.check_compatible(j)?;
    Ok(metric)
}

/// Gauduchon residual `||(n,n)-part of d of the (n-1,n)-part of
/// d(omega^{n-1})||`, computed through the Chevalley-Eilenberg oracle.
pub fn gauduchon_defect(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    metric: &HermitianMetric,
) -> Result<f64> {
    let frame = build_unitary_frame(g.dim(), j, metric, None)?;
    let ctx = forms::FrameContext::new(g, &frame)?;
    Ok(forms::gauduchon_residual(&ctx))
}

/// Hermitian pairing helper on complex column vectors.
pub fn std_form() -> HermitianForm<'static> {
    HermitianForm::standard()
}

/// The matrix `D_alpha = (D^*_{* alpha})` with rows indexed by the lower
/// first index and columns by the upper index.
pub fn d_matrix(st: &StructureTensors, alpha: usize) -> DMatrix<Complex64> {
    let n = st.n();
    DMatrix::from_fn(n, n, |i, j| st.d(j, i, alpha))
}

/// Hermitian/skew-Hermitian split of a square block (no size validation;
/// for the error-checked operation see [`crate::linalg::herm_skew_split`]).
pub fn herm_skew_split_blocks(m: &CMatrix) -> (CMatrix, CMatrix) {
    let adj = m.adjoint();
    ((m + &adj).scale(0.5), (m - &adj).scale(0.5))
}
