//! Seeded construction of valid instances in all three regimes from
//! reduced data, and reconstruction of the full real Lie algebra.
//!
//! The generator always works in the canonical gauge: the real basis is
//! `u_{2k} = x_{k+1}`, `u_{2k+1} = J x_{k+1}`, the metric is the identity,
//! `J` is the standard block structure, `x = u_0`, `y = delta u_1 +
//! delta' u_2`, and the ideal legs sit on `u_4..`. With `|delta| < 0.7`
//! the deterministic frame builders reproduce exactly this gauge, which is
//! what makes the generator → reconstruct → extract roundtrip exact.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{expected_e_blocks, CaseTag, JType};
use crate::hermitian::{
    balanced_defect, compute_cd, kahler_defect, nijenhuis_defect, pluriclosed_defect,
    ComplexStructure, HermitianMetric, StructureTensors, UnitaryFrame,
};
use crate::liealg::{RealLieAlgebra, Subspace};
use crate::linalg::{
    gram_schmidt_unitary, project_to_kernel, CMatrix, CVector, HermitianForm, RVector,
    ScaleComplex, Tolerance,
};
use crate::rng::SeededRng;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MetricTarget {
    None,
    Balanced,
    Pluriclosed,
    Kahler,
}

impl std::fmt::Display for MetricTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MetricTarget::None => "none",
            MetricTarget::Balanced => "balanced",
            MetricTarget::Pluriclosed => "pluriclosed",
            MetricTarget::Kahler => "kahler",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenParams {
    /// complex dimension, >= 2
    pub n: usize,
    pub case: CaseTag,
    /// main-case type; `None` lets the seed choose
    pub jtype: Option<JType>,
    /// abelian-quotient rank request
    pub r0: Option<usize>,
    pub target: MetricTarget,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n: usize, case: CaseTag, seed: u64) -> Self {
        GenParams { n, case, jtype: None, r0: None, target: MetricTarget::None, seed }
    }
}

/// Raw generator blocks for the main case, in the admissible gauge.
#[derive(Debug, Clone)]
pub struct MainData {
    pub sigma: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub y1: CMatrix,
    pub y2: CMatrix,
    /// (n-2) x 2; column beta is v^{beta+1}_alpha
    pub v1: CMatrix,
    pub v2: CMatrix,
}

/// Raw generator blocks for the `Ja = a` case.
#[derive(Debug, Clone)]
pub struct AData {
    pub lambda: f64,
    pub v: CVector,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

/// Raw generator blocks for the abelian-quotient case (`sigma = 0`).
#[derive(Debug, Clone)]
pub struct BData {
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub y1: CMatrix,
    pub y2: CMatrix,
    pub v1: CMatrix,
    pub v2: CMatrix,
}

#[derive(Debug, Clone)]
pub enum ReducedData {
    Main(MainData),
    CaseA(AData),
    CaseB(BData),
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub params: Option<GenParams>,
    pub data: ReducedData,
    pub unimodular: bool,
}

/// A validated instance: algebra, complex structure, compatible metric and
/// the distinguished codimension-2 abelian ideal.
#[derive(Debug, Clone)]
pub struct Instance {
    pub algebra: RealLieAlgebra,
    pub j: ComplexStructure,
    pub metric: HermitianMetric,
    pub a: Subspace,
    pub provenance: Option<Provenance>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.algebra.dim() / 2
    }

    pub fn case(&self, tol: Tolerance) -> Result<CaseTag> {
        crate::frames::case_split(&self.algebra, &self.j, &self.a, tol)
    }

    pub fn admissible_frame(&self, tol: Tolerance) -> Result<crate::frames::AdmissibleFrame> {
        crate::frames::build_admissible_frame(&self.algebra, &self.j, &self.a, &self.metric, tol)
    }

    pub fn tensors(&self, frame: &UnitaryFrame) -> StructureTensors {
        compute_cd(&self.algebra, &self.metric, frame)
    }

    /// Same algebra and ideal, different compatible metric.
    pub fn with_metric(&self, metric: HermitianMetric) -> Result<Instance> {
        metric.check_compatible(&self.j)?;
        Ok(Instance {
            algebra: self.algebra.clone(),
            j: self.j.clone(),
            metric,
            a: self.a.clone(),
            provenance: None,
        })
    }

    pub fn validate(&self, tol: Tolerance) -> Result<()> {
        let jd = self.algebra.jacobi_defect();
        if jd > 1e-9 {
            return Err(Error::InconsistentInstance(format!("jacobi defect {jd:.3e}")));
        }
        let nd = nijenhuis_defect(&self.algebra, &self.j);
        if nd > 1e-9 {
            return Err(Error::InconsistentInstance(format!("nijenhuis defect {nd:.3e}")));
        }
        self.metric.check_compatible(&self.j)?;
        crate::frames::check_codim2_abelian_ideal(&self.algebra, &self.a, tol)?;
        Ok(())
    }

    pub fn is_unimodular(&self, tol: Tolerance) -> bool {
        self.algebra.is_unimodular(tol)
    }
}

// ---------------------------------------------------------------------
// tensor assembly
// ---------------------------------------------------------------------

/// Fill the D tensor from the admissible-frame blocks and derive every C
/// entry from the Lemma-4 relations.
pub fn tensors_from_blocks(
    n: usize,
    e1: &CMatrix,
    e2: &CMatrix,
    v1: &CMatrix,
    v2: &CMatrix,
    y1: &CMatrix,
    y2: &CMatrix,
    delta: f64,
) -> StructureTensors {
    let mut st = StructureTensors::zeros(n);
    let m = n - 2;
    let dprime = (1.0 - delta * delta).sqrt();
    let t = Complex64::new(0.0, delta / dprime);
    let two_t = t * Complex64::new(2.0, 0.0);

    for (alpha, (e, (v, y))) in [(e1, (v1, y1)), (e2, (v2, y2))].into_iter().enumerate() {
        for i in 0..2 {
            for jj in 0..2 {
                st.set_d(jj, i, alpha, e[(i, jj)]);
            }
        }
        for i in 0..m {
            for beta in 0..2 {
                st.set_d(beta, i + 2, alpha, v[(i, beta)]);
            }
            for jj in 0..m {
                st.set_d(jj + 2, i + 2, alpha, y[(i, jj)]);
            }
        }
    }

    // C^*_{1i} = conj(D^i_{*1}), C^*_{2i} = conj(D^i_{*2}) - 2t conj(D^i_{*1})
    for star in 0..n {
        for i in 2..n {
            st.set_c(star, 0, i, st.d(i, star, 0).conj());
            st.set_c(star, 1, i, st.d(i, star, 1).conj() - two_t * st.d(i, star, 0).conj());
        }
        // C^*_{12} = conj(D^2_{*1}) - conj(D^1_{*2}) + 2t conj(D^1_{*1})
        st.set_c(
            star,
            0,
            1,
            st.d(1, star, 0).conj() - st.d(0, star, 1).conj() + two_t * st.d(0, star, 0).conj(),
        );
    }
    st
}

pub fn tensors_from_main(n: usize, d: &MainData) -> StructureTensors {
    let (e1, e2) = expected_e_blocks(d.a, d.b, d.c, d.c_p, d.d_p, d.sigma, d.delta);
    tensors_from_blocks(n, &e1, &e2, &d.v1, &d.v2, &d.y1, &d.y2, d.delta)
}

pub fn tensors_from_b(n: usize, d: &BData) -> StructureTensors {
    let (e1, e2) = expected_e_blocks(d.a, d.b, d.c, d.c_p, d.d_p, 0.0, d.delta);
    tensors_from_blocks(n, &e1, &e2, &d.v1, &d.v2, &d.y1, &d.y2, d.delta)
}

pub fn tensors_from_a(n: usize, d: &AData) -> StructureTensors {
    let m = n - 1;
    let mut st = StructureTensors::zeros(n);
    st.set_d(0, 0, 0, Complex64::new(d.lambda, 0.0));
    for i in 0..m {
        st.set_d(0, i + 1, 0, d.v[i]);
        for jj in 0..m {
            st.set_c(jj + 1, 0, i + 1, d.x[(i, jj)]);
            st.set_d(jj + 1, i + 1, 0, d.y[(i, jj)]);
            st.set_d(0, i + 1, jj + 1, d.z[(i, jj)]);
        }
    }
    st
}

/// Expand the brackets of the real basis `{x_k, Jx_k}` from the tensor
/// data. The result must be real; residual imaginary parts above 1e-11
/// signal inconsistent data.
pub fn reconstruct_real_algebra(st: &StructureTensors) -> Result<RealLieAlgebra> {
    let n = st.n();
    let dim = 2 * n;
    let zero = Complex64::new(0.0, 0.0);
    // complex bracket tables in the (e, ebar) coordinates
    let bra = |iu: usize, ju: usize| -> Vec<Complex64> {
        let mut out = vec![zero; dim];
        let (i, ci) = if iu < n { (iu, false) } else { (iu - n, true) };
        let (j, cj) = if ju < n { (ju, false) } else { (ju - n, true) };
        match (ci, cj) {
            (false, false) => {
                for k in 0..n {
                    out[k] = st.c(k, i, j);
                }
            }
            (true, true) => {
                for k in 0..n {
                    out[n + k] = st.c(k, i, j).conj();
                }
            }
            (false, true) => {
                for k in 0..n {
                    out[k] = st.d(i, k, j).conj();
                    out[n + k] = -st.d(j, k, i);
                }
            }
            (true, false) => {
                for k in 0..n {
                    out[k] = -st.d(j, k, i).conj();
                    out[n + k] = st.d(i, k, j);
                }
            }
        }
        out
    };

    // u_{2k} = (e_k + ebar_k)/sqrt(2), u_{2k+1} = i (e_k - ebar_k)/sqrt(2)
    let leg = |u: usize| -> [(usize, Complex64); 2] {
        let k = u / 2;
        if u % 2 == 0 {
            [(k, Complex64::new(1.0 / SQRT2, 0.0)), (k + n, Complex64::new(1.0 / SQRT2, 0.0))]
        } else {
            [(k, Complex64::new(0.0, 1.0 / SQRT2)), (k + n, Complex64::new(0.0, -1.0 / SQRT2))]
        }
    };

    let mut alg = RealLieAlgebra::abelian(dim);
    for p in 0..dim {
        for q in (p + 1)..dim {
            let mut acc = vec![zero; dim];
            for (iu, cu) in leg(p) {
                for (jv, cv) in leg(q) {
                    if iu == jv {
                        continue;
                    }
                    let w = cu * cv;
                    let table = bra(iu, jv);
                    for k in 0..dim {
                        acc[k] += w * table[k];
                    }
                }
            }
            // back to real coordinates
            for k in 0..n {
                let ce = acc[k];
                let cc = acc[n + k];
                let re_part = (ce + cc) / Complex64::new(SQRT2, 0.0);
                let im_part = (cc - ce) * Complex64::new(0.0, 1.0) / Complex64::new(SQRT2, 0.0);
                if re_part.im.abs() > 1e-11 || im_part.im.abs() > 1e-11 {
                    return Err(Error::InconsistentInstance(format!(
                        "reconstruction produced a non-real bracket at ({p},{q})"
                    )));
                }
                alg.set_f(2 * k, p, q, re_part.re)?;
                alg.set_f(2 * k + 1, p, q, im_part.re)?;
            }
        }
    }

    // roundtrip gate: re-extract the tensors in the canonical frame
    let j = ComplexStructure::standard(dim);
    let metric = HermitianMetric::identity(dim);
    let gens: Vec<RVector> =
        (0..n).map(|k| RVector::from_fn(dim, |t, _| if t == 2 * k { 1.0 } else { 0.0 })).collect();
    let frame = UnitaryFrame::from_adapted(gens, &j);
    let st2 = compute_cd(&alg, &metric, &frame);
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                worst = worst.max((st.c(a, b, c) - st2.c(a, b, c)).norm());
                worst = worst.max((st.d(a, b, c) - st2.d(a, b, c)).norm());
            }
        }
    }
    if worst > 1e-9 {
        return Err(Error::InconsistentInstance(format!(
            "tensor roundtrip residual {worst:.3e} after reconstruction"
        )));
    }
    Ok(alg)
}

fn canonical_ideal(case: CaseTag, n: usize, delta: f64) -> Subspace {
    let dim = 2 * n;
    let unit = |i: usize| RVector::from_fn(dim, |t, _| if t == i { 1.0 } else { 0.0 });
    let mut basis = Vec::new();
    match case {
        CaseTag::JaEqualsA => {
            for i in 2..dim {
                basis.push(unit(i));
            }
        }
        _ => {
            let dprime = (1.0 - delta * delta).sqrt();
            basis.push(unit(0));
            basis.push(unit(1).scale(delta) + unit(2).scale(dprime));
            for i in 4..dim {
                basis.push(unit(i));
            }
        }
    }
    Subspace::from_spanning(dim, &basis)
}

fn finalize(
    case: CaseTag,
    n: usize,
    st: &StructureTensors,
    delta: f64,
    params: Option<GenParams>,
    data: ReducedData,
) -> Result<Instance> {
    let algebra = reconstruct_real_algebra(st)?;
    let dim = 2 * n;
    let j = ComplexStructure::standard(dim);
    let metric = HermitianMetric::identity(dim);
    let tol = Tolerance::default();

    let jd = algebra.jacobi_defect();
    if jd > 1e-10 {
        return Err(Error::InconsistentInstance(format!(
            "generated data violates Jacobi: defect {jd:.3e}"
        )));
    }
    let nd = nijenhuis_defect(&algebra, &j);
    if nd > 1e-10 {
        return Err(Error::InconsistentInstance(format!(
            "generated J is not integrable: defect {nd:.3e}"
        )));
    }
    let a = canonical_ideal(case, n, delta);
    let got = crate::frames::case_split(&algebra, &j, &a, tol)?;
    if got != case {
        return Err(Error::InconsistentInstance(format!(
            "generated instance landed in case {got}, wanted {case}"
        )));
    }
    let unimodular = algebra.is_unimodular(tol);
    Ok(Instance { algebra, j, metric, a, provenance: Some(Provenance { params, data, unimodular }) })
}

/// Build an instance straight from main-case blocks (no sampling).
pub fn instance_from_main_data(
    n: usize,
    d: &MainData,
    params: Option<GenParams>,
) -> Result<Instance> {
    let st = tensors_from_main(n, d);
    finalize(CaseTag::MainNonabelian, n, &st, d.delta, params, ReducedData::Main(d.clone()))
}

pub fn instance_from_a_data(n: usize, d: &AData, params: Option<GenParams>) -> Result<Instance> {
    let st = tensors_from_a(n, d);
    finalize(CaseTag::JaEqualsA, n, &st, 0.0, params, ReducedData::CaseA(d.clone()))
}

pub fn instance_from_b_data(n: usize, d: &BData, params: Option<GenParams>) -> Result<Instance> {
    let st = tensors_from_b(n, d);
    finalize(CaseTag::AbelianQuotient, n, &st, d.delta, params, ReducedData::CaseB(d.clone()))
}

// ---------------------------------------------------------------------
// sampling helpers
// ---------------------------------------------------------------------

fn random_unitary(rng: &mut SeededRng, m: usize) -> CMatrix {
    if m == 0 {
        return CMatrix::zeros(0, 0);
    }
    let cols: Vec<CVector> = (0..m).map(|_| CVector::from_fn(m, |_, _| rng.complex(1.0))).collect();
    let ortho = gram_schmidt_unitary(&cols, HermitianForm::standard(), Tolerance::default())
        .expect("random vectors are independent");
    CMatrix::from_columns(&ortho)
}

/// Conjugate the ideal blocks by a unitary change of the e_3..e_n legs:
/// under `e~_i = sum_k U_{ki} e_k` the blocks transform as
/// `Y~ = U^T Y conj(U)` and `v~ = U^T v`.
fn conjugate_blocks(
    u: &CMatrix,
    y1: &mut CMatrix,
    y2: &mut CMatrix,
    v1: &mut CMatrix,
    v2: &mut CMatrix,
) {
    let ut = u.transpose();
    let uc = u.map(|z| z.conj());
    *y1 = &ut * y1.clone() * &uc;
    *y2 = &ut * y2.clone() * &uc;
    *v1 = &ut * v1.clone();
    *v2 = &ut * v2.clone();
}

/// Superdiagonal nilpotent Y_1 and a commuting-grid Y_2 with
/// `[Y_1, Y_2] = kappa Y_1` and a prescribed imaginary trace.
fn sample_y_pair_main(
    rng: &mut SeededRng,
    m: usize,
    kappa: Complex64,
    im_trace_target: f64,
) -> (CMatrix, CMatrix) {
    let mut y1 = CMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        y1[(i, i + 1)] = rng.complex(1.0) + Complex64::new(0.3, 0.3);
    }
    let grid_im: f64 = kappa.im * (m * (m.saturating_sub(1))) as f64 / 2.0;
    let mu = Complex64::new(
        rng.range(-1.0, 1.0),
        if m > 0 { (im_trace_target - grid_im) / m as f64 } else { 0.0 },
    );
    let mut y2 = CMatrix::zeros(m, m);
    for i in 0..m {
        y2[(i, i)] = mu + kappa * Complex64::new(i as f64, 0.0);
    }
    // polynomial-in-Y_1 part keeps the commutation relation exact
    let mut pow = y1.clone();
    for _ in 1..m {
        let coef = rng.complex(0.6);
        y2 += pow.map(|z| z * coef);
        pow = &pow * &y1;
    }
    (y1, y2)
}

/// Materialize the linear map `z -> F(z)` column by column.
fn linear_map_matrix<F>(rows: usize, cols: usize, f: F) -> CMatrix
where
    F: Fn(&CVector) -> CVector,
{
    let mut m = CMatrix::zeros(rows, cols);
    let mut e = CVector::from_element(cols, Complex64::new(0.0, 0.0));
    for j in 0..cols {
        e[j] = Complex64::new(1.0, 0.0);
        let col = f(&e);
        for i in 0..rows {
            m[(i, j)] = col[i];
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    m
}

fn split_v(z: &CVector, m: usize) -> (CMatrix, CMatrix) {
    let v1 = CMatrix::from_fn(m, 2, |i, b| z[b * m + i]);
    let v2 = CMatrix::from_fn(m, 2, |i, b| z[2 * m + b * m + i]);
    (v1, v2)
}

/// Sample V-blocks in the kernel of the Jacobi constraint
/// `V_1 E_2 + Y_1 V_2 - V_2 E_1 - Y_2 V_1 = kappa V_1`, optionally with
/// the balanced row `v^1_1 + v^2_2 = 0` appended.
fn sample_v_blocks(
    rng: &mut SeededRng,
    m: usize,
    e1: &CMatrix,
    e2: &CMatrix,
    y1: &CMatrix,
    y2: &CMatrix,
    kappa: Complex64,
    balanced_row: bool,
) -> Result<(CMatrix, CMatrix)> {
    if m == 0 {
        return Ok((CMatrix::zeros(0, 2), CMatrix::zeros(0, 2)));
    }
    let out_rows = 2 * m + if balanced_row { m } else { 0 };
    let map = |z: &CVector| -> CVector {
        let (v1, v2) = split_v(z, m);
        let f = &v1 * e2 + y1 * &v2 - &v2 * e1 - y2 * &v1 - v1.map(|w| w * kappa);
        CVector::from_fn(out_rows, |r, _| {
            if r < 2 * m {
                f[(r % m, r / m)]
            } else {
                let i = r - 2 * m;
                v1[(i, 0)] + v2[(i, 1)]
            }
        })
    };
    let mat = linear_map_matrix(out_rows, 4 * m, map);
    let z0 = CVector::from_fn(4 * m, |_, _| rng.complex(0.8));
    let z = project_to_kernel(&mat, &z0)?;
    let residual = (&mat * &z).norm();
    if residual > 1e-10 {
        return Err(Error::DegenerateInput(format!(
            "V-block constraint projection left residual {residual:.3e}"
        )));
    }
    Ok(split_v(&z, m))
}

// ---------------------------------------------------------------------
// main-case generation
// ---------------------------------------------------------------------

fn unimodular_target_main(sigma: f64, c: f64, d_p: f64, dprime: f64) -> f64 {
    (2.0 * sigma - d_p - c) / (2.0 * SQRT2 * dprime)
}

fn gen_main_once(params: &GenParams, rng: &mut SeededRng) -> Result<Instance> {
    let n = params.n;
    if n < 2 {
        return Err(Error::GenerationFailed {
            seed: params.seed,
            reason: "main case needs n >= 2".into(),
        });
    }
    let m = n - 2;
    let jtype = params.jtype.unwrap_or_else(|| match rng.below(3) {
        0 => JType::Generic,
        1 => JType::HalfGeneric,
        _ => JType::Degenerate,
    });

    match params.target {
        MetricTarget::Kahler => Err(Error::GenerationFailed {
            seed: params.seed,
            reason: "main-nonabelian instances admit no Kähler metric; not attempted".into(),
        }),
        MetricTarget::None => gen_main_plain(params, rng, jtype, m),
        MetricTarget::Balanced => gen_main_balanced(params, rng, jtype, m),
        MetricTarget::Pluriclosed => gen_main_pluriclosed(params, rng, jtype, m),
    }
}

fn gen_main_plain(
    params: &GenParams,
    rng: &mut SeededRng,
    jtype: JType,
    m: usize,
) -> Result<Instance> {
    let sigma = rng.signed_range(0.5, 1.5);
    let delta = rng.range(-0.65, 0.65);
    let dprime = (1.0 - delta * delta).sqrt();
    let (a, b, c, c_p, d_p) = match jtype {
        JType::Generic => {
            let b = rng.signed_range(0.5, 1.5);
            let a = rng.range(-1.0, 1.0);
            let c = -a * a / b;
            (a, b, c, -(a / b) * (c + sigma), -c - 2.0 * sigma)
        }
        JType::HalfGeneric => {
            let c = if params.n == 2 { sigma } else { rng.signed_range(0.5, 1.5) };
            (0.0, 0.0, c, rng.range(-1.0, 1.0), c)
        }
        JType::Degenerate => {
            let d_p = if params.n == 2 { 2.0 * sigma } else { rng.range(-1.0, 1.0) };
            (0.0, 0.0, 0.0, rng.range(-1.0, 1.0), d_p)
        }
    };
    let kappa = Complex64::new(0.0, sigma / (SQRT2 * dprime));
    let im_target = unimodular_target_main(sigma, c, d_p, dprime);
    let (mut y1, mut y2) = sample_y_pair_main(rng, m, kappa, im_target);
    let (e1, e2) = expected_e_blocks(a, b, c, c_p, d_p, sigma, delta);
    let (mut v1, mut v2) = sample_v_blocks(rng, m, &e1, &e2, &y1, &y2, kappa, false)?;
    let u = random_unitary(rng, m);
    conjugate_blocks(&u, &mut y1, &mut y2, &mut v1, &mut v2);
    let data = MainData { sigma, delta, a, b, c, c_p, d_p, y1, y2, v1, v2 };
    instance_from_main_data(params.n, &data, Some(*params))
}

fn gen_main_balanced(
    params: &GenParams,
    rng: &mut SeededRng,
    jtype: JType,
    m: usize,
) -> Result<Instance> {
    if jtype == JType::HalfGeneric {
        return Err(Error::GenerationFailed {
            seed: params.seed,
            reason: "balanced metrics rule out the half-generic case".into(),
        });
    }
    if m == 0 {
        return Err(Error::GenerationFailed {
            seed: params.seed,
            reason: "n = 2 balanced main-case targets are unimodularity-infeasible: \
                     the trace criterion forces 2*sigma = d' + c with no Y_2 block"
                .into(),
        });
    }
    let sigma = rng.signed_range(0.5, 1.5);
    let delta = 0.0;
    let (a, c, c_p) = (0.0, 0.0, 0.0);
    let (b, d_p) = match jtype {
        JType::Generic => (2.0 * sigma, -2.0 * sigma),
        _ => (0.0, 0.0),
    };
    let kappa = Complex64::new(0.0, sigma / SQRT2);
    let im_target = unimodular_target_main(sigma, c, d_p, 1.0);
    let (mut y1, mut y2) = sample_y_pair_main(rng, m, kappa, im_target);
    let (e1, e2) = expected_e_blocks(a, b, c, c_p, d_p, sigma, delta);
    let (mut v1, mut v2) = sample_v_blocks(rng, m, &e1, &e2, &y1, &y2, kappa, true)?;
    let u = random_unitary(rng, m);
    conjugate_blocks(&u, &mut y1, &mut y2, &mut v1, &mut v2);
    let data = MainData { sigma, delta, a, b, c, c_p, d_p, y1, y2, v1, v2 };
    let inst = instance_from_main_data(params.n, &data, Some(*params))?;

    let frame = inst.admissible_frame(Tolerance::default())?;
    let st = inst.tensors(&frame.frame);
    let bd = balanced_defect(&st);
    if bd > 1e-10 {
        return Err(Error::InconsistentInstance(format!("balanced target missed: defect {bd:.3e}")));
    }
    if !inst.is_unimodular(Tolerance::default()) {
        return Err(Error::InconsistentInstance("balanced target must be unimodular".into()));
    }
    Ok(inst)
}

fn gen_main_pluriclosed(
    params: &GenParams,
    rng: &mut SeededRng,
    jtype: JType,
    m: usize,
) -> Result<Instance> {
    let inst = match jtype {
        JType::Degenerate => {
            // closed family: d' = 2 sigma, Y_1 = 0, Y_2 Hermitian, V = 0
            let sigma = rng.signed_range(0.5, 1.5);
            let delta = rng.range(-0.65, 0.65);
            let c_p = rng.range(-1.0, 1.0);
            let d_p = 2.0 * sigma;
            let mut y2 = CMatrix::zeros(m, m);
            for i in 0..m {
                y2[(i, i)] = Complex64::new(rng.range(-1.0, 1.0), 0.0);
                for jj in (i + 1)..m {
                    let w = rng.complex(0.7);
                    y2[(i, jj)] = w;
                    y2[(jj, i)] = w.conj();
                }
            }
            let data = MainData {
                sigma,
                delta,
                a: 0.0,
                b: 0.0,
                c: 0.0,
                c_p,
                d_p,
                y1: CMatrix::zeros(m, m),
                y2,
                v1: CMatrix::zeros(m, 2),
                v2: CMatrix::zeros(m, 2),
            };
            instance_from_main_data(params.n, &data, Some(*params))?
        }
        JType::Generic => {
            // two-block closed family; needs m = 4 (n = 6)
            if m != 4 {
                return Err(Error::GenerationFailed {
                    seed: params.seed,
                    reason: format!(
                        "generic pluriclosed main-case instances are generated from the \
                         two-block family at n = 6 (requested n = {})",
                        params.n
                    ),
                });
            }
            // the only scalar ratio compatible with the (1,2|1,2) SKT
            // family at v = 0 is b = -2 sigma (so sigma*b = -2 sigma^2 < 0)
            let sigma = rng.signed_range(0.5, 1.5);
            let b = -2.0 * sigma;
            let d_p = -2.0 * sigma;
            let p = (-sigma * b / 8.0).sqrt();
            let i = Complex64::new(0.0, 1.0);
            let block_y1 = CMatrix::from_fn(2, 2, |r, cx| match (r, cx) {
                (0, 0) => i * Complex64::new(p, 0.0),
                (0, 1) | (1, 0) => Complex64::new(p, 0.0),
                _ => -i * Complex64::new(p, 0.0),
            });
            let s8 = sigma / (2.0 * SQRT2);
            let block_y2 = |rho: f64| {
                CMatrix::from_fn(2, 2, |r, cx| match (r, cx) {
                    (0, 0) | (1, 1) => Complex64::new(rho, s8),
                    (0, 1) => Complex64::new(s8, 0.0),
                    _ => Complex64::new(-s8, 0.0),
                })
            };
            let mut y1 = CMatrix::zeros(4, 4);
            let mut y2 = CMatrix::zeros(4, 4);
            for blk in 0..2 {
                let rho = rng.range(-1.0, 1.0);
                let b2 = block_y2(rho);
                for r in 0..2 {
                    for cx in 0..2 {
                        y1[(2 * blk + r, 2 * blk + cx)] = block_y1[(r, cx)];
                        y2[(2 * blk + r, 2 * blk + cx)] = b2[(r, cx)];
                    }
                }
            }
            let mut v1 = CMatrix::zeros(4, 2);
            let mut v2 = CMatrix::zeros(4, 2);
            let u = random_unitary(rng, 4);
            conjugate_blocks(&u, &mut y1, &mut y2, &mut v1, &mut v2);
            let data = MainData {
                sigma,
                delta: 0.0,
                a: 0.0,
                b,
                c: 0.0,
                c_p: 0.0,
                d_p,
                y1,
                y2,
                v1,
                v2,
            };
            instance_from_main_data(params.n, &data, Some(*params))?
        }
        JType::HalfGeneric => {
            return Err(Error::GenerationFailed {
                seed: params.seed,
                reason: "no pluriclosed half-generic family is known; the paper leaves this \
                         population unsettled"
                    .into(),
            });
        }
    };

    let frame = inst.admissible_frame(Tolerance::default())?;
    let st = inst.tensors(&frame.frame);
    let pd = pluriclosed_defect(&st);
    if pd > 1e-9 {
        return Err(Error::InconsistentInstance(format!(
            "pluriclosed target missed: defect {pd:.3e}"
        )));
    }
    Ok(inst)
}

// ---------------------------------------------------------------------
// Ja = a generation
// ---------------------------------------------------------------------

fn gen_a_once(params: &GenParams, rng: &mut SeededRng) -> Result<Instance> {
    let n = params.n;
    let m = n - 1;
    let diag = |rng: &mut SeededRng, m: usize| {
        CMatrix::from_fn(
            m,
            m,
            |i, jj| if i == jj { rng.complex(1.0) } else { Complex64::new(0.0, 0.0) },
        )
    };
    let data = match params.target {
        MetricTarget::Kahler => {
            // v = 0, X = Y normal, Z = 0, lambda = 0
            let x = diag(rng, m);
            AData {
                lambda: 0.0,
                v: CVector::from_element(m, Complex64::new(0.0, 0.0)),
                y: x.clone(),
                x,
                z: CMatrix::zeros(m, m),
            }
        }
        MetricTarget::Balanced => {
            // v = 0, tr X = tr Y, lambda = 0, [X*, Y] = 0, Z = 0
            let x = diag(rng, m);
            let mut y = diag(rng, m);
            let fix: Complex64 = (0..m).map(|i| x[(i, i)] - y[(i, i)]).sum();
            y[(0, 0)] += fix;
            AData {
                lambda: 0.0,
                v: CVector::from_element(m, Complex64::new(0.0, 0.0)),
                x,
                y,
                z: CMatrix::zeros(m, m),
            }
        }
        MetricTarget::Pluriclosed => {
            // lambda = 0, Z = 0, X = Y normal, v in range(Y)
            let mut x = diag(rng, m);
            if m > 1 && rng.unit() < 0.4 {
                // a singular direction makes range(Y) a proper subspace
                x[(m - 1, m - 1)] = Complex64::new(0.0, 0.0);
            }
            let w = CVector::from_fn(m, |_, _| rng.complex(1.0));
            let v = &x * w;
            AData { lambda: 0.0, v, y: x.clone(), x, z: CMatrix::zeros(m, m) }
        }
        MetricTarget::None => match rng.below(3) {
            0 => {
                // commuting diagonal pair with tr X = tr Y (unimodular)
                let x = diag(rng, m);
                let mut y = diag(rng, m);
                let fix: Complex64 = (0..m).map(|i| x[(i, i)] - y[(i, i)]).sum();
                y[(0, 0)] += fix;
                let v = CVector::from_fn(m, |_, _| rng.complex(0.8));
                AData { lambda: 0.0, v, x, y, z: CMatrix::zeros(m, m) }
            }
            1 => {
                // lambda > 0 family: X = -conj(Y) with 2 Re tr(Y) = -lambda
                let lambda = rng.range(0.3, 1.2);
                let mut y = diag(rng, m);
                let re_tr: f64 = (0..m).map(|i| y[(i, i)].re).sum();
                y[(0, 0)] += Complex64::new(-lambda / 2.0 - re_tr, 0.0);
                let x = y.map(|z| -z.conj());
                let v = CVector::from_fn(m, |_, _| rng.complex(0.8));
                AData { lambda, v, x, y, z: CMatrix::zeros(m, m) }
            }
            _ => {
                // X = Y = 0 with a square-zero Z
                let mut z = CMatrix::zeros(m, m);
                if m >= 2 {
                    z[(0, 1)] = rng.complex(1.0) + Complex64::new(0.4, 0.0);
                }
                AData {
                    lambda: 0.0,
                    v: CVector::from_fn(m, |_, _| rng.complex(0.5)),
                    x: CMatrix::zeros(m, m),
                    y: CMatrix::zeros(m, m),
                    z,
                }
            }
        },
    };

    // unitary mixing of the e_2..e_n legs for variety
    let mut data = data;
    let vmat = random_unitary(rng, m);
    let vadj = vmat.adjoint();
    let vt = vmat.transpose();
    data.x = &vmat * &data.x * &vadj;
    data.y = &vmat * &data.y * &vadj;
    data.z = &vmat * &data.z * &vt;
    data.v = &vmat * &data.v;

    let inst = instance_from_a_data(n, &data, Some(*params))?;
    let frame = inst.admissible_frame(Tolerance::default())?;
    let st = inst.tensors(&frame.frame);
    match params.target {
        MetricTarget::Kahler => {
            let kd = kahler_defect(&st);
            if kd > 1e-10 {
                return Err(Error::InconsistentInstance(format!("Kähler target missed: {kd:.3e}")));
            }
        }
        MetricTarget::Balanced => {
            let bd = balanced_defect(&st);
            if bd > 1e-10 {
                return Err(Error::InconsistentInstance(format!("balanced target missed: {bd:.3e}")));
            }
        }
        MetricTarget::Pluriclosed => {
            let pd = pluriclosed_defect(&st);
            if pd > 1e-9 {
                return Err(Error::InconsistentInstance(format!(
                    "pluriclosed target missed: {pd:.3e}"
                )));
            }
        }
        MetricTarget::None => {}
    }
    Ok(inst)
}

// ---------------------------------------------------------------------
// abelian-quotient generation
// ---------------------------------------------------------------------

fn gen_b_once(params: &GenParams, rng: &mut SeededRng) -> Result<Instance> {
    let n = params.n;
    let m = n - 2;
    let delta = rng.range(-0.65, 0.65);
    let dprime = (1.0 - delta * delta).sqrt();
    let t_im = delta / dprime;

    // scalars (a, b, c, c', d') with tr(A_x) = 0 and [A_x, A_y] = 0
    let want_r0 = params.r0;
    let (a, b, c, c_p, d_p) = match params.target {
        MetricTarget::Kahler | MetricTarget::Pluriclosed => (0.0, 0.0, 0.0, 0.0, 0.0),
        MetricTarget::Balanced => {
            if want_r0 == Some(0) {
                (0.0, 0.0, 0.0, 0.0, 0.0)
            } else {
                let b = rng.signed_range(0.5, 1.5);
                (0.0, b, -b, 0.0, -b)
            }
        }
        MetricTarget::None => match want_r0 {
            Some(0) => (0.0, 0.0, 0.0, 0.0, 0.0),
            _ => {
                if rng.unit() < 0.5 {
                    // b != 0 commuting branch; n = 2 has no Y-trace to absorb
                    // the unimodularity condition, which then reads c + d' = 0
                    let b = rng.signed_range(0.5, 1.5);
                    let a = rng.range(-1.0, 1.0);
                    let c = if m == 0 { -a * a / b } else { rng.range(-1.0, 1.0) };
                    (a, b, c, -a * c / b, c + 2.0 * a * a / b)
                } else {
                    // b = 0 forces a = 0; then either c = 0 or d' = c
                    let c = if m == 0 || rng.unit() < 0.5 { 0.0 } else { rng.signed_range(0.3, 1.2) };
                    let c_p = rng.range(-1.0, 1.0);
                    let d_p = if m == 0 {
                        0.0
                    } else if c == 0.0 {
                        rng.range(-1.0, 1.0)
                    } else {
                        c
                    };
                    (0.0, 0.0, c, c_p, d_p)
                }
            }
        },
    };

    // unimodularity: Im tr(Y_1) = 0 and tr(Z_2) = -i (c + d')/(sqrt(2) delta')
    let im_y2_target = |tr_y1: f64| -> f64 { -(c + d_p) / (2.0 * SQRT2 * dprime) - t_im * tr_y1 };

    let (y1, y2, v1, v2) = match params.target {
        MetricTarget::Kahler => {
            // Z_1 = Z_2 = 0: Y_1 Hermitian diag, Y_2 = H_2 - t Y_1
            let mu: Vec<f64> = (0..m).map(|_| rng.range(-1.0, 1.0)).collect();
            let h2: Vec<f64> = (0..m).map(|_| rng.range(-1.0, 1.0)).collect();
            let y1 = CMatrix::from_fn(m, m, |i, jj| {
                if i == jj {
                    Complex64::new(mu[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let y2 = CMatrix::from_fn(m, m, |i, jj| {
                if i == jj {
                    Complex64::new(h2[i], -t_im * mu[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            (y1, y2, CMatrix::zeros(m, 2), CMatrix::zeros(m, 2))
        }
        MetricTarget::Pluriclosed => {
            // diagonal family with Z_1 = Z_2 = 0 and v supported on the
            // active coordinates
            let active = if m >= 2 && rng.unit() < 0.5 { m - 1 } else { m };
            let mut mu = vec![0.0f64; m];
            let mut rho = vec![0.0f64; m];
            for i in 0..active {
                mu[i] = rng.signed_range(0.4, 1.3);
                rho[i] = rng.range(-1.0, 1.0);
            }
            let y1 = CMatrix::from_fn(m, m, |i, jj| {
                if i == jj {
                    Complex64::new(mu[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let nu: Vec<Complex64> = (0..m).map(|i| Complex64::new(rho[i], -t_im * mu[i])).collect();
            let y2 = CMatrix::from_fn(m, m, |i, jj| {
                if i == jj {
                    nu[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let xi = CVector::from_fn(m, |i, _| {
                if i < active {
                    rng.complex(0.8)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let ratio =
                |i: usize| if mu[i] != 0.0 { nu[i] / mu[i] } else { Complex64::new(0.0, 0.0) };
            let v11 = xi.clone();
            let v21 = CVector::from_fn(m, |i, _| ratio(i).conj() * xi[i]);
            let v12 = CVector::from_fn(m, |i, _| ratio(i) * xi[i]);
            let v22 = CVector::from_fn(m, |i, _| ratio(i).conj() * v12[i]);
            let v1 = CMatrix::from_fn(m, 2, |i, bcol| if bcol == 0 { v11[i] } else { v21[i] });
            let v2 = CMatrix::from_fn(m, 2, |i, bcol| if bcol == 0 { v12[i] } else { v22[i] });
            (y1, y2, v1, v2)
        }
        _ => {
            // commuting diagonal pair with the unimodularity trace fix
            if m == 0 && (c + d_p).abs() > 1e-12 {
                return Err(Error::GenerationFailed {
                    seed: params.seed,
                    reason: "n = 2 abelian-quotient unimodularity needs c + d' = 0".into(),
                });
            }
            let mut y1 = CMatrix::zeros(m, m);
            let mut y2 = CMatrix::zeros(m, m);
            let mut tr1 = 0.0;
            for i in 0..m {
                let re = rng.range(-1.0, 1.0);
                y1[(i, i)] = Complex64::new(re, 0.0);
                tr1 += re;
            }
            let target = im_y2_target(tr1);
            for i in 0..m {
                let im = if i == 0 { target } else { 0.0 };
                y2[(i, i)] = Complex64::new(rng.range(-1.0, 1.0), im);
            }
            let (e1, e2) = expected_e_blocks(a, b, c, c_p, d_p, 0.0, delta);
            let balanced_row = params.target == MetricTarget::Balanced;
            let (v1, v2) = sample_v_blocks(
                rng,
                m,
                &e1,
                &e2,
                &y1,
                &y2,
                Complex64::new(0.0, 0.0),
                balanced_row,
            )?;
            (y1, y2, v1, v2)
        }
    };

    let (mut y1, mut y2, mut v1, mut v2) = (y1, y2, v1, v2);
    let u = random_unitary(rng, m);
    conjugate_blocks(&u, &mut y1, &mut y2, &mut v1, &mut v2);
    let data = BData { delta, a, b, c, c_p, d_p, y1, y2, v1, v2 };
    let inst = instance_from_b_data(n, &data, Some(*params))?;

    let tol = Tolerance::default();
    let frame = inst.admissible_frame(tol)?;
    let st = inst.tensors(&frame.frame);
    match params.target {
        MetricTarget::Kahler => {
            let kd = kahler_defect(&st);
            if kd > 1e-10 {
                return Err(Error::InconsistentInstance(format!("Kähler target missed: {kd:.3e}")));
            }
        }
        MetricTarget::Balanced => {
            let bd = balanced_defect(&st);
            if bd > 1e-10 {
                return Err(Error::InconsistentInstance(format!("balanced target missed: {bd:.3e}")));
            }
            if !inst.is_unimodular(tol) {
                return Err(Error::InconsistentInstance("balanced target must be unimodular".into()));
            }
        }
        MetricTarget::Pluriclosed => {
            let pd = pluriclosed_defect(&st);
            if pd > 1e-9 {
                return Err(Error::InconsistentInstance(format!(
                    "pluriclosed target missed: {pd:.3e}"
                )));
            }
        }
        MetricTarget::None => {}
    }
    if let Some(r0) = params.r0 {
        let rb = crate::frames::extract_reduced_b(&inst.algebra, &frame, &st, &inst.metric, tol)?;
        if rb.r0 != r0 {
            return Err(Error::InconsistentInstance(format!(
                "requested r0 = {r0}, generated r0 = {}",
                rb.r0
            )));
        }
    }
    Ok(inst)
}

// ---------------------------------------------------------------------
// public entry points
// ---------------------------------------------------------------------

pub fn gen(params: &GenParams) -> Result<Instance> {
    let mut rng = SeededRng::new(params.seed);
    let mut last: Option<Error> = None;
    for attempt in 0..30u64 {
        let mut sub = rng.fork(attempt);
        let r = match params.case {
            CaseTag::MainNonabelian => gen_main_once(params, &mut sub),
            CaseTag::JaEqualsA => gen_a_once(params, &mut sub),
            CaseTag::AbelianQuotient => gen_b_once(params, &mut sub),
        };
        match r {
            Ok(inst) => return Ok(inst),
            Err(e @ Error::GenerationFailed { .. }) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::GenerationFailed {
        seed: params.seed,
        reason: format!(
            "retry budget exhausted; last error: {}",
            last.map(|e| e.to_string()).unwrap_or_else(|| "none".into())
        ),
    })
}

pub fn gen_main(params: &GenParams) -> Result<Instance> {
    assert_eq!(params.case, CaseTag::MainNonabelian);
    gen(params)
}

pub fn gen_a(params: &GenParams) -> Result<Instance> {
    assert_eq!(params.case, CaseTag::JaEqualsA);
    gen(params)
}

pub fn gen_b(params: &GenParams) -> Result<Instance> {
    assert_eq!(params.case, CaseTag::AbelianQuotient);
    gen(params)
}

/// Construct a balanced metric on the same `(g, J, a)` by a frame change,
/// for `Ja = a` instances and abelian-quotient `r0 = 0` instances whose
/// v-blocks sit in the range of the Y-blocks. Pairs produced this way feed
/// the Kählerization pipeline.
pub fn balanced_mate(inst: &Instance, seed: u64) -> Result<Instance> {
    let tol = Tolerance::default();
    let case = inst.case(tol)?;
    let af = inst.admissible_frame(tol)?;
    let st = inst.tensors(&af.frame);
    let n = af.n();
    let mut rng = SeededRng::new(seed);
    let mut last: Option<Error> = None;

    for _ in 0..12 {
        let attempt: Result<Instance> = (|| {
            let mchg = match case {
                CaseTag::JaEqualsA => {
                    let r = crate::frames::extract_reduced_a(&af, &st, tol)?;
                    let p = rng.range(0.6, 1.6);
                    // v~ = p P^{-1} (p v - lambda abar + Y abar + Z a) = 0;
                    // with lambda = 0, Z = 0 this is Y abar = -p v
                    let rhs = r.v.map(|w| w * Complex64::new(-p, 0.0));
                    let abar = crate::theorems::solve_on_range(&r.y, &rhs, 1e-8, "p*v in range(Y)")?;
                    let a_vec = abar.map(|w| w.conj());
                    let mut mchg = CMatrix::identity(n, n);
                    mchg[(0, 0)] = Complex64::new(p, 0.0);
                    for k in 1..n {
                        mchg[(k, 0)] = a_vec[k - 1];
                        mchg[(k, k)] = Complex64::new(rng.range(0.6, 1.6), 0.0);
                    }
                    mchg
                }
                CaseTag::AbelianQuotient => {
                    let r = crate::frames::extract_reduced_b(&inst.algebra, &af, &st, &inst.metric, tol)?;
                    if r.r0 != 0 {
                        return Err(Error::PreconditionViolated(
                            "balanced mates are constructed in the r0 = 0 regime".into(),
                        ));
                    }
                    let m = n - 2;
                    let p1 = rng.range(0.7, 1.4);
                    let p2 = rng.range(0.7, 1.4);
                    let mu = rng.complex(0.4);
                    let a_vec = CVector::from_fn(m, |_, _| rng.complex(0.3));
                    let abar = a_vec.map(|w| w.conj());
                    let v11 = r.v1.column(0).into_owned();
                    let v21 = r.v1.column(1).into_owned();
                    let v12 = r.v2.column(0).into_owned();
                    let v22 = r.v2.column(1).into_owned();
                    // solve (mu Y_1 + p_2 Y_2) bbar = -(p1^2 v11 + p1 Y1 abar
                    //   + p2^2 v22 + p2 mu v21 + p2 conj(mu) v12 + |mu|^2 v11)
                    let op = r.y1.map(|w| w * mu) + r.y2.map(|w| w * Complex64::new(p2, 0.0));
                    let rhs = -(v11.scale_complex(Complex64::new(p1 * p1 + mu.norm_sqr(), 0.0))
                        + (&r.y1 * &abar).scale_complex(Complex64::new(p1, 0.0))
                        + v22.scale_complex(Complex64::new(p2 * p2, 0.0))
                        + v21.scale_complex(mu * p2)
                        + v12.scale_complex(mu.conj() * p2));
                    let bbar = crate::theorems::solve_on_range(&op, &rhs, 1e-8, "balanced-mate v-sum solve")?;
                    let b_vec = bbar.map(|w| w.conj());
                    let mut mchg = CMatrix::identity(n, n);
                    mchg[(0, 0)] = Complex64::new(p1, 0.0);
                    mchg[(1, 1)] = Complex64::new(p2, 0.0);
                    mchg[(0, 1)] = mu;
                    for k in 0..m {
                        mchg[(k + 2, 0)] = a_vec[k];
                        mchg[(k + 2, 1)] = b_vec[k];
                        mchg[(k + 2, k + 2)] = Complex64::new(rng.range(0.7, 1.4), 0.0);
                    }
                    mchg
                }
                CaseTag::MainNonabelian => {
                    return Err(Error::PreconditionViolated(
                        "main-nonabelian instances have no balanced-mate construction".into(),
                    ));
                }
            };
            let dim = 2 * n;
            let mut w: Vec<CVector> = Vec::with_capacity(n);
            for jcol in 0..n {
                let mut acc = CVector::from_element(dim, Complex64::new(0.0, 0.0));
                for arow in 0..n {
                    acc += af.frame.e[arow].scale_complex(mchg[(arow, jcol)]);
                }
                w.push(acc);
            }
            let metric = crate::hermitian::metric_from_frame(&w, &inst.j)?;
            let mate = inst.with_metric(metric)?;
            let mate_frame = mate.admissible_frame(tol)?;
            let bd = balanced_defect(&mate.tensors(&mate_frame.frame));
            if bd > 1e-10 {
                return Err(Error::InconsistentInstance(format!(
                    "mate construction missed the balanced gate: {bd:.3e}"
                )));
            }
            Ok(mate)
        })();
        match attempt {
            Ok(m) => return Ok(m),
            Err(e @ Error::PreconditionViolated(_)) => return Err(e),
            Err(e @ Error::RangeConsistency(_)) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::GenerationFailed {
        seed,
        reason: format!(
            "balanced mate retries exhausted; last: {}",
            last.map(|e| e.to_string()).unwrap_or_default()
        ),
    })
}

/// Deterministic named fixtures: an abelian algebra, one instance per
/// case/type at n = 2 and n = 3, and the explicit n = 2 generic example.
pub fn catalog() -> Vec<(String, Instance)> {
    let mut out = Vec::new();

    // abelian algebra, Ja = a trivially
    let abelian = instance_from_a_data(
        2,
        &AData {
            lambda: 0.0,
            v: CVector::from_element(1, Complex64::new(0.0, 0.0)),
            x: CMatrix::zeros(1, 1),
            y: CMatrix::zeros(1, 1),
            z: CMatrix::zeros(1, 1),
        },
        None,
    )
    .expect("abelian fixture");
    out.push(("abelian-n2".to_string(), abelian));

    // the explicit n = 2 generic fixture: sigma = 1, b = 2, a = 0
    // (c = 0, c' = 0, d' = -2); not unimodular
    let generic_n2 = instance_from_main_data(
        2,
        &MainData {
            sigma: 1.0,
            delta: 0.0,
            a: 0.0,
            b: 2.0,
            c: 0.0,
            c_p: 0.0,
            d_p: -2.0,
            y1: CMatrix::zeros(0, 0),
            y2: CMatrix::zeros(0, 0),
            v1: CMatrix::zeros(0, 2),
            v2: CMatrix::zeros(0, 2),
        },
        None,
    )
    .expect("generic n2 fixture");
    out.push(("main-generic-n2".to_string(), generic_n2));

    let mk = |n: usize, case: CaseTag, jtype: Option<JType>, seed: u64| GenParams {
        n,
        case,
        jtype,
        r0: None,
        target: MetricTarget::None,
        seed,
    };
    let entries: Vec<(&str, GenParams)> = vec![
        ("main-half-generic-n2", mk(2, CaseTag::MainNonabelian, Some(JType::HalfGeneric), 101)),
        ("main-degenerate-n2", mk(2, CaseTag::MainNonabelian, Some(JType::Degenerate), 102)),
        ("main-generic-n3", mk(3, CaseTag::MainNonabelian, Some(JType::Generic), 103)),
        ("main-half-generic-n3", mk(3, CaseTag::MainNonabelian, Some(JType::HalfGeneric), 104)),
        ("main-degenerate-n3", mk(3, CaseTag::MainNonabelian, Some(JType::Degenerate), 105)),
        ("a-case-n2", mk(2, CaseTag::JaEqualsA, None, 106)),
        ("a-case-n3", mk(3, CaseTag::JaEqualsA, None, 107)),
        ("b-case-n2", mk(2, CaseTag::AbelianQuotient, None, 108)),
        ("b-case-n3", mk(3, CaseTag::AbelianQuotient, None, 109)),
        ("a-case-kahler-n3", {
            let mut p = mk(3, CaseTag::JaEqualsA, None, 110);
            p.target = MetricTarget::Kahler;
            p
        }),
        ("b-case-kahler-n3", {
            let mut p = mk(3, CaseTag::AbelianQuotient, None, 111);
            p.target = MetricTarget::Kahler;
            p.r0 = Some(0);
            p
        }),
    ];
    for (name, params) in entries {
        let inst = gen(&params).unwrap_or_else(|e| panic!("catalog entry {name}: {e}"));
        out.push((name.to_string(), inst));
    }
    out
}
