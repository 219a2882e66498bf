//! Ideal-chain computation, case splitting, admissible-frame construction
//! for the three regimes, and extraction of the frame-adapted reduced
//! invariants.
//!
//! Index conventions are 0-based internally; comments quote the 1-based
//! names: the distinguished frame legs are e_1, e_2 (indices 0, 1) and the
//! ideal legs e_3..e_n (indices 2..n-1).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{
    compute_cd, j_adapted_basis_in, ComplexStructure, HermitianMetric, StructureTensors,
    UnitaryFrame,
};
use crate::liealg::{RealLieAlgebra, Subspace};
use crate::linalg::{CMatrix, CVector, RVector, Tolerance};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Dead zone for sign/zero decisions on reduced constants.
pub const DEAD_ZONE: f64 = 1e-9;

/// Reject frames with |delta| above this (the entry formulas divide by
/// delta' and delta'^2).
pub const NEAR_DEGENERATE_DELTA: f64 = 1.0 - 1e-8;

/// The chain `a_J ⊆ b ⊆ a ⊆ a'`.
#[derive(Debug, Clone)]
pub struct IdealChain {
    pub a: Subspace,
    pub a_j: Subspace,
    pub a_prime: Subspace,
    pub b: Subspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// `Ja = a`
    JaEqualsA,
    /// `Ja != a` and `g/a` non-abelian
    MainNonabelian,
    /// `Ja != a` and `g/a` abelian
    AbelianQuotient,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseTag::JaEqualsA => "Ja=a",
            CaseTag::MainNonabelian => "main-nonabelian",
            CaseTag::AbelianQuotient => "abelian-quotient",
        };
        write!(f, "{s}")
    }
}

/// Trichotomy of `J` in the main case: generic (b != 0), half-generic
/// (b = 0, c != 0), degenerate (b = c = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JType {
    Generic,
    HalfGeneric,
    Degenerate,
}

impl std::fmt::Display for JType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            JType::Generic => "generic",
            JType::HalfGeneric => "half-generic",
            JType::Degenerate => "degenerate",
        };
        write!(f, "{s}")
    }
}

/// Verify that `a` is an abelian ideal of codimension 2.
pub fn check_codim2_abelian_ideal(
    g: &RealLieAlgebra,
    a: &Subspace,
    tol: Tolerance,
) -> Result<()> {
    if a.ambient_dim() != g.dim() {
        return Err(Error::DimensionMismatch(
            "ideal ambient dimension differs from the algebra".into(),
        ));
    }
    if a.dim() + 2 != g.dim() {
        return Err(Error::PreconditionViolated(format!(
            "ideal must have codimension 2 (dim {} in ambient {})",
            a.dim(),
            g.dim()
        )));
    }
    if !g.is_ideal(a, tol)? {
        return Err(Error::PreconditionViolated("subspace is not an ideal".into()));
    }
    if !g.is_abelian_on(a, tol)? {
        return Err(Error::PreconditionViolated("ideal is not abelian".into()));
    }
    Ok(())
}

/// Compute `a_J = a ∩ Ja`, `a' = a + [g,g]`, `b = a ∩ Ja'` and, when the
/// main-case assumptions hold, validate the chain dimensions and the two
/// membership statements.
pub fn compute_ideal_chain(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    tol: Tolerance,
) -> Result<IdealChain> {
    check_codim2_abelian_ideal(g, a, tol)?;
    let ja = a.map(j.matrix());
    let a_j = a.intersect(&ja)?;
    let a_prime = a.sum(&g.derived_algebra())?;
    let b = a.intersect(&a_prime.map(j.matrix()))?;
    let chain = IdealChain { a: a.clone(), a_j, a_prime, b };

    let dim = g.dim();
    let ja_equals_a = chain.a_j.dim() == chain.a.dim();
    if !ja_equals_a && quotient_nonabelian(g, a, tol)? {
        let dims = (chain.a_j.dim(), chain.b.dim(), chain.a.dim(), chain.a_prime.dim());
        let expect = (dim - 4, dim - 3, dim - 2, dim - 1);
        if dims != expect {
            return Err(Error::InconsistentInstance(format!(
                "ideal chain dims {dims:?} differ from the expected {expect:?}"
            )));
        }
        if !g.is_ideal(&chain.a_j, tol)? {
            return Err(Error::InconsistentInstance("a_J is not an ideal".into()));
        }
        // x in b \ a_J  =>  Jx in a' \ a
        let x = in_first_not_second(&chain.b, &chain.a_j)?;
        let jx = j.apply(&x);
        if !chain.a_prime.contains(&jx) || chain.a.contains(&jx) {
            return Err(Error::InconsistentInstance(
                "Jx must lie in a' but outside a for x in b \\ a_J".into(),
            ));
        }
        // y in a \ b  =>  Jy not in a'
        let y = in_first_not_second(&chain.a, &chain.b)?;
        if chain.a_prime.contains(&j.apply(&y)) {
            return Err(Error::InconsistentInstance(
                "Jy must lie outside a' for y in a \\ b".into(),
            ));
        }
    }
    Ok(chain)
}

fn in_first_not_second(s: &Subspace, t: &Subspace) -> Result<RVector> {
    for v in s.basis() {
        if !t.contains(v) {
            let r = v - t.project(v);
            return Ok(r.unscale(r.norm()));
        }
    }
    Err(Error::DegenerateInput("subspaces coincide".into()))
}

fn quotient_nonabelian(g: &RealLieAlgebra, a: &Subspace, tol: Tolerance) -> Result<bool> {
    let comp = a.complement();
    if comp.dim() != 2 {
        return Err(Error::DimensionMismatch("ideal complement is not 2-dimensional".into()));
    }
    let w = g.bracket(&comp.basis()[0], &comp.basis()[1])?;
    let residual = (&w - a.project(&w)).norm();
    Ok(residual > tol.bound(1.0))
}

/// Decide the case of `(g, J, a)`.
pub fn case_split(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    tol: Tolerance,
) -> Result<CaseTag> {
    check_codim2_abelian_ideal(g, a, tol)?;
    let ja = a.map(j.matrix());
    if a.intersect(&ja)?.dim() == a.dim() {
        return Ok(CaseTag::JaEqualsA);
    }
    if quotient_nonabelian(g, a, tol)? {
        Ok(CaseTag::MainNonabelian)
    } else {
        Ok(CaseTag::AbelianQuotient)
    }
}

/// An admissible frame: the unitary frame together with the distinguished
/// real vectors and the angle invariant. In the `Ja = a` case there is no
/// `y` leg; `delta = 0`, `delta_prime = 1` and `y` is the zero vector.
#[derive(Debug, Clone)]
pub struct AdmissibleFrame {
    pub case: CaseTag,
    pub frame: UnitaryFrame,
    pub x: RVector,
    pub y: RVector,
    pub delta: f64,
    pub delta_prime: f64,
}

impl AdmissibleFrame {
    /// `t = i delta / delta'`.
    pub fn t(&self) -> Complex64 {
        Complex64::new(0.0, self.delta / self.delta_prime)
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    /// `Jx` recovered from `e_1 = (x - iJx)/sqrt(2)`.
    pub fn jx(&self) -> RVector {
        RVector::from_fn(self.x.len(), |t, _| -SQRT2 * self.frame.e[0][t].im)
    }

    /// `Jy = -delta x + delta' J x_2` from `y = delta Jx + delta' x_2`.
    pub fn jy(&self) -> RVector {
        let jx2 = RVector::from_fn(self.x.len(), |t, _| -SQRT2 * self.frame.e[1][t].im);
        jx2.scale(self.delta_prime) - self.x.scale(self.delta)
    }
}

/// Make the coordinate of largest magnitude positive (ties to the lowest
/// index); pins the `±` freedom of the distinguished vectors.
fn sign_fix(v: &RVector) -> RVector {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-14 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v.clone()
    } else {
        v.clone()
    }
}

fn unit_direction(s: &Subspace, metric: &HermitianMetric, what: &str) -> Result<RVector> {
    if s.dim() != 1 {
        return Err(Error::DegenerateInput(format!(
            "{what} must be 1-dimensional, got dim {}",
            s.dim()
        )));
    }
    let v = sign_fix(&s.basis()[0]);
    Ok(v.unscale(metric.norm(&v)))
}

/// G-orthonormal basis of a subspace by pivoted Gram-Schmidt on its stored
/// basis.
fn g_orthonormal_basis(s: &Subspace, metric: &HermitianMetric) -> Vec<RVector> {
    let mut out: Vec<RVector> = Vec::new();
    let cands = s.basis();
    for _ in 0..s.dim() {
        let mut best: Option<(usize, f64)> = None;
        for (idx, cnd) in cands.iter().enumerate() {
            let mut r = cnd.clone();
            for q in &out {
                r -= q * metric.pair(&r, q);
            }
            let norm = metric.norm(&r);
            if norm <= 1e-10 {
                continue;
            }
            if best.map(|(_, bn)| norm > bn + 1e-14 * (1.0 + bn)).unwrap_or(true) {
                best = Some((idx, norm));
            }
        }
        let Some((idx, _)) = best else { break };
        let mut r = cands[idx].clone();
        for _ in 0..2 {
            for q in &out {
                r -= q * metric.pair(&r, q);
            }
        }
        out.push(r.unscale(metric.norm(&r)));
    }
    out
}

fn delta_of(
    j: &ComplexStructure,
    metric: &HermitianMetric,
    x: &RVector,
    y: &RVector,
) -> Result<(f64, f64)> {
    let delta = metric.pair(&j.apply(x), y);
    if delta.abs() >= NEAR_DEGENERATE_DELTA {
        return Err(Error::NearDegenerate(format!(
            "|delta| = {:.12} is too close to 1",
            delta.abs()
        )));
    }
    Ok((delta, (1.0 - delta * delta).sqrt()))
}

fn assemble_frame(
    case: CaseTag,
    j: &ComplexStructure,
    metric: &HermitianMetric,
    x: RVector,
    y: RVector,
    delta: f64,
    delta_prime: f64,
    ideal_part: &Subspace,
) -> Result<AdmissibleFrame> {
    // e_2 is generated by (y - delta Jx)/delta'
    let x2 = (&y - j.apply(&x).scale(delta)).unscale(delta_prime);
    let mut gens = vec![x.clone(), x2];
    let m = ideal_part.dim() / 2;
    gens.extend(j_adapted_basis_in(ideal_part.basis(), m, j, metric)?);
    let frame = UnitaryFrame::from_adapted(gens, j);
    let res = frame.gram_residual(metric);
    if res > 1e-10 {
        return Err(Error::InconsistentInstance(format!(
            "admissible frame fails the Gram identity (residual {res:.3e})"
        )));
    }
    Ok(AdmissibleFrame { case, frame, x, y, delta, delta_prime })
}

/// Admissible frame in the main (`Ja != a`, non-abelian quotient) case.
pub fn build_admissible_frame_main(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<AdmissibleFrame> {
    let case = case_split(g, j, a, tol)?;
    if case != CaseTag::MainNonabelian {
        return Err(Error::PreconditionViolated(format!(
            "main-case frame requested for a {case} instance"
        )));
    }
    let chain = compute_ideal_chain(g, j, a, tol)?;
    let x_dir = chain.b.ortho_complement_in(&chain.a_j, metric.matrix())?;
    let x = unit_direction(&x_dir, metric, "b ∩ a_J^perp")?;
    let y_dir = chain.a.ortho_complement_in(&chain.b, metric.matrix())?;
    let y = unit_direction(&y_dir, metric, "a ∩ b^perp")?;
    let (delta, delta_prime) = delta_of(j, metric, &x, &y)?;
    assemble_frame(case, j, metric, x, y, delta, delta_prime, &chain.a_j)
}

/// Admissible frame in the `Ja = a` case: e_2..e_n span `a^{1,0}`, e_1
/// completes the frame, with its phase rotated so that `D^1_{11} >= 0`.
pub fn build_admissible_frame_a_case(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<AdmissibleFrame> {
    let case = case_split(g, j, a, tol)?;
    if case != CaseTag::JaEqualsA {
        return Err(Error::PreconditionViolated(format!(
            "Ja=a frame requested for a {case} instance"
        )));
    }
    let perp = Subspace::full(g.dim()).ortho_complement_in(a, metric.matrix())?;
    if perp.dim() != 2 {
        return Err(Error::DegenerateInput("a^perp must be 2-dimensional".into()));
    }
    let n = g.dim() / 2;
    let x1 = sign_fix(&j_adapted_basis_in(perp.basis(), 1, j, metric)?[0]);
    let x1 = x1.unscale(metric.norm(&x1));
    let ideal_gens = j_adapted_basis_in(a.basis(), n - 1, j, metric)?;

    // rotate e_1 within span{x_1, J x_1} so that lambda = D^1_{11} comes
    // out real nonnegative
    let mut gens = vec![x1.clone()];
    gens.extend(ideal_gens.iter().cloned());
    let frame = UnitaryFrame::from_adapted(gens.clone(), j);
    let st = compute_cd(g, metric, &frame);
    let d111 = st.d(0, 0, 0);
    if d111.norm() > 1e-12 {
        let mu = d111.conj().unscale(d111.norm());
        gens[0] = x1.scale(mu.re) + j.apply(&x1).scale(mu.im);
    }
    let frame = UnitaryFrame::from_adapted(gens.clone(), j);
    let res = frame.gram_residual(metric);
    if res > 1e-10 {
        return Err(Error::InconsistentInstance(format!(
            "Ja=a admissible frame fails the Gram identity (residual {res:.3e})"
        )));
    }
    Ok(AdmissibleFrame {
        case,
        frame,
        x: gens[0].clone(),
        y: RVector::zeros(g.dim()),
        delta: 0.0,
        delta_prime: 1.0,
    })
}

/// Admissible frame in the abelian-quotient case: `{x, y}` is a rotated
/// orthonormal basis of `V = a ∩ a_J^perp` chosen so that `tr(A_x) = 0`.
pub fn build_admissible_frame_b_case(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<AdmissibleFrame> {
    let case = case_split(g, j, a, tol)?;
    if case != CaseTag::AbelianQuotient {
        return Err(Error::PreconditionViolated(format!(
            "abelian-quotient frame requested for a {case} instance"
        )));
    }
    let chain = compute_ideal_chain(g, j, a, tol)?;
    let v_space = chain.a.ortho_complement_in(&chain.a_j, metric.matrix())?;
    if v_space.dim() != 2 {
        return Err(Error::DegenerateInput("V = a ∩ a_J^perp must be 2-dimensional".into()));
    }
    let vb = g_orthonormal_basis(&v_space, metric);
    let (x0, y0) = (vb[0].clone(), vb[1].clone());

    // tr(A_{x(theta)}) is linear in the rotation: cos(t) tau_x + sin(t) tau_y
    let trace_of = |w: &RVector| -> Result<f64> {
        let jw = j.apply(w);
        let t = metric.pair(&g.bracket(&jw, &x0)?, &x0) + metric.pair(&g.bracket(&jw, &y0)?, &y0);
        Ok(t)
    };
    let tau_x = trace_of(&x0)?;
    let tau_y = trace_of(&y0)?;
    let theta = if tau_x.abs() < 1e-13 && tau_y.abs() < 1e-13 {
        0.0
    } else {
        (-tau_x).atan2(tau_y)
    };
    let (s, c) = theta.sin_cos();
    let x = sign_fix(&(x0.scale(c) + y0.scale(s)));
    let y = sign_fix(&(x0.scale(-s) + y0.scale(c)));
    let (delta, delta_prime) = delta_of(j, metric, &x, &y)?;
    assemble_frame(case, j, metric, x, y, delta, delta_prime, &chain.a_j)
}

/// Adopt explicitly given (1,0)-frame vectors as an admissible frame for
/// the metric that makes them unitary. The angle invariant is recovered
/// from the requirement `y = delta Jx + delta' x_2 ∈ a`; the Gram identity
/// and the membership are validated.
pub fn adopt_admissible_frame(
    case: CaseTag,
    j: &ComplexStructure,
    a: &Subspace,
    metric: &HermitianMetric,
    vectors: &[crate::linalg::CVector],
) -> Result<AdmissibleFrame> {
    let dim = j.dim();
    let gens: Vec<RVector> = vectors
        .iter()
        .map(|w| RVector::from_fn(dim, |t, _| SQRT2 * w[t].re))
        .collect();
    let frame = UnitaryFrame::from_adapted(gens.clone(), j);
    let res = frame.gram_residual(metric);
    if res > 1e-9 {
        return Err(Error::InconsistentInstance(format!(
            "adopted frame fails the Gram identity (residual {res:.3e})"
        )));
    }
    let x = gens[0].clone();
    if case == CaseTag::JaEqualsA {
        return Ok(AdmissibleFrame {
            case,
            frame,
            x,
            y: RVector::zeros(dim),
            delta: 0.0,
            delta_prime: 1.0,
        });
    }
    let x2 = gens[1].clone();
    let jx = j.apply(&x);
    let r_j = &jx - a.project(&jx);
    let r_2 = &x2 - a.project(&x2);
    let (delta, delta_prime) = if r_j.norm() > 1e-9 {
        let q = -r_2.dot(&r_j) / r_j.dot(&r_j);
        let dp = 1.0 / (1.0 + q * q).sqrt();
        (q * dp, dp)
    } else {
        (0.0, 1.0)
    };
    let y = jx.scale(delta) + x2.scale(delta_prime);
    if !a.contains(&y) {
        return Err(Error::InconsistentInstance(
            "adopted frame: no angle makes y = delta Jx + delta' x_2 land in a".into(),
        ));
    }
    if delta.abs() >= NEAR_DEGENERATE_DELTA {
        return Err(Error::NearDegenerate(format!("adopted frame angle |delta| = {}", delta.abs())));
    }
    Ok(AdmissibleFrame { case, frame, x, y, delta, delta_prime })
}

/// Build the admissible frame for whichever case the instance is in.
pub fn build_admissible_frame(
    g: &RealLieAlgebra,
    j: &ComplexStructure,
    a: &Subspace,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<AdmissibleFrame> {
    match case_split(g, j, a, tol)? {
        CaseTag::MainNonabelian => build_admissible_frame_main(g, j, a, metric, tol),
        CaseTag::JaEqualsA => build_admissible_frame_a_case(g, j, a, metric, tol),
        CaseTag::AbelianQuotient => build_admissible_frame_b_case(g, j, a, metric, tol),
    }
}

/// Reduced invariants of the main case.
#[derive(Debug, Clone)]
pub struct ReducedMain {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub sigma: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub e1: CMatrix,
    pub e2: CMatrix,
    /// (n-2) x 2 blocks; column beta holds the vector v^{beta+1}_alpha
    pub v1: CMatrix,
    pub v2: CMatrix,
    pub y1: CMatrix,
    pub y2: CMatrix,
    pub jtype: JType,
}

impl ReducedMain {
    pub fn t(&self) -> Complex64 {
        Complex64::new(0.0, self.delta / self.delta_prime)
    }

    /// `i sigma / (sqrt(2) delta')`, the eigen-coefficient of the matrix
    /// Jacobi identities.
    pub fn kappa(&self) -> Complex64 {
        Complex64::new(0.0, self.sigma / (SQRT2 * self.delta_prime))
    }
}

/// The `E_1`, `E_2` blocks from the closed-form entry formulas; passing
/// `sigma = 0` yields the abelian-quotient variant.
pub fn expected_e_blocks(
    a: f64,
    b: f64,
    c: f64,
    c_p: f64,
    d_p: f64,
    sigma: f64,
    delta: f64,
) -> (CMatrix, CMatrix) {
    let dp2 = 1.0 - delta * delta;
    let dprime = dp2.sqrt();
    let i = Complex64::new(0.0, 1.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let e1 = CMatrix::from_fn(2, 2, |r, cx| match (r, cx) {
        (0, 0) => (re(b * delta) + i * re(a)) / re(SQRT2),
        (0, 1) => (re(-2.0 * a * delta) + i * re(c + b * delta * delta)) / re(SQRT2 * dprime),
        (1, 0) => i * re(b * dprime) / re(SQRT2),
        _ => -(re(b * delta) + i * re(a)) / re(SQRT2),
    });
    let e2 = CMatrix::from_fn(2, 2, |r, cx| match (r, cx) {
        (0, 0) => i * re(c - sigma - b * delta * delta) / re(SQRT2 * dprime),
        (0, 1) => {
            (i * re(c_p + a * delta * delta) + re(delta * (d_p + b * delta * delta + sigma)))
                / re(SQRT2 * dp2)
        }
        (1, 0) => (re(b * delta) - i * re(a)) / re(SQRT2),
        _ => i * re(d_p + b * delta * delta) / re(SQRT2 * dprime),
    });
    (e1, e2)
}

/// Residual of the Lemma-5 relations for the given type.
pub fn lemma5_residual(
    jtype: JType,
    a: f64,
    b: f64,
    c: f64,
    c_p: f64,
    d_p: f64,
    sigma: f64,
) -> f64 {
    match jtype {
        JType::Generic => {
            let r1 = c + a * a / b;
            let r2 = c_p + (a / b) * (c + sigma);
            let r3 = d_p + c + 2.0 * sigma;
            r1.abs().max(r2.abs()).max(r3.abs())
        }
        JType::HalfGeneric => a.abs().max(b.abs()).max((d_p - c).abs()),
        JType::Degenerate => a.abs().max(b.abs()).max(c.abs()),
    }
}

fn bracket_coeffs_on_xy(
    g: &RealLieAlgebra,
    metric: &HermitianMetric,
    u: &RVector,
    v: &RVector,
    x: &RVector,
    y: &RVector,
) -> Result<(f64, f64)> {
    let w = g.bracket(u, v)?;
    Ok((metric.pair(&w, x), metric.pair(&w, y)))
}

fn v_block(st: &StructureTensors, alpha: usize) -> CMatrix {
    let n = st.n();
    CMatrix::from_fn(n - 2, 2, |i, beta| st.d(beta, i + 2, alpha))
}

fn y_block(st: &StructureTensors, alpha: usize) -> CMatrix {
    let n = st.n();
    CMatrix::from_fn(n - 2, n - 2, |i, j| st.d(j + 2, i + 2, alpha))
}

fn e_block(st: &StructureTensors, alpha: usize) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| st.d(j, i, alpha))
}

/// Read the main-case reduced data off an admissible frame.
pub fn extract_reduced_main(
    g: &RealLieAlgebra,
    af: &AdmissibleFrame,
    st: &StructureTensors,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<ReducedMain> {
    if af.case != CaseTag::MainNonabelian {
        return Err(Error::PreconditionViolated(
            "extract_reduced_main needs a main-case frame".into(),
        ));
    }
    let dim = g.dim();
    let x = &af.x;
    let y = &af.y;
    let jx = af.jx();
    let jy = af.jy();
    let x2 = &af.frame.x[1];
    let check_y = jx.scale(af.delta) + x2.scale(af.delta_prime);
    if (&check_y - y).norm() > 1e-9 {
        return Err(Error::InconsistentInstance(
            "frame legs do not reproduce y = delta Jx + delta' x2".into(),
        ));
    }

    let (a, b) = bracket_coeffs_on_xy(g, metric, &jx, x, x, y)?;
    let (c, d) = bracket_coeffs_on_xy(g, metric, &jx, y, x, y)?;
    let (a_p, b_p) = bracket_coeffs_on_xy(g, metric, &jy, x, x, y)?;
    let (c_p, d_p) = bracket_coeffs_on_xy(g, metric, &jy, y, x, y)?;

    // sigma from the e_1-coefficient of [Jx, Jy]
    let w = g.bracket(&jx, &jy)?;
    let wc = CVector::from_fn(dim, |t, _| Complex64::new(w[t], 0.0));
    let coef = metric.pair_c(&wc, &af.frame.conj(0));
    let sigma_c = coef * Complex64::new(0.0, -SQRT2);
    if sigma_c.im.abs() > 1e-8 {
        return Err(Error::InconsistentInstance(format!(
            "sigma reading is not real: {sigma_c}"
        )));
    }
    let sigma = sigma_c.re;
    if sigma.abs() <= DEAD_ZONE {
        return Err(Error::InconsistentInstance(
            "sigma vanishes on a main-nonabelian instance".into(),
        ));
    }
    // second read of the same constant through a' = c - sigma
    if (a_p - (c - sigma)).abs() > 1e-7 || (b_p - d).abs() > 1e-7 {
        return Err(Error::InconsistentInstance(format!(
            "(JxJy) relations fail: a'={a_p}, c-sigma={}, b'={b_p}, d={d}",
            c - sigma
        )));
    }

    let jtype = if b.abs() > DEAD_ZONE {
        JType::Generic
    } else if c.abs() > DEAD_ZONE {
        JType::HalfGeneric
    } else {
        JType::Degenerate
    };
    let l5 = lemma5_residual(jtype, a, b, c, c_p, d_p, sigma);
    if l5 > 1e-6 {
        return Err(Error::InconsistentInstance(format!(
            "Lemma-5 relations violated for type {jtype}: residual {l5:.3e}"
        )));
    }
    let _ = tol;

    Ok(ReducedMain {
        a,
        b,
        c,
        d,
        c_p,
        d_p,
        sigma,
        delta: af.delta,
        delta_prime: af.delta_prime,
        e1: e_block(st, 0),
        e2: e_block(st, 1),
        v1: v_block(st, 0),
        v2: v_block(st, 1),
        y1: y_block(st, 0),
        y2: y_block(st, 1),
        jtype,
    })
}

/// Reduced invariants of the `Ja = a` case.
#[derive(Debug, Clone)]
pub struct ReducedA {
    pub lambda: f64,
    pub v: CVector,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

/// Residual of the two Jacobi identities of the `Ja = a` reduction:
/// `lambda (X* + Y) + [X*, Y] - Z conj(Z) = 0` and
/// `lambda Z - (Z X^T + Y Z) = 0`.
pub fn jacobi_residual_a(r: &ReducedA) -> f64 {
    let xs = r.x.adjoint();
    let lam = Complex64::new(r.lambda, 0.0);
    let zbar = r.z.map(|w| w.conj());
    let eq1 = (&xs + &r.y).map(|w| w * lam) + (&xs * &r.y - &r.y * &xs) - &r.z * &zbar;
    let eq2 = r.z.map(|w| w * lam) - (&r.z * r.x.transpose() + &r.y * &r.z);
    crate::linalg::fro_norm(&eq1).max(crate::linalg::fro_norm(&eq2))
}

pub fn extract_reduced_a(
    af: &AdmissibleFrame,
    st: &StructureTensors,
    tol: Tolerance,
) -> Result<ReducedA> {
    if af.case != CaseTag::JaEqualsA {
        return Err(Error::PreconditionViolated("extract_reduced_a needs a Ja=a frame".into()));
    }
    let n = st.n();
    let m = n - 1;
    let d111 = st.d(0, 0, 0);
    if d111.im.abs() > 1e-9 || d111.re < -1e-9 {
        return Err(Error::InconsistentInstance(format!(
            "lambda = D^1_11 must be real nonnegative after the phase fix, got {d111}"
        )));
    }
    let r = ReducedA {
        lambda: d111.re.max(0.0),
        v: CVector::from_fn(m, |i, _| st.d(0, i + 1, 0)),
        x: CMatrix::from_fn(m, m, |i, j| st.c(j + 1, 0, i + 1)),
        y: CMatrix::from_fn(m, m, |i, j| st.d(j + 1, i + 1, 0)),
        z: CMatrix::from_fn(m, m, |i, j| st.d(0, i + 1, j + 1)),
    };
    let jr = jacobi_residual_a(&r);
    if jr > tol.bound(1.0).max(1e-8) {
        return Err(Error::InconsistentInstance(format!(
            "Ja=a Jacobi identities fail with residual {jr:.3e}"
        )));
    }
    Ok(r)
}

/// Reduced invariants of the abelian-quotient case.
#[derive(Debug, Clone)]
pub struct ReducedB {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// induced actions on `V ≅ a/a_J` in the `{x, y}` basis (rows are the
    /// images of x and y)
    pub a_x: nalgebra::DMatrix<f64>,
    pub a_y: nalgebra::DMatrix<f64>,
    pub r0: usize,
    pub e1: CMatrix,
    pub e2: CMatrix,
    pub v1: CMatrix,
    pub v2: CMatrix,
    pub y1: CMatrix,
    pub y2: CMatrix,
}

impl ReducedB {
    pub fn t(&self) -> Complex64 {
        Complex64::new(0.0, self.delta / self.delta_prime)
    }

    /// `Z_1 = Y_1 - Y_1^*`
    pub fn z1(&self) -> CMatrix {
        &self.y1 - self.y1.adjoint()
    }

    /// `Z_2 = Y_2 - Y_2^* + 2t Y_1^*`
    pub fn z2(&self) -> CMatrix {
        let two_t = self.t() * Complex64::new(2.0, 0.0);
        &self.y2 - self.y2.adjoint() + self.y1.adjoint().map(|w| w * two_t)
    }
}

pub fn extract_reduced_b(
    g: &RealLieAlgebra,
    af: &AdmissibleFrame,
    st: &StructureTensors,
    metric: &HermitianMetric,
    tol: Tolerance,
) -> Result<ReducedB> {
    if af.case != CaseTag::AbelianQuotient {
        return Err(Error::PreconditionViolated(
            "extract_reduced_b needs an abelian-quotient frame".into(),
        ));
    }
    let x = &af.x;
    let y = &af.y;
    let jx = af.jx();
    let jy = af.jy();

    let (a, b) = bracket_coeffs_on_xy(g, metric, &jx, x, x, y)?;
    let (c, d) = bracket_coeffs_on_xy(g, metric, &jx, y, x, y)?;
    let (c2, d2) = bracket_coeffs_on_xy(g, metric, &jy, x, x, y)?;
    let (c_p, d_p) = bracket_coeffs_on_xy(g, metric, &jy, y, x, y)?;

    if (a + d).abs() > 1e-8 {
        return Err(Error::InconsistentInstance(format!(
            "tr(A_x) = {} but the frame promises 0",
            a + d
        )));
    }
    if (c2 - c).abs() > 1e-7 || (d2 - d).abs() > 1e-7 {
        return Err(Error::InconsistentInstance(
            "[Jy, x] and [Jx, y] disagree modulo a_J".into(),
        ));
    }
    let a_x = nalgebra::DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
    let a_y = nalgebra::DMatrix::from_row_slice(2, 2, &[c, d, c_p, d_p]);
    let comm = (&a_x * &a_y - &a_y * &a_x).norm();
    if comm > tol.bound(1.0).max(1e-8) {
        return Err(Error::InconsistentInstance(format!(
            "[A_x, A_y] must vanish, got norm {comm:.3e}"
        )));
    }

    // r0 = rank of the projection of g' = [g,g] onto V = span{x, y}
    let derived = g.derived_algebra();
    let mut projected = Vec::new();
    for w in derived.basis() {
        projected.push(RVector::from_vec(vec![metric.pair(w, x), metric.pair(w, y)]));
    }
    let r0 = Subspace::from_spanning(2, &projected).dim();

    Ok(ReducedB {
        a,
        b,
        c,
        c_p,
        d_p,
        delta: af.delta,
        delta_prime: af.delta_prime,
        a_x,
        a_y,
        r0,
        e1: e_block(st, 0),
        e2: e_block(st, 1),
        v1: v_block(st, 0),
        v2: v_block(st, 1),
        y1: y_block(st, 0),
        y2: y_block(st, 1),
    })
}

/// Max deviation of the computed tensors from the Lemma-4 vanishing
/// pattern and the C-from-D relations (shared by the main and
/// abelian-quotient cases).
pub fn lemma4_pattern_residual(st: &StructureTensors, t: Complex64) -> f64 {
    let n = st.n();
    let two_t = t * Complex64::new(2.0, 0.0);
    let mut worst = 0.0f64;
    for star in 0..n {
        for i in 2..n {
            for jdx in 2..n {
                worst = worst.max(st.c(star, i, jdx).norm());
            }
            for k in 0..n {
                worst = worst.max(st.d(star, k, i).norm());
            }
        }
        for i in 2..n {
            worst = worst.max((st.c(star, 0, i) - st.d(i, star, 0).conj()).norm());
            worst = worst.max(
                (st.c(star, 1, i) - st.d(i, star, 1).conj() + two_t * st.d(i, star, 0).conj())
                    .norm(),
            );
        }
        worst = worst.max(
            (st.c(star, 0, 1) - st.d(1, star, 0).conj() + st.d(0, star, 1).conj()
                - two_t * st.d(0, star, 0).conj())
            .norm(),
        );
    }
    for alpha in 0..2 {
        for beta in 0..2 {
            for i in 2..n {
                worst = worst.max(st.c(alpha, beta, i).norm());
                worst = worst.max(st.d(i, alpha, beta).norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::build_unitary_frame;

    /// 4-dim solvable fixture: [Jy,x] = -sx, [Jy,Jx] = -sJx with basis
    /// (x, Jx, y, Jy); the ideal is a = span{x, y}. Degenerate main case,
    /// not unimodular.
    fn degenerate_n2(sigma: f64) -> (RealLieAlgebra, ComplexStructure, HermitianMetric, Subspace) {
        let g =
            RealLieAlgebra::from_entries(4, &[(0, 3, 0, -sigma), (1, 3, 1, -sigma)]).unwrap();
        let j = ComplexStructure::standard(4);
        let metric = HermitianMetric::identity(4);
        let a = Subspace::from_spanning(
            4,
            &[
                RVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
                RVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
            ],
        );
        (g, j, metric, a)
    }

    #[test]
    fn degenerate_fixture_chain_and_case() {
        let tol = Tolerance::default();
        let (g, j, _metric, a) = degenerate_n2(0.8);
        assert!(matches!(case_split(&g, &j, &a, tol).unwrap(), CaseTag::MainNonabelian));
        let chain = compute_ideal_chain(&g, &j, &a, tol).unwrap();
        assert_eq!(chain.a_j.dim(), 0);
        assert_eq!(chain.b.dim(), 1);
        assert_eq!(chain.a.dim(), 2);
        assert_eq!(chain.a_prime.dim(), 3);
    }

    #[test]
    fn degenerate_fixture_frame_and_extraction() {
        let tol = Tolerance::default();
        let sigma = 0.8;
        let (g, j, metric, a) = degenerate_n2(sigma);
        let af = build_admissible_frame_main(&g, &j, &a, &metric, tol).unwrap();
        let st = compute_cd(&g, &metric, &af.frame);
        let r = extract_reduced_main(&g, &af, &st, &metric, tol).unwrap();
        assert_eq!(r.jtype, JType::Degenerate);
        assert!((r.sigma.abs() - sigma).abs() < 1e-10);
        assert!(r.a.abs() < 1e-12 && r.b.abs() < 1e-12 && r.c.abs() < 1e-12);
        assert!(r.c_p.abs() < 1e-12 && r.d_p.abs() < 1e-12);
        assert!(r.delta.abs() < 1e-12);

        // entry formulas (D1)-(D4) against the computed tensor
        let (e1, e2) = expected_e_blocks(r.a, r.b, r.c, r.c_p, r.d_p, r.sigma, r.delta);
        assert!(crate::linalg::fro_norm(&(&r.e1 - &e1)) < 1e-10);
        assert!(crate::linalg::fro_norm(&(&r.e2 - &e2)) < 1e-10);

        // Lemma 4 pattern
        assert!(lemma4_pattern_residual(&st, af.t()) < 1e-10);

        // C^1_12 = -i sigma / (sqrt(2) delta'), C^2_12 = 0
        let expect = Complex64::new(0.0, -r.sigma / (SQRT2 * r.delta_prime));
        assert!((st.c(0, 0, 1) - expect).norm() < 1e-10);
        assert!(st.c(1, 0, 1).norm() < 1e-12);
    }

    #[test]
    fn abelian_case_split_is_ja_equals_a() {
        let tol = Tolerance::default();
        let g = RealLieAlgebra::abelian(6);
        let j = ComplexStructure::standard(6);
        let metric = HermitianMetric::identity(6);
        let a = Subspace::from_spanning(
            6,
            &(0..4)
                .map(|i| RVector::from_fn(6, |t, _| if t == i { 1.0 } else { 0.0 }))
                .collect::<Vec<_>>(),
        );
        assert!(matches!(case_split(&g, &j, &a, tol).unwrap(), CaseTag::JaEqualsA));
        let af = build_admissible_frame_a_case(&g, &j, &a, &metric, tol).unwrap();
        let st = compute_cd(&g, &metric, &af.frame);
        let r = extract_reduced_a(&af, &st, tol).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!(crate::linalg::fro_norm(&r.x) < 1e-14);
        assert!(crate::linalg::fro_norm_vec(&r.v) < 1e-14);
        let _ = build_unitary_frame(6, &j, &metric, None).unwrap();
    }

    #[test]
    fn near_degenerate_angle_is_rejected() {
        // couple Jx and y in the metric so that delta = <Jx, y> = g;
        // the J-compatible completion also couples x and Jy with -g
        let tol = Tolerance::default();
        let (g_alg, j, _, a) = degenerate_n2(0.8);
        let metric_with = |g: f64| {
            let mut m = nalgebra::DMatrix::identity(4, 4);
            m[(1, 2)] = g;
            m[(2, 1)] = g;
            m[(0, 3)] = -g;
            m[(3, 0)] = -g;
            HermitianMetric::new(m).unwrap()
        };
        let ok = metric_with(0.5);
        let af = build_admissible_frame_main(&g_alg, &j, &a, &ok, tol).unwrap();
        assert!((af.delta.abs() - 0.5).abs() < 1e-12);
        assert!(af.delta_prime > 0.0 && af.delta_prime <= 1.0);

        let bad = metric_with(1.0 - 1e-9);
        match build_admissible_frame_main(&g_alg, &j, &a, &bad, tol) {
            Err(Error::NearDegenerate(_)) => {}
            other => panic!("expected NearDegenerate, got {other:?}"),
        }
    }

    #[test]
    fn frame_determinism_bit_for_bit() {
        let tol = Tolerance::default();
        let (g, j, metric, a) = degenerate_n2(1.3);
        let f1 = build_admissible_frame_main(&g, &j, &a, &metric, tol).unwrap();
        let f2 = build_admissible_frame_main(&g, &j, &a, &metric, tol).unwrap();
        for (u, v) in f1.frame.e.iter().zip(f2.frame.e.iter()) {
            for (zu, zv) in u.iter().zip(v.iter()) {
                assert_eq!(zu.re.to_bits(), zv.re.to_bits());
                assert_eq!(zu.im.to_bits(), zv.im.to_bits());
            }
        }
    }
}
