//! Numerical search over the cone of J-compatible metrics.
//!
//! Metrics are parameterized by a lower-triangular complex factor `L` with
//! positive real diagonal acting on a fixed reference unitary frame of the
//! (1,0)-space: the candidate metric is the one whose Gram matrix on that
//! frame is `H = L L^*`, and its unitary frame is `w = e L^{-*}`. The
//! balanced/pluriclosed/Kähler residuals are evaluated directly on the
//! reframed structure tensors, so a single objective evaluation never
//! leaves tensor land. Floors reported here are empirical evidence only,
//! never a proof of nonexistence.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::Instance;
use crate::hermitian::{
    balanced_defect, build_unitary_frame, chern_torsion, kahler_defect, metric_from_frame,
    pluriclosed_defect, reframe_tensors, HermitianMetric, StructureTensors, UnitaryFrame,
};
use crate::linalg::{CMatrix, CVector, ScaleComplex};
use crate::lm::{self, LmOptions};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    Balanced,
    Pluriclosed,
    Kahler,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Objective::Balanced => "balanced",
            Objective::Pluriclosed => "pluriclosed",
            Objective::Kahler => "kahler",
        };
        write!(f, "{s}")
    }
}

/// Lower-triangular factor with positive real diagonal, unit-determinant
/// normalized.
#[derive(Debug, Clone)]
pub struct MetricParam {
    pub l: CMatrix,
}

impl MetricParam {
    pub fn identity(n: usize) -> Self {
        MetricParam { l: CMatrix::identity(n, n) }
    }

    /// Raw chart: first n entries are log-diagonal, then (re, im) pairs for
    /// the strict lower triangle; the factor is normalized to det 1.
    ///
    /// Coordinates are squashed through `B tanh(x/B)` with `B = 3`, which
    /// compactifies the search domain: without the bound, obstructed
    /// objectives drive the factor to the degenerate boundary of the cone
    /// where every residual decays, and the reported floor would measure
    /// nothing. Within |x| <= 1.5 the distortion is negligible.
    pub fn from_raw(theta: &DVector<f64>, n: usize) -> Self {
        debug_assert_eq!(theta.len(), n * n);
        const B: f64 = 3.0;
        let sq = |x: f64| B * (x / B).tanh();
        // centering first removes global scaling exactly; squashing second
        // keeps the centered log-diagonals in a bounded band
        let mean: f64 = theta.rows(0, n).iter().sum::<f64>() / n as f64;
        let mut l = CMatrix::zeros(n, n);
        let mut at = n;
        for i in 0..n {
            l[(i, i)] = Complex64::new(sq(theta[i] - mean).exp(), 0.0);
            for j in 0..i {
                l[(i, j)] = Complex64::new(sq(theta[at]), sq(theta[at + 1]));
                at += 2;
            }
        }
        MetricParam { l }
    }

    pub fn raw_dim(n: usize) -> usize {
        n * n
    }

    /// Frame-change matrix `A = L^{-*}` such that `w = e A` is unitary for
    /// the induced metric.
    pub fn frame_change(&self) -> Result<CMatrix> {
        self.l
            .adjoint()
            .try_inverse()
            .ok_or_else(|| Error::InvalidFactor("triangular factor is singular".into()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub objective: Objective,
    pub multistarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    /// a witness is emitted iff its re-checked defect is at most this
    pub defect_gate: f64,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(objective: Objective, seed: u64) -> Self {
        SearchConfig {
            objective,
            multistarts: 50,
            max_iters: 500,
            step_tol: 1e-13,
            defect_gate: 1e-8,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub objective: Objective,
    pub best_defect: f64,
    /// min over multistarts of the converged defects
    pub floor: f64,
    pub iterations: Vec<usize>,
    #[serde(skip)]
    pub witness: Option<HermitianMetric>,
    pub witness_found: bool,
}

/// Precomputed reference data for one instance.
pub struct SearchContext {
    pub ref_frame: UnitaryFrame,
    pub st0: StructureTensors,
    pub n: usize,
}

impl SearchContext {
    pub fn new(inst: &Instance) -> Result<Self> {
        let ref_frame = build_unitary_frame(inst.algebra.dim(), &inst.j, &inst.metric, None)?;
        let st0 = inst.tensors(&ref_frame);
        Ok(SearchContext { n: ref_frame.n(), ref_frame, st0 })
    }

    pub fn tensors_for(&self, p: &MetricParam) -> Result<StructureTensors> {
        let a = p.frame_change()?;
        reframe_tensors(&self.st0, &a)
    }

    /// The real metric induced by the parameter, rebuilt from the reframed
    /// unitary frame.
    pub fn metric_for(&self, inst: &Instance, p: &MetricParam) -> Result<HermitianMetric> {
        let a = p.frame_change()?;
        let n = self.n;
        let dim = 2 * n;
        let mut w: Vec<CVector> = Vec::with_capacity(n);
        for jcol in 0..n {
            let mut acc = CVector::from_element(dim, Complex64::new(0.0, 0.0));
            for arow in 0..n {
                acc += self.ref_frame.e[arow].scale_complex(a[(arow, jcol)]);
            }
            w.push(acc);
        }
        metric_from_frame(&w, &inst.j)
    }
}

/// Residual vector of the target condition on the given tensors, stacked
/// as real numbers.
pub fn residual_vector(st: &StructureTensors, objective: Objective) -> DVector<f64> {
    let n = st.n();
    let mut out: Vec<f64> = Vec::new();
    match objective {
        Objective::Balanced => {
            for i in 0..n {
                let s: Complex64 = (0..n).map(|k| st.d(k, i, k)).sum();
                out.push(s.re);
                out.push(s.im);
            }
        }
        Objective::Pluriclosed => {
            let t = chern_torsion(st);
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
                            out.push(acc.re);
                            out.push(acc.im);
                        }
                    }
                }
            }
        }
        Objective::Kahler => {
            let t = chern_torsion(st);
            for j in 0..n {
                for i in 0..n {
                    for k in (i + 1)..n {
                        let v = t.t(j, i, k);
                        out.push(v.re);
                        out.push(v.im);
                    }
                }
            }
        }
    }
    DVector::from_vec(out)
}

/// The max-norm defect matching the verdict semantics of the hermitian
/// module.
pub fn max_defect(st: &StructureTensors, objective: Objective) -> f64 {
    match objective {
        Objective::Balanced => balanced_defect(st),
        Objective::Pluriclosed => pluriclosed_defect(st),
        Objective::Kahler => kahler_defect(st),
    }
}

/// Sum of squared residuals of the target condition for the metric induced
/// by `p`; smooth in `p` away from singular factors.
pub fn defect_objective(ctx: &SearchContext, p: &MetricParam, objective: Objective) -> f64 {
    match ctx.tensors_for(p) {
        Ok(st) => residual_vector(&st, objective).norm_squared(),
        Err(_) => f64::INFINITY,
    }
}

fn residual_closure<'c>(
    ctx: &'c SearchContext,
    objective: Objective,
    residual_len: usize,
) -> impl Fn(&DVector<f64>) -> DVector<f64> + 'c {
    move |theta: &DVector<f64>| {
        let p = MetricParam::from_raw(theta, ctx.n);
        match ctx.tensors_for(&p) {
            Ok(st) => residual_vector(&st, objective),
            Err(_) => DVector::from_element(residual_len, 1e6),
        }
    }
}

/// Internal gradient of the squared-residual objective at `theta`:
/// `2 J^T r` with a central finite-difference Jacobian at relative step
/// 1e-6.
pub fn objective_gradient(
    ctx: &SearchContext,
    objective: Objective,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let len = residual_vector(&ctx.st0, objective).len();
    let f = residual_closure(ctx, objective, len);
    lm::objective_gradient(&f, theta, 1e-6)
}

/// Multistart local minimization; deterministic given the seed, with the
/// reduction ordered by start index.
pub fn minimize(inst: &Instance, cfg: &SearchConfig) -> Result<SearchReport> {
    let ctx = SearchContext::new(inst)?;
    let n = ctx.n;
    let len = residual_vector(&ctx.st0, cfg.objective).len();

    let starts: Vec<DVector<f64>> = {
        let mut rng = SeededRng::new(cfg.seed);
        (0..cfg.multistarts)
            .map(|i| {
                if i == 0 {
                    DVector::zeros(MetricParam::raw_dim(n))
                } else {
                    DVector::from_fn(MetricParam::raw_dim(n), |_, _| rng.range(-0.6, 0.6))
                }
            })
            .collect()
    };

    struct StartOutcome {
        defect: f64,
        theta: DVector<f64>,
        iters: usize,
    }

    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .map(|theta0| {
            let f = residual_closure(&ctx, cfg.objective, len);
            let initial = f(&theta0).norm_squared();
            let opts = LmOptions {
                max_iters: cfg.max_iters,
                cost_tol: 1e-26,
                step_tol: cfg.step_tol,
                fd_step: 1e-6,
            };
            let out = lm::minimize(&f, theta0, &opts);
            // LM only accepts improving steps, so the converged objective
            // never exceeds the start's initial value
            debug_assert!(out.cost <= initial * (1.0 + 1e-12) + 1e-18);
            let p = MetricParam::from_raw(&out.params, n);
            let defect = match ctx.tensors_for(&p) {
                Ok(st) => max_defect(&st, cfg.objective),
                Err(_) => f64::INFINITY,
            };
            StartOutcome { defect, theta: out.params, iters: out.iterations }
        })
        .collect();

    let mut best_idx = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.defect < outcomes[best_idx].defect {
            best_idx = i;
        }
    }
    let floor = outcomes.iter().map(|o| o.defect).fold(f64::INFINITY, f64::min);
    let best = &outcomes[best_idx];

    let mut witness = None;
    let mut best_defect = best.defect;
    if best.defect <= cfg.defect_gate {
        // zero-set soundness: rebuild the real metric and re-check through
        // the full pipeline before emitting it
        let p = MetricParam::from_raw(&best.theta, n);
        let metric = ctx.metric_for(inst, &p)?;
        let candidate = inst.with_metric(metric.clone())?;
        let frame = build_unitary_frame(candidate.algebra.dim(), &candidate.j, &candidate.metric, None)?;
        let st = candidate.tensors(&frame);
        let recheck = max_defect(&st, cfg.objective);
        let fc = crate::hermitian::forms::FrameContext::new(&candidate.algebra, &frame)?;
        let oracle = match cfg.objective {
            Objective::Balanced => crate::hermitian::forms::balanced_oracle(&fc),
            Objective::Pluriclosed => crate::hermitian::forms::pluriclosed_oracle(&fc),
            Objective::Kahler => crate::hermitian::forms::kahler_oracle(&fc),
        };
        if recheck <= cfg.defect_gate && oracle <= 1e-8 * (1.0 + oracle.max(1.0)) {
            best_defect = recheck;
            witness = Some(metric);
        } else if recheck > cfg.defect_gate {
            best_defect = recheck;
        }
    }

    Ok(SearchReport {
        objective: cfg.objective,
        best_defect,
        floor,
        iterations: outcomes.iter().map(|o| o.iters).collect(),
        witness_found: witness.is_some(),
        witness,
    })
}

/// Min converged defect across multistarts; empirical evidence only.
pub fn certify_floor(inst: &Instance, cfg: &SearchConfig) -> Result<f64> {
    Ok(minimize(inst, cfg)?.floor)
}

/// A moderately conditioned random compatible metric on the instance.
pub fn random_compatible_metric(inst: &Instance, rng: &mut SeededRng) -> Result<HermitianMetric> {
    let ctx = SearchContext::new(inst)?;
    let theta = DVector::from_fn(MetricParam::raw_dim(ctx.n), |_, _| rng.range(-0.45, 0.45));
    let p = MetricParam::from_raw(&theta, ctx.n);
    ctx.metric_for(inst, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{CaseTag, JType};
    use crate::generator::{gen, GenParams, MetricTarget};
    use crate::linalg::{fro_norm, gram_schmidt_unitary, HermitianForm, Tolerance};

    fn quick_cfg(objective: Objective, seed: u64) -> SearchConfig {
        SearchConfig { objective, multistarts: 12, max_iters: 60, step_tol: 1e-12, defect_gate: 1e-8, seed }
    }

    #[test]
    fn kahler_catalog_instance_has_zero_objective_at_identity() {
        let params = GenParams {
            n: 3,
            case: CaseTag::JaEqualsA,
            jtype: None,
            r0: None,
            target: MetricTarget::Kahler,
            seed: 21,
        };
        let inst = gen(&params).unwrap();
        let ctx = SearchContext::new(&inst).unwrap();
        let p = MetricParam::identity(3);
        let obj = defect_objective(&ctx, &p, Objective::Kahler);
        assert!(obj <= 1e-18, "objective {obj}");
    }

    #[test]
    fn objective_invariant_under_global_scaling() {
        let params = GenParams::new(3, CaseTag::MainNonabelian, 31);
        let inst = gen(&params).unwrap();
        let ctx = SearchContext::new(&inst).unwrap();
        let theta = DVector::from_fn(9, |i, _| 0.1 * (i as f64 + 1.0));
        let mut scaled = theta.clone();
        for i in 0..3 {
            scaled[i] += 0.7; // uniform diagonal shift = global scaling of L
        }
        let p1 = MetricParam::from_raw(&theta, 3);
        let p2 = MetricParam::from_raw(&scaled, 3);
        // unit-determinant normalization absorbs the scaling entirely
        assert!(fro_norm(&(&p1.l - &p2.l)) < 1e-14);
    }

    #[test]
    fn objective_invariant_under_unitary_reframing() {
        let params = GenParams::new(3, CaseTag::AbelianQuotient, 32);
        let inst = gen(&params).unwrap();
        let ctx = SearchContext::new(&inst).unwrap();
        let theta = DVector::from_fn(9, |i, _| 0.07 * (i as f64) - 0.2);
        let p = MetricParam::from_raw(&theta, 3);
        let a = p.frame_change().unwrap();
        let mut rng = SeededRng::new(5);
        let cols: Vec<crate::linalg::CVector> = (0..3)
            .map(|_| crate::linalg::CVector::from_fn(3, |_, _| rng.complex(1.0)))
            .collect();
        let u = CMatrix::from_columns(
            &gram_schmidt_unitary(&cols, HermitianForm::standard(), Tolerance::default()).unwrap(),
        );
        let st1 = reframe_tensors(&ctx.st0, &a).unwrap();
        let st2 = reframe_tensors(&ctx.st0, &(&a * &u)).unwrap();
        for obj in [Objective::Balanced, Objective::Pluriclosed, Objective::Kahler] {
            let r1 = residual_vector(&st1, obj).norm_squared();
            let r2 = residual_vector(&st2, obj).norm_squared();
            assert!((r1 - r2).abs() <= 1e-10 * (1.0 + r1), "{obj}: {r1} vs {r2}");
        }
    }

    #[test]
    fn finds_balanced_witness_on_balanced_instance() {
        let params = GenParams {
            n: 3,
            case: CaseTag::MainNonabelian,
            jtype: Some(JType::Degenerate),
            r0: None,
            target: MetricTarget::Balanced,
            seed: 33,
        };
        let inst = gen(&params).unwrap();
        let report = minimize(&inst, &quick_cfg(Objective::Balanced, 1)).unwrap();
        assert!(report.witness_found, "best defect {}", report.best_defect);
        assert!(report.best_defect < 1e-8);
        let w = report.witness.unwrap();
        let cand = inst.with_metric(w).unwrap();
        cand.validate(Tolerance::default()).unwrap();
    }

    #[test]
    fn pluriclosed_floor_stays_up_on_balanced_generic() {
        // Lemma 11: sigma*b > 0 obstructs pluriclosed metrics
        let params = GenParams {
            n: 3,
            case: CaseTag::MainNonabelian,
            jtype: Some(JType::Generic),
            r0: None,
            target: MetricTarget::Balanced,
            seed: 34,
        };
        let inst = gen(&params).unwrap();
        let report = minimize(&inst, &quick_cfg(Objective::Pluriclosed, 2)).unwrap();
        assert!(report.floor > 1e-4, "floor {}", report.floor);
        assert!(!report.witness_found);
    }

    #[test]
    fn gradient_matches_scalar_finite_differences() {
        let params = GenParams::new(3, CaseTag::MainNonabelian, 35);
        let inst = gen(&params).unwrap();
        let ctx = SearchContext::new(&inst).unwrap();
        let mut rng = SeededRng::new(77);
        for rep in 0..5 {
            let theta = DVector::from_fn(9, |_, _| rng.range(-0.4, 0.4));
            for obj in [Objective::Balanced, Objective::Pluriclosed, Objective::Kahler] {
                let g_int = objective_gradient(&ctx, obj, &theta);
                let mut g_fd = DVector::zeros(9);
                let h = 1e-5;
                for i in 0..9 {
                    let mut tp = theta.clone();
                    tp[i] += h;
                    let fp = defect_objective(&ctx, &MetricParam::from_raw(&tp, 3), obj);
                    tp[i] = theta[i] - h;
                    let fm = defect_objective(&ctx, &MetricParam::from_raw(&tp, 3), obj);
                    g_fd[i] = (fp - fm) / (2.0 * h);
                }
                let rel = (&g_int - &g_fd).norm() / g_fd.norm().max(1e-9);
                assert!(rel < 1e-5, "rep {rep} {obj}: rel {rel}");
            }
        }
    }
}
