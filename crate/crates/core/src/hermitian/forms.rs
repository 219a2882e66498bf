//! Left-invariant exterior forms and the Chevalley-Eilenberg differential.
//!
//! Forms live on a "bracket context": a basis of the (complexified) algebra
//! together with the table of brackets of basis pairs expanded back in that
//! basis. Two contexts are used: the raw real basis (for the d∘d = 0 and
//! structure-equation checks) and the complexified unitary frame
//! {e_1..e_n, conj(e_1)..conj(e_n)} where bidegree projection is exact
//! (index < n means a (1,0)-leg).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::UnitaryFrame;
use crate::liealg::RealLieAlgebra;
use crate::linalg::CVector;

/// Bracket table over an arbitrary basis: `table[i][j]` is `[b_i, b_j]`
/// expanded in the basis, stored for i < j (antisymmetry fills the rest).
pub struct BracketContext {
    pub dim: usize,
    table: Vec<Vec<(usize, Complex64)>>,
}

impl BracketContext {
    fn at(&self, i: usize, j: usize) -> Vec<(usize, Complex64)> {
        if i < j {
            self.table[i * self.dim + j].clone()
        } else {
            self.table[j * self.dim + i].iter().map(|&(k, c)| (k, -c)).collect()
        }
    }

    /// Context over the real basis of the algebra.
    pub fn real_basis(g: &RealLieAlgebra) -> Self {
        let dim = g.dim();
        let mut table = vec![Vec::new(); dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let mut row = Vec::new();
                for k in 0..dim {
                    let v = g.f(k, i, j);
                    if v != 0.0 {
                        row.push((k, Complex64::new(v, 0.0)));
                    }
                }
                table[i * dim + j] = row;
            }
        }
        BracketContext { dim, table }
    }
}

/// Context over the complexified unitary frame; knows the holomorphic leg
/// count of every basis index.
pub struct FrameContext {
    pub ctx: BracketContext,
    /// complex dimension n; indices 0..n are (1,0), n..2n are (0,1)
    pub n: usize,
}

impl FrameContext {
    pub fn new(g: &RealLieAlgebra, frame: &UnitaryFrame) -> Result<Self> {
        let n = frame.n();
        let dim = 2 * n;
        let fmat = frame.frame_matrix();
        let lu = fmat.clone().lu();
        let vecs: Vec<CVector> = (0..dim)
            .map(|i| if i < n { frame.e[i].clone() } else { frame.conj(i - n) })
            .collect();
        let mut table = vec![Vec::new(); dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let br = g.bracket_complex(&vecs[i], &vecs[j]);
                let coeffs = lu.solve(&br).ok_or_else(|| {
                    Error::DegenerateInput("frame matrix is singular".into())
                })?;
                let mut row = Vec::new();
                for k in 0..dim {
                    if coeffs[k].norm() > 1e-13 {
                        row.push((k, coeffs[k]));
                    }
                }
                table[i * dim + j] = row;
            }
        }
        Ok(FrameContext { ctx: BracketContext { dim, table }, n })
    }
}

/// Alternating multilinear form of fixed degree, stored as coefficients on
/// sorted index tuples encoded as bitmasks.
#[derive(Debug, Clone)]
pub struct Form {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: BTreeMap<u32, Complex64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn add_term(&mut self, mask: u32, c: Complex64) {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        let entry = self.coeffs.entry(mask).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.coeffs.remove(&mask);
        }
    }

    pub fn coeff(&self, mask: u32) -> Complex64 {
        self.coeffs.get(&mask).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn wedge(&self, other: &Form) -> Form {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Form::zero(self.dim, self.degree + other.degree);
        for (&m1, &c1) in &self.coeffs {
            for (&m2, &c2) in &other.coeffs {
                if m1 & m2 != 0 {
                    continue;
                }
                let sign = merge_sign(m1, m2);
                out.add_term(m1 | m2, c1 * c2 * sign);
            }
        }
        out
    }

    pub fn power(&self, k: usize) -> Form {
        let mut acc = Form::zero(self.dim, 0);
        acc.add_term(0, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            acc = acc.wedge(self);
        }
        acc
    }

    /// Keep only terms with exactly `p` holomorphic legs (indices < n).
    pub fn project_holomorphic_legs(&self, n: usize, p: usize) -> Form {
        let holo_mask: u32 = (1u32 << n) - 1;
        let mut out = Form::zero(self.dim, self.degree);
        for (&m, &c) in &self.coeffs {
            if (m & holo_mask).count_ones() as usize == p {
                out.add_term(m, c);
            }
        }
        out
    }
}

/// Sign of concatenating the sorted tuple of `m1` before that of `m2`
/// (counts inversions between the two masks).
fn merge_sign(m1: u32, m2: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = m1;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        inversions += (m2 & ((1u32 << bit) - 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Chevalley-Eilenberg differential:
/// `(d a)(x_0..x_p) = sum_{i<j} (-1)^{i+j} a([x_i, x_j], .. no x_i, x_j ..)`.
pub fn ce_differential(ctx: &BracketContext, form: &Form) -> Form {
    let dim = ctx.dim;
    let p1 = form.degree + 1;
    let mut out = Form::zero(dim, p1);
    let masks = enumerate_masks(dim, p1);
    for mask in masks {
        let elems = mask_elems(mask);
        let mut total = Complex64::new(0.0, 0.0);
        for a in 0..p1 {
            for b in (a + 1)..p1 {
                let (ia, ib) = (elems[a], elems[b]);
                let rest = mask & !(1u32 << ia) & !(1u32 << ib);
                let pair_sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                for (k, coef) in ctx.at(ia, ib) {
                    let kb = 1u32 << k;
                    if rest & kb != 0 {
                        continue;
                    }
                    let below = (rest & (kb - 1)).count_ones();
                    let insert_sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    total += coef * form.coeff(rest | kb) * pair_sign * insert_sign;
                }
            }
        }
        if total.norm() > 0.0 {
            out.add_term(mask, total);
        }
    }
    out
}

pub fn enumerate_masks(dim: usize, degree: usize) -> Vec<u32> {
    let mut out = Vec::new();
    if degree > dim {
        return out;
    }
    let mut mask: u32 = (1u32 << degree) - 1;
    let limit: u32 = 1u32 << dim;
    while mask < limit {
        out.push(mask);
        if mask == 0 {
            break;
        }
        // Gosper's hack: next mask with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
        if degree == 0 {
            break;
        }
    }
    out
}

fn mask_elems(mask: u32) -> Vec<usize> {
    let mut out = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

/// The Kähler form `omega = i sum_k phi_k ∧ conj(phi_k)` in a frame
/// context: `omega(e_k, conj(e_k)) = i`.
pub fn omega(fc: &FrameContext) -> Form {
    let n = fc.n;
    let mut w = Form::zero(2 * n, 2);
    for k in 0..n {
        w.add_term((1u32 << k) | (1u32 << (n + k)), Complex64::new(0.0, 1.0));
    }
    w
}

/// `||d omega||`: zero iff Kähler.
pub fn kahler_oracle(fc: &FrameContext) -> f64 {
    ce_differential(&fc.ctx, &omega(fc)).norm()
}

/// `||d(omega^{n-1})||`: zero iff balanced.
pub fn balanced_oracle(fc: &FrameContext) -> f64 {
    let w = omega(fc).power(fc.n - 1);
    ce_differential(&fc.ctx, &w).norm()
}

/// `||(2,2)-part of d of the (1,2)-part of d omega||`: zero iff pluriclosed.
pub fn pluriclosed_oracle(fc: &FrameContext) -> f64 {
    let n = fc.n;
    let dw = ce_differential(&fc.ctx, &omega(fc));
    let delbar = dw.project_holomorphic_legs(n, 1);
    ce_differential(&fc.ctx, &delbar).project_holomorphic_legs(n, 2).norm()
}

/// `||(n,n)-part of d of the (n-1,n)-part of d(omega^{n-1})||`.
pub fn gauduchon_residual(fc: &FrameContext) -> f64 {
    let n = fc.n;
    let w = omega(fc).power(n - 1);
    let dw = ce_differential(&fc.ctx, &w);
    let delbar = dw.project_holomorphic_legs(n, n - 1);
    ce_differential(&fc.ctx, &delbar).project_holomorphic_legs(n, n).norm()
}

/// Residual of d omega against pure bidegree (2,1) + (1,2); nonzero parts
/// of type (3,0) or (0,3) signal an integrability failure.
pub fn bidegree_residual(fc: &FrameContext) -> f64 {
    let n = fc.n;
    let dw = ce_differential(&fc.ctx, &omega(fc));
    let bad = dw.project_holomorphic_legs(n, 3).norm().hypot(dw.project_holomorphic_legs(n, 0).norm());
    bad
}
