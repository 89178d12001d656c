//! Linear solvers for the Crank–Nicolson systems `(I + iτH) x = b`.
//!
//! The matrix is complex symmetric with identity real part, so LU without
//! pivoting is safe. When the band would not fit in memory the solver falls
//! back to conjugate orthogonal CG, which uses the unconjugated bilinear form.

use crate::operator::CsrMatrix;
use crate::{Error, Result, C64};

/// Band storage above which the iterative solver is used (bytes).
pub const BAND_MEMORY_LIMIT: usize = 400 << 20;
/// Accepted relative residual of any solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Target relative residual of the iterative solver.
pub const COCG_TOLERANCE: f64 = 1e-13;

/// `I + i tau A` for a real symmetric sparse `A`.
#[derive(Clone, Debug)]
pub struct ShiftedMatrix<'a> {
    pub a: &'a CsrMatrix,
    pub tau: f64,
}

impl ShiftedMatrix<'_> {
    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let ax = self.a.mul(x);
        x.iter().zip(ax).map(|(xi, a)| xi + C64::new(0.0, self.tau) * a).collect()
    }
}

/// LU factors of a banded matrix, stored row-wise with `2b + 1` slots.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    b: usize,
    data: Vec<C64>,
}

impl BandLu {
    pub fn memory_bytes(n: usize, b: usize) -> usize {
        n * (2 * b + 1) * std::mem::size_of::<C64>()
    }

    pub fn factor(m: &ShiftedMatrix) -> Result<Self> {
        let n = m.a.n;
        let b = m.a.bandwidth();
        let w = 2 * b + 1;
        let mut data = vec![C64::new(0.0, 0.0); n * w];
        for i in 0..n {
            data[i * w + b] += 1.0;
            for (c, v) in m.a.row(i) {
                data[i * w + (c + b - i)] += C64::new(0.0, m.tau * v);
            }
        }
        for k in 0..n {
            let pivot = data[k * w + b];
            if pivot.norm() < 1e-300 {
                return Err(Error::SolverDivergence { residual: f64::INFINITY, iterations: k });
            }
            let last = (k + b).min(n - 1);
            let (head, tail) = data.split_at_mut((k + 1) * w);
            let row_k = &head[k * w + b + 1..k * w + b + 1 + (last - k)];
            for i in k + 1..=last {
                let off = i * w - (k + 1) * w;
                let l_slot = off + (k + b - i);
                let l = tail[l_slot] / pivot;
                tail[l_slot] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                // row i columns k+1..=last start at slot (k+1+b-i)
                let start = off + (k + 1 + b - i);
                for (t, &u) in tail[start..start + (last - k)].iter_mut().zip(row_k) {
                    *t -= l * u;
                }
            }
        }
        Ok(BandLu { n, b, data })
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let (n, b, w) = (self.n, self.b, 2 * self.b + 1);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = x[i];
            for j in lo..i {
                s -= self.data[i * w + (j + b - i)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + b).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.data[i * w + (j + b - i)] * x[j];
            }
            x[i] = s / self.data[i * w + b];
        }
        x
    }
}

fn dot_u(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate orthogonal CG for complex symmetric systems.
/// Returns the solution and the number of iterations.
pub fn cocg(m: &ShiftedMatrix, rhs: &[C64], x0: &[C64], tol: f64, max_iter: usize) -> Result<(Vec<C64>, usize)> {
    let bn = norm2(rhs);
    if bn == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); rhs.len()], 0));
    }
    let mut x = x0.to_vec();
    let ax = m.mul(&x);
    let mut r: Vec<C64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rho = dot_u(&r, &r);
    for it in 0..max_iter {
        let res = norm2(&r) / bn;
        if res <= tol {
            return Ok((x, it));
        }
        let q = m.mul(&p);
        let pq = dot_u(&p, &q);
        if pq.norm() == 0.0 {
            return Err(Error::SolverDivergence { residual: res, iterations: it });
        }
        let alpha = rho / pq;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rho_new = dot_u(&r, &r);
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bn;
    if res <= tol {
        Ok((x, max_iter))
    } else {
        Err(Error::SolverDivergence { residual: res, iterations: max_iter })
    }
}

/// Solver for repeated systems with one matrix.
pub enum ShiftedSolver<'a> {
    Direct { m: ShiftedMatrix<'a>, lu: BandLu },
    Iterative { m: ShiftedMatrix<'a> },
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(a: &'a CsrMatrix, tau: f64) -> Result<Self> {
        let m = ShiftedMatrix { a, tau };
        if BandLu::memory_bytes(a.n, a.bandwidth()) <= BAND_MEMORY_LIMIT {
            let lu = BandLu::factor(&m)?;
            Ok(ShiftedSolver::Direct { m, lu })
        } else {
            Ok(ShiftedSolver::Iterative { m })
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, ShiftedSolver::Direct { .. })
    }

    /// Solves and checks the relative residual against [`RESIDUAL_TOLERANCE`].
    pub fn solve(&self, rhs: &[C64], guess: &[C64]) -> Result<Vec<C64>> {
        let (m, x) = match self {
            ShiftedSolver::Direct { m, lu } => (m, lu.solve(rhs)),
            ShiftedSolver::Iterative { m } => (m, cocg(m, rhs, guess, COCG_TOLERANCE, 20 * rhs.len().max(100))?.0),
        };
        let bn = norm2(rhs);
        if bn > 0.0 {
            let mx = m.mul(&x);
            let r: Vec<C64> = rhs.iter().zip(&mx).map(|(b, a)| b - a).collect();
            let res = norm2(&r) / bn;
            if !(res <= RESIDUAL_TOLERANCE) {
                return Err(Error::SolverDivergence { residual: res, iterations: 0 });
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CrossSection, Grid3D, ProfileTerm, SectionShape, TwistProfile};
    use crate::operator::assemble_h;

    fn op() -> CsrMatrix {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [8, 8]).unwrap();
        let g = Grid3D::new(s, 2.0, 10).unwrap();
        let p = TwistProfile::new(
            vec![ProfileTerm::Bump { amplitude: 0.04, centre: 0.0, half_width: 1.0 }],
            1.0,
            0.1,
        )
        .unwrap();
        assemble_h(&p, &g).unwrap().matrix
    }

    fn rhs(n: usize) -> Vec<C64> {
        (0..n).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect()
    }

    #[test]
    fn band_lu_and_cocg_agree() {
        let a = op();
        let m = ShiftedMatrix { a: &a, tau: 0.05 };
        let b = rhs(a.n);
        let x1 = BandLu::factor(&m).unwrap().solve(&b);
        let (x2, _) = cocg(&m, &b, &vec![C64::new(0.0, 0.0); a.n], 1e-13, 10_000).unwrap();
        let r = m.mul(&x1);
        let res: f64 = norm2(&r.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()) / norm2(&b);
        assert!(res < 1e-13);
        let d: Vec<C64> = x1.iter().zip(&x2).map(|(a, b)| a - b).collect();
        assert!(norm2(&d) / norm2(&x1) < 1e-11);
    }

    #[test]
    fn cocg_reports_non_convergence() {
        let a = op();
        let m = ShiftedMatrix { a: &a, tau: 0.05 };
        let b = rhs(a.n);
        let err = cocg(&m, &b, &vec![C64::new(0.0, 0.0); a.n], 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::SolverDivergence { iterations: 2, .. }));
    }

    #[test]
    fn small_problems_use_direct_solver() {
        let a = op();
        assert!(ShiftedSolver::new(&a, 0.01).unwrap().is_direct());
    }
}
