//! Sparse assembly of the twisted Hamiltonian and the Laplace–Beltrami
//! operator on interior unknowns.
//!
//! Both operators are real symmetric, so entries are stored as `f64` and the
//! Hermitian check reduces to exact symmetry. The Hamiltonian is assembled as
//! `-div(A grad)` with `A = g⁻¹`; it is positive definite, and the
//! Laplace–Beltrami matrix approximates `Δ_g = -H`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::geometry::{Grid3D, TwistProfile};
use crate::metric::{inverse_metric, MetricField};
use crate::{Result, C64};

/// Compressed sparse row matrix with real entries.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(c, _)| c.abs_diff(i))).max().unwrap_or(0)
    }

    /// `max |A_ij - conj(A_ji)|`; zero for an exactly Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(c, v)| (i, c, v)))
            .map(|(i, c, v)| (v - self.get(c, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryHandling {
    HomogeneousDirichlet,
    /// Dirichlet data enters through the stored boundary couplings.
    Lift,
}

/// Operator on interior unknowns plus the couplings to Dirichlet nodes.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    /// `(row unknown, boundary node, coefficient)`.
    pub boundary: Vec<(usize, usize, f64)>,
    pub handling: BoundaryHandling,
    pub dims: [usize; 3],
}

impl DiscreteOperator {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.mul(x)
    }

    /// Applies the operator to a full-grid field, using its values on the
    /// Dirichlet nodes. Returns a full-grid field, zero off the interior.
    pub fn apply_full(&self, grid: &Grid3D, u: &[C64]) -> Vec<C64> {
        let compact = grid.gather(u);
        let mut out = self.matrix.mul(&compact);
        for &(r, node, v) in &self.boundary {
            out[r] += v * u[node];
        }
        grid.scatter(&out)
    }

    /// Lifting vector `B h` for Dirichlet data given on the full grid.
    pub fn lift(&self, h: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.matrix.n];
        for &(r, node, v) in &self.boundary {
            out[r] += v * h[node];
        }
        out
    }

    pub fn with_handling(mut self, handling: BoundaryHandling) -> Self {
        self.handling = handling;
        self
    }

    /// Coordinate listing, one `row col re im` line per stored entry.
    pub fn export_coo(&self) -> String {
        let mut s = String::new();
        for i in 0..self.matrix.n {
            for (c, v) in self.matrix.row(i) {
                let _ = writeln!(s, "{i} {c} {v:.17e} 0");
            }
        }
        s
    }
}

/// Accumulates one row; entries referring to non-interior nodes become
/// boundary couplings.
struct RowBuilder<'a> {
    grid: &'a Grid3D,
    entries: Vec<(usize, f64)>,
}

impl RowBuilder<'_> {
    fn add(&mut self, node: usize, v: f64) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == node) {
            e.1 += v;
        } else {
            self.entries.push((node, v));
        }
    }

    fn add_off(&mut self, id: usize, off: [i64; 3], v: f64) {
        // Interior stencils never leave the box: every axis moves by at most one.
        let n = self.grid.offset(id, off).expect("stencil leaves the grid box");
        self.add(n, v);
    }
}

fn unit(a: usize, s: i64) -> [i64; 3] {
    let mut e = [0; 3];
    e[a] = s;
    e
}

fn pair(a: usize, sa: i64, b: usize, sb: i64) -> [i64; 3] {
    let mut e = [0; 3];
    e[a] = sa;
    e[b] = sb;
    e
}

fn finish(grid: &Grid3D, rows: Vec<Vec<(usize, f64)>>) -> DiscreteOperator {
    // Split interior and boundary couplings, then symmetrise the interior block.
    let n = grid.num_unknowns();
    let mut interior: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut boundary = Vec::new();
    for (r, row) in rows.into_iter().enumerate() {
        let mut inner = Vec::with_capacity(row.len());
        for (node, v) in row {
            if v == 0.0 {
                continue;
            }
            match grid.unknown(node) {
                Some(c) => inner.push((c, v)),
                None => boundary.push((r, node, v)),
            }
        }
        inner.sort_by_key(|e| e.0);
        interior.push(inner);
    }
    let raw = CsrMatrix::from_rows(interior);
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            raw.row(i).map(|(c, _)| (c, 0.5 * (raw.get(i, c) + raw.get(c, i)))).collect()
        })
        .collect();
    let mut m = CsrMatrix::from_rows(rows);
    add_transpose_only(&raw, &mut m);
    DiscreteOperator { matrix: m, boundary, handling: BoundaryHandling::HomogeneousDirichlet, dims: grid.dims() }
}

/// Inserts `(A_ji)/2` for pairs where `A_ij` was structurally absent.
fn add_transpose_only(raw: &CsrMatrix, m: &mut CsrMatrix) {
    let mut extra: Vec<Vec<(usize, f64)>> = vec![Vec::new(); raw.n];
    for i in 0..raw.n {
        for (c, v) in raw.row(i) {
            if raw.row(c).all(|(cc, _)| cc != i) {
                extra[c].push((i, 0.5 * v));
            }
        }
    }
    if extra.iter().all(Vec::is_empty) {
        return;
    }
    let rows = (0..m.n)
        .map(|i| {
            let mut r: Vec<(usize, f64)> = m.row(i).collect();
            r.extend(extra[i].iter().copied());
            r.sort_by_key(|e| e.0);
            r
        })
        .collect();
    *m = CsrMatrix::from_rows(rows);
}

/// Hamiltonian `-Δ_τ - (θ̇ ∂_φ + ∂₃)²` with homogeneous Dirichlet conditions.
///
/// Diagonal coefficients are evaluated at half-nodes; the mixed terms use the
/// nodal coefficient inside centred differences `D_j (a_jk D_k u)`.
pub fn assemble_h(theta: &TwistProfile, grid: &Grid3D) -> Result<DiscreteOperator> {
    theta.check_admissible(crate::geometry::ADMISSIBILITY_SAMPLES)?;
    Ok(assemble_h_unchecked(theta, grid))
}

pub(crate) fn assemble_h_unchecked(theta: &TwistProfile, grid: &Grid3D) -> DiscreteOperator {
    let h = grid.spacing;
    let coef = |x: [f64; 3]| inverse_metric(theta.rate(x[2]), x);
    let rows: Vec<Vec<(usize, f64)>> = grid
        .interior_nodes()
        .par_iter()
        .map(|&id| {
            let mut rb = RowBuilder { grid, entries: Vec::with_capacity(19) };
            let x = grid.coords(id);
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += 0.5 * h[j];
                xm[j] -= 0.5 * h[j];
                let ap = coef(xp)[j][j] / (h[j] * h[j]);
                let am = coef(xm)[j][j] / (h[j] * h[j]);
                rb.add(id, ap + am);
                rb.add_off(id, unit(j, 1), -ap);
                rb.add_off(id, unit(j, -1), -am);
                for k in 0..3 {
                    if k == j {
                        continue;
                    }
                    let w = 1.0 / (4.0 * h[j] * h[k]);
                    let mut yp = x;
                    let mut ym = x;
                    yp[j] += h[j];
                    ym[j] -= h[j];
                    let cp = coef(yp)[j][k] * w;
                    let cm = coef(ym)[j][k] * w;
                    rb.add_off(id, pair(j, 1, k, 1), -cp);
                    rb.add_off(id, pair(j, 1, k, -1), cp);
                    rb.add_off(id, pair(j, -1, k, 1), cm);
                    rb.add_off(id, pair(j, -1, k, -1), -cm);
                }
            }
            rb.entries
        })
        .collect();
    finish(grid, rows)
}

/// Laplace–Beltrami operator `(1/√det g) ∂_j(√det g g^{jk} ∂_k)`.
///
/// Fluxes live on half-nodes with coefficients averaged from the nodal
/// metric; cross-derivatives there are averages of nodal centred differences.
/// The weighted matrix is symmetrised and rescaled by `√det g`.
pub fn assemble_laplace_beltrami(m: &MetricField, grid: &Grid3D) -> DiscreteOperator {
    let h = grid.spacing;
    let sq: Vec<f64> = m.det.iter().map(|d| d.sqrt()).collect();
    let rows: Vec<Vec<(usize, f64)>> = grid
        .interior_nodes()
        .par_iter()
        .map(|&id| {
            let mut rb = RowBuilder { grid, entries: Vec::with_capacity(27) };
            for j in 0..3 {
                for s in [1i64, -1] {
                    let nb = grid.offset(id, unit(j, s)).expect("stencil leaves the grid box");
                    let w = 0.5 * (sq[id] + sq[nb]);
                    let c = |a: usize, b: usize| {
                        0.5 * (sq[id] * m.g_inv[id][a][b] + sq[nb] * m.g_inv[nb][a][b]) / w
                    };
                    let sign = s as f64;
                    // flux leaving through the face, divided by h_j
                    let scale = w / h[j];
                    let gjj = c(j, j) / h[j];
                    rb.add(nb, sign * sign * scale * gjj);
                    rb.add(id, -scale * gjj);
                    for k in 0..3 {
                        if k == j {
                            continue;
                        }
                        let g = sign * scale * c(j, k) * 0.5 / (2.0 * h[k]);
                        rb.add_off(id, unit(k, 1), g);
                        rb.add_off(id, unit(k, -1), -g);
                        rb.add_off(id, pair(j, s, k, 1), g);
                        rb.add_off(id, pair(j, s, k, -1), -g);
                    }
                }
            }
            rb.entries
        })
        .collect();
    let mut op = finish(grid, rows);
    // W^{-1/2} K W^{-1/2}
    let node_of = grid.interior_nodes();
    for i in 0..op.matrix.n {
        let r = op.matrix.row_ptr[i]..op.matrix.row_ptr[i + 1];
        for e in r {
            let c = op.matrix.cols[e];
            op.matrix.vals[e] /= (sq[node_of[i]] * sq[node_of[c]]).sqrt();
        }
    }
    for (r, node, v) in op.boundary.iter_mut() {
        *v /= (sq[node_of[*r]] * sq[*node]).sqrt();
    }
    op
}
