use crate::forward::WaveField;
use crate::geometry::Grid3D;
use crate::linalg::ShiftedSolver;
use crate::operator::DiscreteOperator;
use crate::{Error, Result, C64};

/// Dirichlet data: full-grid field at time `t`, read on boundary nodes only.
pub type BoundaryData<'a> = &'a (dyn Fn(f64) -> Vec<C64> + Sync);

/// Number of steps used for a requested `dt`; the step is shortened so
/// that it divides `t_final` exactly.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt - 1e-9).ceil().max(1.0) as usize
}

/// Crank–Nicolson integration of `-i q' + H q = 0` on `[0, t_final]`.
///
/// `q0` is a full-grid field. With boundary data the update is
/// `(I + iτH) q⁺ = (I - iτH) q - iτ B (h + h⁺)` with `τ = dt/2`.
pub fn crank_nicolson_solve(
    op: &DiscreteOperator,
    grid: &Grid3D,
    q0: &[C64],
    boundary: Option<BoundaryData>,
    t_final: f64,
    dt: f64,
) -> Result<WaveField> {
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(Error::TimeGrid("final time and step must be positive".into()));
    }
    if dt > t_final / 64.0 * (1.0 + 1e-12) {
        return Err(Error::TimeGrid(format!("dt = {dt} exceeds T/64 = {}", t_final / 64.0)));
    }
    let steps = step_count(t_final, dt);
    let dt = t_final / steps as f64;
    let scale = q0.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let h0 = boundary.map(|b| b(0.0));
    for id in 0..grid.num_nodes() {
        if grid.is_interior(id) {
            continue;
        }
        let want = h0.as_ref().map_or(C64::new(0.0, 0.0), |h| h[id]);
        if (q0[id] - want).norm() > 1e-10 * scale {
            return Err(Error::TimeGrid(format!(
                "initial state violates the boundary condition at node {id}"
            )));
        }
    }
    let tau = 0.5 * dt;
    let solver = ShiftedSolver::new(&op.matrix, tau)?;
    let mut q = grid.gather(q0);
    let mut levels = Vec::with_capacity(steps + 1);
    levels.push(q.clone());
    let mut h_prev = h0;
    let itau = C64::new(0.0, tau);
    for n in 0..steps {
        let hq = op.apply(&q);
        let mut rhs: Vec<C64> = q.iter().zip(&hq).map(|(a, b)| a - itau * b).collect();
        if let Some(b) = boundary {
            let h_next = b((n + 1) as f64 * dt);
            let lp = op.lift(h_prev.as_ref().expect("boundary data at previous level"));
            let ln = op.lift(&h_next);
            for i in 0..rhs.len() {
                rhs[i] -= itau * (lp[i] + ln[i]);
            }
            h_prev = Some(h_next);
        }
        q = solver.solve(&rhs, &q)?;
        levels.push(q.clone());
    }
    Ok(WaveField { t0: 0.0, dt, levels })
}

/// Extends a field on `[0, T]` to `[-T, T]` by `q(-t) = conj(q(t))`.
pub fn symmetrize_time(q: &WaveField, q0: &[C64]) -> Result<WaveField> {
    let imag = q0.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > 0.0 {
        return Err(Error::ComplexInitialState(imag));
    }
    if q.t0.abs() > 1e-12 {
        return Err(Error::TimeGrid("field must start at t = 0".into()));
    }
    let n = q.levels.len();
    let mut levels = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        levels.push(q.levels[k].iter().map(|v| v.conj()).collect());
    }
    levels.extend(q.levels.iter().cloned());
    Ok(WaveField { t0: -q.final_time(), dt: q.dt, levels })
}
