//! Pipelines behind each experiment kind and the on-disk results bundle.
//!
//! Every table is a CSV payload built from sequentially accumulated values,
//! so a fixed configuration and seed give byte-identical tables regardless
//! of the thread count. Wall-clock timings are kept apart from the tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::carleman::{
    build_weights, bump_alphas, carleman_family, check_lemma1, check_lemma2, check_lemma3, select_weight_point,
    verify_carleman, verify_hypotheses, WeightMode, WeightPoint,
};
use crate::config::{ExperimentConfig, ExperimentKind, FamilyKind, StateKind, WeightKind};
use crate::forward::{
    crank_nicolson_solve, extract_observations, lateral_boundary_nodes, step_count, symmetrize_time,
    time_derivative, ObservationRegion, WaveField,
};
use crate::geometry::{build_cutoffs, Cylinder, Grid3D, SubSection, TwistProfile};
use crate::inverse::{
    add_noise, check_observation_subsection, curvature_gap_sq, envelope_state, reconstruct_boundary,
    reconstruct_interior, records_csv, stability_experiment, summarize, vortex_state, angular_state, BoundaryTwin,
    InteriorData, ReconstructionConfig, ReconstructionResult, StabilityPair, StabilitySetup,
};
use crate::metric::assemble_metric;
use crate::operator::{assemble_h, assemble_laplace_beltrami};
use crate::rng::{random_profile, stream};
use crate::{Error, Result, C64};

/// `s` values of the weighted Poincaré check.
pub const LEMMA2_S: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

/// Pushes allowed when the boundary weight point must be moved outward.
const WEIGHT_POINT_PUSHES: usize = 20;

/// Fraction of the remaining C¹ room used by random stability increments.
const RANDOM_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct ResultsBundle {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    /// CSV payloads keyed by file name.
    pub tables: BTreeMap<String, String>,
    pub summary: BTreeMap<String, f64>,
    /// Seconds per pipeline stage.
    pub timings: BTreeMap<String, f64>,
    pub version: String,
    pub seed: u64,
}

impl ResultsBundle {
    /// Bundle with the configuration echo and nothing else.
    pub fn empty(config: ExperimentConfig) -> Self {
        ResultsBundle {
            experiment: config.experiment,
            seed: config.inverse.seed,
            config,
            tables: BTreeMap::new(),
            summary: BTreeMap::new(),
            timings: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn table(&mut self, name: &str, csv: String) {
        self.tables.insert(name.to_string(), csv);
    }

    fn scalar(&mut self, name: &str, v: f64) {
        self.summary.insert(name.to_string(), v);
    }

    fn flag(&mut self, name: &str, v: bool) {
        self.scalar(name, if v { 1.0 } else { 0.0 });
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        self.timings.insert(stage.to_string(), t0.elapsed().as_secs_f64());
        Ok(out)
    }

    /// Configuration echo with a version and seed stamp.
    pub fn config_echo(&self) -> String {
        format!("# twistlab {} seed {}\n{}", self.version, self.seed, self.config.to_toml())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Validates `cfg` and runs the matching pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsBundle> {
    cfg.validate()?;
    let kind = cfg.experiment;
    let mut b = ResultsBundle::empty(cfg.clone());
    let t0 = Instant::now();
    let out = match kind {
        ExperimentKind::Forward => forward(cfg, &mut b),
        ExperimentKind::Carleman => carleman(cfg, &mut b),
        ExperimentKind::LemmaChecks => lemma_checks(cfg, &mut b),
        ExperimentKind::InverseInterior => inverse_interior(cfg, &mut b),
        ExperimentKind::InverseBoundary => inverse_boundary(cfg, &mut b),
        ExperimentKind::Stability => stability(cfg, &mut b),
    };
    out.map_err(|e| Error::Pipeline { experiment: kind.name(), source: Box::new(e) })?;
    b.timings.insert("total".into(), t0.elapsed().as_secs_f64());
    Ok(b)
}

fn hex_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("map of scalars serializes");
    s.push('\n');
    s
}

/// Writes `config.toml`, one CSV per table, `summary.json` and
/// `timings.json` when non-empty, and `manifest.sha256` listing the other
/// files in `sha256sum` format. Returns the manifest entries.
pub fn export_bundle(b: &ResultsBundle, dir: &Path) -> Result<Vec<ManifestEntry>> {
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(String, String)> = vec![("config.toml".into(), b.config_echo())];
    for (name, csv) in &b.tables {
        files.push((name.clone(), csv.clone()));
    }
    if !b.summary.is_empty() {
        files.push(("summary.json".into(), json(&b.summary)));
    }
    if !b.timings.is_empty() {
        files.push(("timings.json".into(), json(&b.timings)));
    }
    let mut manifest = Vec::with_capacity(files.len());
    let mut listing = String::new();
    for (name, body) in &files {
        std::fs::write(dir.join(name), body)?;
        let e = ManifestEntry { file: name.clone(), sha256: hex_sha256(body.as_bytes()), bytes: body.len() };
        let _ = writeln!(listing, "{}  {}", e.sha256, e.file);
        manifest.push(e);
    }
    std::fs::write(dir.join("manifest.sha256"), listing)?;
    Ok(manifest)
}

/// `q̃₀` of the configured kind, on the full grid.
pub fn initial_state(kind: StateKind, grid: &Grid3D, amplitude: f64) -> Vec<C64> {
    match kind {
        StateKind::Angular => angular_state(grid, amplitude),
        StateKind::Vortex => vortex_state(grid, amplitude),
        StateKind::Eigenmode => envelope_state(grid, amplitude),
    }
}

/// Initial gap `q₀ - q̃₀ = amplitude · (1/2 + x₁) e(x_τ) cos(πx₃/2Λ)`.
pub fn gap_state(grid: &Grid3D, amplitude: f64) -> Vec<C64> {
    let e = envelope_state(grid, amplitude);
    e.iter().enumerate().map(|(id, v)| v * (0.5 + grid.coords(id)[0])).collect()
}

/// Time step actually used: `T / ceil(T/Δt)`.
fn effective_dt(cfg: &ExperimentConfig) -> f64 {
    let p = &cfg.physics;
    p.t_final / step_count(p.t_final, p.dt) as f64
}

fn boundary_mode(cfg: &ExperimentConfig) -> WeightMode {
    let c = &cfg.carleman;
    WeightMode::Boundary { direction: c.direction, d_tau: c.d_tau, max_iter: WEIGHT_POINT_PUSHES }
}

fn weight_point(cfg: &ExperimentConfig, grid: &Grid3D, mode: WeightMode) -> Result<WeightPoint> {
    let (g, c) = (&cfg.geometry, &cfg.carleman);
    select_weight_point(grid, g.big_l, g.ell, c.d3, c.gamma, mode)
}

fn configured_mode(cfg: &ExperimentConfig) -> WeightMode {
    match cfg.carleman.mode {
        WeightKind::Interior => WeightMode::Interior,
        WeightKind::Boundary => boundary_mode(cfg),
    }
}

/// Lateral nodes facing away from `a_τ`, `|x₃| < L`.
fn gamma0_region(grid: &Grid3D, wp: &WeightPoint) -> ObservationRegion {
    let a = wp.a;
    lateral_boundary_nodes(grid, wp.big_l, |x, n| (x[0] - a[0]) * n[0] + (x[1] - a[1]) * n[1] >= 0.0)
}

fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Inputs shared by the twin pipelines.
struct Twin {
    grid: Grid3D,
    theta: TwistProfile,
    theta_ref: TwistProfile,
    q_ref0: Vec<C64>,
    gap0: Vec<C64>,
    dt: f64,
}

impl Twin {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = cfg.grid()?;
        let p = &cfg.physics;
        let q_ref0 = initial_state(p.initial_state, &grid, p.amplitude);
        let gap0 = gap_state(&grid, p.gap_amplitude);
        Ok(Twin {
            theta: cfg.profile()?,
            theta_ref: cfg.reference_profile()?,
            q_ref0,
            gap0,
            dt: effective_dt(cfg),
            grid,
        })
    }

    /// `q` and `q̃` on `[-T, T]`, extended by `q(-t) = conj q(t)`.
    fn symmetric_pair(&self, t_final: f64) -> Result<(WaveField, WaveField)> {
        let g = &self.grid;
        let q0 = add(&self.q_ref0, &self.gap0);
        let (q, q_ref) = rayon::join(
            || -> Result<WaveField> {
                let op = assemble_h(&self.theta, g)?;
                symmetrize_time(&crank_nicolson_solve(&op, g, &q0, None, t_final, self.dt)?, &q0)
            },
            || -> Result<WaveField> {
                let op = assemble_h(&self.theta_ref, g)?;
                symmetrize_time(&crank_nicolson_solve(&op, g, &self.q_ref0, None, t_final, self.dt)?, &self.q_ref0)
            },
        );
        Ok((q?, q_ref?))
    }
}

fn forward(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let tw = Twin::new(cfg)?;
    let g = &tw.grid;
    let q0 = add(&tw.q_ref0, &tw.gap0);
    let q = b.time("solve", || {
        let op = assemble_h(&tw.theta, g)?;
        crank_nicolson_solve(&op, g, &q0, None, cfg.physics.t_final, tw.dt)
    })?;
    let n0 = q.l2_norm(g, 0);
    if n0 == 0.0 {
        return Err(Error::Degenerate("initial state is zero".into()));
    }
    let mut csv = String::from("step,t,l2_norm,relative_drift\n");
    let mut max_drift = 0.0f64;
    for k in 0..q.num_levels() {
        let n = q.l2_norm(g, k);
        let drift = (n - n0).abs() / n0;
        max_drift = max_drift.max(drift);
        let _ = writeln!(csv, "{k},{:.12e},{:.16e},{:.6e}", q.time(k), n, drift);
    }
    b.table("forward_norms.csv", csv);
    b.scalar("max_drift", max_drift);
    b.scalar("steps", (q.num_levels() - 1) as f64);
    b.table("profile_curvature.csv", tw.theta.export_curvature(201));
    Ok(())
}

fn carleman(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let grid = cfg.grid()?;
    let theta = cfg.profile()?;
    let metric = assemble_metric(&theta, &grid)?;
    let lb = assemble_laplace_beltrami(&metric, &grid);
    let wp = weight_point(cfg, &grid, configured_mode(cfg))?;
    let wf = build_weights(&wp, &grid, cfg.physics.t_final, effective_dt(cfg))?;
    let hyp = b.time("hypotheses", || Ok(verify_hypotheses(&metric, &wf, &grid, 0.0)))?;
    let family = carleman_family(&grid, &wf);
    let report = b.time("carleman", || verify_carleman(&family, &wf, &metric, &lb, &grid, Some(&hyp.gamma0), &cfg.s_values()))?;
    b.table("carleman_report.csv", report.to_csv());
    b.flag("hypotheses_passed", hyp.passed);
    b.scalar("convexity_min", hyp.convexity_min);
    b.scalar("beta", hyp.beta);
    b.scalar("gamma0_nodes", hyp.gamma0_nodes as f64);
    b.scalar("big_e", wf.big_e);
    b.flag("plateau", report.s0.is_some());
    if let (Some(s0), Some(c0)) = (report.s0, report.c0) {
        b.scalar("s0", s0);
        b.scalar("c0", c0);
    }
    Ok(())
}

fn lemma_checks(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let grid = cfg.grid()?;
    let (ell, big_l) = (cfg.geometry.ell, cfg.geometry.big_l);
    let t_final = cfg.physics.t_final;
    let dt = effective_dt(cfg);

    let wp_b = weight_point(cfg, &grid, boundary_mode(cfg))?;
    let l3 = check_lemma3(&wp_b, &grid, t_final)?;
    b.table(
        "lemma3.csv",
        format!(
            "eps,n_omega,n_omega0,n_omega1,m0,m1,gap,pass\n{:.12e},{},{},{},{:.12e},{:.12e},{:.12e},{}\n",
            l3.eps, l3.counts[0], l3.counts[1], l3.counts[2], l3.m0, l3.m1, l3.gap, l3.pass
        ),
    );
    b.flag("lemma3_pass", l3.pass);
    b.scalar("lemma3_gap", l3.gap);

    let cut_b = build_cutoffs(l3.omega0, l3.omega1, ell, big_l, &grid)?;
    let wf_b = build_weights(&wp_b, &grid, t_final, dt)?;
    let mut csv = String::from("alpha,s,lhs,rhs,factor,derived_factor,pass\n");
    let mut all = true;
    b.time("lemma2", || {
        for (name, alpha) in bump_alphas(ell) {
            for s in LEMMA2_S {
                let r = check_lemma2(&*alpha, &cut_b, &wf_b, &grid, s)?;
                all &= r.pass;
                let _ = writeln!(
                    csv,
                    "{name},{s},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    r.lhs, r.rhs, r.factor, r.derived_factor, r.pass
                );
            }
        }
        Ok(())
    })?;
    b.table("lemma2.csv", csv);
    b.flag("lemma2_all_pass", all);

    let tw = Twin::new(cfg)?;
    if curvature_gap_sq(&tw.theta, &tw.theta_ref, ell) == 0.0 {
        // α ≡ 0 leaves nothing to bound
        return Ok(());
    }
    let (wp, cut) = match cfg.carleman.mode {
        WeightKind::Interior => {
            (weight_point(cfg, &grid, WeightMode::Interior)?, build_cutoffs(SubSection::Whole, SubSection::Whole, ell, big_l, &grid)?)
        }
        WeightKind::Boundary => (wp_b, cut_b),
    };
    let wf = build_weights(&wp, &grid, t_final, dt)?;
    let metric = assemble_metric(&tw.theta, &grid)?;
    let lb = assemble_laplace_beltrami(&metric, &grid);
    let report = b.time("lemma1", || {
        let (q, q_ref) = tw.symmetric_pair(t_final)?;
        let z = time_derivative(&q.sub(&q_ref)?)?;
        let chi = cut.sample(&grid);
        let frak = WaveField {
            t0: z.t0,
            dt: z.dt,
            levels: z
                .levels
                .iter()
                .map(|l| grid.gather(&grid.scatter(l).iter().zip(&chi).map(|(v, c)| v * c).collect::<Vec<_>>()))
                .collect(),
        };
        let (th, tr) = (&tw.theta, &tw.theta_ref);
        let alpha = |x: f64| (th.rate(x) - tr.rate(x), th.curvature(x) - tr.curvature(x));
        check_lemma1(&frak, &z, &alpha, &cut, &wf, &metric, &lb, &grid, &cfg.s_values())
    })?;
    let mut csv = String::from("s,lhs,bracket,constant,identity_defect\n");
    for (r, d) in report.rows.iter().zip(&report.identity_defect) {
        let _ = writeln!(csv, "{:.6e},{:.12e},{:.12e},{:.12e},{:.3e}", r.s, r.lhs, r.bracket, r.constant, d);
    }
    b.table("lemma1.csv", csv);
    b.scalar("lemma1_slope", report.slope);
    b.scalar("lemma1_constant", report.constant);
    Ok(())
}

fn reconstruction_config(cfg: &ExperimentConfig) -> ReconstructionConfig {
    let inv = &cfg.inverse;
    ReconstructionConfig { dim: inv.dim, lambda: inv.lambda, max_iter: inv.iterations, sigma: inv.sigma, q_min: inv.q_min }
}

fn record_reconstruction(b: &mut ResultsBundle, r: &ReconstructionResult) {
    b.table("reconstruction.csv", r.samples_csv());
    let mut csv = String::from("iteration,residual_norm\n");
    for (k, v) in r.residual_history.iter().enumerate() {
        let _ = writeln!(csv, "{k},{v:.12e}");
    }
    b.table("residual_history.csv", csv);
    let mut coeffs = String::from("index,coefficient\n");
    for (k, c) in r.coefficients.iter().enumerate() {
        let _ = writeln!(coeffs, "{k},{c:.16e}");
    }
    b.table("coefficients.csv", coeffs);
    if let Some(e) = r.relative_error {
        b.scalar("relative_error", e);
    }
    b.scalar("residual_norm", r.residual_norm);
    b.scalar("lambda", r.lambda);
    b.scalar("q_measured", r.q_measured);
    b.scalar("iterations", r.residual_history.len().saturating_sub(1) as f64);
}

fn inverse_interior(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let tw = Twin::new(cfg)?;
    let g = &tw.grid;
    let omega0 = cfg.omega0();
    check_observation_subsection(omega0, g)?;
    let (ell, big_l) = (cfg.geometry.ell, cfg.geometry.big_l);
    let (q, q_ref) = b.time("forward", || tw.symmetric_pair(cfg.physics.t_final))?;
    let metric_ref = assemble_metric(&tw.theta_ref, g)?;
    let mut obs = extract_observations(&q, &q_ref, &ObservationRegion::Interior(Cylinder::new(omega0, big_l)), &metric_ref, g)?;
    if cfg.inverse.sigma > 0.0 {
        add_noise(&mut obs, cfg.inverse.sigma, &mut stream(cfg.inverse.seed, 0));
    }
    let region = Cylinder::new(omega0, ell);
    let data = InteriorData::from_observations(&obs, &region, g, &tw.theta_ref, &tw.q_ref0, &tw.gap0)?;
    let r = b.time("reconstruct", || reconstruct_interior(&data, &region, &reconstruction_config(cfg), Some(&tw.theta)))?;
    record_reconstruction(b, &r);
    Ok(())
}

fn inverse_boundary(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let tw = Twin::new(cfg)?;
    let g = &tw.grid;
    let wp = weight_point(cfg, g, boundary_mode(cfg))?;
    let t_final = cfg.physics.t_final;
    let twin = b.time("reference", || {
        BoundaryTwin::new(g, &tw.theta_ref, &tw.q_ref0, &tw.gap0, gamma0_region(g, &wp), t_final, tw.dt)
    })?;
    let mut obs = b.time("forward", || twin.predict(&tw.theta))?;
    if cfg.inverse.sigma > 0.0 {
        add_noise(&mut obs, cfg.inverse.sigma, &mut stream(cfg.inverse.seed, 0));
    }
    let r = b.time("reconstruct", || reconstruct_boundary(&twin, &obs, &wp, &reconstruction_config(cfg), Some(&tw.theta)))?;
    record_reconstruction(b, &r);
    b.scalar("gamma0_nodes", obs.nodes.len() as f64);
    Ok(())
}

/// Pairs of the configured stability family. Dyadic members are
/// `θ̃ + c θ` with gap `c·gap` for `c = 1, 1/2, 1/4, 1/8`; random members
/// draw an admissible spline increment from stream `j + 1`.
pub fn stability_family(cfg: &ExperimentConfig, grid: &Grid3D) -> Result<Vec<StabilityPair>> {
    let theta = cfg.profile()?;
    let theta_ref = cfg.reference_profile()?;
    let amp = cfg.physics.gap_amplitude;
    match cfg.inverse.family {
        FamilyKind::Dyadic => [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&c| {
                let t = theta_ref.plus_scaled(&theta, c);
                t.check_admissible(crate::geometry::ADMISSIBILITY_SAMPLES)?;
                Ok(StabilityPair { theta: t, theta_ref: theta_ref.clone(), gap0: gap_state(grid, c * amp) })
            })
            .collect(),
        FamilyKind::Random => Ok((0..cfg.inverse.pairs)
            .map(|j| {
                let mut rng = stream(cfg.inverse.seed, j as u64 + 1);
                StabilityPair {
                    theta: random_profile(&mut rng, &theta_ref, cfg.inverse.dim, RANDOM_FRACTION),
                    theta_ref: theta_ref.clone(),
                    gap0: gap_state(grid, amp),
                }
            })
            .collect()),
    }
}

fn stability(cfg: &ExperimentConfig, b: &mut ResultsBundle) -> Result<()> {
    let grid = cfg.grid()?;
    let p = &cfg.physics;
    let q_ref0 = initial_state(p.initial_state, &grid, p.amplitude);
    let region = match cfg.carleman.mode {
        WeightKind::Interior => {
            check_observation_subsection(cfg.omega0(), &grid)?;
            ObservationRegion::Interior(Cylinder::new(cfg.omega0(), cfg.geometry.big_l))
        }
        WeightKind::Boundary => gamma0_region(&grid, &weight_point(cfg, &grid, boundary_mode(cfg))?),
    };
    let family = stability_family(cfg, &grid)?;
    let setup = StabilitySetup {
        grid: &grid,
        q_ref0: &q_ref0,
        region,
        t_final: p.t_final,
        dt: effective_dt(cfg),
        ell: cfg.geometry.ell,
        big_l: cfg.geometry.big_l,
    };
    let records = b.time("pairs", || stability_experiment(&setup, &family))?;
    b.table("stability.csv", records_csv(&records));
    if let Some(s) = summarize(&records) {
        b.scalar("ratio_count", s.count as f64);
        b.scalar("ratio_max", s.max);
        b.scalar("ratio_median", s.median);
        b.scalar("ratio_min", s.min);
        b.scalar("max_over_median", s.max / s.median);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forward_cfg() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
experiment = "forward"
[geometry]
section = "rectangle"
cells = [6, 6]
axial_cells = 8
ell = 0.4
big_l = 0.6
lambda = 1.0
[physics]
t_final = 0.05
dt = 0.00078125
initial_state = "eigenmode"
"#,
        )
        .unwrap()
    }

    #[test]
    fn forward_bundle_conserves_norm() {
        let b = run_experiment(&forward_cfg()).unwrap();
        assert!(b.summary["max_drift"] <= 1e-12, "{:?}", b.summary);
        assert_eq!(b.summary["steps"], 64.0);
        let csv = &b.tables["forward_norms.csv"];
        assert!(csv.starts_with("step,t,l2_norm,relative_drift\n"));
        assert_eq!(csv.lines().count(), 66);
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut cfg = forward_cfg();
        cfg.geometry.ell = 0.7;
        let e = run_experiment(&cfg).unwrap_err();
        assert!(e.to_string().contains("ell < big_l < lambda"), "{e}");
    }

    #[test]
    fn pipeline_errors_carry_the_experiment_name() {
        let mut cfg = forward_cfg();
        cfg.experiment = ExperimentKind::InverseInterior;
        // ω₀ of the default physics block reaches the axis on this small grid
        cfg.physics.omega0_centre = [0.0, 0.0];
        let e = run_experiment(&cfg).unwrap_err();
        assert!(matches!(e, Error::Pipeline { experiment: "inverse_interior", .. }), "{e}");
    }

    #[test]
    fn empty_bundle_exports_config_only() {
        let dir = tempfile::tempdir().unwrap();
        let b = ResultsBundle::empty(forward_cfg());
        let m = export_bundle(&b, dir.path()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].file, "config.toml");
        let listing = std::fs::read_to_string(dir.path().join("manifest.sha256")).unwrap();
        assert_eq!(listing, format!("{}  config.toml\n", m[0].sha256));
        let echo = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
        let back = ExperimentConfig::from_toml(&echo).unwrap();
        assert_eq!(back, forward_cfg());
    }

    #[test]
    fn re_export_gives_identical_checksums() {
        let mut b = ResultsBundle::empty(forward_cfg());
        b.table("a.csv", "x\n1\n".into());
        b.scalar("v", 0.5);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(export_bundle(&b, d1.path()).unwrap(), export_bundle(&b, d2.path()).unwrap());
    }

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(hex_sha256(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn gap_state_scales_linearly() {
        let g = forward_cfg().grid().unwrap();
        let a = gap_state(&g, 1.0);
        let b = gap_state(&g, 0.25);
        assert!(a.iter().zip(&b).all(|(x, y)| (x * 0.25 - y).norm() < 1e-15));
        assert!(gap_state(&g, 0.0).iter().all(|v| v.norm() == 0.0));
    }
}
