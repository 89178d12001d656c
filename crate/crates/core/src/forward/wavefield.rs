use std::io::Write;
use std::path::Path;

use crate::geometry::Grid3D;
use crate::{Error, Result, C64};

/// Complex field on interior unknowns at uniformly spaced time levels
/// `t0, t0 + dt, ...`.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub t0: f64,
    pub dt: f64,
    pub levels: Vec<Vec<C64>>,
}

impl WaveField {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.levels.len() - 1)
    }

    /// Index of the level at time `t`, if `t` lies on the time grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let n = x.round();
        ((x - n).abs() < 1e-9 && n >= 0.0 && (n as usize) < self.levels.len()).then_some(n as usize)
    }

    pub fn full(&self, grid: &Grid3D, n: usize) -> Vec<C64> {
        grid.scatter(&self.levels[n])
    }

    /// Discrete L2 norm of level `n` with cell-volume weights.
    pub fn l2_norm(&self, grid: &Grid3D, n: usize) -> f64 {
        (self.levels[n].iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume()).sqrt()
    }

    /// `self - other`, level by level.
    pub fn sub(&self, other: &WaveField) -> Result<WaveField> {
        self.check_matching(other)?;
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(WaveField { t0: self.t0, dt: self.dt, levels })
    }

    pub fn scale(&self, c: C64) -> WaveField {
        let levels = self.levels.iter().map(|l| l.iter().map(|v| v * c).collect()).collect();
        WaveField { t0: self.t0, dt: self.dt, levels }
    }

    pub fn check_matching(&self, other: &WaveField) -> Result<()> {
        if self.levels.len() != other.levels.len()
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
            || (self.t0 - other.t0).abs() > 1e-12 * self.dt.max(1.0)
            || self.levels.first().map(Vec::len) != other.levels.first().map(Vec::len)
        {
            return Err(Error::TimeGrid("wave fields live on different grids or time axes".into()));
        }
        Ok(())
    }

    /// Writes `path` as little-endian `f64` pairs, node-major (every level of
    /// unknown 0, then unknown 1, ...), and a text header next to it.
    pub fn export_binary(&self, grid: &Grid3D, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let n = self.levels.first().map_or(0, Vec::len);
        for u in 0..n {
            for level in &self.levels {
                f.write_all(&level[u].re.to_le_bytes())?;
                f.write_all(&level[u].im.to_le_bytes())?;
            }
        }
        f.flush()?;
        let d = grid.dims();
        let header = format!(
            "dims = [{}, {}, {}]\nunknowns = {}\nlevels = {}\nt0 = {:e}\ndt = {:e}\nT = {:e}\nlayout = \"node-major, (re, im) f64 little-endian\"\n",
            d[0],
            d[1],
            d[2],
            n,
            self.levels.len(),
            self.t0,
            self.dt,
            self.final_time()
        );
        std::fs::write(path.with_extension("hdr"), header)?;
        Ok(())
    }
}
