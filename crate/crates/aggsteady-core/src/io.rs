//! CSV/JSON emission and loading for densities and height functions.

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::height::HeightFunction;
use crate::scalar::{fl, Real};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub dimension: u32,
    pub mass: f64,
    pub linf: f64,
    pub support_radius: f64,
    pub nodes: usize,
}

pub fn write_density<S: Real, P: AsRef<Path>>(path: P, rho: &RadialDensity<S>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "rho"])?;
    for (r, v) in rho.grid.nodes.iter().zip(&rho.values) {
        w.write_record([format!("{:.17e}", r.to_f64().unwrap()), format!("{:.17e}", v.to_f64().unwrap())])?;
    }
    w.flush()?;
    let sidecar = DensitySidecar {
        dimension: rho.grid.dim,
        mass: rho.mass().to_f64().unwrap(),
        linf: rho.linf().to_f64().unwrap(),
        support_radius: rho.support_radius_interp().to_f64().unwrap(),
        nodes: rho.grid.len(),
    };
    let json_path = path.with_extension("json");
    std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Same CSV layout as `write_density` but for raw cell values that need not
/// be radially decreasing (evolution transients can carry shells).
pub fn write_profile<S: Real, P: AsRef<Path>>(
    path: P,
    grid: &RadialGrid<S>,
    values: &[S],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "rho"])?;
    for (r, v) in grid.nodes.iter().zip(values) {
        w.write_record([
            format!("{:.17e}", r.to_f64().unwrap()),
            format!("{:.17e}", v.to_f64().unwrap()),
        ])?;
    }
    w.flush()?;
    let linf = values.iter().cloned().fold(S::zero(), S::max);
    let support = values
        .iter()
        .rposition(|&v| v > S::zero())
        .map(|i| grid.nodes[i])
        .unwrap_or(S::zero());
    let sidecar = DensitySidecar {
        dimension: grid.dim,
        mass: grid.integrate(values).to_f64().unwrap(),
        linf: linf.to_f64().unwrap(),
        support_radius: support.to_f64().unwrap(),
        nodes: grid.len(),
    };
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_density<S: Real, P: AsRef<Path>>(path: P, dim: u32) -> Result<RadialDensity<S>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidParameter("density CSV needs r,rho columns".into()));
        }
        let r: f64 = rec[0]
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("bad radius {:?}: {e}", &rec[0])))?;
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("bad value {:?}: {e}", &rec[1])))?;
        nodes.push(fl::<S>(r));
        values.push(fl::<S>(v));
    }
    let grid = RadialGrid::new(dim, nodes)?;
    RadialDensity::new(grid, values)
}

pub fn write_height<S: Real, P: AsRef<Path>>(path: P, h: &HeightFunction<S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["s", "h", "hprime"])?;
    w.write_record(["0", "0", &format!("{:.17e}", h.hp_at_zero.to_f64().unwrap())])?;
    for i in 0..h.s.len() {
        w.write_record([
            format!("{:.17e}", h.s[i].to_f64().unwrap()),
            format!("{:.17e}", h.h[i].to_f64().unwrap()),
            format!("{:.17e}", h.hp[i].to_f64().unwrap()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_rows<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(header)?;
    for row in rows {
        let rec: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::tent;

    #[test]
    fn density_round_trips_through_csv() {
        let dir = std::env::temp_dir().join("aggsteady-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tent.csv");
        let g = RadialGrid::uniform(2, 1.5, 64).unwrap();
        let rho = tent(g, 1.0).unwrap();
        write_density(&path, &rho).unwrap();
        let back: RadialDensity<f64> = read_density(&path, 2).unwrap();
        assert_eq!(back.values.len(), rho.values.len());
        assert!(rho.l1_distance(&back) < 1e-15);
        assert!(path.with_extension("json").exists());
    }
}
