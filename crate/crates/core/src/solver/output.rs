//! Time-series CSV and binary snapshot dumps.

use super::{EnergyReport, Snapshot};
use crate::grid::Grid;
use crate::mhd::COMPONENT_NAMES;
use crate::{Result, NU};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const SERIES_HEADER: &str = "t,I_plus,I_minus,J,Q_boundary,div_defect_plus,div_defect_minus,phi_l2,phi_d2_l2";

pub fn write_series_csv(path: &Path, series: &[EnergyReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SERIES_HEADER}")?;
    for r in series {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Write `<stem>.bin` (little-endian f64: plus side, minus side, front) and
/// the text header `<stem>.hdr`. Each side is stored component-major, then
/// x1 index, then x2 index. Returns the two paths.
pub fn write_snapshot(stem: &Path, snap: &Snapshot, grid: &Grid) -> Result<(PathBuf, PathBuf)> {
    let bin = stem.with_extension("bin");
    let hdr = stem.with_extension("hdr");
    let mut w = BufWriter::new(File::create(&bin)?);
    for side in &snap.u {
        for c in 0..NU {
            for v in side.iter() {
                w.write_all(&v[c].to_le_bytes())?;
            }
        }
    }
    for v in &snap.phi {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let mut h = BufWriter::new(File::create(&hdr)?);
    writeln!(h, "format = f64le")?;
    writeln!(h, "t = {:.17e}", snap.t)?;
    writeln!(h, "N1_nodes = {}", grid.np1())?;
    writeln!(h, "N2 = {}", grid.n2)?;
    writeln!(h, "X1 = {:.17e}", grid.x1_max)?;
    writeln!(h, "X2 = {:.17e}", grid.x2_len)?;
    writeln!(h, "components = {}", COMPONENT_NAMES.join(","))?;
    writeln!(h, "layout = side(plus,minus) x component x x1 x x2, then front x2")?;
    h.flush()?;
    Ok((bin, hdr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_size_and_header() {
        let grid = Grid::new(4, 5, 1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let mut s = Snapshot::zeros(&grid);
        s.u[0][3][2] = 1.5;
        s.phi[4] = -2.0;
        let dir = tempfile::tempdir().unwrap();
        let (bin, hdr) = write_snapshot(&dir.path().join("snap"), &s, &grid).unwrap();
        let bytes = std::fs::read(bin).unwrap();
        assert_eq!(bytes.len(), 8 * (2 * NU * grid.npts() + grid.n2));
        let off = 8 * (2 * grid.npts() + 3);
        assert_eq!(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()), 1.5);
        let last = bytes.len() - 8;
        assert_eq!(f64::from_le_bytes(bytes[last..].try_into().unwrap()), -2.0);
        let text = std::fs::read_to_string(hdr).unwrap();
        assert!(text.contains("components = p,v1,v2,H1,H2,S"));
    }
}
