use std::path::Path;

use attractorkit::covering::PointCloud;
use attractorkit::dde::NormKind;
use attractorkit::{Error, Result};

/// Points from a comma-separated file, one per row. A first row that does
/// not parse as numbers is taken as a header; blank lines are skipped.
pub fn read(path: &Path, norm: NormKind) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) => points.push(p),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::InvalidInput(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    let dim = points.first().map(Vec::len).ok_or(Error::EmptyCloud)?;
    PointCloud::real(dim, norm, points)
}
