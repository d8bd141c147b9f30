//! Plot data for the bivariate exponent region.

use gauss_holder::holder::{region_membership, region_norm, CoIsometryFrame, ExponentRegionQuery};
use gauss_holder::{Error, Result};

pub const HEADER: &str = "c1,c2,norm,member";

/// CSV rows `(c1, c2, norm, member)` over a `grid × grid` lattice of
/// `[0, 1]²`, row-major with `c1` outer. LF line endings.
pub fn emit_region_plotdata(t: f64, grid: usize) -> Result<String> {
    if grid < 2 {
        return Err(Error::InvalidInput(format!("grid must be at least 2, got {grid}")));
    }
    let frame = CoIsometryFrame::bivariate(t)?;
    let step = 1.0 / (grid - 1) as f64;
    let mut out = String::with_capacity(32 * grid * grid);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..grid {
        for j in 0..grid {
            let c = vec![i as f64 * step, j as f64 * step];
            let norm = region_norm(&frame, &c)?;
            let member = region_membership(&ExponentRegionQuery { frame: frame.clone(), c: c.clone() })?;
            out.push_str(&format!("{},{},{},{}\n", c[0], c[1], norm, member));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn members(csv: &str) -> Vec<(f64, f64, bool)> {
        csv.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].parse().unwrap(), f[1].parse().unwrap(), f[3] == "true")
            })
            .collect()
    }

    #[test]
    fn independent_square() {
        let csv = emit_region_plotdata(0.0, 3).unwrap();
        assert!(csv.starts_with("c1,c2,norm,member\n"));
        let rows = members(&csv);
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.2));
        assert_eq!((rows[1].0, rows[1].1), (0.0, 0.5));
    }

    #[test]
    fn perfectly_correlated_simplex() {
        for (c1, c2, m) in members(&emit_region_plotdata(1.0, 11).unwrap()) {
            let sum = c1 + c2;
            if (sum - 1.0).abs() > 1e-9 {
                assert_eq!(m, sum < 1.0, "({c1}, {c2})");
            }
        }
    }

    #[test]
    fn small_grid_rejected() {
        assert!(emit_region_plotdata(0.5, 1).is_err());
    }
}
