//! Snapshot-matrix memory estimates for full and decomposed training data.

use std::f64::consts::TAU;

use ddrom_core::Decomposition;

pub const BYTES_PER_VALUE: u64 = 8;

/// Bytes of a dense `rows × n_t` matrix of f64 values.
pub fn matrix_bytes(rows: u64, n_t: u64) -> u64 {
    rows * n_t * BYTES_PER_VALUE
}

/// Bytes of the largest subdomain snapshot slice with `n_vars` variables.
pub fn largest_subdomain_bytes(dec: &Decomposition, n_vars: usize, n_t: usize) -> u64 {
    matrix_bytes((dec.largest_subdomain() * n_vars) as u64, n_t as u64)
}

/// Share of a full circle covered by one of `k` equal sectors widened by `overlap` radians.
pub fn sector_fraction(k: usize, overlap: f64) -> f64 {
    (TAU / k as f64 + overlap) / TAU
}

/// Full-matrix bytes divided by the largest-sector bytes, for a state of
/// dimension `n` spread uniformly around the circle.
pub fn sector_reduction_factor(n: u64, n_t: u64, k: usize, overlap: f64) -> f64 {
    let sub_rows = (n as f64 * sector_fraction(k, overlap)).ceil() as u64;
    matrix_bytes(n, n_t) as f64 / matrix_bytes(sub_rows, n_t) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddrom_core::decomp::decompose_sectors;
    use ddrom_core::Geometry;
    use std::f64::consts::PI;

    #[test]
    fn four_overlapping_sectors() {
        let f = sector_reduction_factor(75_675_600, 375, 4, PI / 9.0);
        assert!((f - 36.0 / 11.0).abs() < 1e-6, "{f}");
    }

    #[test]
    fn decomposition_bytes() {
        let g = Geometry::uniform_circle(1.0, 720).unwrap();
        let dec = decompose_sectors(&g, 4, PI / 9.0).unwrap();
        // 220 nominal cells plus the shared endpoint
        assert_eq!(largest_subdomain_bytes(&dec, 2, 10), 221 * 2 * 10 * 8);
        assert_eq!(matrix_bytes(3, 5), 120);
    }
}
