//! Overlapping decompositions of interval and annular geometries.
//!
//! Every subdomain owns a closed *interior* (delimited by two coordinates, or
//! two angles for sectors) and a *support* that reaches up to the interior
//! boundaries of its neighbors. Blending weights are 1 on the interior, ramp
//! linearly to 0 across each overlap and vanish outside the support.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::snapshot::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Interval,
    Annular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    /// Global spatial indices (interior and overlap), ascending.
    pub dofs: Vec<usize>,
    /// Interior delimiters: coordinates for intervals, angles for sectors.
    /// Sector angles are unwrapped, so `lo` may be negative or `hi > 2π`.
    pub interior: (f64, f64),
    pub neighbors: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    topology: Topology,
    n_points: usize,
    subdomains: Vec<Subdomain>,
}

/// One weight vector of length `n_x` per subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendingWeights {
    pub weights: Vec<Vec<f64>>,
}

impl Decomposition {
    /// The degenerate single-subdomain decomposition covering every point.
    pub fn single(n_points: usize) -> Self {
        Self {
            topology: Topology::Interval,
            n_points,
            subdomains: vec![Subdomain {
                dofs: (0..n_points).collect(),
                interior: (f64::NEG_INFINITY, f64::INFINITY),
                neighbors: BTreeSet::new(),
            }],
        }
    }

    /// Reassembles a decomposition from stored parts, checking structural invariants.
    pub fn from_parts(topology: Topology, n_points: usize, subdomains: Vec<Subdomain>) -> Result<Self> {
        let dec = Self { topology, n_points, subdomains };
        dec.validate()?;
        Ok(dec)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn k(&self) -> usize {
        self.subdomains.len()
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn dofs(&self, i: usize) -> &[usize] {
        &self.subdomains[i].dofs
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.subdomains[i].neighbors.iter().copied().collect()
    }

    /// Adjacency lists for every subdomain, ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.k()).map(|i| self.neighbors(i)).collect()
    }

    /// Shared spatial indices of two subdomains.
    pub fn overlap(&self, i: usize, j: usize) -> Vec<usize> {
        let b: BTreeSet<usize> = self.subdomains[j].dofs.iter().copied().collect();
        self.subdomains[i].dofs.iter().copied().filter(|x| b.contains(x)).collect()
    }

    /// Largest subdomain point count.
    pub fn largest_subdomain(&self) -> usize {
        self.subdomains.iter().map(|s| s.dofs.len()).max().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::invalid("decomposition has no subdomains"));
        }
        let mut covered = vec![false; self.n_points];
        for (i, s) in self.subdomains.iter().enumerate() {
            crate::snapshot::check_index_list(&s.dofs, self.n_points)?;
            if s.dofs.is_empty() {
                return Err(Error::invalid(format!("subdomain {i} has no points")));
            }
            for &x in &s.dofs {
                covered[x] = true;
            }
            for &j in &s.neighbors {
                if j == i || j >= k {
                    return Err(Error::invalid(format!("subdomain {i} lists invalid neighbor {j}")));
                }
                if !self.subdomains[j].neighbors.contains(&i) {
                    return Err(Error::invalid(format!("adjacency of {i} and {j} is not symmetric")));
                }
            }
        }
        if let Some(x) = covered.iter().position(|c| !c) {
            return Err(Error::invalid(format!("point {x} is not covered by any subdomain")));
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let shared = !self.overlap(i, j).is_empty();
                let adjacent = self.subdomains[i].neighbors.contains(&j);
                if shared != adjacent {
                    return Err(Error::invalid(format!(
                        "subdomains {i} and {j}: adjacency {adjacent} but shared points {shared}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn coordinate_tolerance(span: f64) -> f64 {
    1e-12 * span.abs().max(f64::MIN_POSITIVE)
}

/// Splits a 1D geometry into `k` equal nominal extents, each widened by
/// `overlap_width / 2` past every interior boundary.
pub fn decompose_interval(geometry: &Geometry, k: usize, overlap_width: f64) -> Result<Decomposition> {
    if geometry.dim() != 1 {
        return Err(Error::invalid("interval decomposition needs a 1D geometry"));
    }
    let n_x = geometry.n_points();
    check_count(k, n_x)?;
    let coords = geometry.coords();
    let a = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let b = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = (b - a) / k as f64;
    if !(overlap_width > 0.0) {
        return Err(Error::invalid("overlap width must be positive"));
    }
    if overlap_width >= h {
        return Err(Error::invalid(format!(
            "overlap {overlap_width} too large: must stay below the nominal extent {h} so non-adjacent subdomains do not intersect"
        )));
    }
    let half = overlap_width / 2.0;
    let interiors: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let lo = if i == 0 { a } else { a + i as f64 * h + half };
            let hi = if i + 1 == k { b } else { a + (i + 1) as f64 * h - half };
            (lo, hi)
        })
        .collect();
    interval_from_interiors(geometry, interiors)
}

/// Builds an interval decomposition from explicit, ordered interior delimiters.
/// Consecutive interiors must leave a positive gap (the overlap ramp).
pub fn interval_from_interiors(geometry: &Geometry, interiors: Vec<(f64, f64)>) -> Result<Decomposition> {
    let k = interiors.len();
    let n_x = geometry.n_points();
    check_count(k, n_x)?;
    for w in interiors.windows(2) {
        if !(w[0].0 <= w[0].1 && w[0].1 < w[1].0 && w[1].0 <= w[1].1) {
            return Err(Error::invalid("interior delimiters must be ordered with positive gaps"));
        }
    }
    let coords = geometry.first_axis();
    let span = interiors[k - 1].1 - interiors[0].0;
    let eps = coordinate_tolerance(span);
    let mut subdomains = Vec::with_capacity(k);
    for i in 0..k {
        let lo = if i == 0 { f64::NEG_INFINITY } else { interiors[i - 1].1 };
        let hi = if i + 1 == k { f64::INFINITY } else { interiors[i + 1].0 };
        let dofs: Vec<usize> = (0..n_x).filter(|&x| coords[x] >= lo - eps && coords[x] <= hi + eps).collect();
        let mut neighbors = BTreeSet::new();
        if i > 0 {
            neighbors.insert(i - 1);
        }
        if i + 1 < k {
            neighbors.insert(i + 1);
        }
        subdomains.push(Subdomain { dofs, interior: interiors[i], neighbors });
    }
    let dec = Decomposition { topology: Topology::Interval, n_points: n_x, subdomains };
    dec.validate().map_err(grid_too_coarse)?;
    Ok(dec)
}

/// Splits a periodic geometry into `k` sectors of nominal angle `2π/k`, each
/// widened by `overlap_angle / 2` on both sides. Sector `i` nominally spans
/// `[i·2π/k, (i+1)·2π/k]`.
pub fn decompose_sectors(geometry: &Geometry, k: usize, overlap_angle: f64) -> Result<Decomposition> {
    let angles = geometry
        .angles()
        .ok_or_else(|| Error::invalid("sector decomposition needs a periodic (annular) geometry"))?;
    let n_x = geometry.n_points();
    check_count(k, n_x)?;
    let h = TAU / k as f64;
    if !(overlap_angle > 0.0) {
        return Err(Error::invalid("overlap angle must be positive"));
    }
    if overlap_angle >= h {
        return Err(Error::invalid(format!(
            "overlap angle {overlap_angle} must be below the nominal sector angle {h}"
        )));
    }
    let half = overlap_angle / 2.0;
    let eps = coordinate_tolerance(TAU);
    let mut subdomains = Vec::with_capacity(k);
    for i in 0..k {
        let start = i as f64 * h;
        let interior = (start + half, start + h - half);
        let support = (start - half, start + h + half);
        let dofs: Vec<usize> = (0..n_x).filter(|&x| arc_contains(support, angles[x], eps)).collect();
        let mut neighbors = BTreeSet::new();
        neighbors.insert((i + k - 1) % k);
        neighbors.insert((i + 1) % k);
        subdomains.push(Subdomain { dofs, interior, neighbors });
    }
    let dec = Decomposition { topology: Topology::Annular, n_points: n_x, subdomains };
    dec.validate().map_err(grid_too_coarse)?;
    Ok(dec)
}

fn grid_too_coarse(e: Error) -> Error {
    match e {
        Error::Invalid(msg) => Error::Invalid(format!("{msg} (is the overlap narrower than the grid spacing?)")),
        e => e,
    }
}

fn check_count(k: usize, n_x: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid("an overlapping decomposition needs k >= 2"));
    }
    if k > n_x {
        return Err(Error::invalid(format!("k = {k} exceeds the number of points {n_x}")));
    }
    Ok(())
}

/// Whether `theta` lies on the closed arc running counterclockwise from `arc.0` to `arc.1`.
fn arc_contains(arc: (f64, f64), theta: f64, eps: f64) -> bool {
    let len = arc.1 - arc.0;
    let off = (theta - arc.0).rem_euclid(TAU);
    off <= len + eps || off >= TAU - eps
}

/// Evaluates the blending weights of `dec` at every point of `geometry`.
pub fn blending_weights(dec: &Decomposition, geometry: &Geometry) -> Result<BlendingWeights> {
    let n_x = geometry.n_points();
    if n_x != dec.n_points {
        return Err(Error::dim(format!("geometry has {n_x} points, decomposition {}", dec.n_points)));
    }
    let k = dec.k();
    let mut weights = vec![vec![0.0; n_x]; k];
    if k == 1 {
        weights[0].fill(1.0);
        return Ok(BlendingWeights { weights });
    }
    match dec.topology {
        Topology::Interval => {
            let coords = geometry.first_axis();
            let subs = &dec.subdomains;
            let span = subs[k - 1].interior.1 - subs[0].interior.0;
            let eps = coordinate_tolerance(span);
            for x in 0..n_x {
                let c = coords[x];
                if let Some(i) = subs
                    .iter()
                    .position(|s| c >= s.interior.0 - eps && c <= s.interior.1 + eps)
                {
                    weights[i][x] = 1.0;
                    continue;
                }
                if c < subs[0].interior.0 {
                    weights[0][x] = 1.0;
                    continue;
                }
                if c > subs[k - 1].interior.1 {
                    weights[k - 1][x] = 1.0;
                    continue;
                }
                let i = (0..k - 1)
                    .find(|&i| c > subs[i].interior.1 && c < subs[i + 1].interior.0)
                    .expect("point between consecutive interiors");
                let right = subs[i].interior.1;
                let left = subs[i + 1].interior.0;
                let w = (c - left) / (right - left);
                weights[i][x] = w;
                weights[i + 1][x] = 1.0 - w;
            }
        }
        Topology::Annular => {
            let angles = geometry
                .angles()
                .ok_or_else(|| Error::invalid("annular decomposition needs a periodic geometry"))?;
            let eps = coordinate_tolerance(TAU);
            let subs = &dec.subdomains;
            for x in 0..n_x {
                let theta = angles[x];
                if let Some(i) = subs.iter().position(|s| arc_contains(s.interior, theta, eps)) {
                    weights[i][x] = 1.0;
                    continue;
                }
                let mut placed = false;
                for i in 0..k {
                    let j = (i + 1) % k;
                    let right = subs[i].interior.1;
                    let gap = (subs[j].interior.0 - right).rem_euclid(TAU);
                    let t = (theta - right).rem_euclid(TAU);
                    if t > 0.0 && t < gap {
                        let w = (gap - t) / gap;
                        weights[i][x] = w;
                        weights[j][x] = 1.0 - w;
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return Err(Error::invalid(format!("point {x} at angle {theta} is in no interior or overlap")));
                }
            }
        }
    }
    Ok(BlendingWeights { weights })
}

impl BlendingWeights {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn n_points(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    pub fn ones(n_points: usize) -> Self {
        Self { weights: vec![vec![1.0; n_points]] }
    }
}

/// `Σ_i r_i ⊙ w_i`. Each field has full length (`n_vars * n_x` values,
/// variable-major) and is zero outside its subdomain; the weights repeat over
/// every variable block.
pub fn recombine(fields: &[DVector<f64>], w: &BlendingWeights) -> Result<DVector<f64>> {
    if fields.len() != w.k() {
        return Err(Error::dim(format!("{} fields for {} weight vectors", fields.len(), w.k())));
    }
    let n_x = w.n_points();
    let len = fields.first().map_or(0, |f| f.len());
    if n_x == 0 || !len.is_multiple_of(n_x) || fields.iter().any(|f| f.len() != len) {
        return Err(Error::dim(format!(
            "field lengths must be equal multiples of the {n_x} weight entries"
        )));
    }
    let mut out = DVector::zeros(len);
    for (field, weight) in fields.iter().zip(&w.weights) {
        for (row, (o, f)) in out.iter_mut().zip(field.iter()).enumerate() {
            *o += weight[row % n_x] * f;
        }
    }
    Ok(out)
}

/// Zero-extends a subdomain-local state (variable-major over `dofs`) to full length.
pub fn extend_by_zeros(local: &[f64], dofs: &[usize], n_vars: usize, n_x: usize) -> Result<DVector<f64>> {
    if local.len() != n_vars * dofs.len() {
        return Err(Error::dim(format!(
            "local state has {} entries, expected {}",
            local.len(),
            n_vars * dofs.len()
        )));
    }
    let mut out = DVector::zeros(n_vars * n_x);
    let n_i = dofs.len();
    for v in 0..n_vars {
        for (a, &x) in dofs.iter().enumerate() {
            out[v * n_x + x] = local[v * n_i + a];
        }
    }
    Ok(out)
}
