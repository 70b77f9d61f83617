//! Tensor-product grids, nodal fields, trapezoidal quadrature, and the
//! discrete Laplacian with a mirror ghost-node closure for flux boundary
//! data.
//!
//! All grids are uniform per axis. Volume quadrature is the trapezoidal
//! tensor product, so the weights are positive, sum to |Ω| exactly, and keep
//! integral operators monotone. Boundary quadrature is the two-point
//! counting measure in 1-D and edge-wise trapezoid in 2-D; rectangle corners
//! carry half a weight from each adjacent edge and an averaged outward
//! normal. The ghost closure `u_ghost = u_inner + 2h·flux` enforces the
//! outward-normal derivative to second order and makes the discrete
//! divergence theorem `Σ w·Δ_h u = Σ bw·flux` hold exactly, corner nodes
//! included (both corner directions reuse the same scalar flux).

use std::fmt::Write as _;

use thiserror::Error;

use crate::problem::DomainSpec;

/// Which end of an axis a boundary face sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSide {
    Low,
    High,
}

/// A boundary node together with its outward normal and quadrature weight.
#[derive(Debug, Clone)]
pub struct BoundaryNode {
    /// Flat node index into fields on this grid.
    pub node: usize,
    /// Unit outward normal; averaged (then normalized) at rectangle corners.
    pub normal: [f64; 2],
    /// Boundary quadrature weight.
    pub weight: f64,
    /// Faces this node lies on: one entry on an edge, two at a corner.
    pub faces: Vec<(usize, FaceSide)>,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least 3 nodes per axis, got {0}")]
    TooFewNodes(usize),
}

/// Uniform tensor-product grid on an interval or rectangle.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    h: [f64; 2],
    lengths: [f64; 2],
    coords: Vec<[f64; 2]>,
    volume_weights: Vec<f64>,
    boundary: Vec<BoundaryNode>,
    boundary_slot: Vec<Option<usize>>,
    interior: Vec<usize>,
}

impl Grid {
    /// Build a grid with `n` nodes per axis (`n ≥ 3`).
    pub fn new(domain: &DomainSpec, n: usize) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        let (dim, lengths) = match *domain {
            DomainSpec::Interval { length } => (1, [length, 0.0]),
            DomainSpec::Rectangle { lx, ly } => (2, [lx, ly]),
        };
        let nn = if dim == 1 { [n, 1] } else { [n, n] };
        let h = [
            lengths[0] / (nn[0] - 1) as f64,
            if dim == 2 {
                lengths[1] / (nn[1] - 1) as f64
            } else {
                0.0
            },
        ];
        let num = nn[0] * nn[1];

        let mut coords = Vec::with_capacity(num);
        let mut volume_weights = Vec::with_capacity(num);
        let mut boundary = Vec::new();
        let mut boundary_slot = vec![None; num];
        let mut interior = Vec::new();

        let axis_weight = |idx: usize, count: usize, h: f64| -> f64 {
            if idx == 0 || idx == count - 1 {
                0.5 * h
            } else {
                h
            }
        };

        for j in 0..nn[1] {
            for i in 0..nn[0] {
                let node = j * nn[0] + i;
                let x = i as f64 * h[0];
                let y = if dim == 2 { j as f64 * h[1] } else { 0.0 };
                coords.push([x, y]);

                let wx = axis_weight(i, nn[0], h[0]);
                let w = if dim == 2 {
                    wx * axis_weight(j, nn[1], h[1])
                } else {
                    wx
                };
                volume_weights.push(w);

                let mut faces = Vec::new();
                if i == 0 {
                    faces.push((0, FaceSide::Low));
                } else if i == nn[0] - 1 {
                    faces.push((0, FaceSide::High));
                }
                if dim == 2 {
                    if j == 0 {
                        faces.push((1, FaceSide::Low));
                    } else if j == nn[1] - 1 {
                        faces.push((1, FaceSide::High));
                    }
                }

                if faces.is_empty() {
                    interior.push(node);
                    continue;
                }

                let mut normal = [0.0_f64, 0.0];
                let mut bweight = 0.0;
                for &(axis, side) in &faces {
                    let sign = match side {
                        FaceSide::Low => -1.0,
                        FaceSide::High => 1.0,
                    };
                    normal[axis] += sign;
                    if dim == 1 {
                        // Counting measure: each endpoint weighs 1.
                        bweight += 1.0;
                    } else {
                        // A face on axis `axis` is an edge running along the
                        // other axis; trapezoid weight along that edge.
                        let other = 1 - axis;
                        bweight += axis_weight(
                            if other == 0 { i } else { j },
                            nn[other],
                            h[other],
                        );
                    }
                }
                let norm = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
                normal[0] /= norm;
                normal[1] /= norm;

                boundary_slot[node] = Some(boundary.len());
                boundary.push(BoundaryNode {
                    node,
                    normal,
                    weight: bweight,
                    faces,
                });
            }
        }

        Ok(Grid {
            dim,
            n: nn,
            h,
            lengths,
            coords,
            volume_weights,
            boundary,
            boundary_slot,
            interior,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    /// Nodes per axis (second entry is 1 in 1-D).
    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    /// Grid spacing per axis (second entry is 0 in 1-D).
    pub fn spacing(&self) -> [f64; 2] {
        self.h
    }

    pub fn coord(&self, node: usize) -> [f64; 2] {
        self.coords[node]
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_weights
    }

    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Index into `boundary()` for a node, if it is a boundary node.
    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        self.boundary_slot[node]
    }

    /// |Ω|: length of the interval or area of the rectangle.
    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            self.lengths[0]
        } else {
            self.lengths[0] * self.lengths[1]
        }
    }

    /// |∂Ω|: 2 (counting measure) in 1-D, the perimeter in 2-D.
    pub fn boundary_measure(&self) -> f64 {
        if self.dim == 1 {
            2.0
        } else {
            2.0 * (self.lengths[0] + self.lengths[1])
        }
    }

    /// Smallest distance from a boundary node into the domain along any axis.
    pub fn min_spacing(&self) -> f64 {
        if self.dim == 1 {
            self.h[0]
        } else {
            self.h[0].min(self.h[1])
        }
    }

    /// Largest domain extent, used to scale finite-difference offsets.
    pub fn diameter(&self) -> f64 {
        if self.dim == 1 {
            self.lengths[0]
        } else {
            (self.lengths[0].powi(2) + self.lengths[1].powi(2)).sqrt()
        }
    }

    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.n[0]
        }
    }

    fn axis_index(&self, node: usize, axis: usize) -> usize {
        if axis == 0 {
            node % self.n[0]
        } else {
            node / self.n[0]
        }
    }

    /// Sample a function of (x, y) into a nodal field.
    pub fn field_from_fn(&self, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field::from(self.coords.iter().map(|&c| f(c)).collect::<Vec<_>>())
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn constant(value: f64, len: usize) -> Self {
        Field {
            values: vec![value; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Field {
    fn from(values: Vec<f64>) -> Self {
        Field { values }
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Trapezoidal approximation of `∫_Ω f dy`; exact for fields affine per cell.
pub fn volume_quadrature(f: &Field, grid: &Grid) -> f64 {
    f.values()
        .iter()
        .zip(grid.volume_weights())
        .map(|(v, w)| v * w)
        .sum()
}

/// Weighted boundary sum approximating `∫_∂Ω g dS`; `g` is indexed like
/// `grid.boundary()`.
pub fn boundary_quadrature(g: &[f64], grid: &Grid) -> f64 {
    g.iter()
        .zip(grid.boundary())
        .map(|(v, bn)| v * bn.weight)
        .sum()
}

/// Second-order central Laplacian at interior nodes; boundary entries are 0.
pub fn laplacian_interior(f: &Field, grid: &Grid) -> Field {
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for &node in grid.interior() {
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            let s = grid.stride(axis);
            let h = grid.spacing()[axis];
            acc += ((v[node - s] - v[node]) + (v[node + s] - v[node])) / (h * h);
        }
        out[node] = acc;
    }
    Field::from(out)
}

/// A ghost value extending the stencil beyond one boundary face.
#[derive(Debug, Clone, Copy)]
pub struct GhostValue {
    /// Index into `grid.boundary()`.
    pub slot: usize,
    pub axis: usize,
    pub side: FaceSide,
    pub value: f64,
}

/// Mirror closure enforcing the outward-normal derivative: for a boundary
/// node with inner neighbor `u_in` at distance `h` along the face normal,
/// `u_ghost = u_in + 2h·flux`. Corner nodes get one ghost per face, both
/// using the same scalar flux.
pub fn ghost_closure(f: &Field, flux: &[f64], grid: &Grid) -> Vec<GhostValue> {
    assert_eq!(flux.len(), grid.boundary().len(), "one flux value per boundary node");
    let v = f.values();
    let mut ghosts = Vec::new();
    for (slot, bn) in grid.boundary().iter().enumerate() {
        for &(axis, side) in &bn.faces {
            let s = grid.stride(axis);
            let h = grid.spacing()[axis];
            let inner = match side {
                FaceSide::Low => v[bn.node + s],
                FaceSide::High => v[bn.node - s],
            };
            ghosts.push(GhostValue {
                slot,
                axis,
                side,
                value: inner + 2.0 * h * flux[slot],
            });
        }
    }
    ghosts
}

/// Laplacian on every node, with the ghost closure supplying the stencil at
/// boundary nodes. `flux` is indexed like `grid.boundary()`.
pub fn laplacian_with_flux(f: &Field, flux: &[f64], grid: &Grid) -> Field {
    assert_eq!(flux.len(), grid.boundary().len(), "one flux value per boundary node");
    let v = f.values();
    let n = grid.shape();
    let mut out = vec![0.0; v.len()];
    for node in 0..v.len() {
        let g = grid.boundary_slot(node).map(|slot| flux[slot]);
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            let s = grid.stride(axis);
            let h = grid.spacing()[axis];
            let idx = grid.axis_index(node, axis);
            let d2 = if idx == 0 {
                // ghost = v[node + s] + 2h·flux
                2.0 * (v[node + s] - v[node]) + 2.0 * h * g.expect("boundary flux")
            } else if idx == n[axis] - 1 {
                2.0 * (v[node - s] - v[node]) + 2.0 * h * g.expect("boundary flux")
            } else {
                (v[node - s] - v[node]) + (v[node + s] - v[node])
            };
            acc += d2 / (h * h);
        }
        out[node] = acc;
    }
    Field::from(out)
}

/// First-order one-sided outward-normal derivative of a nodal field at a
/// boundary node: per face `(u_b − u_inner)/h`, averaged along the corner
/// normal in 2-D.
pub fn one_sided_normal_derivative(f: &Field, grid: &Grid, slot: usize) -> f64 {
    let bn = &grid.boundary()[slot];
    let v = f.values();
    let mut acc = 0.0;
    for &(axis, side) in &bn.faces {
        let s = grid.stride(axis);
        let h = grid.spacing()[axis];
        let inner = match side {
            FaceSide::Low => v[bn.node + s],
            FaceSide::High => v[bn.node - s],
        };
        // On either side the outward-pointing difference quotient is
        // (u_b − u_inner)/h; weight it by the matching normal component.
        acc += bn.normal[axis].abs() * (v[bn.node] - inner) / h;
    }
    acc
}

/// Serialize a field as CSV: header `x[,y],value`, one row per node.
pub fn field_to_csv(f: &Field, grid: &Grid) -> String {
    let mut out = String::new();
    if grid.dim() == 1 {
        out.push_str("x,value\n");
        for (node, &c) in grid.coords().iter().enumerate() {
            let _ = writeln!(out, "{:?},{:?}", c[0], f[node]);
        }
    } else {
        out.push_str("x,y,value\n");
        for (node, &c) in grid.coords().iter().enumerate() {
            let _ = writeln!(out, "{:?},{:?},{:?}", c[0], c[1], f[node]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn interval(n: usize) -> Grid {
        Grid::new(&DomainSpec::Interval { length: 1.0 }, n).unwrap()
    }

    fn square(n: usize) -> Grid {
        Grid::new(&DomainSpec::Rectangle { lx: 1.0, ly: 1.0 }, n).unwrap()
    }

    #[test]
    fn weights_sum_to_measures() {
        for grid in [interval(11), square(7)] {
            let vol: f64 = grid.volume_weights().iter().sum();
            assert_abs_diff_eq!(vol, grid.volume(), epsilon = 1e-12);
            let bsum: f64 = grid.boundary().iter().map(|b| b.weight).sum();
            assert_abs_diff_eq!(bsum, grid.boundary_measure(), epsilon = 1e-12);
        }
        // Non-unit rectangle too.
        let grid = Grid::new(&DomainSpec::Rectangle { lx: 2.0, ly: 0.5 }, 9).unwrap();
        let vol: f64 = grid.volume_weights().iter().sum();
        assert_abs_diff_eq!(vol, 1.0, epsilon = 1e-12);
        let bsum: f64 = grid.boundary().iter().map(|b| b.weight).sum();
        assert_abs_diff_eq!(bsum, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(Grid::new(&DomainSpec::Interval { length: 1.0 }, 2).is_err());
    }

    #[test]
    fn volume_quadrature_examples() {
        let grid = interval(11);
        let one = Field::constant(1.0, grid.num_nodes());
        assert_abs_diff_eq!(volume_quadrature(&one, &grid), 1.0, epsilon = 1e-14);

        let linear = grid.field_from_fn(|c| c[0]);
        assert_abs_diff_eq!(volume_quadrature(&linear, &grid), 0.5, epsilon = 1e-14);

        // Trapezoid error bound for x² with n = 11: |Q − 1/3| ≤ h²/6·2.
        let quad = grid.field_from_fn(|c| c[0] * c[0]);
        let q = volume_quadrature(&quad, &grid);
        assert!((q - 1.0 / 3.0).abs() <= 0.00334, "q = {q}");
        // the composite trapezoid value is exactly 1/3 + h²/6 here
        assert_abs_diff_eq!(q, 0.335, epsilon = 1e-13);
    }

    #[test]
    fn boundary_quadrature_examples() {
        let grid = interval(11);
        let ones = vec![1.0; grid.boundary().len()];
        assert_abs_diff_eq!(boundary_quadrature(&ones, &grid), 2.0, epsilon = 1e-14);

        let sq = square(9);
        let ones = vec![1.0; sq.boundary().len()];
        assert_abs_diff_eq!(boundary_quadrature(&ones, &sq), 4.0, epsilon = 1e-12);

        // Edge-linear ramp g(x,y) = x integrates exactly over the perimeter:
        // bottom+top edges each 1/2, left edge 0, right edge 1 → total 2.
        let ramp: Vec<f64> = sq.boundary().iter().map(|b| sq.coord(b.node)[0]).collect();
        assert_abs_diff_eq!(boundary_quadrature(&ramp, &sq), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_exact_for_quadratics() {
        let grid = interval(21);
        let constant = Field::constant(3.25, grid.num_nodes());
        let lap = laplacian_interior(&constant, &grid);
        for &node in grid.interior() {
            assert_abs_diff_eq!(lap[node], 0.0, epsilon = 1e-10);
        }

        let quad = grid.field_from_fn(|c| c[0] * c[0]);
        let lap = laplacian_interior(&quad, &grid);
        for &node in grid.interior() {
            assert_abs_diff_eq!(lap[node], 2.0, epsilon = 1e-10);
        }

        // 2-D: x² + 2y² has Laplacian 6 everywhere.
        let sq = square(9);
        let f = sq.field_from_fn(|c| c[0] * c[0] + 2.0 * c[1] * c[1]);
        let lap = laplacian_interior(&f, &sq);
        for &node in sq.interior() {
            assert_abs_diff_eq!(lap[node], 6.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_annihilates_affine() {
        let sq = square(7);
        let f = sq.field_from_fn(|c| 1.0 + 2.0 * c[0] - 0.5 * c[1]);
        let lap = laplacian_interior(&f, &sq);
        for &node in sq.interior() {
            assert_abs_diff_eq!(lap[node], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_sine_error_bound() {
        // f = sin(πx) on n = 41: max |Δ_h f + π² f| ≤ π⁴ h² / 12.
        let grid = interval(41);
        let h = grid.spacing()[0];
        let f = grid.field_from_fn(|c| (std::f64::consts::PI * c[0]).sin());
        let lap = laplacian_interior(&f, &grid);
        let bound = std::f64::consts::PI.powi(4) * h * h / 12.0;
        let mut worst = 0.0_f64;
        for &node in grid.interior() {
            let exact = -std::f64::consts::PI.powi(2) * f[node];
            worst = worst.max((lap[node] - exact).abs());
        }
        assert!(worst <= bound, "worst {worst} > bound {bound}");
    }

    #[test]
    fn ghost_closure_mirror_and_affine() {
        let grid = interval(11);
        let h = grid.spacing()[0];

        // Zero flux on a symmetric field: ghost equals the inner neighbor.
        let sym = grid.field_from_fn(|c| (2.0 * std::f64::consts::PI * c[0]).cos());
        let ghosts = ghost_closure(&sym, &[0.0, 0.0], &grid);
        for g in &ghosts {
            let bn = &grid.boundary()[g.slot];
            let inner = match g.side {
                FaceSide::Low => sym[bn.node + 1],
                FaceSide::High => sym[bn.node - 1],
            };
            assert_abs_diff_eq!(g.value, inner, epsilon = 1e-15);
        }

        // f(x) = x with flux 1 at x = 1: ghost continues the affine profile.
        let f = grid.field_from_fn(|c| c[0]);
        let ghosts = ghost_closure(&f, &[-1.0, 1.0], &grid);
        for g in &ghosts {
            let bn = &grid.boundary()[g.slot];
            let expected = match g.side {
                FaceSide::Low => -h,
                FaceSide::High => 1.0 + h,
            };
            assert_abs_diff_eq!(g.value, expected, epsilon = 1e-14);
            let _ = bn;
        }
    }

    #[test]
    fn ghost_laplacian_second_order_manufactured() {
        // u*(x) = e^{-t} cos(πx) at t = 0.3: prescribing the exact normal
        // derivative as flux reproduces Δu* at the boundary to O(h²).
        let t = 0.3_f64;
        let exact = |x: f64| (-t).exp() * (std::f64::consts::PI * x).cos();
        let exact_lap =
            |x: f64| -std::f64::consts::PI.powi(2) * (-t).exp() * (std::f64::consts::PI * x).cos();
        let exact_dx = |x: f64| -std::f64::consts::PI * (-t).exp() * (std::f64::consts::PI * x).sin();

        let mut errs = Vec::new();
        for n in [21, 41, 81] {
            let grid = interval(n);
            let f = grid.field_from_fn(|c| exact(c[0]));
            let flux: Vec<f64> = grid
                .boundary()
                .iter()
                .map(|b| grid.coord(b.node)[0])
                .map(|x| if x == 0.0 { -exact_dx(0.0) } else { exact_dx(1.0) })
                .collect();
            let lap = laplacian_with_flux(&f, &flux, &grid);
            let mut worst = 0.0_f64;
            for b in grid.boundary() {
                worst = worst.max((lap[b.node] - exact_lap(grid.coord(b.node)[0])).abs());
            }
            errs.push(worst);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.8 && order2 > 1.8, "orders {order1:.2}, {order2:.2}");
    }

    #[test]
    fn discrete_divergence_theorem() {
        // Σ w·Δ_h u = Σ bw·flux exactly, in 1-D and 2-D including corners.
        let grid = interval(13);
        let f = grid.field_from_fn(|c| (3.0 * c[0]).sin() + 0.7 * c[0] * c[0]);
        let flux = vec![0.4, -0.9];
        let lap = laplacian_with_flux(&f, &flux, &grid);
        let lhs = volume_quadrature(&lap, &grid);
        let rhs = boundary_quadrature(&flux, &grid);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);

        let sq = square(9);
        let f = sq.field_from_fn(|c| (2.0 * c[0] + c[1]).sin() + c[0] * c[1]);
        let flux: Vec<f64> = (0..sq.boundary().len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let lap = laplacian_with_flux(&f, &flux, &sq);
        let lhs = volume_quadrature(&lap, &sq);
        let rhs = boundary_quadrature(&flux, &sq);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
    }

    #[test]
    fn one_sided_normal_derivative_signs() {
        let grid = interval(11);
        let f = grid.field_from_fn(|c| c[0]);
        // ∂u/∂ν at x=0 is −u'(0) = −1; at x=1 it is +u'(1) = 1.
        assert_abs_diff_eq!(one_sided_normal_derivative(&f, &grid, 0), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(one_sided_normal_derivative(&f, &grid, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn field_csv_headers() {
        let grid = interval(3);
        let f = Field::constant(1.5, grid.num_nodes());
        let csv = field_to_csv(&f, &grid);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,value"));
        assert_eq!(lines.next(), Some("0.0,1.5"));

        let sq = square(3);
        let f = Field::constant(0.25, sq.num_nodes());
        let csv = field_to_csv(&f, &sq);
        assert!(csv.starts_with("x,y,value\n"));
        assert_eq!(csv.lines().count(), 1 + sq.num_nodes());
    }
}
