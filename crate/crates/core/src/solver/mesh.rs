//! P1 lattice elements on the cell-center nodes.
//!
//! The nodes are the cell centers. In 1D each pair of neighbours spans a
//! segment; in 2D each lattice square splits along its main diagonal into
//! two right triangles. Every directional derivative of a P1 function on
//! such an element is a single forward difference, so the weak form stays
//! local and, unlike the adjoint of the centered stencil, has no
//! checkerboard null space.

use crate::grid::Grid;

#[derive(Clone, Debug)]
pub(crate) struct Element {
    pub nodes: [usize; 3],
    pub nverts: usize,
    /// `(plus, minus)` node pair per direction: `d_dir v = (v[plus] - v[minus]) / h`.
    pub diff: [(usize, usize); 2],
}

#[derive(Clone, Debug)]
pub(crate) struct Mesh {
    pub grid: Grid,
    pub elements: Vec<Element>,
    /// Measure of each element.
    pub area: f64,
    /// Lumped mass of a free node.
    pub mass: f64,
    pub inv_h: f64,
    pub free: Vec<bool>,
    pub free_nodes: Vec<usize>,
}

/// Triangulation neighbours of a node in 2D.
const NEIGHBOURS_2D: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];

impl Mesh {
    pub fn full(grid: &Grid) -> Mesh {
        let all = vec![true; grid.cell_count()];
        Mesh::restricted(grid, &all)
    }

    /// Mesh on the node set `inside`: elements with all vertices inside,
    /// and a node is free iff all its triangulation neighbours are inside.
    pub fn restricted(grid: &Grid, inside: &[bool]) -> Mesh {
        let h = grid.spacing();
        let mut elements = Vec::new();
        let ok = |c: Option<usize>| c.filter(|&c| inside[c]);
        for c in 0..grid.cell_count() {
            if !inside[c] {
                continue;
            }
            if grid.dim() == 1 {
                if let Some(r) = ok(grid.shift(c, 0, 1)) {
                    elements.push(Element {
                        nodes: [c, r, r],
                        nverts: 2,
                        diff: [(r, c), (0, 0)],
                    });
                }
            } else {
                let b = ok(grid.shift(c, 0, 1));
                let d = ok(grid.shift(c, 1, 1));
                let cc = ok(grid.shift(c, 0, 1).and_then(|x| grid.shift(x, 1, 1)));
                if let (Some(b), Some(cc)) = (b, cc) {
                    elements.push(Element {
                        nodes: [c, b, cc],
                        nverts: 3,
                        diff: [(b, c), (cc, b)],
                    });
                }
                if let (Some(d), Some(cc)) = (d, cc) {
                    elements.push(Element {
                        nodes: [c, d, cc],
                        nverts: 3,
                        diff: [(cc, d), (d, c)],
                    });
                }
            }
        }
        let mut free = vec![false; grid.cell_count()];
        for c in 0..grid.cell_count() {
            if !inside[c] {
                continue;
            }
            free[c] = if grid.dim() == 1 {
                [-1, 1].iter().all(|&o| ok(grid.shift(c, 0, o)).is_some())
            } else {
                NEIGHBOURS_2D.iter().all(|&(a, b)| {
                    ok(grid.shift(c, 0, a))
                        .and_then(|x| ok(grid.shift(x, 1, b)))
                        .is_some()
                })
            };
        }
        let free_nodes = (0..grid.cell_count()).filter(|&c| free[c]).collect();
        let area = if grid.dim() == 1 { h } else { 0.5 * h * h };
        Mesh {
            grid: *grid,
            elements,
            area,
            mass: grid.cell_volume(),
            inv_h: 1.0 / h,
            free,
            free_nodes,
        }
    }

    /// Element gradient of a nodal field with `comps` values per node,
    /// written as `comps x n` row-major.
    pub fn element_gradient(&self, e: &Element, v: &[f64], comps: usize, out: &mut [f64]) {
        let n = self.grid.dim();
        for c in 0..comps {
            for d in 0..n {
                let (a, b) = e.diff[d];
                out[c * n + d] = (v[a * comps + c] - v[b * comps + c]) * self.inv_h;
            }
        }
    }

    /// Scatters `area * T : grad(phi)` into the nodal vector `out` for an
    /// element tensor `t` (`comps x n`).
    pub fn scatter(&self, e: &Element, t: &[f64], comps: usize, scale: f64, out: &mut [f64]) {
        let n = self.grid.dim();
        let s = scale * self.inv_h;
        for c in 0..comps {
            for d in 0..n {
                let (a, b) = e.diff[d];
                let w = s * t[c * n + d];
                out[a * comps + c] += w;
                out[b * comps + c] -= w;
            }
        }
    }

    /// Element average of a nodal gradient-shaped field (`width` values per node).
    pub fn element_average(&self, e: &Element, nodal: &[f64], width: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let inv = 1.0 / e.nverts as f64;
        for &node in &e.nodes[..e.nverts] {
            for (o, v) in out.iter_mut().zip(&nodal[node * width..(node + 1) * width]) {
                *o += inv * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn element_counts() {
        let g = Grid::new(2, 1, 8, 1.0, 0.1, 1.0, Boundary::Periodic).unwrap();
        let m = Mesh::full(&g);
        assert_eq!(m.elements.len(), 2 * 64);
        assert_eq!(m.free_nodes.len(), 64);
        let g = Grid::new(2, 1, 8, 1.0, 0.1, 1.0, Boundary::Dirichlet).unwrap();
        let m = Mesh::full(&g);
        assert_eq!(m.elements.len(), 2 * 49);
        assert_eq!(m.free_nodes.len(), 36);
        let g = Grid::new(1, 1, 8, 1.0, 0.1, 1.0, Boundary::Dirichlet).unwrap();
        let m = Mesh::full(&g);
        assert_eq!(m.elements.len(), 7);
        assert_eq!(m.free_nodes.len(), 6);
    }

    #[test]
    fn free_nodes_have_full_lumped_mass() {
        // Each free node must be surrounded by elements of total area h^n
        // times the number of vertices, i.e. lumped mass h^n.
        let g = Grid::new(2, 1, 10, 1.0, 0.1, 1.0, Boundary::Dirichlet).unwrap();
        let mut inside = vec![false; g.cell_count()];
        for c in 0..g.cell_count() {
            let x = g.cell_center(c);
            inside[c] = (x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2) < 0.12;
        }
        let m = Mesh::restricted(&g, &inside);
        let mut mass = vec![0.0; g.cell_count()];
        for e in &m.elements {
            for &n in &e.nodes[..e.nverts] {
                mass[n] += m.area / e.nverts as f64;
            }
        }
        for &c in &m.free_nodes {
            assert!((mass[c] - g.cell_volume()).abs() < 1e-14);
        }
        assert!(!m.free_nodes.is_empty());
    }

    #[test]
    fn gradient_is_exact_on_affine_fields() {
        let g = Grid::new(2, 2, 8, 1.0, 0.1, 1.0, Boundary::Dirichlet).unwrap();
        let mut v = vec![0.0; 2 * g.cell_count()];
        for c in 0..g.cell_count() {
            let x = g.cell_center(c);
            v[2 * c] = 2.0 * x[0] - x[1];
            v[2 * c + 1] = 0.5 * x[1];
        }
        let m = Mesh::full(&g);
        let mut q = [0.0; 4];
        for e in &m.elements {
            m.element_gradient(e, &v, 2, &mut q);
            for (a, b) in q.iter().zip([2.0, -1.0, 0.0, 0.5]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
