//! Equivariant padding: each face (or flag) grid's halo is filled from the grid
//! across the shared solid edge, with halo corners set to zero.
//!
//! Along side `s` of a grid, halo position `t` reads the neighbour's boundary
//! cells in reverse order, since the shared edge runs the opposite way on the
//! neighbour. Square halos copy one cell; hex halos sit between two neighbour
//! cells and take their mean (one cell at the ends).
//!
//! Regular features keep one grid per flag. The grid of flag `a` on face `f`
//! is padded from flag `c a` on the neighbour, where `c` is the rotation by
//! `t - s + δ` steps (`t` the neighbour's side index, `δ = 2` for squares and
//! `0` for triangles): unfolding the neighbour across the edge relates the two
//! face frames by that rotation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::permgroup::Permutation;
use crate::pointgroup::PointGroup;
use crate::solids::SolidSymmetry;
use crate::tilings::{ExtGrid, FeatureKind, TilingKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Faces,
    Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PadEdge {
    pub node: usize,
    pub side: usize,
    pub source: usize,
    pub source_side: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PaddingGraph {
    node_kind: NodeKind,
    num_nodes: usize,
    sides: usize,
    /// `along_map[t]`: boundary positions on the source side feeding halo position `t`.
    along_map: Vec<Vec<usize>>,
    edges: Vec<PadEdge>,
}

/// Side `s` of a face, after applying point group element `g` to the face.
pub fn side_image(k: PointGroup, g: usize, s: usize) -> usize {
    let m = k.sides();
    let (u, r) = k.element(g);
    if r == 0 {
        (u + s) % m
    } else {
        (u + 2 * m - s - 1) % m
    }
}

fn along_map(kind: TilingKind, width: usize) -> Vec<Vec<usize>> {
    match kind {
        TilingKind::Square => (0..width).map(|t| vec![width - 1 - t]).collect(),
        TilingKind::Hex => (0..=width)
            .map(|t| {
                [width as i64 - 1 - t as i64, (width - t) as i64]
                    .into_iter()
                    .filter(|&q| q >= 0 && q < width as i64)
                    .map(|q| q as usize)
                    .collect()
            })
            .collect(),
    }
}

fn frame_shift(sides: usize) -> usize {
    if sides == 4 {
        2
    } else {
        0
    }
}

impl PaddingGraph {
    pub fn scalar(sym: &SolidSymmetry, grid: &ExtGrid) -> PaddingGraph {
        let solid = sym.solid();
        let m = solid.sides();
        let mut edges = Vec::with_capacity(solid.num_faces() * m);
        for f in 0..solid.num_faces() {
            for s in 0..m {
                let (g, t) = solid.side_neighbor(f, s);
                edges.push(PadEdge {
                    node: f,
                    side: s,
                    source: g,
                    source_side: t,
                });
            }
        }
        PaddingGraph {
            node_kind: NodeKind::Faces,
            num_nodes: solid.num_faces(),
            sides: m,
            along_map: along_map(grid.kind(), grid.width()),
            edges,
        }
    }

    /// The flag-level graph written down directly from the unfolding rule.
    pub fn regular_direct(sym: &SolidSymmetry, grid: &ExtGrid) -> PaddingGraph {
        let solid = sym.solid();
        let k = sym.point_group();
        let ko = k.order();
        let m = solid.sides();
        let mut edges = Vec::with_capacity(solid.num_faces() * ko * m);
        for f in 0..solid.num_faces() {
            for a in 0..ko {
                for s in 0..m {
                    edges.push(regular_rule(sym, f, a, s));
                }
            }
        }
        PaddingGraph {
            node_kind: NodeKind::Flags,
            num_nodes: solid.num_faces() * ko,
            sides: m,
            along_map: along_map(grid.kind(), grid.width()),
            edges,
        }
    }

    /// The flag-level graph obtained by closing face 0's edges under the solid
    /// group. Every (flag, side) must receive exactly one source.
    pub fn regular(sym: &SolidSymmetry, grid: &ExtGrid) -> Result<PaddingGraph> {
        let solid = sym.solid();
        let k = sym.point_group();
        let ko = k.order();
        let m = solid.sides();
        let nodes = solid.num_faces() * ko;
        let mut table: Vec<Option<(usize, usize)>> = vec![None; nodes * m];
        let seeds: Vec<PadEdge> = (0..ko)
            .flat_map(|a| (0..m).map(move |s| (a, s)))
            .map(|(a, s)| regular_rule(sym, 0, a, s))
            .collect();
        for h in sym.elements() {
            let fl = &h.flag;
            let map_side = |node: usize, side: usize| {
                let base = fl.apply(node / ko * ko) % ko;
                (fl.apply(node), side_image(k, base, side))
            };
            for e in &seeds {
                let (n2, s2) = map_side(e.node, e.side);
                let src = map_side(e.source, e.source_side);
                let slot = &mut table[n2 * m + s2];
                match slot {
                    None => *slot = Some(src),
                    Some(prev) if *prev != src => {
                        return Err(Error::PaddingConflict { node: n2, side: s2 })
                    }
                    Some(_) => {}
                }
            }
        }
        let mut edges = Vec::with_capacity(nodes * m);
        for (i, slot) in table.into_iter().enumerate() {
            let (source, source_side) = slot.ok_or(Error::PaddingConflict {
                node: i / m,
                side: i % m,
            })?;
            edges.push(PadEdge {
                node: i / m,
                side: i % m,
                source,
                source_side,
            });
        }
        Ok(PaddingGraph {
            node_kind: NodeKind::Flags,
            num_nodes: nodes,
            sides: m,
            along_map: along_map(grid.kind(), grid.width()),
            edges,
        })
    }

    pub fn for_feature(sym: &SolidSymmetry, grid: &ExtGrid, feature: FeatureKind) -> Result<PaddingGraph> {
        match feature {
            FeatureKind::Scalar => Ok(PaddingGraph::scalar(sym, grid)),
            FeatureKind::Regular => PaddingGraph::regular(sym, grid),
        }
    }

    pub fn node_kind(&self) -> NodeKind {
        self.node_kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn sides(&self) -> usize {
        self.sides
    }

    pub fn edges(&self) -> &[PadEdge] {
        &self.edges
    }

    pub fn edge(&self, node: usize, side: usize) -> &PadEdge {
        &self.edges[node * self.sides + side]
    }

    pub fn along_map(&self) -> &[Vec<usize>] {
        &self.along_map
    }

    /// Node adjacency counts: `adj[i][j]` is the number of sides of `i` sourced from `j`.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![vec![0u32; self.num_nodes]; self.num_nodes];
        for e in &self.edges {
            adj[e.node][e.source] += 1;
        }
        adj
    }

    /// Checks `adj · P = P · adj` for a node permutation.
    pub fn adjacency_commutes(&self, perm: &Permutation) -> bool {
        if perm.degree() != self.num_nodes {
            return false;
        }
        let adj = self.adjacency();
        (0..self.num_nodes).all(|i| {
            (0..self.num_nodes).all(|j| adj[perm.apply(i)][perm.apply(j)] == adj[i][j])
        })
    }

    pub fn is_symmetric(&self) -> bool {
        let adj = self.adjacency();
        (0..self.num_nodes).all(|i| (0..self.num_nodes).all(|j| adj[i][j] == adj[j][i]))
    }
}

fn regular_rule(sym: &SolidSymmetry, f: usize, a: usize, s: usize) -> PadEdge {
    let k = sym.point_group();
    let ko = k.order();
    let m = k.sides();
    let (g, t) = sym.solid().side_neighbor(f, s);
    let shift = (t + m - s + frame_shift(m)) % m;
    let b = k.mul(k.index(shift, 0), a);
    PadEdge {
        node: f * ko + a,
        side: s,
        source: g * ko + b,
        source_side: t,
    }
}

/// How the halo is filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    /// From neighbouring grids via the padding graph, corners zero.
    Graph,
    /// Each grid wraps around onto itself, corners included (square grids only).
    Circular,
    /// Halo all zero.
    Zero,
}

/// Gather table: for each node and halo cell, weighted sources `(node, cell, weight)`.
#[derive(Clone, Debug)]
pub struct PadPlan {
    mode: PadMode,
    num_nodes: usize,
    ext: usize,
    interior: usize,
    halo: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
}

impl PadPlan {
    pub fn from_graph(graph: &PaddingGraph, grid: &ExtGrid) -> PadPlan {
        let mut halo = vec![Vec::new(); graph.num_nodes];
        for e in &graph.edges {
            let cells = grid.side_halo(e.side);
            let src_cells = grid.side_edge(e.source_side);
            for (t, &cell) in cells.iter().enumerate() {
                let qs = &graph.along_map[t];
                let w = 1.0 / qs.len() as f64;
                let sources = qs.iter().map(|&q| (e.source, src_cells[q], w)).collect();
                halo[e.node].push((cell, sources));
            }
        }
        PadPlan {
            mode: PadMode::Graph,
            num_nodes: graph.num_nodes,
            ext: grid.len(),
            interior: grid.interior_len(),
            halo,
        }
    }

    pub fn circular(grid: &ExtGrid, num_nodes: usize) -> Result<PadPlan> {
        if grid.kind() != TilingKind::Square {
            return Err(Error::Unsupported(
                "circular padding needs a square grid".into(),
            ));
        }
        let d = grid.width() as i64;
        let per_node: Vec<(usize, usize)> = (grid.interior_len()..grid.len())
            .map(|cell| {
                let (r, c) = grid.coords()[cell];
                let src = grid.cell((r.rem_euclid(d), c.rem_euclid(d))).expect("interior cell");
                (cell, src)
            })
            .collect();
        let halo = (0..num_nodes)
            .map(|n| per_node.iter().map(|&(cell, src)| (cell, vec![(n, src, 1.0)])).collect())
            .collect();
        Ok(PadPlan {
            mode: PadMode::Circular,
            num_nodes,
            ext: grid.len(),
            interior: grid.interior_len(),
            halo,
        })
    }

    pub fn zero(grid: &ExtGrid, num_nodes: usize) -> PadPlan {
        PadPlan {
            mode: PadMode::Zero,
            num_nodes,
            ext: grid.len(),
            interior: grid.interior_len(),
            halo: vec![Vec::new(); num_nodes],
        }
    }

    pub fn mode(&self) -> PadMode {
        self.mode
    }

    /// Pads every grid of `field`; nodes are `(face, fiber)` pairs in field order.
    pub fn pad(&self, field: &FeatureField) -> Result<FeatureField> {
        if field.is_padded() {
            return Err(Error::Shape("field is already padded".into()));
        }
        if field.pixels() != self.interior || field.faces() * field.fibers() != self.num_nodes {
            return Err(Error::Shape(format!(
                "field with {} grids of {} pixels for a padding plan with {} grids of {}",
                field.faces() * field.fibers(),
                field.pixels(),
                self.num_nodes,
                self.interior
            )));
        }
        let mut out = FeatureField::zeros(
            field.feature(),
            field.channels(),
            field.faces(),
            field.fibers(),
            self.ext,
        )
        .with_padded(true);
        let n_in = self.interior;
        let n_out = self.ext;
        for c in 0..field.channels() {
            let src = field.channel(c);
            let base = c * self.num_nodes * n_out;
            let dst = &mut out.data_mut()[base..base + self.num_nodes * n_out];
            for node in 0..self.num_nodes {
                dst[node * n_out..node * n_out + n_in]
                    .copy_from_slice(&src[node * n_in..(node + 1) * n_in]);
                for (cell, sources) in &self.halo[node] {
                    dst[node * n_out + cell] = sources
                        .iter()
                        .map(|&(sn, sc, w)| w * src[sn * n_in + sc])
                        .sum();
                }
            }
        }
        Ok(out)
    }
}
