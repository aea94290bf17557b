//! Triangular meshes shared by the bending and the electric field.
//!
//! Both fields live on the corner nodes of the same triangles, so a mesh is
//! nothing more than node coordinates, counterclockwise triangles and named
//! groups of boundary nodes used to attach boundary conditions.
//!
//! Text format read by [`load_mesh`] / [`parse_mesh`]:
//!
//! ```text
//! nodes <N> triangles <T> groups <G>
//! x y            # N lines
//! i j k          # T lines, 0-based node indices
//! group <name>   # G blocks, each followed by lines of node indices
//! 0 1 2
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::element::{AreaCoords, TriangleGeometry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    /// Index into [`Mesh::edge_groups`] of the first group holding the node.
    EdgeGroup(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub boundary_tag: BoundaryTag,
}

/// Counterclockwise node triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub node_ids: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGroup {
    pub name: String,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub triangles: Vec<Triangle>,
    pub edge_groups: Vec<EdgeGroup>,
}

/// Isometries of the bounding box used to detect mesh symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    MirrorX,
    MirrorY,
    /// Swap of the two axes (square bounding boxes only).
    Transpose,
}

/// How each cell of a structured square grid is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquarePattern {
    /// Two triangles per cell along the (i,j)-(i+1,j+1) diagonal.
    Diagonal,
    /// Four triangles per cell meeting at an added centroid node.
    #[default]
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStatistics {
    pub n_nodes: usize,
    pub n_triangles: usize,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle: f64,
    pub max_edge: f64,
    pub total_area: f64,
}

impl Mesh {
    /// Builds a mesh from raw data, fixing orientation and checking every
    /// invariant. Group membership decides the per-node boundary tag.
    pub fn new(
        coords: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        groups: Vec<EdgeGroup>,
    ) -> Result<Self> {
        let n_nodes = coords.len();
        let mut tris = Vec::with_capacity(triangles.len());
        let scale = bounding_diameter(&coords).max(f64::MIN_POSITIVE);
        for (e, t) in triangles.into_iter().enumerate() {
            for &v in &t {
                if v >= n_nodes {
                    return Err(Error::DanglingNode { element: e, node: v, n_nodes });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::RepeatedNode { element: e });
            }
            let area = signed_area(coords[t[0]], coords[t[1]], coords[t[2]]);
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::ZeroArea { element: e });
            }
            let node_ids = if area < 0.0 { [t[0], t[2], t[1]] } else { t };
            tris.push(Triangle { node_ids });
        }

        let mut used = vec![false; n_nodes];
        for t in &tris {
            for &v in &t.node_ids {
                used[v] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("node {i} is not referenced by any triangle")));
        }

        let mut tags = vec![BoundaryTag::Interior; n_nodes];
        for (g, group) in groups.iter().enumerate() {
            for &v in &group.nodes {
                if v >= n_nodes {
                    return Err(Error::invalid(format!(
                        "group '{}' references node {v} of {n_nodes}",
                        group.name
                    )));
                }
                if tags[v] == BoundaryTag::Interior {
                    tags[v] = BoundaryTag::EdgeGroup(g);
                }
            }
        }

        let nodes = coords
            .into_iter()
            .zip(tags)
            .enumerate()
            .map(|(id, ([x, y], boundary_tag))| Node { id, x, y, boundary_tag })
            .collect();
        let mesh = Mesh { nodes, triangles: tris, edge_groups: groups };

        for (&(a, b), inc) in &mesh.edge_incidence() {
            if inc.len() > 2 {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) is shared by {} triangles",
                    inc.len()
                )));
            }
        }
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let n = &self.nodes[node];
        [n.x, n.y]
    }

    pub fn geometry(&self, element: usize) -> TriangleGeometry {
        let [a, b, c] = self.triangles[element].node_ids;
        TriangleGeometry::new(self.coords(a), self.coords(b), self.coords(c))
    }

    pub fn group(&self, name: &str) -> Option<&EdgeGroup> {
        self.edge_groups.iter().find(|g| g.name == name)
    }

    /// Map from sorted node pair to the triangles containing that edge.
    pub fn edge_incidence(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (e, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.node_ids;
            for (p, q) in [(a, b), (b, c), (c, a)] {
                map.entry((p.min(q), p.max(q))).or_default().push(e);
            }
        }
        map
    }

    /// Edges with a single incident triangle, sorted.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .edge_incidence()
            .into_iter()
            .filter(|(_, inc)| inc.len() == 1)
            .map(|(e, _)| e)
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for n in &self.nodes {
            lo[0] = lo[0].min(n.x);
            lo[1] = lo[1].min(n.y);
            hi[0] = hi[0].max(n.x);
            hi[1] = hi[1].max(n.y);
        }
        (lo, hi)
    }

    /// Finds the triangle containing `(x, y)` and the area coordinates of the
    /// point in it. Points on shared edges resolve to the lowest element index.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, AreaCoords)> {
        let (lo, hi) = self.bounding_box();
        let tol = 1e-12;
        let diam = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
        if x < lo[0] - tol * diam || x > hi[0] + tol * diam {
            return None;
        }
        (0..self.triangles.len()).find_map(|e| {
            let l = self.geometry(e).area_coords(x, y);
            if l.0.iter().all(|&li| li >= -tol) {
                Some((e, l))
            } else {
                None
            }
        })
    }

    /// Node permutation induced by the reflection `x -> 2 cx - x` (`axis = 0`)
    /// or `y -> 2 cy - y` (`axis = 1`) about the bounding-box centre. `None`
    /// when the mesh is not mirror symmetric.
    pub fn mirror_map(&self, axis: usize) -> Option<Vec<usize>> {
        self.symmetry_map(if axis == 0 { Symmetry::MirrorX } else { Symmetry::MirrorY })
    }

    /// Node permutation induced by `s`, or `None` when the nodes or the
    /// triangles are not mapped onto themselves.
    pub fn symmetry_map(&self, s: Symmetry) -> Option<Vec<usize>> {
        let (lo, hi) = self.bounding_box();
        let diam = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
        let tol = 1e-9 * diam.max(f64::MIN_POSITIVE);
        if s == Symmetry::Transpose && ((hi[0] - lo[0]) - (hi[1] - lo[1])).abs() > tol {
            return None;
        }
        let image = |x: f64, y: f64| match s {
            Symmetry::MirrorX => (lo[0] + hi[0] - x, y),
            Symmetry::MirrorY => (x, lo[1] + hi[1] - y),
            Symmetry::Transpose => (lo[0] + (y - lo[1]), lo[1] + (x - lo[0])),
        };
        let key = |x: f64, y: f64| ((x / tol).round() as i64, (y / tol).round() as i64);
        let mut lookup: HashMap<(i64, i64), usize> = HashMap::with_capacity(self.nodes.len());
        for n in &self.nodes {
            lookup.insert(key(n.x, n.y), n.id);
        }
        let map: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| {
                let (mx, my) = image(n.x, n.y);
                // rounding can straddle a bucket boundary; probe neighbours
                let (kx, ky) = key(mx, my);
                (-1..=1)
                    .flat_map(|dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
                    .find_map(|k| lookup.get(&k).copied())
                    .filter(|&m| {
                        let p = &self.nodes[m];
                        (p.x - mx).abs() <= 2.0 * tol && (p.y - my).abs() <= 2.0 * tol
                    })
            })
            .collect::<Option<_>>()?;
        let sorted = |t: [usize; 3]| {
            let mut t = t;
            t.sort_unstable();
            t
        };
        let tris: std::collections::HashSet<[usize; 3]> =
            self.triangles.iter().map(|t| sorted(t.node_ids)).collect();
        let closed = self
            .triangles
            .iter()
            .all(|t| tris.contains(&sorted(t.node_ids.map(|v| map[v]))));
        closed.then_some(map)
    }

    pub fn statistics(&self) -> MeshStatistics {
        mesh_statistics(self)
    }

    /// Serializes the mesh into the text format read by [`parse_mesh`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nodes {} triangles {} groups {}",
            self.nodes.len(),
            self.triangles.len(),
            self.edge_groups.len()
        );
        for n in &self.nodes {
            let _ = writeln!(s, "{:.17e} {:.17e}", n.x, n.y);
        }
        for t in &self.triangles {
            let [a, b, c] = t.node_ids;
            let _ = writeln!(s, "{a} {b} {c}");
        }
        for g in &self.edge_groups {
            let _ = writeln!(s, "group {}", g.name);
            for chunk in g.nodes.chunks(16) {
                let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn bounding_diameter(coords: &[[f64; 2]]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in coords {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if coords.is_empty() {
        return 0.0;
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
}

/// `n x n` grid on `[0, side]^2`. All boundary nodes form the group
/// `"boundary"`.
pub fn generate_structured_square(n: usize, side: f64, pattern: SquarePattern) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("structured square needs n >= 1"));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::invalid(format!("side must be positive, got {side}")));
    }
    let h = side / n as f64;
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut coords = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            coords.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            match pattern {
                SquarePattern::Diagonal => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                SquarePattern::Crossed => {
                    let m = coords.len();
                    coords.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
                    triangles.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
                }
            }
        }
    }
    let mut boundary = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(grid(i, j));
            }
        }
    }
    Mesh::new(coords, triangles, vec![EdgeGroup { name: "boundary".into(), nodes: boundary }])
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    // (line number, tokens) for every non-empty line
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    });

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty mesh file".into() })?;
    let count = |key: &str, pos: usize| -> Result<usize> {
        match (header.get(pos), header.get(pos + 1)) {
            (Some(k), Some(v)) if *k == key => v.parse().map_err(|_| Error::Parse {
                line: hline,
                message: format!("bad {key} count '{v}'"),
            }),
            _ => Err(Error::Parse {
                line: hline,
                message: "expected header 'nodes <N> triangles <T> groups <G>'".into(),
            }),
        }
    };
    let n_nodes = count("nodes", 0)?;
    let n_tris = count("triangles", 2)?;
    let n_groups = count("groups", 4)?;

    let num = |line: usize, tok: &str| -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(Error::Parse { line, message: format!("bad coordinate '{tok}'") })
    };
    let idx = |line: usize, tok: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|_| Error::Parse { line, message: format!("bad index '{tok}'") })
    };
    let eof = |what: &str| Error::Parse { line: text.lines().count() + 1, message: format!("unexpected end of file reading {what}") };

    let mut coords = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, toks) = lines.next().ok_or_else(|| eof("nodes"))?;
        if toks.len() != 2 {
            return Err(Error::Parse { line: ln, message: format!("node line needs 2 values, got {}", toks.len()) });
        }
        coords.push([num(ln, toks[0])?, num(ln, toks[1])?]);
    }
    let mut tris = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, toks) = lines.next().ok_or_else(|| eof("triangles"))?;
        if toks.len() != 3 {
            return Err(Error::Parse { line: ln, message: format!("triangle line needs 3 indices, got {}", toks.len()) });
        }
        tris.push([idx(ln, toks[0])?, idx(ln, toks[1])?, idx(ln, toks[2])?]);
    }
    let mut groups: Vec<EdgeGroup> = Vec::with_capacity(n_groups);
    for (ln, toks) in lines {
        if toks[0] == "group" {
            if toks.len() != 2 {
                return Err(Error::Parse { line: ln, message: "expected 'group <name>'".into() });
            }
            groups.push(EdgeGroup { name: toks[1].to_string(), nodes: Vec::new() });
        } else {
            let g = groups
                .last_mut()
                .ok_or(Error::Parse { line: ln, message: "node indices outside a group block".into() })?;
            for t in toks {
                g.nodes.push(idx(ln, t)?);
            }
        }
    }
    if groups.len() != n_groups {
        return Err(Error::Parse {
            line: hline,
            message: format!("header declares {n_groups} groups, found {}", groups.len()),
        });
    }
    Mesh::new(coords, tris, groups)
}

pub fn mesh_statistics(m: &Mesh) -> MeshStatistics {
    let mut min_angle = f64::INFINITY;
    let mut max_edge: f64 = 0.0;
    let mut total_area = 0.0;
    for e in 0..m.triangles.len() {
        let g = m.geometry(e);
        total_area += g.area;
        let l = g.side_lengths;
        max_edge = max_edge.max(l[0]).max(l[1]).max(l[2]);
        for i in 0..3 {
            // law of cosines, angle at vertex i opposite side i
            let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
    }
    MeshStatistics { n_nodes: m.nodes.len(), n_triangles: m.triangles.len(), min_angle, max_edge, total_area }
}
