//! Simple directed graphs in compressed adjacency form, edge-list ingestion,
//! topology statistics and seeded synthetic generators.
//!
//! Undirected inputs are stored as pairs of opposite arcs, so every algorithm
//! downstream can treat the graph as directed.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = usize;

/// Compressed sparse rows: neighbours of `v` are `targets[offsets[v]..offsets[v + 1]]`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Adjacency {
    fn from_sorted_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in pairs {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, v)| v).collect();
        Adjacency { offsets, targets }
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn entry_count(&self) -> usize {
        self.targets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    out_adj: Adjacency,
    in_adj: Adjacency,
    node_names: Option<Vec<String>>,
}

impl Graph {
    /// Builds a simple graph from arcs. Self loops and duplicates are dropped;
    /// when `directed` is false each pair becomes two opposite arcs.
    pub fn from_edges<I>(n: usize, edges: I, directed: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut arcs = Vec::new();
        for (u, v) in edges {
            if u >= n {
                return Err(Error::InvalidNode { node: u, n });
            }
            if v >= n {
                return Err(Error::InvalidNode { node: v, n });
            }
            if u == v {
                continue;
            }
            arcs.push((u, v));
            if !directed {
                arcs.push((v, u));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        let out_adj = Adjacency::from_sorted_pairs(n, &arcs);
        let mut rev: Vec<(NodeId, NodeId)> = arcs.iter().map(|&(u, v)| (v, u)).collect();
        rev.sort_unstable();
        let in_adj = Adjacency::from_sorted_pairs(n, &rev);
        Ok(Graph {
            directed,
            out_adj,
            in_adj,
            node_names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "{} names for {} nodes",
                names.len(),
                self.n()
            )));
        }
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.out_adj.node_count()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn arc_count(&self) -> usize {
        self.out_adj.entry_count()
    }

    /// Edges as the input described them: arcs for directed graphs,
    /// unordered pairs for undirected ones.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.arc_count()
        } else {
            self.arc_count() / 2
        }
    }

    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.out_adj.neighbors(v)
    }

    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.in_adj.neighbors(v)
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_adj.degree(v)
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_adj.degree(v)
    }

    pub fn out_adjacency(&self) -> &Adjacency {
        &self.out_adj
    }

    pub fn in_adjacency(&self) -> &Adjacency {
        &self.in_adj
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub fn node_name(&self, v: NodeId) -> String {
        match &self.node_names {
            Some(names) => names[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidNode { node: v, n: self.n() })
        }
    }

    /// Union of in- and out-neighbourhoods, sorted and deduplicated.
    pub fn undirected_projection(&self) -> Adjacency {
        let n = self.n();
        let mut pairs = Vec::with_capacity(self.arc_count() * 2);
        for (u, v) in self.arcs() {
            pairs.push((u, v));
            pairs.push((v, u));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Adjacency::from_sorted_pairs(n, &pairs)
    }

    /// Hex SHA-256 over node count, direction flag and the sorted arc list.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update([self.directed as u8]);
        for (u, v) in self.arcs() {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Edge lists

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeListOptions {
    pub directed: bool,
    /// Skip the first non-comment line (CSV column header).
    pub skip_header: bool,
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph> {
    load_edge_list_with(
        path,
        &EdgeListOptions {
            directed,
            skip_header: false,
        },
    )
}

pub fn load_edge_list_with(path: impl AsRef<Path>, opts: &EdgeListOptions) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses one edge per line, tokens separated by whitespace or commas.
/// Lines starting with `#` or `%` are comments. Node ids are assigned in
/// order of first appearance.
pub fn parse_edge_list<R: BufRead>(reader: R, opts: &EdgeListOptions) -> Result<Graph> {
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut header_pending = opts.skip_header;
    let mut intern = |tok: &str, names: &mut Vec<String>| -> NodeId {
        if let Some(&id) = ids.get(tok) {
            return id;
        }
        let id = names.len();
        ids.insert(tok.to_owned(), id);
        names.push(tok.to_owned());
        id
    };
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<edge list>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let mut tokens = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty());
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected two node tokens, got {trimmed:?}"),
            });
        };
        let u = intern(a, &mut names);
        let v = intern(b, &mut names);
        edges.push((u, v));
    }
    Graph::from_edges(names.len(), edges, opts.directed)?.with_names(names)
}

/// Writes the graph as an edge list; undirected edges are written once.
pub fn save_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    let io = |e| Error::io("<edge list>", e);
    writeln!(
        w,
        "# {} nodes, {} edges, {}",
        g.n(),
        g.edge_count(),
        if g.is_directed() { "directed" } else { "undirected" }
    )
    .map_err(io)?;
    for (u, v) in g.arcs() {
        if !g.is_directed() && u > v {
            continue;
        }
        writeln!(w, "{} {}", g.node_name(u), g.node_name(v)).map_err(io)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Traversal

/// Nodes reachable from `source` along arcs, including `source`, ascending.
pub fn reachable_set(g: &Graph, source: NodeId) -> Result<Vec<NodeId>> {
    g.check_node(source)?;
    let dist = bfs_distances(g.out_adjacency(), source);
    Ok((0..g.n()).filter(|&v| dist[v] != usize::MAX).collect())
}

/// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
pub fn bfs_distances(adj: &Adjacency, source: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &v in adj.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Component index per node on an undirected adjacency, components numbered
/// by their smallest node.
pub fn connected_components(adj: &Adjacency) -> Vec<usize> {
    let n = adj.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in adj.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterMode {
    /// Diameter of the largest weakly connected component.
    #[default]
    LargestComponent,
    /// Only report a diameter when the whole graph is weakly connected.
    WholeGraph,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
    pub clustering_coefficient: f64,
    pub diameter: Option<usize>,
    pub transitivity: f64,
}

pub fn compute_stats(g: &Graph) -> Result<GraphStats> {
    compute_stats_with(g, DiameterMode::default())
}

pub fn compute_stats_with(g: &Graph, diameter_mode: DiameterMode) -> Result<GraphStats> {
    let n = g.n();
    if n == 0 {
        return Err(Error::Stats("graph has no nodes".into()));
    }
    let und = g.undirected_projection();
    let und_edges = und.entry_count() / 2;
    let triangles = triangles_per_node(&und);

    let mut local_sum = 0.0;
    let mut triples = 0.0;
    for v in 0..n {
        let d = und.degree(v) as f64;
        if d >= 2.0 {
            let pairs = d * (d - 1.0) / 2.0;
            local_sum += triangles[v] as f64 / pairs;
            triples += pairs;
        }
    }
    let tri_total: u64 = triangles.iter().sum::<u64>() / 3;
    let transitivity = if triples > 0.0 {
        3.0 * tri_total as f64 / triples
    } else {
        0.0
    };

    let diameter = match diameter_mode {
        DiameterMode::Skip => None,
        mode => {
            let comp = connected_components(&und);
            let count = comp.iter().copied().max().map_or(0, |c| c + 1);
            if count > 1 && mode == DiameterMode::WholeGraph {
                None
            } else {
                let mut sizes = vec![0usize; count];
                for &c in &comp {
                    sizes[c] += 1;
                }
                // first largest component on ties
                let largest = (0..count).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
                let members: Vec<NodeId> = (0..n).filter(|&v| comp[v] == largest).collect();
                let ecc = crate::par::map_slice(&members, |&s| {
                    bfs_distances(&und, s)
                        .into_iter()
                        .filter(|&d| d != usize::MAX)
                        .max()
                        .unwrap_or(0)
                });
                ecc.into_iter().max()
            }
        }
    };

    Ok(GraphStats {
        nodes: n,
        edges: g.edge_count(),
        avg_degree: 2.0 * und_edges as f64 / n as f64,
        clustering_coefficient: local_sum / n as f64,
        diameter,
        transitivity,
    })
}

/// Triangles through each node of an undirected adjacency.
pub fn triangles_per_node(und: &Adjacency) -> Vec<u64> {
    let n = und.node_count();
    let mut t = vec![0u64; n];
    for u in 0..n {
        let nu = und.neighbors(u);
        for &v in nu.iter().filter(|&&v| v > u) {
            let nv = und.neighbors(v);
            // common neighbours w > v, merge of two sorted lists
            let (mut i, mut j) = (nu.partition_point(|&x| x <= v), nv.partition_point(|&x| x <= v));
            while i < nu.len() && j < nv.len() {
                match nu[i].cmp(&nv[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        t[u] += 1;
                        t[v] += 1;
                        t[nu[i]] += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    t
}

// ---------------------------------------------------------------------------
// Synthetic graphs

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SyntheticModel {
    /// Undirected G(n, p).
    ErdosRenyi { p: f64 },
    /// Directed G(n, p) over ordered pairs.
    DirectedErdosRenyi { p: f64 },
    /// Undirected preferential attachment, `m` edges per arriving node.
    BarabasiAlbert { m: usize },
    /// Preferential attachment with each edge given a random orientation.
    DirectedBarabasiAlbert { m: usize },
}

pub fn generate_synthetic(model: SyntheticModel, n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = rng::rng_for(seed, &[0x5EED]);
    match model {
        SyntheticModel::ErdosRenyi { p } | SyntheticModel::DirectedErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
            }
            let directed = matches!(model, SyntheticModel::DirectedErdosRenyi { .. });
            let mut edges = Vec::new();
            for u in 0..n {
                let start = if directed { 0 } else { u + 1 };
                for v in start..n {
                    if u != v && rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges, directed)
        }
        SyntheticModel::BarabasiAlbert { m } | SyntheticModel::DirectedBarabasiAlbert { m } => {
            if m == 0 || m >= n {
                return Err(Error::InvalidParameter(format!(
                    "attachment count m={m} must satisfy 1 <= m < n={n}"
                )));
            }
            let directed = matches!(model, SyntheticModel::DirectedBarabasiAlbert { .. });
            let mut edges = Vec::with_capacity((n - m) * m);
            let mut repeated: Vec<NodeId> = Vec::with_capacity(2 * (n - m) * m);
            let mut targets: Vec<NodeId> = (0..m).collect();
            for source in m..n {
                for &t in &targets {
                    if directed && rng.random::<bool>() {
                        edges.push((t, source));
                    } else {
                        edges.push((source, t));
                    }
                }
                repeated.extend_from_slice(&targets);
                repeated.extend(std::iter::repeat_n(source, m));
                let mut chosen: Vec<NodeId> = Vec::with_capacity(m);
                while chosen.len() < m {
                    let pick = repeated[rng.random_range(0..repeated.len())];
                    if !chosen.contains(&pick) {
                        chosen.push(pick);
                    }
                }
                targets = chosen;
            }
            Graph::from_edges(n, edges, directed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, directed: bool) -> Result<Graph> {
        parse_edge_list(
            text.as_bytes(),
            &EdgeListOptions {
                directed,
                skip_header: false,
            },
        )
    }

    #[test]
    fn empty_file_gives_empty_graph() {
        let g = parse("", false).unwrap();
        assert_eq!(g.n(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicates_and_self_loops_are_dropped() {
        let g = parse("a b\nb a\na a\n", false).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.arc_count(), 2);
        assert_eq!(g.node_names().unwrap(), ["a", "b"]);
    }

    #[test]
    fn comma_separated_and_comments() {
        let g = parse("# header\nx,y\n\ny , z\n% other\n", true).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.out_neighbors(0), &[1]);
        assert_eq!(g.out_neighbors(1), &[2]);
        assert_eq!(g.in_neighbors(2), &[1]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("a b\nlonely\n", true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_can_be_skipped() {
        let g = parse_edge_list(
            "id_1,id_2\n0,1\n1,2\n".as_bytes(),
            &EdgeListOptions {
                directed: false,
                skip_header: true,
            },
        )
        .unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_edge_list("/definitely/not/here.txt", true),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn triangle_stats() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)], false).unwrap();
        let s = compute_stats(&g).unwrap();
        assert_eq!(s.nodes, 3);
        assert_eq!(s.edges, 3);
        assert_eq!(s.clustering_coefficient, 1.0);
        assert_eq!(s.transitivity, 1.0);
        assert_eq!(s.diameter, Some(1));
        assert_eq!(s.avg_degree, 2.0);
    }

    #[test]
    fn path_stats() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)], false).unwrap();
        let s = compute_stats(&g).unwrap();
        assert_eq!(s.diameter, Some(3));
        assert_eq!(s.transitivity, 0.0);
        assert_eq!(s.clustering_coefficient, 0.0);
        assert_eq!(s.avg_degree, 1.5);
    }

    #[test]
    fn disconnected_diameter_modes() {
        // triangle plus a 3-node path
        let g = Graph::from_edges(
            7,
            [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 6)],
            false,
        )
        .unwrap();
        assert_eq!(compute_stats(&g).unwrap().diameter, Some(3));
        assert_eq!(compute_stats_with(&g, DiameterMode::WholeGraph).unwrap().diameter, None);
        assert_eq!(compute_stats_with(&g, DiameterMode::Skip).unwrap().diameter, None);
    }

    #[test]
    fn empty_graph_stats_error() {
        let g = Graph::from_edges(0, [], true).unwrap();
        assert!(matches!(compute_stats(&g), Err(Error::Stats(_))));
    }

    #[test]
    fn erdos_renyi_extremes() {
        let g = generate_synthetic(SyntheticModel::ErdosRenyi { p: 0.0 }, 10, 1).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = generate_synthetic(SyntheticModel::ErdosRenyi { p: 1.0 }, 10, 1).unwrap();
        assert_eq!(g.edge_count(), 45);
        let g = generate_synthetic(SyntheticModel::DirectedErdosRenyi { p: 1.0 }, 10, 1).unwrap();
        assert_eq!(g.edge_count(), 90);
    }

    #[test]
    fn barabasi_albert_edge_count() {
        let g = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 2 }, 100, 7).unwrap();
        assert_eq!(g.edge_count(), 196);
        let d = generate_synthetic(SyntheticModel::DirectedBarabasiAlbert { m: 2 }, 100, 7).unwrap();
        assert_eq!(d.edge_count(), 196);
        assert!(d.is_directed());
    }

    #[test]
    fn generator_rejects_bad_params() {
        assert!(generate_synthetic(SyntheticModel::ErdosRenyi { p: 1.5 }, 10, 1).is_err());
        assert!(generate_synthetic(SyntheticModel::ErdosRenyi { p: f64::NAN }, 10, 1).is_err());
        assert!(generate_synthetic(SyntheticModel::BarabasiAlbert { m: 0 }, 10, 1).is_err());
        assert!(generate_synthetic(SyntheticModel::BarabasiAlbert { m: 10 }, 10, 1).is_err());
        assert!(generate_synthetic(SyntheticModel::ErdosRenyi { p: 0.5 }, 0, 1).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 3 }, 200, 11).unwrap();
        let b = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 3 }, 200, 11).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let c = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 3 }, 200, 12).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn reachability_basics() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)], true).unwrap();
        assert_eq!(reachable_set(&g, 0).unwrap(), vec![0, 1, 2]);
        assert_eq!(reachable_set(&g, 3).unwrap(), vec![3]);
        assert!(reachable_set(&g, 4).is_err());
    }
}
