//! The fourteen node centralities used as features.
//!
//! Conventions per measure:
//! - `degree` is in-degree plus out-degree; `avg_neighbor_degree` averages
//!   the total degree of out-neighbours.
//! - `closeness`, `harmonic` and `local_reaching` use outgoing distances.
//! - `betweenness` and `load` run on the directed graph and are normalized
//!   by `(n - 1)(n - 2)`.
//! - `clustering_coefficient`, `core_number` and `eigenvector` use the
//!   undirected projection.
//! - `vote_rank` converts the selection order into `(n - rank) / n`.

mod paths;
mod spectral;
mod structural;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use spectral::{
    EIGENVECTOR_MAX_ITER, EIGENVECTOR_TOL, PAGERANK_DAMPING, PAGERANK_MAX_ITER, PAGERANK_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityId {
    Degree,
    InDegree,
    OutDegree,
    AvgNeighborDegree,
    Closeness,
    Betweenness,
    LocalReaching,
    VoteRank,
    Load,
    ClusteringCoefficient,
    CoreNumber,
    Eigenvector,
    Pagerank,
    Harmonic,
}

impl CentralityId {
    pub const ALL: [CentralityId; 14] = [
        CentralityId::Degree,
        CentralityId::InDegree,
        CentralityId::OutDegree,
        CentralityId::AvgNeighborDegree,
        CentralityId::Closeness,
        CentralityId::Betweenness,
        CentralityId::LocalReaching,
        CentralityId::VoteRank,
        CentralityId::Load,
        CentralityId::ClusteringCoefficient,
        CentralityId::CoreNumber,
        CentralityId::Eigenvector,
        CentralityId::Pagerank,
        CentralityId::Harmonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CentralityId::Degree => "degree",
            CentralityId::InDegree => "in_degree",
            CentralityId::OutDegree => "out_degree",
            CentralityId::AvgNeighborDegree => "avg_neighbor_degree",
            CentralityId::Closeness => "closeness",
            CentralityId::Betweenness => "betweenness",
            CentralityId::LocalReaching => "local_reaching",
            CentralityId::VoteRank => "vote_rank",
            CentralityId::Load => "load",
            CentralityId::ClusteringCoefficient => "clustering_coefficient",
            CentralityId::CoreNumber => "core_number",
            CentralityId::Eigenvector => "eigenvector",
            CentralityId::Pagerank => "pagerank",
            CentralityId::Harmonic => "harmonic",
        }
    }

    pub fn index(self) -> usize {
        CentralityId::ALL.iter().position(|&c| c == self).expect("listed in ALL")
    }
}

impl std::fmt::Display for CentralityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CentralityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CentralityId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown centrality {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScoreMap {
    pub measure: CentralityId,
    pub scores: Vec<f64>,
}

pub fn compute_centrality(g: &Graph, measure: CentralityId) -> Result<NodeScoreMap> {
    if g.n() == 0 {
        return Err(Error::InvalidParameter("centrality of an empty graph".into()));
    }
    let scores = match measure {
        CentralityId::Closeness => paths::closeness_from(&paths::reach_summaries(g)),
        CentralityId::Harmonic => paths::harmonic_from(&paths::reach_summaries(g)),
        CentralityId::LocalReaching => paths::local_reaching_from(&paths::reach_summaries(g)),
        other => compute_simple(g, other)?,
    };
    Ok(NodeScoreMap { measure, scores })
}

fn compute_simple(g: &Graph, measure: CentralityId) -> Result<Vec<f64>> {
    Ok(match measure {
        CentralityId::Degree => structural::degree(g),
        CentralityId::InDegree => structural::in_degree(g),
        CentralityId::OutDegree => structural::out_degree(g),
        CentralityId::AvgNeighborDegree => structural::avg_neighbor_degree(g),
        CentralityId::Betweenness => paths::normalize_pairs(paths::betweenness_raw(g), "betweenness"),
        CentralityId::Load => paths::normalize_pairs(paths::load_raw(g), "load"),
        CentralityId::VoteRank => structural::vote_rank(g),
        CentralityId::ClusteringCoefficient => structural::clustering(&g.undirected_projection()),
        CentralityId::CoreNumber => structural::core_number(&g.undirected_projection()),
        CentralityId::Eigenvector => spectral::eigenvector(g)?,
        CentralityId::Pagerank => spectral::pagerank(g)?,
        CentralityId::Closeness | CentralityId::Harmonic | CentralityId::LocalReaching => {
            unreachable!("handled through reach summaries")
        }
    })
}

/// All fourteen measures in [`CentralityId::ALL`] order. The three
/// reachability measures share one all-sources BFS pass.
pub fn compute_all_centralities(g: &Graph) -> Result<Vec<NodeScoreMap>> {
    if g.n() == 0 {
        return Err(Error::InvalidParameter("centrality of an empty graph".into()));
    }
    let reach = paths::reach_summaries(g);
    let results = crate::par::map_slice(&CentralityId::ALL, |&measure| -> Result<NodeScoreMap> {
        let scores = match measure {
            CentralityId::Closeness => paths::closeness_from(&reach),
            CentralityId::Harmonic => paths::harmonic_from(&reach),
            CentralityId::LocalReaching => paths::local_reaching_from(&reach),
            other => compute_simple(g, other).map_err(|e| Error::Centrality {
                measure: other.name().to_owned(),
                source: Box::new(e),
            })?,
        };
        Ok(NodeScoreMap { measure, scores })
    });
    results.into_iter().collect()
}

/// Selection order produced by VoteRank, first pick first.
pub fn vote_rank_order(g: &Graph) -> Vec<usize> {
    structural::vote_rank_order(g)
}

/// Parameters recorded next to a centrality table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityMeta {
    pub graph_checksum: String,
    pub measures: Vec<CentralityId>,
    pub eigenvector_tol: f64,
    pub eigenvector_max_iter: usize,
    pub pagerank_damping: f64,
    pub pagerank_tol: f64,
    pub betweenness_normalization: String,
    pub vote_rank_score: String,
    pub projection: String,
}

impl CentralityMeta {
    pub fn new(g: &Graph) -> Self {
        CentralityMeta {
            graph_checksum: g.checksum(),
            measures: CentralityId::ALL.to_vec(),
            eigenvector_tol: EIGENVECTOR_TOL,
            eigenvector_max_iter: EIGENVECTOR_MAX_ITER,
            pagerank_damping: PAGERANK_DAMPING,
            pagerank_tol: PAGERANK_TOL,
            betweenness_normalization: "1/((n-1)(n-2)), directed".into(),
            vote_rank_score: "(n - rank)/n, unselected 0".into(),
            projection: "clustering_coefficient, core_number, eigenvector on undirected projection".into(),
        }
    }
}

/// Writes `node,degree,...,harmonic`; maps must be in [`CentralityId::ALL`] order.
pub fn write_centralities_csv<W: Write>(maps: &[NodeScoreMap], w: W) -> Result<()> {
    check_complete(maps)?;
    let n = maps[0].scores.len();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["node".to_owned()];
    header.extend(maps.iter().map(|m| m.measure.name().to_owned()));
    wtr.write_record(&header)?;
    for v in 0..n {
        let mut row = vec![v.to_string()];
        row.extend(maps.iter().map(|m| m.scores[v].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<centrality csv>", e))?;
    Ok(())
}

pub fn read_centralities_csv<R: Read>(r: R) -> Result<Vec<NodeScoreMap>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("node")
        .chain(CentralityId::ALL.iter().map(|c| c.name()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Assembly(format!("unexpected centrality header {header:?}")));
    }
    let mut maps: Vec<NodeScoreMap> = CentralityId::ALL
        .iter()
        .map(|&measure| NodeScoreMap {
            measure,
            scores: Vec::new(),
        })
        .collect();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, m) in maps.iter_mut().enumerate() {
            let value = rec[j + 1].parse::<f64>().map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            m.scores.push(value);
        }
    }
    Ok(maps)
}

pub(crate) fn check_complete(maps: &[NodeScoreMap]) -> Result<()> {
    for (i, id) in CentralityId::ALL.iter().enumerate() {
        match maps.get(i) {
            Some(m) if m.measure == *id => {}
            _ => return Err(Error::Assembly(format!("missing centrality {}", id.name()))),
        }
    }
    if maps.len() != CentralityId::ALL.len() {
        return Err(Error::Assembly(format!("expected 14 centralities, got {}", maps.len())));
    }
    let n = maps[0].scores.len();
    if let Some(bad) = maps.iter().find(|m| m.scores.len() != n) {
        return Err(Error::Assembly(format!(
            "{} has {} scores, expected {n}",
            bad.measure,
            bad.scores.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticModel};
    use approx::assert_abs_diff_eq;

    fn scores(g: &Graph, m: CentralityId) -> Vec<f64> {
        compute_centrality(g, m).unwrap().scores
    }

    #[test]
    fn fourteen_distinct_names() {
        let mut names: Vec<_> = CentralityId::ALL.iter().map(|c| c.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 14);
        for c in CentralityId::ALL {
            assert_eq!(c.name().parse::<CentralityId>().unwrap(), c);
            assert_eq!(CentralityId::ALL[c.index()], c);
        }
    }

    #[test]
    fn pagerank_on_cycle_is_uniform() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)], true).unwrap();
        for s in scores(&g, CentralityId::Pagerank) {
            assert_abs_diff_eq!(s, 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn path_betweenness_middle_node() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)], false).unwrap();
        assert_eq!(scores(&g, CentralityId::Betweenness), vec![0.0, 1.0, 0.0]);
        assert_eq!(scores(&g, CentralityId::Load), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn local_reaching_on_directed_path() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)], true).unwrap();
        let lr = scores(&g, CentralityId::LocalReaching);
        assert_eq!(lr[0], 1.0);
        assert_eq!(lr[1], 0.5);
        assert_eq!(lr[2], 0.0);
        let cl = scores(&g, CentralityId::Closeness);
        assert_eq!(cl[2], 0.0);
        assert_abs_diff_eq!(cl[0], (2.0 / 3.0) * 1.0, epsilon = 1e-15);
        assert_eq!(scores(&g, CentralityId::Harmonic), vec![1.5, 1.0, 0.0]);
    }

    #[test]
    fn complete_graph_clustering() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = Graph::from_edges(4, edges, false).unwrap();
        assert_eq!(scores(&g, CentralityId::ClusteringCoefficient), vec![1.0; 4]);
        assert_eq!(scores(&g, CentralityId::CoreNumber), vec![3.0; 4]);
    }

    #[test]
    fn core_numbers_of_triangle_with_tail() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)], false).unwrap();
        assert_eq!(scores(&g, CentralityId::CoreNumber), vec![2.0, 2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn degree_family() {
        let g = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)], true).unwrap();
        assert_eq!(scores(&g, CentralityId::Degree), vec![2.0, 2.0, 2.0]);
        assert_eq!(scores(&g, CentralityId::InDegree), vec![0.0, 1.0, 2.0]);
        assert_eq!(scores(&g, CentralityId::OutDegree), vec![2.0, 1.0, 0.0]);
        assert_eq!(scores(&g, CentralityId::AvgNeighborDegree), vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn star_hub_dominates() {
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v)), false).unwrap();
        let all = compute_all_centralities(&g).unwrap();
        assert_eq!(all.len(), 14);
        for m in &all {
            assert_eq!(m.scores.len(), 5);
            assert!(m.scores.iter().all(|s| s.is_finite()));
        }
        let hub_max = |id: CentralityId| {
            let s = &all[id.index()].scores;
            (1..5).all(|v| s[0] > s[v])
        };
        assert!(hub_max(CentralityId::Degree));
        assert!(hub_max(CentralityId::Betweenness));
        assert!(hub_max(CentralityId::VoteRank));
        assert_eq!(vote_rank_order(&g)[0], 0);
        assert_eq!(all[CentralityId::VoteRank.index()].scores[0], 1.0);
    }

    #[test]
    fn vote_rank_first_pick_is_max_in_degree() {
        for seed in 0..20 {
            let g = generate_synthetic(SyntheticModel::DirectedErdosRenyi { p: 0.1 }, 40, seed).unwrap();
            let order = vote_rank_order(&g);
            let best = (0..g.n()).fold(0, |b, v| if g.in_degree(v) > g.in_degree(b) { v } else { b });
            assert_eq!(order[0], best);
            let mut seen = order.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), order.len());
        }
    }

    #[test]
    fn pagerank_sums_to_one_with_dangling_nodes() {
        let g = generate_synthetic(SyntheticModel::DirectedBarabasiAlbert { m: 2 }, 300, 3).unwrap();
        let pr = scores(&g, CentralityId::Pagerank);
        assert_abs_diff_eq!(pr.iter().sum::<f64>(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn eigenvector_is_a_fixed_point() {
        let g = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 3 }, 200, 5).unwrap();
        let x = scores(&g, CentralityId::Eigenvector);
        let step = spectral::eigenvector_step(&g.undirected_projection(), &x);
        let diff: f64 = step.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff < g.n() as f64 * EIGENVECTOR_TOL, "{diff}");
    }

    #[test]
    fn eigenvector_reports_nonconvergence() {
        let g = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 2 }, 50, 5).unwrap();
        let err = spectral::eigenvector_with(&g.undirected_projection(), 1e-300, 3).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn tiny_graphs_skip_normalization() {
        let g = Graph::from_edges(2, [(0, 1)], false).unwrap();
        assert_eq!(scores(&g, CentralityId::Betweenness), vec![0.0, 0.0]);
        let single = Graph::from_edges(1, [], true).unwrap();
        let all = compute_all_centralities(&single).unwrap();
        assert!(all.iter().all(|m| m.scores.len() == 1 && m.scores[0].is_finite()));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let g = generate_synthetic(SyntheticModel::BarabasiAlbert { m: 2 }, 30, 1).unwrap();
        let all = compute_all_centralities(&g).unwrap();
        let mut buf = Vec::new();
        write_centralities_csv(&all, &mut buf).unwrap();
        let first = String::from_utf8(buf.clone()).unwrap().lines().next().unwrap().to_owned();
        assert_eq!(
            first,
            "node,degree,in_degree,out_degree,avg_neighbor_degree,closeness,betweenness,\
             local_reaching,vote_rank,load,clustering_coefficient,core_number,eigenvector,pagerank,harmonic"
        );
        assert_eq!(read_centralities_csv(buf.as_slice()).unwrap(), all);
    }

    #[test]
    fn incomplete_maps_are_rejected() {
        let g = Graph::from_edges(3, [(0, 1)], true).unwrap();
        let mut all = compute_all_centralities(&g).unwrap();
        all.remove(4);
        let err = check_complete(&all).unwrap_err();
        assert!(err.to_string().contains("closeness"), "{err}");
    }
}
