//! The static network substrate: directed lossy links, hyperarcs
//! (broadcast transmission opportunities), and the conflict graph with
//! its maximal cliques under the protocol interference model.

use crate::catalog::enumerate_structures;
use crate::ids::{HyperarcId, LinkId, NodeId};
use crate::scenario::{Scenario, ScenarioError};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: f64,
    pub success_prob: f64,
}

impl Link {
    /// Loss-discounted rate used for hyperarc capacities.
    pub fn effective_rate(&self) -> f64 {
        self.capacity * self.success_prob
    }
}

#[derive(Debug, Clone)]
pub struct Hyperarc {
    pub id: HyperarcId,
    pub origin: NodeId,
    /// Sorted, non-empty target set.
    pub targets: Vec<NodeId>,
    /// One member link per target, in target order.
    pub member_links: Vec<LinkId>,
    /// min over member links of capacity x success probability.
    pub rate: f64,
}

impl Hyperarc {
    pub fn endpoints(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.origin).chain(self.targets.iter().copied())
    }

    pub fn is_singleton(&self) -> bool {
        self.targets.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct ConflictGraph {
    /// Symmetric adjacency over hyperarc indices; the diagonal is false.
    pub adj: Vec<Vec<bool>>,
    /// All maximal cliques, each sorted, cliques in lexicographic order.
    pub cliques: Vec<Vec<HyperarcId>>,
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    pub links: Vec<Link>,
    pub hyperarcs: Vec<Hyperarc>,
    pub conflict: ConflictGraph,
    /// Symmetric node-level "in range" relation.
    pub in_range: Vec<Vec<bool>>,
    link_by_pair: BTreeMap<(NodeId, NodeId), LinkId>,
    hyperarc_by_key: BTreeMap<(NodeId, Vec<NodeId>), HyperarcId>,
}

impl Hypergraph {
    pub fn link(&self, from: NodeId, to: NodeId) -> Option<&Link> {
        self.link_by_pair.get(&(from, to)).map(|id| &self.links[id.index()])
    }

    pub fn hyperarc_id(&self, origin: NodeId, targets: &[NodeId]) -> Option<HyperarcId> {
        let mut t = targets.to_vec();
        t.sort_unstable();
        self.hyperarc_by_key.get(&(origin, t)).copied()
    }

    pub fn hyperarc(&self, id: HyperarcId) -> &Hyperarc {
        &self.hyperarcs[id.index()]
    }

    /// Label like "I->{A1,A2}" for traces and demo output.
    pub fn hyperarc_label(&self, sc: &Scenario, id: HyperarcId) -> String {
        let h = self.hyperarc(id);
        let name = |n: NodeId| -> String {
            let s = &sc.nodes[n.index()].name;
            if s.is_empty() {
                format!("n{}", n.0)
            } else {
                s.clone()
            }
        };
        if h.targets.len() == 1 {
            format!("{}->{}", name(h.origin), name(h.targets[0]))
        } else {
            let ts: Vec<String> = h.targets.iter().map(|t| name(*t)).collect();
            format!("{}->{{{}}}", name(h.origin), ts.join(","))
        }
    }
}

/// Build links, hyperarcs and the conflict graph for a validated
/// scenario. Hyperarc enumeration is demand driven: one singleton
/// hyperarc per declared link plus the hyperarcs required by the coding
/// structures available at the scenario's coding depth.
pub fn build_hypergraph(sc: &Scenario) -> Result<Hypergraph, ScenarioError> {
    sc.validate()?;
    let in_range = sc.in_range_matrix();

    let mut links = Vec::with_capacity(sc.links.len());
    let mut link_by_pair = BTreeMap::new();
    for (i, l) in sc.links.iter().enumerate() {
        let id = LinkId::from_index(i);
        links.push(Link {
            id,
            from: l.from,
            to: l.to,
            capacity: l.capacity,
            success_prob: l.success_prob,
        });
        link_by_pair.insert((l.from, l.to), id);
    }

    // Target sets: every link as a unicast hyperarc, then the broadcast
    // sets demanded by coding structures.
    let mut keys: Vec<(NodeId, Vec<NodeId>)> = links
        .iter()
        .map(|l| (l.from, vec![l.to]))
        .collect();
    for st in enumerate_structures(sc) {
        for (origin, targets) in &st.hops {
            let mut t = targets.clone();
            t.sort_unstable();
            keys.push((*origin, t));
        }
    }
    keys.sort();
    keys.dedup();

    let mut hyperarcs = Vec::with_capacity(keys.len());
    let mut hyperarc_by_key = BTreeMap::new();
    for (origin, targets) in keys {
        let id = HyperarcId::from_index(hyperarcs.len());
        let mut member_links = Vec::with_capacity(targets.len());
        let mut rate = f64::INFINITY;
        for t in &targets {
            let lid = *link_by_pair
                .get(&(origin, *t))
                .expect("structure targets are backed by declared links");
            member_links.push(lid);
            rate = rate.min(links[lid.index()].effective_rate());
        }
        hyperarc_by_key.insert((origin, targets.clone()), id);
        hyperarcs.push(Hyperarc {
            id,
            origin,
            targets,
            member_links,
            rate,
        });
    }

    // Protocol model: hyperarcs conflict when they share a node or any
    // endpoint of one is within range of any endpoint of the other.
    let n = hyperarcs.len();
    let mut adj = vec![vec![false; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let conflict = hyperarcs[a].endpoints().any(|x| {
                hyperarcs[b]
                    .endpoints()
                    .any(|y| x == y || in_range[x.index()][y.index()])
            });
            adj[a][b] = conflict;
            adj[b][a] = conflict;
        }
    }

    let cliques = enumerate_cliques(&adj);
    Ok(Hypergraph {
        links,
        hyperarcs,
        conflict: ConflictGraph { adj, cliques },
        in_range,
        link_by_pair,
        hyperarc_by_key,
    })
}

/// All maximal cliques of the conflict graph (Bron-Kerbosch with
/// pivoting). Isolated vertices come out as singleton cliques.
pub fn enumerate_cliques(adj: &[Vec<bool>]) -> Vec<Vec<HyperarcId>> {
    let n = adj.len();
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut r = Vec::new();
    let p: Vec<usize> = (0..n).collect();
    let x = Vec::new();
    bron_kerbosch(adj, &mut r, p, x, &mut cliques);
    let mut out: Vec<Vec<HyperarcId>> = cliques
        .into_iter()
        .map(|c| {
            let mut c: Vec<HyperarcId> = c.into_iter().map(HyperarcId::from_index).collect();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: &mut Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    // Pivot on the candidate with the most neighbors in P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count())
        .unwrap();
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
    let mut p = p;
    let mut x = x;
    for v in candidates {
        r.push(v);
        let np: Vec<usize> = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx: Vec<usize> = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r, np, nx, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{self, CodingDepth, Interference};

    fn ids(v: &[u32]) -> Vec<HyperarcId> {
        v.iter().map(|&i| HyperarcId(i)).collect()
    }

    #[test]
    fn cliques_of_complete_graph() {
        let n = 5;
        let mut adj = vec![vec![true; n]; n];
        for i in 0..n {
            adj[i][i] = false;
        }
        let cliques = enumerate_cliques(&adj);
        assert_eq!(cliques, vec![ids(&[0, 1, 2, 3, 4])]);
    }

    #[test]
    fn cliques_of_empty_graph() {
        let adj = vec![vec![false; 3]; 3];
        let cliques = enumerate_cliques(&adj);
        assert_eq!(cliques, vec![ids(&[0]), ids(&[1]), ids(&[2])]);
    }

    #[test]
    fn cliques_of_path_graph() {
        // a-b-c: maximal cliques {a,b} and {b,c}.
        let mut adj = vec![vec![false; 3]; 3];
        adj[0][1] = true;
        adj[1][0] = true;
        adj[1][2] = true;
        adj[2][1] = true;
        let cliques = enumerate_cliques(&adj);
        assert_eq!(cliques, vec![ids(&[0, 1]), ids(&[1, 2])]);
    }

    /// Exhaustive maximal-clique search by subset check, usable up to
    /// ~10 vertices.
    fn brute_force_cliques(adj: &[Vec<bool>]) -> Vec<Vec<HyperarcId>> {
        let n = adj.len();
        let is_clique = |mask: u32| -> bool {
            for a in 0..n {
                if mask & (1 << a) == 0 {
                    continue;
                }
                for b in (a + 1)..n {
                    if mask & (1 << b) != 0 && !adj[a][b] {
                        return false;
                    }
                }
            }
            true
        };
        let mut cliques = Vec::new();
        for mask in 1u32..(1 << n) {
            if !is_clique(mask) {
                continue;
            }
            let maximal = (0..n).all(|v| mask & (1 << v) != 0 || !is_clique(mask | (1 << v)));
            if maximal {
                let mut c: Vec<HyperarcId> = (0..n)
                    .filter(|v| mask & (1 << v) != 0)
                    .map(HyperarcId::from_index)
                    .collect();
                c.sort_unstable();
                cliques.push(c);
            }
        }
        cliques.sort();
        cliques
    }

    #[test]
    fn cliques_match_brute_force_on_random_graphs() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let mut adj = vec![vec![false; n]; n];
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.45) {
                        adj[a][b] = true;
                        adj[b][a] = true;
                    }
                }
            }
            assert_eq!(enumerate_cliques(&adj), brute_force_cliques(&adj));
        }
    }

    #[test]
    fn alice_bob_hypergraph() {
        let sc = scenario::alice_bob([1.0, 1.0], 1.0, CodingDepth::OneHop);
        let hg = build_hypergraph(&sc).unwrap();
        // Four unicast links plus the relay broadcast hyperarc.
        assert_eq!(hg.hyperarcs.len(), 5);
        let bc = hg
            .hyperarc_id(NodeId(1), &[NodeId(0), NodeId(2)])
            .expect("broadcast hyperarc exists");
        assert_eq!(hg.hyperarc(bc).rate, 1.0);
        // All nodes mutually in range: a single all-covering clique.
        assert_eq!(hg.conflict.cliques.len(), 1);
        assert_eq!(hg.conflict.cliques[0].len(), 5);
    }

    #[test]
    fn x_topology_broadcast_rate_is_min_over_links() {
        let sc = scenario::x_topology([4.0, 4.0], [1.0, 2.0], 1.0, CodingDepth::OneHop);
        let hg = build_hypergraph(&sc).unwrap();
        let bc = hg
            .hyperarc_id(NodeId(2), &[NodeId(3), NodeId(4)])
            .expect("relay broadcast exists");
        assert_eq!(hg.hyperarc(bc).rate, 1.0);
    }

    #[test]
    fn hyperarc_rates_equal_min_member_effective_rate() {
        let sc = scenario::butterfly([1.0, 2.0, 3.0, 4.0, 5.0], 0.85, CodingDepth::TwoHop);
        let hg = build_hypergraph(&sc).unwrap();
        for h in &hg.hyperarcs {
            let want = h
                .member_links
                .iter()
                .map(|l| hg.links[l.index()].effective_rate())
                .fold(f64::INFINITY, f64::min);
            assert!((h.rate - want).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_disjoint_links_do_not_conflict() {
        // Two links with disjoint endpoint pairs farther apart than the
        // interference range: no conflict edge.
        let sc = Scenario {
            nodes: vec![
                crate::scenario::NodeSpec { name: "a".into(), x: 0.0, y: 0.0 },
                crate::scenario::NodeSpec { name: "b".into(), x: 10.0, y: 0.0 },
                crate::scenario::NodeSpec { name: "c".into(), x: 500.0, y: 0.0 },
                crate::scenario::NodeSpec { name: "d".into(), x: 510.0, y: 0.0 },
            ],
            links: vec![
                crate::scenario::LinkSpec { from: NodeId(0), to: NodeId(1), capacity: 1.0, success_prob: 1.0 },
                crate::scenario::LinkSpec { from: NodeId(2), to: NodeId(3), capacity: 1.0, success_prob: 1.0 },
            ],
            flows: vec![],
            coding_depth: CodingDepth::None,
            interference: Interference::Range { range: 50.0 },
            overprovision: 1.0,
        };
        let hg = build_hypergraph(&sc).unwrap();
        assert!(!hg.conflict.adj[0][1]);
        assert_eq!(hg.conflict.cliques.len(), 2);
    }

    #[test]
    fn shared_node_always_conflicts_even_out_of_range() {
        // b->a and b->c share transmitter b; the protocol model forbids
        // simultaneous use regardless of distance.
        let sc = Scenario {
            nodes: vec![
                crate::scenario::NodeSpec { name: "a".into(), x: 0.0, y: 0.0 },
                crate::scenario::NodeSpec { name: "b".into(), x: 400.0, y: 0.0 },
                crate::scenario::NodeSpec { name: "c".into(), x: 800.0, y: 0.0 },
            ],
            links: vec![
                crate::scenario::LinkSpec { from: NodeId(1), to: NodeId(0), capacity: 1.0, success_prob: 1.0 },
                crate::scenario::LinkSpec { from: NodeId(1), to: NodeId(2), capacity: 1.0, success_prob: 1.0 },
            ],
            flows: vec![],
            coding_depth: CodingDepth::None,
            interference: Interference::Range { range: 10.0 },
            overprovision: 1.0,
        };
        let hg = build_hypergraph(&sc).unwrap();
        assert!(hg.conflict.adj[0][1]);
    }
}
