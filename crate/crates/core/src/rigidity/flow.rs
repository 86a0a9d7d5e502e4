//! Edmonds–Karp max-flow on the split correspondence graph.
//!
//! Every node vertex `k` becomes `k_in → k_out` with capacity one; each
//! membership `(k, p)` becomes `p → k_in` and `k_out → p` with a capacity
//! larger than any achievable flow.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: usize,
    /// Index of the reverse arc in `arcs[to]`.
    rev: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct SplitNetwork {
    n_patches: usize,
    arcs: Vec<Vec<Arc>>,
}

impl SplitNetwork {
    /// `memberships[p]` lists the node indices of patch `p`.
    pub(crate) fn new(n_nodes: usize, memberships: &[Vec<usize>]) -> Self {
        let n_patches = memberships.len();
        let inf = n_nodes + 1;
        let mut net = Self {
            n_patches,
            arcs: vec![Vec::new(); n_patches + 2 * n_nodes],
        };
        let mut used = vec![false; n_nodes];
        for (p, members) in memberships.iter().enumerate() {
            for &k in members {
                used[k] = true;
                let (k_in, k_out) = (net.node_in(k), net.node_out(k));
                net.add_arc(p, k_in, inf);
                net.add_arc(k_out, p, inf);
            }
        }
        for (k, _) in used.iter().enumerate().filter(|(_, &u)| u) {
            let (k_in, k_out) = (net.node_in(k), net.node_out(k));
            net.add_arc(k_in, k_out, 1);
        }
        net
    }

    pub(crate) fn node_in(&self, k: usize) -> usize {
        self.n_patches + 2 * k
    }

    pub(crate) fn node_out(&self, k: usize) -> usize {
        self.n_patches + 2 * k + 1
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: usize) {
        let rev_from = self.arcs[to].len();
        let rev_to = self.arcs[from].len();
        self.arcs[from].push(Arc { to, cap, rev: rev_from });
        self.arcs[to].push(Arc { to: from, cap: 0, rev: rev_to });
    }

    /// Augments along shortest residual paths until none remain or the flow
    /// reaches `limit`. Consumes residual capacity in place.
    pub(crate) fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let n = self.arcs.len();
        let mut flow = 0;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        while flow < limit {
            parent.iter_mut().for_each(|p| *p = None);
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            'bfs: while let Some(u) = queue.pop_front() {
                for (idx, a) in self.arcs[u].iter().enumerate() {
                    if a.cap > 0 && !seen[a.to] {
                        seen[a.to] = true;
                        parent[a.to] = Some((u, idx));
                        if a.to == t {
                            break 'bfs;
                        }
                        queue.push_back(a.to);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut bottleneck = usize::MAX;
            let mut v = t;
            while let Some((u, idx)) = parent[v] {
                bottleneck = bottleneck.min(self.arcs[u][idx].cap);
                v = u;
            }
            let push = bottleneck.min(limit - flow);
            let mut v = t;
            while let Some((u, idx)) = parent[v] {
                self.arcs[u][idx].cap -= push;
                let rev = self.arcs[u][idx].rev;
                self.arcs[v][rev].cap += push;
                v = u;
            }
            flow += push;
        }
        flow
    }

    /// Vertices reachable from `s` in the residual network.
    pub(crate) fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.arcs.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for a in &self.arcs[u] {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    queue.push_back(a.to);
                }
            }
        }
        seen
    }
}
