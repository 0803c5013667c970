//! Dinic max-flow on real capacities. Used to certify dual feasibility of
//! total-variation subgradients (an LP over edge dual variables).

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    orig: Vec<f64>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
        }
    }

    /// Adds an arc pair `u -> v` (capacity `cap_uv`) and `v -> u`
    /// (capacity `cap_vu`). Returns the handle of the forward arc.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: f64, cap_vu: f64) -> usize {
        let id = self.to.len();
        self.adj[u].push(id);
        self.to.push(v);
        self.cap.push(cap_uv);
        self.orig.push(cap_uv);
        self.adj[v].push(id + 1);
        self.to.push(u);
        self.cap.push(cap_vu);
        self.orig.push(cap_vu);
        id
    }

    /// Net flow along the forward direction of an arc pair.
    pub fn flow(&self, id: usize) -> f64 {
        (self.orig[id] - self.cap[id] - (self.orig[id + 1] - self.cap[id + 1])) / 2.0
    }

    pub fn max_flow(&mut self, s: usize, t: usize, eps: f64) -> f64 {
        let n = self.adj.len();
        let mut total = 0.0;
        let mut level = vec![usize::MAX; n];
        let mut next = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &a in &self.adj[x] {
                    let y = self.to[a];
                    if self.cap[a] > eps && level[y] == usize::MAX {
                        level[y] = level[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            next.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, eps, &level, &mut next);
                if pushed <= eps {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn augment(&mut self, x: usize, t: usize, limit: f64, eps: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if x == t {
            return limit;
        }
        while next[x] < self.adj[x].len() {
            let a = self.adj[x][next[x]];
            let y = self.to[a];
            if self.cap[a] > eps && level[y] == level[x] + 1 {
                let pushed = self.augment(y, t, limit.min(self.cap[a]), eps, level, next);
                if pushed > eps {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            next[x] += 1;
        }
        0.0
    }
}
