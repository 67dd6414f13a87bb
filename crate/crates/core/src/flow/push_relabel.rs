use std::collections::VecDeque;

use super::network::FlowGraph;
use crate::Weight;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("arc {0} carries flow outside [0, capacity]")]
    CapacityViolated(usize),
    #[error("vertex {0} has negative excess")]
    NegativeExcess(u32),
}

/// Terminal sets and vertex state of an incremental maximum preflow
/// computation. The flow itself lives in the [`FlowGraph`].
#[derive(Debug, Clone)]
pub struct Preflow {
    excess: Vec<Weight>,
    label: Vec<u32>,
    current: Vec<usize>,
    source: Vec<bool>,
    sink: Vec<bool>,
}

impl Preflow {
    pub fn new(g: &FlowGraph) -> Self {
        let n = g.num_vertices();
        Self {
            excess: vec![0; n],
            label: vec![0; n],
            current: vec![0; n],
            source: vec![false; n],
            sink: vec![false; n],
        }
    }

    pub fn is_source(&self, v: u32) -> bool {
        self.source[v as usize]
    }

    pub fn is_sink(&self, v: u32) -> bool {
        self.sink[v as usize]
    }

    pub fn excess(&self, v: u32) -> Weight {
        self.excess[v as usize]
    }

    /// Turns `v` into a source and saturates its residual arcs towards
    /// non-source vertices.
    pub fn add_source(&mut self, g: &mut FlowGraph, v: u32) {
        assert!(!self.sink[v as usize], "vertex {v} is already a sink");
        if std::mem::replace(&mut self.source[v as usize], true) {
            return;
        }
        for a in g.arcs(v) {
            let w = g.head(a);
            let r = g.residual(a);
            if r > 0 && !self.source[w as usize] {
                g.push(a, r);
                self.excess[w as usize] += r;
            }
        }
        self.excess[v as usize] = 0;
    }

    pub fn add_sink(&mut self, v: u32) {
        assert!(!self.source[v as usize], "vertex {v} is already a source");
        self.sink[v as usize] = true;
    }

    /// Flow arriving at the sinks.
    pub fn value(&self) -> Weight {
        (0..self.sink.len()).filter(|&v| self.sink[v]).map(|v| self.excess[v]).sum()
    }

    fn is_terminal(&self, v: u32) -> bool {
        self.source[v as usize] || self.sink[v as usize]
    }

    /// Recomputes excesses from the flow and checks that it is a preflow.
    fn sync(&mut self, g: &FlowGraph) -> Result<(), FlowError> {
        let n = g.num_vertices();
        for v in 0..n as u32 {
            for a in g.arcs(v) {
                if g.residual(a) < 0 {
                    return Err(FlowError::CapacityViolated(a));
                }
            }
            self.excess[v as usize] = -g.outflow(v);
            if !self.source[v as usize] && self.excess[v as usize] < 0 {
                return Err(FlowError::NegativeExcess(v));
            }
        }
        Ok(())
    }

    /// Exact distance labels by a reverse residual BFS from the sinks.
    /// Vertices that cannot reach a sink get label `n`.
    fn global_relabel(&mut self, g: &FlowGraph) {
        let n = g.num_vertices() as u32;
        self.label.iter_mut().for_each(|l| *l = n);
        let mut queue = VecDeque::new();
        for v in 0..n {
            if self.sink[v as usize] {
                self.label[v as usize] = 0;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for a in g.arcs(v) {
                let u = g.head(a);
                if self.label[u as usize] == n && !self.source[u as usize] && g.residual(g.rev(a)) > 0 {
                    self.label[u as usize] = self.label[v as usize] + 1;
                    queue.push_back(u);
                }
            }
        }
        for v in 0..n {
            self.current[v as usize] = g.arcs(v).start;
        }
    }
}

/// Augments the flow in `g` to a maximum preflow for the terminal sets of
/// `pf` with FIFO push-relabel and periodic global relabeling. The existing
/// flow is used as a warm start. Returns the flow value.
pub fn max_preflow(g: &mut FlowGraph, pf: &mut Preflow) -> Result<Weight, FlowError> {
    pf.sync(g)?;
    let n = g.num_vertices();
    let relabel_interval = n.max(1);
    pf.global_relabel(g);
    let mut queue: VecDeque<u32> = VecDeque::new();
    let mut in_queue = vec![false; n];
    let active = |pf: &Preflow, v: u32| !pf.is_terminal(v) && pf.excess[v as usize] > 0 && (pf.label[v as usize] as usize) < n;
    for v in 0..n as u32 {
        if active(pf, v) {
            queue.push_back(v);
            in_queue[v as usize] = true;
        }
    }
    let mut work = 0;
    while let Some(u) = queue.pop_front() {
        in_queue[u as usize] = false;
        let end = g.arcs(u).end;
        while pf.excess[u as usize] > 0 && (pf.label[u as usize] as usize) < n {
            let a = pf.current[u as usize];
            if a == end {
                // Relabel.
                let mut min = n as u32;
                for b in g.arcs(u) {
                    if g.residual(b) > 0 {
                        min = min.min(pf.label[g.head(b) as usize] + 1);
                    }
                }
                work += g.arcs(u).len() + 1;
                pf.label[u as usize] = min.min(n as u32);
                pf.current[u as usize] = g.arcs(u).start;
                continue;
            }
            let v = g.head(a);
            let r = g.residual(a);
            if r > 0 && pf.label[u as usize] == pf.label[v as usize] + 1 {
                let d = r.min(pf.excess[u as usize]);
                g.push(a, d);
                pf.excess[u as usize] -= d;
                pf.excess[v as usize] += d;
                if !in_queue[v as usize] && active(pf, v) {
                    queue.push_back(v);
                    in_queue[v as usize] = true;
                }
            } else {
                pf.current[u as usize] += 1;
            }
        }
        if work >= relabel_interval {
            work = 0;
            pf.global_relabel(g);
            for v in 0..n as u32 {
                if !in_queue[v as usize] && active(pf, v) {
                    queue.push_back(v);
                    in_queue[v as usize] = true;
                }
            }
        }
    }
    Ok(pf.value())
}

/// Source-side and sink-side cut sets of a maximum preflow.
///
/// `T_r` holds the vertices that reach a sink in the residual network and
/// `S_r` those reachable from a source or from a non-sink vertex with
/// excess. Unbounded arcs count as residual.
pub fn derive_side_cuts(g: &FlowGraph, pf: &Preflow) -> (Vec<bool>, Vec<bool>) {
    let n = g.num_vertices();
    let mut t_r = vec![false; n];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for v in 0..n as u32 {
        if pf.is_sink(v) {
            t_r[v as usize] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for a in g.arcs(v) {
            let u = g.head(a);
            if !t_r[u as usize] && g.cut_residual(g.rev(a)) {
                t_r[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    let mut s_r = vec![false; n];
    for v in 0..n as u32 {
        if pf.is_source(v) || (!pf.is_sink(v) && pf.excess(v) > 0) {
            s_r[v as usize] = true;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for a in g.arcs(u) {
            let v = g.head(a);
            if !s_r[v as usize] && g.cut_residual(a) {
                s_r[v as usize] = true;
                queue.push_back(v);
            }
        }
    }
    (s_r, t_r)
}
