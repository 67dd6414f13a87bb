use crate::Weight;

/// Directed flow network in CSR form. Every arc has a paired reverse arc of
/// capacity zero, and `flow[rev[a]] == -flow[a]` holds at all times.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    first: Vec<usize>,
    head: Vec<u32>,
    cap: Vec<Weight>,
    pub(crate) flow: Vec<Weight>,
    rev: Vec<usize>,
    /// Arcs treated as having infinite capacity when cuts are derived.
    unbounded: Vec<bool>,
}

/// An arc `(tail, head, capacity, unbounded)` given to [`FlowGraph::new`].
pub type ArcSpec = (u32, u32, Weight, bool);

impl FlowGraph {
    pub fn new(n: usize, arcs: &[ArcSpec]) -> Self {
        let mut degree = vec![0usize; n + 1];
        for &(u, v, c, _) in arcs {
            assert!((u as usize) < n && (v as usize) < n, "arc endpoint out of range");
            assert!(c >= 0, "negative capacity");
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let first = degree.clone();
        let m = 2 * arcs.len();
        let mut pos = degree;
        let mut head = vec![0; m];
        let mut cap = vec![0; m];
        let mut rev = vec![0; m];
        let mut unbounded = vec![false; m];
        for &(u, v, c, inf) in arcs {
            let a = pos[u as usize];
            pos[u as usize] += 1;
            let b = pos[v as usize];
            pos[v as usize] += 1;
            head[a] = v;
            cap[a] = c;
            unbounded[a] = inf;
            rev[a] = b;
            head[b] = u;
            rev[b] = a;
        }
        Self { first, head, cap, flow: vec![0; m], rev, unbounded }
    }

    pub fn num_vertices(&self) -> usize {
        self.first.len() - 1
    }

    #[inline]
    pub(crate) fn arcs(&self, u: u32) -> std::ops::Range<usize> {
        self.first[u as usize]..self.first[u as usize + 1]
    }

    #[inline]
    pub(crate) fn head(&self, a: usize) -> u32 {
        self.head[a]
    }

    #[inline]
    pub(crate) fn rev(&self, a: usize) -> usize {
        self.rev[a]
    }

    #[inline]
    pub(crate) fn residual(&self, a: usize) -> Weight {
        self.cap[a] - self.flow[a]
    }

    /// Residual test used for cut derivation: unbounded arcs always qualify.
    #[inline]
    pub(crate) fn cut_residual(&self, a: usize) -> bool {
        self.unbounded[a] || self.residual(a) > 0
    }

    #[inline]
    pub(crate) fn push(&mut self, a: usize, delta: Weight) {
        self.flow[a] += delta;
        let r = self.rev[a];
        self.flow[r] -= delta;
    }

    /// Net flow out of `u`.
    pub fn outflow(&self, u: u32) -> Weight {
        self.arcs(u).map(|a| self.flow[a]).sum()
    }

    pub fn reset_flow(&mut self) {
        self.flow.iter_mut().for_each(|f| *f = 0);
    }
}
