//! Critical-path analysis over event dependency graphs.
//!
//! The first playable packet sits at the end of the longest dependency
//! chain, not at the sum of stage latencies. [`first_packet_dag`] rebuilds
//! that dependency graph directly from a scenario, independently of the
//! simulator's event recurrences, so the two can cross-check each other
//! exactly.

use crate::sim::{codec_draw_us, gate_text_count, resolve, Scenario, SimError, StageModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DagError {
    #[error("dependency graph contains a cycle")]
    CycleDetected,
    #[error("target is unreachable from the source")]
    Unreachable,
}

/// Weighted event-dependency graph. Edge weights are microseconds.
#[derive(Debug, Clone, Default)]
pub struct EventDag {
    node_count: usize,
    edges: Vec<(usize, usize, u64)>,
}

impl EventDag {
    pub fn new(node_count: usize) -> Self {
        EventDag {
            node_count,
            edges: Vec::new(),
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// `to` cannot happen sooner than `weight_us` after `from`.
    pub fn add_edge(&mut self, from: usize, to: usize, weight_us: u64) {
        assert!(from < self.node_count && to < self.node_count, "edge endpoints must exist");
        self.edges.push((from, to, weight_us));
    }

    /// Longest path from `source` to `target` in microseconds.
    ///
    /// Kahn topological ordering followed by a relaxation pass; nodes not
    /// reachable from `source` keep no distance, so an unreachable target is
    /// an error rather than a silent zero.
    pub fn critical_path(&self, source: usize, target: usize) -> Result<u64, DagError> {
        assert!(source < self.node_count && target < self.node_count);
        let mut adjacency: Vec<Vec<(usize, u64)>> = vec![Vec::new(); self.node_count];
        let mut indegree = vec![0usize; self.node_count];
        for &(from, to, w) in &self.edges {
            adjacency[from].push((to, w));
            indegree[to] += 1;
        }

        let mut queue: Vec<usize> = (0..self.node_count).filter(|&n| indegree[n] == 0).collect();
        let mut topo = Vec::with_capacity(self.node_count);
        let mut head = 0;
        while head < queue.len() {
            let n = queue[head];
            head += 1;
            topo.push(n);
            for &(next, _) in &adjacency[n] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    queue.push(next);
                }
            }
        }
        if topo.len() != self.node_count {
            return Err(DagError::CycleDetected);
        }

        let mut dist: Vec<Option<u64>> = vec![None; self.node_count];
        dist[source] = Some(0);
        for &n in &topo {
            let Some(d) = dist[n] else { continue };
            for &(next, w) in &adjacency[n] {
                let candidate = d + w;
                if dist[next].map_or(true, |cur| candidate > cur) {
                    dist[next] = Some(candidate);
                }
            }
        }
        dist[target].ok_or(DagError::Unreachable)
    }
}

/// First-packet latency computed as a longest path over the dependency
/// graph: prefill chain (with arrival edges in real-time mode), first-token
/// latency, text chain, the ratio gates into the speech chain, and the first
/// codec chunk. Never consults the simulator's event loop.
pub fn first_packet_dag(scenario: &Scenario, stages: &StageModel) -> Result<u64, SimError> {
    let r = resolve(scenario, stages)?;
    let frames_needed = r.first_chunk_frames();
    let texts_needed = gate_text_count(r.ratio, frames_needed - 1);

    let mut dag = EventDag::default();
    let source = dag.add_node();

    let mut prev = source;
    for i in 0..r.n_chunks {
        let enc = dag.add_node();
        // The chunk needs the encoder to be free and its media to exist.
        dag.add_edge(prev, enc, r.enc_us);
        let arrival = r.arrival_us(i, scenario.input_mode);
        if arrival > 0 {
            dag.add_edge(source, enc, arrival + r.enc_us);
        }
        prev = enc;
    }

    let mut texts = Vec::with_capacity(texts_needed as usize);
    for k in 0..texts_needed {
        let t = dag.add_node();
        let (from, w) = if k == 0 {
            (prev, r.ttft_us)
        } else {
            (texts[k as usize - 1], r.thinker_tpop_us)
        };
        dag.add_edge(from, t, w);
        texts.push(t);
    }

    let mut prev_frame = None;
    for j in 0..frames_needed {
        let f = dag.add_node();
        let gate = texts[(gate_text_count(r.ratio, j) - 1) as usize];
        dag.add_edge(gate, f, r.talker_tpop_us);
        if let Some(p) = prev_frame {
            dag.add_edge(p, f, r.talker_tpop_us);
        }
        prev_frame = Some(f);
    }

    let packet = dag.add_node();
    dag.add_edge(
        prev_frame.expect("at least one frame"),
        packet,
        codec_draw_us(stages, scenario.seed, 0),
    );

    dag.critical_path(source, packet)
        .map_err(|e| SimError::InvalidScenario(format!("dependency graph: {e}")))
}
