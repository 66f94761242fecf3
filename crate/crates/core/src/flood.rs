//! Distributed region flooding.
//!
//! Every seed starts a wavefront at the same time. A node keeps the set of
//! regions at its current shortest distance and the distance itself; each
//! received `(region, hop)` message is discarded, merged, or replaces the
//! node's label, and only merges and replacements are rebroadcast.

use std::collections::BTreeSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Digraph, NodeId};
use crate::region::{RegionError, RegionSeedSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloodError {
    #[error("flood needs at least one seed")]
    EmptySeedSet,
    #[error("seed {0} is not a vertex of the graph")]
    UnknownSeed(NodeId),
}

impl From<RegionError> for FloodError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::UnknownSeed(s) => FloodError::UnknownSeed(s),
            _ => FloodError::EmptySeedSet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FloodMessage {
    pub region: NodeId,
    /// Hop value; seeds emit 1.
    pub hop: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodAction {
    Discard,
    MergeRebroadcast,
    ReplaceRebroadcast,
}

impl FloodAction {
    pub fn as_str(self) -> &'static str {
        match self {
            FloodAction::Discard => "discard",
            FloodAction::MergeRebroadcast => "merge",
            FloodAction::ReplaceRebroadcast => "replace",
        }
    }

    pub fn rebroadcasts(self) -> bool {
        self != FloodAction::Discard
    }
}

/// Per-node label `(regions, distance)` plus message tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FloodState {
    pub regions: BTreeSet<NodeId>,
    /// `None` until the first message arrives.
    pub distance: Option<u32>,
    pub tx_count: u64,
    pub rx_count: u64,
    pub discard_count: u64,
    pub broadcasts: u64,
}

impl FloodState {
    pub fn seed(region: NodeId) -> Self {
        Self {
            regions: [region].into(),
            distance: Some(0),
            ..Self::default()
        }
    }

    /// Applies one message to the label and says what to do with it.
    pub fn handle_message(&mut self, msg: FloodMessage) -> FloodAction {
        match self.distance {
            Some(d) if msg.hop > d => FloodAction::Discard,
            Some(d) if msg.hop == d => {
                if self.regions.insert(msg.region) {
                    FloodAction::MergeRebroadcast
                } else {
                    FloodAction::Discard
                }
            }
            _ => {
                self.regions.clear();
                self.regions.insert(msg.region);
                self.distance = Some(msg.hop);
                FloodAction::ReplaceRebroadcast
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// All messages of hop `h` are delivered before any of hop `h + 1`.
    Synchronous,
    /// Pending messages are delivered in seeded random order.
    Asynchronous { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Envelope {
    from: usize,
    to: usize,
    msg: FloodMessage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodTraceRecord {
    pub round: u32,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub region: NodeId,
    pub hop: u32,
    pub action: FloodAction,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FloodTotals {
    /// Point-to-point message copies sent (one per receiving neighbor).
    pub tx: u64,
    pub rx: u64,
    pub discards: u64,
    /// Radio broadcasts, counting each seed's initial one.
    pub broadcasts: u64,
    pub rounds: u32,
}

#[derive(Debug, Clone)]
pub struct FloodNetwork<'g> {
    graph: &'g Digraph,
    states: Vec<FloodState>,
    pending: Vec<Envelope>,
}

/// Labels the seeds and queues their first broadcast.
pub fn init_flood<'g>(g: &'g Digraph, seeds: &RegionSeedSet) -> Result<FloodNetwork<'g>, FloodError> {
    if seeds.is_empty() {
        return Err(FloodError::EmptySeedSet);
    }
    let mut net = FloodNetwork {
        graph: g,
        states: vec![FloodState::default(); g.vertex_count()],
        pending: Vec::new(),
    };
    for &s in seeds.as_slice() {
        let i = g.index_of(s).map_err(|_| FloodError::UnknownSeed(s))?;
        net.states[i] = FloodState::seed(s);
    }
    let mut first = Vec::new();
    for &s in seeds.as_slice() {
        let i = g.index_of(s).expect("checked above");
        net.broadcast(i, FloodMessage { region: s, hop: 1 }, &mut first);
    }
    first.sort_by_key(|e| (e.msg.region, e.from, e.to));
    net.pending = first;
    Ok(net)
}

impl FloodNetwork<'_> {
    pub fn states(&self) -> &[FloodState] {
        &self.states
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn broadcast(&mut self, from: usize, msg: FloodMessage, out: &mut Vec<Envelope>) {
        let links = self.graph.out_links(from);
        let st = &mut self.states[from];
        st.broadcasts += 1;
        st.tx_count += links.len() as u64;
        out.extend(links.iter().map(|l| Envelope { from, to: l.node, msg }));
    }

    fn deliver(&mut self, env: Envelope) -> FloodAction {
        let st = &mut self.states[env.to];
        st.rx_count += 1;
        let action = st.handle_message(env.msg);
        if action == FloodAction::Discard {
            st.discard_count += 1;
        }
        action
    }

    fn record(trace: &mut Option<&mut Vec<FloodTraceRecord>>, g: &Digraph, round: u32, env: Envelope, action: FloodAction) {
        if let Some(t) = trace.as_deref_mut() {
            t.push(FloodTraceRecord {
                round,
                sender: g.id(env.from),
                receiver: g.id(env.to),
                region: env.msg.region,
                hop: env.msg.hop,
                action,
            });
        }
    }

    /// Delivers messages until none remain.
    pub fn run(mut self, schedule: Schedule, mut trace: Option<&mut Vec<FloodTraceRecord>>) -> FloodOutcome {
        let g = self.graph;
        let mut rounds = 0;
        match schedule {
            Schedule::Synchronous => {
                while !self.pending.is_empty() {
                    rounds += 1;
                    let current = std::mem::take(&mut self.pending);
                    let mut next = Vec::new();
                    for env in current {
                        let action = self.deliver(env);
                        Self::record(&mut trace, g, rounds, env, action);
                        if action.rebroadcasts() {
                            let msg = FloodMessage {
                                region: env.msg.region,
                                hop: env.msg.hop + 1,
                            };
                            self.broadcast(env.to, msg, &mut next);
                        }
                    }
                    next.sort_by_key(|e| (e.msg.region, e.from, e.to));
                    self.pending = next;
                }
            }
            Schedule::Asynchronous { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pool = std::mem::take(&mut self.pending);
                while !pool.is_empty() {
                    rounds += 1;
                    let env = pool.swap_remove(rng.gen_range(0..pool.len()));
                    let action = self.deliver(env);
                    Self::record(&mut trace, g, rounds, env, action);
                    if action.rebroadcasts() {
                        let msg = FloodMessage {
                            region: env.msg.region,
                            hop: env.msg.hop + 1,
                        };
                        self.broadcast(env.to, msg, &mut pool);
                    }
                }
            }
        }
        let totals = FloodTotals {
            tx: self.states.iter().map(|s| s.tx_count).sum(),
            rx: self.states.iter().map(|s| s.rx_count).sum(),
            discards: self.states.iter().map(|s| s.discard_count).sum(),
            broadcasts: self.states.iter().map(|s| s.broadcasts).sum(),
            rounds,
        };
        let unreachable = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.distance.is_none())
            .map(|(i, _)| g.id(i))
            .collect();
        FloodOutcome {
            ids: g.ids().to_vec(),
            states: self.states,
            totals,
            unreachable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodOutcome {
    ids: Vec<NodeId>,
    pub states: Vec<FloodState>,
    pub totals: FloodTotals,
    /// Nodes no wavefront reached; they keep an empty label.
    pub unreachable: Vec<NodeId>,
}

impl FloodOutcome {
    pub fn state(&self, v: NodeId) -> Option<&FloodState> {
        self.ids.binary_search(&v).ok().map(|i| &self.states[i])
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Smallest region in the node's final label.
    pub fn canonical_region(&self, v: NodeId) -> Option<NodeId> {
        self.state(v).and_then(|s| s.regions.first().copied())
    }
}

/// Synchronous flood from all seeds to quiescence.
pub fn run_flood(g: &Digraph, seeds: &RegionSeedSet) -> Result<FloodOutcome, FloodError> {
    Ok(init_flood(g, seeds)?.run(Schedule::Synchronous, None))
}

/// Point-to-point message count of flooding every seed independently, each
/// node rebroadcasting a seed's wave once.
pub fn naive_flood_count(g: &Digraph, seeds: &RegionSeedSet) -> Result<u64, FloodError> {
    seeds.as_slice().iter().try_fold(0, |acc, &s| {
        let single = RegionSeedSet::new([s])?;
        Ok(acc + run_flood(g, &single)?.totals.tx)
    })
}

/// Fraction of the naive per-seed flood traffic that the shared flood avoided.
pub fn message_savings(
    totals: &FloodTotals,
    g: &Digraph,
    seeds: &RegionSeedSet,
) -> Result<f64, FloodError> {
    let naive = naive_flood_count(g, seeds)?;
    if naive == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - totals.tx as f64 / naive as f64)
}

pub fn write_trace_csv<W: Write>(records: &[FloodTraceRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "round,sender,receiver,region,f_m,action")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.round,
            r.sender,
            r.receiver,
            r.region,
            r.hop,
            r.action.as_str()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightMode;

    fn labelled(regions: &[u32], d: u32) -> FloodState {
        FloodState {
            regions: regions.iter().map(|&r| NodeId(r)).collect(),
            distance: Some(d),
            ..FloodState::default()
        }
    }

    fn msg(region: u32, hop: u32) -> FloodMessage {
        FloodMessage {
            region: NodeId(region),
            hop,
        }
    }

    fn star(leaves: u32) -> Digraph {
        let arcs = (1..=leaves).flat_map(|i| {
            [(NodeId(0), NodeId(i), 1.0), (NodeId(i), NodeId(0), 1.0)]
        });
        Digraph::from_arcs((0..=leaves).map(NodeId), arcs, WeightMode::Unit).unwrap()
    }

    #[test]
    fn condition_one_discards_longer_messages() {
        let mut s = labelled(&[0], 2);
        assert_eq!(s.handle_message(msg(1, 3)), FloodAction::Discard);
        assert_eq!(s, labelled(&[0], 2));
    }

    #[test]
    fn condition_two_merges_new_regions_only() {
        let mut s = labelled(&[0], 2);
        assert_eq!(s.handle_message(msg(1, 2)), FloodAction::MergeRebroadcast);
        assert_eq!(s, labelled(&[0, 1], 2));
        assert_eq!(s.handle_message(msg(1, 2)), FloodAction::Discard);
    }

    #[test]
    fn condition_three_replaces_the_label() {
        let mut s = labelled(&[0], 2);
        assert_eq!(s.handle_message(msg(1, 1)), FloodAction::ReplaceRebroadcast);
        assert_eq!(s, labelled(&[1], 1));
    }

    #[test]
    fn unlabelled_node_accepts_first_message() {
        let mut s = FloodState::default();
        assert_eq!(s.handle_message(msg(4, 7)), FloodAction::ReplaceRebroadcast);
        assert_eq!(s, labelled(&[4], 7));
    }

    #[test]
    fn empty_or_unknown_seed_sets_are_rejected() {
        let g = star(2);
        let bad = RegionSeedSet::new([NodeId(9)]).unwrap();
        assert_eq!(init_flood(&g, &bad).err(), Some(FloodError::UnknownSeed(NodeId(9))));
    }

    #[test]
    fn isolated_node_stays_unlabelled() {
        let g = Digraph::from_arcs([NodeId(0), NodeId(1)], [], WeightMode::Unit).unwrap();
        let out = run_flood(&g, &RegionSeedSet::new([NodeId(0)]).unwrap()).unwrap();
        assert_eq!(out.state(NodeId(0)).unwrap().distance, Some(0));
        let iso = out.state(NodeId(1)).unwrap();
        assert!(iso.regions.is_empty() && iso.distance.is_none());
        assert_eq!(out.unreachable, vec![NodeId(1)]);
    }

    #[test]
    fn seed_with_three_neighbors_queues_three_messages() {
        let g = star(3);
        let net = init_flood(&g, &RegionSeedSet::new([NodeId(0)]).unwrap()).unwrap();
        assert_eq!(net.pending_len(), 3);
        assert!(net.pending.iter().all(|e| e.msg.hop == 1));
        assert_eq!(net.states()[0].tx_count, 3);
    }

    #[test]
    fn all_seeds_means_no_label_changes() {
        let g = star(4);
        let seeds = RegionSeedSet::new(g.ids().iter().copied()).unwrap();
        let out = run_flood(&g, &seeds).unwrap();
        assert!(out.states.iter().all(|s| s.distance == Some(0) && s.regions.len() == 1));
        assert_eq!(out.totals.broadcasts, 5);
        assert_eq!(out.totals.discards, out.totals.rx);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let g = star(2);
        let mut trace = Vec::new();
        init_flood(&g, &RegionSeedSet::new([NodeId(1)]).unwrap())
            .unwrap()
            .run(Schedule::Synchronous, Some(&mut trace));
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("round,sender,receiver,region,f_m,action"));
        assert_eq!(lines.next(), Some("1,1,0,1,1,replace"));
        assert_eq!(lines.count(), trace.len() - 1);
    }
}
