//! Recorded latent computations and their reverse-mode gradients.
//!
//! A [`Graph`] is an append-only tape of latent vectors. Nodes are leaves
//! (tracked inputs or constants), transition steps through a [`DynamicsNet`],
//! or detach markers that pass the value through but stop gradient flow.
//! Scalar loss terms are weighted squared distances between two nodes; the
//! graph's loss is their sum.

use super::{latent_sq_dist, DynamicsNet, LatentState};
use crate::segments::{ActionIncrement, ActionSegment};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input {
        tracked: bool,
    },
    Detach,
    Step {
        parent: NodeId,
        action: ActionIncrement,
        hidden: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

#[derive(Debug, Clone, Copy)]
struct LossTerm {
    a: NodeId,
    b: NodeId,
    weight: f64,
}

#[derive(Debug, Clone)]
pub struct Graph<'n> {
    net: &'n DynamicsNet,
    nodes: Vec<Node>,
    losses: Vec<LossTerm>,
}

/// Gradient of the graph loss w.r.t. network parameters and tracked inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    inputs: Vec<(NodeId, Vec<f64>)>,
}

impl Gradients {
    pub fn input(&self, id: NodeId) -> Option<&[f64]> {
        self.inputs
            .iter()
            .find(|(n, _)| *n == id)
            .map(|(_, g)| g.as_slice())
    }
}

impl<'n> Graph<'n> {
    pub fn new(net: &'n DynamicsNet) -> Self {
        Graph {
            net,
            nodes: Vec::new(),
            losses: Vec::new(),
        }
    }

    pub fn net(&self) -> &DynamicsNet {
        self.net
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Leaf whose gradient is reported by [`Graph::backward`].
    pub fn input(&mut self, z: &LatentState) -> NodeId {
        self.push(z.0.clone(), Op::Input { tracked: true })
    }

    pub fn constant(&mut self, z: &LatentState) -> NodeId {
        self.push(z.0.clone(), Op::Input { tracked: false })
    }

    /// Same value as `node`; no gradient flows back through it.
    pub fn detach(&mut self, node: NodeId) -> NodeId {
        let value = self.nodes[node.0].value.clone();
        self.push(value, Op::Detach)
    }

    pub fn step(&mut self, node: NodeId, action: &ActionIncrement) -> NodeId {
        let (value, hidden) = self.net.forward(&self.nodes[node.0].value, action);
        self.push(
            value,
            Op::Step {
                parent: node,
                action: *action,
                hidden,
            },
        )
    }

    /// Free-running rollout of `u` from `node`; returns the endpoint.
    pub fn rollout(&mut self, node: NodeId, u: &ActionSegment) -> NodeId {
        u.iter().fold(node, |n, a| self.step(n, a))
    }

    pub fn value(&self, node: NodeId) -> &[f64] {
        &self.nodes[node.0].value
    }

    pub fn latent(&self, node: NodeId) -> LatentState {
        LatentState(self.value(node).to_vec())
    }

    /// Adds `weight · ‖a − b‖²` to the loss and returns the unweighted distance.
    pub fn add_sq_dist(&mut self, a: NodeId, b: NodeId, weight: f64) -> f64 {
        self.losses.push(LossTerm { a, b, weight });
        latent_sq_dist(self.value(a), self.value(b))
    }

    pub fn loss(&self) -> f64 {
        self.losses
            .iter()
            .map(|t| t.weight * latent_sq_dist(self.value(t.a), self.value(t.b)))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exact gradient of [`Graph::loss`].
    pub fn backward(&self) -> Result<Gradients> {
        if self
            .nodes
            .iter()
            .any(|n| n.value.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("graph intermediate"));
        }
        let net = self.net;
        let (d, h, n_in) = (net.latent_dim(), net.hidden(), net.input_dim());
        let (w1r, b1r, w2r, b2r) = net.offsets();
        let params = net.params();
        let (w1, w2) = (&params[w1r.clone()], &params[w2r.clone()]);

        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        let accumulate =
            |adj: &mut Vec<Option<Vec<f64>>>, id: NodeId, g: &[f64]| match &mut adj[id.0] {
                Some(acc) => acc.iter_mut().zip(g).for_each(|(x, y)| *x += y),
                slot @ None => *slot = Some(g.to_vec()),
            };
        for t in &self.losses {
            let (va, vb) = (self.value(t.a), self.value(t.b));
            let ga: Vec<f64> = va
                .iter()
                .zip(vb)
                .map(|(x, y)| 2.0 * t.weight * (x - y))
                .collect();
            let gb: Vec<f64> = ga.iter().map(|g| -g).collect();
            accumulate(&mut adj, t.a, &ga);
            accumulate(&mut adj, t.b, &gb);
        }

        let mut grad = vec![0.0; params.len()];
        let mut inputs = Vec::new();
        let mut delta = vec![0.0; h];
        for idx in (0..self.nodes.len()).rev() {
            let Some(g) = adj[idx].take() else {
                // Tracked inputs cut off by a detach still report a (zero) gradient.
                if let Op::Input { tracked: true } = self.nodes[idx].op {
                    inputs.push((NodeId(idx), vec![0.0; d]));
                }
                continue;
            };
            match &self.nodes[idx].op {
                Op::Input { tracked } => {
                    if *tracked {
                        inputs.push((NodeId(idx), g));
                    }
                }
                Op::Detach => {}
                Op::Step {
                    parent,
                    action,
                    hidden,
                } => {
                    let z = &self.nodes[parent.0].value;
                    let act = action.as_array();
                    // out = z + W2 h + b2
                    for i in 0..d {
                        grad[b2r.start + i] += g[i];
                        let row = w2r.start + i * h;
                        for j in 0..h {
                            grad[row + j] += g[i] * hidden[j];
                        }
                    }
                    for j in 0..h {
                        let mut back = 0.0;
                        for i in 0..d {
                            back += w2[i * h + j] * g[i];
                        }
                        delta[j] = back * (1.0 - hidden[j] * hidden[j]);
                    }
                    let mut gz = g;
                    for j in 0..h {
                        let dj = delta[j];
                        if dj == 0.0 {
                            continue;
                        }
                        grad[b1r.start + j] += dj;
                        let row = w1r.start + j * n_in;
                        for i in 0..d {
                            grad[row + i] += dj * z[i];
                            gz[i] += w1[j * n_in + i] * dj;
                        }
                        for k in 0..3 {
                            grad[row + d + k] += dj * act[k];
                        }
                    }
                    accumulate(&mut adj, *parent, &gz);
                }
            }
        }
        inputs.reverse();
        Ok(Gradients {
            params: grad,
            inputs,
        })
    }
}
