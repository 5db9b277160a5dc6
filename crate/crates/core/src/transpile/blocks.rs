//! Greedy consolidation of adjacent gates into two-qubit blocks.

use super::circuit::{op_on_pair, Circuit, GateOp};
use crate::linalg::Mat4;

/// A run of ops confined to one qubit pair, multiplied out.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub wires: [usize; 2],
    pub matrix: Mat4,
    /// Indices of the absorbed ops in the source circuit.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Single(GateOp),
    Block(Block),
}

/// Walks the circuit once. A two-qubit op joins the open block of its
/// pair if that block is still the latest one on both wires, otherwise it
/// opens a new block; a single-qubit op joins the latest block on its wire
/// and stays on its own before the first one.
///
/// Every absorbed op only has ops of the same block before it on its
/// wires, so evaluating each block at the position of its first op
/// preserves the circuit.
pub fn consolidate_blocks(c: &Circuit) -> Vec<Item> {
    let mut items: Vec<Item> = Vec::new();
    let mut current: Vec<Option<usize>> = vec![None; c.n_qubits];
    for (i, op) in c.ops.iter().enumerate() {
        match *op.qubits.as_slice() {
            [q] => match current[q] {
                Some(b) => absorb(&mut items[b], op, i),
                None => items.push(Item::Single(op.clone())),
            },
            [a, b] => {
                let shared = match (current[a], current[b]) {
                    (Some(x), Some(y)) if x == y => Some(x),
                    _ => None,
                };
                match shared {
                    Some(idx) => absorb(&mut items[idx], op, i),
                    None => {
                        items.push(Item::Block(Block {
                            wires: [a, b],
                            matrix: op_on_pair(op, [a, b]),
                            members: vec![i],
                        }));
                        current[a] = Some(items.len() - 1);
                        current[b] = Some(items.len() - 1);
                    }
                }
            }
            _ => unreachable!("ops act on one or two qubits"),
        }
    }
    items
}

fn absorb(item: &mut Item, op: &GateOp, index: usize) {
    if let Item::Block(b) = item {
        b.matrix = op_on_pair(op, b.wires) * b.matrix;
        b.members.push(index);
    }
}
