//! Bit-level encoder and successive-cancellation decoder for a pruned tree.
//!
//! A leaf at depth `d` stands for `2^(n-d)` independent uses of its synthetic
//! channel and occupies a contiguous block of that many message positions.
//! Blocks are laid out depth-first, flat subtree before sharp subtree. At an
//! internal node the flat half `a` and sharp half `b` combine into `(a ^ b, b)`.

use rand::Rng;

use crate::channel::ErasureRate;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{CodeSpec, LeafClass, NodeId};

/// Output alphabet of a binary erasure channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TernarySymbol {
    Zero,
    One,
    Erased,
}

impl TernarySymbol {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            TernarySymbol::Zero
        } else {
            TernarySymbol::One
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            TernarySymbol::Zero => Some(0),
            TernarySymbol::One => Some(1),
            TernarySymbol::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        self == TernarySymbol::Erased
    }
}

/// Check-node rule: erased if either side is erased, otherwise XOR.
pub fn erasure_xor(a: TernarySymbol, b: TernarySymbol) -> TernarySymbol {
    match (a.bit(), b.bit()) {
        (Some(x), Some(y)) => TernarySymbol::from_bit(x ^ y),
        _ => TernarySymbol::Erased,
    }
}

/// Two unerased estimates of the same bit that disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict;

/// Variable-node rule: merge two estimates of the same bit.
pub fn resolve(a: TernarySymbol, b: TernarySymbol) -> Result<TernarySymbol, Conflict> {
    match (a, b) {
        (TernarySymbol::Erased, other) | (other, TernarySymbol::Erased) => Ok(other),
        (x, y) if x == y => Ok(x),
        _ => Err(Conflict),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ErasureFailure,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        self == Outcome::ErasureFailure
    }
}

/// Positions `start..start + copies` owned by one leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafBlock {
    pub leaf: NodeId,
    pub class: LeafClass,
    pub copies: usize,
    pub start: usize,
}

impl LeafBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.copies
    }
}

/// How the `N` message positions are split among the leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageLayout {
    blocks: Vec<LeafBlock>,
    info_positions: Vec<usize>,
    frozen_positions: Vec<usize>,
    len: usize,
}

impl MessageLayout {
    pub fn new<S: Scalar>(spec: &CodeSpec<S>) -> Result<Self> {
        let n = spec.n();
        if n >= usize::BITS - 1 {
            return Err(Error::Overflow(n));
        }
        let len = 1usize << n;
        let tree = spec.tree();
        let mut blocks = Vec::new();
        let mut info_positions = Vec::new();
        let mut frozen_positions = Vec::new();
        let mut start = 0;
        for leaf in tree.leaves() {
            let node = tree.node(leaf);
            let class = node.class().ok_or_else(|| {
                Error::MalformedTree("leaf without a class; select the information set first".into())
            })?;
            let copies = 1usize << (n - node.depth());
            match class {
                LeafClass::Information => info_positions.extend(start..start + copies),
                LeafClass::Frozen => frozen_positions.extend(start..start + copies),
            }
            blocks.push(LeafBlock {
                leaf,
                class,
                copies,
                start,
            });
            start += copies;
        }
        debug_assert_eq!(start, len);
        Ok(Self {
            blocks,
            info_positions,
            frozen_positions,
            len,
        })
    }

    pub fn blocks(&self) -> &[LeafBlock] {
        &self.blocks
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn frozen_positions(&self) -> &[usize] {
        &self.frozen_positions
    }

    /// Block length `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of information bits per block, `N * R`.
    pub fn dimension(&self) -> usize {
        self.info_positions.len()
    }

    /// Spreads `info` over the information positions; frozen positions are 0.
    pub fn place(&self, info: &[u8]) -> Result<Vec<u8>> {
        check_len(self.dimension(), info.len())?;
        let mut u = vec![0u8; self.len];
        for (&pos, &bit) in self.info_positions.iter().zip(info) {
            u[pos] = bit & 1;
        }
        Ok(u)
    }

    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| u[p]).collect()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

fn spec_len<S: Scalar>(spec: &CodeSpec<S>) -> Result<usize> {
    usize::try_from(spec.block_length()).map_err(|_| Error::Overflow(spec.n()))
}

/// Encodes a full length-`N` input block (frozen positions included).
pub fn encode<S: Scalar>(spec: &CodeSpec<S>, u: &[u8]) -> Result<Vec<u8>> {
    check_len(spec_len(spec)?, u.len())?;
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    encode_in_place(spec, &mut x);
    Ok(x)
}

/// In-place butterfly network; `block.len()` must equal `N`.
pub fn encode_in_place<S: Scalar>(spec: &CodeSpec<S>, block: &mut [u8]) {
    fn go<S: Scalar>(spec: &CodeSpec<S>, id: NodeId, block: &mut [u8]) {
        if let Some((flat, sharp)) = spec.tree().node(id).children() {
            let (a, b) = block.split_at_mut(block.len() / 2);
            go(spec, flat, a);
            go(spec, sharp, b);
            a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x ^= y);
        }
    }
    go(spec, NodeId::ROOT, block);
}

/// Sends each bit through `BEC(z)`.
pub fn transmit<R: Rng + ?Sized>(x: &[u8], z: &ErasureRate<f64>, rng: &mut R) -> Vec<TernarySymbol> {
    let mut y = vec![TernarySymbol::Erased; x.len()];
    transmit_into(x, z, rng, &mut y);
    y
}

pub fn transmit_into<R: Rng + ?Sized>(
    x: &[u8],
    z: &ErasureRate<f64>,
    rng: &mut R,
    y: &mut [TernarySymbol],
) {
    let p = z.to_f64();
    for (out, &bit) in y.iter_mut().zip(x) {
        // uniform in [0, 1): p = 0 never erases, p = 1 always does
        *out = if rng.random::<f64>() < p {
            TernarySymbol::Erased
        } else {
            TernarySymbol::from_bit(bit)
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub info_bits: Vec<u8>,
    pub outcome: Outcome,
}

/// Successive-cancellation erasure decoder with reusable buffers.
#[derive(Debug, Clone)]
pub struct ScDecoder<'a, S = f64> {
    spec: &'a CodeSpec<S>,
    layout: MessageLayout,
    scratch: Vec<TernarySymbol>,
    u_hat: Vec<u8>,
    x_hat: Vec<u8>,
}

impl<'a, S: Scalar> ScDecoder<'a, S> {
    pub fn new(spec: &'a CodeSpec<S>) -> Result<Self> {
        let layout = MessageLayout::new(spec)?;
        let len = layout.len();
        Ok(Self {
            spec,
            layout,
            scratch: vec![TernarySymbol::Erased; len],
            u_hat: vec![0; len],
            x_hat: vec![0; len],
        })
    }

    pub fn layout(&self) -> &MessageLayout {
        &self.layout
    }

    /// Decoded input block from the last call, frozen positions included.
    pub fn u_hat(&self) -> &[u8] {
        &self.u_hat
    }

    /// Re-encoded codeword estimate from the last call.
    pub fn x_hat(&self) -> &[u8] {
        &self.x_hat
    }

    pub fn decode(&mut self, y: &[TernarySymbol]) -> Result<Decoded> {
        let outcome = self.decode_with(y, |_, _, _| {})?;
        Ok(Decoded {
            info_bits: self.layout.extract(&self.u_hat),
            outcome,
        })
    }

    /// Decodes `y`, handing each leaf its effective observation block in
    /// decoding order.
    pub fn decode_with<F>(&mut self, y: &[TernarySymbol], mut on_leaf: F) -> Result<Outcome>
    where
        F: FnMut(NodeId, LeafClass, &[TernarySymbol]),
    {
        check_len(self.layout.len(), y.len())?;
        let mut failed = false;
        descend(
            self.spec,
            NodeId::ROOT,
            0,
            y,
            &mut self.scratch,
            &mut self.u_hat,
            &mut self.x_hat,
            &mut failed,
            &mut on_leaf,
        )?;
        Ok(if failed {
            Outcome::ErasureFailure
        } else {
            Outcome::Success
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn descend<S, F>(
    spec: &CodeSpec<S>,
    id: NodeId,
    base: usize,
    y: &[TernarySymbol],
    scratch: &mut [TernarySymbol],
    u: &mut [u8],
    x: &mut [u8],
    failed: &mut bool,
    on_leaf: &mut F,
) -> Result<()>
where
    S: Scalar,
    F: FnMut(NodeId, LeafClass, &[TernarySymbol]),
{
    let node = spec.tree().node(id);
    let Some((flat, sharp)) = node.children() else {
        let class = node.class().ok_or_else(|| Error::MalformedTree("unclassified leaf".into()))?;
        on_leaf(id, class, y);
        match class {
            LeafClass::Frozen => {
                u.fill(0);
                x.fill(0);
            }
            LeafClass::Information => {
                for ((ui, xi), &s) in u.iter_mut().zip(x.iter_mut()).zip(y) {
                    let bit = s.bit().unwrap_or_else(|| {
                        *failed = true;
                        0
                    });
                    *ui = bit;
                    *xi = bit;
                }
            }
        }
        return Ok(());
    };

    let half = y.len() / 2;
    let (y_top, y_bottom) = y.split_at(half);
    let (obs, rest) = scratch.split_at_mut(half);
    let (u_a, u_b) = u.split_at_mut(half);
    let (x_a, x_b) = x.split_at_mut(half);

    for ((o, &t), &b) in obs.iter_mut().zip(y_top).zip(y_bottom) {
        *o = erasure_xor(t, b);
    }
    descend(spec, flat, base, obs, rest, u_a, x_a, failed, on_leaf)?;

    for (i, o) in obs.iter_mut().enumerate() {
        let via_top = erasure_xor(y_top[i], TernarySymbol::from_bit(x_a[i]));
        *o = match resolve(y_bottom[i], via_top) {
            Ok(s) => s,
            // a zero substituted for an erased information bit upstream can
            // legitimately contradict the channel; trust the channel
            Err(Conflict) if *failed => y_bottom[i],
            Err(Conflict) => return Err(Error::Inconsistent { position: base + half + i }),
        };
    }
    descend(spec, sharp, base + half, obs, rest, u_b, x_b, failed, on_leaf)?;

    x_a.iter_mut().zip(x_b.iter()).for_each(|(a, b)| *a ^= b);
    Ok(())
}

/// One-shot convenience wrapper around [`ScDecoder`].
pub fn sc_decode<S: Scalar>(spec: &CodeSpec<S>, y: &[TernarySymbol]) -> Result<Decoded> {
    ScDecoder::new(spec)?.decode(y)
}
