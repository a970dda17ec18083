//! Internal closure engines.
//!
//! Both engines generate the subalgebra of a finite power `A^L` from a list
//! of generator vectors, recording for every element how it was first
//! produced so a witness term over the generators can be read back off.
//!
//! * [`StagedStore`] handles arbitrary universes. Operations are applied in
//!   curried stages: after consuming `j` arguments a partial application is
//!   represented by the equivalence class of its residual table, and the
//!   per-stage intermediate vectors are deduplicated. For operations whose
//!   tables are far from injective (the interesting high-arity ones) this
//!   collapses the naive `|S|^arity` tuple enumeration to something close
//!   to linear in the output.
//! * [`BitStore`] packs two-element universes into machine words and
//!   applies operations as mask expressions, enumerating argument tuples
//!   directly. Symmetric binary tables are only enumerated once per
//!   unordered pair.
//!
//! Generation is budgeted (stored entries and produced candidates) and can
//! be observed element by element, so callers may stop a closure early once
//! they have seen enough.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::sync::Arc;

use crate::algebra::{Algebra, FiniteAlgebra, Term};
use crate::{Error, Limits, Result};

/// FxHash-style hasher; the dedup maps are the hot path of every closure.
#[derive(Default)]
pub(crate) struct FxHasher {
    hash: u64,
}

const SEED: u64 = 0x51_7c_c1_b7_27_22_0a_95;

impl FxHasher {
    #[inline]
    fn mix(&mut self, word: u64) {
        self.hash = (self.hash.rotate_left(5) ^ word).wrapping_mul(SEED);
    }
}

impl Hasher for FxHasher {
    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        let mut chunks = bytes.chunks_exact(8);
        for c in &mut chunks {
            self.mix(u64::from_le_bytes(c.try_into().unwrap()));
        }
        let rem = chunks.remainder();
        if !rem.is_empty() {
            let mut tail = 0u64;
            for (i, &b) in rem.iter().enumerate() {
                tail |= (b as u64) << (8 * i);
            }
            self.mix(tail);
        }
    }

    #[inline]
    fn write_u32(&mut self, n: u32) {
        self.mix(n as u64);
    }

    #[inline]
    fn write_u64(&mut self, n: u64) {
        self.mix(n);
    }

    #[inline]
    fn write_usize(&mut self, n: usize) {
        self.mix(n as u64);
    }

    #[inline]
    fn finish(&self) -> u64 {
        self.hash
    }
}

pub(crate) type FxBuild = BuildHasherDefault<FxHasher>;
pub(crate) type FxMap<K, V> = HashMap<K, V, FxBuild>;

/// How an element of a closure was first produced.
#[derive(Clone, Debug)]
pub(crate) enum Prov {
    Gen(usize),
    Op { op: usize, args: Vec<u32> },
}

/// Why generation ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Completion {
    /// Fixed point reached: the stored set is the full subalgebra.
    Complete,
    /// The observer asked to stop.
    Stopped,
    /// An entry or work budget ran out.
    Budget,
}

/// The subalgebra of `A^coords` generated by a list of vectors, with
/// provenance. The first elements are the generators in order
/// (deduplicated). May be a prefix of the full subalgebra when generation
/// was stopped or ran out of budget.
pub(crate) struct Subpower {
    coords: usize,
    backend: Backend,
    prov: Vec<Prov>,
    gen_elem: Vec<u32>,
}

enum Backend {
    Staged(StagedStore),
    Bits(BitStore),
}

/// Observer invoked on every new element; returning `true` stops the
/// closure.
pub(crate) type OnElement<'a> = &'a mut dyn FnMut(usize, &[u32]) -> bool;

impl Subpower {
    /// Closes `gens` under all operations of `alg`, applied pointwise.
    /// Fails when the result does not fit the budget.
    pub fn generate(
        alg: &FiniteAlgebra,
        coords: usize,
        gens: &[Vec<u32>],
        limits: &Limits,
    ) -> Result<Subpower> {
        let mut nothing = |_: usize, _: &[u32]| false;
        let (sub, completion, budget) = Self::generate_streamed(alg, coords, gens, limits, &mut nothing)?;
        match completion {
            Completion::Complete => Ok(sub),
            Completion::Budget => Err(budget.exceeded_error()),
            Completion::Stopped => unreachable!("no observer stop was requested"),
        }
    }

    /// Streaming generation: `on_new` sees every new element (generators
    /// included) in discovery order and may stop the closure. Budget
    /// exhaustion is reported through the completion value, not an error.
    pub fn generate_streamed(
        alg: &FiniteAlgebra,
        coords: usize,
        gens: &[Vec<u32>],
        limits: &Limits,
        on_new: OnElement<'_>,
    ) -> Result<(Subpower, Completion, EntryBudget)> {
        assert!(coords > 0, "empty coordinate set");
        let size = alg.size();
        for g in gens {
            assert_eq!(g.len(), coords);
            debug_assert!(g.iter().all(|&v| (v as usize) < size));
        }
        let mut sub = if size == 2 {
            Subpower {
                coords,
                backend: Backend::Bits(BitStore::new(alg, coords)),
                prov: Vec::new(),
                gen_elem: Vec::new(),
            }
        } else {
            Subpower {
                coords,
                backend: Backend::Staged(StagedStore::new(alg, coords)),
                prov: Vec::new(),
                gen_elem: Vec::new(),
            }
        };
        let mut ctx = GenCtx {
            budget: EntryBudget::new(limits),
            on_new,
            completion: None,
        };
        for (g, vec) in gens.iter().enumerate() {
            let idx = match &mut sub.backend {
                Backend::Staged(s) => s.insert(vec, &mut sub.prov, &mut ctx, || Prov::Gen(g)),
                Backend::Bits(b) => b.insert_unpacked(vec, &mut sub.prov, &mut ctx, || Prov::Gen(g)),
            };
            sub.gen_elem.push(idx as u32);
            if ctx.completion.is_some() {
                break;
            }
        }
        while ctx.completion.is_none() {
            let progressed = match &mut sub.backend {
                Backend::Staged(s) => s.pass(&mut sub.prov, &mut ctx),
                Backend::Bits(b) => b.pass(&mut sub.prov, &mut ctx),
            };
            if !progressed {
                break;
            }
        }
        let completion = ctx.completion.unwrap_or(Completion::Complete);
        let budget = ctx.budget;
        Ok((sub, completion, budget))
    }

    pub fn len(&self) -> usize {
        self.prov.len()
    }

    pub fn index_of(&self, vec: &[u32]) -> Option<usize> {
        assert_eq!(vec.len(), self.coords);
        match &self.backend {
            Backend::Staged(s) => s.index.get(vec).map(|&i| i as usize),
            Backend::Bits(b) => {
                let packed = b.pack(vec);
                b.index.get(packed.as_slice()).map(|&i| i as usize)
            }
        }
    }

    pub fn element(&self, i: usize) -> Vec<u32> {
        match &self.backend {
            Backend::Staged(s) => s.elems[i].to_vec(),
            Backend::Bits(b) => b.unpack(&b.elems[i]),
        }
    }

    /// Witness term over the generators: generator `g` appears as `Var(g)`.
    pub fn witness(&self, i: usize) -> Term {
        let mut memo: FxMap<u32, Term> = FxMap::default();
        self.witness_memo(i as u32, &mut memo)
    }

    fn witness_memo(&self, i: u32, memo: &mut FxMap<u32, Term>) -> Term {
        if let Some(hit) = memo.get(&i) {
            return hit.clone();
        }
        let term = match &self.prov[i as usize] {
            Prov::Gen(g) => Term::var(*g),
            Prov::Op { op, args } => {
                let children = args.iter().map(|&a| self.witness_memo(a, memo)).collect();
                Term::app(*op, children)
            }
        };
        memo.insert(i, term.clone());
        term
    }
}

/// Entry and work counters checked against the caps.
pub(crate) struct EntryBudget {
    entries_used: usize,
    entries_cap: usize,
    work_used: usize,
    work_cap: usize,
}

impl EntryBudget {
    fn new(limits: &Limits) -> Self {
        EntryBudget {
            entries_used: 0,
            entries_cap: limits.max_entries,
            work_used: 0,
            work_cap: limits.max_work,
        }
    }

    #[inline]
    fn charge_entries(&mut self, entries: usize) -> bool {
        self.entries_used = self.entries_used.saturating_add(entries);
        self.entries_used <= self.entries_cap
    }

    #[inline]
    fn charge_work(&mut self, work: usize) -> bool {
        self.work_used = self.work_used.saturating_add(work);
        self.work_used <= self.work_cap
    }

    pub fn exceeded_error(&self) -> Error {
        if self.entries_used > self.entries_cap {
            Error::ResourceExceeded {
                needed: self.entries_used as u128,
                cap: self.entries_cap,
            }
        } else {
            Error::ResourceExceeded {
                needed: self.work_used as u128,
                cap: self.work_cap,
            }
        }
    }
}

struct GenCtx<'a> {
    budget: EntryBudget,
    on_new: OnElement<'a>,
    completion: Option<Completion>,
}

impl GenCtx<'_> {
    #[inline]
    fn work(&mut self, amount: usize) -> bool {
        if self.completion.is_some() {
            return false;
        }
        if !self.budget.charge_work(amount) {
            self.completion = Some(Completion::Budget);
            return false;
        }
        true
    }
}

// ---------------------------------------------------------------------------
// staged engine
// ---------------------------------------------------------------------------

struct StagedStore {
    size: usize,
    coords: usize,
    elems: Vec<Arc<[u32]>>,
    index: FxMap<Arc<[u32]>, u32>,
    ops: Vec<StagedOp>,
}

struct StagedOp {
    op: usize,
    arity: usize,
    /// `delta[j]` maps `(class at depth j) * size + argument` to the class
    /// at depth `j+1`; the last level produces universe values. Classes at
    /// depth `j` are the distinct residual tables of prefixes of length `j`.
    delta: Vec<Vec<u32>>,
    /// Deduplicated intermediate vectors after consuming 1..arity-1
    /// arguments.
    layers: Vec<Layer>,
    /// Processed rectangle of the edge producing each layer; index 0 is the
    /// `S -> layer 0` edge, the final entry is the value-producing edge.
    done: Vec<(usize, usize)>,
    emitted_const: bool,
}

#[derive(Default)]
struct Layer {
    elems: Vec<Arc<[u32]>>,
    index: FxMap<Arc<[u32]>, u32>,
    /// (element of the previous layer, element of S) that first produced it.
    parent: Vec<(u32, u32)>,
}

impl StagedStore {
    fn new(alg: &FiniteAlgebra, coords: usize) -> Self {
        let size = alg.size();
        let ops = alg
            .ops()
            .iter()
            .enumerate()
            .map(|(op, operation)| {
                let arity = operation.arity();
                let delta = build_deltas(operation.table(), size, arity);
                let layer_count = arity.saturating_sub(1);
                StagedOp {
                    op,
                    arity,
                    delta,
                    layers: (0..layer_count).map(|_| Layer::default()).collect(),
                    done: vec![(0, 0); arity.max(1)],
                    emitted_const: false,
                }
            })
            .collect();
        StagedStore {
            size,
            coords,
            elems: Vec::new(),
            index: FxMap::default(),
            ops,
        }
    }

    fn insert(
        &mut self,
        vec: &[u32],
        prov: &mut Vec<Prov>,
        ctx: &mut GenCtx<'_>,
        make_prov: impl FnOnce() -> Prov,
    ) -> usize {
        if let Some(&i) = self.index.get(vec) {
            return i as usize;
        }
        if !ctx.budget.charge_entries(self.coords) {
            ctx.completion = Some(Completion::Budget);
            return usize::MAX;
        }
        let arc: Arc<[u32]> = vec.into();
        let i = self.elems.len() as u32;
        self.elems.push(arc.clone());
        self.index.insert(arc, i);
        prov.push(make_prov());
        if (ctx.on_new)(i as usize, vec) {
            ctx.completion = Some(Completion::Stopped);
        }
        i as usize
    }

    fn pass(&mut self, prov: &mut Vec<Prov>, ctx: &mut GenCtx<'_>) -> bool {
        let mut progressed = false;
        for op_idx in 0..self.ops.len() {
            if ctx.completion.is_some() {
                return progressed;
            }
            progressed |= self.op_pass(op_idx, prov, ctx);
        }
        progressed
    }

    fn op_pass(&mut self, op_idx: usize, prov: &mut Vec<Prov>, ctx: &mut GenCtx<'_>) -> bool {
        let size = self.size;
        let coords = self.coords;
        let s_len = self.elems.len();
        let mut progressed = false;
        let mut op = std::mem::replace(
            &mut self.ops[op_idx],
            StagedOp {
                op: 0,
                arity: 0,
                delta: Vec::new(),
                layers: Vec::new(),
                done: Vec::new(),
                emitted_const: false,
            },
        );

        if op.arity == 0 {
            if !op.emitted_const {
                op.emitted_const = true;
                let value = op.delta[0][0];
                let vec = vec![value; coords];
                let before = self.elems.len();
                let idx = self.insert(&vec, prov, ctx, || Prov::Op {
                    op: op.op,
                    args: Vec::new(),
                });
                progressed |= idx == before;
            }
            self.ops[op_idx] = op;
            return progressed;
        }

        // Edge 0 ingests S into the first layer (or directly into values for
        // unary operations). Edge j (j >= 1) combines layer j-1 with S.
        let edges = op.arity;
        let mut merged = vec![0u32; coords];
        'edges: for edge in 0..edges {
            let delta = &op.delta[edge];
            let (d_done, s_done) = op.done[edge];
            let (d_len, is_first) = if edge == 0 {
                (1, true)
            } else {
                (op.layers[edge - 1].elems.len(), false)
            };
            let is_final = edge == edges - 1;
            if d_len == d_done && s_len == s_done {
                continue;
            }
            for d in 0..d_len {
                let s_from = if d < d_done { s_done } else { 0 };
                for s in s_from..s_len {
                    if !ctx.work(1) {
                        break 'edges;
                    }
                    let s_vec = self.elems[s].clone();
                    if is_first {
                        for (m, &sv) in merged.iter_mut().zip(s_vec.iter()) {
                            *m = delta[sv as usize];
                        }
                    } else {
                        let d_vec = op.layers[edge - 1].elems[d].clone();
                        for ((m, &dv), &sv) in
                            merged.iter_mut().zip(d_vec.iter()).zip(s_vec.iter())
                        {
                            *m = delta[dv as usize * size + sv as usize];
                        }
                    }
                    if is_final {
                        let before = self.elems.len();
                        let idx = self.insert(&merged, prov, ctx, || {
                            let mut args = Vec::with_capacity(op.arity);
                            if !is_first {
                                op.collect_args(edge - 1, d as u32, &mut args);
                            }
                            args.push(s as u32);
                            Prov::Op { op: op.op, args }
                        });
                        progressed |= idx == before;
                        if ctx.completion.is_some() {
                            break 'edges;
                        }
                    } else {
                        let layer = &mut op.layers[edge];
                        if !layer.index.contains_key(merged.as_slice()) {
                            if !ctx.budget.charge_entries(coords) {
                                ctx.completion = Some(Completion::Budget);
                                break 'edges;
                            }
                            let arc: Arc<[u32]> = merged.as_slice().into();
                            let id = layer.elems.len() as u32;
                            layer.elems.push(arc.clone());
                            layer.index.insert(arc, id);
                            layer.parent.push((d as u32, s as u32));
                            progressed = true;
                        }
                    }
                }
            }
            op.done[edge] = (d_len, s_len);
        }

        self.ops[op_idx] = op;
        progressed
    }
}

impl StagedOp {
    /// Collects the argument chain ending at `layers[layer][elem]`, in
    /// argument order.
    fn collect_args(&self, layer: usize, elem: u32, out: &mut Vec<u32>) {
        let (prev, s) = self.layers[layer].parent[elem as usize];
        if layer > 0 {
            self.collect_args(layer - 1, prev, out);
        }
        out.push(s);
    }
}

/// Builds the per-depth class transition tables of an operation: classes at
/// depth `j` are prefixes of length `j` with equal residual tables, and the
/// final level maps directly to values. For arity 0 returns a single-level
/// table holding the constant.
fn build_deltas(table: &[u32], size: usize, arity: usize) -> Vec<Vec<u32>> {
    if arity == 0 {
        return vec![vec![table[0]]];
    }
    let mut deltas = Vec::with_capacity(arity);
    let mut reps: Vec<usize> = vec![0];
    let mut chunk = table.len();
    for depth in 0..arity {
        let next_chunk = chunk / size;
        let mut delta = vec![0u32; reps.len() * size];
        if depth == arity - 1 {
            for (c, &start) in reps.iter().enumerate() {
                for a in 0..size {
                    delta[c * size + a] = table[start + a];
                }
            }
        } else {
            let mut dedup: FxMap<&[u32], u32> = FxMap::default();
            let mut next_reps = Vec::new();
            for (c, &start) in reps.iter().enumerate() {
                for a in 0..size {
                    let begin = start + a * next_chunk;
                    let slice = &table[begin..begin + next_chunk];
                    let id = *dedup.entry(slice).or_insert_with(|| {
                        next_reps.push(begin);
                        (next_reps.len() - 1) as u32
                    });
                    delta[c * size + a] = id;
                }
            }
            reps = next_reps;
        }
        deltas.push(delta);
        chunk = next_chunk;
    }
    deltas
}

// ---------------------------------------------------------------------------
// bit-packed engine for two-element universes
// ---------------------------------------------------------------------------

struct BitStore {
    coords: usize,
    words: usize,
    tail_mask: u64,
    elems: Vec<Arc<[u64]>>,
    index: FxMap<Arc<[u64]>, u32>,
    ops: Vec<BitOp>,
    next_to_process: usize,
    emitted_consts: bool,
}

struct BitOp {
    op: usize,
    arity: usize,
    /// Argument patterns for which the chosen polarity holds; the leftmost
    /// argument is the most significant bit, matching the row-major table.
    minterms: Vec<u8>,
    negate: bool,
    commutative: bool,
}

impl BitStore {
    fn new(alg: &FiniteAlgebra, coords: usize) -> Self {
        let words = coords.div_ceil(64);
        let tail_mask = if coords.is_multiple_of(64) {
            !0u64
        } else {
            (1u64 << (coords % 64)) - 1
        };
        let ops = alg
            .ops()
            .iter()
            .enumerate()
            .map(|(op, operation)| {
                let table = operation.table();
                let ones: Vec<u8> = (0..table.len())
                    .filter(|&e| table[e] == 1)
                    .map(|e| e as u8)
                    .collect();
                let (minterms, negate) = if ones.len() * 2 <= table.len() {
                    (ones, false)
                } else {
                    (
                        (0..table.len())
                            .filter(|&e| table[e] == 0)
                            .map(|e| e as u8)
                            .collect(),
                        true,
                    )
                };
                let commutative = operation.arity() == 2
                    && (0..2usize)
                        .all(|a| (0..2usize).all(|b| table[a * 2 + b] == table[b * 2 + a]));
                BitOp {
                    op,
                    arity: operation.arity(),
                    minterms,
                    negate,
                    commutative,
                }
            })
            .collect();
        BitStore {
            coords,
            words,
            tail_mask,
            elems: Vec::new(),
            index: FxMap::default(),
            ops,
            next_to_process: 0,
            emitted_consts: false,
        }
    }

    fn pack(&self, vec: &[u32]) -> Vec<u64> {
        let mut packed = vec![0u64; self.words];
        for (c, &v) in vec.iter().enumerate() {
            if v != 0 {
                packed[c / 64] |= 1u64 << (c % 64);
            }
        }
        packed
    }

    fn unpack(&self, words: &[u64]) -> Vec<u32> {
        (0..self.coords)
            .map(|c| ((words[c / 64] >> (c % 64)) & 1) as u32)
            .collect()
    }

    fn insert_unpacked(
        &mut self,
        vec: &[u32],
        prov: &mut Vec<Prov>,
        ctx: &mut GenCtx<'_>,
        make_prov: impl FnOnce() -> Prov,
    ) -> usize {
        let packed = self.pack(vec);
        self.insert_packed(&packed, prov, ctx, make_prov)
    }

    fn insert_packed(
        &mut self,
        packed: &[u64],
        prov: &mut Vec<Prov>,
        ctx: &mut GenCtx<'_>,
        make_prov: impl FnOnce() -> Prov,
    ) -> usize {
        if let Some(&i) = self.index.get(packed) {
            return i as usize;
        }
        if !ctx.budget.charge_entries(self.coords) {
            ctx.completion = Some(Completion::Budget);
            return usize::MAX;
        }
        let arc: Arc<[u64]> = packed.into();
        let i = self.elems.len() as u32;
        self.elems.push(arc.clone());
        self.index.insert(arc, i);
        prov.push(make_prov());
        if (ctx.on_new)(i as usize, &self.unpack(packed)) {
            ctx.completion = Some(Completion::Stopped);
        }
        i as usize
    }

    /// Applies an operation to elements given by index.
    fn apply_at(&self, o: usize, arg_idx: &[usize], out: &mut [u64]) {
        let args: Vec<&[u64]> = arg_idx.iter().map(|&i| &self.elems[i][..]).collect();
        self.apply(o, &args, out);
    }

    fn apply(&self, o: usize, args: &[&[u64]], out: &mut [u64]) {
        let bop = &self.ops[o];
        let arity = bop.arity;
        for (w, slot) in out.iter_mut().enumerate() {
            let mut acc = 0u64;
            for &e in &bop.minterms {
                let mut t = !0u64;
                for (j, a) in args.iter().enumerate() {
                    let bit = (e >> (arity - 1 - j)) & 1;
                    t &= if bit == 1 { a[w] } else { !a[w] };
                }
                acc |= t;
            }
            if bop.negate {
                acc = !acc;
            }
            *slot = acc;
        }
        if let Some(last) = out.last_mut() {
            *last &= self.tail_mask;
        }
    }

    fn pass(&mut self, prov: &mut Vec<Prov>, ctx: &mut GenCtx<'_>) -> bool {
        let mut progressed = false;
        if !self.emitted_consts {
            self.emitted_consts = true;
            for o in 0..self.ops.len() {
                if self.ops[o].arity == 0 {
                    let one = if self.ops[o].negate {
                        self.ops[o].minterms.is_empty()
                    } else {
                        !self.ops[o].minterms.is_empty()
                    };
                    let mut words = vec![0u64; self.words];
                    if one {
                        words.fill(!0u64);
                        *words.last_mut().unwrap() &= self.tail_mask;
                    }
                    let op = self.ops[o].op;
                    let before = self.elems.len();
                    let idx = self.insert_packed(&words, prov, ctx, || Prov::Op {
                        op,
                        args: Vec::new(),
                    });
                    progressed |= idx == before;
                    if ctx.completion.is_some() {
                        return progressed;
                    }
                }
            }
        }
        // worklist over elements: all tuples whose maximum index is z
        let mut out = vec![0u64; self.words];
        while self.next_to_process < self.elems.len() {
            if ctx.completion.is_some() {
                return progressed;
            }
            let z = self.next_to_process;
            self.next_to_process += 1;
            progressed = true;
            for o in 0..self.ops.len() {
                if ctx.completion.is_some() {
                    return progressed;
                }
                let arity = self.ops[o].arity;
                match arity {
                    0 => {}
                    1 => {
                        if !ctx.work(1) {
                            return progressed;
                        }
                        self.apply_at(o, &[z], &mut out);
                        self.commit(o, &[z as u32], &out, prov, ctx);
                    }
                    2 => {
                        let commutative = self.ops[o].commutative;
                        for i in 0..=z {
                            if !ctx.work(if commutative || i == z { 1 } else { 2 }) {
                                return progressed;
                            }
                            self.apply_at(o, &[i, z], &mut out);
                            self.commit(o, &[i as u32, z as u32], &out, prov, ctx);
                            if ctx.completion.is_some() {
                                return progressed;
                            }
                            if !commutative && i < z {
                                self.apply_at(o, &[z, i], &mut out);
                                self.commit(o, &[z as u32, i as u32], &out, prov, ctx);
                                if ctx.completion.is_some() {
                                    return progressed;
                                }
                            }
                        }
                    }
                    _ => {
                        let mut tuple = vec![0usize; arity];
                        self.tuples_with_max(o, arity, z, &mut tuple, 0, false, prov, ctx);
                    }
                }
            }
        }
        progressed
    }

    #[allow(clippy::too_many_arguments)]
    fn tuples_with_max(
        &mut self,
        o: usize,
        arity: usize,
        z: usize,
        tuple: &mut Vec<usize>,
        pos: usize,
        seen_z: bool,
        prov: &mut Vec<Prov>,
        ctx: &mut GenCtx<'_>,
    ) {
        if ctx.completion.is_some() {
            return;
        }
        if pos == arity {
            if !seen_z || !ctx.work(1) {
                return;
            }
            let mut result = vec![0u64; self.words];
            self.apply_at(o, tuple, &mut result);
            let arg_ids: Vec<u32> = tuple.iter().map(|&i| i as u32).collect();
            self.commit(o, &arg_ids, &result, prov, ctx);
            return;
        }
        for v in 0..=z {
            if !seen_z && pos == arity - 1 && v != z {
                continue;
            }
            tuple[pos] = v;
            self.tuples_with_max(o, arity, z, tuple, pos + 1, seen_z || v == z, prov, ctx);
            if ctx.completion.is_some() {
                return;
            }
        }
    }

    fn commit(
        &mut self,
        o: usize,
        args: &[u32],
        out: &[u64],
        prov: &mut Vec<Prov>,
        ctx: &mut GenCtx<'_>,
    ) {
        if self.index.contains_key(out) {
            return;
        }
        let op = self.ops[o].op;
        let args = args.to_vec();
        self.insert_packed(out, prov, ctx, move || Prov::Op { op, args });
    }
}
