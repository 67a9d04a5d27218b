//! The programmable two-level machine: `M` element slots of internal memory,
//! an external memory of `B`-element blocks, explicit `load` / `allocate` /
//! `evict` instructions, and stencil evaluation gated on residency.
//!
//! Block ids are split by layer: input blocks are `0 .. input_blocks`, output
//! blocks follow. A load is *compulsory* iff the block was never loaded
//! before; every other load is non-compulsory. Writes are classified at the
//! end: the final write-back of each output block is compulsory, all other
//! write-backs (repeated output writes and any input write-back) are
//! non-compulsory. Evicting without write-back is free.
//!
//! Output blocks are never read: [`Machine::allocate`] makes an output block
//! resident without a transfer, so that compulsory reads equal the number of
//! input blocks.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Neighborhood, StencilSpec, Vertex};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

/// Internal memory capacity `M` and block size `B`, both in elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    m: u64,
    b: u64,
}

impl MachineConfig {
    /// Validates `B ≥ 1` and `M ≥ B`.
    pub fn new(m: u64, b: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidConfig("block size B must be ≥ 1".into()));
        }
        if m < b {
            return Err(Error::InvalidConfig(format!(
                "internal memory M = {m} cannot hold one block of B = {b}"
            )));
        }
        Ok(Self { m, b })
    }

    /// Internal memory capacity in elements.
    pub fn m(&self) -> u64 {
        self.m
    }

    /// Block size in elements.
    pub fn b(&self) -> u64 {
        self.b
    }
}

/// Location of one element in external memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Address {
    pub block: u64,
    pub offset: u64,
}

/// Block-transfer counters of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoStats {
    pub compulsory_reads: u64,
    pub noncompulsory_reads: u64,
    pub compulsory_writes: u64,
    pub noncompulsory_writes: u64,
    pub evaluated_vertices: u64,
}

impl IoStats {
    /// Non-compulsory reads plus non-compulsory writes.
    pub fn noncompulsory(&self) -> u64 {
        self.noncompulsory_reads + self.noncompulsory_writes
    }

    /// Compulsory reads plus compulsory writes.
    pub fn compulsory(&self) -> u64 {
        self.compulsory_reads + self.compulsory_writes
    }
}

/// Whether element values are materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Values are stored and summed; outputs can be compared with an oracle.
    Full,
    /// Only residency and counters are tracked.
    #[serde(alias = "count", alias = "count_only")]
    CountOnly,
}

/// The two arrays of a stencil computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Input,
    Output,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Input => "in",
            Layer::Output => "out",
        })
    }
}

/// A data layout as seen by the machine: where each element of both layers lives.
pub trait AddressMap: Sync {
    /// The vertex universe.
    fn grid(&self) -> &GridSpec;
    /// The stencil evaluated at every vertex.
    fn stencil(&self) -> StencilSpec;
    /// Block size `B` the layout was built for.
    fn block_size(&self) -> u64;
    /// Number of input blocks; they have ids `0 .. input_blocks()`.
    fn input_blocks(&self) -> u64;
    /// Number of output blocks; they follow the input blocks.
    fn output_blocks(&self) -> u64;
    /// Input element of `x`.
    fn input_address(&self, x: &Vertex) -> Address;
    /// Output element of `x`.
    fn output_address(&self, x: &Vertex) -> Address;

    /// Input elements of the stencil neighbors of `x` that lie in the grid,
    /// in [`Neighborhood`] offset order (`out` is cleared first).
    ///
    /// Layouts may override this with an incremental computation.
    fn stencil_input_addresses(&self, x: &Vertex, out: &mut Vec<Address>) {
        let mut nbuf = Vec::new();
        Neighborhood::new(self.grid(), self.stencil()).collect(self.grid(), x, &mut nbuf);
        out.clear();
        out.extend(nbuf.iter().map(|y| self.input_address(y)));
    }

    /// All blocks of both layers.
    fn total_blocks(&self) -> u64 {
        self.input_blocks() + self.output_blocks()
    }
}

/// Plain row-major layout: input element `i` at `(i / B, i % B)`, the output
/// layer in the same order after the last input block.
#[derive(Clone, Debug)]
pub struct RowMajorMap {
    grid: GridSpec,
    stencil: StencilSpec,
    b: u64,
    blocks: u64,
}

impl RowMajorMap {
    /// Row-major layout of `grid` for block size `b`.
    pub fn new(grid: GridSpec, stencil: StencilSpec, b: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidConfig("block size B must be ≥ 1".into()));
        }
        let blocks = grid.vertex_count().div_ceil(b);
        Ok(Self {
            grid,
            stencil,
            b,
            blocks,
        })
    }
}

impl AddressMap for RowMajorMap {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn stencil(&self) -> StencilSpec {
        self.stencil
    }
    fn block_size(&self) -> u64 {
        self.b
    }
    fn input_blocks(&self) -> u64 {
        self.blocks
    }
    fn output_blocks(&self) -> u64 {
        self.blocks
    }
    fn input_address(&self, x: &Vertex) -> Address {
        let i = self.grid.linearize_unchecked(x);
        Address {
            block: i / self.b,
            offset: i % self.b,
        }
    }
    fn output_address(&self, x: &Vertex) -> Address {
        let i = self.grid.linearize_unchecked(x);
        Address {
            block: self.blocks + i / self.b,
            offset: i % self.b,
        }
    }
}

/// One machine instruction, as recorded in a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOp {
    Load(u64),
    Alloc(u64),
    Evict { block: u64, write_back: bool },
    Eval(Vertex),
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceOp::Load(b) => write!(f, "LOAD {b}"),
            TraceOp::Alloc(b) => write!(f, "ALLOC {b}"),
            TraceOp::Evict { block, write_back } => {
                write!(f, "EVICT {block} {}", u8::from(*write_back))
            }
            TraceOp::Eval(x) => {
                f.write_str("EVAL")?;
                for c in x.coords() {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for TraceOp {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed trace record {line:?}"));
        let mut it = line.split_whitespace();
        let op = it.next().ok_or_else(bad)?;
        let nums: Vec<i64> = it
            .map(|t| t.parse::<i64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let block = |nums: &[i64]| -> Result<u64> {
            nums.first()
                .and_then(|&v| u64::try_from(v).ok())
                .ok_or_else(bad)
        };
        match op {
            "LOAD" if nums.len() == 1 => Ok(TraceOp::Load(block(&nums)?)),
            "ALLOC" if nums.len() == 1 => Ok(TraceOp::Alloc(block(&nums)?)),
            "EVICT" if nums.len() == 2 && (nums[1] == 0 || nums[1] == 1) => Ok(TraceOp::Evict {
                block: block(&nums)?,
                write_back: nums[1] == 1,
            }),
            "EVAL" if !nums.is_empty() && nums.len() <= crate::grid::MAX_DIM => {
                Ok(TraceOp::Eval(Vertex::new(&nums)))
            }
            _ => Err(bad()),
        }
    }
}

/// Write a trace as newline-delimited records.
pub fn write_trace<W: Write>(ops: &[TraceOp], mut w: W) -> Result<()> {
    for op in ops {
        writeln!(w, "{op}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a trace written by [`write_trace`]. Blank lines are ignored.
pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceOp>> {
    let mut ops = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        ops.push(line.parse()?);
    }
    Ok(ops)
}

/// Final statistics of a machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub stats: IoStats,
    /// Every vertex evaluated exactly once and every output block holds its final value.
    pub complete: bool,
    /// Largest resident footprint observed, in elements.
    pub peak_footprint: u64,
}

#[derive(Clone, Debug)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(len: u64) -> Self {
        Self {
            words: vec![0; len.div_ceil(64) as usize],
        }
    }
    #[inline]
    pub(crate) fn get(&self, i: u64) -> bool {
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }
    #[inline]
    pub(crate) fn set(&mut self, i: u64) {
        self.words[(i >> 6) as usize] |= 1 << (i & 63);
    }
    #[inline]
    pub(crate) fn clear(&mut self, i: u64) {
        self.words[(i >> 6) as usize] &= !(1 << (i & 63));
    }
}

/// The `(M, B)` machine driving one layout.
pub struct Machine<'a, A: AddressMap + ?Sized> {
    map: &'a A,
    cfg: MachineConfig,
    fidelity: Fidelity,
    nblocks: u64,
    input_blocks: u64,
    resident: BitSet,
    ever_loaded: BitSet,
    ever_written: BitSet,
    dirty: BitSet,
    evaluated: BitSet,
    resident_blocks: u64,
    peak_blocks: u64,
    reads_compulsory: u64,
    reads_noncompulsory: u64,
    writes_total: u64,
    distinct_output_writes: u64,
    evaluated_count: u64,
    instructions: u64,
    external: Vec<u64>,
    internal: HashMap<u64, Box<[u64]>>,
    trace: Option<Vec<TraceOp>>,
    neighborhood: Neighborhood,
    nbuf: Vec<Vertex>,
    memo_vertex: Option<Vertex>,
    memo_inputs: Vec<Address>,
    memo_output: Address,
}

impl<'a, A: AddressMap + ?Sized> Machine<'a, A> {
    /// A machine with empty internal memory and zeroed external memory.
    pub fn new(map: &'a A, cfg: MachineConfig, fidelity: Fidelity) -> Result<Self> {
        if map.block_size() != cfg.b() {
            return Err(Error::InvalidConfig(format!(
                "layout built for B = {} but machine has B = {}",
                map.block_size(),
                cfg.b()
            )));
        }
        let nblocks = map.total_blocks();
        let external = match fidelity {
            Fidelity::Full => {
                let len = nblocks
                    .checked_mul(cfg.b())
                    .and_then(|l| usize::try_from(l).ok())
                    .ok_or(Error::Overflow("external memory size"))?;
                vec![0; len]
            }
            Fidelity::CountOnly => Vec::new(),
        };
        Ok(Self {
            map,
            cfg,
            fidelity,
            nblocks,
            input_blocks: map.input_blocks(),
            resident: BitSet::new(nblocks),
            ever_loaded: BitSet::new(nblocks),
            ever_written: BitSet::new(nblocks),
            dirty: BitSet::new(nblocks),
            evaluated: BitSet::new(map.output_blocks() * cfg.b()),
            resident_blocks: 0,
            peak_blocks: 0,
            reads_compulsory: 0,
            reads_noncompulsory: 0,
            writes_total: 0,
            distinct_output_writes: 0,
            evaluated_count: 0,
            instructions: 0,
            external,
            internal: HashMap::new(),
            trace: None,
            neighborhood: Neighborhood::new(map.grid(), map.stencil()),
            nbuf: Vec::new(),
            memo_vertex: None,
            memo_inputs: Vec::new(),
            memo_output: Address {
                block: 0,
                offset: 0,
            },
        })
    }

    /// Start recording every instruction.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// The recorded instructions, if tracing is enabled.
    pub fn trace(&self) -> Option<&[TraceOp]> {
        self.trace.as_deref()
    }

    /// The layout this machine drives.
    pub fn map(&self) -> &'a A {
        self.map
    }

    /// `M` and `B`.
    pub fn config(&self) -> MachineConfig {
        self.cfg
    }

    /// Value fidelity.
    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    /// Number of instructions executed so far.
    pub fn instructions(&self) -> u64 {
        self.instructions
    }

    /// Whether `block` is in internal memory.
    #[inline]
    pub fn is_resident(&self, block: u64) -> bool {
        block < self.nblocks && self.resident.get(block)
    }

    /// Resident footprint in elements.
    pub fn footprint(&self) -> u64 {
        self.resident_blocks * self.cfg.b()
    }

    /// Largest footprint so far in elements.
    pub fn peak_footprint(&self) -> u64 {
        self.peak_blocks * self.cfg.b()
    }

    /// Whether `x` has been evaluated.
    pub fn is_evaluated(&self, x: &Vertex) -> bool {
        self.evaluated.get(self.output_slot(self.map.output_address(x)))
    }

    fn record(&mut self, op: TraceOp) {
        self.instructions += 1;
        if let Some(t) = &mut self.trace {
            t.push(op);
        }
    }

    fn check_block(&self, block: u64) -> Result<()> {
        if block >= self.nblocks {
            return Err(Error::UnknownBlock(block));
        }
        Ok(())
    }

    fn make_resident(&mut self, block: u64) -> Result<()> {
        if self.resident.get(block) {
            return Err(Error::AlreadyResident(block));
        }
        let needed = (self.resident_blocks + 1) * self.cfg.b();
        if needed > self.cfg.m() {
            return Err(Error::CapacityExceeded {
                block,
                needed,
                capacity: self.cfg.m(),
            });
        }
        self.resident.set(block);
        self.resident_blocks += 1;
        self.peak_blocks = self.peak_blocks.max(self.resident_blocks);
        Ok(())
    }

    /// Read an input block into internal memory.
    pub fn load(&mut self, block: u64) -> Result<()> {
        self.check_block(block)?;
        if block >= self.input_blocks {
            return Err(Error::WrongLayer(block));
        }
        self.make_resident(block)?;
        if self.ever_loaded.get(block) {
            self.reads_noncompulsory += 1;
        } else {
            self.ever_loaded.set(block);
            self.reads_compulsory += 1;
        }
        if self.fidelity == Fidelity::Full {
            let b = self.cfg.b() as usize;
            let start = block as usize * b;
            self.internal
                .insert(block, self.external[start..start + b].into());
        }
        self.record(TraceOp::Load(block));
        Ok(())
    }

    /// Make an output block resident without reading it.
    ///
    /// Its contents start as the current external contents (zero before the
    /// first write-back), so re-allocating a written-back block loses nothing
    /// that was not already counted as written.
    pub fn allocate(&mut self, block: u64) -> Result<()> {
        self.check_block(block)?;
        if block < self.input_blocks {
            return Err(Error::WrongLayer(block));
        }
        self.make_resident(block)?;
        if self.fidelity == Fidelity::Full {
            let b = self.cfg.b() as usize;
            let start = block as usize * b;
            self.internal
                .insert(block, self.external[start..start + b].into());
        }
        self.record(TraceOp::Alloc(block));
        Ok(())
    }

    /// Remove a block from internal memory, writing it back if requested.
    pub fn evict(&mut self, block: u64, write_back: bool) -> Result<()> {
        self.check_block(block)?;
        if !self.resident.get(block) {
            return Err(Error::NotResident(block));
        }
        self.resident.clear(block);
        self.resident_blocks -= 1;
        let data = self.internal.remove(&block);
        if write_back {
            self.writes_total += 1;
            if block >= self.input_blocks {
                if !self.ever_written.get(block) {
                    self.ever_written.set(block);
                    self.distinct_output_writes += 1;
                }
                self.dirty.clear(block);
            }
            if let Some(data) = data {
                let b = self.cfg.b() as usize;
                let start = block as usize * b;
                self.external[start..start + b].copy_from_slice(&data);
            }
        }
        self.record(TraceOp::Evict { block, write_back });
        Ok(())
    }

    #[inline]
    fn output_slot(&self, a: Address) -> u64 {
        (a.block - self.input_blocks) * self.cfg.b() + a.offset
    }

    fn resolve(&mut self, x: &Vertex) {
        if self.memo_vertex.as_ref() == Some(x) {
            return;
        }
        self.map.stencil_input_addresses(x, &mut self.memo_inputs);
        self.memo_output = self.map.output_address(x);
        self.memo_vertex = Some(*x);
    }

    /// Addresses `eval_stencil(x)` will touch: the input elements of every
    /// stencil neighbor (in offset order) and the output element of `x`.
    ///
    /// The result is memoized for the next `eval_stencil(x)`.
    pub fn required_blocks(&mut self, x: &Vertex) -> (&[Address], Address) {
        self.resolve(x);
        (&self.memo_inputs, self.memo_output)
    }

    /// Evaluate the stencil at `x`: `output[x] = Σ_{y ∈ S_s(x)} input[y]`.
    pub fn eval_stencil(&mut self, x: &Vertex) -> Result<()> {
        let g = self.map.grid();
        if !g.contains(x) {
            return Err(Error::OutOfRange(format!("{x:?}")));
        }
        self.resolve(x);
        for (i, a) in self.memo_inputs.iter().enumerate() {
            if !self.resident.get(a.block) {
                let g = self.map.grid();
                self.neighborhood.collect(g, x, &mut self.nbuf);
                return Err(Error::MissingInput(self.nbuf[i]));
            }
        }
        let out = self.memo_output;
        if !self.resident.get(out.block) {
            return Err(Error::MissingOutputSlot(*x));
        }
        // Output slots follow the sweep order, unlike grid indices.
        let idx = self.output_slot(out);
        if self.evaluated.get(idx) {
            return Err(Error::AlreadyEvaluated(*x));
        }
        if self.fidelity == Fidelity::Full {
            let mut sum = 0u64;
            for a in &self.memo_inputs {
                sum = sum.wrapping_add(self.internal[&a.block][a.offset as usize]);
            }
            if let Some(blk) = self.internal.get_mut(&out.block) {
                blk[out.offset as usize] = sum;
            }
        }
        self.evaluated.set(idx);
        self.dirty.set(out.block);
        self.evaluated_count += 1;
        self.record(TraceOp::Eval(*x));
        Ok(())
    }

    /// Execute one recorded instruction.
    pub fn apply(&mut self, op: &TraceOp) -> Result<()> {
        match *op {
            TraceOp::Load(b) => self.load(b),
            TraceOp::Alloc(b) => self.allocate(b),
            TraceOp::Evict { block, write_back } => self.evict(block, write_back),
            TraceOp::Eval(ref x) => {
                if x.dim() != self.map.grid().n() {
                    return Err(Error::OutOfRange(format!("{x:?}")));
                }
                self.eval_stencil(x)
            }
        }
    }

    /// Set the input value of `x` in external memory (Full fidelity, before the run).
    pub fn set_input(&mut self, x: &Vertex, value: u64) -> Result<()> {
        if self.fidelity != Fidelity::Full {
            return Err(Error::InvalidConfig("values need Full fidelity".into()));
        }
        if !self.map.grid().contains(x) {
            return Err(Error::OutOfRange(format!("{x:?}")));
        }
        let a = self.map.input_address(x);
        self.external[(a.block * self.cfg.b() + a.offset) as usize] = value;
        Ok(())
    }

    /// The output value of `x` in external memory (Full fidelity).
    pub fn output_value(&self, x: &Vertex) -> Result<u64> {
        if self.fidelity != Fidelity::Full {
            return Err(Error::InvalidConfig("values need Full fidelity".into()));
        }
        if !self.map.grid().contains(x) {
            return Err(Error::OutOfRange(format!("{x:?}")));
        }
        let a = self.map.output_address(x);
        Ok(self.external[(a.block * self.cfg.b() + a.offset) as usize])
    }

    /// Counters so far; writes are classified as if the run ended now.
    pub fn stats(&self) -> IoStats {
        IoStats {
            compulsory_reads: self.reads_compulsory,
            noncompulsory_reads: self.reads_noncompulsory,
            compulsory_writes: self.distinct_output_writes,
            noncompulsory_writes: self.writes_total - self.distinct_output_writes,
            evaluated_vertices: self.evaluated_count,
        }
    }

    /// Final report: counters, completeness and peak footprint.
    pub fn run_report(&self) -> RunReport {
        let all_evaluated = self.evaluated_count == self.map.grid().vertex_count();
        let outputs_final = self.distinct_output_writes == self.map.output_blocks()
            && (self.input_blocks..self.nblocks).all(|b| !self.dirty.get(b));
        RunReport {
            stats: self.stats(),
            complete: all_evaluated && outputs_final,
            peak_footprint: self.peak_footprint(),
        }
    }

}

/// Replay a trace on a fresh machine and return its report.
pub fn replay<A: AddressMap + ?Sized>(
    map: &A,
    cfg: MachineConfig,
    fidelity: Fidelity,
    ops: &[TraceOp],
) -> Result<RunReport> {
    let mut m = Machine::new(map, cfg, fidelity)?;
    for (i, op) in ops.iter().enumerate() {
        m.apply(op).map_err(|e| Error::SweepAborted {
            instruction: i as u64,
            source: Box::new(e),
        })?;
    }
    Ok(m.run_report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> (RowMajorMap, MachineConfig) {
        let g = GridSpec::grid(&[3]).unwrap();
        let map = RowMajorMap::new(g, StencilSpec::new(1).unwrap(), 3).unwrap();
        (map, MachineConfig::new(6, 3).unwrap())
    }

    #[test]
    fn minimal_trace() {
        let (map, cfg) = line3();
        let mut m = Machine::new(&map, cfg, Fidelity::Full).unwrap();
        for i in 0..3 {
            m.set_input(&Vertex::new(&[i]), 1 + i as u64).unwrap();
        }
        m.load(0).unwrap();
        m.allocate(1).unwrap();
        for i in 0..3 {
            m.eval_stencil(&Vertex::new(&[i])).unwrap();
        }
        m.evict(1, true).unwrap();
        let r = m.run_report();
        assert!(r.complete);
        assert_eq!(
            r.stats,
            IoStats {
                compulsory_reads: 1,
                noncompulsory_reads: 0,
                compulsory_writes: 1,
                noncompulsory_writes: 0,
                evaluated_vertices: 3,
            }
        );
        assert_eq!(m.output_value(&Vertex::new(&[0])).unwrap(), 3);
        assert_eq!(m.output_value(&Vertex::new(&[1])).unwrap(), 6);
        assert_eq!(m.output_value(&Vertex::new(&[2])).unwrap(), 5);
    }

    #[test]
    fn missing_input_and_output() {
        let (map, cfg) = line3();
        let mut m = Machine::new(&map, cfg, Fidelity::CountOnly).unwrap();
        m.allocate(1).unwrap();
        assert!(matches!(
            m.eval_stencil(&Vertex::new(&[1])),
            Err(Error::MissingInput(_))
        ));
        m.evict(1, false).unwrap();
        m.load(0).unwrap();
        assert!(matches!(
            m.eval_stencil(&Vertex::new(&[1])),
            Err(Error::MissingOutputSlot(_))
        ));
    }

    #[test]
    fn capacity_and_residency_errors() {
        let (map, _) = line3();
        let cfg = MachineConfig::new(3, 3).unwrap();
        let mut m = Machine::new(&map, cfg, Fidelity::CountOnly).unwrap();
        m.load(0).unwrap();
        assert!(matches!(m.load(0), Err(Error::AlreadyResident(0))));
        assert!(matches!(
            m.allocate(1),
            Err(Error::CapacityExceeded { .. })
        ));
        assert!(matches!(m.evict(1, false), Err(Error::NotResident(1))));
        assert!(matches!(m.allocate(0), Err(Error::AlreadyResident(0)) | Err(Error::WrongLayer(0))));
        assert!(matches!(m.load(7), Err(Error::UnknownBlock(7))));
        assert!(MachineConfig::new(2, 3).is_err());
        assert!(MachineConfig::new(2, 0).is_err());
    }

    #[test]
    fn double_evaluation_rejected() {
        let (map, cfg) = line3();
        let mut m = Machine::new(&map, cfg, Fidelity::CountOnly).unwrap();
        m.load(0).unwrap();
        m.allocate(1).unwrap();
        m.eval_stencil(&Vertex::new(&[0])).unwrap();
        assert!(matches!(
            m.eval_stencil(&Vertex::new(&[0])),
            Err(Error::AlreadyEvaluated(_))
        ));
    }

    #[test]
    fn reloads_and_rewrites_are_noncompulsory() {
        let (map, cfg) = line3();
        let mut m = Machine::new(&map, cfg, Fidelity::CountOnly).unwrap();
        m.load(0).unwrap();
        m.evict(0, true).unwrap();
        m.load(0).unwrap();
        m.allocate(1).unwrap();
        for i in 0..3 {
            m.eval_stencil(&Vertex::new(&[i])).unwrap();
        }
        m.evict(1, true).unwrap();
        m.allocate(1).unwrap();
        m.evict(1, true).unwrap();
        let s = m.stats();
        assert_eq!((s.compulsory_reads, s.noncompulsory_reads), (1, 1));
        assert_eq!((s.compulsory_writes, s.noncompulsory_writes), (1, 2));
        assert!(m.run_report().complete);
    }

    #[test]
    fn whole_torus_in_memory_has_no_noncompulsory_io() {
        let g = GridSpec::torus(&[4, 4]).unwrap();
        let map = RowMajorMap::new(g.clone(), StencilSpec::new(1).unwrap(), 4).unwrap();
        let cfg = MachineConfig::new(2 * 16 + 4, 4).unwrap();
        let mut m = Machine::new(&map, cfg, Fidelity::Full).unwrap();
        for b in 0..4 {
            m.load(b).unwrap();
        }
        for b in 4..8 {
            m.allocate(b).unwrap();
        }
        for x in g.vertices() {
            m.eval_stencil(&x).unwrap();
        }
        for b in 0..8 {
            m.evict(b, b >= 4).unwrap();
        }
        let r = m.run_report();
        assert!(r.complete);
        assert_eq!(r.stats.noncompulsory(), 0);
        assert_eq!(r.stats.compulsory_reads, 4);
        assert_eq!(r.stats.compulsory_writes, 4);
    }

    #[test]
    fn trace_round_trip_and_replay() {
        let (map, cfg) = line3();
        let mut m = Machine::new(&map, cfg, Fidelity::CountOnly).unwrap();
        m.enable_trace();
        m.load(0).unwrap();
        m.allocate(1).unwrap();
        for i in 0..3 {
            m.eval_stencil(&Vertex::new(&[i])).unwrap();
        }
        m.evict(1, true).unwrap();
        m.evict(0, false).unwrap();
        let mut buf = Vec::new();
        write_trace(m.trace().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("LOAD 0\nALLOC 1\nEVAL 0\n"));
        let ops = read_trace(&buf[..]).unwrap();
        assert_eq!(ops, m.trace().unwrap());
        let full = replay(&map, cfg, Fidelity::Full, &ops).unwrap();
        assert_eq!(full, m.run_report());
        assert!("LOAD x".parse::<TraceOp>().is_err());
        assert!("EVICT 3 2".parse::<TraceOp>().is_err());
    }
}
