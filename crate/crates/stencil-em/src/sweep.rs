//! Sweep algorithms: the instruction streams that drive a [`Machine`] over a
//! [`Layout`].
//!
//! Working bands are processed one after the other in ascending origin order.
//! Inside a band the sweep shape moves level by level (`σ = 0, 1, …`); on a
//! level the band's vertices are evaluated in the layout's in-level order, so
//! both layers are consumed in exactly the order they are stored.
//!
//! Residency follows the eviction schedule of the sweep: an input block is
//! loaded the first time a stencil needs it and dropped as soon as the sweep
//! has passed the position of the last evaluation that can read it (for a
//! vertex on level `σ`, the last reader sits on level `σ + s`). Blocks of wing
//! bands are written back when evicted by the first working band that shares
//! them and are re-read by every later one; all other input blocks are evicted
//! clean. Each output band keeps one open block that is written back once it is
//! full or the band is complete, so every output block is written exactly once.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, StencilSpec, Vertex};
use crate::layout::geometry::{Family, TPoint};
use crate::layout::{
    Derivation, Layout, LayoutKind, RegionIndex, SweepShapeSize, WorkingBand,
};
use crate::machine::{Address, AddressMap, Fidelity, IoStats, Machine, MachineConfig};
use crate::oracle::naive_stencil;

/// Geometry of the sweep shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepShape {
    /// Line segment of `m` vertices orthogonal to `x₁` (2D row / column).
    Segment,
    /// Segment on a diagonal of direction `(1, −1)`.
    DiagonalSegment,
    /// `m × m` square in an `x₂x₃` plane.
    Square,
    /// Planar ℓ¹ ball of radius `m` in an `x₂x₃` plane.
    L1Ball,
    /// Hexagon in a plane orthogonal to `(1, 1, 1)`.
    Hexagon,
    /// `(n−1)`-dimensional hypercube of side `m`.
    Hypercube,
}

/// What a sweep does, independent of the machine it runs on.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub kind: LayoutKind,
    pub m: u64,
    pub shape: SweepShape,
    /// Axes (0-based) the sweep shape is shifted along, in turn.
    pub order: Vec<usize>,
    /// Working bands in processing order.
    pub bands: Vec<WorkingBand>,
}

impl SweepPlan {
    /// The sweep matching a layout.
    pub fn new(layout: &Layout) -> Self {
        let kind = layout.kind();
        let n = layout.grid().n();
        let (shape, order) = match kind {
            LayoutKind::Row2D | LayoutKind::BlockAlignedColumn2D => (SweepShape::Segment, vec![0]),
            LayoutKind::BlockAlignedDiagonal2D => (SweepShape::DiagonalSegment, vec![0, 1]),
            LayoutKind::Row3D | LayoutKind::BlockAlignedColumnPole3D => (SweepShape::Square, vec![0]),
            LayoutKind::BlockAlignedDiagonal2Din3D => (SweepShape::L1Ball, vec![0]),
            LayoutKind::HexagonalAlignedDiagonal3D => (SweepShape::Hexagon, vec![0, 1, 2]),
            LayoutKind::BlockAlignedColumnND => (
                if n == 2 { SweepShape::Segment } else { SweepShape::Hypercube },
                vec![0],
            ),
        };
        Self {
            kind,
            m: layout.shape().m,
            shape,
            order,
            bands: layout.working_bands(),
        }
    }

    /// Checks that plan, layout and machine belong together and that the
    /// sweep's interior footprint fits in `M`.
    pub fn validate(&self, layout: &Layout, cfg: MachineConfig) -> Result<()> {
        if layout.kind() != self.kind || layout.shape().m != self.m || layout.working_band_count() != self.bands.len() {
            return Err(Error::InvalidConfig("sweep plan does not match the layout".into()));
        }
        if layout.block_size() != cfg.b() {
            return Err(Error::InvalidConfig("layout and machine disagree on B".into()));
        }
        if layout.shape().derivation == Derivation::ClosedForm {
            let n = layout.grid().n();
            let s = layout.stencil().s();
            let need = probe_footprint(self.kind, n, s, self.m, cfg.b())?;
            if need > cfg.m() {
                return Err(Error::UnusableConfiguration(format!(
                    "{}: sweep shape m = {} needs {need} element slots, M = {}",
                    self.kind,
                    self.m,
                    cfg.m()
                )));
            }
        }
        Ok(())
    }
}

/// A band vertex-fiber as the driver sees it.
#[derive(Clone, Copy)]
struct TilePoint {
    p: TPoint,
    lo: i64,
    hi: i64,
    out_region: u32,
}

/// Span instrumentation for the capacity search.
struct Probe {
    sigma_from: i64,
    spans: HashMap<u32, (u64, Option<u64>)>,
    outputs: HashSet<u32>,
    fiber_major_resident: u64,
    peak_blocks: u64,
}

struct Driver<'l, 'm> {
    layout: &'l Layout,
    machine: &'m mut Machine<'l, Layout>,
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    inputs: Vec<Address>,
    b: u64,
}

impl<'l, 'm> Driver<'l, 'm> {
    fn new(layout: &'l Layout, machine: &'m mut Machine<'l, Layout>) -> Self {
        Self {
            layout,
            machine,
            heap: BinaryHeap::new(),
            inputs: Vec::new(),
            b: layout.block_size(),
        }
    }

    fn region_of(&self, block: u64) -> usize {
        self.layout.band_of_block(block).expect("block inside the layout")
    }

    /// Position after which the current use of `block` ends, for a block
    /// loaded at position `pos`.
    ///
    /// A level-major block is read by a contiguous run of positions and dies
    /// with its last vertex. A fiber-major block may hold the tail of one
    /// fiber and the head of the next; the two uses are far apart, so the
    /// block lives only until the earliest portion still ahead of `pos` and
    /// is reloaded for the other one.
    fn block_death(&self, block: u64, pos: u64) -> u64 {
        let l = self.layout;
        let ri = self.region_of(block);
        let r = &l.regions[ri];
        let start = (block - r.block_base) * self.b;
        let end = (start + self.b).min(r.len) - 1;
        match &r.index {
            RegionIndex::Full(f) if f.stride.is_some() => {
                let k = f.stride.expect("fiber-major");
                let mut latest = 0;
                let mut next = u64::MAX;
                for sub in start / k..=end / k {
                    let first = start.max(sub * k) - sub * k;
                    let last = (end - sub * k).min(f.levels - 1);
                    if first > last {
                        continue;
                    }
                    let p = l.geo.tpoint(u64::from(r.points[sub as usize]));
                    let x = l.geo.lift(last as i64, &p).expect("fiber vertex");
                    let d = l.geo.death(&x);
                    latest = latest.max(d);
                    if d >= pos {
                        next = next.min(d);
                    }
                }
                if next == u64::MAX {
                    latest
                } else {
                    next
                }
            }
            _ => {
                let x = l.vertex_at(ri, end).expect("level-major ranks are dense");
                l.geo.death(&x)
            }
        }
    }

    fn write_back_on_evict(&self, block: u64, tile: u32) -> bool {
        let r = &self.layout.regions[self.region_of(block)];
        r.is_wing() && r.sig[0] == tile
    }

    fn evict_input(&mut self, block: u64, tile: u32, probe: &mut Option<&mut Probe>) -> Result<()> {
        if !self.machine.is_resident(block) {
            return Ok(());
        }
        let wb = self.write_back_on_evict(block, tile);
        self.machine.evict(block, wb)?;
        if let Some(p) = probe.as_deref_mut() {
            if self.layout.regions[self.region_of(block)].fiber_major() {
                p.fiber_major_resident -= 1;
            }
        }
        Ok(())
    }

    fn tile_points(&self, tile: usize) -> [Vec<TilePoint>; 3] {
        let l = self.layout;
        let geo = &l.geo;
        let mut groups: [Vec<TilePoint>; 3] = Default::default();
        for p in l.tiling.tile_points(&l.tiles[tile].origin) {
            let Some(idx) = geo.tindex(&p) else { continue };
            let e = &l.table[idx as usize];
            if e.in_region == u32::MAX {
                continue;
            }
            let Some((lo, hi)) = geo.fiber(&p) else { continue };
            groups[geo.residue(&p)].push(TilePoint {
                p,
                lo,
                hi,
                out_region: e.out_region,
            });
        }
        for g in groups.iter_mut() {
            g.sort_by_key(|tp| geo.sort_key(&tp.p));
        }
        groups
    }

    /// Sweep one working band, optionally restricted to a window of levels.
    fn run_tile(&mut self, tile: usize, window: Option<(i64, i64)>, mut probe: Option<&mut Probe>) -> Result<()> {
        let l = self.layout;
        let geo = &l.geo;
        let n = geo.n;
        let tid = tile as u32;
        let groups = self.tile_points(tile);
        let lo = groups.iter().flatten().map(|t| t.lo).min();
        let hi = groups.iter().flatten().map(|t| t.hi).max();
        let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
            return Ok(());
        };
        if let Some((a, b)) = window {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        let period = geo.period();
        for sigma in lo..=hi {
            let group = &groups[sigma.rem_euclid(period) as usize];
            for tp in group {
                if sigma < tp.lo || sigma > tp.hi {
                    continue;
                }
                let x = geo.lift(sigma, &tp.p).expect("vertex on its fiber");
                let pos = geo.position(&x);
                while let Some(&Reverse((d, blk))) = self.heap.peek() {
                    if d >= pos {
                        break;
                    }
                    self.heap.pop();
                    self.evict_input(blk, tid, &mut probe)?;
                }
                let v = Vertex::from_raw(n, x);
                let (ins, out) = self.machine.required_blocks(&v);
                self.inputs.clear();
                self.inputs.extend_from_slice(ins);
                for i in 0..self.inputs.len() {
                    let blk = self.inputs[i].block;
                    if !self.machine.is_resident(blk) {
                        self.machine.load(blk)?;
                        let d = self.block_death(blk, pos);
                        self.heap.push(Reverse((d, blk)));
                        if let Some(p) = probe.as_deref_mut() {
                            if l.regions[self.region_of(blk)].fiber_major() {
                                p.fiber_major_resident += 1;
                            }
                        }
                    }
                }
                if !self.machine.is_resident(out.block) {
                    self.machine.allocate(out.block)?;
                }
                self.machine.eval_stencil(&v)?;
                if let Some(p) = probe.as_deref_mut() {
                    self.observe(p, tp.out_region, pos);
                }
                let r = &l.regions[tp.out_region as usize];
                let rank = (out.block - r.block_base) * self.b + out.offset;
                if out.offset == self.b - 1 || rank + 1 == r.len {
                    self.machine.evict(out.block, true)?;
                }
            }
        }
        if window.is_none() {
            while let Some(Reverse((_, blk))) = self.heap.pop() {
                self.evict_input(blk, tid, &mut probe)?;
            }
        }
        Ok(())
    }

    /// Record the live rank range of every band touched so far.
    fn observe(&self, p: &mut Probe, out_region: u32, pos: u64) {
        let l = self.layout;
        p.outputs.insert(out_region);
        for a in &self.inputs {
            let ri = self.region_of(a.block);
            let r = &l.regions[ri];
            if r.fiber_major() {
                continue;
            }
            let rank = (a.block - r.block_base) * self.b + a.offset;
            let from = p.sigma_from - l.geo.s;
            let entry = p.spans.entry(ri as u32).or_insert_with(|| {
                let start = match &r.index {
                    RegionIndex::Full(f) => f.level_start(from),
                    RegionIndex::Diag(d) => d.level_start(from),
                };
                (start, None)
            });
            entry.1 = Some(entry.1.map_or(rank, |u| u.max(rank)));
        }
        let mut blocks = 0;
        for (&ri, span) in p.spans.iter_mut() {
            let Some(upper) = span.1 else { continue };
            while span.0 <= upper {
                let x = l.vertex_at(ri as usize, span.0).expect("dense ranks");
                if l.geo.death(&x) >= pos {
                    break;
                }
                span.0 += 1;
            }
            if span.0 <= upper {
                blocks += (upper - span.0 + 1).div_ceil(self.b) + 1;
            }
        }
        blocks += p.outputs.len() as u64 + p.fiber_major_resident;
        p.peak_blocks = p.peak_blocks.max(blocks);
    }
}

fn abort(machine: &Machine<'_, Layout>, e: Error) -> Error {
    match e {
        Error::SweepAborted { .. } => e,
        other => Error::SweepAborted {
            instruction: machine.instructions(),
            source: Box::new(other),
        },
    }
}

/// Run the whole sweep on `machine`; returns the final counters.
///
/// Any machine error aborts the sweep with the index of the offending
/// instruction.
pub fn run_sweep<'l>(plan: &SweepPlan, machine: &mut Machine<'l, Layout>, layout: &'l Layout) -> Result<IoStats> {
    if !std::ptr::eq(machine.map(), layout) {
        return Err(Error::InvalidConfig("machine drives a different layout".into()));
    }
    plan.validate(layout, machine.config())?;
    let mut driver = Driver::new(layout, machine);
    for band in &plan.bands {
        if let Err(e) = driver.run_tile(band.index, None, None) {
            return Err(abort(driver.machine, e));
        }
    }
    Ok(machine.stats())
}

/// Outcome of comparing a sweep's output with the naive evaluator.
#[derive(Clone, Debug)]
pub struct OracleComparison {
    pub equal: bool,
    /// First vertex (grid order) whose outputs differ: `(vertex, expected, got)`.
    pub first_mismatch: Option<(Vertex, u64, u64)>,
    pub stats: IoStats,
    pub complete: bool,
    pub peak_footprint: u64,
}

/// Random inputs of a grid (deterministic in `seed`), in grid order.
pub fn random_inputs(g: &GridSpec, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..g.vertex_count()).map(|_| rng.gen()).collect()
}

/// Run `plan` with Full fidelity on random inputs and compare every output
/// with [`naive_stencil`].
pub fn run_oracle_compare(plan: &SweepPlan, layout: &Layout, cfg: MachineConfig, seed: u64) -> Result<OracleComparison> {
    let g = layout.grid();
    let input = random_inputs(g, seed);
    let mut machine = Machine::new(layout, cfg, Fidelity::Full)?;
    for (x, &v) in g.vertices().zip(&input) {
        machine.set_input(&x, v)?;
    }
    let stats = run_sweep(plan, &mut machine, layout)?;
    let expected = naive_stencil(g, layout.stencil(), &input)?;
    let mut first_mismatch = None;
    for (x, &want) in g.vertices().zip(&expected) {
        let got = machine.output_value(&x)?;
        if got != want {
            first_mismatch = Some((x, want, got));
            break;
        }
    }
    let report = machine.run_report();
    Ok(OracleComparison {
        equal: first_mismatch.is_none(),
        first_mismatch,
        stats,
        complete: report.complete,
        peak_footprint: report.peak_footprint,
    })
}

/// Probe grid and level window for the capacity search.
fn probe_grid(kind: LayoutKind, n: usize, s: i64, m: i64, b: i64) -> (Vec<u64>, bool) {
    let period = match kind.family() {
        Family::Axis => 1,
        Family::Diag2 => 2,
        Family::Hex => 3,
    };
    let mut w = 2 * period + 2 * s + 2;
    if kind.fiber_major_input() {
        w += b;
    }
    let sides: Vec<i64> = match kind {
        LayoutKind::BlockAlignedDiagonal2D => {
            let l = 2 * m - 2 * s;
            let k = 2 * l + w + 2 * s + 4;
            vec![k, k]
        }
        LayoutKind::HexagonalAlignedDiagonal3D => {
            let d = 4 * m + s + 3;
            let k = 4 * d + w + 4;
            vec![k, k, k]
        }
        LayoutKind::BlockAlignedDiagonal2Din3D => {
            let r = m - s;
            let k = 2 * (2 * r + 2 * s + 2) + 1;
            vec![w + 2 * s + 2, k, k]
        }
        _ => {
            let l = m - 2 * s;
            let mut v = vec![w + 2 * s + 2];
            v.extend(std::iter::repeat(2 * l + 2 * s).take(n - 1));
            v
        }
    };
    (sides.into_iter().map(|x| x as u64).collect(), kind.family() == Family::Axis)
}

/// Exact block-granular footprint (elements) of an interior working band of
/// `kind` with sweep-shape parameter `m`: see [`crate::layout::search_m`].
pub fn probe_footprint(kind: LayoutKind, n: usize, s: u32, m: u64, b: u64) -> Result<u64> {
    kind.check_dim(n)?;
    let st = StencilSpec::new(s)?;
    let (si, mi, bi) = (i64::from(s), m as i64, b as i64);
    let (sides, axis) = probe_grid(kind, n, si, mi, bi);
    let g = GridSpec::grid(&sides)?;
    let layout = Layout::new(
        kind,
        &g,
        st,
        b,
        SweepShapeSize {
            m,
            derivation: Derivation::CapacitySearch,
        },
    )?;
    let geo = &layout.geo;
    let mut w = 2 * geo.period() + 2 * si + 2;
    if kind.fiber_major_input() {
        w += bi;
    }
    let (from, to) = if axis {
        (si + 1, si + w)
    } else {
        let c = (geo.levels - 1) / 2 - w / 2;
        (c, c + w - 1)
    };
    // Central working band: the one owning the middle of the transverse box
    // (for the axis boxes the middle tile of the row of tiles).
    let mut center: TPoint = [0; crate::layout::geometry::MAX_T];
    match geo.family {
        Family::Axis => {
            let l = mi - 2 * si;
            for (i, c) in center.iter_mut().enumerate().take(geo.t) {
                *c = if kind == LayoutKind::BlockAlignedDiagonal2Din3D {
                    geo.tdim[i] / 2
                } else {
                    l + l / 2
                };
            }
        }
        Family::Diag2 | Family::Hex => {}
    }
    let origin = layout.tiling.origin(&center);
    let tile = layout
        .tiles
        .iter()
        .position(|t| t.origin == origin)
        .ok_or_else(|| Error::InvalidConfig("probe grid has no central working band".into()))?;
    if layout.tiles[tile].partial {
        return Err(Error::InvalidConfig(format!(
            "probe band of {kind} at m = {m} touches the probe grid border"
        )));
    }
    let cfg = MachineConfig::new(u64::MAX / 4, b)?;
    let mut machine = Machine::new(&layout, cfg, Fidelity::CountOnly)?;
    let mut probe = Probe {
        sigma_from: from,
        spans: HashMap::new(),
        outputs: HashSet::new(),
        fiber_major_resident: 0,
        peak_blocks: 0,
    };
    let mut driver = Driver::new(&layout, &mut machine);
    driver.run_tile(tile, Some((from, to)), Some(&mut probe))?;
    Ok(probe.peak_blocks * b)
}

/// Working-band index owning a vertex (the band that evaluates it).
pub fn evaluating_band(layout: &Layout, x: &Vertex) -> usize {
    let (e, _) = layout.entry(x.raw());
    layout.regions[e.out_region as usize]
        .evaluator
        .expect("output bands have an evaluator") as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::noncompulsory_ceiling;
    use crate::layout::build_layout;

    fn run(kind: LayoutKind, sides: &[u64], s: u32, m: u64, b: u64, seed: u64) -> OracleComparison {
        let g = GridSpec::grid(sides).unwrap();
        let cfg = MachineConfig::new(m, b).unwrap();
        let layout = build_layout(kind, &g, StencilSpec::new(s).unwrap(), cfg).unwrap();
        let plan = SweepPlan::new(&layout);
        run_oracle_compare(&plan, &layout, cfg, seed).unwrap()
    }

    #[test]
    fn every_kind_matches_the_oracle() {
        for (kind, sides, mm, b) in [
            (LayoutKind::Row2D, vec![32u64, 32], 256u64, 4u64),
            (LayoutKind::BlockAlignedColumn2D, vec![32, 32], 96, 4),
            (LayoutKind::BlockAlignedDiagonal2D, vec![32, 32], 96, 4),
            (LayoutKind::Row3D, vec![16, 16, 16], 1024, 4),
            (LayoutKind::BlockAlignedColumnPole3D, vec![16, 16, 16], 512, 4),
            (LayoutKind::BlockAlignedDiagonal2Din3D, vec![16, 16, 16], 512, 4),
            (LayoutKind::HexagonalAlignedDiagonal3D, vec![16, 16, 16], 768, 4),
            (LayoutKind::BlockAlignedColumnND, vec![6, 8, 8, 8], 1024, 4),
        ] {
            let c = run(kind, &sides, 1, mm, b, 7);
            assert!(c.equal, "{kind}: {:?}", c.first_mismatch);
            assert!(c.complete, "{kind}");
            assert!(c.peak_footprint <= mm, "{kind}");
        }
        let c = run(LayoutKind::BlockAlignedDiagonal2D, &[48, 48], 2, 160, 4, 3);
        assert!(c.equal && c.complete);
    }

    #[test]
    fn column_2d_example_meets_its_ceiling() {
        let g = GridSpec::grid(&[64, 64]).unwrap();
        let cfg = MachineConfig::new(64, 4).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let layout = build_layout(LayoutKind::BlockAlignedColumn2D, &g, st, cfg).unwrap();
        let plan = SweepPlan::new(&layout);
        let mut machine = Machine::new(&layout, cfg, Fidelity::CountOnly).unwrap();
        let stats = run_sweep(&plan, &mut machine, &layout).unwrap();
        assert!(machine.run_report().complete);
        let ceiling = noncompulsory_ceiling(
            LayoutKind::BlockAlignedColumn2D,
            &[64, 64],
            1,
            4,
            &layout.ceiling_inputs(),
        )
        .unwrap();
        assert!(stats.noncompulsory() as f64 <= ceiling, "{} > {ceiling}", stats.noncompulsory());
    }

    #[test]
    fn one_band_means_no_noncompulsory_io() {
        let g = GridSpec::grid(&[20, 20]).unwrap();
        let cfg = MachineConfig::new(4096, 4).unwrap();
        let layout = build_layout(LayoutKind::BlockAlignedColumn2D, &g, StencilSpec::new(1).unwrap(), cfg).unwrap();
        assert_eq!(layout.working_band_count(), 1);
        let plan = SweepPlan::new(&layout);
        let mut machine = Machine::new(&layout, cfg, Fidelity::CountOnly).unwrap();
        let stats = run_sweep(&plan, &mut machine, &layout).unwrap();
        assert_eq!(stats.noncompulsory(), 0);
        assert_eq!(stats.compulsory_reads, layout.input_blocks());
        assert_eq!(stats.compulsory_writes, layout.output_blocks());
    }

    #[test]
    fn row_costs_more_than_column() {
        let g = GridSpec::grid(&[256, 256]).unwrap();
        let cfg = MachineConfig::new(512, 8).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let mut counts = Vec::new();
        for kind in [LayoutKind::Row2D, LayoutKind::BlockAlignedColumn2D] {
            let layout = build_layout(kind, &g, st, cfg).unwrap();
            let plan = SweepPlan::new(&layout);
            let mut machine = Machine::new(&layout, cfg, Fidelity::CountOnly).unwrap();
            counts.push(run_sweep(&plan, &mut machine, &layout).unwrap().noncompulsory());
        }
        assert!(counts[0] >= counts[1], "{counts:?}");
    }

    #[test]
    fn mismatched_machine_is_rejected() {
        let g = GridSpec::grid(&[16, 16]).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let cfg = MachineConfig::new(96, 4).unwrap();
        let a = build_layout(LayoutKind::BlockAlignedColumn2D, &g, st, cfg).unwrap();
        let b = a.clone();
        let plan = SweepPlan::new(&a);
        let mut machine = Machine::new(&b, cfg, Fidelity::CountOnly).unwrap();
        assert!(run_sweep(&plan, &mut machine, &a).is_err());
    }
}
