//! Binding a dataflow to a layer, placing it on a PE array, and walking the
//! resulting odometer of tile steps.
//!
//! Internally every directive is expressed over the output-space loop nest
//! `K, C, Yo, Xo, R, S`. A `Y`/`X` directive of input size `sz` and offset
//! `off` covers `(sz - R) / strideY + 1` output rows and must advance by
//! exactly that many rows, so every MAC is executed once.

use std::fmt;

use crate::dataflow::{ClusterLevel, Dataflow, Directive, MapKind, SizeExpr};
use crate::error::{Error, Result};
use crate::model::{Dim, LayerKind, LayerShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoopDim {
    K,
    C,
    Yo,
    Xo,
    R,
    S,
}

impl LoopDim {
    pub const ALL: [LoopDim; 6] = [
        LoopDim::K,
        LoopDim::C,
        LoopDim::Yo,
        LoopDim::Xo,
        LoopDim::R,
        LoopDim::S,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_dim(dim: Dim) -> Option<Self> {
        Some(match dim {
            Dim::N => return None,
            Dim::K => LoopDim::K,
            Dim::C => LoopDim::C,
            Dim::Y => LoopDim::Yo,
            Dim::X => LoopDim::Xo,
            Dim::R => LoopDim::R,
            Dim::S => LoopDim::S,
        })
    }

    pub fn to_dim(self) -> Dim {
        match self {
            LoopDim::K => Dim::K,
            LoopDim::C => Dim::C,
            LoopDim::Yo => Dim::Y,
            LoopDim::Xo => Dim::X,
            LoopDim::R => Dim::R,
            LoopDim::S => Dim::S,
        }
    }
}

impl fmt::Display for LoopDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_dim(), f)
    }
}

/// Number of positions of a `size`-wide window advancing by `offset` inside
/// `extent`. Zero when the window does not fit.
pub fn window_positions(extent: u64, size: u64, offset: u64) -> u64 {
    if size > extent || offset == 0 {
        0
    } else {
        (extent - size) / offset + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundDirective {
    pub level: usize,
    pub dim: LoopDim,
    pub kind: MapKind,
    /// Output-space tile per iteration (per spatial unit).
    pub tile: u64,
    /// Iterations needed to cover a full parent tile.
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundMapping {
    /// The dataflow with every size and offset resolved to a literal.
    pub dataflow: Dataflow,
    pub layer: LayerShape,
    /// Output-space loop extents, indexed by `LoopDim`.
    pub extents: [u64; 6],
    /// Directives in odometer order: outer level first, outermost first.
    pub directives: Vec<BoundDirective>,
}

fn required_dims(kind: LayerKind) -> &'static [Dim] {
    match kind {
        LayerKind::ResidualAdd => &[Dim::C, Dim::Y, Dim::X],
        LayerKind::DepthwiseConv => &[Dim::C, Dim::Y, Dim::X, Dim::R, Dim::S],
        _ => &[Dim::K, Dim::C, Dim::Y, Dim::X, Dim::R, Dim::S],
    }
}

/// Channel-wise layers have no K loop: in each level a K directive is
/// re-aimed at C. When a level holds both K and C, the spatial one survives
/// (K on a tie) and the other is dropped.
fn alias_channelwise(level: &ClusterLevel) -> Vec<Directive> {
    let k = level.directives.iter().position(|d| d.dim == Dim::K);
    let c = level.directives.iter().position(|d| d.dim == Dim::C);
    let drop = match (k, c) {
        (Some(k), Some(c)) => {
            let c_wins = level.directives[c].kind == MapKind::Spatial
                && level.directives[k].kind == MapKind::Temporal;
            Some(if c_wins { k } else { c })
        }
        _ => None,
    };
    level
        .directives
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != drop)
        .map(|(_, d)| {
            let mut d = *d;
            if d.dim == Dim::K {
                d.dim = Dim::C;
            }
            d
        })
        .collect()
}

pub fn bind(df: &Dataflow, layer: &LayerShape) -> Result<BoundMapping> {
    df.validate()?;
    layer.validate()?;
    let degenerate = |reason: String| Error::DegenerateMapping {
        dataflow: df.name.clone(),
        layer: layer.name.clone(),
        reason,
    };

    let levels: Vec<Vec<Directive>> = df
        .levels
        .iter()
        .map(|l| {
            let ds = if layer.kind.is_channelwise() {
                alias_channelwise(l)
            } else {
                l.directives.clone()
            };
            ds.into_iter().filter(|d| d.dim != Dim::N).collect()
        })
        .collect();

    for &dim in required_dims(layer.kind) {
        if !levels.iter().flatten().any(|d| d.dim == dim) {
            return Err(Error::UncoveredDim {
                dataflow: df.name.clone(),
                layer: layer.name.clone(),
                dim: dim.to_string(),
            });
        }
    }
    if let Some(i) = levels.iter().position(Vec::is_empty) {
        return Err(degenerate(format!("level {i} maps no loop dimension")));
    }

    let (yo, xo) = layer.output_dims();
    let k_extent = if layer.kind.is_channelwise() {
        1
    } else {
        layer.k
    };
    let extents = [k_extent, layer.c, yo, xo, layer.r, layer.s];

    let mut parent = extents;
    let mut directives = Vec::new();
    let mut resolved_levels = Vec::new();
    for (level_idx, level) in levels.iter().enumerate() {
        let mut resolved = Vec::new();
        for d in level {
            let dim = LoopDim::from_dim(d.dim).expect("N directives were dropped");
            let size = d.size.eval(layer);
            let offset = d.offset.eval(layer);
            if size == 0 || offset == 0 {
                return Err(degenerate(format!(
                    "`{d}` resolves to a zero size or offset"
                )));
            }
            // Offset above size is caught below for every dimension except
            // strided windows narrower than their stride, where the skipped
            // inputs are never read.
            let p = parent[dim.index()];
            let (tile, lit_size, lit_offset) = match dim {
                LoopDim::Yo | LoopDim::Xo => {
                    let (window, stride) = if dim == LoopDim::Yo {
                        (layer.r, layer.stride_y)
                    } else {
                        (layer.s, layer.stride_x)
                    };
                    if size < window {
                        return Err(degenerate(format!(
                            "`{d}` resolves to {size}, smaller than the {window}-wide filter window"
                        )));
                    }
                    let outputs = (size - window) / stride + 1;
                    if offset % stride != 0 || offset / stride != outputs {
                        return Err(degenerate(format!(
                            "`{d}` covers {outputs} outputs per step but advances by {offset} \
                             inputs at stride {stride}; tiles must partition the outputs"
                        )));
                    }
                    let tile = outputs.min(p);
                    (tile, (tile - 1) * stride + window, tile * stride)
                }
                _ => {
                    if offset != size {
                        return Err(degenerate(format!(
                            "`{d}`: offset {offset} != size {size} on a non-window dimension \
                             would repeat or skip work"
                        )));
                    }
                    let tile = size.min(p);
                    (tile, tile, tile)
                }
            };
            directives.push(BoundDirective {
                level: level_idx,
                dim,
                kind: d.kind,
                tile,
                steps: p.div_ceil(tile),
            });
            parent[dim.index()] = tile;
            resolved.push(Directive {
                dim: d.dim,
                kind: d.kind,
                size: SizeExpr::literal(lit_size),
                offset: SizeExpr::literal(lit_offset),
            });
        }
        resolved_levels.push(ClusterLevel {
            directives: resolved,
        });
    }

    for (i, d) in directives.iter().enumerate() {
        let nested = directives[i + 1..]
            .iter()
            .any(|e| e.dim == d.dim && e.level > d.level);
        if d.kind == MapKind::Spatial && nested && extents[d.dim.index()] % d.tile != 0 {
            return Err(degenerate(format!(
                "spatial {} tile {} does not divide extent {} and is refined by an inner level",
                d.dim,
                d.tile,
                extents[d.dim.index()]
            )));
        }
    }

    Ok(BoundMapping {
        dataflow: Dataflow {
            name: df.name.clone(),
            levels: resolved_levels,
            retention: df.retention,
        },
        layer: layer.clone(),
        extents,
        directives,
    })
}

impl BoundMapping {
    pub fn steps(&self) -> Vec<u64> {
        self.directives.iter().map(|d| d.steps).collect()
    }

    pub fn num_levels(&self) -> usize {
        self.dataflow.levels.len()
    }

    /// Units requested by each spatial directive of `level`.
    pub fn spatial_steps(&self, level: usize) -> Vec<u64> {
        self.directives
            .iter()
            .filter(|d| d.level == level && d.kind == MapKind::Spatial)
            .map(|d| d.steps)
            .collect()
    }

    /// Allocates PEs to the spatial directives and fixes the odometer.
    pub fn place(&self, num_pes: u64) -> Placement {
        let num_pes = num_pes.max(1);
        let mut units = vec![1u64; self.directives.len()];
        let inner = self.num_levels() - 1;
        let mut allocate = |level: usize, cap: u64| -> u64 {
            let mut product = 1u64;
            for (j, d) in self.directives.iter().enumerate().rev() {
                if d.level == level && d.kind == MapKind::Spatial {
                    let u = d.steps.min(cap / product).max(1);
                    units[j] = u;
                    product *= u;
                }
            }
            product
        };
        let cluster_size = allocate(inner, num_pes);
        let cluster_count = if inner > 0 {
            allocate(0, (num_pes / cluster_size).max(1))
        } else {
            1
        };
        let spatial: Vec<usize> = (0..self.directives.len())
            .filter(|&j| self.directives[j].kind == MapKind::Spatial)
            .collect();
        Placement {
            bound: self.clone(),
            units,
            spatial,
            cluster_size,
            cluster_count,
        }
    }
}

/// Half-open index interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl Span {
    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// The loop ranges one PE works on during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeTile {
    /// Stable PE identifier: mixed-radix index over the allocated units.
    pub pe: usize,
    pub ranges: [Span; 6],
}

impl PeTile {
    pub fn range(&self, dim: LoopDim) -> Span {
        self.ranges[dim.index()]
    }

    pub fn macs(&self) -> u64 {
        self.ranges.iter().map(Span::len).product()
    }
}

/// A bound mapping placed on a concrete PE count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub bound: BoundMapping,
    /// Units allocated to each directive (1 for temporal directives).
    pub units: Vec<u64>,
    /// Indices of spatial directives.
    pub spatial: Vec<usize>,
    pub cluster_size: u64,
    pub cluster_count: u64,
}

impl Placement {
    pub fn utilized_pes(&self) -> u64 {
        self.cluster_size * self.cluster_count
    }

    pub fn num_loops(&self) -> usize {
        self.bound.directives.len()
    }

    /// Range of `dim` after applying directives `0..upto`, with spatial
    /// directives at the given units. `None` when the PE falls off the edge.
    fn dim_range(&self, idx: &[u64], unit: &[u64], dim: LoopDim, upto: usize) -> Option<Span> {
        let mut span = Span {
            lo: 0,
            hi: self.bound.extents[dim.index()],
        };
        for (j, d) in self.bound.directives[..upto].iter().enumerate() {
            if d.dim != dim {
                continue;
            }
            let slot = match d.kind {
                MapKind::Temporal => idx[j],
                MapKind::Spatial => idx[j] * self.units[j] + unit[j],
            };
            let lo = span.lo + slot * d.tile;
            if lo >= span.hi {
                return None;
            }
            span = Span {
                lo,
                hi: (lo + d.tile).min(span.hi),
            };
        }
        Some(span)
    }

    /// Iterations of directive `j` within its current parent tile. Only
    /// `idx[..j]` is read.
    fn parent_steps(&self, idx: &[u64], j: usize) -> u64 {
        let d = &self.bound.directives[j];
        let zeros = vec![0u64; self.num_loops()];
        let parent = self
            .dim_range(idx, &zeros, d.dim, j)
            .expect("unit 0 is always inside the parent tile");
        parent.len().div_ceil(d.tile)
    }

    /// Odometer radix of loop `j` given the outer indices `idx[..j]`. A
    /// spatial directive's loop counts folds over its allocated units.
    pub fn radix(&self, idx: &[u64], j: usize) -> u64 {
        let n = self.parent_steps(idx, j);
        match self.bound.directives[j].kind {
            MapKind::Temporal => n,
            MapKind::Spatial => n.div_ceil(self.units[j]),
        }
    }

    /// Units of spatial directive `j` active at this step.
    pub fn active_units(&self, idx: &[u64], j: usize) -> u64 {
        let n = self.parent_steps(idx, j);
        (n - idx[j] * self.units[j]).min(self.units[j])
    }

    pub fn first(&self) -> Vec<u64> {
        vec![0; self.num_loops()]
    }

    /// Advances to the next step; `false` after the last one.
    pub fn next(&self, idx: &mut [u64]) -> bool {
        for j in (0..idx.len()).rev() {
            if idx[j] + 1 < self.radix(idx, j) {
                idx[j] += 1;
                for v in &mut idx[j + 1..] {
                    *v = 0;
                }
                return true;
            }
        }
        false
    }

    /// Steps back to the previous step; `false` at the first one.
    pub fn prev(&self, idx: &mut [u64]) -> bool {
        let Some(j) = (0..idx.len()).rev().find(|&j| idx[j] > 0) else {
            return false;
        };
        idx[j] -= 1;
        for i in j + 1..idx.len() {
            idx[i] = self.radix(idx, i) - 1;
        }
        true
    }

    /// Active PEs and their tiles at step `idx`, in PE-id order.
    pub fn pe_tiles(&self, idx: &[u64]) -> Vec<PeTile> {
        let m = self.num_loops();
        let active: Vec<u64> = self
            .spatial
            .iter()
            .map(|&j| self.active_units(idx, j))
            .collect();
        let total: u64 = active.iter().product();
        let mut tiles = Vec::with_capacity(total as usize);
        let mut unit = vec![0u64; m];
        let mut counter = vec![0u64; self.spatial.len()];
        for _ in 0..total {
            let mut pe = 0u64;
            for (slot, &j) in self.spatial.iter().enumerate() {
                unit[j] = counter[slot];
                pe = pe * self.units[j] + counter[slot];
            }
            let ranges = LoopDim::ALL.map(|d| {
                self.dim_range(idx, &unit, d, m)
                    .expect("active units stay inside their parent tile")
            });
            tiles.push(PeTile {
                pe: pe as usize,
                ranges,
            });
            for slot in (0..counter.len()).rev() {
                counter[slot] += 1;
                if counter[slot] < active[slot] {
                    break;
                }
                counter[slot] = 0;
            }
        }
        tiles
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{self, builtin_dataflows, parse_dataflow};
    use crate::model::resnet50;

    fn conv(k: u64, c: u64, y: u64, r: u64, stride: u64) -> LayerShape {
        LayerShape::new("t", LayerKind::Conv2D, k, c, y, y, r, r, stride, stride).unwrap()
    }

    #[test]
    fn window_positions_match_enumeration() {
        for extent in 1..=32u64 {
            for size in 1..=extent + 1 {
                for offset in 1..=size {
                    let brute = (0..extent)
                        .step_by(offset as usize)
                        .filter(|o| o + size <= extent)
                        .count() as u64;
                    assert_eq!(window_positions(extent, size, offset), brute);
                }
            }
        }
    }

    #[test]
    fn nlr_on_conv1_needs_three_units() {
        let conv1 = resnet50().layers[0].clone();
        let b = bind(&dataflow::nlr(), &conv1).unwrap();
        let c = b.directives.iter().find(|d| d.dim == LoopDim::C).unwrap();
        assert_eq!((c.kind, c.steps), (MapKind::Spatial, 3));
        assert_eq!(b.place(256).utilized_pes(), 3);
    }

    #[test]
    fn ws_on_full_window_layer_has_one_y_step() {
        let b = bind(&dataflow::weight_stationary(), &conv(2, 2, 5, 5, 1)).unwrap();
        let y = b.directives.iter().find(|d| d.dim == LoopDim::Yo).unwrap();
        assert_eq!(y.steps, 1);
    }

    #[test]
    fn shidiannao_rows_per_cluster() {
        let b = bind(&dataflow::shidiannao(), &conv(1, 1, 9, 3, 1)).unwrap();
        let y = b.directives.iter().find(|d| d.dim == LoopDim::Yo).unwrap();
        assert_eq!((y.kind, y.steps), (MapKind::Spatial, 7));
        assert_eq!(y.steps, window_positions(9, 3, 1));
    }

    #[test]
    fn nvdla_splits_into_four_clusters_of_64() {
        let b = bind(&dataflow::nvdla(), &conv(512, 512, 9, 3, 1)).unwrap();
        let p = b.place(256);
        assert_eq!((p.cluster_size, p.cluster_count), (64, 4));
    }

    #[test]
    fn eyeriss_on_fc_uses_one_pe() {
        let fc = resnet50().layers.last().unwrap().clone();
        assert_eq!(fc.kind, LayerKind::FullyConnected);
        let p = bind(&dataflow::eyeriss(), &fc).unwrap().place(256);
        assert_eq!(p.utilized_pes(), 1);
    }

    #[test]
    fn binding_is_idempotent() {
        for layer in resnet50().layers.iter().step_by(5) {
            for df in builtin_dataflows() {
                let once = bind(&df, layer).unwrap();
                let twice = bind(&once.dataflow, layer).unwrap();
                assert_eq!(once.steps(), twice.steps(), "{} {}", df.name, layer.name);
                assert_eq!(once.directives, twice.directives);
            }
        }
    }

    #[test]
    fn bind_errors() {
        let no_s = parse_dataflow(
            "dataflow t retention=none\ntemporal K 1 1\ntemporal C 1 1\ntemporal Y |R| 1\n\
             temporal X |S| 1\nspatial R |R| |R|\n",
        )
        .unwrap();
        let err = bind(&no_s, &conv(2, 2, 4, 3, 1)).unwrap_err();
        assert!(
            matches!(err, Error::UncoveredDim { ref dim, .. } if dim == "S"),
            "{err}"
        );

        let skip = parse_dataflow(
            "dataflow t retention=none\ntemporal K 1 1\ntemporal C 1 1\ntemporal Y |R| 2\n\
             temporal X |S| 1\ntemporal R |R| |R|\ntemporal S |S| |S|\n",
        )
        .unwrap();
        let err = bind(&skip, &conv(2, 2, 4, 3, 1)).unwrap_err();
        assert!(err.to_string().contains("advances by 2"), "{err}");

        let overlap = parse_dataflow(
            "dataflow t retention=none\ntemporal K 2 1\ntemporal C 1 1\ntemporal Y |R| 1\n\
             temporal X |S| 1\ntemporal R |R| |R|\ntemporal S |S| |S|\n",
        )
        .unwrap();
        assert!(matches!(
            bind(&overlap, &conv(2, 2, 4, 3, 1)),
            Err(Error::DegenerateMapping { .. })
        ));

        let narrow = parse_dataflow(
            "dataflow t retention=none\ntemporal K 1 1\ntemporal C 1 1\ntemporal Y 1 1\n\
             temporal X |S| 1\ntemporal R |R| |R|\ntemporal S |S| |S|\n",
        )
        .unwrap();
        assert!(matches!(
            bind(&narrow, &conv(2, 2, 4, 3, 1)),
            Err(Error::DegenerateMapping { .. })
        ));
    }

    #[test]
    fn depthwise_aliases_k_onto_c() {
        let dw =
            LayerShape::new("dw", LayerKind::DepthwiseConv, 32, 32, 10, 10, 3, 3, 1, 1).unwrap();
        let b = bind(&dataflow::nlr(), &dw).unwrap();
        assert_eq!(b.extents[LoopDim::K.index()], 1);
        assert!(b.directives.iter().all(|d| d.dim != LoopDim::K));
        let c: Vec<_> = b
            .directives
            .iter()
            .filter(|d| d.dim == LoopDim::C)
            .collect();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, MapKind::Spatial);
        let nv = bind(&dataflow::nvdla(), &dw).unwrap().place(256);
        assert_eq!(nv.utilized_pes(), 32);
    }

    #[test]
    fn odometer_walks_every_mac_once() {
        let layers = [
            conv(3, 5, 7, 3, 1),
            conv(4, 3, 8, 2, 2),
            LayerShape::new("dw", LayerKind::DepthwiseConv, 3, 3, 6, 6, 2, 2, 1, 1).unwrap(),
            LayerShape::new("add", LayerKind::ResidualAdd, 3, 3, 5, 4, 1, 1, 1, 1).unwrap(),
        ];
        for layer in &layers {
            for df in builtin_dataflows() {
                for pes in [1, 3, 8, 64] {
                    let p = bind(&df, layer).unwrap().place(pes);
                    let mut idx = p.first();
                    let mut total = 0;
                    let mut steps = 0;
                    loop {
                        let tiles = p.pe_tiles(&idx);
                        assert!(!tiles.is_empty());
                        assert!(tiles.len() as u64 <= p.utilized_pes());
                        total += tiles.iter().map(PeTile::macs).sum::<u64>();
                        steps += 1;
                        let mut back = idx.clone();
                        if !p.next(&mut idx) {
                            break;
                        }
                        let mut fwd = idx.clone();
                        assert!(p.prev(&mut fwd));
                        assert_eq!(fwd, back);
                        back.clear();
                    }
                    assert_eq!(total, layer.macs(), "{} {} pes={pes}", df.name, layer.name);
                    assert!(steps >= 1);
                }
            }
        }
    }
}
