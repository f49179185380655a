//! The loop-mapping language: ordered temporal/spatial directives grouped
//! into at most two cluster levels, plus the five builtin dataflows.
//!
//! File format:
//!
//! ```text
//! dataflow <name> retention=<none|stationary|halo>
//! level
//! temporal K 1 1
//! spatial Y |R| sy
//! temporal X 7*sx+|S| 8*sx
//! level
//! spatial X |S| sx
//! ```
//!
//! Sizes and offsets are sums of terms: an integer, `|D|` (the layer's
//! extent of `D`), or `sy`/`sx` optionally scaled as `n*sy`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Dim, LayerShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrideAxis {
    Y,
    X,
}

/// `constant + stride_mult * stride + |dim|`, each term optional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SizeExpr {
    pub constant: u64,
    pub stride: Option<(StrideAxis, u64)>,
    pub dim: Option<Dim>,
}

impl SizeExpr {
    pub const fn literal(n: u64) -> Self {
        SizeExpr {
            constant: n,
            stride: None,
            dim: None,
        }
    }

    pub const fn dim_ref(dim: Dim) -> Self {
        SizeExpr {
            constant: 0,
            stride: None,
            dim: Some(dim),
        }
    }

    pub const fn dim_ref_plus(dim: Dim, constant: u64) -> Self {
        SizeExpr {
            constant,
            stride: None,
            dim: Some(dim),
        }
    }

    pub const fn stride(axis: StrideAxis, mult: u64) -> Self {
        SizeExpr {
            constant: 0,
            stride: Some((axis, mult)),
            dim: None,
        }
    }

    pub const fn with_dim(mut self, dim: Dim) -> Self {
        self.dim = Some(dim);
        self
    }

    pub fn as_literal(&self) -> Option<u64> {
        match (self.stride, self.dim) {
            (None, None) => Some(self.constant),
            _ => None,
        }
    }

    pub fn eval(&self, layer: &LayerShape) -> u64 {
        let stride = match self.stride {
            Some((StrideAxis::Y, m)) => m * layer.stride_y,
            Some((StrideAxis::X, m)) => m * layer.stride_x,
            None => 0,
        };
        self.constant + stride + self.dim.map_or(0, |d| layer.extent(d))
    }
}

impl fmt::Display for SizeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if self.constant != 0 || (self.stride.is_none() && self.dim.is_none()) {
            terms.push(self.constant.to_string());
        }
        if let Some((axis, m)) = self.stride {
            let name = match axis {
                StrideAxis::Y => "sy",
                StrideAxis::X => "sx",
            };
            terms.push(if m == 1 {
                name.to_string()
            } else {
                format!("{m}*{name}")
            });
        }
        if let Some(d) = self.dim {
            terms.push(format!("|{d}|"));
        }
        f.write_str(&terms.join("+"))
    }
}

impl FromStr for SizeExpr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let mut expr = SizeExpr {
            constant: 0,
            stride: None,
            dim: None,
        };
        if s.is_empty() {
            return Err("empty size expression".into());
        }
        for term in s.split('+') {
            if let Some(inner) = term.strip_prefix('|').and_then(|t| t.strip_suffix('|')) {
                if expr.dim.is_some() {
                    return Err(format!("`{s}`: at most one |D| term"));
                }
                expr.dim = Some(inner.parse()?);
                continue;
            }
            let (mult, name) = match term.split_once('*') {
                Some((m, n)) => (
                    m.parse::<u64>()
                        .map_err(|_| format!("`{s}`: bad multiplier `{m}`"))?,
                    n,
                ),
                None => (1, term),
            };
            let axis = match name {
                "sy" => Some(StrideAxis::Y),
                "sx" => Some(StrideAxis::X),
                _ => None,
            };
            match axis {
                Some(axis) => {
                    if expr.stride.is_some() {
                        return Err(format!("`{s}`: at most one stride term"));
                    }
                    expr.stride = Some((axis, mult));
                }
                None if term.contains('*') => return Err(format!("`{s}`: bad term `{term}`")),
                None => {
                    expr.constant += term
                        .parse::<u64>()
                        .map_err(|_| format!("`{s}`: bad term `{term}`"))?;
                }
            }
        }
        Ok(expr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    Temporal,
    Spatial,
}

impl MapKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MapKind::Temporal => "temporal",
            MapKind::Spatial => "spatial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Directive {
    pub dim: Dim,
    pub kind: MapKind,
    pub size: SizeExpr,
    pub offset: SizeExpr,
}

impl Directive {
    pub fn temporal(dim: Dim, size: SizeExpr, offset: SizeExpr) -> Self {
        Directive {
            dim,
            kind: MapKind::Temporal,
            size,
            offset,
        }
    }

    pub fn spatial(dim: Dim, size: SizeExpr, offset: SizeExpr) -> Self {
        Directive {
            dim,
            kind: MapKind::Spatial,
            size,
            offset,
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.kind.keyword(),
            self.dim,
            self.size,
            self.offset
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterLevel {
    pub directives: Vec<Directive>,
}

/// What a PE may keep between consecutive tile steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Retention {
    /// Nothing survives a step.
    None,
    /// A PE keeps its tile of a tensor while that tile is unchanged.
    Stationary,
    /// As `Stationary`, and words already held anywhere in the array are
    /// forwarded between neighbours instead of crossing the NoC.
    StationaryPlusHalo,
}

impl Retention {
    pub fn keyword(self) -> &'static str {
        match self {
            Retention::None => "none",
            Retention::Stationary => "stationary",
            Retention::StationaryPlusHalo => "halo",
        }
    }
}

pub const MAX_LEVELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dataflow {
    pub name: String,
    pub levels: Vec<ClusterLevel>,
    pub retention: Retention,
}

impl Dataflow {
    /// Checks the structural invariants that do not need a layer.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidDataflow {
            dataflow: self.name.clone(),
            reason,
        };
        if self.levels.is_empty() || self.levels.len() > MAX_LEVELS {
            return Err(bad(format!(
                "expected 1 to {MAX_LEVELS} levels, found {}",
                self.levels.len()
            )));
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.directives.is_empty() {
                return Err(bad(format!("level {i} has no directives")));
            }
            for (j, d) in level.directives.iter().enumerate() {
                if level.directives[..j].iter().any(|e| e.dim == d.dim) {
                    return Err(bad(format!(
                        "dimension {} appears twice in level {i}",
                        d.dim
                    )));
                }
                if let (Some(size), Some(offset)) = (d.size.as_literal(), d.offset.as_literal()) {
                    if size == 0 || offset == 0 {
                        return Err(bad(format!("`{d}`: size and offset must be at least 1")));
                    }
                    if offset > size {
                        return Err(bad(format!("`{d}`: offset exceeds size")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn directives(&self) -> impl Iterator<Item = (usize, &Directive)> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.directives.iter().map(move |d| (i, d)))
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "dataflow {} retention={}\n",
            self.name,
            self.retention.keyword()
        );
        for level in &self.levels {
            out.push_str("level\n");
            for d in &level.directives {
                out.push_str(&d.to_string());
                out.push('\n');
            }
        }
        out
    }

    /// One-line summary of the loop order, `/` separating levels and
    /// spatial dimensions in brackets.
    pub fn loop_order(&self) -> String {
        self.levels
            .iter()
            .map(|l| {
                l.directives
                    .iter()
                    .map(|d| match d.kind {
                        MapKind::Temporal => d.dim.to_string(),
                        MapKind::Spatial => format!("[{}]", d.dim),
                    })
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("/")
    }
}

pub fn parse_dataflow(text: &str) -> Result<Dataflow> {
    let mut name = None;
    let mut retention = None;
    let mut levels: Vec<ClusterLevel> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let syntax = |message: String| Error::Syntax {
            line: line_no,
            message,
        };
        let Some(&head) = fields.first() else {
            continue;
        };
        match head {
            "dataflow" => {
                if name.is_some() {
                    return Err(syntax("duplicate `dataflow` header".into()));
                }
                let [_, n, ret] = fields[..] else {
                    return Err(syntax(
                        "expected `dataflow <name> retention=<none|stationary|halo>`".into(),
                    ));
                };
                retention = Some(match ret.strip_prefix("retention=") {
                    Some("none") => Retention::None,
                    Some("stationary") => Retention::Stationary,
                    Some("halo") => Retention::StationaryPlusHalo,
                    _ => return Err(syntax(format!("bad retention `{ret}`"))),
                });
                name = Some(n.to_string());
            }
            _ if name.is_none() => {
                return Err(syntax("expected `dataflow` header first".into()));
            }
            "level" => {
                if fields.len() != 1 {
                    return Err(syntax("`level` takes no arguments".into()));
                }
                if levels.last().map_or(true, |l| !l.directives.is_empty()) {
                    levels.push(ClusterLevel {
                        directives: Vec::new(),
                    });
                }
            }
            "temporal" | "spatial" => {
                let [_, dim, size, offset] = fields[..] else {
                    return Err(syntax(format!("expected `{head} <DIM> <size> <offset>`")));
                };
                let kind = if head == "temporal" {
                    MapKind::Temporal
                } else {
                    MapKind::Spatial
                };
                let directive = Directive {
                    dim: dim.parse().map_err(syntax)?,
                    kind,
                    size: size.parse().map_err(syntax)?,
                    offset: offset.parse().map_err(syntax)?,
                };
                if levels.is_empty() {
                    levels.push(ClusterLevel {
                        directives: Vec::new(),
                    });
                }
                levels.last_mut().unwrap().directives.push(directive);
            }
            other => return Err(syntax(format!("unknown keyword `{other}`"))),
        }
    }
    let name = name.ok_or(Error::Syntax {
        line: 1,
        message: "missing `dataflow` header".into(),
    })?;
    if levels.last().is_some_and(|l| l.directives.is_empty()) {
        levels.pop();
    }
    let df = Dataflow {
        name,
        levels,
        retention: retention.unwrap_or(Retention::None),
    };
    df.validate()?;
    Ok(df)
}

fn lit(n: u64) -> SizeExpr {
    SizeExpr::literal(n)
}

fn ext(d: Dim) -> SizeExpr {
    SizeExpr::dim_ref(d)
}

fn sy() -> SizeExpr {
    SizeExpr::stride(StrideAxis::Y, 1)
}

fn sx() -> SizeExpr {
    SizeExpr::stride(StrideAxis::X, 1)
}

fn level(directives: Vec<Directive>) -> ClusterLevel {
    ClusterLevel { directives }
}

use Directive as D;

pub fn nlr() -> Dataflow {
    Dataflow {
        name: "NLR".into(),
        retention: Retention::None,
        levels: vec![level(vec![
            D::temporal(Dim::K, lit(1), lit(1)),
            D::temporal(Dim::Y, ext(Dim::R), sy()),
            D::temporal(Dim::X, ext(Dim::S), sx()),
            D::temporal(Dim::R, ext(Dim::R), ext(Dim::R)),
            D::temporal(Dim::S, ext(Dim::S), ext(Dim::S)),
            D::spatial(Dim::C, lit(1), lit(1)),
        ])],
    }
}

pub fn weight_stationary() -> Dataflow {
    Dataflow {
        name: "WS".into(),
        retention: Retention::Stationary,
        levels: vec![level(vec![
            D::temporal(Dim::K, lit(1), lit(1)),
            D::temporal(Dim::C, lit(1), lit(1)),
            D::temporal(Dim::R, ext(Dim::R), ext(Dim::R)),
            D::temporal(Dim::S, ext(Dim::S), ext(Dim::S)),
            D::temporal(Dim::Y, ext(Dim::R), sy()),
            D::spatial(Dim::X, ext(Dim::S), sx()),
        ])],
    }
}

/// Output stationary: one output row per cluster, eight output columns per
/// cluster step, one column per PE.
pub fn shidiannao() -> Dataflow {
    Dataflow {
        name: "ShiDiannao".into(),
        retention: Retention::StationaryPlusHalo,
        levels: vec![
            level(vec![
                D::temporal(Dim::K, lit(1), lit(1)),
                D::temporal(Dim::C, lit(1), lit(1)),
                D::temporal(Dim::R, ext(Dim::R), ext(Dim::R)),
                D::temporal(Dim::S, ext(Dim::S), ext(Dim::S)),
                D::spatial(Dim::Y, ext(Dim::R), sy()),
                D::temporal(
                    Dim::X,
                    SizeExpr::stride(StrideAxis::X, 7).with_dim(Dim::S),
                    SizeExpr::stride(StrideAxis::X, 8),
                ),
            ]),
            level(vec![D::spatial(Dim::X, ext(Dim::S), sx())]),
        ],
    }
}

pub fn eyeriss() -> Dataflow {
    Dataflow {
        name: "Eyeriss".into(),
        retention: Retention::Stationary,
        levels: vec![
            level(vec![
                D::temporal(Dim::K, lit(2), lit(2)),
                D::temporal(Dim::C, lit(2), lit(2)),
                D::spatial(Dim::Y, ext(Dim::R), sy()),
            ]),
            level(vec![
                D::spatial(Dim::X, ext(Dim::S), sx()),
                D::spatial(Dim::S, lit(1), lit(1)),
                D::temporal(Dim::R, ext(Dim::R), ext(Dim::R)),
            ]),
        ],
    }
}

pub fn nvdla() -> Dataflow {
    Dataflow {
        name: "NVDLA".into(),
        retention: Retention::Stationary,
        levels: vec![
            level(vec![
                D::spatial(Dim::K, lit(1), lit(1)),
                D::temporal(Dim::C, lit(64), lit(64)),
            ]),
            level(vec![
                D::spatial(Dim::C, lit(1), lit(1)),
                D::temporal(Dim::Y, ext(Dim::R), sy()),
                D::temporal(Dim::X, ext(Dim::S), sx()),
                D::temporal(Dim::R, ext(Dim::R), ext(Dim::R)),
                D::temporal(Dim::S, ext(Dim::S), ext(Dim::S)),
            ]),
        ],
    }
}

pub fn builtin_dataflows() -> Vec<Dataflow> {
    vec![nlr(), weight_stationary(), shidiannao(), eyeriss(), nvdla()]
}

pub fn builtin_dataflow(name: &str) -> Option<Dataflow> {
    builtin_dataflows()
        .into_iter()
        .find(|d| d.name.eq_ignore_ascii_case(name))
}

/// Per-PE tile sizes `(K, C, Y, X, R, S)` as written in the dataflow: the
/// innermost directive on each dimension, evaluated against `layer`.
pub fn tile_sizes(df: &Dataflow, layer: &LayerShape) -> [u64; 6] {
    let order = [Dim::K, Dim::C, Dim::Y, Dim::X, Dim::R, Dim::S];
    order.map(|dim| {
        df.directives()
            .filter(|(_, d)| d.dim == dim)
            .last()
            .map_or(layer.extent(dim), |(_, d)| d.size.eval(layer))
    })
}
