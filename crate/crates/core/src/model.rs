//! Layer and network descriptions, the line-based workload format, and
//! the bundled ResNet50 / MobileNetV2 tables.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A dimension of the convolution loop nest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    N,
    K,
    C,
    Y,
    X,
    R,
    S,
}

impl Dim {
    pub const ALL: [Dim; 7] = [Dim::N, Dim::K, Dim::C, Dim::Y, Dim::X, Dim::R, Dim::S];

    pub fn as_str(self) -> &'static str {
        match self {
            Dim::N => "N",
            Dim::K => "K",
            Dim::C => "C",
            Dim::Y => "Y",
            Dim::X => "X",
            Dim::R => "R",
            Dim::S => "S",
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dim {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "N" => Ok(Dim::N),
            "K" => Ok(Dim::K),
            "C" => Ok(Dim::C),
            "Y" => Ok(Dim::Y),
            "X" => Ok(Dim::X),
            "R" => Ok(Dim::R),
            "S" => Ok(Dim::S),
            other => Err(format!("unknown dimension `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv2D,
    DepthwiseConv,
    PointwiseConv,
    FullyConnected,
    ResidualAdd,
}

impl LayerKind {
    pub fn keyword(self) -> &'static str {
        match self {
            LayerKind::Conv2D => "CONV2D",
            LayerKind::DepthwiseConv => "DWCONV",
            LayerKind::PointwiseConv => "PWCONV",
            LayerKind::FullyConnected => "FC",
            LayerKind::ResidualAdd => "ADD",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "CONV2D" => LayerKind::Conv2D,
            "DWCONV" => LayerKind::DepthwiseConv,
            "PWCONV" => LayerKind::PointwiseConv,
            "FC" => LayerKind::FullyConnected,
            "ADD" => LayerKind::ResidualAdd,
            _ => return None,
        })
    }

    /// Kinds without a cross-channel reduction; their output channel is the
    /// input channel.
    pub fn is_channelwise(self) -> bool {
        matches!(self, LayerKind::DepthwiseConv | LayerKind::ResidualAdd)
    }
}

/// One layer. `y`/`x` are input extents with padding already applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerShape {
    pub name: String,
    pub kind: LayerKind,
    pub k: u64,
    pub c: u64,
    pub y: u64,
    pub x: u64,
    pub r: u64,
    pub s: u64,
    pub stride_y: u64,
    pub stride_x: u64,
}

impl LayerShape {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kind: LayerKind,
        k: u64,
        c: u64,
        y: u64,
        x: u64,
        r: u64,
        s: u64,
        stride_y: u64,
        stride_x: u64,
    ) -> Result<Self> {
        let layer = LayerShape {
            name: name.into(),
            kind,
            k,
            c,
            y,
            x,
            r,
            s,
            stride_y,
            stride_x,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidLayer {
            layer: self.name.clone(),
            reason,
        };
        for (label, v) in [
            ("K", self.k),
            ("C", self.c),
            ("Y", self.y),
            ("X", self.x),
            ("R", self.r),
            ("S", self.s),
            ("strideY", self.stride_y),
            ("strideX", self.stride_x),
        ] {
            if v == 0 {
                return Err(bad(format!("{label} must be at least 1")));
            }
        }
        if self.r > self.y {
            return Err(bad("R exceeds Y".into()));
        }
        if self.s > self.x {
            return Err(bad("S exceeds X".into()));
        }
        match self.kind {
            LayerKind::PointwiseConv if self.r != 1 || self.s != 1 => {
                Err(bad("pointwise convolution requires R = S = 1".into()))
            }
            LayerKind::FullyConnected if self.y != self.r || self.x != self.s => {
                Err(bad("fully-connected layer requires Y = R and X = S".into()))
            }
            LayerKind::DepthwiseConv if self.k != self.c => {
                Err(bad("depthwise convolution requires K = C".into()))
            }
            LayerKind::ResidualAdd
                if self.k != self.c
                    || self.r != 1
                    || self.s != 1
                    || self.stride_y != 1
                    || self.stride_x != 1 =>
            {
                Err(bad(
                    "residual add requires K = C, R = S = 1 and unit stride".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Output rows and columns.
    pub fn output_dims(&self) -> (u64, u64) {
        (
            (self.y - self.r) / self.stride_y + 1,
            (self.x - self.s) / self.stride_x + 1,
        )
    }

    pub fn macs(&self) -> u64 {
        let (yo, xo) = self.output_dims();
        match self.kind {
            LayerKind::Conv2D | LayerKind::PointwiseConv | LayerKind::FullyConnected => {
                self.k * self.c * yo * xo * self.r * self.s
            }
            LayerKind::DepthwiseConv => self.c * yo * xo * self.r * self.s,
            LayerKind::ResidualAdd => self.c * self.y * self.x,
        }
    }

    /// Extent of a loop-nest dimension as written in the layer (`N` is 1).
    pub fn extent(&self, dim: Dim) -> u64 {
        match dim {
            Dim::N => 1,
            Dim::K => self.k,
            Dim::C => self.c,
            Dim::Y => self.y,
            Dim::X => self.x,
            Dim::R => self.r,
            Dim::S => self.s,
        }
    }

    /// Renders the layer as one workload-file line.
    pub fn render(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {}",
            self.name,
            self.kind.keyword(),
            self.k,
            self.c,
            self.y,
            self.x,
            self.r,
            self.s,
            self.stride_y,
            self.stride_x
        )
    }
}

pub fn output_dims(layer: &LayerShape) -> (u64, u64) {
    layer.output_dims()
}

pub fn macs(layer: &LayerShape) -> u64 {
    layer.macs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerClass {
    Early,
    PointWise,
    FullyConnected,
    Residual,
    Late,
}

impl LayerClass {
    pub const ALL: [LayerClass; 5] = [
        LayerClass::Early,
        LayerClass::PointWise,
        LayerClass::FullyConnected,
        LayerClass::Residual,
        LayerClass::Late,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerClass::Early => "early",
            LayerClass::PointWise => "pointwise",
            LayerClass::FullyConnected => "fc",
            LayerClass::Residual => "residual",
            LayerClass::Late => "late",
        }
    }
}

impl fmt::Display for LayerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Channel count at or above which a convolution counts as a late layer.
pub const LATE_CHANNELS: u64 = 512;

/// Classifies a layer. Only the layer's own shape matters; the network
/// position is accepted for interface symmetry with per-network reports.
pub fn classify_layer(layer: &LayerShape, _index: usize, _network: &NetworkModel) -> LayerClass {
    classify(layer)
}

pub fn classify(layer: &LayerShape) -> LayerClass {
    match layer.kind {
        LayerKind::ResidualAdd => LayerClass::Residual,
        LayerKind::FullyConnected => LayerClass::FullyConnected,
        LayerKind::PointwiseConv => LayerClass::PointWise,
        _ if layer.c.max(layer.k) >= LATE_CHANNELS => LayerClass::Late,
        _ => LayerClass::Early,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkModel {
    pub name: String,
    pub layers: Vec<LayerShape>,
}

impl NetworkModel {
    pub fn new(name: impl Into<String>, layers: Vec<LayerShape>) -> Result<Self> {
        let name = name.into();
        if layers.is_empty() {
            return Err(Error::EmptyModel(name));
        }
        let mut seen = HashSet::new();
        for l in &layers {
            if !seen.insert(l.name.as_str()) {
                return Err(Error::DuplicateLayer(l.name.clone()));
            }
        }
        Ok(NetworkModel { name, layers })
    }

    pub fn layer(&self, name: &str) -> Option<&LayerShape> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(LayerShape::macs).sum()
    }

    /// Workload-file text; `parse_model` reads it back unchanged.
    pub fn render(&self) -> String {
        let mut out = format!("# model {}\n", self.name);
        for l in &self.layers {
            out.push_str(&l.render());
            out.push('\n');
        }
        out
    }
}

/// Parses a workload file. The model name is taken from a leading
/// `# model <name>` comment when present, otherwise `fallback_name`.
pub fn parse_model_named(text: &str, fallback_name: &str) -> Result<NetworkModel> {
    let mut name = None;
    let mut layers = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if name.is_none() && layers.is_empty() {
            if let Some(rest) = comment.and_then(|c| c.trim().strip_prefix("model ")) {
                name = Some(rest.trim().to_string());
            }
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let syntax = |message: String| Error::Syntax {
            line: line_no,
            message,
        };
        if fields.len() != 10 {
            return Err(syntax(format!(
                "expected 10 fields `name kind K C Y X R S strideY strideX`, found {}",
                fields.len()
            )));
        }
        let kind = LayerKind::from_keyword(fields[1])
            .ok_or_else(|| syntax(format!("unknown layer kind `{}`", fields[1])))?;
        let mut nums = [0u64; 8];
        for (slot, field) in nums.iter_mut().zip(&fields[2..]) {
            *slot = field
                .parse()
                .map_err(|_| syntax(format!("`{field}` is not a non-negative integer")))?;
        }
        let layer = LayerShape::new(
            fields[0], kind, nums[0], nums[1], nums[2], nums[3], nums[4], nums[5], nums[6], nums[7],
        )?;
        if !seen.insert(layer.name.clone()) {
            return Err(Error::DuplicateLayer(layer.name));
        }
        layers.push(layer);
    }
    NetworkModel::new(name.unwrap_or_else(|| fallback_name.to_string()), layers)
}

pub fn parse_model(text: &str) -> Result<NetworkModel> {
    parse_model_named(text, "model")
}

const RESNET50: &str = include_str!("../data/resnet50.txt");
const MOBILENET_V2: &str = include_str!("../data/mobilenetv2.txt");

pub fn resnet50() -> NetworkModel {
    parse_model_named(RESNET50, "resnet50").expect("bundled resnet50 table is valid")
}

pub fn mobilenet_v2() -> NetworkModel {
    parse_model_named(MOBILENET_V2, "mobilenetv2").expect("bundled mobilenetv2 table is valid")
}

pub fn builtin_models() -> Vec<NetworkModel> {
    vec![resnet50(), mobilenet_v2()]
}

pub fn builtin_model(name: &str) -> Option<NetworkModel> {
    builtin_models()
        .into_iter()
        .find(|m| m.name.eq_ignore_ascii_case(name))
}
