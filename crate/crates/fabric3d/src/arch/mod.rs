//! Architecture descriptions: parsing, validation, enumeration.
//!
//! An [`ArchSpec`] is the single declarative input that every other stage
//! consumes. It covers the planar FPGA parameters (grid, channels, LUT and
//! cluster sizes) plus the vertical dimension: how many layers, which
//! connection type joins them, where the 3D switch blocks sit, and how
//! expensive a vertical hop is relative to a planar switch.

mod parse;
pub mod space;

pub use parse::parse_arch;

use sha2::{Digest, Sha256};
use std::fmt;

use crate::error::{Error, Result};

/// What occupies a grid tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    Clb,
    Dsp,
    Bram,
    Io,
    /// Channels pass over the tile but it hosts no pins at all.
    RoutingOnly,
}

impl BlockKind {
    pub fn token(self) -> &'static str {
        match self {
            BlockKind::Clb => "clb",
            BlockKind::Dsp => "dsp",
            BlockKind::Bram => "bram",
            BlockKind::Io => "io",
            BlockKind::RoutingOnly => "routing",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "clb" => BlockKind::Clb,
            "dsp" => BlockKind::Dsp,
            "bram" => BlockKind::Bram,
            "io" => BlockKind::Io,
            "routing" => BlockKind::RoutingOnly,
            _ => return None,
        })
    }
}

/// Layer organization class for the whole stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeteroClass {
    /// Every layer is identical.
    Homogeneous,
    /// Logic sits on some layers while others carry routing only.
    NonLogicHetero,
    /// Layers carry different logic mixes; routing exists everywhere.
    LogicHetero,
}

impl HeteroClass {
    pub fn token(self) -> &'static str {
        match self {
            HeteroClass::Homogeneous => "homogeneous",
            HeteroClass::NonLogicHetero => "non_logic_hetero",
            HeteroClass::LogicHetero => "logic_hetero",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "homogeneous" => HeteroClass::Homogeneous,
            "non_logic_hetero" => HeteroClass::NonLogicHetero,
            "logic_hetero" => HeteroClass::LogicHetero,
            _ => return None,
        })
    }
}

/// One layer of the stack: its class plus an optional per-column block map.
///
/// An empty `columns` list means the default layout: IO ring on the
/// perimeter (grids of at least 3x3), CLBs everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub class: HeteroClass,
    pub columns: Vec<BlockKind>,
}

impl LayerSpec {
    pub fn homogeneous() -> Self {
        LayerSpec { class: HeteroClass::Homogeneous, columns: Vec::new() }
    }

    /// True when every column is routing-only (no pins anywhere, no IO ring).
    pub fn is_routing_only(&self) -> bool {
        !self.columns.is_empty() && self.columns.iter().all(|c| *c == BlockKind::RoutingOnly)
    }
}

/// How layers talk to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConnectionType {
    /// Strictly planar; a 2D baseline.
    None2D,
    /// All grid input and output pins may cross layers.
    Cb,
    /// Output pins only.
    Cbo,
    /// Crossings confined to 3D switch blocks.
    Sb,
    /// CB union SB.
    Hybrid,
    /// CB-O union SB.
    HybridO,
    /// User-defined pin-class / track-subset rules.
    Custom,
}

impl ConnectionType {
    /// Types whose vertical structure is parameterized by an [`SbPattern`].
    pub fn uses_pattern(self) -> bool {
        matches!(
            self,
            ConnectionType::Sb | ConnectionType::Hybrid | ConnectionType::HybridO | ConnectionType::Custom
        )
    }

    pub fn token(self) -> &'static str {
        match self {
            ConnectionType::None2D => "none",
            ConnectionType::Cb => "cb",
            ConnectionType::Cbo => "cbo",
            ConnectionType::Sb => "sb",
            ConnectionType::Hybrid => "hybrid",
            ConnectionType::HybridO => "hybrid_o",
            ConnectionType::Custom => "custom",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "none" | "2d" => ConnectionType::None2D,
            "cb" => ConnectionType::Cb,
            "cbo" | "cb_o" => ConnectionType::Cbo,
            "sb" => ConnectionType::Sb,
            "hybrid" => ConnectionType::Hybrid,
            "hybrid_o" | "hybrido" => ConnectionType::HybridO,
            "custom" => ConnectionType::Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for ConnectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Spatial strategy for picking which SB sites get vertical connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SbPlacement {
    RepeatedInterval,
    Rows,
    Columns,
    Core,
    Perimeter,
    Random,
    /// Explicit coordinate list from a CSV file.
    CustomList,
}

impl SbPlacement {
    pub fn token(self) -> &'static str {
        match self {
            SbPlacement::RepeatedInterval => "repeated_interval",
            SbPlacement::Rows => "rows",
            SbPlacement::Columns => "columns",
            SbPlacement::Core => "core",
            SbPlacement::Perimeter => "perimeter",
            SbPlacement::Random => "random",
            SbPlacement::CustomList => "custom_list",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "repeated_interval" => SbPlacement::RepeatedInterval,
            "rows" => SbPlacement::Rows,
            "columns" => SbPlacement::Columns,
            "core" => SbPlacement::Core,
            "perimeter" => SbPlacement::Perimeter,
            "random" => SbPlacement::Random,
            "custom_list" => SbPlacement::CustomList,
            _ => return None,
        })
    }

    pub const ALL_BUILTIN: [SbPlacement; 6] = [
        SbPlacement::RepeatedInterval,
        SbPlacement::Rows,
        SbPlacement::Columns,
        SbPlacement::Core,
        SbPlacement::Perimeter,
        SbPlacement::Random,
    ];
}

/// A 3D switch block connection pattern: two 4-integer sequences, one per
/// role, ordered counter-clockwise (left, bottom, right, top).
///
/// Entries may be negative; they are only ever interpreted modulo the
/// channel width, with a mathematical modulo so results land in `[0, W)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SbPattern {
    pub input: [i32; 4],
    pub output: [i32; 4],
}

impl SbPattern {
    pub const SUBSET: SbPattern = SbPattern { input: [0, 0, 0, 0], output: [0, 0, 0, 0] };
    pub const OFF_BY_ONE_OUTPUT: SbPattern = SbPattern { input: [0, 0, 0, 0], output: [1, 1, 1, 1] };
    pub const REVOLVING_OFFSET: SbPattern = SbPattern { input: [0, 1, 2, 3], output: [0, 1, 2, 3] };
    pub const REVOLVING_INPUT: SbPattern = SbPattern { input: [0, 1, 2, 3], output: [0, 0, 0, 0] };
    pub const REVOLVING_OUTPUT: SbPattern = SbPattern { input: [0, 0, 0, 0], output: [0, 1, 2, 3] };
    pub const DIRECTION_MATCH: SbPattern = SbPattern { input: [0, 1, 0, 1], output: [1, 0, 1, 0] };
    pub const SYMMETRIC_OFFSET: SbPattern = SbPattern { input: [-2, -1, 1, 2], output: [0, 0, 0, 0] };
    pub const RANDOM: SbPattern = SbPattern { input: [-3, 0, 2, 1], output: [3, -1, -2, 2] };

    /// The named patterns exercised by the pattern case study.
    pub const NAMED: [(&'static str, SbPattern); 8] = [
        ("subset", Self::SUBSET),
        ("off_by_one_output", Self::OFF_BY_ONE_OUTPUT),
        ("revolving_offset", Self::REVOLVING_OFFSET),
        ("revolving_input", Self::REVOLVING_INPUT),
        ("revolving_output", Self::REVOLVING_OUTPUT),
        ("direction_match", Self::DIRECTION_MATCH),
        ("symmetric_offset", Self::SYMMETRIC_OFFSET),
        ("random", Self::RANDOM),
    ];

    pub fn by_name(name: &str) -> Option<SbPattern> {
        Self::NAMED.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
    }
}

/// Pin classes eligible for crossings under `ConnectionType::Custom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CustomPins {
    #[default]
    None,
    In,
    Out,
    Both,
}

impl CustomPins {
    pub fn token(self) -> &'static str {
        match self {
            CustomPins::None => "none",
            CustomPins::In => "in",
            CustomPins::Out => "out",
            CustomPins::Both => "both",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "none" => CustomPins::None,
            "in" => CustomPins::In,
            "out" => CustomPins::Out,
            "both" => CustomPins::Both,
            _ => return None,
        })
    }
}

/// Everything about the vertical dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalConfig {
    pub connection_type: ConnectionType,
    /// Percent of SB sites that are 3D, 0..=100.
    pub sb_percentage: u32,
    pub sb_placement: SbPlacement,
    /// File the custom site list came from, if any (kept for provenance).
    pub custom_sites_file: Option<String>,
    /// Explicit 3D SB coordinates, required when placement is CustomList.
    pub custom_sites: Option<Vec<(u32, u32)>>,
    /// Stored even for CB/CB-O, where it is ignored.
    pub sb_pattern: SbPattern,
    /// Pin classes crossing layers under the Custom type.
    pub custom_pins: CustomPins,
    /// Vertical track subset under the Custom type (None = all tracks).
    pub custom_tracks: Option<Vec<u32>>,
}

impl Default for VerticalConfig {
    fn default() -> Self {
        VerticalConfig {
            connection_type: ConnectionType::None2D,
            sb_percentage: 100,
            sb_placement: SbPlacement::RepeatedInterval,
            custom_sites_file: None,
            custom_sites: None,
            sb_pattern: SbPattern::SUBSET,
            custom_pins: CustomPins::None,
            custom_tracks: None,
        }
    }
}

/// Planar switch block flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanarSb {
    Wilton,
    Subset,
}

impl PlanarSb {
    pub fn token(self) -> &'static str {
        match self {
            PlanarSb::Wilton => "wilton",
            PlanarSb::Subset => "subset",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "wilton" => PlanarSb::Wilton,
            "subset" => PlanarSb::Subset,
            _ => return None,
        })
    }
}

/// A routing segment class: wires of `length` tiles, `tracks` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub length: u32,
    pub tracks: u32,
}

/// Reference vertical hop delay from the case-study operating point:
/// 137 ps at a 0.739 ratio against the planar driver switch.
pub const DEFAULT_VERTICAL_DELAY_RATIO: f64 = 0.739;
/// 137 ps / 0.739 = 185.4 ps planar switch delay.
pub const DEFAULT_BASE_SWITCH_DELAY: f64 = 137e-12 / 0.739;
/// Per-tile wire delay used for planar channel segments.
pub const DEFAULT_WIRE_DELAY_PER_TILE: f64 = 10e-12;
/// Combinational LUT delay used by timing analysis.
pub const DEFAULT_LUT_DELAY: f64 = 150e-12;
/// Pads per IO tile.
pub const DEFAULT_IO_CAPACITY: u32 = 2;
/// Fraction of channel track positions an input pin taps.
pub const DEFAULT_FC_IN: f64 = 0.15;
/// Fraction of channel track positions an output pin drives.
pub const DEFAULT_FC_OUT: f64 = 0.10;

/// The full declarative architecture description.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub grid_width: u32,
    pub grid_height: u32,
    pub layer_count: u32,
    pub layers: Vec<LayerSpec>,
    /// Channel width W: track positions per channel (each position carries
    /// one wire per direction).
    pub channel_width: u32,
    pub segments: Vec<Segment>,
    pub lut_size: u32,
    pub cluster_size: u32,
    pub planar_sb: PlanarSb,
    pub vertical: VerticalConfig,
    /// Vertical hop delay as a multiple of `base_switch_delay`.
    pub vertical_delay_ratio: f64,
    /// Planar driver switch delay, seconds.
    pub base_switch_delay: f64,
    /// Seconds per tile of planar wire span.
    pub wire_delay_per_tile: f64,
    /// Combinational LUT delay, seconds.
    pub lut_delay: f64,
    pub io_capacity: u32,
    pub fc_in: f64,
    pub fc_out: f64,
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            grid_width: 4,
            grid_height: 4,
            layer_count: 1,
            layers: vec![LayerSpec::homogeneous()],
            channel_width: 8,
            segments: vec![Segment { length: 1, tracks: 8 }],
            lut_size: 4,
            cluster_size: 1,
            planar_sb: PlanarSb::Wilton,
            vertical: VerticalConfig::default(),
            vertical_delay_ratio: DEFAULT_VERTICAL_DELAY_RATIO,
            base_switch_delay: DEFAULT_BASE_SWITCH_DELAY,
            wire_delay_per_tile: DEFAULT_WIRE_DELAY_PER_TILE,
            lut_delay: DEFAULT_LUT_DELAY,
            io_capacity: DEFAULT_IO_CAPACITY,
            fc_in: DEFAULT_FC_IN,
            fc_out: DEFAULT_FC_OUT,
        }
    }
}

/// A single validation finding. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Checks every ArchSpec invariant; an empty list means the spec is valid.
pub fn validate(spec: &ArchSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.grid_width == 0 || spec.grid_height == 0 {
        out.push(Violation { rule: "grid size", detail: "grid dimensions must be positive".into() });
    }
    if spec.layer_count == 0 {
        out.push(Violation { rule: "layer count", detail: "layer_count must be >= 1".into() });
    }
    if spec.layers.len() != spec.layer_count as usize {
        out.push(Violation {
            rule: "layer list",
            detail: format!("{} layer specs for layer_count {}", spec.layers.len(), spec.layer_count),
        });
    }
    let track_sum: u32 = spec.segments.iter().map(|s| s.tracks).sum();
    if track_sum != spec.channel_width {
        out.push(Violation {
            rule: "channel width mismatch",
            detail: format!("segment tracks sum to {track_sum}, channel_width is {}", spec.channel_width),
        });
    }
    if spec.segments.iter().any(|s| s.length == 0) {
        out.push(Violation { rule: "segment length", detail: "segment length must be >= 1".into() });
    }
    if spec.vertical.connection_type != ConnectionType::None2D && spec.layer_count < 2 {
        out.push(Violation {
            rule: "vertical layers",
            detail: "vertical connectivity requires >= 2 layers".into(),
        });
    }
    if spec.vertical.sb_percentage > 100 {
        out.push(Violation {
            rule: "sb percentage",
            detail: format!("sb_percentage {} not in 0..=100", spec.vertical.sb_percentage),
        });
    }
    let needs_sites = spec.vertical.sb_placement == SbPlacement::CustomList;
    let has_sites = spec.vertical.custom_sites.is_some() || spec.vertical.custom_sites_file.is_some();
    if needs_sites && !has_sites {
        out.push(Violation {
            rule: "custom sites",
            detail: "placement custom_list requires a custom site list".into(),
        });
    }
    if !needs_sites && spec.vertical.custom_sites.is_some() {
        out.push(Violation {
            rule: "custom sites",
            detail: "custom site list given but placement is not custom_list".into(),
        });
    }
    if !(spec.vertical_delay_ratio > 0.0) {
        out.push(Violation { rule: "delay ratio", detail: "vertical_delay_ratio must be > 0".into() });
    }
    if !(spec.base_switch_delay > 0.0) {
        out.push(Violation { rule: "switch delay", detail: "base_switch_delay must be > 0".into() });
    }
    if spec.lut_size == 0 || spec.cluster_size == 0 {
        out.push(Violation { rule: "logic size", detail: "lut_size and cluster_size must be >= 1".into() });
    }

    // Layer class consistency: exactly one class per spec.
    if let Some(first) = spec.layers.first() {
        if spec.layers.iter().any(|l| l.class != first.class) {
            out.push(Violation {
                rule: "layer class",
                detail: "all layers must record the same heterogeneity class".into(),
            });
        }
        match first.class {
            HeteroClass::Homogeneous => {
                if spec.layers.iter().any(|l| l.columns != first.columns) {
                    out.push(Violation {
                        rule: "homogeneity",
                        detail: "homogeneous layers must be identical across the stack".into(),
                    });
                }
            }
            HeteroClass::NonLogicHetero => {
                let logic: Vec<&LayerSpec> = spec.layers.iter().filter(|l| !l.is_routing_only()).collect();
                if let Some(lf) = logic.first() {
                    if logic.iter().any(|l| l.columns != lf.columns) {
                        out.push(Violation {
                            rule: "non-logic heterogeneity",
                            detail: "logic layers must be identical; only routing-only layers may differ".into(),
                        });
                    }
                }
                if logic.is_empty() {
                    out.push(Violation {
                        rule: "non-logic heterogeneity",
                        detail: "at least one layer must carry logic".into(),
                    });
                }
            }
            HeteroClass::LogicHetero => {}
        }
    }

    // Column maps must be drawable on the grid.
    for (i, layer) in spec.layers.iter().enumerate() {
        if !layer.columns.is_empty() && layer.columns.len() != spec.grid_width as usize {
            out.push(Violation {
                rule: "column map",
                detail: format!(
                    "layer {i}: {} columns declared for a grid {} wide",
                    layer.columns.len(),
                    spec.grid_width
                ),
            });
        }
        if spec.grid_width >= 3 && spec.grid_height >= 3 && !layer.is_routing_only() {
            for (x, kind) in layer.columns.iter().enumerate() {
                let perimeter = x == 0 || x + 1 == spec.grid_width as usize;
                if perimeter && !matches!(kind, BlockKind::Io | BlockKind::Clb) {
                    out.push(Violation {
                        rule: "column map",
                        detail: format!("layer {i}: column {x} is perimeter IO, cannot host {}", kind.token()),
                    });
                }
            }
        }
    }

    if let Some(sites) = &spec.vertical.custom_sites {
        let mut seen = std::collections::BTreeSet::new();
        for &(x, y) in sites {
            if x > spec.grid_width || y > spec.grid_height {
                out.push(Violation {
                    rule: "custom sites",
                    detail: format!("site ({x},{y}) outside the SB lattice"),
                });
            }
            if !seen.insert((x, y)) {
                out.push(Violation { rule: "custom sites", detail: format!("duplicate site ({x},{y})") });
            }
        }
    }

    out
}

/// Like [`validate`] but folds violations into an error, for call sites that
/// just need a precondition check.
pub fn validate_ok(spec: &ArchSpec) -> Result<()> {
    let v = validate(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArch(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))
    }
}

impl ArchSpec {
    /// Parses a custom 3D SB site list CSV (`x,y` header then one site per
    /// row) into `vertical.custom_sites`.
    pub fn load_custom_sites(&mut self, csv_text: &str) -> Result<()> {
        let mut sites = Vec::new();
        for (i, line) in csv_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 && line.eq_ignore_ascii_case("x,y") {
                continue;
            }
            let mut parts = line.split(',');
            let (xs, ys) = match (parts.next(), parts.next(), parts.next()) {
                (Some(x), Some(y), None) => (x.trim(), y.trim()),
                _ => {
                    return Err(Error::SiteCsv { line: i + 1, msg: format!("expected `x,y`, got {line:?}") })
                }
            };
            let x: u32 = xs
                .parse()
                .map_err(|_| Error::SiteCsv { line: i + 1, msg: format!("bad x coordinate {xs:?}") })?;
            let y: u32 = ys
                .parse()
                .map_err(|_| Error::SiteCsv { line: i + 1, msg: format!("bad y coordinate {ys:?}") })?;
            sites.push((x, y));
        }
        self.vertical.custom_sites = Some(sites);
        Ok(())
    }

    /// Canonical document form; `parse(serialize(spec))` is identity.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("grid {\n");
        s.push_str(&format!("  width {}\n", self.grid_width));
        s.push_str(&format!("  height {}\n", self.grid_height));
        s.push_str("}\n");
        s.push_str("layers {\n");
        s.push_str(&format!("  count {}\n", self.layer_count));
        if let Some(first) = self.layers.first() {
            s.push_str(&format!("  class {}\n", first.class.token()));
        }
        for layer in &self.layers {
            if !layer.columns.is_empty() {
                let cols: Vec<&str> = layer.columns.iter().map(|c| c.token()).collect();
                s.push_str(&format!("  columns {}\n", cols.join(" ")));
            }
        }
        s.push_str("}\n");
        s.push_str("routing {\n");
        s.push_str(&format!("  channel_width {}\n", self.channel_width));
        for seg in &self.segments {
            s.push_str("  segment {\n");
            s.push_str(&format!("    length {}\n", seg.length));
            s.push_str(&format!("    tracks {}\n", seg.tracks));
            s.push_str("  }\n");
        }
        s.push_str(&format!("  planar_sb {}\n", self.planar_sb.token()));
        if (self.fc_in - DEFAULT_FC_IN).abs() > f64::EPSILON {
            s.push_str(&format!("  fc_in {}\n", fmt_f64(self.fc_in)));
        }
        if (self.fc_out - DEFAULT_FC_OUT).abs() > f64::EPSILON {
            s.push_str(&format!("  fc_out {}\n", fmt_f64(self.fc_out)));
        }
        s.push_str("}\n");
        s.push_str("logic {\n");
        s.push_str(&format!("  lut_size {}\n", self.lut_size));
        s.push_str(&format!("  cluster_size {}\n", self.cluster_size));
        if self.io_capacity != DEFAULT_IO_CAPACITY {
            s.push_str(&format!("  io_capacity {}\n", self.io_capacity));
        }
        s.push_str("}\n");
        s.push_str("vertical {\n");
        s.push_str(&format!("  type {}\n", self.vertical.connection_type.token()));
        s.push_str(&format!("  sb_percentage {}\n", self.vertical.sb_percentage));
        s.push_str(&format!("  sb_placement {}\n", self.vertical.sb_placement.token()));
        if let Some(f) = &self.vertical.custom_sites_file {
            s.push_str(&format!("  custom_sites_file {}\n", f));
        }
        s.push_str("  pattern {\n");
        let p = &self.vertical.sb_pattern;
        s.push_str(&format!("    input {} {} {} {}\n", p.input[0], p.input[1], p.input[2], p.input[3]));
        s.push_str(&format!("    output {} {} {} {}\n", p.output[0], p.output[1], p.output[2], p.output[3]));
        s.push_str("  }\n");
        if self.vertical.custom_pins != CustomPins::None {
            s.push_str(&format!("  custom_pins {}\n", self.vertical.custom_pins.token()));
        }
        if let Some(tracks) = &self.vertical.custom_tracks {
            let t: Vec<String> = tracks.iter().map(|t| t.to_string()).collect();
            s.push_str(&format!("  custom_tracks {}\n", t.join(" ")));
        }
        s.push_str("}\n");
        s.push_str("timing {\n");
        s.push_str(&format!("  vertical_delay_ratio {}\n", fmt_f64(self.vertical_delay_ratio)));
        s.push_str(&format!("  base_switch_delay {}\n", fmt_f64(self.base_switch_delay)));
        if (self.wire_delay_per_tile - DEFAULT_WIRE_DELAY_PER_TILE).abs() > f64::EPSILON {
            s.push_str(&format!("  wire_delay_per_tile {}\n", fmt_f64(self.wire_delay_per_tile)));
        }
        if (self.lut_delay - DEFAULT_LUT_DELAY).abs() > f64::EPSILON {
            s.push_str(&format!("  lut_delay {}\n", fmt_f64(self.lut_delay)));
        }
        s.push_str("}\n");
        s
    }

    /// Stable 16-hex-digit digest of the canonical document; stamped into
    /// RRG interchange files and bitstreams so mismatched inputs are caught.
    pub fn spec_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.serialize().as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Round-trip-stable float formatting (shortest repr via `{}`; Rust's float
/// Display is already minimal and re-parses exactly).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_v_style_small() -> ArchSpec {
        // The case-study parameter shape scaled down to an 8x8 grid.
        let mut spec = ArchSpec {
            grid_width: 8,
            grid_height: 8,
            layer_count: 2,
            layers: vec![LayerSpec::homogeneous(), LayerSpec::homogeneous()],
            channel_width: 300,
            segments: vec![Segment { length: 4, tracks: 260 }, Segment { length: 16, tracks: 40 }],
            lut_size: 6,
            cluster_size: 10,
            ..ArchSpec::default()
        };
        spec.vertical.connection_type = ConnectionType::Sb;
        spec.vertical.sb_percentage = 50;
        spec
    }

    #[test]
    fn valid_scaled_spec_has_no_violations() {
        assert_eq!(validate(&table_v_style_small()), Vec::new());
    }

    #[test]
    fn channel_width_mismatch_is_reported() {
        let mut spec = table_v_style_small();
        spec.channel_width = 299;
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "channel width mismatch");
    }

    #[test]
    fn custom_list_requires_sites() {
        let mut spec = table_v_style_small();
        spec.vertical.sb_placement = SbPlacement::CustomList;
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "custom sites");
    }

    #[test]
    fn single_layer_vertical_is_rejected() {
        let mut spec = table_v_style_small();
        spec.layer_count = 1;
        spec.layers.truncate(1);
        assert!(validate(&spec).iter().any(|v| v.rule == "vertical layers"));
    }

    #[test]
    fn mixed_layer_classes_are_rejected() {
        let mut spec = table_v_style_small();
        spec.layers[1].class = HeteroClass::LogicHetero;
        assert!(validate(&spec).iter().any(|v| v.rule == "layer class"));
    }

    #[test]
    fn custom_sites_bounds_and_duplicates() {
        let mut spec = table_v_style_small();
        spec.vertical.sb_placement = SbPlacement::CustomList;
        spec.vertical.custom_sites = Some(vec![(0, 0), (9, 0), (0, 0)]);
        let rules: Vec<&str> = validate(&spec).iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec!["custom sites", "custom sites"]);
    }

    #[test]
    fn load_custom_sites_parses_csv() {
        let mut spec = table_v_style_small();
        spec.load_custom_sites("x,y\n0,0\n3,4\n").unwrap();
        assert_eq!(spec.vertical.custom_sites, Some(vec![(0, 0), (3, 4)]));
        let err = spec.load_custom_sites("x,y\nfoo,2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn spec_hash_is_stable_and_input_sensitive() {
        let a = table_v_style_small();
        let mut b = a.clone();
        assert_eq!(a.spec_hash(), b.spec_hash());
        b.channel_width = 301;
        assert_ne!(a.spec_hash(), b.spec_hash());
    }

    #[test]
    fn default_delays_match_reference_point() {
        let spec = ArchSpec::default();
        assert!((spec.vertical_delay_ratio - 0.739).abs() < 1e-12);
        // 137 ps / 0.739 = 185.4 ps.
        assert!((spec.base_switch_delay - 185.4e-12).abs() < 0.05e-12);
        assert!((spec.vertical_delay_ratio * spec.base_switch_delay - 137e-12).abs() < 1e-18);
    }
}
