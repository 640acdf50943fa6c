use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lp::PropertySet;
use crate::sdp::{all_blocks, default_blocks, diagonal_blocks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    /// Sparse left inverse, `HA = I`.
    Left,
    /// Sparse right inverse, `AH = I`.
    Right,
    /// Moore-Penrose pseudoinverse by SVD.
    Mp,
    /// `min ‖H‖₁` under P1 and a subset of {P3, P4}, optionally with the
    /// lifted P2 relaxation.
    Relaxed,
}

/// Which lifted blocks a `+p2sdp` variant uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum BlockSpec {
    /// Every pair for small unknowns, none otherwise.
    #[default]
    Default,
    All,
    Diagonal,
    None,
    /// Explicit 0-based `(i, j)` entries of `H`.
    List(Vec<(usize, usize)>),
}

impl BlockSpec {
    /// Concrete block list for an `m × n` input (`H` is `n × m`).
    pub fn resolve(&self, m: usize, n: usize) -> Vec<(usize, usize)> {
        match self {
            BlockSpec::Default => default_blocks(m, n),
            BlockSpec::All => all_blocks(m, n),
            BlockSpec::Diagonal => diagonal_blocks(m, n),
            BlockSpec::None => Vec::new(),
            BlockSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockSpec::Default => Ok(()),
            BlockSpec::All => write!(f, "all"),
            BlockSpec::Diagonal => write!(f, "diag"),
            BlockSpec::None => write!(f, "none"),
            BlockSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|(i, j)| format!("{i}.{j}")).collect();
                write!(f, "{}", parts.join("/"))
            }
        }
    }
}

impl FromStr for BlockSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" => return Ok(BlockSpec::Default),
            "all" => return Ok(BlockSpec::All),
            "diag" => return Ok(BlockSpec::Diagonal),
            "none" => return Ok(BlockSpec::None),
            _ => {}
        }
        let bad = || Error::InvalidBlocks(format!("cannot parse block list '{s}'"));
        let list = s
            .split('/')
            .map(|item| {
                let (i, j) = item.split_once('.').ok_or_else(bad)?;
                Ok((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockSpec::List(list))
    }
}

/// A named pseudoinverse variant, e.g. `p1+p3`, `p1+p2sdp:diag`, `left`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variant {
    pub kind: VariantKind,
    /// Meaningful for [`VariantKind::Relaxed`] only.
    pub props: PropertySet,
    pub blocks: BlockSpec,
}

impl Variant {
    pub fn left() -> Self {
        Self { kind: VariantKind::Left, props: PropertySet::default(), blocks: BlockSpec::None }
    }

    pub fn right() -> Self {
        Self { kind: VariantKind::Right, props: PropertySet::default(), blocks: BlockSpec::None }
    }

    pub fn mp() -> Self {
        Self { kind: VariantKind::Mp, props: PropertySet::default(), blocks: BlockSpec::None }
    }

    pub fn relaxed(props: PropertySet) -> Self {
        let blocks = if props.p2_sdp { BlockSpec::Default } else { BlockSpec::None };
        Self { kind: VariantKind::Relaxed, props, blocks }
    }

    pub fn relaxed_sdp(props: PropertySet, blocks: BlockSpec) -> Self {
        Self { kind: VariantKind::Relaxed, props: props.with_sdp(), blocks }
    }

    /// The eight relaxed variants: the four LP property sets, each without
    /// and then with the lifted P2 relaxation.
    pub fn relaxed_family() -> Vec<Variant> {
        let mut out: Vec<Variant> = PropertySet::LP_VARIANTS.iter().map(|&p| Self::relaxed(p)).collect();
        out.extend(PropertySet::LP_VARIANTS.iter().map(|&p| Self::relaxed(p.with_sdp())));
        out
    }

    pub fn uses_sdp(&self) -> bool {
        self.kind == VariantKind::Relaxed && self.props.p2_sdp
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VariantKind::Left => write!(f, "left"),
            VariantKind::Right => write!(f, "right"),
            VariantKind::Mp => write!(f, "mp"),
            VariantKind::Relaxed => {
                write!(f, "{}", self.props.without_sdp())?;
                if self.props.p2_sdp {
                    write!(f, "+p2sdp")?;
                    if self.blocks != BlockSpec::Default {
                        write!(f, ":{}", self.blocks)?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "left" => return Ok(Self::left()),
            "right" => return Ok(Self::right()),
            "mp" => return Ok(Self::mp()),
            _ => {}
        }
        let bad = || Error::InvalidVariant(s.to_string());
        let mut props = PropertySet::default();
        let mut blocks = BlockSpec::None;
        for (k, part) in t.split('+').enumerate() {
            let (name, spec) = match part.split_once(':') {
                Some((n, b)) => (n, Some(b)),
                None => (part, None),
            };
            let flag = match name {
                "p1" if k == 0 => &mut props.p1,
                "p3" => &mut props.p3,
                "p4" => &mut props.p4,
                "p2sdp" => &mut props.p2_sdp,
                _ => return Err(bad()),
            };
            if *flag {
                return Err(bad());
            }
            *flag = true;
            match (name, spec) {
                ("p2sdp", Some(b)) => blocks = b.parse()?,
                ("p2sdp", None) => blocks = BlockSpec::Default,
                (_, Some(_)) => return Err(bad()),
                _ => {}
            }
        }
        if !props.p1 {
            return Err(bad());
        }
        Ok(Self { kind: VariantKind::Relaxed, props, blocks })
    }
}
