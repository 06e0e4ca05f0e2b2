use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CoordSpace;
use crate::error::{Error, Result};

/// Which prompts are issued to the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    /// The classifier's coarse mask is the prediction; no decoder call.
    LinearOnly,
    Point,
    Box,
    PointAndBox,
}

impl PromptMode {
    pub const ALL: [PromptMode; 4] = [
        PromptMode::LinearOnly,
        PromptMode::Point,
        PromptMode::Box,
        PromptMode::PointAndBox,
    ];

    pub fn uses_point(self) -> bool {
        matches!(self, PromptMode::Point | PromptMode::PointAndBox)
    }

    pub fn uses_box(self) -> bool {
        matches!(self, PromptMode::Box | PromptMode::PointAndBox)
    }

    pub fn uses_decoder(self) -> bool {
        self != PromptMode::LinearOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::LinearOnly => "linear-only",
            PromptMode::Point => "point",
            PromptMode::Box => "box",
            PromptMode::PointAndBox => "point-and-box",
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-only" | "linear" => Ok(PromptMode::LinearOnly),
            "point" => Ok(PromptMode::Point),
            "box" => Ok(PromptMode::Box),
            "point-and-box" | "point+box" => Ok(PromptMode::PointAndBox),
            other => Err(Error::InvalidConfig(format!(
                "unknown prompt mode {other:?} (expected linear-only, point, box or point-and-box)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointLabel {
    Foreground,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptPoint {
    pub x: f64,
    pub y: f64,
    pub label: PointLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

/// Prompts for one image, tagged with the frame their coordinates live in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub point: Option<PromptPoint>,
    #[serde(rename = "box")]
    pub bbox: Option<PromptBox>,
    pub mode: PromptMode,
    pub space: CoordSpace,
}

const PADDED_EXTENT: f64 = 1024.0;

impl PromptSet {
    pub fn new(
        point: Option<PromptPoint>,
        bbox: Option<PromptBox>,
        mode: PromptMode,
        space: CoordSpace,
    ) -> Result<Self> {
        let set = Self {
            point,
            bbox,
            mode,
            space,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn empty(space: CoordSpace) -> Self {
        Self {
            point: None,
            bbox: None,
            mode: PromptMode::LinearOnly,
            space,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPrompt(m.to_string()));
        if self.mode.uses_point() != self.point.is_some() {
            return bad("point presence does not match prompt mode");
        }
        if self.mode.uses_box() != self.bbox.is_some() {
            return bad("box presence does not match prompt mode");
        }
        if let Some(b) = self.bbox {
            if !(b.x_min <= b.x_max && b.y_min <= b.y_max) {
                return bad("box corners are inverted");
            }
        }
        if self.space == CoordSpace::Padded1024 {
            let inside = |v: f64| v.is_finite() && (0.0..=PADDED_EXTENT).contains(&v);
            let coords = self
                .point
                .iter()
                .flat_map(|p| [p.x, p.y])
                .chain(self.bbox.iter().flat_map(|b| [b.x_min, b.y_min, b.x_max, b.y_max]));
            if !coords.into_iter().all(inside) {
                return bad("coordinate outside [0, 1024]");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_contract_is_enforced() {
        let p = Some(PromptPoint {
            x: 10.0,
            y: 20.0,
            label: PointLabel::Foreground,
        });
        let b = Some(PromptBox {
            x_min: 1.0,
            y_min: 2.0,
            x_max: 3.0,
            y_max: 4.0,
        });
        let s = CoordSpace::Padded1024;
        assert!(PromptSet::new(p, b, PromptMode::PointAndBox, s).is_ok());
        assert!(PromptSet::new(p, None, PromptMode::Point, s).is_ok());
        assert!(PromptSet::new(None, b, PromptMode::Box, s).is_ok());
        assert!(PromptSet::new(None, None, PromptMode::LinearOnly, s).is_ok());
        assert!(PromptSet::new(p, b, PromptMode::Box, s).is_err());
        assert!(PromptSet::new(None, b, PromptMode::PointAndBox, s).is_err());
        assert!(PromptSet::new(p, None, PromptMode::LinearOnly, s).is_err());

        let inverted = Some(PromptBox {
            x_min: 5.0,
            y_min: 2.0,
            x_max: 3.0,
            y_max: 4.0,
        });
        assert!(PromptSet::new(None, inverted, PromptMode::Box, s).is_err());
        let outside = Some(PromptPoint {
            x: 1025.0,
            y: 0.0,
            label: PointLabel::Foreground,
        });
        assert!(PromptSet::new(outside, None, PromptMode::Point, s).is_err());
        assert!(PromptSet::new(outside, None, PromptMode::Point, CoordSpace::OriginalImage).is_ok());
    }

    #[test]
    fn mode_names_parse() {
        for m in PromptMode::ALL {
            assert_eq!(m.as_str().parse::<PromptMode>().unwrap(), m);
        }
        assert!("both".parse::<PromptMode>().is_err());
    }

    #[test]
    fn json_shape() {
        let s = PromptSet::new(
            Some(PromptPoint {
                x: 510.0,
                y: 510.0,
                label: PointLabel::Foreground,
            }),
            None,
            PromptMode::Point,
            CoordSpace::Padded1024,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["mode"], "point");
        assert_eq!(v["space"], "padded-1024");
        assert_eq!(v["point"]["label"], "foreground");
        assert!(v["box"].is_null());
    }
}
