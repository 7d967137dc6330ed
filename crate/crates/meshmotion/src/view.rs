use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Anatomical view identifier.
///
/// `Sa` is the short-axis stack (and its mid plane for contour terms).
/// `Lax1`/`Lax2` are the two long-axis planes; the conventional
/// two-chamber/four-chamber names are accepted as aliases when parsing.
///
/// The derived ordering (`Sa < Lax1 < Lax2`) is the fixed order used when
/// summing per-view terms, so results do not depend on container iteration
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Sa,
    Lax1,
    Lax2,
}

impl View {
    pub const ALL: [View; 3] = [View::Sa, View::Lax1, View::Lax2];

    pub fn as_str(&self) -> &'static str {
        match self {
            View::Sa => "sa",
            View::Lax1 => "lax1",
            View::Lax2 => "lax2",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sa" | "sax" => Ok(View::Sa),
            "lax1" | "2ch" => Ok(View::Lax1),
            "lax2" | "4ch" => Ok(View::Lax2),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown view '{other}' (expected sa, lax1/2ch or lax2/4ch)"
            ))),
        }
    }
}
