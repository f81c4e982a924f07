use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three chanting modes. The discriminant is the class index used by the
/// classifier and by every confusion matrix (rows and columns in G, E, A order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Geez = 0,
    Ezil = 1,
    Araray = 2,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Geez, Mode::Ezil, Mode::Araray];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Geez => "Geez",
            Mode::Ezil => "Ezil",
            Mode::Araray => "Araray",
        }
    }

    /// Lower-case letter prefix used for representative-pitch names.
    pub fn letter(self) -> char {
        match self {
            Mode::Geez => 'g',
            Mode::Ezil => 'e',
            Mode::Araray => 'a',
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMode(pub String);

impl fmt::Display for UnknownMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown mode {:?} (expected Geez, Ge'ez, Ezil, Izil or Araray)", self.0)
    }
}

impl std::error::Error for UnknownMode {}

impl FromStr for Mode {
    type Err = UnknownMode;

    /// Accepts the canonical names plus the spellings `Ge'ez` (straight or
    /// curly apostrophe) and `Izil`, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '`'))
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "geez" => Ok(Mode::Geez),
            "ezil" | "izil" => Ok(Mode::Ezil),
            "araray" => Ok(Mode::Araray),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases() {
        assert_eq!("Izil".parse::<Mode>().unwrap(), Mode::Ezil);
        assert_eq!("Ge'ez".parse::<Mode>().unwrap(), Mode::Geez);
        assert_eq!("ge’ez".parse::<Mode>().unwrap(), Mode::Geez);
        assert_eq!("ARARAY".parse::<Mode>().unwrap(), Mode::Araray);
        assert!("Foo".parse::<Mode>().is_err());
    }
}
