use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AudioBuffer;

/// Classifier input duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InputDuration {
    Full,
    Seconds(f64),
}

impl InputDuration {
    /// The four durations of the results grid, in column order.
    pub const GRID: [InputDuration; 4] = [
        InputDuration::Full,
        InputDuration::Seconds(20.0),
        InputDuration::Seconds(10.0),
        InputDuration::Seconds(5.0),
    ];

    pub fn label(&self) -> String {
        match self {
            InputDuration::Full => "full".into(),
            InputDuration::Seconds(s) if s.fract() == 0.0 => format!("{}s", *s as u64),
            InputDuration::Seconds(s) => format!("{s}s"),
        }
    }

    /// Segment boundaries in samples for a signal of `len` samples at `rate`.
    ///
    /// Consecutive non-overlapping windows; a trailing remainder is kept when it
    /// is at least half a window long.
    pub fn windows(&self, len: usize, rate: u32) -> Vec<(usize, usize)> {
        match *self {
            InputDuration::Full => vec![(0, len)],
            InputDuration::Seconds(s) => {
                let w = (s * rate as f64).round() as usize;
                if w == 0 {
                    return vec![(0, len)];
                }
                let mut out: Vec<(usize, usize)> = (0..len / w).map(|i| (i * w, (i + 1) * w)).collect();
                let rem = len % w;
                if rem > 0 && 2 * rem >= w {
                    out.push((len - rem, len));
                }
                out
            }
        }
    }
}

impl fmt::Display for InputDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for InputDuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if t == "full" {
            return Ok(InputDuration::Full);
        }
        let num = t.strip_suffix('s').unwrap_or(&t);
        match num.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(InputDuration::Seconds(v)),
            _ => Err(format!("invalid duration {s:?}: expected `full` or a positive number of seconds")),
        }
    }
}

impl TryFrom<String> for InputDuration {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<InputDuration> for String {
    fn from(d: InputDuration) -> String {
        d.label()
    }
}

/// Split `buffer` into consecutive windows of `window`.
pub fn segment(buffer: &AudioBuffer, window: InputDuration) -> Vec<AudioBuffer> {
    if window == InputDuration::Full {
        return vec![buffer.clone()];
    }
    window
        .windows(buffer.len(), buffer.sample_rate)
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            AudioBuffer::new(
                buffer.samples[a..b].to_vec(),
                buffer.sample_rate,
                format!("{}#{}", buffer.source_id, i),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(secs: f64) -> AudioBuffer {
        let rate = 100;
        AudioBuffer::new(
            (0..(secs * rate as f64) as usize).map(|i| (i as f32 * 0.01).sin()).collect(),
            rate,
            "b",
        )
    }

    #[test]
    fn sixty_by_twenty() {
        let segs = segment(&buf(60.0), InputDuration::Seconds(20.0));
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| (s.duration_s() - 20.0).abs() < 1e-9));
    }

    #[test]
    fn remainder_rule() {
        // 23 = 4 * 5 + 3 and 3 >= 2.5, so the remainder is kept
        let segs = segment(&buf(23.0), InputDuration::Seconds(5.0));
        assert_eq!(segs.len(), 5);
        assert!((segs[4].duration_s() - 3.0).abs() < 1e-9);
        // 22 = 4 * 5 + 2 and 2 < 2.5
        assert_eq!(segment(&buf(22.0), InputDuration::Seconds(5.0)).len(), 4);
        assert!(segment(&buf(2.0), InputDuration::Seconds(5.0)).is_empty());
    }

    #[test]
    fn full_is_identity() {
        let b = buf(7.3);
        let segs = segment(&b, InputDuration::Full);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0], b);
    }

    #[test]
    fn parse_labels() {
        assert_eq!("full".parse::<InputDuration>().unwrap(), InputDuration::Full);
        assert_eq!("20s".parse::<InputDuration>().unwrap(), InputDuration::Seconds(20.0));
        assert_eq!("5".parse::<InputDuration>().unwrap(), InputDuration::Seconds(5.0));
        assert!("-1".parse::<InputDuration>().is_err());
        assert_eq!(InputDuration::Seconds(10.0).label(), "10s");
    }
}
