//! The three shipped vector-sum programs and the length patch used by the
//! benchmarks.

use std::fmt;
use std::str::FromStr;

const NO: &str = include_str!("../programs/sum_no.eys");
const FOR: &str = include_str!("../programs/sum_for.eys");
const SUMUP: &str = include_str!("../programs/sum_sumup.eys");

/// How the vector sum is organised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SumupVariant {
    /// Plain loop on one core.
    No,
    For,
    Sumup,
}

impl SumupVariant {
    pub const ALL: [SumupVariant; 3] = [SumupVariant::No, SumupVariant::For, SumupVariant::Sumup];

    pub fn name(self) -> &'static str {
        match self {
            SumupVariant::No => "NO",
            SumupVariant::For => "FOR",
            SumupVariant::Sumup => "SUMUP",
        }
    }
}

impl fmt::Display for SumupVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SumupVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NO" => Ok(SumupVariant::No),
            "FOR" => Ok(SumupVariant::For),
            "SUMUP" => Ok(SumupVariant::Sumup),
            _ => Err(format!("unknown mode `{s}` (expected NO, FOR or SUMUP)")),
        }
    }
}

pub fn source(v: SumupVariant) -> &'static str {
    match v {
        SumupVariant::No => NO,
        SumupVariant::For => FOR,
        SumupVariant::Sumup => SUMUP,
    }
}

pub const COUNT_MARK: &str = "# @count";
pub const VECTOR_BEGIN: &str = "# @vector-begin";
pub const VECTOR_END: &str = "# @vector-end";

/// Rewrites a source so the count immediate is `n` and the vector holds the
/// elements `1..=n`. Returns `None` if the source lacks the markers.
pub fn with_length(src: &str, n: u32) -> Option<String> {
    let v: Vec<u32> = (1..=n).collect();
    with_vector(src, &v)
}

/// Rewrites a source so the count immediate and the vector block hold
/// `values`. Returns `None` if the source lacks the markers.
pub fn with_vector(src: &str, values: &[u32]) -> Option<String> {
    let mut out = String::with_capacity(src.len() + 16 * values.len());
    let (mut count_seen, mut begin_seen, mut end_seen, mut inside) = (false, false, false, false);
    for line in src.lines() {
        if inside {
            if line.trim() == VECTOR_END {
                inside = false;
                end_seen = true;
                out.push_str(line);
                out.push('\n');
            }
            continue;
        }
        if line.contains(COUNT_MARK) {
            let dollar = line.find('$')?;
            let comma = dollar + line[dollar..].find(',')?;
            out.push_str(&line[..=dollar]);
            out.push_str(&values.len().to_string());
            out.push_str(&line[comma..]);
            count_seen = true;
        } else {
            out.push_str(line);
        }
        out.push('\n');
        if line.trim() == VECTOR_BEGIN {
            begin_seen = true;
            inside = true;
            for v in values {
                out.push_str(&format!("\t.long {v:#x}\n"));
            }
        }
    }
    (count_seen && begin_seen && end_seen).then_some(out)
}

/// A shipped program patched to length `n`.
pub fn program(v: SumupVariant, n: u32) -> String {
    with_length(source(v), n).expect("shipped programs carry the markers")
}

/// Sum of `1..=n` modulo 2^32.
pub fn expected_sum(n: u32) -> u32 {
    let n = u64::from(n);
    (n * (n + 1) / 2) as u32
}
