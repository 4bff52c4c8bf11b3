//! The golden result table and the comparison used by `bench --check`.

use empa::metrics::ModeResult;
use empa::programs::SumupVariant;

pub const TABLE1_CSV: &str = include_str!("../golden/table1.csv");

/// Largest accepted difference between a displayed real and the golden
/// cell. The golden cells mix rounding and truncation, so one unit in
/// the last place is allowed.
pub const REAL_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub length: u32,
    pub mode: SumupVariant,
    pub clocks: u64,
    pub k: usize,
    pub speedup: f64,
    pub s_over_k: f64,
    pub alpha_eff: f64,
}

/// Parses a CSV with the metrics header. Panics on malformed input, which
/// can only be a broken checkout.
pub fn parse(csv: &str) -> Vec<GoldenRow> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            assert_eq!(f.len(), 7, "golden row `{l}`");
            GoldenRow {
                length: f[0].parse().unwrap(),
                mode: f[1].parse().unwrap(),
                clocks: f[2].parse().unwrap(),
                k: f[3].parse().unwrap(),
                speedup: f[4].parse().unwrap(),
                s_over_k: f[5].parse().unwrap(),
                alpha_eff: f[6].parse().unwrap(),
            }
        })
        .collect()
}

pub fn table1() -> Vec<GoldenRow> {
    parse(TABLE1_CSV)
}

fn displayed(x: f64) -> f64 {
    format!("{x:.2}").parse().unwrap()
}

/// One line per differing cell; empty when everything matches.
pub fn compare(rows: &[ModeResult], golden: &[GoldenRow]) -> Vec<String> {
    let mut deltas = Vec::new();
    if rows.len() != golden.len() {
        deltas.push(format!("expected {} rows, got {}", golden.len(), rows.len()));
    }
    for g in golden {
        let Some(r) = rows.iter().find(|r| r.length == g.length && r.mode == g.mode) else {
            deltas.push(format!("length {} {}: row missing", g.length, g.mode));
            continue;
        };
        let name = format!("length {} {}", g.length, g.mode);
        if r.clocks != g.clocks {
            deltas.push(format!("{name} clocks: expected {}, got {}", g.clocks, r.clocks));
        }
        if r.k != g.k {
            deltas.push(format!("{name} k: expected {}, got {}", g.k, r.k));
        }
        for (col, got, want) in [
            ("S", r.speedup, g.speedup),
            ("S_over_k", r.s_over_k, g.s_over_k),
            ("alpha_eff", r.alpha_display(), g.alpha_eff),
        ] {
            if (displayed(got) - want).abs() > REAL_TOLERANCE + 1e-9 {
                deltas.push(format!("{name} {col}: expected {want:.2}, got {got:.4}"));
            }
        }
    }
    deltas
}
