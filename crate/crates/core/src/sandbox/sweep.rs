use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SandboxError;
use crate::sim::SimTime;
use crate::wlan::{simulate_scenario, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub duration_s: f64,
    pub mean_exec_ms: f64,
    /// Sample standard deviation over mean of the aggregate throughput.
    pub cov: f64,
    pub mean_aggregate_mbps: f64,
    pub runs: usize,
    /// Fewer than two seeds: the CoV is 0 by definition.
    pub degenerate: bool,
}

pub const SWEEP_CSV_HEADER: &str = "duration_s,mean_exec_ms,cov";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.3},{:.6}", r.duration_s, r.mean_exec_ms, r.cov);
    }
    out
}

pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean
}

/// Simulates `s` once per (duration, seed) and reports run-to-run variability
/// and wall-clock cost per duration.
pub fn stability_sweep(
    s: &Scenario,
    durations_s: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, SandboxError> {
    if seeds.is_empty() {
        return Err(SandboxError::Invalid("at least one seed is required".into()));
    }
    if durations_s.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(SandboxError::Invalid("durations must be positive".into()));
    }
    if durations_s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SandboxError::Invalid("durations must be strictly ascending".into()));
    }
    durations_s
        .iter()
        .map(|&d| {
            let duration = SimTime::from_secs_f64(d);
            let runs: Vec<(f64, f64)> = seeds
                .par_iter()
                .map(|&seed| {
                    let start = Instant::now();
                    let r = simulate_scenario(s, duration, seed)?;
                    Ok((r.aggregate_mbps(), start.elapsed().as_secs_f64() * 1e3))
                })
                .collect::<Result<_, SandboxError>>()?;
            let thr: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let n = runs.len() as f64;
            Ok(SweepRow {
                duration_s: d,
                mean_exec_ms: runs.iter().map(|r| r.1).sum::<f64>() / n,
                cov: coefficient_of_variation(&thr),
                mean_aggregate_mbps: thr.iter().sum::<f64>() / n,
                runs: runs.len(),
                degenerate: runs.len() < 2,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub powers_dbm: Vec<f64>,
    pub mean_aggregate_mbps: f64,
    pub per_bss_mbps: Vec<f64>,
}

pub const DEFAULT_ORACLE_CAP: u64 = 10_000;

/// Every joint power configuration, best first. Ties keep enumeration order
/// (first BSS varies slowest, powers ascending as listed).
pub fn exhaustive_oracle(
    s: &Scenario,
    seeds: &[u64],
    duration: SimTime,
    cap: u64,
) -> Result<Vec<OracleRow>, SandboxError> {
    if seeds.is_empty() {
        return Err(SandboxError::Invalid("at least one seed is required".into()));
    }
    let levels = &s.power_levels;
    let configs = (levels.len() as u64)
        .checked_pow(s.bss.len() as u32)
        .unwrap_or(u64::MAX);
    if configs > cap {
        return Err(SandboxError::CapExceeded { configs, cap });
    }
    let all: Vec<Vec<f64>> = (0..configs)
        .map(|mut k| {
            let mut p = vec![0.0; s.bss.len()];
            for slot in p.iter_mut().rev() {
                *slot = levels[(k % levels.len() as u64) as usize];
                k /= levels.len() as u64;
            }
            p
        })
        .collect();
    let mut rows: Vec<OracleRow> = all
        .into_par_iter()
        .map(|powers| {
            let sc = s.with_powers(&powers)?;
            let mut per = vec![0.0; s.bss.len()];
            for &seed in seeds {
                let r = simulate_scenario(&sc, duration, seed)?;
                for (acc, b) in per.iter_mut().zip(&r.bss) {
                    *acc += b.thr_mbps;
                }
            }
            per.iter_mut().for_each(|v| *v /= seeds.len() as f64);
            Ok(OracleRow {
                powers_dbm: powers,
                mean_aggregate_mbps: per.iter().sum(),
                per_bss_mbps: per,
            })
        })
        .collect::<Result<_, SandboxError>>()?;
    rows.sort_by(|a, b| b.mean_aggregate_mbps.total_cmp(&a.mean_aggregate_mbps));
    Ok(rows)
}

pub fn oracle_csv(s: &Scenario, rows: &[OracleRow]) -> String {
    let mut out = String::from("powers,mean_aggregate_mbps");
    for b in &s.bss {
        let _ = write!(out, ",bss{}_mbps", b.id);
    }
    out.push('\n');
    for r in rows {
        let powers: Vec<String> = r.powers_dbm.iter().map(|p| p.to_string()).collect();
        let _ = write!(out, "{},{:.6}", powers.join(";"), r.mean_aggregate_mbps);
        for v in &r.per_bss_mbps {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wlan::canonical_scenario;

    #[test]
    fn cov_oracle() {
        assert_eq!(coefficient_of_variation(&[5.0]), 0.0);
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), 0.0);
        // mean 2, sample sd 1
        assert!((coefficient_of_variation(&[1.0, 2.0, 3.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_seed_is_degenerate() {
        let rows = stability_sweep(&canonical_scenario(), &[0.2, 0.4], &[3]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.degenerate && r.cov == 0.0));
    }

    #[test]
    fn durations_must_ascend() {
        let s = canonical_scenario();
        assert!(stability_sweep(&s, &[1.0, 1.0], &[1, 2]).is_err());
        assert!(stability_sweep(&s, &[2.0, 1.0], &[1, 2]).is_err());
        assert!(stability_sweep(&s, &[], &[1]).unwrap().is_empty());
    }

    #[test]
    fn oracle_enumerates_and_sorts() {
        let s = canonical_scenario();
        let rows = exhaustive_oracle(&s, &[1], SimTime::from_millis(300), 100).unwrap();
        assert_eq!(rows.len(), 36);
        assert!(rows
            .windows(2)
            .all(|w| w[0].mean_aggregate_mbps >= w[1].mean_aggregate_mbps));
        let mut seen: Vec<_> = rows.iter().map(|r| format!("{:?}", r.powers_dbm)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 36);
        let csv = oracle_csv(&s, &rows);
        assert!(csv.starts_with("powers,mean_aggregate_mbps,bss1_mbps,bss2_mbps\n"));
        assert_eq!(csv.lines().count(), 37);
    }

    #[test]
    fn oracle_cap() {
        let s = canonical_scenario();
        assert!(matches!(
            exhaustive_oracle(&s, &[1], SimTime::from_millis(10), 35),
            Err(SandboxError::CapExceeded { configs: 36, cap: 35 })
        ));
        let mut one = s.clone();
        one.power_levels = vec![23.0];
        let rows = exhaustive_oracle(&one, &[1], SimTime::from_millis(100), 1).unwrap();
        assert_eq!(rows.len(), 1);
    }
}
