//! CSV writers. Column order is fixed; randomized outputs start with a
//! `# master_seed=` comment line.
//!
//! Times are printed in shortest round-trip decimal form and values in
//! shortest round-trip scientific form, so every number re-parses exactly.

use std::io::Write;

use crate::calculus::IntegralTable;
use crate::deterministic::{DailyCounts, DeterministicSeries};
use crate::error::Result;
use crate::oracle::TruncatedDistribution;
use crate::pmf::{MeshGrid, Moments, PmfSlice};
use crate::simulator::{EmpiricalSummary, EventLog};

pub const TABLE_HEADER: &str = "t,s,sigma,n,l,m";
pub const DETERMINISTIC_HEADER: &str = "t,i_bar,a_bar,b_bar,r_bar";
pub const DAILY_HEADER: &str = "day,i_new,r_new";
pub const PMF_HEADER: &str = "k,p";
pub const MOMENTS_HEADER: &str = "t,mean,variance,cv";
pub const ORACLE_HEADER: &str = "k,q";
pub const PATHS_HEADER: &str = "path_id,time,kind,population_after";
pub const SNAPSHOT_HEADER: &str = "t,k,count,fraction";
pub const DAILY_STATS_HEADER: &str = "day,series,mean,sd,q05,q50,q95";

fn seed_line(w: &mut impl Write, seed: u64) -> Result<()> {
    writeln!(w, "# master_seed={seed}")?;
    Ok(())
}

pub fn write_table(w: &mut impl Write, tab: &IntegralTable) -> Result<()> {
    writeln!(w, "{TABLE_HEADER}")?;
    for i in 0..tab.len() {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e}",
            tab.grid[i], tab.s[i], tab.sigma[i], tab.n_fn[i], tab.l_fn[i], tab.m_fn[i]
        )?;
    }
    Ok(())
}

pub fn write_deterministic(w: &mut impl Write, det: &DeterministicSeries) -> Result<()> {
    writeln!(w, "{DETERMINISTIC_HEADER}")?;
    for i in 0..det.grid.len() {
        writeln!(w, "{},{:e},{:e},{:e},{:e}", det.grid[i], det.i_bar[i], det.a_bar[i], det.b_bar[i], det.r_bar[i])?;
    }
    Ok(())
}

pub fn write_daily(w: &mut impl Write, daily: &DailyCounts) -> Result<()> {
    writeln!(w, "{DAILY_HEADER}")?;
    for i in 0..daily.day.len() {
        writeln!(w, "{},{:e},{:e}", daily.day[i], daily.i_new[i], daily.r_new[i])?;
    }
    Ok(())
}

pub fn write_pmf(w: &mut impl Write, slice: &PmfSlice) -> Result<()> {
    writeln!(w, "{PMF_HEADER}")?;
    for (k, p) in slice.p.iter().enumerate() {
        writeln!(w, "{k},{p:e}")?;
    }
    Ok(())
}

/// Header `k,<t0>,<t1>,…`, then one row per count.
pub fn write_mesh(w: &mut impl Write, mesh: &MeshGrid) -> Result<()> {
    write!(w, "k")?;
    for t in &mesh.times {
        write!(w, ",{t}")?;
    }
    writeln!(w)?;
    for (r, k) in mesh.ks.iter().enumerate() {
        write!(w, "{k}")?;
        for z in &mesh.z[r] {
            write!(w, ",{z:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_moments(w: &mut impl Write, moments: &[Moments]) -> Result<()> {
    writeln!(w, "{MOMENTS_HEADER}")?;
    for m in moments {
        writeln!(w, "{},{:e},{:e},{:e}", m.t, m.mean, m.variance, m.cv)?;
    }
    Ok(())
}

/// `k,q` rows followed by a `leaked,<mass>` record.
pub fn write_oracle(w: &mut impl Write, dist: &TruncatedDistribution) -> Result<()> {
    writeln!(w, "{ORACLE_HEADER}")?;
    for (k, q) in dist.q.iter().enumerate() {
        writeln!(w, "{k},{q:e}")?;
    }
    writeln!(w, "leaked,{:e}", dist.leaked)?;
    Ok(())
}

pub fn write_paths(w: &mut impl Write, master_seed: u64, paths: &[EventLog]) -> Result<()> {
    seed_line(w, master_seed)?;
    writeln!(w, "{PATHS_HEADER}")?;
    for (id, log) in paths.iter().enumerate() {
        for e in &log.events {
            writeln!(w, "{id},{},{},{}", e.time, e.kind.as_str(), e.population_after)?;
        }
    }
    Ok(())
}

/// Per-snapshot histograms, one row per observed value.
pub fn write_snapshots(w: &mut impl Write, summary: &EmpiricalSummary) -> Result<()> {
    seed_line(w, summary.master_seed)?;
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    let n = summary.replications as f64;
    for (t, h) in summary.snapshot_times.iter().zip(&summary.empirical_pmf) {
        for (k, c) in h.iter() {
            writeln!(w, "{t},{k},{c},{:e}", c as f64 / n)?;
        }
    }
    Ok(())
}

/// Daily statistics; `series` is `infections` or `recoveries`.
pub fn write_daily_stats(w: &mut impl Write, summary: &EmpiricalSummary) -> Result<()> {
    seed_line(w, summary.master_seed)?;
    writeln!(w, "{DAILY_STATS_HEADER}")?;
    for (name, stats) in [("infections", &summary.daily_new_infections), ("recoveries", &summary.daily_new_recoveries)] {
        for d in stats {
            writeln!(w, "{},{name},{:e},{:e},{},{},{}", d.day, d.mean, d.sd, d.q05, d.q50, d.q95)?;
        }
    }
    Ok(())
}
