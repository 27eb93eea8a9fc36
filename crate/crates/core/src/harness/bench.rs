use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use super::generate::{generate_random_market, GenParams};
use crate::equilibrium::{solve_market, verify_equilibrium, SolveError, SolveOptions, SolveOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceOutcome {
    /// Equilibrium found and verified.
    Equilibrium,
    /// Equilibrium found but rejected by the verifier.
    Unverified,
    SecondaryRay,
    IterationLimit,
    Failure(String),
}

impl fmt::Display for InstanceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceOutcome::Equilibrium => f.write_str("equilibrium"),
            InstanceOutcome::Unverified => f.write_str("unverified"),
            InstanceOutcome::SecondaryRay => f.write_str("secondary-ray"),
            InstanceOutcome::IterationLimit => f.write_str("iteration-limit"),
            InstanceOutcome::Failure(why) => write!(f, "failure: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    pub instance: usize,
    pub seed: u64,
    pub total_segments: usize,
    pub iterations: u64,
    pub outcome: InstanceOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub instances: usize,
    pub min_iterations: u64,
    pub avg_iterations: f64,
    pub max_iterations: u64,
    pub secondary_ray_count: usize,
    /// Instances that did not end in a verified equilibrium.
    pub failures: usize,
    pub total_segments: usize,
    pub records: Vec<InstanceRecord>,
}

impl BenchStats {
    fn from_records(total_segments: usize, records: Vec<InstanceRecord>) -> Self {
        let its: Vec<u64> = records.iter().map(|r| r.iterations).collect();
        let sum: u64 = its.iter().sum();
        BenchStats {
            instances: records.len(),
            min_iterations: its.iter().copied().min().unwrap_or(0),
            avg_iterations: if its.is_empty() { 0.0 } else { sum as f64 / its.len() as f64 },
            max_iterations: its.iter().copied().max().unwrap_or(0),
            secondary_ray_count: records.iter().filter(|r| r.outcome == InstanceOutcome::SecondaryRay).count(),
            failures: records.iter().filter(|r| r.outcome != InstanceOutcome::Equilibrium).count(),
            total_segments,
            records,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instances": self.instances,
            "minIterations": self.min_iterations,
            "avgIterations": self.avg_iterations,
            "maxIterations": self.max_iterations,
            "secondaryRayCount": self.secondary_ray_count,
            "failures": self.failures,
            "totalSegments": self.total_segments,
        })
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "instance,totalSegments,iterations,outcome")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.instance, r.total_segments, r.iterations, r.outcome)?;
        }
        Ok(())
    }
}

/// Generates, solves and verifies one instance.
pub fn run_instance(params: &GenParams, instance: usize) -> InstanceRecord {
    let p = GenParams { seed: params.seed.wrapping_add(instance as u64), ..*params };
    let mut record = InstanceRecord {
        instance,
        seed: p.seed,
        total_segments: p.total_segments(),
        iterations: 0,
        outcome: InstanceOutcome::Failure(String::new()),
    };
    let m = match generate_random_market(&p) {
        Ok(m) => m,
        Err(e) => {
            record.outcome = InstanceOutcome::Failure(e.to_string());
            return record;
        }
    };
    record.outcome = match solve_market(&m, &SolveOptions::default()) {
        Ok(report) => {
            record.iterations = report.iterations;
            match report.outcome {
                SolveOutcome::Equilibrium(e) if verify_equilibrium(&m, &e).passed() => InstanceOutcome::Equilibrium,
                SolveOutcome::Equilibrium(_) => InstanceOutcome::Unverified,
                SolveOutcome::SecondaryRay(_) => InstanceOutcome::SecondaryRay,
                SolveOutcome::IterationLimit => InstanceOutcome::IterationLimit,
                SolveOutcome::Failure(f) => InstanceOutcome::Failure(f.to_string()),
            }
        }
        Err(SolveError::RayDespiteConditions(_)) => InstanceOutcome::SecondaryRay,
        Err(e) => InstanceOutcome::Failure(e.to_string()),
    };
    record
}

/// Solves `count` instances seeded `seed, seed + 1, ...` on a pool of worker
/// threads, one solver per instance.
pub fn run_benchmark(params: &GenParams, count: usize) -> BenchStats {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let next = AtomicUsize::new(0);
    let sink = Mutex::new(Vec::with_capacity(count));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= count {
                    break;
                }
                let record = run_instance(params, k);
                sink.lock().expect("no worker panics while holding the lock").push(record);
            });
        }
    });
    let mut records = sink.into_inner().expect("workers finished");
    records.sort_by_key(|r| r.instance);
    BenchStats::from_records(params.total_segments(), records)
}
