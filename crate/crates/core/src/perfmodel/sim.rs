use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::Result;

use super::{sa_matmul_cycles, JobShape, JobTiming, SimConfig, SimReport, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    TransferDone,
    ComputeDone,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    job: usize,
}

// Min-heap on (time, job).
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.job.cmp(&self.job))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

#[derive(Debug, Clone, Copy)]
struct Request {
    time: f64,
    accelerator: usize,
    job: usize,
}

/// Single-threaded discrete-event run of `workload` on `config`.
///
/// Each accelerator issues its jobs in order: a job requests the bus when
/// its accelerator finishes the previous job (time 0 for the first). The
/// bus grants pending requests in (request time, accelerator id) order.
/// All events sharing a timestamp are applied before the next grant.
pub fn simulate(config: &SimConfig, workload: &Workload) -> Result<SimReport> {
    config.validate()?;
    workload.validate(config)?;
    let jobs = &workload.jobs;

    let mut per_accel: Vec<VecDeque<usize>> = vec![VecDeque::new(); config.num_accelerators];
    for (idx, job) in jobs.iter().enumerate() {
        per_accel[job.accelerator].push_back(idx);
    }

    let mut timings: Vec<JobTiming> = jobs
        .iter()
        .map(|j| JobTiming {
            accelerator: j.accelerator,
            shape: j.shape,
            bytes: j.bytes(config.bytes_per_element),
            request_cycle: 0.0,
            grant_cycle: 0.0,
            queue_at_grant: 0,
            transfer_done_cycle: 0.0,
            compute_done_cycle: 0.0,
        })
        .collect();

    let mut pending: Vec<Request> = Vec::new();
    let mut request_next = |accel: usize, now: f64, pending: &mut Vec<Request>, timings: &mut [JobTiming]| {
        if let Some(job) = per_accel[accel].pop_front() {
            timings[job].request_cycle = now;
            pending.push(Request { time: now, accelerator: accel, job });
        }
    };

    for accel in 0..config.num_accelerators {
        request_next(accel, 0.0, &mut pending, &mut timings);
    }

    let mut events: BinaryHeap<Event> = BinaryHeap::new();
    let mut bus_idle = true;
    let mut now = 0.0f64;
    let mut bus_busy = 0.0f64;
    let mut accel_busy = vec![0u64; config.num_accelerators];

    loop {
        if bus_idle && !pending.is_empty() {
            pending.sort_by(|a, b| {
                a.time.total_cmp(&b.time).then(a.accelerator.cmp(&b.accelerator)).then(a.job.cmp(&b.job))
            });
            let req = pending.remove(0);
            let waiting = pending.len();
            let t = &mut timings[req.job];
            let transfer = t.bytes as f64 / config.bus_bandwidth_bytes_per_cycle
                * (1.0 + config.contention_overhead * waiting as f64);
            let service = config.dma_fixed_overhead_cycles + transfer;
            t.grant_cycle = now;
            t.queue_at_grant = waiting;
            bus_busy += service;
            bus_idle = false;
            events.push(Event { time: now + service, kind: Kind::TransferDone, job: req.job });
        }

        let Some(first) = events.pop() else { break };
        now = first.time;
        let mut batch = vec![first];
        while events.peek().is_some_and(|e| e.time == now) {
            batch.push(events.pop().unwrap());
        }
        batch.sort_by_key(|e| (jobs[e.job].accelerator, e.job));

        for ev in batch {
            let job = &jobs[ev.job];
            match ev.kind {
                Kind::TransferDone => {
                    bus_idle = true;
                    timings[ev.job].transfer_done_cycle = now;
                    let JobShape { m, k, n } = job.shape;
                    let cycles = sa_matmul_cycles(m, k, n, config.sa_dim);
                    accel_busy[job.accelerator] += cycles;
                    events.push(Event { time: now + cycles as f64, kind: Kind::ComputeDone, job: ev.job });
                }
                Kind::ComputeDone => {
                    timings[ev.job].compute_done_cycle = now;
                    request_next(job.accelerator, now, &mut pending, &mut timings);
                }
            }
        }
    }

    let makespan_cycles = timings.iter().map(|t| t.compute_done_cycle).fold(0.0, f64::max);
    let makespan_seconds = makespan_cycles / config.accel_clock_hz;
    let active = accel_busy.iter().filter(|&&c| c > 0).count();
    let compute_energy_pj = jobs.iter().map(|j| j.macs() as f64 * config.e_mac_pj).fold(0.0, |a, b| a + b);
    let transfer_energy_pj = timings
        .iter()
        .map(|t| t.bytes as f64 * config.e_dram_byte_pj)
        .fold(0.0, |a, b| a + b);
    // mW * s = mJ = 1e9 pJ
    let static_energy_pj = config.p_static_mw * makespan_seconds * active as f64 * 1e9;

    Ok(SimReport {
        accel_busy_cycles: accel_busy,
        bus_busy_cycles: bus_busy,
        makespan_cycles,
        makespan_seconds,
        compute_energy_pj,
        transfer_energy_pj,
        static_energy_pj,
        total_energy_pj: compute_energy_pj + transfer_energy_pj + static_energy_pj,
        speedup: None,
        energy_ratio: None,
        jobs: timings,
    })
}
