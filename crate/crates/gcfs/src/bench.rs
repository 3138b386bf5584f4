//! Real-time factor measurement.

use std::time::Instant;

use gcfs_core::engine::{gather_block, FrameProcessor, RtfReport, HOP};
use gcfs_core::scene::white_noise;
use gcfs_core::{mic, MultichannelAudio, SAMPLE_RATE};

/// Four channels of independent seeded white noise at -20 dBFS RMS.
pub fn bench_input(seconds: f64, seed: u64) -> MultichannelAudio {
    let n = (seconds * SAMPLE_RATE as f64) as usize;
    let channels = (0..mic::COUNT as u64)
        .map(|m| white_noise(n, seed.wrapping_add(m)).into_iter().map(|v| 0.1 * v).collect())
        .collect();
    MultichannelAudio::new(SAMPLE_RATE, channels).expect("equal lengths")
}

/// Streams `input` through `proc` one hop at a time, timing every block.
pub fn measure_rtf<P: FrameProcessor + ?Sized>(proc: &mut P, input: &MultichannelAudio) -> RtfReport {
    let mut inbuf = vec![0.0; proc.n_in_channels() * HOP];
    let mut outbuf = vec![0.0; proc.n_out_channels() * HOP];
    let mut frame_us = Vec::with_capacity(input.len() / HOP + 1);
    let total = Instant::now();
    let mut start = 0;
    while start < input.len() {
        gather_block(input, start, HOP, &mut inbuf);
        let t = Instant::now();
        proc.process_block(&inbuf, &mut outbuf);
        frame_us.push(t.elapsed().as_secs_f64() * 1e6);
        std::hint::black_box(&outbuf);
        start += HOP;
    }
    let wall = total.elapsed().as_secs_f64();
    RtfReport::from_timings(frame_us.len() as f64 * HOP as f64 / SAMPLE_RATE as f64, wall, &frame_us)
}

/// Description of the host the benchmark ran on.
pub fn machine_info() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("model name")).and_then(|l| l.split(':').nth(1)).map(|m| m.trim().to_string()))
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{} {} ({cpu}, {threads} hardware threads)", std::env::consts::OS, std::env::consts::ARCH)
}

pub fn format_report(name: &str, r: &RtfReport) -> String {
    format!(
        "algorithm: {name}\naudio: {:.2} s in {} frames\nwall: {:.3} s\nrtf: {:.4}\nper-frame us: p50 {:.1}, p95 {:.1}, p99 {:.1}, max {:.1}\ndeadline ({:.0} us) misses: {}\nmachine: {}\n",
        r.audio_seconds,
        r.frames,
        r.wall_seconds,
        r.rtf,
        r.per_frame_p50_us,
        r.per_frame_p95_us,
        r.per_frame_p99_us,
        r.per_frame_max_us,
        RtfReport::DEADLINE_US,
        r.deadline_misses,
        machine_info(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcfs_core::engine::Bypass;

    #[test]
    fn bypass_is_fast_and_counted() {
        let x = bench_input(1.0, 1);
        let r = measure_rtf(&mut Bypass::new(), &x);
        assert_eq!(r.frames, 500);
        assert!((r.audio_seconds - 1.0).abs() < 1e-12);
        assert!(r.rtf < 0.5);
        assert!(format_report("bypass", &r).contains("rtf:"));
    }
}
