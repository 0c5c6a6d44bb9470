//! Fixtures shared by the benchmarks.

use mvsync_core::bt656::{encode_frame, FrameGeometry, RawFrame};
use mvsync_core::pipeline::{Scenario, ScenarioConfig};

/// `frames` consecutive encoded frames of a gradient picture.
pub fn encoded_stream(geometry: &FrameGeometry, frames: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(frames as usize * geometry.bytes_per_frame() as usize);
    for i in 0..frames {
        out.extend(encode_frame(&picture(geometry, i), geometry).expect("valid geometry"));
    }
    out
}

pub fn picture(geometry: &FrameGeometry, index: u32) -> RawFrame {
    RawFrame::from_fn(geometry, |r, c| (1 + (r * 3 + c + index) % 250) as u8)
}

/// `channels` drifting sources, the second delayed by 40% of a frame.
pub fn drifting_scenario(geometry: &str, channels: usize, frames: u64) -> Scenario {
    let g = FrameGeometry::by_name(geometry).expect("known geometry");
    let delay = g.bytes_per_frame() * 400 / 27;
    let sources: Vec<String> = (0..channels)
        .map(|i| {
            let ppm = 100.0 - 200.0 * i as f64 / channels.max(2) as f64;
            let delay = if i == 1 { delay } else { 0 };
            format!(
                r#"{{"clock":{{"startup_delay_ns":{delay},"drift":{{"kind":"sinusoidal","ppm":{ppm},"period_s":0.05}}}}}}"#
            )
        })
        .collect();
    let json = format!(
        r#"{{"schema":1,"geometry":"{geometry}","frame_count":{frames},"output":{{"trace_every":0}},"sources":[{}]}}"#,
        sources.join(",")
    );
    ScenarioConfig::from_json(&json)
        .and_then(|c| c.resolve(None))
        .expect("fixture scenario is valid")
}
