//! Terminal progress bar drawn from a dedicated thread.
//!
//! Workers only push fractions into a channel; the renderer thread owns
//! stderr and redraws at most every 100 ms. Selection runs draw one
//! combined bar over all four families.

use std::io::{IsTerminal, Write};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

const INTERVAL: Duration = Duration::from_millis(100);
const WIDTH: usize = 40;

/// Decides which updates are drawn: never more often than `INTERVAL`, never
/// backwards, and always the final 100%.
#[derive(Debug)]
pub struct Throttle {
    last_draw: Option<Instant>,
    shown: f64,
}

impl Throttle {
    pub fn new() -> Self {
        Self {
            last_draw: None,
            shown: 0.0,
        }
    }

    pub fn offer(&mut self, now: Instant, fraction: f64) -> Option<f64> {
        let fraction = fraction.clamp(0.0, 1.0);
        if fraction <= self.shown && self.last_draw.is_some() {
            return None;
        }
        let due = self
            .last_draw
            .is_none_or(|t| now.duration_since(t) >= INTERVAL);
        if due || fraction >= 1.0 {
            self.last_draw = Some(now);
            self.shown = fraction;
            Some(fraction)
        } else {
            None
        }
    }
}

pub fn bar(label: &str, fraction: f64) -> String {
    let filled = (fraction * WIDTH as f64).round() as usize;
    format!(
        "\r{label} [{}{}] {:>3.0}%",
        "#".repeat(filled),
        "-".repeat(WIDTH - filled),
        fraction * 100.0
    )
}

pub struct Renderer {
    tx: Option<Sender<f64>>,
    handle: Option<JoinHandle<()>>,
}

impl Renderer {
    /// A renderer that draws only when stderr is a terminal and `quiet` is
    /// off; otherwise every update is dropped.
    pub fn start(label: &str, quiet: bool) -> Self {
        if quiet || !std::io::stderr().is_terminal() {
            return Self {
                tx: None,
                handle: None,
            };
        }
        let (tx, rx) = channel::<f64>();
        let label = label.to_string();
        let handle = std::thread::spawn(move || {
            let mut throttle = Throttle::new();
            let mut drew = false;
            let mut err = std::io::stderr();
            for fraction in rx {
                if let Some(f) = throttle.offer(Instant::now(), fraction) {
                    let _ = write!(err, "{}", bar(&label, f));
                    let _ = err.flush();
                    drew = true;
                }
            }
            if drew {
                let _ = writeln!(err);
            }
        });
        Self {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    pub fn sender(&self) -> Option<Sender<f64>> {
        self.tx.clone()
    }

    pub fn finish(mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
