//! Peak-memory measurement for benchmarks.
//!
//! Binaries that install [`PeakAllocator`] as their global allocator get
//! exact heap high-water marks; otherwise the probe falls back to the
//! process resident-set high-water mark from `/proc/self/status`.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static INSTALLED: AtomicBool = AtomicBool::new(false);

/// System allocator wrapper that tracks live and peak heap bytes.
pub struct PeakAllocator;

fn grow(bytes: usize) {
    INSTALLED.store(true, Ordering::Relaxed);
    let now = CURRENT.fetch_add(bytes, Ordering::Relaxed) + bytes;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

fn shrink(bytes: usize) {
    CURRENT.fetch_sub(bytes, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for PeakAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        shrink(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            if new_size > layout.size() {
                grow(new_size - layout.size());
            } else {
                shrink(layout.size() - new_size);
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemorySource {
    AllocatorHighWater,
    ResidentSetHighWater,
    Unavailable,
}

impl MemorySource {
    pub fn label(self) -> &'static str {
        match self {
            MemorySource::AllocatorHighWater => "allocator",
            MemorySource::ResidentSetHighWater => "rss",
            MemorySource::Unavailable => "unavailable",
        }
    }
}

pub fn allocator_installed() -> bool {
    INSTALLED.load(Ordering::Relaxed)
}

fn resident_high_water() -> Option<usize> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: usize = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Measures the additional peak memory used between `start` and `finish`.
pub struct MemoryProbe {
    baseline: usize,
    source: MemorySource,
}

impl MemoryProbe {
    pub fn start() -> Self {
        if allocator_installed() {
            let now = CURRENT.load(Ordering::Relaxed);
            PEAK.store(now, Ordering::Relaxed);
            MemoryProbe {
                baseline: now,
                source: MemorySource::AllocatorHighWater,
            }
        } else if let Some(rss) = resident_high_water() {
            MemoryProbe {
                baseline: rss,
                source: MemorySource::ResidentSetHighWater,
            }
        } else {
            MemoryProbe {
                baseline: 0,
                source: MemorySource::Unavailable,
            }
        }
    }

    /// Peak bytes above the starting level. The resident-set fallback is a
    /// process-lifetime high-water mark, so it can under-report.
    pub fn finish(&self) -> (usize, MemorySource) {
        let peak = match self.source {
            MemorySource::AllocatorHighWater => PEAK.load(Ordering::Relaxed),
            MemorySource::ResidentSetHighWater => resident_high_water().unwrap_or(self.baseline),
            MemorySource::Unavailable => 0,
        };
        (peak.saturating_sub(self.baseline), self.source)
    }
}
