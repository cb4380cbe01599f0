use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::morphology::{brute_force_dilate, brute_force_dilate_at, dilate, SeShape, StructuringElement};
use crate::raster::BinaryMask;

use super::{out_err, CliError, RunConfig};

pub const BENCH_RADII: [usize; 4] = [1, 2, 3, 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            width: 1920,
            height: 1080,
            iterations: 5,
        }
    }
}

/// Blobby mask: a few hundred random rectangles over light speckle.
pub fn synthetic_mask(width: usize, height: usize, seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = BinaryMask::empty(width, height).expect("bench dims are positive");
    let blocks = (width * height / 8000).max(1);
    for _ in 0..blocks {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (bw, bh) = (rng.random_range(1..=40), rng.random_range(1..=40));
        for y in y0..(y0 + bh).min(height) {
            for x in x0..(x0 + bw).min(width) {
                m.set(x, y, true);
            }
        }
    }
    for _ in 0..width * height / 200 {
        let (x, y) = (rng.random_range(0..width), rng.random_range(0..height));
        m.set(x, y, true);
    }
    m
}

/// Compares `fast` with the literal definition at `samples` random pixels.
pub fn spot_check(
    mask: &BinaryMask,
    fast: &BinaryMask,
    se: &StructuringElement,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), (usize, usize)> {
    let offsets = se.offsets();
    for _ in 0..samples {
        let (x, y) = (rng.random_range(0..mask.width()), rng.random_range(0..mask.height()));
        if fast.get(x, y) != brute_force_dilate_at(mask, &offsets, x, y) {
            return Err((x, y));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub shape: SeShape,
    pub radius: usize,
    pub megapixels_per_sec: f64,
    /// Reference dilation throughput on a 256x256 crop.
    pub oracle_megapixels_per_sec: f64,
}

fn mpps(pixels: usize, runs: usize, elapsed: Duration) -> f64 {
    (pixels * runs) as f64 / 1e6 / elapsed.as_secs_f64().max(1e-9)
}

pub fn run_bench(opts: &BenchOptions, seed: u64) -> Result<Vec<BenchRow>, String> {
    let mask = synthetic_mask(opts.width, opts.height, seed);
    let crop_side = 256.min(opts.width).min(opts.height);
    let crop = synthetic_mask(crop_side, crop_side, seed ^ 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let iterations = opts.iterations.max(1);
    let mut rows = Vec::new();
    for shape in [SeShape::Square, SeShape::Disk] {
        for radius in BENCH_RADII {
            let se = StructuringElement::new(shape, radius);
            let fast = dilate(&mask, &se);
            spot_check(&mask, &fast, &se, 20_000, &mut rng).map_err(|(x, y)| {
                format!("dilate disagrees with the reference for {se} at ({x}, {y})")
            })?;

            let start = Instant::now();
            for _ in 0..iterations {
                std::hint::black_box(dilate(std::hint::black_box(&mask), &se));
            }
            let fast_rate = mpps(opts.width * opts.height, iterations, start.elapsed());

            let start = Instant::now();
            std::hint::black_box(brute_force_dilate(&crop, &se));
            let oracle_rate = mpps(crop_side * crop_side, 1, start.elapsed());

            rows.push(BenchRow {
                shape,
                radius,
                megapixels_per_sec: fast_rate,
                oracle_megapixels_per_sec: oracle_rate,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &RunConfig, opts: &BenchOptions, out: &mut dyn Write) -> Result<(), CliError> {
    if opts.width == 0 || opts.height == 0 {
        return Err(CliError::bad_args("bench dimensions must be positive"));
    }
    let rows = run_bench(opts, cfg.seed).map_err(CliError::internal)?;
    writeln!(
        out,
        "dilation on a {}x{} mask, {} iterations",
        opts.width, opts.height, opts.iterations
    )
    .map_err(out_err)?;
    writeln!(out, "{:<7} {:>6} {:>12} {:>12}", "shape", "radius", "MP/s", "oracle MP/s").map_err(out_err)?;
    for r in rows {
        writeln!(
            out,
            "{:<7} {:>6} {:>12.1} {:>12.2}",
            r.shape.to_string(),
            r.radius,
            r.megapixels_per_sec,
            r.oracle_megapixels_per_sec
        )
        .map_err(out_err)?;
    }
    Ok(())
}
