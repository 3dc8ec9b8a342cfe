//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export has a plain-Rust twin returning `Result<_, String>` so the
//! logic is testable off-wasm.

use lmfo::objective::{sphere, Bounds, FnObjective, Optimizer};
use lmfo::spiral::{linspace, trace_spiral, SpiralKernel, SpiralKind};
use lmfo::{flame_count, Mfo, MfoConfig, Pso, PsoConfig};
use rand::SeedableRng;
use wasm_bindgen::prelude::*;

/// Interleaved `[x0, y0, x1, y1, ...]` trace of one spiral over `[t_min, t_max]`.
pub fn trace(kind: &str, q: f64, t_min: f64, t_max: f64, samples: usize, seed: u64) -> Result<Vec<f64>, String> {
    let kind: SpiralKind = kind.parse().map_err(|e: lmfo::SpiralError| e.to_string())?;
    let kernel = SpiralKernel::new(kind, q);
    let ts = linspace(t_min, t_max, samples.min(20_000));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let points = trace_spiral(&kernel, &ts, &mut rng).map_err(|e| e.to_string())?;
    Ok(points.into_iter().flat_map(|(x, y)| [x, y]).collect())
}

/// Flame counts for iterations `1..=max_iter`.
pub fn schedule(population: usize, max_iter: usize) -> Result<Vec<u32>, String> {
    if population == 0 || max_iter == 0 || max_iter > 100_000 {
        return Err("population and iterations must be positive (iterations at most 100000)".into());
    }
    Ok((1..=max_iter)
        .map(|l| flame_count(population, l, max_iter) as u32)
        .collect())
}

/// Best-so-far curve of `algorithm` (MFO, LMFO1..LMFO6 or PSO) on the sphere
/// function over `[-100, 100]^dim`.
pub fn sphere_run(
    algorithm: &str,
    q: f64,
    dim: usize,
    population: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if dim == 0 || dim > 200 || population == 0 || population > 500 || iterations == 0 || iterations > 5_000 {
        return Err("dim 1..=200, population 1..=500, iterations 1..=5000".into());
    }
    let bounds = Bounds::uniform(dim, -100.0, 100.0).map_err(|e| e.to_string())?;
    let objective = FnObjective::new(bounds, sphere);
    let name = algorithm.trim().to_ascii_uppercase();
    let record = if name == "PSO" {
        let config = PsoConfig::default().with_budget(population, iterations);
        Pso { config }.optimize(&objective, seed)
    } else {
        let kind = if name == "MFO" {
            SpiralKind::Equiangular
        } else {
            name.parse::<SpiralKind>().map_err(|e| e.to_string())?
        };
        let config = MfoConfig::default()
            .with_kernel(SpiralKernel::new(kind, q))
            .with_budget(population, iterations);
        let mfo = if name == "MFO" { Mfo::classic(config) } else { Mfo::variant(config) };
        mfo.optimize(&objective, seed)
    }
    .map_err(|e| e.to_string())?;
    Ok(record.curve)
}

#[wasm_bindgen(js_name = spiralTrace)]
pub fn spiral_trace(kind: &str, q: f64, t_min: f64, t_max: f64, samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    trace(kind, q, t_min, t_max, samples as usize, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = flameSchedule)]
pub fn flame_schedule(population: u32, max_iter: u32) -> Result<Vec<u32>, JsError> {
    schedule(population as usize, max_iter as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sphereCurve)]
pub fn sphere_curve(
    algorithm: &str,
    q: f64,
    dim: u32,
    population: u32,
    iterations: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    sphere_run(algorithm, q, dim as usize, population as usize, iterations as usize, seed as u64)
        .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_is_interleaved() {
        let xy = trace("Archimedean", 1.0, -1.0, 1.0, 3, 0).unwrap();
        assert_eq!(xy.len(), 6);
        assert_eq!(&xy[2..4], &[0.0, 0.0]);
        assert!(trace("LMFO9", 1.0, 0.0, 1.0, 3, 0).is_err());
    }

    #[test]
    fn schedule_endpoints() {
        let s = schedule(50, 500).unwrap();
        assert_eq!((s[0], s[499]), (50, 1));
        assert!(schedule(0, 10).is_err());
    }

    #[test]
    fn sphere_curves_descend() {
        for alg in ["MFO", "LMFO2", "PSO"] {
            let c = sphere_run(alg, 1.0, 5, 10, 30, 1).unwrap();
            assert_eq!(c.len(), 30);
            assert!(c.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!(sphere_run("GA", 1.0, 5, 10, 30, 1).is_err());
    }
}
