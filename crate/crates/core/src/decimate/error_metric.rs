use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DecimateError;
use crate::geometry::{add, scale, sub, triangle_area, TriangleBvh, Vec3};
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// One-sided surface deviation from an original to a simplified mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub max: f64,
    pub samples: usize,
}

/// Area-uniform sample points on `mesh`, drawn from a ChaCha8 stream.
pub(crate) fn sample_surface<T: Real>(mesh: &TriMesh<T>, count: usize, seed: u64) -> Vec<Vec3<T>> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0f64;
    for i in 0..mesh.faces.len() {
        total += triangle_area(&mesh.triangle(i)).as_f64();
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pick = rng.random::<f64>() * total;
            let face = cumulative.partition_point(|&c| c <= pick).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let r1 = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            // p = (1 - r1) a + r1 (1 - r2) b + r1 r2 c
            let u = T::lit(r1 * (1.0 - r2));
            let w = T::lit(r1 * r2);
            add(&a, &add(&scale(&sub(&b, &a), u), &scale(&sub(&c, &a), w)))
        })
        .collect()
}

/// Samples `sample_count` points uniformly by area on `original` and measures
/// each one's distance to the nearest triangle of `simplified`.
///
/// Distances are computed in parallel and reduced in sample order, so the
/// result is independent of the thread count.
pub fn geometric_error<T: Real>(
    original: &TriMesh<T>,
    simplified: &TriMesh<T>,
    sample_count: usize,
    seed: u64,
) -> Result<ErrorSummary, DecimateError<T>> {
    if original.faces.is_empty() || simplified.faces.is_empty() || sample_count == 0 {
        return Err(DecimateError::EmptyInput);
    }
    let points = sample_surface(original, sample_count, seed);
    let bvh = TriangleBvh::new((0..simplified.faces.len()).map(|i| simplified.triangle(i)).collect());
    let distances: Vec<f64> = points.par_iter().map(|p| bvh.distance(p).expect("non-empty").as_f64()).collect();
    let sum: f64 = distances.iter().sum();
    let max = distances.iter().copied().fold(0.0, f64::max);
    Ok(ErrorSummary {
        mean: sum / sample_count as f64,
        max,
        samples: sample_count,
    })
}
